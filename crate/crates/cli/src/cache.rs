//! On-disk cache of constructed generating vectors.
//!
//! Entries are keyed by a SHA-256 digest of `(N, d, α, γ_1..γ_d, mode)` and
//! stored as the generating-vector JSON document.

use std::fs;
use std::path::{Path, PathBuf};

use hybrid_lattice::cbc::{cbc_construct, CbcConfig, CbcMode, GeneratingVectorRecord};
use hybrid_lattice::lattice::LatticeRule;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Serialize)]
struct CacheKey<'a> {
    #[serde(rename = "N")]
    n: u64,
    d: usize,
    alpha: f64,
    gammas: &'a [f64],
    mode: CbcMode,
}

/// Hex digest identifying a construction.
pub fn cache_key(cfg: &CbcConfig) -> String {
    let key = CacheKey {
        n: cfg.n,
        d: cfg.d,
        alpha: cfg.space.alpha(),
        gammas: &cfg.space.weights().gammas()[..cfg.d.min(cfg.space.weights().len())],
        mode: cfg.mode,
    };
    // serializing plain numbers and strings cannot fail
    let bytes = serde_json::to_vec(&key).expect("cache key serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn entry_path(dir: &Path, cfg: &CbcConfig) -> PathBuf {
    dir.join(format!("{}.json", cache_key(cfg)))
}

/// Reads a cached record if present and consistent with `cfg`.
fn lookup(path: &Path, cfg: &CbcConfig) -> Option<GeneratingVectorRecord> {
    let text = fs::read_to_string(path).ok()?;
    let rec: GeneratingVectorRecord = serde_json::from_str(&text).ok()?;
    let consistent = rec.n == cfg.n
        && rec.d == cfg.d
        && rec.z.len() == cfg.d
        && rec.error_trace.len() == cfg.d
        && LatticeRule::new(rec.n, rec.z.clone()).is_ok();
    consistent.then_some(rec)
}

/// Runs the construction, going through the cache when `dir` is given.
pub fn construct(cfg: &CbcConfig, dir: Option<&Path>) -> Result<GeneratingVectorRecord> {
    let Some(dir) = dir else {
        return Ok(cbc_construct(cfg)?.to_record(&cfg.space));
    };
    let path = entry_path(dir, cfg);
    if let Some(rec) = lookup(&path, cfg) {
        return Ok(rec);
    }
    let rec = cbc_construct(cfg)?.to_record(&cfg.space);
    fs::create_dir_all(dir)?;
    // write then rename so concurrent readers never see a partial entry
    let tmp = path.with_extension(format!("json.{}.tmp", std::process::id()));
    fs::write(&tmp, serde_json::to_vec_pretty(&rec)?)?;
    fs::rename(&tmp, &path)?;
    Ok(rec)
}

pub fn rule_of(rec: &GeneratingVectorRecord) -> Result<LatticeRule> {
    Ok(LatticeRule::new(rec.n, rec.z.clone())?)
}
