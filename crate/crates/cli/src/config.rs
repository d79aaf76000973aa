//! Experiment configuration: a JSON document whose fields command-line flags
//! may override.

use std::io::Read;
use std::path::{Path, PathBuf};

use hybrid_lattice::cbc::CbcMode;
use hybrid_lattice::korobov::{DecayConstant, ProductWeights, SpaceParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Weight-decay exponent `c` of the named presets `γ_j = j^{-2cα}`.
pub const PRESETS: [(&str, f64); 2] = [("fast-decay", 1.5), ("slow-decay", 0.75)];

pub const DEFAULT_PRESET: &str = "fast-decay";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsSpec {
    Preset(String),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointCounts {
    One(u64),
    Many(Vec<u64>),
}

impl PointCounts {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            PointCounts::One(n) => vec![*n],
            PointCounts::Many(v) => v.clone(),
        }
    }
}

/// `d` as a number or the word `"advise"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DimChoice {
    Fixed(u64),
    Advise,
}

/// `s` as a number or a multiple of `d` written `"<k>d"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TotalDim {
    Fixed(u64),
    PerD(u64),
}

impl TotalDim {
    pub fn resolve(self, d: u64) -> u64 {
        match self {
            TotalDim::Fixed(s) => s,
            TotalDim::PerD(k) => k * d,
        }
    }

    /// Upper limit passed to the dimension advisors.
    pub fn cap(self) -> u64 {
        match self {
            TotalDim::Fixed(s) => s,
            TotalDim::PerD(_) => u64::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum NumberOrWord {
    Number(u64),
    Word(String),
}

impl DimChoice {
    fn parse(raw: &NumberOrWord) -> Result<Self> {
        match raw {
            NumberOrWord::Number(d) => Ok(DimChoice::Fixed(*d)),
            NumberOrWord::Word(w) if w == "advise" => Ok(DimChoice::Advise),
            NumberOrWord::Word(w) => Err(CliError::config(format!(
                "d must be a non-negative integer or \"advise\", got {w:?}"
            ))),
        }
    }
}

impl TotalDim {
    fn parse(raw: &NumberOrWord) -> Result<Self> {
        match raw {
            NumberOrWord::Number(s) => Ok(TotalDim::Fixed(*s)),
            NumberOrWord::Word(w) => w
                .strip_suffix('d')
                .and_then(|k| k.parse::<u64>().ok())
                .filter(|&k| k >= 2)
                .map(TotalDim::PerD)
                .ok_or_else(|| {
                    CliError::config(format!(
                        "s must be a positive integer or \"<k>d\" with k >= 2, got {w:?}"
                    ))
                }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Concat,
    Truncated,
    Both,
}

impl RuleKind {
    pub fn concat(self) -> bool {
        matches!(self, RuleKind::Concat | RuleKind::Both)
    }

    pub fn truncated(self) -> bool {
        matches!(self, RuleKind::Truncated | RuleKind::Both)
    }
}

/// Reduced CBC cost model settings for `advise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReducedSpec {
    pub b: u64,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub exponents: Option<Vec<u32>>,
}

/// Raw configuration as read from JSON; every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub weights: Option<WeightsSpec>,
    pub lambda_star: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(rename = "N", alias = "n")]
    pub n: Option<PointCounts>,
    s: Option<NumberOrWord>,
    d: Option<NumberOrWord>,
    pub kappa: Option<f64>,
    pub seed: Option<u64>,
    pub replications: Option<u64>,
    pub mode: Option<CbcMode>,
    pub rule: Option<RuleKind>,
    pub reduced: Option<ReducedSpec>,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

/// Field overrides collected from command-line flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub weights: Option<String>,
    pub lambda_star: Option<f64>,
    pub alpha: Option<f64>,
    pub n: Option<Vec<u64>>,
    pub s: Option<String>,
    pub d: Option<String>,
    pub kappa: Option<f64>,
    pub seed: Option<u64>,
    pub replications: Option<u64>,
    pub mode: Option<CbcMode>,
    pub rule: Option<RuleKind>,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Reads a config from `path`, or from stdin when `path` is `-`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = if path == Path::new("-") {
            let mut buf = String::new();
            std::io::stdin().read_to_string(&mut buf)?;
            buf
        } else {
            std::fs::read_to_string(path).map_err(|e| {
                CliError::config(format!("cannot read config {}: {e}", path.display()))
            })?
        };
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("malformed config {}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: Overrides) -> Result<()> {
        if let Some(w) = o.weights {
            self.weights = Some(parse_weights_flag(&w)?);
        }
        if let Some(n) = o.n {
            self.n = Some(PointCounts::Many(n));
        }
        if let Some(s) = o.s {
            self.s = Some(word_or_number(s));
        }
        if let Some(d) = o.d {
            self.d = Some(word_or_number(d));
        }
        macro_rules! take {
            ($($f:ident),*) => { $(if o.$f.is_some() { self.$f = o.$f; })* };
        }
        take!(lambda_star, alpha, kappa, seed, replications, mode, rule, cache_dir, out, format, threads);
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(1.0)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa.unwrap_or(1.0)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn mode(&self) -> CbcMode {
        self.mode.unwrap_or(CbcMode::Auto)
    }

    pub fn rule(&self) -> RuleKind {
        self.rule.unwrap_or(RuleKind::Both)
    }

    pub fn point_counts(&self) -> Result<Vec<u64>> {
        let n = self.n.as_ref().ok_or_else(|| CliError::config("N is required"))?.to_vec();
        if n.is_empty() {
            return Err(CliError::config("N list is empty"));
        }
        Ok(n)
    }

    pub fn single_point_count(&self) -> Result<u64> {
        match self.point_counts()?.as_slice() {
            [n] => Ok(*n),
            many => Err(CliError::config(format!(
                "this command takes a single N, got {} values",
                many.len()
            ))),
        }
    }

    pub fn d(&self) -> Result<DimChoice> {
        match &self.d {
            Some(raw) => DimChoice::parse(raw),
            None => Err(CliError::config("d is required (an integer or \"advise\")")),
        }
    }

    pub fn d_or(&self, default: DimChoice) -> Result<DimChoice> {
        match &self.d {
            Some(raw) => DimChoice::parse(raw),
            None => Ok(default),
        }
    }

    pub fn s(&self) -> Result<Option<TotalDim>> {
        self.s.as_ref().map(TotalDim::parse).transpose()
    }

    pub fn weights_spec(&self) -> WeightsSpec {
        self.weights
            .clone()
            .unwrap_or_else(|| WeightsSpec::Preset(DEFAULT_PRESET.to_string()))
    }

    /// Weight sequence with at least `len` entries.
    pub fn weights(&self, len: usize) -> Result<ProductWeights> {
        let alpha = self.alpha();
        match self.weights_spec() {
            WeightsSpec::Preset(name) => {
                let c = preset_c(&name)?;
                let preset = ProductWeights::power_law(c, alpha, len.max(1))?;
                match self.lambda_star {
                    None => Ok(preset),
                    Some(ls) => Ok(ProductWeights::new(
                        preset.gammas().to_vec(),
                        ls,
                        DecayConstant::Auto,
                    )?),
                }
            }
            WeightsSpec::List(gammas) => {
                if gammas.len() < len {
                    return Err(CliError::config(format!(
                        "weight list has {} entries but {len} are needed",
                        gammas.len()
                    )));
                }
                let ls = self.lambda_star.ok_or_else(|| {
                    CliError::config("lambda_star is required with an explicit weight list")
                })?;
                Ok(ProductWeights::new(gammas, ls, DecayConstant::Auto)?)
            }
        }
    }

    /// `λ*` of the configured weights.
    pub fn lambda_star(&self) -> Result<f64> {
        let len = match &self.weights {
            Some(WeightsSpec::List(g)) => g.len(),
            _ => 1,
        };
        Ok(self.weights(len)?.lambda_star())
    }

    pub fn space(&self, s: usize) -> Result<SpaceParams> {
        Ok(SpaceParams::new(s, self.alpha(), self.weights(s)?)?)
    }
}

pub fn preset_c(name: &str) -> Result<f64> {
    PRESETS
        .iter()
        .find(|(p, _)| *p == name)
        .map(|&(_, c)| c)
        .ok_or_else(|| {
            CliError::config(format!(
                "unknown weight preset {name:?} (expected \"fast-decay\" or \"slow-decay\")"
            ))
        })
}

fn word_or_number(raw: String) -> NumberOrWord {
    match raw.parse::<u64>() {
        Ok(v) => NumberOrWord::Number(v),
        Err(_) => NumberOrWord::Word(raw),
    }
}

/// `--weights` takes a preset name or a comma-separated list of reals.
fn parse_weights_flag(raw: &str) -> Result<WeightsSpec> {
    if PRESETS.iter().any(|(p, _)| *p == raw) {
        return Ok(WeightsSpec::Preset(raw.to_string()));
    }
    raw.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(WeightsSpec::List)
        .map_err(|_| {
            CliError::config(format!("--weights {raw:?} is neither a preset nor a list of reals"))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> ExperimentConfig {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn parses_mixed_field_forms() {
        let cfg = parse(r#"{"N": [31, 61], "d": "advise", "s": "4d", "weights": "slow-decay"}"#);
        assert_eq!(cfg.point_counts().unwrap(), vec![31, 61]);
        assert_eq!(cfg.d().unwrap(), DimChoice::Advise);
        assert_eq!(cfg.s().unwrap(), Some(TotalDim::PerD(4)));
        let cfg = parse(r#"{"N": 127, "d": 6, "s": 12}"#);
        assert_eq!(cfg.single_point_count().unwrap(), 127);
        assert_eq!(cfg.d().unwrap(), DimChoice::Fixed(6));
        assert_eq!(cfg.s().unwrap(), Some(TotalDim::Fixed(12)));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_words() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"dims": 3}"#).is_err());
        assert!(parse(r#"{"d": "many"}"#).d().is_err());
        assert!(parse(r#"{"s": "1d"}"#).s().is_err());
        assert!(parse(r#"{"weights": "medium"}"#).weights(3).is_err());
    }

    #[test]
    fn flags_override_config() {
        let mut cfg = parse(r#"{"N": 31, "alpha": 2.0, "weights": "slow-decay"}"#);
        cfg.apply(Overrides {
            alpha: Some(1.0),
            n: Some(vec![61]),
            weights: Some("1,0.5,0.25".into()),
            d: Some("advise".into()),
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.alpha(), 1.0);
        assert_eq!(cfg.single_point_count().unwrap(), 61);
        assert_eq!(cfg.weights_spec(), WeightsSpec::List(vec![1.0, 0.5, 0.25]));
        assert_eq!(cfg.d().unwrap(), DimChoice::Advise);
    }

    #[test]
    fn presets_follow_power_law() {
        let cfg = parse(r#"{"weights": "fast-decay", "alpha": 1.0}"#);
        let w = cfg.weights(4).unwrap();
        for (j, g) in w.gammas().iter().enumerate() {
            let expected = ((j + 1) as f64).powi(-3);
            assert!((g - expected).abs() <= 1e-15 * expected);
        }
        assert!((w.lambda_star() - (1.0 / 3.0 + 0.01)).abs() < 1e-15);
        let slow = parse(r#"{"weights": "slow-decay", "alpha": 2.0}"#).weights(2).unwrap();
        assert!((slow.gammas()[1] - 0.125).abs() < 1e-16);
    }

    #[test]
    fn explicit_list_needs_lambda_star_and_length() {
        let cfg = parse(r#"{"weights": [1.0, 0.25]}"#);
        assert!(matches!(cfg.weights(2), Err(CliError::Config(_))));
        let cfg = parse(r#"{"weights": [1.0, 0.25], "lambda_star": 0.6}"#);
        assert!(cfg.weights(2).is_ok());
        assert!(matches!(cfg.weights(3), Err(CliError::Config(_))));
    }
}
