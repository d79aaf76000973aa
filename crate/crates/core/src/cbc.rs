//! Component-by-component construction of rank-1 lattice generating vectors.
//!
//! The search criterion for coordinate `j` is the squared worst-case error of
//! the `j`-dimensional prefix rule,
//!
//! ```text
//! e²_j(z) = -1 + (1/N) Σ_i Π_{k<j} [1 + γ_k ω({i z_k/N})] · [1 + γ_j ω({i z/N})],
//! ```
//!
//! kept as running products over the point index `i`. The naive sweep costs
//! `O(N)` per candidate. For prime `N` the fast sweep reorders the nonzero
//! residues by powers of a primitive root, which turns the sweep over all
//! candidates into one cyclic convolution of length `N - 1`.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::korobov::{omega_table, SpaceParams};
use crate::lattice::LatticeRule;

/// Candidates whose criterion lies within this fraction of the criterion's
/// magnitude scale from the minimum count as tied; the smallest such `z` wins.
pub const TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CbcMode {
    Naive,
    Fast,
    /// Fast when `N` is prime, naive otherwise.
    Auto,
}

#[derive(Debug, Clone)]
pub struct CbcConfig {
    pub n: u64,
    pub d: usize,
    pub space: SpaceParams,
    pub mode: CbcMode,
}

impl CbcConfig {
    pub fn new(n: u64, d: usize, space: SpaceParams, mode: CbcMode) -> Self {
        Self { n, d, space, mode }
    }
}

/// A constructed generating vector together with the search trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CbcResult {
    pub rule: LatticeRule,
    /// `e²` of the prefix rule after each coordinate.
    pub error_trace: Vec<f64>,
    /// The sweep actually used (never `Auto`).
    pub mode: CbcMode,
    /// Set when the requested mode could not be honoured.
    pub warning: Option<String>,
}

/// JSON document for caching constructed vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct GeneratingVectorRecord {
    #[serde(rename = "N")]
    pub n: u64,
    pub d: usize,
    pub alpha: f64,
    pub gammas: Vec<f64>,
    pub z: Vec<u64>,
    pub error_trace: Vec<f64>,
    pub mode: CbcMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl CbcResult {
    pub fn to_record(&self, space: &SpaceParams) -> GeneratingVectorRecord {
        GeneratingVectorRecord {
            n: self.rule.n(),
            d: self.rule.d(),
            alpha: space.alpha(),
            gammas: space.weights().gammas()[..self.rule.d()].to_vec(),
            z: self.rule.z().to_vec(),
            error_trace: self.error_trace.clone(),
            mode: self.mode,
            warning: self.warning.clone(),
        }
    }
}

pub fn cbc_construct(cfg: &CbcConfig) -> Result<CbcResult> {
    let alpha = cfg.space.require_alpha_int("CBC construction")?;
    if cfg.n < 2 {
        return Err(Error::invalid(format!("CBC needs N >= 2, got {}", cfg.n)));
    }
    if cfg.d == 0 {
        return Err(Error::invalid("CBC needs d >= 1"));
    }
    if cfg.d > cfg.space.s() {
        return Err(Error::invalid(format!(
            "d = {} exceeds the space dimension s = {}",
            cfg.d,
            cfg.space.s()
        )));
    }
    let n = usize::try_from(cfg.n).map_err(|_| Error::invalid("N does not fit in memory"))?;
    let prime = is_prime(cfg.n);
    let (mode, warning) = match cfg.mode {
        CbcMode::Naive => (CbcMode::Naive, None),
        CbcMode::Fast if prime => (CbcMode::Fast, None),
        CbcMode::Fast => (
            CbcMode::Naive,
            Some(format!("fast CBC needs prime N; N = {} served by the naive sweep", cfg.n)),
        ),
        CbcMode::Auto if prime => (CbcMode::Fast, None),
        CbcMode::Auto => (CbcMode::Naive, None),
    };

    let table = omega_table(n, alpha)?;
    let mut search = Search::new(n, table);
    let fast = match mode {
        CbcMode::Fast => Some(FastSweep::new(cfg.n, &search.table)),
        _ => None,
    };

    let mut z = Vec::with_capacity(cfg.d);
    let mut trace = Vec::with_capacity(cfg.d);
    for j in 1..=cfg.d {
        let gamma = cfg.space.gamma(j);
        let zj = if j == 1 {
            1
        } else {
            let values = match &fast {
                Some(f) => f.criteria(&search, gamma),
                None => search.naive_criteria(gamma),
            };
            select_candidate(&values, search.scale(gamma))
        };
        search.accept(zj, gamma);
        z.push(zj as u64);
        trace.push(search.current_error());
    }

    Ok(CbcResult {
        rule: LatticeRule::new(cfg.n, z)?,
        error_trace: trace,
        mode,
        warning,
    })
}

/// `e²` of every prefix of the constructed vector.
pub fn cbc_error_trace(cfg: &CbcConfig) -> Result<Vec<f64>> {
    Ok(cbc_construct(cfg)?.error_trace)
}

/// Running state of the greedy search.
struct Search {
    n: usize,
    /// `ω_α(k/N)`, `k = 0..N`.
    table: Vec<f64>,
    /// `Π_{k<j} [1 + γ_k ω({i z_k/N})]` for each point `i`.
    prod: Vec<f64>,
}

impl Search {
    fn new(n: usize, table: Vec<f64>) -> Self {
        Self {
            n,
            table,
            prod: vec![1.0; n],
        }
    }

    fn prod_sum(&self) -> f64 {
        self.prod.iter().sum()
    }

    /// Magnitude of the terms entering one criterion value.
    fn scale(&self, gamma: f64) -> f64 {
        let max_omega = self.table.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.prod_sum() * (1.0 + gamma * max_omega) / self.n as f64
    }

    fn criterion(&self, base: f64, gamma: f64, weighted: f64) -> f64 {
        (base - self.n as f64 + gamma * weighted) / self.n as f64
    }

    /// Criterion for every candidate `z = 1..N-1` (index `z - 1`).
    fn naive_criteria(&self, gamma: f64) -> Vec<f64> {
        let base = self.prod_sum();
        (1..self.n)
            .into_par_iter()
            .map(|z| {
                let mut k = 0usize;
                let mut weighted = 0.0;
                for p in &self.prod {
                    weighted += p * self.table[k];
                    k += z;
                    if k >= self.n {
                        k -= self.n;
                    }
                }
                self.criterion(base, gamma, weighted)
            })
            .collect()
    }

    fn accept(&mut self, z: usize, gamma: f64) {
        let mut k = 0usize;
        for p in &mut self.prod {
            *p *= 1.0 + gamma * self.table[k];
            k += z;
            if k >= self.n {
                k -= self.n;
            }
        }
    }

    fn current_error(&self) -> f64 {
        let e = self.prod_sum() / self.n as f64 - 1.0;
        if e < 0.0 && e > -1e-9 {
            0.0
        } else {
            e
        }
    }
}

/// Candidate sweep by cyclic convolution under the primitive-root ordering.
struct FastSweep {
    /// `g^a mod N` for `a = 0..N-1`.
    powers: Vec<usize>,
    /// Spectrum of `ω_α(g^m / N)`.
    omega_hat: Vec<Complex64>,
    forward: Arc<dyn rustfft::Fft<f64>>,
    inverse: Arc<dyn rustfft::Fft<f64>>,
}

impl FastSweep {
    fn new(n: u64, table: &[f64]) -> Self {
        let g = primitive_root(n);
        let m = (n - 1) as usize;
        let mut powers = Vec::with_capacity(m);
        let mut cur = 1u64;
        for _ in 0..m {
            powers.push(cur as usize);
            cur = cur * g % n;
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut omega_hat: Vec<Complex64> =
            powers.iter().map(|&r| Complex64::new(table[r], 0.0)).collect();
        forward.process(&mut omega_hat);
        Self {
            powers,
            omega_hat,
            forward,
            inverse,
        }
    }

    /// Same contract as [`Search::naive_criteria`].
    fn criteria(&self, search: &Search, gamma: f64) -> Vec<f64> {
        let m = self.powers.len();
        let base = search.prod_sum();
        let at_zero = search.prod[0] * search.table[0];
        // q[a] = prod[g^{-a}], so that (q ⊛ w)[k] = Σ_l prod[g^l] ω(g^{k+l}/N)
        let mut buf: Vec<Complex64> = (0..m)
            .map(|a| Complex64::new(search.prod[self.powers[(m - a) % m]], 0.0))
            .collect();
        self.forward.process(&mut buf);
        for (b, w) in buf.iter_mut().zip(&self.omega_hat) {
            *b *= w;
        }
        self.inverse.process(&mut buf);
        let mut values = vec![0.0; m];
        for (k, c) in buf.iter().enumerate() {
            let z = self.powers[k];
            let weighted = at_zero + c.re / m as f64;
            values[z - 1] = search.criterion(base, gamma, weighted);
        }
        values
    }
}

/// Smallest `z` whose criterion is within `TIE_RTOL * scale` of the minimum.
fn select_candidate(values: &[f64], scale: f64) -> usize {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_RTOL * scale.max(min.abs());
    values
        .iter()
        .position(|&v| v <= min + tol)
        .map(|i| i + 1)
        .expect("candidate list is non-empty")
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut p = 3u64;
    while p * p <= n {
        if n % p == 0 {
            return false;
        }
        p += 2;
    }
    true
}

fn distinct_prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u128;
    let mut b = (base % m) as u128;
    let m128 = m as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m128;
        }
        b = b * b % m128;
        exp >>= 1;
    }
    base = acc as u64;
    base
}

/// Smallest primitive root of the prime `p`, found by trial over `2, 3, …`.
pub fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let order = p - 1;
    let factors = distinct_prime_factors(order);
    (2..p)
        .find(|&g| factors.iter().all(|&q| pow_mod(g, order / q, p) != 1))
        .expect("every prime has a primitive root")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::korobov::{kernel, DecayConstant, ProductWeights};
    use crate::lattice::lattice_points;
    use std::f64::consts::PI;

    fn space(gammas: Vec<f64>, alpha: f64) -> SpaceParams {
        let s = gammas.len();
        let w = ProductWeights::new(gammas, 0.5, DecayConstant::Auto).unwrap();
        SpaceParams::new(s, alpha, w).unwrap()
    }

    /// `-1 + N^{-2} Σ_{x,y} K(x, y)` by the kernel double sum.
    fn brute_error(n: u64, z: &[u64], p: &SpaceParams) -> f64 {
        let rule = LatticeRule::new(n, z.to_vec()).unwrap();
        let sub = p.restricted(z.len()).unwrap();
        let pts = lattice_points(&rule);
        let mut acc = 0.0;
        for x in pts.iter() {
            for y in pts.iter() {
                acc += kernel(x, y, &sub).unwrap();
            }
        }
        acc / (n * n) as f64 - 1.0
    }

    #[test]
    fn primitive_roots() {
        assert_eq!(primitive_root(2), 1);
        assert_eq!(primitive_root(5), 2);
        assert_eq!(primitive_root(7), 3);
        assert_eq!(primitive_root(31), 3);
        assert_eq!(primitive_root(127), 3);
        assert_eq!(primitive_root(257), 3);
        for p in [11u64, 13, 509, 1021] {
            let g = primitive_root(p);
            let mut seen = std::collections::HashSet::new();
            let mut cur = 1;
            for _ in 0..p - 1 {
                seen.insert(cur);
                cur = cur * g % p;
            }
            assert_eq!(seen.len() as u64, p - 1);
        }
    }

    #[test]
    fn first_component_is_one() {
        for n in [2u64, 7, 12, 31] {
            let cfg = CbcConfig::new(n, 1, space(vec![1.0], 1.0), CbcMode::Auto);
            assert_eq!(cbc_construct(&cfg).unwrap().rule.z(), &[1]);
        }
    }

    #[test]
    fn two_point_trace() {
        let cfg = CbcConfig::new(2, 1, space(vec![1.0], 1.0), CbcMode::Naive);
        let trace = cbc_error_trace(&cfg).unwrap();
        assert!((trace[0] - PI * PI / 12.0).abs() < 1e-14);
    }

    #[test]
    fn n5_matches_exhaustive_search() {
        let p = space(vec![1.0, 0.25], 1.0);
        let errors: Vec<f64> = (1..5).map(|z| brute_error(5, &[1, z], &p)).collect();
        // z and N - z give the same rule up to reflection
        assert!((errors[0] - errors[3]).abs() < 1e-12);
        assert!((errors[1] - errors[2]).abs() < 1e-12);
        // frozen from the kernel double sum: z ∈ {2, 3} beats z ∈ {1, 4}
        assert!((errors[0] - 0.916_924_518_760_805_9).abs() < 1e-12, "{}", errors[0]);
        assert!((errors[1] - 0.667_557_245_713_759_7).abs() < 1e-12, "{}", errors[1]);
        for mode in [CbcMode::Naive, CbcMode::Fast] {
            let res = cbc_construct(&CbcConfig::new(5, 2, p.clone(), mode)).unwrap();
            assert_eq!(res.rule.z(), &[1, 2]);
            assert!((res.error_trace[1] - errors[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_step_is_optimal_exhaustively() {
        for &n in &[7u64, 12, 16, 31] {
            for alpha in [1.0, 2.0] {
                let p = space(vec![1.0, 0.5, 0.3], alpha);
                let res = cbc_construct(&CbcConfig::new(n, 3, p.clone(), CbcMode::Auto)).unwrap();
                let z = res.rule.z();
                for j in 1..3 {
                    let chosen = brute_error(n, &z[..=j], &p);
                    let best = (1..n)
                        .map(|c| {
                            let mut zz = z[..j].to_vec();
                            zz.push(c);
                            brute_error(n, &zz, &p)
                        })
                        .fold(f64::INFINITY, f64::min);
                    assert!(chosen <= best * (1.0 + 1e-9) + 1e-14, "N={n} j={j}");
                    assert!((res.error_trace[j] - chosen).abs() <= 1e-10 * chosen.max(1e-300));
                }
            }
        }
    }

    #[test]
    fn fast_candidates_match_naive_candidates() {
        let p = space((1..=4).map(|j| (j as f64).powi(-2)).collect(), 2.0);
        let n = 31usize;
        let table = omega_table(n, 2).unwrap();
        let mut search = Search::new(n, table);
        search.accept(1, p.gamma(1));
        search.accept(12, p.gamma(2));
        let fast = FastSweep::new(31, &search.table);
        let a = search.naive_criteria(p.gamma(3));
        let b = fast.criteria(&search, p.gamma(3));
        let scale = search.scale(p.gamma(3));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-13 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn composite_fast_falls_back() {
        let p = space(vec![1.0, 0.5, 0.25], 1.0);
        let res = cbc_construct(&CbcConfig::new(16, 3, p.clone(), CbcMode::Fast)).unwrap();
        assert_eq!(res.mode, CbcMode::Naive);
        assert!(res.warning.is_some());
        let naive = cbc_construct(&CbcConfig::new(16, 3, p, CbcMode::Naive)).unwrap();
        assert_eq!(res.rule, naive.rule);
        assert!(naive.warning.is_none());
    }

    #[test]
    fn rejects_bad_configs() {
        let p = space(vec![1.0, 0.5], 1.5);
        assert!(matches!(
            cbc_construct(&CbcConfig::new(7, 2, p, CbcMode::Naive)),
            Err(Error::Unsupported(_))
        ));
        let p = space(vec![1.0, 0.5], 1.0);
        assert!(cbc_construct(&CbcConfig::new(7, 3, p.clone(), CbcMode::Naive)).is_err());
        assert!(cbc_construct(&CbcConfig::new(1, 1, p.clone(), CbcMode::Naive)).is_err());
        assert!(cbc_construct(&CbcConfig::new(7, 0, p, CbcMode::Naive)).is_err());
    }

    #[test]
    fn record_round_trips_through_json() {
        let p = space(vec![1.0, 0.5, 0.25], 2.0);
        let res = cbc_construct(&CbcConfig::new(31, 3, p.clone(), CbcMode::Fast)).unwrap();
        let rec = res.to_record(&p);
        let text = serde_json::to_string(&rec).unwrap();
        assert!(text.contains("\"N\":31"));
        assert!(text.contains("\"mode\":\"fast\""));
        let back: GeneratingVectorRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rec);
    }
}
