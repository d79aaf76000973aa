//! Theoretical error bounds, dimension advice and construction-cost models.
//!
//! Both bounds split into a lattice part, which depends on `λ` through the
//! CBC bound `[(1/φ(N))(-1 + exp(2C^λ ζ(2αλ) ζ(λ/λ*)))]^{1/λ}`, and a tail
//! part controlled by the weight decay `γ_j ≤ C j^{-1/λ*}`. The admissible
//! `λ` range is the half-open window `(max(λ*, 1/(2α)), 1]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::korobov::{max_decay_ratio, totient, zeta, zeta_unchecked, ProductWeights};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Number of grid points used when optimizing over `λ`.
pub const LAMBDA_GRID: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Fixed(f64),
    /// Minimize over a uniform grid on the admissible window.
    Optimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    pub lambda_star: f64,
    pub lambda: Lambda,
    /// Weight-decay constant `C`.
    pub c: f64,
    pub alpha: f64,
    pub n: u64,
    pub d: u64,
}

impl BoundParams {
    /// Left end of the admissible `λ` window, `max(λ*, 1/(2α))`.
    pub fn lambda_floor(&self) -> f64 {
        self.lambda_star.max(1.0 / (2.0 * self.alpha))
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda_star > 0.0 && self.lambda_star < 1.0) {
            return Err(Error::domain(format!(
                "lambda_star = {} must lie in (0, 1)",
                self.lambda_star
            )));
        }
        if !(self.alpha > 0.5) {
            return Err(Error::domain(format!("alpha = {} must exceed 1/2", self.alpha)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::domain(format!("decay constant C = {} must be positive", self.c)));
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::domain("N and d must be positive"));
        }
        if let Lambda::Fixed(l) = self.lambda {
            let lo = self.lambda_floor();
            if !(l > lo && l <= 1.0) {
                return Err(Error::domain(format!("lambda = {l} outside ({lo}, 1]")));
            }
        }
        Ok(())
    }
}

/// A bound evaluated at a particular `λ`, split into its two parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub value: f64,
    pub lambda: f64,
    pub lattice_part: f64,
    pub tail_part: f64,
}

/// `ln(e^x - 1)` for `x > 0`, stable for large `x`.
fn ln_expm1(x: f64) -> f64 {
    if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else {
        x.exp_m1().ln()
    }
}

/// `[(1/φ(N))(-1 + exp(2C^λ ζ(2αλ) ζ(λ/λ*)))]^{1/λ}`; infinite when a zeta
/// argument reaches 1.
fn lattice_part(bp: &BoundParams, lambda: f64) -> f64 {
    let a = 2.0 * bp.alpha * lambda;
    let b = lambda / bp.lambda_star;
    if !(a > 1.0 && b > 1.0) {
        return f64::INFINITY;
    }
    let x = 2.0 * bp.c.powf(lambda) * zeta_unchecked(a) * zeta_unchecked(b);
    let phi = totient(bp.n) as f64;
    ((ln_expm1(x) - phi.ln()) / lambda).exp()
}

/// `exp(2Cζ(2α)ζ(1/λ*))`, the bound on `Π_{j≤d} A_j`.
fn head_mass_bound(bp: &BoundParams) -> f64 {
    (2.0 * bp.c * zeta_unchecked(2.0 * bp.alpha) * zeta_unchecked(1.0 / bp.lambda_star)).exp()
}

/// `d^{1-1/λ*} [-1 + exp(2Cζ(2α)/(1/λ*-1))]`, the bound on `Π_{j>d} A_j - 1`.
fn tail_mass_bound(bp: &BoundParams) -> f64 {
    let q = 1.0 / bp.lambda_star - 1.0;
    (2.0 * bp.c * zeta_unchecked(2.0 * bp.alpha) / q).exp_m1() * (bp.d as f64).powf(-q)
}

fn evaluate(bp: &BoundParams, parts: impl Fn(f64) -> (f64, f64)) -> Result<BoundValue> {
    bp.validate()?;
    let at = |lambda: f64| {
        let (lattice_part, tail_part) = parts(lambda);
        BoundValue {
            value: lattice_part + tail_part,
            lambda,
            lattice_part,
            tail_part,
        }
    };
    match bp.lambda {
        Lambda::Fixed(l) => Ok(at(l)),
        Lambda::Optimize => {
            let lo = bp.lambda_floor();
            if !(lo < 1.0) {
                return Err(Error::domain(format!("empty lambda window ({lo}, 1]")));
            }
            let width = 1.0 - lo;
            let best = (1..=LAMBDA_GRID)
                .map(|k| {
                    if k == LAMBDA_GRID {
                        1.0
                    } else {
                        lo + width * k as f64 / LAMBDA_GRID as f64
                    }
                })
                .map(at)
                .filter(|v| v.value.is_finite())
                .min_by(|a, b| a.value.total_cmp(&b.value));
            Ok(best.unwrap_or_else(|| at(1.0)))
        }
    }
}

/// Upper bound on the mean squared worst-case error of the concatenated rule.
pub fn theorem1_evaluate(bp: &BoundParams) -> Result<BoundValue> {
    let head = head_mass_bound(bp);
    let tail = tail_mass_bound(bp);
    evaluate(bp, |l| (lattice_part(bp, l), head * tail / bp.n as f64))
}

pub fn theorem1_bound(bp: &BoundParams) -> Result<f64> {
    theorem1_evaluate(bp).map(|v| v.value)
}

/// Upper bound on the squared worst-case error of the truncation rule.
pub fn theorem2_evaluate(bp: &BoundParams) -> Result<BoundValue> {
    let head = head_mass_bound(bp);
    let tail = tail_mass_bound(bp);
    evaluate(bp, |l| (lattice_part(bp, l) * head, tail))
}

pub fn theorem2_bound(bp: &BoundParams) -> Result<f64> {
    theorem2_evaluate(bp).map(|v| v.value)
}

/// `(1/N)(e^γ ln ln N + 2.50637 / ln ln N)`, an upper bound on `1/φ(N)`.
pub fn totient_bound(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::domain(format!("totient bound needs N >= 3, got {n}")));
    }
    let ll = (n as f64).ln().ln();
    Ok((EULER_GAMMA.exp() * ll + 2.50637 / ll) / n as f64)
}

/// `ceil(x)`, except that values within round-off of an integer snap to it.
fn ceil_snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

fn check_advice_inputs(alpha: f64, lambda_star: f64, kappa: f64, s: u64) -> Result<()> {
    if s < 2 {
        return Err(Error::domain(format!("need s >= 2 to leave a random coordinate, got {s}")));
    }
    if !(lambda_star > 0.0 && lambda_star < 1.0) {
        return Err(Error::domain(format!("lambda_star = {lambda_star} must lie in (0, 1)")));
    }
    if !(alpha > 0.5) {
        return Err(Error::domain(format!("alpha = {alpha} must exceed 1/2")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::domain(format!("kappa = {kappa} must be positive")));
    }
    Ok(())
}

fn clamp_dimension(raw: f64, s: u64) -> u64 {
    let cap = (s - 1) as f64;
    ceil_snapped(raw).clamp(1.0, cap) as u64
}

/// Lattice dimension for the concatenated rule: `κ N^{(2α-1)/(1/λ*-1)}` when
/// `λ* ≤ 1/(2α)`, `κ N` otherwise; clamped to `1..=s-1`.
pub fn advise_d(n: u64, alpha: f64, lambda_star: f64, kappa: f64, s: u64) -> Result<u64> {
    check_advice_inputs(alpha, lambda_star, kappa, s)?;
    let nf = n as f64;
    let raw = if lambda_star <= 1.0 / (2.0 * alpha) {
        kappa * nf.powf((2.0 * alpha - 1.0) / (1.0 / lambda_star - 1.0))
    } else {
        kappa * nf
    };
    Ok(clamp_dimension(raw, s))
}

/// Lattice dimension for the truncation rule: `κ N^{2α/(1/λ*-1)}` when
/// `λ* ≤ 1/(2α)`, `κ N^{1/(1-λ*)}` otherwise; clamped to `1..=s-1`.
pub fn advise_d_truncation(n: u64, alpha: f64, lambda_star: f64, kappa: f64, s: u64) -> Result<u64> {
    check_advice_inputs(alpha, lambda_star, kappa, s)?;
    let nf = n as f64;
    let raw = if lambda_star <= 1.0 / (2.0 * alpha) {
        kappa * nf.powf(2.0 * alpha / (1.0 / lambda_star - 1.0))
    } else {
        kappa * nf.powf(1.0 / (1.0 - lambda_star))
    };
    Ok(clamp_dimension(raw, s))
}

/// Reduction exponents `w_1 ≤ w_2 ≤ …` of the reduced CBC search.
#[derive(Debug, Clone, PartialEq)]
pub enum ReductionExponents {
    Explicit(Vec<u32>),
    /// `w_j = ⌊β log_b j⌋`.
    Logarithmic { beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCostParams {
    /// Prime base `b`; the point count is `N = b^m`.
    pub b: u64,
    pub m: u32,
    pub s: u64,
    pub exponents: ReductionExponents,
}

impl ReducedCostParams {
    fn validate(&self) -> Result<()> {
        if !crate::cbc::is_prime(self.b) {
            return Err(Error::invalid(format!("base b = {} must be prime", self.b)));
        }
        if self.m == 0 {
            return Err(Error::invalid("m must be positive"));
        }
        if self.b.checked_pow(self.m).is_none() {
            return Err(Error::invalid(format!("b^m = {}^{} overflows", self.b, self.m)));
        }
        match &self.exponents {
            ReductionExponents::Explicit(w) => {
                if let Some(j) = w.windows(2).position(|p| p[1] < p[0]) {
                    return Err(Error::invalid(format!(
                        "reduction exponents must be non-decreasing (w_{} > w_{})",
                        j + 1,
                        j + 2
                    )));
                }
            }
            ReductionExponents::Logarithmic { beta } => {
                if !(*beta > 0.0 && beta.is_finite()) {
                    return Err(Error::invalid(format!("beta = {beta} must be positive")));
                }
            }
        }
        Ok(())
    }

    /// `w_j` for 1-based `j`, or `None` past the end of an explicit list.
    pub fn exponent(&self, j: u64) -> Option<u32> {
        match &self.exponents {
            ReductionExponents::Explicit(w) => w.get((j - 1) as usize).copied(),
            ReductionExponents::Logarithmic { beta } => {
                let v = beta * (j as f64).ln() / (self.b as f64).ln();
                let r = v.round();
                let w = if (v - r).abs() <= 1e-9 * r.abs().max(1.0) { r } else { v.floor() };
                Some(w as u32)
            }
        }
    }

    pub fn points(&self) -> u64 {
        self.b.pow(self.m)
    }
}

/// `Σ_{j=1}^{min(s, s*)} (m - w_j) b^{m - w_j}` with `s*` the last `j` having `w_j < m`.
pub fn reduced_cbc_cost(rc: &ReducedCostParams) -> Result<u128> {
    rc.validate()?;
    let mut total = 0u128;
    for j in 1..=rc.s {
        let w = rc.exponent(j).ok_or_else(|| {
            Error::invalid(format!(
                "explicit reduction exponents end at j = {} but s = {} and w_j < m",
                j - 1,
                rc.s
            ))
        })?;
        if w >= rc.m {
            // w is non-decreasing, so every later term vanishes too
            break;
        }
        let e = rc.m - w;
        total += u128::from(e) * u128::from(rc.b).pow(e);
    }
    Ok(total)
}

/// Order estimate of the reduced CBC cost for `w_j = ⌊β log_b j⌋`:
/// `b ζ(β) N log_b N` (β > 1), `b ln b · N (log_b(N e))²` (β = 1),
/// `b N^{1/β} log_b N` (β < 1).
pub fn reduced_cbc_cost_estimate(rc: &ReducedCostParams) -> Result<f64> {
    rc.validate()?;
    let ReductionExponents::Logarithmic { beta } = rc.exponents else {
        return Err(Error::invalid("cost estimate needs logarithmic exponents with beta"));
    };
    let b = rc.b as f64;
    let n = rc.points() as f64;
    let log_b = |x: f64| x.ln() / b.ln();
    Ok(if beta > 1.0 {
        b * zeta(beta)? * n * log_b(n)
    } else if beta == 1.0 {
        b * b.ln() * n * log_b(n * std::f64::consts::E).powi(2)
    } else {
        b * n.powf(1.0 / beta) * log_b(n)
    })
}

/// Outcome of computing the decay constant from a finite weight list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayEstimate {
    pub c: f64,
    /// 1-based index attaining the maximum.
    pub attained_at: usize,
    /// Set when the maximum sits at the last stored weight, which suggests
    /// `γ_j j^{1/λ*}` keeps growing and the summability assumption fails.
    pub warning: Option<String>,
}

/// `C = max_j γ_j j^{1/λ*}` with a divergence diagnostic.
pub fn decay_constant_report(weights: &ProductWeights) -> DecayEstimate {
    let (c, attained_at) = max_decay_ratio(weights.gammas(), weights.lambda_star());
    let warning = (weights.len() > 1 && attained_at == weights.len()).then(|| {
        format!(
            "gamma_j j^(1/lambda_star) peaks at the last stored weight (j = {attained_at}); \
             the weights may not be summable with exponent lambda_star = {}",
            weights.lambda_star()
        )
    });
    DecayEstimate {
        c,
        attained_at,
        warning,
    }
}

pub fn decay_constant(weights: &ProductWeights) -> f64 {
    decay_constant_report(weights).c
}
