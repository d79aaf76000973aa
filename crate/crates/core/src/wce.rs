//! Worst-case error evaluators.
//!
//! * [`sq_wce_pointset`]: kernel double sum for an arbitrary point set.
//! * [`lattice_sq_wce`]: `O(Nd)` product formula for a rank-1 lattice.
//! * [`concat_ms_wce_exact`] / [`truncated_sq_wce_exact`]: closed forms for
//!   the lattice+random and lattice+anchor rules.
//! * [`brute_force_dual_sum`]: truncated dual-lattice enumeration, used as an
//!   independent check of the lattice formula.
//! * [`concat_ms_wce_empirical`]: replication estimate of the mean squared error.
//!
//! Products `Π A_j` with `A_j = 1 + 2γ_jζ(2α)` are accumulated as sums of
//! `ln(1 + 2γ_jζ(2α))`, so thousands of coordinates do not overflow.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::korobov::{frac, omega_alpha, omega_table, zeta, SpaceParams};
use crate::lattice::{concat_points, residue, ConcatRuleSpec, LatticeRule, PointSet};

/// Largest tolerated negative round-off in a squared error before it is clamped to zero.
pub const NEGATIVE_CLAMP: f64 = 1e-9;

/// Hard limit on the number of frequency vectors [`brute_force_dual_sum`] visits.
pub const DUAL_ENUMERATION_LIMIT: u128 = 100_000_000;

/// Split of a squared error into a random-coordinate part and a lattice part.
///
/// For the truncation rule the same fields hold the anchored-tail term and
/// the lattice term, respectively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub mc_term: f64,
    pub lattice_term: f64,
    pub total: f64,
}

impl ErrorBreakdown {
    fn new(mc_term: f64, lattice_term: f64) -> Self {
        Self {
            mc_term,
            lattice_term,
            total: mc_term + lattice_term,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replications: u64,
}

impl EmpiricalEstimate {
    /// Sample mean and Bessel-corrected standard error, summed in slice order.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("need at least two replications"));
        }
        let r = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / r;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
        Ok(Self {
            mean,
            std_error: (var / r).sqrt(),
            replications: samples.len() as u64,
        })
    }

    /// `(mean - reference) / std_error`.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.mean - reference) / self.std_error
    }
}

fn clamp_square(e: f64, what: &str) -> Result<f64> {
    if e >= 0.0 {
        Ok(e)
    } else if e >= -NEGATIVE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("{what} came out negative: {e}")))
    }
}

/// `-1 + |P|^{-2} Σ_{x,y∈P} K(x, y)`.
///
/// The space dimension must equal the point dimension.
pub fn sq_wce_pointset(points: &PointSet, p: &SpaceParams) -> Result<f64> {
    let alpha = p.require_alpha_int("pointset worst-case error")?;
    if points.is_empty() {
        return Err(Error::invalid("point set is empty"));
    }
    if points.dim() != p.s() {
        return Err(Error::invalid(format!(
            "points have dimension {}, space has s = {}",
            points.dim(),
            p.s()
        )));
    }
    let gammas = &p.weights().gammas()[..p.s()];
    let n = points.len();
    // K(x, y) - 1, accumulated without forming the product near 1
    let kern_excess = |x: &[f64], y: &[f64]| -> f64 {
        x.iter().zip(y).zip(gammas).fold(0.0, |q, ((a, b), g)| {
            let t = g * omega_alpha(frac(a - b), alpha).expect("alpha validated above");
            q + t + q * t
        })
    };
    // K is symmetric: diagonal plus twice the strict upper triangle
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = points.point(i);
            let off = compensated_sum((i + 1..n).map(|k| kern_excess(x, points.point(k))));
            kern_excess(x, x) + 2.0 * off
        })
        .collect();
    let total = compensated_sum(rows.iter().copied());
    clamp_square(total / (n as f64 * n as f64), "squared worst-case error")
}

/// `-1 + (1/N) Σ_i Π_{j≤d} [1 + γ_j ω({i z_j/N})]`, using the first `d`
/// weights of `p`.
pub fn lattice_sq_wce(rule: &LatticeRule, p: &SpaceParams) -> Result<f64> {
    let alpha = p.require_alpha_int("lattice worst-case error")?;
    if rule.d() > p.s() {
        return Err(Error::invalid(format!(
            "lattice has d = {} > s = {}",
            rule.d(),
            p.s()
        )));
    }
    let n = rule.n();
    let table = omega_table(n as usize, alpha)?;
    let excess = (0..n).map(|i| {
        rule.z().iter().enumerate().fold(0.0, |q, (j, &zj)| {
            let t = p.gamma(j + 1) * table[residue(i, zj, n) as usize];
            q + t + q * t
        })
    });
    clamp_square(compensated_sum(excess) / n as f64, "lattice squared worst-case error")
}

/// Neumaier-compensated summation.
pub(crate) fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `Σ_{j∈range} ln(1 + 2γ_jζ(2α))`, 1-based inclusive-exclusive `range`.
fn ln_mass(p: &SpaceParams, range: std::ops::Range<usize>) -> Result<f64> {
    let z2a = zeta(2.0 * p.alpha())?;
    Ok(range.map(|j| (2.0 * p.gamma(j) * z2a).ln_1p()).sum())
}

fn check_split(rule: &LatticeRule, p: &SpaceParams) -> Result<()> {
    if rule.d() >= p.s() {
        return Err(Error::domain(format!(
            "need d < s, got d = {}, s = {}",
            rule.d(),
            p.s()
        )));
    }
    Ok(())
}

/// Exact mean squared worst-case error of the concatenated rule:
/// `mc_term = (1/N) Π_{j≤d} A_j (Π_{j>d} A_j - 1)` and `lattice_term` is the
/// lattice error of the first `d` coordinates.
pub fn concat_ms_wce_exact(rule: &LatticeRule, p: &SpaceParams) -> Result<ErrorBreakdown> {
    check_split(rule, p)?;
    let d = rule.d();
    let head = ln_mass(p, 1..d + 1)?;
    let tail = ln_mass(p, d + 1..p.s() + 1)?;
    let mc = head.exp() * tail.exp_m1() / rule.n() as f64;
    let lattice = lattice_sq_wce(rule, p)?;
    Ok(ErrorBreakdown::new(mc, lattice))
}

/// Pure Monte Carlo reference (no lattice coordinates):
/// `mc_term = (1/N)(Π_{j≤s} A_j - 1)`, `lattice_term = 0`.
///
/// This extends the concatenated formula to `d = 0`.
pub fn pure_mc_ms_wce(n: u64, p: &SpaceParams) -> Result<ErrorBreakdown> {
    if n == 0 {
        return Err(Error::invalid("need at least one point"));
    }
    let all = ln_mass(p, 1..p.s() + 1)?;
    Ok(ErrorBreakdown::new(all.exp_m1() / n as f64, 0.0))
}

/// Replication estimate of the concatenated rule's mean squared error.
///
/// Replication `r` uses `concat_points(spec, r)`; replications run in
/// parallel and are reduced in index order.
pub fn concat_ms_wce_empirical(
    spec: &ConcatRuleSpec,
    p: &SpaceParams,
    replications: u64,
) -> Result<EmpiricalEstimate> {
    p.require_alpha_int("empirical mean squared error")?;
    if replications < 2 {
        return Err(Error::invalid("need at least two replications"));
    }
    if p.s() != spec.s() {
        return Err(Error::invalid(format!(
            "rule has s = {}, space has s = {}",
            spec.s(),
            p.s()
        )));
    }
    let samples = (0..replications)
        .into_par_iter()
        .map(|r| sq_wce_pointset(&concat_points(spec, r), p))
        .collect::<Result<Vec<f64>>>()?;
    EmpiricalEstimate::from_samples(&samples)
}

/// Exact squared worst-case error of the truncation rule (any anchor):
/// `lattice_term = e²_lattice · Π_{j>d} A_j`, `mc_term = Π_{j>d} A_j - 1`.
pub fn truncated_sq_wce_exact(rule: &LatticeRule, p: &SpaceParams) -> Result<ErrorBreakdown> {
    check_split(rule, p)?;
    let tail = ln_mass(p, rule.d() + 1..p.s() + 1)?;
    let lattice = lattice_sq_wce(rule, p)? * tail.exp();
    Ok(ErrorBreakdown::new(tail.exp_m1(), lattice))
}

/// `Σ r(h, 0)` over nonzero dual vectors `h` with `‖h‖_∞ ≤ H`.
pub fn brute_force_dual_sum(rule: &LatticeRule, p: &SpaceParams, h_max: u64) -> Result<f64> {
    let d = rule.d();
    if d > p.s() {
        return Err(Error::invalid(format!("lattice has d = {d} > s = {}", p.s())));
    }
    let side = 2 * h_max as u128 + 1;
    let requested = side
        .checked_pow(d as u32)
        .unwrap_or(u128::MAX);
    if requested > DUAL_ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            requested,
            limit: DUAL_ENUMERATION_LIMIT,
        });
    }
    let n = rule.n();
    let h = h_max as i64;
    let two_alpha = 2.0 * p.alpha();
    // per-axis factor r_j(k) for k = -H..=H, with r_j(0) = 1
    let factors: Vec<Vec<f64>> = (1..=d)
        .map(|j| {
            (-h..=h)
                .map(|k| {
                    if k == 0 {
                        1.0
                    } else {
                        p.gamma(j) / (k.unsigned_abs() as f64).powf(two_alpha)
                    }
                })
                .collect()
        })
        .collect();

    fn walk(
        j: usize,
        dot: u64,
        weight: f64,
        ctx: &(u64, i64, &[u64], &[Vec<f64>]),
        acc: &mut f64,
    ) {
        let (n, h, z, factors) = *ctx;
        if j == z.len() {
            if dot == 0 {
                *acc += weight;
            }
            return;
        }
        for k in -h..=h {
            let step = (k.rem_euclid(n as i64) as u128 * z[j] as u128 % n as u128) as u64;
            walk(
                j + 1,
                (dot + step) % n,
                weight * factors[j][(k + h) as usize],
                ctx,
                acc,
            );
        }
    }

    let mut acc = 0.0;
    walk(0, 0, 1.0, &(n, h, rule.z(), &factors), &mut acc);
    // h = 0 is dual with weight 1
    Ok((acc - 1.0).max(0.0))
}
