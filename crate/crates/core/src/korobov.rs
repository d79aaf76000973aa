//! Weighted Korobov spaces of periodic functions.
//!
//! A space `H_{s,α,γ}` is fixed by the dimension `s`, the smoothness `α > 1/2`
//! and a non-increasing sequence of product weights. Functions have Fourier
//! coefficients that decay like [`r_weight`]; the reproducing kernel factorizes
//! over coordinates into `1 + γ_j ω_α(x_j - y_j)`, where `ω_α` is the
//! one-dimensional series `Σ_{h≠0} e^{2πihx} / |h|^{2α}` (see [`omega_alpha`]).
//!
//! The special functions needed downstream (Riemann zeta, Euler totient) live
//! here as well.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// How the weight-decay constant `C` in `γ_j ≤ C j^{-1/λ*}` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayConstant {
    /// `C = max_j γ_j j^{1/λ*}` over the stored weights.
    Auto,
    /// A user-supplied constant; it must dominate every stored weight.
    Fixed(f64),
}

/// Non-increasing positive product weights `γ_1 ≥ γ_2 ≥ … > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductWeights {
    gammas: Vec<f64>,
    lambda_star: f64,
    decay_constant: f64,
}

impl ProductWeights {
    pub fn new(gammas: Vec<f64>, lambda_star: f64, decay: DecayConstant) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::invalid("weight list is empty"));
        }
        if let Some((j, g)) = gammas
            .iter()
            .enumerate()
            .find(|(_, g)| !(g.is_finite() && **g > 0.0))
        {
            return Err(Error::invalid(format!(
                "weight gamma_{} = {g} is not a positive finite number",
                j + 1
            )));
        }
        if let Some(j) = gammas.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::invalid(format!(
                "weights must be non-increasing, but gamma_{} < gamma_{}",
                j + 1,
                j + 2
            )));
        }
        if !(lambda_star > 0.0 && lambda_star < 1.0) {
            return Err(Error::invalid(format!(
                "lambda_star = {lambda_star} must lie in (0, 1)"
            )));
        }
        let auto = max_decay_ratio(&gammas, lambda_star).0;
        let decay_constant = match decay {
            DecayConstant::Auto => auto,
            DecayConstant::Fixed(c) => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::invalid(format!("decay constant C = {c} must be positive")));
                }
                // the smallest admissible C is the auto value; allow rounding slack
                if c < auto * (1.0 - 1e-12) {
                    return Err(Error::invalid(format!(
                        "decay constant C = {c} violates gamma_j <= C j^(-1/lambda_star); need C >= {auto}"
                    )));
                }
                c
            }
        };
        Ok(Self {
            gammas,
            lambda_star,
            decay_constant,
        })
    }

    /// Power-law weights `γ_j = j^{-2cα}` for `j = 1..=len`, with
    /// `λ* = 1/(2cα) + 0.01` and automatic `C`.
    pub fn power_law(c: f64, alpha: f64, len: usize) -> Result<Self> {
        let rate = 2.0 * c * alpha;
        if !(rate > 1.0) {
            return Err(Error::invalid(format!(
                "power-law weights need 2*c*alpha > 1 for summability, got {rate}"
            )));
        }
        let gammas = (1..=len).map(|j| (j as f64).powf(-rate)).collect();
        Self::new(gammas, 1.0 / rate + 0.01, DecayConstant::Auto)
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    pub fn decay_constant(&self) -> f64 {
        self.decay_constant
    }

    /// `γ_j` for the 1-based coordinate index `j`.
    pub fn gamma(&self, j: usize) -> f64 {
        self.gammas[j - 1]
    }

    /// Keeps only the first `len` weights.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.gammas.len() {
            return Err(Error::invalid(format!(
                "cannot truncate {} weights to {len}",
                self.gammas.len()
            )));
        }
        Ok(Self {
            gammas: self.gammas[..len].to_vec(),
            lambda_star: self.lambda_star,
            decay_constant: self.decay_constant,
        })
    }
}

/// Returns `(max_j γ_j j^{1/λ*}, argmax j)` with 1-based `j`.
pub(crate) fn max_decay_ratio(gammas: &[f64], lambda_star: f64) -> (f64, usize) {
    let exponent = 1.0 / lambda_star;
    gammas
        .iter()
        .enumerate()
        .map(|(i, g)| (g * ((i + 1) as f64).powf(exponent), i + 1))
        .fold((f64::NEG_INFINITY, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// The Korobov space `H_{s,α,γ}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceParams {
    s: usize,
    alpha: f64,
    alpha_int: Option<u32>,
    weights: ProductWeights,
}

impl SpaceParams {
    pub fn new(s: usize, alpha: f64, weights: ProductWeights) -> Result<Self> {
        if s == 0 {
            return Err(Error::invalid("dimension s must be positive"));
        }
        if !(alpha > 0.5) || !alpha.is_finite() {
            return Err(Error::domain(format!("smoothness alpha = {alpha} must exceed 1/2")));
        }
        if weights.len() < s {
            return Err(Error::invalid(format!(
                "need at least s = {s} weights, got {}",
                weights.len()
            )));
        }
        let alpha_int = (1..=3u32).find(|&k| alpha == f64::from(k));
        Ok(Self {
            s,
            alpha,
            alpha_int,
            weights,
        })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn alpha_int(&self) -> Option<u32> {
        self.alpha_int
    }

    pub fn weights(&self) -> &ProductWeights {
        &self.weights
    }

    /// `γ_j`, 1-based.
    pub fn gamma(&self, j: usize) -> f64 {
        self.weights.gamma(j)
    }

    /// The integral smoothness, or an `Unsupported` error naming `what`.
    pub fn require_alpha_int(&self, what: &str) -> Result<u32> {
        self.alpha_int.ok_or_else(|| {
            Error::Unsupported(format!(
                "{what} needs integral alpha in {{1, 2, 3}}, got {}",
                self.alpha
            ))
        })
    }

    /// The same space restricted to its first `d` coordinates.
    pub fn restricted(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.s {
            return Err(Error::invalid(format!(
                "cannot restrict a {}-dimensional space to {d} coordinates",
                self.s
            )));
        }
        Ok(Self {
            s: d,
            ..self.clone()
        })
    }

    /// `A_j = 1 + 2 γ_j ζ(2α)`, the per-coordinate factor of `Σ_h r(h)`.
    pub fn coordinate_mass(&self, j: usize) -> f64 {
        1.0 + 2.0 * self.gamma(j) * zeta_unchecked(2.0 * self.alpha)
    }
}

/// Fourier-decay weight `r_{α,γ}(h) = Π_{h_j≠0} γ_j / |h_j|^{2α}`.
pub fn r_weight(h: &[i64], p: &SpaceParams) -> Result<f64> {
    if h.len() > p.s {
        return Err(Error::invalid(format!(
            "frequency vector has length {} > s = {}",
            h.len(),
            p.s
        )));
    }
    let two_alpha = 2.0 * p.alpha;
    Ok(h
        .iter()
        .enumerate()
        .filter(|(_, &hj)| hj != 0)
        .map(|(j, &hj)| p.gamma(j + 1) / (hj.unsigned_abs() as f64).powf(two_alpha))
        .product())
}

/// Fractional part `x - floor(x)` folded into `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// `Σ_{h≠0} e^{2πihx} / |h|^{2α}` for integer `α ∈ {1, 2, 3}`, via
/// `(-1)^{α+1} (2π)^{2α} B_{2α}(x) / (2α)!`.
///
/// The Bernoulli polynomials are evaluated in the variable `t = x(1-x)`, so
/// the result is symmetric under `x ↦ 1 - x`.
pub fn omega_alpha(x: f64, alpha_int: u32) -> Result<f64> {
    let t = x * (1.0 - x);
    let two_pi_sq = 4.0 * PI * PI;
    match alpha_int {
        // B_2 = 1/6 - t
        1 => Ok(two_pi_sq / 2.0 * (1.0 / 6.0 - t)),
        // B_4 = t^2 - 1/30
        2 => Ok(-two_pi_sq * two_pi_sq / 24.0 * (t * t - 1.0 / 30.0)),
        // B_6 = -t^3 - t^2/2 + 1/42
        3 => Ok(two_pi_sq.powi(3) / 720.0 * (1.0 / 42.0 - t * t * (t + 0.5))),
        _ => Err(Error::Unsupported(format!(
            "closed-form kernel only for alpha in {{1, 2, 3}}, got {alpha_int}"
        ))),
    }
}

/// Values `ω_α(k/N)` for `k = 0..N`, mirrored so that entries `k` and `N-k`
/// are bitwise equal.
pub(crate) fn omega_table(n: usize, alpha_int: u32) -> Result<Vec<f64>> {
    let mut table = vec![0.0; n];
    for k in 0..=n / 2 {
        let v = omega_alpha(k as f64 / n as f64, alpha_int)?;
        table[k] = v;
        if k != 0 {
            table[n - k] = v;
        }
    }
    Ok(table)
}

/// Reproducing kernel `Π_j [1 + γ_j ω_α({x_j - y_j})]`.
pub fn kernel(x: &[f64], y: &[f64], p: &SpaceParams) -> Result<f64> {
    let a = p.require_alpha_int("kernel evaluation")?;
    if x.len() != p.s || y.len() != p.s {
        return Err(Error::invalid(format!(
            "kernel arguments must have length s = {}, got {} and {}",
            p.s,
            x.len(),
            y.len()
        )));
    }
    let mut prod = 1.0;
    for (j, (xj, yj)) in x.iter().zip(y).enumerate() {
        prod *= 1.0 + p.gamma(j + 1) * omega_alpha(frac(xj - yj), a)?;
    }
    Ok(prod)
}

const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Riemann zeta for real `x > 1` (Euler–Maclaurin with 16 explicit terms).
pub fn zeta(x: f64) -> Result<f64> {
    if !(x > 1.0) {
        return Err(Error::domain(format!("zeta({x}) requires x > 1")));
    }
    Ok(zeta_unchecked(x))
}

pub(crate) fn zeta_unchecked(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    const TERMS: usize = 16;
    let n = TERMS as f64;
    let head: f64 = (1..TERMS).rev().map(|k| (k as f64).powf(-x)).sum();
    let n_pow = n.powf(-x);
    let mut tail = n * n_pow / (x - 1.0) + 0.5 * n_pow;
    // Σ B_{2i}/(2i)! · x(x+1)…(x+2i-2) · n^{-x-2i+1}
    let mut rising = x;
    let mut fact = 2.0;
    let mut npow = n_pow / n;
    for (i, b) in BERNOULLI_EVEN.iter().enumerate() {
        tail += b / fact * rising * npow;
        let k = 2.0 * i as f64;
        rising *= (x + k + 1.0) * (x + k + 2.0);
        fact *= (k + 3.0) * (k + 4.0);
        npow /= n * n;
    }
    head + tail
}

/// Euler totient by trial-division factorization.
pub fn totient(n: u64) -> u64 {
    assert!(n >= 1, "totient is defined for n >= 1");
    let mut rest = n;
    let mut phi = n;
    let mut p = 2u64;
    while p * p <= rest {
        if rest % p == 0 {
            while rest % p == 0 {
                rest /= p;
            }
            phi -= phi / p;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        phi -= phi / rest;
    }
    phi
}
