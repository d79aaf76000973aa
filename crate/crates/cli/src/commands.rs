//! The four verbs. Each returns a report that `output` renders as JSON or CSV.

use std::time::Instant;

use hybrid_lattice::bounds::{
    advise_d, advise_d_truncation, theorem1_bound, BoundParams, Lambda, ReducedCostParams,
    ReductionExponents,
};
use hybrid_lattice::cbc::{CbcConfig, CbcMode, GeneratingVectorRecord};
use hybrid_lattice::lattice::ConcatRuleSpec;
use hybrid_lattice::wce::{
    concat_ms_wce_empirical, concat_ms_wce_exact, pure_mc_ms_wce, truncated_sq_wce_exact,
    ErrorBreakdown,
};
use serde::Serialize;

use crate::cache;
use crate::config::{DimChoice, ExperimentConfig, TotalDim, WeightsSpec};
use crate::error::{CliError, Result};

/// Minimum number of point counts in a convergence study.
pub const MIN_CONVERGENCE_POINTS: usize = 4;

fn to_usize(v: u64, what: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| CliError::config(format!("{what} = {v} is too large")))
}

fn resolve_d(cfg: &ExperimentConfig, choice: DimChoice, n: u64, cap: u64) -> Result<u64> {
    match choice {
        DimChoice::Fixed(d) => Ok(d),
        DimChoice::Advise => Ok(advise_d(n, cfg.alpha(), cfg.lambda_star()?, cfg.kappa(), cap)?),
    }
}

fn build(cfg: &ExperimentConfig, n: u64, d: usize, s: usize) -> Result<GeneratingVectorRecord> {
    let space = cfg.space(s.max(d))?;
    let cbc = CbcConfig::new(n, d, space, cfg.mode());
    cache::construct(&cbc, cfg.cache_dir.as_deref())
}

pub fn construct(cfg: &ExperimentConfig) -> Result<GeneratingVectorRecord> {
    let n = cfg.single_point_count()?;
    let s = cfg.s()?;
    let cap = s.map_or(u64::MAX, TotalDim::cap);
    let d = resolve_d(cfg, cfg.d()?, n, cap)?;
    if d == 0 {
        return Err(CliError::config("d must be at least 1 for a construction"));
    }
    let d = to_usize(d, "d")?;
    build(cfg, n, d, d)
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalReport {
    pub mean: f64,
    pub std_error: f64,
    pub replications: u64,
    pub seed: u64,
    /// `(mean - exact) / std_error` against the concatenated-rule total.
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PureMcReport {
    #[serde(flatten)]
    pub breakdown: ErrorBreakdown,
    /// The `d = 0` baseline extends the concatenated rule with an empty lattice block.
    pub extension: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub d: u64,
    pub s: u64,
    pub alpha: f64,
    pub lambda_star: f64,
    pub gammas: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concatenated: Option<ErrorBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated: Option<ErrorBreakdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical: Option<EmpiricalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pure_mc: Option<PureMcReport>,
}

pub fn error(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    let n = cfg.single_point_count()?;
    let s_spec = cfg.s()?.ok_or_else(|| CliError::config("s is required"))?;
    let d = resolve_d(cfg, cfg.d()?, n, s_spec.cap())?;
    let s = s_spec.resolve(d);
    if s == 0 {
        return Err(CliError::config("s must be positive"));
    }
    let space = cfg.space(to_usize(s, "s")?)?;
    let mut report = ErrorReport {
        n,
        d,
        s,
        alpha: space.alpha(),
        lambda_star: space.weights().lambda_star(),
        gammas: space.weights().gammas()[..to_usize(s, "s")?].to_vec(),
        z: None,
        concatenated: None,
        truncated: None,
        empirical: None,
        pure_mc: None,
    };
    if d == 0 {
        report.pure_mc = Some(PureMcReport {
            breakdown: pure_mc_ms_wce(n, &space)?,
            extension: true,
        });
        return Ok(report);
    }
    if d >= s {
        return Err(CliError::config(format!("d = {d} must be smaller than s = {s}")));
    }
    let rec = build(cfg, n, to_usize(d, "d")?, to_usize(s, "s")?)?;
    let rule = cache::rule_of(&rec)?;
    let kind = cfg.rule();
    if kind.concat() {
        let exact = concat_ms_wce_exact(&rule, &space)?;
        if let Some(r) = cfg.replications {
            let spec = ConcatRuleSpec::new(rule.clone(), space.s(), cfg.seed())?;
            let est = concat_ms_wce_empirical(&spec, &space, r)?;
            report.empirical = Some(EmpiricalReport {
                mean: est.mean,
                std_error: est.std_error,
                replications: est.replications,
                seed: cfg.seed(),
                z_score: est.z_score(exact.total),
            });
        }
        report.concatenated = Some(exact);
    } else if cfg.replications.is_some() {
        return Err(CliError::config("replications need the concatenated rule (rule = concat or both)"));
    }
    if kind.truncated() {
        report.truncated = Some(truncated_sq_wce_exact(&rule, &space)?);
    }
    report.z = Some(rec.z);
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub d_used: u64,
    pub exact_total: f64,
    pub mc_term: f64,
    pub lattice_term: f64,
    pub theorem1_bound: f64,
    pub wallclock_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub alpha: f64,
    pub lambda_star: f64,
    pub kappa: f64,
    pub weights: WeightsSpec,
    pub mode: CbcMode,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln exact_total` against `ln N`.
    pub fitted_slope: f64,
}

pub fn convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let ns = cfg.point_counts()?;
    if ns.len() < MIN_CONVERGENCE_POINTS {
        return Err(CliError::config(format!(
            "convergence needs at least {MIN_CONVERGENCE_POINTS} values of N, got {}",
            ns.len()
        )));
    }
    let s_spec = cfg.s()?.ok_or_else(|| CliError::config("s is required"))?;
    let choice = cfg.d_or(DimChoice::Advise)?;
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let start = Instant::now();
        let d = resolve_d(cfg, choice, n, s_spec.cap())?;
        let s = s_spec.resolve(d);
        if d == 0 || d >= s {
            return Err(CliError::config(format!("need 1 <= d < s, got d = {d}, s = {s} at N = {n}")));
        }
        let space = cfg.space(to_usize(s, "s")?)?;
        let rec = build(cfg, n, to_usize(d, "d")?, to_usize(s, "s")?)?;
        let exact = concat_ms_wce_exact(&cache::rule_of(&rec)?, &space)?;
        let bound = theorem1_bound(&BoundParams {
            lambda_star: space.weights().lambda_star(),
            lambda: Lambda::Optimize,
            c: space.weights().decay_constant(),
            alpha: space.alpha(),
            n,
            d,
        })?;
        rows.push(ConvergenceRow {
            n,
            d_used: d,
            exact_total: exact.total,
            mc_term: exact.mc_term,
            lattice_term: exact.lattice_term,
            theorem1_bound: bound,
            wallclock_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.n as f64, r.exact_total)).collect();
    Ok(ConvergenceReport {
        alpha: cfg.alpha(),
        lambda_star: cfg.lambda_star()?,
        kappa: cfg.kappa(),
        weights: cfg.weights_spec(),
        mode: cfg.mode(),
        rows,
        fitted_slope: loglog_slope(&pairs)?,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(hybrid_lattice::Error::Domain("log-log fit needs positive values".into()).into());
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0.ln()).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0.ln() - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CliError::config("log-log fit needs at least two distinct N"));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedReport {
    pub b: u64,
    pub m: u32,
    pub s: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub cost: u128,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdviceRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub d_concat: u64,
    pub d_truncated: u64,
    /// `d·N·⌈log₂ N⌉` with the concatenation advice.
    pub cost_concat: u128,
    pub cost_truncated: u128,
    /// Present when `N` is a power of the configured base.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced: Option<ReducedReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdviceReport {
    pub alpha: f64,
    pub lambda_star: f64,
    pub kappa: f64,
    pub s: u64,
    pub rows: Vec<AdviceRow>,
}

/// `⌈log₂ n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

pub fn construction_cost(d: u64, n: u64) -> u128 {
    u128::from(d) * u128::from(n) * u128::from(ceil_log2(n))
}

/// `m` with `b^m = n`, if any.
fn exact_log(n: u64, b: u64) -> Option<u32> {
    let mut p = 1u64;
    for m in 1.. {
        p = p.checked_mul(b)?;
        if p == n {
            return Some(m);
        }
        if p > n {
            return None;
        }
    }
    None
}

pub fn advise(cfg: &ExperimentConfig) -> Result<AdviceReport> {
    let ns = cfg.point_counts()?;
    let s = match cfg.s()? {
        Some(TotalDim::Fixed(s)) => s,
        Some(TotalDim::PerD(_)) => return Err(CliError::config("advise needs a fixed s")),
        None => return Err(CliError::config("s is required")),
    };
    let (alpha, ls, kappa) = (cfg.alpha(), cfg.lambda_star()?, cfg.kappa());
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let d_concat = advise_d(n, alpha, ls, kappa, s)?;
        let d_truncated = advise_d_truncation(n, alpha, ls, kappa, s)?;
        let reduced = match &cfg.reduced {
            None => None,
            Some(spec) => match exact_log(n, spec.b) {
                None => None,
                Some(m) => {
                    let exponents = match (&spec.exponents, spec.beta) {
                        (Some(w), None) => ReductionExponents::Explicit(w.clone()),
                        (None, Some(beta)) => ReductionExponents::Logarithmic { beta },
                        _ => {
                            return Err(CliError::config(
                                "reduced needs exactly one of beta or exponents",
                            ))
                        }
                    };
                    let rc = ReducedCostParams { b: spec.b, m, s, exponents };
                    Some(ReducedReport {
                        b: spec.b,
                        m,
                        s,
                        beta: spec.beta,
                        cost: hybrid_lattice::bounds::reduced_cbc_cost(&rc)?,
                        estimate: match spec.beta {
                            Some(_) => Some(hybrid_lattice::bounds::reduced_cbc_cost_estimate(&rc)?),
                            None => None,
                        },
                    })
                }
            },
        };
        rows.push(AdviceRow {
            n,
            d_concat,
            d_truncated,
            cost_concat: construction_cost(d_concat, n),
            cost_truncated: construction_cost(d_truncated, n),
            reduced,
        });
    }
    Ok(AdviceReport {
        alpha,
        lambda_star: ls,
        kappa,
        s,
        rows,
    })
}
