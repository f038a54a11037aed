//! Classical verification harness: exact and Monte Carlo crossing
//! probabilities `P(S_n >= a + b n for some n in [m+i, horizon])` for
//! random walks with finite step support.
//!
//! The exact route runs a dynamic program over partial-sum states keyed by
//! scaled integers when the step values and thresholds are commensurable
//! rationals, so threshold comparisons are exact; otherwise it enumerates
//! paths up to a hard cap. The Monte Carlo route gives every path its own
//! counter-based RNG substream and reduces hit counts with an integer sum,
//! so results are bit-identical for a given seed regardless of the number
//! of worker threads.

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Default horizon cap for exact enumeration.
pub const DEFAULT_HORIZON_CAP: usize = 24;

/// Cap on simultaneously live DP states.
const STATE_CAP: u64 = 1 << 22;

/// Cap on enumerated paths in the incommensurable fallback.
const ENUM_CAP: u64 = 1 << 20;

/// Largest denominator tried when converting floats to exact rationals.
const MAX_DENOMINATOR: u64 = 1_000_000;

/// Relative slack for floating-point threshold comparisons.
const HIT_SLACK: f64 = 1e-9;

/// A finite-support step law with values in `[-alpha, beta]` and mean at
/// most `-gamma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDistribution {
    support: Vec<(f64, f64)>,
    alpha: f64,
    beta: f64,
    gamma: f64,
    mean: f64,
}

impl StepDistribution {
    /// Validates that probabilities are positive and sum to 1 within
    /// `1e-12`, values lie in `[-alpha, beta]`, and the mean is at most
    /// `-gamma + 1e-12`.
    pub fn new(support: Vec<(f64, f64)>, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidParams("support must be nonempty".into()));
        }
        if !(alpha > 0.0 && beta > 0.0 && gamma >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "need alpha > 0, beta > 0, gamma >= 0, got alpha={alpha}, beta={beta}, gamma={gamma}"
            )));
        }
        let mut total = 0.0;
        let mut mean = 0.0;
        let range = alpha.max(beta);
        for &(v, p) in &support {
            if !v.is_finite() || !p.is_finite() || p <= 0.0 {
                return Err(Error::InvalidParams(format!("bad support atom ({v}, {p})")));
            }
            if v < -alpha - 1e-12 * (1.0 + range) || v > beta + 1e-12 * (1.0 + range) {
                return Err(Error::InvalidParams(format!(
                    "support value {v} outside [-{alpha}, {beta}]"
                )));
            }
            total += p;
            mean += v * p;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams(format!("probabilities sum to {total}, not 1")));
        }
        if mean > -gamma + 1e-12 {
            return Err(Error::InvalidParams(format!(
                "mean {mean} exceeds the drift bound -gamma = {}",
                -gamma
            )));
        }
        Ok(Self {
            support,
            alpha,
            beta,
            gamma,
            mean,
        })
    }

    /// The extremal two-point law: value `beta` with probability
    /// `(alpha - gamma) / (alpha + beta)`, value `-alpha` with probability
    /// `(beta + gamma) / (alpha + beta)`; its mean is `-gamma` exactly.
    pub fn two_point(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha > gamma && gamma >= 0.0 && beta > 0.0) {
            return Err(Error::InvalidParams(format!(
                "two-point law needs alpha > gamma >= 0 and beta > 0, got alpha={alpha}, beta={beta}, gamma={gamma}"
            )));
        }
        let p_up = (alpha - gamma) / (alpha + beta);
        let p_down = (beta + gamma) / (alpha + beta);
        Self::new(vec![(beta, p_up), (-alpha, p_down)], alpha, beta, gamma)
    }

    /// Uniform law over explicitly listed values (the factor marginal of
    /// the operator chains).
    pub fn uniform(values: &[f64], alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let p = 1.0 / values.len() as f64;
        Self::new(values.iter().map(|&v| (v, p)).collect(), alpha, beta, gamma)
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Monte Carlo estimate of a crossing probability with a 95% Wilson
/// confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingEstimate {
    pub n_paths: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub horizon: usize,
    pub seed: u64,
}

/// Either route to a crossing probability, for bound comparison.
#[derive(Debug, Clone)]
pub enum CrossingResult {
    Exact { value: f64 },
    Estimate(CrossingEstimate),
}

/// Outcome of comparing a crossing probability with a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVerdict {
    Pass,
    Warn,
    Fail,
}

impl BoundVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Warn => "warn",
            Self::Fail => "fail",
        }
    }
}

fn check_window(m: u32, i: u64, horizon: usize) -> Result<usize> {
    let start = m as usize + i as usize;
    if start == 0 {
        return Err(Error::InvalidParams("first checked index m + i must be at least 1".into()));
    }
    if horizon < start {
        return Err(Error::InvalidHorizon { horizon, start });
    }
    Ok(start)
}

/// Whether `sum` crosses the threshold `a + b n`, with relative slack so
/// exact-equality crossings survive floating-point accumulation.
fn crosses(sum: f64, a: f64, b: f64, n: usize) -> bool {
    let theta = a + b * n as f64;
    sum >= theta - HIT_SLACK * (1.0 + theta.abs())
}

/// Estimates `P(S_n >= a + bn for some n in [m+i, horizon])` over
/// `n_paths` independent paths. Fully reproducible from `seed`: path `k`
/// draws from stream `k` of a counter-based generator, and the hit count
/// is an integer sum, so thread scheduling cannot change the result.
pub fn simulate_crossing(
    dist: &StepDistribution,
    a: f64,
    b: f64,
    m: u32,
    i: u64,
    horizon: usize,
    n_paths: u64,
    seed: u64,
) -> Result<CrossingEstimate> {
    let start = check_window(m, i, horizon)?;
    if n_paths == 0 {
        return Err(Error::InvalidParams("n_paths must be at least 1".into()));
    }
    let support = dist.support.clone();
    let hits: u64 = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(path);
            let mut sum = 0.0;
            for n in 1..=horizon {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut value = support[support.len() - 1].0;
                for &(v, p) in &support {
                    acc += p;
                    if u < acc {
                        value = v;
                        break;
                    }
                }
                sum += value;
                if n >= start && crosses(sum, a, b, n) {
                    return 1u64;
                }
            }
            0u64
        })
        .sum();
    let p_hat = hits as f64 / n_paths as f64;
    let (ci_low, ci_high) = wilson_interval(hits, n_paths);
    Ok(CrossingEstimate {
        n_paths,
        hits,
        p_hat,
        ci_low,
        ci_high,
        horizon,
        seed,
    })
}

/// 95% Wilson score interval for `hits` successes in `n` trials.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    let n_f = n as f64;
    let p = hits as f64 / n_f;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = (Z / denom) * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    // At the extremes center - half is 0 or 1 exactly, modulo rounding.
    let low = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if hits == n { 1.0 } else { (center + half).min(1.0) };
    (low, high)
}

/// Exact crossing probability with the default horizon cap.
pub fn enumerate_exact(
    dist: &StepDistribution,
    a: f64,
    b: f64,
    m: u32,
    i: u64,
    horizon: usize,
) -> Result<f64> {
    enumerate_exact_capped(dist, a, b, m, i, horizon, DEFAULT_HORIZON_CAP)
}

/// Exact crossing probability via dynamic programming over scaled-integer
/// partial sums (when step values and thresholds are commensurable) or
/// path enumeration otherwise. Paths are absorbed at their first crossing.
pub fn enumerate_exact_capped(
    dist: &StepDistribution,
    a: f64,
    b: f64,
    m: u32,
    i: u64,
    horizon: usize,
    horizon_cap: usize,
) -> Result<f64> {
    let start = check_window(m, i, horizon)?;
    if horizon > horizon_cap {
        return Err(Error::StateSpaceTooLarge {
            size: horizon as u64,
            cap: horizon_cap as u64,
        });
    }
    if let Some(scaled) = scale_to_integers(dist, a, b) {
        return dp_exact(dist, &scaled, start, horizon);
    }
    enumerate_paths(dist, a, b, start, horizon)
}

/// Scaled-integer view of the problem: step values and the threshold
/// coefficients multiplied by a common denominator.
struct ScaledProblem {
    steps: Vec<i64>,
    a: i64,
    b: i64,
}

/// Finds `x ~ p/q` with `q <= max_den` and relative error below `1e-12`.
pub(crate) fn rationalize(x: f64, max_den: u64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    let tol = 1e-12 * x.abs().max(1.0);
    for q in 1..=max_den {
        let p = (x * q as f64).round();
        if p.abs() > i64::MAX as f64 / 4.0 {
            return None;
        }
        if (p / q as f64 - x).abs() <= tol {
            let p = p as i64;
            let g = p.unsigned_abs().gcd(&q).max(1);
            return Some((p / g as i64, q / g));
        }
    }
    None
}

fn scale_to_integers(dist: &StepDistribution, a: f64, b: f64) -> Option<ScaledProblem> {
    let mut denominators: Vec<u64> = Vec::new();
    let mut fractions: Vec<(i64, u64)> = Vec::new();
    for x in dist.support.iter().map(|&(v, _)| v).chain([a, b]) {
        let (p, q) = rationalize(x, MAX_DENOMINATOR)?;
        denominators.push(q);
        fractions.push((p, q));
    }
    let mut scale: u64 = 1;
    for q in denominators {
        scale = scale.checked_mul(q / scale.gcd(&q))?;
        if scale > MAX_DENOMINATOR {
            return None;
        }
    }
    let to_int = |&(p, q): &(i64, u64)| p.checked_mul((scale / q) as i64);
    let n = dist.support.len();
    let steps: Option<Vec<i64>> = fractions[..n].iter().map(to_int).collect();
    Some(ScaledProblem {
        steps: steps?,
        a: to_int(&fractions[n])?,
        b: to_int(&fractions[n + 1])?,
    })
}

fn dp_exact(
    dist: &StepDistribution,
    scaled: &ScaledProblem,
    start: usize,
    horizon: usize,
) -> Result<f64> {
    let probs: Vec<f64> = dist.support.iter().map(|&(_, p)| p).collect();
    let mut states: BTreeMap<i64, f64> = BTreeMap::new();
    states.insert(0, 1.0);
    let mut crossed_mass = 0.0;
    for n in 1..=horizon {
        let mut next: BTreeMap<i64, f64> = BTreeMap::new();
        for (&s, &pr) in &states {
            for (&v, &p) in scaled.steps.iter().zip(&probs) {
                *next.entry(s + v).or_insert(0.0) += pr * p;
            }
        }
        if n >= start {
            let threshold = scaled.a + scaled.b * n as i64;
            let above = next.split_off(&threshold);
            crossed_mass += above.values().sum::<f64>();
        }
        if next.len() as u64 > STATE_CAP {
            return Err(Error::StateSpaceTooLarge {
                size: next.len() as u64,
                cap: STATE_CAP,
            });
        }
        states = next;
    }
    Ok(crossed_mass)
}

fn enumerate_paths(
    dist: &StepDistribution,
    a: f64,
    b: f64,
    start: usize,
    horizon: usize,
) -> Result<f64> {
    let k = dist.support.len() as u64;
    let mut total: u64 = 1;
    for _ in 0..horizon {
        total = total.checked_mul(k).ok_or(Error::StateSpaceTooLarge {
            size: u64::MAX,
            cap: ENUM_CAP,
        })?;
        if total > ENUM_CAP {
            return Err(Error::StateSpaceTooLarge {
                size: total,
                cap: ENUM_CAP,
            });
        }
    }
    fn recurse(
        dist: &StepDistribution,
        a: f64,
        b: f64,
        start: usize,
        horizon: usize,
        n: usize,
        sum: f64,
        prob: f64,
    ) -> f64 {
        if n > horizon {
            return 0.0;
        }
        let mut acc = 0.0;
        for &(v, p) in dist.support() {
            let s = sum + v;
            let pr = prob * p;
            if n >= start && crosses(s, a, b, n) {
                acc += pr;
            } else {
                acc += recurse(dist, a, b, start, horizon, n + 1, s, pr);
            }
        }
        acc
    }
    Ok(recurse(dist, a, b, start, horizon, 1, 0.0, 1.0))
}

/// Compares a crossing probability against `rhs(m)` from a bound report.
/// Exact values pass iff `value <= rhs + 1e-12`. Estimates fail only when
/// the whole confidence interval sits above `rhs`; an estimate above `rhs`
/// with a straddling interval is a warning.
pub fn compare_bound(result: &CrossingResult, report: &BoundReport, m: u32) -> Result<BoundVerdict> {
    let rhs = *report.rhs_by_m().get(&m).ok_or_else(|| {
        Error::ParameterMismatch(format!("report has no rhs for m = {m}"))
    })?;
    Ok(match result {
        CrossingResult::Exact { value } => {
            if *value <= rhs + 1e-12 {
                BoundVerdict::Pass
            } else {
                BoundVerdict::Fail
            }
        }
        CrossingResult::Estimate(e) => {
            if e.ci_low > rhs {
                BoundVerdict::Fail
            } else if e.p_hat > rhs {
                BoundVerdict::Warn
            } else {
                BoundVerdict::Pass
            }
        }
    })
}
