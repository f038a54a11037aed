//! Adapted operator sequences, (super)martingale classification, bounded
//! difference checks, and moment-generating-function envelopes.

use crate::error::{Error, Result};
use crate::operator::{func_calculus, HermitianOperator, SPECTRAL_TOL};
use crate::space::Filtration;
use serde::{Deserialize, Serialize};

/// Classification of an adapted sequence under the filtration's
/// conditional expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MartingaleKind {
    Martingale,
    Supermartingale,
    Unverified,
}

impl MartingaleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Martingale => "martingale",
            Self::Supermartingale => "supermartingale",
            Self::Unverified => "unverified",
        }
    }
}

/// A sequence `s_0, s_1, ...` of Hermitian operators, each measurable at
/// its filtration level (`s_j` at level `min(j, K)`), together with the
/// strongest classification established for it.
#[derive(Debug, Clone)]
pub struct AdaptedSequence {
    filtration: Filtration,
    ops: Vec<HermitianOperator>,
    kind: MartingaleKind,
}

impl AdaptedSequence {
    /// Validates dimensions and adaptedness: the conditional-expectation
    /// residual of `s_j` at level `min(j, K)` must stay within
    /// `SPECTRAL_TOL * (1 + op_norm)`.
    pub fn new(filtration: Filtration, ops: Vec<HermitianOperator>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::RangeError("sequence needs at least one element".into()));
        }
        let d = filtration.space().total_dim();
        for op in &ops {
            if op.dim() != d {
                return Err(Error::DimensionMismatch {
                    left: op.dim(),
                    right: d,
                });
            }
        }
        let k = filtration.level_count();
        for (j, op) in ops.iter().enumerate() {
            let level = j.min(k);
            if level == k {
                continue;
            }
            let projected = filtration.cond_exp(level, op)?;
            let residual = op.sub(&projected).op_norm();
            if residual > SPECTRAL_TOL * (1.0 + op.op_norm()) {
                return Err(Error::NotAdapted { index: j, residual });
            }
        }
        Ok(Self {
            filtration,
            ops,
            kind: MartingaleKind::Unverified,
        })
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    /// Number of elements (`s_0` included).
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Largest valid time index; elements are `s_0..=s_max_index`.
    pub fn max_index(&self) -> usize {
        self.ops.len() - 1
    }

    pub fn op(&self, j: usize) -> &HermitianOperator {
        &self.ops[j]
    }

    pub fn ops(&self) -> &[HermitianOperator] {
        &self.ops
    }

    pub fn kind(&self) -> MartingaleKind {
        self.kind
    }

    pub(crate) fn with_kind(mut self, kind: MartingaleKind) -> Self {
        self.kind = kind;
        self
    }

    /// Reclassifies and stores the result.
    pub fn classified(self, tol: f64) -> Result<Self> {
        let kind = self.classify(tol)?;
        Ok(self.with_kind(kind))
    }

    /// Difference sequence `dx_0 = s_0`, `dx_j = s_j - s_{j-1}`.
    pub fn differences(&self) -> Vec<HermitianOperator> {
        let mut out = Vec::with_capacity(self.ops.len());
        out.push(self.ops[0].clone());
        for j in 1..self.ops.len() {
            out.push(self.ops[j].sub(&self.ops[j - 1]));
        }
        out
    }

    /// Determines the strongest property that holds within `tol`
    /// (relative to `1 + op_norm` of each element): a martingale has
    /// `E_{j-1}(s_j) = s_{j-1}`, a supermartingale `E_{j-1}(s_j) <= s_{j-1}`.
    pub fn classify(&self, tol: f64) -> Result<MartingaleKind> {
        let k = self.filtration.level_count();
        let mut kind = MartingaleKind::Martingale;
        for j in 1..self.ops.len() {
            let level = (j - 1).min(k);
            let projected = self.filtration.cond_exp(level, &self.ops[j])?;
            let delta = projected.sub(&self.ops[j - 1]);
            let scale = 1.0 + self.ops[j].op_norm();
            if delta.op_norm() <= tol * scale {
                continue;
            }
            // Largest eigenvalue of E_{j-1}(s_j) - s_{j-1} decides the
            // one-sided property.
            let max_eig = -delta.scale(-1.0).min_eigenvalue();
            if max_eig <= tol * scale {
                kind = MartingaleKind::Supermartingale;
            } else {
                return Ok(MartingaleKind::Unverified);
            }
        }
        Ok(kind)
    }

    /// Margins of the two-sided difference bounds `-alpha <= dx_j <= beta`
    /// over `j >= 1`. Margins are `lambda_min(dx) + alpha` and
    /// `beta - lambda_max(dx)`, minimized over steps.
    pub fn check_bounded_differences(&self, alpha: f64, beta: f64) -> BoundedDifferences {
        let mut lower = f64::INFINITY;
        let mut upper = f64::INFINITY;
        let mut scale = 1.0 + alpha.abs().max(beta.abs());
        for j in 1..self.ops.len() {
            let dx = self.ops[j].sub(&self.ops[j - 1]);
            let min = dx.min_eigenvalue();
            let max = -dx.scale(-1.0).min_eigenvalue();
            lower = lower.min(min + alpha);
            upper = upper.min(beta - max);
            scale = scale.max(1.0 + dx.op_norm());
        }
        BoundedDifferences {
            lower_margin: lower,
            upper_margin: upper,
            within_bounds: lower >= -SPECTRAL_TOL * scale && upper >= -SPECTRAL_TOL * scale,
        }
    }

    /// Worst margin of the envelope condition
    /// `E_{n-1}(e^{t dx_n}) <= f(t) * 1` over all steps and grid points:
    /// the minimum of `f(t) - lambda_max(E_{n-1}(e^{t dx_n}))`. Negative
    /// values witness a violation; an empty check set gives +infinity.
    pub fn check_mgf_condition(&self, env: &MgfEnvelope, t_grid: &[f64]) -> Result<f64> {
        let k = self.filtration.level_count();
        let mut worst = f64::INFINITY;
        for n in 1..self.ops.len() {
            let dx = self.ops[n].sub(&self.ops[n - 1]);
            let level = (n - 1).min(k);
            let diag = dx.diagonal_entries();
            let dec = if diag.is_none() { Some(dx.eigendecompose()) } else { None };
            for &t in t_grid {
                let exp_dx = match (&diag, &dec) {
                    (Some(d), _) => {
                        let mut mapped = Vec::with_capacity(d.len());
                        for &l in d {
                            let v = (t * l).exp();
                            if !v.is_finite() {
                                return Err(Error::NonFiniteResult { eigenvalue: l, value: v });
                            }
                            mapped.push(v);
                        }
                        HermitianOperator::from_diagonal(&mapped)
                    }
                    (None, Some(dec)) => dec.apply(|l| (t * l).exp())?,
                    _ => unreachable!(),
                };
                // E_{n-1}(e^{t dx}) is (compressed block) tensor identity,
                // so its largest eigenvalue is read off the compressed block.
                let compressed = self
                    .filtration
                    .partial_trace_normalized(level, exp_dx.entries());
                let max_eig = if level == k {
                    // Nothing to trace out; bound the full matrix.
                    exp_dx
                        .entries()
                        .clone()
                        .symmetric_eigenvalues()
                        .iter()
                        .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
                } else {
                    compressed
                        .symmetric_eigenvalues()
                        .iter()
                        .fold(f64::NEG_INFINITY, |m, &v| m.max(v))
                };
                worst = worst.min(env.f(t) - max_eig);
            }
        }
        Ok(worst)
    }

    /// Auxiliary positive sequence `y_n = e^{-t(a + b n)} e^{t s_n}` whose
    /// trace contracts geometrically under the envelope condition.
    pub fn aux_sequence(&self, a: f64, b: f64, t: f64) -> Result<Vec<HermitianOperator>> {
        let mut out = Vec::with_capacity(self.ops.len());
        for (n, s) in self.ops.iter().enumerate() {
            let shift = -t * (a + b * n as f64);
            let y = func_calculus(s, |l| (t * l + shift).exp())?;
            out.push(y);
        }
        Ok(out)
    }
}

/// Result of a two-sided difference-bound check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundedDifferences {
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub within_bounds: bool,
}

/// Shape of a moment-generating-function envelope `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvelopeKind {
    /// Two-point envelope `f(t) = p e^{t beta} + q e^{-t alpha}` with
    /// `p = (alpha - gamma) / (alpha + beta)`, `q = (beta + gamma) / (alpha + beta)`.
    TwoPoint { alpha: f64, beta: f64 },
    /// The parabola itself: `f(t) = e^{-gamma t + lambda t^2}`.
    Saturated,
    /// Piecewise-linear interpolation of `ln f` over a tabulated grid;
    /// outside the table the parabola is used (a valid, weaker envelope).
    Table { ts: Vec<f64>, log_fs: Vec<f64> },
}

/// An envelope `f` with drift `gamma >= 0` and curvature `lambda > 0`,
/// guaranteed to satisfy `f > 0` and `ln f(t) <= -gamma t + lambda t^2`
/// on the default validation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MgfEnvelope {
    kind: EnvelopeKind,
    gamma: f64,
    lambda: f64,
}

impl MgfEnvelope {
    pub fn new(kind: EnvelopeKind, gamma: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParams(format!("gamma must be nonnegative, got {gamma}")));
        }
        match &kind {
            EnvelopeKind::TwoPoint { alpha, beta } => {
                if !(*alpha > gamma) {
                    return Err(Error::InvalidParams(format!(
                        "two-point envelope needs alpha > gamma, got alpha={alpha}, gamma={gamma}"
                    )));
                }
                if !(*beta > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "two-point envelope needs beta > 0, got {beta}"
                    )));
                }
            }
            EnvelopeKind::Saturated => {}
            EnvelopeKind::Table { ts, log_fs } => {
                if ts.len() != log_fs.len() || ts.len() < 2 {
                    return Err(Error::InvalidParams(
                        "table envelope needs matching grids of length >= 2".into(),
                    ));
                }
                if ts.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidParams("table abscissae must increase strictly".into()));
                }
                if ts.iter().chain(log_fs.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidParams("table entries must be finite".into()));
                }
            }
        }
        let env = Self { kind, gamma, lambda };
        for t in env.default_grid() {
            let bound = -gamma * t + lambda * t * t;
            let lf = env.ln_f(t);
            if lf > bound + 1e-9 * (1.0 + bound.abs()) {
                return Err(Error::InvalidParams(format!(
                    "envelope exceeds e^(-gamma t + lambda t^2) at t={t}: ln f = {lf}, bound = {bound}"
                )));
            }
        }
        Ok(env)
    }

    /// Two-point envelope for differences in `[-alpha, beta]` with drift
    /// `gamma`, paired with its natural curvature `(alpha+beta)^2 / 8`.
    pub fn two_point(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let lambda = (alpha + beta).powi(2) / 8.0;
        Self::new(EnvelopeKind::TwoPoint { alpha, beta }, gamma, lambda)
    }

    /// The saturated envelope `e^{-gamma t + lambda t^2}`.
    pub fn saturated(gamma: f64, lambda: f64) -> Result<Self> {
        Self::new(EnvelopeKind::Saturated, gamma, lambda)
    }

    pub fn kind(&self) -> &EnvelopeKind {
        &self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `ln f(t)`, evaluated in the log domain so large arguments do not
    /// overflow.
    pub fn ln_f(&self, t: f64) -> f64 {
        match &self.kind {
            EnvelopeKind::TwoPoint { alpha, beta } => {
                let p = (alpha - self.gamma) / (alpha + beta);
                let q = (beta + self.gamma) / (alpha + beta);
                log_sum_exp(p.ln() + t * beta, q.ln() - t * alpha)
            }
            EnvelopeKind::Saturated => -self.gamma * t + self.lambda * t * t,
            EnvelopeKind::Table { ts, log_fs } => {
                if t < ts[0] || t > *ts.last().expect("nonempty table") {
                    return -self.gamma * t + self.lambda * t * t;
                }
                let pos = ts.partition_point(|&u| u < t);
                if pos == 0 {
                    return log_fs[0];
                }
                if ts[pos - 1] == t {
                    return log_fs[pos - 1];
                }
                let (t0, t1) = (ts[pos - 1], ts[pos]);
                let (f0, f1) = (log_fs[pos - 1], log_fs[pos]);
                f0 + (f1 - f0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// `f(t)`; may overflow to infinity for extreme arguments, which the
    /// bound evaluators avoid by staying in the log domain.
    pub fn f(&self, t: f64) -> f64 {
        self.ln_f(t).exp()
    }

    /// 64 log-spaced points from `1e-3` to `10 (1 + gamma) / lambda`, the
    /// grid used for envelope validation and default MGF checks.
    pub fn default_grid(&self) -> Vec<f64> {
        let t_ref = (1.0 + self.gamma) / self.lambda;
        log_spaced_grid(1e-3, (10.0 * t_ref).max(2e-3), 64)
    }
}

/// `n` log-spaced points covering `[lo, hi]`, endpoints included.
pub fn log_spaced_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Parameters shared by the bound evaluators: difference bounds
/// `[-alpha, beta]`, drift `gamma`, curvature `lambda`, affine threshold
/// `a + b n`, linear threshold `c n`, and the number of epochs `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: u32,
}

impl BoundParams {
    /// Validates positivity: `alpha, beta, lambda, a, b, c > 0`,
    /// `gamma >= 0`, `m >= 1`.
    pub fn new(
        alpha: f64,
        beta: f64,
        gamma: f64,
        lambda: f64,
        a: f64,
        b: f64,
        c: f64,
        m: u32,
    ) -> Result<Self> {
        let params = Self {
            alpha,
            beta,
            gamma,
            lambda,
            a,
            b,
            c,
            m,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v, needs_positive) in [
            ("alpha", self.alpha, true),
            ("beta", self.beta, true),
            ("gamma", self.gamma, false),
            ("lambda", self.lambda, true),
            ("a", self.a, true),
            ("b", self.b, true),
            ("c", self.c, true),
        ] {
            if !v.is_finite() || (needs_positive && !(v > 0.0)) || (!needs_positive && !(v >= 0.0)) {
                return Err(Error::InvalidParams(format!("{name} = {v} out of range")));
            }
        }
        if self.m == 0 {
            return Err(Error::InvalidParams("m must be at least 1".into()));
        }
        Ok(())
    }

    /// Symmetric unit differences: `alpha = beta = 1`, no drift,
    /// `lambda = 1/2`.
    pub fn hoeffding() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.0,
            lambda: 0.5,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            m: 3,
        }
    }

    /// Asymmetric differences in `[-2, 1]`, no drift, `lambda = 9/8`.
    pub fn asymmetric() -> Self {
        Self {
            alpha: 2.0,
            beta: 1.0,
            gamma: 0.0,
            lambda: 1.125,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            m: 3,
        }
    }

    /// Differences in `[-2, 1]` with drift `gamma = 1/2`, `lambda = 9/8`.
    pub fn khan_drift() -> Self {
        Self {
            alpha: 2.0,
            beta: 1.0,
            gamma: 0.5,
            lambda: 1.125,
            a: 1.0,
            b: 1.0,
            c: 1.0,
            m: 3,
        }
    }
}
