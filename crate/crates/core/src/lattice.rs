//! Join, meet, and order on projections, and the maximal tail events
//! whose traces are the left-hand sides of the concentration bounds.
//!
//! Infinite joins are truncated at a caller-supplied horizon. The
//! truncated trace is monotone in the horizon while the bounds are not,
//! so "truncated LHS <= RHS" is sound for every horizon.

use crate::error::{Error, Result};
use crate::martingale::AdaptedSequence;
use crate::operator::{op_norm_general, spectral_projection, CMatrix, Projection};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Relative singular-value threshold for rank decisions in joins,
/// multiplied by the ambient dimension.
pub const RANK_TOL: f64 = 1e-9;

/// Absolute tolerance for meet eigenspace selection and order checks.
pub const LATTICE_TOL: f64 = 1e-8;

fn check_dims(p: &Projection, q: &Projection) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    Ok(())
}

/// When every basis column is a standard unit vector, the set of row
/// indices carrying the range.
fn standard_indices(p: &Projection) -> Option<BTreeSet<usize>> {
    crate::operator::unit_column_indices(p.range_basis())
        .map(|v| v.into_iter().collect())
}

fn projection_from_indices(dim: usize, indices: &BTreeSet<usize>) -> Projection {
    let mut basis = CMatrix::zeros(dim, indices.len());
    for (col, &row) in indices.iter().enumerate() {
        basis[(row, col)] = num_complex::Complex64::new(1.0, 0.0);
    }
    Projection::from_basis(dim, basis)
}

/// Projection onto `range(p) + range(q)`, computed by orthonormalizing the
/// concatenated range bases; singular values above `RANK_TOL * D` relative
/// to the largest one count toward the rank. Exactly diagonal projections
/// are joined as index sets.
pub fn join(p: &Projection, q: &Projection) -> Result<Projection> {
    check_dims(p, q)?;
    if p.rank() == 0 {
        return Ok(q.clone());
    }
    if q.rank() == 0 {
        return Ok(p.clone());
    }
    if let (Some(a), Some(b)) = (standard_indices(p), standard_indices(q)) {
        let union: BTreeSet<usize> = a.union(&b).copied().collect();
        return Ok(projection_from_indices(p.dim(), &union));
    }
    let d = p.dim();
    let mut stacked = CMatrix::zeros(d, p.rank() + q.rank());
    for c in 0..p.rank() {
        for r in 0..d {
            stacked[(r, c)] = p.range_basis()[(r, c)];
        }
    }
    for c in 0..q.rank() {
        for r in 0..d {
            stacked[(r, p.rank() + c)] = q.range_basis()[(r, c)];
        }
    }
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let cut = RANK_TOL * d as f64 * sigma_max;
    let kept: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cut)
        .map(|(i, _)| i)
        .collect();
    let basis = crate::operator::select_columns(&u, &kept);
    Ok(Projection::from_basis(d, basis))
}

/// Projection onto `range(p) ∩ range(q)`, computed as the eigenspace of
/// `p + q` at eigenvalue 2 within [`LATTICE_TOL`].
pub fn meet(p: &Projection, q: &Projection) -> Result<Projection> {
    check_dims(p, q)?;
    if p.rank() == 0 || q.rank() == 0 {
        return Ok(Projection::zero(p.dim()));
    }
    if let (Some(a), Some(b)) = (standard_indices(p), standard_indices(q)) {
        let inter: BTreeSet<usize> = a.intersection(&b).copied().collect();
        return Ok(projection_from_indices(p.dim(), &inter));
    }
    let sum = p.operator().add(q.operator());
    let dec = sum.eigendecompose();
    let cols: Vec<usize> = dec
        .eigenvalues()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l >= 2.0 - LATTICE_TOL)
        .map(|(i, _)| i)
        .collect();
    let basis = crate::operator::select_columns(dec.eigenvectors(), &cols);
    Ok(Projection::from_basis(p.dim(), basis))
}

/// Range inclusion `p <= q`, decided as `||q p - p||_op <= LATTICE_TOL`.
pub fn leq_proj(p: &Projection, q: &Projection) -> Result<bool> {
    check_dims(p, q)?;
    // q p - p = (q - 1) p has the same norm restricted to the range basis.
    let residual = q.operator().entries() * p.range_basis() - p.range_basis();
    Ok(op_norm_general(&residual) <= LATTICE_TOL)
}

/// Affine threshold family `theta_n = offset + slope * n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub offset: f64,
    pub slope: f64,
}

impl ThresholdSpec {
    pub fn new(offset: f64, slope: f64) -> Self {
        Self { offset, slope }
    }

    pub fn eval(&self, n: usize) -> f64 {
        self.offset + self.slope * n as f64
    }
}

/// Truncated maximal event: the join over `n` in `[start, horizon]` of the
/// spectral projections of `s_n` above `theta_n`, with its normalized trace.
#[derive(Debug, Clone)]
pub struct TailEvent {
    start: usize,
    horizon: usize,
    spec: ThresholdSpec,
    thresholds: Vec<f64>,
    projection: Projection,
    trace: f64,
}

impl TailEvent {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn threshold_spec(&self) -> ThresholdSpec {
        self.spec
    }

    /// Evaluated thresholds for `n` in `[start, horizon]`.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    /// Normalized trace, `rank / D` exactly.
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Report form: start, horizon, trace, and the threshold descriptor.
    pub fn summary(&self) -> TailEventSummary {
        TailEventSummary {
            start: self.start,
            horizon: self.horizon,
            trace: self.trace,
            thresholds: self.spec,
        }
    }
}

/// Serializable view of a [`TailEvent`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailEventSummary {
    pub start: usize,
    pub horizon: usize,
    pub trace: f64,
    pub thresholds: ThresholdSpec,
}

/// Joins the spectral projections `1_{[theta_n, inf)}(s_n)` for `n` in
/// `[start, horizon]`, left to right in index order.
pub fn tail_event(
    seq: &AdaptedSequence,
    spec: ThresholdSpec,
    start: usize,
    horizon: usize,
) -> Result<TailEvent> {
    if start > horizon || horizon > seq.max_index() {
        return Err(Error::RangeError(format!(
            "need start <= horizon <= {}, got start={start}, horizon={horizon}",
            seq.max_index()
        )));
    }
    let d = seq.op(0).dim();
    let mut acc = Projection::zero(d);
    let mut thresholds = Vec::with_capacity(horizon - start + 1);
    for n in start..=horizon {
        let theta = spec.eval(n);
        thresholds.push(theta);
        let p = spectral_projection(seq.op(n), theta, f64::INFINITY);
        acc = join(&acc, &p)?;
    }
    let trace = acc.trace();
    Ok(TailEvent {
        start,
        horizon,
        spec,
        thresholds,
        projection: acc,
        trace,
    })
}

/// Traces of `tail_event` for each start in `m_list`; the family is
/// non-increasing in `m`, witnessing the vanishing-limit corollary.
pub fn tail_meet_trace(
    seq: &AdaptedSequence,
    spec: ThresholdSpec,
    m_list: &[usize],
    horizon: usize,
) -> Result<Vec<(usize, f64)>> {
    if m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::RangeError("m_list must increase strictly".into()));
    }
    if let Some(&last) = m_list.last() {
        if last > horizon {
            return Err(Error::RangeError(format!(
                "largest m {last} exceeds horizon {horizon}"
            )));
        }
    }
    m_list
        .iter()
        .map(|&m| tail_event(seq, spec, m, horizon).map(|e| (m, e.trace())))
        .collect()
}
