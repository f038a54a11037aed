//! Dense Hermitian operator algebra with a normalized trace.
//!
//! Every spectral quantity in the crate (matrix exponentials, functional
//! calculus, spectral projections, positivity tests, operator norms) routes
//! through the eigendecomposition implemented here, so the ordering and
//! phase conventions and the tolerance scales are fixed in one place.
//!
//! Conventions:
//! * eigenvalues are sorted ascending, ties broken by original column index;
//! * each eigenvector is rescaled so its first component of modulus at least
//!   `1e-8` times the column maximum is real and positive;
//! * exactly diagonal matrices (all off-diagonal entries bit-zero) take an
//!   allocation-light path whose eigenvectors are standard basis columns, so
//!   diagonal chains stay exactly diagonal through every operation.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for the Hermitian symmetry invariant.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Relative tolerance for derived spectral quantities (projections,
/// positivity margins, norm comparisons).
pub const SPECTRAL_TOL: f64 = 1e-9;

/// Minimum relative modulus for the component that anchors the
/// eigenvector phase convention.
const PHASE_ANCHOR_TOL: f64 = 1e-8;

/// A Hermitian matrix with its dimension, kept exactly equal to its own
/// conjugate transpose.
///
/// Constructors symmetrize their input (after checking the asymmetry is
/// within [`HERMITIAN_TOL`]), so the Hermitian invariant holds bitwise,
/// not merely approximately. Sums, real scalings, and conditional
/// expectations of exactly Hermitian matrices stay exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    dim: usize,
    entries: CMatrix,
}

impl HermitianOperator {
    /// Validates that `entries` is square, finite, and Hermitian within
    /// `HERMITIAN_TOL * max(1, max |entry|)`, then stores the exactly
    /// symmetrized matrix `(m + m*)/2`.
    pub fn new(entries: CMatrix) -> Result<Self> {
        let (r, c) = entries.shape();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch { left: r, right: c });
        }
        let mut max_entry: f64 = 0.0;
        for v in entries.iter() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteInput);
            }
            max_entry = max_entry.max(v.norm());
        }
        let tol = HERMITIAN_TOL * max_entry.max(1.0);
        let mut max_asymmetry: f64 = 0.0;
        for i in 0..r {
            for j in i..r {
                let delta = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                max_asymmetry = max_asymmetry.max(delta);
            }
        }
        if max_asymmetry > tol {
            return Err(Error::NonHermitianInput { max_asymmetry, tol });
        }
        Ok(Self::symmetrize(entries))
    }

    /// Symmetrizes without validating; for internal results that are
    /// Hermitian by construction up to roundoff.
    pub(crate) fn symmetrize(mut entries: CMatrix) -> Self {
        let d = entries.nrows();
        for i in 0..d {
            entries[(i, i)] = Complex64::new(entries[(i, i)].re, 0.0);
            for j in (i + 1)..d {
                let avg = (entries[(i, j)] + entries[(j, i)].conj()) * 0.5;
                entries[(i, j)] = avg;
                entries[(j, i)] = avg.conj();
            }
        }
        Self { dim: d, entries }
    }

    /// Wraps a matrix that is exactly Hermitian by construction
    /// (real diagonal assembly, exact conjugate pairs). Debug builds check.
    pub(crate) fn from_exact(entries: CMatrix) -> Self {
        debug_assert_eq!(entries.nrows(), entries.ncols());
        debug_assert!(entries == entries.adjoint(), "from_exact input not exactly Hermitian");
        Self {
            dim: entries.nrows(),
            entries,
        }
    }

    /// Zero operator of dimension `d`.
    pub fn zeros(d: usize) -> Self {
        Self {
            dim: d,
            entries: CMatrix::zeros(d, d),
        }
    }

    /// Identity operator of dimension `d`.
    pub fn identity(d: usize) -> Self {
        Self::scaled_identity(d, 1.0)
    }

    /// `c` times the identity of dimension `d`.
    pub fn scaled_identity(d: usize, c: f64) -> Self {
        let mut m = CMatrix::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = Complex64::new(c, 0.0);
        }
        Self { dim: d, entries: m }
    }

    /// Diagonal operator with the given real diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut m = CMatrix::zeros(d, d);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        Self { dim: d, entries: m }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Consumes the operator, returning the raw matrix.
    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    /// Returns the real diagonal when every off-diagonal entry is bit-zero.
    pub fn diagonal_entries(&self) -> Option<Vec<f64>> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    let v = self.entries[(i, j)];
                    if v.re != 0.0 || v.im != 0.0 {
                        return None;
                    }
                }
            }
        }
        Some((0..self.dim).map(|i| self.entries[(i, i)].re).collect())
    }

    /// Largest entry modulus; the scale used by relative tolerances.
    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    /// Operator (spectral) norm: largest eigenvalue modulus.
    pub fn op_norm(&self) -> f64 {
        if let Some(diag) = self.diagonal_entries() {
            return diag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        }
        self.entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        if let Some(diag) = self.diagonal_entries() {
            return diag.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        }
        self.entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// Entrywise sum with another operator. Panics on dimension mismatch;
    /// arithmetic helpers are for code that has already checked shapes.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        Self {
            dim: self.dim,
            entries: &self.entries + &other.entries,
        }
    }

    /// Entrywise difference.
    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "operator dimensions differ");
        Self {
            dim: self.dim,
            entries: &self.entries - &other.entries,
        }
    }

    /// Real scalar multiple.
    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            entries: &self.entries * Complex64::new(c, 0.0),
        }
    }

    /// Adds `c` times the identity.
    pub fn shift(&self, c: f64) -> Self {
        let mut entries = self.entries.clone();
        for i in 0..self.dim {
            entries[(i, i)] += Complex64::new(c, 0.0);
        }
        Self {
            dim: self.dim,
            entries,
        }
    }

    /// Full spectral decomposition with the crate ordering and phase
    /// conventions. Infallible: the Hermitian invariant is enforced at
    /// construction.
    pub fn eigendecompose(&self) -> SpectralDecomposition {
        if let Some(diag) = self.diagonal_entries() {
            let order = sorted_order(&diag);
            let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
            let mut vectors = CMatrix::zeros(self.dim, self.dim);
            for (col, &i) in order.iter().enumerate() {
                vectors[(i, col)] = Complex64::new(1.0, 0.0);
            }
            return SpectralDecomposition {
                eigenvalues,
                eigenvectors: vectors,
            };
        }
        let se = self.entries.clone().symmetric_eigen();
        let raw: Vec<f64> = se.eigenvalues.iter().copied().collect();
        let order = sorted_order(&raw);
        let eigenvalues: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
        let mut vectors = CMatrix::zeros(self.dim, self.dim);
        for (col, &i) in order.iter().enumerate() {
            let mut v: Vec<Complex64> = se.eigenvectors.column(i).iter().copied().collect();
            fix_phase(&mut v);
            for (row, val) in v.into_iter().enumerate() {
                vectors[(row, col)] = val;
            }
        }
        SpectralDecomposition {
            eigenvalues,
            eigenvectors: vectors,
        }
    }
}

/// Ascending order of `vals`, ties broken by index. Values are finite by
/// the operator invariant.
fn sorted_order(vals: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| {
        vals[a]
            .partial_cmp(&vals[b])
            .expect("finite eigenvalues")
            .then(a.cmp(&b))
    });
    idx
}

/// Rotates a column so that its first component of modulus at least
/// `PHASE_ANCHOR_TOL` times the column maximum is real and positive.
fn fix_phase(v: &mut [Complex64]) {
    let max_mod = v.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if max_mod == 0.0 {
        return;
    }
    let anchor = v
        .iter()
        .find(|c| c.norm() >= PHASE_ANCHOR_TOL * max_mod)
        .copied()
        .expect("column maximum exceeds its own anchor threshold");
    let phase = anchor / anchor.norm();
    let correction = phase.conj();
    for c in v.iter_mut() {
        *c *= correction;
    }
}

/// Eigenvalues (ascending) and the matching orthonormal eigenvector
/// columns of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Applies `f` to the spectrum and reassembles `U f(Lambda) U*`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
        let d = self.dim();
        let mut mapped = Vec::with_capacity(d);
        for &l in &self.eigenvalues {
            let v = f(l);
            if !v.is_finite() {
                return Err(Error::NonFiniteResult {
                    eigenvalue: l,
                    value: v,
                });
            }
            mapped.push(v);
        }
        let mut scaled = self.eigenvectors.clone();
        for (col, &v) in mapped.iter().enumerate() {
            let c = Complex64::new(v, 0.0);
            for row in 0..d {
                scaled[(row, col)] *= c;
            }
        }
        let m = &scaled * self.eigenvectors.adjoint();
        Ok(HermitianOperator::symmetrize(m))
    }

    /// `U Lambda U*`; used by tests to measure reconstruction error.
    pub fn reconstruct(&self) -> HermitianOperator {
        self.apply(|l| l).expect("eigenvalues are finite")
    }
}

/// Applies a real scalar function to a Hermitian operator through its
/// spectrum. Exactly diagonal operators are mapped entrywise on the
/// diagonal, with no matrix products.
pub fn func_calculus(x: &HermitianOperator, f: impl Fn(f64) -> f64) -> Result<HermitianOperator> {
    if let Some(diag) = x.diagonal_entries() {
        let mut mapped = Vec::with_capacity(diag.len());
        for l in diag {
            let v = f(l);
            if !v.is_finite() {
                return Err(Error::NonFiniteResult {
                    eigenvalue: l,
                    value: v,
                });
            }
            mapped.push(v);
        }
        return Ok(HermitianOperator::from_diagonal(&mapped));
    }
    x.eigendecompose().apply(f)
}

/// Matrix exponential of a Hermitian operator.
pub fn expm(x: &HermitianOperator) -> Result<HermitianOperator> {
    func_calculus(x, f64::exp)
}

/// Normalized trace `tr(x) / dim`.
pub fn trace_state(x: &HermitianOperator) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.dim() {
        acc += x.entries()[(i, i)].re;
    }
    acc / x.dim() as f64
}

/// Normalized trace of a product, `tr(x y) / dim`, without forming `x y`.
/// Real because both factors are Hermitian.
pub fn trace_product(x: &HermitianOperator, y: &HermitianOperator) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            left: x.dim(),
            right: y.dim(),
        });
    }
    let d = x.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            let a = x.entries()[(i, j)];
            let b = y.entries()[(j, i)];
            acc += a.re * b.re - a.im * b.im;
        }
    }
    Ok(acc / d as f64)
}

/// Golden-Thompson gap `tau(e^{y1} e^{y2}) - tau(e^{y1+y2})`, which is
/// nonnegative up to roundoff and zero when the operators commute.
pub fn gt_gap(y1: &HermitianOperator, y2: &HermitianOperator) -> Result<f64> {
    if y1.dim() != y2.dim() {
        return Err(Error::DimensionMismatch {
            left: y1.dim(),
            right: y2.dim(),
        });
    }
    let e1 = expm(y1)?;
    let e2 = expm(y2)?;
    let product_trace = trace_product(&e1, &e2)?;
    let joint = expm(&y1.add(y2))?;
    Ok(product_trace - trace_state(&joint))
}

/// Whether every eigenvalue is at least `-tol * (1 + op_norm)`.
pub fn is_psd(x: &HermitianOperator, tol: f64) -> bool {
    let min = x.min_eigenvalue();
    let scale = 1.0 + x.op_norm();
    min >= -tol * scale
}

/// Operator norm of a general (not necessarily Hermitian) matrix:
/// largest singular value computed as `sqrt(lambda_max(m* m))`.
pub fn op_norm_general(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    let eigs = gram.symmetric_eigenvalues();
    eigs.iter().fold(0.0f64, |acc, &v| acc.max(v.max(0.0))).sqrt()
}

/// An orthogonal projection, stored together with an orthonormal basis of
/// its range so lattice operations can work on bases directly.
///
/// Invariants: `p = p* = p^2` within [`SPECTRAL_TOL`], `basis` has
/// orthonormal columns spanning the range, and `rank == basis.ncols()`.
#[derive(Debug, Clone)]
pub struct Projection {
    operator: HermitianOperator,
    basis: CMatrix,
}

impl Projection {
    /// Validates idempotency and the 0/1 spectrum, then extracts a range
    /// basis from the eigenvectors with eigenvalue near 1.
    pub fn new(operator: HermitianOperator) -> Result<Self> {
        let dec = operator.eigendecompose();
        let mut cols: Vec<usize> = Vec::new();
        for (i, &l) in dec.eigenvalues().iter().enumerate() {
            if (l - 1.0).abs() <= SPECTRAL_TOL {
                cols.push(i);
            } else if l.abs() > SPECTRAL_TOL {
                return Err(Error::InvalidParams(format!(
                    "eigenvalue {l:e} of a projection is neither 0 nor 1"
                )));
            }
        }
        let basis = select_columns(dec.eigenvectors(), &cols);
        Ok(Self { operator, basis })
    }

    /// Builds the projection onto the span of orthonormal columns.
    /// When every column is a standard basis vector the operator is
    /// assembled as an exact 0/1 diagonal.
    pub(crate) fn from_basis(dim: usize, basis: CMatrix) -> Self {
        debug_assert_eq!(basis.nrows(), dim);
        if let Some(indices) = unit_column_indices(&basis) {
            let mut diag = vec![0.0; dim];
            for i in indices {
                diag[i] = 1.0;
            }
            return Self {
                operator: HermitianOperator::from_diagonal(&diag),
                basis,
            };
        }
        let m = &basis * basis.adjoint();
        Self {
            operator: HermitianOperator::symmetrize(m),
            basis,
        }
    }

    /// Rank-zero projection.
    pub fn zero(dim: usize) -> Self {
        Self {
            operator: HermitianOperator::zeros(dim),
            basis: CMatrix::zeros(dim, 0),
        }
    }

    /// Full-rank projection.
    pub fn identity(dim: usize) -> Self {
        Self {
            operator: HermitianOperator::identity(dim),
            basis: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.operator.dim()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }

    /// Orthonormal columns spanning the range.
    pub fn range_basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Normalized trace, `rank / dim` up to roundoff.
    pub fn trace(&self) -> f64 {
        self.rank() as f64 / self.dim() as f64
    }

    /// Complementary projection `1 - p`.
    pub fn complement(&self) -> Self {
        let op = HermitianOperator::identity(self.dim()).sub(&self.operator);
        Self::new(op).expect("complement of a projection is a projection")
    }
}

/// Extracts the listed columns into a new matrix.
pub(crate) fn select_columns(m: &CMatrix, cols: &[usize]) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), cols.len());
    for (k, &c) in cols.iter().enumerate() {
        for r in 0..m.nrows() {
            out[(r, k)] = m[(r, c)];
        }
    }
    out
}

/// When every column of `m` is exactly a standard basis vector, returns
/// the row index of each column's unit entry.
pub(crate) fn unit_column_indices(m: &CMatrix) -> Option<Vec<usize>> {
    let one = Complex64::new(1.0, 0.0);
    let mut indices = Vec::with_capacity(m.ncols());
    for c in 0..m.ncols() {
        let mut hit: Option<usize> = None;
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v == one {
                if hit.is_some() {
                    return None;
                }
                hit = Some(r);
            } else if v.re != 0.0 || v.im != 0.0 {
                return None;
            }
        }
        indices.push(hit?);
    }
    Some(indices)
}

/// Spectral projection of `x` onto the closed interval `[lo, hi]`
/// (either end may be infinite). An eigenvalue `l` is included when
/// `l >= lo - eps` and `l <= hi + eps` with `eps = SPECTRAL_TOL * (1 + |l|)`,
/// so interval ends meeting the spectrum exactly are always inside.
pub fn spectral_projection(x: &HermitianOperator, lo: f64, hi: f64) -> Projection {
    let dec = x.eigendecompose();
    let mut cols = Vec::new();
    for (i, &l) in dec.eigenvalues().iter().enumerate() {
        let eps = SPECTRAL_TOL * (1.0 + l.abs());
        if l >= lo - eps && l <= hi + eps {
            cols.push(i);
        }
    }
    let basis = select_columns(dec.eigenvectors(), &cols);
    Projection::from_basis(x.dim(), basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub(crate) fn pauli_x() -> HermitianOperator {
        HermitianOperator::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        ))
        .unwrap()
    }

    fn pauli_z() -> HermitianOperator {
        HermitianOperator::from_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn constructor_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        match HermitianOperator::new(m) {
            Err(Error::NonHermitianInput { .. }) => {}
            other => panic!("expected NonHermitianInput, got {other:?}"),
        }
    }

    #[test]
    fn constructor_rejects_non_finite() {
        let m = CMatrix::from_row_slice(1, 1, &[c(f64::NAN, 0.0)]);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NonFiniteInput)));
    }

    #[test]
    fn constructor_zeroes_diagonal_imaginary_part() {
        let m = CMatrix::from_row_slice(1, 1, &[c(2.0, 1e-13)]);
        let x = HermitianOperator::new(m).unwrap();
        assert_eq!(x.entries()[(0, 0)].im, 0.0);
        assert_eq!(x.entries()[(0, 0)].re, 2.0);
    }

    #[test]
    fn eigendecompose_sorts_ascending() {
        let x = HermitianOperator::from_diagonal(&[3.0, 1.0]);
        let dec = x.eigendecompose();
        assert_eq!(dec.eigenvalues(), &[1.0, 3.0]);
        // Eigenvector columns are the swapped standard basis.
        assert_eq!(dec.eigenvectors()[(1, 0)], c(1.0, 0.0));
        assert_eq!(dec.eigenvectors()[(0, 1)], c(1.0, 0.0));
    }

    #[test]
    fn eigendecompose_zero_operator() {
        let x = HermitianOperator::zeros(2);
        let dec = x.eigendecompose();
        assert_eq!(dec.eigenvalues(), &[0.0, 0.0]);
        assert_eq!(dec.eigenvectors(), &CMatrix::identity(2, 2));
    }

    #[test]
    fn eigendecompose_pauli_x() {
        let dec = pauli_x().eigendecompose();
        assert_abs_diff_eq!(dec.eigenvalues()[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dec.eigenvalues()[1], 1.0, epsilon = 1e-12);
        // Phase convention: first significant component real positive.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(dec.eigenvectors()[(0, 0)].re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(dec.eigenvectors()[(1, 0)].re, -s, epsilon = 1e-12);
        assert_abs_diff_eq!(dec.eigenvectors()[(0, 1)].re, s, epsilon = 1e-12);
        assert_abs_diff_eq!(dec.eigenvectors()[(1, 1)].re, s, epsilon = 1e-12);
        assert!(dec.eigenvectors().iter().all(|v| v.im.abs() < 1e-12));
    }

    #[test]
    fn reconstruction_matches_input() {
        let x = pauli_x();
        let err = x.eigendecompose().reconstruct().sub(&x).op_norm();
        assert!(err < 1e-12, "reconstruction error {err}");
    }

    #[test]
    fn func_calculus_identity_function() {
        let x = pauli_x();
        let y = func_calculus(&x, |l| l).unwrap();
        assert!(y.sub(&x).op_norm() < 1e-12);
    }

    #[test]
    fn func_calculus_exp_on_diagonal() {
        let x = HermitianOperator::from_diagonal(&[0.0, std::f64::consts::LN_2]);
        let y = expm(&x).unwrap();
        assert_eq!(y.diagonal_entries().unwrap()[0], 1.0);
        assert_abs_diff_eq!(y.diagonal_entries().unwrap()[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn func_calculus_square_of_pauli_x_is_identity() {
        let y = func_calculus(&pauli_x(), |l| l * l).unwrap();
        assert!(y.sub(&HermitianOperator::identity(2)).op_norm() < 1e-12);
    }

    #[test]
    fn func_calculus_rejects_non_finite_values() {
        let x = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        match func_calculus(&x, |l| 1.0 / l) {
            Err(Error::NonFiniteResult { eigenvalue, .. }) => assert_eq!(eigenvalue, 0.0),
            other => panic!("expected NonFiniteResult, got {other:?}"),
        }
    }

    #[test]
    fn spectral_projection_upper_interval() {
        let x = HermitianOperator::from_diagonal(&[3.0, 1.0]);
        let p = spectral_projection(&x, 2.0, f64::INFINITY);
        assert_eq!(p.rank(), 1);
        assert_eq!(p.operator().diagonal_entries().unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn spectral_projection_full_line_is_identity() {
        let x = pauli_x();
        let p = spectral_projection(&x, f64::NEG_INFINITY, f64::INFINITY);
        assert_eq!(p.rank(), 2);
        assert!(p.operator().sub(&HermitianOperator::identity(2)).op_norm() < 1e-12);
    }

    #[test]
    fn spectral_projection_boundary_eigenvalue_included() {
        let x = HermitianOperator::from_diagonal(&[1.0, -1.0]);
        let p = spectral_projection(&x, 1.0, f64::INFINITY);
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn spectral_projection_pauli_x_positive_part() {
        let p = spectral_projection(&pauli_x(), 0.5, f64::INFINITY);
        let expected = pauli_x().add(&HermitianOperator::identity(2)).scale(0.5);
        assert!(p.operator().sub(&expected).op_norm() < 1e-12);
    }

    #[test]
    fn trace_state_examples() {
        assert_eq!(trace_state(&HermitianOperator::identity(5)), 1.0);
        assert_eq!(trace_state(&HermitianOperator::from_diagonal(&[2.0, 0.0])), 1.0);
        let p = spectral_projection(&HermitianOperator::from_diagonal(&[1.0, 1.0, 0.0, 0.0]), 0.5, 2.0);
        assert_eq!(p.trace(), 0.5);
    }

    #[test]
    fn gt_gap_zero_operators() {
        let z = HermitianOperator::zeros(3);
        assert_eq!(gt_gap(&z, &z).unwrap(), 0.0);
    }

    #[test]
    fn gt_gap_commuting_diagonals_vanishes() {
        let a = HermitianOperator::from_diagonal(&[0.3, -0.7, 1.1]);
        let b = HermitianOperator::from_diagonal(&[-0.2, 0.5, 0.9]);
        let gap = gt_gap(&a, &b).unwrap();
        assert!(gap.abs() < 1e-12, "gap {gap}");
    }

    #[test]
    fn gt_gap_pauli_pair_closed_form() {
        let gap = gt_gap(&pauli_x(), &pauli_z()).unwrap();
        let expected = 1.0f64.cosh().powi(2) - std::f64::consts::SQRT_2.cosh();
        assert_abs_diff_eq!(gap, expected, epsilon = 1e-12);
        assert!(gap > 0.0);
    }

    #[test]
    fn gt_gap_dimension_mismatch() {
        let a = HermitianOperator::zeros(2);
        let b = HermitianOperator::zeros(3);
        assert!(matches!(gt_gap(&a, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn is_psd_examples() {
        assert!(is_psd(&HermitianOperator::identity(3), 0.0));
        assert!(!is_psd(&HermitianOperator::from_diagonal(&[1.0, -0.5]), 1e-9));
        assert!(is_psd(&HermitianOperator::from_diagonal(&[1.0, -1e-12]), 1e-9));
    }

    #[test]
    fn projection_new_validates_spectrum() {
        let not_proj = HermitianOperator::from_diagonal(&[0.5, 1.0]);
        assert!(Projection::new(not_proj).is_err());
        let p = Projection::new(HermitianOperator::from_diagonal(&[1.0, 0.0])).unwrap();
        assert_eq!(p.rank(), 1);
    }

    #[test]
    fn projection_complement() {
        let p = spectral_projection(&pauli_z(), 0.5, f64::INFINITY);
        let q = p.complement();
        assert_eq!(q.rank(), 1);
        assert_eq!(q.operator().diagonal_entries().unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn op_norm_general_matches_hermitian_norm() {
        let x = pauli_x().scale(2.5);
        assert_abs_diff_eq!(op_norm_general(x.entries()), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn trace_product_cyclic() {
        let a = pauli_x();
        let b = pauli_z();
        let ab = trace_product(&a, &b).unwrap();
        let ba = trace_product(&b, &a).unwrap();
        assert_abs_diff_eq!(ab, ba, epsilon = 1e-15);
        assert_abs_diff_eq!(ab, 0.0, epsilon = 1e-15);
    }
}
