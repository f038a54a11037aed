//! Tensor-product probability spaces and their natural filtrations.
//!
//! A space is a product of `K` matrix factors with dimensions
//! `d_1, ..., d_K`; the total dimension is their product. Indices follow
//! the row-major convention: the composite index of `(p, q)` with `p` over
//! the first `j` factors and `q` over the rest is `p * Q + q` where `Q` is
//! the product of the remaining dimensions.
//!
//! Filtration level `j` consists of operators of the form
//! `(matrix on the first j factors) tensor identity`. The conditional
//! expectation onto level `j` is the normalized partial trace over the
//! remaining factors, re-tensored with identity. It is trace-preserving,
//! positive, and satisfies the module property over level-`j` operators.

use crate::error::{Error, Result};
use crate::martingale::AdaptedSequence;
use crate::operator::{op_norm_general, trace_state, CMatrix, HermitianOperator, SPECTRAL_TOL};
use num_complex::Complex64;

/// Largest supported total dimension. Dense spectral work beyond this is
/// outside the intended desk scale.
pub const MAX_TOTAL_DIM: usize = 4096;

/// A finite tensor product of matrix factors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpace {
    factor_dims: Vec<usize>,
    total_dim: usize,
}

impl TensorSpace {
    /// Validates that there is at least one factor, every factor dimension
    /// is at least 1, and the total dimension stays within
    /// [`MAX_TOTAL_DIM`].
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::InvalidParams("tensor space needs at least one factor".into()));
        }
        let mut total: usize = 1;
        for (k, &d) in factor_dims.iter().enumerate() {
            if d == 0 {
                return Err(Error::InvalidParams(format!("factor {k} has dimension 0")));
            }
            total = total.checked_mul(d).filter(|&t| t <= MAX_TOTAL_DIM).ok_or_else(|| {
                Error::InvalidParams(format!(
                    "total dimension exceeds the supported maximum {MAX_TOTAL_DIM}"
                ))
            })?;
        }
        Ok(Self {
            factor_dims,
            total_dim: total,
        })
    }

    /// Space with `k` factors of equal dimension `d`.
    pub fn uniform(k: usize, d: usize) -> Result<Self> {
        Self::new(vec![d; k])
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn factor_count(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Product of the first `level` factor dimensions: the dimension of the
    /// compressed block at that filtration level. Level 0 gives 1.
    pub fn prefix_dim(&self, level: usize) -> usize {
        self.factor_dims[..level].iter().product()
    }

    /// Embeds a single-factor operator at the (0-based) `factor` position,
    /// tensoring with identity on every other factor.
    pub fn embed(&self, op: &HermitianOperator, factor: usize) -> Result<HermitianOperator> {
        if factor >= self.factor_count() {
            return Err(Error::LevelOutOfRange {
                level: factor,
                max: self.factor_count() - 1,
            });
        }
        let d = self.factor_dims[factor];
        if op.dim() != d {
            return Err(Error::DimensionMismatch {
                left: op.dim(),
                right: d,
            });
        }
        let pre: usize = self.factor_dims[..factor].iter().product();
        let post: usize = self.factor_dims[factor + 1..].iter().product();
        let m = CMatrix::identity(pre, pre)
            .kronecker(op.entries())
            .kronecker(&CMatrix::identity(post, post));
        Ok(HermitianOperator::from_exact(m))
    }
}

/// The natural filtration of a tensor space: levels `0..=K`, where level
/// `j` is generated by the first `j` factors.
#[derive(Debug, Clone)]
pub struct Filtration {
    space: TensorSpace,
}

impl Filtration {
    pub fn new(space: TensorSpace) -> Self {
        Self { space }
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    /// Number of steps `K`; valid levels are `0..=K`.
    pub fn level_count(&self) -> usize {
        self.space.factor_count()
    }

    fn check_level(&self, level: usize) -> Result<()> {
        let max = self.level_count();
        if level > max {
            return Err(Error::LevelOutOfRange { level, max });
        }
        Ok(())
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.space.total_dim() {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: self.space.total_dim(),
            });
        }
        Ok(())
    }

    /// Normalized partial trace over the factors above `level`, as a
    /// `P x P` matrix with `P = prefix_dim(level)`.
    pub(crate) fn partial_trace_normalized(&self, level: usize, m: &CMatrix) -> CMatrix {
        let p = self.space.prefix_dim(level);
        let q = self.space.total_dim() / p;
        let mut out = CMatrix::zeros(p, p);
        let inv_q = 1.0 / q as f64;
        for r in 0..p {
            for c in 0..p {
                let mut acc = Complex64::new(0.0, 0.0);
                for s in 0..q {
                    acc += m[(r * q + s, c * q + s)];
                }
                out[(r, c)] = acc * inv_q;
            }
        }
        out
    }

    /// Conditional expectation onto level `j` for a raw matrix:
    /// normalized partial trace re-tensored with identity.
    pub(crate) fn cond_exp_matrix(&self, level: usize, m: &CMatrix) -> CMatrix {
        let p = self.space.prefix_dim(level);
        let q = self.space.total_dim() / p;
        let compressed = self.partial_trace_normalized(level, m);
        let d = self.space.total_dim();
        let mut out = CMatrix::zeros(d, d);
        for r in 0..p {
            for c in 0..p {
                let v = compressed[(r, c)];
                if v.re != 0.0 || v.im != 0.0 {
                    for s in 0..q {
                        out[(r * q + s, c * q + s)] = v;
                    }
                }
            }
        }
        out
    }

    /// Conditional expectation of `x` onto filtration level `level`.
    ///
    /// Level `K` is the identity map; level 0 gives `trace_state(x)` times
    /// the identity. The output of an exactly Hermitian input is exactly
    /// Hermitian, and exactly diagonal inputs stay exactly diagonal.
    pub fn cond_exp(&self, level: usize, x: &HermitianOperator) -> Result<HermitianOperator> {
        self.check_level(level)?;
        self.check_dim(x.dim())?;
        if level == self.level_count() {
            return Ok(x.clone());
        }
        Ok(HermitianOperator::from_exact(self.cond_exp_matrix(level, x.entries())))
    }

    /// Residual of the bimodule identity `E_j(a x b) = a E_j(x) b` in
    /// operator norm, where `a` and `b` must be measurable at `level`.
    /// Measurability of the flanks is the caller's obligation; the residual
    /// is only meaningful when it holds.
    pub fn verify_module_property(
        &self,
        level: usize,
        a: &HermitianOperator,
        x: &HermitianOperator,
        b: &HermitianOperator,
    ) -> Result<f64> {
        self.check_level(level)?;
        for op in [a, x, b] {
            self.check_dim(op.dim())?;
        }
        let axb = a.entries() * x.entries() * b.entries();
        let lhs = self.cond_exp_matrix(level, &axb);
        let rhs = a.entries() * self.cond_exp_matrix(level, x.entries()) * b.entries();
        Ok(op_norm_general(&(lhs - rhs)))
    }

    /// Residual of the tower identity `E_i(E_j(x)) = E_min(i,j)(x)` in
    /// operator norm.
    pub fn verify_tower(&self, i: usize, j: usize, x: &HermitianOperator) -> Result<f64> {
        self.check_level(i)?;
        self.check_level(j)?;
        self.check_dim(x.dim())?;
        let inner = self.cond_exp(j, x)?;
        let lhs = self.cond_exp(i, &inner)?;
        let rhs = self.cond_exp(i.min(j), x)?;
        Ok(lhs.sub(&rhs).op_norm())
    }
}

/// Builds the running sums `s_0 = 0, s_j = sum of embedded factors up to j`
/// from one operator per factor, each with nonpositive trace mean.
///
/// The embedded factor elements are independent across levels, so the sums
/// form a supermartingale (a martingale when every mean vanishes); the
/// returned sequence is classified accordingly.
pub fn independent_sum_construction(
    space: &TensorSpace,
    elements: &[HermitianOperator],
) -> Result<AdaptedSequence> {
    if elements.len() != space.factor_count() {
        return Err(Error::DimensionMismatch {
            left: elements.len(),
            right: space.factor_count(),
        });
    }
    for (k, x) in elements.iter().enumerate() {
        if x.dim() != space.factor_dims()[k] {
            return Err(Error::DimensionMismatch {
                left: x.dim(),
                right: space.factor_dims()[k],
            });
        }
        let mean = trace_state(x);
        if mean > SPECTRAL_TOL * (1.0 + x.op_norm()) {
            return Err(Error::NotSupermartingale { factor: k, mean });
        }
    }
    let filt = Filtration::new(space.clone());
    let d = space.total_dim();
    let mut ops = Vec::with_capacity(elements.len() + 1);
    let mut running = HermitianOperator::zeros(d);
    ops.push(running.clone());
    for (k, x) in elements.iter().enumerate() {
        running = running.add(&space.embed(x, k)?);
        ops.push(running.clone());
    }
    let seq = AdaptedSequence::new(filt, ops)?;
    let kind = seq.classify(SPECTRAL_TOL)?;
    Ok(seq.with_kind(kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::MartingaleKind;
    use crate::operator::func_calculus;
    use approx::assert_abs_diff_eq;

    fn pauli_z() -> HermitianOperator {
        HermitianOperator::from_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn space_validation() {
        assert!(TensorSpace::new(vec![]).is_err());
        assert!(TensorSpace::new(vec![2, 0]).is_err());
        assert!(TensorSpace::new(vec![2; 13]).is_err());
        let s = TensorSpace::new(vec![3, 2, 2]).unwrap();
        assert_eq!(s.total_dim(), 12);
        assert_eq!(s.prefix_dim(0), 1);
        assert_eq!(s.prefix_dim(2), 6);
    }

    #[test]
    fn embed_positions() {
        let s = TensorSpace::new(vec![2, 2]).unwrap();
        let z0 = s.embed(&pauli_z(), 0).unwrap();
        let z1 = s.embed(&pauli_z(), 1).unwrap();
        assert_eq!(z0.diagonal_entries().unwrap(), vec![1.0, 1.0, -1.0, -1.0]);
        assert_eq!(z1.diagonal_entries().unwrap(), vec![1.0, -1.0, 1.0, -1.0]);
    }

    #[test]
    fn cond_exp_top_level_is_identity_map() {
        let s = TensorSpace::new(vec![2, 2]).unwrap();
        let f = Filtration::new(s.clone());
        let x = s.embed(&pauli_z(), 1).unwrap();
        let y = f.cond_exp(2, &x).unwrap();
        assert!(y.sub(&x).op_norm() == 0.0);
    }

    #[test]
    fn cond_exp_level_zero_is_trace_state() {
        let s = TensorSpace::new(vec![2, 2]).unwrap();
        let f = Filtration::new(s);
        let x = HermitianOperator::from_diagonal(&[4.0, 0.0, 0.0, 0.0]);
        let y = f.cond_exp(0, &x).unwrap();
        assert_eq!(y.diagonal_entries().unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn cond_exp_kills_future_factors() {
        // z tensor z has zero partial trace over the second factor.
        let s = TensorSpace::new(vec![2, 2]).unwrap();
        let f = Filtration::new(s);
        let zz = HermitianOperator::from_diagonal(&[1.0, -1.0, -1.0, 1.0]);
        let y = f.cond_exp(1, &zz).unwrap();
        assert_eq!(y.op_norm(), 0.0);
    }

    #[test]
    fn cond_exp_is_trace_preserving_and_positive() {
        let s = TensorSpace::new(vec![3, 2, 2]).unwrap();
        let f = Filtration::new(s.clone());
        let x = HermitianOperator::from_diagonal(
            &(0..12).map(|i| (i as f64 - 4.0) / 3.0).collect::<Vec<_>>(),
        );
        let sq = func_calculus(&x, |l| l * l).unwrap();
        for level in 0..=3 {
            let y = f.cond_exp(level, &sq).unwrap();
            assert_abs_diff_eq!(trace_state(&y), trace_state(&sq), epsilon = 1e-12);
            assert!(y.min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn level_out_of_range() {
        let f = Filtration::new(TensorSpace::new(vec![2, 2]).unwrap());
        let x = HermitianOperator::zeros(4);
        assert!(matches!(
            f.cond_exp(3, &x),
            Err(Error::LevelOutOfRange { level: 3, max: 2 })
        ));
    }

    #[test]
    fn module_property_diagonal_flanks() {
        let s = TensorSpace::new(vec![2, 2]).unwrap();
        let f = Filtration::new(s.clone());
        let a = s.embed(&pauli_z(), 0).unwrap();
        let x = s.embed(&pauli_z(), 1).unwrap();
        let residual = f.verify_module_property(1, &a, &x, &a).unwrap();
        assert!(residual < 1e-12);
    }

    #[test]
    fn tower_identity_both_orders() {
        let s = TensorSpace::new(vec![2, 2, 2]).unwrap();
        let f = Filtration::new(s.clone());
        let x = s.embed(&pauli_z(), 2).unwrap();
        for (i, j) in [(1usize, 2usize), (2, 1), (0, 2), (1, 1)] {
            let r = f.verify_tower(i, j, &x).unwrap();
            assert!(r < 1e-12, "tower residual {r} at ({i},{j})");
        }
    }

    #[test]
    fn independent_sum_zero_elements() {
        let s = TensorSpace::new(vec![2, 2]).unwrap();
        let seq =
            independent_sum_construction(&s, &[HermitianOperator::zeros(2), HermitianOperator::zeros(2)])
                .unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.kind(), MartingaleKind::Martingale);
    }

    #[test]
    fn independent_sum_traceless_factors_is_martingale() {
        let s = TensorSpace::new(vec![2, 2, 2]).unwrap();
        let seq = independent_sum_construction(&s, &[pauli_z(), pauli_z(), pauli_z()]).unwrap();
        assert_eq!(seq.kind(), MartingaleKind::Martingale);
        // s_2 on the diagonal: sums of two independent signs.
        assert_eq!(
            seq.op(2).diagonal_entries().unwrap(),
            vec![2.0, 2.0, 0.0, 0.0, 0.0, 0.0, -2.0, -2.0]
        );
    }

    #[test]
    fn independent_sum_drifted_factors_is_supermartingale() {
        let s = TensorSpace::new(vec![2, 2]).unwrap();
        let drifted = pauli_z().shift(-0.1);
        let seq = independent_sum_construction(&s, &[drifted.clone(), drifted]).unwrap();
        assert_eq!(seq.kind(), MartingaleKind::Supermartingale);
    }

    #[test]
    fn independent_sum_rejects_positive_mean() {
        let s = TensorSpace::new(vec![2, 2]).unwrap();
        let bad = pauli_z().shift(0.1);
        assert!(matches!(
            independent_sum_construction(&s, &[bad, pauli_z()]),
            Err(Error::NotSupermartingale { factor: 0, .. })
        ));
    }
}
