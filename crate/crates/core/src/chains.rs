//! Seeded constructions of adapted chains with prescribed step laws.
//!
//! Each chain takes one step per tensor factor. The step law is a real
//! diagonal `step_values` shared by all factors; the factor marginal of
//! every step is the uniform distribution on those values, so the scalar
//! simulators in [`crate::mcsim`] model the same walk exactly.
//!
//! Two realizations are available:
//! * `Diagonal` embeds the diagonal as-is, keeping every element of the
//!   chain exactly diagonal (cheap at large dimension, and the tail-event
//!   traces equal classical crossing probabilities exactly);
//! * `Conjugated` rotates each step by a seeded Haar unitary on its
//!   factor. When the step values are symmetric (`{+v, -v}` in equal
//!   number) the step is additionally multiplied by a random involution
//!   on the preceding factors, producing genuinely noncommuting
//!   martingale differences whose conditional exponential moments are
//!   still exactly `cosh(vt) * 1`.

use crate::error::{Error, Result};
use crate::martingale::AdaptedSequence;
use crate::mcsim::rationalize;
use crate::operator::{HermitianOperator, SPECTRAL_TOL};
use crate::sample::{random_involution, random_unitary};
use crate::space::{independent_sum_construction, Filtration, TensorSpace};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// How step operators are realized on their factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Diagonal,
    Conjugated,
}

/// Largest denominator accepted when converting a step probability into
/// a factor dimension.
const MAX_FACTOR_DENOMINATOR: u64 = 16;

/// Builds the running-sum chain `s_0 = 0, ..., s_K` over `space` with one
/// step per factor, each distributed over `step_values`.
///
/// Every factor dimension must equal `step_values.len()`, and the values
/// must have nonpositive mean (the factor marginal is uniform). The
/// returned sequence is classified; a zero-mean step law yields a
/// martingale, a negative-mean law a supermartingale.
pub fn step_chain(
    space: &TensorSpace,
    step_values: &[f64],
    kind: StepKind,
    seed: u64,
) -> Result<AdaptedSequence> {
    if step_values.is_empty() {
        return Err(Error::InvalidParams("step law needs at least one value".into()));
    }
    for (k, &d) in space.factor_dims().iter().enumerate() {
        if d != step_values.len() {
            return Err(Error::DimensionMismatch {
                left: d,
                right: step_values.len(),
            });
        }
        let _ = k;
    }
    let max_abs = step_values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean = step_values.iter().sum::<f64>() / step_values.len() as f64;
    if mean > SPECTRAL_TOL * (1.0 + max_abs) {
        return Err(Error::NotSupermartingale { factor: 0, mean });
    }

    match kind {
        StepKind::Diagonal => {
            let element = HermitianOperator::from_diagonal(step_values);
            independent_sum_construction(space, &vec![element; space.factor_count()])
        }
        StepKind::Conjugated => conjugated_chain(space, step_values, mean, max_abs, seed),
    }
}

/// Whether the values are `{+v, -v}` in equal number (up to order), the
/// case where prefix involutions preserve the step's conditional law.
fn is_symmetric_two_valued(values: &[f64], mean: f64, max_abs: f64) -> bool {
    if max_abs == 0.0 {
        return false;
    }
    mean.abs() <= 1e-15 * max_abs && values.iter().all(|v| (v.abs() - max_abs).abs() <= 1e-15 * max_abs)
}

fn conjugated_chain(
    space: &TensorSpace,
    step_values: &[f64],
    mean: f64,
    max_abs: f64,
    seed: u64,
) -> Result<AdaptedSequence> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let symmetric = is_symmetric_two_valued(step_values, mean, max_abs);
    let d = space.total_dim();
    let diag = HermitianOperator::from_diagonal(step_values);
    let mut ops = Vec::with_capacity(space.factor_count() + 1);
    let mut running = HermitianOperator::zeros(d);
    ops.push(running.clone());
    for factor in 0..space.factor_count() {
        let fd = space.factor_dims()[factor];
        let u = random_unitary(fd, &mut rng);
        let local =
            HermitianOperator::symmetrize(&u * diag.entries() * u.adjoint());
        let dx = if symmetric {
            let prefix = space.prefix_dim(factor);
            let r = random_involution(prefix, &mut rng);
            let post = d / (prefix * fd);
            let m = r
                .entries()
                .kronecker(local.entries())
                .kronecker(&DMatrix::identity(post, post));
            HermitianOperator::symmetrize(m)
        } else {
            space.embed(&local, factor)?
        };
        running = running.add(&dx);
        ops.push(running.clone());
    }
    let seq = AdaptedSequence::new(Filtration::new(space.clone()), ops)?;
    seq.classified(SPECTRAL_TOL)
}

/// Step values for the extremal two-point law with support `{beta, -alpha}`
/// and mean `-gamma`: the probability `(alpha - gamma) / (alpha + beta)` of
/// the upper value is converted to a rational `pn / pd`, and the diagonal
/// holds `pn` copies of `beta` and `pd - pn` copies of `-alpha`. Fails when
/// the probability has no small-denominator representation.
pub fn extremal_step_values(alpha: f64, beta: f64, gamma: f64) -> Result<Vec<f64>> {
    if !(alpha > gamma && gamma >= 0.0 && beta > 0.0) {
        return Err(Error::InvalidParams(format!(
            "extremal step law needs alpha > gamma >= 0 and beta > 0, got alpha={alpha}, beta={beta}, gamma={gamma}"
        )));
    }
    let p = (alpha - gamma) / (alpha + beta);
    let (pn, pd) = rationalize(p, MAX_FACTOR_DENOMINATOR).ok_or_else(|| {
        Error::InvalidParams(format!(
            "upper-value probability {p} is not a fraction with denominator <= {MAX_FACTOR_DENOMINATOR}"
        ))
    })?;
    debug_assert!(pn >= 0);
    let mut values = vec![beta; pn as usize];
    values.resize(pd as usize, -alpha);
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::{MartingaleKind, MgfEnvelope};
    use crate::operator::trace_state;

    #[test]
    fn diagonal_rademacher_chain() {
        let space = TensorSpace::uniform(3, 2).unwrap();
        let seq = step_chain(&space, &[1.0, -1.0], StepKind::Diagonal, 0).unwrap();
        assert_eq!(seq.kind(), MartingaleKind::Martingale);
        assert!(seq.op(3).diagonal_entries().is_some());
        assert_eq!(seq.op(3).op_norm(), 3.0);
    }

    #[test]
    fn conjugated_rademacher_chain_is_martingale_with_exact_mgf() {
        let space = TensorSpace::uniform(3, 2).unwrap();
        let seq = step_chain(&space, &[1.0, -1.0], StepKind::Conjugated, 5).unwrap();
        assert_eq!(seq.kind(), MartingaleKind::Martingale);
        // Elements are genuinely non-diagonal.
        assert!(seq.op(2).diagonal_entries().is_none());
        let env = MgfEnvelope::two_point(1.0, 1.0, 0.0).unwrap();
        let worst = seq.check_mgf_condition(&env, &[0.25, 1.0, 2.5]).unwrap();
        assert!(worst.abs() < 1e-9, "worst {worst}");
        let bd = seq.check_bounded_differences(1.0, 1.0);
        assert!(bd.within_bounds);
    }

    #[test]
    fn conjugated_asymmetric_chain_keeps_two_point_law() {
        let space = TensorSpace::uniform(3, 3).unwrap();
        let values = extremal_step_values(2.0, 1.0, 0.0).unwrap();
        assert_eq!(values, vec![1.0, 1.0, -2.0]);
        let seq = step_chain(&space, &values, StepKind::Conjugated, 9).unwrap();
        assert_eq!(seq.kind(), MartingaleKind::Martingale);
        let env = MgfEnvelope::two_point(2.0, 1.0, 0.0).unwrap();
        let worst = seq.check_mgf_condition(&env, &[0.2, 0.8, 1.6]).unwrap();
        assert!(worst.abs() < 1e-9, "worst {worst}");
    }

    #[test]
    fn drifted_chain_is_supermartingale() {
        let values = extremal_step_values(2.0, 1.0, 0.5).unwrap();
        assert_eq!(values, vec![1.0, -2.0]);
        let space = TensorSpace::uniform(4, 2).unwrap();
        let seq = step_chain(&space, &values, StepKind::Conjugated, 2).unwrap();
        assert_eq!(seq.kind(), MartingaleKind::Supermartingale);
        let dx = seq.differences();
        for step in &dx[1..] {
            assert!((trace_state(step) + 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn step_chain_rejects_positive_mean() {
        let space = TensorSpace::uniform(2, 2).unwrap();
        assert!(matches!(
            step_chain(&space, &[1.0, -0.5], StepKind::Diagonal, 0),
            Err(Error::NotSupermartingale { .. })
        ));
    }

    #[test]
    fn step_chain_rejects_mismatched_factor_dims() {
        let space = TensorSpace::uniform(2, 3).unwrap();
        assert!(step_chain(&space, &[1.0, -1.0], StepKind::Diagonal, 0).is_err());
    }

    #[test]
    fn extremal_values_reject_irrational_probability() {
        assert!(extremal_step_values(std::f64::consts::PI, 1.0, 0.0).is_err());
    }

    #[test]
    fn chains_are_seed_reproducible() {
        let space = TensorSpace::uniform(2, 2).unwrap();
        let a = step_chain(&space, &[1.0, -1.0], StepKind::Conjugated, 77).unwrap();
        let b = step_chain(&space, &[1.0, -1.0], StepKind::Conjugated, 77).unwrap();
        assert_eq!(a.op(2).entries(), b.op(2).entries());
        let c = step_chain(&space, &[1.0, -1.0], StepKind::Conjugated, 78).unwrap();
        assert!(c.op(2).sub(a.op(2)).op_norm() > 1e-6);
    }
}
