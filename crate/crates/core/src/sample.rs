//! Deterministic random matrix generators.
//!
//! Everything is driven by an explicit RNG so any fixed seed reproduces
//! the same matrices bit for bit, across platforms and thread counts.

use crate::operator::{CMatrix, HermitianOperator, Projection};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(d: usize, rng: &mut impl Rng) -> CMatrix {
    DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// GUE-style Hermitian matrix: a Ginibre sample symmetrized and scaled.
pub fn random_hermitian(d: usize, scale: f64, rng: &mut impl Rng) -> HermitianOperator {
    let g = ginibre(d, rng);
    let sym = (&g + g.adjoint()) * Complex64::new(0.5 * scale, 0.0);
    HermitianOperator::symmetrize(sym)
}

/// Haar-distributed unitary via QR of a Ginibre sample, with the phase
/// fixed so the R diagonal is positive.
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let qr = ginibre(d, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let modulus = rjj.norm();
        if modulus > 0.0 {
            let phase = rjj / modulus;
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Rank-`rank` projection onto a Haar-random subspace.
pub fn random_projection(d: usize, rank: usize, rng: &mut impl Rng) -> Projection {
    assert!(rank <= d, "rank exceeds dimension");
    let u = random_unitary(d, rng);
    let basis = crate::operator::select_columns(&u, &(0..rank).collect::<Vec<_>>());
    Projection::from_basis(d, basis)
}

/// Random Hermitian involution `W diag(signs) W*` with uniformly random
/// signs and Haar-random `W`; squares to the identity.
pub fn random_involution(d: usize, rng: &mut impl Rng) -> HermitianOperator {
    let w = random_unitary(d, rng);
    let signs: Vec<f64> = (0..d).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    let mut scaled = w.clone();
    for (j, &s) in signs.iter().enumerate() {
        let c = Complex64::new(s, 0.0);
        for i in 0..d {
            scaled[(i, j)] *= c;
        }
    }
    HermitianOperator::symmetrize(scaled * w.adjoint())
}
