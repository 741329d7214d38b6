//! Seeded random states, unitaries and measurements for tests and sweeps.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::{gram, hermitian_map, re};
use super::state::PureBipartiteState;
use super::C64;

fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random pure state of a `dim_a × dim_b` system.
pub fn random_state<R: Rng + ?Sized>(
    dim_a: usize,
    dim_b: usize,
    rng: &mut R,
) -> PureBipartiteState {
    PureBipartiteState::normalize(gaussian(dim_a, dim_b, rng)).expect("gaussian matrix is nonzero")
}

/// Haar-random `d × d` unitary (QR of a Ginibre matrix with the phase of `R` removed).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let qr = gaussian(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / re(rjj.norm())
        } else {
            re(1.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random measurement operators `M_j` on a `d`-dimensional space with `Σ M_j† M_j = I`.
pub fn random_measurement<R: Rng + ?Sized>(
    d: usize,
    outcomes: usize,
    rng: &mut R,
) -> Vec<DMatrix<C64>> {
    let raw: Vec<DMatrix<C64>> = (0..outcomes).map(|_| gaussian(d, d, rng)).collect();
    let mut s = DMatrix::from_element(d, d, re(0.0));
    for g in &raw {
        s += gram(g);
    }
    let inv_sqrt = hermitian_map(&s, |x| 1.0 / x.sqrt());
    raw.into_iter().map(|g| g * &inv_sqrt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{identity, is_unitary, max_abs_diff};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 1..6 {
            assert!(is_unitary(&random_unitary(d, &mut rng), 1e-12));
        }
    }

    #[test]
    fn measurements_are_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ops = random_measurement(3, 4, &mut rng);
        let mut s = DMatrix::from_element(3, 3, re(0.0));
        for m in &ops {
            s += gram(m);
        }
        assert!(max_abs_diff(&s, &identity(3)) < 1e-12);
    }
}
