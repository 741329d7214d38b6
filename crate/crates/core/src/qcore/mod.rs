//! Bipartite pure states, Schmidt decomposition, reduced density matrices,
//! entropies and fidelities.

mod density;
pub mod linalg;
pub mod random;
mod schmidt;
mod state;

use nalgebra::{DMatrix, DVector};

pub(crate) use density::reduced_unnormalized;
pub use density::{partial_trace, DensityMatrix};
pub use schmidt::{schmidt_decompose, SchmidtForm};
pub use state::{PureBipartiteState, Side};

use crate::error::{Error, Result};
use linalg::{outer, re};

pub type C64 = nalgebra::Complex<f64>;

/// Tolerance on state normalization and density-matrix trace/Hermiticity.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on operator identities (unitarity, completeness).
pub const OP_TOL: f64 = 1e-10;
/// Eigenvalues in `[EIGEN_FLOOR, 0)` are treated as zero.
pub const EIGEN_FLOOR: f64 = -1e-10;

/// Shannon entropy in bits of a probability vector; `0 log 0 = 0`.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .map(|&x| if x <= 0.0 { 0.0 } else { -x * x.log2() })
        .sum()
}

/// `H₂(x) = −x log₂ x − (1−x) log₂(1−x)`.
pub fn binary_entropy(x: f64) -> f64 {
    shannon_entropy(&[x, 1.0 - x])
}

/// Entropy of entanglement in ebits: Shannon entropy of the squared Schmidt coefficients.
pub fn entanglement_entropy(state: &PureBipartiteState) -> f64 {
    shannon_entropy(&schmidt_decompose(state).weights())
}

/// Transmission fidelity `⟨ψ|W|ψ⟩`.
pub fn fidelity(psi: &DVector<C64>, output: &DensityMatrix) -> Result<f64> {
    if psi.len() != output.dim() {
        return Err(Error::DimensionMismatch {
            expected: output.dim(),
            got: psi.len(),
        });
    }
    Ok((psi.adjoint() * output.matrix() * psi)[(0, 0)].re)
}

/// `max_Φ |⟨Φ|Ψ⟩|²` over maximally entangled `Φ`, which equals `(Σ c_i)² / d`.
pub fn max_entangled_fidelity(state: &PureBipartiteState) -> Result<f64> {
    if state.dim_a() != state.dim_b() {
        return Err(Error::NotSquare(state.dim_a(), state.dim_b()));
    }
    let sum: f64 = schmidt_decompose(state).coefficients().iter().sum();
    Ok(sum * sum / state.dim_a() as f64)
}

/// Two-qubit Werner state `I/8 + |Ψ⁻⟩⟨Ψ⁻|/2`.
pub fn werner_state() -> DensityMatrix {
    let singlet = PureBipartiteState::singlet().to_vector();
    let m = DMatrix::identity(4, 4) * re(1.0 / 8.0) + outer(&singlet, &singlet) * re(0.5);
    DensityMatrix::from_unchecked(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn entropy_spot_values() {
        let product = PureBipartiteState::partly_entangled_pair(0.0);
        assert_eq!(entanglement_entropy(&product), 0.0);
        assert!((entanglement_entropy(&PureBipartiteState::singlet()) - 1.0).abs() < 1e-12);
        // cos²θ = 1/4
        let s = PureBipartiteState::partly_entangled_pair(PI / 3.0);
        assert!((entanglement_entropy(&s) - 0.811278).abs() < 1e-6);
        assert!((binary_entropy(0.25) - 0.8112781244591328).abs() < 1e-15);
    }

    #[test]
    fn fidelity_cases() {
        let up = linalg::basis_vector(2, 0);
        let w = DensityMatrix::new(DMatrix::from_row_slice(
            2,
            2,
            &[re(0.75), re(0.0), re(0.0), re(0.25)],
        ))
        .unwrap();
        assert!((fidelity(&up, &w).unwrap() - 0.75).abs() < 1e-15);
        let pure = DensityMatrix::pure(&up).unwrap();
        assert_eq!(fidelity(&up, &pure).unwrap(), 1.0);
        let v = PureBipartiteState::singlet().to_vector();
        assert!((fidelity(&v, &DensityMatrix::maximally_mixed(4)).unwrap() - 0.25).abs() < 1e-15);
        assert!(fidelity(&up, &DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn max_entangled_fidelity_cases() {
        assert!(
            (max_entangled_fidelity(&PureBipartiteState::singlet()).unwrap() - 1.0).abs() < 1e-12
        );
        let product = PureBipartiteState::partly_entangled_pair(0.0);
        assert!((max_entangled_fidelity(&product).unwrap() - 0.5).abs() < 1e-15);
        let s = PureBipartiteState::partly_entangled_pair(PI / 6.0);
        let expect = (0.75f64.sqrt() + 0.25f64.sqrt()).powi(2) / 2.0;
        assert!((max_entangled_fidelity(&s).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 0.9330127).abs() < 1e-6);
        let rect = PureBipartiteState::normalize(DMatrix::from_element(2, 3, re(1.0))).unwrap();
        assert!(max_entangled_fidelity(&rect).is_err());
    }
}
