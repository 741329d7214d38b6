//! Quantum data compression of sources induced by an entangled pair and a
//! measurement on Bob's side, and the reasons it is distinct from
//! entanglement concentration.

mod coding;
mod subspace;

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};

pub use coding::{
    data_expansion_demo, k_encoding, k_encoding_difference, schmidt_coding_counterexample,
    two_sided_compression_analysis, two_sided_dense_state, CounterexampleReport, ExpansionReport,
    SequenceLabel, TwoSidedReport,
};
pub use subspace::{
    compress_block, expected_fidelity, expected_fidelity_enumerated, CompressedBlock,
    LikelySubspace, ENUMERATION_MAX_N,
};

use crate::error::{Error, Result};
use crate::locc::{branches, LocalOperation, Party, MIN_PROBABILITY};
use crate::qcore::linalg::{basis_vector, outer, re, ZERO};
use crate::qcore::{schmidt_decompose, DensityMatrix, PureBipartiteState, C64};

/// Ensemble of pure signal states with their probabilities.
#[derive(Debug, Clone)]
pub struct QuantumSource {
    states: Vec<DVector<C64>>,
    probabilities: Vec<f64>,
    density: DensityMatrix,
}

impl QuantumSource {
    pub fn new(states: Vec<DVector<C64>>, probabilities: Vec<f64>) -> Result<Self> {
        if states.is_empty() || states.len() != probabilities.len() {
            return Err(Error::InvalidParameter(
                "need one probability per signal state".into(),
            ));
        }
        let d = states[0].len();
        if let Some(bad) = states.iter().find(|s| s.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        if probabilities.iter().any(|&p| p.is_nan() || p < 0.0) {
            return Err(Error::InvalidParameter("negative probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized(total));
        }
        let mut rho = DMatrix::from_element(d, d, ZERO);
        for (s, &p) in states.iter().zip(&probabilities) {
            let n2 = s.norm_squared();
            if (n2 - 1.0).abs() > 1e-12 {
                return Err(Error::NotNormalized(n2));
            }
            rho += outer(s, s) * re(p);
        }
        Ok(Self {
            states,
            probabilities,
            density: DensityMatrix::new(rho)?,
        })
    }

    /// Orthogonal signals `↑`, `↓` with probabilities `cos²θ`, `sin²θ`.
    pub fn q(theta: f64) -> Self {
        let c2 = theta.cos().powi(2);
        Self::new(
            vec![basis_vector(2, 0), basis_vector(2, 1)],
            vec![c2, 1.0 - c2],
        )
        .expect("valid source")
    }

    /// Equiprobable `ψ⁰ = cos θ ↑ + sin θ ↓` and `ψ¹ = cos θ ↑ − sin θ ↓`.
    pub fn q_prime(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let psi0 = DVector::from_vec(vec![re(c), re(s)]);
        let psi1 = DVector::from_vec(vec![re(c), re(-s)]);
        Self::new(vec![psi0, psi1], vec![0.5, 0.5]).expect("valid source")
    }

    pub fn states(&self) -> &[DVector<C64>] {
        &self.states
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn density_matrix(&self) -> &DensityMatrix {
        &self.density
    }

    pub fn entropy(&self) -> f64 {
        self.density.entropy()
    }

    pub fn dim(&self) -> usize {
        self.density.dim()
    }
}

/// Bob's up/down measurement, ordered so that outcome 0 leaves Alice `↑`.
pub fn bob_up_down() -> LocalOperation {
    let down = basis_vector(2, 1);
    let up = basis_vector(2, 0);
    LocalOperation::projective(Party::Bob, vec![outer(&down, &down), outer(&up, &up)])
        .expect("complete basis")
        .with_label("up-down")
}

/// Bob's measurement in the basis `(↓ ∓ ↑)/√2`, which leaves Alice in `ψ⁰` or `ψ¹`.
pub fn bob_rotated() -> LocalOperation {
    let a = DVector::from_vec(vec![re(-FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)]);
    let b = DVector::from_vec(vec![re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)]);
    LocalOperation::projective(Party::Bob, vec![outer(&a, &a), outer(&b, &b)])
        .expect("complete basis")
        .with_label("rotated")
}

/// Fixes the global phase so that the first non-negligible component is real and positive.
pub(crate) fn fix_phase(v: &DVector<C64>) -> DVector<C64> {
    match v.iter().find(|z| z.norm() > 1e-12) {
        Some(z) => v * (z.conj() / re(z.norm())),
        None => v.clone(),
    }
}

/// The ensemble Bob's measurement steers Alice's half of `state` into.
pub fn source_from_entangled_state(
    state: &PureBipartiteState,
    bob_measurement: &LocalOperation,
) -> Result<QuantumSource> {
    if bob_measurement.party() != Party::Bob {
        return Err(Error::InvalidOperation(
            "the steering measurement must be Bob's".into(),
        ));
    }
    let mut states = Vec::new();
    let mut probs = Vec::new();
    for b in branches(state, bob_measurement)? {
        let Some(residual) = b.residual() else {
            continue;
        };
        let sf = schmidt_decompose(&residual);
        let second = sf.coefficients().get(1).copied().unwrap_or(0.0);
        if second > 1e-10 {
            return Err(Error::MixedConditionalState(second));
        }
        states.push(fix_phase(&sf.basis_a().column(0).into_owned()));
        probs.push(b.probability);
    }
    if probs.is_empty()
        || probs.iter().sum::<f64>() < 1.0 - 1e-10
        || probs.iter().any(|&p| p < MIN_PROBABILITY)
    {
        return Err(Error::InvalidOperation(
            "measurement does not resolve the state".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    let probs = probs.into_iter().map(|p| p / total).collect();
    QuantumSource::new(states, probs)
}

/// Applies the same single-qubit matrix to every qubit of an `n`-qubit vector
/// (qubit 0 is the most significant bit).
pub(crate) fn apply_per_qubit(v: &DVector<C64>, u: &DMatrix<C64>, n: usize) -> DVector<C64> {
    let mut out = v.clone();
    for q in 0..n {
        let stride = 1usize << (n - 1 - q);
        for i in 0..out.len() {
            if i & stride == 0 {
                let (a, b) = (out[i], out[i | stride]);
                out[i] = u[(0, 0)] * a + u[(0, 1)] * b;
                out[i | stride] = u[(1, 0)] * a + u[(1, 1)] * b;
            }
        }
    }
    out
}

/// Tensor product `ψ^{x₁} ⊗ … ⊗ ψ^{x_n}` of one-qubit signals.
pub fn block_state(source: &QuantumSource, x: &SequenceLabel) -> DVector<C64> {
    x.bits()
        .iter()
        .fold(DVector::from_element(1, re(1.0)), |acc, &b| {
            crate::qcore::linalg::kron_vec(&acc, &source.states()[b as usize])
        })
}
