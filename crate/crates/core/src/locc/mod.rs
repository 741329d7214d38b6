//! Two-party harness: local operations on one side of a shared pure state,
//! classical messages, transcripts, and audits of the no-signaling and
//! entanglement-nonincrease properties.

mod operation;
mod referee;
mod transcript;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};

pub use operation::{LocalOperation, OperationKind, Party, Placement};
pub use referee::{Referee, StepAudit};
pub use transcript::{bits_for, bits_of, Event, Transcript};

use crate::error::{Error, Result};
use crate::qcore::linalg::{nonzeros, re, ZERO};
use crate::qcore::{
    reduced_unnormalized, schmidt_decompose, shannon_entropy, PureBipartiteState, Side, C64,
};

/// Below this an outcome is treated as impossible.
pub const MIN_PROBABILITY: f64 = 1e-20;

/// How the outcome of a measurement is chosen.
pub enum OutcomeSelector<'a> {
    /// Sample according to the Born rule.
    Sample(&'a mut dyn RngCore),
    /// Post-select a given outcome (deterministic tests, replay).
    Forced(usize),
}

#[derive(Debug, Clone)]
pub struct LocalOutcome {
    pub outcome: usize,
    pub probability: f64,
    pub residual: PureBipartiteState,
}

/// One outcome of an operation with its unnormalized post-measurement state.
#[derive(Debug, Clone)]
pub struct Branch {
    pub outcome: usize,
    pub probability: f64,
    pub unnormalized: DMatrix<C64>,
}

impl Branch {
    pub fn residual(&self) -> Option<PureBipartiteState> {
        if self.probability < MIN_PROBABILITY {
            return None;
        }
        Some(PureBipartiteState::from_unchecked(
            &self.unnormalized / re(self.probability.sqrt()),
        ))
    }
}

fn check_dims(joint: &PureBipartiteState, op: &LocalOperation) -> Result<()> {
    let have = joint.dim(op.party().side());
    if have != op.register_dim() {
        return Err(Error::DimensionMismatch {
            expected: op.register_dim(),
            got: have,
        });
    }
    Ok(())
}

/// `(I_l ⊗ M ⊗ I_r)` applied to the rows (side A) or columns (side B) of `amp`.
pub(crate) fn apply_operator(
    amp: &DMatrix<C64>,
    side: Side,
    placement: Placement,
    op: &DMatrix<C64>,
) -> DMatrix<C64> {
    let (rows, cols) = amp.shape();
    let m = op.nrows();
    let Placement { left, right } = placement;
    let nz = nonzeros(op);
    let mut out = DMatrix::from_element(rows, cols, ZERO);
    let src = amp.as_slice();
    let dst = out.as_mut_slice();
    match side {
        Side::A => {
            for col in 0..cols {
                let base = col * rows;
                for &(i, k, v) in &nz {
                    for l in 0..left {
                        let to = base + (l * m + i) * right;
                        let from = base + (l * m + k) * right;
                        for r in 0..right {
                            dst[to + r] += v * src[from + r];
                        }
                    }
                }
            }
        }
        Side::B => {
            for &(j, k, v) in &nz {
                for l in 0..left {
                    for r in 0..right {
                        let to = ((l * m + j) * right + r) * rows;
                        let from = ((l * m + k) * right + r) * rows;
                        for row in 0..rows {
                            dst[to + row] += v * src[from + row];
                        }
                    }
                }
            }
        }
    }
    out
}

fn branch(joint: &PureBipartiteState, op: &LocalOperation, j: usize) -> Branch {
    let unnormalized = apply_operator(
        joint.amplitudes(),
        op.party().side(),
        op.placement(),
        &op.operators()[j],
    );
    Branch {
        outcome: j,
        probability: unnormalized.norm_squared(),
        unnormalized,
    }
}

/// Every outcome of `op` on `joint`, including impossible ones.
pub fn branches(joint: &PureBipartiteState, op: &LocalOperation) -> Result<Vec<Branch>> {
    check_dims(joint, op)?;
    Ok((0..op.outcome_count())
        .map(|j| branch(joint, op, j))
        .collect())
}

/// Performs `op`, returning the outcome, its probability and the renormalized residual state.
pub fn apply_local_operation(
    joint: &PureBipartiteState,
    op: &LocalOperation,
    selector: OutcomeSelector<'_>,
) -> Result<LocalOutcome> {
    check_dims(joint, op)?;
    let count = op.outcome_count();
    let chosen = match selector {
        OutcomeSelector::Forced(j) => {
            if j >= count {
                return Err(Error::OutcomeOutOfRange { index: j, count });
            }
            let b = branch(joint, op, j);
            if b.probability < MIN_PROBABILITY {
                return Err(Error::ZeroProbabilityOutcome(j));
            }
            b
        }
        OutcomeSelector::Sample(rng) => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut last_possible = None;
            let mut picked = None;
            for j in 0..count {
                let b = branch(joint, op, j);
                if b.probability < MIN_PROBABILITY {
                    continue;
                }
                acc += b.probability;
                if u < acc {
                    picked = Some(b);
                    break;
                }
                last_possible = Some(b);
            }
            // rounding can leave the cumulative sum a hair below u
            picked.or(last_possible).ok_or(Error::ZeroNorm)?
        }
    };
    let residual = chosen.residual().expect("probability checked above");
    Ok(LocalOutcome {
        outcome: chosen.outcome,
        probability: chosen.probability,
        residual,
    })
}

/// Entanglement before an operation, its expectation afterwards, and the outcome entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementAudit {
    pub before: f64,
    pub expected_after: f64,
    pub outcome_entropy: f64,
}

impl EntanglementAudit {
    pub const TOL: f64 = 1e-9;

    /// `E − H ≤ Σ p_j E_j ≤ E`, each side with slack `1e-9`.
    pub fn holds(&self) -> bool {
        self.expected_after <= self.before + Self::TOL
            && self.expected_after >= self.before - self.outcome_entropy - Self::TOL
    }
}

pub fn audit_expected_entanglement(
    joint: &PureBipartiteState,
    op: &LocalOperation,
) -> Result<EntanglementAudit> {
    let before = shannon_entropy(&schmidt_decompose(joint).weights());
    let mut probs = Vec::new();
    let mut expected_after = 0.0;
    for b in branches(joint, op)? {
        probs.push(b.probability);
        if let Some(r) = b.residual() {
            expected_after += b.probability * shannon_entropy(&schmidt_decompose(&r).weights());
        }
    }
    Ok(EntanglementAudit {
        before,
        expected_after,
        outcome_entropy: shannon_entropy(&probs),
    })
}

/// Largest entry of `ρ_other − Σ_j p_j ρ_other^(j)` for the party not acting.
pub fn verify_no_signaling(joint: &PureBipartiteState, op: &LocalOperation) -> Result<f64> {
    let other = op.party().side().other();
    let before = reduced_unnormalized(joint.amplitudes(), other);
    let mut after = DMatrix::from_element(before.nrows(), before.ncols(), ZERO);
    for b in branches(joint, op)? {
        // p_j ρ^(j) is the reduced matrix of the unnormalized branch
        after += reduced_unnormalized(&b.unnormalized, other);
    }
    Ok(before
        .iter()
        .zip(after.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

/// Sum of outcome probabilities; 1 for any valid operation.
pub fn total_probability(joint: &PureBipartiteState, op: &LocalOperation) -> Result<f64> {
    Ok(branches(joint, op)?.iter().map(|b| b.probability).sum())
}
