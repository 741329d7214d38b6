use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use super::operation::{LocalOperation, Party, Placement};
use super::transcript::{Event, Transcript};
use super::{
    apply_local_operation, audit_expected_entanglement, verify_no_signaling, EntanglementAudit,
    OutcomeSelector,
};
use crate::error::{Error, Result};
use crate::qcore::linalg::{kron, re};
use crate::qcore::{PureBipartiteState, Side, C64};

/// Audit results recorded for one operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAudit {
    pub step: usize,
    pub entanglement: EntanglementAudit,
    pub no_signaling: f64,
}

/// Owner of the shared joint state.
///
/// Parties act only through [`LocalOperation`]s on their own register, local
/// ancilla preparation and discarding of their own systems, and classical
/// messages. Every action lands in the transcript.
#[derive(Debug, Clone)]
pub struct Referee {
    joint: PureBipartiteState,
    transcript: Transcript,
    audit: bool,
    audits: Vec<StepAudit>,
}

impl Referee {
    pub fn new(joint: PureBipartiteState) -> Self {
        Self {
            joint,
            transcript: Transcript::new(),
            audit: false,
            audits: Vec::new(),
        }
    }

    /// Runs the nonincrease and no-signaling audits before every operation.
    pub fn with_audits(mut self, on: bool) -> Self {
        self.audit = on;
        self
    }

    pub fn joint(&self) -> &PureBipartiteState {
        &self.joint
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn audits(&self) -> &[StepAudit] {
        &self.audits
    }

    pub fn into_parts(self) -> (PureBipartiteState, Transcript, Vec<StepAudit>) {
        (self.joint, self.transcript, self.audits)
    }

    /// Samples an outcome of `op`; returns `(outcome, probability)`.
    pub fn apply(&mut self, op: &LocalOperation, rng: &mut dyn RngCore) -> Result<(usize, f64)> {
        self.run(op, OutcomeSelector::Sample(rng))
    }

    /// Post-selects outcome `j` of `op`; returns its probability.
    pub fn apply_forced(&mut self, op: &LocalOperation, j: usize) -> Result<f64> {
        self.run(op, OutcomeSelector::Forced(j)).map(|(_, p)| p)
    }

    fn run(&mut self, op: &LocalOperation, selector: OutcomeSelector<'_>) -> Result<(usize, f64)> {
        if self.audit {
            let entanglement = audit_expected_entanglement(&self.joint, op)?;
            let no_signaling = verify_no_signaling(&self.joint, op)?;
            self.audits.push(StepAudit {
                step: self.transcript.len(),
                entanglement,
                no_signaling,
            });
        }
        let out = apply_local_operation(&self.joint, op, selector)?;
        self.transcript.push(Event::Operation {
            party: op.party(),
            kind: op.kind(),
            label: op.label().to_string(),
            outcome: out.outcome,
            probability: out.probability,
        });
        self.joint = out.residual;
        Ok((out.outcome, out.probability))
    }

    pub fn send(&mut self, from: Party, bits: Vec<bool>) {
        self.transcript.push(Event::Message { from, bits });
    }

    /// Adds a pre-shared resource pair: its `A` half goes after Alice's register,
    /// its `B` half after Bob's.
    pub fn share(&mut self, resource: &PureBipartiteState) {
        self.joint = self.joint.tensor(resource);
    }

    /// Appends a locally prepared pure ancilla to the end of `party`'s register.
    pub fn prepare_ancilla(&mut self, party: Party, ancilla: &DVector<C64>) -> Result<()> {
        let n2 = ancilla.norm_squared();
        if (n2 - 1.0).abs() > crate::qcore::NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        let amp = match party.side() {
            Side::A => kron(
                self.joint.amplitudes(),
                &DMatrix::from_column_slice(ancilla.len(), 1, ancilla.as_slice()),
            ),
            Side::B => kron(
                self.joint.amplitudes(),
                &DMatrix::from_row_slice(1, ancilla.len(), ancilla.as_slice()),
            ),
        };
        self.joint = PureBipartiteState::from_unchecked(amp);
        Ok(())
    }

    /// Removes the factor of `party`'s register at `placement`, which must be in
    /// the pure state `known` (for example right after a projective measurement
    /// onto it). Fails if the factor is still correlated with anything else.
    pub fn discard(
        &mut self,
        party: Party,
        placement: Placement,
        known: &DVector<C64>,
    ) -> Result<()> {
        let m = known.len();
        let Placement { left, right } = placement;
        let side = party.side();
        if left * m * right != self.joint.dim(side) {
            return Err(Error::DimensionMismatch {
                expected: left * m * right,
                got: self.joint.dim(side),
            });
        }
        let amp = self.joint.amplitudes();
        let out = match side {
            Side::A => DMatrix::from_fn(left * right, amp.ncols(), |row, col| {
                let (l, r) = (row / right, row % right);
                (0..m)
                    .map(|i| known[i].conj() * amp[((l * m + i) * right + r, col)])
                    .sum()
            }),
            Side::B => DMatrix::from_fn(amp.nrows(), left * right, |row, col| {
                let (l, r) = (col / right, col % right);
                (0..m)
                    .map(|i| known[i].conj() * amp[(row, (l * m + i) * right + r)])
                    .sum()
            }),
        };
        let n2: f64 = out.iter().map(|x: &C64| x.norm_sqr()).sum();
        if (n2 - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidOperation(format!(
                "discarded factor is not in the stated product state (overlap {n2})"
            )));
        }
        self.joint = PureBipartiteState::from_unchecked(out / re(n2.sqrt()));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{basis_vector, ZERO};
    use crate::qcore::{entanglement_entropy, schmidt_decompose};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn up_down(party: Party) -> LocalOperation {
        let p0 = DMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 0 { re(1.0) } else { ZERO });
        let p1 = DMatrix::from_fn(2, 2, |i, j| if i == 1 && j == 1 { re(1.0) } else { ZERO });
        LocalOperation::projective(party, vec![p0, p1]).unwrap()
    }

    #[test]
    fn share_measure_discard() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut r = Referee::new(PureBipartiteState::singlet()).with_audits(true);
        r.share(&PureBipartiteState::singlet());
        assert_eq!((r.joint().dim_a(), r.joint().dim_b()), (4, 4));
        assert!((entanglement_entropy(r.joint()) - 2.0).abs() < 1e-12);
        let op = up_down(Party::Alice).on_factor(1, 2);
        let (j, p) = r.apply(&op, &mut rng).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        r.send(Party::Alice, vec![j == 1]);
        r.discard(
            Party::Alice,
            Placement { left: 1, right: 2 },
            &basis_vector(2, j),
        )
        .unwrap();
        assert_eq!(r.joint().dim_a(), 2);
        assert!((entanglement_entropy(r.joint()) - 1.0).abs() < 1e-12);
        assert_eq!(r.audits().len(), 1);
        assert!(r.audits()[0].entanglement.holds());
        assert_eq!(r.transcript().len(), 2);
    }

    #[test]
    fn discard_rejects_entangled_factor() {
        let mut r = Referee::new(PureBipartiteState::singlet());
        assert!(r
            .discard(Party::Bob, Placement::WHOLE, &basis_vector(2, 0))
            .is_err());
    }

    #[test]
    fn ancilla_goes_to_the_end() {
        let mut r = Referee::new(PureBipartiteState::singlet());
        r.prepare_ancilla(Party::Bob, &basis_vector(3, 2)).unwrap();
        assert_eq!(r.joint().dim_b(), 6);
        assert!(r.joint().amplitudes()[(0, 3 + 2)].re > 0.7);
        assert_eq!(schmidt_decompose(r.joint()).rank(1e-12), 2);
    }
}
