//! Entanglement dilution: preparing partly entangled states from singlets.
//!
//! Alice prepares the target state locally and teleports Bob's half to him,
//! optionally compressing it onto its likely subspace first so that fewer
//! singlets are consumed.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::locc::{
    bits_for, bits_of, branches, LocalOperation, OutcomeSelector, Party, Placement, Referee,
    StepAudit, Transcript,
};
use crate::qcore::linalg::{c, outer, re, ZERO};
use crate::qcore::{
    partial_trace, schmidt_decompose, DensityMatrix, PureBipartiteState, Side, C64,
};
use crate::qdc::LikelySubspace;
use crate::schmidt_projection::{concentrated_yield_per_pair, PairEnsembleSpec};

/// Largest `n` for which compressed dilution is simulated state by state.
pub const DENSE_DILUTION_MAX: usize = 10;

/// Resources used by one preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TeleportationLedger {
    pub singlets_consumed: u64,
    pub classical_bits_sent: u64,
    /// Dimension of the teleported system.
    pub target_dimension: u64,
}

impl TeleportationLedger {
    /// `⌈log₂ d⌉` singlets and twice as many classical bits.
    pub fn for_dimension(d: u64) -> Self {
        let q = bits_for(d as usize) as u64;
        Self {
            singlets_consumed: q,
            classical_bits_sent: 2 * q,
            target_dimension: d,
        }
    }
}

/// Per-run stock of singlets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingletSupply {
    available: u64,
    consumed: u64,
}

impl SingletSupply {
    pub fn new(available: u64) -> Self {
        Self {
            available,
            consumed: 0,
        }
    }

    pub fn take(&mut self, k: u64) -> Result<()> {
        if k > self.available {
            return Err(Error::InsufficientSinglets {
                needed: k,
                available: self.available,
            });
        }
        self.available -= k;
        self.consumed += k;
        Ok(())
    }

    pub fn remaining(&self) -> u64 {
        self.available
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }
}

/// `X^a Z^b` with `X|j⟩ = |j+1⟩`, `Z|j⟩ = ω^j |j⟩`.
pub fn weyl_operator(d: usize, a: usize, b: usize) -> DMatrix<C64> {
    let mut k = DMatrix::from_element(d, d, ZERO);
    for j in 0..d {
        let phase = TAU * ((b * j) % d) as f64 / d as f64;
        k[((j + a) % d, j)] = c(phase.cos(), phase.sin());
    }
    k
}

/// `(X^a Z^b ⊗ I) Σ_i |ii⟩/√d` as a `d²` vector.
pub fn bell_vector(d: usize, a: usize, b: usize) -> DVector<C64> {
    let k = weyl_operator(d, a, b);
    let s = 1.0 / (d as f64).sqrt();
    DVector::from_fn(d * d, |idx, _| k[(idx / d, idx % d)] * re(s))
}

/// Projective measurement in the generalized Bell basis; outcome `a·d + b`.
pub fn bell_measurement(d: usize) -> LocalOperation {
    let projectors = (0..d * d)
        .map(|o| {
            let v = bell_vector(d, o / d, o % d);
            outer(&v, &v)
        })
        .collect();
    LocalOperation::projective(Party::Alice, projectors)
        .expect("Bell basis is complete")
        .with_label("bell")
}

fn check_maximally_entangled(resource: &PureBipartiteState) -> Result<usize> {
    let d = resource.dim_a();
    if resource.dim_b() != d {
        return Err(Error::NotSquare(d, resource.dim_b()));
    }
    let flat = 1.0 / (d as f64).sqrt();
    let err = schmidt_decompose(resource)
        .coefficients()
        .iter()
        .map(|x| (x - flat).abs())
        .fold(0.0, f64::max);
    if err > 1e-10 {
        return Err(Error::NotMaximallyEntangled(err));
    }
    Ok(d)
}

/// Teleports the last `d`-dimensional factor of Alice's register to a new
/// factor at the end of Bob's register, consuming `resource`.
pub fn teleport_last_factor(
    referee: &mut Referee,
    resource: &PureBipartiteState,
    selector: OutcomeSelector<'_>,
) -> Result<(usize, f64)> {
    let d = check_maximally_entangled(resource)?;
    let alice = referee.joint().dim_a();
    if !alice.is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: alice,
        });
    }
    let left = alice / d;
    referee.share(resource);
    let bell = bell_measurement(d).on_factor(left, 1);
    let (outcome, p) = match selector {
        OutcomeSelector::Sample(rng) => referee.apply(&bell, rng)?,
        OutcomeSelector::Forced(j) => (j, referee.apply_forced(&bell, j)?),
    };
    let (a, b) = (outcome / d, outcome % d);
    let w = bits_for(d);
    let mut bits = bits_of(a, w);
    bits.extend(bits_of(b, w));
    referee.send(Party::Alice, bits);
    referee.discard(
        Party::Alice,
        Placement { left, right: 1 },
        &bell_vector(d, a, b),
    )?;
    // resource amplitudes M = V/√d with V unitary; Bob undoes Vᵀ K_ab†
    let v = resource.amplitudes() * re((d as f64).sqrt());
    let correction = weyl_operator(d, a, b) * v.map(|z| z.conj());
    let bob_left = referee.joint().dim_b() / d;
    let op = LocalOperation::unitary(Party::Bob, correction)?
        .on_factor(bob_left, 1)
        .with_label("correction");
    referee.apply_forced(&op, 0)?;
    Ok((outcome, p))
}

#[derive(Debug, Clone)]
pub struct TeleportResult {
    pub output: DVector<C64>,
    pub outcome: usize,
    pub probability: f64,
    pub ledger: TeleportationLedger,
    pub transcript: Transcript,
    pub audits: Vec<StepAudit>,
}

/// Teleports `input` through a maximally entangled `d × d` resource.
pub fn generalized_teleport(
    input: &DVector<C64>,
    resource: &PureBipartiteState,
    selector: OutcomeSelector<'_>,
) -> Result<TeleportResult> {
    let d = check_maximally_entangled(resource)?;
    if input.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: input.len(),
        });
    }
    let start = PureBipartiteState::new(DMatrix::from_column_slice(d, 1, input.as_slice()))?;
    let mut referee = Referee::new(start).with_audits(true);
    let (outcome, probability) = teleport_last_factor(&mut referee, resource, selector)?;
    let (joint, transcript, audits) = referee.into_parts();
    let output = joint.amplitudes().row(0).transpose();
    let mut ledger = TeleportationLedger::for_dimension(d as u64);
    ledger.classical_bits_sent = transcript.classical_bits() as u64;
    Ok(TeleportResult {
        output,
        outcome,
        probability,
        ledger,
        transcript,
        audits,
    })
}

/// Bob's reduced state averaged over Alice's Bell outcomes, i.e. what he holds
/// before her message arrives.
pub fn bob_state_before_message(
    input: &DVector<C64>,
    resource: &PureBipartiteState,
) -> Result<DensityMatrix> {
    let d = check_maximally_entangled(resource)?;
    let start = PureBipartiteState::new(DMatrix::from_column_slice(d, 1, input.as_slice()))?;
    let joint = start.tensor(resource);
    let mut rho = DMatrix::from_element(d, d, ZERO);
    for b in branches(&joint, &bell_measurement(d))? {
        if let Some(res) = b.residual() {
            rho += partial_trace(&res, Side::B).matrix() * re(b.probability);
        }
    }
    DensityMatrix::new(rho)
}

fn reverse_bits(x: usize, q: usize) -> usize {
    (0..q).fold(0, |acc, i| acc | (((x >> i) & 1) << (q - 1 - i)))
}

/// Teleports the last `q` qubits of Alice's register one at a time; Bob's
/// register then holds them in reverse order.
fn teleport_qubits(referee: &mut Referee, q: usize, rng: &mut dyn RngCore) -> Result<()> {
    let singlet = PureBipartiteState::singlet();
    for _ in 0..q {
        teleport_last_factor(referee, &singlet, OutcomeSelector::Sample(&mut *rng))?;
    }
    Ok(())
}

/// Result of preparing a shared state remotely.
#[derive(Debug, Clone)]
pub struct RemoteResult {
    pub shared: PureBipartiteState,
    pub ledger: TeleportationLedger,
    pub transcript: Transcript,
    pub audits: Vec<StepAudit>,
}

/// Alice prepares `target` on `A ⊗ C` and teleports `C` qubit by qubit
/// (padded to `2^⌈log₂ d_B⌉` levels).
pub fn prepare_entangled_remote(
    target: &PureBipartiteState,
    supply: &mut SingletSupply,
    rng: &mut dyn RngCore,
) -> Result<RemoteResult> {
    let (da, db) = (target.dim_a(), target.dim_b());
    let q = bits_for(db);
    supply.take(q as u64)?;
    let padded = 1usize << q;
    let mut lab = DMatrix::from_element(da * padded, 1, ZERO);
    for i in 0..da {
        for j in 0..db {
            lab[(i * padded + j, 0)] = target.amplitudes()[(i, j)];
        }
    }
    let mut referee = Referee::new(PureBipartiteState::new(lab)?).with_audits(da * padded <= 256);
    teleport_qubits(&mut referee, q, rng)?;
    if q > 1 {
        let images: Vec<usize> = (0..padded).map(|i| reverse_bits(i, q)).collect();
        referee.apply_forced(
            &LocalOperation::permutation(Party::Bob, &images)?.with_label("reorder"),
            0,
        )?;
    }
    let (joint, transcript, audits) = referee.into_parts();
    let amp = joint.amplitudes();
    let leak: f64 = (0..amp.nrows())
        .flat_map(|i| (db..padded).map(move |j| (i, j)))
        .map(|ij| amp[ij].norm_sqr())
        .sum();
    if leak > 1e-10 {
        return Err(Error::InvalidOperation(format!(
            "teleported state left the target levels ({leak})"
        )));
    }
    let shared = PureBipartiteState::normalize(amp.columns(0, db).into_owned())?;
    let mut ledger = TeleportationLedger::for_dimension(db as u64);
    ledger.classical_bits_sent = transcript.classical_bits() as u64;
    Ok(RemoteResult {
        shared,
        ledger,
        transcript,
        audits,
    })
}

/// Outcome of Alice's projection onto the likely subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionChoice {
    Sample,
    Pass,
    Fail,
}

#[derive(Debug, Clone)]
pub struct CompressedDilution {
    pub shared: PureBipartiteState,
    pub ledger: TeleportationLedger,
    pub passed: bool,
    /// `|⟨target|shared⟩|²` for this run.
    pub fidelity: f64,
    /// Probability that the projection succeeds; equals the fidelity of a successful run.
    pub retained_mass: f64,
    /// Fidelity averaged over both projection outcomes.
    pub expected_fidelity: f64,
    pub register_qubits: usize,
    pub retained_dimension: usize,
    pub transcript: Transcript,
}

fn register_qubits(sub: &LikelySubspace, n: usize) -> usize {
    let need = bits_for_big(sub.dimension());
    (sub.cap_log2().ceil() as usize).min(n).max(need)
}

fn bits_for_big(d: &BigUint) -> usize {
    if d <= &BigUint::from(1u32) {
        0
    } else {
        (d - 1u32).bits() as usize
    }
}

fn pair_subspace(spec: &PairEnsembleSpec, delta: f64) -> Result<(LikelySubspace, bool)> {
    let flip = spec.cos2() < 0.5;
    let (hi, lo) = if flip {
        (spec.sin2(), spec.cos2())
    } else {
        (spec.cos2(), spec.sin2())
    };
    Ok((
        LikelySubspace::from_eigenvalues(hi, lo, spec.n(), delta)?,
        flip,
    ))
}

/// `n` copies of the pair `cos θ |00⟩ + sin θ |11⟩`, with Bob's halves
/// compressed to a `q`-qubit register, teleported, and decoded by Bob.
pub fn prepare_entangled_compressed(
    theta: f64,
    n: usize,
    delta: f64,
    choice: ProjectionChoice,
    rng: &mut dyn RngCore,
) -> Result<CompressedDilution> {
    if n > DENSE_DILUTION_MAX {
        return Err(Error::TooLarge(format!(
            "{n} pairs (dense dilution limit {DENSE_DILUTION_MAX}); use dilution_cost"
        )));
    }
    let spec = PairEnsembleSpec::new(theta, n)?;
    let target = spec.dense_state()?;
    let (sub, flip) = pair_subspace(&spec, delta)?;
    let full = 1usize << n;
    let weight = |s: usize| {
        if flip {
            n - s.count_ones() as usize
        } else {
            s.count_ones() as usize
        }
    };
    let retained: Vec<usize> = (0..full)
        .filter(|&s| sub.contains_weight(weight(s)))
        .collect();
    let dim = retained.len();
    let q = register_qubits(&sub, n);
    let reg = 1usize << q;
    let t = target.amplitudes();

    let pass_prob: f64 = retained
        .iter()
        .map(|&s| (0..full).map(|a| t[(a, s)].norm_sqr()).sum::<f64>())
        .sum();
    let passed = match choice {
        ProjectionChoice::Pass => true,
        ProjectionChoice::Fail => false,
        ProjectionChoice::Sample => rng.random::<f64>() < pass_prob,
    };
    // Alice's lab after the projection and encoding, over A ⊗ Q
    let mut lab = DMatrix::from_element(full * reg, 1, ZERO);
    if passed {
        for (code, &s) in retained.iter().enumerate() {
            for a in 0..full {
                lab[(a * reg + code, 0)] = t[(a, s)];
            }
        }
    } else {
        // failure: Alice reads out C, keeps the collapsed A, and sends the code-0 state
        let rejected: Vec<(usize, usize, f64)> = (0..full)
            .filter(|s| !retained.contains(s))
            .flat_map(|s| (0..full).map(move |a| (a, s)))
            .map(|(a, s)| (a, s, t[(a, s)].norm_sqr()))
            .filter(|x| x.2 > 0.0)
            .collect();
        let total: f64 = rejected.iter().map(|x| x.2).sum();
        if total <= 0.0 {
            return Err(Error::ZeroProbabilityOutcome(1));
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let s_fail = rejected.iter().find(|x| {
            acc += x.2;
            u < acc
        });
        let s_fail = s_fail.unwrap_or(&rejected[rejected.len() - 1]).1;
        let norm: f64 = (0..full)
            .map(|a| t[(a, s_fail)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        for a in 0..full {
            lab[(a * reg, 0)] = t[(a, s_fail)] / re(norm);
        }
    }
    let mut referee = Referee::new(PureBipartiteState::normalize(lab)?);
    teleport_qubits(&mut referee, q, rng)?;

    // decode: reversed register ⊗ |0…0⟩ ancilla → retained string
    let anc_qubits = n - q;
    referee.prepare_ancilla(
        Party::Bob,
        &DVector::from_fn(1 << anc_qubits, |i, _| if i == 0 { re(1.0) } else { ZERO }),
    )?;
    let mut images = vec![usize::MAX; full];
    let mut used = vec![false; full];
    for (code, &s) in retained.iter().enumerate() {
        let input = reverse_bits(code, q) << anc_qubits;
        images[input] = s;
        used[s] = true;
    }
    let mut free = (0..full).filter(|&s| !used[s]);
    for img in images.iter_mut().filter(|i| **i == usize::MAX) {
        *img = free.next().expect("as many free outputs as free inputs");
    }
    referee.apply_forced(
        &LocalOperation::permutation(Party::Bob, &images)?.with_label("decode"),
        0,
    )?;

    let (shared, transcript, _) = referee.into_parts();
    let fidelity = target.inner(&shared)?.norm_sqr();
    let mut ledger = TeleportationLedger::for_dimension(reg as u64);
    ledger.classical_bits_sent = transcript.classical_bits() as u64;
    Ok(CompressedDilution {
        shared,
        ledger,
        passed,
        fidelity,
        retained_mass: pass_prob,
        expected_fidelity: pass_prob * pass_prob,
        register_qubits: q,
        retained_dimension: dim,
        transcript,
    })
}

/// Resource count of compressed dilution without simulating states.
#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub n: usize,
    pub singlets: u64,
    pub classical_bits: u64,
    pub retained_dimension: BigUint,
    /// `log₂` of the retained dimension: the fractional-qubit cost.
    pub log2_dimension: f64,
    pub retained_mass: f64,
    pub singlets_per_pair: f64,
    /// `H₂(cos²θ) + δ`.
    pub entropy_plus_delta: f64,
}

pub fn dilution_cost(theta: f64, n: usize, delta: f64) -> Result<CostReport> {
    let spec = PairEnsembleSpec::new(theta, n)?;
    let (sub, _) = pair_subspace(&spec, delta)?;
    let q = register_qubits(&sub, n) as u64;
    Ok(CostReport {
        n,
        singlets: q,
        classical_bits: 2 * q,
        retained_dimension: sub.dimension().clone(),
        log2_dimension: sub.dimension_log2(),
        retained_mass: sub.retained_mass(),
        singlets_per_pair: q as f64 / n as f64,
        entropy_plus_delta: spec.entanglement_per_pair() + delta,
    })
}

/// Target pairs obtained per source pair by concentrating `n` source pairs and
/// diluting into `n`-pair target blocks.
pub fn interconversion_yield(
    source_theta: f64,
    target_theta: f64,
    n: usize,
    delta: f64,
) -> Result<f64> {
    let concentrated = concentrated_yield_per_pair(&PairEnsembleSpec::new(source_theta, n)?);
    let cost = dilution_cost(target_theta, n, delta)?;
    if cost.singlets == 0 {
        return Err(Error::InvalidParameter(
            "target needs no entanglement".into(),
        ));
    }
    Ok(concentrated / cost.singlets_per_pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::entanglement_entropy;
    use crate::qcore::linalg::identity;
    use crate::qcore::random::{random_state, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn weyl_operators_are_unitary() {
        for d in 2..=5 {
            for a in 0..d {
                for b in 0..d {
                    assert!(crate::qcore::linalg::is_unitary(
                        &weyl_operator(d, a, b),
                        1e-12
                    ));
                }
            }
        }
    }

    #[test]
    fn every_outcome_reproduces_the_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..=4 {
            let input = random_state(d, 1, &mut rng).to_vector();
            for o in 0..d * d {
                let r = generalized_teleport(
                    &input,
                    &PureBipartiteState::maximally_entangled(d),
                    OutcomeSelector::Forced(o),
                )
                .unwrap();
                assert!((&r.output - &input).norm() < 1e-10, "d={d} outcome={o}");
                assert!((r.probability - 1.0 / (d * d) as f64).abs() < 1e-12);
                let q = bits_for(d) as u64;
                assert_eq!(
                    (r.ledger.singlets_consumed, r.ledger.classical_bits_sent),
                    (q, 2 * q)
                );
                assert!(r
                    .audits
                    .iter()
                    .all(|a| a.entanglement.holds() && a.no_signaling < 1e-9));
            }
        }
    }

    #[test]
    fn rotated_resource_and_singlet() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary(3, &mut rng);
        let resource = PureBipartiteState::new(&u * re(1.0 / 3f64.sqrt())).unwrap();
        let input = random_state(3, 1, &mut rng).to_vector();
        let r = generalized_teleport(&input, &resource, OutcomeSelector::Sample(&mut rng)).unwrap();
        assert!((&r.output - &input).norm() < 1e-10);
        let r = generalized_teleport(
            &input.rows(0, 2).normalize(),
            &PureBipartiteState::singlet(),
            OutcomeSelector::Forced(3),
        )
        .unwrap();
        assert!((&r.output - input.rows(0, 2).normalize()).norm() < 1e-10);
    }

    #[test]
    fn partly_entangled_resource_is_refused() {
        let input = DVector::from_vec(vec![re(1.0), ZERO]);
        let err = generalized_teleport(
            &input,
            &PureBipartiteState::partly_entangled_pair(0.3),
            OutcomeSelector::Forced(0),
        );
        assert!(matches!(err, Err(Error::NotMaximallyEntangled(_))));
    }

    #[test]
    fn bob_sees_maximally_mixed_before_message() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in 2..=3 {
            let input = random_state(d, 1, &mut rng).to_vector();
            let rho = bob_state_before_message(&input, &PureBipartiteState::maximally_entangled(d))
                .unwrap();
            let mixed = identity(d) * re(1.0 / d as f64);
            assert!(crate::qcore::linalg::max_abs_diff(rho.matrix(), &mixed) < 1e-10);
        }
    }

    #[test]
    fn remote_preparation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut supply = SingletSupply::new(1);
        let r = prepare_entangled_remote(&PureBipartiteState::singlet(), &mut supply, &mut rng)
            .unwrap();
        assert!(
            (r.shared
                .inner(&PureBipartiteState::singlet())
                .unwrap()
                .norm()
                - 1.0)
                .abs()
                < 1e-10
        );
        assert_eq!(supply.consumed(), 1);
        assert!(
            prepare_entangled_remote(&PureBipartiteState::singlet(), &mut supply, &mut rng)
                .is_err()
        );

        let target = PureBipartiteState::partly_entangled_pair(PI / 6.0);
        let mut supply = SingletSupply::new(5);
        let r = prepare_entangled_remote(&target, &mut supply, &mut rng).unwrap();
        assert!((entanglement_entropy(&r.shared) - 0.811278).abs() < 1e-6);
        assert!((target.inner(&r.shared).unwrap().norm() - 1.0).abs() < 1e-10);
        assert_eq!(r.ledger.singlets_consumed, 1);

        let target = random_state(3, 5, &mut rng);
        let r = prepare_entangled_remote(&target, &mut supply, &mut rng).unwrap();
        assert_eq!(
            (r.ledger.singlets_consumed, r.ledger.classical_bits_sent),
            (3, 6)
        );
        assert!((target.inner(&r.shared).unwrap().norm() - 1.0).abs() < 1e-10);
        assert!(r
            .audits
            .iter()
            .all(|a| a.entanglement.holds() && a.no_signaling < 1e-9));
    }

    #[test]
    fn compressed_small_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = prepare_entangled_compressed(FRAC_PI_4, 4, 0.1, ProjectionChoice::Sample, &mut rng)
            .unwrap();
        assert_eq!(d.ledger.singlets_consumed, 4);
        assert!((d.fidelity - 1.0).abs() < 1e-10);
        let spec_cos2 = 0.9f64;
        let theta = spec_cos2.sqrt().acos();
        let pass =
            prepare_entangled_compressed(theta, 6, 0.25, ProjectionChoice::Pass, &mut rng).unwrap();
        assert!((pass.fidelity - pass.retained_mass).abs() < 1e-10);
        assert!(pass.ledger.singlets_consumed < 6);
        let fail =
            prepare_entangled_compressed(theta, 6, 0.25, ProjectionChoice::Fail, &mut rng).unwrap();
        assert!(fail.fidelity < 1e-12);
        assert!(!fail.passed);
    }

    #[test]
    fn cost_accounting() {
        let theta = 0.9f64.sqrt().acos();
        let c = dilution_cost(theta, 10, 0.25).unwrap();
        assert_eq!(c.singlets, 8);
        assert_eq!(c.retained_dimension, BigUint::from(56u32));
        for n in [64, 256, 1024] {
            let c = dilution_cost(theta, n, 0.25).unwrap();
            assert!((c.singlets_per_pair - c.entropy_plus_delta).abs() < 0.02);
            assert!(c.singlets as f64 >= c.log2_dimension.ceil());
        }
    }
}
