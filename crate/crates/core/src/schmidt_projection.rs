//! Concentration by Schmidt projection.
//!
//! `n` identical pairs `cos θ |α₁β₁⟩ + sin θ |α₂β₂⟩` expand into `2^n` terms
//! whose coefficients depend only on how many factors contribute `sin θ`.
//! Measuring that count `k` leaves a maximally entangled state of Schmidt rank
//! `C(n,k)`. Repeating on further batches multiplies these ranks into `D_m`;
//! once `D_m` is just above a power of two `2^ℓ`, a two-outcome projection
//! extracts `ℓ` singlets with probability `2^ℓ / D_m`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_traits::{Float, One, ToPrimitive, Zero};
use rand::{Rng, RngCore};

use crate::binomial::{binomial, binomial_pmf, binomial_row, frac_log2, log2_big};
use crate::error::{Error, Result};
use crate::locc::{
    audit_expected_entanglement, bits_for, bits_of, verify_no_signaling, EntanglementAudit, Event,
    LocalOperation, OperationKind, OutcomeSelector, Party, Referee, Transcript, MIN_PROBABILITY,
};
use crate::qcore::linalg::{kron, re, ZERO};
use crate::qcore::{binary_entropy, schmidt_decompose, shannon_entropy, PureBipartiteState};

/// Largest number of pairs simulated as a dense `2^n × 2^n` amplitude matrix.
pub const DENSE_MAX_PAIRS: usize = 12;

/// `n` pairs sharing the same angle `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEnsembleSpec {
    theta: f64,
    cos2: f64,
    n: usize,
}

impl PairEnsembleSpec {
    pub fn new(theta: f64, n: usize) -> Result<Self> {
        if !(theta > 0.0 && theta < FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "theta {theta} outside (0, pi/2)"
            )));
        }
        Self::checked(theta, theta.cos().powi(2), n)
    }

    /// Parameterized by `cos²θ ∈ (0, 1)`.
    pub fn from_cos2(cos2: f64, n: usize) -> Result<Self> {
        if !(cos2 > 0.0 && cos2 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cos^2 theta {cos2} outside (0, 1)"
            )));
        }
        Self::checked(cos2.sqrt().acos(), cos2, n)
    }

    fn checked(theta: f64, cos2: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one pair".into()));
        }
        Ok(Self { theta, cos2, n })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cos2(&self) -> f64 {
        self.cos2
    }

    pub fn sin2(&self) -> f64 {
        1.0 - self.cos2
    }

    /// Entropy of entanglement of one pair, `H₂(cos²θ)`.
    pub fn entanglement_per_pair(&self) -> f64 {
        binary_entropy(self.cos2)
    }

    /// The full `n`-pair state with Alice's qubits grouped as the `A` register
    /// and Bob's as `B`; the amplitude matrix is `diag(cos θ, sin θ)^{⊗n}`.
    pub fn dense_state(&self) -> Result<PureBipartiteState> {
        if self.n > DENSE_MAX_PAIRS {
            return Err(Error::TooLarge(format!(
                "{} pairs (dense limit {DENSE_MAX_PAIRS})",
                self.n
            )));
        }
        let mut pair = DMatrix::from_element(2, 2, ZERO);
        pair[(0, 0)] = re(self.cos2.sqrt());
        pair[(1, 1)] = re(self.sin2().sqrt());
        let mut amp = DMatrix::from_element(1, 1, re(1.0));
        for _ in 0..self.n {
            amp = kron(&amp, &pair);
        }
        PureBipartiteState::normalize(amp)
    }
}

/// One possible result of the `k` measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct KOutcome {
    pub k: usize,
    pub probability: f64,
    /// Schmidt rank `C(n,k)` of the residual state.
    pub residual_dimension: BigUint,
    /// `log₂ C(n,k)` ebits.
    pub residual_entanglement: f64,
}

/// `p_k = C(n,k) (cos²θ)^{n−k} (sin²θ)^k` for `k = 0..=n`.
pub fn outcome_distribution(spec: &PairEnsembleSpec) -> Vec<KOutcome> {
    let probs = binomial_pmf(spec.n, spec.sin2());
    binomial_row(spec.n)
        .into_iter()
        .zip(probs)
        .enumerate()
        .map(|(k, (c, p))| KOutcome {
            k,
            probability: p,
            residual_entanglement: log2_big(&c),
            residual_dimension: c,
        })
        .collect()
}

/// Expected entanglement left after the `k` measurement, `Σ_k p_k log₂ C(n,k)` ebits
/// for the whole batch.
pub fn expected_concentrated_entanglement(spec: &PairEnsembleSpec) -> f64 {
    outcome_distribution(spec)
        .iter()
        .map(|o| o.probability * o.residual_entanglement)
        .sum()
}

/// Per-pair yield `expected_concentrated_entanglement / n`.
pub fn concentrated_yield_per_pair(spec: &PairEnsembleSpec) -> f64 {
    expected_concentrated_entanglement(spec) / spec.n as f64
}

/// Inverse-CDF sampler for `k`.
#[derive(Debug, Clone)]
pub struct KSampler {
    cumulative: Vec<f64>,
    last_possible: usize,
}

impl KSampler {
    pub fn new(spec: &PairEnsembleSpec) -> Self {
        let probs = binomial_pmf(spec.n, spec.sin2());
        let last_possible = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self {
            cumulative,
            last_possible,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.last_possible)
            .min(self.last_possible)
    }
}

fn hamming_projectors(n: usize) -> Vec<DMatrix<nalgebra::Complex<f64>>> {
    let dim = 1usize << n;
    (0..=n)
        .map(|k| {
            let mut p = DMatrix::from_element(dim, dim, ZERO);
            for s in 0..dim {
                if s.count_ones() as usize == k {
                    p[(s, s)] = re(1.0);
                }
            }
            p
        })
        .collect()
}

/// Projective measurement of the number of `1` bits in a party's `n`-qubit register.
pub fn k_measurement(n: usize, party: Party) -> LocalOperation {
    LocalOperation::projective(party, hamming_projectors(n))
        .expect("Hamming-weight projectors are complete")
        .with_label("schmidt-k")
}

#[derive(Debug, Clone)]
pub struct KMeasurement {
    pub k: usize,
    pub probability: f64,
    pub residual: PureBipartiteState,
}

/// Measures `k` on a dense `n`-pair state from Alice's side.
///
/// Same outcome statistics and residuals as applying [`k_measurement`], but the
/// diagonal projectors are applied row by row instead of as dense matrices.
pub fn measure_k(
    state: &PureBipartiteState,
    n: usize,
    selector: OutcomeSelector<'_>,
) -> Result<KMeasurement> {
    let dim = 1usize << n;
    if state.dim_a() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: state.dim_a(),
        });
    }
    let amps = state.amplitudes();
    let mut probs = vec![0.0; n + 1];
    for i in 0..dim {
        probs[i.count_ones() as usize] += amps.row(i).norm_squared();
    }
    let k = match selector {
        OutcomeSelector::Forced(k) => {
            if k > n {
                return Err(Error::OutcomeOutOfRange {
                    index: k,
                    count: n + 1,
                });
            }
            if probs[k] < MIN_PROBABILITY {
                return Err(Error::ZeroProbabilityOutcome(k));
            }
            k
        }
        OutcomeSelector::Sample(rng) => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut last_possible = None;
            let mut picked = None;
            for (k, &p) in probs.iter().enumerate() {
                if p < MIN_PROBABILITY {
                    continue;
                }
                acc += p;
                if u < acc {
                    picked = Some(k);
                    break;
                }
                last_possible = Some(k);
            }
            picked.or(last_possible).ok_or(Error::ZeroNorm)?
        }
    };
    let scale = re(1.0 / probs[k].sqrt());
    let projected = DMatrix::from_fn(dim, state.dim_b(), |i, j| {
        if i.count_ones() as usize == k {
            amps[(i, j)] * scale
        } else {
            ZERO
        }
    });
    Ok(KMeasurement {
        k,
        probability: probs[k],
        residual: PureBipartiteState::from_unchecked(projected),
    })
}

/// Parameters of the standardization walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    pub batch_n: usize,
    /// Accept `D_m ∈ [2^ℓ, 2^ℓ(1+ε)]`. Zero demands an exact power of two.
    pub epsilon: f64,
    /// The stop rule is not consulted before this many batches.
    pub min_batches: usize,
    pub max_steps: usize,
}

impl WalkConfig {
    pub fn new(batch_n: usize, epsilon: f64) -> Self {
        Self {
            batch_n,
            epsilon,
            min_batches: 1,
            max_steps: 1_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.batch_n == 0 {
            return Err(Error::InvalidParameter(
                "batch size must be positive".into(),
            ));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon {} must be finite and >= 0",
                self.epsilon
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    /// The `k` source ran out before the stop rule fired.
    Running,
    Success {
        singlets: u64,
    },
    /// The final projection landed in the small leftover subspace; everything is lost.
    Failure,
    /// `max_steps` batches without reaching the stop rule.
    Exhausted,
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            RunStatus::Running => "running",
            RunStatus::Success { .. } => "success",
            RunStatus::Failure => "failure",
            RunStatus::Exhausted => "exhausted",
        }
    }
}

/// Record of one standardization walk.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationRun {
    pub config: WalkConfig,
    pub k_sequence: Vec<usize>,
    /// `D_m = Π C(n, k_i)`, exact.
    pub product: BigUint,
    /// `Z_1, …, Z_m`, the fractional parts of `log₂ D_i`.
    pub mantissas: Vec<f64>,
    /// `Σ log₂ C(n, k_i)` accumulated in floating point, for drift checks.
    pub log2_accumulated: f64,
    pub status: RunStatus,
    /// `2^ℓ / D_m` when the stop rule fired.
    pub success_probability: Option<f64>,
    /// Largest deviation among nonzero Schmidt coefficients of the measured
    /// residuals (dense runs only).
    pub flatness_error: Option<f64>,
    /// Bound on `|c − 2^{−ℓ/2}|` over the Schmidt coefficients of the extracted
    /// state, from the coefficient spread of every measured residual (dense
    /// successful runs only).
    pub final_flatness_bound: Option<f64>,
}

impl ConcentrationRun {
    pub fn steps(&self) -> usize {
        self.k_sequence.len()
    }

    pub fn singlets(&self) -> u64 {
        match self.status {
            RunStatus::Success { singlets } => singlets,
            _ => 0,
        }
    }

    pub fn pairs_consumed(&self) -> u64 {
        (self.steps() * self.config.batch_n) as u64
    }

    /// Singlets per pair consumed; zero before any batch.
    pub fn yield_rate(&self) -> f64 {
        match self.pairs_consumed() {
            0 => 0.0,
            p => self.singlets() as f64 / p as f64,
        }
    }

    /// `ℓ = ⌊log₂ D_m⌋`.
    pub fn ell(&self) -> u64 {
        self.product.bits().saturating_sub(1)
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissas.last().copied().unwrap_or(0.0)
    }
}

/// Whether `d = 2^ℓ` or `2^ℓ < d < 2^ℓ(1+ε)` with `ℓ = ⌊log₂ d⌋`, decided in
/// exact arithmetic.
pub fn near_power_of_two(d: &BigUint, epsilon: f64) -> bool {
    let ell = d.bits().saturating_sub(1);
    let base = BigUint::one() << ell;
    let excess = d - &base;
    if excess.is_zero() {
        return true;
    }
    // epsilon = mant · 2^exp exactly
    let (mant, exp, _) = epsilon.integer_decode();
    let shift = exp as i64 + ell as i64;
    if shift >= 0 {
        excess < BigUint::from(mant) << (shift as u64)
    } else {
        (excess << ((-shift) as u64)) < BigUint::from(mant)
    }
}

/// Incremental form of [`standardize`].
#[derive(Debug, Clone)]
pub struct StandardizationWalk {
    run: ConcentrationRun,
    ready: bool,
    log_spread: Option<f64>,
}

impl StandardizationWalk {
    pub fn new(config: WalkConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            run: ConcentrationRun {
                config,
                k_sequence: Vec::new(),
                product: BigUint::one(),
                mantissas: Vec::new(),
                log2_accumulated: 0.0,
                status: RunStatus::Running,
                success_probability: None,
                flatness_error: None,
                final_flatness_bound: None,
            },
            ready: false,
            log_spread: None,
        })
    }

    /// Folds in one batch result; returns whether the stop rule now holds.
    pub fn push(&mut self, k: usize) -> Result<bool> {
        let cfg = self.run.config;
        if k > cfg.batch_n {
            return Err(Error::InvalidParameter(format!(
                "k = {k} exceeds batch size {}",
                cfg.batch_n
            )));
        }
        if self.ready {
            return Err(Error::InvalidParameter("walk has already stopped".into()));
        }
        let c = binomial(cfg.batch_n, k);
        self.run.log2_accumulated += log2_big(&c);
        self.run.product *= c;
        self.run.k_sequence.push(k);
        self.run.mantissas.push(frac_log2(&self.run.product));
        self.ready = self.run.steps() >= cfg.min_batches
            && self.run.ell() >= 1
            && near_power_of_two(&self.run.product, cfg.epsilon);
        Ok(self.ready)
    }

    pub fn is_ready(&self) -> bool {
        self.ready
    }

    pub fn steps(&self) -> usize {
        self.run.steps()
    }

    pub fn run(&self) -> &ConcentrationRun {
        &self.run
    }

    /// Records the nonzero Schmidt coefficients of a measured residual.
    pub fn note_residual(&mut self, coefficients: &[f64]) {
        let nz: Vec<f64> = coefficients
            .iter()
            .copied()
            .filter(|&c| c > 1e-12)
            .collect();
        let (lo, hi) = nz.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &c| {
            (lo.min(c), hi.max(c))
        });
        let flat = 1.0 / (nz.len() as f64).sqrt();
        let err = nz.iter().map(|c| (c - flat).abs()).fold(0.0, f64::max);
        self.run.flatness_error = Some(self.run.flatness_error.unwrap_or(0.0).max(err));
        self.log_spread = Some(self.log_spread.unwrap_or(0.0) + (hi / lo).ln());
    }

    /// Performs the final two-outcome projection when the stop rule holds.
    /// Returns the run and, if the projection happened, its outcome probability.
    pub fn finish<R: Rng + ?Sized>(mut self, rng: &mut R) -> ConcentrationRun {
        if self.ready {
            let p = 2f64.powf(-frac_log2(&self.run.product));
            self.run.success_probability = Some(p);
            let u: f64 = rng.random();
            self.run.status = if u < p {
                RunStatus::Success {
                    singlets: self.run.ell(),
                }
            } else {
                RunStatus::Failure
            };
            if let (RunStatus::Success { singlets }, Some(spread)) =
                (self.run.status, self.log_spread)
            {
                // every kept coefficient lies in [a, b] with a ≤ 2^{−ℓ/2} ≤ b and b/a ≤ e^spread
                self.run.final_flatness_bound =
                    Some(spread.exp_m1() * 2f64.powf(-(singlets as f64) / 2.0));
            }
        } else if self.run.steps() >= self.run.config.max_steps {
            self.run.status = RunStatus::Exhausted;
        }
        self.run
    }
}

/// Accumulates `D_m` from the supplied `k` values until the stop rule holds, then
/// projects onto the `2^ℓ`-dimensional part.
pub fn standardize<I, R>(ks: I, config: WalkConfig, rng: &mut R) -> Result<ConcentrationRun>
where
    I: IntoIterator<Item = usize>,
    R: Rng + ?Sized,
{
    let mut walk = StandardizationWalk::new(config)?;
    for k in ks {
        if walk.steps() >= config.max_steps || walk.push(k)? {
            break;
        }
    }
    Ok(walk.finish(rng))
}

/// How the `k` values are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolMode {
    /// Sample `k` from its binomial distribution; exact for any `n`.
    Symbolic,
    /// Simulate each batch as a dense state held by a [`Referee`], with audits (`n ≤ 12`).
    Dense,
}

/// How Bob learns `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KVariant {
    /// Alice measures and sends `k`.
    Message,
    /// Both measure locally and, by the correlations, agree.
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub epsilon: f64,
    pub min_batches: usize,
    pub max_steps: usize,
    pub mode: ProtocolMode,
    pub variant: KVariant,
}

impl ProtocolConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            min_batches: 1,
            max_steps: 1_000_000,
            mode: ProtocolMode::Symbolic,
            variant: KVariant::Message,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProtocolReport {
    pub run: ConcentrationRun,
    pub transcript: Transcript,
    /// One entanglement audit per measurement.
    pub audits: Vec<EntanglementAudit>,
    /// Largest no-signaling deviation seen (dense mode).
    pub max_no_signaling: Option<f64>,
}

impl ProtocolReport {
    pub fn singlets(&self) -> u64 {
        self.run.singlets()
    }

    pub fn pairs_consumed(&self) -> u64 {
        self.run.pairs_consumed()
    }

    pub fn yield_rate(&self) -> f64 {
        self.run.yield_rate()
    }
}

/// Batches of `n` pairs measured for `k` and fed to the standardization walk,
/// with every step recorded and audited.
pub fn run_full_protocol(
    spec: &PairEnsembleSpec,
    config: &ProtocolConfig,
    rng: &mut dyn RngCore,
) -> Result<ProtocolReport> {
    if config.epsilon <= 0.0 || !config.epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon {} must be positive",
            config.epsilon
        )));
    }
    let walk_cfg = WalkConfig {
        batch_n: spec.n,
        epsilon: config.epsilon,
        min_batches: config.min_batches.max(1),
        max_steps: config.max_steps,
    };
    let mut walk = StandardizationWalk::new(walk_cfg)?;
    let mut transcript = Transcript::new();
    let mut audits = Vec::new();
    let mut max_ns: Option<f64> = None;
    let k_bits = bits_for(spec.n + 1);

    let dists = outcome_distribution(spec);
    let symbolic_audit = EntanglementAudit {
        before: spec.n as f64 * spec.entanglement_per_pair(),
        expected_after: dists
            .iter()
            .map(|o| o.probability * o.residual_entanglement)
            .sum(),
        outcome_entropy: shannon_entropy(&dists.iter().map(|o| o.probability).collect::<Vec<_>>()),
    };
    let sampler = KSampler::new(spec);
    let (alice_k, bob_k) = match config.mode {
        ProtocolMode::Dense => (
            Some(k_measurement(spec.n, Party::Alice)),
            Some(k_measurement(spec.n, Party::Bob)),
        ),
        ProtocolMode::Symbolic => (None, None),
    };
    let fresh = match config.mode {
        ProtocolMode::Dense => Some(spec.dense_state()?),
        ProtocolMode::Symbolic => None,
    };
    // every batch starts from the same state, so Alice's audit is computed once
    // and Bob's once per value of k
    let alice_audit = match (&fresh, &alice_k) {
        (Some(state), Some(op)) => Some((
            audit_expected_entanglement(state, op)?,
            verify_no_signaling(state, op)?,
        )),
        _ => None,
    };
    let mut bob_audits: Vec<Option<(EntanglementAudit, f64)>> = vec![None; spec.n + 1];

    while walk.steps() < walk_cfg.max_steps {
        let k = match (&fresh, &alice_k, &bob_k) {
            (Some(state), Some(alice_op), Some(bob_op)) => {
                let mut referee = Referee::new(state.clone());
                let (k, _) = referee.apply(alice_op, rng)?;
                let mut batch_audits = vec![alice_audit.expect("dense mode audits Alice")];
                match config.variant {
                    KVariant::Message => referee.send(Party::Alice, bits_of(k, k_bits)),
                    KVariant::Correlated => {
                        if bob_audits[k].is_none() {
                            let joint = referee.joint();
                            bob_audits[k] = Some((
                                audit_expected_entanglement(joint, bob_op)?,
                                verify_no_signaling(joint, bob_op)?,
                            ));
                        }
                        batch_audits.extend(bob_audits[k]);
                        let (kb, _) = referee.apply(bob_op, rng)?;
                        if kb != k {
                            return Err(Error::InvalidOperation(format!(
                                "Bob measured k = {kb}, Alice {k}"
                            )));
                        }
                    }
                }
                let (residual, t, _) = referee.into_parts();
                let schmidt = schmidt_decompose(&residual);
                let expected_rank = binomial(spec.n, k).to_usize().expect("dense n is small");
                let rank = schmidt.rank(1e-12);
                if rank != expected_rank {
                    return Err(Error::InvalidOperation(format!(
                        "residual rank {rank}, expected {expected_rank}"
                    )));
                }
                walk.note_residual(schmidt.coefficients());
                for (entanglement, no_signaling) in batch_audits {
                    audits.push(entanglement);
                    max_ns = Some(max_ns.unwrap_or(0.0).max(no_signaling));
                }
                transcript.extend(t);
                k
            }
            _ => {
                let k = sampler.sample(rng);
                transcript.push(Event::Operation {
                    party: Party::Alice,
                    kind: OperationKind::Projective,
                    label: "schmidt-k".into(),
                    outcome: k,
                    probability: dists[k].probability,
                });
                if config.variant == KVariant::Message {
                    transcript.push(Event::Message {
                        from: Party::Alice,
                        bits: bits_of(k, k_bits),
                    });
                }
                audits.push(symbolic_audit);
                k
            }
        };
        if walk.push(k)? {
            break;
        }
    }

    let run = walk.finish(rng);
    if let Some(p) = run.success_probability {
        let (outcome, prob) = match run.status {
            RunStatus::Success { .. } => (0, p),
            _ => (1, 1.0 - p),
        };
        transcript.push(Event::Operation {
            party: Party::Alice,
            kind: OperationKind::Projective,
            label: "power-of-two-split".into(),
            outcome,
            probability: prob,
        });
        transcript.push(Event::Message {
            from: Party::Alice,
            bits: vec![outcome == 1],
        });
    }
    Ok(ProtocolReport {
        run,
        transcript,
        audits,
        max_no_signaling: max_ns,
    })
}

/// Expected singlets per pair with the worst-case success factor `1/(1+ε)` applied.
pub fn predicted_yield_rate(spec: &PairEnsembleSpec, epsilon: f64) -> f64 {
    concentrated_yield_per_pair(spec) / (1.0 + epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locc::apply_local_operation;
    use crate::qcore::linalg::max_abs_diff;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn single_pair_distribution() {
        let spec = PairEnsembleSpec::new(0.3, 1).unwrap();
        let d = outcome_distribution(&spec);
        assert!((d[0].probability - 0.3f64.cos().powi(2)).abs() < 1e-15);
        assert!((d[1].probability - 0.3f64.sin().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn two_maximally_entangled_pairs() {
        let spec = PairEnsembleSpec::new(FRAC_PI_4, 2).unwrap();
        let p: Vec<f64> = outcome_distribution(&spec)
            .iter()
            .map(|o| o.probability)
            .collect();
        for (a, b) in p.iter().zip([0.25, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((expected_concentrated_entanglement(&spec) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        assert!(PairEnsembleSpec::new(0.0, 2).is_err());
        assert!(PairEnsembleSpec::new(FRAC_PI_2, 2).is_err());
        assert!(PairEnsembleSpec::new(0.5, 0).is_err());
        assert!(PairEnsembleSpec::from_cos2(1.0, 2).is_err());
        assert!(PairEnsembleSpec::new(0.1, 13)
            .unwrap()
            .dense_state()
            .is_err());
        let s = PairEnsembleSpec::from_cos2(0.75, 3).unwrap();
        assert!((s.theta() - PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exact_power_of_two_test() {
        assert!(near_power_of_two(&BigUint::from(8u32), 0.0));
        assert!(!near_power_of_two(&BigUint::from(9u32), 0.1));
        assert!(!near_power_of_two(&BigUint::from(9u32), 0.125));
        assert!(near_power_of_two(&BigUint::from(9u32), 0.126));
        assert!(near_power_of_two(&BigUint::from(1u32), 0.0));
        let big = (BigUint::one() << 200usize) + 1u32;
        assert!(near_power_of_two(&big, 1e-60));
        assert!(!near_power_of_two(&big, 1e-61));
    }

    #[test]
    fn standardize_supplied_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = WalkConfig {
            batch_n: 2,
            epsilon: 0.01,
            min_batches: 3,
            max_steps: 100,
        };
        let run = standardize([1, 1, 1], cfg, &mut rng).unwrap();
        assert_eq!(run.product, BigUint::from(8u32));
        assert_eq!(run.mantissa(), 0.0);
        assert_eq!(run.status, RunStatus::Success { singlets: 3 });
        assert_eq!(run.success_probability, Some(1.0));

        let cfg = WalkConfig {
            batch_n: 2,
            epsilon: 0.5,
            min_batches: 1,
            max_steps: 100,
        };
        let run = standardize([1], cfg, &mut rng).unwrap();
        assert_eq!(run.status, RunStatus::Success { singlets: 1 });
        assert_eq!(run.steps(), 1);
    }

    #[test]
    fn standardize_status_distinctions() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // C(3,1) = 3 never gets near a power of two with epsilon 0.01 in two steps
        let cfg = WalkConfig {
            batch_n: 3,
            epsilon: 0.01,
            min_batches: 1,
            max_steps: 2,
        };
        let run = standardize([1, 1, 1, 1], cfg, &mut rng).unwrap();
        assert_eq!(run.status, RunStatus::Exhausted);
        assert_eq!(run.steps(), 2);
        let cfg = WalkConfig {
            max_steps: 50,
            ..cfg
        };
        let run = standardize([1, 1], cfg, &mut rng).unwrap();
        assert_eq!(run.status, RunStatus::Running);
        assert!(standardize([4], cfg, &mut rng).is_err());
        assert!(StandardizationWalk::new(WalkConfig {
            epsilon: -1.0,
            ..cfg
        })
        .is_err());
    }

    #[test]
    fn failure_branch_loses_everything() {
        // D = 3 < 2(1+0.6): success probability 2/3
        let cfg = WalkConfig {
            batch_n: 3,
            epsilon: 0.6,
            min_batches: 1,
            max_steps: 10,
        };
        let mut seen = (false, false);
        for seed in 0..64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let run = standardize([1], cfg, &mut rng).unwrap();
            assert!((run.success_probability.unwrap() - 2.0 / 3.0).abs() < 1e-15);
            match run.status {
                RunStatus::Success { singlets } => {
                    assert_eq!(singlets, 1);
                    seen.0 = true;
                }
                RunStatus::Failure => {
                    assert_eq!(run.singlets(), 0);
                    seen.1 = true;
                }
                s => panic!("unexpected {s:?}"),
            }
        }
        assert_eq!(seen, (true, true));
    }

    #[test]
    fn nothing_to_extract_keeps_walking() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = WalkConfig {
            batch_n: 2,
            epsilon: 0.0,
            min_batches: 1,
            max_steps: 10,
        };
        let run = standardize([0, 2, 0, 1, 1], cfg, &mut rng).unwrap();
        assert_eq!(run.steps(), 4);
        assert_eq!(run.status, RunStatus::Success { singlets: 1 });
    }

    #[test]
    fn residuals_are_maximally_entangled() {
        for &theta in &[0.2, PI / 6.0, 0.7, 1.1] {
            let spec = PairEnsembleSpec::new(theta, 3).unwrap();
            let state = spec.dense_state().unwrap();
            for k in 0..=3 {
                let m = measure_k(&state, 3, OutcomeSelector::Forced(k)).unwrap();
                let sf = schmidt_decompose(&m.residual);
                let c = binomial(3, k).to_usize().unwrap();
                assert_eq!(sf.rank(1e-12), c);
                assert!(sf.flatness_error(1e-12) < 1e-10);
                let e = crate::qcore::entanglement_entropy(&m.residual);
                assert!(
                    (e - (c as f64).log2()).abs() < 1e-10,
                    "theta={theta} k={k} e={e}"
                );
            }
        }
    }

    #[test]
    fn row_projection_matches_operator() {
        let state = PairEnsembleSpec::new(0.5, 4)
            .unwrap()
            .dense_state()
            .unwrap();
        let op = k_measurement(4, Party::Alice);
        for k in 0..=4 {
            let fast = measure_k(&state, 4, OutcomeSelector::Forced(k)).unwrap();
            let slow = apply_local_operation(&state, &op, OutcomeSelector::Forced(k)).unwrap();
            assert!((fast.probability - slow.probability).abs() < 1e-14);
            assert!(max_abs_diff(fast.residual.amplitudes(), slow.residual.amplitudes()) < 1e-14);
        }
        let mut r1 = ChaCha8Rng::seed_from_u64(3);
        let mut r2 = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let fast = measure_k(&state, 4, OutcomeSelector::Sample(&mut r1)).unwrap();
            let slow =
                apply_local_operation(&state, &op, OutcomeSelector::Sample(&mut r2)).unwrap();
            assert_eq!(fast.k, slow.outcome);
        }
        assert!(measure_k(&state, 3, OutcomeSelector::Forced(0)).is_err());
        assert!(measure_k(&state, 4, OutcomeSelector::Forced(5)).is_err());
    }

    #[test]
    fn dense_and_symbolic_distributions_agree() {
        for &(cos2, n) in &[(0.75, 4), (0.9, 6), (0.6, 8)] {
            let spec = PairEnsembleSpec::from_cos2(cos2, n).unwrap();
            let state = spec.dense_state().unwrap();
            let dense = crate::locc::branches(&state, &k_measurement(n, Party::Alice)).unwrap();
            for (b, o) in dense.iter().zip(outcome_distribution(&spec)) {
                assert!((b.probability - o.probability).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dense_protocol_audits_and_flatness() {
        let spec = PairEnsembleSpec::from_cos2(0.75, 4).unwrap();
        let mut cfg = ProtocolConfig::new(0.1);
        cfg.mode = ProtocolMode::Dense;
        for variant in [KVariant::Message, KVariant::Correlated] {
            cfg.variant = variant;
            for seed in 0..10 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rep = run_full_protocol(&spec, &cfg, &mut rng).unwrap();
                assert!(rep.audits.iter().all(|a| a.holds()));
                assert!(rep.max_no_signaling.unwrap() < 1e-9);
                assert!(rep.run.flatness_error.unwrap() < 1e-10);
                if let RunStatus::Success { .. } = rep.run.status {
                    assert!(rep.run.final_flatness_bound.unwrap() < 1e-10);
                }
                let parsed = Transcript::parse_log(&rep.transcript.to_log()).unwrap();
                assert_eq!(parsed, rep.transcript);
            }
        }
    }

    #[test]
    fn protocol_rejects_zero_epsilon() {
        let spec = PairEnsembleSpec::new(0.5, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(run_full_protocol(&spec, &ProtocolConfig::new(0.0), &mut rng).is_err());
    }
}
