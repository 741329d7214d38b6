use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use rand::Rng;

use super::subspace::LikelySubspace;
use super::{block_state, QuantumSource};
use crate::binomial::{binomial_row, log2_big};
use crate::error::{Error, Result};
use crate::qcore::linalg::{basis_vector, outer, re, ZERO};
use crate::qcore::random::random_state;
use crate::qcore::{DensityMatrix, PureBipartiteState, C64};
use crate::schmidt_projection::{PairEnsembleSpec, DENSE_MAX_PAIRS};

/// Largest block length for the explicit-vector constructions here.
const VECTOR_MAX_N: usize = 20;

/// An `n`-bit string `x` naming the block `ψ^{x₁} ⊗ … ⊗ ψ^{x_n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SequenceLabel {
    bits: Vec<bool>,
}

impl SequenceLabel {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// The `n` bits of `value`, most significant first.
    pub fn from_index(value: usize, n: usize) -> Self {
        Self {
            bits: crate::locc::bits_of(value, n),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidParameter(format!(
                    "'{s}' is not a bit string"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self {
            bits: (0..n).map(|_| rng.random()).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// `x̄`, every bit flipped.
    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }
}

impl fmt::Display for SequenceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bits
            .iter()
            .try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
    }
}

/// Likely-subspace truncation applied to both halves of `n` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSidedReport {
    pub n: usize,
    pub delta: f64,
    pub max_weight: usize,
    pub retained_dimension: BigUint,
    pub retained_mass: f64,
    /// `(Σ c_i)² / d` of the renormalized truncated state.
    pub max_entangled_fidelity: f64,
    /// Largest over smallest retained squared Schmidt coefficient.
    pub dispersion: f64,
    /// `d Σ c_i⁴ − 1`: the variance of the squared coefficients relative to a flat state.
    pub relative_variance: f64,
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + v.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

fn pair_eigenvalues(theta: f64) -> (f64, f64) {
    let c2 = theta.cos().powi(2);
    (c2.max(1.0 - c2), c2.min(1.0 - c2))
}

/// Projects both halves of `n` pairs onto their (isomorphic) likely subspaces
/// and measures how far the renormalized result is from maximally entangled.
pub fn two_sided_compression_analysis(theta: f64, n: usize, delta: f64) -> Result<TwoSidedReport> {
    PairEnsembleSpec::new(theta, n)?;
    let (hi, lo) = pair_eigenvalues(theta);
    let sub = LikelySubspace::from_eigenvalues(hi, lo, n, delta)?;
    let w_max = sub.max_weight();
    let ln2 = std::f64::consts::LN_2;
    let ln_c: Vec<f64> = binomial_row(n)
        .iter()
        .take(w_max + 1)
        .map(|c| log2_big(c) * ln2)
        .collect();
    let ln_lambda = |w: usize| {
        let mut l = (n - w) as f64 * hi.ln();
        if w > 0 {
            l += w as f64 * lo.ln();
        }
        l
    };
    let ln_m = sub.retained_mass().ln();
    let ln_d = sub.dimension_log2() * ln2;
    let ln_sum_c = log_sum_exp((0..=w_max).map(|w| ln_c[w] + 0.5 * ln_lambda(w)));
    let max_entangled_fidelity = (2.0 * ln_sum_c - ln_m - ln_d).exp().min(1.0);
    let ln_sum_c4 = log_sum_exp((0..=w_max).map(|w| ln_c[w] + 2.0 * (ln_lambda(w) - ln_m)));
    Ok(TwoSidedReport {
        n,
        delta,
        max_weight: w_max,
        retained_dimension: sub.dimension().clone(),
        retained_mass: sub.retained_mass(),
        max_entangled_fidelity,
        dispersion: (hi / lo).powi(w_max as i32),
        relative_variance: ((ln_d + ln_sum_c4).exp() - 1.0).max(0.0),
    })
}

/// The truncated, renormalized `n`-pair state as a dense matrix (`n ≤ 12`).
pub fn two_sided_dense_state(theta: f64, n: usize, delta: f64) -> Result<PureBipartiteState> {
    if n > DENSE_MAX_PAIRS {
        return Err(Error::TooLarge(format!(
            "{n} pairs (dense limit {DENSE_MAX_PAIRS})"
        )));
    }
    let spec = PairEnsembleSpec::new(theta, n)?;
    let (hi, lo) = pair_eigenvalues(theta);
    let sub = LikelySubspace::from_eigenvalues(hi, lo, n, delta)?;
    let flip = spec.cos2() < 0.5;
    let keep = |i: usize| {
        let ones = i.count_ones() as usize;
        sub.contains_weight(if flip { n - ones } else { ones })
    };
    let mut amp = spec.dense_state()?.into_amplitudes();
    for i in 0..amp.nrows() {
        for j in 0..amp.ncols() {
            if !keep(i) || !keep(j) {
                amp[(i, j)] = ZERO;
            }
        }
    }
    PureBipartiteState::normalize(amp)
}

/// `Σ_k P_k |ψ⟩⟨ψ| P_k` with `P_k` projecting onto strings of weight `k` (`n ≤ 10`).
pub fn k_encoding(psi: &DVector<C64>, n: usize) -> Result<DensityMatrix> {
    if n > 10 || psi.len() != 1 << n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n.min(10),
            got: psi.len(),
        });
    }
    let d = psi.len();
    let m = DMatrix::from_fn(d, d, |i, j| {
        if i.count_ones() == j.count_ones() {
            psi[i] * psi[j].conj()
        } else {
            ZERO
        }
    });
    DensityMatrix::new(m)
}

/// Largest entry of `k_encoding(a) − k_encoding(b)`, computed block by block.
pub fn k_encoding_difference(a: &DVector<C64>, b: &DVector<C64>, n: usize) -> f64 {
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for i in 0..a.len() {
        classes[i.count_ones() as usize].push(i);
    }
    let mut worst = 0.0f64;
    for class in &classes {
        for &i in class {
            for &j in class {
                let d = a[i] * a[j].conj() - b[i] * b[j].conj();
                worst = worst.max(d.norm());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub x: SequenceLabel,
    pub complement: SequenceLabel,
    /// `max_y |⟨y|Ψ^{x̄}⟩ − (−1)^{w(y)} ⟨y|Ψ^x⟩|`.
    pub sign_relation_error: f64,
    /// Largest entry of the difference of the two `k`-encoded outputs.
    pub encoding_difference: f64,
    /// `⟨Ψ^x|Ψ^{x̄}⟩`, computed from the vectors.
    pub overlap: f64,
    /// `cos(2θ)^n`.
    pub predicted_overlap: f64,
    /// `(1 + |overlap|)/2`, the best average fidelity any decoder can reach on the pair.
    pub fidelity_ceiling: f64,
}

/// Shows that coding by `k` measurement maps `Ψ^x` and `Ψ^{x̄}` of the
/// equiprobable source to the same output although the inputs are nearly orthogonal.
pub fn schmidt_coding_counterexample(
    theta: f64,
    x: &SequenceLabel,
) -> Result<CounterexampleReport> {
    let n = x.len();
    if !(2..=VECTOR_MAX_N).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "block length {n} outside 2..={VECTOR_MAX_N}"
        )));
    }
    let source = QuantumSource::q_prime(theta);
    let xc = x.complement();
    let a = block_state(&source, x);
    let b = block_state(&source, &xc);
    let sign_relation_error = (0..a.len())
        .map(|y| {
            let sign = if y.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            (b[y] - a[y] * re(sign)).norm()
        })
        .fold(0.0, f64::max);
    let overlap = a.dotc(&b).re;
    Ok(CounterexampleReport {
        x: x.clone(),
        complement: xc,
        sign_relation_error,
        encoding_difference: k_encoding_difference(&a, &b, n),
        overlap,
        predicted_overlap: (2.0 * theta).cos().powi(n as i32),
        fidelity_ceiling: (1.0 + overlap.abs()) / 2.0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    /// Largest `‖V†Vψ − ψ‖` over the random test states.
    pub round_trip_error: f64,
    /// Largest weight of an encoded state outside the majority-up subspace.
    pub leakage: f64,
    /// Eigenvalues (descending) of each qubit's marginal for the encoded maximally mixed state.
    pub marginal_eigenvalues: Vec<[f64; 2]>,
    pub marginal_entropies: Vec<f64>,
}

/// Reduced state of qubit `q` of an `n`-qubit density matrix.
fn qubit_marginal(rho: &DMatrix<C64>, n: usize, q: usize) -> DMatrix<C64> {
    let stride = 1usize << (n - 1 - q);
    let mut out = DMatrix::from_element(2, 2, ZERO);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            if i & !stride == j & !stride {
                out[(usize::from(i & stride != 0), usize::from(j & stride != 0))] += rho[(i, j)];
            }
        }
    }
    out
}

/// Encodes two qubits into the span of `|000⟩, |001⟩, |010⟩, |100⟩` and shows
/// that the three-qubit encoding of the maximally mixed input has single-qubit
/// marginals of entropy below one bit.
pub fn data_expansion_demo<R: Rng + ?Sized>(rng: &mut R) -> Result<ExpansionReport> {
    let targets = [0b000, 0b001, 0b010, 0b100];
    let mut v = DMatrix::from_element(8, 4, ZERO);
    for (col, &row) in targets.iter().enumerate() {
        v[(row, col)] = re(1.0);
    }
    let mut round_trip_error = 0.0f64;
    let mut leakage = 0.0f64;
    for _ in 0..20 {
        let psi = random_state(4, 1, rng).to_vector();
        let enc = &v * &psi;
        leakage = leakage.max(
            enc.iter()
                .enumerate()
                .filter(|(i, _)| !targets.contains(i))
                .map(|(_, z)| z.norm_sqr())
                .sum(),
        );
        round_trip_error = round_trip_error.max((v.adjoint() * enc - &psi).norm());
    }
    let mixed: DMatrix<C64> = (0..4)
        .map(|k| outer(&basis_vector(4, k), &basis_vector(4, k)) * re(0.25))
        .sum();
    let encoded = &v * mixed * v.adjoint();
    let mut marginal_eigenvalues = Vec::new();
    let mut marginal_entropies = Vec::new();
    for q in 0..3 {
        let m = DensityMatrix::new(qubit_marginal(&encoded, 3, q))?;
        let e = m.eigenvalues();
        marginal_eigenvalues.push([e[0], e[1]]);
        marginal_entropies.push(m.entropy());
    }
    Ok(ExpansionReport {
        round_trip_error,
        leakage,
        marginal_eigenvalues,
        marginal_entropies,
    })
}
