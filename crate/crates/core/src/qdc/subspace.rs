use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_traits::Zero;

use super::coding::SequenceLabel;
use super::{apply_per_qubit, block_state, QuantumSource};
use crate::binomial::{binomial, binomial_pmf, log2_big};
use crate::error::{Error, Result};
use crate::qcore::linalg::{basis_vector, identity, outer, re, ZERO};
use crate::qcore::{binary_entropy, fidelity, DensityMatrix, C64};

/// Largest block length for which [`expected_fidelity_enumerated`] builds every
/// output density matrix.
pub const ENUMERATION_MAX_N: usize = 8;

/// Largest block length handled with explicit `2^n`-component vectors.
const VECTOR_MAX_N: usize = 20;

/// Span of the eigenvectors of `ρ^{⊗n}` with the largest eigenvalues.
///
/// Eigenvectors are strings over the two eigenvectors of `ρ`; a string's
/// weight is how many factors are the smaller-eigenvalue one. Whole weight
/// classes are kept, in order of increasing weight, while the total dimension
/// stays within `2^{n(H(ρ)+δ)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelySubspace {
    n: usize,
    delta: f64,
    lambda_hi: f64,
    lambda_lo: f64,
    eigenbasis: DMatrix<C64>,
    cap_log2: f64,
    max_weight: usize,
    dimension: BigUint,
    retained_mass: f64,
}

fn eigen_2x2(rho: &DMatrix<C64>) -> (f64, f64, DMatrix<C64>) {
    let (a, d) = (rho[(0, 0)].re, rho[(1, 1)].re);
    if rho[(0, 1)].norm() < 1e-15 {
        if a >= d {
            return (a, d, identity(2));
        }
        let swap = DMatrix::from_fn(2, 2, |i, j| if i != j { re(1.0) } else { ZERO });
        return (d, a, swap);
    }
    let eig = rho.clone().symmetric_eigen();
    let (i_hi, i_lo) = if eig.eigenvalues[0] >= eig.eigenvalues[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    let basis =
        DMatrix::from_columns(&[eig.eigenvectors.column(i_hi), eig.eigenvectors.column(i_lo)]);
    (eig.eigenvalues[i_hi], eig.eigenvalues[i_lo], basis)
}

/// `⌊2^x⌋` for `x ≥ 0`, to 53 significant bits.
fn floor_pow2(x: f64) -> BigUint {
    let whole = x.floor();
    let mant = (2f64.powf(x - whole) * 2f64.powi(52)) as u64;
    let whole = whole as u64;
    if whole >= 52 {
        BigUint::from(mant) << (whole - 52)
    } else {
        BigUint::from(mant) >> (52 - whole)
    }
}

impl LikelySubspace {
    /// Likely subspace for blocks of `n` signals from a qubit source.
    pub fn build(source: &QuantumSource, n: usize, delta: f64) -> Result<Self> {
        if source.dim() != 2 {
            return Err(Error::InvalidParameter(format!(
                "qubit sources only (got dimension {})",
                source.dim()
            )));
        }
        let (hi, lo, basis) = eigen_2x2(source.density_matrix().matrix());
        Self::assemble(hi.clamp(0.0, 1.0), lo.clamp(0.0, 1.0), basis, n, delta)
    }

    /// Likely subspace of a diagonal `ρ = diag(hi, lo)` in the computational basis.
    pub fn from_eigenvalues(hi: f64, lo: f64, n: usize, delta: f64) -> Result<Self> {
        if !(hi >= lo && lo >= 0.0 && (hi + lo - 1.0).abs() < 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "eigenvalues ({hi}, {lo}) must be ordered and sum to 1"
            )));
        }
        Self::assemble(hi, lo, identity(2), n, delta)
    }

    fn assemble(hi: f64, lo: f64, eigenbasis: DMatrix<C64>, n: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "block length must be positive".into(),
            ));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta {delta} must be finite"
            )));
        }
        let cap_log2 = n as f64 * (binary_entropy(hi) + delta);
        if cap_log2 < 0.0 {
            return Err(Error::EmptySubspace(cap_log2));
        }
        let cap = floor_pow2(cap_log2);
        let pmf = binomial_pmf(n, lo);
        let mut dimension = BigUint::zero();
        let mut retained_mass = 0.0;
        let mut max_weight = None;
        for (w, p) in pmf.iter().enumerate() {
            let next = &dimension + binomial(n, w);
            if next > cap {
                break;
            }
            dimension = next;
            retained_mass += p;
            max_weight = Some(w);
        }
        let max_weight = max_weight.ok_or(Error::EmptySubspace(cap_log2))?;
        Ok(Self {
            n,
            delta,
            lambda_hi: hi,
            lambda_lo: lo,
            eigenbasis,
            cap_log2,
            max_weight,
            dimension,
            retained_mass: retained_mass.min(1.0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `(λ_hi, λ_lo)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        (self.lambda_hi, self.lambda_lo)
    }

    /// Columns are the larger- and smaller-eigenvalue eigenvectors of `ρ`.
    pub fn eigenbasis(&self) -> &DMatrix<C64> {
        &self.eigenbasis
    }

    /// `n (H(ρ) + δ)`.
    pub fn cap_log2(&self) -> f64 {
        self.cap_log2
    }

    /// Largest retained weight `w*`.
    pub fn max_weight(&self) -> usize {
        self.max_weight
    }

    pub fn dimension(&self) -> &BigUint {
        &self.dimension
    }

    pub fn dimension_log2(&self) -> f64 {
        log2_big(&self.dimension)
    }

    /// Probability that a block drawn from `ρ^{⊗n}` lies in the subspace.
    pub fn retained_mass(&self) -> f64 {
        self.retained_mass
    }

    /// `λ_hi^{n−w} λ_lo^w`.
    pub fn eigenvalue_of_weight(&self, w: usize) -> f64 {
        self.lambda_hi.powi((self.n - w) as i32) * self.lambda_lo.powi(w as i32)
    }

    pub fn contains_weight(&self, w: usize) -> bool {
        w <= self.max_weight
    }

    /// Retained eigenvector strings as indices into the `2^n` eigenbasis, ascending.
    pub fn basis_indices(&self) -> Result<Vec<usize>> {
        self.check_vector_size()?;
        Ok((0..1usize << self.n)
            .filter(|i| self.contains_weight(i.count_ones() as usize))
            .collect())
    }

    fn check_vector_size(&self) -> Result<()> {
        if self.n > VECTOR_MAX_N {
            return Err(Error::TooLarge(format!("2^{} components", self.n)));
        }
        Ok(())
    }

    fn eigenbasis_adjoint(&self) -> DMatrix<C64> {
        self.eigenbasis.adjoint()
    }
}

/// Result of projecting one block onto the likely subspace.
#[derive(Debug, Clone)]
pub struct CompressedBlock {
    n: usize,
    eigenbasis: DMatrix<C64>,
    /// `PΨ` in eigenbasis coordinates.
    projected: DVector<C64>,
    pass_probability: f64,
    /// `⟨junk|Ψ⟩`, the junk state being the all-`λ_hi` string.
    junk_overlap: C64,
}

impl CompressedBlock {
    /// `⟨Ψ|P|Ψ⟩`.
    pub fn pass_probability(&self) -> f64 {
        self.pass_probability
    }

    /// `⟨Ψ|W|Ψ⟩ = ⟨Ψ|P|Ψ⟩² + (1 − ⟨Ψ|P|Ψ⟩) |⟨junk|Ψ⟩|²`.
    pub fn fidelity(&self) -> f64 {
        let m = self.pass_probability;
        m * m + (1.0 - m) * self.junk_overlap.norm_sqr()
    }

    /// `W = P|Ψ⟩⟨Ψ|P + (1 − ⟨Ψ|P|Ψ⟩) |junk⟩⟨junk|` in the computational basis.
    pub fn output_density(&self) -> Result<DensityMatrix> {
        if self.n > ENUMERATION_MAX_N + 2 {
            return Err(Error::TooLarge(format!("{}-qubit density matrix", self.n)));
        }
        let kept = apply_per_qubit(&self.projected, &self.eigenbasis, self.n);
        let junk = apply_per_qubit(&basis_vector(1 << self.n, 0), &self.eigenbasis, self.n);
        let w = outer(&kept, &kept) + outer(&junk, &junk) * re(1.0 - self.pass_probability);
        // positive by construction, trace m + (1 − m)
        Ok(DensityMatrix::from_unchecked(w))
    }
}

/// Projects an `n`-qubit block onto the likely subspace; if the projection
/// fails, the junk state is sent instead.
pub fn compress_block(psi: &DVector<C64>, subspace: &LikelySubspace) -> Result<CompressedBlock> {
    subspace.check_vector_size()?;
    let n = subspace.n();
    if psi.len() != 1 << n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            got: psi.len(),
        });
    }
    let mut projected = apply_per_qubit(psi, &subspace.eigenbasis_adjoint(), n);
    let junk_overlap = projected[0];
    for (i, z) in projected.iter_mut().enumerate() {
        if !subspace.contains_weight(i.count_ones() as usize) {
            *z = ZERO;
        }
    }
    let pass_probability = projected.norm_squared();
    Ok(CompressedBlock {
        n,
        eigenbasis: subspace.eigenbasis.clone(),
        projected,
        pass_probability,
        junk_overlap,
    })
}

/// Squared overlaps `|⟨e_b|ψ_j⟩|²` of every signal with the two eigenvectors.
fn eigen_weights(source: &QuantumSource, subspace: &LikelySubspace) -> Vec<[f64; 2]> {
    let adj = subspace.eigenbasis_adjoint();
    source
        .states()
        .iter()
        .map(|s| {
            let e = &adj * s;
            [e[0].norm_sqr(), e[1].norm_sqr()]
        })
        .collect()
}

/// Expected fidelity `Σ_x p(x) ⟨Ψ^x|W^x|Ψ^x⟩` of likely-subspace coding.
///
/// Closed forms cover sources whose signals all have squared eigenbasis
/// amplitudes `(λ_hi, λ_lo)` (so `⟨Ψ^x|P|Ψ^x⟩` equals the retained mass for
/// every `x`) and sources made of eigenvectors; anything else is enumerated
/// for short blocks.
pub fn expected_fidelity(source: &QuantumSource, n: usize, delta: f64) -> Result<f64> {
    let sub = LikelySubspace::build(source, n, delta)?;
    let weights = eigen_weights(source, &sub);
    let (hi, lo) = sub.eigenvalues();
    let m = sub.retained_mass();
    if weights
        .iter()
        .all(|w| (w[0] - hi).abs() < 1e-12 && (w[1] - lo).abs() < 1e-12)
    {
        return Ok(m * m + (1.0 - m) * hi.powi(n as i32));
    }
    if weights.iter().all(|w| w[0] < 1e-12 || w[1] < 1e-12) {
        // each Ψ^x is an eigenvector string: kept whole or replaced by an orthogonal junk state
        let q: f64 = weights
            .iter()
            .zip(source.probabilities())
            .filter(|(w, _)| w[1] > 0.5)
            .map(|(_, p)| p)
            .sum();
        return Ok(binomial_pmf(n, q)
            .iter()
            .take(sub.max_weight() + 1)
            .sum::<f64>()
            .min(1.0));
    }
    if source.states().len() != 2 || n > 12 {
        return Err(Error::TooLarge(format!(
            "no closed form; enumeration of {} signals over n = {n}",
            source.states().len()
        )));
    }
    let mut total = 0.0;
    for idx in 0..1usize << n {
        let x = SequenceLabel::from_index(idx, n);
        let block = compress_block(&block_state(source, &x), &sub)?;
        total += sequence_probability(source, &x) * block.fidelity();
    }
    Ok(total)
}

fn sequence_probability(source: &QuantumSource, x: &SequenceLabel) -> f64 {
    x.bits()
        .iter()
        .map(|&b| source.probabilities()[b as usize])
        .product()
}

/// [`expected_fidelity`] by brute force: every `x`, its output density matrix, and
/// `⟨Ψ^x|W^x|Ψ^x⟩` evaluated directly.
pub fn expected_fidelity_enumerated(source: &QuantumSource, n: usize, delta: f64) -> Result<f64> {
    if n > ENUMERATION_MAX_N || source.states().len() != 2 {
        return Err(Error::TooLarge(format!(
            "enumeration limited to two signals and n <= {ENUMERATION_MAX_N}"
        )));
    }
    let sub = LikelySubspace::build(source, n, delta)?;
    let mut total = 0.0;
    for idx in 0..1usize << n {
        let x = SequenceLabel::from_index(idx, n);
        let psi = block_state(source, &x);
        let w = compress_block(&psi, &sub)?.output_density()?;
        total += sequence_probability(source, &x) * fidelity(&psi, &w)?;
    }
    Ok(total)
}
