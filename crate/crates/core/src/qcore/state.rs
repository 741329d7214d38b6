use nalgebra::{DMatrix, DVector};

use super::linalg::{kron, re, ZERO};
use super::{C64, NORM_TOL};
use crate::error::{Error, Result};

/// Which half of a bipartite system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// Normalized pure state of a bipartite system `A ⊗ B`.
///
/// Entry `(i, j)` of the amplitude matrix is the amplitude of `|i⟩_A ⊗ |j⟩_B`.
/// Multi-qubit registers use the most significant bit for the first qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct PureBipartiteState {
    amplitudes: DMatrix<C64>,
}

impl PureBipartiteState {
    /// Wraps an amplitude matrix, rejecting it unless its squared norm is 1 within `1e-12`.
    pub fn new(amplitudes: DMatrix<C64>) -> Result<Self> {
        if amplitudes.nrows() == 0 || amplitudes.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "subsystem dimension must be at least 1".into(),
            ));
        }
        let n2 = amplitudes.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales an arbitrary nonzero amplitude matrix to unit norm.
    pub fn normalize(amplitudes: DMatrix<C64>) -> Result<Self> {
        if amplitudes.nrows() == 0 || amplitudes.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "subsystem dimension must be at least 1".into(),
            ));
        }
        let n = amplitudes.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(Self {
            amplitudes: amplitudes / re(n),
        })
    }

    /// Builds a state from a flat vector indexed `i * dim_b + j`.
    pub fn from_vector(dim_a: usize, dim_b: usize, v: &[C64]) -> Result<Self> {
        if v.len() != dim_a * dim_b {
            return Err(Error::DimensionMismatch {
                expected: dim_a * dim_b,
                got: v.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim_a, dim_b, v))
    }

    pub fn product(a: &DVector<C64>, b: &DVector<C64>) -> Result<Self> {
        Self::new(a * b.transpose())
    }

    /// `cos θ |↑_A ↓_B⟩ − sin θ |↓_A ↑_B⟩`, with up = index 0.
    pub fn partly_entangled_pair(theta: f64) -> Self {
        let mut m = DMatrix::from_element(2, 2, ZERO);
        m[(0, 1)] = re(theta.cos());
        m[(1, 0)] = re(-theta.sin());
        Self { amplitudes: m }
    }

    /// The singlet `(|↑↓⟩ − |↓↑⟩)/√2`.
    pub fn singlet() -> Self {
        Self::partly_entangled_pair(std::f64::consts::FRAC_PI_4)
    }

    /// `Σ_i |i⟩|i⟩ / √d`.
    pub fn maximally_entangled(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        Self {
            amplitudes: DMatrix::from_diagonal_element(d, d, re(s)),
        }
    }

    /// Joint state of two independent bipartite states, with the `A` parts grouped
    /// together (this state's factor first) and likewise for `B`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            amplitudes: kron(&self.amplitudes, &other.amplitudes),
        }
    }

    pub fn dim_a(&self) -> usize {
        self.amplitudes.nrows()
    }

    pub fn dim_b(&self) -> usize {
        self.amplitudes.ncols()
    }

    pub fn dim(&self, side: Side) -> usize {
        match side {
            Side::A => self.dim_a(),
            Side::B => self.dim_b(),
        }
    }

    pub fn amplitudes(&self) -> &DMatrix<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DMatrix<C64> {
        self.amplitudes
    }

    /// Flat state vector indexed `i * dim_b + j`.
    pub fn to_vector(&self) -> DVector<C64> {
        let (da, db) = self.amplitudes.shape();
        DVector::from_fn(da * db, |k, _| self.amplitudes[(k / db, k % db)])
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.amplitudes.shape() != other.amplitudes.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_a() * self.dim_b(),
                got: other.dim_a() * other.dim_b(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(x, y)| x.conj() * y)
            .sum())
    }

    pub(crate) fn from_unchecked(amplitudes: DMatrix<C64>) -> Self {
        Self { amplitudes }
    }
}
