use nalgebra::{DMatrix, DVector};

use super::linalg::{is_hermitian, outer, re, ZERO};
use super::state::{PureBipartiteState, Side};
use super::{shannon_entropy, C64, EIGEN_FLOOR, NORM_TOL};
use crate::error::{Error, Result};

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace within `1e-12` and eigenvalues `≥ −1e-10`.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare(matrix.nrows(), matrix.ncols()));
        }
        if !is_hermitian(&matrix, NORM_TOL) {
            return Err(Error::InvalidDensityMatrix("not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let dm = Self { matrix };
        let min = dm.eigenvalues().last().copied().unwrap_or(0.0);
        if min < EIGEN_FLOOR {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min}"
            )));
        }
        Ok(dm)
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let n2 = psi.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self {
            matrix: outer(psi, psi),
        })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: DMatrix::from_diagonal_element(d, d, re(1.0 / d as f64)),
        }
    }

    /// Convex combination `Σ p_i ρ_i`; weights must be nonnegative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let d = parts
            .first()
            .map(|(_, r)| r.dim())
            .ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let mut m = DMatrix::from_element(d, d, ZERO);
        let mut total = 0.0;
        for (p, r) in parts {
            if r.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: r.dim(),
                });
            }
            if *p < 0.0 {
                return Err(Error::InvalidParameter(format!("negative weight {p}")));
            }
            total += p;
            m += &r.matrix * re(*p);
        }
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("weights sum to {total}")));
        }
        Ok(Self { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Eigenvalues in nonincreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// Von Neumann entropy in bits, with `0 log 0 = 0` and tiny negative eigenvalues clamped.
    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.eigenvalues())
    }

    pub(crate) fn from_unchecked(matrix: DMatrix<C64>) -> Self {
        Self { matrix }
    }
}

/// Reduced density matrix of one side, obtained by tracing out the other side.
pub fn partial_trace(state: &PureBipartiteState, keep: Side) -> DensityMatrix {
    DensityMatrix::from_unchecked(reduced_unnormalized(state.amplitudes(), keep))
}

/// `M M†` (keep `A`) or `Mᵀ M̄` (keep `B`) for an amplitude matrix `M`, skipping zeros.
pub(crate) fn reduced_unnormalized(m: &DMatrix<C64>, keep: Side) -> DMatrix<C64> {
    let (da, db) = m.shape();
    let nnz = m.iter().filter(|x| **x != ZERO).count();
    if nnz * 4 > da * db {
        return match keep {
            Side::A => m * m.adjoint(),
            Side::B => m.transpose() * m.map(|x| x.conj()),
        };
    }
    match keep {
        Side::A => {
            let mut out = DMatrix::from_element(da, da, ZERO);
            for j in 0..db {
                let col: Vec<(usize, C64)> = (0..da)
                    .filter_map(|i| Some((i, m[(i, j)])).filter(|e| e.1 != ZERO))
                    .collect();
                for &(i, x) in &col {
                    for &(i2, y) in &col {
                        out[(i, i2)] += x * y.conj();
                    }
                }
            }
            out
        }
        Side::B => {
            let mut out = DMatrix::from_element(db, db, ZERO);
            for i in 0..da {
                let row: Vec<(usize, C64)> = (0..db)
                    .filter_map(|j| Some((j, m[(i, j)])).filter(|e| e.1 != ZERO))
                    .collect();
                for &(j, x) in &row {
                    for &(j2, y) in &row {
                        out[(j, j2)] += x * y.conj();
                    }
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::max_abs_diff;

    #[test]
    fn singlet_marginal_is_maximally_mixed() {
        let rho = partial_trace(&PureBipartiteState::singlet(), Side::A);
        assert!(max_abs_diff(rho.matrix(), DensityMatrix::maximally_mixed(2).matrix()) < 1e-15);
        assert!((rho.entropy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_marginal_is_diagonal_in_up_down_basis() {
        let theta = 0.4_f64;
        let s = PureBipartiteState::partly_entangled_pair(theta);
        let ra = partial_trace(&s, Side::A);
        assert!((ra.matrix()[(0, 0)].re - theta.cos().powi(2)).abs() < 1e-15);
        assert!((ra.matrix()[(1, 1)].re - theta.sin().powi(2)).abs() < 1e-15);
        assert_eq!(ra.matrix()[(0, 1)], ZERO);
        let rb = partial_trace(&s, Side::B);
        assert!((rb.matrix()[(1, 1)].re - theta.cos().powi(2)).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        let mut m = DMatrix::from_diagonal_element(2, 2, re(0.5));
        m[(0, 1)] = re(0.1);
        assert!(DensityMatrix::new(m).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[re(1.5), ZERO, ZERO, re(-0.5)]);
        assert!(DensityMatrix::new(neg).is_err());
        assert!(DensityMatrix::new(DMatrix::from_diagonal_element(2, 2, re(1.0))).is_err());
        assert!(DensityMatrix::new(DMatrix::from_element(2, 3, ZERO)).is_err());
    }

    #[test]
    fn sparse_and_dense_traces_agree() {
        let mut m = DMatrix::from_element(8, 8, ZERO);
        for i in 0..8 {
            m[(i, 7 - i)] = re(1.0 / 8f64.sqrt());
        }
        m[(1, 1)] = re(0.0);
        let dense_a = &m * m.adjoint();
        let dense_b = m.transpose() * m.map(|x| x.conj());
        assert!(max_abs_diff(&reduced_unnormalized(&m, Side::A), &dense_a) < 1e-15);
        assert!(max_abs_diff(&reduced_unnormalized(&m, Side::B), &dense_b) < 1e-15);
    }
}
