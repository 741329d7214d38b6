use nalgebra::DMatrix;

use super::linalg::{nonzeros, re, ZERO};
use super::state::PureBipartiteState;
use super::C64;

/// Schmidt decomposition `Ψ = Σ_i c_i |α_i⟩ ⊗ |β_i⟩`.
///
/// Columns of `basis_a` / `basis_b` are the `α_i` / `β_i`; coefficients are
/// real, nonnegative and nonincreasing. There are `min(dim_a, dim_b)` terms,
/// some of which may be zero.
#[derive(Debug, Clone)]
pub struct SchmidtForm {
    coefficients: Vec<f64>,
    basis_a: DMatrix<C64>,
    basis_b: DMatrix<C64>,
}

impl SchmidtForm {
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn basis_a(&self) -> &DMatrix<C64> {
        &self.basis_a
    }

    pub fn basis_b(&self) -> &DMatrix<C64> {
        &self.basis_b
    }

    /// Squared coefficients: the spectrum of either reduced density matrix.
    pub fn weights(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    /// Number of coefficients above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    /// Amplitude matrix `Σ c_i α_i β_iᵀ`.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let (da, db) = (self.basis_a.nrows(), self.basis_b.nrows());
        let mut m = DMatrix::from_element(da, db, ZERO);
        for (i, &c) in self.coefficients.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            m += (self.basis_a.column(i) * self.basis_b.column(i).transpose()) * re(c);
        }
        m
    }

    /// Largest deviation of the nonzero coefficients (those above `tol`) from their mean.
    pub fn flatness_error(&self, tol: f64) -> f64 {
        let nz: Vec<f64> = self
            .coefficients
            .iter()
            .copied()
            .filter(|&c| c > tol)
            .collect();
        if nz.is_empty() {
            return 0.0;
        }
        let mean = nz.iter().sum::<f64>() / nz.len() as f64;
        nz.iter().map(|c| (c - mean).abs()).fold(0.0, f64::max)
    }
}

/// Schmidt decomposition through the singular values of the amplitude matrix.
///
/// Ties in coefficient order keep the order in which the decomposition produced
/// them. Amplitude matrices with at most one nonzero entry per row and column
/// (products of Schmidt-form pairs, projections of them, permutations) are
/// decomposed directly without an SVD.
pub fn schmidt_decompose(state: &PureBipartiteState) -> SchmidtForm {
    let m = state.amplitudes();
    monomial_decompose(m).unwrap_or_else(|| svd_decompose(m))
}

fn svd_decompose(m: &DMatrix<C64>) -> SchmidtForm {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let d = svd.singular_values.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));

    let mut basis_a = DMatrix::from_element(m.nrows(), d, ZERO);
    let mut basis_b = DMatrix::from_element(m.ncols(), d, ZERO);
    let mut coefficients = Vec::with_capacity(d);
    for (dst, &src) in order.iter().enumerate() {
        coefficients.push(svd.singular_values[src].max(0.0));
        basis_a.set_column(dst, &u.column(src));
        basis_b.set_column(dst, &v_t.row(src).transpose());
    }
    SchmidtForm {
        coefficients,
        basis_a,
        basis_b,
    }
}

fn monomial_decompose(m: &DMatrix<C64>) -> Option<SchmidtForm> {
    let (da, db) = m.shape();
    let nz = nonzeros(m);
    let mut row_used = vec![false; da];
    let mut col_used = vec![false; db];
    for &(i, j, _) in &nz {
        if row_used[i] || col_used[j] {
            return None;
        }
        row_used[i] = true;
        col_used[j] = true;
    }
    let mut terms: Vec<(usize, usize, C64)> = nz;
    terms.sort_by(|x, y| y.2.norm().total_cmp(&x.2.norm()).then(x.0.cmp(&y.0)));

    let d = da.min(db);
    let mut basis_a = DMatrix::from_element(da, d, ZERO);
    let mut basis_b = DMatrix::from_element(db, d, ZERO);
    let mut coefficients = Vec::with_capacity(d);
    for (k, &(i, j, v)) in terms.iter().enumerate() {
        let r = v.norm();
        coefficients.push(r);
        basis_a[(i, k)] = v / re(r);
        basis_b[(j, k)] = re(1.0);
    }
    // complete both bases with the unused unit vectors, paired in index order
    let free_rows = (0..da).filter(|&i| !row_used[i]);
    let free_cols = (0..db).filter(|&j| !col_used[j]);
    for (k, (i, j)) in (terms.len()..d).zip(free_rows.zip(free_cols)) {
        coefficients.push(0.0);
        basis_a[(i, k)] = re(1.0);
        basis_b[(j, k)] = re(1.0);
    }
    Some(SchmidtForm {
        coefficients,
        basis_a,
        basis_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{c, max_abs_diff};
    use crate::qcore::random::random_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn product_state_has_one_term() {
        let mut m = DMatrix::from_element(2, 2, ZERO);
        m[(0, 0)] = re(1.0);
        let s = schmidt_decompose(&PureBipartiteState::new(m).unwrap());
        assert_eq!(s.coefficients(), &[1.0, 0.0]);
    }

    #[test]
    fn monomial_path_handles_phases_and_padding() {
        let mut m = DMatrix::from_element(3, 4, ZERO);
        m[(2, 0)] = c(0.0, 0.6);
        m[(0, 3)] = re(-0.8);
        let st = PureBipartiteState::new(m.clone()).unwrap();
        let s = schmidt_decompose(&st);
        assert_eq!(s.coefficients().len(), 3);
        assert!((s.coefficients()[0] - 0.8).abs() < 1e-15);
        assert!((s.coefficients()[1] - 0.6).abs() < 1e-15);
        assert_eq!(s.coefficients()[2], 0.0);
        assert!(max_abs_diff(&s.reconstruct(), &m) < 1e-15);
        // completed bases stay orthonormal
        let ga = s.basis_a().adjoint() * s.basis_a();
        assert!(max_abs_diff(&ga, &DMatrix::identity(3, 3)) < 1e-15);
        let gb = s.basis_b().adjoint() * s.basis_b();
        assert!(max_abs_diff(&gb, &DMatrix::identity(3, 3)) < 1e-15);
    }

    #[test]
    fn svd_path_reconstructs_and_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(da, db) in &[(2, 2), (3, 3), (2, 5), (4, 3)] {
            let st = random_state(da, db, &mut rng);
            let s = schmidt_decompose(&st);
            assert!(max_abs_diff(&s.reconstruct(), st.amplitudes()) < 1e-12);
            assert!(s.coefficients().windows(2).all(|w| w[0] >= w[1]));
            let total: f64 = s.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
