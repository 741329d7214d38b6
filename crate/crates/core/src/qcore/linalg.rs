//! Small dense complex linear algebra helpers.
//!
//! Most matrices in this crate are either tiny and dense or large and very
//! sparse (projectors onto Hamming-weight classes, permutations, diagonal
//! filters). The products here skip exact zeros so both cases stay cheap.

use nalgebra::{DMatrix, DVector};

use super::C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(d: usize) -> DMatrix<C64> {
    DMatrix::identity(d, d)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::from_element(ar * br, ac * bc, ZERO);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for q in 0..bc {
                for p in 0..br {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

pub fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::from_element(a.len() * b.len(), ZERO);
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

/// Nonzero entries `(row, col, value)` in column-major order.
pub fn nonzeros(m: &DMatrix<C64>) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != ZERO {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// `a * b`, iterating only over the nonzero entries of `a`.
pub fn mul_sparse_left(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = DMatrix::from_element(a.nrows(), b.ncols(), ZERO);
    for (i, k, v) in nonzeros(a) {
        for j in 0..b.ncols() {
            let x = b[(k, j)];
            if x != ZERO {
                out[(i, j)] += v * x;
            }
        }
    }
    out
}

/// `a† * a`, skipping zeros.
pub fn gram(a: &DMatrix<C64>) -> DMatrix<C64> {
    mul_sparse_left(&a.adjoint(), a)
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_unitary(u: &DMatrix<C64>, tol: f64) -> bool {
    u.is_square() && max_abs_diff(&gram(u), &identity(u.nrows())) <= tol
}

pub fn is_hermitian(m: &DMatrix<C64>, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

/// Outer product `|a⟩⟨b|`.
pub fn outer(a: &DVector<C64>, b: &DVector<C64>) -> DMatrix<C64> {
    a * b.adjoint()
}

pub fn basis_vector(d: usize, i: usize) -> DVector<C64> {
    let mut v = DVector::from_element(d, ZERO);
    v[i] = ONE;
    v
}

/// Hermitian matrix function `f(H)` through its eigendecomposition.
pub fn hermitian_map(h: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let d = h.nrows();
    let mut diag = DMatrix::from_element(d, d, ZERO);
    for i in 0..d {
        diag[(i, i)] = re(f(eig.eigenvalues[i]));
    }
    &eig.eigenvectors * diag * eig.eigenvectors.adjoint()
}
