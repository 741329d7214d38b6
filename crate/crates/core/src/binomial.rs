//! Exact binomial coefficients and binomial probabilities in log space.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// `C(n, k)` exactly.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `C(n, 0), …, C(n, n)` exactly.
pub fn binomial_row(n: usize) -> Vec<BigUint> {
    let mut row = Vec::with_capacity(n + 1);
    let mut acc = BigUint::one();
    row.push(acc.clone());
    for k in 0..n {
        acc = acc * (n - k) / (k + 1);
        row.push(acc.clone());
    }
    row
}

/// `log₂ x` for an arbitrarily large positive integer (`-inf` for zero).
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        return x
            .to_u64()
            .expect("fits in 64 bits")
            .to_f64()
            .unwrap_or(f64::NAN)
            .log2();
    }
    let top = (x >> (bits - 64)).to_u64().expect("64 bits after shift") as f64;
    top.log2() + (bits - 64) as f64
}

/// `log₂ x − ⌊log₂ x⌋` for a positive integer, computed from its leading bits.
pub fn frac_log2(x: &BigUint) -> f64 {
    let bits = x.bits();
    assert!(bits > 0, "frac_log2 of zero");
    let (top, width) = if bits <= 64 {
        (x.to_u64().expect("fits in 64 bits"), bits)
    } else {
        (
            (x >> (bits - 64)).to_u64().expect("64 bits after shift"),
            64,
        )
    };
    let z = (top as f64 / 2f64.powi(width as i32 - 1)).log2();
    // rounding of the top bits to f64 can land exactly on 2
    if z >= 1.0 {
        0.0
    } else {
        z.max(0.0)
    }
}

pub fn log2_binomial(n: usize, k: usize) -> f64 {
    log2_big(&binomial(n, k))
}

/// Probabilities `C(n,k) p^k (1−p)^(n−k)` for `k = 0..=n`, evaluated in log space
/// so that large `n` neither overflows nor underflows prematurely.
pub fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let (lp, lq) = (p.ln(), q.ln());
    binomial_row(n)
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut ln = log2_big(c) * std::f64::consts::LN_2;
            if k > 0 {
                ln += k as f64 * lp;
            }
            if k < n {
                ln += (n - k) as f64 * lq;
            }
            ln.exp()
        })
        .collect()
}
