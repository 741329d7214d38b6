//! Procrustean filtering of a single pair.
//!
//! Alice passes her particle through a two-outcome filter that shrinks the
//! larger Schmidt amplitude down to the smaller one. On the pass outcome the
//! pair is a perfect singlet-equivalent; on the fail outcome both parties
//! discard it.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::locc::{apply_local_operation, LocalOperation, OutcomeSelector, Party};
use crate::qcore::linalg::{re, ZERO};
use crate::qcore::{PureBipartiteState, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct ProcrusteanFilter {
    theta: f64,
    pass: DMatrix<C64>,
    fail: DMatrix<C64>,
}

fn diag(a: f64, b: f64) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => re(a),
        (1, 1) => re(b),
        _ => ZERO,
    })
}

/// Filter for the pair `cos θ |↑↓⟩ − sin θ |↓↑⟩`, acting on Alice's qubit.
pub fn build_filter(theta: f64) -> Result<ProcrusteanFilter> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!(
            "theta {theta} outside (0, pi/2)"
        )));
    }
    let (pass, fail) = if theta <= FRAC_PI_4 {
        let t = theta.tan().min(1.0);
        (diag(t, 1.0), diag((1.0 - t * t).max(0.0).sqrt(), 0.0))
    } else {
        let t = (1.0 / theta.tan()).min(1.0);
        (diag(1.0, t), diag(0.0, (1.0 - t * t).max(0.0).sqrt()))
    };
    Ok(ProcrusteanFilter { theta, pass, fail })
}

impl ProcrusteanFilter {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn pass_operator(&self) -> &DMatrix<C64> {
        &self.pass
    }

    pub fn fail_operator(&self) -> &DMatrix<C64> {
        &self.fail
    }

    /// `2 min(sin²θ, cos²θ)`.
    pub fn success_probability(&self) -> f64 {
        expected_yield(self.theta)
    }

    /// The filter as Alice's generalized measurement; outcome 0 is pass.
    pub fn operation(&self) -> LocalOperation {
        LocalOperation::generalized(Party::Alice, vec![self.pass.clone(), self.fail.clone()])
            .expect("filter operators are complete")
            .with_label("procrustean")
    }
}

#[derive(Debug, Clone)]
pub enum FilterResult {
    Pass(PureBipartiteState),
    /// Alice discards her particle and Bob, told so, discards his.
    Fail,
}

impl FilterResult {
    pub fn passed(&self) -> bool {
        matches!(self, FilterResult::Pass(_))
    }
}

/// Runs the filter on a single pair; returns the result and the probability of
/// the outcome that occurred.
pub fn apply_procrustean(
    pair: &PureBipartiteState,
    filter: &ProcrusteanFilter,
    selector: OutcomeSelector<'_>,
) -> Result<(FilterResult, f64)> {
    let out = apply_local_operation(pair, &filter.operation(), selector)?;
    let result = if out.outcome == 0 {
        FilterResult::Pass(out.residual)
    } else {
        FilterResult::Fail
    };
    Ok((result, out.probability))
}

/// Singlets per input pair, `2 min(sin²θ, cos²θ)`, for `0 ≤ θ ≤ π/2`.
pub fn expected_yield(theta: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    2.0 * c2.min(1.0 - c2)
}

/// [`expected_yield`] parameterized by `x = cos²θ`.
pub fn expected_yield_cos2(x: f64) -> f64 {
    2.0 * x.min(1.0 - x)
}
