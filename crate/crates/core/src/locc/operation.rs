use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::qcore::linalg::{
    gram, identity, is_hermitian, is_unitary, max_abs_diff, mul_sparse_left, ZERO,
};
use crate::qcore::{Side, C64, OP_TOL};

/// One of the two separated observers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn side(self) -> Side {
        match self {
            Party::Alice => Side::A,
            Party::Bob => Side::B,
        }
    }

    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        }
    }

    pub fn parse(s: &str) -> Option<Party> {
        match s {
            "alice" => Some(Party::Alice),
            "bob" => Some(Party::Bob),
            _ => None,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperationKind {
    Unitary,
    Projective,
    Generalized,
}

impl OperationKind {
    pub fn name(self) -> &'static str {
        match self {
            OperationKind::Unitary => "unitary",
            OperationKind::Projective => "projective",
            OperationKind::Generalized => "generalized",
        }
    }

    pub fn parse(s: &str) -> Option<OperationKind> {
        match s {
            "unitary" => Some(OperationKind::Unitary),
            "projective" => Some(OperationKind::Projective),
            "generalized" => Some(OperationKind::Generalized),
            _ => None,
        }
    }
}

/// Where an operator sits inside a party's register: `I_left ⊗ M ⊗ I_right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub left: usize,
    pub right: usize,
}

impl Placement {
    pub const WHOLE: Placement = Placement { left: 1, right: 1 };
}

/// Measurement (or unitary) carried out by one party on their own subsystem.
///
/// Operators are measurement operators `M_j`; outcome `j` maps `Ψ` to
/// `(M_j ⊗ I)Ψ` up to normalization. Completeness `Σ M_j† M_j = I` is checked
/// on construction.
#[derive(Debug, Clone)]
pub struct LocalOperation {
    party: Party,
    kind: OperationKind,
    operators: Vec<DMatrix<C64>>,
    placement: Placement,
    label: String,
}

impl LocalOperation {
    pub fn unitary(party: Party, u: DMatrix<C64>) -> Result<Self> {
        if !is_unitary(&u, OP_TOL) {
            return Err(Error::InvalidOperation("operator is not unitary".into()));
        }
        Ok(Self::build(party, OperationKind::Unitary, vec![u]))
    }

    /// Basis permutation `|i⟩ ↦ |images[i]⟩`.
    pub fn permutation(party: Party, images: &[usize]) -> Result<Self> {
        let d = images.len();
        let mut seen = vec![false; d];
        for &j in images {
            if j >= d || std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidOperation(
                    "images do not form a permutation".into(),
                ));
            }
        }
        let mut u = DMatrix::from_element(d, d, ZERO);
        for (i, &j) in images.iter().enumerate() {
            u[(j, i)] = C64::new(1.0, 0.0);
        }
        Ok(Self::build(party, OperationKind::Unitary, vec![u]))
    }

    /// Complete set of orthogonal projectors.
    pub fn projective(party: Party, projectors: Vec<DMatrix<C64>>) -> Result<Self> {
        let d = common_dim(&projectors)?;
        let mut sum = DMatrix::from_element(d, d, ZERO);
        for p in &projectors {
            if !is_hermitian(p, OP_TOL) {
                return Err(Error::InvalidOperation("projector is not Hermitian".into()));
            }
            if max_abs_diff(&mul_sparse_left(p, p), p) > OP_TOL {
                return Err(Error::InvalidOperation(
                    "projector is not idempotent".into(),
                ));
            }
            sum += p;
        }
        // Hermitian idempotents summing to I are mutually orthogonal.
        if max_abs_diff(&sum, &identity(d)) > OP_TOL {
            return Err(Error::InvalidOperation(
                "projectors do not sum to identity".into(),
            ));
        }
        Ok(Self::build(party, OperationKind::Projective, projectors))
    }

    /// Generalized measurement given by measurement operators with `Σ M_j† M_j = I`.
    pub fn generalized(party: Party, operators: Vec<DMatrix<C64>>) -> Result<Self> {
        let d = common_dim(&operators)?;
        let mut sum = DMatrix::from_element(d, d, ZERO);
        for m in &operators {
            sum += gram(m);
        }
        if max_abs_diff(&sum, &identity(d)) > OP_TOL {
            return Err(Error::InvalidOperation(
                "measurement operators are not complete".into(),
            ));
        }
        Ok(Self::build(party, OperationKind::Generalized, operators))
    }

    fn build(party: Party, kind: OperationKind, operators: Vec<DMatrix<C64>>) -> Self {
        Self {
            party,
            kind,
            operators,
            placement: Placement::WHOLE,
            label: kind.name().to_string(),
        }
    }

    /// Embeds the operators as `I_left ⊗ M ⊗ I_right` in the party's register.
    pub fn on_factor(mut self, left: usize, right: usize) -> Self {
        self.placement = Placement { left, right };
        self
    }

    /// Short name recorded in transcripts; whitespace is replaced by `-`.
    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.split_whitespace().collect::<Vec<_>>().join("-");
        self
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn kind(&self) -> OperationKind {
        self.kind
    }

    pub fn operators(&self) -> &[DMatrix<C64>] {
        &self.operators
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn outcome_count(&self) -> usize {
        self.operators.len()
    }

    pub fn factor_dim(&self) -> usize {
        self.operators[0].nrows()
    }

    /// Dimension of the party's whole register this operation expects.
    pub fn register_dim(&self) -> usize {
        self.placement.left * self.factor_dim() * self.placement.right
    }
}

fn common_dim(ops: &[DMatrix<C64>]) -> Result<usize> {
    let first = ops
        .first()
        .ok_or_else(|| Error::InvalidOperation("no operators".into()))?;
    if !first.is_square() {
        return Err(Error::NotSquare(first.nrows(), first.ncols()));
    }
    let d = first.nrows();
    for m in ops {
        if m.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: m.nrows(),
            });
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::linalg::{c, re};

    fn proj(d: usize, i: usize) -> DMatrix<C64> {
        let mut p = DMatrix::from_element(d, d, ZERO);
        p[(i, i)] = re(1.0);
        p
    }

    #[test]
    fn validates_unitary() {
        assert!(LocalOperation::unitary(Party::Alice, identity(2)).is_ok());
        let bad = DMatrix::from_element(2, 2, re(1.0));
        assert!(LocalOperation::unitary(Party::Alice, bad).is_err());
    }

    #[test]
    fn validates_projectors() {
        assert!(LocalOperation::projective(Party::Bob, vec![proj(2, 0), proj(2, 1)]).is_ok());
        assert!(LocalOperation::projective(Party::Bob, vec![proj(2, 0)]).is_err());
        let not_idem = DMatrix::from_diagonal_element(2, 2, re(0.5));
        assert!(LocalOperation::projective(Party::Bob, vec![not_idem.clone(), not_idem]).is_err());
    }

    #[test]
    fn validates_completeness() {
        let a = DMatrix::from_row_slice(2, 2, &[re(0.6), ZERO, ZERO, re(1.0)]);
        let b = DMatrix::from_row_slice(2, 2, &[re(0.8), ZERO, ZERO, ZERO]);
        assert!(LocalOperation::generalized(Party::Alice, vec![a.clone(), b]).is_ok());
        assert!(LocalOperation::generalized(Party::Alice, vec![a]).is_err());
        let mixed = vec![
            DMatrix::from_element(2, 2, c(0.0, 0.5)),
            DMatrix::from_element(3, 3, ZERO),
        ];
        assert!(LocalOperation::generalized(Party::Alice, mixed).is_err());
    }

    #[test]
    fn labels_are_single_tokens() {
        let op = LocalOperation::unitary(Party::Alice, identity(2))
            .unwrap()
            .with_label("a b\tc");
        assert_eq!(op.label(), "a-b-c");
        assert_eq!(op.on_factor(4, 2).register_dim(), 16);
    }
}
