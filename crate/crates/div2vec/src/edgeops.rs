//! Edge embeddings from node embeddings: the four symmetric operators,
//! plus the positive/negative-graph concatenation that doubles the
//! feature width.

use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeOperator {
    Average,
    Hadamard,
    WeightedL1,
    WeightedL2,
}

impl EdgeOperator {
    pub const ALL: [EdgeOperator; 4] = [
        EdgeOperator::Average,
        EdgeOperator::Hadamard,
        EdgeOperator::WeightedL1,
        EdgeOperator::WeightedL2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EdgeOperator::Average => "average",
            EdgeOperator::Hadamard => "hadamard",
            EdgeOperator::WeightedL1 => "weighted_l1",
            EdgeOperator::WeightedL2 => "weighted_l2",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "average" => Ok(EdgeOperator::Average),
            "hadamard" => Ok(EdgeOperator::Hadamard),
            "weighted_l1" => Ok(EdgeOperator::WeightedL1),
            "weighted_l2" => Ok(EdgeOperator::WeightedL2),
            other => Err(Error::InvalidConfig(format!("unknown edge operator '{other}'"))),
        }
    }

    fn combine(self, a: f64, b: f64) -> f64 {
        match self {
            EdgeOperator::Average => (a + b) / 2.0,
            EdgeOperator::Hadamard => a * b,
            EdgeOperator::WeightedL1 => (a - b).abs(),
            EdgeOperator::WeightedL2 => (a - b) * (a - b),
        }
    }
}

/// Combines two equal-length node vectors elementwise.
pub fn apply_operator(op: EdgeOperator, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| op.combine(x, y)).collect())
}

/// Edge feature laid out as [positive-graph half | negative-graph half].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeature {
    pub vector: Vec<f64>,
}

impl EdgeFeature {
    pub fn dimension(&self) -> usize {
        self.vector.len()
    }
}

/// Builds the concatenated edge feature for (u, v). Nodes absent from
/// either matrix contribute the zero vector on that side.
pub fn edge_feature(
    op: EdgeOperator,
    u: NodeId,
    v: NodeId,
    pos_matrix: &EmbeddingMatrix,
    neg_matrix: &EmbeddingMatrix,
) -> Result<EdgeFeature> {
    if pos_matrix.dimension() != neg_matrix.dimension() {
        return Err(Error::DimensionMismatch {
            expected: pos_matrix.dimension(),
            got: neg_matrix.dimension(),
        });
    }
    let mut vector = vec![0.0; 2 * pos_matrix.dimension()];
    edge_feature_into(&mut vector, op, u, v, pos_matrix, neg_matrix);
    Ok(EdgeFeature { vector })
}

/// Allocation-free variant for hot scoring loops. `out` must have length
/// `2 * dimension`.
pub fn edge_feature_into(
    out: &mut [f64],
    op: EdgeOperator,
    u: NodeId,
    v: NodeId,
    pos_matrix: &EmbeddingMatrix,
    neg_matrix: &EmbeddingMatrix,
) {
    let d = pos_matrix.dimension();
    debug_assert_eq!(out.len(), 2 * d);
    half_into(&mut out[..d], op, u, v, pos_matrix);
    half_into(&mut out[d..], op, u, v, neg_matrix);
}

fn half_into(out: &mut [f64], op: EdgeOperator, u: NodeId, v: NodeId, matrix: &EmbeddingMatrix) {
    match (matrix.vector(u), matrix.vector(v)) {
        (Some(a), Some(b)) => {
            for ((o, &x), &y) in out.iter_mut().zip(a).zip(b) {
                *o = op.combine(x, y);
            }
        }
        (Some(a), None) => {
            for (o, &x) in out.iter_mut().zip(a) {
                *o = op.combine(x, 0.0);
            }
        }
        (None, Some(b)) => {
            for (o, &y) in out.iter_mut().zip(b) {
                *o = op.combine(0.0, y);
            }
        }
        (None, None) => out.fill(op.combine(0.0, 0.0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingMatrix;

    #[test]
    fn operator_arithmetic() {
        let a = [1.0, 3.0];
        let b = [3.0, 1.0];
        assert_eq!(apply_operator(EdgeOperator::Average, &a, &b).unwrap(), vec![2.0, 2.0]);
        assert_eq!(apply_operator(EdgeOperator::Hadamard, &a, &b).unwrap(), vec![3.0, 3.0]);
        assert_eq!(apply_operator(EdgeOperator::WeightedL1, &a, &b).unwrap(), vec![2.0, 2.0]);
        assert_eq!(apply_operator(EdgeOperator::WeightedL2, &a, &b).unwrap(), vec![4.0, 4.0]);
    }

    #[test]
    fn difference_operators_vanish_on_equal_inputs() {
        let a = [0.5, -2.0, 7.0];
        assert_eq!(
            apply_operator(EdgeOperator::WeightedL1, &a, &a).unwrap(),
            vec![0.0; 3]
        );
        assert_eq!(
            apply_operator(EdgeOperator::WeightedL2, &a, &a).unwrap(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn all_operators_symmetric() {
        let a = [1.5, -0.25, 3.0];
        let b = [-2.0, 0.75, 0.0];
        for op in EdgeOperator::ALL {
            assert_eq!(
                apply_operator(op, &a, &b).unwrap(),
                apply_operator(op, &b, &a).unwrap(),
                "{} not symmetric",
                op.name()
            );
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(apply_operator(EdgeOperator::Average, &[1.0], &[1.0, 2.0]).is_err());
    }

    fn matrices() -> (EmbeddingMatrix, EmbeddingMatrix) {
        let pos = EmbeddingMatrix::from_rows(
            2,
            vec![(0, vec![1.0, 3.0]), (1, vec![3.0, 1.0])],
        )
        .unwrap();
        // Node 0 is absent from the negative-graph matrix.
        let neg = EmbeddingMatrix::from_rows(2, vec![(1, vec![2.0, 2.0])]).unwrap();
        (pos, neg)
    }

    #[test]
    fn feature_concatenates_both_halves() {
        let (pos, neg) = matrices();
        let f = edge_feature(EdgeOperator::Average, 0, 1, &pos, &neg).unwrap();
        assert_eq!(f.dimension(), 4);
        // pos half: average([1,3],[3,1]); neg half: average(0, [2,2]).
        assert_eq!(f.vector, vec![2.0, 2.0, 1.0, 1.0]);
    }

    #[test]
    fn hadamard_against_missing_node_is_zero() {
        let (pos, neg) = matrices();
        let f = edge_feature(EdgeOperator::Hadamard, 0, 1, &pos, &neg).unwrap();
        assert_eq!(&f.vector[2..], &[0.0, 0.0]);
    }

    #[test]
    fn dim_64_matrices_give_128_entry_features() {
        let rows = |seed: f64| vec![(0u32, vec![seed; 64]), (1u32, vec![seed + 1.0; 64])];
        let pos = EmbeddingMatrix::from_rows(64, rows(0.5)).unwrap();
        let neg = EmbeddingMatrix::from_rows(64, rows(-0.5)).unwrap();
        let f = edge_feature(EdgeOperator::WeightedL2, 0, 1, &pos, &neg).unwrap();
        assert_eq!(f.dimension(), 128);
    }

    #[test]
    fn feature_symmetric_in_endpoints() {
        let (pos, neg) = matrices();
        for op in EdgeOperator::ALL {
            let uv = edge_feature(op, 0, 1, &pos, &neg).unwrap();
            let vu = edge_feature(op, 1, 0, &pos, &neg).unwrap();
            assert_eq!(uv, vu);
        }
    }

    #[test]
    fn operator_names_round_trip() {
        for op in EdgeOperator::ALL {
            assert_eq!(EdgeOperator::parse(op.name()).unwrap(), op);
        }
        assert!(EdgeOperator::parse("l3").is_err());
    }
}
