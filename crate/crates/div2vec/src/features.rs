//! Dense item feature vectors (tag-relevance style) used by the
//! intra-list similarity metric.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// item id -> dense relevance vector, all values in [0, 1], one shared
/// dimension. All-zero vectors are rejected up front because cosine
/// similarity is undefined for them.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemFeatureMatrix {
    dimension: usize,
    vectors: HashMap<NodeId, Vec<f64>>,
}

impl ItemFeatureMatrix {
    pub fn new(dimension: usize) -> Self {
        ItemFeatureMatrix {
            dimension,
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, item: NodeId, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: vector.len(),
            });
        }
        if vector.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidConfig(format!(
                "feature vector for item {item} has values outside [0, 1]"
            )));
        }
        if vector.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidConfig(format!(
                "feature vector for item {item} is all zero"
            )));
        }
        self.vectors.insert(item, vector);
        Ok(())
    }

    /// Assembles vectors from sparse (item, tag, relevance) triples. The
    /// tag universe is whatever tags appear; missing (item, tag) cells are
    /// zero. Items whose triples are all zero are rejected.
    pub fn from_triples(triples: &[(NodeId, String, f64)]) -> Result<Self> {
        let mut tags: Vec<&str> = triples.iter().map(|(_, t, _)| t.as_str()).collect();
        tags.sort_unstable();
        tags.dedup();
        let tag_index: HashMap<&str, usize> =
            tags.iter().enumerate().map(|(i, &t)| (t, i)).collect();

        let mut dense: HashMap<NodeId, Vec<f64>> = HashMap::new();
        for (item, tag, relevance) in triples {
            if !(0.0..=1.0).contains(relevance) {
                return Err(Error::InvalidConfig(format!(
                    "relevance {relevance} for item {item} tag {tag} outside [0, 1]"
                )));
            }
            dense.entry(*item).or_insert_with(|| vec![0.0; tags.len()])[tag_index[tag.as_str()]] =
                *relevance;
        }

        let mut matrix = ItemFeatureMatrix::new(tags.len());
        let mut items: Vec<_> = dense.into_iter().collect();
        items.sort_by_key(|(item, _)| *item);
        for (item, vector) in items {
            matrix.insert(item, vector)?;
        }
        Ok(matrix)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, item: NodeId) -> Option<&[f64]> {
        self.vectors.get(&item).map(|v| v.as_slice())
    }

    pub fn items(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.vectors.keys().copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triples_assemble_dense_vectors() {
        let triples = vec![
            (0, "action".to_string(), 0.9),
            (0, "drama".to_string(), 0.1),
            (1, "drama".to_string(), 0.8),
        ];
        let m = ItemFeatureMatrix::from_triples(&triples).unwrap();
        assert_eq!(m.dimension(), 2);
        // Tags are ordered lexically: action, drama.
        assert_eq!(m.get(0).unwrap(), &[0.9, 0.1]);
        assert_eq!(m.get(1).unwrap(), &[0.0, 0.8]);
        assert_eq!(m.get(2), None);
    }

    #[test]
    fn all_zero_vector_rejected() {
        let triples = vec![(0, "t".to_string(), 0.0)];
        assert!(ItemFeatureMatrix::from_triples(&triples).is_err());
    }

    #[test]
    fn out_of_range_relevance_rejected() {
        let triples = vec![(0, "t".to_string(), 1.5)];
        assert!(ItemFeatureMatrix::from_triples(&triples).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut m = ItemFeatureMatrix::new(3);
        assert!(m.insert(0, vec![0.5, 0.5]).is_err());
    }
}
