//! Top-k recommendation tables and the three diversity metrics: coverage
//! CO(k), entropy-diversity ED(k) and average intra-list similarity
//! ILS(k). Larger CO and ED mean broader recommendations; with
//! SIM(i, j) = 1 - cos(v_i, v_j), a larger ILS means the items inside a
//! list are more dissimilar to each other.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::edgeops::{edge_feature_into, EdgeOperator};
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::features::ItemFeatureMatrix;
use crate::graph::NodeId;
use crate::predictor::{MlpModel, HIDDEN_WIDTH};
use crate::vecmath::cosine;

/// Everything needed to score a (user, item) candidate pair.
pub struct RecommendationContext<'a> {
    pub model: &'a MlpModel,
    pub operator: EdgeOperator,
    pub pos_matrix: &'a EmbeddingMatrix,
    pub neg_matrix: &'a EmbeddingMatrix,
    /// The full item universe.
    pub items: &'a [NodeId],
    /// Per-user training-positive items, excluded from that user's
    /// candidates. Training negatives stay in: the model should be able
    /// to rank items the user disliked near the bottom.
    pub exclusions: &'a HashMap<NodeId, HashSet<NodeId>>,
}

/// Per-user candidates sorted by score descending, ties broken by
/// ascending item id. Holding the full ranking lets nested top-k tables
/// share one scoring pass.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidates {
    pub per_user: Vec<(NodeId, Vec<(NodeId, f64)>)>,
}

/// Per-user top-k lists. Users whose candidate set was empty are dropped
/// from `lists` and flagged in `empty_users`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationTable {
    pub k: usize,
    pub lists: Vec<(NodeId, Vec<(NodeId, f64)>)>,
    pub empty_users: Vec<NodeId>,
}

/// Scores every candidate item for every user. Users are processed in
/// parallel; output order follows the input `users` order.
pub fn rank_candidates(
    ctx: &RecommendationContext<'_>,
    users: &[NodeId],
) -> Result<RankedCandidates> {
    let feature_dim = 2 * ctx.pos_matrix.dimension();
    if ctx.model.input_dim() != feature_dim {
        return Err(Error::DimensionMismatch {
            expected: ctx.model.input_dim(),
            got: feature_dim,
        });
    }
    let empty = HashSet::new();
    let per_user: Vec<(NodeId, Vec<(NodeId, f64)>)> = users
        .par_iter()
        .map(|&user| {
            let excluded = ctx.exclusions.get(&user).unwrap_or(&empty);
            let mut feature = vec![0.0; feature_dim];
            let mut hidden = vec![0.0; HIDDEN_WIDTH];
            let mut scored: Vec<(NodeId, f64)> = Vec::with_capacity(ctx.items.len());
            for &item in ctx.items {
                if excluded.contains(&item) {
                    continue;
                }
                edge_feature_into(
                    &mut feature,
                    ctx.operator,
                    user,
                    item,
                    ctx.pos_matrix,
                    ctx.neg_matrix,
                );
                let score = ctx
                    .model
                    .forward_with_scratch(&feature, &mut hidden)
                    .expect("dimensions checked above");
                scored.push((item, score));
            }
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            (user, scored)
        })
        .collect();
    Ok(RankedCandidates { per_user })
}

/// Truncates a ranking to per-user top-k lists.
pub fn top_k(ranked: &RankedCandidates, k: usize) -> RecommendationTable {
    let mut lists = Vec::with_capacity(ranked.per_user.len());
    let mut empty_users = Vec::new();
    for (user, scored) in &ranked.per_user {
        if scored.is_empty() {
            empty_users.push(*user);
        } else {
            lists.push((*user, scored.iter().take(k).copied().collect()));
        }
    }
    RecommendationTable {
        k,
        lists,
        empty_users,
    }
}

/// Scores and truncates in one call.
pub fn recommend_topk(
    ctx: &RecommendationContext<'_>,
    users: &[NodeId],
    k: usize,
) -> Result<RecommendationTable> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    Ok(top_k(&rank_candidates(ctx, users)?, k))
}

/// Number of distinct items appearing anywhere in the table.
pub fn coverage(table: &RecommendationTable) -> usize {
    let mut seen = HashSet::new();
    for (_, items) in &table.lists {
        for (item, _) in items {
            seen.insert(*item);
        }
    }
    seen.len()
}

/// Shannon entropy of the recommendation-frequency distribution:
/// -sum_i (rec(i)/(k|U|)) ln(rec(i)/(k|U|)), where rec(i) counts the users
/// whose top-k list contains item i. Items never recommended contribute
/// zero (the x ln x limit). Every list must have exactly k entries.
pub fn entropy_diversity(table: &RecommendationTable, user_count: usize, k: usize) -> Result<f64> {
    for (_, items) in &table.lists {
        if items.len() != k {
            return Err(Error::RaggedLists(items.len(), k));
        }
    }
    if table.lists.len() != user_count {
        return Err(Error::InvalidConfig(format!(
            "table has {} lists but user_count is {user_count}",
            table.lists.len()
        )));
    }
    let mut rec: HashMap<NodeId, u64> = HashMap::new();
    for (_, items) in &table.lists {
        for (item, _) in items {
            *rec.entry(*item).or_default() += 1;
        }
    }
    let total = (k * user_count) as f64;
    Ok(rec
        .values()
        .map(|&count| {
            let p = count as f64 / total;
            -p * p.ln()
        })
        .sum())
}

/// Mean pairwise dissimilarity SIM(i, j) = 1 - cos(v_i, v_j) over the
/// unordered item pairs of one list. Nonnegative feature vectors keep the
/// result in [0, 1].
pub fn intra_list_similarity(items: &[NodeId], features: &ItemFeatureMatrix) -> Result<f64> {
    if items.len() < 2 {
        return Err(Error::ListTooShort(items.len()));
    }
    let vectors: Vec<&[f64]> = items
        .iter()
        .map(|&item| features.get(item).ok_or(Error::MissingFeatures(item)))
        .collect::<Result<_>>()?;
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            sum += 1.0 - cosine(vectors[i], vectors[j]);
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}

/// Average ILS over users, with a count of lists skipped for having
/// fewer than two items. An item without features is an error, never a
/// silent fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageIls {
    pub value: f64,
    pub evaluated_users: usize,
    pub skipped_users: usize,
}

pub fn average_ils(table: &RecommendationTable, features: &ItemFeatureMatrix) -> Result<AverageIls> {
    let mut sum = 0.0;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for (_, items) in &table.lists {
        if items.len() < 2 {
            skipped += 1;
            continue;
        }
        let ids: Vec<NodeId> = items.iter().map(|(item, _)| *item).collect();
        sum += intra_list_similarity(&ids, features)?;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::NoValidUsers);
    }
    Ok(AverageIls {
        value: sum / evaluated as f64,
        evaluated_users: evaluated,
        skipped_users: skipped,
    })
}

/// Metrics at one list size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMetrics {
    pub k: usize,
    pub coverage: usize,
    pub entropy_diversity: f64,
    /// None when k == 1 (a single item has no pairs).
    pub avg_ils: Option<f64>,
}

/// One row of the comparison grid: a (method, operator) pair with its
/// accuracy and diversity numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub method: String,
    pub operator: EdgeOperator,
    pub auc: f64,
    pub at_k: Vec<KMetrics>,
}
