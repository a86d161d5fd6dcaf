//! Rating ingestion: binarization, record filtering, id mapping and the
//! train/test edge split.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::NodeId;

/// One raw rating row. Ratings are half-star steps in [0.5, 5.0].
#[derive(Debug, Clone, PartialEq)]
pub struct RatingRecord {
    pub user: String,
    pub item: String,
    pub rating: f64,
}

impl RatingRecord {
    pub fn new(user: impl Into<String>, item: impl Into<String>, rating: f64) -> Result<Self> {
        let user = user.into();
        let item = item.into();
        if !(0.5..=5.0).contains(&rating) {
            return Err(Error::InvalidRating {
                user,
                item,
                reason: format!("rating {rating} outside [0.5, 5.0]"),
            });
        }
        if (rating * 2.0).fract() != 0.0 {
            return Err(Error::InvalidRating {
                user,
                item,
                reason: format!("rating {rating} is not a half-star step"),
            });
        }
        Ok(RatingRecord { user, item, rating })
    }
}

/// Polarity of a binarized interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Positive,
    Negative,
}

/// Which side of the train/test split an edge landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

/// A binarized (user, item) interaction, still keyed by external ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub label: Label,
}

/// How star thresholds map to labels. Inclusive by default: a 4.0-star
/// record is positive and a 3.0-star record is negative; set
/// `exclusive: true` for the strict `>`/`<` reading instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinarizeThresholds {
    pub positive_min: f64,
    pub negative_max: f64,
    pub exclusive: bool,
}

impl Default for BinarizeThresholds {
    fn default() -> Self {
        BinarizeThresholds {
            positive_min: 4.0,
            negative_max: 3.0,
            exclusive: false,
        }
    }
}

/// Turns ratings into labeled interactions. Records strictly between the
/// thresholds are dropped.
pub fn binarize_ratings(
    records: &[RatingRecord],
    thresholds: BinarizeThresholds,
) -> Result<Vec<Interaction>> {
    if thresholds.positive_min <= thresholds.negative_max {
        return Err(Error::InvalidConfig(format!(
            "positive threshold {} must exceed negative threshold {}",
            thresholds.positive_min, thresholds.negative_max
        )));
    }
    let is_pos = |r: f64| {
        if thresholds.exclusive {
            r > thresholds.positive_min
        } else {
            r >= thresholds.positive_min
        }
    };
    let is_neg = |r: f64| {
        if thresholds.exclusive {
            r < thresholds.negative_max
        } else {
            r <= thresholds.negative_max
        }
    };
    Ok(records
        .iter()
        .filter_map(|rec| {
            let label = if is_pos(rec.rating) {
                Some(Label::Positive)
            } else if is_neg(rec.rating) {
                Some(Label::Negative)
            } else {
                None
            };
            label.map(|label| Interaction {
                user: rec.user.clone(),
                item: rec.item.clone(),
                label,
            })
        })
        .collect())
}

/// Bounds for the record filter. Items need at least `min_item_records`;
/// users need a record count in `[min_user_records, max_user_records]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterBounds {
    pub min_item_records: usize,
    pub min_user_records: usize,
    pub max_user_records: usize,
    /// One removal sweep instead of iterating to a fixed point.
    pub single_pass: bool,
}

impl Default for FilterBounds {
    fn default() -> Self {
        FilterBounds {
            min_item_records: 10,
            min_user_records: 10,
            max_user_records: 1000,
            single_pass: false,
        }
    }
}

/// Drops records of under-represented items and of users with too few or
/// too many records. Removing an item can push a user below its minimum
/// (and vice versa), so by default the sweep repeats until nothing moves.
pub fn filter_records<T>(
    records: Vec<T>,
    user_of: impl Fn(&T) -> &str,
    item_of: impl Fn(&T) -> &str,
    bounds: FilterBounds,
) -> Result<Vec<T>> {
    if bounds.min_item_records == 0
        || bounds.min_user_records == 0
        || bounds.max_user_records == 0
    {
        return Err(Error::InvalidConfig("filter bounds must be positive".into()));
    }
    if bounds.min_user_records > bounds.max_user_records {
        return Err(Error::InvalidConfig(format!(
            "min_user_records {} exceeds max_user_records {}",
            bounds.min_user_records, bounds.max_user_records
        )));
    }

    let mut kept = records;
    loop {
        let mut user_counts: HashMap<String, usize> = HashMap::new();
        let mut item_counts: HashMap<String, usize> = HashMap::new();
        for r in &kept {
            *user_counts.entry(user_of(r).to_string()).or_default() += 1;
            *item_counts.entry(item_of(r).to_string()).or_default() += 1;
        }
        let before = kept.len();
        kept.retain(|r| {
            let uc = user_counts[user_of(r)];
            let ic = item_counts[item_of(r)];
            ic >= bounds.min_item_records
                && uc >= bounds.min_user_records
                && uc <= bounds.max_user_records
        });
        if kept.len() == before || bounds.single_pass {
            return Ok(kept);
        }
    }
}

/// Maps external string keys to dense internal node ids. Users and items
/// share one id space; external keys are namespaced (`u:` / `i:`) so a
/// user "5" and an item "5" stay distinct.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IdMap {
    by_external: HashMap<String, NodeId>,
    by_internal: Vec<String>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn user_key(user: &str) -> String {
        format!("u:{user}")
    }

    pub fn item_key(item: &str) -> String {
        format!("i:{item}")
    }

    /// Returns the id for `external`, assigning the next dense id on first
    /// sight. Assignment order follows input order, so maps are
    /// reproducible from the same file.
    pub fn intern(&mut self, external: &str) -> NodeId {
        if let Some(&id) = self.by_external.get(external) {
            return id;
        }
        let id = self.by_internal.len() as NodeId;
        self.by_external.insert(external.to_string(), id);
        self.by_internal.push(external.to_string());
        id
    }

    pub fn get(&self, external: &str) -> Option<NodeId> {
        self.by_external.get(external).copied()
    }

    pub fn external(&self, id: NodeId) -> Option<&str> {
        self.by_internal.get(id as usize).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.by_internal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_internal.is_empty()
    }

    /// Entries in internal-id order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, NodeId)> + '_ {
        self.by_internal
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i as NodeId))
    }

    /// Rebuilds a map from (external, internal) pairs; ids must be dense.
    pub fn from_entries(entries: Vec<(String, NodeId)>) -> Result<Self> {
        let mut by_internal = vec![String::new(); entries.len()];
        let mut by_external = HashMap::with_capacity(entries.len());
        for (ext, id) in entries {
            if id as usize >= by_internal.len() || !by_internal[id as usize].is_empty() {
                return Err(Error::InvalidConfig(format!(
                    "id map is not a dense bijection at id {id}"
                )));
            }
            by_internal[id as usize] = ext.clone();
            if by_external.insert(ext, id).is_some() {
                return Err(Error::InvalidConfig("duplicate external id in map".into()));
            }
        }
        Ok(IdMap {
            by_external,
            by_internal,
        })
    }
}

/// One labeled, split edge over internal node ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabeledEdge {
    pub user: NodeId,
    pub item: NodeId,
    pub label: Label,
    pub split: Split,
}

/// The full labeled edge set driving classifier training and evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledEdgeSet {
    pub edges: Vec<LabeledEdge>,
}

impl LabeledEdgeSet {
    pub fn iter_where(
        &self,
        label: Label,
        split: Split,
    ) -> impl Iterator<Item = &LabeledEdge> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.label == label && e.split == split)
    }

    pub fn check_unique_pairs(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::with_capacity(self.edges.len());
        for e in &self.edges {
            if !seen.insert((e.user, e.item)) {
                return Err(Error::InvalidConfig(format!(
                    "pair ({}, {}) appears more than once",
                    e.user, e.item
                )));
            }
        }
        Ok(())
    }
}

/// (train, test) halves of a split.
pub type SplitPairs = (Vec<(NodeId, NodeId)>, Vec<(NodeId, NodeId)>);

/// Splits pairs into train/test. `|test| = round(test_fraction * |pairs|)`
/// and the same seed always yields the same split.
pub fn split_edges(pairs: &[(NodeId, NodeId)], test_fraction: f64, seed: u64) -> Result<SplitPairs> {
    if !(test_fraction.is_finite() && test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    if pairs.len() < 2 {
        return Err(Error::TooFewPairs(pairs.len()));
    }
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let test_len = (test_fraction * pairs.len() as f64).round() as usize;
    let (test_idx, train_idx) = order.split_at(test_len);
    let mut test: Vec<_> = test_idx.iter().map(|&i| pairs[i]).collect();
    let mut train: Vec<_> = train_idx.iter().map(|&i| pairs[i]).collect();
    // Keep the output independent of the shuffle so only membership, not
    // ordering, depends on the seed.
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Splits positive and negative pairs separately (stratified) and merges
/// them into one labeled edge set.
pub fn split_labeled(
    positive: &[(NodeId, NodeId)],
    negative: &[(NodeId, NodeId)],
    test_fraction: f64,
    seed: u64,
) -> Result<LabeledEdgeSet> {
    let (pos_train, pos_test) = split_edges(positive, test_fraction, seed)?;
    let (neg_train, neg_test) = split_edges(negative, test_fraction, seed.wrapping_add(1))?;
    let mut edges = Vec::with_capacity(positive.len() + negative.len());
    let mut push = |pairs: Vec<(NodeId, NodeId)>, label, split| {
        edges.extend(pairs.into_iter().map(|(user, item)| LabeledEdge {
            user,
            item,
            label,
            split,
        }));
    };
    push(pos_train, Label::Positive, Split::Train);
    push(pos_test, Label::Positive, Split::Test);
    push(neg_train, Label::Negative, Split::Train);
    push(neg_test, Label::Negative, Split::Test);
    let set = LabeledEdgeSet { edges };
    set.check_unique_pairs()?;
    Ok(set)
}
