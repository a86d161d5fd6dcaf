//! Random-walk corpus generation.
//!
//! Three strategies share one interface: uniform next-node choice
//! (DeepWalk), second-order p/q weighting (node2vec), and degree-biased
//! choice where a neighbor is drawn with probability proportional to
//! f(deg(neighbor)) — f(x)=1/x is div2vec, f(x)=1/sqrt(x) its rooted
//! variant. The degree-biased family is what shifts low-degree nodes into
//! the corpus, which is the whole point.

mod alias;

pub use alias::AliasTable;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Degree weighting function for degree-biased walks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeWeight {
    /// f(x) = 1/x
    Inverse,
    /// f(x) = 1/sqrt(x)
    InverseSqrt,
    /// f(x) = 1, which reduces to the uniform walk
    Constant,
}

impl DegreeWeight {
    pub fn apply(self, degree: u32) -> f64 {
        match self {
            DegreeWeight::Inverse => 1.0 / degree as f64,
            DegreeWeight::InverseSqrt => 1.0 / (degree as f64).sqrt(),
            DegreeWeight::Constant => 1.0,
        }
    }
}

/// Next-node selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WalkStrategy {
    Uniform,
    SecondOrder { p: f64, q: f64 },
    DegreeBiased { weight: DegreeWeight },
}

impl WalkStrategy {
    pub fn validate(&self) -> Result<()> {
        if let WalkStrategy::SecondOrder { p, q } = self {
            let positive = |x: f64| x.is_finite() && x > 0.0;
            if !positive(*p) || !positive(*q) {
                return Err(Error::InvalidWalkParams(format!(
                    "second-order parameters must be positive, got p={p} q={q}"
                )));
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for WalkStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WalkStrategy::Uniform => write!(f, "uniform"),
            WalkStrategy::SecondOrder { p, q } => write!(f, "second_order({p},{q})"),
            WalkStrategy::DegreeBiased { weight } => {
                let name = match weight {
                    DegreeWeight::Inverse => "inverse",
                    DegreeWeight::InverseSqrt => "inverse_sqrt",
                    DegreeWeight::Constant => "constant",
                };
                write!(f, "degree_biased({name})")
            }
        }
    }
}

impl std::str::FromStr for WalkStrategy {
    type Err = Error;

    /// Accepts `uniform`, `second_order(p,q)` and
    /// `degree_biased(inverse|inverse_sqrt|constant)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(WalkStrategy::Uniform);
        }
        let invalid = || Error::InvalidWalkParams(format!("unknown walk strategy '{s}'"));
        let args_of = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|rest| rest.strip_prefix('('))
                .and_then(|rest| rest.strip_suffix(')'))
        };
        if let Some(args) = args_of("second_order") {
            let mut parts = args.split(',');
            let p: f64 = parts
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(invalid)?;
            let q: f64 = parts
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(invalid)?;
            if parts.next().is_some() {
                return Err(invalid());
            }
            let strategy = WalkStrategy::SecondOrder { p, q };
            strategy.validate()?;
            return Ok(strategy);
        }
        if let Some(arg) = args_of("degree_biased") {
            let weight = match arg.trim() {
                "inverse" => DegreeWeight::Inverse,
                "inverse_sqrt" => DegreeWeight::InverseSqrt,
                "constant" => DegreeWeight::Constant,
                _ => return Err(invalid()),
            };
            return Ok(WalkStrategy::DegreeBiased { weight });
        }
        Err(invalid())
    }
}

/// Exact transition distribution over the sorted neighbor slice of
/// `current`. `previous` matters only for the second-order strategy; its
/// first step (no previous node) is uniform.
pub fn transition_distribution(
    graph: &Graph,
    strategy: WalkStrategy,
    current: NodeId,
    previous: Option<NodeId>,
) -> Result<Vec<f64>> {
    strategy.validate()?;
    let neighbors = graph.neighbors(current);
    if neighbors.is_empty() {
        return Err(Error::DeadEnd(current));
    }
    let dist = match (strategy, previous) {
        (WalkStrategy::Uniform, _) | (WalkStrategy::SecondOrder { .. }, None) => {
            let p = 1.0 / neighbors.len() as f64;
            vec![p; neighbors.len()]
        }
        (WalkStrategy::SecondOrder { p, q }, Some(prev)) => {
            let weights: Vec<f64> = neighbors
                .iter()
                .map(|&x| second_order_weight(graph, prev, x, p, q))
                .collect();
            normalize(weights)
        }
        (WalkStrategy::DegreeBiased { weight }, _) => {
            let weights: Vec<f64> = neighbors
                .iter()
                .map(|&x| weight.apply(graph.degree(x)))
                .collect();
            normalize(weights)
        }
    };
    Ok(dist)
}

fn second_order_weight(graph: &Graph, previous: NodeId, candidate: NodeId, p: f64, q: f64) -> f64 {
    if candidate == previous {
        1.0 / p
    } else if graph.has_edge(candidate, previous) {
        1.0
    } else {
        1.0 / q
    }
}

fn normalize(weights: Vec<f64>) -> Vec<f64> {
    let sum: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / sum).collect()
}

/// A collection of walks plus the parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<NodeId>>,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub strategy: WalkStrategy,
    pub seed: u64,
}

impl WalkCorpus {
    pub fn token_count(&self) -> usize {
        self.walks.iter().map(|w| w.len()).sum()
    }

    /// Per-node occurrence counts over the whole corpus.
    pub fn occurrence_counts(&self, node_count: usize) -> Vec<u64> {
        let mut counts = vec![0u64; node_count];
        for walk in &self.walks {
            for &node in walk {
                counts[node as usize] += 1;
            }
        }
        counts
    }
}

/// Generates `walks_per_node` walks of (at most) `walk_length` nodes from
/// every non-isolated node. Each walk draws from its own RNG stream
/// derived from (seed, start node, walk index), so generation is
/// order-independent across workers and byte-identical for a fixed seed.
pub fn generate_corpus(
    graph: &Graph,
    strategy: WalkStrategy,
    walk_length: usize,
    walks_per_node: usize,
    seed: u64,
) -> Result<WalkCorpus> {
    strategy.validate()?;
    if walk_length < 2 {
        return Err(Error::InvalidWalkParams(format!(
            "walk_length {walk_length} must be at least 2"
        )));
    }
    if walks_per_node < 1 {
        return Err(Error::InvalidWalkParams("walks_per_node must be at least 1".into()));
    }
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }

    let sampler = StepSampler::new(graph, strategy)?;
    let sampler = &sampler;
    let starts: Vec<NodeId> = graph.non_isolated_nodes().collect();
    let walks: Vec<Vec<NodeId>> = starts
        .par_iter()
        .flat_map_iter(|&start| {
            (0..walks_per_node).map(move |walk_index| {
                let stream = (start as u64) * walks_per_node as u64 + walk_index as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream);
                walk_from(graph, sampler, start, walk_length, &mut rng)
            })
        })
        .filter(|walk| walk.len() >= 2)
        .collect();

    Ok(WalkCorpus {
        walks,
        walk_length,
        walks_per_node,
        strategy,
        seed,
    })
}

fn walk_from<R: Rng>(
    graph: &Graph,
    sampler: &StepSampler,
    start: NodeId,
    walk_length: usize,
    rng: &mut R,
) -> Vec<NodeId> {
    let mut walk = Vec::with_capacity(walk_length);
    walk.push(start);
    let mut previous: Option<NodeId> = None;
    let mut current = start;
    while walk.len() < walk_length {
        match sampler.step(graph, current, previous, rng) {
            Some(next) => {
                walk.push(next);
                previous = Some(current);
                current = next;
            }
            // Dead end; possible only on degenerate graphs. Truncate.
            None => break,
        }
    }
    walk
}

/// Per-strategy sampling state. Degree-biased walks precompute one alias
/// table per node (weights depend only on static neighbor degrees), so a
/// step is O(1). Second-order steps use rejection sampling under the
/// envelope max(1/p, 1, 1/q), keeping memory at O(E) instead of the
/// O(sum deg^2) of per-edge tables.
enum StepSampler {
    Uniform,
    SecondOrder { p: f64, q: f64, envelope: f64 },
    DegreeBiased { tables: Vec<Option<AliasTable>> },
}

impl StepSampler {
    fn new(graph: &Graph, strategy: WalkStrategy) -> Result<Self> {
        Ok(match strategy {
            WalkStrategy::Uniform => StepSampler::Uniform,
            WalkStrategy::SecondOrder { p, q } => StepSampler::SecondOrder {
                p,
                q,
                envelope: (1.0 / p).max(1.0).max(1.0 / q),
            },
            WalkStrategy::DegreeBiased { weight } => {
                let tables = (0..graph.node_count() as NodeId)
                    .map(|v| {
                        let neighbors = graph.neighbors(v);
                        if neighbors.is_empty() {
                            return Ok(None);
                        }
                        let weights: Vec<f64> = neighbors
                            .iter()
                            .map(|&u| weight.apply(graph.degree(u)))
                            .collect();
                        AliasTable::new(&weights).map(Some)
                    })
                    .collect::<Result<Vec<_>>>()?;
                StepSampler::DegreeBiased { tables }
            }
        })
    }

    fn step<R: Rng>(
        &self,
        graph: &Graph,
        current: NodeId,
        previous: Option<NodeId>,
        rng: &mut R,
    ) -> Option<NodeId> {
        let neighbors = graph.neighbors(current);
        if neighbors.is_empty() {
            return None;
        }
        let idx = match self {
            StepSampler::Uniform => rng.gen_range(0..neighbors.len()),
            StepSampler::SecondOrder { p, q, envelope } => match previous {
                None => rng.gen_range(0..neighbors.len()),
                Some(prev) => {
                    second_order_step(graph, neighbors, prev, *p, *q, *envelope, rng)
                }
            },
            StepSampler::DegreeBiased { tables } => tables[current as usize]
                .as_ref()
                .expect("non-isolated node has a table")
                .sample(rng),
        };
        Some(neighbors[idx])
    }
}

fn second_order_step<R: Rng>(
    graph: &Graph,
    neighbors: &[NodeId],
    previous: NodeId,
    p: f64,
    q: f64,
    envelope: f64,
    rng: &mut R,
) -> usize {
    // Rejection rounds leave the target distribution untouched, so after a
    // bounded number of misses (extreme p/q make acceptance rare) we fall
    // back to exact inverse-CDF sampling over the same weights.
    const MAX_REJECTION_ROUNDS: usize = 32;
    for _ in 0..MAX_REJECTION_ROUNDS {
        let idx = rng.gen_range(0..neighbors.len());
        let w = second_order_weight(graph, previous, neighbors[idx], p, q);
        if rng.gen::<f64>() * envelope < w {
            return idx;
        }
    }
    let weights: Vec<f64> = neighbors
        .iter()
        .map(|&x| second_order_weight(graph, previous, x, p, q))
        .collect();
    let total: f64 = weights.iter().sum();
    let mut target = rng.gen::<f64>() * total;
    for (idx, w) in weights.iter().enumerate() {
        target -= w;
        if target < 0.0 {
            return idx;
        }
    }
    neighbors.len() - 1
}

/// One row of the degree-versus-frequency analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub node: NodeId,
    pub degree: u32,
    pub occurrences: u64,
}

/// Node frequency in a corpus against node degree, with rows sorted by
/// degree ascending and a Spearman rank correlation as the summary.
/// Uniform walks concentrate on high-degree nodes (strong positive
/// correlation); inverse-degree weighting flattens it toward zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyProfile {
    pub rows: Vec<ProfileRow>,
    pub spearman: f64,
}

pub fn frequency_profile(corpus: &WalkCorpus, graph: &Graph) -> FrequencyProfile {
    let counts = corpus.occurrence_counts(graph.node_count());
    let mut rows: Vec<ProfileRow> = (0..graph.node_count() as NodeId)
        .map(|v| ProfileRow {
            node: v,
            degree: graph.degree(v),
            occurrences: counts[v as usize],
        })
        .collect();
    rows.sort_by_key(|r| (r.degree, r.node));
    let degrees: Vec<f64> = rows.iter().map(|r| r.degree as f64).collect();
    let occurrences: Vec<f64> = rows.iter().map(|r| r.occurrences as f64).collect();
    FrequencyProfile {
        rows,
        spearman: spearman(&degrees, &occurrences),
    }
}

/// Checks that every walk really is a walk on `graph`: at least two nodes,
/// all ids in range, consecutive nodes adjacent.
pub fn validate_corpus(corpus: &WalkCorpus, graph: &Graph) -> Result<()> {
    for walk in &corpus.walks {
        if walk.len() < 2 {
            return Err(Error::InvalidWalkParams(format!(
                "walk of length {} in corpus",
                walk.len()
            )));
        }
        for &node in walk {
            if node as usize >= graph.node_count() {
                return Err(Error::InvalidWalkParams(format!(
                    "walk references node {node} outside the graph"
                )));
            }
        }
        for pair in walk.windows(2) {
            if !graph.has_edge(pair[0], pair[1]) {
                return Err(Error::InvalidWalkParams(format!(
                    "walk step ({}, {}) is not an edge",
                    pair[0], pair[1]
                )));
            }
        }
    }
    Ok(())
}

/// Spearman rank correlation with average ranks for ties. NaN when either
/// side has zero rank variance.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    pearson(&rx, &ry)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // 1-based ranks, averaged across the tie run.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}
