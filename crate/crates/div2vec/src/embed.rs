//! Skip-gram with negative sampling over a walk corpus.
//!
//! Walks play the role of sentences and nodes the role of words. Training
//! has a deterministic single-threaded mode (fixed seed in, identical
//! matrices out) and a lock-free parallel mode that shards the pair
//! stream and tolerates overlapping updates; the parallel mode is not
//! bit-reproducible.

use std::borrow::Cow;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::vecmath::{ln_sigmoid, sigmoid};
use crate::walker::{AliasTable, WalkCorpus};

/// Skip-gram training hyperparameters. Only the dimension is fixed by the
/// task (64); the rest default to the usual word2vec settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SkipGramConfig {
    pub dimension: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    pub min_learning_rate: f64,
    pub unigram_power: f64,
    pub seed: u64,
    /// Shard the pair stream across threads with unsynchronized updates.
    pub parallel: bool,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dimension: 64,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_learning_rate: 0.025,
            min_learning_rate: 1e-4,
            unigram_power: 0.75,
            seed: 0,
            parallel: false,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        if self.window == 0 {
            return Err(Error::InvalidConfig("window must be at least 1".into()));
        }
        if self.negatives == 0 {
            return Err(Error::InvalidConfig("negatives must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.initial_learning_rate) || !positive(self.min_learning_rate) {
            return Err(Error::InvalidConfig("learning rates must be positive".into()));
        }
        if self.min_learning_rate > self.initial_learning_rate {
            return Err(Error::InvalidConfig(
                "min learning rate exceeds initial learning rate".into(),
            ));
        }
        Ok(())
    }
}

/// Dense node-id -> vector map. `vectors` holds the input ("center")
/// vectors that downstream consumers read; `context_vectors` exist only
/// for training. Nodes that never occurred in the corpus have no vector
/// and read back as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dimension: usize,
    node_count: usize,
    vectors: Vec<f64>,
    context_vectors: Vec<f64>,
    present: Vec<bool>,
}

impl EmbeddingMatrix {
    fn new(node_count: usize, dimension: usize, present: Vec<bool>, seed: u64) -> Self {
        let mut vectors = vec![0.0; node_count * dimension];
        let context_vectors = vec![0.0; node_count * dimension];
        // Each row draws from its own stream so initialization does not
        // depend on which other nodes are present.
        let half = 0.5 / dimension as f64;
        for node in 0..node_count {
            if present[node] {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(node as u64);
                for x in &mut vectors[node * dimension..(node + 1) * dimension] {
                    *x = rng.gen_range(-half..half);
                }
            }
        }
        EmbeddingMatrix {
            dimension,
            node_count,
            vectors,
            context_vectors,
            present,
        }
    }

    /// Rebuilds a matrix from explicit rows (for example, a parsed
    /// embedding file). Context vectors are zero; the node universe is
    /// the largest listed id plus one.
    pub fn from_rows(dimension: usize, rows: Vec<(NodeId, Vec<f64>)>) -> Result<Self> {
        let node_count = rows
            .iter()
            .map(|(id, _)| *id as usize + 1)
            .max()
            .unwrap_or(0);
        let mut matrix = EmbeddingMatrix {
            dimension,
            node_count,
            vectors: vec![0.0; node_count * dimension],
            context_vectors: vec![0.0; node_count * dimension],
            present: vec![false; node_count],
        };
        for (id, row) in rows {
            if row.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("embedding row {id}")));
            }
            let idx = id as usize;
            if matrix.present[idx] {
                return Err(Error::InvalidConfig(format!("duplicate embedding row {id}")));
            }
            matrix.vectors[idx * dimension..(idx + 1) * dimension].copy_from_slice(&row);
            matrix.present[idx] = true;
        }
        Ok(matrix)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn is_present(&self, node: NodeId) -> bool {
        (node as usize) < self.node_count && self.present[node as usize]
    }

    /// Input vector of a present node.
    pub fn vector(&self, node: NodeId) -> Option<&[f64]> {
        if self.is_present(node) {
            let i = node as usize * self.dimension;
            Some(&self.vectors[i..i + self.dimension])
        } else {
            None
        }
    }

    pub fn context_vector(&self, node: NodeId) -> Option<&[f64]> {
        if self.is_present(node) {
            let i = node as usize * self.dimension;
            Some(&self.context_vectors[i..i + self.dimension])
        } else {
            None
        }
    }

    pub fn vector_mut(&mut self, node: NodeId) -> Option<&mut [f64]> {
        if self.is_present(node) {
            let i = node as usize * self.dimension;
            Some(&mut self.vectors[i..i + self.dimension])
        } else {
            None
        }
    }

    pub fn context_vector_mut(&mut self, node: NodeId) -> Option<&mut [f64]> {
        if self.is_present(node) {
            let i = node as usize * self.dimension;
            Some(&mut self.context_vectors[i..i + self.dimension])
        } else {
            None
        }
    }

    /// The node's input vector, or an all-zero vector with a miss flag
    /// when the node has none. Zero is the neutral element for every
    /// downstream edge operator, which is why misses are not errors.
    pub fn lookup(&self, node: NodeId) -> (Cow<'_, [f64]>, bool) {
        match self.vector(node) {
            Some(v) => (Cow::Borrowed(v), false),
            None => (Cow::Owned(vec![0.0; self.dimension]), true),
        }
    }

    pub fn present_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count as NodeId).filter(move |&v| self.present[v as usize])
    }

    pub fn all_finite(&self) -> bool {
        self.vectors.iter().all(|v| v.is_finite())
            && self.context_vectors.iter().all(|v| v.is_finite())
    }
}

/// Enumerates skip-gram (center, context) pairs with a fixed window: for
/// each position i, every j != i with |i - j| <= window.
pub fn training_pairs<'a>(
    corpus: &'a WalkCorpus,
    window: usize,
) -> impl Iterator<Item = (NodeId, NodeId)> + 'a {
    corpus
        .walks
        .iter()
        .flat_map(move |walk| walk_pairs(walk, window))
}

fn walk_pairs(walk: &[NodeId], window: usize) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
    (0..walk.len()).flat_map(move |i| {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len().saturating_sub(1));
        (lo..=hi)
            .filter(move |&j| j != i)
            .map(move |j| (walk[i], walk[j]))
    })
}

/// Number of pairs `training_pairs` will yield for one epoch.
pub fn pair_count(corpus: &WalkCorpus, window: usize) -> u64 {
    corpus
        .walks
        .iter()
        .map(|walk| {
            let len = walk.len();
            (0..len)
                .map(|i| {
                    let lo = i.saturating_sub(window);
                    let hi = (i + window).min(len - 1);
                    (hi - lo) as u64
                })
                .sum::<u64>()
        })
        .sum()
}

/// Linear decay: the rate at global pair index `t` out of `total`.
pub fn learning_rate_at(t: u64, total: u64, initial: f64, min: f64) -> f64 {
    let decayed = initial * (1.0 - t as f64 / total as f64);
    decayed.max(min)
}

/// Draws negatives from the unigram^power distribution over corpus node
/// frequencies.
pub struct NegativeSampler {
    nodes: Vec<NodeId>,
    table: AliasTable,
}

impl NegativeSampler {
    pub fn from_counts(counts: &[u64], power: f64) -> Result<Self> {
        let nodes: Vec<NodeId> = (0..counts.len() as NodeId)
            .filter(|&v| counts[v as usize] > 0)
            .collect();
        if nodes.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let weights: Vec<f64> = nodes
            .iter()
            .map(|&v| (counts[v as usize] as f64).powf(power))
            .collect();
        Ok(NegativeSampler {
            table: AliasTable::new(&weights)?,
            nodes,
        })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeId {
        self.nodes[self.table.sample(rng)]
    }
}

/// One gradient-descent step on the SGNS loss
/// `-ln s(v_c . u_o) - sum_n ln s(-v_c . u_n)`.
///
/// All dot products are evaluated at the pre-update parameters, so the
/// applied update is the exact gradient of that joint loss even when the
/// negative list contains duplicates. Returns the pre-update loss.
pub fn sgns_step(
    matrices: &mut EmbeddingMatrix,
    center: NodeId,
    context: NodeId,
    negatives: &[NodeId],
    learning_rate: f64,
) -> Result<f64> {
    let d = matrices.dimension;
    let c = center as usize * d;
    let center_vec: &mut [f64] = &mut matrices.vectors[c..c + d];
    let mut center_grad = vec![0.0; d];
    let mut loss = 0.0;

    // (context row, sigma(v_c . u)) for the positive and each negative.
    let mut touched: Vec<(usize, f64)> = Vec::with_capacity(1 + negatives.len());
    for (node, label) in std::iter::once((context, 1.0))
        .chain(negatives.iter().map(|&n| (n, 0.0)))
    {
        let o = node as usize * d;
        let ctx = &matrices.context_vectors[o..o + d];
        let score: f64 = center_vec.iter().zip(ctx).map(|(a, b)| a * b).sum();
        loss -= if label == 1.0 {
            ln_sigmoid(score)
        } else {
            ln_sigmoid(-score)
        };
        let s = sigmoid(score);
        for (g, &u) in center_grad.iter_mut().zip(ctx) {
            *g += (s - label) * u;
        }
        touched.push((o, s - label));
    }

    if !loss.is_finite() {
        return Err(Error::NonFinite(format!(
            "sgns loss for pair ({center}, {context})"
        )));
    }

    for (o, coeff) in touched {
        let ctx = &mut matrices.context_vectors[o..o + d];
        for (u, &v) in ctx.iter_mut().zip(center_vec.iter()) {
            *u -= learning_rate * coeff * v;
        }
    }
    for (v, g) in center_vec.iter_mut().zip(center_grad) {
        *v -= learning_rate * g;
    }
    Ok(loss)
}

/// Per-epoch mean losses from a training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingStats {
    pub epoch_losses: Vec<f64>,
    pub total_pairs: u64,
}

impl TrainingStats {
    /// True when some epoch's mean loss rose above its predecessor's.
    /// That is worth a warning on a well-conditioned corpus, not an error.
    pub fn loss_increased(&self) -> bool {
        self.epoch_losses.windows(2).any(|w| w[1] > w[0])
    }
}

pub fn train_embeddings(corpus: &WalkCorpus, config: &SkipGramConfig) -> Result<EmbeddingMatrix> {
    train_embeddings_detailed(corpus, config).map(|(m, _)| m)
}

pub fn train_embeddings_detailed(
    corpus: &WalkCorpus,
    config: &SkipGramConfig,
) -> Result<(EmbeddingMatrix, TrainingStats)> {
    config.validate()?;
    if corpus.walks.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let node_count = corpus
        .walks
        .iter()
        .flat_map(|w| w.iter())
        .map(|&v| v as usize + 1)
        .max()
        .unwrap_or(0);
    let counts = corpus.occurrence_counts(node_count);
    let present: Vec<bool> = counts.iter().map(|&c| c > 0).collect();
    let sampler = NegativeSampler::from_counts(&counts, config.unigram_power)?;

    let mut matrices = EmbeddingMatrix::new(node_count, config.dimension, present, config.seed);
    let per_epoch = pair_count(corpus, config.window);
    let total_pairs = per_epoch * config.epochs as u64;
    if total_pairs == 0 {
        return Err(Error::EmptyCorpus);
    }

    let stats = if config.parallel {
        train_parallel(corpus, config, &sampler, &mut matrices, total_pairs)?
    } else {
        train_sequential(corpus, config, &sampler, &mut matrices, total_pairs)?
    };
    if !matrices.all_finite() {
        return Err(Error::NonFinite("embedding matrix after training".into()));
    }
    Ok((matrices, stats))
}

fn train_sequential(
    corpus: &WalkCorpus,
    config: &SkipGramConfig,
    sampler: &NegativeSampler,
    matrices: &mut EmbeddingMatrix,
    total_pairs: u64,
) -> Result<TrainingStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(u64::MAX); // distinct from the per-node init streams
    let mut t = 0u64;
    let mut negatives = Vec::with_capacity(config.negatives);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        let mut epoch_loss = 0.0;
        let mut epoch_pairs = 0u64;
        for walk in &corpus.walks {
            for (center, context) in walk_pairs(walk, config.window) {
                let lr = learning_rate_at(
                    t,
                    total_pairs,
                    config.initial_learning_rate,
                    config.min_learning_rate,
                );
                negatives.clear();
                for _ in 0..config.negatives {
                    let n = sampler.draw(&mut rng);
                    // A draw that hits the true context would push it both
                    // ways at once; skip it.
                    if n != context {
                        negatives.push(n);
                    }
                }
                epoch_loss += sgns_step(matrices, center, context, &negatives, lr)?;
                epoch_pairs += 1;
                t += 1;
            }
        }
        epoch_losses.push(epoch_loss / epoch_pairs as f64);
    }
    Ok(TrainingStats {
        epoch_losses,
        total_pairs,
    })
}

/// Lock-free parallel training. Walks are sharded across threads; each
/// shard advances its own RNG stream and applies updates with relaxed
/// atomic load/store, so concurrent touches of one row may overwrite each
/// other. That is the usual sparse-update bargain; results are close to
/// but not bitwise equal to the sequential mode.
fn train_parallel(
    corpus: &WalkCorpus,
    config: &SkipGramConfig,
    sampler: &NegativeSampler,
    matrices: &mut EmbeddingMatrix,
    total_pairs: u64,
) -> Result<TrainingStats> {
    let d = matrices.dimension;
    let vectors: Vec<AtomicU64> = matrices
        .vectors
        .iter()
        .map(|v| AtomicU64::new(v.to_bits()))
        .collect();
    let contexts: Vec<AtomicU64> = matrices
        .context_vectors
        .iter()
        .map(|v| AtomicU64::new(v.to_bits()))
        .collect();

    let shards = rayon::current_num_threads().max(1);
    let progress = AtomicU64::new(0);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        let results: Vec<Result<(f64, u64)>> = (0..shards)
            .into_par_iter()
            .map(|shard| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
                rng.set_stream(shard as u64);
                let mut negatives = Vec::with_capacity(config.negatives);
                let mut center_grad = vec![0.0f64; d];
                let mut loss_sum = 0.0;
                let mut pairs = 0u64;
                for walk in corpus.walks.iter().skip(shard).step_by(shards) {
                    for (center, context) in walk_pairs(walk, config.window) {
                        let t = progress.fetch_add(1, Ordering::Relaxed);
                        let lr = learning_rate_at(
                            t,
                            total_pairs,
                            config.initial_learning_rate,
                            config.min_learning_rate,
                        );
                        negatives.clear();
                        for _ in 0..config.negatives {
                            let n = sampler.draw(&mut rng);
                            if n != context {
                                negatives.push(n);
                            }
                        }
                        let loss = sgns_step_atomic(
                            &vectors,
                            &contexts,
                            d,
                            center,
                            context,
                            &negatives,
                            lr,
                            &mut center_grad,
                        )?;
                        loss_sum += loss;
                        pairs += 1;
                    }
                }
                Ok((loss_sum, pairs))
            })
            .collect();
        let mut loss = 0.0;
        let mut pairs = 0u64;
        for r in results {
            let (l, p) = r?;
            loss += l;
            pairs += p;
        }
        epoch_losses.push(loss / pairs.max(1) as f64);
    }

    for (dst, src) in matrices.vectors.iter_mut().zip(&vectors) {
        *dst = f64::from_bits(src.load(Ordering::Relaxed));
    }
    for (dst, src) in matrices.context_vectors.iter_mut().zip(&contexts) {
        *dst = f64::from_bits(src.load(Ordering::Relaxed));
    }
    Ok(TrainingStats {
        epoch_losses,
        total_pairs,
    })
}

#[allow(clippy::too_many_arguments)]
fn sgns_step_atomic(
    vectors: &[AtomicU64],
    contexts: &[AtomicU64],
    d: usize,
    center: NodeId,
    context: NodeId,
    negatives: &[NodeId],
    learning_rate: f64,
    center_grad: &mut [f64],
) -> Result<f64> {
    let c = center as usize * d;
    let load = |cell: &AtomicU64| f64::from_bits(cell.load(Ordering::Relaxed));
    let center_vec: Vec<f64> = vectors[c..c + d].iter().map(load).collect();
    center_grad.fill(0.0);
    let mut loss = 0.0;

    let mut touched: Vec<(usize, f64)> = Vec::with_capacity(1 + negatives.len());
    for (node, label) in std::iter::once((context, 1.0))
        .chain(negatives.iter().map(|&n| (n, 0.0)))
    {
        let o = node as usize * d;
        let mut score = 0.0;
        for (i, v) in center_vec.iter().enumerate() {
            score += v * load(&contexts[o + i]);
        }
        loss -= if label == 1.0 {
            ln_sigmoid(score)
        } else {
            ln_sigmoid(-score)
        };
        let s = sigmoid(score);
        for (i, g) in center_grad.iter_mut().enumerate() {
            *g += (s - label) * load(&contexts[o + i]);
        }
        touched.push((o, s - label));
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!(
            "sgns loss for pair ({center}, {context})"
        )));
    }

    for (o, coeff) in touched {
        for (i, &v) in center_vec.iter().enumerate() {
            let cell = &contexts[o + i];
            let updated = load(cell) - learning_rate * coeff * v;
            cell.store(updated.to_bits(), Ordering::Relaxed);
        }
    }
    for (i, g) in center_grad.iter().enumerate() {
        let cell = &vectors[c + i];
        let updated = load(cell) - learning_rate * g;
        cell.store(updated.to_bits(), Ordering::Relaxed);
    }
    Ok(loss)
}
