//! Link-prediction head: a one-hidden-layer MLP over edge features, and
//! the rank-based AUC that scores it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vecmath::sigmoid;

/// The hidden layer is fixed at 128 units.
pub const HIDDEN_WIDTH: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "relu" => Ok(Activation::Relu),
            other => Err(Error::InvalidConfig(format!("unknown activation '{other}'"))),
        }
    }
}

/// sigmoid(W2 . relu(W1 x + b1) + b2), trained with binary cross-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    input_dim: usize,
    /// HIDDEN_WIDTH x input_dim, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// 1 x HIDDEN_WIDTH.
    pub w2: Vec<f64>,
    pub b2: f64,
    pub activation: Activation,
}

impl MlpModel {
    /// Zero-initialized model; `forward` returns 0.5 everywhere.
    pub fn zeros(input_dim: usize) -> Self {
        MlpModel {
            input_dim,
            w1: vec![0.0; HIDDEN_WIDTH * input_dim],
            b1: vec![0.0; HIDDEN_WIDTH],
            w2: vec![0.0; HIDDEN_WIDTH],
            b2: 0.0,
            activation: Activation::Relu,
        }
    }

    /// Xavier-uniform initialization from a fixed seed.
    pub fn init(input_dim: usize, seed: u64) -> Self {
        let mut model = MlpModel::zeros(input_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound1 = (6.0 / (input_dim + HIDDEN_WIDTH) as f64).sqrt();
        for w in &mut model.w1 {
            *w = rng.gen_range(-bound1..bound1);
        }
        let bound2 = (6.0 / (HIDDEN_WIDTH + 1) as f64).sqrt();
        for w in &mut model.w2 {
            *w = rng.gen_range(-bound2..bound2);
        }
        model
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn parameter_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    pub fn all_finite(&self) -> bool {
        self.w1.iter().all(|v| v.is_finite())
            && self.b1.iter().all(|v| v.is_finite())
            && self.w2.iter().all(|v| v.is_finite())
            && self.b2.is_finite()
    }

    /// Probability that the edge is positive; strictly inside (0, 1) for
    /// finite inputs.
    pub fn forward(&self, feature: &[f64]) -> Result<f64> {
        let mut hidden = vec![0.0; HIDDEN_WIDTH];
        self.forward_with_scratch(feature, &mut hidden)
    }

    /// Same as `forward`, reusing a caller-owned hidden buffer. This is
    /// the entry point for bulk candidate scoring.
    pub fn forward_with_scratch(&self, feature: &[f64], hidden: &mut [f64]) -> Result<f64> {
        if feature.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: feature.len(),
            });
        }
        debug_assert_eq!(hidden.len(), HIDDEN_WIDTH);
        for (h, (row, &b)) in hidden
            .iter_mut()
            .zip(self.w1.chunks_exact(self.input_dim).zip(&self.b1))
        {
            let z: f64 = row.iter().zip(feature).map(|(w, x)| w * x).sum::<f64>() + b;
            *h = z.max(0.0);
        }
        let z2: f64 = self.w2.iter().zip(hidden.iter()).map(|(w, h)| w * h).sum::<f64>() + self.b2;
        // sigmoid rounds to exactly 0.0 or 1.0 once |z2| saturates f64;
        // pin the output to the open interval instead.
        Ok(sigmoid(z2).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
    }
}

/// Gradients of the cross-entropy loss, in the same layout as the model.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpGradients {
    pub fn zeros(input_dim: usize) -> Self {
        MlpGradients {
            w1: vec![0.0; HIDDEN_WIDTH * input_dim],
            b1: vec![0.0; HIDDEN_WIDTH],
            w2: vec![0.0; HIDDEN_WIDTH],
            b2: 0.0,
        }
    }

    fn reset(&mut self) {
        self.w1.fill(0.0);
        self.b1.fill(0.0);
        self.w2.fill(0.0);
        self.b2 = 0.0;
    }
}

/// Cross-entropy loss and its exact gradient for a single labeled
/// feature (label 1.0 for positive, 0.0 for negative).
pub fn loss_and_gradient(
    model: &MlpModel,
    feature: &[f64],
    label: f64,
) -> Result<(f64, MlpGradients)> {
    let mut grads = MlpGradients::zeros(model.input_dim);
    let mut hidden = vec![0.0; HIDDEN_WIDTH];
    let loss = backprop(model, feature, label, &mut grads, &mut hidden)?;
    Ok((loss, grads))
}

/// Cross-entropy loss for one example, adding its gradient into `grads`.
/// `hidden` is scratch space of length `HIDDEN_WIDTH`.
fn backprop(
    model: &MlpModel,
    feature: &[f64],
    label: f64,
    grads: &mut MlpGradients,
    hidden: &mut [f64],
) -> Result<f64> {
    let d = model.input_dim;
    let p = model.forward_with_scratch(feature, hidden)?;
    // Clamp keeps the loss finite when the model saturates.
    let loss = -(label * p.max(1e-300).ln() + (1.0 - label) * (1.0 - p).max(1e-300).ln());

    let dz2 = p - label;
    grads.b2 += dz2;
    for (k, &h) in hidden.iter().enumerate() {
        grads.w2[k] += dz2 * h;
        // h = max(z1, 0), so a positive value means the unit fired.
        if h > 0.0 {
            let dz1 = dz2 * model.w2[k];
            grads.b1[k] += dz1;
            for (g, &x) in grads.w1[k * d..(k + 1) * d].iter_mut().zip(feature) {
                *g += dz1 * x;
            }
        }
    }
    Ok(loss)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 256,
            learning_rate: 0.5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let rate_ok = self.learning_rate.is_finite() && self.learning_rate > 0.0;
        if self.epochs == 0 || self.batch_size == 0 || !rate_ok {
            return Err(Error::InvalidConfig(
                "classifier epochs, batch size and learning rate must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-epoch mean training loss.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitStats {
    pub epoch_losses: Vec<f64>,
}

/// Trains the classifier with mini-batch gradient descent at a fixed
/// rate for a fixed number of epochs; no early stopping, so a given
/// (data, config) pair always yields the same model.
pub fn train_classifier(
    features: &[Vec<f64>],
    labels: &[bool],
    config: &TrainConfig,
) -> Result<MlpModel> {
    fit_classifier(features, labels, config).map(|(m, _)| m)
}

pub fn fit_classifier(
    features: &[Vec<f64>],
    labels: &[bool],
    config: &TrainConfig,
) -> Result<(MlpModel, FitStats)> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: labels.len(),
        });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let input_dim = features[0].len();
    if features.iter().any(|f| f.len() != input_dim) {
        return Err(Error::InvalidConfig("feature rows have unequal lengths".into()));
    }

    let mut model = MlpModel::init(input_dim, config.seed);
    let mut grads = MlpGradients::zeros(input_dim);
    let mut hidden = vec![0.0; HIDDEN_WIDTH];
    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.reset();
            for &i in batch {
                let label = if labels[i] { 1.0 } else { 0.0 };
                epoch_loss += backprop(&model, &features[i], label, &mut grads, &mut hidden)?;
            }
            let scale = config.learning_rate / batch.len() as f64;
            for (w, g) in model.w1.iter_mut().zip(&grads.w1) {
                *w -= scale * g;
            }
            for (b, g) in model.b1.iter_mut().zip(&grads.b1) {
                *b -= scale * g;
            }
            for (w, g) in model.w2.iter_mut().zip(&grads.w2) {
                *w -= scale * g;
            }
            model.b2 -= scale * grads.b2;
        }
        if !model.all_finite() {
            return Err(Error::NonFinite("classifier parameters".into()));
        }
        epoch_losses.push(epoch_loss / features.len() as f64);
    }
    Ok((model, FitStats { epoch_losses }))
}

/// Rank-based AUC (Mann-Whitney): the probability that a uniformly random
/// positive outranks a uniformly random negative, ties counted one half.
pub fn auc(scores: &[(f64, bool)]) -> Result<f64> {
    let positives = scores.iter().filter(|(_, l)| *l).count();
    let negatives = scores.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass);
    }
    if scores.iter().any(|(s, _)| !s.is_finite()) {
        return Err(Error::NonFinite("auc score".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.partial_cmp(&scores[b].0).expect("finite"));

    // Sum of positive ranks, with tied scores sharing their average rank.
    let mut positive_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]].0 == scores[order[i]].0 {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if scores[idx].1 {
                positive_rank_sum += rank;
            }
        }
        i = j + 1;
    }

    let p = positives as f64;
    let u = positive_rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * negatives as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_outputs_half() {
        let model = MlpModel::zeros(4);
        let p = model.forward(&[3.0, -1.0, 0.5, 2.0]).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn forward_stays_inside_open_interval() {
        let model = MlpModel::init(6, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let p = model.forward(&x).unwrap();
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let model = MlpModel::zeros(4);
        assert!(model.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let input_dim = 5;
        let mut points_checked = 0;
        for _ in 0..3 {
            let model = MlpModel::init(input_dim, rng.gen());
            let x: Vec<f64> = (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let label = if rng.gen::<bool>() { 1.0 } else { 0.0 };

            let mut grads = MlpGradients::zeros(input_dim);
            let mut hidden = vec![0.0; HIDDEN_WIDTH];
            backprop(&model, &x, label, &mut grads, &mut hidden).unwrap();

            let loss_of = |m: &MlpModel| {
                let mut g = MlpGradients::zeros(input_dim);
                let mut h = vec![0.0; HIDDEN_WIDTH];
                backprop(m, &x, label, &mut g, &mut h).unwrap()
            };

            let h = 1e-6;
            let mut check = |set: &dyn Fn(&mut MlpModel, f64), get: f64, analytic: f64| {
                let mut plus = model.clone();
                set(&mut plus, get + h);
                let mut minus = model.clone();
                set(&mut minus, get - h);
                let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                let scale = fd.abs().max(analytic.abs()).max(1e-6);
                assert!(
                    (fd - analytic).abs() / scale < 1e-4,
                    "fd {fd} vs analytic {analytic}"
                );
                points_checked += 1;
            };

            // Sample parameters from every block rather than sweeping all
            // 128 x input_dim of them.
            for k in (0..model.w1.len()).step_by(37) {
                check(
                    &move |m: &mut MlpModel, v| m.w1[k] = v,
                    model.w1[k],
                    grads.w1[k],
                );
            }
            for k in (0..HIDDEN_WIDTH).step_by(13) {
                check(
                    &move |m: &mut MlpModel, v| m.b1[k] = v,
                    model.b1[k],
                    grads.b1[k],
                );
                check(
                    &move |m: &mut MlpModel, v| m.w2[k] = v,
                    model.w2[k],
                    grads.w2[k],
                );
            }
            check(&move |m: &mut MlpModel, v| m.b2 = v, model.b2, grads.b2);
        }
        assert!(points_checked >= 100, "only {points_checked} points");
    }

    fn blob(center: (f64, f64), n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                vec![
                    center.0 + rng.gen_range(-0.3..0.3),
                    center.1 + rng.gen_range(-0.3..0.3),
                ]
            })
            .collect()
    }

    #[test]
    fn xor_arrangement_is_learnable() {
        for seed in [1u64, 2, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut features = Vec::new();
            let mut labels = Vec::new();
            for (center, label) in [
                ((0.0, 0.0), true),
                ((1.0, 1.0), true),
                ((0.0, 1.0), false),
                ((1.0, 0.0), false),
            ] {
                for f in blob(center, 50, &mut rng) {
                    features.push(f);
                    labels.push(label);
                }
            }
            let config = TrainConfig {
                epochs: 200,
                batch_size: 32,
                learning_rate: 0.5,
                seed,
            };
            let model = train_classifier(&features, &labels, &config).unwrap();
            let correct = features
                .iter()
                .zip(&labels)
                .filter(|(f, &l)| (model.forward(f).unwrap() > 0.5) == l)
                .count();
            let accuracy = correct as f64 / features.len() as f64;
            assert!(accuracy > 0.95, "seed {seed}: accuracy {accuracy}");
        }
    }

    #[test]
    fn separable_data_reaches_low_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut features = blob((0.0, 0.0), 60, &mut rng);
        let mut labels = vec![false; 60];
        features.extend(blob((3.0, 3.0), 60, &mut rng));
        labels.extend(vec![true; 60]);
        let config = TrainConfig {
            epochs: 100,
            batch_size: 16,
            learning_rate: 0.5,
            seed: 5,
        };
        let (_, stats) = fit_classifier(&features, &labels, &config).unwrap();
        assert!(
            *stats.epoch_losses.last().unwrap() < 0.1,
            "final loss {}",
            stats.epoch_losses.last().unwrap()
        );
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut features = blob((0.0, 0.0), 30, &mut rng);
        let mut labels = vec![false; 30];
        features.extend(blob((2.0, 2.0), 30, &mut rng));
        labels.extend(vec![true; 30]);
        let config = TrainConfig {
            epochs: 10,
            batch_size: 8,
            learning_rate: 0.3,
            seed: 7,
        };
        let a = train_classifier(&features, &labels, &config).unwrap();
        let b = train_classifier(&features, &labels, &config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let features = vec![vec![1.0], vec![2.0]];
        let labels = vec![true, true];
        assert!(matches!(
            train_classifier(&features, &labels, &TrainConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn auc_perfect_separation() {
        let scores = vec![(0.9, true), (0.8, true), (0.2, false), (0.1, false)];
        assert_eq!(auc(&scores).unwrap(), 1.0);
    }

    #[test]
    fn auc_three_of_four_pairs() {
        let scores = vec![(0.9, true), (0.4, true), (0.6, false), (0.1, false)];
        assert_eq!(auc(&scores).unwrap(), 0.75);
    }

    #[test]
    fn auc_all_ties_is_half() {
        let scores = vec![(0.5, true), (0.5, false), (0.5, true), (0.5, false)];
        assert_eq!(auc(&scores).unwrap(), 0.5);
    }

    #[test]
    fn auc_single_class_rejected() {
        assert!(matches!(
            auc(&[(0.5, true), (0.9, true)]),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn auc_label_flip_complements() {
        let scores = vec![
            (0.9, true),
            (0.7, false),
            (0.7, true),
            (0.3, false),
            (0.2, true),
        ];
        let flipped: Vec<(f64, bool)> = scores.iter().map(|&(s, l)| (s, !l)).collect();
        let a = auc(&scores).unwrap();
        let b = auc(&flipped).unwrap();
        assert_eq!(a + b, 1.0);
    }
}
