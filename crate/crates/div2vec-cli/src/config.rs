//! Experiment configuration: one TOML file drives the whole pipeline.
//! Every hyperparameter the underlying methods leave open has an explicit
//! default here, and the parsed config is validated against each module's
//! preconditions before any stage runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use div2vec::embed::SkipGramConfig;
use div2vec::predictor::TrainConfig;
use div2vec::ratings::{BinarizeThresholds, FilterBounds};
use div2vec::walker::WalkStrategy;

use crate::pipeline::PipelineError;

type Result<T> = std::result::Result<T, PipelineError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub binarize: BinarizeSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub walks: WalksSection,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodSection>,
    #[serde(default)]
    pub skipgram: SkipgramSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub evaluate: EvaluateSection,
    #[serde(default)]
    pub figure2: Figure2Section,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub ratings: PathBuf,
    /// Tag-relevance triples for intra-list similarity; without it the
    /// ILS columns are skipped.
    #[serde(default)]
    pub features: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinarizeSection {
    pub positive_min: f64,
    pub negative_max: f64,
    /// Strict `>`/`<` reading of the thresholds instead of inclusive.
    pub exclusive: bool,
}

impl Default for BinarizeSection {
    fn default() -> Self {
        let t = BinarizeThresholds::default();
        BinarizeSection {
            positive_min: t.positive_min,
            negative_max: t.negative_max,
            exclusive: t.exclusive,
        }
    }
}

impl BinarizeSection {
    pub fn thresholds(&self) -> BinarizeThresholds {
        BinarizeThresholds {
            positive_min: self.positive_min,
            negative_max: self.negative_max,
            exclusive: self.exclusive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub min_item_records: usize,
    pub min_user_records: usize,
    pub max_user_records: usize,
    /// One sweep instead of iterating removals to a fixed point.
    pub single_pass: bool,
}

impl Default for FilterSection {
    fn default() -> Self {
        let b = FilterBounds::default();
        FilterSection {
            min_item_records: b.min_item_records,
            min_user_records: b.min_user_records,
            max_user_records: b.max_user_records,
            single_pass: b.single_pass,
        }
    }
}

impl FilterSection {
    pub fn bounds(&self) -> FilterBounds {
        FilterBounds {
            min_item_records: self.min_item_records,
            min_user_records: self.min_user_records,
            max_user_records: self.max_user_records,
            single_pass: self.single_pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSection {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            test_fraction: 0.2,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalksSection {
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub seed: u64,
}

impl Default for WalksSection {
    fn default() -> Self {
        WalksSection {
            walks_per_node: 10,
            walk_length: 80,
            seed: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSection {
    /// Directory-safe name: letters, digits, `_`, `-`.
    pub name: String,
    /// `uniform`, `second_order(p,q)` or
    /// `degree_biased(inverse|inverse_sqrt|constant)`.
    pub strategy: String,
}

fn default_methods() -> Vec<MethodSection> {
    vec![
        MethodSection {
            name: "deepwalk".into(),
            strategy: "uniform".into(),
        },
        MethodSection {
            name: "n2v_p1_q2".into(),
            strategy: "second_order(1,2)".into(),
        },
        MethodSection {
            name: "n2v_p2_q1".into(),
            strategy: "second_order(2,1)".into(),
        },
        MethodSection {
            name: "div2vec".into(),
            strategy: "degree_biased(inverse)".into(),
        },
        MethodSection {
            name: "rooted_div2vec".into(),
            strategy: "degree_biased(inverse_sqrt)".into(),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SkipgramSection {
    pub dimension: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    pub min_learning_rate: f64,
    pub unigram_power: f64,
    pub seed: u64,
    /// Lock-free sharded training; faster but not bit-reproducible.
    pub parallel: bool,
    /// `text` or `binary` embedding artifacts.
    pub embedding_format: String,
}

impl Default for SkipgramSection {
    fn default() -> Self {
        let c = SkipGramConfig::default();
        SkipgramSection {
            dimension: c.dimension,
            window: c.window,
            negatives: c.negatives,
            epochs: c.epochs,
            initial_learning_rate: c.initial_learning_rate,
            min_learning_rate: c.min_learning_rate,
            unigram_power: c.unigram_power,
            seed: 3,
            parallel: false,
            embedding_format: "text".into(),
        }
    }
}

impl SkipgramSection {
    pub fn to_config(&self) -> SkipGramConfig {
        SkipGramConfig {
            dimension: self.dimension,
            window: self.window,
            negatives: self.negatives,
            epochs: self.epochs,
            initial_learning_rate: self.initial_learning_rate,
            min_learning_rate: self.min_learning_rate,
            unigram_power: self.unigram_power,
            seed: self.seed,
            parallel: self.parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection {
            epochs: 30,
            batch_size: 256,
            learning_rate: 0.5,
            seed: 4,
        }
    }
}

impl ClassifierSection {
    pub fn to_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    pub operators: Vec<String>,
    pub ks: Vec<usize>,
    /// Also dump `u,v,label,f1..fD` edge-feature CSVs during `edges`
    /// runs; these grow large (edges x 2 x dimension values).
    pub dump_edge_features: bool,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            operators: vec![
                "weighted_l1".into(),
                "weighted_l2".into(),
                "hadamard".into(),
                "average".into(),
            ],
            ks: vec![1, 10, 50],
            dump_edge_features: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Figure2Section {
    pub strategies: Vec<String>,
}

impl Default for Figure2Section {
    fn default() -> Self {
        Figure2Section {
            strategies: vec![
                "uniform".into(),
                "degree_biased(inverse)".into(),
                "degree_biased(inverse_sqrt)".into(),
            ],
        }
    }
}

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| config_err(format!("bad config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Replaces every per-stage seed with one derived from `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.split.seed = seed.wrapping_add(1);
        self.walks.seed = seed.wrapping_add(2);
        self.skipgram.seed = seed.wrapping_add(3);
        self.classifier.seed = seed.wrapping_add(4);
    }

    pub fn validate(&self) -> Result<()> {
        let fraction = self.split.test_fraction;
        if !(fraction.is_finite() && fraction > 0.0 && fraction < 1.0) {
            return Err(config_err("split.test_fraction must be in (0, 1)"));
        }
        self.binarize
            .thresholds()
            .validate_ordering()
            .map_err(config_err)?;
        if self.walks.walk_length < 2 || self.walks.walks_per_node < 1 {
            return Err(config_err(
                "walks.walk_length must be >= 2 and walks.walks_per_node >= 1",
            ));
        }
        if self.methods.is_empty() {
            return Err(config_err("at least one method is required"));
        }
        let mut names = std::collections::HashSet::new();
        for method in &self.methods {
            if method.name.is_empty()
                || !method
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(config_err(format!(
                    "method name '{}' must be non-empty and use only letters, digits, '_' or '-'",
                    method.name
                )));
            }
            if !names.insert(&method.name) {
                return Err(config_err(format!("duplicate method name '{}'", method.name)));
            }
            method
                .strategy
                .parse::<WalkStrategy>()
                .map_err(|e| config_err(format!("method '{}': {e}", method.name)))?;
        }
        self.skipgram
            .to_config()
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        if !["text", "binary"].contains(&self.skipgram.embedding_format.as_str()) {
            return Err(config_err(
                "skipgram.embedding_format must be `text` or `binary`",
            ));
        }
        self.classifier
            .to_config()
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        if self.evaluate.operators.is_empty() {
            return Err(config_err("evaluate.operators must not be empty"));
        }
        for op in &self.evaluate.operators {
            div2vec::edgeops::EdgeOperator::parse(op)
                .map_err(|e| config_err(e.to_string()))?;
        }
        if self.evaluate.ks.is_empty() || self.evaluate.ks.contains(&0) {
            return Err(config_err("evaluate.ks must be non-empty positive integers"));
        }
        let mut ks = self.evaluate.ks.clone();
        ks.dedup();
        if ks.len() != self.evaluate.ks.len() || !ks.windows(2).all(|w| w[0] < w[1]) {
            return Err(config_err("evaluate.ks must be strictly increasing"));
        }
        if self.filter.min_item_records == 0
            || self.filter.min_user_records == 0
            || self.filter.max_user_records < self.filter.min_user_records
        {
            return Err(config_err("filter bounds must be positive with min <= max"));
        }
        for strategy in &self.figure2.strategies {
            strategy
                .parse::<WalkStrategy>()
                .map_err(|e| config_err(format!("figure2: {e}")))?;
        }
        Ok(())
    }

    pub fn method_strategy(&self, method: &MethodSection) -> WalkStrategy {
        method
            .strategy
            .parse()
            .expect("validated at config load")
    }

    pub fn operators(&self) -> Vec<div2vec::edgeops::EdgeOperator> {
        self.evaluate
            .operators
            .iter()
            .map(|name| div2vec::edgeops::EdgeOperator::parse(name).expect("validated"))
            .collect()
    }
}

trait ValidateThresholds {
    fn validate_ordering(&self) -> std::result::Result<(), String>;
}

impl ValidateThresholds for BinarizeThresholds {
    fn validate_ordering(&self) -> std::result::Result<(), String> {
        if self.positive_min <= self.negative_max {
            return Err(format!(
                "binarize.positive_min {} must exceed binarize.negative_max {}",
                self.positive_min, self.negative_max
            ));
        }
        Ok(())
    }
}
