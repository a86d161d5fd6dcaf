//! Stage orchestration: ingest -> walks -> embeddings -> classifier ->
//! evaluation -> report, with per-stage content-hash caching, a manifest
//! of every artifact, and per-stage seeds so one stage can be perturbed
//! at a time.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use div2vec::diversity::{
    average_ils, coverage, entropy_diversity, rank_candidates, top_k, KMetrics, MetricReport,
    RecommendationContext,
};
use div2vec::edgeops::{edge_feature, EdgeOperator};
use div2vec::embed::{train_embeddings_detailed, EmbeddingMatrix};
use div2vec::error::Error as LibError;
use div2vec::features::ItemFeatureMatrix;
use div2vec::graph::{Graph, NodeId, Partition};
use div2vec::io;
use div2vec::predictor::{auc, train_classifier, MlpModel};
use div2vec::ratings::{
    binarize_ratings, filter_records, split_labeled, IdMap, Label, LabeledEdgeSet, Split,
};
use div2vec::walker::{frequency_profile, generate_corpus, validate_corpus, WalkCorpus};

use crate::config::{ExperimentConfig, MethodSection};
use crate::manifest::{sha256_hex, DirLock, Manifest};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    /// Bad configuration or usage; exits with code 1.
    #[error("config error: {0}")]
    Config(String),
    /// A stage failed; exits with code 2. Artifacts from earlier stages
    /// are left in place for inspection.
    #[error("stage '{stage}' failed: {message}")]
    Stage { stage: String, message: String },
}

impl PipelineError {
    pub fn stage(stage: &str, message: impl Into<String>) -> Self {
        PipelineError::Stage {
            stage: stage.to_string(),
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn stage_err(stage: &str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::stage(stage, e.to_string())
}

/// Everything the ingest stage produces, reloaded lazily on cache hits.
pub struct IngestArtifacts {
    pub id_map: IdMap,
    pub edges: LabeledEdgeSet,
    /// Graph induced by positive train edges.
    pub pos_graph: Graph,
    /// Graph induced by negative train edges.
    pub neg_graph: Graph,
    pub users: Vec<NodeId>,
    pub items: Vec<NodeId>,
}

/// One (method, operator) metrics row, persisted between the evaluate and
/// report stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: String,
    pub operator: String,
    pub auc: f64,
    pub at_k: Vec<MetricRowK>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRowK {
    pub k: usize,
    pub coverage: usize,
    pub entropy_diversity: f64,
    pub avg_ils: Option<f64>,
    pub ils_skipped_users: usize,
}

impl MetricRow {
    fn to_report(&self) -> MetricReport {
        MetricReport {
            method: self.method.clone(),
            operator: EdgeOperator::parse(&self.operator).expect("operator validated"),
            auc: self.auc,
            at_k: self
                .at_k
                .iter()
                .map(|m| KMetrics {
                    k: m.k,
                    coverage: m.coverage,
                    entropy_diversity: m.entropy_diversity,
                    avg_ils: m.avg_ils,
                })
                .collect(),
        }
    }
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub reports: Vec<MetricReport>,
    pub report_path: PathBuf,
}

pub struct Pipeline {
    config: ExperimentConfig,
    out_dir: PathBuf,
    force: bool,
    manifest: Manifest,
    ingest: Option<IngestArtifacts>,
    features: Option<ItemFeatureMatrix>,
    cached_ingest_key: Option<String>,
    cached_features_hash: Option<String>,
    _lock: DirLock,
}

fn slug(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last_underscore = false;
    for c in text.chars() {
        if c.is_ascii_alphanumeric() || c == '-' {
            out.push(c);
            last_underscore = false;
        } else if !last_underscore && !out.is_empty() {
            out.push('_');
            last_underscore = true;
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    out
}

fn section_toml<T: Serialize>(section: &T) -> String {
    toml::to_string(section).expect("config sections serialize")
}

impl Pipeline {
    pub fn new(config: ExperimentConfig, out_dir: &Path, force: bool) -> Result<Self> {
        config.validate()?;
        std::fs::create_dir_all(out_dir)
            .map_err(|e| stage_err("setup", format!("create {}: {e}", out_dir.display())))?;
        let lock = DirLock::acquire(out_dir)?;
        let config_toml = config.to_toml();
        let config_hash = sha256_hex(&[config_toml.as_bytes()]);
        let manifest = match Manifest::load(out_dir)? {
            Some(existing) if existing.config_hash == config_hash => existing,
            // A different config invalidates every cached stage.
            _ => Manifest {
                config_hash,
                seeds: BTreeMap::from([
                    ("split".to_string(), config.split.seed),
                    ("walks".to_string(), config.walks.seed),
                    ("skipgram".to_string(), config.skipgram.seed),
                    ("classifier".to_string(), config.classifier.seed),
                ]),
                stages: BTreeMap::new(),
            },
        };
        Ok(Pipeline {
            config,
            out_dir: out_dir.to_path_buf(),
            force,
            manifest,
            ingest: None,
            features: None,
            cached_ingest_key: None,
            cached_features_hash: None,
            _lock: lock,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    fn subdir(&self, parts: &[&str]) -> Result<PathBuf> {
        let mut dir = self.out_dir.clone();
        for part in parts {
            dir = dir.join(part);
        }
        std::fs::create_dir_all(&dir)
            .map_err(|e| stage_err("setup", format!("create {}: {e}", dir.display())))?;
        Ok(dir)
    }

    fn finish_stage(&mut self, stage: &str, key: String, outputs: Vec<PathBuf>) -> Result<()> {
        self.manifest.record_stage(stage, key, outputs, &self.out_dir);
        self.manifest.save(&self.out_dir)
    }

    // ------------------------------------------------------------ ingest

    fn ingest_key(&mut self) -> Result<String> {
        if let Some(key) = &self.cached_ingest_key {
            return Ok(key.clone());
        }
        let ratings = std::fs::read(&self.config.dataset.ratings).map_err(|e| {
            stage_err(
                "ingest",
                format!("read {}: {e}", self.config.dataset.ratings.display()),
            )
        })?;
        let key = sha256_hex(&[
            b"ingest",
            &ratings,
            section_toml(&self.config.binarize).as_bytes(),
            section_toml(&self.config.filter).as_bytes(),
            section_toml(&self.config.split).as_bytes(),
        ]);
        self.cached_ingest_key = Some(key.clone());
        Ok(key)
    }

    pub fn ensure_ingest(&mut self) -> Result<&IngestArtifacts> {
        if self.ingest.is_none() {
            let artifacts = self.run_ingest()?;
            self.ingest = Some(artifacts);
        }
        Ok(self.ingest.as_ref().expect("filled above"))
    }

    fn run_ingest(&mut self) -> Result<IngestArtifacts> {
        let stage = "ingest";
        let key = self.ingest_key()?;
        let id_map_path = self.out_dir.join("id_map.tsv");
        let edges_path = self.out_dir.join("labeled_edges.tsv");
        let graphs_dir = self.subdir(&["graphs"])?;
        let pos_path = graphs_dir.join("positive.edges");
        let neg_path = graphs_dir.join("negative.edges");

        if !self.force && self.manifest.stage_is_current(&self.out_dir, stage, &key) {
            let id_map = io::read_id_map(&id_map_path).map_err(|e| stage_err(stage, e))?;
            let edges = io::read_labeled_edges(&edges_path).map_err(|e| stage_err(stage, e))?;
            return build_ingest_artifacts(id_map, edges).map_err(|e| stage_err(stage, e));
        }

        let records =
            io::read_ratings(&self.config.dataset.ratings).map_err(|e| stage_err(stage, e))?;
        let interactions = binarize_ratings(&records, self.config.binarize.thresholds())
            .map_err(|e| stage_err(stage, e))?;
        let kept = filter_records(
            interactions,
            |i| &i.user,
            |i| &i.item,
            self.config.filter.bounds(),
        )
        .map_err(|e| stage_err(stage, e))?;

        let mut id_map = IdMap::new();
        let mut pos_pairs = Vec::new();
        let mut neg_pairs = Vec::new();
        let mut seen_pairs = HashSet::new();
        for interaction in &kept {
            let u = id_map.intern(&IdMap::user_key(&interaction.user));
            let v = id_map.intern(&IdMap::item_key(&interaction.item));
            if !seen_pairs.insert((u, v)) {
                // The same (user, item) can only carry one rating.
                return Err(stage_err(
                    stage,
                    format!(
                        "duplicate rating for user {} item {}",
                        interaction.user, interaction.item
                    ),
                ));
            }
            match interaction.label {
                Label::Positive => pos_pairs.push((u, v)),
                Label::Negative => neg_pairs.push((u, v)),
            }
        }
        let edges = split_labeled(
            &pos_pairs,
            &neg_pairs,
            self.config.split.test_fraction,
            self.config.split.seed,
        )
        .map_err(|e| stage_err(stage, e))?;

        let artifacts = build_ingest_artifacts(id_map, edges).map_err(|e| stage_err(stage, e))?;
        io::write_id_map(&id_map_path, &artifacts.id_map).map_err(|e| stage_err(stage, e))?;
        io::write_labeled_edges(&edges_path, &artifacts.edges).map_err(|e| stage_err(stage, e))?;
        io::write_edge_list(&pos_path, &artifacts.pos_graph).map_err(|e| stage_err(stage, e))?;
        io::write_edge_list(&neg_path, &artifacts.neg_graph).map_err(|e| stage_err(stage, e))?;

        self.finish_stage(
            stage,
            key,
            vec![id_map_path, edges_path, pos_path, neg_path],
        )?;
        Ok(artifacts)
    }

    // ------------------------------------------------------------- walks

    fn walk_key(&mut self, method: &MethodSection) -> Result<String> {
        let ingest_key = self.ingest_key()?;
        Ok(sha256_hex(&[
            b"walk",
            ingest_key.as_bytes(),
            method.strategy.as_bytes(),
            section_toml(&self.config.walks).as_bytes(),
        ]))
    }

    pub fn ensure_walks(&mut self, method: &MethodSection) -> Result<(WalkCorpus, WalkCorpus)> {
        let stage = format!("walk:{}", method.name);
        let key = self.walk_key(method)?;
        let dir = self.subdir(&["corpora", &method.name])?;
        let pos_path = dir.join("positive.walks");
        let neg_path = dir.join("negative.walks");
        self.ensure_ingest()?;
        let ingest = self.ingest.as_ref().unwrap();

        if !self.force && self.manifest.stage_is_current(&self.out_dir, &stage, &key) {
            let pos = io::read_corpus(&pos_path).map_err(|e| stage_err(&stage, e))?;
            let neg = io::read_corpus(&neg_path).map_err(|e| stage_err(&stage, e))?;
            validate_corpus(&pos, &ingest.pos_graph).map_err(|e| stage_err(&stage, e))?;
            validate_corpus(&neg, &ingest.neg_graph).map_err(|e| stage_err(&stage, e))?;
            return Ok((pos, neg));
        }

        let strategy = self.config.method_strategy(method);
        let walks = &self.config.walks;
        let pos = generate_corpus(
            &ingest.pos_graph,
            strategy,
            walks.walk_length,
            walks.walks_per_node,
            walks.seed,
        )
        .map_err(|e| stage_err(&stage, e))?;
        let neg = generate_corpus(
            &ingest.neg_graph,
            strategy,
            walks.walk_length,
            walks.walks_per_node,
            walks.seed.wrapping_add(1),
        )
        .map_err(|e| stage_err(&stage, e))?;
        io::write_corpus(&pos_path, &pos).map_err(|e| stage_err(&stage, e))?;
        io::write_corpus(&neg_path, &neg).map_err(|e| stage_err(&stage, e))?;
        self.finish_stage(&stage, key, vec![pos_path, neg_path])?;
        Ok((pos, neg))
    }

    // -------------------------------------------------------- embeddings

    fn embed_key(&mut self, method: &MethodSection) -> Result<String> {
        let walk_key = self.walk_key(method)?;
        Ok(sha256_hex(&[
            b"embed",
            walk_key.as_bytes(),
            section_toml(&self.config.skipgram).as_bytes(),
        ]))
    }

    fn embedding_paths(&self, method: &MethodSection) -> (PathBuf, PathBuf, bool) {
        let binary = self.config.skipgram.embedding_format == "binary";
        let ext = if binary { "embb" } else { "emb" };
        let dir = self.out_dir.join("embeddings").join(&method.name);
        (
            dir.join(format!("positive.{ext}")),
            dir.join(format!("negative.{ext}")),
            binary,
        )
    }

    pub fn ensure_embeddings(
        &mut self,
        method: &MethodSection,
    ) -> Result<(EmbeddingMatrix, EmbeddingMatrix)> {
        let stage = format!("embed:{}", method.name);
        let key = self.embed_key(method)?;
        self.subdir(&["embeddings", &method.name])?;
        let (pos_path, neg_path, binary) = self.embedding_paths(method);

        let read = |path: &Path| {
            if binary {
                io::read_embedding_binary(path)
            } else {
                io::read_embedding_text(path)
            }
        };
        if !self.force && self.manifest.stage_is_current(&self.out_dir, &stage, &key) {
            let pos = read(&pos_path).map_err(|e| stage_err(&stage, e))?;
            let neg = read(&neg_path).map_err(|e| stage_err(&stage, e))?;
            return Ok((pos, neg));
        }

        let (pos_corpus, neg_corpus) = self.ensure_walks(method)?;
        let sg = self.config.skipgram.to_config();
        let train = |corpus: &WalkCorpus, polarity: &str| {
            let (matrix, stats) =
                train_embeddings_detailed(corpus, &sg).map_err(|e| stage_err(&stage, e))?;
            if stats.loss_increased() {
                eprintln!(
                    "warning: {stage} ({polarity}): mean epoch loss increased ({:?})",
                    stats.epoch_losses
                );
            }
            Ok::<EmbeddingMatrix, PipelineError>(matrix)
        };
        let pos = train(&pos_corpus, "positive")?;
        let neg = train(&neg_corpus, "negative")?;
        let write = |path: &Path, matrix: &EmbeddingMatrix| {
            if binary {
                io::write_embedding_binary(path, matrix)
            } else {
                io::write_embedding_text(path, matrix)
            }
        };
        write(&pos_path, &pos).map_err(|e| stage_err(&stage, e))?;
        write(&neg_path, &neg).map_err(|e| stage_err(&stage, e))?;
        self.finish_stage(&stage, key, vec![pos_path, neg_path])?;
        Ok((pos, neg))
    }

    // --------------------------------------------------------- features

    fn ensure_item_features(&mut self) -> Result<Option<&ItemFeatureMatrix>> {
        if self.features.is_some() {
            return Ok(self.features.as_ref());
        }
        let Some(path) = self.config.dataset.features.clone() else {
            return Ok(None);
        };
        let stage = "features";
        self.ensure_ingest()?;
        let triples = io::read_item_features(&path).map_err(|e| stage_err(stage, e))?;
        let id_map = &self.ingest.as_ref().unwrap().id_map;
        let mut mapped: Vec<(NodeId, String, f64)> = Vec::with_capacity(triples.len());
        let mut unknown_items: HashSet<String> = HashSet::new();
        for (item, tag, relevance) in triples {
            match id_map.get(&IdMap::item_key(&item)) {
                Some(node) => mapped.push((node, tag, relevance)),
                None => {
                    unknown_items.insert(item);
                }
            }
        }
        if !unknown_items.is_empty() {
            eprintln!(
                "note: features: {} item(s) in {} are not in the filtered graph; ignored",
                unknown_items.len(),
                path.display()
            );
        }
        let matrix = ItemFeatureMatrix::from_triples(&mapped).map_err(|e| stage_err(stage, e))?;
        self.features = Some(matrix);
        Ok(self.features.as_ref())
    }

    // -------------------------------------------------------------- fit

    fn fit_key(&mut self, method: &MethodSection, op: EdgeOperator) -> Result<String> {
        let embed_key = self.embed_key(method)?;
        Ok(sha256_hex(&[
            b"fit",
            embed_key.as_bytes(),
            op.name().as_bytes(),
            section_toml(&self.config.classifier).as_bytes(),
        ]))
    }

    fn model_path(&self, method: &MethodSection, op: EdgeOperator) -> PathBuf {
        self.out_dir
            .join("models")
            .join(&method.name)
            .join(format!("{}.mlp", op.name()))
    }

    /// Trains the classifier for one (method, operator) pair, reusing
    /// already-loaded embeddings when the caller has them.
    fn fit_with(
        &mut self,
        method: &MethodSection,
        op: EdgeOperator,
        matrices: &(EmbeddingMatrix, EmbeddingMatrix),
    ) -> Result<MlpModel> {
        let stage = format!("fit:{}:{}", method.name, op.name());
        let key = self.fit_key(method, op)?;
        self.subdir(&["models", &method.name])?;
        let model_path = self.model_path(method, op);
        if !self.force && self.manifest.stage_is_current(&self.out_dir, &stage, &key) {
            return io::read_model(&model_path).map_err(|e| stage_err(&stage, e));
        }

        let ingest = self.ingest.as_ref().unwrap();
        let (pos_matrix, neg_matrix) = matrices;
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for edge in ingest.edges.edges.iter().filter(|e| e.split == Split::Train) {
            let feature = edge_feature(op, edge.user, edge.item, pos_matrix, neg_matrix)
                .map_err(|e| stage_err(&stage, e))?;
            features.push(feature.vector);
            labels.push(edge.label == Label::Positive);
        }
        let model = train_classifier(&features, &labels, &self.config.classifier.to_config())
            .map_err(|e| stage_err(&stage, e))?;
        io::write_model(&model_path, &model).map_err(|e| stage_err(&stage, e))?;
        self.finish_stage(&stage, key, vec![model_path])?;
        Ok(model)
    }

    // --------------------------------------------------------- evaluate

    fn features_hash(&mut self) -> Result<String> {
        if let Some(hash) = &self.cached_features_hash {
            return Ok(hash.clone());
        }
        let hash = match &self.config.dataset.features {
            Some(path) => {
                let bytes = std::fs::read(path).map_err(|e| {
                    stage_err("evaluate", format!("read {}: {e}", path.display()))
                })?;
                sha256_hex(&[&bytes])
            }
            None => String::from("none"),
        };
        self.cached_features_hash = Some(hash.clone());
        Ok(hash)
    }

    fn evaluate_key(&mut self, method: &MethodSection, op: EdgeOperator) -> Result<String> {
        let fit_key = self.fit_key(method, op)?;
        let features_hash = self.features_hash()?;
        Ok(sha256_hex(&[
            b"evaluate",
            fit_key.as_bytes(),
            features_hash.as_bytes(),
            section_toml(&self.config.evaluate).as_bytes(),
        ]))
    }

    fn metrics_path(&self, method: &MethodSection, op: EdgeOperator) -> PathBuf {
        self.out_dir
            .join("metrics")
            .join(format!("{}_{}.json", method.name, op.name()))
    }

    fn evaluate_with(
        &mut self,
        method: &MethodSection,
        op: EdgeOperator,
        matrices: &(EmbeddingMatrix, EmbeddingMatrix),
        model: &MlpModel,
    ) -> Result<MetricRow> {
        let stage = format!("evaluate:{}:{}", method.name, op.name());
        let key = self.evaluate_key(method, op)?;
        self.subdir(&["metrics"])?;
        let metrics_path = self.metrics_path(method, op);
        if !self.force && self.manifest.stage_is_current(&self.out_dir, &stage, &key) {
            let text = std::fs::read_to_string(&metrics_path)
                .map_err(|e| stage_err(&stage, format!("read {}: {e}", metrics_path.display())))?;
            return serde_json::from_str(&text)
                .map_err(|e| stage_err(&stage, format!("parse {}: {e}", metrics_path.display())));
        }

        self.ensure_item_features()?;
        let ingest = self.ingest.as_ref().unwrap();
        let (pos_matrix, neg_matrix) = matrices;

        // AUC over the held-out test edges.
        let mut scored_edges = Vec::new();
        for edge in ingest.edges.edges.iter().filter(|e| e.split == Split::Test) {
            let feature = edge_feature(op, edge.user, edge.item, pos_matrix, neg_matrix)
                .map_err(|e| stage_err(&stage, e))?;
            let score = model
                .forward(&feature.vector)
                .map_err(|e| stage_err(&stage, e))?;
            scored_edges.push((edge.user, edge.item, edge.label, score));
        }
        let auc_value = auc(&scored_edges
            .iter()
            .map(|&(_, _, label, score)| (score, label == Label::Positive))
            .collect::<Vec<_>>())
        .map_err(|e| stage_err(&stage, e))?;

        let scores_dir = self.subdir(&["scores", &method.name])?;
        let scores_path = scores_dir.join(format!("{}.csv", op.name()));
        io::write_scores(&scores_path, &scored_edges).map_err(|e| stage_err(&stage, e))?;

        // Top-k lists for every user in the test split.
        let mut test_users: Vec<NodeId> = ingest
            .edges
            .edges
            .iter()
            .filter(|e| e.split == Split::Test)
            .map(|e| e.user)
            .collect();
        test_users.sort_unstable();
        test_users.dedup();

        let mut exclusions: HashMap<NodeId, HashSet<NodeId>> = HashMap::new();
        for edge in ingest
            .edges
            .iter_where(Label::Positive, Split::Train)
        {
            exclusions.entry(edge.user).or_default().insert(edge.item);
        }

        let ctx = RecommendationContext {
            model,
            operator: op,
            pos_matrix,
            neg_matrix,
            items: &ingest.items,
            exclusions: &exclusions,
        };
        let ranked = rank_candidates(&ctx, &test_users).map_err(|e| stage_err(&stage, e))?;

        let recs_dir = self.subdir(&["recs", &method.name, op.name()])?;
        let mut outputs = vec![scores_path, metrics_path.clone()];
        let mut at_k = Vec::new();
        for &k in &self.config.evaluate.ks {
            let table = top_k(&ranked, k);
            let rec_path = recs_dir.join(format!("k{k}.csv"));
            io::write_recommendations(&rec_path, &table).map_err(|e| stage_err(&stage, e))?;
            outputs.push(rec_path);

            let co = coverage(&table);
            let ed = entropy_diversity(&table, table.lists.len(), k)
                .map_err(|e| stage_err(&stage, e))?;
            let (ils, skipped) = if k > 1 {
                match self.features.as_ref() {
                    Some(features) => {
                        let avg = average_ils(&table, features).map_err(|e| stage_err(&stage, e))?;
                        (Some(avg.value), avg.skipped_users)
                    }
                    None => (None, 0),
                }
            } else {
                (None, 0)
            };
            at_k.push(MetricRowK {
                k,
                coverage: co,
                entropy_diversity: ed,
                avg_ils: ils,
                ils_skipped_users: skipped,
            });
        }

        let row = MetricRow {
            method: method.name.clone(),
            operator: op.name().to_string(),
            auc: auc_value,
            at_k,
        };
        let json = serde_json::to_string_pretty(&row).expect("row serializes");
        std::fs::write(&metrics_path, json)
            .map_err(|e| stage_err(&stage, format!("write {}: {e}", metrics_path.display())))?;
        self.finish_stage(&stage, key, outputs)?;
        Ok(row)
    }

    /// Runs walk -> embed -> fit -> evaluate for one method across all
    /// configured operators. Embeddings are loaded once per method.
    pub fn ensure_method(&mut self, method: &MethodSection) -> Result<Vec<MetricRow>> {
        // When both fit and evaluate are cached for every operator, the
        // embeddings are not needed at all.
        let operators = self.config.operators();
        let mut all_cached = true;
        for &op in &operators {
            let fit_key = self.fit_key(method, op)?;
            let eval_key = self.evaluate_key(method, op)?;
            let fit_stage = format!("fit:{}:{}", method.name, op.name());
            let eval_stage = format!("evaluate:{}:{}", method.name, op.name());
            if self.force
                || !self.manifest.stage_is_current(&self.out_dir, &fit_stage, &fit_key)
                || !self
                    .manifest
                    .stage_is_current(&self.out_dir, &eval_stage, &eval_key)
            {
                all_cached = false;
                break;
            }
        }

        let matrices = if all_cached {
            None
        } else {
            Some(self.ensure_embeddings(method)?)
        };

        let mut rows = Vec::new();
        for &op in &operators {
            let row = match &matrices {
                Some(matrices) => {
                    let model = self.fit_with(method, op, matrices)?;
                    self.evaluate_with(method, op, matrices, &model)?
                }
                None => {
                    // Cache hit: read the stored row.
                    let stage = format!("evaluate:{}:{}", method.name, op.name());
                    let path = self.metrics_path(method, op);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| stage_err(&stage, format!("read {}: {e}", path.display())))?;
                    serde_json::from_str(&text)
                        .map_err(|e| stage_err(&stage, format!("parse {}: {e}", path.display())))?
                }
            };
            rows.push(row);
        }
        Ok(rows)
    }

    // ------------------------------------------------------------- edges

    /// Writes the `u,v,label,f1..fD` feature dump for every labeled edge
    /// under each (method, operator).
    pub fn ensure_edge_dumps(&mut self) -> Result<Vec<PathBuf>> {
        let methods = self.config.methods.clone();
        let operators = self.config.operators();
        let mut written = Vec::new();
        for method in &methods {
            let stage = format!("edges:{}", method.name);
            let key = {
                let embed_key = self.embed_key(method)?;
                sha256_hex(&[b"edges", embed_key.as_bytes()])
            };
            let dir = self.subdir(&["features", &method.name])?;
            let paths: Vec<PathBuf> = operators
                .iter()
                .map(|op| dir.join(format!("{}.csv", op.name())))
                .collect();
            if !self.force && self.manifest.stage_is_current(&self.out_dir, &stage, &key) {
                written.extend(paths);
                continue;
            }
            let matrices = self.ensure_embeddings(method)?;
            let ingest = self.ingest.as_ref().unwrap();
            for (&op, path) in operators.iter().zip(&paths) {
                let mut rows = Vec::with_capacity(ingest.edges.edges.len());
                for edge in &ingest.edges.edges {
                    let feature = edge_feature(op, edge.user, edge.item, &matrices.0, &matrices.1)
                        .map_err(|e| stage_err(&stage, e))?;
                    rows.push((edge.user, edge.item, edge.label, feature));
                }
                io::write_edge_features(path, &rows).map_err(|e| stage_err(&stage, e))?;
            }
            self.finish_stage(&stage, key, paths.clone())?;
            written.extend(paths);
        }
        Ok(written)
    }

    // ------------------------------------------------------------ report

    pub fn ensure_report(&mut self) -> Result<PipelineOutcome> {
        let methods = self.config.methods.clone();
        let mut rows = Vec::new();
        for method in &methods {
            rows.extend(self.ensure_method(method)?);
        }

        let stage = "report";
        let mut key_parts: Vec<String> = vec!["report".to_string()];
        for method in &methods {
            for &op in &self.config.operators() {
                key_parts.push(self.evaluate_key(method, op)?);
            }
        }
        let key_bytes: Vec<&[u8]> = key_parts.iter().map(|s| s.as_bytes()).collect();
        let key = sha256_hex(&key_bytes);

        let report_path = self.out_dir.join("report.csv");
        let reports: Vec<MetricReport> = rows.iter().map(MetricRow::to_report).collect();
        if self.force || !self.manifest.stage_is_current(&self.out_dir, stage, &key) {
            let mut text = io::render_metric_report(&reports, &self.config.evaluate.ks);
            for row in &rows {
                for at_k in &row.at_k {
                    if at_k.ils_skipped_users > 0 {
                        text.push_str(&format!(
                            "# ils_footnote method={} operator={} k={} users_skipped={}\n",
                            row.method, row.operator, at_k.k, at_k.ils_skipped_users
                        ));
                    }
                }
            }
            std::fs::write(&report_path, text)
                .map_err(|e| stage_err(stage, format!("write {}: {e}", report_path.display())))?;
            self.finish_stage(stage, key, vec![report_path.clone()])?;
        }
        Ok(PipelineOutcome {
            reports,
            report_path,
        })
    }

    // ----------------------------------------------------------- figure2

    /// One frequency-profile CSV per configured strategy, over the
    /// positive train graph.
    pub fn ensure_figure2(&mut self) -> Result<Vec<(String, f64, PathBuf)>> {
        self.ensure_ingest()?;
        let strategies = self.config.figure2.strategies.clone();
        let walks = self.config.walks.clone();
        let mut results = Vec::new();
        for strategy_text in &strategies {
            let stage = format!("figure2:{}", slug(strategy_text));
            let key = {
                let ingest_key = self.ingest_key()?;
                sha256_hex(&[
                    b"figure2",
                    ingest_key.as_bytes(),
                    strategy_text.as_bytes(),
                    section_toml(&walks).as_bytes(),
                ])
            };
            let dir = self.subdir(&["figure2"])?;
            let path = dir.join(format!("{}.csv", slug(strategy_text)));
            let ingest = self.ingest.as_ref().unwrap();
            if !self.force && self.manifest.stage_is_current(&self.out_dir, &stage, &key) {
                let spearman = read_profile_spearman(&path)
                    .map_err(|e| stage_err(&stage, e))?;
                results.push((strategy_text.clone(), spearman, path));
                continue;
            }
            let strategy = strategy_text.parse().expect("validated at config load");
            let corpus = generate_corpus(
                &ingest.pos_graph,
                strategy,
                walks.walk_length,
                walks.walks_per_node,
                walks.seed,
            )
            .map_err(|e| stage_err(&stage, e))?;
            let profile = frequency_profile(&corpus, &ingest.pos_graph);
            io::write_frequency_profile(&path, &profile).map_err(|e| stage_err(&stage, e))?;
            self.finish_stage(&stage, key, vec![path.clone()])?;
            results.push((strategy_text.clone(), profile.spearman, path));
        }
        Ok(results)
    }
}

fn read_profile_spearman(path: &Path) -> std::result::Result<f64, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("read {}: {e}", path.display()))?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# spearman_degree_occurrences =") {
            return rest
                .trim()
                .parse()
                .map_err(|e| format!("bad spearman value in {}: {e}", path.display()));
        }
    }
    Err(format!("no spearman summary line in {}", path.display()))
}

fn build_ingest_artifacts(
    id_map: IdMap,
    edges: LabeledEdgeSet,
) -> std::result::Result<IngestArtifacts, LibError> {
    let node_count = id_map.len();
    let mut partition = vec![Partition::User; node_count];
    let mut users = Vec::new();
    let mut items = Vec::new();
    for (external, id) in id_map.entries() {
        if external.starts_with("i:") {
            partition[id as usize] = Partition::Item;
            items.push(id);
        } else {
            users.push(id);
        }
    }
    users.sort_unstable();
    items.sort_unstable();

    let collect = |label: Label| -> Vec<(NodeId, NodeId)> {
        edges
            .iter_where(label, Split::Train)
            .map(|e| (e.user, e.item))
            .collect()
    };
    let pos_graph = Graph::from_edges(node_count, &collect(Label::Positive), Some(partition.clone()))?;
    let neg_graph = Graph::from_edges(node_count, &collect(Label::Negative), Some(partition))?;
    Ok(IngestArtifacts {
        id_map,
        edges,
        pos_graph,
        neg_graph,
        users,
        items,
    })
}

/// The whole grid: every stage for every (method, operator), ending in
/// `report.csv`.
pub fn run_pipeline(
    config: &ExperimentConfig,
    out_dir: &Path,
    force: bool,
) -> Result<PipelineOutcome> {
    let mut pipeline = Pipeline::new(config.clone(), out_dir, force)?;
    let outcome = pipeline.ensure_report()?;
    pipeline.manifest.verify_completeness(out_dir)?;
    Ok(outcome)
}

/// Frequency-profile CSVs per strategy (the degree-versus-frequency
/// analysis data).
pub fn run_figure2(
    config: &ExperimentConfig,
    out_dir: &Path,
    force: bool,
) -> Result<Vec<(String, f64, PathBuf)>> {
    let mut pipeline = Pipeline::new(config.clone(), out_dir, force)?;
    pipeline.ensure_figure2()
}
