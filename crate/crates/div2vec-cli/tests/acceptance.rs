//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS/FAIL line (visible with `--nocapture`). The heavy end-to-end
//! criteria share a mutex so they never fight over the single rayon
//! pool; light criteria take it too for clean sequential output.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use div2vec::diversity::{
    coverage, entropy_diversity, intra_list_similarity, RecommendationTable,
};
use div2vec::graph::{Graph, NodeId};
use div2vec::predictor::auc;
use div2vec::synth::{
    preferential_attachment_graph, synthetic_ratings, synthetic_tag_genome,
    SyntheticRatingsConfig,
};
use div2vec::walker::{
    frequency_profile, generate_corpus, transition_distribution, DegreeWeight, WalkStrategy,
};
use div2vec_cli::config::ExperimentConfig;
use div2vec_cli::pipeline::run_pipeline;

static GATE: Mutex<()> = Mutex::new(());

fn criterion(number: usize, name: &str, run: impl FnOnce() -> Result<(), String>) {
    let _guard = GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    match run() {
        Ok(()) => println!("acceptance {number} ({name}): PASS"),
        Err(message) => {
            println!("acceptance {number} ({name}): FAIL — {message}");
            panic!("criterion {number} ({name}) failed: {message}");
        }
    }
}

fn check(ok: bool, message: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message.into())
    }
}

// ---------------------------------------------------------------------
// 1. Entropy-diversity worked example, exact to 1e-12.

#[test]
fn acceptance_1_entropy_diversity_worked_example() {
    criterion(1, "entropy-diversity worked example", || {
        let table = |lists: Vec<Vec<NodeId>>| RecommendationTable {
            k: 3,
            lists: lists
                .into_iter()
                .enumerate()
                .map(|(u, items)| {
                    (u as NodeId, items.into_iter().map(|i| (i, 0.0)).collect())
                })
                .collect(),
            empty_users: Vec::new(),
        };
        // Model 1: every user gets {1, 2, 3}; model 2: disjoint triples.
        let shared = table(vec![vec![1, 2, 3], vec![1, 2, 3], vec![1, 2, 3]]);
        let disjoint = table(vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]);
        let ed1 = entropy_diversity(&shared, 3, 3).map_err(|e| e.to_string())?;
        let ed2 = entropy_diversity(&disjoint, 3, 3).map_err(|e| e.to_string())?;
        check(
            (ed1 - 3.0f64.ln()).abs() < 1e-12,
            format!("shared-list case: {ed1} vs ln 3"),
        )?;
        check(
            (ed2 - 9.0f64.ln()).abs() < 1e-12,
            format!("disjoint case: {ed2} vs ln 9"),
        )
    });
}

// ---------------------------------------------------------------------
// 2. Inverse-degree transition example, exact to 1e-12.

#[test]
fn acceptance_2_inverse_degree_transition_example() {
    criterion(2, "inverse-degree transition example", || {
        // Node 0 has two neighbors: node 1 of degree 10, node 2 of
        // degree 90.
        let young = 1u32;
        let old = 2u32;
        let mut edges = vec![(0u32, young), (0u32, old)];
        for leaf in 3..12 {
            edges.push((young, leaf));
        }
        for leaf in 12..101 {
            edges.push((old, leaf));
        }
        let graph = Graph::from_edges(101, &edges, None).map_err(|e| e.to_string())?;
        check(graph.degree(young) == 10 && graph.degree(old) == 90, "fixture degrees")?;
        let strategy = WalkStrategy::DegreeBiased {
            weight: DegreeWeight::Inverse,
        };
        let dist =
            transition_distribution(&graph, strategy, 0, None).map_err(|e| e.to_string())?;
        check(
            (dist[0] - 0.9).abs() < 1e-12 && (dist[1] - 0.1).abs() < 1e-12,
            format!("got ({}, {})", dist[0], dist[1]),
        )
    });
}

// ---------------------------------------------------------------------
// 3. Strategy equivalences, exact on 100 random graphs.

#[test]
fn acceptance_3_strategy_equivalence() {
    criterion(3, "strategy-equivalence suite", || {
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        let second_order = WalkStrategy::SecondOrder { p: 1.0, q: 1.0 };
        let constant = WalkStrategy::DegreeBiased {
            weight: DegreeWeight::Constant,
        };
        for case in 0..100 {
            let graph = loop {
                let n = rng.gen_range(3..14usize);
                let mut edges = Vec::new();
                for u in 0..n as NodeId {
                    for v in (u + 1)..n as NodeId {
                        if rng.gen::<f64>() < 0.45 {
                            edges.push((u, v));
                        }
                    }
                }
                if !edges.is_empty() {
                    break Graph::from_edges(n, &edges, None).map_err(|e| e.to_string())?;
                }
            };
            for current in graph.non_isolated_nodes() {
                let uniform = transition_distribution(&graph, WalkStrategy::Uniform, current, None)
                    .map_err(|e| e.to_string())?;
                let from_constant = transition_distribution(&graph, constant, current, None)
                    .map_err(|e| e.to_string())?;
                check(
                    uniform == from_constant,
                    format!("case {case}: constant-weight differs at node {current}"),
                )?;
                for &previous in graph.neighbors(current) {
                    let from_second =
                        transition_distribution(&graph, second_order, current, Some(previous))
                            .map_err(|e| e.to_string())?;
                    check(
                        uniform == from_second,
                        format!("case {case}: second-order(1,1) differs at node {current}"),
                    )?;
                }
            }
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------
// 4. Degree-versus-frequency phenomenon on a 1000-node
//    preferential-attachment graph, 10 walks of length 80 per node.

#[test]
fn acceptance_4_degree_frequency_phenomenon() {
    criterion(4, "degree-frequency phenomenon", || {
        // Attachment density 25 keeps every neighborhood rich in
        // low-degree alternatives; in very sparse graphs a walk leaving a
        // leaf has nothing but hubs to step to, so no weighting can
        // flatten the visit counts.
        let graph = preferential_attachment_graph(1000, 25, 42).map_err(|e| e.to_string())?;
        for seed in [1u64, 2, 3] {
            let correlation = |strategy: WalkStrategy| -> Result<f64, String> {
                let corpus =
                    generate_corpus(&graph, strategy, 80, 10, seed).map_err(|e| e.to_string())?;
                Ok(frequency_profile(&corpus, &graph).spearman)
            };
            let uniform = correlation(WalkStrategy::Uniform)?;
            let inverse = correlation(WalkStrategy::DegreeBiased {
                weight: DegreeWeight::Inverse,
            })?;
            let inverse_sqrt = correlation(WalkStrategy::DegreeBiased {
                weight: DegreeWeight::InverseSqrt,
            })?;
            check(
                uniform > 0.8,
                format!("seed {seed}: uniform correlation {uniform} <= 0.8"),
            )?;
            check(
                inverse.abs() < 0.3,
                format!("seed {seed}: inverse correlation |{inverse}| >= 0.3"),
            )?;
            check(
                inverse < inverse_sqrt && inverse_sqrt < uniform,
                format!(
                    "seed {seed}: expected inverse {inverse} < inverse_sqrt {inverse_sqrt} < uniform {uniform}"
                ),
            )?;
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------
// 5. Gradient checks: SGNS and MLP analytic gradients against central
//    finite differences, >= 100 points each, relative error < 1e-4.

#[test]
fn acceptance_5_gradient_checks() {
    criterion(5, "gradient checks", || {
        let sgns_points = sgns_gradient_points().map_err(|e| e.to_string())?;
        check(
            sgns_points >= 100,
            format!("only {sgns_points} SGNS points checked"),
        )?;
        let mlp_points = mlp_gradient_points()?;
        check(mlp_points >= 100, format!("only {mlp_points} MLP points checked"))
    });
}

fn sgns_gradient_points() -> div2vec::Result<usize> {
    use div2vec::embed::{sgns_step, EmbeddingMatrix};
    let mut checked = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for round in 0..30u64 {
        let dimension = 4;
        let nodes = 6u32;
        // Random small parameter point.
        let rows: Vec<(NodeId, Vec<f64>)> = (0..nodes)
            .map(|node| {
                (
                    node,
                    (0..dimension).map(|_| rng.gen_range(-0.6..0.6)).collect(),
                )
            })
            .collect();
        let mut base = EmbeddingMatrix::from_rows(dimension, rows)?;
        for node in 0..nodes {
            for value in base.context_vector_mut(node).unwrap() {
                *value = rng.gen_range(-0.6..0.6);
            }
        }

        let center = (round % nodes as u64) as NodeId;
        let context = ((round + 1) % nodes as u64) as NodeId;
        let negatives = [
            ((round + 2) % nodes as u64) as NodeId,
            ((round + 4) % nodes as u64) as NodeId,
        ];

        let loss_at = |m: &EmbeddingMatrix| -> f64 {
            let mut probe = m.clone();
            sgns_step(&mut probe, center, context, &negatives, 0.0).unwrap()
        };
        // A unit learning rate turns (before - after) into the gradient.
        let mut stepped = base.clone();
        sgns_step(&mut stepped, center, context, &negatives, 1.0)?;

        let h = 1e-5;
        for node in [center, context, negatives[0], negatives[1]] {
            for input_side in [true, false] {
                for k in 0..dimension {
                    let read = |m: &EmbeddingMatrix| {
                        let v = if input_side {
                            m.vector(node).unwrap()
                        } else {
                            m.context_vector(node).unwrap()
                        };
                        v[k]
                    };
                    let write = |m: &mut EmbeddingMatrix, value: f64| {
                        let v = if input_side {
                            m.vector_mut(node).unwrap()
                        } else {
                            m.context_vector_mut(node).unwrap()
                        };
                        v[k] = value;
                    };
                    let analytic = read(&base) - read(&stepped);
                    let mut plus = base.clone();
                    write(&mut plus, read(&base) + h);
                    let mut minus = base.clone();
                    write(&mut minus, read(&base) - h);
                    let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                    let scale = fd.abs().max(analytic.abs()).max(1e-8);
                    assert!(
                        (fd - analytic).abs() / scale < 1e-4,
                        "SGNS gradient mismatch: fd {fd} analytic {analytic}"
                    );
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

fn mlp_gradient_points() -> Result<usize, String> {
    use div2vec::predictor::{loss_and_gradient, MlpModel, HIDDEN_WIDTH};
    let mut rng = ChaCha8Rng::seed_from_u64(515);
    let input_dim = 6;
    let mut checked = 0;
    for round in 0..4u64 {
        let model = MlpModel::init(input_dim, 900 + round);
        let feature: Vec<f64> = (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let label = if rng.gen::<bool>() { 1.0 } else { 0.0 };
        let (_, grads) = loss_and_gradient(&model, &feature, label).map_err(|e| e.to_string())?;
        let loss_of = |m: &MlpModel| loss_and_gradient(m, &feature, label).unwrap().0;

        let h = 1e-6;
        let mut check_param = |set: &dyn Fn(&mut MlpModel, f64),
                               current: f64,
                               analytic: f64|
         -> Result<(), String> {
            let mut plus = model.clone();
            set(&mut plus, current + h);
            let mut minus = model.clone();
            set(&mut minus, current - h);
            let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let scale = fd.abs().max(analytic.abs()).max(1e-6);
            check(
                (fd - analytic).abs() / scale < 1e-4,
                format!("MLP gradient mismatch: fd {fd} analytic {analytic}"),
            )?;
            checked += 1;
            Ok(())
        };
        for k in (0..model.w1.len()).step_by(53) {
            check_param(&move |m, v| m.w1[k] = v, model.w1[k], grads.w1[k])?;
        }
        for k in (0..HIDDEN_WIDTH).step_by(17) {
            check_param(&move |m, v| m.b1[k] = v, model.b1[k], grads.b1[k])?;
            check_param(&move |m, v| m.w2[k] = v, model.w2[k], grads.w2[k])?;
        }
        check_param(&move |m, v| m.b2 = v, model.b2, grads.b2)?;
    }
    Ok(checked)
}

// ---------------------------------------------------------------------
// 6. AUC oracle equivalence on 1000 random instances.

#[test]
fn acceptance_6_auc_oracle_equivalence() {
    criterion(6, "auc oracle equivalence", || {
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        for case in 0..1000 {
            let n = rng.gen_range(2..=200usize);
            // Mix continuous and coarse scores so ties appear often.
            let coarse = rng.gen::<bool>();
            let mut scores: Vec<(f64, bool)> = (0..n)
                .map(|_| {
                    let s = if coarse {
                        (rng.gen_range(0..10u32) as f64) / 10.0
                    } else {
                        rng.gen::<f64>()
                    };
                    (s, rng.gen::<bool>())
                })
                .collect();
            let positives = scores.iter().filter(|(_, l)| *l).count();
            if positives == 0 {
                scores[0].1 = true;
            } else if positives == scores.len() {
                scores[0].1 = false;
            }
            let positives = scores.iter().filter(|(_, l)| *l).count();
            let negatives = scores.len() - positives;

            // Brute-force pair counting, ties at one half.
            let mut wins = 0.0;
            for &(sp, lp) in &scores {
                if !lp {
                    continue;
                }
                for &(sn, ln) in &scores {
                    if ln {
                        continue;
                    }
                    if sp > sn {
                        wins += 1.0;
                    } else if sp == sn {
                        wins += 0.5;
                    }
                }
            }
            let brute = wins / (positives as f64 * negatives as f64);
            let fast = auc(&scores).map_err(|e| e.to_string())?;
            check(fast == brute, format!("case {case}: rank {fast} != brute {brute}"))?;
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------
// 8. Metric bounds suite.

#[test]
fn acceptance_8_metric_bounds() {
    criterion(8, "metric bounds suite", || {
        // ED <= ln(#distinct recommended), equality iff uniform counts.
        let table = |k: usize, lists: Vec<Vec<NodeId>>| RecommendationTable {
            k,
            lists: lists
                .into_iter()
                .enumerate()
                .map(|(u, items)| {
                    (u as NodeId, items.into_iter().map(|i| (i, 0.0)).collect())
                })
                .collect(),
            empty_users: Vec::new(),
        };
        let uniform_counts = table(2, vec![vec![1, 2], vec![3, 4], vec![5, 6]]);
        let ed = entropy_diversity(&uniform_counts, 3, 2).map_err(|e| e.to_string())?;
        let bound = (coverage(&uniform_counts) as f64).ln();
        check(
            (ed - bound).abs() < 1e-12,
            format!("uniform counts: ed {ed} != ln(distinct) {bound}"),
        )?;
        let skewed = table(2, vec![vec![1, 2], vec![1, 2], vec![1, 3]]);
        let ed = entropy_diversity(&skewed, 3, 2).map_err(|e| e.to_string())?;
        let bound = (coverage(&skewed) as f64).ln();
        check(
            ed < bound - 1e-9,
            format!("skewed counts: ed {ed} not strictly below ln(distinct) {bound}"),
        )?;

        // ILS of identical-vector lists is 0; orthogonal nonnegative
        // vectors give 1.
        let mut features = div2vec::features::ItemFeatureMatrix::new(3);
        features.insert(1, vec![0.4, 0.6, 0.1]).map_err(|e| e.to_string())?;
        features.insert(2, vec![0.4, 0.6, 0.1]).map_err(|e| e.to_string())?;
        features.insert(3, vec![1.0, 0.0, 0.0]).map_err(|e| e.to_string())?;
        features.insert(4, vec![0.0, 1.0, 0.0]).map_err(|e| e.to_string())?;
        let identical = intra_list_similarity(&[1, 2], &features).map_err(|e| e.to_string())?;
        check(identical.abs() < 1e-12, format!("identical-vector ILS {identical}"))?;
        let orthogonal = intra_list_similarity(&[3, 4], &features).map_err(|e| e.to_string())?;
        check(
            (orthogonal - 1.0).abs() < 1e-12,
            format!("orthogonal-vector ILS {orthogonal}"),
        )?;

        // Coverage is monotone in k for nested tables from one ranking.
        let ranked = div2vec::diversity::RankedCandidates {
            per_user: vec![
                (0, vec![(9, 0.9), (5, 0.8), (7, 0.2)]),
                (1, vec![(5, 0.7), (9, 0.6), (2, 0.5)]),
            ],
        };
        let mut last = 0;
        for k in 1..=3 {
            let c = coverage(&div2vec::diversity::top_k(&ranked, k));
            check(c >= last, format!("coverage dropped at k={k}"))?;
            last = c;
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------
// Criteria 7 and 9: end-to-end pipeline runs (filled in below).

fn write_dataset(dir: &Path, config: &SyntheticRatingsConfig) -> (PathBuf, PathBuf) {
    let ratings_path = dir.join("ratings.csv");
    let mut ratings = String::from("userId,movieId,rating,timestamp\n");
    for r in synthetic_ratings(config) {
        writeln!(ratings, "{},{},{},0", r.user, r.item, r.rating).unwrap();
    }
    std::fs::write(&ratings_path, ratings).unwrap();
    let genome_path = dir.join("genome.csv");
    let mut genome = String::from("movieId,tagId,relevance\n");
    for (item, tag, relevance) in synthetic_tag_genome(config, 3) {
        writeln!(genome, "{item},{tag},{relevance}").unwrap();
    }
    std::fs::write(&genome_path, genome).unwrap();
    (ratings_path, genome_path)
}

/// Per-method numbers pulled out of one pipeline run.
#[derive(Debug, Clone, Copy)]
struct MethodNumbers {
    auc: f64,
    co_10: usize,
    ed_10: f64,
}

fn numbers_at_10(
    reports: &[div2vec::diversity::MetricReport],
) -> HashMap<String, MethodNumbers> {
    reports
        .iter()
        .map(|r| {
            let at_10 = r
                .at_k
                .iter()
                .find(|m| m.k == 10)
                .expect("k=10 configured");
            (
                r.method.clone(),
                MethodNumbers {
                    auc: r.auc,
                    co_10: at_10.coverage,
                    ed_10: at_10.entropy_diversity,
                },
            )
        })
        .collect()
}

fn acceptance_pipeline_config(ratings: &Path, genome: &Path) -> ExperimentConfig {
    let toml = format!(
        r#"
[dataset]
ratings = "{}"
features = "{}"

[walks]
walks_per_node = 4
walk_length = 16

[skipgram]
epochs = 4

[classifier]
epochs = 30

[[methods]]
name = "deepwalk"
strategy = "uniform"

[[methods]]
name = "div2vec"
strategy = "degree_biased(inverse)"

[[methods]]
name = "rooted_div2vec"
strategy = "degree_biased(inverse_sqrt)"

[evaluate]
operators = ["weighted_l2"]
ks = [1, 10, 50]
"#,
        ratings.display(),
        genome.display()
    );
    ExperimentConfig::from_toml(&toml).unwrap()
}

#[test]
fn acceptance_7_directional_reproduction() {
    criterion(7, "directional reproduction", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let data = SyntheticRatingsConfig::default();
        let (ratings, genome) = write_dataset(dir.path(), &data);
        let base = acceptance_pipeline_config(&ratings, &genome);

        let mut per_seed: Vec<HashMap<String, MethodNumbers>> = Vec::new();
        for seed in [1u64, 2, 3] {
            let mut config = base.clone();
            config.override_seed(seed);
            let out = dir.path().join(format!("run_seed{seed}"));
            let outcome = run_pipeline(&config, &out, false).map_err(|e| e.to_string())?;
            let numbers = numbers_at_10(&outcome.reports);
            println!(
                "  seed {seed}: deepwalk auc {:.4} co10 {} ed10 {:.3} | div2vec auc {:.4} co10 {} ed10 {:.3} | rooted auc {:.4}",
                numbers["deepwalk"].auc,
                numbers["deepwalk"].co_10,
                numbers["deepwalk"].ed_10,
                numbers["div2vec"].auc,
                numbers["div2vec"].co_10,
                numbers["div2vec"].ed_10,
                numbers["rooted_div2vec"].auc,
            );
            per_seed.push(numbers);
        }

        // (a) div2vec out-diversifies the uniform walk at k=10 in at
        // least 2 of 3 seeds.
        let diversity_wins = per_seed
            .iter()
            .filter(|n| {
                n["div2vec"].co_10 > n["deepwalk"].co_10
                    && n["div2vec"].ed_10 > n["deepwalk"].ed_10
            })
            .count();
        check(
            diversity_wins >= 2,
            format!("div2vec CO(10)/ED(10) beat deepwalk in only {diversity_wins} of 3 seeds"),
        )?;

        // (b) Every method clears AUC 0.70 on every seed.
        for (i, numbers) in per_seed.iter().enumerate() {
            for (method, n) in numbers {
                check(
                    n.auc > 0.70,
                    format!("seed {}: {method} auc {:.4} <= 0.70", i + 1, n.auc),
                )?;
            }
        }

        // (c) The square-root weighting recovers accuracy relative to
        // the full inverse weighting in at least 2 of 3 seeds.
        let accuracy_wins = per_seed
            .iter()
            .filter(|n| n["rooted_div2vec"].auc >= n["div2vec"].auc)
            .count();
        check(
            accuracy_wins >= 2,
            format!("rooted div2vec AUC >= div2vec in only {accuracy_wins} of 3 seeds"),
        )
    });
}

#[test]
fn acceptance_9_pipeline_determinism() {
    criterion(9, "pipeline determinism", || {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let data = SyntheticRatingsConfig {
            users: 150,
            items: 260,
            max_ratings_per_user: 60,
            seed: 3,
            ..Default::default()
        };
        let (ratings, genome) = write_dataset(dir.path(), &data);
        let toml = format!(
            r#"
[dataset]
ratings = "{}"
features = "{}"

[filter]
min_item_records = 3
min_user_records = 3
max_user_records = 500

[walks]
walks_per_node = 5
walk_length = 16

[skipgram]
dimension = 16
epochs = 2

[classifier]
epochs = 8

[[methods]]
name = "deepwalk"
strategy = "uniform"

[[methods]]
name = "div2vec"
strategy = "degree_biased(inverse)"

[evaluate]
operators = ["weighted_l2", "hadamard"]
ks = [1, 5]
"#,
            ratings.display(),
            genome.display()
        );
        let config = ExperimentConfig::from_toml(&toml).unwrap();

        let mut report_bytes = Vec::new();
        let mut metrics_bytes = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("run{run}"));
            let outcome = run_pipeline(&config, &out, false).map_err(|e| e.to_string())?;
            report_bytes.push(std::fs::read(&outcome.report_path).map_err(|e| e.to_string())?);
            let mut rows = Vec::new();
            for entry in std::fs::read_dir(out.join("metrics")).map_err(|e| e.to_string())? {
                let path = entry.map_err(|e| e.to_string())?.path();
                rows.push((
                    path.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(&path).map_err(|e| e.to_string())?,
                ));
            }
            rows.sort();
            metrics_bytes.push(rows);
        }
        check(
            report_bytes[0] == report_bytes[1],
            "report.csv differs between identical runs",
        )?;
        check(
            metrics_bytes[0] == metrics_bytes[1],
            "per-pair metric files differ between identical runs",
        )
    });
}
