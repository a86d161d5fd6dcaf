//! Statistical and structural checks on the walk machinery: exact
//! strategy equivalences, chi-square agreement between samplers and their
//! exact distributions, the bipartite second-order case analysis, and
//! byte-level corpus determinism.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use div2vec::graph::{Graph, NodeId, Partition};
use div2vec::synth::preferential_attachment_graph;
use div2vec::walker::{
    frequency_profile, generate_corpus, transition_distribution, AliasTable, DegreeWeight,
    WalkStrategy,
};

fn random_graph(rng: &mut ChaCha8Rng) -> Graph {
    loop {
        let n = rng.gen_range(4..12usize);
        let mut edges = Vec::new();
        for u in 0..n as NodeId {
            for v in (u + 1)..n as NodeId {
                if rng.gen::<f64>() < 0.4 {
                    edges.push((u, v));
                }
            }
        }
        if !edges.is_empty() {
            return Graph::from_edges(n, &edges, None).unwrap();
        }
    }
}

#[test]
fn uniform_equivalences_are_exact_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1f);
    let second_order = WalkStrategy::SecondOrder { p: 1.0, q: 1.0 };
    let constant = WalkStrategy::DegreeBiased {
        weight: DegreeWeight::Constant,
    };
    for _ in 0..100 {
        let graph = random_graph(&mut rng);
        for current in graph.non_isolated_nodes() {
            let uniform =
                transition_distribution(&graph, WalkStrategy::Uniform, current, None).unwrap();
            let from_constant =
                transition_distribution(&graph, constant, current, None).unwrap();
            assert_eq!(uniform, from_constant);
            // Second-order needs a previous node adjacent to current;
            // check every possible one.
            for &previous in graph.neighbors(current) {
                let from_second =
                    transition_distribution(&graph, second_order, current, Some(previous))
                        .unwrap();
                assert_eq!(uniform, from_second);
            }
            // And the first step (no previous) as well.
            let first_step =
                transition_distribution(&graph, second_order, current, None).unwrap();
            assert_eq!(uniform, first_step);
        }
    }
}

/// Pearson chi-square p-value for observed counts against expected
/// probabilities.
fn chi_square_p(observed: &[u64], expected_probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let mut statistic = 0.0;
    let mut df = 0.0;
    for (&obs, &p) in observed.iter().zip(expected_probs) {
        let expected = p * total as f64;
        if expected > 0.0 {
            statistic += (obs as f64 - expected).powi(2) / expected;
            df += 1.0;
        }
    }
    let dist = ChiSquared::new(df - 1.0).unwrap();
    1.0 - dist.cdf(statistic)
}

#[test]
fn alias_table_sampling_matches_exact_distribution() {
    let cases: Vec<Vec<f64>> = vec![
        vec![1.0, 1.0, 1.0, 1.0],
        vec![0.1, 0.2, 0.3, 0.4],
        vec![5.0, 1.0],
        vec![0.01, 0.99],
        vec![2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for weights in cases {
        let table = AliasTable::new(&weights).unwrap();
        let mut counts = vec![0u64; weights.len()];
        for _ in 0..100_000 {
            counts[table.sample(&mut rng)] += 1;
        }
        let total: f64 = weights.iter().sum();
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let p = chi_square_p(&counts, &probs);
        assert!(p > 0.001, "chi-square p {p} for weights {weights:?}");
    }
}

#[test]
fn negative_sampler_matches_unigram_power_distribution() {
    // Corpus-frequency counts with a heavy skew; draws must follow
    // count^0.75 renormalized.
    let counts: Vec<u64> = vec![1, 3, 10, 50, 200, 1000, 0, 7];
    let sampler = div2vec::embed::NegativeSampler::from_counts(&counts, 0.75).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut observed = vec![0u64; counts.len()];
    for _ in 0..1_000_000 {
        observed[sampler.draw(&mut rng) as usize] += 1;
    }
    assert_eq!(observed[6], 0, "absent node drawn as negative");
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let p = chi_square_p(&observed, &probs);
    assert!(p > 0.001, "chi-square p {p}: observed {observed:?}");
}

#[test]
fn corpus_transitions_match_exact_distribution() {
    // Path graph P3 and a paw graph (triangle with a pendant) whose
    // degree-biased transitions are not uniform.
    let p3 = Graph::from_edges(3, &[(0, 1), (1, 2)], None).unwrap();
    let paw = Graph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (2, 3)], None).unwrap();
    let strategy = WalkStrategy::DegreeBiased {
        weight: DegreeWeight::Inverse,
    };
    for (graph, from) in [(&p3, 1u32), (&paw, 2u32)] {
        let corpus = generate_corpus(graph, strategy, 40, 200, 23).unwrap();
        let neighbors = graph.neighbors(from);
        let mut counts = vec![0u64; neighbors.len()];
        for walk in &corpus.walks {
            for pair in walk.windows(2) {
                if pair[0] == from {
                    let idx = neighbors.binary_search(&pair[1]).unwrap();
                    counts[idx] += 1;
                }
            }
        }
        let expected = transition_distribution(graph, strategy, from, None).unwrap();
        let p = chi_square_p(&counts, &expected);
        assert!(p > 0.01, "chi-square p {p}, counts {counts:?}, expected {expected:?}");
    }
}

#[test]
fn second_order_sampling_matches_exact_distribution() {
    // From node 2 after arriving via 0 in the paw graph, the three
    // neighbor classes (return, common neighbor, outward) all occur.
    let paw = Graph::from_edges(4, &[(0, 1), (0, 2), (1, 2), (2, 3)], None).unwrap();
    let strategy = WalkStrategy::SecondOrder { p: 4.0, q: 0.25 };
    let corpus = generate_corpus(&paw, strategy, 60, 400, 8).unwrap();
    let current = 2u32;
    let previous = 0u32;
    let neighbors = paw.neighbors(current);
    let mut counts = vec![0u64; neighbors.len()];
    for walk in &corpus.walks {
        for window in walk.windows(3) {
            if window[0] == previous && window[1] == current {
                let idx = neighbors.binary_search(&window[2]).unwrap();
                counts[idx] += 1;
            }
        }
    }
    let expected = transition_distribution(&paw, strategy, current, Some(previous)).unwrap();
    let p = chi_square_p(&counts, &expected);
    assert!(p > 0.01, "chi-square p {p}, counts {counts:?}, expected {expected:?}");
}

/// On a bipartite graph, a candidate next-node is never adjacent to the
/// previous node (that would close an odd cycle), so the second-order
/// middle case cannot fire.
#[test]
fn bipartite_graphs_never_hit_the_common_neighbor_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb1);
    for _ in 0..20 {
        let users = rng.gen_range(3..8usize);
        let items = rng.gen_range(3..8usize);
        let mut edges = Vec::new();
        for u in 0..users as NodeId {
            for i in 0..items as NodeId {
                if rng.gen::<f64>() < 0.5 {
                    edges.push((u, users as NodeId + i));
                }
            }
        }
        if edges.is_empty() {
            continue;
        }
        let mut partition = vec![Partition::User; users];
        partition.extend(vec![Partition::Item; items]);
        let graph = Graph::from_edges(users + items, &edges, Some(partition)).unwrap();

        let mut middle_case_count = 0usize;
        for current in graph.non_isolated_nodes() {
            for &previous in graph.neighbors(current) {
                for &candidate in graph.neighbors(current) {
                    if candidate != previous && graph.has_edge(candidate, previous) {
                        middle_case_count += 1;
                    }
                }
            }
        }
        assert_eq!(middle_case_count, 0);
    }

    // Sanity: the count is positive on a triangle, so the check above
    // is not vacuous.
    let triangle = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)], None).unwrap();
    let mut count = 0;
    for current in triangle.non_isolated_nodes() {
        for &previous in triangle.neighbors(current) {
            for &candidate in triangle.neighbors(current) {
                if candidate != previous && triangle.has_edge(candidate, previous) {
                    count += 1;
                }
            }
        }
    }
    assert!(count > 0);
}

#[test]
fn identical_seeds_give_byte_identical_corpus_files() {
    let graph = preferential_attachment_graph(80, 2, 3).unwrap();
    let strategy = WalkStrategy::DegreeBiased {
        weight: DegreeWeight::Inverse,
    };
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for run in 0..2 {
        let corpus = generate_corpus(&graph, strategy, 20, 4, 99).unwrap();
        let path = dir.path().join(format!("corpus{run}.txt"));
        div2vec::io::write_corpus(&path, &corpus).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn degree_frequency_correlation_orders_by_strategy() {
    // Smaller version of the full preferential-attachment analysis:
    // uniform walks concentrate on hubs, inverse-degree walks flatten.
    let graph = preferential_attachment_graph(300, 2, 11).unwrap();
    let correlation = |strategy| {
        let corpus = generate_corpus(&graph, strategy, 40, 5, 7).unwrap();
        frequency_profile(&corpus, &graph).spearman
    };
    let uniform = correlation(WalkStrategy::Uniform);
    let inverse = correlation(WalkStrategy::DegreeBiased {
        weight: DegreeWeight::Inverse,
    });
    let inverse_sqrt = correlation(WalkStrategy::DegreeBiased {
        weight: DegreeWeight::InverseSqrt,
    });
    assert!(uniform > 0.8, "uniform correlation {uniform}");
    assert!(inverse.abs() < uniform, "inverse {inverse} vs uniform {uniform}");
    assert!(
        inverse < inverse_sqrt && inverse_sqrt < uniform,
        "expected {inverse} < {inverse_sqrt} < {uniform}"
    );
}
