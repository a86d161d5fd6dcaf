//! Deterministic synthetic datasets for benchmarks and tests: a
//! preferential-attachment graph with the heavy degree tail the walk
//! analysis needs, and a MovieLens-shaped rating generator with genre
//! structure (so link prediction is learnable) and a popularity skew (so
//! diversity differences between walk strategies are visible).

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{Graph, NodeId};
use crate::ratings::RatingRecord;

/// Barabasi-Albert style preferential attachment: nodes join one at a
/// time and connect `edges_per_node` times to existing nodes chosen with
/// probability proportional to degree.
pub fn preferential_attachment_graph(
    node_count: usize,
    edges_per_node: usize,
    seed: u64,
) -> Result<Graph> {
    assert!(node_count > edges_per_node && edges_per_node >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
    // Every edge endpoint lands in this bag, so uniform draws from it are
    // degree-proportional.
    let mut endpoint_bag: Vec<NodeId> = Vec::new();

    // Seed clique over the first edges_per_node + 1 nodes.
    let core = edges_per_node + 1;
    for u in 0..core {
        for v in (u + 1)..core {
            edges.push((u as NodeId, v as NodeId));
            endpoint_bag.push(u as NodeId);
            endpoint_bag.push(v as NodeId);
        }
    }

    for new_node in core..node_count {
        let mut targets: Vec<NodeId> = Vec::with_capacity(edges_per_node);
        while targets.len() < edges_per_node {
            let target = endpoint_bag[rng.gen_range(0..endpoint_bag.len())];
            if !targets.contains(&target) {
                targets.push(target);
            }
        }
        for target in targets {
            edges.push((new_node as NodeId, target));
            endpoint_bag.push(new_node as NodeId);
            endpoint_bag.push(target);
        }
    }
    Graph::from_edges(node_count, &edges, None)
}

/// Shape of a synthetic rating dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRatingsConfig {
    pub users: usize,
    pub items: usize,
    pub genres: usize,
    /// Smallest and largest per-user rating counts; draws are skewed
    /// toward the low end the way real activity is.
    pub min_ratings_per_user: usize,
    pub max_ratings_per_user: usize,
    /// Probability that a user rates inside one of their preferred
    /// genres rather than following global popularity.
    pub genre_affinity: f64,
    /// Zipf exponent for within-genre item popularity.
    pub popularity_exponent: f64,
    /// Strength of the blockbuster effect: the most popular items are
    /// liked even off-genre, the way hit movies are. This is what makes
    /// popularity informative for link prediction.
    pub blockbuster_boost: f64,
    pub seed: u64,
}

impl Default for SyntheticRatingsConfig {
    fn default() -> Self {
        SyntheticRatingsConfig {
            users: 900,
            items: 1300,
            genres: 8,
            min_ratings_per_user: 15,
            max_ratings_per_user: 300,
            genre_affinity: 0.75,
            popularity_exponent: 1.6,
            blockbuster_boost: 0.6,
            seed: 0,
        }
    }
}

impl SyntheticRatingsConfig {
    pub fn item_genre(&self, item_index: usize) -> usize {
        item_index % self.genres
    }

    fn item_key(item_index: usize) -> String {
        (item_index + 1).to_string()
    }
}

/// Generates ratings with genre structure: users mostly rate items of
/// their preferred genres and like them; off-genre ratings skew low.
/// Ratings are unique per (user, item).
pub fn synthetic_ratings(config: &SyntheticRatingsConfig) -> Vec<RatingRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let genres = config.genres;

    // Items grouped by genre, with Zipf popularity weights inside each
    // genre and across the whole catalogue.
    let mut genre_items: Vec<Vec<usize>> = vec![Vec::new(); genres];
    for item in 0..config.items {
        genre_items[config.item_genre(item)].push(item);
    }
    let popularity = |rank: usize| (rank as f64 + 1.0).powf(-config.popularity_exponent);
    let pick_weighted = |items: &[usize], rng: &mut ChaCha8Rng| -> usize {
        // Inverse-CDF over the Zipf weights of this slice.
        let total: f64 = (0..items.len()).map(popularity).sum();
        let mut target = rng.gen::<f64>() * total;
        for (rank, &item) in items.iter().enumerate() {
            target -= popularity(rank);
            if target < 0.0 {
                return item;
            }
        }
        items[items.len() - 1]
    };
    let all_items: Vec<usize> = (0..config.items).collect();

    let mut records = Vec::new();
    for user in 0..config.users {
        let first_genre = rng.gen_range(0..genres);
        let mut preferred = vec![first_genre];
        if rng.gen::<f64>() < 0.5 {
            preferred.push((first_genre + 1 + rng.gen_range(0..genres - 1)) % genres);
        }

        // Activity skewed toward light users: square a uniform draw.
        let span = (config.max_ratings_per_user - config.min_ratings_per_user) as f64;
        let count = config.min_ratings_per_user + (rng.gen::<f64>().powi(2) * span) as usize;

        let mut seen: HashSet<usize> = HashSet::with_capacity(count);
        for _ in 0..count {
            let on_genre = rng.gen::<f64>() < config.genre_affinity;
            // Retry collisions inside the chosen branch so saturating a
            // small preferred genre cannot skew the on/off-genre mix.
            let mut chosen = None;
            for _ in 0..12 {
                let item = if on_genre {
                    let genre = preferred[rng.gen_range(0..preferred.len())];
                    pick_weighted(&genre_items[genre], &mut rng)
                } else {
                    pick_weighted(&all_items, &mut rng)
                };
                if !seen.contains(&item) {
                    chosen = Some(item);
                    break;
                }
            }
            let Some(item) = chosen else { continue };
            seen.insert(item);
            let genre_match = config.item_genre(item) == preferred[0]
                || preferred.len() > 1 && config.item_genre(item) == preferred[1];
            // Lower item indices are globally more popular, and popular
            // items are liked across genre lines the way hit movies are;
            // that is what makes degree informative for link prediction.
            let blockbuster =
                config.blockbuster_boost * ((item as f64) + 1.0).powf(-0.6);
            let liked = genre_match || rng.gen::<f64>() < blockbuster;
            let roll = rng.gen::<f64>();
            let rating = if liked {
                // Mostly 4.0-5.0 with a thin low tail.
                match roll {
                    r if r < 0.35 => 4.0,
                    r if r < 0.65 => 4.5,
                    r if r < 0.85 => 5.0,
                    r if r < 0.95 => 3.5,
                    _ => 2.5,
                }
            } else {
                // Mostly 3.0 and below.
                match roll {
                    r if r < 0.30 => 2.0,
                    r if r < 0.55 => 2.5,
                    r if r < 0.80 => 3.0,
                    r if r < 0.90 => 1.0,
                    r if r < 0.97 => 3.5,
                    _ => 4.0,
                }
            };
            records.push(
                RatingRecord::new(
                    (user + 1).to_string(),
                    SyntheticRatingsConfig::item_key(item),
                    rating,
                )
                .expect("generated ratings are half-star steps"),
            );
        }
    }
    records
}

/// Tag-genome style features: each genre owns `tags_per_genre` tags;
/// items score high on their own genre's tags and low elsewhere, so
/// same-genre items are similar in cosine.
pub fn synthetic_tag_genome(
    config: &SyntheticRatingsConfig,
    tags_per_genre: usize,
) -> Vec<(String, String, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut triples = Vec::new();
    for item in 0..config.items {
        let genre = config.item_genre(item);
        for tag in 0..config.genres * tags_per_genre {
            let own = tag / tags_per_genre == genre;
            let relevance = if own {
                0.6 + 0.4 * rng.gen::<f64>()
            } else {
                0.05 * rng.gen::<f64>()
            };
            // Tag genome files quantize relevance; three decimals keeps
            // the text artifacts small.
            let relevance = (relevance * 1000.0).round() / 1000.0;
            if relevance > 0.0 {
                triples.push((
                    SyntheticRatingsConfig::item_key(item),
                    format!("tag{tag}"),
                    relevance,
                ));
            }
        }
    }
    triples
}
