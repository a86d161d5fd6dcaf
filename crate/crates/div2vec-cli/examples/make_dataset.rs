//! Writes a synthetic MovieLens-shaped dataset (ratings.csv plus
//! genome.csv tag-relevance triples) for trying out the pipeline.
//!
//! Usage: make_dataset <dir> [users] [items] [seed]

use std::fmt::Write as _;
use std::path::PathBuf;

use div2vec::synth::{synthetic_ratings, synthetic_tag_genome, SyntheticRatingsConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data".to_string()));
    let users: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(900);
    let items: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1300);
    let seed: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(0);

    let config = SyntheticRatingsConfig {
        users,
        items,
        seed,
        ..Default::default()
    };
    std::fs::create_dir_all(&dir)?;

    let mut ratings = String::from("userId,movieId,rating,timestamp\n");
    for r in synthetic_ratings(&config) {
        writeln!(ratings, "{},{},{},0", r.user, r.item, r.rating)?;
    }
    std::fs::write(dir.join("ratings.csv"), &ratings)?;

    let mut genome = String::from("movieId,tagId,relevance\n");
    for (item, tag, relevance) in synthetic_tag_genome(&config, 3) {
        writeln!(genome, "{item},{tag},{relevance}")?;
    }
    std::fs::write(dir.join("genome.csv"), &genome)?;

    println!(
        "wrote {} and {}",
        dir.join("ratings.csv").display(),
        dir.join("genome.csv").display()
    );
    Ok(())
}
