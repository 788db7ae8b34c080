//! Regenerates the files in `fixtures/` from a seeded synthetic world.
//!
//! cargo run --example make_fixtures -- [out-dir]

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xltag::synthetic::{simulate_projection, World, WorldConfig};

const SOURCES: [&str; 3] = ["src1", "src2", "src3"];
const TARGET: &str = "tgt";

fn main() -> xltag::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&dir).map_err(|e| xltag::Error::InvalidConfig(e.to_string()))?;

    let config = WorldConfig {
        languages: SOURCES.iter().chain([&TARGET]).map(|s| s.to_string()).collect(),
        concepts_per_tag: 6,
        ..WorldConfig::default()
    };
    let world = World::generate(config, 42)?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    world.verse_corpus(150, &mut rng).write(dir.join("verses.txt"))?;
    for (i, src) in SOURCES.iter().enumerate() {
        world
            .sample_corpus(i, 80, &mut rng)
            .write(dir.join(format!("train.{src}.txt")))?;
    }
    let target = SOURCES.len();
    let unlabelled = world.sample_corpus(target, 60, &mut rng);
    for src in SOURCES {
        simulate_projection(&unlabelled, &[src], 0.85, 0.75, &mut rng).write(dir.join(format!("votes.{src}.txt")))?;
    }
    world.sample_corpus(target, 40, &mut rng).write(dir.join("test.tgt.txt"))?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
