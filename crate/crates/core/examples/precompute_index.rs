//! Precomputes hitting times for the fine-grained candidates of a query on a
//! generated taxonomy, writes them to disk and answers the query from the file.
//!
//! ```text
//! cargo run --release --example precompute_index -- [entities]
//! ```

use std::time::Instant;

use taxo_suggest::granularity::{fine_grained_candidates, precompute_hitting};
use taxo_suggest::ranking::{suggest, suggest_with};
use taxo_suggest::synthetic::write_large_taxonomy;
use taxo_suggest::{HittingIndexSet, HittingSource, ModelConfig, ParseMode, Query, Taxonomy};

fn main() -> taxo_suggest::Result<()> {
    let entities: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20_000);
    let dir = std::env::temp_dir().join(format!("taxo-suggest-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let tsv = dir.join("taxonomy.tsv");
    let idx = dir.join("hitting.idx");

    let edges = write_large_taxonomy(std::io::BufWriter::new(std::fs::File::create(&tsv)?), 1, entities, entities / 10, 5)?;
    let (t, _) = Taxonomy::load_path(&tsv, ParseMode::Strict)?;
    println!("{edges} edges, {} terms", t.term_count());

    let cfg = ModelConfig::default();
    let q = Query::resolve(&t, ["entity 1", "entity 2", "entity 3"])?;
    let start = Instant::now();
    let targets = fine_grained_candidates(&t, &q, cfg.hitting.cap);
    let set = precompute_hitting(&t, &targets, &cfg.hitting, cfg.hitting.cap)?;
    set.save(&t, &idx)?;
    println!("{} targets precomputed in {:.2?}", set.len(), start.elapsed());

    let start = Instant::now();
    let loaded = HittingIndexSet::load(&t, &idx)?;
    let ranked = suggest_with(&t, &q, &cfg, &HittingSource::Precomputed(&loaded, cfg.hitting))?;
    println!("answered from the index in {:.2?}", start.elapsed());
    println!("same as online: {}", ranked == suggest(&t, &q, &cfg)?);
    for (i, s) in ranked.items.iter().take(5).enumerate() {
        println!("{}\t{}\t{:.6}", i + 1, s.entity, s.score);
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
