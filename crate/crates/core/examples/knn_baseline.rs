//! Cosine-similarity baseline next to the default model on the same seeds.

use taxo_suggest::ranking::{knn_baseline, suggest};
use taxo_suggest::{ModelConfig, Query, Taxonomy};

fn main() -> taxo_suggest::Result<()> {
    let t = Taxonomy::parse_tsv(include_str!("../fixtures/t1.tsv"))?;
    let q = Query::resolve(&t, ["china", "india", "brazil"])?;
    let knn = knn_baseline(&t, &q, 5, 1.0)?;
    let model = suggest(&t, &q, &ModelConfig { k: 1, top_n: 5, ..ModelConfig::default() })?;
    println!("{:<4} {:<22} {:<22}", "rank", "knn", "prm+fg+no (k=1)");
    for i in 0..5 {
        let cell = |r: &taxo_suggest::RankedSuggestions| {
            r.items.get(i).map(|s| format!("{} {:.3}", s.entity, s.score)).unwrap_or_default()
        };
        println!("{:<4} {:<22} {:<22}", i + 1, cell(&knn), cell(&model));
    }
    Ok(())
}
