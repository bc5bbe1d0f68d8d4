//! Compares model variants on a generated benchmark of planted lists.
//!
//! ```text
//! cargo run --release --example evaluate -- [k] [rng_seed]
//! ```

use taxo_suggest::evaluation::{evaluate, EvalConfig};
use taxo_suggest::synthetic::{planted_benchmark, PlantedShape};
use taxo_suggest::{HittingSource, Method, ModelConfig};

fn main() -> taxo_suggest::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let bench = planted_benchmark(seed, &PlantedShape::default())?;
    println!(
        "taxonomy: {} terms, {} edges, {} lists",
        bench.taxonomy.term_count(),
        bench.taxonomy.edge_count(),
        bench.lists.len()
    );

    let base = ModelConfig { k, ..ModelConfig::default() };
    let mut methods: Vec<Method> = ModelConfig::variants(&base).into_iter().map(Method::Model).collect();
    methods.push(Method::Knn);

    let cfg = EvalConfig { alpha: 0.5, rng_seed: seed, trials: 2, ..EvalConfig::default() };
    let reports = evaluate(&bench.taxonomy, &bench.lists, &methods, &cfg, &HittingSource::Online(base.hitting))?;
    println!("{:<12} {:>8} {:>8} {:>8} {:>8}", "method", "mndcg", "P", "R", "p@3");
    for r in &reports {
        println!(
            "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.method, r.mndcg, r.mean_precision, r.mean_recall, r.mean_precision_at[&3]
        );
    }
    Ok(())
}
