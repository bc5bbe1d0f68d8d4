//! Ranks suggestions for a few seeds with every model variant.
//!
//! ```text
//! cargo run --example suggest -- [taxonomy.tsv] [seed,seed,...]
//! ```

use taxo_suggest::cli::parse_query_list;
use taxo_suggest::{HittingParams, HittingSource, Method, ModelConfig, ParseMode, Query, Taxonomy};

fn main() -> taxo_suggest::Result<()> {
    let mut args = std::env::args().skip(1);
    let t = match args.next() {
        Some(path) => Taxonomy::load_path(path, ParseMode::Lenient)?.0,
        None => Taxonomy::parse_tsv(include_str!("../fixtures/t0.tsv"))?,
    };
    let seeds = parse_query_list(&args.next().unwrap_or_else(|| "china,india,brazil".into()));
    let q = Query::resolve(&t, &seeds)?;

    let mut methods: Vec<Method> = ModelConfig::variants(&ModelConfig::default()).into_iter().map(Method::Model).collect();
    methods.push(Method::Knn);
    let source = HittingSource::Online(HittingParams::default());
    for m in methods {
        match taxo_suggest::ranking::run_method(&t, &q, &m, &source, 3) {
            Ok(r) => {
                let top: Vec<String> = r.items.iter().map(|s| format!("{} ({:.4})", s.entity, s.score)).collect();
                println!("{:<10} {}", m.label(), top.join(", "));
            }
            Err(e) => println!("{:<10} {e}", m.label()),
        }
    }
    Ok(())
}
