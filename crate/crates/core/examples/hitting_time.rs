//! Capped hitting times from every term to one concept, and the aggregate
//! hitting time of a query.
//!
//! ```text
//! cargo run --example hitting_time -- [target] [cap]
//! ```

use taxo_suggest::granularity::{aggregate_hitting, hitting_times};
use taxo_suggest::{HittingParams, Query, Taxonomy};

fn main() -> taxo_suggest::Result<()> {
    let mut args = std::env::args().skip(1);
    let target = args.next().unwrap_or_else(|| "country".into());
    let cap: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(20.0);

    let t = Taxonomy::parse_tsv(include_str!("../fixtures/t0.tsv"))?;
    let c = t.id(&target).ok_or_else(|| taxo_suggest::Error::UnknownTerm(target.clone()))?;
    let params = HittingParams { cap, ..HittingParams::default() };
    let h = hitting_times(&t, c, &params)?;
    let mut rows: Vec<_> = h.entries().collect();
    rows.sort_by(|a, b| a.1.total_cmp(&b.1));
    for (x, v) in rows {
        println!("h({} | {target}) = {v:.6}", t.name(x));
    }
    let q = Query::resolve(&t, ["china", "india", "brazil"])?;
    println!("aggregate for china,india,brazil: {:.6}", aggregate_hitting(&t, &q, c, &params)?);
    Ok(())
}
