//! Grows a query one seed at a time and shows that the incrementally
//! extended Noisy-Or posterior equals the batch one.

use taxo_suggest::inference::{extend_noisy_or, posterior_noisy_or, ConceptDistribution};
use taxo_suggest::{Query, Taxonomy};

fn main() -> taxo_suggest::Result<()> {
    let t = Taxonomy::parse_tsv(include_str!("../fixtures/t0.tsv"))?;
    let mut running = ConceptDistribution::default();
    let mut seeds = Vec::new();
    for name in ["china", "india", "brazil", "russia"] {
        let e = t.id(name).expect("fixture entity");
        running = extend_noisy_or(&running, &t, e)?;
        seeds.push(e);
        let batch = posterior_noisy_or(&t, &Query::new(&t, seeds.iter().copied())?)?;
        println!("+ {name} (matches batch: {})", batch == running);
        for (c, w) in running.sorted_by_weight(&t) {
            println!("    {:<20} {w:.6}", t.name(c));
        }
    }
    Ok(())
}
