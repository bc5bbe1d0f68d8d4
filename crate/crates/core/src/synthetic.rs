//! Seeded generators for test taxonomies and planted benchmarks.
//!
//! Everything here is deterministic in its `seed` argument.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::evaluation::GroundTruthList;
use crate::taxonomy::Taxonomy;

type Edge = (String, String, u64);

/// Shape of a small random taxonomy.
#[derive(Clone, Copy, Debug)]
pub struct RandomShape {
    pub entities: usize,
    pub concepts: usize,
    /// Upper bound on concepts per entity.
    pub max_concepts_per_entity: usize,
    /// Probability that a concept has a hypernym among later concepts.
    pub concept_link_prob: f64,
    pub max_count: u64,
}

impl Default for RandomShape {
    fn default() -> Self {
        RandomShape { entities: 25, concepts: 8, max_concepts_per_entity: 4, concept_link_prob: 0.5, max_count: 20 }
    }
}

/// Random entities under random concepts, with concept-to-concept links that
/// only point "upward" (from `c_i` to `c_j`, `j > i`).
pub fn random_taxonomy(seed: u64, shape: &RandomShape) -> Result<Taxonomy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concepts: Vec<String> = (0..shape.concepts).map(|i| format!("c{i}")).collect();
    let mut edges: Vec<Edge> = Vec::new();
    for i in 0..shape.entities {
        let k = rng.gen_range(1..=shape.max_concepts_per_entity.min(shape.concepts));
        for c in concepts.choose_multiple(&mut rng, k) {
            edges.push((format!("e{i}"), c.clone(), rng.gen_range(1..=shape.max_count)));
        }
    }
    for i in 0..shape.concepts.saturating_sub(1) {
        if rng.gen_bool(shape.concept_link_prob) {
            let j = rng.gen_range(i + 1..shape.concepts);
            edges.push((concepts[i].clone(), concepts[j].clone(), rng.gen_range(1..=shape.max_count)));
        }
    }
    Taxonomy::from_edges(edges)
}

/// A layered DAG whose only sink is `root`: every node in layer `l > 0` has
/// edges to one or more nodes in lower layers, so every upward walk ends at
/// `root`. Node names are `root` and `n{layer}_{i}`.
pub fn upward_dag(seed: u64, layers: usize, width: usize, max_out: usize) -> Result<Taxonomy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_layer: Vec<Vec<String>> = vec![vec!["root".to_string()]];
    let mut edges: Vec<Edge> = Vec::new();
    for l in 1..=layers {
        let names: Vec<String> = (0..width).map(|i| format!("n{l}_{i}")).collect();
        let below: Vec<&String> = by_layer.iter().flatten().collect();
        for name in &names {
            let k = rng.gen_range(1..=max_out.min(below.len()));
            for &parent in below.choose_multiple(&mut rng, k) {
                edges.push((name.clone(), parent.clone(), rng.gen_range(1..=10)));
            }
        }
        by_layer.push(names);
    }
    Taxonomy::from_edges(edges)
}

/// Parameters of the planted-list benchmark.
#[derive(Clone, Copy, Debug)]
pub struct PlantedShape {
    pub lists: usize,
    pub members: usize,
    pub generals: usize,
    /// Entities attached to general concepts only.
    pub distractors: usize,
    /// Size of the pool of small noise concepts.
    pub noise_concepts: usize,
    /// Probability that a list member has the edge to its own fine concept.
    pub fine_edge_prob: f64,
    /// Outsiders in each list's small overlapping concept (0 disables it).
    pub spurious_outsiders: usize,
    /// Probability that a list member belongs to the overlapping concept.
    pub spurious_member_prob: f64,
}

impl Default for PlantedShape {
    fn default() -> Self {
        PlantedShape { lists: 30, members: 10, generals: 5, distractors: 300, noise_concepts: 120, fine_edge_prob: 0.8, spurious_outsiders: 4, spurious_member_prob: 0.9 }
    }
}

/// A taxonomy with planted lists and the lists themselves.
#[derive(Clone, Debug)]
pub struct PlantedBenchmark {
    pub taxonomy: Taxonomy,
    pub lists: Vec<GroundTruthList>,
}

/// Builds `lists` fine concepts of `members` entities each. Every fine
/// concept sits under one of `generals` broad concepts (and a second, shared
/// parent), members also link straight to their broad concept and to a few
/// small noise concepts shared with distractors and other lists. Some
/// members miss their fine edge. Each list also gets a small overlapping
/// concept `spur_{l}` holding most members with little mass plus a few
/// distractors with a lot, which rewards penalizing popularity too much.
pub fn planted_benchmark(seed: u64, shape: &PlantedShape) -> Result<PlantedBenchmark> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<Edge> = Vec::new();
    let noise: Vec<String> = (0..shape.noise_concepts).map(|i| format!("noise_{i}")).collect();
    let general = |g: usize| format!("general_{g}");
    let mut lists = Vec::with_capacity(shape.lists);

    for l in 0..shape.lists {
        let fine = format!("fine_{l}");
        let g = l % shape.generals;
        edges.push((fine.clone(), general(g), rng.gen_range(2..=4)));
        edges.push((fine.clone(), "topic".to_string(), rng.gen_range(6..=10)));
        let mut members = Vec::with_capacity(shape.members);
        for m in 0..shape.members {
            let e = format!("item_{l}_{m}");
            if m < 2 || rng.gen_bool(shape.fine_edge_prob) {
                edges.push((e.clone(), fine.clone(), rng.gen_range(15..=30)));
            }
            edges.push((e.clone(), general(g), rng.gen_range(3..=8)));
            let k = rng.gen_range(1..=2);
            for n in noise.choose_multiple(&mut rng, k) {
                edges.push((e.clone(), n.clone(), rng.gen_range(1..=3)));
            }
            if shape.spurious_outsiders > 0 && rng.gen_bool(shape.spurious_member_prob) {
                edges.push((e.clone(), format!("spur_{l}"), rng.gen_range(2..=4)));
            }
            members.push(e);
        }
        lists.push(GroundTruthList { name: fine, members });
    }
    for l in 0..shape.lists {
        for _ in 0..shape.spurious_outsiders {
            let d = rng.gen_range(0..shape.distractors.max(1));
            edges.push((format!("other_{d}"), format!("spur_{l}"), rng.gen_range(5..=10)));
        }
    }
    for d in 0..shape.distractors {
        let e = format!("other_{d}");
        edges.push((e.clone(), general(rng.gen_range(0..shape.generals)), rng.gen_range(10..=40)));
        if rng.gen_bool(0.5) {
            edges.push((e.clone(), noise.choose(&mut rng).expect("noise pool").clone(), rng.gen_range(2..=6)));
        }
    }
    Ok(PlantedBenchmark { taxonomy: Taxonomy::from_edges(edges)?, lists })
}

/// Streams a large synthetic taxonomy as TSV: `entities` entities with
/// `per_entity` edges each into a pool of `concepts` concepts (Zipf-like
/// popularity), plus a sparse concept hierarchy. Returns the edge count.
pub fn write_large_taxonomy<W: Write>(
    mut out: W,
    seed: u64,
    entities: usize,
    concepts: usize,
    per_entity: usize,
) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut written = 0;
    for c in 0..concepts {
        if c + 1 < concepts && rng.gen_bool(0.3) {
            let parent = rng.gen_range(c + 1..concepts);
            writeln!(out, "concept {c}\tconcept {parent}\t{}", rng.gen_range(1..=50))?;
            written += 1;
        }
    }
    let mut picked: Vec<usize> = Vec::with_capacity(per_entity);
    for e in 0..entities {
        picked.clear();
        while picked.len() < per_entity {
            // Squaring a uniform draw skews picks towards low (popular) ids.
            let u: f64 = rng.gen();
            let c = ((u * u) * concepts as f64) as usize;
            if !picked.contains(&c) {
                picked.push(c);
            }
        }
        for &c in &picked {
            writeln!(out, "entity {e}\tconcept {c}\t{}", rng.gen_range(1..=100))?;
            written += 1;
        }
    }
    Ok(written)
}
