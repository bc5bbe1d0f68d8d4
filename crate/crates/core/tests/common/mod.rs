//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the scoring, posterior or hitting-time code it is used to check.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use taxo_suggest::granularity::ConceptSelection;
use taxo_suggest::ranking::{ModelConfig, RankedSuggestions, RankingModel};
use taxo_suggest::{ConceptModel, Taxonomy, TermId};

pub const T0: &str = include_str!("../../fixtures/t0.tsv");
pub const T1: &str = include_str!("../../fixtures/t1.tsv");

pub fn t0() -> Taxonomy {
    Taxonomy::parse_tsv(T0).unwrap()
}

pub fn id(t: &Taxonomy, name: &str) -> TermId {
    t.id(name).unwrap_or_else(|| panic!("unknown term {name}"))
}

/// Concepts of `e` found by scanning every term, not the adjacency lists.
pub fn concepts_by_scan(t: &Taxonomy, e: TermId) -> Vec<TermId> {
    t.terms().filter(|&c| t.count(e, c) > 0).collect()
}

/// `1 - Π_j (1 - n(e_j,c)/n_hypo(e_j))` for every concept touched by `q`.
pub fn noisy_or_closed_form(t: &Taxonomy, q: &[TermId]) -> BTreeMap<TermId, f64> {
    let mut concepts = BTreeSet::new();
    for &e in q {
        concepts.extend(concepts_by_scan(t, e));
    }
    concepts
        .into_iter()
        .map(|c| {
            let miss: f64 = q
                .iter()
                .map(|&e| 1.0 - t.count(e, c) as f64 / t.n_hypo(e) as f64)
                .product();
            (c, 1.0 - miss)
        })
        .collect()
}

/// Smoothed Naive Bayes in linear space, rescaled so the maximum is 1.
pub fn bayes_direct(t: &Taxonomy, q: &[TermId], lambda: f64) -> BTreeMap<TermId, f64> {
    let total: f64 = t.terms().map(|x| t.n_hyper(x) as f64).sum();
    let mut concepts = BTreeSet::new();
    for &e in q {
        concepts.extend(concepts_by_scan(t, e));
    }
    let raw: Vec<(TermId, f64)> = concepts
        .into_iter()
        .map(|c| {
            let n_c = t.n_hyper(c) as f64;
            let mut w = n_c / total;
            for &e in q {
                let n = t.count(e, c) as f64;
                w *= if n > 0.0 { lambda * n / n_c } else { (1.0 - lambda) * t.n_hypo(e) as f64 / total };
            }
            (c, w)
        })
        .collect();
    let max = raw.iter().map(|x| x.1).fold(0.0, f64::max);
    raw.into_iter().map(|(c, w)| (c, w / max)).collect()
}

/// Capped hitting times to `target` on an acyclic graph by memoized
/// recursion: `h = min(cap, 1 + Σ p(x→y) h(y))`, dead ends at `cap`.
pub fn dag_hitting(t: &Taxonomy, target: TermId, cap: f64) -> HashMap<TermId, f64> {
    fn go(t: &Taxonomy, x: TermId, target: TermId, cap: f64, memo: &mut HashMap<TermId, f64>) -> f64 {
        if x == target {
            return 0.0;
        }
        if let Some(&v) = memo.get(&x) {
            return v;
        }
        let up = t.concepts_of(x);
        let v = if up.is_empty() {
            cap
        } else {
            let n = t.n_hypo(x) as f64;
            let mut acc = 1.0;
            for &(y, c) in up {
                acc += c as f64 / n * go(t, y, target, cap, memo);
            }
            acc.min(cap)
        };
        memo.insert(x, v);
        v
    }
    let mut memo = HashMap::new();
    for x in t.terms() {
        go(t, x, target, cap, &mut memo);
    }
    memo.insert(target, 0.0);
    memo
}

/// Every ancestor of the query entities.
pub fn ancestors(t: &Taxonomy, q: &[TermId]) -> BTreeSet<TermId> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<TermId> = q.to_vec();
    while let Some(x) = stack.pop() {
        for &(c, _) in t.concepts_of(x) {
            if seen.insert(c) {
                stack.push(c);
            }
        }
    }
    seen
}

fn suggestible(t: &Taxonomy, e: TermId, ratio: f64) -> bool {
    let hypo = t.n_hypo(e) as f64;
    hypo > 0.0 && t.n_hyper(e) as f64 <= ratio * hypo
}

fn posterior_oracle(t: &Taxonomy, q: &[TermId], cfg: &ModelConfig) -> BTreeMap<TermId, f64> {
    match cfg.concept_model {
        ConceptModel::NoisyOr => noisy_or_closed_form(t, q),
        ConceptModel::Bayes => bayes_direct(t, q, cfg.smoothing.lambda()),
    }
}

/// Scores every suggestible entity outside the query that has a concept in
/// the effective support. Only `δ` is taken from the library's selection;
/// posteriors, supports and scores are recomputed here.
pub fn brute_force_model(t: &Taxonomy, selection: &ConceptSelection, q: &[TermId], cfg: &ModelConfig) -> BTreeMap<TermId, f64> {
    let mut effective: Vec<(TermId, f64)> = posterior_oracle(t, q, cfg)
        .into_iter()
        .map(|(c, w)| (c, w * selection.delta(c)))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    if cfg.model == RankingModel::Rem {
        let z: f64 = effective.iter().map(|x| x.1).sum();
        effective.iter_mut().for_each(|x| x.1 /= z);
    }
    let mut out = BTreeMap::new();
    for e in t.terms() {
        if q.contains(&e) || !suggestible(t, e, cfg.concept_ratio) {
            continue;
        }
        if !effective.iter().any(|&(c, _)| t.count(e, c) > 0) {
            continue;
        }
        let score = match cfg.model {
            RankingModel::Prm => effective
                .iter()
                .map(|&(c, w)| t.count(e, c) as f64 / t.n_hyper(c) as f64 * w)
                .sum(),
            RankingModel::Rem => {
                let mut qe = q.to_vec();
                qe.push(e);
                let ext = posterior_oracle(t, &qe, cfg);
                let masked: Vec<f64> = effective
                    .iter()
                    .map(|&(c, _)| ext.get(&c).copied().unwrap_or(0.0) * selection.delta(c) + 1e-12)
                    .collect();
                let z: f64 = masked.iter().sum();
                effective
                    .iter()
                    .zip(&masked)
                    .map(|(&(_, p), &m)| p * (p / (m / z)).ln())
                    .sum::<f64>()
                    .max(0.0)
            }
        };
        out.insert(e, score);
    }
    out
}

/// Cosine between `Σ_j n(e_j,c)/n(c)` and `n(e,c)/n(c)` for every entity
/// sharing a concept with the query.
pub fn brute_force_knn(t: &Taxonomy, q: &[TermId], ratio: f64) -> BTreeMap<TermId, f64> {
    let mut qv: BTreeMap<TermId, f64> = BTreeMap::new();
    for &e in q {
        for c in concepts_by_scan(t, e) {
            *qv.entry(c).or_insert(0.0) += t.count(e, c) as f64 / t.n_hyper(c) as f64;
        }
    }
    let qn = qv.values().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = BTreeMap::new();
    for e in t.terms() {
        if q.contains(&e) || !suggestible(t, e, ratio) {
            continue;
        }
        let ev: Vec<(TermId, f64)> = concepts_by_scan(t, e)
            .into_iter()
            .map(|c| (c, t.count(e, c) as f64 / t.n_hyper(c) as f64))
            .collect();
        let dot: f64 = ev.iter().map(|(c, v)| v * qv.get(c).copied().unwrap_or(0.0)).sum();
        if dot > 0.0 {
            let en = ev.iter().map(|x| x.1 * x.1).sum::<f64>().sqrt();
            out.insert(e, dot / (qn * en));
        }
    }
    out
}

/// Checks that a ranked list covers exactly the oracle's entities, agrees on
/// every score, and is ordered by oracle score (ties within `tol` by name).
pub fn check_ranking(
    t: &Taxonomy,
    ranked: &RankedSuggestions,
    oracle: &BTreeMap<TermId, f64>,
    descending: bool,
    tol: f64,
) -> Result<(), String> {
    let got: BTreeSet<TermId> = ranked.items.iter().map(|s| s.id).collect();
    let want: BTreeSet<TermId> = oracle.keys().copied().collect();
    if got != want {
        return Err(format!("entity sets differ: got {} want {}", got.len(), want.len()));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
    for s in &ranked.items {
        let o = oracle[&s.id];
        if !close(s.score, o) {
            return Err(format!("score of {}: {} vs oracle {}", s.entity, s.score, o));
        }
    }
    for w in ranked.items.windows(2) {
        let (a, b) = (oracle[&w[0].id], oracle[&w[1].id]);
        let (x, y) = (w[0].score, w[1].score);
        let ok = if close(a, b) {
            // Near-ties may be split by the exact scores, otherwise by name.
            if x == y {
                t.name(w[0].id) < t.name(w[1].id)
            } else {
                (x > y) == descending
            }
        } else if descending {
            a > b
        } else {
            a < b
        };
        if !ok {
            return Err(format!("{} ({a}) ranked above {} ({b})", w[0].entity, w[1].entity));
        }
    }
    Ok(())
}
