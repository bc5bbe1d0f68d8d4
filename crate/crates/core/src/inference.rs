//! Concept posteriors `P(c|q)` for a seed set.
//!
//! Two estimators are provided: a smoothed Naive Bayes posterior and a
//! Noisy-Or combination. The Noisy-Or posterior can be extended by one entity
//! at a time with [`extend_noisy_or`], which is what the REPL and the
//! relative-entropy ranker use.
//!
//! The candidate support of both estimators is the union of the query
//! entities' direct concepts.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::taxonomy::{Taxonomy, TermId};

/// A non-empty, duplicate-free, ordered set of resolvable seed entities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Query {
    entities: Vec<TermId>,
}

impl Query {
    /// Builds a query from term ids, dropping duplicates while keeping order.
    pub fn new(t: &Taxonomy, ids: impl IntoIterator<Item = TermId>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut entities = Vec::new();
        let mut bad = Vec::new();
        for id in ids {
            if !t.contains(id) {
                bad.push(format!("#{}", id.index()));
            } else if t.n_hypo(id) == 0 {
                bad.push(t.name(id).to_string());
            } else if seen.insert(id) {
                entities.push(id);
            }
        }
        if !bad.is_empty() {
            return Err(Error::UnresolvableEntities(bad));
        }
        if entities.is_empty() {
            return Err(Error::EmptyQuery);
        }
        Ok(Query { entities })
    }

    /// Resolves names against the taxonomy. Every name that is unknown or has
    /// no hypernyms is reported in the error.
    pub fn resolve<S: AsRef<str>>(t: &Taxonomy, names: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut ids = Vec::new();
        let mut bad = Vec::new();
        for name in names {
            let name = name.as_ref();
            match t.id(name) {
                Some(id) if t.n_hypo(id) > 0 => ids.push(id),
                _ => bad.push(name.trim().to_string()),
            }
        }
        if !bad.is_empty() {
            return Err(Error::UnresolvableEntities(bad));
        }
        Self::new(t, ids)
    }

    pub fn entities(&self) -> &[TermId] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn contains(&self, id: TermId) -> bool {
        self.entities.contains(&id)
    }

    /// `q ∪ {e}`, with `e` appended last.
    pub fn with(&self, e: TermId) -> Query {
        let mut entities = self.entities.clone();
        if !entities.contains(&e) {
            entities.push(e);
        }
        Query { entities }
    }

    pub fn names<'a>(&'a self, t: &'a Taxonomy) -> impl Iterator<Item = &'a str> + 'a {
        self.entities.iter().map(move |&id| t.name(id))
    }
}

/// Which estimator produces `P(c|q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ConceptModel {
    /// Smoothed Naive Bayes.
    Bayes,
    NoisyOr,
}

/// Smoothing weight `λ` of the Naive Bayes posterior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothingConfig {
    lambda: f64,
}

impl SmoothingConfig {
    pub const DEFAULT_LAMBDA: f64 = 0.9;

    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda < 1.0 {
            Ok(SmoothingConfig { lambda })
        } else {
            Err(Error::InvalidParameter(format!("lambda must lie in (0, 1), got {lambda}")))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        SmoothingConfig { lambda: Self::DEFAULT_LAMBDA }
    }
}

/// Sparse concept weights; concepts with zero weight are absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConceptDistribution {
    weights: BTreeMap<TermId, f64>,
    normalized: bool,
}

impl ConceptDistribution {
    /// Builds an unnormalized distribution, dropping non-positive weights.
    pub fn from_weights(weights: impl IntoIterator<Item = (TermId, f64)>) -> Self {
        ConceptDistribution {
            weights: weights.into_iter().filter(|&(_, w)| w > 0.0).collect(),
            normalized: false,
        }
    }

    pub fn weight(&self, c: TermId) -> f64 {
        self.weights.get(&c).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (TermId, f64)> + '_ {
        self.weights.iter().map(|(&c, &w)| (c, w))
    }

    pub fn support(&self) -> impl Iterator<Item = TermId> + '_ {
        self.weights.keys().copied()
    }

    pub fn contains(&self, c: TermId) -> bool {
        self.weights.contains_key(&c)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Writes `concept<TAB>weight` lines, heaviest first, ties by name.
    pub fn write_tsv<W: Write>(&self, t: &Taxonomy, mut out: W) -> Result<()> {
        for (c, w) in self.sorted_by_weight(t) {
            writeln!(out, "{}\t{:.6}", t.name(c), w)?;
        }
        Ok(())
    }

    /// Entries ordered by descending weight, ties by ascending concept name.
    pub fn sorted_by_weight(&self, t: &Taxonomy) -> Vec<(TermId, f64)> {
        let mut rows: Vec<(TermId, f64)> = self.iter().collect();
        rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| t.name(a.0).cmp(t.name(b.0))));
        rows
    }
}

/// Divides every weight by the total mass.
pub fn normalize(dist: &ConceptDistribution) -> Result<ConceptDistribution> {
    if dist.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let total = dist.total();
    Ok(ConceptDistribution {
        weights: dist.weights.iter().map(|(&c, &w)| (c, w / total)).collect(),
        normalized: true,
    })
}

/// Noisy-Or posterior `P(c|q) = 1 - Π_j (1 - P(c|e_j))`.
///
/// Evaluated as a left fold of [`extend_noisy_or`] over the query order, so an
/// incrementally grown posterior is bit-identical to the batch one.
pub fn posterior_noisy_or(t: &Taxonomy, q: &Query) -> Result<ConceptDistribution> {
    let mut dist = ConceptDistribution::default();
    for &e in q.entities() {
        dist = extend_noisy_or(&dist, t, e)?;
    }
    Ok(dist)
}

/// `P(c|q,e) = P(c|q) + P(c|e) - P(c|q) P(c|e)` for every concept of `e`;
/// all other weights are carried over unchanged.
pub fn extend_noisy_or(dist: &ConceptDistribution, t: &Taxonomy, e: TermId) -> Result<ConceptDistribution> {
    if dist.normalized {
        return Err(Error::InvalidParameter(
            "noisy-or extension needs an unnormalized posterior".to_string(),
        ));
    }
    let concepts = t.try_concepts_of(e)?;
    let n_e = t.n_hypo(e);
    if n_e == 0 {
        return Err(Error::NoHypernyms(t.name(e).to_string()));
    }
    let mut weights = dist.weights.clone();
    for &(c, count) in concepts {
        let p = count as f64 / n_e as f64;
        let w = weights.entry(c).or_insert(0.0);
        // Same value as w + p - wp, but never rounds below w.
        *w += p * (1.0 - *w);
    }
    Ok(ConceptDistribution { weights, normalized: false })
}

/// Smoothed Naive Bayes posterior over `∪ c(e_j)`:
///
/// `P(c|q) ∝ P(c) Π_{n(e_j,c)>0} λ P(e_j|c) Π_{n(e_j,c)=0} (1-λ) P(e_j)`.
///
/// Accumulated in log space; the largest weight is rescaled to 1.
pub fn posterior_bayes(t: &Taxonomy, q: &Query, s: SmoothingConfig) -> Result<ConceptDistribution> {
    let total = t.total_hyper_mass() as f64;
    let lambda = s.lambda();
    let ln_lambda = lambda.ln();
    let ln_miss: Vec<f64> = q
        .entities()
        .iter()
        .map(|&e| ((1.0 - lambda) * t.n_hypo(e) as f64 / total).ln())
        .collect();

    let mut support: Vec<TermId> = Vec::new();
    for &e in q.entities() {
        support.extend(t.try_concepts_of(e)?.iter().map(|&(c, _)| c));
    }
    support.sort_unstable();
    support.dedup();

    let logs: Vec<(TermId, f64)> = support
        .into_iter()
        .map(|c| {
            let n_c = t.n_hyper(c) as f64;
            let mut lw = (n_c / total).ln();
            for (j, &e) in q.entities().iter().enumerate() {
                let n = t.count(e, c);
                lw += if n > 0 { ln_lambda + (n as f64 / n_c).ln() } else { ln_miss[j] };
            }
            (c, lw)
        })
        .collect();

    let max = logs.iter().map(|&(_, lw)| lw).fold(f64::NEG_INFINITY, f64::max);
    Ok(ConceptDistribution::from_weights(logs.into_iter().map(|(c, lw)| (c, (lw - max).exp()))))
}

/// Dispatches to the configured estimator.
pub fn posterior(t: &Taxonomy, q: &Query, model: ConceptModel, s: SmoothingConfig) -> Result<ConceptDistribution> {
    match model {
        ConceptModel::NoisyOr => posterior_noisy_or(t, q),
        ConceptModel::Bayes => posterior_bayes(t, q, s),
    }
}
