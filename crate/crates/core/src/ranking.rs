//! Entity ranking: probabilistic relevance (PRM), relative entropy (REM) and
//! the KNN cosine baseline.
//!
//! Both probabilistic rankers share a latent layer, [`ScoredConceptContext`],
//! that combines the concept posterior with the granularity weights:
//!
//! * PRM: `rel(q,e) = Σ_c P(e|c) · P(c|q) · δ(c)`, larger is better.
//! * REM: `KL(P(C|q) ‖ P(C|q,e))` over the effective support, smaller is
//!   better. Both distributions are reweighted by `δ` and normalized over the
//!   support before the divergence is taken.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::granularity::{
    delta_pp, select_fine_grained_with, ConceptSelection, Granularity, HittingParams, HittingSource,
};
use crate::inference::{normalize, posterior, posterior_bayes, ConceptDistribution, ConceptModel, Query, SmoothingConfig};
use crate::taxonomy::{Taxonomy, TermId};

/// Floor added to the masked extended posterior before normalization.
pub const REM_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RankingModel {
    /// Probabilistic relevance model.
    Prm,
    /// Relative entropy model.
    Rem,
}

/// One point of the model matrix plus its tuning knobs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelConfig {
    pub model: RankingModel,
    pub concept_model: ConceptModel,
    pub granularity: Granularity,
    /// Size of the fine-grained concept set.
    pub k: usize,
    pub smoothing: SmoothingConfig,
    pub hitting: HittingParams,
    pub top_n: usize,
    /// A term is not suggested when `n_hyper > concept_ratio · n_hypo`.
    pub concept_ratio: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            model: RankingModel::Prm,
            concept_model: ConceptModel::NoisyOr,
            granularity: Granularity::FineGrained,
            k: 50,
            smoothing: SmoothingConfig::default(),
            hitting: HittingParams::default(),
            top_n: 10,
            concept_ratio: 1.0,
        }
    }
}

impl ModelConfig {
    pub fn new(model: RankingModel, concept_model: ConceptModel, granularity: Granularity) -> Self {
        ModelConfig { model, concept_model, granularity, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.top_n == 0 {
            return Err(Error::InvalidParameter("top_n must be >= 1".to_string()));
        }
        if self.granularity == Granularity::FineGrained {
            if self.k == 0 {
                return Err(Error::InvalidParameter("k must be >= 1".to_string()));
            }
            self.hitting.validate()?;
        }
        if !(self.concept_ratio >= 0.0) {
            return Err(Error::InvalidParameter("concept_ratio must be >= 0".to_string()));
        }
        Ok(())
    }

    /// All eight model/granularity/concept-model combinations, sharing the
    /// remaining settings of `base`.
    pub fn variants(base: &ModelConfig) -> Vec<ModelConfig> {
        let mut out = Vec::with_capacity(8);
        for model in [RankingModel::Prm, RankingModel::Rem] {
            for granularity in [Granularity::PopularityPenalty, Granularity::FineGrained] {
                for concept_model in [ConceptModel::Bayes, ConceptModel::NoisyOr] {
                    out.push(ModelConfig { model, concept_model, granularity, ..*base });
                }
            }
        }
        out
    }

    /// Short label such as `prm+fg+no`.
    pub fn label(&self) -> String {
        let m = match self.model {
            RankingModel::Prm => "prm",
            RankingModel::Rem => "rem",
        };
        let g = match self.granularity {
            Granularity::PopularityPenalty => "pp",
            Granularity::FineGrained => "fg",
        };
        let c = match self.concept_model {
            ConceptModel::Bayes => "ba",
            ConceptModel::NoisyOr => "no",
        };
        format!("{m}+{g}+{c}")
    }
}

/// A ranking method: one of the probabilistic models or the KNN baseline.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Method {
    Model(ModelConfig),
    Knn,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Model(cfg) => cfg.label(),
            Method::Knn => "knn".to_string(),
        }
    }

    /// Whether larger scores rank first.
    pub fn descending(&self) -> bool {
        !matches!(self, Method::Model(ModelConfig { model: RankingModel::Rem, .. }))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Posterior, `δ` and their pointwise product over the scoring support.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredConceptContext {
    pub query: Query,
    pub concept_model: ConceptModel,
    pub smoothing: SmoothingConfig,
    pub posterior: ConceptDistribution,
    pub selection: ConceptSelection,
    /// `P(c|q)·δ(c)`; normalized when built for REM.
    pub effective: ConceptDistribution,
}

/// Builds the latent concept layer with online hitting times.
pub fn build_context(t: &Taxonomy, q: &Query, cfg: &ModelConfig) -> Result<ScoredConceptContext> {
    build_context_with(t, q, cfg, &HittingSource::Online(cfg.hitting), None)
}

/// Builds the latent concept layer. A caller that already maintains the
/// posterior for `q` (the REPL does, for Noisy-Or) can pass it in.
pub fn build_context_with(
    t: &Taxonomy,
    q: &Query,
    cfg: &ModelConfig,
    source: &HittingSource<'_>,
    known_posterior: Option<&ConceptDistribution>,
) -> Result<ScoredConceptContext> {
    cfg.validate()?;
    let posterior = match known_posterior {
        Some(p) => p.clone(),
        None => posterior(t, q, cfg.concept_model, cfg.smoothing)?,
    };
    let selection = match cfg.granularity {
        Granularity::PopularityPenalty => delta_pp(t, posterior.support())?,
        Granularity::FineGrained => select_fine_grained_with(t, q, cfg.k, source)?,
    };
    let effective =
        ConceptDistribution::from_weights(posterior.iter().map(|(c, w)| (c, w * selection.delta(c))));
    if effective.is_empty() {
        return Err(Error::Unconceptualizable);
    }
    let effective = match cfg.model {
        RankingModel::Prm => effective,
        RankingModel::Rem => normalize(&effective)?,
    };
    Ok(ScoredConceptContext {
        query: q.clone(),
        concept_model: cfg.concept_model,
        smoothing: cfg.smoothing,
        posterior,
        selection,
        effective,
    })
}

/// `rel(q,e) = Σ_{c ∈ support} P(e|c) · effective(c)`.
pub fn prm_score(t: &Taxonomy, ctx: &ScoredConceptContext, e: TermId) -> Result<f64> {
    let concepts = t.try_concepts_of(e)?;
    Ok(concepts
        .iter()
        .filter_map(|&(c, n)| {
            let w = ctx.effective.weight(c);
            (w > 0.0).then(|| n as f64 / t.n_hyper(c) as f64 * w)
        })
        .fold(0.0, |a, x| a + x))
}

/// `KL(P(C|q) ‖ P(C|q,e))` over the effective support, natural log,
/// clamped at zero.
pub fn rem_score(t: &Taxonomy, ctx: &ScoredConceptContext, e: TermId) -> Result<f64> {
    if !t.contains(e) {
        return Err(Error::UnknownTerm(format!("#{}", e.index())));
    }
    if ctx.query.contains(e) {
        return Err(Error::InvalidParameter(format!("`{}` is already in the query", t.name(e))));
    }
    if ctx.effective.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let p = if ctx.effective.is_normalized() { ctx.effective.clone() } else { normalize(&ctx.effective)? };

    let extended: Vec<(TermId, f64)> = match ctx.concept_model {
        ConceptModel::NoisyOr => {
            let n_e = t.n_hypo(e);
            p.support()
                .map(|c| {
                    let w = ctx.posterior.weight(c);
                    let pe = if n_e == 0 { 0.0 } else { t.count(e, c) as f64 / n_e as f64 };
                    (c, w + pe * (1.0 - w))
                })
                .collect()
        }
        ConceptModel::Bayes => {
            let ext = posterior_bayes(t, &ctx.query.with(e), ctx.smoothing)?;
            p.support().map(|c| (c, ext.weight(c))).collect()
        }
    };
    let mut masked: Vec<f64> = extended
        .iter()
        .map(|&(c, w)| w * ctx.selection.delta(c) + REM_EPSILON)
        .collect();
    let z: f64 = masked.iter().sum();
    masked.iter_mut().for_each(|m| *m /= z);
    let p: Vec<f64> = p.iter().map(|(_, w)| w).collect();
    Ok(relative_entropy(&p, &masked))
}

/// `Σ p_i ln(p_i / q_i)` over aligned, normalized distributions, clamped at
/// zero. Terms with `p_i = 0` contribute nothing.
pub fn relative_entropy(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let kl: f64 = p
        .iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .fold(0.0, |a, x| a + x);
    if kl > 0.0 {
        kl
    } else {
        0.0
    }
}

/// Whether a term may be suggested: it has hyponym-role mass that is not
/// outweighed by its hypernym-role mass.
pub fn is_suggestible(t: &Taxonomy, e: TermId, concept_ratio: f64) -> bool {
    let n_hypo = t.n_hypo(e);
    n_hypo > 0 && !(t.n_hyper(e) as f64 > concept_ratio * n_hypo as f64)
}

/// Hyponyms of the effective support, minus the query and concept-like terms,
/// sorted by TermId.
pub fn candidate_entities(t: &Taxonomy, ctx: &ScoredConceptContext, concept_ratio: f64) -> Vec<TermId> {
    let mut out: BTreeSet<TermId> = BTreeSet::new();
    for c in ctx.effective.support() {
        out.extend(t.entities_of(c).iter().map(|&(e, _)| e));
    }
    out.into_iter()
        .filter(|&e| !ctx.query.contains(e) && is_suggestible(t, e, concept_ratio))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Suggestion {
    #[serde(skip)]
    pub id: TermId,
    pub entity: String,
    pub score: f64,
}

/// An ordered suggestion list.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankedSuggestions {
    pub items: Vec<Suggestion>,
    pub query: Vec<String>,
    pub method: String,
}

impl RankedSuggestions {
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|s| s.entity.as_str())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `rank<TAB>entity<TAB>score` lines, 1-based ranks, six decimals.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, s) in self.items.iter().enumerate() {
            writeln!(out, "{}\t{}\t{:.6}", i + 1, s.entity, s.score)?;
        }
        Ok(())
    }
}

/// Sorts scored entities by the method's direction, ties by ascending name.
pub fn rank_scored(t: &Taxonomy, mut scored: Vec<(TermId, f64)>, descending: bool) -> Vec<(TermId, f64)> {
    scored.sort_by(|a, b| {
        let by_score = if descending { b.1.total_cmp(&a.1) } else { a.1.total_cmp(&b.1) };
        match by_score {
            Ordering::Equal => t.name(a.0).cmp(t.name(b.0)),
            other => other,
        }
    });
    scored
}

fn finish(t: &Taxonomy, q: &Query, method: Method, scored: Vec<(TermId, f64)>, top_n: usize) -> RankedSuggestions {
    let mut ranked = rank_scored(t, scored, method.descending());
    ranked.truncate(top_n);
    RankedSuggestions {
        items: ranked
            .into_iter()
            .map(|(id, score)| Suggestion { id, entity: t.name(id).to_string(), score })
            .collect(),
        query: q.names(t).map(str::to_string).collect(),
        method: method.label(),
    }
}

/// Scores every candidate of an existing context and ranks them.
pub fn rank_context(t: &Taxonomy, ctx: &ScoredConceptContext, cfg: &ModelConfig) -> Result<RankedSuggestions> {
    let candidates = candidate_entities(t, ctx, cfg.concept_ratio);
    let scored = candidates
        .par_iter()
        .map(|&e| {
            let s = match cfg.model {
                RankingModel::Prm => prm_score(t, ctx, e)?,
                RankingModel::Rem => rem_score(t, ctx, e)?,
            };
            Ok((e, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish(t, &ctx.query, Method::Model(*cfg), scored, cfg.top_n))
}

/// End-to-end suggestion with online hitting times.
pub fn suggest(t: &Taxonomy, q: &Query, cfg: &ModelConfig) -> Result<RankedSuggestions> {
    suggest_with(t, q, cfg, &HittingSource::Online(cfg.hitting))
}

/// End-to-end suggestion with an explicit hitting-time source.
pub fn suggest_with(t: &Taxonomy, q: &Query, cfg: &ModelConfig, source: &HittingSource<'_>) -> Result<RankedSuggestions> {
    let ctx = build_context_with(t, q, cfg, source, None)?;
    rank_context(t, &ctx, cfg)
}

/// `P(q|c) = Σ_{e∈q} n(e,c) / n(c)` over the query's concepts.
pub fn query_concept_vector(t: &Taxonomy, q: &Query) -> BTreeMap<TermId, f64> {
    let mut counts: BTreeMap<TermId, u64> = BTreeMap::new();
    for &e in q.entities() {
        for &(c, n) in t.concepts_of(e) {
            *counts.entry(c).or_insert(0) += n;
        }
    }
    counts.into_iter().map(|(c, n)| (c, n as f64 / t.n_hyper(c) as f64)).collect()
}

/// Cosine similarity between the query vector and `C(e) = {P(e|c)}`.
pub fn knn_similarity(t: &Taxonomy, query_vec: &BTreeMap<TermId, f64>, query_norm: f64, e: TermId) -> f64 {
    let mut dot = 0.0;
    let mut norm = 0.0;
    for &(c, n) in t.concepts_of(e) {
        let v = n as f64 / t.n_hyper(c) as f64;
        norm += v * v;
        if let Some(&qv) = query_vec.get(&c) {
            dot += qv * v;
        }
    }
    if dot == 0.0 {
        0.0
    } else {
        dot / (query_norm * norm.sqrt())
    }
}

/// KNN baseline: cosine between concept-typicality vectors, restricted to
/// entities sharing at least one concept with the query.
pub fn knn_baseline(t: &Taxonomy, q: &Query, top_n: usize, concept_ratio: f64) -> Result<RankedSuggestions> {
    if top_n == 0 {
        return Err(Error::InvalidParameter("top_n must be >= 1".to_string()));
    }
    let qv = query_concept_vector(t, q);
    if qv.is_empty() {
        return Err(Error::Unconceptualizable);
    }
    let q_norm = qv.values().map(|v| v * v).sum::<f64>().sqrt();
    let mut candidates: BTreeSet<TermId> = BTreeSet::new();
    for &c in qv.keys() {
        candidates.extend(t.entities_of(c).iter().map(|&(e, _)| e));
    }
    let candidates: Vec<TermId> = candidates
        .into_iter()
        .filter(|&e| !q.contains(e) && is_suggestible(t, e, concept_ratio))
        .collect();
    let scored = candidates
        .par_iter()
        .map(|&e| (e, knn_similarity(t, &qv, q_norm, e)))
        .collect();
    Ok(finish(t, q, Method::Knn, scored, top_n))
}

/// Runs any [`Method`], returning at most `top_n` suggestions.
pub fn run_method(
    t: &Taxonomy,
    q: &Query,
    method: &Method,
    source: &HittingSource<'_>,
    top_n: usize,
) -> Result<RankedSuggestions> {
    match method {
        Method::Model(cfg) => suggest_with(t, q, &ModelConfig { top_n, ..*cfg }, source),
        Method::Knn => knn_baseline(t, q, top_n, ModelConfig::default().concept_ratio),
    }
}
