//! Ground-truth lists, query sampling, ranking metrics and the paired t-test
//! that checks the relative-entropy objective.
//!
//! Metrics use binary relevance against the held-out list members:
//!
//! * precision / recall / F1 at a cutoff `n_R` (default `|holdout|`),
//! * NDCG with gain `rel_i / log2(i + 1)`,
//! * precision@k.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use log::warn;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::granularity::HittingSource;
use crate::inference::{extend_noisy_or, posterior, posterior_bayes, ConceptDistribution, ConceptModel, Query, SmoothingConfig};
use crate::ranking::{is_suggestible, relative_entropy, run_method, Method, ModelConfig, REM_EPSILON};
use crate::stats::{paired_t_test, PairedTTest};
use crate::taxonomy::{normalize_name, Taxonomy, TermId};

/// A named set of entities that belong together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroundTruthList {
    pub name: String,
    pub members: Vec<String>,
}

/// Lists plus the warnings produced while reading them.
#[derive(Clone, Debug, Default)]
pub struct LoadedLists {
    pub lists: Vec<GroundTruthList>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ListFormat {
    /// `list_name<TAB>member`, one member per line.
    Tsv,
    /// `name: m1, m2, ...`, one list per line.
    Inline,
}

/// Reads ground-truth lists. The format is detected from the content and
/// must be consistent across the whole file.
pub fn load_lists<R: BufRead>(reader: R) -> Result<LoadedLists> {
    let mut format: Option<(ListFormat, usize)> = None;
    let mut order: Vec<String> = Vec::new();
    let mut members: HashMap<String, Vec<String>> = HashMap::new();
    let mut warnings = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let this = if line.contains('\t') {
            ListFormat::Tsv
        } else if line.contains(':') {
            ListFormat::Inline
        } else {
            return Err(Error::Malformed {
                line: line_no,
                reason: "expected `list<TAB>member` or `name: m1, m2, ...`".to_string(),
            });
        };
        match format {
            None => format = Some((this, line_no)),
            Some((f, first)) if f != this => {
                return Err(Error::MixedFormats(format!(
                    "line {first} and line {line_no} use different list formats"
                )))
            }
            _ => {}
        }
        let (name, items): (String, Vec<String>) = match this {
            ListFormat::Tsv => {
                let mut parts = line.splitn(2, '\t');
                let name = parts.next().unwrap_or("").trim().to_string();
                let member = parts.next().unwrap_or("");
                if member.contains('\t') {
                    return Err(Error::Malformed { line: line_no, reason: "too many fields".to_string() });
                }
                (name, vec![normalize_name(member)])
            }
            ListFormat::Inline => {
                let (name, rest) = line.split_once(':').unwrap_or((line.as_str(), ""));
                (name.trim().to_string(), rest.split(',').map(normalize_name).collect())
            }
        };
        if name.is_empty() {
            return Err(Error::Malformed { line: line_no, reason: "empty list name".to_string() });
        }
        let entry = members.entry(name.clone()).or_insert_with(|| {
            order.push(name.clone());
            Vec::new()
        });
        entry.extend(items.into_iter().filter(|m| !m.is_empty()));
    }

    let mut lists = Vec::new();
    for name in order {
        let raw = members.remove(&name).unwrap_or_default();
        let mut seen = HashSet::new();
        let mut uniq = Vec::new();
        for m in raw {
            if seen.insert(m.clone()) {
                uniq.push(m);
            } else {
                warnings.push(format!("list `{name}`: duplicate member `{m}` dropped"));
            }
        }
        if uniq.len() < 2 {
            warnings.push(format!("list `{name}`: fewer than 2 members, rejected"));
            continue;
        }
        lists.push(GroundTruthList { name, members: uniq });
    }
    for w in &warnings {
        warn!("{w}");
    }
    if lists.is_empty() {
        return Err(Error::NoLists);
    }
    Ok(LoadedLists { lists, warnings })
}

pub fn load_lists_path(path: impl AsRef<Path>) -> Result<LoadedLists> {
    load_lists(BufReader::new(File::open(path)?))
}

/// Keeps only members the taxonomy can use as query entities; lists left with
/// fewer than two members are dropped.
pub fn resolve_lists(t: &Taxonomy, lists: &[GroundTruthList]) -> Result<Vec<GroundTruthList>> {
    let out: Vec<GroundTruthList> = lists
        .iter()
        .filter_map(|l| {
            let members: Vec<String> = l
                .members
                .iter()
                .filter(|m| t.id(m).is_some_and(|id| t.n_hypo(id) > 0))
                .cloned()
                .collect();
            if members.len() < l.members.len() {
                warn!("list `{}`: {} members unknown to the taxonomy", l.name, l.members.len() - members.len());
            }
            (members.len() >= 2).then(|| GroundTruthList { name: l.name.clone(), members })
        })
        .collect();
    if out.is_empty() {
        return Err(Error::NoLists);
    }
    Ok(out)
}

/// One evaluation query: a seed subset of a list and the members held out.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalQuery {
    pub source: String,
    pub trial: usize,
    pub seeds: Vec<String>,
    pub holdout: Vec<String>,
    pub alpha: f64,
    pub rng_seed: u64,
}

/// `⌈α·n⌉`, robust to representation error in `α·n`.
pub fn seed_count(alpha: f64, n: usize) -> usize {
    ((alpha * n as f64) - 1e-9).ceil().max(1.0) as usize
}

/// Samples `trials` seed subsets of size `⌈α|L|⌉` from every list.
/// Lists whose seed set would leave nothing to hold out are skipped.
pub fn make_queries(lists: &[GroundTruthList], alpha: f64, rng_seed: u64, trials: usize) -> Result<Vec<EvalQuery>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::new();
    for list in lists {
        let n = list.members.len();
        let s = seed_count(alpha, n);
        if s >= n {
            warn!("list `{}`: {} seeds leave no holdout, skipped", list.name, s);
            continue;
        }
        for trial in 0..trials {
            let mut picked = index::sample(&mut rng, n, s).into_vec();
            picked.sort_unstable();
            let chosen: HashSet<usize> = picked.iter().copied().collect();
            out.push(EvalQuery {
                source: list.name.clone(),
                trial,
                seeds: picked.iter().map(|&i| list.members[i].clone()).collect(),
                holdout: (0..n).filter(|i| !chosen.contains(i)).map(|i| list.members[i].clone()).collect(),
                alpha,
                rng_seed,
            });
        }
    }
    Ok(out)
}

fn truth_set<S: AsRef<str>>(truth: &[S]) -> HashSet<&str> {
    truth.iter().map(|s| s.as_ref()).collect()
}

fn hits<S: AsRef<str>>(ranked: &[S], truth: &HashSet<&str>, cutoff: usize) -> usize {
    ranked.iter().take(cutoff).filter(|s| truth.contains(s.as_ref())).count()
}

/// Precision, recall and F1 of the top `n_r` entries.
pub fn precision_recall_f<S: AsRef<str>, T: AsRef<str>>(ranked: &[S], truth: &[T], n_r: usize) -> Result<(f64, f64, f64)> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter("empty truth set".to_string()));
    }
    if n_r == 0 {
        return Err(Error::InvalidParameter("n_R must be >= 1".to_string()));
    }
    let truth = truth_set(truth);
    let h = hits(ranked, &truth, n_r) as f64;
    let p = h / n_r as f64;
    let r = h / truth.len() as f64;
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    Ok((p, r, f))
}

/// Binary-relevance NDCG at `depth`.
pub fn ndcg<S: AsRef<str>, T: AsRef<str>>(ranked: &[S], truth: &[T], depth: usize) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter("empty truth set".to_string()));
    }
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be >= 1".to_string()));
    }
    let truth = truth_set(truth);
    let dcg: f64 = ranked
        .iter()
        .take(depth)
        .enumerate()
        .filter(|(_, s)| truth.contains(s.as_ref()))
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        // An empty `sum()` of floats is -0.0.
        .fold(0.0, |a, g| a + g);
    let ideal: f64 = (0..truth.len().min(depth)).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    Ok(dcg / ideal)
}

/// Mean of per-query NDCG values; zero for no queries.
pub fn mndcg(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// `|top-k ∩ truth| / k`; zero when `k == 0`.
pub fn precision_at<S: AsRef<str>, T: AsRef<str>>(ranked: &[S], truth: &[T], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    hits(ranked, &truth_set(truth), k) as f64 / k as f64
}

/// Evaluation protocol settings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalConfig {
    pub alpha: f64,
    pub rng_seed: u64,
    pub trials: usize,
    pub ndcg_depth: usize,
    pub precision_ks: Vec<usize>,
    /// Ranked-list cutoff for precision/recall; `None` means `|holdout|`.
    pub n_r: Option<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { alpha: 0.5, rng_seed: 42, trials: 1, ndcg_depth: 10, precision_ks: vec![1, 3, 5, 10], n_r: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryMetrics {
    pub list: String,
    pub trial: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub ndcg: f64,
    pub precision_at: BTreeMap<usize, f64>,
}

/// Per-query metrics of one method plus their means.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub method: String,
    pub queries: Vec<QueryMetrics>,
    pub mean_precision: f64,
    pub mean_recall: f64,
    pub mean_f1: f64,
    pub mndcg: f64,
    pub mean_precision_at: BTreeMap<usize, f64>,
}

impl MetricReport {
    fn from_queries(method: String, mut queries: Vec<QueryMetrics>) -> Self {
        queries.sort_by(|a, b| a.list.cmp(&b.list).then(a.trial.cmp(&b.trial)));
        let mean = |f: &dyn Fn(&QueryMetrics) -> f64| {
            if queries.is_empty() {
                0.0
            } else {
                queries.iter().map(f).sum::<f64>() / queries.len() as f64
            }
        };
        let mut mean_precision_at = BTreeMap::new();
        if let Some(first) = queries.first() {
            for &k in first.precision_at.keys() {
                mean_precision_at.insert(k, mean(&|q: &QueryMetrics| q.precision_at[&k]));
            }
        }
        MetricReport {
            mean_precision: mean(&|q| q.precision),
            mean_recall: mean(&|q| q.recall),
            mean_f1: mean(&|q| q.f1),
            mndcg: mean(&|q| q.ndcg),
            mean_precision_at,
            method,
            queries,
        }
    }

    /// Per-query rows followed by a `#mean` footer.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        let ks: Vec<usize> = self.mean_precision_at.keys().copied().collect();
        writeln!(out, "# method\t{}", self.method)?;
        let mut header = String::from("list\ttrial\tprecision\trecall\tf1\tndcg");
        for k in &ks {
            header.push_str(&format!("\tp@{k}"));
        }
        writeln!(out, "{header}")?;
        for q in &self.queries {
            let mut row = format!(
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                q.list, q.trial, q.precision, q.recall, q.f1, q.ndcg
            );
            for k in &ks {
                row.push_str(&format!("\t{:.6}", q.precision_at[k]));
            }
            writeln!(out, "{row}")?;
        }
        let mut footer = format!(
            "#mean\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
            self.queries.len(),
            self.mean_precision,
            self.mean_recall,
            self.mean_f1,
            self.mndcg
        );
        for k in &ks {
            footer.push_str(&format!("\t{:.6}", self.mean_precision_at[k]));
        }
        writeln!(out, "{footer}")?;
        Ok(())
    }
}

/// Scores one query's ranked list.
pub fn score_query<S: AsRef<str>>(q: &EvalQuery, ranked: &[S], cfg: &EvalConfig) -> Result<QueryMetrics> {
    let n_r = cfg.n_r.unwrap_or(q.holdout.len());
    let (precision, recall, f1) = precision_recall_f(ranked, &q.holdout, n_r)?;
    Ok(QueryMetrics {
        list: q.source.clone(),
        trial: q.trial,
        precision,
        recall,
        f1,
        ndcg: ndcg(ranked, &q.holdout, cfg.ndcg_depth)?,
        precision_at: cfg.precision_ks.iter().map(|&k| (k, precision_at(ranked, &q.holdout, k))).collect(),
    })
}

/// Runs every method over the sampled queries. Queries that cannot be
/// conceptualized score zero.
pub fn evaluate(
    t: &Taxonomy,
    lists: &[GroundTruthList],
    methods: &[Method],
    cfg: &EvalConfig,
    source: &HittingSource<'_>,
) -> Result<Vec<MetricReport>> {
    let lists = resolve_lists(t, lists)?;
    let queries = make_queries(&lists, cfg.alpha, cfg.rng_seed, cfg.trials)?;
    if queries.is_empty() {
        return Err(Error::NoLists);
    }
    let max_k = cfg.precision_ks.iter().copied().max().unwrap_or(1);
    methods
        .iter()
        .map(|method| {
            let rows = queries
                .par_iter()
                .map(|q| {
                    let n_r = cfg.n_r.unwrap_or(q.holdout.len());
                    let top_n = n_r.max(cfg.ndcg_depth).max(max_k);
                    let query = Query::resolve(t, &q.seeds)?;
                    let ranked: Vec<String> = match run_method(t, &query, method, source, top_n) {
                        Ok(r) => r.items.into_iter().map(|s| s.entity).collect(),
                        Err(Error::Unconceptualizable) => Vec::new(),
                        Err(e) => return Err(e),
                    };
                    score_query(q, &ranked, cfg)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MetricReport::from_queries(method.label(), rows))
        })
        .collect()
}

/// Settings of the KL rationality check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalityConfig {
    pub n_queries: usize,
    pub n_random: usize,
    pub rng_seed: u64,
    pub alpha: f64,
    pub concept_model: ConceptModel,
    pub smoothing: SmoothingConfig,
    /// Negatives must pass the same suggestibility filter as candidates.
    pub concept_ratio: f64,
}

impl Default for RationalityConfig {
    fn default() -> Self {
        RationalityConfig {
            n_queries: 50,
            n_random: 50,
            rng_seed: 42,
            alpha: 0.5,
            concept_model: ConceptModel::NoisyOr,
            smoothing: SmoothingConfig::default(),
            concept_ratio: ModelConfig::default().concept_ratio,
        }
    }
}

/// `KL(P(C|q) ‖ P(C|q,e))` over the support of `P(C|q)`, both sides
/// normalized there, with no granularity weighting. `before` is `P(C|q)`.
pub fn posterior_distance(
    t: &Taxonomy,
    q: &Query,
    before: &ConceptDistribution,
    e: TermId,
    model: ConceptModel,
    smoothing: SmoothingConfig,
) -> Result<f64> {
    if before.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let after = match model {
        ConceptModel::NoisyOr => extend_noisy_or(before, t, e)?,
        ConceptModel::Bayes => posterior_bayes(t, &q.with(e), smoothing)?,
    };
    let z = before.total();
    let p: Vec<f64> = before.iter().map(|(_, w)| w / z).collect();
    let mut r: Vec<f64> = before.support().map(|c| after.weight(c) + REM_EPSILON).collect();
    let zr: f64 = r.iter().sum();
    r.iter_mut().for_each(|x| *x /= zr);
    Ok(relative_entropy(&p, &r))
}

/// Paired distances and the test outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalityResult {
    /// `(d1, mean d2)` per query: KL after admitting the true answer and the
    /// mean KL after admitting random concept-sharing entities.
    pub pairs: Vec<(f64, f64)>,
    pub test: PairedTTest,
}

/// Runs the paired t-test on `(d1, d̄2)`; the difference is `d̄2 - d1`, so a
/// positive statistic means true answers perturb the concept distribution
/// less than random concept-sharing entities.
pub fn paired_distance_test(pairs: &[(f64, f64)]) -> Result<PairedTTest> {
    let d2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let d1: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    paired_t_test(&d2, &d1)
}

/// Samples queries from the lists, measures the KL distance after admitting
/// one held-out answer versus `n_random` random entities that share a concept
/// with the query, and tests the paired distances.
pub fn rem_rationality_test(t: &Taxonomy, lists: &[GroundTruthList], cfg: &RationalityConfig) -> Result<RationalityResult> {
    if cfg.n_queries < 2 {
        return Err(Error::InvalidParameter("n_queries must be >= 2".to_string()));
    }
    if cfg.n_random == 0 {
        return Err(Error::InvalidParameter("n_random must be >= 1".to_string()));
    }
    let lists = resolve_lists(t, lists)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut pairs = Vec::new();
    let max_attempts = cfg.n_queries * 20;
    for _ in 0..max_attempts {
        if pairs.len() == cfg.n_queries {
            break;
        }
        let list = lists.choose(&mut rng).expect("non-empty");
        let n = list.members.len();
        let s = seed_count(cfg.alpha, n).min(n - 1);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let seeds: Vec<&str> = order[..s].iter().map(|&i| list.members[i].as_str()).collect();
        let answer_name = &list.members[order[s + rng.gen_range(0..n - s)]];
        let query = Query::resolve(t, &seeds)?;
        let answer = t.id(answer_name).expect("resolved list member");

        let before = posterior(t, &query, cfg.concept_model, cfg.smoothing)?;
        let distance = |e| posterior_distance(t, &query, &before, e, cfg.concept_model, cfg.smoothing);
        let mut pool: Vec<TermId> = query
            .entities()
            .iter()
            .flat_map(|&e| t.concepts_of(e).iter().map(|&(c, _)| c))
            .flat_map(|c| t.entities_of(c).iter().map(|&(e, _)| e))
            .filter(|&e| e != answer && !query.contains(e) && is_suggestible(t, e, cfg.concept_ratio))
            .collect();
        pool.sort_unstable();
        pool.dedup();
        if pool.is_empty() {
            continue;
        }
        let d1 = distance(answer)?;
        let mut d2 = 0.0;
        for _ in 0..cfg.n_random {
            let e = pool[rng.gen_range(0..pool.len())];
            d2 += distance(e)?;
        }
        pairs.push((d1, d2 / cfg.n_random as f64));
    }
    if pairs.len() < 2 {
        return Err(Error::InsufficientPairs(pairs.len()));
    }
    let test = paired_distance_test(&pairs)?;
    Ok(RationalityResult { pairs, test })
}
