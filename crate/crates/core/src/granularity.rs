//! Concept weighting `δ(c)`.
//!
//! Two strategies:
//!
//! * **Popularity penalty** (`pp`): `δ(c) = 1 / P(c)`.
//! * **Fine-grained selection** (`fg`): `δ` is the indicator of the `k`
//!   concepts with the smallest aggregate expected hitting time from the query
//!   entities, where the walk moves from a node to one of its hypernyms with
//!   probability `P(c'|x)`.
//!
//! Hitting times are truncated at a cap: walks that can bypass the target
//! forever would otherwise have infinite expectation. Values are obtained by
//! Jacobi value iteration started from the cap, restricted to nodes whose
//! shortest upward distance to the target is below the cap (every other node
//! provably stays at the cap).

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::inference::Query;
use crate::taxonomy::{Taxonomy, TermId};

/// How `δ(c)` is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Granularity {
    PopularityPenalty,
    FineGrained,
}

/// Controls for the truncated hitting-time computation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HittingParams {
    pub cap: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for HittingParams {
    fn default() -> Self {
        HittingParams { cap: 20.0, tol: 1e-9, max_iter: 200 }
    }
}

impl HittingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cap > 1.0) || !self.cap.is_finite() {
            return Err(Error::InvalidParameter(format!("cap must be > 1, got {}", self.cap)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".to_string()));
        }
        Ok(())
    }
}

/// Truncated expected hitting times `h(x|target)` for one target concept.
///
/// Only nodes with `h < cap` are stored; every other node reads as `cap`.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingTimeIndex {
    target: TermId,
    cap: f64,
    tol: f64,
    h: HashMap<TermId, f64>,
}

impl HittingTimeIndex {
    pub fn target(&self) -> TermId {
        self.target
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `h(node|target)`, or the cap when the node was not retained.
    pub fn get(&self, node: TermId) -> f64 {
        self.h.get(&node).copied().unwrap_or(self.cap)
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (TermId, f64)> + '_ {
        self.h.iter().map(|(&n, &v)| (n, v))
    }

    fn pruned(mut self, prune: f64) -> Self {
        self.h.retain(|_, v| *v < prune);
        self
    }
}

/// Nodes whose shortest upward path to `target` is shorter than `cap`,
/// discovered by walking hyponym edges downward from the target.
fn downward_closure(t: &Taxonomy, target: TermId, cap: f64) -> Vec<TermId> {
    let mut dist: HashMap<TermId, usize> = HashMap::new();
    let mut order = vec![target];
    let mut queue = VecDeque::from([target]);
    dist.insert(target, 0);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x] + 1;
        if d as f64 >= cap {
            continue;
        }
        for &(y, _) in t.entities_of(x) {
            if let Entry::Vacant(v) = dist.entry(y) {
                v.insert(d);
                order.push(y);
                queue.push_back(y);
            }
        }
    }
    order
}

/// Runs capped Jacobi value iteration. `on_sweep` sees the value vector after
/// every sweep (aligned with the returned node list).
pub(crate) fn value_iteration(
    t: &Taxonomy,
    target: TermId,
    params: &HittingParams,
    mut on_sweep: impl FnMut(&[f64]),
) -> (Vec<TermId>, Vec<f64>) {
    let nodes = downward_closure(t, target, params.cap);
    let local: HashMap<TermId, usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let cap = params.cap;

    // Per node: outgoing transitions as (local index or None for an
    // out-of-closure node pinned at the cap, probability).
    let transitions: Vec<Vec<(Option<usize>, f64)>> = nodes
        .iter()
        .map(|&x| {
            if x == target {
                return Vec::new();
            }
            let n_x = t.n_hypo(x) as f64;
            t.concepts_of(x)
                .iter()
                .map(|&(y, count)| (local.get(&y).copied(), count as f64 / n_x))
                .collect()
        })
        .collect();

    let mut h = vec![cap; nodes.len()];
    h[0] = 0.0;
    let mut next = h.clone();
    for _ in 0..params.max_iter {
        let mut delta = 0.0f64;
        for (i, edges) in transitions.iter().enumerate() {
            if i == 0 {
                continue;
            }
            let v = if edges.is_empty() {
                cap
            } else {
                let s: f64 = edges.iter().map(|&(y, p)| p * y.map_or(cap, |j| h[j])).sum();
                (1.0 + s).min(cap)
            };
            delta = delta.max((v - h[i]).abs());
            next[i] = v;
        }
        std::mem::swap(&mut h, &mut next);
        on_sweep(&h);
        if delta < params.tol {
            break;
        }
    }
    (nodes, h)
}

/// Truncated hitting times of every node to `target`:
/// `h(target) = 0`, otherwise `h(x) = min(cap, 1 + Σ_{c'∈c(x)} P(c'|x) h(c'))`.
pub fn hitting_times(t: &Taxonomy, target: TermId, params: &HittingParams) -> Result<HittingTimeIndex> {
    params.validate()?;
    if !t.contains(target) {
        return Err(Error::UnknownTerm(format!("#{}", target.index())));
    }
    if t.n_hyper(target) == 0 {
        return Err(Error::NoHyponyms(t.name(target).to_string()));
    }
    let (nodes, h) = value_iteration(t, target, params, |_| {});
    let h = nodes
        .into_iter()
        .zip(h)
        .filter(|&(_, v)| v < params.cap)
        .collect();
    Ok(HittingTimeIndex { target, cap: params.cap, tol: params.tol, h })
}

/// `Σ_{q_i ∈ q} h(q_i|c)`.
pub fn aggregate_hitting(t: &Taxonomy, q: &Query, c: TermId, params: &HittingParams) -> Result<f64> {
    let index = hitting_times(t, c, params)?;
    Ok(aggregate_with(&index, q))
}

fn aggregate_with(index: &HittingTimeIndex, q: &Query) -> f64 {
    q.entities().iter().map(|&e| index.get(e)).sum()
}

/// A persisted collection of per-target hitting-time indexes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HittingIndexSet {
    indexes: HashMap<TermId, HittingTimeIndex>,
}

impl HittingIndexSet {
    pub fn get(&self, target: TermId) -> Option<&HittingTimeIndex> {
        self.indexes.get(&target)
    }

    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }

    pub fn targets(&self) -> impl Iterator<Item = TermId> + '_ {
        self.indexes.keys().copied()
    }

    /// Writes one section per target, sections and rows sorted by name:
    /// a `#target<TAB>cap<TAB>tol` header followed by `node<TAB>h` rows.
    pub fn write<W: Write>(&self, t: &Taxonomy, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        let mut targets: Vec<&HittingTimeIndex> = self.indexes.values().collect();
        targets.sort_by(|a, b| t.name(a.target).cmp(t.name(b.target)));
        for index in targets {
            writeln!(out, "#{}\t{}\t{}", t.name(index.target), index.cap, index.tol)?;
            let mut rows: Vec<(&str, f64)> = index.entries().map(|(n, v)| (t.name(n), v)).collect();
            rows.sort_by(|a, b| a.0.cmp(b.0));
            for (name, v) in rows {
                writeln!(out, "{name}\t{v}")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, t: &Taxonomy, path: impl AsRef<Path>) -> Result<()> {
        self.write(t, File::create(path)?)
    }

    /// Parses the format produced by [`HittingIndexSet::write`]. Header lines
    /// have three tab-separated fields and a leading `#`; rows have two.
    pub fn read<R: BufRead>(t: &Taxonomy, reader: R) -> Result<Self> {
        let mut indexes = HashMap::new();
        let mut current: Option<HittingTimeIndex> = None;
        let bad = |line: usize, reason: &str| Error::Malformed { line, reason: reason.to_string() };
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                [head, cap, tol] if head.starts_with('#') => {
                    if let Some(done) = current.take() {
                        indexes.insert(done.target, done);
                    }
                    let name = &head[1..];
                    let target = t.id(name).ok_or_else(|| Error::UnknownTerm(name.to_string()))?;
                    let cap: f64 = cap.parse().map_err(|_| bad(line_no, "bad cap"))?;
                    let tol: f64 = tol.parse().map_err(|_| bad(line_no, "bad tol"))?;
                    current = Some(HittingTimeIndex { target, cap, tol, h: HashMap::new() });
                }
                [name, value] => {
                    let index = current.as_mut().ok_or_else(|| bad(line_no, "row before header"))?;
                    let node = t.id(name).ok_or_else(|| Error::UnknownTerm(name.to_string()))?;
                    let v: f64 = value.parse().map_err(|_| bad(line_no, "bad hitting time"))?;
                    index.h.insert(node, v);
                }
                _ => return Err(bad(line_no, "expected a section header or `node<TAB>h`")),
            }
        }
        if let Some(done) = current {
            indexes.insert(done.target, done);
        }
        Ok(HittingIndexSet { indexes })
    }

    pub fn load(t: &Taxonomy, path: impl AsRef<Path>) -> Result<Self> {
        Self::read(t, BufReader::with_capacity(1 << 16, File::open(path)?))
    }
}

/// Computes hitting-time indexes for many targets in parallel, keeping only
/// entries with `h < prune`.
pub fn precompute_hitting(
    t: &Taxonomy,
    targets: &[TermId],
    params: &HittingParams,
    prune: f64,
) -> Result<HittingIndexSet> {
    params.validate()?;
    if targets.is_empty() {
        return Err(Error::InvalidParameter("no precompute targets".to_string()));
    }
    if !(prune > 0.0 && prune <= params.cap) {
        return Err(Error::InvalidParameter(format!("prune must lie in (0, cap], got {prune}")));
    }
    let indexes = targets
        .par_iter()
        .map(|&c| hitting_times(t, c, params).map(|idx| (c, idx.pruned(prune))))
        .collect::<Result<HashMap<_, _>>>()?;
    Ok(HittingIndexSet { indexes })
}

/// Every term with at least one hyponym.
pub fn all_concepts(t: &Taxonomy) -> Vec<TermId> {
    t.terms().filter(|&c| t.n_hyper(c) > 0).collect()
}

/// Where fine-grained selection obtains hitting times.
#[derive(Clone, Copy, Debug)]
pub enum HittingSource<'a> {
    Online(HittingParams),
    /// Targets missing from the set are treated as unreachable.
    Precomputed(&'a HittingIndexSet, HittingParams),
}

impl HittingSource<'_> {
    pub fn params(&self) -> &HittingParams {
        match self {
            HittingSource::Online(p) | HittingSource::Precomputed(_, p) => p,
        }
    }
}

/// The `δ` assignment for one query.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConceptSelection {
    pub mode: Granularity,
    weights: BTreeMap<TermId, f64>,
    /// Fine-grained mode: chosen concepts with their aggregate hitting time,
    /// in selection order.
    pub selected: Vec<(TermId, f64)>,
}

impl ConceptSelection {
    /// `δ(c)`; zero for concepts outside the selection.
    pub fn delta(&self, c: TermId) -> f64 {
        self.weights.get(&c).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> impl Iterator<Item = (TermId, f64)> + '_ {
        self.weights.iter().map(|(&c, &w)| (c, w))
    }

    /// `H(q|C_q^k)`; zero in popularity-penalty mode.
    pub fn aggregate(&self) -> f64 {
        self.selected.iter().map(|&(_, h)| h).sum()
    }
}

/// `δ(c) = Σ n / n(c)` for every concept in `support`.
pub fn delta_pp(t: &Taxonomy, support: impl IntoIterator<Item = TermId>) -> Result<ConceptSelection> {
    let total = t.total_hyper_mass() as f64;
    let mut weights = BTreeMap::new();
    for c in support {
        if !t.contains(c) {
            return Err(Error::UnknownTerm(format!("#{}", c.index())));
        }
        let n_c = t.n_hyper(c);
        if n_c == 0 {
            return Err(Error::NoHyponyms(t.name(c).to_string()));
        }
        weights.insert(c, total / n_c as f64);
    }
    Ok(ConceptSelection { mode: Granularity::PopularityPenalty, weights, selected: Vec::new() })
}

/// Concepts reachable upward from the query within fewer than `cap` steps,
/// sorted by TermId.
pub fn fine_grained_candidates(t: &Taxonomy, q: &Query, cap: f64) -> Vec<TermId> {
    let mut dist: HashMap<TermId, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    for &e in q.entities() {
        for &(c, _) in t.concepts_of(e) {
            if let Entry::Vacant(v) = dist.entry(c) {
                v.insert(1);
                queue.push_back(c);
            }
        }
    }
    while let Some(x) = queue.pop_front() {
        let d = dist[&x] + 1;
        if d as f64 >= cap {
            continue;
        }
        for &(c, _) in t.concepts_of(x) {
            if let Entry::Vacant(v) = dist.entry(c) {
                v.insert(d);
                queue.push_back(c);
            }
        }
    }
    let mut out: Vec<TermId> = dist.into_keys().collect();
    out.sort_unstable();
    out
}

/// Aggregate hitting time of every fine-grained candidate, including
/// unreachable ones (aggregate `|q|·cap`).
pub fn candidate_aggregates(t: &Taxonomy, q: &Query, source: &HittingSource<'_>) -> Result<Vec<(TermId, f64)>> {
    let params = source.params();
    params.validate()?;
    let candidates = fine_grained_candidates(t, q, params.cap);
    let unreachable = q.len() as f64 * params.cap;
    match source {
        HittingSource::Online(p) => candidates
            .par_iter()
            .map(|&c| hitting_times(t, c, p).map(|idx| (c, aggregate_with(&idx, q))))
            .collect(),
        HittingSource::Precomputed(set, _) => Ok(candidates
            .iter()
            .map(|&c| (c, set.get(c).map_or(unreachable, |idx| aggregate_with(idx, q))))
            .collect()),
    }
}

/// Chooses `C_q^k`: the `k` candidates with the smallest aggregate hitting
/// time (ties by concept name). Because the aggregate is additive over the
/// members of the set, this is the subset minimizer. Candidates no query
/// entity reaches below the cap are never selected.
pub fn select_fine_grained_with(
    t: &Taxonomy,
    q: &Query,
    k: usize,
    source: &HittingSource<'_>,
) -> Result<ConceptSelection> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".to_string()));
    }
    let unreachable = q.len() as f64 * source.params().cap;
    let mut scored: Vec<(TermId, f64)> = candidate_aggregates(t, q, source)?
        .into_iter()
        .filter(|&(_, h)| h < unreachable)
        .collect();
    if scored.is_empty() {
        return Err(Error::Unconceptualizable);
    }
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| t.name(a.0).cmp(t.name(b.0))));
    scored.truncate(k);
    let weights = scored.iter().map(|&(c, _)| (c, 1.0)).collect();
    Ok(ConceptSelection { mode: Granularity::FineGrained, weights, selected: scored })
}

/// Fine-grained selection with online hitting-time computation.
pub fn select_fine_grained(t: &Taxonomy, q: &Query, k: usize, params: &HittingParams) -> Result<ConceptSelection> {
    select_fine_grained_with(t, q, k, &HittingSource::Online(*params))
}
