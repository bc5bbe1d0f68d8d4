//! Frequency-weighted isA taxonomy.
//!
//! A taxonomy is a set of `hypo -> hyper` edges, each carrying the number of
//! times the pair was observed. Terms are interned to dense [`TermId`]s and the
//! edge set is stored twice, once grouped by hyponym and once by hypernym, so
//! that both `c(e)` and its inverse are slices.
//!
//! Marginals are role-specific: [`Taxonomy::n_hypo`] is the mass of a term's
//! outgoing (hyponym-role) edges, [`Taxonomy::n_hyper`] the mass of its incoming
//! (hypernym-role) edges. A term such as `developing country` can carry both.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Dense identifier of an interned entity or concept name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TermId(u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One merged isA observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IsAEdge {
    pub hypo: TermId,
    pub hyper: TermId,
    pub count: u64,
}

/// How malformed lines are treated while loading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ParseMode {
    #[default]
    Strict,
    /// Skip malformed lines and record them in the [`LoadReport`].
    Lenient,
}

/// Diagnostics collected while loading in lenient mode.
#[derive(Clone, Debug, Default)]
pub struct LoadReport {
    /// `(line number, reason)` for every skipped line.
    pub skipped: Vec<(usize, String)>,
}

/// Trims, lowercases and collapses internal whitespace.
pub fn normalize_name(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for (i, word) in raw.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if word.is_ascii() {
            out.extend(word.chars().map(|c| c.to_ascii_lowercase()));
        } else {
            out.push_str(&word.to_lowercase());
        }
    }
    out
}

/// An immutable, indexed isA taxonomy.
#[derive(Clone, Debug, Default)]
pub struct Taxonomy {
    names: Vec<String>,
    ids: HashMap<String, TermId>,
    // CSR adjacency grouped by hyponym: hypernyms of term `i` live in
    // `up_edges[up_offsets[i]..up_offsets[i + 1]]`, sorted by TermId.
    up_offsets: Vec<usize>,
    up_edges: Vec<(TermId, u64)>,
    down_offsets: Vec<usize>,
    down_edges: Vec<(TermId, u64)>,
    n_hypo: Vec<u64>,
    n_hyper: Vec<u64>,
    total_mass: u64,
}

struct Interner {
    names: Vec<String>,
    ids: HashMap<String, TermId>,
}

impl Interner {
    fn new() -> Self {
        Interner { names: Vec::new(), ids: HashMap::new() }
    }

    fn intern(&mut self, name: String) -> TermId {
        if let Some(&id) = self.ids.get(&name) {
            return id;
        }
        let id = TermId(self.names.len() as u32);
        self.names.push(name.clone());
        self.ids.insert(name, id);
        id
    }
}

fn parse_line(line: &str) -> std::result::Result<(String, String, u64), String> {
    let mut fields = line.split('\t');
    let (Some(hypo), Some(hyper), Some(count), None) =
        (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err("expected `hypo<TAB>hyper<TAB>count`".to_string());
    };
    let hypo = normalize_name(hypo);
    let hyper = normalize_name(hyper);
    if hypo.is_empty() || hyper.is_empty() {
        return Err("empty term name".to_string());
    }
    let count: u64 = count
        .trim()
        .parse()
        .map_err(|_| format!("count `{}` is not a positive integer", count.trim()))?;
    if count == 0 {
        return Err("count must be positive".to_string());
    }
    Ok((hypo, hyper, count))
}

impl Taxonomy {
    /// Reads `hypo<TAB>hyper<TAB>count` lines. Blank lines and lines starting
    /// with `#` are ignored; duplicate pairs are merged by summing counts.
    pub fn from_reader<R: BufRead>(reader: R, mode: ParseMode) -> Result<(Self, LoadReport)> {
        let mut interner = Interner::new();
        let mut raw = Vec::new();
        let mut report = LoadReport::default();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            match parse_line(trimmed) {
                Ok((hypo, hyper, count)) => {
                    if hypo == hyper {
                        return Err(Error::SelfLoop { line: line_no, term: hypo });
                    }
                    let h = interner.intern(hypo);
                    let c = interner.intern(hyper);
                    raw.push((h, c, count));
                }
                Err(reason) => match mode {
                    ParseMode::Strict => return Err(Error::Malformed { line: line_no, reason }),
                    ParseMode::Lenient => report.skipped.push((line_no, reason)),
                },
            }
        }
        Ok((Self::build(interner, raw), report))
    }

    /// Loads a taxonomy file from disk.
    pub fn load_path(path: impl AsRef<Path>, mode: ParseMode) -> Result<(Self, LoadReport)> {
        let file = File::open(path)?;
        Self::from_reader(BufReader::with_capacity(1 << 16, file), mode)
    }

    /// Parses an in-memory TSV document in strict mode.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes(), ParseMode::Strict).map(|(t, _)| t)
    }

    /// Builds a taxonomy from `(hypo, hyper, count)` triples, applying the same
    /// normalization and merge rules as the file loader.
    pub fn from_edges<I, S>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, u64)>,
        S: AsRef<str>,
    {
        let mut interner = Interner::new();
        let mut raw = Vec::new();
        for (i, (hypo, hyper, count)) in edges.into_iter().enumerate() {
            let hypo = normalize_name(hypo.as_ref());
            let hyper = normalize_name(hyper.as_ref());
            if hypo.is_empty() || hyper.is_empty() || count == 0 {
                return Err(Error::Malformed {
                    line: i + 1,
                    reason: "empty name or zero count".to_string(),
                });
            }
            if hypo == hyper {
                return Err(Error::SelfLoop { line: i + 1, term: hypo });
            }
            let h = interner.intern(hypo);
            let c = interner.intern(hyper);
            raw.push((h, c, count));
        }
        Ok(Self::build(interner, raw))
    }

    fn build(interner: Interner, mut raw: Vec<(TermId, TermId, u64)>) -> Self {
        let n = interner.names.len();
        raw.sort_unstable_by_key(|&(h, c, _)| (h, c));
        let mut merged: Vec<(TermId, TermId, u64)> = Vec::with_capacity(raw.len());
        for (h, c, count) in raw {
            match merged.last_mut() {
                Some(last) if last.0 == h && last.1 == c => last.2 += count,
                _ => merged.push((h, c, count)),
            }
        }

        let mut n_hypo = vec![0u64; n];
        let mut n_hyper = vec![0u64; n];
        let mut up_offsets = vec![0usize; n + 1];
        let mut down_offsets = vec![0usize; n + 1];
        for &(h, c, count) in &merged {
            n_hypo[h.index()] += count;
            n_hyper[c.index()] += count;
            up_offsets[h.index() + 1] += 1;
            down_offsets[c.index() + 1] += 1;
        }
        for i in 0..n {
            up_offsets[i + 1] += up_offsets[i];
            down_offsets[i + 1] += down_offsets[i];
        }

        // `merged` is sorted by (hypo, hyper), so it is already the upward CSR.
        let up_edges: Vec<(TermId, u64)> = merged.iter().map(|&(_, c, count)| (c, count)).collect();
        let mut down_edges = vec![(TermId(0), 0u64); merged.len()];
        let mut cursor = down_offsets.clone();
        // Iterating in hypo order keeps each hyponym list sorted by TermId.
        for &(h, c, count) in &merged {
            down_edges[cursor[c.index()]] = (h, count);
            cursor[c.index()] += 1;
        }

        let total_mass = n_hyper.iter().sum();
        Taxonomy {
            names: interner.names,
            ids: interner.ids,
            up_offsets,
            up_edges,
            down_offsets,
            down_edges,
            n_hypo,
            n_hyper,
            total_mass,
        }
    }

    pub fn term_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.up_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Looks up a term by name; the name is normalized first.
    pub fn id(&self, name: &str) -> Option<TermId> {
        self.ids.get(name).or_else(|| self.ids.get(&normalize_name(name))).copied()
    }

    pub fn name(&self, id: TermId) -> &str {
        &self.names[id.index()]
    }

    pub fn contains(&self, id: TermId) -> bool {
        id.index() < self.names.len()
    }

    fn check(&self, id: TermId) -> Result<()> {
        if self.contains(id) {
            Ok(())
        } else {
            Err(Error::UnknownTerm(format!("#{}", id.0)))
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = TermId> + '_ {
        (0..self.names.len() as u32).map(TermId)
    }

    /// Hypernym edges of `e` as `(concept, count)`, sorted by TermId.
    pub fn concepts_of(&self, e: TermId) -> &[(TermId, u64)] {
        let i = e.index();
        &self.up_edges[self.up_offsets[i]..self.up_offsets[i + 1]]
    }

    /// Hyponym edges of `c` as `(entity, count)`, sorted by TermId.
    pub fn entities_of(&self, c: TermId) -> &[(TermId, u64)] {
        let i = c.index();
        &self.down_edges[self.down_offsets[i]..self.down_offsets[i + 1]]
    }

    /// Checked variant of [`Taxonomy::concepts_of`].
    pub fn try_concepts_of(&self, e: TermId) -> Result<&[(TermId, u64)]> {
        self.check(e)?;
        Ok(self.concepts_of(e))
    }

    /// Checked variant of [`Taxonomy::entities_of`].
    pub fn try_entities_of(&self, c: TermId) -> Result<&[(TermId, u64)]> {
        self.check(c)?;
        Ok(self.entities_of(c))
    }

    /// `n(e, c)`, zero when there is no such edge.
    pub fn count(&self, e: TermId, c: TermId) -> u64 {
        let edges = self.concepts_of(e);
        edges
            .binary_search_by_key(&c, |&(id, _)| id)
            .map(|i| edges[i].1)
            .unwrap_or(0)
    }

    /// Hyponym-role mass `n(e)`.
    pub fn n_hypo(&self, id: TermId) -> u64 {
        self.n_hypo[id.index()]
    }

    /// Hypernym-role mass `n(c)`.
    pub fn n_hyper(&self, id: TermId) -> u64 {
        self.n_hyper[id.index()]
    }

    /// Sum of all edge counts; equals both `Σ n(c)` and `Σ n(e)`.
    pub fn total_hyper_mass(&self) -> u64 {
        self.total_mass
    }

    /// `P(e|c) = n(e,c) / n(c)`.
    pub fn typicality_e_given_c(&self, e: TermId, c: TermId) -> Result<f64> {
        self.check(e)?;
        self.check(c)?;
        let denom = self.n_hyper(c);
        if denom == 0 {
            return Err(Error::NoHyponyms(self.name(c).to_string()));
        }
        Ok(self.count(e, c) as f64 / denom as f64)
    }

    /// `P(c|e) = n(e,c) / n(e)`.
    pub fn typicality_c_given_e(&self, e: TermId, c: TermId) -> Result<f64> {
        self.check(e)?;
        self.check(c)?;
        let denom = self.n_hypo(e);
        if denom == 0 {
            return Err(Error::NoHypernyms(self.name(e).to_string()));
        }
        Ok(self.count(e, c) as f64 / denom as f64)
    }

    /// `P(c) = n(c) / Σ n(c')`.
    pub fn concept_prior(&self, c: TermId) -> Result<f64> {
        self.check(c)?;
        if self.total_mass == 0 {
            return Err(Error::InvalidParameter("empty taxonomy".to_string()));
        }
        Ok(self.n_hyper(c) as f64 / self.total_mass as f64)
    }

    /// `P(e) = n(e) / Σ n(x)`.
    pub fn entity_prior(&self, e: TermId) -> Result<f64> {
        self.check(e)?;
        if self.total_mass == 0 {
            return Err(Error::InvalidParameter("empty taxonomy".to_string()));
        }
        Ok(self.n_hypo(e) as f64 / self.total_mass as f64)
    }

    pub fn edges(&self) -> impl Iterator<Item = IsAEdge> + '_ {
        self.terms().flat_map(move |h| {
            self.concepts_of(h)
                .iter()
                .map(move |&(c, count)| IsAEdge { hypo: h, hyper: c, count })
        })
    }

    /// Writes the merged edge set as TSV, sorted by `(hypo, hyper)` name.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut rows: Vec<(&str, &str, u64)> = self
            .edges()
            .map(|e| (self.name(e.hypo), self.name(e.hyper), e.count))
            .collect();
        rows.sort_unstable();
        for (h, c, count) in rows {
            writeln!(out, "{h}\t{c}\t{count}")?;
        }
        Ok(())
    }
}
