//! The `taxo-suggest` command line.
//!
//! Subcommands: `suggest`, `eval`, `precompute` and `repl`. Data goes to
//! standard output, diagnostics to standard error. Exit codes:
//!
//! | code | meaning                       |
//! |------|-------------------------------|
//! | 0    | success                       |
//! | 1    | internal or i/o error         |
//! | 2    | unresolvable query entity     |
//! | 3    | unconceptualizable query      |
//! | 4    | empty evaluation              |
//! | 64   | usage error                   |

pub mod repl;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::evaluation::{evaluate, load_lists_path, EvalConfig};
use crate::granularity::{all_concepts, precompute_hitting, Granularity, HittingIndexSet, HittingParams, HittingSource};
use crate::inference::{ConceptDistribution, ConceptModel, Query, SmoothingConfig};
use crate::ranking::{build_context_with, knn_baseline, query_concept_vector, rank_context, Method, ModelConfig, RankedSuggestions, RankingModel};
use crate::taxonomy::{ParseMode, Taxonomy};

pub use repl::Repl;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_UNRESOLVABLE: u8 = 2;
pub const EXIT_UNCONCEPTUALIZABLE: u8 = 3;
pub const EXIT_EMPTY_EVAL: u8 = 4;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "taxo-suggest", version, about = "Entity suggestion by example over an isA taxonomy")]
pub struct Cli {
    /// More diagnostics on standard error (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rank entities that complete a seed query.
    Suggest(SuggestArgs),
    /// Evaluate model variants against ground-truth lists.
    Eval(EvalArgs),
    /// Precompute hitting-time indexes for fine-grained selection.
    Precompute(PrecomputeArgs),
    /// Interactive seed refinement.
    Repl(ReplArgs),
}

#[derive(Args, Debug, Clone)]
pub struct TaxonomyArgs {
    /// Taxonomy TSV: `hyponym<TAB>hypernym<TAB>count`.
    #[arg(long, env = "TAXO_SUGGEST_TAXONOMY")]
    pub taxonomy: PathBuf,

    /// Skip malformed taxonomy lines instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelArg {
    Prm,
    Rem,
    Knn,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConceptModelArg {
    No,
    Ba,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum GranularityArg {
    Fg,
    Pp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Tsv,
    /// One JSON document.
    Doc,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Prm)]
    pub model: ModelArg,

    #[arg(long = "concept-model", value_enum, default_value_t = ConceptModelArg::No)]
    pub concept_model: ConceptModelArg,

    #[arg(long, value_enum, default_value_t = GranularityArg::Fg)]
    pub granularity: GranularityArg,

    /// Fine-grained concept count (only with `--granularity fg`) [default: 50].
    #[arg(long)]
    pub k: Option<usize>,

    /// Naive Bayes smoothing (only with `--concept-model ba`) [default: 0.9].
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Hitting-time cap.
    #[arg(long, default_value_t = 20.0)]
    pub cap: f64,

    /// Number of suggestions.
    #[arg(long, default_value_t = 10)]
    pub top: usize,

    /// Terms with hypernym mass above this multiple of their hyponym mass
    /// are not suggested.
    #[arg(long = "concept-ratio", default_value_t = 1.0)]
    pub concept_ratio: f64,
}

impl ModelArgs {
    /// Checks flag combinations and builds the method.
    pub fn to_method(&self) -> Result<Method, Failure> {
        if self.top == 0 {
            return Err(Failure::usage("--top must be at least 1"));
        }
        if self.lambda.is_some() && self.concept_model != ConceptModelArg::Ba {
            return Err(Failure::usage("--lambda requires --concept-model ba"));
        }
        if self.k.is_some() && self.granularity != GranularityArg::Fg {
            return Err(Failure::usage("--k requires --granularity fg"));
        }
        if self.model == ModelArg::Knn {
            return Ok(Method::Knn);
        }
        let cfg = ModelConfig {
            model: if self.model == ModelArg::Rem { RankingModel::Rem } else { RankingModel::Prm },
            concept_model: match self.concept_model {
                ConceptModelArg::No => ConceptModel::NoisyOr,
                ConceptModelArg::Ba => ConceptModel::Bayes,
            },
            granularity: match self.granularity {
                GranularityArg::Fg => Granularity::FineGrained,
                GranularityArg::Pp => Granularity::PopularityPenalty,
            },
            k: self.k.unwrap_or(50),
            smoothing: smoothing(self.lambda)?,
            hitting: HittingParams { cap: self.cap, ..HittingParams::default() },
            top_n: self.top,
            concept_ratio: self.concept_ratio,
        };
        cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(Method::Model(cfg))
    }
}

fn smoothing(lambda: Option<f64>) -> Result<SmoothingConfig, Failure> {
    match lambda {
        Some(l) => SmoothingConfig::new(l).map_err(|e| Failure::usage(e.to_string())),
        None => Ok(SmoothingConfig::default()),
    }
}

#[derive(Args, Debug)]
pub struct SuggestArgs {
    #[command(flatten)]
    pub taxonomy: TaxonomyArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    /// Comma-separated seed entities.
    #[arg(long)]
    pub query: String,

    /// Also print the effective concept support.
    #[arg(long)]
    pub explain: bool,

    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,

    /// Precomputed hitting-time index (see `precompute`).
    #[arg(long)]
    pub index: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub taxonomy: TaxonomyArgs,

    /// Ground-truth lists (`list<TAB>member` or `name: m1, m2, ...`).
    #[arg(long)]
    pub truth: PathBuf,

    /// Seed fraction per list.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,

    /// `all`, or a comma-separated subset of labels such as `prm+fg+no,knn`.
    #[arg(long, default_value = "all")]
    pub variants: String,

    #[arg(long = "rng-seed", default_value_t = 42)]
    pub rng_seed: u64,

    /// Seed subsets sampled per list.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,

    /// NDCG depth.
    #[arg(long, default_value_t = 10)]
    pub depth: usize,

    /// Ranked-list cutoff for precision/recall [default: holdout size].
    #[arg(long = "n-r")]
    pub n_r: Option<usize>,

    /// Fine-grained concept count for fg variants.
    #[arg(long, default_value_t = 50)]
    pub k: usize,

    /// Naive Bayes smoothing for ba variants.
    #[arg(long, default_value_t = SmoothingConfig::DEFAULT_LAMBDA)]
    pub lambda: f64,

    #[arg(long, default_value_t = 20.0)]
    pub cap: f64,

    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,

    /// Precomputed hitting-time index (see `precompute`).
    #[arg(long)]
    pub index: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PrecomputeArgs {
    #[command(flatten)]
    pub taxonomy: TaxonomyArgs,

    /// `all`, or a file with one target concept per line.
    #[arg(long, default_value = "all")]
    pub targets: String,

    #[arg(long, default_value_t = 20.0)]
    pub cap: f64,

    /// Convergence tolerance of value iteration.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,

    /// Keep only entries with `h < prune` [default: cap].
    #[arg(long)]
    pub prune: Option<f64>,

    /// Index file to write.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReplArgs {
    #[command(flatten)]
    pub taxonomy: TaxonomyArgs,

    #[command(flatten)]
    pub model: ModelArgs,

    #[arg(long)]
    pub index: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
}

/// An exit code with its message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::UnresolvableEntities(_) | Error::UnknownTerm(_) => EXIT_UNRESOLVABLE,
            Error::Unconceptualizable => EXIT_UNCONCEPTUALIZABLE,
            Error::NoLists => EXIT_EMPTY_EVAL,
            Error::InvalidParameter(_) | Error::EmptyQuery => EXIT_USAGE,
            _ => EXIT_INTERNAL,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: EXIT_INTERNAL, message: e.to_string() }
    }
}

/// Binary entry point.
pub fn main() -> ExitCode {
    let stdin = io::stdin();
    let code = run(std::env::args_os(), &mut stdin.lock(), &mut io::stdout().lock(), &mut io::stderr().lock());
    ExitCode::from(code)
}

/// Runs the command line against explicit streams and returns the exit code.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(rendered.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Suggest(a) => run_suggest(a, out, err),
        Command::Eval(a) => run_eval(a, out, err),
        Command::Precompute(a) => run_precompute(a, err),
        Command::Repl(a) => run_repl(a, input, out, err),
    };
    let result = result.and_then(|()| out.flush().map_err(Failure::from));
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("TAXO_SUGGEST_LOG")
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

fn load_taxonomy(args: &TaxonomyArgs, err: &mut dyn Write) -> Result<Taxonomy, Failure> {
    let mode = if args.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let (t, report) = Taxonomy::load_path(&args.taxonomy, mode)
        .map_err(|e| Failure { code: EXIT_INTERNAL, message: format!("{}: {e}", args.taxonomy.display()) })?;
    for (line, reason) in &report.skipped {
        writeln!(err, "warning: {}:{line}: skipped ({reason})", args.taxonomy.display())?;
    }
    Ok(t)
}

fn load_index(t: &Taxonomy, path: Option<&Path>) -> Result<Option<HittingIndexSet>, Failure> {
    path.map(|p| {
        HittingIndexSet::load(t, p)
            .map_err(|e| Failure { code: EXIT_INTERNAL, message: format!("{}: {e}", p.display()) })
    })
    .transpose()
}

/// Splits `a, b ,c` into trimmed non-empty names.
pub fn parse_query_list(raw: &str) -> Vec<String> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

#[derive(Serialize)]
struct SuggestionDoc<'a> {
    query: &'a [String],
    method: &'a str,
    suggestions: Vec<RankedEntry<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    concepts: Option<Vec<ConceptEntry<'a>>>,
}

#[derive(Serialize)]
struct RankedEntry<'a> {
    rank: usize,
    entity: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct ConceptEntry<'a> {
    concept: &'a str,
    weight: f64,
}

/// Writes suggestions, optionally followed by the explained concept weights.
pub fn write_suggestions(
    out: &mut dyn Write,
    t: &Taxonomy,
    ranked: &RankedSuggestions,
    explain: Option<&ConceptDistribution>,
    format: Format,
) -> Result<(), Failure> {
    match format {
        Format::Tsv => {
            ranked.write_tsv(&mut *out)?;
            if let Some(d) = explain {
                writeln!(out, "#concept\tweight")?;
                d.write_tsv(t, &mut *out)?;
            }
        }
        Format::Doc => {
            let doc = SuggestionDoc {
                query: &ranked.query,
                method: &ranked.method,
                suggestions: ranked
                    .items
                    .iter()
                    .enumerate()
                    .map(|(i, s)| RankedEntry { rank: i + 1, entity: &s.entity, score: s.score })
                    .collect(),
                concepts: explain.map(|d| {
                    d.sorted_by_weight(t)
                        .into_iter()
                        .map(|(c, weight)| ConceptEntry { concept: t.name(c), weight })
                        .collect()
                }),
            };
            serde_json::to_writer_pretty(&mut *out, &doc).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Ranks `q` with `method`, returning the list and the distribution that
/// explains it (effective concept weights, or the KNN query vector).
pub fn suggest_explained(
    t: &Taxonomy,
    q: &Query,
    method: &Method,
    source: &HittingSource<'_>,
    known_posterior: Option<&ConceptDistribution>,
    top_n: usize,
) -> crate::error::Result<(RankedSuggestions, ConceptDistribution)> {
    match method {
        Method::Knn => {
            let ranked = knn_baseline(t, q, top_n, ModelConfig::default().concept_ratio)?;
            Ok((ranked, ConceptDistribution::from_weights(query_concept_vector(t, q))))
        }
        Method::Model(cfg) => {
            let cfg = ModelConfig { top_n, ..*cfg };
            let ctx = build_context_with(t, q, &cfg, source, known_posterior)?;
            let ranked = rank_context(t, &ctx, &cfg)?;
            Ok((ranked, ctx.effective))
        }
    }
}

fn hitting_source<'a>(method: &Method, index: Option<&'a HittingIndexSet>) -> HittingSource<'a> {
    let params = match method {
        Method::Model(cfg) => cfg.hitting,
        Method::Knn => HittingParams::default(),
    };
    match index {
        Some(set) => HittingSource::Precomputed(set, params),
        None => HittingSource::Online(params),
    }
}

fn top_of(method: &Method, args: &ModelArgs) -> usize {
    match method {
        Method::Model(cfg) => cfg.top_n,
        Method::Knn => args.top,
    }
}

fn run_suggest(a: &SuggestArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let method = a.model.to_method()?;
    let names = parse_query_list(&a.query);
    if names.is_empty() {
        return Err(Failure::usage("--query names no entities"));
    }
    let t = load_taxonomy(&a.taxonomy, err)?;
    let index = load_index(&t, a.index.as_deref())?;
    let q = Query::resolve(&t, &names)?;
    let source = hitting_source(&method, index.as_ref());
    let (ranked, explained) = suggest_explained(&t, &q, &method, &source, None, top_of(&method, &a.model))?;
    write_suggestions(out, &t, &ranked, a.explain.then_some(&explained), a.format)
}

/// Parses `all` or a comma-separated list of method labels.
pub fn parse_variants(selection: &str, base: &ModelConfig) -> Result<Vec<Method>, Failure> {
    let mut all: Vec<Method> = ModelConfig::variants(base).into_iter().map(Method::Model).collect();
    all.push(Method::Knn);
    if selection.trim() == "all" {
        return Ok(all);
    }
    let mut out = Vec::new();
    for label in parse_query_list(selection) {
        let label = label.to_lowercase();
        let m = all
            .iter()
            .find(|m| m.label() == label)
            .ok_or_else(|| Failure::usage(format!("unknown variant `{label}`")))?;
        if !out.contains(m) {
            out.push(*m);
        }
    }
    if out.is_empty() {
        return Err(Failure::usage("--variants selects nothing"));
    }
    Ok(out)
}

fn run_eval(a: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::usage("--alpha must lie in (0, 1)"));
    }
    if a.depth == 0 || a.trials == 0 || a.k == 0 || a.n_r == Some(0) {
        return Err(Failure::usage("--depth, --trials, --k and --n-r must be at least 1"));
    }
    let base = ModelConfig {
        k: a.k,
        smoothing: smoothing(Some(a.lambda))?,
        hitting: HittingParams { cap: a.cap, ..HittingParams::default() },
        ..ModelConfig::default()
    };
    base.hitting.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let methods = parse_variants(&a.variants, &base)?;
    let t = load_taxonomy(&a.taxonomy, err)?;
    let index = load_index(&t, a.index.as_deref())?;
    let lists = load_lists_path(&a.truth)
        .map_err(|e| Failure::from(e).with_context(&a.truth))?;
    for w in &lists.warnings {
        writeln!(err, "warning: {w}")?;
    }
    let cfg = EvalConfig { alpha: a.alpha, rng_seed: a.rng_seed, trials: a.trials, ndcg_depth: a.depth, n_r: a.n_r, ..EvalConfig::default() };
    let source = match &index {
        Some(set) => HittingSource::Precomputed(set, base.hitting),
        None => HittingSource::Online(base.hitting),
    };
    let reports = evaluate(&t, &lists.lists, &methods, &cfg, &source)?;
    match a.format {
        Format::Tsv => {
            for r in &reports {
                r.write_tsv(&mut *out)?;
            }
        }
        Format::Doc => {
            serde_json::to_writer_pretty(&mut *out, &reports).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

impl Failure {
    fn with_context(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

fn run_precompute(a: &PrecomputeArgs, err: &mut dyn Write) -> Result<(), Failure> {
    let params = HittingParams { cap: a.cap, tol: a.tol, ..HittingParams::default() };
    params.validate().map_err(|e| Failure::usage(e.to_string()))?;
    let prune = a.prune.unwrap_or(a.cap);
    if !(prune > 0.0 && prune <= a.cap) {
        return Err(Failure::usage("--prune must lie in (0, cap]"));
    }
    let t = load_taxonomy(&a.taxonomy, err)?;
    let targets = if a.targets == "all" {
        all_concepts(&t)
    } else {
        let file = File::open(&a.targets).map_err(|e| Failure::from(e).with_context(Path::new(&a.targets)))?;
        let mut ids = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            ids.push(t.id(&line).ok_or_else(|| Failure::from(Error::UnknownTerm(line.trim().to_string())))?);
        }
        ids
    };
    let set = precompute_hitting(&t, &targets, &params, prune)?;
    set.save(&t, &a.output).map_err(|e| Failure::from(e).with_context(&a.output))?;
    writeln!(err, "wrote {} hitting-time sections to {}", set.len(), a.output.display())?;
    Ok(())
}

fn run_repl(a: &ReplArgs, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let method = a.model.to_method()?;
    let t = load_taxonomy(&a.taxonomy, err)?;
    let index = load_index(&t, a.index.as_deref())?;
    let mut repl = Repl::new(&t, index.as_ref(), method, a.model.top, a.format);
    repl.run(input, out, err)
}
