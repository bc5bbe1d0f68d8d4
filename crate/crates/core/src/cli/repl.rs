//! Line-oriented seed refinement session.

use std::io::{BufRead, IsTerminal, Write};

use clap::Parser;

use super::{hitting_source, suggest_explained, write_suggestions, Failure, Format, ModelArgs};
use crate::error::Error;
use crate::granularity::HittingIndexSet;
use crate::inference::{extend_noisy_or, posterior_noisy_or, ConceptDistribution, ConceptModel, Query};
use crate::ranking::Method;
use crate::taxonomy::{Taxonomy, TermId};

const HELP: &str = "\
commands:
  add <entity>       add a seed
  remove <entity>    drop a seed
  show               seeds and effective concepts
  suggest [n]        rank suggestions for the current seeds
  model <flags>      replace the model, e.g. `model --model rem --granularity pp`
  help               this text
  quit               leave";

#[derive(Parser)]
#[command(name = "model", no_binary_name = true)]
struct ModelLine {
    #[command(flatten)]
    model: ModelArgs,
}

/// What the session should do after a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Quit,
}

/// REPL state. The Noisy-Or posterior of the seeds is kept up to date with
/// single-entity extensions, so `suggest` only pays for granularity and
/// scoring.
pub struct Repl<'a> {
    t: &'a Taxonomy,
    index: Option<&'a HittingIndexSet>,
    method: Method,
    top: usize,
    format: Format,
    seeds: Vec<TermId>,
    noisy_or: ConceptDistribution,
}

impl<'a> Repl<'a> {
    pub fn new(t: &'a Taxonomy, index: Option<&'a HittingIndexSet>, method: Method, top: usize, format: Format) -> Self {
        Repl { t, index, method, top, format, seeds: Vec::new(), noisy_or: ConceptDistribution::default() }
    }

    pub fn seeds(&self) -> impl Iterator<Item = &str> + '_ {
        self.seeds.iter().map(|&id| self.t.name(id))
    }

    pub fn method(&self) -> &Method {
        &self.method
    }

    /// The incrementally maintained Noisy-Or posterior of the seeds.
    pub fn noisy_or(&self) -> &ConceptDistribution {
        &self.noisy_or
    }

    /// Reads commands until `quit` or end of input.
    pub fn run(&mut self, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
        let interactive = std::io::stdin().is_terminal();
        let mut line = String::new();
        loop {
            if interactive {
                write!(err, "> ")?;
                err.flush()?;
            }
            line.clear();
            if input.read_line(&mut line)? == 0 {
                return Ok(());
            }
            if self.handle(&line, out, err)? == Flow::Quit {
                return Ok(());
            }
            out.flush()?;
        }
    }

    /// Executes one command line. Recoverable problems are reported on `err`.
    pub fn handle(&mut self, line: &str, out: &mut dyn Write, err: &mut dyn Write) -> Result<Flow, Failure> {
        let line = line.trim();
        let (cmd, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match cmd {
            "" => {}
            "quit" | "exit" => return Ok(Flow::Quit),
            "help" => writeln!(err, "{HELP}")?,
            "add" => self.add(rest, err)?,
            "remove" => self.remove(rest, err)?,
            "show" => self.show(out, err)?,
            "suggest" => {
                let n = if rest.is_empty() {
                    self.top
                } else {
                    match rest.parse::<usize>() {
                        Ok(n) if n > 0 => n,
                        _ => {
                            writeln!(err, "suggest takes a positive count")?;
                            return Ok(Flow::Continue);
                        }
                    }
                };
                self.suggest(n, out, err)?;
            }
            "model" => self.set_model(rest, err)?,
            other => writeln!(err, "unknown command `{other}`\n{HELP}")?,
        }
        Ok(Flow::Continue)
    }

    fn add(&mut self, name: &str, err: &mut dyn Write) -> Result<(), Failure> {
        let id = match self.t.id(name) {
            Some(id) if self.t.n_hypo(id) > 0 => id,
            _ => {
                writeln!(err, "warning: `{}` is not a known entity", name)?;
                return Ok(());
            }
        };
        if self.seeds.contains(&id) {
            writeln!(err, "warning: `{}` is already a seed", self.t.name(id))?;
            return Ok(());
        }
        self.noisy_or = extend_noisy_or(&self.noisy_or, self.t, id)?;
        self.seeds.push(id);
        Ok(())
    }

    fn remove(&mut self, name: &str, err: &mut dyn Write) -> Result<(), Failure> {
        let Some(pos) = self.t.id(name).and_then(|id| self.seeds.iter().position(|&s| s == id)) else {
            writeln!(err, "warning: `{}` is not a seed", name)?;
            return Ok(());
        };
        self.seeds.remove(pos);
        // Noisy-Or has no exact inverse; refold the remaining seeds.
        self.noisy_or = match self.query() {
            Some(q) => posterior_noisy_or(self.t, &q)?,
            None => ConceptDistribution::default(),
        };
        Ok(())
    }

    fn query(&self) -> Option<Query> {
        Query::new(self.t, self.seeds.iter().copied()).ok()
    }

    fn ranked(&self, n: usize, err: &mut dyn Write) -> Result<Option<(crate::ranking::RankedSuggestions, ConceptDistribution)>, Failure> {
        let Some(q) = self.query() else {
            writeln!(err, "no seeds yet; use `add <entity>`")?;
            return Ok(None);
        };
        let known = match self.method {
            Method::Model(cfg) if cfg.concept_model == ConceptModel::NoisyOr => Some(&self.noisy_or),
            _ => None,
        };
        let source = hitting_source(&self.method, self.index);
        match suggest_explained(self.t, &q, &self.method, &source, known, n) {
            Ok(r) => Ok(Some(r)),
            Err(e @ Error::Unconceptualizable) => {
                writeln!(err, "{e}")?;
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    }

    fn suggest(&self, n: usize, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
        if let Some((ranked, _)) = self.ranked(n, err)? {
            write_suggestions(out, self.t, &ranked, None, self.format)?;
        }
        Ok(())
    }

    fn show(&self, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
        writeln!(out, "#seeds\t{}", self.seeds().collect::<Vec<_>>().join(","))?;
        writeln!(out, "#model\t{}", self.method.label())?;
        if let Some((_, concepts)) = self.ranked(1, err)? {
            writeln!(out, "#concept\tweight")?;
            concepts.write_tsv(self.t, &mut *out)?;
        }
        Ok(())
    }

    fn set_model(&mut self, flags: &str, err: &mut dyn Write) -> Result<(), Failure> {
        let parsed = ModelLine::try_parse_from(flags.split_whitespace())
            .map_err(|e| Failure::usage(e.to_string()))
            .and_then(|m| Ok((m.model.to_method()?, m.model.top)));
        match parsed {
            Ok((method, top)) => {
                self.method = method;
                self.top = top;
                writeln!(err, "model {}", self.method.label())?;
            }
            Err(f) => writeln!(err, "{}", f.message.trim_end())?,
        }
        Ok(())
    }
}
