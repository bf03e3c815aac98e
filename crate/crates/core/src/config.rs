//! Fully resolved run configuration and its `key=value` text form.
//!
//! Keys are the kebab-case flag names. A config file supplies values,
//! command-line flags override them, and every command echoes the resolved
//! result to `run.cfg` so the run can be replayed with `--config`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::alignment::ScoringScheme;
use crate::error::{Error, Result};
use crate::eval::{EvalConfig, DEFAULT_GAMMAS};
use crate::ingest::SyntheticSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Section {
    Inputs,
    Similarity,
    Graph,
    Train,
    Eval,
    Sweep,
    Rank,
    Synth,
}

/// Every recognized key with the section it belongs to.
pub const KEYS: &[(&str, Section)] = &[
    ("assoc", Section::Inputs),
    ("fasta", Section::Inputs),
    ("out", Section::Inputs),
    ("seed", Section::Inputs),
    ("jobs", Section::Inputs),
    ("match", Section::Similarity),
    ("mismatch", Section::Similarity),
    ("gap", Section::Similarity),
    ("alpha-hat-c", Section::Similarity),
    ("alpha-hat-d", Section::Similarity),
    ("fusion", Section::Similarity),
    ("gamma", Section::Graph),
    ("include-disease-edges", Section::Graph),
    ("include-assoc-edges", Section::Graph),
    ("hidden-dim", Section::Train),
    ("learning-rate", Section::Train),
    ("epochs", Section::Train),
    ("self-loops", Section::Train),
    ("aggregator", Section::Train),
    ("adam-beta1", Section::Train),
    ("adam-beta2", Section::Train),
    ("adam-eps", Section::Train),
    ("positive-weight", Section::Train),
    ("k", Section::Eval),
    ("threshold", Section::Eval),
    ("n-diseases", Section::Eval),
    ("gip-from", Section::Eval),
    ("gammas", Section::Sweep),
    ("disease", Section::Rank),
    ("top", Section::Rank),
    ("exclude-known", Section::Rank),
    ("n-circ", Section::Synth),
    ("n-disease", Section::Synth),
    ("n-blocks", Section::Synth),
    ("intra", Section::Synth),
    ("noise", Section::Synth),
    ("seq-len", Section::Synth),
    ("mutation-rate", Section::Synth),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub assoc: Option<PathBuf>,
    pub fasta: Option<PathBuf>,
    pub out: PathBuf,
    pub scoring: ScoringScheme,
    /// Also carries the master seed (`eval.train.seed`) and `jobs`.
    pub eval: EvalConfig,
    pub gammas: Vec<f64>,
    pub disease: Option<String>,
    pub top: usize,
    pub exclude_known: bool,
    pub synth: SyntheticSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eval = EvalConfig::default();
        Self {
            assoc: None,
            fasta: None,
            out: PathBuf::from("out"),
            scoring: ScoringScheme::default(),
            synth: SyntheticSpec {
                seed: eval.train.seed,
                ..SyntheticSpec::default()
            },
            eval,
            gammas: DEFAULT_GAMMAS.to_vec(),
            disease: None,
            top: 20,
            exclude_known: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Usage(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Usage(format!(
            "invalid boolean '{value}' for '{key}'"
        ))),
    }
}

pub fn parse_gammas(value: &str) -> Result<Vec<f64>> {
    let gammas = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse::<f64>("gammas", s))
        .collect::<Result<Vec<_>>>()?;
    if gammas.is_empty() {
        return Err(Error::Usage("gamma list is empty".into()));
    }
    if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::Usage(format!("gamma {g} outside [0,1]")));
    }
    Ok(gammas)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let t = &mut self.eval.train;
        match key {
            "assoc" => self.assoc = Some(PathBuf::from(v)),
            "fasta" => self.fasta = (!v.is_empty()).then(|| PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "seed" => {
                t.seed = parse(key, v)?;
                self.synth.seed = t.seed;
            }
            "jobs" => self.eval.jobs = parse(key, v)?,
            "match" => self.scoring.match_score = parse(key, v)?,
            "mismatch" => self.scoring.mismatch = parse(key, v)?,
            "gap" => self.scoring.gap = parse(key, v)?,
            "alpha-hat-c" => self.eval.gip.alpha_hat_c = parse(key, v)?,
            "alpha-hat-d" => self.eval.gip.alpha_hat_d = parse(key, v)?,
            "fusion" => self.eval.fusion = v.parse()?,
            "gamma" => self.eval.graph.gamma = parse(key, v)?,
            "include-disease-edges" => self.eval.graph.include_disease_edges = parse_bool(key, v)?,
            "include-assoc-edges" => self.eval.graph.include_assoc_edges = parse_bool(key, v)?,
            "hidden-dim" => t.hidden_dim = parse(key, v)?,
            "learning-rate" => t.learning_rate = parse(key, v)?,
            "epochs" => t.epochs = parse(key, v)?,
            "self-loops" => t.self_loops = parse_bool(key, v)?,
            "aggregator" => t.aggregator = v.parse()?,
            "adam-beta1" => t.adam_beta1 = parse(key, v)?,
            "adam-beta2" => t.adam_beta2 = parse(key, v)?,
            "adam-eps" => t.adam_eps = parse(key, v)?,
            "positive-weight" => t.positive_weight = parse(key, v)?,
            "k" => self.eval.k = parse(key, v)?,
            "threshold" => self.eval.threshold = parse(key, v)?,
            "n-diseases" => self.eval.n_diseases = v.parse()?,
            "gip-from" => self.eval.gip_from = v.parse()?,
            "gammas" => self.gammas = parse_gammas(v)?,
            "disease" => self.disease = Some(v.to_string()),
            "top" => self.top = parse(key, v)?,
            "exclude-known" => self.exclude_known = parse_bool(key, v)?,
            "n-circ" => self.synth.n_circ = parse(key, v)?,
            "n-disease" => self.synth.n_disease = parse(key, v)?,
            "n-blocks" => self.synth.n_blocks = parse(key, v)?,
            "intra" => self.synth.intra_block_assoc_prob = parse(key, v)?,
            "noise" => self.synth.noise_prob = parse(key, v)?,
            "seq-len" => self.synth.seq_len = parse(key, v)?,
            "mutation-rate" => self.synth.mutation_rate = parse(key, v)?,
            other => return Err(Error::Usage(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Current value of `key`, formatted so that `set` reads it back exactly.
    pub fn get(&self, key: &str) -> Option<String> {
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let t = &self.eval.train;
        let g = &self.eval.graph;
        Some(match key {
            "assoc" => path(&self.assoc),
            "fasta" => path(&self.fasta),
            "out" => self.out.display().to_string(),
            "seed" => t.seed.to_string(),
            "jobs" => self.eval.jobs.to_string(),
            "match" => self.scoring.match_score.to_string(),
            "mismatch" => self.scoring.mismatch.to_string(),
            "gap" => self.scoring.gap.to_string(),
            "alpha-hat-c" => self.eval.gip.alpha_hat_c.to_string(),
            "alpha-hat-d" => self.eval.gip.alpha_hat_d.to_string(),
            "fusion" => self.eval.fusion.to_string(),
            "gamma" => g.gamma.to_string(),
            "include-disease-edges" => g.include_disease_edges.to_string(),
            "include-assoc-edges" => g.include_assoc_edges.to_string(),
            "hidden-dim" => t.hidden_dim.to_string(),
            "learning-rate" => t.learning_rate.to_string(),
            "epochs" => t.epochs.to_string(),
            "self-loops" => t.self_loops.to_string(),
            "aggregator" => t.aggregator.to_string(),
            "adam-beta1" => t.adam_beta1.to_string(),
            "adam-beta2" => t.adam_beta2.to_string(),
            "adam-eps" => t.adam_eps.to_string(),
            "positive-weight" => t.positive_weight.to_string(),
            "k" => self.eval.k.to_string(),
            "threshold" => self.eval.threshold.to_string(),
            "n-diseases" => self.eval.n_diseases.to_string(),
            "gip-from" => self.eval.gip_from.to_string(),
            "gammas" => self
                .gammas
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(","),
            "disease" => self.disease.clone().unwrap_or_default(),
            "top" => self.top.to_string(),
            "exclude-known" => self.exclude_known.to_string(),
            "n-circ" => self.synth.n_circ.to_string(),
            "n-disease" => self.synth.n_disease.to_string(),
            "n-blocks" => self.synth.n_blocks.to_string(),
            "intra" => self.synth.intra_block_assoc_prob.to_string(),
            "noise" => self.synth.noise_prob.to_string(),
            "seq-len" => self.synth.seq_len.to_string(),
            "mutation-rate" => self.synth.mutation_rate.to_string(),
            _ => return None,
        })
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Usage(format!(
                    "{}:{}: expected key=value",
                    origin.display(),
                    n + 1
                ))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| Error::Usage(format!("{}:{}: {e}", origin.display(), n + 1)))?;
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text, path)
    }

    /// `key=value` lines for the given sections, in declaration order.
    pub fn render(&self, sections: &[Section]) -> String {
        let mut out = String::new();
        for (key, section) in KEYS {
            if sections.contains(section) {
                let value = self.get(key).expect("every declared key has a value");
                // unset optional keys are omitted so replay leaves them unset
                if value.is_empty() && matches!(*key, "assoc" | "fasta" | "disease") {
                    continue;
                }
                writeln!(out, "{key}={value}").expect("write to string");
            }
        }
        out
    }
}
