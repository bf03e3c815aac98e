//! Command-line front end. Every command writes under `--out DIR` and echoes
//! its resolved configuration to `run.cfg`, which `--config` can replay.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Section};
use crate::error::{Error, Result};
use crate::eval::{
    cross_validate, fit_full, gamma_sweep, per_disease_csv, per_disease_metrics, rank_predictions,
    ranking_csv, select_top_diseases, sweep_csv, Dataset, DiseaseSelection, Similarities,
};
use crate::graph::EdgeKind;
use crate::ingest::{
    parse_associations, parse_fasta, synth_dataset, write_associations, write_fasta,
    AssociationMatrix, SequenceSet,
};
use crate::similarity::SequenceSimilarity;

pub const SIDECAR: &str = "run.cfg";

#[derive(Debug, Parser)]
#[command(
    name = "circgcn",
    version,
    about = "circRNA-disease association prediction with a graph convolutional network"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write sequence, GIP and fused similarity matrices plus the graph edge list
    Similarity {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        similarity: SimilarityArgs,
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// k-fold cross-validation over circRNAs
    Cv {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        similarity: SimilarityArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Cross-validation at each edge threshold in a list
    Sweep {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        similarity: SimilarityArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Comma-separated thresholds [default: 0.01,0.1,0.2,0.5,0.8,0.9]
        #[arg(long)]
        gammas: Option<String>,
    },
    /// Train on every circRNA and rank candidates for one disease
    Rank {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        similarity: SimilarityArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Disease identifier; a case-insensitive unique match is accepted
        #[arg(long)]
        disease: Option<String>,
        /// Number of candidates to write [default: 20]
        #[arg(long)]
        top: Option<usize>,
        /// Drop circRNAs already associated with the disease
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        exclude_known: Option<bool>,
    },
    /// Generate a planted-block synthetic dataset
    Synth {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        synth: SynthArgs,
    },
}

type Overrides = Vec<(&'static str, String)>;

fn push<T: ToString>(out: &mut Overrides, key: &'static str, v: &Option<T>) {
    if let Some(v) = v {
        out.push((key, v.to_string()));
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// key=value file; flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Association CSV with circRNA and disease columns
    #[arg(long)]
    pub assoc: Option<PathBuf>,
    /// FASTA of circRNA sequences; without it similarity falls back to GIP
    #[arg(long)]
    pub fasta: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed for folds, initialisation and synthesis [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it [default: 1]
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl InputArgs {
    fn overrides(&self, out: &mut Overrides) {
        push(
            out,
            "assoc",
            &self.assoc.as_ref().map(|p| p.display().to_string()),
        );
        push(
            out,
            "fasta",
            &self.fasta.as_ref().map(|p| p.display().to_string()),
        );
        push(
            out,
            "out",
            &self.out.as_ref().map(|p| p.display().to_string()),
        );
        push(out, "seed", &self.seed);
        push(out, "jobs", &self.jobs);
    }
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    /// Alignment match score [default: 1]
    #[arg(long = "match", allow_hyphen_values = true)]
    pub match_score: Option<i64>,
    /// Alignment mismatch score [default: -1]
    #[arg(long, allow_hyphen_values = true)]
    pub mismatch: Option<i64>,
    /// Linear gap score [default: -1]
    #[arg(long, allow_hyphen_values = true)]
    pub gap: Option<i64>,
    /// GIP bandwidth scale for circRNAs [default: 1]
    #[arg(long)]
    pub alpha_hat_c: Option<f64>,
    /// GIP bandwidth scale for diseases [default: 1]
    #[arg(long)]
    pub alpha_hat_d: Option<f64>,
    /// average | sequence_preferred | gip_only
    #[arg(long)]
    pub fusion: Option<String>,
}

impl SimilarityArgs {
    fn overrides(&self, out: &mut Overrides) {
        push(out, "match", &self.match_score);
        push(out, "mismatch", &self.mismatch);
        push(out, "gap", &self.gap);
        push(out, "alpha-hat-c", &self.alpha_hat_c);
        push(out, "alpha-hat-d", &self.alpha_hat_d);
        push(out, "fusion", &self.fusion);
    }
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Similarity edges need a value strictly above this [default: 0.5]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// [default: true]
    #[arg(long)]
    pub include_disease_edges: Option<bool>,
    /// Link circRNAs to their training diseases [default: true]
    #[arg(long)]
    pub include_assoc_edges: Option<bool>,
}

impl GraphArgs {
    fn overrides(&self, out: &mut Overrides) {
        push(out, "gamma", &self.gamma);
        push(out, "include-disease-edges", &self.include_disease_edges);
        push(out, "include-assoc-edges", &self.include_assoc_edges);
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// [default: 64]
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// Adam step size [default: 0.01]
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// [default: 100]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// [default: true]
    #[arg(long)]
    pub self_loops: Option<bool>,
    /// sum | row_norm
    #[arg(long)]
    pub aggregator: Option<String>,
    /// [default: 0.9]
    #[arg(long)]
    pub adam_beta1: Option<f64>,
    /// [default: 0.999]
    #[arg(long)]
    pub adam_beta2: Option<f64>,
    /// [default: 1e-8]
    #[arg(long)]
    pub adam_eps: Option<f64>,
    /// Loss weight on positive cells [default: 1]
    #[arg(long)]
    pub positive_weight: Option<f64>,
}

impl TrainArgs {
    fn overrides(&self, out: &mut Overrides) {
        push(out, "hidden-dim", &self.hidden_dim);
        push(out, "learning-rate", &self.learning_rate);
        push(out, "epochs", &self.epochs);
        push(out, "self-loops", &self.self_loops);
        push(out, "aggregator", &self.aggregator);
        push(out, "adam-beta1", &self.adam_beta1);
        push(out, "adam-beta2", &self.adam_beta2);
        push(out, "adam-eps", &self.adam_eps);
        push(out, "positive-weight", &self.positive_weight);
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Number of folds [default: 5]
    #[arg(long)]
    pub k: Option<usize>,
    /// Score cutoff for accuracy and F1 [default: 0.5]
    #[arg(long)]
    pub threshold: Option<f64>,
    /// A count of most-associated diseases, or `all`
    #[arg(long)]
    pub n_diseases: Option<String>,
    /// train_only | full
    #[arg(long)]
    pub gip_from: Option<String>,
}

impl EvalArgs {
    fn overrides(&self, out: &mut Overrides) {
        push(out, "k", &self.k);
        push(out, "threshold", &self.threshold);
        push(out, "n-diseases", &self.n_diseases);
        push(out, "gip-from", &self.gip_from);
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// [default: 60]
    #[arg(long)]
    pub n_circ: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    pub n_disease: Option<usize>,
    /// [default: 3]
    #[arg(long)]
    pub n_blocks: Option<usize>,
    /// Association probability inside a block
    #[arg(long)]
    pub intra: Option<f64>,
    /// Association probability outside a block
    #[arg(long)]
    pub noise: Option<f64>,
    /// Block template length [default: 120]
    #[arg(long)]
    pub seq_len: Option<usize>,
    /// Per-base substitution rate from the template [default: 0.05]
    #[arg(long)]
    pub mutation_rate: Option<f64>,
}

impl SynthArgs {
    fn overrides(&self, out: &mut Overrides) {
        push(out, "n-circ", &self.n_circ);
        push(out, "n-disease", &self.n_disease);
        push(out, "n-blocks", &self.n_blocks);
        push(out, "intra", &self.intra);
        push(out, "noise", &self.noise);
        push(out, "seq-len", &self.seq_len);
        push(out, "mutation-rate", &self.mutation_rate);
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn resolve(name: &str, inputs: &InputArgs, overrides: Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &inputs.config {
        cfg.load_file(path)?;
    }
    for (key, value) in overrides {
        cfg.set(key, &value)
            .map_err(|e| Error::Usage(format!("--{key}: {e}")))?;
    }
    cfg.scoring.validate()?;
    if name == "synth" {
        cfg.synth.validate()?;
    } else {
        cfg.eval.validate()?;
    }
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    Ok(cfg)
}

pub fn execute(command: Command) -> Result<()> {
    let mut ov = Overrides::new();
    match command {
        Command::Similarity {
            inputs,
            similarity,
            graph,
        } => {
            inputs.overrides(&mut ov);
            similarity.overrides(&mut ov);
            graph.overrides(&mut ov);
            let cfg = resolve("similarity", &inputs, ov)?;
            cmd_similarity(&cfg)
        }
        Command::Cv {
            inputs,
            similarity,
            graph,
            train,
            eval,
        } => {
            inputs.overrides(&mut ov);
            similarity.overrides(&mut ov);
            graph.overrides(&mut ov);
            train.overrides(&mut ov);
            eval.overrides(&mut ov);
            let cfg = resolve("cv", &inputs, ov)?;
            cmd_cv(&cfg)
        }
        Command::Sweep {
            inputs,
            similarity,
            graph,
            train,
            eval,
            gammas,
        } => {
            inputs.overrides(&mut ov);
            similarity.overrides(&mut ov);
            graph.overrides(&mut ov);
            train.overrides(&mut ov);
            eval.overrides(&mut ov);
            push(&mut ov, "gammas", &gammas);
            let cfg = resolve("sweep", &inputs, ov)?;
            cmd_sweep(&cfg)
        }
        Command::Rank {
            inputs,
            similarity,
            graph,
            train,
            eval,
            disease,
            top,
            exclude_known,
        } => {
            inputs.overrides(&mut ov);
            similarity.overrides(&mut ov);
            graph.overrides(&mut ov);
            train.overrides(&mut ov);
            eval.overrides(&mut ov);
            push(&mut ov, "disease", &disease);
            push(&mut ov, "top", &top);
            push(&mut ov, "exclude-known", &exclude_known);
            let cfg = resolve("rank", &inputs, ov)?;
            cmd_rank(&cfg)
        }
        Command::Synth { inputs, synth } => {
            inputs.overrides(&mut ov);
            synth.overrides(&mut ov);
            let cfg = resolve("synth", &inputs, ov)?;
            cmd_synth(&cfg)
        }
    }
}

const PIPELINE: &[Section] = &[
    Section::Inputs,
    Section::Similarity,
    Section::Graph,
    Section::Train,
    Section::Eval,
];

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        }))
}

fn write_sidecar(cfg: &RunConfig, command: &str, sections: &[Section]) -> Result<()> {
    let mut text = format!("# circgcn {} {command}\n", env!("CARGO_PKG_VERSION"));
    for (key, path) in [("assoc", &cfg.assoc), ("fasta", &cfg.fasta)] {
        if let Some(p) = path {
            if sections.contains(&Section::Inputs) {
                writeln!(text, "# sha256 {key} {}", sha256_hex(p)?).expect("write to string");
            }
        }
    }
    text.push_str(&cfg.render(sections));
    write_out(cfg, SIDECAR, &text)
}

fn write_out(cfg: &RunConfig, name: &str, contents: &str) -> Result<()> {
    let path = cfg.out.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

fn load_inputs(cfg: &RunConfig) -> Result<(AssociationMatrix, Option<SequenceSet>)> {
    let path = cfg
        .assoc
        .as_ref()
        .ok_or_else(|| Error::Usage("--assoc is required".into()))?;
    let assoc = parse_associations(path)?;
    let seqs = cfg.fasta.as_ref().map(parse_fasta).transpose()?;
    Ok((assoc, seqs))
}

/// Applies the disease selection before sequence similarity so only
/// retained circRNAs are aligned.
fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let (assoc, seqs) = load_inputs(cfg)?;
    let n = match cfg.eval.n_diseases {
        DiseaseSelection::All => assoc.n_disease(),
        DiseaseSelection::Top(n) => n,
    };
    let selected = select_top_diseases(&assoc, n)?;
    Dataset::new(selected.assoc, seqs.as_ref(), &cfg.scoring)
}

fn cmd_similarity(cfg: &RunConfig) -> Result<()> {
    let (assoc, seqs) = load_inputs(cfg)?;
    let cs = seqs
        .as_ref()
        .map(|s| SequenceSimilarity::compute(s, assoc.circ_ids(), &cfg.scoring))
        .transpose()?;
    let sims = Similarities::compute(cs.as_ref(), &assoc, &cfg.eval.gip, cfg.eval.fusion)?;
    let graph = sims.graph(&assoc, &cfg.eval.graph)?;
    if let Some(cs) = &cs {
        cs.matrix().write_csv(cfg.out.join("cs.csv"))?;
    }
    sims.cg.write_csv(cfg.out.join("cg.csv"))?;
    sims.dg.write_csv(cfg.out.join("dg.csv"))?;
    sims.fused.write_csv(cfg.out.join("fused.csv"))?;
    graph.write_edge_list(cfg.out.join("edges.csv"))?;
    write_sidecar(
        cfg,
        "similarity",
        &[Section::Inputs, Section::Similarity, Section::Graph],
    )?;
    println!(
        "{} circRNAs, {} diseases, {} edges at gamma {}",
        assoc.n_circ(),
        assoc.n_disease(),
        graph.n_edges(),
        cfg.eval.graph.gamma
    );
    Ok(())
}

fn fmt_auc(auc: Option<f64>) -> String {
    auc.map_or_else(|| "NA".to_string(), |a| format!("{a:.6}"))
}

fn cmd_cv(cfg: &RunConfig) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let report = cross_validate(&ds, &cfg.eval)?;
    write_out(cfg, "metrics.csv", &report.metrics_csv())?;
    for f in &report.folds {
        write_out(
            cfg,
            &format!("history_fold{}.csv", f.fold + 1),
            &f.history.to_csv(),
        )?;
    }
    let diseases: Vec<usize> = (0..ds.labels.n_disease()).collect();
    let per_disease = per_disease_metrics(
        &report.folds,
        &diseases,
        ds.labels.disease_ids(),
        cfg.eval.threshold,
    )?;
    write_out(cfg, "per_disease.csv", &per_disease_csv(&per_disease))?;

    let mut summary = String::new();
    let w = &mut summary;
    let a = &ds.labels;
    writeln!(w, "circRNAs: {}", a.n_circ()).unwrap();
    writeln!(w, "diseases: {}", a.n_disease()).unwrap();
    writeln!(w, "associations: {}", a.n_associations()).unwrap();
    if let Some(cs) = &ds.cs {
        writeln!(w, "circRNAs with sequence: {}", cs.n_present()).unwrap();
    }
    writeln!(w, "folds: {}", cfg.eval.k).unwrap();
    writeln!(w, "mean accuracy: {:.6}", report.average.accuracy).unwrap();
    writeln!(w, "mean f1: {:.6}", report.average.f1).unwrap();
    writeln!(w, "mean auc: {}", fmt_auc(report.average.auc)).unwrap();
    writeln!(w, "degenerate folds: {}", report.degenerate_folds).unwrap();
    for f in &report.folds {
        let g = &f.graph;
        let kind = |k| g.edges_by_kind.get(&k).copied().unwrap_or(0);
        writeln!(
            w,
            "fold {}: edges {} (cc {}, dd {}, cd {}), isolated {}, max degree {}",
            f.fold + 1,
            g.n_edges,
            kind(EdgeKind::CircCirc),
            kind(EdgeKind::DiseaseDisease),
            kind(EdgeKind::CircDisease),
            g.isolated,
            g.degrees.iter().max().copied().unwrap_or(0)
        )
        .unwrap();
    }
    write_out(cfg, "summary.txt", &summary)?;
    write_sidecar(cfg, "cv", PIPELINE)?;
    println!(
        "mean auc {} accuracy {:.6} f1 {:.6} over {} folds",
        fmt_auc(report.average.auc),
        report.average.accuracy,
        report.average.f1,
        cfg.eval.k
    );
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig) -> Result<()> {
    let ds = load_dataset(cfg)?;
    let rows = gamma_sweep(&ds, &cfg.eval, &cfg.gammas)?;
    write_out(cfg, "sweep.csv", &sweep_csv(&rows))?;
    let mut detail = String::from("gamma,accuracy,f1,auc,mean_edges\n");
    for r in &rows {
        writeln!(
            detail,
            "{},{:.6},{:.6},{},{:.1}",
            r.gamma,
            r.accuracy,
            r.f1,
            fmt_auc(r.auc),
            r.mean_edges
        )
        .unwrap();
    }
    write_out(cfg, "sweep_detail.csv", &detail)?;
    let mut sections = PIPELINE.to_vec();
    sections.push(Section::Sweep);
    write_sidecar(cfg, "sweep", &sections)?;
    print!("{detail}");
    Ok(())
}

/// Exact match first, then a unique case-insensitive match.
pub fn resolve_disease(ids: &[String], name: &str) -> Result<usize> {
    if let Some(i) = ids.iter().position(|d| d == name) {
        return Ok(i);
    }
    let lower = name.to_lowercase();
    let folded: Vec<usize> = (0..ids.len())
        .filter(|&i| ids[i].to_lowercase() == lower)
        .collect();
    if let [i] = folded[..] {
        return Ok(i);
    }
    let mut scored: Vec<(f64, &String)> = ids
        .iter()
        .map(|d| (strsim::normalized_levenshtein(&d.to_lowercase(), &lower), d))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let near: Vec<String> = scored
        .iter()
        .take(3)
        .map(|(_, d)| format!("'{d}'"))
        .collect();
    Err(Error::Usage(format!(
        "unknown disease '{name}'; nearest: {}",
        near.join(", ")
    )))
}

fn cmd_rank(cfg: &RunConfig) -> Result<()> {
    let name = cfg
        .disease
        .as_deref()
        .ok_or_else(|| Error::Usage("--disease is required".into()))?;
    let ds = load_dataset(cfg)?;
    let d = resolve_disease(ds.labels.disease_ids(), name)?;
    let (scores, history) = fit_full(&ds, &cfg.eval)?;
    let top = cfg.top.min(ds.labels.n_circ());
    let ranked = rank_predictions(scores.view(), &ds.labels, d, top, cfg.exclude_known)?;
    write_out(cfg, "ranking.csv", &ranking_csv(&ranked))?;
    write_out(cfg, "history.csv", &history.to_csv())?;
    let mut sections = PIPELINE.to_vec();
    sections.push(Section::Rank);
    write_sidecar(cfg, "rank", &sections)?;
    let known = ranked.iter().filter(|r| r.known).count();
    println!(
        "{} candidates for '{}', {known} already known",
        ranked.len(),
        ds.labels.disease_ids()[d]
    );
    Ok(())
}

fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let (seqs, assoc) = synth_dataset(&cfg.synth)?;
    write_fasta(&seqs, cfg.out.join("sequences.fasta"))?;
    write_associations(&assoc, cfg.out.join("associations.csv"))?;
    write_sidecar(cfg, "synth", &[Section::Inputs, Section::Synth])?;
    println!(
        "{} circRNAs, {} diseases, {} associations",
        assoc.n_circ(),
        assoc.n_disease(),
        assoc.n_associations()
    );
    Ok(())
}
