//! Cross-validation harness and evaluation metrics.
//!
//! Folds partition circRNAs: a held-out circRNA keeps its node in the graph
//! but its whole disease row is masked from similarity, graph construction
//! and the loss, then scored against the true row.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::alignment::{ScoringScheme, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::gcn::{self, TrainConfig, TrainHistory};
use crate::graph::{build_graph, graph_stats, Graph, GraphConfig, GraphStats};
use crate::ingest::{AssociationMatrix, AssociationSource, FoldPhase, SequenceSet};
use crate::similarity::{
    circ_gip, disease_gip, drop_unprofiled, fuse_circ_similarity, profiled_circs,
    profiled_diseases, FusionPolicy, GipConfig, SequenceSimilarity,
};

/// Disjoint, balanced partition of circRNA indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub k: usize,
    pub folds: Vec<Vec<usize>>,
    pub seed: u64,
}

impl FoldSplit {
    /// Every index not in fold `f`, ascending.
    pub fn training_rows(&self, f: usize) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        rows.sort_unstable();
        rows
    }
}

/// Shuffles `0..n` with `seed` and deals the indices round-robin into `k` folds.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 || k > n {
        return Err(Error::Usage(format!("need 2 <= k <= n, got k={k}, n={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(FoldSplit { k, folds, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

impl std::ops::Add for Confusion {
    type Output = Confusion;

    fn add(self, o: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + o.tp,
            tn: self.tn + o.tn,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

/// Counts outcomes over `cells`; a cell is predicted positive iff its score
/// is strictly above `threshold`.
pub fn confusion(
    scores: ArrayView2<f64>,
    labels: ArrayView2<u8>,
    cells: &[(usize, usize)],
    threshold: f64,
) -> Result<Confusion> {
    if cells.is_empty() {
        return Err(Error::Data("no cells to evaluate".into()));
    }
    if scores.dim() != labels.dim() {
        return Err(Error::Data(format!(
            "scores {:?} and labels {:?} differ in shape",
            scores.dim(),
            labels.dim()
        )));
    }
    let (rows, cols) = scores.dim();
    let mut c = Confusion::default();
    for &(i, j) in cells {
        if i >= rows || j >= cols {
            return Err(Error::Data(format!("cell ({i},{j}) out of bounds")));
        }
        match (scores[[i, j]] > threshold, labels[[i, j]] == 1) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// `None` when the evaluated cells hold a single class.
    pub auc: Option<f64>,
    pub counts: Confusion,
    /// Some metric hit a 0/0 denominator and was set to 0.
    pub zero_division: bool,
}

impl MetricsRecord {
    fn degenerate(&self) -> bool {
        self.zero_division || self.auc.is_none()
    }
}

/// Accuracy, precision, recall and F1; any 0/0 ratio is reported as 0.
pub fn metrics_from_counts(c: Confusion) -> Result<MetricsRecord> {
    if c.total() == 0 {
        return Err(Error::Data("all confusion counts are zero".into()));
    }
    let mut zero_division = false;
    let mut ratio = |num: u64, den: u64| {
        if den == 0 {
            zero_division = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio(c.tp + c.tn, c.total());
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    Ok(MetricsRecord {
        accuracy,
        precision,
        recall,
        f1,
        auc: None,
        counts: c,
        zero_division,
    })
}

/// Rank-sum (Mann-Whitney) AUC with tied scores counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Data("scores and labels differ in length".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data(
            "AUC needs both positive and negative labels".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // sum of 1-based ranks of the positives, ties sharing their mean rank
    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        let tied_pos = order[start..end].iter().filter(|&&i| labels[i]).count();
        pos_rank_sum += mean_rank * tied_pos as f64;
        start = end;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

fn auc_or_none(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    let has_pos = labels.iter().any(|&l| l);
    let has_neg = labels.iter().any(|&l| !l);
    if has_pos && has_neg {
        auc(scores, labels).map(Some)
    } else {
        Ok(None)
    }
}

/// Where GIP kernels take their interaction profiles from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GipSource {
    /// Held-out rows are zeroed before the kernels are computed.
    #[default]
    TrainOnly,
    /// The complete association matrix, held-out labels included.
    Full,
}

impl GipSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            GipSource::TrainOnly => "train_only",
            GipSource::Full => "full",
        }
    }
}

impl fmt::Display for GipSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GipSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "train_only" | "train" => Ok(GipSource::TrainOnly),
            "full" => Ok(GipSource::Full),
            other => Err(Error::Usage(format!("unknown gip source '{other}'"))),
        }
    }
}

/// Which diseases to keep before evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiseaseSelection {
    #[default]
    All,
    /// The `n` diseases with the most associations.
    Top(usize),
}

impl fmt::Display for DiseaseSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiseaseSelection::All => f.write_str("all"),
            DiseaseSelection::Top(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for DiseaseSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(DiseaseSelection::All);
        }
        s.parse::<usize>()
            .map(DiseaseSelection::Top)
            .map_err(|_| Error::Usage(format!("n-diseases must be a count or 'all', got '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub k: usize,
    pub threshold: f64,
    pub n_diseases: DiseaseSelection,
    pub gip_from: GipSource,
    pub gip: GipConfig,
    pub fusion: FusionPolicy,
    pub graph: GraphConfig,
    pub train: TrainConfig,
    /// Fold-level parallelism; never changes results.
    pub jobs: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 5,
            threshold: 0.5,
            n_diseases: DiseaseSelection::All,
            gip_from: GipSource::TrainOnly,
            gip: GipConfig::default(),
            fusion: FusionPolicy::Average,
            graph: GraphConfig::default(),
            train: TrainConfig::default(),
            jobs: 1,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Usage(format!(
                "k must be at least 2, got {}",
                self.k
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Usage(format!(
                "threshold must lie in (0,1), got {}",
                self.threshold
            )));
        }
        if self.jobs == 0 {
            return Err(Error::Usage("jobs must be at least 1".into()));
        }
        if let DiseaseSelection::Top(0) = self.n_diseases {
            return Err(Error::Usage("n-diseases must be at least 1".into()));
        }
        self.gip.validate()?;
        self.graph.validate()?;
        self.train.validate()
    }
}

/// Labels plus the label-free sequence similarity indexed like them.
#[derive(Debug, Clone)]
pub struct Dataset<S = AssociationMatrix> {
    pub labels: S,
    pub cs: Option<SequenceSimilarity>,
}

impl Dataset<AssociationMatrix> {
    /// Computes sequence similarity for circRNAs that have a sequence.
    pub fn new(
        assoc: AssociationMatrix,
        seqs: Option<&SequenceSet>,
        scheme: &ScoringScheme,
    ) -> Result<Self> {
        let cs = seqs
            .map(|s| SequenceSimilarity::compute(s, assoc.circ_ids(), scheme))
            .transpose()?;
        Ok(Self { labels: assoc, cs })
    }

    /// Restricts to the top diseases and re-indexes the sequence similarity.
    pub fn select(&self, selection: DiseaseSelection) -> Result<Self> {
        let n = match selection {
            DiseaseSelection::All => self.labels.n_disease(),
            DiseaseSelection::Top(n) => n,
        };
        let sel = select_top_diseases(&self.labels, n)?;
        let cs = self
            .cs
            .as_ref()
            .map(|cs| {
                let keep = &sel.circ_index;
                let values = Array2::from_shape_fn((keep.len(), keep.len()), |(a, b)| {
                    cs.matrix().get(keep[a], keep[b])
                });
                let matrix = SimilarityMatrix::new(sel.assoc.circ_ids().to_vec(), values)?;
                let present = keep.iter().map(|&i| cs.present()[i]).collect();
                SequenceSimilarity::with_presence(matrix, present)
            })
            .transpose()?;
        Ok(Self {
            labels: sel.assoc,
            cs,
        })
    }
}

/// Result of [`select_top_diseases`].
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub assoc: AssociationMatrix,
    /// Original index of each retained circRNA.
    pub circ_index: Vec<usize>,
    /// Original index of each retained disease.
    pub disease_index: Vec<usize>,
}

/// Keeps the `n` most-associated diseases (ties by lower index) and drops
/// circRNAs with no association among them. Original order is preserved.
pub fn select_top_diseases(assoc: &AssociationMatrix, n: usize) -> Result<Selection> {
    if n < 1 {
        return Err(Error::Usage("must select at least one disease".into()));
    }
    if n > assoc.n_disease() {
        return Err(Error::Usage(format!(
            "requested {n} diseases but only {} exist",
            assoc.n_disease()
        )));
    }
    let entries = assoc.entries();
    let counts: Vec<usize> = entries
        .columns()
        .into_iter()
        .map(|c| c.iter().filter(|&&v| v == 1).count())
        .collect();
    let mut ranked: Vec<usize> = (0..assoc.n_disease()).collect();
    ranked.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut disease_index = ranked[..n].to_vec();
    disease_index.sort_unstable();

    let circ_index: Vec<usize> = (0..assoc.n_circ())
        .filter(|&i| disease_index.iter().any(|&j| entries[[i, j]] == 1))
        .collect();
    if circ_index.is_empty() {
        return Err(Error::Data(
            "no circRNA is associated with the selected diseases".into(),
        ));
    }
    let sub = Array2::from_shape_fn((circ_index.len(), n), |(a, b)| {
        entries[[circ_index[a], disease_index[b]]]
    });
    let circ_ids = circ_index
        .iter()
        .map(|&i| assoc.circ_ids()[i].clone())
        .collect();
    let disease_ids = disease_index
        .iter()
        .map(|&j| assoc.disease_ids()[j].clone())
        .collect();
    Ok(Selection {
        assoc: AssociationMatrix::new(circ_ids, disease_ids, sub)?,
        circ_index,
        disease_index,
    })
}

/// Everything produced by one fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    /// Held-out circRNA indices, ascending.
    pub held_out: Vec<usize>,
    /// Predicted probabilities for held-out rows, `|held_out| x n_disease`.
    pub scores: Array2<f64>,
    /// True labels for held-out rows.
    pub labels: Array2<u8>,
    pub metrics: MetricsRecord,
    pub history: TrainHistory,
    pub graph: GraphStats,
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub folds: Vec<FoldOutcome>,
    pub average: MetricsRecord,
    pub stddev: MetricsRecord,
    /// Folds where a 0/0 metric or an undefined AUC occurred.
    pub degenerate_folds: usize,
}

impl CvReport {
    pub fn mean_auc(&self) -> Option<f64> {
        self.average.auc
    }

    /// `fold,accuracy,precision,recall,f1,auc` with `average` and `stddev` rows.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("fold,accuracy,precision,recall,f1,auc\n");
        let mut row = |label: &str, m: &MetricsRecord| {
            let auc = m
                .auc
                .map_or_else(|| "NA".to_string(), |a| format!("{a:.6}"));
            writeln!(
                out,
                "{label},{:.6},{:.6},{:.6},{:.6},{auc}",
                m.accuracy, m.precision, m.recall, m.f1
            )
            .expect("write to string");
        };
        for f in &self.folds {
            row(&(f.fold + 1).to_string(), &f.metrics);
        }
        row("average", &self.average);
        row("stddev", &self.stddev);
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Arithmetic mean and population standard deviation across records.
/// AUC statistics use only the records where it is defined.
pub fn summarize(records: &[MetricsRecord]) -> (MetricsRecord, MetricsRecord) {
    let stat =
        |f: &dyn Fn(&MetricsRecord) -> f64| mean_std(&records.iter().map(f).collect::<Vec<_>>());
    let (acc, acc_sd) = stat(&|m| m.accuracy);
    let (pre, pre_sd) = stat(&|m| m.precision);
    let (rec, rec_sd) = stat(&|m| m.recall);
    let (f1, f1_sd) = stat(&|m| m.f1);
    let aucs: Vec<f64> = records.iter().filter_map(|m| m.auc).collect();
    let (auc, auc_sd) = if aucs.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&aucs);
        (Some(m), Some(s))
    };
    let counts = records
        .iter()
        .fold(Confusion::default(), |acc, m| acc + m.counts);
    let zero_division = records.iter().any(|m| m.zero_division);
    (
        MetricsRecord {
            accuracy: acc,
            precision: pre,
            recall: rec,
            f1,
            auc,
            counts,
            zero_division,
        },
        MetricsRecord {
            accuracy: acc_sd,
            precision: pre_sd,
            recall: rec_sd,
            f1: f1_sd,
            auc: auc_sd,
            counts: Confusion::default(),
            zero_division,
        },
    )
}

/// Reads the given rows through the source; every other row stays zero.
fn materialize<S: AssociationSource + ?Sized>(
    labels: &S,
    rows: &[usize],
) -> Result<AssociationMatrix> {
    let d = labels.n_disease();
    let mut entries = Array2::zeros((labels.n_circ(), d));
    for &i in rows {
        let row = labels.row(i);
        if row.len() != d {
            return Err(Error::Data(format!(
                "label row {i} has {} entries, expected {d}",
                row.len()
            )));
        }
        entries
            .row_mut(i)
            .assign(&ndarray::ArrayView1::from(&row[..]));
    }
    AssociationMatrix::new(
        labels.circ_ids().to_vec(),
        labels.disease_ids().to_vec(),
        entries,
    )
}

/// GIP kernels of one association matrix and the fused circRNA similarity.
#[derive(Debug, Clone)]
pub struct Similarities {
    pub cg: SimilarityMatrix,
    pub dg: SimilarityMatrix,
    pub fused: SimilarityMatrix,
    pub disease_profiled: Vec<bool>,
}

impl Similarities {
    pub fn compute(
        cs: Option<&SequenceSimilarity>,
        gip_source: &AssociationMatrix,
        gip: &GipConfig,
        fusion: FusionPolicy,
    ) -> Result<Self> {
        let cg = circ_gip(gip_source, gip)?;
        let dg = disease_gip(gip_source, gip)?;
        let fused = fuse_circ_similarity(cs, &cg, &profiled_circs(gip_source), fusion)?;
        Ok(Self {
            cg,
            dg,
            fused,
            disease_profiled: profiled_diseases(gip_source),
        })
    }

    /// Graph over these similarities with association edges from `as_train`.
    pub fn graph(&self, as_train: &AssociationMatrix, cfg: &GraphConfig) -> Result<Graph> {
        let dg = drop_unprofiled(&self.dg, &self.disease_profiled)?;
        build_graph(&self.fused, &dg, as_train, cfg)
    }
}

fn run_fold<S: AssociationSource + ?Sized>(
    labels: &S,
    cs: Option<&SequenceSimilarity>,
    split: &FoldSplit,
    fold: usize,
    cfg: &EvalConfig,
) -> Result<FoldOutcome> {
    labels.on_phase(fold, FoldPhase::Train);
    let held_out = split.folds[fold].clone();
    let train_rows = split.training_rows(fold);
    let as_train = materialize(labels, &train_rows)?;

    let sims = match cfg.gip_from {
        GipSource::TrainOnly => Similarities::compute(cs, &as_train, &cfg.gip, cfg.fusion)?,
        GipSource::Full => {
            let all: Vec<usize> = (0..labels.n_circ()).collect();
            let full = materialize(labels, &all)?;
            Similarities::compute(cs, &full, &cfg.gip, cfg.fusion)?
        }
    };
    let graph = sims.graph(&as_train, &cfg.graph)?;

    let train_cfg = TrainConfig {
        seed: cfg.train.seed.wrapping_add(fold as u64),
        ..cfg.train.clone()
    };
    let mut held_predictions: Vec<Array2<f64>> = Vec::with_capacity(train_cfg.epochs);
    let (params, train_loss) = gcn::train_observed(
        &graph,
        as_train.entries().view(),
        &train_rows,
        &train_cfg,
        |_, yhat| held_predictions.push(yhat.select(ndarray::Axis(0), &held_out)),
    )?;
    let all_scores = gcn::predict(&graph, &params, &train_cfg)?;
    let scores = all_scores.select(ndarray::Axis(0), &held_out);

    labels.on_phase(fold, FoldPhase::Score);
    let held_truth = materialize(labels, &held_out)?;
    let truth = held_truth.entries().select(ndarray::Axis(0), &held_out);

    let cells: Vec<(usize, usize)> = (0..held_out.len())
        .flat_map(|i| (0..truth.ncols()).map(move |j| (i, j)))
        .collect();
    let counts = confusion(scores.view(), truth.view(), &cells, cfg.threshold)?;
    let mut metrics = metrics_from_counts(counts)?;
    let flat_scores: Vec<f64> = scores.iter().copied().collect();
    let flat_labels: Vec<bool> = truth.iter().map(|&v| v == 1).collect();
    metrics.auc = auc_or_none(&flat_scores, &flat_labels)?;

    let local_mask: Vec<usize> = (0..held_out.len()).collect();
    let val_loss = held_predictions
        .iter()
        .map(|p| {
            gcn::bce_loss(
                p.view(),
                truth.view(),
                &local_mask,
                train_cfg.positive_weight,
            )
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FoldOutcome {
        fold,
        held_out,
        scores,
        labels: truth,
        metrics,
        history: TrainHistory {
            train_loss,
            val_loss: Some(val_loss),
        },
        graph: graph_stats(&graph),
    })
}

/// k-fold cross-validation over circRNAs.
pub fn cross_validate<S: AssociationSource>(ds: &Dataset<S>, cfg: &EvalConfig) -> Result<CvReport> {
    cfg.validate()?;
    let n_circ = ds.labels.n_circ();
    if n_circ < cfg.k {
        return Err(Error::Data(format!(
            "{n_circ} circRNAs cannot fill {} folds",
            cfg.k
        )));
    }
    if ds.labels.n_disease() == 0 {
        return Err(Error::Data("dataset has no diseases".into()));
    }
    if let Some(cs) = &ds.cs {
        if cs.matrix().ids() != ds.labels.circ_ids() {
            return Err(Error::Data(
                "sequence similarity is indexed differently from labels".into(),
            ));
        }
    }
    let split = kfold_split(n_circ, cfg.k, cfg.train.seed)?;
    let cs = ds.cs.as_ref();
    let folds: Vec<FoldOutcome> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {} workers: {e}", cfg.jobs)))?;
        pool.install(|| {
            (0..cfg.k)
                .into_par_iter()
                .map(|f| run_fold(&ds.labels, cs, &split, f, cfg))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        (0..cfg.k)
            .map(|f| run_fold(&ds.labels, cs, &split, f, cfg))
            .collect::<Result<Vec<_>>>()?
    };
    let records: Vec<MetricsRecord> = folds.iter().map(|f| f.metrics.clone()).collect();
    let (average, stddev) = summarize(&records);
    let degenerate_folds = records.iter().filter(|m| m.degenerate()).count();
    Ok(CvReport {
        folds,
        average,
        stddev,
        degenerate_folds,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiseaseMetrics {
    pub disease: usize,
    pub name: String,
    /// Fold-averaged metrics; `auc` is `None` when every fold was single-class.
    pub metrics: MetricsRecord,
}

/// Metrics restricted to each disease's column of the held-out rows,
/// averaged over folds.
pub fn per_disease_metrics(
    folds: &[FoldOutcome],
    diseases: &[usize],
    disease_ids: &[String],
    threshold: f64,
) -> Result<Vec<DiseaseMetrics>> {
    if folds.is_empty() {
        return Err(Error::Data("no evaluated folds".into()));
    }
    diseases
        .iter()
        .map(|&d| {
            let mut records = Vec::with_capacity(folds.len());
            for f in folds {
                if d >= f.scores.ncols() {
                    return Err(Error::Data(format!("disease index {d} out of range")));
                }
                let cells: Vec<(usize, usize)> = (0..f.scores.nrows()).map(|i| (i, d)).collect();
                let counts = confusion(f.scores.view(), f.labels.view(), &cells, threshold)?;
                let mut m = metrics_from_counts(counts)?;
                let col_scores: Vec<f64> = f.scores.column(d).to_vec();
                let col_labels: Vec<bool> = f.labels.column(d).iter().map(|&v| v == 1).collect();
                m.auc = auc_or_none(&col_scores, &col_labels)?;
                records.push(m);
            }
            let (metrics, _) = summarize(&records);
            Ok(DiseaseMetrics {
                disease: d,
                name: disease_ids.get(d).cloned().unwrap_or_else(|| d.to_string()),
                metrics,
            })
        })
        .collect()
}

pub fn per_disease_csv(rows: &[DiseaseMetrics]) -> String {
    let mut out = String::from("disease,accuracy,precision,recall,f1,auc\n");
    for r in rows {
        let m = &r.metrics;
        let auc = m
            .auc
            .map_or_else(|| "NA".to_string(), |a| format!("{a:.6}"));
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{auc}",
            r.name, m.accuracy, m.precision, m.recall, m.f1
        )
        .expect("write to string");
    }
    out
}

/// The threshold grid used when none is given.
pub const DEFAULT_GAMMAS: [f64; 6] = [0.01, 0.1, 0.2, 0.5, 0.8, 0.9];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    /// Mean edge count of the per-fold graphs.
    pub mean_edges: f64,
}

pub fn gamma_sweep<S: AssociationSource>(
    ds: &Dataset<S>,
    cfg: &EvalConfig,
    gammas: &[f64],
) -> Result<Vec<SweepRow>> {
    if gammas.is_empty() {
        return Err(Error::Usage("gamma list is empty".into()));
    }
    gammas
        .iter()
        .map(|&gamma| {
            let mut c = cfg.clone();
            c.graph.gamma = gamma;
            let report = cross_validate(ds, &c)?;
            let mean_edges = report
                .folds
                .iter()
                .map(|f| f.graph.n_edges as f64)
                .sum::<f64>()
                / report.folds.len() as f64;
            Ok(SweepRow {
                gamma,
                accuracy: report.average.accuracy,
                f1: report.average.f1,
                auc: report.average.auc,
                mean_edges,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("gamma,accuracy,f1\n");
    for r in rows {
        writeln!(out, "{},{:.6},{:.6}", r.gamma, r.accuracy, r.f1).expect("write to string");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    pub rank: usize,
    pub circ: usize,
    pub circ_id: String,
    pub score: f64,
    pub known: bool,
}

/// Orders circRNAs by descending score for one disease, ties by lower index.
pub fn rank_predictions(
    scores: ArrayView2<f64>,
    known: &AssociationMatrix,
    disease: usize,
    top_k: usize,
    exclude_known: bool,
) -> Result<Vec<RankedPrediction>> {
    if scores.dim() != known.entries().dim() {
        return Err(Error::Data(
            "scores and known associations differ in shape".into(),
        ));
    }
    if disease >= known.n_disease() {
        return Err(Error::Usage(format!(
            "disease index {disease} out of range"
        )));
    }
    if top_k == 0 {
        return Err(Error::Usage("top_k must be at least 1".into()));
    }
    let mut candidates: Vec<usize> = (0..known.n_circ())
        .filter(|&i| !(exclude_known && known.get(i, disease)))
        .collect();
    candidates.sort_by(|&a, &b| {
        scores[[b, disease]]
            .total_cmp(&scores[[a, disease]])
            .then(a.cmp(&b))
    });
    Ok(candidates
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(r, i)| RankedPrediction {
            rank: r + 1,
            circ: i,
            circ_id: known.circ_ids()[i].clone(),
            score: scores[[i, disease]],
            known: known.get(i, disease),
        })
        .collect())
}

pub fn ranking_csv(rows: &[RankedPrediction]) -> String {
    let mut out = String::from("rank,circRNA,score,known\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{:.6},{}",
            r.rank,
            r.circ_id,
            r.score,
            u8::from(r.known)
        )
        .expect("write to string");
    }
    out
}

/// Trains on every circRNA (no held-out rows) with GIP from the full matrix
/// and returns `n_circ x n_disease` scores.
pub fn fit_full(
    ds: &Dataset<AssociationMatrix>,
    cfg: &EvalConfig,
) -> Result<(Array2<f64>, TrainHistory)> {
    cfg.validate()?;
    let assoc = &ds.labels;
    let graph = Similarities::compute(ds.cs.as_ref(), assoc, &cfg.gip, cfg.fusion)?
        .graph(assoc, &cfg.graph)?;
    let all: Vec<usize> = (0..assoc.n_circ()).collect();
    let (params, history) = gcn::train(&graph, assoc.entries().view(), &all, &[], &cfg.train)?;
    Ok((gcn::predict(&graph, &params, &cfg.train)?, history))
}

/// Randomly permutes the cells of the matrix, preserving the association count.
pub fn shuffle_labels(assoc: &AssociationMatrix, seed: u64) -> AssociationMatrix {
    let mut cells: Vec<u8> = assoc.entries().iter().copied().collect();
    cells.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let entries = Array2::from_shape_vec(assoc.entries().raw_dim(), cells).expect("same shape");
    AssociationMatrix::new(
        assoc.circ_ids().to_vec(),
        assoc.disease_ids().to_vec(),
        entries,
    )
    .expect("shuffle keeps dimensions")
}
