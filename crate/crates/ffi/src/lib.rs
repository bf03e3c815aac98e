//! C ABI over `circgcn`.
//!
//! Datasets are opaque handles created by `cg_dataset_load` or
//! `cg_dataset_synth` and released with `cg_dataset_free`. Every fallible
//! call returns a `CgStatus`; on failure `cg_last_error` describes the most
//! recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use circgcn::eval::{self, DiseaseSelection, GipSource};
use circgcn::gcn::Aggregator;
use circgcn::ingest::{parse_associations, parse_fasta, synth_dataset};
use circgcn::similarity::FusionPolicy;
use circgcn::{Dataset, Error, EvalConfig, ScoringScheme, SyntheticSpec};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgStatus {
    Ok = 0,
    Usage = 1,
    Data = 2,
    Numeric = 3,
    Io = 4,
    NullArgument = 5,
    BufferSize = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CgFusion {
    Average = 0,
    SequencePreferred = 1,
    GipOnly = 2,
}

/// Pipeline settings. Obtain defaults from `cg_config_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgConfig {
    pub k: usize,
    pub threshold: f64,
    /// Keep only this many most-associated diseases; 0 keeps all.
    pub n_diseases: usize,
    /// Compute GIP kernels from the full matrix instead of training rows.
    pub gip_full: bool,
    pub alpha_hat_c: f64,
    pub alpha_hat_d: f64,
    pub fusion: CgFusion,
    pub gamma: f64,
    pub include_disease_edges: bool,
    pub include_assoc_edges: bool,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub self_loops: bool,
    pub row_norm: bool,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub positive_weight: f64,
    pub jobs: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CgMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// NaN when `auc_defined` is false.
    pub auc: f64,
    pub auc_defined: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CgSynthSpec {
    pub n_circ: usize,
    pub n_disease: usize,
    pub n_blocks: usize,
    pub intra_block_assoc_prob: f64,
    pub noise_prob: f64,
    pub seq_len: usize,
    pub mutation_rate: f64,
    pub seed: u64,
}

/// Labels plus optional sequence similarity.
pub struct CgDataset {
    inner: Dataset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CgStatus {
    match e {
        Error::Io { .. } => CgStatus::Io,
        Error::Parse { .. } | Error::Data(_) => CgStatus::Data,
        Error::Usage(_) => CgStatus::Usage,
        Error::Numeric(_) => CgStatus::Numeric,
    }
}

struct Failure(CgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(CgStatus::NullArgument, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status plus last-error text.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CgStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            CgStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CgStatus::Usage, format!("{what} is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

impl CgConfig {
    fn to_eval(self) -> EvalConfig {
        let mut c = EvalConfig {
            k: self.k,
            threshold: self.threshold,
            n_diseases: match self.n_diseases {
                0 => DiseaseSelection::All,
                n => DiseaseSelection::Top(n),
            },
            gip_from: if self.gip_full {
                GipSource::Full
            } else {
                GipSource::TrainOnly
            },
            ..EvalConfig::default()
        };
        c.gip.alpha_hat_c = self.alpha_hat_c;
        c.gip.alpha_hat_d = self.alpha_hat_d;
        c.fusion = match self.fusion {
            CgFusion::Average => FusionPolicy::Average,
            CgFusion::SequencePreferred => FusionPolicy::SequencePreferred,
            CgFusion::GipOnly => FusionPolicy::GipOnly,
        };
        c.graph.gamma = self.gamma;
        c.graph.include_disease_edges = self.include_disease_edges;
        c.graph.include_assoc_edges = self.include_assoc_edges;
        let t = &mut c.train;
        t.hidden_dim = self.hidden_dim;
        t.learning_rate = self.learning_rate;
        t.epochs = self.epochs;
        t.seed = self.seed;
        t.self_loops = self.self_loops;
        t.aggregator = if self.row_norm {
            Aggregator::RowNorm
        } else {
            Aggregator::Sum
        };
        t.adam_beta1 = self.adam_beta1;
        t.adam_beta2 = self.adam_beta2;
        t.adam_eps = self.adam_eps;
        t.positive_weight = self.positive_weight;
        c.jobs = self.jobs;
        c
    }
}

fn metrics_of(m: &eval::MetricsRecord) -> CgMetrics {
    CgMetrics {
        accuracy: m.accuracy,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        auc: m.auc.unwrap_or(f64::NAN),
        auc_defined: m.auc.is_some(),
    }
}

fn selected(ds: &Dataset, cfg: &EvalConfig) -> Result<Dataset, Failure> {
    Ok(match cfg.n_diseases {
        DiseaseSelection::All => ds.clone(),
        sel => ds.select(sel)?,
    })
}

#[no_mangle]
pub extern "C" fn cg_config_default() -> CgConfig {
    let c = EvalConfig::default();
    CgConfig {
        k: c.k,
        threshold: c.threshold,
        n_diseases: 0,
        gip_full: c.gip_from == GipSource::Full,
        alpha_hat_c: c.gip.alpha_hat_c,
        alpha_hat_d: c.gip.alpha_hat_d,
        fusion: CgFusion::Average,
        gamma: c.graph.gamma,
        include_disease_edges: c.graph.include_disease_edges,
        include_assoc_edges: c.graph.include_assoc_edges,
        hidden_dim: c.train.hidden_dim,
        learning_rate: c.train.learning_rate,
        epochs: c.train.epochs,
        seed: c.train.seed,
        self_loops: c.train.self_loops,
        row_norm: c.train.aggregator == Aggregator::RowNorm,
        adam_beta1: c.train.adam_beta1,
        adam_beta2: c.train.adam_beta2,
        adam_eps: c.train.adam_eps,
        positive_weight: c.train.positive_weight,
        jobs: c.jobs,
    }
}

#[no_mangle]
pub extern "C" fn cg_synth_spec_default() -> CgSynthSpec {
    let s = SyntheticSpec::default();
    CgSynthSpec {
        n_circ: s.n_circ,
        n_disease: s.n_disease,
        n_blocks: s.n_blocks,
        intra_block_assoc_prob: s.intra_block_assoc_prob,
        noise_prob: s.noise_prob,
        seq_len: s.seq_len,
        mutation_rate: s.mutation_rate,
        seed: s.seed,
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads an association CSV and an optional FASTA (`fasta_path` may be NULL)
/// using the default alignment scoring.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_dataset_load(
    assoc_path: *const c_char,
    fasta_path: *const c_char,
    out: *mut *mut CgDataset,
) -> CgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let assoc = parse_associations(path_arg(assoc_path, "assoc_path")?)?;
        let seqs = if fasta_path.is_null() {
            None
        } else {
            Some(parse_fasta(path_arg(fasta_path, "fasta_path")?)?)
        };
        let inner = Dataset::new(assoc, seqs.as_ref(), &ScoringScheme::default())?;
        *out = Box::into_raw(Box::new(CgDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `spec` must point to a valid struct; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_dataset_synth(
    spec: *const CgSynthSpec,
    out: *mut *mut CgDataset,
) -> CgStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let s = spec.as_ref().ok_or_else(|| null("spec"))?;
        let spec = SyntheticSpec {
            n_circ: s.n_circ,
            n_disease: s.n_disease,
            n_blocks: s.n_blocks,
            intra_block_assoc_prob: s.intra_block_assoc_prob,
            noise_prob: s.noise_prob,
            seq_len: s.seq_len,
            mutation_rate: s.mutation_rate,
            seed: s.seed,
        };
        let (seqs, assoc) = synth_dataset(&spec)?;
        let inner = Dataset::new(assoc, Some(&seqs), &ScoringScheme::default())?;
        *out = Box::into_raw(Box::new(CgDataset { inner }));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn cg_dataset_free(ds: *mut CgDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn cg_dataset_n_circ(ds: *const CgDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.labels.n_circ())
}

/// # Safety
/// `ds` must be a live handle or NULL (returns 0).
#[no_mangle]
pub unsafe extern "C" fn cg_dataset_n_disease(ds: *const CgDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.labels.n_disease())
}

/// k-fold cross-validation. Writes fold-averaged metrics to `average` and
/// their population standard deviation to `stddev` (may be NULL).
///
/// # Safety
/// Pointers must be valid; `stddev` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn cg_cross_validate(
    ds: *const CgDataset,
    cfg: *const CgConfig,
    average: *mut CgMetrics,
    stddev: *mut CgMetrics,
) -> CgStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("ds"))?;
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?.to_eval();
        let average = average.as_mut().ok_or_else(|| null("average"))?;
        let data = selected(&ds.inner, &cfg)?;
        let report = eval::cross_validate(&data, &cfg)?;
        *average = metrics_of(&report.average);
        if let Some(sd) = stddev.as_mut() {
            *sd = metrics_of(&report.stddev);
        }
        Ok(())
    })
}

/// Trains on every circRNA and writes `n_circ * n_disease` scores row-major.
/// With a disease selection the shape is that of the selected dataset;
/// `written` receives the number of values.
///
/// # Safety
/// `scores` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn cg_predict(
    ds: *const CgDataset,
    cfg: *const CgConfig,
    scores: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> CgStatus {
    guard(|| {
        let ds = ds.as_ref().ok_or_else(|| null("ds"))?;
        let cfg = cfg.as_ref().ok_or_else(|| null("cfg"))?.to_eval();
        if scores.is_null() {
            return Err(null("scores"));
        }
        let data = selected(&ds.inner, &cfg)?;
        let (predicted, _) = eval::fit_full(&data, &cfg)?;
        let n = predicted.len();
        if let Some(w) = written.as_mut() {
            *w = n;
        }
        if capacity < n {
            return Err(Failure(
                CgStatus::BufferSize,
                format!("buffer holds {capacity} values, need {n}"),
            ));
        }
        let out = std::slice::from_raw_parts_mut(scores, n);
        for (dst, src) in out.iter_mut().zip(predicted.iter()) {
            *dst = *src;
        }
        Ok(())
    })
}

/// Global alignment score with linear gaps.
///
/// # Safety
/// `a` and `b` must hold `a_len` and `b_len` bytes (may be NULL when empty).
#[no_mangle]
pub unsafe extern "C" fn cg_nw_score(
    a: *const u8,
    a_len: usize,
    b: *const u8,
    b_len: usize,
    match_score: i64,
    mismatch: i64,
    gap: i64,
) -> i64 {
    let bytes = |p: *const u8, n: usize| {
        if n == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(p, n)
        }
    };
    let scheme = ScoringScheme {
        match_score,
        mismatch,
        gap,
    };
    circgcn::nw_score(bytes(a, a_len), bytes(b, b_len), &scheme)
}

/// Rank-based ROC AUC; labels are 0 or 1.
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cg_auc(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    out: *mut f64,
) -> CgStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() {
            return Err(null("scores or labels"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let s = std::slice::from_raw_parts(scores, n);
        let l: Vec<bool> = std::slice::from_raw_parts(labels, n)
            .iter()
            .map(|&v| v != 0)
            .collect();
        *out = eval::auc(s, &l)?;
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
