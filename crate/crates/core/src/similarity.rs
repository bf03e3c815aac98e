//! Gaussian interaction profile (GIP) kernels and circRNA similarity fusion.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};

use crate::alignment::{normalized_scores, ScoringScheme, SimilarityMatrix};
use crate::error::{Error, Result};
use crate::ingest::{AssociationMatrix, SequenceSet};

/// Bandwidth scale factors for the circRNA and disease kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GipConfig {
    pub alpha_hat_c: f64,
    pub alpha_hat_d: f64,
}

impl Default for GipConfig {
    fn default() -> Self {
        Self {
            alpha_hat_c: 1.0,
            alpha_hat_d: 1.0,
        }
    }
}

impl GipConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_hat_c > 0.0 && self.alpha_hat_d > 0.0) {
            return Err(Error::Usage("GIP alpha-hat values must be positive".into()));
        }
        Ok(())
    }
}

/// Result of normalizing a kernel bandwidth by the mean squared profile norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Scaled(f64),
    /// Every profile is all-zero; the kernel is undefined.
    Degenerate,
}

/// `alpha_hat / mean_i ||profile_i||^2`.
pub fn gip_bandwidth<P: AsRef<[u8]>>(profiles: &[P], alpha_hat: f64) -> Result<Bandwidth> {
    let Some(first) = profiles.first() else {
        return Err(Error::Data("no interaction profiles".into()));
    };
    let width = first.as_ref().len();
    if profiles.iter().any(|p| p.as_ref().len() != width) {
        return Err(Error::Data("interaction profiles differ in length".into()));
    }
    Ok(bandwidth_of(
        profiles.iter().map(|p| sq_norm(p.as_ref())),
        profiles.len(),
        alpha_hat,
    ))
}

fn sq_norm(p: &[u8]) -> usize {
    p.iter().map(|&v| (v as usize) * (v as usize)).sum()
}

fn bandwidth_of(norms: impl Iterator<Item = usize>, count: usize, alpha_hat: f64) -> Bandwidth {
    let total: usize = norms.sum();
    if total == 0 {
        Bandwidth::Degenerate
    } else {
        Bandwidth::Scaled(alpha_hat / (total as f64 / count as f64))
    }
}

/// Kernel over the rows of `profiles`; identity on a degenerate bandwidth.
fn gip_rows(profiles: ArrayView2<u8>, alpha_hat: f64) -> Array2<f64> {
    let n = profiles.nrows();
    let rows: Vec<&[u8]> = profiles
        .outer_iter()
        .map(|r| r.to_slice().expect("standard layout"))
        .collect();
    let alpha = match bandwidth_of(rows.iter().map(|r| sq_norm(r)), n, alpha_hat) {
        Bandwidth::Scaled(a) => a,
        Bandwidth::Degenerate => return Array2::eye(n),
    };
    let mut out = Array2::eye(n);
    for i in 0..n {
        for j in i + 1..n {
            let dist: usize = rows[i]
                .iter()
                .zip(rows[j])
                .map(|(&a, &b)| if a == b { 0 } else { 1 })
                .sum();
            let v = (-alpha * dist as f64).exp();
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    out
}

/// circRNA kernel over rows of the association matrix.
pub fn circ_gip(assoc: &AssociationMatrix, cfg: &GipConfig) -> Result<SimilarityMatrix> {
    if assoc.n_circ() == 0 || assoc.n_disease() == 0 {
        return Err(Error::Data("association matrix is empty".into()));
    }
    let profiles = assoc.entries().as_standard_layout().into_owned();
    SimilarityMatrix::new(
        assoc.circ_ids().to_vec(),
        gip_rows(profiles.view(), cfg.alpha_hat_c),
    )
}

/// Disease kernel over columns of the association matrix.
pub fn disease_gip(assoc: &AssociationMatrix, cfg: &GipConfig) -> Result<SimilarityMatrix> {
    if assoc.n_circ() == 0 || assoc.n_disease() == 0 {
        return Err(Error::Data("association matrix is empty".into()));
    }
    let profiles = assoc.entries().t().as_standard_layout().into_owned();
    SimilarityMatrix::new(
        assoc.disease_ids().to_vec(),
        gip_rows(profiles.view(), cfg.alpha_hat_d),
    )
}

/// How sequence and GIP similarities combine into one circRNA matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionPolicy {
    #[default]
    Average,
    SequencePreferred,
    GipOnly,
}

impl FusionPolicy {
    pub fn as_str(&self) -> &'static str {
        match self {
            FusionPolicy::Average => "average",
            FusionPolicy::SequencePreferred => "sequence_preferred",
            FusionPolicy::GipOnly => "gip_only",
        }
    }
}

impl fmt::Display for FusionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FusionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "average" => Ok(FusionPolicy::Average),
            "sequence_preferred" => Ok(FusionPolicy::SequencePreferred),
            "gip_only" => Ok(FusionPolicy::GipOnly),
            other => Err(Error::Usage(format!("unknown fusion policy '{other}'"))),
        }
    }
}

/// Sequence similarity indexed by the association matrix's circRNAs, where
/// some circRNAs may have no sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSimilarity {
    matrix: SimilarityMatrix,
    present: Vec<bool>,
}

impl SequenceSimilarity {
    /// Scores every circRNA in `circ_ids` that has a sequence in `seqs`.
    pub fn compute(
        seqs: &SequenceSet,
        circ_ids: &[String],
        scheme: &ScoringScheme,
    ) -> Result<Self> {
        scheme.validate()?;
        let mut present = vec![false; circ_ids.len()];
        let mut with_seq = Vec::new();
        let mut sequences = Vec::new();
        for (i, id) in circ_ids.iter().enumerate() {
            if let Some(s) = seqs.get(id) {
                if s.is_empty() {
                    return Err(Error::Data(format!("sequence '{id}' is empty")));
                }
                present[i] = true;
                with_seq.push(i);
                sequences.push(s);
            }
        }
        let scores = normalized_scores(&sequences, scheme);
        let mut values = Array2::eye(circ_ids.len());
        for (a, &i) in with_seq.iter().enumerate() {
            for (b, &j) in with_seq.iter().enumerate() {
                values[[i, j]] = scores[[a, b]];
            }
        }
        Ok(Self {
            matrix: SimilarityMatrix::new(circ_ids.to_vec(), values)?,
            present,
        })
    }

    /// Wraps a full matrix; every row is treated as having a sequence.
    pub fn complete(matrix: SimilarityMatrix) -> Self {
        let present = vec![true; matrix.n()];
        Self { matrix, present }
    }

    pub fn with_presence(matrix: SimilarityMatrix, present: Vec<bool>) -> Result<Self> {
        if present.len() != matrix.n() {
            return Err(Error::Data(
                "presence mask length differs from matrix".into(),
            ));
        }
        Ok(Self { matrix, present })
    }

    pub fn matrix(&self) -> &SimilarityMatrix {
        &self.matrix
    }

    pub fn present(&self) -> &[bool] {
        &self.present
    }

    pub fn n_present(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }
}

/// Rows of `assoc` with at least one association.
pub fn profiled_circs(assoc: &AssociationMatrix) -> Vec<bool> {
    assoc
        .entries()
        .rows()
        .into_iter()
        .map(|r| r.iter().any(|&v| v != 0))
        .collect()
}

/// Columns of `assoc` with at least one association.
pub fn profiled_diseases(assoc: &AssociationMatrix) -> Vec<bool> {
    assoc
        .entries()
        .columns()
        .into_iter()
        .map(|c| c.iter().any(|&v| v != 0))
        .collect()
}

/// Zeroes off-diagonal kernel entries that involve an empty interaction
/// profile. Two empty profiles are at Hamming distance 0, so the raw kernel
/// calls them identical even though neither carries any evidence.
pub fn drop_unprofiled(kernel: &SimilarityMatrix, profiled: &[bool]) -> Result<SimilarityMatrix> {
    let n = kernel.n();
    if profiled.len() != n {
        return Err(Error::Data(
            "profile mask length differs from kernel".into(),
        ));
    }
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j || (profiled[i] && profiled[j]) {
            kernel.get(i, j)
        } else {
            0.0
        }
    });
    SimilarityMatrix::new(kernel.ids().to_vec(), values)
}

/// Combines sequence similarity (when available) with the circRNA GIP kernel.
///
/// A pair's sequence score counts only when both circRNAs have a sequence and
/// its GIP score only when both have a non-empty profile (`profiled`). When
/// only one source counts it is used alone; when neither does the pair gets 0.
pub fn fuse_circ_similarity(
    cs: Option<&SequenceSimilarity>,
    cg: &SimilarityMatrix,
    profiled: &[bool],
    policy: FusionPolicy,
) -> Result<SimilarityMatrix> {
    let n = cg.n();
    if profiled.len() != n {
        return Err(Error::Data(
            "profile mask length differs from kernel".into(),
        ));
    }
    if let Some(cs) = cs {
        if cs.matrix.n() != n || cs.matrix.ids() != cg.ids() {
            return Err(Error::Data(format!(
                "sequence similarity ({}) and GIP similarity ({n}) are indexed differently",
                cs.matrix.n()
            )));
        }
    }
    let mut values = Array2::eye(n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let seq = cs
                .filter(|cs| cs.present[i] && cs.present[j])
                .map(|cs| cs.matrix.get(i, j));
            let gip = (profiled[i] && profiled[j]).then(|| cg.get(i, j));
            values[[i, j]] = match (policy, seq, gip) {
                (FusionPolicy::Average, Some(s), Some(g)) => (s + g) / 2.0,
                (FusionPolicy::GipOnly, _, g) => g.unwrap_or(0.0),
                (FusionPolicy::SequencePreferred, Some(s), _) => s,
                (_, s, g) => s.or(g).unwrap_or(0.0),
            };
        }
    }
    SimilarityMatrix::new(cg.ids().to_vec(), values)
}
