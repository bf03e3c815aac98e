//! Needleman-Wunsch global alignment and normalized sequence similarity.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::SequenceSet;

/// Linear-gap scoring for global alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoringScheme {
    pub match_score: i64,
    pub mismatch: i64,
    pub gap: i64,
}

impl Default for ScoringScheme {
    fn default() -> Self {
        Self {
            match_score: 1,
            mismatch: -1,
            gap: -1,
        }
    }
}

impl ScoringScheme {
    pub fn validate(&self) -> Result<()> {
        if self.match_score <= 0 {
            return Err(Error::Usage(format!(
                "match score must be positive, got {}",
                self.match_score
            )));
        }
        if self.mismatch > 0 || self.gap > 0 {
            return Err(Error::Usage(
                "mismatch and gap scores must be non-positive".into(),
            ));
        }
        Ok(())
    }
}

/// Optimal global alignment score of `a` and `b`.
pub fn nw_score(a: &[u8], b: &[u8], scheme: &ScoringScheme) -> i64 {
    // keep the shorter sequence along the row to minimize memory
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<i64> = (0..=b.len() as i64).map(|j| j * scheme.gap).collect();
    let mut cur = vec![0i64; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = (i as i64 + 1) * scheme.gap;
        for (j, &cb) in b.iter().enumerate() {
            let sub = if ca == cb {
                scheme.match_score
            } else {
                scheme.mismatch
            };
            let diag = prev[j] + sub;
            let up = prev[j + 1] + scheme.gap;
            let left = cur[j] + scheme.gap;
            cur[j + 1] = diag.max(up).max(left);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Dense symmetric similarity matrix with entries in [0,1] and unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    ids: Vec<String>,
    values: Array2<f64>,
}

impl SimilarityMatrix {
    pub fn new(ids: Vec<String>, values: Array2<f64>) -> Result<Self> {
        let n = ids.len();
        if values.dim() != (n, n) {
            return Err(Error::Data(format!(
                "similarity values are {:?} for {n} ids",
                values.dim()
            )));
        }
        Ok(Self { ids, values })
    }

    pub fn identity(ids: Vec<String>) -> Self {
        let n = ids.len();
        Self {
            ids,
            values: Array2::eye(n),
        }
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Symmetric, unit-diagonal and inside [0,1].
    pub fn is_well_formed(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| {
            self.values[[i, i]] == 1.0
                && (0..n).all(|j| {
                    let v = self.values[[i, j]];
                    v == self.values[[j, i]] && (0.0..=1.0).contains(&v)
                })
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("id");
        for id in &self.ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (i, id) in self.ids.iter().enumerate() {
            out.push_str(id);
            for v in self.values.row(i) {
                out.push(',');
                out.push_str(&format!("{v:.9e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty similarity file"))?;
        let ids: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
        let n = ids.len();
        let mut values = Array2::zeros((n, n));
        for i in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(path, i + 2, "missing matrix row"))?;
            let mut cells = line.split(',');
            let row_id = cells.next().unwrap_or_default();
            if row_id != ids[i] {
                return Err(Error::parse(
                    path,
                    i + 2,
                    format!("row id '{row_id}' != '{}'", ids[i]),
                ));
            }
            for j in 0..n {
                let cell = cells
                    .next()
                    .ok_or_else(|| Error::parse(path, i + 2, "short matrix row"))?;
                values[[i, j]] = cell
                    .parse()
                    .map_err(|_| Error::parse(path, i + 2, format!("bad number '{cell}'")))?;
            }
        }
        Self::new(ids, values)
    }
}

/// Normalized alignment similarity over all sequences in the set:
/// `NW(i,j) / sqrt(NW(i,i) * NW(j,j))`, clamped to [0,1].
pub fn sequence_similarity(set: &SequenceSet, scheme: &ScoringScheme) -> Result<SimilarityMatrix> {
    scheme.validate()?;
    let seqs: Vec<&[u8]> = set.iter().map(|(_, s)| s).collect();
    if let Some((id, _)) = set.iter().find(|(_, s)| s.is_empty()) {
        return Err(Error::Data(format!("sequence '{id}' is empty")));
    }
    let values = normalized_scores(&seqs, scheme);
    SimilarityMatrix::new(set.ids().to_vec(), values)
}

pub(crate) fn normalized_scores(seqs: &[&[u8]], scheme: &ScoringScheme) -> Array2<f64> {
    let n = seqs.len();
    let self_scores: Vec<f64> = seqs
        .par_iter()
        .map(|s| nw_score(s, s, scheme) as f64)
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let scores: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let raw = nw_score(seqs[i], seqs[j], scheme) as f64
                / (self_scores[i] * self_scores[j]).sqrt();
            raw.clamp(0.0, 1.0)
        })
        .collect();
    let mut values = Array2::eye(n);
    for (&(i, j), &v) in pairs.iter().zip(&scores) {
        values[[i, j]] = v;
        values[[j, i]] = v;
    }
    values
}
