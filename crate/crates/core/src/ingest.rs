//! Loading sequences and known associations, plus planted synthetic datasets.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// circRNA sequences keyed by identifier, in file order.
///
/// Sequences are uppercased and `U` is folded to `T` on load so that RNA and
/// DNA inputs score against the same alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SequenceSet {
    ids: Vec<String>,
    seqs: Vec<Vec<u8>>,
    by_id: HashMap<String, usize>,
}

impl SequenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a record. Fails on a duplicate id or an illegal character.
    pub fn push(&mut self, id: impl Into<String>, seq: &[u8]) -> Result<usize> {
        let id = id.into();
        if self.by_id.contains_key(&id) {
            return Err(Error::Data(format!("duplicate sequence identifier '{id}'")));
        }
        let mut normalized = Vec::with_capacity(seq.len());
        for &b in seq {
            match normalize_base(b) {
                Some(n) => normalized.push(n),
                None => {
                    return Err(Error::Data(format!(
                        "illegal character '{}' in sequence '{id}'",
                        b as char
                    )))
                }
            }
        }
        let idx = self.ids.len();
        self.by_id.insert(id.clone(), idx);
        self.ids.push(id);
        self.seqs.push(normalized);
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn seq(&self, idx: usize) -> &[u8] {
        &self.seqs[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[u8]> {
        self.index_of(id).map(|i| self.seqs[i].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[u8])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.seqs.iter().map(Vec::as_slice))
    }
}

fn normalize_base(b: u8) -> Option<u8> {
    match b.to_ascii_uppercase() {
        b'U' => Some(b'T'),
        c @ (b'A' | b'C' | b'G' | b'T' | b'N') => Some(c),
        _ => None,
    }
}

/// Parses FASTA text. `origin` is used in error messages only.
pub fn parse_fasta_str(text: &str, origin: &Path) -> Result<SequenceSet> {
    let mut set = SequenceSet::new();
    let mut current: Option<(String, Vec<u8>, usize)> = None;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            if let Some((id, seq, at)) = current.take() {
                set.push(id, &seq)
                    .map_err(|e| Error::parse(origin, at, e.to_string()))?;
            }
            let id = header
                .split_whitespace()
                .next()
                .ok_or_else(|| Error::parse(origin, lineno, "header without identifier"))?;
            if set.index_of(id).is_some() {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("duplicate identifier '{id}'"),
                ));
            }
            current = Some((id.to_string(), Vec::new(), lineno));
        } else {
            let Some((_, seq, _)) = current.as_mut() else {
                return Err(Error::parse(
                    origin,
                    lineno,
                    "sequence line before any header",
                ));
            };
            for (col, b) in line.bytes().enumerate() {
                match normalize_base(b) {
                    Some(n) => seq.push(n),
                    None => {
                        return Err(Error::parse(
                            origin,
                            lineno,
                            format!("illegal character '{}' at column {}", b as char, col + 1),
                        ))
                    }
                }
            }
        }
    }
    if let Some((id, seq, at)) = current.take() {
        set.push(id, &seq)
            .map_err(|e| Error::parse(origin, at, e.to_string()))?;
    }
    Ok(set)
}

pub fn parse_fasta(path: impl AsRef<Path>) -> Result<SequenceSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_fasta_str(&text, path)
}

pub fn write_fasta(set: &SequenceSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (id, seq) in set.iter() {
        out.push('>');
        out.push_str(id);
        out.push('\n');
        for chunk in seq.chunks(60) {
            out.push_str(std::str::from_utf8(chunk).expect("normalized bases are ascii"));
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Binary circRNA x disease matrix of known associations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationMatrix {
    circ_ids: Vec<String>,
    disease_ids: Vec<String>,
    entries: Array2<u8>,
}

impl AssociationMatrix {
    /// Builds a matrix from ids and 0/1 entries.
    pub fn new(
        circ_ids: Vec<String>,
        disease_ids: Vec<String>,
        entries: Array2<u8>,
    ) -> Result<Self> {
        if entries.dim() != (circ_ids.len(), disease_ids.len()) {
            return Err(Error::Data(format!(
                "association entries are {:?} but ids give {}x{}",
                entries.dim(),
                circ_ids.len(),
                disease_ids.len()
            )));
        }
        if entries.iter().any(|&v| v > 1) {
            return Err(Error::Data("association entries must be 0 or 1".into()));
        }
        Ok(Self {
            circ_ids,
            disease_ids,
            entries,
        })
    }

    /// Builds a matrix from (circ, disease) pairs; ids are indexed by first appearance.
    pub fn from_pairs<'a, I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut circ_ids = Vec::new();
        let mut disease_ids = Vec::new();
        let mut circ_idx = HashMap::new();
        let mut disease_idx = HashMap::new();
        let mut cells = Vec::new();
        for (c, d) in pairs {
            let i = *circ_idx.entry(c.to_string()).or_insert_with(|| {
                circ_ids.push(c.to_string());
                circ_ids.len() - 1
            });
            let j = *disease_idx.entry(d.to_string()).or_insert_with(|| {
                disease_ids.push(d.to_string());
                disease_ids.len() - 1
            });
            cells.push((i, j));
        }
        let mut entries = Array2::zeros((circ_ids.len(), disease_ids.len()));
        for (i, j) in cells {
            entries[[i, j]] = 1;
        }
        Self {
            circ_ids,
            disease_ids,
            entries,
        }
    }

    pub fn n_circ(&self) -> usize {
        self.circ_ids.len()
    }

    pub fn n_disease(&self) -> usize {
        self.disease_ids.len()
    }

    pub fn circ_ids(&self) -> &[String] {
        &self.circ_ids
    }

    pub fn disease_ids(&self) -> &[String] {
        &self.disease_ids
    }

    pub fn entries(&self) -> &Array2<u8> {
        &self.entries
    }

    pub fn get(&self, circ: usize, disease: usize) -> bool {
        self.entries[[circ, disease]] == 1
    }

    pub fn n_associations(&self) -> usize {
        self.entries.iter().filter(|&&v| v == 1).count()
    }

    /// Known pairs in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.entries
            .indexed_iter()
            .filter(|(_, &v)| v == 1)
            .map(|((i, j), _)| (i, j))
            .collect()
    }

    /// Copy with the listed circRNA rows zeroed.
    pub fn mask_rows(&self, rows: &[usize]) -> Self {
        let mut out = self.clone();
        for &r in rows {
            out.entries.row_mut(r).fill(0);
        }
        out
    }
}

/// Row-level read access to association labels.
///
/// The cross-validation harness reads labels only through this trait, and
/// announces each fold phase, so tests can audit which rows were touched when.
pub trait AssociationSource: Sync {
    fn circ_ids(&self) -> &[String];
    fn disease_ids(&self) -> &[String];
    fn row(&self, circ: usize) -> Vec<u8>;

    fn n_circ(&self) -> usize {
        self.circ_ids().len()
    }

    fn n_disease(&self) -> usize {
        self.disease_ids().len()
    }

    /// Called by the harness when a fold enters a new phase.
    fn on_phase(&self, _fold: usize, _phase: FoldPhase) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldPhase {
    /// Similarity, graph construction and training for this fold.
    Train,
    /// Held-out rows may now be read to score predictions.
    Score,
}

impl AssociationSource for AssociationMatrix {
    fn circ_ids(&self) -> &[String] {
        &self.circ_ids
    }

    fn disease_ids(&self) -> &[String] {
        &self.disease_ids
    }

    fn row(&self, circ: usize) -> Vec<u8> {
        self.entries.row(circ).to_vec()
    }
}

/// Parses an associations CSV with header `circRNA,disease[,pmid]`.
pub fn parse_associations_str(text: &str, origin: &Path) -> Result<AssociationMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader
        .headers()
        .map_err(|e| Error::parse(origin, 1, e.to_string()))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
    };
    let (Some(ci), Some(di)) = (find("circRNA"), find("disease")) else {
        return Err(Error::parse(
            origin,
            1,
            "header must name 'circRNA' and 'disease' columns",
        ));
    };

    let mut pairs: Vec<(String, String)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(origin, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let (Some(c), Some(d)) = (record.get(ci), record.get(di)) else {
            return Err(Error::parse(
                origin,
                line,
                "missing circRNA or disease column",
            ));
        };
        if c.is_empty() || d.is_empty() {
            return Err(Error::parse(origin, line, "empty circRNA or disease field"));
        }
        pairs.push((c.to_string(), d.to_string()));
    }
    if pairs.is_empty() {
        return Err(Error::parse(origin, 1, "no association rows"));
    }
    Ok(AssociationMatrix::from_pairs(
        pairs.iter().map(|(c, d)| (c.as_str(), d.as_str())),
    ))
}

pub fn parse_associations(path: impl AsRef<Path>) -> Result<AssociationMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_associations_str(&text, path)
}

pub fn write_associations(assoc: &AssociationMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    writeln!(out, "circRNA,disease").expect("write to vec");
    for (i, j) in assoc.pairs() {
        writeln!(out, "{},{}", assoc.circ_ids[i], assoc.disease_ids[j]).expect("write to vec");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parameters of a planted block dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_circ: usize,
    pub n_disease: usize,
    pub n_blocks: usize,
    pub intra_block_assoc_prob: f64,
    pub noise_prob: f64,
    pub seq_len: usize,
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_circ: 60,
            n_disease: 10,
            n_blocks: 3,
            intra_block_assoc_prob: 0.9,
            noise_prob: 0.02,
            seq_len: 120,
            mutation_rate: 0.05,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Usage(format!("{name} must be in [0,1], got {p}")))
            }
        };
        prob("intra_block_assoc_prob", self.intra_block_assoc_prob)?;
        prob("noise_prob", self.noise_prob)?;
        prob("mutation_rate", self.mutation_rate)?;
        if self.n_circ == 0 || self.n_disease == 0 || self.n_blocks == 0 || self.seq_len == 0 {
            return Err(Error::Usage(
                "n_circ, n_disease, n_blocks and seq_len must be at least 1".into(),
            ));
        }
        if self.n_blocks > self.n_circ.min(self.n_disease) {
            return Err(Error::Usage(format!(
                "n_blocks ({}) exceeds min(n_circ, n_disease)",
                self.n_blocks
            )));
        }
        Ok(())
    }

    /// Block of circRNA `i`; blocks are contiguous index ranges.
    pub fn circ_block(&self, i: usize) -> usize {
        i * self.n_blocks / self.n_circ
    }

    pub fn disease_block(&self, j: usize) -> usize {
        j * self.n_blocks / self.n_disease
    }
}

const BASES: [u8; 4] = *b"ACGT";

/// Generates a planted dataset: same-block pairs associate with probability
/// `intra_block_assoc_prob`, cross-block pairs with `noise_prob`, and each
/// block's circRNAs are point-mutated copies of one ancestor sequence.
pub fn synth_dataset(spec: &SyntheticSpec) -> Result<(SequenceSet, AssociationMatrix)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let ancestors: Vec<Vec<u8>> = (0..spec.n_blocks)
        .map(|_| {
            (0..spec.seq_len)
                .map(|_| BASES[rng.random_range(0..4)])
                .collect()
        })
        .collect();

    let circ_ids: Vec<String> = (0..spec.n_circ).map(|i| format!("circ_{i}")).collect();
    let disease_ids: Vec<String> = (0..spec.n_disease)
        .map(|j| format!("disease_{j}"))
        .collect();

    let mut seqs = SequenceSet::new();
    for (i, id) in circ_ids.iter().enumerate() {
        let mut seq = ancestors[spec.circ_block(i)].clone();
        for base in seq.iter_mut() {
            if rng.random_bool(spec.mutation_rate) {
                let others: Vec<u8> = BASES.iter().copied().filter(|b| b != base).collect();
                *base = others[rng.random_range(0..3)];
            }
        }
        seqs.push(id.clone(), &seq)?;
    }

    let mut entries = Array2::zeros((spec.n_circ, spec.n_disease));
    for i in 0..spec.n_circ {
        for j in 0..spec.n_disease {
            let p = if spec.circ_block(i) == spec.disease_block(j) {
                spec.intra_block_assoc_prob
            } else {
                spec.noise_prob
            };
            if rng.random_bool(p) {
                entries[[i, j]] = 1;
            }
        }
    }
    let assoc = AssociationMatrix::new(circ_ids, disease_ids, entries)?;
    Ok((seqs, assoc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fasta(text: &str) -> Result<SequenceSet> {
        parse_fasta_str(text, Path::new("test.fa"))
    }

    fn assoc(text: &str) -> Result<AssociationMatrix> {
        parse_associations_str(text, Path::new("test.csv"))
    }

    #[test]
    fn fasta_single_record_case_fold() {
        let set = fasta(">c1\nacgt\n").unwrap();
        assert_eq!(set.ids(), ["c1"]);
        assert_eq!(set.seq(0), b"ACGT");
    }

    #[test]
    fn fasta_multiline_records() {
        let set = fasta(">c1\nAC\nGT\n>c2\nTT\n").unwrap();
        assert_eq!(set.ids(), ["c1", "c2"]);
        assert_eq!(set.seq(0), b"ACGT");
        assert_eq!(set.seq(1), b"TT");
    }

    #[test]
    fn fasta_crlf_header_tokens_and_u_fold() {
        let set = fasta(">hsa_circ_1 some description\r\nacgu\r\nNN\r\n").unwrap();
        assert_eq!(set.ids(), ["hsa_circ_1"]);
        assert_eq!(set.get("hsa_circ_1").unwrap(), b"ACGTNN");
    }

    #[test]
    fn fasta_duplicate_id() {
        let err = fasta(">c1\nAC\n>c1\nGG\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn fasta_sequence_before_header() {
        let err = fasta("ACGT\n>c1\nA\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn fasta_illegal_character_reports_line() {
        let err = fasta(">c1\nACGT\nACXT\n").unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains('X'));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn fasta_missing_file() {
        let err = parse_fasta("/definitely/not/here.fa").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn associations_first_appearance_order() {
        let m = assoc("circRNA,disease\nc1,d1\nc2,d1\n").unwrap();
        assert_eq!(m.circ_ids(), ["c1", "c2"]);
        assert_eq!(m.disease_ids(), ["d1"]);
        assert_eq!(m.entries(), &ndarray::arr2(&[[1u8], [1]]));
    }

    #[test]
    fn associations_duplicates_idempotent() {
        let m = assoc("circRNA,disease\nc1,d1\nc1,d1\n").unwrap();
        assert_eq!(m.entries(), &ndarray::arr2(&[[1u8]]));
    }

    #[test]
    fn associations_header_only_is_error() {
        assert!(assoc("circRNA,disease\n").is_err());
        assert!(assoc("").is_err());
    }

    #[test]
    fn associations_pmid_column_ignored() {
        let m =
            assoc("circRNA,disease,pmid\nCACNA2D1,stomach cancer,28618205\nFGGY,stomach cancer\n")
                .unwrap();
        assert_eq!(m.n_circ(), 2);
        assert_eq!(m.disease_ids(), ["stomach cancer"]);
    }

    #[test]
    fn associations_missing_columns() {
        assert!(assoc("circ,dis\na,b\n").is_err());
        let err = assoc("circRNA,disease\nc1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn synth_rejects_bad_spec() {
        let bad = SyntheticSpec {
            noise_prob: 1.5,
            ..SyntheticSpec::default()
        };
        assert!(synth_dataset(&bad).is_err());
        let bad = SyntheticSpec {
            n_blocks: 11,
            ..SyntheticSpec::default()
        };
        assert!(synth_dataset(&bad).is_err());
    }

    #[test]
    fn synth_deterministic() {
        let spec = SyntheticSpec::default();
        assert_eq!(synth_dataset(&spec).unwrap(), synth_dataset(&spec).unwrap());
        let other = SyntheticSpec { seed: 8, ..spec };
        assert_ne!(
            synth_dataset(&other).unwrap().1,
            synth_dataset(&SyntheticSpec::default()).unwrap().1
        );
    }

    #[test]
    fn synth_zero_mutation_same_block_identical() {
        let spec = SyntheticSpec {
            mutation_rate: 0.0,
            ..SyntheticSpec::default()
        };
        let (seqs, _) = synth_dataset(&spec).unwrap();
        for i in 0..spec.n_circ {
            for j in 0..spec.n_circ {
                if spec.circ_block(i) == spec.circ_block(j) {
                    assert_eq!(seqs.seq(i), seqs.seq(j));
                }
            }
        }
    }

    #[test]
    fn synth_block_diagonal_two_blocks() {
        let spec = SyntheticSpec {
            n_circ: 6,
            n_disease: 4,
            n_blocks: 2,
            intra_block_assoc_prob: 1.0,
            noise_prob: 0.0,
            ..SyntheticSpec::default()
        };
        let (_, m) = synth_dataset(&spec).unwrap();
        let expected = ndarray::arr2(&[
            [1u8, 1, 0, 0],
            [1, 1, 0, 0],
            [1, 1, 0, 0],
            [0, 0, 1, 1],
            [0, 0, 1, 1],
            [0, 0, 1, 1],
        ]);
        assert_eq!(m.entries(), &expected);
    }
}
