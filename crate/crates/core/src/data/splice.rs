//! Splice-site sequences as one-hot features, one group per nucleotide
//! position.

use std::path::{Path, PathBuf};

use super::Dataset;
use crate::error::{Error, Result};
use crate::grouping::GroupPartition;
use crate::matrix::Matrix;

const ALPHABET: [u8; 4] = *b"ACGT";
const KEPT_LEN: usize = 7;

#[derive(Clone, Debug, PartialEq)]
pub enum LabelSource {
    /// Each record is `<label> <sequence>`.
    Inline,
    /// Labels one per line in a parallel file.
    File(PathBuf),
    /// Every record gets this label (FASTA files split by class).
    Constant(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpliceFormat {
    pub labels: LabelSource,
    /// 1-based positions removed from 9-mers; defaults to the GT consensus
    /// of a donor site (positions 4 and 5).
    pub drop_positions: Vec<usize>,
}

impl SpliceFormat {
    pub fn new(labels: LabelSource) -> Self {
        SpliceFormat {
            labels,
            drop_positions: vec![4, 5],
        }
    }
}

/// One-hot encodes a nucleotide string, `A, C, G, T` order per position.
pub fn one_hot_sequence(seq: &str) -> Result<Vec<f64>> {
    let mut out = vec![0.0; 4 * seq.len()];
    for (i, ch) in seq.bytes().enumerate() {
        let slot = ALPHABET
            .iter()
            .position(|&a| a == ch.to_ascii_uppercase())
            .ok_or_else(|| {
                Error::parse(
                    format!("position {}", i + 1),
                    format!("invalid nucleotide {:?}", ch as char),
                )
            })?;
        out[4 * i + slot] = 1.0;
    }
    Ok(out)
}

fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('>') && !l.starts_with('#'))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))
}

fn reduce(seq: &str, drop: &[usize], location: &str) -> Result<String> {
    match seq.len() {
        KEPT_LEN => Ok(seq.to_string()),
        9 => {
            let kept: String = seq
                .chars()
                .enumerate()
                .filter(|(i, _)| !drop.contains(&(i + 1)))
                .map(|(_, c)| c)
                .collect();
            if kept.len() != KEPT_LEN {
                return Err(Error::invalid(format!(
                    "dropping positions {drop:?} from a 9-mer leaves {} positions, expected {KEPT_LEN}",
                    kept.len()
                )));
            }
            Ok(kept)
        }
        n => Err(Error::parse(location, format!("sequence length {n}, expected 7 or 9"))),
    }
}

/// Loads splice-site records into a 28-feature dataset with 7 groups.
pub fn load_splice(path: &Path, format: &SpliceFormat) -> Result<Dataset> {
    let text = read_text(path)?;
    let file_labels = match &format.labels {
        LabelSource::File(p) => Some(
            records(&read_text(p)?)
                .map(|(line, tok)| {
                    tok.parse::<usize>()
                        .map_err(|_| Error::parse(format!("{}:{line}", p.display()), format!("bad label {tok:?}")))
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut raw_len = None;
    for (k, (line, rec)) in records(&text).enumerate() {
        let location = format!("{}:{line}", path.display());
        let (label, seq) = match &format.labels {
            LabelSource::Inline => {
                let mut parts = rec.split_whitespace();
                let tok = parts.next().unwrap_or_default();
                let label = tok
                    .parse::<usize>()
                    .map_err(|_| Error::parse(&location, format!("bad label token {tok:?}")))?;
                let seq = parts
                    .next()
                    .ok_or_else(|| Error::parse(&location, "missing sequence after label"))?;
                (label, seq)
            }
            LabelSource::File(_) => {
                let labels = file_labels.as_ref().expect("label file read above");
                let label = *labels
                    .get(k)
                    .ok_or_else(|| Error::parse(&location, "label file has fewer records than the sequence file"))?;
                (label, rec)
            }
            LabelSource::Constant(label) => (*label, rec),
        };
        match raw_len {
            None => raw_len = Some(seq.len()),
            Some(len) if len != seq.len() => {
                return Err(Error::parse(
                    &location,
                    format!("inconsistent line lengths: {} after {len}", seq.len()),
                ))
            }
            _ => {}
        }
        let kept = reduce(seq, &format.drop_positions, &location)?;
        data.extend(one_hot_sequence(&kept).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(&location, message),
            other => other,
        })?);
        labels.push(label);
    }
    if let Some(l) = &file_labels {
        if l.len() != labels.len() {
            return Err(Error::parse(
                path.display().to_string(),
                format!("{} labels for {} sequences", l.len(), labels.len()),
            ));
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let x = Matrix::from_vec(labels.len(), 4 * KEPT_LEN, data)?;
    let num_classes = labels.iter().max().map_or(2, |&m| (m + 1).max(2));
    Dataset::new(x, labels, num_classes, splice_partition())
}

/// Loads a positive and a negative FASTA-style file (labels 1 and 0) and
/// stacks them, positives first.
pub fn load_splice_fasta_pair(true_path: &Path, false_path: &Path, drop_positions: &[usize]) -> Result<Dataset> {
    let fmt = |label| SpliceFormat {
        labels: LabelSource::Constant(label),
        drop_positions: drop_positions.to_vec(),
    };
    let pos = load_splice(true_path, &fmt(1))?;
    let neg = load_splice(false_path, &fmt(0))?;
    let mut data = pos.x().as_slice().to_vec();
    data.extend_from_slice(neg.x().as_slice());
    let mut labels = pos.y().to_vec();
    labels.extend_from_slice(neg.y());
    let x = Matrix::from_vec(labels.len(), 4 * KEPT_LEN, data)?;
    Dataset::new(x, labels, 2, splice_partition())
}

fn splice_partition() -> GroupPartition {
    let base = GroupPartition::contiguous(&[4; KEPT_LEN]).expect("7 groups of 4");
    GroupPartition::with_names(
        base.groups().to_vec(),
        (1..=KEPT_LEN).map(|i| format!("pos{i}")).collect(),
        4 * KEPT_LEN,
    )
    .expect("names match groups")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn donor_nine_mer_drops_consensus() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "s.txt", "1 GAGGTAAGT\n0 aaaGTaaaa\n");
        let ds = load_splice(&p, &SpliceFormat::new(LabelSource::Inline)).unwrap();
        assert_eq!((ds.n(), ds.p()), (2, 28));
        assert_eq!(ds.x().row(0), one_hot_sequence("GAGAAGT").unwrap().as_slice());
        assert_eq!(ds.x().row(0).iter().sum::<f64>(), 7.0);
        assert_eq!(ds.y(), &[1, 0]);
        assert_eq!(ds.partition().k(), 7);
    }

    #[test]
    fn seven_mer_one_hot() {
        let v = one_hot_sequence("AAAAAAA").unwrap();
        for g in 0..7 {
            assert_eq!(&v[4 * g..4 * g + 4], &[1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn label_file_and_fasta() {
        let dir = tempfile::tempdir().unwrap();
        let seqs = write(dir.path(), "seq", ">a\nACGTACG\n>b\nTTTTTTT\n");
        let labs = write(dir.path(), "lab", "1\n0\n");
        let ds = load_splice(&seqs, &SpliceFormat::new(LabelSource::File(labs))).unwrap();
        assert_eq!(ds.y(), &[1, 0]);

        let t = write(dir.path(), "t", ">x\nCAGGTAAGT\n");
        let f = write(dir.path(), "f", ">y\nCTGGTAAGA\n>z\nAAGGTGAGG\n");
        let ds = load_splice_fasta_pair(&t, &f, &[4, 5]).unwrap();
        assert_eq!(ds.y(), &[1, 0, 0]);
    }

    #[test]
    fn errors() {
        let dir = tempfile::tempdir().unwrap();
        let bad = write(dir.path(), "bad", "1 ACGTNCG\n");
        assert!(matches!(
            load_splice(&bad, &SpliceFormat::new(LabelSource::Inline)),
            Err(Error::Parse { .. })
        ));
        let mixed = write(dir.path(), "mixed", "1 ACGTACG\n0 ACGTACGTA\n");
        assert!(matches!(
            load_splice(&mixed, &SpliceFormat::new(LabelSource::Inline)),
            Err(Error::Parse { .. })
        ));
        let missing = dir.path().join("missing");
        assert!(matches!(
            load_splice(&missing, &SpliceFormat::new(LabelSource::Inline)),
            Err(Error::NotFound(_))
        ));
    }
}
