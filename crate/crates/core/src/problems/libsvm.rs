//! LibSVM sparse text: `label idx:val idx:val ...`, 1-based strictly
//! increasing indices, one record per line. Blank lines are skipped and `#`
//! comments are rejected.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use super::{Shard, SparseRow};
use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub rows: Vec<SparseRow<f64>>,
    /// `±1`, mapped from the file's labels by sign.
    pub labels: Vec<f64>,
    pub d: usize,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn parse_line(line: &str) -> std::result::Result<(f64, SparseRow<f64>), String> {
    if line.contains('#') {
        return Err("comments are not supported".into());
    }
    let mut tokens = line.split_whitespace();
    let label_tok = tokens.next().ok_or("missing label")?;
    let label: f64 = label_tok.parse().map_err(|_| format!("bad label {label_tok:?}"))?;
    if !label.is_finite() || label == 0.0 {
        return Err(format!("label {label_tok:?} must be nonzero and finite"));
    }
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for tok in tokens {
        let (i, v) = tok.split_once(':').ok_or_else(|| format!("expected idx:val, got {tok:?}"))?;
        let idx: u64 = i.parse().map_err(|_| format!("bad index {i:?}"))?;
        if idx == 0 {
            return Err("indices are 1-based; found 0".into());
        }
        if idx > u32::MAX as u64 {
            return Err(format!("index {idx} too large"));
        }
        let val: f64 = v.parse().map_err(|_| format!("bad value {v:?}"))?;
        if !val.is_finite() {
            return Err(format!("value {v:?} is not finite"));
        }
        let zero_based = (idx - 1) as u32;
        if indices.last().is_some_and(|&last| zero_based <= last) {
            return Err(format!("index {idx} is not strictly increasing"));
        }
        indices.push(zero_based);
        values.push(val);
    }
    Ok((label.signum(), SparseRow { indices, values }))
}

/// Parses LibSVM text. `d_expected` fixes the feature count; otherwise it
/// is the largest index seen.
pub fn parse_libsvm(reader: impl BufRead, path: &Path, d_expected: Option<usize>) -> Result<LabeledDataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    let err = |line: usize, message: String| Error::Parse { path: PathBuf::from(path), line, message };
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, row) = parse_line(&line).map_err(|m| err(k + 1, m))?;
        if let Some(&last) = row.indices.last() {
            let needed = last as usize + 1;
            if d_expected.is_some_and(|d| needed > d) {
                return Err(err(k + 1, format!("index {needed} exceeds the expected dimension {}", d_expected.unwrap_or(0))));
            }
            max_index = max_index.max(needed);
        }
        rows.push(row);
        labels.push(label);
    }
    if rows.is_empty() {
        return Err(err(0, "no records".into()));
    }
    let d = d_expected.unwrap_or(max_index);
    if d == 0 {
        return Err(err(0, "dataset has no features".into()));
    }
    Ok(LabeledDataset { rows, labels, d })
}

pub fn load_libsvm(path: impl AsRef<Path>, d_expected: Option<usize>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_libsvm(BufReader::new(file), path, d_expected)
}

/// Contiguous shard sizes: `⌊N/n⌋` each, plus one for the first `N mod n`.
pub fn shard_sizes(total: usize, n: usize) -> Result<Vec<usize>> {
    if n == 0 || n > total {
        return Err(invalid(format!("cannot split {total} rows into {n} nonempty shards")));
    }
    let (base, extra) = (total / n, total % n);
    Ok((0..n).map(|i| base + usize::from(i < extra)).collect())
}

/// Splits rows in file order into `n` contiguous shards.
pub fn shard<T: Scalar>(data: &LabeledDataset, n: usize) -> Result<Vec<Shard<T>>> {
    let sizes = shard_sizes(data.len(), n)?;
    let mut start = 0;
    Ok(sizes
        .into_iter()
        .map(|size| {
            let range = start..start + size;
            start += size;
            Shard {
                rows: data.rows[range.clone()]
                    .iter()
                    .map(|r| SparseRow { indices: r.indices.clone(), values: r.values.iter().map(|&v| T::of(v)).collect() })
                    .collect(),
                labels: data.labels[range].iter().map(|&y| T::of(y)).collect(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, d: Option<usize>) -> Result<LabeledDataset> {
        parse_libsvm(text.as_bytes(), Path::new("mem"), d)
    }

    #[test]
    fn parses_a_record() {
        let ds = parse("+1 1:0.5 3:-2\n", None).unwrap();
        assert_eq!(ds.labels, vec![1.0]);
        assert_eq!(ds.rows[0].indices, vec![0, 2]);
        assert_eq!(ds.rows[0].values, vec![0.5, -2.0]);
        assert_eq!(ds.d, 3);
    }

    #[test]
    fn labels_by_sign_and_blank_lines() {
        let ds = parse("2 1:1\n\n   \n-3 2:1\n0.5\n", Some(4)).unwrap();
        assert_eq!(ds.labels, vec![1.0, -1.0, 1.0]);
        assert_eq!(ds.d, 4);
        assert!(ds.rows[2].indices.is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("1 1:1\n1 0:2\n", 2),
            ("1 2:1 1:1\n", 1),
            ("1 1:1\n\n0 1:1\n", 3),
            ("1 1:1 # note\n", 1),
            ("x 1:1\n", 1),
            ("1 1-1\n", 1),
            ("1 5:1\n", 1),
        ] {
            match parse(text, Some(3)) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn table_shard_sizes() {
        assert_eq!(shard_sizes(32561, 123).unwrap()[122], 264);
        assert_eq!(shard_sizes(1000, 60).unwrap()[59], 16);
        let s = shard_sizes(10, 3).unwrap();
        assert_eq!(s, vec![4, 3, 3]);
        assert!(shard_sizes(2, 3).is_err());
    }

    #[test]
    fn shards_are_contiguous() {
        let ds = parse("1 1:1\n-1 1:2\n1 1:3\n-1 1:4\n1 1:5\n", None).unwrap();
        let shards: Vec<Shard<f64>> = shard(&ds, 2).unwrap();
        assert_eq!(shards[0].len(), 3);
        assert_eq!(shards[1].rows[0].values, vec![4.0]);
    }
}
