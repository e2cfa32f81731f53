//! Labeled feature tables: CSV I/O, fusion, z-score normalization and
//! stratified splitting.
//!
//! CSV layout: header `id,label,f0,f1,...,f{d-1}`, then one sample per row.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ErrorKind;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: expected {expected} cells, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: {value:?} is not a number")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}, column {column}: non-finite value")]
    NonFinite { line: u64, column: String },
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("table has no samples")]
    Empty,
    #[error("sample ids differ between tables ({0})")]
    IdMismatch(String),
    #[error("sample {id:?} is labeled {left:?} in one table and {right:?} in the other")]
    LabelDisagreement {
        id: String,
        left: String,
        right: String,
    },
    #[error("table has {found} columns, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("test fraction must lie in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("class {class:?} has {count} samples, too few to stratify at fraction {fraction}")]
    ClassTooSmall {
        class: String,
        count: usize,
        fraction: f64,
    },
    #[error("invalid table: {0}")]
    Invalid(String),
}

impl FeatureError {
    pub(crate) fn kind(&self) -> ErrorKind {
        match self {
            FeatureError::Io { .. } => ErrorKind::Io,
            _ => ErrorKind::Data,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        FeatureError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Samples with feature rows and class labels.
///
/// `labels[i]` indexes into `class_names`, which is sorted and
/// duplicate-free.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub sample_ids: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl FeatureTable {
    /// Builds a table from string labels; `class_names` becomes the sorted
    /// set of distinct labels.
    pub fn from_labeled<S: AsRef<str>>(
        sample_ids: Vec<String>,
        features: Vec<Vec<f64>>,
        labels: &[S],
    ) -> Result<Self, FeatureError> {
        let class_names: Vec<String> = labels
            .iter()
            .map(|l| l.as_ref().to_owned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let labels = labels
            .iter()
            .map(|l| class_index(&class_names, l.as_ref()).expect("label collected above"))
            .collect();
        let table = Self {
            sample_ids,
            features,
            labels,
            class_names,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        let n = self.sample_ids.len();
        if n == 0 {
            return Err(FeatureError::Empty);
        }
        if self.features.len() != n || self.labels.len() != n {
            return Err(FeatureError::Invalid(format!(
                "{n} ids, {} feature rows, {} labels",
                self.features.len(),
                self.labels.len()
            )));
        }
        let d = self.features[0].len();
        if d == 0 {
            return Err(FeatureError::Invalid("no feature columns".into()));
        }
        if let Some(row) = self.features.iter().find(|r| r.len() != d) {
            return Err(FeatureError::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        if self.features.iter().flatten().any(|v| !v.is_finite()) {
            return Err(FeatureError::Invalid("non-finite feature value".into()));
        }
        if let Some(&l) = self.labels.iter().find(|&&l| l >= self.class_names.len()) {
            return Err(FeatureError::Invalid(format!(
                "label index {l} has no class"
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        if let Some(dup) = self.sample_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(FeatureError::DuplicateId(dup.clone()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn label_name(&self, i: usize) -> &str {
        &self.class_names[self.labels[i]]
    }

    /// Sample count per entry of `class_names`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order. Keeps `class_names`.
    pub fn select(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            sample_ids: indices
                .iter()
                .map(|&i| self.sample_ids[i].clone())
                .collect(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

pub fn class_index(class_names: &[String], label: &str) -> Option<usize> {
    class_names.iter().position(|c| c == label)
}

pub fn load_feature_table(path: impl AsRef<Path>) -> Result<FeatureTable, FeatureError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| FeatureError::io(path, e))?;
    read_feature_table(file)
}

pub fn read_feature_table<R: Read>(reader: R) -> Result<FeatureTable, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = rdr
        .headers()
        .map_err(|e| FeatureError::Csv(e.to_string()))?
        .clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(FeatureError::BadHeader(
            "expected `id,label,f0,...` with at least one feature column".into(),
        ));
    }
    let width = header.len();

    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(|e| FeatureError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(FeatureError::RaggedRow {
                line,
                expected: width,
                found: record.len(),
            });
        }
        let id = record[0].to_owned();
        if !seen.insert(id.clone()) {
            return Err(FeatureError::DuplicateId(id));
        }
        let row = record
            .iter()
            .enumerate()
            .skip(2)
            .map(|(c, cell)| {
                let v: f64 = cell.parse().map_err(|_| FeatureError::NonNumeric {
                    line,
                    column: header[c].to_owned(),
                    value: cell.to_owned(),
                })?;
                if !v.is_finite() {
                    return Err(FeatureError::NonFinite {
                        line,
                        column: header[c].to_owned(),
                    });
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>, _>>()?;
        ids.push(id);
        labels.push(record[1].to_owned());
        rows.push(row);
    }
    if ids.is_empty() {
        return Err(FeatureError::Empty);
    }
    FeatureTable::from_labeled(ids, rows, &labels)
}

/// Writes the table in the CSV layout above. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_feature_table<W: Write>(table: &FeatureTable, writer: W) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| FeatureError::Csv(e.to_string());
    let mut header = vec!["id".to_owned(), "label".to_owned()];
    header.extend((0..table.dim()).map(|j| format!("f{j}")));
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..table.len() {
        let mut rec = vec![table.sample_ids[i].clone(), table.label_name(i).to_owned()];
        rec.extend(table.features[i].iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| FeatureError::Csv(e.to_string()))
}

pub fn save_feature_table(
    table: &FeatureTable,
    path: impl AsRef<Path>,
) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| FeatureError::io(path, e))?;
    write_feature_table(table, std::io::BufWriter::new(file))
}

/// Concatenates `b`'s columns after `a`'s for each sample, in `a`'s order.
pub fn fuse(a: &FeatureTable, b: &FeatureTable) -> Result<FeatureTable, FeatureError> {
    if a.len() != b.len() {
        return Err(FeatureError::IdMismatch(format!(
            "{} samples vs {}",
            a.len(),
            b.len()
        )));
    }
    let b_index: HashMap<&str, usize> = b
        .sample_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut features = Vec::with_capacity(a.len());
    let mut labels = Vec::with_capacity(a.len());
    for (i, id) in a.sample_ids.iter().enumerate() {
        let j = *b_index
            .get(id.as_str())
            .ok_or_else(|| FeatureError::IdMismatch(format!("{id:?} missing from second table")))?;
        let (la, lb) = (a.label_name(i), b.label_name(j));
        if la != lb {
            return Err(FeatureError::LabelDisagreement {
                id: id.clone(),
                left: la.to_owned(),
                right: lb.to_owned(),
            });
        }
        let mut row = Vec::with_capacity(a.dim() + b.dim());
        row.extend_from_slice(&a.features[i]);
        row.extend_from_slice(&b.features[j]);
        features.push(row);
        labels.push(la);
    }
    FeatureTable::from_labeled(a.sample_ids.clone(), features, &labels)
}

/// Per-column z-score parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub means: Vec<f64>,
    pub stddevs: Vec<f64>,
}

impl Normalizer {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply_row(&self, x: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if x.len() != self.dim() {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.means.iter().zip(&self.stddevs))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn invert_row(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.means.iter().zip(&self.stddevs))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

/// Column means and population standard deviations; constant columns get
/// stddev 1.
pub fn fit_normalizer(table: &FeatureTable) -> Result<Normalizer, FeatureError> {
    if table.is_empty() {
        return Err(FeatureError::Empty);
    }
    let n = table.len() as f64;
    let d = table.dim();
    let mut means = vec![0.0; d];
    for row in &table.features {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);

    let mut vars = vec![0.0; d];
    for row in &table.features {
        for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    let stddevs = vars
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok(Normalizer { means, stddevs })
}

pub fn apply_normalizer(
    table: &FeatureTable,
    n: &Normalizer,
) -> Result<FeatureTable, FeatureError> {
    let features = table
        .features
        .iter()
        .map(|row| n.apply_row(row))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FeatureTable {
        features,
        ..table.clone()
    })
}

/// Number of test samples drawn from a class of `count` samples: nearest
/// integer to `count · fraction`, halves rounding toward the training side.
pub fn stratum_test_size(count: usize, fraction: f64) -> usize {
    let exact = count as f64 * fraction;
    let floor = exact.floor();
    if exact - floor > 0.5 {
        floor as usize + 1
    } else {
        floor as usize
    }
}

/// Stratified, seeded split into `(train, test)`.
///
/// Each class is shuffled with its own slice of one ChaCha8 stream and its
/// first [`stratum_test_size`] members go to the test side. Both halves keep
/// the input's row order and `class_names`.
pub fn split(
    table: &FeatureTable,
    test_fraction: f64,
    seed: u64,
) -> Result<(FeatureTable, FeatureTable), FeatureError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(FeatureError::BadFraction(test_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; table.len()];
    for (class, name) in table.class_names.iter().enumerate() {
        let mut members: Vec<usize> = (0..table.len())
            .filter(|&i| table.labels[i] == class)
            .collect();
        if members.is_empty() {
            continue;
        }
        let k = stratum_test_size(members.len(), test_fraction);
        if k == 0 || k >= members.len() {
            return Err(FeatureError::ClassTooSmall {
                class: name.clone(),
                count: members.len(),
                fraction: test_fraction,
            });
        }
        members.shuffle(&mut rng);
        for &i in &members[..k] {
            in_test[i] = true;
        }
    }
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) =
        (0..table.len()).partition(|&i| in_test[i]);
    Ok((table.select(&train_idx), table.select(&test_idx)))
}
