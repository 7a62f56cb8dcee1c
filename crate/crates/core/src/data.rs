//! Records, datasets, vote vectors and their JSON Lines persistence.
//!
//! Votes are stored record-major: each [`Record`] owns the length-`M` vector of
//! labeling-function outputs for one data point. The LF-major label matrix is
//! available through [`Dataset::label_matrix`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary outputs of all labeling functions on one record. Bit `j` is 1 iff
/// LF `j` voted positive, 0 iff it abstained.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct VoteVector(Vec<u8>);

impl VoteVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!(
                "vote value {bad} is not 0 or 1"
            )));
        }
        Ok(Self(bits))
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        Self(bits.iter().map(|&b| u8::from(b)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![1; len])
    }

    /// Decodes the low `len` bits of `mask`, bit `j` giving LF `j`.
    pub fn from_mask(mask: u64, len: usize) -> Self {
        Self((0..len).map(|j| ((mask >> j) & 1) as u8).collect())
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, j: usize) -> bool {
        self.0[j] == 1
    }

    /// True iff at least one LF fired.
    pub fn is_covered(&self) -> bool {
        self.0.contains(&1)
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b == 1).count()
    }

    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(weights)
            .filter(|(&b, _)| b == 1)
            .map(|(_, &w)| w)
            .sum()
    }
}

impl TryFrom<Vec<u8>> for VoteVector {
    type Error = Error;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<VoteVector> for Vec<u8> {
    fn from(v: VoteVector) -> Self {
        v.0
    }
}

impl fmt::Display for VoteVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (j, b) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "]")
    }
}

/// Gold binary label, serialized as -1 / 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(Error::InvalidArgument(format!(
                "label {other} is not -1 or 1"
            ))),
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub id: String,
    pub votes: VoteVector,
    pub features: Option<Vec<f64>>,
    pub gold: Option<Label>,
}

impl Record {
    pub fn new(id: impl Into<String>, votes: VoteVector) -> Self {
        Self {
            id: id.into(),
            votes,
            features: None,
            gold: None,
        }
    }

    pub fn with_gold(mut self, gold: Label) -> Self {
        self.gold = Some(gold);
        self
    }

    pub fn with_features(mut self, features: Vec<f64>) -> Self {
        self.features = Some(features);
        self
    }
}

/// A validated, immutable collection of records sharing one LF count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    num_lfs: usize,
    lf_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(records: Vec<Record>, num_lfs: usize, lf_names: Option<Vec<String>>) -> Result<Self> {
        if num_lfs == 0 {
            return Err(Error::InvalidDataset("num_lfs must be at least 1".into()));
        }
        if records.is_empty() {
            return Err(Error::InvalidDataset("dataset has no records".into()));
        }
        if let Some(names) = &lf_names {
            if names.len() != num_lfs {
                return Err(Error::InvalidDataset(format!(
                    "{} LF names given for {num_lfs} LFs",
                    names.len()
                )));
            }
        }
        let mut ids = HashSet::with_capacity(records.len());
        let mut width: Option<usize> = None;
        for r in &records {
            if r.votes.len() != num_lfs {
                return Err(Error::InvalidDataset(format!(
                    "record `{}` has {} votes, expected {num_lfs}",
                    r.id,
                    r.votes.len()
                )));
            }
            if !ids.insert(r.id.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate id `{}`", r.id)));
            }
            if let Some(f) = &r.features {
                match width {
                    None => width = Some(f.len()),
                    Some(w) if w != f.len() => {
                        return Err(Error::InvalidDataset(format!(
                            "record `{}` has {} features, expected {w}",
                            r.id,
                            f.len()
                        )))
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            records,
            num_lfs,
            lf_names,
        })
    }

    /// Builds a dataset with generated ids `"0"`, `"1"`, ... from raw vote rows.
    pub fn from_votes(rows: &[Vec<u8>]) -> Result<Self> {
        let num_lfs = rows.first().map_or(0, Vec::len);
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, v)| Ok(Record::new(i.to_string(), VoteVector::new(v.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(records, num_lfs, None)
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn num_lfs(&self) -> usize {
        self.num_lfs
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn lf_names(&self) -> Option<&[String]> {
        self.lf_names.as_deref()
    }

    pub fn votes(&self) -> impl Iterator<Item = &VoteVector> {
        self.records.iter().map(|r| &r.votes)
    }

    /// Feature width, if any record carries features.
    pub fn feature_dim(&self) -> Option<usize> {
        self.records
            .iter()
            .find_map(|r| r.features.as_ref().map(Vec::len))
    }

    /// The `M x N` label matrix (row = LF, column = record).
    pub fn label_matrix(&self) -> Vec<Vec<u8>> {
        (0..self.num_lfs)
            .map(|j| self.records.iter().map(|r| r.votes.bits()[j]).collect())
            .collect()
    }

    /// Fraction of records on which each LF fires.
    pub fn fire_rates(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.num_lfs];
        for v in self.votes() {
            for (c, &b) in counts.iter_mut().zip(v.bits()) {
                *c += b as usize;
            }
        }
        let n = self.len() as f64;
        counts.into_iter().map(|c| c as f64 / n).collect()
    }

    pub fn gold_labels(&self) -> Result<Vec<Label>> {
        self.records
            .iter()
            .map(|r| r.gold.ok_or_else(|| Error::MissingGold(r.id.clone())))
            .collect()
    }

    pub fn feature_matrix(&self) -> Result<Vec<Vec<f64>>> {
        self.records
            .iter()
            .map(|r| {
                r.features
                    .clone()
                    .ok_or_else(|| Error::MissingFeatures(r.id.clone()))
            })
            .collect()
    }
}

/// Class prior `p(y = +1)`, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Prior(f64);

impl Prior {
    pub fn new(p_plus: f64) -> Result<Self> {
        if p_plus > 0.0 && p_plus < 1.0 {
            Ok(Self(p_plus))
        } else {
            Err(Error::InvalidArgument(format!(
                "class prior {p_plus} must lie strictly between 0 and 1"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Prior {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<Prior> for f64 {
    fn from(p: Prior) -> f64 {
        p.0
    }
}

/// Covered records grouped by their vote vector; uncovered records apart.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SliceTable {
    pub slices: BTreeMap<VoteVector, Vec<usize>>,
    pub uncovered: Vec<usize>,
}

impl SliceTable {
    pub fn keys(&self) -> impl Iterator<Item = &VoteVector> {
        self.slices.keys()
    }

    pub fn members(&self, v: &VoteVector) -> Option<&[usize]> {
        self.slices.get(v).map(Vec::as_slice)
    }

    pub fn num_covered(&self) -> usize {
        self.slices.values().map(Vec::len).sum()
    }
}

pub fn build_slices(dataset: &Dataset) -> SliceTable {
    let mut table = SliceTable::default();
    for (i, v) in dataset.votes().enumerate() {
        if v.is_covered() {
            table.slices.entry(v.clone()).or_default().push(i);
        } else {
            table.uncovered.push(i);
        }
    }
    table
}

pub fn coverage_mask(dataset: &Dataset) -> Vec<bool> {
    dataset.votes().map(VoteVector::is_covered).collect()
}

#[derive(Serialize, Deserialize)]
struct MetaLine {
    meta: Meta,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    num_lfs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lf_names: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    votes: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<i64>,
}

fn parse_record(line_no: usize, text: &str) -> Result<Record> {
    let parse_err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let raw: RecordLine = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let bits = raw
        .votes
        .iter()
        .map(|&v| match v {
            0 | 1 => Ok(v as u8),
            other => Err(parse_err(format!("vote value {other} is not 0 or 1"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let gold = match raw.label {
        None => None,
        Some(1) => Some(Label::Positive),
        Some(-1) => Some(Label::Negative),
        Some(other) => return Err(parse_err(format!("label {other} is not -1 or 1"))),
    };
    if let Some(f) = &raw.features {
        if f.iter().any(|x| !x.is_finite()) {
            return Err(parse_err("non-finite feature value".into()));
        }
    }
    Ok(Record {
        id: raw.id,
        votes: VoteVector(bits),
        features: raw.features,
        gold,
    })
}

/// Reads a dataset from any JSON Lines source.
pub fn read_dataset<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut meta: Option<Meta> = None;
    let mut records = Vec::new();
    let mut first_content = true;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if first_content {
            first_content = false;
            if let Ok(m) = serde_json::from_str::<MetaLine>(text) {
                meta = Some(m.meta);
                continue;
            }
        }
        let record = parse_record(line_no, text)?;
        let expected = meta
            .as_ref()
            .map(|m| m.num_lfs)
            .or_else(|| records.first().map(|r: &Record| r.votes.len()));
        if let Some(m) = expected {
            if record.votes.len() != m {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {m} votes, found {}", record.votes.len()),
                });
            }
        }
        records.push(record);
    }
    let (num_lfs, lf_names) = match meta {
        Some(m) => (m.num_lfs, m.lf_names),
        None => (records.first().map_or(0, |r| r.votes.len()), None),
    };
    Dataset::new(records, num_lfs, lf_names)
}

pub fn write_dataset<W: Write>(dataset: &Dataset, mut writer: W) -> Result<()> {
    let meta = MetaLine {
        meta: Meta {
            num_lfs: dataset.num_lfs,
            lf_names: dataset.lf_names.clone(),
        },
    };
    serde_json::to_writer(&mut writer, &meta)?;
    writer.write_all(b"\n")?;
    for r in &dataset.records {
        let line = RecordLine {
            id: r.id.clone(),
            votes: r.votes.bits().iter().map(|&b| i64::from(b)).collect(),
            features: r.features.clone(),
            label: r.gold.map(|g| i64::from(i8::from(g))),
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = File::open(path)?;
    read_dataset(BufReader::new(file))
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_dataset(dataset, BufWriter::new(file))
}
