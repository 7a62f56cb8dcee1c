//! The covering partial order on observed vote vectors and the constraint
//! matrix built from its Hasse diagram.
//!
//! `high` covers `low` when every LF firing on `low` also fires on `high` and
//! at least one more fires on `high`. Only the transitive reduction of this
//! order is turned into constraint rows; chained rows imply the rest.

use serde::Serialize;

use crate::data::{Dataset, SliceTable, VoteVector};
use crate::error::{Error, Result};

/// True iff `high >= low` elementwise with at least one strict coordinate.
pub fn covers(high: &VoteVector, low: &VoteVector) -> Result<bool> {
    if high.len() != low.len() {
        return Err(Error::DimensionMismatch {
            expected: high.len(),
            actual: low.len(),
        });
    }
    Ok(covers_unchecked(high.bits(), low.bits()))
}

fn covers_unchecked(high: &[u8], low: &[u8]) -> bool {
    let mut strict = false;
    for (&h, &l) in high.iter().zip(low) {
        if h < l {
            return false;
        }
        strict |= h > l;
    }
    strict
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct HasseEdge {
    pub low: VoteVector,
    pub high: VoteVector,
}

struct BitSet {
    words: Vec<u64>,
}

impl BitSet {
    fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn intersects(&self, other: &BitSet) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .any(|(a, b)| a & b != 0)
    }
}

/// Transitive reduction of the covering order restricted to `vectors`.
///
/// Duplicates are ignored. Edges come out ordered by `(low, high)` in
/// lexicographic bit order.
pub fn hasse_edges(vectors: &[VoteVector]) -> Vec<HasseEdge> {
    let mut sorted = vectors.to_vec();
    sorted.sort();
    sorted.dedup();
    let k = sorted.len();

    // above[i]: strictly covering vectors of i; below[j]: vectors j covers.
    let mut above: Vec<BitSet> = (0..k).map(|_| BitSet::new(k)).collect();
    let mut below: Vec<BitSet> = (0..k).map(|_| BitSet::new(k)).collect();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if sorted[i].len() == sorted[j].len()
                && covers_unchecked(sorted[j].bits(), sorted[i].bits())
            {
                above[i].insert(j);
                below[j].insert(i);
                pairs.push((i, j));
            }
        }
    }

    pairs
        .into_iter()
        .filter(|&(i, j)| !above[i].intersects(&below[j]))
        .map(|(i, j)| HasseEdge {
            low: sorted[i].clone(),
            high: sorted[j].clone(),
        })
        .collect()
}

/// One row of `A`: the mean score over `D_low` minus the mean over `D_high`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub low_members: Vec<usize>,
    pub high_members: Vec<usize>,
}

impl ConstraintRow {
    /// Row times `scores`. Non-positive when the constraint holds.
    pub fn apply(&self, scores: &[f64]) -> f64 {
        mean_over(&self.low_members, scores) - mean_over(&self.high_members, scores)
    }

    /// Non-zero entries `(record index, coefficient)` ordered by index.
    pub fn coefficients(&self) -> Vec<(usize, f64)> {
        let lo = 1.0 / self.low_members.len() as f64;
        let hi = 1.0 / self.high_members.len() as f64;
        let mut out: Vec<(usize, f64)> = self
            .low_members
            .iter()
            .map(|&i| (i, lo))
            .chain(self.high_members.iter().map(|&i| (i, -hi)))
            .collect();
        out.sort_by_key(|&(i, _)| i);
        out
    }
}

fn mean_over(members: &[usize], values: &[f64]) -> f64 {
    members.iter().map(|&i| values[i]).sum::<f64>() / members.len() as f64
}

/// Sparse `d x N` matrix encoding one covering inequality per Hasse edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    pub rows: Vec<ConstraintRow>,
    pub edge_for_row: Vec<HasseEdge>,
    pub num_records: usize,
}

impl ConstraintMatrix {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// `A s` for a per-record score vector `s`.
    pub fn apply(&self, scores: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.apply(scores)).collect()
    }

    /// Row `r` applied to the all-ones vector.
    pub fn row_sum(&self, r: usize) -> f64 {
        let ones = vec![1.0; self.num_records];
        self.rows[r].apply(&ones)
    }

    /// `A L` as a dense `d x M` matrix, where `L` is the `N x M` vote matrix.
    /// For scores `f = L theta`, `A f = (A L) theta`.
    pub fn vote_design(&self, dataset: &Dataset) -> Vec<Vec<f64>> {
        let m = dataset.num_lfs();
        let records = dataset.records();
        let mean_votes = |members: &[usize]| {
            let mut acc = vec![0.0; m];
            for &i in members {
                for (a, &b) in acc.iter_mut().zip(records[i].votes.bits()) {
                    *a += f64::from(b);
                }
            }
            let n = members.len() as f64;
            acc.into_iter().map(|a| a / n).collect::<Vec<_>>()
        };
        self.rows
            .iter()
            .map(|row| {
                let lo = mean_votes(&row.low_members);
                let hi = mean_votes(&row.high_members);
                lo.iter().zip(&hi).map(|(a, b)| a - b).collect()
            })
            .collect()
    }

    pub fn edge_summaries(&self) -> Vec<EdgeSummary> {
        self.rows
            .iter()
            .zip(&self.edge_for_row)
            .map(|(row, e)| EdgeSummary {
                low: e.low.clone(),
                high: e.high.clone(),
                d_low_size: row.low_members.len(),
                d_high_size: row.high_members.len(),
            })
            .collect()
    }
}

/// Debug view of one constraint edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeSummary {
    pub low: VoteVector,
    pub high: VoteVector,
    pub d_low_size: usize,
    pub d_high_size: usize,
}

pub fn constraint_matrix(slices: &SliceTable, edges: &[HasseEdge]) -> Result<ConstraintMatrix> {
    let lookup = |v: &VoteVector| {
        slices
            .members(v)
            .map(<[usize]>::to_vec)
            .ok_or_else(|| Error::MissingSlice(v.to_string()))
    };
    let rows = edges
        .iter()
        .map(|e| {
            Ok(ConstraintRow {
                low_members: lookup(&e.low)?,
                high_members: lookup(&e.high)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConstraintMatrix {
        rows,
        edge_for_row: edges.to_vec(),
        num_records: slices.num_covered() + slices.uncovered.len(),
    })
}

/// Slices, Hasse edges and constraint matrix for a dataset in one call.
pub fn build_constraints(dataset: &Dataset) -> (SliceTable, ConstraintMatrix) {
    let slices = crate::data::build_slices(dataset);
    let keys: Vec<VoteVector> = slices.keys().cloned().collect();
    let edges = hasse_edges(&keys);
    let a = constraint_matrix(&slices, &edges).expect("edges are built from slice keys");
    (slices, a)
}
