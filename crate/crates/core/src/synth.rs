//! Seeded synthetic datasets with exact Bayes posteriors.
//!
//! Each LF fires independently given the class: with probability `tpr[j]` on
//! a positive and `fpr[j]` on a negative. Record `i` draws from its own
//! ChaCha8 stream (`seed`, stream `i`), so output does not depend on
//! generation order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label, Record, VoteVector};
use crate::error::{Error, Result};

/// Largest `M` for which [`oracle_posteriors`] enumerates all `2^M` vectors.
pub const MAX_TABLE_LFS: usize = 20;

/// Two class-conditional isotropic Gaussians sharing `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub mean_pos: Vec<f64>,
    pub mean_neg: Vec<f64>,
    pub sigma: f64,
}

impl FeatureSpec {
    /// Means at `+-separation / (2 sqrt(dim))` per coordinate, so the
    /// Euclidean distance between them is `separation`.
    pub fn separated(dim: usize, separation: f64, sigma: f64) -> Self {
        let offset = separation / (2.0 * (dim as f64).sqrt());
        Self {
            mean_pos: vec![offset; dim],
            mean_neg: vec![-offset; dim],
            sigma,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean_pos.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub p_plus: f64,
    pub tpr: Vec<f64>,
    pub fpr: Vec<f64>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_spec: Option<FeatureSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(p_plus: f64, tpr: Vec<f64>, fpr: Vec<f64>, n: usize, seed: u64) -> Self {
        Self {
            p_plus,
            tpr,
            fpr,
            n,
            feature_spec: None,
            seed,
        }
    }

    pub fn with_features(mut self, features: FeatureSpec) -> Self {
        self.feature_spec = Some(features);
        self
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn num_lfs(&self) -> usize {
        self.tpr.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.p_plus > 0.0 && self.p_plus < 1.0) {
            return bad(format!("p_plus {} must lie in (0, 1)", self.p_plus));
        }
        if self.tpr.is_empty() || self.tpr.len() != self.fpr.len() {
            return bad(format!(
                "tpr and fpr must be non-empty and equal length ({} vs {})",
                self.tpr.len(),
                self.fpr.len()
            ));
        }
        if let Some(x) = self
            .tpr
            .iter()
            .chain(&self.fpr)
            .find(|x| !(0.0..=1.0).contains(*x))
        {
            return bad(format!("firing probability {x} outside [0, 1]"));
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if let Some(fs) = &self.feature_spec {
            if fs.mean_pos.is_empty() || fs.mean_pos.len() != fs.mean_neg.len() {
                return bad("feature means must be non-empty and equal length".into());
            }
            if !(fs.sigma > 0.0 && fs.sigma.is_finite()) {
                return bad(format!("sigma {} must be positive", fs.sigma));
            }
            if fs.mean_pos.iter().chain(&fs.mean_neg).any(|x| !x.is_finite()) {
                return bad("feature means must be finite".into());
            }
        }
        Ok(())
    }
}

fn record_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Generates `spec.n` records with gold labels (and features if requested).
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let records = (0..spec.n)
        .map(|i| {
            let mut rng = record_rng(spec.seed, i);
            let positive = rng.random::<f64>() < spec.p_plus;
            let rates = if positive { &spec.tpr } else { &spec.fpr };
            let bits: Vec<bool> = rates.iter().map(|&r| rng.random::<f64>() < r).collect();
            let mut record = Record::new(i.to_string(), VoteVector::from_bools(&bits)).with_gold(
                if positive {
                    Label::Positive
                } else {
                    Label::Negative
                },
            );
            if let Some(fs) = &spec.feature_spec {
                let mean = if positive { &fs.mean_pos } else { &fs.mean_neg };
                let x = mean
                    .iter()
                    .map(|&mu| {
                        let z: f64 = rng.sample(StandardNormal);
                        mu + fs.sigma * z
                    })
                    .collect();
                record = record.with_features(x);
            }
            record
        })
        .collect();
    Dataset::new(records, spec.num_lfs(), None)
}

/// Exact `P(y = +1 | votes)` under the generating model.
pub fn oracle_posterior(spec: &SyntheticSpec, votes: &VoteVector) -> Result<f64> {
    if votes.len() != spec.num_lfs() {
        return Err(Error::DimensionMismatch {
            expected: spec.num_lfs(),
            actual: votes.len(),
        });
    }
    let mut pos = spec.p_plus;
    let mut neg = 1.0 - spec.p_plus;
    for (j, (&t, &f)) in spec.tpr.iter().zip(&spec.fpr).enumerate() {
        if votes.get(j) {
            pos *= t;
            neg *= f;
        } else {
            pos *= 1.0 - t;
            neg *= 1.0 - f;
        }
    }
    let total = pos + neg;
    Ok(if total > 0.0 { pos / total } else { spec.p_plus })
}

/// Exact posteriors keyed by vote vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleTable {
    pub posteriors: BTreeMap<VoteVector, f64>,
}

impl OracleTable {
    pub fn get(&self, v: &VoteVector) -> Option<f64> {
        self.posteriors.get(v).copied()
    }

    pub fn entries(&self) -> Vec<OracleEntry> {
        self.posteriors
            .iter()
            .map(|(v, &p)| OracleEntry {
                votes: v.clone(),
                posterior: p,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub votes: VoteVector,
    pub posterior: f64,
}

/// The full `2^M` table. Use [`oracle_for`] beyond [`MAX_TABLE_LFS`].
pub fn oracle_posteriors(spec: &SyntheticSpec) -> Result<OracleTable> {
    spec.validate()?;
    let m = spec.num_lfs();
    if m > MAX_TABLE_LFS {
        return Err(Error::InvalidArgument(format!(
            "full oracle table needs M <= {MAX_TABLE_LFS}, got {m}"
        )));
    }
    let vectors: Vec<VoteVector> = (0..1u64 << m).map(|mask| VoteVector::from_mask(mask, m)).collect();
    oracle_for(spec, &vectors)
}

/// Posteriors for just the given vectors.
pub fn oracle_for(spec: &SyntheticSpec, vectors: &[VoteVector]) -> Result<OracleTable> {
    let mut table = OracleTable::default();
    for v in vectors {
        table.posteriors.insert(v.clone(), oracle_posterior(spec, v)?);
    }
    Ok(table)
}

/// Sidecar written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFile {
    pub spec: SyntheticSpec,
    pub posteriors: Vec<OracleEntry>,
}

impl OracleFile {
    /// Entries cover every vote vector observed in `dataset` (plus all-zero).
    pub fn for_dataset(spec: &SyntheticSpec, dataset: &Dataset) -> Result<Self> {
        let mut vectors: Vec<VoteVector> = dataset.votes().cloned().collect();
        vectors.push(VoteVector::zeros(spec.num_lfs()));
        Ok(Self {
            spec: spec.clone(),
            posteriors: oracle_for(spec, &vectors)?.entries(),
        })
    }
}

/// Exact `E[lambda_j lambda_k]` over signed votes (abstain = -1).
pub fn population_moments(spec: &SyntheticSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let p = spec.p_plus;
    let m_pos: Vec<f64> = spec.tpr.iter().map(|t| 2.0 * t - 1.0).collect();
    let m_neg: Vec<f64> = spec.fpr.iter().map(|f| 2.0 * f - 1.0).collect();
    let m = spec.num_lfs();
    Ok((0..m)
        .map(|j| {
            (0..m)
                .map(|k| {
                    if j == k {
                        1.0
                    } else {
                        p * m_pos[j] * m_pos[k] + (1.0 - p) * m_neg[j] * m_neg[k]
                    }
                })
                .collect()
        })
        .collect())
}

/// `E[lambda_j * y]` over signed votes.
pub fn mean_accuracies(spec: &SyntheticSpec) -> Vec<f64> {
    let p = spec.p_plus;
    spec.tpr
        .iter()
        .zip(&spec.fpr)
        .map(|(t, f)| p * (2.0 * t - 1.0) - (1.0 - p) * (2.0 * f - 1.0))
        .collect()
}
