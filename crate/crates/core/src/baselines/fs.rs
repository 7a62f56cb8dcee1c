//! Triplet-method label model.
//!
//! With signed votes conditionally independent given `y` and
//! `E[lambda_j lambda_k] = a_j a_k`, any triplet `(j, k, l)` gives
//! `|a_j| = sqrt(|E_jk E_jl / E_kl|)`. Each LF's accuracy is the median over
//! all triplets whose denominator is not negligible. No iterative learning.

use serde::{Deserialize, Serialize};

use super::SignedVotes;
use crate::data::Prior;
use crate::error::{Error, Result};

pub const DEFAULT_EPS_CLIP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsModel {
    /// `a_j = E[lambda_j * y]`, in `[0, 1 - eps_clip]`.
    pub mean_accuracies: Vec<f64>,
    pub class_prior: f64,
}

impl FsModel {
    pub fn num_lfs(&self) -> usize {
        self.mean_accuracies.len()
    }
}

/// Empirical `E[lambda_j lambda_k]` as a dense `M x M` matrix.
pub fn empirical_moments(votes: &[SignedVotes]) -> Result<Vec<Vec<f64>>> {
    let m = votes
        .first()
        .map(SignedVotes::len)
        .ok_or_else(|| Error::InvalidArgument("no records".into()))?;
    let mut sums = vec![vec![0i64; m]; m];
    for v in votes {
        if v.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: v.len(),
            });
        }
        let x = v.values();
        for j in 0..m {
            for k in j..m {
                sums[j][k] += i64::from(x[j] * x[k]);
            }
        }
    }
    let n = votes.len() as f64;
    let mut out = vec![vec![0.0; m]; m];
    for j in 0..m {
        for k in j..m {
            out[j][k] = sums[j][k] as f64 / n;
            out[k][j] = out[j][k];
        }
    }
    Ok(out)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Triplet recovery from a second-moment matrix.
pub fn fs_from_moments(moments: &[Vec<f64>], prior: Prior, eps_clip: f64) -> Result<FsModel> {
    let m = moments.len();
    if m < 3 {
        return Err(Error::TooFewLfsForTriplets(m));
    }
    if moments.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidArgument("moment matrix must be square".into()));
    }
    let mut accuracies = Vec::with_capacity(m);
    for j in 0..m {
        let mut estimates = Vec::new();
        for k in 0..m {
            for l in (k + 1)..m {
                if k == j || l == j || moments[k][l].abs() <= eps_clip {
                    continue;
                }
                estimates.push((moments[j][k] * moments[j][l] / moments[k][l]).abs().sqrt());
            }
        }
        if estimates.is_empty() {
            return Err(Error::NoAdmissibleTriplet(j));
        }
        accuracies.push(median(&mut estimates).clamp(0.0, 1.0 - eps_clip));
    }
    Ok(FsModel {
        mean_accuracies: accuracies,
        class_prior: prior.value(),
    })
}

pub fn fs_fit(votes: &[SignedVotes], prior: Prior, eps_clip: f64) -> Result<FsModel> {
    let m = votes.first().map_or(0, SignedVotes::len);
    if m < 3 {
        return Err(Error::TooFewLfsForTriplets(m));
    }
    fs_from_moments(&empirical_moments(votes)?, prior, eps_clip)
}

/// `P(y = +1 | votes)` with `P(lambda_j = y) = (1 + a_j) / 2`, in log space.
pub fn fs_posterior(model: &FsModel, votes: &SignedVotes) -> f64 {
    let p = model.class_prior;
    let logit = (p / (1.0 - p)).ln()
        + model
            .mean_accuracies
            .iter()
            .zip(votes.values())
            .map(|(&a, &v)| f64::from(v) * ((1.0 + a) / (1.0 - a)).ln())
            .sum::<f64>();
    1.0 / (1.0 + (-logit).exp())
}
