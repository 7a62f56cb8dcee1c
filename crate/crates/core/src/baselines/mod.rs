//! Baseline label models for positive-only LFs.
//!
//! Dawid–Skene and the triplet method expect LFs that can vote either class,
//! so abstains are first mapped to negative votes with [`convert_abstain`].
//! Majority vote works on the raw 0/1 votes.

mod ds;
mod fs;
mod mv;

pub use ds::{ds_fit, ds_fit_from, ds_posterior, DsConfig, DsFit, DsModel};
pub use fs::{empirical_moments, fs_fit, fs_from_moments, fs_posterior, FsModel, DEFAULT_EPS_CLIP};
pub use mv::mv_score;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, VoteVector};

/// One record's votes over {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignedVotes(Vec<i8>);

impl SignedVotes {
    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }
}

impl From<&VoteVector> for SignedVotes {
    fn from(v: &VoteVector) -> Self {
        Self(v.bits().iter().map(|&b| if b == 1 { 1 } else { -1 }).collect())
    }
}

/// Abstain (0) becomes -1, positive (1) stays +1.
pub fn convert_abstain(dataset: &Dataset) -> Vec<SignedVotes> {
    dataset.votes().map(SignedVotes::from).collect()
}
