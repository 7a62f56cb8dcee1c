//! Binary weak supervision from positive-only labeling functions.
//!
//! Every labeling function (LF) either votes positive or abstains. This crate
//! provides:
//!
//! - [`weapo`]: a label model that scores a record by a convex combination of
//!   its LF votes, trained to respect the covering order on vote vectors and a
//!   known class prior;
//! - [`baselines`]: majority vote, Dawid–Skene EM and a triplet-method model,
//!   applied after mapping abstains to negative votes;
//! - [`metrics`]: ROC-AUC and average precision, with covered-subset evaluation;
//! - [`endmodel`]: RBF kernel ridge regression trained on label-model scores;
//! - [`synth`]: a seeded generator with exact Bayes posteriors for verification.

pub mod baselines;
pub mod covering;
pub mod data;
pub mod endmodel;
pub mod error;
pub mod metrics;
pub mod model;
pub mod simplex;
pub mod synth;
pub mod weapo;

pub use data::{Dataset, Label, Prior, Record, SliceTable, VoteVector};
pub use error::{Error, Result};
pub use model::LabelModel;

/// Library version, echoed in every CLI result file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
