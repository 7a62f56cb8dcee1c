//! A single handle over every label model, with fitting by name and a JSON
//! form tagged by `"kind"`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{
    convert_abstain, ds_fit, ds_posterior, fs_fit, fs_posterior, mv_score, DsConfig, DsFit, FsModel,
    SignedVotes, DEFAULT_EPS_CLIP,
};
use crate::data::{coverage_mask, Dataset, Prior, VoteVector};
use crate::error::{Error, Result};
use crate::weapo::{self, Prediction, WeapoConfig, WeapoModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Weapo,
    WeapoNoPrior,
    Mv,
    Ds,
    Fs,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Mv,
        ModelKind::Ds,
        ModelKind::Fs,
        ModelKind::WeapoNoPrior,
        ModelKind::Weapo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Weapo => "weapo",
            ModelKind::WeapoNoPrior => "weapo-noprior",
            ModelKind::Mv => "mv",
            ModelKind::Ds => "ds",
            ModelKind::Fs => "fs",
        }
    }

    pub fn requires_prior(self) -> bool {
        matches!(self, ModelKind::Weapo | ModelKind::Fs)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "weapo" => Ok(ModelKind::Weapo),
            // "weapo-prior" names the variant with the prior removed
            "weapo-noprior" | "weapo-prior" => Ok(ModelKind::WeapoNoPrior),
            "mv" => Ok(ModelKind::Mv),
            "ds" => Ok(ModelKind::Ds),
            "fs" => Ok(ModelKind::Fs),
            other => Err(Error::InvalidArgument(format!(
                "unknown model `{other}` (expected weapo, weapo-noprior, mv, ds or fs)"
            ))),
        }
    }
}

/// Hyperparameters for every model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub weapo: WeapoConfig,
    pub ds: DsConfig,
    pub eps_clip: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            weapo: WeapoConfig::default(),
            ds: DsConfig::default(),
            eps_clip: DEFAULT_EPS_CLIP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvModel {
    pub num_lfs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LabelModel {
    Weapo(WeapoModel),
    Mv(MvModel),
    Ds(DsFit),
    Fs(FsModel),
}

impl LabelModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            LabelModel::Weapo(m) if m.config.use_prior => ModelKind::Weapo,
            LabelModel::Weapo(_) => ModelKind::WeapoNoPrior,
            LabelModel::Mv(_) => ModelKind::Mv,
            LabelModel::Ds(_) => ModelKind::Ds,
            LabelModel::Fs(_) => ModelKind::Fs,
        }
    }

    pub fn num_lfs(&self) -> usize {
        match self {
            LabelModel::Weapo(m) => m.num_lfs(),
            LabelModel::Mv(m) => m.num_lfs,
            LabelModel::Ds(f) => f.model.num_lfs(),
            LabelModel::Fs(m) => m.num_lfs(),
        }
    }

    /// Positive-class score in `[0, 1]` for one vote vector.
    pub fn score(&self, votes: &VoteVector) -> Result<f64> {
        if votes.len() != self.num_lfs() {
            return Err(Error::DimensionMismatch {
                expected: self.num_lfs(),
                actual: votes.len(),
            });
        }
        Ok(match self {
            LabelModel::Weapo(m) => weapo::score(m, votes)?,
            LabelModel::Mv(_) => mv_score(votes),
            LabelModel::Ds(f) => ds_posterior(&f.model, &SignedVotes::from(votes)),
            LabelModel::Fs(m) => fs_posterior(m, &SignedVotes::from(votes)),
        })
    }

    pub fn predict(&self, dataset: &Dataset) -> Result<Prediction> {
        if dataset.num_lfs() != self.num_lfs() {
            return Err(Error::DimensionMismatch {
                expected: self.num_lfs(),
                actual: dataset.num_lfs(),
            });
        }
        let scores = dataset
            .votes()
            .map(|v| self.score(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Prediction {
            scores,
            covered: coverage_mask(dataset),
        })
    }
}

/// Fits the named model. Dawid–Skene starts from `prior` (0.5 if absent).
pub fn fit_label_model(
    kind: ModelKind,
    dataset: &Dataset,
    prior: Option<Prior>,
    options: &FitOptions,
) -> Result<LabelModel> {
    if kind.requires_prior() && prior.is_none() {
        return Err(Error::MissingPrior);
    }
    Ok(match kind {
        ModelKind::Weapo => {
            let cfg = WeapoConfig {
                use_prior: true,
                ..options.weapo.clone()
            };
            LabelModel::Weapo(weapo::fit(dataset, prior, &cfg)?)
        }
        ModelKind::WeapoNoPrior => {
            let cfg = WeapoConfig {
                use_prior: false,
                ..options.weapo.clone()
            };
            LabelModel::Weapo(weapo::fit(dataset, None, &cfg)?)
        }
        ModelKind::Mv => LabelModel::Mv(MvModel {
            num_lfs: dataset.num_lfs(),
        }),
        ModelKind::Ds => {
            let init = match prior {
                Some(p) => p,
                None => Prior::new(0.5)?,
            };
            LabelModel::Ds(ds_fit(&convert_abstain(dataset), init, &options.ds)?)
        }
        ModelKind::Fs => {
            let prior = prior.ok_or(Error::MissingPrior)?;
            LabelModel::Fs(fs_fit(&convert_abstain(dataset), prior, options.eps_clip)?)
        }
    })
}
