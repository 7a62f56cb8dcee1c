//! Dawid–Skene: a naive Bayes model over signed LF votes and a latent binary
//! label, fit by EM with additive smoothing.
//!
//! With smoothing `s` the M-step is the MAP update under a symmetric Dirichlet
//! prior, so the quantity EM increases monotonically is the smoothed
//! log-likelihood `log p(votes | params) + s * sum(log params)`. That is what
//! [`DsFit::log_likelihoods`] records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SignedVotes;
use crate::data::Prior;
use crate::error::{Error, Result};

/// Index 0 is the negative class / vote, index 1 the positive one.
const NEG: usize = 0;
const POS: usize = 1;

fn vote_index(v: i8) -> usize {
    if v > 0 {
        POS
    } else {
        NEG
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsModel {
    pub class_prior: f64,
    /// `confusion[j][c][o] = P(vote_j = o | y = c)`.
    pub confusion: Vec<[[f64; 2]; 2]>,
}

impl DsModel {
    pub fn num_lfs(&self) -> usize {
        self.confusion.len()
    }

    /// Model whose LF `j` fires with `tpr[j]` on positives and `fpr[j]` on
    /// negatives.
    pub fn from_rates(class_prior: f64, tpr: &[f64], fpr: &[f64]) -> Self {
        let confusion = tpr
            .iter()
            .zip(fpr)
            .map(|(&t, &f)| [[1.0 - f, f], [1.0 - t, t]])
            .collect();
        Self {
            class_prior,
            confusion,
        }
    }

    fn log_joint(&self, votes: &[i8]) -> [f64; 2] {
        let mut lp = [(1.0 - self.class_prior).ln(), self.class_prior.ln()];
        for (conf, &v) in self.confusion.iter().zip(votes) {
            let o = vote_index(v);
            lp[NEG] += conf[NEG][o].ln();
            lp[POS] += conf[POS][o].ln();
        }
        lp
    }

    fn validate(&self) -> Result<()> {
        let ok = self.class_prior > 0.0
            && self.class_prior < 1.0
            && self.confusion.iter().all(|c| {
                c.iter().all(|row| {
                    row.iter().all(|&x| (0.0..=1.0).contains(&x))
                        && (row[0] + row[1] - 1.0).abs() < 1e-9
                })
            });
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("invalid Dawid-Skene parameters".into()))
        }
    }
}

/// `P(y = +1 | votes)` by Bayes' rule under conditional independence.
pub fn ds_posterior(model: &DsModel, votes: &SignedVotes) -> f64 {
    let [ln_neg, ln_pos] = model.log_joint(votes.values());
    posterior_from_logs(ln_neg, ln_pos, model.class_prior)
}

fn posterior_from_logs(ln_neg: f64, ln_pos: f64, fallback: f64) -> f64 {
    if ln_neg == f64::NEG_INFINITY && ln_pos == f64::NEG_INFINITY {
        return fallback;
    }
    1.0 / (1.0 + (ln_neg - ln_pos).exp())
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DsConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub smoothing: f64,
}

impl Default for DsConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
            smoothing: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsFit {
    pub model: DsModel,
    /// Smoothed log-likelihood of the parameters after each M-step.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Distinct vote patterns with multiplicities.
struct Patterns {
    votes: Vec<Vec<i8>>,
    counts: Vec<f64>,
    num_lfs: usize,
}

impl Patterns {
    fn new(votes: &[SignedVotes]) -> Result<Self> {
        let num_lfs = votes
            .first()
            .map(SignedVotes::len)
            .ok_or_else(|| Error::InvalidArgument("Dawid-Skene needs at least one record".into()))?;
        if num_lfs == 0 {
            return Err(Error::InvalidArgument("Dawid-Skene needs at least one LF".into()));
        }
        let mut grouped: BTreeMap<&[i8], usize> = BTreeMap::new();
        for v in votes {
            if v.len() != num_lfs {
                return Err(Error::DimensionMismatch {
                    expected: num_lfs,
                    actual: v.len(),
                });
            }
            *grouped.entry(v.values()).or_default() += 1;
        }
        Ok(Self {
            votes: grouped.keys().map(|k| k.to_vec()).collect(),
            counts: grouped.values().map(|&c| c as f64).collect(),
            num_lfs,
        })
    }

    fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    fn m_step(&self, resp: &[f64], smoothing: f64) -> DsModel {
        let mut mass = [0.0; 2];
        let mut tallies = vec![[[0.0; 2]; 2]; self.num_lfs];
        for ((votes, &count), &r) in self.votes.iter().zip(&self.counts).zip(resp) {
            let w = [count * (1.0 - r), count * r];
            mass[NEG] += w[NEG];
            mass[POS] += w[POS];
            for (t, &v) in tallies.iter_mut().zip(votes) {
                let o = vote_index(v);
                t[NEG][o] += w[NEG];
                t[POS][o] += w[POS];
            }
        }
        let confusion = tallies
            .into_iter()
            .map(|t| {
                let mut conf = [[0.0; 2]; 2];
                for c in [NEG, POS] {
                    let denom = mass[c] + 2.0 * smoothing;
                    for o in [NEG, POS] {
                        conf[c][o] = (t[c][o] + smoothing) / denom;
                    }
                }
                conf
            })
            .collect();
        let class_prior = (mass[POS] + smoothing) / (self.total() + 2.0 * smoothing);
        DsModel {
            class_prior,
            confusion,
        }
    }

    fn e_step(&self, model: &DsModel) -> Vec<f64> {
        self.votes
            .iter()
            .map(|v| {
                let [a, b] = model.log_joint(v);
                posterior_from_logs(a, b, model.class_prior)
            })
            .collect()
    }

    fn smoothed_log_likelihood(&self, model: &DsModel, smoothing: f64) -> f64 {
        let data: f64 = self
            .votes
            .iter()
            .zip(&self.counts)
            .map(|(v, &count)| {
                let [a, b] = model.log_joint(v);
                count * log_sum_exp(a, b)
            })
            .sum();
        if smoothing == 0.0 {
            return data;
        }
        let params: f64 = model
            .confusion
            .iter()
            .flat_map(|c| c.iter().flatten())
            .map(|p| p.ln())
            .sum::<f64>()
            + model.class_prior.ln()
            + (1.0 - model.class_prior).ln();
        data + smoothing * params
    }

    /// Orients the latent classes so the one with the larger
    /// responsibility-weighted mean signed vote is labeled positive.
    fn canonicalize(&self, model: DsModel) -> DsModel {
        let resp = self.e_step(&model);
        let mut weighted = [0.0; 2];
        let mut mass = [0.0; 2];
        for ((v, &count), &r) in self.votes.iter().zip(&self.counts).zip(&resp) {
            let mean = v.iter().map(|&x| f64::from(x)).sum::<f64>() / self.num_lfs as f64;
            weighted[NEG] += count * (1.0 - r) * mean;
            weighted[POS] += count * r * mean;
            mass[NEG] += count * (1.0 - r);
            mass[POS] += count * r;
        }
        let mean_of = |c: usize| {
            if mass[c] > 0.0 {
                weighted[c] / mass[c]
            } else {
                f64::NEG_INFINITY
            }
        };
        if mean_of(NEG) > mean_of(POS) {
            DsModel {
                class_prior: 1.0 - model.class_prior,
                confusion: model.confusion.iter().map(|c| [c[POS], c[NEG]]).collect(),
            }
        } else {
            model
        }
    }
}

fn run_em(patterns: &Patterns, mut resp: Vec<f64>, initial: Option<DsModel>, config: &DsConfig) -> Result<DsFit> {
    if config.smoothing < 0.0 || config.tol < 0.0 {
        return Err(Error::InvalidArgument(format!("invalid Dawid-Skene config: {config:?}")));
    }
    let mut log_likelihoods = Vec::new();
    let mut model = match initial {
        Some(m) => {
            log_likelihoods.push(patterns.smoothed_log_likelihood(&m, config.smoothing));
            resp = patterns.e_step(&m);
            m
        }
        None => patterns.m_step(&resp, config.smoothing),
    };
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        if iterations > 1 || !log_likelihoods.is_empty() {
            model = patterns.m_step(&resp, config.smoothing);
        }
        let ll = patterns.smoothed_log_likelihood(&model, config.smoothing);
        let improvement = log_likelihoods.last().map(|&prev| ll - prev);
        log_likelihoods.push(ll);
        if improvement.is_some_and(|d| d < config.tol) {
            converged = true;
            break;
        }
        resp = patterns.e_step(&model);
    }
    Ok(DsFit {
        model: patterns.canonicalize(model),
        log_likelihoods,
        iterations,
        converged,
    })
}

/// EM from responsibilities `0.5 * mv + 0.5 * p_plus`, where `mv` is the
/// fraction of positive votes.
pub fn ds_fit(votes: &[SignedVotes], init_prior: Prior, config: &DsConfig) -> Result<DsFit> {
    let patterns = Patterns::new(votes)?;
    let p = init_prior.value();
    let resp = patterns
        .votes
        .iter()
        .map(|v| {
            let mv = v.iter().filter(|&&x| x > 0).count() as f64 / patterns.num_lfs as f64;
            0.5 * mv + 0.5 * p
        })
        .collect();
    run_em(&patterns, resp, None, config)
}

/// EM started from given parameters (first step is an E-step).
pub fn ds_fit_from(votes: &[SignedVotes], initial: &DsModel, config: &DsConfig) -> Result<DsFit> {
    initial.validate()?;
    let patterns = Patterns::new(votes)?;
    if initial.num_lfs() != patterns.num_lfs {
        return Err(Error::DimensionMismatch {
            expected: initial.num_lfs(),
            actual: patterns.num_lfs,
        });
    }
    run_em(&patterns, Vec::new(), Some(initial.clone()), config)
}
