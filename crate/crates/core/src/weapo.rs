//! The WEAPO label model.
//!
//! The scorer is `f(x) = votes(x) . theta` with `theta` on the probability
//! simplex, so scores live in `[0, 1]`. Training minimizes
//!
//! ```text
//! lambda * |theta|^2 + sum_r max((A f)_r, 0) + prior_weight * |mean(f) - p_plus|
//! ```
//!
//! over the simplex by projected subgradient descent with step `step0 / sqrt(t)`,
//! reporting the best iterate seen. The prior term is dropped when
//! `use_prior` is false.
//!
//! Because `theta >= 0` and every constraint row compares a vote vector with
//! one that covers it, the hinge term is zero for every feasible `theta`. It is
//! still evaluated and reported.

use serde::{Deserialize, Serialize};

use crate::covering::{build_constraints, ConstraintMatrix};
use crate::data::{coverage_mask, Dataset, Label, Prior, VoteVector};
use crate::error::{Error, Result};
use crate::simplex::project_simplex;

/// Number of iterations over which the best objective must improve by `tol`.
pub const STALL_WINDOW: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeapoConfig {
    pub lambda_reg: f64,
    pub use_prior: bool,
    pub prior_weight: f64,
    pub max_iters: usize,
    pub step0: f64,
    pub tol: f64,
    pub seed: u64,
}

impl Default for WeapoConfig {
    fn default() -> Self {
        Self {
            lambda_reg: 1.0,
            use_prior: true,
            prior_weight: 1.0,
            max_iters: 5000,
            step0: 0.5,
            tol: 1e-8,
            seed: 0,
        }
    }
}

impl WeapoConfig {
    pub fn without_prior() -> Self {
        Self {
            use_prior: false,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.lambda_reg >= 0.0
            && self.prior_weight >= 0.0
            && self.step0 > 0.0
            && self.tol > 0.0
            && self.lambda_reg.is_finite()
            && self.prior_weight.is_finite()
            && self.step0.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid WEAPO config: {self:?}")))
        }
    }
}

/// Per-term breakdown of the training objective.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveTerms {
    pub reg: f64,
    pub hinge: f64,
    pub prior: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub objective: f64,
    pub terms: ObjectiveTerms,
    pub iterations: usize,
    pub converged: bool,
    /// Best objective after iteration 0, 50, 100, ... and at the end.
    pub history: Vec<f64>,
    pub num_constraints: usize,
    /// Mean score over all records; compared against the prior.
    pub mean_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_plus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_mapping_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeapoModel {
    pub theta: Vec<f64>,
    pub config: WeapoConfig,
    pub diagnostics: Diagnostics,
}

impl WeapoModel {
    pub fn num_lfs(&self) -> usize {
        self.theta.len()
    }

    pub fn score(&self, votes: &VoteVector) -> Result<f64> {
        score(self, votes)
    }
}

/// `votes . theta`, clamped into `[0, 1]` against rounding.
pub fn score(model: &WeapoModel, votes: &VoteVector) -> Result<f64> {
    if votes.len() != model.theta.len() {
        return Err(Error::DimensionMismatch {
            expected: model.theta.len(),
            actual: votes.len(),
        });
    }
    Ok(votes.dot(&model.theta).clamp(0.0, 1.0))
}

/// Scores for every record together with the coverage mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub covered: Vec<bool>,
}

pub fn predict_dataset(model: &WeapoModel, dataset: &Dataset) -> Result<Prediction> {
    if dataset.num_lfs() != model.num_lfs() {
        return Err(Error::DimensionMismatch {
            expected: model.num_lfs(),
            actual: dataset.num_lfs(),
        });
    }
    let scores = dataset
        .votes()
        .map(|v| score(model, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prediction {
        scores,
        covered: coverage_mask(dataset),
    })
}

/// Evaluates the objective directly on per-record scores `f = L theta`.
pub fn objective(
    theta: &[f64],
    constraints: &ConstraintMatrix,
    dataset: &Dataset,
    prior: Option<Prior>,
    config: &WeapoConfig,
) -> ObjectiveTerms {
    let scores: Vec<f64> = dataset.votes().map(|v| v.dot(theta)).collect();
    let reg = config.lambda_reg * theta.iter().map(|t| t * t).sum::<f64>();
    let hinge = constraints
        .apply(&scores)
        .into_iter()
        .map(|x| x.max(0.0))
        .sum::<f64>();
    let prior_term = match (config.use_prior, prior) {
        (true, Some(p)) => {
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            (mean - p.value()).abs()
        }
        _ => 0.0,
    };
    ObjectiveTerms {
        reg,
        hinge,
        prior: prior_term,
        total: reg + hinge + config.prior_weight * prior_term,
    }
}

/// The objective restated over `theta` alone: `A f = (A L) theta` and
/// `mean(f) = fire_rates . theta`.
struct Problem {
    design: Vec<Vec<f64>>,
    fire_rates: Vec<f64>,
    p_plus: Option<f64>,
    lambda: f64,
    prior_weight: f64,
}

impl Problem {
    fn terms(&self, theta: &[f64]) -> ObjectiveTerms {
        let reg = self.lambda * dot(theta, theta);
        let hinge = self
            .design
            .iter()
            .map(|g| dot(g, theta).max(0.0))
            .sum::<f64>();
        let prior = self
            .p_plus
            .map_or(0.0, |p| (dot(&self.fire_rates, theta) - p).abs());
        ObjectiveTerms {
            reg,
            hinge,
            prior,
            total: reg + hinge + self.prior_weight * prior,
        }
    }

    fn subgradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = theta.iter().map(|t| 2.0 * self.lambda * t).collect();
        for row in &self.design {
            if dot(row, theta) > 0.0 {
                axpy(&mut g, 1.0, row);
            }
        }
        if let Some(p) = self.p_plus {
            let gap = dot(&self.fire_rates, theta) - p;
            let sign = if gap > 0.0 {
                1.0
            } else if gap < 0.0 {
                -1.0
            } else {
                0.0
            };
            axpy(&mut g, self.prior_weight * sign, &self.fire_rates);
        }
        g
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Trains WEAPO. `prior` is required when `config.use_prior` is set and
/// ignored otherwise.
pub fn fit(dataset: &Dataset, prior: Option<Prior>, config: &WeapoConfig) -> Result<WeapoModel> {
    config.validate()?;
    let (slices, constraints) = build_constraints(dataset);
    if slices.slices.is_empty() {
        return Err(Error::NoCoveredRecords);
    }
    let p_plus = if config.use_prior {
        Some(prior.ok_or(Error::MissingPrior)?.value())
    } else {
        None
    };
    let problem = Problem {
        design: constraints.vote_design(dataset),
        fire_rates: dataset.fire_rates(),
        p_plus,
        lambda: config.lambda_reg,
        prior_weight: config.prior_weight,
    };

    let m = dataset.num_lfs();
    let mut theta = vec![1.0 / m as f64; m];
    let mut best_theta = theta.clone();
    let mut best = problem.terms(&theta);
    let mut best_trace = Vec::with_capacity(config.max_iters + 1);
    best_trace.push(best.total);
    let mut history = vec![best.total];
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=config.max_iters {
        iterations = t;
        let g = problem.subgradient(&theta);
        let step = config.step0 / (t as f64).sqrt();
        let mut next = theta.clone();
        axpy(&mut next, -step, &g);
        theta = project_simplex(&next)?;
        let terms = problem.terms(&theta);
        if terms.total < best.total {
            best = terms;
            best_theta.clone_from(&theta);
        }
        best_trace.push(best.total);
        if t % STALL_WINDOW == 0 {
            history.push(best.total);
        }
        if t >= STALL_WINDOW && best_trace[t - STALL_WINDOW] - best.total < config.tol {
            converged = true;
            break;
        }
    }
    if history.last() != Some(&best.total) || iterations % STALL_WINDOW != 0 {
        history.push(best.total);
    }

    Ok(WeapoModel {
        diagnostics: Diagnostics {
            objective: best.total,
            terms: best,
            iterations,
            converged,
            history,
            num_constraints: constraints.num_rows(),
            mean_score: dot(&problem.fire_rates, &best_theta),
            p_plus,
            gradient_mapping_norm: None,
        },
        theta: best_theta,
        config: config.clone(),
    })
}

/// Supervised fit of the same model class: least squares between scores and
/// `(gold + 1) / 2` over covered records.
pub fn fit_supervised(dataset: &Dataset, config: &WeapoConfig) -> Result<WeapoModel> {
    let mut targets = vec![0.0; dataset.len()];
    for (t, r) in targets.iter_mut().zip(dataset.records()) {
        if r.votes.is_covered() {
            let gold = r.gold.ok_or_else(|| Error::MissingGold(r.id.clone()))?;
            *t = if gold == Label::Positive { 1.0 } else { 0.0 };
        }
    }
    fit_supervised_targets(dataset, &targets, config)
}

/// Least-squares fit of `theta` on the simplex to arbitrary real targets
/// (aligned with records; uncovered entries are ignored).
///
/// Accelerated projected gradient with restarts; stops once the gradient
/// mapping norm drops below `config.tol`.
pub fn fit_supervised_targets(
    dataset: &Dataset,
    targets: &[f64],
    config: &WeapoConfig,
) -> Result<WeapoModel> {
    if targets.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            actual: targets.len(),
        });
    }
    let m = dataset.num_lfs();
    let mut gram = vec![vec![0.0; m]; m];
    let mut rhs = vec![0.0; m];
    let mut sq = 0.0;
    let mut n = 0usize;
    for (r, &t) in dataset.records().iter().zip(targets) {
        if !r.votes.is_covered() {
            continue;
        }
        n += 1;
        sq += t * t;
        let on: Vec<usize> = (0..m).filter(|&j| r.votes.get(j)).collect();
        for &j in &on {
            rhs[j] += t;
            for &k in &on {
                gram[j][k] += 1.0;
            }
        }
    }
    if n == 0 {
        return Err(Error::NoCoveredRecords);
    }
    let nf = n as f64;
    gram.iter_mut().flatten().for_each(|x| *x /= nf);
    rhs.iter_mut().for_each(|x| *x /= nf);
    sq /= nf;

    let mse = |theta: &[f64]| {
        let h: f64 = gram
            .iter()
            .zip(theta)
            .map(|(row, &tj)| tj * dot(row, theta))
            .sum();
        (h - 2.0 * dot(&rhs, theta) + sq).max(0.0)
    };
    let grad = |theta: &[f64]| -> Vec<f64> {
        gram.iter()
            .zip(&rhs)
            .map(|(row, b)| 2.0 * (dot(row, theta) - b))
            .collect()
    };
    // Gershgorin bound on the largest eigenvalue of 2 * gram.
    let lipschitz = gram
        .iter()
        .map(|row| 2.0 * row.iter().sum::<f64>())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let prox_step = |theta: &[f64]| -> Result<Vec<f64>> {
        let g = grad(theta);
        let mut y = theta.to_vec();
        axpy(&mut y, -1.0 / lipschitz, &g);
        project_simplex(&y)
    };
    let mapping_norm = |theta: &[f64]| -> Result<f64> {
        let p = prox_step(theta)?;
        Ok(lipschitz * dot_diff_norm(theta, &p))
    };

    let mut theta = vec![1.0 / m as f64; m];
    let mut prev = theta.clone();
    let mut momentum = 1.0f64;
    let mut current = mse(&theta);
    let mut gm = mapping_norm(&theta)?;
    let mut iterations = 0;
    let mut history = vec![current];
    while iterations < config.max_iters && gm > config.tol {
        iterations += 1;
        let next_momentum = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
        let beta = (momentum - 1.0) / next_momentum;
        let y: Vec<f64> = theta
            .iter()
            .zip(&prev)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        let candidate = prox_step(&y)?;
        let value = mse(&candidate);
        if value > current {
            // restart from a plain projected gradient step
            momentum = 1.0;
            prev.clone_from(&theta);
            theta = prox_step(&theta)?;
            current = mse(&theta);
        } else {
            momentum = next_momentum;
            prev = std::mem::replace(&mut theta, candidate);
            current = value;
        }
        gm = mapping_norm(&theta)?;
        if iterations % STALL_WINDOW == 0 {
            history.push(current);
        }
    }
    history.push(current);

    let fire_rates = dataset.fire_rates();
    let mut cfg = config.clone();
    cfg.use_prior = false;
    Ok(WeapoModel {
        diagnostics: Diagnostics {
            objective: current,
            terms: ObjectiveTerms {
                total: current,
                ..ObjectiveTerms::default()
            },
            iterations,
            converged: gm <= config.tol,
            history,
            num_constraints: 0,
            mean_score: dot(&fire_rates, &theta),
            p_plus: None,
            gradient_mapping_norm: Some(gm),
        },
        theta,
        config: cfg,
    })
}

fn dot_diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
