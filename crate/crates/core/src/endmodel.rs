//! RBF kernel ridge regression end model.
//!
//! Trained on label-model scores for covered records and a fixed target
//! (default 0, i.e. negative) for uncovered ones.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetPolicy {
    pub uncovered_target: f64,
}

impl Default for TargetPolicy {
    fn default() -> Self {
        Self {
            uncovered_target: 0.0,
        }
    }
}

pub fn make_targets(label_scores: &[f64], coverage_mask: &[bool], policy: TargetPolicy) -> Vec<f64> {
    label_scores
        .iter()
        .zip(coverage_mask)
        .map(|(&s, &covered)| if covered { s } else { policy.uncovered_target })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrrModel {
    pub support: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub gamma: f64,
    pub alpha: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * sq_dist(a, b)).exp()
}

fn feature_width(features: &[Vec<f64>]) -> Result<usize> {
    let f = features
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidArgument("no training points".into()))?;
    for row in features {
        if row.len() != f {
            return Err(Error::DimensionMismatch {
                expected: f,
                actual: row.len(),
            });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
    }
    Ok(f)
}

/// `1 / (F * var(X))` over all feature entries; 1 when the variance is zero.
pub fn default_gamma(features: &[Vec<f64>]) -> Result<f64> {
    let f = feature_width(features)?;
    let values: Vec<f64> = features.iter().flatten().copied().collect();
    if f == 0 {
        return Ok(1.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok(if var > 0.0 { 1.0 / (f as f64 * var) } else { 1.0 })
}

/// Solves `(K + alpha I) c = t` by Cholesky.
pub fn fit_krr(features: &[Vec<f64>], targets: &[f64], gamma: f64, alpha: f64) -> Result<KrrModel> {
    feature_width(features)?;
    let n = features.len();
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: targets.len(),
        });
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma must be positive, got {gamma}")));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be non-negative, got {alpha}")));
    }
    if targets.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("non-finite target".into()));
    }
    let mut system = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let k = rbf(&features[i], &features[j], gamma);
            system[(i, j)] = k;
            system[(j, i)] = k;
        }
        system[(i, i)] += alpha;
    }
    let rhs = DVector::from_column_slice(targets);
    let chol = system.clone().cholesky().ok_or(Error::SingularSystem)?;
    let mut coef = chol.solve(&rhs);
    // one step of iterative refinement
    let residual = &rhs - &system * &coef;
    coef += chol.solve(&residual);
    let residual = (&rhs - &system * &coef).norm();
    if residual.is_nan() || residual > 1e-8 * (1.0 + rhs.norm()) {
        return Err(Error::SingularSystem);
    }
    Ok(KrrModel {
        support: features.to_vec(),
        coefficients: coef.iter().copied().collect(),
        gamma,
        alpha,
    })
}

/// `g(x) = sum_i c_i K(x, x_i)` for each query row.
pub fn predict_krr(model: &KrrModel, features: &[Vec<f64>]) -> Result<Vec<f64>> {
    let width = model.support.first().map_or(0, Vec::len);
    features
        .iter()
        .map(|x| {
            if x.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    actual: x.len(),
                });
            }
            Ok(model
                .support
                .iter()
                .zip(&model.coefficients)
                .map(|(s, c)| c * rbf(x, s, model.gamma))
                .sum())
        })
        .collect()
}
