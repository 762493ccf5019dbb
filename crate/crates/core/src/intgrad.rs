//! Integrated gradients along the straight path from a baseline to the
//! input:
//!
//! `IG_i(x) = (x_i - x'_i) * int_0^1 dF(x' + a (x - x'))/dx_i da`
//!
//! The path integral is evaluated either with the composite trapezoidal rule
//! or by interpolating the path gradient with a polynomial (solved through a
//! Vandermonde system) and integrating that polynomial exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, VandermondeSystem, MAX_VANDERMONDE_LEN};
use crate::models::{DifferentiableModel, ModelError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IgError {
    #[error("input has {x} features, baseline {baseline}, model arity {arity}")]
    Arity {
        x: usize,
        baseline: usize,
        arity: usize,
    },

    #[error("steps must be at least 1")]
    ZeroSteps,

    #[error("polynomial degree must be between 1 and {max}, got {degree}")]
    Degree { degree: usize, max: usize },

    #[error("gradient evaluation failed at alpha = {alpha}: {source}")]
    Gradient {
        alpha: f64,
        #[source]
        source: ModelError,
    },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IgMethod {
    Trapezoid,
    Vandermonde,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IgConfig {
    pub steps: usize,
    pub poly_degree: usize,
    pub method: IgMethod,
}

impl Default for IgConfig {
    fn default() -> Self {
        Self {
            steps: 50,
            poly_degree: 8,
            method: IgMethod::Trapezoid,
        }
    }
}

impl IgConfig {
    pub fn run<M: DifferentiableModel + ?Sized>(
        &self,
        model: &M,
        x: &[f64],
        baseline: &[f64],
    ) -> Result<IgAttribution, IgError> {
        match self.method {
            IgMethod::Trapezoid => ig_trapezoid(model, x, baseline, self.steps),
            IgMethod::Vandermonde => ig_vandermonde(model, x, baseline, self.poly_degree),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IgAttribution {
    pub per_feature: Vec<f64>,
    /// `|sum IG_i - (F(x) - F(x'))|`.
    pub completeness_gap: f64,
    pub baseline: Vec<f64>,
}

fn check_inputs<M: DifferentiableModel + ?Sized>(
    model: &M,
    x: &[f64],
    baseline: &[f64],
) -> Result<(), IgError> {
    if x.len() != baseline.len() || x.len() != model.arity() {
        return Err(IgError::Arity {
            x: x.len(),
            baseline: baseline.len(),
            arity: model.arity(),
        });
    }
    Ok(())
}

/// Gradient of `model` at `x' + alpha (x - x')` for every `alpha`.
fn path_gradients<M: DifferentiableModel + ?Sized>(
    model: &M,
    x: &[f64],
    baseline: &[f64],
    alphas: &[f64],
) -> Result<Vec<Vec<f64>>, IgError> {
    let mut point = vec![0.0; x.len()];
    alphas
        .iter()
        .map(|&alpha| {
            for ((p, xi), bi) in point.iter_mut().zip(x).zip(baseline) {
                *p = bi + alpha * (xi - bi);
            }
            model
                .gradient(&point)
                .map_err(|source| IgError::Gradient { alpha, source })
        })
        .collect()
}

fn completeness_gap<M: DifferentiableModel + ?Sized>(
    per_feature: &[f64],
    model: &M,
    x: &[f64],
    baseline: &[f64],
) -> Result<f64, IgError> {
    let delta = model.evaluate(x)? - model.evaluate(baseline)?;
    Ok((per_feature.iter().sum::<f64>() - delta).abs())
}

fn finish<M: DifferentiableModel + ?Sized>(
    per_feature: Vec<f64>,
    model: &M,
    x: &[f64],
    baseline: &[f64],
) -> Result<IgAttribution, IgError> {
    let completeness_gap = completeness_gap(&per_feature, model, x, baseline)?;
    Ok(IgAttribution {
        per_feature,
        completeness_gap,
        baseline: baseline.to_vec(),
    })
}

/// Composite trapezoidal rule with `steps` equal panels on `[0, 1]`; the
/// gradient is evaluated once at each of the `steps + 1` nodes.
pub fn ig_trapezoid<M: DifferentiableModel + ?Sized>(
    model: &M,
    x: &[f64],
    baseline: &[f64],
    steps: usize,
) -> Result<IgAttribution, IgError> {
    check_inputs(model, x, baseline)?;
    if steps == 0 {
        return Err(IgError::ZeroSteps);
    }
    let alphas: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
    let grads = path_gradients(model, x, baseline, &alphas)?;
    let width = 1.0 / steps as f64;

    let per_feature = (0..x.len())
        .map(|i| {
            let integral: f64 = grads
                .windows(2)
                .map(|pair| (pair[0][i] + pair[1][i]) / 2.0 * width)
                .sum();
            (x[i] - baseline[i]) * integral
        })
        .collect();
    finish(per_feature, model, x, baseline)
}

/// Interpolates each gradient component at `degree + 1` uniform nodes on
/// `[0, 1]` and integrates the interpolant exactly. All features share one
/// factorization of the Vandermonde matrix and one gradient sweep.
pub fn ig_vandermonde<M: DifferentiableModel + ?Sized>(
    model: &M,
    x: &[f64],
    baseline: &[f64],
    degree: usize,
) -> Result<IgAttribution, IgError> {
    check_inputs(model, x, baseline)?;
    if degree == 0 || degree + 1 > MAX_VANDERMONDE_LEN {
        return Err(IgError::Degree {
            degree,
            max: MAX_VANDERMONDE_LEN - 1,
        });
    }
    let nodes: Vec<f64> = (0..=degree).map(|j| j as f64 / degree as f64).collect();
    let system = VandermondeSystem::new(&nodes)?;
    let grads = path_gradients(model, x, baseline, &nodes)?;

    let mut samples = vec![0.0; nodes.len()];
    let per_feature = (0..x.len())
        .map(|i| {
            for (s, g) in samples.iter_mut().zip(&grads) {
                *s = g[i];
            }
            let coeffs = system.solve(&samples)?;
            let integral: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(j, a)| a / (j + 1) as f64)
                .sum();
            Ok((x[i] - baseline[i]) * integral)
        })
        .collect::<Result<Vec<_>, IgError>>()?;
    finish(per_feature, model, x, baseline)
}

/// Recomputes `|sum IG_i - (F(x) - F(x'))|` and stores it on `attr`.
pub fn check_completeness<M: DifferentiableModel + ?Sized>(
    attr: &mut IgAttribution,
    model: &M,
    x: &[f64],
) -> Result<f64, IgError> {
    check_inputs(model, x, &attr.baseline)?;
    let gap = completeness_gap(&attr.per_feature, model, x, &attr.baseline)?;
    attr.completeness_gap = gap;
    Ok(gap)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SensitivityReport {
    /// Both methods gave the differing feature a nonzero attribution.
    Holds {
        feature: usize,
        trapezoid: f64,
        vandermonde: f64,
    },
    Violated {
        feature: usize,
        trapezoid: f64,
        vandermonde: f64,
    },
    /// The inputs do not differ in exactly one feature, or the output does
    /// not change.
    NotApplicable { reason: String },
}

impl SensitivityReport {
    pub fn holds(&self) -> bool {
        matches!(self, SensitivityReport::Holds { .. })
    }
}

/// Checks that a single feature which changes the output gets a nonzero
/// attribution from both methods (default step count and degree).
pub fn check_sensitivity<M: DifferentiableModel + ?Sized>(
    model: &M,
    x: &[f64],
    baseline: &[f64],
) -> Result<SensitivityReport, IgError> {
    check_inputs(model, x, baseline)?;
    let differing: Vec<usize> = (0..x.len()).filter(|&i| x[i] != baseline[i]).collect();
    if differing.len() != 1 {
        return Ok(SensitivityReport::NotApplicable {
            reason: format!("inputs differ in {} features, expected 1", differing.len()),
        });
    }
    let delta = model.evaluate(x)? - model.evaluate(baseline)?;
    if delta == 0.0 {
        return Ok(SensitivityReport::NotApplicable {
            reason: "model output is unchanged".into(),
        });
    }
    let feature = differing[0];
    let config = IgConfig::default();
    let trapezoid = ig_trapezoid(model, x, baseline, config.steps)?.per_feature[feature];
    let vandermonde = ig_vandermonde(model, x, baseline, config.poly_degree)?.per_feature[feature];
    let tol = 1e-12 * delta.abs();
    Ok(if trapezoid.abs() > tol && vandermonde.abs() > tol {
        SensitivityReport::Holds {
            feature,
            trapezoid,
            vandermonde,
        }
    } else {
        SensitivityReport::Violated {
            feature,
            trapezoid,
            vandermonde,
        }
    })
}
