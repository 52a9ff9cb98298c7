//! Grid inversion of observed exponents into behavioral parameters `(p, λ)`.
//!
//! Observed `α, β, θ` are modeled as independent Gaussians centred on the
//! model exponents of a grid cell with a shared width `σ`. The maximum
//! likelihood cell is therefore the one nearest in Euclidean distance, and
//! `σ` only rescales the likelihood. `γ` does not enter the objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaling::{ExponentSet, ResponseSurface};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedExponents {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

impl ObservedExponents {
    pub fn new(alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        if ![alpha, beta, theta].iter().all(|v| v.is_finite()) {
            return Err(Error::param("observed exponents must be finite"));
        }
        Ok(ObservedExponents { alpha, beta, theta })
    }

    pub fn from_exponent_set(ex: &ExponentSet) -> Self {
        ObservedExponents {
            alpha: ex.alpha.exponent,
            beta: ex.beta.exponent,
            theta: ex.theta.exponent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferredParams {
    pub p_hat: f64,
    pub lambda_hat: f64,
    pub distance: f64,
    pub cell_index: (usize, usize),
    /// Model `γ` at the chosen cell; diagnostic only.
    pub gamma_model: f64,
}

fn squared_distance(obs: &ObservedExponents, cell: &ExponentSet) -> f64 {
    let da = obs.alpha - cell.alpha.exponent;
    let db = obs.beta - cell.beta.exponent;
    let dt = obs.theta - cell.theta.exponent;
    da * da + db * db + dt * dt
}

pub fn distance(obs: &ObservedExponents, cell: &ExponentSet) -> f64 {
    squared_distance(obs, cell).sqrt()
}

/// Log of the unnormalized likelihood, additive constant dropped.
pub fn log_likelihood(obs: &ObservedExponents, cell: &ExponentSet, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma must be positive, got {sigma}")));
    }
    Ok(-squared_distance(obs, cell) / (sigma * sigma))
}

fn usable_cells(
    surface: &ResponseSurface,
) -> Result<impl Iterator<Item = ((usize, usize), f64, f64, &ExponentSet)>> {
    surface.validate().map_err(|e| Error::Inference(e.to_string()))?;
    let failed = surface.failed_cells().count();
    if failed == surface.cells.len() {
        return Err(Error::Inference("surface has no usable cells".to_owned()));
    }
    if failed > 0 {
        log::warn!("skipping {failed} failed surface cells");
    }
    Ok(surface.cells.iter().filter_map(|c| {
        c.exponents
            .as_ref()
            .map(|ex| ((c.p_index, c.lambda_index), c.p, c.lambda, ex))
    }))
}

/// Nearest grid cell in `(α, β, θ)`. Ties go to the smaller `p`, then the
/// smaller `λ`.
pub fn infer(obs: &ObservedExponents, surface: &ResponseSurface) -> Result<InferredParams> {
    let mut best: Option<InferredParams> = None;
    // cells are p-major, so a strict comparison keeps the earliest tie
    for (idx, p, lambda, ex) in usable_cells(surface)? {
        let d = distance(obs, ex);
        if best.map_or(true, |b| d < b.distance) {
            best = Some(InferredParams {
                p_hat: p,
                lambda_hat: lambda,
                distance: d,
                cell_index: idx,
                gamma_model: ex.gamma.exponent,
            });
        }
    }
    best.ok_or_else(|| Error::Inference("surface has no usable cells".to_owned()))
}

/// Cell index maximizing [`log_likelihood`], with the same tie rule as
/// [`infer`].
pub fn argmax_likelihood(
    obs: &ObservedExponents,
    surface: &ResponseSurface,
    sigma: f64,
) -> Result<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for (idx, _, _, ex) in usable_cells(surface)? {
        let ll = log_likelihood(obs, ex, sigma)?;
        if best.map_or(true, |(_, b)| ll > b) {
            best = Some((idx, ll));
        }
    }
    best.map(|(idx, _)| idx)
        .ok_or_else(|| Error::Inference("surface has no usable cells".to_owned()))
}
