//! Bounded power-law step lengths and their discretization onto the
//! integer lattice.
//!
//! Step lengths follow the density `P(l) ∝ l^(-λ)` truncated to
//! `[l_min, l_max]`. The truncation keeps `λ = 1` normalizable. A jump is
//! drawn as a continuous (length, angle) pair and each component is rounded
//! half away from zero, so with `l_min >= 1` a jump never stays in place.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LAMBDA_MIN: f64 = 1.0;
pub const LAMBDA_MAX: f64 = 3.0;
pub const DEFAULT_L_MIN: f64 = 1.0;
pub const DEFAULT_L_MAX: f64 = 1000.0;

// Below this distance from 1 the λ = 1 (log-uniform) branch is used.
const LAMBDA_ONE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLawParams {
    pub lambda: f64,
    pub l_min: f64,
    pub l_max: f64,
}

impl StepLawParams {
    pub fn new(lambda: f64, l_min: f64, l_max: f64) -> Result<Self> {
        let params = StepLawParams {
            lambda,
            l_min,
            l_max,
        };
        params.validate()?;
        Ok(params)
    }

    /// Default support `[1, 1000]`.
    pub fn with_lambda(lambda: f64) -> Result<Self> {
        Self::new(lambda, DEFAULT_L_MIN, DEFAULT_L_MAX)
    }

    pub fn validate(&self) -> Result<()> {
        if !(LAMBDA_MIN..=LAMBDA_MAX).contains(&self.lambda) {
            return Err(Error::param(format!(
                "lambda must lie in [{LAMBDA_MIN}, {LAMBDA_MAX}], got {}",
                self.lambda
            )));
        }
        if !(self.l_min.is_finite() && self.l_max.is_finite()) {
            return Err(Error::param("step length bounds must be finite"));
        }
        if !(self.l_min > 0.0 && self.l_min < self.l_max) {
            return Err(Error::param(format!(
                "need 0 < l_min < l_max, got l_min={} l_max={}",
                self.l_min, self.l_max
            )));
        }
        Ok(())
    }

    fn is_log_uniform(&self) -> bool {
        (self.lambda - 1.0).abs() < LAMBDA_ONE_EPS
    }
}

/// Integer jump on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Displacement {
    pub dx: i64,
    pub dy: i64,
}

/// The `u`-quantile of the bounded power law.
pub fn step_quantile(u: f64, params: &StepLawParams) -> Result<f64> {
    params.validate()?;
    if !(0.0..1.0).contains(&u) {
        return Err(Error::param(format!("quantile level must lie in [0, 1), got {u}")));
    }
    Ok(quantile_unchecked(u, params))
}

fn quantile_unchecked(u: f64, params: &StepLawParams) -> f64 {
    let StepLawParams {
        lambda,
        l_min,
        l_max,
    } = *params;
    let l = if params.is_log_uniform() {
        l_min * (l_max / l_min).powf(u)
    } else {
        let e = 1.0 - lambda;
        let lo = l_min.powf(e);
        let hi = l_max.powf(e);
        (lo - u * (lo - hi)).powf(1.0 / e)
    };
    l.clamp(l_min, l_max)
}

/// Exact CDF of the bounded power law; lengths outside the support clamp to
/// 0 or 1.
pub fn step_cdf(l: f64, params: &StepLawParams) -> Result<f64> {
    params.validate()?;
    let StepLawParams {
        lambda,
        l_min,
        l_max,
    } = *params;
    if l <= l_min {
        return Ok(0.0);
    }
    if l >= l_max {
        return Ok(1.0);
    }
    let f = if params.is_log_uniform() {
        (l / l_min).ln() / (l_max / l_min).ln()
    } else {
        let e = 1.0 - lambda;
        let lo = l_min.powf(e);
        (lo - l.powf(e)) / (lo - l_max.powf(e))
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Rounds a polar jump onto the lattice, half away from zero.
pub fn displacement_from_polar(length: f64, angle: f64) -> Displacement {
    Displacement {
        dx: (length * angle.cos()).round() as i64,
        dy: (length * angle.sin()).round() as i64,
    }
}

/// Draws a length by inverse transform and an angle uniform on `[0, 2π)`.
///
/// Parameters are assumed valid; use [`StepLawParams::new`] to build them.
pub fn sample_polar<R: Rng + ?Sized>(rng: &mut R, params: &StepLawParams) -> (f64, f64) {
    let u: f64 = rng.gen();
    let angle = TAU * rng.gen::<f64>();
    (quantile_unchecked(u, params), angle)
}

pub fn sample_displacement<R: Rng + ?Sized>(rng: &mut R, params: &StepLawParams) -> Displacement {
    let (l, phi) = sample_polar(rng, params);
    displacement_from_polar(l, phi)
}
