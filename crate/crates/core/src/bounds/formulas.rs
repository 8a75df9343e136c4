//! Closed-form error bounds for the partial-ℓ1, restricted LS and CS-residual
//! estimates.

use std::f64::consts::SQRT_2;

use super::constants::MatrixConstants;
use crate::error::{Error, Result};

/// `(√2 − 1)/2`, the restricted isometry level behind the `8.79ε` bound.
pub const HALF_RIP_LEVEL: f64 = (SQRT_2 - 1.0) / 2.0;

/// Rounded constant `C₁((√2−1)/2) ≈ 8.7895` used in the theorem statements.
pub const C1_HALF: f64 = 8.79;

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0 && delta < SQRT_2 - 1.0) {
        return Err(Error::Domain(format!("delta = {delta} outside [0, sqrt(2) - 1)")));
    }
    Ok(())
}

/// `C₁(δ) = 4√(1+δ) / (1 − (√2+1)δ)`
pub fn c1(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(4.0 * (1.0 + delta).sqrt() / (1.0 - (SQRT_2 + 1.0) * delta))
}

/// `C₂(δ) = 2(1 + (√2−1)δ) / (1 − (√2+1)δ)`
pub fn c2(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(2.0 * (1.0 + (SQRT_2 - 1.0) * delta) / (1.0 - (SQRT_2 + 1.0) * delta))
}

/// `C′(|T|,|Δ|) = C₁(δ_{2|Δ|}) + √2·C₂(δ_{2|Δ|})·√(|T|/|Δ|)`
pub fn cprime(t_size: usize, delta_size: usize, delta_2d: f64) -> Result<f64> {
    if delta_size == 0 {
        return Err(Error::Domain("C' needs |Delta| >= 1".into()));
    }
    Ok(c1(delta_2d)? + SQRT_2 * c2(delta_2d)? * (t_size as f64 / delta_size as f64).sqrt())
}

/// `C″(|T|,|Δ|) = 2·C₂(δ_{2|Δ|})·√|T|`
pub fn cdprime(t_size: usize, _delta_size: usize, delta_2d: f64) -> Result<f64> {
    Ok(2.0 * c2(delta_2d)? * (t_size as f64).sqrt())
}

/// `C₁(δ_{|N|+|Δ|+|Δe|})·ε` for the partial-ℓ1 estimate.
pub fn modcs_error_bound(n_size: usize, delta_size: usize, delta_e_size: usize, eps: f64, constants: &MatrixConstants) -> Result<f64> {
    let delta = constants.delta(n_size + delta_size + delta_e_size)?;
    Ok(c1(delta)? * eps)
}

/// `√2·ε + 2·θ_{|T|,|Δ|}·‖x_Δ‖` for LS on the set `T`.
pub fn ls_step_error_bound(t_size: usize, delta_size: usize, x_delta_norm: f64, eps: f64, constants: &MatrixConstants) -> Result<f64> {
    let dt = constants.delta(t_size)?;
    if !(dt < 0.5) {
        return Err(Error::Domain(format!("LS bound needs delta_{t_size} < 1/2, got {dt}")));
    }
    let theta = constants.theta(t_size, delta_size)?;
    Ok(SQRT_2 * eps + 2.0 * theta * x_delta_norm)
}

/// `C′·ε + θ_{|T|,|Δ|}·C″·‖x_Δ‖` for the CS-residual estimate, `|Δ| ≥ 1`.
pub fn csres_error_bound(t_size: usize, delta_size: usize, x_delta_norm: f64, eps: f64, constants: &MatrixConstants) -> Result<f64> {
    let d2 = constants.delta(2 * delta_size)?;
    if !(d2 < HALF_RIP_LEVEL) {
        return Err(Error::Domain(format!("CS-residual bound needs delta_{} < (sqrt(2) - 1)/2, got {d2}", 2 * delta_size)));
    }
    let dt = constants.delta(t_size)?;
    if !(dt < 0.5) {
        return Err(Error::Domain(format!("CS-residual bound needs delta_{t_size} < 1/2, got {dt}")));
    }
    let theta = constants.theta(t_size, delta_size)?;
    Ok(cprime(t_size, delta_size, d2)? * eps + theta * cdprime(t_size, delta_size, d2)? * x_delta_norm)
}

/// `max_{1 ≤ k ≤ max_delta} [C′(|T|,k)·ε + θ_{|T|,k}·C″(|T|,k)·x_delta_norm]`.
pub fn csres_error_bound_max(t_size: usize, max_delta: usize, x_delta_norm: f64, eps: f64, constants: &MatrixConstants) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for k in 1..=max_delta {
        best = best.max(csres_error_bound(t_size, k, x_delta_norm, eps, constants)?);
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::Domain("max over |Delta| needs max_delta >= 1".into()));
    }
    Ok(best)
}
