//! Singular-vector accuracy metric.

use nalgebra::{DMatrix, DVector};

use crate::error::{KsvdError, Result};

/// `η = (1/r)·Σ λ_i(1 − |u_iᵀũ_i|/‖ũ_i‖) + (1/r)·Σ λ_i(1 − |v_iᵀṽ_i|/‖ṽ_i‖)`,
/// with `r = λ.len()` and the reference spectrum used as raw weights.
pub fn eta(
    u: &DMatrix<f64>,
    lambdas: &DVector<f64>,
    v: &DMatrix<f64>,
    u_tilde: &DMatrix<f64>,
    v_tilde: &DMatrix<f64>,
) -> Result<f64> {
    weighted(u, lambdas, v, u_tilde, v_tilde, 1.0)
}

/// [`eta`] with weights `λ_i/Σλ`, comparable across matrices.
pub fn eta_normalized(
    u: &DMatrix<f64>,
    lambdas: &DVector<f64>,
    v: &DMatrix<f64>,
    u_tilde: &DMatrix<f64>,
    v_tilde: &DMatrix<f64>,
) -> Result<f64> {
    let total = lambdas.sum();
    if !(total > 0.0) {
        return Err(KsvdError::InvalidParameter("reference spectrum sums to zero".into()));
    }
    weighted(u, lambdas, v, u_tilde, v_tilde, 1.0 / total)
}

fn weighted(
    u: &DMatrix<f64>,
    lambdas: &DVector<f64>,
    v: &DMatrix<f64>,
    u_tilde: &DMatrix<f64>,
    v_tilde: &DMatrix<f64>,
    weight_scale: f64,
) -> Result<f64> {
    let r = lambdas.len();
    if r == 0 {
        return Err(KsvdError::InvalidParameter("empty reference spectrum".into()));
    }
    for (name, reference, approx) in [("left", u, u_tilde), ("right", v, v_tilde)] {
        if reference.ncols() < r || approx.ncols() < r || reference.nrows() != approx.nrows() {
            return Err(KsvdError::DimensionMismatch(format!(
                "{name} factors: reference {}x{}, approximation {}x{}, rank {r}",
                reference.nrows(),
                reference.ncols(),
                approx.nrows(),
                approx.ncols()
            )));
        }
    }
    let mut total = 0.0;
    for (reference, approx) in [(u, u_tilde), (v, v_tilde)] {
        for i in 0..r {
            let norm = approx.column(i).norm();
            if !(norm > 0.0) {
                return Err(KsvdError::InvalidParameter(format!("approximate singular vector {i} has zero norm")));
            }
            let cos = (reference.column(i).dot(&approx.column(i)) / norm).abs();
            total += lambdas[i] * weight_scale * (1.0 - cos);
        }
    }
    Ok(total / r as f64)
}
