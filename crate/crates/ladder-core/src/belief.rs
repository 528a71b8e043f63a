//! Public posterior (m, v) as a piecewise-deterministic process:
//! exponential drift toward m_bar between publications, Gaussian
//! precision-weighted update at each publication.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeliefError {
    #[error("posterior variance is zero; update rejected")]
    DegeneratePosterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub m: f64,
    pub v: f64,
}

/// Exact drift step over dt:
///   m' = m_bar - (m_bar - m) e^{-kappa dt}
///   v' = v_ss + (v - v_ss) e^{-2 kappa dt},  v_ss = sigma^2 / (2 kappa)
/// (vdot = -2 kappa v + sigma^2, the Kalman-Bucy prediction variance for an
/// OU prior). Exact stepping makes composition over subintervals exact.
pub fn drift_step(state: BeliefState, dt: f64, kappa: f64, m_bar: f64, sigma: f64) -> BeliefState {
    debug_assert!(dt >= 0.0);
    if dt == 0.0 {
        return state;
    }
    let m = m_bar - (m_bar - state.m) * (-kappa * dt).exp();
    let v_ss = sigma * sigma / (2.0 * kappa);
    let v = v_ss + (state.v - v_ss) * (-2.0 * kappa * dt).exp();
    BeliefState { m, v }
}

/// Gaussian update on observing y = z + eps, eps ~ N(0, sigma_eps2):
///   m' = (m/v + y/sigma_eps2) / (1/v + 1/sigma_eps2),  v' = 1/(1/v + 1/sigma_eps2).
pub fn publication_update(
    state: BeliefState,
    y: f64,
    sigma_eps2: f64,
) -> Result<BeliefState, BeliefError> {
    if state.v <= 0.0 {
        return Err(BeliefError::DegeneratePosterior);
    }
    let prec = 1.0 / state.v + 1.0 / sigma_eps2;
    let v = 1.0 / prec;
    let m = (state.m / state.v + y / sigma_eps2) * v;
    Ok(BeliefState { m, v })
}

/// Grid quadratic variation sum of squared increments of m.
pub fn quadratic_variation(path: &[(f64, f64)]) -> f64 {
    path.windows(2).map(|w| (w[1].1 - w[0].1).powi(2)).sum()
}
