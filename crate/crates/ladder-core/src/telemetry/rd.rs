//! Regression discontinuity in adoption uptake at the belief cutoff, with a
//! silence-depth interaction on the jump.

use super::ols::{ols, CovKind, OlsError, OlsFit};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RdError {
    #[error("no observations on the {0} side of the cutoff within bandwidth")]
    OneSidedData(&'static str),
    #[error(transparent)]
    Ols(#[from] OlsError),
}

/// One firm-month observation near the cutoff: running variable m - alpha,
/// realized uptake, and the silence depth of the firm's latest event.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RdRow {
    pub running: f64,
    pub uptake: f64,
    pub silence_depth: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RdFit {
    pub bandwidth: f64,
    pub n_left: usize,
    pub n_right: usize,
    /// Jump at the cutoff (coefficient on the above-cutoff indicator).
    pub jump: f64,
    pub jump_se: f64,
    /// Interaction of the jump with silence depth.
    pub jump_x_depth: Option<(f64, f64)>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub names: Vec<String>,
    #[serde(skip)]
    pub fit: Option<OlsFit>,
}

/// Local-linear RD with a uniform kernel on |running| <= h:
/// uptake ~ 1 + x + D + D*x + D*silence_depth, HC1 standard errors.
pub fn adoption_rd(rows: &[RdRow], h: f64) -> Result<RdFit, RdError> {
    let sel: Vec<&RdRow> = rows.iter().filter(|r| r.running.abs() <= h).collect();
    let n_left = sel.iter().filter(|r| r.running < 0.0).count();
    let n_right = sel.len() - n_left;
    if n_left == 0 {
        return Err(RdError::OneSidedData("left"));
    }
    if n_right == 0 {
        return Err(RdError::OneSidedData("right"));
    }
    let n = sel.len();
    let y = DVector::from_fn(n, |i, _| sel[i].uptake);
    let x = DMatrix::from_fn(n, 5, |i, j| {
        let r = sel[i];
        let d = (r.running >= 0.0) as u8 as f64;
        match j {
            0 => 1.0,
            1 => r.running,
            2 => d,
            3 => d * r.running,
            _ => d * r.silence_depth,
        }
    });
    let names: Vec<String> = ["const", "x", "jump", "jump_x", "jump_depth"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let fit = ols(&y, &x, &names, CovKind::Hc1)?;
    let (jump, jump_se) = fit.get("jump").unwrap_or((f64::NAN, f64::NAN));
    Ok(RdFit {
        bandwidth: h,
        n_left,
        n_right,
        jump,
        jump_se,
        jump_x_depth: fit.get("jump_depth"),
        coef: fit.coef.clone(),
        se: fit.se.clone(),
        names: fit.names.clone(),
        fit: Some(fit),
    })
}
