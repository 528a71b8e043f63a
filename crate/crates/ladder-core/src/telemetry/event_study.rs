//! Stacked event studies around major resets with firm and calendar-month
//! fixed effects (two-way within transformation) and firm-clustered s.e.

use super::ols::{ols, CovKind, OlsError, OlsFit};
use super::panel::Panel;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EventStudyError {
    #[error("panel needs at least two firms and one event in range")]
    TooLittleVariation,
    #[error(transparent)]
    Ols(#[from] OlsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    NSignals,
    DispersionX,
    DispersionTime,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventStudyFit {
    pub outcome: Outcome,
    pub window: i64,
    /// Event-time lags with estimates; lag -1 is the omitted period (its rows
    /// form part of the baseline together with out-of-window months).
    pub lags: Vec<i64>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub dropped: Vec<String>,
    pub n: usize,
    #[serde(skip)]
    pub fit: Option<OlsFit>,
}

impl EventStudyFit {
    pub fn coef_at(&self, lag: i64) -> Option<(f64, f64)> {
        let i = self.lags.iter().position(|&l| l == lag)?;
        (!self.coef[i].is_nan()).then(|| (self.coef[i], self.se[i]))
    }

    /// Joint Wald test that the coefficients at the given lags are zero.
    pub fn joint_wald(&self, lags: &[i64]) -> Option<(f64, usize, f64)> {
        let names: Vec<String> = lags.iter().map(|l| format!("tau_{l}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        self.fit.as_ref()?.wald_joint(&refs)
    }
}

/// Alternating-projection demeaning by firm and calendar month, run to
/// convergence so the within fit matches the full dummy regression.
fn two_way_demean(cols: &mut [Vec<f64>], firms: &[usize], months: &[i64]) {
    let firm_ids: Vec<usize> = {
        let mut v = firms.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let month_ids: Vec<i64> = {
        let mut v = months.to_vec();
        v.sort_unstable();
        v.dedup();
        v
    };
    let fidx: std::collections::HashMap<usize, usize> =
        firm_ids.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let midx: std::collections::HashMap<i64, usize> =
        month_ids.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    for col in cols.iter_mut() {
        for _ in 0..200 {
            let mut delta: f64 = 0.0;
            // demean by firm
            let mut sums = vec![0.0; firm_ids.len()];
            let mut cnts = vec![0usize; firm_ids.len()];
            for (i, &f) in firms.iter().enumerate() {
                sums[fidx[&f]] += col[i];
                cnts[fidx[&f]] += 1;
            }
            for (i, &f) in firms.iter().enumerate() {
                let m = sums[fidx[&f]] / cnts[fidx[&f]] as f64;
                col[i] -= m;
                delta = delta.max(m.abs());
            }
            // demean by month
            let mut sums = vec![0.0; month_ids.len()];
            let mut cnts = vec![0usize; month_ids.len()];
            for (i, &m) in months.iter().enumerate() {
                sums[midx[&m]] += col[i];
                cnts[midx[&m]] += 1;
            }
            for (i, &m) in months.iter().enumerate() {
                let mu = sums[midx[&m]] / cnts[midx[&m]] as f64;
                col[i] -= mu;
                delta = delta.max(mu.abs());
            }
            if delta < 1e-12 {
                break;
            }
        }
    }
}

/// Event-study regression of the chosen outcome on event-time dummies for
/// lags in [-window, window] excluding -1, absorbing firm and month fixed
/// effects; s.e. clustered by firm. Rows at lag -1 are excluded so the
/// baseline is the out-of-window cadence.
pub fn event_study(
    panel: &Panel,
    outcome: Outcome,
    window: i64,
) -> Result<EventStudyFit, EventStudyError> {
    let mut ys = Vec::new();
    let mut firms = Vec::new();
    let mut months = Vec::new();
    let mut taus = Vec::new();
    for r in &panel.rows {
        if r.event_time == Some(-1) {
            continue;
        }
        let y = match outcome {
            Outcome::NSignals => Some(r.n_signals as f64),
            Outcome::DispersionX => r.dispersion_x,
            Outcome::DispersionTime => r.dispersion_time,
        };
        let Some(y) = y else { continue };
        ys.push(y);
        firms.push(r.firm_id);
        months.push(r.month);
        taus.push(r.event_time.filter(|t| t.abs() <= window));
    }
    let n = ys.len();
    let n_firms = {
        let mut f = firms.clone();
        f.sort_unstable();
        f.dedup();
        f.len()
    };
    if n_firms < 2 || taus.iter().all(|t| t.is_none()) {
        return Err(EventStudyError::TooLittleVariation);
    }
    let lags: Vec<i64> = (-window..=window).filter(|&l| l != -1).collect();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(lags.len() + 1);
    cols.push(ys);
    for &l in &lags {
        cols.push(taus.iter().map(|t| (*t == Some(l)) as u8 as f64).collect());
    }
    two_way_demean(&mut cols, &firms, &months);

    let y = DVector::from_vec(cols[0].clone());
    let x = DMatrix::from_fn(n, lags.len(), |i, j| cols[j + 1][i]);
    let names: Vec<String> = lags.iter().map(|l| format!("tau_{l}")).collect();
    let n_months = {
        let mut m = months.clone();
        m.sort_unstable();
        m.dedup();
        m.len()
    };
    let fit = ols(
        &y,
        &x,
        &names,
        CovKind::Cluster { labels: &firms, k_absorbed: n_firms + n_months - 1 },
    )?;
    Ok(EventStudyFit {
        outcome,
        window,
        lags,
        coef: fit.coef.clone(),
        se: fit.se.clone(),
        dropped: fit.dropped.clone(),
        n,
        fit: Some(fit),
    })
}
