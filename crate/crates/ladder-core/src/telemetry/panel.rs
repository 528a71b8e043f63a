//! Firm-month panel construction from simulated event streams.

use crate::sim::{EventKind, SimPath};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("no simulated firms supplied")]
    Empty,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FirmMeta {
    pub firm_id: usize,
    /// Coupon c_d proxy.
    pub leverage: f64,
    /// 1 - phi_max / phi_ref, clipped to [0, 1].
    pub rev_proxy: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelRow {
    pub firm_id: usize,
    pub month: i64,
    /// Months to the nearest pivot-class reset; None outside `max_lag`.
    pub event_time: Option<i64>,
    pub n_signals: u64,
    /// Population variance of standardized disclosed metrics; 0 with one
    /// signal, missing with none.
    pub dispersion_x: Option<f64>,
    /// Intra-month IQR of publication timestamps, in hours.
    pub dispersion_time: Option<f64>,
    pub n_patches: u64,
    pub major_reset_flag: bool,
    pub leverage: f64,
    pub rev_proxy: f64,
    /// Pre-event cadence drop of the event this row is assigned to.
    pub silence_depth: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Panel {
    pub rows: Vec<PanelRow>,
}

#[derive(Debug, Clone)]
pub struct PanelOptions {
    pub month_length: f64,
    pub months: usize,
    pub max_lag: i64,
    /// Lookback K of the silence-depth formula.
    pub silence_k: i64,
    pub hours_per_month: f64,
}

impl Default for PanelOptions {
    fn default() -> Self {
        PanelOptions {
            month_length: 1.0,
            months: 120,
            max_lag: 6,
            silence_k: 3,
            hours_per_month: 730.0,
        }
    }
}

fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Linear-interpolation quartile IQR.
fn iqr(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| {
        let h = p * (xs.len() - 1) as f64;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        xs[lo] + (h - h.floor()) * (xs[hi] - xs[lo])
    };
    q(0.75) - q(0.25)
}

/// Bin each firm's event stream into calendar months and compute the
/// telemetry outcomes. Signal values are standardized against the pooled
/// mean and s.d. across all firms and months.
pub fn build_panel(firms: &[(FirmMeta, SimPath)], opts: &PanelOptions) -> Result<Panel, PanelError> {
    if firms.is_empty() {
        return Err(PanelError::Empty);
    }
    // pooled standardization of disclosed metrics
    let mut pool = Vec::new();
    for (_, path) in firms {
        for e in &path.events {
            if let EventKind::Publication { y } = e.kind {
                pool.push(y);
            }
        }
    }
    let (pool_mean, pool_sd) = if pool.is_empty() {
        (0.0, 1.0)
    } else {
        let m = pool.iter().sum::<f64>() / pool.len() as f64;
        let v = pool.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / pool.len() as f64;
        (m, if v > 0.0 { v.sqrt() } else { 1.0 })
    };

    let mut rows = Vec::new();
    for (meta, path) in firms {
        let months = opts.months;
        let mut signals: Vec<Vec<f64>> = vec![Vec::new(); months];
        let mut times: Vec<Vec<f64>> = vec![Vec::new(); months];
        let mut patches = vec![0u64; months];
        let mut pivots = vec![0u64; months];
        for e in &path.events {
            let mth = (e.t / opts.month_length).floor() as usize;
            if mth >= months {
                continue;
            }
            match e.kind {
                EventKind::Publication { y } => {
                    signals[mth].push((y - pool_mean) / pool_sd);
                    times[mth].push(
                        (e.t - mth as f64 * opts.month_length) / opts.month_length
                            * opts.hours_per_month,
                    );
                }
                EventKind::Patch => patches[mth] += 1,
                EventKind::Pivot => pivots[mth] += 1,
                _ => {}
            }
        }
        let event_months: Vec<i64> =
            (0..months).filter(|&m| pivots[m] > 0).map(|m| m as i64).collect();

        // baseline cadence away from any pre-event window
        let is_near_event = |m: i64| {
            event_months
                .iter()
                .any(|&e| m >= e - opts.silence_k && m <= e)
        };
        let base_months: Vec<usize> = (0..months)
            .filter(|&m| !is_near_event(m as i64))
            .collect();
        let lambda_bar_hat = if base_months.is_empty() {
            signals.iter().map(|s| s.len() as f64).sum::<f64>() / months as f64
        } else {
            base_months.iter().map(|&m| signals[m].len() as f64).sum::<f64>()
                / base_months.len() as f64
        };
        let depth_of = |e: i64| -> Option<f64> {
            if lambda_bar_hat <= 0.0 {
                return None;
            }
            let mut acc = 0.0;
            for tau in -opts.silence_k..0 {
                let m = e + tau;
                let n = if (0..months as i64).contains(&m) {
                    signals[m as usize].len() as f64
                } else {
                    lambda_bar_hat
                };
                acc += (lambda_bar_hat - n) / lambda_bar_hat;
            }
            Some(acc / opts.silence_k as f64)
        };

        for m in 0..months {
            let nearest = event_months
                .iter()
                .min_by_key(|&&e| ((m as i64 - e).abs(), e))
                .copied();
            let event_time = nearest.and_then(|e| {
                let tau = m as i64 - e;
                (tau.abs() <= opts.max_lag).then_some(tau)
            });
            let silence_depth = match (nearest, event_time) {
                (Some(e), Some(_)) => depth_of(e),
                _ => None,
            };
            let n = signals[m].len();
            rows.push(PanelRow {
                firm_id: meta.firm_id,
                month: m as i64,
                event_time,
                n_signals: n as u64,
                dispersion_x: match n {
                    0 => None,
                    1 => Some(0.0),
                    _ => Some(population_variance(&signals[m])),
                },
                dispersion_time: match n {
                    0 => None,
                    1 => Some(0.0),
                    _ => Some(iqr(&mut times[m])),
                },
                n_patches: patches[m],
                major_reset_flag: pivots[m] > 0,
                leverage: meta.leverage,
                rev_proxy: meta.rev_proxy,
                silence_depth,
            });
        }
    }
    Ok(Panel { rows })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl Panel {
    /// CSV with the PanelRow fields in declaration order; missing values as
    /// empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "firm_id,month,event_time,n_signals,dispersion_x,dispersion_time,n_patches,major_reset_flag,leverage,rev_proxy,silence_depth\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.firm_id,
                r.month,
                r.event_time.map(|t| t.to_string()).unwrap_or_default(),
                r.n_signals,
                fmt_opt(r.dispersion_x),
                fmt_opt(r.dispersion_time),
                r.n_patches,
                r.major_reset_flag as u8,
                r.leverage,
                r.rev_proxy,
                fmt_opt(r.silence_depth),
            ));
        }
        out
    }
}
