//! Glue from simulated paths to the estimator battery: synthesizes a
//! heterogeneous firm cross-section, builds the panel, and runs S1-S5.

use super::event_study::{event_study, EventStudyError, EventStudyFit, Outcome};
use super::hazard::{cascade_hazard, patch_hazard, HazardError, HazardFit, PatchHazardFit, Spell};
use super::mixture::{plateau_test, MixtureError, PlateauReport};
use super::panel::{build_panel, FirmMeta, Panel, PanelError, PanelOptions};
use super::rd::{adoption_rd, RdError, RdFit, RdRow};
use crate::model::{derive_seed, ScenarioConfig, TelemetryConfig};
use crate::sim::{simulate_policy, EventKind, Policy, SimPath};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("telemetry section missing from the scenario config")]
    MissingConfig,
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    EventStudy(#[from] EventStudyError),
    #[error(transparent)]
    Hazard(#[from] HazardError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    Rd(#[from] RdError),
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Simulate one firm cross-section: coupons and pivot takeover costs spread
/// linearly across firms, one path per firm, seeds derived from `rep_seed`.
pub fn synth_firms(
    config: &ScenarioConfig,
    policy: &Policy,
    tel: &TelemetryConfig,
    rep_seed: u64,
) -> Vec<(FirmMeta, SimPath)> {
    let leverages = linspace(tel.leverage_min, tel.leverage_max, tel.n_firms);
    // shuffle the phi2 assignment so rev_proxy is not an affine function of
    // leverage across firms (the hazard design would be collinear otherwise)
    let mut phi2s = linspace(tel.phi2_min, tel.phi2_max, tel.n_firms);
    {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xF1B);
        phi2s.shuffle(&mut rng);
    }
    let mut firm_cfg = config.clone();
    firm_cfg.sim.horizon = tel.months as f64 * tel.month_length;
    (0..tel.n_firms)
        .map(|i| {
            let meta = FirmMeta {
                firm_id: i,
                leverage: leverages[i],
                rev_proxy: (1.0 - phi2s[i] / tel.phi_ref).clamp(0.0, 1.0),
            };
            let path = simulate_policy(&firm_cfg, policy, derive_seed(rep_seed, i as u64));
            (meta, path)
        })
        .collect()
}

/// Inter-patch duration spells per firm with a censored tail, carrying the
/// debt-insensitivity covariates (leverage, rev_proxy, interaction).
pub fn patch_spells(firms: &[(FirmMeta, SimPath)], horizon: f64) -> Vec<Spell> {
    let mut spells = Vec::new();
    for (meta, path) in firms {
        let covs = vec![meta.leverage, meta.rev_proxy, meta.leverage * meta.rev_proxy];
        let mut last = 0.0;
        for e in &path.events {
            if matches!(e.kind, EventKind::Patch) {
                spells.push(Spell { exposure: e.t - last, event: true, covs: covs.clone() });
                last = e.t;
            }
        }
        if horizon > last {
            spells.push(Spell { exposure: horizon - last, event: false, covs });
        }
    }
    spells
}

/// Inter-patch spells aligned around pivots: bins by distance (in months) of
/// the spell start to the nearest pivot, post flag by its sign.
pub fn cascade_spells(
    firms: &[(FirmMeta, SimPath)],
    month_length: f64,
    horizon: f64,
) -> (Vec<f64>, Vec<bool>, Vec<usize>, Vec<bool>) {
    let mut exposures = Vec::new();
    let mut events = Vec::new();
    let mut bins = Vec::new();
    let mut post = Vec::new();
    for (_, path) in firms {
        let pivots: Vec<f64> = path
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Pivot))
            .map(|e| e.t)
            .collect();
        let mut push = |start: f64, dur: f64, ev: bool| {
            let delta = pivots
                .iter()
                .map(|&p| (start - p) / month_length)
                .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
            let (bin, is_post) = match delta {
                Some(d) => ((d.abs().floor() as usize).min(3), d >= 0.0),
                None => (3, false),
            };
            exposures.push(dur);
            events.push(ev);
            bins.push(bin);
            post.push(is_post);
        };
        let mut last = 0.0;
        for e in &path.events {
            if matches!(e.kind, EventKind::Patch) {
                push(last, e.t - last, true);
                last = e.t;
            }
        }
        if horizon > last {
            push(last, horizon - last, false);
        }
    }
    (exposures, events, bins, post)
}

/// Post-reset metric sample for the plateau test: the first disclosed signal
/// within `lookahead` after each patch or pivot.
pub fn post_event_metrics(firms: &[(FirmMeta, SimPath)], lookahead: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for (_, path) in firms {
        for (i, e) in path.events.iter().enumerate() {
            if !matches!(e.kind, EventKind::Patch | EventKind::Pivot) {
                continue;
            }
            for later in &path.events[i + 1..] {
                if later.t > e.t + lookahead {
                    break;
                }
                if let EventKind::Publication { y } = later.kind {
                    out.push(y);
                    break;
                }
            }
        }
    }
    out
}

/// RD rows at publication times: running variable m - alpha against realized
/// uptake, tagged with each firm's average silence depth.
pub fn rd_rows(firms: &[(FirmMeta, SimPath)], panel: &Panel, alpha: f64) -> Vec<RdRow> {
    let mut depth: std::collections::HashMap<usize, (f64, usize)> = Default::default();
    for r in &panel.rows {
        if let Some(d) = r.silence_depth {
            let e = depth.entry(r.firm_id).or_insert((0.0, 0));
            e.0 += d;
            e.1 += 1;
        }
    }
    let mut rows = Vec::new();
    for (meta, path) in firms {
        let d = depth
            .get(&meta.firm_id)
            .map_or(0.0, |(s, n)| s / *n as f64);
        for e in &path.events {
            if !matches!(e.kind, EventKind::Publication { .. }) {
                continue;
            }
            let uptake = path
                .stats
                .first_adoption
                .map_or(0.0, |ta| (e.t >= ta) as u8 as f64);
            rows.push(RdRow { running: e.m - alpha, uptake, silence_depth: d });
        }
    }
    rows
}

/// Sample mean of rev_proxy within its top quartile across firms.
pub fn rev_proxy_top_quartile_mean(firms: &[(FirmMeta, SimPath)]) -> f64 {
    let mut rp: Vec<f64> = firms.iter().map(|(m, _)| m.rev_proxy).collect();
    rp.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = (rp.len() + 3) / 4;
    let top = &rp[rp.len() - k..];
    top.iter().sum::<f64>() / top.len() as f64
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TelemetryEstimates {
    pub event_study_signals: EventStudyFit,
    pub event_study_dispersion: Option<EventStudyFit>,
    pub plateau: Option<PlateauReport>,
    pub patch_hazard: PatchHazardFit,
    pub cascade: HazardFit,
    pub rd: Option<RdFit>,
}

pub struct TelemetryRun {
    pub panel: Panel,
    pub estimates: TelemetryEstimates,
}

/// One full replication: simulate the cross-section, build the panel, and run
/// every estimator that has usable data. `alpha` is the adoption cutoff used
/// for the RD running variable.
pub fn run_telemetry(
    config: &ScenarioConfig,
    policy: &Policy,
    alpha: f64,
    rep_seed: u64,
) -> Result<TelemetryRun, TelemetryError> {
    let tel = config.telemetry.as_ref().ok_or(TelemetryError::MissingConfig)?;
    let firms = synth_firms(config, policy, tel, rep_seed);
    let opts = PanelOptions {
        month_length: tel.month_length,
        months: tel.months,
        max_lag: tel.max_lag,
        ..PanelOptions::default()
    };
    let panel = build_panel(&firms, &opts)?;
    let horizon = tel.months as f64 * tel.month_length;

    let event_study_signals = event_study(&panel, Outcome::NSignals, tel.event_window)?;
    let event_study_dispersion = event_study(&panel, Outcome::DispersionX, tel.event_window).ok();
    let plateau = {
        let metrics = post_event_metrics(&firms, tel.month_length);
        plateau_test(&metrics).ok()
    };
    let spells = patch_spells(&firms, horizon);
    let names: Vec<String> = ["leverage", "rev_proxy", "lev_x_rev"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let r_bar = rev_proxy_top_quartile_mean(&firms);
    let patch = patch_hazard(&spells, &names, r_bar)?;
    let (expos, evs, bins, post) = cascade_spells(&firms, tel.month_length, horizon);
    let cascade = cascade_hazard(&expos, &evs, &bins, &post, &[], &[])?;
    let rd = {
        let rows = rd_rows(&firms, &panel, alpha);
        adoption_rd(&rows, 0.5).ok()
    };
    Ok(TelemetryRun {
        panel,
        estimates: TelemetryEstimates {
            event_study_signals,
            event_study_dispersion,
            plateau,
            patch_hazard: patch,
            cascade,
            rd,
        },
    })
}
