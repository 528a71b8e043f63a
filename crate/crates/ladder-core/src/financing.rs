//! Levered extension: equity value with coupon and default, debt valuation
//! by Monte Carlo, and the takeover-envelope wedge decomposition.
//!
//! All Monte Carlo present-value representations include the impulse costs
//! paid at resets, so value matching makes the first-best representation an
//! exact martingale identity and the wedge decomposition holds path by path.

use crate::ladder::{
    characteristic_roots, particular_solution, LadderError, LadderSolution, ValueFn,
};
use crate::model::{ModelParams, ScenarioConfig};
use crate::sim::{simulate_batch, Policy, Summary, UpperAction};
use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FinancingError {
    #[error(transparent)]
    Ladder(#[from] LadderError),
    #[error("safe-patch-block infeasible: equity value reaches {min_s:.6} on the band")]
    InfeasibleMode { min_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeverageMode {
    SafePatchBlock,
    WithDefault,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeveredSolution {
    pub mode: LeverageMode,
    /// Default boundary; None when default is off path (safe mode).
    pub z_d: Option<f64>,
    /// Equity value S on the solvent band.
    pub equity: ValueFn,
    pub beta1: f64,
    pub z1_star: f64,
    /// Upper rung of the levered ladder; absent in with-default mode, where
    /// the default boundary replaces the pivot.
    pub beta2: Option<f64>,
    pub z2_star: Option<f64>,
    pub residuals: Vec<f64>,
    pub iters: usize,
}

impl LeveredSolution {
    /// Reset policy equity actually follows.
    pub fn policy(&self) -> Policy {
        match self.mode {
            LeverageMode::SafePatchBlock => Policy {
                beta1: self.beta1,
                z1_star: self.z1_star,
                beta2: self.beta2.unwrap(),
                z2_star: self.z2_star.unwrap(),
                upper_action: UpperAction::Pivot,
                alpha: None,
            },
            LeverageMode::WithDefault => {
                let zd = self.z_d.unwrap();
                Policy {
                    beta1: self.beta1,
                    z1_star: self.z1_star,
                    beta2: zd,
                    z2_star: zd,
                    upper_action: UpperAction::Default,
                    alpha: None,
                }
            }
        }
    }
}

fn shifted(params: &ModelParams) -> ModelParams {
    let mut p = params.clone();
    p.payoff.pi0 -= p.c_d;
    p
}

/// Solve the levered equity problem.
///
/// Safe-patch-block mode re-solves the ladder with flow pi - c_d (a constant
/// shift, so triggers and targets coincide with first best) and checks the
/// equity value stays positive on the band. With-default mode replaces the
/// upper rung by a default boundary z_d with S(z_d) = S'(z_d) = 0 and solves
/// the five-unknown system (beta1, z1*, z_d, A, B) by damped Newton.
pub fn solve_levered_equity(
    params: &ModelParams,
    init: Option<[f64; 5]>,
    mode: LeverageMode,
    tol: f64,
    max_iter: usize,
) -> Result<LeveredSolution, FinancingError> {
    match mode {
        LeverageMode::SafePatchBlock => {
            let sol = crate::ladder::solve_ladder(&shifted(params), None, tol, max_iter)?;
            let mut min_s = f64::INFINITY;
            for i in 0..=2000 {
                let z = sol.beta1 + (sol.beta2 - sol.beta1) * i as f64 / 2000.0;
                min_s = min_s.min(sol.value.v(z));
            }
            if min_s <= 0.0 {
                return Err(FinancingError::InfeasibleMode { min_s });
            }
            Ok(LeveredSolution {
                mode,
                z_d: None,
                equity: sol.value,
                beta1: sol.beta1,
                z1_star: sol.z1_star,
                beta2: Some(sol.beta2),
                z2_star: Some(sol.z2_star),
                residuals: sol.residuals.boundary.to_vec(),
                iters: sol.iters,
            })
        }
        LeverageMode::WithDefault => solve_with_default(params, init, tol, max_iter),
    }
}

fn solve_with_default(
    params: &ModelParams,
    init: Option<[f64; 5]>,
    tol: f64,
    max_iter: usize,
) -> Result<LeveredSolution, FinancingError> {
    let sp = shifted(params);
    let (eta_plus, eta_minus) = characteristic_roots(sp.mu, sp.sigma, sp.r);
    let (c2, c1, c0) = particular_solution(&sp.payoff, 0.0, sp.mu, sp.sigma, sp.r);
    let base = ValueFn { c2, c1, c0, a_coef: 0.0, b_coef: 0.0, eta_plus, eta_minus };

    let th0 = init.unwrap_or_else(|| {
        // start from the shifted unlevered ladder when it exists
        match crate::ladder::solve_ladder(&sp, None, 1e-8, 200) {
            Ok(s) => [s.beta1, s.z1_star, s.beta2 * 1.2, s.value.a_coef, s.value.b_coef],
            Err(_) => {
                let g = crate::ladder::default_init(&sp);
                [g[0], g[1], g[3] * 1.2, g[4], g[5]]
            }
        }
    });
    let mut th = Vector5::from_column_slice(&th0);

    let eval = |th: &Vector5<f64>| -> Vector5<f64> {
        let mut f = base;
        f.a_coef = th[3];
        f.b_coef = th[4];
        let (b1, z1, zd) = (th[0], th[1], th[2]);
        Vector5::new(
            f.v(b1) - f.v(z1) + params.k1,
            f.vp(b1),
            f.vp(z1),
            f.v(zd),
            f.vp(zd),
        )
    };
    let order_ok = |th: &Vector5<f64>| {
        th.iter().all(|x| x.is_finite()) && th[0] < th[1] && th[1] < th[2]
    };

    let mut iters = 0;
    loop {
        let f = eval(&th);
        let fmax = f.amax();
        if fmax <= tol {
            break;
        }
        if iters >= max_iter {
            return Err(LadderError::NonConvergence { residual: fmax, iters }.into());
        }
        let mut s = base;
        s.a_coef = th[3];
        s.b_coef = th[4];
        let (b1, z1, zd) = (th[0], th[1], th[2]);
        let ep = |z: f64| (eta_plus * z).exp();
        let em = |z: f64| (eta_minus * z).exp();
        let mut j = Matrix5::zeros();
        j[(0, 0)] = s.vp(b1);
        j[(0, 1)] = -s.vp(z1);
        j[(0, 3)] = ep(b1) - ep(z1);
        j[(0, 4)] = em(b1) - em(z1);
        j[(1, 0)] = s.vpp(b1);
        j[(1, 3)] = eta_plus * ep(b1);
        j[(1, 4)] = eta_minus * em(b1);
        j[(2, 1)] = s.vpp(z1);
        j[(2, 3)] = eta_plus * ep(z1);
        j[(2, 4)] = eta_minus * em(z1);
        j[(3, 2)] = s.vp(zd);
        j[(3, 3)] = ep(zd);
        j[(3, 4)] = em(zd);
        j[(4, 2)] = s.vpp(zd);
        j[(4, 3)] = eta_plus * ep(zd);
        j[(4, 4)] = eta_minus * em(zd);
        let d = match j.lu().solve(&(-f)) {
            Some(d) if d.iter().all(|x| x.is_finite()) => d,
            _ => {
                let svd = j.svd(false, false);
                let sv = &svd.singular_values;
                let cond = sv.max() / sv.min().max(f64::MIN_POSITIVE);
                return Err(LadderError::SingularJacobian { cond }.into());
            }
        };
        let n0 = f.norm();
        let mut lam = 1.0;
        let mut accepted = false;
        while lam > 1e-14 {
            let cand = th + lam * d;
            if order_ok(&cand) {
                let n1 = eval(&cand).norm();
                if n1.is_finite() && n1 < n0 {
                    th = cand;
                    accepted = true;
                    break;
                }
            }
            lam *= 0.5;
        }
        if !accepted {
            return Err(LadderError::NonConvergence { residual: fmax, iters }.into());
        }
        iters += 1;
    }
    let f = eval(&th);
    let equity = ValueFn { a_coef: th[3], b_coef: th[4], ..base };
    Ok(LeveredSolution {
        mode: LeverageMode::WithDefault,
        z_d: Some(th[2]),
        equity,
        beta1: th[0],
        z1_star: th[1],
        beta2: None,
        z2_star: None,
        residuals: f.iter().map(|x| x.abs()).collect(),
        iters,
    })
}

/// First-best value extended off the band by immediate-reset continuation:
/// flat at V(z_i*) - K_i beyond the triggers.
pub fn fb_value_ext(fb: &LadderSolution, z: f64) -> f64 {
    // value matching makes the extension flat: V(beta_i) = V(z_i*) - K_i
    fb.value.v(z.clamp(fb.beta1, fb.beta2))
}

/// Takeover cost the acquirer actually pays at state z: the cost of the
/// reset the first-best continuation calls for (zero inside the band).
pub fn phi_used(fb: &LadderSolution, z: f64, phi1: f64, phi2: f64) -> f64 {
    if z <= fb.beta1 {
        phi1
    } else if z >= fb.beta2 {
        phi2
    } else {
        0.0
    }
}

/// Tight-envelope lower bound on the takeover value: A_FB(z) - phi_max.
pub fn takeover_envelope(z: f64, fb: &LadderSolution, phi_max: f64) -> f64 {
    fb_value_ext(fb, z) - phi_max
}

/// Acquirer value under the tight takeover map and best action.
pub fn y_to_tight(fb: &LadderSolution, z: f64, phi1: f64, phi2: f64) -> f64 {
    fb_value_ext(fb, z) - phi_used(fb, z, phi1, phi2)
}

/// Monte Carlo debt value under the levered policy:
/// E[int e^{-rs} c_d ds + e^{-r T*} y_to(z_{T*})], with a riskless c_d/r
/// tail attached to paths alive at the horizon.
pub fn debt_value_mc(
    config: &ScenarioConfig,
    levered: &LeveredSolution,
    y_to: impl Fn(f64) -> f64,
) -> Summary {
    let p = &config.params;
    let paths = simulate_batch(config, &levered.policy());
    let vals: Vec<f64> = paths
        .iter()
        .map(|path| {
            let t = path.stats.default_time.unwrap_or(config.sim.horizon);
            let coupon = p.c_d * (1.0 - (-p.r * t).exp()) / p.r;
            let terminal = match path.stats.default_time {
                Some(ts) => (-p.r * ts).exp() * y_to(path.stats.z_end),
                None => (-p.r * config.sim.horizon).exp() * p.c_d / p.r,
            };
            coupon + terminal
        })
        .collect();
    summarize_slice(&vals)
}

fn summarize_slice(xs: &[f64]) -> Summary {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Summary { mean, se: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Summary { mean, se: (var / n as f64).sqrt() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WedgeReport {
    /// First-best value at the start state.
    pub a_fb: f64,
    /// MC estimate of total levered surplus S + Y.
    pub s_plus_y: Summary,
    /// Pre-default agency wedge A_t = A_FB - E[levered-path first-best rep].
    pub agency: Summary,
    /// E[e^{-r T*} phi_used].
    pub irreversibility: Summary,
    /// A_FB - (S + Y).
    pub wedge: Summary,
    /// agency + irreversibility - wedge (>= 0 up to MC error).
    pub bound_slack: f64,
    /// E[e^{-r T*}].
    pub default_discount: Summary,
}

/// Wedge decomposition by Monte Carlo under an explicit levered policy, with
/// a common path set for every estimate. Flow, reset costs, and the takeover
/// terminal all enter each present-value representation; paths alive at the
/// horizon attach the first-best continuation value.
pub fn wedge_report(
    config: &ScenarioConfig,
    policy: &Policy,
    fb: &LadderSolution,
) -> WedgeReport {
    let p = &config.params;
    let a_fb0 = fb_value_ext(fb, config.sim.z0);
    let paths = simulate_batch(config, policy);
    let n = paths.len();
    let mut sy = Vec::with_capacity(n);
    let mut a_rep = Vec::with_capacity(n);
    let mut irr = Vec::with_capacity(n);
    let mut dd = Vec::with_capacity(n);
    for path in &paths {
        let st = &path.stats;
        let base = st.disc_flow - st.disc_reset_cost;
        match st.default_time {
            Some(ts) => {
                let d = (-p.r * ts).exp();
                sy.push(base + d * y_to_tight(fb, st.z_end, p.phi1, p.phi2));
                a_rep.push(base + d * fb_value_ext(fb, st.z_end));
                irr.push(d * phi_used(fb, st.z_end, p.phi1, p.phi2));
                dd.push(d);
            }
            None => {
                let tail = (-p.r * config.sim.horizon).exp() * fb_value_ext(fb, st.z_end);
                sy.push(base + tail);
                a_rep.push(base + tail);
                irr.push(0.0);
                dd.push(0.0);
            }
        }
    }
    let sy_s = summarize_slice(&sy);
    let a_rep_s = summarize_slice(&a_rep);
    let irr_s = summarize_slice(&irr);
    let agency = Summary { mean: a_fb0 - a_rep_s.mean, se: a_rep_s.se };
    let wedge = Summary { mean: a_fb0 - sy_s.mean, se: sy_s.se };
    WedgeReport {
        a_fb: a_fb0,
        s_plus_y: sy_s,
        bound_slack: agency.mean + irr_s.mean - wedge.mean,
        agency,
        irreversibility: irr_s,
        wedge,
        default_discount: summarize_slice(&dd),
    }
}
