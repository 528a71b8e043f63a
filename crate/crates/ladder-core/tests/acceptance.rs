//! End-to-end acceptance battery. Each criterion prints one PASS/FAIL line
//! (run with `--nocapture` to see them all).

use ladder_core::adoption::{
    adoption_comparative_statics, buyer_value, smooth_fit_residual, solve_alpha_general,
    solve_alpha_linear,
};
use ladder_core::belief::{drift_step, publication_update, BeliefState};
use ladder_core::financing::{
    debt_value_mc, solve_levered_equity, wedge_report, y_to_tight, LeverageMode,
};
use ladder_core::ladder::{
    comparative_statics, exit_time_bound, mean_exit_time, qvi_check, solve_ladder, WhichCost,
};
use ladder_core::model::{
    benchmark_config, derive_seed, ModelParams, ScenarioConfig, SilenceWindow, TelemetryConfig,
    WindowSpace,
};
use ladder_core::sim::{
    exit_times_mc, simulate_batch, window_residence_report, EventKind, Policy, UpperAction,
};
use ladder_core::telemetry::event_study::{event_study, Outcome};
use ladder_core::telemetry::hazard::{cascade_hazard, patch_hazard};
use ladder_core::telemetry::mixture::plateau_test;
use ladder_core::telemetry::panel::{build_panel, PanelOptions};
use ladder_core::telemetry::pipeline::{
    patch_spells, post_event_metrics, rev_proxy_top_quartile_mean, synth_firms,
};
use ladder_core::telemetry::rd::{adoption_rd, RdRow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check(n: usize, name: &str, f: impl FnOnce() + std::panic::UnwindSafe) {
    let r = std::panic::catch_unwind(f);
    match &r {
        Ok(()) => println!("acceptance criterion {n:2} ({name}): PASS"),
        Err(_) => println!("acceptance criterion {n:2} ({name}): FAIL"),
    }
    if let Err(e) = r {
        std::panic::resume_unwind(e);
    }
}

#[test]
fn criterion_01_boundary_fidelity() {
    check(1, "boundary-system fidelity", || {
        let cfg = benchmark_config();
        let sol = solve_ladder(&cfg.params, None, 1e-12, 200).unwrap();
        for r in sol.residuals.boundary {
            assert!(r.abs() <= 1e-10, "residual {r}");
        }
        assert!((sol.beta1 + sol.beta2).abs() <= 1e-8, "beta symmetry");
        assert!((sol.z1_star + sol.z2_star).abs() <= 1e-8, "target symmetry");
        // 10 random admissible starts converge to the same solution
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let span = sol.beta2 - sol.beta1;
        for _ in 0..10 {
            let s = |r: &mut ChaCha8Rng| 0.85 + 0.3 * r.random::<f64>();
            let init = [
                sol.beta1 * s(&mut rng),
                sol.z1_star - 0.05 * span * rng.random::<f64>(),
                sol.z2_star + 0.05 * span * rng.random::<f64>(),
                sol.beta2 * s(&mut rng),
                sol.value.a_coef * s(&mut rng),
                sol.value.b_coef * s(&mut rng),
            ];
            let other = solve_ladder(&cfg.params, Some(init), 1e-12, 200).unwrap();
            for (a, b) in [
                (other.beta1, sol.beta1),
                (other.z1_star, sol.z1_star),
                (other.z2_star, sol.z2_star),
                (other.beta2, sol.beta2),
            ] {
                assert!((a - b).abs() <= 1e-8, "restart mismatch {a} vs {b}");
            }
        }
    });
}

#[test]
fn criterion_02_qvi_verification() {
    check(2, "QVI verification", || {
        let cfg = benchmark_config();
        let sol = solve_ladder(&cfg.params, None, 1e-12, 200).unwrap();
        let qvi = qvi_check(&sol, &cfg.params, 10_000, 1e-8);
        assert!(qvi.max_ode_residual <= 1e-8, "ODE residual {}", qvi.max_ode_residual);
        assert!(
            qvi.min_dominance_margin >= -1e-8,
            "dominance margin {}",
            qvi.min_dominance_margin
        );
        assert!(qvi.delta_ic.abs() <= 1e-8, "IC gap {}", qvi.delta_ic);
    });
}

#[test]
fn criterion_03_comparative_statics() {
    check(3, "fixed-cost comparative statics", || {
        let cfg = benchmark_config();
        let base = solve_ladder(&cfg.params, None, 1e-12, 200).unwrap();
        let base_jump1 = base.z1_star - base.beta1;
        let base_jump2 = base.beta2 - base.z2_star;
        let rows = comparative_statics(
            &cfg.params,
            &[
                (WhichCost::K1, 1e-3),
                (WhichCost::K1, 1e-2),
                (WhichCost::K2, 1e-3),
                (WhichCost::K2, 1e-2),
            ],
        )
        .unwrap();
        let mut last_jump1 = base_jump1;
        let mut last_jump2 = base_jump2;
        for row in &rows {
            match row.which {
                WhichCost::K1 => {
                    assert!(row.d_beta1 < 0.0, "d beta1 / d K1 = {}", row.d_beta1);
                    assert!(row.d_z1 > 0.0, "d z1* / d K1 = {}", row.d_z1);
                    assert!(row.jump1 > last_jump1, "jump1 not increasing");
                    last_jump1 = row.jump1;
                }
                WhichCost::K2 => {
                    assert!(row.d_beta2 > 0.0, "d beta2 / d K2 = {}", row.d_beta2);
                    assert!(row.d_z2 < 0.0, "d z2* / d K2 = {}", row.d_z2);
                    assert!(row.jump2 > last_jump2, "jump2 not increasing");
                    last_jump2 = row.jump2;
                }
            }
        }
    });
}

#[test]
fn criterion_04_exit_time_oracle() {
    check(4, "exit-time oracle", || {
        let cfg = benchmark_config();
        let sol = solve_ladder(&cfg.params, None, 1e-12, 200).unwrap();
        let band = (sol.beta1, sol.beta2);
        let ode = mean_exit_time(&cfg.params, band, 0.0).unwrap();
        let times = exit_times_mc(
            cfg.params.mu,
            cfg.params.sigma,
            band,
            0.0,
            1e-3,
            1_000.0,
            10_000,
            7,
        );
        let n = times.len() as f64;
        let mean = times.iter().sum::<f64>() / n;
        let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(
            (mean - ode).abs() <= 3.0 * se,
            "MC exit {mean} vs ODE {ode} (se {se})"
        );
        // crude bound holds across bands, drifts, and start states
        for mu in [0.0, 0.05, -0.1] {
            let mut p = cfg.params.clone();
            p.mu = mu;
            for w in [0.5, 1.0, 2.0] {
                for i in 0..=10 {
                    let z0 = -w / 2.0 + w * i as f64 / 10.0;
                    let t = mean_exit_time(&p, (-w / 2.0, w / 2.0), z0).unwrap();
                    let bound = exit_time_bound(&p, (-w / 2.0, w / 2.0));
                    assert!(t <= bound + 1e-12, "bound violated: {t} > {bound}");
                }
            }
        }
    });
}

#[test]
fn criterion_05_filter_correctness() {
    check(5, "filter correctness", || {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1_000_000 {
            let m = 10.0 * rng.random::<f64>() - 5.0;
            let v = 5.0 * rng.random::<f64>() + 1e-6;
            let y = 10.0 * rng.random::<f64>() - 5.0;
            let se2 = 5.0 * rng.random::<f64>() + 1e-6;
            let post = publication_update(BeliefState { m, v }, y, se2).unwrap();
            let m_ref = (m * se2 + y * v) / (v + se2);
            let v_ref = v * se2 / (v + se2);
            assert!((post.m - m_ref).abs() <= 1e-12 * m_ref.abs().max(1.0));
            assert!((post.v - v_ref).abs() <= 1e-12 * v_ref.max(1.0));
        }
        // drift composition law
        let (kappa, m_bar, sigma) = (1.3, 0.7, 0.3);
        let s0 = BeliefState { m: -0.4, v: 2.0 };
        let once = drift_step(s0, 0.9, kappa, m_bar, sigma);
        let twice = drift_step(drift_step(s0, 0.5, kappa, m_bar, sigma), 0.4, kappa, m_bar, sigma);
        assert!((once.m - twice.m).abs() <= 1e-12);
        assert!((once.v - twice.v).abs() <= 1e-12);
        // grid quadratic variation of m under pure drift scales O(dt)
        let qv = |dt: f64| {
            let mut s = s0;
            let mut acc = 0.0;
            let mut t = 0.0;
            while t < 2.0 {
                let next = drift_step(s, dt, kappa, m_bar, sigma);
                acc += (next.m - s.m) * (next.m - s.m);
                s = next;
                t += dt;
            }
            acc
        };
        let r1 = qv(1e-2) / qv(5e-3);
        let r2 = qv(5e-3) / qv(2.5e-3);
        for r in [r1, r2] {
            assert!((1.5..=3.0).contains(&r), "QV refinement ratio {r}");
        }
    });
}

#[test]
fn criterion_06_silence_purity() {
    check(6, "silence purity and residence scaling", || {
        let mut cfg = benchmark_config();
        let sol = solve_ladder(&cfg.params, None, 1e-12, 200).unwrap();
        cfg.windows = vec![SilenceWindow {
            space: WindowSpace::PrivateState,
            center: 0.5 * (sol.beta1 + sol.beta2) + 0.3,
            radius: 0.08,
        }];
        cfg.sim.dt = 1e-2;
        cfg.sim.horizon = 60.0;
        cfg.sim.n_paths = 1_000;
        let policy = Policy::from_ladder(&sol, None);
        let paths = simulate_batch(&cfg, &policy);
        assert_eq!(paths.len(), 1_000);
        for path in &paths {
            for e in &path.events {
                if matches!(e.kind, EventKind::Publication { .. }) {
                    assert!(
                        !cfg.windows[0].contains(e.z_pre, e.m),
                        "publication inside active window at t={}",
                        e.t
                    );
                }
            }
        }
        // residence per path roughly linear in the radius
        cfg.sim.n_paths = 300;
        let rows = window_residence_report(&cfg, &policy, &[0.02, 0.04, 0.08]);
        for w in rows.windows(2) {
            let ratio = w[1].residence.mean / w[0].residence.mean;
            assert!(
                (1.5..=3.0).contains(&ratio),
                "residence scaling ratio {ratio}"
            );
        }
    });
}

#[test]
fn criterion_07_adoption() {
    check(7, "adoption cutoff and hitting time", || {
        let (kappa, m_bar, r, a, p) = (1.0, 1.0, 0.05, 1.0, 0.3);
        let closed = solve_alpha_linear(kappa, m_bar, r, a, p);
        let general = solve_alpha_general(
            |m| kappa * (m_bar - m),
            |m| a * m - p,
            r,
            (p / a + 1e-9, m_bar - 1e-9),
            1e-14,
        )
        .unwrap();
        assert!((general - closed).abs() <= 1e-10, "alpha {general} vs {closed}");
        let s = |m: f64| a * m - p;
        let resid = smooth_fit_residual(closed, kappa, m_bar, r, s, 1e-6);
        assert!(resid.abs() <= 1e-6, "smooth-fit residual {resid}");
        // comparative statics against central differences
        let h = 1e-5;
        let da_dp =
            (solve_alpha_linear(kappa, m_bar, r, a, p + h) - solve_alpha_linear(kappa, m_bar, r, a, p - h))
                / (2.0 * h);
        let da_dm =
            (solve_alpha_linear(kappa, m_bar + h, r, a, p) - solve_alpha_linear(kappa, m_bar - h, r, a, p))
                / (2.0 * h);
        let (dp_ref, dm_ref) = adoption_comparative_statics(kappa, m_bar, r, a);
        assert!((da_dp - dp_ref).abs() <= 1e-8);
        assert!((da_dm - dm_ref).abs() <= 1e-8);
        // simulated adoption time under a belief-space silence window equals
        // the deterministic hitting time tau(m0) up to one grid step
        let mut cfg = benchmark_config();
        cfg.params.p = p;
        let alpha = closed;
        let (_, tau0) = buyer_value(0.0, alpha, kappa, m_bar, r, a * alpha - p);
        cfg.windows = vec![SilenceWindow {
            space: WindowSpace::BeliefMean,
            center: alpha / 2.0,
            radius: alpha / 2.0 + 1e-3,
        }];
        cfg.sim.dt = 1e-3;
        cfg.sim.horizon = 20.0;
        cfg.sim.n_paths = 4;
        let sol = solve_ladder(&cfg.params, None, 1e-12, 200).unwrap();
        let policy = Policy::from_ladder(&sol, Some(alpha));
        for path in simulate_batch(&cfg, &policy) {
            let t = path.stats.first_adoption.expect("no adoption");
            assert!(
                (t - tau0).abs() <= cfg.sim.dt + 1e-9,
                "adoption at {t}, tau(m0) = {tau0}"
            );
        }
    });
}

/// Tridiagonal solve of r Y = c_d + mu Y' + sigma^2/2 Y'' on [lo, hi] with
/// Dirichlet data, by the Thomas algorithm.
fn debt_ode_dirichlet(
    params: &ModelParams,
    source: f64,
    lo: f64,
    hi: f64,
    y_lo: f64,
    y_hi: f64,
    n: usize,
) -> Vec<f64> {
    let h = (hi - lo) / n as f64;
    let s2 = 0.5 * params.sigma * params.sigma;
    let (a, b, c) = (
        s2 / (h * h) - params.mu / (2.0 * h),
        -2.0 * s2 / (h * h) - params.r,
        s2 / (h * h) + params.mu / (2.0 * h),
    );
    let m = n - 1;
    let mut diag = vec![b; m];
    let mut rhs = vec![-source; m];
    rhs[0] -= a * y_lo;
    rhs[m - 1] -= c * y_hi;
    // forward sweep
    for i in 1..m {
        let w = a / diag[i - 1];
        diag[i] -= w * c;
        rhs[i] -= w * rhs[i - 1];
    }
    let mut y = vec![0.0; n + 1];
    y[0] = y_lo;
    y[n] = y_hi;
    y[m] = rhs[m - 1] / diag[m - 1];
    for i in (1..m).rev() {
        y[i] = (rhs[i - 1] - c * y[i + 1]) / diag[i - 1];
    }
    y
}

#[test]
fn criterion_08_financing() {
    check(8, "financing and wedge bounds", || {
        let mut cfg = benchmark_config();
        cfg.params.payoff.pi0 = 3.0;
        // c_d = 0 reproduces the unlevered ladder exactly
        let fb = solve_ladder(&cfg.params, None, 1e-12, 200).unwrap();
        let lev0 =
            solve_levered_equity(&cfg.params, None, LeverageMode::SafePatchBlock, 1e-12, 200)
                .unwrap();
        assert!((lev0.beta1 - fb.beta1).abs() <= 1e-10);
        assert!((lev0.equity.v(0.0) - fb.value.v(0.0)).abs() <= 1e-8);
        // safe patch block with phi1 = 0: levered triggers = first best,
        // A_FB = S + Y within MC error, and A_t >= 0
        cfg.params.c_d = 0.3;
        cfg.params.phi1 = 0.0;
        cfg.params.phi2 = 0.4;
        cfg.sim.dt = 1e-3;
        cfg.sim.n_paths = 400;
        let lev =
            solve_levered_equity(&cfg.params, None, LeverageMode::SafePatchBlock, 1e-12, 200)
                .unwrap();
        assert!((lev.beta1 - fb.beta1).abs() <= 1e-8);
        assert!((lev.z1_star - fb.z1_star).abs() <= 1e-8);
        let report = wedge_report(&cfg, &lev.policy(), &fb);
        let debt = debt_value_mc(&cfg, &lev, |z| {
            y_to_tight(&fb, z, cfg.params.phi1, cfg.params.phi2)
        });
        let s0 = lev.equity.v(cfg.sim.z0);
        assert!(
            (report.a_fb - (s0 + debt.mean)).abs() <= 3.0 * debt.se.max(1e-10),
            "A_FB {} vs S+Y {}",
            report.a_fb,
            s0 + debt.mean
        );
        assert!(report.agency.mean >= -3.0 * report.agency.se, "agency wedge negative");
        assert!(report.wedge.mean.abs() <= 3.0 * report.wedge.se, "safe wedge not ~0");
        // tightness: first-best patch rung, default at the pivot trigger ->
        // wedge = E[e^{-r T*}] phi2
        let tight = Policy {
            beta1: fb.beta1,
            z1_star: fb.z1_star,
            beta2: fb.beta2,
            z2_star: fb.z2_star,
            upper_action: UpperAction::Default,
            alpha: None,
        };
        let mut tcfg = cfg.clone();
        tcfg.sim.horizon = 120.0;
        let trep = wedge_report(&tcfg, &tight, &fb);
        let target = trep.default_discount.mean * tcfg.params.phi2;
        assert!(
            (trep.wedge.mean - target).abs()
                <= 3.0 * (trep.wedge.se + tcfg.params.phi2 * trep.default_discount.se),
            "tight wedge {} vs {}",
            trep.wedge.mean,
            target
        );
        assert!(trep.agency.mean >= -3.0 * trep.agency.se);
        // with-default debt against an independent finite-difference oracle
        let mut dcfg = cfg.clone();
        dcfg.params.c_d = 2.7;
        dcfg.sim.horizon = 300.0;
        let levd =
            solve_levered_equity(&dcfg.params, None, LeverageMode::WithDefault, 1e-12, 300)
                .unwrap();
        let zd = levd.z_d.unwrap();
        let y_to = |z: f64| y_to_tight(&fb, z, dcfg.params.phi1, dcfg.params.phi2);
        let mc = debt_value_mc(&dcfg, &levd, y_to);
        // nonlocal patch condition Y(beta1) = Y(z1*): superpose a particular
        // and a homogeneous Dirichlet solve
        let n = 4_000;
        let yp = debt_ode_dirichlet(&dcfg.params, dcfg.params.c_d, levd.beta1, zd, 0.0, y_to(zd), n);
        let yh = debt_ode_dirichlet(&dcfg.params, 0.0, levd.beta1, zd, 1.0, 0.0, n);
        let at = |ys: &[f64], z: f64| {
            let x = (z - levd.beta1) / (zd - levd.beta1) * n as f64;
            let i = (x.floor() as usize).min(n - 1);
            ys[i] + (x - i as f64) * (ys[i + 1] - ys[i])
        };
        let c = at(&yp, levd.z1_star) / (1.0 - at(&yh, levd.z1_star));
        let ode = |z: f64| at(&yp, z) + c * at(&yh, z);
        assert!(
            (mc.mean - ode(dcfg.sim.z0)).abs() <= 3.0 * mc.se + 1e-3,
            "debt MC {} vs ODE {}",
            mc.mean,
            ode(dcfg.sim.z0)
        );
    });
}

fn telemetry_scenario() -> (ScenarioConfig, Policy, f64) {
    let mut cfg = benchmark_config();
    let sol = solve_ladder(&cfg.params, None, 1e-12, 200).unwrap();
    cfg.windows = vec![SilenceWindow {
        space: WindowSpace::PrivateState,
        center: sol.beta2 - 0.3,
        radius: 0.3,
    }];
    cfg.sim.dt = 1e-2;
    cfg.telemetry = Some(TelemetryConfig {
        n_firms: 20,
        months: 120,
        month_length: 1.0,
        max_lag: 6,
        event_window: 4,
        leverage_min: 0.1,
        leverage_max: 1.0,
        phi2_min: 0.05,
        phi2_max: 0.5,
        phi_ref: 1.0,
        replications: 50,
    });
    let p = &cfg.params;
    let alpha = solve_alpha_linear(p.kappa, p.m_bar, p.r, p.a, p.p);
    (cfg, Policy::from_ladder(&sol, None), alpha)
}

#[test]
fn criterion_09_telemetry_signatures() {
    check(9, "telemetry signatures S1-S5", || {
        let (cfg, policy, _alpha) = telemetry_scenario();
        let tel = cfg.telemetry.clone().unwrap();
        let opts = PanelOptions {
            month_length: tel.month_length,
            months: tel.months,
            max_lag: tel.max_lag,
            ..PanelOptions::default()
        };
        // S1: pre-reset cadence dip, and S3: debt neutrality of patch timing,
        // both across 50 replications
        let mut s1_hits = 0;
        let mut s3_hits = 0;
        let names: Vec<String> = ["leverage", "rev_proxy", "lev_x_rev"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for rep in 0..tel.replications {
            let firms = synth_firms(&cfg, &policy, &tel, derive_seed(1000, rep as u64));
            let panel = build_panel(&firms, &opts).unwrap();
            let fit = event_study(&panel, Outcome::NSignals, tel.event_window).unwrap();
            let pre: Vec<i64> = vec![-3, -2];
            let neg = pre
                .iter()
                .all(|&l| fit.coef_at(l).map_or(false, |(b, _)| b < 0.0));
            let joint = fit.joint_wald(&pre).map_or(false, |(_, _, p)| p < 0.05);
            if neg && joint {
                s1_hits += 1;
            }
            let spells = patch_spells(&firms, tel.months as f64 * tel.month_length);
            let r_bar = rev_proxy_top_quartile_mean(&firms);
            if let Ok(ph) = patch_hazard(&spells, &names, r_bar) {
                if ph.p_value.map_or(false, |p| p > 0.05) {
                    s3_hits += 1;
                }
            }
        }
        let need = (tel.replications * 9 + 9) / 10;
        assert!(s1_hits >= need, "S1: {s1_hits}/{} replications", tel.replications);
        assert!(s3_hits >= need, "S3: {s3_hits}/{} replications", tel.replications);

        // S2: two plateaus on a ladder with separated targets
        let mut cfg2 = cfg.clone();
        cfg2.windows.clear();
        let wide = Policy {
            beta1: -1.5,
            z1_star: -0.5,
            beta2: 1.5,
            z2_star: 0.5,
            upper_action: UpperAction::Pivot,
            alpha: None,
        };
        let mut tel2 = tel.clone();
        tel2.n_firms = 40;
        cfg2.telemetry = Some(tel2.clone());
        let firms2 = synth_firms(&cfg2, &wide, &tel2, 5);
        let metrics = post_event_metrics(&firms2, 0.5);
        let rep2 = plateau_test(&metrics).unwrap();
        assert!(rep2.two_components, "S2: one component selected");
        assert!(
            (rep2.means[0] - wide.z1_star).abs() <= 0.15,
            "S2 lower mean {}",
            rep2.means[0]
        );
        assert!(
            (rep2.means[1] - wide.z2_star).abs() <= 0.15,
            "S2 upper mean {}",
            rep2.means[1]
        );

        // S4: post-reset cascade coefficient recovers log 2 on the two-rate oracle
        {
            use rand_distr::{Distribution, Exp};
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let mut exposures = Vec::new();
            let mut post = Vec::new();
            for i in 0..1_000 {
                let is_post = i % 2 == 0;
                let rate = if is_post { 2.0 } else { 1.0 };
                exposures.push(Exp::new(rate).unwrap().sample(&mut rng));
                post.push(is_post);
            }
            let events = vec![true; exposures.len()];
            let bins = vec![0usize; exposures.len()];
            let fit = cascade_hazard(&exposures, &events, &bins, &post, &[], &[]).unwrap();
            let (rho, se) = fit.get("post").unwrap();
            assert!(
                (rho - 2.0_f64.ln()).abs() <= 3.0 * se,
                "S4: rho {rho} (se {se})"
            );
        }

        // S5: RD oracles — perfect step, then deep-vs-shallow silence
        let step_rows: Vec<RdRow> = (0..200)
            .map(|i| {
                let x = -0.5 + (i as f64 + 0.5) / 200.0;
                RdRow { running: x, uptake: (x >= 0.0) as u8 as f64, silence_depth: 0.0 }
            })
            .collect();
        let step = adoption_rd(&step_rows, 0.5).unwrap();
        assert!((step.jump - 1.0).abs() <= 1e-8, "S5 step jump {}", step.jump);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut rows = Vec::new();
        for &depth in &[0.2, 0.8] {
            let jump = 0.3 + 0.5 * depth;
            for i in 0..300 {
                let x = -0.5 + (i as f64 + 0.5) / 300.0;
                let d = (x >= 0.0) as u8 as f64;
                rows.push(RdRow {
                    running: x,
                    uptake: 0.1 + d * jump + 0.02 * (rng.random::<f64>() - 0.5),
                    silence_depth: depth,
                });
            }
        }
        let two = adoption_rd(&rows, 0.5).unwrap();
        let (b1, se1) = two.jump_x_depth.unwrap();
        assert!(b1 - 1.96 * se1 > 0.0, "S5 interaction {b1} (se {se1})");
    });
}

#[test]
fn criterion_10_reproducibility() {
    check(10, "CLI reproducibility", || {
        let bin = env!("CARGO_BIN_EXE_ladder");
        let tmp = std::env::temp_dir().join(format!("ladder-acc-{}", std::process::id()));
        std::fs::create_dir_all(&tmp).unwrap();
        let config = tmp.join("scenario.toml");
        std::fs::write(
            &config,
            r#"
[params]
mu = 0.0
sigma = 0.3
r = 0.05
k1 = 0.5
k2 = 0.5
lambda_bar = 4.0
clock_cost = 0.02
sigma_eps2 = 0.04
kappa = 1.0
m_bar = 1.0
a = 1.0
p = 0.0
c_d = 0.2
phi1 = 0.0
phi2 = 0.3

[params.payoff]
kind = "quadratic"
pi0 = 3.0
c_q = 1.0
z_peak = 0.0
eta = 0.0
p_lambda = 1.0

[[windows]]
space = "private-state"
center = 0.53
radius = 0.2

[sim]
horizon = 40.0
dt = 0.01
n_paths = 16
base_seed = 42
z0 = 0.0
m0 = 0.0
v0 = 1.0

[output]
dir = "unused"
write_events = true

[telemetry]
n_firms = 6
months = 40
leverage_min = 0.1
leverage_max = 1.0
phi2_min = 0.05
phi2_max = 0.5
"#,
        )
        .unwrap();
        let run = |out: &std::path::Path, threads: &str| {
            let status = std::process::Command::new(bin)
                .args([
                    "all",
                    "--config",
                    config.to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                    "--threads",
                    threads,
                ])
                .status()
                .unwrap();
            assert!(status.success(), "CLI run failed");
        };
        let (a, b) = (tmp.join("a"), tmp.join("b"));
        run(&a, "1");
        run(&b, "4");
        let mut names: Vec<String> = std::fs::read_dir(&a)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert!(names.contains(&"ladder.json".to_string()));
        assert!(names.contains(&"panel.csv".to_string()));
        assert!(names.contains(&"wedge.json".to_string()));
        assert!(names.contains(&"manifest.json".to_string()));
        for name in &names {
            let xa = std::fs::read(a.join(name)).unwrap();
            let xb = std::fs::read(b.join(name)).unwrap();
            assert_eq!(xa, xb, "output {name} differs across worker counts");
        }
        std::fs::remove_dir_all(&tmp).ok();
    });
}
