//! Event-driven Monte Carlo: Euler-Maruyama private state, Cox publication
//! clock simulated by thinning against lambda_bar, impulse resets at the
//! band edges, belief filtering, adoption stopping, optional default.

use crate::belief::{drift_step, publication_update, BeliefState};
use crate::ladder::LadderSolution;
use crate::model::{derive_seed, ScenarioConfig, SilenceWindow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum EventKind {
    Publication { y: f64 },
    Patch,
    Pivot,
    Adoption,
    Default,
    HorizonEnd,
}

/// One timestamped event. `m`/`v` are the public belief at the event time,
/// before the event's own update is applied (so a publication row carries the
/// prior the outside world held when the signal landed).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: f64,
    pub kind: EventKind,
    pub z_pre: f64,
    pub z_post: f64,
    pub m: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PathStats {
    pub n_publications: u64,
    pub n_patches: u64,
    pub n_pivots: u64,
    /// Total time the clock-off condition held (left-point accounting).
    pub residence_time: f64,
    pub disc_flow: f64,
    pub disc_clock_cost: f64,
    pub disc_reset_cost: f64,
    pub first_adoption: Option<f64>,
    pub default_time: Option<f64>,
    pub z_end: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimPath {
    pub events: Vec<EventRecord>,
    pub stats: PathStats,
}

/// What happens at the upper edge of the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum UpperAction {
    Pivot,
    Default,
}

/// Reset policy the simulator executes. `beta2` is the default boundary z_d
/// when `upper_action == Default`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Policy {
    pub beta1: f64,
    pub z1_star: f64,
    pub beta2: f64,
    pub z2_star: f64,
    pub upper_action: UpperAction,
    pub alpha: Option<f64>,
}

impl Policy {
    pub fn from_ladder(sol: &LadderSolution, alpha: Option<f64>) -> Self {
        Policy {
            beta1: sol.beta1,
            z1_star: sol.z1_star,
            beta2: sol.beta2,
            z2_star: sol.z2_star,
            upper_action: UpperAction::Pivot,
            alpha,
        }
    }
}

fn in_window(windows: &[SilenceWindow], z: f64, m: f64) -> bool {
    windows.iter().any(|w| w.contains(z, m))
}

/// Simulate one path of the full model under an explicit reset policy.
pub fn simulate_policy(config: &ScenarioConfig, policy: &Policy, seed: u64) -> SimPath {
    let p = &config.params;
    let sim = &config.sim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let gap = if p.lambda_bar > 0.0 { Exp::new(p.lambda_bar).ok() } else { None };

    let mut events = Vec::new();
    let mut stats = PathStats::default();
    let mut t = 0.0f64;
    let mut z = sim.z0;
    let mut belief = BeliefState { m: sim.m0, v: sim.v0 };
    let mut belief_t = 0.0f64;
    let mut adopted = false;
    let horizon = sim.horizon;
    let mut next_pub = match &gap {
        Some(g) => g.sample(&mut rng),
        None => f64::INFINITY,
    };
    let k_on = p.clock_cost_at(p.lambda_bar);

    'outer: while t < horizon - 1e-12 {
        let step = sim.dt.min(horizon - t);
        let eps: f64 = normal.sample(&mut rng);
        let z_new = z + p.mu * step + p.sigma * step.sqrt() * eps;

        // first boundary crossing within the step, by linear interpolation
        enum Hit {
            Lower,
            Upper,
        }
        let mut hit = None;
        let mut frac = 1.0f64;
        if z_new <= policy.beta1 && z > policy.beta1 {
            frac = (policy.beta1 - z) / (z_new - z);
            hit = Some(Hit::Lower);
        }
        if z_new >= policy.beta2 && z < policy.beta2 {
            let f2 = (policy.beta2 - z) / (z_new - z);
            if f2 < frac {
                frac = f2;
                hit = Some(Hit::Upper);
            }
        }
        let (t_seg, z_seg) = match hit {
            Some(Hit::Lower) => (t + frac * step, policy.beta1),
            Some(Hit::Upper) => (t + frac * step, policy.beta2),
            None => (t + step, z_new),
        };

        // belief at segment start, for left-point flow/clock accounting
        let m_start = drift_step(belief, t - belief_t, p.kappa, p.m_bar, p.sigma).m;
        let silent_start = in_window(&config.windows, z, m_start);

        // publication candidates landing in (t, t_seg]
        while next_pub <= t_seg {
            let b = drift_step(belief, next_pub - belief_t, p.kappa, p.m_bar, p.sigma);
            belief = b;
            belief_t = next_pub;
            let z_at = z + (z_new - z) * (next_pub - t) / step;
            if !in_window(&config.windows, z_at, b.m) {
                let noise: f64 = normal.sample(&mut rng);
                let y = z_at + p.sigma_eps2.sqrt() * noise;
                events.push(EventRecord {
                    t: next_pub,
                    kind: EventKind::Publication { y },
                    z_pre: z_at,
                    z_post: z_at,
                    m: b.m,
                    v: b.v,
                });
                stats.n_publications += 1;
                belief = publication_update(belief, y, p.sigma_eps2)
                    .expect("posterior variance stays positive");
                if !adopted {
                    if let Some(alpha) = policy.alpha {
                        if belief.m >= alpha {
                            adopted = true;
                            stats.first_adoption = Some(next_pub);
                            events.push(EventRecord {
                                t: next_pub,
                                kind: EventKind::Adoption,
                                z_pre: z_at,
                                z_post: z_at,
                                m: belief.m,
                                v: belief.v,
                            });
                        }
                    }
                }
            }
            next_pub += match &gap {
                Some(g) => g.sample(&mut rng),
                None => f64::INFINITY,
            };
        }

        // discounted flow, clock cost, and window residence on [t, t_seg)
        let seg = t_seg - t;
        if seg > 0.0 {
            let disc = (-p.r * t).exp() * (1.0 - (-p.r * seg).exp()) / p.r;
            stats.disc_flow += p.payoff.eval(z, adopted) * disc;
            if silent_start {
                stats.residence_time += seg;
            } else {
                stats.disc_clock_cost += k_on * disc;
            }
        }

        // advance belief to the segment end
        belief = drift_step(belief, t_seg - belief_t, p.kappa, p.m_bar, p.sigma);
        belief_t = t_seg;
        if !adopted {
            if let Some(alpha) = policy.alpha {
                if belief.m >= alpha {
                    adopted = true;
                    stats.first_adoption = Some(t_seg);
                    events.push(EventRecord {
                        t: t_seg,
                        kind: EventKind::Adoption,
                        z_pre: z_seg,
                        z_post: z_seg,
                        m: belief.m,
                        v: belief.v,
                    });
                }
            }
        }

        t = t_seg;
        match hit {
            Some(Hit::Lower) => {
                events.push(EventRecord {
                    t,
                    kind: EventKind::Patch,
                    z_pre: policy.beta1,
                    z_post: policy.z1_star,
                    m: belief.m,
                    v: belief.v,
                });
                stats.n_patches += 1;
                stats.disc_reset_cost += p.k1 * (-p.r * t).exp();
                z = policy.z1_star;
            }
            Some(Hit::Upper) => match policy.upper_action {
                UpperAction::Pivot => {
                    events.push(EventRecord {
                        t,
                        kind: EventKind::Pivot,
                        z_pre: policy.beta2,
                        z_post: policy.z2_star,
                        m: belief.m,
                        v: belief.v,
                    });
                    stats.n_pivots += 1;
                    stats.disc_reset_cost += p.k2 * (-p.r * t).exp();
                    z = policy.z2_star;
                }
                UpperAction::Default => {
                    events.push(EventRecord {
                        t,
                        kind: EventKind::Default,
                        z_pre: policy.beta2,
                        z_post: policy.beta2,
                        m: belief.m,
                        v: belief.v,
                    });
                    stats.default_time = Some(t);
                    z = policy.beta2;
                    break 'outer;
                }
            },
            None => {
                z = z_new;
            }
        }
    }

    if stats.default_time.is_none() {
        events.push(EventRecord {
            t: horizon,
            kind: EventKind::HorizonEnd,
            z_pre: z,
            z_post: z,
            m: belief.m,
            v: belief.v,
        });
        t = horizon;
    }
    stats.z_end = z;
    stats.t_end = t;
    SimPath { events, stats }
}

/// Simulate one path under a converged ladder (pivot at the upper trigger).
pub fn simulate_path(
    config: &ScenarioConfig,
    ladder: &LadderSolution,
    alpha: Option<f64>,
    seed: u64,
) -> SimPath {
    simulate_policy(config, &Policy::from_ladder(ladder, alpha), seed)
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
}

fn summarize(xs: impl Iterator<Item = f64> + Clone) -> Summary {
    let n = xs.clone().count();
    if n == 0 {
        return Summary { mean: f64::NAN, se: f64::NAN };
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return Summary { mean, se: 0.0 };
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Summary { mean, se: (var / n as f64).sqrt() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchStats {
    pub n_paths: usize,
    pub publications: Summary,
    pub patches: Summary,
    pub pivots: Summary,
    pub disc_flow: Summary,
    pub disc_clock_cost: Summary,
    pub disc_reset_cost: Summary,
    pub residence_time: Summary,
    pub n_adopted: usize,
    pub adoption_time: Option<Summary>,
    pub n_defaulted: usize,
    /// Mean of e^{-r T*} with non-defaulting paths contributing 0.
    pub default_discount: Summary,
}

/// Simulate `n_paths` independent paths; per-path seeds come from
/// `derive_seed`, and the ordered collect keeps aggregation independent of
/// the worker count.
pub fn simulate_batch(config: &ScenarioConfig, policy: &Policy) -> Vec<SimPath> {
    (0..config.sim.n_paths)
        .into_par_iter()
        .map(|i| simulate_policy(config, policy, derive_seed(config.sim.base_seed, i as u64)))
        .collect()
}

pub fn batch_stats(config: &ScenarioConfig, paths: &[SimPath]) -> BatchStats {
    let r = config.params.r;
    let s = |f: &dyn Fn(&PathStats) -> f64| summarize(paths.iter().map(|p| f(&p.stats)));
    let adopters: Vec<f64> =
        paths.iter().filter_map(|p| p.stats.first_adoption).collect();
    BatchStats {
        n_paths: paths.len(),
        publications: s(&|st| st.n_publications as f64),
        patches: s(&|st| st.n_patches as f64),
        pivots: s(&|st| st.n_pivots as f64),
        disc_flow: s(&|st| st.disc_flow),
        disc_clock_cost: s(&|st| st.disc_clock_cost),
        disc_reset_cost: s(&|st| st.disc_reset_cost),
        residence_time: s(&|st| st.residence_time),
        n_adopted: adopters.len(),
        adoption_time: if adopters.is_empty() {
            None
        } else {
            Some(summarize(adopters.iter().copied()))
        },
        n_defaulted: paths.iter().filter(|p| p.stats.default_time.is_some()).count(),
        default_discount: s(&|st| st.default_time.map_or(0.0, |tt| (-r * tt).exp())),
    }
}

/// Convenience wrapper: simulate and aggregate.
pub fn run_batch(config: &ScenarioConfig, policy: &Policy) -> BatchStats {
    batch_stats(config, &simulate_batch(config, policy))
}

/// First exit times from a band by Euler-Maruyama with interpolated
/// crossing; paths alive at the horizon report the horizon.
pub fn exit_times_mc(
    mu: f64,
    sigma: f64,
    band: (f64, f64),
    z0: f64,
    dt: f64,
    horizon: f64,
    n_paths: usize,
    base_seed: u64,
) -> Vec<f64> {
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base_seed, i as u64));
            let normal = StandardNormal;
            let mut z = z0;
            let mut t = 0.0;
            while t < horizon {
                let eps: f64 = normal.sample(&mut rng);
                let z_new = z + mu * dt + sigma * dt.sqrt() * eps;
                if z_new <= band.0 {
                    return t + dt * (band.0 - z) / (z_new - z);
                }
                if z_new >= band.1 {
                    return t + dt * (band.1 - z) / (z_new - z);
                }
                z = z_new;
                t += dt;
            }
            horizon
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidenceRow {
    pub delta: f64,
    pub residence: Summary,
    /// Expected clock-cost saving per path: k(lambda_bar) x residence.
    pub clock_cost_saving: f64,
}

/// Re-run the batch for each window radius delta (same seeds) and tabulate
/// window residence, for the O(delta) scaling check.
pub fn window_residence_report(
    config: &ScenarioConfig,
    policy: &Policy,
    radii: &[f64],
) -> Vec<ResidenceRow> {
    radii
        .iter()
        .map(|&delta| {
            let mut cfg = config.clone();
            for w in &mut cfg.windows {
                w.radius = delta;
            }
            let stats = run_batch(&cfg, policy);
            ResidenceRow {
                delta,
                clock_cost_saving: config.params.clock_cost_at(config.params.lambda_bar)
                    * stats.residence_time.mean,
                residence: stats.residence_time,
            }
        })
        .collect()
}
