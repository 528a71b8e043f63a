//! Shared domain types, scenario configuration, validation, and seeding.

use serde::{Deserialize, Serialize};

/// Shape of the deterministic flow payoff in the private state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayoffKind {
    Constant,
    Quadratic,
}

/// Flow payoff pi(z, m) = pi0(z) + eta * p_lambda * 1{m >= alpha}.
///
/// `pi0(z)` is either the constant `pi0` or the concave quadratic
/// `pi0 - c_q (z - z_peak)^2`. The adoption bump is a step in the public
/// belief mean at the cutoff `alpha` supplied by the caller.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FlowPayoff {
    pub kind: PayoffKind,
    pub pi0: f64,
    #[serde(default)]
    pub c_q: f64,
    #[serde(default)]
    pub z_peak: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "one")]
    pub p_lambda: f64,
}

fn one() -> f64 {
    1.0
}

impl FlowPayoff {
    pub fn quadratic(pi0: f64, c_q: f64, z_peak: f64) -> Self {
        FlowPayoff { kind: PayoffKind::Quadratic, pi0, c_q, z_peak, eta: 0.0, p_lambda: 1.0 }
    }

    pub fn constant(pi0: f64) -> Self {
        FlowPayoff { kind: PayoffKind::Constant, pi0, c_q: 0.0, z_peak: 0.0, eta: 0.0, p_lambda: 1.0 }
    }

    /// Base payoff pi0(z), excluding the adoption term.
    pub fn base(&self, z: f64) -> f64 {
        match self.kind {
            PayoffKind::Constant => self.pi0,
            PayoffKind::Quadratic => {
                let d = z - self.z_peak;
                self.pi0 - self.c_q * d * d
            }
        }
    }

    /// Full flow payoff given whether the buyer has adopted.
    pub fn eval(&self, z: f64, adopted: bool) -> f64 {
        self.base(z) + if adopted { self.eta * self.p_lambda } else { 0.0 }
    }

    /// Coefficients (p2, p1, p0) of pi0(z) = p2 z^2 + p1 z + p0.
    pub fn poly(&self) -> (f64, f64, f64) {
        match self.kind {
            PayoffKind::Constant => (0.0, 0.0, self.pi0),
            PayoffKind::Quadratic => (
                -self.c_q,
                2.0 * self.c_q * self.z_peak,
                self.pi0 - self.c_q * self.z_peak * self.z_peak,
            ),
        }
    }
}

/// All primitives of one scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    /// Drift of the private state (constant benchmark).
    pub mu: f64,
    /// Diffusion coefficient, > 0.
    pub sigma: f64,
    /// Discount rate, > 0.
    pub r: f64,
    pub payoff: FlowPayoff,
    /// Fixed reset costs: patch and pivot, 0 <= k1 < k2 (equality tolerated
    /// for the symmetric benchmark).
    pub k1: f64,
    pub k2: f64,
    /// Maximum publication intensity.
    pub lambda_bar: f64,
    /// Quadratic clock-cost parameter: k(lambda) = c_k lambda^2 / 2.
    #[serde(default)]
    pub clock_cost: f64,
    /// Publication signal noise variance.
    pub sigma_eps2: f64,
    /// Belief drift: mdot = kappa (m_bar - m).
    pub kappa: f64,
    pub m_bar: f64,
    /// Linear buyer surplus S(m) = a m - p.
    pub a: f64,
    pub p: f64,
    /// Debt coupon flow.
    #[serde(default)]
    pub c_d: f64,
    /// Takeover switching costs for patch and pivot.
    #[serde(default)]
    pub phi1: f64,
    #[serde(default)]
    pub phi2: f64,
}

impl ModelParams {
    pub fn phi_max(&self) -> f64 {
        self.phi1.max(self.phi2)
    }

    /// Clock cost k(lambda) = c_k lambda^2 / 2.
    pub fn clock_cost_at(&self, lambda: f64) -> f64 {
        0.5 * self.clock_cost * lambda * lambda
    }

    pub fn validation_errors(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.sigma > 0.0) {
            v.push("sigma > 0 required".into());
        }
        if !(self.r > 0.0) {
            v.push("r > 0 required".into());
        }
        if self.k1 < 0.0 {
            v.push("k1 >= 0 required".into());
        }
        if self.k1 > self.k2 {
            v.push("k1 < k2 required".into());
        }
        if !(self.lambda_bar > 0.0) {
            v.push("lambda_bar > 0 required".into());
        }
        if !(self.sigma_eps2 > 0.0) {
            v.push("sigma_eps2 > 0 required".into());
        }
        if self.payoff.c_q < 0.0 {
            v.push("payoff.c_q >= 0 required".into());
        }
        if self.payoff.eta < 0.0 {
            v.push("payoff.eta >= 0 required".into());
        }
        if !(self.kappa > 0.0) {
            v.push("kappa > 0 required".into());
        }
        if !(self.a > 0.0) {
            v.push("a > 0 required".into());
        }
        if self.p < 0.0 {
            v.push("p >= 0 required".into());
        }
        if self.c_d < 0.0 {
            v.push("c_d >= 0 required".into());
        }
        if self.phi1 < 0.0 || self.phi2 < 0.0 {
            v.push("phi1, phi2 >= 0 required".into());
        }
        for x in [self.mu, self.clock_cost, self.m_bar] {
            if !x.is_finite() {
                v.push("all parameters must be finite".into());
                break;
            }
        }
        v
    }
}

/// Coordinate in which a silence window is posted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowSpace {
    PrivateState,
    BeliefMean,
}

/// Posted clock-off region: lambda = 0 while the tracked coordinate is
/// within `radius` of `center`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SilenceWindow {
    pub space: WindowSpace,
    pub center: f64,
    pub radius: f64,
}

impl SilenceWindow {
    pub fn contains(&self, z: f64, m: f64) -> bool {
        let x = match self.space {
            WindowSpace::PrivateState => z,
            WindowSpace::BeliefMean => m,
        };
        (x - self.center).abs() < self.radius
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    pub base_seed: u64,
    /// Initial private state / belief; default to the payoff peak and prior.
    #[serde(default)]
    pub z0: f64,
    #[serde(default)]
    pub m0: f64,
    #[serde(default = "one")]
    pub v0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: String,
    #[serde(default)]
    pub write_events: bool,
    #[serde(default)]
    pub write_value_csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into(), write_events: false, write_value_csv: false }
    }
}

/// Telemetry-panel generation settings (only used by the `telemetry` command).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TelemetryConfig {
    pub n_firms: usize,
    pub months: usize,
    #[serde(default = "one")]
    pub month_length: f64,
    #[serde(default = "default_max_lag")]
    pub max_lag: i64,
    #[serde(default = "default_event_window")]
    pub event_window: i64,
    /// Coupon range across firms (linearly spaced).
    pub leverage_min: f64,
    pub leverage_max: f64,
    /// Pivot takeover-cost range across firms.
    pub phi2_min: f64,
    pub phi2_max: f64,
    #[serde(default = "one")]
    pub phi_ref: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
}

fn default_max_lag() -> i64 {
    6
}

fn default_event_window() -> i64 {
    4
}

fn default_replications() -> usize {
    1
}

/// One scenario: primitives plus simulation, window, and output plumbing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub params: ModelParams,
    pub sim: SimConfig,
    #[serde(default)]
    pub windows: Vec<SilenceWindow>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub telemetry: Option<TelemetryConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Collect every violated invariant; the config is usable iff the report is empty.
pub fn validate(config: &ScenarioConfig) -> ValidationReport {
    let mut violations = config.params.validation_errors();
    if !(config.sim.dt > 0.0) {
        violations.push("sim.dt > 0 required".into());
    }
    if !(config.sim.horizon > 0.0) {
        violations.push("sim.horizon > 0 required".into());
    }
    if config.sim.n_paths == 0 {
        violations.push("sim.n_paths >= 1 required".into());
    }
    if !(config.sim.v0 > 0.0) {
        violations.push("sim.v0 > 0 required".into());
    }
    for (i, w) in config.windows.iter().enumerate() {
        if !(w.radius > 0.0) {
            violations.push(format!("windows[{i}].radius > 0 required"));
        }
    }
    if let Some(t) = &config.telemetry {
        if t.n_firms == 0 {
            violations.push("telemetry.n_firms >= 1 required".into());
        }
        if t.months == 0 {
            violations.push("telemetry.months >= 1 required".into());
        }
        if !(t.month_length > 0.0) {
            violations.push("telemetry.month_length > 0 required".into());
        }
        if !(t.phi_ref > 0.0) {
            violations.push("telemetry.phi_ref > 0 required".into());
        }
    }
    ValidationReport { violations }
}

/// Per-path seed via counter-mode SplitMix64 mixing. Bijective in the index
/// for a fixed base, so distinct paths never collide.
pub fn derive_seed(base_seed: u64, path_index: u64) -> u64 {
    let mut z = base_seed ^ path_index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Benchmark scenario: symmetric quadratic payoff, equal reset costs.
pub fn benchmark_config() -> ScenarioConfig {
    ScenarioConfig {
        params: ModelParams {
            mu: 0.0,
            sigma: 0.3,
            r: 0.05,
            payoff: FlowPayoff::quadratic(0.0, 1.0, 0.0),
            k1: 0.5,
            k2: 0.5,
            lambda_bar: 4.0,
            clock_cost: 0.02,
            sigma_eps2: 0.04,
            kappa: 1.0,
            m_bar: 1.0,
            a: 1.0,
            p: 0.0,
            c_d: 0.0,
            phi1: 0.0,
            phi2: 0.0,
        },
        sim: SimConfig {
            horizon: 120.0,
            dt: 1e-3,
            n_paths: 200,
            base_seed: 42,
            z0: 0.0,
            m0: 0.0,
            v0: 1.0,
        },
        windows: Vec::new(),
        output: OutputConfig::default(),
        telemetry: None,
    }
}
