//! Batch front-end: loads a TOML scenario, runs the requested stage(s), and
//! writes the artifact files plus a run manifest.

use crate::adoption::{buyer_value, solve_adoption};
use crate::financing::{
    debt_value_mc, solve_levered_equity, wedge_report, y_to_tight, FinancingError, LeverageMode,
};
use crate::ladder::{qvi_check, solve_ladder, LadderSolution, QviReport};
use crate::model::{validate, ScenarioConfig, ValidationReport};
use crate::sim::{batch_stats, simulate_batch, EventKind, Policy, SimPath};
use crate::telemetry::pipeline::run_telemetry;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser)]
#[command(name = "ladder", version, about = "Release-ladder model toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Args, Clone)]
pub struct Common {
    /// Scenario TOML file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config's output.dir).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed override.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Path-count override.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Worker threads (default: rayon's choice).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Subcommand, Clone)]
pub enum Cmd {
    /// Solve the free-boundary ladder and verify the QVI.
    SolveLadder(Common),
    /// Simulate paths under the solved policy.
    Simulate(Common),
    /// Solve the buyer's adoption cutoff and value curve.
    Adoption(Common),
    /// Levered equity, debt value, and the wedge decomposition.
    FinanceWedge(Common),
    /// Synthesize the firm-month panel and run the estimators.
    Telemetry(Common),
    /// Full pipeline: solve, simulate, adoption, wedge, telemetry.
    All(Common),
}

impl Cmd {
    fn common(&self) -> &Common {
        match self {
            Cmd::SolveLadder(c)
            | Cmd::Simulate(c)
            | Cmd::Adoption(c)
            | Cmd::FinanceWedge(c)
            | Cmd::Telemetry(c)
            | Cmd::All(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Cmd::SolveLadder(_) => "solve-ladder",
            Cmd::Simulate(_) => "simulate",
            Cmd::Adoption(_) => "adoption",
            Cmd::FinanceWedge(_) => "finance-wedge",
            Cmd::Telemetry(_) => "telemetry",
            Cmd::All(_) => "all",
        }
    }
}

#[derive(Debug, Serialize)]
struct ErrorJson<'a> {
    error: &'a str,
    detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    validation: Option<ValidationReport>,
}

enum CliError {
    Config(String, Option<ValidationReport>),
    Solver(String),
    Io(String),
}

impl CliError {
    fn emit(&self) -> i32 {
        let (kind, detail, validation, code) = match self {
            CliError::Config(d, v) => ("config", d.clone(), v.clone(), EXIT_CONFIG),
            CliError::Solver(d) => ("solver", d.clone(), None, EXIT_SOLVER),
            CliError::Io(d) => ("io", d.clone(), None, EXIT_IO),
        };
        let msg = ErrorJson { error: kind, detail, validation };
        eprintln!("{}", serde_json::to_string(&msg).unwrap());
        code
    }
}

fn io_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Io(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(io_err)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_file(path, &format!("{}\n", serde_json::to_string_pretty(value).unwrap()))
}

struct Ctx {
    config: ScenarioConfig,
    config_bytes: Vec<u8>,
    out: PathBuf,
    command: String,
}

impl Ctx {
    fn load(cmd: &Cmd) -> Result<Ctx, CliError> {
        let common = cmd.common();
        let config_bytes = std::fs::read(&common.config).map_err(io_err)?;
        let text = String::from_utf8(config_bytes.clone())
            .map_err(|e| CliError::Config(format!("config is not UTF-8: {e}"), None))?;
        let mut config: ScenarioConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("config parse error: {e}"), None))?;
        if let Some(seed) = common.seed {
            config.sim.base_seed = seed;
        }
        if let Some(paths) = common.paths {
            config.sim.n_paths = paths;
        }
        if let Some(out) = &common.out {
            config.output.dir = out.display().to_string();
        }
        let report = validate(&config);
        if !report.ok() {
            return Err(CliError::Config("config validation failed".into(), Some(report)));
        }
        let out = PathBuf::from(&config.output.dir);
        std::fs::create_dir_all(&out).map_err(io_err)?;
        Ok(Ctx { config, config_bytes, out, command: cmd.name().to_string() })
    }

    fn solve(&self) -> Result<(LadderSolution, QviReport), CliError> {
        let sol = solve_ladder(&self.config.params, None, 1e-12, 200)
            .map_err(|e| CliError::Solver(e.to_string()))?;
        let qvi = qvi_check(&sol, &self.config.params, 10_000, 1e-8);
        Ok((sol, qvi))
    }

    fn alpha(&self) -> f64 {
        let p = &self.config.params;
        solve_adoption(p.kappa, p.m_bar, p.r, p.a, p.p).alpha
    }

    fn manifest(&self) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            command: &'a str,
            config_sha256: String,
            seed: u64,
            n_paths: usize,
            defaults_version: &'a str,
        }
        let hash = Sha256::digest(&self.config_bytes);
        write_json(
            &self.out.join("manifest.json"),
            &Manifest {
                command: &self.command,
                config_sha256: format!("{hash:x}"),
                seed: self.config.sim.base_seed,
                n_paths: self.config.sim.n_paths,
                defaults_version: env!("CARGO_PKG_VERSION"),
            },
        )
    }
}

fn events_csv(path: &SimPath) -> String {
    let mut out = String::from("t,kind,y,z_pre,z_post,m,v\n");
    for e in &path.events {
        let (kind, y) = match e.kind {
            EventKind::Publication { y } => ("publication", y.to_string()),
            EventKind::Patch => ("patch", String::new()),
            EventKind::Pivot => ("pivot", String::new()),
            EventKind::Adoption => ("adoption", String::new()),
            EventKind::Default => ("default", String::new()),
            EventKind::HorizonEnd => ("horizon_end", String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.t, kind, y, e.z_pre, e.z_post, e.m, e.v
        ));
    }
    out
}

fn stage_solve(ctx: &Ctx) -> Result<LadderSolution, CliError> {
    let (sol, qvi) = ctx.solve()?;
    #[derive(Serialize)]
    struct LadderJson<'a> {
        solution: &'a LadderSolution,
        qvi: &'a QviReport,
    }
    write_json(&ctx.out.join("ladder.json"), &LadderJson { solution: &sol, qvi: &qvi })?;
    Ok(sol)
}

fn stage_simulate(ctx: &Ctx, sol: &LadderSolution) -> Result<(), CliError> {
    let policy = Policy::from_ladder(sol, Some(ctx.alpha()));
    let paths = simulate_batch(&ctx.config, &policy);
    let stats = batch_stats(&ctx.config, &paths);
    write_json(&ctx.out.join("batch_stats.json"), &stats)?;
    if ctx.config.output.write_events {
        for (i, path) in paths.iter().enumerate() {
            write_file(&ctx.out.join(format!("events_0_{i}.csv")), &events_csv(path))?;
        }
    }
    Ok(())
}

fn stage_adoption(ctx: &Ctx) -> Result<(), CliError> {
    let p = &ctx.config.params;
    let sol = solve_adoption(p.kappa, p.m_bar, p.r, p.a, p.p);
    write_json(&ctx.out.join("adoption.json"), &sol)?;
    let mut csv = String::from("m,w,tau\n");
    for i in 0..=200 {
        let m = sol.alpha - 1.0 + i as f64 / 200.0;
        let (w, tau) = buyer_value(m, sol.alpha, p.kappa, p.m_bar, p.r, sol.s_alpha);
        csv.push_str(&format!("{m},{w},{tau}\n"));
    }
    write_file(&ctx.out.join("adoption_curve.csv"), &csv)
}

fn stage_wedge(ctx: &Ctx, fb: &LadderSolution) -> Result<(), CliError> {
    let p = &ctx.config.params;
    let levered = match solve_levered_equity(p, None, LeverageMode::SafePatchBlock, 1e-10, 200) {
        Ok(l) => l,
        Err(FinancingError::InfeasibleMode { .. }) => {
            solve_levered_equity(p, None, LeverageMode::WithDefault, 1e-10, 200)
                .map_err(|e| CliError::Solver(e.to_string()))?
        }
        Err(e) => return Err(CliError::Solver(e.to_string())),
    };
    let report = wedge_report(&ctx.config, &levered.policy(), fb);
    let debt = debt_value_mc(&ctx.config, &levered, |z| y_to_tight(fb, z, p.phi1, p.phi2));
    #[derive(Serialize)]
    struct WedgeJson<'a> {
        levered: &'a crate::financing::LeveredSolution,
        report: &'a crate::financing::WedgeReport,
        debt: &'a crate::sim::Summary,
    }
    write_json(
        &ctx.out.join("wedge.json"),
        &WedgeJson { levered: &levered, report: &report, debt: &debt },
    )
}

fn stage_telemetry(ctx: &Ctx, sol: &LadderSolution) -> Result<(), CliError> {
    if ctx.config.telemetry.is_none() {
        return Err(CliError::Config(
            "telemetry section required for the telemetry command".into(),
            None,
        ));
    }
    let policy = Policy::from_ladder(sol, Some(ctx.alpha()));
    let run = run_telemetry(&ctx.config, &policy, ctx.alpha(), ctx.config.sim.base_seed)
        .map_err(|e| CliError::Solver(e.to_string()))?;
    write_file(&ctx.out.join("panel.csv"), &run.panel.to_csv())?;
    let est = &run.estimates;
    write_json(&ctx.out.join("estimates_event_study.json"), &est.event_study_signals)?;
    if let Some(d) = &est.event_study_dispersion {
        write_json(&ctx.out.join("estimates_event_study_dispersion.json"), d)?;
    }
    if let Some(p) = &est.plateau {
        write_json(&ctx.out.join("estimates_plateau.json"), p)?;
    }
    write_json(&ctx.out.join("estimates_patch_hazard.json"), &est.patch_hazard)?;
    write_json(&ctx.out.join("estimates_cascade.json"), &est.cascade)?;
    if let Some(rd) = &est.rd {
        write_json(&ctx.out.join("estimates_rd.json"), rd)?;
    }
    Ok(())
}

fn dispatch(cmd: &Cmd, ctx: &Ctx) -> Result<(), CliError> {
    match cmd {
        Cmd::SolveLadder(_) => {
            stage_solve(ctx)?;
        }
        Cmd::Simulate(_) => {
            let sol = stage_solve(ctx)?;
            stage_simulate(ctx, &sol)?;
        }
        Cmd::Adoption(_) => stage_adoption(ctx)?,
        Cmd::FinanceWedge(_) => {
            let sol = stage_solve(ctx)?;
            stage_wedge(ctx, &sol)?;
        }
        Cmd::Telemetry(_) => {
            let sol = stage_solve(ctx)?;
            stage_telemetry(ctx, &sol)?;
        }
        Cmd::All(_) => {
            let sol = stage_solve(ctx)?;
            stage_simulate(ctx, &sol)?;
            stage_adoption(ctx)?;
            stage_wedge(ctx, &sol)?;
            if ctx.config.telemetry.is_some() {
                stage_telemetry(ctx, &sol)?;
            }
        }
    }
    ctx.manifest()
}

/// Entry point: returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let common = cli.cmd.common();
    if let Some(threads) = common.threads {
        // the CLI owns the worker pool; modules never configure their own
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let ctx = match Ctx::load(&cli.cmd) {
        Ok(c) => c,
        Err(e) => return e.emit(),
    };
    match dispatch(&cli.cmd, &ctx) {
        Ok(()) => 0,
        Err(e) => e.emit(),
    }
}
