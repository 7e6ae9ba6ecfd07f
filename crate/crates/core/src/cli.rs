//! Command-line front end: argument and config-file parsing, dispatch and
//! output writing.
//!
//! Flags override values from the `--config` file, `FLAMELAB_OUTPUT_DIR`
//! overrides the file's output directory, and every completed run leaves a
//! `manifest.json` next to its outputs.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::evolution::{
    front_from_derivative, front_metrics, integrate, liapunov_monotone_report, measured_speed,
    seeded_noise, Equation, EvolutionProblem, FrontState,
};
use crate::io::{Cell, EpsilonSpec, Format, OutputSink, RunManifest, Sweep, Table, MANIFEST_NAME};
use crate::phase_plane::{
    bifurcation_diagram, steady_solution_on, Sign, EPSILON_MIN,
};
use crate::poles::{
    coalescent_steady, enumerate_family, flow_to_steady, hessian_classify, profile_from_poles,
    PoleSet, CATALOG_EPSILON_MIN,
};
use crate::spectral::{Grid, GridSpec, DEFAULT_N_MODES};
use crate::stability::{
    chi_witness, comparison_test, discrete_spectrum, translational_residual, trivial_spectrum,
    LinearizedOperator, TrivialEquation,
};
use crate::verify::{run_checks, Level};

pub const OUTPUT_DIR_ENV: &str = "FLAMELAB_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "flamelab-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    SteadyRs,
    BifurcationRs,
    Stability,
    Poles,
    CatalogMs,
    Verify,
}

/// Operator examined by the `stability` command.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    /// RS linearization about a steady profile.
    Rs,
    /// MS linearization about a coalescent profile.
    Ms,
    TrivialRs,
    TrivialMs,
}

#[derive(Debug, Default, Parser)]
#[command(name = "flamelab", version, about = "Flame-front equations on a channel")]
pub struct Args {
    /// Command to run; may also be given with --command or in the config file.
    #[arg(value_enum)]
    pub subcommand: Option<Command>,
    #[arg(long = "command", value_enum)]
    pub command: Option<Command>,
    /// TOML file with any of the options below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// start:stop:count[:linear|log]
    #[arg(long, conflicts_with = "epsilon")]
    pub sweep: Option<Sweep>,
    #[arg(long)]
    pub n_modes: Option<usize>,
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Branch index of an RS steady state.
    #[arg(long)]
    pub j: Option<usize>,
    /// Highest branch in a bifurcation diagram.
    #[arg(long)]
    pub j_max: Option<usize>,
    /// `+` or `-` (also `plus`/`minus`); for pole commands `+` is the line 0.
    #[arg(long, allow_hyphen_values = true)]
    pub sign: Option<Sign>,
    #[arg(long)]
    pub equation: Option<Equation>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub sample_every: Option<usize>,
    /// Amplitude of the seeded initial noise.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Highest mode of the seeded initial noise.
    #[arg(long)]
    pub max_mode: Option<usize>,
    #[arg(long, value_enum)]
    pub kind: Option<SpectrumKind>,
    /// Discretization size of the stability spectrum.
    #[arg(long)]
    pub n_grid: Option<usize>,
    #[arg(long)]
    pub n_pairs: Option<usize>,
    /// Initial pole heights on the line 0, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub heights: Option<Vec<f64>>,
    /// Initial pole heights on the line π, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub heights_pi: Option<Vec<f64>>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub level: Option<Level>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub n_modes: Option<usize>,
    pub n_points: Option<usize>,
    pub dealias_fraction: Option<f64>,
}

/// Contents of a config file; every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub epsilon: Option<EpsilonSpec>,
    pub grid: Option<GridFile>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub j: Option<usize>,
    pub j_max: Option<usize>,
    pub sign: Option<Sign>,
    pub equation: Option<Equation>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub sample_every: Option<usize>,
    pub amplitude: Option<f64>,
    pub max_mode: Option<usize>,
    pub kind: Option<SpectrumKind>,
    pub n_grid: Option<usize>,
    pub n_pairs: Option<usize>,
    pub heights: Option<Vec<f64>>,
    pub heights_pi: Option<Vec<f64>>,
    pub t_max: Option<f64>,
    pub tol: Option<f64>,
    pub level: Option<Level>,
}

impl FileConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// Fully resolved run configuration; echoed into the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub epsilon: Option<EpsilonSpec>,
    pub grid: GridSpec,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub format: Format,
    pub j: usize,
    pub j_max: usize,
    pub sign: Sign,
    pub equation: Equation,
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    pub amplitude: f64,
    pub max_mode: usize,
    pub kind: SpectrumKind,
    pub n_grid: usize,
    pub n_pairs: usize,
    pub heights: Option<Vec<f64>>,
    pub heights_pi: Vec<f64>,
    pub t_max: f64,
    pub tol: f64,
    pub level: Level,
}

/// Merges flags over the file, then checks the result. `env_output_dir` is
/// the value of [`OUTPUT_DIR_ENV`], if set.
pub fn parse_config(args: Args, env_output_dir: Option<PathBuf>) -> Result<RunConfig> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let command = args
        .subcommand
        .or(args.command)
        .or(file.command)
        .ok_or_else(|| Error::Config("no command given".into()))?;
    let epsilon = match (args.epsilon, args.sweep) {
        (Some(e), _) => Some(EpsilonSpec::Value(e)),
        (None, Some(s)) => Some(EpsilonSpec::Sweep(s)),
        (None, None) => file.epsilon,
    };
    let gf = file.grid.unwrap_or_default();
    let n_modes = args.n_modes.or(gf.n_modes).unwrap_or(DEFAULT_N_MODES);
    let mut grid = GridSpec::new(n_modes);
    if let Some(p) = args.n_points.or(gf.n_points) {
        grid.n_points = p;
    }
    if let Some(d) = gf.dealias_fraction {
        grid.dealias_fraction = d;
    }
    let output_dir = args
        .output_dir
        .or(env_output_dir)
        .or(file.output_dir)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let cfg = RunConfig {
        command,
        epsilon,
        grid,
        seed: args.seed.or(file.seed).unwrap_or(0),
        output_dir,
        format: args.format.or(file.format).unwrap_or_default(),
        j: args.j.or(file.j).unwrap_or(1),
        j_max: args.j_max.or(file.j_max).unwrap_or(4),
        sign: args.sign.or(file.sign).unwrap_or(Sign::Plus),
        equation: args.equation.or(file.equation).unwrap_or(Equation::Uform),
        dt: args.dt.or(file.dt).unwrap_or(crate::evolution::DEFAULT_DT),
        t_end: args.t_end.or(file.t_end).unwrap_or(10.0),
        sample_every: args.sample_every.or(file.sample_every).unwrap_or(100),
        amplitude: args.amplitude.or(file.amplitude).unwrap_or(0.05),
        max_mode: args.max_mode.or(file.max_mode).unwrap_or(8),
        kind: args.kind.or(file.kind).unwrap_or(SpectrumKind::Rs),
        n_grid: args.n_grid.or(file.n_grid).unwrap_or(256),
        n_pairs: args.n_pairs.or(file.n_pairs).unwrap_or(1),
        heights: args.heights.or(file.heights),
        heights_pi: args.heights_pi.or(file.heights_pi).unwrap_or_default(),
        t_max: args.t_max.or(file.t_max).unwrap_or(1e4),
        tol: args.tol.or(file.tol).unwrap_or(1e-8),
        level: args.level.or(file.level).unwrap_or(Level::Quick),
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn epsilons(&self) -> Result<Vec<f64>> {
        match &self.epsilon {
            Some(spec) => spec.values(),
            None => Err(Error::Config(format!("{:?} needs --epsilon or --sweep", self.command))),
        }
    }

    fn single_epsilon(&self) -> Result<f64> {
        let v = self.epsilons()?;
        match v.as_slice() {
            [e] => Ok(*e),
            _ => Err(Error::Config(format!("{:?} takes a single epsilon", self.command))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let check = |ok: bool, what: String| if ok { Ok(()) } else { Err(Error::Config(what)) };
        check(self.dt > 0.0 && self.dt.is_finite(), format!("dt = {} must be positive", self.dt))?;
        check(self.t_end > 0.0 && self.t_end.is_finite(), format!("t_end = {} must be positive", self.t_end))?;
        check(self.t_max > 0.0, format!("t_max = {} must be positive", self.t_max))?;
        check(self.tol > 0.0, format!("tol = {} must be positive", self.tol))?;
        check(self.sample_every > 0, "sample_every must be positive".into())?;
        check(self.j >= 1 && self.j_max >= 1, "j and j_max must be at least 1".into())?;
        check(self.n_pairs >= 1, "n_pairs must be at least 1".into())?;
        if self.command == Command::Verify {
            return Ok(());
        }
        let eps = self.epsilons()?;
        let in_range = |lo: f64, lo_open: bool, hi: f64, name: &str| -> Result<()> {
            for &e in &eps {
                let above = if lo_open { e > lo } else { e >= lo };
                if !(above && e < hi) {
                    let l = if lo_open { '(' } else { '[' };
                    return Err(Error::Config(format!(
                        "epsilon {e} outside the {name} range {l}{lo}, {hi})"
                    )));
                }
            }
            Ok(())
        };
        match self.command {
            Command::SteadyRs | Command::BifurcationRs => in_range(EPSILON_MIN, false, 1.0, "RS steady")?,
            Command::Stability => match self.kind {
                SpectrumKind::Rs => in_range(EPSILON_MIN, false, 1.0, "RS steady")?,
                SpectrumKind::Ms => in_range(0.0, true, 1.0, "MS coalescent")?,
                _ => in_range(0.0, true, f64::INFINITY, "positive")?,
            },
            Command::CatalogMs => in_range(CATALOG_EPSILON_MIN, true, 1.0, "catalog")?,
            Command::Simulate | Command::Poles => in_range(0.0, true, f64::INFINITY, "positive")?,
            Command::Verify => {}
        }
        if matches!(self.command, Command::Simulate | Command::Stability | Command::Poles) {
            self.single_epsilon()?;
        }
        Ok(())
    }
}

fn steady_rs(cfg: &RunConfig, sink: &mut OutputSink) -> Result<()> {
    let grid = Grid::new(cfg.grid)?;
    let states = cfg
        .epsilons()?
        .par_iter()
        .map(|&e| steady_solution_on(cfg.j, cfg.sign, e, &grid))
        .collect::<Result<Vec<_>>>()?;
    let mut summary = Table::new([
        "epsilon", "j", "sign", "w0", "wall_slope", "velocity", "velocity_energy", "delta_phi",
        "residual", "interior_zeros",
    ]);
    let mut profile = Table::new(["epsilon", "x", "v", "theta"]);
    for s in &states {
        summary.push(vec![
            s.epsilon.into(),
            s.j.into(),
            s.sign.to_string().into(),
            s.w0.into(),
            s.wall_slope.into(),
            s.velocity.into(),
            s.velocity_energy.into(),
            s.delta_phi().into(),
            s.residual().into(),
            s.interior_zeros().into(),
        ]);
        for ((x, v), t) in grid.points().iter().zip(s.v.values()).zip(s.theta.values()) {
            profile.push(vec![s.epsilon.into(), (*x).into(), (*v).into(), (*t).into()]);
        }
    }
    sink.write_table("steady", &summary)?;
    sink.write_table("profile", &profile)?;
    Ok(())
}

fn bifurcation(cfg: &RunConfig, sink: &mut OutputSink) -> Result<()> {
    let rows = bifurcation_diagram(&cfg.epsilons()?, cfg.j_max, cfg.grid)?;
    let mut t = Table::new(["epsilon", "j", "sign", "w0", "delta_phi", "V", "verdict"]);
    for r in rows {
        t.push(vec![
            r.epsilon.into(),
            r.j.into(),
            r.sign.to_string().into(),
            r.w0.into(),
            r.delta_phi.into(),
            r.velocity.into(),
            r.verdict.to_string().into(),
        ]);
    }
    sink.write_table("diagram", &t)?;
    Ok(())
}

fn trajectory_table(traj: &[FrontState]) -> Table {
    let n = traj.first().map_or(0, |s| s.field.values().len());
    let mut t = Table::new(std::iter::once("t".to_string()).chain((0..n).map(|i| format!("x_{i}"))));
    for s in traj {
        let mut row = vec![Cell::Num(s.time)];
        row.extend(s.field.values().iter().map(|&v| Cell::Num(v)));
        t.push(row);
    }
    t
}

fn simulate(cfg: &RunConfig, sink: &mut OutputSink) -> Result<()> {
    let eps = cfg.single_epsilon()?;
    let grid = Grid::new(cfg.grid)?;
    let problem = EvolutionProblem {
        equation: cfg.equation,
        epsilon: eps,
        grid: cfg.grid,
        dt: cfg.dt,
        t_end: cfg.t_end,
        sample_every: cfg.sample_every,
    };
    let init = seeded_noise(&grid, cfg.equation.parity(), cfg.seed, cfg.max_mode, cfg.amplitude);
    let traj = match integrate(&problem, &init) {
        Ok(t) => t,
        Err(Error::BlowUp { time, reason, state }) => {
            sink.write_table("blowup_state", &trajectory_table(std::slice::from_ref(&state)))?;
            return Err(Error::BlowUp { time, reason, state });
        }
        Err(e) => return Err(e),
    };
    let front = match cfg.equation {
        Equation::Uform => front_from_derivative(&traj, eps)?,
        _ => traj.clone(),
    };
    let t_last = traj.last().map_or(0.0, |s| s.time);
    let speed = measured_speed(&front, (0.5 * t_last, t_last)).ok();
    let liapunov = match cfg.equation {
        Equation::Uform => Some(liapunov_monotone_report(&traj, eps)?),
        _ => None,
    };
    sink.write_table("trajectory", &trajectory_table(&traj))?;
    let sidecar = json!({
        "equation": cfg.equation,
        "epsilon": eps,
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "n_samples": traj.len(),
        "x": grid.points(),
        "final_front": front.last().map(front_metrics),
        "speed_second_half": speed,
        "liapunov": liapunov,
    });
    sink.write_json("trajectory.json", &sidecar)?;
    Ok(())
}

fn line_of(sign: Sign) -> f64 {
    match sign {
        Sign::Plus => 0.0,
        Sign::Minus => std::f64::consts::PI,
    }
}

fn stability(cfg: &RunConfig, sink: &mut OutputSink) -> Result<()> {
    let eps = cfg.single_epsilon()?;
    let grid = Grid::new(cfg.grid)?;
    let out = match cfg.kind {
        SpectrumKind::Rs => {
            let s = steady_solution_on(cfg.j, cfg.sign, eps, &grid)?;
            let cmp = comparison_test(&s.v, eps)?;
            let spec = discrete_spectrum(&LinearizedOperator::rs_about(s.v.clone(), eps), cfg.n_grid)?;
            let chi = chi_witness(&s.v, eps).ok().map(|c| {
                json!({"c": c.c, "residual": c.residual, "min_chi": c.min_chi})
            });
            json!({
                "kind": cfg.kind,
                "epsilon": eps,
                "j": cfg.j,
                "sign": cfg.sign,
                "comparison": {"verdict": cmp.verdict, "first_zero": cmp.first_zero},
                "chi_witness": chi,
                "translational_residual": translational_residual(&s.v, eps)?,
                "spectrum": spec,
            })
        }
        SpectrumKind::Ms => {
            let poles = coalescent_steady(cfg.n_pairs, eps, line_of(cfg.sign))?;
            let v = profile_from_poles(&poles, &grid)?;
            let spec = discrete_spectrum(&LinearizedOperator::ms_about(v, eps), cfg.n_grid)?;
            json!({"kind": cfg.kind, "epsilon": eps, "poles": poles, "spectrum": spec})
        }
        SpectrumKind::TrivialRs | SpectrumKind::TrivialMs => {
            let (op, eq) = if cfg.kind == SpectrumKind::TrivialRs {
                (LinearizedOperator::trivial_rs(eps), TrivialEquation::Rs)
            } else {
                (LinearizedOperator::trivial_ms(eps), TrivialEquation::Ms)
            };
            json!({
                "kind": cfg.kind,
                "epsilon": eps,
                "closed_form": trivial_spectrum(eq, eps, cfg.n_grid)?,
                "spectrum": discrete_spectrum(&op, cfg.n_grid)?,
            })
        }
    };
    sink.write_json("spectrum.json", &out)?;
    Ok(())
}

fn poles(cfg: &RunConfig, sink: &mut OutputSink) -> Result<()> {
    let eps = cfg.single_epsilon()?;
    let start = match &cfg.heights {
        Some(h) => PoleSet::two_line(eps, h, &cfg.heights_pi)?,
        None => {
            let ladder: Vec<f64> = (1..=cfg.n_pairs).map(|j| 0.5 * j as f64).collect();
            let line = line_of(cfg.sign);
            PoleSet::new(
                eps,
                ladder
                    .into_iter()
                    .map(|h| crate::poles::PolePair { line, height: h })
                    .collect(),
            )?
        }
    };
    let (end, report) = flow_to_steady(&start, cfg.t_max, cfg.tol)?;
    let n = start.n();
    let mut t = Table::new(
        std::iter::once("t".to_string())
            .chain((1..=n).map(|i| format!("y_{i}")))
            .chain(std::iter::once("U".to_string())),
    );
    for ((time, ys), u) in report.times.iter().zip(&report.trajectory).zip(&report.liapunov_values) {
        let mut row = vec![Cell::Num(*time)];
        row.extend(ys.iter().map(|&y| Cell::Num(y)));
        row.push(Cell::Num(*u));
        t.push(row);
    }
    sink.write_table("pole_trajectory", &t)?;
    let hessian = if report.converged { Some(hessian_classify(&end)?) } else { None };
    let grid = Grid::new(cfg.grid)?;
    let v = profile_from_poles(&end, &grid)?;
    let mut profile = Table::new(["x", "v"]);
    for (x, y) in grid.points().iter().zip(v.values()) {
        profile.push(vec![(*x).into(), (*y).into()]);
    }
    sink.write_table("pole_profile", &profile)?;
    sink.write_json(
        "poles.json",
        &json!({
            "start": start,
            "end": end,
            "converged": report.converged,
            "final_force_norm": report.final_force_norm,
            "hessian": hessian,
            "ms_residual": crate::poles::ms_residual(&v, eps)?,
            "velocity": crate::poles::ms_velocity(&v),
        }),
    )?;
    Ok(())
}

fn catalog(cfg: &RunConfig, sink: &mut OutputSink) -> Result<()> {
    let eps = cfg.epsilons()?;
    let catalogs = eps
        .par_iter()
        .map(|&e| enumerate_family(e, cfg.grid).map(|c| (e, c)))
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new([
        "epsilon", "j", "k", "sign", "n_poles", "heights", "delta_phi", "V", "residual",
        "classification",
    ]);
    for (e, entries) in catalogs {
        for c in entries {
            let heights: Vec<String> = c.heights.iter().map(|&h| crate::io::format_float(h)).collect();
            t.push(vec![
                e.into(),
                c.j.into(),
                c.k.into(),
                c.sign.to_string().into(),
                c.n_poles.into(),
                heights.join(";").into(),
                c.delta_phi.into(),
                c.velocity.into(),
                c.residual.into(),
                c.classification.to_string().into(),
            ]);
        }
    }
    sink.write_table("catalog", &t)?;
    Ok(())
}

fn verify(cfg: &RunConfig, sink: &mut OutputSink) -> Result<()> {
    let results = run_checks(cfg.level);
    let mut t = Table::new(["id", "name", "status", "seconds", "detail"]);
    println!("{:>3}  {:<34} {:<6} detail", "id", "check", "status");
    for r in &results {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!("{:>3}  {:<34} {:<6} {}", r.id, r.name, status, r.detail);
        t.push(vec![r.id.into(), r.name.into(), status.into(), r.seconds.into(), r.detail.clone().into()]);
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} checks passed", results.len());
    sink.write_table("verify", &t)?;
    Ok(())
}

/// Runs `cfg`, writing outputs and the manifest into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let mut sink = OutputSink::create(&cfg.output_dir, cfg.format)?;
    let result = match cfg.command {
        Command::Simulate => simulate(cfg, &mut sink),
        Command::SteadyRs => steady_rs(cfg, &mut sink),
        Command::BifurcationRs => bifurcation(cfg, &mut sink),
        Command::Stability => stability(cfg, &mut sink),
        Command::Poles => poles(cfg, &mut sink),
        Command::CatalogMs => catalog(cfg, &mut sink),
        Command::Verify => verify(cfg, &mut sink),
    };
    let manifest = RunManifest {
        config: serde_json::to_value(cfg)?,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        completed: result.is_ok(),
        error: result.as_ref().err().map(|e| e.to_string()),
        outputs: sink.records().to_vec(),
    };
    match result {
        Ok(()) => {
            manifest.write(sink.dir())?;
            Ok(manifest)
        }
        Err(e) if e.is_input_error() => Err(e),
        Err(e) => {
            // numerical failure: keep whatever was written, flagged as partial
            if !manifest.outputs.is_empty() {
                manifest.write(sink.dir())?;
            }
            Err(e)
        }
    }
}

/// Exit status for an error: 2 for bad input, 3 for numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        2
    } else {
        3
    }
}

fn error_kind(e: &Error) -> &'static str {
    if e.is_input_error() {
        "invalid_input"
    } else {
        "numerical_failure"
    }
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) =>
        {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let report = json!({"status": 2, "kind": "invalid_input", "message": e.to_string()});
            eprintln!("{report}");
            return 2;
        }
    };
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    let result = parse_config(args, env_dir).and_then(|cfg| run(&cfg).map(|m| (cfg, m)));
    match result {
        Ok((cfg, _)) => {
            eprintln!("wrote {}", cfg.output_dir.join(MANIFEST_NAME).display());
            0
        }
        Err(e) => {
            let code = exit_code(&e);
            let report = json!({"status": code, "kind": error_kind(&e), "message": e.to_string()});
            eprintln!("{report}");
            code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        let a = Args::try_parse_from(std::iter::once("flamelab").chain(args.iter().copied()))
            .map_err(|e| Error::Config(e.to_string()))?;
        parse_config(a, None)
    }

    #[test]
    fn flags_and_positional_command() {
        let c = parse(&["steady-rs", "--epsilon", "0.5", "--j", "1", "--sign", "-"]).unwrap();
        assert_eq!(c.command, Command::SteadyRs);
        assert_eq!(c.sign, Sign::Minus);
        assert_eq!(c.seed, 0);
        let c = parse(&["--command", "catalog-ms", "--epsilon", "0.21"]).unwrap();
        assert_eq!(c.command, Command::CatalogMs);
    }

    #[test]
    fn out_of_range_epsilon_is_rejected() {
        let e = parse(&["--epsilon", "1.5", "--command", "steady-rs"]).unwrap_err();
        assert_eq!(exit_code(&e), 2);
        assert!(parse(&["catalog-ms", "--epsilon", "0.04"]).is_err());
        assert!(parse(&["simulate", "--sweep", "0.1:0.2:3"]).is_err());
    }

    #[test]
    fn file_values_and_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "command = \"bifurcation-rs\"\nseed = 4\nepsilon = { start = 0.05, stop = 0.95, count = 10, spacing = \"log\" }\n[grid]\nn_modes = 64\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let c = parse(&["--config", p]).unwrap();
        assert_eq!(c.epsilons().unwrap().len(), 10);
        assert_eq!(c.grid.n_modes, 64);
        assert_eq!(c.seed, 4);
        let c = parse(&["--config", p, "--seed", "9", "--epsilon", "0.3"]).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.epsilons().unwrap(), vec![0.3]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(FileConfig::from_toml("epsilon = 0.5\nbogus = 1\n").is_err());
        assert!(FileConfig::from_toml("[grid]\nn_mode = 3\n").is_err());
        assert_eq!(FileConfig::from_toml("").unwrap(), FileConfig::default());
    }

    #[test]
    fn output_dir_precedence() {
        let a = Args::try_parse_from(["flamelab", "verify"]).unwrap();
        let c = parse_config(a, Some("/tmp/env".into())).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("/tmp/env"));
        let a = Args::try_parse_from(["flamelab", "verify", "--output-dir", "/tmp/flag"]).unwrap();
        let c = parse_config(a, Some("/tmp/env".into())).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("/tmp/flag"));
    }
}
