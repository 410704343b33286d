//! Experiment runner: reads a config, computes, writes CSV tables and a manifest.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::control::{optimize, ControlProblem, Objective};
use crate::dynamics::{ControlPulse, Parameter};
use crate::error::Error;
use crate::flows::{analyze_scenario, FlowScenario, ScenarioSpec};
use crate::metrology::{fig5_povm, qfi_curve, total_qfi};
use crate::model::InitialStateParam;
use crate::nonmarkov::{blp_measure_on, BlpOptions};
use crate::speedlimits::{qsl_map, QslOptions, DEFAULT_HORIZON_FACTOR};
use crate::sweep::fisher_sweep;

pub use config::{AxisSpec, Config, ExperimentKind, ResolvedConfig};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Schema(String),
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Schema(e.to_string())
        }
    }
}

/// Floats are written with 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

/// One CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

fn f(x: f64) -> String {
    format_float(x)
}

/// Runs the experiment described by `cfg` and returns its tables.
pub fn execute(cfg: &ResolvedConfig) -> Result<Report, CliError> {
    let tables = match cfg.kind {
        ExperimentKind::FisherSweep => vec![fisher_sweep_table(cfg)?],
        ExperimentKind::QslSweep => vec![qsl_table(cfg, false)?],
        ExperimentKind::QslMap => vec![qsl_table(cfg, true)?],
        ExperimentKind::OptimizeSweep => optimize_sweep_tables(cfg)?,
        ExperimentKind::Blp => blp_tables(cfg)?,
        ExperimentKind::FlowsTriptych => flows_triptych(cfg)?,
        ExperimentKind::FlowsTags => flows_tags(cfg)?,
    };
    Ok(Report { tables })
}

fn fisher_sweep_table(cfg: &ResolvedConfig) -> Result<Table, CliError> {
    let m = cfg.model()?;
    let cells = fisher_sweep(&m, &cfg.grid()?, &Parameter::ALL, Some(cfg.grid_points))?;
    let mut t = Table::new("fisher_sweep", &["s", "phi", "tag", "f_tot"]);
    for c in &cells {
        for s in &c.summaries {
            t.push(vec![f(c.param.s), f(c.param.phi), s.tag.as_str().into(), f(s.total)]);
        }
    }
    Ok(t)
}

fn saturation_label(fisher: bool, op: bool) -> &'static str {
    match (fisher, op) {
        (false, false) => "none",
        (true, false) => "fisher",
        (false, true) => "op",
        (true, true) => "both",
    }
}

/// `log tau` per cell; the map variant subtracts the minimum finite value.
fn qsl_table(cfg: &ResolvedConfig, shift: bool) -> Result<Table, CliError> {
    let m = cfg.model()?;
    let opts = QslOptions {
        horizon_factor: DEFAULT_HORIZON_FACTOR,
        grid_points: Some(cfg.grid_points * DEFAULT_HORIZON_FACTOR as usize),
    };
    let cells = qsl_map(&m, &cfg.grid()?.cells(), cfg.target_angle, &opts)?;
    let log_f: Vec<f64> = cells.iter().map(|c| c.fisher.tau.as_f64().ln()).collect();
    let log_op: Vec<f64> = cells.iter().map(|c| c.opnorm.tau.as_f64().ln()).collect();
    let floor = |v: &[f64]| {
        if shift {
            v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min)
        } else {
            0.0
        }
    };
    let (mf, mo) = (floor(&log_f), floor(&log_op));
    let name = if shift { "qsl_map" } else { "qsl_sweep" };
    let mut t = Table::new(name, &["s", "phi", "tau_f", "tau_op", "traveled", "saturated"]);
    for (k, c) in cells.iter().enumerate() {
        let sub = |v: f64, m: f64| if m.is_finite() { v - m } else { v };
        t.push(vec![
            f(c.param.s),
            f(c.param.phi),
            f(sub(log_f[k], mf)),
            f(sub(log_op[k], mo)),
            f(c.opnorm.traveled),
            saturation_label(c.fisher.tau.is_saturated(), c.opnorm.tau.is_saturated()).into(),
        ]);
    }
    Ok(t)
}

fn control_problem(cfg: &ResolvedConfig, x0: InitialStateParam, objective: Objective) -> Result<ControlProblem, CliError> {
    let mut p = ControlProblem::new(cfg.model()?, x0, objective, cfg.seed);
    p.segments = cfg.segments;
    p.eps_max = cfg.eps_max;
    p.restarts = cfg.restarts;
    Ok(p)
}

fn pulse_rows(t: &mut Table, prefix: Vec<String>, pulse: &ControlPulse) {
    for (k, a) in pulse.amplitudes().iter().enumerate() {
        let mut row = prefix.clone();
        row.push(k.to_string());
        row.push(f(*a));
        t.push(row);
    }
}

fn optimize_sweep_tables(cfg: &ResolvedConfig) -> Result<Vec<Table>, CliError> {
    let cells = cfg.grid()?.cells();
    let results: Vec<(InitialStateParam, [f64; 4], ControlPulse)> = cells
        .par_iter()
        .map(|p| -> Result<_, CliError> {
            let free = uncontrolled_objective_curve(cfg, p)?;
            let sol = optimize(&control_problem(cfg, *p, cfg.objective)?)?;
            Ok((*p, [free.0, free.1, free.2, sol.objective_value], sol.pulse))
        })
        .collect::<Result<_, _>>()?;
    let mut t = Table::new(
        "optimize_sweep",
        &["s", "phi", "f_final_free", "f_max_free", "f_tot_free", "f_final_optimized"],
    );
    let mut pulses = Table::new("optimize_pulses", &["s", "phi", "segment", "amplitude"]);
    for (p, v, pulse) in &results {
        t.push(vec![f(p.s), f(p.phi), f(v[0]), f(v[1]), f(v[2]), f(v[3])]);
        pulse_rows(&mut pulses, vec![f(p.s), f(p.phi)], pulse);
    }
    Ok(vec![t, pulses])
}

/// `(A(T), max_t A(t), int A dt)` of the objective quantity without control.
fn uncontrolled_objective_curve(cfg: &ResolvedConfig, p: &InitialStateParam) -> Result<(f64, f64, f64), CliError> {
    let m = cfg.model()?;
    let pulse = ControlPulse::zero(1, m.horizon)?;
    let tags: Vec<Parameter> = cfg.objective.parameter().into_iter().collect();
    let traj = crate::dynamics::propagate(&m, &p.amplitudes(), &pulse, cfg.grid_points, &tags)?;
    let values = match cfg.objective.parameter() {
        Some(tag) => qfi_curve(&traj, tag)?.values,
        None => traj.states.iter().map(crate::entanglement::concurrence_closed).collect(),
    };
    let curve = crate::metrology::FisherCurve {
        tag: tags.first().copied().unwrap_or(Parameter::Time),
        times: traj.times.clone(),
        values,
    };
    Ok((curve.last(), curve.max(), total_qfi(&curve)))
}

fn blp_tables(cfg: &ResolvedConfig) -> Result<Vec<Table>, CliError> {
    let m = cfg.model()?;
    let pulse = ControlPulse::zero(1, m.horizon)?;
    let r = blp_measure_on(&m, &pulse, &cfg.grid()?.cells(), cfg.grid_points)?;
    let mut summary = Table::new("blp_summary", &["value", "s1", "phi1", "s2", "phi2"]);
    let (a, b) = r.best_pair;
    summary.push(vec![f(r.value), f(a.s), f(a.phi), f(b.s), f(b.phi)]);
    let mut curve = Table::new("blp_curve", &["t", "distinguishability", "sigma"]);
    for k in 0..r.times.len() {
        curve.push(vec![f(r.times[k]), f(r.distinguishability[k]), f(r.sigma_curve[k])]);
    }
    Ok(vec![summary, curve])
}

fn scenario_tables(runs: &[(String, ControlPulse, FlowScenario)]) -> Vec<Table> {
    let sources: Vec<String> = runs[0].2.curves.iter().map(|c| c.source.clone()).collect();
    let mut header = vec!["scenario", "t"];
    header.extend(sources.iter().map(|s| s.as_str()));
    let mut curves = Table::new("flows_curves", &header);
    let mut intervals = Table::new("flows_intervals", &["scenario", "source", "t_start", "t_end"]);
    let mut overlaps = Table::new("flows_overlap", &["scenario", "a", "b", "overlap"]);
    let mut pulses = Table::new("flows_pulses", &["scenario", "segment", "amplitude"]);
    for (name, pulse, sc) in runs {
        for (k, t) in sc.times.iter().enumerate() {
            let mut row = vec![name.clone(), f(*t)];
            row.extend(sc.curves.iter().map(|c| f(c.values[k])));
            curves.push(row);
        }
        for fl in &sc.flows {
            for (a, b) in &fl.intervals {
                intervals.push(vec![name.clone(), fl.source.clone(), f(*a), f(*b)]);
            }
        }
        for (a, b, v) in sc.overlap_table() {
            overlaps.push(vec![name.clone(), a, b, f(v)]);
        }
        pulse_rows(&mut pulses, vec![name.clone()], pulse);
    }
    vec![curves, intervals, overlaps, pulses]
}

fn first_cell(cfg: &ResolvedConfig) -> Result<InitialStateParam, CliError> {
    Ok(cfg.grid()?.cells()[0])
}

/// Free, Fisher-optimal and concurrence-optimal runs from one initial state.
fn flows_triptych(cfg: &ResolvedConfig) -> Result<Vec<Table>, CliError> {
    let m = cfg.model()?;
    let x0 = first_cell(cfg)?;
    let fisher_objective = match cfg.objective {
        Objective::ConcurrenceAtT => Objective::QfiWidthAtT,
        o => o,
    };
    let tag = fisher_objective.parameter().unwrap_or(Parameter::Width);
    let spec = ScenarioSpec {
        qfi_tags: vec![tag],
        cfi: Some((tag, fig5_povm())),
        concurrence: true,
        distinguishability: true,
        grid_points: cfg.grid_points,
        blp: BlpOptions::default(),
    };
    let free = ControlPulse::zero(cfg.segments, m.horizon)?;
    let fisher_pulse = optimize(&control_problem(cfg, x0, fisher_objective)?)?.pulse;
    let conc_pulse = optimize(&control_problem(cfg, x0, Objective::ConcurrenceAtT)?)?.pulse;
    let mut runs = Vec::new();
    for (name, pulse) in [("free", free), ("fisher", fisher_pulse), ("concurrence", conc_pulse)] {
        let sc = analyze_scenario(&m, &x0, &pulse, &spec)?;
        runs.push((name.to_string(), pulse, sc));
    }
    Ok(scenario_tables(&runs))
}

/// Uncontrolled Fisher curves of R, phi and lambda alongside D.
fn flows_tags(cfg: &ResolvedConfig) -> Result<Vec<Table>, CliError> {
    let m = cfg.model()?;
    let x0 = first_cell(cfg)?;
    let spec = ScenarioSpec {
        qfi_tags: vec![Parameter::Rabi, Parameter::Phase, Parameter::Width],
        cfi: None,
        concurrence: false,
        distinguishability: true,
        grid_points: cfg.grid_points,
        blp: BlpOptions::default(),
    };
    let pulse = ControlPulse::zero(1, m.horizon)?;
    let sc = analyze_scenario(&m, &x0, &pulse, &spec)?;
    Ok(scenario_tables(&[("free".to_string(), pulse, sc)]))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    program: &'static str,
    version: &'static str,
    config: &'a ResolvedConfig,
    restart_seeds: Vec<u64>,
    outputs: Vec<String>,
}

/// Writes every table as `<name>.csv` plus `manifest.json` into `dir`.
pub fn write_report(dir: &Path, cfg: &ResolvedConfig, report: &Report) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for t in &report.tables {
        let path = dir.join(format!("{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path).map_err(csv_io)?;
        w.write_record(&t.header).map_err(csv_io)?;
        for r in &t.rows {
            w.write_record(r).map_err(csv_io)?;
        }
        w.flush()?;
        written.push(path);
    }
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        restart_seeds: cfg.restart_seeds(),
        outputs: report.tables.iter().map(|t| format!("{}.csv", t.name)).collect(),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| io::Error::other(e.to_string()))?;
    fs::write(&path, text + "\n")?;
    written.push(path);
    Ok(written)
}

fn csv_io(e: csv::Error) -> io::Error {
    io::Error::other(e.to_string())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    /// Worker threads; `0` lets the pool choose.
    pub threads: usize,
    pub dry_run: bool,
}

pub fn load_config(path: &Path, output_dir: Option<PathBuf>) -> Result<ResolvedConfig, CliError> {
    let text = fs::read_to_string(path)?;
    let cfg = Config::from_json(&text).map_err(|e| CliError::Schema(e.to_string()))?;
    cfg.resolve(output_dir).map_err(|e| CliError::Schema(e.to_string()))
}

/// Loads, validates and (unless `dry_run`) executes one config. Returns the
/// files written.
pub fn run_experiment(config_path: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(config_path, opts.output_dir.clone())?;
    if opts.dry_run {
        return Ok(Vec::new());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| io::Error::other(e.to_string()))?;
    let report = pool.install(|| execute(&cfg))?;
    write_report(&cfg.output_dir, &cfg, &report)
}

#[derive(Debug, Parser)]
#[command(name = "nmmetro", version, about = "Two-qubit probe metrology in a structured reservoir")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Validate the config without running it.
        #[arg(long)]
        dry_run: bool,
    },
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match args.command {
        Command::Run {
            config,
            output_dir,
            threads,
            dry_run,
        } => {
            let opts = RunOptions {
                output_dir,
                threads,
                dry_run,
            };
            match run_experiment(&config, &opts) {
                Ok(files) => {
                    if dry_run {
                        println!("config ok: {}", config.display());
                    }
                    for p in files {
                        println!("{}", p.display());
                    }
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
            }
        }
    }
}
