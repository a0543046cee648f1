//! Command-line front end: argument parsing, problem files and report emission.
//!
//! Every command writes its artifacts plus `report.json` into `--out`. Exit codes:
//! 0 on success, 2 for invalid input or configuration, 3 for numerical failure.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::adjoint::simulate_adjoint;
use crate::base::TimeGrid;
use crate::carleman::{functional_ih, functional_io, write_weights_csv, SpaceTimeField, WeightSpec};
use crate::duality::{duality_residual, duality_sweep};
use crate::error::{Error, Result};
use crate::forward::{
    fundamental_solution, simulate_forward, write_fundamental_csv, write_trajectory_csv, Control, DelaySystem,
};
use crate::heat::{run_experiment, sine_coefficients, spectral_truncation, HeatConfig};
use crate::linalg::Vector;
use crate::observability::{kalman_rank_for_system, observability_gramian, unique_continuation_probe};
use crate::rng::random_instance;
use crate::synthesis::{scalar_memory_instance, synthesize_control, write_log_csv, SynthesisConfig};

#[derive(Debug, Parser)]
#[command(name = "delaymem", version, about = "Delay and memory systems: simulation, duality, observability, control synthesis")]
pub struct Cli {
    /// Directory for artifacts and report.json.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Overrides every seed found in input files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for independent sweep entries.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Print the JSON schema of a command's report and exit.
    #[arg(long, value_enum, value_name = "COMMAND")]
    pub schema: Option<SchemaName>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemaName {
    Simulate,
    Adjoint,
    Duality,
    Observability,
    Synthesize,
    HeatDemo,
    Weights,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Forward solve of a problem file; writes trajectory.csv.
    Simulate {
        #[arg(long)]
        problem: PathBuf,
        /// Also write the fundamental solution to fundamental.csv.
        #[arg(long)]
        fundamental: bool,
    },
    /// Backward adjoint solve from the file's terminal data; writes adjoint.csv.
    Adjoint {
        #[arg(long)]
        problem: PathBuf,
    },
    /// Duality identity on a random instance.
    Duality {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0.0025)]
        dt: f64,
        /// Residual at theta = 0, T1 = T under repeated halving of dt.
        #[arg(long)]
        dt_study: bool,
        /// Coarsest step of the study.
        #[arg(long, default_value_t = 0.02)]
        dt_max: f64,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Gramian, spectrum, verdict, constant K and rank diagnostics.
    Observability {
        /// Problem file; without it a random instance of size --n is used.
        #[arg(long)]
        problem: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = 64)]
        probes: usize,
        /// Also write gramian.csv.
        #[arg(long)]
        dump_gramian: bool,
    },
    /// Penalty synthesis of a control meeting the terminal conditions.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Heat equation run; writes field.csv and norms.csv.
    HeatDemo {
        #[arg(long)]
        config: PathBuf,
        /// Also write the `[0, T]` surface and the terminal slice for plotting.
        #[arg(long)]
        figure: bool,
    },
    /// Carleman weights and functionals on a gridded field.
    Weights {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        field: PathBuf,
    },
}

/// Where the system of a problem file comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSource {
    Explicit { system: DelaySystem },
    Random { random: RandomSpec },
    Preset { preset: Preset },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RandomSpec {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// See [`scalar_memory_instance`].
    ScalarMemory,
    /// Five-mode truncation of the heat equation with history `sin(x)` at 0.
    SpectralHeat,
}

/// Input of `simulate`, `adjoint`, `observability` and `synthesize`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(flatten)]
    pub source: SystemSource,
    pub dt: f64,
    /// Control samples at nodes `0..=N`. Defaults to the instance control for random
    /// systems and to zero otherwise.
    #[serde(default)]
    pub control: Option<Vec<Vec<f64>>>,
    #[serde(default, rename = "w_T")]
    pub w_t: Option<Vec<f64>>,
    #[serde(default, rename = "z_T")]
    pub z_t: Option<Vec<f64>>,
    #[serde(default)]
    pub synthesis: Option<SynthesisConfig>,
}

struct Problem {
    sys: DelaySystem,
    grid: TimeGrid,
    control: Control,
    w_t: Vector,
    z_t: Vector,
}

impl ProblemFile {
    fn resolve(&self, seed: Option<u64>) -> Result<Problem> {
        let mut default_control = None;
        let mut default_terminal = None;
        let sys = match &self.source {
            SystemSource::Explicit { system } => system.clone(),
            SystemSource::Random { random } => {
                let inst = random_instance(random.n, random.m, seed.unwrap_or(random.seed));
                default_terminal = Some((inst.w_t.clone(), inst.z_t.clone()));
                default_control = Some(inst.clone());
                inst.sys
            }
            SystemSource::Preset { preset } => match preset {
                Preset::ScalarMemory => scalar_memory_instance(self.dt)?,
                Preset::SpectralHeat => spectral_truncation(5, sine_coefficients(5), 0.1, 1.0, self.dt)?,
            },
        };
        sys.validate()?;
        let grid = sys.grid(self.dt)?;
        let n = sys.dim();
        let control = match (&self.control, default_control) {
            (Some(rows), _) => Control {
                values: rows.iter().map(|r| Vector::from_column_slice(r)).collect(),
            },
            (None, Some(inst)) => inst.control(&grid),
            (None, None) => Control::zeros(&grid, sys.n_controls()),
        };
        let vec_or = |v: &Option<Vec<f64>>, fallback: Option<Vector>, unit: bool| -> Result<Vector> {
            let out = match (v, fallback) {
                (Some(v), _) => Vector::from_column_slice(v),
                (None, Some(f)) => f,
                (None, None) => {
                    let mut e = Vector::zeros(n);
                    if unit && n > 0 {
                        e[0] = 1.0;
                    }
                    e
                }
            };
            if out.len() != n {
                return Err(Error::Shape(format!("terminal datum has {} entries, expected {n}", out.len())));
            }
            Ok(out)
        };
        let (fw, fz) = default_terminal.unzip();
        Ok(Problem {
            w_t: vec_or(&self.w_t, fw, true)?,
            z_t: vec_or(&self.z_t, fz, false)?,
            sys,
            grid,
            control,
        })
    }
}

/// Parse `argv` and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(2),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 3 for numerical failures, 2 for everything caused by the inputs.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

pub fn schema_text(name: SchemaName) -> &'static str {
    match name {
        SchemaName::Simulate => include_str!("../schemas/simulate.json"),
        SchemaName::Adjoint => include_str!("../schemas/adjoint.json"),
        SchemaName::Duality => include_str!("../schemas/duality.json"),
        SchemaName::Observability => include_str!("../schemas/observability.json"),
        SchemaName::Synthesize => include_str!("../schemas/synthesize.json"),
        SchemaName::HeatDemo => include_str!("../schemas/heat-demo.json"),
        SchemaName::Weights => include_str!("../schemas/weights.json"),
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(name) = cli.schema {
        use std::io::Write;
        // a closed pipe (e.g. `| head`) is not an error for a print-and-exit flag
        let _ = writeln!(std::io::stdout(), "{}", schema_text(name).trim_end());
        return Ok(());
    }
    let Some(cmd) = &cli.command else {
        return Err(Error::Config("no command given; see --help".into()));
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    fs::create_dir_all(&cli.out)?;
    let mut hasher = Sha256::new();
    hasher.update(format!("{}|seed={:?}", fingerprint(cmd), cli.seed).as_bytes());
    let ctx = Ctx { out: &cli.out, seed: cli.seed };
    let (name, body) = match cmd {
        Command::Simulate { problem, fundamental } => {
            ("simulate", cmd_simulate(&ctx, &read_hashed(problem, &mut hasher)?, *fundamental)?)
        }
        Command::Adjoint { problem } => ("adjoint", cmd_adjoint(&ctx, &read_hashed(problem, &mut hasher)?)?),
        Command::Duality { n, m, dt, dt_study, dt_max, levels } => (
            "duality",
            cmd_duality(&ctx, *n, *m, *dt, dt_study.then_some((*dt_max, *levels)))?,
        ),
        Command::Observability { problem, n, m, dt, probes, dump_gramian } => {
            let file = match problem {
                Some(p) => Some(read_hashed(p, &mut hasher)?),
                None => None,
            };
            ("observability", cmd_observability(&ctx, file.as_deref(), *n, *m, *dt, *probes, *dump_gramian)?)
        }
        Command::Synthesize { config } => ("synthesize", cmd_synthesize(&ctx, &read_hashed(config, &mut hasher)?)?),
        Command::HeatDemo { config, figure } => {
            ("heat-demo", cmd_heat(&ctx, &read_hashed(config, &mut hasher)?, *figure)?)
        }
        Command::Weights { spec, field } => {
            let s = read_hashed(spec, &mut hasher)?;
            let f = read_hashed(field, &mut hasher)?;
            ("weights", cmd_weights(&ctx, &s, &f)?)
        }
    };
    let mut report = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "inputs_hash": hex::encode(hasher.finalize()),
        "seed": cli.seed,
    });
    if let (Value::Object(r), Value::Object(b)) = (&mut report, body) {
        r.extend(b);
    }
    let f = BufWriter::new(File::create(cli.out.join("report.json"))?);
    serde_json::to_writer_pretty(f, &report)?;
    Ok(())
}

/// Command name and scalar arguments; file arguments enter the hash by content, not path.
fn fingerprint(cmd: &Command) -> String {
    match cmd {
        Command::Simulate { fundamental, .. } => format!("simulate fundamental={fundamental}"),
        Command::Adjoint { .. } => "adjoint".into(),
        Command::Duality { n, m, dt, dt_study, dt_max, levels } => {
            format!("duality n={n} m={m} dt={dt:?} study={dt_study} dt_max={dt_max:?} levels={levels}")
        }
        Command::Observability { problem, n, m, dt, probes, dump_gramian } => format!(
            "observability file={} n={n} m={m} dt={dt:?} probes={probes} dump={dump_gramian}",
            problem.is_some()
        ),
        Command::Synthesize { .. } => "synthesize".into(),
        Command::HeatDemo { figure, .. } => format!("heat-demo figure={figure}"),
        Command::Weights { .. } => "weights".into(),
    }
}

struct Ctx<'a> {
    out: &'a Path,
    seed: Option<u64>,
}

impl Ctx<'_> {
    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.out.join(name))?))
    }
}

fn read_hashed(path: &Path, hasher: &mut Sha256) -> Result<String> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    hasher.update(text.as_bytes());
    Ok(text)
}

fn parse_problem(text: &str) -> Result<ProblemFile> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("problem file: {e}")))
}

fn cmd_simulate(ctx: &Ctx, text: &str, fundamental: bool) -> Result<Value> {
    let p = parse_problem(text)?.resolve(ctx.seed)?;
    let traj = simulate_forward(&p.sys, &p.control, &p.grid)?;
    write_trajectory_csv(&traj, ctx.create("trajectory.csv")?)?;
    let mut artifacts = vec!["trajectory.csv"];
    let mut metrics = json!({
        "dim": p.sys.dim(),
        "n_steps": p.grid.n_steps,
        "dt": p.grid.dt,
        "final_norm": traj.terminal().norm(),
        "max_norm": traj.samples.iter().map(|v| v.norm()).fold(0.0, f64::max),
    });
    if fundamental {
        let fs = fundamental_solution(&p.sys, &p.grid)?;
        write_fundamental_csv(&fs, ctx.create("fundamental.csv")?)?;
        artifacts.push("fundamental.csv");
        metrics["fundamental_bound"] = json!(fs.bound);
    }
    Ok(json!({ "metrics": metrics, "artifacts": artifacts }))
}

fn cmd_adjoint(ctx: &Ctx, text: &str) -> Result<Value> {
    let p = parse_problem(text)?.resolve(ctx.seed)?;
    let adj = simulate_adjoint(&p.sys, &p.w_t, &p.z_t, &p.grid)?;
    adj.write_csv(ctx.create("adjoint.csv")?)?;
    Ok(json!({
        "metrics": {
            "dim": p.sys.dim(),
            "n_steps": p.grid.n_steps,
            "observation_energy": adj.observation_energy(),
            "w_at_zero_norm": adj.w(0).map_or(0.0, |v| v.norm()),
            "has_continuation": adj.has_continuation(),
        },
        "artifacts": ["adjoint.csv"],
    }))
}

fn cmd_duality(ctx: &Ctx, n: usize, m: usize, dt: f64, study: Option<(f64, usize)>) -> Result<Value> {
    if n == 0 {
        return Err(Error::Config("--n must be positive".into()));
    }
    let seed = ctx.seed.unwrap_or(0);
    let inst = random_instance(n, m, seed);
    let (h, t_end) = (inst.sys.h, inst.sys.t_end);
    if let Some((dt_max, levels)) = study {
        if levels < 2 {
            return Err(Error::Config("--levels must be at least 2".into()));
        }
        let dts: Vec<f64> = (0..levels).map(|i| dt_max / (1u64 << i) as f64).collect();
        let rows: Vec<(f64, f64)> = dts
            .par_iter()
            .map(|&dt| {
                let g = inst.sys.grid(dt)?;
                let u = inst.control(&g);
                let r = duality_residual(&inst.sys, &u, &inst.w_t, &inst.z_t, 0.0, t_end, &g)?;
                Ok((dt, r.residual))
            })
            .collect::<Result<_>>()?;
        let mut w = csv::Writer::from_writer(ctx.create("dt_study.csv")?);
        w.write_record(["dt", "residual", "ratio"])?;
        let mut ratios = Vec::new();
        for (i, (dt, res)) in rows.iter().enumerate() {
            let ratio = if i == 0 { None } else { Some(rows[i - 1].1 / res) };
            if let Some(r) = ratio {
                ratios.push(r);
            }
            w.write_record([
                crate::base::fmt_num(*dt),
                crate::base::fmt_num(*res),
                ratio.map(crate::base::fmt_num).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        return Ok(json!({
            "metrics": {
                "n": n, "m": m, "instance_seed": seed,
                "dts": dts,
                "residuals": rows.iter().map(|r| r.1).collect::<Vec<_>>(),
                "ratios": ratios,
            },
            "artifacts": ["dt_study.csv"],
        }));
    }
    let g = inst.sys.grid(dt)?;
    let u = inst.control(&g);
    let thetas = [-h, -0.5 * h, 0.0];
    let t1s = [t_end - h, t_end - 0.5 * h, t_end];
    let reps = duality_sweep(&inst.sys, &u, &inst.w_t, &inst.z_t, &thetas, &t1s, &g)?;
    let mut w = csv::Writer::from_writer(ctx.create("duality.csv")?);
    for r in &reps {
        w.serialize(r)?;
    }
    w.flush()?;
    let primary = reps
        .iter()
        .find(|r| r.theta == 0.0 && r.t1 == t_end)
        .map(|r| r.residual)
        .unwrap_or(f64::NAN);
    let corrected = reps
        .iter()
        .filter(|r| r.theta == 0.0)
        .map(|r| r.corrected_residual)
        .fold(0.0, f64::max);
    Ok(json!({
        "metrics": {
            "n": n, "m": m, "instance_seed": seed, "dt": dt,
            "residual": primary,
            "max_corrected_residual_theta0": corrected,
            "reports": reps,
        },
        "artifacts": ["duality.csv"],
    }))
}

fn cmd_observability(
    ctx: &Ctx,
    file: Option<&str>,
    n: usize,
    m: usize,
    dt: f64,
    probes: usize,
    dump: bool,
) -> Result<Value> {
    let (sys, grid) = match file {
        Some(text) => {
            let p = parse_problem(text)?.resolve(ctx.seed)?;
            (p.sys, p.grid)
        }
        None => {
            let inst = random_instance(n, m, ctx.seed.unwrap_or(0));
            let g = inst.sys.grid(dt)?;
            (inst.sys, g)
        }
    };
    let rep = observability_gramian(&sys, &grid)?;
    let probe = unique_continuation_probe(&sys, &grid, probes, ctx.seed.unwrap_or(0))?;
    let kalman = kalman_rank_for_system(&sys)?;
    let mut artifacts = vec!["constants.csv"];
    let mut w = csv::Writer::from_writer(ctx.create("constants.csv")?);
    w.write_record(["theta", "t1", "k"])?;
    for pc in &rep.k_per_pair {
        let k = pc.k.value().map(crate::base::fmt_num).unwrap_or_else(|| "unobservable".into());
        w.write_record([crate::base::fmt_num(pc.theta), crate::base::fmt_num(pc.t1), k])?;
    }
    w.flush()?;
    if dump {
        let mut w = csv::Writer::from_writer(ctx.create("gramian.csv")?);
        for r in 0..rep.gramian.nrows() {
            w.write_record(rep.gramian.row(r).iter().map(|v| crate::base::fmt_num(*v)))?;
        }
        w.flush()?;
        artifacts.push("gramian.csv");
    }
    Ok(json!({
        "metrics": {
            "dim": sys.dim(),
            "eigenvalues": rep.eigenvalues,
            "null_vectors": serde_json::to_value(&rep)?["null_vectors"],
            "constant_k": rep.constant_k,
            "verdict": rep.verdict,
            "probe": probe,
            "kalman": kalman,
        },
        "artifacts": artifacts,
    }))
}

fn cmd_synthesize(ctx: &Ctx, text: &str) -> Result<Value> {
    let file = parse_problem(text)?;
    let mut cfg = file.synthesis.clone().unwrap_or_default();
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    let p = file.resolve(ctx.seed)?;
    let mut warnings = Vec::new();
    let probe = unique_continuation_probe(&p.sys, &p.grid, 32, cfg.seed)?;
    if !(probe.worst_ratio > 1e-10) {
        warnings.push(format!(
            "unique-continuation probe found a near-unobservable direction (ratio {:e}); convergence is not expected",
            probe.worst_ratio
        ));
    }
    let r = synthesize_control(&p.sys, &p.grid, &cfg)?;
    r.control.write_csv(&p.grid, ctx.create("control.csv")?)?;
    write_trajectory_csv(&r.trajectory, ctx.create("trajectory.csv")?)?;
    write_log_csv(&r.log, ctx.create("iterates.csv")?)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let reduction = if r.report.res_a > 0.0 {
        r.baseline.res_a / r.report.res_a
    } else {
        f64::INFINITY
    };
    Ok(json!({
        "metrics": {
            "terminal": r.report,
            "baseline": r.baseline,
            "converged": r.converged,
            "final_rho": r.final_rho,
            "iterations": r.log.len(),
            "state_reduction": if reduction.is_finite() { json!(reduction) } else { json!("infinite") },
            "control_l2": r.control.l2_norm_sq(p.grid.dt).sqrt(),
        },
        "warnings": warnings,
        "artifacts": ["control.csv", "trajectory.csv", "iterates.csv"],
    }))
}

fn cmd_heat(ctx: &Ctx, text: &str, figure: bool) -> Result<Value> {
    let mut cfg: HeatConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("heat config: {e}")))?;
    if let Some(s) = ctx.seed {
        cfg.synthesis.seed = s;
    }
    let r = run_experiment(&cfg)?;
    r.write_field_csv(ctx.create("field.csv")?)?;
    r.write_norms_csv(ctx.create("norms.csv")?)?;
    let mut artifacts = vec!["field.csv", "norms.csv"];
    if figure {
        let mut w = csv::Writer::from_writer(ctx.create("figure_surface.csv")?);
        w.write_record(["t", "x", "y"])?;
        for (t, y) in r.trajectory.times().zip(&r.trajectory.samples) {
            if t < -1e-12 {
                continue;
            }
            let ts = crate::base::fmt_num(t);
            w.write_record([ts.as_str(), "0.0", "0.0"])?;
            for (x, v) in r.xgrid.iter().zip(y.iter()) {
                w.write_record([ts.clone(), crate::base::fmt_num(*x), crate::base::fmt_num(*v)])?;
            }
            w.write_record([ts, crate::base::fmt_num(std::f64::consts::PI), "0.0".into()])?;
        }
        w.flush()?;
        r.write_terminal_slice_csv(ctx.create("figure_slice_T.csv")?)?;
        artifacts.extend(["figure_surface.csv", "figure_slice_T.csv"]);
    }
    if !r.synthesis_log.is_empty() {
        write_log_csv(&r.synthesis_log, ctx.create("iterates.csv")?)?;
        artifacts.push("iterates.csv");
    }
    Ok(json!({ "metrics": r.metrics(), "artifacts": artifacts }))
}

/// `weights --spec` input: the weight parameters plus the delay used for `Delta p(t-h)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsFile {
    #[serde(flatten)]
    pub spec: WeightSpec,
    #[serde(default)]
    pub h: f64,
}

fn cmd_weights(ctx: &Ctx, spec_text: &str, field_text: &str) -> Result<Value> {
    let wf: WeightsFile =
        serde_json::from_str(spec_text).map_err(|e| Error::Config(format!("weight spec: {e}")))?;
    let field = SpaceTimeField::read_csv(field_text.as_bytes())?;
    let ih = functional_ih(&field, wf.h, &wf.spec)?;
    let io = functional_io(&field, &wf.spec)?;
    write_weights_csv(&field, &wf.spec, ctx.create("weights.csv")?)?;
    Ok(json!({
        "metrics": { "i_h": ih, "i_o": io, "nt": field.nt, "nx": field.nx },
        "artifacts": ["weights.csv"],
    }))
}
