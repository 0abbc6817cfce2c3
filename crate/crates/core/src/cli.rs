//! Command-line front end.
//!
//! Settings resolve as flag, then `--config` JSON, then built-in default.
//! A run manifest written by any command is itself a valid `--config`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::abstention::{optimal_plan, AbstentionPlan};
use crate::error::Error;
use crate::game::{run_game, trial_rng, GameConfig, MeasurementSource};
use crate::hilbert::InputStateSpec;
use crate::povm::{build_abstention_povm, ejm, exact_game_value, AbstentionParams, Povm, ScoreKind};
use crate::tomography::{povm_fidelity, run_repetitions};
use crate::walk::golden::{checkpoint_error, checkpoints_for};
use crate::walk::{extract_povm, load_reference_program, run_program_steps, tabulated_row, tabulated_rows, trajectory};
use crate::walk::{WalkProgram, WalkState};

pub const OUT_ENV: &str = "DIRGUESS_OUT";
pub const DEFAULT_OUT: &str = "dirguess-out";
pub const DEFAULT_TRIALS: u64 = 100_000;
pub const DEFAULT_SHOTS: u64 = 20_000;
pub const DEFAULT_REPETITIONS: usize = 25;
pub const DEFAULT_SEED: u64 = 2024;
pub const WALK_TOL: f64 = 5e-4;

pub mod exit {
    pub const OK: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const IO: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
    pub const CHECK_FAILED: i32 = 5;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AbstentionMode {
    None,
    Optimal,
    OptimalConstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScoreArg {
    Fidelity,
    Likelihood,
}

impl From<ScoreArg> for ScoreKind {
    fn from(s: ScoreArg) -> ScoreKind {
        match s {
            ScoreArg::Fidelity => ScoreKind::Fidelity,
            ScoreArg::Likelihood => ScoreKind::MaxLikelihood,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SourceArg {
    Ideal,
    Walk,
}

impl From<SourceArg> for MeasurementSource {
    fn from(s: SourceArg) -> MeasurementSource {
        match s {
            SourceArg::Ideal => MeasurementSource::Ideal,
            SourceArg::Walk => MeasurementSource::Walk,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dirguess", version, about = "Direction guessing with abstention")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// JSON file with default settings (or a previous run manifest).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Theory and Monte Carlo scores over a c0 grid.
    Scores(ScoresArgs),
    /// Check a reference walk program against the ideal POVM.
    VerifyWalk(VerifyArgs),
    /// Simulated detector tomography of a tabulated POVM.
    Tomography(TomographyArgs),
    /// Run a walk program on one input state.
    WalkRun(WalkRunArgs),
}

#[derive(Debug, Args)]
pub struct ScoresArgs {
    #[arg(long, value_enum)]
    pub score: Option<ScoreArg>,
    /// Comma-separated grid; defaults to the tabulated rows. An empty value gives an empty grid.
    #[arg(long)]
    pub c0: Option<String>,
    #[arg(long, value_enum)]
    pub abstention: Option<AbstentionMode>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, value_enum)]
    pub measurement_source: Option<SourceArg>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub score: Option<ScoreArg>,
    #[arg(long)]
    pub c0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TomographyArgs {
    #[arg(long, value_enum)]
    pub score: Option<ScoreArg>,
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long, value_enum)]
    pub measurement_source: Option<SourceArg>,
}

#[derive(Debug, Args)]
pub struct WalkRunArgs {
    /// Program file (JSON).
    pub program: PathBuf,
    /// Input amplitudes a,b,c,d, e.g. "1,0,0,0" or "0.6,0.8i,0,0".
    #[arg(long, default_value = "1,0,0,0")]
    pub input: String,
    #[arg(long)]
    pub dump_steps: bool,
}

/// Settings that may come from a config file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abstention: Option<AbstentionMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement_source: Option<SourceArg>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let v: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
        // a manifest nests the resolved settings under "config"
        let v = match v.get("config") {
            Some(inner) if v.get("tool_version").is_some() => inner.clone(),
            _ => v,
        };
        Ok(serde_json::from_value(v).map_err(Error::from)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Settings,
    pub tool_version: String,
    pub seeds: Vec<u64>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<PathBuf>,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn parse_grid(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::Invalid(format!("bad c0 value '{t}'")).into()))
        .collect()
}

/// Parses "a,b,c,d" into four complex amplitudes and normalizes them.
pub fn parse_input_state(s: &str) -> Result<[Complex64; 4], Error> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(Error::Invalid(format!("expected 4 amplitudes, got {}", parts.len())));
    }
    let mut v = [Complex64::new(0.0, 0.0); 4];
    for (z, p) in v.iter_mut().zip(&parts) {
        *z = p.parse().map_err(|_| Error::Invalid(format!("bad amplitude '{p}'")))?;
    }
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Invalid("input state has zero norm".into()));
    }
    Ok(v.map(|z| z / n))
}

fn derived_seed(seed: u64, k: usize) -> u64 {
    trial_rng(seed, k as u64).next_u64()
}

fn plan_for(kind: ScoreKind, c0: f64, mode: AbstentionMode) -> crate::Result<Option<AbstentionPlan>> {
    match mode {
        AbstentionMode::None => Ok(None),
        AbstentionMode::Optimal => optimal_plan(kind, c0, false).map(Some),
        AbstentionMode::OptimalConstrained => optimal_plan(kind, c0, true).map(Some),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub c0: f64,
    pub score_no_abst: f64,
    pub score_with_abst: Option<f64>,
    pub lambda_bar_0: Option<f64>,
    #[serde(rename = "Q_bar")]
    pub q_bar: Option<f64>,
    pub mc_score: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub status: String,
}

/// One row per grid point. Infeasible points are kept and marked.
pub fn score_rows(
    kind: ScoreKind,
    grid: &[f64],
    mode: AbstentionMode,
    trials: u64,
    seed: u64,
    source: MeasurementSource,
) -> crate::Result<Vec<ScoreRow>> {
    let mut rows = Vec::new();
    for (k, &c0) in grid.iter().enumerate() {
        let spec = InputStateSpec::psi_plus(c0)?;
        let no_abst = exact_game_value(&ejm(), &spec, kind)?.s_av;
        let plan = match plan_for(kind, c0, mode) {
            Ok(p) => p,
            Err(e @ (Error::ConstraintInfeasible(_) | Error::OptimumUnreachable(_))) => {
                rows.push(ScoreRow {
                    c0,
                    score_no_abst: no_abst,
                    score_with_abst: None,
                    lambda_bar_0: None,
                    q_bar: None,
                    mc_score: None,
                    mc_stderr: None,
                    status: format!("infeasible: {e}"),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let params = plan.map(|p| p.params()).unwrap_or_else(AbstentionParams::none);
        let with = exact_game_value(&build_abstention_povm(&params)?, &spec, kind)?;
        let mut cfg = GameConfig::new(kind, c0, plan, trials, derived_seed(seed, k));
        cfg.measurement_source = source;
        let (mc, se, status) = match run_game(&cfg) {
            Ok(r) => (Some(r.s_hat), Some(r.stderr), "ok".to_string()),
            Err(e @ (Error::Untabulated { .. } | Error::NoAccepted)) => (None, None, format!("no mc: {e}")),
            Err(e) => return Err(e),
        };
        rows.push(ScoreRow {
            c0,
            score_no_abst: no_abst,
            score_with_abst: Some(with.s_av),
            lambda_bar_0: Some(params.lambda_bar_0),
            q_bar: Some(with.q_bar),
            mc_score: mc,
            mc_stderr: se,
            status,
        });
    }
    Ok(rows)
}

pub fn write_score_csv(rows: &[ScoreRow], path: &Path) -> crate::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["c0", "score_no_abst", "score_with_abst", "lambda_bar_0", "Q_bar", "mc_score", "mc_stderr", "status"])?;
    let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.c0.to_string(),
            r.score_no_abst.to_string(),
            f(r.score_with_abst),
            f(r.lambda_bar_0),
            f(r.q_bar),
            f(r.mc_score),
            f(r.mc_stderr),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkReport {
    pub program: String,
    pub checkpoints: Vec<(usize, f64)>,
    pub frobenius: Vec<f64>,
    pub overall_fidelity: f64,
    pub passed: bool,
}

pub fn verify_walk(kind: ScoreKind, c0: f64) -> crate::Result<WalkReport> {
    let row = tabulated_row(kind, c0)?;
    let prog = load_reference_program(kind, c0)?;
    let tr = trajectory(&prog)?;
    let checkpoints: Vec<(usize, f64)> = checkpoints_for(kind, c0)
        .iter()
        .map(|cp| (cp.t, checkpoint_error(&tr[cp.t], cp)))
        .collect();
    let walk = extract_povm(&prog)?;
    let ideal = build_abstention_povm(&AbstentionParams::new(row.lambda_bar_0, 1.0)?)?;
    let frobenius: Vec<f64> = walk
        .elements()
        .iter()
        .zip(ideal.elements())
        .map(|(a, b)| crate::linalg::frobenius(&(a - b)))
        .collect();
    let overall_fidelity = povm_fidelity(&walk, &ideal)?.overall;
    let passed = checkpoints.iter().all(|c| c.1 < WALK_TOL) && frobenius.iter().all(|&d| d < WALK_TOL);
    Ok(WalkReport { program: prog.name, checkpoints, frobenius, overall_fidelity, passed })
}

/// Ground-truth POVM for a tabulated row.
pub fn tabulated_povm(kind: ScoreKind, c0: f64, source: MeasurementSource) -> crate::Result<Povm> {
    let row = tabulated_row(kind, c0)?;
    match source {
        MeasurementSource::Ideal => build_abstention_povm(&AbstentionParams::new(row.lambda_bar_0, 1.0)?),
        MeasurementSource::Walk => extract_povm(&load_reference_program(kind, c0)?),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDump {
    pub t: usize,
    pub amplitudes: Vec<(i32, String, [f64; 2])>,
}

pub fn walk_run(prog: &WalkProgram, input: [Complex64; 4]) -> crate::Result<(Vec<StepDump>, Vec<(i32, f64)>)> {
    let states = run_program_steps(prog, &WalkState::embed(prog, input))?;
    let dumps = states
        .iter()
        .enumerate()
        .map(|(t, s)| StepDump {
            t,
            amplitudes: s.amplitudes().into_iter().map(|(x, c, a)| (x, c.to_string(), [a.re, a.im])).collect(),
        })
        .collect();
    let dist = states.last().expect("input state").position_distribution().into_iter().collect();
    Ok((dumps, dist))
}

/// Exit code for an error chain.
pub fn exit_code(e: &anyhow::Error) -> i32 {
    if let Some(err) = e.downcast_ref::<Error>() {
        return match err {
            Error::Io(_) => exit::IO,
            Error::ConstraintInfeasible(_) | Error::OptimumUnreachable(_) | Error::AlwaysAbstains | Error::NoAccepted => {
                exit::INFEASIBLE
            }
            _ => exit::VALIDATION,
        };
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return exit::IO;
    }
    if e.downcast_ref::<CheckFailed>().is_some() {
        return exit::CHECK_FAILED;
    }
    exit::VALIDATION
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct CheckFailed(pub String);

struct Ctx {
    out: PathBuf,
    settings: Settings,
    started: f64,
    outputs: Vec<PathBuf>,
}

impl Ctx {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.outputs.push(p.clone());
        p
    }

    fn write(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let p = self.path(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        Ok(())
    }

    fn finish(mut self, command: &str, seeds: Vec<u64>) -> anyhow::Result<PathBuf> {
        let p = self.out.join(format!("{command}-manifest.json"));
        self.outputs.push(p.clone());
        let m = RunManifest {
            command: command.to_string(),
            config: self.settings.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
            started_unix: self.started,
            finished_unix: now(),
            outputs: self.outputs,
        };
        fs::write(&p, serde_json::to_string_pretty(&m)?).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }
}

fn prepare(cli: &Cli, mut s: Settings) -> anyhow::Result<Ctx> {
    if let Some(seed) = cli.seed {
        s.seed = Some(seed);
    }
    if let Some(o) = &cli.out {
        s.out = Some(o.clone());
    }
    let out = s.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    s.out = Some(out.clone());
    Ok(Ctx { out, settings: s, started: now(), outputs: Vec::new() })
}

fn require_c0(v: Option<f64>, s: &Settings) -> anyhow::Result<f64> {
    v.or_else(|| s.c0.as_ref().and_then(|g| g.first().copied()))
        .ok_or_else(|| anyhow!(Error::Invalid("--c0 is required".into())))
}

/// Runs one parsed command line. Human-readable lines go to `log`.
pub fn execute(cli: &Cli, log: &mut dyn std::io::Write) -> anyhow::Result<i32> {
    let base = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    match &cli.command {
        Command::Scores(a) => {
            let mut s = base;
            s.score = a.score.or(s.score);
            s.abstention = a.abstention.or(s.abstention);
            s.trials = a.trials.or(s.trials).or(Some(DEFAULT_TRIALS));
            s.measurement_source = a.measurement_source.or(s.measurement_source).or(Some(SourceArg::Ideal));
            let kind: ScoreKind = s.score.unwrap_or(ScoreArg::Likelihood).into();
            s.score = Some(kind_arg(kind));
            let grid = match &a.c0 {
                Some(g) => parse_grid(g)?,
                None => s.c0.clone().unwrap_or_else(|| {
                    tabulated_rows().iter().filter(|r| r.kind == kind).map(|r| r.c0).collect()
                }),
            };
            s.c0 = Some(grid.clone());
            let mode = s.abstention.unwrap_or(AbstentionMode::OptimalConstrained);
            s.abstention = Some(mode);
            s.seed = s.seed.or(Some(DEFAULT_SEED));
            let mut ctx = prepare(cli, s)?;
            let seed = ctx.settings.seed.unwrap();
            let rows = score_rows(
                kind,
                &grid,
                mode,
                ctx.settings.trials.unwrap(),
                seed,
                ctx.settings.measurement_source.unwrap().into(),
            )?;
            let name = format!("scores-{kind}.csv");
            let p = ctx.path(&name);
            write_score_csv(&rows, &p)?;
            for r in &rows {
                writeln!(log, "c0={:.4} no_abst={:.4} with_abst={} Q_bar={} mc={} {}", r.c0, r.score_no_abst,
                    fmt_opt(r.score_with_abst), fmt_opt(r.q_bar), fmt_opt(r.mc_score), r.status)?;
            }
            let seeds = (0..grid.len()).map(|k| derived_seed(seed, k)).collect();
            let m = ctx.finish("scores", seeds)?;
            writeln!(log, "wrote {} and {}", p.display(), m.display())?;
            Ok(exit::OK)
        }
        Command::VerifyWalk(a) => {
            let mut s = base;
            s.score = a.score.or(s.score).or(Some(ScoreArg::Likelihood));
            let kind: ScoreKind = s.score.unwrap().into();
            let c0 = require_c0(a.c0, &s)?;
            s.c0 = Some(vec![c0]);
            let r = verify_walk(kind, c0)?;
            for (t, e) in &r.checkpoints {
                writeln!(log, "checkpoint t={t}: max coefficient error {e:.2e}")?;
            }
            for (l, d) in ["n1", "n2", "n3", "n4", "abstain"].iter().zip(&r.frobenius) {
                writeln!(log, "{l}: Frobenius distance {d:.2e}")?;
            }
            writeln!(log, "overall fidelity {:.8}", r.overall_fidelity)?;
            let mut ctx = prepare(cli, s)?;
            ctx.write(&format!("verify-walk-{kind}-{c0}.json"), &serde_json::to_string_pretty(&r)?)?;
            ctx.finish("verify-walk", vec![])?;
            if r.passed {
                writeln!(log, "PASS")?;
                Ok(exit::OK)
            } else {
                Err(CheckFailed(format!("walk {} deviates by more than {WALK_TOL:e}", r.program)).into())
            }
        }
        Command::Tomography(a) => {
            let mut s = base;
            s.score = a.score.or(s.score).or(Some(ScoreArg::Likelihood));
            let kind: ScoreKind = s.score.unwrap().into();
            let c0 = require_c0(a.c0, &s)?;
            s.c0 = Some(vec![c0]);
            s.shots = a.shots.or(s.shots).or(Some(DEFAULT_SHOTS));
            s.repetitions = a.repetitions.or(s.repetitions).or(Some(DEFAULT_REPETITIONS));
            s.measurement_source = a.measurement_source.or(s.measurement_source).or(Some(SourceArg::Ideal));
            s.seed = s.seed.or(Some(DEFAULT_SEED));
            let truth = tabulated_povm(kind, c0, s.measurement_source.unwrap().into())?;
            let mut ctx = prepare(cli, s)?;
            let st = ctx.settings.clone();
            let run = run_repetitions(&truth, st.shots.unwrap(), st.repetitions.unwrap(), st.seed.unwrap())?;
            writeln!(
                log,
                "mean overall fidelity {:.6} (std {:.6}) over {} repetitions of {} shots",
                run.mean_overall_fidelity, run.std_overall_fidelity, run.repetitions, run.shots
            )?;
            ctx.write(&format!("tomography-{kind}-{c0}.json"), &serde_json::to_string_pretty(&run)?)?;
            let seeds = run.seeds.clone();
            ctx.finish("tomography", seeds)?;
            Ok(exit::OK)
        }
        Command::WalkRun(a) => {
            let prog = WalkProgram::from_file(&a.program)?;
            let input = parse_input_state(&a.input)?;
            let (dumps, dist) = walk_run(&prog, input)?;
            for (x, p) in &dist {
                writeln!(log, "x={x:>3}  p={p:.6}")?;
            }
            let mut ctx = prepare(cli, base)?;
            if a.dump_steps {
                for d in &dumps {
                    writeln!(log, "t={}", d.t)?;
                    for (x, c, z) in &d.amplitudes {
                        writeln!(log, "  x={x:>3} {c}  {:+.6}{:+.6}i", z[0], z[1])?;
                    }
                }
                ctx.write(&format!("{}-steps.json", prog.name), &serde_json::to_string_pretty(&dumps)?)?;
            }
            ctx.write(&format!("{}-distribution.json", prog.name), &serde_json::to_string_pretty(&dist)?)?;
            ctx.finish("walk-run", vec![])?;
            Ok(exit::OK)
        }
    }
}

fn kind_arg(k: ScoreKind) -> ScoreArg {
    match k {
        ScoreKind::Fidelity => ScoreArg::Fidelity,
        ScoreKind::MaxLikelihood => ScoreArg::Likelihood,
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

/// Entry point used by the binary. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::VALIDATION } else { exit::OK };
        }
    };
    let mut stdout = std::io::stdout();
    match execute(&cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
