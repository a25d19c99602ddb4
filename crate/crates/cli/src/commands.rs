//! Subcommand implementations. Each returns a [`CliError`] whose exit code
//! follows the documented contract.

use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ampc::artifact::{fmt_f64, Artifact};
use ampc::sim::{self, Execution, MonteCarloSummary, Scenario, SimError};
use ampc::synthesis::SynthesisResult;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SYNTHESIS: i32 = 3;
pub const EXIT_FALSIFIED: i32 = 4;

const RUN_META: &str = "run.toml";
const RUNS_DIR: &str = "runs";
const PLOTS_DIR: &str = "plots";
const CACHE_DIR: &str = "cache";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("synthesis rejected the design: {0}")]
    Synthesis(String),
    #[error("{0}")]
    Falsified(String),
    #[error("missing run data: {0}")]
    MissingData(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Synthesis(_) => EXIT_SYNTHESIS,
            CliError::Falsified(_) => EXIT_FALSIFIED,
            CliError::MissingData(_) | CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn sim_err(e: SimError) -> CliError {
    match e {
        SimError::Synthesis(s) => CliError::Synthesis(s.to_string()),
        SimError::Io(e) => CliError::Io(e.to_string()),
        other => CliError::Config(other.to_string()),
    }
}

/// Command-line values that take precedence over the config document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub gamma: Option<f64>,
    pub horizon: Option<usize>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<(ScenarioConfig, Scenario), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ScenarioConfig::parse(&text)?;
    if let Some(seed) = overrides.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(gamma) = overrides.gamma {
        cfg.controller.gamma = gamma;
    }
    if let Some(horizon) = overrides.horizon {
        cfg.controller.horizon = horizon;
    }
    let scenario = cfg.to_scenario()?;
    Ok((cfg, scenario))
}

pub struct Synthesized {
    pub result: SynthesisResult,
    pub artifact: PathBuf,
    pub cache_hit: bool,
}

/// Loads the artifact cached under the config's synthesis hash, or
/// synthesizes and stores it.
pub fn synthesize_cached(cfg: &ScenarioConfig, scenario: &Scenario, out_dir: &Path) -> Result<Synthesized, CliError> {
    let dir = out_dir.join(CACHE_DIR);
    let artifact = dir.join(format!("{}.artifact", cfg.synthesis_hash()));
    if let Ok(text) = fs::read_to_string(&artifact) {
        let cached = Artifact::parse(&text)
            .ok()
            .and_then(|a| SynthesisResult::from_artifact(&a).ok());
        if let Some(result) = cached {
            return Ok(Synthesized {
                result,
                artifact,
                cache_hit: true,
            });
        }
    }
    let result = scenario.synthesize().map_err(sim_err)?;
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    fs::write(&artifact, result.to_artifact().to_text()).map_err(|e| io_err(&artifact, e))?;
    Ok(Synthesized {
        result,
        artifact,
        cache_hit: false,
    })
}

fn fmt_row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:>10.6}")).collect::<Vec<_>>().join(" ")
}

pub fn cmd_synthesize<W: Write>(config: &Path, out_dir: &Path, overrides: &Overrides, out: &mut W) -> Result<(), CliError> {
    let (cfg, scenario) = load_config(config, overrides)?;
    let s = synthesize_cached(&cfg, &scenario, out_dir)?;
    print_synthesis(&scenario, &s, out).map_err(|e| CliError::Io(e.to_string()))
}

fn print_synthesis<W: Write>(scenario: &Scenario, s: &Synthesized, out: &mut W) -> io::Result<()> {
    let r = &s.result;
    writeln!(out, "scenario      {}", scenario.name)?;
    writeln!(
        out,
        "artifact      {}{}",
        s.artifact.display(),
        if s.cache_hit { " (cached)" } else { "" }
    )?;
    writeln!(out, "gain K (Q inflation {})", r.gain.q_inflation)?;
    for i in 0..r.gain.k.nrows() {
        writeln!(out, "  {}", fmt_row(r.gain.k.row(i).transpose().as_slice()))?;
    }
    writeln!(out, "vertex   margin      spectral radius")?;
    for (i, (m, rho)) in r.gain.vertex_margins.iter().zip(&r.closed_loop.spectral_radii).enumerate() {
        writeln!(out, "  {i:<4} {m:>10.6}  {rho:>10.6}")?;
    }
    writeln!(out, "closed-loop norm bound   {:.6}", r.closed_loop.a_bar)?;
    writeln!(out, "learning rate            {:.6}", r.lambda)?;
    writeln!(out, "hull diameter            {:.6}", r.radii.d_theta)?;
    writeln!(out, "prediction error bound   {:.6}", r.radii.sqrt_delta_xtilde())?;
    writeln!(out, "parameter drift bound    {:.6}", r.radii.delta_theta)?;
    writeln!(out, "tube scale               {}", r.tube_scale)?;
    writeln!(out, "input room h_v           {:.6}", r.stacked.h_v)?;
    writeln!(out, "rate room h_dv           {:.6}", r.stacked.h_delta_v)?;
    writeln!(out, "terminal set vertices    {}", r.terminal.set.vertices().map(|v| v.len()).unwrap_or(0))?;
    writeln!(out, "tube radii (rho = {:.6})", r.tube_radii.rho)?;
    writeln!(out, "  i    r_i")?;
    for (i, ri) in r.tube_radii.r.iter().enumerate() {
        writeln!(out, "  {i:<4} {ri:.6}")?;
    }
    Ok(())
}

/// Initial state and estimate of one run.
pub type Job = (DVector<f64>, DMatrix<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub name: String,
    pub runs: usize,
    pub steps: usize,
    pub sample_period: f64,
    pub n: usize,
    pub m: usize,
    pub synthesis_hash: String,
}

/// Requested job list: the first `runs` entries of the state-major grid of
/// sampled initial states and estimates.
pub fn jobs(scenario: &Scenario, cfg: &ScenarioConfig, runs: Option<usize>) -> Result<Vec<Job>, CliError> {
    let mc = &cfg.monte_carlo;
    let total = runs.unwrap_or(mc.initial_states * mc.initial_estimates);
    if total == 0 {
        return Err(CliError::Config("--runs must be at least 1".into()));
    }
    let n_theta = mc.initial_estimates.min(total);
    let n_x = total.div_ceil(n_theta);
    let x0s = sim::sample_initial_states(&scenario.x_set, scenario.x0_sampling_scale, n_x, scenario.seed).map_err(sim_err)?;
    let thetas = sim::sample_estimates(&scenario.hull, n_theta, scenario.seed);
    Ok(x0s
        .iter()
        .flat_map(|x| thetas.iter().map(move |t| (x.clone(), t.clone())))
        .take(total)
        .collect())
}

fn clear_run_files(dir: &Path) -> Result<(), CliError> {
    if !dir.exists() {
        return Ok(());
    }
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        let is_run = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("run_") && n.ends_with(".csv"));
        if is_run {
            fs::remove_file(&path).map_err(|e| io_err(&path, e))?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn write_aggregate<W: Write>(w: &mut W, summary: &MonteCarloSummary) -> io::Result<()> {
    let a = &summary.aggregate;
    writeln!(w, "key,value")?;
    for (k, v) in [
        ("runs", a.runs),
        ("completed", a.completed),
        ("initially_infeasible", a.initially_infeasible),
        ("falsified", a.falsified),
        ("constraint_violations", a.constraint_violations),
        ("check_failures", a.check_failures),
        ("candidate_failures", a.candidate_failures),
        ("estimator_increases", a.estimator_increases),
        ("tracking_failures", a.tracking_failures),
    ] {
        writeln!(w, "{k},{v}")?;
    }
    for (k, v) in [
        ("max_terminal_tracking_error", a.max_terminal_tracking_error),
        ("worst_settled_error", a.worst_settled_error),
        ("mean_estimator_decay", a.mean_estimator_decay),
        ("max_theta_increase", a.max_theta_increase),
        ("max_hull_residual", a.max_hull_residual),
        ("max_xtilde", a.max_xtilde),
        ("max_kkt_residual", a.max_kkt_residual),
    ] {
        writeln!(w, "{k},{}", fmt_f64(v))?;
    }
    Ok(())
}

pub struct RunRequest<'a> {
    pub config: &'a Path,
    pub out_dir: &'a Path,
    pub overrides: Overrides,
    pub runs: Option<usize>,
    /// Single run from the configured initial state and estimate.
    pub nominal: bool,
}

pub fn cmd_run<W: Write>(req: &RunRequest<'_>, out: &mut W) -> Result<MonteCarloSummary, CliError> {
    let (cfg, scenario) = load_config(req.config, &req.overrides)?;
    let s = synthesize_cached(&cfg, &scenario, req.out_dir)?;
    let jobs = if req.nominal {
        vec![(scenario.x0.clone(), scenario.theta_hat0.clone())]
    } else {
        jobs(&scenario, &cfg, req.runs)?
    };
    let summary = sim::run_batch(&scenario, &s.result, &jobs, Execution::Parallel).map_err(sim_err)?;

    let (n, m) = (scenario.hull.n(), scenario.hull.m());
    let runs_dir = req.out_dir.join(RUNS_DIR);
    fs::create_dir_all(&runs_dir).map_err(|e| io_err(&runs_dir, e))?;
    clear_run_files(&runs_dir)?;
    let width = summary.runs.len().saturating_sub(1).to_string().len().max(3);
    for (i, r) in summary.runs.iter().enumerate() {
        let path = runs_dir.join(format!("run_{i:0width$}.csv"));
        write_file(&path, |w| sim::write_log_csv(w, &r.log, n, m))?;
    }
    write_file(&req.out_dir.join("summary.csv"), |w| sim::write_summary_csv(w, &summary))?;
    write_file(&req.out_dir.join("aggregate.csv"), |w| write_aggregate(w, &summary))?;
    let meta = RunMeta {
        name: scenario.name.clone(),
        runs: summary.runs.len(),
        steps: scenario.steps,
        sample_period: scenario.sample_period,
        n,
        m,
        synthesis_hash: cfg.synthesis_hash(),
    };
    let meta_path = req.out_dir.join(RUN_META);
    fs::write(&meta_path, toml::to_string(&meta).expect("meta is serializable")).map_err(|e| io_err(&meta_path, e))?;

    let a = &summary.aggregate;
    let report = |o: &mut W| -> io::Result<()> {
        writeln!(o, "scenario               {}", scenario.name)?;
        writeln!(o, "runs                   {}", a.runs)?;
        writeln!(o, "completed              {}", a.completed)?;
        writeln!(o, "initially infeasible   {}", a.initially_infeasible)?;
        writeln!(o, "falsified              {}", a.falsified)?;
        writeln!(o, "constraint violations  {}", a.constraint_violations)?;
        writeln!(o, "check failures         {}", a.check_failures)?;
        writeln!(o, "tracking failures      {}", a.tracking_failures)?;
        writeln!(o, "worst settled error    {:.6}", a.worst_settled_error)?;
        writeln!(o, "mean estimator decay   {:.6}", a.mean_estimator_decay)?;
        writeln!(o, "output                 {}", req.out_dir.display())
    };
    report(out).map_err(|e| CliError::Io(e.to_string()))?;

    if a.falsified > 0 || a.constraint_violations > 0 || a.check_failures > 0 {
        return Err(CliError::Falsified(format!(
            "{} falsified runs, {} constraint violations, {} check failures",
            a.falsified, a.constraint_violations, a.check_failures
        )));
    }
    Ok(summary)
}

/// Converts every per-run CSV under `out_dir` into long-format plot data.
pub fn cmd_export_plots<W: Write>(out_dir: &Path, out: &mut W) -> Result<usize, CliError> {
    let meta_path = out_dir.join(RUN_META);
    let meta_text = fs::read_to_string(&meta_path)
        .map_err(|_| CliError::MissingData(format!("{} not found; run `ampc run` first", meta_path.display())))?;
    let meta: RunMeta = toml::from_str(&meta_text).map_err(|e| CliError::MissingData(format!("{}: {e}", meta_path.display())))?;
    let runs_dir = out_dir.join(RUNS_DIR);
    let mut files: Vec<PathBuf> = fs::read_dir(&runs_dir)
        .map_err(|_| CliError::MissingData(format!("{} not found", runs_dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::MissingData(format!("no run logs in {}", runs_dir.display())));
    }
    let plots = out_dir.join(PLOTS_DIR);
    fs::create_dir_all(&plots).map_err(|e| io_err(&plots, e))?;
    for file in &files {
        let reader = BufReader::new(fs::File::open(file).map_err(|e| io_err(file, e))?);
        let rows = sim::long_format_from_csv(reader, meta.sample_period)
            .map_err(|e| CliError::MissingData(format!("{}: {e}", file.display())))?;
        let target = plots.join(file.file_name().expect("listed file has a name"));
        write_file(&target, |w| sim::write_long_format(w, &rows))?;
    }
    writeln!(out, "wrote {} plot files to {}", files.len(), plots.display()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(files.len())
}
