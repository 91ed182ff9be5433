//! `geowalk`: geodesic random walk experiments driven by a TOML run config.

mod load;
mod svg;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use geowalk_core::config::Resolved;
use geowalk_core::export::{
    write_convergence, write_estimates_json, write_exit_table, write_header, write_paths, Header,
};
use geowalk_core::generator::{apply_coefficients, GeneratorEstimate, GeneratorLab};
use geowalk_core::geodesic::{
    DistanceRoutine, GreatCircleDistance, ScreenedDistance, ShootingConfig, ShootingDistance,
};
use geowalk_core::study::{convergence_study, exit_time_study, ExitStudy};
use geowalk_core::testfn::TestFunction;
use geowalk_core::walk::{simulate_paths_map, PathKind, WalkPath, Walker};
use serde::Serialize;
use toml::Value;

use load::{ConfigError, Loaded, Override};

/// Interpolated paths are sampled this many times per discrete step.
const INTERPOLATION_SUBSTEPS: usize = 4;

#[derive(Parser)]
#[command(name = "geowalk", version, about = "Geodesic random walks on Finsler manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate walk paths and write them as CSV.
    Simulate,
    /// Generator coefficients, symbol and drift at the probe points (JSON).
    Generator,
    /// Convergence table of the step operators towards the generator.
    Converge,
    /// Empirical exit probabilities from metric balls.
    ExitTimes,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding `walk.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of paths, overriding `walk.paths`.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Scaling parameter, overriding `walk.N`.
    #[arg(long = "N", global = true)]
    n_scale: Option<f64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write an SVG sketch of simulated paths.
    #[arg(long, global = true)]
    svg: bool,
    /// Override any config value: `--set section.key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

impl Common {
    fn overrides(&self) -> Result<Vec<Override>> {
        let mut out = Vec::new();
        if let Some(seed) = self.seed {
            out.push(Override::new("walk.seed", Value::Integer(seed as i64)));
        }
        if let Some(paths) = self.paths {
            out.push(Override::new("walk.paths", Value::Integer(paths as i64)));
        }
        if let Some(n) = self.n_scale {
            out.push(Override::new("walk.N", Value::Float(n)));
        }
        for raw in &self.set {
            out.push(Override::parse(raw)?);
        }
        Ok(out)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (category, code) = classify(&e);
            eprintln!("error[{category}]: {e:#}");
            ExitCode::from(code)
        }
    }
}

/// Exit codes: 2 configuration, 3 numerical or domain failure, 4 I/O.
fn classify(e: &anyhow::Error) -> (&'static str, u8) {
    for cause in e.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return ("config", 2);
        }
        if let Some(err) = cause.downcast_ref::<geowalk_core::Error>() {
            return match err.category() {
                "config" => ("config", 2),
                other => (other, 3),
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ("io", 4);
        }
    }
    ("internal", 1)
}

fn run(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring thread pool")?;
    }
    let path = common.config.as_deref().ok_or_else(|| ConfigError("--config is required".into()))?;
    let loaded = load::load(path, &common.overrides()?)?;
    let resolved = loaded.config.resolve()?;
    std::fs::create_dir_all(&common.out_dir).with_context(|| format!("creating {}", common.out_dir.display()))?;
    match cli.command {
        Command::Simulate => simulate(common, &loaded, &resolved),
        Command::Generator => generator(common, &loaded, &resolved),
        Command::Converge => converge(common, &loaded, &resolved),
        Command::ExitTimes => exit_times(common, &loaded, &resolved),
    }
}

fn header(command: &str, loaded: &Loaded) -> Header {
    Header::new(command, loaded.config.walk.as_ref().map(|w| w.seed), loaded.resolved.clone())
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((path, BufWriter::new(file)))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn simulate(common: &Common, loaded: &Loaded, resolved: &Resolved) -> Result<()> {
    let walk = loaded.config.walk()?;
    let atlas = &resolved.built.atlas;
    let walker = Walker::new(resolved.built.metric.as_ref(), atlas, &resolved.family, walk.ode());
    let start = walk.start_point();
    let steps = walk.steps();
    let paths = simulate_paths_map(walk.paths, |i| {
        let path = match walk.kind {
            PathKind::Discrete => walker.discrete_path(&start, walk.n_scale, steps, walk.seed, i)?,
            PathKind::Subordinated => walker.subordinated_path(&start, walk.n_scale, walk.horizon, walk.seed, i)?,
            PathKind::Interpolated => {
                let discrete = walker.discrete_path(&start, walk.n_scale, steps, walk.seed, i)?;
                let nodes = steps * INTERPOLATION_SUBSTEPS;
                let times: Vec<f64> =
                    (0..=nodes).map(|k| k as f64 / (INTERPOLATION_SUBSTEPS as f64 * walk.n_scale)).collect();
                walker.interpolate(&discrete, &times)?
            }
        };
        Ok((i, path))
    })?;
    write_path_outputs(common, loaded, atlas, &paths)
}

fn write_path_outputs(
    common: &Common,
    loaded: &Loaded,
    atlas: &geowalk_core::ChartAtlas,
    paths: &[(u64, WalkPath)],
) -> Result<()> {
    let (path, mut w) = create(&common.out_dir, "paths.csv")?;
    write_header(&mut w, &header("simulate", loaded))?;
    write_paths(&mut w, atlas.dim(), paths)?;
    finish(&path, w)?;
    if common.svg {
        let (path, mut w) = create(&common.out_dir, "paths.svg")?;
        w.write_all(svg::render(atlas, paths).as_bytes())?;
        finish(&path, w)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ProbeReport {
    #[serde(flatten)]
    estimate: GeneratorEstimate,
    /// `A f` for each configured test function.
    apply_a: Vec<f64>,
}

fn generator(common: &Common, loaded: &Loaded, resolved: &Resolved) -> Result<()> {
    let atlas = &resolved.built.atlas;
    let lab = GeneratorLab::new(resolved.built.metric.as_ref(), atlas, &resolved.family);
    let study = &loaded.config.study;
    let functions = study.test_functions(atlas);
    let mut reports = Vec::new();
    for p in study.probe_points(atlas)? {
        let estimate = lab.estimate(&p, study.drift)?;
        let apply_a = functions
            .iter()
            .map(|f| apply_coefficients(&estimate.second_order, &estimate.first_order, f, atlas, &p))
            .collect();
        reports.push(ProbeReport { estimate, apply_a });
    }
    let (path, mut w) = create(&common.out_dir, "generator.json")?;
    write_estimates_json(&mut w, &header("generator", loaded), &reports)?;
    finish(&path, w)
}

fn converge(common: &Common, loaded: &Loaded, resolved: &Resolved) -> Result<()> {
    let atlas = &resolved.built.atlas;
    let lab = GeneratorLab::new(resolved.built.metric.as_ref(), atlas, &resolved.family);
    let study = &loaded.config.study;
    let ns = if study.ns.is_empty() { vec![1e2, 4e2, 1.6e3, 6.4e3] } else { study.ns.clone() };
    let functions = study.test_functions(atlas);
    let refs: Vec<&dyn TestFunction> = functions.iter().map(|f| f as &dyn TestFunction).collect();
    let table = convergence_study(&lab, &refs, &study.probe_points(atlas)?, &ns)?;
    let (path, mut w) = create(&common.out_dir, "convergence.csv")?;
    write_header(&mut w, &header("converge", loaded))?;
    write_convergence(&mut w, &table)?;
    println!("slope {:.4}", table.slope);
    finish(&path, w)
}

fn exit_times(common: &Common, loaded: &Loaded, resolved: &Resolved) -> Result<()> {
    let walk = loaded.config.walk()?;
    let atlas = &resolved.built.atlas;
    let metric = resolved.built.metric.as_ref();
    let walker = Walker::new(metric, atlas, &resolved.family, walk.ode());
    let study = &loaded.config.study;
    let exit_study = ExitStudy {
        start: walk.start_point(),
        n_scale: walk.n_scale,
        deltas: if study.deltas.is_empty() { vec![0.2] } else { study.deltas.clone() },
        times: if study.times.is_empty() { vec![0.0, 0.005, 0.01, 0.02] } else { study.times.clone() },
        paths: walk.paths,
        seed: walk.seed,
    };
    let exact = ShootingDistance { metric, atlas, cfg: ShootingConfig::default() };
    // Great circles are exact for the round sphere, so the screen only
    // defers to shooting at the boundary.
    let screened;
    let routine: &dyn DistanceRoutine = if atlas.is_sphere() && metric.name() == "sphere" {
        screened = ScreenedDistance { proxy: GreatCircleDistance { atlas }, exact, lower: 0.95, upper: 1.05 };
        &screened
    } else {
        &exact
    };
    let table = exit_time_study(&walker, &exit_study, routine)?;
    let (path, mut w) = create(&common.out_dir, "exit-times.csv")?;
    write_header(&mut w, &header("exit-times", loaded))?;
    write_exit_table(&mut w, &table)?;
    finish(&path, w)
}
