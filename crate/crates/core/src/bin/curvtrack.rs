//! Command-line frontend: generate scenarios, track them and re-score
//! estimate files.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use curvtrack::gmphd::{FilterConfig, FilterMode};
use curvtrack::io::{self, IoError, ScenarioHeader};
use curvtrack::metrics::GospaParams;
use curvtrack::pipeline::track_scenario;
use curvtrack::report::{evaluate_frame, observable_truths, summarize, EstimateFrame, MetricsRow};
use curvtrack::sim::{fixture, run_scenario, FIXTURE_NAMES};

#[derive(Parser)]
#[command(
    name = "curvtrack",
    version,
    about = "Extended object tracking in curvilinear road coordinates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its frame stream.
    Generate {
        /// Scenario spec (TOML).
        #[arg(conflicts_with = "fixture", required_unless_present = "fixture")]
        spec: Option<PathBuf>,
        /// Use a shipped scenario instead of a spec file.
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(FIXTURE_NAMES))]
        fixture: Option<String>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Filter config (TOML) stored in the scenario header.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write the road as a segment map.
        #[arg(long)]
        road_map: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the tracker over a scenario file and write estimates and metrics.
    Track {
        scenario: PathBuf,
        /// Filter config (TOML); defaults to the scenario header, then to the
        /// built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Track with lidar only.
        #[arg(long)]
        no_radar: bool,
        /// Road segment map replacing the road of the scenario header.
        #[arg(long)]
        road: Option<PathBuf>,
        /// Frames before this time (s) are left out of the summary.
        #[arg(long, default_value_t = 1.0)]
        burn_in: f64,
    },
    /// Score an estimate file against a truth file.
    Eval {
        #[arg(long)]
        estimates: PathBuf,
        /// Truth frames in the estimate format, as written by `track`.
        #[arg(long)]
        truth: PathBuf,
        /// Metrics CSV to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        burn_in: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Curvilinear,
    Cartesian,
}

impl From<Mode> for FilterMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Curvilinear => FilterMode::Curvilinear,
            Mode::Cartesian => FilterMode::CartesianBaseline,
        }
    }
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Config { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Timing {
    frames: usize,
    mean_cycle_ms: Option<f64>,
    max_cycle_ms: Option<f64>,
}

fn generate(
    spec: Option<PathBuf>,
    fixture_name: Option<String>,
    seed: Option<u64>,
    config: Option<PathBuf>,
    road_map: Option<PathBuf>,
    out: &Path,
) -> Result<(), Failure> {
    let (mut spec, mut filter) = match (spec, fixture_name) {
        (Some(path), _) => (io::load_scenario_spec(&path)?, None),
        (None, Some(name)) => {
            let f = fixture(&name, 0).ok_or_else(|| Failure::Usage(format!("unknown fixture {name}")))?;
            (f.spec.clone(), Some(f.filter))
        }
        (None, None) => return Err(Failure::Usage("a spec file or --fixture is required".into())),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(path) = config {
        filter = Some(io::load_filter_config(&path)?);
    }
    let frames = run_scenario(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    io::save_scenario(out, &ScenarioHeader::new(&spec, filter), &frames)?;
    if let Some(path) = road_map {
        let road = spec.road.build().map_err(|e| Failure::Usage(e.to_string()))?;
        io::save_road_map(&path, &road)?;
    }
    println!("{} frames written to {}", frames.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn track(
    scenario: &Path,
    config: Option<PathBuf>,
    out: &Path,
    mode: Option<Mode>,
    no_radar: bool,
    road_map: Option<PathBuf>,
    burn_in: f64,
) -> Result<(), Failure> {
    let (header, frames) = io::load_scenario(scenario)?;
    let mut cfg: FilterConfig = match config {
        Some(path) => io::load_filter_config(&path)?,
        None => header.filter.clone().unwrap_or_default(),
    };
    if let Some(m) = mode {
        cfg.mode = m.into();
    }
    cfg.validate().map_err(Failure::Usage)?;
    let road = match road_map {
        Some(path) => io::load_road_map(&path)?,
        None => header
            .road
            .build()
            .map_err(|e| Failure::Data(format!("{}: road: {e}", scenario.display())))?,
    };
    let gospa = GospaParams::default();
    let run = track_scenario(&frames, &road, &header.sensor, &cfg, !no_radar, &gospa)
        .map_err(|(k, e)| Failure::Data(format!("{}: frame {k}: {e}", scenario.display())))?;
    let truths: Vec<EstimateFrame> = frames
        .iter()
        .map(|f| {
            let t = observable_truths(f, &header.sensor);
            EstimateFrame {
                index: f.index,
                t: f.t,
                cardinality: t.len(),
                mass: t.len() as f64,
                estimates: t,
            }
        })
        .collect();
    fs::create_dir_all(out).map_err(|e| Failure::Data(format!("{}: {e}", out.display())))?;
    io::save_estimates(&out.join("estimates.jsonl"), &run.estimates)?;
    io::save_estimates(&out.join("truth.jsonl"), &truths)?;
    io::save_metrics(&out.join("metrics.csv"), &run.metrics)?;
    let summary = summarize(&run.metrics, burn_in, None);
    io::save_json(&out.join("summary.json"), &summary)?;
    let timing = Timing {
        frames: run.cycle_ms.len(),
        mean_cycle_ms: summarize(&[], 0.0, Some(&run.cycle_ms)).mean_cycle_ms,
        max_cycle_ms: run.cycle_ms.iter().cloned().reduce(f64::max),
    };
    io::save_json(&out.join("timing.json"), &timing)?;
    print_summary(&summary);
    if let Some(ms) = timing.mean_cycle_ms {
        println!("mean cycle {ms:.2} ms");
    }
    Ok(())
}

fn eval(estimates: &Path, truth: &Path, out: &Path, burn_in: f64) -> Result<(), Failure> {
    let est = io::load_estimates(estimates)?;
    let tru = io::load_estimates(truth)?;
    let key = |f: &EstimateFrame| (f.index, f.t.to_bits());
    let have: BTreeSet<_> = est.iter().map(key).collect();
    let want: BTreeSet<_> = tru.iter().map(key).collect();
    let describe = |s: Vec<&(usize, u64)>| {
        s.iter()
            .map(|(i, t)| format!("{} (frame {i})", f64::from_bits(*t)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let no_estimate: Vec<_> = want.difference(&have).collect();
    let no_truth: Vec<_> = have.difference(&want).collect();
    if !no_estimate.is_empty() || !no_truth.is_empty() {
        let mut msg = String::from("frame sets differ");
        if !no_estimate.is_empty() {
            msg += &format!("; timestamps without estimates: {}", describe(no_estimate));
        }
        if !no_truth.is_empty() {
            msg += &format!("; timestamps without truth: {}", describe(no_truth));
        }
        return Err(Failure::Data(msg));
    }
    let params = GospaParams::default();
    let rows: Vec<MetricsRow> = est
        .iter()
        .zip(&tru)
        .map(|(e, t)| evaluate_frame(e, &t.estimates, &params))
        .collect();
    io::save_metrics(out, &rows)?;
    print_summary(&summarize(&rows, burn_in, None));
    Ok(())
}

fn print_summary(s: &curvtrack::report::Summary) {
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!(
        "frames {} mean GOSPA {:.4} position RMSE {} yaw RMSE {} velocity RMSE {}",
        s.frames,
        s.mean_gospa,
        fmt(s.position_rmse),
        fmt(s.yaw_rmse),
        fmt(s.velocity_rmse)
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate {
            spec,
            fixture,
            seed,
            config,
            road_map,
            out,
        } => generate(spec, fixture, seed, config, road_map, &out),
        Command::Track {
            scenario,
            config,
            out,
            mode,
            no_radar,
            road,
            burn_in,
        } => track(&scenario, config, &out, mode, no_radar, road, burn_in),
        Command::Eval {
            estimates,
            truth,
            out,
            burn_in,
        } => eval(&estimates, &truth, &out, burn_in),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
