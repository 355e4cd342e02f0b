//! `uavlink`: command-line front end for the ground-to-air link simulator.
//!
//! `simulate` runs the mobile multi-node scenario and writes trajectory and
//! rate traces; `twouser` solves the static two-user rectangle orientation;
//! `sweep` reruns the simulation across reference SNR points and strategies.
//! Every command writes a `manifest.json` (config echo, version, seed,
//! output list, duration) alongside its data files. Data files are
//! deterministic given the seed and identical for any worker count; set
//! UAVSIM_THREADS to cap the worker pool.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use config::{CliError, TwouserConfig};
use uavlink_core::sim::{self, SimConfig};
use uavlink_core::twouser::{average_rate, exhaustive_search, optimal_orientation, OrientationSolution};

#[derive(Parser)]
#[command(name = "uavlink", version, about = "UAV heading-control link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mobile scenario; write trajectory.csv, rates.csv, summary.json.
    Simulate {
        /// Key-value config file (see configs/ for examples).
        config: PathBuf,
        /// Output directory, created if absent.
        out_dir: PathBuf,
        /// Replace a scalar config key, e.g. --override strategy=tdma_max.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Optimize the static two-user rectangle orientation; write orientation.csv, summary.json.
    Twouser {
        config: PathBuf,
        out_dir: PathBuf,
        /// Which optimizer(s) to run.
        #[arg(long, value_enum, default_value_t = Mode::LineSearch)]
        mode: Mode,
    },
    /// Rerun the simulation across SNR points and strategies; write sweep.csv.
    Sweep {
        config: PathBuf,
        out_dir: PathBuf,
        /// Comma-separated reference SNRs at 1 km, in dB.
        #[arg(long = "snr-list", value_name = "DB,DB,...", allow_hyphen_values = true)]
        snr_list: String,
        /// Comma-separated strategy names.
        #[arg(long, value_name = "NAME,NAME,...")]
        strategies: String,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    #[value(name = "line_search")]
    LineSearch,
    #[value(name = "exhaustive")]
    Exhaustive,
    #[value(name = "both")]
    Both,
}

impl Mode {
    fn token(self) -> &'static str {
        match self {
            Mode::LineSearch => "line_search",
            Mode::Exhaustive => "exhaustive",
            Mode::Both => "both",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = init_threads().and_then(|()| match cli.command {
        Command::Simulate { config, out_dir, overrides } => cmd_simulate(&config, &out_dir, &overrides),
        Command::Twouser { config, out_dir, mode } => cmd_twouser(&config, &out_dir, mode),
        Command::Sweep { config, out_dir, snr_list, strategies, overrides } => {
            cmd_sweep(&config, &out_dir, &snr_list, &strategies, &overrides)
        }
    });
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Honor UAVSIM_THREADS before any parallel work starts. Results do not
/// depend on the worker count; only wall-clock time does.
fn init_threads() -> Result<(), CliError> {
    match std::env::var("UAVSIM_THREADS") {
        Err(_) => Ok(()),
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| CliError::Config(format!("UAVSIM_THREADS must be a positive integer, got '{v}'")))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Runtime(format!("cannot configure worker pool: {e}")))
        }
    }
}

fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read config '{}': {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write '{}': {e}", path.display())))
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create output directory '{}': {e}", dir.display())))
}

fn manifest_json(
    command: &str,
    seed: Option<u64>,
    config_echo: serde_json::Value,
    outputs: &[&str],
    started: Instant,
) -> String {
    output::pretty(&serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": seed,
        "config": config_echo,
        "outputs": outputs,
        "duration_seconds": started.elapsed().as_secs_f64(),
    }))
}

fn load_sim_config(path: &Path, overrides: &[String]) -> Result<SimConfig, CliError> {
    let text = read_config(path)?;
    let mut raw = config::parse_text(&text)?;
    config::apply_overrides(&mut raw, overrides)?;
    config::build_sim_config(&raw)
}

fn cmd_simulate(config_path: &Path, out_dir: &Path, overrides: &[String]) -> Result<(), CliError> {
    let started = Instant::now();
    let sim_cfg = load_sim_config(config_path, overrides)?;
    ensure_out_dir(out_dir)?;
    let result = sim::run(&sim_cfg).map_err(|e| CliError::Runtime(format!("simulation failed: {e}")))?;

    write_file(out_dir, "trajectory.csv", &output::trajectory_csv(&result))?;
    write_file(out_dir, "rates.csv", &output::rates_csv(&result))?;
    write_file(out_dir, "summary.json", &output::simulate_summary_json(&sim_cfg, &result))?;
    let echo = serde_json::to_value(&sim_cfg).expect("config serializes");
    let outputs = ["trajectory.csv", "rates.csv", "summary.json"];
    write_file(
        out_dir,
        "manifest.json",
        &manifest_json("simulate", Some(sim_cfg.seed), echo, &outputs, started),
    )?;

    println!(
        "strategy {}: average sum rate {:.4} bits/s/Hz over {} steps (seed {}); outputs in {}",
        config::strategy_token(sim_cfg.strategy),
        result.average_sum_rate,
        sim_cfg.l_steps,
        sim_cfg.seed,
        out_dir.display()
    );
    Ok(())
}

fn cmd_twouser(config_path: &Path, out_dir: &Path, mode: Mode) -> Result<(), CliError> {
    let started = Instant::now();
    let text = read_config(config_path)?;
    let raw = config::parse_text(&text)?;
    let TwouserConfig { scenario, grids, snr_db } = config::build_twouser_config(&raw)?;
    if scenario.m_antennas == 1 {
        eprintln!(
            "warning: with a single antenna the orientation objective is constant; every heading is equivalent"
        );
    }
    ensure_out_dir(out_dir)?;

    let line_search: Option<OrientationSolution> =
        (mode != Mode::Exhaustive).then(|| optimal_orientation(&scenario));
    let exhaustive: Option<OrientationSolution> = match mode {
        Mode::LineSearch => None,
        Mode::Exhaustive | Mode::Both => Some(
            exhaustive_search(&scenario, &grids)
                .map_err(|e| CliError::Config(format!("invalid config: {e}")))?,
        ),
    };
    // The line search minimizes a correlation surrogate, so its rate is
    // evaluated separately; the exhaustive value already is a rate.
    let line_rate = line_search
        .as_ref()
        .map(|s| average_rate(s.delta, s.c_a, s.c_b, &scenario, grids.perimeter_points));
    let rate_ratio = match (&line_rate, &exhaustive) {
        (Some(lr), Some(ex)) if ex.value > 0.0 => Some(lr / ex.value),
        _ => None,
    };

    write_file(
        out_dir,
        "orientation.csv",
        &output::orientation_csv(&scenario, &grids, line_search.as_ref(), exhaustive.as_ref()),
    )?;
    let summary = serde_json::json!({
        "mode": mode.token(),
        "line_search": line_search.map(|s| serde_json::json!({
            "delta": s.delta,
            "c_a": s.c_a,
            "c_b": s.c_b,
            "objective": s.value,
            "average_sum_rate": line_rate,
        })),
        "exhaustive": exhaustive.map(|s| serde_json::json!({
            "delta": s.delta,
            "c_a": s.c_a,
            "c_b": s.c_b,
            "average_sum_rate": s.value,
        })),
        "rate_ratio": rate_ratio,
    });
    write_file(out_dir, "summary.json", &output::pretty(&summary))?;
    let echo = serde_json::json!({
        "d": scenario.d,
        "h_u": scenario.h_u,
        "c_min": scenario.c_min,
        "c_max": scenario.c_max,
        "m_antennas": scenario.m_antennas,
        "snr_db": snr_db,
        "path_loss_exp": scenario.path_loss_exp,
        "delta_step": grids.delta_step,
        "side_step": grids.side_step,
        "perimeter_points": grids.perimeter_points,
        "mode": mode.token(),
    });
    let outputs = ["orientation.csv", "summary.json"];
    write_file(out_dir, "manifest.json", &manifest_json("twouser", None, echo, &outputs, started))?;

    for (kind, solution) in [("line search", &line_search), ("exhaustive", &exhaustive)] {
        if let Some(s) = solution {
            println!("{kind}: delta = {:.4} rad, sides {} x {} m", s.delta, s.c_a, s.c_b);
        }
    }
    if let Some(r) = rate_ratio {
        println!("line-search rate is {:.2}% of the exhaustive optimum", 100.0 * r);
    }
    println!("outputs in {}", out_dir.display());
    Ok(())
}

fn cmd_sweep(
    config_path: &Path,
    out_dir: &Path,
    snr_list: &str,
    strategies: &str,
    overrides: &[String],
) -> Result<(), CliError> {
    let started = Instant::now();
    let sim_cfg = load_sim_config(config_path, overrides)?;
    let snr_points = config::parse_snr_list(snr_list)?;
    let strategy_list = config::parse_strategy_list(strategies)?;
    ensure_out_dir(out_dir)?;

    let points = sim::snr_sweep(&sim_cfg, &snr_points, &strategy_list)
        .map_err(|e| CliError::Runtime(format!("sweep failed: {e}")))?;
    write_file(out_dir, "sweep.csv", &output::sweep_csv(&points))?;
    let echo = serde_json::json!({
        "sim": serde_json::to_value(&sim_cfg).expect("config serializes"),
        "snr_points_db_at_1km": snr_points,
        "strategies": strategy_list.iter().map(|&s| config::strategy_token(s)).collect::<Vec<_>>(),
    });
    let outputs = ["sweep.csv"];
    write_file(out_dir, "manifest.json", &manifest_json("sweep", Some(sim_cfg.seed), echo, &outputs, started))?;

    println!(
        "swept {} SNR points x {} strategies ({} rows); outputs in {}",
        snr_points.len(),
        strategy_list.len(),
        points.len(),
        out_dir.display()
    );
    Ok(())
}
