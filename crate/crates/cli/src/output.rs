//! Plot-ready CSV and JSON emission. Numeric CSV fields carry 9 significant
//! digits; integer fields are plain decimals. Headers are stable: downstream
//! plotting scripts may rely on them.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use uavlink_core::sim::{SimConfig, SimResult, SweepPoint};
use uavlink_core::twouser::{averaged_correlation, OrientationSolution, RectangleScenario, SearchGrids};

use crate::config::strategy_token;

/// Scientific notation with 9 significant digits.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// `trajectory.csv`: per step, the flown UAV pose and every true node
/// position. Columns: step, uav_x, uav_y, heading, node{i}_x, node{i}_y.
pub fn trajectory_csv(result: &SimResult) -> String {
    let n_users = result.average_per_user.len();
    let mut out = String::from("step,uav_x,uav_y,heading");
    for i in 1..=n_users {
        let _ = write!(out, ",node{i}_x,node{i}_y");
    }
    out.push('\n');
    for record in &result.records {
        let _ = write!(
            out,
            "{},{},{},{}",
            record.step,
            sig9(record.uav.x),
            sig9(record.uav.y),
            sig9(record.uav.heading)
        );
        for node in &record.true_nodes {
            let _ = write!(out, ",{},{}", sig9(node.x), sig9(node.y));
        }
        out.push('\n');
    }
    out
}

/// `rates.csv`: per step, the ergodic per-user rates, their sum, and the
/// Monte Carlo standard error of the sum.
pub fn rates_csv(result: &SimResult) -> String {
    let n_users = result.average_per_user.len();
    let mut out = String::from("step");
    for i in 1..=n_users {
        let _ = write!(out, ",rate_user{i}");
    }
    out.push_str(",sum_rate,stderr\n");
    for record in &result.records {
        let _ = write!(out, "{}", record.step);
        for rate in &record.per_user_rates {
            let _ = write!(out, ",{}", sig9(*rate));
        }
        let _ = writeln!(out, ",{},{}", sig9(record.sum_rate), sig9(record.sum_stderr));
    }
    out
}

/// `summary.json` for a simulation run: the averages plus the identifying
/// strategy and seed.
pub fn simulate_summary_json(config: &SimConfig, result: &SimResult) -> String {
    let value = serde_json::json!({
        "strategy": strategy_token(config.strategy),
        "seed": config.seed,
        "l_steps": config.l_steps,
        "average_per_user": result.average_per_user,
        "average_sum_rate": result.average_sum_rate,
        "average_sum_stderr": result.average_sum_stderr,
    });
    pretty(&value)
}

/// `sweep.csv`: one row per (SNR point, strategy), in sweep order
/// (SNR-major).
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("snr_db_at_1km,strategy,avg_sum_rate,stderr\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            sig9(p.snr_db_at_1km),
            strategy_token(p.strategy),
            sig9(p.avg_sum_rate),
            sig9(p.stderr)
        );
    }
    out
}

/// `orientation.csv`: the line-search objective over the orientation grid
/// (kind `grid`; lower is better), then one row per computed optimum (kinds
/// `line_search` and `exhaustive`; the exhaustive value is the
/// perimeter-averaged sum rate, higher is better).
pub fn orientation_csv(
    scenario: &RectangleScenario,
    grids: &SearchGrids,
    line_search: Option<&OrientationSolution>,
    exhaustive: Option<&OrientationSolution>,
) -> String {
    let mut out = String::from("kind,delta,c_a,c_b,value\n");
    let steps = (FRAC_PI_2 / grids.delta_step).ceil() as usize;
    for k in 0..=steps {
        let delta = (k as f64 * grids.delta_step).min(FRAC_PI_2);
        let objective = averaged_correlation(delta, scenario.c_max, scenario.c_min, scenario);
        let _ = writeln!(
            out,
            "grid,{},{},{},{}",
            sig9(delta),
            sig9(scenario.c_max),
            sig9(scenario.c_min),
            sig9(objective)
        );
    }
    for (kind, solution) in [("line_search", line_search), ("exhaustive", exhaustive)] {
        if let Some(s) = solution {
            let _ = writeln!(
                out,
                "{kind},{},{},{},{}",
                sig9(s.delta),
                sig9(s.c_a),
                sig9(s.c_b),
                sig9(s.value)
            );
        }
    }
    out
}

/// Pretty-printed JSON with a trailing newline.
pub fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serialization cannot fail");
    s.push('\n');
    s
}
