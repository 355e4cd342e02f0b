//! Flat key-value config parsing and typed builders for the subcommands.
//!
//! Grammar: one `key = value` pair per line; `#` starts a comment; blank
//! lines are ignored. Scalar keys appear at most once. Grouped entries
//! repeat: `node = x y [vx vy]` (velocity defaults to 10 m/s eastbound) and
//! `turn_velocity = vx vy` (one per node, only meaningful with `turn_step`).
//! Angles are radians, SNRs are dB, distances are meters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use uavlink_core::heading::{PfWeightMode, Strategy};
use uavlink_core::sim::SimConfig;
use uavlink_core::tracking::NodeState;
use uavlink_core::twouser::{RectangleScenario, SearchGrids};

/// Default initial node velocity when a `node` entry gives only a position.
pub const DEFAULT_NODE_VELOCITY: (f64, f64) = (10.0, 0.0);

/// CLI failure with its process exit code: bad configuration exits 2,
/// runtime trouble (I/O, numerics) exits 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parsed but untyped config: scalar keys (with their line numbers for
/// diagnostics) plus the grouped `node` / `turn_velocity` entries.
#[derive(Debug, Default)]
pub struct RawConfig {
    pub scalars: BTreeMap<String, (String, usize)>,
    pub nodes: Vec<NodeState>,
    pub turn_velocities: Vec<(f64, f64)>,
}

/// Parse the key-value text. Syntax errors name the offending line.
pub fn parse_text(text: &str) -> Result<RawConfig, CliError> {
    let mut raw = RawConfig::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let stripped = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {line_no}: expected 'key = value', got '{stripped}'")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
            return Err(config_err(format!("line {line_no}: malformed key '{key}'")));
        }
        if value.is_empty() {
            return Err(config_err(format!("line {line_no}: empty value for key '{key}'")));
        }
        match key {
            "node" => raw.nodes.push(parse_node(value, line_no)?),
            "turn_velocity" => raw.turn_velocities.push(parse_pair(value, line_no)?),
            _ => {
                if let Some((_, first)) = raw.scalars.get(key) {
                    return Err(config_err(format!(
                        "line {line_no}: duplicate key '{key}' (first set on line {first})"
                    )));
                }
                raw.scalars.insert(key.to_string(), (value.to_string(), line_no));
            }
        }
    }
    Ok(raw)
}

fn parse_floats(value: &str, line_no: usize) -> Result<Vec<f64>, CliError> {
    value
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| config_err(format!("line {line_no}: expected a number, got '{tok}'")))
        })
        .collect()
}

fn parse_node(value: &str, line_no: usize) -> Result<NodeState, CliError> {
    let nums = parse_floats(value, line_no)?;
    match nums.as_slice() {
        [x, y] => Ok(NodeState::new(*x, *y, DEFAULT_NODE_VELOCITY.0, DEFAULT_NODE_VELOCITY.1)),
        [x, y, vx, vy] => Ok(NodeState::new(*x, *y, *vx, *vy)),
        _ => Err(config_err(format!(
            "line {line_no}: 'node' takes 'x y' or 'x y vx vy', got {} numbers",
            nums.len()
        ))),
    }
}

fn parse_pair(value: &str, line_no: usize) -> Result<(f64, f64), CliError> {
    let nums = parse_floats(value, line_no)?;
    match nums.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(config_err(format!(
            "line {line_no}: 'turn_velocity' takes 'vx vy', got {} numbers",
            nums.len()
        ))),
    }
}

/// Apply `--override key=value` pairs on top of the parsed file. Only scalar
/// keys may be overridden; grouped entries must be edited in the file.
pub fn apply_overrides(raw: &mut RawConfig, overrides: &[String]) -> Result<(), CliError> {
    for entry in overrides {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| config_err(format!("override '{entry}' is not of the form key=value")))?;
        let key = key.trim();
        let value = value.trim();
        if key == "node" || key == "turn_velocity" {
            return Err(config_err(format!("key '{key}' cannot be overridden; edit the config file")));
        }
        if value.is_empty() {
            return Err(config_err(format!("override '{entry}' has an empty value")));
        }
        raw.scalars.insert(key.to_string(), (value.to_string(), 0));
    }
    Ok(())
}

/// Scalar keys the simulation commands accept (field names of the sim
/// config, plus the UAV pose and turn-event keys).
const SIM_KEYS: &[&str] = &[
    "m_antennas",
    "n_users",
    "k_factor",
    "snr_db",
    "path_loss_exp",
    "sigma_r_sq",
    "h_uav",
    "v_uav",
    "dt",
    "delta_max",
    "l_steps",
    "sigma_w_sq",
    "sigma_u_sq",
    "n_w",
    "d_max",
    "mc_samples",
    "strategy",
    "pf_weight_mode",
    "seed",
    "uav_x",
    "uav_y",
    "uav_heading",
    "turn_step",
    "turn_ratio",
];

/// Scalar keys the two-user orientation command accepts.
const TWOUSER_KEYS: &[&str] = &[
    "d",
    "h_u",
    "c_min",
    "c_max",
    "m_antennas",
    "snr_db",
    "path_loss_exp",
    "delta_step",
    "side_step",
    "perimeter_points",
];

fn check_known_keys(raw: &RawConfig, known: &[&str]) -> Result<(), CliError> {
    for (key, (_, line_no)) in &raw.scalars {
        if !known.contains(&key.as_str()) {
            let place = if *line_no == 0 { "override".to_string() } else { format!("line {line_no}") };
            return Err(config_err(format!("unknown key '{key}' ({place})")));
        }
    }
    Ok(())
}

fn require<'a>(raw: &'a RawConfig, key: &str) -> Result<&'a str, CliError> {
    raw.scalars
        .get(key)
        .map(|(v, _)| v.as_str())
        .ok_or_else(|| config_err(format!("missing required key '{key}'")))
}

fn optional<'a>(raw: &'a RawConfig, key: &str) -> Option<&'a str> {
    raw.scalars.get(key).map(|(v, _)| v.as_str())
}

fn parse_value<T: FromStr>(key: &str, s: &str) -> Result<T, CliError> {
    s.parse::<T>()
        .map_err(|_| config_err(format!("invalid value for key '{key}': '{s}'")))
}

fn required_num<T: FromStr>(raw: &RawConfig, key: &str) -> Result<T, CliError> {
    parse_value(key, require(raw, key)?)
}

/// Parse a strategy name. Accepts the documented short tokens and the
/// longer serialized spellings.
pub fn parse_strategy(s: &str) -> Result<Strategy, CliError> {
    match s {
        "sdma_max" | "sdma_max_sum" => Ok(Strategy::SdmaMaxSum),
        "sdma_pf" | "sdma_prop_fair" => Ok(Strategy::SdmaPropFair),
        "tdma_max" | "tdma_max_sum" => Ok(Strategy::TdmaMaxSum),
        "tdma_pf" | "tdma_prop_fair" => Ok(Strategy::TdmaPropFair),
        "low_snr" => Ok(Strategy::LowSnr),
        "high_snr" => Ok(Strategy::HighSnr),
        "no_interference_baseline" => Ok(Strategy::NoInterferenceBaseline),
        other => Err(config_err(format!(
            "unknown strategy '{other}' (expected sdma_max, sdma_pf, tdma_max, tdma_pf, \
             low_snr, high_snr, or no_interference_baseline)"
        ))),
    }
}

/// The short token for a strategy, as used in configs and CSV output.
pub fn strategy_token(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::SdmaMaxSum => "sdma_max",
        Strategy::SdmaPropFair => "sdma_pf",
        Strategy::TdmaMaxSum => "tdma_max",
        Strategy::TdmaPropFair => "tdma_pf",
        Strategy::LowSnr => "low_snr",
        Strategy::HighSnr => "high_snr",
        Strategy::NoInterferenceBaseline => "no_interference_baseline",
    }
}

fn parse_pf_mode(s: &str) -> Result<PfWeightMode, CliError> {
    match s {
        "inverse" | "inverse_rate" => Ok(PfWeightMode::InverseRate),
        "direct" | "direct_rate" => Ok(PfWeightMode::DirectRate),
        other => Err(config_err(format!(
            "unknown pf_weight_mode '{other}' (expected inverse or direct)"
        ))),
    }
}

/// Build and validate a simulation config from parsed raw input.
pub fn build_sim_config(raw: &RawConfig) -> Result<SimConfig, CliError> {
    check_known_keys(raw, SIM_KEYS)?;
    if raw.nodes.is_empty() {
        return Err(config_err("missing required key 'node' (one entry per ground node)"));
    }

    let turn_step: Option<usize> = match optional(raw, "turn_step") {
        Some(s) => Some(parse_value("turn_step", s)?),
        None => None,
    };
    let turn_ratio = match (turn_step.is_some(), optional(raw, "turn_ratio")) {
        (_, Some(s)) => parse_value("turn_ratio", s)?,
        (true, None) => {
            return Err(config_err("missing required key 'turn_ratio' (required when turn_step is set)"));
        }
        (false, None) => 0.0,
    };
    let turn_velocities = if raw.turn_velocities.is_empty() {
        None
    } else {
        if turn_step.is_none() {
            return Err(config_err("'turn_velocity' entries require 'turn_step'"));
        }
        if raw.turn_velocities.len() != raw.nodes.len() {
            return Err(config_err(format!(
                "need one 'turn_velocity' per node: got {} for {} nodes",
                raw.turn_velocities.len(),
                raw.nodes.len()
            )));
        }
        Some(raw.turn_velocities.clone())
    };

    let config = SimConfig {
        m_antennas: required_num(raw, "m_antennas")?,
        n_users: required_num(raw, "n_users")?,
        k_factor: required_num(raw, "k_factor")?,
        snr_db: required_num(raw, "snr_db")?,
        path_loss_exp: required_num(raw, "path_loss_exp")?,
        sigma_r_sq: required_num(raw, "sigma_r_sq")?,
        h_uav: required_num(raw, "h_uav")?,
        v_uav: required_num(raw, "v_uav")?,
        dt: required_num(raw, "dt")?,
        delta_max: required_num(raw, "delta_max")?,
        l_steps: required_num(raw, "l_steps")?,
        sigma_w_sq: required_num(raw, "sigma_w_sq")?,
        sigma_u_sq: required_num(raw, "sigma_u_sq")?,
        n_w: required_num(raw, "n_w")?,
        d_max: required_num(raw, "d_max")?,
        mc_samples: required_num(raw, "mc_samples")?,
        strategy: parse_strategy(require(raw, "strategy")?)?,
        pf_weight_mode: match optional(raw, "pf_weight_mode") {
            Some(s) => parse_pf_mode(s)?,
            None => PfWeightMode::InverseRate,
        },
        seed: required_num(raw, "seed")?,
        initial_nodes: raw.nodes.clone(),
        uav_x: required_num(raw, "uav_x")?,
        uav_y: required_num(raw, "uav_y")?,
        uav_heading: match optional(raw, "uav_heading") {
            Some(s) => parse_value("uav_heading", s)?,
            None => 0.0,
        },
        turn_step,
        turn_ratio,
        turn_velocities,
    };
    config.validate().map_err(|e| config_err(format!("invalid config: {e}")))?;
    Ok(config)
}

/// Typed two-user orientation inputs: the scenario, search grids, and the
/// configured SNR (kept in dB for echoing).
#[derive(Debug, Clone, Copy)]
pub struct TwouserConfig {
    pub scenario: RectangleScenario,
    pub grids: SearchGrids,
    pub snr_db: f64,
}

/// Build and validate a two-user orientation config.
pub fn build_twouser_config(raw: &RawConfig) -> Result<TwouserConfig, CliError> {
    check_known_keys(raw, TWOUSER_KEYS)?;
    if !raw.nodes.is_empty() || !raw.turn_velocities.is_empty() {
        return Err(config_err("'node' and 'turn_velocity' entries are not valid for twouser"));
    }
    let snr_db: f64 = required_num(raw, "snr_db")?;
    let path_loss_exp = match optional(raw, "path_loss_exp") {
        Some(s) => parse_value("path_loss_exp", s)?,
        None => 1.0,
    };
    let scenario = RectangleScenario::new(
        required_num(raw, "d")?,
        required_num(raw, "h_u")?,
        required_num(raw, "c_min")?,
        required_num(raw, "c_max")?,
        required_num(raw, "m_antennas")?,
        10f64.powf(snr_db / 10.0),
        path_loss_exp,
    )
    .map_err(|e| config_err(format!("invalid config: {e}")))?;
    let defaults = SearchGrids::default();
    let grids = SearchGrids {
        delta_step: match optional(raw, "delta_step") {
            Some(s) => parse_value("delta_step", s)?,
            None => defaults.delta_step,
        },
        side_step: match optional(raw, "side_step") {
            Some(s) => parse_value("side_step", s)?,
            None => defaults.side_step,
        },
        perimeter_points: match optional(raw, "perimeter_points") {
            Some(s) => parse_value("perimeter_points", s)?,
            None => defaults.perimeter_points,
        },
    };
    Ok(TwouserConfig { scenario, grids, snr_db })
}

/// Parse a comma-separated list of SNR points in dB.
pub fn parse_snr_list(s: &str) -> Result<Vec<f64>, CliError> {
    let points: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| config_err(format!("invalid SNR point '{tok}' in --snr-list")))
        })
        .collect::<Result<_, _>>()?;
    if points.is_empty() {
        return Err(config_err("--snr-list needs at least one SNR point"));
    }
    Ok(points)
}

/// Parse a comma-separated list of strategy names.
pub fn parse_strategy_list(s: &str) -> Result<Vec<Strategy>, CliError> {
    let strategies: Vec<Strategy> = s
        .split(',')
        .map(str::trim)
        .filter(|tok| !tok.is_empty())
        .map(parse_strategy)
        .collect::<Result<_, _>>()?;
    if strategies.is_empty() {
        return Err(config_err("--strategies needs at least one strategy"));
    }
    Ok(strategies)
}
