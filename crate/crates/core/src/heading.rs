//! Heading selection under a per-step turn-rate constraint.
//!
//! Each step the controller: (1) takes Kalman-predicted node positions,
//! (2) finds the heading maximizing the strategy's objective by a global
//! line search over `[0, 2pi)` (or a closed-form/candidate-set shortcut for
//! the asymptotic strategies), then clamps it into the reachable window
//! `[prev - dmax, prev + dmax]`, (3) overrides the result with a clamped
//! flight toward the nodes' center of gravity whenever the next position
//! would drift too far away, and (4) reports the decision with diagnostics.
//!
//! The window test is an interval test on normalized angles (an optimum just
//! across the 0/2pi seam counts as outside); the boundary then picked is the
//! circularly nearer of `prev +/- dmax`.

use serde::Serialize;

use crate::asymptotic;
use crate::beamforming::{expected_sinr_lower_bound, expected_snr_no_interference, LinkBudget};
use crate::channel::RicianParams;
use crate::error::{Error, Result};
use crate::geometry::{
    circular_distance, los_geometry, normalize_angle, GroundPosition, UavPose,
};
use crate::linesearch::grid_then_golden_max;
use crate::tracking::{kf_predict, KalmanEstimate, NoiseParams};

/// Uniform grid size of the global heading line search.
pub const LINE_SEARCH_GRID_POINTS: usize = 720;
/// Refinement tolerance of the line search, in radians.
pub const LINE_SEARCH_TOL: f64 = 1e-4;
/// Floor applied to average rates before inverting them into weights.
pub const RATE_FLOOR: f64 = 1e-6;

/// Per-step kinematic limits of the UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingConstraint {
    /// Largest allowed heading change per step, in `(0, pi]`.
    pub delta_max: f64,
    /// UAV speed in m/s.
    pub v_u: f64,
    /// Step length in seconds.
    pub dt: f64,
}

impl HeadingConstraint {
    pub fn new(delta_max: f64, v_u: f64, dt: f64) -> Result<Self> {
        if !(delta_max > 0.0 && delta_max <= std::f64::consts::PI) {
            return Err(Error::invalid("delta_max", format!("must be in (0, pi], got {delta_max}")));
        }
        if !(v_u >= 0.0) {
            return Err(Error::invalid("v_u", format!("must be >= 0, got {v_u}")));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        Ok(HeadingConstraint { delta_max, v_u, dt })
    }

    /// Distance flown in one step.
    pub fn step_length(&self) -> f64 {
        self.v_u * self.dt
    }
}

/// Heading strategy of the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Line search on the weighted SDMA rate bound, uniform unit weights.
    SdmaMaxSum,
    /// Line search on the SDMA bound with proportional-fairness weights.
    SdmaPropFair,
    /// Line search on the TDMA objective, uniform unit weights.
    TdmaMaxSum,
    /// Line search on the TDMA objective with proportional-fairness weights.
    TdmaPropFair,
    /// Closed-form sinusoidal surrogate, valid at low SNR.
    LowSnr,
    /// Correlation-zero candidate search, valid at high SNR.
    HighSnr,
    /// Line search assuming no inter-user interference (reference upper
    /// bound; rates are also scored without interference).
    NoInterferenceBaseline,
}

impl Strategy {
    pub fn is_prop_fair(&self) -> bool {
        matches!(self, Strategy::SdmaPropFair | Strategy::TdmaPropFair)
    }
}

/// How proportional-fairness weights are derived from average rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PfWeightMode {
    /// Weights proportional to `1 / max(avg_rate, floor)` (favor the starved).
    InverseRate,
    /// Weights proportional to the average rates themselves.
    DirectRate,
}

/// Objective family used when updating fairness state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveMode {
    MaxSum,
    PropFair,
}

/// Running per-user average rates and the current objective weights.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessState {
    avg_rates: Vec<f64>,
    weights: Vec<f64>,
    steps_since_refresh: usize,
    steps_recorded: usize,
    n_w: usize,
    weight_mode: PfWeightMode,
}

impl FairnessState {
    /// Fresh state with uniform weights.
    pub fn new(n_users: usize, n_w: usize, weight_mode: PfWeightMode) -> Result<Self> {
        if n_users == 0 {
            return Err(Error::invalid("n_users", "must be at least 1"));
        }
        if n_w == 0 {
            return Err(Error::invalid("n_w", "must be at least 1"));
        }
        Ok(FairnessState {
            avg_rates: vec![0.0; n_users],
            weights: vec![1.0 / n_users as f64; n_users],
            steps_since_refresh: 0,
            steps_recorded: 0,
            n_w,
            weight_mode,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn avg_rates(&self) -> &[f64] {
        &self.avg_rates
    }

    pub fn steps_recorded(&self) -> usize {
        self.steps_recorded
    }
}

/// Fold one step's realized per-user rates into the running averages and,
/// in proportional-fair mode, refresh the weights every `n_w` steps.
pub fn update_fairness(state: &FairnessState, latest_rates: &[f64], mode: ObjectiveMode) -> FairnessState {
    assert_eq!(latest_rates.len(), state.avg_rates.len(), "rate vector length mismatch");
    let k = state.steps_recorded as f64;
    let avg_rates: Vec<f64> = state
        .avg_rates
        .iter()
        .zip(latest_rates)
        .map(|(&a, &r)| (a * k + r) / (k + 1.0))
        .collect();
    let mut weights = state.weights.clone();
    let mut steps_since_refresh = state.steps_since_refresh + 1;
    if mode == ObjectiveMode::PropFair && steps_since_refresh >= state.n_w {
        weights = refresh_weights(&avg_rates, state.weight_mode);
        steps_since_refresh = 0;
    }
    FairnessState {
        avg_rates,
        weights,
        steps_since_refresh,
        steps_recorded: state.steps_recorded + 1,
        n_w: state.n_w,
        weight_mode: state.weight_mode,
    }
}

fn refresh_weights(avg_rates: &[f64], mode: PfWeightMode) -> Vec<f64> {
    let n = avg_rates.len();
    let raw: Vec<f64> = match mode {
        PfWeightMode::InverseRate => avg_rates.iter().map(|&r| 1.0 / r.max(RATE_FLOOR)).collect(),
        PfWeightMode::DirectRate => avg_rates.iter().map(|&r| r.max(0.0)).collect(),
    };
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        vec![1.0 / n as f64; n]
    } else {
        raw.iter().map(|&w| w / sum).collect()
    }
}

/// Final heading with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeadingDecision {
    /// Heading flown this step, in `[0, 2pi)`.
    pub heading: f64,
    /// Strategy objective evaluated at the final heading. Bits/s/Hz for the
    /// rate-based strategies; the asymptotic shortcuts report their own
    /// surrogate until the caller rescores them.
    pub objective_value: f64,
    /// Whether the turn limit bound the decision.
    pub clamped: bool,
    /// Whether the center-of-gravity guard overrode the strategy.
    pub cog_guard_fired: bool,
    /// Whether a degenerate surrogate (no heading dependence) forced
    /// holding the previous heading.
    pub degenerate: bool,
}

/// UAV position after flying one step along `heading`.
pub fn predicted_uav_position(uav: &UavPose, heading: f64, constraint: &HeadingConstraint) -> (f64, f64) {
    let step = constraint.step_length();
    (uav.x + step * heading.cos(), uav.y + step * heading.sin())
}

fn candidate_pose(uav: &UavPose, heading: f64, constraint: &HeadingConstraint) -> UavPose {
    let (x, y) = predicted_uav_position(uav, heading, constraint);
    UavPose::new(x, y, uav.altitude, heading)
}

/// Weighted SDMA rate-bound objective at a candidate next pose:
/// `sum_i w_i log2(1 + bound_i)`.
pub fn sdma_objective(
    candidate_heading: f64,
    uav: &UavPose,
    predicted_nodes: &[GroundPosition],
    params: &RicianParams,
    budget: &LinkBudget,
    weights: &[f64],
    constraint: &HeadingConstraint,
) -> Result<f64> {
    let pose = candidate_pose(uav, candidate_heading, constraint);
    let geoms: Vec<_> = predicted_nodes.iter().map(|n| los_geometry(&pose, n)).collect();
    let mut total = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        let bound = expected_sinr_lower_bound(&geoms, i, params, budget)?;
        total += w * (1.0 + bound).log2();
    }
    Ok(total)
}

/// Weighted TDMA objective at a candidate next pose:
/// `(1/N) sum_i w_i log2(1 + rho M / d_i^{2a})`.
pub fn tdma_objective(
    candidate_heading: f64,
    uav: &UavPose,
    predicted_nodes: &[GroundPosition],
    params: &RicianParams,
    budget: &LinkBudget,
    weights: &[f64],
    constraint: &HeadingConstraint,
) -> f64 {
    no_interference_objective(candidate_heading, uav, predicted_nodes, params, budget, weights, constraint)
        / predicted_nodes.len() as f64
}

/// Interference-free objective (no time sharing):
/// `sum_i w_i log2(1 + rho M / d_i^{2a})`.
pub fn no_interference_objective(
    candidate_heading: f64,
    uav: &UavPose,
    predicted_nodes: &[GroundPosition],
    params: &RicianParams,
    budget: &LinkBudget,
    weights: &[f64],
    constraint: &HeadingConstraint,
) -> f64 {
    let pose = candidate_pose(uav, candidate_heading, constraint);
    predicted_nodes
        .iter()
        .zip(weights)
        .map(|(n, &w)| {
            let d = crate::geometry::distance(&pose, n);
            w * (1.0 + expected_snr_no_interference(d, params, budget)).log2()
        })
        .sum()
}

/// Maximize an arbitrary heading objective over `[0, 2pi)`: uniform grid plus
/// golden-section refinement of the winning cell. Ties keep the smallest
/// heading. Returns (heading in `[0, 2pi)`, objective value).
pub fn global_line_search<F: FnMut(f64) -> f64>(objective: F, grid_points: usize) -> (f64, f64) {
    let (x, v) =
        grid_then_golden_max(objective, 0.0, std::f64::consts::TAU, grid_points, LINE_SEARCH_TOL);
    (normalize_angle(x), v)
}

pub(crate) fn clamp_heading_inner(
    unconstrained: f64,
    previous: f64,
    constraint: &HeadingConstraint,
) -> (f64, bool) {
    let u = normalize_angle(unconstrained);
    let prev = normalize_angle(previous);
    if (u - prev).abs() <= constraint.delta_max {
        return (u, false);
    }
    let minus = normalize_angle(prev - constraint.delta_max);
    let plus = normalize_angle(prev + constraint.delta_max);
    if circular_distance(minus, u) <= circular_distance(plus, u) {
        (minus, true)
    } else {
        (plus, true)
    }
}

/// Clamp a desired heading into the turn window around `previous`. The
/// window membership test compares normalized angles on the real line; when
/// outside, the circularly nearer window boundary wins.
pub fn clamp_heading(unconstrained: f64, previous: f64, constraint: &HeadingConstraint) -> f64 {
    clamp_heading_inner(unconstrained, previous, constraint).0
}

/// Center of gravity of the predicted node positions.
pub fn center_of_gravity(predicted_nodes: &[GroundPosition]) -> GroundPosition {
    let n = predicted_nodes.len() as f64;
    GroundPosition {
        x: predicted_nodes.iter().map(|p| p.x).sum::<f64>() / n,
        y: predicted_nodes.iter().map(|p| p.y).sum::<f64>() / n,
    }
}

/// Range guard: if flying `clamped_heading` would put the UAV at least
/// `d_max` (horizontally) from the predicted center of gravity, replace it by
/// the clamped bearing toward the center of gravity. `objective_value` is
/// left NaN for the caller to fill in.
pub fn cog_guard(
    clamped_heading: f64,
    uav: &UavPose,
    predicted_nodes: &[GroundPosition],
    constraint: &HeadingConstraint,
    d_max: f64,
    previous_heading: f64,
) -> HeadingDecision {
    let (nx, ny) = predicted_uav_position(uav, clamped_heading, constraint);
    let cog = center_of_gravity(predicted_nodes);
    let drift = (nx - cog.x).hypot(ny - cog.y);
    if drift >= d_max {
        let bearing = crate::geometry::bearing(uav, &cog);
        let (heading, clamped) = clamp_heading_inner(bearing, previous_heading, constraint);
        HeadingDecision {
            heading,
            objective_value: f64::NAN,
            clamped,
            cog_guard_fired: true,
            degenerate: false,
        }
    } else {
        HeadingDecision {
            heading: normalize_angle(clamped_heading),
            objective_value: f64::NAN,
            clamped: false,
            cog_guard_fired: false,
            degenerate: false,
        }
    }
}

/// Full per-step heading decision: Kalman-predict node positions, optimize
/// the strategy objective inside the turn window, apply the center-of-gravity
/// guard, and report the objective value at the final heading.
#[allow(clippy::too_many_arguments)]
pub fn decide_heading(
    strategy: Strategy,
    uav: &UavPose,
    estimates: &[KalmanEstimate],
    fairness: &FairnessState,
    params: &RicianParams,
    budget: &LinkBudget,
    constraint: &HeadingConstraint,
    d_max: f64,
    noise: &NoiseParams,
) -> Result<HeadingDecision> {
    if estimates.is_empty() {
        return Err(Error::invalid("estimates", "at least one tracked node required"));
    }
    if estimates.len() != fairness.weights().len() {
        return Err(Error::invalid("fairness", "weight count must match node count"));
    }
    let predicted: Vec<GroundPosition> = estimates
        .iter()
        .map(|e| {
            let p = kf_predict(e, noise);
            GroundPosition { x: p.mean[0], y: p.mean[1] }
        })
        .collect();

    let unit_weights = vec![1.0; predicted.len()];
    let weights: &[f64] = if strategy.is_prop_fair() { fairness.weights() } else { &unit_weights };

    // Strategy-specific optimum, clamped into the turn window.
    let (strategy_heading, strategy_clamped, degenerate) = match strategy {
        Strategy::SdmaMaxSum | Strategy::SdmaPropFair => {
            // Surface systematic evaluation errors once, then let the search
            // treat stray failures as -inf.
            sdma_objective(uav.heading, uav, &predicted, params, budget, weights, constraint)?;
            let (opt, _) = global_line_search(
                |h| {
                    sdma_objective(h, uav, &predicted, params, budget, weights, constraint)
                        .unwrap_or(f64::NEG_INFINITY)
                },
                LINE_SEARCH_GRID_POINTS,
            );
            let (h, c) = clamp_heading_inner(opt, uav.heading, constraint);
            (h, c, false)
        }
        Strategy::TdmaMaxSum | Strategy::TdmaPropFair => {
            let (opt, _) = global_line_search(
                |h| tdma_objective(h, uav, &predicted, params, budget, weights, constraint),
                LINE_SEARCH_GRID_POINTS,
            );
            let (h, c) = clamp_heading_inner(opt, uav.heading, constraint);
            (h, c, false)
        }
        Strategy::NoInterferenceBaseline => {
            let (opt, _) = global_line_search(
                |h| no_interference_objective(h, uav, &predicted, params, budget, weights, constraint),
                LINE_SEARCH_GRID_POINTS,
            );
            let (h, c) = clamp_heading_inner(opt, uav.heading, constraint);
            (h, c, false)
        }
        Strategy::LowSnr => {
            let d = asymptotic::low_snr_heading(uav, &predicted, params, budget, constraint);
            (d.heading, d.clamped, d.degenerate)
        }
        Strategy::HighSnr => {
            let d = asymptotic::high_snr_heading(uav, &predicted, params, constraint);
            (d.heading, d.clamped, d.degenerate)
        }
    };

    let mut decision = cog_guard(strategy_heading, uav, &predicted, constraint, d_max, uav.heading);
    if !decision.cog_guard_fired {
        decision.clamped = strategy_clamped;
        decision.degenerate = degenerate;
    }

    decision.objective_value = match strategy {
        Strategy::SdmaMaxSum
        | Strategy::SdmaPropFair
        | Strategy::LowSnr
        | Strategy::HighSnr => {
            sdma_objective(decision.heading, uav, &predicted, params, budget, weights, constraint)?
        }
        Strategy::TdmaMaxSum | Strategy::TdmaPropFair => {
            tdma_objective(decision.heading, uav, &predicted, params, budget, weights, constraint)
        }
        Strategy::NoInterferenceBaseline => {
            no_interference_objective(decision.heading, uav, &predicted, params, budget, weights, constraint)
        }
    };
    Ok(decision)
}
