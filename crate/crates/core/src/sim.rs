//! Per-step simulation loop tying tracking, heading control, and Monte
//! Carlo rate accounting together.
//!
//! Each step: ground nodes move (with an optional scripted sharp turn),
//! the UAV takes noisy position measurements and runs the Kalman update
//! and predict, decides its next heading from the predicted node positions
//! under the configured strategy, flies one step, and scores ergodic rates
//! by Monte Carlo at the true node positions and the actual new pose.
//! Everything is a deterministic function of the seed: mobility,
//! measurement, and per-step rate estimation draw from disjoint
//! counter-derived substreams, independent of worker count.

use serde::Serialize;

use crate::beamforming::{ergodic_rates_scheme, AccessScheme, LinkBudget};
use crate::channel::RicianParams;
use crate::error::{Error, Result};
use crate::geometry::{GroundPosition, UavPose, los_geometry};
use crate::heading::{
    decide_heading, predicted_uav_position, update_fairness, FairnessState, HeadingConstraint,
    HeadingDecision, ObjectiveMode, PfWeightMode, Strategy,
};
use crate::rng::{RngStream, BRANCH_MC_BASE, BRANCH_MEASUREMENT, BRANCH_MOBILITY};
use crate::tracking::{
    initial_estimate, kf_predict, kf_update, measure, mobility_step, KalmanEstimate, NodeState,
    NoiseParams,
};

/// Velocity variance of the initial node estimates (position is known).
pub const INITIAL_VELOCITY_VAR: f64 = 1.0;

/// Full scenario description. Distances in meters, times in seconds,
/// angles in radians, powers linear unless suffixed `_db`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub m_antennas: usize,
    pub n_users: usize,
    pub k_factor: f64,
    /// Transmit power over noise power at 1 m, in dB.
    pub snr_db: f64,
    pub path_loss_exp: f64,
    pub sigma_r_sq: f64,
    pub h_uav: f64,
    pub v_uav: f64,
    pub dt: f64,
    pub delta_max: f64,
    pub l_steps: usize,
    pub sigma_w_sq: f64,
    pub sigma_u_sq: f64,
    /// Steps between proportional-fairness weight refreshes.
    pub n_w: usize,
    /// Center-of-gravity guard distance, meters.
    pub d_max: f64,
    pub mc_samples: usize,
    pub strategy: Strategy,
    pub pf_weight_mode: PfWeightMode,
    pub seed: u64,
    pub initial_nodes: Vec<NodeState>,
    pub uav_x: f64,
    pub uav_y: f64,
    pub uav_heading: f64,
    /// 1-based step at which every node turns sharply; `None` disables.
    pub turn_step: Option<usize>,
    /// Post-turn velocity-component ratio `vy / vx`; speed is preserved and
    /// the new direction takes the positive-x branch of `atan(turn_ratio)`.
    pub turn_ratio: f64,
    /// Optional per-node post-turn velocities overriding the ratio rule.
    pub turn_velocities: Option<Vec<(f64, f64)>>,
}

impl SimConfig {
    /// The four-node mobile scenario used throughout: 4-antenna UAV at
    /// 45 dB, eastbound nodes turning sharply at step 150.
    pub fn reference_scenario() -> SimConfig {
        SimConfig {
            m_antennas: 4,
            n_users: 4,
            k_factor: 10.0,
            snr_db: 45.0,
            path_loss_exp: 1.0,
            sigma_r_sq: 0.05,
            h_uav: 350.0,
            v_uav: 50.0,
            dt: 1.0,
            delta_max: std::f64::consts::FRAC_PI_6,
            l_steps: 300,
            sigma_w_sq: 0.5,
            sigma_u_sq: 0.1,
            n_w: 4,
            d_max: 300.0,
            mc_samples: 1000,
            strategy: Strategy::SdmaMaxSum,
            pf_weight_mode: PfWeightMode::InverseRate,
            seed: 7,
            initial_nodes: vec![
                NodeState::new(0.0, 25.0, 10.0, 0.0),
                NodeState::new(240.0, 20.0, 10.0, 0.0),
                NodeState::new(610.0, 30.0, 10.0, 0.0),
                NodeState::new(1240.0, 20.0, 10.0, 0.0),
            ],
            uav_x: 50.0,
            uav_y: 100.0,
            uav_heading: 0.0,
            turn_step: Some(150),
            turn_ratio: -1.8856,
            turn_velocities: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::invalid("n_users", "need at least one user"));
        }
        if self.n_users > self.m_antennas {
            return Err(Error::invalid(
                "n_users",
                format!(
                    "must not exceed m_antennas ({} > {})",
                    self.n_users, self.m_antennas
                ),
            ));
        }
        if self.l_steps == 0 {
            return Err(Error::invalid("l_steps", "need at least one step"));
        }
        if self.l_steps as u64 >= (u32::MAX - BRANCH_MC_BASE) as u64 {
            return Err(Error::invalid("l_steps", "too many steps for the RNG branch space"));
        }
        if self.initial_nodes.len() != self.n_users {
            return Err(Error::invalid(
                "initial_nodes",
                format!("expected {} nodes, got {}", self.n_users, self.initial_nodes.len()),
            ));
        }
        if !(self.h_uav > 0.0) {
            return Err(Error::invalid("h_uav", "must be > 0"));
        }
        if !(self.d_max > 0.0) {
            return Err(Error::invalid("d_max", "must be > 0"));
        }
        if self.mc_samples == 0 {
            return Err(Error::invalid("mc_samples", "need at least one sample"));
        }
        if self.n_w == 0 {
            return Err(Error::invalid("n_w", "must be at least 1"));
        }
        if let Some(t) = self.turn_step {
            if t == 0 {
                return Err(Error::invalid("turn_step", "steps are 1-based; use 1 or later"));
            }
        }
        if let Some(v) = &self.turn_velocities {
            if v.len() != self.n_users {
                return Err(Error::invalid(
                    "turn_velocities",
                    format!("expected {} entries, got {}", self.n_users, v.len()),
                ));
            }
        }
        // Sub-component constructors own the remaining range checks.
        RicianParams::new(self.k_factor, self.m_antennas, self.sigma_r_sq, self.path_loss_exp)?;
        LinkBudget::from_db(self.snr_db, self.n_users)?;
        HeadingConstraint::new(self.delta_max, self.v_uav, self.dt)?;
        NoiseParams::new(self.sigma_w_sq, self.sigma_u_sq, self.dt)?;
        Ok(())
    }
}

/// Everything observed during one step (1-based index).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    /// Pose after this step's move; rates are scored here.
    pub uav: UavPose,
    pub true_nodes: Vec<NodeState>,
    /// One-step-ahead node positions the controller optimized against.
    pub predicted_nodes: Vec<GroundPosition>,
    pub decision: HeadingDecision,
    pub per_user_rates: Vec<f64>,
    pub per_user_stderr: Vec<f64>,
    pub sum_rate: f64,
    pub sum_stderr: f64,
}

/// Complete simulation output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub records: Vec<StepRecord>,
    pub average_per_user: Vec<f64>,
    pub average_sum_rate: f64,
    /// Monte Carlo standard error of `average_sum_rate`, treating per-step
    /// estimates as independent.
    pub average_sum_stderr: f64,
}

fn access_scheme(strategy: Strategy) -> AccessScheme {
    match strategy {
        Strategy::SdmaMaxSum | Strategy::SdmaPropFair | Strategy::LowSnr | Strategy::HighSnr => {
            AccessScheme::Sdma
        }
        Strategy::TdmaMaxSum | Strategy::TdmaPropFair => AccessScheme::Tdma,
        Strategy::NoInterferenceBaseline => AccessScheme::NoInterference,
    }
}

fn turned_velocity(node: &NodeState, ratio: f64) -> (f64, f64) {
    let speed = node.speed();
    let angle = ratio.atan();
    (speed * angle.cos(), speed * angle.sin())
}

/// Run the full scenario. Deterministic given `config.seed`, regardless of
/// worker count.
pub fn run(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let params = RicianParams::new(
        config.k_factor,
        config.m_antennas,
        config.sigma_r_sq,
        config.path_loss_exp,
    )?;
    let budget = LinkBudget::from_db(config.snr_db, config.n_users)?;
    let constraint = HeadingConstraint::new(config.delta_max, config.v_uav, config.dt)?;
    let noise = NoiseParams::new(config.sigma_w_sq, config.sigma_u_sq, config.dt)?;
    let scheme = access_scheme(config.strategy);
    let objective_mode = if config.strategy.is_prop_fair() {
        ObjectiveMode::PropFair
    } else {
        ObjectiveMode::MaxSum
    };

    let root = RngStream::root(config.seed);
    let mobility = root.branch(BRANCH_MOBILITY);
    let measurement = root.branch(BRANCH_MEASUREMENT);

    let mut nodes = config.initial_nodes.clone();
    let mut uav = UavPose::new(config.uav_x, config.uav_y, config.h_uav, config.uav_heading);
    let mut fairness =
        FairnessState::new(config.n_users, config.n_w, config.pf_weight_mode)?;

    // Known initial positions, configured velocities with unit variance.
    let posteriors: Vec<KalmanEstimate> = nodes
        .iter()
        .map(|s| initial_estimate((s.x, s.y), (s.vx, s.vy), INITIAL_VELOCITY_VAR))
        .collect();
    let mut priors: Vec<KalmanEstimate> =
        posteriors.iter().map(|p| kf_predict(p, &noise)).collect();

    let mut records = Vec::with_capacity(config.l_steps);
    for step in 1..=config.l_steps {
        // (1) Ground motion, with the scripted sharp turn.
        if Some(step) == config.turn_step {
            for (i, node) in nodes.iter_mut().enumerate() {
                let (vx, vy) = match &config.turn_velocities {
                    Some(v) => v[i],
                    None => turned_velocity(node, config.turn_ratio),
                };
                node.vx = vx;
                node.vy = vy;
            }
        }
        let mut move_rng = mobility.rng(step as u32);
        nodes = nodes.iter().map(|s| mobility_step(s, &noise, &mut move_rng)).collect();

        // (2) Measure, update, and predict ahead for the next step.
        let mut meas_rng = measurement.rng(step as u32);
        let mut posteriors = Vec::with_capacity(config.n_users);
        for (node, prior) in nodes.iter().zip(&priors) {
            let z = measure(node, &noise, &mut meas_rng);
            posteriors.push(kf_update(prior, &z, &noise)?);
        }
        priors = posteriors.iter().map(|p| kf_predict(p, &noise)).collect();

        // (3) Heading decision from the predicted node positions.
        let decision = decide_heading(
            config.strategy,
            &uav,
            &posteriors,
            &fairness,
            &params,
            &budget,
            &constraint,
            config.d_max,
            &noise,
        )?;
        let predicted_nodes: Vec<GroundPosition> = priors
            .iter()
            .map(|p| GroundPosition { x: p.mean[0], y: p.mean[1] })
            .collect();

        // (4) Fly one step along the decided heading.
        let (x, y) = predicted_uav_position(&uav, decision.heading, &constraint);
        uav = UavPose::new(x, y, config.h_uav, decision.heading);

        // (5) Ergodic rates at the true positions and the actual pose.
        let geoms: Vec<_> = nodes
            .iter()
            .map(|s| los_geometry(&uav, &GroundPosition { x: s.x, y: s.y }))
            .collect();
        let mc_stream = root.branch(BRANCH_MC_BASE + step as u32);
        let rates =
            ergodic_rates_scheme(scheme, &geoms, &params, &budget, config.mc_samples, &mc_stream)?;
        fairness = update_fairness(&fairness, &rates.per_user, objective_mode);

        records.push(StepRecord {
            step,
            uav,
            true_nodes: nodes.clone(),
            predicted_nodes,
            decision,
            per_user_rates: rates.per_user,
            per_user_stderr: rates.per_user_stderr,
            sum_rate: rates.sum_rate,
            sum_stderr: rates.sum_stderr,
        });
    }

    let l = config.l_steps as f64;
    let mut average_per_user = vec![0.0; config.n_users];
    let mut average_sum_rate = 0.0;
    let mut stderr_sq = 0.0;
    for r in &records {
        for (avg, &rate) in average_per_user.iter_mut().zip(&r.per_user_rates) {
            *avg += rate / l;
        }
        average_sum_rate += r.sum_rate / l;
        stderr_sq += r.sum_stderr * r.sum_stderr;
    }
    Ok(SimResult {
        records,
        average_per_user,
        average_sum_rate,
        average_sum_stderr: stderr_sq.sqrt() / l,
    })
}

/// One row of an SNR sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    /// Reference SNR a node would have at 1 km, in dB.
    pub snr_db_at_1km: f64,
    pub strategy: Strategy,
    pub avg_sum_rate: f64,
    pub stderr: f64,
}

/// Convert a 1-km reference SNR to the transmit-power figure `snr_db`:
/// the power that yields `reference_db` after `2 alpha` decades of pathloss
/// over 1000 m.
pub fn snr_db_from_reference(reference_db: f64, path_loss_exp: f64) -> f64 {
    reference_db + 2.0 * path_loss_exp * 10.0 * 1000f64.log10()
}

/// Run every (SNR point, strategy) combination with a shared seed and
/// return the average-sum-rate table, SNR-major.
pub fn snr_sweep(
    config: &SimConfig,
    snr_points_db: &[f64],
    strategies: &[Strategy],
) -> Result<Vec<SweepPoint>> {
    if snr_points_db.is_empty() {
        return Err(Error::invalid("snr_points_db", "need at least one SNR point"));
    }
    if strategies.is_empty() {
        return Err(Error::invalid("strategies", "need at least one strategy"));
    }
    let mut table = Vec::with_capacity(snr_points_db.len() * strategies.len());
    for &reference_db in snr_points_db {
        for &strategy in strategies {
            let mut point_config = config.clone();
            point_config.strategy = strategy;
            point_config.snr_db = snr_db_from_reference(reference_db, config.path_loss_exp);
            let result = run(&point_config)?;
            table.push(SweepPoint {
                snr_db_at_1km: reference_db,
                strategy,
                avg_sum_rate: result.average_sum_rate,
                stderr: result.average_sum_stderr,
            });
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::circular_distance;
    use std::f64::consts::PI;

    fn small_config() -> SimConfig {
        SimConfig {
            n_users: 2,
            l_steps: 12,
            mc_samples: 150,
            initial_nodes: vec![
                NodeState::new(0.0, 25.0, 10.0, 0.0),
                NodeState::new(240.0, 20.0, 10.0, 0.0),
            ],
            turn_step: Some(6),
            ..SimConfig::reference_scenario()
        }
    }

    #[test]
    fn validation_rejects_inconsistent_configs() {
        let mut c = small_config();
        c.n_users = 5;
        assert!(c.validate().is_err(), "more users than antennas");

        let mut c = small_config();
        c.initial_nodes.pop();
        assert!(c.validate().is_err(), "node count mismatch");

        let mut c = small_config();
        c.l_steps = 0;
        assert!(c.validate().is_err(), "zero steps");

        let mut c = small_config();
        c.turn_velocities = Some(vec![(1.0, 0.0)]);
        assert!(c.validate().is_err(), "turn velocity count mismatch");
    }

    #[test]
    fn records_shape_and_averages_match() {
        let config = small_config();
        let result = run(&config).unwrap();
        assert_eq!(result.records.len(), config.l_steps);
        for (k, r) in result.records.iter().enumerate() {
            assert_eq!(r.step, k + 1);
            assert_eq!(r.true_nodes.len(), config.n_users);
            assert_eq!(r.per_user_rates.len(), config.n_users);
            assert!(r.sum_rate.is_finite() && r.sum_rate > 0.0);
        }
        let l = config.l_steps as f64;
        let mean_sum: f64 = result.records.iter().map(|r| r.sum_rate).sum::<f64>() / l;
        assert!((result.average_sum_rate - mean_sum).abs() < 1e-12);
        for i in 0..config.n_users {
            let mean_i: f64 =
                result.records.iter().map(|r| r.per_user_rates[i]).sum::<f64>() / l;
            assert!((result.average_per_user[i] - mean_i).abs() < 1e-12);
        }
    }

    #[test]
    fn heading_increments_respect_turn_limit() {
        let config = small_config();
        let result = run(&config).unwrap();
        let mut prev = config.uav_heading;
        for r in &result.records {
            assert!(
                circular_distance(r.uav.heading, prev) <= config.delta_max + 1e-12,
                "step {} turned too hard",
                r.step
            );
            prev = r.uav.heading;
        }
    }

    #[test]
    fn sdma_never_beats_an_interference_free_rescore() {
        // Same geometry, same draws: zeroing interference can only raise the
        // per-draw SINR, so the dominance holds step by step, not just on
        // average.
        let config = SimConfig { mc_samples: 60, ..small_config() };
        let result = run(&config).unwrap();
        let params = RicianParams::new(
            config.k_factor,
            config.m_antennas,
            config.sigma_r_sq,
            config.path_loss_exp,
        )
        .unwrap();
        let budget = LinkBudget::from_db(config.snr_db, config.n_users).unwrap();
        let root = RngStream::root(config.seed);
        for r in &result.records {
            let geoms: Vec<_> = r
                .true_nodes
                .iter()
                .map(|s| los_geometry(&r.uav, &GroundPosition { x: s.x, y: s.y }))
                .collect();
            let stream = root.branch(BRANCH_MC_BASE + r.step as u32);
            let free = ergodic_rates_scheme(
                AccessScheme::NoInterference,
                &geoms,
                &params,
                &budget,
                config.mc_samples,
                &stream,
            )
            .unwrap();
            assert!(
                r.sum_rate <= free.sum_rate + 1e-12,
                "step {}: sdma {} > interference-free {}",
                r.step,
                r.sum_rate,
                free.sum_rate
            );
        }
    }

    #[test]
    fn same_seed_is_bit_identical_across_worker_counts() {
        let config = small_config();
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a, b, "same process, same seed");
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run(&config).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run(&config).unwrap());
        assert_eq!(single, four, "worker count must not leak into results");
    }

    #[test]
    fn scripted_turn_preserves_speed_and_ratio() {
        let mut config = small_config();
        config.sigma_w_sq = 0.0; // deterministic mobility isolates the turn
        config.turn_step = Some(5);
        config.turn_ratio = -1.8856;
        let result = run(&config).unwrap();
        let before = &result.records[3].true_nodes; // step 4, pre-turn
        let after = &result.records[4].true_nodes; // step 5, post-turn
        for (b, a) in before.iter().zip(after) {
            assert!((b.speed() - a.speed()).abs() < 1e-9, "speed preserved");
            assert!((a.vy / a.vx - -1.8856).abs() < 1e-9, "component ratio applied");
            assert!(a.vx > 0.0, "positive-x branch");
            assert!((b.vx - 10.0).abs() < 1e-9, "no turn before the scripted step");
        }
    }

    #[test]
    fn explicit_turn_velocities_override_the_ratio() {
        let mut config = small_config();
        config.sigma_w_sq = 0.0;
        config.turn_step = Some(5);
        config.turn_velocities = Some(vec![(0.0, -3.0), (4.0, 4.0)]);
        let result = run(&config).unwrap();
        let after = &result.records[4].true_nodes;
        assert!((after[0].vx - 0.0).abs() < 1e-12 && (after[0].vy - -3.0).abs() < 1e-12);
        assert!((after[1].vx - 4.0).abs() < 1e-12 && (after[1].vy - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_static_node_draws_tight_loops_overhead() {
        // Near-noiseless tracking of one parked node with free turning: the
        // UAV heads straight for the node and then circles it at step
        // radius, with per-step rates near the interference-free closed
        // form. Measurement noise must stay positive or the filter
        // innovation collapses to singular after the first exact fix.
        let config = SimConfig {
            m_antennas: 4,
            n_users: 1,
            k_factor: 10.0,
            snr_db: 45.0,
            path_loss_exp: 1.0,
            sigma_r_sq: 0.05,
            h_uav: 100.0,
            v_uav: 20.0,
            dt: 1.0,
            delta_max: PI,
            l_steps: 40,
            sigma_w_sq: 0.0,
            sigma_u_sq: 1e-4,
            n_w: 4,
            d_max: 1e9,
            mc_samples: 400,
            strategy: Strategy::SdmaMaxSum,
            pf_weight_mode: PfWeightMode::InverseRate,
            seed: 3,
            initial_nodes: vec![NodeState::new(200.0, 0.0, 0.0, 0.0)],
            uav_x: 0.0,
            uav_y: 0.0,
            uav_heading: 0.0,
            turn_step: None,
            turn_ratio: 0.0,
            turn_velocities: None,
        };
        let result = run(&config).unwrap();
        for r in result.records.iter().skip(30) {
            let horiz = (r.uav.x - 200.0).hypot(r.uav.y);
            // Step radius plus the centimeter-scale tracking wobble.
            assert!(
                horiz <= config.v_uav * config.dt + 0.1,
                "step {}: wandered {horiz} m from the node",
                r.step
            );
            // Single user: SDMA rate is the matched-filter rate; compare
            // with the nominal closed form at the true distance.
            let d_sq = horiz * horiz + config.h_uav * config.h_uav;
            let nominal = (1.0 + 10f64.powf(4.5) * 4.0 / d_sq).log2();
            assert!(
                (r.sum_rate - nominal).abs() < 0.2,
                "step {}: rate {} vs nominal {nominal}",
                r.step,
                r.sum_rate
            );
        }
    }

    #[test]
    fn sweep_single_point_reproduces_run() {
        let mut config = small_config();
        config.l_steps = 8;
        let table = snr_sweep(&config, &[-10.0], &[Strategy::SdmaMaxSum]).unwrap();
        assert_eq!(table.len(), 1);
        let mut direct = config.clone();
        direct.strategy = Strategy::SdmaMaxSum;
        direct.snr_db = snr_db_from_reference(-10.0, config.path_loss_exp);
        let expected = run(&direct).unwrap();
        assert_eq!(table[0].avg_sum_rate, expected.average_sum_rate);
        assert_eq!(table[0].stderr, expected.average_sum_stderr);
    }

    #[test]
    fn sweep_rates_rise_with_snr() {
        let mut config = small_config();
        config.l_steps = 10;
        config.mc_samples = 300;
        let table =
            snr_sweep(&config, &[-10.0, 0.0, 10.0], &[Strategy::SdmaMaxSum]).unwrap();
        assert_eq!(table.len(), 3);
        for pair in table.windows(2) {
            let slack = 3.0 * (pair[0].stderr + pair[1].stderr);
            assert!(
                pair[1].avg_sum_rate >= pair[0].avg_sum_rate - slack,
                "rate fell from {} to {} between {} and {} dB",
                pair[0].avg_sum_rate,
                pair[1].avg_sum_rate,
                pair[0].snr_db_at_1km,
                pair[1].snr_db_at_1km
            );
        }
    }

    #[test]
    fn reference_snr_conversion_adds_pathloss_decades() {
        assert!((snr_db_from_reference(-5.0, 1.0) - 55.0).abs() < 1e-12);
        assert!((snr_db_from_reference(0.0, 1.5) - 90.0).abs() < 1e-12);
    }
}
