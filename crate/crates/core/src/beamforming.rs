//! Max-SINR receive beamforming and ergodic rate estimation.
//!
//! With σ² normalized to 1 and `rho = P_t/σ²`, user i's interference-plus-
//! noise covariance is `Q_i = sum_{j != i} rho h_j h_j^H + I`. The SINR-
//! optimal combiner is `w_i = Q_i^{-1} h_i` (computed by Cholesky solve, never
//! an explicit inverse) with `SINR_i = rho h_i^H Q_i^{-1} h_i`.
//!
//! For heading optimization the per-user ergodic SINR is lower-bounded in
//! closed form by pushing the expectation inside the inverse:
//!
//! `E{SINR_i} >= rho/d_i^{2a} (K/(K+1) u_i^H E{Q_i}^{-1} u_i
//!               + 1/(K+1) tr(R_i E{Q_i}^{-1}))`
//!
//! where `u_i` is the unit-modulus steering vector, `R_i` the receive
//! correlation matrix, and `E{Q_i}` replaces each interferer's outer product
//! by its expectation. The bound is exact in the pure LOS limit.

use nalgebra::{Cholesky, DMatrix, Dyn};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{
    channel_sampler, correlation_matrix, steering_vector, ChannelSampler, ChannelVector,
    RicianParams,
};
use crate::error::{Error, Result};
use crate::geometry::LosGeometry;
use crate::rng::RngStream;

/// Transmit power budget relative to noise, shared by all users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// `P_t / sigma^2`, linear scale.
    pub pt_over_sigma2: f64,
    /// Number of simultaneously served users.
    pub n_users: usize,
}

impl LinkBudget {
    pub fn new(pt_over_sigma2: f64, n_users: usize) -> Result<Self> {
        if !(pt_over_sigma2 > 0.0 && pt_over_sigma2.is_finite()) {
            return Err(Error::invalid("pt_over_sigma2", format!("must be positive and finite, got {pt_over_sigma2}")));
        }
        if n_users == 0 {
            return Err(Error::invalid("n_users", "must be at least 1"));
        }
        Ok(LinkBudget { pt_over_sigma2, n_users })
    }

    pub fn from_db(snr_db: f64, n_users: usize) -> Result<Self> {
        LinkBudget::new(10f64.powf(snr_db / 10.0), n_users)
    }
}

fn cholesky_or_error(q: DMatrix<Complex64>) -> Result<Cholesky<Complex64, Dyn>> {
    let cond_estimate = {
        let diag: Vec<f64> = (0..q.nrows()).map(|k| q[(k, k)].norm()).collect();
        let max = diag.iter().cloned().fold(0.0f64, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    };
    Cholesky::new(q).ok_or(Error::SolverFailure { cond_estimate })
}

/// Interference-plus-noise covariance seen by user `i` for one channel draw.
pub fn interference_matrix(channels: &[ChannelVector], i: usize, budget: &LinkBudget) -> DMatrix<Complex64> {
    let m = channels[i].len();
    let mut q = DMatrix::<Complex64>::identity(m, m);
    for (j, h) in channels.iter().enumerate() {
        if j != i {
            q += (h * h.adjoint()).scale(budget.pt_over_sigma2);
        }
    }
    q
}

/// Max-SINR combining weights `w = Q_i^{-1} h_i`.
pub fn max_sinr_weights(channels: &[ChannelVector], i: usize, budget: &LinkBudget) -> Result<ChannelVector> {
    let q = interference_matrix(channels, i, budget);
    Ok(cholesky_or_error(q)?.solve(&channels[i]))
}

/// SINR achieved by the max-SINR combiner: `rho h_i^H Q_i^{-1} h_i`.
pub fn sinr(channels: &[ChannelVector], i: usize, budget: &LinkBudget) -> Result<f64> {
    let q = interference_matrix(channels, i, budget);
    let x = cholesky_or_error(q)?.solve(&channels[i]);
    Ok(budget.pt_over_sigma2 * channels[i].dotc(&x).re)
}

/// SINR of an arbitrary combiner `w` for user `i`:
/// `rho |w^H h_i|^2 / (w^H Q_i w)`.
pub fn sinr_with_weights(
    channels: &[ChannelVector],
    i: usize,
    budget: &LinkBudget,
    w: &ChannelVector,
) -> f64 {
    let q = interference_matrix(channels, i, budget);
    let signal = budget.pt_over_sigma2 * w.dotc(&channels[i]).norm_sqr();
    let denom = w.dotc(&(&q * w)).re;
    signal / denom
}

fn pathloss_power(distance: f64, params: &RicianParams) -> f64 {
    distance.powf(-2.0 * params.path_loss_exp)
}

/// Expected interference-plus-noise covariance for user `i`, built from the
/// link geometries: each interferer contributes its mean outer product plus
/// scatter correlation, scaled by power path loss.
pub fn expected_interference_matrix(
    geoms: &[LosGeometry],
    i: usize,
    params: &RicianParams,
    budget: &LinkBudget,
) -> Result<DMatrix<Complex64>> {
    let m = params.m_antennas;
    let mut q = DMatrix::<Complex64>::identity(m, m);
    for (j, g) in geoms.iter().enumerate() {
        if j != i {
            q += expected_user_covariance(g, params)?.scale(budget.pt_over_sigma2 * pathloss_power(g.distance, params));
        }
    }
    Ok(q)
}

/// `E{h' h'^H}` for one link before path loss:
/// `K/(K+1) u u^H + 1/(K+1) R`.
fn expected_user_covariance(geom: &LosGeometry, params: &RicianParams) -> Result<DMatrix<Complex64>> {
    let u = steering_vector(geom.phase_delay, params.m_antennas);
    let mut cov = (&u * u.adjoint()).scale(params.los_power_fraction());
    let scatter = params.scatter_power_fraction();
    if scatter > 0.0 {
        cov += correlation_matrix(geom, params)?.entries().scale(scatter);
    }
    Ok(cov)
}

/// Closed-form lower bound on user `i`'s expected max-SINR beamforming SINR.
pub fn expected_sinr_lower_bound(
    geoms: &[LosGeometry],
    i: usize,
    params: &RicianParams,
    budget: &LinkBudget,
) -> Result<f64> {
    let eq = expected_interference_matrix(geoms, i, params, budget)?;
    let chol = cholesky_or_error(eq)?;
    let u = steering_vector(geoms[i].phase_delay, params.m_antennas);
    let los_term = params.los_power_fraction() * u.dotc(&chol.solve(&u)).re;
    let scatter = params.scatter_power_fraction();
    let scatter_term = if scatter > 0.0 {
        let r = correlation_matrix(&geoms[i], params)?;
        // tr(R E{Q}^-1) = tr(E{Q}^-1 R) = sum of diagonal of the solve.
        let x = chol.solve(r.entries());
        scatter * (0..params.m_antennas).map(|k| x[(k, k)].re).sum::<f64>()
    } else {
        0.0
    };
    Ok(budget.pt_over_sigma2 * pathloss_power(geoms[i].distance, params) * (los_term + scatter_term))
}

/// Expected matched-filter SNR of an interference-free link:
/// `rho M / d^{2a}`.
pub fn expected_snr_no_interference(distance: f64, params: &RicianParams, budget: &LinkBudget) -> f64 {
    budget.pt_over_sigma2 * params.m_antennas as f64 * pathloss_power(distance, params)
}

/// Multiple-access scheme used when scoring realized rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessScheme {
    /// All users transmit together; max-SINR combining per user.
    Sdma,
    /// Users share time equally; matched filtering, no interference, each
    /// rate scaled by 1/N.
    Tdma,
    /// All users scored with matched filtering and no interference at full
    /// time share (an upper-bound reference, not a realizable scheme).
    NoInterference,
}

/// Monte Carlo estimate of per-user ergodic rates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// Mean of `log2(1 + SINR_i)` per user (scaled by 1/N under TDMA).
    pub per_user: Vec<f64>,
    /// Standard error of each per-user mean.
    pub per_user_stderr: Vec<f64>,
    /// Mean sum rate across users.
    pub sum_rate: f64,
    /// Standard error of the sum-rate mean.
    pub sum_stderr: f64,
    pub n_samples: usize,
}

/// Estimate ergodic rates for SDMA with max-SINR combining. Results are a
/// deterministic function of (stream, n_samples): realization `r` draws from
/// substream `r`, and the reduction runs in index order.
pub fn ergodic_rates(
    geoms: &[LosGeometry],
    params: &RicianParams,
    budget: &LinkBudget,
    n_samples: usize,
    stream: &RngStream,
) -> Result<RateEstimate> {
    ergodic_rates_scheme(AccessScheme::Sdma, geoms, params, budget, n_samples, stream)
}

/// Estimate ergodic rates under the given access scheme.
pub fn ergodic_rates_scheme(
    scheme: AccessScheme,
    geoms: &[LosGeometry],
    params: &RicianParams,
    budget: &LinkBudget,
    n_samples: usize,
    stream: &RngStream,
) -> Result<RateEstimate> {
    let n = geoms.len();
    if n == 0 {
        return Err(Error::invalid("geoms", "at least one user required"));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    if u32::try_from(n_samples).is_err() {
        return Err(Error::invalid("n_samples", "must fit in 32 bits"));
    }
    let samplers: Vec<ChannelSampler> =
        geoms.iter().map(|g| channel_sampler(g, params)).collect::<Result<_>>()?;
    let atten: Vec<f64> =
        geoms.iter().map(|g| g.distance.powf(-params.path_loss_exp)).collect();

    // One realization: draw every user's channel from this realization's
    // substream (fixed user order), then score each user.
    let one = |r: u32| -> Result<Vec<f64>> {
        let mut rng = stream.rng(r);
        let channels: Vec<ChannelVector> = samplers
            .iter()
            .zip(&atten)
            .map(|(s, &a)| s.sample(&mut rng) * Complex64::new(a, 0.0))
            .collect();
        (0..n)
            .map(|i| {
                let s = match scheme {
                    AccessScheme::Sdma => sinr(&channels, i, budget)?,
                    AccessScheme::Tdma | AccessScheme::NoInterference => {
                        budget.pt_over_sigma2 * channels[i].norm_squared()
                    }
                };
                let share = if scheme == AccessScheme::Tdma { 1.0 / n as f64 } else { 1.0 };
                Ok(share * (1.0 + s).log2())
            })
            .collect()
    };

    let per_realization: Vec<Result<Vec<f64>>> =
        (0..n_samples as u32).into_par_iter().map(one).collect();

    let mut sums = vec![0.0; n];
    let mut sq_sums = vec![0.0; n];
    let mut total_sum = 0.0;
    let mut total_sq_sum = 0.0;
    for r in per_realization {
        let rates = r?;
        let mut step_sum = 0.0;
        for (i, &v) in rates.iter().enumerate() {
            sums[i] += v;
            sq_sums[i] += v * v;
            step_sum += v;
        }
        total_sum += step_sum;
        total_sq_sum += step_sum * step_sum;
    }

    let nf = n_samples as f64;
    let stderr = |sum: f64, sq: f64| {
        if n_samples < 2 {
            return 0.0;
        }
        let mean = sum / nf;
        let var = (sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
        (var / nf).sqrt()
    };
    let per_user: Vec<f64> = sums.iter().map(|s| s / nf).collect();
    let per_user_stderr: Vec<f64> =
        sums.iter().zip(&sq_sums).map(|(&s, &q)| stderr(s, q)).collect();
    Ok(RateEstimate {
        sum_rate: total_sum / nf,
        sum_stderr: stderr(total_sum, total_sq_sum),
        per_user,
        per_user_stderr,
        n_samples,
    })
}
