//! Correlated Rician ground-to-air channels for a ULA along the flight axis.
//!
//! Each node's channel before path loss is `h' = hbar + htilde`: a LOS
//! steering component with power `K/(1+K)` per element plus a correlated
//! scattered component with power `1/(1+K)`. Scatter correlation across the
//! array follows a small-angular-spread model around the LOS direction, so
//! the receive correlation matrix is the LOS outer product shaded by a real
//! envelope `B` that decays with element separation and angular spread:
//!
//! `B[k,l] = exp(-(pi(k-l))^2/4 * s2 * cos^2(theta) *
//!           (1 + cos(2phi) - s2^2/2 * sin^2(2phi) * (pi(k-l))^2 * cos^2(theta)))`
//!
//! with `s2` the angular-spread variance. The envelope keeps unit diagonal,
//! so the correlation matrix always has trace M. Path loss scales amplitudes
//! by `d^-alpha`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::LosGeometry;

/// Channel vector of one node across the M array elements.
pub type ChannelVector = DVector<Complex64>;

/// Rician fading and path-loss parameters shared by all nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianParams {
    /// Rician K-factor (linear, not dB). `f64::INFINITY` selects the pure
    /// LOS limit; zero is rejected by operations that need the scatter
    /// correlation model.
    pub k_factor: f64,
    /// Number of array elements, at least 1.
    pub m_antennas: usize,
    /// Variance of the angular spread around the LOS direction, in rad^2.
    pub sigma_r_sq: f64,
    /// Path-loss exponent on amplitude: `h = h' / d^alpha`.
    pub path_loss_exp: f64,
}

impl RicianParams {
    pub fn new(k_factor: f64, m_antennas: usize, sigma_r_sq: f64, path_loss_exp: f64) -> Result<Self> {
        if !(k_factor >= 0.0) {
            return Err(Error::invalid("k_factor", format!("must be >= 0, got {k_factor}")));
        }
        if m_antennas == 0 {
            return Err(Error::invalid("m_antennas", "must be at least 1"));
        }
        if !(sigma_r_sq >= 0.0) {
            return Err(Error::invalid("sigma_r_sq", format!("must be >= 0, got {sigma_r_sq}")));
        }
        if !(path_loss_exp > 0.0) {
            return Err(Error::invalid("path_loss_exp", format!("must be > 0, got {path_loss_exp}")));
        }
        Ok(RicianParams { k_factor, m_antennas, sigma_r_sq, path_loss_exp })
    }

    /// Per-element LOS amplitude `sqrt(K/(1+K))`; 1 in the pure LOS limit.
    pub fn los_amplitude(&self) -> f64 {
        if self.k_factor.is_infinite() {
            1.0
        } else {
            (self.k_factor / (1.0 + self.k_factor)).sqrt()
        }
    }

    /// Scattered-component amplitude scale `sqrt(1/(1+K))`.
    pub fn scatter_scale(&self) -> f64 {
        (1.0 / (1.0 + self.k_factor)).sqrt()
    }

    /// `K/(K+1)`, the LOS power fraction; 1 in the pure LOS limit.
    pub fn los_power_fraction(&self) -> f64 {
        if self.k_factor.is_infinite() {
            1.0
        } else {
            self.k_factor / (1.0 + self.k_factor)
        }
    }

    /// `1/(K+1)`, the scattered power fraction.
    pub fn scatter_power_fraction(&self) -> f64 {
        1.0 / (1.0 + self.k_factor)
    }
}

/// Unit-modulus array response `[1, e^{jp}, ..., e^{j(M-1)p}]` for an
/// inter-element phase delay `p`.
pub fn steering_vector(phase_delay: f64, m: usize) -> DVector<Complex64> {
    DVector::from_fn(m, |k, _| Complex64::from_polar(1.0, phase_delay * k as f64))
}

/// LOS channel component before path loss: the steering vector scaled by the
/// Rician LOS amplitude. Its squared norm is `M K/(1+K)`.
pub fn los_vector(geom: &LosGeometry, params: &RicianParams) -> ChannelVector {
    steering_vector(geom.phase_delay, params.m_antennas) * Complex64::new(params.los_amplitude(), 0.0)
}

/// Signed Dirichlet ratio `sin(m u) / sin(u)`, continuously extended through
/// the removable singularities at multiples of pi. `|dirichlet_ratio|` is at
/// most `m`, attained exactly at those points.
pub fn dirichlet_ratio(u: f64, m: usize) -> f64 {
    let mf = m as f64;
    let s = u.sin();
    if s.abs() < 1e-8 {
        // u = k*pi + t with small t: sin(mu)/sin(u) = (-1)^{k(m-1)} sin(mt)/sin(t)
        // and the second-order series of sin(mt)/sin(t) is m (1 - (m^2-1) t^2 / 6).
        let k = (u / std::f64::consts::PI).round();
        let t = u - k * std::f64::consts::PI;
        let sign = if (k as i64 * (m as i64 - 1)) % 2 == 0 { 1.0 } else { -1.0 };
        sign * mf * (1.0 - (mf * mf - 1.0) * t * t / 6.0)
    } else {
        (mf * u).sin() / s
    }
}

/// Magnitude of the inner product of the two nodes' unit-modulus LOS steering
/// vectors: `|sin(M delta/2) / sin(delta/2)|` with `delta` the phase-delay
/// difference. Ranges over `[0, M]`; `M` iff the delays coincide mod 2pi.
pub fn los_correlation(geom_i: &LosGeometry, geom_j: &LosGeometry, m: usize) -> f64 {
    let delta = geom_i.phase_delay - geom_j.phase_delay;
    dirichlet_ratio(0.5 * delta, m).abs()
}

/// Receive correlation matrix of one node's channel (LOS plus scatter),
/// normalized so that its trace equals M.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: DMatrix<Complex64>,
}

impl CorrelationMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace_real(&self) -> f64 {
        (0..self.order()).map(|k| self.entries[(k, k)].re).sum()
    }

    /// Hermitian square root with negative eigenvalues clamped to zero, so a
    /// slightly indefinite envelope still yields a usable mixing matrix:
    /// `S S^H` equals the PSD projection of the matrix.
    pub fn psd_sqrt(&self) -> DMatrix<Complex64> {
        let m = self.order();
        let eig = nalgebra::SymmetricEigen::new(self.entries.clone());
        let mut s = DMatrix::<Complex64>::zeros(m, m);
        for k in 0..m {
            let lambda = eig.eigenvalues[k].max(0.0);
            let v = eig.eigenvectors.column(k);
            s += (v * v.adjoint()).scale(lambda.sqrt());
        }
        s
    }
}

/// Correlation envelope value for element separation `diff`, given the link's
/// azimuth/elevation factors.
fn envelope(diff: f64, sigma_r_sq: f64, cos_theta_sq: f64, cos_el: f64) -> f64 {
    let u_sq = (std::f64::consts::PI * diff).powi(2);
    let cos_2phi = 2.0 * cos_el * cos_el - 1.0;
    let sin_2phi_sq = 4.0 * cos_el * cos_el * (1.0 - cos_el * cos_el);
    (-0.25
        * u_sq
        * sigma_r_sq
        * cos_theta_sq
        * (1.0 + cos_2phi - 0.5 * sigma_r_sq * sigma_r_sq * sin_2phi_sq * u_sq * cos_theta_sq))
        .exp()
}

/// Receive correlation matrix for one link. The LOS phase progression fixes
/// the entry phases and the envelope fixes their magnitudes; the K-factor
/// cancels out of the normalized matrix but K = 0 (no LOS component) leaves
/// the model undefined and is rejected.
pub fn correlation_matrix(geom: &LosGeometry, params: &RicianParams) -> Result<CorrelationMatrix> {
    if params.k_factor == 0.0 {
        return Err(Error::ZeroKFactor);
    }
    let m = params.m_antennas;
    let cos_theta_sq = (1.0 - geom.sin_azimuth * geom.sin_azimuth).max(0.0);
    let mut entries = DMatrix::<Complex64>::zeros(m, m);
    for k in 0..m {
        for l in 0..m {
            let diff = k as f64 - l as f64;
            let b = envelope(diff, params.sigma_r_sq, cos_theta_sq, geom.cos_elevation);
            entries[(k, l)] = Complex64::from_polar(b, geom.phase_delay * diff);
        }
    }
    // Symmetrize to wash out rounding asymmetry in from_polar.
    let herm = (&entries + entries.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(CorrelationMatrix { entries: herm })
}

/// Factored sampler for one link's channel: `h' = hbar + scale * S * g` with
/// `g` i.i.d. standard complex Gaussian. Build once per geometry, then draw
/// many realizations cheaply.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    mean: DVector<Complex64>,
    mix: DMatrix<Complex64>,
    m: usize,
}

/// One i.i.d. CN(0, 1) vector: real and imaginary parts each N(0, 1/2).
fn standard_complex_gaussian<R: Rng + ?Sized>(m: usize, rng: &mut R) -> DVector<Complex64> {
    DVector::from_fn(m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

impl ChannelSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelVector {
        let g = standard_complex_gaussian(self.m, rng);
        &self.mean + &self.mix * g
    }
}

/// Build the sampler for one link. In the pure LOS limit the scatter term
/// vanishes and no correlation factorization is needed.
pub fn channel_sampler(geom: &LosGeometry, params: &RicianParams) -> Result<ChannelSampler> {
    let m = params.m_antennas;
    let mean = los_vector(geom, params);
    let scale = params.scatter_scale();
    let mix = if scale == 0.0 {
        DMatrix::<Complex64>::zeros(m, m)
    } else {
        correlation_matrix(geom, params)?.psd_sqrt() * Complex64::new(scale, 0.0)
    };
    Ok(ChannelSampler { mean, mix, m })
}

/// Draw one channel realization before path loss.
pub fn sample_channel<R: Rng + ?Sized>(
    geom: &LosGeometry,
    params: &RicianParams,
    rng: &mut R,
) -> Result<ChannelVector> {
    Ok(channel_sampler(geom, params)?.sample(rng))
}

/// Apply amplitude path loss `d^-alpha`.
pub fn apply_pathloss(h: &ChannelVector, distance: f64, params: &RicianParams) -> ChannelVector {
    h * Complex64::new(distance.powf(-params.path_loss_exp), 0.0)
}
