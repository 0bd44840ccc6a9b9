//! Exit laws in the half-plane picture.
//!
//! Brownian motion started at an interior point `w = (phi1, phi2)` of the
//! lower half-plane exits through the real axis with the Poisson-kernel
//! density
//!
//! ```text
//!     p(w, u) = (1/π) |phi2| / ((u − phi1)² + phi2²),
//! ```
//!
//! i.e. the exit coordinate is Cauchy distributed with median `phi1` and
//! scale `|phi2|`. Composing with the conformal map of [`crate::geometry`]
//! turns this into the exact exit law of the wedge: map the start point, draw
//! a Cauchy variate `u`, pull `u` back to a physical boundary point. This
//! module provides the kernel, the sampler, the closed-form CDF, and the exit
//! density expressed against physical arc length on the boundary arms.
//!
//! Randomness comes from [`RngStream`]: `(seed, stream)`-keyed ChaCha
//! generators that are bit-reproducible and independent across stream ids, so
//! parallel workers can each own a stream and results never depend on thread
//! scheduling.

use crate::error::{Error, Result};
use crate::geometry::{
    boundary_pullback, boundary_pushforward, conformal_map, BoundaryConvention, CartesianPoint,
    HalfPlanePoint, PolarPoint, WedgeDomain,
};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Reproducible random stream keyed by `(seed, stream)`.
///
/// Distinct keys produce statistically independent ChaCha generators (the key
/// feeds the cipher key, so streams are as independent as ChaCha blocks), and
/// the sequence for a fixed key is identical across platforms and runs.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&stream.to_le_bytes());
        // Fixed salt so (0, 0) is not the all-zero key.
        key[16..24].copy_from_slice(&0x9E37_79B9_7F4A_7C15u64.to_le_bytes());
        key[24..32].copy_from_slice(&0xD1B5_4A32_D192_ED03u64.to_le_bytes());
        Self {
            seed,
            stream,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform variate in the open interval (0, 1).
    #[inline]
    pub fn uniform_open01(&mut self) -> f64 {
        self.rng.sample(rand::distr::Open01)
    }

    /// Uniform angle in [0, 2π).
    #[inline]
    pub fn uniform_angle(&mut self) -> f64 {
        self.rng.random_range(0.0..2.0 * PI)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Which part of the boundary an exit sample landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    /// The arm along the positive `x1`-axis (`u > 0`).
    XArm,
    /// The arm at angle `theta0` (`u < 0`); the positive `x2`-axis for the
    /// L-shape.
    YArm,
    /// The corner at the origin (`u = 0`, a null event).
    Corner,
}

impl Arm {
    pub(crate) fn from_u(u: f64) -> Self {
        if u > 0.0 {
            Arm::XArm
        } else if u < 0.0 {
            Arm::YArm
        } else {
            Arm::Corner
        }
    }
}

/// A sampled boundary exit: half-plane coordinate, physical point, arm tag.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExitSample {
    /// Exit coordinate on the real axis of the half-plane picture.
    pub u: f64,
    /// The matching physical boundary point under the active convention.
    pub point: CartesianPoint,
    pub arm: Arm,
}

/// Half-plane Poisson kernel `p(w, u)`; requires an interior `w`.
pub fn poisson_kernel(w: HalfPlanePoint, u: f64) -> Result<f64> {
    if !w.is_interior() {
        return Err(Error::NearBoundary {
            dist: 0.0,
            threshold: 0.0,
        });
    }
    let du = u - w.phi1;
    Ok(w.phi2.abs() / (PI * (du * du + w.phi2 * w.phi2)))
}

/// One Cauchy variate with the given median and scale, by inverse CDF:
/// `median + scale · tan(π (U − 1/2))` with `U` uniform on (0, 1).
pub fn cauchy_sample(rng: &mut RngStream, median: f64, scale: f64) -> Result<f64> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "Cauchy scale must be positive and finite, got {scale}"
        )));
    }
    Ok(cauchy_sample_unchecked(rng, median, scale))
}

#[inline]
pub(crate) fn cauchy_sample_unchecked(rng: &mut RngStream, median: f64, scale: f64) -> f64 {
    let u = rng.uniform_open01();
    median + scale * (PI * (u - 0.5)).tan()
}

/// Exact exit sample from the wedge started at the interior point `x`.
pub fn exit_sample(
    rng: &mut RngStream,
    domain: &WedgeDomain,
    x: PolarPoint,
    convention: BoundaryConvention,
) -> Result<ExitSample> {
    let w = interior_image(domain, x)?;
    let u = cauchy_sample_unchecked(rng, w.phi1, w.phi2.abs());
    let point = boundary_pullback(domain, u, convention)?;
    Ok(ExitSample {
        u,
        point,
        arm: Arm::from_u(u),
    })
}

/// CDF of the exit coordinate `u` for a walk started at `x`:
/// `1/2 + arctan((u − phi1)/|phi2|)/π`.
pub fn exit_cdf_u(domain: &WedgeDomain, x: PolarPoint, u: f64) -> Result<f64> {
    let w = interior_image(domain, x)?;
    Ok(0.5 + ((u - w.phi1) / w.phi2.abs()).atan() / PI)
}

/// Probability that the exit happens on the positive `x1`-axis arm:
/// `P(u > 0) = 1/2 + arctan(phi1/|phi2|)/π`.
pub fn arm_probability_x(domain: &WedgeDomain, x: PolarPoint) -> Result<f64> {
    let w = interior_image(domain, x)?;
    Ok(0.5 + (w.phi1 / w.phi2.abs()).atan() / PI)
}

/// Exit density at the physical boundary point `b`, measured against arc
/// length along the arm that `b` lies on.
///
/// Under [`BoundaryConvention::Conformal`] the pushforward of the Cauchy law
/// through `t ↦ u = ±t^beta` carries the Jacobian `beta · t^{beta−1}`
/// (`(2/3) t^{−1/3}` on the L-shape), so the density is integrable but
/// unbounded at the corner. Under [`BoundaryConvention::ArcLength`] the
/// kernel is read directly at the signed arc length with no Jacobian.
pub fn exit_density_physical(
    domain: &WedgeDomain,
    x: PolarPoint,
    b: CartesianPoint,
    convention: BoundaryConvention,
) -> Result<f64> {
    let w = interior_image(domain, x)?;
    // Arc length along the arm, with the arm sign in u-terms.
    let signed_t = boundary_pushforward(domain, b, BoundaryConvention::ArcLength)?;
    let t = signed_t.abs();
    match convention {
        BoundaryConvention::ArcLength => poisson_kernel(w, signed_t),
        BoundaryConvention::Conformal => {
            let beta = domain.beta();
            let u = signed_t.signum() * t.powf(beta);
            let jacobian = beta * t.powf(beta - 1.0);
            Ok(poisson_kernel(w, u)? * jacobian)
        }
    }
}

pub(crate) fn interior_image(domain: &WedgeDomain, x: PolarPoint) -> Result<HalfPlanePoint> {
    let w = conformal_map(domain, x)?;
    if !w.is_interior() {
        return Err(Error::NearBoundary {
            dist: 0.0,
            threshold: f64::MIN_POSITIVE,
        });
    }
    Ok(w)
}

/// Median angle of the wedge interior, where the image lands on the negative
/// imaginary axis; handy in tests and examples.
pub fn bisector_angle(domain: &WedgeDomain) -> f64 {
    domain.theta0() + (2.0 * PI - domain.theta0()) * 0.5
}

/// CDF of the Cauchy distribution itself (exposed for validation code).
#[inline]
pub fn cauchy_cdf(x: f64, median: f64, scale: f64) -> f64 {
    0.5 + ((x - median) / scale).atan() / PI
}

/// Quantile at the distribution median plus/minus one scale: spans the
/// interquartile range of the Cauchy law. Used in symmetry diagnostics.
#[inline]
pub fn cauchy_quartiles(median: f64, scale: f64) -> (f64, f64) {
    (median - scale, median + scale)
}
