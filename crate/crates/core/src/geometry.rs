//! Plane wedge domains and the conformal change of variables onto the lower
//! half-plane.
//!
//! A wedge with interior opening `omega` (strictly between π and 2π, so the
//! corner at the origin is re-entrant) is described in polar coordinates
//! `(r, theta)` with `theta ∈ (0, 2π]` as
//!
//! ```text
//!     W = { (r, theta) : r > 0, theta0 < theta < 2π },   theta0 = 2π − omega.
//! ```
//!
//! The default instance is the L-shaped domain `omega = 3π/2`: the plane with
//! the closed first quadrant removed. Its boundary consists of two rays, the
//! positive `x1`-axis (`theta = 2π`) and the ray at angle `theta0` (for the
//! L-shape, the positive `x2`-axis).
//!
//! The map
//!
//! ```text
//!     phi(r, theta) = r^beta · exp(i (beta (theta − theta0) + π)),   beta = π/omega,
//! ```
//!
//! takes the wedge conformally onto the lower half-plane `{ phi2 < 0 }` and the
//! two boundary arms onto the positive/negative real axis. Everything else in
//! this crate (exit laws, quadrature solvers, derivative kernels) is built on
//! top of this change of variables, so this module also fixes the two
//! bookkeeping angles used throughout:
//!
//! * `phi_theta(theta) = beta (theta − theta0) + π`, the argument of `phi`;
//! * `omega_theta(theta) = (1 − beta)(2π − theta)`, which satisfies the
//!   identity `phi_theta(theta) − theta = omega_theta(theta)` and shows up in
//!   the closed-form derivative kernels.

use crate::error::{Error, Result};
use serde::Serialize;
use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Relative slack used when snapping almost-boundary images onto the real axis.
const BOUNDARY_SNAP: f64 = 1e-12;

/// An infinite plane wedge with a re-entrant corner at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeDomain {
    omega: f64,
    beta: f64,
    theta0: f64,
}

impl WedgeDomain {
    /// Wedge with interior angle `omega` (radians), `π < omega < 2π`.
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > PI && omega < TWO_PI) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "interior angle must satisfy π < omega < 2π, got {omega}"
            )));
        }
        Ok(Self {
            omega,
            beta: PI / omega,
            theta0: TWO_PI - omega,
        })
    }

    /// The L-shaped domain: `omega = 3π/2`, `beta = 2/3`, `theta0 = π/2`.
    pub fn l_shape() -> Self {
        Self::new(1.5 * PI).expect("3π/2 is an admissible interior angle")
    }

    /// Interior opening angle.
    #[inline]
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Conformal exponent `beta = π / omega ∈ (1/2, 1)`.
    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Angle of the second boundary arm, `theta0 = 2π − omega`.
    #[inline]
    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// Smoothness threshold of the homogeneous Dirichlet problem on this
    /// wedge: first-order Sobolev regularity of order `1 + beta` fails while
    /// every order below it holds (for admissible boundary data).
    #[inline]
    pub fn critical_sigma(&self) -> f64 {
        self.beta
    }

    /// True when `theta` is an interior direction of the wedge.
    #[inline]
    pub fn contains_angle(&self, theta: f64) -> bool {
        theta > self.theta0 && theta < TWO_PI
    }

    /// True when the polar point lies in the open wedge.
    #[inline]
    pub fn contains(&self, p: PolarPoint) -> bool {
        p.r > 0.0 && self.contains_angle(p.theta)
    }

    /// Unit direction of the arm at angle `theta0`, with round-off in the
    /// trigonometry cleared so that points on an axis-aligned arm get an
    /// exactly zero boundary distance.
    #[inline]
    fn arm_direction(&self) -> (f64, f64) {
        let (s, c) = self.theta0.sin_cos();
        let snap = |t: f64| if t.abs() < 1e-15 { 0.0 } else { t };
        (snap(c), snap(s))
    }
}

/// Point in polar coordinates, `r > 0`, `theta ∈ (0, 2π]`.
///
/// The angle convention follows the wedge description: the positive `x1`-axis
/// is `theta = 2π` (not 0), so the interior of the wedge is the contiguous
/// range `(theta0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "polar radius must be positive and finite, got {r}"
            )));
        }
        if !(theta > 0.0 && theta <= TWO_PI) {
            return Err(Error::InvalidParameter(format!(
                "polar angle must lie in (0, 2π], got {theta}"
            )));
        }
        Ok(Self { r, theta })
    }

    #[inline]
    pub fn to_cartesian(self) -> CartesianPoint {
        CartesianPoint {
            x1: self.r * self.theta.cos(),
            x2: self.r * self.theta.sin(),
        }
    }
}

/// Point in Cartesian coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CartesianPoint {
    pub x1: f64,
    pub x2: f64,
}

impl CartesianPoint {
    #[inline]
    pub fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    #[inline]
    pub fn dist(self, other: CartesianPoint) -> f64 {
        (self.x1 - other.x1).hypot(self.x2 - other.x2)
    }

    /// Polar form with `theta ∈ (0, 2π]`; fails only at the origin.
    pub fn to_polar(self) -> Result<PolarPoint> {
        let r = self.norm();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(
                "cannot express the origin in polar coordinates".into(),
            ));
        }
        let a = self.x2.atan2(self.x1); // (−π, π]
        let theta = if a > 0.0 { a } else { a + TWO_PI }; // (0, 2π]
        PolarPoint::new(r, theta)
    }
}

/// Image point in the closed lower half-plane, `phi2 <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfPlanePoint {
    pub phi1: f64,
    pub phi2: f64,
}

impl HalfPlanePoint {
    pub fn new(phi1: f64, phi2: f64) -> Result<Self> {
        if !phi1.is_finite() || !phi2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "half-plane coordinates must be finite, got ({phi1}, {phi2})"
            )));
        }
        let snap = BOUNDARY_SNAP * (1.0 + phi1.abs());
        if phi2 > snap {
            return Err(Error::InvalidParameter(format!(
                "half-plane point must have phi2 <= 0, got phi2 = {phi2}"
            )));
        }
        // Round-off from boundary angles may leave a positive sliver; flatten it.
        let phi2 = if phi2 > 0.0 { 0.0 } else { phi2 };
        Ok(Self { phi1, phi2 })
    }

    /// True when the point lies strictly below the real axis.
    #[inline]
    pub fn is_interior(&self) -> bool {
        self.phi2 < 0.0
    }
}

/// Argument angle of the conformal image: `beta (theta − theta0) + π`.
///
/// Affine in `theta`; equals π on the `theta0` arm and 2π on the `x1`-axis
/// arm, so images of interior directions have argument in (π, 2π) — the open
/// lower half-plane.
#[inline]
pub fn phi_theta(domain: &WedgeDomain, theta: f64) -> f64 {
    domain.beta * (theta - domain.theta0) + PI
}

/// Auxiliary kernel angle `(1 − beta)(2π − theta)`.
///
/// Satisfies `phi_theta(theta) − theta = omega_theta(theta)` for every
/// `theta`, which is what makes the closed-form derivative kernels in
/// [`crate::solver`] depend on `theta` only through this angle.
#[inline]
pub fn omega_theta(domain: &WedgeDomain, theta: f64) -> f64 {
    (1.0 - domain.beta) * (TWO_PI - theta)
}

/// Conformal map of the closed wedge onto the closed lower half-plane.
///
/// `x` must satisfy `theta0 <= theta <= 2π`; boundary directions land on the
/// real axis (up to round-off, which is snapped to exactly zero).
pub fn conformal_map(domain: &WedgeDomain, x: PolarPoint) -> Result<HalfPlanePoint> {
    if !(x.r > 0.0) || !x.r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "conformal map needs a positive finite radius, got {}",
            x.r
        )));
    }
    if x.theta < domain.theta0 || x.theta > TWO_PI {
        let c = x.to_cartesian();
        return Err(Error::OutsideDomain { x1: c.x1, x2: c.x2 });
    }
    let scale = x.r.powf(domain.beta);
    let angle = phi_theta(domain, x.theta);
    let (mut sin_a, cos_a) = angle.sin_cos();
    if x.theta == domain.theta0 || x.theta == TWO_PI {
        // The arms map onto the real axis by construction; clear the
        // round-off sliver (it can fall on either side of the axis) so that
        // boundary inputs are recognized exactly downstream.
        sin_a = 0.0;
    }
    HalfPlanePoint::new(scale * cos_a, scale * sin_a)
}

/// Inverse of [`conformal_map`]: recovers the wedge point from its image.
///
/// Rejects the origin and points strictly above the real axis.
pub fn conformal_inverse(domain: &WedgeDomain, w: HalfPlanePoint) -> Result<PolarPoint> {
    let modulus = w.phi1.hypot(w.phi2);
    if !(modulus > 0.0) || !modulus.is_finite() {
        return Err(Error::InvalidParameter(
            "conformal inverse needs a nonzero finite image point".into(),
        ));
    }
    if w.phi2 > 0.0 {
        return Err(Error::InvalidParameter(format!(
            "image point must lie in the closed lower half-plane, got phi2 = {}",
            w.phi2
        )));
    }
    // Argument in [π, 2π]: the negative real axis keeps π, everything else is
    // shifted up from atan2's (−π, 0] range.
    let angle = if w.phi2 == 0.0 {
        if w.phi1 < 0.0 {
            PI
        } else {
            TWO_PI
        }
    } else {
        w.phi2.atan2(w.phi1) + TWO_PI
    };
    let r = modulus.powf(1.0 / domain.beta);
    let theta = domain.theta0 + (angle - PI) / domain.beta;
    // Guard against round-off pushing the angle a hair outside (0, 2π].
    PolarPoint::new(r, theta.clamp(f64::MIN_POSITIVE, TWO_PI))
}

/// Distance from `p` to a ray from the origin with unit direction `d`.
#[inline]
fn dist_to_ray(p: CartesianPoint, d: (f64, f64)) -> f64 {
    let along = p.x1 * d.0 + p.x2 * d.1;
    if along <= 0.0 {
        p.norm()
    } else {
        // Perpendicular component; computed directly to avoid cancellation.
        (p.x1 - along * d.0).hypot(p.x2 - along * d.1)
    }
}

/// Nearest point to `p` on a ray from the origin with unit direction `d`.
#[inline]
fn project_to_ray(p: CartesianPoint, d: (f64, f64)) -> CartesianPoint {
    let along = (p.x1 * d.0 + p.x2 * d.1).max(0.0);
    CartesianPoint::new(along * d.0, along * d.1)
}

/// Exact Euclidean distance from `p` to the boundary (the union of the two
/// arms). Well defined for any plane point; 1-Lipschitz in `p`.
pub fn distance_to_boundary(domain: &WedgeDomain, p: CartesianPoint) -> f64 {
    let d_x_arm = dist_to_ray(p, (1.0, 0.0));
    let d_other = dist_to_ray(p, domain.arm_direction());
    d_x_arm.min(d_other)
}

/// Closest boundary point to `p` (ties broken toward the `x1`-axis arm).
pub fn nearest_boundary_point(domain: &WedgeDomain, p: CartesianPoint) -> CartesianPoint {
    let on_x = project_to_ray(p, (1.0, 0.0));
    let on_other = project_to_ray(p, domain.arm_direction());
    if p.dist(on_x) <= p.dist(on_other) {
        on_x
    } else {
        on_other
    }
}

/// How boundary points are matched with the real-line coordinate `u` of the
/// half-plane picture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryConvention {
    /// `u` is the half-plane boundary coordinate and physical points are its
    /// exact conformal preimages: `u >= 0 ↦ (u^{1/beta}, 0)` on the
    /// `x1`-axis arm, `u < 0 ↦ |u|^{1/beta}` out the other arm. Exit laws
    /// stated for the half-plane transport to the wedge without error under
    /// this convention, which is therefore the default everywhere.
    #[default]
    Conformal,
    /// `u` is read as the signed arc-length along the boundary:
    /// `u >= 0 ↦ (u, 0)` and `u < 0 ↦ |u|` out the other arm. A convenient
    /// simplification when only the arc-length trace matters; it is *not* the
    /// inverse of the conformal map (the radial stretch `u ↦ u^{1/beta}` is
    /// dropped).
    ArcLength,
}

/// Physical boundary point identified with the real-line coordinate `u`.
pub fn boundary_pullback(
    domain: &WedgeDomain,
    u: f64,
    convention: BoundaryConvention,
) -> Result<CartesianPoint> {
    if !u.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "boundary coordinate must be finite, got {u}"
        )));
    }
    let t = match convention {
        BoundaryConvention::Conformal => u.abs().powf(1.0 / domain.beta),
        BoundaryConvention::ArcLength => u.abs(),
    };
    if u >= 0.0 {
        Ok(CartesianPoint::new(t, 0.0))
    } else {
        let d = domain.arm_direction();
        Ok(CartesianPoint::new(t * d.0, t * d.1))
    }
}

/// Real-line coordinate of a physical boundary point; inverse of
/// [`boundary_pullback`]. Rejects points not on either arm.
pub fn boundary_pushforward(
    domain: &WedgeDomain,
    p: CartesianPoint,
    convention: BoundaryConvention,
) -> Result<f64> {
    let tol = BOUNDARY_SNAP * (1.0 + p.norm());
    let on_x_arm = p.x2.abs() <= tol && p.x1 >= -tol;
    let d = domain.arm_direction();
    let along = p.x1 * d.0 + p.x2 * d.1;
    let across = (p.x1 - along * d.0).hypot(p.x2 - along * d.1);
    let on_other_arm = across <= tol && along >= -tol;
    let (signed, t) = if on_x_arm {
        (1.0, p.x1.max(0.0))
    } else if on_other_arm {
        (-1.0, along.max(0.0))
    } else {
        return Err(Error::NotOnBoundary { x1: p.x1, x2: p.x2 });
    };
    let u = match convention {
        BoundaryConvention::Conformal => t.powf(domain.beta),
        BoundaryConvention::ArcLength => t,
    };
    Ok(signed * u)
}
