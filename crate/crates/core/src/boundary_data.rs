//! Boundary data: a small catalog of test functions on the real line together
//! with their exact derivatives, and the principal-value integral
//! `p.v. ∫ f'(x)/x dx` that controls the small-radius behaviour of the
//! derivative integrals in [`crate::regularity`].
//!
//! Boundary data enters every solver through the half-plane picture: a
//! function `f0 : ℝ → ℝ` prescribes the Dirichlet values along the image of
//! the boundary, and the solvers only ever query `eval`/`deriv1`/`deriv2`.
//! Catalog entries also declare which integrability classes they belong to,
//! so diagnostics can report when a hypothesis is assumed versus checked.

use crate::error::{Error, Result};
use crate::quad::{self, QuadratureConfig};
use serde::Serialize;

/// Declared smoothness/integrability memberships of a boundary function.
///
/// `second_order_l1` means the function and its first two derivatives are
/// integrable (absolutely) on ℝ; `second_order_l2` the same with square
/// integrability; `first_order_lp_all_finite` means the function and its
/// first derivative lie in `L^p` for every finite `p ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassFlags {
    pub second_order_l1: bool,
    pub second_order_l2: bool,
    pub first_order_lp_all_finite: bool,
}

impl ClassFlags {
    pub const ALL: Self = Self {
        second_order_l1: true,
        second_order_l2: true,
        first_order_lp_all_finite: true,
    };
    pub const NONE: Self = Self {
        second_order_l1: false,
        second_order_l2: false,
        first_order_lp_all_finite: false,
    };
}

/// How `deriv1`/`deriv2` are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeKind {
    /// Closed-form derivatives.
    Analytic,
    /// Derivatives of a numerically tabulated function (finite differences /
    /// spline slopes); expect reduced accuracy.
    Interpolated,
}

/// Dirichlet boundary data on the real line.
pub trait BoundaryFunction: Send + Sync {
    fn eval(&self, u: f64) -> f64;
    fn deriv1(&self, u: f64) -> f64;
    fn deriv2(&self, u: f64) -> f64;
    fn name(&self) -> &str;
    fn class_flags(&self) -> ClassFlags;
    fn derivative_kind(&self) -> DerivativeKind {
        DerivativeKind::Analytic
    }
}

/// The built-in catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Catalog {
    /// `e^{−u²}`.
    Gaussian,
    /// `u e^{−u²}` — odd, so its symmetric principal value vanishes.
    OddGaussian,
    /// Piecewise-quartic C² bump supported on `[−1, 1]`:
    /// `(1 − |u|)⁴ (4|u| + 1)`.
    Bump,
    /// Identically zero.
    Zero,
}

impl Catalog {
    pub const ALL: [Catalog; 4] = [
        Catalog::Gaussian,
        Catalog::OddGaussian,
        Catalog::Bump,
        Catalog::Zero,
    ];

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Catalog::Gaussian),
            "odd_gaussian" => Ok(Catalog::OddGaussian),
            "bump" => Ok(Catalog::Bump),
            "zero" => Ok(Catalog::Zero),
            other => Err(Error::UnknownBoundaryFunction(other.to_string())),
        }
    }
}

impl BoundaryFunction for Catalog {
    fn eval(&self, u: f64) -> f64 {
        match self {
            Catalog::Gaussian => (-u * u).exp(),
            Catalog::OddGaussian => u * (-u * u).exp(),
            Catalog::Bump => {
                let a = u.abs();
                if a >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - a;
                    let q2 = q * q;
                    q2 * q2 * (4.0 * a + 1.0)
                }
            }
            Catalog::Zero => 0.0,
        }
    }

    fn deriv1(&self, u: f64) -> f64 {
        match self {
            Catalog::Gaussian => -2.0 * u * (-u * u).exp(),
            Catalog::OddGaussian => (1.0 - 2.0 * u * u) * (-u * u).exp(),
            Catalog::Bump => {
                let a = u.abs();
                if a >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - a;
                    -20.0 * u * q * q * q
                }
            }
            Catalog::Zero => 0.0,
        }
    }

    fn deriv2(&self, u: f64) -> f64 {
        match self {
            Catalog::Gaussian => (4.0 * u * u - 2.0) * (-u * u).exp(),
            Catalog::OddGaussian => (4.0 * u * u - 6.0) * u * (-u * u).exp(),
            Catalog::Bump => {
                let a = u.abs();
                if a >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - a;
                    20.0 * q * q * (4.0 * a - 1.0)
                }
            }
            Catalog::Zero => 0.0,
        }
    }

    fn name(&self) -> &str {
        match self {
            Catalog::Gaussian => "gaussian",
            Catalog::OddGaussian => "odd_gaussian",
            Catalog::Bump => "bump",
            Catalog::Zero => "zero",
        }
    }

    fn class_flags(&self) -> ClassFlags {
        // Every entry is Schwartz-like or compactly supported with two
        // integrable derivatives.
        ClassFlags::ALL
    }
}

/// Result of the principal-value computation.
#[derive(Debug, Clone, Serialize)]
pub struct PvResult {
    /// Extrapolated value of `p.v. ∫ f'(x)/x dx`.
    pub value: f64,
    /// Truncated integrals `∫_{|x| > ε} f'(x)/x dx` per grid point.
    pub truncated: Vec<TruncatedPv>,
    /// True when the linearly-extrapolated sequence settled to within `1e-6`.
    pub stabilized: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TruncatedPv {
    pub eps: f64,
    pub value: f64,
}

/// Default truncation grid `ε = 10^{−1}, …, 10^{−6}`.
pub fn default_pv_eps_grid() -> Vec<f64> {
    (1..=6).map(|k| 10f64.powi(-k)).collect()
}

/// Symmetric principal value `p.v. ∫_ℝ f0'(x)/x dx`.
///
/// The two half-lines are paired before integrating:
/// `∫_{|x|>ε} f0'(x)/x dx = ∫_ε^∞ (f0'(x) − f0'(−x))/x dx`, which removes the
/// `1/x` blow-up for differentiable data (the paired integrand tends to
/// `2 f0''(0)`). The truncated values converge linearly in `ε`, so the limit
/// is read off by linear extrapolation through successive grid points; the
/// `stabilized` flag reports whether consecutive extrapolations agree to
/// `1e-6`.
pub fn pv_integral(
    f0: &dyn BoundaryFunction,
    eps_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<PvResult> {
    if eps_grid.is_empty() {
        return Err(Error::InvalidParameter("empty ε grid".into()));
    }
    let mut sorted = eps_grid.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    if sorted.last().copied().unwrap_or(0.0) <= 0.0 {
        return Err(Error::InvalidParameter("ε grid must be positive".into()));
    }

    let mut truncated = Vec::with_capacity(sorted.len());
    for &eps in &sorted {
        let q = quad::integrate_half_line(
            |x| (f0.deriv1(x) - f0.deriv1(-x)) / x,
            eps,
            cfg,
        );
        truncated.push(TruncatedPv {
            eps,
            value: q.value,
        });
    }

    // Linear-in-ε extrapolation through consecutive truncations; exact to
    // O(ε²) so the extrapolant sequence settles far faster than the raw one.
    let mut extrapolated = Vec::new();
    for pair in truncated.windows(2) {
        let (e0, v0) = (pair[0].eps, pair[0].value);
        let (e1, v1) = (pair[1].eps, pair[1].value);
        extrapolated.push(v1 + (v1 - v0) * e1 / (e0 - e1));
    }
    let (value, stabilized) = match extrapolated.len() {
        0 => (truncated[0].value, false),
        1 => (extrapolated[0], false),
        n => {
            let last = extrapolated[n - 1];
            let prev = extrapolated[n - 2];
            (last, (last - prev).abs() < 1e-6)
        }
    };

    Ok(PvResult {
        value,
        truncated,
        stabilized,
    })
}
