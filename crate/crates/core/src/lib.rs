//! Harmonic Dirichlet problems on plane wedge domains, solved exactly
//! through a conformal map, with tools that measure how much smoothness the
//! solution actually has.
//!
//! The centerpiece domain is the L-shape — the plane minus the closed first
//! quadrant, a wedge of opening `3π/2` — where the harmonic extension of
//! smooth boundary data is famously *not* smooth: its fractional-order
//! energy is finite up to order `1 + 2/3` and infinite beyond. This crate
//! makes that threshold computable:
//!
//! * [`geometry`] — the wedge, the conformal map `z ↦ z^beta` onto a half
//!   plane, boundary parametrizations and exact distances;
//! * [`quad`] — adaptive Gauss–Kronrod quadrature, including a rule for
//!   integrals against the Cauchy weight on the whole line;
//! * [`boundary_data`] — boundary functions (Gaussian, odd Gaussian, bump,
//!   zero, spline-interpolated traces) and principal-value integrals;
//! * [`kernels`] — the exit law of Brownian motion from the wedge: Cauchy
//!   sampling, CDFs, densities, seeded RNG streams;
//! * [`solver`] — the solution by Poisson-kernel quadrature or Monte Carlo
//!   exit averaging, its first and second derivatives, Newtonian potentials
//!   and the reduction of source problems to boundary ones;
//! * [`wos`] — walk-on-spheres simulation, a map-free sampler used to
//!   validate the exit law;
//! * [`regularity`] — weighted square integrals of second derivatives,
//!   divergence diagnosis, and the scan that locates the critical
//!   smoothness order;
//! * [`stats`] — Kolmogorov–Smirnov machinery for the sampling tests.
//!
//! Deterministic by construction: all randomness flows through explicitly
//! seeded [`kernels::RngStream`]s, and parallel reductions are ordered, so
//! identical inputs give bit-identical outputs at any thread count.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form is also true for NaN, which must be rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary_data;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod quad;
pub mod regularity;
pub mod solver;
pub mod stats;
pub mod wos;

pub use boundary_data::{
    default_pv_eps_grid, pv_integral, BoundaryFunction, Catalog, ClassFlags, DerivativeKind,
    PvResult, TruncatedPv,
};
pub use error::{Error, Result};
pub use geometry::{
    boundary_pullback, boundary_pushforward, conformal_inverse, conformal_map,
    distance_to_boundary, nearest_boundary_point, BoundaryConvention, CartesianPoint,
    HalfPlanePoint, PolarPoint, WedgeDomain,
};
pub use kernels::{
    arm_probability_x, bisector_angle, cauchy_cdf, cauchy_quartiles, cauchy_sample, exit_cdf_u,
    exit_density_physical, exit_sample, poisson_kernel, Arm, ExitSample, RngStream,
};
pub use quad::{integrate, integrate_cauchy_weighted, integrate_half_line, QuadResult, QuadratureConfig};
pub use regularity::{
    default_limit_rho_grid, default_rho_min_grid, default_sigma_grid, fit_and_classify,
    limit_check, scan_sigma, sobolev_first_order, weighted_integral_full, weighted_integral_k1,
    weighted_integral_parts, FitOutcome, LimitCheck, RegionPartition, RegionSplit,
    RegularityReport, SobolevNorms, Verdict,
};
pub use solver::{
    grad, i_integral, j_integral, newtonian_potential, poisson_reduce, second_deriv_x1x1,
    solve_mc, solve_mc_parallel, solve_quadrature, McEstimate, RadialBumpSource, ReduceConfig,
    ReducedBoundaryData, SourceTerm, MIN_BOUNDARY_DISTANCE,
};
pub use stats::{ks_statistic, ks_test, KsResult};
pub use wos::{ks_validate, sample_many, wos_exit, wos_exit_with_steps, WosConfig, WosRun};

/// Version of this crate, echoed into every CLI output envelope.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
