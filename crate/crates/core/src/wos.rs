//! Walk-on-spheres simulation of Brownian exit from the wedge.
//!
//! A Brownian path started inside the wedge is simulated without
//! discretizing time: from the current position the walk jumps straight to a
//! uniformly random point of the largest boundary-free circle (the exit
//! distribution of Brownian motion from a centered disk is uniform on its
//! rim). When the position comes within `eps` of the boundary the walk is
//! absorbed and projected to the nearest boundary point, giving an exit
//! position with `O(eps)` bias at geometric cost `O(log(1/eps))` steps.
//!
//! This sampler never touches the conformal map while walking, so its
//! empirical exit law is an independent check on the mapped closed form:
//! pushing physical exit points forward to the half-plane boundary
//! coordinate must reproduce the Cauchy law `Cauchy(phi1(x), |phi2(x)|)`
//! that [`crate::kernels`] samples directly. [`ks_validate`] runs that
//! comparison as a Kolmogorov–Smirnov test.

use crate::error::{Error, Result};
use crate::geometry::{
    boundary_pushforward, distance_to_boundary, nearest_boundary_point, BoundaryConvention,
    CartesianPoint, PolarPoint, WedgeDomain,
};
use crate::kernels::{exit_cdf_u, Arm, ExitSample, RngStream};
use crate::stats::{ks_statistic, KsResult};
use rayon::prelude::*;
use serde::Serialize;

/// Walks per RNG stream when sampling in bulk; fixed so results do not
/// depend on the worker count.
const WOS_CHUNK: u64 = 1 << 10;

/// Controls for the walk-on-spheres sampler.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WosConfig {
    /// Absorption distance: the walk stops when this close to the boundary.
    pub eps: f64,
    /// Step budget per walk; walks that exhaust it are reported as censored.
    pub max_steps: u64,
}

impl WosConfig {
    pub fn new(eps: f64, max_steps: u64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "absorption distance must be positive and finite, got {eps}"
            )));
        }
        if max_steps == 0 {
            return Err(Error::InvalidParameter(
                "step budget must be positive".into(),
            ));
        }
        Ok(Self { eps, max_steps })
    }
}

impl Default for WosConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            max_steps: 1_000_000,
        }
    }
}

fn require_interior(domain: &WedgeDomain, x: CartesianPoint) -> Result<()> {
    let inside = match x.to_polar() {
        Ok(p) => domain.contains(p),
        // Only the origin has no polar form, and it sits on the boundary.
        Err(_) => false,
    };
    if inside {
        Ok(())
    } else {
        Err(Error::OutsideDomain { x1: x.x1, x2: x.x2 })
    }
}

/// One walk to absorption, also reporting how many jumps it took.
pub fn wos_exit_with_steps(
    rng: &mut RngStream,
    domain: &WedgeDomain,
    x: CartesianPoint,
    cfg: &WosConfig,
) -> Result<(ExitSample, u64)> {
    require_interior(domain, x)?;
    let mut p = x;
    for step in 0..cfg.max_steps {
        let dist = distance_to_boundary(domain, p);
        if dist < cfg.eps {
            let point = nearest_boundary_point(domain, p);
            let u = boundary_pushforward(domain, point, BoundaryConvention::Conformal)?;
            return Ok((
                ExitSample {
                    u,
                    point,
                    arm: Arm::from_u(u),
                },
                step,
            ));
        }
        // Any boundary-free circle is admissible; cap the radius so jumps
        // from far-out positions stay bounded. (For this domain the corner
        // sits on the boundary, so dist <= |p| and the cap never binds; it
        // is kept as a guard for the unbounded geometry.)
        let radius = dist.min(10.0 * (1.0 + p.norm()));
        let angle = rng.uniform_angle();
        p = CartesianPoint::new(p.x1 + radius * angle.cos(), p.x2 + radius * angle.sin());
    }
    Err(Error::Censored {
        steps: cfg.max_steps,
    })
}

/// One walk to absorption; see [`wos_exit_with_steps`] for the mechanics.
pub fn wos_exit(
    rng: &mut RngStream,
    domain: &WedgeDomain,
    x: CartesianPoint,
    cfg: &WosConfig,
) -> Result<ExitSample> {
    wos_exit_with_steps(rng, domain, x, cfg).map(|(s, _)| s)
}

/// A batch of walks from a common starting point.
#[derive(Debug, Clone, Serialize)]
pub struct WosRun {
    /// Exit samples of the uncensored walks, in stream order.
    pub samples: Vec<ExitSample>,
    /// Jump counts, aligned with `samples`.
    pub steps: Vec<u64>,
    /// Walks that exhausted the step budget.
    pub censored: u64,
    pub requested: u64,
}

impl WosRun {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.requested.max(1) as f64
    }

    pub fn u_values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.u).collect()
    }

    pub fn median_steps(&self) -> Option<f64> {
        if self.steps.is_empty() {
            return None;
        }
        let mut sorted = self.steps.clone();
        sorted.sort_unstable();
        let n = sorted.len();
        Some(if n % 2 == 1 {
            sorted[n / 2] as f64
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
        })
    }
}

/// Run `n` independent walks from `x`, parallel over fixed-size RNG-stream
/// chunks. Output is a pure function of `(seed, x, cfg, n)` — the worker
/// count only affects wall time.
pub fn sample_many(
    domain: &WedgeDomain,
    x: CartesianPoint,
    n: u64,
    seed: u64,
    cfg: &WosConfig,
) -> Result<WosRun> {
    if n == 0 {
        return Err(Error::InsufficientSamples { got: 0, need: 1 });
    }
    require_interior(domain, x)?;
    let n_chunks = n.div_ceil(WOS_CHUNK);
    let chunks: Vec<(Vec<ExitSample>, Vec<u64>, u64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = RngStream::new(seed, chunk);
            let count = WOS_CHUNK.min(n - chunk * WOS_CHUNK);
            let mut samples = Vec::with_capacity(count as usize);
            let mut steps = Vec::with_capacity(count as usize);
            let mut censored = 0u64;
            for _ in 0..count {
                match wos_exit_with_steps(&mut rng, domain, x, cfg) {
                    Ok((s, k)) => {
                        samples.push(s);
                        steps.push(k);
                    }
                    Err(Error::Censored { .. }) => censored += 1,
                    Err(e) => return Err(e),
                }
            }
            Ok((samples, steps, censored))
        })
        .collect::<Result<_>>()?;
    let mut run = WosRun {
        samples: Vec::with_capacity(n as usize),
        steps: Vec::with_capacity(n as usize),
        censored: 0,
        requested: n,
    };
    for (samples, steps, censored) in chunks {
        run.samples.extend(samples);
        run.steps.extend(steps);
        run.censored += censored;
    }
    Ok(run)
}

/// Kolmogorov–Smirnov test of exit samples from `x` against the closed-form
/// law of the exit coordinate, at the 1% level (critical value
/// `1.63/sqrt(n)`). Requires at least 1000 samples.
pub fn ks_validate(
    samples: &[ExitSample],
    domain: &WedgeDomain,
    x: PolarPoint,
) -> Result<KsResult> {
    if samples.len() < 1000 {
        return Err(Error::InsufficientSamples {
            got: samples.len(),
            need: 1000,
        });
    }
    // Validate the starting point once, then the per-sample closure is
    // infallible.
    exit_cdf_u(domain, x, 0.0)?;
    let mut us: Vec<f64> = samples.iter().map(|s| s.u).collect();
    let statistic = ks_statistic(&mut us, |u| {
        exit_cdf_u(domain, x, u).expect("starting point validated above")
    })?;
    let n = samples.len();
    let critical_value = 1.63 / (n as f64).sqrt();
    Ok(KsResult {
        statistic,
        critical_value,
        n,
        pass: statistic < critical_value,
    })
}
