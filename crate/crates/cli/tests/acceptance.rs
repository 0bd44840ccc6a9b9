//! Acceptance gate: ten end-to-end checks, one test per criterion, each
//! printing exactly one `criterion N: PASS/FAIL` line (visible with
//! `cargo test --test acceptance -- --nocapture`, and always on failure).
//!
//! Covered: the closed-form exit law against walk-on-spheres, agreement of
//! the quadrature and Monte Carlo solvers, harmonicity and boundary
//! continuity, derivative formulas, the small-radius limit structure, the
//! smoothness breakdown at order 2/3, the odd-data sensitivity claim, energy
//! norms, the Poisson reduction pipeline, and bitwise reproducibility.

use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use wedge_core::boundary_data::{BoundaryFunction, Catalog};
use wedge_core::geometry::{conformal_map, CartesianPoint, PolarPoint, WedgeDomain};
use wedge_core::kernels::RngStream;
use wedge_core::quad::{integrate, QuadratureConfig};
use wedge_core::regularity::{
    limit_check, scan_sigma, sobolev_first_order, RegionPartition, Verdict,
};
use wedge_core::solver::{
    grad, i_integral, j_integral, newtonian_potential, poisson_reduce, second_deriv_x1x1,
    solve_mc_parallel, solve_quadrature, RadialBumpSource, ReduceConfig, SourceTerm,
};
use wedge_core::wos::{ks_validate, sample_many, WosConfig};

fn domain() -> WedgeDomain {
    WedgeDomain::new(1.5 * PI).expect("valid opening angle")
}

/// Tight tolerances so finite-difference oracles are not noise-limited.
fn tight() -> QuadratureConfig {
    QuadratureConfig::default().with_tols(1e-13, 1e-12)
}

fn verdict_line(criterion: u32, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:2}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion}: {detail}");
}

/// Deterministic interior points, kept away from the boundary.
fn interior_points(count: usize, key: u64, r_max: f64, margin: f64) -> Vec<PolarPoint> {
    let d = domain();
    let mut rng = RngStream::new(0xACCE97, key);
    let span = 2.0 * PI - d.theta0() - 2.0 * margin;
    (0..count)
        .map(|_| {
            let r = 0.3 + (r_max - 0.3) * rng.uniform_open01();
            let theta = d.theta0() + margin + span * rng.uniform_open01();
            PolarPoint::new(r, theta).expect("constructed inside the wedge")
        })
        .collect()
}

fn f_at(d: &WedgeDomain, f0: &dyn BoundaryFunction, x1: f64, x2: f64, cfg: &QuadratureConfig) -> f64 {
    let r = x1.hypot(x2);
    let mut theta = x2.atan2(x1);
    if theta <= 0.0 {
        theta += 2.0 * PI;
    }
    solve_quadrature(d, f0, PolarPoint::new(r, theta).unwrap(), cfg).unwrap()
}

// ---------------------------------------------------------------------------

/// Walk-on-spheres exits, read in the conformal coordinate, follow the
/// closed-form Cauchy law at five starting points (KS at the 1% level,
/// n = 1e5 each, under two minutes).
fn exit_law_holds(seed_base: u64) -> (bool, String) {
    let d = domain();
    let starts = [
        (1.0, 1.25 * PI),
        (0.5, 1.75 * PI),
        (2.0, 0.75 * PI),
        (0.7, 1.2 * PI),
        (1.5, 1.9 * PI),
    ];
    let wos_cfg = WosConfig::new(1e-6, 1_000_000).unwrap();
    let mut stats = Vec::new();
    let mut all_pass = true;
    for (k, &(r, theta)) in starts.iter().enumerate() {
        let x = PolarPoint::new(r, theta).unwrap();
        let run = sample_many(&d, x.to_cartesian(), 100_000, seed_base + k as u64, &wos_cfg)
            .unwrap();
        let ks = ks_validate(&run.samples, &d, x).unwrap();
        all_pass &= ks.pass && run.censored == 0;
        stats.push(format!("{:.4}", ks.statistic));
    }
    // The first start maps to the unit-scale centered Cauchy law.
    let w = conformal_map(&d, PolarPoint::new(1.0, 1.25 * PI).unwrap()).unwrap();
    let centered = w.phi1.abs() < 1e-12 && (w.phi2.abs() - 1.0).abs() < 1e-12;
    all_pass &= centered;
    (
        all_pass,
        format!(
            "KS statistics {:?} vs critical 0.00515, start (1, 5pi/4) maps to (phi1, |phi2|) = ({:.2e}, {:.6})",
            stats,
            w.phi1,
            w.phi2.abs()
        ),
    )
}

#[test]
fn criterion_01_exit_law_matches_wos() {
    let t0 = Instant::now();
    let (pass, detail) = exit_law_holds(1000);
    let elapsed = t0.elapsed().as_secs_f64();
    verdict_line(
        1,
        pass && elapsed < 120.0,
        &format!("{detail}; {elapsed:.1}s (limit 120s)"),
    );
}

/// Quadrature and Monte Carlo (n = 1e5) agree within three standard errors
/// at >= 97 of 100 random interior points.
fn methods_agree(seed_base: u64) -> (bool, String) {
    let d = domain();
    let f0 = Catalog::Gaussian;
    let cfg = QuadratureConfig::default();
    let points = interior_points(100, 0xC2, 2.2, 0.2);
    let mut hits = 0;
    let mut worst = 0.0f64;
    for (k, &x) in points.iter().enumerate() {
        let q = solve_quadrature(&d, &f0, x, &cfg).unwrap();
        let mc = solve_mc_parallel(&d, &f0, x, 100_000, seed_base + k as u64).unwrap();
        let dev = (q - mc.value).abs() / mc.std_error.max(1e-300);
        worst = worst.max(dev);
        if dev <= 3.0 {
            hits += 1;
        }
    }
    (
        hits >= 97,
        format!("{hits}/100 points within 3 standard errors (worst deviation {worst:.2})"),
    )
}

#[test]
fn criterion_02_quadrature_and_mc_agree() {
    let t0 = Instant::now();
    let (pass, detail) = methods_agree(2000);
    let elapsed = t0.elapsed().as_secs_f64();
    verdict_line(
        2,
        pass && elapsed < 120.0,
        &format!("{detail}; {elapsed:.1}s (limit 120s)"),
    );
}

#[test]
fn criterion_03_harmonic_and_boundary_continuous() {
    let d = domain();
    let f0 = Catalog::Gaussian;
    let cfg = tight();
    let h = 1e-3;
    let mut worst_rel = 0.0f64;
    for &x in &interior_points(50, 0xC3, 1.5, 0.25) {
        let c = x.to_cartesian();
        let f0c = f_at(&d, &f0, c.x1, c.x2, &cfg);
        let fxx = (f_at(&d, &f0, c.x1 + h, c.x2, &cfg) - 2.0 * f0c
            + f_at(&d, &f0, c.x1 - h, c.x2, &cfg))
            / (h * h);
        let fyy = (f_at(&d, &f0, c.x1, c.x2 + h, &cfg) - 2.0 * f0c
            + f_at(&d, &f0, c.x1, c.x2 - h, &cfg))
            / (h * h);
        let rel = (fxx + fyy).abs() / (fxx.abs() + fyy.abs()).max(1e-300);
        worst_rel = worst_rel.max(rel);
    }
    let laplacian_ok = worst_rel < 1e-4;

    // Approach the positive-x1 arm along the inward normal: the gap to the
    // boundary datum must shrink monotonically and end below 1e-3.
    let u = 0.8f64;
    let b1 = u.powf(1.0 / d.beta());
    let target = f0.eval(u);
    let gaps: Vec<f64> = (0..7)
        .map(|k| {
            let dist = 0.5 * 0.25f64.powi(k);
            (f_at(&d, &f0, b1, -dist, &QuadratureConfig::default()) - target).abs()
        })
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    let final_gap = *gaps.last().unwrap();
    let boundary_ok = monotone && final_gap < 1e-3;

    verdict_line(
        3,
        laplacian_ok && boundary_ok,
        &format!(
            "worst relative FD Laplacian {worst_rel:.2e} (< 1e-4), boundary gap monotone = {monotone}, final gap {final_gap:.2e} (< 1e-3)"
        ),
    );
}

#[test]
fn criterion_04_derivative_closed_forms() {
    let d = domain();
    let f0 = Catalog::Gaussian;
    let cfg = tight();
    let mut worst_grad = 0.0f64;
    let mut worst_dxx = 0.0f64;
    for &x in &interior_points(20, 0xC4, 1.8, 0.25) {
        let c = x.to_cartesian();
        let (g1, g2) = grad(&d, &f0, x, &cfg).unwrap();
        let h = 1e-4;
        let fd1 = (f_at(&d, &f0, c.x1 + h, c.x2, &cfg) - f_at(&d, &f0, c.x1 - h, c.x2, &cfg))
            / (2.0 * h);
        let fd2 = (f_at(&d, &f0, c.x1, c.x2 + h, &cfg) - f_at(&d, &f0, c.x1, c.x2 - h, &cfg))
            / (2.0 * h);
        let rel = ((g1 - fd1).hypot(g2 - fd2)) / fd1.hypot(fd2).max(1e-300);
        worst_grad = worst_grad.max(rel);

        let dxx = second_deriv_x1x1(&d, &f0, x, &cfg).unwrap();
        let h2 = 1e-3;
        let fd_xx = (f_at(&d, &f0, c.x1 + h2, c.x2, &cfg)
            - 2.0 * f_at(&d, &f0, c.x1, c.x2, &cfg)
            + f_at(&d, &f0, c.x1 - h2, c.x2, &cfg))
            / (h2 * h2);
        let rel_xx = (dxx - fd_xx).abs() / fd_xx.abs().max(1e-300);
        worst_dxx = worst_dxx.max(rel_xx);
    }
    verdict_line(
        4,
        worst_grad < 1e-6 && worst_dxx < 1e-4,
        &format!(
            "worst relative error: gradient {worst_grad:.2e} (< 1e-6), second x1-derivative {worst_dxx:.2e} (< 1e-4)"
        ),
    );
}

#[test]
fn criterion_05_small_radius_limits() {
    let d = domain();
    let f0 = Catalog::Gaussian;
    let cfg = QuadratureConfig::default();
    let theta = 1.5 * PI;

    // Independent oracle for the principal value: for this datum the
    // integrand collapses to -2 exp(-x^2), an ordinary convergent integral.
    let oracle = integrate(|x| -2.0 * (-x * x).exp(), -10.0, 10.0, &cfg);
    let oracle_ok = oracle.converged && (oracle.value + 2.0 * PI.sqrt()).abs() < 1e-8;

    let i = i_integral(&d, &f0, 1e-4, theta, &cfg).unwrap();
    let j = j_integral(&d, &f0, 1e-4, theta, &cfg).unwrap();
    let predicted = 0.75f64.sqrt() * oracle.value;
    let i_ok = i.abs() < 1e-3;
    let j_ok = (j - predicted).abs() < 1e-2;
    verdict_line(
        5,
        oracle_ok && i_ok && j_ok,
        &format!(
            "pv oracle {:.6} (expected -3.544908), |I(1e-4)| = {:.2e} (< 1e-3), J(1e-4) = {:.6} vs (sqrt(3)/2) pv = {:.6} (gap {:.2e} < 1e-2)",
            oracle.value,
            i.abs(),
            j,
            predicted,
            (j - predicted).abs()
        ),
    );
}

#[test]
fn criterion_06_breakdown_at_two_thirds() {
    let t0 = Instant::now();
    let d = domain();
    let f0 = Catalog::Gaussian;
    let cfg = QuadratureConfig::default();
    let sigma_grid = [0.50, 0.55, 0.60, 0.65, 2.0 / 3.0, 0.70, 0.75, 0.80, 0.90];
    // Cutoffs deep enough that the tail fits and the stabilized readings both
    // resolve; the scan cost grows only logarithmically with the depth.
    let rho_grid = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7];
    let partition = RegionPartition::new(0.1).unwrap();
    let report = scan_sigma(&d, &f0, &sigma_grid, &rho_grid, &partition, &cfg).unwrap();

    let crit = report.sigma_crit_estimate;
    let crit_ok = crit.map(|c| (0.63..=0.70).contains(&c)).unwrap_or(false);

    // Divergence exponents: the integral grows like rho_min^(-(2 - 3 sigma)),
    // so the fitted tail-decay rate must sit at 2 - 3 sigma.
    let mut exponent_ok = true;
    let mut exponents = Vec::new();
    for target in [0.70, 0.75, 0.90] {
        let s = sigma_grid
            .iter()
            .position(|&v| (v - target).abs() < 1e-12)
            .unwrap();
        let fitted = report.fitted_exponent[s].unwrap_or(f64::NAN);
        let expected = 2.0 - 3.0 * target;
        exponent_ok &= (fitted - expected).abs() <= 0.1;
        exponents.push(format!("sigma {target}: {fitted:.3} vs {expected:.2}"));
    }

    // Below the threshold the converged reading (increment-geometry corrected
    // value) must settle to < 1e-3 relative across the last cutoff decade.
    let mut stable_ok = true;
    let mut changes = Vec::new();
    for target in [0.50, 0.55, 0.60] {
        let s = sigma_grid
            .iter()
            .position(|&v| (v - target).abs() < 1e-12)
            .unwrap();
        let vals = &report.i_values[s];
        let n = vals.len();
        let extrapolant = |k: usize| -> f64 {
            let s_prev = vals[k - 1] - vals[k - 2];
            let s_last = vals[k] - vals[k - 1];
            let q = s_last / s_prev;
            vals[k] + s_last * q / (1.0 - q)
        };
        let l_prev = extrapolant(n - 2);
        let l_last = extrapolant(n - 1);
        let rel = (l_last - l_prev).abs() / l_last.abs().max(1e-300);
        stable_ok &= rel < 1e-3;
        changes.push(format!("sigma {target}: {rel:.2e}"));
    }

    let elapsed = t0.elapsed().as_secs_f64();
    verdict_line(
        6,
        crit_ok && exponent_ok && stable_ok && report.failed_cells == 0 && elapsed < 600.0,
        &format!(
            "sigma_crit {crit:?} in [0.63, 0.70]; exponent fits [{}]; last-decade stabilization [{}]; failed cells {}; {elapsed:.1}s (limit 600s)",
            exponents.join(", "),
            changes.join(", "),
            report.failed_cells
        ),
    );
}

#[test]
fn criterion_07_odd_data_shows_no_divergence() {
    let d = domain();
    let odd = Catalog::OddGaussian;
    let even = Catalog::Gaussian;
    let cfg = QuadratureConfig::default();
    let rho_grid = [1e-2, 1e-3, 1e-4];

    // Claimed: for the odd datum the predicted small-radius limit of J is
    // zero and the measured one below 1e-2, so no divergence should appear
    // just above smoothness order 2/3, unlike for the even datum.
    let lc = limit_check(&d, &odd, 1.5 * PI, &rho_grid, &cfg).unwrap();
    let predicted_zero = lc.predicted_j_limit.abs() < 1e-6;
    let measured_small = lc.j_limit.abs() < 1e-2;

    let partition = RegionPartition::new(0.1).unwrap();
    let scan_grid = [0.70, 0.75];
    let scan_rho = [1e-2, 1e-3, 1e-4, 1e-5];
    let odd_scan = scan_sigma(&d, &odd, &scan_grid, &scan_rho, &partition, &cfg).unwrap();
    let even_scan = scan_sigma(&d, &even, &scan_grid, &scan_rho, &partition, &cfg).unwrap();
    let odd_diverges = odd_scan.verdicts.contains(&Verdict::Divergent);
    let even_diverges = even_scan.verdicts.contains(&Verdict::Divergent);

    verdict_line(
        7,
        predicted_zero && measured_small && !odd_diverges && even_diverges,
        &format!(
            "odd datum: predicted J-limit {:.6} (claim: 0), measured {:.6} (claim: < 1e-2, gap to prediction {:.1e}); scan verdicts above 2/3 {:?} (claim: none divergent); even datum diverges: {}. The limit is pi/2, the corner term -pi cos(theta - omega_theta) f0'(0) with f0'(0) = 1; a vanishing principal value does not silence it, so the odd datum drives the same divergence as the even one",
            lc.predicted_j_limit,
            lc.j_limit,
            lc.gap,
            odd_scan.verdicts,
            even_diverges
        ),
    );
}

#[test]
fn criterion_08_energy_norms_finite_and_stable() {
    let d = domain();
    let f0 = Catalog::Gaussian;
    let norms = sobolev_first_order(&d, &f0, &QuadratureConfig::default()).unwrap();
    let finite = norms.l2_sq.is_finite()
        && norms.grad_l2_sq.is_finite()
        && norms.l2_sq > 0.0
        && norms.grad_l2_sq > 0.0;
    let stable =
        norms.stabilized && norms.l2_rel_change < 1e-3 && norms.grad_rel_change < 1e-3;
    verdict_line(
        8,
        finite && stable,
        &format!(
            "|f|^2 = {:.6} (rel change {:.2e}), |grad f|^2 = {:.6} (rel change {:.2e}), both < 1e-3 on refinement",
            norms.l2_sq, norms.l2_rel_change, norms.grad_l2_sq, norms.grad_rel_change
        ),
    );
}

#[test]
fn criterion_09_poisson_pipeline() {
    let d = domain();
    let cfg = QuadratureConfig::default();
    let g = RadialBumpSource::new(CartesianPoint::new(-1.5, -1.5), 0.5, 1.0).unwrap();

    // The log-potential convolution must invert the Laplacian on the source:
    // five-point finite differences of N * g against g itself.
    let tight_cfg = tight();
    let h = 2e-3;
    let probes = [
        (0.0, 0.0),
        (0.1, 0.05),
        (-0.12, 0.08),
        (0.05, -0.15),
        (0.2, 0.0),
    ];
    let mut worst_rel = 0.0f64;
    for &(dx, dy) in &probes {
        let p = CartesianPoint::new(-1.5 + dx, -1.5 + dy);
        let w = |x1: f64, x2: f64| {
            newtonian_potential(&g, CartesianPoint::new(x1, x2), &tight_cfg).unwrap()
        };
        let lap = (w(p.x1 + h, p.x2) + w(p.x1 - h, p.x2) + w(p.x1, p.x2 + h)
            + w(p.x1, p.x2 - h)
            - 4.0 * w(p.x1, p.x2))
            / (h * h);
        let rel = (lap - g.eval(p)).abs() / g.eval(p).abs().max(1e-300);
        worst_rel = worst_rel.max(rel);
    }
    let inversion_ok = worst_rel < 1e-3;

    // End-to-end: reduce to boundary data and run the scan; the verdicts are
    // reported, not pinned.
    let f0 = poisson_reduce(&d, &g, &ReduceConfig::default(), &cfg).unwrap();
    let partition = RegionPartition::new(0.1).unwrap();
    let scan = scan_sigma(
        &d,
        &f0,
        &[0.50, 0.70, 0.90],
        &[1e-2, 1e-3, 1e-4, 1e-5],
        &partition,
        &cfg,
    )
    .unwrap();
    let produced = scan.verdicts.len() == 3;

    verdict_line(
        9,
        inversion_ok && produced,
        &format!(
            "worst relative FD-Laplacian error of the potential {worst_rel:.2e} (< 1e-3); scan on the reduced trace: verdicts {:?}, sigma_crit {:?}",
            scan.verdicts, scan.sigma_crit_estimate
        ),
    );
}

#[test]
fn criterion_10_reproducibility() {
    // Bitwise: the same invocation twice gives identical bytes.
    let args = [
        "exit-dist",
        "--r",
        "1",
        "--theta",
        "3.926990816987241",
        "--n",
        "20000",
        "--seed",
        "9",
    ];
    let spawn = |extra: &[&str]| {
        let mut all: Vec<&str> = args.to_vec();
        all.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_wedge"))
            .args(&all)
            .env_remove("WEDGE_THREADS")
            .output()
            .expect("binary spawns")
    };
    let a = spawn(&[]);
    let b = spawn(&[]);
    let bitwise = a.status.code() == Some(0) && a.stdout == b.stdout && !a.stdout.is_empty();

    // Statistical: fresh seeds must re-satisfy the exit-law and agreement
    // criteria on their own.
    let (law_a, _) = exit_law_holds(31_000);
    let (law_b, _) = exit_law_holds(32_000);
    let (agree_a, det_a) = methods_agree(41_000);
    let (agree_b, det_b) = methods_agree(42_000);

    verdict_line(
        10,
        bitwise && law_a && law_b && agree_a && agree_b,
        &format!(
            "identical seeds byte-identical: {bitwise}; exit law with two fresh seeds: {law_a}/{law_b}; method agreement with two fresh seeds: [{det_a}] / [{det_b}]"
        ),
    );
}
