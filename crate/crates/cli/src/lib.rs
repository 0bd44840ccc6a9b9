//! Command-line front end for `wedge-core`: harmonic extensions on the
//! L-shaped plane domain, walk-on-spheres exit sampling and validation,
//! small-radius limit diagnostics, the principal-value functional, the
//! weighted smoothness scan, and the Poisson-source reduction.
//!
//! Each subcommand emits a single JSON document (default) or CSV table to
//! stdout or `--out`. Every output embeds the resolved configuration and the
//! crate version; for a fixed configuration (including the seed) reruns are
//! byte-identical. Exit codes: 0 on success, 2 when a statistical validation
//! rejects, 1 on usage errors — which produce a message and no output.

// Validation deliberately writes `!(x > 0.0)` instead of `x <= 0.0`: the
// negated form is also true for NaN, which must be rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::PI;
use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::Once;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use wedge_core::boundary_data::{
    default_pv_eps_grid, pv_integral, BoundaryFunction, Catalog, PvResult,
};
use wedge_core::error::Error as CoreError;
use wedge_core::geometry::{
    boundary_pushforward, BoundaryConvention, PolarPoint, WedgeDomain,
};
use wedge_core::kernels::exit_cdf_u;
use wedge_core::quad::QuadratureConfig;
use wedge_core::regularity::{
    default_limit_rho_grid, default_rho_min_grid, default_sigma_grid, limit_check, scan_sigma,
    LimitCheck, RegionPartition, RegularityReport,
};
use wedge_core::solver::{
    poisson_reduce, solve_mc_parallel, solve_quadrature, McEstimate, RadialBumpSource,
    ReduceConfig,
};
use wedge_core::stats::{ks_test, KsResult};
use wedge_core::wos::{ks_validate, sample_many, WosConfig};

/// Successful run.
pub const EXIT_OK: i32 = 0;
/// Bad invocation: unknown flags, malformed numbers, out-of-domain points.
pub const EXIT_USAGE: i32 = 1;
/// The computation ran but a statistical validation rejected.
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "wedge",
    version = wedge_core::VERSION,
    about = "Dirichlet problem on the L-shaped plane domain: solve, sample, validate, scan",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args, Debug, Clone)]
struct GlobalOpts {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the output to this path instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap the worker thread count (falls back to WEDGE_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Interior opening angle of the wedge in radians, π < omega < 2π.
    #[arg(long, global = true, default_value_t = 1.5 * PI, allow_negative_numbers = true)]
    omega: f64,
    /// Absolute tolerance for adaptive quadrature.
    #[arg(long, global = true)]
    abs_tol: Option<f64>,
    /// Relative tolerance for adaptive quadrature.
    #[arg(long, global = true)]
    rel_tol: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Quadrature,
    Mc,
    Both,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Convention {
    Conformal,
    ArcLength,
}

impl From<Convention> for BoundaryConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Conformal => BoundaryConvention::Conformal,
            Convention::ArcLength => BoundaryConvention::ArcLength,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the harmonic extension of a boundary datum at one interior point
    Solve(SolveArgs),
    /// Sample boundary exits of Brownian motion by walk-on-spheres
    ExitDist(ExitDistArgs),
    /// Kolmogorov-Smirnov check of walk-on-spheres exits against the closed-form law
    WosValidate(WosValidateArgs),
    /// Scan the weighted second-derivative integral over smoothness orders
    Regularity(RegularityArgs),
    /// Small-radius limits of the J and I integrals along one interior direction
    Limits(LimitsArgs),
    /// Principal value of f0'(x)/x for a catalog datum
    Pv(PvArgs),
    /// Reduce a compactly supported source to boundary data via its log potential
    PoissonReduce(PoissonReduceArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Boundary datum: gaussian | odd_gaussian | bump | zero.
    #[arg(long, default_value = "gaussian")]
    f0: String,
    /// Polar radius of the evaluation point.
    #[arg(long, allow_negative_numbers = true)]
    r: f64,
    /// Polar angle of the evaluation point in radians, inside the wedge.
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = Method::Quadrature)]
    method: Method,
    /// Monte Carlo sample count (method mc or both).
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ExitDistArgs {
    /// Polar radius of the starting point.
    #[arg(long, allow_negative_numbers = true)]
    r: f64,
    /// Polar angle of the starting point in radians.
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
    /// Number of walks.
    #[arg(long, default_value_t = 10_000)]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Absorption shell width.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Step budget per walk; exceeding it censors the walk.
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: u64,
}

#[derive(Args, Debug)]
struct WosValidateArgs {
    #[command(flatten)]
    walk: ExitDistArgs,
    /// Boundary parametrization used to read the exit coordinate. The
    /// closed-form law holds for the conformal convention; arc-length is the
    /// deliberate mismatch and is expected to reject.
    #[arg(long, value_enum, default_value_t = Convention::Conformal)]
    convention: Convention,
}

#[derive(Args, Debug)]
struct RegularityArgs {
    /// Boundary datum: gaussian | odd_gaussian | bump | zero.
    #[arg(long, default_value = "gaussian")]
    f0: String,
    /// Smoothness orders to scan, comma-separated, each in (0, 1].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sigma: Option<Vec<f64>>,
    /// Decreasing radial cutoffs, comma-separated, each in (0, 1).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rho_min: Option<Vec<f64>>,
    /// Angular width of the boundary strips excluded from the scan region.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

#[derive(Args, Debug)]
struct LimitsArgs {
    /// Boundary datum: gaussian | odd_gaussian | bump | zero.
    #[arg(long, default_value = "gaussian")]
    f0: String,
    /// Interior direction along which the radius shrinks (radians).
    #[arg(long, default_value_t = 1.5 * PI, allow_negative_numbers = true)]
    theta: f64,
    /// Radii used for the extrapolation, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rho: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct PvArgs {
    /// Boundary datum: gaussian | odd_gaussian | bump | zero.
    #[arg(long)]
    f0: String,
    /// Truncation radii, comma-separated and decreasing.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    eps: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct PoissonReduceArgs {
    /// Source center "x1,x2"; must keep the support inside the domain.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "-1.5,-1.5")]
    center: (f64, f64),
    /// Support radius of the source bump.
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    /// Total mass of the source.
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    /// Arc length tabulated along each boundary arm.
    #[arg(long, default_value_t = 40.0)]
    arm_length: f64,
    /// Nodes per arm in the trace table.
    #[arg(long, default_value_t = 1201)]
    nodes_per_arm: usize,
    /// Half-width of the reported trace grid in the boundary coordinate u.
    #[arg(long, default_value_t = 5.0)]
    u_max: f64,
    /// Number of reported trace samples.
    #[arg(long, default_value_t = 101)]
    u_count: usize,
    /// Additionally run the smoothness scan on the reduced datum (JSON only).
    #[arg(long)]
    scan: bool,
    /// Smoothness orders for --scan, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sigma: Option<Vec<f64>>,
    /// Radial cutoffs for --scan, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rho_min: Option<Vec<f64>>,
    /// Strip width for --scan.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"x1,x2\", got {s:?}"));
    }
    let x1: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad first coordinate: {e}"))?;
    let x2: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad second coordinate: {e}"))?;
    Ok((x1, x2))
}

/// Run the CLI on the given argument list and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version print to stdout and succeed; real parse
            // errors print to stderr and are usage failures.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let out = cli.global.out.clone();
    match execute(cli) {
        Ok((text, code)) => match write_output(&text, out.as_deref()) {
            Ok(()) => code,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_USAGE
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn write_output(text: &str, out: Option<&std::path::Path>) -> std::io::Result<()> {
    use std::io::Write;
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()
        }
    }
}

/// One-shot rayon pool configuration. Later calls in the same process keep
/// the first pool; results never depend on the worker count, only wall time.
fn configure_threads(explicit: Option<usize>) -> Result<Option<usize>, String> {
    let requested = match explicit {
        Some(n) => Some(n),
        None => match std::env::var("WEDGE_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|e| format!("WEDGE_THREADS must be a positive integer: {e}"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = requested {
        if n == 0 {
            return Err("thread count must be at least 1".into());
        }
        static INIT: Once = Once::new();
        INIT.call_once(|| {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        });
    }
    Ok(requested)
}

fn quad_config(global: &GlobalOpts) -> Result<QuadratureConfig, String> {
    let mut cfg = QuadratureConfig::default();
    if let Some(a) = global.abs_tol {
        if !(a > 0.0) || !a.is_finite() {
            return Err(format!("abs-tol must be positive and finite, got {a}"));
        }
        cfg.abs_tol = a;
    }
    if let Some(r) = global.rel_tol {
        if !(r > 0.0) || !r.is_finite() {
            return Err(format!("rel-tol must be positive and finite, got {r}"));
        }
        cfg.rel_tol = r;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(String, i32), String> {
    let threads = configure_threads(cli.global.threads)?;
    let domain = WedgeDomain::new(cli.global.omega).map_err(|e| e.to_string())?;
    let cfg = quad_config(&cli.global)?;
    let ctx = Context {
        global: cli.global,
        threads,
        domain,
        cfg,
    };
    match cli.command {
        Command::Solve(a) => cmd_solve(&ctx, a),
        Command::ExitDist(a) => cmd_exit_dist(&ctx, a),
        Command::WosValidate(a) => cmd_wos_validate(&ctx, a),
        Command::Regularity(a) => cmd_regularity(&ctx, a),
        Command::Limits(a) => cmd_limits(&ctx, a),
        Command::Pv(a) => cmd_pv(&ctx, a),
        Command::PoissonReduce(a) => cmd_poisson_reduce(&ctx, a),
    }
}

struct Context {
    global: GlobalOpts,
    threads: Option<usize>,
    domain: WedgeDomain,
    cfg: QuadratureConfig,
}

/// Settings shared by every command, echoed into each output.
#[derive(Serialize)]
struct CommonEcho {
    omega: f64,
    format: Format,
    out: Option<String>,
    threads: Option<usize>,
    abs_tol: f64,
    rel_tol: f64,
}

impl Context {
    fn echo(&self) -> CommonEcho {
        CommonEcho {
            omega: self.global.omega,
            format: self.global.format,
            out: self
                .global
                .out
                .as_ref()
                .map(|p| p.display().to_string()),
            threads: self.threads,
            abs_tol: self.cfg.abs_tol,
            rel_tol: self.cfg.rel_tol,
        }
    }
}

#[derive(Serialize)]
struct Envelope<C: Serialize, R: Serialize> {
    version: &'static str,
    command: &'static str,
    config: C,
    result: R,
}

fn render_json<C: Serialize, R: Serialize>(env: &Envelope<C, R>) -> Result<String, String> {
    let mut text = serde_json::to_string_pretty(env).map_err(|e| e.to_string())?;
    text.push('\n');
    Ok(text)
}

/// CSV document: two comment lines carrying the version and the full config,
/// then a regular header + rows table.
struct CsvDoc {
    writer: csv::Writer<Vec<u8>>,
    preamble: String,
}

impl CsvDoc {
    fn new<C: Serialize>(command: &str, config: &C) -> Result<Self, String> {
        let config_json = serde_json::to_string(config).map_err(|e| e.to_string())?;
        let preamble = format!(
            "# wedge {} {command}\n# config {config_json}\n",
            wedge_core::VERSION
        );
        Ok(Self {
            writer: csv::Writer::from_writer(Vec::new()),
            preamble,
        })
    }

    fn record<S: AsRef<[u8]>>(&mut self, fields: impl IntoIterator<Item = S>) -> Result<(), String> {
        self.writer.write_record(fields).map_err(|e| e.to_string())
    }

    fn finish(self) -> Result<String, String> {
        let body = self.writer.into_inner().map_err(|e| e.to_string())?;
        let body = String::from_utf8(body).map_err(|e| e.to_string())?;
        Ok(format!("{}{}", self.preamble, body))
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn core_err(e: CoreError) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SolveConfig {
    f0: String,
    r: f64,
    theta: f64,
    method: Method,
    n: u64,
    seed: u64,
    #[serde(flatten)]
    common: CommonEcho,
}

#[derive(Serialize)]
struct SolveResult {
    quadrature: Option<f64>,
    mc: Option<McEstimate>,
}

fn cmd_solve(ctx: &Context, args: SolveArgs) -> Result<(String, i32), String> {
    let f0 = Catalog::from_name(&args.f0).map_err(core_err)?;
    let x = PolarPoint::new(args.r, args.theta).map_err(core_err)?;
    let quadrature = match args.method {
        Method::Quadrature | Method::Both => {
            Some(solve_quadrature(&ctx.domain, &f0, x, &ctx.cfg).map_err(core_err)?)
        }
        Method::Mc => None,
    };
    let mc = match args.method {
        Method::Mc | Method::Both => {
            Some(solve_mc_parallel(&ctx.domain, &f0, x, args.n, args.seed).map_err(core_err)?)
        }
        Method::Quadrature => None,
    };
    let config = SolveConfig {
        f0: args.f0,
        r: args.r,
        theta: args.theta,
        method: args.method,
        n: args.n,
        seed: args.seed,
        common: ctx.echo(),
    };
    let result = SolveResult { quadrature, mc };
    let text = match ctx.global.format {
        Format::Json => render_json(&Envelope {
            version: wedge_core::VERSION,
            command: "solve",
            config,
            result,
        })?,
        Format::Csv => {
            let mut doc = CsvDoc::new("solve", &config)?;
            doc.record(["quadrature", "mc_value", "mc_std_error", "mc_n"])?;
            doc.record([
                opt_num(result.quadrature),
                opt_num(result.mc.map(|m| m.value)),
                opt_num(result.mc.map(|m| m.std_error)),
                result
                    .mc
                    .map(|m| m.n_samples.to_string())
                    .unwrap_or_default(),
            ])?;
            doc.finish()?
        }
    };
    Ok((text, EXIT_OK))
}

// ---------------------------------------------------------------------------
// exit-dist
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ExitDistConfig {
    r: f64,
    theta: f64,
    n: u64,
    seed: u64,
    eps: f64,
    max_steps: u64,
    #[serde(flatten)]
    common: CommonEcho,
}

#[derive(Serialize)]
struct ExitRow {
    u: f64,
    x1: f64,
    x2: f64,
    arm: &'static str,
}

#[derive(Serialize)]
struct ExitDistResult {
    samples: Vec<ExitRow>,
    censored: u64,
    requested: u64,
    median_steps: Option<f64>,
}

fn arm_name(arm: wedge_core::kernels::Arm) -> &'static str {
    match arm {
        wedge_core::kernels::Arm::XArm => "x_arm",
        wedge_core::kernels::Arm::YArm => "y_arm",
        wedge_core::kernels::Arm::Corner => "corner",
    }
}

fn run_walks(ctx: &Context, args: &ExitDistArgs) -> Result<(PolarPoint, wedge_core::wos::WosRun), String> {
    let x = PolarPoint::new(args.r, args.theta).map_err(core_err)?;
    let wos_cfg = WosConfig::new(args.eps, args.max_steps).map_err(core_err)?;
    let run = sample_many(&ctx.domain, x.to_cartesian(), args.n, args.seed, &wos_cfg)
        .map_err(core_err)?;
    Ok((x, run))
}

fn cmd_exit_dist(ctx: &Context, args: ExitDistArgs) -> Result<(String, i32), String> {
    let (_, run) = run_walks(ctx, &args)?;
    let config = ExitDistConfig {
        r: args.r,
        theta: args.theta,
        n: args.n,
        seed: args.seed,
        eps: args.eps,
        max_steps: args.max_steps,
        common: ctx.echo(),
    };
    let median_steps = run.median_steps();
    let samples: Vec<ExitRow> = run
        .samples
        .iter()
        .map(|s| ExitRow {
            u: s.u,
            x1: s.point.x1,
            x2: s.point.x2,
            arm: arm_name(s.arm),
        })
        .collect();
    let result = ExitDistResult {
        samples,
        censored: run.censored,
        requested: run.requested,
        median_steps,
    };
    let text = match ctx.global.format {
        Format::Json => render_json(&Envelope {
            version: wedge_core::VERSION,
            command: "exit-dist",
            config,
            result,
        })?,
        Format::Csv => {
            let mut doc = CsvDoc::new("exit-dist", &config)?;
            doc.record(["u", "x1", "x2", "arm"])?;
            for s in &result.samples {
                doc.record([num(s.u), num(s.x1), num(s.x2), s.arm.to_string()])?;
            }
            doc.finish()?
        }
    };
    Ok((text, EXIT_OK))
}

// ---------------------------------------------------------------------------
// wos-validate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct WosValidateConfig {
    r: f64,
    theta: f64,
    n: u64,
    seed: u64,
    eps: f64,
    max_steps: u64,
    convention: Convention,
    #[serde(flatten)]
    common: CommonEcho,
}

#[derive(Serialize)]
struct WosValidateResult {
    ks: KsResult,
    censored: u64,
    requested: u64,
}

fn cmd_wos_validate(ctx: &Context, args: WosValidateArgs) -> Result<(String, i32), String> {
    let (x, run) = run_walks(ctx, &args.walk)?;
    let ks = match args.convention {
        Convention::Conformal => ks_validate(&run.samples, &ctx.domain, x).map_err(core_err)?,
        Convention::ArcLength => {
            if run.samples.len() < 1000 {
                return Err(format!(
                    "insufficient samples: got {}, need at least 1000",
                    run.samples.len()
                ));
            }
            // The closed-form law lives in the conformal coordinate; reading
            // the exits in arc length is the deliberate mismatch under test.
            exit_cdf_u(&ctx.domain, x, 0.0).map_err(core_err)?;
            let mut us: Vec<f64> = run
                .samples
                .iter()
                .map(|s| boundary_pushforward(&ctx.domain, s.point, BoundaryConvention::ArcLength))
                .collect::<Result<_, _>>()
                .map_err(core_err)?;
            ks_test(&mut us, |u| {
                exit_cdf_u(&ctx.domain, x, u).expect("starting point validated above")
            })
            .map_err(core_err)?
        }
    };
    let code = if ks.pass { EXIT_OK } else { EXIT_VALIDATION };
    let config = WosValidateConfig {
        r: args.walk.r,
        theta: args.walk.theta,
        n: args.walk.n,
        seed: args.walk.seed,
        eps: args.walk.eps,
        max_steps: args.walk.max_steps,
        convention: args.convention,
        common: ctx.echo(),
    };
    let result = WosValidateResult {
        ks,
        censored: run.censored,
        requested: run.requested,
    };
    let text = match ctx.global.format {
        Format::Json => render_json(&Envelope {
            version: wedge_core::VERSION,
            command: "wos-validate",
            config,
            result,
        })?,
        Format::Csv => {
            let mut doc = CsvDoc::new("wos-validate", &config)?;
            doc.record([
                "n",
                "statistic",
                "critical_value",
                "pass",
                "censored",
                "requested",
            ])?;
            doc.record([
                result.ks.n.to_string(),
                num(result.ks.statistic),
                num(result.ks.critical_value),
                result.ks.pass.to_string(),
                result.censored.to_string(),
                result.requested.to_string(),
            ])?;
            doc.finish()?
        }
    };
    Ok((text, code))
}

// ---------------------------------------------------------------------------
// regularity
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RegularityConfig {
    f0: String,
    sigma_grid: Vec<f64>,
    rho_min_grid: Vec<f64>,
    delta: f64,
    #[serde(flatten)]
    common: CommonEcho,
}

fn render_regularity_csv(
    command: &str,
    config: &impl Serialize,
    report: &RegularityReport,
) -> Result<String, String> {
    let mut doc = CsvDoc::new(command, config)?;
    doc.record([
        "sigma",
        "rho_min",
        "i_value",
        "fitted_exponent",
        "extrapolated_limit",
        "verdict",
        "sigma_crit_estimate",
        "failed_cells",
    ])?;
    for (s, &sigma) in report.sigma_grid.iter().enumerate() {
        for (k, &rho_min) in report.rho_min_grid.iter().enumerate() {
            doc.record([
                num(sigma),
                num(rho_min),
                num(report.i_values[s][k]),
                opt_num(report.fitted_exponent[s]),
                opt_num(report.extrapolated_limit[s]),
                report.verdicts[s].to_string(),
                opt_num(report.sigma_crit_estimate),
                report.failed_cells.to_string(),
            ])?;
        }
    }
    doc.finish()
}

fn cmd_regularity(ctx: &Context, args: RegularityArgs) -> Result<(String, i32), String> {
    let f0 = Catalog::from_name(&args.f0).map_err(core_err)?;
    let sigma_grid = args.sigma.unwrap_or_else(default_sigma_grid);
    let rho_min_grid = args.rho_min.unwrap_or_else(default_rho_min_grid);
    let partition = RegionPartition::new(args.delta).map_err(core_err)?;
    let report = scan_sigma(
        &ctx.domain,
        &f0,
        &sigma_grid,
        &rho_min_grid,
        &partition,
        &ctx.cfg,
    )
    .map_err(core_err)?;
    let config = RegularityConfig {
        f0: args.f0,
        sigma_grid,
        rho_min_grid,
        delta: args.delta,
        common: ctx.echo(),
    };
    let text = match ctx.global.format {
        Format::Json => render_json(&Envelope {
            version: wedge_core::VERSION,
            command: "regularity",
            config,
            result: &report,
        })?,
        Format::Csv => render_regularity_csv("regularity", &config, &report)?,
    };
    Ok((text, EXIT_OK))
}

// ---------------------------------------------------------------------------
// limits
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct LimitsConfig {
    f0: String,
    theta: f64,
    rho_grid: Vec<f64>,
    #[serde(flatten)]
    common: CommonEcho,
}

fn cmd_limits(ctx: &Context, args: LimitsArgs) -> Result<(String, i32), String> {
    let f0 = Catalog::from_name(&args.f0).map_err(core_err)?;
    let rho_grid = args.rho.unwrap_or_else(default_limit_rho_grid);
    let check: LimitCheck =
        limit_check(&ctx.domain, &f0, args.theta, &rho_grid, &ctx.cfg).map_err(core_err)?;
    let config = LimitsConfig {
        f0: args.f0,
        theta: args.theta,
        rho_grid,
        common: ctx.echo(),
    };
    let text = match ctx.global.format {
        Format::Json => render_json(&Envelope {
            version: wedge_core::VERSION,
            command: "limits",
            config,
            result: &check,
        })?,
        Format::Csv => {
            let mut doc = CsvDoc::new("limits", &config)?;
            doc.record([
                "rho",
                "i_value",
                "j_value",
                "i_limit",
                "j_limit",
                "predicted_j_limit",
                "gap",
                "pv_value",
                "pv_stabilized",
                "converged",
            ])?;
            for (k, &rho) in check.rho_grid.iter().enumerate() {
                doc.record([
                    num(rho),
                    num(check.i_values[k]),
                    num(check.j_values[k]),
                    num(check.i_limit),
                    num(check.j_limit),
                    num(check.predicted_j_limit),
                    num(check.gap),
                    num(check.pv.value),
                    check.pv.stabilized.to_string(),
                    check.converged.to_string(),
                ])?;
            }
            doc.finish()?
        }
    };
    Ok((text, EXIT_OK))
}

// ---------------------------------------------------------------------------
// pv
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PvConfig {
    f0: String,
    eps_grid: Vec<f64>,
    #[serde(flatten)]
    common: CommonEcho,
}

fn cmd_pv(ctx: &Context, args: PvArgs) -> Result<(String, i32), String> {
    let f0 = Catalog::from_name(&args.f0).map_err(core_err)?;
    let eps_grid = args.eps.unwrap_or_else(default_pv_eps_grid);
    let pv: PvResult = pv_integral(&f0, &eps_grid, &ctx.cfg).map_err(core_err)?;
    let config = PvConfig {
        f0: args.f0,
        eps_grid,
        common: ctx.echo(),
    };
    let text = match ctx.global.format {
        Format::Json => render_json(&Envelope {
            version: wedge_core::VERSION,
            command: "pv",
            config,
            result: &pv,
        })?,
        Format::Csv => {
            let mut doc = CsvDoc::new("pv", &config)?;
            doc.record(["eps", "truncated_value", "value", "stabilized"])?;
            for t in &pv.truncated {
                doc.record([
                    num(t.eps),
                    num(t.value),
                    num(pv.value),
                    pv.stabilized.to_string(),
                ])?;
            }
            doc.finish()?
        }
    };
    Ok((text, EXIT_OK))
}

// ---------------------------------------------------------------------------
// poisson-reduce
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PoissonReduceConfig {
    center: (f64, f64),
    radius: f64,
    mass: f64,
    arm_length: f64,
    nodes_per_arm: usize,
    u_max: f64,
    u_count: usize,
    scan: bool,
    sigma_grid: Option<Vec<f64>>,
    rho_min_grid: Option<Vec<f64>>,
    delta: f64,
    #[serde(flatten)]
    common: CommonEcho,
}

#[derive(Serialize)]
struct TraceRow {
    u: f64,
    value: f64,
    deriv1: f64,
    deriv2: f64,
}

#[derive(Serialize)]
struct PoissonReduceResult {
    trace: Vec<TraceRow>,
    scan: Option<RegularityReport>,
}

fn cmd_poisson_reduce(ctx: &Context, args: PoissonReduceArgs) -> Result<(String, i32), String> {
    if args.u_count < 2 {
        return Err("u-count must be at least 2".into());
    }
    if !(args.u_max > 0.0) || !args.u_max.is_finite() {
        return Err(format!("u-max must be positive, got {}", args.u_max));
    }
    let g = RadialBumpSource::new(
        wedge_core::geometry::CartesianPoint::new(args.center.0, args.center.1),
        args.radius,
        args.mass,
    )
    .map_err(core_err)?;
    let reduce_cfg = ReduceConfig {
        arm_length: args.arm_length,
        nodes_per_arm: args.nodes_per_arm,
    };
    let f0 = poisson_reduce(&ctx.domain, &g, &reduce_cfg, &ctx.cfg).map_err(core_err)?;
    let trace: Vec<TraceRow> = (0..args.u_count)
        .map(|k| {
            let u = -args.u_max
                + 2.0 * args.u_max * k as f64 / (args.u_count - 1) as f64;
            TraceRow {
                u,
                value: f0.eval(u),
                deriv1: f0.deriv1(u),
                deriv2: f0.deriv2(u),
            }
        })
        .collect();
    let (sigma_grid, rho_min_grid) = if args.scan {
        (
            Some(args.sigma.clone().unwrap_or_else(default_sigma_grid)),
            Some(args.rho_min.clone().unwrap_or_else(default_rho_min_grid)),
        )
    } else {
        (None, None)
    };
    let scan = if args.scan {
        let partition = RegionPartition::new(args.delta).map_err(core_err)?;
        Some(
            scan_sigma(
                &ctx.domain,
                &f0,
                sigma_grid.as_ref().expect("set when scanning"),
                rho_min_grid.as_ref().expect("set when scanning"),
                &partition,
                &ctx.cfg,
            )
            .map_err(core_err)?,
        )
    } else {
        None
    };
    let config = PoissonReduceConfig {
        center: args.center,
        radius: args.radius,
        mass: args.mass,
        arm_length: args.arm_length,
        nodes_per_arm: args.nodes_per_arm,
        u_max: args.u_max,
        u_count: args.u_count,
        scan: args.scan,
        sigma_grid,
        rho_min_grid,
        delta: args.delta,
        common: ctx.echo(),
    };
    let result = PoissonReduceResult { trace, scan };
    let text = match ctx.global.format {
        Format::Json => render_json(&Envelope {
            version: wedge_core::VERSION,
            command: "poisson-reduce",
            config,
            result: &result,
        })?,
        Format::Csv => {
            // The trace is the primary table; scan results are JSON-only.
            let mut doc = CsvDoc::new("poisson-reduce", &config)?;
            doc.record(["u", "value", "deriv1", "deriv2"])?;
            for row in &result.trace {
                doc.record([num(row.u), num(row.value), num(row.deriv1), num(row.deriv2)])?;
            }
            doc.finish()?
        }
    };
    Ok((text, EXIT_OK))
}
