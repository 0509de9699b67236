//! `dfrt` command-line front end.
//!
//! [`dispatch`] parses an argument list, runs one subcommand and returns the
//! process exit status: 0 on success, 1 for invalid input or usage, 2 for
//! numerical failures (blow-up, infeasible constraints). Failures print one
//! line `error kind=<kind> message=<json string>` on standard error.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use clap::{ArgGroup, Args, Parser, Subcommand};
use dfrt_core::basis::{BeamBasis, ModeSet};
use dfrt_core::cohomology::{Coboundary, CoboundaryConfig, Cochain, RadialKernel};
use dfrt_core::dynamics::{coupling_grid, energy_budget, integrate, SimulationConfig};
use dfrt_core::entropy::{
    decay_class_report, lambda_bessel, lambda_ell_squared, maxent_solve, modal_spectrum, spectral_entropy, DecayStatus,
    DEFAULT_R2_MIN,
};
use dfrt_core::io;
use dfrt_core::special_fn::{
    spherical_bessel_j, spherical_bessel_zeros, spherical_harmonic, surface_gradient_y, SphericalPoint,
};
use dfrt_core::transform::{
    forward_transform, gram_report, inverse_transform, max_relative_divergence, parseval_report, QuadratureGrid,
    SampledField,
};
use dfrt_core::wigner::exact::{clebsch_gordan_exact, wigner_3j_exact, wigner_6j_exact};
use dfrt_core::wigner::{clebsch_gordan, wigner_3j, wigner_6j, SixJArgs, ThreeJArgs, MAX_J};
use serde::Serialize;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{load_config, parse_config, SimConfigFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dfrt_core::Error),
    #[error("invalid `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Config { .. } => "config",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    /// The single machine-readable stderr line.
    pub fn line(&self) -> String {
        let msg = serde_json::to_string(&self.to_string()).unwrap_or_else(|_| "\"\"".into());
        format!("error kind={} message={msg}", self.kind())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "dfrt",
    version,
    about = "Divergence-free beam transforms, spectral coupling and modal dynamics on the ball"
)]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spherical Bessel functions, their zeros, spherical harmonics.
    Special(SpecialArgs),
    /// 3j, 6j and Clebsch-Gordan symbols, decimal and exact.
    Wigner(WignerArgs),
    /// Table of Bessel zeros, viscous eigenvalues and normalizations.
    BasisTable(BasisTableArgs),
    /// Forward transform of a gridded field.
    Transform(TransformArgs),
    /// Evaluate a coefficient expansion at points.
    Reconstruct(ReconstructArgs),
    /// Gram, Parseval and divergence report for a gridded field.
    Verify(VerifyArgs),
    /// Apply the spectral coboundary and measure its nilpotency residual.
    Coboundary(CoboundaryArgs),
    /// Compute the coupling tensor of the modal system.
    Coupling(CouplingArgs),
    /// Integrate the modal system.
    Simulate(SimulateArgs),
    /// Per-ell energy spectrum of a coefficient file.
    Spectrum(SpectrumArgs),
    /// Maximum-entropy spectral profile under a dissipation constraint.
    Maxent(MaxentArgs),
    /// Exponential-decay fits along a trajectory.
    DecayReport(DecayReportArgs),
}

#[derive(Debug, Args, Serialize)]
struct SpecialArgs {
    #[command(subcommand)]
    which: SpecialCmd,
}

#[derive(Debug, Subcommand, Serialize)]
enum SpecialCmd {
    /// j_ell(x)
    Bessel { ell: usize, x: f64 },
    /// First COUNT positive zeros of j_ell
    Zeros { ell: usize, count: usize },
    /// Y_ell^m(theta, phi) and its surface gradient
    Harmonic {
        ell: usize,
        #[arg(allow_negative_numbers = true)]
        m: i64,
        theta: f64,
        phi: f64,
    },
}

#[derive(Debug, Args, Serialize)]
#[command(group(ArgGroup::new("symbol").required(true).args(["three_j", "six_j", "cg"])))]
struct WignerArgs {
    /// j1 j2 j3 m1 m2 m3
    #[arg(long = "3j", num_args = 6, allow_negative_numbers = true, value_names = ["J1", "J2", "J3", "M1", "M2", "M3"])]
    three_j: Option<Vec<i64>>,
    /// j1 j2 j3 j4 j5 j6
    #[arg(long = "6j", num_args = 6, value_names = ["J1", "J2", "J3", "J4", "J5", "J6"])]
    six_j: Option<Vec<u32>>,
    /// j1 m1 j2 m2 J M
    #[arg(long = "cg", num_args = 6, allow_negative_numbers = true, value_names = ["J1", "M1", "J2", "M2", "J", "M"])]
    cg: Option<Vec<i64>>,
}

#[derive(Debug, Args, Serialize)]
struct BasisTableArgs {
    #[arg(long)]
    lmax: u32,
    #[arg(long)]
    nmax: u32,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_triple<T: std::str::FromStr>(s: &str) -> Result<[T; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated values, got `{s}`"));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.trim().parse::<T>().map_err(|_| format!("cannot parse `{p}`"))?);
    }
    out.try_into().map_err(|_| "expected three values".to_string())
}

fn parse_grid(s: &str) -> Result<[usize; 3], String> {
    parse_triple(s)
}

fn parse_spins(s: &str) -> Result<[u32; 3], String> {
    parse_triple(s)
}

#[derive(Debug, Args, Serialize)]
struct TransformArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    lmax: u32,
    #[arg(long)]
    nmax: u32,
    /// Expected grid counts nr,nt,np; must match the field's sidecar.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<[usize; 3]>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ReconstructArgs {
    #[arg(long)]
    coeffs: PathBuf,
    /// CSV with header x,y,z
    #[arg(long)]
    points: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    field: PathBuf,
    #[arg(long)]
    lmax: u32,
    #[arg(long)]
    nmax: u32,
    /// Also write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CoboundaryArgs {
    #[arg(long)]
    coeffs: PathBuf,
    #[arg(long, value_parser = parse_spins, default_value = "1,1,1")]
    spins: [u32; 3],
    #[arg(long, default_value = "overlap")]
    kernel: String,
    #[arg(long, default_value_t = 0)]
    degree: u32,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CouplingArgs {
    #[arg(long)]
    lmax: u32,
    #[arg(long)]
    nmax: u32,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Grid counts nr,nt,np; defaults to 1.5x the reference grid.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<[usize; 3]>,
    /// `.csv` for text, anything else for binary.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    gamma: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct SpectrumArgs {
    #[arg(long)]
    coeffs: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct MaxentArgs {
    /// `ell2` for lambda = ell^2, `bessel` for (alpha_ell1 / R)^2
    #[arg(long, default_value = "ell2")]
    lambda: String,
    #[arg(long = "C", allow_negative_numbers = true)]
    c: f64,
    #[arg(long)]
    lmax: u32,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DecayReportArgs {
    #[arg(long)]
    traj: PathBuf,
    #[arg(long = "mu-min", allow_negative_numbers = true)]
    mu_min: f64,
    #[arg(long = "r2-min", default_value_t = DEFAULT_R2_MIN)]
    r2_min: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long)]
    out: PathBuf,
}

/// Record written beside every output file as `<output>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<PathBuf>,
    pub tool_version: String,
    pub cache_hashes: Vec<FileHash>,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

/// `<path>.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[derive(Default)]
struct Outcome {
    stdout: Option<String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    cache: Vec<FileHash>,
    /// Reported after outputs and the manifest are written.
    deferred: Option<CliError>,
}

/// Run one command line (program name first). Returns the exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
                    eprintln!("{}", CliError::Usage(first).line());
                    eprint!("{}", e.render());
                    1
                }
            };
        }
    };
    let run = || execute(cli.command);
    let result = match cli.threads {
        Some(0) => Err(CliError::Config { key: "threads".into(), message: "must be at least 1".into() }),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(CliError::Usage(e.to_string())),
        },
        None => run(),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> CliResult<()> {
    let start = Instant::now();
    let (name, params, outcome) = match command {
        Command::Special(a) => ("special", json!(a), special(&a)),
        Command::Wigner(a) => ("wigner", json!(a), wigner(&a)),
        Command::BasisTable(a) => ("basis-table", json!(a), basis_table(&a)),
        Command::Transform(a) => ("transform", json!(a), transform(&a)),
        Command::Reconstruct(a) => ("reconstruct", json!(a), reconstruct(&a)),
        Command::Verify(a) => ("verify", json!(a), verify(&a)),
        Command::Coboundary(a) => ("coboundary", json!(a), coboundary(&a)),
        Command::Coupling(a) => ("coupling", json!(a), coupling(&a)),
        Command::Simulate(a) => ("simulate", json!(a), simulate(&a)),
        Command::Spectrum(a) => ("spectrum", json!(a), spectrum(&a)),
        Command::Maxent(a) => ("maxent", json!(a), maxent(&a)),
        Command::DecayReport(a) => ("decay-report", json!(a), decay_report(&a)),
    };
    let outcome = outcome?;
    if let Some(s) = &outcome.stdout {
        println!("{s}");
    }
    if let Some(primary) = outcome.outputs.first() {
        let inputs = outcome
            .inputs
            .iter()
            .map(|p| Ok(FileHash { path: p.clone(), sha256: io::sha256_file(p)? }))
            .collect::<CliResult<Vec<_>>>()?;
        let manifest = RunManifest {
            subcommand: name.to_string(),
            parameters: params,
            inputs,
            outputs: outcome.outputs.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            cache_hashes: outcome.cache,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        };
        std::fs::write(manifest_path(primary), serde_json::to_string_pretty(&manifest)?)?;
    }
    match outcome.deferred {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_default()
}

fn special(a: &SpecialArgs) -> CliResult<Outcome> {
    let text = match &a.which {
        SpecialCmd::Bessel { ell, x } => {
            if !(*x >= 0.0) {
                return Err(CliError::Config { key: "x".into(), message: "must be nonnegative".into() });
            }
            format!("{}", spherical_bessel_j(*ell, *x)?)
        }
        SpecialCmd::Zeros { ell, count } => {
            if *count == 0 {
                return Err(CliError::Config { key: "count".into(), message: "must be at least 1".into() });
            }
            spherical_bessel_zeros(*ell, *count)?.iter().map(|z| z.to_string()).collect::<Vec<_>>().join("\n")
        }
        SpecialCmd::Harmonic { ell, m, theta, phi } => {
            let y = spherical_harmonic(*ell, *m, *theta, *phi)?;
            let g = surface_gradient_y(*ell, *m, *theta, *phi)?;
            pretty(&json!({
                "y": [y.re, y.im],
                "grad_theta": [g.comp_theta.re, g.comp_theta.im],
                "grad_phi": [g.comp_phi.re, g.comp_phi.im],
            }))
        }
    };
    Ok(Outcome { stdout: Some(text), ..Default::default() })
}

fn to_u32(v: i64, name: &str) -> CliResult<u32> {
    u32::try_from(v)
        .map_err(|_| CliError::Config { key: name.into(), message: format!("must be a nonnegative integer, got {v}") })
}

fn to_i32(v: i64, name: &str) -> CliResult<i32> {
    i32::try_from(v).map_err(|_| CliError::Config { key: name.into(), message: format!("out of range: {v}") })
}

fn wigner(a: &WignerArgs) -> CliResult<Outcome> {
    let (value, exact) = if let Some(v) = &a.three_j {
        let (j1, j2, j3) = (to_u32(v[0], "j1")?, to_u32(v[1], "j2")?, to_u32(v[2], "j3")?);
        let (m1, m2, m3) = (to_i32(v[3], "m1")?, to_i32(v[4], "m2")?, to_i32(v[5], "m3")?);
        let value = wigner_3j(ThreeJArgs::new(j1, j2, j3, m1, m2, m3)?)?;
        (value, wigner_3j_exact(j1, j2, j3, m1, m2, m3))
    } else if let Some(v) = &a.six_j {
        if let Some(&j) = v.iter().find(|&&j| j > MAX_J) {
            return Err(dfrt_core::Error::UnsupportedOrder { ell: j as usize, max: MAX_J as usize }.into());
        }
        let j: [u32; 6] = [v[0], v[1], v[2], v[3], v[4], v[5]];
        (wigner_6j(SixJArgs(j)), wigner_6j_exact(j))
    } else if let Some(v) = &a.cg {
        let (j1, m1, j2) = (to_u32(v[0], "j1")?, to_i32(v[1], "m1")?, to_u32(v[2], "j2")?);
        let (j3, m3) = (to_u32(v[4], "J")?, to_i32(v[5], "M")?);
        let m2 = to_i32(v[3], "m2")?;
        (clebsch_gordan(j1, m1, j2, m2, j3, m3)?, clebsch_gordan_exact(j1, m1, j2, m2, j3, m3))
    } else {
        return Err(CliError::Usage("one of --3j, --6j, --cg is required".into()));
    };
    Ok(Outcome { stdout: Some(format!("{value}\nexact: {exact}")), ..Default::default() })
}

fn basis_table(a: &BasisTableArgs) -> CliResult<Outcome> {
    let basis = BeamBasis::with_truncation(a.lmax, a.nmax, a.radius)?;
    let mut text = String::from("ell,n,alpha,lambda,norm\n");
    for ell in 1..=a.lmax {
        for n in 1..=a.nmax {
            let alpha = basis.alpha(ell, n);
            let lambda = (alpha / a.radius).powi(2);
            text.push_str(&format!("{ell},{n},{alpha},{lambda},{}\n", basis.norm(ell, n)));
        }
    }
    std::fs::write(&a.out, text)?;
    Ok(Outcome { outputs: vec![a.out.clone()], ..Default::default() })
}

fn warn_resolution(grid: &QuadratureGrid, l_max: u32, n_max: u32) {
    let (a, b, c) = QuadratureGrid::reference_counts(l_max, n_max);
    let (na, nb, nc) = grid.counts();
    if na < a || nb < b || nc < c {
        eprintln!("warning: grid ({na}, {nb}, {nc}) is coarser than the reference grid ({a}, {b}, {c})");
    }
}

fn transform(a: &TransformArgs) -> CliResult<Outcome> {
    let (grid, values) = io::read_field_csv(&a.field)?;
    if let Some(g) = a.grid {
        let (n_r, n_t, n_p) = grid.counts();
        if g != [n_r, n_t, n_p] {
            return Err(CliError::Config {
                key: "grid".into(),
                message: format!("{g:?} does not match the field sidecar ({n_r}, {n_t}, {n_p})"),
            });
        }
    }
    warn_resolution(&grid, a.lmax, a.nmax);
    let basis = BeamBasis::with_truncation(a.lmax, a.nmax, grid.radius())?;
    let field = SampledField::gridded(grid.clone(), values)?;
    let coeffs = forward_transform(&field, &basis, &grid)?;
    io::write_coeffs_csv(&a.out, &coeffs)?;
    Ok(Outcome {
        inputs: vec![a.field.clone(), io::sidecar_path(&a.field)],
        outputs: vec![a.out.clone()],
        ..Default::default()
    })
}

fn reconstruct(a: &ReconstructArgs) -> CliResult<Outcome> {
    let coeffs = io::read_coeffs_csv(&a.coeffs, a.radius)?;
    let basis = BeamBasis::new(coeffs.mode_set().clone())?;
    let points = io::read_points_csv(&a.points)?;
    let sp: Vec<_> = points.iter().map(|&p| SphericalPoint::from_cartesian(p)).collect();
    let values = inverse_transform(&coeffs, &basis, &sp)?;
    io::write_points_field_csv(&a.out, &points, &values)?;
    Ok(Outcome { inputs: vec![a.coeffs.clone(), a.points.clone()], outputs: vec![a.out.clone()], ..Default::default() })
}

/// At most this many grid nodes are used for the divergence check.
const VERIFY_DIV_POINTS: usize = 400;

fn verify(a: &VerifyArgs) -> CliResult<Outcome> {
    let (grid, values) = io::read_field_csv(&a.field)?;
    warn_resolution(&grid, a.lmax, a.nmax);
    let basis = BeamBasis::with_truncation(a.lmax, a.nmax, grid.radius())?;
    let field = SampledField::gridded(grid.clone(), values)?;
    let coeffs = forward_transform(&field, &basis, &grid)?;
    let parseval = parseval_report(&field, &coeffs, &basis, &grid)?;
    let gram = gram_report(&basis, &grid)?;
    let stride = grid.len().div_ceil(VERIFY_DIV_POINTS).max(1);
    let pts: Vec<[f64; 3]> = grid.nodes().iter().step_by(stride).map(|n| n.x).collect();
    let div_max = max_relative_divergence(&coeffs, &basis, &pts)?;
    let (n_r, n_t, n_p) = grid.counts();
    let report = json!({
        "gram_max_offdiag": gram.max_offdiag,
        "gram_max_diag_error": gram.max_diag_error,
        "parseval_gap": parseval.relative_gap,
        "norm_sq_physical": parseval.norm_sq_physical,
        "norm_sq_spectral": parseval.norm_sq_spectral,
        "div_max": div_max,
        "l_max": a.lmax,
        "n_max": a.nmax,
        "grid": [n_r, n_t, n_p],
    });
    let text = pretty(&report);
    let mut outputs = Vec::new();
    if let Some(out) = &a.out {
        std::fs::write(out, &text)?;
        outputs.push(out.clone());
    }
    Ok(Outcome {
        stdout: Some(text),
        inputs: vec![a.field.clone(), io::sidecar_path(&a.field)],
        outputs,
        ..Default::default()
    })
}

fn coboundary(a: &CoboundaryArgs) -> CliResult<Outcome> {
    let kernel: RadialKernel = a
        .kernel
        .parse()
        .map_err(|e: dfrt_core::Error| CliError::Config { key: "kernel".into(), message: e.to_string() })?;
    let config = CoboundaryConfig::new(a.spins, kernel)
        .map_err(|e| CliError::Config { key: "spins".into(), message: e.to_string() })?;
    let coeffs = io::read_coeffs_csv(&a.coeffs, a.radius)?;
    let basis = BeamBasis::new(coeffs.mode_set().clone())?;
    let op = Coboundary::new(&basis, config)?;
    let cochain = Cochain::new(coeffs, a.degree);
    let d = op.apply(&cochain)?;
    io::write_coeffs_csv(&a.out, &d.coeffs)?;
    let report = op.nilpotency_residual(&cochain)?;
    let text = pretty(&json!({
        "degree_in": cochain.degree,
        "degree_out": d.degree,
        "couplings": op.coupling_count(),
        "nilpotency": report,
    }));
    let mut outputs = vec![a.out.clone()];
    if let Some(r) = &a.report {
        std::fs::write(r, &text)?;
        outputs.push(r.clone());
    }
    Ok(Outcome { stdout: Some(text), inputs: vec![a.coeffs.clone()], outputs, ..Default::default() })
}

fn coupling(a: &CouplingArgs) -> CliResult<Outcome> {
    let basis = BeamBasis::with_truncation(a.lmax, a.nmax, a.radius)?;
    let grid = match a.grid {
        Some([x, y, z]) => QuadratureGrid::new(x, y, z, a.radius)?,
        None => coupling_grid(a.lmax, a.nmax, a.radius)?,
    };
    let cache_dir = io::cache_dir_from_env();
    let (tensor, outcome) = io::cached_coupling_tensor(&basis, &grid, cache_dir.as_deref())?;
    if let Some(w) = &tensor.warning {
        eprintln!("warning: {w}");
    }
    let hash = io::write_gamma(&a.out, &tensor)?;
    let mut cache = Vec::new();
    if let (Some(path), Some(h)) = (outcome.path, outcome.hash) {
        cache.push(FileHash { path, sha256: h });
    }
    let text = pretty(&json!({
        "entries": tensor.len(),
        "pruned": tensor.pruned,
        "fill_fraction": tensor.fill_fraction(),
        "grid": [grid.counts().0, grid.counts().1, grid.counts().2],
        "hash": hash,
        "cache_hit": outcome.hit,
    }));
    Ok(Outcome {
        stdout: Some(text),
        outputs: vec![a.out.clone(), io::sidecar_path(&a.out)],
        cache,
        ..Default::default()
    })
}

fn simulate(a: &SimulateArgs) -> CliResult<Outcome> {
    let cfg = load_config(&a.config)?;
    let (tensor, side) = io::read_gamma(&a.gamma)?;
    let ms = ModeSet::new(side.lmax, side.nmax, side.radius)?;
    let basis = BeamBasis::new(ms.clone())?;
    let initial = cfg.initial_coeffs(&ms)?;
    let sim = SimulationConfig {
        nu: cfg.nu,
        dt: cfg.dt,
        t_end: cfg.t_end,
        integrator: cfg.integrator,
        real_field: cfg.real_field,
        initial,
    };
    let traj = integrate(&sim, &tensor, &basis)?;
    io::write_trajectory_csv(&a.out, &traj)?;
    let budget = energy_budget(&traj, cfg.nu, &basis).ok();
    let text = pretty(&json!({
        "samples": traj.len(),
        "energy_initial": traj.energy.first(),
        "energy_final": traj.energy.last(),
        "max_drift": budget.as_ref().map(|b| b.max_drift),
        "max_balance_residual": budget.as_ref().map(|b| b.max_balance_residual),
        "max_projection_drift": traj.projection_drift.iter().cloned().fold(0.0, f64::max),
        "blow_up": traj.blow_up,
    }));
    let deferred = traj.blow_up.map(|time| CliError::Core(dfrt_core::Error::NonFinite { time }));
    Ok(Outcome {
        stdout: Some(text),
        inputs: vec![a.config.clone(), a.gamma.clone(), io::sidecar_path(&a.gamma)],
        outputs: vec![a.out.clone()],
        cache: vec![FileHash { path: a.gamma.clone(), sha256: side.hash }],
        deferred,
    })
}

fn spectrum(a: &SpectrumArgs) -> CliResult<Outcome> {
    let coeffs = io::read_coeffs_csv(&a.coeffs, a.radius)?;
    let spec = modal_spectrum(&coeffs);
    io::write_spectrum_csv(&a.out, &spec)?;
    let entropy = if spec.zero_energy { None } else { Some(spectral_entropy(&spec)?) };
    let text = pretty(&json!({ "total_E": spec.total_e, "zero_energy": spec.zero_energy, "entropy": entropy }));
    Ok(Outcome {
        stdout: Some(text),
        inputs: vec![a.coeffs.clone()],
        outputs: vec![a.out.clone()],
        ..Default::default()
    })
}

fn maxent(a: &MaxentArgs) -> CliResult<Outcome> {
    if a.lmax == 0 {
        return Err(CliError::Config { key: "lmax".into(), message: "must be at least 1".into() });
    }
    let lambda = match a.lambda.as_str() {
        "ell2" => lambda_ell_squared(a.lmax),
        "bessel" => lambda_bessel(&BeamBasis::with_truncation(a.lmax, 1, a.radius)?),
        other => {
            return Err(CliError::Config {
                key: "lambda".into(),
                message: format!("unknown `{other}` (expected ell2|bessel)"),
            })
        }
    };
    let sol = maxent_solve(&lambda, a.c)?;
    let text = pretty(&json!({
        "A": sol.a,
        "mu": sol.mu,
        "beta": sol.beta,
        "alpha_minus_1": sol.alpha_minus_1,
        "C": sol.c,
        "constraint_residuals": [sol.constraint_residuals.0, sol.constraint_residuals.1],
        "stationarity_max": sol.stationarity_residuals().iter().cloned().fold(0.0, f64::max),
        "ell": (1..=a.lmax).collect::<Vec<_>>(),
        "lambda": sol.lambda,
        "P": sol.p,
    }));
    let mut outputs = Vec::new();
    if let Some(out) = &a.out {
        std::fs::write(out, &text)?;
        outputs.push(out.clone());
    }
    Ok(Outcome { stdout: Some(text), outputs, ..Default::default() })
}

fn decay_report(a: &DecayReportArgs) -> CliResult<Outcome> {
    let traj = io::read_trajectory_csv(&a.traj, a.radius)?;
    let rows = decay_class_report(&traj, a.mu_min, a.r2_min)?;
    let mut text = String::from("t,status,mu,r_squared,satisfies\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &rows {
        let status = match r.status {
            DecayStatus::Fitted => "fitted",
            DecayStatus::InsufficientData => "insufficient_data",
            DecayStatus::ZeroEnergy => "zero_energy",
        };
        text.push_str(&format!("{},{status},{},{},{}\n", r.t, opt(r.mu), opt(r.r_squared), r.satisfies));
    }
    std::fs::write(&a.out, text)?;
    Ok(Outcome { inputs: vec![a.traj.clone()], outputs: vec![a.out.clone()], ..Default::default() })
}
