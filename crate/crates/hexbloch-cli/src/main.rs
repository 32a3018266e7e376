//! `hexbloch` — command-line driver for the spectral toolkit.
//!
//! Subcommands map one-to-one onto the library's analysis entry points:
//!
//! - `bands`   — band structure along a k-path (CSV),
//! - `dirac`   — Dirac point detection plus directional cone fit (JSON),
//! - `perturb` — small-coupling eigenvalue splitting table (CSV),
//! - `deform`  — Dirac point drift or gap under `εV + ηW` (JSON),
//! - `det2`    — renormalized-determinant zero scan in a μ window (JSON).
//!
//! Every subcommand reads one JSON run configuration (`--config FILE`) and
//! writes a single document to `--out PATH`, to the config's `out` field
//! when the flag is absent, or to stdout when neither is set. File writes
//! are atomic (temp file + rename), so a crashed or rejected run never
//! leaves a truncated document behind. Identical configs produce
//! byte-identical documents: randomness enters only through explicit seed
//! fields, and parallel sweeps preserve their input order.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure, 4 analysis
//! verdict false. CSV output is comma-separated with `.` decimal points, a
//! header row, and LF line endings; JSON output is UTF-8 with stable
//! (declaration-order) keys.

mod config;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hexbloch::det2::{Det2Error, SectorDeterminant};
use hexbloch::dirac::{default_cone_radii, uniform_directions, DiracError};
use hexbloch::perturb::PerturbError;
use hexbloch::potential::SYMMETRY_TOL_REL;
use hexbloch::spectral::{sample_path, SpectralError};
use hexbloch::{
    band_path, build_geometry, deform_even, deform_odd_gap, detect_dirac, dirac_report, fit_cone,
    named_path, verify_split, zero_scan, LatticeGeometry, PotentialSpectrum,
};

use config::{ParityChoice, RunConfig};

/// Named k-path used when the `bands` section gives neither `path` nor
/// `points`.
const DEFAULT_PATH: &str = "G-K-M-G";

#[derive(Parser)]
#[command(
    name = "hexbloch",
    version,
    about = "Band structures, Dirac points, and spectral verification for honeycomb potentials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Band structure along a k-path (CSV)
    Bands(RunArgs),
    /// Dirac point detection and directional cone fit (JSON)
    Dirac(RunArgs),
    /// Small-coupling eigenvalue splitting table (CSV)
    Perturb(RunArgs),
    /// Dirac point drift or gap under a deformation εV + ηW (JSON)
    Deform(RunArgs),
    /// Renormalized-determinant zero scan in a μ window (JSON)
    Det2(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Output file (stdout when neither this nor the config `out` is set)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// A failed run, tagged with its documented exit code.
enum Failure {
    /// Exit 2: the run configuration or an input file is invalid.
    Config(String),
    /// Exit 3: a numerical routine failed (non-Hermitian assembly,
    /// eigensolver non-convergence, residual checks, I/O on results).
    Numerical(String),
    /// Exit 4: the analysis ran to completion but its verdict is false.
    Verdict(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Verdict(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) | Failure::Verdict(m) => m,
        }
    }
}

fn from_spectral(e: SpectralError) -> Failure {
    match e {
        SpectralError::NotHoneycomb { .. }
        | SpectralError::TooManyBands { .. }
        | SpectralError::BadPathToken(_) => Failure::Config(e.to_string()),
        SpectralError::NotHermitian { .. }
        | SpectralError::EigenFailed { .. }
        | SpectralError::LargeResidual { .. } => Failure::Numerical(e.to_string()),
    }
}

/// Detection failures are verdicts about the spectrum (no protected double
/// eigenvalue, no cone), not solver breakdowns.
fn from_dirac(e: DiracError) -> Failure {
    match e {
        DiracError::Spectral(inner) => from_spectral(inner),
        other => Failure::Verdict(other.to_string()),
    }
}

fn from_perturb(e: PerturbError) -> Failure {
    match e {
        PerturbError::Dirac(inner) => from_dirac(inner),
        PerturbError::Spectral(inner) => from_spectral(inner),
        PerturbError::Potential(inner) => Failure::Config(inner.to_string()),
        other @ (PerturbError::WNotEven { .. } | PerturbError::WNotReal(_)) => {
            Failure::Config(other.to_string())
        }
        other @ (PerturbError::MisidentifiedDouble { .. }
        | PerturbError::DeformationFailure { .. }) => Failure::Verdict(other.to_string()),
    }
}

fn from_det2(e: Det2Error) -> Failure {
    match e {
        Det2Error::Spectral(inner) => from_spectral(inner),
        other @ Det2Error::BasisNotPositive(_) => Failure::Numerical(other.to_string()),
        other @ (Det2Error::BadWindow { .. } | Det2Error::GridTooCoarse(_)) => {
            Failure::Config(other.to_string())
        }
        other @ Det2Error::ZeroMismatch { .. } => Failure::Verdict(other.to_string()),
    }
}

/// Geometry and background potential shared by every subcommand body.
struct Context {
    geom: LatticeGeometry,
    v: PotentialSpectrum,
}

/// A finished command: the document to write, and — for commands whose
/// result is a verdict — the failure to report *after* the document has
/// been written, so a false verdict still emits its full report.
struct Outcome {
    document: String,
    failure: Option<Failure>,
}

impl Outcome {
    fn ok(document: String) -> Self {
        Outcome {
            document,
            failure: None,
        }
    }
}

/// A subcommand body: reads its config section, returns the document.
type Body = fn(&RunConfig, &Context) -> Result<Outcome, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, body): (&RunArgs, Body) = match &cli.command {
        Command::Bands(args) => (args, cmd_bands),
        Command::Dirac(args) => (args, cmd_dirac),
        Command::Perturb(args) => (args, cmd_perturb),
        Command::Deform(args) => (args, cmd_deform),
        Command::Det2(args) => (args, cmd_det2),
    };
    match run(args, body) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

/// Shared scaffolding: load the config, build geometry and potential, run
/// the command body, write its document to the resolved output.
fn run(args: &RunArgs, body: Body) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let geom = build_geometry(cfg.a).map_err(|e| Failure::Config(e.to_string()))?;
    let v = cfg.potential.build(&geom).map_err(Failure::Config)?;
    let check = v.honeycomb_check(SYMMETRY_TOL_REL);
    if !check.is_real_valued {
        return Err(Failure::Config(format!(
            "potential must be real-valued (reality defect {:.3e})",
            check.max_reality_defect
        )));
    }
    let ctx = Context { geom, v };
    let outcome = body(&cfg, &ctx)?;
    emit(args.out.as_deref().or(cfg.out.as_deref()), &outcome.document)?;
    match outcome.failure {
        None => Ok(()),
        Some(failure) => Err(failure),
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("config {}: {e}", path.display())))
}

fn cmd_bands(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, Failure> {
    let b = &cfg.bands;
    let corners: Vec<Vector2<f64>> = match (&b.path, &b.points) {
        (Some(_), Some(_)) => {
            return Err(Failure::Config(
                "bands: give either `path` or `points`, not both".into(),
            ))
        }
        (Some(name), None) => named_path(&ctx.geom, name).map_err(from_spectral)?,
        (None, Some(points)) => points.iter().map(|&[x, y]| Vector2::new(x, y)).collect(),
        (None, None) => named_path(&ctx.geom, DEFAULT_PATH).map_err(from_spectral)?,
    };
    if corners.len() < 2 {
        return Err(Failure::Config(
            "bands: the k-path needs at least two corner points".into(),
        ));
    }
    if b.per_segment == 0 {
        return Err(Failure::Config("bands: per_segment must be ≥ 1".into()));
    }
    let kpoints = sample_path(&corners, b.per_segment);
    let table = band_path(&ctx.geom, &ctx.v, cfg.eps, cfg.truncation, &kpoints, b.n_bands)
        .map_err(from_spectral)?;
    Ok(Outcome::ok(table.to_csv_string()))
}

fn cmd_dirac(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, Failure> {
    let d = &cfg.dirac;
    if d.directions == 0 {
        return Err(Failure::Config("dirac: directions must be ≥ 1".into()));
    }
    if let Some(radii) = &d.radii {
        if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Failure::Config(
                "dirac: radii must be a non-empty list of positive finite offsets".into(),
            ));
        }
    }
    let point =
        detect_dirac(&ctx.geom, &ctx.v, cfg.eps, cfg.truncation, d.vertex).map_err(from_dirac)?;
    let directions = match d.direction_seed {
        None => uniform_directions(d.directions),
        Some(seed) => random_directions(d.directions, seed),
    };
    let radii = match &d.radii {
        Some(r) => r.clone(),
        None => default_cone_radii(&point),
    };
    let analysis =
        fit_cone(&ctx.geom, &ctx.v, &point, &directions, &radii).map_err(from_dirac)?;
    let mut report = dirac_report(&point, &analysis, d.anisotropy_tolerance, d.slope_tolerance);
    if d.lambda_min_abs.is_some_and(|min| report.lambda_sharp_abs < min) {
        report.verdict = false;
    }
    let failure = (!report.verdict).then(|| {
        Failure::Verdict(format!(
            "cone verdict false: |λ_♯| = {:.6e}{}, slope anisotropy {:.3e} (tol {:.3e}), \
             slope defect {:.3e} (tol {:.3e})",
            report.lambda_sharp_abs,
            d.lambda_min_abs
                .map(|min| format!(" (minimum {min:.3e})"))
                .unwrap_or_default(),
            report.max_slope_anisotropy,
            report.anisotropy_tolerance,
            report.max_slope_rel_defect,
            report.slope_tolerance,
        ))
    });
    Ok(Outcome {
        document: to_json(&report)?,
        failure,
    })
}

fn cmd_perturb(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, Failure> {
    let eps_list = &cfg.perturb.eps_list;
    if eps_list.is_empty() {
        return Err(Failure::Config("perturb: eps_list must be non-empty".into()));
    }
    if eps_list.iter().any(|e| !e.is_finite()) {
        return Err(Failure::Config("perturb: eps_list entries must be finite".into()));
    }
    let table =
        verify_split(&ctx.geom, &ctx.v, eps_list, cfg.truncation).map_err(from_perturb)?;
    Ok(Outcome::ok(table.to_csv_string()))
}

fn cmd_deform(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, Failure> {
    let d = cfg
        .deform
        .as_ref()
        .ok_or_else(|| Failure::Config("deform: config section `deform` is required".into()))?;
    if !d.eta.is_finite() {
        return Err(Failure::Config(format!("deform: eta must be finite, got {}", d.eta)));
    }
    let w = d.w.build(&ctx.geom).map_err(Failure::Config)?;
    let even = match d.parity {
        ParityChoice::Even => true,
        ParityChoice::NonEven => false,
        ParityChoice::Auto => {
            let check = w.honeycomb_check(SYMMETRY_TOL_REL);
            check.is_real_valued && check.is_even
        }
    };
    let report = if even {
        deform_even(&ctx.geom, &ctx.v, cfg.eps, &w, d.eta, cfg.truncation)
    } else {
        deform_odd_gap(&ctx.geom, &ctx.v, cfg.eps, &w, d.eta, cfg.truncation)
    }
    .map_err(from_perturb)?;
    Ok(Outcome::ok(to_json(&report)?))
}

fn cmd_det2(cfg: &RunConfig, ctx: &Context) -> Result<Outcome, Failure> {
    let d = &cfg.det2;
    let window = (d.window[0], d.window[1]);
    let scan = zero_scan(
        &ctx.geom,
        &ctx.v,
        d.sigma,
        cfg.eps,
        window,
        d.grid_n,
        cfg.truncation,
    )
    .map_err(from_det2)?;
    if let Some(curve_path) = &d.curve_csv {
        let det = SectorDeterminant::new(&ctx.geom, &ctx.v, d.sigma, cfg.eps, cfg.truncation)
            .map_err(from_det2)?;
        write_atomic(curve_path, &det.scan_csv(window, d.grid_n))?;
    }
    Ok(Outcome::ok(to_json(&scan)?))
}

/// `n` unit directions at ChaCha-seeded uniform random angles.
fn random_directions(n: usize, seed: u64) -> Vec<Vector2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            Vector2::new(th.cos(), th.sin())
        })
        .collect()
}

/// Pretty JSON with stable (declaration-order) keys and a trailing newline.
fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::Numerical(format!("result serialization failed: {e}")))
}

fn emit(out: Option<&Path>, document: &str) -> Result<(), Failure> {
    match out {
        Some(path) => write_atomic(path, document),
        None => {
            print!("{document}");
            std::io::stdout()
                .flush()
                .map_err(|e| Failure::Numerical(format!("cannot write to stdout: {e}")))
        }
    }
}

/// Writes atomically within one filesystem: the document appears at `path`
/// entirely or not at all.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let name = path
        .file_name()
        .ok_or_else(|| Failure::Config(format!("output path {} has no file name", path.display())))?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = dir.join(format!(
        "{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, contents)
        .map_err(|e| Failure::Config(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| {
        Failure::Config(format!(
            "cannot move {} to {}: {e}",
            tmp.display(),
            path.display()
        ))
    })?;
    Ok(())
}
