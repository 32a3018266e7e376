//! Run configuration: one JSON document shared by every subcommand.
//!
//! The schema is strict — unknown keys are rejected at every level — so a
//! typo in a config file fails the run (exit 2) instead of silently falling
//! back to a default. Numbers are ordinary JSON doubles parsed by serde;
//! no extended-precision parsing is attempted, since the analysis
//! tolerances dominate parse rounding by many orders of magnitude.
//!
//! Every field has a sensible default except those that would silently
//! change the meaning of a run: the deformation section (`deform`) must be
//! given explicitly because there is no canonical deformation `W`.

use std::path::PathBuf;

use serde::Deserialize;

use hexbloch::lattice::{SymmetrySector, Vertex};
use hexbloch::potential::{atomic_lattice, from_fourier, optical_lattice};
use hexbloch::{FourierIndex, LatticeGeometry, PotentialSpectrum, C64};

fn default_a() -> f64 {
    1.0
}

fn default_v0() -> f64 {
    1.0
}

fn default_truncation() -> u32 {
    8
}

fn default_per_segment() -> usize {
    60
}

fn default_n_bands() -> usize {
    6
}

fn default_vertex() -> Vertex {
    Vertex::K
}

fn default_directions() -> usize {
    8
}

fn default_anisotropy_tolerance() -> f64 {
    0.01
}

fn default_slope_tolerance() -> f64 {
    0.005
}

fn default_eps_list() -> Vec<f64> {
    vec![0.01, 0.02, 0.04]
}

fn default_sigma() -> SymmetrySector {
    SymmetrySector::Tau
}

fn default_window() -> [f64; 2] {
    [10.0, 30.0]
}

fn default_grid_n() -> usize {
    2000
}

/// Top-level run configuration. Shared fields (`a`, `potential`, `eps`,
/// `truncation`, `out`) apply to all subcommands; each subcommand reads
/// its own section and ignores the others, so one file can drive a whole
/// pipeline of runs.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Lattice constant of the period lattice.
    #[serde(default = "default_a")]
    pub a: f64,
    /// Background periodic potential `V`.
    #[serde(default = "PotentialConfig::default_optical")]
    pub potential: PotentialConfig,
    /// Coupling ε multiplying the potential.
    #[serde(default)]
    pub eps: f64,
    /// Plane-wave truncation `M` (Fourier indices with `|m_i| ≤ M`).
    #[serde(default = "default_truncation")]
    pub truncation: u32,
    /// Output path; the `--out` flag takes precedence, and the document
    /// goes to stdout when neither is set.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub bands: BandsConfig,
    #[serde(default)]
    pub dirac: DiracConfig,
    #[serde(default)]
    pub perturb: PerturbConfig,
    /// Deformation section; required by `deform`, ignored elsewhere.
    #[serde(default)]
    pub deform: Option<DeformConfig>,
    #[serde(default)]
    pub det2: Det2Config,
}

/// How to obtain a potential's Fourier coefficients.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// Three-beam optical potential: coefficients `v0/2` on the six
    /// indices `±(1,0), ±(0,1), ±(1,1)`.
    Optical {
        #[serde(default = "default_v0")]
        v0: f64,
    },
    /// Gaussian bumps of width `s` on the honeycomb sites, synthesized to
    /// Fourier indices `|m_i| ≤ truncation`.
    Atomic {
        #[serde(default = "default_v0")]
        v0: f64,
        s: f64,
        #[serde(default = "default_truncation")]
        truncation: u32,
    },
    /// Inline Fourier coefficients as `(m1, m2, re, im)` rows; duplicate
    /// indices are summed.
    Coefficients { entries: Vec<(i32, i32, f64, f64)> },
    /// Coefficient file in the JSON layout written by
    /// `PotentialSpectrum::to_json_string`.
    File { path: PathBuf },
}

impl PotentialConfig {
    pub fn default_optical() -> Self {
        PotentialConfig::Optical { v0: default_v0() }
    }

    /// Builds the coefficient map; errors are config errors (exit 2).
    pub fn build(&self, geom: &LatticeGeometry) -> Result<PotentialSpectrum, String> {
        match self {
            PotentialConfig::Optical { v0 } => Ok(optical_lattice(*v0)),
            PotentialConfig::Atomic { v0, s, truncation } => {
                atomic_lattice(geom, *v0, *s, *truncation).map_err(|e| e.to_string())
            }
            PotentialConfig::Coefficients { entries } => {
                let entries: Vec<(FourierIndex, C64)> = entries
                    .iter()
                    .map(|&(m1, m2, re, im)| (FourierIndex::new(m1, m2), C64::new(re, im)))
                    .collect();
                Ok(from_fourier(&entries))
            }
            PotentialConfig::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read potential file {}: {e}", path.display()))?;
                PotentialSpectrum::from_json_str(&text)
                    .map(|(_kind, v)| v)
                    .map_err(|e| format!("potential file {}: {e}", path.display()))
            }
        }
    }
}

/// `bands` section: the k-path and how densely to sample it.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsConfig {
    /// Named path, hyphen-separated tokens from `{G, K, K', M}`
    /// (`G = (0,0)`, `K`/`K'` the zone vertices, `M = k1/2`).
    /// Defaults to `"G-K-M-G"` when neither `path` nor `points` is given.
    #[serde(default)]
    pub path: Option<String>,
    /// Explicit corner points `[kx, ky]`, alternative to `path`.
    #[serde(default)]
    pub points: Option<Vec<[f64; 2]>>,
    /// Uniform samples per path segment.
    #[serde(default = "default_per_segment")]
    pub per_segment: usize,
    /// Number of bands (lowest eigenvalues) per k-point.
    #[serde(default = "default_n_bands")]
    pub n_bands: usize,
}

impl Default for BandsConfig {
    fn default() -> Self {
        BandsConfig {
            path: None,
            points: None,
            per_segment: default_per_segment(),
            n_bands: default_n_bands(),
        }
    }
}

/// `dirac` section: detection vertex, cone-fit sampling, and verdict
/// tolerances.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracConfig {
    /// Zone vertex to analyze: `"k"` or `"k_prime"`.
    #[serde(default = "default_vertex")]
    pub vertex: Vertex,
    /// Number of cone-fit directions.
    #[serde(default = "default_directions")]
    pub directions: usize,
    /// Seed for uniformly random direction angles; evenly spaced
    /// directions when absent. Fixing the seed makes the random variant
    /// byte-reproducible.
    #[serde(default)]
    pub direction_seed: Option<u64>,
    /// Offset radii for the cone fit; a ladder scaled to the protection
    /// gap when absent.
    #[serde(default)]
    pub radii: Option<Vec<f64>>,
    /// Verdict bound on `(max-min)/mean` of the directional slopes.
    #[serde(default = "default_anisotropy_tolerance")]
    pub anisotropy_tolerance: f64,
    /// Verdict bound on the relative defect of slopes against `|λ_♯|`.
    #[serde(default = "default_slope_tolerance")]
    pub slope_tolerance: f64,
    /// Minimum admissible `|λ_♯|`; a detection below this fails the
    /// verdict (exit 4) even when the slope checks pass.
    #[serde(default)]
    pub lambda_min_abs: Option<f64>,
}

impl Default for DiracConfig {
    fn default() -> Self {
        DiracConfig {
            vertex: default_vertex(),
            directions: default_directions(),
            direction_seed: None,
            radii: None,
            anisotropy_tolerance: default_anisotropy_tolerance(),
            slope_tolerance: default_slope_tolerance(),
            lambda_min_abs: None,
        }
    }
}

/// `perturb` section: the coupling ladder for the splitting table.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            eps_list: default_eps_list(),
        }
    }
}

/// `deform` section: the deformation `W`, its strength, and which analysis
/// branch to run.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformConfig {
    /// Deformation potential `W`.
    pub w: PotentialConfig,
    /// Deformation strength η in `εV + ηW`.
    pub eta: f64,
    /// Branch dispatch: `"auto"` inspects the parity of `W`, `"even"` and
    /// `"non_even"` force the drift and gap analyses respectively.
    #[serde(default)]
    pub parity: ParityChoice,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ParityChoice {
    #[default]
    Auto,
    Even,
    NonEven,
}

/// `det2` section: which sector determinant to scan and over what window.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Det2Config {
    /// Symmetry sector: `"one"`, `"tau"`, or `"tau_bar"`.
    #[serde(default = "default_sigma")]
    pub sigma: SymmetrySector,
    /// μ window `[lo, hi]` scanned for zeros.
    #[serde(default = "default_window")]
    pub window: [f64; 2],
    /// Number of grid cells in the sign-change scan.
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    /// Optional CSV of the raw `μ ↦ E_σ(μ, ε)` curve, written (atomically)
    /// alongside the zeros document.
    #[serde(default)]
    pub curve_csv: Option<PathBuf>,
}

impl Default for Det2Config {
    fn default() -> Self {
        Det2Config {
            sigma: default_sigma(),
            window: default_window(),
            grid_n: default_grid_n(),
            curve_csv: None,
        }
    }
}
