//! Renormalized-determinant characterization of sector eigenvalues.
//!
//! The sector eigenvalue problem `(-Δ + εV)φ = μφ` can be recast through the
//! positive operator `B = I - Δ + εV` (after shifting `V` so its minimum is
//! zero, adjusting μ consistently) as `[I - (μ+1)T]φ = 0` with `T = B⁻¹`.
//! The regularized determinant
//!
//! ```text
//! E_σ(μ, ε) = det₂(I - (μ+1)T),    det₂(I+A) = det([I+A]·e^{-A}),
//! ```
//!
//! vanishes exactly at the sector eigenvalues. At finite truncation the
//! determinant is an ordinary finite product over the eigenvalues of `A`,
//! `Π_j (1+a_j)e^{-a_j}`, which we evaluate from one Hermitian
//! eigendecomposition of `B`; each subsequent μ costs `O(n)`. For ε < 0 the
//! operator `εV` is no longer nonnegative, so the construction switches to
//! the `V_max`-shifted branch `B̃ = I - Δ + ε(V - V_max)` and the factor
//! `(μ + 1 - εV_max)`, which restores `B̃ ≥ I`.
//!
//! [`zero_scan`] walks a μ-window on a grid, brackets sign changes, refines
//! them by bisection, and cross-checks the zero set 1-to-1 against a direct
//! sector eigensolve — the numerical face of the "zeros ⇔ eigenvalues"
//! equivalence.

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{cycle_representatives_at, LatticeGeometry, SymmetrySector, Vertex};
use crate::potential::PotentialSpectrum;
use crate::spectral::{assemble_sector, solve_lowest, SpectralError};
use crate::{from_fourier, C64, FourierIndex};

/// Grid resolution used to locate `min V` / `max V` over the cell.
const RANGE_GRID: usize = 96;

/// Width target of bisection brackets, relative to `1 + |μ|`.
pub const BRACKET_TOL: f64 = 1e-9;

/// Matching tolerance between determinant zeros and sector eigenvalues,
/// relative to `1 + |μ|`.
pub const ZERO_MATCH_TOL: f64 = 1e-8;

/// Errors from determinant evaluation and zero scanning.
#[derive(Debug, Error)]
pub enum Det2Error {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    /// The base matrix came out non-positive, so `(I + H)⁻¹` is untrusted.
    #[error("base matrix not positive definite (smallest eigenvalue {0})")]
    BasisNotPositive(f64),
    #[error("zero scan window [{lo}, {hi}] must be finite and increasing")]
    BadWindow { lo: f64, hi: f64 },
    #[error("zero scan needs grid_n >= 8, got {0}")]
    GridTooCoarse(usize),
    /// The determinant's zero set and the sector eigensolve disagree.
    #[error(
        "determinant zeros do not match the sector spectrum: \
         {unmatched_zeros:?} have no eigenvalue, {unbracketed:?} have no zero \
         (tolerance {tol:.3e})"
    )]
    ZeroMismatch {
        unmatched_zeros: Vec<f64>,
        unbracketed: Vec<f64>,
        tol: f64,
    },
}

fn serialize_c64<S: serde::Serializer>(v: &C64, s: S) -> Result<S::Ok, S::Error> {
    [v.re, v.im].serialize(s)
}

/// One evaluation of `E_σ(μ, ε)` at finite truncation.
#[derive(Debug, Clone, Serialize)]
pub struct Det2Evaluation {
    pub mu: f64,
    pub eps: f64,
    pub sigma: SymmetrySector,
    pub truncation: u32,
    /// Serialized as `[re, im]`; real within rounding for real inputs.
    #[serde(serialize_with = "serialize_c64")]
    pub value: C64,
    /// Whether the ε<0 `V_max`-shift branch was used.
    pub shifted: bool,
}

/// `det₂(I + A) = Π_j (1 + a_j)·e^{-a_j}` from the eigenvalues of `A`.
///
/// Exact at finite dimension by the spectral mapping; no matrix exponential
/// is ever formed.
pub fn det2_of(a_eigenvalues: &[C64]) -> C64 {
    a_eigenvalues
        .iter()
        .map(|a| (C64::new(1.0, 0.0) + a) * (-a).exp())
        .product()
}

/// Adds the constant `c` to a potential (its mean coefficient `V₀,₀`).
fn shift_constant(v: &PotentialSpectrum, c: f64) -> PotentialSpectrum {
    let mut entries: Vec<(FourierIndex, C64)> = v.coefficients().collect();
    entries.push((FourierIndex::ZERO, C64::new(c, 0.0)));
    from_fourier(&entries)
}

/// One sector's determinant after the single eigendecomposition of the base
/// matrix; every subsequent μ evaluation is `O(n)`.
///
/// Thread-safe once built (all state immutable).
#[derive(Debug, Clone)]
pub struct SectorDeterminant {
    pub sigma: SymmetrySector,
    pub eps: f64,
    pub truncation: u32,
    /// Eigenvalues `λ_j ≥ 1` of the base matrix `B` (ascending).
    base_eigenvalues: Vec<f64>,
    /// μ ↦ numerator: `num(μ) = μ - εV_min + 1 - (εV_max if shifted)`.
    numerator_offset: f64,
    /// Original-scale eigenvalues recovered from the base spectrum.
    spectrum: Vec<f64>,
    shifted: bool,
}

impl SectorDeterminant {
    /// Builds the determinant for one `(σ, ε)` at truncation `M`, at the
    /// vertex `K`.
    ///
    /// The potential is shifted internally so `min V = 0` (with μ shifted
    /// consistently, so zeros stay on the original spectrum); ε < 0 engages
    /// the `V_max` branch.
    pub fn new(
        geom: &LatticeGeometry,
        v: &PotentialSpectrum,
        sigma: SymmetrySector,
        eps: f64,
        truncation: u32,
    ) -> Result<Self, Det2Error> {
        let (v_min, v_max) = v.cell_range(geom, RANGE_GRID);
        let shifted = eps < 0.0;

        // Plain branch: base uses V - V_min so εV_base ≥ 0; ε < 0 instead
        // subtracts V_max so ε(V - V_max) ≥ 0. Either way B ≥ I. The same
        // constant c enters the numerator, num(μ) = μ + 1 - εc, and the
        // spectrum recovery μ = λ - 1 + εc, keeping zeros on the original
        // μ scale.
        let c = if shifted { v_max } else { v_min };
        let v_base = shift_constant(v, -c);
        let numerator_offset = 1.0 - eps * c;

        let table = cycle_representatives_at(truncation, Vertex::K);
        let h = assemble_sector(geom, &table, &v_base, eps, sigma)?;
        let n = h.nrows();
        let b = h + nalgebra::DMatrix::<C64>::identity(n, n);
        let sol = solve_lowest(&b, n)?;
        if sol.eigenvalues[0] <= 0.0 {
            return Err(Det2Error::BasisNotPositive(sol.eigenvalues[0]));
        }

        let spectrum = sol
            .eigenvalues
            .iter()
            .map(|l| l - 1.0 + eps * c)
            .collect();

        Ok(SectorDeterminant {
            sigma,
            eps,
            truncation,
            base_eigenvalues: sol.eigenvalues,
            numerator_offset,
            spectrum,
            shifted,
        })
    }

    /// Evaluates `E_σ(μ, ε)`.
    pub fn evaluate(&self, mu: f64) -> Det2Evaluation {
        let num = mu + self.numerator_offset;
        let eigs: Vec<C64> = self
            .base_eigenvalues
            .iter()
            .map(|l| C64::new(-num / l, 0.0))
            .collect();
        Det2Evaluation {
            mu,
            eps: self.eps,
            sigma: self.sigma,
            truncation: self.truncation,
            value: det2_of(&eigs),
            shifted: self.shifted,
        }
    }

    /// The sector spectrum implied by the base decomposition (ascending,
    /// original μ scale). The determinant vanishes exactly at these points.
    pub fn implied_spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// CSV table of the determinant over a uniform μ-grid: `mu,value`.
    pub fn scan_csv(&self, window: (f64, f64), grid_n: usize) -> String {
        let mut out = String::from("mu,value\n");
        for i in 0..=grid_n {
            let mu = window.0 + (window.1 - window.0) * (i as f64) / (grid_n as f64);
            let e = self.evaluate(mu);
            out.push_str(&format!("{},{}\n", mu, e.value.re));
        }
        out
    }
}

/// Single-shot evaluation of `E_σ(μ, ε)`.
pub fn evaluate_e(
    geom: &LatticeGeometry,
    v: &PotentialSpectrum,
    sigma: SymmetrySector,
    mu: f64,
    eps: f64,
    truncation: u32,
) -> Result<Det2Evaluation, Det2Error> {
    Ok(SectorDeterminant::new(geom, v, sigma, eps, truncation)?.evaluate(mu))
}

/// One determinant zero, matched to its sector eigenvalue.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroMatch {
    pub mu_zero: f64,
    pub matched_eigenvalue: f64,
    pub defect: f64,
}

/// Result of a windowed zero scan.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroScan {
    pub sigma: SymmetrySector,
    pub eps: f64,
    pub truncation: u32,
    pub window: (f64, f64),
    pub grid_n: usize,
    /// Zeros ascending in μ, each matched 1-to-1 to the spectrum.
    pub zeros: Vec<ZeroMatch>,
}

impl ZeroScan {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("zero scan serializes")
    }
}

/// Scans `μ ↦ E_σ(μ, ε)` over a window, brackets every sign change, refines
/// by bisection to width `1e-9·(1+|μ|)`, and verifies the zeros coincide
/// 1-to-1 with the sector eigensolve of the *unshifted* problem.
///
/// An unmatched zero or an unbracketed in-window eigenvalue is a
/// discrepancy and comes back as [`Det2Error::ZeroMismatch`]. Double
/// eigenvalues inside one sector would produce a sign-change-free double
/// root and trip that same diagnostic — by design, since the scan can then
/// not certify the equivalence.
pub fn zero_scan(
    geom: &LatticeGeometry,
    v: &PotentialSpectrum,
    sigma: SymmetrySector,
    eps: f64,
    window: (f64, f64),
    grid_n: usize,
    truncation: u32,
) -> Result<ZeroScan, Det2Error> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Det2Error::BadWindow { lo, hi });
    }
    if grid_n < 8 {
        return Err(Det2Error::GridTooCoarse(grid_n));
    }

    let det = SectorDeterminant::new(geom, v, sigma, eps, truncation)?;
    let f = |mu: f64| det.evaluate(mu).value.re;

    // Bracket sign changes on the grid.
    let step = (hi - lo) / (grid_n as f64);
    let mut zeros = Vec::new();
    let mut prev_mu = lo;
    let mut prev_f = f(lo);
    for i in 1..=grid_n {
        let mu = lo + step * (i as f64);
        let fi = f(mu);
        if prev_f == 0.0 {
            zeros.push(prev_mu);
        } else if prev_f * fi < 0.0 {
            // Bisection.
            let (mut a, mut b, mut fa) = (prev_mu, mu, prev_f);
            while b - a > BRACKET_TOL * (1.0 + 0.5 * (a.abs() + b.abs())) {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 {
                    a = m;
                    b = m;
                } else if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            zeros.push(0.5 * (a + b));
        }
        prev_mu = mu;
        prev_f = fi;
    }
    if prev_f == 0.0 {
        zeros.push(prev_mu);
    }

    // Independent oracle: the sector spectrum from a direct eigensolve of
    // the unshifted problem.
    let table = cycle_representatives_at(truncation, Vertex::K);
    let h = assemble_sector(geom, &table, v, eps, sigma)?;
    let n = h.nrows();
    let all = solve_lowest(&h, n)?;
    let in_window: Vec<f64> = all
        .eigenvalues
        .iter()
        .copied()
        .filter(|mu| (lo..=hi).contains(mu))
        .collect();

    // Greedy 1-to-1 matching of two ascending lists.
    let tol_at = |mu: f64| ZERO_MATCH_TOL * (1.0 + mu.abs());
    let mut matches = Vec::new();
    let mut unmatched_zeros = Vec::new();
    let mut ei = 0usize;
    for &z in &zeros {
        // Skip eigenvalues strictly below the zero's tolerance band: they
        // are unbracketed.
        while ei < in_window.len() && in_window[ei] < z - tol_at(z) {
            ei += 1;
        }
        if ei < in_window.len() && (in_window[ei] - z).abs() <= tol_at(z) {
            matches.push(ZeroMatch {
                mu_zero: z,
                matched_eigenvalue: in_window[ei],
                defect: (in_window[ei] - z).abs(),
            });
            ei += 1;
        } else {
            unmatched_zeros.push(z);
        }
    }

    let matched_count = matches.len();
    if !unmatched_zeros.is_empty() || matched_count != in_window.len() {
        let matched: Vec<f64> = matches.iter().map(|m| m.matched_eigenvalue).collect();
        let unbracketed: Vec<f64> = in_window
            .iter()
            .copied()
            .filter(|mu| !matched.iter().any(|m| (m - mu).abs() < 1e-15 * (1.0 + mu.abs())))
            .collect();
        return Err(Det2Error::ZeroMismatch {
            unmatched_zeros,
            unbracketed,
            tol: ZERO_MATCH_TOL,
        });
    }

    Ok(ZeroScan {
        sigma,
        eps,
        truncation,
        window,
        grid_n,
        zeros: matches,
    })
}
