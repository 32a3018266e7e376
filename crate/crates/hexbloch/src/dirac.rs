//! Dirac point detection and quantitative cone analysis at the zone vertices.
//!
//! For a honeycomb potential the protected two-fold crossing at a vertex
//! `K⋆` is located spectrally: the candidate energy is the lowest τ-sector
//! eigenvalue, and it qualifies as a Dirac point when it is (i) simple
//! within the τ sector, (ii) matched by a τ̄-sector eigenvalue (forced by
//! the conjugation symmetry `Φ₂(x) = conj(Φ₁(-x))`), and (iii) separated
//! from the whole 1-sector spectrum. Failure of (iii) is the
//! "exceptional coupling" situation — at ε = 0 the free operator sits
//! exactly there, with a triple crossing instead of a cone.
//!
//! The cone coefficient is
//!
//! ```text
//! λ_♯ = 3·|Ω| · Σ_{m∈S} c(m)² · (K⋆^m_1 + i K⋆^m_2),
//! ```
//!
//! summed over orbit representatives with the τ eigenvector normalized to a
//! unit-L²(Ω) eigenfunction (`3|Ω| Σ|c|² = 1`). Two independent checks tie
//! it to the dispersion surfaces: the first-order matrix elements
//! ([`matrix_elements_m0`]) satisfy `⟨Φ_a, κ·∇Φ_a⟩ = 0` and
//! `2i⟨Φ₁, κ·∇Φ₂⟩ = -conj(λ_♯)·(κ₁+iκ₂)` exactly, and the measured band
//! slopes around `K⋆` extrapolate to `|λ_♯|` as the offset radius shrinks
//! ([`fit_cone`]), with the two branches behaving as
//! `μ_± - μ⋆ = ±|λ_♯||κ|(1 + O(|κ|))`.

use std::collections::BTreeMap;

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::lattice::{
    cycle_representatives_at, index_vertex_r2_action, index_vertex_r_action, kvec_of_index,
    FourierIndex, LatticeGeometry, SymmetrySector, Vertex,
};
use crate::potential::PotentialSpectrum;
use crate::spectral::{assemble_full, assemble_sector, solve_lowest, PlanewaveBasis, SpectralError};
use crate::C64;

/// Two eigenvalues within `DEGENERACY_TOL·(1+|μ|)` of each other are treated
/// as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;
/// `|λ_♯|` below this fraction of the free-limit slope counts as a
/// degenerate cone.
pub const LAMBDA_MIN_REL: f64 = 1e-10;

/// Errors from Dirac point detection and cone fitting.
#[derive(Debug, Error)]
pub enum DiracError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    /// Condition (i): the candidate was not simple inside the τ sector.
    #[error(
        "candidate μ⋆ = {mu_star} is not simple in the τ sector \
         (gap {gap:.3e} ≤ threshold {threshold:.3e})"
    )]
    NotSimpleInTau {
        mu_star: f64,
        gap: f64,
        threshold: f64,
    },
    /// Condition (ii): no τ̄ partner, which contradicts the conjugation
    /// symmetry and indicates a broken input.
    #[error(
        "no τ̄-sector eigenvalue matches μ⋆ = {mu_star} \
         (nearest at distance {distance:.3e}, tolerance {tol:.3e})"
    )]
    NoTauBarMatch {
        mu_star: f64,
        distance: f64,
        tol: f64,
    },
    /// Condition (iii): a 1-sector eigenvalue collides with the candidate,
    /// so the two-fold degeneracy is not protected at this coupling.
    #[error(
        "exceptional coupling: a 1-sector eigenvalue lies within {distance:.3e} \
         of μ⋆ = {mu_star} (threshold {threshold:.3e}); the crossing is not a \
         protected double eigenvalue"
    )]
    ExceptionalEpsilon {
        mu_star: f64,
        distance: f64,
        threshold: f64,
    },
    /// `|λ_♯|` vanished: the dispersion surfaces touch but do not form a cone.
    #[error("degenerate cone: |λ_♯| = {lambda_abs:.3e} below threshold {threshold:.3e}")]
    DegenerateCone { lambda_abs: f64, threshold: f64 },
    /// The double eigenvalue could not be located as two consecutive bands
    /// of the full problem.
    #[error(
        "expected exactly two consecutive full-problem bands at μ⋆ = {mu_star}, found {count}"
    )]
    BandBracketFailed { mu_star: f64, count: usize },
    /// During a cone fit the tracked band pair stopped straddling μ⋆.
    #[error(
        "bands ({lo}, {hi}) do not bracket μ⋆ at offset |κ| = {radius:.3e} \
         in direction ({dx:.4}, {dy:.4})"
    )]
    ConeNotBracketed {
        lo: usize,
        hi: usize,
        radius: f64,
        dx: f64,
        dy: f64,
    },
}

/// A verified Dirac point, with everything needed for downstream analysis.
#[derive(Debug, Clone)]
pub struct DiracPoint {
    pub vertex: Vertex,
    /// The vertex as a point of the dual plane.
    pub k_star: Vector2<f64>,
    /// The protected double eigenvalue.
    pub mu_star: f64,
    /// Cone coefficient from the τ eigenvector.
    pub lambda_sharp: C64,
    /// 1-based indices `(b, b+1)` of the crossing in the full spectrum at K⋆.
    pub band_indices: (usize, usize),
    /// Distance from μ⋆ to the nearest band *not* part of the crossing; the
    /// cone is linear only for offsets well inside this gap.
    pub protection_gap: f64,
    /// Orbit representatives the sector problem was solved over.
    pub representatives: Vec<FourierIndex>,
    /// τ-sector eigenvector coefficients, normalized to a unit-L²(Ω)
    /// eigenfunction: `3|Ω| Σ|c|² = 1`.
    pub tau_coeffs: Vec<C64>,
    pub truncation: u32,
    pub epsilon: f64,
}

/// Rescales sector coefficients to the unit-L²(Ω) convention
/// `3|Ω| Σ|c(m)|² = 1`. The zero vector is returned unchanged.
pub fn unit_l2_normalize(geom: &LatticeGeometry, coeffs: &[C64]) -> Vec<C64> {
    let sum: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if sum == 0.0 {
        return coeffs.to_vec();
    }
    let factor = 1.0 / (3.0 * geom.cell_area * sum).sqrt();
    coeffs.iter().map(|&c| c * factor).collect()
}

/// The cone coefficient
/// `λ_♯ = 3|Ω| Σ_m c(m)² (K⋆^m_1 + i K⋆^m_2)` over orbit representatives.
///
/// Expects coefficients in the unit-L²(Ω) convention (see
/// [`unit_l2_normalize`]); the result is deterministic for phase-fixed
/// input, and `|λ_♯|` is invariant under both a global phase and the choice
/// of orbit representatives.
pub fn lambda_sharp(
    geom: &LatticeGeometry,
    k_star: Vector2<f64>,
    representatives: &[FourierIndex],
    coeffs: &[C64],
) -> C64 {
    debug_assert_eq!(representatives.len(), coeffs.len());
    let mut sum = C64::new(0.0, 0.0);
    for (&m, &c) in representatives.iter().zip(coeffs) {
        let km = kvec_of_index(geom, k_star, m);
        sum += c * c * C64::new(km.x, km.y);
    }
    sum * (3.0 * geom.cell_area)
}

/// Expands sector coefficients over representatives into the full Fourier
/// expansion of the sector eigenfunction:
/// `d(m) = c(m)`, `d(ℛm) = σ̄ c(m)`, `d(ℛ²m) = σ c(m)`.
pub fn expand_sector_coeffs(
    vertex: Vertex,
    representatives: &[FourierIndex],
    coeffs: &[C64],
    sector: SymmetrySector,
) -> BTreeMap<FourierIndex, C64> {
    let sigma = sector.value();
    let sigma_bar = sigma.conj();
    let mut d = BTreeMap::new();
    for (&m, &c) in representatives.iter().zip(coeffs) {
        d.insert(m, c);
        d.insert(index_vertex_r_action(vertex, m), sigma_bar * c);
        d.insert(index_vertex_r2_action(vertex, m), sigma * c);
    }
    d
}

/// First-order matrix elements of the effective two-band problem, computed
/// by direct summation over the full expansion:
///
/// - `diag = ⟨Φ₁, κ·∇Φ₁⟩ = i|Ω| Σ_n |d(n)|² (κ·K⋆^n)`,
/// - `offdiag = 2i⟨Φ₁, κ·∇Φ₂⟩ = -2|Ω| Σ_n conj(d(n))² (κ·K⋆^n)`,
///
/// with `Φ₂(x) = conj(Φ₁(-x))`, i.e. `d₂(n) = conj(d₁(n))`. For a sector
/// eigenfunction these collapse to `diag = 0` and
/// `offdiag = -conj(λ_♯)(κ₁+iκ₂)`; the summation here is deliberately
/// oblivious to that structure so the identities can be *tested*.
pub fn matrix_elements_m0(
    geom: &LatticeGeometry,
    k_star: Vector2<f64>,
    expansion: &BTreeMap<FourierIndex, C64>,
    kappa: Vector2<f64>,
) -> (C64, C64) {
    let mut diag_sum = 0.0_f64;
    let mut off_sum = C64::new(0.0, 0.0);
    for (&n, &d) in expansion {
        let kn = kvec_of_index(geom, k_star, n);
        let proj = kappa.dot(&kn);
        diag_sum += d.norm_sqr() * proj;
        off_sum += d.conj() * d.conj() * proj;
    }
    let area = geom.cell_area;
    (
        C64::new(0.0, area * diag_sum),
        off_sum * (-2.0 * area),
    )
}

/// Locates and verifies the Dirac point of `-Δ + εV` at the given vertex.
///
/// Runs the three sector eigenproblems at `K⋆`, takes the lowest τ-sector
/// eigenvalue as candidate, and enforces the three protection conditions
/// described in the module docs. On success the full problem at `K⋆` is
/// solved once more to locate the crossing's (1-based) band indices.
pub fn detect_dirac(
    geom: &LatticeGeometry,
    v: &PotentialSpectrum,
    epsilon: f64,
    truncation: u32,
    vertex: Vertex,
) -> Result<DiracPoint, DiracError> {
    let table = cycle_representatives_at(truncation, vertex);
    let n = table.orbit_count();

    let h_tau = assemble_sector(geom, &table, v, epsilon, SymmetrySector::Tau)?;
    let tau = solve_lowest(&h_tau, n)?;
    let h_tbar = assemble_sector(geom, &table, v, epsilon, SymmetrySector::TauBar)?;
    let tbar = solve_lowest(&h_tbar, n)?;
    let h_one = assemble_sector(geom, &table, v, epsilon, SymmetrySector::One)?;
    let one = solve_lowest(&h_one, n)?;

    let mu_star = tau.eigenvalues[0];
    let tol = DEGENERACY_TOL * (1.0 + mu_star.abs());

    // (i) simple within the τ sector
    let tau_gap = tau.eigenvalues[1] - mu_star;
    if tau_gap <= tol {
        return Err(DiracError::NotSimpleInTau {
            mu_star,
            gap: tau_gap,
            threshold: tol,
        });
    }
    // (ii) a τ̄ partner exists
    let tbar_distance = tbar
        .eigenvalues
        .iter()
        .map(|x| (x - mu_star).abs())
        .fold(f64::INFINITY, f64::min);
    if tbar_distance > tol {
        return Err(DiracError::NoTauBarMatch {
            mu_star,
            distance: tbar_distance,
            tol,
        });
    }
    // (iii) separated from the whole 1-sector spectrum
    let one_distance = one
        .eigenvalues
        .iter()
        .map(|x| (x - mu_star).abs())
        .fold(f64::INFINITY, f64::min);
    if one_distance <= tol {
        return Err(DiracError::ExceptionalEpsilon {
            mu_star,
            distance: one_distance,
            threshold: tol,
        });
    }

    // Cone coefficient from the unit-L²(Ω) normalized τ eigenvector.
    let k_star = vertex.point(geom);
    let raw: Vec<C64> = tau.eigenvectors[0].iter().copied().collect();
    let tau_coeffs = unit_l2_normalize(geom, &raw);
    let lam = lambda_sharp(geom, k_star, &table.representatives, &tau_coeffs);
    let lambda_threshold = LAMBDA_MIN_REL * geom.q / 3.0_f64.sqrt();
    if lam.norm() < lambda_threshold {
        return Err(DiracError::DegenerateCone {
            lambda_abs: lam.norm(),
            threshold: lambda_threshold,
        });
    }

    // Band indices of the crossing in the full spectrum at K⋆.
    let basis = PlanewaveBasis::new(truncation);
    let h_full = assemble_full(geom, &basis, v, epsilon, k_star);
    let full = solve_lowest(&h_full, basis.dim())?;
    let matches: Vec<usize> = full
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &mu)| (mu - mu_star).abs() <= tol)
        .map(|(i, _)| i)
        .collect();
    if matches.len() != 2 || matches[1] != matches[0] + 1 {
        return Err(DiracError::BandBracketFailed {
            mu_star,
            count: matches.len(),
        });
    }
    let protection_gap = full
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != matches[0] && *i != matches[1])
        .map(|(_, mu)| (mu - mu_star).abs())
        .fold(f64::INFINITY, f64::min);

    Ok(DiracPoint {
        vertex,
        k_star,
        mu_star,
        lambda_sharp: lam,
        band_indices: (matches[0] + 1, matches[1] + 1),
        protection_gap,
        representatives: table.representatives,
        tau_coeffs,
        truncation,
        epsilon,
    })
}

/// Measured cone slopes along one direction away from the vertex.
#[derive(Debug, Clone, Serialize)]
pub struct ConeFit {
    /// Unit direction of the offset κ.
    pub direction: [f64; 2],
    /// Ascending offset radii |κ|.
    pub radii: Vec<f64>,
    /// `(μ₊(K⋆+κ) - μ⋆)/|κ|` per radius.
    pub slopes_plus: Vec<f64>,
    /// `(μ⋆ - μ₋(K⋆+κ))/|κ|` per radius.
    pub slopes_minus: Vec<f64>,
    /// `μ₊ + μ₋ - 2μ⋆` per radius; should vanish quadratically.
    pub even_part: Vec<f64>,
    /// Linear-in-|κ| extrapolation of the mean slope to κ → 0.
    pub extrapolated_slope: f64,
}

/// Cone fits over several directions, compared against `|λ_♯|`.
#[derive(Debug, Clone, Serialize)]
pub struct ConeAnalysis {
    pub fits: Vec<ConeFit>,
    /// `|λ_♯|` of the Dirac point the fits are compared against.
    pub lambda_abs: f64,
    /// `(max - min)/mean` of the directional extrapolated slopes.
    pub max_anisotropy: f64,
    /// Largest `|extrapolated - |λ_♯|| / |λ_♯|` over directions.
    pub max_rel_defect: f64,
}

/// Least-squares intercept of `y = a + b x` (plain mean when one point).
fn linear_intercept(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return y.first().copied().unwrap_or(0.0);
    }
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (sy * sxx - sx * sxy) / (n * sxx - sx * sx)
}

/// Measures the dispersion slopes of the crossing bands around a verified
/// Dirac point and extrapolates them to the vertex.
///
/// Every data point is an independent full (not sector) eigensolve at
/// `K⋆ + r·u`; directions run in parallel. The extrapolated directional
/// slopes are compared to `|λ_♯|`, which was computed from an eigenvector
/// at `K⋆` alone — the two agreeing is a genuine cross-check, not a
/// tautology.
pub fn fit_cone(
    geom: &LatticeGeometry,
    v: &PotentialSpectrum,
    point: &DiracPoint,
    directions: &[Vector2<f64>],
    radii: &[f64],
) -> Result<ConeAnalysis, DiracError> {
    let basis = PlanewaveBasis::new(point.truncation);
    let (b_lo, b_hi) = point.band_indices;
    let mut radii_sorted = radii.to_vec();
    radii_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let slack = DEGENERACY_TOL * (1.0 + point.mu_star.abs());

    let fits: Vec<ConeFit> = directions
        .par_iter()
        .map(|&dir| -> Result<ConeFit, DiracError> {
            let unit = dir / dir.norm();
            let mut slopes_plus = Vec::with_capacity(radii_sorted.len());
            let mut slopes_minus = Vec::with_capacity(radii_sorted.len());
            let mut even_part = Vec::with_capacity(radii_sorted.len());
            for &r in &radii_sorted {
                let k = point.k_star + unit * r;
                let h = assemble_full(geom, &basis, v, point.epsilon, k);
                let sol = solve_lowest(&h, b_hi)?;
                let mu_minus = sol.eigenvalues[b_lo - 1];
                let mu_plus = sol.eigenvalues[b_hi - 1];
                if mu_minus > point.mu_star + slack || mu_plus < point.mu_star - slack {
                    return Err(DiracError::ConeNotBracketed {
                        lo: b_lo,
                        hi: b_hi,
                        radius: r,
                        dx: unit.x,
                        dy: unit.y,
                    });
                }
                slopes_plus.push((mu_plus - point.mu_star) / r);
                slopes_minus.push((point.mu_star - mu_minus) / r);
                even_part.push(mu_plus + mu_minus - 2.0 * point.mu_star);
            }
            let mean: Vec<f64> = slopes_plus
                .iter()
                .zip(&slopes_minus)
                .map(|(p, m)| 0.5 * (p + m))
                .collect();
            Ok(ConeFit {
                direction: [unit.x, unit.y],
                radii: radii_sorted.clone(),
                slopes_plus,
                slopes_minus,
                even_part,
                extrapolated_slope: linear_intercept(&radii_sorted, &mean),
            })
        })
        .collect::<Result<_, _>>()?;

    let lambda_abs = point.lambda_sharp.norm();
    let slopes: Vec<f64> = fits.iter().map(|f| f.extrapolated_slope).collect();
    let max = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let max_anisotropy = if mean != 0.0 { (max - min) / mean } else { f64::INFINITY };
    let max_rel_defect = slopes
        .iter()
        .map(|s| (s - lambda_abs).abs() / lambda_abs)
        .fold(0.0, f64::max);

    Ok(ConeAnalysis {
        fits,
        lambda_abs,
        max_anisotropy,
        max_rel_defect,
    })
}

/// `n` unit directions at angles `2πj/n`.
pub fn uniform_directions(n: usize) -> Vec<Vector2<f64>> {
    (0..n)
        .map(|j| {
            let th = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            Vector2::new(th.cos(), th.sin())
        })
        .collect()
}

/// Geometrically decreasing offset radii `r0, r0/2, ..., r0/2^(n-1)`,
/// returned ascending.
pub fn radius_ladder(r0: f64, n: usize) -> Vec<f64> {
    let mut radii: Vec<f64> = (0..n).map(|i| r0 / 2.0_f64.powi(i as i32)).collect();
    radii.reverse();
    radii
}

/// Default offset radii for [`fit_cone`]: a three-rung ladder under
/// `r0 = 0.05 · protection_gap / |λ_♯|`.
///
/// The quadratic error of the cone branches is governed by the bands
/// adjacent to the crossing, so radii must shrink with the protection gap;
/// scaling by `gap/|λ_♯|` makes the extrapolation bias coupling-independent
/// (measured ~7×10⁻⁴ relative at the 0.05 factor, comfortably inside the
/// 0.5% slope tolerance).
pub fn default_cone_radii(point: &DiracPoint) -> Vec<f64> {
    let r0 = 0.05 * point.protection_gap / point.lambda_sharp.norm();
    radius_ladder(r0, 3)
}

/// Serializable summary of a Dirac point detection plus cone analysis.
#[derive(Debug, Clone, Serialize)]
pub struct DiracReport {
    pub vertex: String,
    pub k_star: [f64; 2],
    pub mu_star: f64,
    pub epsilon: f64,
    pub truncation: u32,
    pub lambda_sharp: [f64; 2],
    pub lambda_sharp_abs: f64,
    /// 1-based indices of the crossing bands.
    pub band_indices: [usize; 2],
    pub cone_fits: Vec<ConeFit>,
    pub max_slope_anisotropy: f64,
    pub max_slope_rel_defect: f64,
    /// Tolerances the verdict was taken at.
    pub anisotropy_tolerance: f64,
    pub slope_tolerance: f64,
    /// True when |λ_♯| > 0 and all directional slopes agree with it.
    pub verdict: bool,
}

/// Assembles the serializable report from a detection and a cone analysis,
/// applying the stated tolerances for the verdict.
pub fn dirac_report(
    point: &DiracPoint,
    analysis: &ConeAnalysis,
    anisotropy_tolerance: f64,
    slope_tolerance: f64,
) -> DiracReport {
    let verdict = analysis.lambda_abs > 0.0
        && analysis.max_anisotropy <= anisotropy_tolerance
        && analysis.max_rel_defect <= slope_tolerance;
    DiracReport {
        vertex: point.vertex.to_string(),
        k_star: [point.k_star.x, point.k_star.y],
        mu_star: point.mu_star,
        epsilon: point.epsilon,
        truncation: point.truncation,
        lambda_sharp: [point.lambda_sharp.re, point.lambda_sharp.im],
        lambda_sharp_abs: point.lambda_sharp.norm(),
        band_indices: [point.band_indices.0, point.band_indices.1],
        cone_fits: analysis.fits.clone(),
        max_slope_anisotropy: analysis.max_anisotropy,
        max_slope_rel_defect: analysis.max_rel_defect,
        anisotropy_tolerance,
        slope_tolerance,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_geometry;
    use crate::potential::optical_lattice;
    use approx::assert_relative_eq;

    fn geom() -> LatticeGeometry {
        build_geometry(1.0).unwrap()
    }

    #[test]
    fn free_operator_is_rejected_as_triple_crossing() {
        let g = geom();
        let err = detect_dirac(&g, &PotentialSpectrum::zero(), 0.0, 4, Vertex::K);
        assert!(
            matches!(err, Err(DiracError::ExceptionalEpsilon { .. })),
            "got {err:?}"
        );
    }

    #[test]
    fn optical_crossing_band_indices_follow_the_sign_of_epsilon() {
        let g = geom();
        let v = optical_lattice(1.0);
        let plus = detect_dirac(&g, &v, 0.1, 4, Vertex::K).unwrap();
        assert_eq!(plus.band_indices, (1, 2));
        let minus = detect_dirac(&g, &v, -0.1, 4, Vertex::K).unwrap();
        assert_eq!(minus.band_indices, (2, 3));
    }

    #[test]
    fn lambda_sharp_approaches_free_limit_for_weak_coupling() {
        let g = geom();
        let v = optical_lattice(1.0);
        let point = detect_dirac(&g, &v, 0.01, 4, Vertex::K).unwrap();
        let free_limit = 4.0 * std::f64::consts::PI / 3.0;
        assert_relative_eq!(point.lambda_sharp.norm(), free_limit, max_relative = 0.02);
    }

    #[test]
    fn lambda_sharp_invariances() {
        let g = geom();
        let v = optical_lattice(1.0);
        let p = detect_dirac(&g, &v, 0.3, 4, Vertex::K).unwrap();
        let lam = p.lambda_sharp;

        // Global phase e^{iα}: λ_♯ scales by e^{2iα}, |λ_♯| unchanged.
        let alpha = 0.7391_f64;
        let phase = C64::new(0.0, alpha).exp();
        let rotated: Vec<C64> = p.tau_coeffs.iter().map(|&c| c * phase).collect();
        let lam_rot = lambda_sharp(&g, p.k_star, &p.representatives, &rotated);
        assert!((lam_rot - lam * phase * phase).norm() <= 1e-12 * lam.norm());
        assert!((lam_rot.norm() - lam.norm()).abs() <= 1e-12 * lam.norm());

        // Relabeling an orbit by its ℛ-image (with the transported
        // coefficient σ̄c) leaves λ_♯ unchanged.
        let sigma_bar = SymmetrySector::Tau.value().conj();
        let mut reps = p.representatives.clone();
        let mut coeffs = p.tau_coeffs.clone();
        for i in [0usize, reps.len() / 2, reps.len() - 1] {
            reps[i] = index_vertex_r_action(p.vertex, reps[i]);
            coeffs[i] *= sigma_bar;
        }
        let lam_relabel = lambda_sharp(&g, p.k_star, &reps, &coeffs);
        assert!(
            (lam_relabel - lam).norm() <= 1e-12 * lam.norm(),
            "relabeled {lam_relabel} vs {lam}"
        );
    }

    #[test]
    fn m0_identities_hold_for_the_detected_eigenvector() {
        let g = geom();
        let v = optical_lattice(1.0);
        let p = detect_dirac(&g, &v, 0.3, 4, Vertex::K).unwrap();
        let d = expand_sector_coeffs(p.vertex, &p.representatives, &p.tau_coeffs, SymmetrySector::Tau);

        // Expansion preserves the unit-L²(Ω) normalization.
        let total: f64 = d.values().map(|c| c.norm_sqr()).sum();
        assert_relative_eq!(g.cell_area * total, 1.0, max_relative = 1e-12);

        for kappa in [
            Vector2::new(1.0, 0.0),
            Vector2::new(-0.3, 2.1),
            Vector2::new(0.577, -0.211),
        ] {
            let (diag, off) = matrix_elements_m0(&g, p.k_star, &d, kappa);
            assert!(diag.norm() <= 1e-10 * kappa.norm(), "diag = {diag}");
            let predicted = -p.lambda_sharp.conj() * C64::new(kappa.x, kappa.y);
            assert!(
                (off - predicted).norm() <= 1e-8 * predicted.norm(),
                "offdiag {off} vs predicted {predicted}"
            );
        }
        // κ = 0 gives exactly zero.
        let (diag0, off0) = matrix_elements_m0(&g, p.k_star, &d, Vector2::zeros());
        assert_eq!(diag0, C64::new(0.0, 0.0));
        assert_eq!(off0, C64::new(0.0, 0.0));
    }

    #[test]
    fn detection_agrees_between_the_two_vertices() {
        let g = geom();
        let v = optical_lattice(1.0);
        let at_k = detect_dirac(&g, &v, 0.3, 4, Vertex::K).unwrap();
        let at_kp = detect_dirac(&g, &v, 0.3, 4, Vertex::KPrime).unwrap();
        assert_relative_eq!(at_k.mu_star, at_kp.mu_star, max_relative = 1e-8);
        assert_relative_eq!(
            at_k.lambda_sharp.norm(),
            at_kp.lambda_sharp.norm(),
            max_relative = 1e-8
        );
        assert_eq!(at_k.band_indices, at_kp.band_indices);
    }

    #[test]
    fn cone_slopes_match_lambda_sharp() {
        let g = geom();
        let v = optical_lattice(1.0);
        let p = detect_dirac(&g, &v, 0.3, 5, Vertex::K).unwrap();
        let dirs = uniform_directions(4);
        let radii = default_cone_radii(&p);
        let analysis = fit_cone(&g, &v, &p, &dirs, &radii).unwrap();
        assert!(
            analysis.max_rel_defect < 5e-3,
            "slope defect {:.3e}",
            analysis.max_rel_defect
        );
        assert!(
            analysis.max_anisotropy < 1e-2,
            "anisotropy {:.3e}",
            analysis.max_anisotropy
        );
        // The even combination μ₊+μ₋-2μ⋆ decays quadratically: halving the
        // radius cuts it by ~4.
        for fit in &analysis.fits {
            let big = fit.even_part.last().unwrap().abs();
            let small = fit.even_part.first().unwrap().abs();
            assert!(small <= 0.45 * big, "even part not quadratic: {small} vs {big}");
        }
        let report = dirac_report(&p, &analysis, 0.01, 0.005);
        assert!(report.verdict);
        assert_eq!(report.band_indices, [1, 2]);
    }

    #[test]
    fn radius_ladder_is_ascending() {
        let r = radius_ladder(0.4, 3);
        assert_eq!(r, vec![0.1, 0.2, 0.4]);
        assert_eq!(uniform_directions(8).len(), 8);
    }
}
