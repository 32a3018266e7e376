//! Plane-wave (Fourier) discretization of the Bloch eigenvalue problem.
//!
//! For quasimomentum `k` the operator `-Δ + ε V` acts on `L²` of the cell
//! with `k`-pseudoperiodic boundary conditions; in the plane-wave basis
//! `e^{i(k + m·k)·x}` it becomes the Hermitian matrix
//!
//! ```text
//! H[i, j] = |k + m_i·k|² δ_ij + ε V_{m_i - m_j},      m·k = m1 k1 + m2 k2,
//! ```
//!
//! truncated to `|m1|, |m2| ≤ M`. At the zone vertex `K` a honeycomb
//! potential additionally commutes with the cell rotation, and the problem
//! block-diagonalizes over the three rotation eigenspaces; the blocks are
//! assembled directly on cycle representatives by [`assemble_sector`] with
//! kernel
//!
//! ```text
//! K_σ(m, r) = V_{m-r} + σ̄ V_{m-ℛr} + σ V_{m-ℛ²r}
//! ```
//!
//! (`ℛ` the affine index action at `K`). Eigenpairs come from a dense
//! Hermitian eigendecomposition; every solve verifies Hermiticity of the
//! input and the residual of each returned pair, so silent numerical
//! corruption surfaces as an error instead of bad data.

use nalgebra::{DMatrix, DVector, Vector2};
use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{
    index_vertex_r2_action, index_vertex_r_action, kvec_of_index, CycleTable, FourierIndex,
    LatticeGeometry, SymmetrySector,
};
use crate::potential::PotentialSpectrum;
use crate::C64;

/// Relative Hermiticity tolerance for assembled matrices.
pub const HERMITICITY_TOL_REL: f64 = 1e-12;
/// Residual tolerance for a returned eigenpair: `‖Hv - μv‖ ≤ tol·(1+|μ|)`.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Errors from assembly and eigensolves.
#[derive(Debug, Error)]
pub enum SpectralError {
    /// Sector reduction is only valid for real, even, R-invariant potentials.
    #[error(
        "sector reduction requires a honeycomb potential \
         (defects: reality {reality:.2e}, evenness {evenness:.2e}, R-invariance {r_invariance:.2e})"
    )]
    NotHoneycomb {
        reality: f64,
        evenness: f64,
        r_invariance: f64,
    },
    /// Assembled matrix failed the Hermiticity check.
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },
    /// The iterative eigensolver did not converge.
    #[error("Hermitian eigendecomposition failed to converge (dim {dim})")]
    EigenFailed { dim: usize },
    /// An eigenpair failed its residual check.
    #[error("eigenpair {band} residual {residual:.3e} exceeds {tol:.3e}")]
    LargeResidual {
        band: usize,
        residual: f64,
        tol: f64,
    },
    /// More eigenvalues requested than the matrix dimension.
    #[error("requested {requested} eigenvalues from a dimension-{dim} problem")]
    TooManyBands { requested: usize, dim: usize },
    /// Unknown token in a named k-path.
    #[error("unknown k-path token {0:?} (expected G, K, K', or M)")]
    BadPathToken(String),
}

/// Full plane-wave basis `{m : |m1|, |m2| ≤ M}` in ascending index order.
#[derive(Debug, Clone)]
pub struct PlanewaveBasis {
    pub truncation: u32,
    pub indices: Vec<FourierIndex>,
}

impl PlanewaveBasis {
    pub fn new(truncation: u32) -> Self {
        let m = truncation as i32;
        let mut indices = Vec::with_capacity(((2 * m + 1) * (2 * m + 1)) as usize);
        for m1 in -m..=m {
            for m2 in -m..=m {
                indices.push(FourierIndex::new(m1, m2));
            }
        }
        PlanewaveBasis {
            truncation,
            indices,
        }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

/// Assembles the full plane-wave Hamiltonian of `-Δ + ε V` at
/// quasimomentum `k`.
///
/// Works for any potential spectrum; the result is Hermitian exactly when
/// the potential is real-valued, which [`solve_lowest`] verifies.
pub fn assemble_full(
    geom: &LatticeGeometry,
    basis: &PlanewaveBasis,
    v: &PotentialSpectrum,
    epsilon: f64,
    k: Vector2<f64>,
) -> DMatrix<C64> {
    let n = basis.dim();
    let mut h = DMatrix::<C64>::zeros(n, n);
    for (i, &mi) in basis.indices.iter().enumerate() {
        for (j, &mj) in basis.indices.iter().enumerate() {
            let mut entry = v.coefficient(mi - mj) * epsilon;
            if i == j {
                entry += C64::new(kvec_of_index(geom, k, mi).norm_squared(), 0.0);
            }
            h[(i, j)] = entry;
        }
    }
    h
}

/// Assembles one rotation-sector block of the Hamiltonian at the vertex the
/// cycle table was built for (`K` or `K′`), on its orbit representatives.
///
/// Requires a honeycomb potential — for anything else the rotation does not
/// commute with the operator and the block structure is meaningless.
pub fn assemble_sector(
    geom: &LatticeGeometry,
    table: &CycleTable,
    v: &PotentialSpectrum,
    epsilon: f64,
    sector: SymmetrySector,
) -> Result<DMatrix<C64>, SpectralError> {
    if !v.is_honeycomb() {
        let report = v.honeycomb_check(crate::potential::SYMMETRY_TOL_REL);
        return Err(SpectralError::NotHoneycomb {
            reality: report.max_reality_defect,
            evenness: report.max_evenness_defect,
            r_invariance: report.max_r_invariance_defect,
        });
    }
    let sigma = sector.value();
    let sigma_bar = sigma.conj();
    let reps = &table.representatives;
    let n = reps.len();
    let vertex = table.vertex;
    let k_star = vertex.point(geom);

    let mut h = DMatrix::<C64>::zeros(n, n);
    for (i, &m) in reps.iter().enumerate() {
        for (j, &r) in reps.iter().enumerate() {
            let mut entry = (v.coefficient(m - r)
                + sigma_bar * v.coefficient(m - index_vertex_r_action(vertex, r))
                + sigma * v.coefficient(m - index_vertex_r2_action(vertex, r)))
                * epsilon;
            if i == j {
                entry += C64::new(kvec_of_index(geom, k_star, m).norm_squared(), 0.0);
            }
            h[(i, j)] = entry;
        }
    }
    Ok(h)
}

/// Largest `|H[i,j] - conj(H[j,i])|` over the matrix.
pub fn hermiticity_defect(h: &DMatrix<C64>) -> f64 {
    let n = h.nrows();
    let mut defect = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            defect = defect.max((h[(i, j)] - h[(j, i)].conj()).norm());
        }
    }
    defect
}

/// The lowest eigenpairs of a Hermitian matrix, ascending.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// Ascending eigenvalues, `n_bands` of them.
    pub eigenvalues: Vec<f64>,
    /// Matching eigenvectors: unit norm, phase fixed so the largest-modulus
    /// component is real positive (ties broken by basis position).
    pub eigenvectors: Vec<DVector<C64>>,
    /// Residuals `‖Hv - μv‖` of each returned pair.
    pub residuals: Vec<f64>,
}

/// Computes the `n_bands` lowest eigenpairs of `h`.
///
/// Verifies that `h` is Hermitian to rounding and that every returned pair
/// satisfies the residual bound [`RESIDUAL_TOL`]`·(1+|μ|)`; both failures are
/// reported as errors rather than degraded output. Output is deterministic:
/// ties in the spectrum keep the eigensolver's order, and each vector's
/// phase is fixed canonically.
pub fn solve_lowest(h: &DMatrix<C64>, n_bands: usize) -> Result<EigenSolution, SpectralError> {
    let dim = h.nrows();
    if n_bands > dim {
        return Err(SpectralError::TooManyBands {
            requested: n_bands,
            dim,
        });
    }

    let scale = h.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let defect = hermiticity_defect(h);
    let herm_tol = HERMITICITY_TOL_REL * scale.max(1.0);
    if defect > herm_tol {
        return Err(SpectralError::NotHermitian {
            defect,
            tol: herm_tol,
        });
    }

    let eigen = nalgebra::linalg::SymmetricEigen::try_new(h.clone(), f64::EPSILON, 0)
        .ok_or(SpectralError::EigenFailed { dim })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[a]
            .partial_cmp(&eigen.eigenvalues[b])
            .expect("eigenvalues of a Hermitian matrix are finite")
    });

    let mut eigenvalues = Vec::with_capacity(n_bands);
    let mut eigenvectors = Vec::with_capacity(n_bands);
    let mut residuals = Vec::with_capacity(n_bands);
    for (band, &col) in order.iter().take(n_bands).enumerate() {
        let mu = eigen.eigenvalues[col];
        let mut v: DVector<C64> = eigen.eigenvectors.column(col).into_owned();
        let norm = v.norm();
        v /= C64::new(norm, 0.0);
        fix_phase(&mut v);

        let residual = (h * &v - &v * C64::new(mu, 0.0)).norm();
        let tol = RESIDUAL_TOL * (1.0 + mu.abs());
        if residual > tol {
            return Err(SpectralError::LargeResidual {
                band,
                residual,
                tol,
            });
        }
        eigenvalues.push(mu);
        eigenvectors.push(v);
        residuals.push(residual);
    }

    Ok(EigenSolution {
        eigenvalues,
        eigenvectors,
        residuals,
    })
}

/// Rotates a vector's global phase so its largest-modulus component is real
/// positive; ties go to the lowest index. No-op on the zero vector.
fn fix_phase(v: &mut DVector<C64>) {
    let mut best = 0usize;
    let mut best_norm = 0.0_f64;
    for (i, c) in v.iter().enumerate() {
        let n = c.norm();
        if n > best_norm {
            best_norm = n;
            best = i;
        }
    }
    if best_norm > 0.0 {
        let phase = v[best] / C64::new(best_norm, 0.0);
        let correction = phase.conj();
        for c in v.iter_mut() {
            *c *= correction;
        }
    }
}

/// Eigenvalues along a path of k-points, plus the data needed to plot them.
#[derive(Debug, Clone)]
pub struct BandTable {
    /// Cumulative arclength along the path.
    pub arclength: Vec<f64>,
    pub kpoints: Vec<Vector2<f64>>,
    /// `bands[i]` holds the ascending eigenvalues at `kpoints[i]`.
    pub bands: Vec<Vec<f64>>,
    pub n_bands: usize,
}

impl BandTable {
    /// Renders the table as CSV: header `idx,s,kx,ky,band_1,...`, one row
    /// per k-point, `,` separator, `.` decimal point, `\n` line endings.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str("idx,s,kx,ky");
        for b in 1..=self.n_bands {
            out.push_str(&format!(",band_{b}"));
        }
        out.push('\n');
        for (i, k) in self.kpoints.iter().enumerate() {
            out.push_str(&format!("{i},{},{},{}", self.arclength[i], k.x, k.y));
            for mu in &self.bands[i] {
                out.push_str(&format!(",{mu}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Solves the lowest `n_bands` eigenvalues at every point of `kpoints`
/// (in parallel) and tabulates them against cumulative arclength.
pub fn band_path(
    geom: &LatticeGeometry,
    v: &PotentialSpectrum,
    epsilon: f64,
    truncation: u32,
    kpoints: &[Vector2<f64>],
    n_bands: usize,
) -> Result<BandTable, SpectralError> {
    let basis = PlanewaveBasis::new(truncation);
    let bands: Vec<Vec<f64>> = kpoints
        .par_iter()
        .map(|&k| {
            let h = assemble_full(geom, &basis, v, epsilon, k);
            solve_lowest(&h, n_bands).map(|sol| sol.eigenvalues)
        })
        .collect::<Result<_, _>>()?;

    let mut arclength = Vec::with_capacity(kpoints.len());
    let mut s = 0.0;
    for (i, k) in kpoints.iter().enumerate() {
        if i > 0 {
            s += (k - kpoints[i - 1]).norm();
        }
        arclength.push(s);
    }

    Ok(BandTable {
        arclength,
        kpoints: kpoints.to_vec(),
        bands,
        n_bands,
    })
}

/// Uniformly samples the polyline through `corners`, `per_segment` points
/// per segment, endpoints included once.
pub fn sample_path(corners: &[Vector2<f64>], per_segment: usize) -> Vec<Vector2<f64>> {
    let mut points = Vec::new();
    if corners.is_empty() {
        return points;
    }
    points.push(corners[0]);
    for seg in corners.windows(2) {
        for i in 1..=per_segment {
            let t = i as f64 / per_segment as f64;
            points.push(seg[0] * (1.0 - t) + seg[1] * t);
        }
    }
    points
}

/// Resolves a hyphen-separated named path such as `"G-K-M-G"` into corner
/// points: `G = (0,0)`, `K`/`K'` the zone vertices, `M = k1/2`.
pub fn named_path(
    geom: &LatticeGeometry,
    name: &str,
) -> Result<Vec<Vector2<f64>>, SpectralError> {
    name.split('-')
        .map(|token| match token.trim() {
            "G" | "g" | "Gamma" | "gamma" => Ok(Vector2::new(0.0, 0.0)),
            "K" | "k" => Ok(geom.k_vertex),
            "K'" | "k'" => Ok(geom.k_vertex_prime),
            "M" | "m" => Ok(geom.k1 / 2.0),
            other => Err(SpectralError::BadPathToken(other.to_string())),
        })
        .collect()
}

/// Eigenvalues of the same problem at a sequence of truncations, with the
/// largest relative change between consecutive truncations.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub truncations: Vec<u32>,
    /// `eigenvalues[i]` = lowest eigenvalues at `truncations[i]`.
    pub eigenvalues: Vec<Vec<f64>>,
    /// `max_rel_change[i]` compares rows `i` and `i+1`; length is one less
    /// than `truncations`.
    pub max_rel_change: Vec<f64>,
}

/// Measures truncation convergence of the lowest `n_bands` eigenvalues of
/// the full problem at `k`.
pub fn convergence_study(
    geom: &LatticeGeometry,
    v: &PotentialSpectrum,
    epsilon: f64,
    k: Vector2<f64>,
    truncations: &[u32],
    n_bands: usize,
) -> Result<ConvergenceReport, SpectralError> {
    let mut eigenvalues = Vec::with_capacity(truncations.len());
    for &m in truncations {
        let basis = PlanewaveBasis::new(m);
        let h = assemble_full(geom, &basis, v, epsilon, k);
        eigenvalues.push(solve_lowest(&h, n_bands)?.eigenvalues);
    }
    let max_rel_change = eigenvalues
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(&w[1])
                .map(|(a, b)| (a - b).abs() / (1.0 + b.abs()))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(ConvergenceReport {
        truncations: truncations.to_vec(),
        eigenvalues,
        max_rel_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_geometry, cycle_representatives};
    use crate::potential::{from_fourier, optical_lattice};
    use approx::assert_relative_eq;

    fn geom() -> LatticeGeometry {
        build_geometry(1.0).unwrap()
    }

    /// Free eigenvalues at `k` are exactly the sorted `|k + m·k|²`.
    fn free_oracle(geom: &LatticeGeometry, basis: &PlanewaveBasis, k: Vector2<f64>) -> Vec<f64> {
        let mut vals: Vec<f64> = basis
            .indices
            .iter()
            .map(|&m| kvec_of_index(geom, k, m).norm_squared())
            .collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals
    }

    #[test]
    fn basis_enumeration() {
        let basis = PlanewaveBasis::new(2);
        assert_eq!(basis.dim(), 25);
        assert_eq!(basis.indices[0], FourierIndex::new(-2, -2));
        assert_eq!(basis.indices[24], FourierIndex::new(2, 2));
    }

    #[test]
    fn free_operator_matches_dispersion_oracle() {
        let geom = geom();
        let basis = PlanewaveBasis::new(3);
        let k = Vector2::new(0.37, -1.21);
        let h = assemble_full(&geom, &basis, &PotentialSpectrum::zero(), 0.0, k);
        let sol = solve_lowest(&h, basis.dim()).unwrap();
        let oracle = free_oracle(&geom, &basis, k);
        for (a, b) in sol.eigenvalues.iter().zip(&oracle) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn free_triple_at_vertex() {
        let geom = geom();
        let basis = PlanewaveBasis::new(4);
        let h = assemble_full(&geom, &basis, &PotentialSpectrum::zero(), 0.0, geom.k_vertex);
        let sol = solve_lowest(&h, 4).unwrap();
        let expected = geom.q * geom.q / 3.0;
        for i in 0..3 {
            assert_relative_eq!(sol.eigenvalues[i], expected, max_relative = 1e-12);
        }
        // the next free level sits at 4q²/3, far above
        assert_relative_eq!(sol.eigenvalues[3], 4.0 * expected, max_relative = 1e-12);
    }

    #[test]
    fn sector_blocks_reassemble_full_spectrum_at_vertex() {
        let geom = geom();
        let v = optical_lattice(1.0);
        let eps = 0.3;
        let truncation = 6;

        let basis = PlanewaveBasis::new(truncation);
        let h = assemble_full(&geom, &basis, &v, eps, geom.k_vertex);
        let full = solve_lowest(&h, 12).unwrap().eigenvalues;

        let table = cycle_representatives(truncation);
        let mut union: Vec<f64> = Vec::new();
        for sector in SymmetrySector::ALL {
            let hs = assemble_sector(&geom, &table, &v, eps, sector).unwrap();
            union.extend(solve_lowest(&hs, 12).unwrap().eigenvalues);
        }
        union.sort_by(|a, b| a.partial_cmp(b).unwrap());

        for (i, (a, b)) in full.iter().zip(&union).enumerate() {
            assert!(
                (a - b).abs() <= 1e-10 * (1.0 + b.abs()),
                "eigenvalue {i}: full {a} vs sector union {b}"
            );
        }
    }

    #[test]
    fn sector_dimensions_partition_the_universe() {
        let table = cycle_representatives(5);
        let geom = geom();
        let v = optical_lattice(1.0);
        for sector in SymmetrySector::ALL {
            let hs = assemble_sector(&geom, &table, &v, 0.1, sector).unwrap();
            assert_eq!(hs.nrows(), table.orbit_count());
        }
        assert_eq!(3 * table.orbit_count(), table.index_count());
    }

    #[test]
    fn sector_assembly_rejects_non_honeycomb() {
        let geom = geom();
        let table = cycle_representatives(3);
        let sine = from_fourier(&[
            (FourierIndex::new(1, 0), C64::new(0.0, -0.5)),
            (FourierIndex::new(-1, 0), C64::new(0.0, 0.5)),
        ]);
        let err = assemble_sector(&geom, &table, &sine, 0.1, SymmetrySector::Tau);
        assert!(matches!(err, Err(SpectralError::NotHoneycomb { .. })));
    }

    #[test]
    fn solve_rejects_non_hermitian() {
        let mut h = DMatrix::<C64>::zeros(2, 2);
        h[(0, 1)] = C64::new(1.0, 0.0);
        h[(1, 0)] = C64::new(2.0, 0.0);
        assert!(matches!(
            solve_lowest(&h, 1),
            Err(SpectralError::NotHermitian { .. })
        ));
    }

    #[test]
    fn solve_rejects_oversized_request() {
        let h = DMatrix::<C64>::zeros(3, 3);
        assert!(matches!(
            solve_lowest(&h, 4),
            Err(SpectralError::TooManyBands { .. })
        ));
    }

    #[test]
    fn eigenvectors_are_normalized_phase_fixed_and_deterministic() {
        let geom = geom();
        let basis = PlanewaveBasis::new(3);
        let v = optical_lattice(1.0);
        let h = assemble_full(&geom, &basis, &v, 0.3, geom.k_vertex);
        let a = solve_lowest(&h, 5).unwrap();
        let b = solve_lowest(&h, 5).unwrap();
        for (va, vb) in a.eigenvectors.iter().zip(&b.eigenvectors) {
            assert_relative_eq!(va.norm(), 1.0, max_relative = 1e-12);
            assert_eq!(va, vb, "repeated solves must agree bit for bit");
            let (imax, cmax) = va
                .iter()
                .enumerate()
                .max_by(|(_, x), (_, y)| x.norm().partial_cmp(&y.norm()).unwrap())
                .unwrap();
            assert!(cmax.im.abs() < 1e-13, "component {imax} not phase-fixed");
            assert!(cmax.re > 0.0);
        }
    }

    #[test]
    fn band_path_csv_layout() {
        let geom = geom();
        let corners = named_path(&geom, "G-K-M-G").unwrap();
        assert_eq!(corners.len(), 4);
        let kpts = sample_path(&corners, 3);
        assert_eq!(kpts.len(), 10);
        let table = band_path(&geom, &optical_lattice(1.0), 0.2, 3, &kpts, 4).unwrap();
        let csv = table.to_csv_string();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "idx,s,kx,ky,band_1,band_2,band_3,band_4");
        assert_eq!(csv.lines().count(), 11);
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,0,0,0,"), "got {first:?}");
        // arclength is strictly increasing along this path
        for w in table.arclength.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn named_path_rejects_unknown_tokens() {
        let geom = geom();
        assert!(matches!(
            named_path(&geom, "G-X"),
            Err(SpectralError::BadPathToken(_))
        ));
    }

    #[test]
    fn convergence_study_shrinks_with_truncation() {
        let geom = geom();
        let v = optical_lattice(1.0);
        let report =
            convergence_study(&geom, &v, 0.3, geom.k_vertex, &[2, 4, 6], 5).unwrap();
        assert_eq!(report.max_rel_change.len(), 2);
        assert!(report.max_rel_change[1] < report.max_rel_change[0]);
        assert!(report.max_rel_change[1] < 1e-8);
    }
}
