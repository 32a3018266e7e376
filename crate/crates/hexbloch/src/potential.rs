//! Real periodic potentials as finite Fourier coefficient maps.
//!
//! A potential is stored purely spectrally: a finite map `m ↦ V_m` with
//! `V(x) = Σ_m V_m e^{i m·k x}`, `m·k = m1 k1 + m2 k2`. Real-space values
//! are derived via [`PotentialSpectrum::evaluate`]. Symmetry metadata is
//! *computed*, never asserted:
//!
//! - real-valued ⇔ `V_{-m} = conj(V_m)`;
//! - even ⇔ `V_{-m} = V_m` (with reality this forces all `V_m` real);
//! - R-invariant ⇔ `V_m = V_{R̃m} = V_{R̃²m}` under the linear index action.
//!
//! A potential with all three properties is called *honeycomb* here; this is
//! the class for which the sector reduction at the zone vertices applies.
//!
//! Two closed-form honeycomb families are provided: [`optical_lattice`]
//! (the three-beam interference profile `V0 (cos k1·x + cos k2·x +
//! cos (k1+k2)·x)`) and [`atomic_lattice`] (a Gaussian bump on every site of
//! the two-site honeycomb structure, re-centered so the symmetries hold about
//! the origin).
//!
//! Defects are measured against the tolerance [`SYMMETRY_TOL_REL`] relative
//! to the largest coefficient magnitude; the closed-form constructions are
//! exact to rounding.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{index_tr2_action, index_tr_action, FourierIndex, LatticeGeometry};
use crate::C64;

/// Default relative symmetry tolerance (relative to ‖coeffs‖∞).
pub const SYMMETRY_TOL_REL: f64 = 1e-10;

/// Errors from potential construction and coefficient queries.
#[derive(Debug, Error)]
pub enum PotentialError {
    /// Gaussian width must be a positive, finite length.
    #[error("Gaussian width must be positive and finite, got {0}")]
    BadGaussianWidth(f64),
    /// An operation required a real, even potential.
    #[error(
        "potential is not real and even (reality defect {reality_defect:.3e}, \
         evenness defect {evenness_defect:.3e})"
    )]
    NotRealEven {
        reality_defect: f64,
        evenness_defect: f64,
    },
    /// A coefficient expected to be real had a large imaginary part.
    #[error("coefficient {index} = {value} has imaginary part beyond tolerance {tol:.3e}")]
    NonRealCoefficient {
        index: FourierIndex,
        value: C64,
        tol: f64,
    },
    /// Malformed potential file.
    #[error("failed to parse potential file: {0}")]
    Parse(String),
}

/// A real periodic potential as a finite Fourier coefficient map, with
/// computed symmetry flags. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpectrum {
    coeffs: BTreeMap<FourierIndex, C64>,
    /// `V_{-m} = conj(V_m)` for all m (at tolerance).
    pub is_real_valued: bool,
    /// `V_{-m} = V_m` for all m (at tolerance).
    pub is_even: bool,
    /// `V_m = V_{R̃m} = V_{R̃²m}` for all m (at tolerance).
    pub is_r_invariant: bool,
}

/// Symmetry defect report for the honeycomb-potential checks.
///
/// Each verdict is `defect ≤ tolerance`, with `tolerance` the absolute
/// threshold derived from [`SYMMETRY_TOL_REL`].
#[derive(Debug, Clone, Serialize)]
pub struct HoneycombCheckReport {
    pub max_reality_defect: f64,
    pub max_evenness_defect: f64,
    pub max_r_invariance_defect: f64,
    /// Absolute tolerance the verdicts were taken at.
    pub tolerance: f64,
    pub is_real_valued: bool,
    pub is_even: bool,
    pub is_r_invariant: bool,
}

impl HoneycombCheckReport {
    /// True when all three symmetry verdicts hold.
    pub fn all_pass(&self) -> bool {
        self.is_real_valued && self.is_even && self.is_r_invariant
    }
}

impl PotentialSpectrum {
    /// The zero potential.
    pub fn zero() -> Self {
        from_fourier(&[])
    }

    /// Coefficient `V_m` (zero when absent from the map).
    pub fn coefficient(&self, m: FourierIndex) -> C64 {
        self.coeffs.get(&m).copied().unwrap_or_else(|| C64::new(0.0, 0.0))
    }

    /// Iterator over stored `(m, V_m)` pairs, ascending in `m`.
    pub fn coefficients(&self) -> impl Iterator<Item = (FourierIndex, C64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest coefficient magnitude, `‖coeffs‖∞`.
    pub fn linf_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Sum of coefficient magnitudes, `‖coeffs‖₁`.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }

    /// Symmetry defects and verdicts at relative tolerance `tol_rel`.
    pub fn honeycomb_check(&self, tol_rel: f64) -> HoneycombCheckReport {
        let tol = tol_rel * self.linf_norm();
        let (r, e, ri) = symmetry_defects(&self.coeffs);
        HoneycombCheckReport {
            max_reality_defect: r,
            max_evenness_defect: e,
            max_r_invariance_defect: ri,
            tolerance: tol,
            is_real_valued: r <= tol,
            is_even: e <= tol,
            is_r_invariant: ri <= tol,
        }
    }

    /// True when all three symmetry flags hold (the honeycomb class).
    pub fn is_honeycomb(&self) -> bool {
        self.is_real_valued && self.is_even && self.is_r_invariant
    }

    /// The coefficient `V_{(1,1)}` as a real number.
    ///
    /// This is the genericity quantity controlling the eigenvalue splitting
    /// at the zone vertices; it is well-defined as a real number only for
    /// real, even potentials, so non-real-even inputs are rejected, as is a
    /// stored coefficient with an imaginary part beyond tolerance.
    pub fn coefficient_v11(&self) -> Result<f64, PotentialError> {
        if !self.is_real_valued || !self.is_even {
            let (r, e, _) = symmetry_defects(&self.coeffs);
            return Err(PotentialError::NotRealEven {
                reality_defect: r,
                evenness_defect: e,
            });
        }
        let idx = FourierIndex::new(1, 1);
        let v = self.coefficient(idx);
        let tol = SYMMETRY_TOL_REL * self.linf_norm().max(f64::MIN_POSITIVE);
        if v.im.abs() > tol {
            return Err(PotentialError::NonRealCoefficient {
                index: idx,
                value: v,
                tol,
            });
        }
        Ok(v.re)
    }

    /// Partial Fourier sum at `x`, as a complex number.
    pub fn evaluate_complex(&self, geom: &LatticeGeometry, x: Vector2<f64>) -> C64 {
        let mut sum = C64::new(0.0, 0.0);
        for (&m, &c) in &self.coeffs {
            let mk = geom.k1 * f64::from(m.m1) + geom.k2 * f64::from(m.m2);
            sum += c * C64::new(0.0, mk.dot(&x)).exp();
        }
        sum
    }

    /// Partial Fourier sum at `x`.
    ///
    /// Returns the real part; for real potentials the imaginary residue is
    /// below `1e-10 · ‖coeffs‖₁`.
    pub fn evaluate(&self, geom: &LatticeGeometry, x: Vector2<f64>) -> f64 {
        self.evaluate_complex(geom, x).re
    }

    /// Minimum and maximum of the potential over the fundamental cell,
    /// estimated on an `n × n` uniform grid in cell coordinates.
    ///
    /// A modest `n` (64) resolves the smooth, low-bandwidth potentials this
    /// crate works with far below other tolerances in play.
    pub fn cell_range(&self, geom: &LatticeGeometry, n: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let x = geom.v1 * (i as f64 / n as f64) + geom.v2 * (j as f64 / n as f64);
                let v = self.evaluate(geom, x);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    /// `factor · V` as a new spectrum.
    pub fn scaled(&self, factor: f64) -> PotentialSpectrum {
        let entries: Vec<(FourierIndex, C64)> = self
            .coeffs
            .iter()
            .map(|(&m, &c)| (m, c * factor))
            .collect();
        from_fourier(&entries)
    }

    /// Linear combination `Σ_i factor_i · V_i` as a new spectrum.
    pub fn linear_combination(terms: &[(f64, &PotentialSpectrum)]) -> PotentialSpectrum {
        let mut entries: Vec<(FourierIndex, C64)> = Vec::new();
        for &(factor, v) in terms {
            for (m, c) in v.coefficients() {
                entries.push((m, c * factor));
            }
        }
        from_fourier(&entries)
    }

    /// The odd part `(V(x) - V(-x))/2`, spectrally `(V_m - V_{-m})/2`.
    pub fn odd_part(&self) -> PotentialSpectrum {
        let keys: BTreeSet<FourierIndex> = self
            .coeffs
            .keys()
            .flat_map(|&m| [m, -m])
            .collect();
        let entries: Vec<(FourierIndex, C64)> = keys
            .into_iter()
            .map(|m| (m, (self.coefficient(m) - self.coefficient(-m)) * 0.5))
            .collect();
        from_fourier(&entries)
    }

    /// Serializes the coefficient map to the documented JSON schema:
    /// `{"kind": ..., "entries": [[m1, m2, re, im], ...]}` with entries in
    /// ascending index order.
    pub fn to_json_string(&self, kind: &str) -> String {
        let file = PotentialFile {
            kind: kind.to_string(),
            entries: self
                .coeffs
                .iter()
                .map(|(&m, &c)| (m.m1, m.m2, c.re, c.im))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("potential file serialization cannot fail")
    }

    /// Parses the documented JSON schema; returns the `kind` tag and the
    /// coefficient map (duplicates summed, flags computed).
    pub fn from_json_str(s: &str) -> Result<(String, PotentialSpectrum), PotentialError> {
        let file: PotentialFile =
            serde_json::from_str(s).map_err(|e| PotentialError::Parse(e.to_string()))?;
        let entries: Vec<(FourierIndex, C64)> = file
            .entries
            .iter()
            .map(|&(m1, m2, re, im)| (FourierIndex::new(m1, m2), C64::new(re, im)))
            .collect();
        Ok((file.kind, from_fourier(&entries)))
    }
}

/// On-disk potential schema: a `kind` tag plus `[[m1, m2, re, im], ...]`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialFile {
    kind: String,
    entries: Vec<(i32, i32, f64, f64)>,
}

/// Builds a spectrum from `(index, amplitude)` entries.
///
/// Duplicate indices are summed; coefficients that sum to exactly zero are
/// dropped; symmetry flags are computed at [`SYMMETRY_TOL_REL`].
pub fn from_fourier(entries: &[(FourierIndex, C64)]) -> PotentialSpectrum {
    let mut coeffs: BTreeMap<FourierIndex, C64> = BTreeMap::new();
    for &(m, c) in entries {
        *coeffs.entry(m).or_insert_with(|| C64::new(0.0, 0.0)) += c;
    }
    coeffs.retain(|_, c| c.re != 0.0 || c.im != 0.0);

    let linf = coeffs.values().map(|c| c.norm()).fold(0.0, f64::max);
    let tol = SYMMETRY_TOL_REL * linf;
    let (r, e, ri) = symmetry_defects(&coeffs);

    PotentialSpectrum {
        coeffs,
        is_real_valued: r <= tol,
        is_even: e <= tol,
        is_r_invariant: ri <= tol,
    }
}

/// Maximal (reality, evenness, R̃-invariance) defects over the orbit closure
/// of the stored index set; absent coefficients count as zero.
fn symmetry_defects(coeffs: &BTreeMap<FourierIndex, C64>) -> (f64, f64, f64) {
    let zero = C64::new(0.0, 0.0);
    let at = |m: FourierIndex| coeffs.get(&m).copied().unwrap_or(zero);

    let keys: BTreeSet<FourierIndex> = coeffs
        .keys()
        .flat_map(|&m| {
            let tr = index_tr_action(m);
            let tr2 = index_tr2_action(m);
            [m, -m, tr, tr2]
        })
        .collect();

    let mut reality = 0.0_f64;
    let mut evenness = 0.0_f64;
    let mut r_inv = 0.0_f64;
    for &m in &keys {
        let v = at(m);
        reality = reality.max((at(-m) - v.conj()).norm());
        evenness = evenness.max((at(-m) - v).norm());
        r_inv = r_inv
            .max((at(index_tr_action(m)) - v).norm())
            .max((at(index_tr2_action(m)) - v).norm());
    }
    (reality, evenness, r_inv)
}

/// The three-beam interference potential
/// `V0 (cos k1·x + cos k2·x + cos (k1+k2)·x)`.
///
/// Spectrally: `V_{±(1,0)} = V_{±(0,1)} = V_{±(1,1)} = V0/2`, everything else
/// zero. Real, even, and R-invariant by construction.
pub fn optical_lattice(v0: f64) -> PotentialSpectrum {
    let half = C64::new(v0 / 2.0, 0.0);
    let entries: Vec<(FourierIndex, C64)> = [(1, 0), (0, 1), (1, 1)]
        .into_iter()
        .flat_map(|(m1, m2)| {
            [
                (FourierIndex::new(m1, m2), half),
                (FourierIndex::new(-m1, -m2), half),
            ]
        })
        .collect();
    from_fourier(&entries)
}

/// A Gaussian bump of amplitude `v0` and width `s` placed on every site of
/// the honeycomb structure (the two triangular sublattices through
/// `A = (0,0)` and `B = a(1/√3, 0)`), truncated to `|m1|, |m2| ≤ M`.
///
/// Raw two-site coefficients are
/// `V_m = (v0 · 2πs²/|Ω|) · e^{-|m·k|² s²/2} · (1 + e^{-i m·k·B})`,
/// using the infinite-plane Gaussian transform (the periodization error is
/// `exp(-O(a²/s²))` and ignored for `s ≤ a/3`). The potential is then
/// translated so its symmetry point sits at the origin: the two-site profile
/// is even and R-invariant about the *hexagon centers* of the structure,
/// which are congruent to `-B` modulo the period lattice, so each coefficient
/// picks up the phase `e^{-i m·k·B}`. The resulting coefficients are real
/// (evenness + reality), and the symmetry flags verify the shift numerically.
pub fn atomic_lattice(
    geom: &LatticeGeometry,
    v0: f64,
    s: f64,
    truncation: u32,
) -> Result<PotentialSpectrum, PotentialError> {
    if s <= 0.0 || !s.is_finite() {
        return Err(PotentialError::BadGaussianWidth(s));
    }
    let m_max = truncation as i32;
    let prefactor = v0 * 2.0 * std::f64::consts::PI * s * s / geom.cell_area;

    let mut entries = Vec::with_capacity(((2 * m_max + 1) * (2 * m_max + 1)) as usize);
    for m1 in -m_max..=m_max {
        for m2 in -m_max..=m_max {
            let m = FourierIndex::new(m1, m2);
            let mk = geom.k1 * f64::from(m1) + geom.k2 * f64::from(m2);
            // m·k·B = 2π (m1+m2)/3; reduce the residue first so the phase is
            // exactly zero on the (m1+m2) ≡ 0 (mod 3) sublattice.
            let residue = (m1 + m2).rem_euclid(3);
            let theta = 2.0 * std::f64::consts::PI * f64::from(residue) / 3.0;
            let gauss = (-mk.norm_squared() * s * s / 2.0).exp();
            let site_phase = C64::new(0.0, -theta).exp();
            let two_site = C64::new(1.0, 0.0) + site_phase;
            // Translation to the hexagon center: multiply by e^{-i m·k·B}.
            let value = two_site * site_phase * (prefactor * gauss);
            entries.push((m, value));
        }
    }
    Ok(from_fourier(&entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_geometry;
    use approx::assert_relative_eq;

    #[test]
    fn empty_spectrum_is_trivially_honeycomb() {
        let v = from_fourier(&[]);
        assert!(v.is_empty());
        assert!(v.is_real_valued && v.is_even && v.is_r_invariant);
    }

    #[test]
    fn duplicates_are_summed() {
        let m = FourierIndex::new(1, 1);
        let v = from_fourier(&[(m, C64::new(0.25, 0.0)), (m, C64::new(0.25, 0.0))]);
        assert_eq!(v.coefficient(m), C64::new(0.5, 0.0));
        assert_eq!(v.len(), 1);
    }

    #[test]
    fn pair_without_orbit_closure_is_even_but_not_r_invariant() {
        let v = from_fourier(&[
            (FourierIndex::new(1, 1), C64::new(0.5, 0.0)),
            (FourierIndex::new(-1, -1), C64::new(0.5, 0.0)),
        ]);
        assert!(v.is_real_valued);
        assert!(v.is_even);
        // R̃(1,1) = (-1,0) carries no coefficient.
        assert!(!v.is_r_invariant);
    }

    #[test]
    fn optical_lattice_coefficients() {
        let v = optical_lattice(1.0);
        assert_eq!(v.coefficient(FourierIndex::new(1, 1)), C64::new(0.5, 0.0));
        assert_eq!(v.coefficient(FourierIndex::ZERO), C64::new(0.0, 0.0));
        assert_eq!(v.len(), 6);
        assert!(v.is_honeycomb());
        assert_relative_eq!(v.coefficient_v11().unwrap(), 0.5, max_relative = 1e-15);

        assert!(optical_lattice(0.0).is_empty());
    }

    #[test]
    fn optical_lattice_value_at_origin() {
        let geom = build_geometry(1.0).unwrap();
        let v = optical_lattice(1.0);
        assert_relative_eq!(v.evaluate(&geom, Vector2::new(0.0, 0.0)), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn atomic_lattice_flags_and_dc_term() {
        let geom = build_geometry(1.0).unwrap();
        let v = atomic_lattice(&geom, 1.0, 0.3, 6).unwrap();
        assert!(v.is_real_valued, "atomic coefficients must be real");
        assert!(v.is_even, "atomic potential must be even after the shift");
        assert!(v.is_r_invariant, "atomic potential must be R-invariant after the shift");

        let expected_dc = 2.0 * 2.0 * std::f64::consts::PI * 0.09 / geom.cell_area;
        assert_relative_eq!(
            v.coefficient(FourierIndex::ZERO).re,
            expected_dc,
            max_relative = 1e-12
        );
    }

    #[test]
    fn atomic_lattice_rejects_bad_width() {
        let geom = build_geometry(1.0).unwrap();
        assert!(atomic_lattice(&geom, 1.0, 0.0, 4).is_err());
        assert!(atomic_lattice(&geom, 1.0, -0.1, 4).is_err());
    }

    #[test]
    fn atomic_lattice_far_coefficients_decay() {
        let geom = build_geometry(1.0).unwrap();
        let v = atomic_lattice(&geom, 1.0, 0.9, 5).unwrap();
        // With s comparable to a, every off-center coefficient is tiny.
        let dc = v.coefficient(FourierIndex::ZERO).norm();
        let max_off = v
            .coefficients()
            .filter(|(m, _)| *m != FourierIndex::ZERO)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        assert!(max_off < 1e-8 * dc, "off-center/dc = {:.3e}", max_off / dc);
    }

    #[test]
    fn v11_requires_real_even() {
        let v = from_fourier(&[(FourierIndex::new(1, 1), C64::new(0.5, 0.3))]);
        assert!(matches!(
            v.coefficient_v11(),
            Err(PotentialError::NotRealEven { .. })
        ));
    }

    #[test]
    fn odd_part_of_sine() {
        // sin(k1·x) has coefficients ∓i/2 at ±(1,0); it is its own odd part.
        let v = from_fourier(&[
            (FourierIndex::new(1, 0), C64::new(0.0, -0.5)),
            (FourierIndex::new(-1, 0), C64::new(0.0, 0.5)),
        ]);
        assert!(v.is_real_valued);
        assert!(!v.is_even);
        let odd = v.odd_part();
        assert_eq!(odd.coefficient(FourierIndex::new(1, 0)), C64::new(0.0, -0.5));
        assert!(optical_lattice(1.0).odd_part().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let v = optical_lattice(0.75);
        let s = v.to_json_string("optical");
        let (kind, back) = PotentialSpectrum::from_json_str(&s).unwrap();
        assert_eq!(kind, "optical");
        assert_eq!(back, v);

        assert!(PotentialSpectrum::from_json_str("{\"bogus\": 1}").is_err());
    }
}
