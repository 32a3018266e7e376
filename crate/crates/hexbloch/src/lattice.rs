//! Honeycomb lattice geometry and Fourier-index combinatorics.
//!
//! The period lattice Λ_h is spanned by
//!
//! ```text
//! v1 = a (√3/2,  1/2),    v2 = a (√3/2, -1/2),
//! ```
//!
//! and its dual Λ_h* by `k1 = q (1/2, √3/2)`, `k2 = q (1/2, -√3/2)` with
//! `q = 4π/(a√3)`, so that `k_i · v_j = 2π δ_ij`. The Brillouin zone is a
//! hexagon whose two inequivalent vertex classes are represented by
//! `K = (k1 - k2)/3` and `K′ = -K`.
//!
//! The 2×2 matrix `R` here is the *clockwise* rotation by 2π/3. It permutes
//! the zone vertices (`R K = K + k2`, `R² K = K - k1`) and induces an affine
//! action on Fourier indices of K-quasi-periodic functions,
//!
//! ```text
//! ℛ(m1, m2) = (-m2, m1 - m2 + 1),
//! ```
//!
//! characterized by `R·K^m = K^{ℛm}` where `K^m = K + m1 k1 + m2 k2`.
//! Every index lies on a ℛ-orbit of length exactly 3 (there are no fixed
//! points), which is what makes the three-sector reduction at K possible.
//! The analogous action at the opposite vertex `K′` uses the translation
//! `(0, -1)` instead of `(0, 1)`; both are exposed through [`Vertex`].
//! Periodic potentials instead transform under the linear action
//! `R̃(m1, m2) = (-m2, m1 - m2)`, whose unique fixed point is 0.
//!
//! [`CycleTable`] tabulates the orbits that meet a square truncation box and
//! picks one representative per orbit (the lexicographically smallest member,
//! a deterministic rule; all physical outputs are representative-invariant).

use std::collections::BTreeMap;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::C64;

/// Errors from geometry construction.
#[derive(Debug, Error)]
pub enum LatticeError {
    /// The lattice constant must be a positive, finite length.
    #[error("lattice constant must be positive and finite, got {0}")]
    BadLatticeConstant(f64),
}

/// Exact geometry of the honeycomb period lattice and its dual.
///
/// All fields are computed from closed forms in [`build_geometry`]; the type
/// is immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGeometry {
    /// Lattice constant `a = |v1| = |v2|`.
    pub a: f64,
    /// First period lattice vector, `a (√3/2, 1/2)`.
    pub v1: Vector2<f64>,
    /// Second period lattice vector, `a (√3/2, -1/2)`.
    pub v2: Vector2<f64>,
    /// First dual lattice vector, `q (1/2, √3/2)`.
    pub k1: Vector2<f64>,
    /// Second dual lattice vector, `q (1/2, -√3/2)`.
    pub k2: Vector2<f64>,
    /// Dual scale `q = 4π/(a√3) = |k1| = |k2|`.
    pub q: f64,
    /// Brillouin-zone vertex `K = (k1 - k2)/3`.
    pub k_vertex: Vector2<f64>,
    /// The inequivalent vertex `K′ = -K`.
    pub k_vertex_prime: Vector2<f64>,
    /// Clockwise rotation by 2π/3.
    pub rotation: Matrix2<f64>,
    /// Area of the fundamental cell, `a²√3/2`.
    pub cell_area: f64,
}

/// Builds the lattice geometry for lattice constant `a`.
///
/// Fails for non-positive or non-finite `a`. All invariants
/// (`k_i·v_j = 2πδ_ij`, `|K|² = q²/3`, `R³ = I`, ...) hold to rounding
/// because every quantity is a closed form in `a`.
pub fn build_geometry(a: f64) -> Result<LatticeGeometry, LatticeError> {
    if a <= 0.0 || !a.is_finite() {
        return Err(LatticeError::BadLatticeConstant(a));
    }
    let sqrt3 = 3.0_f64.sqrt();
    let q = 4.0 * std::f64::consts::PI / (a * sqrt3);

    let v1 = Vector2::new(a * sqrt3 / 2.0, a / 2.0);
    let v2 = Vector2::new(a * sqrt3 / 2.0, -a / 2.0);
    let k1 = Vector2::new(q / 2.0, q * sqrt3 / 2.0);
    let k2 = Vector2::new(q / 2.0, -q * sqrt3 / 2.0);

    let k_vertex = (k1 - k2) / 3.0;
    // Clockwise 2π/3 rotation: eigenvector (1, i)/√2 with eigenvalue e^{2πi/3}.
    let rotation = Matrix2::new(-0.5, sqrt3 / 2.0, -sqrt3 / 2.0, -0.5);

    Ok(LatticeGeometry {
        a,
        v1,
        v2,
        k1,
        k2,
        q,
        k_vertex,
        k_vertex_prime: -k_vertex,
        rotation,
        cell_area: a * a * sqrt3 / 2.0,
    })
}

/// A point of the dual-lattice index grid; `m = (m1, m2)` stands for the
/// dual vector `m1 k1 + m2 k2`.
///
/// `Ord` is lexicographic on `(m1, m2)`, which is also the deterministic
/// orbit-representative rule used by [`CycleTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FourierIndex {
    pub m1: i32,
    pub m2: i32,
}

impl FourierIndex {
    pub const ZERO: FourierIndex = FourierIndex { m1: 0, m2: 0 };

    pub fn new(m1: i32, m2: i32) -> Self {
        FourierIndex { m1, m2 }
    }
}

impl std::ops::Neg for FourierIndex {
    type Output = FourierIndex;
    fn neg(self) -> FourierIndex {
        FourierIndex::new(-self.m1, -self.m2)
    }
}

impl std::ops::Add for FourierIndex {
    type Output = FourierIndex;
    fn add(self, rhs: FourierIndex) -> FourierIndex {
        FourierIndex::new(self.m1 + rhs.m1, self.m2 + rhs.m2)
    }
}

impl std::ops::Sub for FourierIndex {
    type Output = FourierIndex;
    fn sub(self, rhs: FourierIndex) -> FourierIndex {
        FourierIndex::new(self.m1 - rhs.m1, self.m2 - rhs.m2)
    }
}

impl std::fmt::Display for FourierIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.m1, self.m2)
    }
}

/// One of the two inequivalent Brillouin-zone vertex classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vertex {
    K,
    KPrime,
}

impl Vertex {
    /// The vertex as a point of the dual plane.
    pub fn point(self, geom: &LatticeGeometry) -> Vector2<f64> {
        match self {
            Vertex::K => geom.k_vertex,
            Vertex::KPrime => geom.k_vertex_prime,
        }
    }

    /// Translation part of the affine index action at this vertex:
    /// `R·K⋆ = K⋆ + t·k` with `t = (0, ±1)`.
    fn translation(self) -> FourierIndex {
        match self {
            Vertex::K => FourierIndex::new(0, 1),
            Vertex::KPrime => FourierIndex::new(0, -1),
        }
    }
}

impl std::fmt::Display for Vertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Vertex::K => write!(f, "K"),
            Vertex::KPrime => write!(f, "K'"),
        }
    }
}

/// Affine rotation action on K-quasi-periodic Fourier indices:
/// `ℛ(m1, m2) = (-m2, m1 - m2 + 1)`, satisfying `R·K^m = K^{ℛm}`.
pub fn index_r_action(m: FourierIndex) -> FourierIndex {
    FourierIndex::new(-m.m2, m.m1 - m.m2 + 1)
}

/// Square of the affine action: `ℛ²(m1, m2) = (m2 - m1 - 1, -m1)`.
pub fn index_r2_action(m: FourierIndex) -> FourierIndex {
    FourierIndex::new(m.m2 - m.m1 - 1, -m.m1)
}

/// Affine rotation action at either vertex: `ℛ_⋆ m = R̃m + t` with `t` the
/// vertex translation, so that `R·K⋆^m = K⋆^{ℛ_⋆ m}`.
pub fn index_vertex_r_action(vertex: Vertex, m: FourierIndex) -> FourierIndex {
    index_tr_action(m) + vertex.translation()
}

/// Square of the vertex action: `ℛ_⋆² m = R̃²m + R̃t + t`.
pub fn index_vertex_r2_action(vertex: Vertex, m: FourierIndex) -> FourierIndex {
    let t = vertex.translation();
    index_tr2_action(m) + index_tr_action(t) + t
}

/// Linear rotation action on periodic-function (potential) indices:
/// `R̃(m1, m2) = (-m2, m1 - m2)`. Its unique fixed point is `(0, 0)`.
pub fn index_tr_action(m: FourierIndex) -> FourierIndex {
    FourierIndex::new(-m.m2, m.m1 - m.m2)
}

/// Square of the linear action: `R̃²(m1, m2) = (m2 - m1, -m1)`.
pub fn index_tr2_action(m: FourierIndex) -> FourierIndex {
    FourierIndex::new(m.m2 - m.m1, -m.m1)
}

/// The dual vector attached to index `m` at base quasi-momentum `k_star`:
/// `K⋆^m = K⋆ + m1 k1 + m2 k2`.
pub fn kvec_of_index(
    geom: &LatticeGeometry,
    k_star: Vector2<f64>,
    m: FourierIndex,
) -> Vector2<f64> {
    k_star + geom.k1 * f64::from(m.m1) + geom.k2 * f64::from(m.m2)
}

/// Orbit table of the affine ℛ-action over a square truncation box.
///
/// Covers every orbit that intersects `|m1| ≤ M, |m2| ≤ M`; orbits are never
/// split, so members outside the box are included ("closure"). Exactly one
/// representative per orbit is listed, chosen as the lexicographically
/// smallest member.
#[derive(Debug, Clone)]
pub struct CycleTable {
    /// Truncation half-width M of the generating box.
    pub truncation: u32,
    /// The vertex whose affine action generated the orbits.
    pub vertex: Vertex,
    /// One representative per orbit, sorted ascending.
    pub representatives: Vec<FourierIndex>,
    /// `m -> (ℛm, ℛ²m)` for every index in the covered universe.
    cycle_map: BTreeMap<FourierIndex, (FourierIndex, FourierIndex)>,
}

/// Builds the [`CycleTable`] at the vertex `K` for truncation `M ≥ 1`.
pub fn cycle_representatives(truncation: u32) -> CycleTable {
    cycle_representatives_at(truncation, Vertex::K)
}

/// Builds the [`CycleTable`] at either vertex for truncation `M ≥ 1`.
pub fn cycle_representatives_at(truncation: u32, vertex: Vertex) -> CycleTable {
    let m_max = truncation as i32;
    let mut reps = std::collections::BTreeSet::new();
    let mut cycle_map = BTreeMap::new();

    for m1 in -m_max..=m_max {
        for m2 in -m_max..=m_max {
            let m = FourierIndex::new(m1, m2);
            let rm = index_vertex_r_action(vertex, m);
            let r2m = index_vertex_r2_action(vertex, m);
            reps.insert(m.min(rm).min(r2m));
            cycle_map.insert(m, (rm, r2m));
            cycle_map.insert(rm, (r2m, m));
            cycle_map.insert(r2m, (m, rm));
        }
    }

    CycleTable {
        truncation,
        vertex,
        representatives: reps.into_iter().collect(),
        cycle_map,
    }
}

impl CycleTable {
    /// `(ℛm, ℛ²m)` for a covered index.
    pub fn cycle_of(&self, m: FourierIndex) -> Option<(FourierIndex, FourierIndex)> {
        self.cycle_map.get(&m).copied()
    }

    /// Number of orbits (the sector basis dimension).
    pub fn orbit_count(&self) -> usize {
        self.representatives.len()
    }

    /// All covered indices (union of the full orbits), ascending.
    pub fn indices(&self) -> impl Iterator<Item = FourierIndex> + '_ {
        self.cycle_map.keys().copied()
    }

    /// Total number of covered indices (`3 × orbit_count`).
    pub fn index_count(&self) -> usize {
        self.cycle_map.len()
    }
}

/// Rotation eigensector label σ ∈ {1, τ, τ̄}, τ = e^{2πi/3}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetrySector {
    One,
    Tau,
    TauBar,
}

impl SymmetrySector {
    pub const ALL: [SymmetrySector; 3] =
        [SymmetrySector::One, SymmetrySector::Tau, SymmetrySector::TauBar];

    /// The complex sector value σ.
    pub fn value(self) -> C64 {
        let im = 3.0_f64.sqrt() / 2.0;
        match self {
            SymmetrySector::One => C64::new(1.0, 0.0),
            SymmetrySector::Tau => C64::new(-0.5, im),
            SymmetrySector::TauBar => C64::new(-0.5, -im),
        }
    }

    /// The conjugate sector (swaps τ and τ̄).
    pub fn conjugate(self) -> SymmetrySector {
        match self {
            SymmetrySector::One => SymmetrySector::One,
            SymmetrySector::Tau => SymmetrySector::TauBar,
            SymmetrySector::TauBar => SymmetrySector::Tau,
        }
    }
}

impl std::fmt::Display for SymmetrySector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SymmetrySector::One => write!(f, "1"),
            SymmetrySector::Tau => write!(f, "tau"),
            SymmetrySector::TauBar => write!(f, "tau_bar"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn geometry_closed_forms() {
        let g = build_geometry(1.0).unwrap();
        assert_relative_eq!(g.q, 7.255197456936871, max_relative = 1e-14);
        assert_relative_eq!(
            g.k_vertex.norm_squared(),
            16.0 * std::f64::consts::PI.powi(2) / 9.0,
            max_relative = 1e-14
        );

        let g2 = build_geometry(2.0).unwrap();
        assert_relative_eq!(g2.cell_area, 2.0 * 3.0_f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn duality_and_norms() {
        let g = build_geometry(0.7).unwrap();
        let two_pi = 2.0 * std::f64::consts::PI;
        assert_relative_eq!(g.k1.dot(&g.v1), two_pi, max_relative = 1e-14);
        assert_relative_eq!(g.k2.dot(&g.v2), two_pi, max_relative = 1e-14);
        assert!(g.k1.dot(&g.v2).abs() < 1e-13);
        assert!(g.k2.dot(&g.v1).abs() < 1e-13);
        assert_relative_eq!(g.v1.norm(), g.a, max_relative = 1e-14);
        assert_relative_eq!(g.v1.dot(&g.v2), g.a * g.a / 2.0, max_relative = 1e-14);
        assert_relative_eq!(g.k1.norm(), g.q, max_relative = 1e-14);
        assert_relative_eq!(g.k1.dot(&g.k2), -g.q * g.q / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn rotation_permutes_vertices() {
        let g = build_geometry(1.0).unwrap();
        let r = g.rotation;
        assert!((r * g.k_vertex - (g.k_vertex + g.k2)).norm() < 1e-12);
        assert!((r * r * g.k_vertex - (g.k_vertex - g.k1)).norm() < 1e-12);
        assert!((r * r * r - Matrix2::identity()).norm() < 1e-14);
        assert!((Matrix2::identity() + r + r * r).norm() < 1e-14);
    }

    #[test]
    fn rotation_eigenvector() {
        // R (1, i)/√2 = τ (1, i)/√2, componentwise to 1e-14.
        let g = build_geometry(1.0).unwrap();
        let r = g.rotation;
        let s = 1.0 / 2.0_f64.sqrt();
        let zeta = [C64::new(s, 0.0), C64::new(0.0, s)];
        let tau = SymmetrySector::Tau.value();
        for row in 0..2 {
            let got = C64::new(r[(row, 0)], 0.0) * zeta[0] + C64::new(r[(row, 1)], 0.0) * zeta[1];
            let want = tau * zeta[row];
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn bad_lattice_constant_rejected() {
        assert!(build_geometry(0.0).is_err());
        assert!(build_geometry(-1.0).is_err());
        assert!(build_geometry(f64::NAN).is_err());
        assert!(build_geometry(f64::INFINITY).is_err());
    }

    #[test]
    fn affine_action_distinguished_cycle() {
        let m0 = FourierIndex::new(0, 0);
        let m1 = index_r_action(m0);
        let m2 = index_r_action(m1);
        assert_eq!(m1, FourierIndex::new(0, 1));
        assert_eq!(m2, FourierIndex::new(-1, 0));
        assert_eq!(index_r_action(m2), m0);
        assert_eq!(index_r_action(FourierIndex::new(2, -1)), FourierIndex::new(1, 4));
    }

    #[test]
    fn vertex_actions_track_the_rotation() {
        let g = build_geometry(1.0).unwrap();
        for vertex in [Vertex::K, Vertex::KPrime] {
            let ks = vertex.point(&g);
            for m in [
                FourierIndex::ZERO,
                FourierIndex::new(2, -1),
                FourierIndex::new(-3, 1),
            ] {
                let rotated = g.rotation * kvec_of_index(&g, ks, m);
                let mapped = kvec_of_index(&g, ks, index_vertex_r_action(vertex, m));
                assert!((rotated - mapped).norm() < 1e-12, "{vertex} {m}");
                let rotated2 = g.rotation * rotated;
                let mapped2 = kvec_of_index(&g, ks, index_vertex_r2_action(vertex, m));
                assert!((rotated2 - mapped2).norm() < 1e-12, "{vertex}² {m}");
            }
        }
    }

    #[test]
    fn vertex_action_specializations() {
        for m1 in -3..=3 {
            for m2 in -3..=3 {
                let m = FourierIndex::new(m1, m2);
                assert_eq!(index_vertex_r_action(Vertex::K, m), index_r_action(m));
                assert_eq!(index_vertex_r2_action(Vertex::K, m), index_r2_action(m));
            }
        }
        // The distinguished orbit at K′ is {(0,0), (0,-1), (1,0)}.
        assert_eq!(
            index_vertex_r_action(Vertex::KPrime, FourierIndex::ZERO),
            FourierIndex::new(0, -1)
        );
        assert_eq!(
            index_vertex_r2_action(Vertex::KPrime, FourierIndex::ZERO),
            FourierIndex::new(1, 0)
        );
        let table = cycle_representatives_at(1, Vertex::KPrime);
        assert_eq!(table.index_count(), 3 * table.orbit_count());
        assert!(table.representatives.contains(&FourierIndex::new(0, -1)));
    }

    #[test]
    fn linear_action_examples() {
        assert_eq!(index_tr_action(FourierIndex::new(1, 1)), FourierIndex::new(-1, 0));
        assert_eq!(index_tr_action(FourierIndex::ZERO), FourierIndex::ZERO);
        assert_eq!(index_tr_action(FourierIndex::new(1, 0)), FourierIndex::new(0, 1));
    }

    #[test]
    fn kvec_examples() {
        let g = build_geometry(1.0).unwrap();
        let k = g.k_vertex;
        assert!((kvec_of_index(&g, k, FourierIndex::ZERO) - k).norm() < 1e-15);
        let got = kvec_of_index(&g, k, FourierIndex::new(0, 1));
        let want = Vector2::new(g.q / 2.0, -g.q * 3.0_f64.sqrt() / 6.0);
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn representative_of_distinguished_orbit() {
        let table = cycle_representatives(1);
        // Orbit {(0,0), (0,1), (-1,0)}: lexicographic minimum is (-1,0).
        assert!(table.representatives.contains(&FourierIndex::new(-1, 0)));
        assert!(!table.representatives.contains(&FourierIndex::ZERO));
        assert!(!table.representatives.contains(&FourierIndex::new(0, 1)));
    }

    #[test]
    fn representatives_stable_across_truncations() {
        let t3 = cycle_representatives(3);
        let t4 = cycle_representatives(4);
        for rep in &t3.representatives {
            assert!(
                t4.representatives.contains(rep),
                "representative {rep} of M=3 missing at M=4"
            );
        }
    }

    #[test]
    fn orbits_partition_universe() {
        let table = cycle_representatives(4);
        assert_eq!(table.index_count(), 3 * table.orbit_count());
        let mut seen = std::collections::BTreeSet::new();
        for &rep in &table.representatives {
            let (rm, r2m) = table.cycle_of(rep).unwrap();
            for idx in [rep, rm, r2m] {
                assert!(seen.insert(idx), "index {idx} in two orbits");
            }
        }
        assert_eq!(seen.len(), table.index_count());
    }
}
