//! Property tests for algebraic invariants.

use std::collections::BTreeMap;

use hexbloch::lattice::{
    build_geometry, cycle_representatives_at, index_tr_action, index_vertex_r_action,
    kvec_of_index, SymmetrySector, Vertex,
};
use hexbloch::nullspace::gamma_jk;
use hexbloch::perturb::inner_product_w;
use hexbloch::potential::from_fourier;
use hexbloch::spectral::{assemble_sector, solve_lowest};
use hexbloch::{det2_of, C64, FourierIndex};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

fn index() -> impl Strategy<Value = FourierIndex> {
    (-20i32..=20, -20i32..=20).prop_map(|(m1, m2)| FourierIndex::new(m1, m2))
}

proptest! {
    /// The affine index action at either vertex is a 3-cycle that tracks
    /// the geometric rotation: R·K⋆^m = K⋆^{ℛ_⋆m}.
    #[test]
    fn vertex_actions_are_rotation_tracking_3_cycles(m in index(), prime in any::<bool>()) {
        let geom = build_geometry(1.0).unwrap();
        let vertex = if prime { Vertex::KPrime } else { Vertex::K };
        let r1 = index_vertex_r_action(vertex, m);
        let r2 = index_vertex_r_action(vertex, r1);
        let r3 = index_vertex_r_action(vertex, r2);
        prop_assert_eq!(r3, m);

        let k_star = vertex.point(&geom);
        let rotated = geom.rotation * kvec_of_index(&geom, k_star, m);
        let relabeled = kvec_of_index(&geom, k_star, r1);
        prop_assert!((rotated - relabeled).norm() < 1e-9 * (1.0 + rotated.norm()));
    }

    /// det₂ is a symmetric function of the eigenvalues, and zero modes
    /// contribute a factor of exactly one.
    #[test]
    fn det2_symmetric_and_zero_append_neutral(
        eigs in prop::collection::vec(c64(), 0..6),
        rot in 0usize..6,
    ) {
        let base = det2_of(&eigs);
        let mut rotated = eigs.clone();
        if !rotated.is_empty() {
            let r = rot % rotated.len();
            rotated.rotate_left(r);
        }
        prop_assert!((det2_of(&rotated) - base).norm() <= 1e-12 * (1.0 + base.norm()));

        let mut padded = eigs.clone();
        padded.push(C64::new(0.0, 0.0));
        prop_assert!((det2_of(&padded) - base).norm() <= 1e-12 * (1.0 + base.norm()));
    }

    /// Γ_jk components are homogeneous polynomials of degree 2N-2, and the
    /// k-th coordinate is the squared subdeterminant.
    #[test]
    fn gamma_homogeneity_and_pinned_coordinate(
        entries in prop::collection::vec(c64(), 9),
        s in c64(),
        j in 1usize..=3,
        k in 1usize..=3,
    ) {
        prop_assume!(s.norm() > 0.05);
        let a = DMatrix::from_vec(3, 3, entries);
        let g = gamma_jk(&a, j, k);
        prop_assert!((g.vector[k - 1] - g.subdet * g.subdet).norm()
            <= 1e-12 * (1.0 + g.vector.norm()));

        let scaled = a.map(|x| x * s);
        let gs = gamma_jk(&scaled, j, k);
        let factor = s.powu(4); // 2N-2 with N = 3
        let defect = (&gs.vector - &g.vector * factor).norm();
        prop_assert!(defect <= 1e-9 * (1.0 + g.vector.norm() * factor.norm()));
    }

    /// The W-form is linear in its second argument and conjugate-linear in
    /// its first.
    #[test]
    fn w_form_is_sesquilinear(
        coeffs_a in prop::collection::vec(c64(), 3),
        coeffs_b in prop::collection::vec(c64(), 3),
        s in c64(),
    ) {
        let geom = build_geometry(1.0).unwrap();
        let indices = [
            FourierIndex::new(0, 0),
            FourierIndex::new(1, 0),
            FourierIndex::new(-1, 1),
        ];
        let a: BTreeMap<FourierIndex, C64> =
            indices.iter().copied().zip(coeffs_a.iter().copied()).collect();
        let b: BTreeMap<FourierIndex, C64> =
            indices.iter().copied().zip(coeffs_b.iter().copied()).collect();
        let w = from_fourier(&[
            (FourierIndex::new(1, 0), C64::new(0.5, 0.0)),
            (FourierIndex::new(-1, 0), C64::new(0.5, 0.0)),
            (FourierIndex::new(0, 0), C64::new(0.25, 0.0)),
        ]);

        let base = inner_product_w(&geom, &a, &b, &w);
        let bs: BTreeMap<FourierIndex, C64> = b.iter().map(|(&n, &c)| (n, c * s)).collect();
        let as_: BTreeMap<FourierIndex, C64> = a.iter().map(|(&n, &c)| (n, c * s)).collect();
        prop_assert!((inner_product_w(&geom, &a, &bs, &w) - base * s).norm() <= 1e-12);
        prop_assert!((inner_product_w(&geom, &as_, &b, &w) - base * s.conj()).norm() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Any orbit-symmetrized real coefficient set is honeycomb, and its τ
    /// and τ̄ sector spectra coincide.
    #[test]
    fn symmetrized_potentials_have_conjugate_sector_spectra(
        seeds in prop::collection::vec(((-3i32..=3, -3i32..=3), -1.0f64..1.0), 1..4),
    ) {
        let geom = build_geometry(1.0).unwrap();
        let mut coeffs: BTreeMap<FourierIndex, C64> = BTreeMap::new();
        for ((m1, m2), val) in seeds {
            let m = FourierIndex::new(m1, m2);
            // Close under ±m and the rotation orbit with one shared real
            // value: the result is real, even, and R-invariant.
            let mut orbit = vec![m, index_tr_action(m), index_tr_action(index_tr_action(m))];
            for o in orbit.clone() {
                orbit.push(-o);
            }
            for o in orbit {
                coeffs.insert(o, C64::new(val, 0.0));
            }
        }
        let entries: Vec<(FourierIndex, C64)> = coeffs.into_iter().collect();
        let v = from_fourier(&entries);
        prop_assert!(v.is_honeycomb());

        let table = cycle_representatives_at(2, Vertex::K);
        let tau = assemble_sector(&geom, &table, &v, 0.2, SymmetrySector::Tau).unwrap();
        let tau_bar = assemble_sector(&geom, &table, &v, 0.2, SymmetrySector::TauBar).unwrap();
        let n = 3.min(tau.nrows());
        let st = solve_lowest(&tau, n).unwrap();
        let sb = solve_lowest(&tau_bar, n).unwrap();
        for (a, b) in st.eigenvalues.iter().zip(&sb.eigenvalues) {
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }
}
