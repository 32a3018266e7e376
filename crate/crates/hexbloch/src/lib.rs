//! Floquet-Bloch spectral toolkit for 2D Schrödinger operators with
//! honeycomb lattice potentials.
//!
//! The crate computes band structures of `H(k) = -(∇+ik)² + εV(x)` by
//! plane-wave (Fourier) truncation, where `V` is a real, periodic potential
//! on the triangular period lattice Λ_h whose point group contains the
//! 2π/3 rotation `R`. For honeycomb potentials (even, R-invariant) the
//! quasi-momentum space at the Brillouin-zone vertices K, K′ splits into
//! three rotation eigensectors σ ∈ {1, τ, τ̄}, τ = e^{2πi/3}, which this
//! crate exploits both as a solver reduction and as a verification device.
//!
//! What lives where:
//!
//! - [`lattice`] — exact lattice geometry (basis vectors, dual basis,
//!   zone vertices, rotation matrix) and the combinatorics of the
//!   rotation action on Fourier indices (3-cycles, orbit representatives).
//! - [`potential`] — real periodic potentials as finite Fourier
//!   coefficient maps, with computed symmetry metadata; the "optical"
//!   (three-beam cosine) and "atomic" (Gaussian bump) honeycomb examples.
//! - [`spectral`] — assembly and dense solution of the truncated Bloch
//!   eigenproblem at arbitrary k, and of the sector-reduced problems at
//!   K/K′; band paths and truncation convergence studies.
//! - [`dirac`] — Dirac point detection at the zone vertices, the cone
//!   coefficient λ_♯ from sector eigenvectors, first-order matrix-element
//!   identities, and numerical cone-slope fits.
//! - [`perturb`] — small-ε eigenvalue splitting formulas and their
//!   verification; deformation of the operator by an even or non-even
//!   perturbation W (Dirac point drift vs. gap opening).
//! - [`det2`] — the renormalized determinant E_σ(μ,ε) = det₂(I−(μ+1)T(ε))
//!   whose zeros in μ reproduce the sector eigenvalues.
//! - [`nullspace`] — polynomial nullvector maps Γ_jk for rank-(N−1)
//!   matrices and the rank-one test family A(v) = v̄ (Jv)ᵀ.
//!
//! All matrices are dense and complex Hermitian; eigendecompositions use
//! pure-Rust nalgebra. Every public computation is a pure function of
//! immutable inputs, so callers may parallelize freely; the crate itself
//! uses rayon for independent k-point and direction sweeps.

pub mod det2;
pub mod dirac;
pub mod lattice;
pub mod nullspace;
pub mod perturb;
pub mod potential;
pub mod spectral;

pub use det2::{det2_of, evaluate_e, zero_scan, Det2Evaluation, SectorDeterminant, ZeroScan};
pub use dirac::{
    detect_dirac, dirac_report, fit_cone, lambda_sharp, ConeAnalysis, DiracPoint, DiracReport,
};
pub use lattice::{
    build_geometry, cycle_representatives, cycle_representatives_at, index_r_action,
    index_r2_action, index_tr_action, kvec_of_index, CycleTable, FourierIndex, LatticeGeometry,
    SymmetrySector, Vertex,
};
pub use nullspace::{best_nullvector, gamma_jk, rank_one_with_nullvector, GammaResult};
pub use perturb::{
    deform_even, deform_odd_gap, inner_product_w, split_prediction, verify_split, CrossingCase,
    DeformationReport, SplitPrediction, SplitTable,
};
pub use potential::{atomic_lattice, from_fourier, optical_lattice, PotentialSpectrum};
pub use spectral::{
    assemble_full, assemble_sector, band_path, named_path, solve_lowest, BandTable,
    EigenSolution, PlanewaveBasis,
};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
