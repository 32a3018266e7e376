//! Polynomial nullvector construction for rank-deficient matrices.
//!
//! For an N×N matrix `A` of rank N−1 the nullspace is one-dimensional, and
//! a spanning vector can be written down *polynomially* in the entries of
//! `A` — no limits, no normalization choices. For each index pair `(j, k)`
//! define `Γ_jk(A)` by deleting row j and column k, setting the k-th
//! coordinate to the squared subdeterminant,
//!
//! ```text
//! v_k = (det A^(j,k))²,
//! ```
//!
//! and solving `A^(j,k) v̂ = -[col_k(A)]^(j) · v_k` for the remaining
//! coordinates. Every `Γ_jk(A)` lies in the nullspace, each component is a
//! homogeneous polynomial of degree `2N - 2` in the entries, and at least
//! one of the N² vectors is nonzero when the rank is exactly N−1.
//! [`best_nullvector`] picks the largest.
//!
//! [`rank_one_with_nullvector`] supplies the classical 2×2 family
//! `A(v) = conj(v)·(Jv)ᵀ`, whose nullspace is exactly `ℂ·v` — a convenient
//! generator for exercising the construction.

use nalgebra::{DMatrix, DVector, Vector2};
use thiserror::Error;

use crate::C64;

/// Singular-value gap threshold certifying rank N−1: `σ_N ≤ tol·σ_1` while
/// `σ_{N-1} > tol·σ_1`.
pub const RANK_GAP_TOL: f64 = 1e-8;

/// Errors from the nullvector selector.
#[derive(Debug, Error)]
pub enum NullspaceError {
    /// The singular values do not certify rank exactly N−1.
    #[error(
        "matrix is not rank N-1: singular values have σ_N = {smallest:.3e}, \
         σ_(N-1) = {next:.3e} against threshold {threshold:.3e}"
    )]
    NotRankDeficient {
        smallest: f64,
        next: f64,
        threshold: f64,
    },
    /// Every Γ_jk vanished, contradicting the rank-(N−1) assumption.
    #[error("all N² nullvector candidates are zero; rank assumption violated")]
    AllGammaZero,
}

/// One polynomial nullvector candidate.
///
/// `vector` is the zero vector exactly when `subdet` vanishes; otherwise
/// its k-th coordinate equals `subdet²`.
#[derive(Debug, Clone)]
pub struct GammaResult {
    /// Deleted row (1-based).
    pub j: usize,
    /// Deleted column (1-based); also the coordinate carrying `subdet²`.
    pub k: usize,
    pub vector: DVector<C64>,
    /// `det A^(j,k)`.
    pub subdet: C64,
}

/// `A` with row `j` and column `k` removed (1-based).
fn minor_matrix(a: &DMatrix<C64>, j: usize, k: usize) -> DMatrix<C64> {
    a.clone().remove_row(j - 1).remove_column(k - 1)
}

/// Column `k` of `A` with entry `j` removed (1-based).
fn minor_column(a: &DMatrix<C64>, j: usize, k: usize) -> DVector<C64> {
    let col = a.column(k - 1).into_owned();
    col.remove_row(j - 1)
}

/// The polynomial nullvector candidate `Γ_jk(A)` (indices 1-based).
///
/// Panics if `A` is not square or the indices are out of range; a vanishing
/// subdeterminant is not an error and yields the zero vector.
pub fn gamma_jk(a: &DMatrix<C64>, j: usize, k: usize) -> GammaResult {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "gamma_jk needs a square matrix");
    assert!(
        (1..=n).contains(&j) && (1..=n).contains(&k),
        "gamma_jk indices must satisfy 1 <= j,k <= {n}, got ({j}, {k})"
    );

    let zero = || GammaResult {
        j,
        k,
        vector: DVector::zeros(n),
        subdet: C64::new(0.0, 0.0),
    };

    let sub = minor_matrix(a, j, k);
    let subdet = if n == 1 {
        C64::new(1.0, 0.0) // empty minor: empty product
    } else {
        sub.determinant()
    };
    if subdet.norm() == 0.0 {
        return zero();
    }

    let scale = subdet * subdet;
    let mut vector = DVector::zeros(n);
    vector[k - 1] = scale;
    if n > 1 {
        let rhs = minor_column(a, j, k) * (-scale);
        let Some(solved) = sub.lu().solve(&rhs) else {
            // Numerically singular minor: consistent with subdet ≈ 0.
            return zero();
        };
        let mut si = 0;
        for i in 0..n {
            if i != k - 1 {
                vector[i] = solved[si];
                si += 1;
            }
        }
    }

    GammaResult {
        j,
        k,
        vector,
        subdet,
    }
}

/// The largest-norm `Γ_jk(A)` over all N² index pairs.
///
/// The caller asserts rank(A) = N−1; this is verified through the
/// singular-value gap ([`RANK_GAP_TOL`]) before any candidate is formed.
/// The selector is deliberately simple — maximal norm, ties broken by
/// (j, k) order — and therefore discontinuous in `A`; it trades continuity
/// for an unconditional nonzero result.
pub fn best_nullvector(a: &DMatrix<C64>) -> Result<DVector<C64>, NullspaceError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "best_nullvector needs a square matrix");
    assert!(n >= 2, "best_nullvector needs N >= 2");

    let sv = a.clone().svd(false, false).singular_values;
    let threshold = RANK_GAP_TOL * sv[0];
    if !(sv[n - 1] <= threshold && sv[n - 2] > threshold) {
        return Err(NullspaceError::NotRankDeficient {
            smallest: sv[n - 1],
            next: sv[n - 2],
            threshold,
        });
    }

    let mut best: Option<GammaResult> = None;
    for j in 1..=n {
        for k in 1..=n {
            let g = gamma_jk(a, j, k);
            if best.as_ref().is_none_or(|b| g.vector.norm() > b.vector.norm()) {
                best = Some(g);
            }
        }
    }
    let best = best.expect("n >= 2 guarantees candidates");
    if best.vector.norm() == 0.0 {
        return Err(NullspaceError::AllGammaZero);
    }
    Ok(best.vector)
}

/// The rank-one 2×2 matrix `A(v) = conj(v)·(Jv)ᵀ`, `J = [[0,1],[-1,0]]`,
/// whose nullspace is spanned by `v` (for `v ≠ 0`).
pub fn rank_one_with_nullvector(v: Vector2<C64>) -> DMatrix<C64> {
    let jv = Vector2::new(v[1], -v[0]);
    DMatrix::from_fn(2, 2, |r, c| v[r].conj() * jv[c])
}
