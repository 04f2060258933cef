//! The operator norm `‖A⁻¹‖` from `(ℝᵖ, ‖·‖∞)` to `(ℝᵖ, ‖·‖)`, computed by
//! two independent routes that must agree.

use super::{min_dual_norm_point, Polytope};
use crate::error::{CalmnessError, Result};
use crate::linalg::Matrix;
use crate::norm::NormSpec;
use serde::{Deserialize, Serialize};

/// Relative disagreement above which the two routes signal an internal error.
const CROSS_CHECK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InverseNormRoutes {
    /// `max_{y ∈ {±1}ᵖ} ‖A⁻¹y‖`.
    pub sign_vectors: f64,
    /// `1 / min_{‖λ‖₁ = 1} ‖Aᵀλ‖∗`.
    pub dual_facets: f64,
}

/// Both evaluations of `‖A⁻¹‖`, or an error when `A` is singular or they disagree.
pub fn inverse_norm_routes(a: &Matrix, norm: NormSpec) -> Result<InverseNormRoutes> {
    let p = a.rows();
    let inv = a.inverse()?;
    let half = 1usize << p.saturating_sub(1);

    let mut sign_vectors: f64 = 0.0;
    for mask in 0..half {
        let y = signs(mask, p);
        sign_vectors = sign_vectors.max(norm.norm(&inv.mul_vec(&y)));
    }

    // ‖λ‖₁ = 1 splits into orthants; on each the problem is a dual-norm distance to a hull
    let mut min_dual = f64::INFINITY;
    for mask in 0..half {
        let s = signs(mask, p);
        let pts: Vec<Vec<f64>> = (0..p).map(|i| a.row(i).iter().map(|v| v * s[i]).collect()).collect();
        let d = min_dual_norm_point(&Polytope::new(pts)?, norm)?.distance;
        min_dual = min_dual.min(d);
    }
    if min_dual <= 0.0 {
        return Err(CalmnessError::Consistency(
            "dual facet route found 0 in a signed hull of a nonsingular matrix".into(),
        ));
    }
    let routes = InverseNormRoutes { sign_vectors, dual_facets: 1.0 / min_dual };
    let gap = (routes.sign_vectors - routes.dual_facets).abs();
    if gap > CROSS_CHECK * routes.sign_vectors.max(1.0) {
        return Err(CalmnessError::Consistency(format!(
            "inverse norm routes disagree: sign vectors {} vs dual facets {}",
            routes.sign_vectors, routes.dual_facets
        )));
    }
    Ok(routes)
}

/// `‖A⁻¹‖` with the parameter space measured in the sup norm.
pub fn inverse_norm(a: &Matrix, norm: NormSpec) -> Result<f64> {
    Ok(inverse_norm_routes(a, norm)?.sign_vectors)
}

/// Sign vector with `+1` in the last coordinate and the low bits of `mask` elsewhere.
fn signs(mask: usize, p: usize) -> Vec<f64> {
    (0..p)
        .map(|i| if i + 1 < p && mask & (1 << i) != 0 { -1.0 } else { 1.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn example_one_basis() {
        let r = inverse_norm_routes(&m(&[[-1.0, 0.0], [-1.0, -0.5]]), NormSpec::Euclidean).unwrap();
        assert!((r.sign_vectors - 17f64.sqrt()).abs() < 1e-12);
        assert!((r.dual_facets - 17f64.sqrt()).abs() < 1e-9);
        let r = inverse_norm(&m(&[[-1.0, 0.0], [-1.0, -1.0]]), NormSpec::Euclidean).unwrap();
        assert!((r - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn example_two_basis() {
        let r = inverse_norm_routes(&m(&[[-1.0, -0.5], [-1.0, 1.0]]), NormSpec::Euclidean).unwrap();
        assert!((r.sign_vectors - 17f64.sqrt() / 3.0).abs() < 1e-12);
        assert!((r.dual_facets - r.sign_vectors).abs() < 1e-9);
    }

    #[test]
    fn identity_has_unit_inverse_norm_in_sup_norm() {
        // from ℓ∞ to ℓ∞ the identity has norm 1; to ℓ2 and ℓ1 it has norm √p and p
        let i3 = Matrix::identity(3);
        assert!((inverse_norm(&i3, NormSpec::Infinity).unwrap() - 1.0).abs() < 1e-12);
        assert!((inverse_norm(&i3, NormSpec::Euclidean).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        assert!((inverse_norm(&i3, NormSpec::One).unwrap() - 3.0).abs() < 1e-12);
        let i1 = Matrix::identity(1);
        for n in [NormSpec::Euclidean, NormSpec::One, NormSpec::Infinity] {
            assert!((inverse_norm(&i1, n).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_rejected() {
        let r = inverse_norm(&m(&[[-1.0, 0.0], [-1.0, 0.0]]), NormSpec::Euclidean);
        assert!(matches!(r, Err(CalmnessError::Singular { .. })));
    }
}
