//! Max-of-affine functions, their subdifferentials, and dual-norm distances
//! from the origin to polytopes.

mod inverse;
mod min_norm;

pub use inverse::{inverse_norm, inverse_norm_routes, InverseNormRoutes};
pub use min_norm::{min_dual_norm_point, min_norm_point, MinNormPoint};

use crate::error::{CalmnessError, Result};
use crate::norm::{dot, sup_norm};
use serde::{Deserialize, Serialize};

/// Convex hull of finitely many points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    vertices: Vec<Vec<f64>>,
}

impl Polytope {
    /// Builds the hull of `points`, dropping exact duplicates (within 1e-12 in sup norm).
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(CalmnessError::Invalid("polytope needs at least one point".into()));
        };
        let p = first.len();
        let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(points.len());
        for v in points {
            if v.len() != p {
                return Err(CalmnessError::dim(p, v.len()));
            }
            let dup = vertices.iter().any(|w| sup_norm(&sub(w, &v)) <= 1e-12);
            if !dup {
                vertices.push(v);
            }
        }
        Ok(Polytope { vertices })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Whether `v` equals some listed vertex within `tol` (sup norm).
    pub fn contains_vertex(&self, v: &[f64], tol: f64) -> bool {
        self.vertices.iter().any(|w| sup_norm(&sub(w, v)) <= tol)
    }
}

/// One affine piece `x ↦ ⟨g,x⟩ + β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineTerm {
    pub gradient: Vec<f64>,
    pub offset: f64,
    pub label: String,
}

/// `x ↦ max_i ⟨g_i,x⟩ + β_i` over a nonempty list of terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupFunction {
    dim: usize,
    terms: Vec<AffineTerm>,
}

impl SupFunction {
    pub fn new(terms: Vec<AffineTerm>) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Err(CalmnessError::Invalid("sup function needs at least one term".into()));
        };
        let dim = first.gradient.len();
        for t in &terms {
            if t.gradient.len() != dim {
                return Err(CalmnessError::dim(dim, t.gradient.len()));
            }
        }
        Ok(SupFunction { dim, terms })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[AffineTerm] {
        &self.terms
    }

    pub fn term_values(&self, x: &[f64]) -> Vec<f64> {
        self.terms.iter().map(|t| dot(&t.gradient, x) + t.offset).collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.term_values(x).into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Default attainment tolerance `1e-9·max(1, |f(x)|)`.
    pub fn default_tolerance(&self, x: &[f64]) -> f64 {
        1e-9 * self.value(x).abs().max(1.0)
    }

    /// Terms whose value is within `tol_att` of the maximum. Never empty.
    pub fn attained(&self, x: &[f64], tol_att: f64) -> Vec<usize> {
        let vals = self.term_values(x);
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..vals.len()).filter(|&i| vals[i] >= top - tol_att).collect()
    }

    /// Convex hull of the gradients of the terms attained within `tol_att`.
    pub fn subdifferential(&self, x: &[f64], tol_att: f64) -> Polytope {
        let grads = self.attained(x, tol_att).into_iter().map(|i| self.terms[i].gradient.clone()).collect();
        Polytope::new(grads).expect("attained set is nonempty")
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn term(g: [f64; 2], b: f64, label: &str) -> AffineTerm {
        AffineTerm { gradient: g.to_vec(), offset: b, label: label.into() }
    }

    #[test]
    fn example_one_subdifferential() {
        // f_D for D = {1,2}, b̄ = 0: rows a₁, a₂, a₃ and the reversed rows −a₁, −a₂
        let f = SupFunction::new(vec![
            term([-1.0, 0.0], 0.0, "1"),
            term([-1.0, -0.5], 0.0, "2"),
            term([-1.0, -1.0], 0.0, "3"),
            term([1.0, 0.0], 0.0, "-1"),
            term([1.0, 0.5], 0.0, "-2"),
        ])
        .unwrap();
        let n = 10.0;
        let x = [-1.0 / n, 4.0 / n];
        let sub = f.subdifferential(&x, f.default_tolerance(&x));
        assert_eq!(sub.len(), 2);
        assert!(sub.contains_vertex(&[-1.0, 0.0], 1e-15));
        assert!(sub.contains_vertex(&[1.0, 0.5], 1e-15));
    }

    #[test]
    fn example_two_subdifferential() {
        let f = SupFunction::new(vec![
            term([-1.0, 0.0], 0.0, "1"),
            term([-1.0, -0.5], 0.0, "2"),
            term([-1.0, -1.0], 0.0, "3"),
            term([-1.0, 1.0], 0.0, "4"),
            term([1.0, 0.0], 0.0, "-1"),
            term([1.0, 1.0], 0.0, "-3"),
        ])
        .unwrap();
        let e = 0.01;
        let x = [e, -2.0 * e];
        let sub = f.subdifferential(&x, f.default_tolerance(&x));
        assert_eq!(sub.len(), 2);
        assert!(sub.contains_vertex(&[1.0, 0.0], 1e-15));
        assert!(sub.contains_vertex(&[-1.0, -1.0], 1e-15));
    }

    #[test]
    fn single_term_is_singleton() {
        let f = SupFunction::new(vec![term([3.0, -2.0], 1.5, "only")]).unwrap();
        for x in [[0.0, 0.0], [10.0, -4.0], [-1e6, 2.0]] {
            let s = f.subdifferential(&x, 0.0);
            assert_eq!(s.vertices(), &[vec![3.0, -2.0]]);
        }
    }

    #[test]
    fn unique_maximizer_gives_its_gradient() {
        let f = SupFunction::new(vec![term([1.0, 0.0], 0.0, "a"), term([0.0, 1.0], 0.0, "b"), term([-1.0, -1.0], 0.0, "c")])
            .unwrap();
        let s = f.subdifferential(&[2.0, 1.0], 1e-9);
        assert_eq!(s.vertices(), &[vec![1.0, 0.0]]);
        let tie = f.subdifferential(&[1.0, 1.0], 1e-9);
        assert_eq!(tie.len(), 2);
    }

    #[test]
    fn polytope_deduplicates() {
        let p = Polytope::new(vec![vec![1.0, 0.0], vec![1.0 + 1e-14, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p.len(), 2);
        assert!(Polytope::new(vec![]).is_err());
        assert!(Polytope::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }
}
