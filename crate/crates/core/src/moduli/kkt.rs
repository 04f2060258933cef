//! KKT index sets at the nominal point.

use crate::certify::{cone_membership, distinct_directions, nominal_active_set, subsets_up_to, MAX_DIRECTIONS};
use crate::error::{CalmnessError, Result};
use crate::geometry::inverse_norm;
use crate::linalg::Matrix;
use crate::problem::Problem;
use serde::{Deserialize, Serialize};

/// Largest number of candidate subsets examined by any enumeration.
pub const MAX_CANDIDATES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KKTIndexSet {
    pub labels: Vec<String>,
    /// Row positions in the problem, increasing.
    pub rows: Vec<usize>,
    /// Cone multipliers for `−c̄`, aligned with `rows`.
    pub multipliers: Vec<f64>,
    /// `A_D` when `|D| = p`.
    pub matrix: Option<Matrix>,
    pub nonsingular: bool,
    /// No proper subset is itself a KKT set.
    pub minimal: bool,
    /// `‖A_D⁻¹‖` when `A_D` is square and nonsingular.
    pub inverse_norm: Option<f64>,
}

impl KKTIndexSet {
    pub fn in_t(&self) -> bool {
        self.matrix.is_some() && self.nonsingular
    }
}

pub(crate) fn binomial_sum(n: usize, k: usize) -> usize {
    let mut total = 0usize;
    let mut c = 1usize;
    for i in 0..=k.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul(n - i) / (i + 1);
    }
    total
}

/// All `D ⊆ T_b̄(x̄)` with `|D| ≤ p` and `−c̄ ∈ cone{a_t : t ∈ D}`.
pub fn enumerate_k(problem: &Problem, x_bar: &[f64]) -> Result<Vec<KKTIndexSet>> {
    let active = nominal_active_set(problem, x_bar)?;
    let distinct = distinct_directions(problem, &active.indices)?.len();
    if distinct > MAX_DIRECTIONS {
        return Err(CalmnessError::TooLarge { distinct, limit: MAX_DIRECTIONS });
    }
    let p = problem.dim();
    let k = active.len();
    if binomial_sum(k, p) > MAX_CANDIDATES {
        return Err(CalmnessError::TooLarge { distinct: k, limit: MAX_DIRECTIONS });
    }
    let neg_c: Vec<f64> = problem.cost().iter().map(|v| -v).collect();
    let tol = problem.default_tolerances().kkt;
    let mut out: Vec<KKTIndexSet> = Vec::new();
    for subset in subsets_up_to(k, p) {
        let rows: Vec<usize> = subset.iter().map(|&i| active.indices[i]).collect();
        let gens: Vec<Vec<f64>> = rows.iter().map(|&i| problem.row(i).a.clone()).collect();
        let cm = cone_membership(&neg_c, &gens, problem.norm(), tol)?;
        if !cm.member {
            continue;
        }
        let minimal = !out.iter().any(|d| d.rows.iter().all(|r| rows.contains(r)));
        let (matrix, nonsingular, inv) = if rows.len() == p {
            let m = Matrix::from_rows(&gens)?;
            match inverse_norm(&m, problem.norm()) {
                Ok(v) => (Some(m), true, Some(v)),
                Err(CalmnessError::Singular { .. }) => (Some(m), false, None),
                Err(e) => return Err(e),
            }
        } else {
            (None, false, None)
        };
        out.push(KKTIndexSet {
            labels: rows.iter().map(|&i| problem.row(i).label.name.clone()).collect(),
            rows,
            multipliers: cm.multipliers,
            matrix,
            nonsingular,
            minimal,
            inverse_norm: inv,
        });
    }
    Ok(out)
}

/// The members of `𝒦_b̄(x̄)` with `|D| = p` and `A_D` nonsingular.
pub fn enumerate_t(problem: &Problem, x_bar: &[f64]) -> Result<Vec<KKTIndexSet>> {
    Ok(enumerate_k(problem, x_bar)?.into_iter().filter(|d| d.in_t()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::norm::NormSpec;

    fn label_sets(sets: &[KKTIndexSet]) -> Vec<Vec<String>> {
        sets.iter().map(|d| d.labels.clone()).collect()
    }

    fn strs(v: &[&[&str]]) -> Vec<Vec<String>> {
        v.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect()
    }

    #[test]
    fn example_one_sets() {
        let p = fixtures::example1();
        let t = enumerate_t(&p, &[0.0, 0.0]).unwrap();
        assert_eq!(label_sets(&t), strs(&[&["1", "2"], &["1", "3"]]));
        let k = enumerate_k(&p, &[0.0, 0.0]).unwrap();
        assert_eq!(label_sets(&k), strs(&[&["1", "2"], &["1", "3"]]));
        assert!(k.iter().all(|d| d.minimal));
    }

    #[test]
    fn example_two_sets() {
        let t = enumerate_t(&fixtures::example2(), &[0.0, 0.0]).unwrap();
        assert_eq!(label_sets(&t), strs(&[&["1", "2"], &["1", "3"], &["2", "4"], &["3", "4"]]));
        let norms: Vec<f64> = t.iter().map(|d| d.inverse_norm.unwrap()).collect();
        let expected = [17f64.sqrt(), 5f64.sqrt(), 17f64.sqrt() / 3.0, 1.0];
        for (a, b) in norms.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn example_three_sets() {
        let p = fixtures::example3(1024);
        let x = [-1.0, 0.0];
        let k = enumerate_k(&p, &x).unwrap();
        let singular: Vec<&KKTIndexSet> = k.iter().filter(|d| d.matrix.is_some() && !d.nonsingular).collect();
        assert_eq!(singular.len(), 1);
        assert!(singular[0].labels.iter().all(|l| l.starts_with("circle@")));
        let t = enumerate_t(&p, &x).unwrap();
        assert_eq!(t.len(), 5);
        let mut norms: Vec<f64> = t.iter().map(|d| d.inverse_norm.unwrap()).collect();
        norms.sort_by(f64::total_cmp);
        assert!((norms[0] - 1.0).abs() < 1e-9);
        for v in &norms[1..] {
            assert!((v - 5f64.sqrt()).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_cost_admits_empty_set() {
        let p = Problem::from_dense(vec![0.0, 0.0], vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0], NormSpec::Euclidean)
            .unwrap();
        let k = enumerate_k(&p, &[0.0, 0.0]).unwrap();
        assert!(k[0].labels.is_empty() && k[0].minimal);
        assert!(k[1..].iter().all(|d| !d.minimal));
    }

    #[test]
    fn sets_satisfy_their_invariants() {
        for seed in 0..30 {
            let p = fixtures::random_strongly_unique(seed, 2, 6);
            let x = p.nominal_x().unwrap().to_vec();
            let active = nominal_active_set(&p, &x).unwrap();
            for d in enumerate_t(&p, &x).unwrap() {
                assert_eq!(d.rows.len(), 2);
                assert!(d.rows.iter().all(|r| active.indices.contains(r)));
                let mut r = p.cost().to_vec();
                for (&row, &l) in d.rows.iter().zip(&d.multipliers) {
                    assert!(l >= 0.0);
                    for (ri, ai) in r.iter_mut().zip(&p.row(row).a) {
                        *ri += l * ai;
                    }
                }
                assert!(NormSpec::Euclidean.norm(&r) <= 1e-9);
                assert!(d.matrix.as_ref().unwrap().inverse().is_ok());
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_sum(4, 2), 1 + 4 + 6);
        assert_eq!(binomial_sum(3, 5), 8);
    }
}
