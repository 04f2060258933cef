//! Bounds built from inverse norms of square active submatrices.

use super::kkt::{binomial_sum, enumerate_t, MAX_CANDIDATES};
use crate::certify::{nurnberger_check, strong_uniqueness_check, subsets_of_size};
use crate::error::{CalmnessError, Result};
use crate::geometry::inverse_norm;
use crate::linalg::Matrix;
use crate::problem::Problem;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxInverseNorm {
    pub value: f64,
    /// Every maximizing index set, label-sorted; the first is the canonical witness.
    pub argmax: Vec<Vec<String>>,
}

impl MaxInverseNorm {
    pub fn witness(&self) -> &[String] {
        &self.argmax[0]
    }
}

fn max_with_ties(candidates: Vec<(Vec<String>, f64)>) -> Option<MaxInverseNorm> {
    let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    let tie = 1e-9 * best.max(1.0);
    let mut argmax: Vec<Vec<String>> =
        candidates.into_iter().filter(|c| c.1 >= best - tie).map(|c| c.0).collect();
    argmax.sort();
    Some(MaxInverseNorm { value: best, argmax })
}

fn max_over_t(problem: &Problem, x_bar: &[f64]) -> Result<MaxInverseNorm> {
    let t = enumerate_t(problem, x_bar)?;
    let cands = t.into_iter().map(|d| (d.labels, d.inverse_norm.expect("members of T are nonsingular"))).collect();
    max_with_ties(cands).ok_or_else(|| CalmnessError::Precondition("no nonsingular KKT index set of size p".into()))
}

/// `max_{D ∈ 𝒯_b̄(x̄)} ‖A_D⁻¹‖`, an upper bound on the calmness modulus under strong uniqueness.
pub fn c3_upper_bound(problem: &Problem, x_bar: &[f64]) -> Result<MaxInverseNorm> {
    if !strong_uniqueness_check(problem, x_bar)?.holds {
        return Err(CalmnessError::Precondition("−c̄ is not interior to the active cone".into()));
    }
    max_over_t(problem, x_bar)
}

/// The same maximum read as a lower bound on the Lipschitz modulus; needs the Nürnberger condition.
pub fn lip_lower_bound(problem: &Problem, x_bar: &[f64]) -> Result<MaxInverseNorm> {
    let nb = nurnberger_check(problem, x_bar)?;
    if !nb.holds {
        let d = nb.violating.unwrap_or_default().join(",");
        return Err(CalmnessError::Precondition(format!(
            "Nürnberger condition fails (KKT set {{{d}}} has fewer than p directions)"
        )));
    }
    max_over_t(problem, x_bar)
}

/// `max ‖A_D⁻¹‖` over every nonsingular `p`-subset of rows. Finite problems only.
pub fn li_gamma(problem: &Problem) -> Result<MaxInverseNorm> {
    if problem.is_discretized() {
        return Err(CalmnessError::Precondition("γ is defined over all p-subsets of a finite index set".into()));
    }
    let p = problem.dim();
    let m = problem.num_rows();
    if binomial_sum(m, p) > MAX_CANDIDATES {
        return Err(CalmnessError::TooLarge { distinct: m, limit: MAX_CANDIDATES });
    }
    let mut cands = Vec::new();
    for s in subsets_of_size(m, p) {
        let a = Matrix::from_rows(&s.iter().map(|&i| problem.row(i).a.clone()).collect::<Vec<_>>())?;
        match inverse_norm(&a, problem.norm()) {
            Ok(v) => cands.push((s.iter().map(|&i| problem.row(i).label.name.clone()).collect(), v)),
            Err(CalmnessError::Singular { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    max_with_ties(cands).ok_or_else(|| CalmnessError::Precondition("no nonsingular p-subset of rows".into()))
}
