//! Exact evaluation of `limsup_{x→x̄, f(x)>0} 1/d∗(0, ∂f(x))` for a max-of-affine
//! function that vanishes at `x̄`.
//!
//! Near `x̄` only the terms vanishing at `x̄` matter and `f(x̄ + εu) = ε·max_g ⟨g,u⟩`, so
//! the subdifferentials seen along the way are the hulls of the attainment patterns
//! `E ⊆ G` of the homogeneous function. A pattern is realizable when some `u` has
//! `⟨g,u⟩ = 1` on `E` and `⟨g,u⟩ ≤ 1` elsewhere; every such `E` is contained in an exact
//! pattern whose hull is larger, so maximizing over these weak patterns is exact.

use super::kkt::{enumerate_k, MAX_CANDIDATES};
use crate::certify::{nominal_active_set, strong_uniqueness_check};
use crate::error::{CalmnessError, Result};
use crate::geometry::{min_dual_norm_point, Polytope};
use crate::norm::{sup_norm, NormSpec};
use crate::problem::Problem;
use crate::simplex::{LpBuilder, LpStatus};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSup {
    pub value: f64,
    /// Labels of the maximizing pattern.
    pub pattern: Vec<String>,
    /// A direction realizing it.
    pub direction: Vec<f64>,
    pub patterns_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalResult {
    pub value: f64,
    /// The KKT set attaining the maximum.
    pub kkt_set: Vec<String>,
    pub pattern: Vec<String>,
    pub direction: Vec<f64>,
}

/// Gradient family with labels, duplicates (within 1e-12) merged.
fn dedupe(family: Vec<(Vec<f64>, String)>) -> Vec<(Vec<f64>, String)> {
    let mut out: Vec<(Vec<f64>, String)> = Vec::new();
    for (g, l) in family {
        match out.iter_mut().find(|(h, _)| sup_norm(&crate::geometry::sub(h, &g)) <= 1e-12) {
            Some((_, lab)) => {
                lab.push('|');
                lab.push_str(&l);
            }
            None => out.push((g, l)),
        }
    }
    out
}

/// A direction `u` with `⟨g,u⟩ = 1` on `pattern` and `≤ 1` on the rest, if one exists.
fn realize(family: &[(Vec<f64>, String)], pattern: &[usize]) -> Result<Option<Vec<f64>>> {
    let p = family[0].0.len();
    let mut lp = LpBuilder::new(p);
    for (i, (g, _)) in family.iter().enumerate() {
        if pattern.contains(&i) {
            lp.eq(g.clone(), 1.0);
        } else {
            lp.le(g.clone(), 1.0);
        }
    }
    let sol = lp.solve()?;
    Ok(match sol.status {
        LpStatus::Infeasible => None,
        _ => sol.x,
    })
}

/// Max over realizable patterns of `1/d∗(0, conv E)`. Zero when no pattern is realizable.
pub fn pattern_sup(family: Vec<(Vec<f64>, String)>, norm: NormSpec) -> Result<PatternSup> {
    let family = dedupe(family);
    let n = family.len();
    let mut best = PatternSup { value: 0.0, pattern: vec![], direction: vec![], patterns_checked: 0 };
    if n == 0 {
        return Ok(best);
    }
    let mut level: Vec<Vec<usize>> = vec![vec![]];
    let mut checked = 0usize;
    for size in 1..=n {
        let alive: HashSet<Vec<usize>> = level.iter().cloned().collect();
        let mut next = Vec::new();
        for base in &level {
            let start = base.last().map_or(0, |&l| l + 1);
            for j in start..n {
                let mut cand = base.clone();
                cand.push(j);
                // every subset one smaller must be realizable
                if size > 1 && !(0..cand.len()).all(|drop| {
                    let mut s = cand.clone();
                    s.remove(drop);
                    alive.contains(&s)
                }) {
                    continue;
                }
                checked += 1;
                if checked > MAX_CANDIDATES {
                    return Err(CalmnessError::TooLarge { distinct: n, limit: MAX_CANDIDATES });
                }
                let pts: Vec<Vec<f64>> = cand.iter().map(|&i| family[i].0.clone()).collect();
                let d = min_dual_norm_point(&Polytope::new(pts)?, norm)?.distance;
                if d <= 0.0 {
                    continue;
                }
                let Some(u) = realize(&family, &cand)? else { continue };
                let score = 1.0 / d;
                if score > best.value * (1.0 + 1e-12) {
                    best.value = score;
                    best.pattern = cand.iter().map(|&i| family[i].1.clone()).collect();
                    best.direction = u;
                }
                next.push(cand);
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    best.patterns_checked = checked;
    Ok(best)
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

/// Gradients of `f_D` vanishing at `x̄`: `a_t` for active `t` and `−a_t` for `t ∈ D`.
pub(crate) fn kkt_family(problem: &Problem, active: &[usize], d: &[usize]) -> Vec<(Vec<f64>, String)> {
    let mut fam: Vec<(Vec<f64>, String)> =
        active.iter().map(|&i| (problem.row(i).a.clone(), problem.row(i).label.name.clone())).collect();
    fam.extend(d.iter().map(|&i| (neg(&problem.row(i).a), format!("-{}", problem.row(i).label.name))));
    fam
}

/// `sup_{D ∈ 𝒦} limsup 1/d∗(0, ∂f_D(x))` without checking uniqueness: always an upper
/// bound on the calmness modulus of a finite problem, and equal to it for a unique solution.
pub fn c1_directional(problem: &Problem, x_bar: &[f64]) -> Result<DirectionalResult> {
    let active = nominal_active_set(problem, x_bar)?;
    let sets = enumerate_k(problem, x_bar)?;
    if sets.is_empty() {
        return Err(CalmnessError::NotOptimal { residual: f64::NAN });
    }
    let mut best = DirectionalResult { value: 0.0, kkt_set: vec![], pattern: vec![], direction: vec![] };
    for d in &sets {
        let r = pattern_sup(kkt_family(problem, &active.indices, &d.rows), problem.norm())?;
        log::debug!("KKT set {:?}: {} ({} patterns)", d.labels, r.value, r.patterns_checked);
        if r.value > best.value * (1.0 + 1e-12) {
            best = DirectionalResult { value: r.value, kkt_set: d.labels.clone(), pattern: r.pattern, direction: r.direction };
        }
    }
    Ok(best)
}

/// The exact calmness modulus for a finite problem with a unique solution.
pub fn c1_directional_exact(problem: &Problem, x_bar: &[f64]) -> Result<DirectionalResult> {
    if !strong_uniqueness_check(problem, x_bar)?.holds {
        return Err(CalmnessError::NotUnique(
            "−c̄ lies on the boundary of the active cone, so the optimal face has more than one point".into(),
        ));
    }
    c1_directional(problem, x_bar)
}

/// Calmness modulus of the level-set map at `((c̄'x̄, b̄), x̄)` through the same engine applied to `f̄`.
pub fn clm_level_set(problem: &Problem, x_bar: &[f64]) -> Result<PatternSup> {
    let active = nominal_active_set(problem, x_bar)?;
    let mut fam = vec![(problem.cost().to_vec(), "c".to_string())];
    fam.extend(active.indices.iter().map(|&i| (problem.row(i).a.clone(), problem.row(i).label.name.clone())));
    pattern_sup(fam, problem.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn example_one_exact() {
        let r = c1_directional_exact(&fixtures::example1(), &[0.0, 0.0]).unwrap();
        assert!((r.value - 17f64.sqrt()).abs() < 1e-9, "{}", r.value);
        assert_eq!(r.kkt_set, ["1", "2"]);
        let mut pat = r.pattern.clone();
        pat.sort();
        assert_eq!(pat, ["-2", "1"]);
    }

    #[test]
    fn example_two_exact() {
        let r = c1_directional_exact(&fixtures::example2(), &[0.0, 0.0]).unwrap();
        assert!((r.value - 5f64.sqrt()).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn example_three_grid_exact() {
        let r = c1_directional_exact(&fixtures::example3(1024), &[-1.0, 0.0]).unwrap();
        assert!((r.value - 5f64.sqrt()).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn one_dimensional_single_constraint() {
        // min x s.t. −x ≤ b: x(b) = −b, modulus 1
        let p = Problem::from_dense(vec![1.0], vec![vec![-1.0]], vec![0.0], NormSpec::Euclidean).unwrap();
        let r = c1_directional_exact(&p, &[0.0]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_unique_refused_but_upper_bound_available() {
        let p = fixtures::degenerate_ray();
        assert!(matches!(c1_directional_exact(&p, &[0.0, 0.0]), Err(CalmnessError::NotUnique(_))));
        assert!(c1_directional(&p, &[0.0, 0.0]).unwrap().value > 0.0);
    }

    #[test]
    fn invariant_under_row_permutation() {
        for seed in 0..20 {
            let p = fixtures::random_strongly_unique(seed, 2, 5);
            let x = p.nominal_x().unwrap().to_vec();
            let base = c1_directional_exact(&p, &x).unwrap().value;
            let mut rows = p.rows().to_vec();
            rows.reverse();
            let shift = seed as usize % rows.len();
            rows.rotate_left(shift);
            let q = Problem::new(p.cost().to_vec(), rows, p.norm()).unwrap();
            let perm = c1_directional_exact(&q, &x).unwrap().value;
            assert!((base - perm).abs() <= 1e-9 * base.max(1.0), "seed {seed}: {base} vs {perm}");
        }
    }

    #[test]
    fn level_set_modulus_example_one() {
        // the pair {c̄, a₁} is the worst realizable pattern: 1/d(0, [(1,1/3), (−1,0)])
        let r = clm_level_set(&fixtures::example1(), &[0.0, 0.0]).unwrap();
        let expected = (4.0f64 + 1.0 / 9.0).sqrt() * 3.0;
        assert!((r.value - expected).abs() < 1e-9, "{} vs {expected}", r.value);
    }
}
