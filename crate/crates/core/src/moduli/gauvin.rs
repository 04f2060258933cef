//! Gauvin-type bound on KKT multiplier sums and the level-set upper bound.

use super::directional::{clm_level_set, PatternSup};
use crate::certify::{nominal_active_set, slater_check};
use crate::error::{CalmnessError, Result};
use crate::geometry::{min_dual_norm_point, Polytope};
use crate::norm::{dot, NormSpec};
use crate::problem::Problem;
use crate::simplex::{LpBuilder, LpStatus};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GauvinData {
    /// `sup_{‖z‖=1} min_t ⟨a_t,z⟩` over the active rows.
    pub alpha: f64,
    /// Infimum of `−⟨c̄,z⟩/α` over admissible `(α, z)`.
    pub lambda_bar: f64,
    /// Minimizer `w = z/α` of the homogenized program.
    pub witness_w: Vec<f64>,
    /// Largest multiplier sum `Σμ_t` with `Σμ_t a_t = −c̄`, which equals `λ̄` by duality.
    pub multiplier_sum: f64,
    /// `‖c̄‖∗ / α`, an upper bound on `λ̄`.
    pub lambda_cap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C2Bound {
    pub value: f64,
    pub gauvin: GauvinData,
    pub level_set: PatternSup,
}

/// `α` computed as `d∗(0, conv{a_t})`, the minimax dual of `sup_z min_t ⟨a_t,z⟩`.
/// Polyhedral norms are cross-checked against the direct program.
pub fn alpha(problem: &Problem, x_bar: &[f64]) -> Result<f64> {
    let active = nominal_active_set(problem, x_bar)?;
    if active.is_empty() {
        return Err(CalmnessError::Precondition("no active constraints at x̄".into()));
    }
    let gens: Vec<Vec<f64>> = active.indices.iter().map(|&i| problem.row(i).a.clone()).collect();
    let value = min_dual_norm_point(&Polytope::new(gens.clone())?, problem.norm())?.distance;
    if problem.norm().is_polyhedral() {
        let direct = alpha_lp(&gens, problem.norm())?;
        if (direct - value).abs() > 1e-7 * value.max(1.0) {
            return Err(CalmnessError::Consistency(format!("α: hull distance {value} vs direct program {direct}")));
        }
    }
    Ok(value)
}

/// `max α s.t. ⟨g,z⟩ ≥ α, ‖z‖ ≤ 1` for the ℓ∞ or ℓ1 ball, variables `(z, α, s)`.
fn alpha_lp(gens: &[Vec<f64>], norm: NormSpec) -> Result<f64> {
    let p = gens[0].len();
    let n = 2 * p + 1;
    let mut lp = LpBuilder::new(n);
    let mut obj = vec![0.0; n];
    obj[p] = -1.0;
    lp.minimize(obj);
    for g in gens {
        let mut row = vec![0.0; n];
        for (k, v) in g.iter().enumerate() {
            row[k] = -v;
        }
        row[p] = 1.0;
        lp.le(row, 0.0);
    }
    for k in 0..p {
        // |z_k| ≤ s_k
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; n];
            row[k] = sign;
            row[p + 1 + k] = -1.0;
            lp.le(row, 0.0);
        }
    }
    match norm {
        NormSpec::Infinity => {
            for k in 0..p {
                let mut row = vec![0.0; n];
                row[p + 1 + k] = 1.0;
                lp.le(row, 1.0);
            }
        }
        _ => {
            let mut row = vec![0.0; n];
            for k in 0..p {
                row[p + 1 + k] = 1.0;
            }
            lp.le(row, 1.0);
        }
    }
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x.expect("optimal")[p]),
        _ => Err(CalmnessError::Consistency("α program is not solvable".into())),
    }
}

/// `α`, `λ̄` and the multiplier-sum certificate at `x̄`. Requires the Slater condition.
pub fn lambda_bar(problem: &Problem, x_bar: &[f64]) -> Result<GauvinData> {
    let slater = slater_check(problem)?;
    if !slater.holds {
        return Err(CalmnessError::Precondition("Slater condition fails".into()));
    }
    let alpha = alpha(problem, x_bar)?;
    let active = nominal_active_set(problem, x_bar)?;
    let p = problem.dim();
    let c = problem.cost();

    let mut lp = LpBuilder::new(p);
    lp.minimize(c.iter().map(|v| -v).collect());
    for &i in &active.indices {
        lp.ge(problem.row(i).a.clone(), 1.0);
    }
    let sol = lp.solve()?;
    let (lambda_bar, witness_w) = match sol.status {
        LpStatus::Optimal => {
            let w = sol.x.expect("optimal");
            (-dot(c, &w), w)
        }
        LpStatus::Infeasible => {
            return Err(CalmnessError::Precondition("no direction strictly increases every active constraint".into()))
        }
        LpStatus::Unbounded => return Err(CalmnessError::NotOptimal { residual: f64::NAN }),
    };

    // dual: max Σμ s.t. Σμ_t a_t = −c̄, μ ≥ 0
    let k = active.len();
    let mut dual = LpBuilder::new(k);
    dual.minimize(vec![-1.0; k]);
    for j in 0..p {
        let row: Vec<f64> = active.indices.iter().map(|&i| problem.row(i).a[j]).collect();
        dual.eq(row, -c[j]);
    }
    for i in 0..k {
        dual.nonneg(i);
    }
    let dsol = dual.solve()?;
    let multiplier_sum = match dsol.status {
        LpStatus::Optimal => -dsol.value.expect("optimal"),
        _ => return Err(CalmnessError::Consistency("multiplier-sum program is not solvable".into())),
    };
    if (multiplier_sum - lambda_bar).abs() > 1e-7 * lambda_bar.abs().max(1.0) {
        return Err(CalmnessError::Consistency(format!("λ̄ = {lambda_bar} but largest multiplier sum is {multiplier_sum}")));
    }
    Ok(GauvinData { alpha, lambda_bar, witness_w, multiplier_sum, lambda_cap: problem.norm().dual_norm(c) / alpha })
}

/// `max{λ̄, 1} · clm L`, an upper bound on the calmness modulus under the Slater condition.
pub fn c2_upper_bound(problem: &Problem, x_bar: &[f64]) -> Result<C2Bound> {
    let gauvin = lambda_bar(problem, x_bar)?;
    let level_set = clm_level_set(problem, x_bar)?;
    Ok(C2Bound { value: gauvin.lambda_bar.max(1.0) * level_set.value, gauvin, level_set })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn example_one_lambda() {
        let g = lambda_bar(&fixtures::example1(), &[0.0, 0.0]).unwrap();
        assert!((g.lambda_bar - 1.0).abs() < 1e-9);
        assert!((g.multiplier_sum - 1.0).abs() < 1e-9);
        assert!(g.lambda_bar <= g.lambda_cap + 1e-12);
        // conv{(−1,0),(−1,−½),(−1,−1)} is closest to 0 at (−1,0)
        assert!((g.alpha - 1.0).abs() < 1e-9);
    }

    #[test]
    fn example_two_cap() {
        let g = lambda_bar(&fixtures::example2(), &[0.0, 0.0]).unwrap();
        assert!(g.lambda_bar <= g.lambda_cap + 1e-12);
        assert!(g.lambda_bar > 0.0);
    }

    #[test]
    fn single_aligned_constraint() {
        let p = Problem::from_dense(vec![0.6, 0.8], vec![vec![-0.6, -0.8]], vec![0.0], NormSpec::Euclidean).unwrap();
        let p = p.with_nominal(vec![0.0, 0.0]).unwrap();
        let g = lambda_bar(&p, &[0.0, 0.0]).unwrap();
        assert!((g.lambda_bar - 1.0).abs() < 1e-9);
    }

    #[test]
    fn alpha_polyhedral_agrees() {
        for norm in [NormSpec::Infinity, NormSpec::One] {
            let p = fixtures::example2().with_norm(norm);
            let a = alpha(&p, &[0.0, 0.0]).unwrap();
            assert!(a > 0.0);
        }
    }

    #[test]
    fn c2_dominates_exact() {
        let c2 = c2_upper_bound(&fixtures::example1(), &[0.0, 0.0]).unwrap();
        assert!((c2.value - 37f64.sqrt()).abs() < 1e-9, "{}", c2.value);
        let c2 = c2_upper_bound(&fixtures::example2(), &[0.0, 0.0]).unwrap();
        assert!(c2.value >= 5f64.sqrt());
    }

    #[test]
    fn no_slater_refused() {
        let p = Problem::from_dense(vec![1.0], vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0], NormSpec::Euclidean).unwrap();
        assert!(matches!(lambda_bar(&p, &[0.0]), Err(CalmnessError::Precondition(_))));
    }
}
