//! Minimum-norm point of a polytope: Wolfe's algorithm for ℓ2 and LP
//! reformulations for the polyhedral norms.

use super::Polytope;
use crate::error::{CalmnessError, Result};
use crate::linalg::Matrix;
use crate::norm::{dot, NormSpec};
use crate::simplex::{LpBuilder, LpStatus};
use serde::{Deserialize, Serialize};

/// Wolfe's optimality gap `‖x‖² − min_j ⟨x,v_j⟩`, relative to `‖x‖²`.
const WOLFE_GAP: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinNormPoint {
    pub distance: f64,
    /// The minimizer `u = Σ λ_i v_i`.
    pub witness: Vec<f64>,
    /// Convex weights aligned with the polytope vertices.
    pub coefficients: Vec<f64>,
}

/// `d∗(0, conv P)`: the smallest dual norm of a point of `P`, where `norm` is the primal norm.
pub fn min_dual_norm_point(polytope: &Polytope, norm: NormSpec) -> Result<MinNormPoint> {
    min_norm_point(polytope, norm.dual())
}

/// The smallest `measure`-norm of a point of `P`.
pub fn min_norm_point(polytope: &Polytope, measure: NormSpec) -> Result<MinNormPoint> {
    let pts = polytope.vertices();
    let coeffs = match measure {
        NormSpec::Euclidean => wolfe(pts),
        NormSpec::Infinity => lp_min_sup(pts)?,
        NormSpec::One => lp_min_sum(pts)?,
    };
    let witness = combine(pts, &coeffs);
    let scale = pts.iter().map(|v| measure.norm(v)).fold(0.0, f64::max);
    let mut distance = measure.norm(&witness);
    if distance <= 1e-12 * scale {
        distance = 0.0;
    }
    Ok(MinNormPoint { distance, witness, coefficients: coeffs })
}

fn combine(pts: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; pts[0].len()];
    for (v, &l) in pts.iter().zip(lambda) {
        if l != 0.0 {
            for (ui, vi) in u.iter_mut().zip(v) {
                *ui += l * vi;
            }
        }
    }
    u
}

fn sq(v: &[f64]) -> f64 {
    dot(v, v)
}

/// Minimizes `‖Σ μ_i v_i‖₂` subject to `Σ μ_i = 1` over the given support.
fn affine_minimizer(pts: &[Vec<f64>], support: &[usize]) -> Option<Vec<f64>> {
    let s = support.len();
    let mut k = Matrix::zeros(s + 1, s + 1);
    for i in 0..s {
        for j in 0..s {
            k[(i, j)] = dot(&pts[support[i]], &pts[support[j]]);
        }
        k[(i, s)] = 1.0;
        k[(s, i)] = 1.0;
    }
    let mut rhs = vec![0.0; s + 1];
    rhs[s] = 1.0;
    let sol = k.solve(&rhs).ok()?;
    Some(sol[..s].to_vec())
}

/// Wolfe's minimum-norm-point algorithm. Returns convex weights over all points.
fn wolfe(pts: &[Vec<f64>]) -> Vec<f64> {
    let k = pts.len();
    let maxsq = pts.iter().map(|v| sq(v)).fold(0.0, f64::max);
    let start = (0..k).min_by(|&i, &j| sq(&pts[i]).total_cmp(&sq(&pts[j]))).unwrap();
    let mut support = vec![start];
    let mut lam = vec![1.0];
    let mut x = pts[start].clone();
    if maxsq == 0.0 {
        return expand(k, &support, &lam);
    }
    let max_major = 10 * k.max(1) + 10;
    for _ in 0..max_major {
        let xx = sq(&x);
        if xx <= 1e-26 * maxsq {
            break;
        }
        let (j, best) = (0..k)
            .map(|j| (j, dot(&x, &pts[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if xx - best <= WOLFE_GAP * xx || support.contains(&j) {
            break;
        }
        support.push(j);
        lam.push(0.0);
        for _ in 0..=k + 1 {
            let Some(mu) = affine_minimizer(pts, &support) else {
                // affinely dependent support: undo the addition
                support.pop();
                lam.pop();
                return expand(k, &support, &lam);
            };
            if mu.iter().all(|&m| m > 1e-15) {
                lam = mu;
                break;
            }
            let mut theta = 1.0f64;
            for (l, m) in lam.iter().zip(&mu) {
                if *m <= 1e-15 && l - m > 0.0 {
                    theta = theta.min(l / (l - m));
                }
            }
            for (l, m) in lam.iter_mut().zip(&mu) {
                *l = (1.0 - theta) * *l + theta * m;
            }
            let keep: Vec<usize> = (0..support.len()).filter(|&i| lam[i] > 1e-15).collect();
            let keep = if keep.is_empty() {
                vec![(0..lam.len()).max_by(|&a, &b| lam[a].total_cmp(&lam[b])).unwrap()]
            } else {
                keep
            };
            support = keep.iter().map(|&i| support[i]).collect();
            lam = keep.iter().map(|&i| lam[i]).collect();
            let total: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= total);
        }
        x = combine_support(pts, &support, &lam);
    }
    expand(k, &support, &lam)
}

fn combine_support(pts: &[Vec<f64>], support: &[usize], lam: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; pts[0].len()];
    for (&i, &l) in support.iter().zip(lam) {
        for (ui, vi) in u.iter_mut().zip(&pts[i]) {
            *ui += l * vi;
        }
    }
    u
}

fn expand(k: usize, support: &[usize], lam: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; k];
    for (&i, &l) in support.iter().zip(lam) {
        out[i] = l.max(0.0);
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|l| *l /= total);
    out
}

/// Adds the simplex constraints on the first `k` variables.
fn simplex_constraints(lp: &mut LpBuilder, k: usize, n: usize) {
    for i in 0..k {
        lp.nonneg(i);
    }
    let mut ones = vec![0.0; n];
    ones[..k].iter_mut().for_each(|v| *v = 1.0);
    lp.eq(ones, 1.0);
}

fn lp_weights(lp: &LpBuilder, k: usize) -> Result<Vec<f64>> {
    let sol = lp.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(CalmnessError::Consistency(format!("min-norm LP ended with status {:?}", sol.status)));
    }
    let x = sol.x.expect("optimal LP has a point");
    let mut lam: Vec<f64> = x[..k].iter().map(|v| v.max(0.0)).collect();
    let total: f64 = lam.iter().sum();
    lam.iter_mut().for_each(|l| *l /= total);
    Ok(lam)
}

/// `min s` s.t. `−s ≤ (Vλ)_j ≤ s`, `λ` in the simplex.
fn lp_min_sup(pts: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = pts.len();
    let p = pts[0].len();
    let n = k + 1;
    let mut lp = LpBuilder::new(n);
    let mut obj = vec![0.0; n];
    obj[k] = 1.0;
    lp.minimize(obj);
    simplex_constraints(&mut lp, k, n);
    for j in 0..p {
        let mut row: Vec<f64> = pts.iter().map(|v| v[j]).collect();
        row.push(-1.0);
        lp.le(row.clone(), 0.0);
        let mut neg: Vec<f64> = row[..k].iter().map(|v| -v).collect();
        neg.push(-1.0);
        lp.le(neg, 0.0);
    }
    lp_weights(&lp, k)
}

/// `min Σ s_j` s.t. `−s_j ≤ (Vλ)_j ≤ s_j`, `λ` in the simplex.
fn lp_min_sum(pts: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = pts.len();
    let p = pts[0].len();
    let n = k + p;
    let mut lp = LpBuilder::new(n);
    let mut obj = vec![0.0; n];
    obj[k..].iter_mut().for_each(|v| *v = 1.0);
    lp.minimize(obj);
    simplex_constraints(&mut lp, k, n);
    for j in 0..p {
        let mut row = vec![0.0; n];
        for (i, v) in pts.iter().enumerate() {
            row[i] = v[j];
        }
        row[k + j] = -1.0;
        lp.le(row.clone(), 0.0);
        for v in row[..k].iter_mut() {
            *v = -*v;
        }
        lp.le(row, 0.0);
    }
    lp_weights(&lp, k)
}
