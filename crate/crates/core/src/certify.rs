//! Regularity certificates at the nominal data: Slater, KKT, strong
//! uniqueness and the Nürnberger condition.

use crate::error::{CalmnessError, Result};
use crate::norm::{sup_norm, NormSpec};
use crate::problem::{ActiveSet, Problem};
use crate::simplex::{solve_lp, LpBuilder, LpStatus};
use serde::{Deserialize, Serialize};

/// Rows whose unit directions differ by less than this (in ℓ2) are treated as parallel.
pub const PARALLEL_TOL: f64 = 1e-6;
/// Largest number of distinct active directions accepted by subset enumeration.
pub const MAX_DIRECTIONS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaterResult {
    pub holds: bool,
    /// Optimal `δ` of `max δ s.t. ⟨a_t,x⟩ + δ ≤ b_t`, capped at 1; `None` when the system is infeasible.
    pub margin: Option<f64>,
    pub witness: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeMembership {
    pub member: bool,
    /// Nonnegative weights aligned with the generators; at most `p` are nonzero.
    pub multipliers: Vec<f64>,
    /// `‖v − Σ λ_t g_t‖∗`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KKTCertificate {
    pub support: Vec<String>,
    pub multipliers: Vec<f64>,
    /// `‖c + Σ λ_t a_t‖∗`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongUniqueness {
    pub holds: bool,
    /// Largest `δ ≤ 1` with `−c̄ ± δe_i` in the active cone for every `i`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NurnbergerResult {
    pub holds: bool,
    /// Labels of a KKT set with fewer than `p` directions, when one exists.
    pub violating: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub x_bar: Vec<f64>,
    pub active: Vec<String>,
    pub slater: SlaterResult,
    pub kkt: Option<KKTCertificate>,
    pub strong_unique: StrongUniqueness,
    pub nurnberger: NurnbergerResult,
    pub aubin: bool,
}

/// Active rows grouped by direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGroup {
    /// Row positions sharing this direction, increasing.
    pub rows: Vec<usize>,
    pub direction: Vec<f64>,
}

/// The nominal point: the stored one, else a vertex solution of the nominal LP.
pub fn nominal_point(problem: &Problem) -> Result<Vec<f64>> {
    if let Some(x) = problem.nominal_x() {
        let tol = problem.default_tolerances();
        if let Some((i, v)) = problem.worst_violation(x, tol.feas.max(tol.active))? {
            return Err(CalmnessError::Infeasible { label: problem.row(i).label.name.clone(), violation: v });
        }
        return Ok(x.to_vec());
    }
    let sol = solve_lp(problem)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x.expect("optimal solution has a point")),
        LpStatus::Infeasible => Err(CalmnessError::Precondition("nominal problem is infeasible".into())),
        LpStatus::Unbounded => Err(CalmnessError::Precondition("nominal problem is unbounded".into())),
    }
}

/// Active set at `x` with the problem's default tolerance.
pub fn nominal_active_set(problem: &Problem, x: &[f64]) -> Result<ActiveSet> {
    problem.active_set(x, problem.default_tolerances().active)
}

pub fn slater_check(problem: &Problem) -> Result<SlaterResult> {
    let p = problem.dim();
    let xbar_size = problem.nominal_x().map_or(0.0, sup_norm);
    let bmax = problem.rows().iter().fold(0.0f64, |m, r| m.max(r.b.abs()));
    let radius = 1.0 + xbar_size + bmax;
    let n = p + 1;
    let mut lp = LpBuilder::new(n);
    let mut obj = vec![0.0; n];
    obj[p] = -1.0;
    lp.minimize(obj);
    for r in problem.rows() {
        let mut row = r.a.clone();
        row.push(1.0);
        lp.le(row, r.b);
    }
    for i in 0..p {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        lp.le(e.clone(), radius);
        lp.ge(e, -radius);
    }
    let mut cap = vec![0.0; n];
    cap[p] = 1.0;
    lp.le(cap, 1.0);
    let sol = lp.solve()?;
    match sol.status {
        LpStatus::Optimal => {
            let z = sol.x.expect("optimal");
            let margin = z[p];
            Ok(SlaterResult { holds: margin > 1e-9, margin: Some(margin), witness: z[..p].to_vec(), radius })
        }
        LpStatus::Unbounded => Err(CalmnessError::UnboundedAuxiliary { radius }),
        LpStatus::Infeasible => Ok(SlaterResult { holds: false, margin: None, witness: vec![0.0; p], radius }),
    }
}

/// Tests `v ∈ cone{g_1, …, g_k}`; the residual is measured in the dual of `norm`.
pub fn cone_membership(v: &[f64], generators: &[Vec<f64>], norm: NormSpec, tol_kkt: f64) -> Result<ConeMembership> {
    let p = v.len();
    let k = generators.len();
    for g in generators {
        if g.len() != p {
            return Err(CalmnessError::dim(p, g.len()));
        }
    }
    if k == 0 {
        let residual = norm.dual_norm(v);
        return Ok(ConeMembership { member: residual <= tol_kkt, multipliers: vec![], residual });
    }
    // min Σ r_j  s.t.  −r ≤ v − Gλ ≤ r, λ ≥ 0
    let n = k + p;
    let mut lp = LpBuilder::new(n);
    let mut obj = vec![0.0; n];
    obj[k..].iter_mut().for_each(|x| *x = 1.0);
    lp.minimize(obj);
    for i in 0..k {
        lp.nonneg(i);
    }
    for j in 0..p {
        let mut row = vec![0.0; n];
        for (i, g) in generators.iter().enumerate() {
            row[i] = g[j];
        }
        row[k + j] = 1.0;
        lp.ge(row.clone(), v[j]);
        for x in row[..k].iter_mut() {
            *x = -*x;
        }
        lp.ge(row, -v[j]);
    }
    let sol = lp.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(CalmnessError::Consistency(format!("cone membership LP ended {:?}", sol.status)));
    }
    let z = sol.x.expect("optimal");
    let mut lambda: Vec<f64> = z[..k].iter().map(|x| x.max(0.0)).collect();
    caratheodory(generators, &mut lambda);
    let residual = norm.dual_norm(&cone_residual(v, generators, &lambda));
    Ok(ConeMembership { member: residual <= tol_kkt, multipliers: lambda, residual })
}

fn cone_residual(v: &[f64], generators: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let mut r = v.to_vec();
    for (g, &l) in generators.iter().zip(lambda) {
        for (ri, gi) in r.iter_mut().zip(g) {
            *ri -= l * gi;
        }
    }
    r
}

/// Shrinks the support of `λ` until its generators are linearly independent, keeping `Gλ` fixed.
fn caratheodory(generators: &[Vec<f64>], lambda: &mut [f64]) {
    loop {
        let support: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect();
        let cols: Vec<&[f64]> = support.iter().map(|&i| generators[i].as_slice()).collect();
        let Some(z) = null_vector(&cols) else { return };
        let z = if z.iter().any(|&x| x > 0.0) { z } else { z.iter().map(|x| -x).collect() };
        let (pos, theta) = support
            .iter()
            .zip(&z)
            .filter(|(_, &zi)| zi > 0.0)
            .map(|(&i, &zi)| (i, lambda[i] / zi))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("positive entry exists");
        for (&i, &zi) in support.iter().zip(&z) {
            lambda[i] = (lambda[i] - theta * zi).max(0.0);
        }
        lambda[pos] = 0.0;
    }
}

/// A nonzero `z` with `Σ z_i c_i = 0`, if the columns are linearly dependent.
fn null_vector(cols: &[&[f64]]) -> Option<Vec<f64>> {
    let k = cols.len();
    if k == 0 {
        return None;
    }
    let p = cols[0].len();
    // row-reduce the p×k matrix [c_1 … c_k]
    let scale = cols.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut m: Vec<Vec<f64>> = (0..p).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..k {
        if r == p {
            break;
        }
        let (piv, big) = (r..p).map(|i| (i, m[i][c].abs())).fold((r, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if big <= 1e-12 * scale {
            continue;
        }
        m.swap(r, piv);
        let d = m[r][c];
        for j in 0..k {
            m[r][j] /= d;
        }
        for i in 0..p {
            if i != r {
                let f = m[i][c];
                if f != 0.0 {
                    for j in 0..k {
                        m[i][j] -= f * m[r][j];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free = (0..k).find(|c| !pivots.contains(c))?;
    let mut z = vec![0.0; k];
    z[free] = 1.0;
    for (row, &pc) in pivots.iter().enumerate() {
        z[pc] = -m[row][free];
    }
    Some(z)
}

/// KKT multipliers for `−c̄` over the active rows at `x`.
pub fn kkt_certificate(problem: &Problem, active: &ActiveSet) -> Result<Option<KKTCertificate>> {
    let gens: Vec<Vec<f64>> = active.indices.iter().map(|&i| problem.row(i).a.clone()).collect();
    let neg_c: Vec<f64> = problem.cost().iter().map(|v| -v).collect();
    let tol = problem.default_tolerances().kkt;
    let cm = cone_membership(&neg_c, &gens, problem.norm(), tol)?;
    if !cm.member {
        return Ok(None);
    }
    let mut support = vec![];
    let mut multipliers = vec![];
    for (k, &l) in cm.multipliers.iter().enumerate() {
        if l > 0.0 {
            support.push(active.labels[k].name.clone());
            multipliers.push(l);
        }
    }
    Ok(Some(KKTCertificate { support, multipliers, residual: cm.residual }))
}

/// Checks `−c̄ ∈ int cone{a_t : t active at x̄}` through `2p` cone memberships sharing one `δ`.
pub fn strong_uniqueness_check(problem: &Problem, x_bar: &[f64]) -> Result<StrongUniqueness> {
    let active = nominal_active_set(problem, x_bar)?;
    require_kkt(problem, &active)?;
    let p = problem.dim();
    let gens: Vec<&[f64]> = active.indices.iter().map(|&i| problem.row(i).a.as_slice()).collect();
    let k = gens.len();
    if k == 0 {
        return Ok(StrongUniqueness { holds: false, margin: 0.0 });
    }
    let blocks = 2 * p;
    let n = 1 + blocks * k;
    let mut lp = LpBuilder::new(n);
    let mut obj = vec![0.0; n];
    obj[0] = -1.0;
    lp.minimize(obj);
    let mut cap = vec![0.0; n];
    cap[0] = 1.0;
    lp.le(cap, 1.0);
    for v in 1..n {
        lp.nonneg(v);
    }
    for blk in 0..blocks {
        let i = blk / 2;
        let s = if blk % 2 == 0 { 1.0 } else { -1.0 };
        for j in 0..p {
            // Σ λ_t a_tj − s δ e_ij = −c̄_j
            let mut row = vec![0.0; n];
            for (t, g) in gens.iter().enumerate() {
                row[1 + blk * k + t] = g[j];
            }
            if i == j {
                row[0] = -s;
            }
            lp.eq(row, -problem.cost()[j]);
        }
    }
    let sol = lp.solve()?;
    let margin = match sol.status {
        LpStatus::Optimal => sol.x.expect("optimal")[0],
        _ => 0.0,
    };
    let tol = 1e-9 * sup_norm(problem.cost()).max(1.0);
    Ok(StrongUniqueness { holds: margin > tol, margin })
}

fn require_kkt(problem: &Problem, active: &ActiveSet) -> Result<KKTCertificate> {
    match kkt_certificate(problem, active)? {
        Some(c) => Ok(c),
        None => {
            let gens: Vec<Vec<f64>> = active.indices.iter().map(|&i| problem.row(i).a.clone()).collect();
            let neg_c: Vec<f64> = problem.cost().iter().map(|v| -v).collect();
            let residual = cone_membership(&neg_c, &gens, problem.norm(), f64::INFINITY)?.residual;
            Err(CalmnessError::NotOptimal { residual })
        }
    }
}

/// Groups the given rows by direction (unit ℓ2 vectors closer than [`PARALLEL_TOL`]).
pub fn distinct_directions(problem: &Problem, rows: &[usize]) -> Result<Vec<DirectionGroup>> {
    let mut groups: Vec<DirectionGroup> = Vec::new();
    for &i in rows {
        let a = &problem.row(i).a;
        let n = NormSpec::Euclidean.norm(a);
        if n == 0.0 {
            return Err(CalmnessError::ZeroNormal);
        }
        let u: Vec<f64> = a.iter().map(|v| v / n).collect();
        match groups.iter_mut().find(|g| NormSpec::Euclidean.distance(&g.direction, &u) < PARALLEL_TOL) {
            Some(g) => g.rows.push(i),
            None => groups.push(DirectionGroup { rows: vec![i], direction: u }),
        }
    }
    Ok(groups)
}

/// All index subsets of `0..n` of size at most `max_size`, by size then lexicographically.
pub(crate) fn subsets_up_to(n: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for size in 1..=max_size.min(n) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.clone());
            let mut i = size;
            while i > 0 && idx[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// All index subsets of `0..n` of exactly `size` elements, lexicographically.
pub(crate) fn subsets_of_size(n: usize, size: usize) -> Vec<Vec<usize>> {
    subsets_up_to(n, size).into_iter().filter(|s| s.len() == size).collect()
}

pub fn nurnberger_check(problem: &Problem, x_bar: &[f64]) -> Result<NurnbergerResult> {
    let active = nominal_active_set(problem, x_bar)?;
    let groups = distinct_directions(problem, &active.indices)?;
    if groups.len() > MAX_DIRECTIONS {
        return Err(CalmnessError::TooLarge { distinct: groups.len(), limit: MAX_DIRECTIONS });
    }
    let p = problem.dim();
    let neg_c: Vec<f64> = problem.cost().iter().map(|v| -v).collect();
    let tol = problem.default_tolerances().kkt;
    for subset in subsets_up_to(groups.len(), p.saturating_sub(1)) {
        let gens: Vec<Vec<f64>> = subset.iter().map(|&g| problem.row(groups[g].rows[0]).a.clone()).collect();
        if cone_membership(&neg_c, &gens, problem.norm(), tol)?.member {
            let mut labels: Vec<String> = subset
                .iter()
                .flat_map(|&g| groups[g].rows.iter().map(|&i| problem.row(i).label.name.clone()))
                .collect();
            labels.sort();
            return Ok(NurnbergerResult { holds: false, violating: Some(labels) });
        }
    }
    Ok(NurnbergerResult { holds: true, violating: None })
}

/// Runs every certificate at the nominal point.
pub fn certify(problem: &Problem) -> Result<ConditionReport> {
    let x_bar = nominal_point(problem)?;
    let active = nominal_active_set(problem, &x_bar)?;
    let kkt = require_kkt(problem, &active)?;
    let slater = slater_check(problem)?;
    let strong_unique = strong_uniqueness_check(problem, &x_bar)?;
    let nurnberger = nurnberger_check(problem, &x_bar)?;
    let aubin = slater.holds && nurnberger.holds;
    Ok(ConditionReport {
        active: active.label_names(),
        x_bar,
        slater,
        kkt: Some(kkt),
        strong_unique,
        nurnberger,
        aubin,
    })
}
