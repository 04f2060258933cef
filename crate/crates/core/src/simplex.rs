//! Dense simplex for `min ⟨c,x⟩ s.t. Ax ≤ b` with free `x`.
//!
//! The solver pivots on the dual standard form `min b'y, A'y = −c, y ≥ 0`,
//! which has only `p` equality rows however many constraints the primal has.
//! Simplex multipliers of a dual basis are exactly a primal vertex
//! `x = A_B⁻¹ b_B`, and the dual reduced costs are the primal slacks
//! `b_j − ⟨a_j,x⟩`. Pricing picks the most violated primal constraint
//! (reduced cost scaled by `‖a_j‖`) and switches to Bland's rule for both
//! entering and leaving variables after a run of degenerate pivots, so
//! degenerate vertices (the norm at the nominal data of every interesting
//! instance) cannot cycle.

use crate::error::{CalmnessError, Result};
use crate::linalg::Matrix;
use crate::norm::dot;
use crate::problem::Problem;
use serde::{Deserialize, Serialize};

const TOL_PIVOT: f64 = 1e-9;
const TOL_REDUCED: f64 = 1e-10;
const TOL_PHASE1: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;
const REFACTOR_EVERY: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point (optimal status), or a feasible point when the problem is unbounded.
    pub x: Option<Vec<f64>>,
    pub value: Option<f64>,
    /// Rows defining the returned vertex, increasing. Empty when `x` is not a vertex.
    pub basis: Vec<usize>,
    /// Dual multipliers `y_t ≥ 0` aligned with `basis`: `−c = Σ y_t a_t`.
    pub multipliers: Vec<f64>,
    pub is_vertex: bool,
    pub iterations: usize,
}

impl LpSolution {
    fn infeasible(iterations: usize) -> Self {
        LpSolution {
            status: LpStatus::Infeasible,
            x: None,
            value: None,
            basis: vec![],
            multipliers: vec![],
            is_vertex: false,
            iterations,
        }
    }
}

/// Constraint data `Ax ≤ b` stored row-major.
#[derive(Debug, Clone)]
pub struct LpData {
    p: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl LpData {
    pub fn new(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<Self> {
        let p = c.len();
        if a.len() != b.len() {
            return Err(CalmnessError::dim(a.len(), b.len()));
        }
        let mut flat = Vec::with_capacity(a.len() * p);
        for row in a {
            if row.len() != p {
                return Err(CalmnessError::dim(p, row.len()));
            }
            flat.extend_from_slice(row);
        }
        Ok(LpData { p, a: flat, b: b.to_vec(), c: c.to_vec() })
    }

    pub fn from_problem(problem: &Problem) -> Self {
        let p = problem.dim();
        let mut a = Vec::with_capacity(problem.num_rows() * p);
        for r in problem.rows() {
            a.extend_from_slice(&r.a);
        }
        LpData { p, a, b: problem.rhs(), c: problem.cost().to_vec() }
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.a[j * self.p..(j + 1) * self.p]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn set_rhs(&mut self, b: &[f64]) {
        self.b.copy_from_slice(b);
    }

    pub fn set_cost(&mut self, c: &[f64]) {
        self.c.copy_from_slice(c);
    }

    fn slack(&self, j: usize, x: &[f64]) -> f64 {
        self.b[j] - dot(self.row(j), x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Var {
    Structural(usize),
    Artificial(usize),
}

impl Var {
    fn order(self, m: usize) -> usize {
        match self {
            Var::Structural(j) => j,
            Var::Artificial(i) => m + i,
        }
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau<'a> {
    data: &'a LpData,
    /// Row signs applied to the equality system so that the phase-1 start is feasible.
    signs: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<Var>,
    binv: Matrix,
    xb: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

impl<'a> Tableau<'a> {
    fn column(&self, v: Var) -> Vec<f64> {
        match v {
            Var::Structural(j) => self.data.row(j).iter().zip(&self.signs).map(|(a, s)| a * s).collect(),
            Var::Artificial(i) => {
                let mut e = vec![0.0; self.data.p];
                e[i] = 1.0;
                e
            }
        }
    }

    fn basis_rows(&self) -> Vec<usize> {
        self.basis.iter().map(|v| v.order(self.data.m())).collect()
    }

    fn refactor(&mut self) -> Result<()> {
        let p = self.data.p;
        let mut bm = Matrix::zeros(p, p);
        for (k, &v) in self.basis.iter().enumerate() {
            let col = self.column(v);
            for i in 0..p {
                bm[(i, k)] = col[i];
            }
        }
        let inv = bm.inverse_pivoted().map_err(|e| CalmnessError::PivotBreakdown {
            basis: self.basis_rows(),
            reason: format!("basis refactorization failed: {e}"),
        })?;
        self.xb = inv.mul_vec(&self.rhs);
        for v in self.xb.iter_mut() {
            if *v < 0.0 && *v > -1e-9 {
                *v = 0.0;
            }
        }
        self.binv = inv;
        self.since_refactor = 0;
        Ok(())
    }

    /// Simplex multipliers `π = B⁻ᵀ c_B`.
    fn duals(&self, cost: &dyn Fn(Var) -> f64) -> Vec<f64> {
        let p = self.data.p;
        let mut pi = vec![0.0; p];
        for (k, &v) in self.basis.iter().enumerate() {
            let cb = cost(v);
            if cb != 0.0 {
                for i in 0..p {
                    pi[i] += cb * self.binv[(k, i)];
                }
            }
        }
        pi
    }

    fn pivot(&mut self, r: usize, entering: Var, w: &[f64]) -> Result<()> {
        let p = self.data.p;
        let wr = w[r];
        for j in 0..p {
            self.binv[(r, j)] /= wr;
        }
        self.xb[r] /= wr;
        for i in 0..p {
            if i != r && w[i] != 0.0 {
                let f = w[i];
                for j in 0..p {
                    let v = self.binv[(r, j)];
                    self.binv[(i, j)] -= f * v;
                }
                self.xb[i] -= f * self.xb[r];
            }
        }
        self.basis[r] = entering;
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Runs simplex iterations until optimality or unboundedness.
    fn run(&mut self, cost: &dyn Fn(Var) -> f64, phase_one: bool) -> Result<Outcome> {
        let m = self.data.m();
        let p = self.data.p;
        let cap = 200 * (m + p) + 10_000;
        let mut bland = false;
        let mut streak = 0usize;
        loop {
            if self.iterations > cap {
                return Err(CalmnessError::PivotBreakdown {
                    basis: self.basis_rows(),
                    reason: format!("iteration cap {cap} exceeded"),
                });
            }
            let pi = self.duals(cost);
            let spi: Vec<f64> = pi.iter().zip(&self.signs).map(|(a, s)| a * s).collect();
            let mut entering = None;
            let mut steepest = 0.0;
            for j in 0..m {
                let v = Var::Structural(j);
                if self.basis.contains(&v) {
                    continue;
                }
                let ax = dot(self.data.row(j), &spi);
                let cj = cost(v);
                let d = cj - ax;
                let scale = 1.0 + cj.abs() + ax.abs();
                if d < -TOL_REDUCED * scale {
                    if bland {
                        entering = Some(v);
                        break;
                    }
                    let score = d / dot(self.data.row(j), self.data.row(j)).sqrt().max(f64::MIN_POSITIVE);
                    if score < steepest {
                        steepest = score;
                        entering = Some(v);
                    }
                }
            }
            let Some(enter) = entering else {
                return Ok(Outcome::Optimal);
            };
            let col = self.column(enter);
            let w = self.binv.mul_vec(&col);
            let wmax = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let tol = TOL_PIVOT * wmax.max(1.0);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..p {
                if w[i] > tol {
                    let ratio = self.xb[i].max(0.0) / w[i];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                            if ratio < best && !tie {
                                Some((i, ratio))
                            } else if tie && self.basis[i].order(m) < self.basis[k].order(m) {
                                Some((i, best.min(ratio)))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            let Some((r, step)) = leave else {
                if phase_one {
                    return Err(CalmnessError::PivotBreakdown {
                        basis: self.basis_rows(),
                        reason: "phase one reported unbounded".into(),
                    });
                }
                return Ok(Outcome::Unbounded);
            };
            if step <= 0.0 {
                streak += 1;
                bland |= streak >= DEGENERATE_STREAK;
            } else {
                streak = 0;
            }
            self.pivot(r, enter, &w)?;
        }
    }

    fn objective(&self, cost: &dyn Fn(Var) -> f64) -> f64 {
        self.basis.iter().zip(&self.xb).map(|(&v, &x)| cost(v) * x).sum()
    }

    /// Pivots zero-level artificials out of the basis wherever a structural column allows it.
    fn drive_out_artificials(&mut self) -> Result<()> {
        let m = self.data.m();
        for r in 0..self.data.p {
            if !matches!(self.basis[r], Var::Artificial(_)) {
                continue;
            }
            let rho: Vec<f64> = (0..self.data.p).map(|j| self.binv[(r, j)]).collect();
            let mut pick = None;
            for j in 0..m {
                let v = Var::Structural(j);
                if self.basis.contains(&v) {
                    continue;
                }
                let alpha = dot(&rho, &self.column(v));
                if alpha.abs() > 1e-7 {
                    pick = Some(v);
                    break;
                }
            }
            if let Some(v) = pick {
                let w = self.binv.mul_vec(&self.column(v));
                self.pivot(r, v, &w)?;
            }
        }
        Ok(())
    }
}

fn cold_start<'a>(data: &'a LpData, rhs: &[f64]) -> Tableau<'a> {
    let p = data.p;
    let signs: Vec<f64> = rhs.iter().map(|&r| if r < 0.0 { -1.0 } else { 1.0 }).collect();
    let srhs: Vec<f64> = rhs.iter().zip(&signs).map(|(r, s)| r * s).collect();
    Tableau {
        data,
        signs,
        xb: srhs.clone(),
        rhs: srhs,
        basis: (0..p).map(Var::Artificial).collect(),
        binv: Matrix::identity(p),
        iterations: 0,
        since_refactor: 0,
    }
}

fn warm_start<'a>(data: &'a LpData, rhs: &[f64], hint: &[usize]) -> Option<Tableau<'a>> {
    let p = data.p;
    if hint.len() != p || hint.iter().any(|&j| j >= data.m()) {
        return None;
    }
    let mut t = Tableau {
        data,
        signs: vec![1.0; p],
        rhs: rhs.to_vec(),
        basis: hint.iter().map(|&j| Var::Structural(j)).collect(),
        binv: Matrix::identity(p),
        xb: vec![0.0; p],
        iterations: 0,
        since_refactor: 0,
    };
    t.refactor().ok()?;
    let scale = 1.0 + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if t.xb.iter().any(|&v| v < -1e-9 * scale) {
        return None;
    }
    for v in t.xb.iter_mut() {
        *v = v.max(0.0);
    }
    Some(t)
}

fn finish(t: &Tableau<'_>) -> LpSolution {
    let data = t.data;
    let cost = |v: Var| match v {
        Var::Structural(j) => data.b[j],
        Var::Artificial(_) => 0.0,
    };
    let pi = t.duals(&cost);
    let x: Vec<f64> = pi.iter().zip(&t.signs).map(|(a, s)| a * s).collect();
    let is_vertex = t.basis.iter().all(|v| matches!(v, Var::Structural(_)));
    let mut pairs: Vec<(usize, f64)> = t
        .basis
        .iter()
        .zip(&t.xb)
        .filter_map(|(&v, &y)| match v {
            Var::Structural(j) => Some((j, y.max(0.0))),
            Var::Artificial(_) => None,
        })
        .collect();
    pairs.sort_by_key(|p| p.0);
    LpSolution {
        status: LpStatus::Optimal,
        value: Some(dot(&data.c, &x)),
        x: Some(x),
        basis: pairs.iter().map(|p| p.0).collect(),
        multipliers: pairs.iter().map(|p| p.1).collect(),
        is_vertex,
        iterations: t.iterations,
    }
}

/// Solves the dual standard form for right-hand side `rhs = −c`.
fn solve_dual(data: &LpData, hint: Option<&[usize]>) -> Result<(Option<LpSolution>, bool, usize)> {
    let rhs: Vec<f64> = data.c.iter().map(|v| -v).collect();
    let phase2_cost = |v: Var| match v {
        Var::Structural(j) => data.b[j],
        Var::Artificial(_) => 0.0,
    };
    let mut tableau = match hint.and_then(|h| warm_start(data, &rhs, h)) {
        Some(t) => t,
        None => {
            let mut t = cold_start(data, &rhs);
            let p1 = |v: Var| match v {
                Var::Structural(_) => 0.0,
                Var::Artificial(_) => 1.0,
            };
            t.run(&p1, true)?;
            let infeas = t.objective(&p1);
            let scale = 1.0 + rhs.iter().map(|v| v.abs()).sum::<f64>();
            if infeas > TOL_PHASE1 * scale {
                // −c is not in the cone of the rows: the dual is infeasible.
                return Ok((None, false, t.iterations));
            }
            t.drive_out_artificials()?;
            t
        }
    };
    match tableau.run(&phase2_cost, false)? {
        Outcome::Optimal => Ok((Some(finish(&tableau)), true, tableau.iterations)),
        Outcome::Unbounded => Ok((None, true, tableau.iterations)),
    }
}

/// Solves `min ⟨c,x⟩ s.t. Ax ≤ b`. `hint` is an optional basis (row indices) to warm-start from.
pub fn solve_data(data: &LpData, hint: Option<&[usize]>) -> Result<LpSolution> {
    let (sol, dual_feasible, iters) = solve_dual(data, hint)?;
    if let Some(s) = sol {
        return Ok(s);
    }
    if dual_feasible {
        // dual unbounded: the primal constraints are inconsistent
        return Ok(LpSolution::infeasible(iters));
    }
    // dual infeasible: primal is unbounded if it is feasible at all
    let mut zero = data.clone();
    zero.c.iter_mut().for_each(|v| *v = 0.0);
    let (feas, _, it2) = solve_dual(&zero, None)?;
    match feas {
        Some(s) => Ok(LpSolution {
            status: LpStatus::Unbounded,
            value: None,
            basis: vec![],
            multipliers: vec![],
            is_vertex: false,
            iterations: iters + it2,
            x: s.x,
        }),
        None => Ok(LpSolution::infeasible(iters + it2)),
    }
}

pub fn solve_dense(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution> {
    solve_data(&LpData::new(a, b, c)?, None)
}

/// Returns a vertex optimal solution of the problem, or its infeasible/unbounded status.
pub fn solve_lp(problem: &Problem) -> Result<LpSolution> {
    solve_data(&LpData::from_problem(problem), None)
}

/// Optimal vertices reachable from an optimal basis through objective-neutral pivots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalVertices {
    pub vertices: Vec<Vec<f64>>,
    /// An optimal edge without end was found (unbounded optimal face).
    pub has_ray: bool,
    /// Enumeration stopped at the cap.
    pub truncated: bool,
}

/// Enumerates vertices of the optimal face starting from `start_basis`, up to `cap` vertices.
pub fn optimal_vertices(data: &LpData, start_basis: &[usize], cap: usize) -> Result<OptimalVertices> {
    let p = data.p;
    let m = data.m();
    if start_basis.len() != p {
        return Err(CalmnessError::Precondition("optimal vertex enumeration needs a full basis".into()));
    }
    let cnorm = data.c.iter().map(|v| v.abs()).sum::<f64>();
    let mut out = OptimalVertices { vertices: vec![], has_ray: false, truncated: false };
    let mut seen_bases: Vec<Vec<usize>> = vec![];
    let mut queue: std::collections::VecDeque<Vec<usize>> = std::collections::VecDeque::new();
    let mut start = start_basis.to_vec();
    start.sort_unstable();
    queue.push_back(start);
    let basis_cap = 64 + 8 * cap * p;

    while let Some(basis) = queue.pop_front() {
        if seen_bases.contains(&basis) {
            continue;
        }
        if seen_bases.len() >= basis_cap {
            out.truncated = true;
            break;
        }
        seen_bases.push(basis.clone());
        let rows: Vec<Vec<f64>> = basis.iter().map(|&j| data.row(j).to_vec()).collect();
        let ab = Matrix::from_rows(&rows)?;
        let Ok(inv) = ab.inverse() else { continue };
        let bb: Vec<f64> = basis.iter().map(|&j| data.b[j]).collect();
        let x = inv.mul_vec(&bb);
        let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !out.vertices.iter().any(|v| crate::norm::sup_norm(&diff(v, &x)) <= 1e-9 * scale) {
            if out.vertices.len() >= cap {
                out.truncated = true;
                break;
            }
            out.vertices.push(x.clone());
        }
        for k in 0..p {
            // move off row basis[k] keeping the others tight
            let d: Vec<f64> = (0..p).map(|i| -inv[(i, k)]).collect();
            let cd = dot(&data.c, &d);
            let dnorm = d.iter().map(|v| v.abs()).sum::<f64>();
            let neutral = cd.abs() <= 1e-9 * (1.0 + cnorm) * dnorm;
            let mut best: Option<(usize, f64)> = None;
            for t in 0..m {
                if basis.contains(&t) {
                    continue;
                }
                let ad = dot(data.row(t), &d);
                if ad > 1e-10 * (1.0 + dnorm) {
                    let theta = data.slack(t, &x).max(0.0) / ad;
                    if best.is_none_or(|(_, b)| theta < b - 1e-13 * (1.0 + b)) {
                        best = Some((t, theta));
                    }
                }
            }
            match best {
                None => {
                    if neutral {
                        out.has_ray = true;
                    }
                }
                Some((t, theta)) => {
                    let degenerate = theta <= 1e-12 * scale;
                    if degenerate || neutral {
                        let mut nb = basis.clone();
                        let pos = nb.iter().position(|&j| j == basis[k]).unwrap();
                        nb[pos] = t;
                        nb.sort_unstable();
                        if !seen_bases.contains(&nb) {
                            queue.push_back(nb);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Incremental builder for small auxiliary LPs over free variables.
#[derive(Debug, Clone)]
pub struct LpBuilder {
    n: usize,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl LpBuilder {
    pub fn new(n: usize) -> Self {
        LpBuilder { n, a: vec![], b: vec![], c: vec![0.0; n] }
    }

    pub fn minimize(&mut self, c: Vec<f64>) -> &mut Self {
        assert_eq!(c.len(), self.n);
        self.c = c;
        self
    }

    pub fn le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(row.len(), self.n);
        self.a.push(row);
        self.b.push(rhs);
        self
    }

    pub fn ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.le(row.into_iter().map(|v| -v).collect(), -rhs)
    }

    pub fn eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.le(row.clone(), rhs);
        self.ge(row, rhs)
    }

    /// `x_i ≥ 0`.
    pub fn nonneg(&mut self, i: usize) -> &mut Self {
        let mut row = vec![0.0; self.n];
        row[i] = -1.0;
        self.le(row, 0.0)
    }

    pub fn num_constraints(&self) -> usize {
        self.b.len()
    }

    pub fn solve(&self) -> Result<LpSolution> {
        if self.a.is_empty() {
            let zero = self.c.iter().all(|&v| v == 0.0);
            return Ok(LpSolution {
                status: if zero { LpStatus::Optimal } else { LpStatus::Unbounded },
                x: Some(vec![0.0; self.n]),
                value: zero.then_some(0.0),
                basis: vec![],
                multipliers: vec![],
                is_vertex: false,
                iterations: 0,
            });
        }
        solve_dense(&self.a, &self.b, &self.c)
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
