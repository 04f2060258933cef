//! Brute-force perturbation oracle for the calmness ratio
//! `d(x, S(c̄,b̄)) / max{‖δc‖∗, ‖δb‖∞}` with `x ∈ S(c̄+δc, b̄+δb)`.

use crate::certify::{cone_membership, nominal_active_set, nominal_point, strong_uniqueness_check};
use crate::error::{CalmnessError, Result};
use crate::linalg::Matrix;
use crate::moduli::enumerate_k;
use crate::norm::{dot, NormSpec};
use crate::problem::{param_norm, Problem};
use crate::simplex::{optimal_vertices, solve_data, LpBuilder, LpData, LpStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Vertices of a perturbed optimal face examined per sample.
pub const VERTEX_CAP: usize = 32;
const MAX_TERNARY_ROWS: usize = 8;
const MAX_SIGN_ROWS: usize = 12;
const MAX_VERTEX_SUBSETS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Perturb both `c` and `b`.
    Full,
    /// Perturb `b` only, for the map `b ↦ S(c̄, b)`.
    BOnly,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Full => "full",
            Mode::BOnly => "b-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    /// Decreasing perturbation radii.
    pub radii: Vec<f64>,
    /// Random samples per radius, on top of the structured ones.
    pub samples: usize,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        EstimateConfig { radii: vec![1e-2, 1e-3, 1e-4], samples: 512, mode: Mode::Full, seed: 42 }
    }
}

impl EstimateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(CalmnessError::Invalid("radii must be positive and finite".into()));
        }
        if self.radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CalmnessError::Invalid("radii must be strictly decreasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSample {
    pub radius: f64,
    /// Short description of the perturbation.
    pub kind: String,
    pub structured: bool,
    pub delta_c: Vec<f64>,
    pub delta_b: Vec<f64>,
    pub solved_x: Option<Vec<f64>>,
    pub ratio: Option<f64>,
    pub status: String,
    /// Optimal vertices examined; the farthest one gives the ratio.
    pub vertices: usize,
    /// The optimal face had more vertices than were examined, or an unbounded edge.
    pub face_truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSummary {
    pub radius: f64,
    pub max_ratio: Option<f64>,
    pub structured_max: Option<f64>,
    pub random_max: Option<f64>,
    pub solved: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusDiagnostic {
    /// Relative change of the per-radius maximum between the two smallest radii.
    pub drift: f64,
    /// Per-radius maxima never decrease as the radius shrinks.
    pub nondecreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub estimate: f64,
    pub mode: Mode,
    pub seed: u64,
    pub per_radius: Vec<RadiusSummary>,
    pub diagnostic: Option<RadiusDiagnostic>,
    pub samples: Vec<PerturbationSample>,
}

impl EmpiricalEstimate {
    /// One line per sample: `seed,mode,radius,kind,ratio,status`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,mode,radius,kind,ratio,status\n");
        for s in &self.samples {
            let ratio = s.ratio.map(|r| r.to_string()).unwrap_or_default();
            writeln!(out, "{},{},{},{},{},{}", self.seed, self.mode.name(), s.radius, s.kind, ratio, s.status)
                .expect("string write");
        }
        out
    }
}

/// The nominal optimal set: `{x̄}` when unique, otherwise the face `{x feasible : ⟨c̄,x⟩ ≤ v*}`.
#[derive(Debug, Clone)]
pub struct NominalArgmin {
    problem: Problem,
    pub x_bar: Vec<f64>,
    pub value: f64,
    pub unique: bool,
    pub basis: Vec<usize>,
}

impl NominalArgmin {
    pub fn new(problem: &Problem) -> Result<Self> {
        let x_bar = nominal_point(problem)?;
        let unique = strong_uniqueness_check(problem, &x_bar)?.holds;
        let active = nominal_active_set(problem, &x_bar)?;
        let basis = basis_at(problem, &active.indices);
        Ok(NominalArgmin { problem: problem.clone(), value: problem.objective(&x_bar), x_bar, unique, basis })
    }

    /// Distance from `x` to the nominal optimal set in the problem norm.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        let norm = self.problem.norm();
        if self.unique {
            return Ok(norm.distance(x, &self.x_bar));
        }
        match norm {
            NormSpec::Euclidean => Ok(norm.distance(x, &self.project_l2(x))),
            _ => self.face_distance_lp(x, norm),
        }
    }

    fn face_rows(&self) -> Vec<(Vec<f64>, f64)> {
        let slack = 1e-12 * self.value.abs().max(1.0);
        let mut rows: Vec<(Vec<f64>, f64)> = self.problem.rows().iter().map(|r| (r.a.clone(), r.b)).collect();
        rows.push((self.problem.cost().to_vec(), self.value + slack));
        rows
    }

    /// Dykstra's alternating projections onto the halfspaces describing the face.
    fn project_l2(&self, x: &[f64]) -> Vec<f64> {
        let rows: Vec<(Vec<f64>, f64)> = self.face_rows().into_iter().filter(|(a, _)| dot(a, a) > 0.0).collect();
        let mut y = x.to_vec();
        let mut q = vec![vec![0.0; x.len()]; rows.len()];
        let scale = NormSpec::Euclidean.norm(x).max(1.0);
        for _ in 0..100_000 {
            let mut moved = 0.0f64;
            for (i, (a, b)) in rows.iter().enumerate() {
                let z: Vec<f64> = y.iter().zip(&q[i]).map(|(u, v)| u + v).collect();
                let viol = dot(a, &z) - b;
                let next: Vec<f64> = if viol > 0.0 {
                    let s = viol / dot(a, a);
                    z.iter().zip(a).map(|(zi, ai)| zi - s * ai).collect()
                } else {
                    z.clone()
                };
                q[i] = z.iter().zip(&next).map(|(u, v)| u - v).collect();
                moved = moved.max(NormSpec::Euclidean.distance(&y, &next));
                y = next;
            }
            if moved <= 1e-13 * scale {
                break;
            }
        }
        y
    }

    /// `min ‖x − y‖` over the face for the ℓ∞ or ℓ1 norm, variables `(y, s)`.
    fn face_distance_lp(&self, x: &[f64], norm: NormSpec) -> Result<f64> {
        let p = x.len();
        let n = 2 * p;
        let mut lp = LpBuilder::new(n);
        let mut obj = vec![0.0; n];
        for v in obj.iter_mut().skip(p) {
            *v = 1.0;
        }
        for (a, b) in self.face_rows() {
            let mut row = a;
            row.resize(n, 0.0);
            lp.le(row, b);
        }
        for k in 0..p {
            for sign in [1.0, -1.0] {
                let mut row = vec![0.0; n];
                row[k] = sign;
                row[p + k] = -1.0;
                lp.le(row, sign * x[k]);
            }
        }
        if norm == NormSpec::Infinity {
            // all s_k equal to a common bound: minimize s_0 with s_k ≤ s_0
            let mut o = vec![0.0; n];
            o[p] = 1.0;
            for k in 1..p {
                let mut row = vec![0.0; n];
                row[p + k] = 1.0;
                row[p] = -1.0;
                lp.le(row, 0.0);
            }
            lp.minimize(o);
        } else {
            lp.minimize(obj);
        }
        let sol = lp.solve()?;
        match sol.status {
            LpStatus::Optimal => Ok(sol.value.expect("optimal")),
            _ => Err(CalmnessError::Consistency("projection onto the optimal face failed".into())),
        }
    }
}

/// A basis among `rows` (a nonsingular `p`-subset), used as a warm start.
fn basis_at(problem: &Problem, rows: &[usize]) -> Vec<usize> {
    let p = problem.dim();
    let mut basis: Vec<usize> = Vec::new();
    for &r in rows {
        let mut trial = basis.clone();
        trial.push(r);
        let m = Matrix::from_rows(&trial.iter().map(|&i| problem.row(i).a.clone()).collect::<Vec<_>>());
        if let Ok(m) = m {
            // Gram determinant measures independence of a non-square row set
            let g = m.mul(&m.transpose());
            if g.determinant().map(|d| d.abs() > 1e-12).unwrap_or(false) {
                basis = trial;
            }
        }
        if basis.len() == p {
            break;
        }
    }
    basis.sort_unstable();
    basis
}

/// Distance from `x` to `S(c̄, b̄)`.
pub fn distance_to_nominal_argmin(x: &[f64], problem: &Problem) -> Result<f64> {
    NominalArgmin::new(problem)?.distance(x)
}

struct Perturbation {
    kind: String,
    structured: bool,
    dc: Vec<f64>,
    db: Vec<f64>,
}

struct Solved {
    x: Option<Vec<f64>>,
    distance: Option<f64>,
    status: String,
    vertices: usize,
    truncated: bool,
}

/// Solves `P(c, b)` and returns its optimal vertex farthest from the nominal optimal set.
fn farthest_solution(base: &LpData, nominal: &NominalArgmin, c: &[f64], b: &[f64]) -> Result<Solved> {
    let mut data = base.clone();
    data.set_cost(c);
    data.set_rhs(b);
    let hint = (nominal.basis.len() == base.p()).then_some(nominal.basis.as_slice());
    let sol = solve_data(&data, hint)?;
    match sol.status {
        LpStatus::Infeasible => Ok(Solved { x: None, distance: None, status: "infeasible".into(), vertices: 0, truncated: false }),
        LpStatus::Unbounded => Ok(Solved { x: None, distance: None, status: "unbounded".into(), vertices: 0, truncated: false }),
        LpStatus::Optimal => {
            let x = sol.x.expect("optimal");
            let (candidates, truncated) = if sol.basis.len() == base.p() {
                let v = optimal_vertices(&data, &sol.basis, VERTEX_CAP)?;
                (v.vertices, v.truncated || v.has_ray)
            } else {
                (vec![x.clone()], false)
            };
            let mut best: Option<(f64, Vec<f64>)> = None;
            for v in candidates.iter().chain(std::iter::once(&x)) {
                let d = nominal.distance(v)?;
                if best.as_ref().is_none_or(|(bd, _)| d > *bd) {
                    best = Some((d, v.clone()));
                }
            }
            let (d, xb) = best.expect("at least one candidate");
            let status = if truncated { "optimal-partial-face" } else { "optimal" };
            Ok(Solved { x: Some(xb), distance: Some(d), status: status.into(), vertices: candidates.len().max(1), truncated })
        }
    }
}

fn ternary(mut k: usize, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| {
            let d = k % 3;
            k /= 3;
            [0.0, 1.0, -1.0][d]
        })
        .collect()
}

fn sign_string(v: &[f64]) -> String {
    v.iter().map(|&s| if s > 0.0 { '+' } else if s < 0.0 { '-' } else { '0' }).collect()
}

/// Vertices `u` of `{u : ⟨a_t,u⟩ ≤ 1 (t active), −⟨a_t,u⟩ ≤ 1 (t ∈ D)}` for each KKT set `D`.
/// The point `x̄ + εu` is optimal for the right-hand side built in [`targeted`].
fn target_directions(problem: &Problem, active: &[usize]) -> Vec<(Vec<String>, Vec<usize>, Vec<f64>)> {
    let x_bar = match nominal_point(problem) {
        Ok(x) => x,
        Err(_) => return vec![],
    };
    let sets = match enumerate_k(problem, &x_bar) {
        Ok(s) => s,
        Err(e) => {
            log::info!("skipping targeted perturbations: {e}");
            return vec![];
        }
    };
    let p = problem.dim();
    let mut out = Vec::new();
    for d in sets {
        let mut fam: Vec<Vec<f64>> = active.iter().map(|&i| problem.row(i).a.clone()).collect();
        fam.extend(d.rows.iter().map(|&i| problem.row(i).a.iter().map(|v| -v).collect::<Vec<f64>>()));
        let mut uniq: Vec<Vec<f64>> = Vec::new();
        for g in fam {
            if !uniq.iter().any(|h| h.iter().zip(&g).all(|(a, b)| (a - b).abs() <= 1e-12)) {
                uniq.push(g);
            }
        }
        let mut found: Vec<Vec<f64>> = Vec::new();
        for s in crate::certify::subsets_of_size(uniq.len(), p).into_iter().take(MAX_VERTEX_SUBSETS) {
            let Ok(m) = Matrix::from_rows(&s.iter().map(|&i| uniq[i].clone()).collect::<Vec<_>>()) else { continue };
            let Ok(u) = m.solve(&vec![1.0; p]) else { continue };
            if !u.iter().all(|v| v.is_finite()) || uniq.iter().any(|g| dot(g, &u) > 1.0 + 1e-9) {
                continue;
            }
            if found.iter().any(|f| f.iter().zip(&u).all(|(a, b)| (a - b).abs() <= 1e-9)) {
                continue;
            }
            found.push(u.clone());
            out.push((d.labels.clone(), d.rows.clone(), u));
        }
    }
    out
}

fn targeted(problem: &Problem, active: &[usize], d: &[usize], u: &[f64], eps: f64) -> Vec<f64> {
    let mut db = vec![0.0; problem.num_rows()];
    for &t in active {
        let s = dot(&problem.row(t).a, u);
        db[t] = if d.contains(&t) { eps * s } else { eps * s.max(-1.0) };
    }
    db
}

fn structured(
    problem: &Problem,
    active: &[usize],
    targets: &[(Vec<String>, Vec<usize>, Vec<f64>)],
    mode: Mode,
    eps: f64,
) -> Vec<Perturbation> {
    let m = problem.num_rows();
    let p = problem.dim();
    let mut out = Vec::new();
    let zero_c = vec![0.0; p];
    for &t in active {
        for (sign, tag) in [(1.0, '+'), (-1.0, '-')] {
            let mut db = vec![0.0; m];
            db[t] = sign * eps;
            out.push(Perturbation { kind: format!("b[{}]{tag}", problem.row(t).label.name), structured: true, dc: zero_c.clone(), db });
        }
    }
    let k = active.len();
    let patterns: Vec<Vec<f64>> = if k <= MAX_TERNARY_ROWS {
        (1..3usize.pow(k as u32)).map(|i| ternary(i, k)).collect()
    } else if k <= MAX_SIGN_ROWS {
        (0..1usize << k).map(|i| (0..k).map(|j| if i >> j & 1 == 1 { -1.0 } else { 1.0 }).collect()).collect()
    } else {
        log::info!("{k} active rows: sign patterns skipped");
        vec![]
    };
    for s in patterns {
        let mut db = vec![0.0; m];
        for (&t, &v) in active.iter().zip(&s) {
            db[t] = v * eps;
        }
        out.push(Perturbation { kind: format!("signs[{}]", sign_string(&s)), structured: true, dc: zero_c.clone(), db });
    }
    for (j, (labels, d, u)) in targets.iter().enumerate() {
        out.push(Perturbation {
            kind: format!("vertex[{}]#{j}", labels.join(" ")),
            structured: true,
            dc: zero_c.clone(),
            db: targeted(problem, active, d, u, eps),
        });
    }
    if mode == Mode::Full {
        for i in 0..p {
            for (sign, tag) in [(1.0, '+'), (-1.0, '-')] {
                let mut dc = vec![0.0; p];
                dc[i] = sign * eps;
                out.push(Perturbation { kind: format!("c[{i}]{tag}"), structured: true, dc, db: vec![0.0; m] });
            }
        }
    }
    out
}

fn random_perturbation(problem: &Problem, mode: Mode, eps: f64, seed: u64, stream: u64) -> Perturbation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let m = problem.num_rows();
    let p = problem.dim();
    let mut db: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let mut dc: Vec<f64> = match mode {
        Mode::Full => (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
        Mode::BOnly => vec![0.0; p],
    };
    let size = param_norm(problem.norm(), &dc, &db);
    let scale = if size > 0.0 { eps / size } else { 0.0 };
    db.iter_mut().for_each(|v| *v *= scale);
    dc.iter_mut().for_each(|v| *v *= scale);
    Perturbation { kind: format!("random#{stream}"), structured: false, dc, db }
}

fn evaluate(problem: &Problem, base: &LpData, nominal: &NominalArgmin, radius: f64, pert: Perturbation) -> Result<PerturbationSample> {
    let size = param_norm(problem.norm(), &pert.dc, &pert.db);
    let mut sample = PerturbationSample {
        radius,
        kind: pert.kind,
        structured: pert.structured,
        delta_c: pert.dc,
        delta_b: pert.db,
        solved_x: None,
        ratio: None,
        status: String::new(),
        vertices: 0,
        face_truncated: false,
    };
    if size <= 0.0 {
        sample.status = "zero-perturbation".into();
        return Ok(sample);
    }
    let c: Vec<f64> = problem.cost().iter().zip(&sample.delta_c).map(|(a, b)| a + b).collect();
    let b: Vec<f64> = problem.rows().iter().zip(&sample.delta_b).map(|(r, d)| r.b + d).collect();
    let solved = farthest_solution(base, nominal, &c, &b)?;
    sample.ratio = solved.distance.map(|d| d / size);
    sample.solved_x = solved.x;
    sample.status = solved.status;
    sample.vertices = solved.vertices;
    sample.face_truncated = solved.truncated;
    Ok(sample)
}

fn max_of(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
}

/// Estimates the calmness modulus from perturbed problems at each radius.
pub fn estimate_clm(problem: &Problem, cfg: &EstimateConfig) -> Result<EmpiricalEstimate> {
    cfg.validate()?;
    let nominal = NominalArgmin::new(problem)?;
    let active = nominal_active_set(problem, &nominal.x_bar)?.indices;
    let targets = target_directions(problem, &active);
    let base = LpData::from_problem(problem);
    let mut samples = Vec::new();
    let mut per_radius = Vec::new();
    for (ri, &eps) in cfg.radii.iter().enumerate() {
        let mut perts = structured(problem, &active, &targets, cfg.mode, eps);
        perts.extend((0..cfg.samples).map(|i| random_perturbation(problem, cfg.mode, eps, cfg.seed, ((ri as u64) << 32) | i as u64)));
        let results: Vec<Result<PerturbationSample>> =
            perts.into_par_iter().map(|pt| evaluate(problem, &base, &nominal, eps, pt)).collect();
        let results: Vec<PerturbationSample> = results.into_iter().collect::<Result<_>>()?;
        let solved = results.iter().filter(|s| s.ratio.is_some()).count();
        per_radius.push(RadiusSummary {
            radius: eps,
            max_ratio: max_of(results.iter().filter_map(|s| s.ratio)),
            structured_max: max_of(results.iter().filter(|s| s.structured).filter_map(|s| s.ratio)),
            random_max: max_of(results.iter().filter(|s| !s.structured).filter_map(|s| s.ratio)),
            solved,
            skipped: results.len() - solved,
        });
        let skipped = results.len() - solved;
        if skipped > 0 {
            log::info!("radius {eps}: {skipped} perturbed problems without a solution");
        }
        samples.extend(results);
    }
    let tail = &per_radius[per_radius.len().saturating_sub(2)..];
    let estimate = tail.iter().filter_map(|r| r.max_ratio).fold(0.0, f64::max);
    let diagnostic = (per_radius.len() >= 2).then(|| {
        let last = tail[1].max_ratio.unwrap_or(0.0);
        let prev = tail[0].max_ratio.unwrap_or(0.0);
        let maxima: Vec<f64> = per_radius.iter().map(|r| r.max_ratio.unwrap_or(0.0)).collect();
        RadiusDiagnostic {
            drift: (last - prev).abs() / last.max(prev).max(f64::MIN_POSITIVE),
            nondecreasing: maxima.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)),
        }
    });
    Ok(EmpiricalEstimate { estimate, mode: cfg.mode, seed: cfg.seed, per_radius, diagnostic, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    /// Perturbed cost; the nominal one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    pub b: Vec<f64>,
    /// A claimed solution of `P(c, b)`; solved for when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub entries: Vec<SequenceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRow {
    pub index: usize,
    pub param_distance: f64,
    pub x: Option<Vec<f64>>,
    pub distance: Option<f64>,
    pub ratio: Option<f64>,
    pub status: String,
    /// KKT residual of a supplied point that failed verification.
    pub kkt_residual: Option<f64>,
}

/// Ratios along a sequence of parameters, verifying supplied points or solving for them.
pub fn replay_sequence(problem: &Problem, sequence: &[SequenceEntry]) -> Result<Vec<ReplayRow>> {
    let nominal = NominalArgmin::new(problem)?;
    let base = LpData::from_problem(problem);
    let b_bar = problem.rhs();
    let mut rows = Vec::with_capacity(sequence.len());
    for (index, e) in sequence.iter().enumerate() {
        if e.b.len() != problem.num_rows() {
            return Err(CalmnessError::dim(problem.num_rows(), e.b.len()));
        }
        let c = e.c.clone().unwrap_or_else(|| problem.cost().to_vec());
        if c.len() != problem.dim() {
            return Err(CalmnessError::dim(problem.dim(), c.len()));
        }
        let dc: Vec<f64> = c.iter().zip(problem.cost()).map(|(a, b)| a - b).collect();
        let db: Vec<f64> = e.b.iter().zip(&b_bar).map(|(a, b)| a - b).collect();
        let size = param_norm(problem.norm(), &dc, &db);
        let mut row =
            ReplayRow { index, param_distance: size, x: None, distance: None, ratio: None, status: String::new(), kkt_residual: None };
        if size <= 0.0 {
            row.status = "rejected: zero parameter distance".into();
            rows.push(row);
            continue;
        }
        match &e.x {
            Some(x) => {
                let perturbed = problem.with_rhs(&e.b)?.with_cost(&c)?;
                match verify_optimal(&perturbed, x)? {
                    None => {
                        let d = nominal.distance(x)?;
                        row.distance = Some(d);
                        row.ratio = Some(d / size);
                        row.status = "verified".into();
                    }
                    Some(res) => {
                        row.status = "not optimal".into();
                        row.kkt_residual = Some(res);
                    }
                }
                row.x = Some(x.clone());
            }
            None => {
                let s = farthest_solution(&base, &nominal, &c, &e.b)?;
                row.ratio = s.distance.map(|d| d / size);
                row.distance = s.distance;
                row.x = s.x;
                row.status = s.status;
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `None` when `x` is optimal for `problem`; otherwise the violation or KKT residual.
fn verify_optimal(problem: &Problem, x: &[f64]) -> Result<Option<f64>> {
    let tol = problem.default_tolerances();
    let scale = problem.rows().iter().fold(1.0f64, |m, r| m.max(r.b.abs()));
    if let Some((_, v)) = problem.worst_violation(x, tol.feas * scale)? {
        return Ok(Some(v));
    }
    let active = problem.active_set(x, tol.active.max(tol.feas * scale))?;
    let gens: Vec<Vec<f64>> = active.indices.iter().map(|&i| problem.row(i).a.clone()).collect();
    let neg_c: Vec<f64> = problem.cost().iter().map(|v| -v).collect();
    let cm = cone_membership(&neg_c, &gens, problem.norm(), tol.kkt)?;
    Ok(if cm.member { None } else { Some(cm.residual) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn unique_distance() {
        let p = fixtures::example1();
        let d = distance_to_nominal_argmin(&[-0.01, 0.04], &p).unwrap();
        assert!((d - 17f64.sqrt() / 100.0).abs() < 1e-15);
        assert_eq!(distance_to_nominal_argmin(&[0.0, 0.0], &p).unwrap(), 0.0);
    }

    #[test]
    fn segment_face_distance() {
        // min x₁ over x₁ ≥ 0, 0 ≤ x₂ ≤ 1: optimal face is the segment {0} × [0,1]
        let p = Problem::from_dense(
            vec![1.0, 0.0],
            vec![vec![-1.0, 0.0], vec![0.0, -1.0], vec![0.0, 1.0]],
            vec![0.0, 0.0, 1.0],
            NormSpec::Euclidean,
        )
        .unwrap();
        let d = distance_to_nominal_argmin(&[1.0, 2.0], &p).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-9, "{d}");
        let d = distance_to_nominal_argmin(&[1.0, 2.0], &p.clone().with_norm(NormSpec::Infinity)).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "{d}");
        let d = distance_to_nominal_argmin(&[1.0, 2.0], &p.with_norm(NormSpec::One)).unwrap();
        assert!((d - 2.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn structured_samples_of_the_examples() {
        let cfg = EstimateConfig { radii: vec![1e-3], samples: 0, mode: Mode::BOnly, seed: 1 };
        let e = estimate_clm(&fixtures::example1(), &cfg).unwrap();
        let s = e.samples.iter().find(|s| s.kind == "signs[+-0]").unwrap();
        assert!((s.ratio.unwrap() - 17f64.sqrt()).abs() < 1e-9);
        let e = estimate_clm(&fixtures::example2(), &cfg).unwrap();
        let s = e.samples.iter().find(|s| s.kind == "signs[-+++]").unwrap();
        assert!((s.ratio.unwrap() - 5f64.sqrt()).abs() < 1e-9);
        assert!((e.estimate - 5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn no_zero_denominators() {
        let e = estimate_clm(&fixtures::example1(), &EstimateConfig { samples: 64, ..Default::default() }).unwrap();
        assert!(e.samples.iter().all(|s| s.status != "zero-perturbation"));
        assert!(e.diagnostic.is_some());
    }

    #[test]
    fn single_radius_has_no_diagnostic() {
        let cfg = EstimateConfig { radii: vec![1e-3], samples: 8, ..Default::default() };
        assert!(estimate_clm(&fixtures::example1(), &cfg).unwrap().diagnostic.is_none());
    }

    #[test]
    fn replay_example_one() {
        let seq: Vec<SequenceEntry> = fixtures::example1_sequence(&[10.0, 100.0, 1000.0])
            .into_iter()
            .map(|(b, x)| SequenceEntry { c: None, b, x: Some(x) })
            .collect();
        let rows = replay_sequence(&fixtures::example1(), &seq).unwrap();
        for r in &rows {
            assert_eq!(r.status, "verified");
            assert!((r.ratio.unwrap() - 17f64.sqrt()).abs() < 1e-6);
        }
    }

    #[test]
    fn replay_rejects_constant_and_wrong_points() {
        let p = fixtures::example1();
        let seq = vec![
            SequenceEntry { c: None, b: vec![0.0; 3], x: None },
            SequenceEntry { c: None, b: vec![0.1, -0.1, 0.0], x: Some(vec![0.5, 0.5]) },
        ];
        let rows = replay_sequence(&p, &seq).unwrap();
        assert!(rows[0].status.starts_with("rejected") && rows[0].ratio.is_none());
        assert_eq!(rows[1].status, "not optimal");
        assert!(rows[1].kkt_residual.is_some());
    }
}
