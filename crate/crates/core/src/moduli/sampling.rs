//! Sampling estimate of `sup_D limsup 1/d∗(0, ∂f_D(x))` from points `x̄ + εu`.
//!
//! A random point almost never sits where several terms tie, so terms within
//! `ε·step·max‖g‖` of the maximum form a candidate pattern. The candidate is kept only
//! if a nearby point attains all of its terms exactly with `f_D > 0`; otherwise the exact
//! attainment set at the sampled point is scored. Every score is therefore the value of
//! `1/d∗(0, conv E)` for a genuine attainment set `E`, which keeps the estimate a lower one.

use super::kkt::enumerate_k;
use crate::error::Result;
use crate::geometry::{min_dual_norm_point, Polytope};
use crate::norm::{dot, NormSpec};
use crate::problem::Problem;
use crate::simplex::{LpBuilder, LpStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Decreasing sampling radii.
    pub radii: Vec<f64>,
    pub directions: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { radii: vec![1e-2, 1e-3, 1e-4], directions: 720, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingResult {
    pub value: f64,
    pub kkt_set: Vec<String>,
    pub pattern: Vec<String>,
    pub radius: Option<f64>,
    /// Sampled points with `f_D(x) > 0`, summed over `D`.
    pub positive_points: usize,
    pub warning: Option<String>,
}

struct Term {
    g: Vec<f64>,
    beta: f64,
    label: String,
}

fn terms_for(problem: &Problem, d: &[usize]) -> Vec<Term> {
    let mut terms: Vec<Term> =
        problem.rows().iter().map(|r| Term { g: r.a.clone(), beta: -r.b, label: r.label.name.clone() }).collect();
    terms.extend(d.iter().map(|&i| {
        let r = problem.row(i);
        Term { g: r.a.iter().map(|v| -v).collect(), beta: r.b, label: format!("-{}", r.label.name) }
    }));
    terms
}

/// Unit directions: evenly spaced angles for `p = 2`, seeded uniform samples otherwise.
fn directions(p: usize, n: usize, seed: u64, stream: u64) -> (Vec<Vec<f64>>, f64) {
    if p == 2 {
        let dirs = (0..n).map(|k| {
            let th = 2.0 * PI * k as f64 / n as f64;
            vec![th.cos(), th.sin()]
        });
        return (dirs.collect(), 2.0 * PI / n as f64);
    }
    if p == 1 {
        return (vec![vec![1.0], vec![-1.0]], 1.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let v: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = NormSpec::Euclidean.norm(&v);
        if r > 1e-3 && r <= 1.0 {
            out.push(v.iter().map(|x| x / r).collect());
        }
    }
    let step = (2.0 * PI * (p - 1) as f64 / n as f64).powf(1.0 / (p - 1) as f64);
    (out, step)
}

/// `max v` over points `y` with `‖y − x‖∞ ≤ r` at which every term of `pattern` equals `v`
/// and no other term exceeds it.
fn snap(terms: &[Term], pattern: &[usize], x: &[f64], r: f64) -> Result<f64> {
    let p = x.len();
    let mut lp = LpBuilder::new(p + 1);
    let mut obj = vec![0.0; p + 1];
    obj[p] = -1.0;
    lp.minimize(obj);
    for (i, t) in terms.iter().enumerate() {
        let mut row = t.g.clone();
        row.push(-1.0);
        if pattern.contains(&i) {
            lp.eq(row, -t.beta);
        } else {
            lp.le(row, -t.beta);
        }
    }
    for k in 0..p {
        let mut e = vec![0.0; p + 1];
        e[k] = 1.0;
        lp.le(e.clone(), x[k] + r);
        lp.ge(e, x[k] - r);
    }
    let sol = lp.solve()?;
    Ok(match sol.status {
        LpStatus::Optimal => sol.x.expect("optimal")[p],
        _ => f64::NEG_INFINITY,
    })
}

fn hull_score(terms: &[Term], pattern: &[usize], norm: NormSpec) -> Result<f64> {
    let pts = pattern.iter().map(|&i| terms[i].g.clone()).collect();
    let d = min_dual_norm_point(&Polytope::new(pts)?, norm)?.distance;
    Ok(if d > 1e-12 { 1.0 / d } else { 0.0 })
}

struct PerSet {
    value: f64,
    pattern: Vec<String>,
    radius: Option<f64>,
    positive: usize,
}

fn sample_set(problem: &Problem, x_bar: &[f64], d: &[usize], cfg: &SamplingConfig, stream: u64) -> Result<PerSet> {
    let terms = terms_for(problem, d);
    let norm = problem.norm();
    let gmax = terms.iter().map(|t| NormSpec::Euclidean.norm(&t.g)).fold(0.0, f64::max);
    let (dirs, step) = directions(problem.dim(), cfg.directions, cfg.seed, stream);
    let mut best = PerSet { value: 0.0, pattern: vec![], radius: None, positive: 0 };
    let mut cache: HashMap<Vec<usize>, f64> = HashMap::new();
    for &eps in &cfg.radii {
        cache.clear();
        let tol = eps * step * gmax;
        for u in &dirs {
            let x: Vec<f64> = x_bar.iter().zip(u).map(|(a, b)| a + eps * b).collect();
            let vals: Vec<f64> = terms.iter().map(|t| dot(&t.g, &x) + t.beta).collect();
            let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top <= 0.0 {
                continue;
            }
            best.positive += 1;
            let loose: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] >= top - tol).collect();
            let score = match cache.get(&loose) {
                Some(&s) => s,
                None => {
                    let s = if loose.len() > 1 && snap(&terms, &loose, &x, eps * step)? > 0.0 {
                        hull_score(&terms, &loose, norm)?
                    } else {
                        let exact: Vec<usize> =
                            (0..vals.len()).filter(|&i| vals[i] >= top - 1e-12 * top.abs().max(1.0)).collect();
                        hull_score(&terms, &exact, norm)?
                    };
                    cache.insert(loose.clone(), s);
                    s
                }
            };
            if score > best.value * (1.0 + 1e-12) {
                best.value = score;
                best.pattern = loose.iter().map(|&i| terms[i].label.clone()).collect();
                best.radius = Some(eps);
            }
        }
    }
    Ok(best)
}

/// Statistical lower estimate of the exact directional value; works for discretized problems.
pub fn c1_sampling(problem: &Problem, x_bar: &[f64], cfg: &SamplingConfig) -> Result<SamplingResult> {
    let sets = enumerate_k(problem, x_bar)?;
    let per: Vec<Result<PerSet>> =
        sets.par_iter().enumerate().map(|(k, d)| sample_set(problem, x_bar, &d.rows, cfg, k as u64)).collect();
    let mut out = SamplingResult { value: 0.0, kkt_set: vec![], pattern: vec![], radius: None, positive_points: 0, warning: None };
    for (d, r) in sets.iter().zip(per) {
        let r = r?;
        out.positive_points += r.positive;
        if r.value > out.value * (1.0 + 1e-12) {
            out.value = r.value;
            out.kkt_set = d.labels.clone();
            out.pattern = r.pattern;
            out.radius = r.radius;
        }
    }
    if out.positive_points == 0 {
        let msg = "no sampled point has f_D(x) > 0".to_string();
        log::warn!("{msg}");
        out.warning = Some(msg);
    }
    Ok(out)
}


#[cfg(test)]
mod agreement {
    use super::*;
    use crate::fixtures;
    use crate::moduli::c1_directional_exact;

    #[test]
    fn example_three_grid() {
        let p = fixtures::example3(2048);
        let r = c1_sampling(&p, &[-1.0, 0.0], &SamplingConfig::default()).unwrap();
        let s5 = 5f64.sqrt();
        assert!((r.value - s5).abs() <= 0.05 * s5, "{}", r.value);
    }

    #[test]
    fn random_problems_match_exact() {
        for seed in 0..20 {
            let p = fixtures::random_strongly_unique(seed, 2, 6);
            let x = p.nominal_x().unwrap().to_vec();
            let exact = c1_directional_exact(&p, &x).unwrap().value;
            let s = c1_sampling(&p, &x, &SamplingConfig::default()).unwrap().value;
            assert!(s <= exact * (1.0 + 1e-9) && s >= 0.95 * exact, "seed {seed}: {s} vs {exact}");
        }
    }
}
