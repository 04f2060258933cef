//! Independent oracles and random instances shared by the integration tests.
#![allow(dead_code)]

use calmness::certify::nominal_active_set;
use calmness::{Matrix, NormSpec, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub const NORMS: [NormSpec; 3] = [NormSpec::Euclidean, NormSpec::One, NormSpec::Infinity];

/// Dual norms written out independently of the library: ℓ2 ↔ ℓ2, ℓ1 ↔ ℓ∞.
pub fn dual_norms(x: f64, y: f64) -> [f64; 3] {
    [x.hypot(y), x.abs().max(y.abs()), x.abs() + y.abs()]
}

/// Smallest dual norm over `conv{v}` by grid search on barycentric weights with step `h`.
/// Polygons with four vertices are covered by their triangles.
pub fn grid_min(v: &[[f64; 2]], h: f64) -> [f64; 3] {
    let n = (1.0 / h).round() as usize;
    let mut best = [f64::INFINITY; 3];
    let triples: Vec<[usize; 3]> = match v.len() {
        1 => vec![[0, 0, 0]],
        2 => vec![[0, 1, 1]],
        3 => vec![[0, 1, 2]],
        _ => vec![[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]],
    };
    for [a, b, c] in triples {
        for i in 0..=n {
            let wa = i as f64 * h;
            for j in 0..=(n - i) {
                let wb = j as f64 * h;
                let wc = 1.0 - wa - wb;
                let x = wa * v[a][0] + wb * v[b][0] + wc * v[c][0];
                let y = wa * v[a][1] + wb * v[b][1] + wc * v[c][1];
                for (k, d) in dual_norms(x, y).into_iter().enumerate() {
                    best[k] = best[k].min(d);
                }
            }
        }
    }
    best
}

pub fn random_matrix(rng: &mut ChaCha8Rng, p: usize) -> Matrix {
    loop {
        let rows: Vec<Vec<f64>> = (0..p).map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        if m.determinant().is_ok_and(|d| d.abs() > 1e-2) {
            return m;
        }
    }
}

/// `inf −⟨c̄,z⟩/α` over unit `z` with `⟨a_t,z⟩ ≥ α > 0` on the active rows, by scanning
/// 3600 angles and taking the largest admissible `α` for each.
pub fn lambda_grid(problem: &Problem, x_bar: &[f64]) -> f64 {
    let active = nominal_active_set(problem, x_bar).unwrap();
    let c = problem.cost();
    let mut best = f64::INFINITY;
    for k in 0..3600 {
        let th = 2.0 * PI * k as f64 / 3600.0;
        let z = [th.cos(), th.sin()];
        let alpha = active
            .indices
            .iter()
            .map(|&i| problem.row(i).a[0] * z[0] + problem.row(i).a[1] * z[1])
            .fold(f64::INFINITY, f64::min);
        if alpha > 0.0 {
            best = best.min(-(c[0] * z[0] + c[1] * z[1]) / alpha);
        }
    }
    best
}

/// Planar problem with active rows of norm in `[3, 4]` inside a 1.6 rad cone of normals
/// (so a Slater point exists), `c̄ = −Σ μ_t a_t`, and two rows with slack.
pub fn random_slater(seed: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let base = rng.gen_range(-PI..PI);
    let k = rng.gen_range(2..=4);
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut c = vec![0.0; 2];
    for _ in 0..k {
        let th = base + rng.gen_range(-0.8..0.8);
        let r = rng.gen_range(3.0..4.0);
        let row = vec![r * th.cos(), r * th.sin()];
        let mu = rng.gen_range(0.05..0.5);
        c[0] -= mu * row[0];
        c[1] -= mu * row[1];
        b.push(row[0] * x[0] + row[1] * x[1]);
        a.push(row);
    }
    for _ in 0..2 {
        let row: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        b.push(row[0] * x[0] + row[1] * x[1] + rng.gen_range(0.2..1.0));
        a.push(row);
    }
    Problem::from_dense(c, a, b, NormSpec::Euclidean).unwrap().with_nominal(x).unwrap()
}

