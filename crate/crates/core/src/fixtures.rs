//! The three worked instances used as the regression suite, plus a couple of
//! small degenerate cases. The same data ships as JSON under `fixtures/`.

use crate::norm::NormSpec;
use crate::problem::{Problem, RowFile};
use crate::semiinf::{Family, ScalarSampler, SemiInfSource, VectorSampler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// `min x₁ + x₂/3` s.t. `−x₁ ≤ b₁, −x₁ − x₂/2 ≤ b₂, −x₁ − x₂ ≤ b₃`, nominal `b̄ = 0`.
pub fn example1() -> Problem {
    Problem::from_dense(
        vec![1.0, 1.0 / 3.0],
        vec![vec![-1.0, 0.0], vec![-1.0, -0.5], vec![-1.0, -1.0]],
        vec![0.0; 3],
        NormSpec::Euclidean,
    )
    .expect("valid fixture")
}

/// Example 1 with the extra row `−x₁ + x₂ ≤ b₄`.
pub fn example2() -> Problem {
    Problem::from_dense(
        vec![1.0, 1.0 / 3.0],
        vec![vec![-1.0, 0.0], vec![-1.0, -0.5], vec![-1.0, -1.0], vec![-1.0, 1.0]],
        vec![0.0; 4],
        NormSpec::Euclidean,
    )
    .expect("valid fixture")
}

/// `min x₁` s.t. `(cos t)x₁ + (sin t)x₂ ≤ 1, t ∈ [−π, π]`, `−x₁ − x₂ ≤ 1`, `−x₁ + x₂ ≤ 1`.
pub fn example3_source() -> SemiInfSource {
    SemiInfSource {
        name: "example3".into(),
        p: 2,
        norm: NormSpec::Euclidean,
        cost: vec![1.0, 0.0],
        families: vec![Family {
            name: "circle".into(),
            range: [-PI, PI],
            a: VectorSampler::Circle,
            b: ScalarSampler::Const(1.0),
            grid_size: 4096,
        }],
        discrete: vec![
            RowFile { label: "4".into(), a: vec![-1.0, -1.0], b: 1.0 },
            RowFile { label: "5".into(), a: vec![-1.0, 1.0], b: 1.0 },
        ],
        nominal_x: Some(vec![-1.0, 0.0]),
    }
}

pub fn example3(grid: usize) -> Problem {
    crate::semiinf::discretize(&example3_source().with_grid(grid)).expect("valid fixture")
}

/// Nonnegative quadrant with `c̄ = −a₁`: `−c̄` sits on an edge of the active cone.
pub fn degenerate_ray() -> Problem {
    Problem::from_dense(vec![1.0, 0.0], vec![vec![-1.0, 0.0], vec![0.0, -1.0]], vec![0.0, 0.0], NormSpec::Euclidean)
        .expect("valid fixture")
        .with_nominal(vec![0.0, 0.0])
        .expect("valid fixture")
}

/// Right-hand sides `bⁿ` and points `xⁿ ∈ S(c̄, bⁿ)` from the first example, `bⁿ = (1/n, −1/n, 0)`.
pub fn example1_sequence(ns: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    ns.iter().map(|&n| (vec![1.0 / n, -1.0 / n, 0.0], vec![-1.0 / n, 4.0 / n])).collect()
}

/// `b^ε = (−ε, ε, ε, ε)` with `(ε, −2ε) ∈ S(c̄, b^ε)` for the second example.
pub fn example2_sequence(eps: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    eps.iter().map(|&e| (vec![-e, e, e, e], vec![e, -2.0 * e])).collect()
}

/// Arc-modified right-hand side `bⁿ` and the point `xⁿ` for the discretized third example.
///
/// `bⁿ_t = (1 − 1/n)` for `|t| ≤ αₙ`, `(1 − 1/n)cos(|t| − αₙ)` beyond, and `1 + 1/n` on rows 4, 5,
/// with `αₙ = arccos(x₁ⁿ / (1 − 1/n))`.
pub fn example3_sequence(problem: &Problem, ns: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    ns.iter()
        .map(|&n| {
            let e = 1.0 / n;
            let s = (1.0 - 6.0 * e + e * e).sqrt();
            let x = vec![0.5 * (-1.0 - e - s), 0.5 * (-1.0 - e + s)];
            let r = 1.0 - e;
            let alpha = (x[0] / r).clamp(-1.0, 1.0).acos();
            let b = problem
                .rows()
                .iter()
                .map(|row| match row.label.param {
                    Some(t) if t.abs() <= alpha => r,
                    Some(t) => r * (t.abs() - alpha).cos(),
                    None => 1.0 + e,
                })
                .collect();
            (b, x)
        })
        .collect()
}

/// Random `p`-dimensional problem with `m` rows, entries uniform in `[−1, 1]`.
/// The nominal LP may be infeasible or unbounded.
pub fn random_problem(seed: u64, p: usize, m: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Vec<f64>> = (0..m).map(|_| (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Problem::from_dense(c, a, b, NormSpec::Euclidean).expect("valid random problem")
}

/// Random problem whose nominal point `x̄` is a vertex with `−c̄` a strictly positive
/// combination of at least `p` spanning active rows, so `x̄` is the strongly unique solution.
/// Uses between `p` and `m` active rows; the rest have slack in `[0.2, 1]`.
pub fn random_strongly_unique(seed: u64, p: usize, m: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
    loop {
        let k = rng.gen_range(p..=m.max(p));
        let mut a: Vec<Vec<f64>> = Vec::with_capacity(m.max(p));
        let mut b = Vec::with_capacity(m.max(p));
        for _ in 0..k {
            let row: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            b.push(crate::norm::dot(&row, &x));
            a.push(row);
        }
        let rank_ok = spans(&a[..k], p);
        let mut c = vec![0.0; p];
        for row in &a {
            let mu: f64 = rng.gen_range(0.2..1.0);
            for (ci, ai) in c.iter_mut().zip(row) {
                *ci -= mu * ai;
            }
        }
        for _ in k..m.max(p) {
            let row: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            b.push(crate::norm::dot(&row, &x) + rng.gen_range(0.2..1.0));
            a.push(row);
        }
        if !rank_ok {
            continue;
        }
        return Problem::from_dense(c, a, b, NormSpec::Euclidean)
            .and_then(|pr| pr.with_nominal(x.clone()))
            .expect("valid random problem");
    }
}

/// Whether the rows contain `p` linearly independent ones (well conditioned).
fn spans(rows: &[Vec<f64>], p: usize) -> bool {
    crate::certify::subsets_of_size(rows.len(), p).into_iter().any(|s| {
        let m = crate::linalg::Matrix::from_rows(&s.iter().map(|&i| rows[i].clone()).collect::<Vec<_>>())
            .expect("square");
        m.determinant().map(|d| d.abs() > 1e-3).unwrap_or(false)
    })
}
