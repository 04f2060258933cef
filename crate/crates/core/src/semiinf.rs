//! Linear semi-infinite programs with one-dimensional parametric index families,
//! and their discretization into finite [`Problem`]s on uniform grids.

use crate::error::{CalmnessError, Result};
use crate::norm::{dot, NormSpec};
use crate::problem::{DiscretizationInfo, IndexLabel, Origin, Problem, Row, RowFile};
use serde::{Deserialize, Serialize};

/// `t ↦ a(t) ∈ ℝᵖ`. Only named builtins and polynomial tables; no user code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorSampler {
    /// `a(t) = (cos t, sin t)`, requires `p = 2`.
    Circle,
    /// One coefficient list per component, lowest degree first.
    Poly(Vec<Vec<f64>>),
}

/// `t ↦ b(t) ∈ ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarSampler {
    Const(f64),
    Poly(Vec<f64>),
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

impl VectorSampler {
    pub fn eval(&self, t: f64, p: usize) -> Result<Vec<f64>> {
        match self {
            VectorSampler::Circle => {
                if p != 2 {
                    return Err(CalmnessError::Invalid(format!("circle sampler needs p = 2, got {p}")));
                }
                Ok(vec![t.cos(), t.sin()])
            }
            VectorSampler::Poly(components) => {
                if components.len() != p {
                    return Err(CalmnessError::dim(p, components.len()));
                }
                Ok(components.iter().map(|c| horner(c, t)).collect())
            }
        }
    }
}

impl ScalarSampler {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ScalarSampler::Const(v) => *v,
            ScalarSampler::Poly(c) => horner(c, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub name: String,
    pub range: [f64; 2],
    pub a: VectorSampler,
    pub b: ScalarSampler,
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemiInfSource {
    #[serde(default = "default_name")]
    pub name: String,
    pub p: usize,
    #[serde(default)]
    pub norm: NormSpec,
    pub cost: Vec<f64>,
    pub families: Vec<Family>,
    #[serde(default)]
    pub discrete: Vec<RowFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_x: Option<Vec<f64>>,
}

fn default_name() -> String {
    "semi-infinite".into()
}

impl SemiInfSource {
    pub fn from_json(text: &str) -> Result<Self> {
        let src: SemiInfSource = serde_json::from_str(text).map_err(|e| CalmnessError::Invalid(e.to_string()))?;
        src.validate()?;
        Ok(src)
    }

    /// Probes every sampler at both endpoints and the midpoint.
    pub fn validate(&self) -> Result<()> {
        if self.cost.len() != self.p {
            return Err(CalmnessError::Invalid(format!("field 'cost' has length {} but p = {}", self.cost.len(), self.p)));
        }
        for f in &self.families {
            let [lo, hi] = f.range;
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return Err(CalmnessError::Invalid(format!("family {}: invalid range [{lo}, {hi}]", f.name)));
            }
            if lo == hi {
                return Err(CalmnessError::Invalid(format!(
                    "family {}: degenerate range collapses to the single index t = {lo}; list it as a discrete row",
                    f.name
                )));
            }
            if f.grid_size < 2 {
                return Err(CalmnessError::Invalid(format!("family {}: grid must include both endpoints", f.name)));
            }
            for t in [lo, 0.5 * (lo + hi), hi] {
                let a = f.a.eval(t, self.p)?;
                let b = f.b.eval(t);
                if !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                    return Err(CalmnessError::Invalid(format!("family {}: sampler not finite at t = {t}", f.name)));
                }
            }
        }
        for (i, r) in self.discrete.iter().enumerate() {
            if r.a.len() != self.p {
                return Err(CalmnessError::Invalid(format!(
                    "field 'discrete[{i}].a' (label {}) has length {} but p = {}",
                    r.label,
                    r.a.len(),
                    self.p
                )));
            }
        }
        if self.families.is_empty() && self.discrete.is_empty() {
            return Err(CalmnessError::Invalid("source has no constraints".into()));
        }
        Ok(())
    }

    /// Same source with every family resampled on `grid` points.
    pub fn with_grid(&self, grid: usize) -> SemiInfSource {
        let mut s = self.clone();
        for f in s.families.iter_mut() {
            f.grid_size = grid;
        }
        s
    }
}

/// Contents of a problem file: a finite problem, or a semi-infinite source (has `families`).
#[derive(Debug, Clone)]
pub enum InputFile {
    Finite(Problem),
    SemiInfinite(SemiInfSource),
}

impl InputFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CalmnessError::Invalid(e.to_string()))?;
        if value.get("families").is_some() {
            Ok(InputFile::SemiInfinite(SemiInfSource::from_json(text)?))
        } else {
            Ok(InputFile::Finite(Problem::from_json(text)?))
        }
    }

    /// The finite problem, discretizing a source on its own grid or on `grid` points.
    pub fn problem(&self, grid: Option<usize>) -> Result<Problem> {
        match (self, grid) {
            (InputFile::Finite(p), _) => Ok(p.clone()),
            (InputFile::SemiInfinite(s), Some(g)) => discretize(&s.with_grid(g)),
            (InputFile::SemiInfinite(s), None) => discretize(s),
        }
    }

    pub fn source(&self) -> Option<&SemiInfSource> {
        match self {
            InputFile::SemiInfinite(s) => Some(s),
            InputFile::Finite(_) => None,
        }
    }
}

/// Uniform grid on `[lo, hi]` containing both endpoints exactly.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i == n - 1 { hi } else { lo + i as f64 * h }).collect()
}

/// Samples every family on its grid and appends the discrete rows.
pub fn discretize(source: &SemiInfSource) -> Result<Problem> {
    source.validate()?;
    let p = source.p;
    let mut rows = Vec::new();
    let mut grids = Vec::new();
    for f in &source.families {
        let ts = uniform_grid(f.range[0], f.range[1], f.grid_size);
        let h = (f.range[1] - f.range[0]) / (f.grid_size - 1) as f64;
        grids.push((f.name.clone(), f.grid_size, h));
        for t in ts {
            rows.push(Row { label: IndexLabel::with_param(format!("{}@{}", f.name, t), t), a: f.a.eval(t, p)?, b: f.b.eval(t) });
        }
    }
    for r in &source.discrete {
        rows.push(Row { label: IndexLabel::new(r.label.clone()), a: r.a.clone(), b: r.b });
    }
    if source.families.is_empty() {
        let mut problem = Problem::new(source.cost.clone(), rows, source.norm)?;
        if let Some(x) = &source.nominal_x {
            problem = problem.with_nominal(x.clone())?;
        }
        return Ok(problem);
    }
    let info = DiscretizationInfo { source: source.name.clone(), grids, tol_active: 1e-9 };
    let mut problem = Problem::with_origin(source.cost.clone(), rows, source.norm, Origin::Discretized(info))?;
    let xbar = match &source.nominal_x {
        Some(x) => Some(x.clone()),
        None => crate::simplex::solve_lp(&problem)?.x,
    };
    if let Some(x) = &xbar {
        let tol = curvature_tolerance(source, x)?;
        problem = problem.with_active_tolerance(tol);
    }
    if let Some(x) = &source.nominal_x {
        problem = problem.with_nominal(x.clone())?;
    }
    Ok(problem)
}

/// Active tolerance `max(1e-9, M·h²/8)`, `M` the largest second difference of
/// `t ↦ ⟨a_t,x̄⟩ − b_t` over the grid. Active indices of a feasible point are
/// local maxima of that function, so the nearest grid point is within `M·h²/8`.
fn curvature_tolerance(source: &SemiInfSource, xbar: &[f64]) -> Result<f64> {
    let mut tol = 1e-9f64;
    for f in &source.families {
        let ts = uniform_grid(f.range[0], f.range[1], f.grid_size);
        if ts.len() < 3 {
            continue;
        }
        let h = (f.range[1] - f.range[0]) / (f.grid_size - 1) as f64;
        let g: Vec<f64> = ts
            .iter()
            .map(|&t| Ok(dot(&f.a.eval(t, source.p)?, xbar) - f.b.eval(t)))
            .collect::<Result<_>>()?;
        let m2 = g.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs() / (h * h)).fold(0.0, f64::max);
        tol = tol.max(m2 * h * h / 8.0);
    }
    Ok(tol)
}

impl Problem {
    pub(crate) fn with_active_tolerance(mut self, tol: f64) -> Problem {
        if let Origin::Discretized(info) = self.origin_mut() {
            info.tol_active = tol;
        }
        self
    }
}

/// One line of a refinement table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelValue {
    pub grid: usize,
    pub value: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub quantity: String,
    pub levels: Vec<LevelValue>,
    /// `|v_k − v_{k−1}|` over the last two successful levels.
    pub final_delta: Option<f64>,
    /// Successive differences never grow after the first level whose delta is below 1e-3.
    pub stabilizing: bool,
}

/// Evaluates `quantity` on each grid level. Failures are recorded per level.
pub fn refine_and_track<F>(source: &SemiInfSource, levels: &[usize], quantity: &str, mut eval: F) -> ConvergenceTable
where
    F: FnMut(&Problem) -> Result<f64>,
{
    let mut out = Vec::with_capacity(levels.len());
    for &grid in levels {
        let res = discretize(&source.with_grid(grid)).and_then(|p| eval(&p));
        match res {
            Ok(v) => out.push(LevelValue { grid, value: Some(v), error: None }),
            Err(e) => {
                log::warn!("grid {grid}: {e}");
                out.push(LevelValue { grid, value: None, error: Some(e.to_string()) })
            }
        }
    }
    let values: Vec<f64> = out.iter().filter_map(|l| l.value).collect();
    let deltas: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let final_delta = deltas.last().copied();
    let stabilizing = match deltas.iter().position(|&d| d <= 1e-3) {
        Some(k) => deltas[k..].iter().all(|&d| d <= 1e-3),
        None => deltas.is_empty(),
    };
    if !stabilizing {
        log::warn!("{quantity}: refinement values oscillate beyond 1e-3: {values:?}");
    }
    ConvergenceTable { quantity: quantity.to_string(), levels: out, final_delta, stabilizing }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::f64::consts::PI;

    #[test]
    fn example_three_small_grid() {
        let src = fixtures::example3_source().with_grid(5);
        let p = discretize(&src).unwrap();
        assert_eq!(p.num_rows(), 7);
        let first = &p.rows()[0].a;
        let last = &p.rows()[4].a;
        assert_eq!(first[0], -1.0);
        assert_eq!(last[0], -1.0);
        assert!((first[1] - last[1]).abs() < 1e-15);
        assert_eq!(p.rows()[0].label.param, Some(-PI));
        assert_eq!(p.rows()[4].label.param, Some(PI));
        assert_eq!(p.rows()[5].label.name, "4");
    }

    #[test]
    fn discrete_only_source_is_plain_problem() {
        let src = SemiInfSource {
            name: "finite".into(),
            p: 2,
            norm: NormSpec::Euclidean,
            cost: vec![1.0, 1.0 / 3.0],
            families: vec![],
            discrete: fixtures::example1().to_file().rows,
            nominal_x: None,
        };
        let p = discretize(&src).unwrap();
        assert_eq!(p.to_file(), fixtures::example1().to_file());
        assert!(!p.is_discretized());
    }

    #[test]
    fn endpoint_sampling_of_linear_family() {
        let src = SemiInfSource {
            name: "lin".into(),
            p: 2,
            norm: NormSpec::Euclidean,
            cost: vec![0.0, 0.0],
            families: vec![Family {
                name: "f".into(),
                range: [0.0, 1.0],
                a: VectorSampler::Poly(vec![vec![1.0], vec![0.0, 1.0]]),
                b: ScalarSampler::Const(1.0),
                grid_size: 2,
            }],
            discrete: vec![],
            nominal_x: Some(vec![0.0, 0.0]),
        };
        let p = discretize(&src).unwrap();
        assert_eq!(p.rows()[0].a, vec![1.0, 0.0]);
        assert_eq!(p.rows()[1].a, vec![1.0, 1.0]);
    }

    #[test]
    fn degenerate_range_rejected() {
        let mut src = fixtures::example3_source();
        src.families[0].range = [1.0, 1.0];
        assert!(discretize(&src).is_err());
        let mut bad = fixtures::example3_source();
        bad.p = 3;
        bad.cost.push(0.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn tolerance_scales_with_curvature() {
        let p = discretize(&fixtures::example3_source().with_grid(4096)).unwrap();
        let h = 2.0 * PI / 4095.0;
        let tol = p.default_tolerances().active;
        assert!((tol - h * h / 8.0).abs() < 1e-3 * tol, "{tol}");
        // neighbours of ±π stay inactive
        assert!(1.0 - h.cos() > tol);
    }

    #[test]
    fn relaxation_property() {
        // points feasible for the continuum are feasible for every grid
        let src = fixtures::example3_source();
        for grid in [16, 64, 257] {
            let p = discretize(&src.with_grid(grid)).unwrap();
            for k in 0..50 {
                let th = k as f64 * 0.37;
                let r = 0.7;
                let x = [r * th.cos(), r * th.sin()];
                let cont_feasible = -x[0] - x[1] <= 1.0 && -x[0] + x[1] <= 1.0;
                if cont_feasible {
                    assert!(p.feasible(&x, 1e-12).unwrap());
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let src = fixtures::example3_source();
        let text = serde_json::to_string_pretty(&src).unwrap();
        assert!(text.contains("\"circle\""));
        assert_eq!(SemiInfSource::from_json(&text).unwrap(), src);
    }

    #[test]
    fn refinement_records_failures() {
        let src = fixtures::example3_source();
        let table = refine_and_track(&src, &[8, 16], "rows", |p| {
            if p.num_rows() > 12 {
                Err(CalmnessError::Precondition("too many".into()))
            } else {
                Ok(p.num_rows() as f64)
            }
        });
        assert_eq!(table.levels[0].value, Some(10.0));
        assert!(table.levels[1].error.is_some());
    }
}
