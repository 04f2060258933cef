//! Linear programs `min ⟨c,x⟩ s.t. ⟨a_t,x⟩ ≤ b_t, t ∈ T` over a finite
//! (possibly discretized) index set, plus feasibility and active-set queries.

use crate::error::{CalmnessError, Result};
use crate::norm::{dot, sup_norm, NormSpec};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Default absolute tolerances. Exact arithmetic is replaced by these everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feas: f64,
    pub active: f64,
    pub kkt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { feas: 1e-9, active: 1e-9, kkt: 1e-9 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("feas", self.feas), ("active", self.active), ("kkt", self.kkt)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CalmnessError::Invalid(format!("tolerance {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Opaque index label. Discretized rows additionally carry their parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexLabel {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
}

impl IndexLabel {
    pub fn new(name: impl Into<String>) -> Self {
        IndexLabel { name: name.into(), param: None }
    }

    pub fn with_param(name: impl Into<String>, t: f64) -> Self {
        IndexLabel { name: name.into(), param: Some(t) }
    }
}

impl fmt::Display for IndexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Eq for IndexLabel {}

impl PartialOrd for IndexLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for IndexLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name.cmp(&other.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: IndexLabel,
    pub a: Vec<f64>,
    pub b: f64,
}

/// Where a problem came from. Discretized problems remember the grid they were sampled on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Origin {
    Finite,
    Discretized(DiscretizationInfo),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationInfo {
    pub source: String,
    /// `(family name, grid size, grid step)` for every continuous family.
    pub grids: Vec<(String, usize, f64)>,
    /// Active-set tolerance adapted to the grid spacing.
    pub tol_active: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    dim: usize,
    rows: Vec<Row>,
    cost: Vec<f64>,
    norm: NormSpec,
    origin: Origin,
    nominal_x: Option<Vec<f64>>,
    #[serde(default)]
    tolerances: Option<Tolerances>,
}

/// On-disk form of a finite problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub p: usize,
    #[serde(default)]
    pub norm: NormSpec,
    pub cost: Vec<f64>,
    pub rows: Vec<RowFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFile {
    pub label: String,
    pub a: Vec<f64>,
    pub b: f64,
}

impl Problem {
    pub fn new(cost: Vec<f64>, rows: Vec<Row>, norm: NormSpec) -> Result<Self> {
        Self::with_origin(cost, rows, norm, Origin::Finite)
    }

    pub fn with_origin(cost: Vec<f64>, rows: Vec<Row>, norm: NormSpec, origin: Origin) -> Result<Self> {
        let dim = cost.len();
        if dim == 0 {
            return Err(CalmnessError::Invalid("dimension p must be at least 1".into()));
        }
        if rows.is_empty() {
            return Err(CalmnessError::Invalid("problem needs at least one constraint row".into()));
        }
        for r in &rows {
            if r.a.len() != dim {
                return Err(CalmnessError::dim(dim, r.a.len()));
            }
            if !r.b.is_finite() || r.a.iter().any(|v| !v.is_finite()) {
                return Err(CalmnessError::Invalid(format!("row {} has non-finite data", r.label)));
            }
        }
        if cost.iter().any(|v| !v.is_finite()) {
            return Err(CalmnessError::Invalid("cost has non-finite entries".into()));
        }
        Ok(Problem { dim, rows, cost, norm, origin, nominal_x: None, tolerances: None })
    }

    /// Convenience constructor with labels `1, 2, …`.
    pub fn from_dense(cost: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>, norm: NormSpec) -> Result<Self> {
        if a.len() != b.len() {
            return Err(CalmnessError::dim(a.len(), b.len()));
        }
        let rows = a
            .into_iter()
            .zip(b)
            .enumerate()
            .map(|(i, (a, b))| Row { label: IndexLabel::new((i + 1).to_string()), a, b })
            .collect();
        Problem::new(cost, rows, norm)
    }

    pub fn from_file(file: ProblemFile) -> Result<Self> {
        if file.cost.len() != file.p {
            return Err(CalmnessError::Invalid(format!(
                "field 'cost' has length {} but p = {}",
                file.cost.len(),
                file.p
            )));
        }
        for (i, r) in file.rows.iter().enumerate() {
            if r.a.len() != file.p {
                return Err(CalmnessError::Invalid(format!(
                    "field 'rows[{i}].a' (label {}) has length {} but p = {}",
                    r.label,
                    r.a.len(),
                    file.p
                )));
            }
        }
        let rows = file
            .rows
            .into_iter()
            .map(|r| Row { label: IndexLabel::new(r.label), a: r.a, b: r.b })
            .collect();
        let mut problem = Problem::new(file.cost, rows, file.norm)?;
        if let Some(x) = file.nominal_x {
            problem = problem.with_nominal(x)?;
        }
        Ok(problem)
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            p: self.dim,
            norm: self.norm,
            cost: self.cost.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| RowFile { label: r.label.name.clone(), a: r.a.clone(), b: r.b })
                .collect(),
            nominal_x: self.nominal_x.clone(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text).map_err(|e| CalmnessError::Invalid(e.to_string()))?;
        Problem::from_file(file)
    }

    pub fn with_nominal(mut self, x: Vec<f64>) -> Result<Self> {
        if x.len() != self.dim {
            return Err(CalmnessError::dim(self.dim, x.len()));
        }
        self.nominal_x = Some(x);
        Ok(self)
    }

    pub fn with_norm(mut self, norm: NormSpec) -> Self {
        self.norm = norm;
        self
    }

    /// Same constraint directions and cost, new right-hand side.
    pub fn with_rhs(&self, b: &[f64]) -> Result<Problem> {
        if b.len() != self.rows.len() {
            return Err(CalmnessError::dim(self.rows.len(), b.len()));
        }
        let mut out = self.clone();
        for (r, v) in out.rows.iter_mut().zip(b) {
            r.b = *v;
        }
        Ok(out)
    }

    pub fn with_cost(&self, c: &[f64]) -> Result<Problem> {
        if c.len() != self.dim {
            return Err(CalmnessError::dim(self.dim, c.len()));
        }
        let mut out = self.clone();
        out.cost = c.to_vec();
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Row {
        &self.rows[i]
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn norm(&self) -> NormSpec {
        self.norm
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub(crate) fn origin_mut(&mut self) -> &mut Origin {
        &mut self.origin
    }

    pub fn nominal_x(&self) -> Option<&[f64]> {
        self.nominal_x.as_deref()
    }

    pub fn is_discretized(&self) -> bool {
        matches!(self.origin, Origin::Discretized(_))
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.b).collect()
    }

    pub fn labels(&self) -> Vec<IndexLabel> {
        self.rows.iter().map(|r| r.label.clone()).collect()
    }

    pub fn find_label(&self, name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.label.name == name)
    }

    /// Replaces the default tolerances.
    pub fn with_tolerances(mut self, tol: Tolerances) -> Result<Self> {
        tol.validate()?;
        self.tolerances = Some(tol);
        Ok(self)
    }

    /// Tolerances in effect: an explicit override, else the defaults with the
    /// grid-adapted active tolerance for discretized problems.
    pub fn default_tolerances(&self) -> Tolerances {
        if let Some(t) = self.tolerances {
            return t;
        }
        let mut tol = Tolerances::default();
        if let Origin::Discretized(info) = &self.origin {
            tol.active = tol.active.max(info.tol_active);
        }
        tol
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(CalmnessError::dim(self.dim, x.len()));
        }
        Ok(())
    }

    /// `⟨a_t,x⟩ − b_t` for every row.
    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.rows.iter().map(|r| dot(&r.a, x) - r.b).collect())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.cost, x)
    }

    pub fn feasible(&self, x: &[f64], tol_feas: f64) -> Result<bool> {
        Ok(self.residuals(x)?.iter().all(|&r| r <= tol_feas))
    }

    /// Worst violated row, if any violation exceeds `tol_feas`.
    pub fn worst_violation(&self, x: &[f64], tol_feas: f64) -> Result<Option<(usize, f64)>> {
        let res = self.residuals(x)?;
        let worst = res
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, &v)| (i, v));
        Ok(worst.filter(|&(_, v)| v > tol_feas))
    }

    pub fn active_set(&self, x: &[f64], tol_active: f64) -> Result<ActiveSet> {
        let res = self.residuals(x)?;
        if let Some((i, v)) = res.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
            if *v > tol_active {
                return Err(CalmnessError::Infeasible { label: self.rows[i].label.name.clone(), violation: *v });
            }
        }
        let indices: Vec<usize> = res
            .iter()
            .enumerate()
            .filter(|(_, r)| r.abs() <= tol_active)
            .map(|(i, _)| i)
            .collect();
        Ok(ActiveSet {
            point: x.to_vec(),
            labels: indices.iter().map(|&i| self.rows[i].label.clone()).collect(),
            indices,
            tol_active,
        })
    }

    /// `max { ‖c − c'‖∗, ‖b − b'‖∞ }`.
    pub fn param_distance(&self, c1: &[f64], b1: &[f64], c2: &[f64], b2: &[f64]) -> f64 {
        let dc: Vec<f64> = c1.iter().zip(c2).map(|(x, y)| x - y).collect();
        let db: Vec<f64> = b1.iter().zip(b2).map(|(x, y)| x - y).collect();
        param_norm(self.norm, &dc, &db)
    }
}

/// Size of a parameter perturbation `(δc, δb)`.
pub fn param_norm(norm: NormSpec, dc: &[f64], db: &[f64]) -> f64 {
    norm.dual_norm(dc).max(sup_norm(db))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSet {
    pub point: Vec<f64>,
    /// Row positions in the problem, increasing.
    pub indices: Vec<usize>,
    pub labels: Vec<IndexLabel>,
    pub tol_active: f64,
}

impl ActiveSet {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn label_names(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.name.clone()).collect()
    }
}

/// Distance from `x` to `{y : ⟨a,y⟩ ≤ β}` measured in `norm` (Ascoli's formula).
pub fn halfspace_distance(a: &[f64], beta: f64, x: &[f64], norm: NormSpec) -> Result<f64> {
    if a.len() != x.len() {
        return Err(CalmnessError::dim(a.len(), x.len()));
    }
    let scale = norm.dual_norm(a);
    if scale == 0.0 {
        return Err(CalmnessError::ZeroNormal);
    }
    Ok((dot(a, x) - beta).max(0.0) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn example_one_feasibility() {
        let p = fixtures::example1();
        assert!(p.feasible(&[0.0, 0.0], 1e-9).unwrap());
        assert!(!p.feasible(&[-1.0, 0.0], 1e-9).unwrap());
        assert!(matches!(p.feasible(&[0.0], 1e-9), Err(CalmnessError::DimensionMismatch { .. })));
    }

    #[test]
    fn slack_constraints_always_feasible() {
        let p = Problem::from_dense(vec![1.0, 0.0], vec![vec![1.0, 2.0], vec![-3.0, 1.0]], vec![1e9, 1e9], NormSpec::Euclidean)
            .unwrap();
        assert!(p.feasible(&[5.0, -7.0], 1e-9).unwrap());
    }

    #[test]
    fn example_one_active_set_at_origin() {
        let p = fixtures::example1();
        let act = p.active_set(&[0.0, 0.0], 1e-9).unwrap();
        assert_eq!(act.label_names(), vec!["1", "2", "3"]);
    }

    #[test]
    fn interior_point_has_empty_active_set() {
        let p = Problem::from_dense(
            vec![1.0, 1.0],
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            vec![1.0; 4],
            NormSpec::Euclidean,
        )
        .unwrap();
        assert!(p.active_set(&[0.2, -0.3], 1e-9).unwrap().is_empty());
    }

    #[test]
    fn active_set_rejects_infeasible_point() {
        let p = fixtures::example1();
        assert!(matches!(p.active_set(&[-1.0, 0.0], 1e-9), Err(CalmnessError::Infeasible { .. })));
    }

    #[test]
    fn halfspace_distances() {
        let e = NormSpec::Euclidean;
        assert_eq!(halfspace_distance(&[1.0, 0.0], 0.0, &[2.0, 0.0], e).unwrap(), 2.0);
        assert!((halfspace_distance(&[1.0, 1.0], 0.0, &[1.0, 1.0], e).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(halfspace_distance(&[1.0, 1.0], 0.0, &[-1.0, -1.0], e).unwrap(), 0.0);
        assert_eq!(halfspace_distance(&[0.0, 0.0], 0.0, &[1.0, 1.0], e), Err(CalmnessError::ZeroNormal));
    }

    #[test]
    fn json_round_trip_and_field_diagnostics() {
        let p = fixtures::example1().with_nominal(vec![0.0, 0.0]).unwrap();
        let text = serde_json::to_string(&p.to_file()).unwrap();
        let back = Problem::from_json(&text).unwrap();
        assert_eq!(back.to_file(), p.to_file());

        let bad = r#"{"p": 2, "cost": [1, 0], "rows": [{"label": "1", "a": [1], "b": 0}]}"#;
        let err = Problem::from_json(bad).unwrap_err().to_string();
        assert!(err.contains("rows[0].a"), "{err}");
        let empty = r#"{"p": 2, "cost": [1, 0], "rows": []}"#;
        assert!(Problem::from_json(empty).is_err());
    }

    proptest! {
        #[test]
        fn active_set_monotone_in_tolerance(x0 in -0.1f64..0.1, x1 in 0.0f64..0.1, t1 in 1e-9f64..1e-2, dt in 0.0f64..1e-1) {
            let p = fixtures::example1();
            // shift b so that (x0, x1) is feasible
            let res = p.residuals(&[x0, x1]).unwrap();
            let b: Vec<f64> = p.rhs().iter().zip(&res).map(|(b, r)| b + r.max(0.0)).collect();
            let q = p.with_rhs(&b).unwrap();
            let small = q.active_set(&[x0, x1], t1).unwrap();
            let large = q.active_set(&[x0, x1], t1 + dt).unwrap();
            prop_assert!(small.indices.iter().all(|i| large.indices.contains(i)));
        }

        #[test]
        fn parameter_distance_triangle(v in prop::collection::vec(-1.0f64..1.0, 15)) {
            let p = fixtures::example1();
            for norm in [NormSpec::Euclidean, NormSpec::One, NormSpec::Infinity] {
                let q = p.clone().with_norm(norm);
                let (c1, b1) = (&v[0..2], &v[2..5]);
                let (c2, b2) = (&v[5..7], &v[7..10]);
                let (c3, b3) = (&v[10..12], &v[12..15]);
                let d12 = q.param_distance(c1, b1, c2, b2);
                let d23 = q.param_distance(c2, b2, c3, b3);
                let d13 = q.param_distance(c1, b1, c3, b3);
                prop_assert!(d13 <= d12 + d23 + 1e-12);
                prop_assert!((d12 - q.param_distance(c2, b2, c1, b1)).abs() < 1e-15);
                prop_assert!(q.param_distance(c1, b1, c1, b1) == 0.0);
            }
        }
    }
}
