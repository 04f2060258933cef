//! All constants at the nominal point, with per-constant refusals and the inequality chain.

use super::{
    c1_directional, c1_sampling, c2_upper_bound, c3_upper_bound, enumerate_k, li_gamma, lip_lower_bound, GauvinData,
    SamplingConfig,
};
use crate::certify::{certify, ConditionReport};
use crate::empirical::{estimate_clm, EstimateConfig};
use crate::error::Result;
use crate::norm::NormSpec;
use crate::problem::Problem;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Relative slack allowed in the inequality chain between computed constants.
pub const CHAIN_TOL: f64 = 1e-6;
/// Relative slack allowed for the empirical estimate above the exact modulus.
pub const EMPIRICAL_TOL: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEntry {
    pub name: String,
    /// `None` when skipped or refused.
    pub value: Option<f64>,
    pub method: String,
    pub witness: Vec<String>,
    pub note: Option<String>,
}

impl ConstantEntry {
    fn new(name: &str, method: &str) -> Self {
        ConstantEntry { name: name.into(), value: None, method: method.into(), witness: vec![], note: None }
    }

    fn refused(mut self, why: impl std::fmt::Display) -> Self {
        self.note = Some(why.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSetSummary {
    pub labels: Vec<String>,
    pub in_t: bool,
    pub inverse_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainViolation {
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub norm: NormSpec,
    pub x_bar: Vec<f64>,
    pub discretized: bool,
    pub unique: bool,
    pub c1: ConstantEntry,
    pub exact_clm: ConstantEntry,
    /// Directional value over all KKT sets, reported when uniqueness fails.
    pub k_upper: Option<ConstantEntry>,
    pub c2: ConstantEntry,
    pub c3: ConstantEntry,
    pub lip_lower: ConstantEntry,
    pub li_gamma: ConstantEntry,
    pub empirical: Option<ConstantEntry>,
    pub empirical_b_only: Option<ConstantEntry>,
    pub gauvin: Option<GauvinData>,
    pub kkt_sets: Vec<KSetSummary>,
    pub conditions: ConditionReport,
    pub inequality_chain_ok: bool,
    pub violations: Vec<ChainViolation>,
}

impl ModulusReport {
    pub fn constants(&self) -> Vec<&ConstantEntry> {
        let mut out = vec![&self.c1, &self.exact_clm];
        out.extend(self.k_upper.as_ref());
        out.extend([&self.c2, &self.c3, &self.lip_lower, &self.li_gamma]);
        out.extend(self.empirical.as_ref());
        out.extend(self.empirical_b_only.as_ref());
        out
    }

    /// One row per constant: `constant,value,method,witness,note`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("constant,value,method,witness,note\n");
        for c in self.constants() {
            let value = c.value.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&c.name),
                value,
                csv_field(&c.method),
                csv_field(&c.witness.join(" ")),
                csv_field(c.note.as_deref().unwrap_or(""))
            )
            .expect("string write");
        }
        out
    }
}

/// Quotes a CSV field when it contains a separator, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    /// Constant names to skip: `C1`, `C2`, `C3`, `exact`, `lip`, `gamma`.
    pub skip: Vec<String>,
    pub sampling: SamplingConfig,
    /// Runs the perturbation oracle in both modes when set.
    pub empirical: Option<EstimateConfig>,
}

impl ReportOptions {
    fn skipped(&self, name: &str) -> bool {
        self.skip.iter().any(|s| s.eq_ignore_ascii_case(name))
    }
}

/// Checks `C1 ≤ exact ≤ min(C2, C3)`, `C3 ≤ γ` and `empirical ≤ exact` on whatever is available.
pub fn inequality_chain(report: &ModulusReport) -> Vec<ChainViolation> {
    let mut out = Vec::new();
    let mut check = |relation: &str, lhs: Option<f64>, rhs: Option<f64>, rel: f64| {
        if let (Some(l), Some(r)) = (lhs, rhs) {
            if l > r + rel * r.abs().max(1.0) {
                out.push(ChainViolation { relation: relation.into(), lhs: l, rhs: r });
            }
        }
    };
    let exact = report.exact_clm.value;
    check("C1 <= exact_clm", report.c1.value, exact, CHAIN_TOL);
    check("exact_clm <= C3", exact, report.c3.value, CHAIN_TOL);
    check("exact_clm <= C2", exact, report.c2.value, CHAIN_TOL);
    check("C3 <= li_gamma", report.c3.value, report.li_gamma.value, CHAIN_TOL);
    if let Some(e) = &report.empirical {
        check("empirical <= exact_clm", e.value, exact, EMPIRICAL_TOL);
    }
    if let Some(e) = &report.empirical_b_only {
        check("empirical_b_only <= exact_clm", e.value, exact, EMPIRICAL_TOL);
    }
    out
}

/// Computes every constant; a failing precondition only blanks that constant.
pub fn compute_report(problem: &Problem, opts: &ReportOptions) -> Result<ModulusReport> {
    let conditions = certify(problem)?;
    let x = conditions.x_bar.clone();
    let unique = conditions.strong_unique.holds;
    let discretized = problem.is_discretized();

    let kkt_sets = enumerate_k(problem, &x)
        .map(|sets| {
            sets.into_iter()
                .map(|d| KSetSummary { in_t: d.in_t(), labels: d.labels, inverse_norm: d.inverse_norm })
                .collect()
        })
        .unwrap_or_default();

    let mut c1 = ConstantEntry::new("C1", "sampling");
    if opts.skipped("C1") {
        c1 = c1.refused("skipped");
    } else {
        match c1_sampling(problem, &x, &opts.sampling) {
            Ok(r) => {
                c1.value = Some(r.value);
                c1.witness = r.kkt_set;
                c1.note = Some(match (r.warning, r.radius) {
                    (Some(w), _) => w,
                    (None, Some(eps)) => format!("pattern {{{}}} at radius {eps}", r.pattern.join(" ")),
                    (None, None) => String::new(),
                });
            }
            Err(e) => c1 = c1.refused(e),
        }
    }

    let method = if discretized { "directional (discretized problem)" } else { "directional (finite T)" };
    let mut exact_clm = ConstantEntry::new("exact_clm", method);
    let mut k_upper = None;
    if opts.skipped("exact") {
        exact_clm = exact_clm.refused("skipped");
    } else {
        match c1_directional(problem, &x) {
            Ok(r) if unique => {
                exact_clm.value = Some(r.value);
                exact_clm.witness = r.kkt_set;
                exact_clm.note = Some(format!("pattern {{{}}}", r.pattern.join(" ")));
            }
            Ok(r) => {
                exact_clm = exact_clm.refused("the nominal solution is not unique");
                let mut k = ConstantEntry::new("K_upper", "upper bound (finite T)");
                k.value = Some(r.value);
                k.witness = r.kkt_set;
                k_upper = Some(k);
            }
            Err(e) => exact_clm = exact_clm.refused(e),
        }
    }

    let mut c2 = ConstantEntry::new("C2", "max(lambda_bar, 1) * clm L");
    let mut gauvin = None;
    if opts.skipped("C2") {
        c2 = c2.refused("skipped");
    } else {
        match c2_upper_bound(problem, &x) {
            Ok(r) => {
                c2.value = Some(r.value);
                c2.witness = r.level_set.pattern;
                c2.note = Some(format!("lambda_bar = {}, clm L = {}", r.gauvin.lambda_bar, r.level_set.value));
                gauvin = Some(r.gauvin);
            }
            Err(e) => c2 = c2.refused(e),
        }
    }

    let fill_max = |name: &str, method: &str, r: Result<super::MaxInverseNorm>| {
        let entry = ConstantEntry::new(name, method);
        match r {
            Ok(m) => ConstantEntry {
                value: Some(m.value),
                witness: m.witness().to_vec(),
                note: (m.argmax.len() > 1).then(|| format!("{} maximizing sets", m.argmax.len())),
                ..entry
            },
            Err(e) => entry.refused(e),
        }
    };
    let c3 = if opts.skipped("C3") {
        ConstantEntry::new("C3", "max inverse norm over T").refused("skipped")
    } else {
        fill_max("C3", "max inverse norm over T", c3_upper_bound(problem, &x))
    };
    let lip_lower = if opts.skipped("lip") {
        ConstantEntry::new("lip_lower", "max inverse norm over T").refused("skipped")
    } else {
        fill_max("lip_lower", "max inverse norm over T", lip_lower_bound(problem, &x))
    };
    let li_gamma = if opts.skipped("gamma") {
        ConstantEntry::new("li_gamma", "max inverse norm over all p-subsets").refused("skipped")
    } else {
        fill_max("li_gamma", "max inverse norm over all p-subsets", li_gamma(problem))
    };

    let (empirical, empirical_b_only) = match &opts.empirical {
        Some(cfg) => {
            let run = |mode| {
                let cfg = EstimateConfig { mode, ..cfg.clone() };
                let mut entry = ConstantEntry::new(
                    if mode == crate::empirical::Mode::Full { "empirical" } else { "empirical_b_only" },
                    &format!("perturbation oracle ({}, seed {})", mode.name(), cfg.seed),
                );
                match estimate_clm(problem, &cfg) {
                    Ok(e) => {
                        entry.value = Some(e.estimate);
                        entry.note = e.diagnostic.map(|d| format!("drift {:.3e} between the two smallest radii", d.drift));
                        entry
                    }
                    Err(err) => entry.refused(err),
                }
            };
            (Some(run(crate::empirical::Mode::Full)), Some(run(crate::empirical::Mode::BOnly)))
        }
        None => (None, None),
    };

    let mut report = ModulusReport {
        norm: problem.norm(),
        x_bar: x,
        discretized,
        unique,
        c1,
        exact_clm,
        k_upper,
        c2,
        c3,
        lip_lower,
        li_gamma,
        empirical,
        empirical_b_only,
        gauvin,
        kkt_sets,
        conditions,
        inequality_chain_ok: true,
        violations: vec![],
    };
    report.violations = inequality_chain(&report);
    report.inequality_chain_ok = report.violations.is_empty();
    Ok(report)
}
