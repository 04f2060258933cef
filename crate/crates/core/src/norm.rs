//! The three norms supported on the decision space, together with their duals.
//!
//! The parameter space `(c, b)` is always measured by `max { ‖c‖∗, ‖b‖∞ }`,
//! so every norm choice here also fixes how cost perturbations are sized.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormSpec {
    #[default]
    Euclidean,
    One,
    Infinity,
}

impl NormSpec {
    pub fn norm(self, x: &[f64]) -> f64 {
        match self {
            NormSpec::Euclidean => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            NormSpec::One => x.iter().map(|v| v.abs()).sum(),
            NormSpec::Infinity => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// The norm whose unit ball is polar to this one.
    pub fn dual(self) -> NormSpec {
        match self {
            NormSpec::Euclidean => NormSpec::Euclidean,
            NormSpec::One => NormSpec::Infinity,
            NormSpec::Infinity => NormSpec::One,
        }
    }

    pub fn dual_norm(self, u: &[f64]) -> f64 {
        self.dual().norm(u)
    }

    pub fn distance(self, x: &[f64], y: &[f64]) -> f64 {
        let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.norm(&diff)
    }

    /// `d∗(u, v) = ‖u − v‖∗`.
    pub fn dual_distance(self, u: &[f64], v: &[f64]) -> f64 {
        self.dual().distance(u, v)
    }

    pub fn is_polyhedral(self) -> bool {
        !matches!(self, NormSpec::Euclidean)
    }

    pub fn name(self) -> &'static str {
        match self {
            NormSpec::Euclidean => "euclidean",
            NormSpec::One => "one",
            NormSpec::Infinity => "infinity",
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" | "2" => Ok(NormSpec::Euclidean),
            "one" | "l1" | "1" => Ok(NormSpec::One),
            "infinity" | "inf" | "linf" | "max" => Ok(NormSpec::Infinity),
            other => Err(format!("unknown norm '{other}' (expected euclidean, one or infinity)")),
        }
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn sup_norm(x: &[f64]) -> f64 {
    NormSpec::Infinity.norm(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ALL: [NormSpec; 3] = [NormSpec::Euclidean, NormSpec::One, NormSpec::Infinity];

    #[test]
    fn dual_is_an_involution() {
        for n in ALL {
            assert_eq!(n.dual().dual(), n);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("euclidean".parse::<NormSpec>().unwrap(), NormSpec::Euclidean);
        assert_eq!("L1".parse::<NormSpec>().unwrap(), NormSpec::One);
        assert_eq!("inf".parse::<NormSpec>().unwrap(), NormSpec::Infinity);
        assert!("frobenius".parse::<NormSpec>().is_err());
    }

    fn sampled_support(norm: NormSpec, u: &[f64]) -> f64 {
        // max <u, x> over the unit ball: vertices for polyhedral balls, a dense circle for l2
        match norm {
            NormSpec::Euclidean => (0..200_000)
                .map(|k| {
                    let th = k as f64 * std::f64::consts::TAU / 200_000.0;
                    u[0] * th.cos() + u[1] * th.sin()
                })
                .fold(f64::MIN, f64::max),
            NormSpec::One => [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
                .iter()
                .map(|v| dot(u, v))
                .fold(f64::MIN, f64::max),
            NormSpec::Infinity => [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
                .iter()
                .map(|v| dot(u, v))
                .fold(f64::MIN, f64::max),
        }
    }

    proptest! {
        #[test]
        fn dual_norm_matches_support_of_unit_ball(u0 in -5.0f64..5.0, u1 in -5.0f64..5.0) {
            let u = [u0, u1];
            for n in ALL {
                let s = sampled_support(n, &u);
                let tol = if n == NormSpec::Euclidean { 1e-8 * (1.0 + n.dual_norm(&u)) } else { 1e-9 };
                prop_assert!((n.dual_norm(&u) - s).abs() <= tol, "{n}: {} vs {}", n.dual_norm(&u), s);
            }
        }

        #[test]
        fn holder_inequality(x in prop::collection::vec(-3.0f64..3.0, 4), u in prop::collection::vec(-3.0f64..3.0, 4)) {
            for n in ALL {
                prop_assert!(dot(&u, &x) <= n.norm(&x) * n.dual_norm(&u) + 1e-12);
            }
        }
    }
}
