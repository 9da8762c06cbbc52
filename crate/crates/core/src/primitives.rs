//! Model inputs: scalar primitives, the cost and quality function families,
//! marketplace ownership, and validation of all of them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed set of parametric cost and quality curves.
///
/// Every family has a closed-form value and first two derivatives, so the
/// curvature conditions the solvers rely on are checked against exact
/// formulas rather than numerical differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `c(D) = c0 * D^p`
    PowerCost { c0: f64, p: f64 },
    /// `s(D) = s_bar * (1 - exp(-k D))`
    SaturatingExpQuality { s_bar: f64, k: f64 },
    /// `s(D) = D / (D + k)`
    RationalQuality { k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionRole {
    Cost,
    Quality,
}

/// Value and first two derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub value: f64,
    pub first: f64,
    pub second: f64,
}

#[inline]
fn pow(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 64.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

impl FunctionSpec {
    pub fn role(&self) -> FunctionRole {
        match self {
            FunctionSpec::PowerCost { .. } => FunctionRole::Cost,
            FunctionSpec::SaturatingExpQuality { .. } | FunctionSpec::RationalQuality { .. } => {
                FunctionRole::Quality
            }
        }
    }

    /// Exact value and derivatives. Rejects negative or non-finite `d`.
    pub fn eval(&self, d: f64) -> Result<Derivatives> {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::NegativeDurability(d));
        }
        Ok(self.eval_unchecked(d))
    }

    pub(crate) fn eval_unchecked(&self, d: f64) -> Derivatives {
        match *self {
            FunctionSpec::PowerCost { c0, p } => Derivatives {
                value: c0 * pow(d, p),
                first: c0 * p * pow(d, p - 1.0),
                second: c0 * p * (p - 1.0) * pow(d, p - 2.0),
            },
            FunctionSpec::SaturatingExpQuality { s_bar, k } => {
                let e = (-k * d).exp();
                Derivatives {
                    value: s_bar * (1.0 - e),
                    first: s_bar * k * e,
                    second: -s_bar * k * k * e,
                }
            }
            FunctionSpec::RationalQuality { k } => {
                let q = d + k;
                Derivatives {
                    value: d / q,
                    first: k / (q * q),
                    second: -2.0 * k / (q * q * q),
                }
            }
        }
    }

    /// Value only; caller guarantees `d >= 0`.
    #[inline]
    pub fn value(&self, d: f64) -> f64 {
        match *self {
            FunctionSpec::PowerCost { c0, p } => c0 * pow(d, p),
            FunctionSpec::SaturatingExpQuality { s_bar, k } => s_bar * (1.0 - (-k * d).exp()),
            FunctionSpec::RationalQuality { k } => d / (d + k),
        }
    }

    /// First derivative only; caller guarantees `d >= 0`.
    #[inline]
    pub fn slope(&self, d: f64) -> f64 {
        match *self {
            FunctionSpec::PowerCost { c0, p } => c0 * p * pow(d, p - 1.0),
            FunctionSpec::SaturatingExpQuality { s_bar, k } => s_bar * k * (-k * d).exp(),
            FunctionSpec::RationalQuality { k } => k / ((d + k) * (d + k)),
        }
    }

    /// Family-specific parameter restrictions, as `(description, holds)`.
    fn parameter_checks(&self) -> Vec<(String, bool)> {
        match *self {
            FunctionSpec::PowerCost { c0, p } => vec![
                (format!("PowerCost c0 > 0 (c0 = {c0})"), c0 > 0.0 && c0.is_finite()),
                (format!("PowerCost p > 1 (p = {p})"), p > 1.0 && p.is_finite()),
            ],
            FunctionSpec::SaturatingExpQuality { s_bar, k } => vec![
                (
                    format!("SaturatingExpQuality 0 < s_bar <= 1 (s_bar = {s_bar})"),
                    s_bar > 0.0 && s_bar <= 1.0,
                ),
                (format!("SaturatingExpQuality k > 0 (k = {k})"), k > 0.0 && k.is_finite()),
            ],
            FunctionSpec::RationalQuality { k } => {
                vec![(format!("RationalQuality k > 0 (k = {k})"), k > 0.0 && k.is_finite())]
            }
        }
    }
}

/// Who operates the pre-owned marketplace and collects its commission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    ThirdParty,
    Branded,
}

impl Regime {
    pub const ALL: [Regime; 2] = [Regime::ThirdParty, Regime::Branded];

    /// Whether the commission on used-good trades accrues to the firm.
    pub fn firm_collects_commission(self) -> bool {
        matches!(self, Regime::Branded)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::ThirdParty => "third-party",
            Regime::Branded => "branded",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    TwoPeriod,
    Olg,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::TwoPeriod => "two-period",
            ModelKind::Olg => "olg",
        })
    }
}

/// All scalar primitives plus the cost and quality curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Valuation per unit of quality, high type.
    pub v_h: f64,
    /// Valuation per unit of quality, low type.
    pub v_l: f64,
    /// Mass of high-type customers (per generation in the OLG model).
    pub n_h: f64,
    pub n_l: f64,
    /// Discount factor.
    pub delta: f64,
    /// Deflator on buyers' willingness to pay for a used good.
    pub alpha: f64,
    /// Commission rate on used-good transaction prices.
    pub beta: f64,
    pub cost: FunctionSpec,
    pub quality: FunctionSpec,
}

impl ModelParams {
    /// The reference instance used throughout the docs and regression tests:
    /// `c(D) = D^2 / 2`, `s(D) = 1 - exp(-D)`.
    pub fn canonical() -> Self {
        ModelParams {
            v_h: 1.0,
            v_l: 0.8,
            n_h: 0.3,
            n_l: 0.7,
            delta: 0.9,
            alpha: 0.9,
            beta: 0.2,
            cost: FunctionSpec::PowerCost { c0: 0.5, p: 2.0 },
            quality: FunctionSpec::SaturatingExpQuality { s_bar: 1.0, k: 1.0 },
        }
    }

    #[inline]
    pub fn c(&self, d: f64) -> f64 {
        self.cost.value(d)
    }

    #[inline]
    pub fn s(&self, d: f64) -> f64 {
        self.quality.value(d)
    }
}

/// Tolerances and search domain shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Upper end of the durability search interval `[0, d_max]`.
    pub d_max: f64,
    /// Absolute bisection tolerance on durability.
    pub d_tol: f64,
    /// Absolute tolerance for price and constraint checks.
    pub constraint_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { d_max: 10.0, d_tol: 1e-10, constraint_tol: 1e-9 }
    }
}

/// Outcome of one validation rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, detail: detail.into() });
    }

    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidParams(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "  [{mark}] {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

const CURVATURE_GRID_POINTS: usize = 100;

/// Checks every modelling assumption for `model` and reports each one,
/// including curvature spot checks of `c` and `s` on a 100-point grid of
/// `[0, d_max]`. Never aborts.
pub fn validate_params(p: &ModelParams, model: ModelKind, opts: &SolverOptions) -> ValidationReport {
    let mut r = ValidationReport::default();
    let finite = [p.v_h, p.v_l, p.n_h, p.n_l, p.delta, p.alpha, p.beta].iter().all(|x| x.is_finite());
    r.push("finite scalars", finite, "all scalar parameters are finite");
    r.push(
        "v_H > v_L > 0",
        p.v_h > p.v_l && p.v_l > 0.0,
        format!("v_H = {}, v_L = {}", p.v_h, p.v_l),
    );
    r.push("0 < delta < 1", p.delta > 0.0 && p.delta < 1.0, format!("delta = {}", p.delta));
    r.push("0 < alpha <= 1", p.alpha > 0.0 && p.alpha <= 1.0, format!("alpha = {}", p.alpha));
    r.push("0 <= beta < 1", p.beta >= 0.0 && p.beta < 1.0, format!("beta = {}", p.beta));
    r.push(
        "n_H > 0, n_L > 0",
        p.n_h > 0.0 && p.n_l > 0.0,
        format!("n_H = {}, n_L = {}", p.n_h, p.n_l),
    );
    match model {
        ModelKind::TwoPeriod => {
            r.push("n_L > n_H", p.n_l > p.n_h, format!("n_H = {}, n_L = {}", p.n_h, p.n_l));
        }
        ModelKind::Olg => {
            let sum = p.n_h + p.n_l;
            r.push("n_H + n_L = 1", (sum - 1.0).abs() <= 1e-12, format!("n_H + n_L = {sum}"));
            r.push(
                "2 n_L > n_H",
                2.0 * p.n_l > p.n_h,
                format!("2 n_L = {}, n_H = {}", 2.0 * p.n_l, p.n_h),
            );
        }
    }
    r.push(
        "d_max > 0",
        opts.d_max > 0.0 && opts.d_max.is_finite(),
        format!("d_max = {}", opts.d_max),
    );

    r.push(
        "cost family",
        p.cost.role() == FunctionRole::Cost,
        format!("{:?}", p.cost),
    );
    r.push(
        "quality family",
        p.quality.role() == FunctionRole::Quality,
        format!("{:?}", p.quality),
    );
    for (name, ok) in p.cost.parameter_checks().into_iter().chain(p.quality.parameter_checks()) {
        r.push("family parameters", ok, name);
    }
    if p.cost.role() != FunctionRole::Cost || p.quality.role() != FunctionRole::Quality {
        return r;
    }

    let c0 = p.cost.eval_unchecked(0.0);
    let s0 = p.quality.eval_unchecked(0.0);
    r.push("c(0) = 0", c0.value == 0.0, format!("c(0) = {}", c0.value));
    r.push("s(0) = 0", s0.value == 0.0, format!("s(0) = {}", s0.value));
    r.push("c'(0) = 0 / strict convexity", c0.first == 0.0, format!("c'(0) = {}", c0.first));
    r.push("s'(0) > 0", s0.first > 0.0, format!("s'(0) = {}", s0.first));

    // Spot checks on D in (0, d_max]; the first failure of each rule is reported.
    let mut first_fail: [Option<String>; 6] = Default::default();
    let mut prev_ratio = f64::NEG_INFINITY;
    for i in 1..=CURVATURE_GRID_POINTS {
        let d = opts.d_max * i as f64 / CURVATURE_GRID_POINTS as f64;
        let c = p.cost.eval_unchecked(d);
        let s = p.quality.eval_unchecked(d);
        let ratio = c.first / s.first;
        let rules = [
            c.first > 0.0,
            c.second > 0.0,
            s.value < 1.0,
            s.first > 0.0,
            s.second < 0.0,
            ratio > prev_ratio,
        ];
        for (slot, ok) in first_fail.iter_mut().zip(rules) {
            if !ok && slot.is_none() {
                *slot = Some(format!(
                    "fails at D = {d}: c' = {}, c'' = {}, s = {}, s' = {}, s'' = {}",
                    c.first, c.second, s.value, s.first, s.second
                ));
            }
        }
        prev_ratio = ratio;
    }
    let names = [
        "c'(D) > 0",
        "c''(D) > 0 (strict convexity)",
        "s(D) < 1",
        "s'(D) > 0",
        "s''(D) < 0",
        "c'/s' strictly increasing",
    ];
    for (name, fail) in names.into_iter().zip(first_fail) {
        let passed = fail.is_none();
        let detail = fail.unwrap_or_else(|| format!("holds on {CURVATURE_GRID_POINTS}-point grid"));
        r.push(name, passed, detail);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn canonical_olg_params_validate() {
        let r = validate_params(&ModelParams::canonical(), ModelKind::Olg, &SolverOptions::default());
        assert!(r.is_ok(), "{r}");
    }

    #[test]
    fn two_period_requires_more_low_types() {
        let p = ModelParams { n_h: 0.7, n_l: 0.3, ..ModelParams::canonical() };
        let r = validate_params(&p, ModelKind::TwoPeriod, &SolverOptions::default());
        let failed: Vec<_> = r.failures().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["n_L > n_H"]);
    }

    #[test]
    fn linear_cost_is_rejected() {
        let p = ModelParams {
            cost: FunctionSpec::PowerCost { c0: 0.5, p: 1.0 },
            ..ModelParams::canonical()
        };
        let r = validate_params(&p, ModelKind::Olg, &SolverOptions::default());
        assert!(!r.is_ok());
        let failed: Vec<_> = r.failures().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"family parameters"));
        assert!(failed.contains(&"c'(0) = 0 / strict convexity"));
        assert!(failed.contains(&"c''(D) > 0 (strict convexity)"));
    }

    #[test]
    fn swapped_families_are_rejected() {
        let p = ModelParams {
            cost: FunctionSpec::RationalQuality { k: 1.0 },
            quality: FunctionSpec::PowerCost { c0: 1.0, p: 2.0 },
            ..ModelParams::canonical()
        };
        let r = validate_params(&p, ModelKind::Olg, &SolverOptions::default());
        let failed: Vec<_> = r.failures().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["cost family", "quality family"]);
    }

    #[test]
    fn scalar_violations_are_each_reported() {
        let p = ModelParams {
            v_l: 1.2,
            delta: 1.0,
            alpha: 0.0,
            beta: 1.0,
            n_h: 0.8,
            n_l: 0.2,
            ..ModelParams::canonical()
        };
        let r = validate_params(&p, ModelKind::Olg, &SolverOptions::default());
        let failed: Vec<_> = r.failures().map(|c| c.name.as_str()).collect();
        assert_eq!(
            failed,
            ["v_H > v_L > 0", "0 < delta < 1", "0 < alpha <= 1", "0 <= beta < 1", "2 n_L > n_H"]
        );
    }

    #[test]
    fn eval_known_points() {
        let c = FunctionSpec::PowerCost { c0: 0.5, p: 2.0 }.eval(0.0).unwrap();
        assert_eq!((c.value, c.first, c.second), (0.0, 0.0, 1.0));
        let s = FunctionSpec::SaturatingExpQuality { s_bar: 1.0, k: 1.0 }.eval(0.0).unwrap();
        assert_eq!((s.value, s.first, s.second), (0.0, 1.0, -1.0));
        let r = FunctionSpec::RationalQuality { k: 1.0 }.eval(1.0).unwrap();
        assert_eq!((r.value, r.first, r.second), (0.5, 0.25, -0.25));
    }

    #[test]
    fn rational_quality_matches_finite_differences_at_one() {
        let f = FunctionSpec::RationalQuality { k: 1.0 };
        let h = 1e-5;
        assert!((central(|x| f.value(x), 1.0, h) - 0.25).abs() < 1e-9);
        assert!((central(|x| f.slope(x), 1.0, h) + 0.25).abs() < 1e-9);
    }

    #[test]
    fn eval_rejects_negative_durability() {
        let f = FunctionSpec::RationalQuality { k: 1.0 };
        assert!(matches!(f.eval(-1e-3), Err(Error::NegativeDurability(_))));
        assert!(f.eval(f64::NAN).is_err());
    }

    #[test]
    fn fractional_power_cost_second_derivative_blows_up_at_zero() {
        let c = FunctionSpec::PowerCost { c0: 1.0, p: 1.5 }.eval(0.0).unwrap();
        assert_eq!(c.first, 0.0);
        assert!(c.second.is_infinite());
    }

    #[test]
    fn params_json_rejects_unknown_keys() {
        let mut v = serde_json::to_value(ModelParams::canonical()).unwrap();
        v["gamma"] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<ModelParams>(v).is_err());

        let mut v = serde_json::to_value(ModelParams::canonical()).unwrap();
        v["cost"]["extra"] = serde_json::json!(1.0);
        assert!(serde_json::from_value::<ModelParams>(v).is_err());
    }
}
