//! Comparative statics: closed-form envelope derivatives of the optimal
//! value, finite-difference re-solves, parameter sweeps, the commission
//! search and the regime comparison.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::olg::{self, OlgMarketMode, OlgObjective};
use crate::primitives::{ModelKind, ModelParams, Regime, SolverOptions};
use crate::two_period::{self, MarketMode};

/// Default finite-difference step.
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parameter {
    Alpha,
    Beta,
    Delta,
}

impl Parameter {
    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            Parameter::Alpha => p.alpha,
            Parameter::Beta => p.beta,
            Parameter::Delta => p.delta,
        }
    }

    pub fn with(self, p: &ModelParams, v: f64) -> ModelParams {
        let mut q = *p;
        match self {
            Parameter::Alpha => q.alpha = v,
            Parameter::Beta => q.beta = v,
            Parameter::Delta => q.delta = v,
        }
        q
    }

    /// Admissible range `(lo, hi)`; whether each end is itself admissible.
    fn domain(self) -> (f64, bool, f64, bool) {
        match self {
            Parameter::Alpha => (0.0, false, 1.0, true),
            Parameter::Beta => (0.0, true, 1.0, false),
            Parameter::Delta => (0.0, false, 1.0, false),
        }
    }

    fn admits(self, v: f64) -> bool {
        let (lo, lo_in, hi, hi_in) = self.domain();
        (v > lo || (lo_in && v == lo)) && (v < hi || (hi_in && v == hi))
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parameter::Alpha => "alpha",
            Parameter::Beta => "beta",
            Parameter::Delta => "delta",
        })
    }
}

/// Optimal durability and the firm's optimal value in one model and regime.
/// The two-period value is total profit; the infinite-horizon value is the
/// first-period revenue plus the discounted stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalPoint {
    pub d_star: f64,
    pub value: f64,
    /// The used market operates at the optimum.
    pub active: bool,
    pub mode: &'static str,
    /// Two-period total surplus at `d_star`; `None` for the infinite horizon.
    pub welfare: Option<f64>,
}

pub fn optimal_point(p: &ModelParams, model: ModelKind, regime: Regime, opts: &SolverOptions) -> Result<OptimalPoint> {
    match model {
        ModelKind::TwoPeriod => {
            let eq = two_period::solve(p, regime, opts)?;
            let (active, mode) = match eq.market_mode {
                MarketMode::ActivePreOwned => (true, "ActivePreOwned"),
                MarketMode::Shutdown => (false, "Shutdown"),
                MarketMode::LowTypeDeviates => (true, "LowTypeDeviates"),
            };
            Ok(OptimalPoint { d_star: eq.d_star, value: eq.profit_total, active, mode, welfare: Some(eq.welfare) })
        }
        ModelKind::Olg => {
            let sol = olg::optimal_durability_olg(p, regime, OlgObjective::WithFirstPeriod, opts)?;
            let (active, mode) = match sol.market_mode {
                OlgMarketMode::ActivePreOwned => (true, "ActivePreOwned"),
                OlgMarketMode::Shutdown => (false, "Shutdown"),
                OlgMarketMode::NoActiveSteadyState => (true, "NoActiveSteadyState"),
            };
            Ok(OptimalPoint { d_star: sol.d_star, value: sol.objective, active, mode, welfare: None })
        }
    }
}

/// Total derivative of the optimal value with respect to `param`, from the
/// envelope theorem: only the direct effect at fixed `d_star` survives.
/// Also valid at `d_star = 0`, where the α and β effects vanish.
pub fn envelope_derivative(p: &ModelParams, model: ModelKind, regime: Regime, param: Parameter, d_star: f64) -> f64 {
    let s = p.s(d_star);
    let (n_h, v_l, a, b, dl) = (p.n_h, p.v_l, p.alpha, p.beta, p.delta);
    let branded = regime == Regime::Branded;
    match model {
        ModelKind::TwoPeriod => match param {
            Parameter::Alpha => {
                let k = if branded { 2.0 - b } else { 2.0 - 2.0 * b };
                n_h * dl * k * v_l * s
            }
            Parameter::Beta => {
                let k = if branded { 1.0 } else { 2.0 };
                -k * n_h * dl * a * v_l * s
            }
            Parameter::Delta => {
                let pr = two_period::prices(p, d_star);
                let commission = if branded { b * pr.p2u } else { 0.0 };
                n_h * (a * (1.0 - b) * v_l * s + pr.p2n - p.c(d_star) + commission)
            }
        },
        ModelKind::Olg => {
            let stream = dl / (1.0 - dl);
            match param {
                Parameter::Alpha => {
                    let k = if branded { 1.0 } else { 1.0 - b };
                    n_h * dl * (1.0 - b) * v_l * s + stream * n_h * k * v_l * s
                }
                Parameter::Beta => {
                    let k = if branded { 0.0 } else { a };
                    -n_h * dl * a * v_l * s - stream * n_h * k * v_l * s
                }
                Parameter::Delta => {
                    let per = olg::per_period_profit(p, regime, d_star);
                    n_h * a * (1.0 - b) * v_l * s + per / ((1.0 - dl) * (1.0 - dl))
                }
            }
        }
    }
}

/// Numerical derivative of the optimal value, re-solving D* at each shifted
/// parameter. Central when both neighbours are admissible, otherwise a
/// second-order one-sided stencil.
pub fn finite_difference(
    p: &ModelParams,
    model: ModelKind,
    regime: Regime,
    param: Parameter,
    h: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let theta = param.get(p);
    let value = |v: f64| optimal_point(&param.with(p, v), model, regime, opts).map(|o| o.value);
    if param.admits(theta - h) && param.admits(theta + h) {
        Ok((value(theta + h)? - value(theta - h)?) / (2.0 * h))
    } else if param.admits(theta + 2.0 * h) {
        Ok((-3.0 * value(theta)? + 4.0 * value(theta + h)? - value(theta + 2.0 * h)?) / (2.0 * h))
    } else if param.admits(theta - 2.0 * h) {
        Ok((3.0 * value(theta)? - 4.0 * value(theta - h)? + value(theta - 2.0 * h)?) / (2.0 * h))
    } else {
        Err(Error::InvalidSweep(format!("{param} = {theta} leaves no room for a step of {h}")))
    }
}

/// `|a - f| / |a|`, or the absolute gap when `|a|` is tiny.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let gap = (analytic - numeric).abs();
    if analytic.abs() > 1e-8 {
        gap / analytic.abs()
    } else {
        gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub param_value: f64,
    pub regime: Regime,
    pub active: bool,
    pub market_mode: &'static str,
    pub d_star: f64,
    pub profit: f64,
    pub welfare: Option<f64>,
    pub envelope_deriv: f64,
    pub fd_deriv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Monotonicity {
    /// Fewer than two active points.
    NotApplicable,
    StrictlyIncreasing,
    StrictlyDecreasing,
    Neither,
}

fn monotonicity(values: impl Iterator<Item = f64>) -> Monotonicity {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return Monotonicity::NotApplicable;
    }
    if v.windows(2).all(|w| w[1] > w[0]) {
        Monotonicity::StrictlyIncreasing
    } else if v.windows(2).all(|w| w[1] < w[0]) {
        Monotonicity::StrictlyDecreasing
    } else {
        Monotonicity::Neither
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    pub active_points: usize,
    pub excluded_points: usize,
    pub d_star: Monotonicity,
    pub profit: Monotonicity,
    /// Largest relative envelope-vs-difference gap over active points.
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeDelta {
    pub param_value: f64,
    pub d_gap: f64,
    pub profit_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparativeReport {
    pub model: ModelKind,
    pub parameter: Parameter,
    pub points: Vec<SweepPoint>,
    pub deltas: Vec<RegimeDelta>,
    pub verdicts: Vec<RegimeVerdict>,
}

impl ComparativeReport {
    /// Whether the monotonicity predicted for `parameter` holds in every
    /// regime. δ carries no prediction and always passes.
    pub fn claims_hold(&self) -> bool {
        let expected = match self.parameter {
            Parameter::Alpha => Monotonicity::StrictlyIncreasing,
            Parameter::Beta => Monotonicity::StrictlyDecreasing,
            Parameter::Delta => return true,
        };
        self.verdicts.iter().all(|v| {
            let ok = |m| m == expected || m == Monotonicity::NotApplicable;
            ok(v.d_star) && ok(v.profit)
        })
    }
}

/// Solves both regimes at every grid value. Points run in parallel but the
/// report lists them in grid order, third-party before branded.
pub fn monotonicity_sweep(
    p: &ModelParams,
    model: ModelKind,
    param: Parameter,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<ComparativeReport> {
    if grid.is_empty() {
        return Err(Error::InvalidSweep("empty grid".into()));
    }
    if let Some(v) = grid.iter().find(|v| !param.admits(**v)) {
        return Err(Error::InvalidSweep(format!("{param} = {v} is outside its admissible range")));
    }
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&v| {
            let q = param.with(p, v);
            Regime::ALL
                .into_iter()
                .map(|regime| {
                    let o = optimal_point(&q, model, regime, opts)?;
                    Ok(SweepPoint {
                        param_value: v,
                        regime,
                        active: o.active,
                        market_mode: o.mode,
                        d_star: o.d_star,
                        profit: o.value,
                        welfare: o.welfare,
                        envelope_deriv: envelope_derivative(&q, model, regime, param, o.d_star),
                        fd_deriv: finite_difference(&q, model, regime, param, FD_STEP, opts)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let deltas = points
        .chunks(2)
        .map(|w| RegimeDelta {
            param_value: w[0].param_value,
            d_gap: w[1].d_star - w[0].d_star,
            profit_gap: w[1].profit - w[0].profit,
        })
        .collect();

    let verdicts = Regime::ALL
        .into_iter()
        .map(|regime| {
            let active: Vec<&SweepPoint> = points.iter().filter(|x| x.regime == regime && x.active).collect();
            RegimeVerdict {
                regime,
                active_points: active.len(),
                excluded_points: grid.len() - active.len(),
                d_star: monotonicity(active.iter().map(|x| x.d_star)),
                profit: monotonicity(active.iter().map(|x| x.profit)),
                max_relative_error: active
                    .iter()
                    .map(|x| relative_error(x.envelope_deriv, x.fd_deriv))
                    .fold(0.0, f64::max),
            }
        })
        .collect();

    Ok(ComparativeReport { model, parameter: param, points, deltas, verdicts })
}

/// `n` evenly spaced points `lo, ..., hi`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommissionCurve {
    pub model: ModelKind,
    pub betas: Vec<f64>,
    pub profits: Vec<f64>,
    pub active: Vec<bool>,
    pub beta_star: f64,
    pub argmax_index: usize,
    /// Strict decrease between every pair of consecutive active points.
    pub strictly_decreasing_when_active: bool,
    /// No point exceeds its predecessor anywhere on the curve.
    pub non_increasing: bool,
}

/// Branded optimal value over `β = i / n`, `i = 0..n`. Argmax ties go to the
/// lowest commission.
pub fn optimal_commission(p: &ModelParams, model: ModelKind, n: usize, opts: &SolverOptions) -> Result<CommissionCurve> {
    if n == 0 {
        return Err(Error::InvalidSweep("commission grid needs at least one point".into()));
    }
    let betas: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    let solved: Vec<OptimalPoint> = betas
        .par_iter()
        .map(|&b| optimal_point(&Parameter::Beta.with(p, b), model, Regime::Branded, opts))
        .collect::<Result<_>>()?;
    let profits: Vec<f64> = solved.iter().map(|o| o.value).collect();
    let active: Vec<bool> = solved.iter().map(|o| o.active).collect();
    let mut argmax_index = 0;
    for (i, v) in profits.iter().enumerate() {
        if *v > profits[argmax_index] {
            argmax_index = i;
        }
    }
    let strictly_decreasing_when_active =
        (1..n).filter(|&i| active[i - 1] && active[i]).all(|i| profits[i] < profits[i - 1]);
    let non_increasing = profits.windows(2).all(|w| w[1] <= w[0]);
    Ok(CommissionCurve {
        model,
        beta_star: betas[argmax_index],
        betas,
        profits,
        active,
        argmax_index,
        strictly_decreasing_when_active,
        non_increasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonSide {
    pub regime: Regime,
    pub point: OptimalPoint,
    /// Two-period planner's durability minus `d_star`.
    pub sustainability_gap: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeComparison {
    pub model: ModelKind,
    pub third_party: ComparisonSide,
    pub branded: ComparisonSide,
    pub d_social: Option<f64>,
    pub both_active: bool,
    pub d_gap: f64,
    pub value_gap: f64,
    pub welfare_gap: Option<f64>,
}

/// Branded minus third-party outcomes in one model.
pub fn regime_comparison(p: &ModelParams, model: ModelKind, opts: &SolverOptions) -> Result<RegimeComparison> {
    let d_social = match model {
        ModelKind::TwoPeriod => Some(two_period::social_optimal_durability(p, opts)?),
        ModelKind::Olg => None,
    };
    let side = |regime| -> Result<ComparisonSide> {
        let point = optimal_point(p, model, regime, opts)?;
        Ok(ComparisonSide { regime, point, sustainability_gap: d_social.map(|s| s - point.d_star) })
    };
    let (t, b) = (side(Regime::ThirdParty)?, side(Regime::Branded)?);
    Ok(RegimeComparison {
        model,
        both_active: t.point.active && b.point.active,
        d_gap: b.point.d_star - t.point.d_star,
        value_gap: b.point.value - t.point.value,
        welfare_gap: b.point.welfare.zip(t.point.welfare).map(|(wb, wt)| wb - wt),
        third_party: t,
        branded: b,
        d_social,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon() -> ModelParams {
        ModelParams::canonical()
    }

    fn olg_reference() -> ModelParams {
        ModelParams { alpha: 0.95, beta: 0.05, delta: 0.5, ..canon() }
    }

    #[test]
    fn envelope_matches_re_solved_differences_two_period() {
        let opts = SolverOptions::default();
        let p = canon();
        for regime in Regime::ALL {
            let d = optimal_point(&p, ModelKind::TwoPeriod, regime, &opts).unwrap().d_star;
            for param in [Parameter::Alpha, Parameter::Beta, Parameter::Delta] {
                let a = envelope_derivative(&p, ModelKind::TwoPeriod, regime, param, d);
                let f = finite_difference(&p, ModelKind::TwoPeriod, regime, param, FD_STEP, &opts).unwrap();
                assert!(relative_error(a, f) < 1e-4, "{regime} {param}: {a} vs {f}");
            }
        }
    }

    #[test]
    fn envelope_matches_re_solved_differences_olg() {
        let opts = SolverOptions::default();
        let p = olg_reference();
        for regime in Regime::ALL {
            let d = optimal_point(&p, ModelKind::Olg, regime, &opts).unwrap().d_star;
            assert!(d > 0.0);
            for param in [Parameter::Alpha, Parameter::Beta, Parameter::Delta] {
                let a = envelope_derivative(&p, ModelKind::Olg, regime, param, d);
                let f = finite_difference(&p, ModelKind::Olg, regime, param, FD_STEP, &opts).unwrap();
                assert!(relative_error(a, f) < 1e-4, "{regime} {param}: {a} vs {f}");
            }
        }
    }

    #[test]
    fn third_party_beta_sensitivity_is_twice_branded_at_same_durability() {
        let p = canon();
        let t = envelope_derivative(&p, ModelKind::TwoPeriod, Regime::ThirdParty, Parameter::Beta, 0.1);
        let b = envelope_derivative(&p, ModelKind::TwoPeriod, Regime::Branded, Parameter::Beta, 0.1);
        assert!((t - 2.0 * b).abs() < 1e-15);
        assert_eq!(envelope_derivative(&p, ModelKind::TwoPeriod, Regime::Branded, Parameter::Beta, 0.0), 0.0);
    }

    #[test]
    fn alpha_derivatives_coincide_without_commission() {
        let p = ModelParams { beta: 0.0, ..canon() };
        for model in [ModelKind::TwoPeriod, ModelKind::Olg] {
            let t = envelope_derivative(&p, model, Regime::ThirdParty, Parameter::Alpha, 0.2);
            let b = envelope_derivative(&p, model, Regime::Branded, Parameter::Alpha, 0.2);
            assert_eq!(t, b);
        }
    }

    #[test]
    fn one_sided_difference_at_zero_commission() {
        let opts = SolverOptions::default();
        let p = ModelParams { beta: 0.0, ..canon() };
        let d = optimal_point(&p, ModelKind::TwoPeriod, Regime::Branded, &opts).unwrap().d_star;
        let a = envelope_derivative(&p, ModelKind::TwoPeriod, Regime::Branded, Parameter::Beta, d);
        let f = finite_difference(&p, ModelKind::TwoPeriod, Regime::Branded, Parameter::Beta, FD_STEP, &opts).unwrap();
        assert!(relative_error(a, f) < 1e-4, "{a} vs {f}");
    }

    #[test]
    fn alpha_sweep_is_increasing_in_both_regimes() {
        let opts = SolverOptions::default();
        let grid = linspace(0.75, 1.0, 26);
        let r = monotonicity_sweep(&canon(), ModelKind::TwoPeriod, Parameter::Alpha, &grid, &opts).unwrap();
        assert_eq!(r.points.len(), 52);
        assert!(r.claims_hold(), "{:?}", r.verdicts);
        for v in &r.verdicts {
            assert_eq!(v.d_star, Monotonicity::StrictlyIncreasing);
            assert!(v.max_relative_error < 1e-4);
        }
    }

    #[test]
    fn beta_sweep_crossing_threshold_reports_shutdown() {
        let opts = SolverOptions::default();
        // Third-party activity needs 1.44 (1 - β) > 1, i.e. β < 0.3056.
        let grid = linspace(0.0, 0.5, 11);
        let r = monotonicity_sweep(&canon(), ModelKind::TwoPeriod, Parameter::Beta, &grid, &opts).unwrap();
        let t: Vec<_> = r.points.iter().filter(|x| x.regime == Regime::ThirdParty).collect();
        assert!(t[6].active && !t[7].active);
        assert_eq!(t[7].market_mode, "Shutdown");
        assert_eq!(r.verdicts[0].excluded_points, 4);
        assert!(r.claims_hold());
    }

    #[test]
    fn single_point_sweep_is_not_applicable() {
        let r = monotonicity_sweep(&canon(), ModelKind::TwoPeriod, Parameter::Delta, &[0.9], &SolverOptions::default())
            .unwrap();
        assert!(r.verdicts.iter().all(|v| v.d_star == Monotonicity::NotApplicable));
    }

    #[test]
    fn sweep_rejects_out_of_range_values() {
        let e = monotonicity_sweep(&canon(), ModelKind::TwoPeriod, Parameter::Beta, &[-0.1], &SolverOptions::default());
        assert!(matches!(e, Err(Error::InvalidSweep(_))));
        assert!(monotonicity_sweep(&canon(), ModelKind::TwoPeriod, Parameter::Beta, &[], &SolverOptions::default()).is_err());
    }

    #[test]
    fn canonical_commission_optimum_is_zero() {
        let opts = SolverOptions::default();
        let c = optimal_commission(&canon(), ModelKind::TwoPeriod, 1001, &opts).unwrap();
        assert_eq!(c.argmax_index, 0);
        assert_eq!(c.beta_star, 0.0);
        assert!(c.strictly_decreasing_when_active && c.non_increasing);
        // Branded activity needs 0.72 (2 - β) > 1, so it shuts down past β ≈ 0.611.
        let last = *c.profits.last().unwrap();
        assert_eq!(last, (1.0 + 0.9) * 0.3);
        assert!(!c.active[700] && c.active[600]);
    }

    #[test]
    fn olg_commission_optimum_is_zero() {
        let c = optimal_commission(&olg_reference(), ModelKind::Olg, 1001, &SolverOptions::default()).unwrap();
        assert_eq!(c.beta_star, 0.0);
        assert!(c.strictly_decreasing_when_active && c.non_increasing);
    }

    #[test]
    fn canonical_regime_gap() {
        let r = regime_comparison(&canon(), ModelKind::TwoPeriod, &SolverOptions::default()).unwrap();
        assert!(r.both_active);
        assert!((r.d_gap - 0.0565).abs() < 2e-3);
        assert!(r.value_gap > 0.0);
        assert!(r.welfare_gap.unwrap() > 0.0);
        assert!(r.branded.sustainability_gap.unwrap() < r.third_party.sustainability_gap.unwrap());
    }

    #[test]
    fn perfect_information_without_commission_has_no_regime_gap() {
        let p = ModelParams { alpha: 1.0, beta: 0.0, ..canon() };
        let r = regime_comparison(&p, ModelKind::TwoPeriod, &SolverOptions::default()).unwrap();
        assert_eq!((r.d_gap, r.value_gap, r.welfare_gap), (0.0, 0.0, Some(0.0)));
    }
}
