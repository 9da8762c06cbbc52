//! Two-period model: planner benchmark, activity thresholds, profit-maximizing
//! durability, screening prices, profits and welfare.
//!
//! In the active pre-owned marketplace outcome high types buy new in both
//! periods and resell in period 2, and low types buy the used units in
//! period 2. The period-2 menu is priced so that the low type's
//! participation constraint and the high type's resell-and-replace
//! incentive constraint bind.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::primitives::{ModelParams, Regime, SolverOptions};
use crate::roots::bisect_increasing;

const BRACKET_LO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Activity {
    Active,
    Shutdown,
}

/// Durability margin `M` of the regime: `2a(1-b)v_L - v_H` for a third-party
/// marketplace, `a(2-b)v_L - v_H` under branded recommerce.
pub fn activity_margin(p: &ModelParams, regime: Regime) -> f64 {
    match regime {
        Regime::ThirdParty => 2.0 * p.alpha * (1.0 - p.beta) * p.v_l - p.v_h,
        Regime::Branded => p.alpha * (2.0 - p.beta) * p.v_l - p.v_h,
    }
}

/// A zero margin is classified as shutdown: D* = 0 and both outcomes earn the
/// same profit.
pub fn activity_threshold(p: &ModelParams, regime: Regime) -> Activity {
    if activity_margin(p, regime) > 0.0 {
        Activity::Active
    } else {
        Activity::Shutdown
    }
}

/// Root of `c'(D) = k s'(D)` on `[BRACKET_LO, d_max]` for `k > 0`.
pub(crate) fn foc_root(p: &ModelParams, k: f64, opts: &SolverOptions) -> Result<f64> {
    bisect_increasing(
        |d| p.cost.slope(d) - k * p.quality.slope(d),
        BRACKET_LO,
        opts.d_max,
        opts.d_tol,
    )
}

/// Planner durability `D**`: `c'(D) = [delta/(1+delta)] v_L s'(D)`.
pub fn social_optimal_durability(p: &ModelParams, opts: &SolverOptions) -> Result<f64> {
    foc_root(p, p.delta / (1.0 + p.delta) * p.v_l, opts)
}

/// Profit-maximizing durability: `c'(D) = [delta/(1+delta)] M s'(D)`.
pub fn optimal_durability(p: &ModelParams, regime: Regime, opts: &SolverOptions) -> Result<f64> {
    let margin = activity_margin(p, regime);
    if margin <= 0.0 {
        return Err(Error::InactiveRegime { regime, margin });
    }
    foc_root(p, p.delta / (1.0 + p.delta) * margin, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prices {
    pub p1n: f64,
    pub p2n: f64,
    pub p2u: f64,
}

/// Period-2 (new, used) prices at used quality `s`. Shared with the
/// overlapping-generations steady state.
#[inline]
pub(crate) fn period_two_prices(p: &ModelParams, s: f64) -> (f64, f64) {
    let p_u = p.alpha * p.v_l * s;
    let p_n = p.alpha * (1.0 - p.beta) * p.v_l * s + p.v_h * (1.0 - s);
    (p_n, p_u)
}

/// Screening prices at durability `d`; identical under both regimes.
pub fn prices(p: &ModelParams, d: f64) -> Prices {
    debug_assert!(d >= 0.0);
    let s = p.s(d);
    let (p2n, p2u) = period_two_prices(p, s);
    Prices { p1n: p.v_h + p.delta * (1.0 - p.beta) * p2u, p2n, p2u }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfitBreakdown {
    /// `period1 + delta * period2`.
    pub total: f64,
    pub period1: f64,
    /// Undiscounted period-2 profit, commission included when the firm runs
    /// the marketplace.
    pub period2: f64,
    /// Period-2 commission collected by the firm (zero for a third-party
    /// marketplace).
    pub commission_revenue: f64,
}

/// Ex-ante profit of the active outcome at durability `d`.
pub fn profit(p: &ModelParams, regime: Regime, d: f64) -> ProfitBreakdown {
    let c = p.c(d);
    let pr = prices(p, d);
    let period1 = p.n_h * (pr.p1n - c);
    let commission_revenue =
        if regime.firm_collects_commission() { p.n_h * p.beta * pr.p2u } else { 0.0 };
    let period2 = p.n_h * (pr.p2n - c) + commission_revenue;
    ProfitBreakdown { total: period1 + p.delta * period2, period1, period2, commission_revenue }
}

/// Profit from D = 0, price `v_H` in both periods, low types excluded.
pub fn shutdown_profit(p: &ModelParams) -> f64 {
    (1.0 + p.delta) * p.n_h * p.v_h
}

/// Total surplus of the active allocation at durability `d`.
pub fn welfare(p: &ModelParams, d: f64) -> f64 {
    (1.0 + p.delta) * p.n_h * p.v_h + p.delta * p.n_h * p.v_l * p.s(d)
        - (1.0 + p.delta) * p.n_h * p.c(d)
}

/// Signed slack of one inequality `lhs >= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slack {
    pub slack: f64,
    pub holds: bool,
}

impl Slack {
    pub(crate) fn new(lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = lhs - rhs;
        Slack { slack, holds: slack >= -tol }
    }

    pub fn binds(&self, tol: f64) -> bool {
        self.slack.abs() <= tol
    }
}

/// Period-2 incentive and participation conditions, plus period-1
/// participation of the high type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintReport {
    /// High type prefers resell-and-replace over keeping the used unit.
    pub high_ic: Slack,
    /// Low type prefers a used unit over a new one.
    pub low_ic: Slack,
    pub high_ir: Slack,
    pub low_ir: Slack,
    /// High type is willing to pay `p1n` in period 1 given resale.
    pub high_ir_period1: Slack,
}

impl ConstraintReport {
    pub fn all_hold(&self) -> bool {
        self.iter().all(|(_, s)| s.holds)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, Slack)> {
        [
            ("high_ic", self.high_ic),
            ("low_ic", self.low_ic),
            ("high_ir", self.high_ir),
            ("low_ir", self.low_ir),
            ("high_ir_period1", self.high_ir_period1),
        ]
        .into_iter()
    }
}

pub fn check_constraints(p: &ModelParams, d: f64, pr: &Prices, tol: f64) -> ConstraintReport {
    let s = p.s(d);
    let resale = (1.0 - p.beta) * pr.p2u;
    ConstraintReport {
        high_ic: Slack::new(p.v_h - pr.p2n + resale, p.v_h * s, tol),
        low_ic: Slack::new(p.alpha * p.v_l * s - pr.p2u, p.v_l - pr.p2n, tol),
        high_ir: Slack::new(p.v_h - pr.p2n, 0.0, tol),
        low_ir: Slack::new(p.alpha * p.v_l * s - pr.p2u, 0.0, tol),
        high_ir_period1: Slack::new(p.v_h + p.delta * resale - pr.p1n, 0.0, tol),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MarketMode {
    /// High types resell to low types; every IC/IR condition holds.
    ActivePreOwned,
    /// D = 0, both prices at `v_H`, low types excluded.
    Shutdown,
    /// The regime threshold passes but at D* low types would rather buy new
    /// at `p2n` than used; the screening outcome is not an equilibrium.
    LowTypeDeviates,
}

impl std::fmt::Display for MarketMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MarketMode::ActivePreOwned => "ActivePreOwned",
            MarketMode::Shutdown => "Shutdown",
            MarketMode::LowTypeDeviates => "LowTypeDeviates",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPeriodEquilibrium {
    pub regime: Regime,
    pub market_mode: MarketMode,
    pub margin: f64,
    pub d_star: f64,
    pub d_social: f64,
    pub sustainability_gap: f64,
    pub p1n: f64,
    pub p2n: f64,
    /// Absent under shutdown: no used units are traded.
    pub p2u: Option<f64>,
    pub profit_total: f64,
    pub profit_period1: f64,
    pub profit_period2: f64,
    pub commission_revenue: f64,
    pub welfare: f64,
    /// Profit of the D = 0 outcome, computed for every regime.
    pub shutdown_profit: f64,
    /// The threshold holds with equality; classified as shutdown.
    pub threshold_tie: bool,
    #[serde(skip)]
    pub constraints: Option<ConstraintReport>,
}

/// Full equilibrium for one regime.
pub fn solve(p: &ModelParams, regime: Regime, opts: &SolverOptions) -> Result<TwoPeriodEquilibrium> {
    crate::primitives::validate_params(p, crate::primitives::ModelKind::TwoPeriod, opts)
        .into_result()?;
    let margin = activity_margin(p, regime);
    let d_social = social_optimal_durability(p, opts)?;
    let shutdown = shutdown_profit(p);

    if activity_threshold(p, regime) == Activity::Shutdown {
        return Ok(TwoPeriodEquilibrium {
            regime,
            market_mode: MarketMode::Shutdown,
            margin,
            d_star: 0.0,
            d_social,
            sustainability_gap: d_social,
            p1n: p.v_h,
            p2n: p.v_h,
            p2u: None,
            profit_total: shutdown,
            profit_period1: p.n_h * p.v_h,
            profit_period2: p.n_h * p.v_h,
            commission_revenue: 0.0,
            welfare: welfare(p, 0.0),
            shutdown_profit: shutdown,
            threshold_tie: margin == 0.0,
            constraints: None,
        });
    }

    let d_star = optimal_durability(p, regime, opts)?;
    let pr = prices(p, d_star);
    let pi = profit(p, regime, d_star);
    let constraints = check_constraints(p, d_star, &pr, opts.constraint_tol);
    let market_mode = if constraints.all_hold() {
        MarketMode::ActivePreOwned
    } else {
        MarketMode::LowTypeDeviates
    };
    Ok(TwoPeriodEquilibrium {
        regime,
        market_mode,
        margin,
        d_star,
        d_social,
        sustainability_gap: d_social - d_star,
        p1n: pr.p1n,
        p2n: pr.p2n,
        p2u: Some(pr.p2u),
        profit_total: pi.total,
        profit_period1: pi.period1,
        profit_period2: pi.period2,
        commission_revenue: pi.commission_revenue,
        welfare: welfare(p, d_star),
        shutdown_profit: shutdown,
        threshold_tie: false,
        constraints: Some(constraints),
    })
}
