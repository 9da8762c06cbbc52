//! Infinite-horizon model with overlapping two-period-lived generations.
//!
//! The payoff-relevant state is the fraction of age-2 customers who bought
//! new in the previous period, `x ∈ {0, n_H, 1}`. Each (type, age) cell picks
//! from a three-action menu that depends on the state; a stationary policy is
//! a state plus an action profile that reproduces the state, clears the used
//! market, is a best response for every cell at the candidate prices, and is
//! not dominated by a zero-durability strategy.

use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::primitives::{validate_params, ModelKind, ModelParams, Regime, SolverOptions};
use crate::roots::bisect_increasing;
use crate::two_period::{foc_root, period_two_prices, Slack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OlgState {
    /// `x = 0`
    Empty,
    /// `x = n_H`
    HighOnly,
    /// `x = 1`
    All,
}

impl OlgState {
    pub const ALL: [OlgState; 3] = [OlgState::Empty, OlgState::HighOnly, OlgState::All];

    pub fn x(self, p: &ModelParams) -> f64 {
        match self {
            OlgState::Empty => 0.0,
            OlgState::HighOnly => p.n_h,
            OlgState::All => 1.0,
        }
    }
}

impl fmt::Display for OlgState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OlgState::Empty => "x=0",
            OlgState::HighOnly => "x=n_H",
            OlgState::All => "x=1",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CustomerType {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Age {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Action {
    BuyNew,
    BuyUsed,
    DoNothing,
    SellUsedBuyNew,
    KeepUsed,
}

impl Action {
    pub fn purchases_new(self) -> bool {
        matches!(self, Action::BuyNew | Action::SellUsedBuyNew)
    }

    pub fn label(self) -> &'static str {
        match self {
            Action::BuyNew => "buy-new",
            Action::BuyUsed => "buy-used",
            Action::DoNothing => "do-nothing",
            Action::SellUsedBuyNew => "sell-used+buy-new",
            Action::KeepUsed => "keep-used",
        }
    }
}

/// One (type, age) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Cell {
    pub ty: CustomerType,
    pub age: Age,
}

impl Cell {
    /// Display order: L age 2, H age 2, L age 1, H age 1.
    pub const ALL: [Cell; 4] = [
        Cell { ty: CustomerType::Low, age: Age::Two },
        Cell { ty: CustomerType::High, age: Age::Two },
        Cell { ty: CustomerType::Low, age: Age::One },
        Cell { ty: CustomerType::High, age: Age::One },
    ];

    pub fn mass(self, p: &ModelParams) -> f64 {
        match self.ty {
            CustomerType::Low => p.n_l,
            CustomerType::High => p.n_h,
        }
    }

    pub fn valuation(self, p: &ModelParams) -> f64 {
        match self.ty {
            CustomerType::Low => p.v_l,
            CustomerType::High => p.v_h,
        }
    }

    /// Whether this cell enters the period holding a one-period-old unit.
    pub fn owns_used(self, state: OlgState) -> bool {
        self.age == Age::Two
            && match state {
                OlgState::Empty => false,
                OlgState::HighOnly => self.ty == CustomerType::High,
                OlgState::All => true,
            }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = match self.ty {
            CustomerType::Low => 'L',
            CustomerType::High => 'H',
        };
        let a = match self.age {
            Age::One => 1,
            Age::Two => 2,
        };
        write!(f, "{t}{a}")
    }
}

const BUYER_MENU: [Action; 3] = [Action::BuyNew, Action::BuyUsed, Action::DoNothing];
const OWNER_MENU: [Action; 3] = [Action::SellUsedBuyNew, Action::BuyNew, Action::KeepUsed];

/// Menu of a cell in a given state.
pub fn menu(state: OlgState, cell: Cell) -> [Action; 3] {
    match state {
        OlgState::Empty => BUYER_MENU,
        OlgState::HighOnly => {
            if cell.ty == CustomerType::High && cell.age == Age::Two {
                OWNER_MENU
            } else {
                BUYER_MENU
            }
        }
        OlgState::All => OWNER_MENU,
    }
}

/// One action per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ActionProfile {
    pub low_age2: Action,
    pub high_age2: Action,
    pub low_age1: Action,
    pub high_age1: Action,
}

impl ActionProfile {
    /// The active-marketplace profile: high types buy new at age 1 and
    /// resell-and-replace at age 2; low types of both ages buy used.
    pub const fn active_marketplace() -> Self {
        ActionProfile {
            low_age2: Action::BuyUsed,
            high_age2: Action::SellUsedBuyNew,
            low_age1: Action::BuyUsed,
            high_age1: Action::BuyNew,
        }
    }

    pub fn get(&self, cell: Cell) -> Action {
        match (cell.ty, cell.age) {
            (CustomerType::Low, Age::Two) => self.low_age2,
            (CustomerType::High, Age::Two) => self.high_age2,
            (CustomerType::Low, Age::One) => self.low_age1,
            (CustomerType::High, Age::One) => self.high_age1,
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (Cell, Action)> + '_ {
        Cell::ALL.into_iter().map(|c| (c, self.get(c)))
    }
}

impl fmt::Display for ActionProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (cell, a) in self.cells() {
            if !first {
                f.write_str(";")?;
            }
            first = false;
            write!(f, "{cell}={}", a.label())?;
        }
        Ok(())
    }
}

/// Cartesian product of the four menus of `state` (81 profiles).
pub fn enumerate_profiles(state: OlgState) -> Vec<ActionProfile> {
    let [l2, h2, l1, h1] = Cell::ALL.map(|c| menu(state, c));
    let mut out = Vec::with_capacity(81);
    for &low_age2 in &l2 {
        for &high_age2 in &h2 {
            for &low_age1 in &l1 {
                for &high_age1 in &h1 {
                    out.push(ActionProfile { low_age2, high_age2, low_age1, high_age1 });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyPrices {
    pub p_n: f64,
    pub p_u: f64,
}

/// Candidate stationary prices: used units at the buyers' reservation value,
/// new units at the highest price that keeps age-2 high types replacing.
pub fn steady_state_prices(p: &ModelParams, d: f64) -> SteadyPrices {
    let (p_n, p_u) = period_two_prices(p, p.s(d));
    SteadyPrices { p_n, p_u }
}

/// Incentive and participation conditions of the active-marketplace profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OlgConstraints {
    /// High type, age 2: resell-and-replace over keeping.
    pub high_resell_over_keep: Slack,
    /// High type, age 1: buy new over buy used.
    pub high_new_over_used: Slack,
    /// Low type, both ages: participation.
    pub low_used_participation: Slack,
    /// Low type, age 1: buy used over buy new.
    pub young_low_used_over_new: Slack,
    /// Low type, age 2: buy used over buy new.
    pub old_low_used_over_new: Slack,
    /// `v_L/v_H <= (1 - s) / (1 - [(1-b)a - delta] s)`, slack as rhs - lhs.
    pub young_low_ratio: Slack,
}

impl OlgConstraints {
    pub fn all_hold(&self) -> bool {
        self.iter().all(|(_, s)| s.holds)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, Slack)> {
        [
            ("high_resell_over_keep", self.high_resell_over_keep),
            ("high_new_over_used", self.high_new_over_used),
            ("low_used_participation", self.low_used_participation),
            ("young_low_used_over_new", self.young_low_used_over_new),
            ("old_low_used_over_new", self.old_low_used_over_new),
            ("young_low_ratio", self.young_low_ratio),
        ]
        .into_iter()
    }
}

/// Right-hand side of the ratio condition at quality `s`.
pub fn young_low_ratio_bound(p: &ModelParams, s: f64) -> f64 {
    (1.0 - s) / (1.0 - ((1.0 - p.beta) * p.alpha - p.delta) * s)
}

/// Evaluates every condition at arbitrary prices.
pub fn constraint_set(p: &ModelParams, d: f64, pr: &SteadyPrices, tol: f64) -> OlgConstraints {
    let s = p.s(d);
    let (v_h, v_l) = (p.v_h, p.v_l);
    let resale = (1.0 - p.beta) * pr.p_u;
    let h_cont = (v_h - pr.p_n + resale).max(v_h * s);
    let l_cont = (v_l - pr.p_n + resale).max(v_l * s);
    let l_used = p.alpha * v_l * s - pr.p_u;
    OlgConstraints {
        high_resell_over_keep: Slack::new(v_h - pr.p_n + resale, v_h * s, tol),
        high_new_over_used: Slack::new(v_h - pr.p_n + p.delta * h_cont, v_h * s - pr.p_u, tol),
        low_used_participation: Slack::new(l_used, 0.0, tol),
        young_low_used_over_new: Slack::new(l_used, v_l - pr.p_n + p.delta * l_cont, tol),
        old_low_used_over_new: Slack::new(l_used, v_l - pr.p_n, tol),
        young_low_ratio: Slack::new(young_low_ratio_bound(p, s), v_l / v_h, tol),
    }
}

/// Used-market volumes implied by a profile (masses per period).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UsedMarket {
    pub supply: f64,
    pub demand: f64,
    /// Share of used-good buyers who are served; 1 when demand is zero.
    pub rationed_fraction: f64,
}

impl UsedMarket {
    pub fn of(p: &ModelParams, profile: &ActionProfile) -> Self {
        let mut supply = 0.0;
        let mut demand = 0.0;
        for (cell, a) in profile.cells() {
            match a {
                Action::SellUsedBuyNew => supply += cell.mass(p),
                Action::BuyUsed => demand += cell.mass(p),
                _ => {}
            }
        }
        let rationed_fraction = if demand > 0.0 { (supply / demand).min(1.0) } else { 1.0 };
        UsedMarket { supply, demand, rationed_fraction }
    }

    pub fn has_trade(&self) -> bool {
        self.supply > 0.0 || self.demand > 0.0
    }

    /// Supply is fully absorbed at the buyers' reservation price.
    pub fn clears(&self) -> bool {
        (self.supply == 0.0 && self.demand == 0.0) || (self.supply > 0.0 && self.demand >= self.supply)
    }
}

/// A cell's prescribed action is beaten by an alternative from its menu.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub cell: Cell,
    pub prescribed: Action,
    pub alternative: Action,
    pub gain: f64,
}

/// Remaining-lifetime surplus of `action` for `cell`, or `None` when the
/// action is unavailable (selling or keeping without a unit, buying used
/// with no supply, selling with no buyers).
fn lifetime_surplus(
    p: &ModelParams,
    s: f64,
    pr: &SteadyPrices,
    market: &UsedMarket,
    state: OlgState,
    cell: Cell,
    action: Action,
) -> Option<f64> {
    let v = cell.valuation(p);
    let owner = cell.owns_used(state);
    let supply = market.supply > 0.0;
    let demand = market.demand > 0.0;
    let resale = (1.0 - p.beta) * pr.p_u;
    let used_value = p.alpha * v * s - pr.p_u;

    // Age-2 payoffs; an age-1 agent discounts the best of them by delta.
    let owner_next = {
        let mut best = (v - pr.p_n).max(v * s);
        if demand {
            best = best.max(v - pr.p_n + resale);
        }
        best
    };
    let buyer_next = {
        let mut best = (v - pr.p_n).max(0.0);
        if supply {
            best = best.max(used_value);
        }
        best
    };

    match (cell.age, action) {
        (_, Action::BuyUsed) if !supply => None,
        (_, Action::SellUsedBuyNew) if !(owner && demand) => None,
        (_, Action::KeepUsed) if !owner => None,
        (Age::Two, Action::BuyNew) => Some(v - pr.p_n),
        (Age::Two, Action::BuyUsed) => Some(used_value),
        (Age::Two, Action::DoNothing) => Some(0.0),
        (Age::Two, Action::SellUsedBuyNew) => Some(v - pr.p_n + resale),
        (Age::Two, Action::KeepUsed) => Some(v * s),
        (Age::One, Action::BuyNew) => Some(v - pr.p_n + p.delta * owner_next),
        (Age::One, Action::BuyUsed) => Some(used_value + p.delta * buyer_next),
        (Age::One, Action::DoNothing) => Some(p.delta * buyer_next),
        (Age::One, Action::SellUsedBuyNew | Action::KeepUsed) => None,
    }
}

fn best_response_deviations(
    p: &ModelParams,
    d: f64,
    pr: &SteadyPrices,
    market: &UsedMarket,
    state: OlgState,
    profile: &ActionProfile,
    tol: f64,
) -> Vec<Deviation> {
    let s = p.s(d);
    let mut out = Vec::new();
    for (cell, prescribed) in profile.cells() {
        let Some(own) = lifetime_surplus(p, s, pr, market, state, cell, prescribed) else {
            continue; // infeasible actions are reported separately
        };
        for alt in menu(state, cell) {
            if alt == prescribed {
                continue;
            }
            let Some(other) = lifetime_surplus(p, s, pr, market, state, cell, alt) else {
                continue;
            };
            let gain = other - own;
            // An indifferent consumer participates rather than abstains.
            let beats = gain > tol || (prescribed == Action::DoNothing && gain >= -tol);
            if beats {
                out.push(Deviation { cell, prescribed, alternative: alt, gain });
            }
        }
    }
    out
}

/// Full evaluation of one (state, profile) candidate at durability `d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub state: OlgState,
    pub profile: ActionProfile,
    pub prices: SteadyPrices,
    /// No cell sells or keeps a unit it does not own.
    pub actions_feasible: bool,
    /// Age-1 new purchases reproduce the state next period.
    pub state_consistent: bool,
    pub used_market: UsedMarket,
    pub market_clears: bool,
    pub constraints: OlgConstraints,
    pub best_response: bool,
    pub deviations: Vec<Deviation>,
    /// Upper bound on the stationary profit of a profile without used trade.
    pub no_trade_profit_bound: Option<f64>,
    /// Best zero-durability benchmark: `max(2 n_H v_H, 2 v_L)`.
    pub zero_durability_benchmark: f64,
    pub dominated: bool,
}

impl FeasibilityReport {
    pub fn is_steady_state(&self) -> bool {
        self.actions_feasible
            && self.state_consistent
            && self.market_clears
            && self.constraints.all_hold()
            && self.best_response
            && !self.dominated
    }
}

fn next_state(profile: &ActionProfile) -> Option<OlgState> {
    match (profile.high_age1.purchases_new(), profile.low_age1.purchases_new()) {
        (false, false) => Some(OlgState::Empty),
        (true, false) => Some(OlgState::HighOnly),
        (true, true) => Some(OlgState::All),
        (false, true) => None,
    }
}

/// Zero-durability alternatives: everyone alive at `v_L`, or both high-type
/// cohorts at `v_H`.
pub fn zero_durability_benchmark(p: &ModelParams) -> f64 {
    (2.0 * p.n_h * p.v_h).max(2.0 * (p.n_h + p.n_l) * p.v_l)
}

/// Evaluates a candidate steady state at the candidate prices. Never aborts;
/// each failed requirement is recorded in the report.
pub fn check_steady_state(
    p: &ModelParams,
    d: f64,
    state: OlgState,
    profile: &ActionProfile,
    opts: &SolverOptions,
) -> FeasibilityReport {
    let tol = opts.constraint_tol;
    let s = p.s(d);
    let prices = steady_state_prices(p, d);
    let actions_feasible = profile.cells().all(|(cell, a)| match a {
        Action::SellUsedBuyNew | Action::KeepUsed => cell.owns_used(state),
        _ => true,
    });
    let state_consistent = actions_feasible && next_state(profile) == Some(state);
    let used_market = UsedMarket::of(p, profile);
    let constraints = constraint_set(p, d, &prices, tol);
    let deviations = best_response_deviations(p, d, &prices, &used_market, state, profile, tol);

    let benchmark = zero_durability_benchmark(p);
    let no_trade_profit_bound = (!used_market.has_trade()).then(|| {
        let mut mass = 0.0;
        let mut price_cap = f64::INFINITY;
        for (cell, a) in profile.cells() {
            if a.purchases_new() {
                mass += cell.mass(p);
                let v = cell.valuation(p);
                let wtp = match cell.age {
                    Age::Two => v,
                    Age::One => v * (1.0 + p.delta * s),
                };
                price_cap = price_cap.min(wtp);
            }
        }
        if mass > 0.0 {
            mass * (price_cap - p.c(d))
        } else {
            0.0
        }
    });
    let dominated = no_trade_profit_bound.is_some_and(|b| b < benchmark);

    FeasibilityReport {
        state,
        profile: *profile,
        prices,
        actions_feasible,
        state_consistent,
        market_clears: used_market.clears(),
        used_market,
        constraints,
        best_response: deviations.is_empty(),
        deviations,
        no_trade_profit_bound,
        zero_durability_benchmark: benchmark,
        dominated,
    }
}

/// All 3 × 81 candidates at durability `d`.
pub fn audit_all_candidates(p: &ModelParams, d: f64, opts: &SolverOptions) -> Vec<FeasibilityReport> {
    OlgState::ALL
        .into_iter()
        .flat_map(|state| {
            enumerate_profiles(state)
                .into_iter()
                .map(move |profile| check_steady_state(p, d, state, &profile, opts))
        })
        .collect()
}

/// Per-period firm payoff split into new-good sales and commission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodProfit {
    pub sales: f64,
    pub commission: f64,
    pub total: f64,
}

pub fn period_profit(p: &ModelParams, regime: Regime, d: f64) -> PeriodProfit {
    let pr = steady_state_prices(p, d);
    let sales = p.n_h * (pr.p_n - p.c(d));
    let commission = if regime.firm_collects_commission() { p.n_h * p.beta * pr.p_u } else { 0.0 };
    PeriodProfit { sales, commission, total: sales + commission }
}

/// `n_H [a(1-b) v_L s + v_H (1-s) - c]` (third-party) or
/// `n_H [a v_L s + v_H (1-s) - c]` (branded).
pub fn per_period_profit(p: &ModelParams, regime: Regime, d: f64) -> f64 {
    period_profit(p, regime, d).total
}

/// `sum_{t>=1} delta^t * per_period_profit`, in closed form.
pub fn discounted_stream(p: &ModelParams, regime: Regime, d: f64) -> f64 {
    p.delta / (1.0 - p.delta) * per_period_profit(p, regime, d)
}

/// Period-1 new-good price: the entering high-type cohort pays its period-1
/// value plus the discounted net resale price.
pub fn first_period_price(p: &ModelParams, d: f64) -> f64 {
    p.v_h + p.delta * p.alpha * (1.0 - p.beta) * p.v_l * p.s(d)
}

/// What the firm maximizes over durability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OlgObjective {
    /// `n_H g1(D) + G(D)`.
    #[default]
    WithFirstPeriod,
    /// `G(D)` alone.
    StreamOnly,
}

pub fn objective_value(p: &ModelParams, regime: Regime, d: f64, obj: OlgObjective) -> f64 {
    let stream = discounted_stream(p, regime, d);
    match obj {
        OlgObjective::WithFirstPeriod => p.n_h * first_period_price(p, d) + stream,
        OlgObjective::StreamOnly => stream,
    }
}

/// Coefficient `M` in the first-order condition `c'(D) = M s'(D)`.
pub fn olg_margin(p: &ModelParams, regime: Regime, obj: OlgObjective) -> f64 {
    let used_coef = match regime {
        Regime::ThirdParty => p.alpha * (1.0 - p.beta),
        Regime::Branded => p.alpha,
    };
    let stream = used_coef * p.v_l - p.v_h;
    match obj {
        OlgObjective::WithFirstPeriod => (1.0 - p.delta) * p.alpha * (1.0 - p.beta) * p.v_l + stream,
        OlgObjective::StreamOnly => stream,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OlgMarketMode {
    /// The active-marketplace profile is a steady state at D*.
    ActivePreOwned,
    /// Non-positive margin: the objective is maximized at D = 0.
    Shutdown,
    /// D* > 0 but the low-type age-1 condition fails there.
    NoActiveSteadyState,
}

impl fmt::Display for OlgMarketMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OlgMarketMode::ActivePreOwned => "ActivePreOwned",
            OlgMarketMode::Shutdown => "Shutdown",
            OlgMarketMode::NoActiveSteadyState => "NoActiveSteadyState",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestFeasible {
    pub d: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateSolution {
    pub regime: Regime,
    pub objective_kind: OlgObjective,
    pub market_mode: OlgMarketMode,
    pub margin: f64,
    pub state: Option<OlgState>,
    pub profile: Option<ActionProfile>,
    pub d_star: f64,
    pub p_n: f64,
    pub p_u: Option<f64>,
    pub per_period_profit: f64,
    pub per_period_sales: f64,
    pub per_period_commission: f64,
    /// Discounted stream from period 1.
    pub g: f64,
    /// `n_H g1(D*)`, earned from the entering cohort with no used stock.
    pub first_period_profit: f64,
    pub objective: f64,
    pub used_market: Option<UsedMarket>,
    pub feasibility: Option<FeasibilityReport>,
    /// Largest durability at which the low-type age-1 condition holds, when
    /// it fails at the unconstrained optimum.
    pub best_feasible: Option<BestFeasible>,
    /// Zero-durability alternatives in the objective's accounting.
    pub d0_high_price: f64,
    pub d0_mass_market: f64,
    pub beats_d0_high_price: bool,
    pub beats_d0_mass_market: bool,
}

fn zero_durability_value(p: &ModelParams, mass: f64, price: f64, obj: OlgObjective) -> f64 {
    let per_period = mass * price;
    let stream = p.delta / (1.0 - p.delta) * per_period;
    match obj {
        OlgObjective::WithFirstPeriod => per_period + stream,
        OlgObjective::StreamOnly => stream,
    }
}

/// Optimal durability under the stationary policy, with the full steady
/// state at the optimum.
pub fn optimal_durability_olg(
    p: &ModelParams,
    regime: Regime,
    obj: OlgObjective,
    opts: &SolverOptions,
) -> Result<SteadyStateSolution> {
    validate_params(p, ModelKind::Olg, opts).into_result()?;
    let margin = olg_margin(p, regime, obj);
    let d0_high_price = zero_durability_value(p, p.n_h, p.v_h, obj);
    let d0_mass_market = zero_durability_value(p, p.n_h + p.n_l, p.v_l, obj);

    if margin <= 0.0 {
        let objective = objective_value(p, regime, 0.0, obj);
        let pp = period_profit(p, regime, 0.0);
        return Ok(SteadyStateSolution {
            regime,
            objective_kind: obj,
            market_mode: OlgMarketMode::Shutdown,
            margin,
            state: None,
            profile: None,
            d_star: 0.0,
            p_n: p.v_h,
            p_u: None,
            per_period_profit: pp.total,
            per_period_sales: pp.sales,
            per_period_commission: pp.commission,
            g: discounted_stream(p, regime, 0.0),
            first_period_profit: p.n_h * first_period_price(p, 0.0),
            objective,
            used_market: None,
            feasibility: None,
            best_feasible: None,
            d0_high_price,
            d0_mass_market,
            beats_d0_high_price: objective >= d0_high_price,
            beats_d0_mass_market: objective >= d0_mass_market,
        });
    }

    let d_star = foc_root(p, margin, opts)?;
    let profile = ActionProfile::active_marketplace();
    let report = check_steady_state(p, d_star, OlgState::HighOnly, &profile, opts);
    let active = report.is_steady_state();
    let best_feasible = if report.constraints.young_low_ratio.holds {
        None
    } else {
        // The ratio bound falls with s, so the feasible set is [0, d_bar].
        let ratio = p.v_l / p.v_h;
        let d_bar = bisect_increasing(
            |d| ratio - young_low_ratio_bound(p, p.s(d)),
            0.0,
            d_star,
            opts.d_tol,
        )
        .unwrap_or(0.0);
        Some(BestFeasible { d: d_bar, objective: objective_value(p, regime, d_bar, obj) })
    };
    let pr = report.prices;
    let pp = period_profit(p, regime, d_star);
    let objective = objective_value(p, regime, d_star, obj);
    Ok(SteadyStateSolution {
        regime,
        objective_kind: obj,
        market_mode: if active {
            OlgMarketMode::ActivePreOwned
        } else {
            OlgMarketMode::NoActiveSteadyState
        },
        margin,
        state: Some(OlgState::HighOnly),
        profile: Some(profile),
        d_star,
        p_n: pr.p_n,
        p_u: Some(pr.p_u),
        per_period_profit: pp.total,
        per_period_sales: pp.sales,
        per_period_commission: pp.commission,
        g: discounted_stream(p, regime, d_star),
        first_period_profit: p.n_h * first_period_price(p, d_star),
        objective,
        used_market: Some(report.used_market),
        feasibility: Some(report),
        best_feasible,
        d0_high_price,
        d0_mass_market,
        beats_d0_high_price: objective >= d0_high_price,
        beats_d0_mass_market: objective >= d0_mass_market,
    })
}

/// Discounted-stream derivatives `(G', G'')` at `d`, from exact derivatives
/// of `c` and `s`.
pub fn stream_derivatives(p: &ModelParams, regime: Regime, d: f64) -> Result<(f64, f64)> {
    let c = p.cost.eval(d)?;
    let s = p.quality.eval(d)?;
    let used_coef = match regime {
        Regime::ThirdParty => p.alpha * (1.0 - p.beta),
        Regime::Branded => p.alpha,
    };
    let k = p.delta / (1.0 - p.delta) * p.n_h;
    let slope = used_coef * p.v_l - p.v_h;
    Ok((k * (slope * s.first - c.first), k * (slope * s.second - c.second)))
}
