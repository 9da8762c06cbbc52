//! Brute-force ground truth. Objectives are rewritten here from their
//! closed forms instead of calling the solvers, so agreement between the two
//! is evidence rather than tautology. Only `c` and `s` are shared.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::olg::{Action, ActionProfile, Age, Cell, CustomerType, OlgState, SteadyPrices};
use crate::primitives::{ModelKind, ModelParams, Regime};

pub const MIN_GRID_POINTS: usize = 1_000;

/// Uniform grid on `[0, d_max]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub d_max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(d_max: f64, points: usize) -> Result<Self> {
        if points < MIN_GRID_POINTS {
            return Err(Error::InvalidGrid(format!("{points} points, need at least {MIN_GRID_POINTS}")));
        }
        if !(d_max.is_finite() && d_max > 0.0) {
            return Err(Error::InvalidGrid(format!("upper bound {d_max} must be positive and finite")));
        }
        Ok(GridSpec { d_max, points })
    }

    pub fn step(&self) -> f64 {
        self.d_max / (self.points - 1) as f64
    }

    pub fn at(&self, i: usize) -> f64 {
        self.d_max * i as f64 / (self.points - 1) as f64
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { d_max: 10.0, points: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridOptimum {
    pub index: usize,
    pub d_hat: f64,
    pub value: f64,
    pub step: f64,
}

const CHUNK: usize = 4096;

/// Exhaustive argmax of `f` over the grid; ties go to the lowest index no
/// matter how the work was split.
pub fn grid_argmax(grid: &GridSpec, f: impl Fn(f64) -> f64 + Sync) -> GridOptimum {
    let (index, value) = (0..grid.points)
        .into_par_iter()
        .with_min_len(CHUNK)
        .map(|i| (i, f(grid.at(i))))
        .reduce(
            || (usize::MAX, f64::NEG_INFINITY),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    GridOptimum { index, d_hat: grid.at(index), value, step: grid.step() }
}

/// Two-period total profit, first period plus discounted second period.
pub fn two_period_profit(p: &ModelParams, regime: Regime, d: f64) -> f64 {
    let (s, c) = (p.s(d), p.c(d));
    let resale = p.alpha * (1.0 - p.beta) * p.v_l * s;
    let first = p.n_h * (p.v_h + p.delta * resale - c);
    let mut second = p.n_h * (resale + p.v_h * (1.0 - s) - c);
    if regime == Regime::Branded {
        second += p.n_h * p.beta * p.alpha * p.v_l * s;
    }
    first + p.delta * second
}

/// Two-period total surplus when the used market operates.
pub fn two_period_welfare(p: &ModelParams, d: f64) -> f64 {
    let (s, c) = (p.s(d), p.c(d));
    p.n_h * ((1.0 + p.delta) * (p.v_h - c) + p.delta * p.v_l * s)
}

/// Infinite-horizon objective: period-1 revenue from the entering high
/// cohort plus the discounted stationary stream.
pub fn olg_objective(p: &ModelParams, regime: Regime, d: f64) -> f64 {
    let s = p.s(d);
    p.n_h * (p.v_h + p.delta * p.alpha * (1.0 - p.beta) * p.v_l * s)
        + p.delta / (1.0 - p.delta) * olg_period_payoff(p, regime, d)
}

fn olg_period_payoff(p: &ModelParams, regime: Regime, d: f64) -> f64 {
    let s = p.s(d);
    let used = match regime {
        Regime::ThirdParty => p.alpha * (1.0 - p.beta),
        Regime::Branded => p.alpha,
    };
    p.n_h * (used * p.v_l * s + p.v_h * (1.0 - s) - p.c(d))
}

pub fn objective(p: &ModelParams, model: ModelKind, regime: Regime, d: f64) -> f64 {
    match model {
        ModelKind::TwoPeriod => two_period_profit(p, regime, d),
        ModelKind::Olg => olg_objective(p, regime, d),
    }
}

/// Grid maximizer of the firm's objective. `D = 0` is always on the grid.
pub fn grid_argmax_profit(p: &ModelParams, regime: Regime, model: ModelKind, grid: &GridSpec) -> GridOptimum {
    grid_argmax(grid, |d| objective(p, model, regime, d))
}

/// Grid maximizer of two-period total surplus.
pub fn grid_argmax_welfare(p: &ModelParams, grid: &GridSpec) -> GridOptimum {
    grid_argmax(grid, |d| two_period_welfare(p, d))
}

/// Sign changes in the sequence of consecutive objective differences along
/// the grid. A strictly concave objective has at most one (from rising to
/// falling). Exact zeros are skipped.
pub fn difference_sign_changes(p: &ModelParams, regime: Regime, model: ModelKind, grid: &GridSpec) -> usize {
    let mut changes = 0;
    let mut last_sign = 0i8;
    let mut prev = objective(p, model, regime, 0.0);
    for i in 1..grid.points {
        let cur = objective(p, model, regime, grid.at(i));
        let sign = match (cur - prev).partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 1,
            Some(std::cmp::Ordering::Less) => -1,
            _ => 0,
        };
        if sign != 0 {
            if last_sign != 0 && sign != last_sign {
                changes += 1;
            }
            last_sign = sign;
        }
        prev = cur;
    }
    changes
}

/// `sum_{t=1..horizon} delta^t * per-period payoff`.
pub fn truncated_stream(p: &ModelParams, regime: Regime, d: f64, horizon: u32) -> f64 {
    let flow = olg_period_payoff(p, regime, d);
    // Horner form, innermost (latest) period first.
    let mut total = 0.0;
    for _ in 0..horizon {
        total = p.delta * (flow + total);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellAudit {
    pub cell: Cell,
    pub prescribed: Action,
    /// `None` when the prescribed action is unavailable to this cell.
    pub prescribed_surplus: Option<f64>,
    pub best_alternative: Option<Action>,
    pub best_alternative_surplus: Option<f64>,
    /// Prescribed minus best alternative; negative means a deviation pays.
    pub margin: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub cells: Vec<CellAudit>,
    pub passes: bool,
}

impl AuditReport {
    pub fn deviations(&self) -> impl Iterator<Item = &CellAudit> {
        self.cells.iter().filter(|c| !c.passes)
    }
}

struct Market {
    used_supply: bool,
    used_demand: bool,
}

fn holds_unit(state: OlgState, cell: Cell) -> bool {
    match (state, cell.age, cell.ty) {
        (_, Age::One, _) => false,
        (OlgState::Empty, _, _) => false,
        (OlgState::HighOnly, Age::Two, t) => t == CustomerType::High,
        (OlgState::All, Age::Two, _) => true,
    }
}

/// Age-2 options: everything this consumer could do in their final period.
fn final_period_options(p: &ModelParams, s: f64, pr: &SteadyPrices, m: &Market, v: f64, owner: bool) -> Vec<(Action, f64)> {
    let mut out = vec![(Action::BuyNew, v - pr.p_n)];
    if owner {
        out.push((Action::KeepUsed, v * s));
        if m.used_demand {
            out.push((Action::SellUsedBuyNew, v - pr.p_n + (1.0 - p.beta) * pr.p_u));
        }
    } else {
        out.push((Action::DoNothing, 0.0));
        if m.used_supply {
            out.push((Action::BuyUsed, p.alpha * v * s - pr.p_u));
        }
    }
    out
}

fn best(options: &[(Action, f64)]) -> f64 {
    options.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max)
}

/// Remaining-lifetime discounted surplus of every action open to `cell`.
/// Age-1 consumers take the best age-2 option next period at unchanged
/// prices; buying new now makes them an owner next period.
fn cell_options(p: &ModelParams, s: f64, pr: &SteadyPrices, m: &Market, state: OlgState, cell: Cell) -> Vec<(Action, f64)> {
    let v = match cell.ty {
        CustomerType::High => p.v_h,
        CustomerType::Low => p.v_l,
    };
    match cell.age {
        Age::Two => final_period_options(p, s, pr, m, v, holds_unit(state, cell)),
        Age::One => {
            let as_owner = best(&final_period_options(p, s, pr, m, v, true));
            let as_buyer = best(&final_period_options(p, s, pr, m, v, false));
            let mut out = vec![
                (Action::BuyNew, v - pr.p_n + p.delta * as_owner),
                (Action::DoNothing, p.delta * as_buyer),
            ];
            if m.used_supply {
                out.push((Action::BuyUsed, p.alpha * v * s - pr.p_u + p.delta * as_buyer));
            }
            out
        }
    }
}

/// Checks that each cell's prescribed action attains the highest surplus
/// among its options, to tolerance `tol`.
pub fn best_response_audit(
    p: &ModelParams,
    d: f64,
    prices: &SteadyPrices,
    state: OlgState,
    profile: &ActionProfile,
    tol: f64,
) -> AuditReport {
    let s = p.s(d);
    let mass = |ty| if ty == CustomerType::High { p.n_h } else { p.n_l };
    let (mut supply, mut demand) = (0.0, 0.0);
    for cell in Cell::ALL {
        match profile.get(cell) {
            Action::SellUsedBuyNew => supply += mass(cell.ty),
            Action::BuyUsed => demand += mass(cell.ty),
            _ => {}
        }
    }
    let market = Market { used_supply: supply > 0.0, used_demand: demand > 0.0 };

    let cells: Vec<CellAudit> = Cell::ALL
        .into_iter()
        .map(|cell| {
            let prescribed = profile.get(cell);
            let options = cell_options(p, s, prices, &market, state, cell);
            let own = options.iter().find(|o| o.0 == prescribed).map(|o| o.1);
            let alt = options
                .iter()
                .filter(|o| o.0 != prescribed)
                .fold(None::<(Action, f64)>, |acc, o| match acc {
                    Some(a) if a.1 >= o.1 => Some(a),
                    _ => Some(*o),
                });
            let margin = match (own, alt) {
                (Some(x), Some(a)) => x - a.1,
                (Some(_), None) => f64::INFINITY,
                (None, _) => f64::NEG_INFINITY,
            };
            CellAudit {
                cell,
                prescribed,
                prescribed_surplus: own,
                best_alternative: alt.map(|a| a.0),
                best_alternative_surplus: alt.map(|a| a.1),
                margin,
                passes: margin >= -tol,
            }
        })
        .collect();
    let passes = cells.iter().all(|c| c.passes);
    AuditReport { cells, passes }
}
