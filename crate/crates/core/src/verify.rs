//! Property suite over seeded random draws. Every check walks its draws in
//! parallel but reports violations in draw order, so the first
//! counterexample is the same on every run.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::olg::{self, ActionProfile, OlgObjective, OlgState};
use crate::oracle::{self, GridSpec};
use crate::primitives::{ModelKind, ModelParams, Regime, SolverOptions};
use crate::sampling::{sample, DrawBox, DrawFilter, Sample};
use crate::statics::{self, relative_error, Parameter, FD_STEP};
use crate::two_period;

/// Tolerances fixed by the property statements.
pub const FD_REL_TOL: f64 = 1e-4;
pub const PRICE_TOL: f64 = 1e-12;
pub const CANONICAL_TOL: f64 = 1e-3;
pub const LADDER_STEP: f64 = 0.01;
pub const LADDER_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub seed: u64,
    /// Draws per model for the monotonicity, ordering, commission, envelope
    /// and welfare properties.
    pub draws: usize,
    /// Draws per model for the grid-oracle comparison.
    pub oracle_draws: usize,
    /// Certified draws per model for the steady-state and constraint audits.
    pub audit_draws: usize,
    pub grid_points: usize,
    pub commission_points: usize,
    /// Harness self-test: flips the durability-ordering assertion so that it
    /// must fail.
    pub invert_ordering: bool,
    pub bounds: DrawBox,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            seed: 42,
            draws: 1000,
            oracle_draws: 200,
            audit_draws: 200,
            grid_points: 1_000_000,
            commission_points: 1001,
            invert_ordering: false,
            bounds: DrawBox::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub model: ModelKind,
    pub draw: usize,
    pub params: ModelParams,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    pub passed: bool,
    pub detail: String,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleSummary {
    pub model: ModelKind,
    pub filter: DrawFilter,
    pub accepted: usize,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub spec: VerifySpec,
    pub samples: Vec<SampleSummary>,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn first_counterexample(&self) -> Option<(&CriterionResult, &Counterexample)> {
        self.criteria.iter().find_map(|c| c.counterexample.as_ref().map(|x| (c, x)))
    }
}

/// Outcome of one property on one draw: number of sub-cases checked and the
/// first failure message, if any.
struct Case {
    checked: usize,
    failure: Option<String>,
}

impl Case {
    fn new() -> Self {
        Case { checked: 0, failure: None }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(msg());
        }
    }

    fn fail(&mut self, err: Error) {
        self.checked += 1;
        if self.failure.is_none() {
            self.failure = Some(format!("solver error: {err}"));
        }
    }
}

struct Tally {
    cases: usize,
    violations: usize,
    counterexample: Option<Counterexample>,
}

impl Tally {
    fn new() -> Self {
        Tally { cases: 0, violations: 0, counterexample: None }
    }

    fn run(&mut self, model: ModelKind, params: &[ModelParams], f: impl Fn(&ModelParams) -> Case + Sync) {
        let results: Vec<Case> = params.par_iter().map(&f).collect();
        for (i, (case, p)) in results.into_iter().zip(params).enumerate() {
            self.cases += case.checked;
            if let Some(message) = case.failure {
                self.violations += 1;
                if self.counterexample.is_none() {
                    self.counterexample = Some(Counterexample { model, draw: i, params: *p, message });
                }
            }
        }
    }

    fn finish(self, id: u8, name: &'static str, detail: String) -> CriterionResult {
        CriterionResult {
            id,
            name,
            cases: self.cases,
            violations: self.violations,
            passed: self.violations == 0 && self.cases > 0,
            detail,
            counterexample: self.counterexample,
        }
    }
}

struct Samples {
    two_active: Sample,
    olg_active: Sample,
    two_certified: Sample,
    olg_certified: Sample,
}

impl Samples {
    fn active(&self, model: ModelKind) -> &[ModelParams] {
        match model {
            ModelKind::TwoPeriod => &self.two_active.params,
            ModelKind::Olg => &self.olg_active.params,
        }
    }

    fn certified(&self, model: ModelKind) -> &[ModelParams] {
        match model {
            ModelKind::TwoPeriod => &self.two_certified.params,
            ModelKind::Olg => &self.olg_certified.params,
        }
    }
}

const MODELS: [ModelKind; 2] = [ModelKind::TwoPeriod, ModelKind::Olg];

fn take(xs: &[ModelParams], n: usize) -> &[ModelParams] {
    &xs[..n.min(xs.len())]
}

/// Identifiers of every property, in report order.
pub const ALL_CRITERIA: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Runs every property. Fails only on an empty or unusable spec; property
/// violations are reported in the result.
pub fn run(spec: &VerifySpec, opts: &SolverOptions) -> Result<VerifyReport> {
    run_selected(spec, opts, &ALL_CRITERIA)
}

/// Runs the properties listed in `ids`, in report order.
pub fn run_selected(spec: &VerifySpec, opts: &SolverOptions, ids: &[u8]) -> Result<VerifyReport> {
    if spec.draws == 0 || spec.oracle_draws == 0 || spec.audit_draws == 0 {
        return Err(Error::Config("empty verification: draw counts must be positive".into()));
    }
    let grid = GridSpec::new(opts.d_max, spec.grid_points)?;
    if spec.commission_points < 2 {
        return Err(Error::Config("commission grid needs at least two points".into()));
    }
    let n_active = spec.draws.max(spec.oracle_draws);
    let draw = |model, filter, n| sample(spec.seed, model, filter, n, &spec.bounds, opts);
    let samples = Samples {
        two_active: draw(ModelKind::TwoPeriod, DrawFilter::BothActive, n_active)?,
        olg_active: draw(ModelKind::Olg, DrawFilter::BothActive, n_active)?,
        two_certified: draw(ModelKind::TwoPeriod, DrawFilter::Certified, spec.audit_draws)?,
        olg_certified: draw(ModelKind::Olg, DrawFilter::Certified, spec.audit_draws)?,
    };

    let criteria: Vec<CriterionResult> = ALL_CRITERIA
        .iter()
        .filter(|id| ids.contains(id))
        .map(|id| match id {
            1 => foc_matches_grid(spec, &samples, &grid, opts),
            2 => canonical_regression(&grid, opts),
            3 => local_monotonicity(spec, &samples, opts),
            4 => branded_more_durable(spec, &samples, opts),
            5 => zero_commission_optimal(spec, &samples, opts),
            6 => alpha_incentive_ordering(spec, &samples, opts),
            7 => unique_steady_state(&samples, opts),
            8 => constraint_structure(&samples, opts),
            _ => welfare_ordering(spec, &samples, opts),
        })
        .collect();
    if criteria.is_empty() {
        return Err(Error::Config("no properties selected".into()));
    }
    let summaries = [&samples.two_active, &samples.olg_active, &samples.two_certified, &samples.olg_certified]
        .into_iter()
        .map(|s| SampleSummary { model: s.model, filter: s.filter, accepted: s.params.len(), attempts: s.attempts })
        .collect();
    Ok(VerifyReport { spec: spec.clone(), samples: summaries, passed: criteria.iter().all(|c| c.passed), criteria })
}

fn foc_matches_grid(spec: &VerifySpec, s: &Samples, grid: &GridSpec, opts: &SolverOptions) -> CriterionResult {
    let mut t = Tally::new();
    let step = grid.step();
    for model in MODELS {
        // Each grid scan is itself parallel; draws run one at a time.
        for (i, p) in take(s.active(model), spec.oracle_draws).iter().enumerate() {
            let mut case = Case::new();
            for r in Regime::ALL {
                match statics::optimal_point(p, model, r, opts) {
                    Ok(o) => {
                        let g = oracle::grid_argmax_profit(p, r, model, grid);
                        let gap = (o.d_star - g.d_hat).abs();
                        case.check(gap <= step, || {
                            format!("{r}: solver D* = {} vs grid {} (gap {gap:.3e} > step {step:.3e})", o.d_star, g.d_hat)
                        });
                    }
                    Err(e) => case.fail(e),
                }
            }
            t.cases += case.checked;
            if let Some(message) = case.failure {
                t.violations += 1;
                t.counterexample.get_or_insert(Counterexample { model, draw: i, params: *p, message });
            }
        }
    }
    t.finish(
        1,
        "foc-matches-grid-oracle",
        format!("{} draws per model, {} grid points, step {step:.1e}", spec.oracle_draws, grid.points),
    )
}

fn canonical_regression(grid: &GridSpec, opts: &SolverOptions) -> CriterionResult {
    let p = ModelParams::canonical();
    let mut case = Case::new();
    let mut found = Vec::new();
    let expected = [("third-party", 0.0673), ("branded", 0.1238), ("social", 0.285)];
    for (name, target) in expected {
        let solved = match name {
            "third-party" => two_period::optimal_durability(&p, Regime::ThirdParty, opts),
            "branded" => two_period::optimal_durability(&p, Regime::Branded, opts),
            _ => two_period::social_optimal_durability(&p, opts),
        };
        let oracle_d = match name {
            "third-party" => oracle::grid_argmax_profit(&p, Regime::ThirdParty, ModelKind::TwoPeriod, grid).d_hat,
            "branded" => oracle::grid_argmax_profit(&p, Regime::Branded, ModelKind::TwoPeriod, grid).d_hat,
            _ => oracle::grid_argmax_welfare(&p, grid).d_hat,
        };
        match solved {
            Ok(d) => {
                found.push(format!("{name} {d:.4}"));
                case.check((d - target).abs() <= CANONICAL_TOL, || format!("{name}: {d} vs {target}"));
                case.check((oracle_d - target).abs() <= CANONICAL_TOL + grid.step(), || {
                    format!("{name}: oracle {oracle_d} vs {target}")
                });
                case.check((d - oracle_d).abs() <= grid.step(), || format!("{name}: solver {d} vs oracle {oracle_d}"));
            }
            Err(e) => case.fail(e),
        }
    }
    let mut t = Tally::new();
    t.cases = case.checked;
    if let Some(message) = case.failure {
        t.violations = 1;
        t.counterexample = Some(Counterexample { model: ModelKind::TwoPeriod, draw: 0, params: p, message });
    }
    t.finish(2, "canonical-regression", found.join(", "))
}

/// Five points `start, start + step, ...`, shifted to stay inside `[lo, hi]`.
pub fn ladder(center: f64, lo: f64, hi: f64) -> Vec<f64> {
    let span = LADDER_STEP * (LADDER_POINTS - 1) as f64;
    let start = (center - span / 2.0).max(lo).min(hi - span);
    (0..LADDER_POINTS).map(|k| start + LADDER_STEP * k as f64).collect()
}

fn local_monotonicity(spec: &VerifySpec, s: &Samples, opts: &SolverOptions) -> CriterionResult {
    let mut t = Tally::new();
    for model in MODELS {
        t.run(model, take(s.active(model), spec.draws), |p| {
            let mut case = Case::new();
            // β may sit at 0 exactly; α may sit at 1 exactly.
            let ladders = [(Parameter::Alpha, ladder(p.alpha, 0.01, 1.0), 1.0), (Parameter::Beta, ladder(p.beta, 0.0, 0.99), -1.0)];
            for (param, values, sign) in ladders {
                for r in Regime::ALL {
                    let pts: Result<Vec<_>> = values
                        .iter()
                        .map(|&v| statics::optimal_point(&param.with(p, v), model, r, opts))
                        .collect();
                    let pts = match pts {
                        Ok(x) => x,
                        Err(e) => {
                            case.fail(e);
                            continue;
                        }
                    };
                    let active: Vec<_> = pts.iter().filter(|o| o.active).collect();
                    for w in active.windows(2) {
                        case.check(sign * (w[1].d_star - w[0].d_star) > 0.0, || {
                            format!("{r} D* not monotone in {param} along {values:?}")
                        });
                        case.check(sign * (w[1].value - w[0].value) > 0.0, || {
                            format!("{r} profit not monotone in {param} along {values:?}")
                        });
                    }
                }
            }
            case
        });
    }
    t.finish(
        3,
        "local-monotonicity-alpha-beta",
        format!("{} draws per model, {LADDER_POINTS}-point ladders, step {LADDER_STEP}", spec.draws),
    )
}

fn branded_more_durable(spec: &VerifySpec, s: &Samples, opts: &SolverOptions) -> CriterionResult {
    let mut t = Tally::new();
    for model in MODELS {
        t.run(model, take(s.active(model), spec.draws), |p| {
            let mut case = Case::new();
            match (
                statics::optimal_point(p, model, Regime::ThirdParty, opts),
                statics::optimal_point(p, model, Regime::Branded, opts),
            ) {
                (Ok(tp), Ok(b)) => {
                    let ok = if spec.invert_ordering { b.d_star < tp.d_star } else { b.d_star > tp.d_star };
                    case.check(ok, || format!("branded D* {} vs third-party D* {}", b.d_star, tp.d_star));
                }
                (Err(e), _) | (_, Err(e)) => case.fail(e),
            }
            case
        });
    }
    let name = if spec.invert_ordering { "branded-more-durable (inverted self-test)" } else { "branded-more-durable" };
    t.finish(4, name, format!("{} draws per model", spec.draws))
}

fn zero_commission_optimal(spec: &VerifySpec, s: &Samples, opts: &SolverOptions) -> CriterionResult {
    let mut t = Tally::new();
    for model in MODELS {
        t.run(model, take(s.active(model), spec.draws), |p| {
            let mut case = Case::new();
            match statics::optimal_commission(p, model, spec.commission_points, opts) {
                Ok(c) => {
                    case.check(c.argmax_index == 0, || format!("argmax at beta = {}", c.beta_star));
                    case.check(c.strictly_decreasing_when_active && c.non_increasing, || {
                        "branded profit curve rises somewhere in beta".into()
                    });
                }
                Err(e) => case.fail(e),
            }
            case
        });
    }
    t.finish(
        5,
        "zero-commission-optimal",
        format!("{} draws per model, {} commission points", spec.draws, spec.commission_points),
    )
}

/// Commission rates at which the third-party α-incentive is compared.
pub fn tested_betas() -> Vec<f64> {
    (0..=12).map(|i| i as f64 * 0.05).collect()
}

fn alpha_incentive_ordering(spec: &VerifySpec, s: &Samples, opts: &SolverOptions) -> CriterionResult {
    let mut t = Tally::new();
    for model in MODELS {
        t.run(model, take(s.active(model), spec.draws), |p| {
            let mut case = Case::new();
            let free = Parameter::Beta.with(p, 0.0);
            let branded_free = match statics::optimal_point(&free, model, Regime::Branded, opts) {
                Ok(o) => statics::envelope_derivative(&free, model, Regime::Branded, Parameter::Alpha, o.d_star),
                Err(e) => {
                    case.fail(e);
                    return case;
                }
            };
            for beta in tested_betas() {
                let q = Parameter::Beta.with(p, beta);
                match statics::optimal_point(&q, model, Regime::ThirdParty, opts) {
                    Ok(o) if o.active => {
                        let third = statics::envelope_derivative(&q, model, Regime::ThirdParty, Parameter::Alpha, o.d_star);
                        let ok = if beta > 0.0 { branded_free > third } else { branded_free >= third };
                        case.check(ok, || format!("beta {beta}: branded(0) {branded_free} vs third-party {third}"));
                    }
                    Ok(_) => {}
                    Err(e) => case.fail(e),
                }
            }
            for r in Regime::ALL {
                let d = match statics::optimal_point(p, model, r, opts) {
                    Ok(o) => o.d_star,
                    Err(e) => {
                        case.fail(e);
                        continue;
                    }
                };
                for param in [Parameter::Alpha, Parameter::Beta] {
                    let a = statics::envelope_derivative(p, model, r, param, d);
                    match statics::finite_difference(p, model, r, param, FD_STEP, opts) {
                        Ok(f) => {
                            let err = relative_error(a, f);
                            case.check(err <= FD_REL_TOL, || {
                                format!("{r} d/d{param}: envelope {a} vs difference {f} (rel {err:.2e})")
                            })
                        }
                        Err(e) => case.fail(e),
                    }
                }
            }
            case
        });
    }
    t.finish(
        6,
        "alpha-incentive-ordering-and-envelope",
        format!("{} draws per model, {} commission rates, fd step {FD_STEP:e}", spec.draws, tested_betas().len()),
    )
}

fn unique_steady_state(s: &Samples, opts: &SolverOptions) -> CriterionResult {
    let mut t = Tally::new();
    t.run(ModelKind::Olg, s.certified(ModelKind::Olg), |p| {
        let mut case = Case::new();
        for r in Regime::ALL {
            let sol = match olg::optimal_durability_olg(p, r, OlgObjective::WithFirstPeriod, opts) {
                Ok(x) => x,
                Err(e) => {
                    case.fail(e);
                    continue;
                }
            };
            let d = sol.d_star;
            let survivors: Vec<_> = olg::audit_all_candidates(p, d, opts)
                .into_iter()
                .filter(|c| c.is_steady_state())
                .map(|c| (c.state, c.profile))
                .collect();
            case.check(survivors == [(OlgState::HighOnly, ActionProfile::active_marketplace())], || {
                format!("{r}: {} surviving candidates at D* = {d}", survivors.len())
            });
            let pr = olg::steady_state_prices(p, d);
            let two = two_period::prices(p, d);
            let gap = (pr.p_n - two.p2n).abs().max((pr.p_u - two.p2u).abs());
            case.check(gap <= PRICE_TOL, || format!("{r}: steady prices differ from period-2 prices by {gap:e}"));
            let audit = oracle::best_response_audit(p, d, &pr, OlgState::HighOnly, &ActionProfile::active_marketplace(), opts.constraint_tol);
            case.check(audit.passes, || format!("{r}: independent best-response audit rejects the profile"));
        }
        case
    });
    t.finish(
        7,
        "unique-steady-state",
        format!(
            "{} certified draws ({} attempts), 3 x 81 candidates per regime",
            s.olg_certified.params.len(),
            s.olg_certified.attempts
        ),
    )
}

fn constraint_structure(s: &Samples, opts: &SolverOptions) -> CriterionResult {
    let tol = opts.constraint_tol;
    let mut t = Tally::new();
    t.run(ModelKind::TwoPeriod, s.certified(ModelKind::TwoPeriod), |p| {
        let mut case = Case::new();
        for r in Regime::ALL {
            match two_period::solve(p, r, opts) {
                Ok(eq) => {
                    let Some(c) = eq.constraints else {
                        case.check(false, || format!("{r}: no constraint report"));
                        continue;
                    };
                    case.check(c.high_ic.binds(tol), || format!("{r}: high-type IC slack {}", c.high_ic.slack));
                    case.check(c.low_ir.binds(tol), || format!("{r}: low-type IR slack {}", c.low_ir.slack));
                    case.check(c.all_hold(), || format!("{r}: some condition fails: {c:?}"));
                }
                Err(e) => case.fail(e),
            }
        }
        case
    });
    t.run(ModelKind::Olg, s.certified(ModelKind::Olg), |p| {
        let mut case = Case::new();
        for r in Regime::ALL {
            match olg::optimal_durability_olg(p, r, OlgObjective::WithFirstPeriod, opts) {
                Ok(sol) => {
                    let c = olg::constraint_set(p, sol.d_star, &olg::steady_state_prices(p, sol.d_star), tol);
                    case.check(c.high_resell_over_keep.binds(tol), || {
                        format!("{r}: high resale slack {}", c.high_resell_over_keep.slack)
                    });
                    case.check(c.low_used_participation.binds(tol), || {
                        format!("{r}: low participation slack {}", c.low_used_participation.slack)
                    });
                    case.check(c.all_hold(), || format!("{r}: some condition fails: {c:?}"));
                    case.check(!c.high_resell_over_keep.holds || c.high_new_over_used.holds, || {
                        format!("{r}: high-type implication fails")
                    });
                    case.check(!c.young_low_used_over_new.holds || c.old_low_used_over_new.holds, || {
                        format!("{r}: low-type implication fails")
                    });
                }
                Err(e) => case.fail(e),
            }
        }
        case
    });
    t.finish(
        8,
        "constraint-structure",
        format!(
            "certified draws: two-period {} of {} attempts, infinite-horizon {} of {} attempts; bind tol {tol:e}",
            s.two_certified.params.len(),
            s.two_certified.attempts,
            s.olg_certified.params.len(),
            s.olg_certified.attempts
        ),
    )
}

fn welfare_ordering(spec: &VerifySpec, s: &Samples, opts: &SolverOptions) -> CriterionResult {
    let mut t = Tally::new();
    t.run(ModelKind::TwoPeriod, take(s.active(ModelKind::TwoPeriod), spec.draws), |p| {
        let mut case = Case::new();
        match statics::regime_comparison(p, ModelKind::TwoPeriod, opts) {
            Ok(c) => {
                let (dt, db, ds) = (c.third_party.point.d_star, c.branded.point.d_star, c.d_social.unwrap_or(f64::NAN));
                case.check(dt < db && db < ds, || format!("durabilities {dt} / {db} / {ds}"));
                let (wt, wb, ws) =
                    (two_period::welfare(p, dt), two_period::welfare(p, db), two_period::welfare(p, ds));
                case.check(wt < wb && wb < ws, || format!("welfare {wt} / {wb} / {ws}"));
            }
            Err(e) => case.fail(e),
        }
        case
    });
    t.finish(9, "welfare-ordering", format!("{} two-period draws", spec.draws))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifySpec {
        VerifySpec {
            seed: 5,
            draws: 10,
            oracle_draws: 3,
            audit_draws: 3,
            grid_points: 20_001,
            commission_points: 101,
            ..VerifySpec::default()
        }
    }

    #[test]
    fn ladders_stay_inside_bounds() {
        assert_eq!(ladder(1.0, 0.01, 1.0).last().copied(), Some(1.0));
        assert_eq!(ladder(0.0, 0.0, 0.99)[0], 0.0);
        let l = ladder(0.5, 0.0, 1.0);
        assert!((l[2] - 0.5).abs() < 1e-15);
        assert!(l.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn small_suite_passes() {
        let r = run(&small(), &SolverOptions::default()).unwrap();
        for c in &r.criteria {
            assert!(c.passed, "{c:#?}");
        }
        assert!(r.passed);
    }

    #[test]
    fn inverted_self_test_fails_with_counterexample() {
        let spec = VerifySpec { invert_ordering: true, ..small() };
        let r = run(&spec, &SolverOptions::default()).unwrap();
        assert!(!r.passed);
        let (c, x) = r.first_counterexample().unwrap();
        assert_eq!(c.id, 4);
        assert_eq!(x.draw, 0);
    }

    #[test]
    fn selection_keeps_report_order() {
        let r = run_selected(&small(), &SolverOptions::default(), &[9, 2]).unwrap();
        let ids: Vec<u8> = r.criteria.iter().map(|c| c.id).collect();
        assert_eq!(ids, [2, 9]);
        assert!(run_selected(&small(), &SolverOptions::default(), &[]).is_err());
    }

    #[test]
    fn empty_verification_is_rejected() {
        let spec = VerifySpec { draws: 0, ..small() };
        assert!(matches!(run(&spec, &SolverOptions::default()), Err(Error::Config(_))));
    }
}
