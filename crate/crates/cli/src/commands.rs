use std::path::PathBuf;

use recommerce_core::olg::{self, OlgMarketMode, OlgObjective, SteadyStateSolution};
use recommerce_core::oracle::{self, GridSpec};
use recommerce_core::statics::{self, linspace, Parameter};
use recommerce_core::two_period::{self, MarketMode, TwoPeriodEquilibrium};
use recommerce_core::verify::{self, VerifySpec};
use recommerce_core::{validate_params, ModelKind, ModelParams, Regime, SolverOptions};
use serde::Serialize;

use crate::config::{Format, RegimeChoice, RunConfig};
use crate::output::{num, opt_num, OutDir};
use crate::{CliError, ModelArgs};

pub struct Context {
    cfg: RunConfig,
    out: PathBuf,
    formats: Vec<Format>,
    params: ModelParams,
    opts: SolverOptions,
}

impl Context {
    pub fn new(cfg: RunConfig, out: Option<PathBuf>, formats: Vec<Format>) -> Result<Self, CliError> {
        let out = out.or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
        let formats = if formats.is_empty() { cfg.formats() } else { formats };
        Ok(Context { params: cfg.params(), opts: cfg.solver(), cfg, out, formats })
    }

    fn model(&self, m: &ModelArgs) -> ModelKind {
        m.model.or(self.cfg.model).unwrap_or(ModelKind::TwoPeriod)
    }

    fn regimes(&self, m: &ModelArgs) -> Vec<Regime> {
        m.regime.or(self.cfg.regime).unwrap_or(RegimeChoice::Both).regimes()
    }

    fn objective(&self, m: &ModelArgs) -> OlgObjective {
        m.objective.or(self.cfg.objective).unwrap_or_default()
    }

    fn validate(&self, model: ModelKind) -> Result<(), CliError> {
        validate_params(&self.params, model, &self.opts).into_result()?;
        Ok(())
    }

    fn dir(&self) -> Result<OutDir, CliError> {
        Ok(OutDir::create(&self.out)?)
    }

    fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }

    fn emit<T: Serialize>(&self, stem: &str, header: &[&str], rows: &[Vec<String>], json: &T) -> Result<(), CliError> {
        let dir = self.dir()?;
        if self.csv() {
            let p = dir.write_csv(&format!("{stem}.csv"), header, rows)?;
            println!("wrote {}", p.display());
        }
        if self.json() {
            let p = dir.write_json(&format!("{stem}.json"), json)?;
            println!("wrote {}", p.display());
        }
        Ok(())
    }
}

fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        println!("{}", parts.join("  ").trim_end());
    };
    line(header.to_vec());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
}

const SOLVE_HEADER: [&str; 10] = [
    "regime",
    "market_mode",
    "D_star",
    "D_social",
    "p1n",
    "p2n",
    "p2u",
    "profit_total",
    "commission_revenue",
    "welfare",
];

fn two_period_row(e: &TwoPeriodEquilibrium) -> Vec<String> {
    vec![
        e.regime.to_string(),
        e.market_mode.to_string(),
        num(e.d_star),
        num(e.d_social),
        num(e.p1n),
        num(e.p2n),
        opt_num(e.p2u),
        num(e.profit_total),
        num(e.commission_revenue),
        num(e.welfare),
    ]
}

/// The infinite-horizon record in the same columns: the period-1 price,
/// stationary prices, the objective, per-period commission; no planner.
fn olg_row(p: &ModelParams, s: &SteadyStateSolution) -> Vec<String> {
    vec![
        s.regime.to_string(),
        s.market_mode.to_string(),
        num(s.d_star),
        String::new(),
        num(olg::first_period_price(p, s.d_star)),
        num(s.p_n),
        opt_num(s.p_u),
        num(s.objective),
        num(s.per_period_commission),
        String::new(),
    ]
}

pub fn solve(ctx: &Context, m: &ModelArgs) -> Result<(), CliError> {
    let model = ctx.model(m);
    ctx.validate(model)?;
    let p = &ctx.params;
    println!("model {model}");
    let rows = match model {
        ModelKind::TwoPeriod => {
            let eqs = ctx
                .regimes(m)
                .into_iter()
                .map(|r| two_period::solve(p, r, &ctx.opts))
                .collect::<Result<Vec<_>, _>>()?;
            let rows: Vec<_> = eqs.iter().map(two_period_row).collect();
            print_table(&SOLVE_HEADER, &rows);
            for e in &eqs {
                println!(
                    "{}: sustainability gap D** - D* = {}; profit = {} (period 1) + delta * {} (period 2)",
                    e.regime,
                    num(e.sustainability_gap),
                    num(e.profit_period1),
                    num(e.profit_period2)
                );
                match e.market_mode {
                    MarketMode::Shutdown => println!("{}: market shutdown, lower types excluded", e.regime),
                    MarketMode::LowTypeDeviates => {
                        println!("{}: low types prefer new units at these prices; no screening equilibrium", e.regime)
                    }
                    MarketMode::ActivePreOwned => {}
                }
            }
            ctx.emit("solve", &SOLVE_HEADER, &rows, &eqs)?;
            rows
        }
        ModelKind::Olg => {
            let obj = ctx.objective(m);
            let sols = ctx
                .regimes(m)
                .into_iter()
                .map(|r| olg::optimal_durability_olg(p, r, obj, &ctx.opts))
                .collect::<Result<Vec<_>, _>>()?;
            let rows: Vec<_> = sols.iter().map(|s| olg_row(p, s)).collect();
            print_table(&SOLVE_HEADER, &rows);
            for s in &sols {
                println!(
                    "{}: per period {} = sales {} + commission {}; stream {}; D = 0 alternatives {} (high price) / {} (mass market)",
                    s.regime,
                    num(s.per_period_profit),
                    num(s.per_period_sales),
                    num(s.per_period_commission),
                    num(s.g),
                    num(s.d0_high_price),
                    num(s.d0_mass_market)
                );
                match s.market_mode {
                    OlgMarketMode::Shutdown => println!("{}: market shutdown, lower types excluded", s.regime),
                    OlgMarketMode::NoActiveSteadyState => {
                        if let Some(b) = s.best_feasible {
                            println!(
                                "{}: low-type condition fails at D*; best feasible D = {} (objective {})",
                                s.regime,
                                num(b.d),
                                num(b.objective)
                            );
                        }
                    }
                    OlgMarketMode::ActivePreOwned => {}
                }
            }
            ctx.emit("solve", &SOLVE_HEADER, &rows, &sols)?;
            rows
        }
    };
    debug_assert!(!rows.is_empty());
    Ok(())
}

const SWEEP_HEADER: [&str; 8] =
    ["param_value", "regime", "D_star", "profit", "welfare", "envelope_deriv", "fd_deriv", "market_mode"];

pub fn sweep(
    ctx: &Context,
    m: &ModelArgs,
    param: Option<Parameter>,
    from: Option<f64>,
    to: Option<f64>,
    steps: Option<usize>,
) -> Result<(), CliError> {
    let model = ctx.model(m);
    ctx.validate(model)?;
    let s = &ctx.cfg.sweep;
    let missing = |what: &str| CliError::Usage(format!("sweep needs --{what} (or sweep.{what} in the config)"));
    let param = param.or(s.parameter).ok_or_else(|| missing("param"))?;
    let from = from.or(s.from).ok_or_else(|| missing("from"))?;
    let steps = steps.or(s.steps).ok_or_else(|| missing("steps"))?;
    let to = match to.or(s.to) {
        Some(t) => t,
        None if steps == 1 => from,
        None => return Err(missing("to")),
    };
    if steps == 0 {
        return Err(CliError::Usage("sweep needs at least one step".into()));
    }
    let report = statics::monotonicity_sweep(&ctx.params, model, param, &linspace(from, to, steps), &ctx.opts)?;
    let regimes = ctx.regimes(m);
    let points: Vec<_> = report.points.iter().filter(|x| regimes.contains(&x.regime)).collect();
    if !points.iter().any(|x| x.active) {
        return Err(CliError::Usage(format!("empty active region: no grid point of {param} activates the used market")));
    }
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|x| {
            vec![
                num(x.param_value),
                x.regime.to_string(),
                num(x.d_star),
                num(x.profit),
                opt_num(x.welfare),
                num(x.envelope_deriv),
                num(x.fd_deriv),
                x.market_mode.to_string(),
            ]
        })
        .collect();
    println!("model {model}, sweeping {param} over {steps} points");
    for v in report.verdicts.iter().filter(|v| regimes.contains(&v.regime)) {
        println!(
            "{}: {} active, {} excluded; D* {:?}; profit {:?}; max envelope/difference gap {:.2e}",
            v.regime, v.active_points, v.excluded_points, v.d_star, v.profit, v.max_relative_error
        );
    }
    ctx.emit("sweep", &SWEEP_HEADER, &rows, &report)
}

#[derive(Serialize)]
struct CompareRecord {
    comparison: statics::RegimeComparison,
    beta_star: f64,
    commission_points: usize,
    commission_strictly_decreasing_when_active: bool,
    commission_non_increasing: bool,
}

pub fn compare(ctx: &Context, m: &ModelArgs, commission_points: usize) -> Result<(), CliError> {
    let model = ctx.model(m);
    ctx.validate(model)?;
    let c = statics::regime_comparison(&ctx.params, model, &ctx.opts)?;
    let curve = statics::optimal_commission(&ctx.params, model, commission_points, &ctx.opts)?;
    println!("model {model}");
    print_table(
        &["regime", "mode", "D_star", "value", "welfare", "sustainability_gap"],
        &[c.third_party, c.branded]
            .iter()
            .map(|s| {
                vec![
                    s.regime.to_string(),
                    s.point.mode.to_string(),
                    num(s.point.d_star),
                    num(s.point.value),
                    opt_num(s.point.welfare),
                    opt_num(s.sustainability_gap),
                ]
            })
            .collect::<Vec<_>>(),
    );
    println!(
        "branded - third-party: D* {}, value {}, welfare {}",
        num(c.d_gap),
        num(c.value_gap),
        opt_num(c.welfare_gap)
    );
    if !c.both_active {
        println!("only one regime operates a used market; gaps are one-sided");
    }
    println!("branded optimum over {commission_points} commission rates: beta = {}", num(curve.beta_star));
    let rows: Vec<Vec<String>> = (0..curve.betas.len())
        .map(|i| vec![num(curve.betas[i]), num(curve.profits[i]), curve.active[i].to_string()])
        .collect();
    let dir = ctx.dir()?;
    if ctx.csv() {
        println!("wrote {}", dir.write_csv("commission.csv", &["beta", "profit", "active"], &rows)?.display());
    }
    if ctx.json() {
        let rec = CompareRecord {
            comparison: c,
            beta_star: curve.beta_star,
            commission_points,
            commission_strictly_decreasing_when_active: curve.strictly_decreasing_when_active,
            commission_non_increasing: curve.non_increasing,
        };
        println!("wrote {}", dir.write_json("compare.json", &rec)?.display());
    }
    Ok(())
}

const OLG_VERIFY_HEADER: [&str; 14] = [
    "state",
    "profile",
    "actions_feasible",
    "state_consistent",
    "market_clears",
    "high_resell_over_keep",
    "high_new_over_used",
    "low_used_participation",
    "young_low_used_over_new",
    "old_low_used_over_new",
    "young_low_ratio",
    "best_response",
    "dominated",
    "steady_state",
];

pub fn olg_verify(ctx: &Context, m: &ModelArgs, durability: Option<f64>) -> Result<(), CliError> {
    ctx.validate(ModelKind::Olg)?;
    let p = &ctx.params;
    let regime = ctx.regimes(m)[0];
    let d = match durability {
        Some(d) if d.is_finite() && d >= 0.0 => d,
        Some(d) => return Err(CliError::Usage(format!("durability must be non-negative, got {d}"))),
        None => {
            let sol = olg::optimal_durability_olg(p, regime, ctx.objective(m), &ctx.opts)?;
            if sol.market_mode == OlgMarketMode::Shutdown {
                println!("{regime}: optimum is D = 0 (no used market); auditing there");
            }
            sol.d_star
        }
    };
    let reports = olg::audit_all_candidates(p, d, &ctx.opts);
    let flag = |b: bool| b.to_string();
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let c = &r.constraints;
            vec![
                r.state.to_string(),
                r.profile.to_string(),
                flag(r.actions_feasible),
                flag(r.state_consistent),
                flag(r.market_clears),
                flag(c.high_resell_over_keep.holds),
                flag(c.high_new_over_used.holds),
                flag(c.low_used_participation.holds),
                flag(c.young_low_used_over_new.holds),
                flag(c.old_low_used_over_new.holds),
                flag(c.young_low_ratio.holds),
                flag(r.best_response),
                flag(r.dominated),
                flag(r.is_steady_state()),
            ]
        })
        .collect();
    let survivors: Vec<_> = reports.iter().filter(|r| r.is_steady_state()).collect();
    println!("audited {} candidates at D = {}: {} steady state(s)", reports.len(), num(d), survivors.len());
    for r in &survivors {
        let audit = oracle::best_response_audit(p, d, &r.prices, r.state, &r.profile, ctx.opts.constraint_tol);
        println!(
            "  {} {}  p_n = {}  p_u = {}  independent audit: {}",
            r.state,
            r.profile,
            num(r.prices.p_n),
            num(r.prices.p_u),
            if audit.passes { "pass" } else { "FAIL" }
        );
    }
    ctx.emit("olg_verify", &OLG_VERIFY_HEADER, &rows, &reports)
}

pub struct VerifyFlags {
    pub seed: Option<u64>,
    pub draws: Option<usize>,
    pub oracle_draws: Option<usize>,
    pub audit_draws: Option<usize>,
    pub grid_points: Option<usize>,
    pub commission_points: Option<usize>,
    pub invert_ordering: bool,
}

pub fn verify(ctx: &Context, f: VerifyFlags) -> Result<(), CliError> {
    let c = &ctx.cfg.verify;
    let d = VerifySpec::default();
    let seed = f
        .seed
        .or(c.seed)
        .ok_or_else(|| CliError::Usage("verify needs a seed (--seed or verify.seed in the config)".into()))?;
    let spec = VerifySpec {
        seed,
        draws: f.draws.or(c.draws).unwrap_or(d.draws),
        oracle_draws: f.oracle_draws.or(c.oracle_draws).unwrap_or(d.oracle_draws),
        audit_draws: f.audit_draws.or(c.audit_draws).unwrap_or(d.audit_draws),
        grid_points: f.grid_points.or(c.grid_points).unwrap_or(d.grid_points),
        commission_points: f.commission_points.or(c.commission_points).unwrap_or(d.commission_points),
        invert_ordering: f.invert_ordering,
        bounds: c.bounds.unwrap_or(d.bounds),
    };
    let report = verify::run(&spec, &ctx.opts)?;

    for s in &report.samples {
        println!(
            "sample {} / {:?}: {} accepted of {} draws",
            s.model, s.filter, s.accepted, s.attempts
        );
    }
    let rows: Vec<Vec<String>> = report
        .criteria
        .iter()
        .map(|c| {
            vec![
                c.id.to_string(),
                c.name.to_string(),
                c.cases.to_string(),
                c.violations.to_string(),
                if c.passed { "pass" } else { "FAIL" }.to_string(),
                c.detail.clone(),
            ]
        })
        .collect();
    let header = ["id", "property", "cases", "violations", "verdict", "detail"];
    print_table(&header, &rows);
    ctx.emit("verify", &header, &rows, &report)?;

    let dump = ctx.dir()?.path("counterexample.json");
    match report.first_counterexample() {
        Some((crit, x)) => {
            #[derive(Serialize)]
            struct Dump<'a> {
                property: &'a str,
                id: u8,
                counterexample: &'a verify::Counterexample,
            }
            let p = ctx.dir()?.write_json("counterexample.json", &Dump { property: crit.name, id: crit.id, counterexample: x })?;
            println!("wrote {}", p.display());
            Err(CliError::PropertyFailure(format!("property {} ({}) failed: {}", crit.id, crit.name, x.message)))
        }
        None if !report.passed => Err(CliError::PropertyFailure("a property checked no cases".into())),
        None => {
            if dump.exists() {
                std::fs::remove_file(&dump)?;
            }
            Ok(())
        }
    }
}

const ORACLE_HEADER: [&str; 7] = ["target", "regime", "D_solver", "D_grid", "gap", "step", "within_step"];

pub fn oracle_check(ctx: &Context, m: &ModelArgs, grid_points: usize) -> Result<(), CliError> {
    let model = ctx.model(m);
    ctx.validate(model)?;
    let p = &ctx.params;
    let grid = GridSpec::new(ctx.opts.d_max, grid_points)?;
    let step = grid.step();
    let mut rows = Vec::new();
    let mut failed = false;
    let mut push = |target: &str, regime: String, solver: f64, grid_d: f64| {
        let gap = (solver - grid_d).abs();
        let ok = gap <= step;
        failed |= !ok;
        rows.push(vec![target.to_string(), regime, num(solver), num(grid_d), num(gap), num(step), ok.to_string()]);
    };
    for r in ctx.regimes(m) {
        let o = statics::optimal_point(p, model, r, &ctx.opts)?;
        let g = oracle::grid_argmax_profit(p, r, model, &grid);
        push("firm", r.to_string(), o.d_star, g.d_hat);
    }
    if model == ModelKind::TwoPeriod {
        let d = two_period::social_optimal_durability(p, &ctx.opts)?;
        push("planner", String::new(), d, oracle::grid_argmax_welfare(p, &grid).d_hat);
    }
    println!("model {model}, {grid_points} grid points on [0, {}]", num(grid.d_max));
    print_table(&ORACLE_HEADER, &rows);
    #[derive(Serialize)]
    struct Rec<'a> {
        model: ModelKind,
        grid: GridSpec,
        rows: &'a [Vec<String>],
    }
    ctx.emit("oracle_check", &ORACLE_HEADER, &rows, &Rec { model, grid, rows: &rows })?;
    if failed {
        return Err(CliError::PropertyFailure("solver and grid oracle disagree by more than one step".into()));
    }
    Ok(())
}
