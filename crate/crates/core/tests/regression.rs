//! Frozen values. Each is first reproduced by a brute-force oracle here and
//! only then compared with the analytic solvers.

use recommerce_core::olg::{self, OlgMarketMode, OlgObjective};
use recommerce_core::oracle::{self, GridSpec};
use recommerce_core::two_period;
use recommerce_core::{ModelKind, ModelParams, Regime, SolverOptions};

fn olg_reference() -> ModelParams {
    ModelParams { alpha: 0.95, beta: 0.05, delta: 0.5, ..ModelParams::canonical() }
}

fn fine_grid() -> GridSpec {
    GridSpec::new(10.0, 1_000_001).unwrap()
}

#[test]
fn canonical_two_period_durabilities() {
    let p = ModelParams::canonical();
    let opts = SolverOptions::default();
    let g = fine_grid();
    let frozen = [(Regime::ThirdParty, 0.0673), (Regime::Branded, 0.1238)];
    for (r, value) in frozen {
        let oracle_d = oracle::grid_argmax_profit(&p, r, ModelKind::TwoPeriod, &g).d_hat;
        assert!((oracle_d - value).abs() < 1e-3, "oracle {r}: {oracle_d}");
        let d = two_period::optimal_durability(&p, r, &opts).unwrap();
        assert!((d - value).abs() < 1e-3);
        assert!((d - oracle_d).abs() <= g.step());
    }
    let oracle_social = oracle::grid_argmax_welfare(&p, &g).d_hat;
    assert!((oracle_social - 0.285).abs() < 1e-3);
    let social = two_period::social_optimal_durability(&p, &opts).unwrap();
    assert!((social - oracle_social).abs() <= g.step());
}

#[test]
fn olg_reference_durabilities() {
    let p = olg_reference();
    let opts = SolverOptions::default();
    let g = fine_grid();
    for (r, value) in [(Regime::ThirdParty, 0.07686), (Regime::Branded, 0.10855)] {
        let oracle_d = oracle::grid_argmax_profit(&p, r, ModelKind::Olg, &g).d_hat;
        assert!((oracle_d - value).abs() < 2e-5, "oracle {r}: {oracle_d}");
        let sol = olg::optimal_durability_olg(&p, r, OlgObjective::WithFirstPeriod, &opts).unwrap();
        assert_eq!(sol.market_mode, OlgMarketMode::ActivePreOwned);
        assert!((sol.d_star - oracle_d).abs() <= g.step());
    }
}

#[test]
fn canonical_profit_and_prices_match_oracle_objective() {
    let p = ModelParams::canonical();
    let opts = SolverOptions::default();
    for r in Regime::ALL {
        let e = two_period::solve(&p, r, &opts).unwrap();
        let o = oracle::two_period_profit(&p, r, e.d_star);
        assert!((e.profit_total - o).abs() < 1e-12);
        assert!((e.welfare - oracle::two_period_welfare(&p, e.d_star)).abs() < 1e-12);
    }
}

#[test]
fn canonical_olg_zero_durability_alternatives() {
    let p = ModelParams::canonical();
    let sol =
        olg::optimal_durability_olg(&p, Regime::Branded, OlgObjective::WithFirstPeriod, &SolverOptions::default())
            .unwrap();
    // n_H v_H / (1 - delta) and (n_H + n_L) v_L / (1 - delta).
    assert!((sol.d0_high_price - 3.0).abs() < 1e-12);
    assert!((sol.d0_mass_market - 8.0).abs() < 1e-12);
    assert!((sol.objective - sol.d0_high_price).abs() < 1e-12);
}
