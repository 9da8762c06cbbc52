//! Seeded random parameter draws over a fixed box, with rejection to the
//! region a property is stated on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::olg::{self, OlgObjective};
use crate::primitives::{validate_params, ModelKind, ModelParams, Regime, SolverOptions};
use crate::two_period::{self, MarketMode};

/// Uniform draw box. `v_H = 1`, `n_L = 1 - n_H` and the canonical cost and
/// quality families are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrawBox {
    pub v_l: (f64, f64),
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub delta: (f64, f64),
    pub n_h: (f64, f64),
}

impl Default for DrawBox {
    fn default() -> Self {
        DrawBox { v_l: (0.5, 1.0), alpha: (0.6, 1.0), beta: (0.0, 0.6), delta: (0.5, 0.95), n_h: (0.1, 0.6) }
    }
}

impl DrawBox {
    /// One raw draw; `v_L` is drawn from the half-open range, the rest from
    /// closed ranges.
    pub fn draw(&self, rng: &mut impl Rng) -> ModelParams {
        let n_h = rng.gen_range(self.n_h.0..=self.n_h.1);
        ModelParams {
            v_h: 1.0,
            v_l: rng.gen_range(self.v_l.0..self.v_l.1),
            alpha: rng.gen_range(self.alpha.0..=self.alpha.1),
            beta: rng.gen_range(self.beta.0..=self.beta.1),
            delta: rng.gen_range(self.delta.0..=self.delta.1),
            n_h,
            n_l: 1.0 - n_h,
            ..ModelParams::canonical()
        }
    }
}

/// Region a draw must fall in to be kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawFilter {
    /// Valid for the model, used market operates under both regimes.
    BothActive,
    /// Both active, and the low type's incentive condition holds at the
    /// optimum of both regimes.
    Certified,
}

pub fn accepts(p: &ModelParams, model: ModelKind, filter: DrawFilter, opts: &SolverOptions) -> bool {
    let active = match model {
        ModelKind::TwoPeriod => Regime::ALL.iter().all(|&r| two_period::activity_margin(p, r) > 0.0),
        ModelKind::Olg => Regime::ALL.iter().all(|&r| olg::olg_margin(p, r, OlgObjective::WithFirstPeriod) > 0.0),
    };
    if !active || !validate_params(p, model, opts).is_ok() {
        return false;
    }
    match filter {
        DrawFilter::BothActive => true,
        DrawFilter::Certified => Regime::ALL.iter().all(|&r| match model {
            ModelKind::TwoPeriod => {
                two_period::solve(p, r, opts).is_ok_and(|e| e.market_mode == MarketMode::ActivePreOwned)
            }
            ModelKind::Olg => olg::optimal_durability_olg(p, r, OlgObjective::WithFirstPeriod, opts)
                .is_ok_and(|s| s.feasibility.is_some_and(|f| f.constraints.young_low_ratio.holds)),
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub model: ModelKind,
    pub filter: DrawFilter,
    pub params: Vec<ModelParams>,
    pub attempts: usize,
}

impl Sample {
    pub fn acceptance_rate(&self) -> f64 {
        self.params.len() as f64 / self.attempts.max(1) as f64
    }
}

/// Attempts allowed per accepted draw before giving up.
pub const MAX_ATTEMPTS_PER_DRAW: usize = 100_000;

/// First `count` accepted draws from the stream identified by `seed` and the
/// (model, filter) pair. The same arguments always give the same draws.
pub fn sample(
    seed: u64,
    model: ModelKind,
    filter: DrawFilter,
    count: usize,
    bounds: &DrawBox,
    opts: &SolverOptions,
) -> Result<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(model, filter));
    let mut params = Vec::with_capacity(count);
    let mut attempts = 0;
    let cap = count.saturating_mul(MAX_ATTEMPTS_PER_DRAW);
    while params.len() < count {
        if attempts >= cap {
            return Err(Error::Config(format!(
                "only {} of {count} {model} draws accepted after {attempts} attempts",
                params.len()
            )));
        }
        attempts += 1;
        let p = bounds.draw(&mut rng);
        if accepts(&p, model, filter, opts) {
            params.push(p);
        }
    }
    Ok(Sample { model, filter, params, attempts })
}

fn stream_id(model: ModelKind, filter: DrawFilter) -> u64 {
    let m = match model {
        ModelKind::TwoPeriod => 0,
        ModelKind::Olg => 1,
    };
    let f = match filter {
        DrawFilter::BothActive => 0,
        DrawFilter::Certified => 1,
    };
    2 * m + f
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_stay_in_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = DrawBox::default();
        for _ in 0..1000 {
            let p = b.draw(&mut rng);
            assert!((0.5..1.0).contains(&p.v_l));
            assert!((0.6..=1.0).contains(&p.alpha));
            assert!((0.0..=0.6).contains(&p.beta));
            assert!((0.5..=0.95).contains(&p.delta));
            assert!((0.1..=0.6).contains(&p.n_h));
            assert_eq!(p.n_h + p.n_l, 1.0);
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let opts = SolverOptions::default();
        let a = sample(7, ModelKind::TwoPeriod, DrawFilter::BothActive, 20, &DrawBox::default(), &opts).unwrap();
        let b = sample(7, ModelKind::TwoPeriod, DrawFilter::BothActive, 20, &DrawBox::default(), &opts).unwrap();
        assert_eq!(a, b);
        let c = sample(8, ModelKind::TwoPeriod, DrawFilter::BothActive, 20, &DrawBox::default(), &opts).unwrap();
        assert_ne!(a.params, c.params);
    }

    #[test]
    fn prefixes_are_stable() {
        let opts = SolverOptions::default();
        let short = sample(3, ModelKind::Olg, DrawFilter::BothActive, 5, &DrawBox::default(), &opts).unwrap();
        let long = sample(3, ModelKind::Olg, DrawFilter::BothActive, 10, &DrawBox::default(), &opts).unwrap();
        assert_eq!(short.params[..], long.params[..5]);
    }

    #[test]
    fn accepted_two_period_draws_have_minority_high_types() {
        let opts = SolverOptions::default();
        let s = sample(11, ModelKind::TwoPeriod, DrawFilter::Certified, 50, &DrawBox::default(), &opts).unwrap();
        assert!(s.params.iter().all(|p| p.n_h < 0.5));
        assert!(s.attempts > 50);
    }

    #[test]
    fn impossible_box_gives_up() {
        let b = DrawBox { v_l: (0.5, 0.51), alpha: (0.6, 0.6), ..DrawBox::default() };
        let opts = SolverOptions::default();
        assert!(matches!(sample(1, ModelKind::Olg, DrawFilter::BothActive, 1, &b, &opts), Err(Error::Config(_))));
    }
}
