//! Equilibrium durability, prices, profits and welfare for a durable-goods
//! monopolist whose used units trade on a pre-owned marketplace run either by
//! a third party or by the firm itself (branded recommerce).
//!
//! Two models are covered: a two-period model and an infinite-horizon model
//! with overlapping two-period-lived generations. Every analytic solver has a
//! brute-force counterpart in [`oracle`].

pub mod error;
pub mod olg;
pub mod oracle;
pub mod primitives;
pub mod roots;
pub mod sampling;
pub mod statics;
pub mod two_period;
pub mod verify;

pub use error::{Error, Result};
pub use primitives::{
    validate_params, Derivatives, FunctionSpec, ModelKind, ModelParams, Regime, SolverOptions,
    ValidationReport,
};
pub use olg::{ActionProfile, OlgMarketMode, OlgObjective, OlgState, SteadyStateSolution};
pub use oracle::GridSpec;
pub use sampling::{DrawBox, DrawFilter};
pub use statics::Parameter;
pub use two_period::{MarketMode, TwoPeriodEquilibrium};
pub use verify::{VerifyReport, VerifySpec};
