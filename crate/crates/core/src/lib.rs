//! Optimal participation of demand-response assets in incentive-based programs.
//!
//! An asset promises a curtailment `C` for a delivery window, is paid `pi_r * C`
//! up front, and pays `pi_p` per kWh of shortfall if an event is called. The crate
//! covers the whole workflow around that contract:
//!
//! - [`program`]: program economics and per-window settlement.
//! - [`distribution`]: empirical and normal curtailment-capability models.
//! - [`estimation`]: capability distributions from metered hourly load.
//! - [`contract`]: expected profit, CVaR, the risk-averse optimal contract and
//!   its brute-force oracle.
//! - [`aggregation`]: joint contracts, profit differentials and the
//!   complementarity metric used to rank aggregation partners.
//! - [`simulation`]: seeded Monte Carlo settlement used to validate the
//!   analytic quantities.
//! - [`cli`]: the `estimate | contract | aggregate | simulate` pipeline behind
//!   the `drpart` binary.

pub mod aggregation;
pub mod cli;
pub mod contract;
pub mod distribution;
mod error;
pub mod estimation;
pub mod normal;
pub mod program;
pub mod rng;
pub mod simulation;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
