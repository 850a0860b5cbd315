//! Price competition in a secondary spectrum market where each primary may
//! pay to learn whether its competitor's channel is free.
//!
//! [`market`] validates inputs and classifies regimes, [`equilibria`] builds
//! closed-form equilibrium profiles from [`dist`] price distributions,
//! [`verifier`] searches for profitable deviations, [`simulator`] replays
//! the game, and [`extensions`] covers the n-primary and two-state variants.

pub mod dist;
pub mod equilibria;
pub mod error;
pub mod extensions;
pub mod market;
pub mod simulator;
pub mod verifier;

pub use dist::{HyperbolicSegment, PriceCdf, Violation};
pub use equilibria::{
    ne_basic, ne_estimation_error, ne_unequal_availability, ne_unequal_costs, solve,
    solve_error_mixing, EquilibriumProfile, InfoState, PrimaryStrategy,
};
pub use error::{Error, Result};
pub use market::{thresholds, validate_params, CostBand, MarketParams, Regime, Scenario};
pub use simulator::{simulate, welfare_sweep, SimStats};
pub use verifier::{
    best_response, certify_ne, expected_payoff, structural_checks, win_probability,
    DeviationReport,
};
