//! Solvers and simulators for the differential game played by content
//! providers who pay a platform to accelerate the diffusion of their
//! content over a shared viewer base.
//!
//! Each provider `i` controls a bang-bang acceleration `u_i ∈ {u_min, u_max}`
//! applied to its per-viewer adoption intensity `λ_i`. The fluid state is the
//! vector of watched fractions `x_i(t)` with aggregate `x = Σ x_i` obeying
//! `ẋ_i = λ_i u_i (1 − x)`, and each provider minimizes the discounted cost
//! `∫ e^{−p_i s} (−ẋ_i + γ_i (u_i − u_min)) ds`.
//!
//! The crate provides:
//!
//! - [`model`] — game primitives, validation, and state-feedback strategies;
//! - [`dynamics`] — exact event-driven simulation of the piecewise-exponential
//!   fluid flow;
//! - [`hjb`] — closed-form value-function pieces and switching tests;
//! - [`best_response`] — backward construction of a single player's best
//!   response, plus quadrature cost oracles;
//! - [`equilibrium`] — symmetric exact equilibria, vanishing-discount
//!   thresholds, ε-approximate asymmetric equilibria, and best-response
//!   iteration;
//! - [`finite_horizon`] — finite-horizon value machinery;
//! - [`monte_carlo`] — stochastic viewer-base simulation validating the
//!   fluid approximation;
//! - [`calibrate`] — parameter estimation from viewcount series;
//! - [`scenario`] — the scenario configuration file format.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // !(x > 0) guards reject NaN

pub mod best_response;
pub mod calibrate;
pub mod dynamics;
pub mod equilibrium;
pub mod finite_horizon;
pub mod hjb;
pub mod model;
pub mod monte_carlo;
pub mod scenario;

pub use best_response::{
    best_response, cost_quadrature, degenerate_check, profile_value_function, verify_best_response,
    BestResponseResult,
};
pub use dynamics::{advance, simulate, time_to_reach, StopCondition, Trajectory};
pub use equilibrium::{
    best_response_iteration, epsilon_equilibrium, k_star_from_continuity, symmetric_equilibrium,
    symmetric_existence, symmetric_threshold, vanishing_threshold, EquilibriumKind,
    EquilibriumResult, IterationMode,
};
pub use model::{ControlLevel, GameConfig, Horizon, PlayerParams, PlayerStrategy, StrategyProfile};
