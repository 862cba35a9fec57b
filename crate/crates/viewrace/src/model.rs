//! Game primitives: player parameters, configuration, bang-bang control
//! levels, and piecewise-constant state-feedback strategies.

use std::fmt;

use thiserror::Error;

/// Per-player primitives of the promotion game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlayerParams {
    /// Per-viewer view intensity (1/day).
    pub lambda: f64,
    /// Cost rate per unit of acceleration above `u_min` (utility/day).
    pub gamma: f64,
    /// Discount rate (1/day); must be positive for infinite-horizon work.
    pub p: f64,
    /// Initial watched fraction, in `[0, 1)`. Zero unless stated otherwise.
    pub z: f64,
}

impl PlayerParams {
    /// Parameters with the default initial fraction `z = 0`.
    pub fn new(lambda: f64, gamma: f64, p: f64) -> Self {
        Self {
            lambda,
            gamma,
            p,
            z: 0.0,
        }
    }
}

/// Game horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Infinite,
    Finite {
        /// Horizon length in days.
        tau: f64,
    },
}

/// Bang-bang control level. Only the extremal accelerations are
/// representable; the game's best responses never need interior values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlLevel {
    Min,
    Max,
}

impl ControlLevel {
    pub fn other(self) -> Self {
        match self {
            ControlLevel::Min => ControlLevel::Max,
            ControlLevel::Max => ControlLevel::Min,
        }
    }
}

/// Full game configuration shared by every solver.
#[derive(Debug, Clone, PartialEq)]
pub struct GameConfig {
    pub players: Vec<PlayerParams>,
    /// Baseline acceleration, `1 ≤ u_min < u_max`.
    pub u_min: f64,
    /// Maximal acceleration.
    pub u_max: f64,
    pub horizon: Horizon,
}

/// A violated configuration constraint. Violations are data, not failures:
/// [`GameConfig::validate`] reports all of them at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Name of the offending field, e.g. `players[2].lambda`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl GameConfig {
    /// Configuration with `n` identical players.
    pub fn symmetric(n: usize, params: PlayerParams, u_min: f64, u_max: f64) -> Self {
        Self {
            players: vec![params; n],
            u_min,
            u_max,
            horizon: Horizon::Infinite,
        }
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    /// Numeric acceleration for a control level.
    pub fn control_value(&self, level: ControlLevel) -> f64 {
        match level {
            ControlLevel::Min => self.u_min,
            ControlLevel::Max => self.u_max,
        }
    }

    /// Sum of the players' initial fractions.
    pub fn z_total(&self) -> f64 {
        self.players.iter().map(|p| p.z).sum()
    }

    /// True when all players share identical parameters.
    pub fn is_symmetric(&self) -> bool {
        self.players.windows(2).all(|w| w[0] == w[1])
    }

    /// Checks every type invariant and returns the violations found.
    /// An empty list means the configuration is usable by all solvers.
    pub fn validate(&self) -> Vec<Violation> {
        fn viol(field: String, message: String) -> Violation {
            Violation { field, message }
        }
        let mut v = Vec::new();

        if self.players.is_empty() {
            v.push(viol(
                "players".into(),
                "at least one player is required".into(),
            ));
        }
        if !(self.u_min >= 1.0) {
            v.push(viol(
                "u_min".into(),
                format!("u_min must be ≥ 1 (got {})", self.u_min),
            ));
        }
        if !(self.u_max > self.u_min) {
            v.push(viol(
                "u_max".into(),
                format!(
                    "u_max must exceed u_min (got {} ≤ {})",
                    self.u_max, self.u_min
                ),
            ));
        }
        if !self.u_max.is_finite() {
            v.push(viol("u_max".into(), "u_max must be finite".into()));
        }
        if let Horizon::Finite { tau } = self.horizon {
            if !(tau > 0.0) {
                v.push(viol(
                    "horizon.tau".into(),
                    format!("tau must be positive (got {tau})"),
                ));
            }
        }
        for (i, p) in self.players.iter().enumerate() {
            if !(p.lambda > 0.0) {
                v.push(viol(
                    format!("players[{i}].lambda"),
                    format!("lambda must be positive (got {})", p.lambda),
                ));
            }
            if !(p.gamma > 0.0) {
                v.push(viol(
                    format!("players[{i}].gamma"),
                    format!("gamma must be positive (got {})", p.gamma),
                ));
            }
            if !(p.p >= 0.0) {
                v.push(viol(
                    format!("players[{i}].p"),
                    format!("discount rate must be nonnegative (got {})", p.p),
                ));
            }
            if matches!(self.horizon, Horizon::Infinite) && !(p.p > 0.0) {
                v.push(viol(
                    format!("players[{i}].p"),
                    "p>0 required for infinite horizon".into(),
                ));
            }
            if !(0.0..1.0).contains(&p.z) {
                v.push(viol(
                    format!("players[{i}].z"),
                    format!("initial fraction must lie in [0,1) (got {})", p.z),
                ));
            }
        }
        let zt = self.z_total();
        if !(zt < 1.0) {
            v.push(viol(
                "players.z".into(),
                format!("initial fractions must sum below 1 (got {zt})"),
            ));
        }
        v
    }

    /// Aggregate rate `a = Σ_i λ_i u_i` for a level assignment (1/day).
    ///
    /// Strictly positive for any valid configuration since `u_min ≥ 1`.
    pub fn aggregate_rate(&self, levels: &[ControlLevel]) -> f64 {
        assert_eq!(levels.len(), self.players.len(), "one level per player");
        self.players
            .iter()
            .zip(levels)
            .map(|(p, &l)| p.lambda * self.control_value(l))
            .sum()
    }

    /// Aggregate rate of everyone but player `i`: `a_{−i} = a − λ_i u_i`.
    pub fn aggregate_rate_excluding(&self, levels: &[ControlLevel], i: usize) -> f64 {
        assert_eq!(levels.len(), self.players.len(), "one level per player");
        self.players
            .iter()
            .zip(levels)
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (p, &l))| p.lambda * self.control_value(l))
            .sum()
    }
}

/// Stationary single-threshold strategy: play `Max` while the aggregate
/// state satisfies `x ≤ xhat`, drop to `Min` above it. The boundary state
/// plays `Max`; the choice is measure-zero in the dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdStrategy {
    pub xhat: f64,
}

impl ThresholdStrategy {
    pub fn new(xhat: f64) -> Self {
        Self { xhat }
    }

    pub fn control(&self, x: f64) -> ControlLevel {
        if x <= self.xhat {
            ControlLevel::Max
        } else {
            ControlLevel::Min
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("breakpoints must be strictly increasing inside (0, 1)")]
    InvalidBreakpoints,
    #[error("expected one control level per sub-interval ({expected}, got {got})")]
    LevelCountMismatch { expected: usize, got: usize },
}

/// Piecewise-constant state-feedback strategy of one player: finitely many
/// breakpoints `0 < β_1 < … < β_m < 1` with a control level on each
/// sub-interval of `[0, 1)`. A [`ThresholdStrategy`] is the one-breakpoint
/// special case.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerStrategy {
    breakpoints: Vec<f64>,
    levels: Vec<ControlLevel>,
}

impl PlayerStrategy {
    /// Strategy holding one level on all of `[0, 1)`.
    pub fn constant(level: ControlLevel) -> Self {
        Self {
            breakpoints: Vec::new(),
            levels: vec![level],
        }
    }

    /// Threshold strategy with breakpoint `xhat`. Degenerate thresholds
    /// normalize to the equivalent constant strategy (`xhat ≤ 0` acts as
    /// all-`Min` except on a measure-zero set, `xhat ≥ 1` as all-`Max`).
    pub fn threshold(xhat: f64) -> Self {
        if xhat <= 0.0 {
            Self::constant(ControlLevel::Min)
        } else if xhat >= 1.0 {
            Self::constant(ControlLevel::Max)
        } else {
            Self {
                breakpoints: vec![xhat],
                levels: vec![ControlLevel::Max, ControlLevel::Min],
            }
        }
    }

    /// Builds a strategy from raw breakpoints and per-interval levels.
    /// Breakpoints where the level does not change are dropped.
    pub fn new(breakpoints: Vec<f64>, levels: Vec<ControlLevel>) -> Result<Self, StrategyError> {
        if levels.len() != breakpoints.len() + 1 {
            return Err(StrategyError::LevelCountMismatch {
                expected: breakpoints.len() + 1,
                got: levels.len(),
            });
        }
        let increasing = breakpoints.windows(2).all(|w| w[0] < w[1]);
        let in_range = breakpoints.iter().all(|b| (0.0 < *b) && (*b < 1.0));
        if !increasing || !in_range {
            return Err(StrategyError::InvalidBreakpoints);
        }
        let mut bp = Vec::with_capacity(breakpoints.len());
        let mut lv = vec![levels[0]];
        for (b, l) in breakpoints.iter().zip(&levels[1..]) {
            if *l != *lv.last().unwrap() {
                bp.push(*b);
                lv.push(*l);
            }
        }
        Ok(Self {
            breakpoints: bp,
            levels: lv,
        })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[ControlLevel] {
        &self.levels
    }

    /// Pointwise control at state `x`. Sub-intervals are closed on the
    /// right end of the lower piece, matching the threshold convention
    /// (play the lower-interval level at the breakpoint itself).
    pub fn level_at(&self, x: f64) -> ControlLevel {
        let k = self.breakpoints.iter().filter(|b| **b < x).count();
        self.levels[k]
    }

    /// Control on the open interval immediately above `x`; this is the
    /// level realized by a trajectory segment starting at `x`.
    pub fn level_above(&self, x: f64) -> ControlLevel {
        let k = self.breakpoints.iter().filter(|b| **b <= x).count();
        self.levels[k]
    }

    pub fn next_breakpoint_above(&self, x: f64) -> Option<f64> {
        self.breakpoints.iter().copied().find(|b| *b > x)
    }

    /// `Some(xhat)` when the strategy is exactly one switch from `Max`
    /// down to `Min`.
    pub fn as_threshold(&self) -> Option<f64> {
        if self.breakpoints.len() == 1 && self.levels == [ControlLevel::Max, ControlLevel::Min] {
            Some(self.breakpoints[0])
        } else {
            None
        }
    }

    pub fn is_constant(&self, level: ControlLevel) -> bool {
        self.breakpoints.is_empty() && self.levels == [level]
    }

    /// Equivalent threshold for reporting: the single breakpoint for
    /// threshold strategies, `0` for constant `Min`, `1` for constant `Max`.
    pub fn reporting_threshold(&self) -> Option<f64> {
        if let Some(x) = self.as_threshold() {
            Some(x)
        } else if self.is_constant(ControlLevel::Min) {
            Some(0.0)
        } else if self.is_constant(ControlLevel::Max) {
            Some(1.0)
        } else {
            None
        }
    }
}

/// One stationary strategy per player.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    strategies: Vec<PlayerStrategy>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<PlayerStrategy>) -> Self {
        Self { strategies }
    }

    pub fn all_min(n: usize) -> Self {
        Self {
            strategies: vec![PlayerStrategy::constant(ControlLevel::Min); n],
        }
    }

    pub fn all_max(n: usize) -> Self {
        Self {
            strategies: vec![PlayerStrategy::constant(ControlLevel::Max); n],
        }
    }

    pub fn from_thresholds(thresholds: &[f64]) -> Self {
        Self {
            strategies: thresholds
                .iter()
                .map(|&x| PlayerStrategy::threshold(x))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn get(&self, i: usize) -> &PlayerStrategy {
        &self.strategies[i]
    }

    pub fn set(&mut self, i: usize, strategy: PlayerStrategy) {
        self.strategies[i] = strategy;
    }

    pub fn strategies(&self) -> &[PlayerStrategy] {
        &self.strategies
    }

    /// Per-player levels realized on the open interval just above `x`.
    pub fn levels_above(&self, x: f64) -> Vec<ControlLevel> {
        self.strategies.iter().map(|s| s.level_above(x)).collect()
    }

    /// Sorted, deduplicated breakpoints of all players inside `(lo, hi)`,
    /// optionally excluding one player's strategy.
    pub fn breakpoints_between(&self, lo: f64, hi: f64, exclude: Option<usize>) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .strategies
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != exclude)
            .flat_map(|(_, s)| s.breakpoints.iter().copied())
            .filter(|b| *b > lo && *b < hi)
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    /// Per-player reporting thresholds when every strategy has one.
    pub fn thresholds(&self) -> Option<Vec<f64>> {
        self.strategies
            .iter()
            .map(|s| s.reporting_threshold())
            .collect()
    }
}
