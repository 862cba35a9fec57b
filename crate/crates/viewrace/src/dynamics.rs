//! Exact event-driven simulation of the fluid dynamics.
//!
//! On any interval where all controls are constant the aggregate state obeys
//! `ẋ = a (1 − x)` with `a = Σ λ_i u_i`, whose solution is
//!
//! ```text
//! x(t) = 1 − (1 − x(t0)) · exp(−a (t − t0))
//! ```
//!
//! and the per-player states follow the aggregate proportionally:
//! `x_i(t) = x_i(t0) + (λ_i u_i / a) (x(t) − x(t0))`. Strategy breakpoints
//! are therefore located exactly by inverting the segment solution; no
//! step-size event hunting is involved.

use std::io::{self, Write};

use thiserror::Error;

use crate::model::{ControlLevel, GameConfig, StrategyProfile};

/// Saturation tolerance terminating infinite-horizon runs: simulation stops
/// once `x ≥ 1 − SATURATION_TOL`. Level changes scheduled beyond that state
/// are discarded; their cost impact is covered by [`tail_bound`].
pub const SATURATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state {x} is outside [0, 1)")]
    StateOutOfRange { x: f64 },
    #[error("target {x_to} is not reachable from {x_from}")]
    UnreachableTarget { x_from: f64, x_to: f64 },
    #[error("aggregate rate must be positive (got {a})")]
    NonpositiveRate { a: f64 },
    #[error("time step must be nonnegative (got {dt})")]
    NegativeStep { dt: f64 },
}

/// Advances the aggregate state by `dt` days under constant rate `a`.
pub fn advance(x_agg: f64, a: f64, dt: f64) -> Result<f64, DynamicsError> {
    if !(0.0..1.0).contains(&x_agg) {
        return Err(DynamicsError::StateOutOfRange { x: x_agg });
    }
    if !(a > 0.0) {
        return Err(DynamicsError::NonpositiveRate { a });
    }
    if !(dt >= 0.0) {
        return Err(DynamicsError::NegativeStep { dt });
    }
    // 1 − (1−x)e^{−a dt}, written via expm1 so that dt = 0 is exact. The
    // result stays strictly below 1: saturation is reached only in the limit.
    Ok((x_agg + (1.0 - x_agg) * (-(-a * dt).exp_m1())).min(1.0 - f64::EPSILON / 2.0))
}

/// Days needed for the aggregate state to move from `x_from` to `x_to`
/// under constant rate `a`; inverse of [`advance`].
pub fn time_to_reach(x_from: f64, x_to: f64, a: f64) -> Result<f64, DynamicsError> {
    if !(0.0..1.0).contains(&x_from) {
        return Err(DynamicsError::StateOutOfRange { x: x_from });
    }
    if !(a > 0.0) {
        return Err(DynamicsError::NonpositiveRate { a });
    }
    if x_to >= 1.0 || x_to < x_from {
        return Err(DynamicsError::UnreachableTarget { x_from, x_to });
    }
    Ok(((-x_from).ln_1p() - (-x_to).ln_1p()) / a)
}

/// Discounted bound on the cost accumulated by player `i` after time `t`:
/// `e^{−p t} (λ u_max + γ (u_max − u_min)) / p`. Used to report the error
/// from discarding level changes beyond the saturation state.
pub fn tail_bound(config: &GameConfig, i: usize, t: f64) -> f64 {
    let p = &config.players[i];
    (-p.p * t).exp() * (p.lambda * config.u_max + p.gamma * (config.u_max - config.u_min)) / p.p
}

/// Maximal time span with constant controls for every player.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySegment {
    pub t_start: f64,
    /// `f64::INFINITY` for the terminal segment of an infinite-horizon run.
    pub t_end: f64,
    /// Per-player fractions at `t_start`.
    pub x_start: Vec<f64>,
    /// Aggregate fraction at `t_start`.
    pub x_agg_start: f64,
    /// Aggregate rate `Σ λ_i u_i` on the segment (1/day).
    pub a: f64,
    /// Per-player adoption rates `λ_i u_i` on the segment (1/day).
    pub rates: Vec<f64>,
    /// Control levels held on the segment.
    pub levels: Vec<ControlLevel>,
}

impl TrajectorySegment {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn x_agg_at(&self, t: f64) -> f64 {
        debug_assert!(t >= self.t_start);
        self.x_agg_start + (1.0 - self.x_agg_start) * (-(-self.a * (t - self.t_start)).exp_m1())
    }

    pub fn x_at(&self, t: f64) -> Vec<f64> {
        let dx = self.x_agg_at(t) - self.x_agg_start;
        self.x_start
            .iter()
            .zip(&self.rates)
            .map(|(xi, ri)| xi + ri / self.a * dx)
            .collect()
    }
}

/// Exact piecewise-exponential trajectory of the fluid game.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub segments: Vec<TrajectorySegment>,
    /// Initial per-player fractions.
    pub initial: Vec<f64>,
    /// Time at which the stop condition was met (saturation time for
    /// infinite-horizon runs, `t_end` for timed runs).
    pub stop_time: f64,
    /// Aggregate state at `stop_time`.
    pub stop_x: f64,
    /// True when strategy breakpoints beyond the stop state were discarded.
    pub truncated: bool,
    /// Numeric values of the two control levels, for CSV export.
    pub u_min_value: f64,
    pub u_max_value: f64,
}

impl Trajectory {
    fn segment_index_at(&self, t: f64) -> usize {
        match self.segments.iter().position(|s| t < s.t_end) {
            Some(i) => i,
            None => self.segments.len() - 1,
        }
    }

    pub fn x_agg_at(&self, t: f64) -> f64 {
        self.segments[self.segment_index_at(t)].x_agg_at(t)
    }

    pub fn x_at(&self, t: f64) -> Vec<f64> {
        self.segments[self.segment_index_at(t)].x_at(t)
    }

    /// Writes the trajectory as CSV with header
    /// `t, x_1..x_N, x_agg, u_1..u_N`: one row per segment boundary plus a
    /// final row at the stop time, optionally interleaved with uniform
    /// samples every `sample_dt` days.
    pub fn write_csv<W: Write>(&self, w: &mut W, sample_dt: Option<f64>) -> io::Result<()> {
        let n = self.initial.len();
        write!(w, "t")?;
        for i in 1..=n {
            write!(w, ",x_{i}")?;
        }
        write!(w, ",x_agg")?;
        for i in 1..=n {
            write!(w, ",u_{i}")?;
        }
        writeln!(w)?;

        let mut times: Vec<f64> = self.segments.iter().map(|s| s.t_start).collect();
        times.push(self.stop_time);
        if let Some(dt) = sample_dt {
            if dt > 0.0 {
                let mut t = dt;
                while t < self.stop_time {
                    times.push(t);
                    t += dt;
                }
            }
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();

        for &t in &times {
            let seg = &self.segments[self.segment_index_at(t)];
            write!(w, "{t}")?;
            for xi in seg.x_at(t) {
                write!(w, ",{xi}")?;
            }
            write!(w, ",{}", seg.x_agg_at(t))?;
            for &lv in &seg.levels {
                match lv {
                    ControlLevel::Min => write!(w, ",{}", self.u_min_value)?,
                    ControlLevel::Max => write!(w, ",{}", self.u_max_value)?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Stop condition of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCondition {
    /// Stop once `x ≥ 1 − tol_x`.
    Saturation { tol_x: f64 },
    /// Stop at a fixed time (days).
    Time { t_end: f64 },
}

impl Default for StopCondition {
    fn default() -> Self {
        StopCondition::Saturation {
            tol_x: SATURATION_TOL,
        }
    }
}

/// Simulates the fluid game under a stationary strategy profile.
///
/// Event-driven and exact: controls are constant on each segment, the next
/// event is the earliest strategy breakpoint crossing (located by
/// [`time_to_reach`]) or the stop condition, and states update by the
/// componentwise closed form. Breakpoints crossed simultaneously by several
/// players are processed as one event. The segment count is bounded by the
/// profile's total breakpoint count plus one.
///
/// # Panics
///
/// Panics when the configuration is invalid or the profile length does not
/// match the player count; callers validate first.
pub fn simulate(config: &GameConfig, profile: &StrategyProfile, stop: StopCondition) -> Trajectory {
    let violations = config.validate();
    assert!(
        violations.is_empty(),
        "invalid configuration: {violations:?}"
    );
    assert_eq!(profile.len(), config.n_players(), "one strategy per player");

    let n = config.n_players();
    let initial: Vec<f64> = config.players.iter().map(|p| p.z).collect();
    let mut x: Vec<f64> = initial.clone();
    let mut x_agg = config.z_total();
    let mut t = 0.0;
    let mut segments = Vec::new();
    let truncated;

    let x_stop = match stop {
        StopCondition::Saturation { tol_x } => 1.0 - tol_x,
        StopCondition::Time { .. } => 1.0 - SATURATION_TOL,
    };
    let t_stop = match stop {
        StopCondition::Time { t_end } => Some(t_end),
        StopCondition::Saturation { .. } => None,
    };

    loop {
        let levels = profile.levels_above(x_agg);
        let rates: Vec<f64> = config
            .players
            .iter()
            .zip(&levels)
            .map(|(p, &l)| p.lambda * config.control_value(l))
            .collect();
        let a: f64 = rates.iter().sum();

        let next_bp = profile
            .strategies()
            .iter()
            .filter_map(|s| s.next_breakpoint_above(x_agg))
            .fold(f64::INFINITY, f64::min);

        let segment = |t_end: f64| TrajectorySegment {
            t_start: t,
            t_end,
            x_start: x.clone(),
            x_agg_start: x_agg,
            a,
            rates: rates.clone(),
            levels: levels.clone(),
        };

        // Event state: the earliest breakpoint, unless saturation or the
        // time stop preempts it.
        if next_bp >= x_stop || x_agg >= x_stop {
            truncated = next_bp.is_finite();
            let t_sat = if x_agg >= x_stop {
                t
            } else {
                t + time_to_reach(x_agg, x_stop, a).expect("stop state reachable")
            };
            match t_stop {
                None => {
                    segments.push(segment(f64::INFINITY));
                    let stop_x = if x_agg >= x_stop { x_agg } else { x_stop };
                    return Trajectory {
                        u_min_value: config.u_min,
                        u_max_value: config.u_max,
                        segments,
                        initial,
                        stop_time: t_sat,
                        stop_x,
                        truncated,
                    };
                }
                Some(te) => {
                    let seg = segment(te.max(t));
                    let stop_x = seg.x_agg_at(te.max(t));
                    segments.push(seg);
                    return Trajectory {
                        u_min_value: config.u_min,
                        u_max_value: config.u_max,
                        segments,
                        initial,
                        stop_time: te.max(t),
                        stop_x,
                        truncated,
                    };
                }
            }
        }

        let dt = time_to_reach(x_agg, next_bp, a).expect("breakpoint ahead of state");
        if let Some(te) = t_stop {
            if t + dt >= te {
                let seg = segment(te);
                let stop_x = seg.x_agg_at(te);
                segments.push(seg);
                return Trajectory {
                    u_min_value: config.u_min,
                    u_max_value: config.u_max,
                    segments,
                    initial,
                    stop_time: te,
                    stop_x,
                    truncated: false,
                };
            }
        }

        segments.push(segment(t + dt));
        for i in 0..n {
            x[i] += rates[i] / a * (next_bp - x_agg);
        }
        t += dt;
        x_agg = next_bp;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PlayerParams;

    fn benchmark_config() -> GameConfig {
        GameConfig::symmetric(10, PlayerParams::new(100.0, 70.0, 100.0), 1.0, 10.0)
    }

    #[test]
    fn advance_zero_step_is_identity() {
        assert_eq!(advance(0.37, 123.0, 0.0).unwrap(), 0.37);
    }

    #[test]
    fn advance_matches_closed_form() {
        let got = advance(0.0, 1000.0, 0.001).unwrap();
        let expect = 1.0 - (-1.0f64).exp();
        assert!((got - expect).abs() < 1e-15, "got {got}");
        assert!((got - 0.632121).abs() < 1e-6);
    }

    #[test]
    fn advance_saturates_in_the_long_run() {
        let got = advance(0.5, 50.0, 1e6).unwrap();
        assert!(got < 1.0 && got > 1.0 - 1e-12);
    }

    #[test]
    fn advance_rejects_saturated_state() {
        assert!(matches!(
            advance(1.0, 10.0, 0.1),
            Err(DynamicsError::StateOutOfRange { .. })
        ));
    }

    #[test]
    fn time_to_reach_identity_and_inverse() {
        assert_eq!(time_to_reach(0.4, 0.4, 10.0).unwrap(), 0.0);
        let t = time_to_reach(0.0, 1.0 - (-1.0f64).exp(), 1000.0).unwrap();
        assert!((t - 0.001).abs() < 1e-15);
    }

    #[test]
    fn time_to_reach_rejects_backward_and_saturated_targets() {
        assert!(time_to_reach(0.5, 0.4, 10.0).is_err());
        assert!(time_to_reach(0.5, 1.0, 10.0).is_err());
    }

    #[test]
    fn advance_time_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let x_from: f64 = rng.random_range(0.0..0.99);
            let x_to: f64 = rng.random_range(x_from..0.999);
            let a: f64 = rng.random_range(1.0..1e5);
            let t = time_to_reach(x_from, x_to, a).unwrap();
            let back = advance(x_from, a, t).unwrap();
            assert!(
                (back - x_to).abs() <= 1e-12,
                "{x_from} -> {x_to} via {a}: {back}"
            );
        }
    }

    #[test]
    fn all_min_profile_is_a_single_exponential_segment() {
        let config = benchmark_config();
        let traj = simulate(
            &config,
            &StrategyProfile::all_min(10),
            StopCondition::default(),
        );
        assert_eq!(traj.segments.len(), 1);
        assert_eq!(traj.segments[0].a, 1000.0);
        assert!(!traj.truncated);
        let t: f64 = 0.0005;
        let expect = 1.0 - (-1000.0 * t).exp();
        assert!((traj.x_agg_at(t) - expect).abs() < 1e-14);
    }

    #[test]
    fn zero_thresholds_match_all_min() {
        let config = benchmark_config();
        let zeroed = StrategyProfile::from_thresholds(&[0.0; 10]);
        let a = simulate(&config, &zeroed, StopCondition::default());
        let b = simulate(
            &config,
            &StrategyProfile::all_min(10),
            StopCondition::default(),
        );
        assert_eq!(a.segments.len(), b.segments.len());
        for t in [1e-4, 1e-3, 5e-3] {
            assert!((a.x_agg_at(t) - b.x_agg_at(t)).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_threshold_profile_has_two_segments() {
        let config = benchmark_config();
        let profile = StrategyProfile::from_thresholds(&[0.23; 10]);
        let traj = simulate(&config, &profile, StopCondition::default());
        assert_eq!(traj.segments.len(), 2);
        assert_eq!(traj.segments[0].a, 10000.0);
        assert_eq!(traj.segments[1].a, 1000.0);
        assert!((traj.segments[1].x_agg_start - 0.23).abs() < 1e-15);
        assert_eq!(traj.segments[1].t_end, f64::INFINITY);
        // all players cross the common threshold in one event
        let t1 = traj.segments[0].t_end;
        assert!((t1 - time_to_reach(0.0, 0.23, 10000.0).unwrap()).abs() < 1e-18);
    }

    #[test]
    fn per_player_states_sum_to_aggregate() {
        let mut config = benchmark_config();
        config.players[0].lambda = 180.0;
        config.players[4].z = 0.05;
        let profile =
            StrategyProfile::from_thresholds(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.85, 0.9]);
        let traj = simulate(&config, &profile, StopCondition::default());
        for seg in &traj.segments {
            let sum: f64 = seg.x_start.iter().sum();
            assert!((sum - seg.x_agg_start).abs() <= 1e-12);
        }
        for t in [1e-4, 1e-3, 1e-2] {
            let sum: f64 = traj.x_at(t).iter().sum();
            assert!((sum - traj.x_agg_at(t)).abs() <= 1e-12);
        }
    }

    #[test]
    fn monotone_and_segment_count_bounded() {
        let config = benchmark_config();
        let profile =
            StrategyProfile::from_thresholds(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.85, 0.9]);
        let traj = simulate(&config, &profile, StopCondition::default());
        assert!(traj.segments.len() <= 11);
        let mut prev = -1.0;
        for seg in &traj.segments {
            assert!(seg.x_agg_start > prev);
            prev = seg.x_agg_start;
        }
        // realized controls never increase for threshold strategies
        for pair in traj.segments.windows(2) {
            for i in 0..10 {
                assert!(pair[1].rates[i] <= pair[0].rates[i]);
            }
        }
    }

    #[test]
    fn timed_stop_cuts_the_trajectory() {
        let config = benchmark_config();
        let profile = StrategyProfile::from_thresholds(&[0.23; 10]);
        let traj = simulate(&config, &profile, StopCondition::Time { t_end: 1e-5 });
        assert_eq!(traj.segments.len(), 1);
        assert_eq!(traj.stop_time, 1e-5);
        assert!(traj.stop_x < 0.23);
    }

    #[test]
    fn csv_has_header_and_boundary_rows() {
        let config = benchmark_config();
        let profile = StrategyProfile::from_thresholds(&[0.23; 10]);
        let traj = simulate(&config, &profile, StopCondition::default());
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,x_1,x_2,x_3,x_4,x_5,x_6,x_7,x_8,x_9,x_10,x_agg,u_1,u_2,u_3,u_4,u_5,u_6,u_7,u_8,u_9,u_10"
        );
        assert_eq!(text.lines().count(), 1 + 3); // header + 2 boundaries + stop row
    }

    #[test]
    fn csv_sampling_adds_rows() {
        let config = benchmark_config();
        let profile = StrategyProfile::from_thresholds(&[0.23; 10]);
        let traj = simulate(&config, &profile, StopCondition::default());
        let mut plain = Vec::new();
        traj.write_csv(&mut plain, None).unwrap();
        let mut sampled = Vec::new();
        traj.write_csv(&mut sampled, Some(1e-4)).unwrap();
        assert!(sampled.len() > plain.len());
    }
}
