//! Equilibrium computation: the symmetric exact Nash equilibrium, the
//! vanishing-discount threshold and the ε-approximate asymmetric
//! equilibrium it induces, and a general best-response-iteration fallback.

use rayon::prelude::*;
use thiserror::Error;

use crate::best_response::{best_response, cost_quadrature, BestResponseError};
use crate::dynamics::time_to_reach;
use crate::hjb::{switching_coefficient, ValueFunction, ValuePiece};
use crate::model::{ControlLevel, GameConfig, PlayerParams, StrategyProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumKind {
    /// Everyone at `u_min`; arises when no player can profitably switch.
    DegenerateAllMin,
    /// The unique symmetric threshold equilibrium.
    SymmetricExact,
    /// Threshold profile from the vanishing-discount construction; exact
    /// up to the reported ε.
    EpsilonApprox,
    /// Fixed point reached by round-robin best responses.
    IterationFixedPoint,
}

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub profile: StrategyProfile,
    pub kind: EquilibriumKind,
    /// Maximal unilateral improvement any player could still realize;
    /// zero for the exact kinds.
    pub epsilon: f64,
    /// Common threshold of the symmetric equilibrium.
    pub x_star: Option<f64>,
    /// Continuity constant of the symmetric equilibrium (from the
    /// switching-interval continuity equation).
    pub k_star: Option<f64>,
    /// Per-player switch times (days); infinite for players that never
    /// switch.
    pub switch_times: Option<Vec<f64>>,
    /// Per-player unilateral improvements backing `epsilon`, when measured.
    pub epsilon_contributions: Option<Vec<f64>>,
    /// Per-round maximal improvements of the iteration kinds.
    pub iteration_trace: Option<Vec<f64>>,
}

#[derive(Debug, Error)]
pub enum EquilibriumError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("continuity equation has no usable solution (K* = {k_star})")]
    ContinuityInfeasible { k_star: f64 },
    #[error(
        "switch-back detected: player {player} prefers accelerating again at x = {state} (threshold {threshold})"
    )]
    OrderViolation {
        player: usize,
        threshold: f64,
        state: f64,
    },
    #[error("no fixed point within {rounds} rounds (last improvement {last_improvement})")]
    NonConvergence {
        rounds: usize,
        last_improvement: f64,
        trace: Vec<f64>,
        last_profile: StrategyProfile,
    },
    #[error(transparent)]
    BestResponse(#[from] BestResponseError),
}

/// Existence test for the symmetric switching equilibrium:
/// `λ (1 − u_min λ / (p + N λ u_min)) − γ > 0`.
pub fn symmetric_existence(lambda: f64, gamma: f64, p: f64, n: usize, u_min: f64) -> bool {
    lambda * (1.0 - u_min * lambda / (p + n as f64 * lambda * u_min)) - gamma > 0.0
}

/// The symmetric equilibrium threshold
/// `x* = 1 − γ (p + N λ u_min) / (λ (p + (N−1) u_min λ))`.
pub fn symmetric_threshold(lambda: f64, gamma: f64, p: f64, n: usize, u_min: f64) -> f64 {
    let n = n as f64;
    1.0 - gamma * (p + n * lambda * u_min) / (lambda * (p + (n - 1.0) * u_min * lambda))
}

/// Solves the switching-interval continuity equation for `K*`:
///
/// ```text
/// K* (1−x*)^{−p/(λNu_max)} − λ u_max (1−x*)/(p+λNu_max) − (γ/p)(u_max−u_min)
///     = −λ u_min (1−x*)/(p+Nλu_min)
/// ```
///
/// The equation is linear in `K*`; the result is positive whenever
/// `u_max λ/(p+Nλu_max) > u_min λ/(p+Nλu_min)`, which holds for any
/// admissible parameters.
pub fn k_star_from_continuity(
    lambda: f64,
    gamma: f64,
    p: f64,
    n: usize,
    u_min: f64,
    u_max: f64,
    x_star: f64,
) -> f64 {
    let n = n as f64;
    let y = 1.0 - x_star;
    let a_max = lambda * n * u_max;
    let a_min = lambda * n * u_min;
    let rhs = -lambda * u_min * y / (p + a_min)
        + lambda * u_max * y / (p + a_max)
        + gamma / p * (u_max - u_min);
    rhs * (-(p / a_max) * (-x_star).ln_1p()).exp().recip()
}

/// Vanishing-discount threshold
/// `x_{0,i} = 1 − (γ_i/λ_i) / ((1 + λ_i u_min / a_{−i})(1 + λ_i u_max / a_{−i}))`,
/// clamped to `[0, 1]`. A monopolist (`a_{−i} = 0`) gets `1` — the bracket
/// product diverges, so the subtracted term vanishes in the limit.
pub fn vanishing_threshold(params: &PlayerParams, a_minus_i: f64, u_min: f64, u_max: f64) -> f64 {
    if a_minus_i <= 0.0 {
        return 1.0;
    }
    let ratio = params.gamma / params.lambda;
    let product =
        (1.0 + params.lambda * u_min / a_minus_i) * (1.0 + params.lambda * u_max / a_minus_i);
    (1.0 - ratio / product).clamp(0.0, 1.0)
}

/// Computes the unique symmetric Nash equilibrium for identical players.
///
/// When the existence condition fails the all-`Min` profile is returned as
/// the (degenerate) equilibrium. Otherwise the threshold comes from the
/// closed form, `K*` from the continuity equation, and the single-switch
/// property is certified on a grid: the indifference test stays strictly
/// in favor of `Max` below `x*` for the glued pre-threshold value piece.
pub fn symmetric_equilibrium(
    lambda: f64,
    gamma: f64,
    p: f64,
    n: usize,
    u_min: f64,
    u_max: f64,
) -> Result<EquilibriumResult, EquilibriumError> {
    if !(lambda > 0.0 && gamma > 0.0 && p > 0.0 && n >= 1 && u_min >= 1.0 && u_max > u_min) {
        return Err(EquilibriumError::PreconditionViolated(
            "need λ>0, γ>0, p>0, N≥1, 1≤u_min<u_max".into(),
        ));
    }
    if !symmetric_existence(lambda, gamma, p, n, u_min) {
        return Ok(EquilibriumResult {
            profile: StrategyProfile::all_min(n),
            kind: EquilibriumKind::DegenerateAllMin,
            epsilon: 0.0,
            x_star: None,
            k_star: None,
            switch_times: None,
            epsilon_contributions: None,
            iteration_trace: None,
        });
    }

    let x_star = symmetric_threshold(lambda, gamma, p, n, u_min);
    let k_star = k_star_from_continuity(lambda, gamma, p, n, u_min, u_max, x_star);
    if !(k_star > 0.0) || !k_star.is_finite() {
        return Err(EquilibriumError::ContinuityInfeasible { k_star });
    }

    // Assemble the tagged player's two-piece value function and certify the
    // single-switch property: Φ > 0 strictly on a grid below x*.
    let params = PlayerParams::new(lambda, gamma, p);
    let config = GameConfig::symmetric(n, params, u_min, u_max);
    let hi = ValuePiece::from_controls(
        &params,
        &config,
        (n - 1) as f64 * lambda * u_min,
        ControlLevel::Min,
        0.0,
        x_star,
        1.0,
    );
    let mut lo = ValuePiece::from_controls(
        &params,
        &config,
        (n - 1) as f64 * lambda * u_max,
        ControlLevel::Max,
        0.0,
        0.0,
        x_star,
    );
    lo.k = lo.k_matching_value(x_star, hi.eval_unchecked(x_star));
    for s in 0..1000 {
        let x = x_star * s as f64 / 1000.0;
        let phi = switching_coefficient(x, &lo, lambda, gamma)
            .expect("grid inside the pre-threshold piece");
        if !(phi > 0.0) {
            return Err(EquilibriumError::PreconditionViolated(format!(
                "single-switch certification failed at x = {x} (Φ = {phi})"
            )));
        }
    }

    let t_star =
        time_to_reach(0.0, x_star, n as f64 * lambda * u_max).expect("threshold below saturation");
    Ok(EquilibriumResult {
        profile: StrategyProfile::from_thresholds(&vec![x_star; n]),
        kind: EquilibriumKind::SymmetricExact,
        epsilon: 0.0,
        x_star: Some(x_star),
        k_star: Some(k_star),
        switch_times: Some(vec![t_star; n]),
        epsilon_contributions: None,
        iteration_trace: None,
    })
}

/// The symmetric-equilibrium value function of a tagged player (two glued
/// pieces), used by tests and diagnostics.
pub fn symmetric_value_function(
    lambda: f64,
    gamma: f64,
    p: f64,
    n: usize,
    u_min: f64,
    u_max: f64,
    x_star: f64,
) -> ValueFunction {
    let params = PlayerParams::new(lambda, gamma, p);
    let config = GameConfig::symmetric(n, params, u_min, u_max);
    let hi = ValuePiece::from_controls(
        &params,
        &config,
        (n - 1) as f64 * lambda * u_min,
        ControlLevel::Min,
        0.0,
        x_star,
        1.0,
    );
    let mut lo = ValuePiece::from_controls(
        &params,
        &config,
        (n - 1) as f64 * lambda * u_max,
        ControlLevel::Max,
        0.0,
        0.0,
        x_star,
    );
    lo.k = lo.k_matching_value(x_star, hi.eval_unchecked(x_star));
    ValueFunction {
        pieces: vec![lo, hi],
        player: 0,
    }
}

fn with_discount(config: &GameConfig, p: f64) -> GameConfig {
    let mut c = config.clone();
    for player in &mut c.players {
        player.p = p;
    }
    c
}

/// Measures the maximal unilateral quadrature improvement over the profile
/// at discount `p_eps`, along with the per-player contributions.
fn measure_epsilon(
    config: &GameConfig,
    profile: &StrategyProfile,
    p_eps: f64,
) -> Result<(f64, Vec<f64>), EquilibriumError> {
    let c = with_discount(config, p_eps);
    let mut contributions = Vec::with_capacity(c.n_players());
    for i in 0..c.n_players() {
        let j_profile = cost_quadrature(&c, profile, i).value;
        let br = best_response(&c, i, profile)?;
        let mut deviated = profile.clone();
        deviated.set(i, br.strategy);
        let j_br = cost_quadrature(&c, &deviated, i).value;
        contributions.push((j_profile - j_br).max(0.0));
    }
    let eps = contributions.iter().copied().fold(0.0, f64::max);
    Ok((eps, contributions))
}

/// Constructs the ε-approximate Nash equilibrium of the vanishing-discount
/// regime for common `λ` and strictly decreasing `γ` with `λ > γ_1`.
///
/// All players start at `Max`; repeatedly, the active player with the
/// smallest current vanishing threshold (recomputed as `a_{−i}` changes)
/// drops to `Min` when the state crosses it. Players switch in order of
/// descending `γ` and never switch back; both facts are verified against
/// the running trajectory. The reported ε is the measured best-response
/// deviation gain at the supplied discount `p_eps`.
pub fn epsilon_equilibrium(
    config: &GameConfig,
    p_eps: f64,
) -> Result<EquilibriumResult, EquilibriumError> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(EquilibriumError::PreconditionViolated(format!(
            "{violations:?}"
        )));
    }
    if !(p_eps > 0.0) {
        return Err(EquilibriumError::PreconditionViolated(format!(
            "ε estimation needs a positive discount (got {p_eps})"
        )));
    }
    let n = config.n_players();
    let lambda = config.players[0].lambda;
    if config.players.iter().any(|q| q.lambda != lambda) {
        return Err(EquilibriumError::PreconditionViolated(
            "players must share a common λ".into(),
        ));
    }
    for w in config.players.windows(2) {
        if !(w[0].gamma > w[1].gamma) {
            return Err(EquilibriumError::PreconditionViolated(format!(
                "γ must be strictly decreasing across players (got {} then {})",
                w[0].gamma, w[1].gamma
            )));
        }
    }
    if !(lambda > config.players[0].gamma) {
        return Err(EquilibriumError::PreconditionViolated(
            "need λ > γ_1 so that everyone starts at u_max".into(),
        ));
    }

    let mut levels = vec![ControlLevel::Max; n];
    let mut x = config.z_total();
    let mut t = 0.0;
    let mut thresholds = vec![1.0; n];
    let mut switch_times = vec![f64::INFINITY; n];
    let mut switch_order: Vec<usize> = Vec::new();

    loop {
        // current vanishing thresholds of the still-accelerating players
        let next = (0..n)
            .filter(|&i| levels[i] == ControlLevel::Max)
            .map(|i| {
                let a_minus = config.aggregate_rate_excluding(&levels, i);
                (
                    i,
                    vanishing_threshold(&config.players[i], a_minus, config.u_min, config.u_max),
                )
            })
            .filter(|&(_, thr)| thr < 1.0 - 1e-12)
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let Some((who, threshold)) = next else { break };

        let a = config.aggregate_rate(&levels);
        let target = threshold.max(x);
        t += time_to_reach(x, target, a).expect("threshold reachable");
        x = target;
        levels[who] = ControlLevel::Min;
        thresholds[who] = threshold;
        switch_times[who] = t;
        switch_order.push(who);

        // no-switch-back check: every player already at Min must still sit
        // above its freshly recomputed threshold
        for &j in &switch_order {
            let a_minus = config.aggregate_rate_excluding(&levels, j);
            let thr_now =
                vanishing_threshold(&config.players[j], a_minus, config.u_min, config.u_max);
            if thr_now > x + 1e-12 {
                return Err(EquilibriumError::OrderViolation {
                    player: j,
                    threshold: thr_now,
                    state: x,
                });
            }
        }
    }

    // descending-γ order is strict, so the recorded order must be 0,1,2,…
    for (k, &who) in switch_order.iter().enumerate() {
        if who != k {
            return Err(EquilibriumError::OrderViolation {
                player: who,
                threshold: thresholds[who],
                state: x,
            });
        }
    }

    let profile = StrategyProfile::from_thresholds(&thresholds);
    let (epsilon, contributions) = measure_epsilon(config, &profile, p_eps)?;
    Ok(EquilibriumResult {
        profile,
        kind: EquilibriumKind::EpsilonApprox,
        epsilon,
        x_star: None,
        k_star: None,
        switch_times: Some(switch_times),
        epsilon_contributions: Some(contributions),
        iteration_trace: None,
    })
}

/// Update order of [`best_response_iteration`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IterationMode {
    /// Sequential updates, each player reacting to the freshest profile.
    #[default]
    GaussSeidel,
    /// All players react to the frozen previous round simultaneously.
    Jacobi,
}

/// Round-robin best-response iteration from an initial profile; converged
/// once no player can improve its quadrature cost by more than `tol`.
pub fn best_response_iteration(
    config: &GameConfig,
    initial: &StrategyProfile,
    max_rounds: usize,
    tol: f64,
    mode: IterationMode,
) -> Result<EquilibriumResult, EquilibriumError> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(EquilibriumError::PreconditionViolated(format!(
            "{violations:?}"
        )));
    }
    if config.players.iter().any(|p| !(p.p > 0.0)) {
        return Err(EquilibriumError::PreconditionViolated(
            "iteration needs p > 0 for every player".into(),
        ));
    }
    let n = config.n_players();
    let mut profile = initial.clone();
    let mut trace = Vec::new();

    for _round in 0..max_rounds {
        let mut round_improvement: f64 = 0.0;
        match mode {
            IterationMode::GaussSeidel => {
                for i in 0..n {
                    let j_cur = cost_quadrature(config, &profile, i).value;
                    let br = best_response(config, i, &profile)?;
                    let mut updated = profile.clone();
                    updated.set(i, br.strategy);
                    let j_new = cost_quadrature(config, &updated, i).value;
                    round_improvement = round_improvement.max(j_cur - j_new);
                    profile = updated;
                }
            }
            IterationMode::Jacobi => {
                // every reply targets the frozen profile, so players run
                // in parallel; results land in player order regardless
                let replies: Vec<_> = (0..n)
                    .into_par_iter()
                    .map(|i| {
                        let j_cur = cost_quadrature(config, &profile, i).value;
                        let br = best_response(config, i, &profile)?;
                        let mut updated = profile.clone();
                        updated.set(i, br.strategy.clone());
                        let j_new = cost_quadrature(config, &updated, i).value;
                        Ok::<_, BestResponseError>((br.strategy, j_cur - j_new))
                    })
                    .collect::<Result<_, _>>()?;
                let mut next = profile.clone();
                for (i, (strategy, improvement)) in replies.into_iter().enumerate() {
                    round_improvement = round_improvement.max(improvement);
                    next.set(i, strategy);
                }
                profile = next;
            }
        }
        trace.push(round_improvement);
        if round_improvement <= tol {
            // measured ε at the fixed point, one clean pass
            let mut contributions = Vec::with_capacity(n);
            for i in 0..n {
                let j_cur = cost_quadrature(config, &profile, i).value;
                let br = best_response(config, i, &profile)?;
                let mut deviated = profile.clone();
                deviated.set(i, br.strategy);
                let j_new = cost_quadrature(config, &deviated, i).value;
                contributions.push((j_cur - j_new).max(0.0));
            }
            let epsilon = contributions.iter().copied().fold(0.0, f64::max);
            let kind = if profile
                .strategies()
                .iter()
                .all(|s| s.is_constant(ControlLevel::Min))
            {
                EquilibriumKind::DegenerateAllMin
            } else {
                EquilibriumKind::IterationFixedPoint
            };
            return Ok(EquilibriumResult {
                profile,
                kind,
                epsilon,
                x_star: None,
                k_star: None,
                switch_times: None,
                epsilon_contributions: Some(contributions),
                iteration_trace: Some(trace),
            });
        }
    }

    let last_improvement = trace.last().copied().unwrap_or(f64::NAN);
    Err(EquilibriumError::NonConvergence {
        rounds: max_rounds,
        last_improvement,
        trace,
        last_profile: profile,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const BENCH: (f64, f64, f64, usize, f64, f64) = (100.0, 70.0, 100.0, 10, 1.0, 10.0);

    #[test]
    fn existence_margins_match_the_arithmetic() {
        let (l, _, p, n, umin, _) = BENCH;
        assert!(symmetric_existence(l, 70.0, p, n, umin)); // margin +20.909
        assert!(!symmetric_existence(l, 95.0, p, n, umin)); // margin −4.091
        assert!(!symmetric_existence(l, 100.0, p, n, umin)); // γ ≥ λ
        assert!(!symmetric_existence(l, 150.0, p, n, umin));
    }

    #[test]
    fn symmetric_threshold_is_exactly_023() {
        let (l, g, p, n, umin, _) = BENCH;
        let x = symmetric_threshold(l, g, p, n, umin);
        assert!((x - 0.23).abs() < 1e-15, "got {x}");
    }

    #[test]
    fn symmetric_equilibrium_on_benchmark_parameters() {
        let (l, g, p, n, umin, umax) = BENCH;
        let eq = symmetric_equilibrium(l, g, p, n, umin, umax).unwrap();
        assert_eq!(eq.kind, EquilibriumKind::SymmetricExact);
        let x = eq.x_star.unwrap();
        assert!((x - 0.23).abs() < 1e-15);
        assert!(eq.k_star.unwrap() > 0.0);
        assert_eq!(eq.epsilon, 0.0);
        let t = eq.switch_times.unwrap()[0];
        assert!((t - time_to_reach(0.0, 0.23, 10000.0).unwrap()).abs() < 1e-18);
    }

    #[test]
    fn threshold_approaches_one_as_gamma_vanishes() {
        let (l, _, p, n, umin, _) = BENCH;
        let x = symmetric_threshold(l, 1e-9, p, n, umin);
        assert!(x > 1.0 - 1e-10);
    }

    #[test]
    fn dominated_game_degenerates_to_all_min() {
        let eq = symmetric_equilibrium(50.0, 70.0, 100.0, 10, 1.0, 10.0).unwrap();
        assert_eq!(eq.kind, EquilibriumKind::DegenerateAllMin);
        assert!(eq
            .profile
            .strategies()
            .iter()
            .all(|s| s.is_constant(ControlLevel::Min)));
    }

    #[test]
    fn k_star_matches_the_solved_continuity_equation() {
        // closed form of the linear solve:
        // K* = (u_max−u_min)(1−x*)^{p/(λNu_max)} [ (1−x*) λ p /
        //        ((p+λNu_max)(p+λNu_min)) + γ/p ]
        let (l, g, p, n, umin, umax) = BENCH;
        let x = symmetric_threshold(l, g, p, n, umin);
        let y = 1.0 - x;
        let nn = n as f64;
        let expect = (umax - umin)
            * y.powf(p / (l * nn * umax))
            * (y * l * p / ((p + l * nn * umax) * (p + l * nn * umin)) + g / p);
        let got = k_star_from_continuity(l, g, p, n, umin, umax, x);
        assert!(
            (got - expect).abs() <= 1e-12 * expect.abs(),
            "{got} vs {expect}"
        );
    }

    #[test]
    fn k_star_collapses_when_levels_merge() {
        let (l, g, p, n, umin, _) = BENCH;
        let x = symmetric_threshold(l, g, p, n, umin);
        let k = k_star_from_continuity(l, g, p, n, umin, umin, x);
        assert!(k.abs() < 1e-12);
    }

    #[test]
    fn k_star_positive_on_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut accepted = 0;
        while accepted < 100 {
            let lambda: f64 = rng.random_range(5.0..500.0);
            let gamma: f64 = rng.random_range(0.05..1.0) * lambda;
            let p: f64 = rng.random_range(0.1..500.0);
            let n: usize = rng.random_range(2..40);
            let u_min: f64 = rng.random_range(1.0..5.0);
            let u_max: f64 = u_min + rng.random_range(0.5..15.0);
            if !symmetric_existence(lambda, gamma, p, n, u_min) {
                continue;
            }
            accepted += 1;
            let x = symmetric_threshold(lambda, gamma, p, n, u_min);
            let k = k_star_from_continuity(lambda, gamma, p, n, u_min, u_max, x);
            assert!(k > 0.0, "K* = {k} for λ={lambda}, γ={gamma}, p={p}, N={n}");
        }
    }

    #[test]
    fn assembled_value_function_is_continuous_at_the_threshold() {
        let (l, g, p, n, umin, umax) = BENCH;
        let x = symmetric_threshold(l, g, p, n, umin);
        let vf = symmetric_value_function(l, g, p, n, umin, umax, x);
        assert!(vf.max_continuity_defect() <= 1e-9);
        // the terminal piece is the all-Min closed form
        assert!(
            (vf.eval(x).unwrap() - (-l * umin * (1.0 - x) / (p + n as f64 * l * umin))).abs()
                < 1e-12
        );
    }

    #[test]
    fn vanishing_threshold_benchmark_values() {
        let params = PlayerParams::new(100.0, 70.0, 100.0);
        let x_9000 = vanishing_threshold(&params, 9000.0, 1.0, 10.0);
        assert!((x_9000 - 0.37693).abs() < 1e-5, "got {x_9000}");
        let x_900 = vanishing_threshold(&params, 900.0, 1.0, 10.0);
        assert!((x_900 - 0.70158).abs() < 1e-5, "got {x_900}");
        // floor 1 − γ/λ as the competition grows
        let x_far = vanishing_threshold(&params, 1e9, 1.0, 10.0);
        assert!((x_far - 0.3).abs() < 1e-5);
        assert!(x_far > 0.3);
    }

    #[test]
    fn vanishing_threshold_monotone_in_competition_and_cost() {
        let params = PlayerParams::new(100.0, 70.0, 100.0);
        let mut prev = f64::INFINITY;
        for k in 1..=50 {
            let a = 900.0 * k as f64;
            let x = vanishing_threshold(&params, a, 1.0, 10.0);
            assert!(x < prev, "not strictly decreasing in a_-i at {a}");
            prev = x;
        }
        for k in 1..50 {
            let cheap = PlayerParams::new(100.0, k as f64, 100.0);
            let costly = PlayerParams::new(100.0, (k + 1) as f64, 100.0);
            let xc = vanishing_threshold(&cheap, 3000.0, 1.0, 10.0);
            let xk = vanishing_threshold(&costly, 3000.0, 1.0, 10.0);
            assert!(xk < xc, "not strictly decreasing in γ/λ at γ={k}");
        }
    }

    #[test]
    fn monopolist_always_accelerates() {
        let params = PlayerParams::new(100.0, 70.0, 100.0);
        assert_eq!(vanishing_threshold(&params, 0.0, 1.0, 10.0), 1.0);
    }

    fn two_player_config() -> GameConfig {
        GameConfig {
            players: vec![
                PlayerParams::new(100.0, 70.0, 1.0),
                PlayerParams::new(100.0, 60.0, 1.0),
            ],
            u_min: 1.0,
            u_max: 10.0,
            horizon: crate::model::Horizon::Infinite,
        }
    }

    #[test]
    fn epsilon_equilibrium_switch_states() {
        let config = two_player_config();
        let eq = epsilon_equilibrium(&config, 1.0).unwrap();
        assert_eq!(eq.kind, EquilibriumKind::EpsilonApprox);
        let ths = eq.profile.thresholds().unwrap();
        assert!((ths[0] - 0.68182).abs() < 1e-5, "got {}", ths[0]);
        assert!((ths[1] - 0.97273).abs() < 1e-5, "got {}", ths[1]);
        let times = eq.switch_times.unwrap();
        assert!(times[0] < times[1]);
        assert!(eq.epsilon > 0.0);
    }

    #[test]
    fn single_switch_certificate_with_positive_k() {
        // with the continuity-equation K* (positive), the derivative of the
        // indifference function is negative below the threshold, so there is
        // at most one switch:
        //   dT/dx = u [ −(1 − b/(p+a)) − K p²/a² (1−x)^{−p/a−1} ]
        let (l, g, p, n, umin, umax) = BENCH;
        let x_star = symmetric_threshold(l, g, p, n, umin);
        let k = k_star_from_continuity(l, g, p, n, umin, umax, x_star);
        assert!(k > 0.0);
        let a = n as f64 * l * umax;
        let b = l * umax;
        for s in 0..1000 {
            let x = x_star * s as f64 / 1000.0;
            let pow = (1.0 - x).powf(-p / a - 1.0);
            let dt = umax * (-(1.0 - b / (p + a)) - k * p * p / (a * a) * pow);
            assert!(dt < 0.0, "dT/dx = {dt} at x = {x}");
        }
    }

    #[test]
    fn four_player_epsilon_equilibrium_switches_in_cost_order() {
        let config = GameConfig {
            players: vec![
                PlayerParams::new(100.0, 80.0, 1.0),
                PlayerParams::new(100.0, 65.0, 1.0),
                PlayerParams::new(100.0, 40.0, 1.0),
                PlayerParams::new(100.0, 15.0, 1.0),
            ],
            u_min: 1.0,
            u_max: 10.0,
            horizon: crate::model::Horizon::Infinite,
        };
        let eq = epsilon_equilibrium(&config, 0.1).unwrap();
        let times = eq.switch_times.unwrap();
        for w in times.windows(2) {
            assert!(w[0] < w[1], "descending-γ switch order broken: {times:?}");
        }
        let ths = eq.profile.thresholds().unwrap();
        for w in ths.windows(2) {
            assert!(w[0] < w[1], "switch states must increase: {ths:?}");
        }
    }

    #[test]
    fn jacobi_and_gauss_seidel_agree_on_the_symmetric_game() {
        let config = GameConfig::symmetric(6, PlayerParams::new(100.0, 70.0, 100.0), 1.0, 10.0);
        let gs = best_response_iteration(
            &config,
            &StrategyProfile::all_min(6),
            30,
            1e-9,
            IterationMode::GaussSeidel,
        )
        .unwrap();
        let ja = best_response_iteration(
            &config,
            &StrategyProfile::all_min(6),
            30,
            1e-9,
            IterationMode::Jacobi,
        )
        .unwrap();
        for i in 0..6 {
            let a = gs.profile.get(i).as_threshold().unwrap();
            let b = ja.profile.get(i).as_threshold().unwrap();
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn epsilon_equilibrium_rejects_equal_costs() {
        let mut config = two_player_config();
        config.players[1].gamma = 70.0;
        let err = epsilon_equilibrium(&config, 1.0).unwrap_err();
        assert!(
            matches!(err, EquilibriumError::PreconditionViolated(_)),
            "{err}"
        );
    }

    #[test]
    fn iteration_reaches_the_symmetric_equilibrium() {
        let config = GameConfig::symmetric(10, PlayerParams::new(100.0, 70.0, 100.0), 1.0, 10.0);
        let eq = best_response_iteration(
            &config,
            &StrategyProfile::all_min(10),
            20,
            1e-9,
            IterationMode::GaussSeidel,
        )
        .unwrap();
        assert_eq!(eq.kind, EquilibriumKind::IterationFixedPoint);
        for s in eq.profile.strategies() {
            let th = s.as_threshold().expect("threshold fixed point");
            assert!((th - 0.23).abs() <= 1e-6, "threshold {th}");
        }
        assert!(eq.epsilon <= 1e-9);
        assert!(eq.iteration_trace.unwrap().len() <= 20);
    }

    #[test]
    fn iteration_detects_the_degenerate_game_in_one_round() {
        let config = GameConfig::symmetric(6, PlayerParams::new(50.0, 70.0, 100.0), 1.0, 10.0);
        let eq = best_response_iteration(
            &config,
            &StrategyProfile::all_min(6),
            5,
            1e-9,
            IterationMode::GaussSeidel,
        )
        .unwrap();
        assert_eq!(eq.kind, EquilibriumKind::DegenerateAllMin);
        assert_eq!(eq.iteration_trace.unwrap().len(), 1);
    }

    #[test]
    fn heterogeneous_iteration_orders_thresholds_by_lambda() {
        // half λ_0, half 2λ_0; the high-λ class must settle strictly higher
        let mut players = vec![PlayerParams::new(100.0, 70.0, 100.0); 5];
        players.extend(vec![PlayerParams::new(200.0, 70.0, 100.0); 5]);
        let config = GameConfig {
            players,
            u_min: 1.0,
            u_max: 10.0,
            horizon: crate::model::Horizon::Infinite,
        };
        let eq = best_response_iteration(
            &config,
            &StrategyProfile::all_min(10),
            40,
            1e-8,
            IterationMode::GaussSeidel,
        )
        .unwrap();
        assert_eq!(eq.kind, EquilibriumKind::IterationFixedPoint);
        let ths = eq.profile.thresholds().expect("threshold profile");
        for lo in 0..5 {
            for hi in 5..10 {
                assert!(
                    ths[hi] > ths[lo],
                    "high-λ player {hi} at {} not above low-λ player {lo} at {}",
                    ths[hi],
                    ths[lo]
                );
            }
        }
    }

    #[test]
    fn deviations_from_the_symmetric_threshold_do_not_pay() {
        let config = GameConfig::symmetric(10, PlayerParams::new(100.0, 70.0, 100.0), 1.0, 10.0);
        let eq_cost = cost_quadrature(&config, &StrategyProfile::from_thresholds(&[0.23; 10]), 0);
        for delta in [-0.05, -0.01, 0.01, 0.05] {
            let mut thresholds = [0.23; 10];
            thresholds[0] += delta;
            let dev = cost_quadrature(&config, &StrategyProfile::from_thresholds(&thresholds), 0);
            assert!(
                dev.value >= eq_cost.value - 1e-6,
                "deviation {delta} pays: {} < {}",
                dev.value,
                eq_cost.value
            );
        }
    }
}
