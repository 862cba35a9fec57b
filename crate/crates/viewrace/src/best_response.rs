//! Backward construction of a single player's best response against a
//! fixed opponent profile, plus quadrature cost oracles.
//!
//! The construction walks the state space downward from saturation. On the
//! terminal interval the player holds `u_min` and the value piece carries
//! `K = 0` (any other constant makes the value blow up at `x → 1`). Below
//! that, the sign of the switching coefficient
//! `Φ(x) = λ (1−x)(1 − V'(x)) − γ` decides the control: each sign change is
//! located by a grid scan and bisection and starts a new piece, and every
//! opponent breakpoint changes the aggregate rate and also starts a new
//! piece. Constants `K` are glued by value continuity. The resulting
//! strategy maximizes the Hamiltonian piecewise and therefore attains the
//! value function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::{simulate, tail_bound, StopCondition, Trajectory};
use crate::hjb::{switching_coefficient, ValueFunction, ValuePiece};
use crate::model::{ControlLevel, GameConfig, PlayerParams, PlayerStrategy, StrategyProfile};

/// Grid points scanned per interval when hunting sign changes of `Φ`.
/// `Φ` may in principle change sign more than once inside an interval when
/// `K ≠ 0`, so roots are bracketed by scanning rather than assumed unique.
const GRID_N: usize = 10_000;
/// Bisection stops once the bracket is narrower than this.
const ROOT_X_TOL: f64 = 1e-12;
/// Roots this close to an interval boundary are handled by the boundary
/// level test instead of an interior switch.
const BOUNDARY_EPS: f64 = 1e-10;
/// States above `1 − SCAN_GUARD` are never scanned.
const SCAN_GUARD: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum BestResponseError {
    #[error("player {player} needs a positive discount rate (got {p})")]
    NonpositiveDiscount { player: usize, p: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no admissible control just below x = {x}: Φ(Min) = {phi_min}, Φ(Max) = {phi_max}")]
    BracketFailure { x: f64, phi_min: f64, phi_max: f64 },
}

/// Whether the constructed reply ever accelerates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrOutcome {
    Switching,
    /// The player never accelerates; consistent with [`degenerate_check`]
    /// or with `Φ ≤ 0` throughout the state space.
    NoSwitch,
}

#[derive(Debug, Clone)]
pub struct IntervalDiagnostic {
    pub x_lo: f64,
    pub x_hi: f64,
    pub level: ControlLevel,
    pub a_minus_i: f64,
    pub k: f64,
    /// Bracket from which the switch at `x_lo` was bisected, when the piece
    /// ends at an interior switch of the player.
    pub root_bracket: Option<(f64, f64)>,
    /// |V mismatch| against the piece above, measured at `x_hi`.
    pub continuity_defect: f64,
}

#[derive(Debug, Clone)]
pub struct BestResponseDiagnostics {
    pub outcome: BrOutcome,
    /// True when the reply has more than one breakpoint; the threshold
    /// structure is only proved at the symmetric equilibrium, so multi-switch
    /// replies are flagged rather than rejected.
    pub multi_switch: bool,
    pub intervals: Vec<IntervalDiagnostic>,
}

#[derive(Debug, Clone)]
pub struct BestResponseResult {
    pub player: usize,
    pub strategy: PlayerStrategy,
    pub value_function: ValueFunction,
    /// Largest state at which the player switches; `None` when the reply
    /// never accelerates. Above it the level is `Min`.
    pub last_switch: Option<f64>,
    pub diagnostics: BestResponseDiagnostics,
}

/// Sufficient condition for never accelerating: `λ_i < γ_i` makes `u_min`
/// dominant irrespective of the other players' strategies.
pub fn degenerate_check(params: &PlayerParams) -> bool {
    params.lambda < params.gamma
}

fn a_minus_on(config: &GameConfig, profile: &StrategyProfile, i: usize, x: f64) -> f64 {
    profile
        .strategies()
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(j, s)| config.players[j].lambda * config.control_value(s.level_above(x)))
        .sum()
}

fn admissible(level: ControlLevel, phi: f64, tol: f64) -> bool {
    match level {
        ControlLevel::Max => phi >= -tol,
        ControlLevel::Min => phi <= tol,
    }
}

/// Scans `[lo, hi]` downward for the highest state where `Φ` turns
/// inadmissible for `level`, and bisects the bracket to a root.
fn find_switch(
    piece: &ValuePiece,
    level: ControlLevel,
    params: &PlayerParams,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Option<(f64, (f64, f64))> {
    if hi <= lo {
        return None;
    }
    let phi_at = |x: f64| {
        let y = 1.0 - x;
        params.lambda * y * (1.0 - piece.derivative_unchecked(x)) - params.gamma
    };
    let step = (hi - lo) / (GRID_N - 1) as f64;
    let mut x_above = hi;
    for j in 1..GRID_N {
        let x = if j == GRID_N - 1 {
            lo
        } else {
            hi - j as f64 * step
        };
        let phi = phi_at(x);
        if !admissible(level, phi, tol) {
            // bracket (x, x_above): admissible above, violated below
            let mut b_lo = x;
            let mut b_hi = x_above;
            while b_hi - b_lo > ROOT_X_TOL {
                let mid = 0.5 * (b_lo + b_hi);
                if admissible(level, phi_at(mid), 0.0) {
                    b_hi = mid;
                } else {
                    b_lo = mid;
                }
            }
            return Some((0.5 * (b_lo + b_hi), (x, x_above)));
        }
        x_above = x;
    }
    None
}

/// Constructs player `i`'s best response against the opponents' strategies.
/// The profile's entry for `i` itself is ignored.
pub fn best_response(
    config: &GameConfig,
    i: usize,
    opponents: &StrategyProfile,
) -> Result<BestResponseResult, BestResponseError> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(BestResponseError::InvalidConfig(format!("{violations:?}")));
    }
    assert_eq!(
        opponents.len(),
        config.n_players(),
        "one strategy per player"
    );
    let params = config.players[i];
    if !(params.p > 0.0) {
        return Err(BestResponseError::NonpositiveDiscount {
            player: i,
            p: params.p,
        });
    }

    // dominated-cost short circuit: with λ < γ, u_min dominates pointwise,
    // so the value of the all-Min reply is the value function
    if degenerate_check(&params) {
        let mut profile = opponents.clone();
        profile.set(i, PlayerStrategy::constant(ControlLevel::Min));
        let vf = profile_value_function(config, &profile, i);
        let intervals = vf
            .pieces
            .iter()
            .rev()
            .map(|p| IntervalDiagnostic {
                x_lo: p.x_lo,
                x_hi: p.x_hi,
                level: ControlLevel::Min,
                a_minus_i: p.a - p.b,
                k: p.k,
                root_bracket: None,
                continuity_defect: 0.0,
            })
            .collect();
        return Ok(BestResponseResult {
            player: i,
            strategy: PlayerStrategy::constant(ControlLevel::Min),
            value_function: vf,
            last_switch: None,
            diagnostics: BestResponseDiagnostics {
                outcome: BrOutcome::NoSwitch,
                multi_switch: false,
                intervals,
            },
        });
    }

    let z = config.z_total();
    let scan_cap = 1.0 - SCAN_GUARD;
    let phi_tol = 1e-9 * params.lambda.max(params.gamma);

    // Interval bounds: z plus every opponent breakpoint inside (z, cap).
    let mut bounds = vec![z];
    bounds.extend(opponents.breakpoints_between(z, scan_cap, Some(i)));

    let mut pieces_desc: Vec<ValuePiece> = Vec::new();
    let mut diags: Vec<IntervalDiagnostic> = Vec::new();
    let mut breaks_desc: Vec<f64> = Vec::new();
    let mut level = ControlLevel::Min;

    let top_lo = *bounds.last().unwrap();
    let mut cur = ValuePiece::from_controls(
        &params,
        config,
        a_minus_on(config, opponents, i, top_lo),
        level,
        0.0,
        top_lo,
        1.0,
    );
    let mut cur_bracket: Option<(f64, f64)> = None;
    let mut cur_defect = 0.0;

    for zone_idx in (0..bounds.len()).rev() {
        let zone_lo = bounds[zone_idx];
        let a_minus_zone = cur.a - cur.b;
        let mut scan_hi = cur.x_hi.min(scan_cap);

        // interior switches of player i inside this zone
        while let Some((root, bracket)) =
            find_switch(&cur, level, &params, zone_lo, scan_hi, phi_tol)
        {
            if root - zone_lo <= BOUNDARY_EPS {
                break;
            }
            let closed = ValuePiece { x_lo: root, ..cur };
            diags.push(IntervalDiagnostic {
                x_lo: root,
                x_hi: closed.x_hi,
                level,
                a_minus_i: a_minus_zone,
                k: closed.k,
                root_bracket: cur_bracket.take(),
                continuity_defect: cur_defect,
            });
            pieces_desc.push(closed);
            breaks_desc.push(root);

            let v_root = closed.eval_unchecked(root);
            level = level.other();
            let mut next =
                ValuePiece::from_controls(&params, config, a_minus_zone, level, 0.0, zone_lo, root);
            next.k = next.k_matching_value(root, v_root);
            cur_defect = (next.eval_unchecked(root) - v_root).abs();
            cur_bracket = Some(bracket);

            // chatter guard: the new piece must prefer its own level just below
            let probe = (root - (scan_hi - zone_lo) / GRID_N as f64).max(zone_lo);
            let phi_new = switching_coefficient(probe, &next, params.lambda, params.gamma)
                .unwrap_or(f64::NAN);
            if !phi_new.is_finite() || !admissible(level, phi_new, phi_tol.max(1e-6)) {
                return Err(BestResponseError::BracketFailure {
                    x: root,
                    phi_min: if level == ControlLevel::Min {
                        phi_new
                    } else {
                        f64::NAN
                    },
                    phi_max: if level == ControlLevel::Max {
                        phi_new
                    } else {
                        f64::NAN
                    },
                });
            }
            cur = next;
            scan_hi = root;
        }

        // close the open piece at the zone's lower bound
        let closed = ValuePiece {
            x_lo: zone_lo,
            ..cur
        };
        diags.push(IntervalDiagnostic {
            x_lo: zone_lo,
            x_hi: closed.x_hi,
            level,
            a_minus_i: a_minus_zone,
            k: closed.k,
            root_bracket: cur_bracket.take(),
            continuity_defect: cur_defect,
        });
        pieces_desc.push(closed);

        if zone_idx == 0 {
            break;
        }

        // crossing an opponent breakpoint: a_{−i} changes; determine the
        // level below by testing both candidates for sign consistency
        let beta = zone_lo;
        let v_beta = closed.eval_unchecked(beta);
        let below_lo = bounds[zone_idx - 1];
        let a_minus_below = a_minus_on(config, opponents, i, below_lo);
        let probe = beta - ((beta - below_lo) / GRID_N as f64).min(1e-6);

        let glued = |lv: ControlLevel| {
            let mut piece =
                ValuePiece::from_controls(&params, config, a_minus_below, lv, 0.0, below_lo, beta);
            piece.k = piece.k_matching_value(beta, v_beta);
            let phi = switching_coefficient(probe, &piece, params.lambda, params.gamma)
                .unwrap_or(f64::NAN);
            (piece, phi)
        };
        let mut candidates: Vec<(ControlLevel, ValuePiece)> = Vec::new();
        for cand in [level, level.other()] {
            let (piece, phi) = glued(cand);
            if phi.is_finite() && admissible(cand, phi, phi_tol) {
                candidates.push((cand, piece));
            }
        }
        let (next_level, next_piece) = match candidates.len() {
            0 => {
                return Err(BestResponseError::BracketFailure {
                    x: beta,
                    phi_min: glued(ControlLevel::Min).1,
                    phi_max: glued(ControlLevel::Max).1,
                });
            }
            1 => candidates.pop().unwrap(),
            _ => {
                // both self-consistent: the cheaper continuation wins
                candidates.sort_by(|a, b| {
                    a.1.eval_unchecked(probe)
                        .partial_cmp(&b.1.eval_unchecked(probe))
                        .unwrap()
                });
                candidates.remove(0)
            }
        };
        if next_level != level {
            breaks_desc.push(beta);
        }
        cur_defect = (next_piece.eval_unchecked(beta) - v_beta).abs();
        cur_bracket = None;
        level = next_level;
        cur = next_piece;
    }

    let mut pieces = pieces_desc;
    pieces.reverse();
    let value_function = ValueFunction { pieces, player: i };

    let mut breaks = breaks_desc.clone();
    breaks.reverse();
    let mut levels = Vec::with_capacity(breaks.len() + 1);
    levels.push(level);
    for _ in 0..breaks.len() {
        levels.push(levels.last().unwrap().other());
    }
    let strategy = PlayerStrategy::new(breaks, levels)
        .expect("constructed breakpoints are strictly increasing");
    let last_switch = breaks_desc.first().copied();
    let outcome = if strategy.is_constant(ControlLevel::Min) {
        BrOutcome::NoSwitch
    } else {
        BrOutcome::Switching
    };

    Ok(BestResponseResult {
        player: i,
        strategy: strategy.clone(),
        value_function,
        last_switch,
        diagnostics: BestResponseDiagnostics {
            outcome,
            multi_switch: strategy.breakpoints().len() > 1,
            intervals: diags,
        },
    })
}

/// Value function of a *fixed* profile for player `i` (no optimization):
/// the top piece is bounded (`K = 0`) and lower pieces glue by continuity
/// at every breakpoint. Serves as an independent closed-form route to the
/// same number [`cost_quadrature`] integrates.
pub fn profile_value_function(
    config: &GameConfig,
    profile: &StrategyProfile,
    i: usize,
) -> ValueFunction {
    let params = config.players[i];
    let z = config.z_total();
    let mut bounds = vec![z];
    bounds.extend(profile.breakpoints_between(z, 1.0 - SCAN_GUARD, None));

    let mut pieces_desc: Vec<ValuePiece> = Vec::new();
    let mut glue: Option<(f64, f64)> = None;
    for k in (0..bounds.len()).rev() {
        let lo = bounds[k];
        let hi = if k + 1 < bounds.len() {
            bounds[k + 1]
        } else {
            1.0
        };
        let levels = profile.levels_above(lo);
        let a_minus = config.aggregate_rate_excluding(&levels, i);
        let mut piece = ValuePiece::from_controls(&params, config, a_minus, levels[i], 0.0, lo, hi);
        if let Some((bx, bv)) = glue {
            piece.k = piece.k_matching_value(bx, bv);
        }
        glue = Some((lo, piece.eval_unchecked(lo)));
        pieces_desc.push(piece);
    }
    pieces_desc.reverse();
    ValueFunction {
        pieces: pieces_desc,
        player: i,
    }
}

/// Discounted cost of player `i` under a profile, with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Bound on the cost discarded beyond the saturation stop; zero when
    /// no strategy breakpoints were discarded (the integral is then exact).
    pub tail_bound: f64,
}

/// Integrates `e^{−p s} (−ẋ_i + γ_i (u_i − u_min))` along a trajectory.
/// The integrand is a sum of exponentials on each constant-control segment,
/// so each segment contributes in closed form; the terminal segment of an
/// infinite-horizon run integrates to `t = ∞` exactly.
pub fn quadrature_on_trajectory(config: &GameConfig, traj: &Trajectory, i: usize) -> Quadrature {
    let params = config.players[i];
    let p = params.p;
    debug_assert!(p > 0.0, "quadrature needs a positive discount");
    let mut value = 0.0;
    for seg in &traj.segments {
        let b = seg.rates[i];
        let g = params.gamma * (config.control_value(seg.levels[i]) - config.u_min);
        let y0 = 1.0 - seg.x_agg_start;
        let e0 = (-p * seg.t_start).exp();
        if seg.t_end.is_infinite() {
            value += -b * y0 * e0 / (p + seg.a) + g * e0 / p;
        } else {
            let d = seg.duration();
            let views = -b * y0 * e0 * (-(-(p + seg.a) * d).exp_m1()) / (p + seg.a);
            let accel = g * e0 * (-(-p * d).exp_m1()) / p;
            value += views + accel;
        }
    }
    let tail = if traj.truncated {
        tail_bound(config, i, traj.stop_time)
    } else {
        0.0
    };
    Quadrature {
        value,
        tail_bound: tail,
    }
}

/// Simulates the profile and integrates player `i`'s discounted cost.
pub fn cost_quadrature(config: &GameConfig, profile: &StrategyProfile, i: usize) -> Quadrature {
    let traj = simulate(config, profile, StopCondition::default());
    quadrature_on_trajectory(config, &traj, i)
}

#[derive(Debug, Error)]
pub enum VerificationError {
    #[error(
        "quadrature {quadrature} disagrees with the value function {value} at z (defect {defect})"
    )]
    ValueMismatch {
        quadrature: f64,
        value: f64,
        defect: f64,
    },
    #[error("alternative #{index} beats the best response: {alternative_cost} < {strategy_cost}")]
    BetterAlternative {
        index: usize,
        alternative: PlayerStrategy,
        alternative_cost: f64,
        strategy_cost: f64,
    },
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub strategy_cost: f64,
    pub value_at_start: f64,
    pub n_alternatives: usize,
    /// Smallest `J(alternative) − J(strategy)` seen; nonnegative up to the
    /// verification tolerance when the strategy is optimal.
    pub worst_margin: f64,
}

fn random_strategy(rng: &mut ChaCha8Rng) -> PlayerStrategy {
    if rng.random_bool(0.5) {
        PlayerStrategy::threshold(rng.random_range(0.0..1.0))
    } else {
        let m = rng.random_range(2..=4usize);
        let mut bps: Vec<f64> = (0..m).map(|_| rng.random_range(0.001..0.999)).collect();
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bps.dedup();
        let levels: Vec<ControlLevel> = (0..=bps.len())
            .map(|_| {
                if rng.random_bool(0.5) {
                    ControlLevel::Max
                } else {
                    ControlLevel::Min
                }
            })
            .collect();
        PlayerStrategy::new(bps, levels).expect("sorted breakpoints")
    }
}

/// Checks a best-response result from two independent directions: the
/// quadrature cost of the returned strategy must match the value function
/// at the start state, and none of `n_alternatives` randomly drawn
/// strategies may beat it beyond tolerance.
pub fn verify_best_response(
    config: &GameConfig,
    i: usize,
    opponents: &StrategyProfile,
    result: &BestResponseResult,
    n_alternatives: usize,
    seed: u64,
) -> Result<VerificationReport, VerificationError> {
    const TOL: f64 = 1e-6;
    let z = config.z_total();
    let mut profile = opponents.clone();
    profile.set(i, result.strategy.clone());
    let q = cost_quadrature(config, &profile, i);
    let v = result
        .value_function
        .eval(z)
        .expect("start state inside the value function domain");
    let defect = (q.value - v).abs();
    if defect > TOL {
        return Err(VerificationError::ValueMismatch {
            quadrature: q.value,
            value: v,
            defect,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for index in 0..n_alternatives {
        let alt = random_strategy(&mut rng);
        let mut alt_profile = opponents.clone();
        alt_profile.set(i, alt.clone());
        let qa = cost_quadrature(config, &alt_profile, i);
        let margin = qa.value - q.value;
        worst = worst.min(margin);
        if margin < -TOL {
            return Err(VerificationError::BetterAlternative {
                index,
                alternative: alt,
                alternative_cost: qa.value,
                strategy_cost: q.value,
            });
        }
    }
    Ok(VerificationReport {
        strategy_cost: q.value,
        value_at_start: v,
        n_alternatives,
        worst_margin: worst,
    })
}
