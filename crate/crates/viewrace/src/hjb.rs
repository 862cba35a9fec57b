//! Closed-form value-function pieces for the infinite-horizon game.
//!
//! On a switching interval where every control is constant, the value
//! function of player `i` solves the linear ODE
//!
//! ```text
//! p V − a (1 − x) V' + b (1 − x) + c = 0
//! ```
//!
//! with `a = Σ λ_j u_j`, `b = λ_i u_i` and `c = γ_i (u_min − u_i)` (so `c`
//! is zero at `u_min` and negative at `u_max`). Its general solution is
//!
//! ```text
//! V(x) = K (1 − x)^{−p/a} − b (1 − x) / (a + p) − c / p
//! ```
//!
//! for a real constant `K` fixed by gluing conditions. This module evaluates
//! such pieces, their derivatives, the defect of the ODE, and the two sign
//! tests that decide the optimal control at a state.

use std::io::{self, Write};

use thiserror::Error;

use crate::model::{ControlLevel, GameConfig, PlayerParams};

/// Pieces never evaluate at `x ≥ 1 − X_EVAL_GUARD`; the power term is
/// computed via `exp(−(p/a) ln(1−x))` and needs the logarithm bounded.
pub const X_EVAL_GUARD: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HjbError {
    #[error("x = {x} is outside the piece interval [{lo}, {hi}]")]
    OutsidePiece { x: f64, lo: f64, hi: f64 },
    #[error("x = {x} is too close to saturation to evaluate")]
    NearSaturation { x: f64 },
}

/// One closed-form piece of a value function on a switching interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValuePiece {
    /// Lower end of the interval in state space.
    pub x_lo: f64,
    /// Upper end of the interval in state space.
    pub x_hi: f64,
    /// Constant multiplying the homogeneous solution `(1−x)^{−p/a}`.
    pub k: f64,
    /// Aggregate rate on the interval (1/day).
    pub a: f64,
    /// Owning player's adoption rate `λ_i u_i` (1/day).
    pub b: f64,
    /// Owning player's running acceleration cost `γ_i (u_min − u_i)`;
    /// zero iff the player holds `u_min`, negative otherwise.
    pub c: f64,
    /// Owning player's discount rate (1/day).
    pub p: f64,
}

impl ValuePiece {
    /// Builds the piece induced by a control level against opponents whose
    /// aggregate rate is `a_minus_i`.
    pub fn from_controls(
        params: &PlayerParams,
        config: &GameConfig,
        a_minus_i: f64,
        level: ControlLevel,
        k: f64,
        x_lo: f64,
        x_hi: f64,
    ) -> Self {
        let u = config.control_value(level);
        let b = params.lambda * u;
        Self {
            x_lo,
            x_hi,
            k,
            a: a_minus_i + b,
            b,
            c: params.gamma * (config.u_min - u),
            p: params.p,
        }
    }

    fn check_domain(&self, x: f64) -> Result<(), HjbError> {
        if x >= 1.0 - X_EVAL_GUARD {
            return Err(HjbError::NearSaturation { x });
        }
        if x < self.x_lo || x > self.x_hi {
            return Err(HjbError::OutsidePiece {
                x,
                lo: self.x_lo,
                hi: self.x_hi,
            });
        }
        Ok(())
    }

    /// `(1−x)^{−p/a}`, guarded away from the saturation singularity.
    fn pow_term(&self, x: f64) -> f64 {
        (-(self.p / self.a) * (-x).ln_1p()).exp()
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        let y = 1.0 - x;
        self.k * self.pow_term(x) - self.b * y / (self.a + self.p) - self.c / self.p
    }

    pub(crate) fn derivative_unchecked(&self, x: f64) -> f64 {
        let y = 1.0 - x;
        (self.p / self.a) * self.k * self.pow_term(x) / y + self.b / (self.a + self.p)
    }

    /// Value `V(x)` on the piece.
    pub fn eval(&self, x: f64) -> Result<f64, HjbError> {
        self.check_domain(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// Derivative `dV/dx` on the piece.
    pub fn derivative(&self, x: f64) -> Result<f64, HjbError> {
        self.check_domain(x)?;
        Ok(self.derivative_unchecked(x))
    }

    /// Defect of the interval ODE, `p V − a (1−x) V' + b (1−x) + c`.
    /// Zero up to rounding for every well-formed piece.
    pub fn residual(&self, x: f64) -> Result<f64, HjbError> {
        self.check_domain(x)?;
        let y = 1.0 - x;
        Ok(
            self.p * self.eval_unchecked(x) - self.a * y * self.derivative_unchecked(x)
                + self.b * y
                + self.c,
        )
    }

    /// Constant `K` that makes a piece with these coefficients take the
    /// value `v` at state `x`; used to glue pieces by continuity.
    pub fn k_matching_value(&self, x: f64, v: f64) -> f64 {
        let y = 1.0 - x;
        (v + self.b * y / (self.a + self.p) + self.c / self.p) / self.pow_term(x)
    }
}

/// Piecewise closed-form value function of one player, ordered in `x` and
/// covering `[z, 1)`. The terminal piece has `K = 0`, which keeps the value
/// bounded at saturation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub pieces: Vec<ValuePiece>,
    /// Index of the owning player.
    pub player: usize,
}

impl ValueFunction {
    pub fn domain(&self) -> (f64, f64) {
        (
            self.pieces.first().map_or(0.0, |p| p.x_lo),
            self.pieces.last().map_or(1.0, |p| p.x_hi),
        )
    }

    /// Piece containing state `x`.
    pub fn piece_at(&self, x: f64) -> &ValuePiece {
        let idx = self
            .pieces
            .iter()
            .position(|p| x <= p.x_hi)
            .unwrap_or(self.pieces.len() - 1);
        &self.pieces[idx]
    }

    pub fn eval(&self, x: f64) -> Result<f64, HjbError> {
        self.piece_at(x).eval(x)
    }

    pub fn derivative(&self, x: f64) -> Result<f64, HjbError> {
        self.piece_at(x).derivative(x)
    }

    /// Absolute value mismatches at the internal piece boundaries.
    pub fn continuity_defects(&self) -> Vec<f64> {
        self.pieces
            .windows(2)
            .map(|w| {
                let beta = w[1].x_lo;
                (w[0].eval_unchecked(beta) - w[1].eval_unchecked(beta)).abs()
            })
            .collect()
    }

    pub fn max_continuity_defect(&self) -> f64 {
        self.continuity_defects().into_iter().fold(0.0, f64::max)
    }

    /// CSV export with columns `x, V, DV, piece_index, K, a, b, c`;
    /// `points_per_piece` samples per piece plus both endpoints.
    pub fn write_csv<W: Write>(&self, w: &mut W, points_per_piece: usize) -> io::Result<()> {
        writeln!(w, "x,V,DV,piece_index,K,a,b,c")?;
        for (idx, piece) in self.pieces.iter().enumerate() {
            let hi = piece.x_hi.min(1.0 - 1e-9);
            let steps = points_per_piece.max(2);
            for s in 0..steps {
                let x = piece.x_lo + (hi - piece.x_lo) * s as f64 / (steps - 1) as f64;
                writeln!(
                    w,
                    "{x},{},{},{idx},{},{},{},{}",
                    piece.eval_unchecked(x),
                    piece.derivative_unchecked(x),
                    piece.k,
                    piece.a,
                    piece.b,
                    piece.c
                )?;
            }
        }
        Ok(())
    }
}

/// Sign test deciding the optimal control at state `x` given a value piece:
/// `Φ(x) = λ_i (1−x)(1 − V'(x)) − γ_i`. Positive means the best response is
/// `u_max`, negative `u_min`, zero is a switching state.
pub fn switching_coefficient(
    x: f64,
    piece: &ValuePiece,
    lambda_i: f64,
    gamma_i: f64,
) -> Result<f64, HjbError> {
    let dv = piece.derivative(x)?;
    Ok(lambda_i * (1.0 - x) * (1.0 - dv) - gamma_i)
}

/// The control-dependent part of the Hamiltonian in closed form,
///
/// ```text
/// T(u, a_{−i})(x) = u [ (1 − b/(p+a)) (1−x) − (K p / a) (1−x)^{−p/a} − γ/λ ]
/// ```
///
/// with `a = a_{−i} + λ u` and `b = λ u` for the candidate level `u`. The
/// best response at `x` maximizes `T` over the two levels.
pub fn switching_function_t(
    u_candidate: ControlLevel,
    a_minus_i: f64,
    k: f64,
    x: f64,
    params: &PlayerParams,
    config: &GameConfig,
) -> f64 {
    debug_assert!((0.0..1.0).contains(&x));
    let u = config.control_value(u_candidate);
    let b = params.lambda * u;
    let a = a_minus_i + b;
    let y = 1.0 - x;
    let pow = (-(params.p / a) * (-x).ln_1p()).exp();
    u * ((1.0 - b / (params.p + a)) * y - k * params.p / a * pow - params.gamma / params.lambda)
}
