//! Finite-horizon value machinery.
//!
//! With a finite horizon the value function solves the linear PDE
//!
//! ```text
//! V̇ + p V − a (1 − x) V' + b (1 − x) + c = 0,    V(x, 0) = 0,
//! ```
//!
//! whose homogeneous solutions are `φ(a^{-1} ln(1−x) − t) (1−x)^{−p/a}` for
//! any differentiable `φ`. The first switching interval admits a closed
//! form; across later switching boundaries the free function `φ` is pinned
//! down numerically by matching `V(·, t₁)` on a state grid and interpolating
//! along the characteristic variable `v = a^{-1} ln(1−x) − t`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FhError {
    #[error("x = {x} is outside [0, 1)")]
    DomainX { x: f64 },
    #[error("t = {t} is outside the piece's time interval [{lo}, {hi}]")]
    DomainT { t: f64, lo: f64, hi: f64 },
    #[error("state grid cannot reproduce the boundary values (defect {defect})")]
    GridInsufficient { defect: f64 },
    #[error("characteristic v = {v} leaves the sampled table [{lo}, {hi}]")]
    OutsideTable { v: f64, lo: f64, hi: f64 },
}

/// Stationary particular solution of the value PDE.
///
/// For `p > 0` this is `(1−x)^{−p/a} − [p b (1−x) + (p+a) c] / (p (p+a))`
/// (the leading homogeneous term is kept; any homogeneous multiple added to
/// a particular solution is still one). For `p = 0` the equation loses its
/// zeroth-order term and the particular solution becomes
/// `(b/a) x − (c/a) ln(1−x)`.
pub fn fh_particular(x: f64, a: f64, b: f64, c: f64, p: f64) -> Result<f64, FhError> {
    if !(0.0..1.0).contains(&x) {
        return Err(FhError::DomainX { x });
    }
    let y = 1.0 - x;
    if p > 0.0 {
        let pow = (-(p / a) * (-x).ln_1p()).exp();
        Ok(pow - (p * b * y + (p + a) * c) / (p * (p + a)))
    } else {
        Ok(b / a * x - c / a * (-x).ln_1p())
    }
}

/// Value on the first switching interval, where `V(x, 0) = 0` pins `φ` in
/// closed form:
///
/// ```text
/// V(x, t) = −(1 − e^{−p t}) c/p − (1 − e^{−(p+a) t}) b (1−x)/(p+a)
/// ```
///
/// As `t → ∞` this tends to `−[c/p + b(1−x)/(p+a)]`, the constant-control
/// infinite-horizon value.
pub fn fh_first_interval(x: f64, t: f64, a: f64, b: f64, c: f64, p: f64) -> f64 {
    debug_assert!(p > 0.0, "closed form needs p > 0");
    let y = 1.0 - x;
    -(-(-p * t).exp_m1()) * c / p - (-(-(p + a) * t).exp_m1()) * b * y / (p + a)
}

/// Representation of the free function `φ` of a piece.
#[derive(Debug, Clone)]
enum PhiRepr {
    /// Closed form valid on the first interval.
    FirstInterval,
    /// `φ` sampled over its characteristic argument with monotone-cubic
    /// interpolation (Fritsch–Carlson slopes).
    Sampled {
        v: Vec<f64>,
        phi: Vec<f64>,
        slope: Vec<f64>,
    },
}

/// One time-interval piece of a finite-horizon value function.
#[derive(Debug, Clone)]
pub struct FhValuePiece {
    pub t_lo: f64,
    pub t_hi: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub p: f64,
    repr: PhiRepr,
    /// Interpolation defect measured when the piece was built by
    /// propagation; zero for the first interval.
    pub matching_defect: f64,
}

/// Number of state-grid points used to sample `φ` during propagation,
/// log-spaced in `1 − x`.
pub const PROPAGATION_GRID: usize = 1000;
const GRID_Y_LO: f64 = 1e-6;

fn grid_states(y_lo: f64) -> Vec<f64> {
    // y log-spaced in [y_lo, 1]; x = 1 − y ascending in v
    (0..PROPAGATION_GRID)
        .map(|j| {
            let ln_y = y_lo.ln() * (1.0 - j as f64 / (PROPAGATION_GRID - 1) as f64);
            1.0 - ln_y.exp()
        })
        .collect()
}

/// Fritsch–Carlson slopes for a monotone cubic Hermite interpolant.
fn pchip_slopes(v: &[f64], phi: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n - 1];
    for j in 0..n - 1 {
        d[j] = (phi[j + 1] - phi[j]) / (v[j + 1] - v[j]);
    }
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for j in 1..n - 1 {
        if d[j - 1] * d[j] <= 0.0 {
            m[j] = 0.0;
        } else {
            let w1 = 2.0 * (v[j + 1] - v[j]) + (v[j] - v[j - 1]);
            let w2 = (v[j + 1] - v[j]) + 2.0 * (v[j] - v[j - 1]);
            m[j] = (w1 + w2) / (w1 / d[j - 1] + w2 / d[j]);
        }
    }
    m
}

fn hermite_eval(v: &[f64], phi: &[f64], slope: &[f64], vq: f64) -> Result<f64, FhError> {
    let n = v.len();
    let (lo, hi) = (v[0], v[n - 1]);
    // tolerate rounding at the table edges
    let span = hi - lo;
    if vq < lo - 1e-12 * span.abs().max(1.0) || vq > hi + 1e-12 * span.abs().max(1.0) {
        return Err(FhError::OutsideTable { v: vq, lo, hi });
    }
    let vq = vq.clamp(lo, hi);
    let mut j = match v.binary_search_by(|probe| probe.partial_cmp(&vq).unwrap()) {
        Ok(j) => j.min(n - 2),
        Err(j) => j.saturating_sub(1).min(n - 2),
    };
    if vq < v[j] {
        j = j.saturating_sub(1);
    }
    let h = v[j + 1] - v[j];
    let s = (vq - v[j]) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    Ok(h00 * phi[j] + h10 * h * slope[j] + h01 * phi[j + 1] + h11 * h * slope[j + 1])
}

impl FhValuePiece {
    /// The first switching interval `[0, t_hi]` with its closed-form `φ`.
    pub fn first_interval(a: f64, b: f64, c: f64, p: f64, t_hi: f64) -> Self {
        Self {
            t_lo: 0.0,
            t_hi,
            a,
            b,
            c,
            p,
            repr: PhiRepr::FirstInterval,
            matching_defect: 0.0,
        }
    }

    /// Smallest `1 − x` the piece can evaluate at time `t`. Sampled pieces
    /// cover only the characteristic cone flowing out of their table.
    fn min_representable_y(&self, t: f64) -> f64 {
        match &self.repr {
            PhiRepr::FirstInterval => 0.0,
            PhiRepr::Sampled { v, .. } => (self.a * (v[0] + t)).exp(),
        }
    }

    /// Value `V(x, t)` on the piece.
    pub fn eval(&self, x: f64, t: f64) -> Result<f64, FhError> {
        if !(0.0..1.0).contains(&x) {
            return Err(FhError::DomainX { x });
        }
        if t < self.t_lo - 1e-12 || t > self.t_hi + 1e-12 {
            return Err(FhError::DomainT {
                t,
                lo: self.t_lo,
                hi: self.t_hi,
            });
        }
        match &self.repr {
            PhiRepr::FirstInterval => Ok(fh_first_interval(x, t, self.a, self.b, self.c, self.p)),
            PhiRepr::Sampled { v, phi, slope } => {
                let ln_y = (-x).ln_1p();
                let vq = ln_y / self.a - t;
                let hom = hermite_eval(v, phi, slope, vq)?;
                let pow = (-(self.p / self.a) * ln_y).exp();
                Ok(hom * pow + fh_particular(x, self.a, self.b, self.c, self.p)?)
            }
        }
    }
}

/// Extends a value piece past a switching boundary at `t₁` where the
/// interval constants change to `(a₂, b₂, c₂)`. The new piece's `φ` is
/// sampled by matching `V(x, t₁)` on a state grid (log-spaced in `1−x`,
/// uniform in the characteristic variable) and interpolated monotone-cubically;
/// the midpoint matching defect is measured and must stay below `1e-5`.
pub fn fh_propagate(
    piece: &FhValuePiece,
    t1: f64,
    a2: f64,
    b2: f64,
    c2: f64,
) -> Result<FhValuePiece, FhError> {
    // stay inside the characteristic cone the source piece can evaluate
    let y_lo = GRID_Y_LO.max(piece.min_representable_y(t1) * (1.0 + 1e-9));
    let states = grid_states(y_lo);
    let mut v = Vec::with_capacity(states.len());
    let mut phi = Vec::with_capacity(states.len());
    for &x in &states {
        let ln_y = (-x).ln_1p();
        let boundary = piece.eval(x, t1)?;
        let particular = fh_particular(x, a2, b2, c2, piece.p)?;
        let pow_inv = ((piece.p / a2) * ln_y).exp(); // y^{+p/a₂}
        v.push(ln_y / a2 - t1);
        phi.push((boundary - particular) * pow_inv);
    }
    let slope = pchip_slopes(&v, &phi);
    let next = FhValuePiece {
        t_lo: t1,
        t_hi: f64::INFINITY,
        a: a2,
        b: b2,
        c: c2,
        p: piece.p,
        repr: PhiRepr::Sampled { v, phi, slope },
        matching_defect: 0.0,
    };

    // measure the defect where interpolation actually interpolates
    let mut defect: f64 = 0.0;
    for w in states.windows(2) {
        let xm = 0.5 * (w[0] + w[1]);
        let got = next.eval(xm, t1)?;
        let want = piece.eval(xm, t1)?;
        defect = defect.max((got - want).abs());
    }
    if defect > 1e-5 {
        return Err(FhError::GridInsufficient { defect });
    }
    Ok(FhValuePiece {
        matching_defect: defect,
        ..next
    })
}
