#![allow(dead_code, clippy::too_many_arguments)] // each integration test compiles only the oracles it uses

//! Shared numerical oracles for the integration tests: a generic adaptive
//! Runge–Kutta–Fehlberg integrator for the state-feedback dynamics and an
//! adaptive Simpson rule for time quadrature. Both are independent of the
//! closed forms they cross-check.

use viewrace::model::{GameConfig, StrategyProfile};

fn rhs(config: &GameConfig, profile: &StrategyProfile, x: &[f64]) -> Vec<f64> {
    let x_agg: f64 = x.iter().sum::<f64>().min(1.0);
    let y = 1.0 - x_agg;
    (0..x.len())
        .map(|i| {
            let u = config.control_value(profile.get(i).level_at(x_agg));
            config.players[i].lambda * u * y
        })
        .collect()
}

/// Integrates the fluid ODE with RKF45 and returns the per-player states at
/// each requested sample time (which must be increasing).
pub fn rkf45_states(
    config: &GameConfig,
    profile: &StrategyProfile,
    sample_times: &[f64],
    rtol: f64,
    atol: f64,
) -> Vec<Vec<f64>> {
    let mut x: Vec<f64> = config.players.iter().map(|p| p.z).collect();
    let mut t = 0.0;
    let mut h = sample_times.last().copied().unwrap_or(1e-3) * 1e-4;
    let h_min = sample_times.last().copied().unwrap_or(1e-3) * 1e-14;
    let mut out = Vec::with_capacity(sample_times.len());

    for &ts in sample_times {
        while t < ts {
            let mut step = h.min(ts - t);
            loop {
                let n = x.len();
                let k1 = rhs(config, profile, &x);
                let stage = |coeffs: &[(f64, &Vec<f64>)]| -> Vec<f64> {
                    (0..n)
                        .map(|i| x[i] + step * coeffs.iter().map(|(c, k)| c * k[i]).sum::<f64>())
                        .collect()
                };
                let k2 = rhs(config, profile, &stage(&[(0.25, &k1)]));
                let k3 = rhs(
                    config,
                    profile,
                    &stage(&[(3.0 / 32.0, &k1), (9.0 / 32.0, &k2)]),
                );
                let k4 = rhs(
                    config,
                    profile,
                    &stage(&[
                        (1932.0 / 2197.0, &k1),
                        (-7200.0 / 2197.0, &k2),
                        (7296.0 / 2197.0, &k3),
                    ]),
                );
                let k5 = rhs(
                    config,
                    profile,
                    &stage(&[
                        (439.0 / 216.0, &k1),
                        (-8.0, &k2),
                        (3680.0 / 513.0, &k3),
                        (-845.0 / 4104.0, &k4),
                    ]),
                );
                let k6 = rhs(
                    config,
                    profile,
                    &stage(&[
                        (-8.0 / 27.0, &k1),
                        (2.0, &k2),
                        (-3544.0 / 2565.0, &k3),
                        (1859.0 / 4104.0, &k4),
                        (-11.0 / 40.0, &k5),
                    ]),
                );
                let mut err: f64 = 0.0;
                let mut x5 = vec![0.0; n];
                for i in 0..n {
                    let fourth = x[i]
                        + step
                            * (25.0 / 216.0 * k1[i]
                                + 1408.0 / 2565.0 * k3[i]
                                + 2197.0 / 4104.0 * k4[i]
                                - 0.2 * k5[i]);
                    let fifth = x[i]
                        + step
                            * (16.0 / 135.0 * k1[i]
                                + 6656.0 / 12825.0 * k3[i]
                                + 28561.0 / 56430.0 * k4[i]
                                - 9.0 / 50.0 * k5[i]
                                + 2.0 / 55.0 * k6[i]);
                    let tol = atol + rtol * fifth.abs().max(x[i].abs());
                    err = err.max(((fifth - fourth) / tol).abs());
                    x5[i] = fifth;
                }
                if err <= 1.0 || step <= h_min {
                    t += step;
                    x = x5;
                    let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
                    h = (step * factor.clamp(0.2, 5.0)).max(h_min);
                    break;
                }
                step = (step * 0.9 * err.powf(-0.25)).max(h_min).min(step * 0.5);
            }
        }
        out.push(x.clone());
    }
    out
}

/// Adaptive Simpson quadrature on `[lo, hi]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
        }
    }
    let fa = f(lo);
    let fb = f(hi);
    let fm = f(0.5 * (lo + hi));
    let whole = simpson(lo, fa, hi, fb, fm);
    recurse(f, lo, fa, hi, fb, fm, whole, tol, 40)
}
