//! Cross-checks of the closed-form machinery against generic numerical
//! oracles that share none of its code paths.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use viewrace::best_response::{best_response, cost_quadrature, verify_best_response};
use viewrace::dynamics::{advance, simulate, time_to_reach, StopCondition};
use viewrace::model::{
    ControlLevel, GameConfig, Horizon, PlayerParams, PlayerStrategy, StrategyProfile,
};

fn random_config(rng: &mut ChaCha8Rng, n_max: usize) -> GameConfig {
    let n = rng.random_range(1..=n_max);
    let players = (0..n)
        .map(|_| PlayerParams {
            lambda: rng.random_range(20.0..300.0),
            gamma: rng.random_range(5.0..200.0),
            p: rng.random_range(1.0..300.0),
            z: if rng.random_bool(0.3) {
                rng.random_range(0.0..(0.5 / n as f64))
            } else {
                0.0
            },
        })
        .collect();
    let u_min = rng.random_range(1.0..3.0);
    GameConfig {
        players,
        u_min,
        u_max: u_min + rng.random_range(1.0..12.0),
        horizon: Horizon::Infinite,
    }
}

fn random_profile(rng: &mut ChaCha8Rng, n: usize) -> StrategyProfile {
    let strategies = (0..n)
        .map(|_| {
            if rng.random_bool(0.7) {
                PlayerStrategy::threshold(rng.random_range(0.0..0.95))
            } else {
                let b1: f64 = rng.random_range(0.05..0.5);
                let b2: f64 = rng.random_range(b1 + 0.05..0.95);
                PlayerStrategy::new(
                    vec![b1, b2],
                    vec![ControlLevel::Min, ControlLevel::Max, ControlLevel::Min],
                )
                .unwrap()
            }
        })
        .collect();
    StrategyProfile::new(strategies)
}

#[test]
fn simulate_matches_an_adaptive_ode_integrator() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..25 {
        let config = random_config(&mut rng, 5);
        let n = config.n_players();
        let profile = random_profile(&mut rng, n);
        let traj = simulate(&config, &profile, StopCondition::default());

        // compare on [0, t_95] where the state reaches 0.95
        let a_min = config.aggregate_rate(&vec![ControlLevel::Min; n]);
        let t_end = time_to_reach(config.z_total(), 0.95, a_min).unwrap();
        let sample_times: Vec<f64> = (1..=200).map(|k| t_end * k as f64 / 200.0).collect();
        let oracle = common::rkf45_states(&config, &profile, &sample_times, 1e-12, 1e-14);

        let mut sup: f64 = 0.0;
        for (k, &t) in sample_times.iter().enumerate() {
            let exact = traj.x_at(t);
            for i in 0..n {
                sup = sup.max((exact[i] - oracle[k][i]).abs());
            }
        }
        assert!(sup <= 1e-8, "case {case}: sup-norm {sup} against RKF45");
    }
}

#[test]
fn quadrature_matches_numeric_time_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..15 {
        let config = random_config(&mut rng, 4);
        let n = config.n_players();
        let profile = random_profile(&mut rng, n);
        let traj = simulate(&config, &profile, StopCondition::default());
        let i = rng.random_range(0..n);
        let params = config.players[i];

        // integrand of the discounted running cost along the trajectory
        let f = |s: f64| {
            let x_agg = traj.x_agg_at(s);
            let seg = traj
                .segments
                .iter()
                .find(|g| s < g.t_end)
                .unwrap_or_else(|| traj.segments.last().unwrap());
            let u = config.control_value(seg.levels[i]);
            let xdot = params.lambda * u * (1.0 - x_agg);
            (-params.p * s).exp() * (-xdot + params.gamma * (u - config.u_min))
        };
        // integrate far enough that the analytic tail is negligible
        let t_hi = (20.0 / params.p).max(traj.stop_time * 1.2);
        let mut numeric = 0.0;
        // integrate per segment so Simpson never straddles a control jump
        let mut cut_points: Vec<f64> = traj
            .segments
            .iter()
            .map(|g| g.t_start)
            .filter(|t| *t < t_hi)
            .collect();
        cut_points.push(t_hi);
        for w in cut_points.windows(2) {
            numeric += common::adaptive_simpson(&f, w[0], w[1], 1e-13);
        }
        // add the exact exponential tail beyond t_hi
        let last = traj.segments.last().unwrap();
        let u_last = config.control_value(last.levels[i]);
        let y_hi = 1.0 - traj.x_agg_at(t_hi);
        let tail = -params.lambda * u_last * y_hi * (-params.p * t_hi).exp() / (params.p + last.a)
            + params.gamma * (u_last - config.u_min) * (-params.p * t_hi).exp() / params.p;
        numeric += tail;

        let q = cost_quadrature(&config, &profile, i);
        assert!(
            (q.value - numeric).abs() <= 1e-8,
            "case {case}: closed form {} vs numeric {numeric}",
            q.value
        );
    }
}

#[test]
fn best_responses_survive_randomized_cross_validation() {
    // the backward construction must (a) reproduce its own value by
    // quadrature and (b) beat randomly drawn alternative strategies, over
    // configurations it was never tuned for (mixed λ/γ, dominated players,
    // nonzero initial fractions, irregular opponents)
    let mut rng = ChaCha8Rng::seed_from_u64(31_337);
    let mut checked = 0;
    while checked < 40 {
        let config = random_config(&mut rng, 4);
        let n = config.n_players();
        let opponents = random_profile(&mut rng, n);
        let player = rng.random_range(0..n);
        let br = match best_response(&config, player, &opponents) {
            Ok(br) => br,
            Err(e) => panic!("construction failed for {config:?}: {e}"),
        };
        assert!(
            br.value_function.max_continuity_defect() <= 1e-9,
            "continuity defect {} for {config:?}",
            br.value_function.max_continuity_defect()
        );
        let seed = rng.random::<u64>();
        if let Err(e) = verify_best_response(&config, player, &opponents, &br, 100, seed) {
            panic!("player {player} of {config:?} vs {opponents:?}: {e}");
        }
        checked += 1;
    }
}

proptest! {
    #[test]
    fn advance_and_time_to_reach_invert_each_other(
        x_from in 0.0..0.99f64,
        frac in 0.0..1.0f64,
        a in 1.0..1e5f64,
    ) {
        let x_to = x_from + (0.999 - x_from) * frac;
        let t = time_to_reach(x_from, x_to, a).unwrap();
        let back = advance(x_from, a, t).unwrap();
        prop_assert!((back - x_to).abs() <= 1e-12);
    }

    #[test]
    fn trajectories_are_monotone_with_conserved_aggregate(
        seed in 0u64..5000,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = random_config(&mut rng, 4);
        let n = config.n_players();
        let profile = random_profile(&mut rng, n);
        let traj = simulate(&config, &profile, StopCondition::default());
        let mut prev_agg = -1.0;
        let mut prev: Vec<f64> = vec![-1.0; n];
        for seg in &traj.segments {
            prop_assert!(seg.x_agg_start > prev_agg);
            for (xi, pi) in seg.x_start.iter().zip(&prev) {
                prop_assert!(xi >= pi);
            }
            let sum: f64 = seg.x_start.iter().sum();
            prop_assert!((sum - seg.x_agg_start).abs() <= 1e-12);
            prev_agg = seg.x_agg_start;
            prev = seg.x_start.clone();
        }
        // bounded by breakpoint count + 1
        let breakpoints: usize = (0..n).map(|i| profile.get(i).breakpoints().len()).sum();
        prop_assert!(traj.segments.len() <= breakpoints + 1);
    }
}
