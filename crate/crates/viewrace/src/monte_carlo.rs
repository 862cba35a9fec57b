//! Stochastic viewer-base simulation validating the fluid approximation.
//!
//! With `W` watched viewers out of `M` and empirical fraction `x̂ = W/M`,
//! each of the `M − W` unwatched viewers adopts content `j` at rate
//! `λ_j u_j(x̂)`. The simulation is event-driven and exact:
//!
//! 1. draw an exponential waiting time with rate `(M−W) Σ_j λ_j u_j`;
//! 2. pick the adopted content with probability `λ_j u_j / Σ_k λ_k u_k`;
//! 3. re-evaluate every strategy against the new `x̂` and repeat.
//!
//! Replications are independent; each owns a counter-based RNG substream
//! derived from `(seed, replication index)`, so runs are deterministic and
//! parallelizable with stable output order.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{simulate, StopCondition, Trajectory};
use crate::model::{GameConfig, StrategyProfile};

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    /// Size of the potential viewer base.
    pub viewers: u64,
    pub replications: u32,
    pub seed: u64,
    /// Optional uniform sampling step for CSV export (days); event times
    /// are always exact internally.
    pub sample_dt: Option<f64>,
}

impl McConfig {
    pub fn new(viewers: u64, replications: u32, seed: u64) -> Self {
        Self {
            viewers,
            replications,
            seed,
            sample_dt: None,
        }
    }
}

/// One stochastic trajectory: adoption events in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct McTrajectory {
    pub viewers: u64,
    /// Watched counts per content at `t = 0`.
    pub initial_counts: Vec<u64>,
    /// Event times (days), strictly increasing.
    pub event_times: Vec<f64>,
    /// Content adopted at each event.
    pub event_content: Vec<u32>,
}

impl McTrajectory {
    pub fn n_events(&self) -> usize {
        self.event_times.len()
    }

    /// Per-content watched counts just after the `k`-th event
    /// (`k = 0` means the initial counts).
    pub fn counts_after(&self, k: usize) -> Vec<u64> {
        let mut counts = self.initial_counts.clone();
        for &c in &self.event_content[..k] {
            counts[c as usize] += 1;
        }
        counts
    }

    /// Empirical per-content fractions at time `t`.
    pub fn fractions_at(&self, t: f64) -> Vec<f64> {
        let k = self.event_times.partition_point(|&et| et <= t);
        self.counts_after(k)
            .iter()
            .map(|&c| c as f64 / self.viewers as f64)
            .collect()
    }

    /// Sup-norm distance between the empirical aggregate fraction and the
    /// fluid aggregate, evaluated on both sides of every jump (where the
    /// distance between a step function and a monotone one is attained).
    pub fn sup_error_vs_fluid(&self, fluid: &Trajectory) -> f64 {
        let m = self.viewers as f64;
        let mut watched: u64 = self.initial_counts.iter().sum();
        let mut sup: f64 = 0.0;
        for (k, &t) in self.event_times.iter().enumerate() {
            let fluid_x = fluid.x_agg_at(t.min(fluid.stop_time));
            let before = watched as f64 / m;
            sup = sup.max((before - fluid_x).abs());
            watched += 1;
            let after = watched as f64 / m;
            sup = sup.max((after - fluid_x).abs());
            let _ = k;
        }
        sup
    }

    /// CSV export with header `t, x_1..x_N`: one row per event, plus
    /// optional uniform samples.
    pub fn write_csv<W: Write>(&self, w: &mut W, sample_dt: Option<f64>) -> io::Result<()> {
        let n = self.initial_counts.len();
        write!(w, "t")?;
        for i in 1..=n {
            write!(w, ",x_{i}")?;
        }
        writeln!(w)?;
        let m = self.viewers as f64;
        let write_row = |w: &mut W, t: f64, counts: &[u64]| -> io::Result<()> {
            write!(w, "{t}")?;
            for &c in counts {
                write!(w, ",{}", c as f64 / m)?;
            }
            writeln!(w)
        };
        let mut counts = self.initial_counts.clone();
        write_row(w, 0.0, &counts)?;
        let mut next_sample = sample_dt;
        for (k, &t) in self.event_times.iter().enumerate() {
            if let Some(dt) = sample_dt {
                while let Some(ts) = next_sample {
                    if ts >= t {
                        break;
                    }
                    write_row(w, ts, &counts)?;
                    next_sample = Some(ts + dt);
                }
            }
            counts[self.event_content[k] as usize] += 1;
            write_row(w, t, &counts)?;
        }
        Ok(())
    }
}

fn run_one(
    config: &GameConfig,
    profile: &StrategyProfile,
    mc: &McConfig,
    rep: u64,
) -> McTrajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
    rng.set_stream(rep);
    let m = mc.viewers;
    let n = config.n_players();

    let initial_counts: Vec<u64> = config
        .players
        .iter()
        .map(|p| (p.z * m as f64).floor() as u64)
        .collect();
    let mut counts = initial_counts.clone();
    let mut watched: u64 = counts.iter().sum();
    let mut t = 0.0;
    let mut event_times = Vec::new();
    let mut event_content = Vec::new();

    while watched < m {
        let x_hat = watched as f64 / m as f64;
        let rates: Vec<f64> = (0..n)
            .map(|j| {
                config.players[j].lambda * config.control_value(profile.get(j).level_at(x_hat))
            })
            .collect();
        let rate_sum: f64 = rates.iter().sum();
        let total = (m - watched) as f64 * rate_sum;

        // inverse-CDF exponential with u ∈ (0, 1]
        let u: f64 = 1.0 - rng.random::<f64>();
        t += -u.ln() / total;

        let mut pick = rng.random::<f64>() * rate_sum;
        let mut chosen = n - 1;
        for (j, r) in rates.iter().enumerate() {
            if pick < *r {
                chosen = j;
                break;
            }
            pick -= r;
        }
        counts[chosen] += 1;
        watched += 1;
        event_times.push(t);
        event_content.push(chosen as u32);
    }

    McTrajectory {
        viewers: m,
        initial_counts,
        event_times,
        event_content,
    }
}

/// Runs the stochastic simulation; one trajectory per replication, ordered
/// by replication index and bit-identical for identical inputs.
pub fn mc_run(config: &GameConfig, profile: &StrategyProfile, mc: &McConfig) -> Vec<McTrajectory> {
    let violations = config.validate();
    assert!(
        violations.is_empty(),
        "invalid configuration: {violations:?}"
    );
    assert!(mc.viewers >= 1 && mc.replications >= 1);
    (0..mc.replications as u64)
        .into_par_iter()
        .map(|rep| run_one(config, profile, mc, rep))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub viewers: u64,
    pub mean_sup_error: f64,
    pub std_sup_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Ratios `error(M₂)/error(M₁)` for consecutive list entries.
    pub error_ratios: Vec<f64>,
    /// For consecutive entries with `M₂ = 4 M₁`: whether every ratio lies
    /// in `[0.25, 1.0]`, consistent with `M^{−1/2}` scaling within noise.
    /// `None` when the list has no quadrupling step.
    pub quadrupling_ratio_ok: Option<bool>,
    /// Single-replication runs carry wide-variance statistics.
    pub low_replication_warning: bool,
}

impl ConvergenceReport {
    /// Summary CSV with columns `M, mean_sup_error, std`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "M,mean_sup_error,std")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{}",
                row.viewers, row.mean_sup_error, row.std_sup_error
            )?;
        }
        Ok(())
    }
}

/// Empirical convergence of the stochastic model to the fluid trajectory
/// over an increasing list of viewer-base sizes.
pub fn mc_convergence_report(
    config: &GameConfig,
    profile: &StrategyProfile,
    m_list: &[u64],
    replications: u32,
    seed: u64,
) -> ConvergenceReport {
    assert!(
        m_list.windows(2).all(|w| w[0] < w[1]),
        "M list must increase"
    );
    let fluid = simulate(config, profile, StopCondition::default());
    let mut rows = Vec::with_capacity(m_list.len());
    for (idx, &m) in m_list.iter().enumerate() {
        let mc = McConfig::new(m, replications, seed.wrapping_add(idx as u64));
        let runs = mc_run(config, profile, &mc);
        let errors: Vec<f64> = runs
            .par_iter()
            .map(|r| r.sup_error_vs_fluid(&fluid))
            .collect();
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / errors.len() as f64;
        rows.push(ConvergenceRow {
            viewers: m,
            mean_sup_error: mean,
            std_sup_error: var.sqrt(),
        });
    }
    let error_ratios: Vec<f64> = rows
        .windows(2)
        .map(|w| w[1].mean_sup_error / w[0].mean_sup_error)
        .collect();
    let quadrupling: Vec<&f64> = rows
        .windows(2)
        .zip(&error_ratios)
        .filter(|(w, _)| w[1].viewers == 4 * w[0].viewers)
        .map(|(_, r)| r)
        .collect();
    let quadrupling_ratio_ok = if quadrupling.is_empty() {
        None
    } else {
        Some(quadrupling.iter().all(|r| (0.25..=1.0).contains(*r)))
    };
    ConvergenceReport {
        rows,
        error_ratios,
        quadrupling_ratio_ok,
        low_replication_warning: replications == 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ControlLevel, PlayerParams};

    fn benchmark_config() -> GameConfig {
        GameConfig::symmetric(10, PlayerParams::new(100.0, 70.0, 100.0), 1.0, 10.0)
    }

    #[test]
    fn identical_seeds_give_identical_trajectories() {
        let config = benchmark_config();
        let profile = StrategyProfile::from_thresholds(&[0.23; 10]);
        let mc = McConfig::new(500, 4, 42);
        let a = mc_run(&config, &profile, &mc);
        let b = mc_run(&config, &profile, &mc);
        assert_eq!(a, b);
        // distinct streams differ
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn single_viewer_picks_equal_rate_contents_evenly() {
        let config = GameConfig {
            players: vec![
                PlayerParams::new(100.0, 70.0, 100.0),
                PlayerParams::new(100.0, 70.0, 100.0),
            ],
            u_min: 1.0,
            u_max: 10.0,
            horizon: crate::model::Horizon::Infinite,
        };
        let profile = StrategyProfile::all_min(2);
        let mc = McConfig::new(1, 10_000, 7);
        let runs = mc_run(&config, &profile, &mc);
        let hits = runs.iter().filter(|r| r.event_content == [0]).count() as f64;
        let freq = hits / 10_000.0;
        assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn counts_conserve_and_fractions_are_monotone() {
        let config = benchmark_config();
        let profile = StrategyProfile::from_thresholds(&[0.23; 10]);
        let mc = McConfig::new(2000, 2, 3);
        for run in mc_run(&config, &profile, &mc) {
            assert_eq!(run.n_events(), 2000);
            let final_counts = run.counts_after(run.n_events());
            assert_eq!(final_counts.iter().sum::<u64>(), 2000);
            let mut prev = vec![0.0; 10];
            for k in [0, 500, 1000, 1500, 2000] {
                let fr: Vec<f64> = run
                    .counts_after(k)
                    .iter()
                    .map(|&c| c as f64 / 2000.0)
                    .collect();
                for j in 0..10 {
                    assert!(fr[j] >= prev[j]);
                }
                prev = fr;
            }
            // strictly increasing event times
            for w in run.event_times.windows(2) {
                assert!(w[0] < w[1]);
            }
        }
    }

    #[test]
    fn single_content_mean_matches_the_binomial_fluid() {
        // N = 1 at u_min: each viewer adopts independently at rate λ, so
        // E[x̂(t)] = 1 − e^{−λ t} exactly.
        let config = GameConfig::symmetric(1, PlayerParams::new(100.0, 70.0, 100.0), 1.0, 10.0);
        let profile = StrategyProfile::all_min(1);
        let m = 400u64;
        let reps = 400u32;
        let runs = mc_run(&config, &profile, &McConfig::new(m, reps, 11));
        for t in [0.002, 0.01, 0.03] {
            let mean: f64 = runs.iter().map(|r| r.fractions_at(t)[0]).sum::<f64>() / reps as f64;
            let p = 1.0 - (-100.0f64 * t).exp();
            let se = (p * (1.0 - p) / (m as f64 * reps as f64)).sqrt();
            assert!(
                (mean - p).abs() <= 3.0 * se + 1e-12,
                "t={t}: mean {mean}, fluid {p}, se {se}"
            );
        }
    }

    #[test]
    fn aggregate_statistics_are_exchangeable_for_symmetric_players() {
        let config = benchmark_config();
        let profile = StrategyProfile::from_thresholds(&[0.23; 10]);
        let m = 1000u64;
        let reps = 200u32;
        let runs = mc_run(&config, &profile, &McConfig::new(m, reps, 13));
        // mean final share per content, compared pairwise at 2σ
        let mut means = vec![0.0; 10];
        for run in &runs {
            let counts = run.counts_after(run.n_events());
            for j in 0..10 {
                means[j] += counts[j] as f64 / m as f64;
            }
        }
        for mj in &mut means {
            *mj /= reps as f64;
        }
        // share of one content across reps has std ≈ sqrt(p(1-p)/M)/sqrt(reps)
        let p = 0.1;
        let sigma = (p * (1.0 - p) / m as f64).sqrt() / (reps as f64).sqrt();
        for (j, mean) in means.iter().enumerate() {
            assert!(
                (mean - p).abs() <= 2.0 * sigma + 2e-3,
                "content {j}: mean {mean} vs {p} (sigma {sigma})"
            );
        }
    }

    #[test]
    fn sup_error_shrinks_with_m_and_ratio_is_sane() {
        let config = benchmark_config();
        let profile = StrategyProfile::from_thresholds(&[0.23; 10]);
        let report = mc_convergence_report(&config, &profile, &[1000, 4000, 16000], 30, 17);
        assert!(report.rows[0].mean_sup_error > report.rows[1].mean_sup_error);
        assert!(report.rows[1].mean_sup_error > report.rows[2].mean_sup_error);
        assert_eq!(report.quadrupling_ratio_ok, Some(true));
        assert!(!report.low_replication_warning);
    }

    #[test]
    fn single_replication_reports_get_flagged() {
        let config = benchmark_config();
        let profile = StrategyProfile::all_min(10);
        let report = mc_convergence_report(&config, &profile, &[200, 400], 1, 5);
        assert!(report.low_replication_warning);
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.quadrupling_ratio_ok, None);
    }

    #[test]
    fn threshold_feedback_reacts_to_the_empirical_fraction() {
        // with x̂ feedback, everyone plays Max at x̂ ≤ threshold and Min above
        let config = benchmark_config();
        let profile = StrategyProfile::from_thresholds(&[0.5; 10]);
        let mc = McConfig::new(100, 1, 23);
        let run = &mc_run(&config, &profile, &mc)[0];
        // inter-event gaps after the threshold should stretch by ≈ u_max/u_min
        // on average; just sanity-check the trajectory is complete
        assert_eq!(run.n_events(), 100);
        let at_threshold = run.fractions_at(run.event_times[49]);
        assert!((at_threshold.iter().sum::<f64>() - 0.5).abs() < 1e-12);
        let _ = ControlLevel::Max;
    }

    #[test]
    fn csv_export_shape() {
        let config = benchmark_config();
        let profile = StrategyProfile::all_min(10);
        let run = &mc_run(&config, &profile, &McConfig::new(50, 1, 1))[0];
        let mut buf = Vec::new();
        run.write_csv(&mut buf, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x_1,"));
        assert_eq!(text.lines().count(), 1 + 1 + 50); // header + t0 + events
    }
}
