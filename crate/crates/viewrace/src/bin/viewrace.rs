//! Command-line harness for the content-promotion game toolkit.
//!
//! Exit codes: 0 success, 2 configuration error, 3 non-convergence,
//! 4 internal verification failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use viewrace::best_response::{best_response, cost_quadrature, verify_best_response, BrOutcome};
use viewrace::calibrate::estimate_lambda;
use viewrace::dynamics::{simulate, StopCondition};
use viewrace::equilibrium::{
    best_response_iteration, epsilon_equilibrium, symmetric_equilibrium, vanishing_threshold,
    EquilibriumError, EquilibriumKind, EquilibriumResult, IterationMode,
};
use viewrace::finite_horizon::{fh_propagate, FhValuePiece};
use viewrace::model::{ControlLevel, GameConfig, Horizon, PlayerParams, StrategyProfile};
use viewrace::monte_carlo::{mc_convergence_report, mc_run, McConfig};
use viewrace::scenario::load_scenario;

const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "viewrace",
    about = "Solvers and simulators for the content-promotion differential game",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration file.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory for CSV artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the fluid trajectory under a strategy profile.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Profile: `equilibrium`, `all-min`, `all-max`, or thresholds `0.2,0.3,…`.
        #[arg(long, default_value = "equilibrium")]
        profile: String,
        /// Add uniformly sampled rows every SAMPLE_DT days.
        #[arg(long)]
        sample_dt: Option<f64>,
        /// Stop at this time instead of the scenario horizon.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Compute one player's best response against fixed opponents.
    BestResponse {
        #[command(flatten)]
        common: CommonArgs,
        /// Player index (0-based).
        #[arg(long, default_value_t = 0)]
        player: usize,
        /// Opponent profile, same grammar as --profile.
        #[arg(long, default_value = "all-min")]
        opponents: String,
        /// Verify against this many random alternative strategies.
        #[arg(long, default_value_t = 0)]
        alternatives: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Compute an equilibrium of the scenario.
    Equilibrium {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// Discount rate used for ε estimation (1/day).
        #[arg(long, default_value_t = 0.01)]
        p: f64,
        /// Convergence tolerance of the iteration fallback.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 50)]
        max_rounds: usize,
        /// Use simultaneous (Jacobi) updates instead of sequential ones.
        #[arg(long)]
        jacobi: bool,
    },
    /// Stochastic viewer-base simulation against the fluid trajectory.
    Montecarlo {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "M", default_value_t = 10_000)]
        m: u64,
        #[arg(long, default_value_t = 10)]
        reps: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "equilibrium")]
        profile: String,
        #[arg(long)]
        sample_dt: Option<f64>,
        /// Run a convergence report over this list instead of a single M.
        #[arg(long, value_delimiter = ',')]
        m_list: Option<Vec<u64>>,
        /// Skip the per-replication CSV files.
        #[arg(long)]
        no_rep_files: bool,
    },
    /// Finite-horizon value surface of one player.
    FiniteHorizon {
        #[command(flatten)]
        common: CommonArgs,
        /// First switching boundary (days).
        #[arg(long, default_value_t = 1e-4)]
        t1: f64,
        /// Surface extent in time (days).
        #[arg(long, default_value_t = 4e-4)]
        t_max: f64,
        #[arg(long, default_value_t = 60)]
        nx: usize,
        #[arg(long, default_value_t = 40)]
        nt: usize,
    },
    /// Estimate λ from an observed viewcount series.
    Calibrate {
        /// Input CSV with columns t,views.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Size of the potential viewer base.
        #[arg(long)]
        viewer_base: f64,
        /// Acceleration assumed while the series was recorded.
        #[arg(long, default_value_t = 1.0)]
        u_assumed: f64,
    },
    /// Threshold sweeps reproducing the numerical study figures.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepKind,
        /// Scenario file (required for `custom`).
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Auto,
    Symmetric,
    Epsilon,
    Iterate,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKind {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig2d,
    Custom,
}

struct CliFailure {
    code: u8,
    message: String,
}

impl CliFailure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn verification(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VERIFICATION,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for CliFailure {
    fn from(e: std::io::Error) -> Self {
        CliFailure::config(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    // VIEWRACE_THREADS caps worker parallelism; unset means rayon's default
    if let Ok(threads) = std::env::var("VIEWRACE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("viewrace: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn load_validated(path: &Path) -> Result<GameConfig, CliFailure> {
    let config = load_scenario(path).map_err(|e| CliFailure::config(e.to_string()))?;
    let violations = config.validate();
    if !violations.is_empty() {
        let mut msg = String::from("scenario violates the model constraints:\n");
        for v in &violations {
            msg.push_str(&format!("  {v}\n"));
        }
        return Err(CliFailure::config(msg));
    }
    Ok(config)
}

fn parse_profile(spec: &str, config: &GameConfig) -> Result<StrategyProfile, CliFailure> {
    let n = config.n_players();
    match spec {
        "all-min" => Ok(StrategyProfile::all_min(n)),
        "all-max" => Ok(StrategyProfile::all_max(n)),
        "equilibrium" => equilibrium_profile(config).map(|eq| eq.profile),
        list => {
            let thresholds: Result<Vec<f64>, _> =
                list.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let thresholds =
                thresholds.map_err(|e| CliFailure::config(format!("bad threshold list: {e}")))?;
            if thresholds.len() != n {
                return Err(CliFailure::config(format!(
                    "expected {n} thresholds, got {}",
                    thresholds.len()
                )));
            }
            Ok(StrategyProfile::from_thresholds(&thresholds))
        }
    }
}

fn sorted_gamma_common_lambda(config: &GameConfig) -> bool {
    let lambda = config.players[0].lambda;
    config.players.iter().all(|p| p.lambda == lambda)
        && config.players.windows(2).all(|w| w[0].gamma > w[1].gamma)
        && lambda > config.players[0].gamma
}

fn equilibrium_profile(config: &GameConfig) -> Result<EquilibriumResult, CliFailure> {
    solve_equilibrium(
        config,
        Method::Auto,
        0.01,
        1e-9,
        50,
        IterationMode::GaussSeidel,
    )
}

fn solve_equilibrium(
    config: &GameConfig,
    method: Method,
    p_eps: f64,
    tol: f64,
    max_rounds: usize,
    mode: IterationMode,
) -> Result<EquilibriumResult, CliFailure> {
    let pick = match method {
        Method::Auto => {
            if config.is_symmetric() {
                Method::Symmetric
            } else if sorted_gamma_common_lambda(config) {
                Method::Epsilon
            } else {
                Method::Iterate
            }
        }
        other => other,
    };
    let result = match pick {
        Method::Symmetric => {
            if !config.is_symmetric() {
                return Err(CliFailure::config(
                    "symmetric solver needs identical players",
                ));
            }
            let q = config.players[0];
            symmetric_equilibrium(
                q.lambda,
                q.gamma,
                q.p,
                config.n_players(),
                config.u_min,
                config.u_max,
            )
        }
        Method::Epsilon => epsilon_equilibrium(config, p_eps),
        Method::Iterate => best_response_iteration(
            config,
            &StrategyProfile::all_min(config.n_players()),
            max_rounds,
            tol,
            mode,
        ),
        Method::Auto => unreachable!(),
    };
    result.map_err(|e| match e {
        EquilibriumError::NonConvergence { .. } => CliFailure {
            code: EXIT_NONCONVERGENCE,
            message: e.to_string(),
        },
        EquilibriumError::PreconditionViolated(_) => CliFailure::config(e.to_string()),
        other => CliFailure::verification(other.to_string()),
    })
}

fn create(out: &Path, name: &str) -> Result<BufWriter<File>, CliFailure> {
    std::fs::create_dir_all(out)?;
    Ok(BufWriter::new(File::create(out.join(name))?))
}

fn run(cli: Cli) -> Result<(), CliFailure> {
    match cli.command {
        Command::Simulate {
            common,
            profile,
            sample_dt,
            t_end,
        } => {
            let config = load_validated(&common.scenario)?;
            let profile = parse_profile(&profile, &config)?;
            let stop = match (t_end, config.horizon) {
                (Some(te), _) => StopCondition::Time { t_end: te },
                (None, Horizon::Finite { tau }) => StopCondition::Time { t_end: tau },
                (None, Horizon::Infinite) => StopCondition::default(),
            };
            let traj = simulate(&config, &profile, stop);
            let mut w = create(&common.out, "trajectory.csv")?;
            traj.write_csv(&mut w, sample_dt)?;
            w.flush()?;
            let bound: f64 = (0..config.n_players())
                .map(|i| {
                    if traj.truncated {
                        viewrace::dynamics::tail_bound(&config, i, traj.stop_time)
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max);
            println!(
                "segments: {}  stop time: {:.6} days  x(stop) = {:.9}  tail bound: {:.3e}",
                traj.segments.len(),
                traj.stop_time,
                traj.stop_x,
                bound
            );
            Ok(())
        }

        Command::BestResponse {
            common,
            player,
            opponents,
            alternatives,
            seed,
        } => {
            let config = load_validated(&common.scenario)?;
            if player >= config.n_players() {
                return Err(CliFailure::config(format!(
                    "player {player} out of range (N = {})",
                    config.n_players()
                )));
            }
            let opponents = parse_profile(&opponents, &config)?;
            let br = best_response(&config, player, &opponents)
                .map_err(|e| CliFailure::verification(e.to_string()))?;
            let z = config.z_total();
            let v = br
                .value_function
                .eval(z)
                .map_err(|e| CliFailure::verification(e.to_string()))?;
            let mut full = opponents.clone();
            full.set(player, br.strategy.clone());
            let q = cost_quadrature(&config, &full, player);

            match br.diagnostics.outcome {
                BrOutcome::NoSwitch => {
                    println!("player {player}: NoSwitch (never accelerates), V(z) = {v:.9}")
                }
                BrOutcome::Switching => println!(
                    "player {player}: switches at {:?}, last switch {:.6}, V(z) = {v:.9}",
                    br.strategy.breakpoints(),
                    br.last_switch.unwrap_or(f64::NAN)
                ),
            }
            println!(
                "quadrature check: J = {:.9} (defect {:.3e}, tail bound {:.3e})",
                q.value,
                (q.value - v).abs(),
                q.tail_bound
            );

            let mut w = create(&common.out, "best_response.csv")?;
            writeln!(w, "interval,x_lo,x_hi,level,a_minus_i,K,continuity_defect")?;
            for (idx, d) in br.diagnostics.intervals.iter().enumerate() {
                writeln!(
                    w,
                    "{idx},{},{},{},{},{},{}",
                    d.x_lo,
                    d.x_hi,
                    match d.level {
                        ControlLevel::Min => "min",
                        ControlLevel::Max => "max",
                    },
                    d.a_minus_i,
                    d.k,
                    d.continuity_defect
                )?;
            }
            w.flush()?;
            let mut w = create(&common.out, "value_function.csv")?;
            br.value_function.write_csv(&mut w, 64)?;
            w.flush()?;

            if alternatives > 0 {
                let report =
                    verify_best_response(&config, player, &opponents, &br, alternatives, seed)
                        .map_err(|e| CliFailure::verification(e.to_string()))?;
                println!(
                    "verification: {} alternatives, worst margin {:.3e}",
                    report.n_alternatives, report.worst_margin
                );
            }
            Ok(())
        }

        Command::Equilibrium {
            common,
            method,
            p,
            tol,
            max_rounds,
            jacobi,
        } => {
            let config = load_validated(&common.scenario)?;
            let mode = if jacobi {
                IterationMode::Jacobi
            } else {
                IterationMode::GaussSeidel
            };
            let eq = solve_equilibrium(&config, method, p, tol, max_rounds, mode)?;
            match eq.kind {
                EquilibriumKind::SymmetricExact => {
                    println!("SymmetricExact, x*={:.6}", eq.x_star.unwrap())
                }
                EquilibriumKind::DegenerateAllMin => println!("DegenerateAllMin"),
                EquilibriumKind::EpsilonApprox => {
                    println!("EpsilonApprox, epsilon={:.6e}", eq.epsilon)
                }
                EquilibriumKind::IterationFixedPoint => {
                    println!("IterationFixedPoint, epsilon={:.6e}", eq.epsilon)
                }
            }
            let mut w = create(&common.out, "equilibrium.csv")?;
            writeln!(w, "player,threshold,switch_time,epsilon_contribution")?;
            for i in 0..config.n_players() {
                let threshold = eq
                    .profile
                    .get(i)
                    .reporting_threshold()
                    .map_or("multi".to_string(), |t| t.to_string());
                let time = eq
                    .switch_times
                    .as_ref()
                    .map_or(String::new(), |v| v[i].to_string());
                let contrib = eq
                    .epsilon_contributions
                    .as_ref()
                    .map_or("0".to_string(), |v| v[i].to_string());
                writeln!(w, "{i},{threshold},{time},{contrib}")?;
            }
            w.flush()?;
            Ok(())
        }

        Command::Montecarlo {
            common,
            m,
            reps,
            seed,
            profile,
            sample_dt,
            m_list,
            no_rep_files,
        } => {
            let config = load_validated(&common.scenario)?;
            let profile = parse_profile(&profile, &config)?;
            if let Some(list) = m_list {
                let report = mc_convergence_report(&config, &profile, &list, reps, seed);
                let mut w = create(&common.out, "mc_summary.csv")?;
                report.write_csv(&mut w)?;
                w.flush()?;
                for row in &report.rows {
                    println!(
                        "M = {:>8}: mean sup error {:.6} (std {:.6})",
                        row.viewers, row.mean_sup_error, row.std_sup_error
                    );
                }
                if report.low_replication_warning {
                    println!("warning: single replication; statistics carry wide variance");
                }
                if let Some(ok) = report.quadrupling_ratio_ok {
                    println!(
                        "error ratio across 4x steps within [0.25, 1.0]: {}",
                        if ok { "yes" } else { "NO" }
                    );
                }
                return Ok(());
            }

            let mc = McConfig {
                sample_dt,
                ..McConfig::new(m, reps, seed)
            };
            let runs = mc_run(&config, &profile, &mc);
            let fluid = simulate(&config, &profile, StopCondition::default());
            let errors: Vec<f64> = runs.iter().map(|r| r.sup_error_vs_fluid(&fluid)).collect();
            let mean = errors.iter().sum::<f64>() / errors.len() as f64;
            let var =
                errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / errors.len() as f64;
            if !no_rep_files {
                for (idx, run) in runs.iter().enumerate() {
                    let mut w = create(&common.out, &format!("rep_{idx:04}.csv"))?;
                    run.write_csv(&mut w, mc.sample_dt)?;
                    w.flush()?;
                }
            }
            let mut w = create(&common.out, "mc_summary.csv")?;
            writeln!(w, "M,mean_sup_error,std")?;
            writeln!(w, "{m},{mean},{}", var.sqrt())?;
            w.flush()?;
            println!(
                "M = {m}, reps = {reps}: mean sup error {mean:.6} (std {:.6})",
                var.sqrt()
            );
            if reps == 1 {
                println!("warning: single replication; statistics carry wide variance");
            }
            Ok(())
        }

        Command::FiniteHorizon {
            common,
            t1,
            t_max,
            nx,
            nt,
        } => {
            let config = load_validated(&common.scenario)?;
            let q = config.players[0];
            if q.p <= 0.0 || q.p.is_nan() {
                return Err(CliFailure::config(
                    "finite-horizon surface needs p > 0 for player 0",
                ));
            }
            let n = config.n_players() as f64;
            // first interval: everyone accelerates; afterwards everyone
            // drops to u_min
            let a1 = n * q.lambda * config.u_max;
            let b1 = q.lambda * config.u_max;
            let c1 = q.gamma * (config.u_min - config.u_max);
            let first = FhValuePiece::first_interval(a1, b1, c1, q.p, t1);
            let a2 = n * q.lambda * config.u_min;
            let b2 = q.lambda * config.u_min;
            let second = fh_propagate(&first, t1, a2, b2, 0.0)
                .map_err(|e| CliFailure::verification(e.to_string()))?;
            println!(
                "first interval [0, {t1}], propagated piece matching defect {:.3e}",
                second.matching_defect
            );

            let mut w = create(&common.out, "fh_surface.csv")?;
            writeln!(w, "t,x,V,piece_index")?;
            for it in 0..=nt {
                let t = t_max * it as f64 / nt as f64;
                for ix in 0..=nx {
                    let x = 0.999 * ix as f64 / nx as f64;
                    let (value, idx) = if t <= t1 {
                        (first.eval(x, t), 0)
                    } else {
                        (second.eval(x, t), 1)
                    };
                    if let Ok(v) = value {
                        writeln!(w, "{t},{x},{v},{idx}")?;
                    }
                }
            }
            w.flush()?;
            Ok(())
        }

        Command::Calibrate {
            input,
            out,
            viewer_base,
            u_assumed,
        } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| CliFailure::config(format!("cannot read {}: {e}", input.display())))?;
            let mut series = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with('t') {
                    continue;
                }
                let mut parts = line.split(',');
                let (Some(t), Some(v)) = (parts.next(), parts.next()) else {
                    return Err(CliFailure::config(format!(
                        "line {}: expected `t,views`",
                        lineno + 1
                    )));
                };
                let t: f64 = t.trim().parse().map_err(|e| {
                    CliFailure::config(format!("line {}: bad time: {e}", lineno + 1))
                })?;
                let v: f64 = v.trim().parse().map_err(|e| {
                    CliFailure::config(format!("line {}: bad viewcount: {e}", lineno + 1))
                })?;
                series.push((t, v));
            }
            let fit = estimate_lambda(&series, viewer_base, u_assumed)
                .map_err(|e| CliFailure::config(e.to_string()))?;
            println!(
                "lambda_hat = {:.9}  z_hat = {:.9}  rms_residual = {:.3e}",
                fit.lambda_hat, fit.z_hat, fit.rms_residual
            );
            let mut w = create(&out, "calibrate.csv")?;
            writeln!(w, "lambda_hat,z_hat,rms_residual")?;
            writeln!(w, "{},{},{}", fit.lambda_hat, fit.z_hat, fit.rms_residual)?;
            w.flush()?;
            Ok(())
        }

        Command::Sweep {
            kind,
            scenario,
            out,
            points,
        } => run_sweep(kind, scenario.as_deref(), &out, points),
    }
}

/// One sweep curve: a label plus the player parameters it evaluates.
struct SweepCurve {
    label: String,
    params: PlayerParams,
}

fn write_sweep(
    out: &Path,
    name: &str,
    a_grid: &[f64],
    curves: &[SweepCurve],
    u_min: f64,
    u_max: f64,
) -> Result<(), CliFailure> {
    let mut w = create(out, &format!("{name}.csv"))?;
    write!(w, "a_minus_i")?;
    for c in curves {
        write!(w, ",{}", c.label)?;
    }
    writeln!(w)?;
    for &a in a_grid {
        write!(w, "{a}")?;
        for c in curves {
            write!(w, ",{}", vanishing_threshold(&c.params, a, u_min, u_max))?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    let mut g = create(out, &format!("{name}.gp"))?;
    writeln!(g, "# gnuplot script for {name}.csv")?;
    writeln!(g, "set datafile separator ','")?;
    writeln!(g, "set key autotitle columnhead")?;
    writeln!(g, "set xlabel 'aggregate opponent rate a_{{-i}} (1/day)'")?;
    writeln!(g, "set ylabel 'switching threshold x_{{0,i}}'")?;
    writeln!(g, "set yrange [0:1]")?;
    write!(g, "plot ")?;
    for (idx, _) in curves.iter().enumerate() {
        if idx > 0 {
            write!(g, ", ")?;
        }
        write!(g, "'{name}.csv' using 1:{} with lines", idx + 2)?;
    }
    writeln!(g)?;
    g.flush()?;
    Ok(())
}

fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect()
}

fn run_sweep(
    kind: SweepKind,
    scenario: Option<&Path>,
    out: &Path,
    points: usize,
) -> Result<(), CliFailure> {
    let lambda0 = 100.0;
    let u_min = 1.0;
    let u_max = 10.0;
    match kind {
        SweepKind::Fig2a | SweepKind::Fig2b => {
            let n = if matches!(kind, SweepKind::Fig2a) {
                10
            } else {
                30
            };
            let name = if n == 10 { "fig2a" } else { "fig2b" };
            let a_grid = grid(
                (n - 1) as f64 * lambda0 * u_min,
                (n - 1) as f64 * lambda0 * u_max,
                points,
            );
            let curves = vec![SweepCurve {
                label: "x_threshold".into(),
                params: PlayerParams::new(lambda0, 0.7 * lambda0, lambda0),
            }];
            write_sweep(out, name, &a_grid, &curves, u_min, u_max)?;
            println!("{name}: {points} grid points, floor 1-gamma/lambda = 0.3");
            Ok(())
        }
        SweepKind::Fig2c => {
            let n = 10;
            let a_grid = grid(
                (n - 1) as f64 * lambda0 * u_min,
                (n - 1) as f64 * lambda0 * u_max,
                points,
            );
            let curves: Vec<SweepCurve> = [0.01, 0.1, 0.5, 0.7, 0.95]
                .iter()
                .map(|ratio| SweepCurve {
                    label: format!("gamma_over_lambda_{ratio}"),
                    params: PlayerParams::new(lambda0, ratio * lambda0, lambda0),
                })
                .collect();
            write_sweep(out, "fig2c", &a_grid, &curves, u_min, u_max)?;
            println!("fig2c: five cost ratios over {points} grid points");
            Ok(())
        }
        SweepKind::Fig2d => {
            let n = 10;
            let a_grid = grid(
                (n - 1) as f64 * lambda0 * u_min,
                (n - 1) as f64 * lambda0 * u_max,
                points,
            );
            let gamma = 0.7 * lambda0;
            let curves = vec![
                SweepCurve {
                    label: "low_lambda_class".into(),
                    params: PlayerParams::new(lambda0, gamma, lambda0),
                },
                SweepCurve {
                    label: "high_lambda_class".into(),
                    params: PlayerParams::new(2.0 * lambda0, gamma, lambda0),
                },
            ];
            write_sweep(out, "fig2d", &a_grid, &curves, u_min, u_max)?;
            println!("fig2d: heterogeneous classes over {points} grid points");
            Ok(())
        }
        SweepKind::Custom => {
            let Some(path) = scenario else {
                return Err(CliFailure::config("custom sweep needs --scenario"));
            };
            let config = load_validated(path)?;
            let lo = (0..config.n_players())
                .map(|i| {
                    let levels = vec![ControlLevel::Min; config.n_players()];
                    config.aggregate_rate_excluding(&levels, i)
                })
                .fold(f64::INFINITY, f64::min);
            let hi = (0..config.n_players())
                .map(|i| {
                    let levels = vec![ControlLevel::Max; config.n_players()];
                    config.aggregate_rate_excluding(&levels, i)
                })
                .fold(0.0, f64::max);
            let a_grid = grid(lo, hi, points);
            let curves: Vec<SweepCurve> = config
                .players
                .iter()
                .enumerate()
                .map(|(i, p)| SweepCurve {
                    label: format!("player_{i}"),
                    params: *p,
                })
                .collect();
            write_sweep(out, "custom", &a_grid, &curves, config.u_min, config.u_max)?;
            println!(
                "custom sweep: {} players over {points} grid points",
                config.n_players()
            );
            Ok(())
        }
    }
}
