use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use modnls::config::{parse_config, ModulationKind, Overrides, RunConfig};
use modnls::error::Error;
use modnls::experiments::{
    convergence_sweep, martingale_diagnostic, SweepConfig,
};
use modnls::integrators::{
    default_initial_field, run_trajectory, RandomSequence, RecordOptions, Scheme, SchemeSpec,
};
use modnls::io;
use modnls::spectral::Grid;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "modnls",
    about = "Spectral solver and convergence experiments for the dispersion-modulated cubic NLS on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// TOML config file; flags take precedence over file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
    /// Largest Fourier mode K (2K grid points per axis)
    #[arg(long)]
    k: Option<usize>,
    /// Sobolev index of the error norm
    #[arg(long)]
    sigma: Option<f64>,
    /// Time horizon T
    #[arg(long)]
    t_end: Option<f64>,
    /// Step counts N, comma separated
    #[arg(long, value_delimiter = ',')]
    steps: Option<Vec<usize>>,
    /// Monte Carlo sequences for the randomized scheme
    #[arg(long)]
    m: Option<usize>,
    /// Schemes: randomized, classical, strang (comma separated)
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    /// 2/3-rule dealiasing of cubic products
    #[arg(long)]
    dealias: Option<bool>,
    /// Modulation kind: affine, sine, rough, brownian
    #[arg(long)]
    kind: Option<String>,
    /// Regularity exponent of the rough modulation
    #[arg(long)]
    alpha: Option<f64>,
    /// Seed of the modulation synthesis
    #[arg(long)]
    mod_seed: Option<u64>,
    /// Base seed of the scheme randomization
    #[arg(long)]
    seed: Option<u64>,
    /// Dedicated seed of the reference run
    #[arg(long)]
    reference_seed: Option<u64>,
    /// Reference refinement factor (τ_ref = τ_min/refinement)
    #[arg(long)]
    refinement: Option<usize>,
    /// Recompute the reference at 2× refinement and reject drifting sweeps
    #[arg(long)]
    check_reference: Option<bool>,
    /// Worker threads (results are independent of this value)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write the final snapshot and a per-step norm log
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of time steps (default: largest configured step count)
        #[arg(long)]
        n: Option<usize>,
        /// Scheme to run (default: first configured scheme)
        #[arg(long)]
        scheme: Option<String>,
    },
    /// Run the convergence sweep and fit log-log slopes
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Generate a modulation path and write it to CSV
    Genmod {
        #[command(flatten)]
        common: CommonArgs,
        /// Output sample count
        #[arg(long, default_value_t = 2048)]
        points: usize,
        /// Report estimated W^{α,2} norms for these α values
        #[arg(long, value_delimiter = ',')]
        w_alphas: Option<Vec<f64>>,
        /// Resolution of the W-norm estimator
        #[arg(long, default_value_t = 1000)]
        w_resolution: usize,
    },
    /// Probe the stratified quadrature: unbiasedness and martingale growth
    Diagnose {
        #[command(flatten)]
        common: CommonArgs,
        /// Resonance frequency K in e^{igK}
        #[arg(long, default_value_t = 1)]
        k_res: i64,
        /// Left endpoint t_n of the probed step
        #[arg(long, default_value_t = 0.0)]
        t_n: f64,
        /// Step size τ (default: T / largest configured step count)
        #[arg(long)]
        tau: Option<f64>,
        /// Steps of the partial-sum growth curve (0 disables it)
        #[arg(long, default_value_t = 1024)]
        growth_steps: usize,
        /// Quadrature nodes of the reference integrals
        #[arg(long, default_value_t = 4096)]
        quad_points: usize,
    },
}

fn overrides_from(common: &CommonArgs) -> anyhow::Result<Overrides> {
    let schemes = match &common.schemes {
        Some(names) => Some(
            names
                .iter()
                .map(|s| s.parse::<Scheme>())
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let kind = match &common.kind {
        Some(name) => Some(name.parse::<ModulationKind>()?),
        None => None,
    };
    Ok(Overrides {
        largest_mode: common.k,
        sigma: common.sigma,
        t_end: common.t_end,
        step_counts: common.steps.clone(),
        m: common.m,
        schemes,
        dealias: common.dealias,
        kind,
        alpha: common.alpha,
        modulation_seed: common.mod_seed,
        base_seed: common.seed,
        reference_seed: common.reference_seed,
        refinement: common.refinement,
        check_reference: common.check_reference,
        threads: common.threads,
        output_dir: common.out.clone(),
    })
}

fn load_config(common: &CommonArgs) -> anyhow::Result<RunConfig> {
    let overrides = overrides_from(common)?;
    let config = parse_config(common.config.as_deref(), &overrides)?;
    if let Some(threads) = config.threads {
        // ignore the error if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    std::fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("cannot create {}", config.output_dir.display()))?;
    Ok(config)
}

#[derive(Serialize)]
struct SnapshotMeta {
    grid_dimension: usize,
    largest_mode: usize,
    grid_points: usize,
    dx: f64,
    dx_per_mode: f64,
    time: f64,
    scheme: &'static str,
}

#[derive(Serialize)]
struct SimulateManifest {
    config: RunConfig,
    scheme: &'static str,
    n_steps: usize,
    wall_clock_seconds: f64,
}

fn cmd_simulate(
    common: &CommonArgs,
    n: Option<usize>,
    scheme: Option<String>,
) -> anyhow::Result<()> {
    let start = Instant::now();
    let config = load_config(common)?;
    let scheme = match scheme {
        Some(name) => name.parse::<Scheme>()?,
        None => config.schemes[0],
    };
    let n_steps = n.unwrap_or_else(|| *config.step_counts.iter().max().unwrap());
    let spec = SchemeSpec::with_dealias(scheme, config.dealias);

    let grid: Grid<f64> = Grid::new(config.dimension, config.largest_mode)?;
    let u0 = default_initial_field(&grid);
    let g = config.modulation.build(config.t_end)?;
    let seq = RandomSequence::new(config.base_seed);
    let xi = scheme.is_randomized().then_some(&seq);
    let trajectory = run_trajectory(
        &u0,
        &g,
        spec,
        config.t_end,
        n_steps,
        xi,
        RecordOptions {
            store_states: false,
            store_norms: true,
        },
    )?;

    let dir = &config.output_dir;
    io::write_field_snapshot(&dir.join("snapshot.csv"), &trajectory.final_state)?;
    io::write_manifest(
        &dir.join("snapshot_meta.json"),
        &SnapshotMeta {
            grid_dimension: grid.dimension(),
            largest_mode: grid.largest_mode(),
            grid_points: grid.len(),
            dx: grid.spacing(),
            dx_per_mode: grid.spacing_per_mode(),
            time: config.t_end,
            scheme: scheme.label(),
        },
    )?;
    io::write_norm_log(&dir.join("norms.csv"), &trajectory)?;
    io::write_manifest(
        &dir.join("manifest.json"),
        &SimulateManifest {
            config,
            scheme: scheme.label(),
            n_steps,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SchemeFitSummary {
    scheme: &'static str,
    slope: Option<f64>,
    intercept: Option<f64>,
    residual: Option<f64>,
    reference_drift: Option<f64>,
}

#[derive(Serialize)]
struct ConvergenceManifest {
    config: RunConfig,
    fits: Vec<SchemeFitSummary>,
    wall_clock_seconds: f64,
    failed: bool,
    error: Option<String>,
}

fn cmd_convergence(common: &CommonArgs) -> anyhow::Result<()> {
    let start = Instant::now();
    let config = load_config(common)?;
    let grid: Grid<f64> = Grid::new(config.dimension, config.largest_mode)?;
    let u0 = default_initial_field(&grid);
    let g = config.modulation.build(config.t_end)?;
    let specs: Vec<SchemeSpec> = config
        .schemes
        .iter()
        .map(|&s| SchemeSpec::with_dealias(s, config.dealias))
        .collect();
    let sweep_config = SweepConfig {
        sigma: config.sigma,
        t_end: config.t_end,
        step_counts: config.step_counts.clone(),
        m: config.m,
        base_seed: config.base_seed,
        reference_seed: config.reference_seed,
        refinement: config.refinement,
        check_reference: config.check_reference,
        dealias: config.dealias,
    };

    let dir = config.output_dir.clone();
    match convergence_sweep(&u0, &g, &specs, &sweep_config) {
        Ok(sweeps) => {
            io::write_sweep_csv(&dir.join("sweep.csv"), &sweeps)?;
            io::write_loglog_csv(&dir.join("loglog.csv"), &sweeps)?;
            let fits = sweeps
                .iter()
                .map(|s| SchemeFitSummary {
                    scheme: s.spec.scheme.label(),
                    slope: s.fit.as_ref().map(|f| f.slope),
                    intercept: s.fit.as_ref().map(|f| f.intercept),
                    residual: s.fit.as_ref().map(|f| f.residual),
                    reference_drift: s.reference_drift,
                })
                .collect();
            io::write_manifest(
                &dir.join("manifest.json"),
                &ConvergenceManifest {
                    config,
                    fits,
                    wall_clock_seconds: start.elapsed().as_secs_f64(),
                    failed: false,
                    error: None,
                },
            )?;
            Ok(())
        }
        Err(err) => {
            io::write_manifest(
                &dir.join("manifest.json"),
                &ConvergenceManifest {
                    config,
                    fits: Vec::new(),
                    wall_clock_seconds: start.elapsed().as_secs_f64(),
                    failed: true,
                    error: Some(err.to_string()),
                },
            )?;
            Err(err.into())
        }
    }
}

#[derive(Serialize)]
struct WNormEstimate {
    alpha: f64,
    resolution: usize,
    estimate: f64,
}

#[derive(Serialize)]
struct GenmodManifest {
    config: RunConfig,
    normalization: f64,
    points: usize,
    w_norms: Vec<WNormEstimate>,
    wall_clock_seconds: f64,
}

fn cmd_genmod(
    common: &CommonArgs,
    points: usize,
    w_alphas: Option<Vec<f64>>,
    w_resolution: usize,
) -> anyhow::Result<()> {
    let start = Instant::now();
    let config = load_config(common)?;
    let g = config.modulation.build(config.t_end)?;
    let dir = &config.output_dir;
    io::write_modulation_csv(&dir.join("modulation.csv"), &g, config.t_end, points)?;
    let mut w_norms = Vec::new();
    for alpha in w_alphas.unwrap_or_default() {
        w_norms.push(WNormEstimate {
            alpha,
            resolution: w_resolution,
            estimate: modnls::modulation::estimate_w_norm(&g, alpha, w_resolution)?,
        });
    }
    io::write_manifest(
        &dir.join("manifest.json"),
        &GenmodManifest {
            normalization: g.normalization(),
            config,
            points,
            w_norms,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct DiagnoseManifest {
    config: RunConfig,
    k_res: i64,
    t_n: f64,
    tau: f64,
    sample_mean: (f64, f64),
    integral: (f64, f64),
    difference: (f64, f64),
    stddev: (f64, f64),
    growth_steps: usize,
    wall_clock_seconds: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_diagnose(
    common: &CommonArgs,
    k_res: i64,
    t_n: f64,
    tau: Option<f64>,
    growth_steps: usize,
    quad_points: usize,
) -> anyhow::Result<()> {
    let start = Instant::now();
    let config = load_config(common)?;
    let g = config.modulation.build(config.t_end)?;
    let n_max = *config.step_counts.iter().max().unwrap();
    let tau = tau.unwrap_or(config.t_end / n_max as f64);
    let diagnostic = martingale_diagnostic(
        &g,
        k_res,
        t_n,
        tau,
        config.m,
        config.base_seed,
        growth_steps,
        quad_points,
    )?;
    let dir = &config.output_dir;
    io::write_partial_sums_csv(&dir.join("partial_sums.csv"), &diagnostic)?;
    let c = &diagnostic.check;
    io::write_manifest(
        &dir.join("report.json"),
        &DiagnoseManifest {
            config,
            k_res,
            t_n,
            tau,
            sample_mean: (c.sample_mean.re, c.sample_mean.im),
            integral: (c.integral.re, c.integral.im),
            difference: (c.difference.re, c.difference.im),
            stddev: (c.stddev.re, c.stddev.im),
            growth_steps,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        },
    )?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { common, n, scheme } => cmd_simulate(common, *n, scheme.clone()),
        Command::Convergence { common } => cmd_convergence(common),
        Command::Genmod {
            common,
            points,
            w_alphas,
            w_resolution,
        } => cmd_genmod(common, *points, w_alphas.clone(), *w_resolution),
        Command::Diagnose {
            common,
            k_res,
            t_n,
            tau,
            growth_steps,
            quad_points,
        } => cmd_diagnose(common, *k_res, *t_n, *tau, *growth_steps, *quad_points),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<Error>()
                .map(Error::exit_code)
                .unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}
