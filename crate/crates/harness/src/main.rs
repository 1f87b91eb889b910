//! `mhdlab`: command-line surface of the slab MHD laboratory.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use mhd_slab::acoustic::{acoustic_energy, LinearAcoustic};
use mhd_slab::checkpoint::{
    read_state_checkpoint, write_checkpoint, write_csv, write_state_checkpoint, CheckpointMeta,
};
use mhd_slab::field::ScalarField;
use mhd_slab::helmholtz::{PoissonSolver, SlabProjector};
use mhd_slab::incompressible::{run_incompressible, IncompressibleConfig};
use mhd_slab::norms::{appendix_battery, norm_spatial, Family, NormSpec};
use mhd_slab::solver::{div_h, energy_residual, quadratic_energy, run, wall_dq1, SolverConfig};
use mhd_slab::state::{bump_deriv, check_compatibility, make_initial_data};
use mhd_slab_harness::config::RunConfig;
use mhd_slab_harness::sweep::run_sweep;
use mhd_slab_harness::HarnessError;

#[derive(Parser)]
#[command(name = "mhdlab", about = "Wall-bounded low-Mach MHD laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Structured key-value run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if absent).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the configured stiffness list.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// Override the data-family randomization seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// One compressible run at the first configured stiffness.
    Simulate(CommonArgs),
    /// One incompressible reference run.
    Limit(CommonArgs),
    /// Full stiffness sweep against the incompressible reference.
    Sweep(CommonArgs),
    /// Evaluate anisotropic norms of a stored checkpoint.
    Norms {
        /// Checkpoint to measure.
        checkpoint: PathBuf,
        #[arg(long, default_value = "star2")]
        family: String,
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Optional output file; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linear acoustic layer study (exact modal evolution of a pulse).
    Acoustic(CommonArgs),
    /// Weighted-space inequality battery across a refinement ladder.
    Battery {
        /// Ladder levels as n1xn2 pairs.
        #[arg(long, default_value = "17x8,33x16,65x32", value_delimiter = ',')]
        levels: Vec<String>,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Limit(args) => limit(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Norms {
            checkpoint,
            family,
            m,
            out,
        } => norms(&checkpoint, &family, m, out.as_deref()),
        Command::Acoustic(args) => acoustic(&args),
        Command::Battery { levels, m, out } => battery(&levels, m, out.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, HarnessError> {
    let mut config = RunConfig::from_path(&args.config)?;
    if let Some(lambdas) = &args.lambda {
        config.run.lambdas = lambdas.clone();
    }
    if let Some(seed) = args.seed {
        config.family.seed = seed;
    }
    config.validate()?;
    std::fs::create_dir_all(&args.out)?;
    Ok(config)
}

fn grid_of(config: &RunConfig) -> Result<mhd_slab::Grid, HarnessError> {
    Ok(mhd_slab::build_grid(
        config.grid.n1,
        config.grid.n2,
        config.grid.l1,
        config.grid.l2,
    )?)
}

fn simulate(args: &CommonArgs) -> Result<ExitCode, HarnessError> {
    let config = load_config(args)?;
    let grid = grid_of(&config)?;
    let law = config.eos;
    let lambda = config.run.lambdas[0];
    let projector = SlabProjector::new(&grid);
    let initial = make_initial_data(&config.family, &grid, lambda)?;
    let compat = check_compatibility(&initial, &grid);
    if !compat.ok {
        eprintln!(
            "warning: initial data compatibility: wall v1 {:.3e}, wall h1 {:.3e}, div H {:.3e}",
            compat.max_wall_v1, compat.max_wall_h1, compat.max_div_h
        );
    }
    let solver_config = SolverConfig {
        lambda,
        cfl: config.run.cfl,
        epsilon: config.run.epsilon,
        t_final: config.run.t_final,
        clean_every: config.run.clean_every,
        outputs: config.run.outputs,
    };
    let traj = match run(&solver_config, &grid, &law, &initial, &projector) {
        Ok(t) => t,
        Err(mhd_slab::Error::Blowup { time, reason }) => {
            eprintln!("run stopped at t = {time}: {reason}");
            return Ok(ExitCode::from(2));
        }
        Err(e) => return Err(e.into()),
    };

    let mut rows = Vec::new();
    for (k, s) in traj.samples.iter().enumerate() {
        let n = traj.samples.len();
        let mid = k.clamp(1, n.saturating_sub(2).max(1));
        let e_res = if n >= 3 {
            energy_residual(&traj.samples[mid - 1..=mid + 1], &grid, &law, traj.epsilon)?
        } else {
            0.0
        };
        rows.push(vec![
            s.t,
            quadratic_energy(&s.state, &grid, &law)?,
            div_h(&s.state, &grid).max_abs(),
            e_res,
            wall_dq1(&s.state, &grid),
        ]);
    }
    write_csv(
        &args.out.join("diagnostics.csv"),
        &["t", "energy", "div_h", "energy_residual", "wall_dq1"],
        &rows,
    )?;
    let last = traj.samples.last().expect("run stored no samples");
    write_state_checkpoint(
        &args.out.join("state_final.ckpt"),
        &last.state,
        &grid,
        &law,
        last.t,
    )?;
    println!(
        "simulate: lambda {lambda}, reached t = {}, wrote {}",
        last.t,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn limit(args: &CommonArgs) -> Result<ExitCode, HarnessError> {
    let config = load_config(args)?;
    let grid = grid_of(&config)?;
    let law = config.eos;
    let projector = SlabProjector::new(&grid);
    let poisson = PoissonSolver::new(&grid)?;
    let seed_state = make_initial_data(&config.family, &grid, config.run.lambdas[0])?;
    let inc_config = IncompressibleConfig {
        cfl: config.run.cfl,
        epsilon: config.run.epsilon,
        t_final: config.run.t_final,
        outputs: config.run.outputs,
    };
    let traj = run_incompressible(
        &inc_config,
        &grid,
        &law,
        &seed_state.v,
        &seed_state.h,
        &projector,
        &poisson,
    )?;
    let mut rows = Vec::new();
    for s in &traj.samples {
        let nw = grid.l2_norm(&[&s.state.w[0], &s.state.w[1], &s.state.w[2]]);
        let nb = grid.l2_norm(&[&s.state.b[0], &s.state.b[1], &s.state.b[2]]);
        rows.push(vec![s.t, 0.5 * (law.rho_bar() * nw * nw + nb * nb)]);
    }
    write_csv(&args.out.join("limit_diagnostics.csv"), &["t", "energy"], &rows)?;
    let last = traj.samples.last().expect("run stored no samples");
    let meta = CheckpointMeta::new(&grid, &law, 0.0, last.t);
    let fields: Vec<(&str, &ScalarField)> = vec![
        ("w1", &last.state.w[0]),
        ("w2", &last.state.w[1]),
        ("w3", &last.state.w[2]),
        ("b1", &last.state.b[0]),
        ("b2", &last.state.b[1]),
        ("b3", &last.state.b[2]),
        ("pi_total", &last.state.pi_total),
    ];
    write_checkpoint(&args.out.join("limit_final.ckpt"), &fields, &meta)?;
    println!("limit: reached t = {}, wrote {}", last.t, args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn sweep(args: &CommonArgs) -> Result<ExitCode, HarnessError> {
    let config = load_config(args)?;
    let report = run_sweep(&config)?;
    report.table.write_csv(&args.out.join("table.csv"))?;
    std::fs::write(
        args.out.join("sweep.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    if let Some(layer) = &report.layer {
        std::fs::write(
            args.out.join("layer.json"),
            serde_json::to_string_pretty(layer)?,
        )?;
    }
    for b in &report.blowups {
        eprintln!(
            "lambda {}: stopped at t = {} ({})",
            b.lambda, b.time, b.reason
        );
    }
    println!(
        "sweep: {} rows over {} stiffness values, wrote {}",
        report.table.rows.len(),
        config.run.lambdas.len(),
        args.out.display()
    );
    if report.blowups.len() == config.run.lambdas.len() {
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn norms(
    checkpoint: &Path,
    family: &str,
    m: usize,
    out: Option<&Path>,
) -> Result<ExitCode, HarnessError> {
    let family = match family {
        "star" => Family::Star,
        "star2" => Family::Star2,
        "star3" => Family::Star3,
        other => {
            return Err(HarnessError::Config(format!(
                "unknown norm family {other} (star | star2 | star3)"
            )))
        }
    };
    let (state, meta) = read_state_checkpoint(checkpoint)?;
    let grid = meta.grid()?;
    let spec = NormSpec::new(family, m);
    let report = norm_spatial(&state.components(), &spec, &grid)?;
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn acoustic(args: &CommonArgs) -> Result<ExitCode, HarnessError> {
    let config = load_config(args)?;
    let grid = grid_of(&config)?;
    let law = config.eos;
    let lambda = config.run.lambdas[0];
    let fam = &config.family;
    // compact gradient pulse from the family's pulse parameters
    let v0 = [
        ScalarField::from_fn(&grid, |x1, _| {
            fam.gradient_amplitude.max(0.05)
                * bump_deriv(x1, fam.gradient_center, fam.gradient_width)
        }),
        ScalarField::zeros(&grid),
        ScalarField::zeros(&grid),
    ];
    let q0 = ScalarField::zeros(&grid);
    let solver = LinearAcoustic::new(&grid, lambda, &law);
    let speed = lambda * (law.mu1() * law.mu2()).sqrt();
    let k_frac = config.measure.subdomain_fraction.min(0.5);
    let k_edge = k_frac * grid.l1;
    let t_return = ((grid.l1 - fam.gradient_center) + (grid.l1 - k_edge)) / speed;
    let times: Vec<f64> = (0..=32).map(|i| t_return * i as f64 / 32.0).collect();
    let states = solver.run_linear(&q0, &v0, &times, &grid)?;
    let i_k = grid.subdomain_end(k_frac);
    let mut rows = Vec::new();
    for s in &states {
        rows.push(vec![
            s.t,
            acoustic_energy(&s.q, &s.v, &law, &grid, Some(i_k)),
            acoustic_energy(&s.q, &s.v, &law, &grid, None),
        ]);
    }
    write_csv(
        &args.out.join("acoustic.csv"),
        &["t", "interior_energy", "total_energy"],
        &rows,
    )?;
    let e0 = rows[0][1];
    let e_pre_return = rows[rows.len() - 4][1];
    println!(
        "acoustic: lambda {lambda}, interior energy {e0:.3e} -> {e_pre_return:.3e} before wall return (t_return = {t_return:.4})"
    );
    Ok(ExitCode::SUCCESS)
}

fn battery(levels: &[String], m: usize, out: Option<&Path>) -> Result<ExitCode, HarnessError> {
    let mut ladder = Vec::new();
    for level in levels {
        let (a, b) = level
            .split_once('x')
            .ok_or_else(|| HarnessError::Config(format!("bad ladder level {level}")))?;
        let n1: usize = a
            .parse()
            .map_err(|_| HarnessError::Config(format!("bad n1 in {level}")))?;
        let n2: usize = b
            .parse()
            .map_err(|_| HarnessError::Config(format!("bad n2 in {level}")))?;
        ladder.push((n1, n2));
    }
    let report = appendix_battery(m, &ladder, 1.0, 1.0)?;
    let json = serde_json::to_string_pretty(&report)?;
    match out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}
