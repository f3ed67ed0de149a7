use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use dtrw::oracle::{convergence_order, finest};
use dtrw::WeightRule;
use dtrw_cli::config::{parse_real, ExperimentConfig, Preset};
use dtrw_cli::mc::{median, McConfig};
use dtrw_cli::{experiment, output};

#[derive(Parser)]
#[command(name = "dtrw", version, about = "DTRW scheme experiments for nonlinear advection-diffusion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a preset or custom experiment over a ladder of spacings.
    Run(RunArgs),
    /// Compare a particle ensemble with the master equation on a ring.
    Mc(McArgs),
    /// Fit the convergence order from an existing summary CSV.
    Converge(ConvergeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Spacing, as a decimal or fraction such as 25/3. Repeatable.
    #[arg(long = "dx", value_parser = parse_real)]
    dx: Vec<f64>,
    /// Target time, as a decimal or fraction.
    #[arg(long = "t", value_parser = parse_real)]
    t: Option<f64>,
    /// boltzmann1, boltzmann2 or naive.
    #[arg(long)]
    weights: Option<String>,
    /// exp or fd.
    #[arg(long)]
    ghost: Option<String>,
    /// Round the step count to the nearest whole step.
    #[arg(long)]
    snap: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the L1 error after every step.
    #[arg(long)]
    trace_error: bool,
    /// Custom preset boundary specs.
    #[arg(long)]
    bc_left: Option<String>,
    #[arg(long)]
    bc_right: Option<String>,
}

#[derive(Args)]
struct McArgs {
    /// Particle counts. Repeatable.
    #[arg(long = "n", default_values_t = [100_000usize])]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeds per particle count, starting at --seed.
    #[arg(long, default_value_t = 1)]
    replicates: u64,
    #[arg(long, default_value_t = 32)]
    sites: usize,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    amplitude: f64,
    #[arg(long, default_value = "boltzmann2")]
    weights: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ConvergeArgs {
    summary: PathBuf,
    /// Use only this many of the finest spacings; 0 uses all.
    #[arg(long, default_value_t = 4)]
    points: usize,
}

fn build_config(args: RunArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(p) = args.preset {
        cfg.preset = p;
    }
    if let Some(v) = args.nu {
        cfg.nu = v;
    }
    if let Some(v) = args.c {
        cfg.c = v;
    }
    if !args.dx.is_empty() {
        cfg.dx_list = args.dx;
    }
    if let Some(v) = args.t {
        cfg.target_t = v;
    }
    if let Some(v) = args.weights {
        cfg.weights = v;
    }
    if let Some(v) = args.ghost {
        cfg.ghost = v;
    }
    if let Some(v) = args.out {
        cfg.output_dir = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    cfg.snap |= args.snap;
    cfg.trace_error |= args.trace_error;
    if args.bc_left.is_some() || args.bc_right.is_some() {
        let custom = cfg.custom.get_or_insert_with(Default::default);
        if let Some(v) = args.bc_left {
            custom.bc_left = v;
        }
        if let Some(v) = args.bc_right {
            custom.bc_right = v;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> anyhow::Result<bool> {
    let cfg = build_config(args)?;
    let result = experiment::run(&cfg)?;
    let written = output::write_experiment(&cfg.output_dir, &result)?;
    for run in &result.runs {
        let err = run.l1_error.map_or("-".to_string(), |e| format!("{e:.6e}"));
        match &run.failure {
            None => println!(
                "dx={:<12.6} steps={:<8} l1={:<14} cfl_violated={}",
                run.dx, run.n_steps, err, run.cfl_violated
            ),
            Some(msg) => println!("dx={:<12.6} FAILED: {msg}", run.dx),
        }
    }
    if let Ok(slope) = result.slope(cfg.slope_points) {
        println!("slope over {} finest: {slope:.4}", cfg.slope_points);
    }
    println!("wrote {} files to {}", written.len(), cfg.output_dir.display());
    Ok(result.all_succeeded())
}

fn mc(args: McArgs) -> anyhow::Result<bool> {
    let weights: WeightRule = args.weights.parse()?;
    if args.replicates == 0 {
        bail!("--replicates must be at least 1");
    }
    let cfg = McConfig {
        sites: args.sites,
        n_steps: args.steps,
        amplitude: args.amplitude,
        weights,
        ..McConfig::default()
    };
    let exact = cfg.master_density()?;
    let (density, tv) = cfg.sample(args.n[0], args.seed, &exact)?;
    let xs: Vec<f64> = (0..args.sites).map(|i| i as f64).collect();
    output::write_density(&args.out.join("mc_density.csv"), &xs, &density, &exact)?;
    let rows = cfg.tv_table(&args.n, args.seed, args.replicates)?;
    output::write_tv_table(&args.out.join("mc_tv.csv"), &rows)?;
    println!("n={} seed={} tv={tv:.6e}", args.n[0], args.seed);
    for &n in &args.n {
        let tvs: Vec<f64> = rows.iter().filter(|r| r.0 == n).map(|r| r.2).collect();
        println!("n={n:<10} median tv={:.6e}", median(&tvs));
    }
    Ok(true)
}

fn converge(args: ConvergeArgs) -> anyhow::Result<bool> {
    let records = output::read_summary(&args.summary)?;
    let k = if args.points == 0 { records.len() } else { args.points };
    let slope = convergence_order(&finest(&records, k))
        .with_context(|| format!("fitting {}", args.summary.display()))?;
    println!("{slope:.6}");
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Mc(a) => mc(a),
        Command::Converge(a) => converge(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
