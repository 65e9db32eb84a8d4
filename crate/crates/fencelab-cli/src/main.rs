use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use fencelab_cli::config::{self, Overrides};
use fencelab_cli::{bench, render, run};

#[derive(Parser)]
#[command(
    name = "fencelab",
    about = "Iterative threshold/auction dynamics for volume-constrained partition shape optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write trace.csv, metrics.json and
    /// labeled FLD snapshots into the output directory.
    Run(RunArgs),
    /// Render label FLD snapshots to PPM images.
    Render(RenderArgs),
    /// Run a method x partition-count matrix and tabulate the results.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Parameter preset: paper-2d (256^2) or paper-3d (128^3).
    #[arg(long)]
    preset: Option<String>,
    /// Flat JSON config file; every key can be overridden by the flag of
    /// the same name.
    #[arg(long)]
    config: Option<PathBuf>,
    /// one | two | monotone
    #[arg(long)]
    method: Option<String>,
    /// Grid size: 256, 256x256 or 64x64x64.
    #[arg(long)]
    grid: Option<String>,
    /// flower | disc | ball | square | rectangle | triangle | pentagon | cube
    #[arg(long)]
    shape: Option<String>,
    /// Seed of the random pentagon generator.
    #[arg(long)]
    shape_seed: Option<u64>,
    /// Volume proportions, e.g. 0.5,0.5 or 0.25,0.25,0.5.
    #[arg(long)]
    c: Option<String>,
    /// Interface time scale (defaults to 2 dx).
    #[arg(long)]
    tau: Option<f64>,
    /// Regularization time scale of method two (defaults to dx/2).
    #[arg(long)]
    tau_prime: Option<f64>,
    /// Regularization weight of method two.
    #[arg(long)]
    lambda: Option<f64>,
    /// Initial update step length in [0, 1].
    #[arg(long)]
    beta0: Option<f64>,
    /// Step-length decay factor in (0, 1).
    #[arg(long)]
    gamma: Option<f64>,
    /// Terminal step length.
    #[arg(long)]
    beta_min: Option<f64>,
    /// Averaging window of the stall detector.
    #[arg(long = "M")]
    m: Option<usize>,
    /// Relative stall tolerance.
    #[arg(long)]
    r_tol: Option<f64>,
    /// Auction repetitions per iteration (methods one and monotone).
    #[arg(long)]
    p: Option<usize>,
    /// Auction schedule m,eps_min,alpha,eps0 (e.g. 1000,1e-7,4,0.1).
    #[arg(long)]
    auction: Option<String>,
    /// Base seed; fixed seeds reproduce runs byte for byte.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (must exist).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot every k iterations instead of the default {0, 5, 10, final}.
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Render snapshots to PPM after the run.
    #[arg(long)]
    render: Option<bool>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct RenderArgs {
    /// Label FLD files to render.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output directory for the images (defaults alongside each input).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Comma-separated methods to benchmark, e.g. one,two.
    #[arg(long, default_value = "one,two")]
    methods: String,
    /// Comma-separated partition counts, e.g. 2,6,9.
    #[arg(long, default_value = "2")]
    partitions: String,
}

fn overrides_from(common: &CommonOpts) -> Result<Overrides> {
    let flag_layer = Overrides {
        preset: common.preset.clone(),
        method: common.method.clone(),
        grid: common.grid.clone(),
        shape: common.shape.clone(),
        shape_seed: common.shape_seed,
        c: common.c.clone(),
        tau: common.tau,
        tau_prime: common.tau_prime,
        lambda: common.lambda,
        beta0: common.beta0,
        gamma: common.gamma,
        beta_min: common.beta_min,
        m: common.m,
        r_tol: common.r_tol,
        p: common.p,
        auction: common.auction.clone(),
        seed: common.seed,
        out: common.out.clone(),
        snapshot_every: common.snapshot_every,
        render: common.render,
    };
    let file_layer = match &common.config {
        Some(path) => Overrides::from_json_file(path)?,
        None => Overrides::default(),
    };
    Ok(flag_layer.merged_over(file_layer))
}

fn main() -> ExitCode {
    fencelab::configure_threads_from_env();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run_cmd(args),
        Command::Render(args) => render_cmd(args),
        Command::Bench(args) => bench_cmd(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run_cmd(args: RunArgs) -> Result<()> {
    let cfg = config::resolve(overrides_from(&args.common)?)?;
    let result = run::execute(&cfg)?;
    let last = result.trace.last().expect("nonempty trace");
    println!(
        "{} iterations, stop reason {}, final energy {:.6}",
        result.iterations(),
        result.stop_reason.name(),
        last.e_tilde
    );
    Ok(())
}

fn render_cmd(args: RenderArgs) -> Result<()> {
    for input in &args.inputs {
        let out_dir = match &args.out {
            Some(dir) => dir.clone(),
            None => input
                .parent()
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(".")),
        };
        let written = render::render_labels_file(input, &out_dir)?;
        for path in written {
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn bench_cmd(args: BenchArgs) -> Result<()> {
    let cfg = config::resolve(overrides_from(&args.common)?)?;
    let methods = args
        .methods
        .split(',')
        .map(|m| fencelab::solver::Method::from_name(m.trim()))
        .collect::<fencelab::Result<Vec<_>>>()?;
    let partitions = args
        .partitions
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let rows = bench::run_matrix(&cfg, &methods, &partitions)?;
    let report = cfg.out.join("bench.csv");
    bench::write_report(&report, &rows)?;
    for row in &rows {
        println!(
            "method {} n={} iterations={} wall={:.2}s e_tilde={:.6} iso={:.4}",
            row.method,
            row.n_partitions,
            row.iterations,
            row.wall_seconds,
            row.final_e_tilde,
            row.iso_ratio
        );
    }
    println!("report: {}", report.display());
    Ok(())
}
