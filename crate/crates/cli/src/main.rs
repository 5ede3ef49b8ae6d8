//! Command-line frontend: restores PGM images with the primal-dual solvers
//! and benchmarks iteration counts against a high-accuracy reference.
//!
//! Exit codes: 0 on success, 2 on configuration or input errors, 3 when a
//! solver run diverges.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use pdsplit::imaging::{add_noise, drop_mask, synthetic_image, DeblurTask, DenoiseTask, InpaintTask};
use pdsplit::linops::{blur_apply, gaussian_kernel};
use pdsplit::metrics::rmse;
use pdsplit::pgm::{load_pgm, save_pgm, ImageFile};
use pdsplit::solvers::{solve, Callbacks, SolveResult, SolverConfig, Variant};
use pdsplit::vector::PrimalVector;
use pdsplit::{Error, ProblemSpec};

#[derive(Parser)]
#[command(
    name = "pdsplit",
    about = "Primal-dual splitting solvers for TV-regularized image restoration",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remove Gaussian noise with TV regularization.
    Denoise(DenoiseArgs),
    /// Undo a Gaussian blur with TV + l1 regularization.
    Deblur(DeblurArgs),
    /// Reconstruct lost pixels with TV regularization.
    Inpaint(InpaintArgs),
    /// Iterations-to-tolerance table across solvers on a denoising instance.
    Bench(BenchArgs),
    /// Write the built-in synthetic test image.
    GenImage(GenImageArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Input PGM image (P2 or P5).
    #[arg(long)]
    input: PathBuf,
    /// Output PGM image.
    #[arg(long)]
    output: PathBuf,
    /// Solver: alg1, alg2, alg3, pd1 or pd2.
    #[arg(long, default_value = "alg1")]
    algorithm: String,
    /// Iteration budget.
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// Seed for noise and mask generation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strong monotonicity modulus for alg2/alg3/pd2.
    #[arg(long, default_value_t = 0.3)]
    rho: f64,
    /// Initial (or constant) step size; defaults follow the step rules.
    #[arg(long)]
    gamma0: Option<f64>,
    /// Write the per-iteration CSV log here.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Reference image for distance tracking and --tol stopping.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Stop once the RMSE to --reference drops below this.
    #[arg(long)]
    tol: Option<f64>,
    /// Track ergodic averages in the log instead of last iterates.
    #[arg(long, default_value_t = false)]
    ergodic: bool,
    /// Worker threads for the dual blocks (falls back to PDSPLIT_THREADS).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct DenoiseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// TV regularization weight.
    #[arg(long, default_value_t = 0.07)]
    lambda: f64,
    /// Gaussian noise level added to the input before solving (0 = the
    /// input is already noisy).
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
}

#[derive(Args)]
struct DeblurArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Isotropic TV weight.
    #[arg(long, default_value_t = 3e-3)]
    lambda1: f64,
    /// l1 sparsity weight.
    #[arg(long, default_value_t = 2e-5)]
    lambda2: f64,
    /// Blur kernel side length (odd).
    #[arg(long, default_value_t = 9)]
    kernel_size: usize,
    /// Blur kernel standard deviation.
    #[arg(long, default_value_t = 4.0)]
    kernel_sigma: f64,
    /// Gaussian noise level added after blurring.
    #[arg(long, default_value_t = 1e-3)]
    sigma: f64,
    /// Treat the input as already blurred and noisy.
    #[arg(long, default_value_t = false)]
    degraded_input: bool,
}

#[derive(Args)]
struct InpaintArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// TV weight.
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
    /// Fraction of pixels to drop (set to pure black) before solving.
    #[arg(long, default_value_t = 0.8)]
    drop: f64,
}

#[derive(Args)]
struct BenchArgs {
    /// Clean input PGM image.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated RMSE tolerances, e.g. 1e-4,1e-6.
    #[arg(long, default_value = "1e-4,1e-6")]
    tolerances: String,
    /// Comma-separated solvers to compare.
    #[arg(long, default_value = "alg1,alg2,pd1,pd2")]
    algorithms: String,
    /// Iterations of the high-accuracy reference run.
    #[arg(long, default_value_t = 50_000)]
    reference_iters: usize,
    /// Noise level of the benchmark instance.
    #[arg(long, default_value_t = 0.12)]
    sigma: f64,
    /// TV weight of the benchmark instance.
    #[arg(long, default_value_t = 0.07)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Modulus used by the accelerated runs under test.
    #[arg(long, default_value_t = 0.3)]
    rho: f64,
    /// Per-run iteration cap.
    #[arg(long, default_value_t = 20_000)]
    max_iters: usize,
    /// Write the result table as CSV here.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Cache file for the reference solution (raw f64).
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct GenImageArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 256)]
    rows: usize,
    #[arg(long, default_value_t = 256)]
    cols: usize,
}

fn resolve_threads(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("PDSPLIT_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(1)
    .max(1)
}

fn build_config(common: &CommonArgs) -> Result<SolverConfig, Error> {
    Ok(SolverConfig {
        variant: Variant::parse(&common.algorithm)?,
        max_iters: common.iters,
        gamma0: common.gamma0,
        rho: common.rho,
        seed: common.seed,
        ergodic: common.ergodic,
        rmse_tol: common.tol,
        threads: resolve_threads(common.threads),
        ..Default::default()
    })
}

fn load_reference(path: &Option<PathBuf>, n: usize) -> Result<Option<Vec<f64>>, Error> {
    match path {
        None => Ok(None),
        Some(p) => {
            let img = load_pgm(p)?;
            if img.pixels.len() != n {
                return Err(Error::Config(format!(
                    "reference image has {} pixels, expected {n}",
                    img.pixels.len()
                )));
            }
            Ok(Some(img.pixels))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_and_report(
    spec: &ProblemSpec,
    config: &SolverConfig,
    x0: PrimalVector,
    objective: impl Fn(&[f64]) -> f64,
    reference: Option<&[f64]>,
    common: &CommonArgs,
    rows: usize,
    cols: usize,
) -> Result<SolveResult, Error> {
    if common.tol.is_some() && reference.is_none() {
        return Err(Error::Config("--tol needs --reference".into()));
    }
    let callbacks = Callbacks {
        objective: Some(Box::new(objective)),
        reference,
        ..Default::default()
    };
    let result = solve(spec, config, x0, None, &callbacks)?;

    let restored = ImageFile::from_normalized(result.state.x.data.clone(), cols, rows)?;
    save_pgm(&common.output, &restored)?;
    if let Some(log_path) = &common.log {
        result.log.write_csv(log_path)?;
    }

    let last = result.log.records.last();
    println!(
        "{}: {} iterations{}{}",
        common.algorithm,
        result.iterations(),
        last.map_or(String::new(), |r| {
            if r.objective.is_nan() {
                String::new()
            } else {
                format!(", objective {:.6}", r.objective)
            }
        }),
        if result.converged { ", converged" } else { "" }
    );
    Ok(result)
}

fn cmd_denoise(args: &DenoiseArgs) -> Result<(), Error> {
    let img = load_pgm(&args.common.input)?;
    let (rows, cols) = (img.height, img.width);
    let b = if args.sigma > 0.0 {
        add_noise(&img.pixels, args.sigma, args.common.seed)
    } else {
        img.pixels
    };
    let task = DenoiseTask::new(b, rows, cols, args.lambda)?;
    let spec = task.build_spec();
    let config = build_config(&args.common)?;
    let reference = load_reference(&args.common.reference, rows * cols)?;
    let t = task.clone();
    run_and_report(
        &spec,
        &config,
        task.b.clone(),
        move |x| t.objective(x).unwrap_or(f64::NAN),
        reference.as_deref(),
        &args.common,
        rows,
        cols,
    )?;
    Ok(())
}

fn cmd_deblur(args: &DeblurArgs) -> Result<(), Error> {
    let img = load_pgm(&args.common.input)?;
    let (rows, cols) = (img.height, img.width);
    let kernel = gaussian_kernel(args.kernel_size, args.kernel_sigma)?;
    let b = if args.degraded_input {
        img.pixels
    } else {
        let blurred = blur_apply(&img.pixels, &kernel, args.kernel_size, rows, cols)?;
        add_noise(&blurred, args.sigma, args.common.seed)
    };
    let task = DeblurTask::new(
        b,
        rows,
        cols,
        kernel,
        args.kernel_size,
        args.lambda1,
        args.lambda2,
    )?;
    let spec = task.build_spec()?;
    let config = build_config(&args.common)?;
    let reference = load_reference(&args.common.reference, rows * cols)?;
    let x0 = task.b.clone();
    let t = task.clone();
    run_and_report(
        &spec,
        &config,
        x0,
        move |x| t.objective(x).unwrap_or(f64::NAN),
        reference.as_deref(),
        &args.common,
        rows,
        cols,
    )?;
    Ok(())
}

fn cmd_inpaint(args: &InpaintArgs) -> Result<(), Error> {
    let img = load_pgm(&args.common.input)?;
    let (rows, cols) = (img.height, img.width);
    let n = rows * cols;
    let mask = drop_mask(n, args.drop, args.common.seed)?;
    let b: Vec<f64> = img.pixels.iter().zip(&mask).map(|(p, m)| p * m).collect();
    let task = InpaintTask::new(b, mask, rows, cols, args.lambda)?;
    let spec = task.build_spec()?;
    let config = build_config(&args.common)?;
    let reference = load_reference(&args.common.reference, n)?;
    let x0 = task.b.clone();
    let t = task.clone();
    run_and_report(
        &spec,
        &config,
        x0,
        move |x| t.objective(x).unwrap_or(f64::NAN),
        reference.as_deref(),
        &args.common,
        rows,
        cols,
    )?;
    Ok(())
}

fn read_reference_cache(path: &Path, n: usize) -> Result<Option<Vec<f64>>, Error> {
    if !path.exists() {
        return Ok(None);
    }
    let data = std::fs::read(path)?;
    if data.len() != 8 + 8 * n || &data[..8] != b"PDSPLITR" {
        return Err(Error::Config(format!(
            "reference cache {} does not match this instance",
            path.display()
        )));
    }
    let mut out = Vec::with_capacity(n);
    for chunk in data[8..].chunks_exact(8) {
        out.push(f64::from_le_bytes(chunk.try_into().expect("8-byte chunk")));
    }
    Ok(Some(out))
}

fn write_reference_cache(path: &Path, reference: &[f64]) -> Result<(), Error> {
    let mut data = Vec::with_capacity(8 + 8 * reference.len());
    data.extend_from_slice(b"PDSPLITR");
    for v in reference {
        data.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, data)?;
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Error> {
    let img = load_pgm(&args.input)?;
    let (rows, cols) = (img.height, img.width);
    let n = rows * cols;
    let noisy = add_noise(&img.pixels, args.sigma, args.seed);
    let task = DenoiseTask::new(noisy, rows, cols, args.lambda)?;
    let spec = task.build_spec();
    let threads = resolve_threads(args.threads);

    let tolerances: Vec<f64> = args
        .tolerances
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad tolerance '{t}'")))
        })
        .collect::<Result<_, _>>()?;
    let algorithms: Vec<Variant> = args
        .algorithms
        .split(',')
        .map(|a| Variant::parse(a.trim()))
        .collect::<Result<_, _>>()?;
    if tolerances.is_empty() || algorithms.is_empty() {
        return Err(Error::Config("need at least one tolerance and algorithm".into()));
    }

    // high-accuracy reference: long accelerated run with the certified
    // modulus, cached on disk when requested
    let reference = match &args.cache {
        Some(path) => read_reference_cache(path, n)?,
        None => None,
    };
    let reference = match reference {
        Some(r) => {
            eprintln!("using cached reference");
            r
        }
        None => {
            eprintln!("computing reference ({} iterations)...", args.reference_iters);
            let config = SolverConfig {
                variant: Variant::Alg2,
                max_iters: args.reference_iters,
                rho: spec.strong_convexity_primal,
                threads,
                ..Default::default()
            };
            let result = solve(&spec, &config, task.b.clone(), None, &Callbacks::default())?;
            if let Some(path) = &args.cache {
                write_reference_cache(path, &result.state.x.data)?;
            }
            result.state.x.data
        }
    };

    let mut rows_out = Vec::new();
    println!("{:<10} {:>10} {:>12} {:>12} {:>10}", "algorithm", "tolerance", "iterations", "wall_ms", "converged");
    for &variant in &algorithms {
        for &tol in &tolerances {
            let config = SolverConfig {
                variant,
                max_iters: args.max_iters,
                rho: args.rho,
                rmse_tol: Some(tol),
                seed: args.seed,
                threads,
                ..Default::default()
            };
            let callbacks = Callbacks {
                reference: Some(&reference),
                ..Default::default()
            };
            let result = solve(&spec, &config, task.b.clone(), None, &callbacks)?;
            let wall = result.log.records.last().map_or(0.0, |r| r.wall_ms);
            println!(
                "{:<10} {:>10e} {:>12} {:>12.2} {:>10}",
                variant.name(),
                tol,
                result.iterations(),
                wall,
                result.converged
            );
            if !result.converged {
                let final_rmse = rmse(&result.state.x.data, &reference)?;
                eprintln!(
                    "warning: {} did not reach {tol:e} within {} iterations (rmse {final_rmse:.3e})",
                    variant.name(),
                    args.max_iters
                );
            }
            rows_out.push(format!(
                "{},{},{},{},{}",
                variant.name(),
                tol,
                result.iterations(),
                wall,
                result.converged
            ));
        }
    }

    if let Some(path) = &args.output {
        let mut csv = String::from("algorithm,tolerance,iterations,wall_ms,converged\n");
        for row in &rows_out {
            csv.push_str(row);
            csv.push('\n');
        }
        std::fs::write(path, csv)?;
    }
    Ok(())
}

fn cmd_gen_image(args: &GenImageArgs) -> Result<(), Error> {
    if args.rows == 0 || args.cols == 0 {
        return Err(Error::Config("image dimensions must be positive".into()));
    }
    let pixels = synthetic_image(args.rows, args.cols);
    let img = ImageFile::from_normalized(pixels, args.cols, args.rows)?;
    save_pgm(&args.output, &img)?;
    println!("wrote {}x{} image to {}", args.rows, args.cols, args.output.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Denoise(args) => cmd_denoise(args),
        Command::Deblur(args) => cmd_deblur(args),
        Command::Inpaint(args) => cmd_inpaint(args),
        Command::Bench(args) => cmd_bench(args),
        Command::GenImage(args) => cmd_gen_image(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        let code = match e {
            Error::Diverged { .. } => 3,
            _ => 2,
        };
        std::process::exit(code);
    }
}
