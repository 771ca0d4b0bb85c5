use clap::{Args, Parser, Subcommand};
use deblur_core::harness::{
    self, load_image, load_psf, run_experiment, simulate, ExperimentConfig, Method, ResultRow,
};
use deblur_core::image::NoiseSpec;
use deblur_core::{write_pgm, BoundaryCondition, Error};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "deblur",
    version,
    about = "Matrix-free image deblurring with boundary-aware preconditioned iterations",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Scene: a PGM path or synthetic:{blocks|satellite}:<m>
    #[arg(long)]
    image: String,
    /// Kernel: PGM, text matrix ("k k cr cc" + rows), or synthetic:<kind>:...
    #[arg(long)]
    psf: String,
    /// Gaussian noise as a percentage of the blurred image norm
    #[arg(long, default_value_t = 0.0)]
    noise_percent: f64,
    /// RNG seed for the noise realization
    #[arg(long)]
    seed: u64,
    /// Pixels cropped from each side after blurring the full scene
    #[arg(long, default_value_t = 0)]
    crop_margin: usize,
}

#[derive(Args, Clone)]
struct SolveArgs {
    /// Boundary condition assumed by the restoration model
    #[arg(long, default_value = "reflective")]
    bc: String,
    #[arg(long, default_value_t = 0.2)]
    rho: f64,
    #[arg(long, default_value_t = 0.7)]
    q: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Output directory for images, traces, and results.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Blur a scene, crop the field of view, add seeded noise, write the data
    Simulate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Restore with one method at a single threshold level
    Restore {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
    },
    /// Sweep threshold levels for one method and report the oracle row
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        method: String,
        /// Comma-separated threshold levels
        #[arg(long, value_delimiter = ',', required = true)]
        mus: Vec<f64>,
    },
    /// Run all six methods on the same data
    Compare {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        mus: Vec<f64>,
    },
    /// Dense small-size verification suite
    OracleCheck,
}

fn print_rows(rows: &[ResultRow]) {
    println!(
        "{:<10} {:>12} {:>6} {:>12} {:>10} {:>10} {:<14} {:>8}",
        "method", "mu", "iters", "rre", "psnr", "ssim", "status", "seconds"
    );
    for r in rows {
        println!(
            "{:<10} {:>12.4e} {:>6} {:>12.6} {:>10.4} {:>10.6} {:<14} {:>8.2}",
            r.method.to_string(),
            r.mu,
            r.iterations,
            r.rre,
            r.psnr,
            r.ssim,
            r.status,
            r.seconds
        );
    }
}

fn any_failure(rows: &[ResultRow]) -> bool {
    rows.iter()
        .any(|r| r.status == "alpha-failure" || r.status.starts_with("error"))
}

fn experiment(
    data: &DataArgs,
    solve: &SolveArgs,
    method: Method,
    mus: Vec<f64>,
) -> Result<(Vec<ResultRow>, Option<usize>), Error> {
    let cfg = ExperimentConfig {
        true_image: data.image.clone(),
        psf: data.psf.clone(),
        bc: solve.bc.parse::<BoundaryCondition>()?,
        noise: NoiseSpec {
            percent: data.noise_percent,
            seed: data.seed,
        },
        crop_margin: data.crop_margin,
        method,
        mu_grid: mus,
        rho: solve.rho,
        q: solve.q,
        max_iter: solve.max_iter,
        out_dir: solve.out.clone(),
    };
    run_experiment(&cfg)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate { data, out } => {
            let truth = load_image(&data.image)?;
            let psf = load_psf(&data.psf)?;
            let noise = NoiseSpec {
                percent: data.noise_percent,
                seed: data.seed,
            };
            let (g, truth_c, delta) = simulate(&truth, &psf, &noise, data.crop_margin)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::Io {
                path: out.display().to_string(),
                source: e,
            })?;
            write_pgm(&g, &out.join("observed.pgm"))?;
            write_pgm(&truth_c, &out.join("truth.pgm"))?;
            let delta_path = out.join("delta.txt");
            std::fs::write(&delta_path, format!("{delta:.17e}\n")).map_err(|e| Error::Io {
                path: delta_path.display().to_string(),
                source: e,
            })?;
            println!(
                "wrote {}x{} observation (delta = {delta:.6e}) to {}",
                g.m(),
                g.m(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Restore {
            data,
            solve,
            method,
            mu,
        } => {
            let method: Method = method.parse()?;
            let (rows, _) = experiment(&data, &solve, method, vec![mu])?;
            print_rows(&rows);
            Ok(if any_failure(&rows) {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Sweep {
            data,
            solve,
            method,
            mus,
        } => {
            let method: Method = method.parse()?;
            let (rows, best) = experiment(&data, &solve, method, mus)?;
            print_rows(&rows);
            if let Some(bi) = best {
                println!(
                    "oracle: mu = {:.4e} (rre {:.6}, ssim {:.6})",
                    rows[bi].mu, rows[bi].rre, rows[bi].ssim
                );
            }
            Ok(if any_failure(&rows) {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Compare { data, solve, mus } => {
            let mut all_rows = Vec::new();
            for method in Method::ALL {
                let grid = if method == Method::Aitgp {
                    vec![0.0]
                } else {
                    mus.clone()
                };
                let (rows, best) = experiment(&data, &solve, method, grid)?;
                if let Some(bi) = best {
                    println!(
                        "{}: oracle mu = {:.4e} (rre {:.6}, ssim {:.6})",
                        method, rows[bi].mu, rows[bi].rre, rows[bi].ssim
                    );
                }
                all_rows.extend(rows);
            }
            print_rows(&all_rows);
            if let Some(dir) = &solve.out {
                harness::write_results_csv(&dir.join("results.csv"), &all_rows)?;
            }
            Ok(if any_failure(&all_rows) {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::OracleCheck => {
            let results = harness::oracle_check();
            let mut ok_all = true;
            for (name, ok) in &results {
                println!("{} {name}", if *ok { "ok  " } else { "FAIL" });
                ok_all &= ok;
            }
            Ok(if ok_all {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
