use bsdiv::cli::{self, identities, CommandOutput, Overrides};
use bsdiv::quadrature::Scheme;
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bsdiv",
    about = "Division formulas and residue pairings for polynomial matrices on the unit ball"
)]
struct Cli {
    /// Worker thread count (also read from BSDIV_WORKERS); results are
    /// byte-identical for any value.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonOverrides {
    /// Quadrature node budget (gauss-polar: radial count, qmc: total).
    #[arg(long)]
    nodes: Option<usize>,
    /// Quadrature scheme: gauss-polar or qmc-halton.
    #[arg(long)]
    scheme: Option<String>,
    /// QMC scrambling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated decreasing lambda schedule, e.g. "0.4,0.2,0.1,0.05".
    #[arg(long, value_name = "LIST")]
    lambda_schedule: Option<String>,
    /// Inner cutoff radius (chi == 1 for |zeta| <= r0).
    #[arg(long)]
    r0: Option<f64>,
    /// Outer cutoff radius (chi == 0 for |zeta| >= r1).
    #[arg(long)]
    r1: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a division problem and write the report (exit 0 PASS, 2 FAIL,
    /// 3 INCONCLUSIVE, 1 input error).
    Divide {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: CommonOverrides,
    },
    /// Run the built-in identity suite.
    Identities {
        #[arg(long)]
        output: Option<PathBuf>,
        /// Harness mode: run with the alternative determinant-contraction
        /// sign rule to demonstrate the normalization check failing.
        #[arg(long, hide = true)]
        inject_delta_f_sign_flip: bool,
    },
    /// Evaluate lambda-regularized residue pairings.
    Residue {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: CommonOverrides,
    },
    /// Estimate the size-condition constants only.
    SizeCheck {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: CommonOverrides,
    },
}

fn parse_overrides(c: &CommonOverrides) -> Result<Overrides, String> {
    let scheme = match c.scheme.as_deref() {
        None => None,
        Some("gauss-polar") => Some(Scheme::GaussPolar),
        Some("qmc-halton") => Some(Scheme::QmcHalton),
        Some(other) => return Err(format!("unknown scheme `{}`", other)),
    };
    let lambda_schedule = match &c.lambda_schedule {
        None => None,
        Some(text) => {
            let parsed: Result<Vec<f64>, _> =
                text.split(',').map(|t| t.trim().parse::<f64>()).collect();
            Some(parsed.map_err(|e| format!("bad lambda schedule: {}", e))?)
        }
    };
    Ok(Overrides {
        nodes: c.nodes,
        scheme,
        seed: c.seed,
        lambda_schedule,
        r0: c.r0,
        r1: c.r1,
    })
}

fn emit(out: CommandOutput, output: Option<&PathBuf>) -> ExitCode {
    match output {
        Some(path) => {
            if let Err(e) = fs::write(path, &out.report_json) {
                eprintln!("failed to write {}: {}", path.display(), e);
                return ExitCode::from(cli::EXIT_ERROR as u8);
            }
        }
        None => print!("{}", out.report_json),
    }
    ExitCode::from(out.exit_code as u8)
}

fn read_input(path: &PathBuf) -> Result<String, ExitCode> {
    fs::read_to_string(path).map_err(|e| {
        eprintln!("failed to read {}: {}", path.display(), e);
        ExitCode::from(cli::EXIT_ERROR as u8)
    })
}

fn main() -> ExitCode {
    let cli_args = Cli::parse();
    let workers = cli_args.workers.or_else(|| {
        std::env::var("BSDIV_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let run = move || -> ExitCode {
        match &cli_args.command {
            Command::Divide {
                input,
                output,
                overrides,
            } => {
                let text = match read_input(input) {
                    Ok(t) => t,
                    Err(code) => return code,
                };
                let ov = match parse_overrides(overrides) {
                    Ok(o) => o,
                    Err(msg) => {
                        eprintln!("{}", msg);
                        return ExitCode::from(cli::EXIT_ERROR as u8);
                    }
                };
                emit(cli::run_divide(&text, &ov), output.as_ref())
            }
            Command::Identities {
                output,
                inject_delta_f_sign_flip,
            } => {
                let mutation = if *inject_delta_f_sign_flip {
                    Some(identities::Mutation::DeltaFSignFlip)
                } else {
                    None
                };
                emit(cli::run_identities(mutation), output.as_ref())
            }
            Command::Residue {
                input,
                output,
                overrides,
            } => {
                let text = match read_input(input) {
                    Ok(t) => t,
                    Err(code) => return code,
                };
                let ov = match parse_overrides(overrides) {
                    Ok(o) => o,
                    Err(msg) => {
                        eprintln!("{}", msg);
                        return ExitCode::from(cli::EXIT_ERROR as u8);
                    }
                };
                emit(cli::run_residue(&text, &ov), output.as_ref())
            }
            Command::SizeCheck {
                input,
                output,
                overrides,
            } => {
                let text = match read_input(input) {
                    Ok(t) => t,
                    Err(code) => return code,
                };
                let ov = match parse_overrides(overrides) {
                    Ok(o) => o,
                    Err(msg) => {
                        eprintln!("{}", msg);
                        return ExitCode::from(cli::EXIT_ERROR as u8);
                    }
                };
                emit(cli::run_size_check(&text, &ov), output.as_ref())
            }
        }
    };
    match workers {
        Some(w) if w >= 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .expect("thread pool")
            .install(run),
        _ => run(),
    }
}
