use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mid_delay::rootfinder::Rectangle;
use mid_delay_cli::{run, thread_limit, CliError, Command, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "mid-delay",
    version,
    about = "Spectral analysis and MID synthesis for delay systems",
    allow_negative_numbers = true
)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, num_args = 4, value_names = ["RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"])]
    window: Option<Vec<f64>>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "K")]
    k: Option<usize>,
}

fn config(args: Args) -> Result<RunConfig, CliError> {
    let window = match args.window.as_deref() {
        Some(&[a, b, c, d]) => Some(Rectangle::new(a, b, c, d)?),
        _ => None,
    };
    for p in [&args.input, &args.output].into_iter().flatten() {
        if p.as_os_str().is_empty() {
            return Err(CliError::Validation {
                code: "invalid-argument",
                message: "paths must be nonempty".into(),
            });
        }
    }
    Ok(RunConfig {
        command: args.command,
        input_path: args.input,
        output_path: args.output,
        window,
        tol: args.tol,
        s0: args.s0,
        tau: args.tau,
        n: args.n,
        t_end: args.t_end,
        dt: args.dt,
        k: args.k,
    })
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = CliError::Validation {
                code: "invalid-argument",
                message: e.kind().to_string(),
            };
            eprint!("{}", e.render());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    let mut stderr = io::stderr();
    let prepared =
        thread_limit(std::env::var("MID_DELAY_THREADS").ok().as_deref()).and_then(|threads| {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| CliError::Validation {
                        code: "invalid-env",
                        message: e.to_string(),
                    })?;
            }
            config(args)
        });
    let status = match prepared {
        Ok(cfg) => run(&cfg, &mut io::stdout().lock(), &mut stderr),
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    };
    ExitCode::from(status as u8)
}
