use clap::Parser;
use fraclab::cli::{parse_config_with, run, Command};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fraclab",
    version,
    about = "Time-fractional diffusion experiments"
)]
struct Args {
    /// mlf-eval, verify-laplace, solve-const, solve-var, verify-decay or parametrix-report
    command: Command,
    config: PathBuf,
    /// Directory for CSV output
    #[arg(long, default_value = "fraclab-out")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("fraclab: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("fraclab: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match parse_config_with(&text, Some(args.command)) {
        Ok(c) => c,
        Err(errors) => {
            for e in errors {
                eprintln!("{}: {e}", args.config.display());
            }
            return ExitCode::from(2);
        }
    };
    match run(&cfg, &args.out) {
        Ok(report) => {
            for c in &report.checks {
                println!("{}", c.describe());
            }
            for p in &report.outputs {
                println!("wrote {}", p.display());
            }
            println!(
                "{} finished in {:.3} s",
                report.command,
                report.wall_time.as_secs_f64()
            );
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("fraclab {}: {e}", args.command);
            ExitCode::from(1)
        }
    }
}
