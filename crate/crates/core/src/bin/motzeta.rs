use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use motzeta::report::{render, Format};
use motzeta::run::run;
use motzeta::taskfile::{parse_taskfile, TaskFile};
use motzeta::Error;

#[derive(Parser)]
#[command(name = "motzeta", version, about = "Exact motivic zeta functions and arc counts from task files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task and print the report; exits nonzero if any task is not ok.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
        /// Evaluation budget per enumeration (overrides the file).
        #[arg(long)]
        budget: Option<u64>,
        /// Seed for property tasks (overrides the file).
        #[arg(long)]
        seed: Option<u64>,
        /// Largest coefficient index a task may request (overrides the file).
        #[arg(long)]
        coefficient_cap: Option<u32>,
    },
    /// Parse and validate only.
    Check { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    Structured,
}

fn load(path: &PathBuf) -> Result<TaskFile, ExitCode> {
    let text = std::fs::read(path).map_err(|e| {
        eprintln!("{}: {e}", path.display());
        ExitCode::from(2)
    })?;
    let text = String::from_utf8(text).map_err(|_| {
        eprintln!("{}: not UTF-8", path.display());
        ExitCode::from(2)
    })?;
    parse_taskfile(&text).map_err(|errors| report_errors(path, &errors))
}

fn report_errors(path: &PathBuf, errors: &[Error]) -> ExitCode {
    for e in errors {
        match e {
            Error::Parse { line, column, message } => {
                eprintln!("{}:{line}:{column}: ParseError: {message}", path.display())
            }
            e => eprintln!("{}: {}: {e}", path.display(), e.code()),
        }
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Check { file } => match load(&file) {
            Ok(tf) => {
                println!("{}: {} task(s) ok", file.display(), tf.tasks.len());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { file, format, budget, seed, coefficient_cap } => {
            let mut tf = match load(&file) {
                Ok(tf) => tf,
                Err(code) => return code,
            };
            if let Some(b) = budget {
                tf.budget = b;
            }
            if let Some(s) = seed {
                tf.seed = s;
            }
            if let Some(cap) = coefficient_cap {
                if let Err(errors) = tf.set_coefficient_cap(cap) {
                    return report_errors(&file, &errors);
                }
            }
            let report = run(&tf);
            let format = match format {
                OutFormat::Text => Format::Text,
                OutFormat::Structured => Format::Structured,
            };
            print!("{}", render(&report, format));
            if report.all_ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
