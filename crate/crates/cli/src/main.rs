use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qsim_cli::runner::{self, Overrides, RunError};
use qsim_cli::scenario::{self, Diagnostic, RawScenario};
use qsim_cli::{builtins, observables};

#[derive(Parser)]
#[command(name = "qsim", version, about = "Run quantum dynamics scenarios from JSON documents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a built-in scenario by name.
    Run {
        spec: String,
        /// Directory receiving the output files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        ntraj: Option<usize>,
        /// Worker threads; defaults to the scenario value, then QSIM_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List built-in scenarios and the observable registry.
    List,
    /// Check a scenario without running it.
    Validate { spec: String },
}

/// Reads a file, falling back to the built-in of the same name.
fn load_raw(spec: &str) -> Result<RawScenario, Vec<Diagnostic>> {
    let path = PathBuf::from(spec);
    let text = if path.is_file() {
        std::fs::read_to_string(&path).map_err(|e| {
            vec![Diagnostic { code: "unreadable_spec", message: format!("{}: {e}", path.display()) }]
        })?
    } else if let Some(doc) = builtins::document(spec) {
        doc.to_string()
    } else {
        return Err(vec![Diagnostic {
            code: "unknown_scenario",
            message: format!("{spec:?} is neither a file nor a built-in scenario"),
        }]);
    };
    scenario::parse(&text)
}

fn fail(err: RunError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { spec, out_dir, seed, ntraj, threads } => {
            let prepared = load_raw(&spec).and_then(|raw| {
                let mut spec = scenario::validate(&raw)?;
                let env = runner::env_threads().map_err(|d| vec![d])?;
                runner::apply_overrides(&mut spec, &Overrides { seed, ntraj, threads }, env)?;
                Ok(spec)
            });
            let spec = match prepared {
                Ok(s) => s,
                Err(d) => return fail(RunError::Invalid(d)),
            };
            match runner::run(&spec, &out_dir) {
                Ok(report) => {
                    for (name, value) in &report.derived {
                        println!("{name} = {value}");
                    }
                    println!("rows = {}", report.rows);
                    println!("wall_time_s = {:.3}", report.wall_time);
                    println!("wrote {}", report.csv_path.display());
                    println!("wrote {}", report.json_path.display());
                    if let Some(p) = report.trajectories_path {
                        println!("wrote {}", p.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::List => {
            println!("scenarios:");
            for name in builtins::names() {
                println!("  {name}");
            }
            println!("observables:");
            for o in observables::REGISTRY {
                let models: Vec<_> = o.models.iter().map(|m| m.name()).collect();
                println!("  {:<13} {} [{}]", o.name, o.description, models.join(", "));
            }
            ExitCode::SUCCESS
        }
        Command::Validate { spec } => {
            let diags = match load_raw(&spec) {
                Ok(raw) => scenario::diagnostics(&raw),
                Err(d) => d,
            };
            println!("{}", serde_json::json!({ "spec": spec, "diagnostics": diags }));
            if diags.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}
