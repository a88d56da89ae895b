use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use eraser_bench::{compile_text, load, output, run_text, scenes, BenchError};

#[derive(Parser)]
#[command(name = "eraser", version, about = "Two-photon double-slit and quantum-eraser bench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run every `run` line of a scene and write one CSV per run.
    Run {
        /// Scene file, or the name of a shipped scene.
        scene: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Overrides the seed of every run.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Parse and compile a scene without running it.
    Validate { scene: String },
    /// Shipped scenes.
    Scenes {
        #[command(subcommand)]
        action: ScenesAction,
    },
}

#[derive(Subcommand)]
enum ScenesAction {
    List,
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Run {
            scene,
            out,
            seed,
            format: Format::Csv,
        } => {
            let (name, text) = load(&scene)?;
            let (plan, outputs) = run_text(&text, seed)?;
            for w in &plan.warnings {
                eprintln!("warning: {w}");
            }
            std::fs::create_dir_all(&out)?;
            for o in &outputs {
                for path in output::write_run(&out, &name, o)? {
                    println!("{}", path.display());
                }
                if let Some(p) = &o.pilot {
                    eprintln!(
                        "{}: run {} equivariance L1 {:.4} (noise floor {:.4}), crossings {}",
                        name, o.plan.index, p.equivariance.l1, p.equivariance.noise_floor, p.run.crossings
                    );
                }
            }
        }
        Command::Validate { scene } => {
            let (name, text) = load(&scene)?;
            let plan = compile_text(&text)?;
            for w in &plan.warnings {
                eprintln!("warning: {w}");
            }
            for r in &plan.runs {
                println!("{name} run {}: {}", r.index, r.stages.join(" -> "));
            }
        }
        Command::Scenes {
            action: ScenesAction::List,
        } => {
            for s in scenes::SCENES {
                println!("{}", s.name);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
