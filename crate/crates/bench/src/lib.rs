//! Optical-bench scenes for the two-photon double-slit engines: the `.bench`
//! language, its compiler, the runner and CSV output.

pub mod dsl;
pub mod output;
pub mod plan;
pub mod runner;
pub mod scenes;

use std::path::Path;

use thiserror::Error;

use dsl::ParseError;
use plan::{CompileError, Plan};
use runner::RunOutput;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error("compile error: {0}")]
    Compile(#[from] CompileError),
    #[error("cannot read scene: {0}")]
    Load(String),
    #[error("run failed: {0}")]
    Runtime(#[from] eraser_core::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl BenchError {
    /// 1 for problems with the scene itself, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Parse(_) | BenchError::Compile(_) | BenchError::Load(_) => 1,
            BenchError::Runtime(_) | BenchError::Output(_) => 2,
        }
    }
}

/// Reads a scene file, falling back to the shipped corpus when `arg` is not
/// a file but names a shipped scene. Returns the scene name and its text.
pub fn load(arg: &str) -> Result<(String, String), BenchError> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Load(format!("{arg}: {e}")))?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scene")
            .to_string();
        return Ok((name, text));
    }
    match scenes::find(arg) {
        Some(s) => Ok((s.name.to_string(), s.text.to_string())),
        None => Err(BenchError::Load(format!("{arg}: no such file or shipped scene"))),
    }
}

pub fn compile_text(text: &str) -> Result<Plan, BenchError> {
    Ok(plan::compile(&dsl::parse(text)?)?)
}

/// Parses, compiles and runs every run of a scene.
pub fn run_text(text: &str, seed: Option<u64>) -> Result<(Plan, Vec<RunOutput>), BenchError> {
    let mut plan = compile_text(text)?;
    if let Some(seed) = seed {
        plan = plan.with_seed(seed);
    }
    let outputs = runner::execute_all(&plan)?;
    Ok((plan, outputs))
}
