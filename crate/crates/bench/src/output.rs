//! CSV files, one per run plus a trajectory dump when paths were recorded.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use eraser_core::waveoptics::SlitSide;

use crate::runner::RunOutput;

pub fn file_stem(scene: &str, out: &RunOutput) -> String {
    let p = &out.plan;
    format!("{scene}_{}_{}_{}", p.index, p.engine.name(), p.mode.name())
}

fn header(scene: &str, out: &RunOutput) -> String {
    let p = &out.plan;
    format!(
        "# scene: {scene}, engine: {}, mode: {}, seed: {}\n",
        p.engine.name(),
        p.mode.name(),
        p.seed
    )
}

/// The run's main table: `x_m,rate` for patterns, `signal,idler,probability`
/// for correlation runs.
pub fn run_csv(scene: &str, out: &RunOutput) -> String {
    let mut s = header(scene, out);
    if let Some(p) = &out.pattern {
        s.push_str("x_m,rate\n");
        for (x, r) in p.positions.iter().zip(&p.rates) {
            let _ = writeln!(s, "{x:e},{r:e}");
        }
    }
    if let Some(t) = &out.table {
        s.push_str("signal,idler,probability\n");
        for (i, si) in [SlitSide::Upper, SlitSide::Lower].iter().enumerate() {
            for (j, ii) in [SlitSide::Upper, SlitSide::Lower].iter().enumerate() {
                let _ = writeln!(s, "{},{},{:e}", si.name(), ii.name(), t[i][j]);
            }
        }
    }
    s
}

/// Long-format `x0_m,slit,z_m,x_m` rows for every recorded trajectory.
pub fn trajectory_csv(scene: &str, out: &RunOutput) -> Option<String> {
    let run = &out.pilot.as_ref()?.run;
    let recorded: Vec<_> = run.trajectories.iter().filter(|t| !t.path.is_empty()).collect();
    if recorded.is_empty() {
        return None;
    }
    let mut s = header(scene, out);
    s.push_str("x0_m,slit,z_m,x_m\n");
    for t in recorded {
        for (z, x) in &t.path {
            let _ = writeln!(s, "{:e},{},{z:e},{x:e}", t.x0, t.slit_taken.name());
        }
    }
    Some(s)
}

/// Writes the run's files into `dir` and returns their paths.
pub fn write_run(dir: &Path, scene: &str, out: &RunOutput) -> io::Result<Vec<PathBuf>> {
    let stem = file_stem(scene, out);
    let mut written = Vec::new();
    let main = dir.join(format!("{stem}.csv"));
    std::fs::write(&main, run_csv(scene, out))?;
    written.push(main);
    if let Some(t) = trajectory_csv(scene, out) {
        let path = dir.join(format!("{stem}_trajectories.csv"));
        std::fs::write(&path, t)?;
        written.push(path);
    }
    Ok(written)
}
