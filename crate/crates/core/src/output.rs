//! CSV artifacts. Every file starts with a `# diffagg-csv v1 <kind>` line,
//! followed by a column header. Floats are written with the shortest
//! representation that round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::analysis::ErrorReport;
use crate::error::Result;
use crate::grid::GridDensity;
use crate::particle::Trajectory;

pub const SCHEMA_VERSION: &str = "v1";

fn header(kind: &str, columns: &str) -> String {
    format!("# diffagg-csv {SCHEMA_VERSION} {kind}\n{columns}\n")
}

/// `time,x_center,u`, one row per cell per snapshot.
pub fn snapshots_csv(series: &[GridDensity]) -> String {
    let mut s = header("snapshots", "time,x_center,u");
    for u in series {
        for (i, v) in u.values.iter().enumerate() {
            let _ = writeln!(s, "{:?},{:?},{:?}", u.time, u.grid.center(i), v);
        }
    }
    s
}

/// `time,sup`.
pub fn sup_csv(trace: &[(f64, f64)]) -> String {
    let mut s = header("running-sup", "time,sup");
    for (t, v) in trace {
        let _ = writeln!(s, "{t:?},{v:?}");
    }
    s
}

/// `replica,time,particle_index,position` for the first `max_replicas`.
pub fn trajectory_csv(traj: &Trajectory, max_replicas: usize) -> String {
    let mut s = header("trajectory", "replica,time,particle_index,position");
    for (m, rep) in traj.replicas.iter().take(max_replicas).enumerate() {
        for (t, frame) in traj.times.iter().zip(rep) {
            for (i, x) in frame.iter().enumerate() {
                let _ = writeln!(s, "{m},{t:?},{i},{x:?}");
            }
        }
    }
    s
}

/// `level,<parameter>,err_<norm>,eoc_<norm>,...`; the first row has empty
/// EOC cells.
pub fn error_report_csv(report: &ErrorReport) -> String {
    let mut cols = format!("level,{}", report.parameter);
    for c in &report.columns {
        let _ = write!(cols, ",err_{0},eoc_{0}", c.name);
    }
    let mut s = header("error-report", &cols);
    for (k, level) in report.levels.iter().enumerate() {
        let _ = write!(s, "{k},{level:?}");
        for c in &report.columns {
            let _ = write!(s, ",{:?},", c.errors[k]);
            if k > 0 {
                let _ = write!(s, "{:?}", c.eoc[k - 1]);
            }
        }
        s.push('\n');
    }
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}
