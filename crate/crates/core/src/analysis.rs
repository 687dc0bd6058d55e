//! Density estimation, discrete error norms, EOC and running suprema.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridDensity};

/// Bin counts of particle positions on a grid, accumulated over replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramCounts {
    pub grid: Grid,
    pub counts: Vec<u64>,
    /// Samples that fell outside the grid.
    pub out_of_range: u64,
    /// Samples seen, including out-of-range ones.
    pub total: u64,
}

impl HistogramCounts {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            counts: vec![0; grid.n_cells()],
            out_of_range: 0,
            total: 0,
        }
    }

    pub fn add(&mut self, samples: &[f64]) {
        for &x in samples {
            match self.grid.locate(x) {
                Some(i) => self.counts[i] += 1,
                None => self.out_of_range += 1,
            }
        }
        self.total += samples.len() as u64;
    }

    pub fn merge(&mut self, other: &HistogramCounts) {
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.out_of_range += other.out_of_range;
        self.total += other.total;
    }

    /// `count_i / (total * dx)`, i.e. the replica average of the per-replica
    /// estimates `count_i^m / (N dx)` when every replica has `N` samples.
    pub fn density(&self, time: f64) -> GridDensity {
        let scale = 1.0 / (self.total.max(1) as f64 * self.grid.dx());
        GridDensity {
            grid: self.grid,
            values: self.counts.iter().map(|&c| c as f64 * scale).collect(),
            time,
        }
    }
}

/// Histogram estimate and the number of samples it could not place.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub density: GridDensity,
    pub out_of_range: u64,
}

/// Histogram density estimator over `M` replicas of `N` particles each, with
/// half-open bins aligned with the grid cells.
pub fn density_histogram(samples: &[&[f64]], grid: &Grid, time: f64) -> Result<Histogram> {
    let Some(first) = samples.first() else {
        return Err(Error::domain("density estimate needs at least one replica"));
    };
    if first.is_empty() || samples.iter().any(|s| s.len() != first.len()) {
        return Err(Error::domain(
            "every replica must hold the same nonzero number of samples",
        ));
    }
    let mut counts = HistogramCounts::new(*grid);
    for s in samples {
        counts.add(s);
    }
    Ok(Histogram {
        density: counts.density(time),
        out_of_range: counts.out_of_range,
    })
}

/// Norm used by [`error_norms`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    /// `max_{i,j} |e_i^j|`.
    Max,
    /// `max_j (dx sum_i |e_i^j|^p)^(1/p)`.
    Lp(f64),
}

impl Norm {
    pub fn label(&self) -> String {
        match self {
            Norm::Max => "inf".to_string(),
            Norm::Lp(p) => format!("L{p}"),
        }
    }
}

fn same_grid(a: &Grid, b: &Grid) -> bool {
    a.n_cells() == b.n_cells()
        && (a.dx() - b.dx()).abs() <= 1e-12 * a.dx()
        && (a.x_min() - b.x_min()).abs() <= 1e-12 * a.dx().max(a.x_min().abs())
}

/// Maximum over snapshots of the discrete norm of `u - v`.
pub fn error_norms(u: &[GridDensity], v: &[GridDensity], norm: Norm) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::domain(format!(
            "{} snapshots compared with {}",
            u.len(),
            v.len()
        )));
    }
    if let Norm::Lp(p) = norm {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::domain(format!(
                "norm exponent must be >= 1, got {p}"
            )));
        }
    }
    let mut worst: f64 = 0.0;
    for (a, b) in u.iter().zip(v) {
        if !same_grid(&a.grid, &b.grid) {
            return Err(Error::domain("snapshots live on different grids"));
        }
        if (a.time - b.time).abs() > 1e-9 * a.time.abs().max(1.0) {
            return Err(Error::domain(format!(
                "snapshot times differ: {} vs {}",
                a.time, b.time
            )));
        }
        let diffs = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs());
        let e = match norm {
            Norm::Max => diffs.fold(0.0, f64::max),
            Norm::Lp(1.0) => a.grid.dx() * diffs.sum::<f64>(),
            Norm::Lp(2.0) => (a.grid.dx() * diffs.map(|d| d * d).sum::<f64>()).sqrt(),
            Norm::Lp(p) => (a.grid.dx() * diffs.map(|d| d.powf(p)).sum::<f64>()).powf(1.0 / p),
        };
        worst = worst.max(e);
    }
    Ok(worst)
}

/// `log2(e_k / e_{k+1})` for successive halvings.
pub fn eoc(errors: &[f64]) -> Result<Vec<f64>> {
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::domain(format!(
            "EOC needs positive finite errors, got {e}"
        )));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Cumulative maximum of `max_i u_i` over the series.
pub fn running_supremum(series: &[GridDensity]) -> Vec<(f64, f64)> {
    let mut sup = f64::NEG_INFINITY;
    series
        .iter()
        .map(|u| {
            sup = sup.max(u.max());
            (u.time, sup)
        })
        .collect()
}

/// Running maximum of a raw `(t, value)` trace.
pub fn running_max(trace: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sup = f64::NEG_INFINITY;
    trace
        .iter()
        .map(|&(t, v)| {
            sup = sup.max(v);
            (t, sup)
        })
        .collect()
}

/// Conservative restriction: each coarse cell takes the mean of the fine
/// cells it covers.
pub fn restrict(fine: &GridDensity, coarse: &Grid) -> Result<GridDensity> {
    let fg = fine.grid;
    let ratio = coarse.dx() / fg.dx();
    let r = ratio.round();
    if r < 1.0 || (ratio - r).abs() > 1e-9 * ratio {
        return Err(Error::domain(format!(
            "coarse spacing {} is not a multiple of fine spacing {}",
            coarse.dx(),
            fg.dx()
        )));
    }
    let shift = (coarse.x_min() - fg.x_min()) / fg.dx();
    let s = shift.round();
    if s < 0.0 || (shift - s).abs() > 1e-9 * shift.abs().max(1.0) {
        return Err(Error::domain(
            "coarse grid origin is not aligned with a fine cell face",
        ));
    }
    let (r, s) = (r as usize, s as usize);
    if s + r * coarse.n_cells() > fg.n_cells() {
        return Err(Error::domain("coarse grid extends beyond the fine grid"));
    }
    let values = (0..coarse.n_cells())
        .map(|i| {
            let start = s + i * r;
            fine.values[start..start + r].iter().sum::<f64>() / r as f64
        })
        .collect();
    Ok(GridDensity {
        grid: *coarse,
        values,
        time: fine.time,
    })
}

/// `dx * sum(u_i)`.
pub fn mass(u: &GridDensity) -> f64 {
    u.mass()
}

/// Errors and EOC for one norm across a refinement sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct NormColumn {
    pub name: String,
    pub errors: Vec<f64>,
    /// `eoc[k]` compares row `k` with row `k + 1`.
    pub eoc: Vec<f64>,
}

/// Error table over a sequence of step sizes or particle counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// Header of the first column, e.g. `dx` or `N`.
    pub parameter: String,
    pub levels: Vec<f64>,
    pub columns: Vec<NormColumn>,
}

impl ErrorReport {
    pub fn new(parameter: impl Into<String>, levels: Vec<f64>) -> Self {
        Self {
            parameter: parameter.into(),
            levels,
            columns: Vec::new(),
        }
    }

    /// Adds a norm column; the EOC uses `log2` of successive ratios, which
    /// for particle counts means the doubling sequence `N, 2N, ...`.
    pub fn push(&mut self, name: impl Into<String>, errors: Vec<f64>) -> Result<()> {
        if errors.len() != self.levels.len() {
            return Err(Error::domain("one error per level is required"));
        }
        let eoc = eoc(&errors)?;
        self.columns.push(NormColumn {
            name: name.into(),
            errors,
            eoc,
        });
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&NormColumn> {
        self.columns.iter().find(|c| c.name == name)
    }
}
