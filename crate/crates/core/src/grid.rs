//! Uniform 1-D cell grids and cell-valued densities.

use crate::error::{Error, Result};

/// Uniform grid of `n_cells` cells starting at `x_min`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    x_min: f64,
    dx: f64,
    n_cells: usize,
}

impl Grid {
    pub fn new(x_min: f64, dx: f64, n_cells: usize) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::config(format!(
                "grid spacing must be positive, got {dx}"
            )));
        }
        if !x_min.is_finite() {
            return Err(Error::config("grid origin must be finite"));
        }
        if n_cells < 3 {
            return Err(Error::config(format!(
                "grid needs at least 3 cells, got {n_cells}"
            )));
        }
        Ok(Self { x_min, dx, n_cells })
    }

    /// Grid covering `[x_min, x_max]` exactly; the length must be a whole
    /// number of cells.
    pub fn covering(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        let cells = (x_max - x_min) / dx;
        let n = cells.round();
        if (cells - n).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::config(format!(
                "interval [{x_min}, {x_max}] is not a whole number of cells of width {dx}"
            )));
        }
        Self::new(x_min, dx, n as usize)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.n_cells as f64 * self.dx
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn length(&self) -> f64 {
        self.n_cells as f64 * self.dx
    }

    /// `x_i = x_min + (i + 1/2) dx`.
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|i| self.center(i))
    }

    /// Index of the half-open cell `[x_i - dx/2, x_i + dx/2)` containing `x`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let k = ((x - self.x_min) / self.dx).floor();
        if k >= 0.0 && k < self.n_cells as f64 {
            Some(k as usize)
        } else {
            None
        }
    }
}

/// Cell values `u_i` on a grid at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl GridDensity {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::domain(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.n_cells()],
            time: 0.0,
        }
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(grid: Grid, time: f64, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.centers().map(f).collect(),
            time,
        }
    }

    /// `dx * sum(u_i)`.
    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.values.iter().sum::<f64>()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
