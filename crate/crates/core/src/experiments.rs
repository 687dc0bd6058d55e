//! Refinement and comparison studies built from the solvers.

use crate::analysis::{error_norms, restrict, ErrorReport, HistogramCounts, Norm};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridDensity};
use crate::kernel::KernelSpec;
use crate::macro_solver::{solve, MacroConfig, MacroRun};
use crate::particle::{simulate_fold, ParticleConfig};
use crate::sampling::InitialDensity;

/// `a = 2 b ||u0||_inf eta`.
pub fn diffusion_from_eta(initial: &InitialDensity, b: f64, eta: f64) -> f64 {
    2.0 * b * initial.sup_norm() * eta
}

/// Interval holding the initial support plus `6 sqrt(2 a T)` (at least one
/// unit) on each side, widened outwards to multiples of `align`.
pub fn padded_domain(initial: &InitialDensity, a: f64, horizon: f64, align: f64) -> (f64, f64) {
    let (lo, hi) = initial.support();
    let pad = (6.0 * (2.0 * a * horizon).sqrt()).max(1.0);
    (
        ((lo - pad) / align).floor() * align,
        ((hi + pad) / align).ceil() * align,
    )
}

/// `count + 1` evenly spaced times in `[0, horizon]`.
pub fn uniform_times(horizon: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|k| horizon * k as f64 / count as f64)
        .collect()
}

/// Cell-centre samples of the initial density.
pub fn initial_grid_density(initial: &InitialDensity, grid: Grid) -> GridDensity {
    GridDensity::from_fn(grid, 0.0, |x| initial.pdf(x))
}

/// Self-convergence study of the macro solver on `dx = 2^-level`.
#[derive(Debug, Clone)]
pub struct EocStudy {
    pub initial: InitialDensity,
    pub a: f64,
    pub b: f64,
    pub horizon: f64,
    pub levels: Vec<u32>,
    pub reference_level: u32,
    pub safety: f64,
    /// Errors are maximized over `snapshots + 1` uniform times.
    pub snapshots: usize,
    /// Domain; all grids share it. Defaults to [`padded_domain`] aligned to
    /// the coarsest spacing.
    pub domain: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct EocOutcome {
    pub report: ErrorReport,
    pub domain: (f64, f64),
    pub max_mass_drift: f64,
}

fn level_dx(level: u32) -> f64 {
    (0.5f64).powi(level as i32)
}

fn completed(run: MacroRun, what: &str) -> Result<Vec<GridDensity>> {
    if run.blew_up() {
        return Err(Error::domain(format!(
            "{what} blew up; no convergence data"
        )));
    }
    Ok(run.snapshots)
}

pub fn run_eoc_study(study: &EocStudy) -> Result<EocOutcome> {
    if study.levels.is_empty() {
        return Err(Error::config("EOC study needs at least one level"));
    }
    if study.levels.iter().any(|&l| l >= study.reference_level) {
        return Err(Error::config(
            "every level must be coarser than the reference level",
        ));
    }
    let coarsest = level_dx(*study.levels.iter().min().unwrap_or(&0));
    let domain = study.domain.unwrap_or_else(|| {
        padded_domain(&study.initial, study.a, study.horizon, coarsest.max(1.0))
    });
    let times = uniform_times(study.horizon, study.snapshots);
    let config = |_: f64| {
        let mut c = MacroConfig::new(study.a, study.b, study.horizon);
        c.safety = study.safety;
        c.output_times = times.clone();
        c.sup_samples = 1;
        c
    };

    let ref_grid = Grid::covering(domain.0, domain.1, level_dx(study.reference_level))?;
    let ref_run = solve(
        &initial_grid_density(&study.initial, ref_grid),
        &config(ref_grid.dx()),
    )?;
    let mut max_mass_drift = ref_run.max_mass_drift;
    let reference = completed(ref_run, "reference solution")?;

    let mut levels = study.levels.clone();
    levels.sort_unstable();
    let mut errors = Vec::with_capacity(levels.len());
    for &level in &levels {
        let grid = Grid::covering(domain.0, domain.1, level_dx(level))?;
        let run = solve(
            &initial_grid_density(&study.initial, grid),
            &config(grid.dx()),
        )?;
        max_mass_drift = max_mass_drift.max(run.max_mass_drift);
        let coarse = completed(run, "coarse solution")?;
        let restricted = reference
            .iter()
            .map(|r| restrict(r, &grid))
            .collect::<Result<Vec<_>>>()?;
        errors.push(error_norms(&restricted, &coarse, Norm::Lp(1.0))?);
    }
    let mut report = ErrorReport::new("dx", levels.iter().map(|&l| level_dx(l)).collect());
    report.push("L1", errors)?;
    Ok(EocOutcome {
        report,
        domain,
        max_mass_drift,
    })
}

/// Particle density estimate against the macro solution on one grid.
#[derive(Debug, Clone)]
pub struct CompareStudy {
    pub initial: InitialDensity,
    pub a: f64,
    pub kernel: KernelSpec,
    pub horizon: f64,
    pub dx: f64,
    pub particle_counts: Vec<usize>,
    pub replicas: usize,
    pub dt: f64,
    pub seed: u64,
    pub workers: usize,
    pub safety: f64,
    pub snapshots: usize,
    pub domain: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    /// Columns `inf`, `L1`, `L2`.
    pub report: ErrorReport,
    pub macro_snapshots: Vec<GridDensity>,
    /// Particle density series per particle count.
    pub particle_series: Vec<Vec<GridDensity>>,
    pub out_of_range: u64,
}

/// Histogram series of a particle run at `config.output_times`.
pub fn particle_density_series(
    config: &ParticleConfig,
    initial: &InitialDensity,
    grid: Grid,
    workers: usize,
) -> Result<(Vec<GridDensity>, u64)> {
    let mut times = config.output_times.clone();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let per_replica = simulate_fold(
        config,
        initial,
        workers,
        || vec![HistogramCounts::new(grid); times.len()],
        |acc, j, pos| acc[j].add(pos),
    )?;
    let mut total = vec![HistogramCounts::new(grid); times.len()];
    for rep in &per_replica {
        for (t, r) in total.iter_mut().zip(rep) {
            t.merge(r);
        }
    }
    let out_of_range = total.iter().map(|h| h.out_of_range).sum();
    let series = total
        .iter()
        .zip(&times)
        .map(|(h, &t)| h.density(t))
        .collect();
    Ok((series, out_of_range))
}

pub fn run_compare_study(study: &CompareStudy) -> Result<CompareOutcome> {
    if study.particle_counts.is_empty() {
        return Err(Error::config(
            "comparison needs at least one particle count",
        ));
    }
    let domain = study
        .domain
        .unwrap_or_else(|| padded_domain(&study.initial, study.a, study.horizon, 1.0));
    let grid = Grid::covering(domain.0, domain.1, study.dx)?;
    let times = uniform_times(study.horizon, study.snapshots);

    let mut mc = MacroConfig::new(study.a, study.kernel.b(), study.horizon);
    mc.safety = study.safety;
    mc.output_times = times.clone();
    let macro_run = solve(&initial_grid_density(&study.initial, grid), &mc)?;
    let macro_snapshots = completed(macro_run, "macro solution")?;

    let mut inf = Vec::new();
    let mut l1 = Vec::new();
    let mut l2 = Vec::new();
    let mut particle_series = Vec::new();
    let mut out_of_range = 0;
    for &n in &study.particle_counts {
        let mut pc = ParticleConfig::new(n, study.a, study.kernel, study.horizon, study.dt);
        pc.replicas = study.replicas;
        pc.seed = study.seed;
        pc.output_times = times.clone();
        let (series, lost) = particle_density_series(&pc, &study.initial, grid, study.workers)?;
        out_of_range += lost;
        inf.push(error_norms(&series, &macro_snapshots, Norm::Max)?);
        l1.push(error_norms(&series, &macro_snapshots, Norm::Lp(1.0))?);
        l2.push(error_norms(&series, &macro_snapshots, Norm::Lp(2.0))?);
        particle_series.push(series);
    }
    let mut report = ErrorReport::new(
        "N",
        study.particle_counts.iter().map(|&n| n as f64).collect(),
    );
    report.push("inf", inf)?;
    report.push("L1", l1)?;
    report.push("L2", l2)?;
    Ok(CompareOutcome {
        report,
        macro_snapshots,
        particle_series,
        out_of_range,
    })
}
