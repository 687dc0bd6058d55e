//! Executes a [`Scenario`] and writes its artifacts.

use std::fmt::Write as _;
use std::path::PathBuf;

use log::info;

use crate::analysis::{running_max, running_supremum};
use crate::error::{Error, Result};
use crate::experiments::{
    initial_grid_density, particle_density_series, run_compare_study, run_eoc_study, CompareStudy,
    EocStudy,
};
use crate::grid::Grid;
use crate::macro_solver::{solve, BlowupReport, MacroConfig, Outcome};
use crate::output;
use crate::particle::{min_particle_count, simulate, ParticleConfig};
use crate::scenario::{Mode, Scenario};

/// The particle count quoted for the reference parameter set
/// (`epsilon = 1.5`, `t = 7`, `b = 1`, threshold `0.3`).
pub const REFERENCE_MIN_PARTICLE_COUNT: usize = 555;

pub const MANIFEST_NAME: &str = "manifest.cfg";

/// Command-line overrides. `workers` never changes the output.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output: PathBuf,
    pub files: Vec<PathBuf>,
    pub blowup: Option<BlowupReport>,
}

impl RunSummary {
    /// Process exit code: 0 on success, 3 when a blow-up was detected.
    pub fn exit_code(&self) -> i32 {
        if self.blowup.is_some() {
            3
        } else {
            0
        }
    }
}

/// Exit code for a failed run: 2 for invalid input, 1 otherwise.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse { .. } => 2,
        _ => 1,
    }
}

fn align_for(dx: f64) -> f64 {
    dx * (1.0 / dx).ceil().max(1.0)
}

/// Pins every default that depends on other values so the scenario can be
/// written out and replayed exactly.
pub fn resolve(scenario: &Scenario, options: &RunOptions) -> Scenario {
    let mut sc = scenario.clone();
    if let Some(seed) = options.seed {
        sc.seed = seed;
    }
    if let Some(out) = &options.output {
        sc.output = out.clone();
    }
    let spacing = match sc.mode {
        Mode::Eoc => (0.5f64).powi(sc.levels.iter().copied().min().unwrap_or(0) as i32),
        _ => sc.dx,
    };
    sc.domain = Some(sc.resolved_domain(align_for(spacing)));
    sc.output_times = Some(sc.resolved_output_times());
    sc
}

pub fn run_file(path: &std::path::Path, options: &RunOptions) -> Result<RunSummary> {
    run(&Scenario::load(path)?, options)
}

pub fn run(scenario: &Scenario, options: &RunOptions) -> Result<RunSummary> {
    let sc = resolve(scenario, options);
    sc.validate()?;
    let a = sc.diffusion();
    info!("mode {} with a = {a}, seed {}", sc.mode.as_str(), sc.seed);
    let mut files = Vec::new();
    let mut derived: Vec<(String, String)> = vec![
        ("a".into(), format!("{a:?}")),
        ("sup_norm_u0".into(), format!("{:?}", sc.initial.sup_norm())),
        ("seed".into(), sc.seed.to_string()),
    ];
    if sc.b > 0.0 {
        derived.push((
            "aggregation_threshold".into(),
            format!("{:?}", a / (2.0 * sc.b)),
        ));
    }
    let out = sc.output.clone();
    let mut blowup = None;
    let (lo, hi) = sc.domain.expect("resolved");

    match sc.mode {
        Mode::Bound => {
            let n = min_particle_count(sc.epsilon, sc.horizon, &sc.kernel()?, sc.threshold)?;
            derived.push(("min_particle_count".into(), n.to_string()));
            derived.push((
                "reference_min_particle_count".into(),
                REFERENCE_MIN_PARTICLE_COUNT.to_string(),
            ));
        }
        Mode::Macro => {
            let grid = Grid::covering(lo, hi, sc.dx)?;
            let mut cfg = MacroConfig::new(a, sc.b, sc.horizon);
            cfg.safety = sc.safety;
            cfg.output_times = sc.output_times.clone().expect("resolved");
            cfg.sup_samples = sc.sup_samples;
            let run = solve(&initial_grid_density(&sc.initial, grid), &cfg)?;
            derived.push(("steps".into(), run.steps.to_string()));
            derived.push(("running_sup".into(), format!("{:?}", run.running_sup)));
            derived.push(("max_mass_drift".into(), format!("{:?}", run.max_mass_drift)));
            files.push(output::write(
                &out,
                "snapshots.csv",
                &output::snapshots_csv(&run.snapshots),
            )?);
            files.push(output::write(
                &out,
                "running_sup.csv",
                &output::sup_csv(&running_max(&run.sup_trace)),
            )?);
            if let Outcome::BlowUp(report) = run.outcome {
                derived.push(("blowup_time".into(), format!("{:?}", report.time)));
                derived.push(("blowup_max".into(), format!("{:?}", report.max_value)));
                blowup = Some(report);
            }
        }
        Mode::Particle => {
            let grid = Grid::covering(lo, hi, sc.dx)?;
            let mut cfg = ParticleConfig::new(sc.n_particles, a, sc.kernel()?, sc.horizon, sc.dt);
            cfg.seed = sc.seed;
            cfg.replicas = sc.replicas;
            cfg.output_times = sc.output_times.clone().expect("resolved");
            let (series, lost) = particle_density_series(&cfg, &sc.initial, grid, options.workers)?;
            derived.push(("out_of_range".into(), lost.to_string()));
            files.push(output::write(
                &out,
                "density.csv",
                &output::snapshots_csv(&series),
            )?);
            files.push(output::write(
                &out,
                "running_sup.csv",
                &output::sup_csv(&running_supremum(&series)),
            )?);
            if sc.trajectory_replicas > 0 {
                // replica streams are keyed by index, so the first k replicas
                // of the full run are reproduced here
                cfg.replicas = sc.trajectory_replicas.min(sc.replicas);
                let traj = simulate(&cfg, &sc.initial, options.workers)?;
                files.push(output::write(
                    &out,
                    "trajectory.csv",
                    &output::trajectory_csv(&traj, cfg.replicas),
                )?);
            }
        }
        Mode::Compare => {
            let outcome = run_compare_study(&CompareStudy {
                initial: sc.initial.clone(),
                a,
                kernel: sc.kernel()?,
                horizon: sc.horizon,
                dx: sc.dx,
                particle_counts: sc.particle_counts.clone(),
                replicas: sc.replicas,
                dt: sc.dt,
                seed: sc.seed,
                workers: options.workers,
                safety: sc.safety,
                snapshots: sc.snapshots,
                domain: sc.domain,
            })?;
            derived.push(("out_of_range".into(), outcome.out_of_range.to_string()));
            files.push(output::write(
                &out,
                "error_report.csv",
                &output::error_report_csv(&outcome.report),
            )?);
            files.push(output::write(
                &out,
                "macro_snapshots.csv",
                &output::snapshots_csv(&outcome.macro_snapshots),
            )?);
            for (n, series) in sc.particle_counts.iter().zip(&outcome.particle_series) {
                files.push(output::write(
                    &out,
                    &format!("particle_density_N{n}.csv"),
                    &output::snapshots_csv(series),
                )?);
            }
        }
        Mode::Eoc => {
            let outcome = run_eoc_study(&EocStudy {
                initial: sc.initial.clone(),
                a,
                b: sc.b,
                horizon: sc.horizon,
                levels: sc.levels.clone(),
                reference_level: sc.reference_level,
                safety: sc.safety,
                snapshots: sc.snapshots,
                domain: sc.domain,
            })?;
            derived.push((
                "max_mass_drift".into(),
                format!("{:?}", outcome.max_mass_drift),
            ));
            files.push(output::write(
                &out,
                "error_report.csv",
                &output::error_report_csv(&outcome.report),
            )?);
        }
    }

    if sc.mode != Mode::Bound {
        // every mode records the bound next to the reference count
        if let Ok(n) = sc
            .kernel()
            .and_then(|k| min_particle_count(sc.epsilon, sc.horizon, &k, sc.threshold))
        {
            derived.push(("min_particle_count".into(), n.to_string()));
            derived.push((
                "reference_min_particle_count".into(),
                REFERENCE_MIN_PARTICLE_COUNT.to_string(),
            ));
        }
    }

    let mut manifest = sc.to_text();
    manifest.push_str("\n[derived]\n");
    for (k, v) in &derived {
        let _ = writeln!(manifest, "{k} = {v}");
    }
    files.push(output::write(&out, MANIFEST_NAME, &manifest)?);
    Ok(RunSummary {
        output: out,
        files,
        blowup,
    })
}
