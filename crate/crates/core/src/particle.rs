//! Euler-Maruyama integration of the interacting particle system
//!
//! `dX^i = sqrt(2a) dB^i + (1/N) sum_{j != i} V_eps'(X^i - X^j) dt`
//!
//! and the particle-count rule derived from the mean-field error bound.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::rng::{replica_rng, Stream};
use crate::sampling::InitialDensity;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleConfig {
    pub n_particles: usize,
    /// Diffusion coefficient `a`.
    pub a: f64,
    pub kernel: KernelSpec,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub replicas: usize,
    /// Times at which ensembles are recorded; all become step boundaries.
    pub output_times: Vec<f64>,
}

impl ParticleConfig {
    pub fn new(n_particles: usize, a: f64, kernel: KernelSpec, horizon: f64, dt: f64) -> Self {
        Self {
            n_particles,
            a,
            kernel,
            horizon,
            dt,
            seed: 0,
            replicas: 1,
            output_times: (0..=4).map(|k| horizon * k as f64 / 4.0).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 {
            return Err(Error::config("particle count N must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(Error::config("replica count M must be at least 1"));
        }
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(Error::config(format!(
                "diffusion a must be >= 0, got {}",
                self.a
            )));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if let Some(t) = self
            .output_times
            .iter()
            .find(|t| !(**t >= 0.0 && **t <= self.horizon))
        {
            return Err(Error::config(format!(
                "output time {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    /// `0 = t_0 < ... < t_S = horizon`: multiples of `dt` (the last step may
    /// be short) with every output time inserted.
    pub fn time_grid(&self) -> Vec<f64> {
        let tol = 1e-9 * self.dt;
        let mut grid: Vec<f64> = Vec::new();
        let mut k = 0u64;
        loop {
            let t = k as f64 * self.dt;
            if t >= self.horizon - tol {
                break;
            }
            grid.push(t);
            k += 1;
        }
        grid.push(self.horizon);
        grid.extend(self.output_times.iter().copied());
        grid.sort_by(f64::total_cmp);
        grid.dedup_by(|b, a| (*b - *a).abs() <= tol);
        grid
    }

    fn sorted_outputs(&self) -> Vec<f64> {
        let mut out = self.output_times.clone();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// Particle positions at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub positions: Vec<f64>,
    pub time: f64,
    pub step_index: usize,
}

impl ParticleEnsemble {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::config("an ensemble needs at least one particle"));
        }
        Ok(Self {
            positions,
            time: 0.0,
            step_index: 0,
        })
    }
}

/// `(1/N) sum_{j != i} V_eps'(x_i - x_j)`, summed in ascending `j`.
pub fn drift(positions: &[f64], i: usize, kernel: &KernelSpec) -> Result<f64> {
    let n = positions.len();
    if i >= n {
        return Err(Error::domain(format!(
            "particle index {i} out of range for N={n}"
        )));
    }
    let xi = positions[i];
    let mut acc = 0.0;
    for (j, &xj) in positions.iter().enumerate() {
        if j != i {
            acc += kernel.grad(xi - xj);
        }
    }
    Ok(acc / n as f64)
}

/// All drifts at once, visiting each pair once and applying the force with
/// opposite signs to both members. Agrees with [`drift`] to about
/// `1e-12 * N` relative to the force scale.
pub fn drift_all(positions: &[f64], kernel: &KernelSpec, out: &mut Vec<f64>) {
    let n = positions.len();
    out.clear();
    out.resize(n, 0.0);
    let force = kernel.pair_force();
    for i in 0..n {
        let xi = positions[i];
        let mut acc = 0.0;
        let (_, tail) = out.split_at_mut(i + 1);
        for (xj, slot) in positions[i + 1..].iter().zip(tail.iter_mut()) {
            let g = force.eval(xi - xj);
            acc += g;
            *slot -= g;
        }
        out[i] += acc;
    }
    let inv_n = 1.0 / n as f64;
    for d in out.iter_mut() {
        *d *= inv_n;
    }
}

/// One Euler-Maruyama step of length `dt`; `increments[i]` is the Brownian
/// increment of particle `i` (a `Normal(0, dt)` draw).
pub fn em_step(
    state: &ParticleEnsemble,
    config: &ParticleConfig,
    dt: f64,
    increments: &[f64],
) -> Result<ParticleEnsemble> {
    let mut drifts = Vec::with_capacity(state.positions.len());
    let mut next = state.clone();
    em_step_in_place(&mut next, config, dt, increments, &mut drifts)?;
    Ok(next)
}

fn em_step_in_place(
    state: &mut ParticleEnsemble,
    config: &ParticleConfig,
    dt: f64,
    increments: &[f64],
    drifts: &mut Vec<f64>,
) -> Result<()> {
    if increments.len() != state.positions.len() {
        return Err(Error::domain(format!(
            "{} increments for {} particles",
            increments.len(),
            state.positions.len()
        )));
    }
    let noise = (2.0 * config.a).sqrt();
    drift_all(&state.positions, &config.kernel, drifts);
    for ((x, dw), d) in state
        .positions
        .iter_mut()
        .zip(increments)
        .zip(drifts.iter())
    {
        *x = *x + dw * noise + dt * d;
    }
    state.time += dt;
    state.step_index += 1;
    Ok(())
}

/// Recorded ensembles of one simulation: `replicas[m][j]` holds the positions
/// of replica `m` at `times[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub replicas: Vec<Vec<Vec<f64>>>,
}

impl Trajectory {
    /// All positions at output index `j`, replica-major.
    pub fn samples_at(&self, j: usize) -> Vec<&[f64]> {
        self.replicas.iter().map(|r| r[j].as_slice()).collect()
    }
}

/// Runs replica `replica` and calls `visit(output_index, positions)` at every
/// output time.
pub fn run_replica(
    config: &ParticleConfig,
    initial: &InitialDensity,
    replica: u64,
    mut visit: impl FnMut(usize, &[f64]),
) -> Result<()> {
    let n = config.n_particles;
    let mut init_rng = replica_rng(config.seed, replica, Stream::Initial);
    let mut noise_rng = replica_rng(config.seed, replica, Stream::Brownian);
    let mut state = ParticleEnsemble::new(initial.sample(n, &mut init_rng))?;
    let outputs = config.sorted_outputs();
    let grid = config.time_grid();
    let tol = 1e-9 * config.dt;

    let mut next_out = 0;
    let mut emit = |t: f64, pos: &[f64], next_out: &mut usize| {
        while *next_out < outputs.len() && (outputs[*next_out] - t).abs() <= tol {
            visit(*next_out, pos);
            *next_out += 1;
        }
    };
    emit(grid[0], &state.positions, &mut next_out);

    let mut increments = vec![0.0; n];
    let mut drifts = Vec::with_capacity(n);
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        let scale = dt.sqrt();
        for inc in increments.iter_mut() {
            let z: f64 = noise_rng.sample(StandardNormal);
            *inc = scale * z;
        }
        em_step_in_place(&mut state, config, dt, &increments, &mut drifts)?;
        state.time = w[1];
        emit(w[1], &state.positions, &mut next_out);
    }
    Ok(())
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Simulates every replica and keeps the ensembles at the output times.
///
/// `workers = 0` uses the global thread pool. Results do not depend on it.
pub fn simulate(
    config: &ParticleConfig,
    initial: &InitialDensity,
    workers: usize,
) -> Result<Trajectory> {
    config.validate()?;
    let outputs = config.sorted_outputs();
    let replicas = with_workers(workers, || {
        (0..config.replicas as u64)
            .into_par_iter()
            .map(|r| {
                let mut frames = vec![Vec::new(); outputs.len()];
                run_replica(config, initial, r, |j, pos| frames[j] = pos.to_vec())?;
                Ok(frames)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(Trajectory {
        times: outputs,
        replicas,
    })
}

/// Same dynamics as [`simulate`], but each recorded ensemble is folded into
/// a per-replica accumulator instead of being stored. Accumulators are
/// returned in replica order.
pub fn simulate_fold<T, I, F>(
    config: &ParticleConfig,
    initial: &InitialDensity,
    workers: usize,
    init: I,
    fold: F,
) -> Result<Vec<T>>
where
    T: Send,
    I: Fn() -> T + Sync + Send,
    F: Fn(&mut T, usize, &[f64]) + Sync + Send,
{
    config.validate()?;
    with_workers(workers, || {
        (0..config.replicas as u64)
            .into_par_iter()
            .map(|r| {
                let mut acc = init();
                run_replica(config, initial, r, |j, pos| fold(&mut acc, j, pos))?;
                Ok(acc)
            })
            .collect::<Result<Vec<_>>>()
    })?
}

/// `t/N * (sqrt(pi)/2 * eps^(d+2) / K * exp(t^2 K^2 eps^(-2d-4)) + t)` with
/// `K = sup|V''|`: the mean-field error bound divided by its unknown
/// constant. Infinite when `K = 0`.
pub fn mean_field_bound(epsilon: f64, t: f64, kernel: &KernelSpec, n: usize) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let k = kernel.second_derivative_sup();
    let d = kernel.dim() as i32;
    let growth = (t * t * k * k * epsilon.powi(-2 * d - 4)).exp();
    let bracket = PI.sqrt() / 2.0 * epsilon.powi(d + 2) / k * growth + t;
    t / n as f64 * bracket
}

/// Smallest `N >= 1` with `mean_field_bound(.., N) <= threshold`.
pub fn min_particle_count(
    epsilon: f64,
    t: f64,
    kernel: &KernelSpec,
    threshold: f64,
) -> Result<usize> {
    if !(threshold > 0.0) {
        return Err(Error::config(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    if !(epsilon > 0.0) || !(t >= 0.0) {
        return Err(Error::config("bound needs epsilon > 0 and t >= 0"));
    }
    let unit = mean_field_bound(epsilon, t, kernel, 1);
    if !unit.is_finite() {
        return Err(Error::config(
            "bound is unbounded (sup|V''| = 0); no particle count satisfies it",
        ));
    }
    let mut n = (unit / threshold).ceil().max(1.0) as usize;
    while n > 1 && mean_field_bound(epsilon, t, kernel, n - 1) <= threshold {
        n -= 1;
    }
    while mean_field_bound(epsilon, t, kernel, n) > threshold {
        n += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::BarenblattComponent;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kernel(b: f64, eps: f64) -> KernelSpec {
        KernelSpec::one_d(b, eps).unwrap()
    }

    #[test]
    fn drift_of_coincident_pair_is_zero() {
        let k = kernel(1.0, 1.0);
        assert_eq!(drift(&[1.3, 1.3], 0, &k).unwrap(), 0.0);
        assert_eq!(drift(&[1.3, 1.3], 1, &k).unwrap(), 0.0);
    }

    #[test]
    fn drift_pair_antisymmetric() {
        let k = kernel(1.0, 1.0);
        let p = [0.0, 1.0];
        assert_eq!(drift(&p, 0, &k).unwrap(), -drift(&p, 1, &k).unwrap());
        assert!(drift(&p, 0, &k).unwrap() > 0.0);
    }

    #[test]
    fn drift_three_particles_by_hand() {
        let k = kernel(1.0, 1.5);
        let g = |x: f64| {
            -x / (1.5f64 * 1.5 * 1.5) * (-x * x / (2.0 * 1.5 * 1.5)).exp() / (2.0 * PI).sqrt()
        };
        let expect = (g(1.0) + g(-2.0)) / 3.0;
        let got = drift(&[-1.0, 0.0, 2.0], 1, &k).unwrap();
        assert!((got - expect).abs() < 1e-16, "{got} {expect}");
    }

    #[test]
    fn drift_index_checked() {
        assert!(matches!(
            drift(&[0.0, 1.0], 2, &kernel(1.0, 1.0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pairwise_drift_matches_canonical_order() {
        let k = kernel(1.0, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2usize, 17, 300] {
            let pos: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let mut fast = Vec::new();
            drift_all(&pos, &k, &mut fast);
            let scale = k.grad(k.epsilon()).abs();
            for (i, f) in fast.iter().enumerate() {
                let slow = drift(&pos, i, &k).unwrap();
                assert!((f - slow).abs() <= 1e-12 * n as f64 * scale);
            }
        }
    }

    #[test]
    fn drift_momentum_vanishes() {
        let k = kernel(1.0, 1.5);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let n = rng.random_range(2..200);
            let pos: Vec<f64> = (0..n).map(|_| rng.random_range(-8.0..8.0)).collect();
            let mut d = Vec::new();
            drift_all(&pos, &k, &mut d);
            assert!(d.iter().sum::<f64>().abs() <= 1e-13 * n as f64);
        }
    }

    #[test]
    fn pair_attracts_within_three_widths() {
        let eps = 1.2;
        let k = kernel(1.0, eps);
        for r in [0.01, 0.5, 1.0, 2.0, 3.0 * eps - 1e-3] {
            let p = [0.0, r];
            assert!(drift(&p, 0, &k).unwrap() > 0.0);
            assert!(drift(&p, 1, &k).unwrap() < 0.0);
        }
    }

    #[test]
    fn em_step_without_noise_or_drift() {
        let cfg = ParticleConfig::new(4, 0.0, kernel(1.0, 1.0), 1.0, 0.1);
        let s = ParticleEnsemble::new(vec![0.5; 4]).unwrap();
        let next = em_step(&s, &cfg, 0.1, &[0.3, -0.2, 1.0, 0.0]).unwrap();
        assert_eq!(next.positions, s.positions);
        assert_eq!(next.step_index, 1);
        assert!((next.time - 0.1).abs() < 1e-16);
        assert!(em_step(&s, &cfg, 0.1, &[0.0; 3]).is_err());
    }

    #[test]
    fn em_step_is_translation_equivariant() {
        let cfg = ParticleConfig::new(5, 0.7, kernel(1.0, 1.5), 1.0, 0.1);
        let base = vec![-1.0, -0.25, 0.0, 0.75, 2.0];
        let inc = [0.1, -0.3, 0.2, 0.05, -0.15];
        let c = 4.0;
        let a = em_step(
            &ParticleEnsemble::new(base.clone()).unwrap(),
            &cfg,
            0.1,
            &inc,
        )
        .unwrap();
        let shifted: Vec<f64> = base.iter().map(|x| x + c).collect();
        let b = em_step(&ParticleEnsemble::new(shifted).unwrap(), &cfg, 0.1, &inc).unwrap();
        for (x, y) in a.positions.iter().zip(&b.positions) {
            assert!((y - x - c).abs() < 1e-14);
        }
    }

    #[test]
    fn single_particle_diffuses_with_variance_2a_dt() {
        let (a, dt) = (0.8, 0.05);
        let cfg = ParticleConfig::new(1, a, kernel(3.0, 1.0), 1.0, dt);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut s = ParticleEnsemble::new(vec![0.0]).unwrap();
        let mut moves = Vec::with_capacity(10_000);
        for _ in 0..10_000 {
            let z: f64 = rng.sample(StandardNormal);
            let next = em_step(&s, &cfg, dt, &[z * dt.sqrt()]).unwrap();
            moves.push(next.positions[0] - s.positions[0]);
            s = next;
        }
        let mean = moves.iter().sum::<f64>() / moves.len() as f64;
        let var = moves.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (moves.len() - 1) as f64;
        assert!((var / (2.0 * a * dt) - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn time_grid_includes_outputs_and_short_last_step() {
        let mut cfg = ParticleConfig::new(1, 0.0, kernel(1.0, 1.0), 1.0, 0.3);
        cfg.output_times = vec![0.0, 0.5, 1.0];
        let g = cfg.time_grid();
        let expect = [0.0, 0.3, 0.5, 0.6, 0.9, 1.0];
        assert_eq!(g.len(), expect.len());
        for (x, y) in g.iter().zip(expect) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn simulation_is_deterministic_across_worker_counts() {
        let mut cfg = ParticleConfig::new(10, 0.5, kernel(1.0, 1.5), 1.0, 0.05);
        cfg.replicas = 4;
        cfg.seed = 1234;
        let init = InitialDensity::initial1();
        let a = simulate(&cfg, &init, 1).unwrap();
        let b = simulate(&cfg, &init, 3).unwrap();
        let c = simulate(&cfg, &init, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a.times.len(), 5);
        assert_eq!(a.replicas[0][0].len(), 10);
    }

    #[test]
    fn no_dynamics_keeps_particles_fixed() {
        let mut cfg = ParticleConfig::new(20, 0.0, kernel(0.0, 1.0), 2.0, 0.1);
        cfg.replicas = 2;
        let traj = simulate(&cfg, &InitialDensity::initial2(), 0).unwrap();
        for rep in &traj.replicas {
            for frame in rep {
                assert_eq!(frame, &rep[0]);
            }
        }
    }

    #[test]
    fn samples_come_from_the_initial_density() {
        let comp = BarenblattComponent::new(1.0, 1.0, 2.0, 0.0).unwrap();
        let init = InitialDensity::new(vec![comp]).unwrap();
        let mut cfg = ParticleConfig::new(50, 0.0, kernel(0.0, 1.0), 1.0, 0.5);
        cfg.replicas = 3;
        let traj = simulate(&cfg, &init, 0).unwrap();
        let (lo, hi) = comp.support();
        for rep in &traj.replicas {
            assert!(rep[0].iter().all(|x| *x >= lo && *x <= hi));
        }
    }

    #[test]
    fn bound_basic_properties() {
        let k = kernel(1.0, 1.5);
        assert_eq!(mean_field_bound(1.5, 0.0, &k, 10), 0.0);
        let b1 = mean_field_bound(1.5, 7.0, &k, 100);
        let b2 = mean_field_bound(1.5, 7.0, &k, 50);
        assert!((b2 / b1 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn bound_direct_evaluation() {
        let k = kernel(1.0, 1.5);
        let kk = 1.0 / (2.0 * PI).sqrt();
        let e: f64 = 1.5;
        let expect =
            7.0 * ((PI.sqrt() / 2.0) * e.powi(3) / kk * (49.0 * kk * kk / e.powi(6)).exp() + 7.0);
        assert!((mean_field_bound(1.5, 7.0, &k, 1) - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn min_count_rules() {
        let k = kernel(1.0, 1.5);
        let unit = mean_field_bound(1.5, 7.0, &k, 1);
        assert_eq!(min_particle_count(1.5, 7.0, &k, unit * 1.01).unwrap(), 1);
        let n = min_particle_count(1.5, 7.0, &k, 0.3).unwrap();
        assert!(mean_field_bound(1.5, 7.0, &k, n) <= 0.3);
        assert!(mean_field_bound(1.5, 7.0, &k, n - 1) > 0.3);
        let n2 = min_particle_count(1.5, 7.0, &k, 0.6).unwrap();
        assert!(n2 == n.div_ceil(2) || n2 + 1 == n.div_ceil(2) || n2 == n / 2);
        assert!(min_particle_count(1.5, 7.0, &k, 0.0).is_err());
        assert!(min_particle_count(1.5, 7.0, &kernel(0.0, 1.5), 0.3).is_err());
    }
}
