//! Fractional-step finite-difference solver for
//! `u_t + 2b (u_x u)_x = a u_xx` on a truncated line.
//!
//! One step applies the upwind advection update and then the explicit heat
//! update. Cells outside the grid are zero ghosts; mass that reaches them is
//! lost and reported.
//!
//! Faces are indexed `0..=n`: face `k` separates cell `k - 1` from cell `k`.

use std::collections::VecDeque;

use log::warn;

use crate::error::{Error, Result};
use crate::grid::GridDensity;

/// Relative slack on step-size checks, absorbing the rounding in `cfl_dt`.
const STEP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MacroConfig {
    pub a: f64,
    pub b: f64,
    pub horizon: f64,
    /// Multiplier in `(0, 1]` on the positivity step bound.
    pub safety: f64,
    pub output_times: Vec<f64>,
    /// Number of evenly spaced samples of `max u` kept in the sup trace.
    pub sup_samples: usize,
    /// Relative mass loss through the boundary that triggers a warning.
    pub mass_tolerance: f64,
    pub blowup: BlowupCriterion,
}

impl MacroConfig {
    pub fn new(a: f64, b: f64, horizon: f64) -> Self {
        Self {
            a,
            b,
            horizon,
            safety: 0.9,
            output_times: (0..=8).map(|k| horizon * k as f64 / 8.0).collect(),
            sup_samples: 1000,
            mass_tolerance: 1e-9,
            blowup: BlowupCriterion::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(Error::config(format!(
                "diffusion a must be >= 0, got {}",
                self.a
            )));
        }
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return Err(Error::config(format!(
                "aggregation b must be >= 0, got {}",
                self.b
            )));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::config(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::config(format!(
                "CFL safety factor must lie in (0, 1], got {}",
                self.safety
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
        let w = &self.blowup;
        if w.window == 0 || !(w.window_fraction > 0.0) || !(w.growth > 1.0) {
            return Err(Error::config(
                "blow-up criterion needs window >= 1, window_fraction > 0 and growth > 1",
            ));
        }
        Ok(())
    }
}

/// Declares a blow-up when `max u` is above `a / (2b)` and has grown by more
/// than `growth` within the last `window` steps or within the last
/// `window_fraction * horizon` time units, when the solution stops being
/// finite, or when the admissible step collapses below
/// `min_dt_fraction * horizon`.
///
/// The time window matters because the CFL step shrinks as the profile
/// steepens, so a collapsing solution never gains a factor 10 within a
/// fixed number of adaptive steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupCriterion {
    pub window: usize,
    pub window_fraction: f64,
    pub growth: f64,
    pub min_dt_fraction: f64,
}

impl Default for BlowupCriterion {
    fn default() -> Self {
        Self {
            window: 100,
            window_fraction: 0.1,
            growth: 10.0,
            min_dt_fraction: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupReport {
    pub time: f64,
    pub step: usize,
    pub max_value: f64,
    /// `a / (2b)`.
    pub threshold: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Completed,
    BlowUp(BlowupReport),
}

/// Result of [`solve`]: snapshots reached so far and diagnostics.
#[derive(Debug, Clone)]
pub struct MacroRun {
    pub snapshots: Vec<GridDensity>,
    /// `(t, max_i u_i(t))` sampled along the run.
    pub sup_trace: Vec<(f64, f64)>,
    /// Largest `max_i u_i` over every step taken.
    pub running_sup: f64,
    pub steps: usize,
    pub initial_mass: f64,
    /// Largest `|mass(t) - mass(0)|` seen.
    pub max_mass_drift: f64,
    /// Largest one-step `|mass change|`.
    pub max_step_mass_drift: f64,
    pub final_state: GridDensity,
    pub outcome: Outcome,
}

impl MacroRun {
    pub fn blew_up(&self) -> bool {
        matches!(self.outcome, Outcome::BlowUp(_))
    }
}

#[inline]
fn ghosted(u: &[f64], j: isize) -> f64 {
    if j < 0 || j as usize >= u.len() {
        0.0
    } else {
        u[j as usize]
    }
}

#[inline]
fn central(u: &[f64], i: isize, dx: f64) -> f64 {
    (ghosted(u, i + 1) - ghosted(u, i - 1)) / (2.0 * dx)
}

#[inline]
fn face_derivative_raw(u: &[f64], face: isize, dx: f64) -> f64 {
    // face k is the right face of cell k - 1
    let i = face - 1;
    (central(u, i + 1, dx) + central(u, i, dx)) / 2.0
}

fn face_derivatives_into(u: &[f64], dx: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend((0..=u.len() as isize).map(|k| face_derivative_raw(u, k, dx)));
}

#[inline]
fn upwind_flux(deriv: f64, left: f64, right: f64, b: f64) -> f64 {
    if deriv >= 0.0 {
        2.0 * b * deriv * left
    } else {
        2.0 * b * deriv * right
    }
}

// Written as a nonnegative combination of old values, so the result is
// nonnegative in floating point too. The self-coefficient is clamped at zero
// because a step admitted within the relative slack of the CFL check can
// push it a few ulps below.
fn advect_into(u: &[f64], derivs: &[f64], b: f64, dt: f64, dx: f64, out: &mut Vec<f64>) {
    let n = u.len();
    let mu = 2.0 * b * dt / dx;
    out.clear();
    out.extend((0..n).map(|i| {
        let left_face = derivs[i];
        let right_face = derivs[i + 1];
        let stay = (1.0 - mu * (right_face.max(0.0) - left_face.min(0.0))).max(0.0);
        let from_left = if i > 0 {
            mu * left_face.max(0.0) * u[i - 1]
        } else {
            0.0
        };
        let from_right = if i + 1 < n {
            -mu * right_face.min(0.0) * u[i + 1]
        } else {
            0.0
        };
        stay * u[i] + from_left + from_right
    }));
}

fn diffuse_into(u: &[f64], a: f64, dt: f64, dx: f64, out: &mut Vec<f64>) {
    let n = u.len() as isize;
    let lambda = a * dt / (dx * dx);
    let stay = (1.0 - 2.0 * lambda).max(0.0);
    out.clear();
    out.extend(
        (0..n).map(|i| stay * u[i as usize] + lambda * (ghosted(u, i - 1) + ghosted(u, i + 1))),
    );
}

fn max_abs(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_heat_dt(a: f64, dt: f64, dx: f64) -> Result<()> {
    if a > 0.0 {
        let limit = dx * dx / (2.0 * a);
        if dt > limit * (1.0 + STEP_SLACK) {
            return Err(Error::StepSize {
                dt,
                limit,
                condition: "a dt / dx^2 <= 1/2",
            });
        }
    }
    Ok(())
}

fn advection_limit(derivs: &[f64], b: f64, dx: f64) -> f64 {
    let m = max_abs(derivs);
    if b > 0.0 && m > 0.0 {
        dx / (4.0 * b * m)
    } else {
        f64::INFINITY
    }
}

fn check_advection_dt(derivs: &[f64], b: f64, dt: f64, dx: f64) -> Result<()> {
    let limit = advection_limit(derivs, b, dx);
    if dt > limit * (1.0 + STEP_SLACK) {
        return Err(Error::StepSize {
            dt,
            limit,
            condition: "dt <= dx / (4 b max|u_x|)",
        });
    }
    Ok(())
}

fn heat_limit(a: f64, dx: f64) -> f64 {
    if a > 0.0 {
        dx * dx / (2.0 * a)
    } else {
        f64::INFINITY
    }
}

/// Explicit heat update `u_i + a dt (u_{i+1} - 2u_i + u_{i-1}) / dx^2`.
pub fn heat_step(u: &GridDensity, a: f64, dt: f64) -> Result<GridDensity> {
    let dx = u.grid.dx();
    check_heat_dt(a, dt, dx)?;
    let mut out = Vec::with_capacity(u.values.len());
    diffuse_into(&u.values, a, dt, dx, &mut out);
    Ok(GridDensity {
        grid: u.grid,
        values: out,
        time: u.time + dt,
    })
}

/// Average of the central differences of the two cells adjacent to `face`.
pub fn face_derivative(u: &GridDensity, face: usize) -> f64 {
    face_derivative_raw(&u.values, face as isize, u.grid.dx())
}

/// Upwind flux `2b d u_upwind` through `face`; the `d >= 0` branch takes the
/// left cell.
pub fn numerical_flux(u: &GridDensity, face: usize, b: f64) -> f64 {
    let k = face as isize;
    upwind_flux(
        face_derivative(u, face),
        ghosted(&u.values, k - 1),
        ghosted(&u.values, k),
        b,
    )
}

/// Conservative upwind update for `u_t + 2b (u_x u)_x = 0`.
pub fn advection_step(u: &GridDensity, b: f64, dt: f64) -> Result<GridDensity> {
    let dx = u.grid.dx();
    let mut derivs = Vec::with_capacity(u.values.len() + 1);
    face_derivatives_into(&u.values, dx, &mut derivs);
    check_advection_dt(&derivs, b, dt, dx)?;
    let mut out = Vec::with_capacity(u.values.len());
    advect_into(&u.values, &derivs, b, dt, dx, &mut out);
    Ok(GridDensity {
        grid: u.grid,
        values: out,
        time: u.time + dt,
    })
}

/// Positivity bound `min(dx^2 / 2a, dx / (4b max|d|))`; inactive branches are
/// `+inf`, so the result may be infinite.
pub fn cfl_limit(u: &GridDensity, a: f64, b: f64) -> f64 {
    let dx = u.grid.dx();
    let mut derivs = Vec::with_capacity(u.values.len() + 1);
    face_derivatives_into(&u.values, dx, &mut derivs);
    heat_limit(a, dx).min(advection_limit(&derivs, b, dx))
}

/// `safety * cfl_limit`. Errors when neither branch restricts the step.
pub fn cfl_dt(u: &GridDensity, a: f64, b: f64, safety: f64) -> Result<f64> {
    let limit = cfl_limit(u, a, b);
    if limit.is_infinite() {
        return Err(Error::config(
            "time step is unbounded: neither diffusion nor aggregation restricts it",
        ));
    }
    Ok(safety * limit)
}

/// Advection followed by diffusion over one step `dt`.
pub fn composite_step(u: &GridDensity, config: &MacroConfig, dt: f64) -> Result<GridDensity> {
    let advected = advection_step(u, config.b, dt)?;
    let mut out = heat_step(&advected, config.a, dt)?;
    out.time = u.time + dt;
    Ok(out)
}

/// Advances `u0` to `config.horizon`, recording snapshots at the output times.
pub fn solve(u0: &GridDensity, config: &MacroConfig) -> Result<MacroRun> {
    config.validate()?;
    if let Some(v) = u0.values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::config(format!(
            "initial density must be nonnegative, found {v}"
        )));
    }
    let grid = u0.grid;
    let dx = grid.dx();
    let (a, b) = (config.a, config.b);

    let mut outputs = config.output_times.clone();
    outputs.sort_by(f64::total_cmp);
    outputs.dedup();
    let mut next_output = 0;

    let mut u = u0.values.clone();
    let mut t = u0.time;
    let mut snapshots = Vec::with_capacity(outputs.len());
    while next_output < outputs.len() && outputs[next_output] <= t {
        snapshots.push(GridDensity {
            grid,
            values: u.clone(),
            time: outputs[next_output],
        });
        next_output += 1;
    }

    let initial_mass = u0.mass();
    let horizon = config.horizon;
    let sample_every = horizon / config.sup_samples.max(1) as f64;
    let mut next_sample = t;
    let mut sup_trace = Vec::new();
    let mut max_now = u0.max();
    let mut running_sup = max_now;
    let threshold = if b > 0.0 {
        a / (2.0 * b)
    } else {
        f64::INFINITY
    };
    let mut history: VecDeque<f64> = VecDeque::with_capacity(config.blowup.window + 1);
    history.push_back(max_now);
    let span = config.blowup.window_fraction * horizon;
    let mut timed: VecDeque<(f64, f64)> = VecDeque::with_capacity(102);
    timed.push_back((t, max_now));

    let mut derivs = Vec::with_capacity(u.len() + 1);
    let mut advected = Vec::with_capacity(u.len());
    let mut next = Vec::with_capacity(u.len());
    let mut steps = 0usize;
    let mut mass_prev = initial_mass;
    let mut max_mass_drift: f64 = 0.0;
    let mut max_step_mass_drift: f64 = 0.0;
    let mut warned = false;
    let mut outcome = Outcome::Completed;
    let tiny = STEP_SLACK * horizon;

    while t < horizon - tiny {
        if t >= next_sample {
            sup_trace.push((t, max_now));
            next_sample += sample_every;
        }

        face_derivatives_into(&u, dx, &mut derivs);
        let limit = heat_limit(a, dx).min(advection_limit(&derivs, b, dx));
        let target = outputs
            .get(next_output)
            .copied()
            .unwrap_or(horizon)
            .min(horizon);
        let mut dt = (config.safety * limit).min(target - t);
        let mut landing = false;
        if t + dt >= target - tiny {
            dt = target - t;
            landing = true;
        }
        if dt < config.blowup.min_dt_fraction * horizon && !landing {
            outcome = Outcome::BlowUp(BlowupReport {
                time: t,
                step: steps,
                max_value: max_now,
                threshold,
                reason: format!("admissible time step collapsed to {dt:e}"),
            });
            break;
        }

        advect_into(&u, &derivs, b, dt, dx, &mut advected);
        diffuse_into(&advected, a, dt, dx, &mut next);
        std::mem::swap(&mut u, &mut next);
        t = if landing { target } else { t + dt };
        steps += 1;

        max_now = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min_now = u.iter().copied().fold(f64::INFINITY, f64::min);
        if !max_now.is_finite() || !min_now.is_finite() {
            outcome = Outcome::BlowUp(BlowupReport {
                time: t,
                step: steps,
                max_value: max_now,
                threshold,
                reason: "solution is no longer finite".into(),
            });
            break;
        }
        if min_now < -1e-12 * max_now.max(1.0) {
            return Err(Error::domain(format!(
                "positivity violated at t={t}: min u = {min_now:e}"
            )));
        }
        running_sup = running_sup.max(max_now);

        let mass = dx * u.iter().sum::<f64>();
        max_step_mass_drift = max_step_mass_drift.max((mass - mass_prev).abs());
        max_mass_drift = max_mass_drift.max((mass - initial_mass).abs());
        mass_prev = mass;
        if !warned && max_mass_drift > config.mass_tolerance * initial_mass.max(f64::MIN_POSITIVE) {
            warn!("mass drift {max_mass_drift:e} exceeds tolerance at t={t}; widen the domain");
            warned = true;
        }

        if history.len() > config.blowup.window {
            history.pop_front();
        }
        let oldest = history.front().copied().unwrap_or(max_now);
        history.push_back(max_now);
        if t - timed.back().map_or(f64::NEG_INFINITY, |e| e.0) >= span / 100.0 {
            timed.push_back((t, max_now));
        }
        while timed.len() > 1 && timed[1].0 <= t - span {
            timed.pop_front();
        }
        let timed_oldest = timed.front().map_or(max_now, |e| e.1);
        let reason = if max_now <= threshold {
            None
        } else if max_now > config.blowup.growth * oldest {
            Some(format!(
                "max u grew from {oldest:e} to {max_now:e} within {} steps",
                config.blowup.window
            ))
        } else if max_now > config.blowup.growth * timed_oldest {
            Some(format!(
                "max u grew from {timed_oldest:e} to {max_now:e} within t = {span}"
            ))
        } else {
            None
        };
        if let Some(reason) = reason {
            outcome = Outcome::BlowUp(BlowupReport {
                time: t,
                step: steps,
                max_value: max_now,
                threshold,
                reason,
            });
            break;
        }

        while next_output < outputs.len() && outputs[next_output] <= t + tiny {
            snapshots.push(GridDensity {
                grid,
                values: u.clone(),
                time: outputs[next_output],
            });
            next_output += 1;
        }
    }
    sup_trace.push((t, max_now));

    Ok(MacroRun {
        snapshots,
        sup_trace,
        running_sup,
        steps,
        initial_mass,
        max_mass_drift,
        max_step_mass_drift,
        final_state: GridDensity {
            grid,
            values: u,
            time: t,
        },
        outcome,
    })
}
