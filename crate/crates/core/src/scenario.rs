//! Scenario files.
//!
//! Plain text, one `key = value` per line, `#` starts a comment. The initial
//! density is either `preset = initial1 | initial2` or a list of
//! `[component]` blocks with keys `alpha`, `beta`, `T`, `x0`. A `[derived]`
//! block is informational (written into manifests) and ignored on load.
//!
//! ```text
//! mode = macro
//! preset = initial1
//! eta = 1.0
//! b = 1.0
//! horizon = 7
//! dx = 0.0078125
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{diffusion_from_eta, padded_domain, uniform_times};
use crate::kernel::KernelSpec;
use crate::sampling::{BarenblattComponent, InitialDensity};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Particle,
    Macro,
    Compare,
    Eoc,
    Bound,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "particle" => Ok(Mode::Particle),
            "macro" => Ok(Mode::Macro),
            "compare" => Ok(Mode::Compare),
            "eoc" => Ok(Mode::Eoc),
            "bound" => Ok(Mode::Bound),
            other => Err(format!(
                "unknown mode `{other}` (expected particle, macro, compare, eoc or bound)"
            )),
        }
    }
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Particle => "particle",
            Mode::Macro => "macro",
            Mode::Compare => "compare",
            Mode::Eoc => "eoc",
            Mode::Bound => "bound",
        }
    }
}

/// A fully resolved scenario. `a` is not a field: it always follows from
/// `eta`, `b` and the initial density.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mode: Mode,
    pub initial: InitialDensity,
    pub eta: f64,
    pub b: f64,
    pub epsilon: f64,
    pub n_particles: usize,
    pub replicas: usize,
    pub dt: f64,
    pub dx: f64,
    /// Macro/histogram domain; defaults to the padded initial support.
    pub domain: Option<(f64, f64)>,
    pub safety: f64,
    pub horizon: f64,
    pub output_times: Option<Vec<f64>>,
    pub seed: u64,
    pub output: PathBuf,
    pub levels: Vec<u32>,
    pub reference_level: u32,
    pub particle_counts: Vec<usize>,
    pub threshold: f64,
    /// Number of intervals in the default uniform snapshot set.
    pub snapshots: usize,
    pub trajectory_replicas: usize,
    pub sup_samples: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            mode: Mode::Macro,
            initial: InitialDensity::initial1(),
            eta: 1.0,
            b: 1.0,
            epsilon: 1.5,
            n_particles: 555,
            replicas: 1000,
            dt: 0.01,
            dx: 0.125,
            domain: None,
            safety: 0.9,
            horizon: 7.0,
            output_times: None,
            seed: 0,
            output: PathBuf::from("out"),
            levels: (1..=6).collect(),
            reference_level: 7,
            particle_counts: vec![50, 100, 200, 400, 800],
            threshold: 0.3,
            snapshots: 8,
            trajectory_replicas: 10,
            sup_samples: 1000,
        }
    }
}

fn parse_value<T: FromStr>(path: &str, line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| Error::Parse {
        path: path.to_string(),
        line,
        message: format!("invalid value `{value}` for `{key}`: {e}"),
    })
}

fn parse_list<T: FromStr>(path: &str, line: usize, key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(path, line, key, s))
        .collect()
}

#[derive(Default)]
struct PartialComponent {
    line: usize,
    alpha: Option<f64>,
    beta: Option<f64>,
    t: Option<f64>,
    x0: Option<f64>,
}

enum Section {
    Main,
    Component,
    Derived,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses scenario text; `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut sc = Scenario::default();
        let mut preset: Option<(usize, String)> = None;
        let mut comps: Vec<PartialComponent> = Vec::new();
        let mut x_min = None;
        let mut x_max = None;
        let mut section = Section::Main;
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_string(),
            line,
            message,
        };

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if content.starts_with('[') {
                section = match content {
                    "[component]" => {
                        comps.push(PartialComponent {
                            line,
                            ..Default::default()
                        });
                        Section::Component
                    }
                    "[derived]" => Section::Derived,
                    other => return Err(err(line, format!("unknown section `{other}`"))),
                };
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(err(
                    line,
                    format!("expected `key = value`, found `{content}`"),
                ));
            };
            let (key, value) = (key.trim(), value.trim());
            match section {
                Section::Derived => {}
                Section::Component => {
                    let c = comps.last_mut().expect("component section has an entry");
                    let v: f64 = parse_value(origin, line, key, value)?;
                    match key {
                        "alpha" => c.alpha = Some(v),
                        "beta" => c.beta = Some(v),
                        "T" | "t" => c.t = Some(v),
                        "x0" => c.x0 = Some(v),
                        _ => return Err(err(line, format!("unknown component field `{key}`"))),
                    }
                }
                Section::Main => match key {
                    "mode" => sc.mode = value.parse().map_err(|m| err(line, m))?,
                    "preset" => preset = Some((line, value.to_string())),
                    "eta" => sc.eta = parse_value(origin, line, key, value)?,
                    "b" => sc.b = parse_value(origin, line, key, value)?,
                    "epsilon" => sc.epsilon = parse_value(origin, line, key, value)?,
                    "N" | "n_particles" => sc.n_particles = parse_value(origin, line, key, value)?,
                    "M" | "replicas" => sc.replicas = parse_value(origin, line, key, value)?,
                    "dt" => sc.dt = parse_value(origin, line, key, value)?,
                    "dx" => sc.dx = parse_value(origin, line, key, value)?,
                    "x_min" => x_min = Some(parse_value::<f64>(origin, line, key, value)?),
                    "x_max" => x_max = Some(parse_value::<f64>(origin, line, key, value)?),
                    "safety" => sc.safety = parse_value(origin, line, key, value)?,
                    "horizon" | "T" => sc.horizon = parse_value(origin, line, key, value)?,
                    "output_times" => sc.output_times = Some(parse_list(origin, line, key, value)?),
                    "seed" => sc.seed = parse_value(origin, line, key, value)?,
                    "output" => sc.output = PathBuf::from(value),
                    "levels" => sc.levels = parse_list(origin, line, key, value)?,
                    "reference_level" => {
                        sc.reference_level = parse_value(origin, line, key, value)?
                    }
                    "particle_counts" => sc.particle_counts = parse_list(origin, line, key, value)?,
                    "threshold" => sc.threshold = parse_value(origin, line, key, value)?,
                    "snapshots" => sc.snapshots = parse_value(origin, line, key, value)?,
                    "trajectory_replicas" => {
                        sc.trajectory_replicas = parse_value(origin, line, key, value)?
                    }
                    "sup_samples" => sc.sup_samples = parse_value(origin, line, key, value)?,
                    _ => return Err(err(line, format!("unknown key `{key}`"))),
                },
            }
        }

        match (preset, comps.is_empty()) {
            (Some((line, _)), false) => {
                return Err(err(
                    line,
                    "give either `preset` or [component] blocks, not both".into(),
                ))
            }
            (Some((line, name)), true) => {
                sc.initial = InitialDensity::preset(&name).ok_or_else(|| {
                    err(
                        line,
                        format!("unknown preset `{name}` (initial1, initial2)"),
                    )
                })?;
            }
            (None, false) => {
                let mut list = Vec::with_capacity(comps.len());
                for c in comps {
                    let need = |v: Option<f64>, name: &str| {
                        v.ok_or_else(|| err(c.line, format!("[component] is missing `{name}`")))
                    };
                    list.push(BarenblattComponent {
                        alpha: need(c.alpha, "alpha")?,
                        beta: need(c.beta, "beta")?,
                        t: need(c.t, "T")?,
                        x0: need(c.x0, "x0")?,
                    });
                }
                sc.initial = InitialDensity::new(list)?;
            }
            (None, true) => {}
        }
        match (x_min, x_max) {
            (Some(lo), Some(hi)) => sc.domain = Some((lo, hi)),
            (None, None) => {}
            _ => return Err(Error::config("x_min and x_max must be given together")),
        }
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return bad(format!("eta >= 0 violated: eta = {}", self.eta));
        }
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return bad(format!("b >= 0 violated: b = {}", self.b));
        }
        if !(self.horizon > 0.0) {
            return bad(format!("horizon > 0 violated: horizon = {}", self.horizon));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad(format!(
                "safety in (0, 1] violated: safety = {}",
                self.safety
            ));
        }
        if !(self.dx > 0.0) {
            return bad(format!("dx > 0 violated: dx = {}", self.dx));
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt > 0 violated: dt = {}", self.dt));
        }
        if self.n_particles == 0 || self.replicas == 0 {
            return bad("N >= 1 and M >= 1 required".into());
        }
        if self.snapshots == 0 {
            return bad("snapshots >= 1 required".into());
        }
        if !(self.threshold > 0.0) {
            return bad(format!(
                "threshold > 0 violated: threshold = {}",
                self.threshold
            ));
        }
        if let Some((lo, hi)) = self.domain {
            if !(hi > lo) {
                return bad(format!("x_min < x_max violated: [{lo}, {hi}]"));
            }
        }
        KernelSpec::one_d(self.b, self.epsilon)?;
        Ok(())
    }

    /// `a = 2 b ||u0||_inf eta`.
    pub fn diffusion(&self) -> f64 {
        diffusion_from_eta(&self.initial, self.b, self.eta)
    }

    pub fn kernel(&self) -> Result<KernelSpec> {
        KernelSpec::one_d(self.b, self.epsilon)
    }

    /// Output times: explicit list, or `snapshots + 1` uniform times.
    pub fn resolved_output_times(&self) -> Vec<f64> {
        self.output_times
            .clone()
            .unwrap_or_else(|| uniform_times(self.horizon, self.snapshots))
    }

    /// Domain aligned to `align` (the coarsest spacing in play).
    pub fn resolved_domain(&self, align: f64) -> (f64, f64) {
        self.domain
            .unwrap_or_else(|| padded_domain(&self.initial, self.diffusion(), self.horizon, align))
    }

    /// Scenario text with every value explicit; parsing it yields `self`
    /// with the domain and output times pinned.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode = {}", self.mode.as_str());
        let _ = writeln!(s, "eta = {:?}", self.eta);
        let _ = writeln!(s, "b = {:?}", self.b);
        let _ = writeln!(s, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(s, "N = {}", self.n_particles);
        let _ = writeln!(s, "M = {}", self.replicas);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "dx = {:?}", self.dx);
        if let Some((lo, hi)) = self.domain {
            let _ = writeln!(s, "x_min = {lo:?}");
            let _ = writeln!(s, "x_max = {hi:?}");
        }
        let _ = writeln!(s, "safety = {:?}", self.safety);
        let _ = writeln!(s, "horizon = {:?}", self.horizon);
        if let Some(times) = &self.output_times {
            let list: Vec<String> = times.iter().map(|t| format!("{t:?}")).collect();
            let _ = writeln!(s, "output_times = {}", list.join(", "));
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output = {}", self.output.display());
        let levels: Vec<String> = self.levels.iter().map(u32::to_string).collect();
        let _ = writeln!(s, "levels = {}", levels.join(", "));
        let _ = writeln!(s, "reference_level = {}", self.reference_level);
        let counts: Vec<String> = self.particle_counts.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "particle_counts = {}", counts.join(", "));
        let _ = writeln!(s, "threshold = {:?}", self.threshold);
        let _ = writeln!(s, "snapshots = {}", self.snapshots);
        let _ = writeln!(s, "trajectory_replicas = {}", self.trajectory_replicas);
        let _ = writeln!(s, "sup_samples = {}", self.sup_samples);
        for c in self.initial.components() {
            let _ = writeln!(s, "\n[component]");
            let _ = writeln!(s, "alpha = {:?}", c.alpha);
            let _ = writeln!(s, "beta = {:?}", c.beta);
            let _ = writeln!(s, "T = {:?}", c.t);
            let _ = writeln!(s, "x0 = {:?}", c.x0);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_preset_scenario() {
        let text = "mode = eoc\npreset = initial2  # second\neta = 1\nlevels = 1, 2, 3\nreference_level = 4\n";
        let sc = Scenario::parse(text, "s.cfg").unwrap();
        assert_eq!(sc.mode, Mode::Eoc);
        assert_eq!(sc.initial, InitialDensity::initial2());
        assert_eq!(sc.levels, vec![1, 2, 3]);
        assert!((sc.diffusion() - 2.0 * 0.085_920_6).abs() < 1e-6);
    }

    #[test]
    fn parses_components() {
        let text = "mode = macro\n[component]\nalpha = 0.5\nbeta = 1\nT = 2\nx0 = -5\n[component]\nalpha = 0.5\nbeta = 2\nT = 1\nx0 = 5\n";
        let sc = Scenario::parse(text, "s.cfg").unwrap();
        assert_eq!(sc.initial.components().len(), 2);
        assert_eq!(sc.initial.components()[1].beta, 2.0);
    }

    #[test]
    fn rejects_weights_not_summing_to_one() {
        let text = "[component]\nalpha = 0.5\nbeta = 1\nT = 2\nx0 = 0\n[component]\nalpha = 0.4\nbeta = 1\nT = 2\nx0 = 9\n";
        let e = Scenario::parse(text, "s.cfg").unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        assert!(e.to_string().contains("sum(alpha) = 1"));
    }

    #[test]
    fn reports_line_numbers() {
        let e = Scenario::parse("mode = macro\neta = abc\n", "s.cfg").unwrap_err();
        match e {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("eta"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Scenario::parse("bogus = 1", "s"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Scenario::parse("mode = fly", "s"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            Scenario::parse("[component]\nalpha = 1\n", "s"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(Scenario::parse(
            "preset = initial1\n[component]\nalpha=1\nbeta=1\nT=1\nx0=0\n",
            "s"
        )
        .is_err());
    }

    #[test]
    fn invariant_violations_name_the_invariant() {
        let e = Scenario::parse("safety = 1.5", "s").unwrap_err();
        assert!(e.to_string().contains("safety in (0, 1]"));
        let e = Scenario::parse("eta = -1", "s").unwrap_err();
        assert!(e.to_string().contains("eta >= 0"));
    }

    #[test]
    fn degenerate_coefficients_give_zero_diffusion() {
        let sc = Scenario::parse("eta = 0", "s").unwrap();
        assert_eq!(sc.diffusion(), 0.0);
        let sc = Scenario::parse("eta = 2\nb = 0", "s").unwrap();
        assert_eq!(sc.diffusion(), 0.0);
    }

    #[test]
    fn text_round_trip() {
        let mut sc = Scenario::parse(
            "mode = compare\npreset = initial2\neta = 1.5\nseed = 9",
            "s",
        )
        .unwrap();
        sc.domain = Some((-20.0, 20.0));
        sc.output_times = Some(vec![0.0, 0.1 + 0.2, 7.0]);
        let back = Scenario::parse(&(sc.to_text() + "\n[derived]\na = 1\n"), "m").unwrap();
        assert_eq!(back, sc);
    }
}
