//! Experiment configuration: a flat `key = value` text format with one
//! `[section]` per subcommand, plus the canonical float formatting used by
//! every CSV emitter.
//!
//! The file is optional everywhere — each section has complete defaults and
//! command-line flags override file values. Parsing is strict: unknown
//! sections or keys are errors, so a typo cannot silently fall back to a
//! default.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::{Error, Result};

/// Canonical decimal rendering for CSV output: 17 significant digits, which
/// round-trips every f64 exactly and keeps files byte-stable across runs.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// How the time step is specified; exactly one variant is active and the
/// other scalings are derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStepSpec {
    /// Explicit step size.
    Tau(f64),
    /// Critical scaling tau = mu * h.
    Mu(f64),
    /// Power law h = scale_c * tau^gamma.
    Scaling { gamma: f64, scale_c: f64 },
}

impl TimeStepSpec {
    pub fn resolve(&self, h: f64, steps: usize) -> Result<crate::heat_kernel::SchemeParams> {
        match *self {
            TimeStepSpec::Tau(tau) => crate::heat_kernel::SchemeParams::from_tau(h, tau, steps),
            TimeStepSpec::Mu(mu) => crate::heat_kernel::SchemeParams::from_mu(h, mu, steps),
            TimeStepSpec::Scaling { gamma, scale_c } => {
                crate::heat_kernel::SchemeParams::from_scaling(gamma, scale_c, h, steps)
            }
        }
    }
}

/// Initial-shape choices for `simulate`. Pure data; geometry construction
/// lives in `shapes`.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeSpec {
    Disk { radius: f64, center: (f64, f64) },
    Dumbbell { bulb_radius: f64, bulb_offset: f64, neck_halfwidth: f64 },
    HalfPlane,
    Parabola { kappa: f64 },
    /// Tilted parabolic finger with boundary slope p/q.
    Finger { kappa: f64, p: u64, q: u64 },
}

impl ShapeSpec {
    fn kind(&self) -> &'static str {
        match self {
            ShapeSpec::Disk { .. } => "disk",
            ShapeSpec::Dumbbell { .. } => "dumbbell",
            ShapeSpec::HalfPlane => "halfplane",
            ShapeSpec::Parabola { .. } => "parabola",
            ShapeSpec::Finger { .. } => "finger",
        }
    }
}

/// Cell-membership rule used when rasterizing the initial shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterMode {
    /// Cell is set when the shape comes within h of the cell center.
    DistanceH,
    /// Cell is set exactly when its center lies in the shape.
    CenterInside,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub shape: ShapeSpec,
    pub h: f64,
    pub time: TimeStepSpec,
    pub steps: usize,
    pub stride: usize,
    pub raster: RasterMode,
    /// Physical half-width of the computational window around the origin;
    /// 0 = choose automatically from the shape support and kernel radius.
    pub half_width: f64,
    pub output_dir: PathBuf,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            shape: ShapeSpec::Disk {
                radius: 1.0,
                center: (0.0, 0.0),
            },
            h: 1.0 / 256.0,
            time: TimeStepSpec::Scaling {
                gamma: 1.5,
                scale_c: 1.0,
            },
            steps: 400,
            stride: 5,
            raster: RasterMode::DistanceH,
            half_width: 0.0,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityConfig {
    pub mu: f64,
    pub kappa: f64,
}

impl Default for VelocityConfig {
    fn default() -> Self {
        VelocityConfig { mu: 1.0, kappa: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinningConfig {
    pub tol: f64,
}

impl Default for PinningConfig {
    fn default() -> Self {
        PinningConfig { tol: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSweepConfig {
    pub mu_list: Vec<f64>,
    pub kappa: f64,
    pub degree_min: u32,
    pub degree_max: u32,
    pub output_dir: PathBuf,
}

impl Default for AngleSweepConfig {
    fn default() -> Self {
        AngleSweepConfig {
            mu_list: vec![0.5, 0.625, 0.75, 0.875, 1.0],
            kappa: 1.0,
            degree_min: 0,
            degree_max: 45,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub suite: String,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            suite: "all".to_string(),
            seed: 42,
        }
    }
}

/// All per-command sections. A file may set any subset; the rest keep
/// defaults.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub simulate: SimulateConfig,
    pub velocity: VelocityConfig,
    pub pinning: PinningConfig,
    pub angle_sweep: AngleSweepConfig,
    pub verify: VerifyConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| bad_line(lineno, raw, "unterminated section header"))?;
                section = name.trim().to_string();
                match section.as_str() {
                    "simulate" | "velocity" | "pinning" | "angle_sweep" | "verify" => {}
                    other => {
                        return Err(Error::Config(format!(
                            "line {}: unknown section [{}]",
                            lineno + 1,
                            other
                        )))
                    }
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad_line(lineno, raw, "expected key = value"))?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, e)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        match section {
            "simulate" => self.simulate.apply(key, value),
            "velocity" => match key {
                "mu" => set_f64(&mut self.velocity.mu, value),
                "kappa" => set_f64(&mut self.velocity.kappa, value),
                _ => Err(format!("unknown key '{key}' in [velocity]")),
            },
            "pinning" => match key {
                "tol" => set_f64(&mut self.pinning.tol, value),
                _ => Err(format!("unknown key '{key}' in [pinning]")),
            },
            "angle_sweep" => match key {
                "mu_list" => {
                    let parsed: std::result::Result<Vec<f64>, _> = value
                        .split(',')
                        .map(|s| s.trim().parse::<f64>())
                        .collect();
                    self.angle_sweep.mu_list =
                        parsed.map_err(|e| format!("bad mu_list '{value}': {e}"))?;
                    Ok(())
                }
                "kappa" => set_f64(&mut self.angle_sweep.kappa, value),
                "degree_min" => set_parse(&mut self.angle_sweep.degree_min, value),
                "degree_max" => set_parse(&mut self.angle_sweep.degree_max, value),
                "output_dir" => {
                    self.angle_sweep.output_dir = PathBuf::from(value);
                    Ok(())
                }
                _ => Err(format!("unknown key '{key}' in [angle_sweep]")),
            },
            "verify" => match key {
                "suite" => {
                    self.verify.suite = value.to_string();
                    Ok(())
                }
                "seed" => set_parse(&mut self.verify.seed, value),
                _ => Err(format!("unknown key '{key}' in [verify]")),
            },
            "" => Err(format!("key '{key}' appears before any [section]")),
            other => Err(format!("unknown section [{other}]")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.simulate;
        if !(s.h > 0.0) {
            return Err(Error::Config(format!("simulate.h must be positive, got {}", s.h)));
        }
        if s.steps == 0 {
            return Err(Error::Config("simulate.steps must be >= 1".into()));
        }
        if s.stride == 0 {
            return Err(Error::Config("simulate.stride must be >= 1".into()));
        }
        match s.time {
            TimeStepSpec::Tau(t) if !(t > 0.0) => {
                return Err(Error::Config(format!("simulate.tau must be positive, got {t}")))
            }
            TimeStepSpec::Mu(m) if !(m > 0.0) => {
                return Err(Error::Config(format!("simulate.mu must be positive, got {m}")))
            }
            TimeStepSpec::Scaling { gamma, scale_c } if !(gamma > 0.0) || !(scale_c > 0.0) => {
                return Err(Error::Config(format!(
                    "simulate scaling requires positive gamma and scale_c, got gamma={gamma}, scale_c={scale_c}"
                )))
            }
            _ => {}
        }
        match &s.shape {
            ShapeSpec::Disk { radius, .. } if !(*radius > 0.0) => {
                return Err(Error::Config(format!("disk radius must be positive, got {radius}")))
            }
            ShapeSpec::Dumbbell {
                bulb_radius,
                bulb_offset,
                neck_halfwidth,
            } if !(*bulb_radius > 0.0) || !(*bulb_offset > 0.0) || !(*neck_halfwidth > 0.0) => {
                return Err(Error::Config(
                    "dumbbell dimensions must all be positive".into(),
                ))
            }
            ShapeSpec::Parabola { kappa } if !(*kappa > 0.0) => {
                return Err(Error::Config(format!("parabola kappa must be positive, got {kappa}")))
            }
            ShapeSpec::Finger { kappa, p, q } => {
                if !(*kappa > 0.0) {
                    return Err(Error::Config(format!("finger kappa must be positive, got {kappa}")));
                }
                if *p == 0 || *q == 0 || gcd(*p, *q) != 1 || p > q {
                    return Err(Error::Config(format!(
                        "finger slope requires coprime 1 <= p <= q, got p={p}, q={q}"
                    )));
                }
            }
            _ => {}
        }
        if !(self.velocity.mu > 0.0) {
            return Err(Error::Config(format!(
                "velocity.mu must be positive, got {}",
                self.velocity.mu
            )));
        }
        if self.velocity.kappa < 0.0 {
            return Err(Error::Config(format!(
                "velocity.kappa must be non-negative, got {}",
                self.velocity.kappa
            )));
        }
        if !(self.pinning.tol > 0.0 && self.pinning.tol < 0.1) {
            return Err(Error::Config(format!(
                "pinning.tol must lie in (0, 0.1), got {}",
                self.pinning.tol
            )));
        }
        if self.angle_sweep.mu_list.is_empty()
            || self.angle_sweep.mu_list.iter().any(|&m| !(m > 0.0))
        {
            return Err(Error::Config("angle_sweep.mu_list must be positive values".into()));
        }
        if !(self.angle_sweep.kappa > 0.0) {
            return Err(Error::Config(format!(
                "angle_sweep.kappa must be positive, got {}",
                self.angle_sweep.kappa
            )));
        }
        if self.angle_sweep.degree_min > self.angle_sweep.degree_max
            || self.angle_sweep.degree_max > 45
        {
            return Err(Error::Config(format!(
                "angle_sweep degrees must satisfy 0 <= min <= max <= 45, got {}..{}",
                self.angle_sweep.degree_min, self.angle_sweep.degree_max
            )));
        }
        match self.verify.suite.as_str() {
            "kernel" | "evolution" | "velocity" | "anisotropy" | "all" => {}
            other => {
                return Err(Error::Config(format!(
                    "verify.suite must be one of kernel|evolution|velocity|anisotropy|all, got '{other}'"
                )))
            }
        }
        Ok(())
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let s = &self.simulate;
        out.push_str("[simulate]\n");
        let _ = writeln!(out, "shape = {}", s.shape.kind());
        match &s.shape {
            ShapeSpec::Disk { radius, center } => {
                let _ = writeln!(out, "radius = {radius}");
                let _ = writeln!(out, "center_x = {}", center.0);
                let _ = writeln!(out, "center_y = {}", center.1);
            }
            ShapeSpec::Dumbbell {
                bulb_radius,
                bulb_offset,
                neck_halfwidth,
            } => {
                let _ = writeln!(out, "bulb_radius = {bulb_radius}");
                let _ = writeln!(out, "bulb_offset = {bulb_offset}");
                let _ = writeln!(out, "neck_halfwidth = {neck_halfwidth}");
            }
            ShapeSpec::HalfPlane => {}
            ShapeSpec::Parabola { kappa } => {
                let _ = writeln!(out, "kappa = {kappa}");
            }
            ShapeSpec::Finger { kappa, p, q } => {
                let _ = writeln!(out, "kappa = {kappa}");
                let _ = writeln!(out, "angle_p = {p}");
                let _ = writeln!(out, "angle_q = {q}");
            }
        }
        let _ = writeln!(out, "h = {}", s.h);
        match s.time {
            TimeStepSpec::Tau(t) => {
                let _ = writeln!(out, "time_mode = tau");
                let _ = writeln!(out, "tau = {t}");
            }
            TimeStepSpec::Mu(m) => {
                let _ = writeln!(out, "time_mode = mu");
                let _ = writeln!(out, "mu = {m}");
            }
            TimeStepSpec::Scaling { gamma, scale_c } => {
                let _ = writeln!(out, "time_mode = scaling");
                let _ = writeln!(out, "gamma = {gamma}");
                let _ = writeln!(out, "scale_c = {scale_c}");
            }
        }
        let _ = writeln!(out, "steps = {}", s.steps);
        let _ = writeln!(out, "stride = {}", s.stride);
        let _ = writeln!(
            out,
            "raster = {}",
            match s.raster {
                RasterMode::DistanceH => "dist",
                RasterMode::CenterInside => "center",
            }
        );
        let _ = writeln!(out, "half_width = {}", s.half_width);
        let _ = writeln!(out, "output_dir = {}", s.output_dir.display());
        out.push_str("\n[velocity]\n");
        let _ = writeln!(out, "mu = {}", self.velocity.mu);
        let _ = writeln!(out, "kappa = {}", self.velocity.kappa);
        out.push_str("\n[pinning]\n");
        let _ = writeln!(out, "tol = {}", self.pinning.tol);
        out.push_str("\n[angle_sweep]\n");
        let list = self
            .angle_sweep
            .mu_list
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(out, "mu_list = {list}");
        let _ = writeln!(out, "kappa = {}", self.angle_sweep.kappa);
        let _ = writeln!(out, "degree_min = {}", self.angle_sweep.degree_min);
        let _ = writeln!(out, "degree_max = {}", self.angle_sweep.degree_max);
        let _ = writeln!(out, "output_dir = {}", self.angle_sweep.output_dir.display());
        out.push_str("\n[verify]\n");
        let _ = writeln!(out, "suite = {}", self.verify.suite);
        let _ = writeln!(out, "seed = {}", self.verify.seed);
        out
    }
}

impl SimulateConfig {
    /// Shared key/value setter: the file parser and the command-line flag
    /// merger both go through here, so flags and file keys cannot drift.
    pub(crate) fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "shape" => {
                self.shape = match value {
                    "disk" => ShapeSpec::Disk {
                        radius: 1.0,
                        center: (0.0, 0.0),
                    },
                    "dumbbell" => ShapeSpec::Dumbbell {
                        bulb_radius: 0.6,
                        bulb_offset: 1.0,
                        neck_halfwidth: 0.08,
                    },
                    "halfplane" => ShapeSpec::HalfPlane,
                    "parabola" => ShapeSpec::Parabola { kappa: 1.0 },
                    "finger" => ShapeSpec::Finger {
                        kappa: 1.0,
                        p: 1,
                        q: 1,
                    },
                    other => return Err(format!("unknown shape '{other}'")),
                };
                Ok(())
            }
            "radius" => match &mut self.shape {
                ShapeSpec::Disk { radius, .. } => set_f64(radius, value),
                _ => Err("radius applies only to shape = disk".into()),
            },
            "center_x" => match &mut self.shape {
                ShapeSpec::Disk { center, .. } => set_f64(&mut center.0, value),
                _ => Err("center_x applies only to shape = disk".into()),
            },
            "center_y" => match &mut self.shape {
                ShapeSpec::Disk { center, .. } => set_f64(&mut center.1, value),
                _ => Err("center_y applies only to shape = disk".into()),
            },
            "bulb_radius" => match &mut self.shape {
                ShapeSpec::Dumbbell { bulb_radius, .. } => set_f64(bulb_radius, value),
                _ => Err("bulb_radius applies only to shape = dumbbell".into()),
            },
            "bulb_offset" => match &mut self.shape {
                ShapeSpec::Dumbbell { bulb_offset, .. } => set_f64(bulb_offset, value),
                _ => Err("bulb_offset applies only to shape = dumbbell".into()),
            },
            "neck_halfwidth" => match &mut self.shape {
                ShapeSpec::Dumbbell { neck_halfwidth, .. } => set_f64(neck_halfwidth, value),
                _ => Err("neck_halfwidth applies only to shape = dumbbell".into()),
            },
            "kappa" => match &mut self.shape {
                ShapeSpec::Parabola { kappa } | ShapeSpec::Finger { kappa, .. } => {
                    set_f64(kappa, value)
                }
                _ => Err("kappa applies only to parabola or finger shapes".into()),
            },
            "angle_p" => match &mut self.shape {
                ShapeSpec::Finger { p, .. } => set_parse(p, value),
                _ => Err("angle_p applies only to shape = finger".into()),
            },
            "angle_q" => match &mut self.shape {
                ShapeSpec::Finger { q, .. } => set_parse(q, value),
                _ => Err("angle_q applies only to shape = finger".into()),
            },
            "h" => set_f64(&mut self.h, value),
            "time_mode" => {
                self.time = match value {
                    "tau" => TimeStepSpec::Tau(match self.time {
                        TimeStepSpec::Tau(t) => t,
                        _ => 0.01,
                    }),
                    "mu" => TimeStepSpec::Mu(match self.time {
                        TimeStepSpec::Mu(m) => m,
                        _ => 1.0,
                    }),
                    "scaling" => match self.time {
                        TimeStepSpec::Scaling { .. } => self.time,
                        _ => TimeStepSpec::Scaling {
                            gamma: 1.5,
                            scale_c: 1.0,
                        },
                    },
                    other => return Err(format!("unknown time_mode '{other}'")),
                };
                Ok(())
            }
            "tau" => {
                let mut t = 0.0;
                set_f64(&mut t, value)?;
                self.time = TimeStepSpec::Tau(t);
                Ok(())
            }
            "mu" => {
                let mut m = 0.0;
                set_f64(&mut m, value)?;
                self.time = TimeStepSpec::Mu(m);
                Ok(())
            }
            "gamma" => {
                let mut g = 0.0;
                set_f64(&mut g, value)?;
                self.time = match self.time {
                    TimeStepSpec::Scaling { scale_c, .. } => TimeStepSpec::Scaling {
                        gamma: g,
                        scale_c,
                    },
                    _ => TimeStepSpec::Scaling {
                        gamma: g,
                        scale_c: 1.0,
                    },
                };
                Ok(())
            }
            "scale_c" => {
                let mut c = 0.0;
                set_f64(&mut c, value)?;
                self.time = match self.time {
                    TimeStepSpec::Scaling { gamma, .. } => TimeStepSpec::Scaling {
                        gamma,
                        scale_c: c,
                    },
                    _ => TimeStepSpec::Scaling {
                        gamma: 1.5,
                        scale_c: c,
                    },
                };
                Ok(())
            }
            "steps" => set_parse(&mut self.steps, value),
            "stride" => set_parse(&mut self.stride, value),
            "raster" => {
                self.raster = match value {
                    "dist" => RasterMode::DistanceH,
                    "center" => RasterMode::CenterInside,
                    other => return Err(format!("unknown raster mode '{other}'")),
                };
                Ok(())
            }
            "half_width" => set_f64(&mut self.half_width, value),
            "output_dir" => {
                self.output_dir = PathBuf::from(value);
                Ok(())
            }
            _ => Err(format!("unknown key '{key}' in [simulate]")),
        }
    }
}

fn bad_line(lineno: usize, raw: &str, what: &str) -> Error {
    Error::Config(format!("line {}: {what}: '{raw}'", lineno + 1))
}

fn set_f64(slot: &mut f64, value: &str) -> std::result::Result<(), String> {
    *slot = value
        .parse::<f64>()
        .map_err(|e| format!("bad float '{value}': {e}"))?;
    Ok(())
}

fn set_parse<T: std::str::FromStr>(slot: &mut T, value: &str) -> std::result::Result<(), String>
where
    T::Err: std::fmt::Display,
{
    *slot = value
        .parse::<T>()
        .map_err(|e| format!("bad value '{value}': {e}"))?;
    Ok(())
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
