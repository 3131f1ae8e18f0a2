//! Run configuration: line-oriented `key = value` text with `#` comments.
//!
//! | key | value | default |
//! |-----|-------|---------|
//! | `flow` | `mcf`, `imcf`, `power_mcf`, `power_imcf`, `log_mcf` | required |
//! | `alpha` | exponent of the power flows | required for power flows |
//! | `h_tilde` | shift of `log_mcf` | required for `log_mcf` |
//! | `geometry` | `sphere`, `ellipsoid`, `dumbbell`, `genus5` | required |
//! | `radius` | sphere radius | `1` |
//! | `axes` | ellipsoid semi-axes `a, b, c` | `1, 1, 1` |
//! | `mesh_file` | OFF file projected onto the geometry instead of the built-in mesh | none |
//! | `refinement` | built-in mesh refinement level | `2` |
//! | `degree` | element degree `k` | `2` |
//! | `bdf_order` | `q` in 1..=5 | `2` |
//! | `tau` | step size | required |
//! | `final_time` | `T` | required |
//! | `velocity_mode` | `ritz` or `pointwise` | `ritz` |
//! | `h_min`, `h_max` | curvature clamp interval | `1e-3`, `1e3` |
//! | `cg_tol`, `cg_max_iter` | linear solver controls | `1e-10`, `10000` |
//! | `output_dir` | directory for VTK and CSV output | `output` |
//! | `snapshot_every` | VTK cadence in steps | a tenth of the run |
//! | `startup` | `bootstrap` or `exact` | `bootstrap` |
//! | `step_ratio` | `C` in the advisory bound `tau <= C h` | `1` |

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::diagnostics::maximal_time;
use crate::error::{Error, Result};
use crate::flow::{FlowKind, FlowLaw, DEFAULT_H_HI, DEFAULT_H_LO};
use crate::mesh::Shape;
use crate::stepper::{CgSettings, StartupMode, VelocityMode, DEFAULT_CG_MAX_ITER, DEFAULT_CG_TOL, MAX_ORDER};

const KEYS: &[&str] = &[
    "flow",
    "alpha",
    "h_tilde",
    "geometry",
    "radius",
    "axes",
    "mesh_file",
    "refinement",
    "degree",
    "bdf_order",
    "tau",
    "final_time",
    "velocity_mode",
    "h_min",
    "h_max",
    "cg_tol",
    "cg_max_iter",
    "output_dir",
    "snapshot_every",
    "startup",
    "step_ratio",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub flow: FlowKind,
    pub h_min: f64,
    pub h_max: f64,
    pub shape: Shape,
    pub mesh_file: Option<PathBuf>,
    pub refinement: usize,
    pub degree: usize,
    pub bdf_order: usize,
    pub tau: f64,
    pub final_time: f64,
    pub velocity_mode: VelocityMode,
    pub cg: CgSettings,
    pub output_dir: PathBuf,
    pub snapshot_every: Option<usize>,
    pub startup: StartupMode,
    pub step_ratio: f64,
}

impl RunConfig {
    /// Defaults for everything except the required keys.
    pub fn new(flow: FlowKind, shape: Shape, tau: f64, final_time: f64) -> Self {
        Self {
            flow,
            h_min: DEFAULT_H_LO,
            h_max: DEFAULT_H_HI,
            shape,
            mesh_file: None,
            refinement: 2,
            degree: 2,
            bdf_order: 2,
            tau,
            final_time,
            velocity_mode: VelocityMode::Ritz,
            cg: CgSettings {
                rel_tol: DEFAULT_CG_TOL,
                max_iter: DEFAULT_CG_MAX_ITER,
            },
            output_dir: PathBuf::from("output"),
            snapshot_every: None,
            startup: StartupMode::Bootstrap,
            step_ratio: 1.0,
        }
    }

    pub fn flow_law(&self) -> Result<FlowLaw> {
        FlowLaw::new(self.flow, self.h_min, self.h_max)
    }

    /// Number of steps `round(T / tau)`.
    pub fn num_steps(&self) -> usize {
        (self.final_time / self.tau).round() as usize
    }

    pub fn snapshot_cadence(&self) -> usize {
        self.snapshot_every
            .unwrap_or_else(|| self.num_steps().div_ceil(10))
            .max(1)
    }

    /// Consistency checks that do not need a mesh.
    pub fn validate(&self) -> Result<()> {
        self.flow_law()?;
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau = {} must be positive", self.tau)));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::Config(format!("final_time = {} must be positive", self.final_time)));
        }
        if self.num_steps() < self.bdf_order {
            return Err(Error::Config(format!(
                "final_time / tau = {} steps is fewer than the BDF order {}",
                self.num_steps(),
                self.bdf_order
            )));
        }
        if !(1..=MAX_ORDER).contains(&self.bdf_order) {
            return Err(Error::Config(format!("bdf_order = {} outside 1..={MAX_ORDER}", self.bdf_order)));
        }
        if self.degree == 0 || self.degree > 4 {
            return Err(Error::Config(format!("degree = {} outside 1..=4", self.degree)));
        }
        if !(self.step_ratio > 0.0) {
            return Err(Error::Config(format!("step_ratio = {} must be positive", self.step_ratio)));
        }
        match self.shape {
            Shape::Sphere { radius } if !(radius > 0.0) => {
                return Err(Error::Config(format!("radius = {radius} must be positive")));
            }
            Shape::Ellipsoid { a, b, c } if !(a > 0.0 && b > 0.0 && c > 0.0) => {
                return Err(Error::Config(format!("axes ({a}, {b}, {c}) must be positive")));
            }
            _ => {}
        }
        if let Shape::Sphere { radius } = self.shape {
            if !matches!(self.flow, FlowKind::LogMcf { .. }) {
                if let Some(t_max) = maximal_time(self.flow, radius, 2.0)? {
                    if self.final_time >= t_max {
                        return Err(Error::Config(format!(
                            "final_time = {} is not below the maximal existence time {t_max} of the sphere",
                            self.final_time
                        )));
                    }
                }
            }
        }
        if self.startup == StartupMode::Exact && !self.has_exact_solution() {
            return Err(Error::Config(
                "startup = exact needs a built-in sphere and a flow with a closed-form solution".into(),
            ));
        }
        Ok(())
    }

    /// Sphere geometry (built-in mesh) under a flow with a closed-form radius.
    pub fn has_exact_solution(&self) -> bool {
        matches!(self.shape, Shape::Sphere { .. })
            && self.mesh_file.is_none()
            && !matches!(self.flow, FlowKind::LogMcf { .. })
    }

    /// Warning text when `tau > C h`.
    pub fn step_size_warning(&self, h: f64) -> Option<String> {
        (self.tau > self.step_ratio * h).then(|| {
            format!(
                "tau = {} exceeds step_ratio * h = {} * {h} (mesh width h = {h})",
                self.tau, self.step_ratio
            )
        })
    }
}

fn parse_value<T: FromStr>(entries: &HashMap<String, (usize, String)>, key: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match entries.get(key) {
        None => Ok(None),
        Some((line, v)) => v.parse().map(Some).map_err(|e| Error::Parse {
            line: *line,
            message: format!("`{key}`: cannot parse `{v}`: {e}"),
        }),
    }
}

fn required<T: FromStr>(entries: &HashMap<String, (usize, String)>, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    parse_value(entries, key)?.ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
        Error::Config(format!("cannot read {}: {e}", path.as_ref().display()))
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut entries: HashMap<String, (usize, String)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("unknown key `{k}`"),
            });
        }
        if entries.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("duplicate key `{k}`"),
            });
        }
    }

    let flow_name: String = required(&entries, "flow")?;
    let flow = match flow_name.as_str() {
        "mcf" => FlowKind::Mcf,
        "imcf" => FlowKind::Imcf,
        "power_mcf" => FlowKind::PowerMcf {
            alpha: required(&entries, "alpha")?,
        },
        "power_imcf" => FlowKind::PowerImcf {
            alpha: required(&entries, "alpha")?,
        },
        "log_mcf" => FlowKind::LogMcf {
            h_tilde: required(&entries, "h_tilde")?,
        },
        other => return Err(Error::Config(format!("unknown flow `{other}`"))),
    };
    let geometry: String = required(&entries, "geometry")?;
    let shape = match geometry.as_str() {
        "sphere" => Shape::Sphere {
            radius: parse_value(&entries, "radius")?.unwrap_or(1.0),
        },
        "ellipsoid" => {
            let axes = match entries.get("axes") {
                None => vec![1.0; 3],
                Some((line, v)) => v
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .ok()
                    .filter(|a| a.len() == 3)
                    .ok_or_else(|| Error::Parse {
                        line: *line,
                        message: format!("`axes`: expected three comma-separated numbers, found `{v}`"),
                    })?,
            };
            Shape::Ellipsoid {
                a: axes[0],
                b: axes[1],
                c: axes[2],
            }
        }
        "dumbbell" => Shape::Dumbbell,
        "genus5" => Shape::Genus5,
        other => return Err(Error::Config(format!("unknown geometry `{other}`"))),
    };

    let mut cfg = RunConfig::new(flow, shape, required(&entries, "tau")?, required(&entries, "final_time")?);
    cfg.mesh_file = parse_value::<String>(&entries, "mesh_file")?.map(PathBuf::from);
    if let Some(v) = parse_value(&entries, "refinement")? {
        cfg.refinement = v;
    }
    if let Some(v) = parse_value(&entries, "degree")? {
        cfg.degree = v;
    }
    if let Some(v) = parse_value(&entries, "bdf_order")? {
        cfg.bdf_order = v;
    }
    if let Some(v) = parse_value::<String>(&entries, "velocity_mode")? {
        cfg.velocity_mode = match v.as_str() {
            "ritz" => VelocityMode::Ritz,
            "pointwise" => VelocityMode::Pointwise,
            other => return Err(Error::Config(format!("unknown velocity_mode `{other}`"))),
        };
    }
    if let Some(v) = parse_value(&entries, "h_min")? {
        cfg.h_min = v;
    }
    if let Some(v) = parse_value(&entries, "h_max")? {
        cfg.h_max = v;
    }
    if let Some(v) = parse_value(&entries, "cg_tol")? {
        cfg.cg.rel_tol = v;
    }
    if let Some(v) = parse_value(&entries, "cg_max_iter")? {
        cfg.cg.max_iter = v;
    }
    if let Some(v) = parse_value::<String>(&entries, "output_dir")? {
        cfg.output_dir = PathBuf::from(v);
    }
    cfg.snapshot_every = parse_value(&entries, "snapshot_every")?;
    if let Some(v) = parse_value::<String>(&entries, "startup")? {
        cfg.startup = match v.as_str() {
            "bootstrap" => StartupMode::Bootstrap,
            "exact" => StartupMode::Exact,
            other => return Err(Error::Config(format!("unknown startup `{other}`"))),
        };
    }
    if let Some(v) = parse_value(&entries, "step_ratio")? {
        cfg.step_ratio = v;
    }
    cfg.validate()?;
    Ok(cfg)
}
