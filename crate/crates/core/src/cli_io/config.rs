//! Run configuration: JSON file, command-line overrides, validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ensemble::{EnsembleMode, EnsembleSpec};
use crate::error::{Error, Result};
use crate::model::{Boundary, Couplings, LadderSpec};
use crate::propagate::{EvolutionConfig, Method};
use crate::protocols::{LadderModel, LeSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub m: usize,
    pub boundary: Boundary,
    pub j_s: f64,
    pub j_e: f64,
    pub j_se: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub spacing: Spacing,
    /// Smallest total time (log spacing only).
    pub t_min: f64,
    /// Largest total time.
    pub t_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub alphas: Vec<f64>,
    pub j_ses: Vec<f64>,
}

/// Fully resolved configuration, as echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub ensemble: EnsembleSpec,
    pub evolution: EvolutionConfig,
    pub schedule: ScheduleConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig {
                m: 5,
                boundary: Boundary::Ring,
                j_s: 1.0,
                j_e: 1.0,
                j_se: 0.1,
                alpha: 0.0,
            },
            ensemble: EnsembleSpec::exact(),
            evolution: EvolutionConfig::default(),
            schedule: ScheduleConfig {
                spacing: Spacing::Log,
                t_min: 0.05,
                t_max: 500.0,
                points: 120,
            },
            sweep: SweepConfig {
                alphas: vec![0.0, -0.5, 1.0],
                j_ses: vec![0.001, 0.01, 0.025, 0.05, 0.1, 0.25, 0.5],
            },
        }
    }
}

impl RunConfig {
    pub fn ladder(&self) -> Result<LadderModel> {
        let spec = LadderSpec::new(self.model.m, self.model.boundary)?;
        let c = &self.model;
        Ok(LadderModel::new(spec, Couplings::new(c.j_s, c.j_e, c.j_se, c.alpha)))
    }

    pub fn le_schedule(&self) -> Result<LeSchedule> {
        let s = &self.schedule;
        match s.spacing {
            Spacing::Log => LeSchedule::log_spaced(s.t_min, s.t_max, s.points),
            Spacing::Linear => LeSchedule::linear(s.t_max / s.points as f64, s.t_max),
        }
    }

    /// Every semantic problem, each naming its field.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        let m = &self.model;
        if m.m < 2 {
            p.push(format!("model.m: must be at least 2 (got {})", m.m));
        }
        for (name, v) in [("model.j_s", m.j_s), ("model.j_e", m.j_e), ("model.j_se", m.j_se), ("model.alpha", m.alpha)] {
            if !v.is_finite() {
                p.push(format!("{name}: must be finite (got {v})"));
            }
        }
        if self.ensemble.n_realizations == 0 {
            p.push("ensemble.n_realizations: must be at least 1".into());
        }
        if let Err(Error::Config(list)) = self.evolution.validate() {
            p.extend(list.into_iter().map(|e| format!("evolution: {e}")));
        }
        let s = &self.schedule;
        if !(s.t_max > 0.0 && s.t_max.is_finite()) {
            p.push(format!("schedule.t_max: must be positive (got {})", s.t_max));
        }
        if s.spacing == Spacing::Log && !(s.t_min > 0.0 && s.t_min < s.t_max) {
            p.push(format!("schedule.t_min: must lie in (0, t_max) (got {})", s.t_min));
        }
        if s.points < 2 {
            p.push(format!("schedule.points: must be at least 2 (got {})", s.points));
        }
        if self.sweep.alphas.iter().chain(&self.sweep.j_ses).any(|v| !v.is_finite()) {
            p.push("sweep: grid values must be finite".into());
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }
}

/// Values given on the command line; `None` keeps the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub m: Option<usize>,
    pub boundary: Option<Boundary>,
    pub j_s: Option<f64>,
    pub j_e: Option<f64>,
    pub j_se: Option<f64>,
    pub alpha: Option<f64>,
    pub t_max: Option<f64>,
    pub t_min: Option<f64>,
    pub method: Option<Method>,
    pub dt: Option<f64>,
    pub stride: Option<usize>,
    pub ensemble: Option<EnsembleMode>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub spacing: Option<Spacing>,
    pub alphas: Option<Vec<f64>>,
    pub j_ses: Option<Vec<f64>>,
}

/// Collects type errors while walking a JSON document.
struct Reader<'a> {
    problems: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn section<'v>(&mut self, root: &'v Map<String, Value>, name: &str, allowed: &[&str]) -> Option<&'v Map<String, Value>> {
        let v = root.get(name)?;
        let Some(obj) = v.as_object() else {
            self.problems.push(format!("{name}: expected an object"));
            return None;
        };
        for key in obj.keys() {
            if !allowed.contains(&key.as_str()) {
                self.problems.push(format!("{name}.{key}: unknown field"));
            }
        }
        Some(obj)
    }

    fn get<T: serde::de::DeserializeOwned>(&mut self, obj: Option<&Map<String, Value>>, section: &str, key: &str) -> Option<T> {
        let v = obj?.get(key)?;
        match serde_json::from_value(v.clone()) {
            Ok(x) => Some(x),
            Err(e) => {
                self.problems.push(format!("{section}.{key}: {e} (got {v})"));
                None
            }
        }
    }
}

/// Resolved configuration together with notes on overridden file values.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub conflicts: Vec<String>,
}

fn apply<T: PartialEq + std::fmt::Debug + Clone>(
    slot: &mut T,
    file: Option<T>,
    flag: Option<T>,
    name: &str,
    conflicts: &mut Vec<String>,
) {
    if let Some(f) = file.clone() {
        *slot = f;
    }
    if let Some(g) = flag {
        if let Some(f) = file {
            if f != g {
                conflicts.push(format!("{name}: flag value {g:?} overrides file value {f:?}"));
            }
        }
        *slot = g;
    }
}

/// Resolve defaults ← JSON text ← flags. All problems are reported together.
pub fn resolve_config(json: Option<&str>, flags: &Overrides) -> Result<Loaded> {
    let mut problems = Vec::new();
    let root: Map<String, Value> = match json.map(str::trim) {
        None | Some("") => Map::new(),
        Some(text) => match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(map)) => map,
            Ok(_) => return Err(Error::Config(vec!["config: top level must be an object".into()])),
            Err(e) => return Err(Error::Config(vec![format!("config: invalid JSON: {e}")])),
        },
    };
    let sections = ["model", "ensemble", "evolution", "schedule", "sweep"];
    for key in root.keys() {
        if !sections.contains(&key.as_str()) {
            problems.push(format!("{key}: unknown section"));
        }
    }
    let mut r = Reader { problems: &mut problems };
    let model = r.section(&root, "model", &["m", "boundary", "j_s", "j_e", "j_se", "alpha"]);
    let ens = r.section(&root, "ensemble", &["mode", "n_realizations", "seed"]);
    let evo = r.section(&root, "evolution", &["method", "dt", "t_max", "sample_stride"]);
    let sch = r.section(&root, "schedule", &["spacing", "t_min", "t_max", "points"]);
    let swp = r.section(&root, "sweep", &["alphas", "j_ses"]);

    // m is read as a signed integer so a negative value is reported by name
    let file_m: Option<i64> = r.get(model, "model", "m");
    let file_m = match file_m {
        Some(m) if m < 0 => {
            r.problems.push(format!("model.m: must be a positive integer (got {m})"));
            None
        }
        other => other.map(|m| m as usize),
    };
    let file = FileValues {
        m: file_m,
        boundary: r.get(model, "model", "boundary"),
        j_s: r.get(model, "model", "j_s"),
        j_e: r.get(model, "model", "j_e"),
        j_se: r.get(model, "model", "j_se"),
        alpha: r.get(model, "model", "alpha"),
        mode: r.get(ens, "ensemble", "mode"),
        realizations: r.get(ens, "ensemble", "n_realizations"),
        seed: r.get(ens, "ensemble", "seed"),
        method: r.get(evo, "evolution", "method"),
        dt: r.get(evo, "evolution", "dt"),
        evo_t_max: r.get(evo, "evolution", "t_max"),
        stride: r.get(evo, "evolution", "sample_stride"),
        spacing: r.get(sch, "schedule", "spacing"),
        t_min: r.get(sch, "schedule", "t_min"),
        sch_t_max: r.get(sch, "schedule", "t_max"),
        points: r.get(sch, "schedule", "points"),
        alphas: r.get(swp, "sweep", "alphas"),
        j_ses: r.get(swp, "sweep", "j_ses"),
    };

    let mut c = RunConfig::default();
    let mut conflicts = Vec::new();
    let k = &mut conflicts;
    apply(&mut c.model.m, file.m, flags.m, "model.m", k);
    apply(&mut c.model.boundary, file.boundary, flags.boundary, "model.boundary", k);
    apply(&mut c.model.j_s, file.j_s, flags.j_s, "model.j_s", k);
    apply(&mut c.model.j_e, file.j_e, flags.j_e, "model.j_e", k);
    apply(&mut c.model.j_se, file.j_se, flags.j_se, "model.j_se", k);
    apply(&mut c.model.alpha, file.alpha, flags.alpha, "model.alpha", k);
    apply(&mut c.ensemble.mode, file.mode, flags.ensemble, "ensemble.mode", k);
    apply(&mut c.ensemble.n_realizations, file.realizations, flags.realizations, "ensemble.n_realizations", k);
    apply(&mut c.ensemble.seed, file.seed, flags.seed, "ensemble.seed", k);
    apply(&mut c.evolution.method, file.method, flags.method, "evolution.method", k);
    apply(&mut c.evolution.dt, file.dt, flags.dt, "evolution.dt", k);
    apply(&mut c.evolution.t_max, file.evo_t_max, flags.t_max, "evolution.t_max", k);
    apply(&mut c.evolution.sample_stride, file.stride, flags.stride, "evolution.sample_stride", k);
    apply(&mut c.schedule.spacing, file.spacing, flags.spacing, "schedule.spacing", k);
    apply(&mut c.schedule.t_min, file.t_min, flags.t_min, "schedule.t_min", k);
    apply(&mut c.schedule.t_max, file.sch_t_max, flags.t_max, "schedule.t_max", k);
    apply(&mut c.schedule.points, file.points, flags.points, "schedule.points", k);
    apply(&mut c.sweep.alphas, file.alphas, flags.alphas.clone(), "sweep.alphas", k);
    apply(&mut c.sweep.j_ses, file.j_ses, flags.j_ses.clone(), "sweep.j_ses", k);

    problems.extend(c.problems());
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    Ok(Loaded { config: c, conflicts })
}

struct FileValues {
    m: Option<usize>,
    boundary: Option<Boundary>,
    j_s: Option<f64>,
    j_e: Option<f64>,
    j_se: Option<f64>,
    alpha: Option<f64>,
    mode: Option<EnsembleMode>,
    realizations: Option<usize>,
    seed: Option<u64>,
    method: Option<Method>,
    dt: Option<f64>,
    evo_t_max: Option<f64>,
    stride: Option<usize>,
    spacing: Option<Spacing>,
    t_min: Option<f64>,
    sch_t_max: Option<f64>,
    points: Option<usize>,
    alphas: Option<Vec<f64>>,
    j_ses: Option<Vec<f64>>,
}

/// Read and resolve a JSON config file (an empty file means all defaults).
pub fn load_config(path: &Path, flags: &Overrides) -> Result<Loaded> {
    let text = std::fs::read_to_string(path)?;
    resolve_config(Some(&text), flags)
}
