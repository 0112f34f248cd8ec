use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::costs::{CostSpec, Task};
use crate::env::{as_f64, as_vec, EnvSpec};
use crate::error::{Error, Result};
use crate::planner::PlannerConfig;

/// How many control steps of the previous plan run while the next one is computed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayMode {
    /// A fixed planning delay in seconds.
    Fixed(f64),
    /// The wall time of the previous plan, rounded down to whole control steps (at least one).
    Measured,
}

/// Base-velocity impulse applied to the plant at `time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub time: f64,
    /// Added to the leading velocity coordinates (`vx, vz, pitch rate` for legged envs).
    pub impulse: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub task: Task,
    pub cost: CostSpec,
    pub planner: PlannerConfig,
    /// Closed-loop duration (s).
    pub duration: f64,
    pub seeds: Vec<u64>,
    pub delay: DelayMode,
    pub disturbances: Vec<Disturbance>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Built-in env with a task preset and default planner settings.
    pub fn new(env_name: &str, task: Task) -> Result<Self> {
        let env = EnvSpec::builtin(env_name)?;
        let cost = CostSpec::preset(task, &env);
        let planner = PlannerConfig::for_env(&env);
        let delay = DelayMode::Fixed(planner.control_dt);
        Ok(Self {
            env,
            task,
            cost,
            planner,
            duration: 5.0,
            seeds: vec![0],
            delay,
            disturbances: Vec::new(),
            out: None,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Parses a TOML config. Keys may be written dotted (`planner.N = 30`) or as tables.
    ///
    /// `env.name` and `task` select the base env and cost preset; every other
    /// key overrides a field on top of those defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        let mut flat = Vec::new();
        flatten("", &toml::Value::Table(table), &mut flat);

        let lookup = |key: &str| flat.iter().find(|(k, _)| k == key).map(|(_, v)| v);
        let env_name = match lookup("env.name") {
            Some(v) => v.as_str().ok_or_else(|| Error::Config("env.name must be a string".into()))?,
            None => "planar_quadruped",
        };
        let task: Task = match lookup("task") {
            Some(v) => v.as_str().ok_or_else(|| Error::Config("task must be a string".into()))?.parse()?,
            None => Task::Walking,
        };
        let mut env = EnvSpec::builtin(env_name)?;
        for (key, value) in flat.iter().filter_map(|(k, v)| k.strip_prefix("env.").map(|k| (k, v))) {
            env.set(key, value)?;
        }
        env.validate()?;

        let mut config = Self::new(env_name, task)?;
        config.cost = CostSpec::preset(task, &env);
        config.planner = PlannerConfig::for_env(&env);
        config.delay = DelayMode::Fixed(config.planner.control_dt);
        config.env = env;
        let mut delay_seconds = None;
        let mut measured = false;
        for (key, value) in &flat {
            if key == "task" || key.starts_with("env.") {
                continue;
            }
            if let Some(k) = key.strip_prefix("cost.") {
                config.cost.set(k, value)?;
            } else if let Some(k) = key.strip_prefix("planner.") {
                set_planner(&mut config.planner, k, value, config.env.control_dim())?;
            } else if let Some(k) = key.strip_prefix("run.") {
                match k {
                    "duration" => config.duration = as_f64(key, value)?,
                    "seeds" => config.seeds = as_seeds(value)?,
                    "spline" => config.planner.spline = as_str(key, value)?.parse()?,
                    "executor" => config.planner.executor = as_str(key, value)?.parse()?,
                    "delay" => delay_seconds = Some(as_f64(key, value)?),
                    "delay_mode" => {
                        measured = match as_str(key, value)? {
                            "fixed" => false,
                            "measured" => true,
                            other => return Err(Error::Config(format!("unknown delay mode '{other}'"))),
                        }
                    }
                    "out" => config.out = Some(PathBuf::from(as_str(key, value)?)),
                    "disturbances" => config.disturbances = as_disturbances(value)?,
                    other => return Err(Error::Config(format!("unknown key 'run.{other}'"))),
                }
            } else {
                return Err(Error::Config(format!("unknown config key '{key}'")));
            }
        }
        config.delay = if measured {
            DelayMode::Measured
        } else {
            DelayMode::Fixed(delay_seconds.unwrap_or(config.planner.control_dt))
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::Config(format!("run duration must be positive, got {}", self.duration)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if let DelayMode::Fixed(d) = self.delay {
            let steps = crate::planner::delay_steps(d, self.planner.control_dt)?;
            if steps >= self.planner.horizon_steps {
                return Err(Error::Config(format!(
                    "planning delay of {steps} steps must be shorter than the horizon"
                )));
            }
        }
        for d in &self.disturbances {
            if d.impulse.len() > self.env.control_dim() + self.env.base_dof() || !d.time.is_finite() {
                return Err(Error::Config(format!("invalid disturbance {d:?}")));
            }
        }
        self.env.validate()?;
        self.planner.validate(&self.env)?;
        self.cost.validate(&self.env)
    }

    /// Number of control steps in a run.
    pub fn total_steps(&self) -> usize {
        (self.duration / self.planner.control_dt + 1e-9).floor() as usize
    }
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut Vec<(String, toml::Value)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                // `run.disturbances` is a list of tables and stays intact.
                if key == "run.disturbances" {
                    out.push((key, v.clone()));
                } else {
                    flatten(&key, v, out);
                }
            }
        }
        other => out.push((prefix.to_string(), other.clone())),
    }
}

fn as_str<'a>(key: &str, value: &'a toml::Value) -> Result<&'a str> {
    value
        .as_str()
        .ok_or_else(|| Error::Config(format!("config key {key} must be a string")))
}

fn as_usize(key: &str, value: &toml::Value) -> Result<usize> {
    value
        .as_integer()
        .and_then(|i| usize::try_from(i).ok())
        .ok_or_else(|| Error::Config(format!("config key {key} must be a non-negative integer")))
}

fn as_seeds(value: &toml::Value) -> Result<Vec<u64>> {
    let parse = |v: &toml::Value| {
        v.as_integer()
            .and_then(|i| u64::try_from(i).ok())
            .ok_or_else(|| Error::Config("run.seeds must hold non-negative integers".into()))
    };
    match value {
        toml::Value::Array(items) => items.iter().map(parse).collect(),
        other => {
            // A single integer n means seeds 0..n.
            let n = parse(other)?;
            Ok((0..n).collect())
        }
    }
}

fn as_disturbances(value: &toml::Value) -> Result<Vec<Disturbance>> {
    let items = value
        .as_array()
        .ok_or_else(|| Error::Config("run.disturbances must be an array".into()))?;
    items
        .iter()
        .map(|item| {
            let time = item
                .get("time")
                .ok_or_else(|| Error::Config("disturbance needs a time".into()))
                .and_then(|v| as_f64("run.disturbances.time", v))?;
            let impulse = match item.get("impulse") {
                Some(toml::Value::Array(xs)) => xs
                    .iter()
                    .map(|x| as_f64("run.disturbances.impulse", x))
                    .collect::<Result<Vec<_>>>()?,
                _ => return Err(Error::Config("disturbance needs an impulse array".into())),
            };
            Ok(Disturbance { time, impulse })
        })
        .collect()
}

fn set_planner(p: &mut PlannerConfig, key: &str, value: &toml::Value, dof: usize) -> Result<()> {
    let full = format!("planner.{key}");
    match key {
        "H" => p.horizon_steps = as_usize(&full, value)?,
        "dt" => p.control_dt = as_f64(&full, value)?,
        "K" => p.node_count = as_usize(&full, value)?,
        "I" => p.iterations = as_usize(&full, value)?,
        "N" => p.samples = as_usize(&full, value)?,
        "lambda" => p.temperature = as_f64(&full, value)?,
        "beta1" => p.beta1 = as_f64(&full, value)?,
        "beta2" => p.beta2 = as_f64(&full, value)?,
        "scale_q" => p.scale_q = as_vec(&full, value, dof)?,
        "scale_v" => p.scale_v = as_vec(&full, value, dof)?,
        "kp" => p.gains.kp = as_vec(&full, value, dof)?,
        "kd" => p.gains.kd = as_vec(&full, value, dof)?,
        "torque_limits" => p.gains.torque_limits = as_vec(&full, value, dof)?,
        "workers" => p.workers = as_usize(&full, value)?,
        "spline" => p.spline = as_str(&full, value)?.parse()?,
        "executor" => p.executor = as_str(&full, value)?.parse()?,
        other => return Err(Error::Config(format!("unknown key 'planner.{other}'"))),
    }
    Ok(())
}
