//! Task files: environment, signal variables, formulas, machines, and
//! observation augmentation in one TOML document.
//!
//! ```toml
//! [env]
//! id = "cartpole"        # gridworld | cartpole | highway
//! horizon = 500
//! force = 10.0           # environment parameters, all optional
//!
//! [signals]
//! x = { lo = -2.4, hi = 2.4 }
//!
//! [formulas.mu_A]
//! text = "x > -0.7 and x < -0.5"
//! role = "event"         # event (usable in guards) | eval (scored per episode)
//! kind = "lower"         # lower: lo >= beta | upper: hi <= beta
//! beta = 0.0
//! mode = "sliding"       # sliding: evaluated at t - hz | origin: at step 0
//!
//! [machine.R1]
//! states = ["u0", "u1"]
//! transitions = [{ from = "u0", guard = "mu_A", to = "u1", reward = 2 }]
//!
//! [augment]
//! machines = ["R1"]      # one-hot state encodings, default all machines
//! robustness = ["mu_A"]  # clipped lower bounds of event formulas
//! clip = 10.0
//! ```
//!
//! Unknown keys anywhere are errors.

use std::path::Path;

use indexmap::IndexMap;
use serde::Deserialize;
use thiserror::Error;

use crate::env::{
    CartPole, CartPoleParams, Env, Environment, GridParams, GridworldUnlock, HighwayLite,
    HighwayParams,
};
use crate::monitor::{ensure_quantitative, AtomKind, EvalMode, MonitorError, MAX_ATOMS};
use crate::rm::{load_machine, MachineSpec, Overlap, RmError};
use crate::stl::{parse_formula, ParseError, DEFAULT_BOUND};
use crate::{Formula, PredicateAtom, RewardMachine, VarTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("{0}")]
    Syntax(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("env.id: unknown environment `{0}` (expected gridworld, cartpole or highway)")]
    UnknownEnv(String),
    #[error("env.{field}: not a parameter of the {env} environment")]
    NotApplicable { env: String, field: String },
    #[error("env.{field}: {message}")]
    BadParameter { field: String, message: String },
    #[error("signals.{0}: the environment produces no such variable")]
    UnknownSignal(String),
    #[error("signals.{name}: invalid bounds [{lo}, {hi}]")]
    BadBounds { name: String, lo: f64, hi: f64 },
    #[error("formulas.{name}: {source}")]
    Formula { name: String, source: ParseError },
    #[error("formulas.{name}: {source}")]
    Monitor { name: String, source: MonitorError },
    #[error("formulas.{name}.{field}: {message}")]
    FormulaField {
        name: String,
        field: String,
        message: String,
    },
    #[error("{0}")]
    TooManyAtoms(MonitorError),
    #[error("machine.{0}")]
    Machine(RmError),
    #[error("augment.machines: unknown machine `{0}`")]
    UnknownMachine(String),
    #[error("augment.robustness: `{0}` is not an event formula")]
    NotAnEvent(String),
    #[error("augment.clip: {0} must be positive and finite")]
    BadClip(f64),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    env: RawEnv,
    #[serde(default)]
    signals: IndexMap<String, RawSignal>,
    #[serde(default)]
    formulas: IndexMap<String, RawFormula>,
    #[serde(default)]
    machine: IndexMap<String, MachineSpec>,
    #[serde(default)]
    augment: RawAugment,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnv {
    id: String,
    horizon: Option<usize>,
    // gridworld
    size: Option<usize>,
    layout_seed: Option<u64>,
    random_start: Option<bool>,
    // cartpole
    gravity: Option<f64>,
    cart_mass: Option<f64>,
    pole_mass: Option<f64>,
    half_length: Option<f64>,
    force: Option<f64>,
    dt: Option<f64>,
    reset_spread: Option<f64>,
    max_steps: Option<usize>,
    // highway
    lanes: Option<usize>,
    vehicles: Option<usize>,
    duration: Option<usize>,
    initial_speed: Option<f64>,
    traffic_speed: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    lo: Option<f64>,
    hi: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFormula {
    text: String,
    #[serde(default)]
    role: Role,
    #[serde(default)]
    kind: Option<String>,
    #[serde(default)]
    beta: f64,
    #[serde(default)]
    mode: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAugment {
    machines: Option<Vec<String>>,
    #[serde(default)]
    robustness: Vec<String>,
    clip: Option<f64>,
}

/// Whether a formula drives machine guards or is scored after an episode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    #[default]
    Event,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvConfig {
    Grid(GridParams),
    CartPole(CartPoleParams),
    Highway(HighwayParams),
}

impl EnvConfig {
    pub fn id(&self) -> &'static str {
        match self {
            EnvConfig::Grid(_) => "gridworld",
            EnvConfig::CartPole(_) => "cartpole",
            EnvConfig::Highway(_) => "highway",
        }
    }

    pub fn build(&self) -> Env {
        match self {
            EnvConfig::Grid(p) => Env::Grid(GridworldUnlock::new(*p)),
            EnvConfig::CartPole(p) => Env::CartPole(CartPole::new(*p)),
            EnvConfig::Highway(p) => Env::Highway(HighwayLite::new(*p)),
        }
    }

    /// Step budget the environment enforces by itself.
    fn natural_horizon(&self) -> usize {
        match self {
            EnvConfig::Grid(p) => 8 * p.size * p.size,
            EnvConfig::CartPole(p) => p.max_steps + 1,
            EnvConfig::Highway(p) => p.duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormulaDef {
    pub name: String,
    pub text: String,
    pub formula: Formula,
    pub role: Role,
    /// Index into [`Task::atoms`] for event formulas.
    pub atom: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augment {
    /// Machine indices whose state is one-hot encoded.
    pub machines: Vec<usize>,
    /// Atom indices whose interval lower bound is appended.
    pub robustness: Vec<usize>,
    pub clip: f64,
}

/// A validated task file.
#[derive(Debug, Clone)]
pub struct Task {
    pub env: EnvConfig,
    pub horizon: usize,
    pub vars: VarTable,
    /// For each variable, its index in the environment's label vector.
    pub sources: Vec<usize>,
    pub formulas: Vec<FormulaDef>,
    pub atoms: Vec<PredicateAtom>,
    pub machines: Vec<RewardMachine>,
    pub augment: Augment,
    /// Observation component names of the environment.
    pub observation_names: Vec<String>,
    pub action_names: Vec<String>,
}

fn env_config(raw: &RawEnv) -> Result<EnvConfig, SpecError> {
    let present = |name: &'static str, set: bool| set.then_some(name);
    let grid_fields = [
        present("size", raw.size.is_some()),
        present("layout_seed", raw.layout_seed.is_some()),
        present("random_start", raw.random_start.is_some()),
    ];
    let cart_fields = [
        present("gravity", raw.gravity.is_some()),
        present("cart_mass", raw.cart_mass.is_some()),
        present("pole_mass", raw.pole_mass.is_some()),
        present("half_length", raw.half_length.is_some()),
        present("force", raw.force.is_some()),
        present("dt", raw.dt.is_some()),
        present("reset_spread", raw.reset_spread.is_some()),
        present("max_steps", raw.max_steps.is_some()),
    ];
    let highway_fields = [
        present("lanes", raw.lanes.is_some()),
        present("vehicles", raw.vehicles.is_some()),
        present("duration", raw.duration.is_some()),
        present("initial_speed", raw.initial_speed.is_some()),
        present("traffic_speed", raw.traffic_speed.is_some()),
    ];
    let reject = |env: &str, fields: &[Option<&'static str>]| match fields.iter().flatten().next() {
        Some(f) => Err(SpecError::NotApplicable {
            env: env.to_string(),
            field: f.to_string(),
        }),
        None => Ok(()),
    };
    let bad = |field: &str, message: &str| SpecError::BadParameter {
        field: field.to_string(),
        message: message.to_string(),
    };
    let positive = |field: &str, v: Option<f64>, default: f64| match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(bad(field, "must be positive and finite")),
        Some(x) => Ok(x),
        None => Ok(default),
    };
    match raw.id.as_str() {
        "gridworld" => {
            reject("gridworld", &cart_fields)?;
            reject("gridworld", &highway_fields)?;
            let d = GridParams::default();
            let size = raw.size.unwrap_or(d.size);
            if size < 5 {
                return Err(bad("size", "grid size must be at least 5"));
            }
            Ok(EnvConfig::Grid(GridParams {
                size,
                layout_seed: raw.layout_seed,
                random_start: raw.random_start.unwrap_or(d.random_start),
            }))
        }
        "cartpole" => {
            reject("cartpole", &grid_fields)?;
            reject("cartpole", &highway_fields)?;
            let d = CartPoleParams::default();
            let reset_spread = raw.reset_spread.unwrap_or(d.reset_spread);
            if !(reset_spread.is_finite() && reset_spread >= 0.0) {
                return Err(bad("reset_spread", "must be non-negative"));
            }
            Ok(EnvConfig::CartPole(CartPoleParams {
                gravity: positive("gravity", raw.gravity, d.gravity)?,
                cart_mass: positive("cart_mass", raw.cart_mass, d.cart_mass)?,
                pole_mass: positive("pole_mass", raw.pole_mass, d.pole_mass)?,
                half_length: positive("half_length", raw.half_length, d.half_length)?,
                force: positive("force", raw.force, d.force)?,
                dt: positive("dt", raw.dt, d.dt)?,
                reset_spread,
                max_steps: raw.max_steps.unwrap_or(d.max_steps),
                ..d
            }))
        }
        "highway" => {
            reject("highway", &grid_fields)?;
            reject("highway", &cart_fields)?;
            let d = HighwayParams::default();
            let lanes = raw.lanes.unwrap_or(d.lanes);
            if lanes == 0 {
                return Err(bad("lanes", "at least one lane is required"));
            }
            let traffic_speed = match raw.traffic_speed {
                Some([lo, hi]) if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi => {
                    (lo, hi)
                }
                Some(_) => return Err(bad("traffic_speed", "expected [lo, hi] with 0 <= lo < hi")),
                None => d.traffic_speed,
            };
            let initial_speed = raw.initial_speed.unwrap_or(d.initial_speed);
            if !(d.speed_min..=d.speed_max).contains(&initial_speed) {
                return Err(bad("initial_speed", "outside the speed range [15, 40]"));
            }
            Ok(EnvConfig::Highway(HighwayParams {
                lanes,
                vehicles: raw.vehicles.unwrap_or(d.vehicles),
                duration: raw.duration.unwrap_or(d.duration),
                initial_speed,
                traffic_speed,
                ..d
            }))
        }
        other => Err(SpecError::UnknownEnv(other.to_string())),
    }
}

fn formula_field(name: &str, field: &str, message: String) -> SpecError {
    SpecError::FormulaField {
        name: name.to_string(),
        field: field.to_string(),
        message,
    }
}

impl Task {
    pub fn from_toml_str(text: &str) -> Result<Self, SpecError> {
        let raw: RawTask = toml::from_str(text).map_err(|e| SpecError::Syntax(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SpecError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SpecError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawTask) -> Result<Self, SpecError> {
        let env = env_config(&raw.env)?;
        let horizon = raw.env.horizon.unwrap_or_else(|| env.natural_horizon());
        if horizon == 0 {
            return Err(SpecError::BadParameter {
                field: "horizon".into(),
                message: "must be at least 1".into(),
            });
        }
        let probe = env.build();
        let labels = probe.label_names();

        let mut vars = VarTable::new();
        let mut sources = Vec::new();
        for (name, decl) in &raw.signals {
            let source = labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| SpecError::UnknownSignal(name.clone()))?;
            let lo = decl.lo.unwrap_or(-DEFAULT_BOUND);
            let hi = decl.hi.unwrap_or(DEFAULT_BOUND);
            vars.declare(name, lo, hi)
                .ok_or_else(|| SpecError::BadBounds {
                    name: name.clone(),
                    lo,
                    hi,
                })?;
            sources.push(source);
        }

        let mut formulas = Vec::new();
        let mut atoms = Vec::new();
        for (name, f) in &raw.formulas {
            let formula = parse_formula(&f.text, &vars).map_err(|source| SpecError::Formula {
                name: name.clone(),
                source,
            })?;
            ensure_quantitative(&formula).map_err(|source| SpecError::Monitor {
                name: name.clone(),
                source,
            })?;
            let kind = match f.kind.as_deref() {
                None | Some("lower") => AtomKind::LowerAtLeast,
                Some("upper") => AtomKind::UpperAtMost,
                Some(other) => {
                    return Err(formula_field(
                        name,
                        "kind",
                        format!("`{other}` is not lower or upper"),
                    ))
                }
            };
            let mode = match f.mode.as_deref() {
                None | Some("sliding") => EvalMode::Sliding,
                Some("origin") => EvalMode::AtOrigin,
                Some(other) => {
                    return Err(formula_field(
                        name,
                        "mode",
                        format!("`{other}` is not sliding or origin"),
                    ))
                }
            };
            if !f.beta.is_finite() {
                return Err(formula_field(name, "beta", "must be finite".into()));
            }
            if f.role == Role::Eval && (f.kind.is_some() || f.mode.is_some()) {
                return Err(formula_field(
                    name,
                    "role",
                    "kind and mode apply to event formulas only".into(),
                ));
            }
            let atom = (f.role == Role::Event).then(|| {
                atoms.push(
                    PredicateAtom::new(name.clone(), formula.clone())
                        .with_kind(kind, f.beta)
                        .with_mode(mode),
                );
                atoms.len() - 1
            });
            formulas.push(FormulaDef {
                name: name.clone(),
                text: f.text.clone(),
                formula,
                role: f.role,
                atom,
            });
        }
        if atoms.len() > MAX_ATOMS {
            return Err(SpecError::TooManyAtoms(MonitorError::TooManyAtoms(
                atoms.len(),
            )));
        }

        let atom_names: Vec<String> = atoms.iter().map(|a| a.name.clone()).collect();
        let machines = raw
            .machine
            .iter()
            .map(|(name, spec)| load_machine(name, spec, &atom_names).map_err(SpecError::Machine))
            .collect::<Result<Vec<RewardMachine>, _>>()?;

        let augment_machines = match &raw.augment.machines {
            None => (0..machines.len()).collect(),
            Some(names) => names
                .iter()
                .map(|n| {
                    machines
                        .iter()
                        .position(|m| &m.name == n)
                        .ok_or_else(|| SpecError::UnknownMachine(n.clone()))
                })
                .collect::<Result<_, _>>()?,
        };
        let robustness = raw
            .augment
            .robustness
            .iter()
            .map(|n| {
                atom_names
                    .iter()
                    .position(|a| a == n)
                    .ok_or_else(|| SpecError::NotAnEvent(n.clone()))
            })
            .collect::<Result<_, _>>()?;
        let clip = raw.augment.clip.unwrap_or(10.0);
        if !(clip.is_finite() && clip > 0.0) {
            return Err(SpecError::BadClip(clip));
        }

        Ok(Self {
            env,
            horizon,
            vars,
            sources,
            formulas,
            atoms,
            machines,
            augment: Augment {
                machines: augment_machines,
                robustness,
                clip,
            },
            observation_names: probe.observation_names(),
            action_names: probe.action_names().iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn formula(&self, name: &str) -> Option<&FormulaDef> {
        self.formulas.iter().find(|f| f.name == name)
    }

    pub fn machine(&self, name: &str) -> Option<&RewardMachine> {
        self.machines.iter().find(|m| m.name == name)
    }

    pub fn atom_names(&self) -> Vec<&str> {
        self.atoms.iter().map(|a| a.name.as_str()).collect()
    }

    /// Same-state transition pairs that can fire together, across all
    /// machines.
    pub fn overlaps(&self) -> Vec<Overlap> {
        self.machines.iter().flat_map(|m| m.overlaps()).collect()
    }

    /// Picks the declared variables out of an environment label vector.
    pub fn sample_from_labels(&self, labels: &[f64]) -> Vec<f64> {
        self.sources.iter().map(|&i| labels[i]).collect()
    }

    /// Length of the augmented observation.
    pub fn observation_len(&self) -> usize {
        self.observation_names.len()
            + self
                .augment
                .machines
                .iter()
                .map(|&m| self.machines[m].num_states())
                .sum::<usize>()
            + self.augment.robustness.len()
    }

    /// Names of the augmented observation components.
    pub fn augmented_names(&self) -> Vec<String> {
        let mut names = self.observation_names.clone();
        for &m in &self.augment.machines {
            let machine = &self.machines[m];
            names.extend(
                machine
                    .states
                    .iter()
                    .map(|s| format!("{}={}", machine.name, s)),
            );
        }
        for &a in &self.augment.robustness {
            names.push(format!("rho.{}", self.atoms[a].name));
        }
        names
    }
}
