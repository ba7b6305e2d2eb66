//! Scenario configuration: INI-style text with `[section]` headers,
//! `key = value` lines and `#` comments.
//!
//! Required keys are `grid.nx`, `time.dt` and `time.t_end`; everything else
//! has a default. Errors carry the 1-based line of the offending entry, or
//! the last line of the file for a missing key.

use super::mms::MmsFamily;
use super::study::BoundaryClosure;
use crate::error::{Error, Result};
use crate::evolve::MonolithicVariant;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt::Write as _;
use std::path::PathBuf;

/// Steady shift: a fixed value or the coercivity estimate at rest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shift {
    Auto,
    Value(f64),
}

impl Serialize for Shift {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shift::Auto => s.serialize_str("auto"),
            Shift::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Shift {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Num(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Shift::Value(v)),
            Raw::Text(t) if t == "auto" => Ok(Shift::Auto),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a number or \"auto\", got {t:?}"
            ))),
        }
    }
}

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($var:ident => $id:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
        pub enum $name { $(#[serde(rename = $id)] $var),+ }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$var),+];

            pub fn id(self) -> &'static str {
                match self { $($name::$var => $id),+ }
            }

            fn parse(s: &str) -> Option<Self> {
                match s { $($id => Some($name::$var),)+ _ => None }
            }
        }
    };
}

keyword_enum!(BoundaryGenerator { Zero => "zero", Smooth => "smooth", Mms => "mms" });
keyword_enum!(InitialGenerator { Zero => "zero", Lift => "lift", Random => "random", Mms => "mms" });
keyword_enum!(ForcingGenerator { None => "none", Mms => "mms" });
keyword_enum!(SolverKind {
    Split => "split",
    Monolithic => "monolithic",
    Linear => "linear",
    SemigroupDuhamel => "semigroup-duhamel",
});
keyword_enum!(
    /// Invariant suites a run can be asked to verify.
    CheckKind {
        Finite => "finite",
        Divergence => "divergence",
        Energy => "energy",
        Pressure => "pressure",
        Compatibility => "compatibility",
        Splitting => "splitting",
    }
);
keyword_enum!(StudyKind {
    Steady => "steady",
    MonolithicSpace => "monolithic-space",
    MonolithicTime => "monolithic-time",
});

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsConfig {
    pub nu: f64,
    pub mu: f64,
    pub beta: [f64; 2],
    pub lambda0: Shift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfig {
    pub generator: BoundaryGenerator,
    /// Modes per direction of the smooth generator.
    pub modes: usize,
    pub amplitude: f64,
    /// Angular frequency of the `1 + sin(w t) / 2` modulation (0 = frozen).
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialConfig {
    pub generator: InitialGenerator,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub advection: bool,
    pub variant: MonolithicVariant,
}

/// Effective tolerances, recorded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub divergence: f64,
    pub pressure: f64,
    pub compatibility: f64,
    pub splitting: f64,
    /// Allowed relative energy increase per step.
    pub energy: f64,
    pub duality: f64,
    pub duality_unsteady: f64,
    pub semigroup_law: f64,
    pub half_power: f64,
    pub commutation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            divergence: 1e-9,
            pressure: 1e-8,
            compatibility: 1e-9,
            splitting: 1e-8,
            energy: 1e-13,
            duality: 1e-8,
            duality_unsteady: 1e-7,
            semigroup_law: 1e-9,
            half_power: 1e-8,
            commutation: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub closure: BoundaryClosure,
    /// Grid sizes for the spatial studies, step counts over `[0, t_end]`
    /// for the temporal one.
    pub levels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityConfig {
    pub trials: usize,
    pub unsteady_trials: usize,
    pub unsteady_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemigroupConfig {
    pub samples: usize,
    /// Time step refinements of the Duhamel comparison.
    pub refinements: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub physics: PhysicsConfig,
    pub boundary: BoundaryConfig,
    pub initial: InitialConfig,
    pub forcing: ForcingGenerator,
    pub family: MmsFamily,
    pub solver: SolverConfig,
    pub checks: Vec<CheckKind>,
    pub tolerances: Tolerances,
    pub study: StudyConfig,
    pub duality: DualityConfig,
    pub semigroup: SemigroupConfig,
    pub output: PathBuf,
}

impl ScenarioConfig {
    /// Defaults around the three required values.
    pub fn with_required(nx: usize, dt: f64, t_end: f64) -> Self {
        Self {
            name: "scenario".into(),
            seed: 0,
            grid: GridConfig {
                nx,
                ny: nx,
                lx: 1.0,
                ly: 1.0,
            },
            time: TimeConfig { dt, t_end },
            physics: PhysicsConfig {
                nu: 1.0,
                mu: 1.0,
                beta: [0.0, 1.0],
                lambda0: Shift::Auto,
            },
            boundary: BoundaryConfig {
                generator: BoundaryGenerator::Zero,
                modes: 3,
                amplitude: 1.0,
                frequency: 0.0,
            },
            initial: InitialConfig {
                generator: InitialGenerator::Zero,
                amplitude: 1.0,
            },
            forcing: ForcingGenerator::None,
            family: MmsFamily::Trig,
            solver: SolverConfig {
                kind: SolverKind::Split,
                advection: true,
                variant: MonolithicVariant::Projection,
            },
            checks: vec![CheckKind::Finite, CheckKind::Divergence],
            tolerances: Tolerances::default(),
            study: StudyConfig {
                kind: StudyKind::Steady,
                closure: BoundaryClosure::Exact,
                levels: vec![8, 16, 32],
            },
            duality: DualityConfig {
                trials: 50,
                unsteady_trials: 20,
                unsteady_steps: 16,
            },
            semigroup: SemigroupConfig {
                samples: 500,
                refinements: 3,
            },
            output: PathBuf::from("bsq-out"),
        }
    }

    /// Number of steps covering `[0, t_end]`.
    pub fn steps(&self) -> usize {
        (self.time.t_end / self.time.dt).round().max(1.0) as usize
    }
}

type Msg = std::result::Result<(), String>;

fn num(key: &str, v: &str) -> std::result::Result<f64, String> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| format!("{key}: expected a number, got '{v}'"))
}

fn positive(key: &str, v: &str) -> std::result::Result<f64, String> {
    let x = num(key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{key} must be positive, got {v}"))
    }
}

fn nonneg(key: &str, v: &str) -> std::result::Result<f64, String> {
    let x = num(key, v)?;
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("{key} must be nonnegative, got {v}"))
    }
}

fn count(key: &str, v: &str) -> std::result::Result<usize, String> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        Ok(_) => Err(format!("{key} must be positive, got {v}")),
        Err(_) => Err(format!("{key}: expected a positive integer, got '{v}'")),
    }
}

fn flag(key: &str, v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got '{v}'")),
    }
}

fn list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn keyword<T>(
    key: &str,
    v: &str,
    parse: impl Fn(&str) -> Option<T>,
    ids: &[&str],
) -> std::result::Result<T, String> {
    parse(v).ok_or_else(|| {
        format!(
            "{key}: unknown value '{v}' (expected one of {})",
            ids.join(", ")
        )
    })
}

fn ids<T: Copy>(all: &[T], id: impl Fn(T) -> &'static str) -> Vec<&'static str> {
    all.iter().map(|&t| id(t)).collect()
}

const REQUIRED: [(&str, &str); 3] = [("grid", "nx"), ("time", "dt"), ("time", "t_end")];

fn apply(cfg: &mut ScenarioConfig, ny_set: &mut bool, section: &str, key: &str, v: &str) -> Msg {
    let full = format!("{section}.{key}");
    let k = full.as_str();
    match (section, key) {
        ("scenario", "name") => cfg.name = v.to_string(),
        ("scenario", "seed") => {
            cfg.seed = v
                .parse()
                .map_err(|_| format!("{k}: expected an unsigned integer, got '{v}'"))?
        }
        ("grid", "nx") => cfg.grid.nx = count(k, v)?,
        ("grid", "ny") => {
            cfg.grid.ny = count(k, v)?;
            *ny_set = true;
        }
        ("grid", "lx") => cfg.grid.lx = positive(k, v)?,
        ("grid", "ly") => cfg.grid.ly = positive(k, v)?,
        ("time", "dt") => cfg.time.dt = positive(k, v)?,
        ("time", "t_end") => cfg.time.t_end = positive(k, v)?,
        ("physics", "nu") => cfg.physics.nu = positive(k, v)?,
        ("physics", "mu") => cfg.physics.mu = positive(k, v)?,
        ("physics", "beta") => {
            let parts: Vec<&str> = list(v).collect();
            if parts.len() != 2 {
                return Err(format!(
                    "{k}: expected two comma-separated numbers, got '{v}'"
                ));
            }
            cfg.physics.beta = [num(k, parts[0])?, num(k, parts[1])?];
        }
        ("physics", "lambda0") => {
            cfg.physics.lambda0 = if v == "auto" {
                Shift::Auto
            } else {
                Shift::Value(nonneg(k, v)?)
            }
        }
        ("boundary", "generator") => {
            cfg.boundary.generator = keyword(
                k,
                v,
                BoundaryGenerator::parse,
                &ids(BoundaryGenerator::ALL, BoundaryGenerator::id),
            )?
        }
        ("boundary", "modes") => cfg.boundary.modes = count(k, v)?,
        ("boundary", "amplitude") => cfg.boundary.amplitude = nonneg(k, v)?,
        ("boundary", "frequency") => cfg.boundary.frequency = nonneg(k, v)?,
        ("initial", "generator") => {
            cfg.initial.generator = keyword(
                k,
                v,
                InitialGenerator::parse,
                &ids(InitialGenerator::ALL, InitialGenerator::id),
            )?
        }
        ("initial", "amplitude") => cfg.initial.amplitude = nonneg(k, v)?,
        ("forcing", "generator") => {
            cfg.forcing = keyword(
                k,
                v,
                ForcingGenerator::parse,
                &ids(ForcingGenerator::ALL, ForcingGenerator::id),
            )?
        }
        ("mms", "family") => {
            cfg.family = v.parse().map_err(|_| {
                format!(
                    "{k}: unknown value '{v}' (expected one of {})",
                    ids(&MmsFamily::ALL, MmsFamily::id).join(", ")
                )
            })?
        }
        ("solver", "kind") => {
            cfg.solver.kind = keyword(
                k,
                v,
                SolverKind::parse,
                &ids(SolverKind::ALL, SolverKind::id),
            )?
        }
        ("solver", "advection") => cfg.solver.advection = flag(k, v)?,
        ("solver", "variant") => {
            cfg.solver.variant = match v {
                "projection" => MonolithicVariant::Projection,
                "coupled" => MonolithicVariant::Coupled,
                _ => {
                    return Err(format!(
                        "{k}: unknown value '{v}' (expected one of projection, coupled)"
                    ))
                }
            }
        }
        ("checks", "suites") => {
            let known = ids(CheckKind::ALL, CheckKind::id);
            let mut out = Vec::new();
            for s in list(v) {
                let c = keyword(k, s, CheckKind::parse, &known)?;
                if !out.contains(&c) {
                    out.push(c);
                }
            }
            cfg.checks = out;
        }
        ("tolerances", t) => {
            let tol = &mut cfg.tolerances;
            let slot = match t {
                "divergence" => &mut tol.divergence,
                "pressure" => &mut tol.pressure,
                "compatibility" => &mut tol.compatibility,
                "splitting" => &mut tol.splitting,
                "energy" => &mut tol.energy,
                "duality" => &mut tol.duality,
                "duality_unsteady" => &mut tol.duality_unsteady,
                "semigroup_law" => &mut tol.semigroup_law,
                "half_power" => &mut tol.half_power,
                "commutation" => &mut tol.commutation,
                _ => return Err(format!("unknown key '{k}'")),
            };
            *slot = nonneg(k, v)?;
        }
        ("study", "kind") => {
            cfg.study.kind = keyword(k, v, StudyKind::parse, &ids(StudyKind::ALL, StudyKind::id))?
        }
        ("study", "closure") => {
            cfg.study.closure = match v {
                "exact" => BoundaryClosure::Exact,
                "half-cell" => BoundaryClosure::HalfCellShifted,
                _ => {
                    return Err(format!(
                        "{k}: unknown value '{v}' (expected one of exact, half-cell)"
                    ))
                }
            }
        }
        ("study", "levels") => {
            cfg.study.levels = list(v)
                .map(|s| count(k, s))
                .collect::<std::result::Result<_, _>>()?
        }
        ("duality", "trials") => cfg.duality.trials = count(k, v)?,
        ("duality", "unsteady_trials") => cfg.duality.unsteady_trials = count(k, v)?,
        ("duality", "unsteady_steps") => cfg.duality.unsteady_steps = count(k, v)?,
        ("semigroup", "samples") => cfg.semigroup.samples = count(k, v)?,
        ("semigroup", "refinements") => cfg.semigroup.refinements = count(k, v)?,
        ("output", "dir") => {
            if v.is_empty() {
                return Err(format!("{k} must not be empty"));
            }
            cfg.output = PathBuf::from(v)
        }
        _ => return Err(format!("unknown key '{k}'")),
    }
    Ok(())
}

/// Parses and validates a scenario file, stopping at the first error.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let err = |line: usize, msg: String| Error::Config { line, msg };
    let mut cfg = ScenarioConfig::with_required(0, 0.0, 0.0);
    let mut ny_set = false;
    let mut seen: Vec<(String, String)> = Vec::new();
    let mut section: Option<String> = None;
    let mut last = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last = line;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("malformed section header '{body}'")))?
                .trim();
            if name.is_empty() {
                return Err(err(line, "empty section name".into()));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected 'key = value', got '{body}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .as_deref()
            .ok_or_else(|| err(line, format!("key '{key}' appears before any section")))?;
        if seen.iter().any(|(s, k)| s == sec && k == key) {
            return Err(err(line, format!("duplicate key '{sec}.{key}'")));
        }
        apply(&mut cfg, &mut ny_set, sec, key, value).map_err(|m| err(line, m))?;
        seen.push((sec.to_string(), key.to_string()));
    }
    for (s, k) in REQUIRED {
        if !seen.iter().any(|(a, b)| a == s && b == k) {
            return Err(err(last, format!("missing required key '{s}.{k}'")));
        }
    }
    if !ny_set {
        cfg.grid.ny = cfg.grid.nx;
    }
    if cfg.grid.nx < 4 || cfg.grid.ny < 4 {
        return Err(err(
            last,
            format!(
                "grid {}x{} is below the 4x4 minimum",
                cfg.grid.nx, cfg.grid.ny
            ),
        ));
    }
    if cfg.time.dt > cfg.time.t_end {
        return Err(err(
            last,
            format!(
                "time.dt = {} exceeds time.t_end = {}",
                cfg.time.dt, cfg.time.t_end
            ),
        ));
    }
    Ok(cfg)
}

/// Canonical text with every key written out; `parse_config` of the result
/// reproduces `cfg`.
pub fn emit_config(cfg: &ScenarioConfig) -> String {
    let mut s = String::new();
    let join = |v: &[usize]| {
        v.iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let shift = match cfg.physics.lambda0 {
        Shift::Auto => "auto".to_string(),
        Shift::Value(v) => v.to_string(),
    };
    let variant = match cfg.solver.variant {
        MonolithicVariant::Projection => "projection",
        MonolithicVariant::Coupled => "coupled",
    };
    let closure = match cfg.study.closure {
        BoundaryClosure::Exact => "exact",
        BoundaryClosure::HalfCellShifted => "half-cell",
    };
    let t = &cfg.tolerances;
    let checks = cfg
        .checks
        .iter()
        .map(|c| c.id())
        .collect::<Vec<_>>()
        .join(", ");
    let _ = write!(
        s,
        "[scenario]\nname = {}\nseed = {}\n\n\
         [grid]\nnx = {}\nny = {}\nlx = {}\nly = {}\n\n\
         [time]\ndt = {}\nt_end = {}\n\n\
         [physics]\nnu = {}\nmu = {}\nbeta = {}, {}\nlambda0 = {}\n\n\
         [boundary]\ngenerator = {}\nmodes = {}\namplitude = {}\nfrequency = {}\n\n\
         [initial]\ngenerator = {}\namplitude = {}\n\n\
         [forcing]\ngenerator = {}\n\n\
         [mms]\nfamily = {}\n\n\
         [solver]\nkind = {}\nadvection = {}\nvariant = {}\n\n\
         [checks]\nsuites = {}\n\n\
         [tolerances]\ndivergence = {}\npressure = {}\ncompatibility = {}\nsplitting = {}\nenergy = {}\n\
         duality = {}\nduality_unsteady = {}\nsemigroup_law = {}\nhalf_power = {}\ncommutation = {}\n\n\
         [study]\nkind = {}\nclosure = {}\nlevels = {}\n\n\
         [duality]\ntrials = {}\nunsteady_trials = {}\nunsteady_steps = {}\n\n\
         [semigroup]\nsamples = {}\nrefinements = {}\n\n\
         [output]\ndir = {}\n",
        cfg.name,
        cfg.seed,
        cfg.grid.nx,
        cfg.grid.ny,
        cfg.grid.lx,
        cfg.grid.ly,
        cfg.time.dt,
        cfg.time.t_end,
        cfg.physics.nu,
        cfg.physics.mu,
        cfg.physics.beta[0],
        cfg.physics.beta[1],
        shift,
        cfg.boundary.generator.id(),
        cfg.boundary.modes,
        cfg.boundary.amplitude,
        cfg.boundary.frequency,
        cfg.initial.generator.id(),
        cfg.initial.amplitude,
        cfg.forcing.id(),
        cfg.family.id(),
        cfg.solver.kind.id(),
        cfg.solver.advection,
        variant,
        checks,
        t.divergence,
        t.pressure,
        t.compatibility,
        t.splitting,
        t.energy,
        t.duality,
        t.duality_unsteady,
        t.semigroup_law,
        t.half_power,
        t.commutation,
        cfg.study.kind.id(),
        closure,
        join(&cfg.study.levels),
        cfg.duality.trials,
        cfg.duality.unsteady_trials,
        cfg.duality.unsteady_steps,
        cfg.semigroup.samples,
        cfg.semigroup.refinements,
        cfg.output.display(),
    );
    s
}
