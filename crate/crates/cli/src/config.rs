//! Sweep configuration: parsing and validation with every problem reported at once.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    PhaseDiagram,
    Overlap,
    Splitting,
    Bitflip,
    Phaseflip,
    LindbladSpectrum,
    Xgate,
    Cos2thetaLifetimes,
    QpsPair,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::PhaseDiagram,
        Experiment::Overlap,
        Experiment::Splitting,
        Experiment::Bitflip,
        Experiment::Phaseflip,
        Experiment::LindbladSpectrum,
        Experiment::Xgate,
        Experiment::Cos2thetaLifetimes,
        Experiment::QpsPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PhaseDiagram => "phase_diagram",
            Experiment::Overlap => "overlap",
            Experiment::Splitting => "splitting",
            Experiment::Bitflip => "bitflip",
            Experiment::Phaseflip => "phaseflip",
            Experiment::LindbladSpectrum => "lindblad_spectrum",
            Experiment::Xgate => "xgate",
            Experiment::Cos2thetaLifetimes => "cos2theta_lifetimes",
            Experiment::QpsPair => "qps_pair",
        }
    }

    /// Physical parameters the experiment reads, with their defaults.
    pub fn params(self) -> &'static [ParamSpec] {
        use Constraint::*;
        use Default_::*;
        const CIRCUIT: [ParamSpec; 3] = [
            ParamSpec { name: "e_c", constraint: Positive, default: Required },
            ParamSpec { name: "e_l", constraint: Positive, default: Required },
            ParamSpec { name: "e_j", constraint: NonNegative, default: Required },
        ];
        const LIFETIME: [ParamSpec; 6] = [
            CIRCUIT[0],
            CIRCUIT[1],
            CIRCUIT[2],
            ParamSpec { name: "delta_phi_e", constraint: Finite, default: Value(0.03 * PI) },
            ParamSpec { name: "k_bt", constraint: Positive, default: Value(1.0) },
            ParamSpec { name: "x", constraint: NonNegative, default: Value(0.0031622776601683794) },
        ];
        match self {
            Experiment::PhaseDiagram => &[
                ParamSpec { name: "ec_over_el", constraint: Positive, default: Required },
                ParamSpec { name: "ej_over_el", constraint: NonNegative, default: Required },
            ],
            Experiment::Overlap => &CIRCUIT,
            Experiment::Splitting => &[
                CIRCUIT[0],
                CIRCUIT[1],
                CIRCUIT[2],
                ParamSpec { name: "phi_e", constraint: Finite, default: Value(PI) },
            ],
            Experiment::Bitflip | Experiment::Phaseflip | Experiment::LindbladSpectrum => &LIFETIME,
            Experiment::Xgate => &[
                ParamSpec { name: "e_c", constraint: Positive, default: Value(0.5) },
                ParamSpec { name: "e_l", constraint: Positive, default: Value(0.5) },
                ParamSpec { name: "e_j_max", constraint: NonNegative, default: Value(10.0) },
                ParamSpec { name: "e_j_min", constraint: NonNegative, default: Value(0.1) },
                ParamSpec { name: "t_rise", constraint: NonNegative, default: Value(0.05) },
                ParamSpec { name: "hold", constraint: Positive, default: Optional },
            ],
            Experiment::Cos2thetaLifetimes => &[
                ParamSpec { name: "e_j2", constraint: Positive, default: Required },
                ParamSpec { name: "e_j1", constraint: NonNegative, default: Optional },
                ParamSpec { name: "e_c", constraint: Positive, default: Value(0.1) },
                ParamSpec { name: "k_bt", constraint: Positive, default: Value(1.0) },
                ParamSpec { name: "x", constraint: NonNegative, default: Value(0.0031622776601683794) },
            ],
            Experiment::QpsPair => &[
                ParamSpec { name: "e_c_node", constraint: Positive, default: Required },
                ParamSpec { name: "e_q", constraint: NonNegative, default: Required },
                ParamSpec { name: "e_j", constraint: Positive, default: Required },
            ],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
            format!("unknown experiment `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    Positive,
    NonNegative,
    Finite,
}

impl Constraint {
    fn check(self, v: f64) -> Result<(), &'static str> {
        let ok = match self {
            Constraint::Positive => v > 0.0 && v.is_finite(),
            Constraint::NonNegative => v >= 0.0 && v.is_finite(),
            Constraint::Finite => v.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(match self {
                Constraint::Positive => "must be positive",
                Constraint::NonNegative => "must be non-negative",
                Constraint::Finite => "must be finite",
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(non_camel_case_types)]
pub enum Default_ {
    Required,
    Value(f64),
    /// Absent unless given; the experiment derives it.
    Optional,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub constraint: Constraint,
    pub default: Default_,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// One swept parameter with its resolved values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Fock,
    #[default]
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    #[default]
    Linear,
    Cosine,
}

/// Discretization and tolerance settings. Unset fields take per-experiment defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub fock_dim: Option<usize>,
    pub grid_points: usize,
    pub phi_max: f64,
    pub n_max: Option<usize>,
    pub k_levels: usize,
    pub n_delocalized: usize,
    pub points_per_decade: usize,
    pub min_r_squared: f64,
    pub spectrum_count: usize,
    /// Fock for `xgate`, flux grid elsewhere.
    pub basis: Option<BasisKind>,
    pub ramp: Ramp,
    pub steps_per_inverse_omega: usize,
    /// Relative change allowed by `--verify-convergence`.
    pub convergence_tol: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            fock_dim: None,
            grid_points: 801,
            phi_max: 2.0 * PI,
            n_max: None,
            k_levels: 14,
            n_delocalized: 5,
            points_per_decade: 16,
            min_r_squared: 0.98,
            spectrum_count: 4,
            basis: None,
            ramp: Ramp::Linear,
            steps_per_inverse_omega: 50,
            convergence_tol: 1e-3,
        }
    }
}

impl Numerics {
    pub fn fock_dim_for(&self, e: Experiment) -> usize {
        self.fock_dim.unwrap_or(if e == Experiment::Xgate { 100 } else { 150 })
    }

    pub fn basis_for(&self, e: Experiment) -> BasisKind {
        self.basis.unwrap_or(if e == Experiment::Xgate { BasisKind::Fock } else { BasisKind::Grid })
    }

    pub fn n_max_for(&self, e: Experiment) -> usize {
        self.n_max.unwrap_or(if e == Experiment::QpsPair { 12 } else { 30 })
    }

    /// Larger discretization used to check convergence.
    pub fn refined(&self, e: Experiment) -> Numerics {
        Numerics {
            fock_dim: Some((self.fock_dim_for(e) * 3).div_ceil(2)),
            grid_points: 2 * self.grid_points - 1,
            n_max: Some(self.n_max_for(e) + 10),
            k_levels: self.k_levels + 4,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub experiment: Experiment,
    pub fixed: BTreeMap<String, f64>,
    pub sweep: Vec<Axis>,
    pub numerics: Numerics,
    pub output: Option<String>,
    pub jobs: Option<usize>,
}

impl SweepConfig {
    /// Every sweep point as a full parameter map, first axis slowest.
    pub fn points(&self) -> Vec<BTreeMap<String, f64>> {
        let mut out = vec![self.fixed.clone()];
        for axis in &self.sweep {
            out = out
                .into_iter()
                .flat_map(|base| {
                    axis.values.iter().map(move |&v| {
                        let mut m = base.clone();
                        m.insert(axis.name.clone(), v);
                        m
                    })
                })
                .collect();
        }
        out
    }
}

/// All problems found in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

const TOP_KEYS: [&str; 7] = ["experiment", "fixed", "sweep", "numerics", "output", "jobs", "units"];
const AXIS_KEYS: [&str; 6] = ["name", "values", "start", "stop", "count", "scale"];
const NUMERIC_KEYS: [&str; 13] = [
    "fock_dim",
    "grid_points",
    "phi_max",
    "n_max",
    "k_levels",
    "n_delocalized",
    "points_per_decade",
    "min_r_squared",
    "spectrum_count",
    "basis",
    "ramp",
    "steps_per_inverse_omega",
    "convergence_tol",
];

/// Parses and validates a JSON configuration.
///
/// `experiment` may come from the command line instead of the file; when both
/// are present they must agree.
pub fn validate_config(text: &str, experiment: Option<Experiment>) -> Result<SweepConfig, ConfigErrors> {
    let mut errs = Vec::new();
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Err(ConfigErrors(vec![format!("invalid JSON: {e}")])),
    };
    let Some(obj) = root.as_object() else {
        return Err(ConfigErrors(vec!["top level must be a JSON object".into()]));
    };
    for k in obj.keys() {
        if !TOP_KEYS.contains(&k.as_str()) {
            errs.push(format!("unknown key `{k}`"));
        }
    }

    let from_file = match obj.get("experiment") {
        None => None,
        Some(v) => match v.as_str().map(Experiment::from_str) {
            Some(Ok(e)) => Some(e),
            Some(Err(m)) => {
                errs.push(format!("experiment: {m}"));
                None
            }
            None => {
                errs.push("experiment: must be a string".into());
                None
            }
        },
    };
    let exp = match (experiment, from_file) {
        (Some(a), Some(b)) if a != b => {
            errs.push(format!("experiment: command line says `{a}` but the file says `{b}`"));
            Some(a)
        }
        (Some(a), _) => Some(a),
        (None, Some(b)) => Some(b),
        (None, None) => {
            errs.push("experiment: missing".into());
            None
        }
    };

    if let Some(units) = obj.get("units") {
        check_units(units, &mut errs);
    }

    let known: Vec<ParamSpec> = exp.map(|e| e.params().to_vec()).unwrap_or_default();
    let lookup = |name: &str| known.iter().find(|p| p.name == name).copied();

    let mut fixed = BTreeMap::new();
    match obj.get("fixed") {
        None => {}
        Some(Value::Object(m)) => {
            for (k, v) in m {
                let Some(v) = v.as_f64() else {
                    errs.push(format!("fixed.{k}: must be a number"));
                    continue;
                };
                match lookup(k) {
                    None if exp.is_some() => errs.push(format!("fixed.{k}: not a parameter of `{}`", exp.unwrap())),
                    None => {}
                    Some(spec) => {
                        if let Err(m) = spec.constraint.check(v) {
                            errs.push(format!("fixed.{k}: {m}, got {v}"));
                        }
                        fixed.insert(k.clone(), v);
                    }
                }
            }
        }
        Some(_) => errs.push("fixed: must be an object".into()),
    }

    let mut sweep = Vec::new();
    let axes: Vec<&Value> = match obj.get("sweep") {
        None => vec![],
        Some(Value::Array(a)) => a.iter().collect(),
        Some(v @ Value::Object(_)) => vec![v],
        Some(_) => {
            errs.push("sweep: must be an object or a list of objects".into());
            vec![]
        }
    };
    for (i, a) in axes.into_iter().enumerate() {
        if let Some(axis) = parse_axis(a, i, &mut errs) {
            match lookup(&axis.name) {
                None if exp.is_some() => {
                    errs.push(format!("sweep.{}: not a parameter of `{}`", axis.name, exp.unwrap()))
                }
                None => {}
                Some(spec) => {
                    for v in &axis.values {
                        if let Err(m) = spec.constraint.check(*v) {
                            errs.push(format!("sweep.{}: value {v} {m}", axis.name));
                        }
                    }
                    if fixed.contains_key(&axis.name) {
                        errs.push(format!("sweep.{}: also given in `fixed`", axis.name));
                    }
                    if sweep.iter().any(|s: &Axis| s.name == axis.name) {
                        errs.push(format!("sweep.{}: swept twice", axis.name));
                    }
                    sweep.push(axis);
                }
            }
        }
    }

    for spec in &known {
        let given = fixed.contains_key(spec.name) || sweep.iter().any(|a| a.name == spec.name);
        match spec.default {
            Default_::Required if !given => errs.push(format!("fixed.{}: required by `{}`", spec.name, exp.unwrap())),
            Default_::Value(v) if !given => {
                fixed.insert(spec.name.to_string(), v);
            }
            _ => {}
        }
    }

    let numerics = match obj.get("numerics") {
        None => Numerics::default(),
        Some(Value::Object(m)) => {
            let mut ok = true;
            for (k, v) in m {
                if !NUMERIC_KEYS.contains(&k.as_str()) {
                    errs.push(format!("numerics.{k}: unknown key"));
                    ok = false;
                    continue;
                }
                // Type-check each field alone so all problems are reported.
                let mut single = serde_json::Map::new();
                single.insert(k.clone(), v.clone());
                if let Err(e) = serde_json::from_value::<Numerics>(Value::Object(single)) {
                    errs.push(format!("numerics.{k}: {e}"));
                    ok = false;
                }
            }
            if ok {
                let n: Numerics = serde_json::from_value(Value::Object(m.clone())).expect("fields checked");
                check_numerics(&n, &mut errs);
                n
            } else {
                Numerics::default()
            }
        }
        Some(_) => {
            errs.push("numerics: must be an object".into());
            Numerics::default()
        }
    };

    let output = match obj.get("output") {
        None => None,
        Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
        Some(_) => {
            errs.push("output: must be a non-empty string".into());
            None
        }
    };
    let jobs = match obj.get("jobs") {
        None => None,
        Some(v) => match v.as_u64() {
            Some(n) if n >= 1 => Some(n as usize),
            _ => {
                errs.push("jobs: must be a positive integer".into());
                None
            }
        },
    };

    if errs.is_empty() {
        Ok(SweepConfig { experiment: exp.unwrap(), fixed, sweep, numerics, output, jobs })
    } else {
        Err(ConfigErrors(errs))
    }
}

fn check_units(units: &Value, errs: &mut Vec<String>) {
    let Some(m) = units.as_object() else {
        errs.push("units: must be an object".into());
        return;
    };
    for (k, v) in m {
        let want = match k.as_str() {
            "energy" => "GHz",
            "time" => "ns",
            "temperature" => "GHz",
            _ => {
                errs.push(format!("units.{k}: unknown key"));
                continue;
            }
        };
        if v.as_str() != Some(want) {
            errs.push(format!("units.{k}: only `{want}` is supported, got {v}"));
        }
    }
}

fn parse_axis(a: &Value, i: usize, errs: &mut Vec<String>) -> Option<Axis> {
    let Some(m) = a.as_object() else {
        errs.push(format!("sweep[{i}]: must be an object"));
        return None;
    };
    for k in m.keys() {
        if !AXIS_KEYS.contains(&k.as_str()) {
            errs.push(format!("sweep[{i}].{k}: unknown key"));
        }
    }
    let Some(name) = m.get("name").and_then(Value::as_str) else {
        errs.push(format!("sweep[{i}].name: missing or not a string"));
        return None;
    };
    let range_keys = ["start", "stop", "count", "scale"];
    let has_range = range_keys.iter().any(|k| m.contains_key(*k));
    let values = match (m.get("values"), has_range) {
        (Some(_), true) => {
            errs.push(format!("sweep.{name}: give either `values` or a range, not both"));
            return None;
        }
        (Some(Value::Array(vs)), false) => {
            let nums: Option<Vec<f64>> = vs.iter().map(Value::as_f64).collect();
            match nums {
                Some(v) if !v.is_empty() => v,
                Some(_) => {
                    errs.push(format!("sweep.{name}.values: must not be empty"));
                    return None;
                }
                None => {
                    errs.push(format!("sweep.{name}.values: must be numbers"));
                    return None;
                }
            }
        }
        (Some(_), false) => {
            errs.push(format!("sweep.{name}.values: must be a list"));
            return None;
        }
        (None, true) => {
            let start = m.get("start").and_then(Value::as_f64);
            let stop = m.get("stop").and_then(Value::as_f64);
            let count = m.get("count").and_then(Value::as_u64);
            let scale = match m.get("scale") {
                None => Some(Scale::Linear),
                Some(v) => serde_json::from_value::<Scale>(v.clone()).ok(),
            };
            let mut bad = false;
            for (k, ok) in [("start", start.is_some()), ("stop", stop.is_some()), ("count", count.is_some_and(|c| c > 0))] {
                if !ok {
                    errs.push(format!("sweep.{name}.{k}: missing or invalid"));
                    bad = true;
                }
            }
            if scale.is_none() {
                errs.push(format!("sweep.{name}.scale: must be `linear` or `log`"));
                bad = true;
            }
            if bad {
                return None;
            }
            let (a, b, n, s) = (start.unwrap(), stop.unwrap(), count.unwrap() as usize, scale.unwrap());
            if s == Scale::Log && !(a > 0.0 && b > 0.0) {
                errs.push(format!("sweep.{name}: log scale needs positive start and stop"));
                return None;
            }
            range(a, b, n, s)
        }
        (None, false) => {
            errs.push(format!("sweep.{name}: needs `values` or `start`/`stop`/`count`"));
            return None;
        }
    };
    Some(Axis { name: name.to_string(), values })
}

/// `n` points from `a` to `b` inclusive.
pub fn range(a: f64, b: f64, n: usize, scale: Scale) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            match scale {
                Scale::Linear => a + (b - a) * f,
                Scale::Log => (a.ln() + (b.ln() - a.ln()) * f).exp(),
            }
        })
        .collect()
}

fn check_numerics(n: &Numerics, errs: &mut Vec<String>) {
    if n.fock_dim.is_some_and(|d| d < 2) {
        errs.push("numerics.fock_dim: must be at least 2".into());
    }
    if n.grid_points < 3 || n.grid_points.is_multiple_of(2) {
        errs.push("numerics.grid_points: must be odd and at least 3".into());
    }
    if !(n.phi_max > 0.0 && n.phi_max.is_finite()) {
        errs.push("numerics.phi_max: must be positive".into());
    }
    if n.n_max == Some(0) {
        errs.push("numerics.n_max: must be positive".into());
    }
    if n.k_levels < 2 {
        errs.push("numerics.k_levels: must be at least 2".into());
    }
    if n.points_per_decade < 4 {
        errs.push("numerics.points_per_decade: must be at least 4".into());
    }
    if !(0.0..=1.0).contains(&n.min_r_squared) {
        errs.push("numerics.min_r_squared: must lie in [0, 1]".into());
    }
    if n.spectrum_count == 0 {
        errs.push("numerics.spectrum_count: must be positive".into());
    }
    if n.steps_per_inverse_omega < 50 {
        errs.push("numerics.steps_per_inverse_omega: must be at least 50".into());
    }
    if !(n.convergence_tol > 0.0) {
        errs.push("numerics.convergence_tol: must be positive".into());
    }
}
