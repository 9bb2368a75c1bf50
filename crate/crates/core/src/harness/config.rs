//! Flat `key=value` experiment configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::directions::DistributionKind;
use crate::error::{Error, Result};
use crate::objectives::{logspace, NoiseSpec};
use crate::optimizers::Method;
use crate::schedules::{TheoremId, ThetaSequence};

pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_SEED_COUNT: u64 = 5;
pub const DEFAULT_MAX_ITERS: u64 = 1000;

const KEYS: &[&str] = &[
    "method",
    "beta",
    "objective",
    "dim",
    "coord_L",
    "shift",
    "horizon",
    "d_state",
    "d_ctrl",
    "lipschitz",
    "noise.sigma",
    "noise.k",
    "distribution",
    "weights",
    "basis_seed",
    "schedule.kind",
    "schedule.gamma",
    "schedule.gamma0",
    "schedule.alpha",
    "schedule.theta",
    "schedule.t",
    "schedule.theta_k",
    "schedule.r0",
    "schedule.w",
    "seeds",
    "max_iters",
    "epsilon",
    "eval_budget",
    "theorem",
    "x0",
    "output",
];

#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveSpec {
    Quadratic { coord_l: Vec<f64>, shift: Vec<f64> },
    Rosenbrock { dim: usize },
    Lqr { horizon: usize, d_state: usize, d_ctrl: usize },
}

impl ObjectiveSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveSpec::Quadratic { .. } => "quadratic",
            ObjectiveSpec::Rosenbrock { .. } => "rosenbrock",
            ObjectiveSpec::Lqr { .. } => "lqr",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ObjectiveSpec::Quadratic { coord_l, .. } => coord_l.len(),
            ObjectiveSpec::Rosenbrock { dim } => *dim,
            ObjectiveSpec::Lqr { d_state, d_ctrl, .. } => d_state * d_ctrl,
        }
    }
}

/// Where sampling probabilities or IS weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Uniform,
    /// Proportional to the coordinate smoothness constants `L_i`.
    Lipschitz,
    Values(Vec<f64>),
}

/// A number, or a value derived from the objective's metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tunable {
    Value(f64),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Constant,
    FixedHorizon,
    Decreasing,
    SolutionDependent,
    SolutionFree,
}

impl ScheduleKind {
    fn parse(s: &str) -> Option<(Self, bool)> {
        let (name, is) = match s.strip_prefix("is_") {
            Some(rest) => (rest, true),
            None => (s, false),
        };
        let kind = match name {
            "constant" => ScheduleKind::Constant,
            "fixed_horizon" => ScheduleKind::FixedHorizon,
            "decreasing" => ScheduleKind::Decreasing,
            "solution_dependent" => ScheduleKind::SolutionDependent,
            "solution_free" => ScheduleKind::SolutionFree,
            _ => return None,
        };
        Some((kind, is))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleKind::Constant => "constant",
            ScheduleKind::FixedHorizon => "fixed_horizon",
            ScheduleKind::Decreasing => "decreasing",
            ScheduleKind::SolutionDependent => "solution_dependent",
            ScheduleKind::SolutionFree => "solution_free",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub gamma: Option<f64>,
    /// `Auto` means the value minimizing the non-convex bound.
    pub gamma0: Option<Tunable>,
    pub alpha: Tunable,
    pub theta: Option<f64>,
    /// `Auto` means the largest `t` admissible for `epsilon`.
    pub t: Tunable,
    pub theta_k: ThetaSequence,
    /// `Auto` means the quadratic's closed-form level-set radius.
    pub r0: Option<Tunable>,
    pub w: WeightSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub beta: f64,
    pub objective: ObjectiveSpec,
    /// Overrides (or supplies) the global smoothness constant.
    pub lipschitz: Option<f64>,
    pub noise: Option<NoiseSpec>,
    pub distribution: DistributionKind,
    pub weights: WeightSpec,
    pub basis_seed: u64,
    pub schedule: ScheduleSpec,
    pub seeds: Vec<u64>,
    pub max_iters: u64,
    pub epsilon: Option<f64>,
    pub eval_budget: Option<u64>,
    pub theorem: Option<TheoremId>,
    pub x0: Option<Vec<f64>>,
    pub output: Option<PathBuf>,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
    last_line: usize,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn line(&self, key: &str) -> usize {
        self.map.get(key).map_or(self.last_line, |(l, _)| *l)
    }

    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.raw(key) {
            Some((line, v)) => parse(v).map(Some).map_err(|m| Error::config(line, format!("{key}: {m}"))),
            None => Ok(None),
        }
    }

    fn require<T>(&self, key: &'static str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<T> {
        self.get(key, parse)?
            .ok_or_else(|| Error::config(self.last_line, format!("missing required key `{key}`")))
    }
}

fn number(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(v)
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    let v = number(s)?;
    if v <= 0.0 {
        return Err(format!("must be positive, got {v}"));
    }
    Ok(v)
}

fn integer(s: &str) -> std::result::Result<u64, String> {
    s.trim().parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
}

fn list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    if inner.trim().is_empty() {
        return Err("empty list".into());
    }
    inner.split(',').map(number).collect()
}

fn tunable(s: &str) -> std::result::Result<Tunable, String> {
    match s.trim() {
        "auto" | "optimal" => Ok(Tunable::Auto),
        v => positive(v).map(Tunable::Value),
    }
}

fn weights(s: &str) -> std::result::Result<WeightSpec, String> {
    match s.trim() {
        "uniform" => Ok(WeightSpec::Uniform),
        "lipschitz" => Ok(WeightSpec::Lipschitz),
        v => {
            let w = list(v)?;
            if w.iter().any(|x| *x <= 0.0) {
                return Err("weights must be positive".into());
            }
            Ok(WeightSpec::Values(w))
        }
    }
}

/// `5` is a seed count (seeds 0..5); `[7]` or `3,9,11` is an explicit list.
fn seeds(s: &str) -> std::result::Result<Vec<u64>, String> {
    let t = s.trim();
    if t.starts_with('[') || t.contains(',') {
        let inner = t.trim_start_matches('[').trim_end_matches(']');
        let v: Vec<u64> = inner.split(',').map(integer).collect::<std::result::Result<_, _>>()?;
        if v.is_empty() {
            return Err("empty seed list".into());
        }
        Ok(v)
    } else {
        let n = integer(t)?;
        if n == 0 {
            return Err("seed count must be at least 1".into());
        }
        Ok((0..n).collect())
    }
}

/// Same value at every coordinate when a scalar is given.
fn vector(s: &str, dim: usize) -> std::result::Result<Vec<f64>, String> {
    let v = list(s)?;
    match v.len() {
        1 => Ok(vec![v[0]; dim]),
        n if n == dim => Ok(v),
        n => Err(format!("expected {dim} entries, got {n}")),
    }
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// Canonical `key=value` rendering; parsing it yields the same config.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        let weight = |w: &WeightSpec| match w {
            WeightSpec::Uniform => "uniform".to_string(),
            WeightSpec::Lipschitz => "lipschitz".to_string(),
            WeightSpec::Values(v) => join(v),
        };
        let tun = |t: Tunable| match t {
            Tunable::Value(v) => format!("{v:?}"),
            Tunable::Auto => "auto".to_string(),
        };
        put("method", self.method.as_str().into());
        put("beta", format!("{:?}", self.beta));
        put("objective", self.objective.name().into());
        match &self.objective {
            ObjectiveSpec::Quadratic { coord_l, shift } => {
                put("coord_L", join(coord_l));
                put("shift", join(shift));
            }
            ObjectiveSpec::Rosenbrock { dim } => put("dim", dim.to_string()),
            ObjectiveSpec::Lqr { horizon, d_state, d_ctrl } => {
                put("horizon", horizon.to_string());
                put("d_state", d_state.to_string());
                put("d_ctrl", d_ctrl.to_string());
            }
        }
        if let Some(l) = self.lipschitz {
            put("lipschitz", format!("{l:?}"));
        }
        if let Some(n) = self.noise {
            put("noise.sigma", format!("{:?}", n.sigma));
            put("noise.k", n.k.to_string());
        }
        put("distribution", self.distribution.as_str().into());
        put("weights", weight(&self.weights));
        put("basis_seed", self.basis_seed.to_string());
        let s = &self.schedule;
        put("schedule.kind", s.kind.as_str().into());
        if let Some(g) = s.gamma {
            put("schedule.gamma", format!("{g:?}"));
        }
        if let Some(g) = s.gamma0 {
            put("schedule.gamma0", tun(g));
        }
        put("schedule.alpha", tun(s.alpha));
        if let Some(t) = s.theta {
            put("schedule.theta", format!("{t:?}"));
        }
        put("schedule.t", tun(s.t));
        put(
            "schedule.theta_k",
            match &s.theta_k {
                ThetaSequence::Constant(t) => format!("{t:?}"),
                ThetaSequence::Values(v) => join(v),
            },
        );
        if let Some(r) = s.r0 {
            put("schedule.r0", tun(r));
        }
        put("schedule.w", weight(&s.w));
        put(
            "seeds",
            format!("[{}]", self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")),
        );
        put("max_iters", self.max_iters.to_string());
        if let Some(e) = self.epsilon {
            put("epsilon", format!("{e:?}"));
        }
        if let Some(b) = self.eval_budget {
            put("eval_budget", b.to_string());
        }
        if let Some(t) = self.theorem {
            put("theorem", t.as_str().into());
        }
        if let Some(x) = &self.x0 {
            put("x0", join(x));
        }
        out
    }

    /// FNV-1a hash of [`Self::canonical`] without the output directory.
    pub fn fingerprint(&self) -> u64 {
        self.canonical()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
    }
}

/// Parses a flat `key=value` document. Blank lines and `#` comments are
/// ignored; every error carries the offending line number.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut map = BTreeMap::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| Error::config(line, format!("expected key=value, got `{content}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::config(line, format!("unknown key `{k}`")));
        }
        if v.is_empty() {
            return Err(Error::config(line, format!("{k}: empty value")));
        }
        if map.insert(k.to_string(), (line, v.to_string())).is_some() {
            return Err(Error::config(line, format!("duplicate key `{k}`")));
        }
    }
    let e = Entries { map, last_line: last_line.max(1) };

    let method = e
        .get("method", |s| s.parse::<Method>().map_err(|e| e.to_string()))?
        .unwrap_or(Method::Smtp);
    let beta = match e.get("beta", number)? {
        Some(b) => {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(e.line("beta"), "beta must lie in [0,1)"));
            }
            if method == Method::Stp && b != 0.0 {
                return Err(Error::config(e.line("beta"), "stp has no momentum; beta must be 0"));
            }
            b
        }
        None if method == Method::Stp => 0.0,
        None => DEFAULT_BETA,
    };

    let dim = e
        .get("dim", |s| integer(s).and_then(|d| if d == 0 { Err("dim must be >= 1".into()) } else { Ok(d) }))?
        .map(|d| d as usize);
    let objective = match e.require("objective", |s| Ok(s.to_string()))?.as_str() {
        "quadratic" => {
            let (line, raw) = e
                .raw("coord_L")
                .ok_or_else(|| Error::config(e.line("objective"), "quadratic needs `coord_L`"))?;
            let coord_l = if let Some(spec) = raw.strip_prefix("logspace:") {
                let b = list(spec).map_err(|m| Error::config(line, format!("coord_L: {m}")))?;
                let n = dim.ok_or_else(|| Error::config(line, "coord_L=logspace:lo,hi needs `dim`"))?;
                if b.len() != 2 {
                    return Err(Error::config(line, "coord_L: logspace takes lo,hi"));
                }
                logspace(b[0], b[1], n).map_err(|err| Error::config(line, format!("coord_L: {err}")))?
            } else {
                let v = list(raw).map_err(|m| Error::config(line, format!("coord_L: {m}")))?;
                if let Some(d) = dim {
                    if d != v.len() {
                        return Err(Error::config(line, format!("coord_L has {} entries but dim={d}", v.len())));
                    }
                }
                v
            };
            if coord_l.iter().any(|l| *l <= 0.0) {
                return Err(Error::config(line, "coord_L entries must be positive"));
            }
            let d = coord_l.len();
            let shift = e.get("shift", |s| vector(s, d))?.unwrap_or_else(|| vec![0.0; d]);
            ObjectiveSpec::Quadratic { coord_l, shift }
        }
        "rosenbrock" => {
            let d = dim.ok_or_else(|| Error::config(e.line("objective"), "rosenbrock needs `dim`"))?;
            if d < 2 {
                return Err(Error::config(e.line("dim"), "rosenbrock needs dim >= 2"));
            }
            ObjectiveSpec::Rosenbrock { dim: d }
        }
        "lqr" => {
            let horizon = e.get("horizon", integer)?.unwrap_or(10) as usize;
            let d_state = e.get("d_state", integer)?.unwrap_or(2) as usize;
            let d_ctrl = e.get("d_ctrl", integer)?.unwrap_or(2) as usize;
            if horizon == 0 || d_state == 0 || d_ctrl == 0 || d_ctrl > d_state {
                return Err(Error::config(
                    e.line("objective"),
                    "lqr needs horizon >= 1 and 1 <= d_ctrl <= d_state",
                ));
            }
            ObjectiveSpec::Lqr { horizon, d_state, d_ctrl }
        }
        other => {
            return Err(Error::config(
                e.line("objective"),
                format!("unknown objective `{other}` (expected quadratic, rosenbrock or lqr)"),
            ))
        }
    };
    let d = objective.dim();
    if let (Some(dd), ObjectiveSpec::Lqr { .. }) = (dim, &objective) {
        if dd != d {
            return Err(Error::config(e.line("dim"), format!("lqr dimension is d_state*d_ctrl = {d}, got dim={dd}")));
        }
    }

    let lipschitz = e.get("lipschitz", positive)?;
    let noise = match (e.get("noise.sigma", number)?, e.get("noise.k", integer)?) {
        (None, None) => None,
        (sigma, k) => {
            let spec = NoiseSpec { sigma: sigma.unwrap_or(0.0), k: k.unwrap_or(1) as usize };
            spec.validate()
                .map_err(|err| Error::config(e.line("noise.sigma").min(e.line("noise.k")), err.to_string()))?;
            Some(spec)
        }
    };

    let distribution = match e.get("distribution", |s| s.parse::<DistributionKind>().map_err(|e| e.to_string()))? {
        Some(k) => k,
        None if method == Method::SmtpIs => DistributionKind::CoordinateUniform,
        None => DistributionKind::UnitSphere,
    };
    if method == Method::SmtpIs && !distribution.is_coordinate() {
        return Err(Error::config(
            e.line("distribution").max(e.line("method")),
            format!("smtp_is samples coordinates; distribution `{distribution}` is not a coordinate law"),
        ));
    }
    let weight_spec = e.get("weights", weights)?.unwrap_or(WeightSpec::Uniform);
    if let WeightSpec::Values(w) = &weight_spec {
        if w.len() != d {
            return Err(Error::config(e.line("weights"), format!("weights: expected {d} entries, got {}", w.len())));
        }
    }
    let basis_seed = e.get("basis_seed", integer)?.unwrap_or(0);

    let (kind, is_name) = match e.raw("schedule.kind") {
        Some((line, v)) => ScheduleKind::parse(v)
            .ok_or_else(|| Error::config(line, format!("schedule.kind: unknown schedule `{v}`")))?,
        None => (ScheduleKind::Constant, false),
    };
    if is_name && method != Method::SmtpIs {
        return Err(Error::config(e.line("schedule.kind"), "importance-sampling schedules need method=smtp_is"));
    }
    let gamma = e.get("schedule.gamma", positive)?;
    let gamma0 = e.get("schedule.gamma0", tunable)?;
    match kind {
        ScheduleKind::Constant if gamma.is_none() => {
            return Err(Error::config(e.line("schedule.kind"), "constant schedule needs `schedule.gamma`"))
        }
        ScheduleKind::FixedHorizon if gamma0.is_none() => {
            return Err(Error::config(
                e.line("schedule.kind"),
                "fixed_horizon schedule needs `schedule.gamma0` (number or `optimal`)",
            ))
        }
        ScheduleKind::SolutionFree if distribution == DistributionKind::GaussianScaled => {
            return Err(Error::config(
                e.line("schedule.kind").max(e.line("distribution")),
                "solution_free stepsizes need unit-norm directions; gaussian is not",
            ))
        }
        _ => {}
    }
    let theta_k = match e.raw("schedule.theta_k") {
        Some((line, v)) => {
            let vals = list(v).map_err(|m| Error::config(line, format!("schedule.theta_k: {m}")))?;
            if vals.iter().any(|t| !(*t > 0.0 && *t < 2.0)) {
                return Err(Error::config(line, "schedule.theta_k entries must lie in (0,2)"));
            }
            if vals.len() == 1 {
                ThetaSequence::Constant(vals[0])
            } else {
                ThetaSequence::Values(vals)
            }
        }
        None => ThetaSequence::default(),
    };
    let w = e.get("schedule.w", weights)?.unwrap_or(WeightSpec::Lipschitz);
    if let WeightSpec::Values(v) = &w {
        if v.len() != d {
            return Err(Error::config(e.line("schedule.w"), format!("schedule.w: expected {d} entries, got {}", v.len())));
        }
    }
    let schedule = ScheduleSpec {
        kind,
        gamma,
        gamma0,
        alpha: e.get("schedule.alpha", tunable)?.unwrap_or(Tunable::Auto),
        theta: e.get("schedule.theta", positive)?,
        t: e.get("schedule.t", tunable)?.unwrap_or(Tunable::Auto),
        theta_k,
        r0: e.get("schedule.r0", tunable)?,
        w,
    };

    let seeds = e.get("seeds", seeds)?.unwrap_or_else(|| (0..DEFAULT_SEED_COUNT).collect());
    let max_iters = e.get("max_iters", integer)?.unwrap_or(DEFAULT_MAX_ITERS);
    let epsilon = e.get("epsilon", positive)?;
    let eval_budget = e.get("eval_budget", integer)?;
    let theorem = e.get("theorem", |s| s.parse::<TheoremId>().map_err(|e| e.to_string()))?;
    if let Some(t) = theorem {
        if t.is_importance() != (method == Method::SmtpIs) {
            return Err(Error::config(
                e.line("theorem"),
                format!("theorem {t} does not describe method {method}"),
            ));
        }
    }
    let x0 = e.get("x0", |s| vector(s, d))?;
    let output = e.get("output", |s| Ok(PathBuf::from(s)))?;

    Ok(ExperimentConfig {
        method,
        beta,
        objective,
        lipschitz,
        noise,
        distribution,
        weights: weight_spec,
        basis_seed,
        schedule,
        seeds,
        max_iters,
        epsilon,
        eval_budget,
        theorem,
        x0,
        output,
    })
}
