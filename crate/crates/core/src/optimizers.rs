//! SMTP (three points with heavy-ball momentum), its importance-sampling
//! coordinate variant SMTP_IS, and the momentum-free STP baseline.
//!
//! Each iteration samples a direction `s`, forms the two momentum candidates
//!
//! ```text
//! v± = beta v ± s,   x± = x - gamma v±,   z± = x± - gamma beta / (1 - beta) v±
//! ```
//!
//! and keeps the best of `f(z)`, `f(z+)`, `f(z-)`. Ties resolve as
//! stay > plus > minus, so a candidate is only taken on strict improvement.
//!
//! When the stepsize changes between accepted moves, `x` is re-anchored to
//! `z + gamma beta / (1 - beta) v` before the candidates are formed. With a
//! constant stepsize this is exactly the stored `x`; with a varying one it keeps
//! `z± = z ∓ gamma / (1 - beta) s`, the form every convergence bound relies on.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::directions::{unit_vector, DNorm, DirectionDistribution, ProbabilityVector};
use crate::error::{check_dim, Error, Result};
use crate::linalg::norm1;
use crate::objectives::Objective;
use crate::schedules::{StepContext, StepsizeSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
    Stay,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
            Branch::Stay => "stay",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Stp,
    Smtp,
    SmtpIs,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Stp => "stp",
            Method::Smtp => "smtp",
            Method::SmtpIs => "smtp_is",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "stp" => Ok(Method::Stp),
            "smtp" => Ok(Method::Smtp),
            "smtp_is" => Ok(Method::SmtpIs),
            other => Err(Error::invalid(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub x: Vec<f64>,
    /// Momentum buffer `v^{k-1}`.
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    /// Cached `f(z)`; never re-evaluated.
    pub f_z: f64,
    pub k: u64,
    pub beta: f64,
    /// Stepsize of the last accepted move.
    pub last_gamma: Option<f64>,
    evals_base: u64,
}

impl OptimizerState {
    /// Evaluates `f(x0)` (one evaluation) and sets `v = 0`, `z = x = x0`.
    pub fn new<O: Objective + ?Sized>(objective: &mut O, x0: &[f64], beta: f64) -> Result<Self> {
        check_dim(objective.dim(), x0.len())?;
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::invalid(format!("beta must lie in [0,1), got {beta}")));
        }
        let evals_base = objective.evaluations();
        let f_z = objective.evaluate(x0);
        if !f_z.is_finite() {
            return Err(Error::NonFinite { k: 0, value: f_z });
        }
        Ok(OptimizerState {
            x: x0.to_vec(),
            v: vec![0.0; x0.len()],
            z: x0.to_vec(),
            f_z,
            k: 0,
            beta,
            last_gamma: None,
            evals_base,
        })
    }

    /// Evaluations charged since construction, including `f(x0)`.
    pub fn evaluations<O: Objective + ?Sized>(&self, objective: &O) -> u64 {
        objective.evaluations() - self.evals_base
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: u64,
    /// `f(z^{k+1})`.
    pub f_z_after: f64,
    pub gamma: f64,
    pub branch: Branch,
    pub evals_cumulative: u64,
    /// `||grad f(z^k)||_D` before the step, when the objective has a gradient.
    pub grad_norm_d: Option<f64>,
    /// Sampled coordinate `i_k` for the discrete laws.
    pub direction_index: Option<usize>,
}

/// Internals of one iteration, for the trace oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDetail {
    pub k: u64,
    pub beta: f64,
    pub z_before: Vec<f64>,
    pub f_z_before: f64,
    pub direction: Vec<f64>,
    pub direction_index: Option<usize>,
    pub gamma: f64,
    pub probe_value: Option<f64>,
    pub z_plus: Vec<f64>,
    pub z_minus: Vec<f64>,
    pub f_plus: f64,
    pub f_minus: f64,
    pub branch: Branch,
    pub x_after: Vec<f64>,
    pub v_after: Vec<f64>,
    pub z_after: Vec<f64>,
    /// Stepsize tying `z`, `x` and `v` together after the step.
    pub anchor_gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub record: IterationRecord,
    pub detail: StepDetail,
}

fn check_finite(k: u64, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { k, value })
    }
}

fn choose(f_z: f64, f_plus: f64, f_minus: f64) -> Branch {
    if f_plus < f_z && f_plus <= f_minus {
        Branch::Plus
    } else if f_minus < f_z && f_minus < f_plus {
        Branch::Minus
    } else {
        Branch::Stay
    }
}

fn probe<O: Objective + ?Sized>(
    state: &OptimizerState,
    objective: &mut O,
    schedule: &StepsizeSchedule,
    s: &[f64],
) -> Result<Option<f64>> {
    match schedule.probe_distance() {
        Some(t) => {
            let p: Vec<f64> = state.z.iter().zip(s).map(|(z, s)| z + t * s).collect();
            Ok(Some(check_finite(state.k, objective.evaluate(&p))?))
        }
        None => Ok(None),
    }
}

/// One momentum three-point iteration along a given direction.
fn momentum_step<O: Objective + ?Sized>(
    state: &mut OptimizerState,
    objective: &mut O,
    schedule: &StepsizeSchedule,
    s: Vec<f64>,
    index: Option<usize>,
) -> Result<Step> {
    let k = state.k;
    let beta = state.beta;
    let probe_value = probe(state, objective, schedule, &s)?;
    let ctx = StepContext { k, f_z: state.f_z, probe_value, direction_index: index, direction: &s };
    let gamma = schedule.stepsize(&ctx)?;

    let c = gamma * beta / (1.0 - beta);
    let anchor: Vec<f64> = match state.last_gamma {
        Some(g) if g != gamma && beta > 0.0 => {
            state.z.iter().zip(&state.v).map(|(z, v)| z + c * v).collect()
        }
        _ => state.x.clone(),
    };
    let candidate = |sign: f64| {
        let v: Vec<f64> = state.v.iter().zip(&s).map(|(v, s)| beta * v + sign * s).collect();
        let x: Vec<f64> = anchor.iter().zip(&v).map(|(x, v)| x - gamma * v).collect();
        let z: Vec<f64> = x.iter().zip(&v).map(|(x, v)| x - c * v).collect();
        (v, x, z)
    };
    let (v_plus, x_plus, z_plus) = candidate(1.0);
    let (v_minus, x_minus, z_minus) = candidate(-1.0);
    let f_plus = check_finite(k, objective.evaluate(&z_plus))?;
    let f_minus = check_finite(k, objective.evaluate(&z_minus))?;

    let z_before = state.z.clone();
    let f_z_before = state.f_z;
    let branch = choose(state.f_z, f_plus, f_minus);
    match branch {
        Branch::Plus => {
            state.x = x_plus;
            state.v = v_plus;
            state.z = z_plus.clone();
            state.f_z = f_plus;
            state.last_gamma = Some(gamma);
        }
        Branch::Minus => {
            state.x = x_minus;
            state.v = v_minus;
            state.z = z_minus.clone();
            state.f_z = f_minus;
            state.last_gamma = Some(gamma);
        }
        Branch::Stay => {}
    }
    state.k += 1;
    Ok(Step {
        record: IterationRecord {
            k,
            f_z_after: state.f_z,
            gamma,
            branch,
            evals_cumulative: state.evaluations(objective),
            grad_norm_d: None,
            direction_index: index,
        },
        detail: StepDetail {
            k,
            beta,
            z_before,
            f_z_before,
            direction: s,
            direction_index: index,
            gamma,
            probe_value,
            z_plus,
            z_minus,
            f_plus,
            f_minus,
            branch,
            x_after: state.x.clone(),
            v_after: state.v.clone(),
            z_after: state.z.clone(),
            anchor_gamma: state.last_gamma,
        },
    })
}

/// One SMTP iteration with `s ~ dist`.
pub fn smtp_step<O: Objective + ?Sized, R: Rng + ?Sized>(
    state: &mut OptimizerState,
    objective: &mut O,
    dist: &DirectionDistribution,
    schedule: &StepsizeSchedule,
    rng: &mut R,
) -> Result<Step> {
    check_dim(state.z.len(), dist.dim())?;
    let (s, index) = dist.sample_with_index(rng);
    momentum_step(state, objective, schedule, s, index)
}

/// One SMTP_IS iteration: `s = e_i` with `i ~ probs`, stepsize from an
/// importance-sampling rule.
pub fn smtp_is_step<O: Objective + ?Sized, R: Rng + ?Sized>(
    state: &mut OptimizerState,
    objective: &mut O,
    schedule: &StepsizeSchedule,
    probs: &ProbabilityVector,
    rng: &mut R,
) -> Result<Step> {
    check_dim(state.z.len(), probs.len())?;
    let i = probs.sample_index(rng);
    momentum_step(state, objective, schedule, unit_vector(probs.len(), i), Some(i))
}

/// One STP iteration: candidates `z - gamma s` (plus, evaluated first) and `z + gamma s`.
pub fn stp_step<O: Objective + ?Sized, R: Rng + ?Sized>(
    state: &mut OptimizerState,
    objective: &mut O,
    dist: &DirectionDistribution,
    schedule: &StepsizeSchedule,
    rng: &mut R,
) -> Result<Step> {
    check_dim(state.z.len(), dist.dim())?;
    if state.beta != 0.0 {
        return Err(Error::invalid("STP has no momentum; beta must be 0"));
    }
    let k = state.k;
    let (s, index) = dist.sample_with_index(rng);
    let probe_value = probe(state, objective, schedule, &s)?;
    let ctx = StepContext { k, f_z: state.f_z, probe_value, direction_index: index, direction: &s };
    let gamma = schedule.stepsize(&ctx)?;
    let z_plus: Vec<f64> = state.z.iter().zip(&s).map(|(z, s)| z - gamma * s).collect();
    let z_minus: Vec<f64> = state.z.iter().zip(&s).map(|(z, s)| z + gamma * s).collect();
    let f_plus = check_finite(k, objective.evaluate(&z_plus))?;
    let f_minus = check_finite(k, objective.evaluate(&z_minus))?;
    let z_before = state.z.clone();
    let f_z_before = state.f_z;
    let branch = choose(state.f_z, f_plus, f_minus);
    match branch {
        Branch::Plus => {
            state.z = z_plus.clone();
            state.f_z = f_plus;
        }
        Branch::Minus => {
            state.z = z_minus.clone();
            state.f_z = f_minus;
        }
        Branch::Stay => {}
    }
    if branch != Branch::Stay {
        state.x = state.z.clone();
        state.last_gamma = Some(gamma);
    }
    state.k += 1;
    Ok(Step {
        record: IterationRecord {
            k,
            f_z_after: state.f_z,
            gamma,
            branch,
            evals_cumulative: state.evaluations(objective),
            grad_norm_d: None,
            direction_index: index,
        },
        detail: StepDetail {
            k,
            beta: 0.0,
            z_before,
            f_z_before,
            direction: s,
            direction_index: index,
            gamma,
            probe_value,
            z_plus,
            z_minus,
            f_plus,
            f_minus,
            branch,
            x_after: state.x.clone(),
            v_after: state.v.clone(),
            z_after: state.z.clone(),
            anchor_gamma: state.last_gamma,
        },
    })
}

/// Where directions come from in a run.
#[derive(Debug, Clone, Copy)]
pub enum Sampler<'a> {
    Law(&'a DirectionDistribution),
    Coordinates(&'a ProbabilityVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub max_iters: u64,
    /// Stop once `f(z) - f* <= epsilon_gap` (needs `f*`).
    pub epsilon_gap: Option<f64>,
    /// Stop before any step that would start with this many evaluations spent.
    pub eval_budget: Option<u64>,
    /// Keep `z^0, ..., z^{K-1}` for uniform iterate selection.
    pub retain_snapshots: bool,
    /// Keep a [`StepDetail`] per iteration.
    pub retain_details: bool,
    /// Record `||grad f(z^k)||_D` when the objective has a gradient.
    pub record_grad_norm: bool,
    pub fingerprint: u64,
}

impl RunOptions {
    pub fn iterations(max_iters: u64) -> Self {
        RunOptions {
            max_iters,
            epsilon_gap: None,
            eval_budget: None,
            retain_snapshots: false,
            retain_details: false,
            record_grad_norm: true,
            fingerprint: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    MaxIters,
    Converged,
    EvalBudget,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxIters => "max_iters",
            StopReason::Converged => "converged",
            StopReason::EvalBudget => "eval_budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub method: Method,
    pub records: Vec<IterationRecord>,
    pub x0: Vec<f64>,
    pub f0: f64,
    pub final_state: OptimizerState,
    pub stop: StopReason,
    pub fingerprint: u64,
    pub seed: u64,
    pub snapshots: Option<Vec<Vec<f64>>>,
    pub details: Option<Vec<StepDetail>>,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Final `f(z)`.
    pub fn final_value(&self) -> f64 {
        self.final_state.f_z
    }

    /// Total evaluations, including `f(x0)`.
    pub fn evaluations(&self) -> u64 {
        self.records.last().map_or(1, |r| r.evals_cumulative)
    }

    /// `f(z^0), f(z^1), ..., f(z^K)`.
    pub fn values(&self) -> Vec<f64> {
        std::iter::once(self.f0).chain(self.records.iter().map(|r| r.f_z_after)).collect()
    }

    /// Evaluations spent when the gap first dropped to `target`, if ever.
    pub fn evals_to_gap(&self, f_star: f64, target: f64) -> Option<u64> {
        if self.f0 - f_star <= target {
            return Some(1);
        }
        self.records
            .iter()
            .find(|r| r.f_z_after - f_star <= target)
            .map(|r| r.evals_cumulative)
    }

    /// Mean of the recorded `||grad f(z^k)||_D`, if every record has one.
    pub fn mean_grad_norm(&self) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        let sum: Option<f64> = self.records.iter().map(|r| r.grad_norm_d).sum();
        sum.map(|s| s / self.records.len() as f64)
    }
}

/// Runs SMTP from `x0`. The RNG is `ChaCha8Rng::seed_from_u64(seed)`.
pub fn smtp_run<O: Objective + ?Sized>(
    objective: &mut O,
    dist: &DirectionDistribution,
    schedule: &StepsizeSchedule,
    beta: f64,
    x0: &[f64],
    options: &RunOptions,
    seed: u64,
) -> Result<RunTrace> {
    run(Method::Smtp, objective, Sampler::Law(dist), schedule, beta, x0, options, seed)
}

pub fn smtp_is_run<O: Objective + ?Sized>(
    objective: &mut O,
    probs: &ProbabilityVector,
    schedule: &StepsizeSchedule,
    beta: f64,
    x0: &[f64],
    options: &RunOptions,
    seed: u64,
) -> Result<RunTrace> {
    run(Method::SmtpIs, objective, Sampler::Coordinates(probs), schedule, beta, x0, options, seed)
}

pub fn stp_run<O: Objective + ?Sized>(
    objective: &mut O,
    dist: &DirectionDistribution,
    schedule: &StepsizeSchedule,
    x0: &[f64],
    options: &RunOptions,
    seed: u64,
) -> Result<RunTrace> {
    run(Method::Stp, objective, Sampler::Law(dist), schedule, 0.0, x0, options, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn run<O: Objective + ?Sized>(
    method: Method,
    objective: &mut O,
    sampler: Sampler<'_>,
    schedule: &StepsizeSchedule,
    beta: f64,
    x0: &[f64],
    options: &RunOptions,
    seed: u64,
) -> Result<RunTrace> {
    schedule.validate()?;
    if let Some(b) = schedule.beta() {
        if b != beta {
            return Err(Error::invalid(format!(
                "schedule was built for beta = {b} but the run uses beta = {beta}"
            )));
        }
    }
    let norm: DNorm = match (method, sampler) {
        (Method::SmtpIs, Sampler::Coordinates(p)) => DNorm::L1 { dim: p.len() },
        (Method::SmtpIs, Sampler::Law(_)) => {
            return Err(Error::invalid("smtp_is samples coordinates; pass a probability vector"))
        }
        (_, Sampler::Law(d)) => d.constants().norm,
        (_, Sampler::Coordinates(_)) => {
            return Err(Error::invalid("stp and smtp need a direction distribution"))
        }
    };
    let f_star = objective.smoothness().f_star;
    if options.epsilon_gap.is_some() && f_star.is_none() {
        return Err(Error::MissingParameter("f_star"));
    }
    let converged = |f: f64| match (options.epsilon_gap, f_star) {
        (Some(eps), Some(fs)) => f - fs <= eps,
        _ => false,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = OptimizerState::new(objective, x0, beta)?;
    let f0 = state.f_z;
    let mut records = Vec::with_capacity(options.max_iters.min(1 << 20) as usize);
    let mut snapshots = options.retain_snapshots.then(Vec::new);
    let mut details = options.retain_details.then(Vec::new);
    let mut stop = StopReason::MaxIters;

    if converged(state.f_z) {
        stop = StopReason::Converged;
    } else {
        for _ in 0..options.max_iters {
            if let Some(budget) = options.eval_budget {
                if state.evaluations(objective) >= budget {
                    stop = StopReason::EvalBudget;
                    break;
                }
            }
            let grad_norm_d = if options.record_grad_norm {
                match objective.gradient(&state.z) {
                    Some(g) => Some(match norm {
                        DNorm::L1 { .. } => norm1(&g),
                        _ => norm.eval(&g)?,
                    }),
                    None => None,
                }
            } else {
                None
            };
            if let Some(s) = snapshots.as_mut() {
                s.push(state.z.clone());
            }
            let mut step = match (method, sampler) {
                (Method::Stp, Sampler::Law(d)) => stp_step(&mut state, objective, d, schedule, &mut rng)?,
                (Method::Smtp, Sampler::Law(d)) => smtp_step(&mut state, objective, d, schedule, &mut rng)?,
                (Method::SmtpIs, Sampler::Coordinates(p)) => {
                    smtp_is_step(&mut state, objective, schedule, p, &mut rng)?
                }
                _ => unreachable!("sampler checked above"),
            };
            step.record.grad_norm_d = grad_norm_d;
            records.push(step.record);
            if let Some(d) = details.as_mut() {
                d.push(step.detail);
            }
            if converged(state.f_z) {
                stop = StopReason::Converged;
                break;
            }
        }
    }

    Ok(RunTrace {
        method,
        records,
        x0: x0.to_vec(),
        f0,
        final_state: state,
        stop,
        fingerprint: options.fingerprint,
        seed,
        snapshots,
        details,
    })
}

/// Picks `z^k` uniformly from `z^0, ..., z^{K-1}`.
pub fn select_uniform_random_iterate<'a, R: Rng + ?Sized>(
    trace: &'a RunTrace,
    rng: &mut R,
) -> Result<&'a [f64]> {
    let snaps = trace.snapshots.as_ref().ok_or(Error::NotRetained("z snapshots"))?;
    if snaps.is_empty() {
        return Err(Error::invalid("trace has no iterations"));
    }
    Ok(&snaps[rng.random_range(0..snaps.len())])
}
