//! Experiment runner: turns a parsed configuration into seeded runs, writes one
//! CSV trace per seed plus a flat summary, and checks runs against the bound of
//! a chosen theorem.

mod config;
mod output;

pub use config::{
    parse_config, ExperimentConfig, ObjectiveSpec, ScheduleKind, ScheduleSpec, Tunable, WeightSpec,
    DEFAULT_BETA, DEFAULT_MAX_ITERS, DEFAULT_SEED_COUNT,
};
pub use output::{format_summary, format_trace_csv, trace_file_name, TRACE_HEADER};

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::diagnostics::{
    bound_envelope, compare_to_envelope, default_checkpoints, fit_linear_rate, mean_gap_curve,
    CheckpointVerdict, RateFit,
};
use crate::directions::{
    random_orthonormal_basis, DNorm, DirectionDistribution, DistributionConstants, DistributionKind,
    ProbabilityVector,
};
use crate::error::{Error, Result};
use crate::objectives::{wrap_noise, LqrRollout, Objective, Quadratic, Rosenbrock, SmoothnessInfo};
use crate::optimizers::{run, Method, RunOptions, RunTrace, Sampler, StopReason};
use crate::schedules::{
    decreasing_alpha, is_decreasing_alpha, is_optimal_gamma0, is_solution_free_t_max, optimal_gamma0,
    solution_free_t_max, ImportanceTerms, StepsizeSchedule, TheoremId, TheoremParams,
};

/// Seed-mean must stay within this factor of the envelope at every checkpoint.
pub const ENVELOPE_FACTOR: f64 = 1.05;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "SMTP_OUT_DIR";

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of RNG stream `stream` for user seed `seed`:
/// `splitmix64(seed ^ splitmix64(stream))`. Stream 0 drives directions, stream 1
/// observation noise. Each seed's streams depend on nothing else, so adding
/// seeds never perturbs existing runs.
pub fn stream_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

pub const DIRECTION_STREAM: u64 = 0;
pub const NOISE_STREAM: u64 = 1;

/// Builds the objective, wrapping it in observation noise when configured.
pub fn build_objective(config: &ExperimentConfig, seed: u64) -> Result<Box<dyn Objective>> {
    let base: Box<dyn Objective> = match &config.objective {
        ObjectiveSpec::Quadratic { coord_l, shift } => Box::new(Quadratic::new(coord_l.clone(), shift.clone())?),
        ObjectiveSpec::Rosenbrock { dim } => Box::new(Rosenbrock::new(*dim)?),
        ObjectiveSpec::Lqr { horizon, d_state, d_ctrl } => Box::new(LqrRollout::standard(*horizon, *d_state, *d_ctrl)?),
    };
    match config.noise {
        Some(spec) => {
            let rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, NOISE_STREAM));
            Ok(Box::new(wrap_noise(base, spec, rng)?))
        }
        None => Ok(base),
    }
}

fn default_x0(spec: &ObjectiveSpec) -> Vec<f64> {
    match spec {
        ObjectiveSpec::Quadratic { coord_l, .. } => vec![1.0; coord_l.len()],
        ObjectiveSpec::Rosenbrock { dim } => (0..*dim).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 }).collect(),
        ObjectiveSpec::Lqr { .. } => vec![0.0; spec.dim()],
    }
}

#[derive(Debug, Clone)]
pub enum PreparedSampler {
    Law(DirectionDistribution),
    Coordinates(ProbabilityVector),
}

impl PreparedSampler {
    pub fn as_sampler(&self) -> Sampler<'_> {
        match self {
            PreparedSampler::Law(d) => Sampler::Law(d),
            PreparedSampler::Coordinates(p) => Sampler::Coordinates(p),
        }
    }
}

/// Everything derived from a config before any run starts.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub x0: Vec<f64>,
    /// Objective metadata with the `lipschitz` override applied.
    pub info: SmoothnessInfo,
    /// Noise-free `f(x0)`.
    pub f0: f64,
    pub sampler: PreparedSampler,
    /// `gamma_D`, `mu_D` and the norm the theorems use for this sampler.
    pub constants: DistributionConstants,
    /// Strong convexity modulus with respect to the dual of that norm.
    pub mu_dual: Option<f64>,
    pub schedule: StepsizeSchedule,
    pub theorem_params: Option<TheoremParams>,
    pub warnings: Vec<String>,
}

fn resolve_weights(spec: &WeightSpec, info: &SmoothnessInfo, dim: usize) -> Result<Vec<f64>> {
    match spec {
        WeightSpec::Uniform => Ok(vec![1.0; dim]),
        WeightSpec::Lipschitz => info
            .coord_lipschitz
            .clone()
            .ok_or_else(|| Error::invalid("`lipschitz` weights need coordinate smoothness constants")),
        WeightSpec::Values(v) => Ok(v.clone()),
    }
}

fn probabilities(spec: &WeightSpec, info: &SmoothnessInfo, dim: usize) -> Result<ProbabilityVector> {
    match spec {
        WeightSpec::Uniform => ProbabilityVector::uniform(dim),
        other => ProbabilityVector::proportional(&resolve_weights(other, info, dim)?),
    }
}

fn need(v: Option<f64>, what: &'static str) -> Result<f64> {
    v.ok_or(Error::MissingParameter(what))
}

/// Validates the config against the objective and derives schedule and
/// theorem parameters. Does not run anything.
pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let dim = config.dim();
    let objective = build_objective(config, 0)?;
    let mut info = objective.smoothness().clone();
    if let Some(l) = config.lipschitz {
        info.lipschitz = Some(l);
    }
    let x0 = config.x0.clone().unwrap_or_else(|| default_x0(&config.objective));
    let f0 = {
        let mut clean = ExperimentConfig { noise: None, ..config.clone() };
        clean.seeds = vec![0];
        build_objective(&clean, 0)?.evaluate(&x0)
    };
    let gap = info.f_star.map(|fs| f0 - fs);
    let mut warnings = Vec::new();

    let (sampler, constants) = if config.method == Method::SmtpIs {
        let probs = match config.distribution {
            DistributionKind::CoordinateUniform => ProbabilityVector::uniform(dim)?,
            _ => probabilities(&config.weights, &info, dim)?,
        };
        let constants = DistributionConstants { gamma_d: 1.0, mu_d: 1.0, norm: DNorm::L1 { dim } };
        (PreparedSampler::Coordinates(probs), constants)
    } else {
        let dist = match config.distribution {
            DistributionKind::UnitSphere => DirectionDistribution::unit_sphere(dim)?,
            DistributionKind::GaussianScaled => DirectionDistribution::gaussian_scaled(dim)?,
            DistributionKind::CoordinateUniform => DirectionDistribution::coordinate_uniform(dim)?,
            DistributionKind::CoordinateWeighted => {
                DirectionDistribution::coordinate_weighted(probabilities(&config.weights, &info, dim)?)
            }
            DistributionKind::OrthonormalWeighted => {
                let mut rng = ChaCha8Rng::seed_from_u64(config.basis_seed);
                let basis = random_orthonormal_basis(dim, &mut rng);
                DirectionDistribution::orthonormal_weighted(probabilities(&config.weights, &info, dim)?, basis)?
            }
        };
        let constants = dist.constants();
        (PreparedSampler::Law(dist), constants)
    };

    // Strong convexity and level-set radii are measured in the dual of the
    // sampler's norm. L2 and L-infinity keep the Euclidean values; the weighted
    // dual max_i |<x,u_i>| / p_i is at most |x|_2 / min_i p_i.
    let min_weight = match &constants.norm {
        DNorm::WeightedL1 { weights, .. } => weights.iter().copied().fold(f64::INFINITY, f64::min),
        _ => 1.0,
    };
    let mu_dual = info.mu.map(|mu| mu * min_weight * min_weight);
    let r0_auto = || -> Result<f64> {
        let g = need(gap, "f_star")?;
        let mu = need(info.mu, "mu")?;
        Ok((2.0 * g / mu).sqrt() / min_weight)
    };
    let r0 = match config.schedule.r0 {
        Some(Tunable::Value(r)) => Some(r),
        Some(Tunable::Auto) => Some(r0_auto()?),
        None => None,
    };

    let spec = &config.schedule;
    let beta = config.beta;
    let is = config.method == Method::SmtpIs;
    let probs_vec: Option<Vec<f64>> = match &sampler {
        PreparedSampler::Coordinates(p) => Some(p.as_slice().to_vec()),
        PreparedSampler::Law(d) => d.coordinate_probabilities().map(|p| p.as_slice().to_vec()),
    };
    let is_weights = if is { Some(resolve_weights(&spec.w, &info, dim)?) } else { None };
    let terms = || -> Result<ImportanceTerms> {
        let p = probs_vec.as_ref().ok_or(Error::MissingParameter("probs"))?;
        let l = info.coord_lipschitz.as_ref().ok_or(Error::MissingParameter("coord_lipschitz"))?;
        Ok(ImportanceTerms::new(p, is_weights.as_ref().unwrap(), l))
    };
    let lipschitz = info.lipschitz;

    let mut theta_decreasing = None;
    let mut gamma_const = None;
    let mut t_used = None;
    let schedule = match spec.kind {
        ScheduleKind::Constant => {
            let gamma = spec.gamma.ok_or(Error::MissingParameter("schedule.gamma"))?;
            gamma_const = Some(gamma);
            if is {
                StepsizeSchedule::IsConstant { gamma, weights: is_weights.clone().unwrap() }
            } else {
                StepsizeSchedule::Constant { gamma }
            }
        }
        ScheduleKind::FixedHorizon => {
            let gamma0 = match spec.gamma0.ok_or(Error::MissingParameter("schedule.gamma0"))? {
                Tunable::Value(v) => v,
                Tunable::Auto if is => is_optimal_gamma0(beta, need(gap, "f_star")?, &terms()?),
                Tunable::Auto => {
                    optimal_gamma0(beta, need(gap, "f_star")?, need(lipschitz, "lipschitz")?, constants.gamma_d)
                }
            };
            let horizon = config.max_iters.max(1);
            let gamma = gamma0 / (horizon as f64).sqrt();
            gamma_const = Some(gamma);
            if is {
                StepsizeSchedule::IsConstant { gamma, weights: is_weights.clone().unwrap() }
            } else {
                StepsizeSchedule::FixedHorizon { gamma0, horizon }
            }
        }
        ScheduleKind::Decreasing => {
            let alpha = match spec.alpha {
                Tunable::Value(a) => a,
                Tunable::Auto => {
                    let r0 = r0.ok_or(Error::MissingParameter("schedule.r0"))?;
                    if is {
                        is_decreasing_alpha(&terms()?, beta, r0)
                    } else {
                        decreasing_alpha(constants.mu_d, beta, r0)
                    }
                }
            };
            let theta = spec.theta.unwrap_or(2.0 / alpha);
            theta_decreasing = Some(theta);
            if is {
                StepsizeSchedule::IsDecreasing { alpha, theta, weights: is_weights.clone().unwrap() }
            } else {
                StepsizeSchedule::Decreasing { alpha, theta }
            }
        }
        ScheduleKind::SolutionDependent => {
            let f_star = need(info.f_star, "f_star")?;
            let mu = need(mu_dual, "mu")?;
            if is {
                StepsizeSchedule::IsSolutionDependent {
                    theta_k: spec.theta_k.clone(),
                    mu,
                    probs: probs_vec.clone().unwrap(),
                    weights: is_weights.clone().unwrap(),
                    coord_lipschitz: info.coord_lipschitz.clone().ok_or(Error::MissingParameter("coord_lipschitz"))?,
                    f_star,
                    beta,
                }
            } else {
                StepsizeSchedule::SolutionDependent {
                    theta_k: spec.theta_k.clone(),
                    mu,
                    lipschitz: need(lipschitz, "lipschitz")?,
                    mu_d: constants.mu_d,
                    f_star,
                    beta,
                }
            }
        }
        ScheduleKind::SolutionFree => {
            let t = match spec.t {
                Tunable::Value(t) => t,
                Tunable::Auto => {
                    let eps = config.epsilon.ok_or(Error::MissingParameter("epsilon"))?;
                    let mu = need(info.mu, "mu")?;
                    if is {
                        let l = info.coord_lipschitz.as_ref().ok_or(Error::MissingParameter("coord_lipschitz"))?;
                        is_solution_free_t_max(eps, mu, probs_vec.as_ref().unwrap(), l)
                    } else {
                        solution_free_t_max(eps, constants.mu_d, need(mu_dual, "mu")?, need(lipschitz, "lipschitz")?)
                    }
                }
            };
            t_used = Some(t);
            if is {
                StepsizeSchedule::IsSolutionFree {
                    coord_lipschitz: info.coord_lipschitz.clone().ok_or(Error::MissingParameter("coord_lipschitz"))?,
                    t,
                    beta,
                }
            } else {
                let l = need(lipschitz, "lipschitz")?;
                if let Some(mu) = mu_dual {
                    if constants.mu_d * constants.mu_d > l / mu {
                        warnings.push(format!(
                            "mu_D^2 = {} exceeds L/mu = {}; the solution-free rate is not guaranteed",
                            constants.mu_d * constants.mu_d,
                            l / mu
                        ));
                    }
                }
                StepsizeSchedule::SolutionFree { lipschitz: l, t, beta }
            }
        }
    };
    schedule.validate()?;

    let theorem_params = config.theorem.map(|_| TheoremParams {
        gap,
        epsilon: config.epsilon,
        lipschitz,
        mu: mu_dual,
        gamma_d: Some(constants.gamma_d),
        mu_d: Some(constants.mu_d),
        r0,
        beta: Some(beta),
        theta_rate: Some(spec.theta_k.rate_theta(constants.gamma_d)),
        gamma: gamma_const,
        t: t_used,
        theta_decreasing,
        probs: probs_vec.clone(),
        weights: is_weights.clone(),
        coord_lipschitz: info.coord_lipschitz.clone(),
    });

    Ok(Prepared {
        config: config.clone(),
        x0,
        info,
        f0,
        sampler,
        constants,
        mu_dual,
        schedule,
        theorem_params,
        warnings,
    })
}

impl Prepared {
    /// One seeded run. Directions come from stream 0 of `seed`, noise from stream 1.
    pub fn run_seed(&self, seed: u64, options: &RunOptions) -> Result<RunTrace> {
        let mut objective = build_objective(&self.config, seed)?;
        let mut trace = run(
            self.config.method,
            &mut objective,
            self.sampler.as_sampler(),
            &self.schedule,
            self.config.beta,
            &self.x0,
            options,
            stream_seed(seed, DIRECTION_STREAM),
        )?;
        trace.seed = seed;
        Ok(trace)
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            max_iters: self.config.max_iters,
            epsilon_gap: self.config.epsilon.filter(|_| self.info.f_star.is_some()),
            eval_budget: self.config.eval_budget,
            retain_snapshots: false,
            retain_details: false,
            record_grad_norm: true,
            fingerprint: self.config.fingerprint(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub iterations: usize,
    pub evaluations: u64,
    pub final_value: f64,
    pub final_gap: Option<f64>,
    pub stop: StopReason,
    pub rate: Option<RateFit>,
    pub mean_grad_norm: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeReport {
    pub theorem: TheoremId,
    pub checkpoints: Vec<CheckpointVerdict>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub fingerprint: u64,
    pub seeds: Vec<SeedSummary>,
    pub envelope: Option<EnvelopeReport>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    pub trace_files: Vec<PathBuf>,
}

impl RunSummary {
    /// 0 on success, 2 when the envelope comparison failed.
    pub fn exit_code(&self) -> i32 {
        match &self.envelope {
            Some(e) if !e.pass => 2,
            _ => 0,
        }
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Checks the seed-mean trajectory against the configured theorem's bound.
/// Non-convex theorems compare the trace-average `||grad f||_D` at the final
/// iteration only, since their stepsize is tuned for that horizon.
pub fn envelope_report(prepared: &Prepared, traces: &[RunTrace]) -> Result<Option<EnvelopeReport>> {
    let (Some(theorem), Some(params)) = (prepared.config.theorem, prepared.theorem_params.as_ref()) else {
        return Ok(None);
    };
    let f_star = need(prepared.info.f_star, "f_star")?;
    let horizon = traces.iter().map(RunTrace::iterations).max().unwrap_or(0);
    if horizon == 0 {
        return Err(Error::invalid("envelope comparison needs at least one iteration"));
    }
    let envelope = bound_envelope(theorem, params, horizon)?;
    let checkpoints = if theorem.is_nonconvex() {
        let mut total = 0.0;
        for t in traces {
            total += t
                .mean_grad_norm()
                .ok_or_else(|| Error::invalid("non-convex envelope needs an objective with a gradient"))?;
        }
        let observed = total / traces.len() as f64;
        let bound = envelope.at(horizon);
        vec![CheckpointVerdict { k: horizon, observed, bound, pass: observed <= ENVELOPE_FACTOR * bound }]
    } else {
        let curve = mean_gap_curve(traces, f_star)?;
        compare_to_envelope(&curve.mean, &envelope, &default_checkpoints(horizon), ENVELOPE_FACTOR)
    };
    let pass = checkpoints.iter().all(|c| c.pass);
    Ok(Some(EnvelopeReport { theorem, checkpoints, pass }))
}

/// Runs every seed, writes `trace_seed<seed>.csv` files and `summary.txt` into
/// `out_dir`, and returns the summary.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path, jobs: Option<usize>) -> Result<RunSummary> {
    let start = Instant::now();
    let prepared = prepare(config)?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let options = prepared.run_options();
    let f_star = prepared.info.f_star;

    let results: Vec<Result<(RunTrace, SeedSummary, PathBuf)>> = with_pool(jobs, || {
        prepared
            .config
            .seeds
            .par_iter()
            .map(|&seed| {
                let t0 = Instant::now();
                let trace = prepared.run_seed(seed, &options)?;
                let path = out_dir.join(trace_file_name(seed));
                fs::write(&path, format_trace_csv(&trace)).map_err(io_err(&path))?;
                let rate = f_star.and_then(|fs| fit_linear_rate(&trace.values(), fs, None).ok());
                let summary = SeedSummary {
                    seed,
                    iterations: trace.iterations(),
                    evaluations: trace.evaluations(),
                    final_value: trace.final_value(),
                    final_gap: f_star.map(|fs| trace.final_value() - fs),
                    stop: trace.stop,
                    rate,
                    mean_grad_norm: trace.mean_grad_norm(),
                    wall_time_s: t0.elapsed().as_secs_f64(),
                };
                Ok((trace, summary, path))
            })
            .collect()
    })?;
    let mut traces = Vec::with_capacity(results.len());
    let mut seeds = Vec::with_capacity(results.len());
    let mut trace_files = Vec::with_capacity(results.len());
    for r in results {
        let (t, s, p) = r?;
        traces.push(t);
        seeds.push(s);
        trace_files.push(p);
    }
    let envelope = envelope_report(&prepared, &traces)?;
    let summary = RunSummary {
        fingerprint: prepared.config.fingerprint(),
        seeds,
        envelope,
        warnings: prepared.warnings.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        trace_files,
    };
    let path = out_dir.join("summary.txt");
    fs::write(&path, format_summary(&prepared.config, &summary)).map_err(io_err(&path))?;
    Ok(summary)
}

/// Evaluations-to-target statistics for one method over its seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub label: String,
    pub method: Method,
    pub beta: f64,
    pub distribution: DistributionKind,
    /// Pointwise over seeds; unreached runs count as infinity.
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub reached: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub target_gap: f64,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,method,beta,distribution,target_gap,median_evals,min_evals,max_evals,reached,runs\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.label,
                r.method,
                r.beta,
                r.distribution,
                self.target_gap,
                fmt_evals(r.median),
                fmt_evals(r.min),
                fmt_evals(r.max),
                r.reached,
                r.runs
            ));
        }
        out
    }
}

fn fmt_evals(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "inf".to_string()
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Runs each labelled config and tabulates how many evaluations every method
/// needs to reach the gap `epsilon` (taken from the first config). All configs
/// must share objective, noise and starting point.
pub fn compare_methods(configs: &[(String, ExperimentConfig)], jobs: Option<usize>) -> Result<ComparisonTable> {
    if configs.len() < 2 {
        return Err(Error::invalid("compare needs at least two configs"));
    }
    let prepared: Vec<Prepared> = configs.iter().map(|(_, c)| prepare(c)).collect::<Result<_>>()?;
    let first = &prepared[0];
    for (p, (label, _)) in prepared.iter().zip(configs).skip(1) {
        if p.config.objective != first.config.objective || p.config.noise != first.config.noise || p.x0 != first.x0 {
            return Err(Error::invalid(format!(
                "config `{label}` uses a different objective, noise model or starting point than `{}`",
                configs[0].0
            )));
        }
    }
    let target = first.config.epsilon.ok_or(Error::MissingParameter("epsilon"))?;
    let f_star = need(first.info.f_star, "f_star")?;

    let mut rows = Vec::with_capacity(prepared.len());
    for (p, (label, _)) in prepared.iter().zip(configs) {
        let mut options = p.run_options();
        options.epsilon_gap = Some(target);
        let evals: Vec<f64> = with_pool(jobs, || {
            p.config
                .seeds
                .par_iter()
                .map(|&seed| {
                    let t = p.run_seed(seed, &options)?;
                    Ok(t.evals_to_gap(f_star, target).map_or(f64::INFINITY, |e| e as f64))
                })
                .collect::<Result<Vec<f64>>>()
        })??;
        rows.push(ComparisonRow {
            label: label.clone(),
            method: p.config.method,
            beta: p.config.beta,
            distribution: p.config.distribution,
            median: median(&evals),
            min: evals.iter().copied().fold(f64::INFINITY, f64::min),
            max: evals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            reached: evals.iter().filter(|e| e.is_finite()).count(),
            runs: evals.len(),
        });
    }
    Ok(ComparisonTable { target_gap: target, rows })
}
