//! Theoretical envelopes, empirical rate fits and trace oracles.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2_sq};
use crate::objectives::Objective;
use crate::optimizers::RunTrace;
use crate::schedules::{TheoremId, TheoremParams};

/// Absolute tolerance below which a negative inequality slack counts as a violation.
pub const SLACK_TOLERANCE: f64 = 1e-10;

/// Per-iteration values `b_0, ..., b_K` of a theorem's bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundEnvelope {
    pub theorem: TheoremId,
    pub values: Vec<f64>,
    /// Per-step factor for the linear-rate theorems.
    pub contraction: Option<f64>,
    /// Additive term that does not decay with `k`.
    pub floor: f64,
    pub params: TheoremParams,
}

impl BoundEnvelope {
    pub fn at(&self, k: usize) -> f64 {
        self.values[k.min(self.values.len() - 1)]
    }
}

fn geometric(q: f64, gap: f64, floor: f64, horizon: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::OutOfRange(format!("contraction factor {q} lies outside [0,1]")));
    }
    Ok((0..=horizon).map(|k| q.powi(k as i32) * gap + floor).collect())
}

/// Evaluates the bound of `theorem` for `k = 0..=horizon`.
///
/// The non-convex bounds are on the expected dual gradient norm and are
/// undefined at `k = 0`; `b_0` is set to the initial gap there.
pub fn bound_envelope(theorem: TheoremId, params: &TheoremParams, horizon: usize) -> Result<BoundEnvelope> {
    let p = params;
    let gap = p.gap()?;
    let mut contraction = None;
    let mut floor = 0.0;
    let values = match theorem {
        TheoremId::Nc | TheoremId::IsNc => {
            let scale = if theorem == TheoremId::Nc {
                let l = p.pos(p.lipschitz, "lipschitz")?;
                let gd = p.pos(p.gamma_d, "gamma_d")?;
                let md = p.pos(p.mu_d, "mu_d")?;
                (2.0 * gap * l * gd).sqrt() / md
            } else {
                let t = p.importance()?;
                (2.0 * gap * t.weighted_l_sum).sqrt() / t.min_p_over_w
            };
            (0..=horizon)
                .map(|k| if k == 0 { gap } else { scale / (k as f64).sqrt() })
                .collect()
        }
        TheoremId::CvxConst | TheoremId::IsCvxConst => {
            let gamma = p.pos(p.gamma, "gamma")?;
            let r0 = p.pos(p.r0, "r0")?;
            let b = p.beta()?;
            let (m, s) = if theorem == TheoremId::CvxConst {
                let l = p.pos(p.lipschitz, "lipschitz")?;
                let gd = p.pos(p.gamma_d, "gamma_d")?;
                (p.pos(p.mu_d, "mu_d")?, l * gd)
            } else {
                let t = p.importance()?;
                (t.min_p_over_w, t.weighted_l_sum)
            };
            let q = 1.0 - gamma * m / ((1.0 - b) * r0);
            floor = gamma * r0 * s / (2.0 * (1.0 - b) * m);
            contraction = Some(q);
            geometric(q, gap, floor, horizon)?
        }
        TheoremId::CvxDec | TheoremId::IsCvxDec => {
            let r0 = p.pos(p.r0, "r0")?;
            let b = p.beta()?;
            let theta = p.pos(p.theta_decreasing, "theta_decreasing")?;
            let (m, s) = if theorem == TheoremId::CvxDec {
                let l = p.pos(p.lipschitz, "lipschitz")?;
                let gd = p.pos(p.gamma_d, "gamma_d")?;
                (p.pos(p.mu_d, "mu_d")?, l * gd)
            } else {
                let t = p.importance()?;
                (t.min_p_over_w, t.weighted_l_sum)
            };
            let alpha = m / ((1.0 - b) * r0);
            if theta < 2.0 / alpha * (1.0 - 1e-12) {
                return Err(Error::OutOfRange(format!("theta must be >= 2/alpha = {}", 2.0 / alpha)));
            }
            let eta = alpha / theta;
            let c = gap.max(2.0 * s / (alpha * theta * (1.0 - b).powi(2)));
            (0..=horizon).map(|k| c / (eta * k as f64 + 1.0)).collect()
        }
        TheoremId::ScDep | TheoremId::IsScDep => {
            let mu = p.pos(p.mu, "mu")?;
            let theta = p.pos(p.theta_rate, "theta_rate")?;
            let q = if theorem == TheoremId::ScDep {
                let l = p.pos(p.lipschitz, "lipschitz")?;
                let md = p.pos(p.mu_d, "mu_d")?;
                1.0 - theta * md * md * mu / l
            } else {
                let t = p.importance()?;
                1.0 - theta * mu * t.min_p_over_w.powi(2) / t.weighted_l_sum
            };
            contraction = Some(q);
            geometric(q, gap, 0.0, horizon)?
        }
        TheoremId::ScFree | TheoremId::IsScFree => {
            let mu = p.pos(p.mu, "mu")?;
            let t = p.t.ok_or(Error::MissingParameter("t"))?;
            if t < 0.0 {
                return Err(Error::invalid("t must be >= 0"));
            }
            let q = if theorem == TheoremId::ScFree {
                let l = p.pos(p.lipschitz, "lipschitz")?;
                let md = p.pos(p.mu_d, "mu_d")?;
                floor = l * l * t * t / (8.0 * md * md * mu);
                1.0 - md * md * mu / l
            } else {
                let terms = p.importance_free()?;
                floor = t * t * terms.sum_pl / (8.0 * mu * terms.min_p_over_l);
                1.0 - mu * terms.min_p_over_l
            };
            contraction = Some(q);
            geometric(q, gap, floor, horizon)?
        }
    };
    Ok(BoundEnvelope { theorem, values, contraction, floor, params: params.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Linear,
    Sublinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub kind: RateKind,
    /// Per-step contraction for linear fits, exponent of `k` for sublinear ones.
    pub value: f64,
    pub r_squared: f64,
    pub points: usize,
    /// The gap hit exactly zero; the contraction is reported as 0.
    pub reached_zero: bool,
}

pub const MIN_FIT_POINTS: usize = 10;

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if ys.iter().all(|y| *y == ys[0]) {
        return (0.0, 1.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

fn gaps_after_burn_in(values: &[f64], f_star: f64, burn_in: Option<usize>) -> Result<(usize, Vec<f64>)> {
    let start = burn_in.unwrap_or(values.len() / 10);
    if values.len() < start + MIN_FIT_POINTS {
        return Err(Error::invalid(format!(
            "rate fit needs at least {MIN_FIT_POINTS} points after burn-in, got {}",
            values.len().saturating_sub(start)
        )));
    }
    let gaps: Vec<f64> = values[start..].iter().map(|v| v - f_star).collect();
    if let Some(g) = gaps.iter().find(|g| **g < 0.0) {
        return Err(Error::BelowOptimum { f_z: g + f_star, f_star });
    }
    Ok((start, gaps))
}

/// Least-squares fit of `ln(f_k - f*)` against `k` over `values[burn_in..]`
/// (default burn-in: first 10%).
pub fn fit_linear_rate(values: &[f64], f_star: f64, burn_in: Option<usize>) -> Result<RateFit> {
    let (start, gaps) = gaps_after_burn_in(values, f_star, burn_in)?;
    let points = gaps.len();
    if gaps.contains(&0.0) {
        return Ok(RateFit { kind: RateKind::Linear, value: 0.0, r_squared: f64::NAN, points, reached_zero: true });
    }
    let xs: Vec<f64> = (start..start + points).map(|k| k as f64).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let (slope, r_squared) = least_squares(&xs, &ys);
    Ok(RateFit { kind: RateKind::Linear, value: slope.exp(), r_squared, points, reached_zero: false })
}

/// Least-squares fit of `ln(f_k - f*)` against `ln k`; `value` is the exponent.
pub fn fit_sublinear_rate(values: &[f64], f_star: f64, burn_in: Option<usize>) -> Result<RateFit> {
    let (start, gaps) = gaps_after_burn_in(values, f_star, burn_in.or(Some((values.len() / 10).max(1))))?;
    let points = gaps.len();
    if gaps.contains(&0.0) {
        return Ok(RateFit {
            kind: RateKind::Sublinear,
            value: f64::NEG_INFINITY,
            r_squared: f64::NAN,
            points,
            reached_zero: true,
        });
    }
    let start = start.max(1);
    let xs: Vec<f64> = (start..start + points).map(|k| (k as f64).ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let (slope, r_squared) = least_squares(&xs, &ys);
    Ok(RateFit { kind: RateKind::Sublinear, value: slope, r_squared, points, reached_zero: false })
}

/// Smoothness constants for the per-step inequality.
#[derive(Debug, Clone, PartialEq)]
pub enum LipschitzSpec {
    /// Global `L`: `f(z') <= f(z) - g/(1-b) |<grad, s>| + L g^2 |s|^2 / (2 (1-b)^2)`.
    Global(f64),
    /// Coordinate `L_i` for coordinate steps: uses `|grad_i|` and `L_i`.
    Coordinate(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViolationReport {
    pub checked: usize,
    /// `(k, slack)` with `slack < -SLACK_TOLERANCE`, inside the certified domain.
    pub violations: Vec<(u64, f64)>,
    /// Steps that left the region where `L` is certified.
    pub out_of_domain: Vec<(u64, f64)>,
    pub min_slack: f64,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Recomputes the one-step descent inequality for every retained step.
pub fn verify_trace_inequalities<O: Objective + ?Sized>(
    trace: &RunTrace,
    objective: &O,
    lipschitz: &LipschitzSpec,
) -> Result<ViolationReport> {
    let details = trace.details.as_ref().ok_or(Error::NotRetained("step details"))?;
    let info = objective.smoothness();
    let mut report = ViolationReport { min_slack: f64::INFINITY, ..Default::default() };
    for d in details {
        let g = objective
            .gradient(&d.z_before)
            .ok_or_else(|| Error::invalid("trace oracle needs an analytic gradient"))?;
        let scale = 1.0 - d.beta;
        let (inner, l, s_sq) = match lipschitz {
            LipschitzSpec::Global(l) => (dot(&g, &d.direction).abs(), *l, norm2_sq(&d.direction)),
            LipschitzSpec::Coordinate(ls) => {
                let i = d.direction_index.ok_or(Error::MissingParameter("direction_index"))?;
                (g[i].abs(), ls[i], 1.0)
            }
        };
        let rhs = d.f_z_before - d.gamma / scale * inner + l * d.gamma * d.gamma * s_sq / (2.0 * scale * scale);
        let lhs = d.f_z_before.min(d.f_plus).min(d.f_minus);
        let slack = rhs - lhs;
        report.checked += 1;
        report.min_slack = report.min_slack.min(slack);
        if slack < -SLACK_TOLERANCE {
            let inside = [&d.z_before, &d.z_plus, &d.z_minus].iter().all(|x| info.in_valid_box(x));
            if inside {
                report.violations.push((d.k, slack));
            } else {
                report.out_of_domain.push((d.k, slack));
            }
        }
    }
    Ok(report)
}

/// Largest relative error `|fd_i - g_i| / max(|g_i|, 1)` between central
/// differences and the analytic gradient at `n_points` random points, drawn
/// from the objective's certified box or `[-1, 1]^d`.
pub fn finite_diff_gradient_check<O: Objective + ?Sized, R: Rng + ?Sized>(
    objective: &mut O,
    n_points: usize,
    h: f64,
    rng: &mut R,
) -> Result<f64> {
    let (lo, hi) = objective.smoothness().valid_box.unwrap_or((-1.0, 1.0));
    let d = objective.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..n_points {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(lo..hi)).collect();
        let g = objective
            .gradient(&x)
            .ok_or_else(|| Error::invalid("objective has no analytic gradient"))?;
        for i in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (objective.evaluate(&xp) - objective.evaluate(&xm)) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / g[i].abs().max(1.0));
        }
    }
    Ok(worst)
}

/// Seed-averaged gap curve `k -> mean_s (f_s(z^k) - f*)`; runs that stopped
/// early are held at their final value.
#[derive(Debug, Clone, PartialEq)]
pub struct GapCurve {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

pub fn mean_gap_curve(traces: &[RunTrace], f_star: f64) -> Result<GapCurve> {
    if traces.is_empty() {
        return Err(Error::invalid("no traces to average"));
    }
    let curves: Vec<Vec<f64>> = traces.iter().map(|t| t.values()).collect();
    let len = curves.iter().map(Vec::len).max().unwrap_or(0);
    let n = traces.len() as f64;
    let mut mean = Vec::with_capacity(len);
    let mut std_error = Vec::with_capacity(len);
    for k in 0..len {
        let vals: Vec<f64> = curves.iter().map(|c| c[k.min(c.len() - 1)] - f_star).collect();
        let m = vals.iter().sum::<f64>() / n;
        let var = if traces.len() > 1 {
            vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        std_error.push((var / n).sqrt());
    }
    Ok(GapCurve { mean, std_error })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointVerdict {
    pub k: usize,
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Compares `observed[k]` against `factor * envelope[k]` at each checkpoint.
pub fn compare_to_envelope(
    observed: &[f64],
    envelope: &BoundEnvelope,
    checkpoints: &[usize],
    factor: f64,
) -> Vec<CheckpointVerdict> {
    checkpoints
        .iter()
        .map(|&k| {
            let o = observed[k.min(observed.len() - 1)];
            let b = envelope.at(k);
            CheckpointVerdict { k, observed: o, bound: b, pass: o <= factor * b }
        })
        .collect()
}

/// `K/4, K/2, K`, deduplicated, with `K >= 1`.
pub fn default_checkpoints(horizon: usize) -> Vec<usize> {
    let mut c = vec![horizon / 4, horizon / 2, horizon];
    c.retain(|k| *k > 0);
    c.dedup();
    c
}
