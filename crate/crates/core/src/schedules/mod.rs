//! Stepsize rules for SMTP and SMTP_IS, plus iteration-count calculators.
//!
//! [`StepsizeSchedule::stepsize`] is a pure function of the schedule and the
//! [`StepContext`] assembled by the optimizer for the current iteration.

mod complexity;

pub use complexity::{
    ceil_count, decreasing_alpha, is_decreasing_alpha, is_optimal_gamma0,
    is_solution_free_t_max, optimal_gamma0, required_iterations, solution_free_t_max,
    ImportanceTerms, TheoremId, TheoremParams,
};

use crate::error::{Error, Result};
use crate::linalg::norm2;

/// Tolerance on `||s||_2 = 1` for the solution-free rules.
const UNIT_NORM_TOL: f64 = 1e-9;

/// The `theta_k` sequence of the solution-dependent rules. `Values` repeats its
/// last entry past the end.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSequence {
    Constant(f64),
    Values(Vec<f64>),
}

impl Default for ThetaSequence {
    fn default() -> Self {
        ThetaSequence::Constant(1.0)
    }
}

impl ThetaSequence {
    pub fn at(&self, k: u64) -> f64 {
        match self {
            ThetaSequence::Constant(t) => *t,
            ThetaSequence::Values(v) => v[(k as usize).min(v.len() - 1)],
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            ThetaSequence::Constant(t) => std::slice::from_ref(t),
            ThetaSequence::Values(v) => v,
        }
    }

    /// `theta = inf_k (2 theta_k - gamma_D theta_k^2)`, the rate constant of the
    /// solution-dependent theorems.
    pub fn rate_theta(&self, gamma_d: f64) -> f64 {
        self.values()
            .iter()
            .map(|t| 2.0 * t - gamma_d * t * t)
            .fold(f64::INFINITY, f64::min)
    }

    fn validate(&self) -> Result<()> {
        if self.values().is_empty() {
            return Err(Error::invalid("theta_k sequence is empty"));
        }
        if let Some(t) = self.values().iter().find(|t| !(**t > 0.0 && **t < 2.0)) {
            return Err(Error::invalid(format!("theta_k must lie in (0, 2), got {t}")));
        }
        Ok(())
    }
}

/// Everything a stepsize rule may look at in iteration `k`.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a> {
    pub k: u64,
    /// `f(z^k)`.
    pub f_z: f64,
    /// `f(z^k + t s^k)`, present for the solution-free rules.
    pub probe_value: Option<f64>,
    /// Sampled coordinate `i_k`, present for the importance-sampling rules.
    pub direction_index: Option<usize>,
    pub direction: &'a [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepsizeSchedule {
    Constant {
        gamma: f64,
    },
    /// `gamma0 / sqrt(K)` for a run of fixed length `K`.
    FixedHorizon {
        gamma0: f64,
        horizon: u64,
    },
    /// `2 / (alpha k + theta)`.
    Decreasing {
        alpha: f64,
        theta: f64,
    },
    /// `(1 - beta) theta_k mu_D sqrt(2 mu (f(z^k) - f*)) / L`.
    SolutionDependent {
        theta_k: ThetaSequence,
        mu: f64,
        lipschitz: f64,
        mu_d: f64,
        f_star: f64,
        beta: f64,
    },
    /// `(1 - beta) |f(z^k + t s^k) - f(z^k)| / (L t)`.
    SolutionFree {
        lipschitz: f64,
        t: f64,
        beta: f64,
    },
    /// `gamma / w_{i_k}`.
    IsConstant {
        gamma: f64,
        weights: Vec<f64>,
    },
    /// `2 / (alpha k + theta) / w_{i_k}`.
    IsDecreasing {
        alpha: f64,
        theta: f64,
        weights: Vec<f64>,
    },
    /// `(1 - beta) theta_k min_i(p_i/w_i) sqrt(2 mu (f(z^k) - f*)) / (w_{i_k} sum_i L_i p_i / w_i^2)`.
    IsSolutionDependent {
        theta_k: ThetaSequence,
        mu: f64,
        probs: Vec<f64>,
        weights: Vec<f64>,
        coord_lipschitz: Vec<f64>,
        f_star: f64,
        beta: f64,
    },
    /// `(1 - beta) |f(z^k + t e_{i_k}) - f(z^k)| / (L_{i_k} t)`.
    IsSolutionFree {
        coord_lipschitz: Vec<f64>,
        t: f64,
        beta: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn all_positive(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{name} must be non-empty")));
    }
    v.iter().try_for_each(|x| positive(name, *x))
}

fn momentum(beta: f64) -> Result<()> {
    if (0.0..1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::invalid(format!("beta must lie in [0,1), got {beta}")))
    }
}

impl StepsizeSchedule {
    pub fn name(&self) -> &'static str {
        match self {
            StepsizeSchedule::Constant { .. } => "constant",
            StepsizeSchedule::FixedHorizon { .. } => "fixed_horizon",
            StepsizeSchedule::Decreasing { .. } => "decreasing",
            StepsizeSchedule::SolutionDependent { .. } => "solution_dependent",
            StepsizeSchedule::SolutionFree { .. } => "solution_free",
            StepsizeSchedule::IsConstant { .. } => "is_constant",
            StepsizeSchedule::IsDecreasing { .. } => "is_decreasing",
            StepsizeSchedule::IsSolutionDependent { .. } => "is_solution_dependent",
            StepsizeSchedule::IsSolutionFree { .. } => "is_solution_free",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StepsizeSchedule::Constant { gamma } => positive("gamma", *gamma),
            StepsizeSchedule::FixedHorizon { gamma0, horizon } => {
                positive("gamma0", *gamma0)?;
                if *horizon == 0 {
                    return Err(Error::invalid("fixed-horizon K must be >= 1"));
                }
                Ok(())
            }
            StepsizeSchedule::Decreasing { alpha, theta }
            | StepsizeSchedule::IsDecreasing { alpha, theta, .. } => {
                positive("alpha", *alpha)?;
                positive("theta", *theta)?;
                if *theta < 2.0 / alpha * (1.0 - 1e-12) {
                    return Err(Error::invalid(format!(
                        "decreasing stepsizes need theta >= 2/alpha = {}, got {theta}",
                        2.0 / alpha
                    )));
                }
                if let StepsizeSchedule::IsDecreasing { weights, .. } = self {
                    all_positive("w", weights)?;
                }
                Ok(())
            }
            StepsizeSchedule::SolutionDependent { theta_k, mu, lipschitz, mu_d, f_star, beta } => {
                theta_k.validate()?;
                positive("mu", *mu)?;
                positive("L", *lipschitz)?;
                positive("mu_D", *mu_d)?;
                momentum(*beta)?;
                if !f_star.is_finite() {
                    return Err(Error::invalid("f_star must be finite"));
                }
                Ok(())
            }
            StepsizeSchedule::SolutionFree { lipschitz, t, beta } => {
                positive("L", *lipschitz)?;
                positive("t", *t)?;
                momentum(*beta)
            }
            StepsizeSchedule::IsConstant { gamma, weights } => {
                positive("gamma", *gamma)?;
                all_positive("w", weights)
            }
            StepsizeSchedule::IsSolutionDependent {
                theta_k,
                mu,
                probs,
                weights,
                coord_lipschitz,
                beta,
                ..
            } => {
                theta_k.validate()?;
                positive("mu", *mu)?;
                all_positive("p", probs)?;
                all_positive("w", weights)?;
                all_positive("L_i", coord_lipschitz)?;
                if probs.len() != weights.len() || probs.len() != coord_lipschitz.len() {
                    return Err(Error::invalid("p, w and L_i must have the same length"));
                }
                momentum(*beta)
            }
            StepsizeSchedule::IsSolutionFree { coord_lipschitz, t, beta } => {
                all_positive("L_i", coord_lipschitz)?;
                positive("t", *t)?;
                momentum(*beta)
            }
        }
    }

    /// Whether the rule needs `f(z^k + t s^k)`; returns the probe distance `t`.
    pub fn probe_distance(&self) -> Option<f64> {
        match self {
            StepsizeSchedule::SolutionFree { t, .. }
            | StepsizeSchedule::IsSolutionFree { t, .. } => Some(*t),
            _ => None,
        }
    }

    pub fn is_importance(&self) -> bool {
        matches!(
            self,
            StepsizeSchedule::IsConstant { .. }
                | StepsizeSchedule::IsDecreasing { .. }
                | StepsizeSchedule::IsSolutionDependent { .. }
                | StepsizeSchedule::IsSolutionFree { .. }
        )
    }

    /// Momentum parameter baked into the rule, if any.
    pub fn beta(&self) -> Option<f64> {
        match self {
            StepsizeSchedule::SolutionDependent { beta, .. }
            | StepsizeSchedule::SolutionFree { beta, .. }
            | StepsizeSchedule::IsSolutionDependent { beta, .. }
            | StepsizeSchedule::IsSolutionFree { beta, .. } => Some(*beta),
            _ => None,
        }
    }

    pub fn stepsize(&self, ctx: &StepContext<'_>) -> Result<f64> {
        let k = ctx.k as f64;
        match self {
            StepsizeSchedule::Constant { gamma } => Ok(*gamma),
            StepsizeSchedule::FixedHorizon { gamma0, horizon } => {
                Ok(gamma0 / (*horizon as f64).sqrt())
            }
            StepsizeSchedule::Decreasing { alpha, theta } => Ok(2.0 / (alpha * k + theta)),
            StepsizeSchedule::SolutionDependent { theta_k, mu, lipschitz, mu_d, f_star, beta } => {
                let gap = gap(ctx.f_z, *f_star)?;
                Ok((1.0 - beta) * theta_k.at(ctx.k) * mu_d * (2.0 * mu * gap).sqrt() / lipschitz)
            }
            StepsizeSchedule::SolutionFree { lipschitz, t, beta } => {
                let n = norm2(ctx.direction);
                if (n - 1.0).abs() > UNIT_NORM_TOL {
                    return Err(Error::invalid(format!(
                        "solution-free stepsizes need unit directions, got ||s|| = {n}"
                    )));
                }
                let probe = ctx.probe_value.ok_or(Error::MissingProbe)?;
                Ok((1.0 - beta) * (probe - ctx.f_z).abs() / (lipschitz * t))
            }
            StepsizeSchedule::IsConstant { gamma, weights } => {
                Ok(gamma / weights[index(ctx, weights.len())?])
            }
            StepsizeSchedule::IsDecreasing { alpha, theta, weights } => {
                Ok(2.0 / (alpha * k + theta) / weights[index(ctx, weights.len())?])
            }
            StepsizeSchedule::IsSolutionDependent {
                theta_k,
                mu,
                probs,
                weights,
                coord_lipschitz,
                f_star,
                beta,
            } => {
                let i = index(ctx, weights.len())?;
                let gap = gap(ctx.f_z, *f_star)?;
                let terms = ImportanceTerms::new(probs, weights, coord_lipschitz);
                Ok((1.0 - beta) * theta_k.at(ctx.k) * terms.min_p_over_w
                    / (weights[i] * terms.weighted_l_sum)
                    * (2.0 * mu * gap).sqrt())
            }
            StepsizeSchedule::IsSolutionFree { coord_lipschitz, t, beta } => {
                let i = index(ctx, coord_lipschitz.len())?;
                let probe = ctx.probe_value.ok_or(Error::MissingProbe)?;
                Ok((1.0 - beta) * (probe - ctx.f_z).abs() / (coord_lipschitz[i] * t))
            }
        }
    }
}

fn gap(f_z: f64, f_star: f64) -> Result<f64> {
    if f_z < f_star {
        return Err(Error::BelowOptimum { f_z, f_star });
    }
    Ok(f_z - f_star)
}

fn index(ctx: &StepContext<'_>, len: usize) -> Result<usize> {
    let i = ctx.direction_index.ok_or(Error::MissingParameter("direction_index"))?;
    if i >= len {
        return Err(Error::DimensionMismatch { expected: len, got: i + 1 });
    }
    Ok(i)
}
