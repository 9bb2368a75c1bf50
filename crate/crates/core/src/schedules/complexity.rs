//! Iteration counts and tuned constants from the convergence theorems.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Identifies one convergence theorem: objective class, stepsize rule and sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoremId {
    Nc,
    CvxConst,
    CvxDec,
    ScDep,
    ScFree,
    IsNc,
    IsCvxConst,
    IsCvxDec,
    IsScDep,
    IsScFree,
}

impl TheoremId {
    pub const ALL: [TheoremId; 10] = [
        TheoremId::Nc,
        TheoremId::CvxConst,
        TheoremId::CvxDec,
        TheoremId::ScDep,
        TheoremId::ScFree,
        TheoremId::IsNc,
        TheoremId::IsCvxConst,
        TheoremId::IsCvxDec,
        TheoremId::IsScDep,
        TheoremId::IsScFree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::Nc => "NC",
            TheoremId::CvxConst => "CVX-CONST",
            TheoremId::CvxDec => "CVX-DEC",
            TheoremId::ScDep => "SC-DEP",
            TheoremId::ScFree => "SC-FREE",
            TheoremId::IsNc => "IS-NC",
            TheoremId::IsCvxConst => "IS-CVX-CONST",
            TheoremId::IsCvxDec => "IS-CVX-DEC",
            TheoremId::IsScDep => "IS-SC-DEP",
            TheoremId::IsScFree => "IS-SC-FREE",
        }
    }

    pub fn is_importance(self) -> bool {
        matches!(
            self,
            TheoremId::IsNc
                | TheoremId::IsCvxConst
                | TheoremId::IsCvxDec
                | TheoremId::IsScDep
                | TheoremId::IsScFree
        )
    }

    /// Whether the bound is on the gradient norm rather than the gap.
    pub fn is_nonconvex(self) -> bool {
        matches!(self, TheoremId::Nc | TheoremId::IsNc)
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        TheoremId::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown theorem id `{s}`")))
    }
}

/// Symbols a theorem may need. Unused fields are ignored; missing required
/// ones produce [`Error::MissingParameter`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TheoremParams {
    /// `f(x^0) - f(x*)`.
    pub gap: Option<f64>,
    pub epsilon: Option<f64>,
    /// Global smoothness constant `L`.
    pub lipschitz: Option<f64>,
    /// Strong convexity parameter `mu`.
    pub mu: Option<f64>,
    pub gamma_d: Option<f64>,
    pub mu_d: Option<f64>,
    /// Level-set radius `R_0` in the dual norm.
    pub r0: Option<f64>,
    pub beta: Option<f64>,
    /// `theta = inf_k (2 theta_k - gamma_D theta_k^2)` for the solution-dependent rules.
    pub theta_rate: Option<f64>,
    /// Constant stepsize `gamma`.
    pub gamma: Option<f64>,
    /// Probe distance of the solution-free rules.
    pub t: Option<f64>,
    /// `theta` of the decreasing rule `2 / (alpha k + theta)`.
    pub theta_decreasing: Option<f64>,
    pub probs: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub coord_lipschitz: Option<Vec<f64>>,
}

macro_rules! need {
    ($p:expr, $field:ident) => {
        $p.$field.ok_or(Error::MissingParameter(stringify!($field)))
    };
}

impl TheoremParams {
    pub(crate) fn gap(&self) -> Result<f64> {
        let g = need!(self, gap)?;
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::invalid(format!("gap must be finite and >= 0, got {g}")));
        }
        Ok(g)
    }

    pub(crate) fn beta(&self) -> Result<f64> {
        let b = need!(self, beta)?;
        if !(0.0..1.0).contains(&b) {
            return Err(Error::invalid(format!("beta must lie in [0,1), got {b}")));
        }
        Ok(b)
    }

    pub(crate) fn pos(&self, v: Option<f64>, name: &'static str) -> Result<f64> {
        let v = v.ok_or(Error::MissingParameter(name))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
        Ok(v)
    }

    pub(crate) fn importance(&self) -> Result<ImportanceTerms> {
        let p = self.probs.as_ref().ok_or(Error::MissingParameter("probs"))?;
        let l = self.coord_lipschitz.as_ref().ok_or(Error::MissingParameter("coord_lipschitz"))?;
        let w = self.weights.as_ref().ok_or(Error::MissingParameter("weights"))?;
        if p.len() != l.len() || p.len() != w.len() || p.is_empty() {
            return Err(Error::invalid("probs, weights and coord_lipschitz must share a nonzero length"));
        }
        if p.iter().chain(l).chain(w).any(|x| !(*x > 0.0)) {
            return Err(Error::invalid("probs, weights and coord_lipschitz must be positive"));
        }
        Ok(ImportanceTerms::new(p, w, l))
    }

    /// Like [`Self::importance`] but with `w` defaulting to `L_i` (unused by the
    /// solution-free theorem).
    pub(crate) fn importance_free(&self) -> Result<ImportanceTerms> {
        if self.weights.is_some() {
            return self.importance();
        }
        let mut p = self.clone();
        p.weights = self.coord_lipschitz.clone();
        p.importance()
    }
}

/// Sampler-dependent aggregates shared by the importance-sampling theorems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImportanceTerms {
    /// `min_i p_i / w_i`.
    pub min_p_over_w: f64,
    /// `sum_i L_i p_i / w_i^2`.
    pub weighted_l_sum: f64,
    /// `min_i p_i / L_i`.
    pub min_p_over_l: f64,
    /// `sum_i p_i L_i`.
    pub sum_pl: f64,
}

impl ImportanceTerms {
    pub fn new(probs: &[f64], weights: &[f64], coord_lipschitz: &[f64]) -> Self {
        let mut t = ImportanceTerms {
            min_p_over_w: f64::INFINITY,
            weighted_l_sum: 0.0,
            min_p_over_l: f64::INFINITY,
            sum_pl: 0.0,
        };
        for ((p, w), l) in probs.iter().zip(weights).zip(coord_lipschitz) {
            t.min_p_over_w = t.min_p_over_w.min(p / w);
            t.weighted_l_sum += l * p / (w * w);
            t.min_p_over_l = t.min_p_over_l.min(p / l);
            t.sum_pl += p * l;
        }
        t
    }
}

/// `ceil(x)` as an iteration count, clamped at 0. A relative 1e-12 shave keeps
/// values like `100.00000000000001` from rounding up to 101.
pub fn ceil_count(x: f64) -> u64 {
    if x.is_nan() || x <= 0.0 {
        return 0;
    }
    if x.is_infinite() {
        return u64::MAX;
    }
    (x * (1.0 - 1e-12)).ceil() as u64
}

/// Constant `gamma_0` minimizing the non-convex bound for `gamma = gamma_0 / sqrt(K)`.
pub fn optimal_gamma0(beta: f64, gap: f64, lipschitz: f64, gamma_d: f64) -> f64 {
    (2.0 * (1.0 - beta).powi(2) * gap / (lipschitz * gamma_d)).sqrt()
}

/// Importance-sampling counterpart of [`optimal_gamma0`].
pub fn is_optimal_gamma0(beta: f64, gap: f64, terms: &ImportanceTerms) -> f64 {
    (2.0 * (1.0 - beta).powi(2) * gap / terms.weighted_l_sum).sqrt()
}

/// Largest probe distance `t` for which the solution-free rule reaches `epsilon`.
pub fn solution_free_t_max(epsilon: f64, mu_d: f64, mu: f64, lipschitz: f64) -> f64 {
    (4.0 * epsilon * mu_d * mu_d * mu / (lipschitz * lipschitz)).sqrt()
}

pub fn is_solution_free_t_max(epsilon: f64, mu: f64, probs: &[f64], coord_lipschitz: &[f64]) -> f64 {
    let t = ImportanceTerms::new(probs, coord_lipschitz, coord_lipschitz);
    (4.0 * epsilon * mu * t.min_p_over_l / t.sum_pl).sqrt()
}

/// `alpha = mu_D / ((1 - beta) R_0)` for the decreasing rule.
pub fn decreasing_alpha(mu_d: f64, beta: f64, r0: f64) -> f64 {
    mu_d / ((1.0 - beta) * r0)
}

pub fn is_decreasing_alpha(terms: &ImportanceTerms, beta: f64, r0: f64) -> f64 {
    terms.min_p_over_w / ((1.0 - beta) * r0)
}

/// Number of iterations after which the theorem guarantees accuracy `epsilon`
/// (on the gap, or on the expected dual gradient norm for the non-convex ones).
pub fn required_iterations(id: TheoremId, p: &TheoremParams) -> Result<u64> {
    let eps = p.pos(p.epsilon, "epsilon")?;
    let gap = p.gap()?;
    let value = match id {
        TheoremId::Nc => {
            let l = p.pos(p.lipschitz, "lipschitz")?;
            let gd = p.pos(p.gamma_d, "gamma_d")?;
            let md = p.pos(p.mu_d, "mu_d")?;
            2.0 * gap * l * gd / (md * md * eps * eps)
        }
        TheoremId::CvxConst => {
            let l = p.pos(p.lipschitz, "lipschitz")?;
            let gd = p.pos(p.gamma_d, "gamma_d")?;
            let md = p.pos(p.mu_d, "mu_d")?;
            let r0 = p.pos(p.r0, "r0")?;
            let scale = l * gd * r0 * r0 / (md * md);
            if eps > scale {
                return Err(Error::OutOfRange(format!(
                    "epsilon must be <= L gamma_D R0^2 / mu_D^2 = {scale}, got {eps}"
                )));
            }
            scale / eps * (2.0 * gap / eps).ln()
        }
        TheoremId::CvxDec => {
            let l = p.pos(p.lipschitz, "lipschitz")?;
            let gd = p.pos(p.gamma_d, "gamma_d")?;
            let md = p.pos(p.mu_d, "mu_d")?;
            let r0 = p.pos(p.r0, "r0")?;
            let b = p.beta()?;
            let c = (1.0 - b).powi(2);
            let r = r0 * r0 / (md * md);
            2.0 * r / eps * (c * gap).max(l * gd) - 2.0 * c * r
        }
        TheoremId::ScDep => {
            let l = p.pos(p.lipschitz, "lipschitz")?;
            let mu = p.pos(p.mu, "mu")?;
            let md = p.pos(p.mu_d, "mu_d")?;
            let th = p.pos(p.theta_rate, "theta_rate")?;
            if th >= l / (md * md * mu) {
                return Err(Error::OutOfRange(format!(
                    "theta must lie in (0, L/(mu_D^2 mu)) = (0, {}), got {th}",
                    l / (md * md * mu)
                )));
            }
            l / mu / (th * md * md) * (gap / eps).ln()
        }
        TheoremId::ScFree => {
            let l = p.pos(p.lipschitz, "lipschitz")?;
            let mu = p.pos(p.mu, "mu")?;
            let md = p.pos(p.mu_d, "mu_d")?;
            l / mu / (md * md) * (2.0 * gap / eps).ln()
        }
        TheoremId::IsNc => {
            let t = p.importance()?;
            2.0 * gap * t.weighted_l_sum / (t.min_p_over_w.powi(2) * eps * eps)
        }
        TheoremId::IsCvxConst => {
            let t = p.importance()?;
            let r0 = p.pos(p.r0, "r0")?;
            let scale = r0 * r0 * t.weighted_l_sum / t.min_p_over_w.powi(2);
            if eps > scale {
                return Err(Error::OutOfRange(format!(
                    "epsilon must be <= R0^2 S / min(p/w)^2 = {scale}, got {eps}"
                )));
            }
            scale / eps * (2.0 * gap / eps).ln()
        }
        TheoremId::IsCvxDec => {
            let t = p.importance()?;
            let r0 = p.pos(p.r0, "r0")?;
            let b = p.beta()?;
            let c = (1.0 - b).powi(2);
            let r = r0 * r0 / t.min_p_over_w.powi(2);
            2.0 * r / eps * (c * gap).max(t.weighted_l_sum) - 2.0 * c * r
        }
        TheoremId::IsScDep => {
            let t = p.importance()?;
            let mu = p.pos(p.mu, "mu")?;
            let th = p.pos(p.theta_rate, "theta_rate")?;
            let m2 = t.min_p_over_w.powi(2);
            if th >= t.weighted_l_sum / (mu * m2) {
                return Err(Error::OutOfRange(format!(
                    "theta must lie in (0, {}), got {th}",
                    t.weighted_l_sum / (mu * m2)
                )));
            }
            t.weighted_l_sum / (th * mu * m2) * (gap / eps).ln()
        }
        TheoremId::IsScFree => {
            let t = p.importance_free()?;
            let mu = p.pos(p.mu, "mu")?;
            (2.0 * gap / eps).ln() / (mu * t.min_p_over_l)
        }
    };
    Ok(ceil_count(value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimal_gamma0_examples() {
        assert_eq!(optimal_gamma0(0.0, 0.5, 1.0, 1.0), 1.0);
        assert_eq!(optimal_gamma0(0.5, 2.0, 1.0, 1.0), 1.0);
        assert_eq!(optimal_gamma0(0.5, 0.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn t_max_examples() {
        assert_eq!(solution_free_t_max(1.0, 1.0, 1.0, 2.0), 1.0);
        assert!((solution_free_t_max(0.01, 0.1, 1.0, 1.0) - 0.02).abs() < 1e-15);
        assert!(solution_free_t_max(1e-300, 1.0, 1.0, 1.0) < 1e-149);
    }

    #[test]
    fn sc_free_count() {
        let p = TheoremParams {
            gap: Some(1.0),
            epsilon: Some(0.01),
            lipschitz: Some(10.0),
            mu: Some(1.0),
            mu_d: Some(0.5f64.sqrt()),
            ..Default::default()
        };
        assert_eq!(required_iterations(TheoremId::ScFree, &p).unwrap(), 106);
        assert_eq!((20.0 * 200f64.ln()).ceil(), 106.0);
    }

    #[test]
    fn is_sc_free_clamps_to_zero() {
        let p = TheoremParams {
            gap: Some(1.0),
            epsilon: Some(2.0),
            mu: Some(1.0),
            probs: Some(vec![0.5, 0.5]),
            coord_lipschitz: Some(vec![1.0, 1.0]),
            ..Default::default()
        };
        assert_eq!(required_iterations(TheoremId::IsScFree, &p).unwrap(), 0);
    }

    #[test]
    fn nc_count_inverts_bound() {
        let p = TheoremParams {
            gap: Some(0.5),
            epsilon: Some(0.1),
            lipschitz: Some(1.0),
            gamma_d: Some(1.0),
            mu_d: Some(1.0),
            ..Default::default()
        };
        assert_eq!(required_iterations(TheoremId::Nc, &p).unwrap(), 100);
    }

    #[test]
    fn missing_and_out_of_range() {
        let p = TheoremParams { gap: Some(1.0), epsilon: Some(0.1), ..Default::default() };
        assert!(matches!(
            required_iterations(TheoremId::ScFree, &p),
            Err(Error::MissingParameter(_))
        ));
        let p = TheoremParams {
            gap: Some(1.0),
            epsilon: Some(100.0),
            lipschitz: Some(1.0),
            gamma_d: Some(1.0),
            mu_d: Some(1.0),
            r0: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            required_iterations(TheoremId::CvxConst, &p),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn theorem_id_round_trip() {
        for t in TheoremId::ALL {
            assert_eq!(t.as_str().parse::<TheoremId>().unwrap(), t);
        }
        assert_eq!("is_sc_free".parse::<TheoremId>().unwrap(), TheoremId::IsScFree);
        assert!("XYZ".parse::<TheoremId>().is_err());
    }

    #[test]
    fn ceil_count_shaves_rounding() {
        assert_eq!(ceil_count(100.00000000000001), 100);
        assert_eq!(ceil_count(100.5), 101);
        assert_eq!(ceil_count(-3.0), 0);
    }
}
