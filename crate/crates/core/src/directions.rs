//! Sampling laws for search directions and the constants that make them usable
//! by the three-point methods.
//!
//! Every law here satisfies `E ||s||_2^2 = gamma_D` and
//! `E |<g, s>| >= mu_D ||g||_D` for an associated norm `||.||_D`. The
//! [`DistributionConstants`] returned by [`DirectionDistribution::constants`]
//! carry both numbers together with the norm and its dual.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm1, norm2, norm_inf};

const PROB_SUM_TOL: f64 = 1e-12;
const ORTHONORMAL_TOL: f64 = 1e-10;

/// A strictly positive probability vector with a cached cumulative sum for
/// inverse-CDF sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("probability vector must be non-empty"));
        }
        if let Some(p) = probs.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
            return Err(Error::invalid(format!("probabilities must be positive, got {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}, expected 1")));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // Pin the last bucket so every u in [0, 1) lands somewhere.
        *cdf.last_mut().unwrap() = 1.0;
        Ok(ProbabilityVector { probs, cdf })
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Self::new(vec![1.0 / dim as f64; dim])
    }

    /// `p_i = w_i / sum_j w_j`, e.g. importance sampling with `w = (L_1, ..., L_d)`.
    pub fn proportional(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid(format!("weights must be positive, got {w}")));
        }
        let total: f64 = weights.iter().sum();
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistributionKind {
    UnitSphere,
    GaussianScaled,
    CoordinateUniform,
    CoordinateWeighted,
    OrthonormalWeighted,
}

impl DistributionKind {
    pub const ALL: [DistributionKind; 5] = [
        DistributionKind::UnitSphere,
        DistributionKind::GaussianScaled,
        DistributionKind::CoordinateUniform,
        DistributionKind::CoordinateWeighted,
        DistributionKind::OrthonormalWeighted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DistributionKind::UnitSphere => "sphere",
            DistributionKind::GaussianScaled => "gaussian",
            DistributionKind::CoordinateUniform => "coord_uniform",
            DistributionKind::CoordinateWeighted => "coord_weighted",
            DistributionKind::OrthonormalWeighted => "orthonormal_weighted",
        }
    }

    /// Coordinate laws are the only ones the importance-sampling method accepts.
    pub fn is_coordinate(self) -> bool {
        matches!(self, DistributionKind::CoordinateUniform | DistributionKind::CoordinateWeighted)
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DistributionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown distribution `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectionDistribution {
    /// Uniform on the unit sphere of `R^d`.
    UnitSphere { dim: usize },
    /// `N(0, I/d)`.
    GaussianScaled { dim: usize },
    /// Uniform over `{e_1, ..., e_d}`.
    CoordinateUniform { dim: usize },
    /// `P(s = e_i) = p_i`.
    CoordinateWeighted { probs: ProbabilityVector },
    /// `P(s = u_i) = p_i` for an orthonormal basis `u_1, ..., u_d` (stored as rows).
    OrthonormalWeighted { probs: ProbabilityVector, basis: Vec<Vec<f64>> },
}

fn check_positive_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(())
}

impl DirectionDistribution {
    pub fn unit_sphere(dim: usize) -> Result<Self> {
        check_positive_dim(dim)?;
        Ok(DirectionDistribution::UnitSphere { dim })
    }

    pub fn gaussian_scaled(dim: usize) -> Result<Self> {
        check_positive_dim(dim)?;
        Ok(DirectionDistribution::GaussianScaled { dim })
    }

    pub fn coordinate_uniform(dim: usize) -> Result<Self> {
        check_positive_dim(dim)?;
        Ok(DirectionDistribution::CoordinateUniform { dim })
    }

    pub fn coordinate_weighted(probs: ProbabilityVector) -> Self {
        DirectionDistribution::CoordinateWeighted { probs }
    }

    pub fn orthonormal_weighted(probs: ProbabilityVector, basis: Vec<Vec<f64>>) -> Result<Self> {
        let d = probs.len();
        check_dim(d, basis.len())?;
        for (i, u) in basis.iter().enumerate() {
            check_dim(d, u.len())?;
            for (j, w) in basis.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                let ip = dot(u, w);
                if (ip - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::invalid(format!(
                        "basis is not orthonormal: <u_{i}, u_{j}> = {ip}"
                    )));
                }
            }
        }
        Ok(DirectionDistribution::OrthonormalWeighted { probs, basis })
    }

    pub fn kind(&self) -> DistributionKind {
        match self {
            DirectionDistribution::UnitSphere { .. } => DistributionKind::UnitSphere,
            DirectionDistribution::GaussianScaled { .. } => DistributionKind::GaussianScaled,
            DirectionDistribution::CoordinateUniform { .. } => DistributionKind::CoordinateUniform,
            DirectionDistribution::CoordinateWeighted { .. } => DistributionKind::CoordinateWeighted,
            DirectionDistribution::OrthonormalWeighted { .. } => {
                DistributionKind::OrthonormalWeighted
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DirectionDistribution::UnitSphere { dim }
            | DirectionDistribution::GaussianScaled { dim }
            | DirectionDistribution::CoordinateUniform { dim } => *dim,
            DirectionDistribution::CoordinateWeighted { probs }
            | DirectionDistribution::OrthonormalWeighted { probs, .. } => probs.len(),
        }
    }

    /// Whether every draw has `||s||_2 = 1` (required by solution-free stepsizes).
    pub fn is_unit_norm(&self) -> bool {
        !matches!(self, DirectionDistribution::GaussianScaled { .. })
    }

    /// Probability of each coordinate direction, for the coordinate laws.
    pub fn coordinate_probabilities(&self) -> Option<ProbabilityVector> {
        match self {
            DirectionDistribution::CoordinateUniform { dim } => ProbabilityVector::uniform(*dim).ok(),
            DirectionDistribution::CoordinateWeighted { probs } => Some(probs.clone()),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.sample_with_index(rng).0
    }

    /// Draws a direction; for the discrete laws also reports which atom was hit.
    pub fn sample_with_index<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Option<usize>) {
        match self {
            DirectionDistribution::UnitSphere { dim } => {
                loop {
                    let g: Vec<f64> = (0..*dim).map(|_| rng.sample(StandardNormal)).collect();
                    let n = norm2(&g);
                    if n > 0.0 {
                        return (g.into_iter().map(|v| v / n).collect(), None);
                    }
                }
            }
            DirectionDistribution::GaussianScaled { dim } => {
                let scale = 1.0 / (*dim as f64).sqrt();
                let s = (0..*dim)
                    .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                (s, None)
            }
            DirectionDistribution::CoordinateUniform { dim } => {
                let i = rng.random_range(0..*dim);
                (unit_vector(*dim, i), Some(i))
            }
            DirectionDistribution::CoordinateWeighted { probs } => {
                let i = probs.sample_index(rng);
                (unit_vector(probs.len(), i), Some(i))
            }
            DirectionDistribution::OrthonormalWeighted { probs, basis } => {
                let i = probs.sample_index(rng);
                (basis[i].clone(), Some(i))
            }
        }
    }

    pub fn constants(&self) -> DistributionConstants {
        let d = self.dim();
        let df = d as f64;
        let (mu_d, norm) = match self {
            DirectionDistribution::UnitSphere { .. } => {
                (1.0 / (2.0 * std::f64::consts::PI * df).sqrt(), DNorm::L2 { dim: d })
            }
            DirectionDistribution::GaussianScaled { .. } => {
                (2f64.sqrt() / (df * std::f64::consts::PI).sqrt(), DNorm::L2 { dim: d })
            }
            DirectionDistribution::CoordinateUniform { .. } => (1.0 / df, DNorm::L1 { dim: d }),
            DirectionDistribution::CoordinateWeighted { probs } => (
                1.0,
                DNorm::WeightedL1 { weights: probs.as_slice().to_vec(), basis: None },
            ),
            DirectionDistribution::OrthonormalWeighted { probs, basis } => (
                1.0,
                DNorm::WeightedL1 {
                    weights: probs.as_slice().to_vec(),
                    basis: Some(basis.clone()),
                },
            ),
        };
        DistributionConstants { gamma_d: 1.0, mu_d, norm }
    }
}

pub(crate) fn unit_vector(dim: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

/// Random orthonormal basis (rows) from Gram-Schmidt on a Gaussian matrix,
/// re-orthogonalized once for stability.
pub fn random_orthonormal_basis<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while basis.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for u in &basis {
                let c = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= c * b);
            }
        }
        let n = norm2(&v);
        if n > 1e-8 {
            basis.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    basis
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormTag {
    L2,
    L1,
    WeightedL1,
}

/// The norm `||.||_D` paired with a distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum DNorm {
    L2 { dim: usize },
    L1 { dim: usize },
    /// `sum_i p_i |<g, u_i>|`; with no basis `u_i = e_i`, i.e. `sum_i p_i |g_i|`.
    WeightedL1 { weights: Vec<f64>, basis: Option<Vec<Vec<f64>>> },
}

impl DNorm {
    pub fn tag(&self) -> NormTag {
        match self {
            DNorm::L2 { .. } => NormTag::L2,
            DNorm::L1 { .. } => NormTag::L1,
            DNorm::WeightedL1 { .. } => NormTag::WeightedL1,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DNorm::L2 { dim } | DNorm::L1 { dim } => *dim,
            DNorm::WeightedL1 { weights, .. } => weights.len(),
        }
    }

    fn components(&self, g: &[f64]) -> Vec<f64> {
        match self {
            DNorm::WeightedL1 { basis: Some(basis), .. } => basis.iter().map(|u| dot(u, g)).collect(),
            _ => g.to_vec(),
        }
    }

    pub fn eval(&self, g: &[f64]) -> Result<f64> {
        check_dim(self.dim(), g.len())?;
        Ok(match self {
            DNorm::L2 { .. } => norm2(g),
            DNorm::L1 { .. } => norm1(g),
            DNorm::WeightedL1 { weights, .. } => weights
                .iter()
                .zip(self.components(g))
                .map(|(p, c)| p * c.abs())
                .sum(),
        })
    }

    pub fn dual(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            DNorm::L2 { .. } => norm2(x),
            DNorm::L1 { .. } => norm_inf(x),
            DNorm::WeightedL1 { weights, .. } => weights
                .iter()
                .zip(self.components(x))
                .fold(0.0, |m, (p, c)| m.max(c.abs() / p)),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionConstants {
    /// `E ||s||_2^2`.
    pub gamma_d: f64,
    /// Lower-bound constant in `E |<g, s>| >= mu_D ||g||_D`.
    pub mu_d: f64,
    pub norm: DNorm,
}

impl DistributionConstants {
    pub fn norm_tag(&self) -> NormTag {
        self.norm.tag()
    }

    pub fn d_norm(&self, g: &[f64]) -> Result<f64> {
        self.norm.eval(g)
    }

    pub fn dual_norm(&self, x: &[f64]) -> Result<f64> {
        self.norm.dual(x)
    }
}

/// Monte-Carlo estimates of the distribution constants at a fixed `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McValidation {
    pub gamma_hat: f64,
    pub inner_hat: f64,
    pub mu_lower_ok: bool,
}

pub const MC_MIN_SAMPLES: usize = 10_000;

/// Estimates `E ||s||^2` and `E |<g, s>|` from `n_samples` draws and checks the
/// lower bound `inner_hat >= mu_D ||g||_D (1 - 3 / sqrt(n))`.
pub fn mc_validate<R: Rng + ?Sized>(
    dist: &DirectionDistribution,
    g: &[f64],
    n_samples: usize,
    rng: &mut R,
) -> Result<McValidation> {
    check_dim(dist.dim(), g.len())?;
    if g.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    if n_samples < MC_MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "mc_validate needs at least {MC_MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let mut sq = 0.0;
    let mut inner = 0.0;
    for _ in 0..n_samples {
        let s = dist.sample(rng);
        sq += s.iter().map(|v| v * v).sum::<f64>();
        inner += dot(g, &s).abs();
    }
    let n = n_samples as f64;
    let gamma_hat = sq / n;
    let inner_hat = inner / n;
    let constants = dist.constants();
    let bound = constants.mu_d * constants.d_norm(g)? * (1.0 - 3.0 / n.sqrt());
    Ok(McValidation { gamma_hat, inner_hat, mu_lower_ok: inner_hat >= bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn sphere_draws_have_unit_norm() {
        let dist = DirectionDistribution::unit_sphere(3).unwrap();
        let mut r = rng(1);
        for _ in 0..1000 {
            let s = dist.sample(&mut r);
            assert!((norm2(&s) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn coordinate_uniform_frequencies() {
        let dist = DirectionDistribution::coordinate_uniform(4).unwrap();
        let mut r = rng(2);
        let mut counts = [0usize; 4];
        let n = 1_000_000;
        for _ in 0..n {
            let (_, i) = dist.sample_with_index(&mut r);
            counts[i.unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() <= 0.005);
        }
    }

    #[test]
    fn coordinate_weighted_matches_lipschitz_proportional_law() {
        let probs = ProbabilityVector::proportional(&[1.0, 100.0]).unwrap();
        let dist = DirectionDistribution::coordinate_weighted(probs);
        let mut r = rng(3);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| dist.sample(&mut r)[1] == 1.0).count();
        assert!((hits as f64 / n as f64 - 100.0 / 101.0).abs() <= 0.002);
    }

    #[test]
    fn catalogue_constants() {
        let c = DirectionDistribution::unit_sphere(2).unwrap().constants();
        assert_eq!(c.gamma_d, 1.0);
        assert_eq!(c.norm_tag(), NormTag::L2);

        let c = DirectionDistribution::gaussian_scaled(2).unwrap().constants();
        assert!((c.mu_d - 0.564_189_583_547_756_3).abs() < 1e-12);

        let c = DirectionDistribution::coordinate_uniform(5).unwrap().constants();
        assert!((c.mu_d - 0.2).abs() < 1e-15);
        assert_eq!(c.norm_tag(), NormTag::L1);

        let probs = ProbabilityVector::new(vec![0.3, 0.7]).unwrap();
        let c = DirectionDistribution::coordinate_weighted(probs).constants();
        assert_eq!((c.gamma_d, c.mu_d, c.norm_tag()), (1.0, 1.0, NormTag::WeightedL1));
    }

    #[test]
    fn norms_and_duals() {
        let l2 = DNorm::L2 { dim: 2 };
        let l1 = DNorm::L1 { dim: 2 };
        assert_eq!(l2.eval(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(l1.eval(&[3.0, -4.0]).unwrap(), 7.0);
        let w = DNorm::WeightedL1 { weights: vec![0.25, 0.75], basis: None };
        assert_eq!(w.eval(&[4.0, -4.0]).unwrap(), 4.0);

        assert_eq!(l1.dual(&[3.0, -4.0]).unwrap(), 4.0);
        assert_eq!(l2.dual(&[3.0, 4.0]).unwrap(), 5.0);
        let w = DNorm::WeightedL1 { weights: vec![0.5, 0.5], basis: None };
        assert_eq!(w.dual(&[1.0, 3.0]).unwrap(), 6.0);

        assert!(matches!(l2.eval(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(w.dual(&[1.0, 2.0, 3.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn mc_validate_rejects_zero_vector_and_small_n() {
        let dist = DirectionDistribution::unit_sphere(2).unwrap();
        let mut r = rng(4);
        assert!(matches!(mc_validate(&dist, &[0.0, 0.0], 20_000, &mut r), Err(Error::ZeroVector)));
        assert!(mc_validate(&dist, &[1.0, 0.0], 10, &mut r).is_err());
    }

    #[test]
    fn mc_validate_coordinate_enumeration() {
        // Exact enumeration: (|3| + |-4|) / 2 = 3.5.
        let dist = DirectionDistribution::coordinate_uniform(2).unwrap();
        let mut r = rng(5);
        let v = mc_validate(&dist, &[3.0, -4.0], 400_000, &mut r).unwrap();
        assert!((v.inner_hat - 3.5).abs() < 0.01);
        assert_eq!(v.gamma_hat, 1.0);
        assert!(v.mu_lower_ok);
    }

    #[test]
    fn gaussian_inner_product_mean() {
        let dist = DirectionDistribution::gaussian_scaled(4).unwrap();
        let mut r = rng(6);
        let v = mc_validate(&dist, &[1.0, 0.0, 0.0, 0.0], 1_000_000, &mut r).unwrap();
        let expected = 2f64.sqrt() / (4.0 * std::f64::consts::PI).sqrt();
        assert!((v.inner_hat - expected).abs() < 0.002, "{}", v.inner_hat);
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![1.0, 0.0]).is_err());
        assert!(ProbabilityVector::new(vec![]).is_err());
        assert!(ProbabilityVector::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn non_orthonormal_basis_is_rejected() {
        let probs = ProbabilityVector::uniform(2).unwrap();
        let bad = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        assert!(DirectionDistribution::orthonormal_weighted(probs.clone(), bad).is_err());
        let mut r = rng(7);
        let basis = random_orthonormal_basis(2, &mut r);
        assert!(DirectionDistribution::orthonormal_weighted(probs, basis).is_ok());
    }

    #[test]
    fn degenerate_dimension_one() {
        let mut r = rng(8);
        let s = DirectionDistribution::unit_sphere(1).unwrap().sample(&mut r);
        assert_eq!(s[0].abs(), 1.0);
        let s = DirectionDistribution::coordinate_uniform(1).unwrap().sample(&mut r);
        assert_eq!(s, vec![1.0]);
        assert!(DirectionDistribution::unit_sphere(0).is_err());
    }

    #[test]
    fn same_seed_same_sequence() {
        for kind_dist in [
            DirectionDistribution::unit_sphere(5).unwrap(),
            DirectionDistribution::gaussian_scaled(5).unwrap(),
            DirectionDistribution::coordinate_uniform(5).unwrap(),
        ] {
            let a: Vec<_> = {
                let mut r = rng(9);
                (0..50).map(|_| kind_dist.sample(&mut r)).collect()
            };
            let b: Vec<_> = {
                let mut r = rng(9);
                (0..50).map(|_| kind_dist.sample(&mut r)).collect()
            };
            assert_eq!(a, b);
        }
    }

    #[test]
    fn kind_round_trips_through_config_string() {
        for k in DistributionKind::ALL {
            assert_eq!(k.as_str().parse::<DistributionKind>().unwrap(), k);
        }
        assert!("cube".parse::<DistributionKind>().is_err());
    }
}
