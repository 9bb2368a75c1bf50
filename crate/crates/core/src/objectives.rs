//! Black-box objectives with evaluation counting.
//!
//! The optimizers only ever call [`Objective::evaluate`]; gradients and
//! smoothness metadata exist for diagnostics and for the stepsize rules that
//! need `L`, `L_i`, `mu` or `f(x*)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix};

/// Smoothness and optimum metadata attached to an objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SmoothnessInfo {
    /// Global gradient Lipschitz constant `L` (w.r.t. the Euclidean norm).
    pub lipschitz: Option<f64>,
    /// Coordinate-wise constants `L_1, ..., L_d`.
    pub coord_lipschitz: Option<Vec<f64>>,
    /// Strong-convexity modulus.
    pub mu: Option<f64>,
    pub f_star: Option<f64>,
    pub x_star: Option<Vec<f64>>,
    /// When set, `lipschitz` is only certified on the box `[lo, hi]^d`.
    pub valid_box: Option<(f64, f64)>,
}

impl SmoothnessInfo {
    pub fn in_valid_box(&self, x: &[f64]) -> bool {
        match self.valid_box {
            Some((lo, hi)) => x.iter().all(|v| (lo..=hi).contains(v)),
            None => true,
        }
    }
}

pub trait Objective: Send {
    fn dim(&self) -> usize;

    /// Evaluates `f(x)` and advances the evaluation counter by one (or by `K`
    /// for noisy averaged objectives).
    fn evaluate(&mut self, x: &[f64]) -> f64;

    /// Analytic gradient, for diagnostics only. Does not count as an evaluation.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn smoothness(&self) -> &SmoothnessInfo;

    fn evaluations(&self) -> u64;
}

impl<O: Objective + ?Sized> Objective for Box<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&mut self, x: &[f64]) -> f64 {
        (**self).evaluate(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        (**self).gradient(x)
    }
    fn smoothness(&self) -> &SmoothnessInfo {
        (**self).smoothness()
    }
    fn evaluations(&self) -> u64 {
        (**self).evaluations()
    }
}

/// `f(x) = 1/2 sum_i L_i (x_i - c_i)^2`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    coord_l: Vec<f64>,
    shift: Vec<f64>,
    info: SmoothnessInfo,
    evals: u64,
}

impl Quadratic {
    pub fn new(coord_l: Vec<f64>, shift: Vec<f64>) -> Result<Self> {
        if coord_l.is_empty() {
            return Err(Error::invalid("quadratic needs at least one coordinate"));
        }
        check_dim(coord_l.len(), shift.len())?;
        if let Some(l) = coord_l.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::invalid(format!("coordinate constants must be positive, got {l}")));
        }
        let max = coord_l.iter().copied().fold(f64::MIN, f64::max);
        let min = coord_l.iter().copied().fold(f64::MAX, f64::min);
        let info = SmoothnessInfo {
            lipschitz: Some(max),
            coord_lipschitz: Some(coord_l.clone()),
            mu: Some(min),
            f_star: Some(0.0),
            x_star: Some(shift.clone()),
            valid_box: None,
        };
        Ok(Quadratic { coord_l, shift, info, evals: 0 })
    }

    pub fn centered(coord_l: Vec<f64>) -> Result<Self> {
        let d = coord_l.len();
        Self::new(coord_l, vec![0.0; d])
    }

    pub fn coord_lipschitz(&self) -> &[f64] {
        &self.coord_l
    }

    /// Uncounted evaluation.
    pub fn value(&self, x: &[f64]) -> f64 {
        0.5 * self
            .coord_l
            .iter()
            .zip(&self.shift)
            .zip(x)
            .map(|((l, c), v)| l * (v - c) * (v - c))
            .sum::<f64>()
    }

    /// Radius of the level set `{f <= f(x0)}` in the Euclidean norm:
    /// `sqrt(2 (f(x0) - f*) / min_i L_i)`.
    pub fn level_set_radius_l2(&self, x0: &[f64]) -> f64 {
        (2.0 * self.value(x0) / self.info.mu.unwrap()).sqrt()
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.coord_l.len()
    }
    fn evaluate(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        self.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(
            self.coord_l
                .iter()
                .zip(&self.shift)
                .zip(x)
                .map(|((l, c), v)| l * (v - c))
                .collect(),
        )
    }
    fn smoothness(&self) -> &SmoothnessInfo {
        &self.info
    }
    fn evaluations(&self) -> u64 {
        self.evals
    }
}

/// `n` geometrically spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > 0.0) {
        return Err(Error::invalid("logspace bounds must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("logspace needs at least one point"));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect())
}

/// Lipschitz bound of the chained Rosenbrock gradient on `[-2, 2]^d`, from
/// Gershgorin's theorem applied to the Hessian:
/// `|1200 x_i^2 - 400 x_{i+1} + 2| + 200 + 400 |x_i| + 400 |x_{i-1}| <= 7402`.
pub const ROSENBROCK_BOX_LIPSCHITZ: f64 = 7402.0;
pub const ROSENBROCK_BOX: (f64, f64) = (-2.0, 2.0);

/// Chained Rosenbrock, `sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    dim: usize,
    info: SmoothnessInfo,
    evals: u64,
}

impl Rosenbrock {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(format!("rosenbrock needs d >= 2, got {dim}")));
        }
        let info = SmoothnessInfo {
            lipschitz: Some(ROSENBROCK_BOX_LIPSCHITZ),
            coord_lipschitz: None,
            mu: None,
            f_star: Some(0.0),
            x_star: Some(vec![1.0; dim]),
            valid_box: Some(ROSENBROCK_BOX),
        };
        Ok(Rosenbrock { dim, info, evals: 0 })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        x.windows(2)
            .map(|w| {
                let a = w[1] - w[0] * w[0];
                let b = 1.0 - w[0];
                100.0 * a * a + b * b
            })
            .sum()
    }
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        self.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = self.dim;
        let mut g = vec![0.0; d];
        for i in 0..d - 1 {
            let a = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * a;
        }
        Some(g)
    }
    fn smoothness(&self) -> &SmoothnessInfo {
        &self.info
    }
    fn evaluations(&self) -> u64 {
        self.evals
    }
}

/// Discrete-time linear system with quadratic stage cost.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrSystem {
    pub a: Matrix,
    pub b: Matrix,
    pub q: Matrix,
    pub r: Matrix,
    pub x0: Vec<f64>,
}

impl LqrSystem {
    /// The fixed benchmark system: `A = 0.9 I` (spectral radius 0.9),
    /// `B = [I_m; 0]` (control acts on the first `m` states), `Q = I`, `R = I`,
    /// `x0 = (1, ..., 1)`.
    pub fn standard(d_state: usize, d_ctrl: usize) -> Self {
        let a = (0..d_state)
            .map(|i| (0..d_state).map(|j| if i == j { 0.9 } else { 0.0 }).collect())
            .collect();
        let b = (0..d_state)
            .map(|i| (0..d_ctrl).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        LqrSystem {
            a,
            b,
            q: linalg::identity(d_state),
            r: linalg::identity(d_ctrl),
            x0: vec![1.0; d_state],
        }
    }

    pub fn d_state(&self) -> usize {
        self.a.len()
    }

    pub fn d_ctrl(&self) -> usize {
        self.r.len()
    }

    /// Finite-horizon Riccati recursion with terminal weight `Q`. Returns the
    /// time-varying gains `K_0, ..., K_{T-1}` and the optimal cost `x0' P_0 x0`.
    pub fn riccati(&self, horizon: usize) -> Result<(Vec<Matrix>, f64)> {
        let at = linalg::transpose(&self.a);
        let bt = linalg::transpose(&self.b);
        let mut p = self.q.clone();
        let mut gains = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let btp = linalg::mat_mul(&bt, &p);
            let lhs = linalg::mat_add(&self.r, &linalg::mat_mul(&btp, &self.b));
            let rhs = linalg::mat_mul(&btp, &self.a);
            let k = linalg::solve(&lhs, &rhs)
                .ok_or_else(|| Error::invalid("singular R + B'PB in Riccati recursion"))?;
            let closed = linalg::mat_sub(&self.a, &linalg::mat_mul(&self.b, &k));
            p = linalg::mat_add(&self.q, &linalg::mat_mul(&linalg::mat_mul(&at, &p), &closed));
            gains.push(k);
        }
        gains.reverse();
        let cost = linalg::dot(&self.x0, &linalg::mat_vec(&p, &self.x0));
        Ok((gains, cost))
    }
}

/// Rollout cost of the static feedback `u_t = -Theta x_t`:
/// `sum_{t<T} (x_t'Q x_t + u_t'R u_t) + x_T'Q x_T`.
///
/// Parameters are `Theta` (`d_ctrl x d_state`) flattened row-major. No gradient
/// is exposed. `f_star` is the Riccati optimum over time-varying gains, which
/// lower-bounds every static gain and is attained when `horizon == 1`.
#[derive(Debug, Clone)]
pub struct LqrRollout {
    system: LqrSystem,
    horizon: usize,
    info: SmoothnessInfo,
    evals: u64,
}

impl LqrRollout {
    pub fn new(system: LqrSystem, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("lqr horizon must be at least 1"));
        }
        if system.d_state() == 0 || system.d_ctrl() == 0 {
            return Err(Error::invalid("lqr state and control dimensions must be positive"));
        }
        let (gains, f_star) = system.riccati(horizon)?;
        let x_star = (horizon == 1).then(|| gains[0].iter().flatten().copied().collect());
        let info = SmoothnessInfo {
            f_star: Some(f_star),
            x_star,
            ..SmoothnessInfo::default()
        };
        Ok(LqrRollout { system, horizon, info, evals: 0 })
    }

    pub fn standard(horizon: usize, d_state: usize, d_ctrl: usize) -> Result<Self> {
        Self::new(LqrSystem::standard(d_state, d_ctrl), horizon)
    }

    pub fn system(&self) -> &LqrSystem {
        &self.system
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let n = self.system.d_state();
        let gain: Matrix = theta.chunks(n).map(<[f64]>::to_vec).collect();
        let mut x = self.system.x0.clone();
        let mut cost = 0.0;
        for _ in 0..self.horizon {
            let u: Vec<f64> = linalg::mat_vec(&gain, &x).into_iter().map(|v| -v).collect();
            cost += linalg::dot(&x, &linalg::mat_vec(&self.system.q, &x));
            cost += linalg::dot(&u, &linalg::mat_vec(&self.system.r, &u));
            let ax = linalg::mat_vec(&self.system.a, &x);
            let bu = linalg::mat_vec(&self.system.b, &u);
            x = ax.iter().zip(&bu).map(|(p, q)| p + q).collect();
        }
        cost + linalg::dot(&x, &linalg::mat_vec(&self.system.q, &x))
    }
}

impl Objective for LqrRollout {
    fn dim(&self) -> usize {
        self.system.d_state() * self.system.d_ctrl()
    }
    fn evaluate(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        self.value(x)
    }
    fn smoothness(&self) -> &SmoothnessInfo {
        &self.info
    }
    fn evaluations(&self) -> u64 {
        self.evals
    }
}

/// Objective from a closure; handy for ad-hoc black boxes.
pub struct FnObjective<F> {
    dim: usize,
    f: F,
    info: SmoothnessInfo,
    evals: u64,
}

impl<F: FnMut(&[f64]) -> f64 + Send> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { dim, f, info: SmoothnessInfo::default(), evals: 0 }
    }

    pub fn with_smoothness(mut self, info: SmoothnessInfo) -> Self {
        self.info = info;
        self
    }
}

impl<F: FnMut(&[f64]) -> f64 + Send> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        (self.f)(x)
    }
    fn smoothness(&self) -> &SmoothnessInfo {
        &self.info
    }
    fn evaluations(&self) -> u64 {
        self.evals
    }
}

/// Additive Gaussian observation noise, averaged over `k` draws per query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub k: usize,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(format!("noise sigma must be >= 0, got {}", self.sigma)));
        }
        if self.k == 0 {
            return Err(Error::invalid("noise averaging count K must be >= 1"));
        }
        Ok(())
    }
}

pub struct Noisy<O> {
    base: O,
    spec: NoiseSpec,
    rng: ChaCha8Rng,
    queries: u64,
}

/// Wraps `obj` so that each query returns the mean of `spec.k` noisy
/// observations. The wrapper reports the base objective's evaluation count.
pub fn wrap_noise<O: Objective>(obj: O, spec: NoiseSpec, rng: ChaCha8Rng) -> Result<Noisy<O>> {
    spec.validate()?;
    Ok(Noisy { base: obj, spec, rng, queries: 0 })
}

impl<O: Objective> Noisy<O> {
    pub fn base(&self) -> &O {
        &self.base
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }
}

impl<O: Objective> Objective for Noisy<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn evaluate(&mut self, x: &[f64]) -> f64 {
        self.queries += 1;
        if self.spec.sigma == 0.0 {
            let first = self.base.evaluate(x);
            for _ in 1..self.spec.k {
                self.base.evaluate(x);
            }
            return first;
        }
        let mut total = 0.0;
        for _ in 0..self.spec.k {
            let noise: f64 = self.rng.sample(StandardNormal);
            total += self.base.evaluate(x) + self.spec.sigma * noise;
        }
        total / self.spec.k as f64
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.base.gradient(x)
    }

    fn smoothness(&self) -> &SmoothnessInfo {
        self.base.smoothness()
    }

    fn evaluations(&self) -> u64 {
        self.base.evaluations()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn quadratic_examples() {
        let mut q = Quadratic::centered(vec![1.0, 1.0]).unwrap();
        assert_eq!(q.evaluate(&[1.0, 0.0]), 0.5);
        assert_eq!(q.gradient(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);

        let mut q = Quadratic::centered(vec![1.0, 100.0]).unwrap();
        assert_eq!(q.evaluate(&[1.0, 1.0]), 50.5);

        let mut q = Quadratic::new(vec![2.0], vec![3.0]).unwrap();
        assert_eq!(q.evaluate(&[3.0]), 0.0);
        assert_eq!(q.gradient(&[3.0]).unwrap(), vec![0.0]);
        assert_eq!(q.evaluations(), 1);
    }

    #[test]
    fn quadratic_metadata() {
        let q = Quadratic::new(vec![3.0, 1.0, 7.0], vec![1.0, 2.0, 3.0]).unwrap();
        let info = q.smoothness();
        assert_eq!(info.lipschitz, Some(7.0));
        assert_eq!(info.mu, Some(1.0));
        assert_eq!(info.f_star, Some(0.0));
        assert_eq!(info.x_star.as_deref(), Some(&[1.0, 2.0, 3.0][..]));
        assert!(Quadratic::centered(vec![1.0, 0.0]).is_err());
        assert!(Quadratic::centered(vec![1.0, -2.0]).is_err());
        assert!(Quadratic::new(vec![1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn rosenbrock_examples() {
        let mut r = Rosenbrock::new(2).unwrap();
        assert_eq!(r.evaluate(&[1.0, 1.0]), 0.0);
        assert_eq!(r.evaluate(&[0.0, 0.0]), 1.0);
        assert_eq!(r.evaluate(&[-1.0, 1.0]), 4.0);
        assert!(Rosenbrock::new(1).is_err());
        assert_eq!(r.gradient(&[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn lqr_zero_gain_single_step_hand_rollout() {
        // x0 = (1, 1), u = 0: stage cost |x0|^2 = 2, terminal |0.9 x0|^2 = 1.62.
        let mut lqr = LqrRollout::standard(1, 2, 2).unwrap();
        assert!((lqr.evaluate(&[0.0; 4]) - 3.62).abs() < 1e-12);
    }

    #[test]
    fn lqr_cost_grows_and_settles_with_horizon() {
        // Stable closed loop (A - B Theta = 0.4 I): costs are partial sums of a
        // convergent geometric series plus a vanishing terminal term.
        let theta = [0.5, 0.0, 0.0, 0.5];
        let costs: Vec<f64> = [1, 2, 4, 8, 16, 32, 64]
            .iter()
            .map(|&h| LqrRollout::standard(h, 2, 2).unwrap().value(&theta))
            .collect();
        let stage = 2.0 * (1.0 + 0.25) / (1.0 - 0.16);
        // Increments shrink like 0.16^T, so strictness only shows at short horizons.
        for w in costs[..5].windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!((costs.last().unwrap() - stage).abs() < 1e-9);
    }

    #[test]
    fn noise_free_wrapper_is_transparent_and_charges_k() {
        let q = Quadratic::centered(vec![1.0, 3.0]).unwrap();
        let mut noisy = wrap_noise(
            q.clone(),
            NoiseSpec { sigma: 0.0, k: 4 },
            ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap();
        let x = [0.3, -0.7];
        assert_eq!(noisy.evaluate(&x), q.value(&x));
        assert_eq!(noisy.evaluations(), 4);
        noisy.evaluate(&x);
        assert_eq!(noisy.evaluations(), 8);
        assert_eq!(noisy.queries(), 2);
    }

    #[test]
    fn noisy_mean_concentrates() {
        let zero = FnObjective::new(1, |_: &[f64]| 0.0);
        let k = 10_000;
        let mut noisy =
            wrap_noise(zero, NoiseSpec { sigma: 1.0, k }, ChaCha8Rng::seed_from_u64(11)).unwrap();
        let n_queries = 20;
        let mean: f64 = (0..n_queries).map(|_| noisy.evaluate(&[0.0])).sum::<f64>() / n_queries as f64;
        assert!(mean.abs() <= 3.0 / ((k * n_queries) as f64).sqrt());
    }

    #[test]
    fn invalid_noise_spec() {
        let q = Quadratic::centered(vec![1.0]).unwrap();
        assert!(wrap_noise(q.clone(), NoiseSpec { sigma: -1.0, k: 1 }, ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(wrap_noise(q, NoiseSpec { sigma: 1.0, k: 0 }, ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn logspace_endpoints() {
        let v = logspace(1.0, 1000.0, 4).unwrap();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[3], 1000.0);
        assert!((v[1] - 10.0).abs() < 1e-12);
        assert!(logspace(0.0, 1.0, 3).is_err());
    }
}
