use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smtp_core::directions::{
    mc_validate, random_orthonormal_basis, DNorm, DirectionDistribution, DistributionKind, NormTag, ProbabilityVector,
};
use smtp_core::linalg::{dot, norm2};
use smtp_core::Error;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn probability_vector_rejects_bad_input() {
    assert!(ProbabilityVector::new(vec![]).is_err());
    assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
    assert!(ProbabilityVector::new(vec![-0.1, 1.1]).is_err());
    assert!(ProbabilityVector::new(vec![f64::NAN, 1.0]).is_err());
    assert!(ProbabilityVector::proportional(&[0.0, 0.0]).is_err());
    assert!(ProbabilityVector::new(vec![0.25, 0.75]).is_ok());
}

#[test]
fn near_one_hot_law_draws_a_single_atom() {
    assert!(ProbabilityVector::new(vec![0.0, 1.0, 0.0]).is_err());
    let p = ProbabilityVector::new(vec![1e-16, 1.0 - 2e-16, 1e-16]).unwrap();
    let dist = DirectionDistribution::coordinate_weighted(p);
    let mut r = rng(9);
    for _ in 0..10_000 {
        assert_eq!(dist.sample_with_index(&mut r).1, Some(1));
    }
}

#[test]
fn non_orthonormal_basis_is_rejected() {
    let p = ProbabilityVector::uniform(2).unwrap();
    let skew = vec![vec![1.0, 0.0], vec![0.6, 0.8]];
    assert!(DirectionDistribution::orthonormal_weighted(p.clone(), skew).is_err());
    let short = vec![vec![1.0, 0.0]];
    assert!(DirectionDistribution::orthonormal_weighted(p, short).is_err());
}

#[test]
fn zero_dimension_is_rejected() {
    assert!(DirectionDistribution::unit_sphere(0).is_err());
    assert!(DirectionDistribution::gaussian_scaled(0).is_err());
    assert!(DirectionDistribution::coordinate_uniform(0).is_err());
}

#[test]
fn mc_validate_preconditions() {
    let dist = DirectionDistribution::unit_sphere(3).unwrap();
    assert!(matches!(mc_validate(&dist, &[0.0; 3], 10_000, &mut rng(0)), Err(Error::ZeroVector)));
    assert!(mc_validate(&dist, &[1.0; 3], 100, &mut rng(0)).is_err());
    assert!(matches!(
        mc_validate(&dist, &[1.0; 2], 10_000, &mut rng(0)),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn coordinate_weighted_sampling_frequencies() {
    let p = ProbabilityVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
    let dist = DirectionDistribution::coordinate_weighted(p.clone());
    let mut r = rng(17);
    let n = 1_000_000;
    let mut counts = [0usize; 4];
    for _ in 0..n {
        counts[dist.sample_with_index(&mut r).1.unwrap()] += 1;
    }
    for (c, p) in counts.iter().zip(p.as_slice()) {
        assert!((*c as f64 / n as f64 - p).abs() < 0.002, "{c} vs {p}");
    }
}

#[test]
fn gaussian_second_moment_and_isotropy() {
    let d = 5;
    let dist = DirectionDistribution::gaussian_scaled(d).unwrap();
    let mut r = rng(4);
    let n = 200_000;
    let mut second = vec![0.0; d];
    for _ in 0..n {
        for (m, v) in second.iter_mut().zip(dist.sample(&mut r)) {
            *m += v * v;
        }
    }
    for m in second {
        assert!((m / n as f64 - 1.0 / d as f64).abs() < 0.005);
    }
}

#[test]
fn kind_names_round_trip() {
    for kind in DistributionKind::ALL {
        assert_eq!(kind.as_str().parse::<DistributionKind>().unwrap(), kind);
    }
    assert!("cauchy".parse::<DistributionKind>().is_err());
}

#[test]
fn norm_tags_follow_the_law() {
    let p = ProbabilityVector::uniform(3).unwrap();
    let basis = random_orthonormal_basis(3, &mut rng(1));
    assert_eq!(DirectionDistribution::unit_sphere(3).unwrap().constants().norm_tag(), NormTag::L2);
    assert_eq!(DirectionDistribution::gaussian_scaled(3).unwrap().constants().norm_tag(), NormTag::L2);
    assert_eq!(DirectionDistribution::coordinate_uniform(3).unwrap().constants().norm_tag(), NormTag::L1);
    assert_eq!(
        DirectionDistribution::orthonormal_weighted(p, basis).unwrap().constants().norm_tag(),
        NormTag::WeightedL1
    );
}

fn weights(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..10.0, d)
}

proptest! {
    #[test]
    fn sphere_and_basis_draws_are_unit(d in 1usize..40, seed in any::<u64>()) {
        let mut r = rng(seed);
        let s = DirectionDistribution::unit_sphere(d).unwrap().sample(&mut r);
        prop_assert!((norm2(&s) - 1.0).abs() <= 1e-12);
        let basis = random_orthonormal_basis(d, &mut r);
        for (i, u) in basis.iter().enumerate() {
            for (j, w) in basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot(u, w) - target).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn proportional_probabilities_sum_to_one(w in (1usize..30).prop_flat_map(weights)) {
        let p = ProbabilityVector::proportional(&w).unwrap();
        let total: f64 = p.as_slice().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        let sum_w: f64 = w.iter().sum();
        for (pi, wi) in p.as_slice().iter().zip(&w) {
            prop_assert!((pi - wi / sum_w).abs() <= 1e-12);
        }
    }

    #[test]
    fn dual_norm_cauchy_schwarz(
        (g, x, w) in (1usize..12).prop_flat_map(|d| (
            prop::collection::vec(-5.0f64..5.0, d),
            prop::collection::vec(-5.0f64..5.0, d),
            weights(d),
        )),
        seed in any::<u64>(),
    ) {
        let d = g.len();
        let p = ProbabilityVector::proportional(&w).unwrap();
        let basis = random_orthonormal_basis(d, &mut rng(seed));
        let norms = [
            DNorm::L2 { dim: d },
            DNorm::L1 { dim: d },
            DNorm::WeightedL1 { weights: p.as_slice().to_vec(), basis: None },
            DNorm::WeightedL1 { weights: p.as_slice().to_vec(), basis: Some(basis) },
        ];
        for n in norms {
            let lhs = dot(&g, &x).abs();
            let rhs = n.eval(&g).unwrap() * n.dual(&x).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12, "{:?}: {} > {}", n.tag(), lhs, rhs);
        }
    }

    #[test]
    fn coordinate_law_inner_product_identity(
        (g, w) in (1usize..10).prop_flat_map(|d| (prop::collection::vec(-3.0f64..3.0, d), weights(d))),
    ) {
        // E|<g, s>| for a discrete law is sum_i p_i |<g, u_i>|, which equals the D-norm times mu_D = 1.
        let p = ProbabilityVector::proportional(&w).unwrap();
        let c = DirectionDistribution::coordinate_weighted(p.clone()).constants();
        let expected: f64 = p.as_slice().iter().zip(&g).map(|(p, g)| p * g.abs()).sum();
        prop_assert!((c.d_norm(&g).unwrap() - expected).abs() <= 1e-12 * (1.0 + expected));
    }
}
