use opstat_core::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn random_simplex(k: usize, rng: &mut ChaCha8Rng) -> ProbabilityVector {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let t: f64 = w.iter().sum();
    ProbabilityVector::new(w.into_iter().map(|x| x / t).collect()).unwrap()
}

#[test]
fn exact_matches_enumeration_small_grid() {
    let cfg = PrecisionConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 2..=4 {
        let mut laws = vec![
            Scenario::Equiprobable.probabilities(k).unwrap(),
            Scenario::Linear.probabilities(k).unwrap(),
        ];
        laws.extend((0..5).map(|_| random_simplex(k, &mut rng)));
        for p in &laws {
            for n in 2..=12 {
                let (m, v) = enumerate_moments(p, n).unwrap();
                let em = exact_mean(p, n, &cfg).unwrap();
                let ev = exact_variance(p, n, &cfg).unwrap();
                assert!(rel(em.value, m) < 1e-12, "mean k={k} n={n}");
                assert!(rel(ev.value, v) < 1e-12, "variance k={k} n={n}: {} vs {v}", ev.value);
            }
        }
    }
}

#[test]
fn fair_coin_two_draws() {
    let cfg = PrecisionConfig::default();
    let p = ProbabilityVector::uniform(2).unwrap();
    let ln2 = std::f64::consts::LN_2;
    assert!((exact_mean(&p, 2, &cfg).unwrap().value - ln2 / 2.0).abs() < 1e-14);
    assert!((exact_variance(&p, 2, &cfg).unwrap().value - ln2 * ln2 / 4.0).abs() < 1e-14);
}

#[test]
fn precision_bound_is_honest() {
    let p = Scenario::Linear.probabilities(6).unwrap();
    let lo = exact_mean(&p, 200, &PrecisionConfig::new(128, 2000).unwrap()).unwrap();
    let hi = exact_mean(&p, 200, &PrecisionConfig::new(512, 2000).unwrap()).unwrap();
    assert!((lo.value - hi.value).abs() <= lo.error_bound + hi.error_bound);
    let lo = exact_variance(&p, 60, &PrecisionConfig::new(128, 2000).unwrap()).unwrap();
    let hi = exact_variance(&p, 60, &PrecisionConfig::new(512, 2000).unwrap()).unwrap();
    assert!((lo.value - hi.value).abs() <= lo.error_bound + hi.error_bound);
}

#[test]
fn exact_sits_between_approximations_and_limit() {
    let cfg = PrecisionConfig::default();
    let p = Scenario::Linear.probabilities(6).unwrap();
    let e = exact_mean(&p, 300, &cfg).unwrap().value;
    let third = hutcheson_approx_moments(&p, 300, ApproxOrder::Third).unwrap().mean;
    assert!(e < shannon_entropy(&p));
    assert!((e - third).abs() < 1e-5);
    let v = exact_variance(&p, 300, &cfg).unwrap().value;
    let v3 = hutcheson_approx_moments(&p, 300, ApproxOrder::Third).unwrap().variance;
    assert!(rel(v3, v) < 1e-3);
}

#[test]
fn feasibility_frontier_is_monotone() {
    let cfg = PrecisionConfig::new(256, 600).unwrap();
    let small = feasibility_probe(6, Scenario::Equiprobable, &cfg).unwrap();
    let large = feasibility_probe(720, Scenario::Equiprobable, &cfg).unwrap();
    assert!(large <= small);
    assert!(small >= 400 && large >= 110);
}

#[test]
fn capacity_errors() {
    let cfg = PrecisionConfig::new(128, 50).unwrap();
    let p = ProbabilityVector::uniform(3).unwrap();
    assert!(matches!(exact_mean(&p, 51, &cfg), Err(Error::Capacity(_))));
    let big = ProbabilityVector::uniform(24).unwrap();
    assert!(matches!(enumerate_moments(&big, 40), Err(Error::Capacity(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_matches_enumeration_random(w in prop::collection::vec(0.02f64..1.0, 2..=4), n in 2u64..=10) {
        let t: f64 = w.iter().sum();
        let p = ProbabilityVector::new(w.iter().map(|x| x / t).collect()).unwrap();
        let cfg = PrecisionConfig::default();
        let (m, v) = enumerate_moments(&p, n).unwrap();
        prop_assert!(rel(exact_mean(&p, n, &cfg).unwrap().value, m) < 1e-12);
        prop_assert!(rel(exact_variance(&p, n, &cfg).unwrap().value, v) < 1e-12);
    }
}
