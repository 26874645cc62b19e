mod common;

use std::sync::Arc;

use common::Waves;
use gasketlab::energy::harmonic_on;
use gasketlab::fractal::*;
use gasketlab::geometry::vertex_count;
use gasketlab::{build_level_graph, sample, SGFunction, Word};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_family(rng: &mut ChaCha8Rng, n: usize, bound: f64) -> ScalingFamily {
    let values = (0..3usize.pow(n as u32))
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    ScalingFamily::per_word(n, values).unwrap()
}

/// `f` and a base `b = f + bump` that agrees with `f` on the corners.
fn random_pair(rng: &mut ChaCha8Rng, level: usize) -> (SGFunction, SGFunction) {
    let g = build_level_graph(level).unwrap();
    let f = sample(&Waves::random(rng), &g).unwrap();
    let w = Waves::random(rng);
    let bump = sample(&gasketlab::constraints::corner_bump, &g).unwrap();
    let extra = sample(&w, &g).unwrap();
    let b = f.zip_with(&bump.zip_with(&extra, |p, q| p * q), |a, d| a + d);
    (f, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn interpolates_and_solves_equation(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, b) = random_pair(&mut rng, 4 * n);
        let alpha = random_family(&mut rng, n, 0.95);
        let r = construct_sampled(&f, &b, &alpha).unwrap();
        prop_assert_eq!(r.values.values_at(n), f.values_at(n));
        let g = f.graph();
        let src = 3 * n;
        for (rank, w) in Word::all(n).enumerate() {
            for s in 0..vertex_count(src) {
                let t = g.map_vertex(&w, src, s).unwrap();
                let rhs = f.value(t) + alpha.constant(rank).unwrap() * (r.values.value(s) - b.value(s));
                if t >= vertex_count(n) {
                    prop_assert_eq!(r.values.value(t), rhs);
                }
            }
        }
        prop_assert!(r.junction_discrepancy <= TAU_JUNCTION);
    }

    #[test]
    fn error_estimate_holds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=2);
        let (f, b) = random_pair(&mut rng, 3 * n);
        let alpha = random_family(&mut rng, n, 0.95);
        let r = construct_sampled(&f, &b, &alpha).unwrap();
        let eb = error_bound(&f, &b, &r);
        prop_assert!(eb.lhs <= eb.rhs + 1e-10);
    }

    #[test]
    fn norm_sandwich(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = build_level_graph(5).unwrap();
        let f = sample(&Waves::random(&mut rng), &g).unwrap();
        let a = rng.gen_range(0.0..0.95);
        let alpha = ScalingFamily::uniform(1, a).unwrap();
        let fa = fractal_operator(&f, &alpha).unwrap().values;
        // ‖L‖ = 1 for the harmonic base operator.
        let lhs = fa.sup_distance(&f);
        prop_assert!(lhs <= a * f.sup_norm() + a * fa.sup_norm() + 1e-12);
    }

    #[test]
    fn operator_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = build_level_graph(6).unwrap();
        let f = sample(&Waves::random(&mut rng), &g).unwrap();
        let alpha = random_family(&mut rng, 1, 0.9);
        let back = invert_operator(&fractal_operator(&f, &alpha).unwrap().values, &alpha).unwrap();
        prop_assert!(back.sup_distance(&f) <= 1e-9);
    }

    #[test]
    fn continuous_in_alpha(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, b) = random_pair(&mut rng, 5);
        let a = rng.gen_range(-0.8..0.8);
        let delta = 1e-4;
        let r0 = construct_sampled(&f, &b, &ScalingFamily::uniform(1, a).unwrap()).unwrap();
        let r1 = construct_sampled(&f, &b, &ScalingFamily::uniform(1, a + delta).unwrap()).unwrap();
        let c = f.sup_distance(&b) / (1.0 - a.abs() - delta).powi(2);
        prop_assert!(r1.values.sup_distance(&r0.values) <= c * delta + 1e-12);
    }
}

#[test]
fn linear_for_function_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = build_level_graph(4).unwrap();
    let f1 = sample(&Waves::random(&mut rng), &g).unwrap();
    let f2 = sample(&Waves::random(&mut rng), &g).unwrap();
    let a = Waves::random(&mut rng);
    let alpha = ScalingFamily::function(1, Arc::new(move |t| 0.4 * a.eval(t).tanh())).unwrap();
    let sum = fractal_operator(&f1.zip_with(&f2, |x, y| x + y), &alpha)
        .unwrap()
        .values;
    let parts = fractal_operator(&f1, &alpha)
        .unwrap()
        .values
        .zip_with(&fractal_operator(&f2, &alpha).unwrap().values, |x, y| x + y);
    assert!(sum.sup_distance(&parts) < 1e-10);
}

#[test]
fn harmonic_base_is_idempotent_on_harmonics() {
    let g = build_level_graph(6).unwrap();
    let h = harmonic_on(&g, [0.2, 0.9, -0.4]);
    for a in [0.3, 0.6, 0.9] {
        let alpha = ScalingFamily::uniform(1, a).unwrap();
        assert!(
            fractal_operator(&h, &alpha)
                .unwrap()
                .values
                .sup_distance(&h)
                < 1e-14
        );
    }
}
