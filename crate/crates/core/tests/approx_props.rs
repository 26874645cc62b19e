mod common;

use common::Waves;
use gasketlab::approx::*;
use gasketlab::fractal::ScalingFamily;
use gasketlab::{build_level_graph, sample, Point2, Quadrature, SGFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sup_error(f: &SGFunction, basis: &[SGFunction], c: &[f64]) -> f64 {
    (0..f.values().len())
        .map(|v| {
            (f.value(v)
                - basis
                    .iter()
                    .zip(c)
                    .map(|(b, k)| k * b.value(v))
                    .sum::<f64>())
            .abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn chebyshev_beats_random_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (basis, _) = basis_functions(1, 4, None).unwrap();
    for _ in 0..5 {
        let f = sample(&Waves::random(&mut rng), basis[0].graph()).unwrap();
        let best = best_chebyshev(&f, &basis).unwrap();
        for _ in 0..100 {
            let c: Vec<f64> = best
                .coefficients
                .iter()
                .map(|k| k + rng.gen_range(-0.5..0.5))
                .collect();
            assert!(best.error <= sup_error(&f, &basis, &c) + 1e-9);
        }
    }
}

#[test]
fn coordinate_against_random_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (basis, _) = basis_functions(0, 6, None).unwrap();
    let f = sample(&|t: Point2| t.x, basis[0].graph()).unwrap();
    let best = best_chebyshev(&f, &basis).unwrap();
    let mut search = f64::INFINITY;
    for _ in 0..100_000 {
        let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..1.5)).collect();
        search = search.min(sup_error(&f, &basis, &c));
    }
    assert!(best.error <= search + 1e-6);
}

#[test]
fn one_sided_is_feasible_and_dominant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = build_level_graph(5).unwrap();
    let (basis, _) = basis_functions(0, 5, None).unwrap();
    let h = gasketlab::energy::harmonic_on(&g, [1.0, -1.0, 0.0]);
    let f = h.map(f64::abs);
    let q = Quadrature::new(&g, 5).unwrap();
    let best = best_one_sided_below(&f, &basis, &q).unwrap();
    assert!(best.approximant.zip_with(&f, |a, b| a - b).max() <= 1e-9);
    let value = q.apply(best.approximant.values());
    let mut accepted = 0;
    while accepted < 1000 {
        let c: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.0)).collect();
        let cand = basis[0]
            .map(|v| v * c[0])
            .zip_with(&basis[1], |a, v| a + c[1] * v)
            .zip_with(&basis[2], |a, v| a + c[2] * v);
        if cand.zip_with(&f, |a, b| a - b).max() <= 0.0 {
            accepted += 1;
            assert!(value >= q.apply(cand.values()) - 1e-12);
        }
    }
}

#[test]
fn nested_spans_reduce_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (h0, _) = basis_functions(0, 4, None).unwrap();
    let (h1, _) = basis_functions(1, 4, None).unwrap();
    for _ in 0..10 {
        let f = sample(&Waves::random(&mut rng), h0[0].graph()).unwrap();
        let e0 = best_chebyshev(&f, &h0).unwrap().error;
        let e1 = best_chebyshev(&f, &h1).unwrap().error;
        assert!(e1 <= e0 + 1e-9);
    }
}

#[test]
fn fractal_image_is_recovered() {
    let alpha = ScalingFamily::uniform(1, 0.5).unwrap();
    let (fb, kind) = basis_functions(1, 4, Some(&alpha)).unwrap();
    assert_eq!(kind, BasisKind::Fractal);
    let c = [1.0, -2.0, 0.5, 3.0, 0.0, 1.0];
    let mut f = fb[0].map(|v| v * c[0]);
    for (b, k) in fb.iter().zip(c).skip(1) {
        f = f.zip_with(b, |a, v| a + k * v);
    }
    assert!(best_chebyshev(&f, &fb).unwrap().error <= 1e-8);
}

#[test]
fn fractal_basis_is_linear() {
    let alpha = ScalingFamily::uniform(1, 0.5).unwrap();
    let (h0, _) = basis_functions(0, 4, None).unwrap();
    let sum = h0[0].zip_with(&h0[1], |a, b| a + b);
    let lhs = fractal_basis(&[sum], &alpha).unwrap();
    let parts = fractal_basis(&h0[..2], &alpha).unwrap();
    let rhs = parts[0].zip_with(&parts[1], |a, b| a + b);
    assert!(lhs[0].sup_distance(&rhs) <= 1e-10);
}
