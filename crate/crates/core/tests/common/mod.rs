#![allow(dead_code)]

use gasketlab::Point2;
use rand::Rng;

/// Smooth random function: a short sum of plane waves.
#[derive(Clone, Debug)]
pub struct Waves(Vec<[f64; 4]>);

impl Waves {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let k = rng.gen_range(1..=3);
        Self(
            (0..k)
                .map(|_| {
                    [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-4.0..4.0),
                        rng.gen_range(-4.0..4.0),
                        rng.gen_range(0.0..6.3),
                    ]
                })
                .collect(),
        )
    }

    pub fn eval(&self, t: Point2) -> f64 {
        self.0
            .iter()
            .map(|[a, b, c, d]| a * (b * t.x + c * t.y + d).sin())
            .sum()
    }
}

impl gasketlab::geometry::Evaluable for Waves {
    fn evaluate(&self, t: Point2) -> Result<f64, gasketlab::expr::EvalError> {
        Ok(self.eval(t))
    }
}
