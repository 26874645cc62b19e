//! Choosing scaling factors so that fractal perturbations respect bounds.
//!
//! All extrema are taken over sampled vertices. Because the cascade only ever
//! reads `f`, `b` and `f^α` at those same vertices, the discrete versions of
//! the range and domination results hold exactly when the extrema are sampled
//! at the construction level.

use serde::Serialize;
use thiserror::Error;

use crate::energy::{harmonic_on, piecewise_harmonic, EnergyError};
use crate::fractal::{construct_sampled, FractalError, FractalResult, ScalingFamily};
use crate::geometry::{
    build_level_graph, sample, Evaluable, GeometryError, SGFunction, SampleError, Word,
};

/// Amount by which admissible intervals are kept away from `±1`.
pub const MARGIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("no admissible scaling for word {word}: [{lo}, {hi}]")]
    Infeasible { word: String, lo: f64, hi: f64 },
    #[error("function must be nonnegative, sampled minimum is {min}")]
    Negative { min: f64 },
    #[error("epsilon must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("sample level {level} is below the word length {word_len}")]
    LevelTooLow { level: usize, word_len: usize },
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Sampled extrema of `b` overall and of `f` on every cell of depth `N`.
#[derive(Clone, Debug, Serialize)]
pub struct ExtremaReport {
    pub sample_level: usize,
    pub word_len: usize,
    pub m_star: f64,
    #[serde(rename = "M_star")]
    pub big_m_star: f64,
    /// `m_ω` by word rank.
    pub cell_min: Vec<f64>,
    /// `M_ω` by word rank.
    pub cell_max: Vec<f64>,
}

pub fn compute_extrema(
    f: &SGFunction,
    b: &SGFunction,
    word_len: usize,
) -> Result<ExtremaReport, ConstraintError> {
    let level = f.level();
    if level < word_len {
        return Err(ConstraintError::LevelTooLow { level, word_len });
    }
    let (cell_min, cell_max) = f.cell_ranges(word_len).into_iter().unzip();
    Ok(ExtremaReport {
        sample_level: level,
        word_len,
        m_star: b.min(),
        big_m_star: b.max(),
        cell_min,
        cell_max,
    })
}

/// Samples `f` and `b` on `V_m` and computes their extrema.
pub fn compute_extrema_of(
    f: &dyn Evaluable,
    b: &dyn Evaluable,
    word_len: usize,
    m: usize,
) -> Result<ExtremaReport, ConstraintError> {
    let graph = build_level_graph(m)?;
    compute_extrema(&sample(f, &graph)?, &sample(b, &graph)?, word_len)
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibleInterval {
    pub word: Word,
    pub lo: f64,
    pub hi: f64,
    pub feasible: bool,
    /// False when `b < 0` somewhere or `f` leaves `[0, M̃]` on the samples.
    pub within_hypotheses: bool,
}

impl AdmissibleInterval {
    pub fn contains(&self, a: f64) -> bool {
        self.feasible && self.lo <= a && a <= self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Scaling bounds for word `rank` that keep `f^α` inside `[0, M̃]`.
pub fn admissible_interval(
    report: &ExtremaReport,
    rank: usize,
    m_tilde: f64,
) -> AdmissibleInterval {
    let m_w = report.cell_min[rank];
    let big_m_w = report.cell_max[rank];
    let below = m_tilde - report.m_star;
    let top = report.big_m_star;

    let mut lo = -1.0 + MARGIN;
    let mut hi = 1.0 - MARGIN;
    if below != 0.0 {
        lo = lo.max(-m_w / below);
        hi = hi.min((m_tilde - big_m_w) / below);
    }
    if top != 0.0 {
        lo = lo.max((big_m_w - m_tilde) / top);
        hi = hi.min(m_w / top);
    }
    let within_hypotheses = report.m_star >= 0.0
        && report.cell_min.iter().all(|&v| v >= 0.0)
        && report.cell_max.iter().all(|&v| v <= m_tilde);
    AdmissibleInterval {
        word: Word::from_index(report.word_len, rank),
        lo: lo + 0.0,
        hi: hi + 0.0,
        feasible: lo <= hi,
        within_hypotheses,
    }
}

pub fn admissible_intervals(report: &ExtremaReport, m_tilde: f64) -> Vec<AdmissibleInterval> {
    (0..report.cell_min.len())
        .map(|r| admissible_interval(report, r, m_tilde))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `α ≥ 0, b ≥ f  ⇒  f^α ≤ f`.
    Below,
    /// `α ≥ 0, b ≤ f  ⇒  f^α ≥ f`.
    Above,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Domination {
    pub hypothesis: bool,
    pub conclusion: bool,
    /// Largest amount by which the conclusion fails, zero if it holds.
    pub max_violation: f64,
}

pub fn check_domination(
    f: &SGFunction,
    b: &SGFunction,
    alpha: &ScalingFamily,
    result: &FractalResult,
    direction: Direction,
) -> Result<Domination, ConstraintError> {
    let samples = alpha.samples(f.graph(), f.level())?;
    let sign = match direction {
        Direction::Below => 1.0,
        Direction::Above => -1.0,
    };
    let alpha_ok = samples.range().0 >= 0.0;
    let base_ok = f
        .values()
        .iter()
        .zip(b.values())
        .all(|(&fv, &bv)| sign * (bv - fv) >= 0.0);
    let max_violation = result
        .values
        .values()
        .iter()
        .zip(f.values())
        .fold(0.0f64, |m, (&g, &fv)| m.max(sign * (g - fv)));
    Ok(Domination {
        hypothesis: alpha_ok && base_ok,
        conclusion: max_violation <= 0.0,
        max_violation,
    })
}

/// Output of the positivity-preserving construction.
#[derive(Clone, Debug)]
pub struct Perturbation {
    /// Level of the piecewise harmonic interpolant `g`.
    pub harmonic_level: usize,
    /// `‖f - g‖_∞` on the samples.
    pub interpolation_error: f64,
    pub h: SGFunction,
    pub b: SGFunction,
    pub alpha: ScalingFamily,
    /// `ε / (ε + 2‖h - b‖_∞)`.
    pub alpha_bound: f64,
    pub result: FractalResult,
    /// `min h^α` over the samples.
    pub min_value: f64,
    /// `‖f - h^α‖_∞` over the samples.
    pub error: f64,
}

fn validate_eps(eps: f64) -> Result<(), ConstraintError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(ConstraintError::Epsilon(eps))
    }
}

/// Coarsest piecewise harmonic `g` with `‖f - g‖ < ε/4` on the samples.
fn coarse_interpolant(
    f: &SGFunction,
    eps: f64,
) -> Result<(usize, SGFunction, f64), ConstraintError> {
    for j in 0..=f.level() {
        let g = piecewise_harmonic(f, j)?;
        let err = g.sup_distance(f);
        if err < eps / 4.0 {
            return Ok((j, g, err));
        }
    }
    unreachable!("g = f at the sample level")
}

/// A nonnegative fractal function within `ε` of a nonnegative `f`.
pub fn positive_perturbation(
    f: &SGFunction,
    eps: f64,
    word_len: usize,
) -> Result<Perturbation, ConstraintError> {
    validate_eps(eps)?;
    let min = f.min();
    if min < 0.0 {
        return Err(ConstraintError::Negative { min });
    }
    let (harmonic_level, g, interpolation_error) = coarse_interpolant(f, eps)?;
    let h = g.map(|v| v + eps / 4.0);
    let b = harmonic_on(h.graph(), [h.value(0), h.value(1), h.value(2)]);
    let m_tilde = h.max();
    let report = compute_extrema(&h, &b, word_len)?;
    let alpha_bound = eps / (eps + 2.0 * h.sup_distance(&b));

    let mut values = Vec::with_capacity(report.cell_min.len());
    for rank in 0..report.cell_min.len() {
        let iv = admissible_interval(&report, rank, m_tilde);
        let lo = iv.lo.max(-alpha_bound);
        let hi = iv.hi.min(alpha_bound);
        if !(lo <= hi) {
            return Err(ConstraintError::Infeasible {
                word: iv.word.to_string(),
                lo,
                hi,
            });
        }
        values.push(0.5 * (lo + hi));
    }
    let alpha = ScalingFamily::per_word(word_len, values)?;
    let result = construct_sampled(&h, &b, &alpha)?;
    Ok(Perturbation {
        harmonic_level,
        interpolation_error,
        min_value: result.values.min(),
        error: result.values.sup_distance(f),
        h,
        b,
        alpha,
        alpha_bound,
        result,
    })
}

/// A fractal function lying above `f` and within `ε` of it.
pub fn perturbation_above(
    f: &SGFunction,
    eps: f64,
    word_len: usize,
) -> Result<Perturbation, ConstraintError> {
    validate_eps(eps)?;
    let (harmonic_level, g, interpolation_error) = coarse_interpolant(f, eps)?;
    let h = g.map(|v| v + eps / 4.0);
    let graph = h.graph().clone();
    let bump = sample(&corner_bump, &graph)?;
    let peak = bump.max();
    let b = h.zip_with(&bump, |hv, w| hv - eps / 4.0 * (w / peak));
    let alpha_bound = eps / (eps + 2.0 * h.sup_distance(&b));
    let alpha = ScalingFamily::uniform(word_len, 0.5 * alpha_bound)?;
    let result = construct_sampled(&h, &b, &alpha)?;
    Ok(Perturbation {
        harmonic_level,
        interpolation_error,
        min_value: result.values.min(),
        error: result.values.sup_distance(f),
        h,
        b,
        alpha,
        alpha_bound,
        result,
    })
}

/// Product of the distances to the three corners; vanishes exactly on `V_0`.
pub fn corner_bump(t: crate::geometry::Point2) -> f64 {
    crate::geometry::CORNERS
        .iter()
        .map(|&p| t.distance(p))
        .product()
}

/// Convenience: sample `f` on `V_m` and run [`positive_perturbation`].
pub fn positive_perturbation_of(
    f: &dyn Evaluable,
    eps: f64,
    m: usize,
    word_len: usize,
) -> Result<Perturbation, ConstraintError> {
    let graph = build_level_graph(m)?;
    positive_perturbation(&sample(f, &graph)?, eps, word_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::harmonic_extend;
    use crate::expr::{figures, parse};
    use crate::fractal::construct_sampled;
    use crate::geometry::Point2;

    #[test]
    fn harmonic_cell_maxima() {
        let f = harmonic_extend([1.0, 0.0, 0.0], 1).unwrap();
        let r = compute_extrema(&f, &f, 1).unwrap();
        assert_eq!(r.cell_max, vec![1.0, 0.4, 0.4]);
        assert_eq!(r.cell_min, vec![0.4, 0.0, 0.0]);
    }

    #[test]
    fn constant_extrema() {
        let g = build_level_graph(3).unwrap();
        let c = SGFunction::constant(g.clone(), 0.7);
        let z = SGFunction::constant(g, 0.0);
        let r = compute_extrema(&c, &z, 2).unwrap();
        assert_eq!((r.m_star, r.big_m_star), (0.0, 0.0));
        assert!(r.cell_min.iter().chain(&r.cell_max).all(|&v| v == 0.7));
        assert!(compute_extrema(&c, &c, 4).is_err());
    }

    #[test]
    fn zero_feasible_when_b_is_f() {
        let f = sample(&parse(figures::F).unwrap(), &build_level_graph(5).unwrap()).unwrap();
        let r = compute_extrema(&f, &f, 1).unwrap();
        for iv in admissible_intervals(&r, f.max()) {
            assert!(iv.contains(0.0) && iv.within_hypotheses);
        }
    }

    #[test]
    fn zero_top_drops_terms() {
        let r = ExtremaReport {
            sample_level: 1,
            word_len: 1,
            m_star: 0.0,
            big_m_star: 0.0,
            cell_min: vec![0.1; 3],
            cell_max: vec![0.5; 3],
        };
        let iv = admissible_interval(&r, 0, 1.0);
        assert_eq!(iv.hi, 0.5);
        assert_eq!(iv.lo, -0.1);
    }

    #[test]
    fn harmonic_interval_verified_by_construction() {
        let g = build_level_graph(6).unwrap();
        let f = harmonic_on(&g, [1.0, 0.0, 0.0]);
        let r = compute_extrema(&f, &f, 1).unwrap();
        let iv = admissible_interval(&r, 1, 1.0);
        assert!(iv.feasible);
        for i in 0..20 {
            let a = iv.lo + (iv.hi - iv.lo) * i as f64 / 19.0;
            let fam = ScalingFamily::uniform(1, a).unwrap();
            let res = construct_sampled(&f, &f, &fam).unwrap();
            assert!(res.values.min() >= 0.0 && res.values.max() <= 1.0);
        }
    }

    fn bumped(level: usize, amp: f64) -> (SGFunction, SGFunction) {
        let g = build_level_graph(level).unwrap();
        let f = harmonic_on(&g, [1.0, 0.0, 0.0]);
        let bump = sample(&corner_bump, &g).unwrap();
        let b = f.zip_with(&bump, |x, w| x + amp * w);
        (f, b)
    }

    #[test]
    fn domination_below() {
        let (f, b) = bumped(6, 0.1);
        let fam = ScalingFamily::uniform(1, 0.4).unwrap();
        let res = construct_sampled(&f, &b, &fam).unwrap();
        let d = check_domination(&f, &b, &fam, &res, Direction::Below).unwrap();
        assert!(d.hypothesis && d.conclusion);

        let neg = ScalingFamily::uniform(1, -0.4).unwrap();
        let res = construct_sampled(&f, &b, &neg).unwrap();
        let d = check_domination(&f, &b, &neg, &res, Direction::Below).unwrap();
        assert!(!d.hypothesis);
    }

    #[test]
    fn domination_above_mirror() {
        let (f, b) = bumped(5, -0.1);
        let fam = ScalingFamily::uniform(1, 0.6).unwrap();
        let res = construct_sampled(&f, &b, &fam).unwrap();
        let d = check_domination(&f, &b, &fam, &res, Direction::Above).unwrap();
        assert!(d.hypothesis && d.conclusion);
        let same = construct_sampled(&f, &f, &fam).unwrap();
        let d = check_domination(&f, &f, &fam, &same, Direction::Below).unwrap();
        assert!(d.hypothesis && d.conclusion && d.max_violation == 0.0);
    }

    #[test]
    fn mirrored_range() {
        let g = build_level_graph(6).unwrap();
        let f = sample(&|t: Point2| 0.2 + t.x * t.y, &g).unwrap();
        let b = harmonic_on(&g, [f.value(0), f.value(1), f.value(2)]);
        let m_tilde = f.max();
        let r = compute_extrema(&f, &b, 1).unwrap();
        let values = admissible_intervals(&r, m_tilde)
            .iter()
            .map(|iv| iv.midpoint())
            .collect();
        let fam = ScalingFamily::per_word(1, values).unwrap();
        let nf = f.map(|v| -v);
        let nb = b.map(|v| -v);
        let res = construct_sampled(&nf, &nb, &fam).unwrap();
        assert!(res.values.max() <= 0.0 && res.values.min() >= -m_tilde);
    }

    #[test]
    fn harmonic_positive_perturbation() {
        let g = build_level_graph(5).unwrap();
        let f = harmonic_on(&g, [0.5, 0.0, 1.0]);
        let p = positive_perturbation(&f, 0.1, 1).unwrap();
        assert_eq!(p.harmonic_level, 0);
        assert!(p.min_value >= 0.0 && p.error < 0.1);
    }

    #[test]
    fn coordinate_needs_few_levels() {
        let g = build_level_graph(8).unwrap();
        let f = sample(&|t: Point2| t.x, &g).unwrap();
        let p = positive_perturbation(&f, 0.1, 1).unwrap();
        assert!(p.harmonic_level <= 4);
        assert!(p.min_value >= 0.0 && p.error < 0.1);
    }

    #[test]
    fn zero_function_perturbation() {
        let g = build_level_graph(4).unwrap();
        let f = SGFunction::constant(g, 0.0);
        let p = positive_perturbation(&f, 0.2, 1).unwrap();
        assert!(p.h.values().iter().all(|&v| v == 0.05));
        assert!(p.min_value > 0.0);
        assert!(positive_perturbation(&f.map(|v| v - 1.0), 0.1, 1).is_err());
        assert!(positive_perturbation(&f, 0.0, 1).is_err());
    }

    #[test]
    fn composite_above() {
        let g = build_level_graph(8).unwrap();
        let f = sample(&parse(figures::F).unwrap(), &g).unwrap();
        let p = perturbation_above(&f, 0.05, 1).unwrap();
        let d = check_domination(&f, &f, &p.alpha, &p.result, Direction::Above).unwrap();
        assert!(d.conclusion);
        assert!(p.error < 0.05);
    }
}
