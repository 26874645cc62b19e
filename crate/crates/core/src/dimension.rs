//! Oscillations, box counting and dimension bounds for graphs of functions
//! on the gasket.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::fractal::{FractalError, FractalResult, ScalingFamily, ScalingKind};
use crate::geometry::{
    build_level_graph, cell_count, sample, Evaluable, GeometryError, SGFunction, SampleError,
};

/// Default number of extra sampling levels below the cell depth.
pub const DEFAULT_SURPLUS: usize = 3;

/// `log 3 / log 2`, the dimension of the gasket itself.
pub fn gasket_dimension() -> f64 {
    3f64.ln() / 2f64.ln()
}

/// Upper bound for graphs of finite-energy functions.
pub fn finite_energy_upper() -> f64 {
    (108.0f64 / 5.0).ln() / (2.0 * 2f64.ln())
}

#[derive(Debug, Error)]
pub enum DimensionError {
    #[error("cells of depth {n} need samples at least 2 levels deeper, got level {level}")]
    InsufficientRefinement { n: usize, level: usize },
    #[error("a slope needs at least 3 depths, got {0}")]
    DegenerateFit(usize),
    #[error("depth range {lo}..={hi} is invalid")]
    BadRange { lo: usize, hi: usize },
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Sampled oscillation of a function on every cell of depth `n`.
#[derive(Clone, Debug, Serialize)]
pub struct OscillationTable {
    pub n: usize,
    pub q: usize,
    pub values: Vec<f64>,
}

impl OscillationTable {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn check_refinement(f: &SGFunction, n: usize) -> Result<(), DimensionError> {
    if f.level() < n + 2 {
        Err(DimensionError::InsufficientRefinement {
            n,
            level: f.level(),
        })
    } else {
        Ok(())
    }
}

/// `max - min` of `f` over the sampled vertices of each depth-`n` cell.
pub fn oscillation_table(f: &SGFunction, n: usize) -> Result<OscillationTable, DimensionError> {
    check_refinement(f, n)?;
    Ok(OscillationTable {
        n,
        q: f.level() - n,
        values: f
            .cell_ranges(n)
            .into_iter()
            .map(|(lo, hi)| hi - lo)
            .collect(),
    })
}

/// Number of half-open cubes of side `2^{-n}`, anchored at `(0, 0, min f)`,
/// that contain a sampled point of the graph of `f`.
pub fn box_count(f: &SGFunction, n: usize) -> Result<u64, DimensionError> {
    check_refinement(f, n)?;
    let graph = f.graph();
    let level = graph.level();
    let min = f.min();
    let scale = (1u64 << n) as f64;
    let shift = level - n;
    let keys: HashSet<(u64, u64, i64)> = (0..graph.num_vertices())
        .into_par_iter()
        .fold(HashSet::new, |mut set, id| {
            let [a, b] = graph.lattice_at(id, level).expect("vertex of the graph");
            // x = (2a + b) / 2^{level+1}, y = b·√3 / 2^{level+1}
            let i = (2 * a + b) >> (shift + 1);
            let j = ((b as f64) * 0.75f64.sqrt() / (1u64 << shift) as f64).floor() as u64;
            let k = ((f.value(id) - min) * scale).floor() as i64;
            set.insert((i, j, k));
            set
        })
        .reduce(HashSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    Ok(keys.len() as u64)
}

/// One row of a [`DimensionReport`].
#[derive(Clone, Debug, Serialize)]
pub struct DepthRow {
    pub n: usize,
    #[serde(rename = "N_delta")]
    pub count: u64,
    pub lower_env: f64,
    pub upper_env: f64,
    pub residual: f64,
}

impl DepthRow {
    pub fn sandwich_holds(&self) -> bool {
        self.lower_env <= self.count as f64 && self.count as f64 <= self.upper_env
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionReport {
    pub rows: Vec<DepthRow>,
    pub slope: f64,
    pub intercept: f64,
    pub sample_level: usize,
    pub q: usize,
    pub lower_bound: f64,
    pub upper_bound: Option<f64>,
}

/// Least-squares fit `y ≈ slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Counts and envelopes for every depth in `n_min..=n_max`, using samples
/// on `V_{n_max + q}`, and the fitted slope of `log₂ N_δ` against `n`.
pub fn dimension_report(
    f: &SGFunction,
    n_min: usize,
    n_max: usize,
) -> Result<DimensionReport, DimensionError> {
    if n_min > n_max {
        return Err(DimensionError::BadRange {
            lo: n_min,
            hi: n_max,
        });
    }
    let depths = n_max - n_min + 1;
    if depths < 3 {
        return Err(DimensionError::DegenerateFit(depths));
    }
    check_refinement(f, n_max)?;
    let mut rows = Vec::with_capacity(depths);
    for n in n_min..=n_max {
        let count = box_count(f, n)?;
        let lower_env = (1u64 << n) as f64 * oscillation_table(f, n)?.sum();
        let upper_env = 2.0 * cell_count(n) as f64 + lower_env;
        rows.push(DepthRow {
            n,
            count,
            lower_env,
            upper_env,
            residual: 0.0,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.count as f64).log2()).collect();
    let (slope, intercept) = fit_line(&xs, &ys);
    for (row, (x, y)) in rows.iter_mut().zip(xs.iter().zip(&ys)) {
        row.residual = y - (slope * x + intercept);
    }
    Ok(DimensionReport {
        rows,
        slope,
        intercept,
        sample_level: f.level(),
        q: f.level() - n_max,
        lower_bound: gasket_dimension(),
        upper_bound: None,
    })
}

/// Samples `f` on `V_{n_max + q}` and runs [`dimension_report`].
pub fn estimate_dimension(
    f: &dyn Evaluable,
    n_min: usize,
    n_max: usize,
    q: usize,
) -> Result<DimensionReport, DimensionError> {
    if q < 2 {
        return Err(DimensionError::InsufficientRefinement {
            n: n_max,
            level: n_max + q,
        });
    }
    let graph = build_level_graph(n_max + q)?;
    dimension_report(&sample(f, &graph)?, n_min, n_max)
}

/// Smallest `K` with `OSC_f[C] ≤ K · 2^{-jσ}` for every cell `C` of depth
/// `j ≤ max_depth`, measured on the samples.
pub fn holder_constant(f: &SGFunction, sigma: f64, max_depth: usize) -> f64 {
    (0..=max_depth.min(f.level()))
        .map(|j| {
            let osc = f
                .cell_ranges(j)
                .into_iter()
                .fold(0.0f64, |m, (lo, hi)| m.max(hi - lo));
            osc * 2f64.powf(j as f64 * sigma)
        })
        .fold(0.0, f64::max)
}

/// Hölder data of `f`, `b` and `α`, and the extreme scaling norms.
#[derive(Clone, Debug, Serialize)]
pub struct HolderData {
    pub k_f: f64,
    pub sigma_f: f64,
    pub k_b: f64,
    pub sigma_b: f64,
    pub k_alpha: f64,
    pub sigma_alpha: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// `Σ_{|ω| = N} ‖α_ω‖_∞`.
    pub gamma_bar: f64,
}

impl HolderData {
    pub fn sigma(&self) -> f64 {
        self.sigma_f.min(self.sigma_b).min(self.sigma_alpha)
    }

    /// Estimates the constants from samples, all with exponent `sigma`.
    /// Tabulated scaling families are constant per word, so `K_α = 0` for
    /// them.
    pub fn estimate(
        f: &SGFunction,
        b: &SGFunction,
        alpha: &ScalingFamily,
        sigma: f64,
    ) -> Result<Self, DimensionError> {
        let depth = f.level();
        let samples = alpha.samples(f.graph(), f.level())?;
        let norms = samples.word_norms(alpha.word_len());
        let k_alpha = match alpha.kind() {
            ScalingKind::PerWord(_) => 0.0,
            ScalingKind::Function(func) => {
                holder_constant(&sample(func.as_ref(), f.graph())?, sigma, depth)
            }
        };
        Ok(Self {
            k_f: holder_constant(f, sigma, depth),
            sigma_f: sigma,
            k_b: holder_constant(b, sigma, depth),
            sigma_b: sigma,
            k_alpha,
            sigma_alpha: sigma,
            alpha_min: norms.iter().copied().fold(f64::INFINITY, f64::min),
            alpha_max: norms.iter().copied().fold(0.0, f64::max),
            gamma_bar: norms.iter().sum(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Whichever applicable regime gives the smaller bound.
    Auto,
    /// `α_min > 2^{-Nσ}`; bound `1 + log γ̄ / (N log 2)`.
    One,
    /// `2^{-Nσ} < α_max < 1`; bound `1 + log(3 α_max) / (N log 2)`.
    Two,
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionBounds {
    pub lower: f64,
    /// `None` when the hypotheses of the requested regime fail.
    pub upper: Option<f64>,
    pub regime: Option<u8>,
}

pub fn dimension_bounds(holder: &HolderData, word_len: usize, regime: Regime) -> DimensionBounds {
    let n = word_len as f64;
    let threshold = 2f64.powf(-n * holder.sigma());
    let one = (holder.alpha_min > threshold).then(|| 1.0 + holder.gamma_bar.ln() / (n * 2f64.ln()));
    let two = (threshold < holder.alpha_max && holder.alpha_max < 1.0)
        .then(|| 1.0 + (3.0 * holder.alpha_max).ln() / (n * 2f64.ln()));
    let (upper, used) = match regime {
        Regime::One => (one, one.map(|_| 1)),
        Regime::Two => (two, two.map(|_| 2)),
        Regime::Auto => match (one, two) {
            (Some(a), Some(b)) if a <= b => (Some(a), Some(1)),
            (_, Some(b)) => (Some(b), Some(2)),
            (Some(a), None) => (Some(a), Some(1)),
            (None, None) => (None, None),
        },
    };
    DimensionBounds {
        lower: gasket_dimension(),
        upper,
        regime: used,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionRow {
    pub m: usize,
    pub cells: usize,
    /// Largest `LHS - RHS` over the cells of depth `mN`.
    pub max_excess: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionReport {
    pub rows: Vec<RecursionRow>,
    pub slack: f64,
    /// Cells whose excess is above `slack`.
    pub violations: usize,
    pub max_excess: f64,
}

/// Checks, for every cell `L_{ω_1 … ω_m}(SG)` with `m` in the range, that its
/// oscillation is bounded through the cell `L_{ω_2 … ω_m}(SG)` it is mapped
/// from:
///
/// ```text
/// OSC ≤ ‖α_{ω_1}‖·OSC[parent] + (K_b‖α_{ω_1}‖ + K_α(‖b‖ + ‖f^α‖)) / 2^{Nσ(m-1)} + K_f / 2^{Nσ}
/// ```
///
/// Oscillations are sampled on the level of `result`; `q` only sets the
/// reported slack `2^{-q} K_f`.
pub fn verify_osc_recursion(
    result: &FractalResult,
    b: &SGFunction,
    alpha: &ScalingFamily,
    holder: &HolderData,
    m_range: std::ops::RangeInclusive<usize>,
    q: usize,
) -> Result<RecursionReport, DimensionError> {
    let fa = &result.values;
    let n = alpha.word_len();
    let samples = alpha.samples(fa.graph(), fa.level())?;
    let norms = samples.word_norms(n);
    let sigma = holder.sigma();
    let carry = holder.k_alpha * (b.sup_norm() + fa.sup_norm());
    let f_term = holder.k_f / 2f64.powf(n as f64 * sigma);
    let slack = holder.k_f / 2f64.powi(q as i32);

    let mut rows = Vec::new();
    let mut violations = 0;
    let mut max_excess = f64::NEG_INFINITY;
    for m in m_range {
        if m == 0 || m * n > fa.level() {
            continue;
        }
        let osc = |depth: usize| -> Vec<f64> {
            fa.cell_ranges(depth)
                .into_iter()
                .map(|(lo, hi)| hi - lo)
                .collect()
        };
        let cells = osc(m * n);
        let parents = osc((m - 1) * n);
        let span = cell_count((m - 1) * n);
        let decay = 2f64.powf(n as f64 * sigma * (m - 1) as f64);
        let mut row_max = f64::NEG_INFINITY;
        for (c, &lhs) in cells.iter().enumerate() {
            let a = norms[c / span];
            let rhs = a * parents[c % span] + (holder.k_b * a + carry) / decay + f_term;
            let excess = lhs - rhs;
            if excess > slack {
                violations += 1;
            }
            row_max = row_max.max(excess);
        }
        max_excess = max_excess.max(row_max);
        rows.push(RecursionRow {
            m,
            cells: cells.len(),
            max_excess: row_max,
        });
    }
    Ok(RecursionReport {
        rows,
        slack,
        violations,
        max_excess,
    })
}
