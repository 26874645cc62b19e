//! α-fractal functions on the gasket.
//!
//! For words `ω` of length `N`, the fractal function satisfies
//!
//! ```text
//! f^α(L_ω(s)) = f(L_ω(s)) + α_ω(s) · (f^α(s) - b(s))
//! ```
//!
//! Since `L_ω` maps `V_{(k-1)N}` onto the part of `V_{kN}` inside the cell
//! `L_ω(SG)`, the values on `V_{kN}` follow exactly from those on
//! `V_{(k-1)N}`. Starting from `f^α = f` on `V_N`, a finite cascade produces
//! `f^α` on `V_M` for any multiple `M` of `N`; no fixed-point iteration is
//! involved.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::energy::harmonic_on;
use crate::expr::Expression;
use crate::geometry::{
    build_level_graph, cell_count, sample, vertex_count, Evaluable, GeometryError, LevelGraph,
    SGFunction, SampleError, Word,
};

/// Largest tolerated disagreement between candidate values at a junction.
pub const TAU_JUNCTION: f64 = 1e-9;

/// Largest tolerated `|b(p_j) - f(p_j)|`.
pub const TAU_BOUNDARY: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FractalError {
    #[error("junction values disagree by {discrepancy:e} at vertex {vertex}")]
    JunctionInconsistency { discrepancy: f64, vertex: usize },
    #[error("scaling sup norm {norm} must be below {limit}")]
    ScalingBound { norm: f64, limit: f64 },
    #[error("base function differs from f at corner p{corner} by {difference:e}")]
    BoundaryMismatch { corner: usize, difference: f64 },
    #[error("level {level} is not a positive multiple of the word length {word_len}")]
    LevelNotMultiple { level: usize, word_len: usize },
    #[error("scaling table has {got} entries, expected {expected} for word length {word_len}")]
    TableSize {
        word_len: usize,
        expected: usize,
        got: usize,
    },
    #[error("word length must be at least 1")]
    ZeroWordLength,
    #[error("functions live on different graphs")]
    GraphMismatch,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Shared, thread-safe evaluable function.
pub type SharedFn = Arc<dyn Evaluable + Send>;

#[derive(Clone)]
pub enum ScalingKind {
    /// One constant per word of length `N`, indexed by word rank.
    PerWord(Vec<f64>),
    /// One function `α(x, y)` used for every word.
    Function(SharedFn),
}

impl fmt::Debug for ScalingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalingKind::PerWord(v) => f.debug_tuple("PerWord").field(v).finish(),
            ScalingKind::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Scaling functions `α_ω` for all words of length `N`.
#[derive(Clone, Debug)]
pub struct ScalingFamily {
    word_len: usize,
    kind: ScalingKind,
    /// Optional Hölder data `(K_α, σ_α)`.
    pub holder: Option<(f64, f64)>,
}

impl ScalingFamily {
    /// The same constant for every word.
    pub fn uniform(word_len: usize, alpha: f64) -> Result<Self, FractalError> {
        Self::per_word(word_len, vec![alpha; cell_count(word_len)])
    }

    pub fn per_word(word_len: usize, values: Vec<f64>) -> Result<Self, FractalError> {
        if word_len == 0 {
            return Err(FractalError::ZeroWordLength);
        }
        let expected = cell_count(word_len);
        if values.len() != expected {
            return Err(FractalError::TableSize {
                word_len,
                expected,
                got: values.len(),
            });
        }
        Ok(Self {
            word_len,
            kind: ScalingKind::PerWord(values),
            holder: Some((0.0, 1.0)),
        })
    }

    /// Parses `word value` lines; blank lines and `#` comments are skipped.
    /// Words missing from the table get `default`.
    pub fn from_table(text: &str, word_len: usize, default: f64) -> Result<Self, String> {
        let mut values = vec![default; cell_count(word_len)];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(w), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(format!("line {}: expected `word value`", lineno + 1));
            };
            let word: Word = w.parse().map_err(|e| format!("line {}: {e}", lineno + 1))?;
            if word.len() != word_len {
                return Err(format!(
                    "line {}: word {w} has length {}, expected {word_len}",
                    lineno + 1,
                    word.len()
                ));
            }
            values[word.index()] = v
                .parse()
                .map_err(|_| format!("line {}: bad value {v:?}", lineno + 1))?;
        }
        Self::per_word(word_len, values).map_err(|e| e.to_string())
    }

    pub fn function(word_len: usize, alpha: SharedFn) -> Result<Self, FractalError> {
        if word_len == 0 {
            return Err(FractalError::ZeroWordLength);
        }
        Ok(Self {
            word_len,
            kind: ScalingKind::Function(alpha),
            holder: None,
        })
    }

    pub fn expression(word_len: usize, alpha: Expression) -> Result<Self, FractalError> {
        let constant = alpha.is_constant();
        let mut family = Self::function(word_len, Arc::new(alpha))?;
        if constant {
            family.holder = Some((0.0, 1.0));
        }
        Ok(family)
    }

    pub fn with_holder(mut self, k: f64, sigma: f64) -> Self {
        self.holder = Some((k, sigma));
        self
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    pub fn kind(&self) -> &ScalingKind {
        &self.kind
    }

    /// Constant value of word `rank`, if the family is tabulated.
    pub fn constant(&self, rank: usize) -> Option<f64> {
        match &self.kind {
            ScalingKind::PerWord(v) => Some(v[rank]),
            ScalingKind::Function(_) => None,
        }
    }

    /// Evaluates the family at the vertices where the cascade reads it, i.e.
    /// on `V_{level - N}` of `graph`.
    pub fn samples(
        &self,
        graph: &Arc<LevelGraph>,
        level: usize,
    ) -> Result<AlphaSamples, FractalError> {
        match &self.kind {
            ScalingKind::PerWord(v) => Ok(AlphaSamples::PerWord(v.clone())),
            ScalingKind::Function(func) => {
                let n = vertex_count(level.saturating_sub(self.word_len));
                let values = graph.points()[..n]
                    .iter()
                    .enumerate()
                    .map(|(vertex, &p)| {
                        func.evaluate(p).map_err(|source| SampleError {
                            vertex,
                            x: p.x,
                            y: p.y,
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(AlphaSamples::PerVertex(values))
            }
        }
    }
}

/// Scaling values as read by the cascade.
#[derive(Clone, Debug)]
pub enum AlphaSamples {
    PerWord(Vec<f64>),
    PerVertex(Vec<f64>),
}

impl AlphaSamples {
    pub fn at(&self, word_rank: usize, vertex: usize) -> f64 {
        match self {
            AlphaSamples::PerWord(v) => v[word_rank],
            AlphaSamples::PerVertex(v) => v[vertex],
        }
    }

    /// `max_ω ‖α_ω‖_∞` over the sampled values.
    pub fn sup_norm(&self) -> f64 {
        match self {
            AlphaSamples::PerWord(v) | AlphaSamples::PerVertex(v) => {
                v.iter().fold(0.0, |m, a| m.max(a.abs()))
            }
        }
    }

    /// `‖α_ω‖_∞` per word.
    pub fn word_norms(&self, word_len: usize) -> Vec<f64> {
        match self {
            AlphaSamples::PerWord(v) => v.iter().map(|a| a.abs()).collect(),
            AlphaSamples::PerVertex(_) => vec![self.sup_norm(); cell_count(word_len)],
        }
    }

    /// `min` and `max` of the sampled values, signed.
    pub fn range(&self) -> (f64, f64) {
        match self {
            AlphaSamples::PerWord(v) | AlphaSamples::PerVertex(v) => v
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
                    (lo.min(a), hi.max(a))
                }),
        }
    }
}

/// Choice of the base function `b`.
#[derive(Clone)]
pub enum BaseChoice {
    /// `b = Lf`, the harmonic function agreeing with `f` on `V_0`.
    Harmonic,
    /// A user-supplied `b` with `b(p_j) = f(p_j)`.
    Function(SharedFn),
}

impl fmt::Debug for BaseChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseChoice::Harmonic => f.write_str("Harmonic"),
            BaseChoice::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// Data `(f, b, α, N, M)` of one α-fractal function.
#[derive(Clone)]
pub struct FractalSystem {
    pub f: SharedFn,
    pub base: BaseChoice,
    pub alpha: ScalingFamily,
    pub level: usize,
}

impl fmt::Debug for FractalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FractalSystem")
            .field("base", &self.base)
            .field("alpha", &self.alpha)
            .field("level", &self.level)
            .finish_non_exhaustive()
    }
}

impl FractalSystem {
    pub fn word_len(&self) -> usize {
        self.alpha.word_len()
    }

    /// Samples `f` and `b` on `V_M`.
    pub fn sample(&self) -> Result<(SGFunction, SGFunction), FractalError> {
        let graph = build_level_graph(self.level)?;
        let f = sample(self.f.as_ref(), &graph)?;
        let b = match &self.base {
            BaseChoice::Harmonic => harmonic_on(&graph, corner_values(&f)),
            BaseChoice::Function(b) => sample(b.as_ref(), &graph)?,
        };
        Ok((f, b))
    }
}

fn corner_values(f: &SGFunction) -> [f64; 3] {
    [f.value(0), f.value(1), f.value(2)]
}

/// Smallest multiple of `word_len` that is at least `level`.
pub fn round_up_level(level: usize, word_len: usize) -> usize {
    level.div_ceil(word_len).max(1) * word_len
}

#[derive(Clone, Debug)]
pub struct FractalResult {
    pub values: SGFunction,
    pub word_len: usize,
    /// Largest disagreement between a recomputed value and the stored one.
    pub junction_discrepancy: f64,
    /// `max_{V_M} |f^α - f|`.
    pub sup_distance: f64,
    /// `‖α‖_∞` over the sampled scaling values.
    pub alpha_norm: f64,
}

/// Builds the graph, samples `f` and `b`, and runs the cascade.
pub fn construct(system: &FractalSystem) -> Result<FractalResult, FractalError> {
    let (f, b) = system.sample()?;
    construct_sampled(&f, &b, &system.alpha)
}

/// Cascade on already sampled `f` and `b` living on the same level-`M` graph.
pub fn construct_sampled(
    f: &SGFunction,
    b: &SGFunction,
    alpha: &ScalingFamily,
) -> Result<FractalResult, FractalError> {
    if !Arc::ptr_eq(f.graph(), b.graph()) && f.values().len() != b.values().len() {
        return Err(FractalError::GraphMismatch);
    }
    let graph = f.graph().clone();
    let n = alpha.word_len();
    let level = graph.level();
    if level == 0 || level % n != 0 {
        return Err(FractalError::LevelNotMultiple { level, word_len: n });
    }
    for corner in 0..3 {
        let difference = (b.value(corner) - f.value(corner)).abs();
        if !(difference <= TAU_BOUNDARY) {
            return Err(FractalError::BoundaryMismatch {
                corner: corner + 1,
                difference,
            });
        }
    }
    let samples = alpha.samples(&graph, level)?;
    let alpha_norm = samples.sup_norm();
    if !(alpha_norm < 1.0) {
        return Err(FractalError::ScalingBound {
            norm: alpha_norm,
            limit: 1.0,
        });
    }

    let fv = f.values();
    let bv = b.values();
    let mut out = vec![f64::NAN; graph.num_vertices()];
    out[..vertex_count(n)].copy_from_slice(&fv[..vertex_count(n)]);
    let mut discrepancy = 0.0f64;
    let mut worst = 0usize;

    let words: Vec<Word> = Word::all(n).collect();
    for k in 2..=level / n {
        let src_level = (k - 1) * n;
        let src_count = vertex_count(src_level);
        for (rank, word) in words.iter().enumerate() {
            for s in 0..src_count {
                let t = graph
                    .map_vertex(word, src_level, s)
                    .expect("image of V_(k-1)N lies in V_kN");
                let value = fv[t] + samples.at(rank, s) * (out[s] - bv[s]);
                if out[t].is_nan() {
                    out[t] = value;
                } else {
                    let d = (value - out[t]).abs();
                    if d > discrepancy {
                        discrepancy = d;
                        worst = t;
                    }
                }
            }
        }
    }
    if discrepancy > TAU_JUNCTION {
        return Err(FractalError::JunctionInconsistency {
            discrepancy,
            vertex: worst,
        });
    }
    let values = SGFunction::new(graph, out)?;
    let sup_distance = values.sup_distance(f);
    Ok(FractalResult {
        values,
        word_len: n,
        junction_discrepancy: discrepancy,
        sup_distance,
        alpha_norm,
    })
}

/// `F^α(f)` with the harmonic base operator `Lf`.
pub fn fractal_operator(
    f: &SGFunction,
    alpha: &ScalingFamily,
) -> Result<FractalResult, FractalError> {
    let b = harmonic_on(f.graph(), corner_values(f));
    construct_sampled(f, &b, alpha)
}

/// Recovers `f` from `g = F^α(f)` (harmonic base operator) by solving the
/// self-referential equation for `f`.
pub fn invert_operator(g: &SGFunction, alpha: &ScalingFamily) -> Result<SGFunction, FractalError> {
    let graph = g.graph().clone();
    let n = alpha.word_len();
    let level = graph.level();
    if level == 0 || level % n != 0 {
        return Err(FractalError::LevelNotMultiple { level, word_len: n });
    }
    let samples = alpha.samples(&graph, level)?;
    let norm = samples.sup_norm();
    if !(norm < 1.0) {
        return Err(FractalError::ScalingBound { norm, limit: 1.0 });
    }
    let b = harmonic_on(&graph, corner_values(g));
    let gv = g.values();
    let bv = b.values();
    let mut out = gv.to_vec();
    let src_level = level - n;
    for (rank, word) in Word::all(n).enumerate() {
        for s in 0..vertex_count(src_level) {
            let t = graph
                .map_vertex(&word, src_level, s)
                .expect("image of V_(M-N) lies in V_M");
            if t >= vertex_count(n) {
                out[t] = gv[t] - samples.at(rank, s) * (gv[s] - bv[s]);
            }
        }
    }
    Ok(SGFunction::new(graph, out)?)
}

/// Both sides of `‖f^α - f‖ ≤ ‖α‖/(1-‖α‖) · ‖f - b‖` over `V_M`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ErrorBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn error_bound(f: &SGFunction, b: &SGFunction, result: &FractalResult) -> ErrorBound {
    let lhs = result.values.sup_distance(f);
    let a = result.alpha_norm;
    let rhs = a / (1.0 - a) * f.sup_distance(b);
    ErrorBound {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    }
}
