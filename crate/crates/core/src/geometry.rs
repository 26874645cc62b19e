//! Gasket geometry: the contractions `L_i(t) = (p_i + t) / 2`, cell words,
//! the nested vertex sets `V_m` with their graphs, and quadrature for the
//! uniform self-similar measure.
//!
//! Vertices are stored on an integer triangular lattice so that junction
//! points shared by neighbouring cells deduplicate exactly. Ids are assigned
//! level by level, walking cells in lexicographic word order and corners in
//! the order `p1, p2, p3`; as a consequence `V_j` is always the id prefix
//! `0..vertex_count(j)` and ids never change when a graph is refined.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::EvalError;

/// Tolerance for point-in-cell tests.
pub const TAU_GEOM: f64 = 1e-9;

/// Level cap used when `GASKETLAB_MAX_LEVEL` is unset.
pub const DEFAULT_MAX_LEVEL: usize = 12;

/// Environment variable overriding [`DEFAULT_MAX_LEVEL`].
pub const MAX_LEVEL_ENV: &str = "GASKETLAB_MAX_LEVEL";

const HALF_SQRT3: f64 = 0.866_025_403_784_438_6;

/// Current level cap: `GASKETLAB_MAX_LEVEL` if it parses, else 12.
pub fn max_level() -> usize {
    std::env::var(MAX_LEVEL_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_MAX_LEVEL)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({x}, {y}) is outside cell L_{word}(SG)")]
    PointOutsideCell { word: Word, x: f64, y: f64 },
    #[error("level {level} exceeds the configured maximum {max}")]
    LevelTooLarge { level: usize, max: usize },
    #[error("invalid word {0:?}: symbols must be 1, 2 or 3")]
    InvalidWord(String),
    #[error("level mismatch: requested level {requested}, available {available}")]
    LevelMismatch { requested: usize, available: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at vertex {vertex}")]
    NonFinite { vertex: usize, value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("evaluation failed at vertex {vertex} ({x}, {y}): {source}")]
pub struct SampleError {
    pub vertex: usize,
    pub x: f64,
    pub y: f64,
    #[source]
    pub source: EvalError,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Barycentric coordinates with respect to `p1, p2, p3`.
    pub fn barycentric(self) -> [f64; 3] {
        let l3 = self.y / HALF_SQRT3;
        let l2 = self.x - 0.5 * l3;
        [1.0 - l2 - l3, l2, l3]
    }

    /// True when the point lies in the closed unit triangle, up to `tol`.
    pub fn in_triangle(self, tol: f64) -> bool {
        self.barycentric().iter().all(|&l| l >= -tol)
    }
}

/// Corners `p1 = (0,0)`, `p2 = (1,0)`, `p3 = (1/2, √3/2)`.
pub const CORNERS: [Point2; 3] = [
    Point2::new(0.0, 0.0),
    Point2::new(1.0, 0.0),
    Point2::new(0.5, HALF_SQRT3),
];

/// Lattice coordinates of the corners in the basis `e1 = p2`, `e2 = p3`.
const CORNER_LATTICE: [[u64; 2]; 3] = [[0, 0], [1, 0], [0, 1]];

/// Address of a cell `L_ω(SG)`, a finite string over `{1, 2, 3}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(symbols: Vec<u8>) -> Result<Self, GeometryError> {
        if symbols.iter().any(|s| !(1..=3).contains(s)) {
            return Err(GeometryError::InvalidWord(format!("{symbols:?}")));
        }
        Ok(Self(symbols))
    }

    /// The word of length `len` whose base-3 digits (first symbol most
    /// significant) spell `index`.
    pub fn from_index(len: usize, mut index: usize) -> Self {
        let mut symbols = vec![1u8; len];
        for slot in symbols.iter_mut().rev() {
            *slot = (index % 3) as u8 + 1;
            index /= 3;
        }
        Self(symbols)
    }

    /// Inverse of [`Word::from_index`]; lexicographic rank among words of the
    /// same length.
    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &s| acc * 3 + (s as usize - 1))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn child(&self, symbol: u8) -> Self {
        let mut symbols = self.0.clone();
        symbols.push(symbol);
        Self(symbols)
    }

    /// All words of a given length in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = Word> {
        (0..3usize.pow(len as u32)).map(move |i| Word::from_index(len, i))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let symbols = s
            .trim()
            .chars()
            .map(|c| match c {
                '1' => Ok(1),
                '2' => Ok(2),
                '3' => Ok(3),
                _ => Err(GeometryError::InvalidWord(s.to_string())),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        Ok(Self(symbols))
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// `L_ω(t) = L_{ω_1} ∘ … ∘ L_{ω_N}(t)`.
pub fn apply_map(word: &Word, t: Point2) -> Point2 {
    word.symbols().iter().rev().fold(t, |acc, &s| {
        let p = CORNERS[s as usize - 1];
        Point2::new(0.5 * (p.x + acc.x), 0.5 * (p.y + acc.y))
    })
}

/// `L_ω^{-1}(t)`, failing when `t` is not in the cell triangle of `ω`.
pub fn invert_map(word: &Word, t: Point2) -> Result<Point2, GeometryError> {
    let s = word.symbols().iter().fold(t, |acc, &s| {
        let p = CORNERS[s as usize - 1];
        Point2::new(2.0 * acc.x - p.x, 2.0 * acc.y - p.y)
    });
    let tol = TAU_GEOM * 2f64.powi(word.len() as i32);
    if s.in_triangle(tol) {
        Ok(s)
    } else {
        Err(GeometryError::PointOutsideCell {
            word: word.clone(),
            x: t.x,
            y: t.y,
        })
    }
}

/// `|V_m| = (3^{m+1} + 3) / 2`.
pub fn vertex_count(level: usize) -> usize {
    (3usize.pow(level as u32 + 1) + 3) / 2
}

/// `|edges(Γ_m)| = 3^{m+1}`.
pub fn edge_count(level: usize) -> usize {
    3usize.pow(level as u32 + 1)
}

pub fn cell_count(level: usize) -> usize {
    3usize.pow(level as u32)
}

fn lattice_key(a: u64, b: u64) -> u64 {
    (a << 32) | b
}

/// Vertices, edges and cells of `Γ_m`, together with every coarser level.
#[derive(Debug)]
pub struct LevelGraph {
    level: usize,
    points: Vec<Point2>,
    lattice: Vec<[u64; 2]>,
    birth: Vec<u8>,
    cells: Vec<Vec<[u32; 3]>>,
    index: HashMap<u64, u32>,
}

impl LevelGraph {
    fn with_max(level: usize, max: usize) -> Result<Self, GeometryError> {
        if level > max {
            return Err(GeometryError::LevelTooLarge { level, max });
        }
        let mut graph = LevelGraph {
            level: 0,
            points: CORNERS.to_vec(),
            lattice: CORNER_LATTICE.to_vec(),
            birth: vec![0; 3],
            cells: vec![vec![[0, 1, 2]]],
            index: CORNER_LATTICE
                .iter()
                .enumerate()
                .map(|(i, p)| (lattice_key(p[0], p[1]), i as u32))
                .collect(),
        };
        graph.points.reserve(vertex_count(level));
        for _ in 0..level {
            graph.refine();
        }
        Ok(graph)
    }

    fn refine(&mut self) {
        let next = self.level + 1;
        for p in &mut self.lattice {
            p[0] *= 2;
            p[1] *= 2;
        }
        self.index = self
            .lattice
            .iter()
            .enumerate()
            .map(|(i, p)| (lattice_key(p[0], p[1]), i as u32))
            .collect();

        let scale = 0.5f64.powi(next as i32);
        // Offsets of L_ω at lattice scale 2^next: offset(ωi) = 2·offset(ω) + p_i.
        let mut offsets: Vec<[u64; 2]> = vec![[0, 0]];
        for _ in 0..next {
            offsets = offsets
                .iter()
                .flat_map(|o| {
                    CORNER_LATTICE
                        .iter()
                        .map(move |p| [2 * o[0] + p[0], 2 * o[1] + p[1]])
                })
                .collect();
        }
        let mut cells = Vec::with_capacity(offsets.len());
        for off in &offsets {
            let mut cell = [0u32; 3];
            for (slot, p) in cell.iter_mut().zip(CORNER_LATTICE.iter()) {
                let (a, b) = (off[0] + p[0], off[1] + p[1]);
                let key = lattice_key(a, b);
                let id = match self.index.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = self.points.len() as u32;
                        self.index.insert(key, id);
                        self.lattice.push([a, b]);
                        self.birth.push(next as u8);
                        self.points.push(Point2::new(
                            (a as f64 + 0.5 * b as f64) * scale,
                            b as f64 * HALF_SQRT3 * scale,
                        ));
                        id
                    }
                };
                *slot = id;
            }
            cells.push(cell);
        }
        self.cells.push(cells);
        self.level = next;
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn num_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn point(&self, id: usize) -> Point2 {
        self.points[id]
    }

    /// Level at which the vertex first appears.
    pub fn birth_level(&self, id: usize) -> usize {
        self.birth[id] as usize
    }

    /// Ids of `V_0`: `p1, p2, p3`.
    pub fn boundary(&self) -> [usize; 3] {
        [0, 1, 2]
    }

    /// Cells of level `j ≤ level`, indexed by word rank; each entry holds the
    /// ids of `L_ω(p1), L_ω(p2), L_ω(p3)`.
    pub fn cells(&self, j: usize) -> &[[u32; 3]] {
        &self.cells[j]
    }

    pub fn cell(&self, word: &Word) -> [u32; 3] {
        self.cells[word.len()][word.index()]
    }

    /// Edges of `Γ_j`: the three sides of every level-`j` cell. No edge is
    /// shared between two cells.
    pub fn edges(&self, j: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells[j].iter().flat_map(|c| {
            [
                (c[0] as usize, c[1] as usize),
                (c[0] as usize, c[2] as usize),
                (c[1] as usize, c[2] as usize),
            ]
        })
    }

    /// Level-`k` descendants of level-`j` cell `c`, as a range of cell
    /// indices at level `k`.
    pub fn descendants(&self, j: usize, c: usize, k: usize) -> std::ops::Range<usize> {
        let span = 3usize.pow((k - j) as u32);
        c * span..(c + 1) * span
    }

    /// Id of the level-`j` lattice point `(a, b)` if it is a vertex.
    pub fn vertex_at(&self, j: usize, a: u64, b: u64) -> Option<usize> {
        if j > self.level {
            return None;
        }
        let shift = self.level - j;
        self.index
            .get(&lattice_key(a << shift, b << shift))
            .map(|&id| id as usize)
    }

    /// Lattice coordinates of a vertex at the scale of level `j`; `None` when
    /// the vertex is not in `V_j`.
    pub fn lattice_at(&self, id: usize, j: usize) -> Option<[u64; 2]> {
        if self.birth_level(id) > j || j > self.level {
            return None;
        }
        let shift = self.level - j;
        let p = self.lattice[id];
        Some([p[0] >> shift, p[1] >> shift])
    }

    /// For `v ∈ V_j`, the id of `L_ω(v) ∈ V_{j+|ω|}`.
    pub fn map_vertex(&self, word: &Word, j: usize, id: usize) -> Option<usize> {
        let [a, b] = self.lattice_at(id, j)?;
        let n = word.len();
        let mut off = [0u64; 2];
        for &s in word.symbols() {
            let p = CORNER_LATTICE[s as usize - 1];
            off = [2 * off[0] + p[0], 2 * off[1] + p[1]];
        }
        let lift = 1u64 << j;
        self.vertex_at(j + n, a + off[0] * lift, b + off[1] * lift)
    }
}

/// Builds `Γ_m`, refusing levels above [`max_level`].
pub fn build_level_graph(m: usize) -> Result<Arc<LevelGraph>, GeometryError> {
    build_level_graph_with_max(m, max_level())
}

pub fn build_level_graph_with_max(m: usize, max: usize) -> Result<Arc<LevelGraph>, GeometryError> {
    LevelGraph::with_max(m, max).map(Arc::new)
}

/// Something that can be evaluated at points of the gasket.
pub trait Evaluable: Sync {
    fn evaluate(&self, t: Point2) -> Result<f64, EvalError>;
}

impl<F> Evaluable for F
where
    F: Fn(Point2) -> f64 + Sync,
{
    fn evaluate(&self, t: Point2) -> Result<f64, EvalError> {
        Ok(self(t))
    }
}

/// Real values on every vertex of a level graph.
#[derive(Clone, Debug)]
pub struct SGFunction {
    graph: Arc<LevelGraph>,
    values: Vec<f64>,
}

impl SGFunction {
    pub fn new(graph: Arc<LevelGraph>, values: Vec<f64>) -> Result<Self, GeometryError> {
        if values.len() != graph.num_vertices() {
            return Err(GeometryError::LengthMismatch {
                expected: graph.num_vertices(),
                got: values.len(),
            });
        }
        if let Some((vertex, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(GeometryError::NonFinite { vertex, value });
        }
        Ok(Self { graph, values })
    }

    pub fn constant(graph: Arc<LevelGraph>, c: f64) -> Self {
        let values = vec![c; graph.num_vertices()];
        Self { graph, values }
    }

    pub fn graph(&self) -> &Arc<LevelGraph> {
        &self.graph
    }

    pub fn level(&self) -> usize {
        self.graph.level()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, id: usize) -> f64 {
        self.values[id]
    }

    /// Values on `V_j`, which are the first `|V_j|` entries.
    pub fn values_at(&self, j: usize) -> &[f64] {
        &self.values[..vertex_count(j)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise combination with another function on the same graph.
    pub fn zip_with(&self, other: &SGFunction, op: impl Fn(f64, f64) -> f64) -> SGFunction {
        assert_eq!(self.values.len(), other.values.len(), "graph mismatch");
        SGFunction {
            graph: self.graph.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> SGFunction {
        SGFunction {
            graph: self.graph.clone(),
            values: self.values.iter().map(|&v| op(v)).collect(),
        }
    }

    /// `(min, max)` of the sampled values inside every level-`j` cell, in
    /// cell order.
    pub fn cell_ranges(&self, j: usize) -> Vec<(f64, f64)> {
        let m = self.level();
        assert!(j <= m, "cell depth {j} above sample level {m}");
        let fine = self.graph.cells(m);
        let span = 3usize.pow((m - j) as u32);
        fine.par_chunks(span)
            .map(|cells| {
                cells
                    .iter()
                    .flatten()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                        let x = self.values[v as usize];
                        (lo.min(x), hi.max(x))
                    })
            })
            .collect()
    }

    /// `max_v |self(v) - other(v)|`.
    pub fn sup_distance(&self, other: &SGFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Evaluates `f` at every vertex of `graph`.
pub fn sample(f: &dyn Evaluable, graph: &Arc<LevelGraph>) -> Result<SGFunction, SampleError> {
    let values = graph
        .points()
        .par_iter()
        .enumerate()
        .map(|(vertex, &p)| {
            f.evaluate(p).map_err(|source| SampleError {
                vertex,
                x: p.x,
                y: p.y,
                source,
            })
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if let Some((vertex, p)) = values
        .iter()
        .zip(graph.points())
        .enumerate()
        .find_map(|(i, (v, p))| (!v.is_finite()).then_some((i, *p)))
    {
        return Err(SampleError {
            vertex,
            x: p.x,
            y: p.y,
            source: EvalError::NonFinite { span: 0..0 },
        });
    }
    Ok(SGFunction {
        graph: graph.clone(),
        values,
    })
}

/// Sum with a fixed pairwise tree so results do not depend on scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Cell-mean quadrature for the self-similar measure at level `n`.
#[derive(Clone, Debug)]
pub struct Quadrature {
    level: usize,
    weights: Vec<f64>,
}

impl Quadrature {
    /// Each vertex weighs `3^{-n}/3` per level-`n` cell containing it.
    pub fn new(graph: &LevelGraph, n: usize) -> Result<Self, GeometryError> {
        if n > graph.level() {
            return Err(GeometryError::LevelMismatch {
                requested: n,
                available: graph.level(),
            });
        }
        let w = 1.0 / (3.0 * cell_count(n) as f64);
        let mut weights = vec![0.0; vertex_count(n)];
        for cell in graph.cells(n) {
            for &id in cell {
                weights[id as usize] += w;
            }
        }
        Ok(Self { level: n, weights })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .collect();
        pairwise_sum(&terms)
    }
}

/// `Q_n(f) = Σ_{|ω|=n} 3^{-n} · mean(f on the corners of ω)` at the level of `f`.
pub fn integrate(f: &SGFunction) -> f64 {
    integrate_at(f, f.level())
}

pub fn integrate_at(f: &SGFunction, n: usize) -> f64 {
    let terms: Vec<f64> = f
        .graph()
        .cells(n)
        .iter()
        .map(|c| f.value(c[0] as usize) + f.value(c[1] as usize) + f.value(c[2] as usize))
        .collect();
    pairwise_sum(&terms) / (3.0 * cell_count(n) as f64)
}
