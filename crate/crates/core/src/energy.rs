//! Graph energies `E_m`, graph Laplacians `Δ_m`, harmonic extension by the
//! 1/5–2/5 rule, a discrete Poisson solver and multiharmonic bases.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{
    build_level_graph, pairwise_sum, sample, vertex_count, Evaluable, GeometryError, LevelGraph,
    SGFunction, SampleError,
};

/// Tolerance on the normwise backward error of Poisson solves.
pub const TAU_LIN: f64 = 1e-10;

/// Interior unknown count up to which Poisson systems are factorised densely.
pub const DIRECT_SOLVE_LIMIT: usize = 1200;

/// Largest supported multiharmonic order `k`.
pub const MAX_ORDER: usize = 4;

/// Smallest level on which multiharmonic bases are built.
pub const MIN_BASIS_LEVEL: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("level mismatch: requested level {requested}, function lives on level {available}")]
    LevelMismatch { requested: usize, available: usize },
    #[error("Poisson solver did not converge: backward error {residual:e} after {iterations} iterations")]
    SolverDidNotConverge { residual: f64, iterations: usize },
    #[error(
        "multiharmonic basis has numerical rank {rank} < {expected} (condition {condition:e})"
    )]
    RankDeficient {
        rank: usize,
        expected: usize,
        condition: f64,
    },
    #[error("multiharmonic order {k} outside 0..={max}")]
    OrderTooLarge { k: usize, max: usize },
    #[error("basis level {m} below the minimum {min}")]
    LevelTooLow { m: usize, min: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

fn check_level(f: &SGFunction, m: usize) -> Result<(), EnergyError> {
    if m > f.level() {
        Err(EnergyError::LevelMismatch {
            requested: m,
            available: f.level(),
        })
    } else {
        Ok(())
    }
}

/// `E_m(f) = (5/3)^m Σ_{t ~_m z} (f(t) - f(z))^2`.
pub fn graph_energy(f: &SGFunction, m: usize) -> Result<f64, EnergyError> {
    energy_form(f, f, m)
}

/// Polarised energy `(5/3)^m Σ_{x ~_m y} (f(x)-f(y))(g(x)-g(y))`.
pub fn energy_form(f: &SGFunction, g: &SGFunction, m: usize) -> Result<f64, EnergyError> {
    check_level(f, m)?;
    check_level(g, m)?;
    let terms: Vec<f64> = f
        .graph()
        .edges(m)
        .map(|(a, b)| (f.value(a) - f.value(b)) * (g.value(a) - g.value(b)))
        .collect();
    Ok((5.0f64 / 3.0).powi(m as i32) * pairwise_sum(&terms))
}

/// `3K · 5^n / 2^{2n+1}`: the lower envelope of `E_n` implied by a lower
/// Hölder bound with constant `K`.
pub fn holder_envelope(k: f64, n: usize) -> f64 {
    3.0 * k * 5f64.powi(n as i32) / 2f64.powi(2 * n as i32 + 1)
}

/// `Σ_{x ~_n y} ‖x - y‖²` with Euclidean lengths.
pub fn edge_length_census(graph: &LevelGraph, n: usize) -> f64 {
    let terms: Vec<f64> = graph
        .edges(n)
        .map(|(a, b)| {
            let d = graph.point(a).distance(graph.point(b));
            d * d
        })
        .collect();
    pairwise_sum(&terms)
}

/// `Σ_{x ~_n y} (x_1 - y_1)²`, the census of horizontal edge extents.
pub fn horizontal_edge_census(graph: &LevelGraph, n: usize) -> f64 {
    let terms: Vec<f64> = graph
        .edges(n)
        .map(|(a, b)| (graph.point(a).x - graph.point(b).x).powi(2))
        .collect();
    pairwise_sum(&terms)
}

/// User-supplied lower Hölder data `(K, σ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LowerHolder {
    pub k: f64,
    pub sigma: f64,
}

/// Energies `E_0..=E_m` of one function.
#[derive(Clone, Debug, Serialize)]
pub struct EnergySequence {
    pub values: Vec<f64>,
    /// `3K·5^n/2^{2n+1}` per level, when Hölder data were supplied.
    pub envelope: Option<Vec<f64>>,
    pub holder: Option<LowerHolder>,
    pub nondecreasing: bool,
    /// Whether every `E_n` sits above the envelope (relative slack 1e-12).
    pub envelope_holds: Option<bool>,
    /// `E_{n+1} / E_n`, `NaN` where `E_n = 0`.
    pub ratios: Vec<f64>,
    /// Geometric growth of the tail (last three ratios ≥ 1.05) or a verified
    /// envelope with `K > 0`, which diverges.
    pub divergent: bool,
}

impl EnergySequence {
    pub fn from_function(f: &SGFunction, holder: Option<LowerHolder>) -> Result<Self, EnergyError> {
        let values = (0..=f.level())
            .map(|m| graph_energy(f, m))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_values(values, holder))
    }

    pub fn from_values(values: Vec<f64>, holder: Option<LowerHolder>) -> Self {
        let nondecreasing = values
            .windows(2)
            .all(|w| w[0] <= w[1] + 1e-12 * w[1].abs().max(1.0));
        let ratios: Vec<f64> = values
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::NAN })
            .collect();
        let envelope = holder.map(|h| {
            (0..values.len())
                .map(|n| holder_envelope(h.k, n))
                .collect::<Vec<_>>()
        });
        let envelope_holds = envelope.as_ref().map(|env| {
            values
                .iter()
                .zip(env)
                .all(|(e, l)| *e >= l - 1e-12 * l.abs())
        });
        let tail_growth =
            ratios.len() >= 3 && ratios[ratios.len() - 3..].iter().all(|r| *r >= 1.05);
        let envelope_diverges = envelope_holds == Some(true) && holder.is_some_and(|h| h.k > 0.0);
        Self {
            values,
            envelope,
            holder,
            nondecreasing,
            envelope_holds,
            ratios,
            divergent: tail_growth || envelope_diverges,
        }
    }
}

/// Samples `f` on `V_max_m` and returns its energy sequence.
pub fn energy_sequence(
    f: &dyn Evaluable,
    max_m: usize,
    holder: Option<LowerHolder>,
) -> Result<EnergySequence, EnergyError> {
    let graph = build_level_graph(max_m)?;
    let sampled = sample(f, &graph)?;
    EnergySequence::from_function(&sampled, holder)
}

/// Fills levels `from+1..=graph.level()` cell by cell with the 1/5–2/5 rule,
/// given values on `V_from`.
pub(crate) fn extend_harmonically(graph: &LevelGraph, values: &mut [f64], from: usize) {
    for level in from + 1..=graph.level() {
        let parents = graph.cells(level - 1);
        let children = graph.cells(level);
        for (c, parent) in parents.iter().enumerate() {
            let [a1, a2, a3] = parent.map(|id| values[id as usize]);
            let m12 = children[3 * c][1] as usize;
            let m13 = children[3 * c][2] as usize;
            let m23 = children[3 * c + 1][2] as usize;
            values[m12] = (2.0 * a1 + 2.0 * a2 + a3) / 5.0;
            values[m13] = (2.0 * a1 + 2.0 * a3 + a2) / 5.0;
            values[m23] = (2.0 * a2 + 2.0 * a3 + a1) / 5.0;
        }
    }
}

/// Harmonic function on `V_m` with boundary values `(f(p1), f(p2), f(p3))`.
pub fn harmonic_extend(boundary: [f64; 3], m: usize) -> Result<SGFunction, EnergyError> {
    let graph = build_level_graph(m)?;
    Ok(harmonic_on(&graph, boundary))
}

/// Harmonic extension on an existing graph.
pub fn harmonic_on(graph: &Arc<LevelGraph>, boundary: [f64; 3]) -> SGFunction {
    let mut values = vec![0.0; graph.num_vertices()];
    values[..3].copy_from_slice(&boundary);
    extend_harmonically(graph, &mut values, 0);
    SGFunction::new(graph.clone(), values).expect("finite boundary data")
}

/// Piecewise harmonic function of level `j`: keeps `f` on `V_j` and extends
/// harmonically inside every level-`j` cell.
pub fn piecewise_harmonic(f: &SGFunction, j: usize) -> Result<SGFunction, EnergyError> {
    check_level(f, j)?;
    let mut values = f.values().to_vec();
    extend_harmonically(f.graph(), &mut values, j);
    Ok(SGFunction::new(f.graph().clone(), values)?)
}

/// Values on `V_m \ V_0`; entry `i` belongs to vertex id `i + 3`.
#[derive(Clone, Debug)]
pub struct InteriorField {
    graph: Arc<LevelGraph>,
    level: usize,
    values: Vec<f64>,
}

impl InteriorField {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn graph(&self) -> &Arc<LevelGraph> {
        &self.graph
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at a vertex id, `None` on `V_0` or outside `V_level`.
    pub fn get(&self, id: usize) -> Option<f64> {
        id.checked_sub(3).and_then(|i| self.values.get(i).copied())
    }

    /// `(id, value)` pairs in id order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (i + 3, v))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Neighbour table of `Γ_m` restricted to `V_m`. Interior vertices have
/// exactly four neighbours, corners two.
fn neighbours(graph: &LevelGraph, m: usize) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::with_capacity(4); vertex_count(m)];
    for (a, b) in graph.edges(m) {
        adj[a].push(b as u32);
        adj[b].push(a as u32);
    }
    adj
}

/// `Δ_m f(x) = Σ_{y ~_m x} (f(y) - f(x))` for `x ∈ V_m \ V_0`.
pub fn graph_laplacian(f: &SGFunction, m: usize) -> Result<InteriorField, EnergyError> {
    check_level(f, m)?;
    let n = vertex_count(m);
    let mut acc = vec![0.0; n];
    for (a, b) in f.graph().edges(m) {
        let d = f.value(b) - f.value(a);
        acc[a] += d;
        acc[b] -= d;
    }
    Ok(InteriorField {
        graph: f.graph().clone(),
        level: m,
        values: acc.split_off(3),
    })
}

/// `(3/2) · 5^m · Δ_m f` on `V_m \ V_0`.
pub fn pointwise_laplacian(f: &SGFunction, m: usize) -> Result<InteriorField, EnergyError> {
    let mut field = graph_laplacian(f, m)?;
    let scale = 1.5 * 5f64.powi(m as i32);
    field.values.iter_mut().for_each(|v| *v *= scale);
    Ok(field)
}

/// Solves `(3/2)·5^m·Δ_m u = g` on `V_m \ V_0` with `u = boundary` on `V_0`.
///
/// `g` must live on a level-`m` graph. The interior system `4u(x) - Σ u(y)`
/// is symmetric positive definite; it is factorised densely up to
/// [`DIRECT_SOLVE_LIMIT`] unknowns and solved by conjugate gradients above.
pub fn solve_poisson(
    g: &SGFunction,
    boundary: [f64; 3],
    m: usize,
) -> Result<SGFunction, EnergyError> {
    if g.level() != m {
        return Err(EnergyError::LevelMismatch {
            requested: m,
            available: g.level(),
        });
    }
    let graph = g.graph();
    let n = vertex_count(m);
    let unknowns = n - 3;
    let adj = neighbours(graph, m);
    let scale = 1.5 * 5f64.powi(m as i32);

    // rhs(x) = -g(x)/scale + Σ_{y ∈ V_0, y ~ x} boundary(y)
    let mut rhs = vec![0.0; unknowns];
    for (i, r) in rhs.iter_mut().enumerate() {
        let id = i + 3;
        *r = -g.value(id) / scale;
        for &y in &adj[id] {
            if (y as usize) < 3 {
                *r += boundary[y as usize];
            }
        }
    }

    let interior = if unknowns == 0 {
        Vec::new()
    } else if unknowns <= DIRECT_SOLVE_LIMIT {
        let mut a = DMatrix::<f64>::zeros(unknowns, unknowns);
        for i in 0..unknowns {
            a[(i, i)] = 4.0;
            for &y in &adj[i + 3] {
                if y >= 3 {
                    a[(i, y as usize - 3)] -= 1.0;
                }
            }
        }
        let chol = a.cholesky().expect("Poisson matrix is positive definite");
        chol.solve(&DVector::from_vec(rhs.clone()))
            .as_slice()
            .to_vec()
    } else {
        conjugate_gradient(&adj, &rhs)?
    };

    let residual = backward_error(&adj, &interior, &rhs);
    if !(residual <= TAU_LIN) {
        return Err(EnergyError::SolverDidNotConverge {
            residual,
            iterations: 0,
        });
    }

    let mut values = Vec::with_capacity(n);
    values.extend_from_slice(&boundary);
    values.extend_from_slice(&interior);
    Ok(SGFunction::new(graph.clone(), values)?)
}

fn apply_interior(adj: &[Vec<u32>], u: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = 4.0 * u[i];
        for &y in &adj[i + 3] {
            if y >= 3 {
                s -= u[y as usize - 3];
            }
        }
        *o = s;
    }
}

/// `‖Au - b‖∞ / (‖A‖∞‖u‖∞ + ‖b‖∞)` with `‖A‖∞ = 8`.
fn backward_error(adj: &[Vec<u32>], u: &[f64], b: &[f64]) -> f64 {
    if u.is_empty() {
        return 0.0;
    }
    let mut au = vec![0.0; u.len()];
    apply_interior(adj, u, &mut au);
    let r = au
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let unorm = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bnorm = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let denom = 8.0 * unorm + bnorm;
    if denom == 0.0 {
        0.0
    } else {
        r / denom
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let terms: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    pairwise_sum(&terms)
}

fn conjugate_gradient(adj: &[Vec<u32>], b: &[f64]) -> Result<Vec<f64>, EnergyError> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let bnorm = rr.sqrt();
    if bnorm == 0.0 {
        return Ok(x);
    }
    let max_iter = 20 * n + 100;
    for it in 0..max_iter {
        apply_interior(adj, &p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= 1e-14 * bnorm {
            return Ok(x);
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        if it + 1 == max_iter {
            break;
        }
    }
    let residual = backward_error(adj, &x, b);
    if residual <= TAU_LIN {
        Ok(x)
    } else {
        Err(EnergyError::SolverDidNotConverge {
            residual,
            iterations: max_iter,
        })
    }
}

/// Basis `f_{j,i}` of the discrete multiharmonic space `H_k` on `V_m`.
#[derive(Clone, Debug)]
pub struct MultiharmonicBasis {
    pub order: usize,
    pub level: usize,
    /// Ordered `f_{0,1}, f_{0,2}, f_{0,3}, f_{1,1}, …`.
    pub functions: Vec<SGFunction>,
    pub rank: usize,
    /// Ratio of extreme singular values of the column-normalised sample matrix.
    pub condition: f64,
}

impl MultiharmonicBasis {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn graph(&self) -> &Arc<LevelGraph> {
        self.functions[0].graph()
    }
}

/// `f_{0,i}` harmonic with boundary `e_i`; `f_{j,i}` solves
/// `Δ f_{j,i} = f_{j-1,i}` with zero boundary values.
pub fn multiharmonic_basis(k: usize, m: usize) -> Result<MultiharmonicBasis, EnergyError> {
    if k > MAX_ORDER {
        return Err(EnergyError::OrderTooLarge { k, max: MAX_ORDER });
    }
    if m < MIN_BASIS_LEVEL {
        return Err(EnergyError::LevelTooLow {
            m,
            min: MIN_BASIS_LEVEL,
        });
    }
    let graph = build_level_graph(m)?;
    let mut functions: Vec<SGFunction> = (0..3)
        .map(|i| {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            harmonic_on(&graph, e)
        })
        .collect();
    for j in 1..=k {
        for i in 0..3 {
            let prev = &functions[3 * (j - 1) + i];
            let next = solve_poisson(prev, [0.0; 3], m)?;
            functions.push(next);
        }
    }
    let (rank, condition) = numerical_rank(&functions);
    let expected = 3 * (k + 1);
    if rank < expected {
        return Err(EnergyError::RankDeficient {
            rank,
            expected,
            condition,
        });
    }
    Ok(MultiharmonicBasis {
        order: k,
        level: m,
        functions,
        rank,
        condition,
    })
}

/// Numerical rank (relative threshold 1e-12) and condition number of the
/// column-normalised sample matrix.
pub fn numerical_rank(functions: &[SGFunction]) -> (usize, f64) {
    if functions.is_empty() {
        return (0, 1.0);
    }
    let rows = functions[0].values().len();
    let cols = functions.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    for (j, f) in functions.iter().enumerate() {
        let norm = f.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = if norm > 0.0 { 1.0 / norm } else { 0.0 };
        for (i, v) in f.values().iter().enumerate() {
            a[(i, j)] = v * scale;
        }
    }
    let sv = a.singular_values();
    let max = sv.max();
    let min = sv.min();
    let rank = sv.iter().filter(|&&s| s > 1e-12 * max).count();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    (rank, condition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;

    #[test]
    fn harmonic_first_level_values() {
        let h = harmonic_extend([1.0, 0.0, 0.0], 1).unwrap();
        let g = h.graph();
        let cells = g.cells(1);
        let m12 = cells[0][1] as usize;
        let m13 = cells[0][2] as usize;
        let m23 = cells[1][2] as usize;
        assert!((h.value(m12) - 0.4).abs() < 1e-15);
        assert!((h.value(m13) - 0.4).abs() < 1e-15);
        assert!((h.value(m23) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn harmonic_matches_energy_minimiser() {
        // Oracle: minimise E_1 over the three midpoint values.
        // ∂E/∂u_i = 0 gives 4u_i - Σ_{neighbours} u = 0 (times 2·5/3).
        let h = harmonic_extend([1.0, 0.0, 0.0], 1).unwrap();
        let g = h.graph();
        let n = g.num_vertices();
        let mut a = DMatrix::<f64>::zeros(3, 3);
        let mut rhs = DVector::<f64>::zeros(3);
        let boundary = [1.0, 0.0, 0.0];
        for (x, y) in g.edges(1) {
            for (p, q) in [(x, y), (y, x)] {
                if p >= 3 {
                    a[(p - 3, p - 3)] += 1.0;
                    if q >= 3 {
                        a[(p - 3, q - 3)] -= 1.0;
                    } else {
                        rhs[p - 3] += boundary[q];
                    }
                }
            }
        }
        let u = a.lu().solve(&rhs).unwrap();
        for id in 3..n {
            assert!((u[id - 3] - h.value(id)).abs() < 1e-14);
        }
    }

    #[test]
    fn harmonic_second_level_value() {
        let h = harmonic_extend([1.0, 0.0, 0.0], 2).unwrap();
        // Cell "1" has corner values (1, 2/5, 2/5); the midpoint between its
        // p1 and p2 corners is (2·1 + 2·(2/5) + 2/5)/5.
        let m = h.graph().cells(2)[0][1] as usize;
        assert!((h.value(m) - 16.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn constant_boundary_gives_constant() {
        let h = harmonic_extend([0.3, 0.3, 0.3], 5).unwrap();
        assert!(h.values().iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn harmonic_energy_is_constant() {
        let h = harmonic_extend([1.0, 0.0, 0.0], 8).unwrap();
        assert_eq!(graph_energy(&h, 0).unwrap(), 2.0);
        let e1 = graph_energy(&h, 1).unwrap();
        assert!((e1 - 5.0 / 3.0 * 1.2).abs() < 1e-12);
        for m in 0..=8 {
            assert!((graph_energy(&h, m).unwrap() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn energy_of_x_closed_form() {
        let g = build_level_graph(6).unwrap();
        let f = sample(&|t: Point2| t.x, &g).unwrap();
        for n in 0..=6 {
            let e = graph_energy(&f, n).unwrap();
            let expected = 1.5 * 1.25f64.powi(n as i32);
            assert!((e - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn energy_level_mismatch() {
        let h = harmonic_extend([1.0, 0.0, 0.0], 2).unwrap();
        assert!(matches!(
            graph_energy(&h, 3),
            Err(EnergyError::LevelMismatch { .. })
        ));
        assert!(graph_laplacian(&h, 3).is_err());
    }

    #[test]
    fn energy_sequence_examples() {
        let seq = energy_sequence(&|_: Point2| 4.0, 5, None).unwrap();
        assert!(seq.values.iter().all(|&v| v == 0.0));
        assert!(!seq.divergent);

        let h = harmonic_extend([1.0, 0.0, 0.0], 6).unwrap();
        let seq = EnergySequence::from_function(&h, None).unwrap();
        assert!(seq.values.iter().all(|v| (v - 2.0).abs() < 1e-9));
        assert!(seq.nondecreasing && !seq.divergent);

        let seq = energy_sequence(&|t: Point2| t.x, 7, None).unwrap();
        assert!(seq.nondecreasing);
        assert!(seq.divergent);
        assert!((seq.ratios.last().unwrap() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn envelope_lower_bound() {
        let seq = energy_sequence(
            &|t: Point2| t.x,
            6,
            Some(LowerHolder { k: 1.0, sigma: 1.0 }),
        )
        .unwrap();
        assert_eq!(seq.envelope_holds, Some(true));
        let seq = energy_sequence(
            &|t: Point2| t.x,
            6,
            Some(LowerHolder { k: 2.0, sigma: 1.0 }),
        )
        .unwrap();
        assert_eq!(seq.envelope_holds, Some(false));
    }

    #[test]
    fn laplacian_examples() {
        let g = build_level_graph(3).unwrap();
        let c = SGFunction::constant(g.clone(), 2.0);
        assert!(graph_laplacian(&c, 3)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));

        let h = harmonic_extend([1.0, 0.0, 0.0], 1).unwrap();
        let m12 = h.graph().cells(1)[0][1] as usize;
        assert!(graph_laplacian(&h, 1).unwrap().get(m12).unwrap().abs() < 1e-15);

        let x = sample(&|t: Point2| t.x, &g).unwrap();
        let lap = graph_laplacian(&x, 1).unwrap();
        assert!(lap.get(m12).unwrap().abs() < 1e-15);
        assert_eq!(lap.get(0), None);
    }

    #[test]
    fn interior_vertices_have_four_neighbours() {
        let g = build_level_graph(5).unwrap();
        let adj = neighbours(&g, 5);
        assert!(adj[..3].iter().all(|a| a.len() == 2));
        assert!(adj[3..].iter().all(|a| a.len() == 4));
    }

    #[test]
    fn harmonic_has_zero_pointwise_laplacian() {
        let h = harmonic_extend([0.2, -1.0, 3.0], 6).unwrap();
        for m in 1..=6 {
            assert!(pointwise_laplacian(&h, m).unwrap().sup_norm() < 1e-9);
        }
    }

    #[test]
    fn poisson_zero_source_is_harmonic() {
        let g = build_level_graph(5).unwrap();
        let zero = SGFunction::constant(g.clone(), 0.0);
        let u = solve_poisson(&zero, [1.0, -0.5, 2.0], 5).unwrap();
        let h = harmonic_on(&g, [1.0, -0.5, 2.0]);
        assert!(u.sup_distance(&h) < 1e-10);
        let u0 = solve_poisson(&zero, [0.0; 3], 5).unwrap();
        assert!(u0.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn poisson_unit_source_is_nonpositive() {
        let g = build_level_graph(4).unwrap();
        let one = SGFunction::constant(g.clone(), 1.0);
        let u = solve_poisson(&one, [0.0; 3], 4).unwrap();
        assert!(u.values().iter().all(|&v| v <= 0.0));
        assert!(u.values()[3..].iter().all(|&v| v < 0.0));
        let lap = pointwise_laplacian(&u, 4).unwrap();
        assert!(lap.values().iter().all(|v| (v - 1.0).abs() < 1e-7));
    }

    #[test]
    fn poisson_direct_and_iterative_agree() {
        let g = build_level_graph(6).unwrap();
        let src = sample(&|t: Point2| (4.0 * t.x).sin() - t.y, &g).unwrap();
        let direct = solve_poisson(&src, [0.1, 0.2, -0.3], 6).unwrap();
        let graph = g.clone();
        let adj = neighbours(&graph, 6);
        let scale = 1.5 * 5f64.powi(6);
        let boundary = [0.1, 0.2, -0.3];
        let rhs: Vec<f64> = (3..graph.num_vertices())
            .map(|id| {
                -src.value(id) / scale
                    + adj[id]
                        .iter()
                        .filter(|&&y| y < 3)
                        .map(|&y| boundary[y as usize])
                        .sum::<f64>()
            })
            .collect();
        let cg = conjugate_gradient(&adj, &rhs).unwrap();
        for (i, v) in cg.iter().enumerate() {
            assert!((v - direct.value(i + 3)).abs() < 1e-10);
        }
    }

    #[test]
    fn coarse_pointwise_laplacian_of_poisson_solution() {
        let m = 7;
        let g = build_level_graph(m).unwrap();
        let one = SGFunction::constant(g.clone(), 1.0);
        let u = solve_poisson(&one, [0.0; 3], m).unwrap();
        let coarse = pointwise_laplacian(&u, m - 2).unwrap();
        for v in coarse.values() {
            assert!((v - 1.0).abs() <= 0.05, "{v}");
        }
    }

    #[test]
    fn multiharmonic_basis_ranks() {
        let b0 = multiharmonic_basis(0, 4).unwrap();
        assert_eq!(b0.len(), 3);
        let sum = b0.functions[0]
            .zip_with(&b0.functions[1], |a, b| a + b)
            .zip_with(&b0.functions[2], |a, b| a + b);
        assert!(sum.values().iter().all(|v| (v - 1.0).abs() < 1e-14));

        let b1 = multiharmonic_basis(1, 4).unwrap();
        assert_eq!(b1.len(), 6);
        assert_eq!(b1.rank, 6);

        let b2 = multiharmonic_basis(2, 4).unwrap();
        assert_eq!(b2.rank, 9);
    }

    #[test]
    fn multiharmonic_basis_arguments() {
        assert!(matches!(
            multiharmonic_basis(5, 4),
            Err(EnergyError::OrderTooLarge { .. })
        ));
        assert!(matches!(
            multiharmonic_basis(1, 2),
            Err(EnergyError::LevelTooLow { .. })
        ));
    }

    #[test]
    fn higher_basis_functions_solve_poisson() {
        let b = multiharmonic_basis(1, 5).unwrap();
        let lap = pointwise_laplacian(&b.functions[3], 5).unwrap();
        for (id, v) in lap.iter() {
            assert!((v - b.functions[0].value(id)).abs() < 1e-6);
        }
        for f in &b.functions[3..] {
            assert!(f.values()[..3].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn edge_census_values() {
        let g = build_level_graph(4).unwrap();
        for n in 0..=4 {
            let h = horizontal_edge_census(&g, n);
            let expected = 3f64.powi(n as i32 + 1) / 2f64.powi(2 * n as i32 + 1);
            assert!((h - expected).abs() < 1e-14 * expected);
            let e = edge_length_census(&g, n);
            assert!((e - 2.0 * expected).abs() < 1e-12 * expected);
        }
    }
}
