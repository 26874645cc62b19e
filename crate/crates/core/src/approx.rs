//! Minimax and one-sided approximation on sampled vertices.
//!
//! Both problems are small linear programs with few variables and many
//! rows. [`solve_lp`] handles them by running a revised simplex method on the
//! dual problem, whose basis is only `n × n`, and reads the primal point off
//! the final basis.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::energy::{multiharmonic_basis, numerical_rank, EnergyError};
use crate::fractal::{fractal_operator, FractalError, ScalingFamily};
use crate::geometry::{GeometryError, Quadrature, SGFunction};

/// Feasibility tolerance reported for optimal solutions.
pub const TAU_LP: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-11;
const PRICE_TOL: f64 = 1e-11;
const DEGENERATE_LIMIT: usize = 50;

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("basis has numerical rank {rank} but {expected} functions")]
    RankDeficient { rank: usize, expected: usize },
    #[error("simplex exceeded {iterations} pivots")]
    Cycling { iterations: usize },
    #[error("linear program is {0}")]
    Status(LpStatus),
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("empty basis")]
    EmptyBasis,
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    Free,
    Boxed { lo: f64, hi: f64 },
}

/// `maximise cᵀx` subject to `Ax ≤ b` and per-variable bounds.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub bounds: Vec<Bound>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
            bounds: vec![Bound::Free; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds `row · x ≤ rhs`.
    pub fn leq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.rows.push(row);
        self.rhs.push(rhs);
        self
    }

    pub fn bound(&mut self, var: usize, lo: f64, hi: f64) -> &mut Self {
        self.bounds[var] = Bound::Boxed { lo, hi };
        self
    }

    fn validate(&self) -> Result<(), ApproxError> {
        let n = self.num_vars();
        if n == 0 {
            return Err(ApproxError::Malformed("no variables".into()));
        }
        if self.rows.len() != self.rhs.len() || self.bounds.len() != n {
            return Err(ApproxError::Malformed("inconsistent sizes".into()));
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != n) {
            return Err(ApproxError::Malformed(format!("row {i} has wrong length")));
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self.rhs.iter().all(|v| v.is_finite())
            && self.rows.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(ApproxError::Malformed("non-finite entry".into()));
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if let Bound::Boxed { lo, hi } = *b {
                if !(lo.is_finite() && hi.is_finite()) {
                    return Err(ApproxError::Malformed(format!(
                        "bound of x{j} is not finite"
                    )));
                }
            }
        }
        Ok(())
    }

    /// All rows including those generated by boxed bounds.
    fn full_rows(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.num_vars();
        let mut rows = self.rows.clone();
        let mut rhs = self.rhs.clone();
        for (j, b) in self.bounds.iter().enumerate() {
            if let Bound::Boxed { lo, hi } = *b {
                let mut up = vec![0.0; n];
                up[j] = 1.0;
                rows.push(up);
                rhs.push(hi);
                let mut down = vec![0.0; n];
                down[j] = -1.0;
                rows.push(down);
                rhs.push(-lo);
            }
        }
        (rows, rhs)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Rows (bounds included) satisfied with equality up to [`TAU_LP`].
    pub active: usize,
    pub iterations: usize,
}

/// Revised simplex for `min costᵀy, Dy = c, y ≥ 0` where the columns of `D`
/// are the constraint rows followed by `n` signed unit columns.
struct DualSimplex<'a> {
    rows: &'a [Vec<f64>],
    n: usize,
    signs: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
    max_iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<'a> DualSimplex<'a> {
    fn column(&self, j: usize) -> DVector<f64> {
        if j < self.rows.len() {
            DVector::from_column_slice(&self.rows[j])
        } else {
            let k = j - self.rows.len();
            let mut e = DVector::zeros(self.n);
            e[k] = self.signs[k];
            e
        }
    }

    fn basis_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (k, &j) in self.basis.iter().enumerate() {
            m.set_column(k, &self.column(j));
        }
        m
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.rows.len()
    }

    /// Runs pivots until optimal. `cost(j)` gives the cost of column `j`;
    /// artificial columns never enter when `allow_artificial` is false.
    fn run(
        &mut self,
        c: &DVector<f64>,
        cost: &dyn Fn(usize) -> f64,
        allow_artificial: bool,
    ) -> Result<Outcome, ApproxError> {
        let total = self.rows.len() + self.n;
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(ApproxError::Cycling {
                    iterations: self.iterations,
                });
            }
            let bm = self.basis_matrix();
            let lu = bm.clone().lu();
            let y = lu.solve(c).expect("basis stays nonsingular");
            let cost_b = DVector::from_iterator(self.n, self.basis.iter().map(|&j| cost(j)));
            let pi = bm
                .transpose()
                .lu()
                .solve(&cost_b)
                .expect("basis stays nonsingular");

            let in_basis = {
                let mut flags = vec![false; total];
                for &j in &self.basis {
                    flags[j] = true;
                }
                flags
            };
            let reduced = |j: usize| {
                let lhs = if j < self.rows.len() {
                    dot(&self.rows[j], pi.as_slice())
                } else {
                    let k = j - self.rows.len();
                    self.signs[k] * pi[k]
                };
                cost(j) - lhs
            };
            let candidates = (0..total)
                .filter(|&j| !in_basis[j] && (allow_artificial || !self.is_artificial(j)));
            let bland = degenerate >= DEGENERATE_LIMIT;
            let mut entering: Option<(usize, f64)> = None;
            for j in candidates {
                let r = reduced(j);
                if r < -PRICE_TOL * (1.0 + cost(j).abs()) {
                    if bland {
                        entering = Some((j, r));
                        break;
                    }
                    if entering.is_none_or(|(_, best)| r < best) {
                        entering = Some((j, r));
                    }
                }
            }
            let Some((e, _)) = entering else {
                return Ok(Outcome::Optimal);
            };

            let d = lu.solve(&self.column(e)).expect("basis stays nonsingular");
            let mut leave: Option<(usize, f64)> = None;
            for k in 0..self.n {
                if d[k] > PIVOT_TOL {
                    let ratio = y[k].max(0.0) / d[k];
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best || (ratio == best && self.basis[k] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((k, ratio));
                    }
                }
            }
            let Some((k, ratio)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            degenerate = if ratio == 0.0 { degenerate + 1 } else { 0 };
            self.basis[k] = e;
            self.iterations += 1;
        }
    }

    /// Pivots basic artificial columns out wherever a real column can
    /// replace them; the rest belong to redundant equations.
    fn drive_out_artificials(&mut self) {
        for k in 0..self.n {
            if !self.is_artificial(self.basis[k]) {
                continue;
            }
            let lu = self.basis_matrix().lu();
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                if self.basis.contains(&i) {
                    continue;
                }
                let d = lu.solve(&self.column(i)).expect("basis stays nonsingular");
                let piv = d[k].abs();
                if piv > 1e-9 && best.is_none_or(|(_, b)| piv > b) {
                    best = Some((i, piv));
                }
            }
            if let Some((i, _)) = best {
                self.basis[k] = i;
            }
        }
    }
}

/// Solves `max cᵀx` subject to `Ax ≤ b` and the variable bounds.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, ApproxError> {
    lp.validate()?;
    let (rows, rhs) = lp.full_rows();
    let n = lp.num_vars();
    match solve_rows(&rows, &rhs, &lp.objective)? {
        Some((x, iterations)) => {
            let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            let active = rows
                .iter()
                .zip(&rhs)
                .filter(|(r, &b)| (dot(r, &x) - b).abs() <= TAU_LP * (1.0 + b.abs()))
                .count();
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                objective,
                active,
                iterations,
            })
        }
        None => {
            let zero = vec![0.0; n];
            let status = match solve_rows(&rows, &rhs, &zero)? {
                Some(_) => LpStatus::Unbounded,
                None => LpStatus::Infeasible,
            };
            Ok(LpSolution {
                status,
                x: Vec::new(),
                objective: match status {
                    LpStatus::Unbounded => f64::INFINITY,
                    _ => f64::NEG_INFINITY,
                },
                active: 0,
                iterations: 0,
            })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Some(x)` when optimal; `None` when the dual is infeasible (primal
/// unbounded or infeasible) or the dual is unbounded (primal infeasible) and
/// `c = 0` cannot tell them apart. With `c = 0`, `None` means infeasible.
fn solve_rows(
    rows: &[Vec<f64>],
    rhs: &[f64],
    c: &[f64],
) -> Result<Option<(Vec<f64>, usize)>, ApproxError> {
    let n = c.len();
    let m = rows.len();
    let signs: Vec<f64> = c
        .iter()
        .map(|&v| if v < 0.0 { -1.0 } else { 1.0 })
        .collect();
    let mut s = DualSimplex {
        rows,
        n,
        signs,
        basis: (m..m + n).collect(),
        iterations: 0,
        max_iterations: 50 * (m + n) + 1000,
    };
    let cv = DVector::from_column_slice(c);

    let phase1 = |j: usize| if j >= m { 1.0 } else { 0.0 };
    s.run(&cv, &phase1, true)?;
    let y = s
        .basis_matrix()
        .lu()
        .solve(&cv)
        .expect("basis stays nonsingular");
    let infeasibility: f64 = s
        .basis
        .iter()
        .zip(y.iter())
        .filter(|(&j, _)| j >= m)
        .map(|(_, v)| v.abs())
        .sum();
    let scale = 1.0 + c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if infeasibility > 1e-9 * scale {
        return Ok(None);
    }
    s.drive_out_artificials();

    let phase2 = |j: usize| if j >= m { 0.0 } else { rhs[j] };
    match s.run(&cv, &phase2, false)? {
        Outcome::Unbounded => Ok(None),
        Outcome::Optimal => {
            let cost_b = DVector::from_iterator(n, s.basis.iter().map(|&j| phase2(j)));
            let x = s
                .basis_matrix()
                .transpose()
                .lu()
                .solve(&cost_b)
                .expect("basis stays nonsingular");
            Ok(Some((x.iter().copied().collect(), s.iterations)))
        }
    }
}

/// Which class a basis spans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BasisKind {
    #[serde(rename = "Hk")]
    Multiharmonic,
    #[serde(rename = "FalphaHk")]
    Fractal,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxResult {
    pub coefficients: Vec<f64>,
    /// Sup error for minimax fits; `Q(f) - Q(h)` for one-sided fits.
    pub error: f64,
    /// Number of active constraints at the optimum.
    pub active: usize,
    pub m: usize,
    #[serde(skip)]
    pub approximant: SGFunction,
}

fn check_basis(f: &SGFunction, basis: &[SGFunction]) -> Result<(), ApproxError> {
    if basis.is_empty() {
        return Err(ApproxError::EmptyBasis);
    }
    if basis.iter().any(|b| b.values().len() != f.values().len()) {
        return Err(ApproxError::Malformed(
            "basis and target on different graphs".into(),
        ));
    }
    let (rank, _) = numerical_rank(basis);
    if rank < basis.len() {
        return Err(ApproxError::RankDeficient {
            rank,
            expected: basis.len(),
        });
    }
    Ok(())
}

fn combine(basis: &[SGFunction], coefficients: &[f64]) -> SGFunction {
    let mut out = basis[0].map(|v| v * coefficients[0]);
    for (b, &c) in basis.iter().zip(coefficients).skip(1) {
        out = out.zip_with(b, |a, v| a + c * v);
    }
    out
}

/// Minimises `max_v |f(v) - Σ c_j φ_j(v)|` over the sampled vertices. Among
/// optimal coefficient vectors the lexicographically smallest is returned.
pub fn best_chebyshev(f: &SGFunction, basis: &[SGFunction]) -> Result<ApproxResult, ApproxError> {
    check_basis(f, basis)?;
    let k = basis.len();
    let mut objective = vec![0.0; k + 1];
    objective[k] = -1.0;
    let mut lp = LinearProgram::new(objective);
    for (v, &fv) in f.values().iter().enumerate() {
        let phi: Vec<f64> = basis.iter().map(|b| b.value(v)).collect();
        let mut up: Vec<f64> = phi.iter().map(|p| -p).collect();
        up.push(-1.0);
        lp.leq(up, -fv);
        let mut down = phi;
        down.push(-1.0);
        lp.leq(down, fv);
    }
    let first = solve_lp(&lp)?;
    if first.status != LpStatus::Optimal {
        return Err(ApproxError::Status(first.status));
    }
    let e_star = -first.objective;
    let mut x = first.x;

    let mut e_row = vec![0.0; k + 1];
    e_row[k] = 1.0;
    lp.leq(e_row, e_star * (1.0 + 1e-12) + 1e-13);
    for j in 0..k {
        let mut tie = lp.clone();
        tie.objective = vec![0.0; k + 1];
        tie.objective[j] = -1.0;
        let sol = solve_lp(&tie)?;
        if sol.status != LpStatus::Optimal {
            break;
        }
        x = sol.x;
        let slack = 1e-12 * (1.0 + x[j].abs());
        let mut row = vec![0.0; k + 1];
        row[j] = 1.0;
        lp.leq(row.clone(), x[j] + slack);
        row[j] = -1.0;
        lp.leq(row, -x[j] + slack);
    }

    let coefficients = x[..k].to_vec();
    let approximant = combine(basis, &coefficients);
    let error = approximant.sup_distance(f);
    let active = f
        .values()
        .iter()
        .zip(approximant.values())
        .filter(|(a, b)| ((*a - *b).abs() - error).abs() <= TAU_LP)
        .count();
    Ok(ApproxResult {
        coefficients,
        error,
        active,
        m: f.level(),
        approximant,
    })
}

/// Maximises `Q(h)` over `h = Σ c_j φ_j` with `h ≤ f` on the quadrature
/// vertices.
pub fn best_one_sided_below(
    f: &SGFunction,
    basis: &[SGFunction],
    quadrature: &Quadrature,
) -> Result<ApproxResult, ApproxError> {
    check_basis(f, basis)?;
    let w = quadrature.weights();
    let objective = basis.iter().map(|b| quadrature.apply(b.values())).collect();
    let mut lp = LinearProgram::new(objective);
    for v in 0..w.len() {
        lp.leq(basis.iter().map(|b| b.value(v)).collect(), f.value(v));
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(ApproxError::Status(sol.status));
    }
    let approximant = combine(basis, &sol.x);
    let error = quadrature.apply(f.values()) - quadrature.apply(approximant.values());
    Ok(ApproxResult {
        coefficients: sol.x,
        error,
        active: sol.active,
        m: quadrature.level(),
        approximant,
    })
}

/// `F^α` applied to every basis function.
pub fn fractal_basis(
    basis: &[SGFunction],
    alpha: &ScalingFamily,
) -> Result<Vec<SGFunction>, ApproxError> {
    basis
        .iter()
        .map(|b| Ok(fractal_operator(b, alpha)?.values))
        .collect()
}

/// Basis of `H_k` on `V_m`, or of `F^α(H_k)` when `alpha` is given.
pub fn basis_functions(
    k: usize,
    m: usize,
    alpha: Option<&ScalingFamily>,
) -> Result<(Vec<SGFunction>, BasisKind), ApproxError> {
    let hk = multiharmonic_basis(k, m)?.functions;
    match alpha {
        None => Ok((hk, BasisKind::Multiharmonic)),
        Some(a) => Ok((fractal_basis(&hk, a)?, BasisKind::Fractal)),
    }
}
