//! Dense two-phase simplex with Bland's rule.
//!
//! Solves `min cᵀx  s.t.  Ax = b, x ≥ 0` and reports the optimal duals, which
//! the membership test turns into separating inequalities. The solver is
//! generic over [`LpScalar`] so the same pivoting code runs in `f64` or, with
//! the `exact` feature, in arbitrary-precision rationals.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

pub const DEFAULT_EPS_LP: f64 = 1e-8;
const MAX_PIVOTS: usize = 200_000;

/// Ordered field used by the simplex.
pub trait LpScalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Values within this of zero are treated as zero when pivoting.
    fn tolerance() -> Self;
    /// Residual phase-1 objective (relative to `1 + Σ|b|`) accepted as feasible.
    fn feasibility_tolerance() -> Self;
    fn abs(&self) -> Self;
}

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn tolerance() -> Self {
        1e-11
    }
    fn feasibility_tolerance() -> Self {
        1e-9
    }
    fn abs(&self) -> Self {
        libm::fabs(*self)
    }
}

#[cfg(feature = "exact")]
impl LpScalar for num_rational::BigRational {
    fn zero() -> Self {
        <Self as num_traits::Zero>::zero()
    }
    fn one() -> Self {
        <Self as num_traits::One>::one()
    }
    fn tolerance() -> Self {
        <Self as num_traits::Zero>::zero()
    }
    fn feasibility_tolerance() -> Self {
        <Self as num_traits::Zero>::zero()
    }
    fn abs(&self) -> Self {
        num_traits::Signed::abs(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex did not terminate within {0} pivots")]
    PivotLimit(usize),
    #[error("constraint matrix is ragged")]
    Shape,
}

/// `min cᵀx  s.t.  Ax = b, x ≥ 0`.
#[derive(Debug, Clone)]
pub struct StandardLp<T> {
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
    pub c: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
    /// One dual value per equality row: `y = c_Bᵀ B⁻¹`.
    pub duals: Vec<T>,
    pub pivots: usize,
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    num_vars: usize,
    pivots: usize,
}

impl<T: LpScalar> Tableau<T> {
    fn rhs(&self) -> usize {
        self.rows[0].len() - 1
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let width = self.rows[r].len();
        let p = self.rows[r][col].clone();
        for k in 0..width {
            let v = self.rows[r][k].clone() / p.clone();
            self.rows[r][k] = v;
        }
        let tiny = T::tolerance() * T::tolerance();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col].clone();
            if f.abs() <= T::zero() {
                continue;
            }
            for k in 0..width {
                let delta = f.clone() * self.rows[r][k].clone();
                let v = self.rows[i][k].clone() - delta;
                self.rows[i][k] = if v.abs() <= tiny { T::zero() } else { v };
            }
        }
        self.basis[r] = col;
        self.pivots += 1;
    }

    /// Reduced costs for the given column costs (indexed over all tableau columns).
    fn reduced_costs(&self, cost: &[T], columns: usize) -> Vec<T> {
        (0..columns)
            .map(|j| {
                let mut z = T::zero();
                for (i, row) in self.rows.iter().enumerate() {
                    let cb = cost[self.basis[i]].clone();
                    if cb != T::zero() {
                        z = z + cb * row[j].clone();
                    }
                }
                cost[j].clone() - z
            })
            .collect()
    }

    /// Runs Bland's rule over columns `0..enter_limit`.
    fn optimize(&mut self, cost: &[T], enter_limit: usize) -> Result<(), LpError> {
        let tol = T::tolerance();
        let rhs = self.rhs();
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(LpError::PivotLimit(MAX_PIVOTS));
            }
            let rc = self.reduced_costs(cost, enter_limit);
            let Some(enter) = (0..enter_limit).find(|&j| rc[j] < -tol.clone()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if *a > tol {
                    let ratio = self.rows[i][rhs].clone() / a.clone();
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, enter);
        }
    }
}

/// Solves a standard-form LP with the two-phase simplex method.
pub fn solve_standard<T: LpScalar>(lp: &StandardLp<T>) -> Result<LpSolution<T>, LpError> {
    let m = lp.a.len();
    let n = lp.c.len();
    if lp.b.len() != m || lp.a.iter().any(|r| r.len() != n) {
        return Err(LpError::Shape);
    }
    let width = n + m + 1;
    let mut flipped = vec![false; m];
    let mut rows = Vec::with_capacity(m);
    for (i, flip) in flipped.iter_mut().enumerate() {
        let mut row = Vec::with_capacity(width);
        let neg = lp.b[i] < T::zero();
        *flip = neg;
        for v in &lp.a[i] {
            row.push(if neg { -v.clone() } else { v.clone() });
        }
        for k in 0..m {
            row.push(if k == i { T::one() } else { T::zero() });
        }
        row.push(if neg {
            -lp.b[i].clone()
        } else {
            lp.b[i].clone()
        });
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        num_vars: n,
        pivots: 0,
    };

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![T::zero(); n + m];
    for c in phase1_cost.iter_mut().skip(n) {
        *c = T::one();
    }
    t.optimize(&phase1_cost, n)?;
    let rhs = t.rhs();
    let mut infeas = T::zero();
    let mut scale = T::one();
    for (i, row) in t.rows.iter().enumerate() {
        if t.basis[i] >= n {
            infeas = infeas + row[rhs].clone();
        }
    }
    for v in &lp.b {
        scale = scale + v.abs();
    }
    if infeas > T::feasibility_tolerance() * scale {
        return Err(LpError::Infeasible);
    }
    // Drive remaining artificials out of the basis where possible.
    for i in 0..m {
        if t.basis[i] < n {
            continue;
        }
        if let Some(j) = (0..n).find(|&j| t.rows[i][j].abs() > T::tolerance()) {
            t.pivot(i, j);
        }
    }

    // Phase 2.
    let mut cost = lp.c.clone();
    cost.extend((0..m).map(|_| T::zero()));
    t.optimize(&cost, n)?;

    let mut x = vec![T::zero(); n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rows[i][rhs].clone();
        }
    }
    let mut objective = T::zero();
    for (c, xj) in lp.c.iter().zip(&x) {
        objective = objective + c.clone() * xj.clone();
    }
    let duals = (0..m)
        .map(|i| {
            let mut y = T::zero();
            for (k, row) in t.rows.iter().enumerate() {
                let cb = cost[t.basis[k]].clone();
                if cb != T::zero() {
                    y = y + cb * row[t.num_vars + i].clone();
                }
            }
            if flipped[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    Ok(LpSolution {
        x,
        objective,
        duals,
        pivots: t.pivots,
    })
}

/// Outcome of [`hull_distance`].
#[derive(Debug, Clone)]
pub struct HullFit<T> {
    /// Convex weights over the columns attaining the distance.
    pub weights: Vec<T>,
    /// `min_q ‖Vq − p‖_∞` over the simplex, as reported by the LP.
    pub distance: T,
    /// Dual functional `c` with `⟨c, v⟩ ≤ β` for every column `v` and
    /// `⟨c, p⟩ − β = distance`.
    pub functional: Vec<T>,
    pub beta: T,
}

/// Max-norm distance from `p` to the convex hull of `columns`.
///
/// Formulated as `min t` subject to `−t ≤ (Vq − p)_r ≤ t`, `Σq = 1`, `q ≥ 0`.
/// The optimal duals of the two row blocks sum to a functional separating `p`
/// from the hull whenever the distance is positive.
pub fn hull_distance<T: LpScalar>(columns: &[Vec<T>], p: &[T]) -> Result<HullFit<T>, LpError> {
    let n = columns.len();
    let r = p.len();
    if columns.iter().any(|c| c.len() != r) {
        return Err(LpError::Shape);
    }
    // variables: q (n), t, s_plus (r), s_minus (r)
    let nv = n + 1 + 2 * r;
    let mut a = Vec::with_capacity(2 * r + 1);
    let mut b = Vec::with_capacity(2 * r + 1);
    for row in 0..r {
        let mut up = vec![T::zero(); nv];
        for (k, col) in columns.iter().enumerate() {
            up[k] = col[row].clone();
        }
        let mut down = up.clone();
        up[n] = -T::one();
        up[n + 1 + row] = T::one();
        down[n] = T::one();
        down[n + 1 + r + row] = -T::one();
        a.push(up);
        b.push(p[row].clone());
        a.push(down);
        b.push(p[row].clone());
    }
    let mut sum = vec![T::zero(); nv];
    for v in sum.iter_mut().take(n) {
        *v = T::one();
    }
    a.push(sum);
    b.push(T::one());
    let mut c = vec![T::zero(); nv];
    c[n] = T::one();
    let sol = solve_standard(&StandardLp { a, b, c })?;
    let functional: Vec<T> = (0..r)
        .map(|row| sol.duals[2 * row].clone() + sol.duals[2 * row + 1].clone())
        .collect();
    let beta = -sol.duals[2 * r].clone();
    Ok(HullFit {
        weights: sol.x[..n].to_vec(),
        distance: sol.x[n].clone(),
        functional,
        beta,
    })
}
