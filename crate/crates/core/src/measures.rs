//! Relative entropies and the relative entropy of contextuality.
//!
//! `R_C(B) = min_{q ∈ Δ} max_x KL(p(·|x) ‖ (Vq)(·|x))` over the maximal
//! contexts, where the columns of `V` are the deterministic strategies. Values
//! are reported in bits; the solvers work in nats internally.
//!
//! The main solver is a log-barrier interior-point method on the epigraph
//! form `min s  s.t.  f_x(q) ≤ s`, run on a growing subset of strategies
//! (column generation). Every outer step prices all strategies, which yields a
//! valid lower bound on the optimum; the reported gap is the distance between
//! the best value found and the best lower bound. An exponentiated-gradient
//! method on a softmax-smoothed maximum is provided as an independent check.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::behavior::{same_scenario, Behavior, BehaviorError, BlackBox, DEFAULT_EPS_NORM};
use crate::ncpolytope::{enumerate_strategies, DeterministicStrategy, NcBox, NcError};
use crate::report::ValidationReport;
use crate::scenario::DEFAULT_ENUMERATION_CAP;
use crate::wiring::{Wiring, WiringError};

pub const DEFAULT_RC_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100_000;

const LN2: f64 = core::f64::consts::LN_2;

/// Newton decrement `λ²/2` below which a barrier subproblem counts as centered.
const CENTERING_DECREMENT: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("distributions have lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("distribution sums to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("distribution has a negative or non-finite entry")]
    NotProbability,
    #[error("behavior is invalid: {0:?}")]
    InvalidBehavior(ValidationReport),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    Nc(#[from] NcError),
    #[error(transparent)]
    Wiring(#[from] WiringError),
}

fn check_distribution(p: &[f64], eps_norm: f64) -> Result<(), MeasureError> {
    if p.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(MeasureError::NotProbability);
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > eps_norm {
        return Err(MeasureError::NotNormalized { sum });
    }
    Ok(())
}

/// `Σ p log2(p/q)`, with `0 log 0 = 0` and `+∞` when `p > 0 = q`.
pub fn kl_divergence(p: &[f64], q: &[f64], eps_norm: f64) -> Result<f64, MeasureError> {
    if p.len() != q.len() {
        return Err(MeasureError::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    check_distribution(p, eps_norm)?;
    check_distribution(q, eps_norm)?;
    let mut s = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b == 0.0 {
                return Ok(f64::INFINITY);
            }
            s += a * libm::log2(a / b);
        }
    }
    Ok(s.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    /// Bits.
    pub value: f64,
    /// Context attaining the maximum (first one on ties).
    pub context: usize,
}

/// `max_x KL(P(·|x) ‖ P*(·|x))` over all stored contexts.
pub fn behavior_relative_entropy(p: &Behavior, q: &Behavior) -> Result<Divergence, MeasureError> {
    if !same_scenario(p.scenario(), q.scenario()) {
        return Err(BehaviorError::ScenarioMismatch.into());
    }
    let mut best = Divergence {
        value: f64::NEG_INFINITY,
        context: 0,
    };
    for j in 0..p.scenario().num_contexts() {
        let d = kl_divergence(p.row(j), q.row(j), DEFAULT_EPS_NORM)?;
        if d > best.value {
            best = Divergence {
                value: d,
                context: j,
            };
        }
    }
    Ok(best)
}

/// The objective `F(q)` of the relative entropy of contextuality for one box.
#[derive(Debug, Clone)]
pub struct RcObjective {
    contexts: Vec<usize>,
    p: Vec<Vec<f64>>,
    support: Vec<Vec<usize>>,
    /// `Σ_o p_o ln p_o` per context.
    neg_entropy: Vec<f64>,
    strategies: Vec<DeterministicStrategy>,
    /// `outcome[k][x]`: outcome index strategy `k` produces on maximal context `x`.
    outcome: Vec<Vec<u32>>,
    /// Mixed-radix weights of the strategy enumeration, one per button.
    radix: Vec<(usize, usize)>,
    bx: BlackBox,
}

impl RcObjective {
    pub fn new(bx: &BlackBox, cap: usize) -> Result<Self, MeasureError> {
        let report = bx.behavior().validate(DEFAULT_EPS_NORM);
        if !report.ok {
            return Err(MeasureError::InvalidBehavior(report));
        }
        let s = bx.scenario();
        let contexts = s.maximal_indices().to_vec();
        let p: Vec<Vec<f64>> = contexts
            .iter()
            .map(|&j| bx.behavior().row(j).to_vec())
            .collect();
        let support: Vec<Vec<usize>> = p
            .iter()
            .map(|row| (0..row.len()).filter(|&o| row[o] > 0.0).collect())
            .collect();
        let neg_entropy = p
            .iter()
            .zip(&support)
            .map(|(row, sup)| sup.iter().map(|&o| row[o] * libm::log(row[o])).sum())
            .collect();
        let strategies = enumerate_strategies(s, cap)?;
        let outcome = strategies
            .iter()
            .map(|d| {
                contexts
                    .iter()
                    .map(|&j| d.outcome_in(s, j) as u32)
                    .collect()
            })
            .collect();
        let mut radix = vec![(0, 0); s.num_buttons()];
        let mut stride = 1;
        for i in (0..s.num_buttons()).rev() {
            radix[i] = (stride, s.lights_of_button(i).len());
            stride *= s.lights_of_button(i).len();
        }
        Ok(RcObjective {
            contexts,
            p,
            support,
            neg_entropy,
            strategies,
            outcome,
            radix,
            bx: bx.clone(),
        })
    }

    pub fn num_strategies(&self) -> usize {
        self.strategies.len()
    }

    pub fn strategies(&self) -> &[DeterministicStrategy] {
        &self.strategies
    }

    /// Maximal contexts, in the order the objective uses them.
    pub fn contexts(&self) -> &[usize] {
        &self.contexts
    }

    /// `(Vq)` per maximal context, for weights `q` on the columns `cols`.
    fn masses(&self, cols: &[usize], q: &[f64]) -> Vec<Vec<f64>> {
        let mut m: Vec<Vec<f64>> = self.p.iter().map(|r| vec![0.0; r.len()]).collect();
        for (&k, &w) in cols.iter().zip(q) {
            for (x, &o) in self.outcome[k].iter().enumerate() {
                m[x][o as usize] += w;
            }
        }
        m
    }

    /// Per-context KL in nats.
    fn kls(&self, m: &[Vec<f64>]) -> Vec<f64> {
        (0..self.p.len())
            .map(|x| {
                let mut f = self.neg_entropy[x];
                for &o in &self.support[x] {
                    f -= self.p[x][o] * libm::log(m[x][o]);
                }
                f
            })
            .collect()
    }

    /// `F(q)` in bits for weights over all strategies, in enumeration order.
    pub fn value(&self, q: &[f64]) -> f64 {
        let cols: Vec<usize> = (0..self.strategies.len()).collect();
        let m = self.masses(&cols, q);
        self.kls(&m)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
            / LN2
    }

    /// Per-context KL in bits for weights over all strategies.
    pub fn context_values(&self, q: &[f64]) -> Vec<f64> {
        let cols: Vec<usize> = (0..self.strategies.len()).collect();
        let m = self.masses(&cols, q);
        self.kls(&m).into_iter().map(|f| f / LN2).collect()
    }

    /// Index of the strategy agreeing with outcome `o` on maximal context `x`
    /// and lighting the first light of every other button.
    fn covering_strategy(&self, x: usize, o: usize) -> usize {
        let s = self.bx.scenario();
        let sp = s.outcome_space(self.contexts[x]);
        let mut k = 0;
        for (&i, d) in sp.buttons().iter().zip(sp.digits(o)) {
            k += d * self.radix[i].0;
        }
        k
    }

    fn nc_box(&self, cols: &[usize], q: &[f64]) -> NcBox {
        let mut pairs: Vec<(usize, f64)> = cols
            .iter()
            .copied()
            .zip(q.iter().copied())
            .filter(|&(_, w)| w > 0.0)
            .collect();
        pairs.sort_by_key(|&(k, _)| k);
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        NcBox::new_unchecked(
            self.bx.scenario().clone(),
            pairs
                .iter()
                .map(|&(k, _)| self.strategies[k].clone())
                .collect(),
            pairs.iter().map(|&(_, w)| w / total).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcOptions {
    /// Target certified gap, in bits.
    pub tol: f64,
    /// Budget of Newton iterations.
    pub max_iter: usize,
    /// Cap on the number of deterministic strategies.
    pub cap: usize,
}

impl Default for RcOptions {
    fn default() -> Self {
        RcOptions {
            tol: DEFAULT_RC_TOL,
            max_iter: DEFAULT_MAX_ITER,
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcResult {
    /// Bits.
    pub value: f64,
    pub argmin: NcBox,
    /// Stored context attaining the maximum at the argmin.
    pub worst_context: usize,
    pub iterations: usize,
    /// Certified gap `value − lower_bound`, in bits.
    pub gap_estimate: f64,
    pub lower_bound: f64,
    pub converged: bool,
}

/// Interior-point state on the active columns.
struct Barrier<'a> {
    obj: &'a RcObjective,
    cols: Vec<usize>,
    q: Vec<f64>,
    s: f64,
    /// `groups[x][o]`: positions in `cols` producing outcome `o` on context `x`.
    groups: Vec<Vec<Vec<usize>>>,
}

impl<'a> Barrier<'a> {
    fn new(obj: &'a RcObjective, cols: Vec<usize>, q: Vec<f64>, s: f64) -> Self {
        let mut b = Barrier {
            obj,
            cols,
            q,
            s,
            groups: Vec::new(),
        };
        b.regroup();
        b
    }

    fn regroup(&mut self) {
        self.groups = self
            .obj
            .p
            .iter()
            .map(|r| vec![Vec::new(); r.len()])
            .collect();
        for (pos, &k) in self.cols.iter().enumerate() {
            for (x, &o) in self.obj.outcome[k].iter().enumerate() {
                self.groups[x][o as usize].push(pos);
            }
        }
    }

    fn state(&self, q: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let m = self.obj.masses(&self.cols, q);
        let f = self.obj.kls(&m);
        (m, f)
    }

    /// Barrier objective, or `None` outside the domain.
    fn phi(&self, t: f64, q: &[f64], s: f64) -> Option<f64> {
        if q.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        let (_, f) = self.state(q);
        let mut v = t * s;
        for fx in f {
            let g = s - fx;
            if !(g > 0.0) {
                return None;
            }
            v -= libm::log(g);
        }
        for &x in q {
            v -= libm::log(x);
        }
        Some(v)
    }

    /// Newton centering at parameter `t`. Returns the number of iterations used.
    fn center(&mut self, t: f64, budget: usize) -> usize {
        let n = self.cols.len();
        let mut iters = 0;
        while iters < budget {
            iters += 1;
            let (m, f) = self.state(&self.q);
            let dim = n + 1;
            let mut h = DMatrix::<f64>::zeros(dim + 1, dim + 1);
            let mut grad = DVector::<f64>::zeros(dim);
            grad[n] = t;
            for x in 0..self.obj.p.len() {
                let g = self.s - f[x];
                // ∇f_x over active columns
                let mut df = vec![0.0; n];
                for &o in &self.obj.support[x] {
                    let w = -self.obj.p[x][o] / m[x][o];
                    for &pos in &self.groups[x][o] {
                        df[pos] = w;
                    }
                }
                let inv_g = 1.0 / g;
                for a in 0..n {
                    grad[a] += df[a] * inv_g;
                }
                grad[n] -= inv_g;
                // (∇g ∇gᵀ)/g² with ∇g = (−df, 1)
                let inv_g2 = inv_g * inv_g;
                let nz: Vec<usize> = (0..n).filter(|&a| df[a] != 0.0).collect();
                for &a in &nz {
                    for &b in &nz {
                        h[(a, b)] += df[a] * df[b] * inv_g2;
                    }
                    h[(a, n)] -= df[a] * inv_g2;
                    h[(n, a)] -= df[a] * inv_g2;
                }
                h[(n, n)] += inv_g2;
                // ∇²f_x / g
                for &o in &self.obj.support[x] {
                    let c = self.obj.p[x][o] / (m[x][o] * m[x][o]) * inv_g;
                    let grp = &self.groups[x][o];
                    for &a in grp {
                        for &b in grp {
                            h[(a, b)] += c;
                        }
                    }
                }
            }
            for a in 0..n {
                let qa = self.q[a];
                grad[a] -= 1.0 / qa;
                h[(a, a)] += 1.0 / (qa * qa);
            }
            // equality Σq = 1
            for a in 0..n {
                h[(a, dim)] = 1.0;
                h[(dim, a)] = 1.0;
            }
            let mut rhs = DVector::<f64>::zeros(dim + 1);
            for a in 0..dim {
                rhs[a] = -grad[a];
            }
            let Some(sol) = h.lu().solve(&rhs) else {
                break;
            };
            let step: Vec<f64> = (0..dim).map(|a| sol[a]).collect();
            let slope: f64 = (0..dim).map(|a| grad[a] * step[a]).sum();
            if !slope.is_finite() || -slope / 2.0 <= CENTERING_DECREMENT {
                break;
            }
            let Some(phi0) = self.phi(t, &self.q, self.s) else {
                break;
            };
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..80 {
                let q_new: Vec<f64> = (0..n).map(|a| self.q[a] + alpha * step[a]).collect();
                let s_new = self.s + alpha * step[n];
                if let Some(v) = self.phi(t, &q_new, s_new) {
                    if v <= phi0 + 0.01 * alpha * slope {
                        let total: f64 = q_new.iter().sum();
                        self.q = q_new.into_iter().map(|x| x / total).collect();
                        self.s = s_new;
                        // progress below rounding level: as centered as it gets
                        moved = phi0 - v > 1e-13 * (1.0 + phi0.abs());
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        iters
    }
}

/// Relative entropy of contextuality with a certified optimality gap.
pub fn relative_entropy_of_contextuality(
    bx: &BlackBox,
    opts: &RcOptions,
) -> Result<RcResult, MeasureError> {
    let obj = RcObjective::new(bx, opts.cap)?;
    Ok(solve_barrier(&obj, opts))
}

/// Runs the interior-point solver on a prepared objective.
pub fn solve_barrier(obj: &RcObjective, opts: &RcOptions) -> RcResult {
    let nx = obj.p.len();
    let mut cols: Vec<usize> = Vec::new();
    for x in 0..nx {
        for &o in &obj.support[x] {
            let k = obj.covering_strategy(x, o);
            if !cols.contains(&k) {
                cols.push(k);
            }
        }
    }
    cols.sort_unstable();
    let q0 = vec![1.0 / cols.len() as f64; cols.len()];
    let f0 = {
        let m = obj.masses(&cols, &q0);
        obj.kls(&m).into_iter().fold(0.0, f64::max)
    };
    let mut bar = Barrier::new(obj, cols, q0, f0 + 1.0);

    let mut t = 1.0;
    let mut iterations = 0;
    let mut best_ub = f64::INFINITY;
    let mut best_q: (Vec<usize>, Vec<f64>) = (bar.cols.clone(), bar.q.clone());
    let mut best_lb = f64::NEG_INFINITY;
    let mut converged = false;
    let tol_nats = opts.tol * LN2;
    let add_limit = nx.max(4);
    while iterations < opts.max_iter {
        iterations += bar.center(t, opts.max_iter - iterations).max(1);
        let (m, f) = bar.state(&bar.q);
        let ub = f.iter().copied().fold(0.0, f64::max);
        if ub < best_ub {
            best_ub = ub;
            best_q = (bar.cols.clone(), bar.q.clone());
        }
        // dual weights from the barrier: μ_x ∝ 1/(t g_x)
        let mut mu: Vec<f64> = f.iter().map(|fx| 1.0 / (t * (bar.s - fx))).collect();
        let msum: f64 = mu.iter().sum();
        for v in &mut mu {
            *v /= msum;
        }
        let w: Vec<Vec<f64>> = (0..nx)
            .map(|x| {
                let mut r = vec![0.0; m[x].len()];
                for &o in &obj.support[x] {
                    r[o] = obj.p[x][o] / m[x][o];
                }
                r
            })
            .collect();
        let score = |k: usize| -> f64 {
            obj.outcome[k]
                .iter()
                .enumerate()
                .map(|(x, &o)| mu[x] * w[x][o as usize])
                .sum()
        };
        let lagrangian: f64 = mu.iter().zip(&f).map(|(a, b)| a * b).sum();
        let inner: f64 = bar
            .cols
            .iter()
            .zip(&bar.q)
            .map(|(&k, &qk)| qk * score(k))
            .sum();
        let mut best_out: Vec<(f64, usize)> = Vec::new();
        let mut max_all = f64::NEG_INFINITY;
        let max_in = bar
            .cols
            .iter()
            .map(|&k| score(k))
            .fold(f64::NEG_INFINITY, f64::max);
        let active: alloc::collections::BTreeSet<usize> = bar.cols.iter().copied().collect();
        for k in 0..obj.strategies.len() {
            let sc = score(k);
            max_all = max_all.max(sc);
            if !active.contains(&k) && sc > max_in + 1e-12 {
                best_out.push((sc, k));
            }
        }
        let lb = lagrangian - max_all + inner;
        best_lb = best_lb.max(lb);
        if best_ub - best_lb <= tol_nats {
            converged = true;
            break;
        }
        if !best_out.is_empty() {
            best_out.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            best_out.truncate(add_limit);
            let delta = 1e-3;
            for v in &mut bar.q {
                *v *= 1.0 - delta;
            }
            let share = delta / best_out.len() as f64;
            for &(_, k) in &best_out {
                bar.cols.push(k);
                bar.q.push(share);
            }
            bar.regroup();
            let (_, f) = bar.state(&bar.q);
            let fmax = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if bar.s - fmax <= 1e-9 {
                bar.s = fmax + 1e-3 * (1.0 + fmax.abs());
            }
        } else {
            if t > 1e15 {
                break;
            }
            t *= 8.0;
        }
    }
    let argmin = obj.nc_box(&best_q.0, &best_q.1);
    let (m, f) = {
        let m = obj.masses(&best_q.0, &best_q.1);
        let f = obj.kls(&m);
        (m, f)
    };
    let _ = m;
    let mut worst = 0;
    for x in 1..nx {
        if f[x] > f[worst] {
            worst = x;
        }
    }
    let value = best_ub.max(0.0) / LN2;
    let lower = best_lb / LN2;
    RcResult {
        value,
        argmin,
        worst_context: obj.contexts[worst],
        iterations,
        gap_estimate: (best_ub - best_lb).max(0.0) / LN2,
        lower_bound: lower,
        converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgOptions {
    pub iterations: usize,
    /// Initial softmax temperature; decays as `τ_0/√t`.
    pub tau0: f64,
    /// Initial step; decays as `η_0/√t`, scaled by the gradient's max norm.
    pub eta0: f64,
    /// Extra runs from random interior starting points.
    pub restarts: usize,
}

impl Default for EgOptions {
    fn default() -> Self {
        EgOptions {
            iterations: DEFAULT_MAX_ITER,
            tau0: 1.0,
            eta0: 1.0,
            restarts: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgResult {
    /// Best `F(q)` seen, in bits.
    pub value: f64,
    /// Weights over all strategies at the best iterate.
    pub weights: Vec<f64>,
}

/// Exponentiated-gradient descent on the softmax-smoothed maximum over contexts.
///
/// The first run starts from the uniform mixture; restarts draw Dirichlet(1)
/// starting points from `rng`.
pub fn rc_exponentiated_gradient<R: Rng + ?Sized>(
    obj: &RcObjective,
    opts: &EgOptions,
    rng: &mut R,
) -> EgResult {
    let n = obj.strategies.len();
    let cols: Vec<usize> = (0..n).collect();
    let mut best = EgResult {
        value: f64::INFINITY,
        weights: vec![1.0 / n as f64; n],
    };
    for run in 0..=opts.restarts {
        let mut q = if run == 0 {
            vec![1.0 / n as f64; n]
        } else {
            let mut q = crate::sample::dirichlet(rng, n);
            for v in &mut q {
                *v = 0.5 * *v + 0.5 / n as f64;
            }
            q
        };
        for it in 1..=opts.iterations {
            let m = obj.masses(&cols, &q);
            let f = obj.kls(&m);
            let fmax = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if fmax < best.value * LN2 {
                best.value = fmax / LN2;
                best.weights = q.clone();
            }
            let sq = libm::sqrt(it as f64);
            let tau = opts.tau0 / sq;
            let mut pi: Vec<f64> = f.iter().map(|fx| libm::exp((fx - fmax) / tau)).collect();
            let z: f64 = pi.iter().sum();
            for v in &mut pi {
                *v /= z;
            }
            let grad: Vec<f64> = (0..n)
                .map(|k| {
                    obj.outcome[k]
                        .iter()
                        .enumerate()
                        .map(|(x, &o)| {
                            let o = o as usize;
                            if obj.p[x][o] > 0.0 {
                                -pi[x] * obj.p[x][o] / m[x][o]
                            } else {
                                0.0
                            }
                        })
                        .sum()
                })
                .collect();
            let gmax = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
            if gmax == 0.0 {
                break;
            }
            let eta = opts.eta0 / (sq * gmax);
            let expo: Vec<f64> = grad.iter().map(|g| -eta * g).collect();
            let emax = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for (v, e) in q.iter_mut().zip(&expo) {
                *v *= libm::exp(e - emax);
            }
            let total: f64 = q.iter().sum();
            for v in &mut q {
                *v /= total;
            }
        }
    }
    best.value = best.value.max(0.0);
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monotonicity {
    /// `R_C` of the wired box.
    pub lhs: f64,
    /// `R_C` of the original box.
    pub rhs: f64,
    pub ok: bool,
    pub lhs_result: RcResult,
    pub rhs_result: RcResult,
}

/// Compares `R_C(W(B))` against `R_C(B)` with slack `2·tol`.
pub fn check_monotonicity(
    bx: &BlackBox,
    w: &Wiring,
    opts: &RcOptions,
) -> Result<Monotonicity, MeasureError> {
    let wired = crate::wiring::apply_wiring(w, bx)?;
    let lhs_result = relative_entropy_of_contextuality(&wired, opts)?;
    let rhs_result = relative_entropy_of_contextuality(bx, opts)?;
    let (lhs, rhs) = (lhs_result.value, rhs_result.value);
    Ok(Monotonicity {
        lhs,
        rhs,
        ok: lhs <= rhs + 2.0 * opts.tol,
        lhs_result,
        rhs_result,
    })
}

/// Human-readable one-line summary of an `RcResult`.
pub fn describe(r: &RcResult) -> alloc::string::String {
    format!(
        "R_C = {:.9} bits (gap {:.2e}, {} iterations, {})",
        r.value,
        r.gap_estimate,
        r.iterations,
        if r.converged {
            "converged"
        } else {
            "not converged"
        }
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::{build_cycle, extremal_contextual, extremal_noncontextual};
    use crate::ncpolytope::mix;
    use alloc::sync::Arc;

    #[test]
    fn kl_examples() {
        let p = [0.25, 0.75];
        assert_eq!(kl_divergence(&p, &p, 1e-9).unwrap(), 0.0);
        assert_eq!(kl_divergence(&[1.0, 0.0], &[0.5, 0.5], 1e-9).unwrap(), 1.0);
        let v = kl_divergence(&[0.5, 0.0, 0.0, 0.5], &[0.375, 0.125, 0.125, 0.375], 1e-9).unwrap();
        // two equal terms: 2 · ½ · log2(½ / ⅜)
        let hand = libm::log2(0.5 / 0.375);
        assert!((v - hand).abs() < 1e-15);
        assert!((v - 0.415037).abs() < 1e-6);
        assert_eq!(
            kl_divergence(&[0.5, 0.5], &[1.0, 0.0], 1e-9).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            kl_divergence(&[0.5, 0.4], &[0.5, 0.5], 1e-9),
            Err(MeasureError::NotNormalized { .. })
        ));
    }

    #[test]
    fn behavior_divergence_examples() {
        let zeta = extremal_noncontextual(4, &"0110".parse().unwrap()).unwrap();
        let s = zeta.scenario().clone();
        let st = enumerate_strategies(&s, 1 << 20).unwrap();
        let uniform = mix(&s, &st, &[1.0 / 16.0; 16]).unwrap();
        let d = behavior_relative_entropy(zeta.behavior(), uniform.behavior()).unwrap();
        assert_eq!(d.value, 2.0);
        assert_eq!(d.context, 0);
        let same = behavior_relative_entropy(zeta.behavior(), zeta.behavior()).unwrap();
        assert_eq!(same.value, 0.0);
        let pr = extremal_contextual(4, &"1000".parse().unwrap()).unwrap();
        let d = behavior_relative_entropy(pr.behavior(), zeta.behavior()).unwrap();
        assert_eq!(d.value, f64::INFINITY);
    }

    #[test]
    fn rc_of_pr_box() {
        let pr = extremal_contextual(4, &"1000".parse().unwrap()).unwrap();
        let r = relative_entropy_of_contextuality(&pr, &RcOptions::default()).unwrap();
        assert!(r.converged, "{}", describe(&r));
        assert!(r.gap_estimate <= 1e-6);
        assert!(
            (r.value - libm::log2(4.0 / 3.0)).abs() < 1e-6,
            "{}",
            describe(&r)
        );
        assert!(r.argmin.validate(1e-9).ok);
    }

    #[test]
    fn rc_vanishes_on_noncontextual_boxes() {
        let s = Arc::new(build_cycle(4).unwrap());
        let st = enumerate_strategies(&s, 1 << 20).unwrap();
        let uniform = mix(&s, &st, &[1.0 / 16.0; 16]).unwrap();
        let r = relative_entropy_of_contextuality(&uniform, &RcOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.value <= 1e-6, "{}", describe(&r));
        let det = extremal_noncontextual(5, &"01101".parse().unwrap()).unwrap();
        let r = relative_entropy_of_contextuality(&det, &RcOptions::default()).unwrap();
        assert!(r.converged && r.value <= 1e-6, "{}", describe(&r));
        let back = r.argmin.behavior();
        assert!(back.max_abs_diff(det.behavior()).unwrap() < 1e-4);
    }
}
