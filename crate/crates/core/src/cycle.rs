//! b-cycle scenarios, their extremal boxes, and the contextuality-bit wirings.
//!
//! Button `i` owns lights `2i` and `2i+1`; context `i` presses buttons `i`
//! and `i+1 mod b`. A bit `s_i ∈ {0,1}` selects light `2i + s_i`.
//!
//! Extremal contextual boxes are indexed by an odd-weight `γ`: on context `i`
//! the two lights are perfectly correlated (`s_i = s_{i+1}`) when `γ_i = 0` and
//! anticorrelated when `γ_i = 1`, each allowed pair with probability 1/2. The
//! odd number of anticorrelated edges is what makes the box contextual.
//! Extremal noncontextual boxes are indexed by any `ζ`: button `i` always
//! lights `2i + ζ_i`.

use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError, BlackBox, NdReport, DEFAULT_EPS_ND};
use crate::bits::Bits;
use crate::lp::{hull_distance, LpError};
use crate::ncpolytope::{strategy_behavior, DeterministicStrategy};
use crate::scenario::{Scenario, ScenarioError};
use crate::wiring::{
    identity_pre, post_scenario, relabel_component, PostComponent, PostFamily, Wiring, WiringError,
};

/// Largest LP distance at which a target still counts as a mixture of extremal boxes.
const DECOMPOSE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CycleError {
    #[error("a cycle needs at least 3 buttons, got {0}")]
    TooSmall(usize),
    #[error("label has length {got}, expected {expected}")]
    Length { expected: usize, got: usize },
    #[error("gamma {0} has even Hamming weight")]
    EvenGamma(Bits),
    #[error("box is not on a {0}-cycle")]
    NotCycle(usize),
    #[error("target is not nondisturbing (distance {distance} to the extremal hull)")]
    NotNondisturbing { distance: f64, report: NdReport },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    Wiring(#[from] WiringError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

pub fn build_cycle(b: usize) -> Result<Scenario, CycleError> {
    if b < 3 {
        return Err(CycleError::TooSmall(b));
    }
    let contexts: Vec<Vec<usize>> = (0..b).map(|i| alloc::vec![i, (i + 1) % b]).collect();
    let edges: Vec<Vec<usize>> = (0..b).map(|i| alloc::vec![2 * i, 2 * i + 1]).collect();
    Ok(Scenario::from_lists(b, 2 * b, &contexts, &edges)?)
}

/// Whether `s` is exactly the b-cycle produced by [`build_cycle`].
pub fn is_cycle(s: &Scenario, b: usize) -> bool {
    build_cycle(b).map(|c| &c == s).unwrap_or(false)
}

fn check_len(b: usize, label: &Bits) -> Result<(), CycleError> {
    if b < 3 {
        return Err(CycleError::TooSmall(b));
    }
    if label.len() != b {
        return Err(CycleError::Length {
            expected: b,
            got: label.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_gamma(b: usize, gamma: &Bits) -> Result<(), CycleError> {
    check_len(b, gamma)?;
    if gamma.count_ones() % 2 == 0 {
        return Err(CycleError::EvenGamma(gamma.clone()));
    }
    Ok(())
}

/// All odd-weight labels of length `b`, ascending.
pub fn gammas(b: usize) -> Vec<Bits> {
    all_labels(b)
        .into_iter()
        .filter(|g| g.count_ones() % 2 == 1)
        .collect()
}

/// All labels of length `b`, ascending.
pub fn zetas(b: usize) -> Vec<Bits> {
    all_labels(b)
}

fn all_labels(b: usize) -> Vec<Bits> {
    let mut out: Vec<Bits> = (0..1usize << b)
        .map(|m| {
            let mut x = Bits::zeros(b);
            for i in 0..b {
                if m >> i & 1 == 1 {
                    x.set(i, true);
                }
            }
            x
        })
        .collect();
    out.sort();
    out
}

/// Behavior table of the extremal contextual box on a given cycle scenario.
pub(crate) fn contextual_behavior(s: &Arc<Scenario>, gamma: &Bits) -> Behavior {
    let b = s.num_buttons();
    let mut out = Behavior::zeros(s.clone());
    for i in 0..b {
        let next = (i + 1) % b;
        let sp = s.outcome_space(i);
        for si in 0..2 {
            let sn = si ^ usize::from(gamma.get(i));
            // the outcome space lists buttons ascending; context b-1 is {0, b-1}
            let lit = if i < next {
                [2 * i + si, 2 * next + sn]
            } else {
                [2 * next + sn, 2 * i + si]
            };
            let idx = sp.index_of_lights(&lit).expect("cycle light");
            out.row_mut(i)[idx] = 0.5;
        }
    }
    out
}

/// Extremal contextual box `P^(γ)`; `γ` must have odd weight.
pub fn extremal_contextual(b: usize, gamma: &Bits) -> Result<BlackBox, CycleError> {
    check_gamma(b, gamma)?;
    let s = Arc::new(build_cycle(b)?);
    Ok(BlackBox::from(contextual_behavior(&s, gamma)))
}

/// Strategy lighting `2i + ζ_i` on button `i`.
pub fn zeta_strategy(b: usize, zeta: &Bits) -> Result<DeterministicStrategy, CycleError> {
    check_len(b, zeta)?;
    Ok(DeterministicStrategy::from_choice(
        (0..b).map(|i| 2 * i + usize::from(zeta.get(i))).collect(),
    ))
}

/// Extremal noncontextual (deterministic) box `P^(ζ)`.
pub fn extremal_noncontextual(b: usize, zeta: &Bits) -> Result<BlackBox, CycleError> {
    let d = zeta_strategy(b, zeta)?;
    let s = Arc::new(build_cycle(b)?);
    Ok(BlackBox::from(strategy_behavior(&s, &d)))
}

/// Post-family input scenario of the cycle wirings: `A`-lights `2i` and
/// `2i+1` both feed output lights `2i` and `2i+1`.
fn cycle_post(target: &Scenario) -> Result<Arc<Scenario>, CycleError> {
    let l = target.num_lights();
    let edges = (0..l)
        .map(|a| Bits::from_indices(l, [a - a % 2, a - a % 2 + 1]).expect("cycle light"))
        .collect();
    Ok(Arc::new(post_scenario(target, l, edges)?))
}

/// Buttons whose light pair must be swapped to turn `P^(γ′)` into `P^(γ)`.
///
/// Swapping button `i` flips the parity of edges `i-1` and `i`, so the swap
/// pattern `r` satisfies `r_{i+1} = r_i ⊕ γ_i ⊕ γ′_i` with `r_0 = 0`. It closes
/// around the cycle because `γ` and `γ′` have the same weight parity.
pub fn relabel_swaps(gamma_from: &Bits, gamma_to: &Bits) -> Vec<bool> {
    let b = gamma_from.len();
    let mut r = alloc::vec![false; b];
    for i in 0..b - 1 {
        r[i + 1] = r[i] ^ gamma_from.get(i) ^ gamma_to.get(i);
    }
    r
}

fn relabel_map(gamma_from: &Bits, gamma_to: &Bits) -> impl Fn(usize) -> usize {
    let r = relabel_swaps(gamma_from, gamma_to);
    move |a| {
        let i = a / 2;
        2 * i + ((a % 2) ^ usize::from(r[i]))
    }
}

fn collapse_map(zeta: &Bits) -> impl Fn(usize) -> usize {
    let zeta = zeta.clone();
    move |a| {
        let i = a / 2;
        2 * i + usize::from(zeta.get(i))
    }
}

fn cycle_wiring(
    b: usize,
    weighted_maps: Vec<(f64, &dyn Fn(usize) -> usize)>,
) -> Result<Wiring, CycleError> {
    let target = Arc::new(build_cycle(b)?);
    let pre = identity_pre(&target)?;
    let post_in = cycle_post(&target)?;
    let components = weighted_maps
        .into_iter()
        .map(|(w, m)| relabel_component(&pre, &target, &post_in, w, m))
        .collect::<Result<Vec<PostComponent>, _>>()?;
    Ok(Wiring::new(
        pre,
        PostFamily::new(post_in, components),
        target,
    ))
}

/// Identity pre-box and a deterministic post-box taking `P^(γ′)` to `P^(γ)`.
pub fn relabel_wiring(b: usize, gamma_from: &Bits, gamma_to: &Bits) -> Result<Wiring, CycleError> {
    check_gamma(b, gamma_from)?;
    check_gamma(b, gamma_to)?;
    let m = relabel_map(gamma_from, gamma_to);
    cycle_wiring(b, alloc::vec![(1.0, &m as &dyn Fn(usize) -> usize)])
}

/// Identity pre-box and a post-box lighting `2i + ζ_i` whichever light of
/// button `i` came on.
pub fn collapse_wiring(b: usize, gamma_from: &Bits, zeta: &Bits) -> Result<Wiring, CycleError> {
    check_gamma(b, gamma_from)?;
    check_len(b, zeta)?;
    let m = collapse_map(zeta);
    cycle_wiring(b, alloc::vec![(1.0, &m as &dyn Fn(usize) -> usize)])
}

/// Result of [`contextuality_bit_decompose`].
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub wiring: Wiring,
    /// Weights on `P^(γ)` for each odd-weight `γ` with positive weight.
    pub contextual: Vec<(Bits, f64)>,
    /// Weights on `P^(ζ)` for each `ζ` with positive weight.
    pub noncontextual: Vec<(Bits, f64)>,
    /// Max-norm distance between the wired box and the target.
    pub residual: f64,
}

/// Writes a nondisturbing b-cycle box as a mixture of extremal boxes and
/// builds the wiring that produces it from `P^(γ′)`.
pub fn contextuality_bit_decompose(
    target: &BlackBox,
    gamma_from: &Bits,
) -> Result<Decomposition, CycleError> {
    let b = target.scenario().num_buttons();
    if !is_cycle(target.scenario(), b) {
        return Err(CycleError::NotCycle(b));
    }
    check_gamma(b, gamma_from)?;
    let s = target.scenario();
    let gs = gammas(b);
    let zs = zetas(b);
    let flat = |bh: &Behavior| -> Vec<f64> { bh.rows().iter().flatten().copied().collect() };
    let mut columns = Vec::with_capacity(gs.len() + zs.len());
    for g in &gs {
        columns.push(flat(&contextual_behavior(s, g)));
    }
    for z in &zs {
        columns.push(flat(&strategy_behavior(s, &zeta_strategy(b, z)?)));
    }
    let fit = hull_distance(&columns, &flat(target.behavior()))?;
    if fit.distance > DECOMPOSE_TOLERANCE {
        return Err(CycleError::NotNondisturbing {
            distance: fit.distance,
            report: target.is_nondisturbing(DEFAULT_EPS_ND),
        });
    }
    let mut w: Vec<f64> = fit.weights.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    let (wg, wz) = w.split_at(gs.len());
    let contextual: Vec<(Bits, f64)> = gs
        .iter()
        .zip(wg)
        .filter(|(_, &x)| x > 0.0)
        .map(|(g, &x)| (g.clone(), x))
        .collect();
    let noncontextual: Vec<(Bits, f64)> = zs
        .iter()
        .zip(wz)
        .filter(|(_, &x)| x > 0.0)
        .map(|(z, &x)| (z.clone(), x))
        .collect();
    let relabels: Vec<_> = contextual
        .iter()
        .map(|(g, x)| (*x, relabel_map(gamma_from, g)))
        .collect();
    let collapses: Vec<_> = noncontextual
        .iter()
        .map(|(z, x)| (*x, collapse_map(z)))
        .collect();
    let mut maps: Vec<(f64, &dyn Fn(usize) -> usize)> = Vec::new();
    for (x, m) in &relabels {
        maps.push((*x, m));
    }
    for (x, m) in &collapses {
        maps.push((*x, m));
    }
    let wiring = cycle_wiring(b, maps)?;
    let source = extremal_contextual(b, gamma_from)?;
    let wired = crate::wiring::apply_wiring(&wiring, &source)?;
    let residual = wired.behavior().max_abs_diff(target.behavior())?;
    Ok(Decomposition {
        wiring,
        contextual,
        noncontextual,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::DEFAULT_EPS_NORM;
    use crate::ncpolytope::{enumerate_strategies, NcBox};
    use crate::wiring::apply_wiring;

    fn bits(s: &str) -> Bits {
        s.parse().unwrap()
    }

    #[test]
    fn cycle_shapes() {
        for b in 3..=6 {
            let s = build_cycle(b).unwrap();
            assert!(s.validate().ok);
            assert_eq!(s.num_lights(), 2 * b);
            assert_eq!(s.maximal_contexts().len(), b);
            for i in 0..b {
                assert_eq!(s.contexts().iter().filter(|c| c.get(i)).count(), 2);
            }
        }
        assert_eq!(build_cycle(2), Err(CycleError::TooSmall(2)));
        // the wraparound context pins buttons b-1 and 0
        let c5 = build_cycle(5).unwrap();
        assert_eq!(c5.context_buttons(4), &[0, 4]);
    }

    #[test]
    fn label_counts() {
        for b in 3..=6 {
            assert_eq!(gammas(b).len(), 1 << (b - 1));
            assert_eq!(zetas(b).len(), 1 << b);
        }
    }

    #[test]
    fn triangle_table_by_hand() {
        // γ = 111: every edge anticorrelated.
        // context 0 = {0,1}: outcomes (l0,l2) (l0,l3) (l1,l2) (l1,l3)
        // context 1 = {1,2}: outcomes (l2,l4) (l2,l5) (l3,l4) (l3,l5)
        // context 2 = {0,2}: outcomes (l0,l4) (l0,l5) (l1,l4) (l1,l5)
        let bx = extremal_contextual(3, &bits("111")).unwrap();
        let anti = [0.0, 0.5, 0.5, 0.0];
        for j in 0..3 {
            assert_eq!(bx.behavior().row(j), &anti);
        }
        // γ = 100 on the triangle: edge 0 anticorrelated, edges 1 and 2 correlated
        let bx = extremal_contextual(3, &bits("100")).unwrap();
        assert_eq!(bx.behavior().row(0), &anti);
        assert_eq!(bx.behavior().row(1), &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(bx.behavior().row(2), &[0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn extremal_boxes_are_valid_and_nondisturbing() {
        for b in 3..=5 {
            for g in gammas(b) {
                let bx = extremal_contextual(b, &g).unwrap();
                assert!(bx.behavior().validate(DEFAULT_EPS_NORM).ok);
                assert_eq!(bx.is_nondisturbing(0.0).worst_deviation, 0.0);
            }
        }
        assert_eq!(
            extremal_contextual(4, &bits("1100")).unwrap_err(),
            CycleError::EvenGamma(bits("1100"))
        );
        assert!(extremal_contextual(4, &bits("100")).is_err());
    }

    #[test]
    fn zeta_boxes() {
        let ones = extremal_noncontextual(4, &bits("1111")).unwrap();
        let s = ones.scenario().clone();
        let d = DeterministicStrategy::new(&s, alloc::vec![1, 3, 5, 7]).unwrap();
        assert_eq!(ones.behavior(), &strategy_behavior(&s, &d));
        let all: Vec<_> = zetas(4)
            .iter()
            .map(|z| extremal_noncontextual(4, z).unwrap().into_behavior())
            .collect();
        for a in 0..all.len() {
            for c in (a + 1)..all.len() {
                assert_ne!(all[a], all[c]);
            }
        }
        assert_eq!(all.len(), enumerate_strategies(&s, 1 << 20).unwrap().len());
    }

    #[test]
    fn relabel_examples() {
        let g1 = bits("1000");
        let g2 = bits("0100");
        let w = relabel_wiring(4, &g1, &g2).unwrap();
        assert!(w.validate().ok);
        assert_eq!(relabel_swaps(&g1, &g2), [false, true, false, false]);
        let out = apply_wiring(&w, &extremal_contextual(4, &g1).unwrap()).unwrap();
        assert_eq!(
            out.behavior().rows(),
            extremal_contextual(4, &g2).unwrap().behavior().rows()
        );
        // relabelling to itself is the identity
        let id = relabel_wiring(4, &g1, &g1).unwrap();
        let pr = extremal_contextual(4, &g1).unwrap();
        assert_eq!(
            apply_wiring(&id, &pr).unwrap().behavior().rows(),
            pr.behavior().rows()
        );
        assert!(matches!(
            relabel_wiring(4, &g1, &bits("1100")),
            Err(CycleError::EvenGamma(_))
        ));
    }

    #[test]
    fn relabel_reaches_every_gamma_and_composes() {
        for b in 3..=5 {
            let gs = gammas(b);
            for g1 in &gs {
                let src = extremal_contextual(b, g1).unwrap();
                for g2 in &gs {
                    let out = apply_wiring(&relabel_wiring(b, g1, g2).unwrap(), &src).unwrap();
                    assert_eq!(
                        out.behavior().rows(),
                        extremal_contextual(b, g2).unwrap().behavior().rows()
                    );
                }
            }
        }
        // (γ′→γ) then (γ→γ″) equals (γ′→γ″) on every box of the cycle
        let (a, m, c) = (bits("100"), bits("010"), bits("111"));
        let st = enumerate_strategies(&build_cycle(3).unwrap(), 1 << 20).unwrap();
        let s = Arc::new(build_cycle(3).unwrap());
        let mixed = NcBox::new(s, st[..3].to_vec(), alloc::vec![0.2, 0.3, 0.5])
            .unwrap()
            .to_box();
        for bx in [extremal_contextual(3, &a).unwrap(), mixed] {
            let two = apply_wiring(
                &relabel_wiring(3, &m, &c).unwrap(),
                &apply_wiring(&relabel_wiring(3, &a, &m).unwrap(), &bx).unwrap(),
            )
            .unwrap();
            let one = apply_wiring(&relabel_wiring(3, &a, &c).unwrap(), &bx).unwrap();
            assert_eq!(two.behavior().rows(), one.behavior().rows());
        }
    }

    #[test]
    fn collapse_examples() {
        let z = bits("010");
        for g in gammas(3) {
            let w = collapse_wiring(3, &g, &z).unwrap();
            let out = apply_wiring(&w, &extremal_contextual(3, &g).unwrap()).unwrap();
            assert_eq!(
                out.behavior().rows(),
                extremal_noncontextual(3, &z).unwrap().behavior().rows()
            );
        }
    }

    #[test]
    fn decompose_examples() {
        let g = bits("1000");
        let pr = extremal_contextual(4, &g).unwrap();
        let d = contextuality_bit_decompose(&pr, &g).unwrap();
        assert_eq!(d.residual, 0.0);
        assert_eq!(d.contextual, [(g.clone(), 1.0)]);
        assert!(d.noncontextual.is_empty());

        let s = Arc::new(build_cycle(4).unwrap());
        let st = enumerate_strategies(&s, 1 << 20).unwrap();
        let uniform = NcBox::new(s, st, alloc::vec![1.0 / 16.0; 16])
            .unwrap()
            .to_box();
        let d = contextuality_bit_decompose(&uniform, &g).unwrap();
        assert!(d.residual <= 1e-9);
        let total: f64 = d
            .contextual
            .iter()
            .chain(&d.noncontextual)
            .map(|x| x.1)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decompose_rejects_disturbing_targets() {
        let s = Arc::new(build_cycle(3).unwrap());
        let mut rows = alloc::vec![alloc::vec![0.25; 4]; 3];
        rows[0] = alloc::vec![0.35, 0.15, 0.35, 0.15];
        let bx = BlackBox::from(Behavior::from_dense(s, rows).unwrap());
        match contextuality_bit_decompose(&bx, &bits("100")) {
            Err(CycleError::NotNondisturbing { report, .. }) => assert!(!report.ok),
            other => panic!("unexpected {other:?}"),
        }
    }
}
