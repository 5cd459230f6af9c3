//! Seeded random instances for the property suites.

use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::behavior::{Behavior, BlackBox};
use crate::bits::Bits;
use crate::cycle::{build_cycle, contextual_behavior, gammas, zeta_strategy, zetas, CycleError};
use crate::ncpolytope::{enumerate_strategies, strategy_behavior, NcBox, NcError};
use crate::scenario::Scenario;
use crate::wiring::{
    post_scenario, LightResponse, PostComponent, PostFamily, ResponseKey, Wiring, WiringError,
};

/// Dirichlet(1, …, 1) via normalized exponentials.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            // U in (0, 1]
            let u: f64 = 1.0 - rng.gen::<f64>();
            -libm::log(u)
        })
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

/// Dirichlet mixture over a uniformly sized random subset of the strategies.
pub fn random_nc_box<R: Rng + ?Sized>(
    scenario: &Arc<Scenario>,
    rng: &mut R,
    cap: usize,
) -> Result<NcBox, NcError> {
    let all = enumerate_strategies(scenario, cap)?;
    let size = rng.gen_range(1..=all.len());
    let mut picked = index::sample(rng, all.len(), size).into_vec();
    picked.sort_unstable();
    let weights = dirichlet(rng, size);
    Ok(NcBox::new_unchecked(
        scenario.clone(),
        picked.into_iter().map(|k| all[k].clone()).collect(),
        weights,
    ))
}

/// Dirichlet mixture of all extremal points of the `b`-cycle ND polytope.
pub fn random_nd_cycle_box<R: Rng + ?Sized>(b: usize, rng: &mut R) -> Result<BlackBox, CycleError> {
    let s = Arc::new(build_cycle(b)?);
    let mut parts: Vec<Behavior> = gammas(b)
        .iter()
        .map(|g| contextual_behavior(&s, g))
        .collect();
    for z in zetas(b) {
        parts.push(strategy_behavior(&s, &zeta_strategy(b, &z)?));
    }
    let w = dirichlet(rng, parts.len());
    let pairs: Vec<(f64, &Behavior)> = w.iter().copied().zip(parts.iter()).collect();
    Ok(BlackBox::from(Behavior::convex_combination(&pairs)?))
}

const WIRING_ATTEMPTS: usize = 32;

/// Random noncontextual wiring around `target`.
///
/// Each pre-box button reads one or two target buttons; its contexts group
/// buttons whose reads fit in one maximal target context without overlap.
/// Every target light feeds a small group of output lights private to its
/// button, except that incompatible buttons may share a light. Each post
/// component picks, per target light and pre-box button reaching it, one of
/// the light's output lights.
pub fn random_wiring<R: Rng + ?Sized>(
    target: &Arc<Scenario>,
    rng: &mut R,
) -> Result<Wiring, WiringError> {
    let mut last = None;
    for attempt in 0..WIRING_ATTEMPTS {
        let w = match try_wiring(target, rng, attempt + 1 < WIRING_ATTEMPTS) {
            Ok(w) => w,
            Err(WiringError::Invalid(report)) => {
                last = Some(report);
                continue;
            }
            Err(e) => return Err(e),
        };
        let report = w.validate();
        if report.ok {
            return Ok(w);
        }
        last = Some(report);
    }
    Err(WiringError::Invalid(last.expect("at least one attempt")))
}

fn try_wiring<R: Rng + ?Sized>(
    target: &Arc<Scenario>,
    rng: &mut R,
    share: bool,
) -> Result<Wiring, WiringError> {
    let nx = target.num_buttons();

    // Pre-box scenario: Y-buttons reading X-buttons.
    let ny = rng.gen_range(nx.div_ceil(2).max(1)..=nx + 1);
    let mut edges: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ny];
    let mut order: Vec<usize> = (0..nx).collect();
    order.shuffle(rng);
    for (n, &k) in order.iter().enumerate() {
        let i = if n < ny { n } else { rng.gen_range(0..ny) };
        edges[i].insert(k);
    }
    for e in edges.iter_mut() {
        if e.is_empty() || rng.gen_bool(0.2) {
            e.insert(rng.gen_range(0..nx));
        }
    }
    let maximal = target.maximal_indices();
    let mut contexts: BTreeSet<Vec<usize>> = BTreeSet::new();
    for _ in 0..rng.gen_range(1..=3) {
        let m = target.context_buttons(maximal[rng.gen_range(0..maximal.len())]);
        let mut cand: Vec<usize> = (0..ny)
            .filter(|&i| edges[i].iter().all(|k| m.contains(k)))
            .collect();
        cand.shuffle(rng);
        let mut used = BTreeSet::new();
        let mut chosen = Vec::new();
        for i in cand {
            if edges[i].is_disjoint(&used) {
                used.extend(edges[i].iter().copied());
                chosen.push(i);
            }
        }
        if !chosen.is_empty() {
            chosen.sort_unstable();
            contexts.insert(chosen);
        }
    }
    for i in 0..ny {
        if !contexts.iter().any(|c| c.contains(&i)) {
            contexts.insert(vec![i]);
        }
    }
    let ctx: Vec<Vec<usize>> = contexts.into_iter().collect();
    let edge_lists: Vec<Vec<usize>> = edges.iter().map(|e| e.iter().copied().collect()).collect();
    let pre_s = Arc::new(Scenario::from_lists(ny, nx, &ctx, &edge_lists)?);
    let pre = random_nc_box(&pre_s, rng, 1 << 16)?;

    // Output-light groups per X-button, shared only across incompatible buttons.
    let mut next = 0;
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(nx);
    let mut own: Vec<core::ops::Range<usize>> = Vec::with_capacity(nx);
    for k in 0..nx {
        let size = rng.gen_range(1..=3);
        let mut g: Vec<usize> = (next..next + size).collect();
        own.push(next..next + size);
        next += size;
        if share && k > 0 && rng.gen_bool(0.3) {
            let k2 = rng.gen_range(0..k);
            if !target.compatible(k, k2) {
                g.push(rng.gen_range(own[k2].clone()));
            }
        }
        groups.push(g);
    }
    let na = target.num_lights();
    let mut c_edges: Vec<Vec<usize>> = Vec::with_capacity(na);
    for a in 0..na {
        let ks = target.buttons_of_light(a)?;
        let mut pool: Vec<usize> = ks.iter().flat_map(|&k| groups[k].iter().copied()).collect();
        pool.sort_unstable();
        pool.dedup();
        let size = rng.gen_range(1..=pool.len().min(2));
        let mut e: Vec<usize> = pool.choose_multiple(rng, size).copied().collect();
        e.sort_unstable();
        c_edges.push(e);
    }
    // keep only used output lights, renumbered in order
    let used: BTreeSet<usize> = c_edges.iter().flatten().copied().collect();
    let rename: Vec<usize> = {
        let mut r = vec![usize::MAX; next];
        for (n, &l) in used.iter().enumerate() {
            r[l] = n;
        }
        r
    };
    let nc = used.len();
    let c_bits: Vec<Bits> = c_edges
        .iter()
        .map(|e| {
            Bits::from_indices(nc, e.iter().map(|&l| rename[l])).expect("output light in range")
        })
        .collect();
    let z_s = Arc::new(post_scenario(target, nc, c_bits)?);

    let skeleton = Wiring::new(
        pre.clone(),
        PostFamily::new(z_s.clone(), Vec::new()),
        target.clone(),
    );
    let assoc = (0..nc)
        .map(|j| skeleton.association_sets(j))
        .collect::<Result<Vec<_>, _>>()?;
    let ncomp = rng.gen_range(1..=3);
    let weights = dirichlet(rng, ncomp);
    let mut components = Vec::with_capacity(weights.len());
    for w in weights {
        let mut tables: Vec<Vec<(ResponseKey, bool)>> = vec![Vec::new(); nc];
        for a in 0..na {
            let lights = z_s.lights_of_button(a);
            for &k in target.buttons_of_light(a)? {
                for &i in pre_s.buttons_of_light(k)? {
                    let pick = lights[rng.gen_range(0..lights.len())];
                    for &j in lights {
                        let key = ResponseKey {
                            z: Some(a),
                            b: Bits::singleton(nx, k).restrict(&assoc[j].x),
                            y: Bits::singleton(ny, i).restrict(&assoc[j].y),
                        };
                        tables[j].push((key, j == pick));
                    }
                }
            }
        }
        let responses = tables
            .into_iter()
            .enumerate()
            .map(|(j, t)| LightResponse::new(j, t))
            .collect::<Result<Vec<_>, _>>()?;
        components.push(PostComponent::new(w, nc, responses)?);
    }
    Ok(Wiring::new(
        pre,
        PostFamily::new(z_s, components),
        target.clone(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpolytope::is_noncontextual;
    use crate::wiring::apply_wiring;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dirichlet_is_a_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..10 {
            let w = dirichlet(&mut rng, n);
            assert_eq!(w.len(), n);
            assert!(w.iter().all(|&x| x > 0.0));
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_boxes_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for b in 3..=6 {
            let nd = random_nd_cycle_box(b, &mut rng).unwrap();
            assert!(nd.behavior().validate(1e-9).ok);
            assert!(nd.behavior().is_nondisturbing(1e-9).ok);
            let s = nd.scenario().clone();
            let nc = random_nc_box(&s, &mut rng, 1 << 20).unwrap();
            assert!(nc.validate(1e-9).ok);
        }
    }

    #[test]
    fn random_wirings_validate_and_preserve_nc() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 0..40 {
            let b = 3 + n % 4;
            let target = Arc::new(build_cycle(b).unwrap());
            let w = random_wiring(&target, &mut rng).unwrap();
            let mid = random_nc_box(&target, &mut rng, 1 << 20).unwrap();
            let out = apply_wiring(&w, &mid.to_box()).unwrap();
            let rep = out.behavior().validate(1e-9);
            assert!(rep.ok, "{n}: {:?} {:?}", rep.violations, out.scenario());
            assert!(is_noncontextual(&out, 1e-8).unwrap().noncontextual);
        }
    }
}
