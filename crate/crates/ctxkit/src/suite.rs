//! Seeded property sweeps over random wirings and boxes.
//!
//! Instance `n` of a suite draws from its own ChaCha8 stream, so results do not
//! depend on thread count or scheduling.

use std::collections::BTreeMap;
use std::sync::Arc;

use ctxkit_core::cycle::{build_cycle, contextuality_bit_decompose, gammas};
use ctxkit_core::measures::{check_monotonicity, RcOptions};
use ctxkit_core::ncpolytope::is_noncontextual;
use ctxkit_core::sample::{random_nc_box, random_nd_cycle_box, random_wiring};
use ctxkit_core::wiring::{apply_wiring, compose_nc_triple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const COMPOSE_TOLERANCE: f64 = 1e-12;
pub const DECOMPOSE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    NdPreservation,
    NcPreservation,
    Monotonicity,
    ContextualityBit,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::NdPreservation,
        Suite::NcPreservation,
        Suite::Monotonicity,
        Suite::ContextualityBit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::NdPreservation => "nd-preservation",
            Suite::NcPreservation => "nc-preservation",
            Suite::Monotonicity => "monotonicity",
            Suite::ContextualityBit => "contextuality-bit",
        }
    }

    pub fn from_name(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    /// Instance count at scale 1.
    pub fn base_count(self) -> usize {
        match self {
            Suite::NdPreservation | Suite::NcPreservation => 500,
            Suite::Monotonicity => 200,
            Suite::ContextualityBit => 300,
        }
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub scale: f64,
    pub eps_norm: f64,
    pub eps_nd: f64,
    pub eps_lp: f64,
    pub rc: RcOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0,
            scale: 1.0,
            eps_norm: ctxkit_core::behavior::DEFAULT_EPS_NORM,
            eps_nd: ctxkit_core::behavior::DEFAULT_EPS_ND,
            eps_lp: ctxkit_core::lp::DEFAULT_EPS_LP,
            rc: RcOptions::default(),
        }
    }
}

impl SuiteConfig {
    fn count(&self, base: usize) -> usize {
        ((base as f64) * self.scale).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub instances: usize,
    pub failures: usize,
    pub pass: bool,
    /// Largest observed value of each tracked quantity.
    pub worst: BTreeMap<&'static str, f64>,
    pub first_failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub scale: f64,
    pub pass: bool,
    pub suites: Vec<SuiteOutcome>,
}

/// Measurements of one instance, or the reason it failed.
struct Instance {
    values: Vec<(&'static str, f64)>,
    failure: Option<String>,
}

impl Instance {
    fn check(values: Vec<(&'static str, f64)>, ok: bool, why: impl FnOnce() -> String) -> Self {
        Instance {
            values,
            failure: (!ok).then(why),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Instance {
            values: Vec::new(),
            failure: Some(e.to_string()),
        }
    }
}

pub fn instance_rng(seed: u64, suite: Suite, n: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite.stream() << 32 | n as u64);
    rng
}

fn cycle_of(n: usize, sizes: &[usize]) -> usize {
    sizes[n % sizes.len()]
}

fn nd_instance(cfg: &SuiteConfig, n: usize) -> Instance {
    let mut rng = instance_rng(cfg.seed, Suite::NdPreservation, n);
    let b = cycle_of(n, &[3, 4, 5, 6]);
    let mut run = || -> anyhow::Result<Instance> {
        let target = Arc::new(build_cycle(b)?);
        let bx = random_nd_cycle_box(b, &mut rng)?;
        let w = random_wiring(&target, &mut rng)?;
        let out = apply_wiring(&w, &bx)?;
        let valid = out.behavior().validate(cfg.eps_norm);
        let nd = out.behavior().is_nondisturbing(cfg.eps_nd);
        Ok(Instance::check(
            vec![("nd_deviation", nd.worst_deviation)],
            valid.ok && nd.ok,
            || {
                format!(
                    "instance {n} (b = {b}): valid = {}, ND deviation {:e}",
                    valid.ok, nd.worst_deviation
                )
            },
        ))
    };
    run().unwrap_or_else(|e| Instance::error(format!("instance {n}: {e}")))
}

fn nc_instance(cfg: &SuiteConfig, n: usize) -> Instance {
    let mut rng = instance_rng(cfg.seed, Suite::NcPreservation, n);
    let b = cycle_of(n, &[3, 4, 5, 6]);
    let mut run = || -> anyhow::Result<Instance> {
        let target = Arc::new(build_cycle(b)?);
        let mid = random_nc_box(&target, &mut rng, 1 << 20)?;
        let w = random_wiring(&target, &mut rng)?;
        let out = apply_wiring(&w, &mid.to_box())?;
        let v = is_noncontextual(&out, cfg.eps_lp)?;
        let composed = compose_nc_triple(w.pre(), &mid, w.post())?;
        let diff = composed.behavior().max_abs_diff(out.behavior())?;
        Ok(Instance::check(
            vec![("nc_distance", v.distance), ("compose_difference", diff)],
            v.noncontextual && diff <= COMPOSE_TOLERANCE,
            || {
                format!(
                    "instance {n} (b = {b}): distance {:e}, compose difference {diff:e}",
                    v.distance
                )
            },
        ))
    };
    run().unwrap_or_else(|e| Instance::error(format!("instance {n}: {e}")))
}

fn monotonicity_instance(cfg: &SuiteConfig, n: usize) -> Instance {
    let mut rng = instance_rng(cfg.seed, Suite::Monotonicity, n);
    let b = cycle_of(n, &[3, 4, 5]);
    let mut run = || -> anyhow::Result<Instance> {
        let target = Arc::new(build_cycle(b)?);
        let bx = random_nd_cycle_box(b, &mut rng)?;
        let w = random_wiring(&target, &mut rng)?;
        let m = check_monotonicity(&bx, &w, &cfg.rc)?;
        let converged = m.lhs_result.converged && m.rhs_result.converged;
        let gap = m.lhs_result.gap_estimate.max(m.rhs_result.gap_estimate);
        Ok(Instance::check(
            vec![("rc_excess", m.lhs - m.rhs), ("rc_gap", gap)],
            m.ok && converged,
            || {
                format!(
                    "instance {n} (b = {b}): R_C(W(B)) = {:.12} vs R_C(B) = {:.12}, converged = {converged}",
                    m.lhs, m.rhs
                )
            },
        ))
    };
    run().unwrap_or_else(|e| Instance::error(format!("instance {n}: {e}")))
}

fn bit_instance(cfg: &SuiteConfig, n: usize, per_cycle: usize) -> Instance {
    let mut rng = instance_rng(cfg.seed, Suite::ContextualityBit, n);
    let b = 3 + n / per_cycle.max(1);
    let mut run = || -> anyhow::Result<Instance> {
        let target = random_nd_cycle_box(b, &mut rng)?;
        let gs = gammas(b);
        let from = &gs[rng.gen_range(0..gs.len())];
        let d = contextuality_bit_decompose(&target, from)?;
        Ok(Instance::check(
            vec![("residual", d.residual)],
            d.residual <= DECOMPOSE_TOLERANCE,
            || {
                format!(
                    "instance {n} (b = {b}, γ′ = {from}): residual {:e}",
                    d.residual
                )
            },
        ))
    };
    run().unwrap_or_else(|e| Instance::error(format!("instance {n}: {e}")))
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> SuiteOutcome {
    let (count, results): (usize, Vec<Instance>) = match suite {
        Suite::NdPreservation => {
            let c = cfg.count(suite.base_count());
            (
                c,
                (0..c)
                    .into_par_iter()
                    .map(|n| nd_instance(cfg, n))
                    .collect(),
            )
        }
        Suite::NcPreservation => {
            let c = cfg.count(suite.base_count());
            (
                c,
                (0..c)
                    .into_par_iter()
                    .map(|n| nc_instance(cfg, n))
                    .collect(),
            )
        }
        Suite::Monotonicity => {
            let c = cfg.count(suite.base_count());
            (
                c,
                (0..c)
                    .into_par_iter()
                    .map(|n| monotonicity_instance(cfg, n))
                    .collect(),
            )
        }
        Suite::ContextualityBit => {
            let per = cfg.count(100);
            let c = 3 * per;
            (
                c,
                (0..c)
                    .into_par_iter()
                    .map(|n| bit_instance(cfg, n, per))
                    .collect(),
            )
        }
    };
    let mut worst: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut failures = 0;
    let mut first_failure = None;
    for r in results {
        for (k, v) in r.values {
            let e = worst.entry(k).or_insert(f64::NEG_INFINITY);
            *e = e.max(v);
        }
        if let Some(f) = r.failure {
            failures += 1;
            first_failure.get_or_insert(f);
        }
    }
    SuiteOutcome {
        suite,
        instances: count,
        failures,
        pass: failures == 0,
        worst,
        first_failure,
    }
}

pub fn run_suites(suites: &[Suite], cfg: &SuiteConfig) -> SuiteReport {
    let outcomes: Vec<SuiteOutcome> = suites.iter().map(|&s| run_suite(s, cfg)).collect();
    SuiteReport {
        seed: cfg.seed,
        scale: cfg.scale,
        pass: outcomes.iter().all(|o| o.pass),
        suites: outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sweeps_pass_and_repeat() {
        let cfg = SuiteConfig {
            scale: 0.02,
            ..SuiteConfig::default()
        };
        let a = run_suites(&Suite::ALL, &cfg);
        assert!(a.pass, "{a:?}");
        assert_eq!(a.suites[3].instances, 6);
        let b = run_suites(&Suite::ALL, &cfg);
        assert_eq!(crate::json::to_string(&a), crate::json::to_string(&b));
    }

    #[test]
    fn seeds_change_instances() {
        let base = SuiteConfig {
            scale: 0.01,
            ..SuiteConfig::default()
        };
        let a = run_suite(Suite::NdPreservation, &base);
        let b = run_suite(Suite::NdPreservation, &SuiteConfig { seed: 9, ..base });
        assert!(a.pass && b.pass);
        let draw = |seed| instance_rng(seed, Suite::NdPreservation, 0).gen::<u64>();
        assert_ne!(draw(0), draw(9));
        assert_ne!(
            instance_rng(0, Suite::NdPreservation, 0).gen::<u64>(),
            instance_rng(0, Suite::NdPreservation, 1).gen::<u64>()
        );
    }
}
