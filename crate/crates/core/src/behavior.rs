//! Behaviors (conditional outcome tables) and the nondisturbance test.
//!
//! A behavior stores, for every stored context `j`, a dense vector over the
//! allowed outcomes of that context (one lit light per pressed button, see
//! [`OutcomeSpace`]). Marginals on sub-contexts are computed, never stored.
//! Entries that break the support rule can still be represented so that
//! [`Behavior::validate`] can report them; they are kept aside in a separate
//! list and ignored by every probabilistic operation.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::bits::{Bits, BitsError};
use crate::report::{Rule, ValidationReport};
use crate::scenario::{OutcomeSpace, Scenario, ScenarioError};

pub const DEFAULT_EPS_NORM: f64 = 1e-9;
pub const DEFAULT_EPS_ND: f64 = 1e-9;

/// Largest intersection whose every sub-context is checked for nondisturbance.
const MAX_SUBSET_BUTTONS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehaviorError {
    #[error("context {context} out of range ({count} contexts)")]
    ContextOutOfRange { context: usize, count: usize },
    #[error("table has {got} rows for {expected} contexts")]
    RowCount { expected: usize, got: usize },
    #[error("row {context} has {got} entries, expected {expected}")]
    RowLength {
        context: usize,
        expected: usize,
        got: usize,
    },
    #[error("outcome {outcome} listed twice for context {context}")]
    DuplicateEntry { context: usize, outcome: Bits },
    #[error("{x} does not dominate {sub}")]
    NotDominating { x: Bits, sub: Bits },
    #[error("{0} is not a stored context")]
    NotStored(Bits),
    #[error("behaviors live on different scenarios")]
    ScenarioMismatch,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Bits(#[from] BitsError),
}

/// An entry lighting a pattern that no allowed outcome matches.
#[derive(Debug, Clone, PartialEq)]
pub struct StrayEntry {
    pub context: usize,
    pub outcome: Bits,
    pub p: f64,
}

/// Conditional probability table `p(a|x)` over the stored contexts of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Behavior {
    scenario: Arc<Scenario>,
    table: Vec<Vec<f64>>,
    stray: Vec<StrayEntry>,
}

/// A distribution over the outcomes of a set of pressed buttons.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub space: OutcomeSpace,
    pub probs: Vec<f64>,
}

impl Marginal {
    /// Probability of the outcome lighting `lit` (one light per pressed button, in button order).
    pub fn prob_of_lights(&self, lit: &[usize]) -> Option<f64> {
        self.space.index_of_lights(lit).map(|i| self.probs[i])
    }
}

/// Whether a checked sub-context is itself a stored context.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum SubContextClass {
    Stored,
    ClosureOnly,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NdWitness {
    pub context: usize,
    pub other_context: usize,
    pub sub_context: Bits,
    /// Lit lights of the sub-context outcome where the marginals differ most.
    pub outcome: Bits,
    pub class: SubContextClass,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct NdReport {
    pub ok: bool,
    pub worst_deviation: f64,
    pub witness: Option<NdWitness>,
    /// Worst deviation over sub-contexts that are stored contexts.
    pub worst_stored: f64,
    /// Worst deviation over sub-contexts only in the downward closure.
    pub worst_closure_only: f64,
}

impl Behavior {
    pub fn zeros(scenario: Arc<Scenario>) -> Self {
        let table = (0..scenario.num_contexts())
            .map(|j| vec![0.0; scenario.outcome_space(j).size()])
            .collect();
        Behavior {
            scenario,
            table,
            stray: Vec::new(),
        }
    }

    /// Builds a behavior from dense rows, one per stored context.
    pub fn from_dense(
        scenario: Arc<Scenario>,
        table: Vec<Vec<f64>>,
    ) -> Result<Self, BehaviorError> {
        if table.len() != scenario.num_contexts() {
            return Err(BehaviorError::RowCount {
                expected: scenario.num_contexts(),
                got: table.len(),
            });
        }
        for (j, row) in table.iter().enumerate() {
            let expected = scenario.outcome_space(j).size();
            if row.len() != expected {
                return Err(BehaviorError::RowLength {
                    context: j,
                    expected,
                    got: row.len(),
                });
            }
        }
        Ok(Behavior {
            scenario,
            table,
            stray: Vec::new(),
        })
    }

    /// Builds a behavior from sparse `(context, outcome, p)` entries. Absent
    /// entries are zero; entries breaking the support rule are kept for reporting.
    pub fn from_entries<I>(scenario: Arc<Scenario>, entries: I) -> Result<Self, BehaviorError>
    where
        I: IntoIterator<Item = (usize, Bits, f64)>,
    {
        let mut b = Behavior::zeros(scenario);
        let mut seen: Vec<Vec<bool>> = b.table.iter().map(|r| vec![false; r.len()]).collect();
        for (j, outcome, p) in entries {
            let count = b.scenario.num_contexts();
            if j >= count {
                return Err(BehaviorError::ContextOutOfRange { context: j, count });
            }
            if outcome.len() != b.scenario.num_lights() {
                return Err(BitsError::LengthMismatch {
                    left: outcome.len(),
                    right: b.scenario.num_lights(),
                }
                .into());
            }
            match b.scenario.outcome_space(j).index_of_bits(&outcome) {
                Some(idx) => {
                    if seen[j][idx] {
                        return Err(BehaviorError::DuplicateEntry {
                            context: j,
                            outcome,
                        });
                    }
                    seen[j][idx] = true;
                    b.table[j][idx] = p;
                }
                None => {
                    if b.stray
                        .iter()
                        .any(|s| s.context == j && s.outcome == outcome)
                    {
                        return Err(BehaviorError::DuplicateEntry {
                            context: j,
                            outcome,
                        });
                    }
                    b.stray.push(StrayEntry {
                        context: j,
                        outcome,
                        p,
                    });
                }
            }
        }
        Ok(b)
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    /// Dense row of context `j`, indexed by [`OutcomeSpace`] order.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.table[j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.table[j]
    }

    pub fn stray_entries(&self) -> &[StrayEntry] {
        &self.stray
    }

    /// `p(a|x^(j))` for an outcome bitstring.
    pub fn prob(&self, j: usize, outcome: &Bits) -> f64 {
        match self.scenario.outcome_space(j).index_of_bits(outcome) {
            Some(idx) => self.table[j][idx],
            None => self
                .stray
                .iter()
                .find(|s| s.context == j && s.outcome == *outcome)
                .map_or(0.0, |s| s.p),
        }
    }

    /// Nonzero entries as `(context, outcome, p)`, allowed outcomes first.
    pub fn entries(&self) -> Vec<(usize, Bits, f64)> {
        let mut out = Vec::new();
        for (j, row) in self.table.iter().enumerate() {
            let space = self.scenario.outcome_space(j);
            for (idx, &p) in row.iter().enumerate() {
                if p != 0.0 {
                    out.push((j, space.outcome_bits(idx), p));
                }
            }
        }
        for s in &self.stray {
            out.push((s.context, s.outcome.clone(), s.p));
        }
        out
    }

    /// Checks normalization, nonnegativity and the support rule.
    pub fn validate(&self, eps_norm: f64) -> ValidationReport {
        let mut report = ValidationReport::new();
        for (j, row) in self.table.iter().enumerate() {
            let mut total = 0.0;
            for (idx, &p) in row.iter().enumerate() {
                if !(p >= 0.0) || p > 1.0 + eps_norm {
                    report.push(
                        Rule::Negative,
                        format!(
                            "context {j}, outcome {}: p = {p} outside [0, 1]",
                            self.scenario.outcome_space(j).outcome_bits(idx)
                        ),
                    );
                }
                total += p;
            }
            for s in self.stray.iter().filter(|s| s.context == j) {
                total += s.p;
            }
            if !((total - 1.0).abs() <= eps_norm) {
                report.push(Rule::Normalization, format!("context {j} sums to {total}"));
            }
        }
        for s in &self.stray {
            if s.p != 0.0 {
                report.push(
                    Rule::Support,
                    format!(
                        "context {}: outcome {} has p = {} but does not light exactly one light per pressed button",
                        s.context, s.outcome, s.p
                    ),
                );
            }
        }
        report
    }

    /// Marginal of stored context `j` on the sub-context `sub ⪯ x^(j)`.
    pub fn marginal(&self, j: usize, sub: &Bits) -> Result<Marginal, BehaviorError> {
        let count = self.scenario.num_contexts();
        if j >= count {
            return Err(BehaviorError::ContextOutOfRange { context: j, count });
        }
        let x = &self.scenario.contexts()[j];
        if !x.dominates(sub)? {
            return Err(BehaviorError::NotDominating {
                x: x.clone(),
                sub: sub.clone(),
            });
        }
        let space = self.scenario.outcome_space(j);
        let sub_space = self.scenario.outcome_space_of(sub)?;
        let proj = space.projection_onto(&sub_space);
        let mut probs = vec![0.0; sub_space.size()];
        for (idx, &p) in self.table[j].iter().enumerate() {
            probs[proj[idx]] += p;
        }
        Ok(Marginal {
            space: sub_space,
            probs,
        })
    }

    /// Marginal of the stored context `x` on `sub`, with `x ⪰ sub`.
    pub fn marginalize(&self, x: &Bits, sub: &Bits) -> Result<Marginal, BehaviorError> {
        let j = self
            .scenario
            .context_index(x)
            .ok_or_else(|| BehaviorError::NotStored(x.clone()))?;
        self.marginal(j, sub)
    }

    /// Nondisturbance: marginals on every shared sub-context agree across all
    /// stored contexts dominating it.
    ///
    /// Any sub-context dominated by two stored contexts lies under their
    /// intersection, so checking every pair's intersection and its subsets is
    /// exhaustive.
    pub fn is_nondisturbing(&self, eps: f64) -> NdReport {
        let s = &*self.scenario;
        let mut worst = 0.0f64;
        let mut worst_stored = 0.0f64;
        let mut worst_closure = 0.0f64;
        let mut witness = None;
        let n = s.num_contexts();
        for j in 0..n {
            for j2 in (j + 1)..n {
                let inter = s.contexts()[j].and(&s.contexts()[j2]);
                let buttons: Vec<usize> = inter.ones().collect();
                if buttons.is_empty() {
                    continue;
                }
                for sub in nonempty_subsets(&buttons, s.num_buttons()) {
                    let (Ok(m1), Ok(m2)) = (self.marginal(j, &sub), self.marginal(j2, &sub)) else {
                        continue;
                    };
                    let class = if s.context_index(&sub).is_some() {
                        SubContextClass::Stored
                    } else {
                        SubContextClass::ClosureOnly
                    };
                    for (idx, (a, b)) in m1.probs.iter().zip(m2.probs.iter()).enumerate() {
                        let d = (a - b).abs();
                        match class {
                            SubContextClass::Stored => worst_stored = worst_stored.max(d),
                            SubContextClass::ClosureOnly => worst_closure = worst_closure.max(d),
                        }
                        if d > worst {
                            worst = d;
                            witness = Some(NdWitness {
                                context: j,
                                other_context: j2,
                                sub_context: sub.clone(),
                                outcome: m1.space.outcome_bits(idx),
                                class,
                            });
                        }
                    }
                }
            }
        }
        NdReport {
            ok: worst <= eps,
            worst_deviation: worst,
            witness,
            worst_stored,
            worst_closure_only: worst_closure,
        }
    }

    /// Largest absolute entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &Behavior) -> Result<f64, BehaviorError> {
        if !same_scenario(&self.scenario, &other.scenario) {
            return Err(BehaviorError::ScenarioMismatch);
        }
        let mut worst = 0.0f64;
        for (r1, r2) in self.table.iter().zip(other.table.iter()) {
            for (a, b) in r1.iter().zip(r2.iter()) {
                worst = worst.max((a - b).abs());
            }
        }
        for s in &self.stray {
            worst = worst.max((s.p - other.prob(s.context, &s.outcome)).abs());
        }
        for s in &other.stray {
            worst = worst.max((s.p - self.prob(s.context, &s.outcome)).abs());
        }
        Ok(worst)
    }

    /// Max-norm closeness over all contexts.
    pub fn close_to(&self, other: &Behavior, eps: f64) -> Result<bool, BehaviorError> {
        Ok(self.max_abs_diff(other)? <= eps)
    }

    /// `Σ w_k B_k` over behaviors on the same scenario.
    pub fn convex_combination(parts: &[(f64, &Behavior)]) -> Result<Behavior, BehaviorError> {
        let first = parts.first().ok_or(BehaviorError::RowCount {
            expected: 1,
            got: 0,
        })?;
        let mut out = Behavior::zeros(first.1.scenario.clone());
        for &(w, b) in parts {
            if !same_scenario(&out.scenario, &b.scenario) {
                return Err(BehaviorError::ScenarioMismatch);
            }
            for (ro, rb) in out.table.iter_mut().zip(b.table.iter()) {
                for (o, &p) in ro.iter_mut().zip(rb.iter()) {
                    *o += w * p;
                }
            }
        }
        Ok(out)
    }
}

/// `behaviors_close`: max-norm comparison of two behaviors on one scenario.
pub fn behaviors_close(a: &Behavior, b: &Behavior, eps: f64) -> Result<bool, BehaviorError> {
    a.close_to(b, eps)
}

pub(crate) fn same_scenario(a: &Arc<Scenario>, b: &Arc<Scenario>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn nonempty_subsets(buttons: &[usize], num_buttons: usize) -> Vec<Bits> {
    if buttons.len() > MAX_SUBSET_BUTTONS {
        let mut all = vec![Bits::from_indices(num_buttons, buttons.iter().copied()).unwrap()];
        all.extend(buttons.iter().map(|&i| Bits::singleton(num_buttons, i)));
        return all;
    }
    (1usize..(1 << buttons.len()))
        .map(|mask| {
            let mut b = Bits::zeros(num_buttons);
            for (k, &i) in buttons.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    b.set(i, true);
                }
            }
            b
        })
        .collect()
}

/// A scenario together with a behavior on it.
#[derive(Debug, Clone, PartialEq)]
pub struct BlackBox {
    behavior: Behavior,
}

impl BlackBox {
    pub fn new(scenario: Arc<Scenario>, behavior: Behavior) -> Result<Self, BehaviorError> {
        if !same_scenario(&scenario, &behavior.scenario) {
            return Err(BehaviorError::ScenarioMismatch);
        }
        Ok(BlackBox { behavior })
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.behavior.scenario
    }

    pub fn behavior(&self) -> &Behavior {
        &self.behavior
    }

    pub fn into_behavior(self) -> Behavior {
        self.behavior
    }

    pub fn is_nondisturbing(&self, eps: f64) -> NdReport {
        self.behavior.is_nondisturbing(eps)
    }
}

impl From<Behavior> for BlackBox {
    fn from(behavior: Behavior) -> Self {
        BlackBox { behavior }
    }
}
