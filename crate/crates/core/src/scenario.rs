//! Measurement scenarios: buttons, lights, contexts and exclusivity edges.
//!
//! Indices are 0-based throughout. A scenario stores its contexts explicitly
//! (the input compatibility hypergraph) together with one exclusivity edge per
//! button (the set of lights that button may turn on). Everything derived from
//! these, such as inverse light lookups, maximal contexts and outcome spaces, is
//! computed once at construction so a `Scenario` can be shared freely.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::bits::{Bits, BitsError};
use crate::report::{Rule, ValidationReport};

/// Default cap on any enumeration (strategies, outcome spaces, closures).
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("a scenario needs at least one button and one light")]
    Empty,
    #[error("expected {expected} light edges (one per button), got {got}")]
    EdgeCount { expected: usize, got: usize },
    #[error("context {context} has length {got}, expected {expected}")]
    ContextLength {
        context: usize,
        expected: usize,
        got: usize,
    },
    #[error("light edge of button {button} has length {got}, expected {expected}")]
    EdgeLength {
        button: usize,
        expected: usize,
        got: usize,
    },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("index {index} repeated in entry {entry}")]
    RepeatedIndex { entry: usize, index: usize },
    #[error("enumeration of {what} exceeds cap {cap}")]
    CapExceeded { what: &'static str, cap: usize },
    #[error(transparent)]
    Bits(#[from] BitsError),
}

/// Outcome space of a set of pressed buttons: one light per pressed button.
///
/// Outcomes are numbered in mixed radix with the lowest-numbered button most
/// significant, so index order is lexicographic in (button, light position).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSpace {
    buttons: Vec<usize>,
    lights: Vec<Vec<usize>>,
    strides: Vec<usize>,
    size: usize,
    num_lights: usize,
}

impl OutcomeSpace {
    fn new(scenario: &Scenario, buttons: Vec<usize>) -> Result<Self, ScenarioError> {
        let lights: Vec<Vec<usize>> = buttons
            .iter()
            .map(|&i| scenario.button_lights[i].clone())
            .collect();
        let mut strides = vec![0; buttons.len()];
        let mut size: usize = 1;
        for k in (0..buttons.len()).rev() {
            strides[k] = size;
            size = size
                .checked_mul(lights[k].len())
                .filter(|&s| s <= DEFAULT_ENUMERATION_CAP)
                .ok_or(ScenarioError::CapExceeded {
                    what: "context outcomes",
                    cap: DEFAULT_ENUMERATION_CAP,
                })?;
        }
        Ok(OutcomeSpace {
            buttons,
            lights,
            strides,
            size,
            num_lights: scenario.num_lights,
        })
    }

    /// Pressed buttons, ascending.
    pub fn buttons(&self) -> &[usize] {
        &self.buttons
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Light positions (within each button's edge) of outcome `index`.
    pub fn digits(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.strides
            .iter()
            .zip(self.lights.iter())
            .map(move |(&s, ls)| (index / s) % ls.len())
    }

    /// The lit light of each pressed button for outcome `index`.
    pub fn lit_lights(&self, index: usize) -> Vec<usize> {
        self.digits(index)
            .zip(self.lights.iter())
            .map(|(d, ls)| ls[d])
            .collect()
    }

    pub fn outcome_bits(&self, index: usize) -> Bits {
        let mut b = Bits::zeros(self.num_lights);
        for k in self.lit_lights(index) {
            b.set(k, true);
        }
        b
    }

    /// Index of an outcome given one lit light per pressed button, in button order.
    pub fn index_of_lights(&self, lit: &[usize]) -> Option<usize> {
        if lit.len() != self.buttons.len() {
            return None;
        }
        let mut idx = 0;
        for ((&light, ls), &s) in lit.iter().zip(self.lights.iter()).zip(self.strides.iter()) {
            let pos = ls.iter().position(|&x| x == light)?;
            idx += pos * s;
        }
        Some(idx)
    }

    /// Index of an outcome bitstring, or `None` if it breaks the support rule:
    /// exactly one lit light per pressed button and nothing else lit.
    pub fn index_of_bits(&self, outcome: &Bits) -> Option<usize> {
        if outcome.len() != self.num_lights || outcome.count_ones() != self.buttons.len() {
            return None;
        }
        let mut idx = 0;
        for (ls, &s) in self.lights.iter().zip(self.strides.iter()) {
            let mut found = None;
            for (pos, &k) in ls.iter().enumerate() {
                if outcome.get(k) {
                    if found.is_some() {
                        return None;
                    }
                    found = Some(pos);
                }
            }
            idx += found? * s;
        }
        Some(idx)
    }

    /// Maps each outcome of `self` to the outcome of `sub` obtained by ignoring
    /// buttons outside `sub`. `sub` must press a subset of these buttons.
    pub fn projection_onto(&self, sub: &OutcomeSpace) -> Vec<usize> {
        let positions: Vec<usize> = sub
            .buttons
            .iter()
            .map(|b| {
                self.buttons
                    .iter()
                    .position(|x| x == b)
                    .expect("sub-context presses a button outside the context")
            })
            .collect();
        (0..self.size)
            .map(|idx| {
                positions
                    .iter()
                    .zip(sub.strides.iter())
                    .map(|(&p, &s)| ((idx / self.strides[p]) % self.lights[p].len()) * s)
                    .sum()
            })
            .collect()
    }
}

/// Result of [`complementary_hypergraph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Complement {
    pub strings: Vec<Bits>,
    /// Set when enumeration stopped at the cap; `strings` is then a prefix.
    pub truncated: bool,
}

/// All `a ∈ {0,1}^l` with at most one lit light on every edge.
pub fn complementary_hypergraph(edges: &[Bits], num_lights: usize, cap: usize) -> Complement {
    let mut per_light: Vec<Vec<usize>> = vec![Vec::new(); num_lights];
    for (e, edge) in edges.iter().enumerate() {
        for k in edge.ones().filter(|&k| k < num_lights) {
            per_light[k].push(e);
        }
    }
    let mut used = vec![false; edges.len()];
    let mut out = Vec::new();
    let mut current = Bits::zeros(num_lights);
    let mut truncated = false;
    complement_dfs(
        0,
        &per_light,
        &mut used,
        &mut current,
        &mut out,
        cap,
        &mut truncated,
    );
    out.sort();
    Complement {
        strings: out,
        truncated,
    }
}

fn complement_dfs(
    k: usize,
    per_light: &[Vec<usize>],
    used: &mut [bool],
    current: &mut Bits,
    out: &mut Vec<Bits>,
    cap: usize,
    truncated: &mut bool,
) {
    if *truncated {
        return;
    }
    if k == per_light.len() {
        if out.len() >= cap {
            *truncated = true;
        } else {
            out.push(current.clone());
        }
        return;
    }
    complement_dfs(k + 1, per_light, used, current, out, cap, truncated);
    if per_light[k].iter().all(|&e| !used[e]) {
        for &e in &per_light[k] {
            used[e] = true;
        }
        current.set(k, true);
        complement_dfs(k + 1, per_light, used, current, out, cap, truncated);
        current.set(k, false);
        for &e in &per_light[k] {
            used[e] = false;
        }
    }
}

/// A measurement scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    num_buttons: usize,
    num_lights: usize,
    contexts: Vec<Bits>,
    light_edges: Vec<Bits>,
    context_buttons: Vec<Vec<usize>>,
    button_lights: Vec<Vec<usize>>,
    light_buttons: Vec<Vec<usize>>,
    maximal: Vec<usize>,
    spaces: Vec<OutcomeSpace>,
}

impl Scenario {
    /// Builds a scenario from bitstring-encoded contexts and light edges.
    ///
    /// Only shape is checked here; the structural invariants are reported by
    /// [`Scenario::validate`].
    pub fn new(
        num_buttons: usize,
        num_lights: usize,
        contexts: Vec<Bits>,
        light_edges: Vec<Bits>,
    ) -> Result<Self, ScenarioError> {
        if num_buttons == 0 || num_lights == 0 {
            return Err(ScenarioError::Empty);
        }
        if light_edges.len() != num_buttons {
            return Err(ScenarioError::EdgeCount {
                expected: num_buttons,
                got: light_edges.len(),
            });
        }
        for (j, c) in contexts.iter().enumerate() {
            if c.len() != num_buttons {
                return Err(ScenarioError::ContextLength {
                    context: j,
                    expected: num_buttons,
                    got: c.len(),
                });
            }
        }
        for (i, e) in light_edges.iter().enumerate() {
            if e.len() != num_lights {
                return Err(ScenarioError::EdgeLength {
                    button: i,
                    expected: num_lights,
                    got: e.len(),
                });
            }
        }
        let context_buttons: Vec<Vec<usize>> =
            contexts.iter().map(|c| c.ones().collect()).collect();
        let button_lights: Vec<Vec<usize>> =
            light_edges.iter().map(|e| e.ones().collect()).collect();
        let mut light_buttons = vec![Vec::new(); num_lights];
        for (i, ls) in button_lights.iter().enumerate() {
            for &k in ls {
                light_buttons[k].push(i);
            }
        }
        let maximal = (0..contexts.len())
            .filter(|&j| {
                contexts
                    .iter()
                    .all(|other| !other.contains_all(&contexts[j]) || *other == contexts[j])
            })
            .collect();
        let mut s = Scenario {
            num_buttons,
            num_lights,
            contexts,
            light_edges,
            context_buttons,
            button_lights,
            light_buttons,
            maximal,
            spaces: Vec::new(),
        };
        let spaces = s
            .context_buttons
            .iter()
            .map(|bs| OutcomeSpace::new(&s, bs.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        s.spaces = spaces;
        Ok(s)
    }

    /// Builds a scenario from index lists, rejecting out-of-range and repeated indices.
    pub fn from_lists(
        num_buttons: usize,
        num_lights: usize,
        contexts: &[Vec<usize>],
        light_edges: &[Vec<usize>],
    ) -> Result<Self, ScenarioError> {
        fn to_bits(len: usize, entry: usize, list: &[usize]) -> Result<Bits, ScenarioError> {
            let mut b = Bits::zeros(len);
            for &i in list {
                if i >= len {
                    return Err(ScenarioError::IndexOutOfRange {
                        index: i,
                        limit: len,
                    });
                }
                if b.get(i) {
                    return Err(ScenarioError::RepeatedIndex { entry, index: i });
                }
                b.set(i, true);
            }
            Ok(b)
        }
        if num_buttons == 0 || num_lights == 0 {
            return Err(ScenarioError::Empty);
        }
        let ctx = contexts
            .iter()
            .enumerate()
            .map(|(j, c)| to_bits(num_buttons, j, c))
            .collect::<Result<Vec<_>, _>>()?;
        let edges = light_edges
            .iter()
            .enumerate()
            .map(|(i, e)| to_bits(num_lights, i, e))
            .collect::<Result<Vec<_>, _>>()?;
        Scenario::new(num_buttons, num_lights, ctx, edges)
    }

    pub fn num_buttons(&self) -> usize {
        self.num_buttons
    }

    pub fn num_lights(&self) -> usize {
        self.num_lights
    }

    pub fn contexts(&self) -> &[Bits] {
        &self.contexts
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn light_edges(&self) -> &[Bits] {
        &self.light_edges
    }

    /// Pressed buttons of context `j`, ascending.
    pub fn context_buttons(&self, j: usize) -> &[usize] {
        &self.context_buttons[j]
    }

    /// `A_(i)`: lights associated with button `i`, ascending.
    pub fn lights_of_button(&self, i: usize) -> &[usize] {
        &self.button_lights[i]
    }

    /// `X_(k)`: buttons associated with light `k`.
    pub fn buttons_of_light(&self, k: usize) -> Result<&[usize], ScenarioError> {
        self.light_buttons
            .get(k)
            .map(|v| v.as_slice())
            .ok_or(ScenarioError::IndexOutOfRange {
                index: k,
                limit: self.num_lights,
            })
    }

    /// `A_(x)`: union of the light edges of the buttons pressed in `x`.
    pub fn lights_of_context(&self, x: &Bits) -> Result<Bits, ScenarioError> {
        if x.len() != self.num_buttons {
            return Err(BitsError::LengthMismatch {
                left: x.len(),
                right: self.num_buttons,
            }
            .into());
        }
        let mut out = Bits::zeros(self.num_lights);
        for i in x.ones() {
            out = out.or(&self.light_edges[i]);
        }
        Ok(out)
    }

    /// Indices of the maximal contexts, in context order.
    pub fn maximal_indices(&self) -> &[usize] {
        &self.maximal
    }

    pub fn maximal_contexts(&self) -> Vec<Bits> {
        self.maximal
            .iter()
            .map(|&j| self.contexts[j].clone())
            .collect()
    }

    /// Index of a stored context equal to `x`.
    pub fn context_index(&self, x: &Bits) -> Option<usize> {
        self.contexts.iter().position(|c| c == x)
    }

    /// Whether `x` lies in the downward closure of the contexts.
    pub fn in_closure(&self, x: &Bits) -> bool {
        x.len() == self.num_buttons && self.contexts.iter().any(|c| c.contains_all(x))
    }

    /// Stored contexts dominating `x`, in context order.
    pub fn dominating_contexts<'a>(&'a self, x: &'a Bits) -> impl Iterator<Item = usize> + 'a {
        (0..self.contexts.len()).filter(move |&j| self.contexts[j].contains_all(x))
    }

    /// Whether buttons `i` and `i2` can be pressed together.
    pub fn compatible(&self, i: usize, i2: usize) -> bool {
        self.contexts.iter().any(|c| c.get(i) && c.get(i2))
    }

    /// All members of the downward closure (including the empty string), sorted.
    pub fn downward_closure(&self, cap: usize) -> Result<Vec<Bits>, ScenarioError> {
        let mut out: Vec<Bits> = Vec::new();
        for bs in &self.context_buttons {
            if bs.len() >= usize::BITS as usize - 1 || (1usize << bs.len()) > cap {
                return Err(ScenarioError::CapExceeded {
                    what: "downward closure",
                    cap,
                });
            }
            for mask in 0..(1usize << bs.len()) {
                let sub = Bits::from_indices(
                    self.num_buttons,
                    bs.iter()
                        .enumerate()
                        .filter(|(k, _)| mask >> k & 1 == 1)
                        .map(|(_, &i)| i),
                )?;
                out.push(sub);
            }
            out.sort();
            out.dedup();
            if out.len() > cap {
                return Err(ScenarioError::CapExceeded {
                    what: "downward closure",
                    cap,
                });
            }
        }
        Ok(out)
    }

    /// Outcome space of stored context `j`.
    pub fn outcome_space(&self, j: usize) -> &OutcomeSpace {
        &self.spaces[j]
    }

    /// Outcome space of an arbitrary button subset.
    pub fn outcome_space_of(&self, x: &Bits) -> Result<OutcomeSpace, ScenarioError> {
        if x.len() != self.num_buttons {
            return Err(BitsError::LengthMismatch {
                left: x.len(),
                right: self.num_buttons,
            }
            .into());
        }
        OutcomeSpace::new(self, x.ones().collect())
    }

    /// `Ō`: output strings with at most one lit light per exclusivity edge.
    pub fn complementary_outputs(&self, cap: usize) -> Complement {
        complementary_hypergraph(&self.light_edges, self.num_lights, cap)
    }

    /// Product of edge sizes: the number of deterministic strategies.
    pub fn strategy_count(&self) -> Option<usize> {
        self.button_lights
            .iter()
            .try_fold(1usize, |acc, ls| acc.checked_mul(ls.len()))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        for (j, bs) in self.context_buttons.iter().enumerate() {
            if bs.is_empty() {
                report.push(Rule::EmptyContext, format!("context {j} presses no button"));
            }
        }
        for i in 0..self.num_buttons {
            if !self.contexts.iter().any(|c| c.get(i)) {
                report.push(
                    Rule::UncoveredButton,
                    format!("button {i} appears in no context"),
                );
            }
            if self.button_lights[i].is_empty() {
                report.push(Rule::EmptyLightEdge, format!("button {i} has no lights"));
            }
        }
        for (k, bs) in self.light_buttons.iter().enumerate() {
            if bs.is_empty() {
                report.push(
                    Rule::UncoveredLight,
                    format!("light {k} belongs to no button"),
                );
            }
        }
        for i in 0..self.num_buttons {
            for i2 in (i + 1)..self.num_buttons {
                if !self.light_edges[i].intersects(&self.light_edges[i2]) {
                    continue;
                }
                for (j, c) in self.contexts.iter().enumerate() {
                    if c.get(i) && c.get(i2) {
                        report.push(
                            Rule::SharedLight,
                            format!("buttons {i} and {i2} share a light but are both pressed in context {j}"),
                        );
                    }
                }
            }
        }
        for j in 0..self.contexts.len() {
            for j2 in (j + 1)..self.contexts.len() {
                if self.contexts[j] == self.contexts[j2] {
                    report.push(
                        Rule::DuplicateContext,
                        format!("contexts {j} and {j2} are equal"),
                    );
                }
            }
        }
        report
    }
}

/// `x ⪰ x′`.
pub fn dominates(x: &Bits, x_sub: &Bits) -> Result<bool, BitsError> {
    x.dominates(x_sub)
}
