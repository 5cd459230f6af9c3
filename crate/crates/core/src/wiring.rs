//! Noncontextual wirings: a noncontextual pre-box feeding the inputs of a box
//! and a restricted post-processing family reading its outputs.
//!
//! Naming follows the three layers. The pre-box has buttons `Y` and lights
//! `B`, one `B`-light per button of the middle box (`|B| = |X|`). The middle
//! box has buttons `X` and lights `A`. The post family has one button per
//! `A`-light (`|Z| = |A|`) and output lights `C`. The wired box has buttons
//! `Y` and lights `C`.
//!
//! The post family is stored in normal form: a mixture of components, each
//! giving every output light `j` a deterministic table keyed by which button
//! of `Z_(j)` is pressed together with the pre-box inputs and outputs
//! restricted to the association sets `X_[j]` and `Y_[j]`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError, BlackBox, DEFAULT_EPS_ND, DEFAULT_EPS_NORM};
use crate::bits::Bits;
use crate::ncpolytope::{DeterministicStrategy, NcBox, NcError};
use crate::report::{Rule, ValidationReport};
use crate::scenario::{complementary_hypergraph, Scenario, ScenarioError};

/// Cap on the literal-interface enumeration of complementary hypergraphs.
const LITERAL_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WiringError {
    #[error("wiring is invalid: {}", summary(.0))]
    Invalid(ValidationReport),
    #[error("box scenario does not match the wiring target")]
    TargetMismatch,
    #[error(
        "middle box disturbs on pre-box output {beta}: dominating contexts disagree by {deviation}"
    )]
    Disturbing { beta: Bits, deviation: f64 },
    #[error("pre-box output {0} has no dominating context in the middle box")]
    SupportMismatch(Bits),
    #[error("output light {light} has conflicting entries for one key")]
    ConflictingEntry { light: usize },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    Nc(#[from] NcError),
}

fn summary(r: &ValidationReport) -> String {
    match r.errors().next() {
        Some(v) => format!("{v} ({} violations)", r.errors().count()),
        None => String::from("no violations"),
    }
}

/// Table key of an output light: the pressed button of `Z_(j)` (if any), and
/// the pre-box output and input restricted to `X_[j]` and `Y_[j]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResponseKey {
    pub z: Option<usize>,
    pub b: Bits,
    pub y: Bits,
}

/// Deterministic table of one output light.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightResponse {
    light: usize,
    table: BTreeMap<ResponseKey, bool>,
}

impl LightResponse {
    /// Builds the table; a key listed twice with different outputs is an error.
    pub fn new<I>(light: usize, entries: I) -> Result<Self, WiringError>
    where
        I: IntoIterator<Item = (ResponseKey, bool)>,
    {
        let mut table = BTreeMap::new();
        for (k, out) in entries {
            if let Some(prev) = table.insert(k, out) {
                if prev != out {
                    return Err(WiringError::ConflictingEntry { light });
                }
            }
        }
        Ok(LightResponse { light, table })
    }

    pub fn light(&self) -> usize {
        self.light
    }

    pub fn entries(&self) -> impl Iterator<Item = (&ResponseKey, bool)> {
        self.table.iter().map(|(k, &v)| (k, v))
    }

    pub fn lookup(&self, key: &ResponseKey) -> Option<bool> {
        self.table.get(key).copied()
    }
}

/// One deterministic post-processing component `φ` with its weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PostComponent {
    weight: f64,
    /// Indexed by output light; lights without a table are always off.
    responses: Vec<Option<LightResponse>>,
}

impl PostComponent {
    pub fn new(
        weight: f64,
        num_lights: usize,
        responses: Vec<LightResponse>,
    ) -> Result<Self, WiringError> {
        let mut slots: Vec<Option<LightResponse>> = vec![None; num_lights];
        for r in responses {
            let light = r.light;
            if light >= num_lights {
                return Err(ScenarioError::IndexOutOfRange {
                    index: light,
                    limit: num_lights,
                }
                .into());
            }
            match &mut slots[light] {
                Some(existing) => {
                    for (k, v) in r.table {
                        if existing.table.insert(k, v).is_some_and(|p| p != v) {
                            return Err(WiringError::ConflictingEntry { light });
                        }
                    }
                }
                slot => *slot = Some(r),
            }
        }
        Ok(PostComponent {
            weight,
            responses: slots,
        })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn responses(&self) -> impl Iterator<Item = &LightResponse> {
        self.responses.iter().flatten()
    }

    pub fn response(&self, light: usize) -> Option<&LightResponse> {
        self.responses.get(light).and_then(|r| r.as_ref())
    }
}

/// Mixture of post components on the `Z`/`C` scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PostFamily {
    scenario_in: Arc<Scenario>,
    components: Vec<PostComponent>,
}

impl PostFamily {
    pub fn new(scenario_in: Arc<Scenario>, components: Vec<PostComponent>) -> Self {
        PostFamily {
            scenario_in,
            components,
        }
    }

    pub fn scenario_in(&self) -> &Arc<Scenario> {
        &self.scenario_in
    }

    pub fn components(&self) -> &[PostComponent] {
        &self.components
    }
}

/// `Z_(j)`, `X_[j]` and `Y_[j]` of an output light, each ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationSets {
    pub z: Vec<usize>,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

/// A pre-box, a post family and the scenario of the box they wrap.
#[derive(Debug, Clone, PartialEq)]
pub struct Wiring {
    pre: NcBox,
    post: PostFamily,
    target: Arc<Scenario>,
}

impl Wiring {
    pub fn new(pre: NcBox, post: PostFamily, target: Arc<Scenario>) -> Self {
        Wiring { pre, post, target }
    }

    pub fn pre(&self) -> &NcBox {
        &self.pre
    }

    pub fn post(&self) -> &PostFamily {
        &self.post
    }

    pub fn target(&self) -> &Arc<Scenario> {
        &self.target
    }

    fn shapes_match(&self) -> bool {
        self.pre.scenario().num_lights() == self.target.num_buttons()
            && self.post.scenario_in.num_buttons() == self.target.num_lights()
    }

    /// Association sets of output light `j`, without the incompatibility check.
    fn raw_association(&self, j: usize) -> Result<AssociationSets, ScenarioError> {
        let z: Vec<usize> = self.post.scenario_in.buttons_of_light(j)?.to_vec();
        let mut x = BTreeSet::new();
        for &a in &z {
            x.extend(self.target.buttons_of_light(a)?.iter().copied());
        }
        let mut y = BTreeSet::new();
        for &k in &x {
            y.extend(self.pre.scenario().buttons_of_light(k)?.iter().copied());
        }
        Ok(AssociationSets {
            z,
            x: x.into_iter().collect(),
            y: y.into_iter().collect(),
        })
    }

    /// Association sets of output light `j`; rejects the wiring when `X_[j]`
    /// or `Y_[j]` contains two compatible buttons.
    pub fn association_sets(&self, j: usize) -> Result<AssociationSets, WiringError> {
        if !self.shapes_match() {
            let mut r = ValidationReport::new();
            r.push(Rule::ScenarioMismatch, "layer sizes do not line up".into());
            return Err(WiringError::Invalid(r));
        }
        let sets = self.raw_association(j)?;
        let mut r = ValidationReport::new();
        self.check_incompatible(j, &sets, &mut r);
        if r.ok {
            Ok(sets)
        } else {
            Err(WiringError::Invalid(r))
        }
    }

    fn check_incompatible(&self, j: usize, sets: &AssociationSets, r: &mut ValidationReport) {
        for (name, set, scen) in [
            ("X", &sets.x, &self.target),
            ("Y", &sets.y, self.pre.scenario()),
        ] {
            for (n, &i) in set.iter().enumerate() {
                for &i2 in &set[n + 1..] {
                    if scen.compatible(i, i2) {
                        r.push(
                            Rule::Incompatibility,
                            format!("output light {j}: {name}-buttons {i} and {i2} are compatible"),
                        );
                    }
                }
            }
        }
    }

    /// Lights of the wired box reachable from each `Y`-button:
    /// `∪_{k ∈ B_(i)} ∪_{a ∈ A_(k)} C_(a)`.
    fn output_edges(&self) -> Vec<Bits> {
        let pre = self.pre.scenario();
        let zc = &self.post.scenario_in;
        (0..pre.num_buttons())
            .map(|i| {
                let mut e = Bits::zeros(zc.num_lights());
                for &k in pre.lights_of_button(i) {
                    for &a in self.target.lights_of_button(k) {
                        e = e.or(&zc.light_edges()[a]);
                    }
                }
                e
            })
            .collect()
    }

    /// Scenario of the wired box: the pre-box contexts with the reachable output lights.
    pub fn output_scenario(&self) -> Result<Scenario, WiringError> {
        let pre = self.pre.scenario();
        Ok(Scenario::new(
            pre.num_buttons(),
            self.post.scenario_in.num_lights(),
            pre.contexts().to_vec(),
            self.output_edges(),
        )?)
    }

    /// Distinct `(Y-context, β)` pairs reachable through the listed pre strategies.
    fn reachable_inputs(&self) -> Vec<(usize, Bits)> {
        let pre = self.pre.scenario();
        let mut seen = BTreeSet::new();
        for j in 0..pre.num_contexts() {
            for d in self.pre.strategies() {
                seen.insert((j, pre_output(pre, j, d)));
            }
        }
        seen.into_iter().collect()
    }

    /// Checks every wiring rule and reports all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut r = ValidationReport::new();
        for (name, s) in [
            ("pre-box", self.pre.scenario()),
            ("target", &self.target),
            ("post", &self.post.scenario_in),
        ] {
            for v in s.validate().violations {
                r.push(v.rule, format!("{name} scenario: {}", v.detail));
            }
        }
        if !self.shapes_match() {
            r.push(
                Rule::ScenarioMismatch,
                format!(
                    "pre-box has {} lights for {} target buttons; post has {} buttons for {} target lights",
                    self.pre.scenario().num_lights(),
                    self.target.num_buttons(),
                    self.post.scenario_in.num_buttons(),
                    self.target.num_lights()
                ),
            );
            return r;
        }
        for v in self.pre.validate(DEFAULT_EPS_NORM).violations {
            r.push(v.rule, format!("pre-box: {}", v.detail));
        }
        self.validate_post_weights(&mut r);

        let zc = &self.post.scenario_in;
        let mut assoc = Vec::with_capacity(zc.num_lights());
        for j in 0..zc.num_lights() {
            match self.raw_association(j) {
                Ok(sets) => {
                    self.check_incompatible(j, &sets, &mut r);
                    assoc.push(sets);
                }
                Err(e) => {
                    r.push(Rule::ScenarioMismatch, format!("output light {j}: {e}"));
                    return r;
                }
            }
        }
        for (n, comp) in self.post.components.iter().enumerate() {
            for resp in comp.responses() {
                let sets = &assoc[resp.light];
                for (key, out) in resp.entries() {
                    if key.b.len() != sets.x.len() || key.y.len() != sets.y.len() {
                        r.push(
                            Rule::BitLength,
                            format!(
                                "component {n}, light {}: key lengths ({}, {}) but |X_[j]| = {}, |Y_[j]| = {}",
                                resp.light,
                                key.b.len(),
                                key.y.len(),
                                sets.x.len(),
                                sets.y.len()
                            ),
                        );
                    }
                    match key.z {
                        None if out => r.push(
                            Rule::LightOnWithoutButton,
                            format!(
                                "component {n}, light {} is on with no pressed button",
                                resp.light
                            ),
                        ),
                        Some(z) if !sets.z.contains(&z) => r.push(
                            Rule::Interface,
                            format!(
                                "component {n}, light {}: button {z} is not associated with it",
                                resp.light
                            ),
                        ),
                        _ => {}
                    }
                }
            }
        }

        let edges = self.output_edges();
        let mut covered = Bits::zeros(zc.num_lights());
        for e in &edges {
            covered = covered.or(e);
        }
        for j in 0..zc.num_lights() {
            if !covered.get(j) {
                r.push(
                    Rule::UnreachableLight,
                    format!("output light {j} is reachable from no input button"),
                );
            }
        }

        // Reachability sweep: interface conditions and per-component consistency.
        for (jy, beta) in self.reachable_inputs() {
            let y = &self.pre.scenario().contexts()[jy];
            if !self.target.in_closure(&beta) {
                r.push(
                    Rule::Interface,
                    format!("pre-box output {beta} on input context {jy} is not a legal input of the box"),
                );
                continue;
            }
            let space = match self.target.outcome_space_of(&beta) {
                Ok(s) => s,
                Err(e) => {
                    r.push(Rule::Interface, format!("pre-box output {beta}: {e}"));
                    continue;
                }
            };
            for idx in 0..space.size() {
                let alpha = space.lit_lights(idx);
                let z = Bits::from_indices(zc.num_buttons(), alpha.iter().copied())
                    .expect("A-light within range");
                if !zc.in_closure(&z) {
                    r.push(
                        Rule::Interface,
                        format!("box output {z} is not a legal input of the post family"),
                    );
                    continue;
                }
                for (n, comp) in self.post.components.iter().enumerate() {
                    if let Err(v) = respond(comp, zc, &assoc, &alpha, &beta, y) {
                        r.push(
                            v.rule(),
                            format!("component {n}, input context {jy}, β = {beta}, α = {z}: {v}"),
                        );
                    }
                }
            }
        }
        dedup_violations(&mut r);
        self.literal_interface(&mut r);
        r
    }

    fn validate_post_weights(&self, r: &mut ValidationReport) {
        if self.post.components.is_empty() {
            r.push(Rule::Weights, "post family has no components".into());
        }
        let mut total = 0.0;
        for (n, c) in self.post.components.iter().enumerate() {
            if !(c.weight >= 0.0) || !c.weight.is_finite() {
                r.push(
                    Rule::Weights,
                    format!("post component {n} has weight {}", c.weight),
                );
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > DEFAULT_EPS_NORM {
            r.push(Rule::Weights, format!("post weights sum to {total}"));
        }
    }

    /// Advisory: the set inclusions `Ō_B ⊆ I_X` and `Ō_A ⊆ I_Z` taken literally.
    fn literal_interface(&self, r: &mut ValidationReport) {
        for (name, edges, nl, contexts) in [
            (
                "pre-box outputs",
                self.pre.scenario().light_edges(),
                self.pre.scenario().num_lights(),
                &self.target,
            ),
            (
                "box outputs",
                self.target.light_edges(),
                self.target.num_lights(),
                &self.post.scenario_in,
            ),
        ] {
            let comp = complementary_hypergraph(edges, nl, LITERAL_CAP);
            let missing = comp
                .strings
                .iter()
                .filter(|s| contexts.context_index(s).is_none())
                .count();
            if missing > 0 || comp.truncated {
                r.push(
                    Rule::LiteralInterface,
                    format!(
                        "{missing} of {}{} complementary strings of the {name} are not stored contexts",
                        comp.strings.len(),
                        if comp.truncated { "+" } else { "" }
                    ),
                );
            }
        }
    }

    /// Validates once and returns a handle that applies the wiring repeatedly.
    pub fn prepare(&self) -> Result<PreparedWiring<'_>, WiringError> {
        let report = self.validate();
        if !report.ok {
            return Err(WiringError::Invalid(report));
        }
        let assoc = (0..self.post.scenario_in.num_lights())
            .map(|j| self.raw_association(j))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PreparedWiring {
            wiring: self,
            output: Arc::new(self.output_scenario()?),
            assoc,
        })
    }
}

fn dedup_violations(r: &mut ValidationReport) {
    let mut seen = BTreeSet::new();
    r.violations
        .retain(|v| seen.insert((v.rule, v.detail.clone())));
}

/// `β` produced by strategy `d` of the pre-box on its context `j`.
fn pre_output(pre: &Scenario, j: usize, d: &DeterministicStrategy) -> Bits {
    let mut beta = Bits::zeros(pre.num_lights());
    for &i in pre.context_buttons(j) {
        beta.set(d.light(i), true);
    }
    beta
}

enum RespondError {
    Missing { light: usize },
    NoLight { button: usize },
    TwoLights { button: usize },
    Collision { light: usize },
}

impl RespondError {
    fn rule(&self) -> Rule {
        match self {
            RespondError::Missing { .. } => Rule::MissingResponse,
            _ => Rule::Consistency,
        }
    }
}

impl core::fmt::Display for RespondError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RespondError::Missing { light } => write!(f, "no table entry for output light {light}"),
            RespondError::NoLight { button } => {
                write!(f, "button {button} turns on none of its lights")
            }
            RespondError::TwoLights { button } => {
                write!(f, "button {button} turns on more than one of its lights")
            }
            RespondError::Collision { light } => {
                write!(f, "output light {light} is turned on by two buttons")
            }
        }
    }
}

/// Lit output lights of one deterministic component.
fn respond(
    comp: &PostComponent,
    zc: &Scenario,
    assoc: &[AssociationSets],
    alpha: &[usize],
    beta: &Bits,
    y: &Bits,
) -> Result<Vec<usize>, RespondError> {
    let mut lit: Vec<usize> = Vec::with_capacity(alpha.len());
    for &a in alpha {
        let mut hit = None;
        for &j in zc.lights_of_button(a) {
            let sets = &assoc[j];
            let key = ResponseKey {
                z: Some(a),
                b: beta.restrict(&sets.x),
                y: y.restrict(&sets.y),
            };
            let out = comp
                .response(j)
                .and_then(|t| t.lookup(&key))
                .ok_or(RespondError::Missing { light: j })?;
            if out {
                if hit.is_some() {
                    return Err(RespondError::TwoLights { button: a });
                }
                hit = Some(j);
            }
        }
        let j = hit.ok_or(RespondError::NoLight { button: a })?;
        if lit.contains(&j) {
            return Err(RespondError::Collision { light: j });
        }
        lit.push(j);
    }
    Ok(lit)
}

/// A validated wiring with its association sets and output scenario.
#[derive(Debug, Clone)]
pub struct PreparedWiring<'w> {
    wiring: &'w Wiring,
    output: Arc<Scenario>,
    assoc: Vec<AssociationSets>,
}

impl PreparedWiring<'_> {
    pub fn output_scenario(&self) -> &Arc<Scenario> {
        &self.output
    }

    pub fn association(&self, j: usize) -> &AssociationSets {
        &self.assoc[j]
    }

    /// `p(α|β)` of the middle box, marginalizing a dominating stored context
    /// when `β` is not stored itself.
    fn middle_distribution(
        &self,
        b: &Behavior,
        beta: &Bits,
    ) -> Result<(Vec<Vec<usize>>, Vec<f64>), WiringError> {
        let target = &self.wiring.target;
        if let Some(j) = target.context_index(beta) {
            let sp = target.outcome_space(j);
            return Ok((
                (0..sp.size()).map(|i| sp.lit_lights(i)).collect(),
                b.row(j).to_vec(),
            ));
        }
        let mut found: Option<crate::behavior::Marginal> = None;
        let mut deviation = 0.0f64;
        for j in target.dominating_contexts(beta) {
            let m = b.marginal(j, beta)?;
            match &found {
                None => found = Some(m),
                Some(first) => {
                    for (p, q) in first.probs.iter().zip(&m.probs) {
                        deviation = deviation.max((p - q).abs());
                    }
                }
            }
        }
        if deviation > DEFAULT_EPS_ND {
            return Err(WiringError::Disturbing {
                beta: beta.clone(),
                deviation,
            });
        }
        let m = found.ok_or_else(|| WiringError::SupportMismatch(beta.clone()))?;
        Ok((
            (0..m.space.size()).map(|i| m.space.lit_lights(i)).collect(),
            m.probs,
        ))
    }

    /// `p(c|y) = Σ_{α,β} p_post(c|α; β, y) p_B(α|β) p_pre(β|y)`, summed in a fixed order.
    pub fn apply(&self, bx: &BlackBox) -> Result<BlackBox, WiringError> {
        let w = self.wiring;
        if !crate::behavior::same_scenario(bx.scenario(), &w.target) {
            return Err(WiringError::TargetMismatch);
        }
        let pre = w.pre.scenario();
        let zc = &w.post.scenario_in;
        let mut out = Behavior::zeros(self.output.clone());
        let mut cache: BTreeMap<Bits, (Vec<Vec<usize>>, Vec<f64>)> = BTreeMap::new();
        for jy in 0..pre.num_contexts() {
            let y = &pre.contexts()[jy];
            let space = self.output.outcome_space(jy).clone();
            for (d, wd) in w.pre.components() {
                if wd == 0.0 {
                    continue;
                }
                let beta = pre_output(pre, jy, d);
                if !cache.contains_key(&beta) {
                    let dist = self.middle_distribution(bx.behavior(), &beta)?;
                    cache.insert(beta.clone(), dist);
                }
                let (alphas, probs) = &cache[&beta];
                for (alpha, &pa) in alphas.iter().zip(probs) {
                    if pa == 0.0 {
                        continue;
                    }
                    for comp in &w.post.components {
                        if comp.weight == 0.0 {
                            continue;
                        }
                        let lit = respond(comp, zc, &self.assoc, alpha, &beta, y).map_err(|e| {
                            let mut r = ValidationReport::new();
                            r.push(e.rule(), format!("{e}"));
                            WiringError::Invalid(r)
                        })?;
                        let c = Bits::from_indices(zc.num_lights(), lit.iter().copied())
                            .expect("C-light within range");
                        let idx = space.index_of_bits(&c).ok_or_else(|| {
                            let mut r = ValidationReport::new();
                            r.push(
                                Rule::Consistency,
                                format!("output {c} breaks the support rule on context {jy}"),
                            );
                            WiringError::Invalid(r)
                        })?;
                        out.row_mut(jy)[idx] += wd * pa * comp.weight;
                    }
                }
            }
        }
        Ok(BlackBox::from(out))
    }

    /// The explicit hidden-variable form of `pre ∘ mid ∘ post` as an `NcBox`
    /// over the wired scenario: one composed strategy per `(γ, λ, φ)`, with
    /// equal strategies merged and the list sorted.
    pub fn compose(&self, mid: &NcBox) -> Result<NcBox, WiringError> {
        let w = self.wiring;
        if !crate::behavior::same_scenario(mid.scenario(), &w.target) {
            return Err(WiringError::TargetMismatch);
        }
        let pre = w.pre.scenario();
        let zc = &w.post.scenario_in;
        let nb = pre.num_buttons();
        let mut merged: BTreeMap<DeterministicStrategy, f64> = BTreeMap::new();
        for (g, wg) in w.pre.components() {
            for (l, wl) in mid.components() {
                for comp in &w.post.components {
                    let mut choice = Vec::with_capacity(nb);
                    for i in 0..nb {
                        // Only button i is pressed among Y_[j] and only its image among X_[j].
                        let k = g.light(i);
                        let a = l.light(k);
                        let beta = Bits::singleton(pre.num_lights(), k);
                        let y = Bits::singleton(nb, i);
                        let lit = respond(comp, zc, &self.assoc, &[a], &beta, &y).map_err(|e| {
                            let mut r = ValidationReport::new();
                            r.push(e.rule(), format!("composing button {i}: {e}"));
                            WiringError::Invalid(r)
                        })?;
                        choice.push(lit[0]);
                    }
                    let d = DeterministicStrategy::new(&self.output, choice)?;
                    *merged.entry(d).or_insert(0.0) += wg * wl * comp.weight;
                }
            }
        }
        let (strategies, weights) = merged.into_iter().unzip();
        Ok(NcBox::new_unchecked(
            self.output.clone(),
            strategies,
            weights,
        ))
    }
}

/// Applies a wiring to a box after validating it.
pub fn apply_wiring(w: &Wiring, bx: &BlackBox) -> Result<BlackBox, WiringError> {
    w.prepare()?.apply(bx)
}

pub fn validate_wiring(w: &Wiring) -> ValidationReport {
    w.validate()
}

/// Composes an explicit pre-box, middle box and post family into one `NcBox`.
pub fn compose_nc_triple(
    pre: &NcBox,
    mid: &NcBox,
    post: &PostFamily,
) -> Result<NcBox, WiringError> {
    let w = Wiring::new(pre.clone(), post.clone(), mid.scenario().clone());
    w.prepare()?.compose(mid)
}

/// Identity pre-box on `target`: same contexts, button `i` lights `B`-light `i`.
pub fn identity_pre(target: &Scenario) -> Result<NcBox, WiringError> {
    let n = target.num_buttons();
    let edges: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let ctx: Vec<Vec<usize>> = (0..target.num_contexts())
        .map(|j| target.context_buttons(j).to_vec())
        .collect();
    let s = Arc::new(Scenario::from_lists(n, n, &ctx, &edges)?);
    let d = DeterministicStrategy::new(&s, (0..n).collect())?;
    Ok(NcBox::deterministic(s, d))
}

/// Post-family input scenario with the given `C`-edge per `A`-light. Its
/// contexts are the output patterns of the maximal contexts of `target`.
pub fn post_scenario(
    target: &Scenario,
    num_out_lights: usize,
    edges: Vec<Bits>,
) -> Result<Scenario, WiringError> {
    let mut contexts = BTreeSet::new();
    for &j in target.maximal_indices() {
        let sp = target.outcome_space(j);
        for idx in 0..sp.size() {
            contexts.insert(sp.outcome_bits(idx));
        }
    }
    Ok(Scenario::new(
        target.num_lights(),
        num_out_lights,
        contexts.into_iter().collect(),
        edges,
    )?)
}

/// Deterministic post component where `A`-light `a` turns on `map(a)`,
/// ignoring the pre-box. The table covers every key reachable under `w_pre`.
pub fn relabel_component(
    pre: &NcBox,
    target: &Scenario,
    post_in: &Arc<Scenario>,
    weight: f64,
    map: impl Fn(usize) -> usize,
) -> Result<PostComponent, WiringError> {
    let skeleton = Wiring::new(
        pre.clone(),
        PostFamily::new(post_in.clone(), Vec::new()),
        Arc::new(target.clone()),
    );
    let assoc = (0..post_in.num_lights())
        .map(|j| skeleton.raw_association(j))
        .collect::<Result<Vec<_>, _>>()?;
    let mut tables: Vec<Vec<(ResponseKey, bool)>> = vec![Vec::new(); post_in.num_lights()];
    for (jy, beta) in skeleton.reachable_inputs() {
        let y = &pre.scenario().contexts()[jy];
        for k in beta.ones() {
            for &a in target.lights_of_button(k) {
                for &j in post_in.lights_of_button(a) {
                    let key = ResponseKey {
                        z: Some(a),
                        b: beta.restrict(&assoc[j].x),
                        y: y.restrict(&assoc[j].y),
                    };
                    tables[j].push((key, map(a) == j));
                }
            }
        }
    }
    let responses = tables
        .into_iter()
        .enumerate()
        .map(|(j, t)| LightResponse::new(j, t))
        .collect::<Result<Vec<_>, _>>()?;
    PostComponent::new(weight, post_in.num_lights(), responses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::{build_cycle, extremal_contextual};
    use crate::ncpolytope::{enumerate_strategies, NcTester};

    fn cycle(b: usize) -> Arc<Scenario> {
        Arc::new(build_cycle(b).unwrap())
    }

    /// Identity pre and identity post on a cycle.
    fn identity_wiring(b: usize) -> Wiring {
        let target = cycle(b);
        let pre = identity_pre(&target).unwrap();
        let l = target.num_lights();
        let edges: Vec<Bits> = (0..l).map(|a| Bits::singleton(l, a)).collect();
        let post_in = Arc::new(post_scenario(&target, l, edges).unwrap());
        let comp = relabel_component(&pre, &target, &post_in, 1.0, |a| a).unwrap();
        Wiring::new(pre, PostFamily::new(post_in, vec![comp]), target)
    }

    #[test]
    fn identity_wiring_is_valid_and_trivial() {
        let w = identity_wiring(4);
        let r = w.validate();
        assert!(r.ok, "{:?}", r.violations);
        // the literal reading fails even here
        assert!(r.has(Rule::LiteralInterface));
        let pr = extremal_contextual(4, &"1000".parse().unwrap()).unwrap();
        let out = apply_wiring(&w, &pr).unwrap();
        assert_eq!(out.behavior().rows(), pr.behavior().rows());
        assert_eq!(**out.scenario(), **pr.scenario());
        let sets = w.association_sets(5).unwrap();
        assert_eq!(sets.z, [5]);
        assert_eq!(sets.x, [2]);
        assert_eq!(sets.y, [2]);
    }

    #[test]
    fn light_on_without_button() {
        let w = identity_wiring(3);
        let mut comp = w.post.components[0].clone();
        let key = ResponseKey {
            z: None,
            b: Bits::zeros(1),
            y: Bits::zeros(1),
        };
        comp.responses[0].as_mut().unwrap().table.insert(key, true);
        let bad = Wiring::new(
            w.pre.clone(),
            PostFamily::new(w.post.scenario_in.clone(), vec![comp]),
            w.target.clone(),
        );
        let r = bad.validate();
        assert!(!r.ok);
        assert!(r.has(Rule::LightOnWithoutButton));
    }

    #[test]
    fn pre_output_outside_closure() {
        // pre box on a single 2-button context mapping onto buttons 0 and 2 of the 4-cycle,
        // which are never pressed together
        let target = cycle(4);
        let pre_s =
            Arc::new(Scenario::from_lists(2, 4, &[vec![0, 1]], &[vec![0, 1], vec![2, 3]]).unwrap());
        let d = DeterministicStrategy::new(&pre_s, vec![0, 2]).unwrap();
        let pre = NcBox::deterministic(pre_s, d);
        let id = identity_wiring(4);
        let w = Wiring::new(pre, id.post.clone(), target);
        let r = w.validate();
        assert!(!r.ok);
        assert!(r.has(Rule::Interface));
    }

    #[test]
    fn compatible_buttons_sharing_an_output_light_are_rejected() {
        // Z-buttons 0 (A-light of X-button 0) and 2 (A-light of X-button 1) both feed C-light 0;
        // X-buttons 0 and 1 are compatible on the 4-cycle.
        let target = cycle(4);
        let l = target.num_lights();
        let mut edges: Vec<Bits> = (0..l).map(|a| Bits::singleton(l, a)).collect();
        edges[2] = Bits::from_indices(l, [0, 2]).unwrap();
        let pre = identity_pre(&target).unwrap();
        let post_in = Arc::new(Scenario::new(l, l, vec![Bits::ones_of_len(l)], edges).unwrap());
        let w = Wiring::new(pre, PostFamily::new(post_in, vec![]), target);
        assert!(matches!(
            w.association_sets(0),
            Err(WiringError::Invalid(_))
        ));
        assert!(w.validate().has(Rule::Incompatibility));
    }

    #[test]
    fn composition_matches_application() {
        let target = cycle(3);
        let w = identity_wiring(3);
        let st = enumerate_strategies(&target, 1 << 20).unwrap();
        let mid = NcBox::new(
            target.clone(),
            vec![st[1].clone(), st[6].clone()],
            vec![0.25, 0.75],
        )
        .unwrap();
        let p = w.prepare().unwrap();
        let composed = p.compose(&mid).unwrap();
        let applied = p.apply(&mid.to_box()).unwrap();
        assert!(
            composed
                .behavior()
                .max_abs_diff(applied.behavior())
                .unwrap()
                <= 1e-12
        );
        assert_eq!(composed.strategies().len(), 2);
        let t = NcTester::new(p.output_scenario().clone()).unwrap();
        assert!(t.test(applied.behavior(), 1e-8).unwrap().noncontextual);
    }
}
