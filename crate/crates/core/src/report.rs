use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// The rule a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Rule {
    // scenario
    EmptyContext,
    UncoveredButton,
    EmptyLightEdge,
    UncoveredLight,
    SharedLight,
    DuplicateContext,
    BitLength,
    // behavior
    Normalization,
    Support,
    Negative,
    ScenarioMismatch,
    // noncontextual boxes
    Weights,
    Strategy,
    // wirings
    Interface,
    LiteralInterface,
    LightOnWithoutButton,
    Consistency,
    MissingResponse,
    Incompatibility,
    UnreachableLight,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::EmptyContext => "empty context",
            Rule::UncoveredButton => "button in no context",
            Rule::EmptyLightEdge => "empty light edge",
            Rule::UncoveredLight => "light in no edge",
            Rule::SharedLight => "shared-light rule",
            Rule::DuplicateContext => "duplicate context",
            Rule::BitLength => "bitstring length",
            Rule::Normalization => "normalization",
            Rule::Support => "support rule",
            Rule::Negative => "nonnegativity",
            Rule::ScenarioMismatch => "scenario mismatch",
            Rule::Weights => "weight vector",
            Rule::Strategy => "strategy",
            Rule::Interface => "interface condition",
            Rule::LiteralInterface => "literal interface inclusion",
            Rule::LightOnWithoutButton => "light on with no pressed button",
            Rule::Consistency => "global consistency",
            Rule::MissingResponse => "missing response entry",
            Rule::Incompatibility => "association-set incompatibility",
            Rule::UnreachableLight => "unreachable output light",
        }
    }

    /// Advisory rules are reported but do not make a report fail.
    pub fn is_advisory(self) -> bool {
        matches!(self, Rule::LiteralInterface)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Violation {
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.detail)
    }
}

/// Report-style validation result: every violated invariant, not just the first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn new() -> Self {
        ValidationReport {
            ok: true,
            violations: Vec::new(),
        }
    }

    pub fn push(&mut self, rule: Rule, detail: String) {
        if !rule.is_advisory() {
            self.ok = false;
        }
        self.violations.push(Violation { rule, detail });
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.ok &= other.ok;
        self.violations.extend(other.violations);
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    /// Violations that make the report fail.
    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| !v.rule.is_advisory())
    }
}
