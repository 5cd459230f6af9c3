//! File formats and their conversion to the core types.
//!
//! Scenario: `{"buttons": b, "lights": l, "contexts": [[i, ...], ...], "light_edges": [[k, ...], ...]}`.
//!
//! Behavior: `{"scenario": <scenario or path>, "table": [{"context": j, "outcomes": [{"on": [k, ...], "p": x}]}]}`,
//! where `on` lists the lit lights in ascending order.
//!
//! NC box: `{"scenario": ..., "strategies": [[k_0, ..., k_{b-1}], ...], "weights": [...]}`.
//!
//! Wiring: `{"pre": <NC box>, "post": {"scenario_in": ..., "components": [{"w": x, "responses":
//! [{"light": j, "table": [{"z": button or -1, "b": "0110", "y": "10", "out": 0 or 1}]}]}]}, "target": ...}`.
//! Bitstrings list bit `i` as the `i`-th character.
//!
//! A scenario given as a string is a path, resolved against the directory of
//! the file that names it.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ctxkit_core::ncpolytope::{DeterministicStrategy, NcBox, NcCertificate, NcVerdict};
use ctxkit_core::wiring::{LightResponse, PostComponent, PostFamily, ResponseKey, Wiring};
use ctxkit_core::{Behavior, Bits, BlackBox, Scenario};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::json::{self, LoadError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub buttons: usize,
    pub lights: usize,
    pub contexts: Vec<Vec<usize>>,
    pub light_edges: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioField {
    Inline(ScenarioDoc),
    Path(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeDoc {
    pub on: Vec<usize>,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowDoc {
    pub context: usize,
    pub outcomes: Vec<OutcomeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorDoc {
    pub scenario: ScenarioField,
    pub table: Vec<RowDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NcBoxDoc {
    pub scenario: ScenarioField,
    pub strategies: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub z: i64,
    pub b: String,
    pub y: String,
    pub out: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseDoc {
    pub light: usize,
    pub table: Vec<EntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub w: f64,
    pub responses: Vec<ResponseDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostDoc {
    pub scenario_in: ScenarioField,
    pub components: Vec<ComponentDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WiringDoc {
    pub pre: NcBoxDoc,
    pub post: PostDoc,
    pub target: ScenarioField,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CertificateDoc {
    Weights {
        strategies: Vec<Vec<usize>>,
        weights: Vec<f64>,
    },
    Inequality {
        coefficients: Vec<CoefficientsDoc>,
        beta: f64,
        gap: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientsDoc {
    pub context: usize,
    /// One coefficient per outcome, listed as in the behavior table.
    pub outcomes: Vec<OutcomeDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictDoc {
    pub verdict: &'static str,
    pub noncontextual: bool,
    pub distance: f64,
    pub certificate: CertificateDoc,
}

/// Semantic problems found while building core values from a parsed file.
#[derive(Debug, Error)]
#[error("{path}: at `{at}`: {msg}")]
pub struct InvalidInput {
    pub path: PathBuf,
    pub at: String,
    pub msg: String,
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Invalid(#[from] InvalidInput),
}

/// Builds core values from documents read from `path`.
pub struct Loader {
    path: PathBuf,
}

impl Loader {
    pub fn new(path: &Path) -> Self {
        Loader {
            path: path.to_path_buf(),
        }
    }

    fn schema(&self, at: &str, msg: impl ToString) -> InputError {
        LoadError::schema(&self.path, at, msg).into()
    }

    fn invalid(&self, at: &str, msg: impl ToString) -> InputError {
        InvalidInput {
            path: self.path.clone(),
            at: at.to_string(),
            msg: msg.to_string(),
        }
        .into()
    }

    pub fn scenario(&self, field: &ScenarioField, at: &str) -> Result<Arc<Scenario>, InputError> {
        match field {
            ScenarioField::Inline(doc) => self.scenario_doc(doc, at),
            ScenarioField::Path(p) => {
                let base = self.path.parent().unwrap_or(Path::new("."));
                let path = base.join(p);
                let doc: ScenarioDoc = json::read(&path)?;
                Loader::new(&path).scenario_doc(&doc, "")
            }
        }
    }

    pub fn scenario_doc(&self, doc: &ScenarioDoc, at: &str) -> Result<Arc<Scenario>, InputError> {
        Scenario::from_lists(doc.buttons, doc.lights, &doc.contexts, &doc.light_edges)
            .map(Arc::new)
            .map_err(|e| self.schema(at, e))
    }

    pub fn behavior(&self, doc: &BehaviorDoc) -> Result<Behavior, InputError> {
        let s = self.scenario(&doc.scenario, "scenario")?;
        let mut entries = Vec::new();
        for (r, row) in doc.table.iter().enumerate() {
            for (o, out) in row.outcomes.iter().enumerate() {
                let at = format!("table[{r}].outcomes[{o}].on");
                if out.on.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(self.schema(&at, "lit lights must be strictly ascending"));
                }
                let bits = Bits::from_indices(s.num_lights(), out.on.iter().copied())
                    .map_err(|e| self.schema(&at, e))?;
                entries.push((row.context, bits, out.p));
            }
        }
        Behavior::from_entries(s, entries).map_err(|e| self.schema("table", e))
    }

    pub fn nc_box(&self, doc: &NcBoxDoc, at: &str) -> Result<NcBox, InputError> {
        let s = self.scenario(&doc.scenario, &join(at, "scenario"))?;
        let mut strategies = Vec::with_capacity(doc.strategies.len());
        for (n, choice) in doc.strategies.iter().enumerate() {
            let d = DeterministicStrategy::new(&s, choice.clone())
                .map_err(|e| self.invalid(&format!("{}[{n}]", join(at, "strategies")), e))?;
            strategies.push(d);
        }
        Ok(NcBox::new_unchecked(s, strategies, doc.weights.clone()))
    }

    pub fn wiring(&self, doc: &WiringDoc) -> Result<Wiring, InputError> {
        let pre = self.nc_box(&doc.pre, "pre")?;
        let target = self.scenario(&doc.target, "target")?;
        let zc = self.scenario(&doc.post.scenario_in, "post.scenario_in")?;
        let mut components = Vec::with_capacity(doc.post.components.len());
        for (c, comp) in doc.post.components.iter().enumerate() {
            let mut responses = Vec::with_capacity(comp.responses.len());
            for (r, resp) in comp.responses.iter().enumerate() {
                let base = format!("post.components[{c}].responses[{r}]");
                let mut entries = Vec::with_capacity(resp.table.len());
                for (e, entry) in resp.table.iter().enumerate() {
                    let at = format!("{base}.table[{e}]");
                    let z = match entry.z {
                        -1 => None,
                        z if z >= 0 => Some(z as usize),
                        z => return Err(self.schema(&format!("{at}.z"), format!("bad button {z}"))),
                    };
                    let b: Bits = entry
                        .b
                        .parse()
                        .map_err(|e| self.schema(&format!("{at}.b"), e))?;
                    let y: Bits = entry
                        .y
                        .parse()
                        .map_err(|e| self.schema(&format!("{at}.y"), e))?;
                    let out = match entry.out {
                        0 => false,
                        1 => true,
                        v => {
                            return Err(self
                                .schema(&format!("{at}.out"), format!("expected 0 or 1, got {v}")))
                        }
                    };
                    entries.push((ResponseKey { z, b, y }, out));
                }
                responses.push(
                    LightResponse::new(resp.light, entries).map_err(|e| self.invalid(&base, e))?,
                );
            }
            let at = format!("post.components[{c}]");
            components.push(
                PostComponent::new(comp.w, zc.num_lights(), responses)
                    .map_err(|e| self.schema(&at, e))?,
            );
        }
        Ok(Wiring::new(pre, PostFamily::new(zc, components), target))
    }
}

fn join(at: &str, field: &str) -> String {
    if at.is_empty() {
        field.to_string()
    } else {
        format!("{at}.{field}")
    }
}

pub fn scenario_doc(s: &Scenario) -> ScenarioDoc {
    ScenarioDoc {
        buttons: s.num_buttons(),
        lights: s.num_lights(),
        contexts: (0..s.num_contexts())
            .map(|j| s.context_buttons(j).to_vec())
            .collect(),
        light_edges: (0..s.num_buttons())
            .map(|i| s.lights_of_button(i).to_vec())
            .collect(),
    }
}

/// Every stored outcome of every context, zeros included, then stray entries.
pub fn behavior_doc(b: &Behavior) -> BehaviorDoc {
    let s = b.scenario();
    let mut table: Vec<RowDoc> = (0..s.num_contexts())
        .map(|j| {
            let sp = s.outcome_space(j);
            RowDoc {
                context: j,
                outcomes: b
                    .row(j)
                    .iter()
                    .enumerate()
                    .map(|(idx, &p)| OutcomeDoc {
                        on: sp.lit_lights(idx),
                        p,
                    })
                    .collect(),
            }
        })
        .collect();
    for stray in b.stray_entries() {
        table[stray.context].outcomes.push(OutcomeDoc {
            on: stray.outcome.ones().collect(),
            p: stray.p,
        });
    }
    BehaviorDoc {
        scenario: ScenarioField::Inline(scenario_doc(s)),
        table,
    }
}

pub fn box_doc(b: &BlackBox) -> BehaviorDoc {
    behavior_doc(b.behavior())
}

pub fn nc_box_doc(b: &NcBox) -> NcBoxDoc {
    NcBoxDoc {
        scenario: ScenarioField::Inline(scenario_doc(b.scenario())),
        strategies: b.strategies().iter().map(|d| d.choice().to_vec()).collect(),
        weights: b.weights().to_vec(),
    }
}

pub fn wiring_doc(w: &Wiring) -> WiringDoc {
    let components = w
        .post()
        .components()
        .iter()
        .map(|c| ComponentDoc {
            w: c.weight(),
            responses: c
                .responses()
                .map(|r| ResponseDoc {
                    light: r.light(),
                    table: r
                        .entries()
                        .map(|(k, out)| EntryDoc {
                            z: k.z.map_or(-1, |z| z as i64),
                            b: k.b.to_string(),
                            y: k.y.to_string(),
                            out: u8::from(out),
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    WiringDoc {
        pre: nc_box_doc(w.pre()),
        post: PostDoc {
            scenario_in: ScenarioField::Inline(scenario_doc(w.post().scenario_in())),
            components,
        },
        target: ScenarioField::Inline(scenario_doc(w.target())),
    }
}

/// Verdict with its certificate; membership weights are listed with their strategies.
pub fn verdict_doc(
    v: &NcVerdict,
    strategies: &[DeterministicStrategy],
    s: &Scenario,
) -> VerdictDoc {
    let certificate = match &v.certificate {
        NcCertificate::Weights(w) => {
            let (strategies, weights) = strategies
                .iter()
                .zip(w)
                .filter(|(_, &w)| w > 0.0)
                .map(|(d, &w)| (d.choice().to_vec(), w))
                .unzip();
            CertificateDoc::Weights {
                strategies,
                weights,
            }
        }
        NcCertificate::Inequality(ineq) => CertificateDoc::Inequality {
            coefficients: ineq
                .coefficients
                .iter()
                .map(|(j, c)| {
                    let sp = s.outcome_space(*j);
                    CoefficientsDoc {
                        context: *j,
                        outcomes: c
                            .iter()
                            .enumerate()
                            .map(|(idx, &p)| OutcomeDoc {
                                on: sp.lit_lights(idx),
                                p,
                            })
                            .collect(),
                    }
                })
                .collect(),
            beta: ineq.beta,
            gap: ineq.gap,
        },
    };
    VerdictDoc {
        verdict: if v.noncontextual {
            "noncontextual"
        } else {
            "contextual"
        },
        noncontextual: v.noncontextual,
        distance: v.distance,
        certificate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ctxkit_core::cycle::{extremal_contextual, relabel_wiring};

    #[test]
    fn behavior_round_trip() {
        let pr = extremal_contextual(4, &"1000".parse().unwrap()).unwrap();
        let text = json::to_string(&box_doc(&pr));
        let doc: BehaviorDoc = json::parse(Path::new("pr.json"), &text).unwrap();
        let back = Loader::new(Path::new("pr.json")).behavior(&doc).unwrap();
        assert_eq!(back, *pr.behavior());
    }

    #[test]
    fn wiring_round_trip() {
        let w = relabel_wiring(4, &"1000".parse().unwrap(), &"0100".parse().unwrap()).unwrap();
        let text = json::to_string(&wiring_doc(&w));
        let doc: WiringDoc = json::parse(Path::new("w.json"), &text).unwrap();
        let back = Loader::new(Path::new("w.json")).wiring(&doc).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn unsorted_lights_are_rejected() {
        let text = r#"{"scenario": {"buttons": 1, "lights": 2, "contexts": [[0]], "light_edges": [[0, 1]]},
            "table": [{"context": 0, "outcomes": [{"on": [1, 0], "p": 1.0}]}]}"#;
        let doc: BehaviorDoc = json::parse(Path::new("b.json"), text).unwrap();
        let err = Loader::new(Path::new("b.json")).behavior(&doc).unwrap_err();
        assert!(
            matches!(err, InputError::Load(LoadError::Schema { ref at, .. }) if at == "table[0].outcomes[0].on")
        );
    }

    #[test]
    fn repeated_context_entries_are_rejected() {
        let text =
            r#"{"buttons": 2, "lights": 4, "contexts": [[0, 0]], "light_edges": [[0, 1], [2, 3]]}"#;
        let doc: ScenarioDoc = json::parse(Path::new("s.json"), text).unwrap();
        assert!(Loader::new(Path::new("s.json"))
            .scenario_doc(&doc, "")
            .is_err());
    }
}
