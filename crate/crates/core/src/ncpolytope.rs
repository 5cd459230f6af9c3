//! The noncontextual polytope: deterministic strategies, their mixtures, and
//! LP membership with certificates.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::behavior::{same_scenario, Behavior, BehaviorError, BlackBox, DEFAULT_EPS_NORM};
use crate::lp::{hull_distance, LpError};
use crate::report::{Rule, ValidationReport};
use crate::scenario::{Scenario, DEFAULT_ENUMERATION_CAP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NcError {
    #[error("strategy enumeration exceeds cap {cap}")]
    CapExceeded { cap: usize },
    #[error("invalid noncontextual box: {0:?}")]
    Invalid(ValidationReport),
    #[error("strategy has {got} entries, scenario has {expected} buttons")]
    StrategyLength { expected: usize, got: usize },
    #[error("light {light} is not in the edge of button {button}")]
    StrategyLight { button: usize, light: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
}

/// One lit light per button: `choice[i] ∈ A_(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeterministicStrategy {
    choice: Vec<usize>,
}

impl DeterministicStrategy {
    pub fn new(scenario: &Scenario, choice: Vec<usize>) -> Result<Self, NcError> {
        if choice.len() != scenario.num_buttons() {
            return Err(NcError::StrategyLength {
                expected: scenario.num_buttons(),
                got: choice.len(),
            });
        }
        for (i, &k) in choice.iter().enumerate() {
            if !scenario.lights_of_button(i).contains(&k) {
                return Err(NcError::StrategyLight {
                    button: i,
                    light: k,
                });
            }
        }
        Ok(DeterministicStrategy { choice })
    }

    /// Unchecked constructor for callers that built `choice` from the edges.
    pub(crate) fn from_choice(choice: Vec<usize>) -> Self {
        DeterministicStrategy { choice }
    }

    pub fn choice(&self) -> &[usize] {
        &self.choice
    }

    pub fn light(&self, button: usize) -> usize {
        self.choice[button]
    }

    /// Outcome index this strategy produces in stored context `j`.
    pub fn outcome_in(&self, scenario: &Scenario, j: usize) -> usize {
        let lit: Vec<usize> = scenario
            .context_buttons(j)
            .iter()
            .map(|&i| self.choice[i])
            .collect();
        scenario
            .outcome_space(j)
            .index_of_lights(&lit)
            .expect("strategy light outside its button edge")
    }
}

/// All strategies, lexicographic in `(button, light)` with button 0 most significant.
pub fn enumerate_strategies(
    scenario: &Scenario,
    cap: usize,
) -> Result<Vec<DeterministicStrategy>, NcError> {
    let count = scenario
        .strategy_count()
        .filter(|&n| n <= cap)
        .ok_or(NcError::CapExceeded { cap })?;
    let b = scenario.num_buttons();
    let mut digits = vec![0usize; b];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(DeterministicStrategy::from_choice(
            (0..b)
                .map(|i| scenario.lights_of_button(i)[digits[i]])
                .collect(),
        ));
        for i in (0..b).rev() {
            digits[i] += 1;
            if digits[i] < scenario.lights_of_button(i).len() {
                break;
            }
            digits[i] = 0;
        }
    }
    Ok(out)
}

/// The deterministic behavior of a strategy on every stored context.
pub fn strategy_behavior(scenario: &Arc<Scenario>, d: &DeterministicStrategy) -> Behavior {
    let mut out = Behavior::zeros(scenario.clone());
    for j in 0..scenario.num_contexts() {
        let idx = d.outcome_in(scenario, j);
        out.row_mut(j)[idx] = 1.0;
    }
    out
}

/// A weighted mixture of deterministic strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct NcBox {
    scenario: Arc<Scenario>,
    strategies: Vec<DeterministicStrategy>,
    weights: Vec<f64>,
}

impl NcBox {
    /// Checked constructor; see [`NcBox::validate`] for the rules.
    pub fn new(
        scenario: Arc<Scenario>,
        strategies: Vec<DeterministicStrategy>,
        weights: Vec<f64>,
    ) -> Result<Self, NcError> {
        let b = NcBox {
            scenario,
            strategies,
            weights,
        };
        let report = b.validate(DEFAULT_EPS_NORM);
        if report.ok {
            Ok(b)
        } else {
            Err(NcError::Invalid(report))
        }
    }

    /// Builds an `NcBox` without validation; [`NcBox::validate`] reports problems.
    pub fn new_unchecked(
        scenario: Arc<Scenario>,
        strategies: Vec<DeterministicStrategy>,
        weights: Vec<f64>,
    ) -> Self {
        NcBox {
            scenario,
            strategies,
            weights,
        }
    }

    /// A single strategy with weight 1.
    pub fn deterministic(scenario: Arc<Scenario>, d: DeterministicStrategy) -> Self {
        NcBox {
            scenario,
            strategies: vec![d],
            weights: vec![1.0],
        }
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn strategies(&self) -> &[DeterministicStrategy] {
        &self.strategies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> impl Iterator<Item = (&DeterministicStrategy, f64)> {
        self.strategies.iter().zip(self.weights.iter().copied())
    }

    pub fn validate(&self, eps_norm: f64) -> ValidationReport {
        let mut r = ValidationReport::new();
        let s = &self.scenario;
        if self.strategies.len() != self.weights.len() {
            r.push(
                Rule::Weights,
                format!(
                    "{} strategies but {} weights",
                    self.strategies.len(),
                    self.weights.len()
                ),
            );
        }
        if self.strategies.is_empty() {
            r.push(Rule::Weights, "no strategies".into());
        }
        for (n, w) in self.weights.iter().enumerate() {
            if !(*w >= 0.0) || !w.is_finite() {
                r.push(Rule::Weights, format!("weight {n} is {w}"));
            }
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > eps_norm {
            r.push(Rule::Weights, format!("weights sum to {total}"));
        }
        for (n, d) in self.strategies.iter().enumerate() {
            if let Err(e) = DeterministicStrategy::new(s, d.choice.clone()) {
                r.push(Rule::Strategy, format!("strategy {n}: {e}"));
            }
        }
        for a in 0..self.strategies.len() {
            for b in (a + 1)..self.strategies.len() {
                if self.strategies[a] == self.strategies[b] {
                    r.push(Rule::Strategy, format!("strategies {a} and {b} are equal"));
                }
            }
        }
        r
    }

    /// Mixed behavior, summed in strategy order.
    pub fn behavior(&self) -> Behavior {
        let s = &self.scenario;
        let mut out = Behavior::zeros(s.clone());
        for (d, w) in self.components() {
            for j in 0..s.num_contexts() {
                let idx = d.outcome_in(s, j);
                out.row_mut(j)[idx] += w;
            }
        }
        out
    }

    pub fn to_box(&self) -> BlackBox {
        BlackBox::from(self.behavior())
    }
}

/// Convex combination of strategy behaviors; errors on an invalid weight vector.
pub fn mix(
    scenario: &Arc<Scenario>,
    strategies: &[DeterministicStrategy],
    weights: &[f64],
) -> Result<BlackBox, NcError> {
    Ok(NcBox::new(scenario.clone(), strategies.to_vec(), weights.to_vec())?.to_box())
}

/// A linear inequality over the maximal-context rows of a behavior.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatingInequality {
    /// `(context index, coefficient per outcome of that context)` for each maximal context.
    pub coefficients: Vec<(usize, Vec<f64>)>,
    /// Largest value of the functional over all vertices.
    pub beta: f64,
    /// `⟨c, p⟩ − β` for the tested behavior.
    pub gap: f64,
}

impl SeparatingInequality {
    pub fn evaluate(&self, b: &Behavior) -> f64 {
        self.coefficients
            .iter()
            .map(|(j, c)| c.iter().zip(b.row(*j)).map(|(c, p)| c * p).sum::<f64>())
            .sum()
    }

    pub fn evaluate_strategy(&self, scenario: &Scenario, d: &DeterministicStrategy) -> f64 {
        self.coefficients
            .iter()
            .map(|(j, c)| c[d.outcome_in(scenario, *j)])
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NcCertificate {
    /// Convex weights over the vertex list that reproduce the behavior.
    Weights(Vec<f64>),
    /// A valid inequality for the polytope that the behavior violates.
    Inequality(SeparatingInequality),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NcVerdict {
    pub noncontextual: bool,
    /// `min_q ‖Vq − p‖_∞` over the weight simplex, on maximal-context rows.
    pub distance: f64,
    pub certificate: NcCertificate,
}

impl NcVerdict {
    /// The membership witness as an `NcBox` (zero weights dropped).
    pub fn witness(&self, tester: &NcTester) -> Option<NcBox> {
        let NcCertificate::Weights(w) = &self.certificate else {
            return None;
        };
        let (strategies, weights): (Vec<_>, Vec<_>) = tester
            .strategies
            .iter()
            .zip(w)
            .filter(|(_, &w)| w > 0.0)
            .map(|(d, &w)| (d.clone(), w))
            .unzip();
        Some(NcBox::new_unchecked(
            tester.scenario.clone(),
            strategies,
            weights,
        ))
    }
}

/// Membership tester with the vertex matrix built once per scenario.
#[derive(Debug, Clone)]
pub struct NcTester {
    scenario: Arc<Scenario>,
    strategies: Vec<DeterministicStrategy>,
    /// `(context, outcome)` for each LP row.
    rows: Vec<(usize, usize)>,
    columns: Vec<Vec<f64>>,
}

impl NcTester {
    pub fn new(scenario: Arc<Scenario>) -> Result<Self, NcError> {
        Self::with_cap(scenario, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(scenario: Arc<Scenario>, cap: usize) -> Result<Self, NcError> {
        let strategies = enumerate_strategies(&scenario, cap)?;
        let mut rows = Vec::new();
        for &j in scenario.maximal_indices() {
            for o in 0..scenario.outcome_space(j).size() {
                rows.push((j, o));
            }
        }
        let columns = strategies
            .iter()
            .map(|d| {
                rows.iter()
                    .map(|&(j, o)| {
                        if d.outcome_in(&scenario, j) == o {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(NcTester {
            scenario,
            strategies,
            rows,
            columns,
        })
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn strategies(&self) -> &[DeterministicStrategy] {
        &self.strategies
    }

    /// Vertex columns restricted to maximal-context rows.
    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// `(context, outcome)` labels of the LP rows.
    pub fn rows(&self) -> &[(usize, usize)] {
        &self.rows
    }

    /// The behavior restricted to the LP rows.
    pub fn row_vector(&self, b: &Behavior) -> Vec<f64> {
        self.rows.iter().map(|&(j, o)| b.row(j)[o]).collect()
    }

    pub fn test(&self, b: &Behavior, eps_lp: f64) -> Result<NcVerdict, NcError> {
        if !same_scenario(&self.scenario, b.scenario()) {
            return Err(BehaviorError::ScenarioMismatch.into());
        }
        let p = self.row_vector(b);
        let fit = hull_distance(&self.columns, &p)?;
        let distance = fit.distance.max(0.0);
        if distance <= eps_lp {
            let mut w: Vec<f64> = fit.weights.iter().map(|&x| x.max(0.0)).collect();
            let total: f64 = w.iter().sum();
            for x in &mut w {
                *x /= total;
            }
            return Ok(NcVerdict {
                noncontextual: true,
                distance,
                certificate: NcCertificate::Weights(w),
            });
        }
        let norm = fit.functional.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let scale = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        let mut coefficients: Vec<(usize, Vec<f64>)> = Vec::new();
        for (&(j, o), c) in self.rows.iter().zip(&fit.functional) {
            if coefficients.last().map(|(jj, _)| *jj) != Some(j) {
                coefficients.push((j, vec![0.0; self.scenario.outcome_space(j).size()]));
            }
            coefficients.last_mut().unwrap().1[o] = c * scale;
        }
        let mut ineq = SeparatingInequality {
            coefficients,
            beta: 0.0,
            gap: 0.0,
        };
        ineq.beta = self
            .strategies
            .iter()
            .map(|d| ineq.evaluate_strategy(&self.scenario, d))
            .fold(f64::NEG_INFINITY, f64::max);
        ineq.gap = ineq.evaluate(b) - ineq.beta;
        Ok(NcVerdict {
            noncontextual: false,
            distance,
            certificate: NcCertificate::Inequality(ineq),
        })
    }
}

/// LP membership test of a box in the noncontextual polytope.
pub fn is_noncontextual(bx: &BlackBox, eps_lp: f64) -> Result<NcVerdict, NcError> {
    NcTester::new(bx.scenario().clone())?.test(bx.behavior(), eps_lp)
}

/// Max-norm distance to the polytope computed in exact rational arithmetic.
///
/// Each probability is converted exactly from its binary value.
#[cfg(feature = "exact")]
pub fn exact_distance(
    tester: &NcTester,
    b: &Behavior,
) -> Result<num_rational::BigRational, NcError> {
    use num_rational::BigRational;
    use num_traits::{One, Zero};
    let to_q = |x: f64| BigRational::from_float(x).ok_or(LpError::Shape);
    let p = tester
        .row_vector(b)
        .into_iter()
        .map(to_q)
        .collect::<Result<Vec<_>, _>>()?;
    let cols: Vec<Vec<BigRational>> = tester
        .columns
        .iter()
        .map(|c| {
            c.iter()
                .map(|&x| {
                    if x == 1.0 {
                        BigRational::one()
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    Ok(hull_distance(&cols, &p)?.distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::{build_cycle, extremal_contextual, extremal_noncontextual};
    use crate::lp::DEFAULT_EPS_LP;

    fn cycle(b: usize) -> Arc<Scenario> {
        Arc::new(build_cycle(b).unwrap())
    }

    #[test]
    fn strategy_counts() {
        assert_eq!(enumerate_strategies(&cycle(4), 1 << 20).unwrap().len(), 16);
        assert_eq!(enumerate_strategies(&cycle(5), 1 << 20).unwrap().len(), 32);
        let single = Scenario::from_lists(1, 3, &[vec![0]], &[vec![0, 1, 2]]).unwrap();
        let st = enumerate_strategies(&single, 1 << 20).unwrap();
        assert_eq!(st.len(), 3);
        assert_eq!(
            enumerate_strategies(&cycle(4), 15),
            Err(NcError::CapExceeded { cap: 15 })
        );
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let st = enumerate_strategies(&cycle(3), 1 << 20).unwrap();
        assert_eq!(st[0].choice(), &[0, 2, 4]);
        assert_eq!(st[1].choice(), &[0, 2, 5]);
        assert_eq!(st[7].choice(), &[1, 3, 5]);
        assert!(st.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn all_first_lights_matches_zero_zeta() {
        let s = cycle(4);
        let d = DeterministicStrategy::new(&s, vec![0, 2, 4, 6]).unwrap();
        let zeta = extremal_noncontextual(4, &"0000".parse().unwrap()).unwrap();
        assert_eq!(&strategy_behavior(&s, &d), zeta.behavior());
        let b = strategy_behavior(&s, &d);
        assert!(b.validate(0.0).ok);
        assert_eq!(b.is_nondisturbing(0.0).worst_deviation, 0.0);
    }

    #[test]
    fn degenerate_and_uniform_mixtures() {
        let s = cycle(4);
        let st = enumerate_strategies(&s, 1 << 20).unwrap();
        let first = mix(&s, &st[..2], &[1.0, 0.0]).unwrap();
        assert_eq!(first.behavior(), &strategy_behavior(&s, &st[0]));
        let uni = mix(&s, &st, &[1.0 / 16.0; 16]).unwrap();
        for row in uni.behavior().rows() {
            assert_eq!(row, &[0.25; 4]);
        }
        let half = mix(&s, &[st[0].clone(), st[15].clone()], &[0.5, 0.5]).unwrap();
        assert!(half
            .behavior()
            .rows()
            .iter()
            .flatten()
            .all(|&p| p == 0.0 || p == 0.5));
    }

    #[test]
    fn invalid_weights_rejected() {
        let s = cycle(3);
        let st = enumerate_strategies(&s, 1 << 20).unwrap();
        assert!(matches!(
            mix(&s, &st[..2], &[0.7, 0.7]),
            Err(NcError::Invalid(_))
        ));
        assert!(matches!(
            mix(&s, &st[..2], &[1.5, -0.5]),
            Err(NcError::Invalid(_))
        ));
        let dup = NcBox::new_unchecked(
            s.clone(),
            vec![st[0].clone(), st[0].clone()],
            vec![0.5, 0.5],
        );
        assert!(dup.validate(1e-9).has(Rule::Strategy));
        assert!(DeterministicStrategy::new(&s, vec![0, 0, 4]).is_err());
    }

    #[test]
    fn pr_box_is_contextual_with_certificate() {
        let s = cycle(4);
        let pr = extremal_contextual(4, &"1000".parse().unwrap()).unwrap();
        let t = NcTester::new(s.clone()).unwrap();
        let v = t.test(pr.behavior(), DEFAULT_EPS_LP).unwrap();
        assert!(!v.noncontextual);
        assert!((v.distance - 0.125).abs() < 1e-9, "distance {}", v.distance);
        let NcCertificate::Inequality(ineq) = &v.certificate else {
            panic!("expected an inequality");
        };
        let cmax = ineq
            .coefficients
            .iter()
            .flat_map(|(_, c)| c.iter())
            .fold(0.0f64, |m, c| m.max(c.abs()));
        assert!((cmax - 1.0).abs() < 1e-12);
        assert!(ineq.gap > 0.0);
        for d in t.strategies() {
            assert!(ineq.evaluate_strategy(&s, d) <= ineq.beta + 1e-12);
        }
        assert!(ineq.evaluate(pr.behavior()) >= ineq.beta + ineq.gap - 1e-12);
    }

    #[test]
    fn mixtures_are_noncontextual_and_reconstructed() {
        let s = cycle(4);
        let t = NcTester::new(s.clone()).unwrap();
        let st = t.strategies().to_vec();
        let w = [0.1, 0.2, 0.3, 0.4];
        let bx = mix(
            &s,
            &[st[1].clone(), st[4].clone(), st[9].clone(), st[14].clone()],
            &w,
        )
        .unwrap();
        let v = t.test(bx.behavior(), DEFAULT_EPS_LP).unwrap();
        assert!(v.noncontextual);
        let again = v.witness(&t).unwrap().behavior();
        assert!(again.max_abs_diff(bx.behavior()).unwrap() <= 1e-8);
    }

    #[cfg(feature = "exact")]
    #[test]
    fn exact_distance_of_pr_box() {
        use num_bigint::BigInt;
        let s = cycle(4);
        let t = NcTester::new(s).unwrap();
        let pr = extremal_contextual(4, &"1000".parse().unwrap()).unwrap();
        let d = exact_distance(&t, pr.behavior()).unwrap();
        assert_eq!(
            d,
            num_rational::BigRational::new(BigInt::from(1), BigInt::from(8))
        );
    }
}
