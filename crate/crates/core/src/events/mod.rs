//! Counterfactual events: interventions, single-world events, cross-world
//! conjunctions, and propositional formulas over them.
//!
//! Values are indices into a variable's domain. Names and labels only appear
//! at the text boundary (see [`syntax`]).

mod algebra;
pub mod syntax;

pub(crate) use algebra::product;
pub use algebra::{EventAlgebra, DEFAULT_OUTCOME_CAP};
pub use syntax::{format_event, format_single, parse_event, parse_single};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Admg, VarId};

/// Index into a variable's domain.
pub type Value = usize;

/// A partial assignment of values to observed variables.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(BTreeMap<VarId, Value>);

/// An intervention `do(s)`; the empty assignment is the observational world.
pub type Intervention = Assignment;

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: VarId) -> Option<Value> {
        self.0.get(&v).copied()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.contains_key(&v)
    }

    pub fn insert(&mut self, v: VarId, value: Value) -> Option<Value> {
        self.0.insert(v, value)
    }

    pub fn remove(&mut self, v: VarId) -> Option<Value> {
        self.0.remove(&v)
    }

    pub fn with(mut self, v: VarId, value: Value) -> Self {
        self.0.insert(v, value);
        self
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, Value)> + '_ {
        self.0.iter().map(|(&k, &v)| (k, v))
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.keys().copied()
    }

    /// Restriction to the given variables.
    pub fn restrict(&self, vars: &[VarId]) -> Self {
        Self(
            self.0
                .iter()
                .filter(|(k, _)| vars.contains(k))
                .map(|(&k, &v)| (k, v))
                .collect(),
        )
    }

    /// Union of two assignments, `None` if they disagree on a shared variable.
    pub fn merge(&self, other: &Self) -> Option<Self> {
        let mut out = self.clone();
        for (k, v) in other.iter() {
            match out.0.insert(k, v) {
                Some(old) if old != v => return None,
                _ => {}
            }
        }
        Some(out)
    }

    /// Whether every entry of `self` also appears in `other`.
    pub fn is_sub_of(&self, other: &Self) -> bool {
        self.iter().all(|(k, v)| other.get(k) == Some(v))
    }

    pub fn agrees_with(&self, other: &Self) -> bool {
        self.iter().all(|(k, v)| other.get(k).is_none_or(|w| w == v))
    }

    fn validate(&self, g: &Admg, what: &str) -> Result<()> {
        for (k, v) in self.iter() {
            if k.0 >= g.len() {
                return Err(Error::InvalidEvent(format!("{what} mentions unknown variable {k}")));
            }
            if v >= g.cardinality(k) {
                return Err(Error::InvalidEvent(format!(
                    "{what} assigns out-of-domain value {v} to `{}`",
                    g.name(k)
                )));
            }
        }
        Ok(())
    }
}

impl FromIterator<(VarId, Value)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (VarId, Value)>>(iter: T) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// `X(a) = x`: outcomes `x` in the world where `a` is set by intervention.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SingleWorldEvent {
    pub world: Intervention,
    pub outcome: Assignment,
}

impl SingleWorldEvent {
    pub fn new(world: Intervention, outcome: Assignment) -> Self {
        Self { world, outcome }
    }

    /// Checks domains and that no outcome variable is also intervened on.
    pub fn validate(&self, g: &Admg) -> Result<()> {
        self.world.validate(g, "intervention")?;
        self.outcome.validate(g, "outcome")?;
        if let Some(v) = self.outcome.vars().find(|v| self.world.contains(*v)) {
            return Err(Error::InvalidEvent(format!(
                "`{}` is both intervened on and observed in the same world",
                g.name(v)
            )));
        }
        Ok(())
    }

    pub fn with_outcome(&self, v: VarId, value: Value) -> Self {
        Self {
            world: self.world.clone(),
            outcome: self.outcome.clone().with(v, value),
        }
    }

    /// World and outcome together, as one assignment.
    pub fn context(&self) -> Assignment {
        self.world
            .merge(&self.outcome)
            .expect("outcome and world are disjoint")
    }
}

/// A conjunction of single-world events, at most one per world.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CounterfactualEvent {
    conjuncts: BTreeMap<Intervention, Assignment>,
}

impl CounterfactualEvent {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(e: SingleWorldEvent) -> Self {
        let mut c = Self::new();
        c.conjuncts.insert(e.world, e.outcome);
        c
    }

    /// Builds the conjunction; `None` when two conjuncts in the same world
    /// assign different values to a variable.
    pub fn from_conjuncts(items: impl IntoIterator<Item = SingleWorldEvent>) -> Option<Self> {
        let mut c = Self::new();
        for e in items {
            c = c.and_single(&e)?;
        }
        Some(c)
    }

    pub fn and_single(&self, e: &SingleWorldEvent) -> Option<Self> {
        let mut out = self.clone();
        let merged = match out.conjuncts.get(&e.world) {
            Some(o) => o.merge(&e.outcome)?,
            None => e.outcome.clone(),
        };
        out.conjuncts.insert(e.world.clone(), merged);
        Some(out)
    }

    pub fn and(&self, other: &Self) -> Option<Self> {
        other.conjuncts().try_fold(self.clone(), |acc, e| acc.and_single(&e))
    }

    pub fn conjuncts(&self) -> impl Iterator<Item = SingleWorldEvent> + '_ {
        self.conjuncts
            .iter()
            .map(|(w, o)| SingleWorldEvent::new(w.clone(), o.clone()))
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    pub fn outcome_in(&self, world: &Intervention) -> Option<&Assignment> {
        self.conjuncts.get(world)
    }

    pub fn validate(&self, g: &Admg) -> Result<()> {
        self.conjuncts().try_for_each(|e| e.validate(g))
    }
}

impl From<SingleWorldEvent> for CounterfactualEvent {
    fn from(e: SingleWorldEvent) -> Self {
        Self::single(e)
    }
}

/// All full assignments to the observed non-intervened variables under one
/// intervention, in lexicographic order (last variable fastest).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSpace {
    pub world: Intervention,
    pub vars: Vec<VarId>,
    pub outcomes: Vec<Assignment>,
}

impl OutcomeSpace {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Propositional formula over counterfactual events; needed for the
/// quantified pieces of the target partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CfFormula {
    True,
    False,
    Event(CounterfactualEvent),
    Not(Box<CfFormula>),
    And(Vec<CfFormula>),
    Or(Vec<CfFormula>),
}

impl CfFormula {
    pub fn event(e: impl Into<CounterfactualEvent>) -> Self {
        Self::Event(e.into())
    }

    pub fn not(f: CfFormula) -> Self {
        Self::Not(Box::new(f))
    }

    /// Evaluates the formula given a truth oracle for single-world events.
    pub fn eval_with(&self, holds: &mut impl FnMut(&SingleWorldEvent) -> bool) -> bool {
        match self {
            Self::True => true,
            Self::False => false,
            Self::Event(e) => e.conjuncts().all(|c| holds(&c)),
            Self::Not(f) => !f.eval_with(holds),
            Self::And(fs) => fs.iter().all(|f| f.eval_with(holds)),
            Self::Or(fs) => fs.iter().any(|f| f.eval_with(holds)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(pairs: &[(usize, usize)]) -> Assignment {
        pairs.iter().map(|&(k, v)| (VarId(k), v)).collect()
    }

    #[test]
    fn merge_conflicts() {
        assert_eq!(a(&[(0, 1)]).merge(&a(&[(1, 0)])), Some(a(&[(0, 1), (1, 0)])));
        assert_eq!(a(&[(0, 1)]).merge(&a(&[(0, 0)])), None);
        assert!(a(&[(0, 1)]).is_sub_of(&a(&[(0, 1), (2, 0)])));
        assert!(!a(&[(0, 1)]).is_sub_of(&a(&[(2, 0)])));
    }

    #[test]
    fn conjuncts_in_same_world_merge() {
        let w = a(&[(0, 1)]);
        let e = CounterfactualEvent::from_conjuncts([
            SingleWorldEvent::new(w.clone(), a(&[(1, 1)])),
            SingleWorldEvent::new(w.clone(), a(&[(2, 0)])),
        ])
        .unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.outcome_in(&w), Some(&a(&[(1, 1), (2, 0)])));

        let clash = CounterfactualEvent::from_conjuncts([
            SingleWorldEvent::new(w.clone(), a(&[(1, 1)])),
            SingleWorldEvent::new(w, a(&[(1, 0)])),
        ]);
        assert!(clash.is_none());
    }

    #[test]
    fn formula_eval() {
        let e = SingleWorldEvent::new(a(&[]), a(&[(0, 1)]));
        let f = CfFormula::And(vec![
            CfFormula::event(e.clone()),
            CfFormula::not(CfFormula::False),
            CfFormula::Or(vec![CfFormula::False, CfFormula::True]),
        ]);
        assert!(f.eval_with(&mut |x| x == &e));
        assert!(!f.eval_with(&mut |_| false));
    }
}
