use std::collections::HashMap;

use parking_lot::Mutex;

use super::{Assignment, CounterfactualEvent, Intervention, OutcomeSpace, SingleWorldEvent, Value};
use crate::error::{Error, Result};
use crate::graph::{is_relevant_given, relevant_context_subset, Admg, VarId};

pub const DEFAULT_OUTCOME_CAP: u128 = 1_000_000;

/// Graph-aware reasoning about counterfactual events.
///
/// Contradiction results are memoized per instance; the cache is shared
/// safely across threads and never locked while recursing.
pub struct EventAlgebra<'g> {
    g: &'g Admg,
    outcome_cap: u128,
    memo: Mutex<HashMap<(SingleWorldEvent, SingleWorldEvent), bool>>,
}

impl<'g> EventAlgebra<'g> {
    pub fn new(g: &'g Admg) -> Self {
        Self {
            g,
            outcome_cap: DEFAULT_OUTCOME_CAP,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_outcome_cap(mut self, cap: u128) -> Self {
        self.outcome_cap = cap;
        self
    }

    pub fn graph(&self) -> &'g Admg {
        self.g
    }

    /// Values of the intervened variables relevant to `v` under `world`.
    pub fn label_of(&self, v: VarId, world: &Intervention) -> Assignment {
        let keys: Vec<VarId> = world.vars().collect();
        world.restrict(&relevant_context_subset(self.g, v, &keys))
    }

    /// Drops intervened variables that cannot affect any outcome variable.
    pub fn minimal_label(&self, e: &SingleWorldEvent) -> SingleWorldEvent {
        let keys: Vec<VarId> = e.world.vars().collect();
        let mut keep = Vec::new();
        for v in e.outcome.vars() {
            keep.extend(relevant_context_subset(self.g, v, &keys));
        }
        SingleWorldEvent::new(e.world.restrict(&keep), e.outcome.clone())
    }

    /// Recursive graphical contradiction test between two single-world
    /// events.
    pub fn contradicts(&self, e1: &SingleWorldEvent, e2: &SingleWorldEvent) -> bool {
        let key = if e1 <= e2 {
            (e1.clone(), e2.clone())
        } else {
            (e2.clone(), e1.clone())
        };
        if let Some(&hit) = self.memo.lock().get(&key) {
            return hit;
        }
        let result = self.contradicts_uncached(&key.0, &key.1);
        self.memo.lock().insert(key, result);
        result
    }

    /// True when some pair of conjuncts contradicts.
    pub fn contradicts_events(&self, e: &CounterfactualEvent, f: &CounterfactualEvent) -> bool {
        e.conjuncts()
            .any(|a| f.conjuncts().any(|b| self.contradicts(&a, &b)))
    }

    pub fn contradicts_mixed(&self, e: &SingleWorldEvent, f: &CounterfactualEvent) -> bool {
        f.conjuncts().any(|b| self.contradicts(e, &b))
    }

    fn contradicts_uncached(&self, e1: &SingleWorldEvent, e2: &SingleWorldEvent) -> bool {
        let ctx1 = e1.context();
        let ctx2 = e2.context();
        e1.outcome.iter().any(|(z, v1)| match e2.outcome.get(z) {
            Some(v2) if v2 != v1 => self.witness(e1, e2, z, &ctx1, &ctx2),
            _ => false,
        })
    }

    /// Checks conditions (i)-(iii) for a variable `z` observed with different
    /// values in the two events.
    fn witness(
        &self,
        e1: &SingleWorldEvent,
        e2: &SingleWorldEvent,
        z: VarId,
        ctx1: &Assignment,
        ctx2: &Assignment,
    ) -> bool {
        let set1: Vec<VarId> = ctx1.vars().filter(|&v| v != z).collect();
        let set2: Vec<VarId> = ctx2.vars().filter(|&v| v != z).collect();
        let r1 = relevant_context_subset(self.g, z, &set1);
        let r2 = relevant_context_subset(self.g, z, &set2);

        for &v in r1.iter().filter(|v| r2.contains(v)) {
            if ctx1.get(v) != ctx2.get(v) {
                return false;
            }
        }
        self.side_condition(e1, e2, z, &r1, ctx1, &set2)
            && self.side_condition(e2, e1, z, &r2, ctx2, &set1)
    }

    /// For every `c` relevant to `z` in `ours` but absent from `theirs` and
    /// still relevant given it, `ours` must contradict `theirs` extended with
    /// each alternative value of `c`.
    fn side_condition(
        &self,
        ours: &SingleWorldEvent,
        theirs: &SingleWorldEvent,
        z: VarId,
        relevant: &[VarId],
        ctx: &Assignment,
        their_set: &[VarId],
    ) -> bool {
        for &c in relevant {
            if their_set.contains(&c) || !is_relevant_given(self.g, c, z, their_set) {
                continue;
            }
            let value = ctx.get(c).expect("relevant variables come from the context");
            for alt in (0..self.g.cardinality(c)).filter(|&alt| alt != value) {
                if !self.contradicts(ours, &theirs.with_outcome(c, alt)) {
                    return false;
                }
            }
        }
        true
    }

    /// Full outcomes under `world`, over every observed variable it does not
    /// fix, last variable varying fastest.
    pub fn enumerate_outcomes(&self, world: &Intervention) -> Result<OutcomeSpace> {
        let vars: Vec<VarId> = self.g.ids().filter(|v| !world.contains(*v)).collect();
        let cards: Vec<usize> = vars.iter().map(|&v| self.g.cardinality(v)).collect();
        let size = cards
            .iter()
            .try_fold(1u128, |acc, &c| acc.checked_mul(c as u128))
            .unwrap_or(u128::MAX);
        if size > self.outcome_cap {
            return Err(Error::OutcomeSpaceTooLarge {
                size,
                cap: self.outcome_cap,
            });
        }
        let outcomes = product(&cards)
            .map(|vals| vars.iter().copied().zip(vals).collect())
            .collect();
        Ok(OutcomeSpace {
            world: world.clone(),
            vars,
            outcomes,
        })
    }

    /// Full outcomes under `world` that contradict no conjunct of `e`.
    pub fn psi(&self, e: &CounterfactualEvent, world: &Intervention) -> Result<Vec<Assignment>> {
        let space = self.enumerate_outcomes(world)?;
        Ok(space
            .outcomes
            .into_iter()
            .filter(|o| {
                let candidate = SingleWorldEvent::new(world.clone(), o.clone());
                !self.contradicts_mixed(&candidate, e)
            })
            .collect())
    }

    /// Sound but incomplete implication check.
    ///
    /// `V(c) = v` follows from a premise conjunct `o` under world `u` with
    /// `o[V] = v` whenever some `B` among the other observed variables of `o`
    /// makes the minimal label of `V` under `u ∪ B` equal its label under `c`:
    /// consistency gives `V(u) = V(u, b)`, and equal labels give
    /// `V(u, b) = V(c)`.
    pub fn cross_world_implies(
        &self,
        premise: &CounterfactualEvent,
        conclusion: &SingleWorldEvent,
    ) -> bool {
        conclusion
            .outcome
            .iter()
            .all(|(v, value)| self.implies_value(premise, &conclusion.world, v, value))
    }

    fn implies_value(
        &self,
        premise: &CounterfactualEvent,
        world: &Intervention,
        v: VarId,
        value: Value,
    ) -> bool {
        let target = self.label_of(v, world);
        premise.conjuncts().any(|p| {
            if p.outcome.get(v) != Some(value) {
                return false;
            }
            let others: Vec<(VarId, Value)> = p.outcome.iter().filter(|&(k, _)| k != v).collect();
            (0u64..1 << others.len()).any(|mask| {
                let mut w = p.world.clone();
                for (i, &(k, x)) in others.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        w.insert(k, x);
                    }
                }
                self.label_of(v, &w) == target
            })
        })
    }
}

/// Mixed-radix counter over `cards`, last position fastest.
pub(crate) fn product(cards: &[usize]) -> impl Iterator<Item = Vec<usize>> + use<> {
    let cards = cards.to_vec();
    let total: usize = cards.iter().product();
    (0..total).map(move |mut idx| {
        let mut out = vec![0; cards.len()];
        for (slot, &c) in out.iter_mut().zip(&cards).rev() {
            *slot = idx % c;
            idx /= c;
        }
        out
    })
}
