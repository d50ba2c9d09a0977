//! Lower and upper bounds on `P(Y(a_1) = y)` from a generalized instrument.
//!
//! The target splits into a piece nothing can be said about, a piece whose
//! probability is identified in world `z_1`, and one family per other
//! treatment level `a_k`. Each family contains the events
//! `γ_j^k = A(z_1) = a_k ∧ A(z_j) = a_1 ∧ Y(z_j) = y`, and every candidate
//! event refining one of the two conjuncts gives a lower bound on `P(γ_j^k)`
//! in terms of identified single-world probabilities.
//!
//! Levels are ordered lexicographically by value index; `z_1` is the
//! all-zeros instrument setting and `a_1` is the target's treatment value.

mod candidates;
mod trace;

pub use candidates::{
    cross_world_lower_bound, CandidateRecord, CrossWorldBound, PruneReason, Side, CANDIDATE_CAP,
};
pub use trace::{render_single, DerivationTrace, FamilyTrace, WorldTrace};

use crate::error::{Error, Result};
use crate::events::{product, Assignment, CfFormula, CounterfactualEvent, EventAlgebra, Intervention, SingleWorldEvent};
use crate::graph::{is_generalized_instrument, Admg, VarId};
use crate::identify::{can_identify, SymbolicExpr};

use candidates::{drop_redundant_branches, evaluate_candidates, term_expr};

/// `Y(a_1) = y` together with an instrument `Z`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundQuery {
    pub target: SingleWorldEvent,
    pub instrument: Vec<VarId>,
}

impl BoundQuery {
    pub fn new(g: &Admg, target: SingleWorldEvent, instrument: Vec<VarId>) -> Result<Self> {
        target.validate(g)?;
        if target.outcome.is_empty() {
            return Err(Error::InvalidQuery("target has no outcome".into()));
        }
        if target.world.is_empty() {
            return Err(Error::InvalidQuery("target has no treatment".into()));
        }
        if instrument.is_empty() {
            return Err(Error::InvalidQuery("instrument set is empty".into()));
        }
        let mut instrument = instrument;
        instrument.sort();
        instrument.dedup();
        if let Some(&v) = instrument
            .iter()
            .find(|&&v| target.world.contains(v) || target.outcome.contains(v))
        {
            return Err(Error::OverlappingSets(format!(
                "instrument `{}` is also a treatment or outcome",
                g.name(v)
            )));
        }
        let a: Vec<VarId> = target.world.vars().collect();
        let y: Vec<VarId> = target.outcome.vars().collect();
        if !is_generalized_instrument(g, &instrument, &a, &y) {
            let names: Vec<&str> = instrument.iter().map(|&v| g.name(v)).collect();
            return Err(Error::InvalidQuery(format!(
                "{names:?} is not a generalized instrument for this target"
            )));
        }
        Ok(Self { target, instrument })
    }

    pub fn treatment(&self) -> Vec<VarId> {
        self.target.world.vars().collect()
    }

    pub fn outcome_vars(&self) -> Vec<VarId> {
        self.target.outcome.vars().collect()
    }

    /// Instrument levels `z_1, ..., z_M`.
    pub fn instrument_levels(&self, g: &Admg) -> Vec<Assignment> {
        levels(g, &self.instrument)
    }

    /// Treatment levels `a_1, ..., a_N` with the target's level first.
    pub fn treatment_levels(&self, g: &Admg) -> Vec<Assignment> {
        let a1 = self.target.world.clone();
        std::iter::once(a1.clone())
            .chain(levels(g, &self.treatment()).into_iter().filter(|a| *a != a1))
            .collect()
    }

    fn with_outcome(&self, outcome: Assignment) -> Self {
        Self {
            target: SingleWorldEvent::new(self.target.world.clone(), outcome),
            instrument: self.instrument.clone(),
        }
    }
}

/// All joint settings of `vars`, lexicographic with the last variable fastest.
pub fn levels(g: &Admg, vars: &[VarId]) -> Vec<Assignment> {
    let cards: Vec<usize> = vars.iter().map(|&v| g.cardinality(v)).collect();
    product(&cards)
        .map(|vals| vars.iter().copied().zip(vals).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceKind {
    Unboundable,
    Identified,
    GammaFamily(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionPiece {
    pub kind: PieceKind,
    pub formula: CfFormula,
}

pub fn partition_target(g: &Admg, q: &BoundQuery) -> Vec<PartitionPiece> {
    let zs = q.instrument_levels(g);
    let avals = q.treatment_levels(g);
    let a1 = &avals[0];
    let y = &q.target.outcome;
    let reach = |z: &Assignment| {
        let o = a1.merge(y).expect("treatment and outcome are disjoint");
        CfFormula::event(SingleWorldEvent::new(z.clone(), o))
    };

    let mut pieces = Vec::new();
    let mut never = vec![CfFormula::event(q.target.clone())];
    for z in &zs {
        never.push(CfFormula::not(CfFormula::event(SingleWorldEvent::new(
            z.clone(),
            a1.clone(),
        ))));
    }
    pieces.push(PartitionPiece {
        kind: PieceKind::Unboundable,
        formula: CfFormula::And(never),
    });
    pieces.push(PartitionPiece {
        kind: PieceKind::Identified,
        formula: reach(&zs[0]),
    });
    for (i, ak) in avals.iter().enumerate().skip(1) {
        pieces.push(PartitionPiece {
            kind: PieceKind::GammaFamily(i + 1),
            formula: CfFormula::And(vec![
                CfFormula::event(SingleWorldEvent::new(zs[0].clone(), ak.clone())),
                CfFormula::Or(zs.iter().map(reach).collect()),
            ]),
        });
    }
    pieces
}

/// The two conjuncts of `γ_j^k` (1-based indices).
pub fn gamma_conjuncts(
    g: &Admg,
    q: &BoundQuery,
    k: usize,
    j: usize,
) -> Result<(SingleWorldEvent, SingleWorldEvent)> {
    let zs = q.instrument_levels(g);
    let avals = q.treatment_levels(g);
    if !(2..=avals.len()).contains(&k) {
        return Err(Error::IndexOutOfRange(format!("k = {k} outside 2..={}", avals.len())));
    }
    if !(1..=zs.len()).contains(&j) {
        return Err(Error::IndexOutOfRange(format!("j = {j} outside 1..={}", zs.len())));
    }
    let left = SingleWorldEvent::new(zs[0].clone(), avals[k - 1].clone());
    let right = SingleWorldEvent::new(
        zs[j - 1].clone(),
        avals[0].merge(&q.target.outcome).expect("disjoint"),
    );
    Ok((left, right))
}

/// `γ_j^k`; `None` when both conjuncts share a world and clash.
pub fn gamma_event(g: &Admg, q: &BoundQuery, k: usize, j: usize) -> Result<Option<CounterfactualEvent>> {
    let (left, right) = gamma_conjuncts(g, q, k, j)?;
    Ok(CounterfactualEvent::from_conjuncts([left, right]))
}

/// Candidates surviving pruning on one side of `γ_j^k`.
pub fn candidate_events(
    g: &Admg,
    q: &BoundQuery,
    side: Side,
    k: usize,
    j: usize,
) -> Result<Vec<SingleWorldEvent>> {
    let (left, right) = gamma_conjuncts(g, q, k, j)?;
    if left.world == right.world {
        return Ok(Vec::new());
    }
    let alg = EventAlgebra::new(g);
    Ok(evaluate_candidates(&alg, &left, &right, true)?
        .into_iter()
        .filter(|r| r.side == side && r.is_kept())
        .map(|r| r.event)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundOptions {
    pub pruning: bool,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self { pruning: true }
    }
}

pub fn algorithm1(g: &Admg, q: &BoundQuery) -> Result<(SymbolicExpr, DerivationTrace)> {
    algorithm1_with(g, q, BoundOptions::default())
}

pub fn algorithm1_with(
    g: &Admg,
    q: &BoundQuery,
    opts: BoundOptions,
) -> Result<(SymbolicExpr, DerivationTrace)> {
    let alg = EventAlgebra::new(g);
    let zs = q.instrument_levels(g);
    let avals = q.treatment_levels(g);
    let identified_event = avals[0].merge(&q.target.outcome).expect("disjoint");
    let identified = term_expr(g, &zs[0], &identified_event)?;

    let mut families = Vec::new();
    let mut summands = vec![identified.clone()];
    for k in 2..=avals.len() {
        let mut worlds = Vec::new();
        for j in 1..=zs.len() {
            let (left, right) = gamma_conjuncts(g, q, k, j)?;
            let candidates = if left.world == right.world {
                Vec::new()
            } else {
                evaluate_candidates(&alg, &left, &right, opts.pruning)?
            };
            worlds.push(WorldTrace {
                j,
                left,
                right,
                candidates,
            });
        }
        if opts.pruning {
            let mut all: Vec<&mut CandidateRecord> =
                worlds.iter_mut().flat_map(|w| w.candidates.iter_mut()).collect();
            drop_redundant_branches(&mut all);
        }
        let mut branches = vec![SymbolicExpr::Constant(0.0)];
        branches.extend(
            worlds
                .iter()
                .flat_map(|w| w.candidates.iter())
                .filter(|r| r.is_kept())
                .map(|r| r.bound.expr.clone()),
        );
        summands.push(SymbolicExpr::Max(branches.clone()));
        families.push(FamilyTrace {
            k,
            level: avals[k - 1].clone(),
            worlds,
            branches,
        });
    }
    let trace = DerivationTrace {
        target: q.target.clone(),
        instrument: q.instrument.clone(),
        pieces: partition_target(g, q),
        identified,
        families,
    };
    Ok((SymbolicExpr::Sum(summands), trace))
}

fn other_outcomes(g: &Admg, target: &SingleWorldEvent) -> Vec<Assignment> {
    let y: Vec<VarId> = target.outcome.vars().collect();
    levels(g, &y)
        .into_iter()
        .filter(|o| *o != target.outcome)
        .collect()
}

fn one_minus(mut xs: Vec<SymbolicExpr>) -> SymbolicExpr {
    let one = SymbolicExpr::Constant(1.0);
    match xs.len() {
        0 => one,
        1 => SymbolicExpr::diff(one, xs.pop().expect("one")),
        _ => SymbolicExpr::diff(one, SymbolicExpr::Sum(xs)),
    }
}

/// `1 - Σ_{y' ≠ y} L(Y(a_1) = y')`.
pub fn upper_bound(g: &Admg, q: &BoundQuery) -> Result<SymbolicExpr> {
    let lows = other_outcomes(g, &q.target)
        .into_iter()
        .map(|o| algorithm1(g, &q.with_outcome(o)).map(|(e, _)| e))
        .collect::<Result<Vec<_>>>()?;
    Ok(one_minus(lows))
}

/// `[P(a, y), 1 - Σ_{y' ≠ y} P(a, y')]`, valid in any model.
pub fn trivial_bounds(g: &Admg, target: &SingleWorldEvent) -> Result<(SymbolicExpr, SymbolicExpr)> {
    subset_instrument_bounds(g, target, &[])
}

/// Bounds from intervening on the part `tilde` of the treatment only:
/// `[P_ã(y, â), 1 - Σ_{y' ≠ y} P_ã(y', â)]`.
pub fn subset_instrument_bounds(
    g: &Admg,
    target: &SingleWorldEvent,
    tilde: &[VarId],
) -> Result<(SymbolicExpr, SymbolicExpr)> {
    target.validate(g)?;
    if let Some(&v) = tilde.iter().find(|&&v| !target.world.contains(v)) {
        return Err(Error::InvalidQuery(format!(
            "`{}` is not one of the target's treatments",
            g.name(v)
        )));
    }
    let world: Intervention = target.world.restrict(tilde);
    if !can_identify(g, &world) {
        let v = world
            .vars()
            .find(|&v| g.spouses(v).next().is_some())
            .expect("some intervened variable is confounded");
        let s = g.spouses(v).next().expect("has a spouse");
        return Err(Error::NotIdentified {
            var: g.name(v).to_string(),
            edge: format!("{} <-> {}", g.name(v), g.name(s)),
        });
    }
    let hat_vars: Vec<VarId> = target.world.vars().filter(|v| !tilde.contains(v)).collect();
    let hat = target.world.restrict(&hat_vars);
    let cell = |o: &Assignment| hat.merge(o).expect("disjoint");
    let lower = term_expr(g, &world, &cell(&target.outcome))?;
    let others: Vec<Assignment> = other_outcomes(g, target).iter().map(cell).collect();
    let upper = one_minus(
        others
            .iter()
            .map(|o| term_expr(g, &world, o))
            .collect::<Result<_>>()?,
    );
    Ok((lower, upper))
}

/// Bounds on `P(y(a)) - P(y(ā))` for binary `A` and `Y`, with `a`, `y` the
/// second domain values.
pub fn ace_bounds(
    g: &Admg,
    treatment: VarId,
    outcome: VarId,
    instrument: &[VarId],
) -> Result<(SymbolicExpr, SymbolicExpr)> {
    for v in [treatment, outcome] {
        if g.cardinality(v) != 2 {
            return Err(Error::InvalidQuery(format!("`{}` must be binary", g.name(v))));
        }
    }
    let query = |a: usize| {
        BoundQuery::new(
            g,
            SingleWorldEvent::new(
                Assignment::new().with(treatment, a),
                Assignment::new().with(outcome, 1),
            ),
            instrument.to_vec(),
        )
    };
    let (treated, control) = (query(1)?, query(0)?);
    let l1 = algorithm1(g, &treated)?.0;
    let u1 = upper_bound(g, &treated)?;
    let l0 = algorithm1(g, &control)?.0;
    let u0 = upper_bound(g, &control)?;
    Ok((SymbolicExpr::diff(l1, u0), SymbolicExpr::diff(u1, l0)))
}

#[cfg(test)]
mod tests;
