use rayon::prelude::*;

use crate::error::Result;
use crate::events::{product, Assignment, EventAlgebra, Intervention, SingleWorldEvent};
use crate::graph::{Admg, VarId};
use crate::identify::{compress_outcomes, LinearForm, SymbolicExpr, Term};

/// Above this many candidate events per side the enumeration is truncated.
pub const CANDIDATE_CAP: usize = 100_000;

/// Which conjunct of `γ` a candidate refines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Lives in world `z_1` and entails `A = a_k`.
    E1,
    /// Lives in world `z_j` and entails `A = a_1 ∧ Y = y`.
    E2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PruneReason {
    /// Contradicts the other conjunct, so its bound is never positive.
    Incompatible,
    /// Everything outside the other conjunct is compatible with it; the bare
    /// candidate on the opposite side does at least as well.
    BoundIrrelevant,
    /// A coarser candidate has the same compatible outcomes and more mass.
    SameCompatibility(SingleWorldEvent),
    /// Same linear form as an earlier branch.
    Duplicate,
    /// Another branch exceeds it term by term.
    Dominated,
}

/// `P(E) - P(ψ_w(E) ∧ ¬R)` for a candidate `E` and a requirement `R` in world `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossWorldBound {
    pub expr: SymbolicExpr,
    /// Full outcomes in the requirement's world that do not contradict `E`.
    pub compatible: Vec<Assignment>,
    /// The part of `compatible` where the requirement fails.
    pub subtracted: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRecord {
    pub side: Side,
    pub event: SingleWorldEvent,
    pub bound: CrossWorldBound,
    pub pruned: Option<PruneReason>,
}

impl CandidateRecord {
    pub fn is_kept(&self) -> bool {
        self.pruned.is_none()
    }
}

/// `P_w(a)` as an expression; the empty event has probability one.
pub(crate) fn term_expr(g: &Admg, world: &Intervention, a: &Assignment) -> Result<SymbolicExpr> {
    if a.is_empty() {
        return Ok(SymbolicExpr::Constant(1.0));
    }
    Ok(SymbolicExpr::Term(Term::new(g, world.clone(), a.iter().collect())?))
}

/// Sum of identified terms covering exactly `cells`, merged where possible.
pub(crate) fn cells_expr(g: &Admg, world: &Intervention, cells: &[Assignment]) -> Result<Vec<SymbolicExpr>> {
    compress_outcomes(g, cells)
        .iter()
        .map(|a| term_expr(g, world, a))
        .collect()
}

pub fn cross_world_lower_bound(
    alg: &EventAlgebra,
    candidate: &SingleWorldEvent,
    requirement: &SingleWorldEvent,
) -> Result<CrossWorldBound> {
    let g = alg.graph();
    let compatible = alg.psi(&candidate.clone().into(), &requirement.world)?;
    let subtracted: Vec<Assignment> = compatible
        .iter()
        .filter(|o| !requirement.outcome.is_sub_of(o))
        .cloned()
        .collect();
    let positive = term_expr(g, &candidate.world, &candidate.outcome)?;
    let mut negative = cells_expr(g, &requirement.world, &subtracted)?;
    let expr = match negative.len() {
        0 => positive,
        1 => SymbolicExpr::diff(positive, negative.pop().expect("one term")),
        _ => SymbolicExpr::diff(positive, SymbolicExpr::Sum(negative)),
    };
    Ok(CrossWorldBound {
        expr,
        compatible,
        subtracted,
    })
}

/// Partial assignments in `world` that extend `required`, smallest first,
/// then by variable order, then by value.
pub(crate) fn entailing_events(
    g: &Admg,
    world: &Intervention,
    required: &Assignment,
) -> Vec<SingleWorldEvent> {
    let free: Vec<VarId> = g
        .ids()
        .filter(|&v| !world.contains(v) && !required.contains(v))
        .collect();
    let mut subsets: Vec<Vec<usize>> = (0u64..1 << free.len())
        .map(|mask| (0..free.len()).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    subsets.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let mut out = Vec::new();
    'outer: for subset in subsets {
        let vars: Vec<VarId> = subset.iter().map(|&i| free[i]).collect();
        let cards: Vec<usize> = vars.iter().map(|&v| g.cardinality(v)).collect();
        for values in product(&cards) {
            if out.len() == CANDIDATE_CAP {
                log::warn!("candidate enumeration truncated at {CANDIDATE_CAP} events");
                break 'outer;
            }
            let mut a = required.clone();
            for (&v, x) in vars.iter().zip(values) {
                a.insert(v, x);
            }
            out.push(SingleWorldEvent::new(world.clone(), a));
        }
    }
    out
}

/// Candidates for both sides of `γ = left ∧ right`, with bounds and, when
/// `pruning` is on, the reason each dropped candidate was dropped.
pub(crate) fn evaluate_candidates(
    alg: &EventAlgebra,
    left: &SingleWorldEvent,
    right: &SingleWorldEvent,
    pruning: bool,
) -> Result<Vec<CandidateRecord>> {
    let g = alg.graph();
    let mut jobs: Vec<(Side, SingleWorldEvent, &SingleWorldEvent)> = Vec::new();
    for e in entailing_events(g, &left.world, &left.outcome) {
        jobs.push((Side::E1, e, right));
    }
    for e in entailing_events(g, &right.world, &right.outcome) {
        jobs.push((Side::E2, e, left));
    }
    let mut records: Vec<CandidateRecord> = jobs
        .into_par_iter()
        .map(|(side, event, req)| {
            let bound = cross_world_lower_bound(alg, &event, req)?;
            Ok(CandidateRecord {
                side,
                event,
                bound,
                pruned: None,
            })
        })
        .collect::<Result<_>>()?;
    if !pruning {
        return Ok(records);
    }

    for r in &mut records {
        let req = if r.side == Side::E1 { right } else { left };
        if alg.contradicts(&r.event, req) {
            r.pruned = Some(PruneReason::Incompatible);
        }
    }

    // Bound irrelevance: the whole complement of the requirement is compatible.
    let complement_size = |req: &SingleWorldEvent| -> Result<usize> {
        let space = alg.enumerate_outcomes(&req.world)?;
        Ok(space
            .outcomes
            .iter()
            .filter(|o| !req.outcome.is_sub_of(o))
            .count())
    };
    let left_complement = complement_size(left)?;
    let right_complement = complement_size(right)?;
    for r in records.iter_mut().filter(|r| r.pruned.is_none()) {
        let bare_e2 = r.side == Side::E2 && r.event == *right;
        let complement = if r.side == Side::E1 { right_complement } else { left_complement };
        // every subtracted cell is a complement cell, so equal counts mean equal sets
        if !bare_e2 && r.bound.subtracted.len() == complement {
            r.pruned = Some(PruneReason::BoundIrrelevant);
        }
    }

    // Same compatibility as a coarser candidate on the same side.
    let snapshot: Vec<(Side, SingleWorldEvent, Vec<Assignment>)> = records
        .iter()
        .map(|r| (r.side, r.event.clone(), r.bound.compatible.clone()))
        .collect();
    for r in records.iter_mut().filter(|r| r.pruned.is_none()) {
        let coarser = snapshot.iter().find(|(side, e, compat)| {
            *side == r.side
                && e.outcome.len() < r.event.outcome.len()
                && e.outcome.is_sub_of(&r.event.outcome)
                && *compat == r.bound.compatible
        });
        if let Some((_, e, _)) = coarser {
            r.pruned = Some(PruneReason::SameCompatibility(e.clone()));
        }
    }
    Ok(records)
}

/// Marks kept records whose bound repeats or is dominated by another kept
/// bound (or by the zero branch). Records are scanned in order, so the
/// first of several equal forms survives.
pub(crate) fn drop_redundant_branches(records: &mut [&mut CandidateRecord]) {
    let forms: Vec<Option<LinearForm>> = records
        .iter()
        .map(|r| r.bound.expr.linear_form())
        .collect();
    let zero = LinearForm::default();
    let n = records.len();
    let mut keep: Vec<bool> = records.iter().map(|r| r.is_kept()).collect();
    for i in 0..n {
        if !keep[i] {
            continue;
        }
        let Some(fi) = &forms[i] else { continue };
        let dup = (0..i).any(|h| keep[h] && forms[h].as_ref() == Some(fi));
        if dup {
            keep[i] = false;
            records[i].pruned = Some(PruneReason::Duplicate);
            continue;
        }
        let dominated = zero.dominates(fi)
            || (0..n).any(|h| {
                h != i
                    && keep[h]
                    && forms[h]
                        .as_ref()
                        .is_some_and(|fh| fh != fi && fh.dominates(fi))
            });
        if dominated {
            keep[i] = false;
            records[i].pruned = Some(PruneReason::Dominated);
        }
    }
}
