//! Identification of interventional probabilities and the symbolic
//! expressions the bounds are written in.
//!
//! The backend is truncated factorization: `P_c(e)` is identified when no
//! intervened variable has a bidirected edge, and then
//!
//! ```text
//! P_c(e) = sum_W P(e, W, c) / prod_{X in c} P(x | pa(X))
//! ```
//!
//! where `W` collects the parents of intervened variables that are neither
//! in `e` nor intervened. A parentless intervention set reduces to `P(e | c)`.
//!
//! `P_z(·)` for a covariate model therefore means the marginalized truncated
//! factorization, so `P_z(a, c, y) = P(a, c, y, z) / P(z | c)`.

mod distribution;
mod expr;
mod json;

pub use distribution::{DiscreteDistribution, Probability};
pub use expr::{
    compress_outcomes, render_term, LinearForm, RenderFormat, SymbolicExpr, TermKey, UndefinedTerm,
};
pub use json::{expr_from_json, expr_to_json, EXPR_JSON_VERSION};
pub(crate) use expr::value_literal;

use crate::error::{Error, Result};
use crate::events::{product, Assignment, Intervention, Value};
use crate::graph::{Admg, VarId};

/// True when every intervened variable is free of bidirected edges.
pub fn can_identify(g: &Admg, world: &Intervention) -> bool {
    world.vars().all(|v| g.spouses(v).next().is_none())
}

/// The observational formula for one interventional term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Identification {
    /// Variables summed out (parents of intervened variables not otherwise fixed).
    pub summed: Vec<VarId>,
    /// Each intervened variable with its parents; one `P(x | pa(x))` factor each.
    pub factors: Vec<(VarId, Vec<VarId>)>,
    /// All intervened variables are parentless, so the term is `P(e | c)`.
    pub conditional_form: bool,
}

/// `P_c(e)` for an identified intervention `c`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub world: Intervention,
    /// Outcome values in display order.
    pub event: Vec<(VarId, Value)>,
    pub identification: Identification,
}

impl Term {
    pub fn new(g: &Admg, world: Intervention, event: Vec<(VarId, Value)>) -> Result<Self> {
        let assignment: Assignment = event.iter().copied().collect();
        if assignment.len() != event.len() {
            return Err(Error::InvalidEvent("term lists a variable twice".into()));
        }
        crate::events::SingleWorldEvent::new(world.clone(), assignment).validate(g)?;
        let identification = g_formula(g, &world, &event)?;
        Ok(Self {
            world,
            event,
            identification,
        })
    }

    pub fn event_assignment(&self) -> Assignment {
        self.event.iter().copied().collect()
    }

    /// Value of the term; `None` on a zero-mass conditioning set.
    pub fn evaluate<P: Probability>(&self, dist: &DiscreteDistribution<P>) -> Option<P> {
        let base = self
            .event_assignment()
            .merge(&self.world)
            .expect("event and world are disjoint");
        let id = &self.identification;
        if id.conditional_form {
            let den = dist.prob(&self.world);
            if den == P::zero() {
                return None;
            }
            return Some(dist.prob(&base) / den);
        }
        let cards: Vec<usize> = id
            .summed
            .iter()
            .map(|v| dist.variables()[v.0].cardinality())
            .collect();
        let mut total = P::zero();
        for combo in product(&cards) {
            let mut full = base.clone();
            for (&v, &x) in id.summed.iter().zip(&combo) {
                full.insert(v, x);
            }
            let mut den = P::one();
            for (x, parents) in &id.factors {
                let pa = full.restrict(parents);
                let p_pa = dist.prob(&pa);
                let p_joint = dist.prob(&full.restrict(&[parents.as_slice(), &[*x]].concat()));
                if p_pa == P::zero() || p_joint == P::zero() {
                    return None;
                }
                den = den * (p_joint / p_pa);
            }
            total = total + dist.prob(&full) / den;
        }
        Some(total)
    }
}

/// Truncated-factorization identification of `P_c(event)`.
pub fn g_formula(
    g: &Admg,
    world: &Intervention,
    event: &[(VarId, Value)],
) -> Result<Identification> {
    for v in world.vars() {
        if let Some(s) = g.spouses(v).next() {
            return Err(Error::NotIdentified {
                var: g.name(v).to_string(),
                edge: format!("{} <-> {}", g.name(v), g.name(s)),
            });
        }
    }
    let mut factors = Vec::new();
    let mut summed = Vec::new();
    for x in world.vars() {
        let parents: Vec<VarId> = g.parents(x).collect();
        for &p in &parents {
            let fixed = world.contains(p) || event.iter().any(|&(v, _)| v == p);
            if !fixed && !summed.contains(&p) {
                summed.push(p);
            }
        }
        factors.push((x, parents));
    }
    summed.sort();
    let conditional_form = factors.iter().all(|(_, pa)| pa.is_empty());
    Ok(Identification {
        summed,
        factors,
        conditional_form,
    })
}

/// Observational formula of a term in plain notation, e.g.
/// `sum_{c} P(a, c, y, z) / P(z | c)`.
pub fn render_identification(g: &Admg, t: &Term) -> String {
    let lit = |v: VarId, x: Option<Value>| match x {
        Some(x) => expr::value_literal(g, v, x),
        None => g.name(v).to_lowercase(),
    };
    let base = t.event_assignment().merge(&t.world).expect("disjoint");
    let id = &t.identification;
    if id.conditional_form {
        let lhs: Vec<String> = t.event.iter().map(|&(v, x)| lit(v, Some(x))).collect();
        let rhs: Vec<String> = t.world.iter().map(|(v, x)| lit(v, Some(x))).collect();
        if rhs.is_empty() {
            return format!("P({})", lhs.join(", "));
        }
        return format!("P({} | {})", lhs.join(", "), rhs.join(", "));
    }
    let mut num_vars: Vec<VarId> = base.vars().chain(id.summed.iter().copied()).collect();
    num_vars.sort();
    let num: Vec<String> = num_vars.iter().map(|&v| lit(v, base.get(v))).collect();
    let dens: Vec<String> = id
        .factors
        .iter()
        .map(|(x, pa)| {
            let given: Vec<String> = pa.iter().map(|&p| lit(p, base.get(p))).collect();
            if given.is_empty() {
                format!("P({})", lit(*x, base.get(*x)))
            } else {
                format!("P({} | {})", lit(*x, base.get(*x)), given.join(", "))
            }
        })
        .collect();
    let body = format!("P({}) / {}", num.join(", "), dens.join(" "));
    if id.summed.is_empty() {
        body
    } else {
        let s: Vec<String> = id.summed.iter().map(|&v| g.name(v).to_lowercase()).collect();
        format!("sum_{{{}}} {body}", s.join(", "))
    }
}
