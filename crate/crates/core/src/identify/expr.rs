use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::events::{Assignment, Intervention, Value};
use crate::graph::{Admg, VarId};

use super::{DiscreteDistribution, Probability, Term};

/// Symbolic probability expression over identified terms.
#[derive(Debug, Clone, PartialEq)]
pub enum SymbolicExpr {
    Constant(f64),
    Term(Term),
    Sum(Vec<SymbolicExpr>),
    Diff(Box<SymbolicExpr>, Box<SymbolicExpr>),
    Max(Vec<SymbolicExpr>),
    Min(Vec<SymbolicExpr>),
}

/// A term whose conditioning set has zero mass under the evaluated table.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("term under intervention {:?} conditions on a zero-probability event", .term.world)]
pub struct UndefinedTerm {
    pub term: Term,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenderFormat {
    #[default]
    Text,
    Latex,
}

impl SymbolicExpr {
    pub fn term(t: Term) -> Self {
        Self::Term(t)
    }

    pub fn diff(a: SymbolicExpr, b: SymbolicExpr) -> Self {
        Self::Diff(Box::new(a), Box::new(b))
    }

    pub fn evaluate<P: Probability>(
        &self,
        dist: &DiscreteDistribution<P>,
    ) -> Result<P, UndefinedTerm> {
        Ok(match self {
            Self::Constant(c) => P::from_f64(*c).expect("finite constant"),
            Self::Term(t) => t
                .evaluate(dist)
                .ok_or_else(|| UndefinedTerm { term: t.clone() })?,
            Self::Sum(xs) => {
                let mut total = P::zero();
                for x in xs {
                    total = total + x.evaluate(dist)?;
                }
                total
            }
            Self::Diff(a, b) => a.evaluate(dist)? - b.evaluate(dist)?,
            Self::Max(xs) => fold_best(xs, dist, |new, cur| new > cur)?,
            Self::Min(xs) => fold_best(xs, dist, |new, cur| new < cur)?,
        })
    }

    /// Every term appearing in the expression, left to right.
    pub fn terms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a Term>) {
        match self {
            Self::Constant(_) => {}
            Self::Term(t) => out.push(t),
            Self::Diff(a, b) => {
                a.collect_terms(out);
                b.collect_terms(out);
            }
            Self::Sum(xs) | Self::Max(xs) | Self::Min(xs) => {
                xs.iter().for_each(|x| x.collect_terms(out))
            }
        }
    }

    pub fn render(&self, g: &Admg, fmt: RenderFormat) -> String {
        let mut s = String::new();
        self.write(g, fmt, &mut s);
        s
    }

    fn write(&self, g: &Admg, fmt: RenderFormat, out: &mut String) {
        match self {
            Self::Constant(c) => {
                let _ = write!(out, "{c}");
            }
            Self::Term(t) => out.push_str(&render_term(g, t)),
            Self::Sum(xs) if xs.is_empty() => out.push('0'),
            Self::Sum(xs) => {
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(" + ");
                    }
                    x.write(g, fmt, out);
                }
            }
            Self::Diff(a, b) => {
                a.write(g, fmt, out);
                out.push_str(" - ");
                let wrap = matches!(**b, Self::Sum(ref v) if v.len() > 1) || matches!(**b, Self::Diff(..));
                if wrap {
                    out.push('(');
                }
                b.write(g, fmt, out);
                if wrap {
                    out.push(')');
                }
            }
            Self::Max(xs) | Self::Min(xs) => {
                let op = if matches!(self, Self::Max(_)) { "max" } else { "min" };
                match fmt {
                    RenderFormat::Text => {
                        out.push_str(op);
                        out.push('{');
                        for (i, x) in xs.iter().enumerate() {
                            if i > 0 {
                                out.push_str(", ");
                            }
                            x.write(g, fmt, out);
                        }
                        out.push('}');
                    }
                    RenderFormat::Latex => {
                        let _ = write!(out, "\\{op}\\begin{{cases}} ");
                        for (i, x) in xs.iter().enumerate() {
                            if i > 0 {
                                out.push_str(" \\\\ ");
                            }
                            x.write(g, fmt, out);
                        }
                        out.push_str(" \\end{cases}");
                    }
                }
            }
        }
    }

    /// Sum of terms with integer coefficients plus a constant, when the
    /// expression is linear (no max/min).
    pub fn linear_form(&self) -> Option<LinearForm> {
        let mut lf = LinearForm::default();
        self.accumulate(1, &mut lf)?;
        lf.terms.retain(|_, c| *c != 0);
        Some(lf)
    }

    fn accumulate(&self, sign: i64, lf: &mut LinearForm) -> Option<()> {
        match self {
            Self::Constant(c) => lf.constant += sign as f64 * c,
            Self::Term(t) => {
                *lf.terms.entry(TermKey::of(t)).or_insert(0) += sign;
            }
            Self::Sum(xs) => {
                for x in xs {
                    x.accumulate(sign, lf)?;
                }
            }
            Self::Diff(a, b) => {
                a.accumulate(sign, lf)?;
                b.accumulate(-sign, lf)?;
            }
            Self::Max(_) | Self::Min(_) => return None,
        }
        Some(())
    }
}

fn fold_best<P: Probability>(
    xs: &[SymbolicExpr],
    dist: &DiscreteDistribution<P>,
    better: impl Fn(&P, &P) -> bool,
) -> Result<P, UndefinedTerm> {
    let mut best: Option<P> = None;
    for x in xs {
        let v = x.evaluate(dist)?;
        if best.as_ref().is_none_or(|b| better(&v, b)) {
            best = Some(v);
        }
    }
    Ok(best.expect("max/min over a nonempty list"))
}

/// Identity of a term up to the display order of its outcomes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub world: Intervention,
    pub event: Assignment,
}

impl TermKey {
    pub fn of(t: &Term) -> Self {
        Self {
            world: t.world.clone(),
            event: t.event_assignment(),
        }
    }
}

/// `constant + Σ coef · term`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearForm {
    pub constant: f64,
    pub terms: BTreeMap<TermKey, i64>,
}

impl LinearForm {
    /// Whether `self - other` is a nonnegative combination of terms plus a
    /// nonnegative constant, so `self >= other` on every distribution.
    pub fn dominates(&self, other: &LinearForm) -> bool {
        if self.constant < other.constant {
            return false;
        }
        let keys = self.terms.keys().chain(other.terms.keys());
        for k in keys {
            let a = self.terms.get(k).copied().unwrap_or(0);
            let b = other.terms.get(k).copied().unwrap_or(0);
            if a < b {
                return false;
            }
        }
        true
    }
}

pub(crate) fn value_literal(g: &Admg, v: VarId, x: Value) -> String {
    let name = g.name(v).to_lowercase();
    if g.cardinality(v) == 2 {
        if x == 1 {
            name
        } else {
            format!("\\bar {name}")
        }
    } else {
        format!("{name}_{{{}}}", g.label(v, x))
    }
}

/// `P_{z}(a, y)`; the observational world prints as `P(a, y)`.
pub fn render_term(g: &Admg, t: &Term) -> String {
    let ev: Vec<String> = t.event.iter().map(|&(v, x)| value_literal(g, v, x)).collect();
    if t.world.is_empty() {
        format!("P({})", ev.join(", "))
    } else {
        let w: Vec<String> = t.world.iter().map(|(v, x)| value_literal(g, v, x)).collect();
        format!("P_{{{}}}({})", w.join(", "), ev.join(", "))
    }
}

/// Greedily merges full or partial outcomes over `vars` into fewer partial
/// outcomes: any group that agrees everywhere except on one variable and
/// covers that variable's whole domain collapses to a single assignment
/// without it. The union of the results covers exactly the same cells.
pub fn compress_outcomes(g: &Admg, outcomes: &[Assignment]) -> Vec<Assignment> {
    let mut current: Vec<Assignment> = outcomes.to_vec();
    current.sort();
    current.dedup();
    loop {
        let mut merged = false;
        let vars: Vec<VarId> = {
            let mut vs: Vec<VarId> = current.iter().flat_map(|a| a.vars()).collect();
            vs.sort();
            vs.dedup();
            vs.into_iter().rev().collect()
        };
        for v in vars {
            let card = g.cardinality(v);
            let mut groups: BTreeMap<Assignment, Vec<Value>> = BTreeMap::new();
            for a in current.iter().filter(|a| a.contains(v)) {
                let mut rest = a.clone();
                let x = rest.remove(v).expect("filtered");
                groups.entry(rest).or_default().push(x);
            }
            let full: Vec<Assignment> = groups
                .into_iter()
                .filter(|(_, xs)| xs.len() == card)
                .map(|(rest, _)| rest)
                .collect();
            if full.is_empty() {
                continue;
            }
            current.retain(|a| {
                let mut rest = a.clone();
                rest.remove(v).is_none() || !full.contains(&rest)
            });
            current.extend(full);
            current.sort();
            current.dedup();
            merged = true;
            break;
        }
        if !merged {
            return current;
        }
    }
}
