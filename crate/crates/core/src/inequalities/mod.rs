//! Generalized instrumental inequalities.
//!
//! For triples `(z, a, y)` the events `A(z) = a ∧ Y(z) = y` can be summed:
//! no outcome of the latent state can make more than `Φ(S)` of them true at
//! once, where `Φ(S)` is the largest pairwise-compatible subset. Each choice
//! of `S` gives `Σ P_z(a, y) ≤ Φ(S)`.

mod clique;

use rayon::prelude::*;

use crate::bounds::levels;
use crate::error::{Error, Result};
use crate::events::{Assignment, EventAlgebra, SingleWorldEvent};
use crate::graph::{is_causally_irrelevant, Admg, VarId};
use crate::identify::{can_identify, DiscreteDistribution, RenderFormat, SymbolicExpr, Term, UndefinedTerm};

/// Stop enumerating candidate sets after this many.
pub const SUBSET_CAP: usize = 5_000_000;

/// Largest universe of triples the generator accepts.
pub const MAX_UNIVERSE: usize = 63;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub z: Assignment,
    pub a: Assignment,
    pub y: Assignment,
}

impl Triple {
    /// `A(z) = a ∧ Y(z) = y`.
    pub fn event(&self) -> SingleWorldEvent {
        let outcome = self.a.merge(&self.y).expect("treatment and outcome are disjoint");
        SingleWorldEvent::new(self.z.clone(), outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleSet {
    z_vars: Vec<VarId>,
    a_vars: Vec<VarId>,
    y_vars: Vec<VarId>,
    triples: Vec<Triple>,
}

fn sorted(vars: &[VarId]) -> Vec<VarId> {
    let mut v = vars.to_vec();
    v.sort();
    v.dedup();
    v
}

/// Checks the roles and returns them sorted.
fn check_roles(
    g: &Admg,
    z: &[VarId],
    a: &[VarId],
    y: &[VarId],
) -> Result<(Vec<VarId>, Vec<VarId>, Vec<VarId>)> {
    let (z, a, y) = (sorted(z), sorted(a), sorted(y));
    if z.is_empty() || a.is_empty() {
        return Err(Error::InvalidQuery("instrument and treatment sets must be nonempty".into()));
    }
    for (v, w) in [(&z, &a), (&z, &y), (&a, &y)] {
        if let Some(x) = v.iter().find(|x| w.contains(x)) {
            return Err(Error::OverlappingSets(format!("`{}` has two roles", g.name(*x))));
        }
    }
    if !is_causally_irrelevant(g, &z, &y, &a)? {
        return Err(Error::InvalidQuery(
            "the instrument reaches the outcome other than through the treatment".into(),
        ));
    }
    let world: Assignment = z.iter().map(|&v| (v, 0)).collect();
    if !can_identify(g, &world) {
        let v = z.iter().find(|&&v| g.spouses(v).next().is_some()).expect("confounded");
        let s = g.spouses(*v).next().expect("spouse");
        return Err(Error::NotIdentified {
            var: g.name(*v).to_string(),
            edge: format!("{} <-> {}", g.name(*v), g.name(s)),
        });
    }
    Ok((z, a, y))
}

impl TripleSet {
    /// Validates roles and domains; duplicates are removed and the triples
    /// sorted.
    pub fn new(
        g: &Admg,
        z: &[VarId],
        a: &[VarId],
        y: &[VarId],
        triples: impl IntoIterator<Item = Triple>,
    ) -> Result<Self> {
        let (z_vars, a_vars, y_vars) = check_roles(g, z, a, y)?;
        let mut triples: Vec<Triple> = triples.into_iter().collect();
        for t in &triples {
            for (part, vars) in [(&t.z, &z_vars), (&t.a, &a_vars), (&t.y, &y_vars)] {
                let assigned: Vec<VarId> = part.vars().collect();
                if assigned != *vars {
                    return Err(Error::InvalidQuery(
                        "triple does not assign exactly the role variables".into(),
                    ));
                }
                SingleWorldEvent::new(Assignment::new(), part.clone()).validate(g)?;
            }
        }
        triples.sort();
        triples.dedup();
        Ok(Self {
            z_vars,
            a_vars,
            y_vars,
            triples,
        })
    }

    /// Every triple over the three roles, instrument level slowest.
    pub fn universe(g: &Admg, z: &[VarId], a: &[VarId], y: &[VarId]) -> Result<Self> {
        let (zv, av, yv) = check_roles(g, z, a, y)?;
        let mut triples = Vec::new();
        for zl in levels(g, &zv) {
            for al in levels(g, &av) {
                for yl in levels(g, &yv) {
                    triples.push(Triple {
                        z: zl.clone(),
                        a: al.clone(),
                        y: yl,
                    });
                }
            }
        }
        Ok(Self {
            z_vars: zv,
            a_vars: av,
            y_vars: yv,
            triples,
        })
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn roles(&self) -> (&[VarId], &[VarId], &[VarId]) {
        (&self.z_vars, &self.a_vars, &self.y_vars)
    }

    fn subset(&self, mask: u64) -> Self {
        Self {
            triples: (0..self.triples.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| self.triples[i].clone())
                .collect(),
            ..self.clone()
        }
    }
}

/// Whether the two triples' events can hold together.
pub fn compatible(alg: &EventAlgebra, t: &Triple, u: &Triple) -> bool {
    t == u || !alg.contradicts(&t.event(), &u.event())
}

fn adjacency(alg: &EventAlgebra, triples: &[Triple]) -> Result<Vec<u64>> {
    if triples.len() > MAX_UNIVERSE {
        return Err(Error::InvalidQuery(format!(
            "{} triples; at most {MAX_UNIVERSE} are supported",
            triples.len()
        )));
    }
    let n = triples.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let edges: Vec<bool> = pairs
        .par_iter()
        .map(|&(i, j)| compatible(alg, &triples[i], &triples[j]))
        .collect();
    let mut adj = vec![0u64; n];
    for (&(i, j), ok) in pairs.iter().zip(edges) {
        if ok {
            adj[i] |= 1 << j;
            adj[j] |= 1 << i;
        }
    }
    Ok(adj)
}

fn full(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Size of the largest pairwise-compatible subset of `s`.
pub fn phi(g: &Admg, s: &TripleSet) -> Result<usize> {
    let alg = EventAlgebra::new(g);
    let adj = adjacency(&alg, &s.triples)?;
    Ok(clique::max_clique(&adj, full(s.len())))
}

/// `Σ_{(z,a,y) ∈ S} P_z(a, y) ≤ Φ(S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub lhs: SymbolicExpr,
    pub rhs: usize,
    pub triples: TripleSet,
}

impl Constraint {
    pub fn evaluate(&self, dist: &DiscreteDistribution<f64>) -> std::result::Result<f64, UndefinedTerm> {
        self.lhs.evaluate(dist)
    }

    pub fn render(&self, g: &Admg, fmt: RenderFormat) -> String {
        let le = match fmt {
            RenderFormat::Text => "<=",
            RenderFormat::Latex => "\\le",
        };
        format!("{} {le} {}", self.lhs.render(g, fmt), self.rhs)
    }
}

fn lhs(g: &Admg, triples: &[Triple]) -> Result<SymbolicExpr> {
    let terms = triples
        .iter()
        .map(|t| {
            let e = t.event();
            Ok(SymbolicExpr::Term(Term::new(g, e.world, e.outcome.iter().collect())?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SymbolicExpr::Sum(terms))
}

pub fn make_constraint(g: &Admg, s: &TripleSet) -> Result<Constraint> {
    Ok(Constraint {
        lhs: lhs(g, &s.triples)?,
        rhs: phi(g, s)?,
        triples: s.clone(),
    })
}

/// Next larger integer with the same number of set bits.
fn next_combination(x: u64) -> u64 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

struct Search {
    adj: Vec<u64>,
    /// One mask per instrument level covering all its triples.
    blocks: Vec<u64>,
    universe: u64,
}

impl Search {
    fn phi(&self, s: u64) -> usize {
        clique::max_clique(&self.adj, s)
    }

    fn incompatibility_connected(&self, s: u64) -> bool {
        let start = s & s.wrapping_neg();
        let mut seen = start;
        let mut frontier = start;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let next = s & !self.adj[v] & !seen;
            seen |= next;
            frontier |= next;
        }
        seen == s
    }

    /// `Some(Φ(S))` when `S` gives a constraint none of the simpler ones
    /// already imply.
    fn keep(&self, s: u64) -> Option<usize> {
        let size = s.count_ones() as usize;
        let p = self.phi(s);
        if p >= size || !self.incompatibility_connected(s) {
            return None;
        }
        // one more triple without raising Φ gives a stronger constraint,
        // even when that set is past the size cap
        let mut rest = self.universe & !s;
        while rest != 0 {
            let e = rest & rest.wrapping_neg();
            rest &= rest - 1;
            if self.phi(s | e) == p {
                return None;
            }
        }
        // a whole instrument level sums to one
        for &b in &self.blocks {
            if s & b == b && (s == b || self.phi(s & !b) + 1 == p) {
                return None;
            }
        }
        Some(p)
    }
}

/// Enumerates triple sets up to `max_size` (default: the number of triples,
/// at most 12) and keeps those that are non-vacuous, do not split into
/// mutually compatible parts, cannot be enlarged without raising `Φ`, and
/// are not a normalisation identity plus a smaller constraint. Maximality
/// is checked against the whole universe, not only up to `max_size`.
pub fn generate_constraints(
    g: &Admg,
    z: &[VarId],
    a: &[VarId],
    y: &[VarId],
    max_size: Option<usize>,
) -> Result<Vec<Constraint>> {
    let universe = TripleSet::universe(g, z, a, y)?;
    let n = universe.len();
    let alg = EventAlgebra::new(g);
    let adj = adjacency(&alg, &universe.triples)?;
    let per_level = n / levels(g, &universe.z_vars).len();
    let blocks = (0..n / per_level)
        .map(|b| full(per_level) << (b * per_level))
        .collect();
    let max_size = max_size.unwrap_or(n.min(12)).min(n);
    let search = Search {
        adj,
        blocks,
        universe: full(n),
    };

    let mut kept: Vec<(u64, usize)> = Vec::new();
    let mut visited = 0usize;
    'sizes: for size in 2..=max_size {
        let mut batch = Vec::new();
        let mut s = full(size);
        while s <= search.universe {
            if visited == SUBSET_CAP {
                log::warn!("constraint search stopped after {SUBSET_CAP} candidate sets");
                kept.extend(search.filter_batch(&batch));
                break 'sizes;
            }
            visited += 1;
            batch.push(s);
            if size == n {
                break;
            }
            s = next_combination(s);
        }
        kept.extend(search.filter_batch(&batch));
    }
    kept.into_iter()
        .map(|(mask, rhs)| {
            let triples = universe.subset(mask);
            Ok(Constraint {
                lhs: lhs(g, &triples.triples)?,
                rhs,
                triples,
            })
        })
        .collect()
}

impl Search {
    fn filter_batch(&self, batch: &[u64]) -> Vec<(u64, usize)> {
        batch
            .par_iter()
            .filter_map(|&s| self.keep(s).map(|p| (s, p)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub index: usize,
    /// `None` when a term conditions on a zero-probability event.
    pub value: Option<f64>,
    pub rhs: usize,
}

impl ConstraintCheck {
    pub fn slack(&self) -> Option<f64> {
        self.value.map(|v| self.rhs as f64 - v)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ViolationReport {
    pub checks: Vec<ConstraintCheck>,
}

impl ViolationReport {
    /// Checks with slack below `-tol`, worst first.
    pub fn violations(&self, tol: f64) -> Vec<&ConstraintCheck> {
        let mut v: Vec<&ConstraintCheck> = self
            .checks
            .iter()
            .filter(|c| c.slack().is_some_and(|s| s < -tol))
            .collect();
        v.sort_by(|a, b| a.slack().partial_cmp(&b.slack()).expect("finite slack"));
        v
    }

    pub fn undefined(&self) -> usize {
        self.checks.iter().filter(|c| c.value.is_none()).count()
    }
}

pub fn check_distribution(constraints: &[Constraint], dist: &DiscreteDistribution<f64>) -> ViolationReport {
    ViolationReport {
        checks: constraints
            .iter()
            .enumerate()
            .map(|(index, c)| ConstraintCheck {
                index,
                value: c.evaluate(dist).ok(),
                rhs: c.rhs,
            })
            .collect(),
    }
}
