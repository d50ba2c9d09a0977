//! Hidden-variable DAGs, their latent projections, and the directed-path
//! relevance predicates that drive the counterfactual event algebra.
//!
//! Observed variables are addressed by [`VarId`]. In a [`CausalGraph`] the
//! observed vertices occupy node indices `0..n_observed` and hidden vertices
//! follow, so a `VarId` means the same variable in a graph and in its
//! projection.

mod dsl;

pub use dsl::parse_model;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// An observed variable with an ordered finite domain of value labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub domain: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, domain: Vec<String>) -> Result<Self> {
        let name = name.into();
        if domain.is_empty() {
            return Err(Error::InvalidGraph(format!("`{name}` has an empty domain")));
        }
        let unique: BTreeSet<&String> = domain.iter().collect();
        if unique.len() != domain.len() {
            return Err(Error::InvalidGraph(format!(
                "`{name}` has duplicate value labels"
            )));
        }
        Ok(Self { name, domain })
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            domain: vec!["0".to_string(), "1".to_string()],
        }
    }

    pub fn cardinality(&self) -> usize {
        self.domain.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|v| v == label)
    }
}

/// Adjacency view shared by [`CausalGraph`] and [`Admg`] so the relevance
/// predicates can run on either.
pub trait DirectedStructure {
    fn node_count(&self) -> usize;
    fn parents_of(&self, node: usize) -> &[usize];
    fn children_of(&self, node: usize) -> &[usize];
}

/// A DAG over observed and hidden vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    observed: Vec<Variable>,
    hidden: Vec<String>,
    directed: BTreeSet<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl CausalGraph {
    /// Edges use node indices: observed `i` is node `i`, hidden `h` is node
    /// `observed.len() + h`.
    pub fn new(
        observed: Vec<Variable>,
        hidden: Vec<String>,
        directed: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = observed.len() + hidden.len();
        let mut names = BTreeSet::new();
        for name in observed.iter().map(|v| &v.name).chain(hidden.iter()) {
            if !names.insert(name.clone()) {
                return Err(Error::InvalidGraph(format!("duplicate vertex `{name}`")));
            }
        }
        let directed: BTreeSet<(usize, usize)> = directed.into_iter().collect();
        let (parents, children) = adjacency(n, &directed)?;
        let graph = Self {
            observed,
            hidden,
            directed,
            parents,
            children,
        };
        if let Some(cycle) = find_cycle(&graph) {
            return Err(Error::Cycle(
                cycle
                    .into_iter()
                    .map(|i| graph.node_name(i).to_string())
                    .collect(),
            ));
        }
        Ok(graph)
    }

    pub fn observed(&self) -> &[Variable] {
        &self.observed
    }

    pub fn hidden(&self) -> &[String] {
        &self.hidden
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    pub fn node_name(&self, node: usize) -> &str {
        if node < self.observed.len() {
            &self.observed[node].name
        } else {
            &self.hidden[node - self.observed.len()]
        }
    }

    pub fn is_hidden(&self, node: usize) -> bool {
        node >= self.observed.len()
    }

    /// The ADMG over the observed vertices.
    ///
    /// `Vi -> Vj` when a directed path from `Vi` to `Vj` has only hidden
    /// intermediates. `Vi <-> Vj` when some hidden vertex reaches both
    /// through directed paths with only hidden intermediates, which is
    /// exactly a collider-free path into both endpoints.
    pub fn latent_projection(&self) -> Admg {
        let n_obs = self.observed.len();
        let mut directed = BTreeSet::new();
        for v in 0..n_obs {
            for w in self.observed_reach(v) {
                if w != v {
                    directed.insert((v, w));
                }
            }
        }
        let mut bidirected = BTreeSet::new();
        for h in n_obs..self.node_count() {
            let reach: Vec<usize> = self.observed_reach(h).into_iter().collect();
            for (i, &a) in reach.iter().enumerate() {
                for &b in &reach[i + 1..] {
                    bidirected.insert((a.min(b), a.max(b)));
                }
            }
        }
        Admg::new(self.observed.clone(), directed, bidirected)
            .expect("projection of an acyclic graph is a valid ADMG")
    }

    /// Observed vertices reachable from `start` along directed paths whose
    /// intermediate vertices are all hidden.
    fn observed_reach(&self, start: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = queue.pop_front() {
            for &c in &self.children[v] {
                if seen[c] {
                    continue;
                }
                seen[c] = true;
                if self.is_hidden(c) {
                    queue.push_back(c);
                } else {
                    out.insert(c);
                }
            }
        }
        out
    }
}

impl DirectedStructure for CausalGraph {
    fn node_count(&self) -> usize {
        self.observed.len() + self.hidden.len()
    }
    fn parents_of(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }
    fn children_of(&self, node: usize) -> &[usize] {
        &self.children[node]
    }
}

/// Acyclic directed mixed graph over observed variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admg {
    vars: Vec<Variable>,
    directed: BTreeSet<(usize, usize)>,
    bidirected: BTreeSet<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    spouses: Vec<Vec<usize>>,
    topo: Vec<VarId>,
}

impl Admg {
    /// Bidirected pairs are normalized to `(min, max)`.
    pub fn new(
        vars: Vec<Variable>,
        directed: impl IntoIterator<Item = (usize, usize)>,
        bidirected: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = vars.len();
        let mut names = BTreeSet::new();
        for v in &vars {
            if !names.insert(v.name.clone()) {
                return Err(Error::InvalidGraph(format!(
                    "duplicate vertex `{}`",
                    v.name
                )));
            }
        }
        let directed: BTreeSet<(usize, usize)> = directed.into_iter().collect();
        let mut bi = BTreeSet::new();
        for (a, b) in bidirected {
            if a == b {
                return Err(Error::InvalidGraph(format!(
                    "bidirected self-loop on `{}`",
                    vars.get(a).map_or("?", |v| v.name.as_str())
                )));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(
                    "bidirected edge endpoint out of range".into(),
                ));
            }
            bi.insert((a.min(b), a.max(b)));
        }
        let (parents, children) = adjacency(n, &directed)?;
        let mut spouses = vec![Vec::new(); n];
        for &(a, b) in &bi {
            spouses[a].push(b);
            spouses[b].push(a);
        }
        let mut admg = Self {
            vars,
            directed,
            bidirected: bi,
            parents,
            children,
            spouses,
            topo: Vec::new(),
        };
        if let Some(cycle) = find_cycle(&admg) {
            return Err(Error::Cycle(
                cycle
                    .into_iter()
                    .map(|i| admg.vars[i].name.clone())
                    .collect(),
            ));
        }
        admg.topo = topological_order(&admg).into_iter().map(VarId).collect();
        Ok(admg)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.vars[id.0].name
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.vars[id.0].cardinality()
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len()).map(VarId)
    }

    pub fn var_id(&self, name: &str) -> Result<VarId> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .map(VarId)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn value_index(&self, id: VarId, label: &str) -> Result<usize> {
        self.vars[id.0]
            .value_index(label)
            .ok_or_else(|| Error::UnknownValue {
                var: self.vars[id.0].name.clone(),
                value: label.to_string(),
            })
    }

    pub fn label(&self, id: VarId, value: usize) -> &str {
        &self.vars[id.0].domain[value]
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (VarId, VarId)> + '_ {
        self.directed.iter().map(|&(a, b)| (VarId(a), VarId(b)))
    }

    pub fn bidirected_edges(&self) -> impl Iterator<Item = (VarId, VarId)> + '_ {
        self.bidirected.iter().map(|&(a, b)| (VarId(a), VarId(b)))
    }

    pub fn has_bidirected(&self, a: VarId, b: VarId) -> bool {
        self.bidirected.contains(&(a.0.min(b.0), a.0.max(b.0)))
    }

    pub fn parents(&self, id: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.parents[id.0].iter().map(|&p| VarId(p))
    }

    pub fn spouses(&self, id: VarId) -> impl Iterator<Item = VarId> + '_ {
        self.spouses[id.0].iter().map(|&p| VarId(p))
    }

    pub fn topological_order(&self) -> &[VarId] {
        &self.topo
    }

    /// Bidirected-connected components, each sorted, ordered by smallest member.
    pub fn districts(&self) -> Vec<Vec<VarId>> {
        let n = self.vars.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                comp.push(VarId(v));
                for &s in &self.spouses[v] {
                    if !seen[s] {
                        seen[s] = true;
                        stack.push(s);
                    }
                }
            }
            comp.sort();
            out.push(comp);
        }
        out
    }

    /// The same ADMG viewed as a DAG with no hidden vertices (bidirected
    /// edges dropped). Projecting it again gives back the directed part.
    pub fn directed_part(&self) -> CausalGraph {
        CausalGraph::new(self.vars.clone(), Vec::new(), self.directed.iter().copied())
            .expect("directed part of an ADMG is acyclic")
    }
}

impl DirectedStructure for Admg {
    fn node_count(&self) -> usize {
        self.vars.len()
    }
    fn parents_of(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }
    fn children_of(&self, node: usize) -> &[usize] {
        &self.children[node]
    }
}

/// A parsed model: the ADMG every algorithm runs on, plus the hidden-variable
/// DAG it was projected from when one was supplied.
#[derive(Debug, Clone)]
pub struct CausalModel {
    pub admg: Admg,
    pub dag: Option<CausalGraph>,
}

impl CausalModel {
    pub fn from_dag(dag: CausalGraph) -> Self {
        Self {
            admg: dag.latent_projection(),
            dag: Some(dag),
        }
    }

    pub fn from_admg(admg: Admg) -> Self {
        Self { admg, dag: None }
    }

    pub fn parse(src: &str) -> Result<Self> {
        parse_model(src)
    }
}

fn adjacency(
    n: usize,
    edges: &BTreeSet<(usize, usize)>,
) -> Result<(Vec<Vec<usize>>, Vec<Vec<usize>>)> {
    let mut parents = vec![Vec::new(); n];
    let mut children = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::InvalidGraph("edge endpoint out of range".into()));
        }
        if a == b {
            return Err(Error::Cycle(vec![format!("#{a}"), format!("#{a}")]));
        }
        parents[b].push(a);
        children[a].push(b);
    }
    Ok((parents, children))
}

/// Returns the node sequence of a directed cycle, first node repeated at the end.
fn find_cycle<G: DirectedStructure>(g: &G) -> Option<Vec<usize>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let n = g.node_count();
    let mut state = vec![0u8; n];
    let mut path = Vec::new();
    fn visit<G: DirectedStructure>(
        g: &G,
        v: usize,
        state: &mut [u8],
        path: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        state[v] = 1;
        path.push(v);
        for &c in g.children_of(v) {
            if state[c] == 1 {
                let start = path.iter().position(|&p| p == c).unwrap();
                let mut cycle = path[start..].to_vec();
                cycle.push(c);
                return Some(cycle);
            }
            if state[c] == 0 {
                if let Some(cycle) = visit(g, c, state, path) {
                    return Some(cycle);
                }
            }
        }
        path.pop();
        state[v] = 2;
        None
    }
    for v in 0..n {
        if state[v] == 0 {
            if let Some(cycle) = visit(g, v, &mut state, &mut path) {
                return Some(cycle);
            }
        }
    }
    None
}

/// Kahn's algorithm, ties broken by index.
fn topological_order<G: DirectedStructure>(g: &G) -> Vec<usize> {
    let n = g.node_count();
    let mut indegree: Vec<usize> = (0..n).map(|v| g.parents_of(v).len()).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in g.children_of(v) {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.insert(c);
            }
        }
    }
    order
}

fn ids_to_nodes(ids: &[VarId]) -> Vec<usize> {
    ids.iter().map(|v| v.0).collect()
}

/// True when every directed path from a member of `z \ a` to a member of `y`
/// passes through a member of `a`. On a [`CausalGraph`] paths may run
/// through hidden vertices.
pub fn is_causally_irrelevant<G: DirectedStructure>(
    g: &G,
    z: &[VarId],
    y: &[VarId],
    a: &[VarId],
) -> Result<bool> {
    if y.is_empty() {
        return Err(Error::InvalidQuery("outcome set is empty".into()));
    }
    if let Some(v) = y.iter().find(|v| z.contains(v) || a.contains(v)) {
        return Err(Error::OverlappingSets(format!(
            "outcome variable {v} also appears in the instrument or treatment set"
        )));
    }
    let blocked = ids_to_nodes(a);
    let targets = ids_to_nodes(y);
    for &start in z.iter().filter(|v| !a.contains(v)) {
        if reaches_avoiding(g, start.0, &targets, &blocked) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Members `c` of `s` with a directed path `c -> ... -> target` whose
/// intermediate vertices avoid `s`. Dropping the rest of `s` from an
/// intervention leaves `target` unchanged.
pub fn relevant_context_subset<G: DirectedStructure>(
    g: &G,
    target: VarId,
    s: &[VarId],
) -> Vec<VarId> {
    let n = g.node_count();
    let mut in_s = vec![false; n];
    for v in s {
        in_s[v.0] = true;
    }
    let mut seen = vec![false; n];
    let mut relevant = Vec::new();
    let mut queue = VecDeque::from([target.0]);
    seen[target.0] = true;
    while let Some(v) = queue.pop_front() {
        for &p in g.parents_of(v) {
            if seen[p] {
                continue;
            }
            seen[p] = true;
            if in_s[p] {
                relevant.push(VarId(p));
            } else {
                queue.push_back(p);
            }
        }
    }
    relevant.sort();
    relevant
}

/// Whether `c` has a directed path to `target` with no intermediate vertex in
/// `given`.
pub fn is_relevant_given<G: DirectedStructure>(
    g: &G,
    c: VarId,
    target: VarId,
    given: &[VarId],
) -> bool {
    reaches_avoiding(g, c.0, &[target.0], &ids_to_nodes(given))
}

/// `z` is a generalized instrument for `a` with respect to `y`: `z \ a` is
/// causally irrelevant to `y` given `a`, and interventions on `z` are
/// identified by truncated factorization.
pub fn is_generalized_instrument(g: &Admg, z: &[VarId], a: &[VarId], y: &[VarId]) -> bool {
    let irrelevant = is_causally_irrelevant(g, z, y, a).unwrap_or(false);
    irrelevant && z.iter().all(|&v| g.spouses(v).next().is_none())
}

pub fn ancestors<G: DirectedStructure>(g: &G, v: VarId) -> BTreeSet<VarId> {
    let mut out = BTreeSet::new();
    let mut stack = vec![v.0];
    while let Some(x) = stack.pop() {
        for &p in g.parents_of(x) {
            if out.insert(VarId(p)) {
                stack.push(p);
            }
        }
    }
    out
}

fn reaches_avoiding<G: DirectedStructure>(
    g: &G,
    start: usize,
    targets: &[usize],
    blocked: &[usize],
) -> bool {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &c in g.children_of(v) {
            if targets.contains(&c) {
                return true;
            }
            if seen[c] || blocked.contains(&c) {
                continue;
            }
            seen[c] = true;
            stack.push(c);
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn ids(admg: &Admg, names: &[&str]) -> Vec<VarId> {
        names.iter().map(|n| admg.var_id(n).unwrap()).collect()
    }

    fn edge_names(admg: &Admg) -> (BTreeSet<(String, String)>, BTreeSet<(String, String)>) {
        let d = admg
            .directed_edges()
            .map(|(a, b)| (admg.name(a).to_string(), admg.name(b).to_string()))
            .collect();
        let b = admg
            .bidirected_edges()
            .map(|(a, b)| {
                let (x, y) = (admg.name(a).to_string(), admg.name(b).to_string());
                if x < y {
                    (x, y)
                } else {
                    (y, x)
                }
            })
            .collect();
        (d, b)
    }

    fn pairs(list: &[(&str, &str)]) -> BTreeSet<(String, String)> {
        list.iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn iv_projection() {
        let m = models::iv();
        let (d, b) = edge_names(&m.admg);
        assert_eq!(d, pairs(&[("Z", "A"), ("A", "Y")]));
        assert_eq!(b, pairs(&[("A", "Y")]));
    }

    #[test]
    fn projection_without_hidden_keeps_edges() {
        let m = CausalModel::parse("node X; node Y; node W; X -> Y; Y -> W; X -> W;").unwrap();
        let (d, b) = edge_names(&m.admg);
        assert_eq!(d, pairs(&[("X", "Y"), ("Y", "W"), ("X", "W")]));
        assert!(b.is_empty());
    }

    #[test]
    fn sequential_projection() {
        let m = models::sequential();
        let (d, b) = edge_names(&m.admg);
        assert_eq!(
            d,
            pairs(&[("A1", "Y1"), ("Y1", "A2"), ("A2", "Y2"), ("A1", "Y2")])
        );
        assert_eq!(b, pairs(&[("A1", "Y1"), ("A1", "Y2"), ("Y1", "Y2")]));
    }

    #[test]
    fn hidden_chain_gives_directed_edge() {
        let m = CausalModel::parse("node X; node Y; hidden H; X -> H; H -> Y;").unwrap();
        let (d, b) = edge_names(&m.admg);
        assert_eq!(d, pairs(&[("X", "Y")]));
        assert!(b.is_empty());
    }

    #[test]
    fn projection_is_idempotent() {
        let m = models::sequential();
        let again = m.admg.directed_part().latent_projection();
        let directed: Vec<_> = m.admg.directed_edges().collect();
        assert_eq!(again.directed_edges().collect::<Vec<_>>(), directed);
        assert_eq!(again.bidirected_edges().count(), 0);
    }

    #[test]
    fn cyclic_graph_rejected_with_witness() {
        let err =
            CausalModel::parse("node X; node Y; hidden H; X -> H; H -> Y; Y -> X;").unwrap_err();
        match err {
            Error::Cycle(path) => {
                assert_eq!(path.first(), path.last());
                assert!(path.len() >= 4);
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn irrelevance_examples() {
        let m = models::iv();
        let g = &m.admg;
        let [z, a, y] = [
            g.var_id("Z").unwrap(),
            g.var_id("A").unwrap(),
            g.var_id("Y").unwrap(),
        ];
        assert!(is_causally_irrelevant(g, &[z], &[y], &[a]).unwrap());
        assert!(!is_causally_irrelevant(g, &[z], &[a], &[]).unwrap());
        assert!(is_causally_irrelevant(g, &[], &[y], &[a]).unwrap());
        assert!(!is_causally_irrelevant(g, &[a], &[y], &[z]).unwrap());
        let dag = m.dag.as_ref().unwrap();
        assert!(is_causally_irrelevant(dag, &[z], &[y], &[a]).unwrap());
        assert!(matches!(
            is_causally_irrelevant(g, &[z], &[y], &[y]),
            Err(Error::OverlappingSets(_))
        ));
    }

    #[test]
    fn relevant_context_examples() {
        let m = models::iv();
        let g = &m.admg;
        assert_eq!(
            relevant_context_subset(g, g.var_id("Y").unwrap(), &ids(g, &["Z", "A"])),
            ids(g, &["A"])
        );
        assert!(
            relevant_context_subset(g, g.var_id("Z").unwrap(), &ids(g, &["A", "Y"])).is_empty()
        );

        let m = models::iv_covariates();
        let g = &m.admg;
        let mut expected = ids(g, &["C", "A"]);
        expected.sort();
        assert_eq!(
            relevant_context_subset(g, g.var_id("Y").unwrap(), &ids(g, &["Z", "C", "A"])),
            expected
        );
    }

    #[test]
    fn generalized_instruments() {
        let m = models::iv();
        let g = &m.admg;
        let [z, a, y] = [ids(g, &["Z"]), ids(g, &["A"]), ids(g, &["Y"])];
        assert!(is_generalized_instrument(g, &z, &a, &y));
        assert!(!is_generalized_instrument(g, &a, &z, &y));

        // A2 -> Y2 bypasses A1, so {A2} only works once A2 is itself treated.
        let m = models::sequential();
        let g = &m.admg;
        let y2 = ids(g, &["Y2"]);
        assert!(!is_generalized_instrument(g, &ids(g, &["A2"]), &ids(g, &["A1"]), &y2));
        assert!(is_generalized_instrument(g, &ids(g, &["A2"]), &ids(g, &["A1", "A2"]), &y2));
        // A1 is confounded with both outcomes
        assert!(!is_generalized_instrument(g, &ids(g, &["A1"]), &ids(g, &["A1", "A2"]), &y2));
    }

    #[test]
    fn districts_of_frontdoor() {
        let m = models::frontdoor_iv();
        let g = &m.admg;
        let d = g.districts();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0], ids(g, &["Z"]));
        let mut big = ids(g, &["A", "M", "Y"]);
        big.sort();
        assert_eq!(d[1], big);
    }
}
