//! Randomized checks of the engine against the exhaustive structural-model
//! oracle. Sampled laws come from the oracle's own sampler; exactness claims
//! are checked with `satisfiable`, which walks every response-function unit.

use std::collections::BTreeSet;

use cfbounds::bounds::{algorithm1, algorithm1_with, partition_target, BoundOptions, BoundQuery};
use cfbounds::events::{Assignment, CfFormula, CounterfactualEvent, EventAlgebra, SingleWorldEvent};
use cfbounds::graph::{
    ancestors, is_causally_irrelevant, relevant_context_subset, Admg, CausalGraph, Variable, VarId,
};
use cfbounds::identify::{expr_from_json, expr_to_json, SymbolicExpr, Term};
use cfbounds::inequalities::generate_constraints;
use cfbounds::models;
use cfbounds::oracle::{sample_rng, sample_scm, satisfiable, ResponseFunctionScm, ScmSamplerConfig};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn all_models() -> Vec<Admg> {
    vec![
        models::iv().admg,
        models::iv_ternary().admg,
        models::sequential().admg,
        models::iv_covariates().admg,
        models::frontdoor_iv().admg,
        models::inclusive_frontdoor().admg,
    ]
}

/// `roles[i]`: 0 = absent, 1 = intervened, 2 = observed outcome.
fn event_from(g: &Admg, roles: &[(u8, usize)]) -> Option<SingleWorldEvent> {
    let mut world = Assignment::new();
    let mut outcome = Assignment::new();
    for (v, &(role, raw)) in g.ids().zip(roles) {
        let x = raw % g.cardinality(v);
        match role {
            1 => {
                world.insert(v, x);
            }
            2 => {
                outcome.insert(v, x);
            }
            _ => {}
        }
    }
    (!outcome.is_empty()).then(|| SingleWorldEvent::new(world, outcome))
}

fn roles() -> impl Strategy<Value = Vec<(u8, usize)>> {
    prop::collection::vec((0u8..3, 0usize..3), 6)
}

fn f(e: &SingleWorldEvent) -> CfFormula {
    CfFormula::event(e.clone())
}

fn scm(g: &Admg, seed: u64, i: u64) -> ResponseFunctionScm {
    sample_scm(g, &ScmSamplerConfig { seed, ..Default::default() }, &mut sample_rng(seed, i)).unwrap()
}

// ---------------------------------------------------------------- graph

/// Random DAG on `n_obs + n_hid` nodes whose edges follow a shuffled order.
fn random_dag(n_obs: usize, n_hid: usize, order: &[usize], bits: &[bool]) -> CausalGraph {
    let n = n_obs + n_hid;
    let mut edges = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in i + 1..n {
            if bits[k % bits.len()] {
                edges.push((order[i], order[j]));
            }
            k += 1;
        }
    }
    let observed = (0..n_obs).map(|i| Variable::binary(format!("V{i}"))).collect();
    let hidden = (0..n_hid).map(|i| format!("H{i}")).collect();
    CausalGraph::new(observed, hidden, edges).unwrap()
}

/// Projection by enumerating simple paths whose interior is hidden.
fn project_by_paths(g: &CausalGraph) -> (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize)>) {
    let n_obs = g.observed().len();
    let n = n_obs + g.hidden().len();
    let edges: BTreeSet<(usize, usize)> = g.directed_edges().collect();
    let mut directed = BTreeSet::new();
    let mut bidirected = BTreeSet::new();
    // walk: (current, first edge points into start, last edge direction into current, visited)
    fn walk(
        edges: &BTreeSet<(usize, usize)>,
        n: usize,
        n_obs: usize,
        start: usize,
        path: &mut Vec<usize>,
        arrows: &mut Vec<bool>,
        directed: &mut BTreeSet<(usize, usize)>,
        bidirected: &mut BTreeSet<(usize, usize)>,
    ) {
        let cur = *path.last().unwrap();
        for next in 0..n {
            if path.contains(&next) {
                continue;
            }
            // true = traversed forwards (cur -> next)
            let step = if edges.contains(&(cur, next)) {
                true
            } else if edges.contains(&(next, cur)) {
                false
            } else {
                continue;
            };
            arrows.push(step);
            let collider = arrows.len() >= 2 && arrows[arrows.len() - 2] && !step;
            if !collider {
                if next < n_obs {
                    if arrows.iter().all(|&a| a) {
                        directed.insert((start, next));
                    }
                    if !arrows[0] && step {
                        bidirected.insert((start.min(next), start.max(next)));
                    }
                } else {
                    path.push(next);
                    walk(edges, n, n_obs, start, path, arrows, directed, bidirected);
                    path.pop();
                }
            }
            arrows.pop();
        }
    }
    for s in 0..n_obs {
        walk(&edges, n, n_obs, s, &mut vec![s], &mut Vec::new(), &mut directed, &mut bidirected);
    }
    (directed, bidirected)
}

fn admg_edges(a: &Admg) -> (BTreeSet<(usize, usize)>, BTreeSet<(usize, usize)>) {
    (
        a.directed_edges().map(|(x, y)| (x.0, y.0)).collect(),
        a.bidirected_edges().map(|(x, y)| (x.0.min(y.0), x.0.max(y.0))).collect(),
    )
}

fn dag_strategy() -> impl Strategy<Value = CausalGraph> {
    (2usize..=4, 0usize..=3).prop_flat_map(|(n_obs, n_hid)| {
        let n = n_obs + n_hid;
        (
            Just(n_obs),
            Just(n_hid),
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(prop::bool::weighted(0.4), 21),
        )
            .prop_map(|(o, h, order, bits)| random_dag(o, h, &order, &bits))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_matches_path_enumeration(g in dag_strategy()) {
        prop_assert_eq!(admg_edges(&g.latent_projection()), project_by_paths(&g));
    }

    #[test]
    fn projection_is_idempotent(g in dag_strategy()) {
        let a = g.latent_projection();
        // one hidden parent per bidirected edge reproduces the ADMG
        let n = a.len();
        let (dir, bi) = admg_edges(&a);
        let hidden: Vec<String> = (0..bi.len()).map(|i| format!("U{i}")).collect();
        let mut edges: Vec<(usize, usize)> = dir.iter().copied().collect();
        for (i, &(x, y)) in bi.iter().enumerate() {
            edges.push((n + i, x));
            edges.push((n + i, y));
        }
        let canonical = CausalGraph::new(a.variables().to_vec(), hidden, edges).unwrap();
        prop_assert_eq!(canonical.latent_projection(), a.clone());
        prop_assert_eq!(admg_edges(&a.directed_part().latent_projection()).0, dir);
    }

    #[test]
    fn relevance_survives_projection(g in dag_strategy(), picks in prop::collection::vec(0u8..4, 4)) {
        let a = g.latent_projection();
        let mut z = Vec::new();
        let mut t = Vec::new();
        let mut y = Vec::new();
        for (i, &p) in picks.iter().enumerate().take(a.len()) {
            match p {
                0 => z.push(VarId(i)),
                1 => t.push(VarId(i)),
                2 => y.push(VarId(i)),
                _ => {}
            }
        }
        prop_assume!(!y.is_empty());
        let on_dag = is_causally_irrelevant(&g, &z, &y, &t).unwrap();
        prop_assert_eq!(on_dag, is_causally_irrelevant(&a, &z, &y, &t).unwrap());
        // enlarging the blocking set never breaks irrelevance
        if on_dag {
            for v in a.ids().filter(|v| !y.contains(v) && !t.contains(v)) {
                let mut bigger = t.clone();
                bigger.push(v);
                prop_assert!(is_causally_irrelevant(&a, &z, &y, &bigger).unwrap());
            }
        }
        for target in a.ids() {
            let s: Vec<VarId> = a.ids().filter(|&v| v != target).collect();
            let rel = relevant_context_subset(&a, target, &s);
            let anc = ancestors(&a, target);
            prop_assert!(rel.iter().all(|v| anc.contains(v) && s.contains(v)));
        }
    }
}

// ---------------------------------------------------------------- events

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn contradiction_is_exact(m in 0usize..6, r1 in roles(), r2 in roles()) {
        let g = &all_models()[m];
        let (Some(e1), Some(e2)) = (event_from(g, &r1), event_from(g, &r2)) else {
            return Ok(());
        };
        prop_assume!(satisfiable(g, &f(&e1)).unwrap() && satisfiable(g, &f(&e2)).unwrap());
        let alg = EventAlgebra::new(g);
        let c = alg.contradicts(&e1, &e2);
        prop_assert_eq!(c, alg.contradicts(&e2, &e1));
        prop_assert!(!alg.contradicts(&e1, &e1));
        let joint = CfFormula::And(vec![f(&e1), f(&e2)]);
        prop_assert_eq!(c, !satisfiable(g, &joint).unwrap(), "{:?} / {:?}", e1, e2);
    }

    #[test]
    fn psi_covers_every_unit(m in 0usize..6, r1 in roles(), r2 in roles()) {
        let g = &all_models()[m];
        let (Some(e), Some(w)) = (event_from(g, &r1), event_from(g, &r2)) else {
            return Ok(());
        };
        let alg = EventAlgebra::new(g);
        let ev = CounterfactualEvent::single(e.clone());
        let psi = alg.psi(&ev, &w.world).unwrap();
        let covered = CfFormula::Or(
            psi.iter().map(|o| f(&SingleWorldEvent::new(w.world.clone(), o.clone()))).collect(),
        );
        let escape = CfFormula::And(vec![f(&e), CfFormula::not(covered)]);
        prop_assert!(!satisfiable(g, &escape).unwrap());
    }

    #[test]
    fn implication_is_sound(m in 0usize..6, r1 in roles(), r2 in roles()) {
        let g = &all_models()[m];
        let (Some(p), Some(q)) = (event_from(g, &r1), event_from(g, &r2)) else {
            return Ok(());
        };
        let alg = EventAlgebra::new(g);
        if alg.cross_world_implies(&CounterfactualEvent::single(p.clone()), &q) {
            let counter = CfFormula::And(vec![f(&p), CfFormula::not(f(&q))]);
            prop_assert!(!satisfiable(g, &counter).unwrap());
        }
    }

    #[test]
    fn minimal_label_keeps_probability(m in 0usize..6, r in roles(), i in 0u64..1000) {
        let g = &all_models()[m];
        let Some(e) = event_from(g, &r) else { return Ok(()) };
        let alg = EventAlgebra::new(g);
        let s = scm(g, 5, i);
        let p = s.counterfactual_prob(&CounterfactualEvent::single(e.clone()));
        let q = s.counterfactual_prob(&CounterfactualEvent::single(alg.minimal_label(&e)));
        prop_assert!((p - q).abs() < 1e-12);
    }
}

// ---------------------------------------------------------------- identify

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn g_formula_matches_oracle(m in 0usize..6, r in roles(), i in 0u64..1000) {
        let g = &all_models()[m];
        let Some(e) = event_from(g, &r) else { return Ok(()) };
        let Ok(t) = Term::new(g, e.world.clone(), e.outcome.iter().collect()) else {
            return Ok(());
        };
        let s = scm(g, 9, i);
        let joint = s.observed_joint().unwrap();
        let truth = s.counterfactual_prob(&CounterfactualEvent::single(e));
        if let Some(v) = t.evaluate(&joint) {
            prop_assert!((v - truth).abs() < TOL, "{} vs {}", v, truth);
        }
    }

    #[test]
    fn expression_algebra(i in 0u64..1000) {
        let g = models::iv().admg;
        let joint = scm(&g, 2, i).observed_joint().unwrap();
        let id = |n| g.var_id(n).unwrap();
        let term = |z: usize, a: usize, y: usize| {
            SymbolicExpr::Term(
                Term::new(&g, Assignment::new().with(id("Z"), z), vec![(id("A"), a), (id("Y"), y)]).unwrap(),
            )
        };
        let xs = [term(0, 0, 0), term(1, 1, 1), term(0, 1, 0)];
        let v: Vec<f64> = xs.iter().map(|x| x.evaluate(&joint).unwrap()).collect();
        let max = SymbolicExpr::Max(xs.to_vec()).evaluate(&joint).unwrap();
        prop_assert!((max - v.iter().cloned().fold(f64::MIN, f64::max)).abs() < 1e-12);
        let min = SymbolicExpr::Min(xs.to_vec()).evaluate(&joint).unwrap();
        prop_assert!((min - v.iter().cloned().fold(f64::MAX, f64::min)).abs() < 1e-12);
        let lin = SymbolicExpr::diff(SymbolicExpr::Sum(xs[..2].to_vec()), xs[2].clone());
        prop_assert!((lin.evaluate(&joint).unwrap() - (v[0] + v[1] - v[2])).abs() < 1e-12);
        let nested = SymbolicExpr::Sum(vec![lin.clone(), SymbolicExpr::Max(vec![SymbolicExpr::Constant(0.0), lin])]);
        prop_assert_eq!(expr_from_json(&g, &expr_to_json(&g, &nested)).unwrap(), nested);
    }
}

// ---------------------------------------------------------------- bounds

struct Case {
    g: Admg,
    query: BoundQuery,
}

fn cases() -> Vec<Case> {
    let mk = |g: Admg, target: &str, z: &str| {
        let t = cfbounds::events::parse_single(&g, target).unwrap();
        let query = BoundQuery::new(&g, t, vec![g.var_id(z).unwrap()]).unwrap();
        Case { g, query }
    };
    vec![
        mk(models::iv().admg, "Y(A=1)=1", "Z"),
        mk(models::iv().admg, "Y(A=0)=1", "Z"),
        mk(models::iv_ternary().admg, "Y(A=2)=1", "Z"),
        mk(models::iv_covariates().admg, "Y(A=0)=0", "Z"),
        mk(models::frontdoor_iv().admg, "Y(A=0)=0", "Z"),
    ]
}

#[test]
fn partition_is_exact_on_sampled_models() {
    for c in cases() {
        let pieces = partition_target(&c.g, &c.query);
        let target = CounterfactualEvent::single(c.query.target.clone());
        for i in 0..100 {
            let s = scm(&c.g, 13, i);
            let total: f64 = pieces.iter().map(|p| s.formula_prob(&p.formula)).sum();
            assert!((total - s.counterfactual_prob(&target)).abs() < TOL);
        }
        // pairwise disjoint
        for (i, p) in pieces.iter().enumerate() {
            for q in &pieces[i + 1..] {
                let both = CfFormula::And(vec![p.formula.clone(), q.formula.clone()]);
                assert!(!satisfiable(&c.g, &both).unwrap());
            }
        }
    }
}

#[test]
fn every_branch_bounds_its_gamma_piece() {
    for c in cases() {
        let (_, trace) = algorithm1(&c.g, &c.query).unwrap();
        for i in 0..100 {
            let s = scm(&c.g, 17, i);
            let joint = s.observed_joint().unwrap();
            for fam in &trace.families {
                for w in &fam.worlds {
                    let Some(gamma) = CounterfactualEvent::from_conjuncts([w.left.clone(), w.right.clone()]) else {
                        continue;
                    };
                    let truth = s.counterfactual_prob(&gamma);
                    for r in &w.candidates {
                        if let Ok(v) = r.bound.expr.evaluate(&joint) {
                            assert!(v <= truth + TOL, "{v} > {truth}");
                        }
                    }
                }
                // and the family's max bounds the whole piece
                let piece = &trace.pieces.iter().find(|p| p.kind == cfbounds::bounds::PieceKind::GammaFamily(fam.k)).unwrap();
                let v = SymbolicExpr::Max(fam.branches.clone()).evaluate(&joint).unwrap();
                assert!(v <= s.formula_prob(&piece.formula) + TOL);
            }
        }
    }
}

#[test]
fn pruning_never_changes_the_bound() {
    for c in cases() {
        let (with, _) = algorithm1(&c.g, &c.query).unwrap();
        let (without, _) = algorithm1_with(&c.g, &c.query, BoundOptions { pruning: false }).unwrap();
        for i in 0..200 {
            let joint = scm(&c.g, 19, i).observed_joint().unwrap();
            let (a, b) = (with.evaluate(&joint).unwrap(), without.evaluate(&joint).unwrap());
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn prop7_sums_respect_compatibility() {
    // each generated constraint is a collection whose compatible subsets have
    // at most `rhs` members; the sum of the counterfactual probabilities
    // (not only the observed terms) respects it
    let specs: [(Admg, &[&str], &[&str], &[&str]); 3] = [
        (models::iv_ternary().admg, &["Z"], &["A"], &["Y"]),
        (models::frontdoor_iv().admg, &["Z"], &["A"], &["M", "Y"]),
        (models::iv_covariates().admg, &["Z"], &["A"], &["C", "Y"]),
    ];
    for (g, z, a, y) in specs {
        let ids = |ns: &[&str]| ns.iter().map(|n| g.var_id(n).unwrap()).collect::<Vec<_>>();
        let cs = generate_constraints(&g, &ids(z), &ids(a), &ids(y), None).unwrap();
        assert!(!cs.is_empty());
        for i in 0..100 {
            let s = scm(&g, 23, i);
            let mut memo = std::collections::HashMap::new();
            for c in &cs {
                let total: f64 = c
                    .triples
                    .triples()
                    .iter()
                    .map(|t| {
                        *memo
                            .entry(t.clone())
                            .or_insert_with(|| s.counterfactual_prob(&CounterfactualEvent::single(t.event())))
                    })
                    .sum();
                assert!(total <= c.rhs as f64 + TOL);
            }
        }
    }
}

/// `P(x, y, s) P(s) = P(x, s) P(y, s)` for every level.
fn independence_residual(g: &Admg, joint: &cfbounds::identify::DiscreteDistribution, x: &str, y: &str, s: &str) -> f64 {
    let (x, y, s) = (g.var_id(x).unwrap(), g.var_id(y).unwrap(), g.var_id(s).unwrap());
    let mut worst: f64 = 0.0;
    for a in 0..g.cardinality(x) {
        for b in 0..g.cardinality(y) {
            for c in 0..g.cardinality(s) {
                let p = |pairs: &[(VarId, usize)]| joint.prob(&pairs.iter().copied().collect());
                let lhs = p(&[(x, a), (y, b), (s, c)]) * p(&[(s, c)]);
                let rhs = p(&[(x, a), (s, c)]) * p(&[(y, b), (s, c)]);
                worst = worst.max((lhs - rhs).abs());
            }
        }
    }
    worst
}

#[test]
fn sampled_joints_respect_the_graph() {
    // A2 has its own latent and only Y1 as a parent. (No such check for the
    // front-door model: its district {A, M, Y} shares one latent, which also
    // couples A and M.)
    let seq = models::sequential().admg;
    for i in 0..50 {
        let j = scm(&seq, 29, i).observed_joint().unwrap();
        let r = independence_residual(&seq, &j, "A1", "A2", "Y1");
        assert!(r < TOL, "{i} {r}");
    }
}
