use super::*;
use crate::events::parse_single;
use crate::identify::{DiscreteDistribution, RenderFormat};
use crate::models;

fn query(g: &Admg, target: &str, instrument: &[&str]) -> BoundQuery {
    let t = parse_single(g, target).unwrap();
    let z = instrument.iter().map(|n| g.var_id(n).unwrap()).collect();
    BoundQuery::new(g, t, z).unwrap()
}

fn rendered(g: &Admg, es: &[SingleWorldEvent]) -> Vec<String> {
    es.iter().map(|e| render_single(g, e, RenderFormat::Latex)).collect()
}

#[test]
fn iv_candidates() {
    let g = models::iv().admg;
    let q = query(&g, "Y(A=1)=1", &["Z"]);
    assert_eq!(
        rendered(&g, &candidate_events(&g, &q, Side::E1, 2, 2).unwrap()),
        [
            "\\bar a(\\bar z) \\land \\bar y(\\bar z)",
            "\\bar a(\\bar z) \\land y(\\bar z)"
        ]
    );
    assert_eq!(
        rendered(&g, &candidate_events(&g, &q, Side::E2, 2, 2).unwrap()),
        ["a(z) \\land y(z)"]
    );
    assert!(candidate_events(&g, &q, Side::E1, 2, 1).unwrap().is_empty());
}

#[test]
fn iv_lower_bound_branches() {
    let g = models::iv().admg;
    let q = query(&g, "Y(A=1)=1", &["Z"]);
    let (expr, trace) = algorithm1(&g, &q).unwrap();
    let branches: Vec<String> = trace.families[0]
        .branches
        .iter()
        .map(|b| b.render(&g, RenderFormat::Latex))
        .collect();
    assert_eq!(
        branches,
        [
            "0",
            "P_{\\bar z}(\\bar a, \\bar y) - P_{z}(\\bar y)",
            "P_{\\bar z}(\\bar a, y) - (P_{z}(\\bar a, y) + P_{z}(a, \\bar y))",
            "P_{z}(a, y) - P_{\\bar z}(a, y)",
        ]
    );
    assert!(expr.render(&g, RenderFormat::Text).starts_with("P_{\\bar z}(a, y) + max{0, "));
}

#[test]
fn gamma_is_absent_in_the_same_world() {
    let g = models::iv_ternary().admg;
    let q = query(&g, "Y(A=2)=2", &["Z"]);
    assert_eq!(q.instrument_levels(&g).len(), 3);
    assert!(gamma_event(&g, &q, 2, 1).unwrap().is_none());
    let e = gamma_event(&g, &q, 2, 3).unwrap().unwrap();
    assert_eq!(e.len(), 2);
    assert!(matches!(gamma_event(&g, &q, 3, 1), Err(Error::IndexOutOfRange(_))));
    assert!(matches!(gamma_event(&g, &q, 2, 4), Err(Error::IndexOutOfRange(_))));
    // treatment level a_1 is the target's, the other follows
    let levels = q.treatment_levels(&g);
    let a = g.var_id("A").unwrap();
    assert_eq!(levels[0].get(a), Some(1));
    assert_eq!(levels[1].get(a), Some(0));
}

#[test]
fn partition_shape() {
    let g = models::iv_ternary().admg;
    let q = query(&g, "Y(A=1)=1", &["Z"]);
    let kinds: Vec<PieceKind> = partition_target(&g, &q).iter().map(|p| p.kind).collect();
    assert_eq!(
        kinds,
        [PieceKind::Unboundable, PieceKind::Identified, PieceKind::GammaFamily(2)]
    );
}

#[test]
fn rejects_bad_queries() {
    let g = models::iv().admg;
    let t = parse_single(&g, "Y(A=1)=1").unwrap();
    let z = g.var_id("Z").unwrap();
    let a = g.var_id("A").unwrap();
    assert!(matches!(
        BoundQuery::new(&g, t.clone(), vec![a]),
        Err(Error::OverlappingSets(_))
    ));
    assert!(matches!(BoundQuery::new(&g, t.clone(), vec![]), Err(Error::InvalidQuery(_))));
    let swapped = parse_single(&g, "Y(Z=1)=1").unwrap();
    assert!(matches!(BoundQuery::new(&g, swapped, vec![a]), Err(Error::InvalidQuery(_))));
    assert!(BoundQuery::new(&g, t, vec![z, z]).is_ok());
}

#[test]
fn trivial_bounds_uniform() {
    let g = models::iv().admg;
    let t = parse_single(&g, "Y(A=1)=1").unwrap();
    let (lo, hi) = trivial_bounds(&g, &t).unwrap();
    let d = DiscreteDistribution::<f64>::uniform(&g);
    assert!((lo.evaluate(&d).unwrap() - 0.25).abs() < 1e-12);
    assert!((hi.evaluate(&d).unwrap() - 0.75).abs() < 1e-12);
}

/// Inclusive front-door table with `P(a1, a2, y) = .01`, `P(a1, a2, ~y) = .08`
/// and `P(a2 | a1) = p`.
fn frontdoor_table(g: &Admg, p: f64) -> DiscreteDistribution<f64> {
    let pa1 = 0.09 / p;
    let mut cells = Vec::new();
    for a1 in 0..2 {
        for a2 in 0..2 {
            for y in 0..2 {
                let w = match (a1, a2, y) {
                    (1, 1, 1) => 0.01,
                    (1, 1, 0) => 0.08,
                    (1, 0, _) => pa1 * (1.0 - p) / 2.0,
                    (0, _, _) => (1.0 - pa1) / 4.0,
                    _ => unreachable!(),
                };
                cells.push((vec![a1, a2, y], w));
            }
        }
    }
    DiscreteDistribution::from_cells(g, cells).unwrap()
}

#[test]
fn inclusive_frontdoor_numbers() {
    let g = models::inclusive_frontdoor().admg;
    let t = parse_single(&g, "Y(A1=1, A2=1)=1").unwrap();
    let a2 = g.var_id("A2").unwrap();
    let close = |x: f64, want: f64| (x - want).abs() < 1e-9;

    let d = frontdoor_table(&g, 0.1);
    let (lo, hi) = trivial_bounds(&g, &t).unwrap();
    assert!(close(lo.evaluate(&d).unwrap(), 0.01));
    assert!(close(hi.evaluate(&d).unwrap(), 0.92));
    let (lo, hi) = subset_instrument_bounds(&g, &t, &[a2]).unwrap();
    assert!(close(lo.evaluate(&d).unwrap(), 0.1));
    assert!(close(hi.evaluate(&d).unwrap(), 0.2));

    let d = frontdoor_table(&g, 0.5);
    assert!(close(lo.evaluate(&d).unwrap(), 0.02));
    assert!(close(hi.evaluate(&d).unwrap(), 0.84));

    let a1 = g.var_id("A1").unwrap();
    assert!(matches!(
        subset_instrument_bounds(&g, &t, &[a1]),
        Err(Error::NotIdentified { .. })
    ));
}

#[test]
fn pruning_off_keeps_everything() {
    let g = models::iv().admg;
    let q = query(&g, "Y(A=1)=1", &["Z"]);
    let (_, trace) = algorithm1_with(&g, &q, BoundOptions { pruning: false }).unwrap();
    let fam = &trace.families[0];
    let total: usize = fam.worlds.iter().map(|w| w.candidates.len()).sum();
    assert_eq!(fam.branches.len(), total + 1);
    // E1: 1 bare + 2 with Y; E2: 1 bare (Z is the world, A and Y required)
    assert_eq!(total, 4);
}

#[test]
fn trace_mentions_each_candidate() {
    let g = models::iv().admg;
    let q = query(&g, "Y(A=1)=1", &["Z"]);
    let (_, trace) = algorithm1(&g, &q).unwrap();
    let text = trace.render(&g, RenderFormat::Latex);
    assert!(text.contains("every outcome violating the other conjunct"));
    assert!(text.contains("bound: P_{z}(a, y) - P_{\\bar z}(a, y)"));
}

#[test]
fn ace_width_at_most_one() {
    let g = models::iv().admg;
    let (a, y, z) = (g.var_id("A").unwrap(), g.var_id("Y").unwrap(), g.var_id("Z").unwrap());
    let (lo, hi) = ace_bounds(&g, a, y, &[z]).unwrap();
    let d = DiscreteDistribution::<f64>::uniform(&g);
    let (l, h) = (lo.evaluate(&d).unwrap(), hi.evaluate(&d).unwrap());
    assert!(l <= h && h - l <= 1.0 + 1e-12);
}
