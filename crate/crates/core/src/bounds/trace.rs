use std::fmt::Write as _;

use super::candidates::{CandidateRecord, PruneReason, Side};
use super::PartitionPiece;
use crate::events::{Assignment, CfFormula, Intervention, SingleWorldEvent};
use crate::graph::{Admg, VarId};
use crate::identify::{compress_outcomes, value_literal, RenderFormat, SymbolicExpr};

/// Everything [`super::algorithm1`] looked at, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivationTrace {
    pub target: SingleWorldEvent,
    pub instrument: Vec<VarId>,
    pub pieces: Vec<PartitionPiece>,
    pub identified: SymbolicExpr,
    pub families: Vec<FamilyTrace>,
}

/// One `k`: the `γ_j^k` for every `j` and the branches of their max.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTrace {
    pub k: usize,
    pub level: Assignment,
    pub worlds: Vec<WorldTrace>,
    /// Including the leading zero branch.
    pub branches: Vec<SymbolicExpr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldTrace {
    pub j: usize,
    pub left: SingleWorldEvent,
    pub right: SingleWorldEvent,
    /// Empty when `z_j = z_1`.
    pub candidates: Vec<CandidateRecord>,
}

impl WorldTrace {
    pub fn candidates_on(&self, side: Side) -> impl Iterator<Item = &CandidateRecord> {
        self.candidates.iter().filter(move |r| r.side == side)
    }
}

fn and(fmt: RenderFormat) -> &'static str {
    match fmt {
        RenderFormat::Latex => " \\land ",
        RenderFormat::Text => " & ",
    }
}

fn or(fmt: RenderFormat) -> &'static str {
    match fmt {
        RenderFormat::Latex => " \\lor ",
        RenderFormat::Text => " | ",
    }
}

fn world_suffix(g: &Admg, world: &Intervention) -> String {
    let w: Vec<String> = world.iter().map(|(v, x)| value_literal(g, v, x)).collect();
    if w.is_empty() {
        String::new()
    } else {
        format!("({})", w.join(", "))
    }
}

fn render_outcome(g: &Admg, world: &Intervention, o: &Assignment, fmt: RenderFormat) -> String {
    if o.is_empty() {
        return "\\top".into();
    }
    let suffix = world_suffix(g, world);
    o.iter()
        .map(|(v, x)| format!("{}{suffix}", value_literal(g, v, x)))
        .collect::<Vec<_>>()
        .join(and(fmt))
}

/// `a(\bar z) \land \bar y(\bar z)` style.
pub fn render_single(g: &Admg, e: &SingleWorldEvent, fmt: RenderFormat) -> String {
    render_outcome(g, &e.world, &e.outcome, fmt)
}

fn render_cells(g: &Admg, world: &Intervention, cells: &[Assignment], fmt: RenderFormat) -> String {
    let parts = compress_outcomes(g, cells);
    match parts.len() {
        0 => "\\bot".into(),
        1 => render_outcome(g, world, &parts[0], fmt),
        _ => parts
            .iter()
            .map(|p| {
                let s = render_outcome(g, world, p, fmt);
                if p.len() > 1 {
                    format!("({s})")
                } else {
                    s
                }
            })
            .collect::<Vec<_>>()
            .join(or(fmt)),
    }
}

fn render_formula(g: &Admg, f: &CfFormula, fmt: RenderFormat) -> String {
    let (not, t, fl) = match fmt {
        RenderFormat::Latex => ("\\neg ", "\\top", "\\bot"),
        RenderFormat::Text => ("!", "true", "false"),
    };
    let group = |fs: &[CfFormula], sep: &str| {
        fs.iter()
            .map(|f| {
                let s = render_formula(g, f, fmt);
                let compound = match f {
                    CfFormula::And(_) | CfFormula::Or(_) => true,
                    CfFormula::Event(_) => sep == or(fmt) && s.contains(and(fmt)),
                    _ => false,
                };
                if compound {
                    format!("({s})")
                } else {
                    s
                }
            })
            .collect::<Vec<_>>()
            .join(sep)
    };
    match f {
        CfFormula::True => t.into(),
        CfFormula::False => fl.into(),
        CfFormula::Event(e) => e
            .conjuncts()
            .map(|c| render_single(g, &c, fmt))
            .collect::<Vec<_>>()
            .join(and(fmt)),
        CfFormula::Not(inner) => format!("{not}({})", render_formula(g, inner, fmt)),
        CfFormula::And(fs) => group(fs, and(fmt)),
        CfFormula::Or(fs) => group(fs, or(fmt)),
    }
}

impl DerivationTrace {
    pub fn render(&self, g: &Admg, fmt: RenderFormat) -> String {
        let mut out = String::new();
        let target = render_single(g, &self.target, fmt);
        let _ = writeln!(out, "Target: {target}");
        let _ = writeln!(out, "Partition of the target:");
        for p in &self.pieces {
            let _ = writeln!(out, "  [{:?}] {}", p.kind, render_formula(g, &p.formula, fmt));
        }
        let _ = writeln!(
            out,
            "Identified piece: {}",
            self.identified.render(g, fmt)
        );
        for fam in &self.families {
            for w in &fam.worlds {
                let gamma = format!(
                    "{}{}{}",
                    render_single(g, &w.left, fmt),
                    and(fmt),
                    render_single(g, &w.right, fmt)
                );
                let _ = writeln!(out, "\nPiece k={}, j={}: {gamma}", fam.k, w.j);
                if w.left.world == w.right.world {
                    let _ = writeln!(out, "  same world on both sides; contributes nothing");
                    continue;
                }
                self.render_world(g, w, fmt, &mut out);
            }
            let branches: Vec<String> = fam.branches.iter().map(|b| b.render(g, fmt)).collect();
            let _ = writeln!(out, "\nBranches for k={}:", fam.k);
            for b in branches {
                let _ = writeln!(out, "  {b}");
            }
        }
        out
    }

    fn render_world(&self, g: &Admg, w: &WorldTrace, fmt: RenderFormat, out: &mut String) {
        for (side, req) in [(Side::E1, &w.left), (Side::E2, &w.right)] {
            let usable: Vec<&CandidateRecord> = w
                .candidates_on(side)
                .filter(|r| {
                    !matches!(
                        r.pruned,
                        Some(PruneReason::Incompatible | PruneReason::BoundIrrelevant)
                    )
                })
                .collect();
            let _ = writeln!(
                out,
                "  {side:?} candidates (entail {}):",
                render_single(g, req, fmt)
            );
            for r in &usable {
                let _ = writeln!(out, "    {}", render_single(g, &r.event, fmt));
            }
            for r in w.candidates_on(side) {
                match &r.pruned {
                    Some(PruneReason::Incompatible) => {
                        let _ = writeln!(
                            out,
                            "  dropped {}: contradicts the other conjunct",
                            render_single(g, &r.event, fmt)
                        );
                    }
                    Some(PruneReason::BoundIrrelevant) => {
                        let _ = writeln!(
                            out,
                            "  dropped {}: every outcome violating the other conjunct is compatible with it",
                            render_single(g, &r.event, fmt)
                        );
                    }
                    _ => {}
                }
            }
        }
        for r in &w.candidates {
            if matches!(
                r.pruned,
                Some(PruneReason::Incompatible | PruneReason::BoundIrrelevant)
            ) {
                continue;
            }
            let req = if r.side == Side::E1 { &w.right } else { &w.left };
            let _ = writeln!(out, "\n  {:?} = {}", r.side, render_single(g, &r.event, fmt));
            let _ = writeln!(
                out,
                "    compatible outcomes: {}",
                render_cells(g, &req.world, &r.bound.compatible, fmt)
            );
            let _ = writeln!(
                out,
                "    outside {}: {}",
                render_single(g, req, fmt),
                render_cells(g, &req.world, &r.bound.subtracted, fmt)
            );
            let _ = writeln!(out, "    bound: {}", r.bound.expr.render(g, fmt));
            match &r.pruned {
                Some(PruneReason::SameCompatibility(e)) => {
                    let _ = writeln!(
                        out,
                        "    dropped: {} has the same compatible outcomes",
                        render_single(g, e, fmt)
                    );
                }
                Some(PruneReason::Duplicate) => {
                    let _ = writeln!(out, "    dropped: repeats an earlier branch");
                }
                Some(PruneReason::Dominated) => {
                    let _ = writeln!(out, "    dropped: another branch is larger term by term");
                }
                _ => {}
            }
        }
    }
}
