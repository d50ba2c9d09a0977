//! Versioned JSON form of [`SymbolicExpr`].
//!
//! ```json
//! {"version": 1,
//!  "expr": {"diff": [{"term": {"world": [["Z", "1"]], "event": [["A", "1"]]}},
//!                    {"const": 0.5}]}}
//! ```
//!
//! Nodes are `const`, `term`, `sum`, `diff` (two-element list), `max` and
//! `min`. Variables and values are written by name and label, so a document
//! can only be read back against the graph it was produced from. The
//! identification formula is recomputed on load.

use serde::{Deserialize, Serialize};

use super::{SymbolicExpr, Term};
use crate::error::{Error, Result};
use crate::graph::Admg;

pub const EXPR_JSON_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Document {
    version: u32,
    expr: Node,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum Node {
    Const(f64),
    Term {
        world: Vec<(String, String)>,
        event: Vec<(String, String)>,
    },
    Sum(Vec<Node>),
    Diff(Box<(Node, Node)>),
    Max(Vec<Node>),
    Min(Vec<Node>),
}

fn to_node(g: &Admg, e: &SymbolicExpr) -> Node {
    let pair = |v, x| (g.name(v).to_string(), g.label(v, x).to_string());
    match e {
        SymbolicExpr::Constant(c) => Node::Const(*c),
        SymbolicExpr::Term(t) => Node::Term {
            world: t.world.iter().map(|(v, x)| pair(v, x)).collect(),
            event: t.event.iter().map(|&(v, x)| pair(v, x)).collect(),
        },
        SymbolicExpr::Sum(xs) => Node::Sum(xs.iter().map(|x| to_node(g, x)).collect()),
        SymbolicExpr::Diff(a, b) => Node::Diff(Box::new((to_node(g, a), to_node(g, b)))),
        SymbolicExpr::Max(xs) => Node::Max(xs.iter().map(|x| to_node(g, x)).collect()),
        SymbolicExpr::Min(xs) => Node::Min(xs.iter().map(|x| to_node(g, x)).collect()),
    }
}

fn from_node(g: &Admg, n: Node) -> Result<SymbolicExpr> {
    let resolve = |(name, label): (String, String)| -> Result<_> {
        let v = g.var_id(&name)?;
        Ok((v, g.value_index(v, &label)?))
    };
    let list = |xs: Vec<Node>| -> Result<Vec<SymbolicExpr>> {
        xs.into_iter().map(|x| from_node(g, x)).collect()
    };
    Ok(match n {
        Node::Const(c) if c.is_finite() => SymbolicExpr::Constant(c),
        Node::Const(c) => return Err(Error::InvalidExpression(format!("non-finite constant {c}"))),
        Node::Term { world, event } => {
            let mut w = crate::events::Assignment::new();
            for p in world {
                let (v, x) = resolve(p)?;
                if w.insert(v, x).is_some() {
                    return Err(Error::InvalidExpression("variable set twice in a world".into()));
                }
            }
            let e = event.into_iter().map(resolve).collect::<Result<Vec<_>>>()?;
            SymbolicExpr::Term(Term::new(g, w, e)?)
        }
        Node::Sum(xs) => SymbolicExpr::Sum(list(xs)?),
        Node::Diff(ab) => {
            let (a, b) = *ab;
            SymbolicExpr::diff(from_node(g, a)?, from_node(g, b)?)
        }
        Node::Max(xs) | Node::Min(xs) if xs.is_empty() => {
            return Err(Error::InvalidExpression("max/min needs at least one branch".into()))
        }
        Node::Max(xs) => SymbolicExpr::Max(list(xs)?),
        Node::Min(xs) => SymbolicExpr::Min(list(xs)?),
    })
}

pub fn expr_to_json(g: &Admg, e: &SymbolicExpr) -> String {
    let doc = Document {
        version: EXPR_JSON_VERSION,
        expr: to_node(g, e),
    };
    serde_json::to_string(&doc).expect("expression serializes")
}

pub fn expr_from_json(g: &Admg, text: &str) -> Result<SymbolicExpr> {
    let doc: Document = serde_json::from_str(text)?;
    if doc.version != EXPR_JSON_VERSION {
        return Err(Error::InvalidExpression(format!(
            "unsupported expression version {}",
            doc.version
        )));
    }
    from_node(g, doc.expr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn round_trip() {
        let cov = models::iv_covariates();
        let g = &cov.admg;
        let id = |n| g.var_id(n).unwrap();
        let t = |z, ev: Vec<_>| {
            SymbolicExpr::Term(Term::new(g, [(id("Z"), z)].into_iter().collect(), ev).unwrap())
        };
        let e = SymbolicExpr::Sum(vec![
            t(0, vec![(id("A"), 0), (id("Y"), 0)]),
            SymbolicExpr::Max(vec![
                SymbolicExpr::Constant(0.0),
                SymbolicExpr::diff(
                    t(1, vec![(id("Y"), 1), (id("C"), 0)]),
                    SymbolicExpr::Min(vec![SymbolicExpr::Constant(0.25)]),
                ),
            ]),
        ]);
        let text = expr_to_json(g, &e);
        assert!(text.starts_with("{\"version\":1"));
        assert_eq!(expr_from_json(g, &text).unwrap(), e);
    }

    #[test]
    fn rejects_bad_documents() {
        let iv = models::iv();
        let g = &iv.admg;
        assert!(expr_from_json(g, r#"{"version":2,"expr":{"const":0}}"#).is_err());
        assert!(expr_from_json(g, r#"{"version":1,"expr":{"max":[]}}"#).is_err());
        assert!(expr_from_json(
            g,
            r#"{"version":1,"expr":{"term":{"world":[["A","1"]],"event":[["Y","1"]]}}}"#
        )
        .is_err());
        assert!(expr_from_json(
            g,
            r#"{"version":1,"expr":{"term":{"world":[["Q","1"]],"event":[]}}}"#
        )
        .is_err());
    }
}
