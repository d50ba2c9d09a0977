//! Text format for causal graphs.
//!
//! ```text
//! # comment
//! node Z;                 # binary {0,1} by default
//! node A in {lo, hi};
//! hidden H;
//! Z -> A;
//! H -> A;
//! A <-> Y;
//! ```
//!
//! Statements end with `;` or a newline, so the `;` is optional on a line
//! of its own. Identifiers may be used
//! before they are declared but must be declared somewhere in the file.
//!
//! A file without `<->` is a hidden-variable DAG and gets projected. A file
//! with `<->` and no `hidden` declarations is read as an ADMG directly. When
//! both appear, every bidirected edge is replaced by a fresh hidden parent of
//! its endpoints before projecting.

use std::collections::BTreeMap;

use super::{Admg, CausalGraph, CausalModel, Variable};
use crate::error::{ParseError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Arrow,
    BiArrow,
    LBrace,
    RBrace,
    Comma,
    Semi,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '\''
}

fn tokenize_line(line: &str, lineno: usize) -> std::result::Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let push = |tok, out: &mut Vec<Spanned>| out.push(Spanned { tok, col });
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '{' => {
                push(Tok::LBrace, &mut out);
                i += 1;
            }
            '}' => {
                push(Tok::RBrace, &mut out);
                i += 1;
            }
            ',' => {
                push(Tok::Comma, &mut out);
                i += 1;
            }
            ';' => {
                push(Tok::Semi, &mut out);
                i += 1;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                push(Tok::Arrow, &mut out);
                i += 2;
            }
            '<' if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') => {
                push(Tok::BiArrow, &mut out);
                i += 3;
            }
            c if is_ident_char(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                push(Tok::Ident(word), &mut out);
            }
            other => {
                return Err(ParseError::new(
                    lineno,
                    col,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    Ok(out)
}

struct Edge {
    from: String,
    to: String,
    bidirected: bool,
    line: usize,
    col_from: usize,
    col_to: usize,
}

enum Decl {
    Observed(Vec<String>),
    Hidden,
}

/// Parses the graph format into a [`CausalModel`].
pub fn parse_model(src: &str) -> Result<CausalModel> {
    let mut order: Vec<String> = Vec::new();
    let mut decls: BTreeMap<String, Decl> = BTreeMap::new();
    let mut edges: Vec<Edge> = Vec::new();

    for (idx, raw) in src.lines().enumerate() {
        let lineno = idx + 1;
        let toks = tokenize_line(raw, lineno)?;
        if toks.is_empty() {
            continue;
        }
        let end_col = raw.split('#').next().unwrap_or("").trim_end().len() + 1;
        let mut cur = Cursor {
            toks: &toks,
            pos: 0,
            line: lineno,
            end_col,
        };
        while cur.pos < toks.len() {
            let first = cur.ident("a statement")?;
            match first.0.as_str() {
                "node" | "hidden" if !matches!(cur.peek(), Some(Tok::Arrow | Tok::BiArrow)) => {
                    let (name, ncol) = cur.ident("a variable name")?;
                    if decls.contains_key(&name) {
                        return Err(ParseError::new(
                            lineno,
                            ncol,
                            format!("`{name}` declared twice"),
                        )
                        .into());
                    }
                    if first.0 == "node" {
                        let domain = if cur.peek() == Some(&Tok::Ident("in".into())) {
                            cur.pos += 1;
                            cur.domain()?
                        } else {
                            vec!["0".to_string(), "1".to_string()]
                        };
                        if domain.is_empty() {
                            return Err(ParseError::new(
                                lineno,
                                ncol,
                                format!("`{name}` has an empty domain"),
                            )
                            .into());
                        }
                        decls.insert(name.clone(), Decl::Observed(domain));
                    } else {
                        if cur.peek() == Some(&Tok::Ident("in".into())) {
                            let col = cur.col();
                            return Err(ParseError::new(
                                lineno,
                                col,
                                format!("hidden variable `{name}` cannot declare a domain"),
                            )
                            .into());
                        }
                        decls.insert(name.clone(), Decl::Hidden);
                    }
                    order.push(name);
                }
                _ => {
                    let (from, col_from) = first;
                    let bidirected = match cur.next() {
                        Some(Tok::Arrow) => false,
                        Some(Tok::BiArrow) => true,
                        _ => {
                            return Err(ParseError::new(
                                lineno,
                                col_from,
                                format!("expected `node`, `hidden` or an edge, found `{from}`"),
                            )
                            .into())
                        }
                    };
                    let (to, col_to) = cur.ident("an edge endpoint")?;
                    edges.push(Edge {
                        from,
                        to,
                        bidirected,
                        line: lineno,
                        col_from,
                        col_to,
                    });
                }
            }
            cur.finish()?;
        }
    }

    let observed: Vec<&String> = order
        .iter()
        .filter(|n| matches!(decls[*n], Decl::Observed(_)))
        .collect();
    let hidden: Vec<&String> = order
        .iter()
        .filter(|n| matches!(decls[*n], Decl::Hidden))
        .collect();
    let index: BTreeMap<&String, usize> = observed
        .iter()
        .chain(hidden.iter())
        .enumerate()
        .map(|(i, n)| (*n, i))
        .collect();
    let lookup = |name: &String, line: usize, col: usize| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| ParseError::new(line, col, format!("unknown identifier `{name}`")))
    };

    let vars: Vec<Variable> = observed
        .iter()
        .map(|n| match &decls[*n] {
            Decl::Observed(dom) => Variable::new((*n).clone(), dom.clone()),
            Decl::Hidden => unreachable!(),
        })
        .collect::<Result<_>>()?;

    let mut directed = Vec::new();
    let mut bidirected = Vec::new();
    for e in &edges {
        let a = lookup(&e.from, e.line, e.col_from)?;
        let b = lookup(&e.to, e.line, e.col_to)?;
        if e.bidirected {
            for (idx, col) in [(a, e.col_from), (b, e.col_to)] {
                if idx >= observed.len() {
                    return Err(ParseError::new(
                        e.line,
                        col,
                        "bidirected edges must join observed variables",
                    )
                    .into());
                }
            }
            bidirected.push((a, b));
        } else {
            directed.push((a, b));
        }
    }

    let hidden_names: Vec<String> = hidden.iter().map(|s| (*s).clone()).collect();
    if bidirected.is_empty() {
        let dag = CausalGraph::new(vars, hidden_names, directed)?;
        Ok(CausalModel::from_dag(dag))
    } else if hidden_names.is_empty() {
        Ok(CausalModel::from_admg(Admg::new(
            vars, directed, bidirected,
        )?))
    } else {
        let n_obs = vars.len();
        let mut hidden_names = hidden_names;
        for (a, b) in bidirected {
            let mut name = format!("U_{}_{}", vars[a].name, vars[b].name);
            while index.contains_key(&name) || hidden_names.contains(&name) {
                name.push('\'');
            }
            let h = n_obs + hidden_names.len();
            hidden_names.push(name);
            directed.push((h, a));
            directed.push((h, b));
        }
        let dag = CausalGraph::new(vars, hidden_names, directed)?;
        Ok(CausalModel::from_dag(dag))
    }
}

struct Cursor<'a> {
    toks: &'a [Spanned],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn ident(&mut self, what: &str) -> std::result::Result<(String, usize), ParseError> {
        let col = self.col();
        match self.next() {
            Some(Tok::Ident(s)) => Ok((s, col)),
            _ => Err(ParseError::new(self.line, col, format!("expected {what}"))),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> std::result::Result<(), ParseError> {
        let col = self.col();
        if self.next() == Some(tok) {
            Ok(())
        } else {
            Err(ParseError::new(self.line, col, format!("expected {what}")))
        }
    }

    fn domain(&mut self) -> std::result::Result<Vec<String>, ParseError> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut values = Vec::new();
        if self.peek() == Some(&Tok::RBrace) {
            self.pos += 1;
            return Ok(values);
        }
        loop {
            let (v, col) = self.ident("a value label")?;
            if values.contains(&v) {
                return Err(ParseError::new(
                    self.line,
                    col,
                    format!("duplicate value `{v}`"),
                ));
            }
            values.push(v);
            let col = self.col();
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RBrace) => break,
                _ => return Err(ParseError::new(self.line, col, "expected `,` or `}`")),
            }
        }
        Ok(values)
    }

    /// A statement ends at `;` or at the end of the line.
    fn finish(&mut self) -> std::result::Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(Tok::Semi) => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(ParseError::new(
                self.line,
                self.col(),
                "expected `;` or end of line",
            )),
        }
    }
}
