//! Text form of counterfactual events.
//!
//! ```text
//! event    := atom ( '&' atom )*
//! atom     := NAME [ '(' [ setting ( ',' setting )* ] ')' ] '=' LABEL
//! setting  := NAME '=' LABEL
//! ```
//!
//! `Y(A=1)=0` reads "Y is 0 when A is set to 1"; an atom without parentheses
//! is observational. Atoms sharing an intervention are merged into one
//! conjunct. Names and labels are `[A-Za-z0-9_.']+`; whitespace is ignored.
//! [`format_event`] prints worlds in a canonical order, so formatting then
//! parsing gives back the same event.

use super::{Assignment, CounterfactualEvent, SingleWorldEvent};
use crate::error::{Error, ParseError, Result};
use crate::graph::Admg;

struct Lexer<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.char_indices().collect(),
            pos: 0,
            src,
        }
    }

    fn column(&self) -> usize {
        self.chars.get(self.pos).map_or(self.src.chars().count() + 1, |_| self.pos + 1)
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(1, self.column(), msg)
    }

    fn eat(&mut self, want: char) -> std::result::Result<(), ParseError> {
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{want}`")))
        }
    }

    fn word(&mut self) -> std::result::Result<(String, usize), ParseError> {
        self.skip_ws();
        let col = self.column();
        let start = self.pos;
        while self
            .chars
            .get(self.pos)
            .is_some_and(|&(_, c)| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '\''))
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a name or value"));
        }
        Ok((self.chars[start..self.pos].iter().map(|&(_, c)| c).collect(), col))
    }
}

fn resolve(
    g: &Admg,
    name: &str,
    ncol: usize,
    label: &str,
    lcol: usize,
) -> std::result::Result<(crate::graph::VarId, usize), ParseError> {
    let v = g
        .var_id(name)
        .map_err(|_| ParseError::new(1, ncol, format!("unknown variable `{name}`")))?;
    let x = g.value_index(v, label).map_err(|_| {
        ParseError::new(1, lcol, format!("`{label}` is not a value of `{name}`"))
    })?;
    Ok((v, x))
}

/// Parses a conjunction of counterfactual atoms.
pub fn parse_event(g: &Admg, src: &str) -> Result<CounterfactualEvent> {
    let mut lx = Lexer::new(src);
    let mut event = CounterfactualEvent::new();
    loop {
        let (name, ncol) = lx.word()?;
        let mut world = Assignment::new();
        if lx.peek() == Some('(') {
            lx.pos += 1;
            if lx.peek() == Some(')') {
                lx.pos += 1;
            } else {
                loop {
                    let (w, wcol) = lx.word()?;
                    lx.eat('=')?;
                    let (l, lcol) = lx.word()?;
                    let (v, x) = resolve(g, &w, wcol, &l, lcol)?;
                    if world.insert(v, x).is_some() {
                        return Err(ParseError::new(1, wcol, format!("`{w}` set twice")).into());
                    }
                    match lx.peek() {
                        Some(',') => lx.pos += 1,
                        Some(')') => {
                            lx.pos += 1;
                            break;
                        }
                        _ => return Err(lx.err("expected `,` or `)`").into()),
                    }
                }
            }
        }
        lx.eat('=')?;
        let (label, lcol) = lx.word()?;
        let (v, x) = resolve(g, &name, ncol, &label, lcol)?;
        let atom = SingleWorldEvent::new(world, Assignment::new().with(v, x));
        atom.validate(g)?;
        event = event.and_single(&atom).ok_or_else(|| {
            Error::InvalidEvent(format!("`{name}` given two different values in one world"))
        })?;
        match lx.peek() {
            None => break,
            Some('&') => lx.pos += 1,
            Some(_) => return Err(lx.err("expected `&` or end of input").into()),
        }
    }
    Ok(event)
}

/// Parses an event that must live in a single world.
pub fn parse_single(g: &Admg, src: &str) -> Result<SingleWorldEvent> {
    let e = parse_event(g, src)?;
    if e.len() != 1 {
        return Err(Error::InvalidEvent(format!(
            "expected a single-world event, found {} worlds",
            e.len()
        )));
    }
    let single = e.conjuncts().next().expect("one conjunct");
    Ok(single)
}

pub fn format_single(g: &Admg, e: &SingleWorldEvent) -> String {
    let world = e
        .world
        .iter()
        .map(|(v, x)| format!("{}={}", g.name(v), g.label(v, x)))
        .collect::<Vec<_>>()
        .join(",");
    e.outcome
        .iter()
        .map(|(v, x)| {
            if world.is_empty() {
                format!("{}={}", g.name(v), g.label(v, x))
            } else {
                format!("{}({world})={}", g.name(v), g.label(v, x))
            }
        })
        .collect::<Vec<_>>()
        .join(" & ")
}

pub fn format_event(g: &Admg, e: &CounterfactualEvent) -> String {
    e.conjuncts()
        .map(|c| format_single(g, &c))
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" & ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    #[test]
    fn parse_and_format() {
        let m = models::iv();
        let g = &m.admg;
        let e = parse_event(g, "Y(Z=1)=1 & A(Z=1)=1").unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(format_event(g, &e), "A(Z=1)=1 & Y(Z=1)=1");

        let e = parse_event(g, " A(Z=0)=0 & A(Z=1)=1&Y(Z=1)=1 ").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(parse_event(g, &format_event(g, &e)).unwrap(), e);

        let s = parse_single(g, "Y(A=1,Z=0)=1").unwrap();
        assert_eq!(s.world.len(), 2);
        let s = parse_single(g, "Y=1").unwrap();
        assert!(s.world.is_empty());
        assert_eq!(format_single(g, &s), "Y=1");
    }

    #[test]
    fn errors_carry_columns() {
        let m = models::iv();
        let g = &m.admg;
        let err = |s: &str| match parse_event(g, s) {
            Err(Error::Parse(p)) => p.column,
            other => panic!("expected parse error for {s:?}, got {other:?}"),
        };
        assert_eq!(err("Q(A=1)=1"), 1);
        assert_eq!(err("Y(A=7)=1"), 5);
        assert_eq!(err("Y(A=1)"), 7);
        assert_eq!(err("Y(A=1)=1 |"), 10);
        assert!(matches!(parse_event(g, "Y(Y=1)=1"), Err(Error::InvalidEvent(_))));
        assert!(matches!(parse_event(g, "Y=1 & Y=0"), Err(Error::InvalidEvent(_))));
        assert!(parse_single(g, "Y(A=1)=1 & Y(A=0)=1").is_err());
    }

    #[test]
    fn labels_from_domains() {
        let m = models::iv_ternary();
        let g = &m.admg;
        let e = parse_single(g, "A(Z=3)=2").unwrap();
        assert_eq!(e.world.get(g.var_id("Z").unwrap()), Some(2));
        assert_eq!(e.outcome.get(g.var_id("A").unwrap()), Some(1));
    }
}
