//! Compact notation for fail-prone systems.
//!
//! ```text
//! expr := term ('*' term)*
//! term := 'theta(' k ',' '{' names '}' ')' | '{' names '}' | '[' expr (',' expr)* ']'
//! ```
//!
//! `theta(k, S)` is every `k`-subset of `S`, `*` takes pairwise unions and
//! `[a, b]` is the union of alternatives. `[]` is the empty family and `{}`
//! the family holding only the empty set.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::process_set::{ProcessId, ProcessSet, SetFamily};
use crate::quorums::{normalize_antichain, AsymFailProneSystem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("syntax error at byte {pos}: expected {expected}")]
    Syntax { pos: usize, expected: &'static str },

    #[error("unknown process name `{name}` at byte {pos}")]
    UnknownName { pos: usize, name: String },

    #[error("threshold k = {k} out of range 1..={len} at byte {pos}")]
    KOutOfRange { pos: usize, k: usize, len: usize },

    #[error("duplicate process name `{name}` in threshold at byte {pos}")]
    DuplicateName { pos: usize, name: String },

    #[error("bad roster: {0}")]
    Roster(String),

    #[error("process {process}: {source}")]
    Row {
        process: String,
        #[source]
        source: Box<DslError>,
    },
}

impl DslError {
    /// Byte offset of the error in its expression, when it has one.
    pub fn position(&self) -> Option<usize> {
        match self {
            DslError::Syntax { pos, .. }
            | DslError::UnknownName { pos, .. }
            | DslError::KOutOfRange { pos, .. }
            | DslError::DuplicateName { pos, .. } => Some(*pos),
            DslError::Roster(_) => None,
            DslError::Row { source, .. } => source.position(),
        }
    }
}

/// Ordered process names; position in the roster is the process index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    names: Vec<String>,
    index: HashMap<String, ProcessId>,
}

impl Roster {
    pub fn new<S: Into<String>, I: IntoIterator<Item = S>>(names: I) -> Result<Self, DslError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() || names.len() > crate::process_set::MAX_PROCESSES {
            return Err(DslError::Roster(format!(
                "roster size {} outside 1..=64",
                names.len()
            )));
        }
        let mut index = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if !is_name(name) {
                return Err(DslError::Roster(format!("invalid process name `{name}`")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(DslError::Roster(format!("duplicate process name `{name}`")));
            }
        }
        Ok(Roster { names, index })
    }

    /// `p1, .., pn`.
    pub fn numbered(n: usize) -> Self {
        Roster::new((1..=n).map(|i| format!("p{i}"))).expect("numbered roster is valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, p: ProcessId) -> &str {
        &self.names[p]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<ProcessId> {
        self.index.get(name).copied()
    }

    /// Renders a set using roster names, `{a,b}`.
    pub fn format_set(&self, s: &ProcessSet) -> String {
        let inner: Vec<&str> = s.iter().map(|p| self.name(p)).collect();
        format!("{{{}}}", inner.join(","))
    }
}

fn is_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrustExpr {
    Literal(Vec<ProcessId>),
    Threshold { k: usize, names: Vec<ProcessId> },
    Product(Box<TrustExpr>, Box<TrustExpr>),
    UnionList(Vec<TrustExpr>),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    roster: &'a Roster,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8, expected: &'static str) -> Result<(), DslError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(DslError::Syntax {
                pos: self.pos,
                expected,
            })
        }
    }

    fn ident(&mut self) -> Option<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos || self.src[start].is_ascii_digit() {
            self.pos = start;
            return None;
        }
        Some((
            start,
            std::str::from_utf8(&self.src[start..self.pos]).expect("ascii"),
        ))
    }

    fn number(&mut self) -> Result<usize, DslError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(DslError::Syntax {
                pos: start,
                expected: "a number",
            })
    }

    fn expr(&mut self) -> Result<TrustExpr, DslError> {
        let mut left = self.term()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let right = self.term()?;
            left = TrustExpr::Product(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<TrustExpr, DslError> {
        match self.peek() {
            Some(b'{') => Ok(TrustExpr::Literal(self.name_set()?.1)),
            Some(b'[') => {
                self.pos += 1;
                let mut alts = Vec::new();
                if self.peek() == Some(b']') {
                    self.pos += 1;
                    return Ok(TrustExpr::UnionList(alts));
                }
                loop {
                    alts.push(self.expr()?);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b']') => {
                            self.pos += 1;
                            return Ok(TrustExpr::UnionList(alts));
                        }
                        _ => {
                            return Err(DslError::Syntax {
                                pos: self.pos,
                                expected: "`,` or `]`",
                            })
                        }
                    }
                }
            }
            _ => {
                let at = self.pos;
                match self.ident() {
                    Some((_, "theta")) => {}
                    _ => {
                        return Err(DslError::Syntax {
                            pos: at,
                            expected: "`theta(`, `{` or `[`",
                        });
                    }
                }
                self.expect(b'(', "`(`")?;
                let k_pos = {
                    self.skip_ws();
                    self.pos
                };
                let k = self.number()?;
                self.expect(b',', "`,`")?;
                let (set_pos, names) = self.name_set()?;
                self.expect(b')', "`)`")?;
                let mut seen = ProcessSet::empty(self.roster.len());
                for &p in &names {
                    if seen.contains(p) {
                        return Err(DslError::DuplicateName {
                            pos: set_pos,
                            name: self.roster.name(p).to_string(),
                        });
                    }
                    seen.insert(p);
                }
                if k == 0 || k > names.len() {
                    return Err(DslError::KOutOfRange {
                        pos: k_pos,
                        k,
                        len: names.len(),
                    });
                }
                Ok(TrustExpr::Threshold { k, names })
            }
        }
    }

    fn name_set(&mut self) -> Result<(usize, Vec<ProcessId>), DslError> {
        self.expect(b'{', "`{`")?;
        let start = self.pos - 1;
        let mut out = Vec::new();
        if self.peek() == Some(b'}') {
            self.pos += 1;
            return Ok((start, out));
        }
        loop {
            let Some((at, name)) = self.ident() else {
                return Err(DslError::Syntax {
                    pos: self.pos,
                    expected: "a process name",
                });
            };
            let p = self
                .roster
                .lookup(name)
                .ok_or_else(|| DslError::UnknownName {
                    pos: at,
                    name: name.to_string(),
                })?;
            out.push(p);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b'}') => {
                    self.pos += 1;
                    return Ok((start, out));
                }
                _ => {
                    return Err(DslError::Syntax {
                        pos: self.pos,
                        expected: "`,` or `}`",
                    })
                }
            }
        }
    }
}

pub fn parse(text: &str, roster: &Roster) -> Result<TrustExpr, DslError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        roster,
    };
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(DslError::Syntax {
            pos: p.pos,
            expected: "end of input",
        });
    }
    Ok(e)
}

/// The raw family denoted by `expr`, before antichain normalization.
pub fn expand(expr: &TrustExpr, n: usize) -> Vec<ProcessSet> {
    match expr {
        TrustExpr::Literal(names) => vec![ProcessSet::from_indices(n, names.iter().copied())],
        TrustExpr::Threshold { k, names } => ProcessSet::k_subsets_of(n, names.clone(), *k),
        TrustExpr::Product(a, b) => {
            let left = expand(a, n);
            let right = expand(b, n);
            let mut out = Vec::with_capacity(left.len() * right.len());
            for x in &left {
                for y in &right {
                    out.push(x.union(y));
                }
            }
            out
        }
        TrustExpr::UnionList(alts) => alts.iter().flat_map(|a| expand(a, n)).collect(),
    }
}

pub fn eval(expr: &TrustExpr, n: usize) -> SetFamily {
    let raw = SetFamily::new(n, expand(expr, n)).expect("expression sets share n");
    normalize_antichain(&raw)
}

/// Parses and evaluates against `roster`.
pub fn eval_str(text: &str, roster: &Roster) -> Result<SetFamily, DslError> {
    Ok(eval(&parse(text, roster)?, roster.len()))
}

/// Union-of-literals rendering: `{a,b}` for one set, `[{..},{..}]` otherwise.
pub fn format_family(family: &SetFamily, roster: &Roster) -> String {
    let parts: Vec<String> = family.iter().map(|s| roster.format_set(s)).collect();
    if parts.len() == 1 {
        parts.into_iter().next().unwrap()
    } else {
        format!("[{}]", parts.join(","))
    }
}

/// One expression per roster entry, in roster order.
pub fn parse_system<S: AsRef<str>>(
    rows: &[S],
    roster: &Roster,
) -> Result<AsymFailProneSystem, DslError> {
    if rows.len() != roster.len() {
        return Err(DslError::Roster(format!(
            "{} fail-prone expressions for {} processes",
            rows.len(),
            roster.len()
        )));
    }
    let fams = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            eval_str(r.as_ref(), roster).map_err(|e| DslError::Row {
                process: roster.name(i).to_string(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AsymFailProneSystem::new(roster.len(), fams).expect("rows built over roster size"))
}

impl fmt::Display for TrustExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn names(f: &mut fmt::Formatter<'_>, xs: &[ProcessId]) -> fmt::Result {
            f.write_str("{")?;
            for (i, p) in xs.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "p{}", p + 1)?;
            }
            f.write_str("}")
        }
        match self {
            TrustExpr::Literal(xs) => names(f, xs),
            TrustExpr::Threshold { k, names: xs } => {
                write!(f, "theta({k},")?;
                names(f, xs)?;
                f.write_str(")")
            }
            TrustExpr::Product(a, b) => write!(f, "{a} * {b}"),
            TrustExpr::UnionList(alts) => {
                f.write_str("[")?;
                for (i, a) in alts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str("]")
            }
        }
    }
}
