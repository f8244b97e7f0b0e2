//! Co-safe LTL formulas: the proposition universe, parsing, pretty-printing,
//! and finite-word satisfaction.
//!
//! `holds_on` is the independent good-prefix oracle: the automata compiler is
//! differentially tested against it, never derived from it.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Upper bound on the proposition universe; labels are bitsets in a `u32`.
pub const MAX_AP: usize = 32;

/// Words reserved by the formula grammar; they cannot name propositions.
pub const RESERVED: [&str; 4] = ["true", "X", "F", "U"];

/// Returns true iff `s` matches `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut bytes = s.bytes();
    match bytes.next() {
        Some(b) if b == b'_' || b.is_ascii_alphabetic() => {}
        _ => return false,
    }
    bytes.all(|b| b == b'_' || b.is_ascii_alphanumeric())
}

/// The declared atomic-proposition universe: sorted, deduplicated,
/// validated identifiers. Formulas refer to atoms by index into this set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApSet {
    names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ApSetError {
    InvalidName(String),
    ReservedName(String),
    DuplicateName(String),
    TooMany(usize),
}

impl fmt::Display for ApSetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApSetError::InvalidName(n) => write!(f, "invalid proposition name `{n}`"),
            ApSetError::ReservedName(n) => write!(f, "proposition name `{n}` is a reserved word"),
            ApSetError::DuplicateName(n) => write!(f, "duplicate proposition name `{n}`"),
            ApSetError::TooMany(n) => write!(f, "{n} propositions exceed the limit of {MAX_AP}"),
        }
    }
}

impl core::error::Error for ApSetError {}

impl ApSet {
    /// Builds the universe; order is canonicalized by sorting the names.
    pub fn new<I, S>(names: I) -> Result<ApSet, ApSetError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut v: Vec<String> = names.into_iter().map(Into::into).collect();
        for n in &v {
            if !is_identifier(n) {
                return Err(ApSetError::InvalidName(n.clone()));
            }
            if RESERVED.contains(&n.as_str()) {
                return Err(ApSetError::ReservedName(n.clone()));
            }
        }
        v.sort();
        for pair in v.windows(2) {
            if pair[0] == pair[1] {
                return Err(ApSetError::DuplicateName(pair[0].clone()));
            }
        }
        if v.len() > MAX_AP {
            return Err(ApSetError::TooMany(v.len()));
        }
        Ok(ApSet { names: v })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A subset of the proposition universe, as a bitset over the `ApSet` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Label(pub u32);

impl Label {
    pub const EMPTY: Label = Label(0);

    pub fn singleton(ap: usize) -> Label {
        Label(1 << ap)
    }

    pub fn with(self, ap: usize) -> Label {
        Label(self.0 | (1 << ap))
    }

    pub fn contains(self, ap: usize) -> bool {
        self.0 >> ap & 1 == 1
    }

    /// True iff the bitset only uses the first `n_ap` positions.
    pub fn is_within(self, n_ap: usize) -> bool {
        n_ap >= 32 || self.0 >> n_ap == 0
    }

    /// Renders as `{}` or `{p1,p2}` under the given universe.
    pub fn render(self, aps: &ApSet) -> String {
        let mut s = String::from("{");
        let mut first = true;
        for i in 0..aps.len() {
            if self.contains(i) {
                if !first {
                    s.push(',');
                }
                s.push_str(aps.name(i));
                first = false;
            }
        }
        s.push('}');
        s
    }
}

/// A finite word over `2^AP`.
pub type Word = Vec<Label>;

/// scLTL abstract syntax. Negation occurs only on atoms, and `F φ` parses to
/// `Until(True, φ)`, so downstream passes handle exactly these seven forms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    Atom(usize),
    NegAtom(usize),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Next(Box<Formula>),
    Until(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn next(f: Formula) -> Formula {
        Formula::Next(Box::new(f))
    }

    pub fn until(l: Formula, r: Formula) -> Formula {
        Formula::Until(Box::new(l), Box::new(r))
    }

    /// `F φ`, stored as `Until(True, φ)`.
    pub fn eventually(f: Formula) -> Formula {
        Formula::until(Formula::True, f)
    }
}

/// Parse failures report a byte offset into the input text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    Syntax { position: usize, expected: &'static str },
    UnknownAtom { position: usize, name: String },
    NegationOfNonAtom { position: usize },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Syntax { position, expected } => {
                write!(f, "syntax error at offset {position}: expected {expected}")
            }
            ParseError::UnknownAtom { position, name } => {
                write!(f, "unknown atomic proposition `{name}` at offset {position}")
            }
            ParseError::NegationOfNonAtom { position } => {
                write!(f, "negation applies only to atomic propositions (offset {position})")
            }
        }
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok<'a> {
    Ident(&'a str),
    Bang,
    Amp,
    Pipe,
    LPar,
    RPar,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok<'_>)>, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'!' | b'&' | b'|' | b'(' | b')' => {
                let t = match b {
                    b'!' => Tok::Bang,
                    b'&' => Tok::Amp,
                    b'|' => Tok::Pipe,
                    b'(' => Tok::LPar,
                    _ => Tok::RPar,
                };
                toks.push((i, t));
                i += 1;
            }
            b'_' | b'A'..=b'Z' | b'a'..=b'z' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i] == b'_' || bytes[i].is_ascii_alphanumeric())
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(&text[start..i])));
            }
            _ => {
                return Err(ParseError::Syntax { position: i, expected: "a formula token" });
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    at: usize,
    end: usize,
    aps: &'a ApSet,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(usize, Tok<'a>)> {
        self.toks.get(self.at)
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |(p, _)| *p)
    }

    fn bump(&mut self) -> Option<(usize, Tok<'a>)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    // or := and { "|" and }
    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and()?;
        while matches!(self.peek(), Some((_, Tok::Pipe))) {
            self.bump();
            f = Formula::or(f, self.and()?);
        }
        Ok(f)
    }

    // and := until { "&" until }
    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.until()?;
        while matches!(self.peek(), Some((_, Tok::Amp))) {
            self.bump();
            f = Formula::and(f, self.until()?);
        }
        Ok(f)
    }

    // until := unary [ "U" until ]   (right-associative)
    fn until(&mut self) -> Result<Formula, ParseError> {
        let f = self.unary()?;
        if matches!(self.peek(), Some((_, Tok::Ident("U")))) {
            self.bump();
            return Ok(Formula::until(f, self.until()?));
        }
        Ok(f)
    }

    // unary := "!" atom | "X" unary | "F" unary | atom | "true" | "(" formula ")"
    fn unary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        match self.bump() {
            Some((_, Tok::Bang)) => {
                let at = self.pos();
                match self.bump() {
                    Some((_, Tok::Ident(name))) if !RESERVED.contains(&name) => {
                        match self.aps.index_of(name) {
                            Some(i) => Ok(Formula::NegAtom(i)),
                            None => Err(ParseError::UnknownAtom {
                                position: at,
                                name: name.to_string(),
                            }),
                        }
                    }
                    Some(_) => Err(ParseError::NegationOfNonAtom { position: at }),
                    None => Err(ParseError::Syntax {
                        position: at,
                        expected: "an atomic proposition",
                    }),
                }
            }
            Some((_, Tok::Ident("true"))) => Ok(Formula::True),
            Some((_, Tok::Ident("X"))) => Ok(Formula::next(self.unary()?)),
            Some((_, Tok::Ident("F"))) => Ok(Formula::eventually(self.unary()?)),
            Some((_, Tok::Ident(name))) if !RESERVED.contains(&name) => {
                match self.aps.index_of(name) {
                    Some(i) => Ok(Formula::Atom(i)),
                    None => Err(ParseError::UnknownAtom { position: pos, name: name.to_string() }),
                }
            }
            Some((_, Tok::LPar)) => {
                let f = self.or()?;
                match self.bump() {
                    Some((_, Tok::RPar)) => Ok(f),
                    _ => Err(ParseError::Syntax { position: pos, expected: "`)`" }),
                }
            }
            _ => Err(ParseError::Syntax { position: pos, expected: "a formula" }),
        }
    }
}

/// Parses `text` against the grammar
/// `or := and {"|" and}; and := until {"&" until}; until := unary ["U" until];
/// unary := "!" atom | "X" unary | "F" unary | atom | "true" | "(" formula ")"`.
///
/// Disjunction is accepted as an extension: the fragment is closed under it
/// and the compiler handles it uniformly.
pub fn parse(text: &str, aps: &ApSet) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0, end: text.len(), aps };
    let f = p.or()?;
    if p.at != p.toks.len() {
        return Err(ParseError::Syntax { position: p.pos(), expected: "end of input" });
    }
    Ok(f)
}

// Precedence levels for printing: 0 = `|`, 1 = `&`, 2 = `U`, 3 = unary/atom.
fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Or(..) => 0,
        Formula::And(..) => 1,
        Formula::Until(l, _) if **l != Formula::True => 2,
        _ => 3,
    }
}

fn render(f: &Formula, aps: &ApSet, min: u8, out: &mut String) {
    if prec(f) < min {
        out.push('(');
        render(f, aps, 0, out);
        out.push(')');
        return;
    }
    match f {
        Formula::True => out.push_str("true"),
        Formula::Atom(a) => out.push_str(aps.name(*a)),
        Formula::NegAtom(a) => {
            out.push('!');
            out.push_str(aps.name(*a));
        }
        Formula::And(l, r) => {
            render(l, aps, 1, out);
            out.push_str(" & ");
            render(r, aps, 2, out);
        }
        Formula::Or(l, r) => {
            render(l, aps, 0, out);
            out.push_str(" | ");
            render(r, aps, 1, out);
        }
        Formula::Next(s) => {
            out.push_str("X ");
            render(s, aps, 3, out);
        }
        Formula::Until(l, r) if **l == Formula::True => {
            out.push_str("F ");
            render(r, aps, 3, out);
        }
        Formula::Until(l, r) => {
            render(l, aps, 3, out);
            out.push_str(" U ");
            render(r, aps, 2, out);
        }
    }
}

/// Prints with minimal parentheses; `Until(True, φ)` prints as `F φ`.
/// `parse(pretty_print(f)) == f` for every AST.
pub fn pretty_print(f: &Formula, aps: &ApSet) -> String {
    let mut s = String::new();
    render(f, aps, 0, &mut s);
    s
}

/// Finite-word satisfaction: true iff `w` is a good prefix of `f`, i.e. every
/// infinite extension of `w` satisfies `f`.
///
/// Evaluation at position `i == |w|` plays the role of the empty tail: atoms
/// and negated atoms are false there, `X φ` collapses to the tail value of
/// `φ`, and `φ U ψ` to the tail value of `ψ`. Satisfaction is then
/// extension-closed, matching good-prefix membership on this fragment; the
/// coincidence with the compiled automaton is checked differentially, not
/// assumed.
pub fn holds_on(w: &[Label], f: &Formula) -> bool {
    sat(w, 0, f)
}

fn sat(w: &[Label], i: usize, f: &Formula) -> bool {
    match f {
        Formula::True => true,
        Formula::Atom(a) => i < w.len() && w[i].contains(*a),
        Formula::NegAtom(a) => i < w.len() && !w[i].contains(*a),
        Formula::And(l, r) => sat(w, i, l) && sat(w, i, r),
        Formula::Or(l, r) => sat(w, i, l) || sat(w, i, r),
        Formula::Next(s) => sat(w, (i + 1).min(w.len()), s),
        Formula::Until(l, r) => {
            (i..=w.len()).any(|j| sat(w, j, r) && (i..j).all(|k| sat(w, k, l)))
        }
    }
}

/// True iff `w` is a good prefix of `f` and no strict prefix of `w` is.
/// This marks the exact first-completion instant of the task.
pub fn is_minimal_good_prefix(w: &[Label], f: &Formula) -> bool {
    holds_on(w, f) && (0..w.len()).all(|n| !holds_on(&w[..n], f))
}
