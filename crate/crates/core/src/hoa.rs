//! A subset of the Hanoi Omega-Automata (HOA v1) text format.
//!
//! Supported: explicit transition labels, transition-based acceptance marks,
//! a single start state and the Büchi condition `Inf(0)`. Anything outside
//! that subset is rejected with [`HoaError::Unsupported`] rather than being
//! approximated.
//!
//! LDBA ε-moves have no native HOA encoding. An edge whose guard is exactly
//! the reserved atomic proposition [`EPSILON_AP`] denotes an ε-move; the
//! document keeps it as an ordinary edge and [`crate::automaton::Ldba::load`]
//! turns it into one.

use std::fmt::{self, Write as _};

use thiserror::Error;

/// Reserved atomic-proposition name marking ε-move edges.
pub const EPSILON_AP: &str = "__eps__";

/// Upper bound on the number of atomic propositions (one bit per AP in [`LabelSet`]).
pub const MAX_APS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HoaError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unsupported HOA feature at {line}:{col}: {msg}")]
    Unsupported { line: usize, col: usize, msg: String },
    #[error("semantic error: {0}")]
    Semantic(String),
}

/// A set of atomic-proposition indices, one bit per index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LabelSet(pub u64);

impl LabelSet {
    pub const EMPTY: LabelSet = LabelSet(0);

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut set = Self::EMPTY;
        for i in indices {
            set.insert(i);
        }
        set
    }

    pub fn contains(self, ap: usize) -> bool {
        ap < MAX_APS && self.0 & (1 << ap) != 0
    }

    pub fn insert(&mut self, ap: usize) {
        assert!(ap < MAX_APS, "AP index {ap} out of range");
        self.0 |= 1 << ap;
    }

    pub fn union(self, other: LabelSet) -> LabelSet {
        LabelSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_APS).filter(move |&i| self.contains(i))
    }
}

/// Boolean formula over AP indices.
///
/// Conjunctions and disjunctions are n-ary; the parser flattens chains such
/// as `0&1&2` into a single node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    False,
    Ap(usize),
    Not(Box<Guard>),
    And(Vec<Guard>),
    Or(Vec<Guard>),
}

impl Guard {
    pub fn negate(g: Guard) -> Guard {
        Guard::Not(Box::new(g))
    }

    /// Standard boolean semantics; an AP leaf is true iff its index is in `labels`.
    pub fn eval(&self, labels: LabelSet) -> bool {
        match self {
            Guard::True => true,
            Guard::False => false,
            Guard::Ap(i) => labels.contains(*i),
            Guard::Not(g) => !g.eval(labels),
            Guard::And(gs) => gs.iter().all(|g| g.eval(labels)),
            Guard::Or(gs) => gs.iter().any(|g| g.eval(labels)),
        }
    }

    /// Largest AP index referenced, if any.
    pub fn max_ap(&self) -> Option<usize> {
        match self {
            Guard::True | Guard::False => None,
            Guard::Ap(i) => Some(*i),
            Guard::Not(g) => g.max_ap(),
            Guard::And(gs) | Guard::Or(gs) => gs.iter().filter_map(Guard::max_ap).max(),
        }
    }

    pub fn mentions(&self, ap: usize) -> bool {
        match self {
            Guard::True | Guard::False => false,
            Guard::Ap(i) => *i == ap,
            Guard::Not(g) => g.mentions(ap),
            Guard::And(gs) | Guard::Or(gs) => gs.iter().any(|g| g.mentions(ap)),
        }
    }

    /// Rewrites every AP index through `f`.
    pub fn map_aps(&self, f: &impl Fn(usize) -> usize) -> Guard {
        match self {
            Guard::True => Guard::True,
            Guard::False => Guard::False,
            Guard::Ap(i) => Guard::Ap(f(*i)),
            Guard::Not(g) => Guard::negate(g.map_aps(f)),
            Guard::And(gs) => Guard::And(gs.iter().map(|g| g.map_aps(f)).collect()),
            Guard::Or(gs) => Guard::Or(gs.iter().map(|g| g.map_aps(f)).collect()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Guard::Or(_) => 1,
            Guard::And(_) => 2,
            _ => 3,
        }
    }

    fn write_child(&self, child: &Guard, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Parenthesize anything that would otherwise re-associate on reparse.
        if child.precedence() <= self.precedence() {
            write!(out, "({child})")
        } else {
            write!(out, "{child}")
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Guard::True => f.write_str("t"),
            Guard::False => f.write_str("f"),
            Guard::Ap(i) => write!(f, "{i}"),
            Guard::Not(g) => {
                f.write_str("!")?;
                if g.precedence() < 3 {
                    write!(f, "({g})")
                } else {
                    write!(f, "{g}")
                }
            }
            Guard::And(gs) | Guard::Or(gs) => {
                let sep = if matches!(self, Guard::And(_)) { "&" } else { "|" };
                if gs.is_empty() {
                    // Empty conjunction/disjunction has no HOA spelling.
                    return f.write_str(if sep == "&" { "t" } else { "f" });
                }
                for (i, g) in gs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    self.write_child(g, f)?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoaEdge {
    pub guard: Guard,
    pub target: usize,
    /// Member of acceptance set 0.
    pub accepting: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HoaState {
    pub name: Option<String>,
    pub edges: Vec<HoaEdge>,
}

/// A parsed automaton in the supported HOA subset.
///
/// `states[i]` holds the body of state `i`; states absent from the body have
/// no outgoing edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoaDocument {
    pub name: Option<String>,
    pub tool: Vec<String>,
    pub start: usize,
    pub aps: Vec<String>,
    pub properties: Vec<String>,
    pub states: Vec<HoaState>,
}

impl HoaDocument {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn edge_count(&self) -> usize {
        self.states.iter().map(|s| s.edges.len()).sum()
    }

    pub fn accepting_edge_count(&self) -> usize {
        self.states
            .iter()
            .flat_map(|s| &s.edges)
            .filter(|e| e.accepting)
            .count()
    }

    /// Checks the structural invariants a parsed document always satisfies.
    pub fn validate(&self) -> Result<(), HoaError> {
        if self.states.is_empty() {
            return Err(HoaError::Semantic("automaton has no states".into()));
        }
        if self.start >= self.states.len() {
            return Err(HoaError::Semantic(format!(
                "start state {} out of range (States: {})",
                self.start,
                self.states.len()
            )));
        }
        if self.aps.len() > MAX_APS {
            return Err(HoaError::Semantic(format!(
                "{} atomic propositions exceed the limit of {MAX_APS}",
                self.aps.len()
            )));
        }
        for (id, state) in self.states.iter().enumerate() {
            for edge in &state.edges {
                if edge.target >= self.states.len() {
                    return Err(HoaError::Semantic(format!(
                        "state {id}: destination {} out of range (States: {})",
                        edge.target,
                        self.states.len()
                    )));
                }
                if let Some(ap) = edge.guard.max_ap() {
                    if ap >= self.aps.len() {
                        return Err(HoaError::Semantic(format!(
                            "state {id}: guard references AP {ap} but only {} declared",
                            self.aps.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Header(String),
    Ident(String),
    Int(usize),
    Str(String),
    Body,
    End,
    Sym(char),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, HoaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    let syntax = |line, col, msg: String| HoaError::Syntax { line, col, msg };

    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(1, &mut i, &mut col),
            '/' if chars.get(i + 1) == Some(&'*') => {
                i += 2;
                col += 2;
                loop {
                    match chars.get(i) {
                        None => return Err(syntax(tl, tc, "unterminated comment".into())),
                        Some('*') if chars.get(i + 1) == Some(&'/') => {
                            i += 2;
                            col += 2;
                            break;
                        }
                        Some('\n') => {
                            i += 1;
                            line += 1;
                            col = 1;
                        }
                        Some(_) => advance(1, &mut i, &mut col),
                    }
                }
            }
            '"' => {
                i += 1;
                col += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(syntax(tl, tc, "unterminated string".into()))
                        }
                        Some('"') => {
                            i += 1;
                            col += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = chars
                                .get(i + 1)
                                .ok_or_else(|| syntax(tl, tc, "unterminated string".into()))?;
                            s.push(*esc);
                            advance(2, &mut i, &mut col);
                        }
                        Some(ch) => {
                            s.push(*ch);
                            advance(1, &mut i, &mut col);
                        }
                    }
                }
                out.push(Spanned { tok: Tok::Str(s), line: tl, col: tc });
            }
            '-' => {
                let rest: String = chars[i..].iter().take(8).collect();
                let tok = if rest == "--BODY--" {
                    Tok::Body
                } else if rest.starts_with("--END--") {
                    Tok::End
                } else if rest.starts_with("--ABORT--") || rest == "--ABORT-" {
                    return Err(HoaError::Unsupported {
                        line: tl,
                        col: tc,
                        msg: "--ABORT-- marker".into(),
                    });
                } else {
                    return Err(syntax(tl, tc, "unexpected '-'".into()));
                };
                let n = if tok == Tok::Body { 8 } else { 7 };
                advance(n, &mut i, &mut col);
                out.push(Spanned { tok, line: tl, col: tc });
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(1, &mut i, &mut col);
                }
                let digits: String = chars[start..i].iter().collect();
                let n = digits
                    .parse::<usize>()
                    .map_err(|_| syntax(tl, tc, format!("integer '{digits}' too large")))?;
                out.push(Spanned { tok: Tok::Int(n), line: tl, col: tc });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '-')
                {
                    advance(1, &mut i, &mut col);
                }
                let word: String = chars[start..i].iter().collect();
                if chars.get(i) == Some(&':') {
                    advance(1, &mut i, &mut col);
                    out.push(Spanned { tok: Tok::Header(word), line: tl, col: tc });
                } else {
                    out.push(Spanned { tok: Tok::Ident(word), line: tl, col: tc });
                }
            }
            '[' | ']' | '{' | '}' | '(' | ')' | '!' | '&' | '|' => {
                advance(1, &mut i, &mut col);
                out.push(Spanned { tok: Tok::Sym(c), line: tl, col: tc });
            }
            other => return Err(syntax(tl, tc, format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.eof, |s| (s.line, s.col))
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, HoaError> {
        let (line, col) = self.here();
        Err(HoaError::Syntax { line, col, msg: msg.into() })
    }

    fn unsupported<T>(&self, msg: impl Into<String>) -> Result<T, HoaError> {
        let (line, col) = self.here();
        Err(HoaError::Unsupported { line, col, msg: msg.into() })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect_sym(&mut self, c: char) -> Result<(), HoaError> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            _ => self.syntax(format!("expected '{c}'")),
        }
    }

    fn expect_int(&mut self) -> Result<usize, HoaError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => self.syntax("expected integer"),
        }
    }

    fn at_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Tok::Sym(s)) if *s == c)
    }

    /// Remaining tokens of a header line: everything up to the next header or `--BODY--`.
    fn header_values(&mut self) -> Vec<Tok> {
        let mut vals = Vec::new();
        while let Some(t) = self.peek() {
            if matches!(t, Tok::Header(_) | Tok::Body | Tok::End) {
                break;
            }
            vals.push(self.next().unwrap());
        }
        vals
    }

    fn guard(&mut self) -> Result<Guard, HoaError> {
        let mut terms = vec![self.conj()?];
        while self.at_sym('|') {
            self.pos += 1;
            terms.push(self.conj()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Guard::Or(terms) })
    }

    fn conj(&mut self) -> Result<Guard, HoaError> {
        let mut terms = vec![self.unary()?];
        while self.at_sym('&') {
            self.pos += 1;
            terms.push(self.unary()?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Guard::And(terms) })
    }

    fn unary(&mut self) -> Result<Guard, HoaError> {
        match self.peek() {
            Some(Tok::Sym('!')) => {
                self.pos += 1;
                Ok(Guard::negate(self.unary()?))
            }
            Some(Tok::Sym('(')) => {
                self.pos += 1;
                let g = self.guard()?;
                self.expect_sym(')')?;
                Ok(g)
            }
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(Guard::Ap(n))
            }
            Some(Tok::Ident(w)) if w == "t" => {
                self.pos += 1;
                Ok(Guard::True)
            }
            Some(Tok::Ident(w)) if w == "f" => {
                self.pos += 1;
                Ok(Guard::False)
            }
            Some(Tok::Str(_)) => self.unsupported("alias or named AP references in guards"),
            Some(Tok::Ident(w)) if w.starts_with('@') => self.unsupported("aliases"),
            _ => self.syntax("expected guard expression"),
        }
    }
}

/// Parses the supported HOA subset.
pub fn parse_hoa(text: &str) -> Result<HoaDocument, HoaError> {
    let toks = lex(text)?;
    let eof = text
        .lines()
        .enumerate()
        .last()
        .map_or((1, 1), |(i, l)| (i + 1, l.chars().count() + 1));
    let mut p = Parser { toks, pos: 0, eof };

    match (p.next(), p.next()) {
        (Some(Tok::Header(h)), Some(Tok::Ident(v))) if h == "HOA" && v == "v1" => {}
        _ => {
            p.pos = 0;
            return p.syntax("document must begin with 'HOA: v1'");
        }
    }

    let mut name = None;
    let mut tool = Vec::new();
    let mut n_states: Option<usize> = None;
    let mut start: Option<usize> = None;
    let mut aps: Option<Vec<String>> = None;
    let mut acceptance_seen = false;
    let mut properties = Vec::new();

    loop {
        let header_pos = p.pos;
        match p.next() {
            Some(Tok::Body) => break,
            Some(Tok::Header(h)) => {
                let vals = p.header_values();
                let at = |p: &mut Parser| p.pos = header_pos;
                match h.as_str() {
                    "States" => match vals.as_slice() {
                        [Tok::Int(n)] if n_states.is_none() => n_states = Some(*n),
                        [Tok::Int(_)] => {
                            at(&mut p);
                            return p.syntax("duplicate States header");
                        }
                        _ => {
                            at(&mut p);
                            return p.syntax("States expects one integer");
                        }
                    },
                    "Start" => {
                        if start.is_some() {
                            at(&mut p);
                            return p.unsupported("multiple start states");
                        }
                        match vals.as_slice() {
                            [Tok::Int(n)] => start = Some(*n),
                            [Tok::Int(_), Tok::Sym('&'), ..] => {
                                at(&mut p);
                                return p.unsupported("alternating start (conjunctive Start)");
                            }
                            _ => {
                                at(&mut p);
                                return p.syntax("Start expects one state index");
                            }
                        }
                    }
                    "AP" => {
                        let Some((Tok::Int(count), names)) = vals.split_first() else {
                            at(&mut p);
                            return p.syntax("AP expects a count followed by names");
                        };
                        let names: Option<Vec<String>> = names
                            .iter()
                            .map(|t| match t {
                                Tok::Str(s) => Some(s.clone()),
                                _ => None,
                            })
                            .collect();
                        match names {
                            Some(names) if names.len() == *count => {
                                let mut sorted = names.clone();
                                sorted.sort();
                                sorted.dedup();
                                if sorted.len() != names.len() {
                                    return Err(HoaError::Semantic("duplicate AP name".into()));
                                }
                                aps = Some(names)
                            }
                            Some(names) => {
                                at(&mut p);
                                return p.syntax(format!(
                                    "AP declares {count} names but lists {}",
                                    names.len()
                                ));
                            }
                            None => {
                                at(&mut p);
                                return p.syntax("AP names must be quoted strings");
                            }
                        }
                    }
                    "Acceptance" => {
                        let ok = matches!(
                            vals.as_slice(),
                            [Tok::Int(1), Tok::Ident(inf), Tok::Sym('('), Tok::Int(0), Tok::Sym(')')]
                                if inf == "Inf"
                        );
                        if !ok {
                            at(&mut p);
                            return p.unsupported("only the Büchi condition 'Acceptance: 1 Inf(0)'");
                        }
                        acceptance_seen = true;
                    }
                    "acc-name" => {
                        let ok = matches!(vals.as_slice(), [Tok::Ident(n)] if n == "Buchi");
                        if !ok {
                            at(&mut p);
                            return p.unsupported("acc-name other than Buchi");
                        }
                    }
                    "name" => match vals.as_slice() {
                        [Tok::Str(s)] => name = Some(s.clone()),
                        _ => {
                            at(&mut p);
                            return p.syntax("name expects a quoted string");
                        }
                    },
                    "tool" => {
                        tool = vals
                            .iter()
                            .filter_map(|t| match t {
                                Tok::Str(s) => Some(s.clone()),
                                _ => None,
                            })
                            .collect();
                    }
                    "properties" => {
                        for v in vals {
                            match v {
                                Tok::Ident(s) => properties.push(s),
                                _ => {
                                    at(&mut p);
                                    return p.syntax("properties expects identifiers");
                                }
                            }
                        }
                    }
                    "Alias" => {
                        at(&mut p);
                        return p.unsupported("aliases");
                    }
                    other => {
                        at(&mut p);
                        return p.unsupported(format!("header '{other}'"));
                    }
                }
            }
            Some(_) => {
                p.pos = header_pos;
                return p.syntax("expected header or --BODY--");
            }
            None => return p.syntax("missing --BODY--"),
        }
    }

    let n_states = match n_states {
        Some(n) => n,
        None => return Err(HoaError::Semantic("missing States header".into())),
    };
    let start = start.ok_or_else(|| HoaError::Semantic("missing Start header".into()))?;
    let aps = aps.unwrap_or_default();
    if !acceptance_seen {
        return Err(HoaError::Semantic("missing Acceptance header".into()));
    }

    let mut states: Vec<Option<HoaState>> = vec![None; n_states];
    loop {
        match p.peek() {
            Some(Tok::End) => {
                p.pos += 1;
                break;
            }
            Some(Tok::Header(h)) if h == "State" => {
                p.pos += 1;
                if p.at_sym('[') {
                    return p.unsupported("state labels");
                }
                let (line, col) = p.here();
                let id = p.expect_int()?;
                if id >= n_states {
                    return Err(HoaError::Semantic(format!(
                        "{line}:{col}: state {id} out of range (States: {n_states})"
                    )));
                }
                let sname = match p.peek() {
                    Some(Tok::Str(s)) => {
                        let s = s.clone();
                        p.pos += 1;
                        Some(s)
                    }
                    _ => None,
                };
                if p.at_sym('{') {
                    return p.unsupported("state-based acceptance marks");
                }
                if states[id].is_some() {
                    return Err(HoaError::Semantic(format!(
                        "{line}:{col}: state {id} defined twice"
                    )));
                }
                let mut edges = Vec::new();
                loop {
                    match p.peek() {
                        Some(Tok::Sym('[')) => {
                            p.pos += 1;
                            let guard = p.guard()?;
                            p.expect_sym(']')?;
                            let (tl, tc) = p.here();
                            let target = p.expect_int()?;
                            if p.at_sym('&') {
                                return p.unsupported("universal branching (alternation)");
                            }
                            let mut accepting = false;
                            if p.at_sym('{') {
                                p.pos += 1;
                                while !p.at_sym('}') {
                                    let (ml, mc) = p.here();
                                    let mark = p.expect_int()?;
                                    if mark != 0 {
                                        return Err(HoaError::Semantic(format!(
                                            "{ml}:{mc}: acceptance set {mark} not declared"
                                        )));
                                    }
                                    accepting = true;
                                }
                                p.pos += 1;
                            }
                            if target >= n_states {
                                return Err(HoaError::Semantic(format!(
                                    "{tl}:{tc}: destination {target} out of range (States: {n_states})"
                                )));
                            }
                            if let Some(ap) = guard.max_ap() {
                                if ap >= aps.len() {
                                    return Err(HoaError::Semantic(format!(
                                        "state {id}: guard references AP {ap} but only {} declared",
                                        aps.len()
                                    )));
                                }
                            }
                            edges.push(HoaEdge { guard, target, accepting });
                        }
                        Some(Tok::Int(_)) => return p.unsupported("implicit edge labels"),
                        _ => break,
                    }
                }
                states[id] = Some(HoaState { name: sname, edges });
            }
            Some(_) => return p.syntax("expected 'State:' or --END--"),
            None => return p.syntax("missing --END--"),
        }
    }
    if p.peek().is_some() {
        return p.syntax("trailing content after --END--");
    }

    let doc = HoaDocument {
        name,
        tool,
        start,
        aps,
        properties,
        states: states.into_iter().map(Option::unwrap_or_default).collect(),
    };
    doc.validate()?;
    Ok(doc)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Canonical text form: headers in a fixed order, every state listed in index order.
pub fn serialize_hoa(doc: &HoaDocument) -> String {
    let mut out = String::new();
    out.push_str("HOA: v1\n");
    if let Some(name) = &doc.name {
        let _ = writeln!(out, "name: {}", quote(name));
    }
    if !doc.tool.is_empty() {
        let tools: Vec<String> = doc.tool.iter().map(|t| quote(t)).collect();
        let _ = writeln!(out, "tool: {}", tools.join(" "));
    }
    let _ = writeln!(out, "States: {}", doc.states.len());
    let _ = writeln!(out, "Start: {}", doc.start);
    let _ = write!(out, "AP: {}", doc.aps.len());
    for ap in &doc.aps {
        let _ = write!(out, " {}", quote(ap));
    }
    out.push('\n');
    out.push_str("acc-name: Buchi\n");
    out.push_str("Acceptance: 1 Inf(0)\n");
    if !doc.properties.is_empty() {
        let _ = writeln!(out, "properties: {}", doc.properties.join(" "));
    }
    out.push_str("--BODY--\n");
    for (id, state) in doc.states.iter().enumerate() {
        match &state.name {
            Some(n) => {
                let _ = writeln!(out, "State: {id} {}", quote(n));
            }
            None => {
                let _ = writeln!(out, "State: {id}");
            }
        }
        for e in &state.edges {
            let _ = write!(out, "[{}] {}", e.guard, e.target);
            if e.accepting {
                out.push_str(" {0}");
            }
            out.push('\n');
        }
    }
    out.push_str("--END--\n");
    out
}

/// Free-function form of [`Guard::eval`].
pub fn eval_guard(g: &Guard, labels: LabelSet) -> bool {
    g.eval(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "HOA: v1\nStates: 1\nStart: 0\nAP: 0\nAcceptance: 1 Inf(0)\n--BODY--\nState: 0\n[t] 0 {0}\n--END--\n";

    fn parse_guard(s: &str) -> Guard {
        let text = format!(
            "HOA: v1\nStates: 1\nStart: 0\nAP: 4 \"a\" \"b\" \"c\" \"d\"\nAcceptance: 1 Inf(0)\n--BODY--\nState: 0\n[{s}] 0\n--END--\n"
        );
        parse_hoa(&text).unwrap().states[0].edges[0].guard.clone()
    }

    #[test]
    fn minimal_automaton() {
        let doc = parse_hoa(MINIMAL).unwrap();
        assert_eq!(doc.state_count(), 1);
        assert_eq!(doc.edge_count(), 1);
        assert_eq!(doc.accepting_edge_count(), 1);
        assert_eq!(doc.states[0].edges[0].guard, Guard::True);
    }

    #[test]
    fn minimal_serializes_canonically() {
        let doc = parse_hoa(MINIMAL).unwrap();
        assert_eq!(
            serialize_hoa(&doc),
            "HOA: v1\nStates: 1\nStart: 0\nAP: 0\nacc-name: Buchi\nAcceptance: 1 Inf(0)\n--BODY--\nState: 0\n[t] 0 {0}\n--END--\n"
        );
    }

    #[test]
    fn guard_precedence() {
        assert_eq!(
            parse_guard("0|1&!2"),
            Guard::Or(vec![
                Guard::Ap(0),
                Guard::And(vec![Guard::Ap(1), Guard::negate(Guard::Ap(2))])
            ])
        );
        assert_eq!(
            parse_guard("!(0&1)"),
            Guard::negate(Guard::And(vec![Guard::Ap(0), Guard::Ap(1)]))
        );
    }

    #[test]
    fn guard_eval_examples() {
        let a_and_b = parse_guard("0&1");
        assert!(!a_and_b.eval(LabelSet::from_indices([0])));
        assert!(Guard::True.eval(LabelSet::EMPTY));
        let not_g1 = parse_guard("!2");
        assert!(not_g1.eval(LabelSet::from_indices([0, 1])));
    }

    #[test]
    fn rejects_generalized_acceptance() {
        let text = MINIMAL.replace("Acceptance: 1 Inf(0)", "Acceptance: 2 Inf(0) & Fin(1)");
        assert!(matches!(parse_hoa(&text), Err(HoaError::Unsupported { .. })));
    }

    #[test]
    fn rejects_multiple_start_states() {
        let text = MINIMAL.replace("Start: 0\n", "Start: 0\nStart: 0\n");
        assert!(matches!(parse_hoa(&text), Err(HoaError::Unsupported { .. })));
        let text = MINIMAL.replace("Start: 0", "Start: 0&0");
        assert!(matches!(parse_hoa(&text), Err(HoaError::Unsupported { .. })));
    }

    #[test]
    fn rejects_alternation_and_implicit_labels() {
        let text = MINIMAL.replace("[t] 0 {0}", "[t] 0&0");
        assert!(matches!(parse_hoa(&text), Err(HoaError::Unsupported { .. })));
        let text = MINIMAL.replace("[t] 0 {0}", "0 {0}");
        assert!(matches!(parse_hoa(&text), Err(HoaError::Unsupported { .. })));
        let text = MINIMAL.replace("State: 0\n", "State: 0 {0}\n");
        assert!(matches!(parse_hoa(&text), Err(HoaError::Unsupported { .. })));
    }

    #[test]
    fn rejects_out_of_range_indices() {
        let text = MINIMAL.replace("[t] 0 {0}", "[t] 3");
        assert!(matches!(parse_hoa(&text), Err(HoaError::Semantic(_))));
        let text = MINIMAL.replace("[t] 0 {0}", "[0] 0");
        assert!(matches!(parse_hoa(&text), Err(HoaError::Semantic(_))));
        let text = MINIMAL.replace("{0}", "{1}");
        assert!(matches!(parse_hoa(&text), Err(HoaError::Semantic(_))));
    }

    #[test]
    fn syntax_errors_report_position() {
        let text = MINIMAL.replace("[t] 0", "[t & ] 0");
        match parse_hoa(&text) {
            Err(HoaError::Syntax { line, col, .. }) => {
                assert_eq!(line, 8);
                assert_eq!(col, 6);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(parse_hoa(""), Err(HoaError::Syntax { .. })));
        assert!(matches!(
            parse_hoa(&MINIMAL.replace("--END--\n", "")),
            Err(HoaError::Syntax { .. })
        ));
    }

    #[test]
    fn comments_and_unlisted_states() {
        let text = "HOA: v1 /* c */\nStates: 2\nStart: 1\nAP: 1 \"a\"\nAcceptance: 1 Inf(0)\n--BODY--\nState: 1 \"q1\"\n[0] 1 {0}\n--END--";
        let doc = parse_hoa(text).unwrap();
        assert!(doc.states[0].edges.is_empty());
        assert_eq!(doc.states[1].name.as_deref(), Some("q1"));
        assert_eq!(parse_hoa(&serialize_hoa(&doc)).unwrap(), doc);
    }
}
