//! Ground predicate terms such as `require('price range',['cheap'])` or
//! `talk(movie, Inception, plot episode)`.
//!
//! One grammar covers both surface styles. An argument is either a quoted
//! atom, a bracketed list, or a bare atom that runs up to the next `,`, `)`
//! or `]`. Bare atoms are trimmed and may contain interior apostrophes and
//! periods (`Don't Look Up`, `St. Louis`). After parsing there is no
//! distinction between a bare and a quoted atom.
//!
//! ```text
//! set       = { sep } [ predicate { sep { sep } predicate } ] { sep } ;
//! sep       = "," | "." | whitespace ;
//! predicate = functor [ "(" [ value { "," value } ] ")" ] ;
//! value     = quoted | list | bare ;
//! quoted    = "'" { char - ("'" | "\") | "\'" | "\\" } "'" ;
//! list      = "[" [ value { "," value } ] "]" ;
//! bare      = char - ("'" | delim) { char - delim } ;
//! delim     = "(" | ")" | "[" | "]" | "," ;
//! ```

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An argument of a predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Atom(String),
    List(Vec<Value>),
}

impl Value {
    /// Builds a normalized (trimmed) atom.
    pub fn atom(s: impl AsRef<str>) -> Self {
        Value::Atom(s.as_ref().trim().to_string())
    }

    pub fn list<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Value::List(items.into_iter().map(Value::atom).collect())
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Value::Atom(s) => Some(s),
            Value::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            Value::Atom(_) => None,
        }
    }

    /// Atoms of a flat list; `None` if this is not a list or it nests.
    pub fn atoms(&self) -> Option<Vec<&str>> {
        self.as_list()?.iter().map(Value::as_atom).collect()
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_value(self, Style::Companion))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Predicate {
    pub functor: String,
    pub args: Vec<Value>,
}

impl Predicate {
    pub fn new(functor: impl Into<String>, args: Vec<Value>) -> Self {
        Self { functor: functor.into(), args }
    }

    /// A zero-arity predicate such as `quit`.
    pub fn constant(functor: impl Into<String>) -> Self {
        Self::new(functor, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn atom_arg(&self, idx: usize) -> Option<&str> {
        self.args.get(idx).and_then(Value::as_atom)
    }

    pub fn render(&self, style: Style) -> String {
        let mut out = self.functor.clone();
        if !self.args.is_empty() {
            out.push('(');
            for (i, arg) in self.args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&render_value(arg, style));
            }
            out.push(')');
        }
        out
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(Style::Companion))
    }
}

/// The predicates of one turn, in order of appearance. Duplicates are kept.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PredicateSet(pub Vec<Predicate>);

impl PredicateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn serialize(&self, style: Style) -> String {
        serialize(self, style)
    }

    pub fn with_functor<'a>(&'a self, functor: &'a str) -> impl Iterator<Item = &'a Predicate> + 'a {
        self.0.iter().filter(move |p| p.functor == functor)
    }

    pub fn contains_functor(&self, functor: &str) -> bool {
        self.0.iter().any(|p| p.functor == functor)
    }
}

impl Deref for PredicateSet {
    type Target = Vec<Predicate>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for PredicateSet {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl FromIterator<Predicate> for PredicateSet {
    fn from_iter<T: IntoIterator<Item = Predicate>>(iter: T) -> Self {
        PredicateSet(iter.into_iter().collect())
    }
}

impl IntoIterator for PredicateSet {
    type Item = Predicate;
    type IntoIter = std::vec::IntoIter<Predicate>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a PredicateSet {
    type Item = &'a Predicate;
    type IntoIter = std::slice::Iter<'a, Predicate>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl From<Vec<Predicate>> for PredicateSet {
    fn from(v: Vec<Predicate>) -> Self {
        PredicateSet(v)
    }
}

impl FromStr for PredicateSet {
    type Err = SyntaxError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_predicates(s)
    }
}

/// Surface style used when serializing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    /// Every atom argument quoted, predicates joined by `,\n`.
    Concierge,
    /// Bare atoms where possible, predicates joined by `. ` and terminated by `.`.
    Companion,
}

impl FromStr for Style {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concierge" => Ok(Style::Concierge),
            "companion" => Ok(Style::Companion),
            other => Err(format!("unknown style `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: expected {expected}")]
pub struct SyntaxError {
    pub offset: usize,
    pub expected: String,
}

impl SyntaxError {
    fn new(offset: usize, expected: impl Into<String>) -> Self {
        Self { offset, expected: expected.into() }
    }
}

pub fn serialize(preds: &PredicateSet, style: Style) -> String {
    let rendered: Vec<String> = preds.iter().map(|p| p.render(style)).collect();
    match style {
        Style::Concierge => rendered.join(",\n"),
        Style::Companion if rendered.is_empty() => String::new(),
        Style::Companion => format!("{}.", rendered.join(". ")),
    }
}

fn render_value(v: &Value, style: Style) -> String {
    match v {
        Value::Atom(s) if style == Style::Concierge || needs_quotes(s) => quote(s),
        Value::Atom(s) => s.clone(),
        Value::List(items) => {
            let inner: Vec<String> = items.iter().map(|i| render_value(i, style)).collect();
            format!("[{}]", inner.join(","))
        }
    }
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s.starts_with('\'')
        || s != s.trim()
        || s.chars().any(|c| matches!(c, ',' | '(' | ')' | '[' | ']') || c.is_control())
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('\'');
    for c in s.chars() {
        if c == '\'' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('\'');
    out
}

fn is_top_sep(c: char) -> bool {
    c == ',' || c == '.' || c.is_whitespace()
}

fn is_functor_char(c: char) -> bool {
    !(c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | ',' | '.' | '\''))
}

/// Parses zero or more predicates separated by commas, periods or whitespace.
pub fn parse_predicates(text: &str) -> Result<PredicateSet, SyntaxError> {
    let mut p = Parser { src: text, pos: 0 };
    let mut out = Vec::new();
    loop {
        p.skip_while(is_top_sep);
        if p.peek().is_none() {
            break;
        }
        out.push(p.predicate()?);
    }
    Ok(PredicateSet(out))
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_while(&mut self, f: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn skip_ws(&mut self) {
        self.skip_while(char::is_whitespace);
    }

    fn predicate(&mut self) -> Result<Predicate, SyntaxError> {
        let start = self.pos;
        self.skip_while(is_functor_char);
        if self.pos == start {
            return Err(SyntaxError::new(start, "predicate functor"));
        }
        let functor = self.src[start..self.pos].to_string();

        let after_functor = self.pos;
        self.skip_ws();
        if self.peek() != Some('(') {
            self.pos = after_functor;
            return Ok(Predicate::constant(functor));
        }
        let open = self.pos;
        self.bump();
        let args = self.sequence(')', open, "`(`")?;
        Ok(Predicate::new(functor, args))
    }

    /// Comma-separated values up to `close`. `open` is the offset of the
    /// opening delimiter, reported when input ends early.
    fn sequence(&mut self, close: char, open: usize, what: &str) -> Result<Vec<Value>, SyntaxError> {
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() == Some(close) {
            self.bump();
            return Ok(items);
        }
        loop {
            items.push(self.value(open, what)?);
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.bump();
                }
                Some(c) if c == close => {
                    self.bump();
                    return Ok(items);
                }
                Some(_) => return Err(SyntaxError::new(self.pos, format!("`,` or `{close}`"))),
                None => return Err(SyntaxError::new(open, format!("`{close}` closing {what}"))),
            }
        }
    }

    fn value(&mut self, open: usize, what: &str) -> Result<Value, SyntaxError> {
        self.skip_ws();
        match self.peek() {
            None => Err(SyntaxError::new(open, format!("value inside {what}"))),
            Some('\'') => self.quoted(),
            Some('[') => {
                let at = self.pos;
                self.bump();
                Ok(Value::List(self.sequence(']', at, "`[`")?))
            }
            Some(_) => self.bare(),
        }
    }

    fn quoted(&mut self) -> Result<Value, SyntaxError> {
        let open = self.pos;
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err(SyntaxError::new(open, "closing `'`")),
                Some('\\') => match self.bump() {
                    Some(c) => s.push(c),
                    None => return Err(SyntaxError::new(open, "closing `'`")),
                },
                Some('\'') => return Ok(Value::atom(s)),
                Some(c) => s.push(c),
            }
        }
    }

    fn bare(&mut self) -> Result<Value, SyntaxError> {
        let start = self.pos;
        self.skip_while(|c| !matches!(c, '(' | ')' | '[' | ']' | ','));
        if let Some(c @ ('(' | '[')) = self.peek() {
            return Err(SyntaxError::new(self.pos, format!("atom (nested `{c}` is not allowed)")));
        }
        let raw = self.src[start..self.pos].trim();
        if raw.is_empty() {
            return Err(SyntaxError::new(start, "value"));
        }
        Ok(Value::atom(raw))
    }
}

/// Canonical whitespace for comparing annotation text: runs of whitespace
/// outside quoted atoms collapse to one space, and spaces next to
/// `, ( ) [ ] .` are dropped.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    let mut chars = text.chars().peekable();
    let mut prev_sig: Option<char> = None;

    let tight = |c: char| matches!(c, ',' | '(' | ')' | '[' | ']' | '.');

    while let Some(c) = chars.next() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        let starts_quote = c == '\'' && matches!(prev_sig, None | Some('(' | ',' | '['));
        if pending_space {
            if let Some(p) = prev_sig {
                if !tight(p) && !tight(c) {
                    out.push(' ');
                }
            }
            pending_space = false;
        }
        out.push(c);
        if starts_quote {
            while let Some(q) = chars.next() {
                out.push(q);
                if q == '\\' {
                    if let Some(e) = chars.next() {
                        out.push(e);
                    }
                } else if q == '\'' {
                    break;
                }
            }
            prev_sig = Some('\'');
        } else {
            prev_sig = Some(c);
        }
    }
    out
}
