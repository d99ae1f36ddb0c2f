//! Per-task declaration of legal functors, slots, value domains and aspect
//! catalogs, loaded from a TOML file (`format = 1`).
//!
//! The file layout is described by `docs/schemas/ontology.schema.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::predicate::{Predicate, PredicateSet, Value};

/// The value every queryable slot accepts to mean "tell me this attribute".
pub const QUERY: &str = "query";

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("cannot read ontology file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed ontology file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unsupported ontology format {0} (expected 1)")]
    Format(u32),
    #[error("invalid ontology: {0}")]
    Invalid(String),
    #[error("unknown slot `{0}`")]
    UnknownSlot(String),
    #[error("slot `{0}` has an open domain")]
    OpenDomain(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DomainRepr", into = "DomainRepr")]
pub enum Domain {
    Open,
    Closed(Vec<String>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DomainRepr {
    Marker(String),
    Values(Vec<String>),
}

impl TryFrom<DomainRepr> for Domain {
    type Error = String;
    fn try_from(r: DomainRepr) -> Result<Self, Self::Error> {
        match r {
            DomainRepr::Marker(m) if m == "open" => Ok(Domain::Open),
            DomainRepr::Marker(m) => Err(format!("domain must be a list or \"open\", got \"{m}\"")),
            DomainRepr::Values(v) => Ok(Domain::Closed(v)),
        }
    }
}

impl From<Domain> for DomainRepr {
    fn from(d: Domain) -> Self {
        match d {
            Domain::Open => DomainRepr::Marker("open".into()),
            Domain::Closed(v) => DomainRepr::Values(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotSchema {
    pub name: String,
    pub domain: Domain,
    #[serde(default)]
    pub queryable: bool,
    #[serde(default)]
    pub required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<u32>,
}

impl SlotSchema {
    pub fn is_closed(&self) -> bool {
        matches!(self.domain, Domain::Closed(_))
    }

    pub fn closed_values(&self) -> Option<&[String]> {
        match &self.domain {
            Domain::Closed(v) => Some(v),
            Domain::Open => None,
        }
    }
}

/// What an argument position of a functor accepts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArgKind {
    Keyword(ArgKeyword),
    OneOf { one_of: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgKeyword {
    /// A declared slot name.
    Slot,
    /// A list of values from the domain of the preceding slot argument.
    Values,
    /// One value from the domain of the preceding slot argument.
    Value,
    /// Any atom.
    Text,
    /// A category with an aspect catalog.
    Category,
    /// An aspect of the preceding category argument (any category if none).
    Aspect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctorSig {
    pub name: String,
    #[serde(default)]
    pub args: Vec<ArgKind>,
}

impl FunctorSig {
    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CktSection {
    /// Closed slot whose domain order ranks matching entities (best last).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ontology {
    pub format: u32,
    pub task: String,
    #[serde(default)]
    pub ckt: CktSection,
    #[serde(default)]
    pub slots: Vec<SlotSchema>,
    #[serde(default)]
    pub functors: Vec<FunctorSig>,
    #[serde(default)]
    pub aspects: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Ok,
    UnknownFunctor,
    ArityMismatch,
    UnknownSlot,
    ValueOutOfDomain,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Ok => "OK",
            Verdict::UnknownFunctor => "UNKNOWN_FUNCTOR",
            Verdict::ArityMismatch => "ARITY_MISMATCH",
            Verdict::UnknownSlot => "UNKNOWN_SLOT",
            Verdict::ValueOutOfDomain => "VALUE_OUT_OF_DOMAIN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub predicate: Predicate,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// One verdict per validated predicate, in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<ReportEntry>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.entries.iter().all(|e| e.verdict == Verdict::Ok)
    }

    pub fn problems(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| e.verdict != Verdict::Ok)
    }

    /// True when any entry is structurally unusable (wrong functor or arity).
    pub fn has_structural_errors(&self) -> bool {
        self.entries
            .iter()
            .any(|e| matches!(e.verdict, Verdict::UnknownFunctor | Verdict::ArityMismatch))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            write!(f, "{}: {}", e.predicate, e.verdict)?;
            if let Some(d) = &e.detail {
                write!(f, " ({d})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Ontology {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, OntologyError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, OntologyError> {
        let onto: Ontology = toml::from_str(text)?;
        onto.check()?;
        Ok(onto)
    }

    fn check(&self) -> Result<(), OntologyError> {
        let invalid = |m: String| Err(OntologyError::Invalid(m));
        if self.format != 1 {
            return Err(OntologyError::Format(self.format));
        }
        let mut names = BTreeSet::new();
        let mut priorities = BTreeSet::new();
        for s in &self.slots {
            if !names.insert(s.name.as_str()) {
                return invalid(format!("slot `{}` declared twice", s.name));
            }
            if let Domain::Closed(values) = &s.domain {
                if values.is_empty() {
                    return invalid(format!("slot `{}` has an empty domain", s.name));
                }
                let distinct: BTreeSet<_> = values.iter().collect();
                if distinct.len() != values.len() {
                    return invalid(format!("slot `{}` repeats a domain value", s.name));
                }
            }
            if s.required {
                match s.priority {
                    None => return invalid(format!("required slot `{}` has no priority", s.name)),
                    Some(p) if !priorities.insert(p) => {
                        return invalid(format!("priority {p} used by more than one required slot"))
                    }
                    Some(_) => {}
                }
            }
        }
        let mut sigs = BTreeSet::new();
        for f in &self.functors {
            if f.name.is_empty() {
                return invalid("functor with empty name".into());
            }
            if !sigs.insert((f.name.as_str(), f.arity())) {
                return invalid(format!("functor {}/{} declared twice", f.name, f.arity()));
            }
        }
        for (cat, list) in &self.aspects {
            let distinct: BTreeSet<_> = list.iter().collect();
            if distinct.len() != list.len() {
                return invalid(format!("aspect repeated in category `{cat}`"));
            }
        }
        if let Some(rank) = &self.ckt.rank_by {
            if !self.slot(rank).is_some_and(SlotSchema::is_closed) {
                return invalid(format!("rank_by slot `{rank}` must be a declared closed slot"));
            }
        }
        Ok(())
    }

    pub fn slot(&self, name: &str) -> Option<&SlotSchema> {
        self.slots.iter().find(|s| s.name == name)
    }

    pub fn has_functor(&self, name: &str, arity: usize) -> bool {
        self.functors.iter().any(|f| f.name == name && f.arity() == arity)
    }

    /// Required slots in asking order.
    pub fn required_slots(&self) -> Vec<&SlotSchema> {
        let mut req: Vec<&SlotSchema> = self.slots.iter().filter(|s| s.required).collect();
        req.sort_by_key(|s| s.priority);
        req
    }

    pub fn full_domain(&self, slot: &str) -> Result<&[String], OntologyError> {
        let schema = self.slot(slot).ok_or_else(|| OntologyError::UnknownSlot(slot.to_string()))?;
        schema
            .closed_values()
            .ok_or_else(|| OntologyError::OpenDomain(slot.to_string()))
    }

    pub fn aspects_of(&self, category: &str) -> Option<&[String]> {
        self.aspects.get(category).map(Vec::as_slice)
    }

    pub fn validate(&self, preds: &PredicateSet) -> ValidationReport {
        ValidationReport {
            entries: preds
                .iter()
                .map(|p| {
                    let (verdict, detail) = match self.check_predicate(p) {
                        Ok(()) => (Verdict::Ok, None),
                        Err((v, d)) => (v, Some(d)),
                    };
                    ReportEntry { predicate: p.clone(), verdict, detail }
                })
                .collect(),
        }
    }

    fn check_predicate(&self, p: &Predicate) -> Result<(), (Verdict, String)> {
        let candidates: Vec<&FunctorSig> = self.functors.iter().filter(|f| f.name == p.functor).collect();
        if candidates.is_empty() {
            return Err((Verdict::UnknownFunctor, format!("`{}` is not declared", p.functor)));
        }
        let Some(sig) = candidates.iter().find(|f| f.arity() == p.arity()) else {
            let arities: Vec<String> = candidates.iter().map(|f| f.arity().to_string()).collect();
            return Err((
                Verdict::ArityMismatch,
                format!("`{}` takes {} argument(s), got {}", p.functor, arities.join(" or "), p.arity()),
            ));
        };

        let mut slot: Option<&SlotSchema> = None;
        let mut category: Option<&str> = None;
        for (kind, arg) in sig.args.iter().zip(&p.args) {
            match kind {
                ArgKind::Keyword(ArgKeyword::Text) => {
                    atom(arg)?;
                }
                ArgKind::Keyword(ArgKeyword::Slot) => {
                    let name = atom(arg)?;
                    slot = Some(
                        self.slot(name)
                            .ok_or((Verdict::UnknownSlot, format!("`{name}` is not a declared slot")))?,
                    );
                }
                ArgKind::Keyword(ArgKeyword::Values) => {
                    let values = arg
                        .atoms()
                        .ok_or((Verdict::ValueOutOfDomain, "expected a flat list of atoms".to_string()))?;
                    if values.is_empty() {
                        return Err((Verdict::ValueOutOfDomain, "empty value list".into()));
                    }
                    if let Some(s) = slot {
                        check_values(s, &values)?;
                    }
                }
                ArgKind::Keyword(ArgKeyword::Value) => {
                    let v = atom(arg)?;
                    if let Some(s) = slot {
                        if let Some(domain) = s.closed_values() {
                            if !domain.iter().any(|d| d == v) {
                                return Err(out_of_domain(s, v));
                            }
                        }
                    }
                }
                ArgKind::Keyword(ArgKeyword::Category) => {
                    let c = atom(arg)?;
                    if !self.aspects.contains_key(c) {
                        return Err((Verdict::ValueOutOfDomain, format!("unknown category `{c}`")));
                    }
                    category = Some(c);
                }
                ArgKind::Keyword(ArgKeyword::Aspect) => {
                    let a = atom(arg)?;
                    let known = match category {
                        Some(c) => self.aspects[c].iter().any(|x| x == a),
                        None => self.aspects.values().flatten().any(|x| x == a),
                    };
                    if !known {
                        return Err((Verdict::ValueOutOfDomain, format!("unknown aspect `{a}`")));
                    }
                }
                ArgKind::OneOf { one_of } => {
                    let v = atom(arg)?;
                    if !one_of.iter().any(|x| x == v) {
                        return Err((Verdict::ValueOutOfDomain, format!("`{v}` not in {one_of:?}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Plain-text listing of functors and slots for prompting a parser model.
    pub fn prompt_summary(&self) -> String {
        let mut out = String::new();
        out.push_str("Predicates:\n");
        for f in &self.functors {
            let args: Vec<String> = f
                .args
                .iter()
                .map(|a| match a {
                    ArgKind::Keyword(k) => format!("{k:?}").to_lowercase(),
                    ArgKind::OneOf { one_of } => one_of.join("|"),
                })
                .collect();
            if args.is_empty() {
                out.push_str(&format!("  {}\n", f.name));
            } else {
                out.push_str(&format!("  {}({})\n", f.name, args.join(", ")));
            }
        }
        if !self.slots.is_empty() {
            out.push_str("Slots:\n");
            for s in &self.slots {
                let domain = match &s.domain {
                    Domain::Open => "any value".to_string(),
                    Domain::Closed(v) => v.join(", "),
                };
                let query = if s.queryable { " (may be 'query')" } else { "" };
                out.push_str(&format!("  {}: {domain}{query}\n", s.name));
            }
        }
        for (cat, list) in &self.aspects {
            out.push_str(&format!("Aspects of {cat}: {}\n", list.join(", ")));
        }
        out
    }
}

fn atom(v: &Value) -> Result<&str, (Verdict, String)> {
    v.as_atom()
        .ok_or((Verdict::ValueOutOfDomain, "expected an atom, found a list".to_string()))
}

fn out_of_domain(s: &SlotSchema, v: &str) -> (Verdict, String) {
    (Verdict::ValueOutOfDomain, format!("`{v}` is not a value of `{}`", s.name))
}

fn check_values(s: &SlotSchema, values: &[&str]) -> Result<(), (Verdict, String)> {
    if values.contains(&QUERY) {
        if values.len() == 1 && s.queryable {
            return Ok(());
        }
        return Err((Verdict::ValueOutOfDomain, format!("`{}` cannot be queried", s.name)));
    }
    if let Some(domain) = s.closed_values() {
        if let Some(bad) = values.iter().find(|v| !domain.iter().any(|d| d == *v)) {
            return Err(out_of_domain(s, bad));
        }
    }
    Ok(())
}
