use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use regex::Regex;
use serde::Deserialize;

use super::{FewShot, NlBackend, NlError, RealizeRequest, Repair, UnderstandRequest};
use crate::predicate::{Predicate, PredicateSet, Style};

fn key(utterance: &str) -> String {
    utterance.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Deserialize)]
struct TableFile {
    format: u32,
    #[serde(default)]
    turns: Vec<TurnEntry>,
    #[serde(default)]
    rules: Vec<RuleEntry>,
}

#[derive(Debug, Clone, Deserialize)]
struct TurnEntry {
    utterance: String,
    predicates: String,
}

#[derive(Debug, Clone, Deserialize)]
struct RuleEntry {
    pattern: String,
    predicates: String,
}

/// Scripted utterance to predicate-text table. Exact utterances (compared
/// case- and whitespace-insensitively) win; otherwise every matching
/// keyword rule contributes its predicates, in file order.
#[derive(Debug, Clone, Default)]
pub struct MockTable {
    turns: Vec<TurnEntry>,
    exact: HashMap<String, usize>,
    rules: Vec<(Regex, String)>,
}

impl MockTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, NlError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| NlError::Config(format!("cannot read mock table {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, NlError> {
        let file: TableFile = toml::from_str(text).map_err(|e| NlError::Config(format!("mock table: {e}")))?;
        if file.format != 1 {
            return Err(NlError::Config(format!("mock table format {} unsupported", file.format)));
        }
        let exact = file.turns.iter().enumerate().map(|(i, t)| (key(&t.utterance), i)).collect();
        let rules = file
            .rules
            .into_iter()
            .map(|r| {
                Regex::new(&r.pattern)
                    .map(|re| (re, r.predicates))
                    .map_err(|e| NlError::Config(format!("bad rule pattern `{}`: {e}", r.pattern)))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { turns: file.turns, exact, rules })
    }

    pub fn lookup(&self, utterance: &str) -> String {
        if let Some(&i) = self.exact.get(&key(utterance)) {
            return self.turns[i].predicates.clone();
        }
        self.rules
            .iter()
            .filter(|(re, _)| re.is_match(utterance))
            .map(|(_, p)| p.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// The scripted turns, usable as few-shot examples.
    pub fn examples(&self) -> Vec<FewShot> {
        self.turns
            .iter()
            .map(|t| FewShot { utterance: t.utterance.clone(), predicates: t.predicates.clone() })
            .collect()
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ConciergeTemplates {
    pub greet: String,
    pub ask_default: String,
    #[serde(default)]
    pub ask: BTreeMap<String, String>,
    pub recommend: String,
    pub answer_default: String,
    #[serde(default)]
    pub answer: BTreeMap<String, String>,
    pub unknown: String,
    pub no_match: String,
    pub no_match_hint: String,
    pub clarify: String,
    pub farewell: String,
    /// Friendlier wording for price values; the value itself is still stated.
    #[serde(default)]
    pub price_phrase: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct CompanionTemplates {
    pub greet: String,
    pub stay_positive: String,
    pub stay_negative: String,
    pub shift: String,
    pub jump: String,
    pub jump_via: String,
    pub farewell: String,
}

/// Reply templates for the mock realizer. Placeholders are `{name}`.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct Templates {
    pub format: u32,
    pub concierge: ConciergeTemplates,
    pub companion: CompanionTemplates,
}

impl Templates {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, NlError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| NlError::Config(format!("cannot read templates {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, NlError> {
        let t: Templates = toml::from_str(text).map_err(|e| NlError::Config(format!("templates: {e}")))?;
        if t.format != 1 {
            return Err(NlError::Config(format!("templates format {} unsupported", t.format)));
        }
        Ok(t)
    }

    pub fn render(&self, task: &str, preds: &PredicateSet) -> String {
        let text = match task {
            "concierge" => self.concierge_text(preds),
            "companion" => self.companion_text(preds),
            _ => preds.serialize(Style::Companion),
        };
        tidy(&text)
    }

    fn concierge_text(&self, preds: &PredicateSet) -> String {
        let t = &self.concierge;
        let first = |f: &str| preds.iter().find(|p| p.functor == f);
        let arg = |p: &Predicate, i: usize| p.atom_arg(i).unwrap_or_default().to_string();

        if preds.contains_functor("farewell") {
            return t.farewell.clone();
        }
        if preds.contains_functor("greet") {
            return t.greet.clone();
        }
        if let Some(p) = first("recommend") {
            let mut vars = vec![("entity".to_string(), arg(p, 0))];
            for a in preds.with_functor("attribute") {
                vars.push((arg(a, 0), arg(a, 1)));
            }
            let price = vars.iter().find(|(k, _)| k == "price range").map(|(_, v)| v.clone()).unwrap_or_default();
            let phrase = t.price_phrase.get(&price).cloned().unwrap_or_else(|| price.clone());
            vars.push(("price phrase".into(), phrase));
            return fill(&t.recommend, &vars);
        }
        if let Some(p) = first("answer") {
            let slot = arg(p, 1);
            let tpl = t.answer.get(&slot).unwrap_or(&t.answer_default);
            return fill(tpl, &[("entity".into(), arg(p, 0)), ("slot".into(), slot), ("value".into(), arg(p, 2))]);
        }
        if let Some(p) = first("unknown") {
            return fill(&t.unknown, &[("entity".into(), arg(p, 0)), ("slot".into(), arg(p, 1))]);
        }
        if let Some(p) = first("ask") {
            let slot = arg(p, 0);
            let tpl = t.ask.get(&slot).unwrap_or(&t.ask_default);
            return fill(tpl, &[("slot".into(), slot)]);
        }
        if let Some(p) = first("no_match") {
            return match p.atom_arg(0) {
                Some(slot) => fill(&t.no_match_hint, &[("slot".into(), slot.to_string())]),
                None => t.no_match.clone(),
            };
        }
        let slots: Vec<String> = preds.with_functor("clarify").map(|p| arg(p, 0)).collect();
        if !slots.is_empty() {
            return fill(&t.clarify, &[("slots".into(), slots.join(" and "))]);
        }
        preds.serialize(Style::Concierge)
    }

    fn companion_text(&self, preds: &PredicateSet) -> String {
        let t = &self.companion;
        if preds.contains_functor("quit") {
            return t.farewell.clone();
        }
        let Some(talk) = preds.with_functor("talk").next() else {
            return t.greet.clone();
        };
        let get = |p: &Predicate, i: usize| p.atom_arg(i).unwrap_or_default().to_string();
        let concept = get(talk, 1);
        let aspect = get(talk, 2);
        let snippet = preds.with_functor("content").next().map(|p| get(p, 1)).unwrap_or_default();
        let negative = preds.with_functor("attitude").any(|p| p.atom_arg(0) == Some("negative"));
        let kind = preds.with_functor("move").next().map(|p| get(p, 0)).unwrap_or_default();
        let mut vars = vec![
            ("concept".to_string(), concept),
            ("aspect".to_string(), aspect),
            ("snippet".to_string(), snippet),
        ];
        let greet = preds.contains_functor("greet");
        let body = match kind.as_str() {
            "jump_topic" => {
                let (from, via) = preds
                    .with_functor("link")
                    .next()
                    .map(|p| (get(p, 0), get(p, 1)))
                    .unwrap_or_default();
                let via = if via.is_empty() || via == "-" {
                    String::new()
                } else {
                    fill(&t.jump_via, &[("person".into(), via)])
                };
                vars.push(("from".into(), from));
                vars.push(("via".into(), via));
                if greet {
                    // opening move: nothing to jump from yet
                    return format!("{} {}", t.greet, fill("{snippet} Have you seen {concept}?", &vars));
                }
                fill(&t.jump, &vars)
            }
            "shift_aspect" => fill(&t.shift, &vars),
            _ if negative => fill(&t.stay_negative, &vars),
            _ => fill(&t.stay_positive, &vars),
        };
        body
    }
}

fn fill(template: &str, vars: &[(String, String)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

/// Collapses doubled spaces left by empty placeholders.
fn tidy(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").replace(" .", ".").replace(" ?", "?")
}

/// Deterministic stand-in for a language model: scripted tables for
/// parsing, templates for realization.
#[derive(Debug, Clone)]
pub struct MockBackend {
    table: MockTable,
    templates: Templates,
}

impl MockBackend {
    pub fn new(table: MockTable, templates: Templates) -> Self {
        Self { table, templates }
    }

    pub fn table(&self) -> &MockTable {
        &self.table
    }
}

impl NlBackend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn parse(&self, req: &UnderstandRequest, _repair: Option<&Repair>) -> Result<String, NlError> {
        Ok(self.table.lookup(&req.utterance))
    }

    fn realize(&self, req: &RealizeRequest) -> Result<String, NlError> {
        Ok(self.templates.render(&req.task, &req.predicates))
    }
}

/// Returns the gold annotation for every known utterance.
#[derive(Debug, Clone, Default)]
pub struct GoldEchoBackend {
    gold: HashMap<String, String>,
}

impl GoldEchoBackend {
    pub fn new<I: IntoIterator<Item = (String, String)>>(pairs: I) -> Self {
        Self { gold: pairs.into_iter().map(|(u, p)| (key(&u), p)).collect() }
    }
}

impl NlBackend for GoldEchoBackend {
    fn name(&self) -> &str {
        "gold-echo"
    }

    fn parse(&self, req: &UnderstandRequest, _repair: Option<&Repair>) -> Result<String, NlError> {
        Ok(self.gold.get(&key(&req.utterance)).cloned().unwrap_or_default())
    }

    fn realize(&self, req: &RealizeRequest) -> Result<String, NlError> {
        Ok(req.predicates.serialize(Style::Companion))
    }
}

/// Never finds anything.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmptyBackend;

impl NlBackend for EmptyBackend {
    fn name(&self) -> &str {
        "empty"
    }

    fn parse(&self, _req: &UnderstandRequest, _repair: Option<&Repair>) -> Result<String, NlError> {
        Ok(String::new())
    }

    fn realize(&self, _req: &RealizeRequest) -> Result<String, NlError> {
        Ok("...".into())
    }
}
