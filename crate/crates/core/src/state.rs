//! Per-session dialogue state and the update that merges each user turn.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ontology::{Ontology, ValidationReport, QUERY};
use crate::predicate::{Predicate, PredicateSet, Style};

#[derive(Debug, Error)]
pub enum StateError {
    #[error("session has ended")]
    StateClosed,
    #[error("predicates failed validation:\n{0}")]
    ValidationFailed(ValidationReport),
    #[error("unknown slot `{0}`")]
    UnknownSlot(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotConstraint {
    pub addressed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub included: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub excluded: BTreeSet<String>,
    #[serde(default)]
    pub query_pending: bool,
}

/// Values a slot may still take.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSet {
    Finite(BTreeSet<String>),
    /// Open slot with only exclusions: anything except these.
    AllExcept(BTreeSet<String>),
}

impl CandidateSet {
    pub fn contains(&self, value: &str) -> bool {
        match self {
            CandidateSet::Finite(s) => s.contains(value),
            CandidateSet::AllExcept(s) => !s.contains(value),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, CandidateSet::Finite(s) if s.is_empty())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attitude {
    Positive,
    Negative,
}

impl Attitude {
    pub fn as_str(self) -> &'static str {
        match self {
            Attitude::Positive => "positive",
            Attitude::Negative => "negative",
        }
    }
}

impl fmt::Display for Attitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Attitude {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Attitude::Positive),
            "negative" => Ok(Attitude::Negative),
            other => Err(format!("unknown attitude `{other}`")),
        }
    }
}

/// A concept and the aspect of it under discussion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Focus {
    pub category: String,
    pub concept: String,
    pub aspect: String,
}

impl Focus {
    pub fn new(category: impl Into<String>, concept: impl Into<String>, aspect: impl Into<String>) -> Self {
        Self { category: category.into(), concept: concept.into(), aspect: aspect.into() }
    }

    pub fn talk(&self) -> Predicate {
        use crate::predicate::Value;
        Predicate::new(
            "talk",
            vec![Value::atom(&self.category), Value::atom(&self.concept), Value::atom(&self.aspect)],
        )
    }
}

/// Companion-side bookkeeping of what has been talked about.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicState {
    /// What the next move builds on: the user's latest focus, else the bot's.
    pub current: Option<Focus>,
    /// Focus of the last move the bot made.
    pub bot_focus: Option<Focus>,
    pub discussed: BTreeMap<String, BTreeSet<String>>,
    /// Latest user attitude per concept.
    pub attitudes: BTreeMap<String, Attitude>,
    /// Attitude carried by the most recent user turn that had one.
    pub last_attitude: Option<Attitude>,
    /// The latest user turn either brought new content on `current` or moved
    /// the focus there itself.
    pub engaged: bool,
    /// Logical time each concept was last in focus.
    pub visits: BTreeMap<String, u64>,
    pub clock: u64,
    /// Themes extracted from each user turn, in order.
    pub themes_log: Vec<PredicateSet>,
}

impl TopicState {
    pub fn visit(&mut self, focus: &Focus) {
        self.clock += 1;
        self.visits.insert(focus.concept.clone(), self.clock);
        self.discussed
            .entry(focus.concept.clone())
            .or_default()
            .insert(focus.aspect.clone());
    }

    pub fn is_discussed(&self, concept: &str, aspect: &str) -> bool {
        self.discussed.get(concept).is_some_and(|s| s.contains(aspect))
    }

    /// Records a move chosen by the bot.
    pub fn commit_move(&mut self, focus: Focus) {
        self.visit(&focus);
        self.current = Some(focus.clone());
        self.bot_focus = Some(focus);
        self.engaged = false;
    }

    /// Themes log in the annotation style, one block per user turn.
    pub fn themes_transcript(&self) -> Vec<String> {
        self.themes_log.iter().map(|t| t.serialize(Style::Companion)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    Bot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
    pub predicates: PredicateSet,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogState {
    pub session_id: String,
    pub turn_index: usize,
    pub slots: BTreeMap<String, SlotConstraint>,
    /// Constraint predicates merged so far, first mention first, no repeats.
    pub facts: Vec<Predicate>,
    pub pending_queries: Vec<String>,
    /// Entity the user can refer back to ("its address").
    pub focus_entity: Option<String>,
    pub quit: bool,
    pub history: Vec<Turn>,
    pub topic: TopicState,
}

impl DialogState {
    pub fn new(session_id: impl Into<String>) -> Self {
        Self { session_id: session_id.into(), ..Self::default() }
    }

    pub fn slot(&self, name: &str) -> Option<&SlotConstraint> {
        self.slots.get(name)
    }

    pub fn is_addressed(&self, slot: &str) -> bool {
        self.slots.get(slot).is_some_and(|c| c.addressed)
    }

    /// Merges one user turn, returning the new state.
    pub fn update(&self, preds: &PredicateSet, onto: &Ontology) -> Result<DialogState, StateError> {
        self.update_turn("", preds, onto)
    }

    pub fn update_turn(&self, text: &str, preds: &PredicateSet, onto: &Ontology) -> Result<DialogState, StateError> {
        if self.quit {
            return Err(StateError::StateClosed);
        }
        let report = onto.validate(preds);
        if !report.is_ok() {
            return Err(StateError::ValidationFailed(report));
        }

        let mut next = self.clone();
        for p in preds.iter() {
            match p.functor.as_str() {
                "require" | "not_require" => next.merge_constraint(p, onto),
                "quit" => next.quit = true,
                _ => {}
            }
        }
        next.merge_topics(preds);
        next.turn_index += 1;
        next.history.push(Turn { speaker: Speaker::User, text: text.to_string(), predicates: preds.clone() });
        Ok(next)
    }

    fn merge_constraint(&mut self, p: &Predicate, onto: &Ontology) {
        // validated: (slot, flat list)
        let slot = p.atom_arg(0).unwrap_or_default().to_string();
        let values: BTreeSet<String> = p.args[1]
            .atoms()
            .unwrap_or_default()
            .into_iter()
            .map(str::to_string)
            .collect();
        if !self.facts.contains(p) {
            self.facts.push(p.clone());
        }

        let c = self.slots.entry(slot.clone()).or_default();
        if p.functor == "require" && values.len() == 1 && values.contains(QUERY) {
            c.query_pending = true;
            if !self.pending_queries.contains(&slot) {
                self.pending_queries.push(slot);
            }
            return;
        }
        c.addressed = true;
        if p.functor == "not_require" {
            c.excluded.extend(values);
            return;
        }
        let full = onto
            .full_domain(&slot)
            .ok()
            .map(|d| d.iter().cloned().collect::<BTreeSet<_>>());
        if full.as_ref() == Some(&values) {
            // full domain: no preference
            return;
        }
        c.included = Some(match c.included.take() {
            Some(prev) if full.is_some() => prev.intersection(&values).cloned().collect(),
            // open values match case-insensitively, as in the filter
            Some(prev) => {
                let wanted: BTreeSet<String> = values.iter().map(|v| v.to_lowercase()).collect();
                prev.into_iter().filter(|v| wanted.contains(&v.to_lowercase())).collect()
            }
            None => values,
        });
    }

    fn merge_topics(&mut self, preds: &PredicateSet) {
        let has_topic = preds
            .iter()
            .any(|p| matches!(p.functor.as_str(), "talk" | "content" | "attitude"));
        if !has_topic {
            return;
        }
        let topic = &mut self.topic;
        let mut last_talk: Option<Focus> = None;
        let mut content_aspects = BTreeSet::new();
        for p in preds.iter() {
            match p.functor.as_str() {
                "talk" => {
                    let focus = Focus::new(
                        p.atom_arg(0).unwrap_or_default(),
                        p.atom_arg(1).unwrap_or_default(),
                        p.atom_arg(2).unwrap_or_default(),
                    );
                    topic.visit(&focus);
                    last_talk = Some(focus);
                }
                "content" => {
                    content_aspects.insert(p.atom_arg(0).unwrap_or_default().to_string());
                }
                "attitude" => {
                    if let Some(a) = p.atom_arg(0).and_then(|s| s.parse::<Attitude>().ok()) {
                        topic.last_attitude = Some(a);
                        if let Some(t) = &last_talk {
                            topic.attitudes.insert(t.concept.clone(), a);
                        }
                    }
                }
                _ => {}
            }
        }
        match last_talk {
            Some(focus) => {
                topic.engaged =
                    content_aspects.contains(&focus.aspect) || topic.bot_focus.as_ref() != Some(&focus);
                topic.current = Some(focus);
            }
            None => topic.engaged = false,
        }
        topic.themes_log.push(preds.clone());
    }

    /// Appends a bot turn to the history.
    pub fn record_bot(&mut self, text: impl Into<String>, preds: PredicateSet) {
        self.history.push(Turn { speaker: Speaker::Bot, text: text.into(), predicates: preds });
    }

    pub fn candidates(&self, slot: &str, onto: &Ontology) -> Result<CandidateSet, StateError> {
        let schema = onto.slot(slot).ok_or_else(|| StateError::UnknownSlot(slot.to_string()))?;
        let c = self.slots.get(slot).cloned().unwrap_or_default();
        Ok(match (schema.closed_values(), c.included) {
            (Some(domain), None) => {
                CandidateSet::Finite(domain.iter().filter(|v| !c.excluded.contains(*v)).cloned().collect())
            }
            (_, Some(inc)) => CandidateSet::Finite(inc.difference(&c.excluded).cloned().collect()),
            (None, None) => CandidateSet::AllExcept(c.excluded),
        })
    }

    /// Drops every constraint on `slot` so it will be asked again.
    pub fn reset_slot(&mut self, slot: &str) {
        self.slots.remove(slot);
        self.pending_queries.retain(|s| s != slot);
        self.facts.retain(|p| {
            !(matches!(p.functor.as_str(), "require" | "not_require") && p.atom_arg(0) == Some(slot))
        });
    }

    /// Marks a pending query as answered.
    pub fn consume_query(&mut self, slot: &str) {
        self.pending_queries.retain(|s| s != slot);
        if let Some(c) = self.slots.get_mut(slot) {
            c.query_pending = false;
        }
    }

    /// The accumulated constraint state in annotation form.
    pub fn facts_block(&self) -> String {
        PredicateSet(self.facts.clone()).serialize(Style::Concierge)
    }

    pub fn snapshot(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    pub fn from_snapshot(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// SHA-256 over the canonical JSON form, leaving out the session id.
    pub fn digest(&self) -> String {
        let anonymous = DialogState { session_id: String::new(), ..self.clone() };
        let json = serde_json::to_vec(&anonymous).expect("state serializes");
        hex::encode(Sha256::digest(&json))
    }
}
