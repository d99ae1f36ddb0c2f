//! Conversational knowledge template: checks that the gathered constraints
//! are complete and consistent, then picks exactly one next action.

use serde::{Deserialize, Serialize};

use crate::ontology::{Ontology, OntologyError};
use crate::predicate::{Predicate, PredicateSet, Value};
use crate::state::DialogState;

/// Source of entities the template can recommend.
pub trait Catalog {
    /// Names of entities satisfying every constraint in `state`, best first.
    fn matching(&self, state: &DialogState, onto: &Ontology) -> Vec<String>;

    /// Stored attribute of an entity, if it has one.
    fn attribute(&self, entity: &str, slot: &str) -> Option<String>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CktSpec {
    /// Required slots in asking order.
    pub required: Vec<String>,
    pub rank_by: Option<String>,
}

impl CktSpec {
    pub fn from_ontology(onto: &Ontology) -> Result<Self, OntologyError> {
        for (f, arity) in [("require", 2), ("not_require", 2), ("quit", 0)] {
            if !onto.has_functor(f, arity) {
                return Err(OntologyError::Invalid(format!("template needs functor {f}/{arity}")));
            }
        }
        Ok(Self {
            required: onto.required_slots().into_iter().map(|s| s.name.clone()).collect(),
            rank_by: onto.ckt.rank_by.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub slot: String,
    /// Constraint predicates that together leave no candidate.
    pub predicates: Vec<Predicate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    AskSlot { slot: String },
    Recommend { entity: String, facts: Vec<(String, String)> },
    AnswerQuery { entity: String, slot: String, value: Option<String> },
    /// No entity matches; `hint` names the constraint worth relaxing.
    ReportNone { hint: Option<String> },
    Clarify { conflicts: Vec<Conflict> },
    Farewell,
}

impl Action {
    pub fn kind(&self) -> &'static str {
        match self {
            Action::AskSlot { .. } => "ask_slot",
            Action::Recommend { .. } => "recommend",
            Action::AnswerQuery { .. } => "answer_query",
            Action::ReportNone { .. } => "report_none",
            Action::Clarify { .. } => "clarify",
            Action::Farewell => "farewell",
        }
    }

    /// The action in predicate form, e.g. `ask('price range')`.
    pub fn to_predicates(&self) -> PredicateSet {
        let p = |f: &str, args: &[&str]| Predicate::new(f, args.iter().map(Value::atom).collect());
        match self {
            Action::AskSlot { slot } => PredicateSet(vec![p("ask", &[slot])]),
            Action::Recommend { entity, facts } => {
                let mut out = vec![p("recommend", &[entity])];
                out.extend(facts.iter().map(|(s, v)| p("attribute", &[s, v])));
                PredicateSet(out)
            }
            Action::AnswerQuery { entity, slot, value: Some(v) } => PredicateSet(vec![p("answer", &[entity, slot, v])]),
            Action::AnswerQuery { entity, slot, value: None } => PredicateSet(vec![p("unknown", &[entity, slot])]),
            Action::ReportNone { hint: Some(h) } => PredicateSet(vec![p("no_match", &[h])]),
            Action::ReportNone { hint: None } => PredicateSet(vec![p("no_match", &[])]),
            Action::Clarify { conflicts } => conflicts.iter().map(|c| p("clarify", &[&c.slot])).collect(),
            Action::Farewell => PredicateSet(vec![p("farewell", &[])]),
        }
    }
}

/// Required slots not yet addressed, in asking order.
pub fn check_completeness(spec: &CktSpec, state: &DialogState) -> Vec<String> {
    spec.required.iter().filter(|s| !state.is_addressed(s)).cloned().collect()
}

/// One conflict per closed slot left without candidates.
pub fn check_consistency(state: &DialogState, onto: &Ontology) -> Vec<Conflict> {
    onto.slots
        .iter()
        .filter(|s| s.is_closed())
        .filter(|s| state.candidates(&s.name, onto).is_ok_and(|c| c.is_empty()))
        .map(|s| Conflict {
            slot: s.name.clone(),
            predicates: state
                .facts
                .iter()
                .filter(|p| p.atom_arg(0) == Some(s.name.as_str()))
                .cloned()
                .collect(),
        })
        .collect()
}

/// Precedence: farewell, clarify, answer a pending query about the entity
/// in focus, ask the first missing slot, recommend or report no match.
pub fn next_action(spec: &CktSpec, state: &DialogState, onto: &Ontology, catalog: &dyn Catalog) -> Action {
    if state.quit {
        return Action::Farewell;
    }
    let conflicts = check_consistency(state, onto);
    if !conflicts.is_empty() {
        return Action::Clarify { conflicts };
    }
    if let (Some(slot), Some(entity)) = (state.pending_queries.first(), &state.focus_entity) {
        let value = if slot == "name" { Some(entity.clone()) } else { catalog.attribute(entity, slot) };
        return Action::AnswerQuery { entity: entity.clone(), slot: slot.clone(), value };
    }
    if let Some(slot) = check_completeness(spec, state).into_iter().next() {
        return Action::AskSlot { slot };
    }
    match catalog.matching(state, onto).into_iter().next() {
        Some(entity) => {
            let facts = spec
                .required
                .iter()
                .filter_map(|s| catalog.attribute(&entity, s).map(|v| (s.clone(), v)))
                .collect();
            Action::Recommend { entity, facts }
        }
        None => Action::ReportNone { hint: relaxation_hint(spec, state, onto, catalog) },
    }
}

/// The constrained slot whose constraint, dropped alone, brings back the most
/// matches. Ties prefer optional slots, then the later-asked required slot.
fn relaxation_hint(spec: &CktSpec, state: &DialogState, onto: &Ontology, catalog: &dyn Catalog) -> Option<String> {
    let importance = |slot: &str| match spec.required.iter().position(|s| s == slot) {
        Some(i) => spec.required.len() - i,
        None => 0,
    };
    state
        .slots
        .iter()
        .filter(|(_, c)| c.included.is_some() || !c.excluded.is_empty())
        .filter_map(|(slot, _)| {
            let mut relaxed = state.clone();
            relaxed.reset_slot(slot);
            let n = catalog.matching(&relaxed, onto).len();
            (n > 0).then(|| (n, slot.clone()))
        })
        .max_by(|(na, a), (nb, b)| na.cmp(nb).then(importance(b).cmp(&importance(a))).then(b.cmp(a)))
        .map(|(_, slot)| slot)
}

/// Applies the bookkeeping an action implies: a recommendation puts the
/// entity in focus and answers a pending name query, an answer consumes its
/// query, and a clarification drops the conflicting constraints.
pub fn apply_action(state: &mut DialogState, action: &Action) {
    match action {
        Action::Recommend { entity, .. } => {
            state.focus_entity = Some(entity.clone());
            state.consume_query("name");
        }
        Action::AnswerQuery { slot, .. } => state.consume_query(slot),
        Action::Clarify { conflicts } => {
            for c in conflicts {
                state.reset_slot(&c.slot);
            }
        }
        Action::AskSlot { .. } | Action::ReportNone { .. } | Action::Farewell => {}
    }
}
