//! The social bot: each user turn's Themes go into the topic state, the
//! topic planner picks the next talking point, and that point comes back as
//! a Next block.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::Ontology;
use crate::predicate::{Predicate, PredicateSet, Style, Value};
use crate::rcc::{next_move, ConceptGraph, Move, NextMove, RccConfig, RccError};
use crate::state::{DialogState, Focus, StateError};

#[derive(Debug, Error)]
pub enum CompanionError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Rcc(#[from] RccError),
}

/// Predicates pulled from one user turn.
pub type ThemesBlock = PredicateSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NextBlock {
    Talk { next: NextMove, opening: bool },
    Quit,
}

impl NextBlock {
    /// `talk(..). attitude(..).` or `quit.`
    pub fn to_predicates(&self) -> PredicateSet {
        match self {
            NextBlock::Quit => PredicateSet(vec![Predicate::constant("quit")]),
            NextBlock::Talk { next, .. } => PredicateSet(vec![
                next.step.focus().talk(),
                Predicate::new("attitude", vec![Value::atom(next.attitude.as_str())]),
            ]),
        }
    }

    pub fn render(&self) -> String {
        self.to_predicates().serialize(Style::Companion)
    }

    pub fn focus(&self) -> Option<&Focus> {
        match self {
            NextBlock::Talk { next, .. } => Some(next.step.focus()),
            NextBlock::Quit => None,
        }
    }

    /// The Next block plus what the realizer needs to phrase it: the move
    /// kind, the link for a jump, and the stored snippet on the new aspect.
    pub fn realizer_predicates(&self, graph: &ConceptGraph) -> PredicateSet {
        let mut set = self.to_predicates();
        let NextBlock::Talk { next, opening } = self else {
            return set;
        };
        if *opening {
            set.push(Predicate::constant("greet"));
        }
        set.push(Predicate::new("move", vec![Value::atom(next.step.kind())]));
        if let Move::JumpTopic { from: Some(from), path, focus } = &next.step {
            let via = path.len().checked_sub(2).map_or("-", |i| path[i].to.as_str());
            set.push(Predicate::new(
                "link",
                vec![Value::atom(from), Value::atom(via), Value::atom(&focus.concept)],
            ));
        }
        let focus = next.step.focus();
        if let Some(text) = graph.snippet(&focus.concept, &focus.aspect) {
            set.push(Predicate::new("content", vec![Value::atom(&focus.aspect), Value::atom(text)]));
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub state: DialogState,
    pub next: NextBlock,
    /// Entities the user mentioned that the graph does not know.
    pub gaps: Vec<String>,
}

/// First move of a session, before the user has said anything.
pub fn opening<R: Rng + ?Sized>(
    state: &DialogState,
    graph: &ConceptGraph,
    config: &RccConfig,
    rng: &mut R,
) -> Result<(DialogState, NextBlock), CompanionError> {
    let mut state = state.clone();
    let next = next_move(graph, &state.topic, config, rng)?;
    state.topic.commit_move(next.step.focus().clone());
    Ok((state, NextBlock::Talk { next, opening: true }))
}

pub fn step<R: Rng + ?Sized>(
    state: &DialogState,
    text: &str,
    themes: &ThemesBlock,
    onto: &Ontology,
    graph: &ConceptGraph,
    config: &RccConfig,
    rng: &mut R,
) -> Result<StepOutcome, CompanionError> {
    let mut state = state.update_turn(text, themes, onto)?;
    if state.quit {
        return Ok(StepOutcome { state, next: NextBlock::Quit, gaps: Vec::new() });
    }

    let gaps: Vec<String> = themes
        .with_functor("talk")
        .filter_map(|p| p.atom_arg(1))
        .filter(|c| graph.concept(c).is_none())
        .map(str::to_string)
        .collect();
    for g in &gaps {
        log::warn!("`{g}` is not in the concept graph");
    }
    let unknown_focus = state.topic.current.as_ref().is_some_and(|f| graph.concept(&f.concept).is_none());
    if unknown_focus {
        let known = themes
            .with_functor("talk")
            .filter(|p| p.atom_arg(1).is_some_and(|c| graph.concept(c).is_some()))
            .last()
            .map(|p| {
                Focus::new(
                    p.atom_arg(0).unwrap_or_default(),
                    p.atom_arg(1).unwrap_or_default(),
                    p.atom_arg(2).unwrap_or_default(),
                )
            });
        match known {
            Some(f) => state.topic.current = Some(f),
            None => {
                state.topic.current = state.topic.bot_focus.clone();
                state.topic.engaged = true;
            }
        }
    }

    let next = next_move(graph, &state.topic, config, rng)?;
    state.topic.commit_move(next.step.focus().clone());
    Ok(StepOutcome { state, next: NextBlock::Talk { next, opening: false }, gaps })
}
