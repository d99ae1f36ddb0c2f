//! A dialogue engine that keeps every conversational decision symbolic.
//!
//! User text is turned into ground predicates by a pluggable backend
//! ([`nl`]), merged into a per-session [`state::DialogState`], and handed to
//! one of two reasoners: slot-filling checks for the restaurant bot
//! ([`ckt`], [`concierge`]) or a topic-graph planner for the social bot
//! ([`rcc`], [`companion`]). The reasoner's choice goes back through the
//! backend to become the reply.
//!
//! ```
//! use reasonchat::predicate::{parse_predicates, Style};
//!
//! let set = parse_predicates("require('price range',['cheap'])").unwrap();
//! assert_eq!(set[0].functor, "require");
//! assert_eq!(set.serialize(Style::Concierge), "require('price range',['cheap'])");
//! ```

pub mod ckt;
pub mod companion;
pub mod concierge;
pub mod nl;
pub mod ontology;
pub mod predicate;
pub mod rcc;
pub mod session;
pub mod state;

pub use ckt::{Action, Catalog, CktSpec, Conflict};
pub use companion::{NextBlock, ThemesBlock};
pub use concierge::{KnowledgeBase, Restaurant};
pub use ontology::{Ontology, ValidationReport, Verdict};
pub use predicate::{normalize_whitespace, parse_predicates, serialize, Predicate, PredicateSet, Style, SyntaxError, Value};
pub use rcc::{ConceptGraph, Move, NextMove, RccConfig};
pub use session::{Engine, EngineData, EngineError, EngineOptions, Session, Task, TurnResponse};
pub use state::{Attitude, DialogState, Focus, TopicState};
