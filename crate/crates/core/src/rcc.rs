//! Relevant consistent concept selection over a labeled concept graph.
//!
//! A concept is relevant to another when an edge joins them, or when both
//! are linked to the same person (two movies sharing an actor).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::state::{Attitude, Focus, TopicState};

#[derive(Debug, Error)]
pub enum RccError {
    #[error("concept graph is empty")]
    EmptyGraph,
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("cannot read knowledge file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed knowledge file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid knowledge file: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Movie,
    Book,
    Person,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Movie => "movie",
            Category::Book => "book",
            Category::Person => "person",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    ActedIn,
    AdaptedFrom,
    Authored,
    Directed,
    SameGenre,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::ActedIn => "acted_in",
            Relation::AdaptedFrom => "adapted_from",
            Relation::Authored => "authored",
            Relation::Directed => "directed",
            Relation::SameGenre => "same_genre",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub category: Category,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    /// Talking points keyed by aspect.
    #[serde(default)]
    pub snippets: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub relation: Relation,
    pub to: String,
}

/// Aspect lists per category, in discussion order.
pub type AspectCatalog = BTreeMap<String, Vec<String>>;

#[derive(Deserialize)]
struct GraphFile {
    format: u32,
    #[serde(default)]
    greeting_root: Option<String>,
    #[serde(default)]
    concepts: Vec<Concept>,
    #[serde(default)]
    edges: Vec<Edge>,
}

#[derive(Debug, Clone)]
pub struct ConceptGraph {
    concepts: BTreeMap<String, Concept>,
    edges: Vec<Edge>,
    adjacency: BTreeMap<String, Vec<(Relation, String)>>,
    catalog: AspectCatalog,
    greeting_root: Option<String>,
}

impl ConceptGraph {
    pub fn new(
        catalog: AspectCatalog,
        concepts: Vec<Concept>,
        edges: Vec<Edge>,
        greeting_root: Option<String>,
    ) -> Result<Self, RccError> {
        let mut map = BTreeMap::new();
        for c in concepts {
            if c.category != Category::Person && c.snippets.is_empty() {
                return Err(RccError::Invalid(format!("{} `{}` has no aspect snippet", c.category, c.id)));
            }
            let aspects = catalog.get(c.category.as_str()).map(Vec::as_slice).unwrap_or_default();
            if let Some(bad) = c.snippets.keys().find(|a| !aspects.contains(a)) {
                return Err(RccError::Invalid(format!("`{}` has snippet for unknown aspect `{bad}`", c.id)));
            }
            if let Some(prev) = map.insert(c.id.clone(), c) {
                return Err(RccError::Invalid(format!("concept `{}` declared twice", prev.id)));
            }
        }
        let mut unique = BTreeSet::new();
        let mut adjacency: BTreeMap<String, Vec<(Relation, String)>> = BTreeMap::new();
        for e in &edges {
            for end in [&e.from, &e.to] {
                if !map.contains_key(end) {
                    return Err(RccError::Invalid(format!("edge mentions unknown concept `{end}`")));
                }
            }
            if e.from == e.to {
                return Err(RccError::Invalid(format!("self-loop on `{}`", e.from)));
            }
            if unique.insert(e.clone()) {
                adjacency.entry(e.from.clone()).or_default().push((e.relation, e.to.clone()));
                adjacency.entry(e.to.clone()).or_default().push((e.relation, e.from.clone()));
            }
        }
        for list in adjacency.values_mut() {
            list.sort();
            list.dedup();
        }
        if let Some(root) = &greeting_root {
            if !map.contains_key(root) {
                return Err(RccError::Invalid(format!("greeting root `{root}` is not a concept")));
            }
        }
        Ok(Self { concepts: map, edges: unique.into_iter().collect(), adjacency, catalog, greeting_root })
    }

    pub fn load(path: impl AsRef<Path>, catalog: AspectCatalog) -> Result<Self, RccError> {
        Self::from_toml(&std::fs::read_to_string(path)?, catalog)
    }

    pub fn from_toml(text: &str, catalog: AspectCatalog) -> Result<Self, RccError> {
        let file: GraphFile = toml::from_str(text)?;
        if file.format != 1 {
            return Err(RccError::Invalid(format!("unsupported format {}", file.format)));
        }
        Self::new(catalog, file.concepts, file.edges, file.greeting_root)
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn concept(&self, id: &str) -> Option<&Concept> {
        self.concepts.get(id)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn aspects(&self, category: Category) -> &[String] {
        self.catalog.get(category.as_str()).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn snippet(&self, concept: &str, aspect: &str) -> Option<&str> {
        self.concepts.get(concept)?.snippets.get(aspect).map(String::as_str)
    }

    /// Incident edges ordered by relation label, then concept id.
    pub fn neighbors(&self, concept: &str) -> Result<Vec<(Relation, &Concept)>, RccError> {
        if !self.concepts.contains_key(concept) {
            return Err(RccError::UnknownConcept(concept.to_string()));
        }
        let mut out: Vec<(Relation, &Concept)> = self
            .adjacency
            .get(concept)
            .into_iter()
            .flatten()
            .map(|(r, id)| (*r, &self.concepts[id]))
            .collect();
        out.sort_by(|a, b| a.0.as_str().cmp(b.0.as_str()).then(a.1.id.cmp(&b.1.id)));
        Ok(out)
    }

    /// Concepts one topic shift away from `concept`, each with the path that
    /// links them, ordered by target id.
    pub fn relevant(&self, concept: &str) -> Vec<(String, Vec<Hop>)> {
        let mut found: BTreeMap<String, Vec<Hop>> = BTreeMap::new();
        let Ok(direct) = self.neighbors(concept) else {
            return Vec::new();
        };
        for (rel, n) in &direct {
            found.entry(n.id.clone()).or_insert_with(|| vec![Hop { relation: *rel, to: n.id.clone() }]);
        }
        for (rel, mid) in direct.iter().filter(|(_, n)| n.category == Category::Person) {
            for (rel2, far) in self.neighbors(&mid.id).unwrap_or_default() {
                if far.id != concept {
                    found.entry(far.id.clone()).or_insert_with(|| {
                        vec![Hop { relation: *rel, to: mid.id.clone() }, Hop { relation: rel2, to: far.id.clone() }]
                    });
                }
            }
        }
        found.into_iter().collect()
    }

    /// First aspect of the concept's catalog not yet discussed.
    fn open_aspect(&self, concept: &Concept, topic: &TopicState) -> Option<String> {
        self.aspects(concept.category)
            .iter()
            .find(|a| !topic.is_discussed(&concept.id, a))
            .cloned()
    }

    fn focus(&self, concept: &Concept, topic: &TopicState) -> Focus {
        let aspect = self
            .open_aspect(concept, topic)
            .or_else(|| self.aspects(concept.category).first().cloned())
            .unwrap_or_default();
        Focus::new(concept.category.as_str(), &concept.id, aspect)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub relation: Relation,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Move {
    Stay { focus: Focus },
    ShiftAspect { focus: Focus },
    /// `from` is `None` only for the opening move of a session.
    JumpTopic { from: Option<String>, path: Vec<Hop>, focus: Focus },
}

impl Move {
    pub fn focus(&self) -> &Focus {
        match self {
            Move::Stay { focus } | Move::ShiftAspect { focus } | Move::JumpTopic { focus, .. } => focus,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Move::Stay { .. } => "stay",
            Move::ShiftAspect { .. } => "shift_aspect",
            Move::JumpTopic { .. } => "jump_topic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextMove {
    #[serde(flatten)]
    pub step: Move,
    pub attitude: Attitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RccConfig {
    /// Chance of leaving the current concept before its aspects run out.
    pub p_jump: f64,
}

impl Default for RccConfig {
    fn default() -> Self {
        Self { p_jump: 0.35 }
    }
}

/// Echoes the user's latest attitude toward `concept`, else the attitude of
/// their latest turn, else positive.
pub fn attitude_for(topic: &TopicState, concept: &str) -> Attitude {
    topic
        .attitudes
        .get(concept)
        .copied()
        .or(topic.last_attitude)
        .unwrap_or(Attitude::Positive)
}

pub fn next_move<R: Rng + ?Sized>(
    graph: &ConceptGraph,
    topic: &TopicState,
    config: &RccConfig,
    rng: &mut R,
) -> Result<NextMove, RccError> {
    if graph.is_empty() {
        return Err(RccError::EmptyGraph);
    }
    let with_attitude = |step: Move| {
        let attitude = attitude_for(topic, &step.focus().concept);
        NextMove { step, attitude }
    };

    let current = match &topic.current {
        Some(f) => f,
        None => {
            let concept = match &graph.greeting_root {
                Some(root) => &graph.concepts[root],
                None => {
                    let works: Vec<&Concept> =
                        graph.concepts().filter(|c| c.category != Category::Person).collect();
                    let pool: Vec<&Concept> = if works.is_empty() { graph.concepts().collect() } else { works };
                    pool[rng.random_range(0..pool.len())]
                }
            };
            let focus = graph.focus(concept, topic);
            return Ok(with_attitude(Move::JumpTopic { from: None, path: Vec::new(), focus }));
        }
    };
    let Some(concept) = graph.concept(&current.concept) else {
        return Ok(with_attitude(Move::Stay { focus: current.clone() }));
    };

    let open = graph.open_aspect(concept, topic);
    let jump = rng.random_bool(config.p_jump.clamp(0.0, 1.0));
    if open.is_none() || jump {
        let candidates = graph.relevant(&concept.id);
        if !candidates.is_empty() {
            let fresh: Vec<&(String, Vec<Hop>)> =
                candidates.iter().filter(|(id, _)| !topic.visits.contains_key(id)).collect();
            let (target, path) = if fresh.is_empty() {
                candidates
                    .iter()
                    .min_by_key(|(id, _)| (topic.visits.get(id).copied().unwrap_or(0), id.clone()))
                    .expect("non-empty")
            } else {
                fresh[rng.random_range(0..fresh.len())]
            };
            let focus = graph.focus(&graph.concepts[target], topic);
            return Ok(with_attitude(Move::JumpTopic {
                from: Some(concept.id.clone()),
                path: path.clone(),
                focus,
            }));
        }
    }

    let step = match open {
        _ if topic.engaged => Move::Stay { focus: current.clone() },
        Some(aspect) => Move::ShiftAspect { focus: Focus { aspect, ..current.clone() } },
        None => Move::Stay { focus: current.clone() },
    };
    Ok(with_attitude(step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn catalog() -> AspectCatalog {
        crate::ontology::Ontology::from_toml(include_str!("../data/companion.ontology.toml"))
            .unwrap()
            .aspects
    }

    fn sample() -> ConceptGraph {
        ConceptGraph::from_toml(include_str!("../data/companion.graph.toml"), catalog()).unwrap()
    }

    fn movie(id: &str) -> Concept {
        Concept {
            id: id.into(),
            category: Category::Movie,
            attributes: BTreeMap::new(),
            snippets: [("plot episode".to_string(), "x".to_string())].into(),
        }
    }

    #[test]
    fn neighbors_of_sample_entities() {
        let g = sample();
        let n: Vec<(Relation, String)> =
            g.neighbors("Don't Look Up").unwrap().into_iter().map(|(r, c)| (r, c.id.clone())).collect();
        assert!(n.contains(&(Relation::ActedIn, "Jennifer Lawrence".into())));
        assert!(n.contains(&(Relation::ActedIn, "Leonardo DiCaprio".into())));
        let n: Vec<String> =
            g.neighbors("Jennifer Lawrence").unwrap().into_iter().map(|(_, c)| c.id.clone()).collect();
        assert!(n.contains(&"House at the End of the Street".to_string()));
        assert!(matches!(g.neighbors("Nope"), Err(RccError::UnknownConcept(_))));
    }

    #[test]
    fn neighbor_order_is_relation_then_id() {
        let g = sample();
        let n = g.neighbors("Catch Me If You Can").unwrap();
        let keys: Vec<(&str, &str)> = n.iter().map(|(r, c)| (r.as_str(), c.id.as_str())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let g = ConceptGraph::new(catalog(), vec![movie("Solo")], vec![], None).unwrap();
        assert!(g.neighbors("Solo").unwrap().is_empty());
    }

    #[test]
    fn relevance_goes_through_shared_people() {
        let g = sample();
        let rel: BTreeMap<String, Vec<Hop>> = g.relevant("Inception").into_iter().collect();
        let path = &rel["The Wolf of Wall Street"];
        assert_eq!(path.len(), 2);
        assert_eq!(path[0], Hop { relation: Relation::ActedIn, to: "Leonardo DiCaprio".into() });
        assert!(!rel.contains_key("Inception"));
    }

    #[test]
    fn rejects_malformed_graphs() {
        let edge = Edge { from: "A".into(), relation: Relation::SameGenre, to: "A".into() };
        assert!(ConceptGraph::new(catalog(), vec![movie("A")], vec![edge], None).is_err());
        let mut bare = movie("B");
        bare.snippets.clear();
        assert!(ConceptGraph::new(catalog(), vec![bare], vec![], None).is_err());
    }

    #[test]
    fn empty_graph_errors() {
        let g = ConceptGraph::new(catalog(), vec![], vec![], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            next_move(&g, &TopicState::default(), &RccConfig::default(), &mut rng),
            Err(RccError::EmptyGraph)
        ));
    }

    #[test]
    fn stays_when_user_adds_content_and_no_jump() {
        let g = sample();
        let mut topic = TopicState::default();
        let focus = Focus::new("movie", "Inception", "plot episode");
        topic.visit(&focus);
        topic.current = Some(focus.clone());
        topic.engaged = true;
        let cfg = RccConfig { p_jump: 0.0 };
        let m = next_move(&g, &topic, &cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(m.step, Move::Stay { focus });
        assert_eq!(m.attitude, Attitude::Positive);
    }

    #[test]
    fn forced_jump_from_inception_is_relevant() {
        let g = sample();
        let mut topic = TopicState::default();
        let focus = Focus::new("movie", "Inception", "plot episode");
        topic.visit(&focus);
        topic.current = Some(focus);
        let m = next_move(&g, &topic, &RccConfig { p_jump: 1.0 }, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let Move::JumpTopic { from, path, focus } = m.step else { panic!("expected a jump") };
        assert_eq!(from.as_deref(), Some("Inception"));
        assert_eq!(path.last().unwrap().to, focus.concept);
        assert!(g.relevant("Inception").iter().any(|(id, _)| *id == focus.concept));
    }

    #[test]
    fn single_node_exhausted_stays() {
        let g = ConceptGraph::new(catalog(), vec![movie("Solo")], vec![], None).unwrap();
        let mut topic = TopicState::default();
        for a in g.aspects(Category::Movie).to_vec() {
            topic.visit(&Focus::new("movie", "Solo", a));
        }
        let last = Focus::new("movie", "Solo", "emotion impact");
        topic.current = Some(last.clone());
        let m = next_move(&g, &topic, &RccConfig::default(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(m.step, Move::Stay { focus: last });
    }

    #[test]
    fn opening_uses_root_when_declared() {
        let g = ConceptGraph::new(catalog(), vec![movie("A"), movie("B")], vec![], Some("B".into())).unwrap();
        let m = next_move(&g, &TopicState::default(), &RccConfig::default(), &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(m.step.focus(), &Focus::new("movie", "B", "plot episode"));
    }

    #[test]
    fn attitude_falls_back_to_latest_turn() {
        let mut topic = TopicState::default();
        assert_eq!(attitude_for(&topic, "X"), Attitude::Positive);
        topic.last_attitude = Some(Attitude::Negative);
        assert_eq!(attitude_for(&topic, "X"), Attitude::Negative);
        topic.attitudes.insert("X".into(), Attitude::Positive);
        assert_eq!(attitude_for(&topic, "X"), Attitude::Positive);
    }
}
