mod common;

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reasonchat::companion::{self, NextBlock};
use reasonchat::rcc::{Category, Concept, Edge, Relation};
use reasonchat::{ConceptGraph, DialogState, Move, Predicate, PredicateSet, RccConfig, Value};

const CATEGORIES: [Category; 3] = [Category::Movie, Category::Book, Category::Person];
const RELATIONS: [Relation; 5] =
    [Relation::ActedIn, Relation::AdaptedFrom, Relation::Authored, Relation::Directed, Relation::SameGenre];

struct Fixture {
    graph: ConceptGraph,
    categories: BTreeMap<String, Category>,
    /// Undirected edge set, both orientations present.
    edges: BTreeSet<(String, Relation, String)>,
}

impl Fixture {
    fn adjacent(&self, a: &str, b: &str) -> bool {
        self.edges.iter().any(|(x, _, y)| x == a && y == b)
    }

    /// Joined directly, or both linked to the same person.
    fn relevant(&self, a: &str, b: &str) -> bool {
        if a == b {
            return false;
        }
        self.adjacent(a, b)
            || self
                .categories
                .iter()
                .any(|(p, c)| *c == Category::Person && p != a && p != b && self.adjacent(a, p) && self.adjacent(p, b))
    }
}

/// Connected graph: random spanning tree plus extra edges.
fn random_graph(rng: &mut ChaCha8Rng) -> Fixture {
    let catalog = common::companion_onto().aspects.clone();
    let n = rng.random_range(1..=30);
    let mut concepts = Vec::new();
    let mut categories = BTreeMap::new();
    for i in 0..n {
        let category = CATEGORIES[rng.random_range(0..3)];
        let id = format!("c{i:02}");
        let mut snippets = BTreeMap::new();
        if category != Category::Person {
            for a in &catalog[category.as_str()] {
                if snippets.is_empty() || rng.random_bool(0.5) {
                    snippets.insert(a.clone(), format!("{id} on {a}"));
                }
            }
        }
        categories.insert(id.clone(), category);
        concepts.push(Concept { id, category, attributes: BTreeMap::new(), snippets });
    }
    let ids: Vec<String> = categories.keys().cloned().collect();
    let mut raw = Vec::new();
    for i in 1..n {
        raw.push((rng.random_range(0..i), i));
    }
    for _ in 0..rng.random_range(0..=n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            raw.push((a, b));
        }
    }
    let mut edges = BTreeSet::new();
    let mut list = Vec::new();
    for (a, b) in raw {
        let relation = RELATIONS[rng.random_range(0..RELATIONS.len())];
        let (from, to) = (ids[a].clone(), ids[b].clone());
        edges.insert((from.clone(), relation, to.clone()));
        edges.insert((to.clone(), relation, from.clone()));
        list.push(Edge { from, relation, to });
    }
    let graph = ConceptGraph::new(catalog, concepts, list, None).unwrap();
    Fixture { graph, categories, edges }
}

fn user_turn(rng: &mut ChaCha8Rng, fx: &Fixture, state: &DialogState) -> PredicateSet {
    let aspects = |c: Category| fx.graph.aspects(c).to_vec();
    let talk = |cat: Category, id: &str, aspect: &str| {
        Predicate::new("talk", vec![Value::atom(cat.as_str()), Value::atom(id), Value::atom(aspect)])
    };
    let mut set = PredicateSet::new();
    let roll: f64 = rng.random();
    if roll < 0.4 {
        return set;
    } else if roll < 0.7 {
        if let Some(f) = &state.topic.bot_focus {
            let cat = fx.categories[&f.concept];
            let list = aspects(cat);
            set.push(talk(cat, &f.concept, &list[rng.random_range(0..list.len())]));
        }
    } else if roll < 0.9 {
        let ids: Vec<&String> = fx.categories.keys().collect();
        let id = ids[rng.random_range(0..ids.len())];
        let cat = fx.categories[id];
        let list = aspects(cat);
        set.push(talk(cat, id, &list[rng.random_range(0..list.len())]));
    } else {
        set.push(talk(Category::Movie, "Not In The Graph", "plot episode"));
    }
    if rng.random_bool(0.5) {
        let a = if rng.random_bool(0.5) { "positive" } else { "negative" };
        set.push(Predicate::new("attitude", vec![Value::atom(a)]));
    }
    set
}

#[test]
fn jumps_only_reach_relevant_concepts() {
    let onto = common::companion_onto();
    let cfg = RccConfig::default();
    let mut jumps = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fx = random_graph(&mut rng);
        let (mut state, first) = companion::opening(&DialogState::new("t"), &fx.graph, &cfg, &mut rng).unwrap();
        assert!(fx.categories.contains_key(&first.focus().unwrap().concept));
        for _ in 0..12 {
            let themes = user_turn(&mut rng, &fx, &state);
            let out = companion::step(&state, "", &themes, &onto, &fx.graph, &cfg, &mut rng).unwrap();
            let before = out.state.topic.bot_focus.clone();
            let NextBlock::Talk { next, .. } = &out.next else { panic!("no quit was sent") };
            let focus = next.step.focus();
            assert!(fx.categories.contains_key(&focus.concept), "seed {seed}: unknown concept {}", focus.concept);
            let allowed = fx.graph.aspects(fx.categories[&focus.concept]);
            assert!(allowed.contains(&focus.aspect), "seed {seed}: bad aspect {}", focus.aspect);
            if let Move::JumpTopic { from, path, focus } = &next.step {
                jumps += 1;
                let from = from.as_deref().expect("only the opening has no origin");
                assert!(fx.relevant(from, &focus.concept), "seed {seed}: {from} -> {} not relevant", focus.concept);
                let mut at = from.to_string();
                for hop in path {
                    assert!(fx.edges.contains(&(at.clone(), hop.relation, hop.to.clone())), "seed {seed}: bad hop");
                    at = hop.to.clone();
                }
                assert_eq!(at, focus.concept);
                if path.len() == 2 {
                    assert_eq!(fx.categories[&path[0].to], Category::Person);
                }
            }
            assert_eq!(before.as_ref(), Some(focus));
            state = out.state;
        }
    }
    assert!(jumps > 1000, "only {jumps} jumps exercised");
}

#[test]
fn without_random_jumps_every_aspect_comes_up_once() {
    let onto = common::companion_onto();
    let cfg = RccConfig { p_jump: 0.0 };
    let mut runs = 0;
    for seed in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fx = random_graph(&mut rng);
        let (mut state, first) = companion::opening(&DialogState::new("t"), &fx.graph, &cfg, &mut rng).unwrap();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let start = first.focus().unwrap().clone();
        seen.insert(start.concept.clone());
        let mut run: Option<(String, Vec<String>)> = Some((start.concept, vec![start.aspect]));

        for _ in 0..40 {
            let out = companion::step(&state, "", &PredicateSet::new(), &onto, &fx.graph, &cfg, &mut rng).unwrap();
            let NextBlock::Talk { next, .. } = &out.next else { unreachable!() };
            let focus = next.step.focus().clone();
            match &next.step {
                Move::JumpTopic { .. } => {
                    if let Some((concept, visited)) = run.take() {
                        let expected = fx.graph.aspects(fx.categories[&concept]).to_vec();
                        let mut sorted = visited.clone();
                        sorted.sort();
                        let mut want = expected.clone();
                        want.sort();
                        assert_eq!(sorted, want, "seed {seed}: {concept} left early or repeated an aspect");
                        assert_eq!(visited, expected, "seed {seed}: aspects out of order");
                        runs += 1;
                    }
                    if seen.insert(focus.concept.clone()) {
                        run = Some((focus.concept.clone(), vec![focus.aspect.clone()]));
                    }
                }
                Move::ShiftAspect { .. } => {
                    if let Some((concept, visited)) = &mut run {
                        assert_eq!(&focus.concept, concept);
                        visited.push(focus.aspect.clone());
                    }
                }
                Move::Stay { .. } => {
                    // only an isolated concept with nothing left to say stays put
                    assert!(fx.graph.relevant(&focus.concept).is_empty(), "seed {seed}: stayed without cause");
                    assert!(fx.graph.aspects(fx.categories[&focus.concept]).iter().all(|a| {
                        out.state.topic.is_discussed(&focus.concept, a)
                    }));
                }
            }
            state = out.state;
        }
    }
    assert!(runs > 1000, "only {runs} complete runs checked");
}
