#![allow(dead_code)]

pub mod stub;

use reasonchat::concierge::{read_kb, KnowledgeBase};
use reasonchat::nl::MockTable;
use reasonchat::{ConceptGraph, Ontology};

pub fn concierge_onto() -> Ontology {
    Ontology::from_toml(include_str!("../../data/concierge.ontology.toml")).unwrap()
}

pub fn companion_onto() -> Ontology {
    Ontology::from_toml(include_str!("../../data/companion.ontology.toml")).unwrap()
}

pub fn sample_kb() -> KnowledgeBase {
    read_kb(include_str!("../../data/restaurants.csv").as_bytes(), &concierge_onto()).unwrap()
}

pub fn sample_graph() -> ConceptGraph {
    ConceptGraph::from_toml(include_str!("../../data/companion.graph.toml"), companion_onto().aspects.clone()).unwrap()
}

pub fn concierge_table() -> MockTable {
    MockTable::from_toml(include_str!("../../data/concierge.mock.toml")).unwrap()
}

pub fn companion_table() -> MockTable {
    MockTable::from_toml(include_str!("../../data/companion.mock.toml")).unwrap()
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}
