mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use reasonchat::state::StateError;
use reasonchat::{parse_predicates, DialogState, Ontology, Predicate, PredicateSet, Value};

const CLOSED: [(&str, &[&str]); 3] = [
    ("establishment", &["restaurant", "pub", "coffee shop"]),
    ("price range", &["cheap", "moderate", "expensive"]),
    ("customer rating", &["low", "average", "high"]),
];
const FOODS: [&str; 5] = ["American", "Indian", "Thai", "Chinese", "Italian"];

fn domain(slot: &str) -> &'static [&'static str] {
    CLOSED.iter().find(|(s, _)| *s == slot).map(|(_, d)| *d).unwrap_or(&FOODS)
}

fn constraint() -> impl Strategy<Value = Predicate> {
    (0..4usize, any::<bool>(), proptest::collection::btree_set(0..5usize, 1..4)).prop_map(|(slot, req, picks)| {
        let slot = ["establishment", "price range", "customer rating", "food type"][slot];
        let d = domain(slot);
        let values: Vec<&str> = picks.into_iter().map(|i| d[i % d.len()]).collect::<BTreeSet<_>>().into_iter().collect();
        Predicate::new(if req { "require" } else { "not_require" }, vec![Value::atom(slot), Value::list(values)])
    })
}

fn apply(state: &DialogState, preds: &[Predicate], onto: &Ontology) -> DialogState {
    state.update(&PredicateSet(preds.to_vec()), onto).unwrap()
}

/// Values of `slot` the state still admits, over the test universe.
fn admitted(state: &DialogState, slot: &str, onto: &Ontology) -> BTreeSet<&'static str> {
    let c = state.candidates(slot, onto).unwrap();
    domain(slot).iter().copied().filter(|v| c.contains(v)).collect()
}

/// Independent recomputation from the raw predicate history.
fn oracle(seq: &[Predicate], slot: &str) -> BTreeSet<&'static str> {
    let d = domain(slot);
    d.iter()
        .copied()
        .filter(|v| {
            seq.iter().filter(|p| p.atom_arg(0) == Some(slot)).all(|p| {
                let values = p.args[1].atoms().unwrap();
                let listed = values.contains(v);
                let everything = d.iter().all(|x| values.contains(x)) && slot != "food type";
                if p.functor == "require" { listed || everything } else { !listed }
            })
        })
        .collect()
}

const SLOTS: [&str; 4] = ["establishment", "price range", "customer rating", "food type"];

proptest! {
    #![proptest_config(ProptestConfig { cases: 500, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn candidates_only_shrink(seq in proptest::collection::vec(constraint(), 1..10)) {
        let onto = common::concierge_onto();
        let mut state = DialogState::new("p");
        for (i, p) in seq.iter().enumerate() {
            let next = apply(&state, std::slice::from_ref(p), &onto);
            for slot in SLOTS {
                let before = admitted(&state, slot, &onto);
                let after = admitted(&next, slot, &onto);
                prop_assert!(after.is_subset(&before), "{slot}: {before:?} -> {after:?}");
                prop_assert_eq!(&after, &oracle(&seq[..=i], slot));
            }
            state = next;
        }
    }

    #[test]
    fn repeating_a_turn_changes_nothing(seq in proptest::collection::vec(constraint(), 1..6)) {
        let onto = common::concierge_onto();
        let once = apply(&DialogState::new("p"), &seq, &onto);
        let twice = apply(&once, &seq, &onto);
        prop_assert_eq!(&once.slots, &twice.slots);
        prop_assert_eq!(&once.facts, &twice.facts);
    }

    #[test]
    fn turns_on_disjoint_slots_commute(a in proptest::collection::vec(constraint(), 1..5), b in proptest::collection::vec(constraint(), 1..5)) {
        let a_slots: BTreeSet<&str> = a.iter().filter_map(|p| p.atom_arg(0)).collect();
        let b: Vec<Predicate> = b.into_iter().filter(|p| !a_slots.contains(p.atom_arg(0).unwrap())).collect();
        let onto = common::concierge_onto();
        let ab = apply(&apply(&DialogState::new("p"), &a, &onto), &b, &onto);
        let ba = apply(&apply(&DialogState::new("p"), &b, &onto), &a, &onto);
        prop_assert_eq!(&ab.slots, &ba.slots);
        let fa: BTreeSet<_> = ab.facts.iter().collect();
        let fb: BTreeSet<_> = ba.facts.iter().collect();
        prop_assert_eq!(fa, fb);
    }
}

#[test]
fn examples() {
    let onto = common::concierge_onto();
    let s = DialogState::new("e");
    let s = s.update(&parse_predicates("require('price range',['cheap','moderate'])").unwrap(), &onto).unwrap();
    assert_eq!(admitted(&s, "price range", &onto), BTreeSet::from(["cheap", "moderate"]));
    let s = s.update(&parse_predicates("not_require('price range',['cheap'])").unwrap(), &onto).unwrap();
    assert_eq!(admitted(&s, "price range", &onto), BTreeSet::from(["moderate"]));

    // full domain reads as no preference
    let any = DialogState::new("e")
        .update(&parse_predicates("require('customer rating',['low','average','high'])").unwrap(), &onto)
        .unwrap();
    assert!(any.is_addressed("customer rating"));
    assert_eq!(admitted(&any, "customer rating", &onto).len(), 3);

    // open slot with only exclusions
    let s = DialogState::new("e")
        .update(&parse_predicates("not_require('food type',['Indian'])").unwrap(), &onto)
        .unwrap();
    let c = s.candidates("food type", &onto).unwrap();
    assert!(!c.contains("Indian") && c.contains("Ethiopian"));

    assert!(matches!(s.candidates("colour", &onto), Err(StateError::UnknownSlot(_))));
    assert!(matches!(
        s.update(&parse_predicates("require('colour',['red'])").unwrap(), &onto),
        Err(StateError::ValidationFailed(_))
    ));
    let closed = s.update(&parse_predicates("quit").unwrap(), &onto).unwrap();
    assert!(matches!(closed.update(&PredicateSet::new(), &onto), Err(StateError::StateClosed)));
}
