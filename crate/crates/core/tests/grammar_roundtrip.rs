use proptest::prelude::*;
use reasonchat::{parse_predicates, Predicate, PredicateSet, Style, Value};

fn atom() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z][a-z ]{0,12}[a-z]",
        "[A-Za-z0-9 ',.()\\[\\]\\\\£é-]{1,16}",
        "[ a-z]{0,3}",
        Just("Don't Look Up".to_string()),
        Just("nothing fresh, nothing new.".to_string()),
    ]
}

fn value() -> impl Strategy<Value = Value> {
    let leaf = atom().prop_map(Value::atom);
    leaf.prop_recursive(2, 12, 4, |inner| prop::collection::vec(inner, 0..4).prop_map(Value::List))
}

fn predicate() -> impl Strategy<Value = Predicate> {
    ("[a-z_][a-z0-9_]{0,8}", prop::collection::vec(value(), 0..4))
        .prop_map(|(functor, args)| Predicate::new(functor, args))
}

fn predicate_set() -> impl Strategy<Value = PredicateSet> {
    prop::collection::vec(predicate(), 0..6).prop_map(PredicateSet)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn concierge_style_round_trips(set in predicate_set()) {
        let text = set.serialize(Style::Concierge);
        prop_assert_eq!(parse_predicates(&text).unwrap(), set);
    }

    #[test]
    fn companion_style_round_trips(set in predicate_set()) {
        let text = set.serialize(Style::Companion);
        prop_assert_eq!(parse_predicates(&text).unwrap(), set);
    }

    #[test]
    fn errors_point_inside_the_input(text in "[a-z(),\\[\\]' .]{0,40}") {
        let first = parse_predicates(&text);
        prop_assert_eq!(&first, &parse_predicates(&text));
        if let Err(e) = first {
            prop_assert!(e.offset <= text.len());
        }
    }
}

#[test]
fn examples_from_the_annotations() {
    let set = parse_predicates("require('price range',['cheap'])").unwrap();
    assert_eq!(
        set.0,
        vec![Predicate::new("require", vec![Value::atom("price range"), Value::list(["cheap"])])]
    );
    assert!(parse_predicates("").unwrap().is_empty());

    let set = parse_predicates("talk(movie, Catch Me If You Can, plot episode). attitude(positive).").unwrap();
    assert_eq!(set.len(), 2);
    assert_eq!(set[1], Predicate::new("attitude", vec![Value::atom("positive")]));
    assert_eq!(set[0].atom_arg(1), Some("Catch Me If You Can"));

    assert_eq!(parse_predicates("quit.").unwrap().0, vec![Predicate::constant("quit")]);

    let query = parse_predicates("require('name',['query'])").unwrap();
    assert_eq!(query.serialize(Style::Concierge), "require('name',['query'])");
    assert_eq!(PredicateSet::new().serialize(Style::Concierge), "");
    assert_eq!(PredicateSet::new().serialize(Style::Companion), "");
}

#[test]
fn bare_and_quoted_atoms_are_the_same() {
    assert_eq!(
        parse_predicates("content(plot episode, actions in dreams)").unwrap(),
        parse_predicates("content('plot episode','actions in dreams')").unwrap()
    );
}

#[test]
fn malformed_input_is_located() {
    for (text, offset) in [("require('price range", 8), ("f(a(b))", 3), ("f(a,,b)", 4), ("talk(movie, [x", 12)] {
        let err = parse_predicates(text).unwrap_err();
        assert_eq!(err.offset, offset, "{text}");
    }
}
