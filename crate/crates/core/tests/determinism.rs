use reasonchat::{Engine, EngineData, EngineOptions, RccConfig};

const CONCIERGE: [&str; 6] = [
    "Can you recommend me a restaurant?",
    "I can try any food except curry.",
    "Less than fifteen dollars.",
    "No, I'm not looking for a specific rating score.",
    "Sounds nice. Can you give me its address?",
    "Thank you for your help.",
];

const COMPANION: [&str; 6] = [
    "I loved Titanic, the ship scenes were huge.",
    "What else did DiCaprio act in?",
    "I didn't like that one much.",
    "Tell me about the book instead.",
    "ok",
    "bye",
];

fn run(engine: &Engine, task: &str, seed: u64, inputs: &[&str]) -> (Vec<String>, Vec<String>, String) {
    let info = engine.create_session(task, "mock", Some(seed)).unwrap();
    let mut digests = vec![info.digest.clone()];
    for text in inputs {
        digests.push(engine.post_message(&info.id, text).unwrap().digest);
    }
    let transcript = engine
        .transcript(&info.id)
        .unwrap()
        .into_iter()
        .map(|t| format!("{:?}|{}|{}", t.speaker, t.text, t.predicates))
        .collect();
    let words = engine.state_view(&info.id).unwrap().rng_word_pos;
    (transcript, digests, words)
}

#[test]
fn same_seed_same_conversation() {
    let a = Engine::bundled();
    let b = Engine::bundled();
    for (task, inputs) in [("concierge", &CONCIERGE[..]), ("companion", &COMPANION[..])] {
        for seed in [0, 7, 6076, u64::MAX >> 11] {
            let first = run(&a, task, seed, inputs);
            let second = run(&b, task, seed, inputs);
            assert_eq!(first, second, "{task} seed {seed}");
            // and again on an engine that already hosts other sessions
            assert_eq!(first, run(&a, task, seed, inputs), "{task} seed {seed} rerun");
        }
    }
}

#[test]
fn companion_seed_changes_the_path() {
    let engine = Engine::bundled();
    let runs: std::collections::BTreeSet<Vec<String>> =
        (0..16).map(|seed| run(&engine, "companion", seed, &COMPANION).0).collect();
    assert!(runs.len() > 1, "sixteen seeds gave one transcript");
}

#[test]
fn p_jump_is_honored() {
    let options = EngineOptions { rcc: RccConfig { p_jump: 0.0 }, ..EngineOptions::default() };
    let engine = Engine::new(EngineData::bundled(), options).unwrap();
    assert_eq!(engine.rcc_config().p_jump, 0.0);
    let info = engine.create_session("companion", "mock", Some(3)).unwrap();
    let first = engine.state_view(&info.id).unwrap().state.topic.bot_focus.unwrap();
    // silent turns walk the opening concept's aspects before leaving it
    let aspects = engine.graph().aspects(engine.graph().concept(&first.concept).unwrap().category).len();
    for _ in 1..aspects {
        engine.post_predicates(&info.id, "hm", "").unwrap();
        let now = engine.state_view(&info.id).unwrap().state.topic.bot_focus.unwrap();
        assert_eq!(now.concept, first.concept);
    }
    engine.post_predicates(&info.id, "hm", "").unwrap();
    let now = engine.state_view(&info.id).unwrap().state.topic.bot_focus.unwrap();
    assert_ne!(now.concept, first.concept);
}
