mod common;

use reasonchat::ckt::{apply_action, next_action, Action, CktSpec};
use reasonchat::nl::{self, MockBackend, Templates, UnderstandRequest};
use reasonchat::{normalize_whitespace, DialogState, Engine};
use serde::Deserialize;

#[derive(Deserialize)]
struct Trace {
    turns: Vec<TraceTurn>,
}

#[derive(Deserialize)]
struct TraceTurn {
    user: String,
    state: String,
    action: String,
}

fn trace() -> Trace {
    toml::from_str(include_str!("fixtures/concierge_trace.toml")).unwrap()
}

const ADDRESS: &str = "621 W Plano Pkwy #229, Plano, TX 75075";

#[test]
fn replay_through_mock_backend() {
    let onto = common::concierge_onto();
    let kb = common::sample_kb();
    let spec = CktSpec::from_ontology(&onto).unwrap();
    let backend = MockBackend::new(
        common::concierge_table(),
        Templates::from_toml(include_str!("../data/templates.toml")).unwrap(),
    );

    let mut state = DialogState::new("golden");
    let mut actions = Vec::new();
    for (i, turn) in trace().turns.iter().enumerate() {
        let req = UnderstandRequest {
            task: "concierge".into(),
            utterance: turn.user.clone(),
            context: vec![],
            ontology_summary: onto.prompt_summary(),
            examples: vec![],
        };
        let preds = nl::understand(&backend, &req, &onto).unwrap();
        state = state.update_turn(&turn.user, &preds, &onto).unwrap();
        assert_eq!(
            normalize_whitespace(&state.facts_block()),
            normalize_whitespace(&turn.state),
            "state after user turn {}",
            i + 1
        );
        let action = next_action(&spec, &state, &onto, &kb);
        assert_eq!(action.kind(), turn.action, "action after user turn {}", i + 1);
        apply_action(&mut state, &action);
        actions.push(action);
    }

    let asked: Vec<&str> = actions
        .iter()
        .filter_map(|a| match a {
            Action::AskSlot { slot } => Some(slot.as_str()),
            _ => None,
        })
        .collect();
    assert_eq!(asked, ["food type", "price range", "customer rating"]);

    assert_eq!(
        actions[3],
        Action::Recommend {
            entity: "Southern Recipes Grill".into(),
            facts: vec![
                ("food type".into(), "American".into()),
                ("price range".into(), "cheap".into()),
                ("customer rating".into(), "average".into()),
            ],
        }
    );
    assert_eq!(
        actions[4],
        Action::AnswerQuery {
            entity: "Southern Recipes Grill".into(),
            slot: "address".into(),
            value: Some(ADDRESS.into()),
        }
    );
    assert_eq!(actions[5], Action::Farewell);
    assert!(state.quit);
}

#[test]
fn replay_through_engine_sessions() {
    let engine = Engine::bundled();
    let info = engine.create_session("concierge", "mock", Some(1)).unwrap();
    let mut replies = Vec::new();
    for turn in trace().turns {
        let resp = engine.post_message(&info.id, &turn.user).unwrap();
        assert_eq!(resp.action_kind, turn.action);
        let view = engine.state_view(&info.id).unwrap();
        assert_eq!(normalize_whitespace(&view.facts), normalize_whitespace(&turn.state));
        replies.push(resp);
    }
    assert!(replies[0].reply.to_lowercase().contains("food"));
    assert_eq!(
        normalize_whitespace(&replies[0].themes),
        normalize_whitespace("require('name',['query']), require('establishment',['restaurant'])")
    );
    for needle in ["Southern Recipes Grill", "average", "American", "cheap"] {
        assert!(replies[3].reply.contains(needle), "{needle} not in {}", replies[3].reply);
    }
    assert!(replies[4].reply.contains(ADDRESS));
    assert_eq!(replies[5].action_kind, "farewell");
    assert!(replies[5].closed);
    assert!(matches!(
        engine.post_message(&info.id, "one more thing"),
        Err(reasonchat::EngineError::StateClosed)
    ));
}
