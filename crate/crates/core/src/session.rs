//! Sessions: the full understand → update → decide → realize loop, with an
//! append-only event log per session that doubles as the recovery path.
//!
//! Log lines are JSON objects, one per event:
//!
//! ```text
//! {"event":"created","id":"s-…","task":"concierge","backend":"mock","seed":7,"greeting":"…","at":1700000000}
//! {"event":"turn","text":"…","predicates":"require('price range',['cheap'])","reply":"…","at":1700000009}
//! ```
//!
//! Recovery re-runs the reasoner over the logged predicates and logged
//! replies, so no backend is contacted and the rebuilt state is identical.

use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ckt::{apply_action, next_action, CktSpec};
use crate::companion::{self, CompanionError, NextBlock};
use crate::concierge::{read_kb, KbError, KnowledgeBase};
use crate::nl::{
    self, BackendConfig, BackendKind, Exchange, LiveBackend, MockBackend, MockTable, NlBackend, NlError,
    RealizeRequest, Templates, UnderstandRequest,
};
use crate::ontology::{Ontology, OntologyError};
use crate::predicate::{parse_predicates, PredicateSet, Style};
use crate::rcc::{ConceptGraph, RccConfig, RccError};
use crate::state::{DialogState, Speaker, StateError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Concierge,
    Companion,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Concierge => "concierge",
            Task::Companion => "companion",
        }
    }

    fn style(self) -> Style {
        match self {
            Task::Concierge => Style::Concierge,
            Task::Companion => Style::Companion,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = EngineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "concierge" => Ok(Task::Concierge),
            "companion" => Ok(Task::Companion),
            other => Err(EngineError::BadTask(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown task `{0}` (expected concierge or companion)")]
    BadTask(String),
    #[error("no session `{0}`")]
    UnknownSession(String),
    #[error("the conversation has ended")]
    StateClosed,
    #[error(transparent)]
    Backend(#[from] NlError),
    #[error("invalid predicates: {0}")]
    Invalid(String),
    #[error("event log: {0}")]
    Persist(#[from] std::io::Error),
    #[error("data: {0}")]
    Data(String),
}

impl From<StateError> for EngineError {
    fn from(e: StateError) -> Self {
        match e {
            StateError::StateClosed => EngineError::StateClosed,
            other => EngineError::Invalid(other.to_string()),
        }
    }
}

impl From<CompanionError> for EngineError {
    fn from(e: CompanionError) -> Self {
        match e {
            CompanionError::State(s) => s.into(),
            CompanionError::Rcc(r) => EngineError::Data(r.to_string()),
        }
    }
}

impl From<OntologyError> for EngineError {
    fn from(e: OntologyError) -> Self {
        EngineError::Data(e.to_string())
    }
}

impl From<KbError> for EngineError {
    fn from(e: KbError) -> Self {
        EngineError::Data(e.to_string())
    }
}

impl From<RccError> for EngineError {
    fn from(e: RccError) -> Self {
        EngineError::Data(e.to_string())
    }
}

/// Raw text of every data file the engine needs.
#[derive(Debug, Clone)]
pub struct EngineData {
    pub concierge_ontology: String,
    pub companion_ontology: String,
    pub restaurants: String,
    pub graph: String,
    pub concierge_mock: String,
    pub companion_mock: String,
    pub templates: String,
}

impl EngineData {
    /// The sample data compiled into the crate.
    pub fn bundled() -> Self {
        Self {
            concierge_ontology: include_str!("../data/concierge.ontology.toml").into(),
            companion_ontology: include_str!("../data/companion.ontology.toml").into(),
            restaurants: include_str!("../data/restaurants.csv").into(),
            graph: include_str!("../data/companion.graph.toml").into(),
            concierge_mock: include_str!("../data/concierge.mock.toml").into(),
            companion_mock: include_str!("../data/companion.mock.toml").into(),
            templates: include_str!("../data/templates.toml").into(),
        }
    }

    /// Reads the same file names from `dir`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, EngineError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            fs::read_to_string(dir.join(name))
                .map_err(|e| EngineError::Data(format!("{}: {e}", dir.join(name).display())))
        };
        Ok(Self {
            concierge_ontology: read("concierge.ontology.toml")?,
            companion_ontology: read("companion.ontology.toml")?,
            restaurants: read("restaurants.csv")?,
            graph: read("companion.graph.toml")?,
            concierge_mock: read("concierge.mock.toml")?,
            companion_mock: read("companion.mock.toml")?,
            templates: read("templates.toml")?,
        })
    }

    pub fn with_kb(mut self, path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        self.restaurants =
            fs::read_to_string(path).map_err(|e| EngineError::Data(format!("{}: {e}", path.display())))?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Default)]
pub struct EngineOptions {
    pub rcc: RccConfig,
    /// Endpoint settings for sessions created with the live backend.
    pub live: Option<BackendConfig>,
    /// Where session event logs go; `None` keeps sessions in memory only.
    pub log_dir: Option<PathBuf>,
    /// Prior exchanges handed to the backend with each request.
    pub context_turns: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnResponse {
    pub reply: String,
    /// What the backend extracted from the user's message.
    pub themes: String,
    /// The reasoner's decision: an action for the concierge, a Next block
    /// for the companion.
    pub action: String,
    pub action_kind: String,
    pub digest: String,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub task: Task,
    pub backend: BackendKind,
    pub seed: u64,
    pub created_at: u64,
    pub updated_at: u64,
    pub greeting: String,
    /// Opening Next block (companion only).
    pub next: Option<String>,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub speaker: Speaker,
    pub text: String,
    pub predicates: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub id: String,
    pub task: Task,
    pub digest: String,
    pub rng_word_pos: String,
    pub missing: Vec<String>,
    pub facts: String,
    pub themes: Vec<String>,
    pub state: DialogState,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Created { id: String, task: Task, backend: BackendKind, seed: u64, greeting: String, at: u64 },
    Turn { text: String, predicates: String, reply: String, at: u64 },
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    pub task: Task,
    pub backend: BackendKind,
    pub seed: u64,
    pub rng: ChaCha8Rng,
    pub state: DialogState,
    pub greeting: String,
    pub opening: Option<NextBlock>,
    pub created_at: u64,
    pub updated_at: u64,
}

impl Session {
    /// SHA-256 over the dialogue state and the rng position.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.state.digest().as_bytes());
        h.update(self.seed.to_le_bytes());
        h.update(self.rng.get_word_pos().to_le_bytes());
        hex::encode(h.finalize())
    }

    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        let style = self.task.style();
        self.state
            .history
            .iter()
            .map(|t| TranscriptEntry { speaker: t.speaker, text: t.text.clone(), predicates: t.predicates.serialize(style) })
            .collect()
    }

    fn info(&self) -> SessionInfo {
        SessionInfo {
            id: self.id.clone(),
            task: self.task,
            backend: self.backend,
            seed: self.seed,
            created_at: self.created_at,
            updated_at: self.updated_at,
            greeting: self.greeting.clone(),
            next: self.opening.as_ref().map(NextBlock::render),
            digest: self.digest(),
        }
    }
}

/// A decided but not yet realized turn.
struct Pending {
    session: Session,
    themes: PredicateSet,
    decision: PredicateSet,
    decision_kind: String,
    realize: PredicateSet,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub struct Engine {
    concierge_onto: Ontology,
    companion_onto: Ontology,
    spec: CktSpec,
    kb: KnowledgeBase,
    graph: ConceptGraph,
    rcc: RccConfig,
    concierge_mock: MockBackend,
    companion_mock: MockBackend,
    live: Option<Arc<dyn NlBackend>>,
    log_dir: Option<PathBuf>,
    context_turns: usize,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

impl fmt::Debug for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Engine")
            .field("restaurants", &self.kb.len())
            .field("concepts", &self.graph.len())
            .field("live", &self.live.is_some())
            .field("log_dir", &self.log_dir)
            .finish()
    }
}

impl Engine {
    pub fn new(data: EngineData, options: EngineOptions) -> Result<Self, EngineError> {
        let concierge_onto = Ontology::from_toml(&data.concierge_ontology)?;
        let companion_onto = Ontology::from_toml(&data.companion_ontology)?;
        let spec = CktSpec::from_ontology(&concierge_onto)?;
        let kb = read_kb(data.restaurants.as_bytes(), &concierge_onto)?;
        let graph = ConceptGraph::from_toml(&data.graph, companion_onto.aspects.clone())?;
        let templates = Templates::from_toml(&data.templates)?;
        let concierge_mock = MockBackend::new(MockTable::from_toml(&data.concierge_mock)?, templates.clone());
        let companion_mock = MockBackend::new(MockTable::from_toml(&data.companion_mock)?, templates);
        let live = match &options.live {
            Some(cfg) => Some(Arc::new(LiveBackend::new(cfg)?) as Arc<dyn NlBackend>),
            None => None,
        };
        if let Some(dir) = &options.log_dir {
            fs::create_dir_all(dir)?;
        }
        let context_turns = options.context_turns.or(options.live.as_ref().map(|c| c.context_turns)).unwrap_or(4);
        Ok(Self {
            concierge_onto,
            companion_onto,
            spec,
            kb,
            graph,
            rcc: options.rcc,
            concierge_mock,
            companion_mock,
            live,
            log_dir: options.log_dir,
            context_turns,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    /// Bundled data, in-memory sessions, mock backend only.
    pub fn bundled() -> Self {
        Self::new(EngineData::bundled(), EngineOptions::default()).expect("bundled data is valid")
    }

    /// Swaps in a different live backend (for example a test double).
    pub fn with_live_backend(mut self, backend: Arc<dyn NlBackend>) -> Self {
        self.live = Some(backend);
        self
    }

    pub fn ontology(&self, task: Task) -> &Ontology {
        match task {
            Task::Concierge => &self.concierge_onto,
            Task::Companion => &self.companion_onto,
        }
    }

    pub fn knowledge_base(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn graph(&self) -> &ConceptGraph {
        &self.graph
    }

    pub fn rcc_config(&self) -> RccConfig {
        self.rcc
    }

    pub fn ckt_spec(&self) -> &CktSpec {
        &self.spec
    }

    fn backend(&self, task: Task, kind: BackendKind) -> Result<&dyn NlBackend, EngineError> {
        match kind {
            BackendKind::Mock => Ok(match task {
                Task::Concierge => &self.concierge_mock,
                Task::Companion => &self.companion_mock,
            }),
            BackendKind::Live => self
                .live
                .as_deref()
                .ok_or_else(|| NlError::unavailable("no live endpoint configured").into()),
        }
    }

    fn mock_table(&self, task: Task) -> &MockTable {
        match task {
            Task::Concierge => self.concierge_mock.table(),
            Task::Companion => self.companion_mock.table(),
        }
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.lock().expect("session map").keys().cloned().collect();
        ids.sort();
        ids
    }

    fn handle(&self, id: &str) -> Result<Arc<Mutex<Session>>, EngineError> {
        self.sessions
            .lock()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownSession(id.to_string()))
    }

    fn fresh_id(&self) -> String {
        let map = self.sessions.lock().expect("session map");
        loop {
            let id = format!("s-{:016x}", rand::rng().random::<u64>());
            let logged = self.log_dir.as_ref().is_some_and(|d| d.join(format!("{id}.jsonl")).exists());
            if !map.contains_key(&id) && !logged {
                return id;
            }
        }
    }

    pub fn create_session(&self, task: &str, backend: &str, seed: Option<u64>) -> Result<SessionInfo, EngineError> {
        let task: Task = task.parse()?;
        let backend: BackendKind = backend.parse().map_err(|e: String| EngineError::Invalid(e))?;
        let seed = seed.unwrap_or_else(|| rand::rng().random::<u64>() >> 11);
        let id = self.fresh_id();
        let (session, realize) = self.open(id, task, backend, seed)?;
        let greeting = self.realize(task, backend, &session.state, realize)?;
        let session = self.finish_open(session, greeting);
        self.append(&session.id, &Event::Created {
            id: session.id.clone(),
            task,
            backend,
            seed,
            greeting: session.greeting.clone(),
            at: session.created_at,
        }, true)?;
        let info = session.info();
        self.sessions.lock().expect("session map").insert(session.id.clone(), Arc::new(Mutex::new(session)));
        Ok(info)
    }

    fn open(&self, id: String, task: Task, backend: BackendKind, seed: u64) -> Result<(Session, PredicateSet), EngineError> {
        self.backend(task, backend)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = DialogState::new(&id);
        let at = now();
        let (state, opening, realize) = match task {
            Task::Concierge => (state, None, PredicateSet(vec![crate::predicate::Predicate::constant("greet")])),
            Task::Companion => {
                let (state, next) = companion::opening(&state, &self.graph, &self.rcc, &mut rng)?;
                let realize = next.realizer_predicates(&self.graph);
                (state, Some(next), realize)
            }
        };
        let session = Session {
            id,
            task,
            backend,
            seed,
            rng,
            state,
            greeting: String::new(),
            opening,
            created_at: at,
            updated_at: at,
        };
        Ok((session, realize))
    }

    fn finish_open(&self, mut session: Session, greeting: String) -> Session {
        let preds = match &session.opening {
            Some(next) => next.to_predicates(),
            None => PredicateSet(vec![crate::predicate::Predicate::constant("greet")]),
        };
        session.state.record_bot(&greeting, preds);
        session.greeting = greeting;
        session
    }

    fn context(&self, state: &DialogState) -> Vec<Exchange> {
        let mut out = Vec::new();
        let mut user: Option<&str> = None;
        for t in &state.history {
            match t.speaker {
                Speaker::User => user = Some(&t.text),
                Speaker::Bot => {
                    out.push(Exchange { user: user.take().unwrap_or_default().to_string(), bot: t.text.clone() })
                }
            }
        }
        let skip = out.len().saturating_sub(self.context_turns);
        out.split_off(skip)
    }

    fn realize(&self, task: Task, kind: BackendKind, state: &DialogState, preds: PredicateSet) -> Result<String, EngineError> {
        let backend = self.backend(task, kind)?;
        let req = RealizeRequest {
            task: task.as_str().into(),
            persona: task.as_str().into(),
            predicates: preds,
            context: self.context(state),
        };
        Ok(nl::realize(backend, &req)?)
    }

    /// Runs the reasoner for one user turn whose predicates are known.
    fn decide(&self, session: &Session, text: &str, themes: PredicateSet) -> Result<Pending, EngineError> {
        if session.state.quit {
            return Err(EngineError::StateClosed);
        }
        let mut next = session.clone();
        let onto = self.ontology(session.task);
        let (decision, decision_kind, realize) = match session.task {
            Task::Concierge => {
                let mut state = session.state.update_turn(text, &themes, onto)?;
                let action = next_action(&self.spec, &state, onto, &self.kb);
                apply_action(&mut state, &action);
                next.state = state;
                let preds = action.to_predicates();
                (preds.clone(), action.kind().to_string(), preds)
            }
            Task::Companion => {
                let out = companion::step(
                    &session.state,
                    text,
                    &themes,
                    onto,
                    &self.graph,
                    &self.rcc,
                    &mut next.rng,
                )?;
                next.state = out.state;
                let kind = match &out.next {
                    NextBlock::Quit => "quit".to_string(),
                    NextBlock::Talk { next, .. } => next.step.kind().to_string(),
                };
                (out.next.to_predicates(), kind, out.next.realizer_predicates(&self.graph))
            }
        };
        Ok(Pending { session: next, themes, decision, decision_kind, realize })
    }

    fn understand(&self, session: &Session, text: &str) -> Result<PredicateSet, EngineError> {
        let backend = self.backend(session.task, session.backend)?;
        let onto = self.ontology(session.task);
        let examples = match session.backend {
            BackendKind::Live => self.mock_table(session.task).examples(),
            BackendKind::Mock => Vec::new(),
        };
        let req = UnderstandRequest {
            task: session.task.as_str().into(),
            utterance: text.into(),
            context: self.context(&session.state),
            ontology_summary: onto.prompt_summary(),
            examples,
        };
        Ok(nl::understand(backend, &req, onto)?)
    }

    fn commit(&self, pending: Pending, reply: String) -> (Session, TurnResponse) {
        let Pending { mut session, themes, decision, decision_kind, .. } = pending;
        session.state.record_bot(&reply, decision.clone());
        session.updated_at = now();
        let style = session.task.style();
        let resp = TurnResponse {
            reply,
            themes: themes.serialize(style),
            action: decision.serialize(style),
            action_kind: decision_kind,
            digest: session.digest(),
            closed: session.state.quit,
        };
        (session, resp)
    }

    /// One full turn. Turns on the same session run one at a time.
    pub fn post_message(&self, id: &str, text: &str) -> Result<TurnResponse, EngineError> {
        let handle = self.handle(id)?;
        let mut guard = handle.lock().expect("session lock");
        if guard.state.quit {
            return Err(EngineError::StateClosed);
        }
        let themes = self.understand(&guard, text)?;
        let pending = self.decide(&guard, text, themes)?;
        let reply = self.realize(guard.task, guard.backend, &pending.session.state, pending.realize.clone())?;
        let (session, resp) = self.commit(pending, reply);
        self.append(id, &Event::Turn {
            text: text.to_string(),
            predicates: resp.themes.clone(),
            reply: resp.reply.clone(),
            at: session.updated_at,
        }, false)?;
        *guard = session;
        Ok(resp)
    }

    /// Feeds already-parsed predicates through the reasoner, skipping the
    /// understand step.
    pub fn post_predicates(&self, id: &str, text: &str, predicates: &str) -> Result<TurnResponse, EngineError> {
        let themes = parse_predicates(predicates).map_err(|e| EngineError::Invalid(e.to_string()))?;
        let handle = self.handle(id)?;
        let mut guard = handle.lock().expect("session lock");
        let report = self.ontology(guard.task).validate(&themes);
        if !report.is_ok() {
            return Err(EngineError::Invalid(report.to_string()));
        }
        let pending = self.decide(&guard, text, themes)?;
        let reply = self.realize(guard.task, guard.backend, &pending.session.state, pending.realize.clone())?;
        let (session, resp) = self.commit(pending, reply);
        self.append(id, &Event::Turn {
            text: text.to_string(),
            predicates: resp.themes.clone(),
            reply: resp.reply.clone(),
            at: session.updated_at,
        }, false)?;
        *guard = session;
        Ok(resp)
    }

    pub fn session(&self, id: &str) -> Result<Session, EngineError> {
        Ok(self.handle(id)?.lock().expect("session lock").clone())
    }

    pub fn info(&self, id: &str) -> Result<SessionInfo, EngineError> {
        Ok(self.handle(id)?.lock().expect("session lock").info())
    }

    pub fn transcript(&self, id: &str) -> Result<Vec<TranscriptEntry>, EngineError> {
        Ok(self.handle(id)?.lock().expect("session lock").transcript())
    }

    pub fn digest(&self, id: &str) -> Result<String, EngineError> {
        Ok(self.handle(id)?.lock().expect("session lock").digest())
    }

    pub fn state_view(&self, id: &str) -> Result<StateView, EngineError> {
        let s = self.session(id)?;
        let missing = match s.task {
            Task::Concierge => crate::ckt::check_completeness(&self.spec, &s.state),
            Task::Companion => Vec::new(),
        };
        Ok(StateView {
            id: s.id.clone(),
            task: s.task,
            digest: s.digest(),
            rng_word_pos: s.rng.get_word_pos().to_string(),
            missing,
            facts: s.state.facts_block(),
            themes: s.state.topic.themes_transcript(),
            state: s.state,
        })
    }

    fn append(&self, id: &str, event: &Event, create: bool) -> Result<(), EngineError> {
        let Some(dir) = &self.log_dir else {
            return Ok(());
        };
        let path = dir.join(format!("{id}.jsonl"));
        let mut file = OpenOptions::new().create(create).append(true).open(&path)?;
        let mut line = serde_json::to_string(event).map_err(|e| EngineError::Data(e.to_string()))?;
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok(())
    }

    /// Rebuilds a session from its event log without contacting any backend.
    pub fn replay(&self, path: impl AsRef<Path>) -> Result<Session, EngineError> {
        let path = path.as_ref();
        let reader = BufReader::new(File::open(path)?);
        let mut lines: Vec<String> = reader.lines().collect::<Result<_, _>>()?;
        // a crash mid-write leaves at most one partial line at the end
        if lines.last().is_some_and(|l| serde_json::from_str::<Event>(l).is_err()) {
            log::warn!("{}: ignoring truncated final event", path.display());
            lines.pop();
        }
        let mut session: Option<Session> = None;
        for (n, line) in lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(line)
                .map_err(|e| EngineError::Data(format!("{} line {}: {e}", path.display(), n + 1)))?;
            match (event, session.take()) {
                (Event::Created { id, task, backend, seed, greeting, at }, None) => {
                    let (mut s, _) = self.open(id, task, backend, seed).or_else(|e| match e {
                        // the live endpoint may be gone; replay needs no backend
                        EngineError::Backend(_) => self.open_offline(task, backend, seed),
                        other => Err(other),
                    })?;
                    s.created_at = at;
                    s.updated_at = at;
                    session = Some(self.finish_open(s, greeting));
                }
                (Event::Turn { text, predicates, reply, at }, Some(s)) => {
                    let themes = parse_predicates(&predicates).map_err(|e| EngineError::Data(e.to_string()))?;
                    let pending = self.decide(&s, &text, themes)?;
                    let (mut s, _) = self.commit(pending, reply);
                    s.updated_at = at;
                    session = Some(s);
                }
                _ => return Err(EngineError::Data(format!("{}: events out of order", path.display()))),
            }
        }
        let mut s = session.ok_or_else(|| EngineError::Data(format!("{}: empty log", path.display())))?;
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            s.id = stem.to_string();
            s.state.session_id = stem.to_string();
        }
        Ok(s)
    }

    fn open_offline(&self, task: Task, backend: BackendKind, seed: u64) -> Result<(Session, PredicateSet), EngineError> {
        let (mut s, r) = self.open(String::new(), task, BackendKind::Mock, seed)?;
        s.backend = backend;
        Ok((s, r))
    }

    /// Loads every session found in the log directory. Returns how many.
    pub fn recover(&self) -> Result<usize, EngineError> {
        let Some(dir) = &self.log_dir else {
            return Ok(0);
        };
        let mut count = 0;
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        paths.sort();
        for path in paths {
            if let Err(e) = trim_partial_line(&path) {
                log::error!("could not repair {}: {e}", path.display());
                continue;
            }
            match self.replay(&path) {
                Ok(s) => {
                    self.sessions.lock().expect("session map").insert(s.id.clone(), Arc::new(Mutex::new(s)));
                    count += 1;
                }
                Err(e) => log::error!("could not recover {}: {e}", path.display()),
            }
        }
        Ok(count)
    }
}

/// Cuts an unterminated final line so later appends start on a fresh line.
fn trim_partial_line(path: &Path) -> std::io::Result<()> {
    let bytes = fs::read(path)?;
    if bytes.is_empty() || bytes.ends_with(b"\n") {
        return Ok(());
    }
    let keep = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    log::warn!("{}: dropping {} bytes of a partial event", path.display(), bytes.len() - keep);
    OpenOptions::new().write(true).open(path)?.set_len(keep as u64)
}
