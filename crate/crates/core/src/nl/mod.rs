//! The natural-language boundary: utterances in, predicates out (understand)
//! and reasoner instructions in, reply text out (realize).
//!
//! Backends only ever see the request they are handed. They never touch
//! dialogue state.

mod eval;
mod live;
mod mock;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::Ontology;
use crate::predicate::{parse_predicates, PredicateSet};

pub use eval::{evaluate_parsing, load_e2e, AccuracyReport, E2eRow, EvalError, EvalOptions, Failure, SlotStats};
pub use live::LiveBackend;
pub use mock::{EmptyBackend, GoldEchoBackend, MockBackend, MockTable, Templates};

#[derive(Debug, Error)]
pub enum NlError {
    #[error("backend unavailable: {message}")]
    BackendUnavailable { message: String, retry_after: Option<u64> },
    #[error("backend output could not be used after a repair attempt: {reason}")]
    UnparseableOutput { raw: String, reason: String },
    #[error("backend timed out")]
    Timeout,
    #[error("backend misconfigured: {0}")]
    Config(String),
}

impl NlError {
    pub fn unavailable(message: impl Into<String>) -> Self {
        NlError::BackendUnavailable { message: message.into(), retry_after: None }
    }
}

/// One prior user/bot exchange passed as context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub user: String,
    pub bot: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShot {
    pub utterance: String,
    pub predicates: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnderstandRequest {
    pub task: String,
    pub utterance: String,
    pub context: Vec<Exchange>,
    pub ontology_summary: String,
    pub examples: Vec<FewShot>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealizeRequest {
    pub task: String,
    pub persona: String,
    pub predicates: PredicateSet,
    pub context: Vec<Exchange>,
}

/// A rejected parse handed back to the backend for one more try.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repair {
    pub previous: String,
    pub problem: String,
}

pub trait NlBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Raw predicate text for `req.utterance`.
    fn parse(&self, req: &UnderstandRequest, repair: Option<&Repair>) -> Result<String, NlError>;

    fn realize(&self, req: &RealizeRequest) -> Result<String, NlError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Live,
    Mock,
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(BackendKind::Live),
            "mock" => Ok(BackendKind::Mock),
            other => Err(format!("unknown backend `{other}` (expected live or mock)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub credential_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Scripted utterance table for the mock backend.
    #[serde(default)]
    pub mock_table: Option<PathBuf>,
    /// Number of prior exchanges sent as context.
    #[serde(default = "default_context")]
    pub context_turns: usize,
}

fn default_timeout() -> u64 {
    30
}

fn default_retries() -> u32 {
    2
}

fn default_context() -> usize {
    4
}

impl BackendConfig {
    pub fn mock(table: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: None,
            model: None,
            credential_env: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            mock_table: Some(table.into()),
            context_turns: default_context(),
        }
    }

    pub fn live(endpoint: impl Into<String>, model: impl Into<String>, credential_env: impl Into<String>) -> Self {
        Self {
            kind: BackendKind::Live,
            endpoint: Some(endpoint.into()),
            model: Some(model.into()),
            credential_env: Some(credential_env.into()),
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            mock_table: None,
            context_turns: default_context(),
        }
    }

    pub fn check(&self) -> Result<(), NlError> {
        match self.kind {
            BackendKind::Live if self.endpoint.is_none() => Err(NlError::Config("live backend needs an endpoint".into())),
            BackendKind::Live if self.credential_env.is_none() => {
                Err(NlError::Config("live backend needs a credential variable name".into()))
            }
            BackendKind::Mock if self.mock_table.is_none() => Err(NlError::Config("mock backend needs a table".into())),
            _ => Ok(()),
        }
    }
}

/// Parses the backend's answer and validates it against the ontology. An
/// unusable answer gets exactly one repair round trip.
pub fn understand(backend: &dyn NlBackend, req: &UnderstandRequest, onto: &Ontology) -> Result<PredicateSet, NlError> {
    let first = backend.parse(req, None)?;
    let problem = match check_output(&first, onto) {
        Ok(set) => return Ok(set),
        Err(p) => p,
    };
    log::warn!("{} returned unusable predicates ({problem}); retrying once", backend.name());
    let repair = Repair { previous: first, problem };
    let second = backend.parse(req, Some(&repair))?;
    check_output(&second, onto).map_err(|reason| NlError::UnparseableOutput { raw: second, reason })
}

fn check_output(raw: &str, onto: &Ontology) -> Result<PredicateSet, String> {
    let set = parse_predicates(raw).map_err(|e| e.to_string())?;
    let report = onto.validate(&set);
    if report.is_ok() {
        Ok(set)
    } else {
        Err(report.to_string().trim_end().to_string())
    }
}

pub fn realize(backend: &dyn NlBackend, req: &RealizeRequest) -> Result<String, NlError> {
    let text = backend.realize(req)?;
    if text.trim().is_empty() {
        return Err(NlError::UnparseableOutput { raw: text, reason: "empty reply".into() });
    }
    Ok(text.trim().to_string())
}
