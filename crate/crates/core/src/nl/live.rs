//! Chat-completions client. Request body:
//!
//! ```json
//! {"model": "...", "temperature": 0,
//!  "messages": [{"role": "system", "content": "..."},
//!               {"role": "user", "content": "..."}, {"role": "assistant", "content": "..."}, ...]}
//! ```
//!
//! The reply text is read from `choices[0].message.content`.

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};

use super::{BackendConfig, BackendKind, NlBackend, NlError, RealizeRequest, Repair, UnderstandRequest};
use crate::predicate::Style;

/// Longest wait honored from a `Retry-After` header before retrying in-process.
const MAX_INLINE_WAIT: u64 = 5;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    fn new(role: &str, content: impl Into<String>) -> Self {
        Self { role: role.into(), content: content.into() }
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f32,
    messages: &'a [Message],
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

pub struct LiveBackend {
    client: Client,
    endpoint: String,
    model: String,
    credential_env: String,
    max_retries: u32,
}

impl std::fmt::Debug for LiveBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("credential_env", &self.credential_env)
            .finish()
    }
}

impl LiveBackend {
    pub fn new(config: &BackendConfig) -> Result<Self, NlError> {
        if config.kind != BackendKind::Live {
            return Err(NlError::Config("not a live backend config".into()));
        }
        config.check()?;
        let client = Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| NlError::Config(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: config.endpoint.clone().unwrap_or_default(),
            model: config.model.clone().unwrap_or_else(|| "gpt-4".into()),
            credential_env: config.credential_env.clone().unwrap_or_default(),
            max_retries: config.max_retries,
        })
    }

    fn key(&self) -> Result<String, NlError> {
        std::env::var(&self.credential_env)
            .map_err(|_| NlError::Config(format!("environment variable {} is not set", self.credential_env)))
    }

    pub fn complete(&self, messages: &[Message]) -> Result<String, NlError> {
        let key = self.key()?;
        let body = ChatRequest { model: &self.model, temperature: 0.0, messages };
        let mut attempt = 0;
        loop {
            let sent = self.client.post(&self.endpoint).bearer_auth(&key).json(&body).send();
            let resp = match sent {
                Ok(r) => r,
                Err(e) if e.is_timeout() => return Err(NlError::Timeout),
                Err(e) => return Err(NlError::unavailable(e.to_string())),
            };
            let status = resp.status();
            if status.is_success() {
                let parsed: ChatResponse = resp.json().map_err(|e| match e.is_timeout() {
                    true => NlError::Timeout,
                    false => NlError::unavailable(format!("malformed response: {e}")),
                })?;
                return parsed
                    .choices
                    .into_iter()
                    .next()
                    .map(|c| c.message.content)
                    .ok_or_else(|| NlError::unavailable("response has no choices"));
            }
            let retry_after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok());
            let transient = status.is_server_error() || status == StatusCode::TOO_MANY_REQUESTS;
            if !transient || attempt >= self.max_retries {
                return Err(NlError::BackendUnavailable { message: format!("endpoint answered {status}"), retry_after });
            }
            attempt += 1;
            let wait = retry_after.unwrap_or(1 << attempt.min(3)).min(MAX_INLINE_WAIT);
            log::warn!("endpoint answered {status}; retry {attempt}/{} in {wait}s", self.max_retries);
            std::thread::sleep(Duration::from_secs(wait));
        }
    }
}

pub fn understand_messages(req: &UnderstandRequest, repair: Option<&Repair>) -> Vec<Message> {
    let system = format!(
        "You convert what a user says to a {} chatbot into predicates.\n\
         Use only these predicates and values:\n{}\n\
         Answer with the predicates only, separated by commas. Quote any argument that contains a comma. \
         If nothing applies, answer with an empty line.",
        req.task, req.ontology_summary
    );
    let mut messages = vec![Message::new("system", system)];
    for ex in &req.examples {
        messages.push(Message::new("user", &ex.utterance));
        messages.push(Message::new("assistant", &ex.predicates));
    }
    let mut prompt = String::new();
    if !req.context.is_empty() {
        prompt.push_str("Conversation so far:\n");
        for ex in &req.context {
            prompt.push_str(&format!("User: {}\nBot: {}\n", ex.user, ex.bot));
        }
        prompt.push_str("Latest user message:\n");
    }
    prompt.push_str(&req.utterance);
    messages.push(Message::new("user", prompt));
    if let Some(r) = repair {
        messages.push(Message::new("assistant", &r.previous));
        messages.push(Message::new(
            "user",
            format!("That answer was rejected: {}\nReply again with corrected predicates only.", r.problem),
        ));
    }
    messages
}

pub fn realize_messages(req: &RealizeRequest) -> Vec<Message> {
    let system = format!(
        "You are the voice of a {} chatbot. Turn the reasoner's instruction into one short, friendly reply. \
         Mention every name and value in the instruction exactly as written and add no other facts.",
        req.persona
    );
    let mut messages = vec![Message::new("system", system)];
    for ex in &req.context {
        messages.push(Message::new("user", &ex.user));
        messages.push(Message::new("assistant", &ex.bot));
    }
    messages.push(Message::new("user", format!("Instruction: {}", req.predicates.serialize(Style::Companion))));
    messages
}

impl NlBackend for LiveBackend {
    fn name(&self) -> &str {
        "live"
    }

    fn parse(&self, req: &UnderstandRequest, repair: Option<&Repair>) -> Result<String, NlError> {
        self.complete(&understand_messages(req, repair))
    }

    fn realize(&self, req: &RealizeRequest) -> Result<String, NlError> {
        self.complete(&realize_messages(req))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nl::{Exchange, FewShot};

    fn req() -> UnderstandRequest {
        UnderstandRequest {
            task: "concierge".into(),
            utterance: "cheap please".into(),
            context: vec![Exchange { user: "hi".into(), bot: "hello".into() }],
            ontology_summary: "require(slot, values)".into(),
            examples: vec![FewShot { utterance: "thai food".into(), predicates: "require('food type',['Thai'])".into() }],
        }
    }

    #[test]
    fn prompt_layout() {
        let m = understand_messages(&req(), None);
        assert_eq!(m.len(), 4);
        assert_eq!(m[0].role, "system");
        assert!(m[0].content.contains("require(slot, values)"));
        assert_eq!(m[2].content, "require('food type',['Thai'])");
        assert!(m[3].content.ends_with("cheap please"));
        let repaired = understand_messages(&req(), Some(&Repair { previous: "bad(".into(), problem: "syntax".into() }));
        assert_eq!(repaired.len(), 6);
        assert_eq!(repaired[4].content, "bad(");
    }

    #[test]
    fn missing_credential_is_a_config_error() {
        let mut cfg = BackendConfig::live("http://127.0.0.1:9", "m", "REASONCHAT_TEST_UNSET_KEY");
        cfg.timeout_secs = 1;
        let b = LiveBackend::new(&cfg).unwrap();
        assert!(matches!(b.parse(&req(), None), Err(NlError::Config(_))));
    }
}
