//! Evaluation sessions under the patience protocol.
//!
//! A session plans a turn, phrases it as a user message, sends the whole
//! conversation so far to a [`ModelAdapter`], verifies the reply and
//! updates the patience counter: a failed turn costs one point, a fully
//! satisfied turn restores the maximum. The session ends when patience
//! reaches zero or the turn cap is hit.

mod compose;
mod oracle;
mod transcript;

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compose::{compose_failing, compose_passing};
pub use oracle::OracleAgent;
pub use transcript::{SessionHeader, SessionTranscript, Termination, TurnRecord};

use crate::chat::{ChatBackend, ChatError, ChatMessage, Role};
use crate::constraint::verify_instruction;
use crate::script::{init_dialogue, next_turn, EvolutionConfig, ScriptError, TopicSpec, TurnPlan};
use crate::synthesis::{paraphrase, render_template, ParaphrasePolicy, UserQuery};

/// The default system prompt, version 1.
pub const SYSTEM_PROMPT_V1: &str = include_str!("../../assets/system_prompt_v1.txt");

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("turn {turn}: could not construct an oracle response: {detail}")]
    Construction { turn: u32, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed transcript line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatienceState {
    pub current: u32,
    pub maximum: u32,
}

impl PatienceState {
    pub fn new(maximum: u32) -> Self {
        PatienceState { current: maximum, maximum }
    }

    pub fn exhausted(self) -> bool {
        self.current == 0
    }
}

pub fn update_patience(state: PatienceState, success: bool) -> PatienceState {
    let current = if success { state.maximum } else { state.current.saturating_sub(1) };
    PatienceState { current, maximum: state.maximum }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdapterError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("{0}")]
    Construction(String),
}

impl From<ChatError> for AdapterError {
    fn from(e: ChatError) -> Self {
        match e {
            ChatError::Transport(m) => AdapterError::Transport(m),
            ChatError::MalformedResponse(m) => AdapterError::Malformed(m),
        }
    }
}

/// What an adapter sees for one turn.
pub struct TurnContext<'a> {
    /// The full conversation so far, ending with the new user message.
    pub messages: &'a [ChatMessage],
    /// The turn's plan. Only oracle agents may look at it.
    pub plan: &'a TurnPlan,
    pub session_seed: u64,
}

/// The model under evaluation. Implementations must not carry state
/// between calls; everything they need is in the context.
pub trait ModelAdapter: Send + Sync {
    fn id(&self) -> String;
    fn respond(&self, ctx: &TurnContext<'_>) -> Result<String, AdapterError>;
}

/// Evaluates a chat-completion backend.
pub struct ChatAdapter<B>(pub B);

impl<B: ChatBackend> ModelAdapter for ChatAdapter<B> {
    fn id(&self) -> String {
        self.0.model_id().to_string()
    }

    fn respond(&self, ctx: &TurnContext<'_>) -> Result<String, AdapterError> {
        Ok(self.0.complete(ctx.messages)?)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthesisMode {
    #[default]
    Template,
    Paraphrase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub patience_max: u32,
    pub system_prompt: bool,
    /// Store per-turn wall-clock latency. Off keeps transcripts reproducible.
    pub record_latency: bool,
    pub synthesis: SynthesisMode,
    pub paraphrase: ParaphrasePolicy,
    pub evolution: EvolutionConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            patience_max: 3,
            system_prompt: true,
            record_latency: false,
            synthesis: SynthesisMode::Template,
            paraphrase: ParaphrasePolicy::default(),
            evolution: EvolutionConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        self.evolution.validate()?;
        if self.patience_max == 0 {
            return Err(SessionError::InvalidConfig("patience_max must be at least 1".into()));
        }
        if self.evolution.max_turns_cap < self.patience_max {
            return Err(SessionError::InvalidConfig(format!(
                "max_turns_cap ({}) must be at least patience_max ({})",
                self.evolution.max_turns_cap, self.patience_max
            )));
        }
        Ok(())
    }
}

pub fn session_id(seed: u64) -> String {
    format!("session-{seed:06}")
}

/// Runs one session to completion. Transport failures end the session with
/// a partial transcript; only setup errors and oracle construction
/// failures are returned as errors.
pub fn run_session(
    corpus: &[TopicSpec],
    config: &SessionConfig,
    seed: u64,
    adapter: &dyn ModelAdapter,
    paraphraser: Option<&dyn ChatBackend>,
) -> Result<SessionTranscript, SessionError> {
    config.validate()?;
    let paraphraser = match (config.synthesis, paraphraser) {
        (SynthesisMode::Template, _) => None,
        (SynthesisMode::Paraphrase, Some(p)) => Some(p),
        (SynthesisMode::Paraphrase, None) => {
            return Err(SessionError::InvalidConfig("paraphrase synthesis needs a paraphrase endpoint".into()))
        }
    };
    let mut state = init_dialogue(corpus, &config.evolution, seed)?;
    let cap = config.evolution.max_turns_cap;
    let mut messages = Vec::new();
    if config.system_prompt {
        messages.push(ChatMessage::new(Role::System, SYSTEM_PROMPT_V1.trim_end()));
    }
    let mut patience = PatienceState::new(config.patience_max);
    let mut records: Vec<TurnRecord> = Vec::new();

    let termination = loop {
        if records.len() as u32 >= cap {
            break Termination::CapReached;
        }
        let plan = next_turn(&mut state)?;
        let query: UserQuery = match paraphraser {
            None => render_template(&plan),
            Some(backend) => match paraphrase(&plan, backend, &config.paraphrase) {
                Ok(q) => q,
                Err(e) => break Termination::TransportFailure { error: e.to_string() },
            },
        };
        messages.push(ChatMessage::new(Role::User, query.surface.clone()));
        let started = Instant::now();
        let ctx = TurnContext { messages: &messages, plan: &plan, session_seed: seed };
        let response = match adapter.respond(&ctx) {
            Ok(r) => r,
            Err(AdapterError::Construction(detail)) => {
                return Err(SessionError::Construction { turn: plan.turn, detail })
            }
            Err(e) => {
                log::warn!("{} seed {seed} turn {}: {e}", adapter.id(), plan.turn);
                break Termination::TransportFailure { error: e.to_string() };
            }
        };
        let latency_ms = config.record_latency.then(|| started.elapsed().as_millis() as u64);
        messages.push(ChatMessage::new(Role::Assistant, response.clone()));
        let verdicts = verify_instruction(&plan.instruction, &response);
        let turn_success = verdicts.all_satisfied;
        patience = update_patience(patience, turn_success);
        records.push(TurnRecord {
            turn: plan.turn,
            plan,
            query,
            response,
            verdicts,
            turn_success,
            patience_after: patience.current,
            latency_ms,
        });
        if patience.exhausted() {
            break Termination::PatienceExhausted;
        }
    };

    Ok(SessionTranscript {
        header: SessionHeader {
            session_id: session_id(seed),
            seed,
            adapter: adapter.id(),
            config: config.clone(),
            termination,
            turns: records.len() as u32,
        },
        records,
    })
}
