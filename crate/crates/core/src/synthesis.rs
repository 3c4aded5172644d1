//! Turning a [`TurnPlan`] into the user's message.
//!
//! The template path is a fixed grammar that restates the topic request
//! and every active constraint clause exactly once. The paraphrase path
//! hands the same material to a chat backend for a freer surface form and
//! falls back to the template when the backend fails.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chat::{ChatBackend, ChatError, ChatMessage, Role};
use crate::constraint::{
    mark_name, render_fragment, Anchor, CaseRule, ConstraintSpec, Group, Instruction,
};
use crate::script::{Transition, TurnPlan};

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("paraphrase backend unavailable: {0}")]
    ParaphraseUnavailable(ChatError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthesisPrompt {
    pub mode: Transition,
    pub topic_description: String,
    pub current_fragments: Vec<String>,
    pub delta_fragments: Vec<String>,
    pub raw_prompt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SynthesisPath {
    Template,
    Paraphrase { model: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserQuery {
    /// Turn of the plan this query realizes.
    pub turn: u32,
    pub surface: String,
    pub synthesis_path: SynthesisPath,
    /// Why the paraphrase path fell back to the template, if it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParaphrasePolicy {
    /// Extra calls after a failed first call.
    pub retries: u32,
    /// Use the template when the backend keeps failing; otherwise error.
    pub fallback: bool,
}

impl Default for ParaphrasePolicy {
    fn default() -> Self {
        ParaphrasePolicy { retries: 2, fallback: true }
    }
}

/// How one changed constraint is spoken in a follow-up turn.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Delta {
    Added(String),
    Changed(String),
    Removed(String),
}

impl Delta {
    fn clause(&self) -> String {
        match self {
            Delta::Added(f) | Delta::Changed(f) => f.clone(),
            Delta::Removed(f) => format!("the earlier requirement \"{f}\" no longer applies"),
        }
    }

    fn spoken(&self) -> String {
        match self {
            Delta::Added(f) => format!("also {f}"),
            Delta::Changed(f) => format!("now {f}"),
            Delta::Removed(_) => self.clause(),
        }
    }
}

fn param_text(spec: &ConstraintSpec) -> Option<String> {
    Some(match spec {
        ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a) => match a {
            Anchor::Letter(c) => format!("\"{c}\""),
            Anchor::Emoji(e) => e.to_string(),
            Anchor::Keyword(k) => format!("\"{k}\""),
            Anchor::Quotation => return None,
        },
        ConstraintSpec::Format(kind) => kind.label().to_string(),
        ConstraintSpec::Case(CaseRule::MinUpperRatio { percent }) => format!("{percent}%"),
        ConstraintSpec::Case(_) => return None,
        ConstraintSpec::Punctuation { mark, .. } => format!("the {}", mark_name(*mark)),
        ConstraintSpec::BulletPoints { count } => count.to_string(),
        ConstraintSpec::Length { bound, .. } => bound.to_string(),
        ConstraintSpec::KeywordCount { count, .. } => count.to_string(),
        ConstraintSpec::ForbiddenKeyword { keyword } => format!("\"{keyword}\""),
    })
}

/// Old and new differ in exactly one displayed parameter.
fn same_shape(old: &ConstraintSpec, new: &ConstraintSpec) -> bool {
    use ConstraintSpec as C;
    match (old, new) {
        (C::StartWith(a), C::StartWith(b)) | (C::EndWith(a), C::EndWith(b)) => a.variant() == b.variant(),
        (C::Format(_), C::Format(_)) | (C::BulletPoints { .. }, C::BulletPoints { .. }) => true,
        (C::ForbiddenKeyword { .. }, C::ForbiddenKeyword { .. }) => true,
        (C::Case(CaseRule::MinUpperRatio { .. }), C::Case(CaseRule::MinUpperRatio { .. })) => true,
        (C::Punctuation { presence: p, .. }, C::Punctuation { presence: q, .. }) => p == q,
        (C::Length { unit: u, relation: r, .. }, C::Length { unit: v, relation: s, .. }) => u == v && r == s,
        (C::KeywordCount { keyword: k, .. }, C::KeywordCount { keyword: l, .. }) => k == l,
        _ => false,
    }
}

fn changed_clause(old: &ConstraintSpec, new: &ConstraintSpec) -> String {
    let fragment = render_fragment(new);
    match param_text(old) {
        Some(p) if same_shape(old, new) => format!("{fragment} (changed from {p})"),
        _ => format!("{fragment} (this replaces \"{}\")", render_fragment(old)),
    }
}

/// Changes between the plan's base and final instruction. The evolution
/// step's group comes first, then the rest in group order.
fn deltas(plan: &TurnPlan) -> Vec<(Group, Delta)> {
    let empty = Instruction::new();
    let prev = plan.prev_instruction.as_ref().unwrap_or(&empty);
    let cur = &plan.instruction;
    let mut out = Vec::new();
    for g in Group::ALL {
        let delta = match (prev.get(g), cur.get(g)) {
            (None, Some(new)) => Delta::Added(render_fragment(new)),
            (Some(old), Some(new)) if old != new => Delta::Changed(changed_clause(old, new)),
            (Some(old), None) => Delta::Removed(render_fragment(old)),
            _ => continue,
        };
        out.push((g, delta));
    }
    let lead = plan.evolution.group();
    out.sort_by_key(|(g, _)| *g != lead);
    out
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn sentence(s: &str) -> String {
    format!("{}.", capitalize(s))
}

fn template_surface(plan: &TurnPlan) -> String {
    let mut parts = Vec::new();
    if plan.transition == Transition::New {
        parts.push(sentence(&format!("please {}", plan.topic_description)));
        parts.extend(plan.instruction.iter().map(|c| sentence(&render_fragment(c))));
        return parts.join(" ");
    }
    let ds = deltas(plan);
    let changed: Vec<Group> = ds.iter().map(|(g, _)| *g).collect();
    let mut spoken = ds.iter().map(|(_, d)| d.spoken());
    match plan.transition {
        Transition::Continue => {
            let first = spoken.next().unwrap_or_default();
            parts.push(format!("For the same request, {first}."));
        }
        _ => parts.push(format!(
            "Let's go back to the earlier request about \"{}\".",
            plan.topic_description
        )),
    }
    parts.extend(spoken.map(|s| sentence(&s)));
    let keep: Vec<String> = plan
        .instruction
        .iter()
        .filter(|c| !changed.contains(&c.group()))
        .map(render_fragment)
        .collect();
    if !keep.is_empty() {
        let verb = if plan.transition == Transition::Continue { "Keep" } else { "Follow" };
        parts.push(format!("{verb} the other requirements: {}.", keep.join("; ")));
    }
    parts.join(" ")
}

fn mode_note(mode: Transition) -> &'static str {
    match mode {
        Transition::New => "The user is starting a new request.",
        Transition::Continue => "The user is following up on the same request and changing some requirements.",
        Transition::Backtrack => "The user is returning to a request from earlier in the conversation.",
    }
}

pub fn build_prompt(plan: &TurnPlan) -> SynthesisPrompt {
    let current_fragments = plan.instruction.iter().map(render_fragment).collect();
    let delta_fragments = if plan.transition == Transition::New {
        Vec::new()
    } else {
        deltas(plan).into_iter().map(|(_, d)| d.clause()).collect()
    };
    let raw_prompt = format!(
        "Rewrite the message below as a natural message a user would send to an assistant. \
         Keep the request and every requirement exactly as stated, add nothing new, \
         and reply with the rewritten message only.\n\n{}\n\nMessage:\n{}",
        mode_note(plan.transition),
        template_surface(plan)
    );
    SynthesisPrompt {
        mode: plan.transition,
        topic_description: plan.topic_description.clone(),
        current_fragments,
        delta_fragments,
        raw_prompt,
    }
}

pub fn render_template(plan: &TurnPlan) -> UserQuery {
    UserQuery {
        turn: plan.turn,
        surface: template_surface(plan),
        synthesis_path: SynthesisPath::Template,
        fallback: None,
    }
}

/// Asks `backend` to restate the plan. Empty replies fall back at once;
/// transport failures are retried `policy.retries` times first.
pub fn paraphrase(
    plan: &TurnPlan,
    backend: &dyn ChatBackend,
    policy: &ParaphrasePolicy,
) -> Result<UserQuery, SynthesisError> {
    let prompt = build_prompt(plan);
    let messages = [ChatMessage::new(Role::User, prompt.raw_prompt)];
    let mut last_error = None;
    for _ in 0..=policy.retries {
        match backend.complete(&messages) {
            Ok(text) if !text.trim().is_empty() => {
                return Ok(UserQuery {
                    turn: plan.turn,
                    surface: text,
                    synthesis_path: SynthesisPath::Paraphrase { model: backend.model_id().to_string() },
                    fallback: None,
                });
            }
            Ok(_) => {
                last_error = Some(ChatError::MalformedResponse("empty paraphrase".into()));
                break;
            }
            Err(e) => last_error = Some(e),
        }
    }
    let err = last_error.expect("loop ran at least once");
    if !policy.fallback {
        return Err(SynthesisError::ParaphraseUnavailable(err));
    }
    log::warn!("turn {}: paraphrase fell back to template: {err}", plan.turn);
    let mut query = render_template(plan);
    query.fallback = Some(err.to_string());
    Ok(query)
}
