//! Seeded dialogue scripts.
//!
//! A script is a stream of [`TurnPlan`]s. Each turn picks a topic
//! (continue, new, or back to an earlier one), evolves that topic's
//! instruction by one add, modify or remove step, and then randomly nudges
//! the parameters of the constraints that step left untouched.

mod corpus;
mod engine;
mod qc;

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{load_corpus, parse_corpus, sample_corpus, TopicSpec};
pub use engine::{generate_script, init_dialogue, next_turn, DialogueState};
pub use qc::{qc_filter, QcOutcome, QC_MIN_MEAN, QC_WINDOW};

use crate::constraint::{ConstraintSpec, Group, Instruction, SamplerConfig};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("topic corpus is empty")]
    EmptyCorpus,
    #[error("invalid topic corpus: {0}")]
    InvalidCorpus(String),
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error("turn cap of {0} reached")]
    CapReached(u32),
    #[error("no admissible instruction change found at turn {0}")]
    SamplingExhausted(u32),
    #[error("QC needs at least {needed} turns, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed script line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    Continue,
    New,
    Backtrack,
}

impl Transition {
    pub fn name(self) -> &'static str {
        match self {
            Transition::Continue => "Continue",
            Transition::New => "New",
            Transition::Backtrack => "Backtrack",
        }
    }
}

/// The instruction-level step taken on a turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op")]
pub enum Evolution {
    Add { constraint: ConstraintSpec },
    Modify { from: ConstraintSpec, to: ConstraintSpec },
    Remove { constraint: ConstraintSpec },
}

impl Evolution {
    /// The group this step touched.
    pub fn group(&self) -> Group {
        match self {
            Evolution::Add { constraint } | Evolution::Remove { constraint } => constraint.group(),
            Evolution::Modify { to, .. } => to.group(),
        }
    }
}

/// A triggered parameter mutation. `applied` is false when the draw left
/// the constraint unchanged or the result was not admissible.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamMutation {
    pub from: ConstraintSpec,
    pub to: ConstraintSpec,
    pub applied: bool,
}

/// Structured user intention for one turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnPlan {
    pub turn: u32,
    pub topic: String,
    pub topic_description: String,
    pub transition: Transition,
    pub evolution: Evolution,
    pub instruction: Instruction,
    /// The topic's stored instruction before this turn's changes; absent
    /// when the topic is new.
    pub prev_instruction: Option<Instruction>,
    #[serde(default)]
    pub mutations: Vec<ParamMutation>,
}

impl TurnPlan {
    pub fn applied_mutations(&self) -> impl Iterator<Item = &ParamMutation> {
        self.mutations.iter().filter(|m| m.applied)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionProbs {
    #[serde(rename = "continue")]
    pub cont: f64,
    pub new: f64,
    pub backtrack: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionProbs {
    pub add: f64,
    pub modify: f64,
    pub remove: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub transition_probs: TransitionProbs,
    pub evolution_probs: EvolutionProbs,
    pub param_mutation_prob: f64,
    pub max_constraints_per_instruction: u32,
    pub min_constraints_floor: u32,
    pub max_turns_cap: u32,
    pub sampler: SamplerConfig,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            transition_probs: TransitionProbs { cont: 0.6, new: 0.2, backtrack: 0.2 },
            evolution_probs: EvolutionProbs { add: 0.5, modify: 0.3, remove: 0.2 },
            param_mutation_prob: 0.3,
            max_constraints_per_instruction: 6,
            min_constraints_floor: 1,
            max_turns_cap: 50,
            sampler: SamplerConfig::default(),
        }
    }
}

fn check_probs(name: &str, probs: &[f64]) -> Result<(), ScriptError> {
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(ScriptError::InvalidConfig(format!("{name} entries must lie in [0, 1]")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ScriptError::InvalidConfig(format!("{name} must sum to 1, got {sum}")));
    }
    Ok(())
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), ScriptError> {
        let t = self.transition_probs;
        check_probs("transition_probs", &[t.cont, t.new, t.backtrack])?;
        let e = self.evolution_probs;
        check_probs("evolution_probs", &[e.add, e.modify, e.remove])?;
        if !(0.0..=1.0).contains(&self.param_mutation_prob) {
            return Err(ScriptError::InvalidConfig("param_mutation_prob must lie in [0, 1]".into()));
        }
        let (floor, max) = (self.min_constraints_floor, self.max_constraints_per_instruction);
        if floor < 1 || floor > max || max as usize > Group::ALL.len() {
            return Err(ScriptError::InvalidConfig(format!(
                "need 1 <= min_constraints_floor ({floor}) <= max_constraints_per_instruction ({max}) <= 9"
            )));
        }
        if self.max_turns_cap == 0 {
            return Err(ScriptError::InvalidConfig("max_turns_cap must be positive".into()));
        }
        self.sampler.validate().map_err(ScriptError::InvalidConfig)
    }
}

/// Writes one plan per line.
pub fn write_script_jsonl<W: Write>(plans: &[TurnPlan], mut out: W) -> Result<(), ScriptError> {
    for plan in plans {
        serde_json::to_writer(&mut out, plan).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_script_jsonl<R: BufRead>(input: R) -> Result<Vec<TurnPlan>, ScriptError> {
    let mut plans = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let plan = serde_json::from_str(&line).map_err(|source| ScriptError::Parse { line: i + 1, source })?;
        plans.push(plan);
    }
    Ok(plans)
}
