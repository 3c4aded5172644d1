use std::collections::{BTreeMap, BTreeSet};

use super::{EvolutionConfig, Evolution, ParamMutation, ScriptError, TopicSpec, Transition, TurnPlan};
use crate::constraint::{
    mutate_params, sample_constraint, within_envelope, ConstraintSpec, Group, Instruction,
};
use crate::rng::DrawStream;
use crate::text;

const ADD_ATTEMPTS: usize = 32;
const MODIFY_ATTEMPTS: usize = 32;

/// Per-dialogue generator state. Owns its random stream.
#[derive(Debug, Clone)]
pub struct DialogueState {
    corpus: Vec<TopicSpec>,
    config: EvolutionConfig,
    rng: DrawStream,
    turn_index: u32,
    topic_history: Vec<String>,
    instruction_by_topic: BTreeMap<String, Instruction>,
}

impl DialogueState {
    pub fn turn_index(&self) -> u32 {
        self.turn_index
    }

    pub fn topic_history(&self) -> &[String] {
        &self.topic_history
    }

    pub fn instruction_for(&self, topic: &str) -> Option<&Instruction> {
        self.instruction_by_topic.get(topic)
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    fn topic(&self, id: &str) -> &TopicSpec {
        self.corpus.iter().find(|t| t.id == id).expect("topic ids come from the corpus")
    }

    fn current_topic(&self) -> Option<&str> {
        self.topic_history.last().map(String::as_str)
    }

    fn unused_topics(&self) -> Vec<&str> {
        self.corpus
            .iter()
            .map(|t| t.id.as_str())
            .filter(|id| !self.instruction_by_topic.contains_key(*id))
            .collect()
    }

    /// Earlier topics other than the current one, in first-visit order.
    fn backtrack_targets(&self) -> Vec<&str> {
        let current = self.current_topic();
        let mut seen = BTreeSet::new();
        self.topic_history
            .iter()
            .map(String::as_str)
            .filter(|id| Some(*id) != current && seen.insert(*id))
            .collect()
    }
}

pub fn init_dialogue(
    corpus: &[TopicSpec],
    config: &EvolutionConfig,
    seed: u64,
) -> Result<DialogueState, ScriptError> {
    if corpus.is_empty() {
        return Err(ScriptError::EmptyCorpus);
    }
    config.validate()?;
    Ok(DialogueState {
        corpus: corpus.to_vec(),
        config: config.clone(),
        rng: DrawStream::from_seed(seed),
        turn_index: 0,
        topic_history: Vec::new(),
        instruction_by_topic: BTreeMap::new(),
    })
}

/// Lowercased keyword tokens used by constraints outside `except`.
fn tokens_in_use(instruction: &Instruction, except: Option<Group>) -> BTreeSet<String> {
    instruction
        .iter()
        .filter(|c| Some(c.group()) != except)
        .filter_map(ConstraintSpec::keyword)
        .flat_map(text::words)
        .map(str::to_lowercase)
        .collect()
}

fn free_pool(topic: &TopicSpec, used: &BTreeSet<String>) -> Vec<String> {
    topic
        .keyword_pool
        .iter()
        .filter(|k| text::words(k).all(|t| !used.contains(&t.to_lowercase())))
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Add,
    Modify,
    Remove,
}

struct Step<'a> {
    rng: &'a mut DrawStream,
    config: &'a EvolutionConfig,
    topic: &'a TopicSpec,
}

impl Step<'_> {
    fn try_add(&mut self, instruction: &mut Instruction) -> Option<Evolution> {
        for _ in 0..ADD_ATTEMPTS {
            let free = instruction.free_groups();
            if free.is_empty() {
                return None;
            }
            let group = *self.rng.pick(&free);
            let pool = free_pool(self.topic, &tokens_in_use(instruction, None));
            let Ok(spec) = sample_constraint(group, &pool, self.rng, &self.config.sampler) else {
                continue;
            };
            if !instruction.admits(&spec) {
                continue;
            }
            let mut candidate = instruction.clone();
            candidate.insert(spec.clone()).expect("admitted spec inserts");
            if within_envelope(&candidate) {
                *instruction = candidate;
                return Some(Evolution::Add { constraint: spec });
            }
        }
        None
    }

    fn try_modify(&mut self, instruction: &mut Instruction) -> Option<Evolution> {
        let present: Vec<ConstraintSpec> = instruction.iter().cloned().collect();
        if present.is_empty() {
            return None;
        }
        let old = present[self.rng.index(present.len())].clone();
        let group = old.group();
        let pool = free_pool(self.topic, &tokens_in_use(instruction, Some(group)));
        for _ in 0..MODIFY_ATTEMPTS {
            let Ok(spec) = sample_constraint(group, &pool, self.rng, &self.config.sampler) else {
                continue;
            };
            if spec == old || !instruction.admits_replacement(&spec) {
                continue;
            }
            let mut candidate = instruction.clone();
            candidate.replace(spec.clone()).expect("admitted replacement");
            if within_envelope(&candidate) {
                *instruction = candidate;
                return Some(Evolution::Modify { from: old, to: spec });
            }
        }
        None
    }

    fn remove(&mut self, instruction: &mut Instruction) -> Option<Evolution> {
        let groups: Vec<Group> = instruction.groups().collect();
        if groups.is_empty() {
            return None;
        }
        let group = groups[self.rng.index(groups.len())];
        instruction.remove(group).map(|constraint| Evolution::Remove { constraint })
    }

    fn apply(&mut self, op: Op, instruction: &mut Instruction) -> Option<Evolution> {
        match op {
            Op::Add => self.try_add(instruction),
            Op::Modify => self.try_modify(instruction),
            Op::Remove => self.remove(instruction),
        }
    }

    /// Parameter drift for every constraint the evolution step left alone.
    fn drift(&mut self, instruction: &mut Instruction, touched: Group) -> Vec<ParamMutation> {
        let mut out = Vec::new();
        let groups: Vec<Group> = instruction.groups().filter(|g| *g != touched).collect();
        for group in groups {
            if !self.rng.chance(self.config.param_mutation_prob) {
                continue;
            }
            let from = instruction.get(group).expect("group present").clone();
            let pool = free_pool(self.topic, &tokens_in_use(instruction, Some(group)));
            let to = mutate_params(&from, &pool, self.rng, &self.config.sampler);
            let mut applied = false;
            if to != from && instruction.admits_replacement(&to) {
                let mut candidate = instruction.clone();
                candidate.replace(to.clone()).expect("admitted replacement");
                if within_envelope(&candidate) {
                    *instruction = candidate;
                    applied = true;
                }
            }
            out.push(ParamMutation { from, to, applied });
        }
        out
    }
}

pub fn next_turn(state: &mut DialogueState) -> Result<TurnPlan, ScriptError> {
    let cap = state.config.max_turns_cap;
    if state.turn_index >= cap {
        return Err(ScriptError::CapReached(cap));
    }
    let turn = state.turn_index + 1;

    // Topic layer.
    let transition = if state.topic_history.is_empty() {
        Transition::New
    } else {
        let p = state.config.transition_probs;
        let new_ok = !state.unused_topics().is_empty();
        let back_ok = !state.backtrack_targets().is_empty();
        let weights = [
            p.cont,
            if new_ok { p.new } else { 0.0 },
            if back_ok { p.backtrack } else { 0.0 },
        ];
        match state.rng.weighted(&weights) {
            Some(1) => Transition::New,
            Some(2) => Transition::Backtrack,
            _ => Transition::Continue,
        }
    };
    let topic_id = match transition {
        Transition::Continue => state.current_topic().expect("history non-empty").to_string(),
        Transition::New => {
            let unused: Vec<String> = state.unused_topics().into_iter().map(String::from).collect();
            unused[state.rng.index(unused.len())].clone()
        }
        Transition::Backtrack => {
            let targets: Vec<String> = state.backtrack_targets().into_iter().map(String::from).collect();
            targets[state.rng.index(targets.len())].clone()
        }
    };
    let topic = state.topic(&topic_id).clone();
    let prev_instruction = state.instruction_by_topic.get(&topic_id).cloned();
    let mut instruction = prev_instruction.clone().unwrap_or_default();

    // Instruction layer.
    let cfg = state.config.clone();
    let size = instruction.len() as u32;
    let add_ok = size < cfg.max_constraints_per_instruction && !instruction.free_groups().is_empty();
    let modify_ok = size >= 1;
    let remove_ok = size > cfg.min_constraints_floor;
    let chosen = if instruction.is_empty() {
        Op::Add
    } else {
        let e = cfg.evolution_probs;
        let weights = [
            if add_ok { e.add } else { 0.0 },
            if modify_ok { e.modify } else { 0.0 },
            if remove_ok { e.remove } else { 0.0 },
        ];
        match state.rng.weighted(&weights) {
            Some(0) => Op::Add,
            Some(2) => Op::Remove,
            _ => Op::Modify,
        }
    };
    let mut order = vec![chosen];
    for (op, ok) in [(Op::Add, add_ok), (Op::Modify, modify_ok), (Op::Remove, remove_ok)] {
        if ok && op != chosen {
            order.push(op);
        }
    }

    let mut step = Step { rng: &mut state.rng, config: &cfg, topic: &topic };
    let mut evolution = None;
    for op in order {
        if let Some(e) = step.apply(op, &mut instruction) {
            evolution = Some(e);
            break;
        }
    }
    let evolution = evolution.ok_or(ScriptError::SamplingExhausted(turn))?;

    // Constraint layer.
    let mutations = step.drift(&mut instruction, evolution.group());

    state.turn_index = turn;
    state.topic_history.push(topic_id.clone());
    state.instruction_by_topic.insert(topic_id.clone(), instruction.clone());

    Ok(TurnPlan {
        turn,
        topic: topic_id,
        topic_description: topic.description.clone(),
        transition,
        evolution,
        instruction,
        prev_instruction,
        mutations,
    })
}

pub fn generate_script(
    corpus: &[TopicSpec],
    config: &EvolutionConfig,
    seed: u64,
    n_turns: u32,
) -> Result<Vec<TurnPlan>, ScriptError> {
    if n_turns > config.max_turns_cap {
        return Err(ScriptError::CapReached(config.max_turns_cap));
    }
    let mut state = init_dialogue(corpus, config, seed)?;
    (0..n_turns).map(|_| next_turn(&mut state)).collect()
}
