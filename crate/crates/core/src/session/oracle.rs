//! Scripted stand-ins for a model with known pass/fail behavior.
//!
//! Oracles read the current plan through [`TurnContext::plan`] and answer
//! with a constructed response. They keep no state between calls; per-turn
//! randomness comes from hashing the agent seed, session seed and turn.

use serde::{Deserialize, Serialize};

use super::compose::{compose_failing, compose_passing};
use super::{AdapterError, ModelAdapter, TurnContext};
use crate::rng::DrawStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleAgent {
    AlwaysPass,
    AlwaysFail,
    /// Cycles through the pattern by turn; `true` means pass.
    Pattern { pattern: Vec<bool> },
    /// Passes each turn with probability `p`.
    Bernoulli { p: f64, seed: u64 },
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl OracleAgent {
    /// Parses `always-pass`, `always-fail`, `bernoulli:P[:SEED]` and
    /// `pattern:SF...` (S pass, F fail).
    pub fn parse(spec: &str) -> Result<OracleAgent, String> {
        let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
        match (name, arg) {
            ("always-pass", "") => Ok(OracleAgent::AlwaysPass),
            ("always-fail", "") => Ok(OracleAgent::AlwaysFail),
            ("bernoulli", arg) => {
                let (p, seed) = arg.split_once(':').unwrap_or((arg, "0"));
                let p: f64 = p.parse().map_err(|_| format!("bad probability in {spec:?}"))?;
                let seed: u64 = seed.parse().map_err(|_| format!("bad seed in {spec:?}"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(format!("probability must lie in [0, 1] in {spec:?}"));
                }
                Ok(OracleAgent::Bernoulli { p, seed })
            }
            ("pattern", arg) if !arg.is_empty() => arg
                .chars()
                .map(|c| match c.to_ascii_uppercase() {
                    'S' => Ok(true),
                    'F' => Ok(false),
                    _ => Err(format!("pattern letters must be S or F in {spec:?}")),
                })
                .collect::<Result<_, _>>()
                .map(|pattern| OracleAgent::Pattern { pattern }),
            _ => Err(format!("unknown oracle agent {spec:?}")),
        }
    }

    pub fn passes(&self, session_seed: u64, turn: u32) -> bool {
        match self {
            OracleAgent::AlwaysPass => true,
            OracleAgent::AlwaysFail => false,
            OracleAgent::Pattern { pattern } => pattern[(turn as usize - 1) % pattern.len()],
            OracleAgent::Bernoulli { p, seed } => {
                let key = mix(mix(mix(*seed) ^ session_seed) ^ u64::from(turn));
                DrawStream::from_seed(key).chance(*p)
            }
        }
    }
}

impl ModelAdapter for OracleAgent {
    fn id(&self) -> String {
        match self {
            OracleAgent::AlwaysPass => "always-pass".into(),
            OracleAgent::AlwaysFail => "always-fail".into(),
            OracleAgent::Pattern { pattern } => {
                let s: String = pattern.iter().map(|ok| if *ok { 'S' } else { 'F' }).collect();
                format!("pattern:{s}")
            }
            OracleAgent::Bernoulli { p, seed } => format!("bernoulli:{p}:{seed}"),
        }
    }

    fn respond(&self, ctx: &TurnContext<'_>) -> Result<String, AdapterError> {
        let instruction = &ctx.plan.instruction;
        let composed = if self.passes(ctx.session_seed, ctx.plan.turn) {
            compose_passing(instruction)
        } else {
            compose_failing(instruction)
        };
        composed.map_err(AdapterError::Construction)
    }
}
