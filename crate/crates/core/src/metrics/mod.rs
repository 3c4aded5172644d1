//! Process-level scores over a set of dialogues.
//!
//! Per-turn rates are pooled across all turns for [`csr`] and [`isr`];
//! the dialogue-level scores average one value per dialogue. Every sum
//! runs left to right over dialogues in input order and turns in turn
//! order, so results are reproducible bit for bit.

mod export;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{report_csv, survival_csv, survival_svg, CSV_HEADER};

use crate::constraint::Group;
use crate::session::{SessionTranscript, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no dialogues to score")]
    NoDialogues,
    #[error("no turns to score")]
    NoTurns,
    #[error("dialogue {dialogue} turn {turn} has no constraints")]
    EmptyInstruction { dialogue: usize, turn: usize },
    #[error("dialogue {0} has no turns")]
    EmptyDialogue(usize),
    #[error("survival cap must be at least 1")]
    ZeroCap,
}

/// One scored turn.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnScore {
    pub constraints: usize,
    pub satisfied: usize,
    pub success: bool,
    /// Each constraint's group and whether it was satisfied.
    pub groups: Vec<(Group, bool)>,
}

impl TurnScore {
    /// Fraction of this turn's constraints that were satisfied.
    pub fn rate(&self) -> f64 {
        self.satisfied as f64 / self.constraints as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogueScore {
    pub turns: Vec<TurnScore>,
}

impl DialogueScore {
    pub fn from_flags(flags: &[bool]) -> DialogueScore {
        let turns = flags
            .iter()
            .map(|ok| TurnScore {
                constraints: 1,
                satisfied: usize::from(*ok),
                success: *ok,
                groups: vec![(Group::Length, *ok)],
            })
            .collect();
        DialogueScore { turns }
    }

    pub fn success_count(&self) -> usize {
        self.turns.iter().filter(|t| t.success).count()
    }
}

impl From<&SessionTranscript> for DialogueScore {
    fn from(t: &SessionTranscript) -> Self {
        let turns = t
            .records
            .iter()
            .map(|r| TurnScore {
                constraints: r.verdicts.verdicts.len(),
                satisfied: r.verdicts.satisfied_count(),
                success: r.turn_success,
                groups: r.verdicts.verdicts.iter().map(|v| (v.constraint.group(), v.satisfied)).collect(),
            })
            .collect();
        DialogueScore { turns }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub csr: f64,
    pub isr: f64,
    pub act_len: f64,
    pub act_acc: f64,
    pub act_succ: f64,
    pub lss: f64,
    pub rob: f64,
    pub rec: f64,
    pub rec_defined_dialogues: usize,
    pub per_group_isr: BTreeMap<Group, f64>,
    pub survival: Vec<f64>,
    pub n_dialogues: usize,
    pub n_turns_total: usize,
}

fn nonempty(dialogues: &[DialogueScore]) -> Result<f64, MetricsError> {
    if dialogues.is_empty() {
        return Err(MetricsError::NoDialogues);
    }
    Ok(dialogues.len() as f64)
}

fn check_instructions(dialogues: &[DialogueScore]) -> Result<(), MetricsError> {
    for (d, dialogue) in dialogues.iter().enumerate() {
        if let Some(t) = dialogue.turns.iter().position(|t| t.constraints == 0) {
            return Err(MetricsError::EmptyInstruction { dialogue: d, turn: t + 1 });
        }
    }
    Ok(())
}

fn all_turns(dialogues: &[DialogueScore]) -> Result<Vec<&TurnScore>, MetricsError> {
    check_instructions(dialogues)?;
    let turns: Vec<&TurnScore> = dialogues.iter().flat_map(|d| &d.turns).collect();
    if turns.is_empty() {
        return Err(MetricsError::NoTurns);
    }
    Ok(turns)
}

/// Mean per-turn constraint satisfaction rate over all turns.
pub fn csr(dialogues: &[DialogueScore]) -> Result<f64, MetricsError> {
    let turns = all_turns(dialogues)?;
    let sum = turns.iter().fold(0.0, |acc, t| acc + t.rate());
    Ok(sum / turns.len() as f64)
}

/// Fraction of all turns that satisfied every constraint.
pub fn isr(dialogues: &[DialogueScore]) -> Result<f64, MetricsError> {
    let turns = all_turns(dialogues)?;
    let sum = turns.iter().fold(0.0, |acc, t| acc + if t.success { 1.0 } else { 0.0 });
    Ok(sum / turns.len() as f64)
}

/// `(act_len, act_acc, act_succ)`: turns, summed satisfaction rates and
/// successful turns per dialogue, each averaged over dialogues.
pub fn act(dialogues: &[DialogueScore]) -> Result<(f64, f64, f64), MetricsError> {
    let d = nonempty(dialogues)?;
    check_instructions(dialogues)?;
    let (mut len, mut acc, mut succ) = (0.0, 0.0, 0.0);
    for dialogue in dialogues {
        len += dialogue.turns.len() as f64;
        acc += dialogue.turns.iter().fold(0.0, |a, t| a + t.rate());
        succ += dialogue.turns.iter().fold(0.0, |a, t| a + if t.success { 1.0 } else { 0.0 });
    }
    Ok((len / d, acc / d, succ / d))
}

fn longest_run(dialogue: &DialogueScore) -> usize {
    let (mut best, mut run) = (0, 0);
    for t in &dialogue.turns {
        run = if t.success { run + 1 } else { 0 };
        best = best.max(run);
    }
    best
}

/// Mean over dialogues of the longest run of successful turns.
pub fn lss(dialogues: &[DialogueScore]) -> Result<f64, MetricsError> {
    let d = nonempty(dialogues)?;
    Ok(dialogues.iter().fold(0.0, |acc, x| acc + longest_run(x) as f64) / d)
}

/// Mean over dialogues of each dialogue's own success rate.
pub fn rob(dialogues: &[DialogueScore]) -> Result<f64, MetricsError> {
    let d = nonempty(dialogues)?;
    let mut sum = 0.0;
    for (i, dialogue) in dialogues.iter().enumerate() {
        if dialogue.turns.is_empty() {
            return Err(MetricsError::EmptyDialogue(i));
        }
        sum += dialogue.success_count() as f64 / dialogue.turns.len() as f64;
    }
    Ok(sum / d)
}

/// `(numerator, denominator)` of a dialogue's recovery ratio: turns that
/// follow a failed turn, and those among them that succeed.
pub fn recovery_counts(dialogue: &DialogueScore) -> (usize, usize) {
    dialogue.turns.windows(2).fold((0, 0), |(num, den), w| {
        if w[0].success {
            (num, den)
        } else {
            (num + usize::from(w[1].success), den + 1)
        }
    })
}

/// Mean recovery ratio over the dialogues where it is defined, and how
/// many such dialogues there are. `(0.0, 0)` when none are.
pub fn rec(dialogues: &[DialogueScore]) -> Result<(f64, usize), MetricsError> {
    nonempty(dialogues)?;
    let mut sum = 0.0;
    let mut defined = 0;
    for dialogue in dialogues {
        let (num, den) = recovery_counts(dialogue);
        if den > 0 {
            sum += num as f64 / den as f64;
            defined += 1;
        }
    }
    Ok(if defined == 0 { (0.0, 0) } else { (sum / defined as f64, defined) })
}

/// Constraint-level satisfaction rate per group, pooled over all turns.
/// Groups that never occur are absent.
pub fn per_group_isr(dialogues: &[DialogueScore]) -> Result<BTreeMap<Group, f64>, MetricsError> {
    nonempty(dialogues)?;
    let mut counts: BTreeMap<Group, (usize, usize)> = BTreeMap::new();
    for turn in dialogues.iter().flat_map(|d| &d.turns) {
        for (group, ok) in &turn.groups {
            let entry = counts.entry(*group).or_default();
            entry.0 += usize::from(*ok);
            entry.1 += 1;
        }
    }
    Ok(counts.into_iter().map(|(g, (sat, total))| (g, sat as f64 / total as f64)).collect())
}

/// Entry `k - 1` is the fraction of dialogues lasting at least `k` turns.
pub fn survival_curve(dialogues: &[DialogueScore], cap: u32) -> Result<Vec<f64>, MetricsError> {
    let d = nonempty(dialogues)?;
    if cap == 0 {
        return Err(MetricsError::ZeroCap);
    }
    Ok((1..=cap as usize)
        .map(|k| dialogues.iter().filter(|x| x.turns.len() >= k).count() as f64 / d)
        .collect())
}

pub fn report(dialogues: &[DialogueScore], cap: u32) -> Result<MetricsReport, MetricsError> {
    let (act_len, act_acc, act_succ) = act(dialogues)?;
    let (rec, rec_defined_dialogues) = rec(dialogues)?;
    Ok(MetricsReport {
        csr: csr(dialogues)?,
        isr: isr(dialogues)?,
        act_len,
        act_acc,
        act_succ,
        lss: lss(dialogues)?,
        rob: rob(dialogues)?,
        rec,
        rec_defined_dialogues,
        per_group_isr: per_group_isr(dialogues)?,
        survival: survival_curve(dialogues, cap)?,
        n_dialogues: dialogues.len(),
        n_turns_total: dialogues.iter().map(|d| d.turns.len()).sum(),
    })
}

/// Scores transcripts, leaving out sessions that ended in a transport
/// failure.
pub fn report_transcripts(transcripts: &[SessionTranscript], cap: u32) -> Result<MetricsReport, MetricsError> {
    let scored: Vec<DialogueScore> = transcripts
        .iter()
        .filter(|t| !matches!(t.termination(), Termination::TransportFailure { .. }))
        .map(DialogueScore::from)
        .collect();
    report(&scored, cap)
}
