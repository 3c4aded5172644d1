//! Generation policy on top of the conflict table.
//!
//! The conflict table only rejects pairs that are provably unsatisfiable.
//! Generated instructions are held to a tighter envelope so that each one
//! has a plainly constructible compliant response: keywords stay apart,
//! structured formats keep their boundaries free, and upper length limits
//! leave generous room for everything else the instruction demands.

use std::collections::BTreeSet;

use super::{Anchor, CaseRule, ConstraintSpec, Group, Instruction, LengthUnit, Presence, Relation};
use crate::text::{self, FormatKind};

const MARKUP_UNSAFE: &[char] = &['<', '>', '&', '"', ',', '\\', '*', '_', '#', '`'];

/// Whether a generated instruction stays inside the generation envelope.
pub fn within_envelope(instruction: &Instruction) -> bool {
    keywords_apart(instruction) && format_compatible(instruction) && length_room(instruction)
}

fn keywords_apart(instruction: &Instruction) -> bool {
    let mut seen = BTreeSet::new();
    for spec in instruction {
        let Some(k) = spec.keyword() else { continue };
        for token in text::words(k) {
            if !seen.insert(token.to_lowercase()) {
                return false;
            }
        }
    }
    true
}

fn format_compatible(instruction: &Instruction) -> bool {
    let Some(ConstraintSpec::Format(kind)) = instruction.get(Group::Format) else {
        return true;
    };
    let keywords_plain = instruction
        .iter()
        .filter_map(ConstraintSpec::keyword)
        .all(|k| !k.contains(MARKUP_UNSAFE));
    if !keywords_plain {
        return false;
    }
    let anchors_letters_only = |i: &Instruction| {
        [Group::StartWith, Group::EndWith].into_iter().all(|g| match i.get(g) {
            Some(ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a)) => matches!(a, Anchor::Letter(_)),
            _ => true,
        })
    };
    match kind {
        FormatKind::Json => {
            let excluded_mark = matches!(
                instruction.get(Group::Punctuation),
                Some(ConstraintSpec::Punctuation { presence: Presence::MustNotInclude, mark: '"' | ',' })
            );
            anchors_letters_only(instruction) && !excluded_mark
        }
        FormatKind::Xml => anchors_letters_only(instruction),
        _ => true,
    }
}

fn length_room(instruction: &Instruction) -> bool {
    match instruction.get(Group::Length) {
        Some(ConstraintSpec::Length { unit, relation: Relation::LessThan, bound }) => {
            let bound = *bound as usize;
            match unit {
                LengthUnit::Sentence | LengthUnit::Paragraph => bound >= 2,
                LengthUnit::Word => bound > word_estimate(instruction),
                LengthUnit::Character => bound > char_estimate(instruction),
            }
        }
        _ => true,
    }
}

fn token_count(k: &str) -> usize {
    text::words(k).count()
}

fn char_count(k: &str) -> usize {
    k.chars().count()
}

/// Generous upper estimate of the words a minimal compliant response needs.
pub(crate) fn word_estimate(instruction: &Instruction) -> usize {
    let mut total = 6;
    for spec in instruction {
        total += match spec {
            ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a) => match a {
                Anchor::Keyword(k) => token_count(k) + 1,
                _ => 1,
            },
            ConstraintSpec::KeywordCount { keyword, count } => token_count(keyword) * *count as usize,
            ConstraintSpec::BulletPoints { count } => *count as usize,
            ConstraintSpec::Punctuation { presence: Presence::MustInclude, .. } => 1,
            ConstraintSpec::Format(kind) => match kind {
                FormatKind::Xml | FormatKind::Csv => 3,
                _ => 1,
            },
            ConstraintSpec::Case(CaseRule::MinUpperRatio { .. }) => 1,
            _ => 0,
        };
    }
    total
}

/// Generous upper estimate of the characters a minimal compliant response
/// needs.
pub(crate) fn char_estimate(instruction: &Instruction) -> usize {
    let mut total = 40;
    for spec in instruction {
        total += match spec {
            ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a) => match a {
                Anchor::Keyword(k) => char_count(k) + 3,
                _ => 4,
            },
            ConstraintSpec::KeywordCount { keyword, count } => (char_count(keyword) + 2) * *count as usize,
            ConstraintSpec::BulletPoints { count } => 10 * *count as usize,
            ConstraintSpec::Punctuation { presence: Presence::MustInclude, .. } => 12,
            ConstraintSpec::Format(kind) => match kind {
                FormatKind::Xml => 30,
                FormatKind::Csv => 20,
                _ => 14,
            },
            _ => 0,
        };
    }
    if let Some(ConstraintSpec::Case(CaseRule::MinUpperRatio { percent })) = instruction.get(Group::Case) {
        let p = usize::from(*percent).min(99);
        total += total * p / (100 - p) + 10;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instr(specs: Vec<ConstraintSpec>) -> Instruction {
        Instruction::from_constraints(specs).unwrap()
    }

    #[test]
    fn keywords_must_differ() {
        let i = instr(vec![
            ConstraintSpec::StartWith(Anchor::Keyword("Ocean".into())),
            ConstraintSpec::KeywordCount { keyword: "ocean".into(), count: 2 },
        ]);
        assert!(!within_envelope(&i));
    }

    #[test]
    fn json_keeps_boundaries_free() {
        let i = instr(vec![
            ConstraintSpec::Format(FormatKind::Json),
            ConstraintSpec::StartWith(Anchor::Quotation),
        ]);
        assert!(!within_envelope(&i));
        let i = instr(vec![
            ConstraintSpec::Format(FormatKind::Json),
            ConstraintSpec::StartWith(Anchor::Letter('a')),
        ]);
        assert!(within_envelope(&i));
    }

    #[test]
    fn tight_length_limits_are_outside() {
        let i = instr(vec![
            ConstraintSpec::KeywordCount { keyword: "photosynthesis".into(), count: 5 },
            ConstraintSpec::Length { unit: LengthUnit::Character, relation: Relation::LessThan, bound: 100 },
        ]);
        assert!(!within_envelope(&i));
        let i = instr(vec![ConstraintSpec::Length {
            unit: LengthUnit::Sentence,
            relation: Relation::LessThan,
            bound: 1,
        }]);
        assert!(!within_envelope(&i));
    }
}
