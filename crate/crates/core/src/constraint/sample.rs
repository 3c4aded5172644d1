//! Seeded drawing of constraints and of parameter changes.
//!
//! Draw order within one call: variant first, then each parameter in the
//! order it appears in the variant definition.

use serde::{Deserialize, Serialize};

use super::{Anchor, CaseRule, ConstraintError, ConstraintSpec, Group, LengthUnit, Presence, Relation};
use crate::rng::DrawStream;
use crate::text::FormatKind;

pub const PUNCTUATION_ALPHABET: [char; 9] = ['!', '?', ';', ':', ',', '.', '—', '"', '\''];

const DEFAULT_EMOJIS: [char; 16] = [
    '🌊', '🚀', '✨', '🔥', '🌟', '🎉', '💡', '📌', '✅', '🍀', '🌈', '🎯', '📚', '🧭', '🌻', '⭐',
];

/// Inclusive ranges and alphabets the sampler draws from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub word_bounds: (u32, u32),
    pub sentence_bounds: (u32, u32),
    pub paragraph_bounds: (u32, u32),
    pub character_bounds: (u32, u32),
    pub bullet_counts: (u32, u32),
    pub keyword_counts: (u32, u32),
    /// Whole percentages.
    pub upper_ratios: Vec<u8>,
    pub letters: Vec<char>,
    pub emojis: Vec<char>,
    pub punctuation: Vec<char>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            word_bounds: (20, 300),
            sentence_bounds: (2, 15),
            paragraph_bounds: (2, 6),
            character_bounds: (100, 1500),
            bullet_counts: (2, 6),
            keyword_counts: (2, 5),
            upper_ratios: vec![10, 20, 30],
            letters: ('A'..='Z').chain('a'..='z').collect(),
            emojis: DEFAULT_EMOJIS.to_vec(),
            punctuation: PUNCTUATION_ALPHABET.to_vec(),
        }
    }
}

impl SamplerConfig {
    pub fn length_bounds(&self, unit: LengthUnit) -> (u32, u32) {
        match unit {
            LengthUnit::Word => self.word_bounds,
            LengthUnit::Sentence => self.sentence_bounds,
            LengthUnit::Paragraph => self.paragraph_bounds,
            LengthUnit::Character => self.character_bounds,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ranges = [
            ("word_bounds", self.word_bounds),
            ("sentence_bounds", self.sentence_bounds),
            ("paragraph_bounds", self.paragraph_bounds),
            ("character_bounds", self.character_bounds),
            ("bullet_counts", self.bullet_counts),
            ("keyword_counts", self.keyword_counts),
        ];
        for (name, (lo, hi)) in ranges {
            if lo == 0 || lo > hi {
                return Err(format!("{name} must satisfy 1 <= lo <= hi, got ({lo}, {hi})"));
            }
        }
        if self.upper_ratios.is_empty() || self.upper_ratios.iter().any(|p| !(1..=100).contains(p)) {
            return Err("upper_ratios must be non-empty whole percentages in 1..=100".into());
        }
        if self.letters.is_empty() || !self.letters.iter().all(|c| crate::text::is_cased(*c)) {
            return Err("letters must be non-empty cased letters".into());
        }
        if self.emojis.is_empty() || !self.emojis.iter().all(|c| crate::text::is_emoji(*c)) {
            return Err("emojis must be non-empty emoji scalars".into());
        }
        if self.punctuation.is_empty()
            || self.punctuation.iter().any(|c| c.is_whitespace() || c.is_alphanumeric())
        {
            return Err("punctuation must be non-empty punctuation marks".into());
        }
        Ok(())
    }
}

fn pick_keyword(
    group: Group,
    pool: &[String],
    rng: &mut DrawStream,
) -> Result<String, ConstraintError> {
    if pool.is_empty() {
        return Err(ConstraintError::EmptyKeywordPool(group));
    }
    Ok(rng.pick(pool).clone())
}

fn sample_anchor(
    group: Group,
    pool: &[String],
    rng: &mut DrawStream,
    config: &SamplerConfig,
) -> Result<Anchor, ConstraintError> {
    Ok(match rng.below(4) {
        0 => Anchor::Letter(*rng.pick(&config.letters)),
        1 => Anchor::Emoji(*rng.pick(&config.emojis)),
        2 => Anchor::Keyword(pick_keyword(group, pool, rng)?),
        _ => Anchor::Quotation,
    })
}

/// Draws one constraint of `group`. Keyword-bearing variants draw from
/// `keyword_pool`.
pub fn sample_constraint(
    group: Group,
    keyword_pool: &[String],
    rng: &mut DrawStream,
    config: &SamplerConfig,
) -> Result<ConstraintSpec, ConstraintError> {
    let spec = match group {
        Group::StartWith => ConstraintSpec::StartWith(sample_anchor(group, keyword_pool, rng, config)?),
        Group::EndWith => ConstraintSpec::EndWith(sample_anchor(group, keyword_pool, rng, config)?),
        Group::Format => ConstraintSpec::Format(*rng.pick(&FormatKind::ALL)),
        Group::Case => ConstraintSpec::Case(match rng.below(3) {
            0 => CaseRule::AllUpper,
            1 => CaseRule::AllLower,
            _ => CaseRule::MinUpperRatio { percent: *rng.pick(&config.upper_ratios) },
        }),
        Group::Punctuation => {
            let presence = if rng.below(2) == 0 { Presence::MustInclude } else { Presence::MustNotInclude };
            ConstraintSpec::Punctuation { presence, mark: *rng.pick(&config.punctuation) }
        }
        Group::CountableItems => {
            let (lo, hi) = config.bullet_counts;
            ConstraintSpec::BulletPoints { count: rng.between(lo, hi) }
        }
        Group::Length => {
            let unit = *rng.pick(&LengthUnit::ALL);
            let relation = if rng.below(2) == 0 { Relation::MoreThan } else { Relation::LessThan };
            let (lo, hi) = config.length_bounds(unit);
            ConstraintSpec::Length { unit, relation, bound: rng.between(lo, hi) }
        }
        Group::KeywordExistence => {
            let keyword = pick_keyword(group, keyword_pool, rng)?;
            let (lo, hi) = config.keyword_counts;
            ConstraintSpec::KeywordCount { keyword, count: rng.between(lo, hi) }
        }
        Group::KeywordForbidden => ConstraintSpec::ForbiddenKeyword {
            keyword: pick_keyword(group, keyword_pool, rng)?,
        },
    };
    Ok(spec)
}

/// Uniform choice among `items` other than `current`; `None` if there is
/// no alternative.
fn pick_other<T: Clone + PartialEq>(items: &[T], current: &T, rng: &mut DrawStream) -> Option<T> {
    let others: Vec<&T> = items.iter().filter(|x| *x != current).collect();
    if others.is_empty() {
        None
    } else {
        Some(others[rng.index(others.len())].clone())
    }
}

fn mutate_anchor(anchor: &Anchor, pool: &[String], rng: &mut DrawStream, config: &SamplerConfig) -> Anchor {
    match anchor {
        Anchor::Letter(c) => pick_other(&config.letters, c, rng).map(Anchor::Letter),
        Anchor::Emoji(e) => pick_other(&config.emojis, e, rng).map(Anchor::Emoji),
        Anchor::Keyword(k) => pick_other(pool, k, rng).map(Anchor::Keyword),
        Anchor::Quotation => None,
    }
    .unwrap_or_else(|| anchor.clone())
}

/// Changes one parameter of `constraint`, keeping its group and variant.
///
/// Keyword replacements come from `keyword_pool`. Variants without a free
/// parameter (and parameters with no alternative value) come back
/// unchanged; callers detect this by comparing with the input.
pub fn mutate_params(
    constraint: &ConstraintSpec,
    keyword_pool: &[String],
    rng: &mut DrawStream,
    config: &SamplerConfig,
) -> ConstraintSpec {
    let out = match constraint {
        ConstraintSpec::StartWith(a) => Some(ConstraintSpec::StartWith(mutate_anchor(a, keyword_pool, rng, config))),
        ConstraintSpec::EndWith(a) => Some(ConstraintSpec::EndWith(mutate_anchor(a, keyword_pool, rng, config))),
        ConstraintSpec::Format(k) => pick_other(&FormatKind::ALL, k, rng).map(ConstraintSpec::Format),
        ConstraintSpec::Case(CaseRule::MinUpperRatio { percent }) => pick_other(&config.upper_ratios, percent, rng)
            .map(|percent| ConstraintSpec::Case(CaseRule::MinUpperRatio { percent })),
        ConstraintSpec::Case(_) => None,
        ConstraintSpec::Punctuation { presence, mark } => pick_other(&config.punctuation, mark, rng)
            .map(|mark| ConstraintSpec::Punctuation { presence: *presence, mark }),
        ConstraintSpec::BulletPoints { count } => {
            let (lo, hi) = config.bullet_counts;
            rng.between_except(lo, hi, *count).map(|count| ConstraintSpec::BulletPoints { count })
        }
        ConstraintSpec::Length { unit, relation, bound } => {
            let (lo, hi) = config.length_bounds(*unit);
            rng.between_except(lo, hi, *bound)
                .map(|bound| ConstraintSpec::Length { unit: *unit, relation: *relation, bound })
        }
        ConstraintSpec::KeywordCount { keyword, count } => {
            let (lo, hi) = config.keyword_counts;
            rng.between_except(lo, hi, *count)
                .map(|count| ConstraintSpec::KeywordCount { keyword: keyword.clone(), count })
        }
        ConstraintSpec::ForbiddenKeyword { keyword } => pick_other(keyword_pool, keyword, rng)
            .map(|keyword| ConstraintSpec::ForbiddenKeyword { keyword }),
    };
    out.unwrap_or_else(|| constraint.clone())
}
