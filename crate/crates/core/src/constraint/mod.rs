//! Atomic response constraints, grouped into nine mutually exclusive
//! families, and the instructions built from them.
//!
//! A [`ConstraintSpec`] is one rule-checkable requirement. An
//! [`Instruction`] holds at most one spec per [`Group`] and never holds two
//! specs that [`conflicts_with`] flags as jointly unsatisfiable.

mod conflict;
mod envelope;
mod render;
mod sample;
mod verify;
mod wire;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conflict::conflicts_with;
pub use envelope::within_envelope;
pub use render::{mark_name, render_fragment};
pub use sample::{mutate_params, sample_constraint, SamplerConfig, PUNCTUATION_ALPHABET};
pub use verify::{verify, verify_instruction, InstructionVerdict, Verdict};
pub(crate) use verify::measure;

use crate::text::{self, FormatKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstraintError {
    #[error("invalid constraint: {0}")]
    InvalidSpec(String),
    #[error("group {0} is already occupied")]
    GroupOccupied(Group),
    #[error("{0} conflicts with {1}")]
    Conflict(String, String),
    #[error("keyword pool is empty for {0}")]
    EmptyKeywordPool(Group),
}

/// The nine constraint families. Declaration order is the canonical order
/// used for verdict lists and serialized instructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "SW")]
    StartWith,
    #[serde(rename = "EW")]
    EndWith,
    #[serde(rename = "FMT")]
    Format,
    #[serde(rename = "CS")]
    Case,
    #[serde(rename = "PTT")]
    Punctuation,
    #[serde(rename = "CTI")]
    CountableItems,
    #[serde(rename = "LEN")]
    Length,
    #[serde(rename = "EXT")]
    KeywordExistence,
    #[serde(rename = "FBD")]
    KeywordForbidden,
}

impl Group {
    pub const ALL: [Group; 9] = [
        Group::StartWith,
        Group::EndWith,
        Group::Format,
        Group::Case,
        Group::Punctuation,
        Group::CountableItems,
        Group::Length,
        Group::KeywordExistence,
        Group::KeywordForbidden,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Group::StartWith => "SW",
            Group::EndWith => "EW",
            Group::Format => "FMT",
            Group::Case => "CS",
            Group::Punctuation => "PTT",
            Group::CountableItems => "CTI",
            Group::Length => "LEN",
            Group::KeywordExistence => "EXT",
            Group::KeywordForbidden => "FBD",
        }
    }

    pub fn from_code(code: &str) -> Option<Group> {
        Group::ALL.into_iter().find(|g| g.code() == code)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// What a start or end constraint pins to the response boundary.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Anchor {
    /// First (last) cased letter, case-sensitive.
    Letter(char),
    /// First (last) non-whitespace scalar is this emoji.
    Emoji(char),
    /// Trimmed response starts (ends) with this exact text.
    Keyword(String),
    /// First (last) non-whitespace scalar is `"`.
    Quotation,
}

impl Anchor {
    pub fn variant(&self) -> &'static str {
        match self {
            Anchor::Letter(_) => "Letter",
            Anchor::Emoji(_) => "Emoji",
            Anchor::Keyword(_) => "Keyword",
            Anchor::Quotation => "Quotation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CaseRule {
    AllUpper,
    AllLower,
    /// At least `percent` of cased letters are uppercase.
    MinUpperRatio { percent: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Presence {
    MustInclude,
    MustNotInclude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LengthUnit {
    Word,
    Paragraph,
    Character,
    Sentence,
}

impl LengthUnit {
    pub const ALL: [LengthUnit; 4] = [
        LengthUnit::Word,
        LengthUnit::Paragraph,
        LengthUnit::Character,
        LengthUnit::Sentence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LengthUnit::Word => "Word",
            LengthUnit::Paragraph => "Paragraph",
            LengthUnit::Character => "Character",
            LengthUnit::Sentence => "Sentence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    MoreThan,
    LessThan,
}

impl Relation {
    pub fn holds(self, observed: usize, bound: u32) -> bool {
        let bound = bound as usize;
        match self {
            Relation::MoreThan => observed > bound,
            Relation::LessThan => observed < bound,
        }
    }
}

/// One atomic constraint. Serialized as
/// `{"group": ..., "variant": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintSpec {
    StartWith(Anchor),
    EndWith(Anchor),
    Format(FormatKind),
    Case(CaseRule),
    Punctuation { presence: Presence, mark: char },
    BulletPoints { count: u32 },
    Length { unit: LengthUnit, relation: Relation, bound: u32 },
    KeywordCount { keyword: String, count: u32 },
    ForbiddenKeyword { keyword: String },
}

impl ConstraintSpec {
    pub fn group(&self) -> Group {
        match self {
            ConstraintSpec::StartWith(_) => Group::StartWith,
            ConstraintSpec::EndWith(_) => Group::EndWith,
            ConstraintSpec::Format(_) => Group::Format,
            ConstraintSpec::Case(_) => Group::Case,
            ConstraintSpec::Punctuation { .. } => Group::Punctuation,
            ConstraintSpec::BulletPoints { .. } => Group::CountableItems,
            ConstraintSpec::Length { .. } => Group::Length,
            ConstraintSpec::KeywordCount { .. } => Group::KeywordExistence,
            ConstraintSpec::ForbiddenKeyword { .. } => Group::KeywordForbidden,
        }
    }

    pub fn variant(&self) -> &'static str {
        match self {
            ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a) => a.variant(),
            ConstraintSpec::Format(k) => k.name(),
            ConstraintSpec::Case(CaseRule::AllUpper) => "AllUpper",
            ConstraintSpec::Case(CaseRule::AllLower) => "AllLower",
            ConstraintSpec::Case(CaseRule::MinUpperRatio { .. }) => "MinUpperRatio",
            ConstraintSpec::Punctuation { presence: Presence::MustInclude, .. } => "MustInclude",
            ConstraintSpec::Punctuation { presence: Presence::MustNotInclude, .. } => {
                "MustNotInclude"
            }
            ConstraintSpec::BulletPoints { .. } => "BulletPoints",
            ConstraintSpec::Length { unit, .. } => unit.name(),
            ConstraintSpec::KeywordCount { .. } => "MustContainExact",
            ConstraintSpec::ForbiddenKeyword { .. } => "MustNotContain",
        }
    }

    /// The keyword this spec carries, if any.
    pub fn keyword(&self) -> Option<&str> {
        match self {
            ConstraintSpec::StartWith(Anchor::Keyword(k))
            | ConstraintSpec::EndWith(Anchor::Keyword(k))
            | ConstraintSpec::KeywordCount { keyword: k, .. }
            | ConstraintSpec::ForbiddenKeyword { keyword: k } => Some(k),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ConstraintError> {
        let bad = |msg: String| Err(ConstraintError::InvalidSpec(msg));
        match self {
            ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a) => match a {
                Anchor::Letter(c) if !text::is_cased(*c) => bad(format!("{c:?} is not a cased letter")),
                Anchor::Emoji(c) if !text::is_emoji(*c) => bad(format!("{c:?} is not an emoji")),
                Anchor::Keyword(k) => validate_keyword(k),
                _ => Ok(()),
            },
            ConstraintSpec::Format(_) => Ok(()),
            ConstraintSpec::Case(CaseRule::MinUpperRatio { percent }) if !(1..=100).contains(percent) => {
                bad(format!("upper ratio {percent}% outside 1..=100"))
            }
            ConstraintSpec::Case(_) => Ok(()),
            ConstraintSpec::Punctuation { mark, .. } => {
                if mark.is_whitespace() || mark.is_alphanumeric() {
                    bad(format!("{mark:?} is not a punctuation mark"))
                } else {
                    Ok(())
                }
            }
            ConstraintSpec::BulletPoints { count } if *count == 0 => bad("bullet count must be at least 1".into()),
            ConstraintSpec::BulletPoints { .. } => Ok(()),
            ConstraintSpec::Length { bound, .. } if *bound == 0 => bad("length bound must be at least 1".into()),
            ConstraintSpec::Length { .. } => Ok(()),
            ConstraintSpec::KeywordCount { keyword, count } => {
                validate_keyword(keyword)?;
                if *count == 0 {
                    return bad("keyword count must be at least 1".into());
                }
                Ok(())
            }
            ConstraintSpec::ForbiddenKeyword { keyword } => validate_keyword(keyword),
        }
    }
}

fn validate_keyword(k: &str) -> Result<(), ConstraintError> {
    if k.is_empty() || k.trim() != k {
        return Err(ConstraintError::InvalidSpec(format!(
            "keyword {k:?} is empty or has surrounding whitespace"
        )));
    }
    if text::words(k).next().is_none() {
        return Err(ConstraintError::InvalidSpec(format!("keyword {k:?} has no word characters")));
    }
    Ok(())
}

impl fmt::Display for ConstraintSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.group(), self.variant())?;
        match self {
            ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a) => match a {
                Anchor::Letter(c) | Anchor::Emoji(c) => write!(f, "({c})"),
                Anchor::Keyword(k) => write!(f, "({k:?})"),
                Anchor::Quotation => Ok(()),
            },
            ConstraintSpec::Format(_) => Ok(()),
            ConstraintSpec::Case(CaseRule::MinUpperRatio { percent }) => write!(f, "({percent}%)"),
            ConstraintSpec::Case(_) => Ok(()),
            ConstraintSpec::Punctuation { mark, .. } => write!(f, "({mark:?})"),
            ConstraintSpec::BulletPoints { count } => write!(f, "({count})"),
            ConstraintSpec::Length { relation, bound, .. } => {
                let dir = match relation {
                    Relation::MoreThan => "more-than",
                    Relation::LessThan => "less-than",
                };
                write!(f, "({dir}, {bound})")
            }
            ConstraintSpec::KeywordCount { keyword, count } => write!(f, "({keyword:?}, {count})"),
            ConstraintSpec::ForbiddenKeyword { keyword } => write!(f, "({keyword:?})"),
        }
    }
}

/// A set of constraints with at most one per group and no conflicting
/// pair. Iteration follows canonical group order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Instruction {
    by_group: BTreeMap<Group, ConstraintSpec>,
}

impl Instruction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_constraints<I>(specs: I) -> Result<Self, ConstraintError>
    where
        I: IntoIterator<Item = ConstraintSpec>,
    {
        let mut out = Instruction::new();
        for spec in specs {
            out.insert(spec)?;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.by_group.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_group.is_empty()
    }

    pub fn get(&self, group: Group) -> Option<&ConstraintSpec> {
        self.by_group.get(&group)
    }

    pub fn contains_group(&self, group: Group) -> bool {
        self.by_group.contains_key(&group)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ConstraintSpec> {
        self.by_group.values()
    }

    pub fn groups(&self) -> impl Iterator<Item = Group> + '_ {
        self.by_group.keys().copied()
    }

    pub fn free_groups(&self) -> Vec<Group> {
        Group::ALL.into_iter().filter(|g| !self.contains_group(*g)).collect()
    }

    fn first_conflict(&self, spec: &ConstraintSpec, ignore: Option<Group>) -> Option<&ConstraintSpec> {
        self.iter()
            .filter(|c| Some(c.group()) != ignore)
            .find(|c| conflicts_with(c, spec))
    }

    /// Whether `spec` could be added: its group is free, it is valid and it
    /// conflicts with nothing present.
    pub fn admits(&self, spec: &ConstraintSpec) -> bool {
        !self.contains_group(spec.group())
            && spec.validate().is_ok()
            && self.first_conflict(spec, None).is_none()
    }

    /// Whether `spec` could take the place of the current member of its group.
    pub fn admits_replacement(&self, spec: &ConstraintSpec) -> bool {
        spec.validate().is_ok() && self.first_conflict(spec, Some(spec.group())).is_none()
    }

    pub fn insert(&mut self, spec: ConstraintSpec) -> Result<(), ConstraintError> {
        spec.validate()?;
        if self.contains_group(spec.group()) {
            return Err(ConstraintError::GroupOccupied(spec.group()));
        }
        if let Some(other) = self.first_conflict(&spec, None) {
            return Err(ConstraintError::Conflict(spec.to_string(), other.to_string()));
        }
        self.by_group.insert(spec.group(), spec);
        Ok(())
    }

    /// Puts `spec` in its group, returning the previous member.
    pub fn replace(&mut self, spec: ConstraintSpec) -> Result<Option<ConstraintSpec>, ConstraintError> {
        spec.validate()?;
        if let Some(other) = self.first_conflict(&spec, Some(spec.group())) {
            return Err(ConstraintError::Conflict(spec.to_string(), other.to_string()));
        }
        Ok(self.by_group.insert(spec.group(), spec))
    }

    pub fn remove(&mut self, group: Group) -> Option<ConstraintSpec> {
        self.by_group.remove(&group)
    }
}

impl<'a> IntoIterator for &'a Instruction {
    type Item = &'a ConstraintSpec;
    type IntoIter = std::collections::btree_map::Values<'a, Group, ConstraintSpec>;

    fn into_iter(self) -> Self::IntoIter {
        self.by_group.values()
    }
}

impl Serialize for Instruction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.by_group.values())
    }
}

impl<'de> Deserialize<'de> for Instruction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let specs = Vec::<ConstraintSpec>::deserialize(d)?;
        Instruction::from_constraints(specs).map_err(serde::de::Error::custom)
    }
}
