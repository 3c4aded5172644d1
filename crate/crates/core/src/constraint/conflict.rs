//! Cross-group consistency: a small table of pairs that no response can
//! satisfy at once. Each rule is sound (a flagged pair is truly
//! unsatisfiable); the table makes no claim to completeness.

use super::{Anchor, CaseRule, ConstraintSpec, LengthUnit, Presence, Relation};
use crate::text::{self, FormatKind};

/// True when no response can satisfy both `a` and `b`. Two specs of the
/// same group are always reported as conflicting, since an instruction
/// never holds both.
pub fn conflicts_with(a: &ConstraintSpec, b: &ConstraintSpec) -> bool {
    a.group() == b.group() || one_way(a, b) || one_way(b, a)
}

fn one_way(x: &ConstraintSpec, y: &ConstraintSpec) -> bool {
    use ConstraintSpec as C;
    match (x, y) {
        (C::Case(rule @ (CaseRule::AllUpper | CaseRule::AllLower)), _) => {
            literal_text(y).is_some_and(|t| t.chars().any(|c| wrong_case(*rule, c)))
        }
        (C::KeywordCount { keyword, .. }, C::ForbiddenKeyword { keyword: forbidden }) => {
            contains_token_run(keyword, forbidden)
        }
        (C::Punctuation { presence: Presence::MustNotInclude, mark }, _) => required_mark(y, *mark),
        (C::Length { unit, relation: Relation::LessThan, bound }, _) => {
            minimum_size(y, *unit) >= *bound as usize
        }
        (C::Format(kind), C::StartWith(anchor)) => !format_may_start(*kind, anchor),
        (C::Format(kind), C::EndWith(anchor)) => !format_may_end(*kind, anchor),
        (C::Format(FormatKind::Json), C::BulletPoints { .. }) => true,
        _ => false,
    }
}

fn wrong_case(rule: CaseRule, c: char) -> bool {
    match rule {
        CaseRule::AllUpper => c.is_lowercase(),
        CaseRule::AllLower => c.is_uppercase(),
        CaseRule::MinUpperRatio { .. } => false,
    }
}

/// Text a spec forces to appear verbatim in every satisfying response.
fn literal_text(spec: &ConstraintSpec) -> Option<String> {
    match spec {
        ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a) => match a {
            Anchor::Letter(c) => Some(c.to_string()),
            Anchor::Keyword(k) => Some(k.clone()),
            Anchor::Emoji(_) | Anchor::Quotation => None,
        },
        ConstraintSpec::KeywordCount { keyword, .. } => Some(text::words(keyword).collect::<Vec<_>>().join(" ")),
        _ => None,
    }
}

/// Whether the token sequence of `inner` occurs contiguously in `outer`'s.
fn contains_token_run(outer: &str, inner: &str) -> bool {
    let o: Vec<&str> = text::words(outer).collect();
    let i: Vec<&str> = text::words(inner).collect();
    !i.is_empty() && o.len() >= i.len() && o.windows(i.len()).any(|w| w == i.as_slice())
}

fn required_mark(spec: &ConstraintSpec, mark: char) -> bool {
    match spec {
        ConstraintSpec::StartWith(Anchor::Quotation) | ConstraintSpec::EndWith(Anchor::Quotation) => mark == '"',
        ConstraintSpec::Punctuation { presence: Presence::MustInclude, mark: m } => *m == mark,
        ConstraintSpec::Format(FormatKind::Csv) => mark == ',',
        ConstraintSpec::Format(FormatKind::Xml | FormatKind::Html) => matches!(mark, '<' | '>'),
        _ => literal_text(spec).is_some_and(|t| t.contains(mark)),
    }
}

/// A lower bound on `unit` over every response satisfying `spec`.
fn minimum_size(spec: &ConstraintSpec, unit: LengthUnit) -> usize {
    use LengthUnit::*;
    // (characters, words, sentences, paragraphs)
    let (chars, words, sentences, paragraphs): (usize, usize, usize, usize) = match spec {
        ConstraintSpec::KeywordCount { keyword, count } => {
            let tokens: Vec<&str> = text::words(keyword).collect();
            // Occurrences may overlap by all but one token.
            let positions = tokens.len() + *count as usize - 1;
            let shortest = tokens.iter().map(|t| t.chars().count()).min().unwrap_or(0);
            (positions * shortest + positions - 1, positions, 1, 1)
        }
        ConstraintSpec::BulletPoints { count } => {
            let n = *count as usize;
            (3 * n - 1, 0, 0, 1)
        }
        ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a) => match a {
            Anchor::Keyword(k) => {
                let w = text::words(k).count();
                (k.chars().count(), w, usize::from(w > 0), 1)
            }
            Anchor::Letter(_) => (1, 1, 1, 1),
            Anchor::Emoji(e) => {
                let w = usize::from(!text::is_punctuation(*e));
                (1, w, w, 1)
            }
            Anchor::Quotation => (1, 0, 0, 1),
        },
        ConstraintSpec::Case(_) => (1, 1, 1, 1),
        ConstraintSpec::Format(kind) => match kind {
            FormatKind::Json => (1, 0, 0, 1),
            FormatKind::Xml | FormatKind::Html => (4, 0, 0, 1),
            FormatKind::Csv => (3, 0, 0, 1),
            FormatKind::Markdown => (2, 0, 0, 1),
        },
        ConstraintSpec::Punctuation { presence: Presence::MustInclude, .. } => (1, 0, 0, 1),
        ConstraintSpec::Length { unit: u, relation: Relation::MoreThan, bound } => {
            let n = *bound as usize + 1;
            match u {
                Character => (n, 0, 0, 1),
                Word => (2 * n - 1, n, 1, 1),
                Sentence => (2 * n - 1, n, n, 1),
                Paragraph => (3 * n - 2, 0, 0, n),
            }
        }
        _ => (0, 0, 0, 0),
    };
    match unit {
        Character => chars,
        Word => words,
        Sentence => sentences,
        Paragraph => paragraphs,
    }
}

fn format_may_start(kind: FormatKind, anchor: &Anchor) -> bool {
    let first = |allowed: &dyn Fn(char) -> bool| match anchor {
        Anchor::Letter(_) => true,
        Anchor::Emoji(_) => false,
        Anchor::Quotation => allowed('"'),
        Anchor::Keyword(k) => k.chars().next().is_some_and(|c| c == '`' || allowed(c)),
    };
    match kind {
        FormatKind::Xml => first(&|c| c == '<'),
        FormatKind::Json => first(&|c| matches!(c, '{' | '[' | '"' | '-' | '0'..='9' | 't' | 'f' | 'n')),
        _ => true,
    }
}

fn format_may_end(kind: FormatKind, anchor: &Anchor) -> bool {
    let last = |allowed: &dyn Fn(char) -> bool| match anchor {
        Anchor::Letter(_) => true,
        Anchor::Emoji(_) => false,
        Anchor::Quotation => allowed('"'),
        Anchor::Keyword(k) => k.chars().next_back().is_some_and(|c| c == '`' || allowed(c)),
    };
    match kind {
        FormatKind::Xml => last(&|c| c == '>'),
        FormatKind::Json => last(&|c| matches!(c, '}' | ']' | '"' | '0'..='9' | 'e' | 'l')),
        _ => true,
    }
}
