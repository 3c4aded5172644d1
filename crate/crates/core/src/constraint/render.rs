//! Fixed English wording for each constraint.

use super::{Anchor, CaseRule, ConstraintSpec, LengthUnit, Presence, Relation};

/// Spoken name of a punctuation mark, with the mark itself in parentheses.
pub fn mark_name(mark: char) -> String {
    let name = match mark {
        '!' => "exclamation mark",
        '?' => "question mark",
        ';' => "semicolon",
        ':' => "colon",
        ',' => "comma",
        '.' => "period",
        '—' => "em dash",
        '"' => "double quotation mark",
        '\'' => "apostrophe",
        _ => return format!("character \"{mark}\""),
    };
    format!("{name} ({mark})")
}

fn plural(n: u32, one: &str, many: &str) -> String {
    if n == 1 {
        format!("{n} {one}")
    } else {
        format!("{n} {many}")
    }
}

fn letter_phrase(c: char) -> String {
    if c.is_uppercase() {
        format!("an uppercase \"{c}\"")
    } else {
        format!("a lowercase \"{c}\"")
    }
}

fn anchor_fragment(anchor: &Anchor, verb: &str, position: &str) -> String {
    match anchor {
        Anchor::Letter(c) => format!("make the {position} letter of your response {}", letter_phrase(*c)),
        Anchor::Emoji(e) => format!("{verb} your response with the emoji {e}"),
        Anchor::Keyword(k) if verb == "end" => {
            format!("end your response with the word \"{k}\", with nothing after it")
        }
        Anchor::Keyword(k) => format!("{verb} your response with the word \"{k}\""),
        Anchor::Quotation => format!("{verb} your response with a double quotation mark (\")"),
    }
}

/// A single lowercase imperative clause describing `constraint`.
pub fn render_fragment(constraint: &ConstraintSpec) -> String {
    match constraint {
        ConstraintSpec::StartWith(a) => anchor_fragment(a, "start", "first"),
        ConstraintSpec::EndWith(a) => anchor_fragment(a, "end", "last"),
        ConstraintSpec::Format(kind) => format!("format your entire response as valid {}", kind.label()),
        ConstraintSpec::Case(CaseRule::AllUpper) => "write your entire response in uppercase letters".into(),
        ConstraintSpec::Case(CaseRule::AllLower) => "write your entire response in lowercase letters".into(),
        ConstraintSpec::Case(CaseRule::MinUpperRatio { percent }) => {
            format!("make at least {percent}% of the letters in your response uppercase")
        }
        ConstraintSpec::Punctuation { presence: Presence::MustInclude, mark } => {
            format!("use the {} at least once", mark_name(*mark))
        }
        ConstraintSpec::Punctuation { presence: Presence::MustNotInclude, mark } => {
            format!("do not use the {} anywhere", mark_name(*mark))
        }
        ConstraintSpec::BulletPoints { count } => {
            format!("include exactly {}", plural(*count, "bullet point", "bullet points"))
        }
        ConstraintSpec::Length { unit, relation, bound } => {
            let rel = match relation {
                Relation::MoreThan => "more than",
                Relation::LessThan => "fewer than",
            };
            let noun = match unit {
                LengthUnit::Word => plural(*bound, "word", "words"),
                LengthUnit::Sentence => plural(*bound, "sentence", "sentences"),
                LengthUnit::Paragraph => plural(*bound, "paragraph", "paragraphs"),
                LengthUnit::Character => plural(*bound, "character", "characters"),
            };
            format!("use {rel} {noun}")
        }
        ConstraintSpec::KeywordCount { keyword, count } => {
            let times = if *count == 1 { "once".to_string() } else { format!("{count} times") };
            format!("include the word \"{keyword}\" exactly {times}")
        }
        ConstraintSpec::ForbiddenKeyword { keyword } => format!("do not use the word \"{keyword}\""),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::FormatKind;

    #[test]
    fn fixed_wording() {
        assert_eq!(
            render_fragment(&ConstraintSpec::StartWith(Anchor::Keyword("hello".into()))),
            "start your response with the word \"hello\""
        );
        assert_eq!(
            render_fragment(&ConstraintSpec::Length {
                unit: LengthUnit::Sentence,
                relation: Relation::LessThan,
                bound: 10
            }),
            "use fewer than 10 sentences"
        );
        assert_eq!(
            render_fragment(&ConstraintSpec::KeywordCount { keyword: "ocean".into(), count: 3 }),
            "include the word \"ocean\" exactly 3 times"
        );
        assert_eq!(
            render_fragment(&ConstraintSpec::Format(FormatKind::Json)),
            "format your entire response as valid JSON"
        );
        assert_eq!(
            render_fragment(&ConstraintSpec::Punctuation { presence: Presence::MustNotInclude, mark: '!' }),
            "do not use the exclamation mark (!) anywhere"
        );
    }
}
