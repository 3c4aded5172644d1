//! Checking a response against constraints.

use serde::{Deserialize, Serialize};

use super::{Anchor, CaseRule, ConstraintSpec, Instruction, LengthUnit, Presence, Relation};
use crate::text::{self, TextEnd};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub constraint: ConstraintSpec,
    pub satisfied: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionVerdict {
    pub verdicts: Vec<Verdict>,
    pub all_satisfied: bool,
}

impl InstructionVerdict {
    pub fn satisfied_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.satisfied).count()
    }
}

fn show(c: Option<char>) -> String {
    match c {
        Some(c) => format!("{c:?}"),
        None => "nothing".to_string(),
    }
}

fn verdict(constraint: &ConstraintSpec, satisfied: bool, detail: String) -> Verdict {
    Verdict { constraint: constraint.clone(), satisfied, detail }
}

pub fn verify(constraint: &ConstraintSpec, response: &str) -> Verdict {
    let (ok, detail) = match constraint {
        ConstraintSpec::StartWith(a) => check_anchor(a, response, TextEnd::Start),
        ConstraintSpec::EndWith(a) => check_anchor(a, response, TextEnd::Finish),
        ConstraintSpec::Format(kind) => {
            let check = text::validate_format(*kind, response);
            let detail = check.diagnostic.unwrap_or_else(|| format!("valid {}", kind.label()));
            (check.valid, detail)
        }
        ConstraintSpec::Case(rule) => check_case(*rule, response),
        ConstraintSpec::Punctuation { presence, mark } => {
            let n = response.chars().filter(|c| c == mark).count();
            let ok = match presence {
                Presence::MustInclude => n > 0,
                Presence::MustNotInclude => n == 0,
            };
            (ok, format!("found {n} occurrence(s) of {mark:?}"))
        }
        ConstraintSpec::BulletPoints { count } => {
            let n = text::bullet_count(response);
            (n == *count as usize, format!("found {n}, required {count}"))
        }
        ConstraintSpec::Length { unit, relation, bound } => {
            let n = measure(*unit, response);
            let rel = match relation {
                Relation::MoreThan => "more than",
                Relation::LessThan => "fewer than",
            };
            (relation.holds(n, *bound), format!("found {n}, required {rel} {bound}"))
        }
        ConstraintSpec::KeywordCount { keyword, count } => {
            let n = text::keyword_occurrences(response, keyword);
            (n == *count as usize, format!("found {n}, required {count}"))
        }
        ConstraintSpec::ForbiddenKeyword { keyword } => {
            let n = text::keyword_occurrences(response, keyword);
            (n == 0, format!("found {n}, allowed 0"))
        }
    };
    verdict(constraint, ok, detail)
}

pub(crate) fn measure(unit: LengthUnit, response: &str) -> usize {
    match unit {
        LengthUnit::Word => text::words(response).count(),
        LengthUnit::Sentence => text::sentences(response).len(),
        LengthUnit::Paragraph => text::paragraph_count(response),
        LengthUnit::Character => response.chars().count(),
    }
}

fn check_anchor(anchor: &Anchor, response: &str, end: TextEnd) -> (bool, String) {
    let scan = text::boundary_scan(response, end);
    let which = match end {
        TextEnd::Start => "first",
        TextEnd::Finish => "last",
    };
    match anchor {
        Anchor::Letter(c) => (
            scan.cased_letter == Some(*c),
            format!("{which} cased letter is {}", show(scan.cased_letter)),
        ),
        Anchor::Emoji(e) => (
            scan.emoji == Some(*e),
            format!("{which} scalar is {}", show(scan.scalar)),
        ),
        Anchor::Quotation => (
            scan.scalar == Some('"'),
            format!("{which} scalar is {}", show(scan.scalar)),
        ),
        Anchor::Keyword(k) => {
            let t = response.trim();
            let ok = match end {
                TextEnd::Start => t.starts_with(k.as_str()),
                TextEnd::Finish => t.ends_with(k.as_str()),
            };
            let token = scan.token.unwrap_or("");
            (ok, format!("{which} token is {token:?}"))
        }
    }
}

fn check_case(rule: CaseRule, response: &str) -> (bool, String) {
    let (cased, upper) = text::case_counts(response);
    let detail = format!("{upper} of {cased} cased letters are uppercase");
    if cased == 0 {
        return (false, detail);
    }
    let ok = match rule {
        CaseRule::AllUpper => upper == cased,
        CaseRule::AllLower => upper == 0,
        CaseRule::MinUpperRatio { percent } => upper * 100 >= usize::from(percent) * cased,
    };
    (ok, detail)
}

pub fn verify_instruction(instruction: &Instruction, response: &str) -> InstructionVerdict {
    let verdicts: Vec<Verdict> = instruction.iter().map(|c| verify(c, response)).collect();
    let all_satisfied = verdicts.iter().all(|v| v.satisfied);
    InstructionVerdict { verdicts, all_satisfied }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::FormatKind;

    fn ok(c: &ConstraintSpec, r: &str) -> bool {
        verify(c, r).satisfied
    }

    #[test]
    fn start_keyword_is_prefix() {
        let c = ConstraintSpec::StartWith(Anchor::Keyword("hello".into()));
        assert!(ok(&c, "hello world"));
        assert!(ok(&c, "  helloworld"));
        assert!(!ok(&c, "Hello world"));
    }

    #[test]
    fn bullet_shortfall_detail() {
        let v = verify(&ConstraintSpec::BulletPoints { count: 3 }, "Items:\n- one\n- two\n");
        assert!(!v.satisfied);
        assert_eq!(v.detail, "found 2, required 3");
    }

    #[test]
    fn exact_keyword_count_ignores_longer_tokens() {
        let c = ConstraintSpec::KeywordCount { keyword: "data".into(), count: 3 };
        let text = "We collect data, clean the data and store data in a database.";
        assert!(ok(&c, text));
    }

    #[test]
    fn length_bounds_are_strict() {
        let c = ConstraintSpec::Length { unit: LengthUnit::Word, relation: Relation::MoreThan, bound: 50 };
        assert!(!ok(&c, "one two three four five six seven eight nine ten"));
        let c = ConstraintSpec::Length { unit: LengthUnit::Word, relation: Relation::LessThan, bound: 2 };
        assert!(ok(&c, "one"));
        assert!(!ok(&c, "one two"));
    }

    #[test]
    fn json_strictness() {
        let c = ConstraintSpec::Format(FormatKind::Json);
        assert!(ok(&c, "{\"a\": 1}"));
        assert!(!ok(&c, "{a: 1}"));
    }

    #[test]
    fn case_rules_need_letters() {
        for rule in [CaseRule::AllUpper, CaseRule::AllLower, CaseRule::MinUpperRatio { percent: 10 }] {
            assert!(!ok(&ConstraintSpec::Case(rule), "123 !!"));
        }
        let ratio = ConstraintSpec::Case(CaseRule::MinUpperRatio { percent: 20 });
        assert!(ok(&ratio, "Abcde"));
        assert!(!ok(&ratio, "Abcdef"));
    }

    #[test]
    fn end_anchors_ignore_trailing_space() {
        assert!(ok(&ConstraintSpec::EndWith(Anchor::Quotation), "he said \"hi\"  \n"));
        assert!(ok(&ConstraintSpec::EndWith(Anchor::Letter('z')), "fizz!"));
        assert!(ok(&ConstraintSpec::EndWith(Anchor::Emoji('🚀')), "launch 🚀"));
        assert!(ok(&ConstraintSpec::EndWith(Anchor::Keyword("end.".into())), "the end.\n"));
    }

    #[test]
    fn instruction_verdicts_follow_group_order() {
        let i = Instruction::from_constraints([
            ConstraintSpec::Length { unit: LengthUnit::Word, relation: Relation::LessThan, bound: 5 },
            ConstraintSpec::StartWith(Anchor::Keyword("hello".into())),
        ])
        .unwrap();
        let v = verify_instruction(&i, "hello world");
        assert!(v.all_satisfied);
        assert_eq!(v.verdicts[0].constraint.variant(), "Keyword");
        let empty = verify_instruction(&Instruction::new(), "anything");
        assert!(empty.all_satisfied && empty.verdicts.is_empty());
    }

    #[test]
    fn failing_verdicts_explain_themselves() {
        let v = verify(&ConstraintSpec::Punctuation { presence: Presence::MustInclude, mark: ';' }, "");
        assert!(!v.satisfied && !v.detail.is_empty());
    }
}
