//! Building responses that pass, or fail, a given instruction.
//!
//! The passing composer lays out a small document from fixed pieces (anchor
//! tokens, keyword copies, a punctuation carrier, a format marker, bullet
//! lines) plus adjustable filler, renders it in the required format, checks
//! it with the verifiers and grows the adjustable parts until every length
//! and case requirement holds.

use crate::constraint::{
    verify_instruction, Anchor, CaseRule, ConstraintSpec, Instruction, LengthUnit, Presence, Relation,
};
use crate::text::{self, FormatKind};

const FILLERS: &[&str] = &["note", "plain", "river", "stone", "cloud", "amber", "maple", "field", "green"];
const XML_ROOTS: &[&str] = &["doc", "root", "body", "text", "item"];
const MAX_ROUNDS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Casing {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, Default)]
struct Knobs {
    fillers: usize,
    terminators: usize,
    paragraphs: usize,
    ballast: usize,
}

/// Fixed material derived once from the instruction.
struct Layout {
    format: Option<FormatKind>,
    filler: String,
    ballast_word: String,
    prefix: Option<String>,
    suffix: Option<String>,
    quote_first: bool,
    quote_last: bool,
    quote_row1_field2: bool,
    xml_root: String,
    fixed: Vec<String>,
    bullets: usize,
    bullet_marker: char,
    terminator: char,
}

fn banned_tokens(instruction: &Instruction) -> Vec<String> {
    instruction
        .iter()
        .filter_map(ConstraintSpec::keyword)
        .flat_map(|k| text::words(k).map(str::to_lowercase).collect::<Vec<_>>())
        .collect()
}

fn cased(word: &str, casing: Casing) -> String {
    match casing {
        Casing::Lower => word.to_lowercase(),
        Casing::Upper => word.to_uppercase(),
    }
}

fn forbidden_mark(instruction: &Instruction) -> Option<char> {
    instruction.iter().find_map(|c| match c {
        ConstraintSpec::Punctuation { presence: Presence::MustNotInclude, mark } => Some(*mark),
        _ => None,
    })
}

/// A word made of `letter` plus padding that keeps the letter at the
/// requested edge and avoids keyword collisions.
fn letter_word(letter: char, at_start: bool, banned: &[String]) -> String {
    let pad = if letter.is_uppercase() { 'Q' } else { 'q' };
    let candidates = [letter.to_string(), if at_start { format!("{letter}{pad}") } else { format!("{pad}{letter}") }];
    candidates
        .iter()
        .find(|w| !banned.contains(&w.to_lowercase()))
        .cloned()
        .unwrap_or_else(|| candidates[1].clone())
}

impl Layout {
    fn new(instruction: &Instruction) -> Result<Layout, String> {
        let banned = banned_tokens(instruction);
        let forbidden = forbidden_mark(instruction);
        let format = instruction.iter().find_map(|c| match c {
            ConstraintSpec::Format(k) => Some(*k),
            _ => None,
        });
        let case = instruction.iter().find_map(|c| match c {
            ConstraintSpec::Case(r) => Some(*r),
            _ => None,
        });
        let casing = match case {
            Some(CaseRule::AllUpper) | Some(CaseRule::MinUpperRatio { percent: 100 }) => Casing::Upper,
            _ => Casing::Lower,
        };
        let base = FILLERS
            .iter()
            .find(|w| !banned.contains(&w.to_string()))
            .ok_or("every filler word is a keyword")?;
        let filler = cased(base, casing);
        let ballast_word = base.to_uppercase();

        let mut layout = Layout {
            format,
            filler: filler.clone(),
            ballast_word,
            prefix: None,
            suffix: None,
            quote_first: false,
            quote_last: false,
            quote_row1_field2: false,
            xml_root: String::new(),
            fixed: Vec::new(),
            bullets: 0,
            bullet_marker: if forbidden == Some('-') { '*' } else { '-' },
            terminator: if forbidden == Some('.') { '!' } else { '.' },
        };

        let mut xml_first = None;
        let mut xml_last = None;
        for c in instruction.iter() {
            match c {
                ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a) => {
                    let at_start = matches!(c, ConstraintSpec::StartWith(_));
                    let token = match a {
                        Anchor::Letter(l) if format == Some(FormatKind::Xml) => {
                            if at_start {
                                xml_first = Some(*l);
                            } else {
                                xml_last = Some(*l);
                            }
                            continue;
                        }
                        Anchor::Letter(l) => letter_word(*l, at_start, &banned),
                        Anchor::Emoji(e) => e.to_string(),
                        Anchor::Keyword(k) => k.clone(),
                        Anchor::Quotation if format == Some(FormatKind::Csv) => {
                            if at_start {
                                layout.quote_first = true;
                            } else {
                                layout.quote_last = true;
                            }
                            continue;
                        }
                        Anchor::Quotation => format!("\"{filler}\""),
                    };
                    if at_start {
                        layout.prefix = Some(token);
                    } else {
                        layout.suffix = Some(token);
                    }
                }
                ConstraintSpec::KeywordCount { keyword, count } => {
                    let spaced = text::words(keyword).count() > 1;
                    for i in 0..*count {
                        if spaced && i > 0 {
                            layout.fixed.push(filler.clone());
                        }
                        layout.fixed.push(keyword.clone());
                    }
                }
                ConstraintSpec::Punctuation { presence: Presence::MustInclude, mark } => {
                    match (format, mark) {
                        (Some(FormatKind::Csv), ',') => {}
                        (Some(FormatKind::Csv), '"') => layout.quote_row1_field2 = true,
                        _ => layout.fixed.push(format!("{filler}{mark}{filler}")),
                    }
                }
                ConstraintSpec::BulletPoints { count } => layout.bullets = *count as usize,
                _ => {}
            }
        }
        match format {
            Some(FormatKind::Markdown) => {
                let delim = if forbidden == Some('*') { "__" } else { "**" };
                layout.fixed.push(format!("{delim}{filler}{delim}"));
            }
            Some(FormatKind::Html) => layout.fixed.push(cased("<br>", casing)),
            Some(FormatKind::Xml) => {
                let base = XML_ROOTS
                    .iter()
                    .map(|r| {
                        let mut name = String::new();
                        name.extend(xml_first);
                        name.push_str(&cased(r, casing));
                        name.extend(xml_last);
                        name
                    })
                    .find(|name| !banned.contains(&name.to_lowercase()))
                    .ok_or("every XML root name is a keyword")?;
                layout.xml_root = base;
            }
            _ => {}
        }
        Ok(layout)
    }

    /// Body tokens split into paragraphs, with terminators attached.
    fn paragraphs(&self, knobs: &Knobs) -> Vec<Vec<String>> {
        let mut body = self.fixed.clone();
        body.extend(std::iter::repeat_n(self.ballast_word.clone(), knobs.ballast));
        body.extend(std::iter::repeat_n(self.filler.clone(), knobs.fillers));
        let paragraphs = knobs.paragraphs.max(1);
        let per_paragraph = match self.format {
            Some(FormatKind::Csv) if paragraphs == 1 => 4,
            Some(FormatKind::Csv) => 2,
            _ => 1,
        };
        let needed = knobs.terminators.max(paragraphs * per_paragraph).max(1);
        while body.len() < needed {
            body.push(self.filler.clone());
        }
        let n = body.len();
        for k in 0..knobs.terminators {
            let at = (k + 1) * n / knobs.terminators - 1;
            body[at].push(self.terminator);
        }
        let mut out = Vec::with_capacity(paragraphs);
        let mut rest = body.into_iter();
        for p in 0..paragraphs {
            let take = n / paragraphs + usize::from(p < n % paragraphs);
            out.push(rest.by_ref().take(take).collect());
        }
        out
    }

    fn bullet_lines(&self) -> Vec<String> {
        (0..self.bullets).map(|_| format!("{} {}", self.bullet_marker, self.filler)).collect()
    }

    fn render(&self, knobs: &Knobs) -> String {
        let mut paragraphs = self.paragraphs(knobs);
        if let Some(p) = &self.prefix {
            paragraphs[0].insert(0, p.clone());
        }
        if let Some(s) = &self.suffix {
            paragraphs.last_mut().expect("at least one paragraph").push(s.clone());
        }
        match self.format {
            Some(FormatKind::Json) => self.render_json(&paragraphs),
            Some(FormatKind::Csv) => self.render_csv(&paragraphs),
            Some(FormatKind::Xml) => format!("<{0}>\n{1}\n</{0}>", self.xml_root, self.render_prose(&paragraphs)),
            _ => self.render_prose(&paragraphs),
        }
    }

    fn render_prose(&self, paragraphs: &[Vec<String>]) -> String {
        let mut blocks: Vec<String> = paragraphs.iter().map(|p| p.join(" ")).collect();
        if self.bullets > 0 {
            let first = &paragraphs[0];
            let split = first.len().div_ceil(2);
            let mut lines = vec![first[..split].join(" ")];
            lines.extend(self.bullet_lines());
            lines.push(first[split..].join(" "));
            lines.retain(|l| !l.is_empty());
            blocks[0] = lines.join("\n");
        }
        blocks.join("\n\n")
    }

    fn render_json(&self, paragraphs: &[Vec<String>]) -> String {
        let strings: Vec<String> = paragraphs
            .iter()
            .map(|p| serde_json::to_string(&p.join(" ")).expect("strings serialize"))
            .collect();
        format!("[{}]", strings.join(",\n\n"))
    }

    fn render_csv(&self, paragraphs: &[Vec<String>]) -> String {
        let mut blocks: Vec<Vec<Vec<Vec<String>>>> = paragraphs
            .iter()
            .map(|p| {
                let f = split_even(p, 2);
                vec![f]
            })
            .collect();
        if blocks.len() == 1 {
            let mut f = split_even(&paragraphs[0], 4).into_iter();
            let mut row = || vec![f.next().unwrap_or_default(), f.next().unwrap_or_default()];
            blocks[0] = vec![row(), row()];
        }
        let last_block = blocks.len() - 1;
        let mut out_blocks = Vec::new();
        for (b, rows) in blocks.iter().enumerate() {
            let last_row = rows.len() - 1;
            let mut lines = Vec::new();
            for (r, fields) in rows.iter().enumerate() {
                let quote = |f: usize| match (b, r, f) {
                    (0, 0, 0) => self.quote_first,
                    (0, 0, 1) => self.quote_row1_field2 || (self.quote_last && b == last_block && r == last_row),
                    _ => self.quote_last && b == last_block && r == last_row && f == 1,
                };
                lines.push(csv_row(&fields[0], &fields[1], quote(0), quote(1)));
                if b == 0 && r == 0 {
                    lines.extend(self.bullet_lines().iter().map(|l| format!("{l} ,{}", self.filler)));
                }
            }
            out_blocks.push(lines.join("\n"));
        }
        out_blocks.join("\n\n")
    }
}

/// Splits `tokens` into `k` contiguous parts whose sizes differ by at most one.
fn split_even(tokens: &[String], k: usize) -> Vec<Vec<String>> {
    let n = tokens.len();
    let mut out = Vec::with_capacity(k);
    let mut at = 0;
    for i in 0..k {
        let take = n / k + usize::from(i < n % k);
        out.push(tokens[at..at + take].to_vec());
        at += take;
    }
    out
}

fn csv_field(tokens: &[String], quoted: bool, pad: bool) -> String {
    let mut joined = tokens.join(" ");
    if pad {
        joined.push(' ');
    }
    if quoted {
        format!("\"{}\"", joined.replace('"', "\"\""))
    } else {
        joined
    }
}

/// Two fields. The first always ends in a space so that its last word and
/// the second field's first word stay separate tokens.
fn csv_row(first: &[String], second: &[String], q1: bool, q2: bool) -> String {
    format!("{},{}", csv_field(first, q1, true), csv_field(second, q2, false))
}

fn initial_knobs(instruction: &Instruction) -> Knobs {
    let mut knobs = Knobs { fillers: 1, terminators: 0, paragraphs: 1, ballast: 0 };
    if let Some(ConstraintSpec::Length { unit, relation: Relation::MoreThan, bound }) =
        instruction.iter().find(|c| matches!(c, ConstraintSpec::Length { .. }))
    {
        let b = *bound as usize;
        match unit {
            LengthUnit::Word => knobs.fillers = b + 1,
            LengthUnit::Sentence => knobs.terminators = b + 1,
            LengthUnit::Paragraph => knobs.paragraphs = b + 1,
            LengthUnit::Character => knobs.fillers = b / 5 + 1,
        }
    }
    knobs
}

/// Composes a response that satisfies every constraint of `instruction`.
pub fn compose_passing(instruction: &Instruction) -> Result<String, String> {
    let layout = Layout::new(instruction)?;
    let mut knobs = initial_knobs(instruction);
    let mut last = String::new();
    for _ in 0..MAX_ROUNDS {
        let response = layout.render(&knobs);
        let verdict = verify_instruction(instruction, &response);
        if verdict.all_satisfied {
            return Ok(response);
        }
        let mut progressed = false;
        for v in verdict.verdicts.iter().filter(|v| !v.satisfied) {
            match &v.constraint {
                ConstraintSpec::Length { unit, relation: Relation::MoreThan, bound } => {
                    let have = crate::constraint::measure(*unit, &response);
                    let deficit = (*bound as usize + 1).saturating_sub(have).max(1);
                    match unit {
                        LengthUnit::Word => knobs.fillers += deficit,
                        LengthUnit::Sentence => knobs.terminators += deficit,
                        LengthUnit::Paragraph => knobs.paragraphs += deficit,
                        LengthUnit::Character => knobs.fillers += deficit / 5 + 1,
                    }
                    progressed = true;
                }
                ConstraintSpec::Case(CaseRule::MinUpperRatio { percent }) if *percent < 100 => {
                    let (cased, upper) = text::case_counts(&response);
                    let p = usize::from(*percent);
                    let need = (p * cased).saturating_sub(100 * upper);
                    let per_word = (100 - p) * layout.ballast_word.chars().count();
                    knobs.ballast += need.div_ceil(per_word) + 1;
                    progressed = true;
                }
                _ => {}
            }
        }
        last = verdict
            .verdicts
            .iter()
            .filter(|v| !v.satisfied)
            .map(|v| format!("{}: {}", v.constraint, v.detail))
            .collect::<Vec<_>>()
            .join("; ");
        if !progressed {
            break;
        }
    }
    Err(format!("could not satisfy {{{}}}: {last}", instruction_summary(instruction)))
}

fn instruction_summary(instruction: &Instruction) -> String {
    instruction.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

fn violators(spec: &ConstraintSpec) -> Option<String> {
    match spec {
        ConstraintSpec::Punctuation { presence: Presence::MustNotInclude, mark } => Some(mark.to_string()),
        ConstraintSpec::ForbiddenKeyword { keyword } => Some(keyword.clone()),
        ConstraintSpec::Length { unit, relation: Relation::LessThan, bound } => {
            let n = *bound as usize + 1;
            Some(match unit {
                LengthUnit::Word => vec!["word"; n].join(" "),
                LengthUnit::Sentence => vec!["Word."; n].join(" "),
                LengthUnit::Paragraph => vec!["word"; n].join("\n\n"),
                LengthUnit::Character => "x".repeat(n),
            })
        }
        _ => None,
    }
}

/// Composes a response that misses at least one constraint.
pub fn compose_failing(instruction: &Instruction) -> Result<String, String> {
    std::iter::once(String::new())
        .chain(instruction.iter().filter_map(violators))
        .find(|candidate| !verify_instruction(instruction, candidate).all_satisfied)
        .ok_or_else(|| format!("no failing response found for {{{}}}", instruction_summary(instruction)))
}
