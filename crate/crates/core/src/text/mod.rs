//! Text measurement primitives shared by the constraint verifiers.
//!
//! Every counter here follows one fixed set of tokenization rules so that
//! verification is reproducible across runs and platforms:
//!
//! - **word**: a whitespace-delimited token with leading and trailing
//!   punctuation stripped; tokens that strip to nothing are not words.
//!   Hyphenated forms stay one word.
//! - **sentence**: text segments split at a run of `.`, `!` or `?` that is
//!   followed by whitespace or end-of-text. A segment counts only when it
//!   contains at least one word.
//! - **paragraph**: a maximal run of non-blank lines.
//! - **character**: a Unicode scalar value, whitespace included.
//! - **bullet**: a line whose first non-whitespace characters are `- `,
//!   `* `, `+ ` or `N. ` with `N` a run of ASCII digits.

mod emoji;
mod format;

pub use emoji::is_emoji;
pub use format::{validate_format, FormatCheck, FormatKind};

use serde::{Deserialize, Serialize};

/// Aggregate counts for a piece of text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextStats {
    pub words: usize,
    pub sentences: usize,
    pub paragraphs: usize,
    pub characters: usize,
    pub bullets: usize,
    pub cased_letters: usize,
    pub uppercase_letters: usize,
}

pub fn compute_stats(text: &str) -> TextStats {
    let (cased_letters, uppercase_letters) = case_counts(text);
    TextStats {
        words: words(text).count(),
        sentences: sentences(text).len(),
        paragraphs: paragraph_count(text),
        characters: text.chars().count(),
        bullets: bullet_count(text),
        cased_letters,
        uppercase_letters,
    }
}

/// Punctuation as far as token edge-stripping is concerned.
pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation();
    }
    matches!(c,
        '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
        | '\u{2010}'..='\u{2027}'
        | '\u{2030}'..='\u{205E}'
        | '\u{3001}'..='\u{3003}'
        | '\u{3008}'..='\u{3011}'
        | '\u{FF01}'..='\u{FF0F}'
        | '\u{FF1A}'..='\u{FF1F}')
}

pub fn is_cased(c: char) -> bool {
    c.is_uppercase() || c.is_lowercase()
}

fn strip_token(token: &str) -> &str {
    token.trim_matches(is_punctuation)
}

/// Word tokens of `text`, in order.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(strip_token)
        .filter(|w| !w.is_empty())
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Sentence segments that contain at least one word.
pub fn sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if !is_terminator(c) {
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, d)) = iter.peek() {
            if !is_terminator(d) {
                break;
            }
            end = j + d.len_utf8();
            iter.next();
        }
        let at_boundary = match iter.peek() {
            None => true,
            Some(&(_, d)) => d.is_whitespace(),
        };
        if at_boundary {
            let seg = &text[start..end];
            if words(seg).next().is_some() {
                out.push(seg);
            }
            start = end;
        }
    }
    let tail = &text[start..];
    if words(tail).next().is_some() {
        out.push(tail);
    }
    out
}

fn lines(text: &str) -> impl Iterator<Item = &str> {
    text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l))
}

pub fn paragraph_count(text: &str) -> usize {
    let mut count = 0;
    let mut in_paragraph = false;
    for line in lines(text) {
        let blank = line.trim().is_empty();
        if !blank && !in_paragraph {
            count += 1;
        }
        in_paragraph = !blank;
    }
    count
}

/// Whether a single line opens a bullet or numbered item.
pub fn is_bullet_line(line: &str) -> bool {
    let t = line.trim_start();
    if t.starts_with("- ") || t.starts_with("* ") || t.starts_with("+ ") {
        return true;
    }
    let digits = t.bytes().take_while(u8::is_ascii_digit).count();
    digits > 0 && t[digits..].starts_with(". ")
}

pub fn bullet_count(text: &str) -> usize {
    lines(text).filter(|l| is_bullet_line(l)).count()
}

/// `(cased, uppercase)` letter counts.
pub fn case_counts(text: &str) -> (usize, usize) {
    text.chars().fold((0, 0), |(cased, upper), c| {
        if c.is_uppercase() {
            (cased + 1, upper + 1)
        } else if c.is_lowercase() {
            (cased + 1, upper)
        } else {
            (cased, upper)
        }
    })
}

/// Case-sensitive count of `keyword` as a whole token sequence in `text`.
///
/// A multi-word keyword matches a run of consecutive word tokens.
pub fn keyword_occurrences(text: &str, keyword: &str) -> usize {
    let needle: Vec<&str> = words(keyword).collect();
    if needle.is_empty() {
        return 0;
    }
    let tokens: Vec<&str> = words(text).collect();
    if tokens.len() < needle.len() {
        return 0;
    }
    tokens
        .windows(needle.len())
        .filter(|w| *w == needle.as_slice())
        .count()
}

/// Which end of the text a [`boundary_scan`] inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextEnd {
    Start,
    Finish,
}

/// The facets of a text boundary that start/end constraints look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryScan<'a> {
    /// First (or last) non-whitespace scalar.
    pub scalar: Option<char>,
    /// First (or last) cased letter anywhere in the text.
    pub cased_letter: Option<char>,
    /// Leading (or trailing) whitespace-delimited token, unstripped.
    pub token: Option<&'a str>,
    /// Emoji at the boundary. At the finish, a multi-scalar sequence
    /// (ZWJ joins, variation selectors, skin tones) reports its first scalar.
    pub emoji: Option<char>,
}

pub fn boundary_scan(text: &str, end: TextEnd) -> BoundaryScan<'_> {
    match end {
        TextEnd::Start => {
            let scalar = text.chars().find(|c| !c.is_whitespace());
            BoundaryScan {
                scalar,
                cased_letter: text.chars().find(|c| is_cased(*c)),
                token: text.split_whitespace().next(),
                emoji: scalar.filter(|c| is_emoji(*c)),
            }
        }
        TextEnd::Finish => BoundaryScan {
            scalar: text.chars().rev().find(|c| !c.is_whitespace()),
            cased_letter: text.chars().rev().find(|c| is_cased(*c)),
            token: text.split_whitespace().next_back(),
            emoji: trailing_emoji(text),
        },
    }
}

fn is_emoji_modifier(c: char) -> bool {
    matches!(c,
        '\u{FE0E}' | '\u{FE0F}' | '\u{20E3}'
        | '\u{1F3FB}'..='\u{1F3FF}'
        | '\u{E0020}'..='\u{E007F}')
}

fn trailing_emoji(text: &str) -> Option<char> {
    let mut rev = text.trim_end().chars().rev().peekable();
    while rev.peek().is_some_and(|c| is_emoji_modifier(*c)) {
        rev.next();
    }
    let mut head = rev.next().filter(|c| is_emoji(*c))?;
    // Walk back across ZWJ joins to the first scalar of the sequence.
    loop {
        if rev.peek() != Some(&'\u{200D}') {
            return Some(head);
        }
        rev.next();
        while rev.peek().is_some_and(|c| is_emoji_modifier(*c)) {
            rev.next();
        }
        match rev.next() {
            Some(c) if is_emoji(c) => head = c,
            _ => return Some(head),
        }
    }
}
