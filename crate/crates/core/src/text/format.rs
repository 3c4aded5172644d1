//! Well-formedness checks for the structured output formats.
//!
//! These are deliberately small scanners with a documented pass criterion,
//! not complete parsers for each format.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FormatKind {
    Json,
    Html,
    Xml,
    Csv,
    Markdown,
}

impl FormatKind {
    pub const ALL: [FormatKind; 5] = [
        FormatKind::Json,
        FormatKind::Html,
        FormatKind::Xml,
        FormatKind::Csv,
        FormatKind::Markdown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormatKind::Json => "Json",
            FormatKind::Html => "Html",
            FormatKind::Xml => "Xml",
            FormatKind::Csv => "Csv",
            FormatKind::Markdown => "Markdown",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Human-facing label, e.g. `JSON`.
    pub fn label(self) -> &'static str {
        match self {
            FormatKind::Json => "JSON",
            FormatKind::Html => "HTML",
            FormatKind::Xml => "XML",
            FormatKind::Csv => "CSV",
            FormatKind::Markdown => "Markdown",
        }
    }
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Outcome of a format check. `diagnostic` names the first violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatCheck {
    pub valid: bool,
    pub diagnostic: Option<String>,
}

impl FormatCheck {
    fn from_result(r: Result<(), String>) -> Self {
        match r {
            Ok(()) => FormatCheck { valid: true, diagnostic: None },
            Err(d) => FormatCheck { valid: false, diagnostic: Some(d) },
        }
    }
}

pub fn validate_format(kind: FormatKind, text: &str) -> FormatCheck {
    let r = match kind {
        FormatKind::Json => check_json(strip_fence(text)),
        FormatKind::Xml => check_markup(strip_fence(text), Dialect::Xml),
        FormatKind::Html => check_markup(strip_fence(text), Dialect::Html),
        FormatKind::Csv => check_csv(strip_fence(text)),
        // A surrounding fence is itself a Markdown construct, so no stripping.
        FormatKind::Markdown => check_markdown(text),
    };
    FormatCheck::from_result(r)
}

/// Removes one fenced code block that wraps the entire text, if present.
pub(crate) fn strip_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return text;
    };
    let Some(nl) = rest.find('\n') else {
        return text;
    };
    if rest[..nl].contains('`') {
        return text;
    }
    match rest[nl + 1..].strip_suffix("```") {
        Some(inner) if !inner.contains("```") => inner,
        _ => text,
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

const MAX_DEPTH: usize = 256;

fn check_json(text: &str) -> Result<(), String> {
    let mut p = JsonParser { s: text.as_bytes(), pos: 0, depth: 0 };
    p.ws();
    if p.pos == p.s.len() {
        return Err("empty document".into());
    }
    p.value()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(format!("trailing content at offset {}", p.pos));
    }
    Ok(())
}

struct JsonParser<'a> {
    s: &'a [u8],
    pos: usize,
    depth: usize,
}

impl JsonParser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn err<T>(&self, what: &str) -> Result<T, String> {
        Err(format!("{what} at offset {}", self.pos))
    }

    fn expect(&mut self, b: u8) -> Result<(), String> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(&format!("expected '{}'", b as char))
        }
    }

    fn value(&mut self) -> Result<(), String> {
        match self.peek() {
            Some(b'{') => self.nested(Self::object),
            Some(b'[') => self.nested(Self::array),
            Some(b'"') => self.string(),
            Some(b't') => self.literal(b"true"),
            Some(b'f') => self.literal(b"false"),
            Some(b'n') => self.literal(b"null"),
            Some(b'-' | b'0'..=b'9') => self.number(),
            Some(_) => self.err("expected value"),
            None => self.err("unexpected end of input"),
        }
    }

    fn nested(&mut self, f: fn(&mut Self) -> Result<(), String>) -> Result<(), String> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.err("nesting too deep");
        }
        let r = f(self);
        self.depth -= 1;
        r
    }

    fn object(&mut self) -> Result<(), String> {
        self.expect(b'{')?;
        self.ws();
        if self.peek() == Some(b'}') {
            self.pos += 1;
            return Ok(());
        }
        loop {
            self.ws();
            if self.peek() != Some(b'"') {
                return self.err("expected object key");
            }
            self.string()?;
            self.ws();
            self.expect(b':')?;
            self.ws();
            self.value()?;
            self.ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b'}') => {
                    self.pos += 1;
                    return Ok(());
                }
                _ => return self.err("expected ',' or '}'"),
            }
        }
    }

    fn array(&mut self) -> Result<(), String> {
        self.expect(b'[')?;
        self.ws();
        if self.peek() == Some(b']') {
            self.pos += 1;
            return Ok(());
        }
        loop {
            self.ws();
            self.value()?;
            self.ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b']') => {
                    self.pos += 1;
                    return Ok(());
                }
                _ => return self.err("expected ',' or ']'"),
            }
        }
    }

    fn string(&mut self) -> Result<(), String> {
        self.expect(b'"')?;
        loop {
            match self.peek() {
                None => return self.err("unterminated string"),
                Some(b'"') => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(b'\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(b'"' | b'\\' | b'/' | b'b' | b'f' | b'n' | b'r' | b't') => self.pos += 1,
                        Some(b'u') => {
                            self.pos += 1;
                            for _ in 0..4 {
                                match self.peek() {
                                    Some(c) if c.is_ascii_hexdigit() => self.pos += 1,
                                    _ => return self.err("bad unicode escape"),
                                }
                            }
                        }
                        _ => return self.err("bad escape"),
                    }
                }
                Some(c) if c < 0x20 => return self.err("control character in string"),
                Some(_) => self.pos += 1,
            }
        }
    }

    fn literal(&mut self, word: &[u8]) -> Result<(), String> {
        if self.s[self.pos..].starts_with(word) {
            self.pos += word.len();
            Ok(())
        } else {
            self.err("invalid literal")
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self) -> Result<(), String> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        match self.peek() {
            Some(b'0') => self.pos += 1,
            Some(b'1'..=b'9') => {
                self.digits();
            }
            _ => return self.err("expected digit"),
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            if self.digits() == 0 {
                return self.err("expected fraction digits");
            }
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                return self.err("expected exponent digits");
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// XML / HTML
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dialect {
    Xml,
    Html,
}

const HTML_VOID: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

const HTML_RAW_TEXT: &[&str] = &["script", "style"];

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == ':'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | ':' | '-' | '.')
}

struct Markup<'a> {
    s: &'a str,
    pos: usize,
    dialect: Dialect,
}

impl<'a> Markup<'a> {
    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn skip_past(&mut self, terminator: &str, what: &str) -> Result<(), String> {
        match self.rest().find(terminator) {
            Some(i) => {
                self.pos += i + terminator.len();
                Ok(())
            }
            None => Err(format!("unterminated {what} at offset {}", self.pos)),
        }
    }

    fn name(&mut self) -> Result<&'a str, String> {
        let start = self.pos;
        match self.peek() {
            Some(c) if is_name_start(c) => {
                self.bump();
            }
            _ => return Err(format!("expected tag name at offset {}", self.pos)),
        }
        while self.peek().is_some_and(is_name_char) {
            self.bump();
        }
        Ok(&self.s[start..self.pos])
    }

    fn norm(&self, name: &str) -> String {
        match self.dialect {
            Dialect::Xml => name.to_string(),
            Dialect::Html => name.to_ascii_lowercase(),
        }
    }

    /// Parses attributes up to and including `>` or `/>`; returns whether
    /// the tag self-closed.
    fn attributes(&mut self) -> Result<bool, String> {
        let mut seen: Vec<String> = Vec::new();
        loop {
            let had_ws = self.peek().is_some_and(char::is_whitespace);
            self.skip_ws();
            match self.peek() {
                None => return Err("unterminated tag".into()),
                Some('>') => {
                    self.bump();
                    return Ok(false);
                }
                Some('/') => {
                    self.bump();
                    if self.peek() == Some('>') {
                        self.bump();
                        return Ok(true);
                    }
                    return Err(format!("expected '>' after '/' at offset {}", self.pos));
                }
                Some(_) => {
                    if !had_ws {
                        return Err(format!("expected whitespace before attribute at offset {}", self.pos));
                    }
                    let raw = self.name()?;
                    let attr = self.norm(raw);
                    if seen.contains(&attr) {
                        return Err(format!("duplicate attribute '{attr}'"));
                    }
                    seen.push(attr);
                    self.skip_ws();
                    if self.peek() == Some('=') {
                        self.bump();
                        self.skip_ws();
                        self.attr_value()?;
                    } else if self.dialect == Dialect::Xml {
                        return Err(format!("attribute without value at offset {}", self.pos));
                    }
                }
            }
        }
    }

    fn attr_value(&mut self) -> Result<(), String> {
        match self.peek() {
            Some(q @ ('"' | '\'')) => {
                self.bump();
                let Some(end) = self.rest().find(q) else {
                    return Err("unterminated attribute value".into());
                };
                if self.dialect == Dialect::Xml && self.rest()[..end].contains('<') {
                    return Err("'<' in attribute value".into());
                }
                self.pos += end + 1;
                Ok(())
            }
            Some(c) if self.dialect == Dialect::Html && !c.is_whitespace() && c != '>' => {
                while self
                    .peek()
                    .is_some_and(|c| !c.is_whitespace() && c != '>' && !matches!(c, '"' | '\'' | '<' | '='))
                {
                    self.bump();
                }
                Ok(())
            }
            _ => Err(format!("expected quoted attribute value at offset {}", self.pos)),
        }
    }

    fn entity(&mut self) -> Result<(), String> {
        let at = self.pos;
        self.bump(); // '&'
        let rest = self.rest();
        let Some(end) = rest.find(';') else {
            return Err(format!("bare '&' at offset {at}"));
        };
        let body = &rest[..end];
        let ok = if let Some(hex) = body.strip_prefix("#x") {
            !hex.is_empty() && hex.chars().all(|c| c.is_ascii_hexdigit())
        } else if let Some(dec) = body.strip_prefix('#') {
            !dec.is_empty() && dec.chars().all(|c| c.is_ascii_digit())
        } else {
            let mut cs = body.chars();
            cs.next().is_some_and(is_name_start) && cs.all(is_name_char)
        };
        if !ok {
            return Err(format!("malformed entity reference at offset {at}"));
        }
        self.pos += end + 1;
        Ok(())
    }
}

fn check_markup(text: &str, dialect: Dialect) -> Result<(), String> {
    let mut m = Markup { s: text, pos: 0, dialect };
    let mut stack: Vec<String> = Vec::new();
    let mut roots = 0usize;
    let mut elements = 0usize;

    while let Some(c) = m.peek() {
        let rest = m.rest();
        if c == '<' {
            if rest.starts_with("<!--") {
                m.pos += 4;
                m.skip_past("-->", "comment")?;
            } else if rest.starts_with("<![CDATA[") {
                if dialect == Dialect::Xml && stack.is_empty() {
                    return Err("CDATA outside root element".into());
                }
                m.skip_past("]]>", "CDATA section")?;
            } else if rest.starts_with("<!") {
                if dialect == Dialect::Xml && roots > 0 {
                    return Err("declaration after root element".into());
                }
                m.skip_past(">", "declaration")?;
            } else if rest.starts_with("<?") {
                m.skip_past("?>", "processing instruction")?;
            } else if rest.starts_with("</") {
                let at = m.pos;
                m.pos += 2;
                let raw = m.name()?;
                let name = m.norm(raw);
                m.skip_ws();
                if m.bump() != Some('>') {
                    return Err(format!("malformed end tag at offset {at}"));
                }
                match stack.pop() {
                    Some(open) if open == name => {}
                    Some(open) => {
                        return Err(format!("mismatched end tag </{name}>, expected </{open}>"))
                    }
                    None => return Err(format!("unexpected end tag </{name}>")),
                }
            } else if rest[1..].starts_with(is_name_start) {
                m.pos += 1;
                let raw = m.name()?;
                let name = m.norm(raw);
                let self_closed = m.attributes()?;
                if dialect == Dialect::Xml && stack.is_empty() {
                    roots += 1;
                    if roots > 1 {
                        return Err(format!("multiple root elements (second is <{name}>)"));
                    }
                }
                elements += 1;
                let void = dialect == Dialect::Html && HTML_VOID.contains(&name.as_str());
                if self_closed || void {
                    continue;
                }
                if dialect == Dialect::Html && HTML_RAW_TEXT.contains(&name.as_str()) {
                    let close = format!("</{name}");
                    let lower = m.rest().to_ascii_lowercase();
                    match lower.find(&close) {
                        Some(i) => m.pos += i,
                        None => return Err(format!("unclosed <{name}>")),
                    }
                }
                stack.push(name);
            } else if dialect == Dialect::Html {
                m.bump();
            } else {
                return Err(format!("stray '<' at offset {}", m.pos));
            }
        } else if c == '&' && dialect == Dialect::Xml {
            m.entity()?;
        } else {
            if dialect == Dialect::Xml && stack.is_empty() && !c.is_whitespace() {
                return Err(format!("text outside root element at offset {}", m.pos));
            }
            m.bump();
        }
    }

    if let Some(open) = stack.pop() {
        return Err(format!("unclosed <{open}>"));
    }
    match dialect {
        Dialect::Xml if roots == 0 => Err("no root element".into()),
        Dialect::Html if elements == 0 => Err("no HTML elements".into()),
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Parses RFC-4180 records. Blank lines are dropped.
pub(crate) fn csv_records(text: &str) -> Result<Vec<Vec<String>>, String> {
    let mut records = Vec::new();
    let mut record: Vec<String> = Vec::new();
    let mut field = String::new();
    let mut chars = text.chars().peekable();
    let mut line = 1usize;

    let finish_record = |record: &mut Vec<String>, records: &mut Vec<Vec<String>>| {
        let rec = std::mem::take(record);
        let blank = rec.len() == 1 && rec[0].trim().is_empty();
        if !blank {
            records.push(rec);
        }
    };

    loop {
        // start of a field
        if chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next() {
                    None => return Err(format!("unterminated quoted field on line {line}")),
                    Some('"') if chars.peek() == Some(&'"') => {
                        chars.next();
                        field.push('"');
                    }
                    Some('"') => break,
                    Some(c) => {
                        if c == '\n' {
                            line += 1;
                        }
                        field.push(c);
                    }
                }
            }
            match chars.peek() {
                None | Some(',') | Some('\n') | Some('\r') => {}
                Some(c) => return Err(format!("unexpected '{c}' after closing quote on line {line}")),
            }
        } else {
            while let Some(&c) = chars.peek() {
                if matches!(c, ',' | '\n' | '\r') {
                    break;
                }
                if c == '"' {
                    return Err(format!("quote inside unquoted field on line {line}"));
                }
                field.push(c);
                chars.next();
            }
        }
        record.push(std::mem::take(&mut field));
        match chars.next() {
            Some(',') => continue,
            Some('\r') => {
                if chars.peek() == Some(&'\n') {
                    chars.next();
                }
                line += 1;
                finish_record(&mut record, &mut records);
            }
            Some('\n') => {
                line += 1;
                finish_record(&mut record, &mut records);
            }
            None => {
                finish_record(&mut record, &mut records);
                break;
            }
            Some(_) => unreachable!("field scanner stops only at separators"),
        }
        if chars.peek().is_none() {
            break;
        }
    }
    Ok(records)
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        "field"
    } else {
        "fields"
    }
}

fn check_csv(text: &str) -> Result<(), String> {
    let rows = csv_records(text)?;
    let Some(first) = rows.first() else {
        return Err("no rows".into());
    };
    let width = first.len();
    if width < 2 {
        return Err(format!("row 1 has {width} {}, expected at least 2", plural(width)));
    }
    for (i, row) in rows.iter().enumerate().skip(1) {
        if row.len() != width {
            return Err(format!("row {} has {} {}, expected {width}", i + 1, row.len(), plural(row.len())));
        }
    }
    if rows.len() < 2 {
        return Err(format!("expected at least 2 rows, found {}", rows.len()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Markdown
// ---------------------------------------------------------------------------

fn is_heading(line: &str) -> bool {
    let t = line.trim_start();
    let hashes = t.bytes().take_while(|b| *b == b'#').count();
    (1..=6).contains(&hashes) && t[hashes..].starts_with(' ') && !t[hashes..].trim().is_empty()
}

fn has_emphasis(line: &str) -> bool {
    ["**", "__", "*", "_"].iter().any(|d| emphasis_pair(line, d))
}

fn emphasis_pair(line: &str, delim: &str) -> bool {
    let word_delim = delim.starts_with('_');
    let mut from = 0;
    while let Some(i) = line[from..].find(delim).map(|i| i + from) {
        let before = line[..i].chars().next_back();
        let inner_start = i + delim.len();
        let after = line[inner_start..].chars().next();
        let opens = after.is_some_and(|c| !c.is_whitespace() && !delim.starts_with(c))
            && !(word_delim && before.is_some_and(char::is_alphanumeric))
            && !(delim.len() == 1 && before == delim.chars().next());
        if opens {
            let mut search = inner_start;
            while let Some(j) = line[search..].find(delim).map(|j| j + search) {
                let inner = &line[inner_start..j];
                let close_after = line[j + delim.len()..].chars().next();
                let closes = !inner.is_empty()
                    && !inner.ends_with(char::is_whitespace)
                    && !(word_delim && close_after.is_some_and(char::is_alphanumeric))
                    && !(delim.len() == 1 && close_after == delim.chars().next());
                if closes {
                    return true;
                }
                search = j + delim.len();
            }
        }
        from = inner_start;
    }
    false
}

fn check_markdown(text: &str) -> Result<(), String> {
    let mut fence_open = false;
    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            if fence_open {
                return Ok(());
            }
            fence_open = true;
            continue;
        }
        if fence_open {
            continue;
        }
        if is_heading(line) || super::is_bullet_line(line) || has_emphasis(line) {
            return Ok(());
        }
    }
    Err("no Markdown structure (heading, list item, fenced block or emphasis)".into())
}
