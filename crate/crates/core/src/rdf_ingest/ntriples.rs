//! Line-oriented N-Triples parser.
//!
//! Only what a single physical line can carry is handled: IRIs, blank
//! nodes and literals with an optional language tag or datatype. Turtle
//! prefixes and abbreviations are rejected as malformed.

use std::fmt;

use crate::langcodes::{normalize_tag, LanguageTag};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Subject {
    Iri(String),
    Blank(String),
}

impl Subject {
    /// Stable identifier used for distinct counting. Blank nodes keep their
    /// `_:` prefix so they never collide with (absolute) IRIs.
    pub fn key(&self) -> std::borrow::Cow<'_, str> {
        match self {
            Subject::Iri(iri) => std::borrow::Cow::Borrowed(iri),
            Subject::Blank(label) => std::borrow::Cow::Owned(format!("_:{label}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub lexical_form: String,
    pub language_tag: Option<LanguageTag>,
    pub datatype_iri: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Object {
    Iri(String),
    Blank(String),
    Literal(Literal),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub subject: Subject,
    pub predicate: String,
    pub object: Object,
}

impl Triple {
    pub fn language_tag(&self) -> Option<&LanguageTag> {
        match &self.object {
            Object::Literal(lit) => lit.language_tag.as_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub offset: usize,
    pub reason: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "byte {}: {}", self.offset, self.reason)
    }
}

impl std::error::Error for SyntaxError {}

/// Parses one line. Blank and comment lines yield `Ok(None)`.
pub fn parse_ntriples_line(line: &str) -> Result<Option<Triple>, SyntaxError> {
    let mut cursor = Cursor {
        text: line,
        pos: 0,
    };
    cursor.skip_ws();
    if cursor.at_end() || cursor.peek() == Some(b'#') {
        return Ok(None);
    }

    let subject = match cursor.peek() {
        Some(b'<') => Subject::Iri(cursor.iri()?),
        Some(b'_') => Subject::Blank(cursor.blank_node()?),
        _ => return Err(cursor.error("expected IRI or blank node as subject")),
    };
    cursor.require_ws()?;
    let predicate = match cursor.peek() {
        Some(b'<') => cursor.iri()?,
        _ => return Err(cursor.error("expected IRI as predicate")),
    };
    cursor.require_ws()?;
    let object = match cursor.peek() {
        Some(b'<') => Object::Iri(cursor.iri()?),
        Some(b'_') => Object::Blank(cursor.blank_node()?),
        Some(b'"') => Object::Literal(cursor.literal()?),
        _ => return Err(cursor.error("expected IRI, blank node or literal as object")),
    };
    cursor.skip_ws();
    if cursor.peek() != Some(b'.') {
        return Err(cursor.error("expected `.` terminating the triple"));
    }
    cursor.pos += 1;
    cursor.skip_ws();
    if !cursor.at_end() && cursor.peek() != Some(b'#') {
        return Err(cursor.error("unexpected content after `.`"));
    }
    Ok(Some(Triple {
        subject,
        predicate,
        object,
    }))
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn bytes(&self) -> &'a [u8] {
        self.text.as_bytes()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes().get(self.pos).copied()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.text.len()
    }

    fn error(&self, reason: impl Into<String>) -> SyntaxError {
        SyntaxError {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
    }

    fn require_ws(&mut self) -> Result<(), SyntaxError> {
        let start = self.pos;
        self.skip_ws();
        if self.pos == start {
            return Err(self.error("expected whitespace between terms"));
        }
        Ok(())
    }

    fn iri(&mut self) -> Result<String, SyntaxError> {
        debug_assert_eq!(self.peek(), Some(b'<'));
        self.pos += 1;
        let mut out = String::new();
        loop {
            let rest = &self.text[self.pos..];
            let Some(ch) = rest.chars().next() else {
                return Err(self.error("unterminated IRI"));
            };
            match ch {
                '>' => {
                    self.pos += 1;
                    break;
                }
                '\\' => {
                    let decoded = self.unicode_escape(false)?;
                    out.push(decoded);
                }
                ' ' | '<' | '"' | '{' | '}' | '|' | '^' | '`' => {
                    return Err(self.error(format!("character {ch:?} not allowed in IRI")));
                }
                c if (c as u32) <= 0x20 => {
                    return Err(self.error("control character in IRI"));
                }
                c => {
                    out.push(c);
                    self.pos += c.len_utf8();
                }
            }
        }
        if out.is_empty() {
            return Err(self.error("empty IRI"));
        }
        Ok(out)
    }

    fn blank_node(&mut self) -> Result<String, SyntaxError> {
        if !self.text[self.pos..].starts_with("_:") {
            return Err(self.error("expected `_:` blank node prefix"));
        }
        self.pos += 2;
        let start = self.pos;
        while let Some(b) = self.peek() {
            if b.is_ascii_whitespace() || b == b'<' || b == b'"' {
                break;
            }
            self.pos += 1;
        }
        // a label may contain `.` but never end with it
        while self.pos > start && self.bytes()[self.pos - 1] == b'.' {
            self.pos -= 1;
        }
        if self.pos == start {
            return Err(self.error("empty blank node label"));
        }
        Ok(self.text[start..self.pos].to_string())
    }

    fn literal(&mut self) -> Result<Literal, SyntaxError> {
        debug_assert_eq!(self.peek(), Some(b'"'));
        self.pos += 1;
        let mut lexical_form = String::new();
        loop {
            let rest = &self.text[self.pos..];
            let Some(ch) = rest.chars().next() else {
                return Err(self.error("unterminated literal"));
            };
            match ch {
                '"' => {
                    self.pos += 1;
                    break;
                }
                '\\' => {
                    let decoded = self.unicode_escape(true)?;
                    lexical_form.push(decoded);
                }
                '\n' | '\r' => return Err(self.error("raw line break in literal")),
                c => {
                    lexical_form.push(c);
                    self.pos += c.len_utf8();
                }
            }
        }

        let mut literal = Literal {
            lexical_form,
            language_tag: None,
            datatype_iri: None,
        };
        match self.peek() {
            Some(b'@') => {
                self.pos += 1;
                let start = self.pos;
                while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'-') {
                    self.pos += 1;
                }
                let raw = &self.text[start..self.pos];
                if !valid_lang_tag(raw) {
                    return Err(SyntaxError {
                        offset: start,
                        reason: format!("malformed language tag `{raw}`"),
                    });
                }
                let tag = normalize_tag(raw).map_err(|e| SyntaxError {
                    offset: start,
                    reason: e.to_string(),
                })?;
                literal.language_tag = Some(tag);
            }
            Some(b'^') => {
                if !self.text[self.pos..].starts_with("^^<") {
                    return Err(self.error("expected `^^<` datatype"));
                }
                self.pos += 2;
                literal.datatype_iri = Some(self.iri()?);
            }
            _ => {}
        }
        Ok(literal)
    }

    /// Decodes the escape sequence at the cursor. String escapes such as
    /// `\n` are only valid inside literals.
    fn unicode_escape(&mut self, in_literal: bool) -> Result<char, SyntaxError> {
        let start = self.pos;
        let kind = self.bytes().get(self.pos + 1).copied();
        let simple = match kind {
            Some(b't') => Some('\t'),
            Some(b'b') => Some('\u{8}'),
            Some(b'n') => Some('\n'),
            Some(b'r') => Some('\r'),
            Some(b'f') => Some('\u{c}'),
            Some(b'"') => Some('"'),
            Some(b'\'') => Some('\''),
            Some(b'\\') => Some('\\'),
            _ => None,
        };
        if let Some(c) = simple {
            if !in_literal {
                return Err(self.error("string escape not allowed in IRI"));
            }
            self.pos += 2;
            return Ok(c);
        }
        let digits = match kind {
            Some(b'u') => 4,
            Some(b'U') => 8,
            _ => return Err(self.error("invalid escape sequence")),
        };
        let hex_start = self.pos + 2;
        let hex = self
            .text
            .get(hex_start..hex_start + digits)
            .filter(|h| h.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| self.error("truncated unicode escape"))?;
        let value = u32::from_str_radix(hex, 16).map_err(|_| self.error("bad unicode escape"))?;
        let c = char::from_u32(value).ok_or_else(|| SyntaxError {
            offset: start,
            reason: format!("escape \\{hex} is not a Unicode scalar value"),
        })?;
        self.pos = hex_start + digits;
        Ok(c)
    }
}

fn valid_lang_tag(raw: &str) -> bool {
    let mut parts = raw.split('-');
    let Some(first) = parts.next() else {
        return false;
    };
    !first.is_empty()
        && first.bytes().all(|b| b.is_ascii_alphabetic())
        && parts.all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_alphanumeric()))
}
