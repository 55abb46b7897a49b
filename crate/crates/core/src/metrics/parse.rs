use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::qa::AnswerFormat;
use crate::scene::BBox;

/// A model answer reduced to the payload its task is scored on.
#[derive(Clone, Debug, PartialEq)]
pub enum StructuredAnswer {
    Boxes(Vec<BBox>),
    Points(Vec<(f64, f64)>),
    Choice(char),
    Open(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseFailure {
    pub expected: AnswerFormat,
    pub reason: String,
}

impl fmt::Display for ParseFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "could not parse a {:?} answer: {}", self.expected, self.reason)
    }
}

/// Bodies of every `<tag>…</tag>` occurrence, in order.
fn tag_bodies<'a>(text: &'a str, tag: &str) -> Vec<&'a str> {
    let open = alloc::format!("<{tag}>");
    let close = alloc::format!("</{tag}>");
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find(&open) {
        let after = &rest[start + open.len()..];
        match after.find(&close) {
            Some(end) => {
                out.push(&after[..end]);
                rest = &after[end + close.len()..];
            }
            None => break,
        }
    }
    out
}

/// Parses `[[a,b,…],[…]]` or a bare `[a,b,…]` into rows of `arity` numbers.
fn numeric_rows(body: &str, arity: usize) -> Option<Vec<Vec<f64>>> {
    let body = body.trim();
    if !body.starts_with('[') || !body.ends_with(']') {
        return None;
    }
    if body
        .chars()
        .any(|c| !(c.is_ascii_digit() || matches!(c, '[' | ']' | ',' | '.' | '-' | '+' | 'e' | 'E') || c.is_whitespace()))
    {
        return None;
    }
    let mut nums = Vec::new();
    for tok in body.split(|c: char| matches!(c, '[' | ']' | ',') || c.is_whitespace()) {
        if tok.is_empty() {
            continue;
        }
        let v: f64 = tok.parse().ok()?;
        if !v.is_finite() {
            return None;
        }
        nums.push(v);
    }
    if nums.len() % arity != 0 {
        return None;
    }
    Some(nums.chunks(arity).map(<[f64]>::to_vec).collect())
}

fn parse_choice_body(body: &str) -> Option<char> {
    let t = body.trim().trim_matches(|c: char| matches!(c, '(' | ')' | '.' | '*' | '"' | '\''));
    let mut chars = t.chars();
    let c = chars.next()?.to_ascii_uppercase();
    (chars.next().is_none() && ('A'..='F').contains(&c)).then_some(c)
}

/// Extracts the first well-formed answer of `expected` kind, ignoring any
/// surrounding prose. Box corners come back normalized.
pub fn parse_answer(text: &str, expected: AnswerFormat) -> Result<StructuredAnswer, ParseFailure> {
    let fail = |reason: &str| ParseFailure {
        expected,
        reason: reason.to_string(),
    };
    match expected {
        AnswerFormat::Boxes => tag_bodies(text, "box")
            .into_iter()
            .find_map(|b| numeric_rows(b, 4))
            .map(|rows| {
                StructuredAnswer::Boxes(
                    rows.iter()
                        .map(|r| {
                            let q = |v: f64| libm::round(v) as i64;
                            BBox::new(q(r[0]), q(r[1]), q(r[2]), q(r[3])).normalized()
                        })
                        .collect(),
                )
            })
            .ok_or_else(|| fail("no well-formed <box> tag")),
        AnswerFormat::Points => tag_bodies(text, "point")
            .into_iter()
            .find_map(|b| numeric_rows(b, 2))
            .map(|rows| StructuredAnswer::Points(rows.iter().map(|r| (r[0], r[1])).collect()))
            .ok_or_else(|| fail("no well-formed <point> tag")),
        AnswerFormat::Choice => {
            let boxed = text.find("boxed{").and_then(|i| {
                let rest = &text[i + 6..];
                rest.find('}').map(|j| &rest[..j])
            });
            tag_bodies(text, "choice")
                .into_iter()
                .chain(boxed)
                .find_map(parse_choice_body)
                .map(StructuredAnswer::Choice)
                .ok_or_else(|| fail("no well-formed <choice> tag"))
        }
        AnswerFormat::Open => {
            let t = text.trim();
            if t.is_empty() {
                Err(fail("empty answer"))
            } else {
                Ok(StructuredAnswer::Open(t.to_string()))
            }
        }
    }
}

/// First decimal number in `text`, if any.
pub fn first_number(text: &str) -> Option<f64> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let neg = i > 0 && bytes[i - 1] == b'-';
            let start = if neg { i - 1 } else { i };
            let mut end = i;
            let mut seen_dot = false;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || (bytes[end] == b'.' && !seen_dot)) {
                seen_dot |= bytes[end] == b'.';
                end += 1;
            }
            let s = text[start..end].trim_end_matches('.');
            return s.parse().ok();
        }
        i += 1;
    }
    None
}
