//! Locating and decoding the mapping JSON inside a raw model reply.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no JSON object or array found in the response")]
    JsonNotFound,
    #[error("response JSON does not match the mapping schema: {0}")]
    SchemaInvalid(String),
}

/// One `{src, tgt}` record as the model returned it. Indices are kept
/// signed so that negative values reach the repair step instead of failing
/// decoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingRecord {
    pub src: Vec<i64>,
    pub tgt: Vec<i64>,
}

impl MappingRecord {
    pub fn new(src: Vec<i64>, tgt: Vec<i64>) -> Self {
        MappingRecord { src, tgt }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MappingResponse {
    pub alignments: Vec<MappingRecord>,
}

fn decode(value: Value) -> Result<MappingResponse, String> {
    match value {
        // a bare list of records is accepted as the alignment list
        Value::Array(_) => serde_json::from_value::<Vec<MappingRecord>>(value)
            .map(|alignments| MappingResponse { alignments })
            .map_err(|e| e.to_string()),
        other => serde_json::from_value(other).map_err(|e| e.to_string()),
    }
}

/// Outcome of scanning one region of text for top-level JSON values.
enum Scan {
    Found(MappingResponse),
    Mismatch(String),
    Nothing,
}

/// Tries each `{` or `[` in order. A position that starts a complete JSON
/// value is a top-level candidate; scanning resumes after its end so that
/// nested values are never mistaken for the whole response.
fn scan(text: &str) -> Scan {
    let mut first_mismatch = None;
    let mut pos = 0;
    while let Some(rel) = text[pos..].find(['{', '[']) {
        let start = pos + rel;
        let mut stream = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        match stream.next() {
            Some(Ok(value)) => {
                let end = start + stream.byte_offset();
                match decode(value) {
                    Ok(resp) => return Scan::Found(resp),
                    Err(detail) => {
                        first_mismatch.get_or_insert(detail);
                    }
                }
                pos = end;
            }
            _ => pos = start + 1,
        }
    }
    match first_mismatch {
        Some(detail) => Scan::Mismatch(detail),
        None => Scan::Nothing,
    }
}

/// Contents of each Markdown code fence, in order.
fn fenced_blocks(text: &str) -> Vec<&str> {
    let mut blocks = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        let Some(newline) = after.find('\n') else { break };
        let body = &after[newline + 1..];
        let Some(close) = body.find("```") else {
            blocks.push(body);
            break;
        };
        blocks.push(&body[..close]);
        rest = &body[close + 3..];
    }
    blocks
}

/// Removes commas that directly precede `]` or `}` outside of strings.
fn strip_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let (mut in_string, mut escaped) = (false, false);
    for (i, &c) in chars.iter().enumerate() {
        if in_string {
            out.push(c);
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        if c == '"' {
            in_string = true;
        } else if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some(']') | Some('}')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Finds the mapping JSON in a raw reply, tolerating Markdown fences,
/// surrounding prose and trailing commas.
pub fn extract_json(raw: &str) -> Result<MappingResponse, ExtractError> {
    let mut first_mismatch = None;
    let repaired = strip_trailing_commas(raw);
    let regions = fenced_blocks(raw)
        .into_iter()
        .chain([raw])
        .chain((repaired != raw).then_some(repaired.as_str()));
    for region in regions {
        match scan(region) {
            Scan::Found(resp) => return Ok(resp),
            Scan::Mismatch(detail) => {
                first_mismatch.get_or_insert(detail);
            }
            Scan::Nothing => {}
        }
    }
    Err(match first_mismatch {
        Some(detail) => ExtractError::SchemaInvalid(detail),
        None => ExtractError::JsonNotFound,
    })
}
