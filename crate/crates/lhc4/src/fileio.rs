//! File formats for tables and codes.
//!
//! Text tables: a header `latin <order> <ndims> <d1> .. <dn>` followed by
//! the cell symbols as digit characters in row-major order, last axis
//! fastest; whitespace is insignificant beyond separation. Structured
//! tables: a JSON object `{order, dims, cells}` with `cells` a digit
//! string in the same order. Codes: a header `code <order> <n>` followed
//! by one digit word per member, ascending.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qcore::{CodeSet, HypercuboidTable, Shape, TableError};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("invalid json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid table: {0}")]
    Table(#[from] TableError),
}

/// Which surface syntax a table arrived in; completion output mirrors it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocKind {
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Document {
    Table {
        table: HypercuboidTable,
        kind: DocKind,
    },
    Code(CodeSet),
}

#[derive(Serialize, Deserialize)]
struct TableDoc {
    order: usize,
    dims: Vec<usize>,
    cells: String,
}

fn digits_of(tokens: &[&str]) -> Result<Vec<u8>, ParseError> {
    let mut out = Vec::new();
    for token in tokens {
        for ch in token.chars() {
            let d = ch
                .to_digit(10)
                .ok_or_else(|| ParseError::Malformed(format!("expected digit, found {ch:?}")))?;
            out.push(d as u8);
        }
    }
    Ok(out)
}

/// Parses a table or code document, sniffing the syntax from the first
/// non-whitespace byte / header word.
pub fn parse_document(input: &str) -> Result<Document, ParseError> {
    let trimmed = input.trim_start();
    if trimmed.starts_with('{') {
        let doc: TableDoc = serde_json::from_str(trimmed)?;
        let shape = Shape::new(doc.order, doc.dims)?;
        let cells = digits_of(&[doc.cells.as_str()])?;
        let table = HypercuboidTable::new(shape, cells)?;
        return Ok(Document::Table {
            table,
            kind: DocKind::Json,
        });
    }
    let tokens: Vec<&str> = trimmed.split_whitespace().collect();
    match tokens.first() {
        Some(&"latin") => {
            if tokens.len() < 3 {
                return Err(ParseError::Malformed("truncated latin header".into()));
            }
            let order: usize = tokens[1]
                .parse()
                .map_err(|_| ParseError::Malformed("bad order".into()))?;
            let ndims: usize = tokens[2]
                .parse()
                .map_err(|_| ParseError::Malformed("bad dimension count".into()))?;
            if ndims == 0 || tokens.len() < 3 + ndims {
                return Err(ParseError::Malformed("truncated dimension list".into()));
            }
            let dims: Vec<usize> = tokens[3..3 + ndims]
                .iter()
                .map(|t| t.parse().map_err(|_| ParseError::Malformed("bad axis".into())))
                .collect::<Result<_, _>>()?;
            let shape = Shape::new(order, dims)?;
            let cells = digits_of(&tokens[3 + ndims..])?;
            let table = HypercuboidTable::new(shape, cells)?;
            Ok(Document::Table {
                table,
                kind: DocKind::Text,
            })
        }
        Some(&"code") => {
            if tokens.len() < 3 {
                return Err(ParseError::Malformed("truncated code header".into()));
            }
            let order: usize = tokens[1]
                .parse()
                .map_err(|_| ParseError::Malformed("bad order".into()))?;
            let n: usize = tokens[2]
                .parse()
                .map_err(|_| ParseError::Malformed("bad word length".into()))?;
            if order < 2 || order > 10 || n == 0 {
                return Err(ParseError::Malformed("bad code header".into()));
            }
            let digits = digits_of(&tokens[3..])?;
            if digits.len() % n != 0 {
                return Err(ParseError::Malformed(
                    "code body is not a whole number of words".into(),
                ));
            }
            let mut code = CodeSet::empty(order, n);
            for word in digits.chunks(n) {
                if word.iter().any(|&d| d as usize >= order) {
                    return Err(ParseError::Malformed("code symbol out of range".into()));
                }
                code.insert(word);
            }
            Ok(Document::Code(code))
        }
        _ => Err(ParseError::Malformed(
            "expected a latin/code header or a json object".into(),
        )),
    }
}

/// Canonical text form: header line, then one line per last-axis run.
pub fn table_to_text(t: &HypercuboidTable) -> String {
    let shape = t.shape();
    let mut out = format!("latin {} {}", shape.order(), shape.ndims());
    for d in shape.dims() {
        out.push_str(&format!(" {d}"));
    }
    out.push('\n');
    for run in t.cells().chunks(shape.last_dim()) {
        let line: Vec<String> = run.iter().map(|c| c.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Canonical structured form: compact JSON object plus a trailing newline.
pub fn table_to_json(t: &HypercuboidTable) -> String {
    let doc = TableDoc {
        order: t.shape().order(),
        dims: t.shape().dims().to_vec(),
        cells: t.cells().iter().map(|c| c.to_string()).collect(),
    };
    let mut out = serde_json::to_string(&doc).expect("table doc serializes");
    out.push('\n');
    out
}

pub fn table_to_string(t: &HypercuboidTable, kind: DocKind) -> String {
    match kind {
        DocKind::Text => table_to_text(t),
        DocKind::Json => table_to_json(t),
    }
}

/// Canonical code form: header line, then one digit word per member in
/// ascending bit-index order.
pub fn code_to_text(c: &CodeSet) -> String {
    let mut out = format!("code {} {}\n", c.order(), c.word_len());
    for word in c.words() {
        for d in word {
            out.push((b'0' + d) as char);
        }
        out.push('\n');
    }
    out
}
