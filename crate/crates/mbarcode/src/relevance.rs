//! Relevance files: one query per line, `<query_id> <relevant_id> ...`.
//! Blank lines and lines starting with `#` are ignored.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use mbarcode_core::Relevance;

use crate::error::{self, Error, Result};

pub fn decode(text: &str, path: &Path) -> Result<Relevance> {
    let mut relevance = Relevance::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut ids = line.split_whitespace();
        let query = ids.next().unwrap_or_default();
        let relevant: Vec<&str> = ids.collect();
        if relevant.is_empty() {
            return Err(Error::format(
                path,
                Some(i + 1),
                format!("query {query} lists no relevant clips"),
            ));
        }
        if !seen.insert(query.to_string()) {
            return Err(Error::format(
                path,
                Some(i + 1),
                format!("query {query} listed twice"),
            ));
        }
        relevance.push(query, relevant);
    }
    Ok(relevance)
}

pub fn encode(relevance: &Relevance) -> String {
    let mut out = String::new();
    for (query, relevant) in relevance.iter() {
        out.push_str(query);
        for r in relevant {
            write!(out, " {r}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read(path: &Path) -> Result<Relevance> {
    decode(&error::read_to_string(path)?, path)
}

pub fn write(relevance: &Relevance, path: &Path) -> Result<()> {
    error::write(path, encode(relevance))
}
