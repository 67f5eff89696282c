//! Citation-key extraction and bibliography membership.
//!
//! Recognised commands are `\cite`, `\citep` and `\citet`, each with
//! optional `*` and up to two optional `[...]` arguments before the key
//! group. Other macros such as `\citeauthor` are ignored.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

const COMMANDS: [&str; 3] = ["citep", "citet", "cite"];

/// A cite command whose key group could not be read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    /// Byte offset of the backslash that starts the command.
    pub offset: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CiteKeys {
    /// Unique keys in first-occurrence order.
    pub keys: Vec<String>,
    pub warnings: Vec<ParseWarning>,
}

/// Length of the command name starting at `rest` (just after the backslash),
/// if it is one of the recognised cite commands.
fn command_len(rest: &str) -> Option<usize> {
    COMMANDS.iter().find_map(|c| {
        let tail = rest.strip_prefix(c)?;
        match tail.chars().next() {
            Some(ch) if ch.is_ascii_alphabetic() => None,
            _ => Some(c.len()),
        }
    })
}

fn skip_ws(text: &str, mut i: usize) -> usize {
    while let Some(ch) = text[i..].chars().next() {
        if !ch.is_whitespace() {
            break;
        }
        i += ch.len_utf8();
    }
    i
}

/// Parse the argument list after a command name; returns the key group and
/// the offset just past it.
fn key_group(text: &str, mut i: usize) -> Result<(&str, usize), String> {
    i = skip_ws(text, i);
    if text[i..].starts_with('*') {
        i = skip_ws(text, i + 1);
    }
    for _ in 0..2 {
        if !text[i..].starts_with('[') {
            break;
        }
        let close = text[i..].find(']').ok_or("unterminated optional argument")?;
        i = skip_ws(text, i + close + 1);
    }
    if !text[i..].starts_with('{') {
        return Err("missing key group".into());
    }
    let body_start = i + 1;
    for (j, ch) in text[body_start..].char_indices() {
        match ch {
            '}' => return Ok((&text[body_start..body_start + j], body_start + j + 1)),
            '{' => return Err("unbalanced braces in key group".into()),
            _ => {}
        }
    }
    Err("unbalanced braces in key group".into())
}

/// Keys of every `\cite{..}`, `\citep{..}` and `\citet{..}` in `manuscript`.
pub fn extract_cite_keys(manuscript: &str) -> CiteKeys {
    let mut out = CiteKeys::default();
    let mut seen = BTreeSet::new();
    let mut pos = 0;
    while let Some(found) = manuscript[pos..].find('\\') {
        let start = pos + found;
        let name_start = start + 1;
        let Some(len) = command_len(&manuscript[name_start..]) else {
            pos = name_start;
            continue;
        };
        match key_group(manuscript, name_start + len) {
            Ok((group, end)) => {
                for key in group.split(',').map(str::trim).filter(|k| !k.is_empty()) {
                    if seen.insert(key.to_string()) {
                        out.keys.push(key.to_string());
                    }
                }
                pos = end;
            }
            Err(message) => {
                out.warnings.push(ParseWarning { offset: start, message });
                pos = name_start + len;
            }
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum BibliographyError {
    #[error("cannot read bibliography {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid bibliography {path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

/// The set of citation keys a manuscript may use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bibliography {
    pub keys: BTreeSet<String>,
    pub source_path: PathBuf,
}

fn entry_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\s*([A-Za-z]+)\s*[{(]\s*([^,\s{}()]+)\s*,").unwrap())
}

impl Bibliography {
    /// Parse a JSON array of keys (if the text starts with `[`) or BibTeX.
    pub fn parse(text: &str, source_path: &Path) -> Result<Self, BibliographyError> {
        let invalid = |message: String| BibliographyError::Invalid {
            path: source_path.to_path_buf(),
            message,
        };
        let keys: BTreeSet<String> = if text.trim_start().starts_with('[') {
            let list: Vec<String> = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
            for key in &list {
                if key.is_empty() || key.chars().any(char::is_whitespace) {
                    return Err(invalid(format!("key {key:?} is empty or contains whitespace")));
                }
            }
            list.into_iter().collect()
        } else {
            entry_regex()
                .captures_iter(text)
                .filter(|c| !matches!(c[1].to_ascii_lowercase().as_str(), "comment" | "string" | "preamble"))
                .map(|c| c[2].to_string())
                .collect()
        };
        Ok(Bibliography {
            keys,
            source_path: source_path.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, BibliographyError> {
        let text = fs::read_to_string(path).map_err(|source| BibliographyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn from_keys<I: IntoIterator<Item = S>, S: Into<String>>(keys: I) -> Self {
        Bibliography {
            keys: keys.into_iter().map(Into::into).collect(),
            source_path: PathBuf::new(),
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        self.keys.contains(key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    /// Missing keys in manuscript order.
    Fail { missing: Vec<String> },
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Pass => EXIT_PASS,
            Verdict::Fail { .. } => EXIT_FAIL,
        }
    }
}

pub fn verify_citations(keys: &[String], bib: &Bibliography) -> Verdict {
    let missing: Vec<String> = keys.iter().filter(|k| !bib.contains(k)).cloned().collect();
    if missing.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail { missing }
    }
}
