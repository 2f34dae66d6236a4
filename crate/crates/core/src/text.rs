//! Small text helpers shared by the embedder, the mock writer and the cost model.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// A single `from -> to` token substitution carried by a query.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Substitution {
    pub from: String,
    pub to: String,
}

impl Substitution {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
        }
    }
}

/// Whitespace token count, used as a provider-independent token estimate.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Lowercased alphanumeric terms of `text`, in order of appearance.
pub fn terms(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '_' && c != '-')
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn term_set(text: &str) -> BTreeSet<String> {
    terms(text).into_iter().collect()
}

/// Replaces whole whitespace-delimited tokens. Leading and trailing ASCII
/// punctuation around a token is preserved, so `"sink."` still matches `sink`.
pub fn apply_substitutions(text: &str, subs: &[Substitution]) -> String {
    if subs.is_empty() {
        return text.to_string();
    }
    let mut out = String::with_capacity(text.len());
    let mut token = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            flush_token(&mut out, &mut token, subs);
            out.push(c);
        } else {
            token.push(c);
        }
    }
    flush_token(&mut out, &mut token, subs);
    out
}

fn flush_token(out: &mut String, token: &mut String, subs: &[Substitution]) {
    if token.is_empty() {
        return;
    }
    let start = token
        .find(|c: char| !c.is_ascii_punctuation())
        .unwrap_or(token.len());
    let end = token
        .rfind(|c: char| !c.is_ascii_punctuation())
        .map(|i| i + token[i..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(start);
    let core = &token[start..end.max(start)];
    match subs.iter().find(|s| s.from == core) {
        Some(s) => {
            out.push_str(&token[..start]);
            out.push_str(&s.to);
            out.push_str(&token[end.max(start)..]);
        }
        None => out.push_str(token),
    }
    token.clear();
}

/// Applies substitutions to a tag set (exact tag match).
pub fn substitute_tags(tags: &BTreeSet<String>, subs: &[Substitution]) -> BTreeSet<String> {
    tags.iter()
        .map(|t| {
            subs.iter()
                .find(|s| &s.from == t)
                .map_or_else(|| t.clone(), |s| s.to.clone())
        })
        .collect()
}
