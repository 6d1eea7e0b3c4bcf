//! Document ingestion: boilerplate stripping, sentence segmentation and
//! stopword filtering.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::ops::Range;

use crate::{Error, Result};

const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Lowercase abbreviations whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "jr", "sr", "prof", "rev", "hon", "gen", "col", "capt", "lt", "sgt", "gov",
    "messrs", "mme", "mlle", "vs", "etc", "viz", "cf", "vol", "ch", "chap", "no", "fig", "p", "pp", "ed", "e.g", "i.e",
    "a.m", "p.m", "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "mt", "ft",
    "co", "inc", "ltd",
];

const TERMINALS: &[char] = &['.', '!', '?'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}', '\u{bb}', '_'];

/// A book or other long text with its catalogue metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub author: String,
    pub label: Option<String>,
    pub body: String,
}

impl Document {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        author: impl Into<String>,
        label: Option<String>,
        body: impl Into<String>,
    ) -> Result<Self> {
        let id = id.into();
        let body = body.into();
        if body.trim().is_empty() {
            return Err(Error::InvalidDocument(alloc::format!("document `{id}` has an empty body")));
        }
        Ok(Self { id, title: title.into(), author: author.into(), label, body })
    }
}

/// A token-filtered sentence. `span` is a byte range into the document body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub span: Range<usize>,
    pub tokens: Vec<String>,
}

/// Result of [`strip_boilerplate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stripped<'a> {
    pub text: &'a str,
    /// `false` when the start/end markers were not both found and the input
    /// was returned unchanged.
    pub markers_found: bool,
}

/// Returns the text between the Project Gutenberg `*** START ... ***` and
/// `*** END ... ***` markers, or the input unchanged when they are missing.
pub fn strip_boilerplate(raw: &str) -> Result<Stripped<'_>> {
    if raw.is_empty() {
        return Err(Error::InvalidDocument("empty input".to_string()));
    }
    let unchanged = Stripped { text: raw, markers_found: false };

    let Some((_, start_close)) = find_marker(raw, 0, "START") else {
        return Ok(unchanged);
    };
    let Some((end_open, _)) = find_marker(raw, start_close, "END") else {
        return Ok(unchanged);
    };
    Ok(Stripped { text: raw[start_close..end_open].trim(), markers_found: true })
}

/// Finds `*** <KEYWORD> ... ***` at or after `from`; returns the byte offset of
/// the opening stars and the offset just past the closing stars (or the end of
/// the line when the closing stars are missing).
fn find_marker(raw: &str, from: usize, keyword: &str) -> Option<(usize, usize)> {
    let mut cursor = from;
    while let Some(pos) = raw[cursor..].find("***") {
        let open = cursor + pos;
        let after = raw[open..].trim_start_matches('*').trim_start();
        if after.len() >= keyword.len() && after[..keyword.len()].eq_ignore_ascii_case(keyword) {
            let body_from = raw.len() - after.len();
            let line_end = raw[body_from..].find('\n').map_or(raw.len(), |p| body_from + p);
            let close = raw[body_from..line_end]
                .find("***")
                .map(|p| {
                    let stars = body_from + p;
                    stars + raw[stars..].len() - raw[stars..].trim_start_matches('*').len()
                })
                .unwrap_or(line_end);
            return Some((open, close));
        }
        cursor = open + 3;
    }
    None
}

/// Splits `body` into sentence spans on `.`, `!` and `?`.
///
/// A terminal run may be followed by closing quotes or brackets, which stay in
/// the sentence. A period does not end a sentence after a known abbreviation,
/// after a single-letter initial, or when the next word starts lowercase. Any
/// trailing text without a terminal becomes the last span.
pub fn segment_sentences(body: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut chars = body.char_indices().peekable();

    while let Some((i, c)) = chars.next() {
        if start.is_none() {
            if c.is_whitespace() {
                continue;
            }
            start = Some(i);
        }
        if !TERMINALS.contains(&c) {
            continue;
        }
        let mut end = i + c.len_utf8();
        let mut run = 1;
        while let Some(&(j, next)) = chars.peek() {
            if TERMINALS.contains(&next) {
                run += 1;
            } else if !CLOSERS.contains(&next) {
                break;
            }
            end = j + next.len_utf8();
            chars.next();
        }
        let rest = &body[end..];
        if rest.chars().next().is_some_and(|n| !n.is_whitespace()) {
            continue;
        }
        let sentence_start = start.expect("start set above");
        if c == '.' && run == 1 && is_guarded_period(&body[sentence_start..i], rest) {
            continue;
        }
        spans.push(sentence_start..end);
        start = None;
    }
    if let Some(s) = start {
        let end = s + body[s..].trim_end().len();
        spans.push(s..end);
    }
    spans
}

fn is_guarded_period(before: &str, after: &str) -> bool {
    let word_start = before
        .char_indices()
        .rev()
        .find(|&(_, c)| !(c.is_alphabetic() || c == '.'))
        .map_or(0, |(p, c)| p + c.len_utf8());
    let word = before[word_start..].trim_start_matches('.');
    if word.is_empty() {
        return false;
    }
    let mut letters = word.chars();
    if let (Some(first), None) = (letters.next(), letters.next()) {
        // Single capital letters are initials, except the pronoun.
        if first.is_uppercase() && first != 'I' {
            return true;
        }
    }
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    after.trim_start().chars().find(|c| c.is_alphanumeric()).is_some_and(char::is_lowercase)
}

/// A lowercased stopword set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWords(BTreeSet<String>);

impl StopWords {
    /// The bundled English list (153 words).
    pub fn english() -> Self {
        Self::parse(ENGLISH_STOPWORDS)
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

impl<S: AsRef<str>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }
}

/// Lowercases, splits on non-alphabetic characters and drops stopwords.
pub fn tokenize_filter(text: &str, stopwords: &StopWords) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty() && !stopwords.contains(t))
        .map(String::from)
        .collect()
}

/// Segments and tokenizes a document body. Sentences left without any content
/// token are skipped; survivors are indexed `0..S` in text order.
pub fn sentences(doc_id: &str, body: &str, stopwords: &StopWords) -> Vec<Sentence> {
    segment_sentences(body)
        .into_iter()
        .filter_map(|span| {
            let tokens = tokenize_filter(&body[span.clone()], stopwords);
            (!tokens.is_empty()).then_some((span, tokens))
        })
        .enumerate()
        .map(|(index, (span, tokens))| Sentence { doc_id: doc_id.to_string(), index, span, tokens })
        .collect()
}
