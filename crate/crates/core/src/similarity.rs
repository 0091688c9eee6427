//! String matchers between model element names and use case phrases.

use crate::lexicon::{Lexicon, Relation};

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Number of matched characters of a global alignment with match = +1 and
/// mismatch = gap = 0.
pub fn alignment_matches(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            let diag = prev[j] + usize::from(ca == cb);
            cur[j + 1] = diag.max(prev[j + 1]).max(cur[j]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Lowercase, article-free, whitespace-free form of a phrase.
pub fn squash(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .filter(|w| !ARTICLES.contains(&w.to_ascii_lowercase().as_str()))
        .collect::<String>()
        .to_ascii_lowercase()
}

/// Alignment similarity between a class name and a noun phrase.
pub fn class_similarity(name: &str, phrase: &str) -> f64 {
    let a: Vec<char> = squash(name).chars().collect();
    let b: Vec<char> = squash(phrase).chars().collect();
    let longest = a.len().max(b.len());
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    alignment_matches(&a, &b) as f64 / longest as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttrMatch {
    pub score: f64,
    /// The phrase names the opposite of the member (`disqualifies` for `isQualified`).
    pub antonym: bool,
}

/// Splits a camelCase identifier into lowercase words.
pub fn camel_words(ident: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let chars: Vec<char> = ident.chars().collect();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let boundary = c.is_uppercase()
            && i > 0
            && (chars[i - 1].is_lowercase() || chars.get(i + 1).is_some_and(|n| n.is_lowercase()));
        if (boundary || c == '_') && !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        if c != '_' {
            cur.push(c.to_ascii_lowercase());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Similarity of an attribute or association name to a phrase. The phrase is
/// compared both with and without inner articles.
pub fn attr_similarity(member: &str, phrase: &str, lex: &Lexicon) -> Option<AttrMatch> {
    let words: Vec<String> = phrase.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    let without: String = words.iter().filter(|w| !ARTICLES.contains(&w.as_str())).cloned().collect();
    let with: String = words.concat();
    let m = member.to_ascii_lowercase();
    let mut best: Option<AttrMatch> = None;
    for p in [with, without] {
        if let Some(s) = affix_score(&m, &p) {
            if best.map_or(true, |b| s > b.score) {
                best = Some(AttrMatch { score: s, antonym: false });
            }
        }
    }
    if best.is_some() {
        return best;
    }
    let member_len = m.chars().count() as f64;
    for mw in camel_words(member) {
        if mw.len() < 3 {
            continue;
        }
        for pw in &words {
            if pw.len() < 3 || ARTICLES.contains(&pw.as_str()) {
                continue;
            }
            let rel = lex.related(&mw, pw);
            let antonym = match rel {
                Relation::Synonym => false,
                Relation::Antonym => true,
                _ => continue,
            };
            let score = mw.chars().count() as f64 / member_len;
            if best.map_or(true, |b| score > b.score) {
                best = Some(AttrMatch { score, antonym });
            }
        }
    }
    best
}

fn affix_score(member: &str, phrase: &str) -> Option<f64> {
    if member.is_empty() || phrase.is_empty() {
        return None;
    }
    let ml = member.chars().count() as f64;
    if member.starts_with(phrase) || member.ends_with(phrase) {
        Some(phrase.chars().count() as f64 / ml)
    } else if phrase.starts_with(member) || phrase.ends_with(member) {
        Some(1.0)
    } else {
        None
    }
}
