//! Deterministic semantic role labeling for restricted use case sentences.
//!
//! Sentences follow a subject, verb, object, complement shape. The labeler
//! recognizes active sentences (`The system sets X to Y`), passive and
//! copular sentences (`X is detected`, `X is above 600`, `X is accessible`)
//! and transitive sentences with a non-system subject (`the driver put ...`).

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lexicon::{Lexicon, Role};
use crate::ocl::CmpOp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabelError {
    #[error("unlabelable sentence: {0}")]
    Unlabelable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Determiner {
    Indefinite,
    Some,
    Universal,
    Definite,
    Negative,
    Numeric(CmpOp, u32),
    /// Plural noun without determiner ("temperature errors").
    BarePlural,
    /// Singular noun without determiner.
    Bare,
}

impl Determiner {
    /// Universal reading of the phrase: explicit universal determiners and bare plurals.
    pub fn is_universal(self) -> bool {
        matches!(self, Determiner::Universal | Determiner::BarePlural)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecompositionKind {
    Possessive,
    Attributive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NounDecomposition {
    pub head: String,
    pub modifier: String,
    pub kind: DecompositionKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleLabeledSentence {
    /// The sentence after keyword prefixes were stripped.
    pub sentence: String,
    pub verb: String,
    pub verb_text: String,
    pub verb_negated: bool,
    pub roles: BTreeMap<Role, String>,
    /// Roles whose phrase carries its own negation ("to not detected").
    pub negated_roles: BTreeSet<Role>,
    pub decomposition: BTreeMap<Role, NounDecomposition>,
    pub determiners: BTreeMap<Role, Determiner>,
}

impl RoleLabeledSentence {
    pub fn phrase(&self, role: Role) -> Option<&str> {
        if role == Role::Verb {
            return Some(&self.verb_text);
        }
        self.roles.get(&role).map(String::as_str)
    }
}

const BE: [&str; 7] = ["is", "are", "was", "were", "be", "been", "being"];
const HAVE: [&str; 3] = ["has", "have", "had"];
const MODAL: [&str; 12] = ["will", "shall", "can", "must", "should", "may", "might", "could", "would", "does", "do", "did"];
const NEGATIONS: [&str; 2] = ["not", "never"];
const A2_PREPS: [&str; 4] = ["to", "as", "into", "onto"];
const LOC_PREPS: [&str; 3] = ["on", "in", "at"];
const MNR_PREPS: [&str; 2] = ["by", "with"];
const NUMBER_WORDS: [&str; 13] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven", "twelve",
];
const IRREGULAR: [(&str, &str); 20] = [
    ("is", "be"),
    ("are", "be"),
    ("was", "be"),
    ("were", "be"),
    ("been", "be"),
    ("be", "be"),
    ("has", "have"),
    ("have", "have"),
    ("had", "have"),
    ("sent", "send"),
    ("set", "set"),
    ("sets", "set"),
    ("put", "put"),
    ("puts", "put"),
    ("reset", "reset"),
    ("resets", "reset"),
    ("made", "make"),
    ("done", "do"),
    ("kept", "keep"),
    ("held", "hold"),
];
const IRREGULAR_PARTICIPLES: [&str; 12] =
    ["set", "put", "sent", "reset", "done", "made", "kept", "held", "shown", "given", "taken", "found"];

fn is_aux(w: &str) -> bool {
    let w = w.to_ascii_lowercase();
    BE.contains(&w.as_str()) || HAVE.contains(&w.as_str()) || MODAL.contains(&w.as_str())
}

fn is_negation(w: &str) -> bool {
    NEGATIONS.contains(&w.to_ascii_lowercase().as_str())
}

fn is_participle(w: &str) -> bool {
    let w = w.to_ascii_lowercase();
    (w.len() > 4 && w.ends_with("ed")) || IRREGULAR_PARTICIPLES.contains(&w.as_str())
}

/// Lemma of a verb form: irregular table, then lexicon, then suffix stripping.
pub fn lemma(word: &str, lex: &Lexicon) -> String {
    let w = word.to_ascii_lowercase();
    if let Some((_, l)) = IRREGULAR.iter().find(|(f, _)| *f == w) {
        return l.to_string();
    }
    if let Some(v) = lex.known_verb(&w) {
        return v.to_string();
    }
    if let Some(b) = w.strip_suffix("ied").or_else(|| w.strip_suffix("ies")) {
        return format!("{b}y");
    }
    if let Some(b) = w.strip_suffix("ed").filter(|b| b.len() >= 3) {
        return b.to_string();
    }
    if let Some(b) = w.strip_suffix('s').filter(|b| b.len() >= 3 && !b.ends_with('s')) {
        return b.to_string();
    }
    w
}

/// Removes the `The system VALIDATES THAT`, `VALIDATES THAT`, `IF` and `THEN`
/// keywords and the final period.
pub fn strip_prefixes(sentence: &str) -> String {
    let mut s = sentence.trim().trim_end_matches('.').trim().to_string();
    if let Some(pos) = s.find("VALIDATES THAT ") {
        s = s[pos + "VALIDATES THAT ".len()..].to_string();
    }
    if let Some(r) = s.strip_prefix("IF ") {
        s = r.to_string();
    }
    if let Some(r) = s.strip_suffix(" THEN") {
        s = r.to_string();
    }
    s.trim().trim_end_matches('.').trim().to_string()
}

/// Whitespace tokens, keeping a parenthesized group as one token.
fn tokenize(s: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut depth = 0usize;
    for w in s.split_whitespace() {
        let opens = w.matches('(').count();
        let closes = w.matches(')').count();
        if depth > 0 {
            let last = out.last_mut().expect("open group");
            last.push(' ');
            last.push_str(w);
        } else {
            out.push(w.trim_end_matches(',').to_string());
        }
        depth = (depth + opens).saturating_sub(closes);
    }
    out
}

fn lower(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| t.to_ascii_lowercase()).collect()
}

/// Length of the comparison phrase starting at `words[0]`, if any.
fn operator_at(words: &[String], lex: &Lexicon) -> Option<usize> {
    lex.operator_phrases().iter().find(|(p, _)| words.starts_with(p)).map(|(p, _)| p.len())
}

pub fn label(sentence: &str, lex: &Lexicon) -> Result<RoleLabeledSentence, LabelError> {
    let s = strip_prefixes(sentence);
    let toks = tokenize(&s);
    let low = lower(&toks);
    let fail = || LabelError::Unlabelable(s.clone());
    if toks.len() < 2 {
        return Err(fail());
    }
    let mut out = RoleLabeledSentence {
        sentence: s.clone(),
        verb: String::new(),
        verb_text: String::new(),
        verb_negated: false,
        roles: BTreeMap::new(),
        negated_roles: BTreeSet::new(),
        decomposition: BTreeMap::new(),
        determiners: BTreeMap::new(),
    };

    let system_subject = low.len() >= 3 && low[0] == "the" && low[1] == "system";
    if system_subject && !is_aux(&low[2]) && !is_negation(&low[2]) {
        out.roles.insert(Role::A0, toks[..2].join(" "));
        out.verb_text = toks[2].clone();
        out.verb = lemma(&toks[2], lex);
        complements(&toks[3..], lex, &mut out, false);
    } else if let Some(k) = (1..low.len()).find(|&k| is_aux(&low[k])) {
        let subject = toks[..k].join(" ");
        let mut j = k;
        let mut saw_be = false;
        while j < low.len() && (is_aux(&low[j]) || is_negation(&low[j])) {
            let w = low[j].as_str();
            if is_negation(w) {
                out.verb_negated = true;
                out.roles.insert(Role::AmNeg, toks[j].clone());
            } else if BE.contains(&w) {
                saw_be = true;
            }
            j += 1;
        }
        if j >= toks.len() {
            return Err(fail());
        }
        if saw_be && is_participle(&low[j]) {
            out.roles.insert(Role::A1, subject);
            out.verb_text = toks[j].clone();
            out.verb = lemma(&toks[j], lex);
            complements(&toks[j + 1..], lex, &mut out, true);
        } else if saw_be {
            out.roles.insert(Role::A1, subject);
            out.verb_text = toks[k].clone();
            out.verb = "be".into();
            let rest = &low[j..];
            let text = toks[j..].join(" ");
            if LOC_PREPS.contains(&rest[0].as_str()) || operator_at(rest, lex).is_some() {
                out.roles.insert(Role::AmLoc, text);
            } else if rest.iter().any(|w| w.parse::<i64>().is_ok()) {
                out.roles.insert(Role::AmLoc, text);
            } else {
                out.roles.insert(Role::AmPrd, text);
            }
        } else {
            out.roles.insert(Role::A0, subject);
            out.verb_text = toks[j].clone();
            out.verb = lemma(&toks[j], lex);
            complements(&toks[j + 1..], lex, &mut out, false);
        }
    } else {
        let k = (1..low.len())
            .find(|&k| lex.known_verb(&low[k]).is_some() || IRREGULAR.iter().any(|(f, _)| *f == low[k]))
            .ok_or_else(fail)?;
        out.roles.insert(Role::A0, toks[..k].join(" "));
        out.verb_text = toks[k].clone();
        out.verb = lemma(&toks[k], lex);
        complements(&toks[k + 1..], lex, &mut out, false);
    }

    for role in [Role::A0, Role::A1, Role::A2] {
        if let Some(p) = out.roles.get(&role) {
            out.determiners.insert(role, determiner(p));
            if let Some(d) = decompose(p) {
                out.decomposition.insert(role, d);
            }
        }
    }
    Ok(out)
}

/// Object noun phrase followed by prepositional complements.
fn complements(toks: &[String], lex: &Lexicon, out: &mut RoleLabeledSentence, passive: bool) {
    let low = lower(toks);
    let is_boundary = |i: usize| {
        let w = low[i].as_str();
        A2_PREPS.contains(&w)
            || LOC_PREPS.contains(&w)
            || MNR_PREPS.contains(&w)
            || w == "from"
            || operator_at(&low[i..], lex).is_some()
    };
    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for i in 0..toks.len() {
        if i > start && is_boundary(i) {
            segments.push((start, i));
            start = i;
        }
    }
    if start < toks.len() {
        segments.push((start, toks.len()));
    }
    for (n, (a, b)) in segments.into_iter().enumerate() {
        let words = &low[a..b];
        let text = toks[a..b].join(" ");
        let negated = words.iter().any(|w| is_negation(w));
        let role = if n == 0 && !is_boundary(a) {
            if passive {
                continue;
            }
            Role::A1
        } else {
            let w = words[0].as_str();
            if A2_PREPS.contains(&w) {
                Role::A2
            } else if w == "from" {
                let inner = toks[a + 1..b].join(" ");
                add_role(out, Role::A2, inner, negated);
                continue;
            } else if passive && w == "by" {
                let inner = toks[a + 1..b].join(" ");
                add_role(out, Role::A0, inner, negated);
                continue;
            } else if MNR_PREPS.contains(&w) {
                Role::AmMnr
            } else {
                Role::AmLoc
            }
        };
        add_role(out, role, text, negated);
    }
}

fn add_role(out: &mut RoleLabeledSentence, role: Role, text: String, negated: bool) {
    if text.is_empty() {
        return;
    }
    out.roles
        .entry(role)
        .and_modify(|t| {
            t.push(' ');
            t.push_str(&text);
        })
        .or_insert(text);
    if negated {
        out.negated_roles.insert(role);
    }
}

fn number_word(w: &str) -> Option<u32> {
    w.parse::<u32>()
        .ok()
        .or_else(|| NUMBER_WORDS.iter().position(|n| *n == w).map(|p| p as u32))
}

fn is_plural(w: &str) -> bool {
    let w = w.to_ascii_lowercase();
    w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is")
}

/// Determiner of a noun phrase; leading prepositions are skipped.
pub fn determiner(phrase: &str) -> Determiner {
    let words: Vec<String> = phrase
        .split_whitespace()
        .filter(|w| !w.starts_with('('))
        .map(|w| w.to_ascii_lowercase())
        .skip_while(|w| A2_PREPS.contains(&w.as_str()) || w == "from")
        .collect();
    let Some(first) = words.first() else { return Determiner::Bare };
    let second = words.get(1).map(String::as_str).unwrap_or("");
    let third = words.get(2).map(String::as_str).unwrap_or("");
    match (first.as_str(), second) {
        ("a" | "an", _) => return Determiner::Indefinite,
        ("some", _) => return Determiner::Some,
        ("any" | "each" | "every" | "all", _) => return Determiner::Universal,
        ("the" | "this" | "that" | "these" | "those" | "its" | "their", _) => return Determiner::Definite,
        ("no", _) => return Determiner::Negative,
        _ => {}
    }
    let comparative = match (first.as_str(), second) {
        ("at", "least") => Some(CmpOp::Ge),
        ("at", "most") => Some(CmpOp::Le),
        ("more" | "over", "than") => Some(CmpOp::Gt),
        ("fewer" | "less", "than") => Some(CmpOp::Lt),
        _ => None,
    };
    if let Some(op) = comparative {
        if let Some(n) = number_word(third) {
            return Determiner::Numeric(op, n);
        }
    }
    if first == "exactly" {
        if let Some(n) = number_word(second) {
            return Determiner::Numeric(CmpOp::Eq, n);
        }
    }
    if let Some(n) = number_word(first) {
        return Determiner::Numeric(CmpOp::Eq, n);
    }
    if words.last().is_some_and(|w| is_plural(w)) {
        Determiner::BarePlural
    } else {
        Determiner::Bare
    }
}

const DETERMINER_WORDS: [&str; 18] = [
    "a", "an", "the", "some", "any", "each", "every", "all", "no", "this", "that", "these", "those", "its", "their",
    "exactly", "least", "most",
];

/// Lowercase content words of a phrase: no leading prepositions, determiners,
/// numerals, negations or parenthetical groups.
pub fn content_words(phrase: &str) -> Vec<String> {
    let mut words: Vec<String> = phrase
        .split_whitespace()
        .filter(|w| !w.starts_with('(') && !w.ends_with(')'))
        .map(|w| w.trim_matches(|c: char| c == ',' || c == '.').to_ascii_lowercase())
        .filter(|w| !w.is_empty() && !is_negation(w))
        .collect();
    while let Some(w) = words.first() {
        let w = w.as_str();
        let lead = A2_PREPS.contains(&w)
            || w == "from"
            || DETERMINER_WORDS.contains(&w)
            || number_word(w).is_some()
            || (w == "at" && words.len() > 1)
            || ((w == "more" || w == "fewer" || w == "less") && words.get(1).is_some_and(|n| n == "than"))
            || w == "than";
        if !lead {
            break;
        }
        words.remove(0);
    }
    words
}

/// Head noun and modifier of a noun phrase: "the counter of the watchdog" is
/// possessive, "the watchdog counter" attributive. Phrases joined by other
/// prepositions are not decomposed.
pub fn decompose(phrase: &str) -> Option<NounDecomposition> {
    let words = content_words(phrase);
    let content: Vec<&String> = words.iter().filter(|w| !matches!(w.as_str(), "a" | "an" | "the")).collect();
    if let Some(i) = content.iter().position(|w| *w == "of") {
        if i > 0 && i + 1 < content.len() {
            let join = |ws: &[&String]| ws.iter().map(|w| w.as_str()).collect::<Vec<_>>().join(" ");
            return Some(NounDecomposition {
                head: join(&content[..i]),
                modifier: join(&content[i + 1..]),
                kind: DecompositionKind::Possessive,
            });
        }
        return None;
    }
    if let Some(i) = content.iter().position(|w| w.ends_with("'s")) {
        if i + 1 < content.len() {
            let modifier = content[..=i]
                .iter()
                .map(|w| w.trim_end_matches("'s"))
                .collect::<Vec<_>>()
                .join(" ");
            let head = content[i + 1..].iter().map(|w| w.as_str()).collect::<Vec<_>>().join(" ");
            return Some(NounDecomposition { head, modifier, kind: DecompositionKind::Possessive });
        }
    }
    const PREPS: [&str; 10] = ["for", "with", "to", "on", "in", "at", "from", "by", "into", "about"];
    if content.len() >= 2 && !content.iter().any(|w| PREPS.contains(&w.as_str())) {
        let n = content.len();
        return Some(NounDecomposition {
            head: content[n - 1].clone(),
            modifier: content[..n - 1].iter().map(|w| w.as_str()).collect::<Vec<_>>().join(" "),
            kind: DecompositionKind::Attributive,
        });
    }
    None
}

/// Splits a phrase at a selection keyword: the main phrase and the excluded
/// noun phrases ("no error (except voltage errors and memory errors)").
pub fn split_except(phrase: &str, lex: &Lexicon) -> (String, Option<Vec<String>>) {
    let clause_nps = |clause: &str| -> Vec<String> {
        clause
            .split([','])
            .flat_map(|part| part.split(" and ").flat_map(|p| p.split(" or ")).map(str::to_string).collect::<Vec<_>>())
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty())
            .collect()
    };
    if let (Some(open), Some(close)) = (phrase.find('('), phrase.rfind(')')) {
        if open < close {
            let inner = &phrase[open + 1..close];
            let inner_words: Vec<String> = inner.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
            if let Some(kw) = lex.except_phrases().iter().find(|p| inner_words.starts_with(p)) {
                let clause = inner.split_whitespace().skip(kw.len()).collect::<Vec<_>>().join(" ");
                let main = format!("{} {}", &phrase[..open], &phrase[close + 1..]);
                let main = main.split_whitespace().collect::<Vec<_>>().join(" ");
                return (main, Some(clause_nps(&clause)));
            }
        }
    }
    let words: Vec<&str> = phrase.split_whitespace().collect();
    let low: Vec<String> = words.iter().map(|w| w.to_ascii_lowercase()).collect();
    for i in 0..low.len() {
        if let Some(kw) = lex.except_phrases().iter().find(|p| low[i..].starts_with(p)) {
            let main = words[..i].join(" ");
            let clause = words[i + kw.len()..].join(" ");
            return (main, Some(clause_nps(&clause)));
        }
    }
    (phrase.to_string(), None)
}
