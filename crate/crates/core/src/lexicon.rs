//! Verb classes, transformation rule bindings, word relations and comparison
//! phrases, loaded from `.lex` files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ocl::CmpOp;

const BUNDLED: &str = include_str!("../data/default.lex");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Semantic role labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    A0,
    A1,
    A2,
    AmLoc,
    AmPrd,
    AmMnr,
    AmNeg,
    /// The verb itself, usable as a support role.
    Verb,
}

impl Role {
    pub const ALL: [Role; 8] = [Role::A0, Role::A1, Role::A2, Role::AmLoc, Role::AmPrd, Role::AmMnr, Role::AmNeg, Role::Verb];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::A0 => "A0",
            Role::A1 => "A1",
            Role::A2 => "A2",
            Role::AmLoc => "AM-LOC",
            Role::AmPrd => "AM-PRD",
            Role::AmMnr => "AM-MNR",
            Role::AmNeg => "AM-NEG",
            Role::Verb => "Verb",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

/// One (entity role, support roles) pair of a transformation rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RoleBinding {
    pub entity: Role,
    pub support: Vec<Role>,
}

impl RoleBinding {
    pub fn any_verb() -> RoleBinding {
        RoleBinding { entity: Role::A1, support: vec![Role::AmPrd, Role::Verb] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Same,
    Synonym,
    Antonym,
    Unrelated,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub verb_classes: BTreeMap<String, Vec<String>>,
    pub rules: BTreeMap<String, Vec<RoleBinding>>,
    synonyms: BTreeSet<(String, String)>,
    antonyms: BTreeSet<(String, String)>,
    /// Comparison phrases, longest first.
    operator_words: Vec<(Vec<String>, CmpOp)>,
    /// Selection keywords, each a word sequence.
    except_words: Vec<Vec<String>>,
}

impl Lexicon {
    pub fn bundled() -> Lexicon {
        parse_lexicon(BUNDLED).expect("bundled lexicon parses")
    }

    /// Adds the entries of `other`; `other`'s verb memberships win on conflict.
    pub fn extend(&mut self, other: &Lexicon) -> Result<(), LexiconError> {
        for (class, verbs) in &other.verb_classes {
            for v in verbs {
                for vs in self.verb_classes.values_mut() {
                    vs.retain(|x| x != v);
                }
                let entry = self.verb_classes.entry(class.clone()).or_default();
                entry.push(v.clone());
            }
        }
        for (class, bindings) in &other.rules {
            let entry = self.rules.entry(class.clone()).or_default();
            for b in bindings {
                if !entry.contains(b) {
                    entry.push(b.clone());
                }
            }
        }
        self.synonyms.extend(other.synonyms.iter().cloned());
        self.antonyms.extend(other.antonyms.iter().cloned());
        for (p, op) in &other.operator_words {
            self.operator_words.retain(|(q, _)| q != p);
            self.operator_words.push((p.clone(), *op));
        }
        self.operator_words.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        for e in &other.except_words {
            if !self.except_words.contains(e) {
                self.except_words.push(e.clone());
            }
        }
        Ok(())
    }

    /// Verb class of a verb lemma or inflected form.
    pub fn verb_class(&self, verb: &str) -> Option<&str> {
        let s = stem(verb);
        self.verb_classes
            .iter()
            .find(|(_, vs)| vs.iter().any(|v| stem(v) == s))
            .map(|(c, _)| c.as_str())
    }

    /// Canonical lemma for a known verb form.
    pub fn known_verb(&self, word: &str) -> Option<&str> {
        let s = stem(word);
        self.verb_classes.values().flatten().find(|v| stem(v) == s).map(String::as_str)
    }

    pub fn is_erase_verb(&self, verb: &str) -> bool {
        self.verb_class(verb) == Some("erase")
    }

    pub fn related(&self, a: &str, b: &str) -> Relation {
        let (a, b) = (stem(a), stem(b));
        if a == b {
            return Relation::Same;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if self.synonyms.contains(&key) {
            Relation::Synonym
        } else if self.antonyms.contains(&key) {
            Relation::Antonym
        } else {
            Relation::Unrelated
        }
    }

    pub fn operator_phrases(&self) -> &[(Vec<String>, CmpOp)] {
        &self.operator_words
    }

    pub fn except_phrases(&self) -> &[Vec<String>] {
        &self.except_words
    }
}

/// Verb-specific bindings for the verb's class, followed by the any-verb binding.
pub fn lookup_rule(verb: &str, lex: &Lexicon) -> Vec<RoleBinding> {
    let mut out: Vec<RoleBinding> = lex
        .verb_class(verb)
        .and_then(|c| lex.rules.get(c))
        .cloned()
        .unwrap_or_default();
    let any = RoleBinding::any_verb();
    if !out.contains(&any) {
        out.push(any);
    }
    out
}

/// Comparison operator and integer literal of a support phrase; `=` when no
/// comparison phrase occurs.
pub fn detect_operator(phrase: &str, lex: &Lexicon) -> (CmpOp, Option<i64>) {
    let words: Vec<String> = phrase.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    let mut op = CmpOp::Eq;
    'outer: for (p, o) in lex.operator_phrases() {
        for start in 0..words.len() {
            if words[start..].starts_with(p) {
                op = *o;
                break 'outer;
            }
        }
    }
    let number = words.iter().find_map(|w| w.trim_end_matches(['.', ',']).parse::<i64>().ok());
    (op, number)
}

/// Light suffix stripping so that inflected forms compare equal
/// (`qualified`/`qualify`, `errors`/`error`, `completed`/`complete`).
pub fn stem(word: &str) -> String {
    let w = word.to_ascii_lowercase();
    let mut s = if let Some(b) = w.strip_suffix("ies").or_else(|| w.strip_suffix("ied")) {
        format!("{b}y")
    } else if let Some(b) = w.strip_suffix("ing").filter(|b| b.len() >= 3) {
        b.to_string()
    } else if let Some(b) = w.strip_suffix("ed").filter(|b| b.len() >= 3) {
        b.to_string()
    } else if let Some(b) = w
        .strip_suffix("es")
        .filter(|b| b.ends_with('s') || b.ends_with('x') || b.ends_with('z') || b.ends_with("ch") || b.ends_with("sh"))
    {
        b.to_string()
    } else if let Some(b) = w
        .strip_suffix('s')
        .filter(|b| b.len() >= 2 && !b.ends_with('s') && !b.ends_with('u') && !b.ends_with('i'))
    {
        b.to_string()
    } else {
        w
    };
    if s.len() > 2 && s.ends_with('e') {
        s.pop();
    }
    let bytes = s.as_bytes();
    if bytes.len() > 3 {
        let (a, b) = (bytes[bytes.len() - 1], bytes[bytes.len() - 2]);
        if a == b && !b"aeiou".contains(&a) {
            s.pop();
        }
    }
    s
}

pub fn parse_lexicon(text: &str) -> Result<Lexicon, LexiconError> {
    let mut lex = Lexicon::default();
    let mut owner: BTreeMap<String, String> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| LexiconError::Parse { line: line_no, message: m };
        let (kw, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match kw {
            "class" => {
                let (name, verbs) = rest.split_once(':').ok_or_else(|| err("expected `class name: verbs`".into()))?;
                let name = name.trim().to_string();
                for v in verbs.split_whitespace() {
                    let v = v.to_ascii_lowercase();
                    if let Some(prev) = owner.insert(stem(&v), name.clone()) {
                        if prev != name {
                            return Err(err(format!("verb `{v}` belongs to `{prev}` and `{name}`")));
                        }
                    }
                    lex.verb_classes.entry(name.clone()).or_default().push(v);
                }
            }
            "rule" => {
                let (name, spec) = rest.split_once(':').ok_or_else(|| err("expected `rule class: ...`".into()))?;
                let mut entity = None;
                let mut support = Vec::new();
                for part in spec.split_whitespace() {
                    if let Some(r) = part.strip_prefix("entity=") {
                        entity = Some(r.parse::<Role>().map_err(err)?);
                    } else if let Some(rs) = part.strip_prefix("support=") {
                        for r in rs.split(',').filter(|r| !r.is_empty()) {
                            support.push(r.parse::<Role>().map_err(err)?);
                        }
                    } else {
                        return Err(err(format!("unexpected `{part}`")));
                    }
                }
                let entity = entity.ok_or_else(|| err("missing entity role".into()))?;
                lex.rules.entry(name.trim().to_string()).or_default().push(RoleBinding { entity, support });
            }
            "syn" | "ant" => {
                let words: Vec<String> = rest.split_whitespace().map(stem).collect();
                if words.len() != 2 {
                    return Err(err(format!("`{kw}` takes two words")));
                }
                let key = if words[0] < words[1] {
                    (words[0].clone(), words[1].clone())
                } else {
                    (words[1].clone(), words[0].clone())
                };
                if kw == "syn" {
                    lex.synonyms.insert(key);
                } else {
                    lex.antonyms.insert(key);
                }
            }
            "op" => {
                let rest = rest.strip_prefix('"').ok_or_else(|| err("expected quoted phrase".into()))?;
                let (phrase, op) = rest.split_once('"').ok_or_else(|| err("unterminated phrase".into()))?;
                let op = CmpOp::parse(op.trim()).ok_or_else(|| err(format!("unknown operator `{}`", op.trim())))?;
                let words: Vec<String> = phrase.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
                if words.is_empty() {
                    return Err(err("empty phrase".into()));
                }
                lex.operator_words.push((words, op));
            }
            "except" => {
                for phrase in quoted_words(rest).map_err(err)? {
                    lex.except_words.push(phrase.split_whitespace().map(|w| w.to_ascii_lowercase()).collect());
                }
            }
            other => return Err(err(format!("unknown entry `{other}`"))),
        }
    }
    for class in lex.rules.keys() {
        if !lex.verb_classes.contains_key(class) {
            return Err(LexiconError::Parse { line: 0, message: format!("rule for unknown class `{class}`") });
        }
    }
    lex.operator_words.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
    Ok(lex)
}

fn quoted_words(s: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix('"') {
            let (w, tail) = r.split_once('"').ok_or("unterminated phrase")?;
            out.push(w.to_string());
            rest = tail.trim_start();
        } else {
            let (w, tail) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            out.push(w.to_string());
            rest = tail.trim_start();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_rules() {
        let lex = Lexicon::bundled();
        assert_eq!(
            lookup_rule("set", &lex),
            vec![RoleBinding { entity: Role::A1, support: vec![Role::A2, Role::AmLoc] }, RoleBinding::any_verb()]
        );
        assert_eq!(
            lookup_rule("erases", &lex),
            vec![
                RoleBinding { entity: Role::A1, support: vec![] },
                RoleBinding { entity: Role::A2, support: vec![Role::A1] },
                RoleBinding::any_verb()
            ]
        );
        assert_eq!(lookup_rule("frobnicate", &lex), vec![RoleBinding::any_verb()]);
        assert!(lex.is_erase_verb("resets"));
    }

    #[test]
    fn operators_and_numbers() {
        let lex = Lexicon::bundled();
        assert_eq!(detect_operator("above 600", &lex), (CmpOp::Gt, Some(600)));
        assert_eq!(detect_operator("below 50 degrees", &lex), (CmpOp::Lt, Some(50)));
        assert_eq!(detect_operator("to 20", &lex), (CmpOp::Eq, Some(20)));
        assert_eq!(detect_operator("at least 3", &lex), (CmpOp::Ge, Some(3)));
        assert_eq!(detect_operator("above -10 degrees", &lex), (CmpOp::Gt, Some(-10)));
    }

    #[test]
    fn relations() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.related("qualified", "disqualifies"), Relation::Antonym);
        assert_eq!(lex.related("stop", "halt"), Relation::Synonym);
        assert_eq!(lex.related("capacitance", "capacitance"), Relation::Same);
        assert_eq!(lex.related("errors", "error"), Relation::Same);
        assert_eq!(lex.related("seat", "wheel"), Relation::Unrelated);
    }

    #[test]
    fn stems_agree_across_inflections() {
        for (a, b) in [("completed", "complete"), ("stopped", "stop"), ("passed", "pass"), ("initialized", "initialize")] {
            assert_eq!(stem(a), stem(b), "{a} vs {b}");
        }
    }

    #[test]
    fn rejects_verb_in_two_classes() {
        assert!(parse_lexicon("class a: go\nclass b: goes\n").is_err());
        assert!(parse_lexicon("rule nope: entity=A1 support=\n").is_err());
        assert!(parse_lexicon("op \"above\" ~\n").is_err());
    }
}
