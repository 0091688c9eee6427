//! Constraint generation from role-labeled sentences.
//!
//! For every role pair of the applicable rules, candidate lhs variables are
//! searched in the domain model, completed with an operator, an rhs term, a
//! query kind and an optional selection, then scored. The best candidate wins.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::domain::{AttrType, DomainModel, Member, PathEnd};
use crate::lexicon::{detect_operator, lookup_rule, stem, Lexicon, Role, RoleBinding};
use crate::ocl::{CmpOp, Comparison, Expr, Formula, Literal, OclConstraint, Query, RhsTerm};
use crate::similarity::{attr_similarity, class_similarity, squash};
use crate::srl::{self, content_words, split_except, Determiner, RoleLabeledSentence};

pub const LHS_FLOOR: f64 = 0.3;
pub const CLASS_THRESHOLD: f64 = 0.7;
const MAX_TRAVERSAL: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreBreakdown {
    pub completeness: f64,
    pub lhs_score: f64,
    pub rhs_score: f64,
    pub universal: f64,
    pub correctness: f64,
    pub final_score: f64,
}

impl ScoreBreakdown {
    pub fn new(completeness: f64, lhs_score: f64, rhs_score: f64, universal: f64) -> Self {
        let correctness = (lhs_score + rhs_score + universal) / 3.0;
        ScoreBreakdown {
            completeness,
            lhs_score,
            rhs_score,
            universal,
            correctness,
            final_score: (completeness + correctness) / 2.0,
        }
    }
}

/// A candidate lhs variable: a member path from `entity` with per-segment scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LhsCandidate {
    pub entity: String,
    pub segments: Vec<String>,
    pub seg_scores: Vec<f64>,
    pub used: BTreeSet<Role>,
    pub antonym: bool,
    pub end: PathEnd,
}

impl LhsCandidate {
    pub fn lhs_score(&self) -> f64 {
        if self.seg_scores.is_empty() {
            0.0
        } else {
            self.seg_scores.iter().sum::<f64>() / self.seg_scores.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub constraint: OclConstraint,
    pub score: ScoreBreakdown,
    pub used: BTreeSet<Role>,
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenerationOutcome {
    Generated { constraint: OclConstraint, score: ScoreBreakdown },
    NeedsManual { sentence: String, reason: String },
}

/// Result for a whole sentence, which may hold several clauses.
#[derive(Debug, Clone, PartialEq)]
pub enum FormulaOutcome {
    Generated { formula: Formula, scores: Vec<ScoreBreakdown> },
    NeedsManual { sentence: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
struct Found {
    segments: Vec<String>,
    scores: Vec<f64>,
    antonym: bool,
    end: PathEnd,
}

/// Phrase used for matching model names: content words with comparison
/// phrases and numbers removed.
fn match_phrase(phrase: &str, lex: &Lexicon) -> String {
    let words = content_words(phrase);
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        if let Some((p, _)) = lex.operator_phrases().iter().find(|(p, _)| words[i..].starts_with(p)) {
            i += p.len();
            continue;
        }
        if words[i].parse::<i64>().is_err() && words[i] != "degrees" {
            out.push(words[i].clone());
        }
        i += 1;
    }
    out.join(" ")
}

/// Attributes and associations of `class`, searched through associations,
/// whose name matches `phrase`.
fn find_attributes(model: &DomainModel, class: &str, phrase: &str, lex: &Lexicon) -> Vec<Found> {
    let mut out = Vec::new();
    if phrase.is_empty() {
        return out;
    }
    let mut visited = vec![class.to_string()];
    walk_members(model, class, phrase, lex, &mut Vec::new(), &mut Vec::new(), &mut visited, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn walk_members(
    model: &DomainModel,
    class: &str,
    phrase: &str,
    lex: &Lexicon,
    segs: &mut Vec<String>,
    scores: &mut Vec<f64>,
    visited: &mut Vec<String>,
    out: &mut Vec<Found>,
) {
    for m in model.members(class) {
        let hit = attr_similarity(m.name(), phrase, lex);
        segs.push(m.name().to_string());
        match m {
            Member::Attr { .. } => {
                if let Some(h) = hit {
                    scores.push(h.score);
                    if let Ok(PathEnd::Attr(p)) = model.walk(model_owner(visited), segs) {
                        out.push(Found { segments: segs.clone(), scores: scores.clone(), antonym: h.antonym, end: PathEnd::Attr(p) });
                    }
                    scores.pop();
                }
            }
            Member::Assoc { def, .. } => {
                let s = hit.map_or(0.0, |h| h.score);
                scores.push(s);
                if let Some(h) = hit {
                    out.push(Found {
                        segments: segs.clone(),
                        scores: scores.clone(),
                        antonym: h.antonym,
                        end: PathEnd::Assoc { target: def.target.clone() },
                    });
                }
                if segs.len() < MAX_TRAVERSAL + 1 && !visited.contains(&def.target) {
                    visited.push(def.target.clone());
                    walk_members(model, &def.target.clone(), phrase, lex, segs, scores, visited, out);
                    visited.pop();
                }
                scores.pop();
            }
        }
        segs.pop();
    }
}

fn model_owner(visited: &[String]) -> &str {
    &visited[0]
}

/// Best-matching class for a noun phrase; "the system" names the system class.
pub fn find_class(model: &DomainModel, phrase: &str) -> Option<(String, f64)> {
    let words = content_words(phrase);
    let joined = words.join(" ");
    if squash(&joined) == "system" {
        return Some((model.system_class().to_string(), 1.0));
    }
    let mut best: Option<(String, f64)> = None;
    for c in &model.classes {
        let s = class_similarity(&c.name, &joined);
        if s >= CLASS_THRESHOLD && best.as_ref().map_or(true, |(_, b)| s > *b) {
            best = Some((c.name.clone(), s));
        }
    }
    best
}

/// The four lhs search phases for one role pair.
pub fn find_variables(
    labeled: &RoleLabeledSentence,
    pair: &RoleBinding,
    model: &DomainModel,
    lex: &Lexicon,
) -> Vec<LhsCandidate> {
    let Some(er_phrase) = labeled.phrase(pair.entity) else { return Vec::new() };
    let (main, _) = split_except(er_phrase, lex);
    let supports: Vec<(Role, String)> = pair
        .support
        .iter()
        .filter_map(|r| labeled.phrase(*r).map(|p| (*r, match_phrase(p, lex))))
        .filter(|(_, p)| !p.is_empty())
        .collect();
    let term = match_phrase(&main, lex);
    let mut out = phases(model, lex, pair.entity, &term, &supports);
    if let Some(d) = labeled.decomposition.get(&pair.entity) {
        out.extend(phases(model, lex, pair.entity, &d.modifier, &[(pair.entity, d.head.clone())]));
    }
    dedupe(out)
}

fn phases(
    model: &DomainModel,
    lex: &Lexicon,
    er: Role,
    term: &str,
    supports: &[(Role, String)],
) -> Vec<LhsCandidate> {
    let mut vars = Vec::new();
    let system = model.system_class();
    let base = |used: BTreeSet<Role>, entity: &str, f: Found| LhsCandidate {
        entity: entity.to_string(),
        segments: f.segments,
        seg_scores: f.scores,
        used,
        antonym: f.antonym,
        end: f.end,
    };
    if !term.is_empty() && squash(term) != "system" {
        for f in find_attributes(model, system, term, lex) {
            vars.push(base(BTreeSet::from([er]), system, f));
        }
    }
    if let Some((class, _)) = find_class(model, term) {
        for (role, phrase) in supports {
            for f in find_attributes(model, &class, phrase, lex) {
                vars.push(base(BTreeSet::from([er, *role]), &class, f));
            }
        }
    }
    let mut extended = Vec::new();
    for v in &vars {
        let PathEnd::Assoc { target } = &v.end else { continue };
        for (role, phrase) in supports {
            if v.used.contains(role) && *role != er {
                continue;
            }
            for f in find_attributes(model, target, phrase, lex) {
                let mut segments = v.segments.clone();
                segments.extend(f.segments);
                let mut seg_scores = v.seg_scores.clone();
                seg_scores.extend(f.scores);
                let end = match model.walk(&v.entity, &segments) {
                    Ok(e) => e,
                    Err(_) => continue,
                };
                let mut used = v.used.clone();
                used.insert(*role);
                extended.push(LhsCandidate {
                    entity: v.entity.clone(),
                    segments,
                    seg_scores,
                    used,
                    antonym: v.antonym || f.antonym,
                    end,
                });
            }
        }
    }
    vars.extend(extended);
    vars
}

fn dedupe(cands: Vec<LhsCandidate>) -> Vec<LhsCandidate> {
    let mut out: Vec<LhsCandidate> = Vec::new();
    for c in cands {
        match out.iter_mut().find(|o| o.entity == c.entity && o.segments == c.segments) {
            Some(o) => {
                let better = c.lhs_score() > o.lhs_score()
                    || (c.lhs_score() == o.lhs_score() && c.used.len() > o.used.len());
                if better {
                    *o = c;
                }
            }
            None => out.push(c),
        }
    }
    out
}

/// Operator, rhs term, rhs score and the role the rhs came from.
pub fn identify_rhs(
    lhs: &LhsCandidate,
    labeled: &RoleLabeledSentence,
    pair: &RoleBinding,
    model: &DomainModel,
    lex: &Lexicon,
) -> Option<(CmpOp, RhsTerm, f64, Option<Role>)> {
    let PathEnd::Attr(path) = &lhs.end else { return None };
    let mut remaining: Vec<Role> = pair.support.iter().copied().filter(|r| *r != Role::Verb).collect();
    for r in labeled.roles.keys() {
        if !remaining.contains(r) {
            remaining.push(*r);
        }
    }
    remaining.retain(|r| !matches!(r, Role::A0 | Role::AmNeg) && !lhs.used.contains(r));
    let erase = lex.is_erase_verb(&labeled.verb);

    let mut negated = labeled.verb_negated;
    let flip_roles = |used: &BTreeSet<Role>, extra: Option<Role>| {
        used.iter().chain(extra.iter()).filter(|r| labeled.negated_roles.contains(r)).count() % 2 == 1
    };
    if labeled.determiners.get(&pair.entity) == Some(&Determiner::Negative) {
        negated = !negated;
    }

    let (op, rhs, score, from) = match &path.terminal_type {
        AttrType::Bool => {
            let mut lit = None;
            for r in &remaining {
                let words = content_words(labeled.phrase(*r).unwrap_or(""));
                if words.iter().any(|w| w == "true") {
                    lit = Some((true, *r));
                } else if words.iter().any(|w| w == "false") {
                    lit = Some((false, *r));
                }
                if lit.is_some() {
                    break;
                }
            }
            let (value, from) = match lit {
                Some((v, r)) => (v, Some(r)),
                None => (true, None),
            };
            let neg = negated ^ flip_roles(&lhs.used, from);
            let value = if neg { !value } else { value };
            let op = if lhs.antonym { CmpOp::Ne } else { CmpOp::Eq };
            (op, RhsTerm::Lit(Literal::Bool(value)), 1.0, from)
        }
        AttrType::Int { .. } => {
            let mut found = None;
            for r in &remaining {
                let (op, n) = detect_operator(labeled.phrase(*r).unwrap_or(""), lex);
                if let Some(n) = n {
                    found = Some((op, n, *r));
                    break;
                }
            }
            let (mut op, value, from) = match found {
                Some((op, n, r)) => (op, n, Some(r)),
                None if erase => (CmpOp::Eq, 0, None),
                None => return variable_rhs(lhs, labeled, &remaining, model, lex),
            };
            if negated ^ flip_roles(&lhs.used, from) {
                op = op.complement();
            }
            if lhs.antonym {
                op = op.complement();
            }
            (op, RhsTerm::Lit(Literal::Int(value)), 1.0, from)
        }
        AttrType::Enum(e) => {
            let def = model.enum_def(e)?;
            let mut found = None;
            let mut sources: Vec<(Option<Role>, String)> =
                remaining.iter().map(|r| (Some(*r), labeled.phrase(*r).unwrap_or("").to_string())).collect();
            sources.push((None, labeled.verb_text.clone()));
            'search: for (role, phrase) in &sources {
                for w in content_words(phrase) {
                    if let Some(m) = def.members.iter().find(|m| stem(m) == stem(&w)) {
                        found = Some((m.clone(), *role));
                        break 'search;
                    }
                }
            }
            let (lit, from) = match found {
                Some((m, r)) => (Literal::Enum { enum_name: e.clone(), member: m }, r),
                None if erase => (Literal::Null, None),
                None => return variable_rhs(lhs, labeled, &remaining, model, lex),
            };
            let mut op = CmpOp::Eq;
            if negated ^ flip_roles(&lhs.used, from) {
                op = op.complement();
            }
            if lhs.antonym {
                op = op.complement();
            }
            (op, RhsTerm::Lit(lit), 1.0, from)
        }
    };
    Some((op, rhs, score, from))
}

/// A second role phrase naming an attribute of the same entity and type.
fn variable_rhs(
    lhs: &LhsCandidate,
    labeled: &RoleLabeledSentence,
    remaining: &[Role],
    model: &DomainModel,
    lex: &Lexicon,
) -> Option<(CmpOp, RhsTerm, f64, Option<Role>)> {
    let PathEnd::Attr(path) = &lhs.end else { return None };
    for r in remaining.iter().filter(|r| matches!(r, Role::A1 | Role::A2)) {
        let phrase = match_phrase(labeled.phrase(*r)?, lex);
        let mut best: Option<Found> = None;
        for f in find_attributes(model, &lhs.entity, &phrase, lex) {
            let PathEnd::Attr(p) = &f.end else { continue };
            let same_type = matches!((&p.terminal_type, &path.terminal_type), (AttrType::Int { .. }, AttrType::Int { .. }))
                || p.terminal_type == path.terminal_type;
            if !same_type || f.segments == lhs.segments {
                continue;
            }
            let mean = f.scores.iter().sum::<f64>() / f.scores.len() as f64;
            if mean >= LHS_FLOOR && best.as_ref().map_or(true, |b| mean > b.scores.iter().sum::<f64>() / b.scores.len() as f64) {
                best = Some(f);
            }
        }
        if let Some(b) = best {
            let mean = b.scores.iter().sum::<f64>() / b.scores.len() as f64;
            let (op, _) = detect_operator(labeled.phrase(*r).unwrap_or(""), lex);
            return Some((op, RhsTerm::Var(b.segments), mean, Some(*r)));
        }
    }
    None
}

/// Classes excluded by an `except` clause of the entity-role phrase.
pub fn build_selection(
    labeled: &RoleLabeledSentence,
    entity_role: Role,
    entity: &str,
    model: &DomainModel,
    lex: &Lexicon,
) -> Result<Vec<String>, String> {
    let Some(phrase) = labeled.phrase(entity_role) else { return Ok(Vec::new()) };
    let (_, excluded) = split_except(phrase, lex);
    let Some(nps) = excluded else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for np in nps {
        match find_class(model, &np) {
            Some((c, _)) if model.conforms(&c, entity) && c != entity => {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
            Some((c, _)) => return Err(format!("excluded `{np}` ({c}) is not a subtype of {entity}")),
            None => return Err(format!("no class matches excluded phrase `{np}`")),
        }
    }
    Ok(out)
}

fn query_of(det: Option<&Determiner>) -> Query {
    match det {
        Some(Determiner::Indefinite | Determiner::Some) => Query::Exists,
        Some(Determiner::Numeric(op, n)) => Query::Count(*op, *n),
        _ => Query::ForAll,
    }
}

/// Completeness over the roles present, ignoring the agent and negation markers.
pub fn score(
    constraint: &OclConstraint,
    labeled: &RoleLabeledSentence,
    used: &BTreeSet<Role>,
    lhs_score: f64,
    rhs_score: f64,
    entity_role: Role,
    system_class: &str,
) -> ScoreBreakdown {
    let counted: Vec<Role> = labeled
        .roles
        .keys()
        .copied()
        .filter(|r| !matches!(r, Role::A0 | Role::AmNeg | Role::Verb))
        .collect();
    let completeness = if counted.is_empty() {
        1.0
    } else {
        counted.iter().filter(|r| used.contains(r)).count() as f64 / counted.len() as f64
    };
    let universal_det = labeled.determiners.get(&entity_role).is_some_and(|d| d.is_universal());
    let is_system = constraint.entity == system_class;
    let universal = if (!universal_det && is_system) || (universal_det && !is_system) { 1.0 } else { 0.0 };
    ScoreBreakdown::new(completeness, lhs_score, rhs_score, universal)
}

/// All scored candidates of a single-clause sentence.
pub fn candidates(labeled: &RoleLabeledSentence, model: &DomainModel, lex: &Lexicon) -> (Vec<Candidate>, Vec<String>) {
    let mut out = Vec::new();
    let mut reasons = Vec::new();
    for pair in lookup_rule(&labeled.verb, lex) {
        for lhs in find_variables(labeled, &pair, model, lex) {
            if lhs.lhs_score() < LHS_FLOOR {
                continue;
            }
            let PathEnd::Attr(_) = &lhs.end else { continue };
            let Some((op, rhs, rhs_score, from)) = identify_rhs(&lhs, labeled, &pair, model, lex) else {
                continue;
            };
            let excluded = match build_selection(labeled, pair.entity, &lhs.entity, model, lex) {
                Ok(x) => x,
                Err(reason) => {
                    reasons.push(reason);
                    continue;
                }
            };
            let constraint = OclConstraint {
                entity: lhs.entity.clone(),
                excluded,
                query: query_of(labeled.determiners.get(&pair.entity)),
                expr: Expr::Cmp(Comparison { lhs: lhs.segments.clone(), op, rhs }),
            };
            if constraint.check(model).is_err() {
                continue;
            }
            let mut used = lhs.used.clone();
            used.extend(from);
            let s = score(&constraint, labeled, &used, lhs.lhs_score(), rhs_score, pair.entity, model.system_class());
            let rendered = constraint.render().expect("comparison present");
            if !out.iter().any(|c: &Candidate| c.rendered == rendered && c.score.final_score >= s.final_score) {
                out.retain(|c: &Candidate| c.rendered != rendered);
                out.push(Candidate { constraint, score: s, used, rendered });
            }
        }
    }
    (out, reasons)
}

/// Candidate order: final score, completeness, shorter path, entity, text.
pub fn compare_candidates(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .final_score
        .partial_cmp(&a.score.final_score)
        .unwrap_or(Ordering::Equal)
        .then(b.score.completeness.partial_cmp(&a.score.completeness).unwrap_or(Ordering::Equal))
        .then(path_len(a).cmp(&path_len(b)))
        .then(a.constraint.entity.cmp(&b.constraint.entity))
        .then(a.rendered.cmp(&b.rendered))
}

fn path_len(c: &Candidate) -> usize {
    c.constraint.comparison().map_or(0, |x| x.lhs.len())
}

pub fn select_best(cands: &[Candidate]) -> Option<&Candidate> {
    cands.iter().min_by(|a, b| compare_candidates(a, b))
}

/// Generates the best constraint for one clause.
pub fn generate_ocl(sentence: &str, model: &DomainModel, lex: &Lexicon) -> GenerationOutcome {
    let labeled = match srl::label(sentence, lex) {
        Ok(l) => l,
        Err(e) => return GenerationOutcome::NeedsManual { sentence: sentence.to_string(), reason: e.to_string() },
    };
    let (cands, reasons) = candidates(&labeled, model, lex);
    match select_best(&cands) {
        Some(c) => GenerationOutcome::Generated { constraint: c.constraint.clone(), score: c.score },
        None => {
            let reason = reasons
                .into_iter()
                .next()
                .unwrap_or_else(|| format!("no domain element matches `{}`", labeled.sentence));
            GenerationOutcome::NeedsManual { sentence: sentence.to_string(), reason }
        }
    }
}

/// Splits a sentence at a top-level `and`/`or` when every part is a clause of its own.
pub fn split_clauses(sentence: &str, lex: &Lexicon) -> Option<(Vec<String>, bool)> {
    for (sep, conj) in [(" and ", true), (" or ", false)] {
        let mut parts = Vec::new();
        let mut depth = 0i32;
        let mut start = 0;
        let bytes = sentence.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'(' => depth += 1,
                b')' => depth -= 1,
                _ => {}
            }
            if depth == 0 && sentence[i..].starts_with(sep) {
                parts.push(sentence[start..i].to_string());
                i += sep.len();
                start = i;
                continue;
            }
            i += 1;
        }
        parts.push(sentence[start..].to_string());
        if parts.len() > 1 && parts.iter().all(|p| is_clause(p, lex)) {
            return Some((parts, conj));
        }
    }
    None
}

fn is_clause(part: &str, lex: &Lexicon) -> bool {
    match srl::label(part, lex) {
        Ok(l) => {
            let words: Vec<String> = part.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
            let has_finite_verb = words.iter().skip(1).any(|w| {
                matches!(w.as_str(), "is" | "are" | "has" | "have" | "was" | "were") || lex.known_verb(w).is_some()
            });
            has_finite_verb && !l.verb.is_empty()
        }
        Err(_) => false,
    }
}

/// Generates a formula for a whole sentence, splitting coordinated clauses.
pub fn generate_formula(sentence: &str, model: &DomainModel, lex: &Lexicon) -> FormulaOutcome {
    let s = srl::strip_prefixes(sentence);
    if let Some((parts, conj)) = split_clauses(&s, lex) {
        let mut atoms = Vec::new();
        let mut scores = Vec::new();
        for p in &parts {
            match generate_ocl(p, model, lex) {
                GenerationOutcome::Generated { constraint, score } => {
                    atoms.push(Formula::Atom(constraint));
                    scores.push(score);
                }
                GenerationOutcome::NeedsManual { reason, .. } => {
                    return FormulaOutcome::NeedsManual { sentence: sentence.to_string(), reason };
                }
            }
        }
        let formula = if conj { Formula::And(atoms) } else { Formula::Or(atoms) };
        return FormulaOutcome::Generated { formula, scores };
    }
    match generate_ocl(&s, model, lex) {
        GenerationOutcome::Generated { constraint, score } => {
            FormulaOutcome::Generated { formula: Formula::Atom(constraint), scores: vec![score] }
        }
        GenerationOutcome::NeedsManual { reason, .. } => {
            FormulaOutcome::NeedsManual { sentence: sentence.to_string(), reason }
        }
    }
}
