//! Domain model: classes, typed attributes, associations, inheritance and
//! enumerations, parsed from a small indented DSL.
//!
//! ```text
//! enum OccupantClass { Init, Occupied, Empty, Error }
//! class BodySense system
//!   attr temperature: int[-40..125] = 20
//!   assoc itsNVM: NVM
//! class NVM
//!   attr isAccessible: bool
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

pub const DEFAULT_INT_RANGE: (i64, i64) = (-32768, 32767);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("cannot resolve `{segment}` on class `{class}`")]
    UnresolvedSegment { class: String, segment: String },
    #[error("path `{0}` ends in an association, not an attribute")]
    NotAnAttribute(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttrType {
    Bool,
    Int { lo: i64, hi: i64 },
    Enum(String),
}

impl fmt::Display for AttrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrType::Bool => write!(f, "bool"),
            AttrType::Int { lo, hi } => write!(f, "int[{lo}..{hi}]"),
            AttrType::Enum(e) => write!(f, "{e}"),
        }
    }
}

/// A concrete attribute value. Enumeration values carry only the member name;
/// the enumeration is known from the attribute type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Enum(String),
    Null,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(n) => write!(f, "{n}"),
            Value::Enum(m) => write!(f, "{m}"),
            Value::Null => write!(f, "null"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDef {
    pub name: String,
    pub ty: AttrType,
    pub derived: bool,
    /// Preferred value for the solver when the attribute is otherwise free.
    pub default: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationDef {
    pub name: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub is_abstract: bool,
    pub superclass: Option<String>,
    pub is_system: bool,
    pub attributes: Vec<AttributeDef>,
    pub associations: Vec<AssociationDef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumDef {
    pub name: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub enum Member<'a> {
    Attr { declared_in: &'a str, def: &'a AttributeDef },
    Assoc { declared_in: &'a str, def: &'a AssociationDef },
}

impl<'a> Member<'a> {
    pub fn name(&self) -> &'a str {
        match self {
            Member::Attr { def, .. } => &def.name,
            Member::Assoc { def, .. } => &def.name,
        }
    }
}

/// A typed attribute path `owner.seg1.seg2...` whose last segment is an attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VariablePath {
    pub owner: String,
    pub segments: Vec<String>,
    pub terminal_type: AttrType,
    /// Class reached by the association prefix, i.e. the owner of the terminal attribute.
    pub terminal_class: String,
    /// Class that declares the terminal attribute (inherited attributes resolve to the ancestor).
    pub declared_in: String,
}

impl VariablePath {
    pub fn dotted(&self) -> String {
        self.segments.join(".")
    }

    /// Identity of the declared attribute, shared by every subclass.
    pub fn attribute_id(&self) -> (String, String) {
        (self.declared_in.clone(), self.segments.last().cloned().unwrap_or_default())
    }
}

/// Where a member path ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathEnd {
    Attr(VariablePath),
    Assoc { target: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainModel {
    pub classes: Vec<ClassDef>,
    pub enums: Vec<EnumDef>,
    system_class: String,
    index: HashMap<String, usize>,
}

impl DomainModel {
    pub fn new(classes: Vec<ClassDef>, enums: Vec<EnumDef>) -> Result<Self, ModelError> {
        let mut index = HashMap::new();
        for (i, c) in classes.iter().enumerate() {
            if index.insert(c.name.clone(), i).is_some() {
                return Err(ModelError::Invalid(format!("duplicate class `{}`", c.name)));
            }
        }
        let systems: Vec<&ClassDef> = classes.iter().filter(|c| c.is_system).collect();
        let system_class = match systems.as_slice() {
            [] => return Err(ModelError::Invalid("no system class".into())),
            [one] => one.name.clone(),
            _ => return Err(ModelError::Invalid("more than one system class".into())),
        };
        let model = DomainModel { classes, enums, system_class, index };
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<(), ModelError> {
        let mut enum_names = BTreeSet::new();
        for e in &self.enums {
            if !enum_names.insert(e.name.as_str()) {
                return Err(ModelError::Invalid(format!("duplicate enum `{}`", e.name)));
            }
            if self.index.contains_key(&e.name) {
                return Err(ModelError::Invalid(format!("`{}` is both a class and an enum", e.name)));
            }
            let members: BTreeSet<&String> = e.members.iter().collect();
            if members.len() != e.members.len() || e.members.is_empty() {
                return Err(ModelError::Invalid(format!("enum `{}` needs distinct members", e.name)));
            }
        }
        for c in &self.classes {
            if let Some(s) = &c.superclass {
                if !self.index.contains_key(s) {
                    return Err(ModelError::Invalid(format!("`{}` extends unknown class `{s}`", c.name)));
                }
            }
        }
        for c in &self.classes {
            let mut seen = BTreeSet::new();
            let mut cur = Some(c.name.as_str());
            while let Some(name) = cur {
                if !seen.insert(name) {
                    return Err(ModelError::Invalid(format!("cyclic inheritance through `{}`", c.name)));
                }
                cur = self.class(name).and_then(|k| k.superclass.as_deref());
            }
        }
        for c in &self.classes {
            let mut names = BTreeSet::new();
            for m in self.members(&c.name) {
                if !names.insert(m.name()) {
                    return Err(ModelError::Invalid(format!("duplicate member `{}` in `{}`", m.name(), c.name)));
                }
            }
            for a in &c.associations {
                if !self.index.contains_key(&a.target) {
                    return Err(ModelError::Invalid(format!(
                        "association `{}.{}` targets unknown class `{}`",
                        c.name, a.name, a.target
                    )));
                }
            }
            for a in &c.attributes {
                match &a.ty {
                    AttrType::Int { lo, hi } if lo > hi => {
                        return Err(ModelError::Invalid(format!("empty range on `{}.{}`", c.name, a.name)))
                    }
                    AttrType::Enum(e) if self.enum_def(e).is_none() => {
                        return Err(ModelError::Invalid(format!("unknown type `{e}` on `{}.{}`", c.name, a.name)))
                    }
                    _ => {}
                }
                if let Some(d) = &a.default {
                    if !self.value_fits(&a.ty, d) {
                        return Err(ModelError::Invalid(format!("default of `{}.{}` outside its type", c.name, a.name)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn value_fits(&self, ty: &AttrType, v: &Value) -> bool {
        match (ty, v) {
            (AttrType::Bool, Value::Bool(_)) => true,
            (AttrType::Int { lo, hi }, Value::Int(n)) => lo <= n && n <= hi,
            (AttrType::Enum(e), Value::Enum(m)) => self.enum_def(e).is_some_and(|d| d.members.contains(m)),
            (AttrType::Enum(_), Value::Null) => true,
            _ => false,
        }
    }

    pub fn system_class(&self) -> &str {
        &self.system_class
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.index.get(name).map(|&i| &self.classes[i])
    }

    pub fn enum_def(&self, name: &str) -> Option<&EnumDef> {
        self.enums.iter().find(|e| e.name == name)
    }

    /// `name` and its ancestors, nearest first.
    pub fn ancestors(&self, name: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.class(name);
        while let Some(c) = cur {
            out.push(c.name.as_str());
            cur = c.superclass.as_deref().and_then(|s| self.class(s));
        }
        out
    }

    /// Reflexive subclass test.
    pub fn conforms(&self, class: &str, ancestor: &str) -> bool {
        self.ancestors(class).contains(&ancestor)
    }

    /// Members including inherited ones, ancestors first.
    pub fn members(&self, name: &str) -> Vec<Member<'_>> {
        let mut chain = self.ancestors(name);
        chain.reverse();
        let mut out = Vec::new();
        for cname in chain {
            let c = self.class(cname).expect("ancestor exists");
            for a in &c.attributes {
                out.push(Member::Attr { declared_in: &c.name, def: a });
            }
            for a in &c.associations {
                out.push(Member::Assoc { declared_in: &c.name, def: a });
            }
        }
        out
    }

    pub fn attributes(&self, name: &str) -> Vec<(&str, &AttributeDef)> {
        self.members(name)
            .into_iter()
            .filter_map(|m| match m {
                Member::Attr { declared_in, def } => Some((declared_in, def)),
                Member::Assoc { .. } => None,
            })
            .collect()
    }

    pub fn associations(&self, name: &str) -> Vec<(&str, &AssociationDef)> {
        self.members(name)
            .into_iter()
            .filter_map(|m| match m {
                Member::Assoc { declared_in, def } => Some((declared_in, def)),
                Member::Attr { .. } => None,
            })
            .collect()
    }

    pub fn member(&self, class: &str, name: &str) -> Option<Member<'_>> {
        self.members(class).into_iter().find(|m| m.name() == name)
    }

    pub fn concrete_classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.iter().filter(|c| !c.is_abstract)
    }

    /// Concrete transitive subclasses of `class`, itself included when concrete,
    /// in declaration order.
    pub fn subtypes_of(&self, class: &str) -> Result<Vec<String>, ModelError> {
        if self.class(class).is_none() {
            return Err(ModelError::UnknownClass(class.to_string()));
        }
        Ok(self
            .concrete_classes()
            .filter(|c| self.conforms(&c.name, class))
            .map(|c| c.name.clone())
            .collect())
    }

    /// Follows `segments` from `start`; every segment but the last must be an association.
    pub fn walk(&self, start: &str, segments: &[String]) -> Result<PathEnd, ModelError> {
        if self.class(start).is_none() {
            return Err(ModelError::UnknownClass(start.to_string()));
        }
        let mut cur = start.to_string();
        for (k, seg) in segments.iter().enumerate() {
            let last = k + 1 == segments.len();
            match self.member(&cur, seg) {
                Some(Member::Assoc { def, .. }) => {
                    if last {
                        return Ok(PathEnd::Assoc { target: def.target.clone() });
                    }
                    cur = def.target.clone();
                }
                Some(Member::Attr { declared_in, def }) if last => {
                    return Ok(PathEnd::Attr(VariablePath {
                        owner: start.to_string(),
                        segments: segments.to_vec(),
                        terminal_type: def.ty.clone(),
                        terminal_class: cur.clone(),
                        declared_in: declared_in.to_string(),
                    }));
                }
                _ => return Err(ModelError::UnresolvedSegment { class: cur, segment: seg.clone() }),
            }
        }
        Err(ModelError::Invalid("empty path".into()))
    }

    pub fn resolve_path(&self, start: &str, segments: &[String]) -> Result<VariablePath, ModelError> {
        match self.walk(start, segments)? {
            PathEnd::Attr(p) => Ok(p),
            PathEnd::Assoc { .. } => Err(ModelError::NotAnAttribute(segments.join("."))),
        }
    }

    /// Every element name a use case phrase may refer to.
    pub fn element_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for c in &self.classes {
            out.push(c.name.as_str());
            out.extend(c.attributes.iter().map(|a| a.name.as_str()));
            out.extend(c.associations.iter().map(|a| a.name.as_str()));
        }
        for e in &self.enums {
            out.push(e.name.as_str());
            out.extend(e.members.iter().map(String::as_str));
        }
        out
    }
}

/// Removes articles and whitespace and capitalizes every word.
pub fn normalize_entity_name(phrase: &str) -> String {
    phrase
        .split_whitespace()
        .filter(|w| !matches!(w.to_ascii_lowercase().as_str(), "a" | "an" | "the"))
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(f) => f.to_uppercase().chain(cs).collect::<String>(),
                None => String::new(),
            }
        })
        .collect()
}

pub fn parse_model(text: &str) -> Result<DomainModel, ModelError> {
    let mut classes: Vec<ClassDef> = Vec::new();
    let mut enums = Vec::new();
    let err = |line: usize, message: String| ModelError::Parse { line, message };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split("//").next().unwrap_or("");
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match keyword {
            "enum" => {
                let (name, body) = rest
                    .split_once('{')
                    .ok_or_else(|| err(line_no, "expected `enum Name { A, B }`".into()))?;
                let body = body
                    .strip_suffix('}')
                    .ok_or_else(|| err(line_no, "unterminated enum".into()))?;
                let name = name.trim();
                check_ident(name).map_err(|m| err(line_no, m))?;
                let members: Vec<String> = body
                    .split(',')
                    .map(|m| m.trim().to_string())
                    .filter(|m| !m.is_empty())
                    .collect();
                for m in &members {
                    check_ident(m).map_err(|msg| err(line_no, msg))?;
                }
                enums.push(EnumDef { name: name.to_string(), members });
            }
            "class" => {
                let mut words = rest.split_whitespace();
                let name = words.next().ok_or_else(|| err(line_no, "missing class name".into()))?;
                check_ident(name).map_err(|m| err(line_no, m))?;
                if classes.iter().any(|c| c.name == name) {
                    return Err(err(line_no, format!("duplicate class `{name}`")));
                }
                let mut class = ClassDef {
                    name: name.to_string(),
                    is_abstract: false,
                    superclass: None,
                    is_system: false,
                    attributes: Vec::new(),
                    associations: Vec::new(),
                };
                while let Some(w) = words.next() {
                    match w {
                        "abstract" => class.is_abstract = true,
                        "system" => class.is_system = true,
                        "extends" => {
                            let s = words.next().ok_or_else(|| err(line_no, "missing superclass".into()))?;
                            class.superclass = Some(s.to_string());
                        }
                        other => return Err(err(line_no, format!("unexpected `{other}` in class header"))),
                    }
                }
                classes.push(class);
            }
            "attr" | "assoc" => {
                let class = classes
                    .last_mut()
                    .ok_or_else(|| err(line_no, format!("`{keyword}` outside a class")))?;
                let (name, ty) = rest
                    .split_once(':')
                    .ok_or_else(|| err(line_no, format!("expected `{keyword} name: Type`")))?;
                let name = name.trim();
                check_ident(name).map_err(|m| err(line_no, m))?;
                if keyword == "assoc" {
                    let target = ty.trim();
                    check_ident(target).map_err(|m| err(line_no, m))?;
                    class.associations.push(AssociationDef { name: name.into(), target: target.into() });
                } else {
                    class.attributes.push(parse_attr(name, ty).map_err(|m| err(line_no, m))?);
                }
            }
            other => return Err(err(line_no, format!("unknown declaration `{other}`"))),
        }
    }
    DomainModel::new(classes, enums)
}

fn check_ident(s: &str) -> Result<(), String> {
    let ok = !s.is_empty()
        && s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(format!("invalid identifier `{s}`"))
    }
}

fn parse_attr(name: &str, spec: &str) -> Result<AttributeDef, String> {
    let mut spec = spec.trim().to_string();
    let mut derived = false;
    if let Some(s) = spec.strip_suffix("derived") {
        derived = true;
        spec = s.trim().to_string();
    }
    let (ty_text, default_text) = match spec.split_once('=') {
        Some((t, d)) => (t.trim(), Some(d.trim())),
        None => (spec.trim(), None),
    };
    let ty = if ty_text == "bool" {
        AttrType::Bool
    } else if ty_text == "int" {
        AttrType::Int { lo: DEFAULT_INT_RANGE.0, hi: DEFAULT_INT_RANGE.1 }
    } else if let Some(range) = ty_text.strip_prefix("int[").and_then(|r| r.strip_suffix(']')) {
        let (lo, hi) = range.split_once("..").ok_or_else(|| format!("bad range `{range}`"))?;
        let lo: i64 = lo.trim().parse().map_err(|_| format!("bad bound `{lo}`"))?;
        let hi: i64 = hi.trim().parse().map_err(|_| format!("bad bound `{hi}`"))?;
        if lo > hi {
            return Err(format!("empty range `{range}`"));
        }
        AttrType::Int { lo, hi }
    } else {
        check_ident(ty_text)?;
        AttrType::Enum(ty_text.to_string())
    };
    let default = match default_text {
        None => None,
        Some(d) => Some(match &ty {
            AttrType::Bool => match d {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                _ => return Err(format!("bad boolean default `{d}`")),
            },
            AttrType::Int { lo, hi } => {
                let n: i64 = d.parse().map_err(|_| format!("bad integer default `{d}`"))?;
                if n < *lo || n > *hi {
                    return Err(format!("default {n} outside [{lo}..{hi}]"));
                }
                Value::Int(n)
            }
            AttrType::Enum(_) if d == "null" => Value::Null,
            AttrType::Enum(_) => Value::Enum(d.to_string()),
        }),
    };
    Ok(AttributeDef { name: name.to_string(), ty, derived, default })
}

/// An entity phrase with no counterpart in the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MissingEntity {
    pub phrase: String,
    pub name: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CompletenessReport {
    pub missing_entities: Vec<MissingEntity>,
    pub matched: usize,
}

const MATCH_THRESHOLD: f64 = 0.7;

fn entity_matches(model: &DomainModel, phrase: &str, lex: &crate::lexicon::Lexicon) -> bool {
    let words = crate::srl::content_words(phrase);
    if words.is_empty() {
        return true;
    }
    let joined = words.join(" ");
    let squashed = crate::similarity::squash(&joined);
    if squashed == "system" {
        return true;
    }
    for name in model.element_names() {
        if name.to_ascii_lowercase() == squashed {
            return true;
        }
    }
    for c in &model.classes {
        if crate::similarity::class_similarity(&c.name, &joined) >= MATCH_THRESHOLD {
            return true;
        }
        let members = c.attributes.iter().map(|a| a.name.as_str()).chain(c.associations.iter().map(|a| a.name.as_str()));
        for m in members {
            if crate::similarity::attr_similarity(m, &joined, lex).is_some_and(|s| s.score >= MATCH_THRESHOLD) {
                return true;
            }
        }
    }
    false
}

/// Noun phrases a step mentions: actors and entities of interaction steps,
/// agent and patient of the others.
fn step_phrases(kind: &crate::rucm::StepKind, text: &str, lex: &crate::lexicon::Lexicon) -> Vec<String> {
    use crate::lexicon::Role;
    use crate::rucm::StepKind;
    match kind {
        StepKind::Input { actor, entities } | StepKind::Output { entities, actor } => {
            let mut v = entities.clone();
            v.push(actor.clone());
            v
        }
        StepKind::Condition(_) | StepKind::Guard(_) | StepKind::Internal(_) => match crate::srl::label(text, lex) {
            Ok(l) => [Role::A0, Role::A1]
                .iter()
                .filter_map(|r| l.phrase(*r))
                .flat_map(|p| {
                    let (main, except) = crate::srl::split_except(p, lex);
                    std::iter::once(main).chain(except.unwrap_or_default())
                })
                .collect(),
            Err(_) => Vec::new(),
        },
        _ => Vec::new(),
    }
}

/// Classifies every entity phrase of the use cases as matched or missing.
/// A phrase that does not match as a whole is split into head and modifier,
/// and each unmatched part is reported.
pub fn check_completeness(
    model: &DomainModel,
    specs: &[crate::rucm::UseCaseSpec],
    lex: &crate::lexicon::Lexicon,
) -> CompletenessReport {
    let mut report = CompletenessReport::default();
    let mut reported: BTreeSet<String> = BTreeSet::new();
    for spec in specs {
        for flow in std::iter::once(&spec.basic_flow).chain(&spec.alternative_flows) {
            for step in &flow.steps {
                for phrase in step_phrases(&step.kind, &step.raw_text, lex) {
                    if phrase.trim().is_empty() {
                        continue;
                    }
                    if entity_matches(model, &phrase, lex) {
                        report.matched += 1;
                        continue;
                    }
                    let parts = match crate::srl::decompose(&phrase) {
                        Some(d) => vec![d.modifier, d.head],
                        None => vec![phrase.clone()],
                    };
                    let missing: Vec<String> = parts.into_iter().filter(|p| !entity_matches(model, p, lex)).collect();
                    if missing.is_empty() {
                        report.matched += 1;
                    }
                    for m in missing {
                        let content = crate::srl::content_words(&m);
                        let kept: Vec<&str> =
                            m.split_whitespace().filter(|w| content.contains(&w.to_ascii_lowercase())).collect();
                        let name = normalize_entity_name(&kept.join(" "));
                        if reported.insert(name.clone()) {
                            report.missing_entities.push(MissingEntity { phrase: phrase.clone(), name, line: step.line });
                        }
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DomainModel {
        parse_model(
            "enum Status { On, Off }\n\
             class Sys system\n  attr n: int[0..9]\n  assoc nvm: NVM\n  assoc err: Error\n\
             class NVM\n  attr isAccessible: bool\n\
             class Error abstract\n  attr isDetected: bool\n\
             class TemperatureError abstract extends Error\n\
             class TemperatureLowError extends TemperatureError\n\
             class VoltageError extends Error\n  attr status: Status\n",
        )
        .unwrap()
    }

    #[test]
    fn parses_attribute_types() {
        let m = parse_model("class NVM system\n attr isAccessible: bool\n attr t: int = 3 derived\n").unwrap();
        let c = m.class("NVM").unwrap();
        assert_eq!(c.attributes[0].ty, AttrType::Bool);
        assert_eq!(c.attributes[1].ty, AttrType::Int { lo: -32768, hi: 32767 });
        assert!(c.attributes[1].derived);
        assert_eq!(c.attributes[1].default, Some(Value::Int(3)));
    }

    #[test]
    fn empty_model_has_no_system_class() {
        assert_eq!(parse_model("").unwrap_err().to_string(), "no system class");
    }

    #[test]
    fn rejects_cycles_and_unknown_types() {
        assert!(parse_model("class A system extends B\nclass B extends A\n").is_err());
        assert!(matches!(
            parse_model("class A system\n attr x: Colour\n"),
            Err(ModelError::Invalid(_))
        ));
        assert!(matches!(parse_model("class A system\nfoo bar\n"), Err(ModelError::Parse { line: 2, .. })));
        assert!(parse_model("class A system\n attr x: int[5..1]\n").is_err());
    }

    #[test]
    fn inherited_member_clash_is_rejected() {
        assert!(parse_model("class A system\n attr x: bool\nclass B extends A\n attr x: bool\n").is_err());
    }

    #[test]
    fn subtypes_are_concrete_and_transitive() {
        let m = sample();
        assert_eq!(m.subtypes_of("Error").unwrap(), vec!["TemperatureLowError", "VoltageError"]);
        assert_eq!(m.subtypes_of("NVM").unwrap(), vec!["NVM"]);
        assert!(m.subtypes_of("Nope").is_err());
        let m2 = parse_model("class S system\nclass X abstract\n").unwrap();
        assert!(m2.subtypes_of("X").unwrap().is_empty());
    }

    #[test]
    fn resolves_paths_through_associations() {
        let m = sample();
        let p = m.resolve_path("Sys", &["nvm".into(), "isAccessible".into()]).unwrap();
        assert_eq!(p.terminal_type, AttrType::Bool);
        assert_eq!(p.terminal_class, "NVM");
        let q = m.resolve_path("TemperatureLowError", &["isDetected".into()]).unwrap();
        assert_eq!(q.declared_in, "Error");
        assert_eq!(
            m.resolve_path("Sys", &["nosuch".into()]).unwrap_err(),
            ModelError::UnresolvedSegment { class: "Sys".into(), segment: "nosuch".into() }
        );
        assert!(matches!(m.resolve_path("Sys", &["nvm".into()]), Err(ModelError::NotAnAttribute(_))));
    }

    #[test]
    fn normalizes_entity_names() {
        assert_eq!(normalize_entity_name("occupant class for airbag control"), "OccupantClassForAirbagControl");
        assert_eq!(normalize_entity_name("NVM"), "NVM");
        assert_eq!(normalize_entity_name("the seat sensor"), "SeatSensor");
        let once = normalize_entity_name("the counter of the watchdog");
        assert_eq!(normalize_entity_name(&once), once);
    }

    #[test]
    fn completeness_of_bundled_fixture() {
        let m = crate::fixtures::bodysense_model();
        let lex = crate::lexicon::Lexicon::bundled();
        let r = check_completeness(&m, &crate::fixtures::bodysense_specs(), &lex);
        assert!(r.missing_entities.is_empty(), "{:?}", r.missing_entities);
        assert!(r.matched > 0);
        assert_eq!(check_completeness(&m, &[], &lex), CompletenessReport::default());
    }

    #[test]
    fn completeness_reports_missing_watchdog() {
        let text = crate::fixtures::BODYSENSE_MODEL
            .replace("  assoc watchdog: Watchdog\n", "")
            .replace("class Watchdog\n  attr counter: int[0..255]\n", "");
        let m = parse_model(&text).unwrap();
        let doc = "1. Use Case Reset\n1.1 Precondition\nThe system has been initialized.\n1.2 Basic Flow\n\
                   1. The system resets the counter of the watchdog.\nPostcondition: Reset done.\n";
        let (specs, _) = crate::rucm::parse_document(doc);
        let r = check_completeness(&m, &specs, &crate::lexicon::Lexicon::bundled());
        let names: Vec<&str> = r.missing_entities.iter().map(|e| e.name.as_str()).collect();
        assert!(names.contains(&"Watchdog"), "{names:?}");
    }
}
