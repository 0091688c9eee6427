//! Test case emission: abstract Setup/Input/Check lines from a solved
//! scenario, and executable lines through a regex mapping table.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use thiserror::Error;

use crate::domain::{DomainModel, Member, Value};
use crate::lexicon::Lexicon;
use crate::ocl::{Formula, RhsTerm};
use crate::scenario::Scenario;
use crate::similarity::attr_similarity;
use crate::solver::{EvalError, ObjectDiagram, ValueSource};
use crate::uctm::{NodeKind, Uctm};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmitError {
    #[error("line {line}: {message}")]
    Mapping { line: usize, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Operation {
    Setup,
    Input,
    Check,
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Operation::Setup => "Setup",
            Operation::Input => "Input",
            Operation::Check => "Check",
        })
    }
}

impl FromStr for Operation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Setup" => Ok(Operation::Setup),
            "Input" => Ok(Operation::Input),
            "Check" => Ok(Operation::Check),
            other => Err(format!("unknown operation `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AbstractLine {
    pub op: Operation,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AbstractTestCase {
    pub lines: Vec<AbstractLine>,
}

impl AbstractTestCase {
    /// `.atc` text: one `Operation<TAB>payload` line per step.
    pub fn render(&self) -> String {
        self.lines.iter().map(|l| format!("{}\t{}\n", l.op, l.payload)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct MappingRow {
    pub op: Operation,
    pub pattern: Regex,
    pub driver_op: String,
    pub args_template: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExecutableLine {
    pub description: AbstractLine,
    pub driver_op: String,
    pub args: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExecutableTestCase {
    pub lines: Vec<ExecutableLine>,
    pub unmapped: Vec<AbstractLine>,
}

impl ExecutableTestCase {
    /// `.etc` text: each description line followed by its driver call.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(&format!("{}\t{}\n{}\t{}\n", l.description.op, l.description.payload, l.driver_op, l.args));
        }
        out
    }

    pub fn driver_lines(&self) -> Vec<(&str, &str)> {
        self.lines.iter().map(|l| (l.driver_op.as_str(), l.args.as_str())).collect()
    }
}

/// Options for rendering assignments.
#[derive(Debug, Clone)]
pub struct EmitOptions {
    /// Name printed for the system instance.
    pub system_alias: String,
    /// Maximum association depth when resolving Input step entities.
    pub max_depth: usize,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions { system_alias: "System".into(), max_depth: 3 }
    }
}

type AttrKey = (usize, String);

struct Assignment {
    key: AttrKey,
    attribute: (String, String),
    line: String,
}

fn instance_ref(d: &ObjectDiagram, inst: usize, model: &DomainModel, opts: &EmitOptions) -> String {
    if d.instances[inst].class == model.system_class() {
        opts.system_alias.clone()
    } else {
        d.instances[inst].id.clone()
    }
}

/// Follows `segments` to the instance owning the last attribute.
fn terminal(d: &ObjectDiagram, inst: usize, segments: &[String]) -> Result<Option<usize>, EvalError> {
    let mut cur = inst;
    for seg in &segments[..segments.len().saturating_sub(1)] {
        match d.link(cur, seg)? {
            Some(n) => cur = n,
            None => return Ok(None),
        }
    }
    Ok(Some(cur))
}

/// Assignments for every attribute a formula reads, one per selected instance.
fn formula_assignments(
    f: &Formula,
    d: &ObjectDiagram,
    model: &DomainModel,
    opts: &EmitOptions,
) -> Result<Vec<Assignment>, EvalError> {
    let mut out = Vec::new();
    for a in f.atoms() {
        let Some(c) = a.comparison() else { continue };
        let mut paths = vec![&c.lhs];
        if let RhsTerm::Var(p) = &c.rhs {
            paths.push(p);
        }
        for inst in 0..d.instances.len() {
            let class = &d.instances[inst].class;
            if !model.conforms(class, &a.entity) || a.excluded.iter().any(|x| model.conforms(class, x)) {
                continue;
            }
            for p in &paths {
                let Some(t) = terminal(d, inst, p)? else { continue };
                let Ok(vp) = model.resolve_path(&a.entity, p) else { continue };
                let value = d.read(inst, p)?;
                out.push(Assignment {
                    key: (t, p.last().cloned().unwrap_or_default()),
                    attribute: vp.attribute_id(),
                    line: format!("{}.{} = {}", instance_ref(d, inst, model, opts), p.join("."), value),
                });
            }
        }
    }
    Ok(out)
}

/// Attribute paths from the system class, up to `depth` associations deep.
fn system_paths(model: &DomainModel, depth: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut frontier: Vec<(String, Vec<String>)> = vec![(model.system_class().to_string(), Vec::new())];
    for level in 0..=depth {
        let mut next = Vec::new();
        for (class, prefix) in &frontier {
            for m in model.members(class) {
                let mut p = prefix.clone();
                p.push(m.name().to_string());
                match m {
                    Member::Attr { .. } => out.push(p),
                    Member::Assoc { def, .. } if level < depth => next.push((def.target.clone(), p)),
                    Member::Assoc { .. } => {}
                }
            }
        }
        frontier = next;
    }
    out
}

/// Attribute paths from the system instance an Input step's entity phrases
/// refer to, restricted to attributes in `relevant`.
fn input_paths(
    entities: &[String],
    model: &DomainModel,
    lex: &Lexicon,
    relevant: &BTreeSet<(String, String)>,
    opts: &EmitOptions,
) -> Vec<Vec<String>> {
    let candidates = system_paths(model, opts.max_depth);
    let sys = model.system_class();
    let mut out: Vec<Vec<String>> = Vec::new();
    for phrase in entities {
        let mut scored: Vec<(f64, &Vec<String>)> = candidates
            .iter()
            .filter_map(|p| {
                let id = model.resolve_path(sys, p).ok()?.attribute_id();
                if !relevant.contains(&id) {
                    return None;
                }
                let m = attr_similarity(p.last()?, phrase, lex)?;
                (!m.antonym).then_some((m.score, p))
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.len().cmp(&b.1.len())));
        if let Some((best, _)) = scored.first().copied() {
            for (s, p) in scored {
                if s == best && !out.contains(p) {
                    out.push(p.clone());
                }
            }
        }
    }
    out
}

/// Builds Setup, Input and Check lines in scenario order. Precondition
/// assignments are driven as Input lines; attributes first read by conditions
/// become Setup lines.
pub fn abstract_test_case(
    tm: &Uctm,
    scenario: &Scenario,
    diagram: &ObjectDiagram,
    model: &DomainModel,
    lex: &Lexicon,
    opts: &EmitOptions,
) -> Result<AbstractTestCase, EmitError> {
    let relevant: BTreeSet<(String, String)> = scenario
        .pc
        .iter()
        .flat_map(|e| e.formula.paths(model))
        .map(|p| p.attribute_id())
        .collect();
    let sys = diagram.system_instance(model);

    // attributes handled by Input and interrupting steps are not Setup material
    let mut input_attrs: BTreeSet<(String, String)> = BTreeSet::new();
    for &n in &scenario.nodes {
        match &tm.node(n).kind {
            NodeKind::Input { entities, .. } => {
                for p in input_paths(entities, model, lex, &relevant, opts) {
                    if let Ok(vp) = model.resolve_path(model.system_class(), &p) {
                        input_attrs.insert(vp.attribute_id());
                    }
                }
            }
            NodeKind::InterruptingCondition { constraint, .. } => {
                if let Some(f) = &constraint.ocl {
                    input_attrs.extend(f.paths(model).into_iter().map(|p| p.attribute_id()));
                }
            }
            _ => {}
        }
    }

    let mut lines = Vec::new();
    let mut setup_seen: BTreeSet<AttrKey> = BTreeSet::new();
    let pc_of = |node: usize, polarity: bool| scenario.pc.iter().find(|e| e.node == node && e.polarity == polarity);
    let mut decisions = scenario.decisions.iter().map(|(_, n, p)| (*n, *p)).collect::<Vec<_>>().into_iter();
    for &n in &scenario.nodes {
        match &tm.node(n).kind {
            NodeKind::UseCaseStart { precondition, .. } => {
                if let Some(f) = &precondition.ocl {
                    for a in formula_assignments(f, diagram, model, opts)? {
                        if !input_attrs.contains(&a.attribute) && setup_seen.insert(a.key) {
                            lines.push(AbstractLine { op: Operation::Input, payload: a.line });
                        }
                    }
                }
            }
            NodeKind::Condition { .. } => {
                let polarity = decisions.find(|(d, _)| *d == n).map_or(true, |(_, p)| p);
                if let Some(e) = pc_of(n, polarity) {
                    for a in formula_assignments(&e.formula, diagram, model, opts)? {
                        if !input_attrs.contains(&a.attribute) && setup_seen.insert(a.key) {
                            lines.push(AbstractLine { op: Operation::Setup, payload: a.line });
                        }
                    }
                }
            }
            NodeKind::InterruptingCondition { .. } => {
                if let Some(e) = pc_of(n, true) {
                    let mut seen = BTreeSet::new();
                    for a in formula_assignments(&e.formula, diagram, model, opts)? {
                        if seen.insert(a.key) {
                            lines.push(AbstractLine { op: Operation::Input, payload: a.line });
                        }
                    }
                }
            }
            NodeKind::Input { entities, .. } => {
                let Some(s) = sys else { continue };
                for p in input_paths(entities, model, lex, &relevant, opts) {
                    let v: Value = diagram.read(s, &p)?;
                    lines.push(AbstractLine {
                        op: Operation::Input,
                        payload: format!("{}.{} = {}", opts.system_alias, p.join("."), v),
                    });
                }
            }
            NodeKind::Exit { postcondition, .. } | NodeKind::Abort { postcondition } => {
                if !postcondition.trim().is_empty() {
                    lines.push(AbstractLine { op: Operation::Check, payload: postcondition.clone() });
                }
            }
            NodeKind::Internal { .. } | NodeKind::Include { .. } => {}
        }
    }
    Ok(AbstractTestCase { lines })
}

/// Parses a tab separated table: operation, pattern, driver function,
/// argument template with `\1`..`\9` references. `#` starts a comment line.
pub fn parse_mapping_table(text: &str) -> Result<Vec<MappingRow>, EmitError> {
    let backref = Regex::new(r"\\([0-9])").unwrap();
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() != 4 {
            return Err(EmitError::Mapping { line, message: format!("expected 4 tab separated columns, found {}", cols.len()) });
        }
        let op: Operation = cols[0].parse().map_err(|message| EmitError::Mapping { line, message })?;
        let pattern = Regex::new(&format!("^(?:{})$", cols[1]))
            .map_err(|e| EmitError::Mapping { line, message: format!("bad pattern: {e}") })?;
        let groups = pattern.captures_len() - 1;
        for c in backref.captures_iter(cols[3]) {
            let n: usize = c[1].parse().unwrap();
            if n == 0 || n > groups {
                return Err(EmitError::Mapping { line, message: format!("reference \\{n} but the pattern has {groups} groups") });
            }
        }
        rows.push(MappingRow { op, pattern, driver_op: cols[2].trim().to_string(), args_template: cols[3].trim().to_string() });
    }
    Ok(rows)
}

fn substitute(template: &str, caps: &regex::Captures<'_>) -> String {
    let mut out = String::new();
    let mut chars = template.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(d) = chars.peek().and_then(|d| d.to_digit(10)) {
                chars.next();
                out.push_str(caps.get(d as usize).map_or("", |m| m.as_str()));
                continue;
            }
        }
        out.push(c);
    }
    out
}

/// Maps each abstract line through the first matching row of its kind.
/// Lines without a match are listed in `unmapped` and left out.
pub fn apply_mapping(abs: &AbstractTestCase, table: &[MappingRow]) -> ExecutableTestCase {
    let mut out = ExecutableTestCase::default();
    for l in &abs.lines {
        let hit = table.iter().filter(|r| r.op == l.op).find_map(|r| r.pattern.captures(&l.payload).map(|c| (r, c)));
        match hit {
            Some((r, caps)) => out.lines.push(ExecutableLine {
                description: l.clone(),
                driver_op: r.driver_op.clone(),
                args: substitute(&r.args_template, &caps),
            }),
            None => out.unmapped.push(l.clone()),
        }
    }
    out
}

/// Drops test cases whose driver lines repeat an earlier one.
pub fn dedupe(cases: Vec<ExecutableTestCase>) -> Vec<ExecutableTestCase> {
    let mut seen = BTreeSet::new();
    cases
        .into_iter()
        .filter(|c| {
            let key: Vec<(String, String)> = c.lines.iter().map(|l| (l.driver_op.clone(), l.args.clone())).collect();
            seen.insert(key)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scenario::{generate_scenarios_and_inputs, GenConfig};

    fn line(op: Operation, payload: &str) -> AbstractLine {
        AbstractLine { op, payload: payload.into() }
    }

    #[test]
    fn scenario_a_abstract_and_executable() {
        let model = fixtures::bodysense_model();
        let tm = fixtures::bodysense_merged();
        let report = generate_scenarios_and_inputs(&tm, &model, &GenConfig::default());
        let a = &report.feasible[0];
        let abs = abstract_test_case(&tm, &a.scenario, &a.diagram, &model, &Lexicon::bundled(), &EmitOptions::default()).unwrap();
        assert_eq!(abs.lines[0], line(Operation::Input, "System.initialized = true"));
        assert!(abs.lines.contains(&line(Operation::Input, "System.seatSensor.capacitance = 601")));
        assert!(abs.lines.contains(&line(Operation::Input, "System.temperature = 20")));
        assert!(abs.lines.contains(&line(Operation::Check, "Error conditions have been examined.")));
        let table = parse_mapping_table(fixtures::BODYSENSE_MAP).unwrap();
        let exe = apply_mapping(&abs, &table);
        assert_eq!(
            exe.driver_lines(),
            [
                ("ResetPower", "Time=INIT_TIME"),
                ("SetBus", "Channel = RELAY Capacitance = 601"),
                ("SetBus", "Channel = RELAY Temperature = 20"),
                ("ReadAndCheckBus", "D0=OCCUPIED D1=OCCUPIED"),
                ("CheckAirbagPin", "0x010"),
            ]
        );
        assert!(exe.unmapped.contains(&line(Operation::Check, "Error conditions have been examined.")));
    }

    #[test]
    fn mapping_rows_and_backrefs() {
        let t = parse_mapping_table("Input\tBodySense\\.seatSensor\\.capacitance = (.*)\tSetBus\tChannel = RELAY Capacitance = \\1\n").unwrap();
        let abs = AbstractTestCase { lines: vec![line(Operation::Input, "BodySense.seatSensor.capacitance = 601")] };
        let exe = apply_mapping(&abs, &t);
        assert_eq!(exe.lines[0].args, "Channel = RELAY Capacitance = 601");
        assert!(parse_mapping_table("").unwrap().is_empty());
        assert!(matches!(parse_mapping_table("Input\t(a\tX\ty"), Err(EmitError::Mapping { line: 1, .. })));
        assert!(matches!(parse_mapping_table("\nInput\t(a)\tX\t\\2"), Err(EmitError::Mapping { line: 2, .. })));
        assert!(matches!(parse_mapping_table("Input\ta\tX"), Err(EmitError::Mapping { line: 1, .. })));
    }

    #[test]
    fn unmatched_lines_are_reported() {
        let abs = AbstractTestCase { lines: vec![line(Operation::Check, "Nothing matches this.")] };
        let exe = apply_mapping(&abs, &parse_mapping_table(fixtures::BODYSENSE_MAP).unwrap());
        assert!(exe.lines.is_empty());
        assert_eq!(exe.unmapped.len(), 1);
    }

    #[test]
    fn first_matching_row_wins() {
        let t = parse_mapping_table("Check\tA.*\tFirst\t1\nCheck\tAB\tSecond\t2\n").unwrap();
        let exe = apply_mapping(&AbstractTestCase { lines: vec![line(Operation::Check, "AB")] }, &t);
        assert_eq!(exe.lines[0].driver_op, "First");
    }

    #[test]
    fn dedupe_keeps_first() {
        let t = parse_mapping_table(fixtures::BODYSENSE_MAP).unwrap();
        let a = apply_mapping(&AbstractTestCase { lines: vec![line(Operation::Setup, "System.initialized = true")] }, &t);
        let b = apply_mapping(&AbstractTestCase { lines: vec![line(Operation::Input, "System.temperature = 3")] }, &t);
        let out = dedupe(vec![a.clone(), b.clone(), a.clone()]);
        assert_eq!(out, vec![a.clone(), b]);
        assert_eq!(dedupe(out.clone()), out);
        assert!(dedupe(Vec::new()).is_empty());
    }
}
