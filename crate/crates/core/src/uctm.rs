//! Use case test models: the control-flow graph of a use case specification,
//! and interprocedural merging of included use cases.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::constraint_gen::{generate_formula, FormulaOutcome};
use crate::domain::DomainModel;
use crate::lexicon::Lexicon;
use crate::ocl::{parse_checked, Formula, OclError};
use crate::rucm::{Flow, FlowKind, StepKind, UseCaseSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UctmError {
    #[error("missing constraints for: {}", .0.join(", "))]
    MissingConstraints(Vec<String>),
    #[error("use case `{0}` includes unknown use case `{1}`")]
    MissingInclude(String, String),
    #[error("include cycle: {}", .0.join(" -> "))]
    IncludeCycle(Vec<String>),
    #[error("unknown use case `{0}`")]
    UnknownUseCase(String),
    #[error("line {line}: {message}")]
    ManualConstraint { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlowRef {
    Basic,
    /// 1-based index into the alternative flows.
    Alt(usize),
}

impl fmt::Display for FlowRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowRef::Basic => write!(f, "basic"),
            FlowRef::Alt(k) => write!(f, "alt{k}"),
        }
    }
}

/// Where a node comes from. Step 0 stands for the flow itself (precondition,
/// postcondition).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Provenance {
    pub use_case: String,
    pub flow: FlowRef,
    pub step: u32,
}

impl Provenance {
    pub fn new(use_case: &str, flow: FlowRef, step: u32) -> Self {
        Provenance { use_case: use_case.to_string(), flow, step }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}#{}", self.use_case, self.flow, self.step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRef {
    pub key: String,
    pub text: String,
    pub ocl: Option<Formula>,
}

impl ConstraintRef {
    pub fn formula(&self) -> &Formula {
        self.ocl.as_ref().expect("constraint checked at build time")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    UseCaseStart { precondition: ConstraintRef, next: usize },
    Input { actor: String, entities: Vec<String>, next: usize },
    Condition { constraint: ConstraintRef, on_true: usize, on_false: usize },
    InterruptingCondition { constraint: ConstraintRef, on_true: usize, on_false: usize },
    Internal { postcondition: ConstraintRef, next: usize },
    Exit { postcondition: String, next: Option<usize> },
    Abort { postcondition: String },
    /// Only present before merging.
    Include { use_case: String, next: usize },
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::UseCaseStart { .. } => "UseCaseStart",
            NodeKind::Input { .. } => "Input",
            NodeKind::Condition { .. } => "Condition",
            NodeKind::InterruptingCondition { .. } => "InterruptingCondition",
            NodeKind::Internal { .. } => "Internal",
            NodeKind::Exit { .. } => "Exit",
            NodeKind::Abort { .. } => "Abort",
            NodeKind::Include { .. } => "Include",
        }
    }

    /// Successors, true branch first.
    pub fn successors(&self) -> Vec<usize> {
        match self {
            NodeKind::UseCaseStart { next, .. }
            | NodeKind::Input { next, .. }
            | NodeKind::Internal { next, .. }
            | NodeKind::Include { next, .. } => vec![*next],
            NodeKind::Condition { on_true, on_false, .. } | NodeKind::InterruptingCondition { on_true, on_false, .. } => {
                vec![*on_true, *on_false]
            }
            NodeKind::Exit { next, .. } => next.iter().copied().collect(),
            NodeKind::Abort { .. } => Vec::new(),
        }
    }

    fn map_edges(&mut self, mut f: impl FnMut(usize) -> usize) {
        match self {
            NodeKind::UseCaseStart { next, .. }
            | NodeKind::Input { next, .. }
            | NodeKind::Internal { next, .. }
            | NodeKind::Include { next, .. } => *next = f(*next),
            NodeKind::Condition { on_true, on_false, .. } | NodeKind::InterruptingCondition { on_true, on_false, .. } => {
                *on_true = f(*on_true);
                *on_false = f(*on_false);
            }
            NodeKind::Exit { next, .. } => *next = next.map(f),
            NodeKind::Abort { .. } => {}
        }
    }

    /// The constraint attached to the node, if any.
    pub fn constraint(&self) -> Option<&ConstraintRef> {
        match self {
            NodeKind::UseCaseStart { precondition: c, .. }
            | NodeKind::Condition { constraint: c, .. }
            | NodeKind::InterruptingCondition { constraint: c, .. }
            | NodeKind::Internal { postcondition: c, .. } => Some(c),
            _ => None,
        }
    }

    pub fn is_branch(&self) -> bool {
        matches!(self, NodeKind::Condition { .. } | NodeKind::InterruptingCondition { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UctmNode {
    pub id: usize,
    pub kind: NodeKind,
    pub source: Provenance,
}

/// Node ids are indices into `nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Uctm {
    pub name: String,
    pub nodes: Vec<UctmNode>,
    pub root: usize,
}

impl Uctm {
    pub fn node(&self, id: usize) -> &UctmNode {
        &self.nodes[id]
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&format!("{} {} @{}", n.id, n.kind.name(), n.source));
            let text = match &n.kind {
                NodeKind::Input { entities, .. } => Some(entities.join(", ")),
                NodeKind::Exit { postcondition, .. } | NodeKind::Abort { postcondition } => Some(postcondition.clone()),
                NodeKind::Include { use_case, .. } => Some(use_case.clone()),
                k => k.constraint().map(|c| {
                    let ocl = c.ocl.as_ref().and_then(|f| f.render().ok()).unwrap_or_default();
                    format!("{} | {}", c.text, ocl)
                }),
            };
            if let Some(t) = text {
                out.push_str(&format!(" [{t}]"));
            }
            match &n.kind {
                NodeKind::Condition { on_true, on_false, .. } | NodeKind::InterruptingCondition { on_true, on_false, .. } => {
                    out.push_str(&format!(" -> T:{on_true} F:{on_false}"));
                }
                k => match k.successors().first() {
                    Some(s) => out.push_str(&format!(" -> {s}")),
                    None => out.push_str(" -> end"),
                },
            }
            out.push('\n');
        }
        out
    }

    /// Ids reachable from the root, in depth-first preorder with true
    /// branches first.
    pub fn preorder(&self) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            if seen[n] {
                continue;
            }
            seen[n] = true;
            order.push(n);
            for s in self.nodes[n].kind.successors().into_iter().rev() {
                if !seen[s] {
                    stack.push(s);
                }
            }
        }
        order
    }

    /// Drops unreachable nodes and renumbers the rest in preorder.
    fn compact(self) -> Uctm {
        let order = self.preorder();
        let mut remap = HashMap::new();
        for (new, old) in order.iter().enumerate() {
            remap.insert(*old, new);
        }
        let mut slots: Vec<Option<UctmNode>> = self.nodes.into_iter().map(Some).collect();
        let nodes = order
            .iter()
            .enumerate()
            .map(|(new, old)| {
                let mut n = slots[*old].take().unwrap();
                n.id = new;
                n.kind.map_edges(|e| remap[&e]);
                n
            })
            .collect();
        Uctm { name: self.name, nodes, root: 0 }
    }
}

pub fn constraint_key(use_case: &str, flow: FlowRef, step: u32) -> String {
    match (flow, step) {
        (FlowRef::Basic, 0) => format!("{use_case}#pre#0"),
        _ => format!("{use_case}#{flow}#{step}"),
    }
}

/// Steps that need an OCL constraint, as (key, sentence text).
pub fn required_constraints(spec: &UseCaseSpec) -> Vec<(String, String)> {
    let mut out = vec![(constraint_key(&spec.name, FlowRef::Basic, 0), spec.precondition.join(" "))];
    let flows = std::iter::once((FlowRef::Basic, &spec.basic_flow))
        .chain(spec.alternative_flows.iter().enumerate().map(|(k, f)| (FlowRef::Alt(k + 1), f)));
    for (fr, flow) in flows {
        for s in &flow.steps {
            if matches!(s.kind, StepKind::Condition(_) | StepKind::Guard(_) | StepKind::Internal(_)) {
                out.push((constraint_key(&spec.name, fr, s.number), s.raw_text.clone()));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManualNeeded {
    pub key: String,
    pub sentence: String,
    pub reason: String,
}

/// Parses `<key> := <constraint>` lines; `#` starts a comment line.
pub fn parse_manual_constraints(text: &str) -> Result<BTreeMap<String, String>, UctmError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once(":=") else {
            return Err(UctmError::ManualConstraint { line: i + 1, message: "expected `key := constraint`".into() });
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn render_manual_constraints(table: &BTreeMap<String, ConstraintRef>) -> String {
    let mut out = String::new();
    for (k, c) in table {
        if let Some(f) = &c.ocl {
            out.push_str(&format!("{k} := {}\n", f.render().unwrap_or_default()));
        }
    }
    out
}

fn generate_text(text: &str, model: &DomainModel, lex: &Lexicon) -> Result<Formula, String> {
    let sentences = crate::rucm::split_sentences(text);
    let mut parts = Vec::new();
    for s in &sentences {
        match generate_formula(s, model, lex) {
            FormulaOutcome::Generated { formula, .. } => parts.push(formula),
            FormulaOutcome::NeedsManual { reason, .. } => return Err(reason),
        }
    }
    match parts.len() {
        0 => Err("empty sentence".into()),
        1 => Ok(parts.pop().unwrap()),
        _ => Ok(Formula::And(parts)),
    }
}

/// Generates constraints for every step that needs one. Entries in `manual`
/// take precedence over generated ones.
pub fn generate_constraints(
    spec: &UseCaseSpec,
    model: &DomainModel,
    lex: &Lexicon,
    manual: &BTreeMap<String, String>,
) -> Result<(BTreeMap<String, ConstraintRef>, Vec<ManualNeeded>), OclError> {
    let mut table = BTreeMap::new();
    let mut needed = Vec::new();
    for (key, text) in required_constraints(spec) {
        let ocl = match manual.get(&key) {
            Some(m) => Some(parse_checked(m, model)?),
            None => match generate_text(&text, model, lex) {
                Ok(f) => Some(f),
                Err(reason) => {
                    needed.push(ManualNeeded { key: key.clone(), sentence: text.clone(), reason });
                    None
                }
            },
        };
        table.insert(key.clone(), ConstraintRef { key, text, ocl });
    }
    Ok((table, needed))
}

struct Builder<'a> {
    spec: &'a UseCaseSpec,
    constraints: &'a BTreeMap<String, ConstraintRef>,
    nodes: Vec<UctmNode>,
    missing: Vec<String>,
    resumes: Vec<(usize, u32)>,
    warnings: Vec<String>,
}

const PLACEHOLDER: usize = usize::MAX;

impl<'a> Builder<'a> {
    fn push(&mut self, kind: NodeKind, source: Provenance) -> usize {
        let id = self.nodes.len();
        self.nodes.push(UctmNode { id, kind, source });
        id
    }

    fn prov(&self, flow: FlowRef, step: u32) -> Provenance {
        Provenance::new(&self.spec.name, flow, step)
    }

    fn constraint(&mut self, flow: FlowRef, step: u32) -> ConstraintRef {
        let key = constraint_key(&self.spec.name, flow, step);
        match self.constraints.get(&key) {
            Some(c) if c.ocl.is_some() => c.clone(),
            other => {
                self.missing.push(key.clone());
                ConstraintRef { key, text: other.map(|c| c.text.clone()).unwrap_or_default(), ocl: None }
            }
        }
    }

    /// Builds the steps of an alternative flow after its guard. Returns the
    /// entry node.
    fn flow_body(&mut self, k: usize, flow: &Flow) -> usize {
        let fr = FlowRef::Alt(k);
        let post = flow.postcondition_text();
        let steps: Vec<_> = flow.steps.iter().filter(|s| !matches!(s.kind, StepKind::Guard(_))).collect();
        let end = steps.iter().position(|s| s.kind.is_terminal());
        let mut next = match end.map(|i| steps[i]) {
            Some(s) => match s.kind {
                StepKind::Abort => self.push(NodeKind::Abort { postcondition: post.clone() }, self.prov(fr, s.number)),
                StepKind::Resume(n) => {
                    let id = self.push(NodeKind::Exit { postcondition: post.clone(), next: Some(PLACEHOLDER) }, self.prov(fr, s.number));
                    self.resumes.push((id, n));
                    id
                }
                _ => self.push(NodeKind::Exit { postcondition: post.clone(), next: None }, self.prov(fr, s.number)),
            },
            None => {
                self.warnings.push(format!("flow {} has no terminal step; treated as EXIT", flow.label));
                let last = steps.last().map_or(0, |s| s.number + 1);
                self.push(NodeKind::Exit { postcondition: post.clone(), next: None }, self.prov(fr, last))
            }
        };
        let body = &steps[..end.unwrap_or(steps.len())];
        for s in body.iter().rev() {
            next = self.step_node(fr, s.number, &s.kind, next, None);
        }
        next
    }

    /// A node for a non-terminal step. `on_false` is the false target for
    /// condition steps; `None` means an implicit abort.
    fn step_node(&mut self, fr: FlowRef, number: u32, kind: &StepKind, next: usize, on_false: Option<usize>) -> usize {
        let prov = self.prov(fr, number);
        match kind {
            StepKind::Output { .. } => next,
            StepKind::Input { actor, entities } => {
                self.push(NodeKind::Input { actor: actor.clone(), entities: entities.clone(), next }, prov)
            }
            StepKind::Include(uc) => self.push(NodeKind::Include { use_case: uc.clone(), next }, prov),
            StepKind::Internal(_) => {
                let c = self.constraint(fr, number);
                self.push(NodeKind::Internal { postcondition: c, next }, prov)
            }
            StepKind::Condition(_) => {
                let c = self.constraint(fr, number);
                let f = match on_false {
                    Some(f) => f,
                    None => self.push(NodeKind::Abort { postcondition: String::new() }, prov.clone()),
                };
                self.push(NodeKind::Condition { constraint: c, on_true: next, on_false: f }, prov)
            }
            StepKind::Guard(_) | StepKind::Resume(_) => next,
            StepKind::Abort => self.push(NodeKind::Abort { postcondition: String::new() }, prov),
            StepKind::Exit => self.push(NodeKind::Exit { postcondition: String::new(), next: None }, prov),
        }
    }

    /// Chains specific flows in document order. Guarded flows become
    /// conditions; an unguarded flow ends the chain.
    fn specific_chain(&mut self, flows: &[(usize, usize)], fallback: Option<usize>) -> Option<usize> {
        let mut tail = fallback;
        let mut chain: Vec<(usize, usize, bool)> = Vec::new();
        for &(k, body) in flows {
            let guarded = self.spec.alternative_flows[k - 1].guard().is_some();
            chain.push((k, body, guarded));
            if !guarded {
                tail = Some(body);
                break;
            }
        }
        for &(k, body, guarded) in chain.iter().rev() {
            if !guarded {
                continue;
            }
            let c = self.constraint(FlowRef::Alt(k), 1);
            let prov = self.prov(FlowRef::Alt(k), 1);
            let f = match tail {
                Some(t) => t,
                None => self.push(NodeKind::Abort { postcondition: String::new() }, prov.clone()),
            };
            tail = Some(self.push(NodeKind::Condition { constraint: c, on_true: body, on_false: f }, prov));
        }
        tail
    }
}

/// Builds the test model of one use case. Returns the model and warnings.
pub fn build_uctm(spec: &UseCaseSpec, constraints: &BTreeMap<String, ConstraintRef>) -> Result<(Uctm, Vec<String>), UctmError> {
    let mut b = Builder { spec, constraints, nodes: Vec::new(), missing: Vec::new(), resumes: Vec::new(), warnings: Vec::new() };
    let basic_len = spec.basic_len();
    let bodies: Vec<usize> = spec.alternative_flows.iter().enumerate().map(|(i, f)| b.flow_body(i + 1, f)).collect();

    let mut entry: BTreeMap<u32, usize> = BTreeMap::new();
    let exit = b.push(
        NodeKind::Exit { postcondition: spec.basic_flow.postcondition_text(), next: None },
        b.prov(FlowRef::Basic, 0),
    );
    entry.insert(basic_len + 1, exit);
    for step in spec.basic_flow.steps.iter().rev() {
        let s = step.number;
        let after = entry[&(s + 1)];
        let specific: Vec<(usize, usize)> = spec
            .alternative_flows
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FlowKind::Specific { rfs: s })
            .map(|(i, _)| (i + 1, bodies[i]))
            .collect();
        let mut node = match &step.kind {
            StepKind::Condition(_) => {
                let f = b.specific_chain(&specific, None);
                b.step_node(FlowRef::Basic, s, &step.kind, after, f)
            }
            kind => {
                let cont = if specific.is_empty() { after } else { b.specific_chain(&specific, Some(after)).unwrap() };
                b.step_node(FlowRef::Basic, s, kind, cont, None)
            }
        };
        let interrupts: Vec<usize> = spec
            .alternative_flows
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f.kind, FlowKind::Bounded { .. } | FlowKind::Global))
            .filter(|(_, f)| f.kind.referenced_steps(basic_len).contains(&s))
            .map(|(i, _)| i)
            .collect();
        for &i in interrupts.iter().rev() {
            let c = b.constraint(FlowRef::Alt(i + 1), 1);
            let prov = b.prov(FlowRef::Alt(i + 1), s);
            node = b.push(NodeKind::InterruptingCondition { constraint: c, on_true: bodies[i], on_false: node }, prov);
        }
        entry.insert(s, node);
    }
    let first = entry.get(&1).copied().unwrap_or(exit);
    let pre = b.constraint(FlowRef::Basic, 0);
    let root = b.push(NodeKind::UseCaseStart { precondition: pre, next: first }, b.prov(FlowRef::Basic, 0));
    for (id, n) in std::mem::take(&mut b.resumes) {
        let target = entry.get(&n).copied().unwrap_or(exit);
        if let NodeKind::Exit { next, .. } = &mut b.nodes[id].kind {
            *next = Some(target);
        }
    }
    if !b.missing.is_empty() {
        let mut keys = b.missing;
        keys.sort();
        keys.dedup();
        return Err(UctmError::MissingConstraints(keys));
    }
    let uctm = Uctm { name: spec.name.clone(), nodes: b.nodes, root }.compact();
    Ok((uctm, b.warnings))
}

/// Replaces include nodes with copies of the included models. The basic-flow
/// exits of an included model continue at the node after the include.
pub fn merge_includes(root: &Uctm, all: &BTreeMap<String, Uctm>) -> Result<Uctm, UctmError> {
    let mut out = Vec::new();
    let mut stack = Vec::new();
    let (r, _) = expand(root, all, &mut stack, &mut out)?;
    Ok(Uctm { name: root.name.clone(), nodes: out, root: r }.compact())
}

fn expand(
    tm: &Uctm,
    all: &BTreeMap<String, Uctm>,
    stack: &mut Vec<String>,
    out: &mut Vec<UctmNode>,
) -> Result<(usize, Vec<usize>), UctmError> {
    if stack.contains(&tm.name) {
        let mut cycle = stack.clone();
        cycle.push(tm.name.clone());
        return Err(UctmError::IncludeCycle(cycle));
    }
    stack.push(tm.name.clone());
    let offset = out.len();
    for n in &tm.nodes {
        let mut n = n.clone();
        n.id += offset;
        n.kind.map_edges(|e| e + offset);
        out.push(n);
    }
    let mut redirect: HashMap<usize, usize> = HashMap::new();
    let mut exits: Vec<(Vec<usize>, usize)> = Vec::new();
    for i in offset..offset + tm.nodes.len() {
        if let NodeKind::Include { use_case, next } = &out[i].kind {
            let next = *next;
            let inc = all.get(use_case).ok_or_else(|| UctmError::MissingInclude(tm.name.clone(), use_case.clone()))?;
            let (r, ex) = expand(inc, all, stack, out)?;
            redirect.insert(i, r);
            exits.push((ex, next));
        }
    }
    let resolve = |mut e: usize| {
        let mut guard = 0;
        while let Some(&r) = redirect.get(&e) {
            e = r;
            guard += 1;
            if guard > redirect.len() {
                break;
            }
        }
        e
    };
    for (ex, next) in exits {
        let target = resolve(next);
        for x in ex {
            if let NodeKind::Exit { next, .. } = &mut out[x].kind {
                *next = Some(target);
            }
        }
    }
    for i in offset..offset + tm.nodes.len() {
        out[i].kind.map_edges(resolve);
    }
    let basic_exits = (offset..offset + tm.nodes.len())
        .filter(|&i| {
            out[i].source.flow == FlowRef::Basic
                && out[i].source.use_case == tm.name
                && matches!(out[i].kind, NodeKind::Exit { next: None, .. })
        })
        .collect();
    stack.pop();
    Ok((resolve(tm.root + offset), basic_exits))
}

/// Builds every use case and merges includes into the model of `root`.
pub fn build_merged(
    specs: &[UseCaseSpec],
    constraints: &BTreeMap<String, ConstraintRef>,
    root: &str,
) -> Result<(Uctm, Vec<String>), UctmError> {
    let mut all = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut missing = Vec::new();
    for s in specs {
        match build_uctm(s, constraints) {
            Ok((tm, w)) => {
                warnings.extend(w);
                all.insert(s.name.clone(), tm);
            }
            Err(UctmError::MissingConstraints(keys)) => missing.extend(keys),
            Err(e) => return Err(e),
        }
    }
    if !missing.is_empty() {
        return Err(UctmError::MissingConstraints(missing));
    }
    let tm = all.get(root).ok_or_else(|| UctmError::UnknownUseCase(root.to_string()))?;
    Ok((merge_includes(tm, &all)?, warnings))
}

/// Use cases that no other use case includes.
pub fn top_level_use_cases(specs: &[UseCaseSpec]) -> Vec<String> {
    let included: std::collections::BTreeSet<&str> = specs
        .iter()
        .flat_map(|s| std::iter::once(&s.basic_flow).chain(&s.alternative_flows))
        .flat_map(|f| &f.steps)
        .filter_map(|s| match &s.kind {
            StepKind::Include(n) => Some(n.as_str()),
            _ => None,
        })
        .collect();
    specs.iter().filter(|s| !included.contains(s.name.as_str())).map(|s| s.name.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rucm::parse_document;

    fn fixture() -> (Vec<UseCaseSpec>, BTreeMap<String, ConstraintRef>) {
        let model = fixtures::bodysense_model();
        let (specs, diags) = parse_document(fixtures::BODYSENSE_RUCM);
        assert!(!crate::rucm::has_errors(&diags), "{diags:?}");
        let mut table = BTreeMap::new();
        for s in &specs {
            let (t, needed) = generate_constraints(s, &model, &Lexicon::bundled(), &BTreeMap::new()).unwrap();
            assert!(needed.is_empty(), "{needed:?}");
            table.extend(t);
        }
        (specs, table)
    }

    fn kinds(tm: &Uctm) -> Vec<&'static str> {
        tm.nodes.iter().map(|n| n.kind.name()).collect()
    }

    #[test]
    fn classify_shape() {
        let (specs, table) = fixture();
        let (tm, w) = build_uctm(&specs[2], &table).unwrap();
        assert!(w.is_empty());
        assert_eq!(
            kinds(&tm),
            [
                "UseCaseStart", "Internal", "Internal", "Condition", "Internal", "Internal", "Exit", "Condition", "Internal",
                "Internal", "Exit", "Internal", "Internal", "Exit"
            ]
        );
        let NodeKind::Condition { on_false, .. } = &tm.nodes[3].kind else { panic!() };
        assert_eq!(tm.nodes[*on_false].source, Provenance::new("Classify Occupancy Status", FlowRef::Alt(1), 1));
    }

    #[test]
    fn resume_targets_basic_step() {
        let (specs, table) = fixture();
        let (tm, _) = build_uctm(&specs[1], &table).unwrap();
        let resume = tm
            .nodes
            .iter()
            .find(|n| n.source == Provenance::new("Self Diagnosis", FlowRef::Alt(1), 2))
            .unwrap();
        let NodeKind::Exit { next: Some(t), .. } = resume.kind else { panic!() };
        assert_eq!(tm.nodes[t].source, Provenance::new("Self Diagnosis", FlowRef::Basic, 4));
        let resume7 = tm.nodes.iter().find(|n| n.source == Provenance::new("Self Diagnosis", FlowRef::Alt(2), 2)).unwrap();
        let NodeKind::Exit { next: Some(t), .. } = resume7.kind else { panic!() };
        assert_eq!(tm.nodes[t].source, Provenance::new("Self Diagnosis", FlowRef::Basic, 7));
    }

    #[test]
    fn bounded_flow_interrupts_three_steps() {
        let (specs, table) = fixture();
        let (tm, _) = build_uctm(&specs[0], &table).unwrap();
        let ics: Vec<u32> = tm
            .nodes
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::InterruptingCondition { .. }))
            .map(|n| n.source.step)
            .collect();
        assert_eq!(ics, [2, 3, 4]);
        let (merged, _) = build_merged(&specs, &table, "Identify Occupancy Status").unwrap();
        assert_eq!(merged.nodes.iter().filter(|n| matches!(n.kind, NodeKind::InterruptingCondition { .. })).count(), 3);
        assert!(merged.nodes.iter().all(|n| !matches!(n.kind, NodeKind::Include { .. })));
    }

    #[test]
    fn merged_basic_path() {
        let (specs, table) = fixture();
        let (tm, _) = build_merged(&specs, &table, "Identify Occupancy Status").unwrap();
        let mut path = Vec::new();
        let mut n = tm.root;
        loop {
            path.push(tm.nodes[n].source.to_string());
            n = match &tm.nodes[n].kind {
                NodeKind::Condition { on_true, .. } => *on_true,
                NodeKind::InterruptingCondition { on_false, .. } => *on_false,
                k => match k.successors().first() {
                    Some(s) => *s,
                    None => break,
                },
            };
        }
        let expected = [
            "Identify Occupancy Status#basic#0",
            "Identify Occupancy Status#basic#1",
            "Identify Occupancy Status#alt1#2",
            "Self Diagnosis#basic#0",
            "Self Diagnosis#basic#1",
            "Self Diagnosis#basic#2",
            "Self Diagnosis#basic#3",
            "Self Diagnosis#basic#4",
            "Self Diagnosis#basic#5",
            "Self Diagnosis#basic#6",
            "Self Diagnosis#basic#7",
            "Self Diagnosis#basic#0",
            "Identify Occupancy Status#alt1#3",
            "Identify Occupancy Status#basic#3",
            "Identify Occupancy Status#alt1#4",
            "Classify Occupancy Status#basic#0",
            "Classify Occupancy Status#basic#1",
            "Classify Occupancy Status#basic#2",
            "Classify Occupancy Status#basic#3",
            "Classify Occupancy Status#basic#4",
            "Classify Occupancy Status#basic#5",
            "Classify Occupancy Status#basic#0",
            "Identify Occupancy Status#basic#0",
        ];
        assert_eq!(path, expected);
    }

    #[test]
    fn missing_constraint_lists_keys() {
        let (specs, mut table) = fixture();
        table.remove("Classify Occupancy Status#basic#3");
        table.remove("Classify Occupancy Status#alt1#1");
        let err = build_uctm(&specs[2], &table).unwrap_err();
        assert_eq!(
            err,
            UctmError::MissingConstraints(vec!["Classify Occupancy Status#alt1#1".into(), "Classify Occupancy Status#basic#3".into()])
        );
    }

    #[test]
    fn include_cycle_is_rejected() {
        let doc = "1. Use Case A\n1.1 Precondition\nThe system has been initialized.\n1.2 Basic Flow\n1. INCLUDE USE CASE B.\nPostcondition: done.\n\n\
                   2. Use Case B\n2.1 Precondition\nThe system has been initialized.\n2.2 Basic Flow\n1. INCLUDE USE CASE A.\nPostcondition: done.\n";
        let (specs, _) = parse_document(doc);
        let model = fixtures::bodysense_model();
        let mut table = BTreeMap::new();
        for s in &specs {
            table.extend(generate_constraints(s, &model, &Lexicon::bundled(), &BTreeMap::new()).unwrap().0);
        }
        let err = build_merged(&specs, &table, "A").unwrap_err();
        assert_eq!(err, UctmError::IncludeCycle(vec!["A".into(), "B".into(), "A".into()]));
    }

    #[test]
    fn linear_internal_chain() {
        let doc = "1. Use Case Reset\n1.1 Precondition\nThe system has been initialized.\n1.2 Basic Flow\n\
                   1. The system resets the watchdog counter.\n2. The system erases the measured voltage.\nPostcondition: Reset done.\n";
        let (specs, _) = parse_document(doc);
        let model = fixtures::bodysense_model();
        let (table, _) = generate_constraints(&specs[0], &model, &Lexicon::bundled(), &BTreeMap::new()).unwrap();
        let (tm, _) = build_uctm(&specs[0], &table).unwrap();
        assert_eq!(kinds(&tm), ["UseCaseStart", "Internal", "Internal", "Exit"]);
        let merged = merge_includes(&tm, &BTreeMap::new()).unwrap();
        assert_eq!(merged, tm);
    }

    #[test]
    fn manual_constraints_override() {
        let (specs, _) = fixture();
        let model = fixtures::bodysense_model();
        let manual = parse_manual_constraints(
            "# comment\nClassify Occupancy Status#basic#3 := BodySense.allInstances() -> forAll( i | i.seatSensor.capacitance > 700 )\n",
        )
        .unwrap();
        let (t, _) = generate_constraints(&specs[2], &model, &Lexicon::bundled(), &manual).unwrap();
        let c = &t["Classify Occupancy Status#basic#3"];
        assert!(c.ocl.as_ref().unwrap().render().unwrap().contains("> 700"));
        assert!(matches!(parse_manual_constraints("bad line"), Err(UctmError::ManualConstraint { line: 1, .. })));
    }

    #[test]
    fn dump_lines() {
        let (specs, table) = fixture();
        let (tm, _) = build_uctm(&specs[2], &table).unwrap();
        let dump = tm.dump();
        assert!(dump.starts_with("0 UseCaseStart @Classify Occupancy Status#basic#0 [The system has been initialized. | "));
        assert!(dump.contains("3 Condition @Classify Occupancy Status#basic#3 [The system VALIDATES THAT the capacitance is above 600. | BodySense.allInstances() -> forAll( i | i.seatSensor.capacitance > 600 )] -> T:4 F:7"));
        assert!(dump.lines().last().unwrap().ends_with("-> end"));
    }
}
