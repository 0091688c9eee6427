//! Restricted use case documents: parsing, step classification, validation and
//! serialization.
//!
//! ```text
//! 1. Use Case Classify Occupancy Status
//! 1.1 Precondition
//! The system has been initialized.
//! 1.2 Basic Flow
//! 1. The system VALIDATES THAT the capacitance is above 600.
//! Postcondition: An adult has been detected on the seat.
//! 1.3 Specific Alternative Flow
//! RFS 1
//! 1. ABORT
//! Postcondition: Nothing was detected.
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub line: usize,
    pub message: String,
}

impl Diagnostic {
    fn error(line: usize, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, line, message: message.into() }
    }

    fn warning(line: usize, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, line, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "line {}: {sev}: {}", self.line, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Basic,
    Specific { rfs: u32 },
    Bounded { from: u32, to: u32 },
    Global,
}

impl FlowKind {
    /// Basic flow steps this flow refers to, given the basic flow length.
    pub fn referenced_steps(&self, basic_len: u32) -> Vec<u32> {
        match *self {
            FlowKind::Basic => Vec::new(),
            FlowKind::Specific { rfs } => vec![rfs],
            FlowKind::Bounded { from, to } => (from..=to).collect(),
            FlowKind::Global => (1..=basic_len).collect(),
        }
    }

    fn header(&self) -> &'static str {
        match self {
            FlowKind::Basic => "Basic Flow",
            FlowKind::Specific { .. } => "Specific Alternative Flow",
            FlowKind::Bounded { .. } => "Bounded Alternative Flow",
            FlowKind::Global => "Global Alternative Flow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepKind {
    Input { actor: String, entities: Vec<String> },
    Output { entities: Vec<String>, actor: String },
    Include(String),
    Condition(String),
    Guard(String),
    Internal(String),
    Resume(u32),
    Abort,
    Exit,
}

impl StepKind {
    pub fn is_terminal(&self) -> bool {
        matches!(self, StepKind::Resume(_) | StepKind::Abort | StepKind::Exit)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub number: u32,
    pub kind: StepKind,
    pub raw_text: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flow {
    pub kind: FlowKind,
    pub label: String,
    pub steps: Vec<Step>,
    pub postcondition: Vec<String>,
    pub line: usize,
}

impl Flow {
    pub fn guard(&self) -> Option<&str> {
        match self.steps.first().map(|s| &s.kind) {
            Some(StepKind::Guard(g)) => Some(g),
            _ => None,
        }
    }

    pub fn step(&self, number: u32) -> Option<&Step> {
        self.steps.iter().find(|s| s.number == number)
    }

    pub fn postcondition_text(&self) -> String {
        self.postcondition.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UseCaseSpec {
    pub name: String,
    pub label: String,
    pub precondition: Vec<String>,
    pub basic_flow: Flow,
    pub alternative_flows: Vec<Flow>,
    pub line: usize,
}

impl UseCaseSpec {
    /// Copy with every line number cleared, for structural comparison.
    pub fn without_lines(&self) -> UseCaseSpec {
        let strip = |f: &Flow| Flow {
            line: 0,
            steps: f.steps.iter().map(|s| Step { line: 0, ..s.clone() }).collect(),
            ..f.clone()
        };
        UseCaseSpec {
            line: 0,
            basic_flow: strip(&self.basic_flow),
            alternative_flows: self.alternative_flows.iter().map(strip).collect(),
            ..self.clone()
        }
    }

    pub fn basic_len(&self) -> u32 {
        self.basic_flow.steps.iter().map(|s| s.number).max().unwrap_or(0)
    }
}

struct Patterns {
    header: Regex,
    step: Regex,
    rfs: Regex,
    guard: Regex,
    resume: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        header: Regex::new(
            r"^(\d+(?:\.\d+)*)\.?\s+(Use Case|Precondition|Basic Flow|Specific Alternative Flow|Bounded Alternative Flow|Global Alternative Flow)\b\s*(.*)$",
        )
        .unwrap(),
        step: Regex::new(r"^(\d+)\.\s+(.*)$").unwrap(),
        rfs: Regex::new(r"^RFS\s+(\d+)(?:\s*-\s*(\d+))?\s*$").unwrap(),
        guard: Regex::new(r"^IF\s+(.*?)\s+THEN\b").unwrap(),
        resume: Regex::new(r"^RESUME STEP\s+(\d+)\.?$").unwrap(),
    })
}

fn strip_period(s: &str) -> String {
    s.trim().trim_end_matches('.').trim().to_string()
}

fn split_entities(s: &str) -> Vec<String> {
    s.split(',')
        .flat_map(|p| p.split(" and "))
        .map(strip_period)
        .filter(|p| !p.is_empty())
        .collect()
}

fn is_system(subject: &str) -> bool {
    let s = subject.trim().to_ascii_lowercase();
    s == "the system" || s == "system"
}

/// Classifies a step sentence by keyword precedence. Internal is the fallback.
pub fn classify_step(line: &str) -> StepKind {
    let p = patterns();
    let text = line.trim();
    if let Some(i) = text.find("INCLUDE USE CASE") {
        return StepKind::Include(strip_period(&text[i + "INCLUDE USE CASE".len()..]));
    }
    if let Some(i) = text.find("VALIDATES THAT") {
        return StepKind::Condition(strip_period(&text[i + "VALIDATES THAT".len()..]));
    }
    if let Some(c) = p.guard.captures(text) {
        return StepKind::Guard(c[1].trim().to_string());
    }
    if let Some(i) = text.find(" SENDS ") {
        let subject = &text[..i];
        let rest = &text[i + " SENDS ".len()..];
        let (what, whom) = match rest.rfind(" TO ") {
            Some(j) => (&rest[..j], strip_period(&rest[j + " TO ".len()..])),
            None => (rest, String::new()),
        };
        return if is_system(subject) {
            StepKind::Output { entities: split_entities(what), actor: whom }
        } else {
            StepKind::Input { actor: subject.trim().to_string(), entities: split_entities(what) }
        };
    }
    if let Some(i) = text.find(" REQUESTS ") {
        let subject = &text[..i];
        let rest = &text[i + " REQUESTS ".len()..];
        let (what, whom) = match rest.rfind(" FROM ") {
            Some(j) => (&rest[..j], strip_period(&rest[j + " FROM ".len()..])),
            None => (rest, String::new()),
        };
        return if is_system(subject) {
            StepKind::Input { actor: whom, entities: split_entities(what) }
        } else {
            StepKind::Output { entities: split_entities(what), actor: subject.trim().to_string() }
        };
    }
    if let Some(c) = p.resume.captures(text) {
        return StepKind::Resume(c[1].parse().unwrap_or(0));
    }
    match strip_period(text).as_str() {
        "ABORT" => return StepKind::Abort,
        "EXIT" => return StepKind::Exit,
        _ => {}
    }
    StepKind::Internal(strip_period(text))
}

/// Splits text into sentences at sentence-final periods.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        cur.push(c);
        let at_end = c == '.' && chars.get(i + 1).map_or(true, |n| n.is_whitespace());
        if at_end {
            let s = cur.trim().to_string();
            if !s.is_empty() {
                out.push(s);
            }
            cur.clear();
        }
    }
    let s = cur.trim().to_string();
    if !s.is_empty() {
        out.push(s);
    }
    out
}

enum Mode {
    None,
    Precondition,
    Flow,
}

struct SpecBuilder {
    name: String,
    label: String,
    line: usize,
    precondition: String,
    basic: Option<Flow>,
    alternatives: Vec<Flow>,
}

impl SpecBuilder {
    fn finish(self, diags: &mut Vec<Diagnostic>) -> UseCaseSpec {
        let basic = match self.basic {
            Some(b) => b,
            None => {
                diags.push(Diagnostic::error(self.line, format!("use case `{}` has no basic flow", self.name)));
                Flow { kind: FlowKind::Basic, label: String::new(), steps: Vec::new(), postcondition: Vec::new(), line: self.line }
            }
        };
        UseCaseSpec {
            name: self.name,
            label: self.label,
            precondition: split_sentences(&self.precondition),
            basic_flow: basic,
            alternative_flows: self.alternatives,
            line: self.line,
        }
    }
}

/// Parses a document into use case specifications. Structural problems are
/// reported as diagnostics; `validate_document` is applied to the result.
pub fn parse_document(text: &str) -> (Vec<UseCaseSpec>, Vec<Diagnostic>) {
    let p = patterns();
    let mut specs = Vec::new();
    let mut diags = Vec::new();
    let mut cur: Option<SpecBuilder> = None;
    let mut flow: Option<Flow> = None;
    let mut open_if = false;
    let mut mode = Mode::None;

    fn close_flow(cur: &mut Option<SpecBuilder>, flow: &mut Option<Flow>, open_if: &mut bool, diags: &mut Vec<Diagnostic>) {
        if let Some(f) = flow.take() {
            if *open_if {
                diags.push(Diagnostic::error(f.line, format!("flow {} has an IF without ENDIF", f.label)));
            }
            *open_if = false;
            if let Some(b) = cur.as_mut() {
                if f.kind == FlowKind::Basic {
                    if b.basic.is_some() {
                        diags.push(Diagnostic::error(f.line, format!("use case `{}` has more than one basic flow", b.name)));
                    } else {
                        b.basic = Some(f);
                    }
                } else {
                    b.alternatives.push(f);
                }
            }
        }
    }

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = p.header.captures(line) {
            let label = c[1].to_string();
            let rest = c[3].trim().to_string();
            match &c[2] {
                "Use Case" => {
                    close_flow(&mut cur, &mut flow, &mut open_if, &mut diags);
                    if let Some(b) = cur.take() {
                        specs.push(b.finish(&mut diags));
                    }
                    if rest.is_empty() {
                        diags.push(Diagnostic::error(ln, "use case header without a name"));
                    }
                    cur = Some(SpecBuilder {
                        name: rest,
                        label,
                        line: ln,
                        precondition: String::new(),
                        basic: None,
                        alternatives: Vec::new(),
                    });
                    mode = Mode::None;
                }
                "Precondition" => {
                    close_flow(&mut cur, &mut flow, &mut open_if, &mut diags);
                    if cur.is_none() {
                        diags.push(Diagnostic::error(ln, "precondition outside a use case"));
                    } else if let Some(b) = cur.as_mut() {
                        if !rest.is_empty() {
                            b.precondition.push_str(&rest);
                            b.precondition.push(' ');
                        }
                    }
                    mode = Mode::Precondition;
                }
                header => {
                    close_flow(&mut cur, &mut flow, &mut open_if, &mut diags);
                    if cur.is_none() {
                        diags.push(Diagnostic::error(ln, "flow outside a use case"));
                        mode = Mode::None;
                        continue;
                    }
                    let kind = match header {
                        "Basic Flow" => FlowKind::Basic,
                        "Specific Alternative Flow" => FlowKind::Specific { rfs: 0 },
                        "Bounded Alternative Flow" => FlowKind::Bounded { from: 0, to: 0 },
                        _ => FlowKind::Global,
                    };
                    flow = Some(Flow { kind, label, steps: Vec::new(), postcondition: Vec::new(), line: ln });
                    mode = Mode::Flow;
                }
            }
            continue;
        }
        if let Some(c) = p.rfs.captures(line) {
            match (flow.as_mut(), &mode) {
                (Some(f), Mode::Flow) if f.steps.is_empty() => {
                    let a: u32 = c[1].parse().unwrap_or(0);
                    let b: Option<u32> = c.get(2).and_then(|m| m.as_str().parse().ok());
                    match (&mut f.kind, b) {
                        (FlowKind::Specific { rfs }, None) => *rfs = a,
                        (FlowKind::Specific { .. }, Some(_)) => {
                            diags.push(Diagnostic::error(ln, "a specific alternative flow refers to exactly one step"))
                        }
                        (FlowKind::Bounded { from, to }, b) => {
                            *from = a;
                            *to = b.unwrap_or(a);
                        }
                        (FlowKind::Global, _) => {
                            diags.push(Diagnostic::error(ln, "a global alternative flow takes no RFS reference"))
                        }
                        (FlowKind::Basic, _) => diags.push(Diagnostic::error(ln, "RFS in a basic flow")),
                    }
                }
                _ => diags.push(Diagnostic::error(ln, "RFS must directly follow an alternative flow header")),
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("Postcondition:") {
            match flow.as_mut() {
                Some(f) => f.postcondition.extend(split_sentences(rest.trim())),
                None => diags.push(Diagnostic::error(ln, "postcondition outside a flow")),
            }
            continue;
        }
        if let Some(c) = p.step.captures(line) {
            let Some(f) = flow.as_mut() else {
                if matches!(mode, Mode::Precondition) {
                    if let Some(b) = cur.as_mut() {
                        b.precondition.push_str(line);
                        b.precondition.push(' ');
                    }
                } else {
                    diags.push(Diagnostic::error(ln, "step outside a flow"));
                }
                continue;
            };
            let number: u32 = c[1].parse().unwrap_or(0);
            let body = c[2].trim();
            if strip_period(body) == "ENDIF" {
                if open_if {
                    open_if = false;
                } else {
                    diags.push(Diagnostic::error(ln, "dangling ENDIF"));
                }
                continue;
            }
            let kind = classify_step(body);
            if matches!(kind, StepKind::Guard(_)) {
                open_if = true;
            }
            f.steps.push(Step { number, kind, raw_text: body.to_string(), line: ln });
            continue;
        }
        match (&mode, cur.as_mut()) {
            (Mode::Precondition, Some(b)) => {
                b.precondition.push_str(line);
                b.precondition.push(' ');
            }
            _ => diags.push(Diagnostic::error(ln, format!("unrecognized line `{line}`"))),
        }
    }
    close_flow(&mut cur, &mut flow, &mut open_if, &mut diags);
    if let Some(b) = cur.take() {
        specs.push(b.finish(&mut diags));
    }
    diags.extend(validate_document(&specs));
    diags.sort_by_key(|d| d.line);
    (specs, diags)
}

/// Checks the invariants of one use case.
pub fn validate_spec(spec: &UseCaseSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let basic_len = spec.basic_len();
    let basic_numbers: BTreeSet<u32> = spec.basic_flow.steps.iter().map(|s| s.number).collect();
    for f in std::iter::once(&spec.basic_flow).chain(&spec.alternative_flows) {
        for (k, s) in f.steps.iter().enumerate() {
            if s.number != k as u32 + 1 {
                out.push(Diagnostic::error(s.line, format!("step {} of flow {} should be numbered {}", s.number, f.label, k + 1)));
            }
            if s.kind.is_terminal() && k + 1 != f.steps.len() {
                out.push(Diagnostic::error(s.line, format!("flow {} continues after a terminal step", f.label)));
            }
            if matches!(s.kind, StepKind::Guard(_)) && (k != 0 || f.kind == FlowKind::Basic) {
                out.push(Diagnostic::error(s.line, "IF ... THEN is only allowed as the first step of an alternative flow"));
            }
            if let StepKind::Resume(n) = s.kind {
                if !basic_numbers.contains(&n) {
                    out.push(Diagnostic::error(s.line, format!("RESUME STEP {n} is not a basic flow step")));
                }
            }
        }
        match f.kind {
            FlowKind::Basic => {
                if f.steps.iter().any(|s| s.kind.is_terminal()) {
                    out.push(Diagnostic::warning(f.line, "basic flow contains ABORT, EXIT or RESUME"));
                }
            }
            FlowKind::Specific { rfs } => {
                match spec.basic_flow.step(rfs) {
                    None => out.push(Diagnostic::error(f.line, format!("RFS {rfs} of flow {} is not a basic flow step", f.label))),
                    Some(s) => {
                        if !matches!(s.kind, StepKind::Condition(_)) && f.guard().is_none() {
                            out.push(Diagnostic::error(
                                f.line,
                                format!("flow {} refers to a step that is not a condition and has no IF ... THEN guard", f.label),
                            ));
                        }
                    }
                }
            }
            FlowKind::Bounded { from, to } => {
                if from == 0 || from > to || to > basic_len {
                    out.push(Diagnostic::error(f.line, format!("RFS {from}-{to} of flow {} is not a basic flow range", f.label)));
                }
                if f.guard().is_none() {
                    out.push(Diagnostic::error(f.line, format!("bounded flow {} must begin with IF ... THEN", f.label)));
                }
            }
            FlowKind::Global => {
                if f.guard().is_none() {
                    out.push(Diagnostic::error(f.line, format!("global flow {} must begin with IF ... THEN", f.label)));
                }
            }
        }
        if f.kind != FlowKind::Basic && !f.steps.last().is_some_and(|s| s.kind.is_terminal()) {
            out.push(Diagnostic::warning(f.line, format!("flow {} does not end with ABORT, EXIT or RESUME", f.label)));
        }
    }
    out
}

/// Per-spec validation plus cross-document checks: unique names and include targets.
pub fn validate_document(specs: &[UseCaseSpec]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut names = BTreeSet::new();
    for s in specs {
        if !names.insert(s.name.as_str()) {
            out.push(Diagnostic::error(s.line, format!("duplicate use case `{}`", s.name)));
        }
    }
    for s in specs {
        out.extend(validate_spec(s));
        for f in std::iter::once(&s.basic_flow).chain(&s.alternative_flows) {
            for st in &f.steps {
                if let StepKind::Include(target) = &st.kind {
                    if !names.contains(target.as_str()) {
                        out.push(Diagnostic::error(st.line, format!("included use case `{target}` is not defined")));
                    }
                }
            }
        }
    }
    out
}

/// Writes specifications back in the concrete syntax accepted by `parse_document`.
pub fn serialize(specs: &[UseCaseSpec]) -> String {
    let mut out = String::new();
    for (i, s) in specs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let label = if s.label.is_empty() { (i + 1).to_string() } else { s.label.clone() };
        out.push_str(&format!("{label}. Use Case {}\n", s.name));
        out.push_str(&format!("{label}.1 Precondition\n"));
        if !s.precondition.is_empty() {
            out.push_str(&s.precondition.join(" "));
            out.push('\n');
        }
        for (k, f) in std::iter::once(&s.basic_flow).chain(&s.alternative_flows).enumerate() {
            let flabel = if f.label.is_empty() { format!("{label}.{}", k + 2) } else { f.label.clone() };
            out.push_str(&format!("{flabel} {}\n", f.kind.header()));
            match f.kind {
                FlowKind::Specific { rfs } => out.push_str(&format!("RFS {rfs}\n")),
                FlowKind::Bounded { from, to } => out.push_str(&format!("RFS {from}-{to}\n")),
                _ => {}
            }
            for st in &f.steps {
                out.push_str(&format!("{}. {}\n", st.number, st.raw_text));
            }
            if f.guard().is_some() {
                out.push_str(&format!("{}. ENDIF\n", f.steps.len() + 1));
            }
            if !f.postcondition.is_empty() {
                out.push_str(&format!("Postcondition: {}\n", f.postcondition.join(" ")));
            }
        }
    }
    out
}
