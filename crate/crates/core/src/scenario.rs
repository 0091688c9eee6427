//! Scenario generation: depth-first traversal of a test model under a
//! coverage criterion, solving of path conditions, and subtype augmentation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::domain::DomainModel;
use crate::ocl::{Expr, Formula, OclConstraint, Query};
use crate::solver::{
    evaluate_formula, solve_incremental, IncrementalResult, ObjectDiagram, PcEntry, SolverBounds, SourceKind,
};
use crate::uctm::{ConstraintRef, FlowRef, NodeKind, Provenance, Uctm, UctmNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Branch,
    DefUse,
    Subtype,
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "branch" => Ok(Criterion::Branch),
            "defuse" | "def-use" => Ok(Criterion::DefUse),
            "subtype" => Ok(Criterion::Subtype),
            _ => Err(format!("unknown criterion `{s}`")),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Branch => "branch",
            Criterion::DefUse => "defuse",
            Criterion::Subtype => "subtype",
        })
    }
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// How many times a node may be re-entered through a backward edge.
    pub loop_bound: usize,
    pub max_iterations: usize,
    pub criterion: Criterion,
    pub bounds: SolverBounds,
    pub disable_coverage_termination: bool,
    /// Solver threads; 0 uses the global pool.
    pub jobs: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            loop_bound: 1,
            max_iterations: 10,
            criterion: Criterion::Branch,
            bounds: SolverBounds::default(),
            disable_coverage_termination: false,
            jobs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Branch { node: usize, polarity: bool },
    DefUse { def: usize, use_node: usize, polarity: bool },
    SubtypeHit { node: usize, subtype: String },
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = |b: &bool| if *b { "T" } else { "F" };
        match self {
            Target::Branch { node, polarity } => write!(f, "branch {node}{}", p(polarity)),
            Target::DefUse { def, use_node, polarity } => write!(f, "defuse {def}->{use_node}{}", p(polarity)),
            Target::SubtypeHit { node, subtype } => write!(f, "subtype {node}:{subtype}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nodes: Vec<usize>,
    pub provenance: Vec<Provenance>,
    /// Branch decisions as (position in `nodes` at decision time, node, polarity).
    pub decisions: Vec<(usize, usize, bool)>,
    pub pc: Vec<PcEntry>,
}

impl Scenario {
    fn empty() -> Self {
        Scenario { nodes: Vec::new(), provenance: Vec::new(), decisions: Vec::new(), pc: Vec::new() }
    }

    fn pc_key(&self) -> Vec<(usize, bool)> {
        self.pc.iter().map(|e| (e.node, e.polarity)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VisitCounter {
    pub total: u64,
    pub per_node: BTreeMap<usize, u64>,
}

impl VisitCounter {
    fn visit(&mut self, node: usize) {
        self.total += 1;
        *self.per_node.entry(node).or_default() += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedScenario {
    pub scenario: Scenario,
    pub diagram: ObjectDiagram,
    /// Path condition entries dropped by redefinition recovery.
    pub removed: Vec<usize>,
    pub covered: BTreeSet<Target>,
    /// Subtype used to derive this diagram, when it came from augmentation.
    pub subtype: Option<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibleScenario {
    pub scenario: Scenario,
    pub core: Vec<usize>,
    pub trigger: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenerationReport {
    pub feasible: Vec<GeneratedScenario>,
    pub infeasible: Vec<InfeasibleScenario>,
    pub targets: BTreeSet<Target>,
    pub covered: BTreeSet<Target>,
    /// Targets left uncovered when traversal reached a fixpoint: every
    /// scenario reaching them was shown infeasible.
    pub uncoverable: BTreeSet<Target>,
    pub iterations: usize,
    pub visits: VisitCounter,
    pub warnings: Vec<String>,
}

impl GenerationReport {
    /// Every target is covered or proven uncoverable.
    pub fn coverage_satisfied(&self) -> bool {
        self.targets.iter().all(|t| self.covered.contains(t) || self.uncoverable.contains(t))
    }

    pub fn fully_covered(&self) -> bool {
        self.targets.is_subset(&self.covered)
    }
}

/// Classes whose attributes a formula assigns.
fn defined_classes(f: &Formula, model: &DomainModel) -> BTreeSet<String> {
    f.atoms()
        .into_iter()
        .flat_map(|a| match a.lhs_path(model) {
            Some(p) => vec![p.terminal_class],
            None => vec![a.entity.clone()],
        })
        .collect()
}

/// Classes a formula reads from.
fn used_classes(f: &Formula, model: &DomainModel) -> BTreeSet<String> {
    f.atoms()
        .into_iter()
        .flat_map(|a| {
            let mut v: Vec<String> = a.paths(model).into_iter().map(|p| p.terminal_class).collect();
            if matches!(a.expr, Expr::Bare(_)) {
                v.push(a.entity.clone());
            }
            v
        })
        .collect()
}

fn reachable_from(tm: &Uctm, start: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack = tm.node(start).kind.successors();
    while let Some(n) = stack.pop() {
        if seen.insert(n) {
            stack.extend(tm.node(n).kind.successors());
        }
    }
    seen
}

/// The constraint a condition yields for one subtype of its entities: every
/// atom over a supertype of `subtype` is restricted to `subtype` and turned
/// into an existence query.
pub fn derive_subtype_formula(f: &Formula, subtype: &str, model: &DomainModel) -> Option<Formula> {
    let atoms: Vec<Formula> = f
        .atoms()
        .into_iter()
        .filter(|a| model.conforms(subtype, &a.entity) && !a.excluded.iter().any(|x| model.conforms(subtype, x)))
        .map(|a| {
            Formula::Atom(OclConstraint { entity: subtype.to_string(), excluded: Vec::new(), query: Query::Exists, expr: a.expr.clone() })
        })
        .collect();
    match atoms.len() {
        0 => None,
        1 => atoms.into_iter().next(),
        _ => Some(Formula::And(atoms)),
    }
}

/// Concrete proper subtypes of the entities a condition ranges over.
pub fn condition_subtypes(f: &Formula, model: &DomainModel) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for a in f.atoms() {
        for s in model.subtypes_of(&a.entity).unwrap_or_default() {
            if s != a.entity && !out.contains(&s) && derive_subtype_formula(f, &s, model).is_some() {
                out.push(s);
            }
        }
    }
    out
}

pub fn coverage_targets(tm: &Uctm, criterion: Criterion, model: &DomainModel) -> BTreeSet<Target> {
    let mut out = BTreeSet::new();
    for n in &tm.nodes {
        if n.kind.is_branch() {
            out.insert(Target::Branch { node: n.id, polarity: true });
            out.insert(Target::Branch { node: n.id, polarity: false });
        }
    }
    if criterion == Criterion::Branch {
        return out;
    }
    for d in &tm.nodes {
        let NodeKind::Internal { postcondition, .. } = &d.kind else { continue };
        let Some(df) = &postcondition.ocl else { continue };
        let defs = defined_classes(df, model);
        let reach = reachable_from(tm, d.id);
        for u in tm.nodes.iter().filter(|u| u.kind.is_branch() && reach.contains(&u.id)) {
            let Some(uf) = u.kind.constraint().and_then(|c| c.ocl.as_ref()) else { continue };
            let uses = used_classes(uf, model);
            if defs.iter().any(|dc| uses.iter().any(|uc| model.conforms(dc, uc))) {
                out.insert(Target::DefUse { def: d.id, use_node: u.id, polarity: true });
                out.insert(Target::DefUse { def: d.id, use_node: u.id, polarity: false });
            }
        }
    }
    if criterion == Criterion::Subtype {
        for n in &tm.nodes {
            if let NodeKind::Condition { constraint, .. } = &n.kind {
                if let Some(f) = &constraint.ocl {
                    for s in condition_subtypes(f, model) {
                        out.insert(Target::SubtypeHit { node: n.id, subtype: s });
                    }
                }
            }
        }
    }
    out
}

/// Path-level targets a scenario covers, restricted to `targets`.
pub fn scenario_coverage(tm: &Uctm, sc: &Scenario, targets: &BTreeSet<Target>) -> BTreeSet<Target> {
    let mut out = BTreeSet::new();
    for &(_, node, polarity) in &sc.decisions {
        let t = Target::Branch { node, polarity };
        if targets.contains(&t) {
            out.insert(t);
        }
    }
    let defs: Vec<(usize, usize)> = sc
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(tm.node(**n).kind, NodeKind::Internal { .. }))
        .map(|(i, n)| (i, *n))
        .collect();
    for &(pos, use_node, polarity) in &sc.decisions {
        for &(dpos, def) in &defs {
            if dpos < pos {
                let t = Target::DefUse { def, use_node, polarity };
                if targets.contains(&t) {
                    out.insert(t);
                }
            }
        }
    }
    out
}

/// True when `sc` covers a target outside `covered`. An empty suite always
/// improves.
pub fn coverage_improved(covered: &BTreeSet<Target>, suite_len: usize, sc_cov: &BTreeSet<Target>) -> bool {
    suite_len == 0 || sc_cov.iter().any(|t| !covered.contains(t))
}

/// True when the suite is nonempty and every target is covered.
pub fn coverage_satisfied(targets: &BTreeSet<Target>, covered: &BTreeSet<Target>, suite_len: usize) -> bool {
    suite_len > 0 && targets.is_subset(covered)
}

struct Traversal<'a> {
    tm: &'a Uctm,
    cfg: &'a GenConfig,
    targets: &'a BTreeSet<Target>,
    cache: &'a BTreeSet<Vec<(usize, bool)>>,
    covered: BTreeSet<Target>,
    suite_len: usize,
    curr: Vec<(Scenario, BTreeSet<Target>)>,
    visits: VisitCounter,
    /// Nodes on the current path, including interrupting conditions passed on
    /// their false branch.
    trail: Vec<usize>,
}

fn entry(c: &ConstraintRef, kind: SourceKind, node: usize, polarity: bool) -> PcEntry {
    let f = c.formula();
    PcEntry { formula: if polarity { f.clone() } else { f.negate() }, kind, node, polarity, key: c.key.clone() }
}

impl Traversal<'_> {
    fn stop(&self, sc: &Scenario) -> bool {
        if !self.cfg.disable_coverage_termination && coverage_satisfied(self.targets, &self.covered, self.suite_len) {
            return true;
        }
        !self.cache.is_empty() && self.cache.contains(&sc.pc_key())
    }

    fn push_node(&self, sc: &mut Scenario, id: usize) {
        sc.nodes.push(id);
        sc.provenance.push(self.tm.node(id).source.clone());
    }

    fn run(&mut self, id: usize, sc: Scenario) {
        if self.stop(&sc) {
            return;
        }
        self.trail.push(id);
        self.step(id, sc);
        self.trail.pop();
    }

    fn step(&mut self, id: usize, sc: Scenario) {
        let node: &UctmNode = self.tm.node(id);
        match &node.kind {
            NodeKind::UseCaseStart { precondition, next } => {
                let mut sc = sc;
                self.push_node(&mut sc, id);
                sc.pc.push(entry(precondition, SourceKind::Precondition, id, true));
                self.run(*next, sc);
            }
            NodeKind::Input { next, .. } | NodeKind::Include { next, .. } => {
                let mut sc = sc;
                self.push_node(&mut sc, id);
                self.run(*next, sc);
            }
            NodeKind::Internal { postcondition, next } => {
                let mut sc = sc;
                self.push_node(&mut sc, id);
                sc.pc.push(entry(postcondition, SourceKind::Internal, id, true));
                self.run(*next, sc);
            }
            NodeKind::Condition { constraint, on_true, on_false } => {
                self.visits.visit(id);
                let mut t = sc.clone();
                t.decisions.push((t.nodes.len(), id, true));
                self.push_node(&mut t, id);
                t.pc.push(entry(constraint, SourceKind::Condition, id, true));
                self.run(*on_true, t);
                let mut f = sc;
                f.decisions.push((f.nodes.len(), id, false));
                self.push_node(&mut f, id);
                f.pc.push(entry(constraint, SourceKind::Condition, id, false));
                self.run(*on_false, f);
            }
            NodeKind::InterruptingCondition { constraint, on_true, on_false } => {
                self.visits.visit(id);
                let mut f = sc.clone();
                f.decisions.push((f.nodes.len(), id, false));
                self.run(*on_false, f);
                let mut t = sc;
                t.decisions.push((t.nodes.len(), id, true));
                self.push_node(&mut t, id);
                t.pc.push(entry(constraint, SourceKind::Interrupting, id, true));
                self.run(*on_true, t);
            }
            NodeKind::Exit { next: Some(next), .. } => {
                let mut sc = sc;
                self.push_node(&mut sc, id);
                let seen = self.trail.iter().filter(|n| **n == *next).count();
                if seen <= self.cfg.loop_bound {
                    self.run(*next, sc);
                }
            }
            NodeKind::Exit { next: None, .. } | NodeKind::Abort { .. } => {
                let mut sc = sc;
                self.push_node(&mut sc, id);
                let cov = scenario_coverage(self.tm, &sc, self.targets);
                if self.cfg.disable_coverage_termination || coverage_improved(&self.covered, self.suite_len, &cov) {
                    self.covered.extend(cov.iter().cloned());
                    self.suite_len += 1;
                    self.curr.push((sc, cov));
                }
            }
        }
    }
}

/// One depth-first pass from the root. Returns new scenarios with their
/// coverage, and the visit counts.
pub fn generate_scenarios(
    tm: &Uctm,
    cfg: &GenConfig,
    targets: &BTreeSet<Target>,
    covered: &BTreeSet<Target>,
    suite_len: usize,
    cache: &BTreeSet<Vec<(usize, bool)>>,
) -> (Vec<(Scenario, BTreeSet<Target>)>, VisitCounter) {
    let mut t = Traversal {
        tm,
        cfg,
        targets,
        cache,
        covered: covered.clone(),
        suite_len,
        curr: Vec::new(),
        visits: VisitCounter::default(),
        trail: Vec::new(),
    };
    t.run(tm.root, Scenario::empty());
    (t.curr, t.visits)
}

fn solve_all(pcs: &[&[PcEntry]], model: &DomainModel, cfg: &GenConfig) -> Vec<IncrementalResult> {
    let work = || pcs.par_iter().map(|pc| solve_incremental(pc, model, &cfg.bounds)).collect();
    if cfg.jobs == 0 {
        return work();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build() {
        Ok(pool) => pool.install(work),
        Err(_) => work(),
    }
}

/// Repeats traversal and solving until coverage is reached, nothing new is
/// learned, or the iteration limit is hit.
pub fn generate_scenarios_and_inputs(tm: &Uctm, model: &DomainModel, cfg: &GenConfig) -> GenerationReport {
    let targets = coverage_targets(tm, cfg.criterion, model);
    let path_targets: BTreeSet<Target> =
        targets.iter().filter(|t| !matches!(t, Target::SubtypeHit { .. })).cloned().collect();
    let mut report = GenerationReport { targets: targets.clone(), ..Default::default() };
    let mut cache: BTreeSet<Vec<(usize, bool)>> = BTreeSet::new();
    let mut covered: BTreeSet<Target> = BTreeSet::new();
    let mut fixpoint = false;
    for it in 1..=cfg.max_iterations.max(1) {
        report.iterations = it;
        let (curr, visits) = generate_scenarios(tm, cfg, &path_targets, &covered, report.feasible.len(), &cache);
        report.visits.total += visits.total;
        for (n, c) in visits.per_node {
            *report.visits.per_node.entry(n).or_default() += c;
        }
        let pcs: Vec<&[PcEntry]> = curr.iter().map(|(s, _)| s.pc.as_slice()).collect();
        let results = solve_all(&pcs, model, cfg);
        let mut new_feasible = 0;
        let mut new_cache = 0;
        for ((sc, cov), res) in curr.into_iter().zip(results) {
            match res {
                IncrementalResult::Feasible { diagram, removed } => {
                    new_feasible += 1;
                    covered.extend(cov.iter().cloned());
                    report.feasible.push(GeneratedScenario { scenario: sc, diagram, removed, covered: cov, subtype: None });
                }
                IncrementalResult::Infeasible { core, trigger } => {
                    let key = sc.pc_key()[..=trigger].to_vec();
                    if cache.insert(key) {
                        new_cache += 1;
                    }
                    report.infeasible.push(InfeasibleScenario { scenario: sc, core, trigger });
                }
            }
        }
        if coverage_satisfied(&path_targets, &covered, report.feasible.len()) && !cfg.disable_coverage_termination {
            break;
        }
        if new_feasible == 0 && new_cache == 0 {
            fixpoint = true;
            break;
        }
    }
    if cfg.criterion == Criterion::Subtype {
        maximize_subtype_coverage(tm, &mut report, model, cfg);
    }
    report.covered = report.feasible.iter().flat_map(|g| g.covered.iter().cloned()).collect();
    if fixpoint {
        report.uncoverable = path_targets.difference(&report.covered).cloned().collect();
    }
    if report.feasible.is_empty() {
        report.warnings.push("no feasible scenario was found".into());
    } else if !report.coverage_satisfied() {
        let missing = report.targets.difference(&report.covered).count();
        report.warnings.push(format!("{missing} coverage targets not covered after {} iterations", report.iterations));
    }
    report
}

fn subtype_hits(tm: &Uctm, g: &GeneratedScenario, model: &DomainModel, targets: &BTreeSet<Target>) -> BTreeSet<Target> {
    let mut out = BTreeSet::new();
    for &(_, node, polarity) in &g.scenario.decisions {
        if !polarity {
            continue;
        }
        let Some(f) = tm.node(node).kind.constraint().and_then(|c| c.ocl.as_ref()) else { continue };
        for s in condition_subtypes(f, model) {
            let t = Target::SubtypeHit { node, subtype: s.clone() };
            if !targets.contains(&t) {
                continue;
            }
            if let Some(d) = derive_subtype_formula(f, &s, model) {
                if evaluate_formula(&d, &g.diagram, model).unwrap_or(false) {
                    out.insert(t);
                }
            }
        }
    }
    out
}

/// For every condition a scenario takes as true, re-solves its path
/// condition once per concrete subtype of the condition's entity and keeps
/// the diagrams that witness a new subtype.
pub fn maximize_subtype_coverage(tm: &Uctm, report: &mut GenerationReport, model: &DomainModel, cfg: &GenConfig) {
    let targets = report.targets.clone();
    let mut covered: BTreeSet<Target> = BTreeSet::new();
    for g in &mut report.feasible {
        let hits = subtype_hits(tm, g, model, &targets);
        g.covered.extend(hits.iter().cloned());
        covered.extend(g.covered.iter().cloned());
    }
    let mut added = Vec::new();
    for g in &report.feasible {
        for (pos, e) in g.scenario.pc.iter().enumerate() {
            if e.kind != SourceKind::Condition || !e.polarity {
                continue;
            }
            let Some(f) = tm.node(e.node).kind.constraint().and_then(|c| c.ocl.as_ref()) else { continue };
            let node = e.node;
            for s in condition_subtypes(f, model) {
                let t = Target::SubtypeHit { node, subtype: s.clone() };
                if !targets.contains(&t) || covered.contains(&t) {
                    continue;
                }
                let Some(derived) = derive_subtype_formula(f, &s, model) else { continue };
                let mut pc = g.scenario.pc.clone();
                pc.insert(
                    pos + 1,
                    PcEntry { formula: derived, kind: SourceKind::Condition, node, polarity: true, key: format!("{}#{s}", e.key) },
                );
                if let IncrementalResult::Feasible { diagram, removed } = solve_incremental(&pc, model, &cfg.bounds) {
                    let mut scenario = g.scenario.clone();
                    scenario.pc = pc;
                    let mut ng = GeneratedScenario {
                        scenario,
                        diagram,
                        removed,
                        covered: g.covered.iter().filter(|t| !matches!(t, Target::SubtypeHit { .. })).cloned().collect(),
                        subtype: Some((node, s.clone())),
                    };
                    let hits = subtype_hits(tm, &ng, model, &targets);
                    if hits.iter().any(|h| !covered.contains(h)) {
                        ng.covered.extend(hits.iter().cloned());
                        covered.extend(hits);
                        added.push(ng);
                    }
                }
            }
        }
    }
    report.feasible.extend(added);
}

/// Worst-case model for traversal cost: `n` conditions in a chain, each with
/// a backward edge to the first; the last has no forward successor.
pub fn worst_case_uctm(n: usize) -> Uctm {
    assert!(n >= 1);
    let c = |i: usize| ConstraintRef {
        key: format!("worst#basic#{i}"),
        text: format!("condition {i}"),
        ocl: Some(Formula::Atom(OclConstraint {
            entity: "S".into(),
            excluded: Vec::new(),
            query: Query::ForAll,
            expr: Expr::Bare(true),
        })),
    };
    let prov = |i: u32| Provenance::new("worst", FlowRef::Basic, i);
    let mut nodes = vec![UctmNode { id: 0, kind: NodeKind::UseCaseStart { precondition: c(0), next: 1 }, source: prov(0) }];
    // conditions are 1..=n, backward exits n+1..=2n, the leaf is 2n+1
    for i in 1..=n {
        let on_true = if i < n { i + 1 } else { 2 * n + 1 };
        nodes.push(UctmNode {
            id: i,
            kind: NodeKind::Condition { constraint: c(i), on_true, on_false: n + i },
            source: prov(i as u32),
        });
    }
    for i in 1..=n {
        nodes.push(UctmNode {
            id: n + i,
            kind: NodeKind::Exit { postcondition: String::new(), next: Some(1) },
            source: Provenance::new("worst", FlowRef::Alt(i), 1),
        });
    }
    nodes.push(UctmNode { id: 2 * n + 1, kind: NodeKind::Exit { postcondition: String::new(), next: None }, source: prov(0) });
    Uctm { name: "worst".into(), nodes, root: 0 }
}

/// Condition visits of an exhaustive traversal of the worst-case model.
pub fn stress_visits(n: usize, loop_bound: usize) -> u64 {
    let tm = worst_case_uctm(n);
    let cfg = GenConfig { loop_bound, disable_coverage_termination: true, ..Default::default() };
    let targets = BTreeSet::new();
    let (_, visits) = generate_scenarios(&tm, &cfg, &targets, &BTreeSet::new(), 0, &BTreeSet::new());
    visits.total
}

/// Text dump of a generation run, one block per scenario.
pub fn dump_scenarios(tm: &Uctm, report: &GenerationReport) -> String {
    let mut out = String::new();
    let block = |out: &mut String, title: String, sc: &Scenario| {
        out.push_str(&title);
        out.push('\n');
        for (n, p) in sc.nodes.iter().zip(&sc.provenance) {
            out.push_str(&format!("  node {n} {} @{p}\n", tm.node(*n).kind.name()));
        }
        for e in &sc.pc {
            let sign = if e.polarity { '+' } else { '-' };
            out.push_str(&format!(
                "  pc {sign} {} {}: {}\n",
                e.kind.as_str(),
                e.key,
                e.formula.render().unwrap_or_default()
            ));
        }
    };
    for (i, g) in report.feasible.iter().enumerate() {
        let mut title = format!("scenario {}", i + 1);
        if let Some((node, s)) = &g.subtype {
            title.push_str(&format!(" subtype {node}:{s}"));
        }
        block(&mut out, title, &g.scenario);
        if !g.removed.is_empty() {
            let r: Vec<String> = g.removed.iter().map(|i| g.scenario.pc[*i].key.clone()).collect();
            out.push_str(&format!("  removed {}\n", r.join(", ")));
        }
        let cov: Vec<String> = g.covered.iter().map(|t| t.to_string()).collect();
        out.push_str(&format!("  covers {}\n\n", cov.join(", ")));
    }
    for (i, inf) in report.infeasible.iter().enumerate() {
        block(&mut out, format!("infeasible {}", i + 1), &inf.scenario);
        let c: Vec<String> = inf.core.iter().map(|i| inf.scenario.pc[*i].key.clone()).collect();
        out.push_str(&format!("  core {}\n  trigger {}\n\n", c.join(", "), inf.scenario.pc[inf.trigger].key));
    }
    out
}

/// Summary lines: targets, covered targets and warnings.
pub fn coverage_report(report: &GenerationReport) -> String {
    let mut out = format!(
        "targets {}\ncovered {}\nuncoverable {}\nscenarios {}\ninfeasible {}\niterations {}\n",
        report.targets.len(),
        report.targets.intersection(&report.covered).count(),
        report.uncoverable.len(),
        report.feasible.len(),
        report.infeasible.len(),
        report.iterations
    );
    for t in report.targets.difference(&report.covered) {
        let tag = if report.uncoverable.contains(t) { "infeasible" } else { "uncovered" };
        out.push_str(&format!("{tag} {t}\n"));
    }
    for w in &report.warnings {
        out.push_str(&format!("warning {w}\n"));
    }
    out
}

/// Node ids grouped by provenance, for locating nodes in tests and reports.
pub fn nodes_by_provenance(tm: &Uctm) -> HashMap<Provenance, Vec<usize>> {
    let mut out: HashMap<Provenance, Vec<usize>> = HashMap::new();
    for n in &tm.nodes {
        out.entry(n.source.clone()).or_default().push(n.id);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn closed_form(n: u64, t: u32) -> u64 {
        n * (0..=t).map(|i| n.pow(i)).sum::<u64>()
    }

    #[test]
    fn stress_matches_published_counts() {
        assert_eq!(stress_visits(5, 0), 5);
        assert_eq!(stress_visits(5, 1), 30);
        assert_eq!(stress_visits(5, 2), 155);
        assert_eq!(stress_visits(1, 0), 1);
        assert_eq!(stress_visits(3, 1), 12);
    }

    #[test]
    fn stress_matches_closed_form() {
        for n in 2..=6u64 {
            for t in 0..=3u32 {
                assert_eq!(stress_visits(n as usize, t as usize), closed_form(n, t), "n={n} T={t}");
            }
        }
    }

    #[test]
    fn fixture_branch_run() {
        let model = fixtures::bodysense_model();
        let tm = fixtures::bodysense_merged();
        let report = generate_scenarios_and_inputs(&tm, &model, &GenConfig::default());
        assert!(report.coverage_satisfied(), "{}", coverage_report(&report));
        let seqs: BTreeSet<&Vec<usize>> = report.feasible.iter().map(|g| &g.scenario.nodes).collect();
        assert_eq!(seqs.len(), report.feasible.len());
        let first = &report.feasible[0].scenario;
        assert!(first.decisions.iter().all(|&(_, n, p)| {
            matches!(tm.node(n).kind, NodeKind::Condition { .. }) == p
        }));
    }

    #[test]
    fn single_chain_yields_one_scenario() {
        let tm = Uctm {
            name: "u".into(),
            nodes: vec![
                UctmNode {
                    id: 0,
                    kind: NodeKind::UseCaseStart {
                        precondition: ConstraintRef {
                            key: "u#pre#0".into(),
                            text: String::new(),
                            ocl: Some(crate::ocl::parse_formula("BodySense.allInstances() -> forAll( i | i.initialized = true )").unwrap()),
                        },
                        next: 1,
                    },
                    source: Provenance::new("u", FlowRef::Basic, 0),
                },
                UctmNode {
                    id: 1,
                    kind: NodeKind::Exit { postcondition: "done".into(), next: None },
                    source: Provenance::new("u", FlowRef::Basic, 0),
                },
            ],
            root: 0,
        };
        let report = generate_scenarios_and_inputs(&tm, &fixtures::bodysense_model(), &GenConfig::default());
        assert_eq!(report.feasible.len(), 1);
        assert!(report.targets.is_empty());
    }

    #[test]
    fn loop_bound_zero_blocks_backward_edges() {
        let tm = worst_case_uctm(3);
        let cfg = GenConfig { loop_bound: 0, disable_coverage_termination: true, ..Default::default() };
        let (scs, _) = generate_scenarios(&tm, &cfg, &BTreeSet::new(), &BTreeSet::new(), 0, &BTreeSet::new());
        assert_eq!(scs.len(), 1);
        assert_eq!(scs[0].0.nodes, vec![0, 1, 2, 3, 7]);
    }

    #[test]
    fn improvement_rules() {
        let a = Target::Branch { node: 1, polarity: true };
        let covered: BTreeSet<Target> = [a.clone()].into();
        assert!(!coverage_improved(&covered, 1, &[a.clone()].into()));
        assert!(coverage_improved(&covered, 1, &[Target::Branch { node: 1, polarity: false }].into()));
        assert!(coverage_improved(&BTreeSet::new(), 0, &BTreeSet::new()));
        assert!(coverage_satisfied(&BTreeSet::new(), &BTreeSet::new(), 1));
        assert!(!coverage_satisfied(&BTreeSet::new(), &BTreeSet::new(), 0));
    }

    #[test]
    fn derived_subtype_constraint() {
        let model = fixtures::bodysense_model();
        let f = crate::ocl::parse_formula("Error.allInstances() -> exists( i | i.isQualified = true )").unwrap();
        let d = derive_subtype_formula(&f, "TemperatureLowError", &model).unwrap();
        assert_eq!(d.render().unwrap(), "TemperatureLowError.allInstances() -> exists( i | i.isQualified = true )");
        assert_eq!(
            condition_subtypes(&f, &model),
            ["TemperatureLowError", "TemperatureHighError", "VoltageError", "MemoryError"]
        );
        let leaf = crate::ocl::parse_formula("VoltageError.allInstances() -> exists( i | i.isQualified = true )").unwrap();
        assert!(condition_subtypes(&leaf, &model).is_empty());
    }

    #[test]
    fn defuse_targets_pair_definitions_with_supertype_uses() {
        let model = fixtures::bodysense_model();
        let tm = fixtures::bodysense_merged();
        let targets = coverage_targets(&tm, Criterion::DefUse, &model);
        let by = nodes_by_provenance(&tm);
        let c14 = by[&Provenance::new("Self Diagnosis", FlowRef::Alt(2), 1)][0];
        let c15 = by[&Provenance::new("Identify Occupancy Status", FlowRef::Alt(2), 1)][0];
        assert!(targets.contains(&Target::DefUse { def: c14, use_node: c15, polarity: true }));
        assert!(targets.contains(&Target::DefUse { def: c14, use_node: c15, polarity: false }));
    }
}
