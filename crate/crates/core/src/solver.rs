//! Bounded model finder for path conditions.
//!
//! Instances are fixed per class (`SolverBounds`), association links and
//! attribute values are finite-domain variables. The search splits variables
//! into independent components and backtracks chronologically inside each one,
//! checking every constraint as soon as all variables it reads are assigned.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::domain::{AttrType, DomainModel, Member, Value};
use crate::ocl::{CmpOp, Expr, Formula, Literal, OclConstraint, Query, RhsTerm};

pub const BRUTE_FORCE_CAP: u128 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("instance `{instance}` has a dangling link `{assoc}`")]
    DanglingLink { instance: String, assoc: String },
    #[error("instance `{instance}` has no member `{member}`")]
    MissingMember { instance: String, member: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("search space of {0} valuations exceeds the brute force cap")]
    SearchSpaceTooLarge(u128),
    #[error("the constraints are satisfiable; there is no unsat core")]
    Satisfiable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub id: String,
    pub class: String,
    pub attrs: Vec<(String, Value)>,
    /// Association name to target instance index.
    pub links: Vec<(String, Option<usize>)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObjectDiagram {
    pub instances: Vec<Instance>,
}

impl ObjectDiagram {
    pub fn find(&self, id: &str) -> Option<usize> {
        self.instances.iter().position(|i| i.id == id)
    }

    /// Value at `segments` from instance `inst`; `Null` past an empty link.
    pub fn read(&self, inst: usize, segments: &[String]) -> Result<Value, EvalError> {
        read_path(self, inst, segments)
    }

    pub fn system_instance(&self, model: &DomainModel) -> Option<usize> {
        self.instances.iter().position(|i| i.class == model.system_class())
    }

    /// `.odg` text: one `instance id: Class { ... }` line per instance.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for inst in &self.instances {
            let mut parts: Vec<String> = inst.attrs.iter().map(|(n, v)| format!("{n} = {v}")).collect();
            for (n, t) in &inst.links {
                let target = t.and_then(|k| self.instances.get(k)).map_or("null", |i| i.id.as_str());
                parts.push(format!("{n} -> {target}"));
            }
            let _ = writeln!(out, "instance {}: {} {{ {} }}", inst.id, inst.class, parts.join(", "));
        }
        out
    }
}

/// Read access to instances, shared by complete diagrams and partial assignments.
pub trait ValueSource {
    fn instance_count(&self) -> usize;
    fn class_of(&self, inst: usize) -> &str;
    fn attr(&self, inst: usize, name: &str) -> Result<Value, EvalError>;
    fn link(&self, inst: usize, name: &str) -> Result<Option<usize>, EvalError>;
}

impl ValueSource for ObjectDiagram {
    fn instance_count(&self) -> usize {
        self.instances.len()
    }

    fn class_of(&self, inst: usize) -> &str {
        &self.instances[inst].class
    }

    fn attr(&self, inst: usize, name: &str) -> Result<Value, EvalError> {
        let i = &self.instances[inst];
        i.attrs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| EvalError::MissingMember { instance: i.id.clone(), member: name.to_string() })
    }

    fn link(&self, inst: usize, name: &str) -> Result<Option<usize>, EvalError> {
        let i = &self.instances[inst];
        match i.links.iter().find(|(n, _)| n == name) {
            Some((_, Some(t))) if *t >= self.instances.len() => {
                Err(EvalError::DanglingLink { instance: i.id.clone(), assoc: name.to_string() })
            }
            Some((_, t)) => Ok(*t),
            None => Err(EvalError::MissingMember { instance: i.id.clone(), member: name.to_string() }),
        }
    }
}

fn read_path<S: ValueSource + ?Sized>(s: &S, inst: usize, segments: &[String]) -> Result<Value, EvalError> {
    let Some((last, assocs)) = segments.split_last() else { return Ok(Value::Null) };
    let mut cur = inst;
    for seg in assocs {
        match s.link(cur, seg)? {
            Some(n) => cur = n,
            None => return Ok(Value::Null),
        }
    }
    s.attr(cur, last)
}

pub fn literal_value(l: &Literal) -> Value {
    match l {
        Literal::Bool(b) => Value::Bool(*b),
        Literal::Int(n) => Value::Int(*n),
        Literal::Enum { member, .. } => Value::Enum(member.clone()),
        Literal::Null => Value::Null,
    }
}

/// `=` compares values (null equals null); `>`/`<` hold only between integers;
/// the remaining operators are their complements.
pub fn compare(op: CmpOp, l: &Value, r: &Value) -> bool {
    let gt = |a: &Value, b: &Value| matches!((a, b), (Value::Int(x), Value::Int(y)) if x > y);
    let lt = |a: &Value, b: &Value| matches!((a, b), (Value::Int(x), Value::Int(y)) if x < y);
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Gt => gt(l, r),
        CmpOp::Lt => lt(l, r),
        CmpOp::Le => !gt(l, r),
        CmpOp::Ge => !lt(l, r),
    }
}

fn selected<S: ValueSource + ?Sized>(c: &OclConstraint, s: &S, model: &DomainModel) -> Vec<usize> {
    (0..s.instance_count()).filter(|&i| in_selection(c, s.class_of(i), model)).collect()
}

fn in_selection(c: &OclConstraint, class: &str, model: &DomainModel) -> bool {
    model.conforms(class, &c.entity) && !c.excluded.iter().any(|x| model.conforms(class, x))
}

fn expr_holds<S: ValueSource + ?Sized>(e: &Expr, s: &S, inst: usize) -> Result<bool, EvalError> {
    match e {
        Expr::Bare(b) => Ok(*b),
        Expr::Cmp(c) => {
            let l = read_path(s, inst, &c.lhs)?;
            let r = match &c.rhs {
                RhsTerm::Lit(lit) => literal_value(lit),
                RhsTerm::Var(p) => read_path(s, inst, p)?,
            };
            Ok(compare(c.op, &l, &r))
        }
    }
}

pub fn eval_constraint<S: ValueSource + ?Sized>(c: &OclConstraint, s: &S, model: &DomainModel) -> Result<bool, EvalError> {
    let set = selected(c, s, model);
    match c.query {
        Query::ForAll => {
            for i in set {
                if !expr_holds(&c.expr, s, i)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Query::Exists => {
            for i in set {
                if expr_holds(&c.expr, s, i)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Query::Count(op, n) => {
            let mut k = 0i64;
            for i in set {
                if expr_holds(&c.expr, s, i)? {
                    k += 1;
                }
            }
            Ok(op.holds(k, n as i64))
        }
    }
}

pub fn eval_formula<S: ValueSource + ?Sized>(f: &Formula, s: &S, model: &DomainModel) -> Result<bool, EvalError> {
    match f {
        Formula::Atom(c) => eval_constraint(c, s, model),
        Formula::And(fs) => {
            for g in fs {
                if !eval_formula(g, s, model)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Formula::Or(fs) => {
            for g in fs {
                if eval_formula(g, s, model)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

pub fn evaluate(c: &OclConstraint, d: &ObjectDiagram, model: &DomainModel) -> Result<bool, EvalError> {
    eval_constraint(c, d, model)
}

pub fn evaluate_formula(f: &Formula, d: &ObjectDiagram, model: &DomainModel) -> Result<bool, EvalError> {
    eval_formula(f, d, model)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverBounds {
    /// Instance count overrides; concrete classes not listed get one instance.
    pub instances_per_class: BTreeMap<String, usize>,
    /// Integer attributes compared with other attributes use their whole range
    /// when it has at most this many values.
    pub full_range_limit: i64,
}

impl Default for SolverBounds {
    fn default() -> Self {
        SolverBounds { instances_per_class: BTreeMap::new(), full_range_limit: 256 }
    }
}

/// Instance counts for every concrete class, raised so that `size()` queries
/// with `=`, `>=` or `>` can be met.
pub fn effective_bounds(pc: &[&Formula], model: &DomainModel, bounds: &SolverBounds) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for c in model.concrete_classes() {
        let mut n = bounds.instances_per_class.get(&c.name).copied().unwrap_or(1);
        if c.is_system {
            n = n.max(1);
        }
        counts.insert(c.name.clone(), n);
    }
    for f in pc {
        for a in f.atoms() {
            let Query::Count(op, n) = a.query else { continue };
            let need = match op {
                CmpOp::Eq | CmpOp::Ge => n as usize,
                CmpOp::Gt => n as usize + 1,
                _ => continue,
            };
            let target = model.concrete_classes().find(|c| in_selection(a, &c.name, model));
            if let Some(t) = target {
                let e = counts.entry(t.name.clone()).or_insert(0);
                *e = (*e).max(need);
            }
        }
    }
    counts
}

fn lower_camel(name: &str) -> String {
    let chars: Vec<char> = name.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < chars.len() && chars[i].is_uppercase() {
        let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
        if i > 0 && next_lower {
            break;
        }
        out.push(chars[i].to_ascii_lowercase());
        i += 1;
    }
    out.extend(&chars[i..]);
    out
}

/// Instances in class declaration order, named `lowerCamelClass<k>`.
pub fn universe(model: &DomainModel, counts: &BTreeMap<String, usize>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for c in model.concrete_classes() {
        for k in 1..=counts.get(&c.name).copied().unwrap_or(0) {
            out.push((format!("{}{k}", lower_camel(&c.name)), c.name.clone()));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Slot {
    Attr(Value),
    Link(Option<usize>),
}

struct Var {
    inst: usize,
    name: String,
    domain: Vec<Slot>,
}

/// The variable layout of a universe, with per-instance name lookup.
struct Layout<'m> {
    model: &'m DomainModel,
    instances: Vec<(String, String)>,
    vars: Vec<Var>,
    slots: Vec<HashMap<String, usize>>,
}

type AttrId = (String, String);

struct Hints {
    literals: BTreeMap<AttrId, BTreeSet<i64>>,
    full_range: BTreeSet<AttrId>,
}

fn hints(pc: &[&Formula], model: &DomainModel) -> Hints {
    let mut h = Hints { literals: BTreeMap::new(), full_range: BTreeSet::new() };
    for f in pc {
        for a in f.atoms() {
            let Some(c) = a.comparison() else { continue };
            let Ok(lhs) = model.resolve_path(&a.entity, &c.lhs) else { continue };
            match &c.rhs {
                RhsTerm::Lit(Literal::Int(n)) => {
                    h.literals.entry(lhs.attribute_id()).or_default().insert(*n);
                }
                RhsTerm::Var(p) => {
                    h.full_range.insert(lhs.attribute_id());
                    if let Ok(r) = model.resolve_path(&a.entity, p) {
                        h.full_range.insert(r.attribute_id());
                    }
                }
                _ => {}
            }
        }
    }
    h
}

fn int_candidates(lo: i64, hi: i64, default: Option<i64>, lits: Option<&BTreeSet<i64>>, full: bool) -> Vec<i64> {
    let default = default.filter(|d| (lo..=hi).contains(d));
    let mut pool: BTreeSet<i64> = BTreeSet::new();
    if full {
        pool.extend(lo..=hi);
    } else {
        for &l in lits.into_iter().flatten() {
            pool.extend([l.saturating_sub(1), l, l.saturating_add(1)]);
        }
        pool.extend([lo, hi, 0]);
        pool.retain(|v| (lo..=hi).contains(v));
    }
    let anchors: Vec<i64> = match lits {
        Some(l) if !l.is_empty() => l.iter().copied().collect(),
        _ => vec![default.unwrap_or(0)],
    };
    let dist = |v: i64| anchors.iter().map(|a| (v as i128 - *a as i128).abs()).min().unwrap_or(0);
    let mut rest: Vec<i64> = pool.into_iter().filter(|v| Some(*v) != default).collect();
    rest.sort_by_key(|v| (dist(*v), *v));
    default.into_iter().chain(rest).collect()
}

#[derive(Clone, Copy)]
enum Domains<'h> {
    Candidates(&'h Hints),
    Full,
}

impl<'m> Layout<'m> {
    fn new(model: &'m DomainModel, instances: Vec<(String, String)>, domains: Domains<'_>, full_range_limit: i64) -> Self {
        let mut vars = Vec::new();
        let mut slots = vec![HashMap::new(); instances.len()];
        for (k, (_, class)) in instances.iter().enumerate() {
            for m in model.members(class) {
                let domain: Vec<Slot> = match m {
                    Member::Assoc { def, .. } => {
                        let targets: Vec<Slot> = instances
                            .iter()
                            .enumerate()
                            .filter(|(_, (_, c))| model.conforms(c, &def.target))
                            .map(|(t, _)| Slot::Link(Some(t)))
                            .collect();
                        if targets.is_empty() {
                            vec![Slot::Link(None)]
                        } else {
                            targets
                        }
                    }
                    Member::Attr { declared_in, def } => {
                        let id = (declared_in.to_string(), def.name.clone());
                        let values: Vec<Value> = match (&def.ty, domains) {
                            (AttrType::Bool, _) => {
                                let mut v = vec![Value::Bool(false), Value::Bool(true)];
                                if let Some(d) = &def.default {
                                    v.retain(|x| x != d);
                                    v.insert(0, d.clone());
                                }
                                v
                            }
                            (AttrType::Enum(e), _) => {
                                let mut v: Vec<Value> = model
                                    .enum_def(e)
                                    .map(|d| d.members.iter().map(|m| Value::Enum(m.clone())).collect())
                                    .unwrap_or_default();
                                v.push(Value::Null);
                                if let Some(d) = &def.default {
                                    v.retain(|x| x != d);
                                    v.insert(0, d.clone());
                                }
                                v
                            }
                            (AttrType::Int { lo, hi }, Domains::Full) => (*lo..=*hi).map(Value::Int).collect(),
                            (AttrType::Int { lo, hi }, Domains::Candidates(h)) => {
                                let default = match &def.default {
                                    Some(Value::Int(n)) => Some(*n),
                                    _ => None,
                                };
                                let small = (*hi as i128 - *lo as i128) < full_range_limit as i128;
                                let full = small && h.full_range.contains(&id);
                                int_candidates(*lo, *hi, default, h.literals.get(&id), full)
                                    .into_iter()
                                    .map(Value::Int)
                                    .collect()
                            }
                        };
                        values.into_iter().map(Slot::Attr).collect()
                    }
                };
                slots[k].insert(m.name().to_string(), vars.len());
                vars.push(Var { inst: k, name: m.name().to_string(), domain });
            }
        }
        Layout { model, instances, vars, slots }
    }

    fn diagram(&self, assign: &[usize]) -> ObjectDiagram {
        let mut instances: Vec<Instance> = self
            .instances
            .iter()
            .map(|(id, class)| Instance { id: id.clone(), class: class.clone(), attrs: Vec::new(), links: Vec::new() })
            .collect();
        for (v, var) in self.vars.iter().enumerate() {
            match &var.domain[assign[v]] {
                Slot::Attr(x) => instances[var.inst].attrs.push((var.name.clone(), x.clone())),
                Slot::Link(t) => instances[var.inst].links.push((var.name.clone(), *t)),
            }
        }
        ObjectDiagram { instances }
    }

    /// Variables an expression may read when evaluated on instance `inst`.
    fn expr_deps(&self, e: &Expr, inst: usize, out: &mut BTreeSet<usize>) {
        let Expr::Cmp(c) = e else { return };
        let mut paths = vec![&c.lhs];
        if let RhsTerm::Var(p) = &c.rhs {
            paths.push(p);
        }
        for p in paths {
            let Some((last, assocs)) = p.split_last() else { continue };
            let mut cur = BTreeSet::from([inst]);
            for seg in assocs {
                let mut next = BTreeSet::new();
                for &i in &cur {
                    if let Some(&v) = self.slots[i].get(seg) {
                        out.insert(v);
                        for s in &self.vars[v].domain {
                            if let Slot::Link(Some(t)) = s {
                                next.insert(*t);
                            }
                        }
                    }
                }
                cur = next;
            }
            for &i in &cur {
                if let Some(&v) = self.slots[i].get(last) {
                    out.insert(v);
                }
            }
        }
    }

    fn members_of(&self, c: &OclConstraint) -> Vec<usize> {
        (0..self.instances.len()).filter(|&i| in_selection(c, &self.instances[i].1, self.model)).collect()
    }

    fn formula_deps(&self, f: &Formula) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for a in f.atoms() {
            for i in self.members_of(a) {
                self.expr_deps(&a.expr, i, &mut out);
            }
        }
        out
    }
}

struct View<'a> {
    layout: &'a Layout<'a>,
    assign: &'a [usize],
}

impl ValueSource for View<'_> {
    fn instance_count(&self) -> usize {
        self.layout.instances.len()
    }

    fn class_of(&self, inst: usize) -> &str {
        &self.layout.instances[inst].1
    }

    fn attr(&self, inst: usize, name: &str) -> Result<Value, EvalError> {
        let miss = || EvalError::MissingMember { instance: self.layout.instances[inst].0.clone(), member: name.to_string() };
        let v = *self.layout.slots[inst].get(name).ok_or_else(miss)?;
        match &self.layout.vars[v].domain[self.assign[v]] {
            Slot::Attr(x) => Ok(x.clone()),
            Slot::Link(_) => Err(miss()),
        }
    }

    fn link(&self, inst: usize, name: &str) -> Result<Option<usize>, EvalError> {
        let miss = || EvalError::MissingMember { instance: self.layout.instances[inst].0.clone(), member: name.to_string() };
        let v = *self.layout.slots[inst].get(name).ok_or_else(miss)?;
        match &self.layout.vars[v].domain[self.assign[v]] {
            Slot::Link(t) => Ok(*t),
            Slot::Attr(_) => Err(miss()),
        }
    }
}

/// One unit of checking: a whole formula, or a universally quantified atom
/// restricted to a single instance.
enum Check<'f> {
    Whole(&'f Formula),
    Instance(&'f OclConstraint, usize),
}

impl Check<'_> {
    fn holds(&self, view: &View<'_>, model: &DomainModel) -> bool {
        match self {
            Check::Whole(f) => eval_formula(f, view, model).unwrap_or(false),
            Check::Instance(c, i) => expr_holds(&c.expr, view, *i).unwrap_or(false),
        }
    }
}

fn split_checks<'f>(f: &'f Formula, layout: &Layout<'_>, out: &mut Vec<Check<'f>>) {
    match f {
        Formula::And(fs) => fs.iter().for_each(|g| split_checks(g, layout, out)),
        Formula::Atom(c) if c.query == Query::ForAll => {
            for i in layout.members_of(c) {
                out.push(Check::Instance(c, i));
            }
        }
        _ => out.push(Check::Whole(f)),
    }
}

fn find(a: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while a[r] != r {
        r = a[r];
    }
    let mut y = x;
    while a[y] != r {
        let n = a[y];
        a[y] = r;
        y = n;
    }
    r
}

fn search_model(pc: &[&Formula], layout: &Layout<'_>) -> Option<Vec<usize>> {
    let model = layout.model;
    let mut checks = Vec::new();
    for f in pc {
        split_checks(f, layout, &mut checks);
    }
    let mut assign = vec![0usize; layout.vars.len()];
    let deps: Vec<BTreeSet<usize>> = checks
        .iter()
        .map(|c| match c {
            Check::Whole(f) => layout.formula_deps(f),
            Check::Instance(a, i) => {
                let mut s = BTreeSet::new();
                layout.expr_deps(&a.expr, *i, &mut s);
                s
            }
        })
        .collect();
    for (c, d) in checks.iter().zip(&deps) {
        if d.is_empty() && !c.holds(&View { layout, assign: &assign }, model) {
            return None;
        }
    }
    let mut parent: Vec<usize> = (0..layout.vars.len()).collect();
    for d in &deps {
        let mut it = d.iter();
        if let Some(&first) = it.next() {
            for &v in it {
                let (a, b) = (find(&mut parent, first), find(&mut parent, v));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for d in deps.iter().filter(|d| !d.is_empty()) {
        let root = find(&mut parent, *d.iter().next().unwrap());
        components.entry(root).or_default();
    }
    for v in 0..layout.vars.len() {
        let root = find(&mut parent, v);
        if let Some(c) = components.get_mut(&root) {
            c.push(v);
        }
    }
    for vars in components.values() {
        let pos: HashMap<usize, usize> = vars.iter().enumerate().map(|(p, &v)| (v, p)).collect();
        let mut at: Vec<Vec<usize>> = vec![Vec::new(); vars.len()];
        for (k, d) in deps.iter().enumerate() {
            if let Some(&last) = d.iter().next_back() {
                if let Some(&p) = pos.get(&last) {
                    at[p].push(k);
                }
            }
        }
        if !backtrack(0, vars, &at, &checks, layout, &mut assign) {
            return None;
        }
    }
    Some(assign)
}

fn backtrack(
    p: usize,
    vars: &[usize],
    at: &[Vec<usize>],
    checks: &[Check<'_>],
    layout: &Layout<'_>,
    assign: &mut Vec<usize>,
) -> bool {
    if p == vars.len() {
        return true;
    }
    let v = vars[p];
    for k in 0..layout.vars[v].domain.len() {
        assign[v] = k;
        let ok = {
            let view = View { layout, assign };
            at[p].iter().all(|&c| checks[c].holds(&view, layout.model))
        };
        if ok && backtrack(p + 1, vars, at, checks, layout, assign) {
            return true;
        }
    }
    assign[v] = 0;
    false
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveResult {
    Sat(ObjectDiagram),
    /// Indices into the path condition of a deletion-minimal unsatisfiable subset.
    Unsat { core: Vec<usize> },
}

/// Solver over a fixed instance universe.
pub struct Session<'m> {
    model: &'m DomainModel,
    instances: Vec<(String, String)>,
    bounds: SolverBounds,
}

impl<'m> Session<'m> {
    /// Fixes the universe from the bounds raised for `pc`.
    pub fn new(pc: &[&Formula], model: &'m DomainModel, bounds: &SolverBounds) -> Self {
        let counts = effective_bounds(pc, model, bounds);
        Session { model, instances: universe(model, &counts), bounds: bounds.clone() }
    }

    pub fn instances(&self) -> &[(String, String)] {
        &self.instances
    }

    pub fn find_model(&self, pc: &[&Formula]) -> Option<ObjectDiagram> {
        let h = hints(pc, self.model);
        let layout = Layout::new(self.model, self.instances.clone(), Domains::Candidates(&h), self.bounds.full_range_limit);
        search_model(pc, &layout).map(|a| layout.diagram(&a))
    }

    pub fn brute_force(&self, pc: &[&Formula]) -> Result<bool, SolverError> {
        let layout = Layout::new(self.model, self.instances.clone(), Domains::Full, self.bounds.full_range_limit);
        let space = layout.vars.iter().try_fold(1u128, |acc, v| {
            let n = acc.saturating_mul(v.domain.len() as u128);
            if n > BRUTE_FORCE_CAP {
                Err(SolverError::SearchSpaceTooLarge(n))
            } else {
                Ok(n)
            }
        })?;
        let _ = space;
        let mut assign = vec![0usize; layout.vars.len()];
        loop {
            let view = View { layout: &layout, assign: &assign };
            if pc.iter().all(|f| eval_formula(f, &view, self.model).unwrap_or(false)) {
                return Ok(true);
            }
            let mut i = 0;
            loop {
                if i == assign.len() {
                    return Ok(false);
                }
                assign[i] += 1;
                if assign[i] < layout.vars[i].domain.len() {
                    break;
                }
                assign[i] = 0;
                i += 1;
            }
        }
    }
}

fn satisfiable(pc: &[&Formula], model: &DomainModel, bounds: &SolverBounds) -> bool {
    Session::new(pc, model, bounds).find_model(pc).is_some()
}

/// Deletion-based core in path condition order. Each trial is solved over the
/// universe its own entries call for, and passes repeat until no entry can be
/// dropped, so the core is unsatisfiable on its own and 1-minimal.
fn minimal_core(pc: &[&Formula], model: &DomainModel, bounds: &SolverBounds) -> Vec<usize> {
    let mut keep: Vec<usize> = (0..pc.len()).collect();
    loop {
        let mut changed = false;
        let mut k = 0;
        while k < keep.len() {
            let trial: Vec<usize> = keep.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, &i)| i).collect();
            let refs: Vec<&Formula> = trial.iter().map(|&i| pc[i]).collect();
            if satisfiable(&refs, model, bounds) {
                k += 1;
            } else {
                keep = trial;
                changed = true;
            }
        }
        if !changed {
            return keep;
        }
    }
}

pub fn solve(pc: &[Formula], model: &DomainModel, bounds: &SolverBounds) -> SolveResult {
    let refs: Vec<&Formula> = pc.iter().collect();
    let s = Session::new(&refs, model, bounds);
    match s.find_model(&refs) {
        Some(d) => SolveResult::Sat(d),
        None => SolveResult::Unsat { core: minimal_core(&refs, model, bounds) },
    }
}

pub fn unsat_core(pc: &[Formula], model: &DomainModel, bounds: &SolverBounds) -> Result<Vec<usize>, SolverError> {
    let refs: Vec<&Formula> = pc.iter().collect();
    let s = Session::new(&refs, model, bounds);
    if s.find_model(&refs).is_some() {
        return Err(SolverError::Satisfiable);
    }
    Ok(minimal_core(&refs, model, bounds))
}

/// Exhaustive enumeration over full domains; the independent oracle for `solve`.
pub fn brute_force_sat(pc: &[Formula], model: &DomainModel, bounds: &SolverBounds) -> Result<bool, SolverError> {
    let refs: Vec<&Formula> = pc.iter().collect();
    Session::new(&refs, model, bounds).brute_force(&refs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceKind {
    Precondition,
    Condition,
    Interrupting,
    Internal,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Precondition => "precondition",
            SourceKind::Condition => "condition",
            SourceKind::Interrupting => "interrupting",
            SourceKind::Internal => "internal",
        }
    }
}

/// One conjunct of a path condition, with where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcEntry {
    pub formula: Formula,
    pub kind: SourceKind,
    pub node: usize,
    pub polarity: bool,
    /// Constraint key of the originating step, e.g. `Self Diagnosis#basic#1`.
    pub key: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IncrementalResult {
    Feasible { diagram: ObjectDiagram, removed: Vec<usize> },
    /// `trigger` is the entry whose addition made the prefix unsatisfiable.
    Infeasible { core: Vec<usize>, trigger: usize },
}

fn attribute_ids(f: &Formula, model: &DomainModel) -> BTreeSet<AttrId> {
    f.paths(model).iter().map(|p| p.attribute_id()).collect()
}

/// Solves growing prefixes. When an internal step's postcondition conflicts
/// only with earlier internal postconditions over the same attributes, those
/// earlier entries are dropped and solving continues.
pub fn solve_incremental(pc: &[PcEntry], model: &DomainModel, bounds: &SolverBounds) -> IncrementalResult {
    let all: Vec<&Formula> = pc.iter().map(|e| &e.formula).collect();
    let session = Session::new(&all, model, bounds);
    if let Some(d) = session.find_model(&all) {
        return IncrementalResult::Feasible { diagram: d, removed: Vec::new() };
    }
    let mut active: Vec<usize> = Vec::new();
    let mut removed: Vec<usize> = Vec::new();
    let mut last = None;
    for k in 0..pc.len() {
        active.push(k);
        loop {
            let refs: Vec<&Formula> = active.iter().map(|&i| &pc[i].formula).collect();
            if let Some(d) = session.find_model(&refs) {
                last = Some(d);
                break;
            }
            let core: Vec<usize> = minimal_core(&refs, model, bounds).into_iter().map(|j| active[j]).collect();
            let others: Vec<usize> = core.iter().copied().filter(|&i| i != k).collect();
            let target = attribute_ids(&pc[k].formula, model);
            let redefinition = pc[k].kind == SourceKind::Internal
                && core.contains(&k)
                && !others.is_empty()
                && others.iter().all(|&i| {
                    pc[i].kind == SourceKind::Internal && attribute_ids(&pc[i].formula, model).is_subset(&target)
                });
            if !redefinition {
                return IncrementalResult::Infeasible { core, trigger: k };
            }
            active.retain(|i| !others.contains(i));
            removed.extend(others);
        }
    }
    let diagram = last.unwrap_or_else(|| session.find_model(&[]).unwrap_or_default());
    removed.sort_unstable();
    IncrementalResult::Feasible { diagram, removed }
}
