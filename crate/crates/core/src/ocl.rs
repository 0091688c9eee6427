//! Constraint language: the `allInstances()` query pattern, its canonical text
//! form, a parser for that form and logical negation.

use std::fmt;

use thiserror::Error;

use crate::domain::{AttrType, DomainModel, PathEnd, VariablePath};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OclError {
    #[error("syntax error at `{near}`: {message}")]
    Syntax { near: String, message: String },
    #[error("bare `i` expression has no textual form")]
    BareExpression,
    #[error("type error: {0}")]
    Type(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Lt,
    Ge,
    Le,
}

impl CmpOp {
    pub fn complement(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
        }
    }

    pub fn parse(s: &str) -> Option<CmpOp> {
        Some(match s {
            "=" | "==" => CmpOp::Eq,
            "!=" | "<>" => CmpOp::Ne,
            ">" => CmpOp::Gt,
            "<" => CmpOp::Lt,
            ">=" => CmpOp::Ge,
            "<=" => CmpOp::Le,
            _ => return None,
        })
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Gt => a > b,
            CmpOp::Lt => a < b,
            CmpOp::Ge => a >= b,
            CmpOp::Le => a <= b,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Enum { enum_name: String, member: String },
    Null,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(n) => write!(f, "{n}"),
            Literal::Enum { enum_name, member } => write!(f, "{enum_name}::{member}"),
            Literal::Null => f.write_str("null"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RhsTerm {
    Lit(Literal),
    Var(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Comparison {
    pub lhs: Vec<String>,
    pub op: CmpOp,
    pub rhs: RhsTerm,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    /// `i` (true) or `not i` (false) for every selected instance.
    Bare(bool),
    Cmp(Comparison),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Query {
    ForAll,
    Exists,
    Count(CmpOp, u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OclConstraint {
    pub entity: String,
    pub excluded: Vec<String>,
    pub query: Query,
    pub expr: Expr,
}

impl OclConstraint {
    pub fn negate(&self) -> OclConstraint {
        let expr = match &self.expr {
            Expr::Bare(b) => Expr::Bare(!b),
            Expr::Cmp(c) => Expr::Cmp(Comparison { op: c.op.complement(), ..c.clone() }),
        };
        match self.query {
            Query::ForAll => OclConstraint { query: Query::Exists, expr, ..self.clone() },
            Query::Exists => OclConstraint { query: Query::ForAll, expr, ..self.clone() },
            Query::Count(op, n) => OclConstraint { query: Query::Count(op.complement(), n), ..self.clone() },
        }
    }

    pub fn render(&self) -> Result<String, OclError> {
        let cmp = match &self.expr {
            Expr::Bare(_) => return Err(OclError::BareExpression),
            Expr::Cmp(c) => c,
        };
        let rhs = match &cmp.rhs {
            RhsTerm::Lit(l) => l.to_string(),
            RhsTerm::Var(p) => format!("i.{}", p.join(".")),
        };
        let body = format!("i.{} {} {}", cmp.lhs.join("."), cmp.op, rhs);
        let mut out = format!("{}.allInstances()", self.entity);
        if !self.excluded.is_empty() {
            let parts: Vec<String> = self.excluded.iter().map(|c| format!("not e.typeOf({c})")).collect();
            out.push_str(&format!(" -> select( e | {} )", parts.join(" and ")));
        }
        match self.query {
            Query::ForAll => out.push_str(&format!(" -> forAll( i | {body} )")),
            Query::Exists => out.push_str(&format!(" -> exists( i | {body} )")),
            Query::Count(op, n) => out.push_str(&format!(" -> select( i | {body} ) -> size() {op} {n}")),
        }
        Ok(out)
    }

    pub fn comparison(&self) -> Option<&Comparison> {
        match &self.expr {
            Expr::Cmp(c) => Some(c),
            Expr::Bare(_) => None,
        }
    }

    /// Typed lhs path, resolved from the entity.
    pub fn lhs_path(&self, model: &DomainModel) -> Option<VariablePath> {
        self.comparison().and_then(|c| model.resolve_path(&self.entity, &c.lhs).ok())
    }

    /// Every attribute path the constraint reads.
    pub fn paths(&self, model: &DomainModel) -> Vec<VariablePath> {
        let mut out = Vec::new();
        if let Some(c) = self.comparison() {
            if let Ok(p) = model.resolve_path(&self.entity, &c.lhs) {
                out.push(p);
            }
            if let RhsTerm::Var(v) = &c.rhs {
                if let Ok(p) = model.resolve_path(&self.entity, v) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// Checks the constraint against the model: entity, exclusions, path and literal types.
    pub fn check(&self, model: &DomainModel) -> Result<(), OclError> {
        if model.class(&self.entity).is_none() {
            return Err(OclError::Type(format!("unknown entity `{}`", self.entity)));
        }
        for x in &self.excluded {
            if model.class(x).is_none() || !model.conforms(x, &self.entity) {
                return Err(OclError::Type(format!("`{x}` is not a subtype of `{}`", self.entity)));
            }
        }
        let Some(c) = self.comparison() else { return Ok(()) };
        let lhs = model
            .resolve_path(&self.entity, &c.lhs)
            .map_err(|e| OclError::Type(e.to_string()))?;
        let ordered = matches!(c.op, CmpOp::Gt | CmpOp::Lt | CmpOp::Ge | CmpOp::Le);
        match &c.rhs {
            RhsTerm::Var(v) => {
                let rhs = model
                    .resolve_path(&self.entity, v)
                    .map_err(|e| OclError::Type(e.to_string()))?;
                let same = match (&lhs.terminal_type, &rhs.terminal_type) {
                    (AttrType::Int { .. }, AttrType::Int { .. }) => true,
                    (a, b) => a == b,
                };
                if !same {
                    return Err(OclError::Type(format!("`{}` and `{}` differ in type", lhs.dotted(), rhs.dotted())));
                }
            }
            RhsTerm::Lit(l) => {
                let ok = match (&lhs.terminal_type, l) {
                    (AttrType::Bool, Literal::Bool(_)) => true,
                    (AttrType::Int { .. }, Literal::Int(_)) => true,
                    (AttrType::Enum(e), Literal::Enum { enum_name, member }) => {
                        e == enum_name && model.enum_def(e).is_some_and(|d| d.members.contains(member))
                    }
                    (AttrType::Enum(_), Literal::Null) => true,
                    _ => false,
                };
                if !ok {
                    return Err(OclError::Type(format!("`{l}` does not fit `{}: {}`", lhs.dotted(), lhs.terminal_type)));
                }
            }
        }
        if ordered && !matches!(lhs.terminal_type, AttrType::Int { .. }) {
            return Err(OclError::Type(format!("ordering comparison on non-integer `{}`", lhs.dotted())));
        }
        Ok(())
    }
}

/// Conjunctions and disjunctions of constraints. A single sentence with two
/// clauses ("no error is detected and no error is qualified") yields `And`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(OclConstraint),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Atom(c) => Formula::Atom(c.negate()),
            Formula::And(fs) => Formula::Or(fs.iter().map(Formula::negate).collect()),
            Formula::Or(fs) => Formula::And(fs.iter().map(Formula::negate).collect()),
        }
    }

    pub fn atoms(&self) -> Vec<&OclConstraint> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a OclConstraint>) {
        match self {
            Formula::Atom(c) => out.push(c),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
        }
    }

    pub fn render(&self) -> Result<String, OclError> {
        match self {
            Formula::Atom(c) => c.render(),
            Formula::And(fs) | Formula::Or(fs) => {
                let sep = if matches!(self, Formula::And(_)) { " and " } else { " or " };
                let parts = fs
                    .iter()
                    .map(|f| match f {
                        Formula::Atom(_) => f.render(),
                        _ => f.render().map(|s| format!("( {s} )")),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(parts.join(sep))
            }
        }
    }

    pub fn check(&self, model: &DomainModel) -> Result<(), OclError> {
        self.atoms().into_iter().try_for_each(|a| a.check(model))
    }

    pub fn paths(&self, model: &DomainModel) -> Vec<VariablePath> {
        self.atoms().into_iter().flat_map(|a| a.paths(model)).collect()
    }
}

impl From<OclConstraint> for Formula {
    fn from(c: OclConstraint) -> Self {
        Formula::Atom(c)
    }
}

/// Parses canonical text and type-checks it against the model.
pub fn parse_checked(text: &str, model: &DomainModel) -> Result<Formula, OclError> {
    let f = parse_formula(text)?;
    f.check(model)?;
    Ok(f)
}

pub fn parse_formula(text: &str) -> Result<Formula, OclError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0 };
    let f = p.formula()?;
    if p.pos != p.toks.len() {
        return Err(p.error("trailing input"));
    }
    Ok(f)
}

pub fn parse_constraint(text: &str) -> Result<OclConstraint, OclError> {
    match parse_formula(text)? {
        Formula::Atom(c) => Ok(c),
        _ => Err(OclError::Syntax { near: text.to_string(), message: "expected a single constraint".into() }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<Tok>, OclError> {
    const SYMS: [&str; 14] = ["->", "::", "!=", "<>", ">=", "<=", "(", ")", "|", ".", "=", ">", "<", "-"];
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[s..i].iter().collect()));
        } else if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let n: String = chars[s..i].iter().collect();
            let v = n.parse().map_err(|_| OclError::Syntax { near: n.clone(), message: "integer overflow".into() })?;
            out.push(Tok::Int(v));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let sym = SYMS
                .iter()
                .find(|s| rest.starts_with(**s))
                .ok_or_else(|| OclError::Syntax { near: rest.clone(), message: "unexpected character".into() })?;
            out.push(Tok::Sym(sym));
            i += sym.len();
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: &str) -> OclError {
        let near = match self.toks.get(self.pos) {
            Some(Tok::Ident(s)) => s.clone(),
            Some(Tok::Int(n)) => n.to_string(),
            Some(Tok::Sym(s)) => s.to_string(),
            None => "end of input".into(),
        };
        OclError::Syntax { near, message: message.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn peek_is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == w)
    }

    fn sym(&mut self, s: &str) -> Result<(), OclError> {
        if self.peek_is_sym(s) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{s}`")))
        }
    }

    fn word(&mut self, w: &str) -> Result<(), OclError> {
        if self.peek_is_word(w) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{w}`")))
        }
    }

    fn ident(&mut self) -> Result<String, OclError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn formula(&mut self) -> Result<Formula, OclError> {
        let first = self.operand()?;
        let mut parts = vec![first];
        let mut kind: Option<&str> = None;
        while let Some(Tok::Ident(w)) = self.peek() {
            let w = if w == "and" { "and" } else if w == "or" { "or" } else { break };
            if kind.is_some_and(|k| k != w) {
                return Err(self.error("mixed `and`/`or` needs parentheses"));
            }
            kind = Some(w);
            self.pos += 1;
            parts.push(self.operand()?);
        }
        Ok(match kind {
            None => parts.pop().expect("one part"),
            Some("and") => Formula::And(parts),
            Some(_) => Formula::Or(parts),
        })
    }

    fn operand(&mut self) -> Result<Formula, OclError> {
        if self.peek_is_sym("(") {
            self.pos += 1;
            let f = self.formula()?;
            self.sym(")")?;
            Ok(f)
        } else {
            Ok(Formula::Atom(self.constraint()?))
        }
    }

    fn constraint(&mut self) -> Result<OclConstraint, OclError> {
        let entity = self.ident()?;
        self.sym(".")?;
        self.word("allInstances")?;
        self.sym("(")?;
        self.sym(")")?;
        self.sym("->")?;
        let mut excluded = Vec::new();
        let head = self.ident()?;
        let mut head = head;
        if head == "select" && self.is_exclusion() {
            self.sym("(")?;
            self.word("e")?;
            self.sym("|")?;
            loop {
                self.word("not")?;
                self.word("e")?;
                self.sym(".")?;
                self.word("typeOf")?;
                self.sym("(")?;
                excluded.push(self.ident()?);
                self.sym(")")?;
                if self.peek_is_word("and") {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            self.sym(")")?;
            self.sym("->")?;
            head = self.ident()?;
        }
        match head.as_str() {
            "forAll" | "exists" => {
                self.sym("(")?;
                let expr = self.lambda()?;
                self.sym(")")?;
                let query = if head == "forAll" { Query::ForAll } else { Query::Exists };
                Ok(OclConstraint { entity, excluded, query, expr })
            }
            "select" => {
                self.sym("(")?;
                let expr = self.lambda()?;
                self.sym(")")?;
                self.sym("->")?;
                self.word("size")?;
                self.sym("(")?;
                self.sym(")")?;
                let op = self.op()?;
                let n = match self.peek() {
                    Some(Tok::Int(n)) if *n <= u32::MAX as i64 => *n as u32,
                    _ => return Err(self.error("expected a count")),
                };
                self.pos += 1;
                Ok(OclConstraint { entity, excluded, query: Query::Count(op, n), expr })
            }
            _ => Err(self.error("expected forAll, exists or select")),
        }
    }

    fn is_exclusion(&self) -> bool {
        matches!(self.toks.get(self.pos + 1), Some(Tok::Ident(e)) if e == "e")
    }

    fn lambda(&mut self) -> Result<Expr, OclError> {
        self.word("i")?;
        self.sym("|")?;
        if self.peek_is_word("not") {
            self.pos += 1;
            self.word("i")?;
            return Ok(Expr::Bare(false));
        }
        self.word("i")?;
        if self.peek_is_sym(")") {
            return Ok(Expr::Bare(true));
        }
        let lhs = self.path_tail()?;
        let op = self.op()?;
        let rhs = self.rhs()?;
        Ok(Expr::Cmp(Comparison { lhs, op, rhs }))
    }

    fn path_tail(&mut self) -> Result<Vec<String>, OclError> {
        let mut segs = Vec::new();
        while self.peek_is_sym(".") {
            self.pos += 1;
            segs.push(self.ident()?);
        }
        if segs.is_empty() {
            return Err(self.error("expected `.attribute`"));
        }
        Ok(segs)
    }

    fn op(&mut self) -> Result<CmpOp, OclError> {
        match self.peek() {
            Some(Tok::Sym(s)) => {
                let op = CmpOp::parse(s).ok_or_else(|| self.error("expected comparison operator"))?;
                self.pos += 1;
                Ok(op)
            }
            _ => Err(self.error("expected comparison operator")),
        }
    }

    fn rhs(&mut self) -> Result<RhsTerm, OclError> {
        let negative = if self.peek_is_sym("-") {
            self.pos += 1;
            true
        } else {
            false
        };
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(RhsTerm::Lit(Literal::Int(if negative { -n } else { n })))
            }
            _ if negative => Err(self.error("expected integer after `-`")),
            Some(Tok::Ident(w)) => {
                self.pos += 1;
                match w.as_str() {
                    "true" => Ok(RhsTerm::Lit(Literal::Bool(true))),
                    "false" => Ok(RhsTerm::Lit(Literal::Bool(false))),
                    "null" => Ok(RhsTerm::Lit(Literal::Null)),
                    "i" => Ok(RhsTerm::Var(self.path_tail()?)),
                    _ => {
                        self.sym("::")?;
                        let member = self.ident()?;
                        Ok(RhsTerm::Lit(Literal::Enum { enum_name: w, member }))
                    }
                }
            }
            _ => Err(self.error("expected a value")),
        }
    }
}

/// Whether `path` ends in an attribute of `class`; used by callers holding raw segments.
pub fn is_attribute_path(model: &DomainModel, class: &str, segments: &[String]) -> bool {
    matches!(model.walk(class, segments), Ok(PathEnd::Attr(_)))
}

/// Removes all whitespace; used to compare renderings.
pub fn normalize_ws(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}
