//! Clauses, goals, and the clause database.
//!
//! Clause order is significant: resolution tries clauses for a predicate in
//! exactly the order they were written. Dynamic facts are a separate,
//! host-managed store appended after the static clauses of the same
//! predicate; they hold session fluents and are the only clauses that
//! `retract_matching` may remove.

use std::collections::HashMap;
use std::fmt;

use crate::error::{EngineError, SourceSpan};
use crate::term::{PredId, Term};
use crate::unify::{unify, Substitution};

/// Comparison operators over integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Le => "=<",
            CmpOp::Eq => "=",
            CmpOp::Ne => "\\=",
        }
    }

    pub fn eval(&self, left: i64, right: i64) -> bool {
        match self {
            CmpOp::Gt => left > right,
            CmpOp::Lt => left < right,
            CmpOp::Ge => left >= right,
            CmpOp::Le => left <= right,
            CmpOp::Eq => left == right,
            CmpOp::Ne => left != right,
        }
    }
}

/// The builtin predicates the engine dispatches itself. These names are
/// reserved: programs may call them but not define them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// ground/1
    Ground,
    /// member/2
    Member,
    /// findall/3
    Findall,
    /// rand_member/2: one uniform draw from a ground list.
    RandMember,
}

impl Builtin {
    pub fn lookup(name: &str, arity: usize) -> Option<Builtin> {
        match (name, arity) {
            ("ground", 1) => Some(Builtin::Ground),
            ("member", 2) => Some(Builtin::Member),
            ("findall", 3) => Some(Builtin::Findall),
            ("rand_member", 2) => Some(Builtin::RandMember),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Ground => "ground",
            Builtin::Member => "member",
            Builtin::Findall => "findall",
            Builtin::RandMember => "rand_member",
        }
    }
}

/// A body goal.
#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    /// An ordinary predicate call.
    Call(Term),
    /// Negation as failure.
    Not(Box<Goal>),
    /// An integer comparison.
    Compare(CmpOp, Term, Term),
    /// A reserved builtin call.
    Builtin(Builtin, Vec<Term>),
}

impl Goal {
    /// Instantiates the terms inside a goal.
    pub fn apply(&self, subst: &Substitution) -> Goal {
        match self {
            Goal::Call(t) => Goal::Call(subst.apply(t)),
            Goal::Not(g) => Goal::Not(Box::new(g.apply(subst))),
            Goal::Compare(op, l, r) => Goal::Compare(*op, subst.apply(l), subst.apply(r)),
            Goal::Builtin(b, args) => Goal::Builtin(*b, args.iter().map(|a| subst.apply(a)).collect()),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Goal::Call(t) => t.collect_vars(out),
            Goal::Not(g) => g.collect_vars(out),
            Goal::Compare(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Goal::Builtin(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    /// Variables of the goal including every underscore-prefixed name
    /// (the plain `collect_vars` skips only the anonymous `_`).
    pub fn free_vars(&self) -> Vec<String> {
        let mut vars = Vec::new();
        self.collect_vars(&mut vars);
        vars
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Call(t) => write!(f, "{t}"),
            Goal::Not(g) => write!(f, "not {g}"),
            Goal::Compare(op, l, r) => write!(f, "{l} {} {r}", op.symbol()),
            Goal::Builtin(b, args) => {
                write!(f, "{}(", b.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// One clause: `head.` (a fact) or `head if g1 and ... and gn.`
#[derive(Debug, Clone, PartialEq)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Goal>,
    pub span: SourceSpan,
}

impl Clause {
    pub fn fact(head: Term) -> Clause {
        Clause { head, body: Vec::new(), span: SourceSpan::synthetic() }
    }

    pub fn is_fact(&self) -> bool {
        self.body.is_empty()
    }

    pub fn key(&self) -> PredId {
        self.head.predicate_key().expect("clause heads are callable")
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" if ")?;
            for (i, g) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(" and ")?;
                }
                write!(f, "{g}")?;
            }
        }
        f.write_str(".")
    }
}

/// An ordered clause database with a (functor, arity) index and a separate
/// dynamic-fact store.
#[derive(Debug, Clone, Default)]
pub struct Program {
    clauses: Vec<Clause>,
    index: HashMap<PredId, Vec<usize>>,
    dynamic: Vec<Clause>,
}

impl Program {
    pub fn new() -> Program {
        Program::default()
    }

    pub fn from_clauses(clauses: Vec<Clause>) -> Program {
        let mut program = Program::new();
        for clause in clauses {
            program.push_static(clause);
        }
        program
    }

    pub fn push_static(&mut self, clause: Clause) {
        let key = clause.key();
        self.index.entry(key).or_default().push(self.clauses.len());
        self.clauses.push(clause);
    }

    /// Appends every static clause of `other`, preserving order.
    pub fn merge(&mut self, other: &Program) {
        for clause in &other.clauses {
            self.push_static(clause.clone());
        }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn dynamic_facts(&self) -> &[Clause] {
        &self.dynamic
    }

    pub fn defines(&self, pred: &PredId) -> bool {
        self.index.contains_key(pred) || self.dynamic.iter().any(|c| &c.key() == pred)
    }

    /// Clauses for a predicate in resolution order: static clauses as
    /// written, then dynamic facts in assertion order.
    pub fn clauses_for(&self, pred: &PredId) -> Vec<&Clause> {
        let mut out: Vec<&Clause> = match self.index.get(pred) {
            Some(positions) => positions.iter().map(|&i| &self.clauses[i]).collect(),
            None => Vec::new(),
        };
        out.extend(self.dynamic.iter().filter(|c| &c.key() == pred));
        out
    }

    /// Adds a dynamic fact. The clause must have an empty body.
    pub fn assert_fact(&mut self, fact: Clause) -> Result<(), EngineError> {
        if !fact.is_fact() {
            return Err(EngineError::type_error(
                format!("assert requires a fact, got a clause with {} body goals", fact.body.len()),
                vec![fact.head.to_string()],
            ));
        }
        self.dynamic.push(fact);
        Ok(())
    }

    /// Removes every dynamic fact whose head unifies with `pattern`.
    /// Static clauses are never touched. Returns how many were removed.
    pub fn retract_matching(&mut self, pattern: &Term) -> usize {
        let before = self.dynamic.len();
        self.dynamic.retain(|fact| unify(&fact.head, pattern, &Substitution::new()).is_none());
        before - self.dynamic.len()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for clause in &self.clauses {
            writeln!(f, "{clause}")?;
        }
        for fact in &self.dynamic {
            writeln!(f, "{fact}")?;
        }
        Ok(())
    }
}
