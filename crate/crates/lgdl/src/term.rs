//! Terms of the logic language: atoms, variables, integers, compounds, and
//! proper lists.
//!
//! Printing is canonical: atoms are quoted only when their spelling requires
//! it, compounds print as `functor(arg,arg)` with no interior spaces, and a
//! term that needed quotes prints back with the same quotes, so quoted atoms
//! survive a print/parse round trip byte for byte.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A term of the language.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    /// A constant symbol: a lowercase identifier or a single-quoted string.
    Atom(String),
    /// An integer constant.
    Int(i64),
    /// A variable. Names start with an uppercase letter or `_`; the bare
    /// name `_` is anonymous and never binds.
    Var(String),
    /// A compound term `functor(args...)` with arity >= 1.
    Compound(String, Vec<Term>),
    /// A proper list `[t1, ..., tn]`.
    List(Vec<Term>),
}

impl Term {
    pub fn atom(name: impl Into<String>) -> Term {
        Term::Atom(name.into())
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn int(value: i64) -> Term {
        Term::Int(value)
    }

    pub fn compound(functor: impl Into<String>, args: Vec<Term>) -> Term {
        let functor = functor.into();
        debug_assert!(!args.is_empty(), "compound arity must be >= 1");
        Term::Compound(functor, args)
    }

    /// True for the anonymous variable `_`.
    pub fn is_anonymous(&self) -> bool {
        matches!(self, Term::Var(name) if name == "_")
    }

    /// True when the term contains no variables at all.
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Atom(_) | Term::Int(_) => true,
            Term::Var(_) => false,
            Term::Compound(_, args) | Term::List(args) => args.iter().all(Term::is_ground),
        }
    }

    /// Collects variable names in first-occurrence order, skipping `_`.
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(name) => {
                if name != "_" && !out.iter().any(|v| v == name) {
                    out.push(name.clone());
                }
            }
            Term::Compound(_, args) | Term::List(args) => {
                for arg in args {
                    arg.collect_vars(out);
                }
            }
            Term::Atom(_) | Term::Int(_) => {}
        }
    }

    /// The `(functor, arity)` key of a callable term, if it is one.
    /// Atoms are nullary predicates; compounds carry their arity.
    pub fn predicate_key(&self) -> Option<PredId> {
        match self {
            Term::Atom(name) => Some(PredId::new(name.clone(), 0)),
            Term::Compound(functor, args) => Some(PredId::new(functor.clone(), args.len())),
            _ => None,
        }
    }

    /// Arguments of a compound; empty for an atom used as a nullary call.
    pub fn call_args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }
}

/// A predicate identity: functor name plus arity, printed `name/arity`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredId {
    pub name: String,
    pub arity: usize,
}

impl PredId {
    pub fn new(name: impl Into<String>, arity: usize) -> PredId {
        PredId { name: name.into(), arity }
    }
}

impl fmt::Display for PredId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

/// True when `name` can be printed as an atom without quotes.
pub(crate) fn atom_needs_no_quotes(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_atom(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if atom_needs_no_quotes(name) {
        f.write_str(name)
    } else {
        f.write_str("'")?;
        for c in name.chars() {
            match c {
                '\'' => f.write_str("\\'")?,
                '\\' => f.write_str("\\\\")?,
                _ => write!(f, "{c}")?,
            }
        }
        f.write_str("'")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Atom(name) => write_atom(f, name),
            Term::Int(value) => write!(f, "{value}"),
            Term::Var(name) => f.write_str(name),
            Term::Compound(functor, args) => {
                write_atom(f, functor)?;
                f.write_str("(")?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{arg}")?;
                }
                f.write_str(")")
            }
            Term::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_atom_prints_with_quotes() {
        assert_eq!(Term::atom("C").to_string(), "'C'");
        assert_eq!(Term::atom("payoff").to_string(), "payoff");
        assert_eq!(Term::atom("it's").to_string(), "'it\\'s'");
    }

    #[test]
    fn compound_prints_compact() {
        let t = Term::compound(
            "do",
            vec![
                Term::compound("move", vec![Term::atom("p1"), Term::atom("D")]),
                Term::atom("s0"),
            ],
        );
        assert_eq!(t.to_string(), "do(move(p1,'D'),s0)");
    }

    #[test]
    fn vars_collected_in_first_occurrence_order() {
        let t = Term::compound(
            "f",
            vec![Term::var("X"), Term::var("_"), Term::var("Y"), Term::var("X")],
        );
        let mut vars = Vec::new();
        t.collect_vars(&mut vars);
        assert_eq!(vars, vec!["X".to_string(), "Y".to_string()]);
    }
}
