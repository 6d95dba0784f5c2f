//! Substitutions and first-order unification with the occurs check.
//!
//! A substitution is kept in solved form: every stored binding is fully
//! resolved against the rest of the map, so applying it once is the same as
//! applying it twice. New bindings are rejected when the variable occurs in
//! its own (resolved) value, which rules out cyclic terms.

use std::collections::BTreeMap;

use crate::term::Term;

/// An idempotent map from variable names to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<String, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.bindings.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Term)> {
        self.bindings.iter()
    }

    /// Replaces every bound variable in `term`. One pass suffices because
    /// stored bindings never mention other bound variables.
    pub fn apply(&self, term: &Term) -> Term {
        if self.bindings.is_empty() {
            return term.clone();
        }
        match term {
            Term::Var(name) => match self.bindings.get(name) {
                Some(value) => value.clone(),
                None => term.clone(),
            },
            Term::Compound(functor, args) => {
                Term::Compound(functor.clone(), args.iter().map(|a| self.apply(a)).collect())
            }
            Term::List(items) => Term::List(items.iter().map(|a| self.apply(a)).collect()),
            Term::Atom(_) | Term::Int(_) => term.clone(),
        }
    }

    /// Binds `var` to `value` (already resolved). Fails on occurs-check
    /// violation. Existing binding values are rewritten so the map stays in
    /// solved form.
    fn bind(&mut self, var: &str, value: Term) -> bool {
        if occurs(var, &value) {
            return false;
        }
        for existing in self.bindings.values_mut() {
            *existing = replace_var(existing, var, &value);
        }
        self.bindings.insert(var.to_string(), value);
        true
    }

    /// Keeps only the named variables, dropping anything unbound or internal.
    pub fn project(&self, vars: &[String]) -> Substitution {
        let mut out = Substitution::new();
        for var in vars {
            if let Some(value) = self.bindings.get(var) {
                out.bindings.insert(var.clone(), value.clone());
            }
        }
        out
    }
}

fn occurs(var: &str, term: &Term) -> bool {
    match term {
        Term::Var(name) => name == var,
        Term::Compound(_, args) | Term::List(args) => args.iter().any(|a| occurs(var, a)),
        Term::Atom(_) | Term::Int(_) => false,
    }
}

fn replace_var(term: &Term, var: &str, value: &Term) -> Term {
    match term {
        Term::Var(name) if name == var => value.clone(),
        Term::Compound(functor, args) => {
            Term::Compound(functor.clone(), args.iter().map(|a| replace_var(a, var, value)).collect())
        }
        Term::List(items) => Term::List(items.iter().map(|a| replace_var(a, var, value)).collect()),
        _ => term.clone(),
    }
}

/// Unifies `a` and `b` under `subst`, returning the extended substitution on
/// success. Failure is a value, not an error. The anonymous variable `_`
/// matches anything without binding.
pub fn unify(a: &Term, b: &Term, subst: &Substitution) -> Option<Substitution> {
    let mut out = subst.clone();
    if unify_into(a, b, &mut out) {
        Some(out)
    } else {
        None
    }
}

fn unify_into(a: &Term, b: &Term, subst: &mut Substitution) -> bool {
    let a = subst.apply(a);
    let b = subst.apply(b);
    match (&a, &b) {
        (Term::Var(x), _) if x == "_" => true,
        (_, Term::Var(y)) if y == "_" => true,
        (Term::Var(x), Term::Var(y)) if x == y => true,
        (Term::Var(x), other) | (other, Term::Var(x)) => subst.bind(x, other.clone()),
        (Term::Atom(p), Term::Atom(q)) => p == q,
        (Term::Int(m), Term::Int(n)) => m == n,
        (Term::Compound(f, xs), Term::Compound(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify_into(x, y, subst))
        }
        (Term::List(xs), Term::List(ys)) => {
            xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| unify_into(x, y, subst))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    fn f(args: Vec<Term>) -> Term {
        Term::compound("f", args)
    }

    #[test]
    fn textbook_mgu() {
        // f(X, a) with f(b, Y) gives {X -> b, Y -> a}
        let left = f(vec![Term::var("X"), Term::atom("a")]);
        let right = f(vec![Term::atom("b"), Term::var("Y")]);
        let s = unify(&left, &right, &Substitution::new()).unwrap();
        assert_eq!(s.get("X"), Some(&Term::atom("b")));
        assert_eq!(s.get("Y"), Some(&Term::atom("a")));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn identity_var_is_empty_extension() {
        let s = unify(&Term::var("X"), &Term::var("X"), &Substitution::new()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn functor_clash_fails() {
        let left = f(vec![Term::var("X")]);
        let right = Term::compound("g", vec![Term::var("X")]);
        assert!(unify(&left, &right, &Substitution::new()).is_none());
    }

    #[test]
    fn occurs_check_rejects_cycles() {
        let left = Term::var("X");
        let right = f(vec![Term::var("X")]);
        assert!(unify(&left, &right, &Substitution::new()).is_none());
    }

    #[test]
    fn anonymous_binds_nothing() {
        let s = unify(&Term::var("_"), &Term::atom("a"), &Substitution::new()).unwrap();
        assert!(s.is_empty());
        let t = f(vec![Term::var("_"), Term::var("_")]);
        let u = f(vec![Term::atom("a"), Term::atom("b")]);
        assert!(unify(&t, &u, &Substitution::new()).is_some());
    }

    #[test]
    fn repeated_head_variable() {
        // game(F, F) against game(s0, G) binds both to s0.
        let head = Term::compound("game", vec![Term::var("F"), Term::var("F")]);
        let call = Term::compound("game", vec![Term::atom("s0"), Term::var("G")]);
        let s = unify(&call, &head, &Substitution::new()).unwrap();
        assert_eq!(s.apply(&Term::var("G")), Term::atom("s0"));
    }
}
