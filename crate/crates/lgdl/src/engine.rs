//! The resolution engine: depth-first, leftmost-goal, clauses tried in
//! source order, solutions streamed lazily in discovery order.
//!
//! Negation is negation as failure over sufficiently instantiated goals: a
//! negated goal may keep unbound variables only if their names start with
//! `_` (they are read existentially, matching the usual don't-care
//! convention); any other unbound variable raises `instantiation_error`.
//! Calling a predicate with no clauses raises `existence_error` naming the
//! exact functor/arity — this is the signal runtime validation listens for.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::EngineError;
use crate::parse::term_to_goal;
use crate::program::{Builtin, Goal, Program};
use crate::term::Term;
use crate::unify::{unify, Substitution};

/// Resource bounds for one solve call.
#[derive(Debug, Clone, Copy)]
pub struct SolveLimits {
    /// Maximum derivation depth; guards against generated loops.
    pub max_depth: usize,
    /// Stop after this many solutions; `None` means unlimited.
    pub max_solutions: Option<usize>,
}

impl Default for SolveLimits {
    fn default() -> SolveLimits {
        SolveLimits { max_depth: 10_000, max_solutions: None }
    }
}

#[derive(Debug)]
struct Frame {
    desc: String,
    parent: Option<Arc<Frame>>,
}

fn trace_of(frame: &Option<Arc<Frame>>) -> Vec<String> {
    let mut out = Vec::new();
    let mut cursor = frame.as_ref();
    while let Some(f) = cursor {
        out.push(f.desc.clone());
        if out.len() >= 8 {
            break;
        }
        cursor = f.parent.as_ref();
    }
    out
}

struct Branch {
    /// Remaining goals, next goal last.
    goals: Vec<Goal>,
    subst: Substitution,
    depth: usize,
    frame: Option<Arc<Frame>>,
}

/// A lazy stream of solutions. Each item is either a substitution for the
/// query's variables or the error that terminated the search.
pub struct Solutions<'a> {
    program: &'a Program,
    rng: &'a mut dyn RngCore,
    limits: SolveLimits,
    stack: Vec<Branch>,
    query_vars: Vec<String>,
    emitted: usize,
    fresh: u64,
    finished: bool,
}

/// Starts a solve over `query` against `program`. The random source is
/// injected per call so that `rand_member/2` is deterministic under a seed.
pub fn solve<'a>(
    program: &'a Program,
    query: &[Goal],
    limits: SolveLimits,
    rng: &'a mut dyn RngCore,
) -> Solutions<'a> {
    let mut query_vars = Vec::new();
    for goal in query {
        goal.collect_vars(&mut query_vars);
    }
    let mut goals: Vec<Goal> = query.to_vec();
    goals.reverse();
    Solutions {
        program,
        rng,
        limits,
        stack: vec![Branch { goals, subst: Substitution::new(), depth: 0, frame: None }],
        query_vars,
        emitted: 0,
        fresh: 0,
        finished: false,
    }
}

/// Runs a query to completion, collecting every solution.
pub fn solve_all(
    program: &Program,
    query: &[Goal],
    limits: SolveLimits,
    rng: &mut dyn RngCore,
) -> Result<Vec<Substitution>, EngineError> {
    let mut out = Vec::new();
    for item in solve(program, query, limits, rng) {
        out.push(item?);
    }
    Ok(out)
}

/// Runs a query until the first solution.
pub fn solve_first(
    program: &Program,
    query: &[Goal],
    limits: SolveLimits,
    rng: &mut dyn RngCore,
) -> Result<Option<Substitution>, EngineError> {
    let limits = SolveLimits { max_solutions: Some(1), ..limits };
    let mut stream = solve(program, query, limits, rng);
    match stream.next() {
        Some(Ok(subst)) => Ok(Some(subst)),
        Some(Err(error)) => Err(error),
        None => Ok(None),
    }
}

impl Iterator for Solutions<'_> {
    type Item = Result<Substitution, EngineError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        while let Some(branch) = self.stack.pop() {
            let Branch { mut goals, subst, depth, frame } = branch;
            let Some(goal) = goals.pop() else {
                self.emitted += 1;
                if let Some(max) = self.limits.max_solutions {
                    if self.emitted >= max {
                        self.finished = true;
                    }
                }
                return Some(Ok(subst.project(&self.query_vars)));
            };
            if depth >= self.limits.max_depth {
                self.finished = true;
                return Some(Err(EngineError::depth_limit(self.limits.max_depth, trace_of(&frame))));
            }
            if let Err(error) = self.step(goal, goals, subst, depth, frame) {
                self.finished = true;
                return Some(Err(error));
            }
        }
        self.finished = true;
        None
    }
}

impl<'a> Solutions<'a> {
    fn step(
        &mut self,
        goal: Goal,
        rest: Vec<Goal>,
        subst: Substitution,
        depth: usize,
        frame: Option<Arc<Frame>>,
    ) -> Result<(), EngineError> {
        match goal {
            Goal::Call(term) => self.step_call(term, rest, subst, depth, frame),
            Goal::Not(inner) => self.step_not(*inner, rest, subst, depth, frame),
            Goal::Compare(op, left, right) => {
                let left = subst.apply(&left);
                let right = subst.apply(&right);
                match (&left, &right) {
                    (Term::Int(a), Term::Int(b)) => {
                        if op.eval(*a, *b) {
                            self.stack.push(Branch { goals: rest, subst, depth: depth + 1, frame });
                        }
                        Ok(())
                    }
                    _ => Err(EngineError::instantiation(
                        format!("comparison {left} {} {right} requires integer operands", op.symbol()),
                        trace_of(&frame),
                    )),
                }
            }
            Goal::Builtin(builtin, args) => self.step_builtin(builtin, args, rest, subst, depth, frame),
        }
    }

    fn step_call(
        &mut self,
        term: Term,
        rest: Vec<Goal>,
        subst: Substitution,
        depth: usize,
        frame: Option<Arc<Frame>>,
    ) -> Result<(), EngineError> {
        let call = subst.apply(&term);
        let pred = match call.predicate_key() {
            Some(pred) => pred,
            None => {
                let trace = trace_of(&frame);
                return Err(match call {
                    Term::Var(name) => EngineError::instantiation(
                        format!("call target is the unbound variable {name}"),
                        trace,
                    ),
                    other => EngineError::type_error(format!("cannot call {other}"), trace),
                });
            }
        };
        if !self.program.defines(&pred) {
            let mut trace = vec![call.to_string()];
            trace.extend(trace_of(&frame));
            return Err(EngineError::existence(pred.name.clone(), pred.arity, trace));
        }
        let new_frame = Some(Arc::new(Frame { desc: call.to_string(), parent: frame }));
        let clauses: Vec<_> = self.program.clauses_for(&pred).into_iter().cloned().collect();
        for clause in clauses.iter().rev() {
            let renamed = self.rename_clause(clause);
            if let Some(extended) = unify(&call, &renamed.head, &subst) {
                let mut goals = rest.clone();
                goals.extend(renamed.body.into_iter().rev());
                self.stack.push(Branch {
                    goals,
                    subst: extended,
                    depth: depth + 1,
                    frame: new_frame.clone(),
                });
            }
        }
        Ok(())
    }

    fn step_not(
        &mut self,
        inner: Goal,
        rest: Vec<Goal>,
        subst: Substitution,
        depth: usize,
        frame: Option<Arc<Frame>>,
    ) -> Result<(), EngineError> {
        let instantiated = inner.apply(&subst);
        if let Some(bad) = instantiated.free_vars().iter().find(|v| !v.starts_with('_')) {
            return Err(EngineError::instantiation(
                format!("negated goal not sufficiently instantiated: {bad} in `not {instantiated}`"),
                trace_of(&frame),
            ));
        }
        let provable = self.sub_solve_any(instantiated, depth)?;
        if !provable {
            self.stack.push(Branch { goals: rest, subst, depth: depth + 1, frame });
        }
        Ok(())
    }

    fn step_builtin(
        &mut self,
        builtin: Builtin,
        args: Vec<Term>,
        rest: Vec<Goal>,
        subst: Substitution,
        depth: usize,
        frame: Option<Arc<Frame>>,
    ) -> Result<(), EngineError> {
        match builtin {
            Builtin::Ground => {
                let term = subst.apply(&args[0]);
                if term.is_ground() {
                    self.stack.push(Branch { goals: rest, subst, depth: depth + 1, frame });
                }
                Ok(())
            }
            Builtin::Member => {
                let list = subst.apply(&args[1]);
                let items = match list {
                    Term::List(items) => items,
                    Term::Var(name) => {
                        return Err(EngineError::instantiation(
                            format!("member/2 requires a list, got unbound {name}"),
                            trace_of(&frame),
                        ))
                    }
                    other => {
                        return Err(EngineError::type_error(
                            format!("member/2 requires a list, got {other}"),
                            trace_of(&frame),
                        ))
                    }
                };
                for item in items.iter().rev() {
                    if let Some(extended) = unify(&args[0], item, &subst) {
                        self.stack.push(Branch {
                            goals: rest.clone(),
                            subst: extended,
                            depth: depth + 1,
                            frame: frame.clone(),
                        });
                    }
                }
                Ok(())
            }
            Builtin::Findall => {
                let template = subst.apply(&args[0]);
                let goal_term = subst.apply(&args[1]);
                let goal = term_to_goal(&goal_term).map_err(|msg| {
                    let trace = trace_of(&frame);
                    match goal_term {
                        Term::Var(_) => EngineError::instantiation(format!("findall/3: {msg}"), trace),
                        _ => EngineError::type_error(format!("findall/3: {msg}"), trace),
                    }
                })?;
                let collected = self.sub_solve_collect(goal, &template, depth)?;
                if let Some(extended) = unify(&args[2], &Term::List(collected), &subst) {
                    self.stack.push(Branch { goals: rest, subst: extended, depth: depth + 1, frame });
                }
                Ok(())
            }
            Builtin::RandMember => {
                let list = subst.apply(&args[1]);
                match &list {
                    Term::List(items) if list.is_ground() => {
                        if items.is_empty() {
                            return Ok(());
                        }
                        let index = self.rng.random_range(0..items.len());
                        if let Some(extended) = unify(&args[0], &items[index], &subst) {
                            self.stack.push(Branch { goals: rest, subst: extended, depth: depth + 1, frame });
                        }
                        Ok(())
                    }
                    Term::List(_) | Term::Var(_) => Err(EngineError::instantiation(
                        format!("rand_member/2 requires a ground list, got {list}"),
                        trace_of(&frame),
                    )),
                    _ => Err(EngineError::type_error(
                        format!("rand_member/2 requires a list, got {list}"),
                        trace_of(&frame),
                    )),
                }
            }
        }
    }

    /// Proves `goal` in a nested search, reporting only whether a solution
    /// exists. Errors inside the nested search propagate.
    fn sub_solve_any(&mut self, goal: Goal, depth: usize) -> Result<bool, EngineError> {
        let limits = SolveLimits {
            max_depth: self.limits.max_depth - depth,
            max_solutions: Some(1),
        };
        let mut sub = Solutions {
            program: self.program,
            rng: &mut *self.rng,
            limits,
            stack: vec![Branch { goals: vec![goal], subst: Substitution::new(), depth: 0, frame: None }],
            query_vars: Vec::new(),
            emitted: 0,
            fresh: self.fresh,
            finished: false,
        };
        let found = match sub.next() {
            Some(Ok(_)) => true,
            Some(Err(error)) => return Err(error),
            None => false,
        };
        self.fresh = sub.fresh;
        Ok(found)
    }

    /// Collects `template` instances over every solution of `goal`.
    fn sub_solve_collect(&mut self, goal: Goal, template: &Term, depth: usize) -> Result<Vec<Term>, EngineError> {
        let limits = SolveLimits {
            max_depth: self.limits.max_depth - depth,
            max_solutions: None,
        };
        let mut query_vars = Vec::new();
        goal.collect_vars(&mut query_vars);
        let mut sub = Solutions {
            program: self.program,
            rng: &mut *self.rng,
            limits,
            stack: vec![Branch { goals: vec![goal], subst: Substitution::new(), depth: 0, frame: None }],
            query_vars,
            emitted: 0,
            fresh: self.fresh,
            finished: false,
        };
        let mut collected = Vec::new();
        for item in &mut sub {
            collected.push(item?.apply(template));
        }
        self.fresh = sub.fresh;
        Ok(collected)
    }

    /// Renames clause variables apart with a per-instance suffix. `#` cannot
    /// appear in source identifiers, so renamed variables never collide with
    /// source variables; the original name is kept as a prefix so that
    /// don't-care variables stay recognizable to the negation check.
    fn rename_clause(&mut self, clause: &crate::program::Clause) -> crate::program::Clause {
        self.fresh += 1;
        let suffix = self.fresh;
        let mut renamed = clause.clone();
        renamed.head = rename_term(&renamed.head, suffix);
        renamed.body = renamed.body.iter().map(|g| rename_goal(g, suffix)).collect();
        renamed
    }
}

fn rename_term(term: &Term, suffix: u64) -> Term {
    match term {
        Term::Var(name) if name != "_" => Term::Var(format!("{name}#{suffix}")),
        Term::Compound(functor, args) => {
            Term::Compound(functor.clone(), args.iter().map(|a| rename_term(a, suffix)).collect())
        }
        Term::List(items) => Term::List(items.iter().map(|a| rename_term(a, suffix)).collect()),
        _ => term.clone(),
    }
}

fn rename_goal(goal: &Goal, suffix: u64) -> Goal {
    match goal {
        Goal::Call(t) => Goal::Call(rename_term(t, suffix)),
        Goal::Not(g) => Goal::Not(Box::new(rename_goal(g, suffix))),
        Goal::Compare(op, l, r) => Goal::Compare(*op, rename_term(l, suffix), rename_term(r, suffix)),
        Goal::Builtin(b, args) => Goal::Builtin(*b, args.iter().map(|a| rename_term(a, suffix)).collect()),
    }
}
