//! Property tests for the logic core, checked against independent oracles.
//!
//! The centerpiece is solution-set equivalence between the engine's
//! top-down resolution and a naive bottom-up fixpoint evaluator over
//! randomly generated, stratified Datalog-like programs (the stratification
//! keeps top-down derivations finite, matching the terminating-query
//! premise of the properties).

use std::collections::BTreeSet;

use proptest::prelude::*;

use lgdl::engine::{solve_all, SolveLimits};
use lgdl::parse::{parse_goals, parse_program};
use lgdl::program::{Clause, Goal, Program};
use lgdl::term::Term;
use lgdl::unify::{unify, Substitution};

// ---------------------------------------------------------------------------
// Term generator (depth <= 4) for unification properties.

// The anonymous `_` is excluded: it matches without binding, so unifying
// through it cannot produce syntactically identical sides. Its semantics
// are pinned by unit tests instead.
fn arb_term(depth: u32) -> BoxedStrategy<Term> {
    let leaf = prop_oneof![
        prop_oneof![Just("a"), Just("b"), Just("c"), Just("f")].prop_map(Term::atom),
        (-3i64..=3).prop_map(Term::int),
        prop_oneof![Just("X"), Just("Y"), Just("Z")].prop_map(Term::var),
    ];
    if depth == 0 {
        return leaf.boxed();
    }
    let inner = arb_term(depth - 1);
    prop_oneof![
        4 => leaf,
        2 => (prop_oneof![Just("f"), Just("g")], prop::collection::vec(inner.clone(), 1..=3))
            .prop_map(|(functor, args)| Term::compound(functor, args)),
        1 => prop::collection::vec(inner, 0..=3).prop_map(Term::List),
    ]
    .boxed()
}

proptest! {
    /// If unification succeeds, the result is a unifier: applying it to
    /// both sides yields syntactically identical terms. And unification is
    /// symmetric in success.
    #[test]
    fn mgu_property(a in arb_term(3), b in arb_term(3)) {
        let forward = unify(&a, &b, &Substitution::new());
        let backward = unify(&b, &a, &Substitution::new());
        prop_assert_eq!(forward.is_some(), backward.is_some());
        if let Some(s) = forward {
            prop_assert_eq!(s.apply(&a), s.apply(&b));
        }
    }

    /// Substitutions stay idempotent: applying twice equals applying once.
    #[test]
    fn substitution_idempotence(a in arb_term(3), b in arb_term(3), probe in arb_term(3)) {
        if let Some(s) = unify(&a, &b, &Substitution::new()) {
            let once = s.apply(&probe);
            let twice = s.apply(&once);
            prop_assert_eq!(once, twice);
        }
    }
}

// ---------------------------------------------------------------------------
// Random stratified Datalog programs and the bottom-up oracle.

#[derive(Debug, Clone)]
struct DatalogProgram {
    clauses: Vec<Clause>,
}

const CONSTS: [&str; 3] = ["a", "b", "c"];
const VARS: [&str; 3] = ["X", "Y", "Z"];

/// Predicates by stratum: rules may only call strictly lower strata, so
/// every top-down derivation is finite.
const STRATA: [&[(&str, usize)]; 3] = [
    &[("base1", 1), ("base2", 2)],
    &[("mid1", 1), ("mid2", 2)],
    &[("top", 2)],
];

fn arb_ground_atom(name: &'static str, arity: usize) -> impl Strategy<Value = Term> {
    prop::collection::vec(prop::sample::select(CONSTS.to_vec()), arity)
        .prop_map(move |args| Term::compound(name, args.into_iter().map(Term::atom).collect()))
}

/// An argument for a rule body: a variable or a constant.
fn arb_body_arg() -> impl Strategy<Value = Term> {
    prop_oneof![
        3 => prop::sample::select(VARS.to_vec()).prop_map(Term::var),
        1 => prop::sample::select(CONSTS.to_vec()).prop_map(Term::atom),
    ]
}

fn arb_rule_for(head_name: &'static str, head_arity: usize, stratum: usize) -> impl Strategy<Value = Clause> {
    let head = Just((head_name, head_arity));
    let lower: Vec<(&str, usize)> = STRATA[..stratum].iter().flat_map(|s| s.iter().copied()).collect();
    let body = prop::collection::vec(
        (prop::sample::select(lower), prop::collection::vec(arb_body_arg(), 2)),
        1..=2,
    );
    (head, body).prop_map(|((head_name, head_arity), body)| {
        let body_goals: Vec<Goal> = body
            .into_iter()
            .map(|((name, arity), args)| Goal::Call(Term::compound(name, args[..arity].to_vec())))
            .collect();
        // Range restriction: head arguments come from body variables when
        // any exist, otherwise constants, so derived heads are ground.
        let mut body_vars = Vec::new();
        for goal in &body_goals {
            goal.collect_vars(&mut body_vars);
        }
        let head_args: Vec<Term> = (0..head_arity)
            .map(|i| {
                if body_vars.is_empty() {
                    Term::atom(CONSTS[i % CONSTS.len()])
                } else {
                    Term::var(body_vars[i % body_vars.len()].clone())
                }
            })
            .collect();
        Clause { head: Term::compound(head_name, head_args), body: body_goals, ..Clause::fact(Term::atom("x")) }
    })
}

prop_compose! {
    // Every callable predicate is defined: both base predicates get facts
    // and both mid predicates get at least one rule, so the only
    // possibly-undefined predicate is `top`, which nothing calls.
    fn arb_datalog()(
        base1 in prop::collection::btree_set(arb_ground_atom("base1", 1), 1..=3),
        base2 in prop::collection::btree_set(arb_ground_atom("base2", 2), 1..=3),
        mid1_rules in prop::collection::vec(arb_rule_for("mid1", 1, 1), 1..=2),
        mid2_rules in prop::collection::vec(arb_rule_for("mid2", 2, 1), 1..=2),
        top_rules in prop::collection::vec(arb_rule_for("top", 2, 2), 0..=2),
    ) -> DatalogProgram {
        let mut clauses: Vec<Clause> = Vec::new();
        clauses.extend(base1.into_iter().map(Clause::fact));
        clauses.extend(base2.into_iter().map(Clause::fact));
        clauses.extend(mid1_rules);
        clauses.extend(mid2_rules);
        clauses.extend(top_rules);
        DatalogProgram { clauses }
    }
}

/// Naive bottom-up fixpoint: repeatedly fire every rule against the
/// derived set until nothing new appears. Independent of the engine's
/// resolution machinery.
fn bottom_up_fixpoint(clauses: &[Clause]) -> BTreeSet<Term> {
    let mut derived: BTreeSet<Term> = clauses.iter().filter(|c| c.is_fact()).map(|c| c.head.clone()).collect();
    loop {
        let mut added = false;
        for clause in clauses.iter().filter(|c| !c.is_fact()) {
            let mut frontier = vec![Substitution::new()];
            for goal in &clause.body {
                let Goal::Call(pattern) = goal else { unreachable!("datalog bodies are calls") };
                let mut next = Vec::new();
                for subst in &frontier {
                    for fact in &derived {
                        if let Some(extended) = unify(pattern, fact, subst) {
                            next.push(extended);
                        }
                    }
                }
                frontier = next;
            }
            for subst in frontier {
                let head = subst.apply(&clause.head);
                if head.is_ground() && !derived.contains(&head) {
                    derived.insert(head);
                    added = true;
                }
            }
        }
        if !added {
            return derived;
        }
    }
}

/// All ground instances of `name/arity` the engine can prove.
fn engine_solutions(program: &Program, name: &str, arity: usize) -> BTreeSet<Term> {
    let query_term = Term::compound(name, (0..arity).map(|i| Term::var(format!("Q{i}"))).collect());
    let query = vec![Goal::Call(query_term.clone())];
    let mut rng = lgdl::rng_from_seed(0);
    let solutions = solve_all(program, &query, SolveLimits::default(), &mut rng).expect("stratified programs terminate");
    solutions.iter().map(|s| s.apply(&query_term)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Top-down resolution derives exactly the bottom-up fixpoint.
    #[test]
    fn resolution_matches_bottom_up_oracle(datalog in arb_datalog()) {
        let program = Program::from_clauses(datalog.clauses.clone());
        let oracle = bottom_up_fixpoint(&datalog.clauses);
        for (name, arity) in STRATA.iter().flat_map(|s| s.iter().copied()) {
            if !program.defines(&lgdl::PredId::new(name, arity)) {
                continue;
            }
            let engine: BTreeSet<Term> = engine_solutions(&program, name, arity);
            let expected: BTreeSet<Term> = oracle
                .iter()
                .filter(|t| t.predicate_key() == Some(lgdl::PredId::new(name, arity)))
                .cloned()
                .collect();
            prop_assert_eq!(engine, expected, "predicate {}/{}", name, arity);
        }
    }

    /// Permuting the clauses of one predicate permutes solution order but
    /// not the solution set.
    #[test]
    fn clause_order_affects_order_not_set(datalog in arb_datalog()) {
        let program = Program::from_clauses(datalog.clauses.clone());
        // Reverse all clause groups wholesale: same per-predicate clauses,
        // different order.
        let mut reversed_clauses = datalog.clauses.clone();
        reversed_clauses.reverse();
        let reversed = Program::from_clauses(reversed_clauses);
        for (name, arity) in STRATA.iter().flat_map(|s| s.iter().copied()) {
            if !program.defines(&lgdl::PredId::new(name, arity)) {
                continue;
            }
            prop_assert_eq!(
                engine_solutions(&program, name, arity),
                engine_solutions(&reversed, name, arity)
            );
        }
    }

    /// Negation as failure on ground goals: `not G` succeeds exactly when
    /// G has no solutions.
    #[test]
    fn negation_soundness(datalog in arb_datalog(), probe in arb_ground_atom("mid2", 2)) {
        let program = Program::from_clauses(datalog.clauses.clone());
        if !program.defines(&lgdl::PredId::new("mid2", 2)) {
            return Ok(());
        }
        let mut rng = lgdl::rng_from_seed(0);
        let positive = solve_all(&program, &[Goal::Call(probe.clone())], SolveLimits::default(), &mut rng)
            .expect("ground query terminates");
        let mut rng = lgdl::rng_from_seed(0);
        let negative = solve_all(
            &program,
            &[Goal::Not(Box::new(Goal::Call(probe)))],
            SolveLimits::default(),
            &mut rng,
        )
        .expect("ground negation is safe");
        prop_assert_eq!(negative.len() == 1, positive.is_empty());
    }
}

// ---------------------------------------------------------------------------
// Parse/print round trip over the shipped corpus.

fn structurally_equal(a: &Program, b: &Program) -> bool {
    a.clauses().len() == b.clauses().len()
        && a.clauses()
            .iter()
            .zip(b.clauses())
            .all(|(x, y)| x.head == y.head && x.body == y.body)
}

#[test]
fn shipped_corpus_round_trips_through_print() {
    let mut sources: Vec<String> = vec![lgdl::solver::PRELUDE_SRC.to_string()];
    for id in lgdl::games::GameId::ALL {
        sources.push(lgdl::games::canonical_game(id).source.to_string());
    }
    for id in lgdl::games::StrategyId::ALL {
        sources.push(lgdl::games::strategy_source(id).source.to_string());
    }
    for source in sources {
        let parsed = parse_program(&source).expect("shipped source parses");
        let printed = parsed.to_string();
        let reparsed = parse_program(&printed)
            .unwrap_or_else(|e| panic!("printed form fails to parse: {e:?}\n{printed}"));
        assert!(structurally_equal(&parsed, &reparsed), "round trip changed structure:\n{printed}");
    }
}

#[test]
fn quoted_atoms_round_trip_byte_identically() {
    for text in ["'C'", "'D'", "'it\\'s'", "'A B'", "'x\\\\y'"] {
        let term = lgdl::parse_term(text).expect("term parses");
        assert_eq!(term.to_string(), text);
    }
}

/// The two meta-levels agree: a query via text and via constructed goals.
#[test]
fn parsed_and_constructed_queries_agree() {
    let program = parse_program("p(a).\np(b).").unwrap();
    let parsed = parse_goals("p(X)").unwrap();
    let constructed = vec![Goal::Call(Term::compound("p", vec![Term::var("X")]))];
    let mut rng = lgdl::rng_from_seed(0);
    let a = solve_all(&program, &parsed, SolveLimits::default(), &mut rng).unwrap();
    let mut rng = lgdl::rng_from_seed(0);
    let b = solve_all(&program, &constructed, SolveLimits::default(), &mut rng).unwrap();
    assert_eq!(a, b);
}
