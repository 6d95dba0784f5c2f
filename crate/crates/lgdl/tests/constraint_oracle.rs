//! Oracle equivalence for the constraint validator: exhaustive agreement
//! with a direct brute-force ordering check on all 1296 symmetric matrices
//! over {0..5}^4 (for each symmetric game type), seeded random asymmetric
//! matrices for the coordination and matching games, and agreement with the
//! solver-language payoff-validity clause for the dilemma.

mod common;

use common::{
    brute_force_asymmetric, brute_force_symmetric, AsymmetricMatrix, SymmetricMatrix, VALID_PD_PAYOFFS_SRC,
};
use lgdl::engine::{solve_first, SolveLimits};
use lgdl::games::GameId;
use lgdl::parse::{parse_goals, parse_program};
use lgdl::validate::validate_constraints;
use rand::Rng;

fn all_symmetric_matrices() -> impl Iterator<Item = SymmetricMatrix> {
    (0..6i64).flat_map(move |a| {
        (0..6i64).flat_map(move |b| {
            (0..6i64).flat_map(move |c| (0..6i64).map(move |d| SymmetricMatrix { a, b, c, d }))
        })
    })
}

#[test]
fn symmetric_constraints_agree_with_brute_force_on_all_1296() {
    for game in [GameId::Pd, GameId::Hd, GameId::Sh] {
        let mut satisfied = 0usize;
        for matrix in all_symmetric_matrices() {
            let source = matrix.to_source();
            let report = validate_constraints(&source, game).expect("well-formed matrix extracts");
            let expected = brute_force_symmetric(game, matrix);
            assert_eq!(report.satisfied, expected, "{game}: disagreement on {matrix:?}");
            if expected {
                satisfied += 1;
            }
        }
        assert!(satisfied > 0, "{game}: the ordering is satisfiable in {{0..5}}^4");
    }
}

#[test]
fn pd_constraint_reproduces_the_solver_language_truth_table() {
    for matrix in all_symmetric_matrices() {
        let source = format!("{}{}", matrix.to_source(), VALID_PD_PAYOFFS_SRC);
        let program = parse_program(&source).expect("matrix + validity clause parses");
        let query = parse_goals("valid_pd_payoffs(T, R, P, S, C, D)").unwrap();
        let mut rng = lgdl::rng_from_seed(0);
        let provable = solve_first(&program, &query, SolveLimits::default(), &mut rng)
            .expect("validity query is safe")
            .is_some();
        let report = validate_constraints(&matrix.to_source(), GameId::Pd).unwrap();
        assert_eq!(report.satisfied, provable, "solver-language disagreement on {matrix:?}");
    }
}

#[test]
fn asymmetric_constraints_agree_with_brute_force_on_seeded_random_matrices() {
    let mut rng = lgdl::rng_from_seed(1337);
    let mut bos_hits = 0usize;
    let mut mp_hits = 0usize;
    for _ in 0..10_000 {
        let mut cells = [[(0i64, 0i64); 2]; 2];
        for row in &mut cells {
            for cell in row.iter_mut() {
                *cell = (rng.random_range(-5..=5), rng.random_range(-5..=5));
            }
        }
        let matrix = AsymmetricMatrix { cells };
        let source = matrix.to_source();
        for game in [GameId::Bos, GameId::Mp] {
            let report = validate_constraints(&source, game).expect("well-formed matrix extracts");
            let expected = brute_force_asymmetric(game, matrix);
            assert_eq!(report.satisfied, expected, "{game}: disagreement on {matrix:?}");
            if expected {
                match game {
                    GameId::Bos => bos_hits += 1,
                    GameId::Mp => mp_hits += 1,
                    _ => {}
                }
            }
        }
    }
    // The draw range must actually exercise both branches.
    assert!(bos_hits > 0, "no coordination matrix sampled");
    assert!(mp_hits > 0, "no matching matrix sampled");
}
