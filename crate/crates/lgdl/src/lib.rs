//! A light game-description logic language (LGDL) and the machinery around
//! it: a resolution engine, a situation-calculus game layer for 2x2
//! simultaneous-move games, canonical games and strategies, a three-level
//! validation pipeline, tournament simulation, and an LLM-backed
//! formalization loop with bounded self-correction.
//!
//! The narrative guide lives in the `book/` directory of the repository;
//! its code snippets are compiled as doc-tests.
//!
//! # Quick start
//!
//! ```
//! use lgdl::games::{canonical_game, strategy_source, GameId, StrategyId};
//! use lgdl::solver::{AgentSession, Role};
//! use rand::SeedableRng;
//!
//! let game = canonical_game(GameId::Pd);
//! let strategy = strategy_source(StrategyId::TitForTat);
//! let mut session = AgentSession::new(game.source, strategy.source, "p1", "p2", Role::Row)
//!     .expect("canonical sources load");
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
//! let opening = session.select_move(&mut rng).unwrap();
//! assert_eq!(opening.to_string(), "'C'");
//! ```

pub mod autoformalize;
pub mod backend;
pub mod engine;
pub mod error;
pub mod games;
pub mod parse;
pub mod program;
pub mod solver;
pub mod term;
pub mod tournament;
pub mod unify;
pub mod validate;

/// A deterministic random source from a 64-bit seed, used everywhere a
/// component needs reproducible draws.
pub fn rng_from_seed(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub use engine::{solve, solve_all, solve_first, SolveLimits, Solutions};
pub use error::{EngineError, ErrorKind, SourceSpan};
pub use parse::{parse_goals, parse_program, parse_term};
pub use program::{Builtin, Clause, CmpOp, Goal, Program};
pub use term::{PredId, Term};
pub use unify::{unify, Substitution};
