//! The situation-calculus game layer: the game-independent prelude,
//! per-agent sessions, legal-move queries, strategy invocation, and outcome
//! resolution.
//!
//! A session owns one merged program (prelude + game + strategy) and replays
//! every query from the initial situation; match history reaches the logic
//! side as host-managed `initially(last_move(Player, Move), s0)` facts that
//! are replaced after each round. Outcomes are resolved for one fixed player
//! order, row first, since both orders derive the same record.

use std::fmt;
use std::sync::OnceLock;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::engine::{solve_all, solve_first, SolveLimits};
use crate::error::{EngineError, SourceSpan};
use crate::parse::parse_program;
use crate::program::{Clause, Goal, Program};
use crate::term::{PredId, Term};

/// The game-independent clauses, shipped verbatim as `prelude.lgdl`.
pub const PRELUDE_SRC: &str = include_str!("../prelude.lgdl");

static PRELUDE: OnceLock<Program> = OnceLock::new();

/// The parsed game-independent program.
pub fn prelude() -> Program {
    PRELUDE
        .get_or_init(|| parse_program(PRELUDE_SRC).expect("the shipped prelude parses"))
        .clone()
}

/// Which seat an agent occupies in the payoff table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Row,
    Col,
}

/// A situation term: the initial constant or a stack of moves on top of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Situation {
    Initial(String),
    Do { player: String, action: Term, inner: Box<Situation> },
}

impl Situation {
    pub fn initial(name: impl Into<String>) -> Situation {
        Situation::Initial(name.into())
    }

    /// The situation after `player` makes `action` here.
    pub fn then(self, player: impl Into<String>, action: Term) -> Situation {
        Situation::Do { player: player.into(), action, inner: Box::new(self) }
    }

    /// Number of moves stacked on the initial situation.
    pub fn depth(&self) -> usize {
        match self {
            Situation::Initial(_) => 0,
            Situation::Do { inner, .. } => 1 + inner.depth(),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Situation::Initial(name) => Term::Atom(name.clone()),
            Situation::Do { player, action, inner } => Term::Compound(
                "do".to_string(),
                vec![
                    Term::Compound("move".to_string(), vec![Term::Atom(player.clone()), action.clone()]),
                    inner.to_term(),
                ],
            ),
        }
    }

    pub fn from_term(term: &Term) -> Option<Situation> {
        match term {
            Term::Atom(name) => Some(Situation::Initial(name.clone())),
            Term::Compound(functor, args) if functor == "do" && args.len() == 2 => {
                let (player, action) = match &args[0] {
                    Term::Compound(m, margs) if m == "move" && margs.len() == 2 => match &margs[0] {
                        Term::Atom(player) => (player.clone(), margs[1].clone()),
                        _ => return None,
                    },
                    _ => return None,
                };
                let inner = Situation::from_term(&args[1])?;
                Some(Situation::Do { player, action, inner: Box::new(inner) })
            }
            _ => None,
        }
    }
}

impl fmt::Display for Situation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// One resolved round result: players, their moves, and their payoffs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub p1: String,
    pub m1: Term,
    pub u1: i64,
    pub p2: String,
    pub m2: Term,
    pub u2: i64,
}

/// Errors raised while constructing sessions or playing rounds.
#[derive(Debug, Clone, PartialEq)]
pub enum PlayError {
    /// One of the source modules failed to parse.
    Parse { module: String, errors: Vec<EngineError> },
    /// The engine raised while solving.
    Engine(EngineError),
    /// select/4 produced no move.
    StrategyFailure { player: String },
    /// No outcome record could be derived for a final situation.
    NoOutcome { situation: String },
    /// More than one distinct outcome record was derived.
    AmbiguousOutcome { situation: String, count: usize },
    /// An outcome record was derived but is not well formed.
    MalformedOutcome { detail: String },
}

impl PlayError {
    /// The failure family used by validation reports.
    pub fn failure_label(&self) -> &'static str {
        match self {
            PlayError::Parse { .. } => "parse_error",
            PlayError::Engine(_) => "engine_error",
            PlayError::StrategyFailure { .. } => "strategy_failure",
            PlayError::NoOutcome { .. } | PlayError::AmbiguousOutcome { .. } | PlayError::MalformedOutcome { .. } => {
                "runtime_semantic_error"
            }
        }
    }
}

impl fmt::Display for PlayError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayError::Parse { module, errors } => {
                write!(f, "{module} source failed to parse:")?;
                for e in errors {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
            PlayError::Engine(e) => write!(f, "{e}"),
            PlayError::StrategyFailure { player } => {
                write!(f, "strategy_failure: select/4 produced no move for {player}")
            }
            PlayError::NoOutcome { situation } => {
                write!(f, "runtime_semantic_error: no outcome record holds in {situation}")
            }
            PlayError::AmbiguousOutcome { situation, count } => {
                write!(f, "runtime_semantic_error: {count} distinct outcome records hold in {situation}")
            }
            PlayError::MalformedOutcome { detail } => {
                write!(f, "runtime_semantic_error: malformed outcome record: {detail}")
            }
        }
    }
}

impl std::error::Error for PlayError {}

impl From<EngineError> for PlayError {
    fn from(e: EngineError) -> PlayError {
        PlayError::Engine(e)
    }
}

/// What one agent remembers about a round it played.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub my_move: Term,
    pub opp_move: Term,
    pub my_payoff: i64,
}

/// One agent's loaded game and strategy plus its session fluents.
#[derive(Debug, Clone)]
pub struct AgentSession {
    program: Program,
    self_id: String,
    opp_id: String,
    role: Role,
    initial: String,
    round_index: usize,
    history: Vec<HistoryEntry>,
}

fn parse_module(src: &str, module: &str) -> Result<Program, PlayError> {
    parse_program(src).map_err(|errors| PlayError::Parse { module: module.to_string(), errors })
}

impl AgentSession {
    /// Builds a session from game and strategy sources. Both are parsed up
    /// front; a missing select/4 is only detected when a move is requested.
    pub fn new(
        game_src: &str,
        strategy_src: &str,
        self_id: impl Into<String>,
        opp_id: impl Into<String>,
        role: Role,
    ) -> Result<AgentSession, PlayError> {
        let game = parse_module(game_src, "game")?;
        let strategy = parse_module(strategy_src, "strategy")?;
        let mut program = prelude();
        program.merge(&game);
        program.merge(&strategy);
        let initial = initial_constant(&program);
        Ok(AgentSession {
            program,
            self_id: self_id.into(),
            opp_id: opp_id.into(),
            role,
            initial,
            round_index: 0,
            history: Vec::new(),
        })
    }

    pub fn self_id(&self) -> &str {
        &self.self_id
    }

    pub fn opp_id(&self) -> &str {
        &self.opp_id
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn round_index(&self) -> usize {
        self.round_index
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn initial_situation(&self) -> Situation {
        Situation::initial(self.initial.clone())
    }

    fn limits() -> SolveLimits {
        SolveLimits::default()
    }

    /// Moves this agent may legally make from the initial situation, in
    /// clause-declaration order, duplicates removed.
    pub fn legal_moves(&self) -> Result<Vec<Term>, PlayError> {
        let query = vec![Goal::Call(Term::Compound(
            "legal".to_string(),
            vec![
                Term::Compound("move".to_string(), vec![Term::Atom(self.self_id.clone()), Term::var("M")]),
                self.initial_situation().to_term(),
            ],
        ))];
        let mut rng = crate::rng_from_seed(0);
        let solutions = solve_all(&self.program, &query, Self::limits(), &mut rng)?;
        let mut moves = Vec::new();
        for solution in solutions {
            if let Some(m) = solution.get("M") {
                if !moves.contains(m) {
                    moves.push(m.clone());
                }
            }
        }
        Ok(moves)
    }

    /// Asks the strategy for a move: the first solution of
    /// `select(Self, Opp, S0, M)`.
    pub fn select_move(&self, rng: &mut dyn RngCore) -> Result<Term, PlayError> {
        let query = vec![Goal::Call(Term::Compound(
            "select".to_string(),
            vec![
                Term::Atom(self.self_id.clone()),
                Term::Atom(self.opp_id.clone()),
                self.initial_situation().to_term(),
                Term::var("M"),
            ],
        ))];
        let solution = solve_first(&self.program, &query, Self::limits(), rng)?;
        match solution.and_then(|s| s.get("M").cloned()) {
            Some(m) if m.is_ground() => Ok(m),
            _ => Err(PlayError::StrategyFailure { player: self.self_id.clone() }),
        }
    }

    /// Resolves the unique outcome record of `situation`. Zero or multiple
    /// distinct records signal a malformed game program.
    pub fn outcome_in(&self, situation: &Term) -> Result<OutcomeRecord, PlayError> {
        let query = vec![Goal::Call(Term::Compound(
            "finally".to_string(),
            vec![
                Term::Compound(
                    "outcome".to_string(),
                    vec![
                        Term::var("P1"),
                        Term::var("M1"),
                        Term::var("U1"),
                        Term::var("P2"),
                        Term::var("M2"),
                        Term::var("U2"),
                    ],
                ),
                situation.clone(),
            ],
        ))];
        let mut rng = crate::rng_from_seed(0);
        let solutions = solve_all(&self.program, &query, Self::limits(), &mut rng)?;
        let mut records: Vec<OutcomeRecord> = Vec::new();
        for solution in &solutions {
            let record = outcome_from_bindings(solution).map_err(|detail| PlayError::MalformedOutcome { detail })?;
            if !records.contains(&record) {
                records.push(record);
            }
        }
        match records.len() {
            0 => Err(PlayError::NoOutcome { situation: situation.to_string() }),
            1 => Ok(records.pop().expect("one record")),
            n => Err(PlayError::AmbiguousOutcome { situation: situation.to_string(), count: n }),
        }
    }

    /// Builds the final situation for the fixed row-then-col move order and
    /// resolves its outcome.
    pub fn resolve_outcome(&self, m_row: &Term, m_col: &Term) -> Result<OutcomeRecord, PlayError> {
        let (row_id, col_id) = match self.role {
            Role::Row => (self.self_id.clone(), self.opp_id.clone()),
            Role::Col => (self.opp_id.clone(), self.self_id.clone()),
        };
        let situation = self
            .initial_situation()
            .then(row_id, m_row.clone())
            .then(col_id, m_col.clone());
        self.outcome_in(&situation.to_term())
    }

    /// Enumerates every final situation reachable from the initial one.
    pub fn final_situations(&self) -> Result<Vec<Term>, PlayError> {
        let query = vec![Goal::Call(Term::Compound(
            "game".to_string(),
            vec![self.initial_situation().to_term(), Term::var("F")],
        ))];
        let mut rng = crate::rng_from_seed(0);
        let solutions = solve_all(&self.program, &query, Self::limits(), &mut rng)?;
        Ok(solutions.iter().filter_map(|s| s.get("F").cloned()).collect())
    }

    /// Records a finished round: replaces the `last_move` fluents, appends
    /// to the history, and advances the round counter.
    pub fn update_history(&mut self, my_move: Term, opp_move: Term, my_payoff: i64) {
        let s0 = self.initial_situation().to_term();
        let pattern = Term::Compound(
            "initially".to_string(),
            vec![
                Term::Compound("last_move".to_string(), vec![Term::var("_"), Term::var("_")]),
                s0.clone(),
            ],
        );
        self.program.retract_matching(&pattern);
        for (player, mv) in [(self.self_id.clone(), my_move.clone()), (self.opp_id.clone(), opp_move.clone())] {
            let fact = Clause {
                head: Term::Compound(
                    "initially".to_string(),
                    vec![Term::Compound("last_move".to_string(), vec![Term::Atom(player), mv]), s0.clone()],
                ),
                body: Vec::new(),
                span: SourceSpan::synthetic(),
            };
            self.program.assert_fact(fact).expect("last_move facts have no body");
        }
        self.history.push(HistoryEntry { my_move, opp_move, my_payoff });
        self.round_index += 1;
    }
}

fn outcome_from_bindings(solution: &crate::unify::Substitution) -> Result<OutcomeRecord, String> {
    let get = |name: &str| solution.get(name).cloned().ok_or_else(|| format!("{name} unbound in outcome"));
    let player = |name: &str| match get(name)? {
        Term::Atom(id) => Ok(id),
        other => Err(format!("{name} is {other}, expected a player id")),
    };
    let payoff = |name: &str| match get(name)? {
        Term::Int(u) => Ok(u),
        other => Err(format!("{name} is {other}, expected an integer payoff")),
    };
    Ok(OutcomeRecord {
        p1: player("P1")?,
        m1: get("M1")?,
        u1: payoff("U1")?,
        p2: player("P2")?,
        m2: get("M2")?,
        u2: payoff("U2")?,
    })
}

/// Reads the initial-situation constant from `initial/1`, defaulting to
/// `s0` when the program does not define one.
fn initial_constant(program: &Program) -> String {
    if !program.defines(&PredId::new("initial", 1)) {
        return "s0".to_string();
    }
    let query = vec![Goal::Call(Term::Compound("initial".to_string(), vec![Term::var("S")]))];
    let mut rng = crate::rng_from_seed(0);
    match solve_first(program, &query, SolveLimits::default(), &mut rng) {
        Ok(Some(solution)) => match solution.get("S") {
            Some(Term::Atom(name)) => name.clone(),
            _ => "s0".to_string(),
        },
        _ => "s0".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{canonical_game, strategy_source, GameId, StrategyId};

    fn pd_session(strategy: StrategyId) -> AgentSession {
        AgentSession::new(
            canonical_game(GameId::Pd).source,
            strategy_source(strategy).source,
            "p1",
            "p2",
            Role::Row,
        )
        .expect("canonical sources load")
    }

    #[test]
    fn prelude_alone_raises_existence_error() {
        let session = AgentSession::new("", "", "p1", "p2", Role::Row).unwrap();
        let err = session.final_situations().unwrap_err();
        match err {
            PlayError::Engine(e) => {
                assert_eq!(e.kind.label(), "existence_error");
                assert!(e.message.contains("final/1") || e.message.contains("legal/2"), "{e}");
            }
            other => panic!("expected engine error, got {other}"),
        }
    }

    #[test]
    fn pd_enumerates_eight_finals() {
        let session = pd_session(StrategyId::TitForTat);
        let finals = session.final_situations().unwrap();
        assert_eq!(finals.len(), 8);
        for f in &finals {
            let situation = Situation::from_term(f).expect("final situations are move stacks");
            assert_eq!(situation.depth(), 2);
            assert!(f.is_ground());
        }
    }

    #[test]
    fn control_is_consumed_by_a_move() {
        let session = pd_session(StrategyId::TitForTat);
        let situation = session.initial_situation().then("p1", Term::atom("C")).to_term();
        let query = vec![Goal::Call(Term::Compound(
            "holds".to_string(),
            vec![Term::Compound("control".to_string(), vec![Term::Atom("p1".into())]), situation],
        ))];
        let mut rng = crate::rng_from_seed(0);
        let solutions = solve_all(session.program(), &query, SolveLimits::default(), &mut rng).unwrap();
        assert!(solutions.is_empty());
    }

    #[test]
    fn legal_moves_in_declaration_order() {
        let session = pd_session(StrategyId::TitForTat);
        let moves: Vec<String> = session.legal_moves().unwrap().iter().map(|m| m.to_string()).collect();
        assert_eq!(moves, vec!["'D'", "'C'"]);
    }

    #[test]
    fn missing_possible_raises_existence_error() {
        let game = "initial(s0).\ninitially(player(p1), s0).\ninitially(control(p1), s0).\nlegal(move(P, M), S) if possible(move(P, M), S) and holds(control(P), S).";
        let session = AgentSession::new(game, "", "p1", "p2", Role::Row).unwrap();
        let err = session.legal_moves().unwrap_err();
        match err {
            PlayError::Engine(e) => assert!(e.message.contains("possible/2"), "{e}"),
            other => panic!("expected engine error, got {other}"),
        }
    }

    #[test]
    fn tit_for_tat_defaults_then_mirrors() {
        let mut session = pd_session(StrategyId::TitForTat);
        let mut rng = crate::rng_from_seed(0);
        assert_eq!(session.select_move(&mut rng).unwrap(), Term::atom("C"));
        session.update_history(Term::atom("C"), Term::atom("D"), 0);
        assert_eq!(session.select_move(&mut rng).unwrap(), Term::atom("D"));
    }

    #[test]
    fn empty_strategy_fails_lazily_at_select() {
        let session = AgentSession::new(canonical_game(GameId::Pd).source, "", "p1", "p2", Role::Row).unwrap();
        let mut rng = crate::rng_from_seed(0);
        let err = session.select_move(&mut rng).unwrap_err();
        match err {
            PlayError::Engine(e) => assert!(e.message.contains("select/4"), "{e}"),
            other => panic!("expected existence error on select/4, got {other}"),
        }
    }

    #[test]
    fn syntax_error_fails_session_construction_with_module_label() {
        let err = AgentSession::new("initial(s0", "", "p1", "p2", Role::Row).unwrap_err();
        match err {
            PlayError::Parse { module, errors } => {
                assert_eq!(module, "game");
                assert!(!errors.is_empty());
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn resolve_outcome_matches_payoff_facts() {
        let session = pd_session(StrategyId::TitForTat);
        let record = session.resolve_outcome(&Term::atom("D"), &Term::atom("C")).unwrap();
        assert_eq!((record.u1, record.u2), (5, 0));
        assert_eq!(record.p1, "p1");
        let record = session.resolve_outcome(&Term::atom("C"), &Term::atom("C")).unwrap();
        assert_eq!((record.u1, record.u2), (3, 3));
    }

    #[test]
    fn deleted_payoff_fact_yields_no_outcome() {
        let source = canonical_game(GameId::Pd).source.replace("payoff('C', 'C', 3, 3).", "");
        let session = AgentSession::new(&source, "", "p1", "p2", Role::Row).unwrap();
        let err = session.resolve_outcome(&Term::atom("C"), &Term::atom("C")).unwrap_err();
        assert!(matches!(err, PlayError::NoOutcome { .. }));
        assert_eq!(err.failure_label(), "runtime_semantic_error");
    }

    #[test]
    fn update_history_replaces_last_move_fluents() {
        let mut session = pd_session(StrategyId::TitForTat);
        session.update_history(Term::atom("C"), Term::atom("C"), 3);
        session.update_history(Term::atom("D"), Term::atom("C"), 5);
        assert_eq!(session.program().dynamic_facts().len(), 2);
        assert_eq!(session.round_index(), 2);
        assert_eq!(session.history().len(), 2);
    }

    #[test]
    fn asserted_fluent_is_visible_and_retractable() {
        let mut session = pd_session(StrategyId::TitForTat);
        session.update_history(Term::atom("C"), Term::atom("C"), 3);
        let query = crate::parse::parse_goals("holds(last_move(p2, M), s0)").unwrap();
        let mut rng = crate::rng_from_seed(0);
        let solutions = solve_all(session.program(), &query, SolveLimits::default(), &mut rng).unwrap();
        assert_eq!(solutions.len(), 1);
        assert_eq!(solutions[0].get("M"), Some(&Term::atom("C")));
    }

    #[test]
    fn role_aware_seating_for_column_player() {
        let session = AgentSession::new(
            canonical_game(GameId::Pd).source,
            strategy_source(StrategyId::TitForTat).source,
            "p2",
            "p1",
            Role::Col,
        )
        .unwrap();
        // m_row, m_col stay in table order regardless of which seat we hold.
        let record = session.resolve_outcome(&Term::atom("D"), &Term::atom("C")).unwrap();
        assert_eq!((record.u1, record.u2), (5, 0));
        assert_eq!(record.p2, "p2");
    }
}
