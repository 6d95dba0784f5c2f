//! The three-level validation pipeline.
//!
//! Syntactic validation parses and consults a source against the prelude.
//! Runtime validation plays a clone match; with four rounds the played moves
//! follow the scripted schedule covering all four action pairs, while the
//! strategy is still invoked every round so a broken strategy is caught too.
//! Semantic validation either compares outcomes to exact targets or checks
//! the payoff matrix against the game type's ordering constraints,
//! searching every assignment of the program's action names.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::games::{CanonicalGame, GameId};
use crate::parse::parse_program;
use crate::program::Program;
use crate::solver::{prelude, AgentSession, Role};
use crate::term::{PredId, Term};
use crate::tournament::{play_match, AgentSpec, MatchSettings};

/// Result of syntactic validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntaxReport {
    pub valid: bool,
    /// How many generation attempts produced this source (1 outside the
    /// self-correction loop).
    pub attempts_used: u32,
    pub errors: Vec<EngineError>,
    /// Diagnostic text fed back to the model: one line per error in the
    /// form `line:col: kind: message: <offending line>`.
    pub trace: String,
}

/// Parses `src` and consults it together with the prelude. All errors are
/// reported, each quoting its offending line.
pub fn check_syntax(src: &str) -> SyntaxReport {
    match parse_program(src) {
        Ok(parsed) => {
            let mut merged = prelude();
            merged.merge(&parsed);
            SyntaxReport { valid: true, attempts_used: 1, errors: Vec::new(), trace: String::new() }
        }
        Err(errors) => {
            let trace = errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n");
            SyntaxReport { valid: false, attempts_used: 1, errors, trace }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidateError {
    #[error("schedule_error: {0}")]
    Schedule(String),
    #[error("extraction_error: {0}")]
    Extraction(String),
}

/// The fixed 4-round move plan covering all four action pairs:
/// `[(a1,a1), (a1,a2), (a2,a1), (a2,a2)]` in declaration order.
pub fn scripted_schedule(actions: &[Term]) -> Result<Vec<(Term, Term)>, ValidateError> {
    match actions {
        [a1, a2] if a1 != a2 => Ok(vec![
            (a1.clone(), a1.clone()),
            (a1.clone(), a2.clone()),
            (a2.clone(), a1.clone()),
            (a2.clone(), a2.clone()),
        ]),
        _ => Err(ValidateError::Schedule(format!(
            "expected exactly 2 distinct actions, got {}",
            Term::List(actions.to_vec())
        ))),
    }
}

/// What stopped a runtime validation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuntimeFailure {
    pub round: usize,
    /// parse_error | engine_error | strategy_failure |
    /// runtime_semantic_error | schedule_error
    pub kind: String,
    pub detail: String,
}

/// Result of runtime validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuntimeReport {
    pub valid: bool,
    pub rounds_requested: usize,
    pub rounds_completed: usize,
    pub failure: Option<RuntimeFailure>,
}

/// Plays a clone match of `rounds` rounds. With `rounds == 4` the moves
/// follow the scripted schedule (full matrix coverage); otherwise the
/// strategies drive play. Any raised error invalidates the report.
pub fn validate_runtime(game_src: &str, strategy_src: &str, rounds: usize) -> RuntimeReport {
    let invalid = |completed: usize, failure: RuntimeFailure| RuntimeReport {
        valid: false,
        rounds_requested: rounds,
        rounds_completed: completed,
        failure: Some(failure),
    };

    let schedule = if rounds == 4 {
        let probe = match AgentSession::new(game_src, strategy_src, "p1", "p2", Role::Row) {
            Ok(session) => session,
            Err(e) => {
                return invalid(0, RuntimeFailure { round: 0, kind: e.failure_label().into(), detail: e.to_string() })
            }
        };
        let actions = match probe.legal_moves() {
            Ok(actions) => actions,
            Err(e) => {
                return invalid(0, RuntimeFailure { round: 0, kind: e.failure_label().into(), detail: e.to_string() })
            }
        };
        match scripted_schedule(&actions) {
            Ok(schedule) => Some(schedule),
            Err(e) => {
                return invalid(0, RuntimeFailure { round: 0, kind: "schedule_error".into(), detail: e.to_string() })
            }
        }
    } else {
        None
    };

    let spec = AgentSpec::new("agent", game_src, strategy_src, "validation");
    let clone = spec.clone_as("agent.clone");
    let settings = MatchSettings { rounds, schedule };
    let mut rng_a = crate::tournament::match_rng(0, 0, 0);
    let mut rng_b = crate::tournament::match_rng(0, 0, 1);
    let result = play_match(&spec, &clone, &settings, &mut rng_a, &mut rng_b);
    match result.error {
        None => RuntimeReport {
            valid: result.rounds_completed() == rounds,
            rounds_requested: rounds,
            rounds_completed: result.rounds_completed(),
            failure: None,
        },
        Some(failure) => invalid(
            result.rounds.len(),
            RuntimeFailure { round: failure.round, kind: failure.kind, detail: failure.detail },
        ),
    }
}

/// Ground-truth outcomes for the scripted schedule: `(u_row, u_col)` per
/// scheduled pair plus the per-role totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetOutcomes {
    pub pairs: [(i64, i64); 4],
    pub totals: (i64, i64),
}

impl TargetOutcomes {
    /// Builds targets from the four per-pair payoffs; totals follow.
    pub fn from_pairs(pairs: [(i64, i64); 4]) -> TargetOutcomes {
        let totals = pairs.iter().fold((0, 0), |acc, (u, v)| (acc.0 + u, acc.1 + v));
        TargetOutcomes { pairs, totals }
    }

    /// Targets for a shipped canonical game.
    pub fn for_game(game: &CanonicalGame) -> TargetOutcomes {
        let (a1, a2) = game.actions;
        let cell = |r: &str, c: &str| game.payoff(r, c).expect("canonical matrix is complete");
        TargetOutcomes::from_pairs([cell(a1, a1), cell(a1, a2), cell(a2, a1), cell(a2, a2)])
    }

    /// Checks the totals-match-sum invariant (useful after deserializing).
    pub fn check(&self) -> Result<(), String> {
        let sums = self.pairs.iter().fold((0, 0), |acc, (u, v)| (acc.0 + u, acc.1 + v));
        if sums == self.totals {
            Ok(())
        } else {
            Err(format!("totals {:?} do not equal per-pair sums {:?}", self.totals, sums))
        }
    }
}

/// One mismatch between a resolved outcome and its target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairDiff {
    /// The program's actions for this cell, row then col.
    pub played: (String, String),
    pub expected: (i64, i64),
    pub actual: (i64, i64),
}

/// Result of exact semantic validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemanticReport {
    pub valid: bool,
    pub pair_diffs: Vec<PairDiff>,
    /// `(actual, expected)` when the totals differ.
    pub total_diff: Option<((i64, i64), (i64, i64))>,
    /// Per-role totals the program actually scored over the schedule.
    pub actual_totals: Option<(i64, i64)>,
    /// Something below the semantic level broke while resolving outcomes.
    pub failure: Option<String>,
}

impl SemanticReport {
    fn failed(detail: String) -> SemanticReport {
        SemanticReport {
            valid: false,
            pair_diffs: Vec::new(),
            total_diff: None,
            actual_totals: None,
            failure: Some(detail),
        }
    }
}

/// Resolves the scripted schedule's outcomes and compares them to targets,
/// pair by pair and in total (exact integer equality). Generated programs
/// pick their own action names, so both assignments of the program's two
/// actions onto the target's action slots are tried; the report shows the
/// closer one (ties favor declaration order).
pub fn validate_exact(game_src: &str, targets: &TargetOutcomes) -> SemanticReport {
    let session = match AgentSession::new(game_src, "", "p1", "p2", Role::Row) {
        Ok(session) => session,
        Err(e) => return SemanticReport::failed(e.to_string()),
    };
    let actions = match session.legal_moves() {
        Ok(actions) => actions,
        Err(e) => return SemanticReport::failed(e.to_string()),
    };
    let schedule = match scripted_schedule(&actions) {
        Ok(schedule) => schedule,
        Err(e) => return SemanticReport::failed(e.to_string()),
    };
    let mut outcomes = Vec::with_capacity(4);
    for (row_move, col_move) in &schedule {
        match session.resolve_outcome(row_move, col_move) {
            Ok(record) => outcomes.push(((row_move.clone(), col_move.clone()), (record.u1, record.u2))),
            Err(e) => return SemanticReport::failed(e.to_string()),
        }
    }

    // Slot index of (i, j) over declaration-ordered actions.
    let slot = |i: usize, j: usize| i * 2 + j;
    let indices = [(0, 0), (0, 1), (1, 0), (1, 1)];
    let diffs_under = |perm: &[usize; 2]| {
        let mut diffs = Vec::new();
        for (k, (i, j)) in indices.iter().enumerate() {
            let expected = targets.pairs[slot(perm[*i], perm[*j])];
            let (played, actual) = &outcomes[k];
            if *actual != expected {
                diffs.push(PairDiff {
                    played: (played.0.to_string(), played.1.to_string()),
                    expected,
                    actual: *actual,
                });
            }
        }
        diffs
    };
    let identity = diffs_under(&[0, 1]);
    let swapped = diffs_under(&[1, 0]);
    let pair_diffs = if swapped.len() < identity.len() { swapped } else { identity };

    let actual_totals = outcomes.iter().fold((0, 0), |acc, (_, (u, v))| (acc.0 + u, acc.1 + v));
    let total_diff = (actual_totals != targets.totals).then_some((actual_totals, targets.totals));
    SemanticReport {
        valid: pair_diffs.is_empty() && total_diff.is_none(),
        pair_diffs,
        total_diff,
        actual_totals: Some(actual_totals),
        failure: None,
    }
}

/// The payoff-ordering constraint of one game type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameTypeConstraint {
    pub game_type: GameId,
    /// Symmetric games additionally require payoff(a,b,u,v) => payoff(b,a,v,u).
    pub symmetric: bool,
}

/// The constraint definition for a game type.
pub fn constraint_for(game_type: GameId) -> GameTypeConstraint {
    GameTypeConstraint {
        game_type,
        symmetric: matches!(game_type, GameId::Pd | GameId::Hd | GameId::Sh),
    }
}

/// A payoff cell as read from a program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub row_action: String,
    pub col_action: String,
    pub u_row: i64,
    pub u_col: i64,
}

/// Result of constraint-based semantic validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub satisfied: bool,
    /// The witness assignment: action names to constraint roles
    /// (`cooperate`/`defect`, or `U`/`D` and `L`/`R` keyed `row:`/`col:`).
    pub action_mapping: Option<BTreeMap<String, String>>,
    pub extracted_matrix: Vec<MatrixCell>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ExtractedMatrix {
    row_actions: Vec<String>,
    col_actions: Vec<String>,
    cells: BTreeMap<(String, String), (i64, i64)>,
}

impl ExtractedMatrix {
    fn cell(&self, row: &str, col: &str) -> (i64, i64) {
        self.cells[&(row.to_string(), col.to_string())]
    }
}

fn extract_matrix(program: &Program) -> Result<ExtractedMatrix, ValidateError> {
    let clauses = program.clauses_for(&PredId::new("payoff", 4));
    if clauses.is_empty() {
        return Err(ValidateError::Extraction("no payoff/4 facts found".into()));
    }
    let mut row_actions: Vec<String> = Vec::new();
    let mut col_actions: Vec<String> = Vec::new();
    let mut cells = BTreeMap::new();
    for clause in &clauses {
        if !clause.is_fact() {
            return Err(ValidateError::Extraction(format!("payoff/4 must be facts, found rule `{clause}`")));
        }
        let args = clause.head.call_args();
        let action = |t: &Term| match t {
            Term::Atom(name) => Ok(name.clone()),
            other => Err(ValidateError::Extraction(format!("payoff action must be an atom, got {other}"))),
        };
        let utility = |t: &Term| match t {
            Term::Int(u) => Ok(*u),
            other => Err(ValidateError::Extraction(format!("payoff utility must be an integer, got {other}"))),
        };
        let row = action(&args[0])?;
        let col = action(&args[1])?;
        let cell = (utility(&args[2])?, utility(&args[3])?);
        if cells.insert((row.clone(), col.clone()), cell).is_some() {
            return Err(ValidateError::Extraction(format!("duplicate payoff fact for ({row}, {col})")));
        }
        if !row_actions.contains(&row) {
            row_actions.push(row);
        }
        if !col_actions.contains(&col) {
            col_actions.push(col);
        }
    }
    if cells.len() != 4 {
        return Err(ValidateError::Extraction(format!("expected exactly 4 payoff facts, found {}", cells.len())));
    }
    if row_actions.len() > 2 || col_actions.len() > 2 {
        return Err(ValidateError::Extraction(format!(
            "more than 2 actions per role: rows {row_actions:?}, cols {col_actions:?}"
        )));
    }
    // 4 distinct cells over at most 2x2 actions force a complete grid.
    Ok(ExtractedMatrix { row_actions, col_actions, cells })
}

fn symmetric_ordering_holds(game_type: GameId, t: i64, r: i64, p: i64, s: i64) -> bool {
    match game_type {
        GameId::Pd => t > r && r > p && p > s,
        GameId::Hd => t > r && r > s && s > p,
        GameId::Sh => r > t && t > p && p > s,
        GameId::Bos | GameId::Mp => unreachable!("asymmetric games use the cell constraint"),
    }
}

/// Checks one symmetric assignment: `c` cooperate-like, `d` defect-like.
/// Encodes the same conditions as the payoff-validity clauses the solver
/// uses: equal diagonal payoffs, mirrored off-diagonal payoffs, and the
/// game type's strict ordering.
fn check_symmetric(matrix: &ExtractedMatrix, game_type: GameId, c: &str, d: &str) -> bool {
    let (r1, r2) = matrix.cell(c, c);
    let (p1, p2) = matrix.cell(d, d);
    let (s1, t1) = matrix.cell(c, d);
    let (t2, s2) = matrix.cell(d, c);
    r1 == r2 && p1 == p2 && t1 == t2 && s1 == s2 && symmetric_ordering_holds(game_type, t1, r1, p1, s1)
}

/// Checks one asymmetric assignment with `u`/`d` the row actions and
/// `l`/`r` the column actions mapped onto the table's U/D and L/R.
fn check_asymmetric(matrix: &ExtractedMatrix, game_type: GameId, u: &str, d: &str, l: &str, r: &str) -> bool {
    let w = matrix.cell(u, l);
    let x = matrix.cell(u, r);
    let y = matrix.cell(d, l);
    let z = matrix.cell(d, r);
    match game_type {
        GameId::Bos => {
            let row_ok = w.0 > z.0 && z.0 > x.0 && z.0 > y.0;
            let col_ok = z.1 > w.1 && w.1 > x.1 && w.1 > y.1;
            row_ok && col_ok
        }
        GameId::Mp => {
            let row_ok = w.0.min(z.0) > x.0.max(y.0);
            let col_ok = x.1.min(y.1) > w.1.max(z.1);
            row_ok && col_ok
        }
        _ => unreachable!("symmetric games use the symmetric constraint"),
    }
}

/// Extracts the program's payoff matrix and tries every assignment of its
/// action names onto the game type's roles; satisfied when some assignment
/// passes, with the witness mapping reported.
pub fn validate_constraints(game_src: &str, game_type: GameId) -> Result<ConstraintReport, ValidateError> {
    let program = parse_program(game_src)
        .map_err(|errors| ValidateError::Extraction(format!("source does not parse: {} errors", errors.len())))?;
    let matrix = extract_matrix(&program)?;
    let extracted: Vec<MatrixCell> = matrix
        .cells
        .iter()
        .map(|((row, col), (u1, u2))| MatrixCell {
            row_action: row.clone(),
            col_action: col.clone(),
            u_row: *u1,
            u_col: *u2,
        })
        .collect();
    let constraint = constraint_for(game_type);

    if constraint.symmetric {
        let mut rows_sorted = matrix.row_actions.clone();
        let mut cols_sorted = matrix.col_actions.clone();
        rows_sorted.sort();
        cols_sorted.sort();
        if rows_sorted != cols_sorted {
            // Symmetry needs the same action set on both sides.
            return Ok(ConstraintReport { satisfied: false, action_mapping: None, extracted_matrix: extracted });
        }
        let (a1, a2) = (&matrix.row_actions[0], &matrix.row_actions[1]);
        for (c, d) in [(a1, a2), (a2, a1)] {
            if check_symmetric(&matrix, game_type, c, d) {
                let mapping = BTreeMap::from([
                    (c.clone(), "cooperate".to_string()),
                    (d.clone(), "defect".to_string()),
                ]);
                return Ok(ConstraintReport {
                    satisfied: true,
                    action_mapping: Some(mapping),
                    extracted_matrix: extracted,
                });
            }
        }
        return Ok(ConstraintReport { satisfied: false, action_mapping: None, extracted_matrix: extracted });
    }

    let (r1, r2) = (&matrix.row_actions[0], &matrix.row_actions[1]);
    let (c1, c2) = (&matrix.col_actions[0], &matrix.col_actions[1]);
    for (u, d) in [(r1, r2), (r2, r1)] {
        for (l, r) in [(c1, c2), (c2, c1)] {
            if check_asymmetric(&matrix, game_type, u, d, l, r) {
                let mapping = BTreeMap::from([
                    (format!("row:{u}"), "U".to_string()),
                    (format!("row:{d}"), "D".to_string()),
                    (format!("col:{l}"), "L".to_string()),
                    (format!("col:{r}"), "R".to_string()),
                ]);
                return Ok(ConstraintReport {
                    satisfied: true,
                    action_mapping: Some(mapping),
                    extracted_matrix: extracted,
                });
            }
        }
    }
    Ok(ConstraintReport { satisfied: false, action_mapping: None, extracted_matrix: extracted })
}

/// A validation report at any level, serialized as
/// `{"level": "syntax"|"runtime"|"semantic", ...}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "lowercase")]
pub enum ValidationReport {
    Syntax(SyntaxReport),
    Runtime(RuntimeReport),
    Semantic(SemanticSummary),
}

/// The semantic leg of a pipeline run, either exact or constraint-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SemanticSummary {
    Exact(SemanticReport),
    Constraint { satisfied: bool, report: Option<ConstraintReport>, error: Option<String> },
}

impl SemanticSummary {
    pub fn valid(&self) -> bool {
        match self {
            SemanticSummary::Exact(report) => report.valid,
            SemanticSummary::Constraint { satisfied, .. } => *satisfied,
        }
    }
}

/// Which semantic check a pipeline run performs.
#[derive(Debug, Clone)]
pub enum SemanticMode {
    Exact(TargetOutcomes),
    Constraint(GameId),
    /// Stop after runtime validation.
    Skip,
}

/// The level at which a source was classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Fails to parse.
    Syntax,
    /// Parses but a clone match raises.
    Runtime,
    /// Runs but the payoffs are wrong.
    Semantic,
    /// Passes every requested level.
    Valid,
}

/// A full pipeline run over one game source.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub syntax: SyntaxReport,
    pub runtime: Option<RuntimeReport>,
    pub semantic: Option<SemanticSummary>,
    pub level: Level,
}

impl PipelineOutcome {
    pub fn syntax_ok(&self) -> bool {
        self.syntax.valid
    }

    pub fn runtime_ok(&self) -> bool {
        self.runtime.as_ref().is_some_and(|r| r.valid)
    }

    pub fn semantic_ok(&self) -> bool {
        self.semantic.as_ref().is_some_and(|s| s.valid())
    }
}

/// Runs syntax, then runtime (a clone match of `rounds` rounds), then the
/// requested semantic check, stopping at the first failing level. Every
/// source lands at exactly one failure level or comes out fully valid.
pub fn validate_pipeline(
    game_src: &str,
    strategy_src: &str,
    rounds: usize,
    mode: &SemanticMode,
) -> PipelineOutcome {
    let syntax = check_syntax(game_src);
    if !syntax.valid {
        return PipelineOutcome { syntax, runtime: None, semantic: None, level: Level::Syntax };
    }
    let runtime = validate_runtime(game_src, strategy_src, rounds);
    if !runtime.valid {
        return PipelineOutcome { syntax, runtime: Some(runtime), semantic: None, level: Level::Runtime };
    }
    let semantic = match mode {
        SemanticMode::Skip => {
            return PipelineOutcome { syntax, runtime: Some(runtime), semantic: None, level: Level::Valid }
        }
        SemanticMode::Exact(targets) => SemanticSummary::Exact(validate_exact(game_src, targets)),
        SemanticMode::Constraint(game_type) => match validate_constraints(game_src, *game_type) {
            Ok(report) => SemanticSummary::Constraint {
                satisfied: report.satisfied,
                report: Some(report),
                error: None,
            },
            Err(e) => SemanticSummary::Constraint { satisfied: false, report: None, error: Some(e.to_string()) },
        },
    };
    let level = if semantic.valid() { Level::Valid } else { Level::Semantic };
    PipelineOutcome { syntax, runtime: Some(runtime), semantic: Some(semantic), level }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{canonical_game, strategy_source, StrategyId};

    fn pd_src() -> &'static str {
        canonical_game(GameId::Pd).source
    }

    fn tft_src() -> &'static str {
        strategy_source(StrategyId::TitForTat).source
    }

    #[test]
    fn canonical_pd_is_syntactically_valid() {
        let report = check_syntax(pd_src());
        assert!(report.valid);
        assert!(report.errors.is_empty());
    }

    #[test]
    fn slash_comments_invalidate_with_quoted_line() {
        let report = check_syntax("// comment\ninitial(s0).");
        assert!(!report.valid);
        assert!(report.trace.contains("// comment"));
    }

    #[test]
    fn truncated_source_reports_end_of_input() {
        let report = check_syntax("initial(s0). payoff('C','C',3,3)");
        assert!(!report.valid);
        assert!(!report.trace.is_empty());
        assert!(report.trace.contains("end of file"));
    }

    #[test]
    fn schedule_covers_all_four_pairs() {
        let schedule = scripted_schedule(&[Term::atom("D"), Term::atom("C")]).unwrap();
        let shown: Vec<(String, String)> =
            schedule.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        assert_eq!(
            shown,
            vec![
                ("'D'".into(), "'D'".into()),
                ("'D'".into(), "'C'".into()),
                ("'C'".into(), "'D'".into()),
                ("'C'".into(), "'C'".into()),
            ]
        );
    }

    #[test]
    fn schedule_rejects_wrong_action_counts() {
        assert!(scripted_schedule(&[Term::atom("D")]).is_err());
        assert!(scripted_schedule(&[Term::atom("D"), Term::atom("D")]).is_err());
        assert!(scripted_schedule(&[Term::atom("a"), Term::atom("b"), Term::atom("c")]).is_err());
    }

    #[test]
    fn runtime_valid_for_canonical_pd_with_tft() {
        let report = validate_runtime(pd_src(), tft_src(), 4);
        assert!(report.valid, "{report:?}");
        assert_eq!(report.rounds_completed, 4);
    }

    #[test]
    fn deleted_payoff_fact_fails_at_the_covering_round() {
        // The scripted schedule hits (C, C) in round 3 (0-based).
        let broken = pd_src().replace("payoff('C', 'C', 3, 3).", "");
        let report = validate_runtime(&broken, tft_src(), 4);
        assert!(!report.valid);
        let failure = report.failure.unwrap();
        assert_eq!(failure.kind, "runtime_semantic_error");
        assert_eq!(failure.round, 3);
        assert_eq!(report.rounds_completed, 3);
    }

    #[test]
    fn strategy_without_no_history_clause_fails_at_round_zero() {
        // Only the mirroring clause: no move exists before any history.
        let broken_strategy = "select(P, O, S, Mo) if holds(last_move(O, Mo), S).";
        let report = validate_runtime(pd_src(), broken_strategy, 4);
        assert!(!report.valid);
        let failure = report.failure.unwrap();
        assert_eq!(failure.kind, "strategy_failure");
        assert_eq!(failure.round, 0);
    }

    #[test]
    fn exact_validation_accepts_canonical_pd() {
        let targets = TargetOutcomes::for_game(&canonical_game(GameId::Pd));
        assert_eq!(targets.totals, (9, 9));
        let report = validate_exact(pd_src(), &targets);
        assert!(report.valid, "{report:?}");
    }

    #[test]
    fn single_perturbation_is_rejected_with_one_diff() {
        let targets = TargetOutcomes::for_game(&canonical_game(GameId::Pd));
        let perturbed = pd_src().replace("payoff('C', 'C', 3, 3).", "payoff('C', 'C', 4, 4).");
        let report = validate_exact(&perturbed, &targets);
        assert!(!report.valid);
        assert_eq!(report.pair_diffs.len(), 1);
        assert_eq!(report.pair_diffs[0].actual, (4, 4));
        assert_eq!(report.pair_diffs[0].expected, (3, 3));
        assert!(report.total_diff.is_some());
    }

    #[test]
    fn swapped_t_and_s_gives_two_diffs_with_equal_totals() {
        let targets = TargetOutcomes::for_game(&canonical_game(GameId::Pd));
        let swapped = pd_src()
            .replace("payoff('C', 'D', 0, 5).", "payoff('C', 'D', 5, 0).")
            .replace("payoff('D', 'C', 5, 0).", "payoff('D', 'C', 0, 5).");
        let report = validate_exact(&swapped, &targets);
        assert!(!report.valid);
        assert_eq!(report.pair_diffs.len(), 2);
        // Totals coincide, so per-pair comparison is what catches this.
        assert!(report.total_diff.is_none());
    }

    #[test]
    fn renamed_actions_still_validate_exactly() {
        let renamed = pd_src().replace("'C'", "'share'").replace("'D'", "'steal'");
        let targets = TargetOutcomes::for_game(&canonical_game(GameId::Pd));
        let report = validate_exact(&renamed, &targets);
        assert!(report.valid, "{report:?}");
        // Reversed declaration order is absorbed by the assignment search.
        let reordered = renamed
            .replace(
                "possible(move(P, 'steal'), S) if holds(player(P), S).\npossible(move(P, 'share'), S) if holds(player(P), S).",
                "possible(move(P, 'share'), S) if holds(player(P), S).\npossible(move(P, 'steal'), S) if holds(player(P), S).",
            );
        let report = validate_exact(&reordered, &targets);
        assert!(report.valid, "{report:?}");
    }

    #[test]
    fn pd_constraint_accepts_the_paper_matrix() {
        let report = validate_constraints(pd_src(), GameId::Pd).unwrap();
        assert!(report.satisfied);
        let mapping = report.action_mapping.unwrap();
        assert_eq!(mapping.get("C").map(String::as_str), Some("cooperate"));
        assert_eq!(mapping.get("D").map(String::as_str), Some("defect"));
    }

    #[test]
    fn pd_constraint_rejects_p_below_s() {
        // P=0, S=1 violates P > S; the rest stays PD-like.
        let bad = pd_src()
            .replace("payoff('D', 'D', 1, 1).", "payoff('D', 'D', 0, 0).")
            .replace("payoff('C', 'D', 0, 5).", "payoff('C', 'D', 1, 5).")
            .replace("payoff('D', 'C', 5, 0).", "payoff('D', 'C', 5, 1).");
        let report = validate_constraints(&bad, GameId::Pd).unwrap();
        assert!(!report.satisfied);
        assert!(report.action_mapping.is_none());
    }

    #[test]
    fn every_canonical_game_satisfies_its_own_constraint() {
        for id in GameId::ALL {
            let game = canonical_game(id);
            let report = validate_constraints(game.source, id).unwrap();
            assert!(report.satisfied, "{id} fails its own constraint");
        }
    }

    #[test]
    fn mp_matrix_satisfies_under_both_mappings() {
        // The +/-1 matrix is symmetric under swapping which action is U/L,
        // so the search must succeed regardless of which it reports.
        let report = validate_constraints(canonical_game(GameId::Mp).source, GameId::Mp).unwrap();
        assert!(report.satisfied);
        assert!(report.action_mapping.is_some());
    }

    #[test]
    fn asymmetric_payoffs_fail_symmetric_constraints() {
        let asym = pd_src().replace("payoff('C', 'C', 3, 3).", "payoff('C', 'C', 3, 2).");
        let report = validate_constraints(&asym, GameId::Pd).unwrap();
        assert!(!report.satisfied);
    }

    #[test]
    fn extraction_errors() {
        assert!(matches!(
            validate_constraints("initial(s0).", GameId::Pd),
            Err(ValidateError::Extraction(_))
        ));
        let dup = format!("{}payoff('C', 'C', 9, 9).\n", pd_src());
        assert!(validate_constraints(&dup, GameId::Pd).is_err());
        let three_actions = pd_src().replace("payoff('C', 'C', 3, 3).", "payoff('X', 'C', 3, 3).");
        assert!(validate_constraints(&three_actions, GameId::Pd).is_err());
        let nonint = pd_src().replace("payoff('C', 'C', 3, 3).", "payoff('C', 'C', three, 3).");
        assert!(validate_constraints(&nonint, GameId::Pd).is_err());
    }

    #[test]
    fn pipeline_levels_partition_fixtures() {
        let targets = TargetOutcomes::for_game(&canonical_game(GameId::Pd));
        let mode = SemanticMode::Exact(targets);

        let syntactic = validate_pipeline("payoff('C,'C',3,3).", tft_src(), 4, &mode);
        assert_eq!(syntactic.level, Level::Syntax);
        assert!(syntactic.runtime.is_none());

        let broken = pd_src().replace("payoff('D', 'C', 5, 0).", "");
        let runtime = validate_pipeline(&broken, tft_src(), 4, &mode);
        assert_eq!(runtime.level, Level::Runtime);
        assert!(runtime.syntax_ok());
        assert!(!runtime.runtime_ok());

        let wrong = pd_src().replace("payoff('C', 'C', 3, 3).", "payoff('C', 'C', 4, 4).");
        let semantic = validate_pipeline(&wrong, tft_src(), 4, &mode);
        assert_eq!(semantic.level, Level::Semantic);
        assert!(semantic.runtime_ok());
        assert!(!semantic.semantic_ok());

        let valid = validate_pipeline(pd_src(), tft_src(), 4, &mode);
        assert_eq!(valid.level, Level::Valid);
        assert!(valid.syntax_ok() && valid.runtime_ok() && valid.semantic_ok());
    }

    #[test]
    fn reports_serialize_with_level_tags() {
        let report = ValidationReport::Syntax(check_syntax(pd_src()));
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["level"], "syntax");
        let report = ValidationReport::Runtime(validate_runtime(pd_src(), tft_src(), 4));
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["level"], "runtime");
        assert_eq!(json["valid"], true);
    }

    #[test]
    fn target_outcome_invariants() {
        let targets = TargetOutcomes::from_pairs([(1, 1), (5, 0), (0, 5), (3, 3)]);
        assert_eq!(targets.totals, (9, 9));
        assert!(targets.check().is_ok());
        let broken = TargetOutcomes { pairs: targets.pairs, totals: (9, 8) };
        assert!(broken.check().is_err());
    }
}
