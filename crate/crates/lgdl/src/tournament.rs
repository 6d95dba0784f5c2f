//! Match scheduling, iterated play, payoff accounting, normalization, and
//! winner selection.
//!
//! Each agent scores its rounds with its own game program; when the two
//! programs disagree about a round the divergence is flagged on the record
//! rather than aborting the match. A first error aborts the match with the
//! partial rounds kept, and never propagates past the match boundary.
//!
//! Determinism: one root seed is split per (match index, agent index), so a
//! tournament is reproducible match by match whether it runs sequentially or
//! on a thread pool (results are collected in schedule order either way).

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use num_rational::Rational64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::parse::parse_program;
use crate::solver::{AgentSession, PlayError, Role};
use crate::term::{PredId, Term};

/// An agent entry in a tournament pool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentSpec {
    pub agent_id: String,
    pub game_src: String,
    pub strategy_src: String,
    /// Free-form tag, e.g. the strategy name or a scenario id.
    pub label: String,
}

impl AgentSpec {
    pub fn new(
        agent_id: impl Into<String>,
        game_src: impl Into<String>,
        strategy_src: impl Into<String>,
        label: impl Into<String>,
    ) -> AgentSpec {
        AgentSpec {
            agent_id: agent_id.into(),
            game_src: game_src.into(),
            strategy_src: strategy_src.into(),
            label: label.into(),
        }
    }

    /// A fresh copy under a new id, for clone matches.
    pub fn clone_as(&self, agent_id: impl Into<String>) -> AgentSpec {
        AgentSpec { agent_id: agent_id.into(), ..self.clone() }
    }
}

/// How agents are paired for matches.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MatchMaker {
    /// Each agent against a fresh copy of itself (id suffixed `.clone`).
    Clone,
    /// Every unordered pair, optionally including self-pairs.
    RoundRobin { include_self: bool },
    /// An explicit list of (agent_id, agent_id) pairs.
    Explicit { pairs: Vec<(String, String)> },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TournamentError {
    #[error("empty agent pool")]
    EmptyPool,
    #[error("unknown agent id `{0}` in explicit pairing")]
    UnknownAgent(String),
    #[error("normalization bounds error: {0}")]
    Bounds(String),
}

/// Expands a matchmaker over the pool into concrete pairings.
pub fn make_pairs(mm: &MatchMaker, pool: &[AgentSpec]) -> Result<Vec<(AgentSpec, AgentSpec)>, TournamentError> {
    match mm {
        MatchMaker::Explicit { pairs } => {
            let mut out = Vec::new();
            for (a, b) in pairs {
                let find = |id: &String| {
                    pool.iter()
                        .find(|spec| &spec.agent_id == id)
                        .cloned()
                        .ok_or_else(|| TournamentError::UnknownAgent(id.clone()))
                };
                out.push((find(a)?, find(b)?));
            }
            Ok(out)
        }
        _ if pool.is_empty() => Err(TournamentError::EmptyPool),
        MatchMaker::Clone => Ok(pool
            .iter()
            .map(|agent| (agent.clone(), agent.clone_as(format!("{}.clone", agent.agent_id))))
            .collect()),
        MatchMaker::RoundRobin { include_self } => {
            let mut out = Vec::new();
            for i in 0..pool.len() {
                let start = if *include_self { i } else { i + 1 };
                for j in start..pool.len() {
                    out.push((pool[i].clone(), pool[j].clone()));
                }
            }
            Ok(out)
        }
    }
}

/// One played round as seen by both agents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub row_move: Term,
    pub col_move: Term,
    /// Row agent's payoff as computed by its own program.
    pub row_payoff: i64,
    /// Column agent's payoff as computed by its own program.
    pub col_payoff: i64,
    /// The two programs derived different outcome records this round.
    pub divergent: bool,
}

/// Why a match stopped early.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchFailure {
    pub round: usize,
    /// One of parse_error, engine_error, strategy_failure,
    /// runtime_semantic_error.
    pub kind: String,
    pub detail: String,
}

/// The result of one match. Totals cover the completed rounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchResult {
    pub a_id: String,
    pub b_id: String,
    pub rounds: Vec<RoundRecord>,
    pub totals: (i64, i64),
    pub error: Option<MatchFailure>,
}

impl MatchResult {
    pub fn rounds_completed(&self) -> usize {
        self.rounds.len()
    }
}

/// Per-match options: round count and an optional scripted schedule of
/// (row, col) moves that overrides what the strategies select.
#[derive(Debug, Clone, Default)]
pub struct MatchSettings {
    pub rounds: usize,
    pub schedule: Option<Vec<(Term, Term)>>,
}

fn failure(round: usize, e: &PlayError) -> MatchFailure {
    MatchFailure { round, kind: e.failure_label().to_string(), detail: e.to_string() }
}

/// Plays one match. Strategies are always invoked (so a broken strategy is
/// detected even under a scripted schedule); when a schedule is present the
/// scheduled moves are the ones actually played and recorded.
pub fn play_match(
    a: &AgentSpec,
    b: &AgentSpec,
    settings: &MatchSettings,
    rng_a: &mut dyn RngCore,
    rng_b: &mut dyn RngCore,
) -> MatchResult {
    let mut result = MatchResult {
        a_id: a.agent_id.clone(),
        b_id: b.agent_id.clone(),
        rounds: Vec::new(),
        totals: (0, 0),
        error: None,
    };
    let mut session_a = match AgentSession::new(&a.game_src, &a.strategy_src, "p1", "p2", Role::Row) {
        Ok(session) => session,
        Err(e) => {
            result.error = Some(failure(0, &e));
            return result;
        }
    };
    let mut session_b = match AgentSession::new(&b.game_src, &b.strategy_src, "p2", "p1", Role::Col) {
        Ok(session) => session,
        Err(e) => {
            result.error = Some(failure(0, &e));
            return result;
        }
    };

    for round in 0..settings.rounds {
        let selected_row = match session_a.select_move(rng_a) {
            Ok(m) => m,
            Err(e) => {
                result.error = Some(failure(round, &e));
                break;
            }
        };
        let selected_col = match session_b.select_move(rng_b) {
            Ok(m) => m,
            Err(e) => {
                result.error = Some(failure(round, &e));
                break;
            }
        };
        let (row_move, col_move) = match &settings.schedule {
            Some(schedule) => schedule[round % schedule.len()].clone(),
            None => (selected_row, selected_col),
        };
        let record_a = match session_a.resolve_outcome(&row_move, &col_move) {
            Ok(record) => record,
            Err(e) => {
                result.error = Some(failure(round, &e));
                break;
            }
        };
        let record_b = match session_b.resolve_outcome(&row_move, &col_move) {
            Ok(record) => record,
            Err(e) => {
                result.error = Some(failure(round, &e));
                break;
            }
        };
        let divergent = record_a != record_b;
        result.rounds.push(RoundRecord {
            round,
            row_move: row_move.clone(),
            col_move: col_move.clone(),
            row_payoff: record_a.u1,
            col_payoff: record_b.u2,
            divergent,
        });
        result.totals.0 += record_a.u1;
        result.totals.1 += record_b.u2;
        session_a.update_history(row_move.clone(), col_move.clone(), record_a.u1);
        session_b.update_history(col_move, row_move, record_b.u2);
    }
    result
}

/// An exact normalized payoff in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedPayoff {
    pub num: i64,
    pub den: i64,
}

impl NormalizedPayoff {
    fn from_ratio(ratio: Rational64) -> NormalizedPayoff {
        NormalizedPayoff { num: *ratio.numer(), den: *ratio.denom() }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn in_unit_interval(&self) -> bool {
        self.num >= 0 && self.num <= self.den
    }
}

/// `(total - min) / (max - min)`, exact. Out-of-range input is an error,
/// never clamped.
pub fn normalize(total: i64, min_total: i64, max_total: i64) -> Result<NormalizedPayoff, TournamentError> {
    if min_total >= max_total {
        return Err(TournamentError::Bounds(format!(
            "min_total {min_total} must be below max_total {max_total}"
        )));
    }
    if total < min_total || total > max_total {
        return Err(TournamentError::Bounds(format!(
            "total {total} outside achievable range [{min_total}, {max_total}]"
        )));
    }
    Ok(NormalizedPayoff::from_ratio(Rational64::new(total - min_total, max_total - min_total)))
}

/// The single-round payoff range a program's payoff facts allow per role.
/// `None` when the matrix cannot be read (no ground integer payoff facts).
pub fn payoff_bounds(game_src: &str) -> Option<PayoffBounds> {
    let program = parse_program(game_src).ok()?;
    let mut row: Option<(i64, i64)> = None;
    let mut col: Option<(i64, i64)> = None;
    let widen = |slot: &mut Option<(i64, i64)>, value: i64| match slot {
        Some((lo, hi)) => {
            *lo = (*lo).min(value);
            *hi = (*hi).max(value);
        }
        None => *slot = Some((value, value)),
    };
    for clause in program.clauses_for(&PredId::new("payoff", 4)) {
        let args = clause.head.call_args();
        if let (Term::Int(u1), Term::Int(u2)) = (&args[2], &args[3]) {
            widen(&mut row, *u1);
            widen(&mut col, *u2);
        } else {
            return None;
        }
    }
    Some(PayoffBounds { row: row?, col: col? })
}

/// Per-role (min, max) single-round payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PayoffBounds {
    pub row: (i64, i64),
    pub col: (i64, i64),
}

/// Tournament options.
#[derive(Debug, Clone)]
pub struct TournamentConfig {
    pub rounds: usize,
    pub match_maker: MatchMaker,
    pub seed: u64,
    pub schedule: Option<Vec<(Term, Term)>>,
    /// Run matches on a thread pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for TournamentConfig {
    fn default() -> TournamentConfig {
        TournamentConfig {
            rounds: 10,
            match_maker: MatchMaker::RoundRobin { include_self: true },
            seed: 0,
            schedule: None,
            parallel: false,
        }
    }
}

/// One scheduled match with its position in the schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlayedMatch {
    pub index: usize,
    pub result: MatchResult,
}

/// Aggregated results: grand totals, exact normalized totals where the
/// game's matrix yields bounds, per-match results, and the seed used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TournamentResult {
    pub seed: u64,
    pub matches: Vec<PlayedMatch>,
    pub totals: BTreeMap<String, i64>,
    pub normalized: BTreeMap<String, NormalizedPayoff>,
    pub error_count: usize,
}

/// Derives the per-agent random source for one match from the root seed.
pub fn match_rng(root_seed: u64, match_index: u64, agent_index: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"lgdl-match-rng");
    hasher.update(root_seed.to_le_bytes());
    hasher.update(match_index.to_le_bytes());
    hasher.update(agent_index.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(seed)
}

/// Runs every scheduled match and aggregates totals. Per-match errors are
/// recorded in the results; the run itself never aborts.
pub fn run_tournament(pool: &[AgentSpec], cfg: &TournamentConfig) -> Result<TournamentResult, TournamentError> {
    let pairs = match make_pairs(&cfg.match_maker, pool) {
        Ok(pairs) => pairs,
        Err(TournamentError::EmptyPool) => {
            return Ok(TournamentResult {
                seed: cfg.seed,
                matches: Vec::new(),
                totals: BTreeMap::new(),
                normalized: BTreeMap::new(),
                error_count: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let settings = MatchSettings { rounds: cfg.rounds, schedule: cfg.schedule.clone() };

    let play_one = |(index, (a, b)): (usize, &(AgentSpec, AgentSpec))| {
        let mut rng_a = match_rng(cfg.seed, index as u64, 0);
        let mut rng_b = match_rng(cfg.seed, index as u64, 1);
        PlayedMatch { index, result: play_match(a, b, &settings, &mut rng_a, &mut rng_b) }
    };
    let matches: Vec<PlayedMatch> = if cfg.parallel {
        pairs.par_iter().enumerate().map(play_one).collect()
    } else {
        pairs.iter().enumerate().map(play_one).collect()
    };

    let mut totals: BTreeMap<String, i64> = BTreeMap::new();
    // Accumulated (min, max) achievable totals per agent across its seats.
    let mut bound_acc: BTreeMap<String, (i64, i64)> = BTreeMap::new();
    let mut boundable: BTreeMap<String, bool> = BTreeMap::new();
    let mut error_count = 0;

    for played in &matches {
        let result = &played.result;
        if result.error.is_some() {
            error_count += 1;
        }
        let (pair_index, _) = &pairs[played.index];
        let self_pair = result.a_id == result.b_id;
        let seats: Vec<(&str, Role, i64, &AgentSpec)> = if self_pair {
            // A self-pair contributes one total: the agent is both seats.
            vec![(result.a_id.as_str(), Role::Row, result.totals.0, pair_index)]
        } else {
            vec![
                (result.a_id.as_str(), Role::Row, result.totals.0, &pairs[played.index].0),
                (result.b_id.as_str(), Role::Col, result.totals.1, &pairs[played.index].1),
            ]
        };
        for (id, role, total, spec) in seats {
            *totals.entry(id.to_string()).or_insert(0) += total;
            let entry = boundable.entry(id.to_string()).or_insert(true);
            match payoff_bounds(&spec.game_src) {
                Some(bounds) if result.error.is_none() => {
                    let (lo, hi) = match role {
                        Role::Row => bounds.row,
                        Role::Col => bounds.col,
                    };
                    let acc = bound_acc.entry(id.to_string()).or_insert((0, 0));
                    acc.0 += lo * cfg.rounds as i64;
                    acc.1 += hi * cfg.rounds as i64;
                }
                _ => *entry = false,
            }
        }
    }

    let mut normalized = BTreeMap::new();
    for (id, total) in &totals {
        if boundable.get(id).copied().unwrap_or(false) {
            if let Some((min_total, max_total)) = bound_acc.get(id) {
                if let Ok(value) = normalize(*total, *min_total, *max_total) {
                    normalized.insert(id.clone(), value);
                }
            }
        }
    }

    Ok(TournamentResult { seed: cfg.seed, matches, totals, normalized, error_count })
}

/// How winners are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WinnerMode {
    /// The argmax set over grand totals.
    MaxPayoff,
    /// Every agent whose grand total equals the target exactly.
    TargetMatch(i64),
}

/// Applies a winner-selection mode to a tournament's grand totals.
pub fn select_winners(result: &TournamentResult, mode: WinnerMode) -> BTreeSet<String> {
    match mode {
        WinnerMode::MaxPayoff => {
            let Some(max) = result.totals.values().copied().max() else {
                return BTreeSet::new();
            };
            result.totals.iter().filter(|(_, &t)| t == max).map(|(id, _)| id.clone()).collect()
        }
        WinnerMode::TargetMatch(target) => result
            .totals
            .iter()
            .filter(|(_, &t)| t == target)
            .map(|(id, _)| id.clone())
            .collect(),
    }
}

/// Writes one JSON line per played round.
pub fn write_round_log(result: &TournamentResult, out: &mut dyn Write) -> io::Result<()> {
    for played in &result.matches {
        for round in &played.result.rounds {
            let line = serde_json::json!({
                "match": played.index,
                "a": played.result.a_id,
                "b": played.result.b_id,
                "round": round.round,
                "row_move": round.row_move.to_string(),
                "col_move": round.col_move.to_string(),
                "row_payoff": round.row_payoff,
                "col_payoff": round.col_payoff,
                "divergent": round.divergent,
            });
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// The summary JSON document for a tournament.
pub fn summary_json(result: &TournamentResult) -> serde_json::Value {
    serde_json::json!({
        "seed": result.seed,
        "matches": result.matches.len(),
        "errors": result.error_count,
        "totals": result.totals,
        "normalized": result.normalized.iter().map(|(id, n)| {
            (id.clone(), serde_json::json!({"num": n.num, "den": n.den, "value": n.as_f64()}))
        }).collect::<BTreeMap<_, _>>(),
    })
}
