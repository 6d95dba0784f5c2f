//! The four experiment drivers.
//!
//! 1. Formalize numeric-payoff scenarios, play scripted clone matches, and
//!    validate exactly against the target outcomes.
//! 2. Same for non-numeric scenarios, with constraint validation against
//!    the scenario's game type.
//! 3. Round-robin tournaments (self-pairs included) of the six reference
//!    strategies per game, emitting normalized payoffs per strategy.
//! 4. Formalize strategy descriptions, mount each on the predefined
//!    dilemma, play against an anti-mirroring clone, and compare totals to
//!    what the reference strategy scores (the random strategy is flagged
//!    for manual inspection instead).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lgdl::autoformalize::{autoformalize, AttemptStatus, PromptBundle, PromptKind};
use lgdl::backend::{ChatBackend, HttpBackend, HttpConfig, LlmParams, ReplayBackend, WireFormat};
use lgdl::games::{canonical_game, strategy_source, GameId, StrategyId};
use lgdl::tournament::{
    match_rng, play_match, run_tournament, AgentSpec, MatchMaker, MatchSettings, TournamentConfig,
};
use lgdl::validate::{validate_pipeline, Level, SemanticMode, SemanticSummary};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_dataset, ScenarioRecord};

/// Which chat backend an experiment run uses.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    /// Recorded fixtures only; no network.
    Replay { fixtures: PathBuf },
    /// Live endpoint; the key is read from the named environment variable.
    Http {
        endpoint: String,
        #[serde(default = "default_key_env")]
        api_key_env: String,
        #[serde(default = "default_wire")]
        wire: WireFormat,
    },
}

fn default_key_env() -> String {
    "LGDL_API_KEY".to_string()
}

fn default_wire() -> WireFormat {
    WireFormat::ChatCompletions
}

impl BackendConfig {
    pub fn build(&self) -> Box<dyn ChatBackend> {
        match self {
            BackendConfig::Replay { fixtures } => Box::new(ReplayBackend::new(fixtures.clone())),
            BackendConfig::Http { endpoint, api_key_env, wire } => Box::new(HttpBackend::new(HttpConfig {
                endpoint: endpoint.clone(),
                api_key_env: api_key_env.clone(),
                wire: *wire,
                ..HttpConfig::default()
            })),
        }
    }
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: u8,
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub agents_per_game: u32,
    pub rounds: usize,
    pub seed: u64,
    pub strategies: Vec<StrategyId>,
    /// Game sources for the tournament experiment: canonical ids or paths
    /// to formalized programs.
    pub games: Vec<String>,
    pub llm: LlmParams,
    pub backend: BackendConfig,
    pub parallel: bool,
}

impl ExperimentConfig {
    /// The per-experiment defaults: scenario experiments run five agents
    /// per game over four scripted rounds of clone play; the tournament
    /// experiment runs six strategies round-robin (self included) for ten
    /// rounds; strategy formalization plays four rounds against the
    /// anti-mirroring clone (configurable up to the tournament length).
    pub fn defaults_for(experiment: u8) -> ExperimentConfig {
        let base = ExperimentConfig {
            experiment,
            dataset: PathBuf::from("datasets/sample"),
            out: PathBuf::from(format!("out/exp{experiment}")),
            agents_per_game: 5,
            rounds: 4,
            seed: 0,
            strategies: vec![StrategyId::TitForTat],
            games: GameId::ALL.iter().map(|g| g.code().to_string()).collect(),
            llm: LlmParams::default(),
            backend: BackendConfig::Replay { fixtures: PathBuf::from("fixtures") },
            parallel: false,
        };
        match experiment {
            3 => ExperimentConfig {
                agents_per_game: 1,
                rounds: 10,
                strategies: StrategyId::ALL.to_vec(),
                ..base
            },
            4 => ExperimentConfig {
                agents_per_game: 1,
                strategies: StrategyId::ALL
                    .into_iter()
                    .filter(|s| *s != StrategyId::TitForTat)
                    .collect(),
                ..base
            },
            _ => base,
        }
    }
}

/// Partial TOML overlay over the experiment defaults.
#[derive(Debug, Default, Deserialize)]
pub struct ConfigFile {
    pub experiment: Option<u8>,
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub agents_per_game: Option<u32>,
    pub rounds: Option<usize>,
    pub seed: Option<u64>,
    pub strategies: Option<Vec<String>>,
    pub games: Option<Vec<String>>,
    pub parallel: Option<bool>,
    pub llm: Option<LlmOverlay>,
    pub backend: Option<BackendConfig>,
}

#[derive(Debug, Default, Deserialize)]
pub struct LlmOverlay {
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub max_attempts: Option<u32>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error("cannot read game source {path}: {source}")]
    GameSource { path: String, source: std::io::Error },
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<ConfigFile, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Resolves the overlay against the defaults for `experiment`.
    pub fn resolve(self, experiment: u8) -> Result<ExperimentConfig, ExperimentError> {
        let mut cfg = ExperimentConfig::defaults_for(experiment);
        if let Some(exp) = self.experiment {
            if exp != experiment {
                return Err(ExperimentError::Config(format!(
                    "config file is for experiment {exp}, not {experiment}"
                )));
            }
        }
        if let Some(dataset) = self.dataset {
            cfg.dataset = dataset;
        }
        if let Some(out) = self.out {
            cfg.out = out;
        }
        if let Some(agents) = self.agents_per_game {
            cfg.agents_per_game = agents.max(1);
        }
        if let Some(rounds) = self.rounds {
            cfg.rounds = rounds;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(parallel) = self.parallel {
            cfg.parallel = parallel;
        }
        if let Some(games) = self.games {
            cfg.games = games;
        }
        if let Some(strategies) = self.strategies {
            cfg.strategies = strategies
                .iter()
                .map(|s| s.parse::<StrategyId>().map_err(ExperimentError::Config))
                .collect::<Result<_, _>>()?;
        }
        if let Some(llm) = self.llm {
            if let Some(model) = llm.model {
                cfg.llm.model = model;
            }
            if let Some(temperature) = llm.temperature {
                cfg.llm.temperature = temperature;
            }
            if let Some(tokens) = llm.max_output_tokens {
                cfg.llm.max_output_tokens = tokens;
            }
            if let Some(attempts) = llm.max_attempts {
                cfg.llm.max_attempts = attempts.max(1);
            }
        }
        if let Some(backend) = self.backend {
            cfg.backend = backend;
        }
        Ok(cfg)
    }
}

/// One line of the experiment report, one per scenario or strategy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    pub game_type: Option<GameId>,
    pub syntax_ok: bool,
    pub runtime_ok: bool,
    /// `None` marks rows needing manual inspection (the random strategy).
    pub semantic_ok: Option<bool>,
    pub manual_inspection: bool,
    pub attempts_used: u32,
    pub totals: Option<Vec<i64>>,
}

/// Everything an experiment produces before report emission.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub experiment: u8,
    pub rows: Vec<ReportRow>,
    /// Per agent run: how many attempts the loop used.
    pub attempt_counts: Vec<u32>,
    pub max_attempts: u32,
    /// strategy -> game -> normalized total payoff.
    pub heatmap: BTreeMap<String, BTreeMap<String, f64>>,
    pub round_logs: Vec<serde_json::Value>,
    pub warnings: Vec<String>,
    /// Non-LLM failures (bad config, missing fixtures, unreadable files).
    pub internal_errors: usize,
}

impl ExperimentOutput {
    fn new(experiment: u8, max_attempts: u32) -> ExperimentOutput {
        ExperimentOutput {
            experiment,
            rows: Vec::new(),
            attempt_counts: Vec::new(),
            max_attempts,
            heatmap: BTreeMap::new(),
            round_logs: Vec::new(),
            warnings: Vec::new(),
            internal_errors: 0,
        }
    }
}

/// Resolves a game entry: a canonical id or a path to a formalized source.
fn game_source(entry: &str) -> Result<(String, String), ExperimentError> {
    if let Ok(id) = entry.parse::<GameId>() {
        return Ok((id.code().to_string(), canonical_game(id).source.to_string()));
    }
    let path = Path::new(entry);
    let source = std::fs::read_to_string(path)
        .map_err(|source| ExperimentError::GameSource { path: entry.to_string(), source })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(entry).to_string();
    Ok((name, source))
}

/// The scenario-formalization experiments (numeric and non-numeric).
fn run_scenarios(cfg: &ExperimentConfig, backend: &dyn ChatBackend) -> Result<ExperimentOutput, ExperimentError> {
    let mut output = ExperimentOutput::new(cfg.experiment, cfg.llm.max_attempts);
    let numeric = cfg.experiment == 1;
    let (records, warnings) = load_dataset(&cfg.dataset)?;
    output.warnings = warnings;
    let scenarios: Vec<ScenarioRecord> =
        records.into_iter().filter(|r| r.numeric_payoffs == numeric).collect();
    let strategy = cfg.strategies.first().copied().unwrap_or(StrategyId::TitForTat);
    let strategy_src = strategy_source(strategy).source;

    struct ScenarioOutcome {
        row: ReportRow,
        attempts: Vec<u32>,
        logs: Vec<serde_json::Value>,
        internal_errors: usize,
    }

    let run_one = |scenario: &ScenarioRecord| -> ScenarioOutcome {
        let bundle = PromptBundle::for_game(&scenario.description);
        let mode = if numeric {
            SemanticMode::Exact(scenario.targets.clone().expect("numeric scenarios carry targets"))
        } else {
            SemanticMode::Constraint(scenario.game_type)
        };
        let mut attempts = Vec::new();
        let mut logs = Vec::new();
        let mut internal_errors = 0usize;
        let mut all_syntax = true;
        let mut all_runtime = true;
        let mut all_semantic = true;
        let mut max_attempts_used = 0u32;
        let mut totals: Option<Vec<i64>> = None;

        for agent_index in 0..cfg.agents_per_game {
            match autoformalize(&bundle, PromptKind::Game, backend, &cfg.llm) {
                Ok(log) => {
                    let used = log.attempts.len() as u32;
                    attempts.push(used);
                    max_attempts_used = max_attempts_used.max(used);
                    match &log.status {
                        AttemptStatus::Success { code, .. } => {
                            let outcome = validate_pipeline(code, strategy_src, cfg.rounds, &mode);
                            all_syntax &= outcome.syntax_ok();
                            all_runtime &= outcome.runtime_ok();
                            all_semantic &= outcome.semantic_ok();
                            if let Some(SemanticSummary::Exact(exact)) = &outcome.semantic {
                                if let Some((row_total, col_total)) = exact.actual_totals {
                                    totals.get_or_insert_with(|| vec![row_total, col_total]);
                                }
                            }
                            if outcome.level != Level::Syntax && agent_index == 0 {
                                logs.extend(clone_match_log(&scenario.id, code, strategy_src, cfg));
                            }
                        }
                        AttemptStatus::Exhausted => {
                            all_syntax = false;
                            all_runtime = false;
                            all_semantic = false;
                        }
                    }
                }
                Err(e) => {
                    internal_errors += 1;
                    all_syntax = false;
                    all_runtime = false;
                    all_semantic = false;
                    attempts.push(cfg.llm.max_attempts);
                    max_attempts_used = max_attempts_used.max(cfg.llm.max_attempts);
                    logs.push(serde_json::json!({
                        "scenario": scenario.id,
                        "agent": agent_index,
                        "error": e.to_string(),
                    }));
                }
            }
        }
        let runtime_ok = all_syntax && all_runtime;
        let semantic_ok = runtime_ok && all_semantic;
        ScenarioOutcome {
            row: ReportRow {
                id: scenario.id.clone(),
                game_type: Some(scenario.game_type),
                syntax_ok: all_syntax,
                runtime_ok,
                semantic_ok: Some(semantic_ok),
                manual_inspection: false,
                attempts_used: max_attempts_used,
                totals,
            },
            attempts,
            logs,
            internal_errors,
        }
    };

    let outcomes: Vec<ScenarioOutcome> = if cfg.parallel {
        scenarios.par_iter().map(run_one).collect()
    } else {
        scenarios.iter().map(run_one).collect()
    };
    for outcome in outcomes {
        output.rows.push(outcome.row);
        output.attempt_counts.extend(outcome.attempts);
        output.round_logs.extend(outcome.logs);
        output.internal_errors += outcome.internal_errors;
    }
    Ok(output)
}

/// One scripted clone match for the round log.
fn clone_match_log(
    scenario_id: &str,
    game_src: &str,
    strategy_src: &str,
    cfg: &ExperimentConfig,
) -> Vec<serde_json::Value> {
    let spec = AgentSpec::new(scenario_id, game_src, strategy_src, "scenario");
    let clone = spec.clone_as(format!("{scenario_id}.clone"));
    let settings = MatchSettings { rounds: cfg.rounds, schedule: None };
    let mut rng_a = match_rng(cfg.seed, 0, 0);
    let mut rng_b = match_rng(cfg.seed, 0, 1);
    let result = play_match(&spec, &clone, &settings, &mut rng_a, &mut rng_b);
    result
        .rounds
        .iter()
        .map(|round| {
            serde_json::json!({
                "scenario": scenario_id,
                "round": round.round,
                "row_move": round.row_move.to_string(),
                "col_move": round.col_move.to_string(),
                "row_payoff": round.row_payoff,
                "col_payoff": round.col_payoff,
            })
        })
        .collect()
}

/// The tournament experiment over predefined or formalized games.
fn run_tournaments(cfg: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let mut output = ExperimentOutput::new(cfg.experiment, cfg.llm.max_attempts);
    for entry in &cfg.games {
        let (game_name, source) = game_source(entry)?;
        let pool: Vec<AgentSpec> = cfg
            .strategies
            .iter()
            .map(|s| AgentSpec::new(s.code(), source.clone(), strategy_source(*s).source, s.code()))
            .collect();
        let tournament_cfg = TournamentConfig {
            rounds: cfg.rounds,
            match_maker: MatchMaker::RoundRobin { include_self: true },
            seed: cfg.seed,
            schedule: None,
            parallel: cfg.parallel,
        };
        let result = run_tournament(&pool, &tournament_cfg)
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        output.internal_errors += result.error_count;
        for played in &result.matches {
            for round in &played.result.rounds {
                output.round_logs.push(serde_json::json!({
                    "game": game_name,
                    "match": played.index,
                    "a": played.result.a_id,
                    "b": played.result.b_id,
                    "round": round.round,
                    "row_move": round.row_move.to_string(),
                    "col_move": round.col_move.to_string(),
                    "row_payoff": round.row_payoff,
                    "col_payoff": round.col_payoff,
                }));
            }
        }
        for (agent, total) in &result.totals {
            let normalized = result.normalized.get(agent).map(|n| n.as_f64());
            output
                .heatmap
                .entry(agent.clone())
                .or_default()
                .insert(game_name.clone(), normalized.unwrap_or(f64::NAN));
            output.rows.push(ReportRow {
                id: format!("{game_name}:{agent}"),
                game_type: entry.parse::<GameId>().ok(),
                syntax_ok: true,
                runtime_ok: result.error_count == 0,
                semantic_ok: Some(result.error_count == 0),
                manual_inspection: false,
                attempts_used: 0,
                totals: Some(vec![*total]),
            });
        }
    }
    output.rows.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(output)
}

/// The strategy-formalization experiment: generated strategies mount on the
/// predefined dilemma and face the anti-mirroring clone; totals must equal
/// what the reference strategy scores under the same seeds.
fn run_strategy_formalization(
    cfg: &ExperimentConfig,
    backend: &dyn ChatBackend,
) -> Result<ExperimentOutput, ExperimentError> {
    let mut output = ExperimentOutput::new(cfg.experiment, cfg.llm.max_attempts);
    let game_src = canonical_game(GameId::Pd).source;
    let opponent = AgentSpec::new(
        "anti_tit_for_tat",
        game_src,
        strategy_source(StrategyId::AntiTitForTat).source,
        "anti_tit_for_tat",
    );
    let settings = MatchSettings { rounds: cfg.rounds, schedule: None };

    for (index, strategy) in cfg.strategies.iter().enumerate() {
        let reference = strategy_source(*strategy);
        let manual = *strategy == StrategyId::Random;

        // The oracle: what the reference strategy scores under these seeds.
        let reference_spec = AgentSpec::new("reference", game_src, reference.source, reference.id.code());
        let mut rng_a = match_rng(cfg.seed, index as u64, 0);
        let mut rng_b = match_rng(cfg.seed, index as u64, 1);
        let reference_result = play_match(&reference_spec, &opponent, &settings, &mut rng_a, &mut rng_b);
        let target_totals = reference_result.totals;

        let bundle = PromptBundle::for_strategy(reference.nl_description);
        let mut row = ReportRow {
            id: strategy.code().to_string(),
            game_type: Some(GameId::Pd),
            syntax_ok: false,
            runtime_ok: false,
            semantic_ok: Some(false),
            manual_inspection: manual,
            attempts_used: 0,
            totals: None,
        };
        match autoformalize(&bundle, PromptKind::Strategy, backend, &cfg.llm) {
            Ok(log) => {
                row.attempts_used = log.attempts.len() as u32;
                output.attempt_counts.push(row.attempts_used);
                if let AttemptStatus::Success { code, .. } = &log.status {
                    row.syntax_ok = true;
                    let agent = AgentSpec::new(strategy.code(), game_src, code.clone(), strategy.code());
                    let mut rng_a = match_rng(cfg.seed, index as u64, 0);
                    let mut rng_b = match_rng(cfg.seed, index as u64, 1);
                    let result = play_match(&agent, &opponent, &settings, &mut rng_a, &mut rng_b);
                    row.runtime_ok = result.error.is_none() && result.rounds.len() == cfg.rounds;
                    row.totals = Some(vec![result.totals.0, result.totals.1]);
                    row.semantic_ok = if manual {
                        None
                    } else {
                        Some(row.runtime_ok && result.totals == target_totals)
                    };
                    for round in &result.rounds {
                        output.round_logs.push(serde_json::json!({
                            "strategy": strategy.code(),
                            "round": round.round,
                            "row_move": round.row_move.to_string(),
                            "col_move": round.col_move.to_string(),
                            "row_payoff": round.row_payoff,
                            "col_payoff": round.col_payoff,
                        }));
                    }
                }
            }
            Err(e) => {
                output.internal_errors += 1;
                output.attempt_counts.push(cfg.llm.max_attempts);
                row.attempts_used = cfg.llm.max_attempts;
                output.warnings.push(format!("{}: {e}", strategy.code()));
            }
        }
        output.rows.push(row);
    }
    output.rows.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(output)
}

/// Runs the configured experiment against a backend.
pub fn run_experiment(cfg: &ExperimentConfig, backend: &dyn ChatBackend) -> Result<ExperimentOutput, ExperimentError> {
    match cfg.experiment {
        1 | 2 => run_scenarios(cfg, backend),
        3 => run_tournaments(cfg),
        4 => run_strategy_formalization(cfg, backend),
        other => Err(ExperimentError::Config(format!("unknown experiment {other} (expected 1..=4)"))),
    }
}
