//! The `lgdl` command: check sources, play matches, run tournaments,
//! validate formalizations, drive the formalization loop, and run the four
//! experiments.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use lgdl::autoformalize::{autoformalize, AttemptStatus, PromptBundle, PromptKind};
use lgdl::backend::{ChatBackend, HttpBackend, HttpConfig, LlmParams, ReplayBackend, WireFormat};
use lgdl::games::{canonical_game, strategy_source, GameId, StrategyId};
use lgdl::tournament::{
    match_rng, play_match, run_tournament, summary_json, write_round_log, AgentSpec, MatchMaker, MatchSettings,
    TournamentConfig,
};
use lgdl::validate::{check_syntax, validate_pipeline, Level, SemanticMode};
use lgdl_cli::dataset::load_dataset;
use lgdl_cli::experiment::{run_experiment, ConfigFile, ExperimentConfig};
use lgdl_cli::report::emit_reports;

#[derive(Parser)]
#[command(name = "lgdl", version, about = "Logic-program game descriptions: check, play, validate, formalize")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Exact,
    Constraint,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Replay,
    Http,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Game,
    Strategy,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a source file and consult it against the prelude.
    Check {
        /// Path to a .lgdl source file.
        file: PathBuf,
    },
    /// Play one match between two strategies on a game.
    Play {
        /// Canonical game id (pd, hd, sh, bos, mp) or a path to a .lgdl file.
        game: String,
        /// First (row) strategy: id or path.
        strat_a: String,
        /// Second (col) strategy: id or path.
        strat_b: String,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a tournament described by a TOML config file.
    Tournament {
        config: PathBuf,
    },
    /// Validate a formalized game against a scenario's metadata.
    Validate {
        /// Path to the scenario sidecar (<id>.json, with <id>.txt beside it).
        scenario: PathBuf,
        /// The formalized program to validate; defaults to <id>.lgdl
        /// next to the scenario.
        #[arg(long)]
        program: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Strategy used for the runtime clone match.
        #[arg(long, default_value = "tit_for_tat")]
        strategy: String,
        #[arg(long, default_value_t = 4)]
        rounds: usize,
    },
    /// Formalize a scenario's description through a chat backend.
    Autoformalize {
        /// Path to the scenario sidecar (<id>.json, with <id>.txt beside it).
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "replay")]
        backend: BackendArg,
        /// Fixture directory for the replay backend.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Endpoint URL for the http backend.
        #[arg(long)]
        endpoint: Option<String>,
        /// Environment variable holding the API key (http backend).
        #[arg(long, default_value = "LGDL_API_KEY")]
        api_key_env: String,
        #[arg(long, default_value = "")]
        model: String,
        #[arg(long, value_enum, default_value = "game")]
        kind: KindArg,
        /// Where to write the accepted program (default <id>.generated.lgdl).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the four experiments.
    Experiment {
        /// Experiment number: 1 (numeric scenarios), 2 (non-numeric),
        /// 3 (strategy tournaments), 4 (strategy formalization).
        number: u8,
        /// TOML config overriding the experiment defaults.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Resolves a game argument: canonical id or path to a source file.
fn resolve_game(arg: &str) -> Result<(String, String)> {
    if let Ok(id) = arg.parse::<GameId>() {
        return Ok((id.code().to_string(), canonical_game(id).source.to_string()));
    }
    let source = std::fs::read_to_string(arg).with_context(|| format!("cannot read game source {arg}"))?;
    let name = Path::new(arg).file_stem().and_then(|s| s.to_str()).unwrap_or(arg).to_string();
    Ok((name, source))
}

/// Resolves a strategy argument: reference id or path to a source file.
fn resolve_strategy(arg: &str) -> Result<(String, String)> {
    if let Ok(id) = arg.parse::<StrategyId>() {
        return Ok((id.code().to_string(), strategy_source(id).source.to_string()));
    }
    let source = std::fs::read_to_string(arg).with_context(|| format!("cannot read strategy source {arg}"))?;
    let name = Path::new(arg).file_stem().and_then(|s| s.to_str()).unwrap_or(arg).to_string();
    Ok((name, source))
}

fn cmd_check(file: &Path) -> Result<ExitCode> {
    let source = std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    let report = check_syntax(&source);
    if report.valid {
        let clause_count = lgdl::parse_program(&source).map(|p| p.clauses().len()).unwrap_or(0);
        println!("{}: ok ({clause_count} clauses)", file.display());
        Ok(ExitCode::SUCCESS)
    } else {
        for error in &report.errors {
            eprintln!("{}:{error}", file.display());
        }
        eprintln!("{}: {} errors", file.display(), report.errors.len());
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_play(game: &str, strat_a: &str, strat_b: &str, rounds: usize, seed: u64) -> Result<ExitCode> {
    let (game_name, game_src) = resolve_game(game)?;
    let (name_a, src_a) = resolve_strategy(strat_a)?;
    let (name_b, src_b) = resolve_strategy(strat_b)?;
    let a = AgentSpec::new(name_a.clone(), game_src.clone(), src_a, name_a.clone());
    let b = AgentSpec::new(format!("{name_b}#2"), game_src, src_b, name_b.clone());
    let settings = MatchSettings { rounds, schedule: None };
    let mut rng_a = match_rng(seed, 0, 0);
    let mut rng_b = match_rng(seed, 0, 1);
    let result = play_match(&a, &b, &settings, &mut rng_a, &mut rng_b);
    println!("match on {game_name}: {} vs {} ({rounds} rounds, seed {seed})", a.agent_id, b.agent_id);
    for round in &result.rounds {
        println!(
            "round {}: {} {} -> {} {}",
            round.round, round.row_move, round.col_move, round.row_payoff, round.col_payoff
        );
    }
    println!("totals: {} {}", result.totals.0, result.totals.1);
    if let Some(error) = &result.error {
        eprintln!("aborted at round {}: {} ({})", error.round, error.detail, error.kind);
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Debug, Deserialize)]
struct TournamentFile {
    game: String,
    #[serde(default)]
    strategies: Option<Vec<String>>,
    #[serde(default)]
    rounds: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    match_maker: Option<String>,
    #[serde(default)]
    include_self: Option<bool>,
    #[serde(default)]
    pairs: Option<Vec<(String, String)>>,
    #[serde(default)]
    parallel: Option<bool>,
    #[serde(default)]
    out: Option<PathBuf>,
}

fn cmd_tournament(config_path: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("cannot read {}", config_path.display()))?;
    let file: TournamentFile = toml::from_str(&text).context("invalid tournament config")?;
    let (game_name, game_src) = resolve_game(&file.game)?;
    let strategy_names = file
        .strategies
        .unwrap_or_else(|| StrategyId::ALL.iter().map(|s| s.code().to_string()).collect());
    let mut pool = Vec::new();
    for name in &strategy_names {
        let (label, src) = resolve_strategy(name)?;
        pool.push(AgentSpec::new(label.clone(), game_src.clone(), src, label));
    }
    let match_maker = match file.match_maker.as_deref() {
        Some("clone") => MatchMaker::Clone,
        Some("explicit") => MatchMaker::Explicit { pairs: file.pairs.clone().unwrap_or_default() },
        Some("round_robin") | None => MatchMaker::RoundRobin { include_self: file.include_self.unwrap_or(true) },
        Some(other) => bail!("unknown match_maker `{other}`"),
    };
    let cfg = TournamentConfig {
        rounds: file.rounds.unwrap_or(10),
        match_maker,
        seed: file.seed.unwrap_or(0),
        schedule: None,
        parallel: file.parallel.unwrap_or(false),
    };
    let result = run_tournament(&pool, &cfg).map_err(|e| anyhow!("{e}"))?;

    let out_dir = file.out.unwrap_or_else(|| PathBuf::from(format!("out/tournament-{game_name}")));
    std::fs::create_dir_all(&out_dir)?;
    let mut log = std::fs::File::create(out_dir.join("rounds.jsonl"))?;
    write_round_log(&result, &mut log)?;
    std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&summary_json(&result))?)?;

    println!("{game_name}: {} matches, {} errors", result.matches.len(), result.error_count);
    for (agent, total) in &result.totals {
        match result.normalized.get(agent) {
            Some(n) => println!("  {agent}: total {total} (normalized {:.4})", n.as_f64()),
            None => println!("  {agent}: total {total}"),
        }
    }
    println!("logs written to {}", out_dir.display());
    Ok(if result.error_count == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn load_scenario(path: &Path) -> Result<lgdl_cli::ScenarioRecord> {
    let dir = path.parent().map(Path::to_path_buf).filter(|p| !p.as_os_str().is_empty()).unwrap_or_else(|| PathBuf::from("."));
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| anyhow!("scenario path has no file stem"))?;
    let (records, warnings) = load_dataset(&dir)?;
    for warning in &warnings {
        eprintln!("warning: {warning}");
    }
    records
        .into_iter()
        .find(|r| r.id == stem)
        .ok_or_else(|| anyhow!("scenario `{stem}` not found in {}", dir.display()))
}

fn cmd_validate(
    scenario_path: &Path,
    program: Option<PathBuf>,
    mode: ModeArg,
    strategy: &str,
    rounds: usize,
) -> Result<ExitCode> {
    let scenario = load_scenario(scenario_path)?;
    let program_path = program.unwrap_or_else(|| scenario_path.with_extension("lgdl"));
    let game_src = std::fs::read_to_string(&program_path)
        .with_context(|| format!("cannot read program {}", program_path.display()))?;
    let (_, strategy_src) = resolve_strategy(strategy)?;
    let semantic = match mode {
        ModeArg::Exact => {
            let targets = scenario
                .targets
                .clone()
                .ok_or_else(|| anyhow!("scenario `{}` has no targets; use --mode constraint", scenario.id))?;
            SemanticMode::Exact(targets)
        }
        ModeArg::Constraint => SemanticMode::Constraint(scenario.game_type),
    };
    let outcome = validate_pipeline(&game_src, &strategy_src, rounds, &semantic);
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    Ok(if outcome.level == Level::Valid { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

#[allow(clippy::too_many_arguments)]
fn cmd_autoformalize(
    scenario_path: &Path,
    backend_arg: BackendArg,
    fixtures: Option<PathBuf>,
    endpoint: Option<String>,
    api_key_env: String,
    model: String,
    kind: KindArg,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let scenario = load_scenario(scenario_path)?;
    let backend: Box<dyn ChatBackend> = match backend_arg {
        BackendArg::Replay => {
            let dir = fixtures.ok_or_else(|| anyhow!("--fixtures is required with --backend replay"))?;
            Box::new(ReplayBackend::new(dir))
        }
        BackendArg::Http => {
            let endpoint = endpoint.ok_or_else(|| anyhow!("--endpoint is required with --backend http"))?;
            Box::new(HttpBackend::new(HttpConfig {
                endpoint,
                api_key_env,
                wire: WireFormat::ChatCompletions,
                ..HttpConfig::default()
            }))
        }
    };
    let params = LlmParams { model, ..LlmParams::default() };
    let (bundle, prompt_kind) = match kind {
        KindArg::Game => (PromptBundle::for_game(&scenario.description), PromptKind::Game),
        KindArg::Strategy => (PromptBundle::for_strategy(&scenario.description), PromptKind::Strategy),
    };
    let log = autoformalize(&bundle, prompt_kind, backend.as_ref(), &params)
        .map_err(|e| anyhow!("formalization aborted: {e}"))?;
    for attempt in &log.attempts {
        println!(
            "attempt {}: {} (digest {})",
            attempt.attempt,
            if attempt.syntax.valid { "valid" } else { "invalid" },
            &attempt.request_digest[..12]
        );
    }
    match &log.status {
        AttemptStatus::Success { code, attempts_used } => {
            let out_path = out.unwrap_or_else(|| scenario_path.with_extension("generated.lgdl"));
            std::fs::write(&out_path, code)?;
            println!("success after {attempts_used} attempt(s); program written to {}", out_path.display());
            Ok(ExitCode::SUCCESS)
        }
        AttemptStatus::Exhausted => {
            eprintln!("unable to generate valid clauses within {} attempts", log.attempts.len());
            Ok(ExitCode::from(3))
        }
    }
}

fn cmd_experiment(number: u8, config: Option<PathBuf>) -> Result<ExitCode> {
    let cfg: ExperimentConfig = match config {
        Some(path) => {
            let text =
                std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
            ConfigFile::parse(&text)?.resolve(number)?
        }
        None => ExperimentConfig::defaults_for(number),
    };
    let backend = cfg.backend.build();
    let output = run_experiment(&cfg, backend.as_ref())?;
    for warning in &output.warnings {
        eprintln!("warning: {warning}");
    }
    let written = emit_reports(&output, &cfg.out)?;
    println!(
        "experiment {number}: {} rows, {} internal errors",
        output.rows.len(),
        output.internal_errors
    );
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(if output.internal_errors == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { file } => cmd_check(&file),
        Command::Play { game, strat_a, strat_b, rounds, seed } => {
            cmd_play(&game, &strat_a, &strat_b, rounds, seed)
        }
        Command::Tournament { config } => cmd_tournament(&config),
        Command::Validate { scenario, program, mode, strategy, rounds } => {
            cmd_validate(&scenario, program, mode, &strategy, rounds)
        }
        Command::Autoformalize { scenario, backend, fixtures, endpoint, api_key_env, model, kind, out } => {
            cmd_autoformalize(&scenario, backend, fixtures, endpoint, api_key_env, model, kind, out)
        }
        Command::Experiment { number, config } => cmd_experiment(number, config),
    };
    match result {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}
