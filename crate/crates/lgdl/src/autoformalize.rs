//! One-shot formalization with bounded self-correction.
//!
//! The loop: build a prompt from the prelude, one exemplar pair, and the
//! target description; ask the backend; extract code from the reply; check
//! its syntax; on failure, feed the model the full previous code together
//! with every error message and its verbatim offending line, and retry.
//! After `max_attempts` completions the run is reported exhausted.
//!
//! Each attempt is a fresh conversation: the feedback prompt carries the
//! latest code and trace rather than a growing chat history. Prompt wording
//! lives in the versioned `prompts/*.txt` templates.

use serde::{Deserialize, Serialize};

use crate::backend::{request_digest, BackendError, ChatBackend, ChatMessage, LlmParams};
use crate::error::{EngineError, ErrorKind};
use crate::games::{canonical_game, strategy_source, GameId, StrategyId};
use crate::solver::PRELUDE_SRC;
use crate::validate::{check_syntax, SyntaxReport};

const GAME_SYSTEM: &str = include_str!("../prompts/game_system.txt");
const GAME_USER: &str = include_str!("../prompts/game_user.txt");
const STRATEGY_SYSTEM: &str = include_str!("../prompts/strategy_system.txt");
const STRATEGY_USER: &str = include_str!("../prompts/strategy_user.txt");
const SELF_CORRECT_SYSTEM: &str = include_str!("../prompts/self_correct_system.txt");
const SELF_CORRECT_USER: &str = include_str!("../prompts/self_correct_user.txt");

/// Everything a one-shot prompt needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    /// Game-independent clauses the solver already loads.
    pub gamma: String,
    /// Natural language description of the exemplar.
    pub nl_example: String,
    /// The exemplar's formalization.
    pub code_example: String,
    /// The description to formalize.
    pub nl_target: String,
}

impl PromptBundle {
    /// Bundle for formalizing a game, with the shipped dilemma exemplar.
    pub fn for_game(nl_target: impl Into<String>) -> PromptBundle {
        let exemplar = canonical_game(GameId::Pd);
        PromptBundle {
            gamma: PRELUDE_SRC.to_string(),
            nl_example: exemplar.description.to_string(),
            code_example: exemplar.source.to_string(),
            nl_target: nl_target.into(),
        }
    }

    /// Bundle for formalizing a strategy, with the mirroring exemplar.
    pub fn for_strategy(nl_target: impl Into<String>) -> PromptBundle {
        let exemplar = strategy_source(StrategyId::TitForTat);
        PromptBundle {
            gamma: PRELUDE_SRC.to_string(),
            nl_example: exemplar.nl_description.to_string(),
            code_example: exemplar.source.to_string(),
            nl_target: nl_target.into(),
        }
    }

    fn check(&self) -> Result<(), PromptError> {
        for (name, value) in [
            ("gamma", &self.gamma),
            ("nl_example", &self.nl_example),
            ("code_example", &self.code_example),
            ("nl_target", &self.nl_target),
        ] {
            if value.trim().is_empty() {
                return Err(PromptError::EmptyField(name));
            }
        }
        Ok(())
    }
}

/// Whether a bundle formalizes game rules or a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Game,
    Strategy,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("prompt bundle field `{0}` is empty")]
    EmptyField(&'static str),
    #[error("self-correction needs an invalid syntax report")]
    ReportIsValid,
}

fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (name, value) in pairs {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

fn build_prompt(bundle: &PromptBundle, system: &str, user: &str) -> Result<Vec<ChatMessage>, PromptError> {
    bundle.check()?;
    let user = fill(
        user,
        &[
            ("gamma", &bundle.gamma),
            ("nl_example", &bundle.nl_example),
            ("code_example", &bundle.code_example),
            ("nl_target", &bundle.nl_target),
        ],
    );
    Ok(vec![ChatMessage::system(system.trim_end()), ChatMessage::user(user)])
}

/// The one-shot prompt for formalizing game rules.
pub fn build_game_prompt(bundle: &PromptBundle) -> Result<Vec<ChatMessage>, PromptError> {
    build_prompt(bundle, GAME_SYSTEM, GAME_USER)
}

/// The one-shot prompt for formalizing a strategy.
pub fn build_strategy_prompt(bundle: &PromptBundle) -> Result<Vec<ChatMessage>, PromptError> {
    build_prompt(bundle, STRATEGY_SYSTEM, STRATEGY_USER)
}

/// Formats the error section of a feedback prompt: every message plus its
/// verbatim offending line; end-of-file errors also quote the final three
/// lines of the code, since those errors alone give the model no anchor.
fn describe_errors(code: &str, errors: &[EngineError]) -> String {
    let mut out = String::new();
    for error in errors {
        out.push_str(&format!("- {}: {}\n", error.kind.label(), error.message));
        if let Some(line) = error.offending_line() {
            out.push_str(&format!("  offending line: {line}\n"));
        }
        if error.message.contains("end of file") {
            let tail: Vec<&str> = code.lines().rev().take(3).collect();
            out.push_str("  final lines of the program:\n");
            for line in tail.iter().rev() {
                out.push_str(&format!("    {line}\n"));
            }
        }
    }
    out
}

/// Builds the self-correction prompt: the full previous code, each error
/// message, and each offending line, as a fresh conversation.
pub fn self_correct_prompt(code: &str, report: &SyntaxReport) -> Result<Vec<ChatMessage>, PromptError> {
    if report.valid {
        return Err(PromptError::ReportIsValid);
    }
    let errors = describe_errors(code, &report.errors);
    let user = fill(SELF_CORRECT_USER, &[("code", code), ("errors", &errors)]);
    Ok(vec![ChatMessage::system(SELF_CORRECT_SYSTEM.trim_end()), ChatMessage::user(user)])
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("empty_code: the response contains nothing clause-like")]
    EmptyCode,
}

fn looks_like_clause_start(line: &str) -> bool {
    let trimmed = line.trim_start();
    if trimmed.starts_with('%') || trimmed.starts_with('\'') {
        return true;
    }
    let mut chars = trimmed.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    let rest = chars.as_str();
    let after_ident = rest.trim_start_matches(|c: char| c.is_ascii_alphanumeric() || c == '_');
    let after = after_ident.trim_start();
    after.starts_with('(') || after.starts_with('.') || after.is_empty() && trimmed.ends_with('.')
        || after == "if"
        || after.starts_with("if ")
}

fn line_can_end_code(line: &str) -> bool {
    let trimmed = line.trim();
    trimmed.starts_with('%') || trimmed.ends_with('.')
}

/// Pulls program text out of a model response: fenced code blocks when
/// present (concatenated), otherwise the whole reply with leading and
/// trailing prose stripped.
pub fn extract_code(response: &str) -> Result<String, ExtractError> {
    let mut fenced: Vec<String> = Vec::new();
    let mut inside = false;
    let mut current = String::new();
    for line in response.lines() {
        if line.trim_start().starts_with("```") {
            if inside {
                fenced.push(current.clone());
                current.clear();
            }
            inside = !inside;
            continue;
        }
        if inside {
            current.push_str(line);
            current.push('\n');
        }
    }
    let body = if fenced.is_empty() { response.to_string() } else { fenced.join("\n") };

    let lines: Vec<&str> = body.lines().collect();
    let first = lines.iter().position(|l| looks_like_clause_start(l));
    let last = lines.iter().rposition(|l| line_can_end_code(l));
    match (first, last) {
        (Some(first), Some(last)) if first <= last => {
            let code = lines[first..=last].join("\n");
            if code.trim().is_empty() {
                Err(ExtractError::EmptyCode)
            } else {
                Ok(code)
            }
        }
        _ => Err(ExtractError::EmptyCode),
    }
}

/// One generation attempt and its syntax check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: u32,
    pub request_digest: String,
    pub raw_response: String,
    /// `None` when no code could be extracted from the response.
    pub extracted: Option<String>,
    pub syntax: SyntaxReport,
}

/// How the loop ended.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AttemptStatus {
    Success { code: String, attempts_used: u32 },
    /// Unable to generate valid clauses within the attempt budget.
    Exhausted,
}

/// The full record of one formalization run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttemptLog {
    pub attempts: Vec<AttemptRecord>,
    pub status: AttemptStatus,
}

impl AttemptLog {
    pub fn succeeded(&self) -> bool {
        matches!(self.status, AttemptStatus::Success { .. })
    }

    pub fn attempts_used(&self) -> u32 {
        self.attempts.len() as u32
    }

    /// The accepted code, when the run succeeded.
    pub fn code(&self) -> Option<&str> {
        match &self.status {
            AttemptStatus::Success { code, .. } => Some(code),
            AttemptStatus::Exhausted => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AutoformalizeError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    /// The backend failed; the partial log is preserved.
    #[error("backend error on attempt {}: {source}", log.attempts.len() + 1)]
    Backend { source: BackendError, log: AttemptLog },
}

/// The exact messages the loop sends for its next attempt: the one-shot
/// prompt when there is no previous attempt, otherwise the self-correction
/// prompt over the previous code and its report.
pub fn attempt_messages(
    bundle: &PromptBundle,
    kind: PromptKind,
    previous: Option<(&str, &SyntaxReport)>,
) -> Result<Vec<ChatMessage>, PromptError> {
    match previous {
        None => match kind {
            PromptKind::Game => build_game_prompt(bundle),
            PromptKind::Strategy => build_strategy_prompt(bundle),
        },
        Some((code, report)) => self_correct_prompt(code, report),
    }
}

/// Extraction plus syntax check for one raw response. A response with no
/// extractable code yields an invalid report carrying the extraction
/// message, and the raw text becomes the basis for feedback.
fn evaluate_response(raw: &str, attempt: u32) -> (Option<String>, SyntaxReport) {
    match extract_code(raw) {
        Ok(code) => {
            let mut report = check_syntax(&code);
            report.attempts_used = attempt;
            (Some(code), report)
        }
        Err(e) => {
            let message = e.to_string();
            let report = SyntaxReport {
                valid: false,
                attempts_used: attempt,
                errors: vec![EngineError { kind: ErrorKind::Parse, message: message.clone(), location: None }],
                trace: message,
            };
            (None, report)
        }
    }
}

/// Runs the translate / check / self-correct loop. Issues at most
/// `params.max_attempts` completions; every success re-checks cleanly by
/// construction (the accepted code is exactly what passed `check_syntax`).
pub fn autoformalize(
    bundle: &PromptBundle,
    kind: PromptKind,
    backend: &dyn ChatBackend,
    params: &LlmParams,
) -> Result<AttemptLog, AutoformalizeError> {
    let mut log = AttemptLog { attempts: Vec::new(), status: AttemptStatus::Exhausted };
    let mut previous: Option<(String, SyntaxReport)> = None;

    for attempt in 1..=params.max_attempts.max(1) {
        let messages = attempt_messages(bundle, kind, previous.as_ref().map(|(c, r)| (c.as_str(), r)))?;
        let digest = request_digest(&messages, params);
        let raw = match backend.complete(&messages, params) {
            Ok(raw) => raw,
            Err(source) => return Err(AutoformalizeError::Backend { source, log }),
        };

        let (code, report) = evaluate_response(&raw, attempt);
        log.attempts.push(AttemptRecord {
            attempt,
            request_digest: digest,
            raw_response: raw.clone(),
            extracted: code.clone(),
            syntax: report.clone(),
        });
        if report.valid {
            let code = code.expect("a valid report implies extracted code");
            log.status = AttemptStatus::Success { code, attempts_used: attempt };
            return Ok(log);
        }
        previous = Some((code.unwrap_or(raw), report));
    }
    Ok(log)
}

/// Seeds a replay store with a scripted exchange: response `n` answers the
/// request the loop will actually send on attempt `n`, chaining each
/// feedback prompt off the previous response exactly as `autoformalize`
/// does. Returns the digests in attempt order.
pub fn seed_replay_fixtures(
    dir: &std::path::Path,
    bundle: &PromptBundle,
    kind: PromptKind,
    params: &LlmParams,
    responses: &[&str],
) -> Result<Vec<String>, AutoformalizeError> {
    let mut digests = Vec::new();
    let mut previous: Option<(String, SyntaxReport)> = None;
    for (index, raw) in responses.iter().enumerate() {
        let messages = attempt_messages(bundle, kind, previous.as_ref().map(|(c, r)| (c.as_str(), r)))?;
        crate::backend::store_fixture(dir, &messages, params, raw)
            .map_err(|source| AutoformalizeError::Backend {
                source,
                log: AttemptLog { attempts: Vec::new(), status: AttemptStatus::Exhausted },
            })?;
        digests.push(request_digest(&messages, params));
        let (code, report) = evaluate_response(raw, (index + 1) as u32);
        previous = Some((code.unwrap_or_else(|| raw.to_string()), report));
    }
    Ok(digests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{LlmParams, ReplayBackend};
    use crate::games::canonical_game;

    #[test]
    fn game_prompts_are_deterministic() {
        let bundle = PromptBundle::for_game("Two rivals pick their campaign tone in secret.");
        let first = build_game_prompt(&bundle).unwrap();
        let second = build_game_prompt(&bundle).unwrap();
        assert_eq!(first, second);
        let params = LlmParams::default();
        assert_eq!(request_digest(&first, &params), request_digest(&second, &params));
        let user = &first[1].content;
        assert!(user.contains(&bundle.gamma.trim_end()[..20]));
        assert!(user.contains(&bundle.nl_target));
        assert!(!user.contains("{gamma}"));
    }

    #[test]
    fn game_and_strategy_prompts_differ_only_in_framing() {
        let game = build_game_prompt(&PromptBundle::for_game("target")).unwrap();
        let strategy = build_strategy_prompt(&PromptBundle::for_strategy("target")).unwrap();
        assert_eq!(game.len(), strategy.len());
        assert_ne!(game[0].content, strategy[0].content);
        assert_ne!(game[1].content, strategy[1].content);
    }

    #[test]
    fn empty_target_is_a_precondition_violation() {
        let bundle = PromptBundle::for_game("");
        assert_eq!(build_game_prompt(&bundle).unwrap_err(), PromptError::EmptyField("nl_target"));
    }

    #[test]
    fn extract_takes_fenced_blocks() {
        let response = "Here you go:\n```prolog\npayoff('C','C',3,3).\n```\nHope this helps!";
        assert_eq!(extract_code(response).unwrap(), "payoff('C','C',3,3).");
    }

    #[test]
    fn extract_strips_leading_and_trailing_prose() {
        let response = "Sure thing, the clauses are:\ninitial(s0).\npayoff('C','C',3,3).\nHope this helps!";
        assert_eq!(extract_code(response).unwrap(), "initial(s0).\npayoff('C','C',3,3).");
    }

    #[test]
    fn extract_keeps_multiline_clause_bodies() {
        let response = "select(P, O, S, M) if\n    not holds(last_move(O, _LMo), S) and\n    holds(default_move(P, M), S).";
        assert_eq!(extract_code(response).unwrap(), response);
    }

    #[test]
    fn pure_prose_is_empty_code() {
        assert_eq!(extract_code("This game has no formal clauses at all!").unwrap_err(), ExtractError::EmptyCode);
        assert_eq!(extract_code("").unwrap_err(), ExtractError::EmptyCode);
    }

    #[test]
    fn feedback_quotes_each_offending_line() {
        let code = "payoff('C,'C',3,3).";
        let report = check_syntax(code);
        let messages = self_correct_prompt(code, &report).unwrap();
        let user = &messages[1].content;
        assert!(user.contains(code), "feedback must contain the full previous code");
        assert!(user.contains("offending line: payoff('C,'C',3,3)."));
    }

    #[test]
    fn end_of_file_feedback_includes_final_lines() {
        let code = "initial(s0).\ninitially(player(p1), s0).\npayoff('C','C',3,3)";
        let report = check_syntax(code);
        let messages = self_correct_prompt(code, &report).unwrap();
        let user = &messages[1].content;
        assert!(user.contains("final lines of the program:"));
        assert!(user.contains("payoff('C','C',3,3)"));
        assert!(user.contains("initially(player(p1), s0)."));
    }

    #[test]
    fn self_correct_rejects_valid_reports() {
        let report = check_syntax("initial(s0).");
        assert_eq!(
            self_correct_prompt("initial(s0).", &report).unwrap_err(),
            PromptError::ReportIsValid
        );
    }

    fn seed_attempts(dir: &std::path::Path, bundle: &PromptBundle, params: &LlmParams, responses: &[&str]) {
        seed_replay_fixtures(dir, bundle, PromptKind::Game, params, responses).unwrap();
    }

    #[test]
    fn broken_then_fixed_succeeds_on_attempt_two() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = PromptBundle::for_game("a test scenario");
        let params = LlmParams::default();
        let broken = "payoff('C,'C',3,3).";
        let fixed = canonical_game(GameId::Pd).source;
        seed_attempts(dir.path(), &bundle, &params, &[broken, fixed]);

        let backend = ReplayBackend::new(dir.path());
        let log = autoformalize(&bundle, PromptKind::Game, &backend, &params).unwrap();
        assert!(log.succeeded());
        assert_eq!(log.attempts_used(), 2);
        match log.status {
            AttemptStatus::Success { attempts_used, .. } => assert_eq!(attempts_used, 2),
            AttemptStatus::Exhausted => panic!("expected success"),
        }
    }

    #[test]
    fn five_broken_responses_exhaust_the_budget() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = PromptBundle::for_game("a test scenario");
        let params = LlmParams::default();
        let broken: Vec<String> = (0..5).map(|i| format!("payoff('C,'C',3,{i}).")).collect();
        let refs: Vec<&str> = broken.iter().map(String::as_str).collect();
        seed_attempts(dir.path(), &bundle, &params, &refs);

        let backend = ReplayBackend::new(dir.path());
        let log = autoformalize(&bundle, PromptKind::Game, &backend, &params).unwrap();
        assert!(!log.succeeded());
        assert_eq!(log.attempts_used(), 5);
        assert!(matches!(log.status, AttemptStatus::Exhausted));
    }

    #[test]
    fn valid_first_response_succeeds_immediately() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = PromptBundle::for_game("a test scenario");
        let params = LlmParams::default();
        seed_attempts(dir.path(), &bundle, &params, &[canonical_game(GameId::Pd).source]);

        let backend = ReplayBackend::new(dir.path());
        let log = autoformalize(&bundle, PromptKind::Game, &backend, &params).unwrap();
        assert!(log.succeeded());
        assert_eq!(log.attempts_used(), 1);
    }

    #[test]
    fn backend_failure_aborts_preserving_log() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = PromptBundle::for_game("a test scenario");
        let params = LlmParams::default();
        // Only attempt 1 is seeded (broken): attempt 2 misses its fixture.
        seed_attempts(dir.path(), &bundle, &params, &["payoff('C,'C',3,3)."]);

        let backend = ReplayBackend::new(dir.path());
        let err = autoformalize(&bundle, PromptKind::Game, &backend, &params).unwrap_err();
        match err {
            AutoformalizeError::Backend { source, log } => {
                assert!(matches!(source, BackendError::FixtureMissing { .. }));
                assert_eq!(log.attempts.len(), 1);
            }
            other => panic!("expected backend error, got {other}"),
        }
    }
}
