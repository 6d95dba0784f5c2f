//! Report emission: correctness summary by game and level, the attempt
//! distribution, the strategy-by-game normalized-payoff table, and the full
//! round log. All outputs are deterministic given the same experiment
//! output (sorted keys, fixed float formatting).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::experiment::{ExperimentOutput, ReportRow};

/// Percentage with one decimal, the shape the summary tables use.
fn pct(numerator: usize, denominator: usize) -> String {
    if denominator == 0 {
        "".to_string()
    } else {
        format!("{:.1}", 100.0 * numerator as f64 / denominator as f64)
    }
}

fn summary_line(label: &str, rows: &[&ReportRow]) -> String {
    let n = rows.len();
    let syntax = rows.iter().filter(|r| r.syntax_ok).count();
    let runtime = rows.iter().filter(|r| r.runtime_ok).count();
    let semantic = rows.iter().filter(|r| r.semantic_ok == Some(true)).count();
    format!("{label},{n},{},{},{}", pct(syntax, n), pct(runtime, n), pct(semantic, n))
}

/// Writes `summary.csv`: per-game syntactic/runtime/semantic percentages
/// plus an overall line. Semantic truth implies runtime truth implies
/// syntactic truth row by row, so each column bounds the next.
fn write_summary(rows: &[ReportRow], path: &Path) -> std::io::Result<()> {
    let mut by_game: BTreeMap<String, Vec<&ReportRow>> = BTreeMap::new();
    for row in rows {
        let key = row.game_type.map(|g| g.code().to_string()).unwrap_or_else(|| "other".to_string());
        by_game.entry(key).or_default().push(row);
    }
    let mut out = String::from("game,rows,syntactic_pct,runtime_pct,semantic_pct\n");
    for (game, game_rows) in &by_game {
        out.push_str(&summary_line(game, game_rows));
        out.push('\n');
    }
    let all: Vec<&ReportRow> = rows.iter().collect();
    out.push_str(&summary_line("overall", &all));
    out.push('\n');
    fs::write(path, out)
}

/// Writes `attempts.csv`: the percentage of runs finishing at each attempt
/// count, over all agent runs in the experiment.
fn write_attempts(counts: &[u32], max_attempts: u32, path: &Path) -> std::io::Result<()> {
    let mut out = String::from("attempt,percentage\n");
    let total = counts.len();
    for attempt in 1..=max_attempts.max(1) {
        let hits = counts.iter().filter(|&&c| c == attempt).count();
        out.push_str(&format!("{attempt},{}\n", pct(hits, total)));
    }
    fs::write(path, out)
}

/// Writes `heatmap.csv`: strategies down the side, games across the top,
/// normalized total payoffs in the cells.
fn write_heatmap(heatmap: &BTreeMap<String, BTreeMap<String, f64>>, path: &Path) -> std::io::Result<()> {
    let mut games: Vec<String> = heatmap
        .values()
        .flat_map(|per_game| per_game.keys().cloned())
        .collect();
    games.sort();
    games.dedup();
    let mut out = String::from("strategy");
    for game in &games {
        out.push(',');
        out.push_str(game);
    }
    out.push('\n');
    for (strategy, per_game) in heatmap {
        out.push_str(strategy);
        for game in &games {
            out.push(',');
            if let Some(value) = per_game.get(game) {
                if value.is_finite() {
                    out.push_str(&format!("{value:.6}"));
                }
            }
        }
        out.push('\n');
    }
    fs::write(path, out)
}

/// Writes `rows.csv`: one line per report row.
fn write_rows(rows: &[ReportRow], path: &Path) -> std::io::Result<()> {
    let mut out = String::from("id,game,syntax_ok,runtime_ok,semantic_ok,manual_inspection,attempts_used,totals\n");
    for row in rows {
        let semantic = match row.semantic_ok {
            Some(true) => "true",
            Some(false) => "false",
            None => "manual",
        };
        let totals = row
            .totals
            .as_ref()
            .map(|t| t.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.id,
            row.game_type.map(|g| g.code().to_string()).unwrap_or_default(),
            row.syntax_ok,
            row.runtime_ok,
            semantic,
            row.manual_inspection,
            row.attempts_used,
            totals
        ));
    }
    fs::write(path, out)
}

/// Writes the four report files (plus the per-row table) into `out_dir`,
/// creating it if needed. Returns the written paths.
pub fn emit_reports(output: &ExperimentOutput, out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let summary = out_dir.join("summary.csv");
    write_summary(&output.rows, &summary)?;
    written.push(summary);

    let attempts = out_dir.join("attempts.csv");
    write_attempts(&output.attempt_counts, output.max_attempts, &attempts)?;
    written.push(attempts);

    let heatmap = out_dir.join("heatmap.csv");
    write_heatmap(&output.heatmap, &heatmap)?;
    written.push(heatmap);

    let rounds = out_dir.join("rounds.jsonl");
    let mut file = fs::File::create(&rounds)?;
    for record in &output.round_logs {
        writeln!(file, "{record}")?;
    }
    written.push(rounds);

    let rows = out_dir.join("rows.csv");
    write_rows(&output.rows, &rows)?;
    written.push(rows);

    Ok(written)
}
