//! Scenario dataset ingestion: plain-text descriptions with JSON sidecars.
//!
//! A scenario is a pair of files `<id>.txt` (the natural language
//! description) and `<id>.json` (metadata: game type, whether the
//! description carries numeric payoffs, and the target outcomes when it
//! does). Malformed entries are skipped with a warning; the load fails only
//! when the directory itself cannot be read.

use std::fs;
use std::path::Path;

use lgdl::games::GameId;
use lgdl::validate::TargetOutcomes;
use serde::{Deserialize, Serialize};

/// One natural language game scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub id: String,
    pub game_type: GameId,
    pub numeric_payoffs: bool,
    pub description: String,
    pub targets: Option<TargetOutcomes>,
}

#[derive(Debug, Deserialize)]
struct Sidecar {
    id: String,
    game_type: GameId,
    numeric_payoffs: bool,
    #[serde(default)]
    targets: Option<TargetOutcomes>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read dataset directory {dir}: {source}")]
    Dir { dir: String, source: std::io::Error },
}

/// Loads every scenario in `dir`, in id order. Schema violations are
/// reported as warnings with the offending file named; valid records from
/// the same directory still load.
pub fn load_dataset(dir: &Path) -> Result<(Vec<ScenarioRecord>, Vec<String>), DatasetError> {
    let entries = fs::read_dir(dir).map_err(|source| DatasetError::Dir { dir: dir.display().to_string(), source })?;
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut sidecars: Vec<std::path::PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    sidecars.sort();

    for sidecar_path in sidecars {
        let name = sidecar_path.display().to_string();
        let text = match fs::read_to_string(&sidecar_path) {
            Ok(text) => text,
            Err(e) => {
                warnings.push(format!("{name}: unreadable sidecar: {e}"));
                continue;
            }
        };
        let sidecar: Sidecar = match serde_json::from_str(&text) {
            Ok(sidecar) => sidecar,
            Err(e) => {
                warnings.push(format!("{name}: schema error: {e}"));
                continue;
            }
        };
        let stem = sidecar_path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if stem != sidecar.id {
            warnings.push(format!("{name}: sidecar id `{}` does not match file stem `{stem}`", sidecar.id));
            continue;
        }
        if sidecar.numeric_payoffs && sidecar.targets.is_none() {
            warnings.push(format!("{name}: numeric_payoffs requires targets"));
            continue;
        }
        if let Some(targets) = &sidecar.targets {
            if let Err(e) = targets.check() {
                warnings.push(format!("{name}: invalid targets: {e}"));
                continue;
            }
        }
        let description_path = sidecar_path.with_extension("txt");
        let description = match fs::read_to_string(&description_path) {
            Ok(description) => description,
            Err(e) => {
                warnings.push(format!("{}: missing description: {e}", description_path.display()));
                continue;
            }
        };
        records.push(ScenarioRecord {
            id: sidecar.id,
            game_type: sidecar.game_type,
            numeric_payoffs: sidecar.numeric_payoffs,
            description: description.trim_end().to_string(),
            targets: sidecar.targets,
        });
    }
    records.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((records, warnings))
}
