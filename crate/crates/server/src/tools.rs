//! Offline commands: log analysis and batch self-play.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use placegame_core::analysis::{report, GameOutcome, LengthUnit, ReportTable};
use placegame_core::eventlog::read_log;
use placegame_core::selfplay::{batch_run, BatchConfig, BatchResult, Matchup};
use placegame_core::SceneCatalog;

/// All `*.log` files in `dir`, sorted by name.
pub fn log_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "log"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_outcomes(dir: &Path) -> anyhow::Result<Vec<GameOutcome>> {
    log_files(dir)?
        .into_iter()
        .map(|path| {
            let records = read_log(&path).with_context(|| format!("reading {}", path.display()))?;
            let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok(GameOutcome::from_log(id, &records))
        })
        .collect()
}

/// Writes the report as JSON to `out` and as a text table next to it.
pub fn write_report(table: &ReportTable, out: &Path) -> anyhow::Result<PathBuf> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(out, serde_json::to_string_pretty(table)?).with_context(|| format!("writing {}", out.display()))?;
    let text_path = out.with_extension("txt");
    fs::write(&text_path, table.render_text())?;
    Ok(text_path)
}

pub fn analyze(log_dir: &Path, theta: f64, unit: LengthUnit, out: &Path) -> anyhow::Result<ReportTable> {
    let outcomes = load_outcomes(log_dir)?;
    let table = report(&outcomes, theta, unit)?;
    write_report(&table, out)?;
    Ok(table)
}

/// Plays every matchup for seeds `0..seeds` and writes one log per game into `out`.
pub fn selfplay(
    matchups: Vec<Matchup>,
    seeds: u64,
    theta: f64,
    unit: LengthUnit,
    catalog: Arc<SceneCatalog>,
    out: &Path,
) -> anyhow::Result<BatchResult> {
    let config = BatchConfig {
        matchups,
        seeds: (0..seeds).collect(),
        theta,
        length_unit: unit,
    };
    let result = batch_run(&config, catalog)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (_, record) in &result.records {
        fs::write(out.join(format!("{}.log", record.room_id)), record.log_text())?;
    }
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&result.summary)?)?;
    Ok(result)
}
