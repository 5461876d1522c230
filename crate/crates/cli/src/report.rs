//! `piq report`: consolidate a completed run directory into one summary.

use std::path::Path;

use crate::manifest::RunManifest;
use crate::run::{REPORT_FILE, SWEEP_FILE};
use crate::CliError;

pub struct ReportOutcome {
    pub summary: String,
    /// Data rows across all merged sections.
    pub total_rows: usize,
}

fn read_csv_rows(path: &Path) -> Result<Option<Vec<String>>, CliError> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(Some(text.lines().map(str::to_string).collect()))
}

/// Merge the per-method report, the sweep, and the manifest header into a
/// single text summary mirroring the coverage/width comparison tables.
pub fn cmd_report(dir: &Path) -> Result<ReportOutcome, CliError> {
    let manifest = RunManifest::load(dir)?;
    if manifest.status != "complete" {
        return Err(CliError::Data(format!(
            "run is not complete: status {:?}",
            manifest.status
        )));
    }

    let mut summary = String::new();
    let mut total_rows = 0usize;
    summary.push_str(&format!(
        "piq run summary (version {})\ncsv sha256: {}\nconfig sha256: {}\n",
        manifest.version, manifest.inputs.csv_sha256, manifest.inputs.config_sha256
    ));
    summary.push_str("conventions:\n");
    for (key, value) in &manifest.conventions {
        summary.push_str(&format!("  {key}: {value}\n"));
    }

    let report_path = dir.join(REPORT_FILE);
    let report_rows = read_csv_rows(&report_path)?.ok_or_else(|| {
        CliError::Data(format!("incomplete run: missing {}", report_path.display()))
    })?;
    summary.push_str("\nper-method reports\n");
    for line in &report_rows {
        summary.push_str(&format!("  {line}\n"));
    }
    total_rows += report_rows.len().saturating_sub(1);

    if let Some(sweep_rows) = read_csv_rows(&dir.join(SWEEP_FILE))? {
        summary.push_str("\ncoverage/width sweep\n");
        for line in &sweep_rows {
            summary.push_str(&format!("  {line}\n"));
        }
        total_rows += sweep_rows.len().saturating_sub(1);
        if !manifest.sweep_picp_r2.is_empty() {
            summary.push_str("\npicp-vs-nominal r2 per method\n");
            for (method, r2) in &manifest.sweep_picp_r2 {
                summary.push_str(&format!("  {method}: {r2}\n"));
            }
        }
    }

    summary.push_str(&format!("\ntotal data rows: {total_rows}\n"));
    let path = dir.join("summary.txt");
    std::fs::write(&path, &summary)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    Ok(ReportOutcome {
        summary,
        total_rows,
    })
}
