//! `piq synth`: write a synthetic benchmark table with its schema.

use std::path::{Path, PathBuf};

use piq_core::data::{synth_heteroscedastic, write_csv, write_schema, NoiseLaw};

use crate::CliError;

pub struct SynthOutcome {
    pub csv: PathBuf,
    pub schema: PathBuf,
    pub rows: usize,
}

pub fn cmd_synth(
    law: &str,
    scale: f64,
    n: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<SynthOutcome, CliError> {
    let law = NoiseLaw::parse(law, scale)?;
    let dataset = synth_heteroscedastic(n, seed, &law)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out_dir.display())))?;
    let csv = out_dir.join("synth.csv");
    let schema = out_dir.join("synth.schema.json");
    write_csv(&dataset, &csv)?;
    write_schema(&dataset, &schema)?;
    Ok(SynthOutcome {
        csv,
        schema,
        rows: dataset.n_samples(),
    })
}
