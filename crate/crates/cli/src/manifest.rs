//! Run manifests: everything needed to reproduce a run bit-identically,
//! plus wall-clock accounting and the numeric conventions in force.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use piq_core::gbrt::BoostingParams;

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// "complete", or "failed: <stage>: <error>".
    pub status: String,
    pub inputs: InputHashes,
    pub seeds: Seeds,
    pub stage_seconds: BTreeMap<String, f64>,
    pub resolved_regressor: Option<BoostingParams>,
    pub resolved_quantile_regressor: Option<BoostingParams>,
    /// R^2 of achieved coverage against nominal coverage per method, from
    /// the sweep (absent without an alpha grid).
    pub sweep_picp_r2: BTreeMap<String, f64>,
    pub conventions: BTreeMap<String, String>,
    pub ingest: IngestStats,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputHashes {
    pub config_sha256: String,
    pub csv_sha256: String,
    pub schema_sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seeds {
    pub split: u64,
    pub mlp: Option<u64>,
    pub search: Option<u64>,
    pub methods: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct IngestStats {
    pub rows_read: usize,
    pub rows_dropped_nonfinite: usize,
    pub cut_survivors: Vec<(String, usize)>,
    pub n_after_ingest: usize,
}

/// The numeric decisions a reimplementation would need to reproduce this
/// run; recorded with every manifest.
pub fn conventions() -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert(
        "rng".into(),
        "ChaCha8 seeded via seed_from_u64; Fisher-Yates shuffles".into(),
    );
    map.insert(
        "split".into(),
        "seeded permutation then contiguous blocks; largest-remainder sizing".into(),
    );
    map.insert(
        "quantile_rule".into(),
        "k = ceil((1 - alpha)(n + 1))-th smallest, infinite sentinel when k > n".into(),
    );
    map.insert("aggregation_default".into(), "mean".into(),);
    map.insert("scheduler_unit".into(), "epochs".into());
    map.insert(
        "mlp_init".into(),
        "weights uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) row-major, biases zero".into(),
    );
    map.insert(
        "adam".into(),
        "beta1 0.9, beta2 0.999, eps 1e-8, coupled L2 weight decay".into(),
    );
    map.insert(
        "dropout".into(),
        "inverted; kept units scaled by 1/(1-p) at train time".into(),
    );
    map.insert(
        "normalisation".into(),
        "min-max fit on the training split, applied unclipped elsewhere".into(),
    );
    map
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot hash {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest is serialisable");
        std::fs::write(&path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(dir: &Path) -> Result<RunManifest, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|_| {
            CliError::Data(format!(
                "missing manifest: expected {}",
                path.display()
            ))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("corrupt manifest {}: {e}", path.display())))
    }
}
