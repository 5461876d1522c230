//! Sequential sample-selection cuts with per-criterion survivor counts.

use super::{DataError, Dataset};

/// Thresholds for the quality cuts. A row survives when every criterion
/// holds; the cuts are applied one criterion at a time so the survivor
/// count after each stage can be reported.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityCutSpec {
    /// Keep rows with line flux / flux error strictly above this.
    pub min_flux_snr: f64,
    /// Keep rows whose log line luminosity lies inside this closed range.
    pub log_lum_range: [f64; 2],
    /// Keep rows with median per-pixel signal-to-noise at least this.
    pub min_pixel_snr: f64,
    /// Keep rows whose mass error (dex) does not exceed this.
    pub max_mass_err: f64,
    /// Keep rows whose line width error (km/s) does not exceed this.
    pub max_width_err: f64,
}

impl Default for QualityCutSpec {
    fn default() -> Self {
        QualityCutSpec {
            min_flux_snr: 2.0,
            log_lum_range: [38.0, 48.0],
            min_pixel_snr: 10.0,
            max_mass_err: 0.5,
            max_width_err: 2000.0,
        }
    }
}

impl QualityCutSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if !(self.log_lum_range[0] < self.log_lum_range[1]) {
            return Err(DataError::BadCutSpec(format!(
                "log_lum_range lower bound {} must be below upper bound {}",
                self.log_lum_range[0], self.log_lum_range[1]
            )));
        }
        for (name, v) in [
            ("min_flux_snr", self.min_flux_snr),
            ("min_pixel_snr", self.min_pixel_snr),
            ("max_mass_err", self.max_mass_err),
            ("max_width_err", self.max_width_err),
        ] {
            if !(v >= 0.0) {
                return Err(DataError::BadCutSpec(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Survivor count after one sequential criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutStage {
    pub label: String,
    pub survivors: usize,
}

#[derive(Debug, Clone)]
enum Criterion {
    FluxSnr { column: String },
    LogLum { column: String },
    PixelSnr,
    Available { column: String },
    MassErr { column: String },
    WidthErr { column: String },
}

impl Criterion {
    fn column(&self) -> &str {
        match self {
            Criterion::FluxSnr { column }
            | Criterion::LogLum { column }
            | Criterion::Available { column }
            | Criterion::MassErr { column }
            | Criterion::WidthErr { column } => column,
            Criterion::PixelSnr => "snr",
        }
    }

    fn keeps(&self, spec: &QualityCutSpec, v: f64) -> bool {
        // NaN fails every comparison, so missing values are cut here too.
        match self {
            Criterion::FluxSnr { .. } => v > spec.min_flux_snr,
            Criterion::LogLum { .. } => v >= spec.log_lum_range[0] && v <= spec.log_lum_range[1],
            Criterion::PixelSnr => v >= spec.min_pixel_snr,
            Criterion::Available { .. } => v.is_finite(),
            Criterion::MassErr { .. } => v <= spec.max_mass_err,
            Criterion::WidthErr { .. } => v <= spec.max_width_err,
        }
    }

    fn label(&self, spec: &QualityCutSpec) -> String {
        match self {
            Criterion::FluxSnr { column } => format!("{column} > {}", spec.min_flux_snr),
            Criterion::LogLum { column } => format!(
                "{column} in [{}, {}]",
                spec.log_lum_range[0], spec.log_lum_range[1]
            ),
            Criterion::PixelSnr => format!("snr >= {}", spec.min_pixel_snr),
            Criterion::Available { column } => format!("{column} available"),
            Criterion::MassErr { column } => format!("{column} <= {}", spec.max_mass_err),
            Criterion::WidthErr { column } => format!("{column} <= {}", spec.max_width_err),
        }
    }
}

fn prefixed(line: &str, base: &str) -> String {
    if line.is_empty() {
        base.to_string()
    } else {
        format!("{line}_{base}")
    }
}

/// The criterion sequence for a set of emission-line column prefixes:
/// flux ratio per line, luminosity range per line, the global pixel
/// signal-to-noise, width and mass availability per line, then the mass
/// and width error caps per line. A prefix `"hbeta"` reads columns
/// `hbeta_flux_snr`, `hbeta_log_L`, and so on; the empty prefix reads the
/// bare column names.
fn criteria(lines: &[&str]) -> Vec<Criterion> {
    let mut seq = Vec::new();
    for line in lines {
        seq.push(Criterion::FluxSnr {
            column: prefixed(line, "flux_snr"),
        });
    }
    for line in lines {
        seq.push(Criterion::LogLum {
            column: prefixed(line, "log_L"),
        });
    }
    seq.push(Criterion::PixelSnr);
    for line in lines {
        seq.push(Criterion::Available {
            column: prefixed(line, "fwhm"),
        });
    }
    for line in lines {
        seq.push(Criterion::Available {
            column: prefixed(line, "mass"),
        });
    }
    for line in lines {
        seq.push(Criterion::MassErr {
            column: prefixed(line, "mass_err"),
        });
    }
    for line in lines {
        seq.push(Criterion::WidthErr {
            column: prefixed(line, "fwhm_err"),
        });
    }
    seq
}

/// Apply the quality cuts one criterion at a time, reporting the survivor
/// count after each. Errors if any referenced metadata column is absent.
pub fn apply_quality_cuts(
    raw: &Dataset,
    spec: &QualityCutSpec,
    lines: &[&str],
) -> Result<(Dataset, Vec<CutStage>), DataError> {
    spec.validate()?;
    let seq = criteria(lines);
    for criterion in &seq {
        if !raw.metadata.contains_key(criterion.column()) {
            return Err(DataError::MissingMetadata {
                column: criterion.column().to_string(),
            });
        }
    }

    let mut keep: Vec<usize> = (0..raw.n_samples()).collect();
    let mut stages = Vec::with_capacity(seq.len());
    for criterion in &seq {
        let col = &raw.metadata[criterion.column()];
        keep.retain(|&i| criterion.keeps(spec, col[i]));
        stages.push(CutStage {
            label: criterion.label(spec),
            survivors: keep.len(),
        });
    }
    Ok((raw.subset(&keep), stages))
}
