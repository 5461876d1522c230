//! Min-max normalisation of features and targets onto `[0, 1]`.

use ndarray::Array1;

use super::{DataError, Dataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnRange {
    pub min: f64,
    pub max: f64,
}

impl ColumnRange {
    fn forward(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    fn inverse(&self, v: f64) -> f64 {
        v * (self.max - self.min) + self.min
    }
}

/// Per-column minima and maxima captured from a training set. Applying the
/// same state to other splits can produce values outside `[0, 1]`; they are
/// kept as-is, never clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationState {
    pub feature_ranges: Vec<ColumnRange>,
    pub target_range: ColumnRange,
}

impl NormalizationState {
    pub fn fit(d: &Dataset) -> Result<NormalizationState, DataError> {
        let mut feature_ranges = Vec::with_capacity(d.n_features());
        for j in 0..d.n_features() {
            let col = d.features.column(j);
            feature_ranges.push(column_range(col.iter(), &d.feature_names[j])?);
        }
        let target_range = column_range(d.targets.iter(), &d.target_name)?;
        Ok(NormalizationState {
            feature_ranges,
            target_range,
        })
    }

    /// Map a normalised target value back to original units.
    pub fn denorm_target(&self, v: f64) -> f64 {
        self.target_range.inverse(v)
    }

    pub fn norm_target(&self, v: f64) -> f64 {
        self.target_range.forward(v)
    }
}

fn column_range<'a>(
    values: impl Iterator<Item = &'a f64>,
    name: &str,
) -> Result<ColumnRange, DataError> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !(max > min) {
        return Err(DataError::ConstantColumn {
            column: name.to_string(),
        });
    }
    Ok(ColumnRange { min, max })
}

/// Fit ranges on `d` and map every feature and target column through
/// `(x - min) / (max - min)`. Metadata columns are left untouched.
pub fn normalize(d: &Dataset) -> Result<(Dataset, NormalizationState), DataError> {
    let state = NormalizationState::fit(d)?;
    Ok((normalize_with(d, &state)?, state))
}

/// Apply an existing normalisation state, e.g. training-set statistics on a
/// test split.
pub fn normalize_with(d: &Dataset, state: &NormalizationState) -> Result<Dataset, DataError> {
    if state.feature_ranges.len() != d.n_features() {
        return Err(DataError::RangeCount {
            expected: state.feature_ranges.len(),
            got: d.n_features(),
        });
    }
    let mut out = d.clone();
    for (j, range) in state.feature_ranges.iter().enumerate() {
        for v in out.features.column_mut(j) {
            *v = range.forward(*v);
        }
    }
    out.targets = Array1::from_iter(d.targets.iter().map(|&v| state.target_range.forward(v)));
    Ok(out)
}

/// Inverse of [`normalize_with`].
pub fn denormalize(d: &Dataset, state: &NormalizationState) -> Result<Dataset, DataError> {
    if state.feature_ranges.len() != d.n_features() {
        return Err(DataError::RangeCount {
            expected: state.feature_ranges.len(),
            got: d.n_features(),
        });
    }
    let mut out = d.clone();
    for (j, range) in state.feature_ranges.iter().enumerate() {
        for v in out.features.column_mut(j) {
            *v = range.inverse(*v);
        }
    }
    out.targets = Array1::from_iter(d.targets.iter().map(|&v| state.target_range.inverse(v)));
    Ok(out)
}
