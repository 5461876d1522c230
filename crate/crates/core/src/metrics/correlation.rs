//! Spearman rank correlation with significance, and the width-vs-property
//! report built on it.

use std::path::Path;

use indexmap::IndexMap;
use ndarray::{Array1, ArrayView1};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::conformal::IntervalBatch;

use super::MetricsError;

/// Spearman's rho with a two-sided p-value.
///
/// The p-value is exact (full permutation enumeration) for `n <= 10` and
/// the usual t-approximation `t = rho * sqrt((n-2) / (1-rho^2))` with
/// `n - 2` degrees of freedom otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankCorrelation {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

const EXACT_PERMUTATION_MAX_N: usize = 10;

pub fn spearman(
    x: ArrayView1<'_, f64>,
    y: ArrayView1<'_, f64>,
) -> Result<RankCorrelation, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 4 {
        return Err(MetricsError::TooFewSamples { n, min: 4 });
    }
    let rx = mid_ranks(x);
    let ry = mid_ranks(y);
    let rho = pearson(&rx, &ry)?;

    let p_value = if n <= EXACT_PERMUTATION_MAX_N {
        exact_permutation_p(&rx, &ry)
    } else {
        t_approximation_p(rho, n)
    };
    Ok(RankCorrelation { rho, p_value, n })
}

/// Average ranks for ties (mid-rank method), 1-based.
fn mid_ranks(v: ArrayView1<'_, f64>) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mid;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(MetricsError::ConstantInput {
            what: "rank vector",
        });
    }
    Ok(cov / (va * vb).sqrt())
}

fn t_approximation_p(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = rho * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 2 is valid");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Two-sided exact permutation p-value over all n! rank permutations.
///
/// Only the cross term `S = sum rx[i] * ry[perm(i)]` varies under
/// permutation, so |rho| >= |rho_obs| reduces to |S - C| >= |S_obs - C|
/// with `C = n * mean(rx) * mean(ry)`. Heap's algorithm swaps one pair per
/// step, updating S in O(1).
fn exact_permutation_p(rx: &[f64], ry: &[f64]) -> f64 {
    let n = rx.len();
    let c = {
        let mx = rx.iter().sum::<f64>() / n as f64;
        let my = ry.iter().sum::<f64>() / n as f64;
        n as f64 * mx * my
    };
    let mut perm = ry.to_vec();
    let mut s: f64 = rx.iter().zip(&perm).map(|(a, b)| a * b).sum();
    let target = (s - c).abs();
    // Slack keeps rank permutations that tie with the observed statistic
    // counted as hits despite accumulated float error.
    let tol = 1e-9 * (1.0 + target);

    let mut hits: u64 = 0;
    let mut total: u64 = 0;
    let mut observe = |s: f64| {
        total += 1;
        if (s - c).abs() >= target - tol {
            hits += 1;
        }
    };
    observe(s);

    let mut counters = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            let (a, b) = if i % 2 == 0 { (0, i) } else { (counters[i], i) };
            s += (rx[a] - rx[b]) * (perm[b] - perm[a]);
            perm.swap(a, b);
            observe(s);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

/// Spearman correlation of interval width against one metadata property.
/// `correlation` is `None` when rho is undefined (constant widths or a
/// constant property).
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCorrelation {
    pub property: String,
    pub correlation: Option<RankCorrelation>,
}

/// Correlate interval widths against each named metadata column.
pub fn width_property_report(
    intervals: &IntervalBatch,
    metadata: &IndexMap<String, Array1<f64>>,
    properties: &[&str],
) -> Result<Vec<PropertyCorrelation>, MetricsError> {
    let widths = intervals.widths();
    let mut rows = Vec::with_capacity(properties.len());
    for &name in properties {
        let column = metadata.get(name).ok_or_else(|| MetricsError::MissingColumn {
            column: name.to_string(),
        })?;
        if column.len() != widths.len() {
            return Err(MetricsError::LengthMismatch {
                left: widths.len(),
                right: column.len(),
            });
        }
        let correlation = match spearman(widths.view(), column.view()) {
            Ok(rc) => Some(rc),
            Err(MetricsError::ConstantInput { .. }) => None,
            Err(other) => return Err(other),
        };
        rows.push(PropertyCorrelation {
            property: name.to_string(),
            correlation,
        });
    }
    Ok(rows)
}

/// Csv export: `property,rho,p_value,n` with `na` for undefined rows.
pub fn write_width_report_csv(
    rows: &[PropertyCorrelation],
    path: &Path,
) -> Result<(), MetricsError> {
    let mut out = String::from("property,rho,p_value,n\n");
    for row in rows {
        match &row.correlation {
            Some(rc) => {
                out.push_str(&format!("{},{},{},{}\n", row.property, rc.rho, rc.p_value, rc.n))
            }
            None => out.push_str(&format!("{},na,na,na\n", row.property)),
        }
    }
    std::fs::write(path, out).map_err(|source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    })
}
