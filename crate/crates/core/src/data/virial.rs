//! Single-epoch virial mass arithmetic.

use super::DataError;

/// Calibration coefficients `(a, b, c)` for the virial mass relation. The
/// width exponent `c` is 2 unless overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirialCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl VirialCoefficients {
    pub fn new(a: f64, b: f64) -> VirialCoefficients {
        VirialCoefficients { a, b, c: 2.0 }
    }

    pub fn with_exponent(a: f64, b: f64, c: f64) -> VirialCoefficients {
        VirialCoefficients { a, b, c }
    }

    /// Calibration for the H-beta line.
    pub fn hbeta() -> VirialCoefficients {
        VirialCoefficients::new(0.91, 0.50)
    }

    /// Calibration for the Mg II line.
    pub fn mgii() -> VirialCoefficients {
        VirialCoefficients::new(0.74, 0.62)
    }
}

/// log10 of the virial mass in solar masses:
///
/// ```text
/// a + b * (log_L - 44) + c * log10(fwhm)
/// ```
///
/// with the luminosity expressed as log10(L / erg s^-1) and normalised to
/// 10^44 erg s^-1, and the line width in km s^-1. This unit convention
/// yields masses around 10^8 solar masses for typical quasar inputs.
pub fn virial_log_mass(
    log_luminosity: f64,
    fwhm_km_s: f64,
    coeffs: &VirialCoefficients,
) -> Result<f64, DataError> {
    if !(fwhm_km_s > 0.0) {
        return Err(DataError::NonPositiveFwhm { fwhm: fwhm_km_s });
    }
    Ok(coeffs.a + coeffs.b * (log_luminosity - 44.0) + coeffs.c * fwhm_km_s.log10())
}
