//! Log-log rate fits above the discretization floor.

use std::ops::Range;

use super::sweep::ConvergenceReport;
use super::ExperimentError;

/// Points closer than this factor to their floor are excluded from fits.
pub const FLOOR_FACTOR: f64 = 3.0;
/// Slopes below this magnitude are reported as flat.
const FLAT_SLOPE: f64 = 0.05;

/// Least-squares fit of `ln E = slope ln δ + intercept`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the linear fit in log space.
    pub residual: f64,
    /// Record indices used.
    pub indices: Vec<usize>,
    /// Set when the fitted data are flat, which usually means the floor
    /// has been reached.
    pub floor_warning: bool,
}

/// Slope, intercept and rms residual of a least-squares line.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

/// Fit `(δ, E)` pairs whose `E` exceeds `FLOOR_FACTOR` times its floor.
pub fn fit_points(data: &[(f64, f64, Option<f64>)]) -> Result<RateFit, ExperimentError> {
    let indices: Vec<usize> = (0..data.len())
        .filter(|&i| {
            let (d, e, floor) = data[i];
            d > 0.0 && e > 0.0 && e > FLOOR_FACTOR * floor.unwrap_or(0.0)
        })
        .collect();
    if indices.len() < 3 {
        return Err(ExperimentError::BelowFloor(format!(
            "{} of {} points lie above {FLOOR_FACTOR} times the discretization floor; at least 3 are needed",
            indices.len(),
            data.len()
        )));
    }
    let pts: Vec<(f64, f64)> = indices.iter().map(|&i| (data[i].0.ln(), data[i].1.ln())).collect();
    let (slope, intercept, residual) = least_squares(&pts);
    Ok(RateFit { slope, intercept, residual, indices, floor_warning: slope.abs() < FLAT_SLOPE })
}

/// Fit the `H¹` discrepancy of the records in `window`.
pub fn fit_rate(rep: &ConvergenceReport, window: Range<usize>) -> Result<RateFit, ExperimentError> {
    let end = window.end.min(rep.records.len());
    let start = window.start.min(end);
    let data: Vec<(f64, f64, Option<f64>)> = rep.records[start..end].iter().map(|r| (r.delta, r.error_h1, r.floor_h1)).collect();
    let mut fit = fit_points(&data)?;
    for i in &mut fit.indices {
        *i += start;
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64) -> Vec<(f64, f64, Option<f64>)> {
        (0..7).map(|i| 10f64.powf(-1.0 - 0.5 * i as f64)).map(|d| (d, f(d), Some(0.0))).collect()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_points(&synthetic(|d| d.powf(0.4))).unwrap();
        assert!((fit.slope - 0.4).abs() < 1e-6);
        assert!(fit.residual < 1e-12);
        assert!(!fit.floor_warning);
    }

    #[test]
    fn constant_data_warn() {
        let fit = fit_points(&synthetic(|_| 0.3)).unwrap();
        assert!(fit.slope.abs() < 1e-12);
        assert!(fit.floor_warning);
    }

    #[test]
    fn below_floor_is_refused() {
        let data: Vec<_> = (0..5).map(|i| (10f64.powi(-i - 1), 1e-3, Some(1e-3))).collect();
        assert!(matches!(fit_points(&data), Err(ExperimentError::BelowFloor(_))));
    }

    #[test]
    fn floor_excludes_saturated_tail() {
        let data: Vec<_> = (0..7)
            .map(|i| 10f64.powf(-1.0 - 0.5 * i as f64))
            .map(|d| (d, d.powf(0.5) + 1e-2, Some(1e-2)))
            .collect();
        let fit = fit_points(&data).unwrap();
        assert_eq!(fit.indices, vec![0, 1, 2, 3, 4]);
        assert!((fit.slope - 0.5).abs() < 0.1);
    }
}
