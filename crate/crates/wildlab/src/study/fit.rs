//! Ordinary least squares on log-log series.

use super::StudyError;

/// Fit `log y = slope * log x + intercept` by OLS. Returns
/// `(slope, stderr_of_slope, intercept)`; rejects series with fewer than
/// four points or non-positive entries.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<(f64, f64, f64), StudyError> {
    if points.len() < 4 {
        return Err(StudyError::TooFewPoints(points.len()));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(StudyError::NonPositive);
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok((slope, stderr, intercept))
}
