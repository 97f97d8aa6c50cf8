use crate::error::{Error, Result};
use crate::integrator::TimeSeries;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFit {
    /// `r` in `y ≈ A e^{−r t}`.
    pub rate: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Least-squares line through `ln y` over `window = (t_start, t_end)`,
/// defaulting to the second half of the sampled interval.
pub fn fit_decay_rate(series: &TimeSeries, column: &str, window: Option<(f64, f64)>) -> Result<DecayFit> {
    let ys = series.column(column).ok_or_else(|| Error::Precondition(format!("no column `{column}`")))?;
    let ts = &series.times;
    if ts.is_empty() {
        return Err(Error::Precondition("empty time series".into()));
    }
    let (lo, hi) = window.unwrap_or_else(|| {
        let (a, b) = (ts[0], ts[ts.len() - 1]);
        (0.5 * (a + b), b)
    });
    let mut pts = Vec::new();
    for (k, (&t, &y)) in ts.iter().zip(ys).enumerate() {
        if t < lo || t > hi {
            continue;
        }
        if !(y > 0.0) {
            return Err(Error::NonPositive { index: k, value: y });
        }
        pts.push((t, y.ln()));
    }
    if pts.len() < 2 {
        return Err(Error::Precondition(format!("fewer than two samples in window [{lo}, {hi}]")));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::Precondition("window contains a single time".into()));
    }
    let slope = sty / stt;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2)).sum();
    let r_squared = if syy <= f64::EPSILON * n * my.abs().max(1.0) { 1.0 } else { 1.0 - ss_res / syy };
    Ok(DecayFit { rate: -slope, r_squared, n_points: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> TimeSeries {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.02).collect();
        let col = times.iter().map(|&t| f(t)).collect();
        TimeSeries { times, columns: vec![("y".into(), col)], stderr: None }
    }

    #[test]
    fn exact_exponential() {
        let fit = fit_decay_rate(&series(|t| (-2.0 * t).exp()), "y", None).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-12);
        assert!(fit.r_squared >= 0.9999);
        assert_eq!(fit.n_points, 51);
    }

    #[test]
    fn constant_column() {
        let fit = fit_decay_rate(&series(|_| 0.3), "y", None).unwrap();
        assert!(fit.rate.abs() < 1e-15);
    }

    #[test]
    fn non_positive_rejected() {
        let err = fit_decay_rate(&series(|t| 1.5 - t), "y", Some((0.0, 2.0))).unwrap_err();
        assert!(matches!(err, Error::NonPositive { .. }));
    }
}
