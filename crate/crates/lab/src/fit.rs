//! Least-squares rate and slope estimates in log space.

use agekin::regression::fit_line;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("nonpositive sample {y} at {x}")]
    NonPositive { x: f64, y: f64 },
    #[error("{n} points in the fit window, need at least 3")]
    InsufficientPoints { n: usize },
    #[error("abscissae span a factor {span}, need at least 4")]
    InsufficientSpan { span: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Decay rate (`−slope` of `ln y` on `t`) or log–log slope.
    pub value: f64,
    /// RMS residual of the line in log space.
    pub residual: f64,
    pub window: (f64, f64),
    pub n: usize,
}

/// Rate `r` of `y ≈ C e^{−r t}` from samples with `t` in `window`.
pub fn fit_exponential_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult, FitError> {
    let (lo, hi) = window;
    let (mut ts, mut ls) = (Vec::new(), Vec::new());
    for &(t, y) in series.iter().filter(|(t, _)| *t >= lo && *t <= hi) {
        if !(y > 0.0) {
            return Err(FitError::NonPositive { x: t, y });
        }
        ts.push(t);
        ls.push(y.ln());
    }
    if ts.len() < 3 {
        return Err(FitError::InsufficientPoints { n: ts.len() });
    }
    let line = fit_line(&ts, &ls).ok_or(FitError::InsufficientPoints { n: ts.len() })?;
    Ok(FitResult {
        value: -line.slope,
        residual: line.rms,
        window,
        n: line.n,
    })
}

/// Slope of `ln err` against `ln ε`.
pub fn fit_loglog_slope(pairs: &[(f64, f64)]) -> Result<FitResult, FitError> {
    if pairs.len() < 3 {
        return Err(FitError::InsufficientPoints { n: pairs.len() });
    }
    let mut lx = Vec::with_capacity(pairs.len());
    let mut ly = Vec::with_capacity(pairs.len());
    for &(x, y) in pairs {
        if !(x > 0.0) {
            return Err(FitError::NonPositive { x, y: x });
        }
        if !(y > 0.0) {
            return Err(FitError::NonPositive { x, y });
        }
        lx.push(x.ln());
        ly.push(y.ln());
    }
    let (min, max) = pairs
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), (x, _)| (a.min(*x), b.max(*x)));
    if max / min < 4.0 - 1e-12 {
        return Err(FitError::InsufficientSpan { span: max / min });
    }
    let line = fit_line(&lx, &ly).ok_or(FitError::InsufficientSpan { span: 1.0 })?;
    Ok(FitResult {
        value: line.slope,
        residual: line.rms,
        window: (min, max),
        n: line.n,
    })
}
