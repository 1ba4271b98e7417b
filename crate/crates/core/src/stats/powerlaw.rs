//! Power-law fits `f(x) = a·x^b` by weighted least squares in log-log space.

use super::histogram::Histogram;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub a: f64,
    pub b: f64,
    /// Weighted sum of squared residuals of `ln y` against `ln a + b ln x`.
    pub residual: f64,
    /// Set on the segments of a two-regime fit.
    pub breakpoint: Option<f64>,
}

impl PowerLawFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.a * x.powf(self.b)
    }
}

/// Two independent power laws joined at `breakpoint`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrokenPowerLawFit {
    pub breakpoint: f64,
    pub lower: PowerLawFit,
    pub upper: PowerLawFit,
    /// `lower.residual + upper.residual`.
    pub residual: f64,
    /// Single-regime fit over the same support, for comparison.
    pub single: PowerLawFit,
}

impl BrokenPowerLawFit {
    /// Fraction of the single-regime residual removed by the break.
    pub fn improvement(&self) -> f64 {
        if self.single.residual <= f64::EPSILON {
            0.0
        } else {
            1.0 - self.residual / self.single.residual
        }
    }

    /// True when the break removes less than `min_improvement` of the
    /// single-fit residual.
    pub fn is_single_regime(&self, min_improvement: f64) -> bool {
        self.improvement() < min_improvement
    }
}

#[derive(Debug, Clone, Copy)]
struct LogPoint {
    x: f64,
    lx: f64,
    ly: f64,
    w: f64,
}

fn log_points(x: &[f64], y: &[f64], w: &[f64]) -> Vec<LogPoint> {
    assert!(
        x.len() == y.len() && y.len() == w.len(),
        "x, y and weights must have equal length"
    );
    let mut pts: Vec<LogPoint> = x
        .iter()
        .zip(y)
        .zip(w)
        .filter(|((x, y), w)| **x > 0.0 && **y > 0.0 && **w > 0.0 && x.is_finite() && y.is_finite())
        .map(|((&x, &y), &w)| LogPoint {
            x,
            lx: x.ln(),
            ly: y.ln(),
            w,
        })
        .collect();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    pts
}

fn least_squares(pts: &[LogPoint]) -> Result<PowerLawFit, StatsError> {
    if pts.len() < 3 {
        return Err(StatsError::InsufficientSupport {
            needed: 3,
            found: pts.len(),
        });
    }
    let sw: f64 = pts.iter().map(|p| p.w).sum();
    let mx = pts.iter().map(|p| p.w * p.lx).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.w * p.ly).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.w * (p.lx - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.w * (p.lx - mx) * (p.ly - my)).sum();
    if sxx <= 0.0 {
        return Err(StatsError::InsufficientSupport {
            needed: 3,
            found: 1,
        });
    }
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let residual = pts
        .iter()
        .map(|p| p.w * (p.ly - ln_a - b * p.lx).powi(2))
        .sum();
    Ok(PowerLawFit {
        a: ln_a.exp(),
        b,
        residual,
        breakpoint: None,
    })
}

/// Fits `y = a·x^b` to weighted points. Points with non-positive coordinates
/// or weights are dropped; at least three must remain.
pub fn fit_power_law_points(
    x: &[f64],
    y: &[f64],
    weights: &[f64],
) -> Result<PowerLawFit, StatsError> {
    least_squares(&log_points(x, y, weights))
}

fn histogram_points(hist: &Histogram) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let weights = hist.counts.iter().map(|&c| c as f64).collect();
    (hist.centers(), hist.densities(), weights)
}

/// Fits the bin densities of `hist` at bin centres, weighting each bin by
/// its count. Empty bins are skipped.
pub fn fit_power_law(hist: &Histogram) -> Result<PowerLawFit, StatsError> {
    let (x, y, w) = histogram_points(hist);
    fit_power_law_points(&x, &y, &w)
}

fn scan_breakpoints(
    pts: &[LogPoint],
    boundary: impl Fn(usize) -> f64,
) -> Result<BrokenPowerLawFit, StatsError> {
    if pts.len() < 6 {
        return Err(StatsError::InsufficientSupport {
            needed: 6,
            found: pts.len(),
        });
    }
    let single = least_squares(pts)?;
    let mut best: Option<BrokenPowerLawFit> = None;
    for split in 3..=pts.len() - 3 {
        let (Ok(lower), Ok(upper)) = (least_squares(&pts[..split]), least_squares(&pts[split..]))
        else {
            continue;
        };
        let residual = lower.residual + upper.residual;
        if best.as_ref().is_none_or(|b| residual < b.residual) {
            let breakpoint = boundary(split);
            best = Some(BrokenPowerLawFit {
                breakpoint,
                lower: PowerLawFit {
                    breakpoint: Some(breakpoint),
                    ..lower
                },
                upper: PowerLawFit {
                    breakpoint: Some(breakpoint),
                    ..upper
                },
                residual,
                single,
            });
        }
    }
    best.ok_or(StatsError::InsufficientSupport {
        needed: 6,
        found: pts.len(),
    })
}

/// Two-regime fit on weighted points. The break is placed at the geometric
/// midpoint between the last point of the lower segment and the first point
/// of the upper one; each segment keeps at least three points.
pub fn fit_double_power_law_points(
    x: &[f64],
    y: &[f64],
    weights: &[f64],
) -> Result<BrokenPowerLawFit, StatsError> {
    let pts = log_points(x, y, weights);
    scan_breakpoints(&pts, |k| (pts[k - 1].x * pts[k].x).sqrt())
}

/// Two-regime fit on a histogram; candidate breaks are the lower edges of
/// occupied interior bins.
pub fn fit_double_power_law(hist: &Histogram) -> Result<BrokenPowerLawFit, StatsError> {
    let (x, y, w) = histogram_points(hist);
    let lower_edges: Vec<f64> = hist.edges.iter().take(hist.counts.len()).copied().collect();
    let mut pts = Vec::new();
    let mut edges = Vec::new();
    for i in 0..x.len() {
        if y[i] > 0.0 && w[i] > 0.0 {
            pts.push(LogPoint {
                x: x[i],
                lx: x[i].ln(),
                ly: y[i].ln(),
                w: w[i],
            });
            edges.push(lower_edges[i]);
        }
    }
    scan_breakpoints(&pts, |k| edges[k])
}
