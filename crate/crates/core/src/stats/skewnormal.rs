//! Skew-normal ("skewed Gaussian") distribution and its least-squares fit to
//! histogram densities.
//!
//! Density: `2/ω · φ((x−ξ)/ω) · Φ(α(x−ξ)/ω)` with location ξ, scale ω and
//! shape α. The moment skewness γ is a function of α alone and is bounded by
//! roughly ±0.995.

use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;

use super::histogram::Histogram;
use super::simplex::NelderMead;
use super::StatsError;

/// Largest attainable |γ| (the half-normal limit).
pub const MAX_SKEWNESS: f64 = 0.995_271_746_431_156;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewNormal {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
}

fn std_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn std_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

impl SkewNormal {
    pub fn new(location: f64, scale: f64, shape: f64) -> Self {
        assert!(scale > 0.0, "scale must be positive");
        Self {
            location,
            scale,
            shape,
        }
    }

    pub fn delta(&self) -> f64 {
        self.shape / (1.0 + self.shape * self.shape).sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.location) / self.scale;
        2.0 / self.scale * std_pdf(z) * std_cdf(self.shape * z)
    }

    pub fn mean(&self) -> f64 {
        self.location + self.scale * self.delta() * FRAC_2_PI.sqrt()
    }

    pub fn variance(&self) -> f64 {
        self.scale * self.scale * (1.0 - FRAC_2_PI * self.delta().powi(2))
    }

    /// Moment skewness γ.
    pub fn skewness(&self) -> f64 {
        skewness_of_shape(self.shape)
    }

    /// Location of the density maximum, found by golden-section search
    /// (the density is log-concave, hence unimodal).
    pub fn mode(&self) -> f64 {
        let (mut lo, mut hi) = (
            self.location - 2.0 * self.scale,
            self.location + 2.0 * self.scale,
        );
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - g * (hi - lo);
        let mut d = lo + g * (hi - lo);
        let (mut fc, mut fd) = (self.pdf(c), self.pdf(d));
        for _ in 0..200 {
            if fc > fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - g * (hi - lo);
                fc = self.pdf(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + g * (hi - lo);
                fd = self.pdf(d);
            }
            if hi - lo < 1e-12 * self.scale {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let d = self.delta();
        let u0: f64 = rng.sample(StandardNormal);
        let u1: f64 = rng.sample(StandardNormal);
        self.location + self.scale * (d * u0.abs() + (1.0 - d * d).sqrt() * u1)
    }

    /// Inverts the moment map: the distribution with the given mean, standard
    /// deviation and skewness (clamped into the attainable range).
    pub fn from_moments(mean: f64, sd: f64, skewness: f64) -> Self {
        let g = skewness.clamp(-0.99 * MAX_SKEWNESS, 0.99 * MAX_SKEWNESS);
        let c = (2.0 * g.abs() / (4.0 - PI)).cbrt();
        let mu_z = (c / (1.0 + c * c).sqrt()).copysign(g);
        let delta = mu_z / FRAC_2_PI.sqrt();
        let shape = delta / (1.0 - delta * delta).sqrt();
        let scale = sd / (1.0 - mu_z * mu_z).sqrt();
        Self {
            location: mean - scale * mu_z,
            scale,
            shape,
        }
    }
}

pub fn skewness_of_shape(shape: f64) -> f64 {
    let d = shape / (1.0 + shape * shape).sqrt();
    let mu = d * FRAC_2_PI.sqrt();
    (4.0 - PI) / 2.0 * mu.powi(3) / (1.0 - mu * mu).powf(1.5)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewGaussianFit {
    pub location: f64,
    pub scale: f64,
    /// Shape parameter α of the density.
    pub shape: f64,
    /// Moment skewness derived from α.
    pub gamma: f64,
    /// Density maximum, in the histogram's units.
    pub mode: f64,
    /// Sum of squared density residuals.
    pub residual: f64,
    pub iterations: usize,
}

impl SkewGaussianFit {
    pub fn distribution(&self) -> SkewNormal {
        SkewNormal::new(self.location, self.scale, self.shape)
    }
}

fn binned_moments(centers: &[f64], counts: &[u64]) -> (f64, f64, f64) {
    let n: f64 = counts.iter().map(|&c| c as f64).sum();
    let mean = centers
        .iter()
        .zip(counts)
        .map(|(x, &c)| x * c as f64)
        .sum::<f64>()
        / n;
    let m = |k: i32| {
        centers
            .iter()
            .zip(counts)
            .map(|(x, &c)| (x - mean).powi(k) * c as f64)
            .sum::<f64>()
            / n
    };
    let var = m(2);
    let skew = if var > 0.0 { m(3) / var.powf(1.5) } else { 0.0 };
    (mean, var.sqrt(), skew)
}

/// Fits a skew-normal density to the normalised bin heights of `hist` by
/// least squares. Each bin's model height is the Simpson average of the
/// density across the bin.
pub fn fit_skew_gaussian(hist: &Histogram) -> Result<SkewGaussianFit, StatsError> {
    let nonzero = hist.nonzero_bins();
    if nonzero < 5 {
        return Err(StatsError::InsufficientSupport {
            needed: 5,
            found: nonzero,
        });
    }
    let centers = hist.centers();
    let (mean, sd, skew) = binned_moments(&centers, &hist.counts);
    let sd = if sd > 0.0 { sd } else { 1.0 };

    // work in standardised units so the simplex sees O(1) parameters
    let edges: Vec<f64> = hist.edges.iter().map(|e| (e - mean) / sd).collect();
    let observed: Vec<f64> = hist.densities().iter().map(|d| d * sd).collect();
    let cost = |p: &[f64]| {
        let sn = SkewNormal {
            location: p[0],
            scale: p[1].exp(),
            shape: p[2],
        };
        edges
            .windows(2)
            .zip(&observed)
            .map(|(w, obs)| {
                let model = (sn.pdf(w[0]) + 4.0 * sn.pdf(0.5 * (w[0] + w[1])) + sn.pdf(w[1])) / 6.0;
                (model - obs).powi(2)
            })
            .sum::<f64>()
    };

    let nm = NelderMead::default();
    let mut starts = vec![SkewNormal::from_moments(0.0, 1.0, skew)];
    for shape in [-4.0, 0.0, 4.0] {
        let sn = SkewNormal {
            shape,
            ..SkewNormal::from_moments(0.0, 1.0, skewness_of_shape(shape))
        };
        starts.push(sn);
    }
    let mut best: Option<super::simplex::Minimum> = None;
    let mut iterations = 0;
    for s in starts {
        let mut m = nm.minimize(cost, &[s.location, s.scale.ln(), s.shape], &[0.2, 0.2, 1.0]);
        iterations += m.iterations;
        // restart from the optimum until it stops moving
        for _ in 0..5 {
            let again = nm.minimize(cost, &m.x, &[0.05, 0.05, 0.25]);
            iterations += again.iterations;
            let settled = again.converged
                && (m.value - again.value).abs() <= 1e-12 * m.value.abs().max(1e-300);
            m = super::simplex::Minimum {
                converged: again.converged,
                ..again
            };
            if settled {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    if !best.converged {
        return Err(StatsError::NonConvergence { iterations });
    }

    let fitted = SkewNormal {
        location: mean + sd * best.x[0],
        scale: sd * best.x[1].exp(),
        shape: best.x[2],
    };
    Ok(SkewGaussianFit {
        location: fitted.location,
        scale: fitted.scale,
        shape: fitted.shape,
        gamma: fitted.skewness(),
        mode: fitted.mode(),
        residual: best.value / sd,
        iterations,
    })
}
