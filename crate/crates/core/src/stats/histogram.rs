#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinScale {
    Linear,
    Logarithmic,
}

/// Binned sample. Bin `i` covers `[edges[i], edges[i + 1])`, except the last
/// bin of a linear histogram, which is closed on the right.
///
/// `counts` sum plus `underflow` equals the sample size; `underflow` holds
/// values that cannot be placed (non-positive values on a log scale).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub scale: BinScale,
    pub underflow: u64,
}

/// Index `k` of the log bin `[10^(k/pd), 10^((k+1)/pd))` holding `x > 0`.
pub(crate) fn log_bin(x: f64, per_decade: f64) -> i64 {
    let mut k = (x.log10() * per_decade).floor() as i64;
    // log10 rounding can land one bin off at exact edges
    while edge(k + 1, per_decade) <= x {
        k += 1;
    }
    while edge(k, per_decade) > x {
        k -= 1;
    }
    k
}

pub(crate) fn edge(k: i64, per_decade: f64) -> f64 {
    10f64.powf(k as f64 / per_decade)
}

impl Histogram {
    pub fn empty(scale: BinScale) -> Self {
        Self {
            edges: Vec::new(),
            counts: Vec::new(),
            scale,
            underflow: 0,
        }
    }

    /// Log-spaced bins with `per_decade` bins per factor of ten, aligned to
    /// powers of ten.
    pub fn logarithmic(values: &[f64], per_decade: usize) -> Self {
        assert!(per_decade > 0, "per_decade must be positive");
        let pd = per_decade as f64;
        let positive: Vec<f64> = values
            .iter()
            .copied()
            .filter(|v| *v > 0.0 && v.is_finite())
            .collect();
        let underflow = (values.len() - positive.len()) as u64;
        if positive.is_empty() {
            return Self {
                underflow,
                ..Self::empty(BinScale::Logarithmic)
            };
        }
        let (min, max) = min_max(&positive);
        let (k_lo, k_hi) = (log_bin(min, pd), log_bin(max, pd));
        let edges: Vec<f64> = (k_lo..=k_hi + 1).map(|k| edge(k, pd)).collect();
        let mut counts = vec![0u64; (k_hi - k_lo + 1) as usize];
        for &v in &positive {
            counts[(log_bin(v, pd) - k_lo) as usize] += 1;
        }
        Self {
            edges,
            counts,
            scale: BinScale::Logarithmic,
            underflow,
        }
    }

    /// `bins` equal-width bins spanning the sample range.
    pub fn linear(values: &[f64], bins: usize) -> Self {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            return Self {
                underflow: values.len() as u64,
                ..Self::empty(BinScale::Linear)
            };
        }
        let (lo, hi) = min_max(&finite);
        let hi = if hi > lo { hi } else { lo + 1.0 };
        Self::linear_range(values, lo, hi, bins)
    }

    /// `bins` equal-width bins over `[lo, hi]`; values outside count as underflow.
    pub fn linear_range(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        assert!(
            bins > 0 && hi > lo,
            "need at least one bin over a nonempty range"
        );
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        let mut underflow = 0;
        for &v in values {
            if !(lo..=hi).contains(&v) {
                underflow += 1;
                continue;
            }
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Self {
            edges,
            counts,
            scale: BinScale::Linear,
            underflow,
        }
    }

    /// Unit-width bins centred on each integer `0..=max`.
    pub fn integer(values: &[u64]) -> Self {
        let Some(&max) = values.iter().max() else {
            return Self::empty(BinScale::Linear);
        };
        let mut counts = vec![0u64; max as usize + 1];
        for &v in values {
            counts[v as usize] += 1;
        }
        let edges = (0..=max + 1).map(|k| k as f64 - 0.5).collect();
        Self {
            edges,
            counts,
            scale: BinScale::Linear,
            underflow: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn binned(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.binned() + self.underflow
    }

    pub fn widths(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Representative value per bin: geometric centre on log scale,
    /// midpoint on linear scale.
    pub fn centers(&self) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| match self.scale {
                BinScale::Logarithmic => (w[0] * w[1]).sqrt(),
                BinScale::Linear => 0.5 * (w[0] + w[1]),
            })
            .collect()
    }

    /// Probability density per bin: count / (binned total × width).
    pub fn densities(&self) -> Vec<f64> {
        let n = self.binned() as f64;
        self.counts
            .iter()
            .zip(self.widths())
            .map(|(&c, w)| if n > 0.0 { c as f64 / (n * w) } else { 0.0 })
            .collect()
    }

    pub fn nonzero_bins(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    pub fn mean(&self) -> Option<f64> {
        let n = self.binned();
        (n > 0).then(|| {
            self.centers()
                .iter()
                .zip(&self.counts)
                .map(|(x, &c)| x * c as f64)
                .sum::<f64>()
                / n as f64
        })
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn log_bins_put_exact_powers_on_left_edge() {
        let h = Histogram::logarithmic(&[1.0, 10.0, 100.0, 1000.0], 10);
        assert_eq!(h.counts.len(), 31);
        assert_eq!(h.counts[0], 1);
        assert_eq!(h.counts[10], 1);
        assert_eq!(h.counts[20], 1);
        assert_eq!(h.counts[30], 1);
        assert!((h.edges[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_mass_at_one_and_ten() {
        let h = Histogram::logarithmic(&[1.0, 1.0, 10.0], 10);
        let nonzero: Vec<_> = h
            .centers()
            .iter()
            .zip(&h.counts)
            .filter(|(_, &c)| c > 0)
            .map(|(x, &c)| (h.edges[h.centers().iter().position(|y| y == x).unwrap()], c))
            .collect();
        assert_eq!(nonzero.len(), 2);
        assert!((nonzero[0].0 - 1.0).abs() < 1e-12 && nonzero[0].1 == 2);
        assert!((nonzero[1].0 - 10.0).abs() < 1e-9 && nonzero[1].1 == 1);
    }

    #[test]
    fn empty_input() {
        assert!(Histogram::logarithmic(&[], 10).is_empty());
        assert!(Histogram::linear(&[], 10).is_empty());
        assert!(Histogram::integer(&[]).is_empty());
    }

    #[test]
    fn zeros_underflow_on_log_scale() {
        let h = Histogram::logarithmic(&[0.0, 0.0, 3.0], 5);
        assert_eq!(h.underflow, 2);
        assert_eq!(h.total(), 3);
    }

    #[test]
    fn linear_includes_max() {
        let h = Histogram::linear(&[0.0, 0.5, 1.0], 2);
        assert_eq!(h.counts, vec![1, 2]);
    }

    #[test]
    fn integer_bins() {
        let h = Histogram::integer(&[0, 0, 2]);
        assert_eq!(h.counts, vec![2, 0, 1]);
        assert_eq!(h.centers(), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn densities_integrate_to_one() {
        let h = Histogram::logarithmic(&[1.0, 2.0, 3.0, 50.0, 700.0], 10);
        let area: f64 = h
            .densities()
            .iter()
            .zip(h.widths())
            .map(|(d, w)| d * w)
            .sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn log_histogram_conserves_mass(values in prop::collection::vec(0.0f64..1e6, 0..200), pd in 1usize..20) {
            let h = Histogram::logarithmic(&values, pd);
            prop_assert_eq!(h.total() as usize, values.len());
            prop_assert!(h.edges.windows(2).all(|w| w[0] < w[1]));
            if !h.is_empty() {
                prop_assert_eq!(h.edges.len(), h.counts.len() + 1);
            }
            for &v in values.iter().filter(|v| **v > 0.0) {
                prop_assert!(h.edges[0] <= v && v < *h.edges.last().unwrap());
            }
        }

        #[test]
        fn linear_histogram_conserves_mass(values in prop::collection::vec(-1e3f64..1e3, 1..200), bins in 1usize..40) {
            let h = Histogram::linear(&values, bins);
            prop_assert_eq!(h.binned() as usize, values.len());
        }
    }
}
