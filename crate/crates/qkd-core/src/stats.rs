//! Binomial proportion estimates with Wilson score intervals.

/// Two-sided 99% standard normal quantile, z such that Φ(z) = 0.995.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Empirical frequency of an event over independent trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub trials: u64,
    pub hits: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl McEstimate {
    /// Estimate with a 99% Wilson score interval.
    pub fn wilson99(hits: u64, trials: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(hits, trials, Z_99);
        let estimate = if trials == 0 {
            0.0
        } else {
            hits as f64 / trials as f64
        };
        McEstimate {
            trials,
            hits,
            estimate,
            ci_low,
            ci_high,
        }
    }

    /// True unless the whole interval lies above `bound`.
    pub fn consistent_with_upper_bound(&self, bound: f64) -> bool {
        self.ci_low <= bound
    }
}

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_hits_has_zero_lower_edge() {
        let e = McEstimate::wilson99(0, 1000);
        assert_eq!(e.ci_low, 0.0);
        assert!(e.ci_high > 0.0 && e.ci_high < 0.01);
    }

    #[test]
    fn interval_contains_estimate() {
        for hits in [1u64, 10, 250, 999] {
            let e = McEstimate::wilson99(hits, 1000);
            assert!(e.ci_low <= e.estimate && e.estimate <= e.ci_high);
        }
    }

    #[test]
    fn reference_value() {
        // 50/100 at z = 2.5758: centre 0.5, half-width z*sqrt(0.25/100 + z^2/40000)/(1+z^2/100)
        let (lo, hi) = wilson_interval(50, 100, Z_99);
        assert!((lo - 0.375_279_625_044_839_9).abs() < 1e-12, "{lo}");
        assert!((hi - 0.624_720_374_955_160_2).abs() < 1e-12, "{hi}");
    }
}
