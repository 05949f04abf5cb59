//! Sample summaries and the log-log slope fit.

use alloc::vec::Vec;

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation over `√n`; zero for fewer than two samples.
    pub std_err: f64,
}

impl SampleSummary {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return SampleSummary {
                n,
                mean: f64::NAN,
                std_err: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_err = if n < 2 {
            0.0
        } else {
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
            libm::sqrt(var / n as f64)
        };
        SampleSummary { n, mean, std_err }
    }

    pub fn from_counts<I: IntoIterator<Item = usize>>(xs: I) -> Self {
        let v: Vec<f64> = xs.into_iter().map(|x| x as f64).collect();
        Self::from_samples(&v)
    }

    /// Normal-approximation interval `mean ± z·std_err`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.mean - z * self.std_err, self.mean + z * self.std_err)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PowerFit {
    /// Fitted exponent of `y ≈ c·x^exponent`.
    pub exponent: f64,
    pub log_coefficient: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln x, ln y)`. Needs at least two points, all
/// strictly positive, with at least two distinct `x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<PowerFit> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| (libm::log(x), libm::log(y)))
        .collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let exponent = sxy / sxx;
    let r_squared = if syy <= 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some(PowerFit {
        exponent,
        log_coefficient: my - exponent * mx,
        r_squared,
    })
}
