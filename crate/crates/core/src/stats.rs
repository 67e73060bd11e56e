//! Small statistics helpers: proportions, weighted least squares and the
//! chi-square goodness-of-fit test.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean from the sample variance.
pub fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Binomial standard error of a proportion.
pub fn binomial_se(successes: u64, trials: u64) -> f64 {
    let p = successes as f64 / trials as f64;
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Two-sided standard normal quantile `z` with `P(|Z| ≤ z) = confidence`.
pub fn z_two_sided(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + confidence / 2.0)
}

/// One-sided standard normal quantile.
pub fn z_one_sided(confidence: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(confidence)
}

/// Agresti–Coull interval `(lo, hi)` for a binomial proportion.
pub fn agresti_coull(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    let z = z_two_sided(confidence);
    let n = trials as f64 + z * z;
    let p = (successes as f64 + z * z / 2.0) / n;
    let half = z * (p * (1.0 - p) / n).sqrt();
    ((p - half).max(0.0), (p + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

impl LinearFit {
    pub fn slope_interval(&self, confidence: f64) -> (f64, f64) {
        let z = z_two_sided(confidence);
        (self.slope - z * self.slope_se, self.slope + z * self.slope_se)
    }
}

/// Weighted least squares of `ys` on `xs` with weights `1/σ²`. The slope
/// standard error assumes the weights are exact inverse variances.
pub fn weighted_fit(xs: &[f64], ys: &[f64], weights: &[f64]) -> Option<LinearFit> {
    if xs.len() < 2 {
        return None;
    }
    let sw: f64 = weights.iter().sum();
    let sx: f64 = xs.iter().zip(weights).map(|(x, w)| w * x).sum();
    let sy: f64 = ys.iter().zip(weights).map(|(y, w)| w * y).sum();
    let sxx: f64 = xs.iter().zip(weights).map(|(x, w)| w * x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).zip(weights).map(|((x, y), w)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return None;
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sy - slope * sx) / sw;
    Some(LinearFit {
        slope,
        intercept,
        slope_se: (sw / det).sqrt(),
    })
}

/// Ordinary least squares; the slope error uses the residual variance.
pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    let mut fit = weighted_fit(xs, ys, &vec![1.0; n])?;
    if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - fit.intercept - fit.slope * x).powi(2))
            .sum();
        fit.slope_se *= (rss / (n - 2) as f64).sqrt();
    } else {
        fit.slope_se = f64::NAN;
    }
    Some(fit)
}

/// Pearson statistic of observed counts against expected probabilities.
pub fn chi_square_statistic(observed: &[u64], expected_probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(expected_probs)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

/// Critical value of the chi-square distribution at upper-tail `alpha`.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - alpha)
}

pub fn chi_square_p_value(stat: f64, df: usize) -> f64 {
    1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = ols_fit(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 2.0).abs() < 1e-12);
        assert!(f.slope_se < 1e-10);
        assert!(weighted_fit(&[1.0], &[1.0], &[1.0]).is_none());
    }

    #[test]
    fn chi_square_table_value() {
        // df = 15, alpha = 1e-3: 37.697
        assert!((chi_square_critical(15, 1e-3) - 37.697).abs() < 1e-2);
        assert!((chi_square_p_value(chi_square_critical(3, 0.05), 3) - 0.05).abs() < 1e-9);
        assert_eq!(chi_square_statistic(&[25, 25], &[0.5, 0.5]), 0.0);
    }

    #[test]
    fn intervals() {
        assert!((z_two_sided(0.95) - 1.959964).abs() < 1e-5);
        let (lo, hi) = agresti_coull(0, 1000, 0.95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        assert!((binomial_se(50, 100) - 0.05).abs() < 1e-12);
        assert!((std_error(&[1.0, 3.0]) - 1.0).abs() < 1e-12);
    }
}
