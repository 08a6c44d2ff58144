//! Small statistics helpers shared by tests and experiment harnesses.

use crate::error::{Error, Result};

/// Kolmogorov-Smirnov distance between a sorted sample and a reference CDF.
pub fn ks_one_sample(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Usage("KS distance needs a nonempty sample".into()));
    }
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max((f - (i as f64 + 1.0) / n).abs());
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov distance (both samples sorted).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Usage("KS distance needs nonempty samples".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        // Advance both walkers past the smallest outstanding value so ties
        // move the two empirical CDFs together.
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Quantile of a sorted sample by linear interpolation, q in [0, 1].
pub fn quantile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Usage("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("quantile level {q} outside [0, 1]")));
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    if lo + 1 >= sorted.len() {
        return Ok(sorted[sorted.len() - 1]);
    }
    let w = pos - lo as f64;
    Ok(sorted[lo] * (1.0 - w) + sorted[lo + 1] * w)
}

pub fn median(sorted: &[f64]) -> Result<f64> {
    quantile(sorted, 0.5)
}

/// Least-squares line fit, returning (slope, intercept).
pub fn slope_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Usage("slope fit needs two equal-length samples of size >= 2".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::domain("slope fit with degenerate abscissas"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Consecutive differences of a sorted sequence.
pub fn spacings(sorted: &[f64]) -> Vec<f64> {
    sorted.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Hausdorff distance between two finite point sets on the line.
pub fn hausdorff(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Usage("Hausdorff distance needs nonempty sets".into()));
    }
    let one_sided = |from: &[f64], to: &[f64]| -> f64 {
        from.iter()
            .map(|&x| to.iter().map(|&y| (x - y).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(one_sided(a, b).max(one_sided(b, a)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ks_against_exact_cdf() {
        // Sample = exact quantiles of U[0,1] -> KS = 1/(2n).
        let n = 100;
        let sample: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_one_sample(&sample, |x| x.clamp(0.0, 1.0)).unwrap();
        assert_relative_eq!(d, 0.5 / n as f64, epsilon = 1e-12);
    }

    #[test]
    fn ks_two_sample_disjoint() {
        let a = [0.0, 1.0, 2.0];
        let b = [5.0, 6.0];
        assert_relative_eq!(ks_two_sample(&a, &b).unwrap(), 1.0);
        let d = ks_two_sample(&a, &a).unwrap();
        assert_relative_eq!(d, 0.0);
    }

    #[test]
    fn quantiles_and_median() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_relative_eq!(quantile(&v, 1.0).unwrap(), 4.0);
        assert_relative_eq!(median(&v).unwrap(), 2.5);
        assert_relative_eq!(quantile(&v, 0.25).unwrap(), 1.75);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 7.0).collect();
        let (m, b) = slope_fit(&xs, &ys).unwrap();
        assert_relative_eq!(m, 3.0, epsilon = 1e-12);
        assert_relative_eq!(b, -7.0, epsilon = 1e-10);
    }

    #[test]
    fn hausdorff_examples() {
        assert_relative_eq!(hausdorff(&[0.0, 1.0], &[0.0, 1.2]).unwrap(), 0.2);
        assert_relative_eq!(hausdorff(&[0.0], &[3.0, 0.1]).unwrap(), 3.0);
        assert_eq!(spacings(&[1.0, 2.0, 4.0]), vec![1.0, 2.0]);
    }
}
