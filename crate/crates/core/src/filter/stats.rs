use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Grid resolution of [`kde`].
pub const KDE_POINTS: usize = 512;

pub fn mae(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::Empty("errors"));
    }
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

fn sample_std(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `1.06 * sigma * n^(-1/5)`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    1.06 * sample_std(samples) * (samples.len() as f64).powf(-0.2)
}

/// Gaussian kernel density on `KDE_POINTS` evenly spaced points covering
/// `[min - 3h, max + 3h]`.
pub fn kde(samples: &[f64], bandwidth: Option<f64>) -> Result<Vec<(f64, f64)>> {
    if samples.len() < 2 {
        return Err(invalid("samples", "need at least two"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("samples"));
    }
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
        (lo.min(x), hi.max(x))
    });
    if lo == hi {
        return Err(Error::Degenerate("all samples equal"));
    }
    let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(samples));
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("bandwidth", format!("must be positive, got {h}")));
    }
    let (start, end) = (lo - 3.0 * h, hi + 3.0 * h);
    let step = (end - start) / (KDE_POINTS - 1) as f64;
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * PI).sqrt());
    Ok((0..KDE_POINTS)
        .map(|i| {
            let x = start + i as f64 * step;
            let d: f64 = samples.iter().map(|s| (-0.5 * ((x - s) / h).powi(2)).exp()).sum();
            (x, d * norm)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::sample_error_magnitude;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn trapezoid(curve: &[(f64, f64)]) -> f64 {
        curve
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
            .sum()
    }

    fn mode(curve: &[(f64, f64)]) -> f64 {
        curve.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[3.0]).unwrap(), 3.0);
        assert_eq!(mae(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert!(mae(&[]).is_err());
    }

    #[test]
    fn mae_of_rayleigh_samples() {
        let mut r = rng::stream(&[3]);
        let s: Vec<f64> = (0..100_000)
            .map(|_| sample_error_magnitude(2.0, &mut r).unwrap())
            .collect();
        let m = mae(&s).unwrap();
        assert!((m / 1.772_453_850_9 - 1.0).abs() < 0.01, "{m}");
    }

    #[test]
    fn normal_kde_integrates_and_peaks_at_zero() {
        // A single 10^4-sample mode wanders by ~0.09, so average replicates.
        let mut r = rng::stream(&[4]);
        let mut modes = 0.0;
        for _ in 0..20 {
            let s: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut r)).collect();
            let c = kde(&s, None).unwrap();
            assert_eq!(c.len(), KDE_POINTS);
            assert!((trapezoid(&c) - 1.0).abs() < 0.01);
            modes += mode(&c) / 20.0;
        }
        assert!(modes.abs() < 0.05, "{modes}");
    }

    #[test]
    fn rayleigh_kde_is_right_skewed() {
        let mut r = rng::stream(&[5]);
        let s: Vec<f64> = (0..20_000)
            .map(|_| sample_error_magnitude(7.0, &mut r).unwrap())
            .collect();
        let c = kde(&s, None).unwrap();
        assert!((trapezoid(&c) - 1.0).abs() < 0.01);
        let m = mode(&c);
        assert!((m - 7.0 / 2f64.sqrt()).abs() < 0.35, "{m}");
        let mean = mae(&s).unwrap();
        assert!(mean > m);
    }

    #[test]
    fn kde_rejects_degenerate_input() {
        assert!(kde(&[1.0], None).is_err());
        assert!(kde(&[2.0, 2.0, 2.0], None).is_err());
        assert!(kde(&[1.0, 2.0], Some(0.0)).is_err());
        assert!(kde(&[1.0, f64::NAN], None).is_err());
    }

    #[test]
    fn explicit_bandwidth_sets_span() {
        let c = kde(&[0.0, 1.0], Some(0.5)).unwrap();
        assert_eq!(c[0].0, -1.5);
        assert!((c[KDE_POINTS - 1].0 - 2.5).abs() < 1e-12);
    }
}
