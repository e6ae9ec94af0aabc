use crate::error::{invalid, Result};

/// Stampede probability over `n` trials with a normal-approximation 95%
/// interval, clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub p: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    /// Sample standard deviation of the indicators (n - 1 denominator).
    pub sigma: f64,
}

impl ProbabilityEstimate {
    /// `1.96 * sigma / sqrt(n)`, before clamping.
    pub fn half_width(&self) -> f64 {
        1.96 * self.sigma / (self.n as f64).sqrt()
    }
}

pub fn estimate(outcomes: &[bool]) -> Result<ProbabilityEstimate> {
    let n = outcomes.len();
    if n < 2 {
        return Err(invalid("trials", format!("need at least 2 outcomes, got {n}")));
    }
    let k = outcomes.iter().filter(|&&x| x).count() as f64;
    let nf = n as f64;
    let p = k / nf;
    // sum of squared deviations of 0/1 indicators is k(1 - p)
    let sigma = (k * (1.0 - p) / (nf - 1.0)).sqrt();
    let h = 1.96 * sigma / nf.sqrt();
    Ok(ProbabilityEstimate {
        p,
        ci_low: (p - h).max(0.0),
        ci_high: (p + h).min(1.0),
        n,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn outcomes(ones: usize, zeros: usize) -> Vec<bool> {
        let mut v = vec![true; ones];
        v.extend(std::iter::repeat_n(false, zeros));
        v
    }

    #[test]
    fn all_zero() {
        let e = estimate(&outcomes(0, 1000)).unwrap();
        assert_eq!((e.p, e.ci_low, e.ci_high, e.sigma), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn closed_form_half_widths() {
        let e = estimate(&outcomes(500, 500)).unwrap();
        assert_eq!(e.p, 0.5);
        // sigma = sqrt(250 / 999)
        assert!((e.sigma - 0.500_250_187_656).abs() < 1e-9);
        assert!((e.half_width() - 0.031_005).abs() < 1e-5);
        let e = estimate(&outcomes(100, 900)).unwrap();
        assert_eq!(e.p, 0.1);
        assert!((e.half_width() - 0.018_604).abs() < 1e-5);
    }

    #[test]
    fn rejects_fewer_than_two() {
        assert!(estimate(&[]).is_err());
        assert!(estimate(&[true]).is_err());
    }

    #[test]
    fn coverage_near_nominal() {
        for (i, p_true) in [0.1, 0.5, 0.9].into_iter().enumerate() {
            let mut r = rng::stream(&[77, i as u64]);
            let hits = (0..500)
                .filter(|_| {
                    let o: Vec<bool> = (0..1000).map(|_| r.random_bool(p_true)).collect();
                    let e = estimate(&o).unwrap();
                    e.ci_low <= p_true && p_true <= e.ci_high
                })
                .count();
            let cov = hits as f64 / 500.0;
            assert!((0.93..=0.97).contains(&cov), "p={p_true}: coverage {cov}");
        }
    }

    proptest! {
        #[test]
        fn bounds_ordered(v in proptest::collection::vec(any::<bool>(), 2..300)) {
            let e = estimate(&v).unwrap();
            prop_assert!(0.0 <= e.ci_low && e.ci_low <= e.p && e.p <= e.ci_high && e.ci_high <= 1.0);
        }

        #[test]
        fn order_invariant(mut v in proptest::collection::vec(any::<bool>(), 2..300), seed: u64) {
            let a = estimate(&v).unwrap();
            let mut r = rng::stream(&[seed]);
            for i in (1..v.len()).rev() {
                v.swap(i, r.random_range(0..=i));
            }
            prop_assert_eq!(a, estimate(&v).unwrap());
        }
    }
}
