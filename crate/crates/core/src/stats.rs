/// Sample mean with its standard error across independent replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// `NaN` with fewer than two samples.
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_err: f64::NAN,
                samples: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_err = if n < 2 {
            f64::NAN
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        };
        Self {
            mean,
            std_err,
            samples: n,
        }
    }

    /// `(mean - expected) / std_err`; 0 when both the spread and the gap vanish.
    pub fn z_score(&self, expected: f64) -> f64 {
        let gap = self.mean - expected;
        if self.std_err == 0.0 {
            if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(gap)
            }
        } else {
            gap / self.std_err
        }
    }

    pub fn within(&self, expected: f64, sigmas: f64) -> bool {
        self.z_score(expected).abs() <= sigmas
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mean_and_standard_error() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // sample variance 5/3, se = sqrt(5/12)
        assert_abs_diff_eq!(e.std_err, (5.0f64 / 12.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(e.z_score(2.0), 0.5 / (5.0f64 / 12.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn degenerate_samples() {
        assert!(Estimate::from_samples(&[]).mean.is_nan());
        assert!(Estimate::from_samples(&[3.0]).std_err.is_nan());
        let flat = Estimate::from_samples(&[0.0, 0.0, 0.0]);
        assert_eq!(flat.z_score(0.0), 0.0);
        assert!(flat.z_score(1.0).is_infinite());
        assert!(flat.within(0.0, 3.0));
    }
}
