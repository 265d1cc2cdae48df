use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::domain::{clamp_accuracy, ACCURACY_CLAMP};
use crate::error::{Error, Result};

/// Population distribution of worker accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AccuracyDistribution {
    Beta {
        alpha: f64,
        beta: f64,
    },
    TruncatedNormal {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
    },
    PointMass {
        mu: f64,
    },
}

impl Default for AccuracyDistribution {
    fn default() -> Self {
        AccuracyDistribution::Beta {
            alpha: 7.0,
            beta: 3.0,
        }
    }
}

impl AccuracyDistribution {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match *self {
            AccuracyDistribution::Beta { alpha, beta } => {
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return bad(format!(
                        "beta shape parameters must be positive, got ({alpha}, {beta})"
                    ));
                }
            }
            AccuracyDistribution::TruncatedNormal { mean, sd, lo, hi } => {
                if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
                    return bad(format!(
                        "need a finite mean and positive sd, got ({mean}, {sd})"
                    ));
                }
                if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return bad(format!(
                        "truncation [{lo}, {hi}] must be a sub-interval of [0, 1]"
                    ));
                }
                let n = Normal::new(mean, sd).expect("validated above");
                if n.cdf(hi) - n.cdf(lo) <= 1e-12 {
                    return bad("truncation interval carries no probability mass".into());
                }
            }
            AccuracyDistribution::PointMass { mu } => {
                if !(0.0..=1.0).contains(&mu) {
                    return bad(format!("point mass {mu} outside [0, 1]"));
                }
            }
        }
        Ok(())
    }

    /// Mean accuracy of the population.
    pub fn mean(&self) -> f64 {
        match *self {
            AccuracyDistribution::Beta { alpha, beta } => alpha / (alpha + beta),
            AccuracyDistribution::TruncatedNormal { mean, sd, lo, hi } => {
                let std = Normal::new(0.0, 1.0).expect("standard normal");
                let (a, b) = ((lo - mean) / sd, (hi - mean) / sd);
                let z = std.cdf(b) - std.cdf(a);
                mean + sd * (std.pdf(a) - std.pdf(b)) / z
            }
            AccuracyDistribution::PointMass { mu } => clamp_accuracy(mu, ACCURACY_CLAMP),
        }
    }

    /// One accuracy, clamped into the open unit interval.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let raw = match *self {
            AccuracyDistribution::Beta { alpha, beta } => Beta::new(alpha, beta)
                .expect("validated shape parameters")
                .sample(rng),
            AccuracyDistribution::TruncatedNormal { mean, sd, lo, hi } => {
                // inverse-CDF sampling restricted to [lo, hi]
                let n = Normal::new(mean, sd).expect("validated parameters");
                let (flo, fhi) = (n.cdf(lo), n.cdf(hi));
                let u = flo + (fhi - flo) * rng.random::<f64>();
                let x = n.inverse_cdf(u);
                let eps = 1e-12;
                x.clamp(lo + eps, hi - eps)
            }
            AccuracyDistribution::PointMass { mu } => mu,
        };
        clamp_accuracy(raw, ACCURACY_CLAMP)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validation() {
        assert!(AccuracyDistribution::Beta {
            alpha: 0.0,
            beta: 1.0
        }
        .validate()
        .is_err());
        assert!(AccuracyDistribution::PointMass { mu: 1.2 }
            .validate()
            .is_err());
        let tn = AccuracyDistribution::TruncatedNormal {
            mean: 0.7,
            sd: 0.1,
            lo: 0.6,
            hi: 0.5,
        };
        assert!(tn.validate().is_err());
        let tn = AccuracyDistribution::TruncatedNormal {
            mean: 0.7,
            sd: 0.1,
            lo: 0.5,
            hi: 1.0,
        };
        assert!(tn.validate().is_ok());
    }

    #[test]
    fn truncated_normal_mean_matches_samples() {
        let tn = AccuracyDistribution::TruncatedNormal {
            mean: 0.6,
            sd: 0.2,
            lo: 0.5,
            hi: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean: f64 = (0..n).map(|_| tn.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - tn.mean()).abs() < 2e-3, "{mean} vs {}", tn.mean());
    }

    #[test]
    fn serde_tagging() {
        let json = r#"{"family":"truncated_normal","mean":0.7,"sd":0.1,"lo":0.5,"hi":1.0}"#;
        let d: AccuracyDistribution = serde_json::from_str(json).unwrap();
        assert!(matches!(d, AccuracyDistribution::TruncatedNormal { .. }));
        let d: AccuracyDistribution =
            serde_json::from_str(r#"{"family":"point_mass","mu":0.7}"#).unwrap();
        assert_eq!(d.mean(), 0.7);
    }
}
