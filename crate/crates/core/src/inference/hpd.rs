use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_HPD_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Number of sorted samples an interval of the given mass must cover.
pub fn hpd_count(n: usize, mass: f64) -> usize {
    ((mass * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Shortest interval covering `ceil(mass·n)` of the samples; ties go to
/// the lowest start.
pub fn hpd_interval(samples: &[f64], mass: f64) -> Result<Interval> {
    if samples.len() < MIN_HPD_SAMPLES {
        return Err(Error::Precondition(format!(
            "HPD interval needs at least {MIN_HPD_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(Error::Precondition(format!("HPD mass {mass} outside (0, 1)")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("HPD samples".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let k = hpd_count(s.len(), mass);
    let mut best = 0;
    for i in 1..=s.len() - k {
        if s[i + k - 1] - s[i] < s[best + k - 1] - s[best] {
            best = i;
        }
    }
    Ok(Interval { lo: s[best], hi: s[best + k - 1] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn uniform_order_statistics() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(hpd_interval(&s, 0.95).unwrap(), Interval { lo: 1.0, hi: 95.0 });
    }

    #[test]
    fn identical_samples() {
        let iv = hpd_interval(&[2.5; 60], 0.95).unwrap();
        assert_eq!(iv.width(), 0.0);
    }

    #[test]
    fn preconditions() {
        assert!(hpd_interval(&[1.0; 49], 0.95).is_err());
        assert!(hpd_interval(&[1.0; 60], 1.0).is_err());
        assert!(hpd_interval(&[1.0; 60], 0.0).is_err());
    }

    #[test]
    fn normal_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let iv = hpd_interval(&s, 0.95).unwrap();
        assert!((iv.lo + 1.96).abs() < 0.1 && (iv.hi - 1.96).abs() < 0.1, "{iv:?}");
    }

    #[test]
    fn narrower_mass_never_widens() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let widths: Vec<f64> = [0.99, 0.95, 0.8, 0.5, 0.1]
            .iter()
            .map(|&m| hpd_interval(&s, m).unwrap().width())
            .collect();
        assert!(widths.windows(2).all(|w| w[1] <= w[0]));
    }
}
