//! Smooth cutoffs: the partition-of-unity bump b and the plateau cutoff c.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn flat(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step: 0 for x <= 0, 1 for x >= 1.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = flat(x);
    a / (a + flat(1.0 - x))
}

/// b(t) = S(t + l0/2) - S(t - l0/2) with S a smooth step of width w = l0/2 centered at 0,
/// so that the translates b(t + k l0) sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffB {
    pub period: f64,
    pub ramp: f64,
}

impl CutoffB {
    pub fn new(period: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidParameter(format!("cutoff period must be positive, got {period}")));
        }
        Ok(CutoffB { period, ramp: 0.5 * period })
    }

    fn step(&self, t: f64) -> f64 {
        smooth_step(0.5 + t / self.ramp)
    }

    pub fn value(&self, t: f64) -> f64 {
        let h = 0.5 * self.period;
        self.step(t + h) - self.step(t - h)
    }

    /// b vanishes for |t| >= support.
    pub fn support(&self) -> f64 {
        0.5 * (self.period + self.ramp)
    }

    /// sum_k b(t + k l0) - 1.
    pub fn partition_residual(&self, t: f64) -> f64 {
        let m = (self.support() / self.period).ceil() as i64 + 1;
        (-m..=m).map(|k| self.value(t + k as f64 * self.period)).sum::<f64>() - 1.0
    }
}

/// c(t) = 1 on |t| <= R + 1, decaying smoothly to 0 at |t| = R + 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelCutoff {
    pub plateau: f64,
}

impl ModelCutoff {
    /// Plateau covering the support radius `r_support` of every k_nu.
    pub fn for_support(r_support: f64) -> Self {
        ModelCutoff { plateau: r_support + 1.0 }
    }

    pub fn value(&self, t: f64) -> f64 {
        smooth_step(self.plateau + 1.0 - t.abs())
    }

    pub fn support(&self) -> f64 {
        self.plateau + 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity() {
        let b = CutoffB::new(2.0 * (2.0 + 3f64.sqrt()).ln()).unwrap();
        for i in 0..200 {
            let t = -3.0 + 0.031 * i as f64;
            assert!(b.partition_residual(t).abs() < 1e-12);
            assert!(b.value(t) >= 0.0);
        }
        assert_eq!(b.value(b.support()), 0.0);
    }

    #[test]
    fn model_cutoff_plateau() {
        let c = ModelCutoff::for_support(1.0);
        assert_eq!(c.value(0.0), 1.0);
        assert_eq!(c.value(2.0), 1.0);
        assert_eq!(c.value(3.0), 0.0);
        assert!(c.value(2.5) > 0.0 && c.value(2.5) < 1.0);
    }
}
