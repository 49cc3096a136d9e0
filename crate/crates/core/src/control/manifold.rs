use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `J_sd(τ) = quad·τ² + offset` on `|τ| ≤ tau_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub quad: f64,
    pub offset: f64,
    pub tau_max: f64,
}

impl Default for ManifoldSpec {
    fn default() -> Self {
        Self {
            quad: 0.0125,
            offset: 0.025,
            tau_max: 5.0,
        }
    }
}

impl ManifoldSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.offset > 0.0) || !(self.quad >= 0.0) || !(self.tau_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "manifold needs offset > 0, quad >= 0, tau_max > 0 (got {self:?})"
            )));
        }
        Ok(())
    }

    pub fn j_sd(&self, tau: f64) -> f64 {
        self.quad * tau * tau + self.offset
    }

    pub fn slope(&self, tau: f64) -> f64 {
        2.0 * self.quad * tau
    }

    pub fn curvature(&self) -> f64 {
        2.0 * self.quad
    }

    pub fn slope_max(&self) -> f64 {
        2.0 * self.quad * self.tau_max
    }

    pub fn j_min(&self) -> f64 {
        self.offset
    }

    pub fn j_max(&self) -> f64 {
        self.j_sd(self.tau_max)
    }

    pub fn clamp(&self, tau: f64) -> (f64, bool) {
        if tau > self.tau_max {
            (self.tau_max, true)
        } else if tau < -self.tau_max {
            (-self.tau_max, true)
        } else {
            (tau, false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn values() {
        let m = ManifoldSpec::default();
        assert_eq!(m.j_sd(0.0), 0.025);
        assert_relative_eq!(m.j_max(), 0.3375);
        assert_relative_eq!(m.slope_max(), 0.125);
        assert_eq!(m.clamp(7.0), (5.0, true));
        assert_eq!(m.clamp(-1.0), (-1.0, false));
    }
}
