use serde::{Deserialize, Serialize};

/// `θ_d(t) = amplitude·sin(frequency·t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub amplitude: f64,
    pub frequency: f64,
}

impl TrajectorySpec {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `[θ_d, θ̇_d, θ̈_d, θ⃛_d, θ⁗_d]` at `t`.
    pub fn derivs(&self, t: f64) -> [f64; 5] {
        let (a, w) = (self.amplitude, self.frequency);
        let (s, c) = (w * t).sin_cos();
        [
            a * s,
            a * w * c,
            -a * w * w * s,
            -a * w.powi(3) * c,
            a * w.powi(4) * s,
        ]
    }

    /// Supremum of `|θ_d^(k)|`.
    pub fn bound(&self, k: i32) -> f64 {
        (self.amplitude * self.frequency.powi(k)).abs()
    }

    pub fn period(&self) -> Option<f64> {
        (self.frequency != 0.0 && self.amplitude != 0.0)
            .then(|| 2.0 * std::f64::consts::PI / self.frequency.abs())
    }
}
