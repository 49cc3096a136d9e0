use crate::error::{Error, Result};

/// Classic fourth-order Runge–Kutta with reusable scratch space.
#[derive(Debug, Clone, Default)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// Advances `y` from `t` to `t + dt` in place. `f(t, y, dy)` writes the derivative.
    pub fn step<F>(&mut self, t: f64, y: &mut [f64], dt: f64, mut f: F) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        if self.k1.len() != n {
            *self = Self::new(n);
        }
        let h = 0.5 * dt;
        f(t, y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k1[i];
        }
        f(t + h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k2[i];
        }
        f(t + h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + dt * self.k3[i];
        }
        f(t + dt, &self.tmp, &mut self.k4);
        for i in 0..n {
            y[i] += dt / 6.0 * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
        if y.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFiniteState(t + dt))
        }
    }
}

/// Single allocation-per-call step, for callers without a persistent integrator.
pub fn rk4_step<F>(y: &[f64], t: f64, dt: f64, f: F) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size {dt} must be positive"
        )));
    }
    let mut out = y.to_vec();
    Rk4::new(y.len()).step(t, &mut out, dt, f)?;
    Ok(out)
}
