//! Adaptive Dormand–Prince 5(4) integrator with exact landing on output points.

use std::fmt;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order solution minus embedded fourth-order solution
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Why an integration stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegrationError {
    /// The right-hand side refused to evaluate (left its domain) and the step
    /// could not be shrunk further. `t_reached` is the last accepted time.
    DomainExit { t_reached: f64 },
    /// Step size underflow without a domain exit.
    StepUnderflow { t_reached: f64 },
    TooManySteps { t_reached: f64 },
    NonFinite { t_reached: f64 },
}

impl IntegrationError {
    pub fn t_reached(&self) -> f64 {
        match *self {
            IntegrationError::DomainExit { t_reached }
            | IntegrationError::StepUnderflow { t_reached }
            | IntegrationError::TooManySteps { t_reached }
            | IntegrationError::NonFinite { t_reached } => t_reached,
        }
    }
}

impl fmt::Display for IntegrationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrationError::DomainExit { t_reached } => {
                write!(f, "right-hand side left its domain after t = {t_reached}")
            }
            IntegrationError::StepUnderflow { t_reached } => {
                write!(f, "step size underflow at t = {t_reached}")
            }
            IntegrationError::TooManySteps { t_reached } => {
                write!(f, "step budget exhausted at t = {t_reached}")
            }
            IntegrationError::NonFinite { t_reached } => {
                write!(f, "non-finite state at t = {t_reached}")
            }
        }
    }
}

/// Tolerances and limits for [`Rk45::solve`].
#[derive(Debug, Clone, Copy)]
pub struct Rk45 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Smallest step allowed, relative to `max(1, |t|)`.
    pub h_min_rel: f64,
}

impl Default for Rk45 {
    fn default() -> Self {
        Rk45 {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 2_000_000,
            h_min_rel: 1e-14,
        }
    }
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

impl Rk45 {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Rk45 {
            rtol,
            atol,
            ..Default::default()
        }
    }

    /// Integrates `y' = rhs(t, y)` from `(t0, y0)` and returns the state at each
    /// of `outputs`, which must be ordered away from `t0` (all increasing or all
    /// decreasing). The integrator never steps past an output point.
    ///
    /// `rhs` returns `None` when `(t, y)` lies outside its domain; the step is
    /// then rejected and shrunk.
    pub fn solve<const N: usize, F>(
        &self,
        mut rhs: F,
        t0: f64,
        y0: [f64; N],
        outputs: &[f64],
    ) -> Result<Vec<[f64; N]>, IntegrationError>
    where
        F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    {
        let mut result = Vec::with_capacity(outputs.len());
        if outputs.is_empty() {
            return Ok(result);
        }
        let t_end = *outputs.last().unwrap();
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };

        let mut t = t0;
        let mut y = y0;
        let mut k1 = rhs(t, &y).ok_or(IntegrationError::DomainExit { t_reached: t })?;
        let span = (t_end - t0).abs();
        let mut h = (1e-3 * span.max(1e-3)).max(1e-8);
        let mut steps = 0usize;

        for &target in outputs {
            debug_assert!(dir * (target - t) >= -1e-15 * t.abs().max(1.0));
            while dir * (target - t) > 0.0 {
                steps += 1;
                if steps > self.max_steps {
                    return Err(IntegrationError::TooManySteps { t_reached: t });
                }
                let remaining = (target - t).abs();
                let mut last = false;
                let mut step = h;
                if step >= remaining {
                    step = remaining;
                    last = true;
                }
                let hs = dir * step;
                let attempt = self.attempt(&mut rhs, t, &y, &k1, hs);
                let h_min = self.h_min_rel * t.abs().max(1.0);
                match attempt {
                    Some((y_new, k7, err)) if err.is_finite() => {
                        if err <= 1.0 {
                            t = if last { target } else { t + hs };
                            y = y_new;
                            k1 = k7;
                            if y.iter().any(|v| !v.is_finite()) {
                                return Err(IntegrationError::NonFinite { t_reached: t });
                            }
                            let fac = if err == 0.0 {
                                5.0
                            } else {
                                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                            };
                            // a forced short landing step says nothing about the natural step
                            if !last || fac < 1.0 {
                                h = step * fac;
                            }
                        } else {
                            h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                            if h < h_min {
                                return Err(IntegrationError::StepUnderflow { t_reached: t });
                            }
                        }
                    }
                    _ => {
                        h = step * 0.25;
                        if h < h_min {
                            return Err(IntegrationError::DomainExit { t_reached: t });
                        }
                    }
                }
            }
            result.push(y);
        }
        Ok(result)
    }

    fn attempt<const N: usize, F>(
        &self,
        rhs: &mut F,
        t: f64,
        y: &[f64; N],
        k1: &[f64; N],
        h: f64,
    ) -> Option<([f64; N], [f64; N], f64)>
    where
        F: FnMut(f64, &[f64; N]) -> Option<[f64; N]>,
    {
        let k2 = rhs(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
        let k3 = rhs(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
        let k4 = rhs(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = rhs(
            t + C5 * h,
            &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        )?;
        let k6 = rhs(
            t + h,
            &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y_new = axpy(
            y,
            h,
            &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = rhs(t + h, &y_new)?;
        let mut err = 0.0f64;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        Some((y_new, k7, err))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_hits_outputs() {
        let outs: Vec<f64> = (1..=10).map(|i| i as f64 * 0.3).collect();
        let sol = Rk45::default()
            .solve(|_, y: &[f64; 1]| Some([y[0]]), 0.0, [1.0], &outs)
            .unwrap();
        for (t, y) in outs.iter().zip(&sol) {
            assert!((y[0] / t.exp() - 1.0).abs() < 1e-9, "t={t} y={}", y[0]);
        }
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let outs = [-1.0, -2.0, -3.0];
        let sol = Rk45::default()
            .solve(|_, y: &[f64; 2]| Some([y[1], -y[0]]), 0.0, [0.0, 1.0], &outs)
            .unwrap();
        for (t, y) in outs.iter().zip(&sol) {
            assert!((y[0] - t.sin()).abs() < 1e-9);
            assert!((y[1] - t.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn domain_exit_reports_last_time() {
        // y' = 1 is refused beyond t = 0.5
        let err = Rk45::default()
            .solve(
                |t, _y: &[f64; 1]| if t > 0.5 { None } else { Some([1.0]) },
                0.0,
                [0.0],
                &[1.0],
            )
            .unwrap_err();
        match err {
            IntegrationError::DomainExit { t_reached } => {
                assert!(t_reached <= 0.5 && t_reached > 0.49, "{t_reached}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
