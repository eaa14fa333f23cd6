//! Explicit Runge–Kutta integrators for complex matrix-valued ODEs.

use crate::error::{domain, Error, Result};
use crate::linalg::{c, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Classical fourth-order Runge–Kutta with a fixed step.
    Rk4 { step: f64 },
    /// Dormand–Prince 5(4) with embedded error control.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on any step; slaved to half the frame grid step by callers.
    pub max_step: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { method: Method::Adaptive, rel_tol: 1e-8, abs_tol: 1e-10, max_step: f64::INFINITY }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self { method: Method::Rk4 { step }, ..Self::default() }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = self.max_step.min(max_step);
        self
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(domain(format!(
                "integrator tolerances must be positive (rel {}, abs {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(domain(format!("max step must be positive, got {}", self.max_step)));
        }
        if let Method::Rk4 { step } = self.method {
            if !(step > 0.0 && step.is_finite()) {
                return Err(domain(format!("RK4 step must be positive and finite, got {step}")));
            }
        }
        Ok(())
    }
}

// Dormand–Prince tableau.
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (fifth minus fourth order weights)
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy(y: &CMatrix, terms: &[(f64, &CMatrix)], h: f64) -> CMatrix {
    let mut out = y.clone();
    for (w, k) in terms {
        out.zip_apply(k, |o, kv| *o += kv * (w * h));
    }
    out
}

/// One Dormand–Prince step; returns the fifth-order solution and the error estimate.
pub(crate) fn dopri_step<F>(rhs: &mut F, t: f64, y: &CMatrix, h: f64) -> Result<(CMatrix, CMatrix)>
where
    F: FnMut(f64, &CMatrix) -> Result<CMatrix>,
{
    let k1 = rhs(t, y)?;
    let k2 = rhs(t + h / 5.0, &axpy(y, &[(A21, &k1)], h))?;
    let k3 = rhs(t + 3.0 * h / 10.0, &axpy(y, &[(A31, &k1), (A32, &k2)], h))?;
    let k4 = rhs(t + 4.0 * h / 5.0, &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h))?;
    let k5 = rhs(t + 8.0 * h / 9.0, &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h))?;
    let k6 = rhs(t + h, &axpy(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h))?;
    let y5 = axpy(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
    let k7 = rhs(t + h, &y5)?;
    let zero = CMatrix::zeros(y.nrows(), y.ncols());
    let err = axpy(&zero, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)], h);
    Ok((y5, err))
}

pub(crate) fn rk4_step<F>(rhs: &mut F, t: f64, y: &CMatrix, h: f64) -> Result<CMatrix>
where
    F: FnMut(f64, &CMatrix) -> Result<CMatrix>,
{
    let k1 = rhs(t, y)?;
    let k2 = rhs(t + 0.5 * h, &axpy(y, &[(0.5, &k1)], h))?;
    let k3 = rhs(t + 0.5 * h, &axpy(y, &[(0.5, &k2)], h))?;
    let k4 = rhs(t + h, &axpy(y, &[(1.0, &k3)], h))?;
    Ok(axpy(y, &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)], h))
}

fn error_norm(err: &CMatrix, y0: &CMatrix, y1: &CMatrix, cfg: &IntegratorConfig) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let scale = cfg.abs_tol + cfg.rel_tol * a.norm().max(b.norm());
            (e.norm() / scale).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Step-by-step driver so callers can inspect every accepted step.
pub(crate) struct Stepper {
    cfg: IntegratorConfig,
    h: f64,
}

impl Stepper {
    pub fn new(cfg: IntegratorConfig, t0: f64, t1: f64) -> Result<Self> {
        cfg.validate()?;
        let span = (t1 - t0).abs();
        let h = match cfg.method {
            Method::Rk4 { step } => step.min(cfg.max_step),
            Method::Adaptive => (span / 100.0).min(cfg.max_step).min(0.01),
        };
        Ok(Self { cfg, h })
    }

    /// Advances `y` from `t` towards `t_end` by one accepted step and returns the new time.
    pub fn advance<F>(&mut self, rhs: &mut F, t: f64, y: &mut CMatrix, t_end: f64) -> Result<f64>
    where
        F: FnMut(f64, &CMatrix) -> Result<CMatrix>,
    {
        let remaining = t_end - t;
        let min_step = 1e-12 * t.abs().max(1.0);
        match self.cfg.method {
            Method::Rk4 { .. } => {
                // Spread the fixed step evenly over what is left.
                let steps = (remaining / self.h).ceil().max(1.0);
                let h = remaining / steps;
                *y = rk4_step(rhs, t, y, h)?;
                Ok(if steps <= 1.0 { t_end } else { t + h })
            }
            Method::Adaptive => loop {
                let last = self.h >= remaining;
                let h = if last { remaining } else { self.h };
                if h < min_step && !last {
                    return Err(Error::StepUnderflow { time: t, step: h });
                }
                let (y_new, err) = dopri_step(rhs, t, y, h)?;
                let norm = error_norm(&err, y, &y_new, &self.cfg);
                if norm <= 1.0 {
                    *y = y_new;
                    let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
                    // Keep the controller's step when the last step was truncated to hit t_end.
                    if !last || h * factor > self.h {
                        self.h = (h * factor).min(self.cfg.max_step);
                    }
                    return Ok(if last { t_end } else { t + h });
                }
                let factor = if norm.is_finite() { (0.9 * norm.powf(-0.2)).clamp(0.2, 0.9) } else { 0.2 };
                self.h = h * factor;
                if self.h < min_step {
                    return Err(Error::StepUnderflow { time: t, step: self.h });
                }
            },
        }
    }
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` to `t1`, calling `after_step`
/// on every accepted step so the caller can project or monitor the state.
pub(crate) fn integrate<F, P>(
    mut rhs: F,
    mut y: CMatrix,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    mut after_step: P,
) -> Result<CMatrix>
where
    F: FnMut(f64, &CMatrix) -> Result<CMatrix>,
    P: FnMut(f64, &mut CMatrix) -> Result<()>,
{
    if t1 < t0 {
        return Err(domain(format!("integration interval reversed ({t0} > {t1})")));
    }
    if t1 == t0 {
        return Ok(y);
    }
    let mut stepper = Stepper::new(*cfg, t0, t1)?;
    let mut t = t0;
    while t < t1 {
        t = stepper.advance(&mut rhs, t, &mut y, t1)?;
        after_step(t, &mut y)?;
    }
    Ok(y)
}

/// Scales a vector stored as an `N×1` matrix to unit norm.
pub(crate) fn normalize(y: &mut CMatrix) {
    let n = y.norm();
    if n > 0.0 {
        *y *= c(1.0 / n, 0.0);
    }
}
