//! Finite differences with one Richardson step (ratio 2).

use crate::energy::ScalarProfile;
use crate::error::{Error, Result};

/// `ε^{1/3}`, the base relative step for first derivatives.
pub fn first_step_factor() -> f64 {
    f64::EPSILON.cbrt()
}

/// `ε^{1/4}`, the base relative step for second derivatives.
pub fn second_step_factor() -> f64 {
    f64::EPSILON.powf(0.25)
}

/// A derivative estimate. The error indicator is the difference between the
/// two step sizes plus a roundoff bound `c ε max|g| / s^k` at the finer step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Richardson-free estimate at the smaller step.
    pub single_step: f64,
    pub error: f64,
    pub step: f64,
}

fn eval(g: &impl Fn(f64) -> Result<f64>, t: f64) -> Result<f64> {
    let v = g(t)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("function value {v} at offset {t:e}")))
    }
}

fn check_step(step: f64) -> Result<()> {
    if step.is_finite() && step > f64::MIN_POSITIVE * 1e3 {
        Ok(())
    } else {
        Err(Error::StepUnderflow)
    }
}

/// A difference quotient together with the largest `|g|` it used.
type Quotient = (f64, f64);

fn extrapolate(coarse: Quotient, fine: Quotient, step: f64, order: i32, c: f64) -> Estimate {
    let magnitude = coarse.1.max(fine.1);
    let roundoff = c * f64::EPSILON * magnitude / (0.5 * step).powi(order);
    Estimate {
        value: (4.0 * fine.0 - coarse.0) / 3.0,
        single_step: fine.0,
        error: (fine.0 - coarse.0).abs() + roundoff,
        step,
    }
}

/// `g′(0)` from central differences at `step` and `step/2`.
pub fn central_first(g: impl Fn(f64) -> Result<f64>, step: f64) -> Result<Estimate> {
    check_step(step)?;
    let d = |s: f64| -> Result<Quotient> {
        let (a, b) = (eval(&g, s)?, eval(&g, -s)?);
        Ok(((a - b) / (2.0 * s), a.abs().max(b.abs())))
    };
    Ok(extrapolate(d(step)?, d(0.5 * step)?, step, 1, 2.0))
}

/// `g″(0)` from central second differences at `step` and `step/2`. Pass
/// `g0 = g(0)` when already known.
pub fn central_second(g: impl Fn(f64) -> Result<f64>, step: f64, g0: Option<f64>) -> Result<Estimate> {
    check_step(step)?;
    let g0 = match g0 {
        Some(v) => v,
        None => eval(&g, 0.0)?,
    };
    let d = |s: f64| -> Result<Quotient> {
        let (a, b) = (eval(&g, s)?, eval(&g, -s)?);
        Ok(((a - 2.0 * g0 + b) / (s * s), a.abs().max(b.abs()).max(g0.abs())))
    };
    Ok(extrapolate(d(step)?, d(0.5 * step)?, step, 2, 6.0))
}

/// Second order one-sided differences, used near the left end of a domain.
fn forward_first(g: impl Fn(f64) -> Result<f64>, step: f64) -> Result<Estimate> {
    check_step(step)?;
    let g0 = eval(&g, 0.0)?;
    let d = |s: f64| -> Result<Quotient> {
        let (a, b) = (eval(&g, s)?, eval(&g, 2.0 * s)?);
        Ok(((-3.0 * g0 + 4.0 * a - b) / (2.0 * s), g0.abs().max(a.abs()).max(b.abs())))
    };
    Ok(extrapolate(d(step)?, d(0.5 * step)?, step, 1, 8.0))
}

fn forward_second(g: impl Fn(f64) -> Result<f64>, step: f64) -> Result<Estimate> {
    check_step(step)?;
    let g0 = eval(&g, 0.0)?;
    let d = |s: f64| -> Result<Quotient> {
        let (a, b, c) = (eval(&g, s)?, eval(&g, 2.0 * s)?, eval(&g, 3.0 * s)?);
        Ok(((2.0 * g0 - 5.0 * a + 4.0 * b - c) / (s * s), g0.abs().max(a.abs()).max(b.abs()).max(c.abs())))
    };
    Ok(extrapolate(d(step)?, d(0.5 * step)?, step, 2, 24.0))
}

/// `Ψ′(s)`: analytic when the profile provides it, otherwise by differences.
pub fn profile_first(p: &ScalarProfile, s: f64) -> Result<f64> {
    if let Some(d) = p.first(s) {
        return d;
    }
    let h = first_step_factor() * (1.0 + s.abs());
    let g = |x: f64| p.value(s + x);
    if p.contains(s - 2.0 * h) {
        Ok(central_first(g, h)?.value)
    } else {
        Ok(forward_first(g, h)?.value)
    }
}

/// `Ψ″(s)`: analytic when the profile provides it, otherwise by differences.
pub fn profile_second(p: &ScalarProfile, s: f64) -> Result<f64> {
    if let Some(d) = p.second(s) {
        return d;
    }
    let h = second_step_factor() * (1.0 + s.abs());
    let g = |x: f64| p.value(s + x);
    if p.contains(s - 2.0 * h) {
        Ok(central_second(g, h, None)?.value)
    } else {
        Ok(forward_second(g, h)?.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_polynomials() {
        let g = |t: f64| Ok(1.0 + 2.0 * t + 3.0 * t * t + t * t * t);
        let d1 = central_first(g, 1e-3).unwrap();
        let d2 = central_second(g, 1e-2, None).unwrap();
        assert!((d1.value - 2.0).abs() < 1e-10);
        assert!((d2.value - 6.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_tiny_steps_and_nan() {
        assert_eq!(central_first(|t| Ok(t), 0.0), Err(Error::StepUnderflow));
        assert!(matches!(central_first(|_| Ok(f64::NAN), 1e-3), Err(Error::NonFinite(_))));
    }

    #[test]
    fn profile_fallback_near_boundary() {
        let p = ScalarProfile::new("cube", |s: f64| s.powi(3)).with_domain(0.0, f64::INFINITY);
        assert!((profile_first(&p, 0.0).unwrap()).abs() < 1e-8);
        assert!((profile_second(&p, 1.0).unwrap() - 6.0).abs() < 1e-6);
        assert!((profile_second(&p, 0.0).unwrap()).abs() < 1e-5);
    }
}
