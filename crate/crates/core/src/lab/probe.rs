use serde::{Deserialize, Serialize};

use super::fd;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::tensor::{SquareMatrix, Vector};

/// A line `t ↦ F + t ξ⊗η` on which `det` stays positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankOneProbe {
    f: SquareMatrix,
    xi: Vector,
    eta: Vector,
    t_interval: (f64, f64),
}

impl RankOneProbe {
    /// `det(F + t ξ⊗η) = det F + t ⟨ξ, Cof(F) η⟩` is affine in `t`, so checking
    /// both endpoints covers the whole interval.
    pub fn new(f: SquareMatrix, xi: Vector, eta: Vector, t_interval: (f64, f64)) -> Result<Self> {
        let n = f.dim();
        for v in [&xi, &eta] {
            if v.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: v.dim() });
            }
            if !v.is_finite() {
                return Err(Error::InvalidInput("probe vectors must be finite".into()));
            }
            if v.norm() == 0.0 {
                return Err(Error::DegenerateDirection("probe vectors must be nonzero".into()));
            }
        }
        if !f.is_finite() {
            return Err(Error::InvalidInput("probe base point must be finite".into()));
        }
        let (lo, hi) = t_interval;
        if !(lo.is_finite() && hi.is_finite() && lo <= 0.0 && hi >= 0.0 && lo < hi) {
            return Err(Error::InvalidInput(format!("interval ({lo}, {hi}) must contain 0")));
        }
        let probe = Self { f, xi, eta, t_interval };
        for t in [lo, 0.0, hi] {
            let det = probe.det_at(t);
            if det <= 0.0 {
                return Err(Error::Interval { t, det });
            }
        }
        Ok(probe)
    }

    /// The same line, restricted to a new interval.
    pub fn with_interval(&self, t_interval: (f64, f64)) -> Result<Self> {
        Self::new(self.f, self.xi, self.eta, t_interval)
    }

    pub fn f(&self) -> &SquareMatrix {
        &self.f
    }

    pub fn xi(&self) -> &Vector {
        &self.xi
    }

    pub fn eta(&self) -> &Vector {
        &self.eta
    }

    pub fn interval(&self) -> (f64, f64) {
        self.t_interval
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// `ξ⊗η`.
    pub fn direction(&self) -> SquareMatrix {
        self.xi.outer(&self.eta)
    }

    pub fn point(&self, t: f64) -> SquareMatrix {
        self.f + self.direction() * t
    }

    /// `d/dt det(F + t ξ⊗η)`, constant along the line.
    pub fn det_slope(&self) -> f64 {
        self.xi.dot(&self.f.cofactor().mul_vec(&self.eta))
    }

    /// Rounding bound for [`det_slope`](Self::det_slope): `4ε Σ |ξᵢ| |Cofᵢⱼ| |ηⱼ|`.
    pub fn det_slope_noise(&self) -> f64 {
        let cof = self.f.cofactor();
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.xi[i] * cof[(i, j)] * self.eta[j]).abs();
            }
        }
        4.0 * f64::EPSILON * acc
    }

    pub fn det_at(&self, t: f64) -> f64 {
        self.f.det() + t * self.det_slope()
    }

    /// Largest `r` with `det > 0` on `(−r, r)`.
    pub fn admissible_radius(&self) -> f64 {
        let (d0, c) = (self.f.det(), self.det_slope());
        if d0 <= 0.0 {
            0.0
        } else if c == 0.0 {
            f64::INFINITY
        } else {
            d0 / c.abs()
        }
    }

    /// `1 + ‖F‖/‖ξ⊗η‖`, which converts relative steps into steps in `t`.
    pub fn step_scale(&self) -> f64 {
        1.0 + self.f.norm() / (self.xi.norm() * self.eta.norm())
    }
}

/// Sampled values of `h(t) = W(F + t ξ⊗η)` together with the derivatives at 0.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LineProfile {
    pub probe: RankOneProbe,
    pub samples: Vec<(f64, f64)>,
    pub derivatives: LineDerivatives,
}

impl LineProfile {
    pub fn value_at_zero(&self) -> f64 {
        self.derivatives.h0
    }

    /// Sample with the largest `h`, first one on ties.
    pub fn argmax(&self) -> (f64, f64) {
        self.samples
            .iter()
            .copied()
            .fold((f64::NAN, f64::NEG_INFINITY), |best, s| if s.1 > best.1 { s } else { best })
    }
}

/// `n` uniform samples over the closed interval with `t = 0` always present.
pub fn sample_points(interval: (f64, f64), n: usize) -> Vec<f64> {
    let (lo, hi) = interval;
    let m = (n - 1) as f64;
    let mut ts: Vec<f64> = (0..n).map(|i| (lo * (m - i as f64) + hi * i as f64) / m).collect();
    if !ts.contains(&0.0) {
        let k = (0..n).min_by(|&a, &b| ts[a].abs().total_cmp(&ts[b].abs())).unwrap_or(0);
        ts[k] = 0.0;
    }
    ts
}

pub fn line_profile(field: &dyn ScalarField, probe: &RankOneProbe, n_samples: usize) -> Result<LineProfile> {
    if n_samples < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 samples, got {n_samples}")));
    }
    if field.dim() != probe.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: probe.dim() });
    }
    let mut samples = Vec::with_capacity(n_samples);
    for t in sample_points(probe.interval(), n_samples) {
        let det = probe.det_at(t);
        if det <= 0.0 {
            return Err(Error::Interval { t, det });
        }
        let h = field.value(&probe.point(t))?;
        if !h.is_finite() {
            return Err(Error::NonFinite(format!("h({t}) = {h}")));
        }
        samples.push((t, h));
    }
    let derivatives = line_derivatives(field, probe)?;
    Ok(LineProfile { probe: *probe, samples, derivatives })
}

/// `h′(0)` and `h″(0)` with their step sizes and error indicators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineDerivatives {
    pub h0: f64,
    pub first: f64,
    pub first_error: f64,
    pub first_step: f64,
    pub second: f64,
    pub second_error: f64,
    pub second_step: f64,
    /// Second difference at the smaller step, before extrapolation.
    pub second_single_step: f64,
    pub scale: f64,
    /// `h(0)` of the differenced part; equals `h0` unless the field has a
    /// volumetric split.
    pub h0_differenced: f64,
    /// Closed-form volumetric contribution to `second`.
    pub vol_second: f64,
    /// `⟨∇W(F), ξ⊗η⟩` when an analytic gradient exists.
    pub analytic_first: Option<f64>,
}

impl LineDerivatives {
    /// Whether the analytic and difference values of `h′(0)` agree within
    /// `10·err + rel·|h′| + 1e−8 (|h(0)|+1)/scale`. `None` without a gradient.
    pub fn first_consistent(&self, rel: f64) -> Option<bool> {
        self.analytic_first.map(|a| {
            let tol = 10.0 * self.first_error + rel * a.abs().max(self.first.abs()) + 1e-8 * (self.h0.abs() + 1.0) / self.scale;
            (a - self.first).abs() <= tol
        })
    }

    /// Best available first derivative: analytic if known.
    pub fn best_first(&self) -> f64 {
        self.analytic_first.unwrap_or(self.first)
    }
}

fn clamp_step(step: f64, radius: f64) -> Result<f64> {
    // keep every evaluation point strictly inside the det > 0 region
    let s = step.min(0.45 * radius);
    if s.is_finite() && s > 1e-300 {
        Ok(s)
    } else {
        Err(Error::StepUnderflow)
    }
}

/// Tries `base` and steps enlarged by 4, 16 and 64, keeping the one with the
/// smallest Richardson error indicator. Near-polynomial lines then escape
/// roundoff; for curved lines the indicator grows with the step and the base
/// step is kept.
fn widen(estimate: impl Fn(f64) -> Result<fd::Estimate>, base: f64, radius: f64) -> Result<fd::Estimate> {
    let mut best = estimate(base)?;
    let mut step = base;
    for _ in 0..3 {
        step *= 4.0;
        if step > 0.45 * radius {
            break;
        }
        match estimate(step) {
            Ok(e) if e.error < best.error => best = e,
            Ok(_) => {}
            Err(_) => break,
        }
    }
    Ok(best)
}

/// Central differences with Richardson extrapolation. For fields of the form
/// `W_iso(F) + W_vol(det F)` only the isochoric part is differenced: `det` is
/// affine along the line, so the volumetric part contributes exactly
/// `W_vol′(J) c` and `W_vol″(J) c²` with `c = d det/dt`.
pub fn line_derivatives(field: &dyn ScalarField, probe: &RankOneProbe) -> Result<LineDerivatives> {
    if field.dim() != probe.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: probe.dim() });
    }
    let scale = probe.step_scale();
    let radius = probe.admissible_radius();
    let s1 = clamp_step(fd::first_step_factor() * scale, radius)?;
    let s2 = clamp_step(fd::second_step_factor() * scale, radius)?;

    let (smooth, vol_terms) = match field.volumetric_split() {
        Some((iso, vol)) => {
            let j = probe.det_at(0.0);
            // a slope below its rounding bound is an isochoric direction
            let c = probe.det_slope();
            let c = if c.abs() <= probe.det_slope_noise() { 0.0 } else { c };
            let terms = (vol.value(j)?, fd::profile_first(vol, j)? * c, fd::profile_second(vol, j)? * c * c);
            (iso, Some(terms))
        }
        None => (field, None),
    };
    let h = |t: f64| smooth.value(&probe.point(t));
    let h0 = h(0.0)?;
    if !h0.is_finite() {
        return Err(Error::NonFinite(format!("h(0) = {h0}")));
    }
    let d1 = widen(|s| fd::central_first(h, s), s1, radius)?;
    let d2 = widen(|s| fd::central_second(h, s, Some(h0)), s2, radius)?;
    let (v0, v1, v2) = vol_terms.unwrap_or((0.0, 0.0, 0.0));

    let analytic_first = match field.gradient(probe.f()) {
        Some(g) => Some(g?.inner(&probe.direction())),
        None => None,
    };
    Ok(LineDerivatives {
        h0: h0 + v0,
        first: d1.value + v1,
        first_error: d1.error,
        first_step: d1.step,
        second: d2.value + v2,
        second_error: d2.error,
        second_step: d2.step,
        second_single_step: d2.single_step + v2,
        scale,
        h0_differenced: h0,
        vol_second: v2,
        analytic_first,
    })
}

/// Outcome of testing the hypotheses `Dω(F)(ξ⊗η) = 0` and
/// `D²ω(F)(ξ⊗η, ξ⊗η) < 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointVerdict {
    pub first: f64,
    pub second: f64,
    pub tol_grad: f64,
    pub tol_curv: f64,
    pub is_counterexample: bool,
    pub derivatives: LineDerivatives,
}

/// Tolerances `1e−8 (|h(0)|+1)/scale` on `h′(0)` and `1e−8 (|h(0)|+1)` on `h″(0)`.
pub fn critical_tolerances(d: &LineDerivatives) -> (f64, f64) {
    let base = 1e-8 * (d.h0.abs() + 1.0);
    (base / d.scale, base)
}

pub fn concave_critical_point(field: &dyn ScalarField, probe: &RankOneProbe) -> Result<CriticalPointVerdict> {
    let d = line_derivatives(field, probe)?;
    let (tol_grad, tol_curv) = critical_tolerances(&d);
    let first = d.best_first();
    Ok(CriticalPointVerdict {
        first,
        second: d.second,
        tol_grad,
        tol_curv,
        is_counterexample: first.abs() <= tol_grad && d.second < -tol_curv,
        derivatives: d,
    })
}
