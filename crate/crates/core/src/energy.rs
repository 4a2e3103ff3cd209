//! Elastic energies built from strain measures and scalar profiles.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::lab::fd;
use crate::strain::{ihat_invariants, omega_devlog, omega_log, StrainMeasure};
use crate::tensor::{stretch_system, SquareMatrix};

/// Energies whose magnitude exceeds this are reported as overflow.
pub const OVERFLOW_GUARD: f64 = 1e300;

type RealFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A scalar function `Ψ` on an interval, optionally with analytic first and
/// second derivatives.
#[derive(Clone)]
pub struct ScalarProfile {
    name: String,
    value: Arc<RealFn>,
    first: Option<Arc<RealFn>>,
    second: Option<Arc<RealFn>>,
    domain: (f64, f64),
}

impl fmt::Debug for ScalarProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarProfile")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("analytic_first", &self.first.is_some())
            .field("analytic_second", &self.second.is_some())
            .finish()
    }
}

impl ScalarProfile {
    pub fn new(name: impl Into<String>, value: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            value: Arc::new(value),
            first: None,
            second: None,
            domain: (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn with_first(mut self, d1: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.first = Some(Arc::new(d1));
        self
    }

    pub fn with_second(mut self, d2: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.second = Some(Arc::new(d2));
        self
    }

    /// Closed interval `[lo, hi]` on which the profile may be evaluated.
    pub fn with_domain(mut self, lo: f64, hi: f64) -> Self {
        self.domain = (lo, hi);
        self
    }

    pub fn identity() -> Self {
        Self::new("identity", |s| s).with_first(|_| 1.0).with_second(|_| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_| c)
            .with_first(|_| 0.0)
            .with_second(|_| 0.0)
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    /// `Ψ(s) = c s`.
    pub fn linear(c: f64) -> Self {
        Self::new(format!("linear({c})"), move |s| c * s)
            .with_first(move |_| c)
            .with_second(|_| 0.0)
    }

    /// `Ψ(s) = s²`.
    pub fn quadratic() -> Self {
        Self::new("quadratic", |s| s * s).with_first(|s| 2.0 * s).with_second(|_| 2.0)
    }

    /// `Ψ(s) = (μ/k) e^{k s}`, the exponentiated Hencky profile.
    pub fn exponential(mu: f64, k: f64) -> Self {
        Self::new(format!("exponential(mu={mu},k={k})"), move |s| mu / k * (k * s).exp())
            .with_first(move |s| mu * (k * s).exp())
            .with_second(move |s| mu * k * (k * s).exp())
    }

    /// `Ψ(s) = e^{r s}`.
    pub fn exp_rate(r: f64) -> Self {
        Self::new(format!("exp-rate({r})"), move |s| (r * s).exp())
            .with_first(move |s| r * (r * s).exp())
            .with_second(move |s| r * r * (r * s).exp())
    }

    /// `Ψ(s) = e^{s/8}`, which makes `t ↦ Ψ(log² t)` convex on `(0, ∞)`.
    pub fn convexifier_1d() -> Self {
        Self::exp_rate(0.125)
    }

    /// Volumetric `W_vol(J) = (κ/2) log² J`.
    pub fn log_squared_volumetric(kappa: f64) -> Self {
        Self::new(format!("log-squared-vol(kappa={kappa})"), move |j: f64| 0.5 * kappa * j.ln().powi(2))
            .with_first(move |j| kappa * j.ln() / j)
            .with_second(move |j| kappa * (1.0 - j.ln()) / (j * j))
            .with_domain(f64::MIN_POSITIVE, f64::INFINITY)
    }

    /// Volumetric `W_vol(J) = κ/(2k̂) e^{k̂ log² J}`.
    pub fn exp_log_squared_volumetric(kappa: f64, khat: f64) -> Self {
        Self::new(format!("exp-log-squared-vol(kappa={kappa},khat={khat})"), move |j: f64| {
            kappa / (2.0 * khat) * (khat * j.ln().powi(2)).exp()
        })
        .with_first(move |j| {
            let l = j.ln();
            kappa * l / j * (khat * l * l).exp()
        })
        .with_second(move |j| {
            let l = j.ln();
            kappa * (khat * l * l).exp() / (j * j) * (2.0 * khat * l * l + 1.0 - l)
        })
        .with_domain(f64::MIN_POSITIVE, f64::INFINITY)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.domain.0 && s <= self.domain.1
    }

    fn check(&self, s: f64) -> Result<()> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{} evaluated at {s:e} outside [{}, {}]", self.name, self.domain.0, self.domain.1)))
        }
    }

    pub fn value(&self, s: f64) -> Result<f64> {
        self.check(s)?;
        Ok((self.value)(s))
    }

    /// Analytic `Ψ′(s)`; `None` when the profile carries no closed form.
    pub fn first(&self, s: f64) -> Option<Result<f64>> {
        self.first.as_ref().map(|d| self.check(s).map(|_| d(s)))
    }

    /// Analytic `Ψ″(s)`; `None` when the profile carries no closed form.
    pub fn second(&self, s: f64) -> Option<Result<f64>> {
        self.second.as_ref().map(|d| self.check(s).map(|_| d(s)))
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.first.is_some() && self.second.is_some()
    }

    /// `c Ψ`.
    pub fn scaled(&self, c: f64) -> Self {
        let v = Arc::clone(&self.value);
        let mut out = Self::new(format!("{c}*{}", self.name), move |s| c * v(s)).with_domain(self.domain.0, self.domain.1);
        if let Some(d) = self.first.clone() {
            out = out.with_first(move |s| c * d(s));
        }
        if let Some(d) = self.second.clone() {
            out = out.with_second(move |s| c * d(s));
        }
        out
    }
}

type ValueFn = dyn Fn(&SquareMatrix) -> Result<f64> + Send + Sync;
type GradientFn = dyn Fn(&SquareMatrix) -> Result<SquareMatrix> + Send + Sync;

/// How an energy was assembled.
#[derive(Clone, Debug)]
pub enum Components {
    ClosedForm,
    Composition { profile: ScalarProfile, measure: StrainMeasure },
    VolumetricIsochoric { isochoric: Box<EnergyDefinition>, volumetric: ScalarProfile },
    Shifted { base: Box<EnergyDefinition>, offset: f64 },
}

#[derive(Clone)]
pub struct EnergyDefinition {
    dim: usize,
    description: String,
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradientFn>>,
    components: Components,
}

impl fmt::Debug for EnergyDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EnergyDefinition")
            .field("dim", &self.dim)
            .field("description", &self.description)
            .field("gradient", &self.gradient.is_some())
            .finish()
    }
}

impl EnergyDefinition {
    pub fn closed_form(
        description: impl Into<String>,
        dim: usize,
        value: impl Fn(&SquareMatrix) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            description: description.into(),
            value: Arc::new(value),
            gradient: None,
            components: Components::ClosedForm,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&SquareMatrix) -> Result<SquareMatrix> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    /// `‖F‖²`, a convex quadratic reference energy.
    pub fn frobenius_squared(dim: usize) -> Self {
        Self::closed_form("frobenius-squared", dim, |f| Ok(f.norm().powi(2))).with_gradient(|f| Ok(*f * 2.0))
    }

    /// `E − c`, used to make an energy vanish at the identity.
    pub fn shifted(&self, offset: f64) -> Self {
        let base = self.clone();
        let inner = self.clone();
        let mut out = Self::closed_form(format!("{} - {offset}", self.description), self.dim, move |f| {
            Ok(inner.value(f)? - offset)
        });
        out.gradient = self.gradient.clone();
        out.components = Components::Shifted { base: Box::new(base), offset };
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn components(&self) -> &Components {
        &self.components
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn value(&self, f: &SquareMatrix) -> Result<f64> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: f.dim() });
        }
        let v = (self.value)(f)?;
        if v.is_nan() {
            return Err(Error::NonFinite(format!("{} evaluated to NaN", self.description)));
        }
        if !v.is_finite() || v.abs() > OVERFLOW_GUARD {
            return Err(Error::Overflow { value: v });
        }
        Ok(v)
    }

    pub fn gradient(&self, f: &SquareMatrix) -> Option<Result<SquareMatrix>> {
        self.gradient.as_ref().map(|g| {
            if f.dim() != self.dim {
                Err(Error::DimensionMismatch { expected: self.dim, found: f.dim() })
            } else {
                g(f)
            }
        })
    }
}

impl ScalarField for EnergyDefinition {
    fn dim(&self) -> usize {
        self.dim
    }

    fn label(&self) -> String {
        self.description.clone()
    }

    fn value(&self, f: &SquareMatrix) -> Result<f64> {
        EnergyDefinition::value(self, f)
    }

    fn gradient(&self, f: &SquareMatrix) -> Option<Result<SquareMatrix>> {
        EnergyDefinition::gradient(self, f)
    }

    fn volumetric_split(&self) -> Option<(&dyn ScalarField, &ScalarProfile)> {
        match &self.components {
            Components::VolumetricIsochoric { isochoric, volumetric } => {
                Some((isochoric.as_ref() as &dyn ScalarField, volumetric))
            }
            // the base split would drop the offset from h(0)
            _ => None,
        }
    }
}

/// `W(F) = Ψ(ω(F))`; the gradient `Ψ′(ω) ∇ω` is available when both factors
/// are analytic.
pub fn compose(profile: &ScalarProfile, measure: &StrainMeasure) -> EnergyDefinition {
    let (p, m) = (profile.clone(), measure.clone());
    let description = format!("{}∘{}", profile.name(), measure.name());
    let mut energy = EnergyDefinition::closed_form(description, measure.dim(), move |f| p.value(m.value(f)?));
    if profile.first.is_some() && measure.has_gradient() {
        let (p, m) = (profile.clone(), measure.clone());
        energy = energy.with_gradient(move |f| {
            let w = m.value(f)?;
            let d1 = p.first(w).expect("analytic first derivative")?;
            Ok(m.gradient(f).expect("analytic gradient")? * d1)
        });
    }
    energy.components = Components::Composition { profile: profile.clone(), measure: measure.clone() };
    energy
}

/// `W(F) = Ψ(‖dev_n log V‖²) + W_vol(det F)`.
pub fn vol_iso_energy(profile: &ScalarProfile, volumetric: &ScalarProfile, dim: usize) -> EnergyDefinition {
    let iso = compose(profile, &StrainMeasure::devlog(dim));
    let (iso_v, vol_v) = (iso.clone(), volumetric.clone());
    let description = format!("{} + {}(det F)", iso.description(), volumetric.name());
    let mut energy = EnergyDefinition::closed_form(description, dim, move |f| {
        Ok(iso_v.value(f)? + vol_v.value(f.det())?)
    });
    if iso.has_gradient() && volumetric.first.is_some() {
        let (iso_g, vol_g) = (iso.clone(), volumetric.clone());
        energy = energy.with_gradient(move |f| {
            let j = f.det();
            let dvol = vol_g.first(j).expect("analytic first derivative")?;
            // D_F det F = det F · F^{-T}
            Ok(iso_g.gradient(f).expect("analytic gradient")? + f.inverse_transpose()? * (dvol * j))
        });
    }
    energy.components = Components::VolumetricIsochoric {
        isochoric: Box::new(iso),
        volumetric: volumetric.clone(),
    };
    energy
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}

/// Quadratic Hencky energy `μ ‖dev_n log U‖² + (κ/2) [tr log U]²`.
pub fn hencky_energy(mu: f64, kappa: f64, dim: usize) -> Result<EnergyDefinition> {
    require_positive("mu", mu)?;
    require_positive("kappa", kappa)?;
    let mut e = vol_iso_energy(&ScalarProfile::linear(mu), &ScalarProfile::log_squared_volumetric(kappa), dim);
    e.description = format!("hencky(mu={mu},kappa={kappa},n={dim})");
    Ok(e)
}

/// Second form of the Hencky energy, `μ ‖log U‖² + (Λ/2) [tr log U]²`.
pub fn hencky_lame_form(f: &SquareMatrix, mu: f64, lambda: f64) -> Result<f64> {
    let svd = stretch_system(f)?;
    let tr: f64 = svd.values().iter().map(|s| s.ln()).sum();
    Ok(mu * omega_log(f)? + 0.5 * lambda * tr * tr)
}

/// `Λ = κ − 2μ/n`, the Lamé-type modulus matching [`hencky_energy`].
pub fn hencky_lambda(mu: f64, kappa: f64, dim: usize) -> f64 {
    kappa - 2.0 * mu / dim as f64
}

/// Exponentiated Hencky energy
/// `(μ/k) e^{k ‖dev_n log U‖²} + κ/(2k̂) e^{k̂ [log det U]²}`.
pub fn exp_hencky_energy(mu: f64, kappa: f64, k: f64, khat: f64, dim: usize) -> Result<EnergyDefinition> {
    for (name, v) in [("mu", mu), ("kappa", kappa), ("k", k), ("khat", khat)] {
        require_positive(name, v)?;
    }
    let mut e = vol_iso_energy(
        &ScalarProfile::exponential(mu, k),
        &ScalarProfile::exp_log_squared_volumetric(kappa, khat),
        dim,
    );
    e.description = format!("exp-hencky(mu={mu},kappa={kappa},k={k},khat={khat},n={dim})");
    Ok(e)
}

/// Isochoric part `(μ/k) e^{k ‖dev_n log U‖²}` alone.
pub fn exp_hencky_isochoric(mu: f64, k: f64, dim: usize) -> Result<EnergyDefinition> {
    require_positive("mu", mu)?;
    require_positive("k", k)?;
    let mut e = compose(&ScalarProfile::exponential(mu, k), &StrainMeasure::devlog(dim));
    e.description = format!("exp-hencky-iso(mu={mu},k={k},n={dim})");
    Ok(e)
}

/// `W(F) = Î₁(F) + Î₂(F)` on `GL⁺(3)`: isochoric, tension-compression
/// symmetric and polyconvex.
pub fn ihat_energy() -> EnergyDefinition {
    EnergyDefinition::closed_form("ihat", 3, |f| {
        let i = ihat_invariants(f)?.values;
        Ok(i[0] + i[1])
    })
}

/// `[det(dev₃ log U)]²`, isochoric and tension-compression symmetric but not
/// a function of `‖dev₃ log U‖²` alone.
pub fn det_devlog_squared() -> EnergyDefinition {
    EnergyDefinition::closed_form("det-devlog-squared", 3, |f| {
        let logs: Vec<f64> = stretch_system(f)?.values().iter().map(|s| s.ln()).collect();
        let mean = logs.iter().sum::<f64>() / 3.0;
        Ok(logs.iter().map(|l| l - mean).product::<f64>().powi(2))
    })
}

/// `‖dev_n log U‖²` as an energy (identity profile).
pub fn devlog_energy(dim: usize) -> EnergyDefinition {
    let mut e = compose(&ScalarProfile::identity(), &StrainMeasure::devlog(dim));
    e.description = format!("devlog(n={dim})");
    e
}

/// Shear and bulk moduli `(μ, κ)` of the quadratic expansion
/// `W(Id + H) ≈ μ ‖dev sym H‖² + (κ/2) [tr sym H]²`.
///
/// `μ` comes from the second difference along `diag(1, −1, 0)/√2`, `κ` from
/// the dilational direction `Id/√n`.
pub fn linearization_moduli(energy: &EnergyDefinition) -> Result<(f64, f64)> {
    let n = energy.dim();
    if n < 2 {
        return Err(Error::InvalidInput("linearization moduli need dimension ≥ 2".into()));
    }
    let id = SquareMatrix::identity(n);
    let w0 = energy.value(&id)?;
    let stress = match energy.gradient(&id) {
        Some(g) => g?,
        None => {
            let mut s = SquareMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    let mut h = SquareMatrix::zeros(n);
                    h[(i, j)] = 1.0;
                    s[(i, j)] = fd::central_first(|t| energy.value(&(id + h * t)), 1e-4)?.value;
                }
            }
            s
        }
    };
    if w0.abs() > 1e-10 || stress.norm() > 1e-6 {
        return Err(Error::NotStressFree { value: w0, stress: stress.norm() });
    }
    let mut traceless = SquareMatrix::zeros(n);
    traceless[(0, 0)] = std::f64::consts::FRAC_1_SQRT_2;
    traceless[(1, 1)] = -std::f64::consts::FRAC_1_SQRT_2;
    let dilation = id * (1.0 / (n as f64).sqrt());
    let shear = fd::central_second(|t| energy.value(&(id + traceless * t)), 1e-3, Some(w0))?;
    let bulk = fd::central_second(|t| energy.value(&(id + dilation * t)), 1e-3, Some(w0))?;
    Ok((0.5 * shear.value, bulk.value / n as f64))
}

/// `t ↦ W(t Id)` sampled on `ts`.
pub fn dilation_curve(energy: &EnergyDefinition, ts: &[f64]) -> Result<Vec<f64>> {
    let id = SquareMatrix::identity(energy.dim());
    ts.iter().map(|&t| energy.value(&(id * t))).collect()
}

/// Value of `‖dev_n log U‖²` used by isochoric energies; exposed for callers
/// building profiles on top of it.
pub fn isochoric_strain(f: &SquareMatrix) -> Result<f64> {
    omega_devlog(f)
}
