//! Strain measures `ω : GL⁺(n) → [0, ∞)` and the invariant sets built on the
//! singular values of `F`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::tensor::{stretch_system, SingularSystem, SquareMatrix};

fn log_singular_values(svd: &SingularSystem) -> Vec<f64> {
    svd.values().iter().map(|s| s.ln()).collect()
}

/// `‖log U‖² = Σ log² λᵢ`.
pub fn omega_log(f: &SquareMatrix) -> Result<f64> {
    let svd = stretch_system(f)?;
    Ok(log_singular_values(&svd).iter().map(|l| l * l).sum())
}

/// `2 (log V) F^{-T}`.
pub fn omega_log_gradient(f: &SquareMatrix) -> Result<SquareMatrix> {
    let log_v = stretch_system(f)?.left_function(f64::ln)?;
    Ok(*log_v.matrix() * f.inverse_transpose()? * 2.0)
}

/// `‖dev_n log U‖²`.
pub fn omega_devlog(f: &SquareMatrix) -> Result<f64> {
    let logs = log_singular_values(&stretch_system(f)?);
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    Ok(logs.iter().map(|l| (l - mean).powi(2)).sum())
}

/// `2 (dev_n log V) F^{-T}`.
pub fn omega_devlog_gradient(f: &SquareMatrix) -> Result<SquareMatrix> {
    let log_v = stretch_system(f)?.left_function(f64::ln)?;
    Ok(log_v.matrix().deviatoric() * f.inverse_transpose()? * 2.0)
}

/// `(1/(2n)) Σ_{i,j} log²(λᵢ/λⱼ)` over all ordered pairs of singular values.
pub fn devlog_pairwise(f: &SquareMatrix) -> Result<f64> {
    let logs = log_singular_values(&stretch_system(f)?);
    let n = logs.len();
    let total: f64 = logs
        .iter()
        .flat_map(|a| logs.iter().map(move |b| (a - b).powi(2)))
        .sum();
    Ok(total / (2.0 * n as f64))
}

/// `‖FᵀF − Id‖²`.
pub fn omega_svk(f: &SquareMatrix) -> f64 {
    let c = f.transpose() * *f;
    (c - SquareMatrix::identity(f.dim())).norm().powi(2)
}

/// `4 (FFᵀF − F)`.
pub fn omega_svk_gradient(f: &SquareMatrix) -> SquareMatrix {
    (*f * f.transpose() * *f - *f) * 4.0
}

/// Second directional derivative of `‖FᵀF − Id‖²` in direction `H`:
/// `4 (‖HFᵀ‖² + ‖FᵀH‖² + tr((FᵀH)²) − ‖H‖²)`.
pub fn omega_svk_second(f: &SquareMatrix, h: &SquareMatrix) -> f64 {
    let ft_h = f.transpose() * *h;
    let h_ft = *h * f.transpose();
    4.0 * (h_ft.norm().powi(2) + ft_h.norm().powi(2) + (ft_h * ft_h).trace() - h.norm().powi(2))
}

/// Seth–Hill measure `Σ f_m(λᵢ)²` with `f_m(x) = (x^{2m} − 1)/(2m)` and
/// `f_0 = log`.
pub fn seth_hill_measure(f: &SquareMatrix, m: f64) -> Result<f64> {
    let svd = stretch_system(f)?;
    Ok(svd
        .values()
        .iter()
        .map(|&x| {
            let v = if m == 0.0 { x.ln() } else { (2.0 * m * x.ln()).exp_m1() / (2.0 * m) };
            v * v
        })
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantKind {
    /// `(K₁, K₂, K₃)`: amount of dilation, magnitude and mode of distortion.
    Criscione,
    /// `(Î₁, Î₂, Î₃)`: multiplicative isochoric invariants and `det F`.
    IsochoricMultiplicative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantTriple {
    pub kind: InvariantKind,
    pub values: [f64; 3],
}

impl InvariantTriple {
    pub fn names(&self) -> [&'static str; 3] {
        match self.kind {
            InvariantKind::Criscione => ["K1", "K2", "K3"],
            InvariantKind::IsochoricMultiplicative => ["I1hat", "I2hat", "I3hat"],
        }
    }
}

fn require_dim3(f: &SquareMatrix) -> Result<()> {
    if f.dim() == 3 {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: 3, found: f.dim() })
    }
}

/// `K₁ = tr log U` and `K₂ = ‖dev₃ log U‖`; these exist for every `F` in
/// `GL⁺(3)`, including pure dilations.
pub fn criscione_dilation_distortion(f: &SquareMatrix) -> Result<(f64, f64)> {
    require_dim3(f)?;
    let logs = log_singular_values(&stretch_system(f)?);
    let k1: f64 = logs.iter().sum();
    let mean = k1 / 3.0;
    let k2 = logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>().sqrt();
    Ok((k1, k2))
}

/// Criscione invariants `K₁ = tr log U`, `K₂ = ‖dev₃ log U‖`,
/// `K₃ = 3√6 det(dev₃ log U / K₂)`.
///
/// `K₃` is `0/0` at dilations; `K₂ ≤ 1e-12 (1 + ‖log U‖)` is reported as
/// [`Error::DistortionUndefined`].
pub fn criscione_invariants(f: &SquareMatrix) -> Result<InvariantTriple> {
    require_dim3(f)?;
    let logs = log_singular_values(&stretch_system(f)?);
    let k1: f64 = logs.iter().sum();
    let mean = k1 / 3.0;
    let dev: Vec<f64> = logs.iter().map(|l| l - mean).collect();
    let k2 = dev.iter().map(|d| d * d).sum::<f64>().sqrt();
    let log_norm = logs.iter().map(|l| l * l).sum::<f64>().sqrt();
    if k2 <= 1e-12 * (1.0 + log_norm) {
        return Err(Error::DistortionUndefined { k2 });
    }
    let k3 = (3.0 * 6f64.sqrt() * dev.iter().map(|d| d / k2).product::<f64>()).clamp(-1.0, 1.0);
    Ok(InvariantTriple { kind: InvariantKind::Criscione, values: [k1, k2, k3] })
}

/// `Î₁ = λ₁²/(λ₂λ₃)`, `Î₂ = λ₁λ₂/λ₃²`, `Î₃ = λ₁λ₂λ₃` for ordered singular values
/// `λ₁ ≥ λ₂ ≥ λ₃`.
pub fn ihat_invariants(f: &SquareMatrix) -> Result<InvariantTriple> {
    require_dim3(f)?;
    let svd = stretch_system(f)?;
    let l = svd.values();
    Ok(InvariantTriple {
        kind: InvariantKind::IsochoricMultiplicative,
        values: [l[0] * l[0] / (l[1] * l[2]), l[0] * l[1] / (l[2] * l[2]), l[0] * l[1] * l[2]],
    })
}

type ValueFn = dyn Fn(&SquareMatrix) -> Result<f64> + Send + Sync;
type GradientFn = dyn Fn(&SquareMatrix) -> Result<SquareMatrix> + Send + Sync;

/// A named strain measure with an optional analytic gradient.
#[derive(Clone)]
pub struct StrainMeasure {
    name: String,
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Option<Arc<GradientFn>>,
}

impl fmt::Debug for StrainMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrainMeasure")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("gradient", &self.gradient.is_some())
            .finish()
    }
}

impl StrainMeasure {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        value: impl Fn(&SquareMatrix) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), dim, value: Arc::new(value), gradient: None }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&SquareMatrix) -> Result<SquareMatrix> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    /// `‖log U‖²`.
    pub fn log(dim: usize) -> Self {
        Self::new("omega-log", dim, omega_log).with_gradient(omega_log_gradient)
    }

    /// `‖dev_n log U‖²`.
    pub fn devlog(dim: usize) -> Self {
        Self::new("omega-devlog", dim, omega_devlog).with_gradient(omega_devlog_gradient)
    }

    /// `‖FᵀF − Id‖²`.
    pub fn svk(dim: usize) -> Self {
        Self::new("omega-svk", dim, |f| Ok(omega_svk(f))).with_gradient(|f| Ok(omega_svk_gradient(f)))
    }

    /// `‖log FᵀF‖² = 4 ‖log U‖²`.
    pub fn log_cauchy_green(dim: usize) -> Self {
        Self::new("omega-log-c", dim, |f| Ok(4.0 * omega_log(f)?))
            .with_gradient(|f| Ok(omega_log_gradient(f)? * 4.0))
    }

    pub fn seth_hill(dim: usize, m: f64) -> Self {
        Self::new(format!("seth-hill({m})"), dim, move |f| seth_hill_measure(f, m))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn value(&self, f: &SquareMatrix) -> Result<f64> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: f.dim() });
        }
        (self.value)(f)
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

impl ScalarField for StrainMeasure {
    fn dim(&self) -> usize {
        self.dim
    }

    fn label(&self) -> String {
        self.name.clone()
    }

    fn value(&self, f: &SquareMatrix) -> Result<f64> {
        StrainMeasure::value(self, f)
    }

    fn gradient(&self, f: &SquareMatrix) -> Option<Result<SquareMatrix>> {
        StrainMeasure::gradient(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn diag(v: &[f64]) -> SquareMatrix {
        SquareMatrix::diag(v).unwrap()
    }

    #[test]
    fn log_measure_examples() {
        assert_eq!(omega_log(&SquareMatrix::identity(2)).unwrap(), 0.0);
        assert_eq!(omega_log_gradient(&SquareMatrix::identity(3)).unwrap().norm(), 0.0);
        let v = omega_log(&diag(&[E.powi(8), E.powi(2)])).unwrap();
        assert_relative_eq!(v, 68.0, max_relative = 1e-15);
    }

    #[test]
    fn devlog_fixture_pair() {
        let u1 = diag(&[E, E, E.powi(-2)]);
        let r3 = 3f64.sqrt();
        let u2 = diag(&[r3.exp(), 1.0, (-r3).exp()]);
        assert_relative_eq!(omega_devlog(&u1).unwrap(), 6.0, max_relative = 1e-14);
        assert_relative_eq!(omega_devlog(&u2).unwrap(), 6.0, max_relative = 1e-14);
        assert!(omega_devlog(&(SquareMatrix::identity(3) * 3.7)).unwrap().abs() < 1e-28);
    }

    #[test]
    fn svk_examples() {
        assert_eq!(omega_svk(&SquareMatrix::identity(2)), 0.0);
        assert_eq!(omega_svk_gradient(&SquareMatrix::identity(3)).norm(), 0.0);
        let f = SquareMatrix::identity(2) * 0.5;
        let h = SquareMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        assert_eq!(omega_svk_gradient(&f).inner(&h), 0.0);
        // 4 (1/4 + 1/4 + 0 − 1)
        assert_eq!(omega_svk_second(&f, &h), -2.0);
    }

    #[test]
    fn seth_hill_examples() {
        let f = diag(&[3f64.sqrt(), 1.0]);
        assert_relative_eq!(seth_hill_measure(&f, 1.0).unwrap(), 1.0, max_relative = 1e-14);
        let g = diag(&[1.3, 0.4]);
        assert_eq!(seth_hill_measure(&g, 0.0).unwrap(), omega_log(&g).unwrap());
    }

    #[test]
    fn criscione_examples() {
        let u1 = diag(&[E, E, E.powi(-2)]);
        let k = criscione_invariants(&u1).unwrap().values;
        assert!(k[0].abs() < 1e-14);
        assert_relative_eq!(k[1], 6f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(k[2], -1.0, max_relative = 1e-12);

        let r3 = 3f64.sqrt();
        let u2 = diag(&[r3.exp(), 1.0, (-r3).exp()]);
        let k = criscione_invariants(&u2).unwrap().values;
        assert!(k[0].abs() < 1e-14);
        assert_relative_eq!(k[1], 6f64.sqrt(), max_relative = 1e-14);
        assert!(k[2].abs() < 1e-14);

        let dilation = SquareMatrix::identity(3) * 2.5;
        let (k1, k2) = criscione_dilation_distortion(&dilation).unwrap();
        assert_relative_eq!(k1, 3.0 * 2.5f64.ln(), max_relative = 1e-14);
        assert!(k2 < 1e-15);
        assert!(matches!(criscione_invariants(&dilation), Err(Error::DistortionUndefined { .. })));
    }

    #[test]
    fn ihat_examples() {
        let u1 = diag(&[E, E, E.powi(-2)]);
        let i = ihat_invariants(&u1).unwrap().values;
        assert_relative_eq!(i[0], E.powi(3), max_relative = 1e-14);
        assert_relative_eq!(i[1], E.powi(6), max_relative = 1e-14);
        assert_relative_eq!(i[2], 1.0, max_relative = 1e-14);

        let r3 = 3f64.sqrt();
        let u2 = diag(&[r3.exp(), 1.0, (-r3).exp()]);
        let i = ihat_invariants(&u2).unwrap().values;
        assert_relative_eq!(i[0], (3.0 * r3).exp(), max_relative = 1e-14);
        assert_relative_eq!(i[1], (3.0 * r3).exp(), max_relative = 1e-14);

        assert_eq!(ihat_invariants(&SquareMatrix::identity(3)).unwrap().values, [1.0, 1.0, 1.0]);
    }

    #[test]
    fn orientation_errors() {
        let f = diag(&[1.0, -2.0]);
        assert!(matches!(omega_log(&f), Err(Error::Orientation { .. })));
        assert!(matches!(omega_devlog(&f), Err(Error::Orientation { .. })));
        assert!(matches!(seth_hill_measure(&f, 0.5), Err(Error::Orientation { .. })));
        assert!(ihat_invariants(&diag(&[1.0, 1.0, -1.0])).is_err());
    }

    #[test]
    fn measure_rejects_wrong_dimension() {
        let m = StrainMeasure::log(3);
        assert!(matches!(
            m.value(&SquareMatrix::identity(2)),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }
}
