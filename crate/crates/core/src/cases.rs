//! Explicit rank-one lines on which the logarithmic strain measures have a
//! concave critical point, with closed-form eigenvalue oracles.

use std::f64::consts::{E, SQRT_2};
use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::RankOneProbe;
use crate::strain::StrainMeasure;
use crate::tensor::{deviatoric, left_stretch, rotation_about_axis, spd_log, SquareMatrix, SymmetricTensor, UnitVector, Vector};

/// `(log V) ξ` and `(dev₃ log V) ξ` below this relative size count as zero.
const DEGENERATE_TOLERANCE: f64 = 1e-14;

fn log_v(f: &SquareMatrix) -> Result<SymmetricTensor> {
    spd_log(&left_stretch(f)?)
}

fn check_image(v: &Vector, reference: f64, what: &str) -> Result<()> {
    if v.norm() <= DEGENERATE_TOLERANCE * (1.0 + reference) {
        Err(Error::DegenerateDirection(format!("{what} vanishes")))
    } else {
        Ok(())
    }
}

/// `η = a Fᵀ J (log V) ξ` with `J` the rotation by `−π/2`, so that
/// `⟨(log V) ξ, F^{-T} η⟩ = 0`.
pub fn eta_orthogonal_2d(f: &SquareMatrix, xi: &Vector, a: f64) -> Result<Vector> {
    if f.dim() != 2 || xi.dim() != 2 {
        return Err(Error::InvalidInput("planar construction needs dimension 2".into()));
    }
    let l = log_v(f)?;
    let v = l.matrix().mul_vec(xi);
    check_image(&v, l.norm() * xi.norm(), "(log V) xi")?;
    let jv = Vector::new(&[v[1], -v[0]])?;
    Ok(f.transpose().mul_vec(&jv) * a)
}

/// `η = Fᵀ Q(ϑ, θ) A ϑ` with `ϑ = (dev₃ log V) ξ / ‖(dev₃ log V) ξ‖`,
/// `A = (0 1 0; −1 0 0; 0 0 0)` and `Q(ϑ, θ)` the rotation about `ϑ`.
pub fn eta_orthogonal_3d(f: &SquareMatrix, xi: &Vector, theta: f64) -> Result<Vector> {
    if f.dim() != 3 || xi.dim() != 3 {
        return Err(Error::InvalidInput("spatial construction needs dimension 3".into()));
    }
    let d = deviatoric(&log_v(f)?);
    let v = d.matrix().mul_vec(xi);
    check_image(&v, d.norm() * xi.norm(), "(dev log V) xi")?;
    let vartheta = UnitVector::normalize(&v)?;
    let t = vartheta.vector();
    let a_t = Vector::new(&[t[1], -t[0], 0.0])?;
    if a_t.norm() == 0.0 {
        return Err(Error::DegenerateDirection("A vartheta vanishes".into()));
    }
    let q = rotation_about_axis(&vartheta, theta)?;
    Ok(f.transpose().mul_vec(&q.mul_vec(&a_t)))
}

/// `η = Fᵀ (ξ × (dev₃ log V) ξ)`, orthogonal to both `ξ` and `(dev₃ log V) ξ`
/// after mapping by `F^{-T}`. Along such a line `det` is constant and the
/// first derivative of `‖dev₃ log V‖²` vanishes.
pub fn double_orthogonal_eta(f: &SquareMatrix, xi: &Vector) -> Result<Vector> {
    if f.dim() != 3 {
        return Err(Error::InvalidInput("cross-product construction needs dimension 3".into()));
    }
    let d = deviatoric(&log_v(f)?);
    let w = xi.cross(&d.matrix().mul_vec(xi))?;
    check_image(&w, d.norm() * xi.norm() * xi.norm(), "xi x (dev log V) xi")?;
    Ok(f.transpose().mul_vec(&w))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseId {
    Svk,
    Log2d,
    Devlog3d,
    Voliso3d,
}

impl CaseId {
    pub const ALL: [CaseId; 4] = [CaseId::Svk, CaseId::Log2d, CaseId::Devlog3d, CaseId::Voliso3d];

    pub fn name(self) -> &'static str {
        match self {
            CaseId::Svk => "svk",
            CaseId::Log2d => "log2d",
            CaseId::Devlog3d => "devlog3d",
            CaseId::Voliso3d => "voliso3d",
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CaseId::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown case '{s}' (expected svk, log2d, devlog3d or voliso3d)")))
    }
}

/// A fixture line with the published values of `h′(0)` and `h″(0)` for its
/// strain measure.
#[derive(Clone, Debug)]
pub struct NamedCase {
    pub id: CaseId,
    pub probe: RankOneProbe,
    pub measure: StrainMeasure,
    pub expected_first: f64,
    pub expected_second: f64,
}

impl NamedCase {
    pub fn has_eigenvalue_oracle(&self) -> bool {
        matches!(self.id, CaseId::Log2d | CaseId::Devlog3d)
    }

    /// Open interval on which the closed-form eigenvalues are valid.
    pub fn oracle_domain(&self) -> Option<(f64, f64)> {
        match self.id {
            CaseId::Log2d => Some((-1.0 / 3.0, f64::INFINITY)),
            CaseId::Devlog3d => Some((-29.0 * SQRT_2 / 15.0, 29.0 * SQRT_2 / 15.0)),
            _ => None,
        }
    }
}

/// `F = ½ Id`, `ξ⊗η = e₁⊗e₂` for `‖FᵀF − Id‖²`.
///
/// The stored second derivative is the published `−½`; the exact value of
/// `d²/dt² ‖FᵀF − Id‖²` along this line is `−2`.
pub fn case_svk() -> NamedCase {
    let f = SquareMatrix::identity(2) * 0.5;
    let probe = RankOneProbe::new(f, Vector::basis(2, 0), Vector::basis(2, 1), (-0.2, 0.2)).expect("valid fixture");
    NamedCase { id: CaseId::Svk, probe, measure: StrainMeasure::svk(2), expected_first: 0.0, expected_second: -0.5 }
}

/// `F = diag(e⁸, e²)`, `ξ = (1,1)/√2`, `η` from [`eta_orthogonal_2d`] with
/// `a = −1`, for `‖log U‖²`.
pub fn case_log_2d() -> NamedCase {
    let f = SquareMatrix::diag(&[E.powi(8), E.powi(2)]).expect("2x2");
    let xi = Vector::new(&[1.0, 1.0]).expect("2d") * (1.0 / SQRT_2);
    let eta = eta_orthogonal_2d(&f, &xi, -1.0).expect("nondegenerate fixture");
    let probe = RankOneProbe::new(f, xi, eta, (-0.3, 0.3)).expect("valid fixture");
    let e12 = E.powi(12);
    NamedCase {
        id: CaseId::Log2d,
        probe,
        measure: StrainMeasure::log(2),
        expected_first: 0.0,
        expected_second: (110.0 - 2.0 * e12) / (e12 - 1.0),
    }
}

/// `F = diag(1, e²⁰, e¹⁵)`, `ξ = (0,1,1)/√2`, `η = (0, 10e²⁰, −25e¹⁵)/29`
/// (the `θ = π/2` member of [`eta_orthogonal_3d`]), for `‖dev₃ log U‖²`.
pub fn case_devlog_3d() -> NamedCase {
    let f = SquareMatrix::diag(&[1.0, E.powi(20), E.powi(15)]).expect("3x3");
    let xi = Vector::new(&[0.0, 1.0, 1.0]).expect("3d") * (1.0 / SQRT_2);
    let eta = Vector::new(&[0.0, 10.0 * E.powi(20) / 29.0, -25.0 * E.powi(15) / 29.0]).expect("3d");
    let probe = RankOneProbe::new(f, xi, eta, (-1.0, 1.0)).expect("valid fixture");
    let e10 = E.powi(10);
    NamedCase {
        id: CaseId::Devlog3d,
        probe,
        measure: StrainMeasure::devlog(3),
        expected_first: 0.0,
        expected_second: -25.0 * (4.0 * e10 - 49.0) / (841.0 * (e10 - 1.0)),
    }
}

/// `ξ(α) = (√3/2 sin α, √3/2 cos α, ½)`.
pub fn voliso_xi(alpha: f64) -> Vector {
    let r = 3f64.sqrt() / 2.0;
    Vector::new(&[r * alpha.sin(), r * alpha.cos(), 0.5]).expect("3d")
}

/// `F₀ = diag(1, e²⁰, e¹⁰)`, `ξ = ξ(α)`, `η` from [`double_orthogonal_eta`],
/// for `‖dev₃ log U‖²`; `det` is constant along the line so any volumetric
/// term drops out.
pub fn case_voliso_3d(alpha: f64) -> Result<NamedCase> {
    let f = SquareMatrix::diag(&[1.0, E.powi(20), E.powi(10)])?;
    let xi = voliso_xi(alpha);
    let eta = double_orthogonal_eta(&f, &xi)?;
    let probe = RankOneProbe::new(f, xi, eta, (-0.5, 0.5))?;
    let (e20, e40, r3) = (E.powi(20), E.powi(40), 3f64.sqrt());
    let expected = 75.0 * (e40 * (319.0 - 185.0 * r3) + 140.0 * e20 + 185.0 * r3 + 301.0) / (16.0 * (e40 - 1.0));
    Ok(NamedCase { id: CaseId::Voliso3d, probe, measure: StrainMeasure::devlog(3), expected_first: 0.0, expected_second: expected })
}

pub fn case_by_id(id: CaseId) -> Result<NamedCase> {
    match id {
        CaseId::Svk => Ok(case_svk()),
        CaseId::Log2d => Ok(case_log_2d()),
        CaseId::Devlog3d => Ok(case_devlog_3d()),
        CaseId::Voliso3d => case_voliso_3d(0.0),
    }
}

/// Truncated Taylor polynomial `(f, f′, f″)` at a point; arithmetic follows
/// the chain rule to second order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, d1: 0.0, d2: 0.0 }
    }

    pub fn variable(t: f64) -> Self {
        Self { v: t, d1: 1.0, d2: 0.0 }
    }

    fn chain(self, f: f64, f1: f64, f2: f64) -> Self {
        Self { v: f, d1: f1 * self.d1, d2: f2 * self.d1 * self.d1 + f1 * self.d2 }
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v, -1.0 / (self.v * self.v))
    }

    pub fn square(self) -> Self {
        self * self
    }

    pub fn scale(self, c: f64) -> Self {
        Self { v: c * self.v, d1: c * self.d1, d2: c * self.d2 }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        Jet { v: self.v * o.v, d1: self.d1 * o.v + self.v * o.d1, d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2 }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let inv = o.chain(1.0 / o.v, -1.0 / (o.v * o.v), 2.0 / (o.v * o.v * o.v));
        self * inv
    }
}

fn poly(t: Jet, c0: f64, c1: f64, c2: f64) -> Jet {
    Jet::constant(c0) + t.scale(c1) + t.square().scale(c2)
}

fn check_domain(case: &NamedCase, t: f64) -> Result<()> {
    let (lo, hi) = case
        .oracle_domain()
        .ok_or_else(|| Error::InvalidInput(format!("case {} has no closed-form eigenvalues", case.id)))?;
    if t > lo && t < hi && t.is_finite() {
        Ok(())
    } else {
        Err(Error::OutsideInterval { t, lo, hi })
    }
}

/// Closed-form eigenvalues of `(F + tξ⊗η)(F + tξ⊗η)ᵀ` as jets in `t`.
///
/// The smaller root of each quadratic is `det²` divided by the larger one; the
/// subtractive branch of the quadratic formula loses every digit at these
/// magnitudes.
pub fn mu_jets(case: &NamedCase, t: f64) -> Result<Vec<Jet>> {
    check_domain(case, t)?;
    let tj = Jet::variable(t);
    match case.id {
        CaseId::Log2d => {
            let (e4, e12, e20) = (E.powi(4), E.powi(12), E.powi(20));
            let p = poly(tj, 1.0 + e12, 8.0 - 2.0 * e12, 32.0 + 2.0 * e12);
            let det_sq = poly(tj, 1.0, 3.0, 0.0).square().scale(e20);
            let disc = p.square() - poly(tj, 1.0, 3.0, 0.0).square().scale(4.0 * e12);
            let mu1 = (p + disc.sqrt()).scale(0.5 * e4);
            let mu2 = det_sq / mu1;
            Ok(vec![mu1, mu2])
        }
        CaseId::Devlog3d => {
            let (e10, e30, e70) = (E.powi(10), E.powi(30), E.powi(70));
            let a = poly(tj, 841.0, 290.0 * SQRT_2, 100.0);
            let b = poly(tj, 841.0, -725.0 * SQRT_2, 625.0);
            let r = a.scale(e10) + b;
            let c_sq = poly(tj, -29.0 * SQRT_2, 15.0, 0.0).square();
            let disc = r.square() - c_sq.scale(1682.0 * e10);
            let mu3 = (r + disc.sqrt()).scale(e30 / 1682.0);
            let mu2 = c_sq.scale(e70 / 1682.0) / mu3;
            Ok(vec![Jet::constant(1.0), mu2, mu3])
        }
        _ => unreachable!("domain check rejects cases without oracle"),
    }
}

/// Closed-form eigenvalues `μᵢ(t)` in the published labelling: `(μ₁, μ₂)`
/// with `μ₁` the larger one in the planar case, `(1, μ₂, μ₃)` in the spatial
/// case.
pub fn mu_closed_form(case: &NamedCase, t: f64) -> Result<Vec<f64>> {
    Ok(mu_jets(case, t)?.into_iter().map(|j| j.v).collect())
}

/// `[det(F + tξ⊗η)]²` in closed form.
pub fn det_squared_closed_form(case: &NamedCase, t: f64) -> Result<f64> {
    check_domain(case, t)?;
    match case.id {
        CaseId::Log2d => Ok(E.powi(20) * (3.0 * t + 1.0).powi(2)),
        CaseId::Devlog3d => Ok(E.powi(70) * (15.0 * t - 29.0 * SQRT_2).powi(2) / 1682.0),
        _ => unreachable!(),
    }
}

/// `(h(t), h′(t), h″(t))` of the case's strain measure from the closed-form
/// eigenvalues: `h = ¼ Σ log² μᵢ` in the planar case and
/// `h = (1/12) Σ_{i<j} log²(μᵢ/μⱼ)` in the spatial case.
pub fn closed_form_line(case: &NamedCase, t: f64) -> Result<Jet> {
    let mu = mu_jets(case, t)?;
    let logs: Vec<Jet> = mu.iter().map(|m| m.ln()).collect();
    match case.id {
        CaseId::Log2d => Ok((logs[0].square() + logs[1].square()).scale(0.25)),
        CaseId::Devlog3d => {
            let mut acc = Jet::constant(0.0);
            for i in 0..3 {
                for j in i + 1..3 {
                    acc = acc + (logs[i] - logs[j]).square();
                }
            }
            Ok(acc.scale(1.0 / 12.0))
        }
        _ => unreachable!(),
    }
}
