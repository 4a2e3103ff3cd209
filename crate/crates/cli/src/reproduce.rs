//! Expected-versus-computed tables for the fixture lines.

use std::f64::consts::{E, FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, SQRT_2};

use elliptika::cases::{case_by_id, case_voliso_3d, closed_form_line, CaseId, NamedCase};
use elliptika::lab::{concave_critical_point, fd, CriticalPointVerdict, RankOneProbe};
use elliptika::strain::omega_svk_second;
use elliptika::tensor::{deviatoric, left_stretch, spd_log, sym_eig, SymmetricTensor};
use serde::{Deserialize, Serialize};

use crate::error::CliResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// `|computed − expected|`
    Abs,
    /// `|computed − expected| / |expected|`
    Rel,
    /// Reported only; does not affect the verdict.
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub quantity: String,
    pub expected: f64,
    pub computed: f64,
    pub error: f64,
    pub metric: Metric,
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl Row {
    fn new(quantity: impl Into<String>, expected: f64, computed: f64, metric: Metric, tolerance: Option<f64>) -> Self {
        let diff = (computed - expected).abs();
        let error = match metric {
            Metric::Abs => diff,
            Metric::Rel | Metric::Info if expected != 0.0 => diff / expected.abs(),
            _ => diff,
        };
        let pass = match (metric, tolerance) {
            (Metric::Info, _) | (_, None) => None,
            (_, Some(tol)) => Some(error <= tol),
        };
        Self { quantity: quantity.into(), expected, computed, error, metric, tolerance, pass }
    }

    fn abs(q: impl Into<String>, expected: f64, computed: f64, tol: f64) -> Self {
        Self::new(q, expected, computed, Metric::Abs, Some(tol))
    }

    fn rel(q: impl Into<String>, expected: f64, computed: f64, tol: f64) -> Self {
        Self::new(q, expected, computed, Metric::Rel, Some(tol))
    }

    fn info(q: impl Into<String>, expected: f64, computed: f64) -> Self {
        Self::new(q, expected, computed, Metric::Info, None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub case: CaseId,
    pub alpha: Option<f64>,
    pub rows: Vec<Row>,
    pub passed: bool,
}

pub const SECOND_DERIVATIVE_TOL: f64 = 1e-4;
pub const ORACLE_TOL: f64 = 1e-9;
pub const SPECTRAL_TOL: f64 = 1e-6;
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
pub const ALPHA_SPREAD_TOL: f64 = 1e-6;
pub const SVK_FIRST_TOL: f64 = 1e-8;
pub const SVK_SECOND_TOL: f64 = 1e-6;

/// Angles at which the α-dependence of the cross-product line is sampled.
pub const ALPHAS: [f64; 4] = [0.0, FRAC_PI_6, FRAC_PI_3, FRAC_PI_2];

fn critical_rows(case: &NamedCase, v: &CriticalPointVerdict, second_tol: f64) -> Vec<Row> {
    vec![
        Row::abs("h'(0)", case.expected_first, v.first, v.tol_grad),
        Row::rel("h''(0)", case.expected_second, v.second, second_tol),
        Row::info("h(0)", v.derivatives.h0, v.derivatives.h0),
    ]
}

fn oracle_rows(case: &NamedCase, tol_grad: f64) -> CliResult<Vec<Row>> {
    let jet = closed_form_line(case, 0.0)?;
    Ok(vec![
        Row::abs("h'(0) eigenvalue oracle", 0.0, jet.d1, tol_grad),
        Row::rel("h''(0) eigenvalue oracle", case.expected_second, jet.d2, ORACLE_TOL),
    ])
}

fn largest_eigenvalue(probe: &RankOneProbe, t: f64) -> elliptika::Result<f64> {
    let g = probe.point(t);
    let e = sym_eig(&SymmetricTensor::symmetrize(&(g * g.transpose())))?;
    Ok(e.eigenvalues().iter().copied().fold(f64::MIN, f64::max))
}

/// `μ₃`, `μ₃′`, `μ₃″` at `t = 0` from differences of the numeric spectrum.
fn spectral_rows(case: &NamedCase) -> CliResult<Vec<Row>> {
    let (e10, e40, e50) = (E.powi(10), E.powi(40), E.powi(50));
    let mu = |t: f64| largest_eigenvalue(&case.probe, t);
    let d1 = fd::central_first(mu, 1e-3)?.value;
    let d2 = fd::central_second(mu, 1e-2, None)?.value;
    Ok(vec![
        Row::rel("mu3(0)", e40, mu(0.0)?, SPECTRAL_TOL),
        Row::rel("mu3'(0)", 10.0 * SQRT_2 * e40 / 29.0, d1, SPECTRAL_TOL),
        Row::rel("mu3''(0)", 25.0 * (e40 + 8.0 * e50) / (841.0 * (e10 - 1.0)), d2, SPECTRAL_TOL),
    ])
}

/// `|ξ · F⁻ᵀη|` and `|(dev log V ξ) · F⁻ᵀη|`, each normalized by the norms of
/// the vectors involved.
pub fn orthogonality_residuals(probe: &RankOneProbe) -> CliResult<(f64, f64)> {
    let f = probe.f();
    let fit = f.inverse_transpose()?.mul_vec(probe.eta());
    let dxi = deviatoric(&spd_log(&left_stretch(f)?)?).matrix().mul_vec(probe.xi());
    let first = probe.xi().dot(&fit).abs() / (probe.xi().norm() * fit.norm());
    let second = dxi.dot(&fit).abs() / (dxi.norm() * fit.norm());
    Ok((first, second))
}

fn voliso_rows(alpha: f64) -> CliResult<Vec<Row>> {
    let case = case_voliso_3d(alpha)?;
    let v = concave_critical_point(&case.measure, &case.probe)?;
    let mut rows = critical_rows(&case, &v, SECOND_DERIVATIVE_TOL);
    let (r1, r2) = orthogonality_residuals(&case.probe)?;
    rows.push(Row::abs("xi . F^-T eta", 0.0, r1, ORTHOGONALITY_TOL));
    rows.push(Row::abs("(dev log V xi) . F^-T eta", 0.0, r2, ORTHOGONALITY_TOL));

    let mut seconds = Vec::with_capacity(ALPHAS.len());
    for a in ALPHAS {
        let c = case_voliso_3d(a)?;
        let s = concave_critical_point(&c.measure, &c.probe)?.second;
        rows.push(Row::info(format!("h''(0) at alpha = {a:.6}"), case.expected_second, s));
        seconds.push(s);
    }
    let hi = seconds.iter().copied().fold(f64::MIN, f64::max);
    let lo = seconds.iter().copied().fold(f64::MAX, f64::min);
    let size = seconds.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let spread = if size > 0.0 { (hi - lo) / size } else { 0.0 };
    rows.push(Row::abs("relative spread of h''(0) over alpha", 0.0, spread, ALPHA_SPREAD_TOL));
    Ok(rows)
}

pub fn reproduce(id: CaseId, alpha: f64) -> CliResult<Reproduction> {
    let mut used_alpha = None;
    let rows = match id {
        CaseId::Log2d => {
            let case = case_by_id(id)?;
            let v = concave_critical_point(&case.measure, &case.probe)?;
            let mut rows = critical_rows(&case, &v, SECOND_DERIVATIVE_TOL);
            rows.extend(oracle_rows(&case, v.tol_grad)?);
            rows
        }
        CaseId::Devlog3d => {
            let case = case_by_id(id)?;
            let v = concave_critical_point(&case.measure, &case.probe)?;
            let mut rows = critical_rows(&case, &v, SECOND_DERIVATIVE_TOL);
            rows.extend(oracle_rows(&case, v.tol_grad)?);
            rows.extend(spectral_rows(&case)?);
            rows
        }
        CaseId::Voliso3d => {
            used_alpha = Some(alpha);
            voliso_rows(alpha)?
        }
        CaseId::Svk => {
            let case = case_by_id(id)?;
            let v = concave_critical_point(&case.measure, &case.probe)?;
            let exact = omega_svk_second(case.probe.f(), &case.probe.direction());
            vec![
                Row::abs("h'(0)", case.expected_first, v.first, SVK_FIRST_TOL),
                Row::rel("h''(0)", case.expected_second, v.second, SVK_SECOND_TOL),
                Row::info("h(0)", v.derivatives.h0, v.derivatives.h0),
                Row::info("h''(0) exact quartic", case.expected_second, exact),
            ]
        }
    };
    let passed = rows.iter().all(|r| r.pass != Some(false));
    Ok(Reproduction { case: id, alpha: used_alpha, rows, passed })
}
