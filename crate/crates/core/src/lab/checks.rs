//! Scalar inequality checks on profiles and on singular-value representations.

use super::fd;
use super::optim::golden_section_min;
use super::report::{CheckVerdict, ConvexityReport, Location};
use crate::energy::ScalarProfile;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::tensor::SquareMatrix;

/// Default relative tolerance for the profile inequalities.
pub const PROFILE_TOLERANCE: f64 = 1e-9;

/// `n` points spaced evenly in `log` between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect(),
    }
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `g(λ) = W(diag λ)`.
fn g_diag(field: &dyn ScalarField, lambda: &[f64]) -> Result<f64> {
    field.value(&SquareMatrix::diag(lambda)?)
}

/// Differential Baker–Ericksen inequalities
/// `(λᵢ−λⱼ)(λᵢ ∂g/∂λᵢ − λⱼ ∂g/∂λⱼ) ≥ 0` on a logarithmic grid in `[0.1, 10]ⁿ`
/// with `n_samples` points per axis.
pub fn baker_ericksen_check(field: &dyn ScalarField, n_samples: usize) -> Result<ConvexityReport> {
    let n = field.dim();
    if !(2..=3).contains(&n) {
        return Err(Error::InvalidInput(format!("Baker-Ericksen check needs dimension 2 or 3, got {n}")));
    }
    if n_samples < 2 {
        return Err(Error::InvalidInput("need at least 2 samples per axis".into()));
    }
    let axis = log_grid(0.1, 10.0, n_samples);
    let total = n_samples.pow(n as u32);
    let mut worst = (f64::INFINITY, Location::Nowhere, 0.0);
    let (mut evaluated, mut failures) = (0, 0);

    for idx in 0..total {
        let mut lambda = [0.0; 3];
        let mut k = idx;
        for l in lambda.iter_mut().take(n) {
            *l = axis[k % n_samples];
            k /= n_samples;
        }
        let lambda = &lambda[..n];
        let outcome = (|| -> Result<Vec<(f64, f64)>> {
            let g0 = g_diag(field, lambda)?;
            let mut grads = [0.0; 3];
            for (i, gi) in grads.iter_mut().enumerate().take(n) {
                let h = fd::first_step_factor() * lambda[i];
                *gi = fd::central_first(
                    |s| {
                        let mut l = lambda.to_vec();
                        l[i] += s;
                        g_diag(field, &l)
                    },
                    h,
                )?
                .value;
            }
            let mut out = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let (a, b) = (lambda[i] * grads[i], lambda[j] * grads[j]);
                    let value = (lambda[i] - lambda[j]) * (a - b);
                    let tol = 1e-6 * (lambda[i] - lambda[j]).abs() * (1.0 + a.abs() + b.abs() + g0.abs());
                    out.push((value, tol));
                }
            }
            Ok(out)
        })();
        match outcome {
            Ok(pairs) => {
                evaluated += 1;
                for (value, tol) in pairs {
                    // normalize by the local tolerance so points are comparable
                    let margin = if tol > 0.0 { value / tol * 1e-6 } else { value };
                    if margin < worst.0 {
                        worst = (margin, Location::grid(lambda), tol);
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    let mut report = ConvexityReport::new(format!("baker-ericksen: {}", field.label()));
    let worst_value = if worst.0.is_finite() { worst.0 } else { 0.0 };
    report.push(CheckVerdict::lower_bound("baker-ericksen", worst_value, worst.1, 1e-6).with_counts(evaluated, failures));
    Ok(report)
}

/// Ordering form of the Baker–Ericksen inequalities on 3-point chains
/// `λ → λ′ → λ″` obtained by moving logarithmic stretch from a larger to the
/// next smaller singular value at fixed `det`. Every step must not increase
/// `g`. Dimension 3 only.
pub fn baker_ericksen_ordering_check(field: &dyn ScalarField, n_samples: usize) -> Result<ConvexityReport> {
    if field.dim() != 3 {
        return Err(Error::InvalidInput("ordering check is three dimensional".into()));
    }
    let axis: Vec<f64> = linear_grid(-2.0, 2.0, n_samples.max(2));
    let mut worst = (f64::INFINITY, Location::Nowhere);
    let (mut evaluated, mut failures) = (0, 0);
    for &a in &axis {
        for &b in &axis {
            for &c in &axis {
                if !(a >= b && b >= c) {
                    continue;
                }
                let x0 = [a, b, c];
                let d1 = 0.5 * (x0[0] - x0[1]) * 0.5;
                let x1 = [x0[0] - d1, x0[1] + d1, x0[2]];
                let d2 = 0.5 * (x1[1] - x1[2]) * 0.5;
                let x2 = [x1[0], x1[1] - d2, x1[2] + d2];
                let gs: Result<Vec<f64>> =
                    [x0, x1, x2].iter().map(|x| g_diag(field, &[x[0].exp(), x[1].exp(), x[2].exp()])).collect();
                match gs {
                    Ok(g) => {
                        evaluated += 1;
                        for w in g.windows(2) {
                            let drop = (w[0] - w[1]) / (1.0 + w[0].abs());
                            if drop < worst.0 {
                                worst = (drop, Location::grid(&x0.map(f64::exp)));
                            }
                        }
                    }
                    Err(_) => failures += 1,
                }
            }
        }
    }
    let mut report = ConvexityReport::new(format!("baker-ericksen ordering: {}", field.label()));
    let worst_value = if worst.0.is_finite() { worst.0 } else { 0.0 };
    report.push(CheckVerdict::lower_bound("baker-ericksen-ordering", worst_value, worst.1, 1e-12).with_counts(evaluated, failures));
    Ok(report)
}

fn derivs(p: &ScalarProfile, s: f64) -> Result<(f64, f64)> {
    Ok((fd::profile_first(p, s)?, fd::profile_second(p, s)?))
}

fn normalized(residual: f64, d1: f64) -> f64 {
    if d1 != 0.0 {
        residual / d1.abs()
    } else {
        residual
    }
}

/// Minimum over the grid, then golden-section refinement between the grid
/// neighbours of the minimizer.
fn grid_min(grid: &[f64], r: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid {
        values.push(r(x)?);
    }
    let k = (0..grid.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .ok_or_else(|| Error::InvalidInput("empty grid".into()))?;
    let (mut x_best, mut v_best) = (grid[k], values[k]);
    if grid.len() >= 3 {
        let lo = grid[k.saturating_sub(1)];
        let hi = grid[(k + 1).min(grid.len() - 1)];
        let (x, v) = golden_section_min(|x| r(x).unwrap_or(f64::INFINITY), lo.min(hi), lo.max(hi), 1e-12);
        if v < v_best {
            x_best = x;
            v_best = v;
        }
    }
    Ok((x_best, v_best))
}

/// `2ηΨ″(η) + (1 − √(2η)) Ψ′(η) ≥ 0`, normalized by `|Ψ′(η)|`.
pub fn criterion_2d(psi: &ScalarProfile, eta_grid: &[f64], tol: f64) -> Result<ConvexityReport> {
    if eta_grid.iter().any(|&e| e < 0.0) {
        return Err(Error::InvalidInput("criterion grid must be nonnegative".into()));
    }
    let r = |eta: f64| -> Result<f64> {
        let (d1, d2) = derivs(psi, eta)?;
        Ok(normalized(2.0 * eta * d2 + (1.0 - (2.0 * eta).sqrt()) * d1, d1))
    };
    let (eta, worst) = grid_min(eta_grid, r)?;
    let mut report = ConvexityReport::new(format!("criterion-2d: {}", psi.name()));
    report.push(CheckVerdict::lower_bound("criterion-2d", worst, Location::grid(&[eta]), tol).with_counts(eta_grid.len(), 0));
    Ok(report)
}

/// `(log t − 1)/(2 log² t)`.
pub fn convexify_coefficient(t: f64) -> f64 {
    let l = t.ln();
    (l - 1.0) / (2.0 * l * l)
}

/// Maximizer and maximum of [`convexify_coefficient`] on `[lo, hi]`, searched
/// in `log t`.
pub fn max_convexify_coefficient(lo: f64, hi: f64) -> (f64, f64) {
    let (x, v) = golden_section_min(|x| -convexify_coefficient(x.exp()), lo.ln(), hi.ln(), 1e-14);
    (x.exp(), -v)
}

/// `Ψ″(log² t) ≥ c(t) Ψ′(log² t)` with `c` from [`convexify_coefficient`].
pub fn convexify_1d_check(psi: &ScalarProfile, t_grid: &[f64], tol: f64) -> Result<ConvexityReport> {
    if t_grid.iter().any(|&t| t <= 0.0 || t == 1.0) {
        return Err(Error::InvalidInput("grid must lie in (0, ∞) and exclude t = 1".into()));
    }
    let mut worst = (f64::INFINITY, 0.0);
    for &t in t_grid {
        let s = t.ln().powi(2);
        let (d1, d2) = derivs(psi, s)?;
        let v = normalized(d2 - convexify_coefficient(t) * d1, d1);
        if v < worst.0 {
            worst = (v, t);
        }
    }
    let (lo, hi) = t_grid.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    let (t_max, c_max) = max_convexify_coefficient(lo.max(1.0 + 1e-9), hi.max(1.0 + 2e-9));
    let mut report = ConvexityReport::new(format!("convexify-1d: {}", psi.name()));
    let worst_value = if worst.0.is_finite() { worst.0 } else { 0.0 };
    report.push(CheckVerdict::lower_bound("convexify-1d", worst_value, Location::grid(&[worst.1]), tol).with_counts(t_grid.len(), 0));
    report.set_metric("max_coefficient", c_max);
    report.set_metric("max_coefficient_at", t_max);
    Ok(report)
}

/// Necessary conditions for ellipticity of `t ↦ Ψ̃(‖dev₃ log U‖)` with
/// `Ψ̃(t) = Ψ(t²)`: `Ψ̃′ ≥ 0` and `Ψ̃″ ≥ (3t/8 + 1/t) Ψ̃′`, checked directly on
/// differences of `Ψ̃`, and in the reduced form `Ψ″(t²) ≥ (3/16) Ψ′(t²)`.
/// The two verdicts are reported separately and must agree.
pub fn sendova_walton_check(psi: &ScalarProfile, t_grid: &[f64], tol: f64) -> Result<ConvexityReport> {
    if t_grid.iter().any(|&t| t <= 0.0) {
        return Err(Error::InvalidInput("grid must lie in (0, ∞)".into()));
    }
    let tilde = |t: f64| psi.value(t * t);
    let mut worst_full = (f64::INFINITY, 0.0);
    let mut worst_reduced = (f64::INFINITY, 0.0);
    for &t in t_grid {
        let s1 = (fd::first_step_factor() * t.max(1.0)).min(0.5 * t);
        let s2 = (fd::second_step_factor() * t.max(1.0)).min(0.5 * t);
        let d1 = fd::central_first(|x| tilde(t + x), s1)?.value;
        let d2 = fd::central_second(|x| tilde(t + x), s2, None)?.value;
        let bound = (3.0 * t / 8.0 + 1.0 / t) * d1;
        // scale by the size of the terms compared
        let full = (d2 - bound).min(d1) / (d2.abs() + bound.abs()).max(f64::MIN_POSITIVE);
        if full < worst_full.0 {
            worst_full = (full, t);
        }
        let (p1, p2) = derivs(psi, t * t)?;
        let reduced = (p2 - 3.0 / 16.0 * p1).min(p1) / (p2.abs() + 3.0 / 16.0 * p1.abs()).max(f64::MIN_POSITIVE);
        if reduced < worst_reduced.0 {
            worst_reduced = (reduced, t);
        }
    }
    let mut report = ConvexityReport::new(format!("sendova-walton: {}", psi.name()));
    let full_tol = tol.max(1e-6);
    report.push(CheckVerdict::lower_bound("sendova-walton", worst_full.0, Location::grid(&[worst_full.1]), full_tol).with_counts(t_grid.len(), 0));
    report.push(CheckVerdict::lower_bound("sendova-walton-reduced", worst_reduced.0, Location::grid(&[worst_reduced.1]), tol).with_counts(t_grid.len(), 0));
    let agree = report.verdicts[0].satisfied == report.verdicts[1].satisfied;
    report.set_metric("forms_agree", if agree { 1.0 } else { 0.0 });
    Ok(report)
}

/// Minimum of `Ψ′` on the grid; a negative value shows that no energy
/// `Ψ(‖log U‖²)` or `Ψ(‖dev_n log U‖²)` built from this profile is rank-one
/// convex.
pub fn monotonicity_necessity_check(psi: &ScalarProfile, grid: &[f64], tol: f64) -> Result<ConvexityReport> {
    let mut worst = (f64::INFINITY, 0.0);
    let mut largest = 0.0f64;
    for &s in grid {
        let d1 = fd::profile_first(psi, s)?;
        largest = largest.max(d1.abs());
        if d1 < worst.0 {
            worst = (d1, s);
        }
    }
    let mut report = ConvexityReport::new(format!("monotonicity: {}", psi.name()));
    let worst_value = if worst.0.is_finite() { worst.0 } else { 0.0 };
    report.push(
        CheckVerdict::lower_bound("monotonicity", worst_value, Location::grid(&[worst.1]), tol * (1.0 + largest))
            .with_counts(grid.len(), 0),
    );
    Ok(report)
}
