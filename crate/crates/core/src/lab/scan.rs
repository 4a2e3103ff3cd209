use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::fd;
use super::probe::{line_derivatives, RankOneProbe};
use super::report::{CheckVerdict, ConvexityReport, Location};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::tensor::{SquareMatrix, Vector};

#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub seed: u64,
    /// Relative curvature tolerance, scaled by `(|h(0)|+1)/(1+‖F‖)²`.
    pub tol: f64,
    /// Thread count; `None` uses the global pool. Results do not depend on it.
    pub workers: Option<usize>,
    /// Extra `(ξ, η)` pairs evaluated before refinement.
    pub seed_directions: Vec<(Vector, Vector)>,
    /// Number of random `ξ` used to build critical directions when refining.
    pub critical_xi: usize,
    /// Number of starting points refined by coordinate descent.
    pub refine_starts: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tol: 1e-8,
            workers: None,
            seed_directions: Vec::new(),
            critical_xi: 24,
            refine_starts: 4,
        }
    }
}

impl ScanConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// Runs `op` on a pool with `workers` threads, or on the global pool.
pub(crate) fn with_workers<T: Send>(workers: Option<usize>, op: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            Ok(pool.install(op))
        }
        None => Ok(op()),
    }
}

pub fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let mut c = [0.0; 3];
        for x in c.iter_mut().take(dim) {
            *x = StandardNormal.sample(rng);
        }
        let v = Vector::new(&c[..dim]).expect("dimension in range");
        let n = v.norm();
        if n > 1e-12 {
            return v * (1.0 / n);
        }
    }
}

/// `count` matrices `Id + 0.3 G` with Gaussian `G` and `det ≥ 0.2`, drawn from
/// a ChaCha stream seeded with `seed`.
pub fn random_deformations(seed: u64, count: usize, dim: usize) -> Vec<SquareMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut m = SquareMatrix::identity(dim);
        for i in 0..dim {
            for j in 0..dim {
                let g: f64 = StandardNormal.sample(&mut rng);
                m[(i, j)] += 0.3 * g;
            }
        }
        if m.det() >= 0.2 {
            out.push(m);
        }
    }
    out
}

/// Gradient by central differences in every entry.
pub fn numeric_gradient(field: &dyn ScalarField, f: &SquareMatrix) -> Result<SquareMatrix> {
    let n = f.dim();
    let step = fd::first_step_factor() * (1.0 + f.norm());
    let mut g = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut e = SquareMatrix::zeros(n);
            e[(i, j)] = 1.0;
            g[(i, j)] = fd::central_first(|t| field.value(&(*f + e * t)), step)?.value;
        }
    }
    Ok(g)
}

/// Analytic gradient when available, otherwise [`numeric_gradient`].
pub fn gradient_of(field: &dyn ScalarField, f: &SquareMatrix) -> Result<SquareMatrix> {
    match field.gradient(f) {
        Some(g) => g,
        None => numeric_gradient(field, f),
    }
}

/// A direction pair evaluated at a fixed `F`.
#[derive(Clone, Copy, Debug)]
struct Sample {
    xi: Vector,
    eta: Vector,
    second: f64,
    tol: f64,
}

fn unit_probe(f: &SquareMatrix, xi: &Vector, eta: &Vector) -> Result<RankOneProbe> {
    let xi = *xi * (1.0 / xi.norm());
    let eta = *eta * (1.0 / eta.norm());
    let r = (0.5 * RankOneProbe::new(*f, xi, eta, (-1e-300, 1e-300))?.admissible_radius()).min(1.0);
    RankOneProbe::new(*f, xi, eta, (-r, r))
}

fn evaluate(field: &dyn ScalarField, f: &SquareMatrix, xi: &Vector, eta: &Vector, tol: f64) -> Result<Sample> {
    let probe = unit_probe(f, xi, eta)?;
    let d = line_derivatives(field, &probe)?;
    if !d.second.is_finite() {
        return Err(Error::NonFinite("second derivative".into()));
    }
    // scaled by the terms that enter h″, not by a large volumetric offset
    let threshold =
        tol * (d.h0_differenced.abs() + 1.0) / (1.0 + f.norm()).powi(2) + tol * d.vol_second.abs() + 10.0 * d.second_error;
    Ok(Sample { xi: *probe.xi(), eta: *probe.eta(), second: d.second, tol: threshold })
}

/// Unit `η` orthogonal to `u`, parametrized by an angle in the complement.
fn complement_directions(u: &Vector, count: usize) -> Vec<Vector> {
    let n = u.dim();
    if u.norm() == 0.0 {
        return Vec::new();
    }
    let u = *u * (1.0 / u.norm());
    match n {
        2 => vec![Vector::new(&[-u[1], u[0]]).expect("2d")],
        3 => {
            let k = (0..3).min_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs())).unwrap_or(0);
            let a = u.cross(&Vector::basis(3, k)).expect("3d");
            let a = a * (1.0 / a.norm());
            let b = u.cross(&a).expect("3d");
            (0..count)
                .map(|m| {
                    let th = std::f64::consts::PI * m as f64 / count as f64;
                    a * th.cos() + b * th.sin()
                })
                .collect()
        }
        _ => Vec::new(),
    }
}

/// `∇W_iso(F)` (the full gradient without a volumetric split) and `Cof F`.
fn iso_gradient_and_cofactor(field: &dyn ScalarField, f: &SquareMatrix) -> Result<(SquareMatrix, SquareMatrix)> {
    let g = match field.volumetric_split() {
        Some((iso, _)) => gradient_of(iso, f)?,
        None => gradient_of(field, f)?,
    };
    Ok((g, f.cofactor()))
}

/// Unit `η ∥ (∇W_iso(F)ᵀ ξ) × (Cof F)ᵀ ξ`: `h′(0) = 0` and `det` is constant
/// along the line. Three dimensions only.
fn isochoric_eta(g_iso: &SquareMatrix, cof: &SquareMatrix, xi: &Vector) -> Option<Vector> {
    let w = g_iso.transpose().mul_vec(xi).cross(&cof.transpose().mul_vec(xi)).ok()?;
    let n = w.norm();
    (n > 0.0 && n.is_finite()).then(|| w * (1.0 / n))
}

/// Directions with `h′(0) = 0` for the field at `F`: for each `ξ`, vectors
/// `η ⊥ ∇W(F)ᵀ ξ`. In 3D the volume-preserving choice
/// `η ∥ (∇W_iso(F)ᵀ ξ) × (Cof F)ᵀ ξ` is added as well.
pub fn critical_directions(field: &dyn ScalarField, f: &SquareMatrix, xis: &[Vector], per_xi: usize) -> Result<Vec<(Vector, Vector)>> {
    let g = gradient_of(field, f)?;
    let (g_iso, cof) = iso_gradient_and_cofactor(field, f)?;
    let mut out = Vec::new();
    for xi in xis {
        let u = g.transpose().mul_vec(xi);
        for eta in complement_directions(&u, per_xi) {
            out.push((*xi, eta));
        }
        if f.dim() == 3 {
            if let Some(eta) = isochoric_eta(&g_iso, &cof, xi) {
                out.push((*xi, eta));
            }
        }
    }
    Ok(out)
}

/// Standard `ξ` candidates: basis vectors and normalized `eᵢ ± eⱼ`.
pub fn structured_xis(dim: usize) -> Vec<Vector> {
    let mut out: Vec<Vector> = (0..dim).map(|k| Vector::basis(dim, k)).collect();
    for i in 0..dim {
        for j in i + 1..dim {
            for s in [1.0, -1.0] {
                let v = Vector::basis(dim, i) + Vector::basis(dim, j) * s;
                out.push(v * std::f64::consts::FRAC_1_SQRT_2);
            }
        }
    }
    out
}

pub(crate) fn to_angles(v: &Vector) -> Vec<f64> {
    match v.dim() {
        2 => vec![v[1].atan2(v[0])],
        _ => vec![(v[2] / v.norm()).clamp(-1.0, 1.0).acos(), v[1].atan2(v[0])],
    }
}

pub(crate) fn from_angles(dim: usize, a: &[f64]) -> Vector {
    match dim {
        2 => Vector::new(&[a[0].cos(), a[0].sin()]).expect("2d"),
        _ => Vector::new(&[a[0].sin() * a[1].cos(), a[0].sin() * a[1].sin(), a[0].cos()]).expect("3d"),
    }
}

/// Coordinate descent on the sphere angles of `(ξ, η)`.
fn refine(field: &dyn ScalarField, f: &SquareMatrix, start: Sample, tol: f64) -> Sample {
    let dim = f.dim();
    let k = if dim == 2 { 1 } else { 2 };
    let mut angles = to_angles(&start.xi);
    angles.extend(to_angles(&start.eta));
    let mut best = start;
    let mut step = 0.2;
    let mut evaluations = 0;
    while step > 1e-7 && evaluations < 600 {
        let mut improved = false;
        for c in 0..angles.len() {
            for sign in [1.0, -1.0] {
                let mut trial = angles.clone();
                trial[c] += sign * step;
                evaluations += 1;
                let (xi, eta) = (from_angles(dim, &trial[..k]), from_angles(dim, &trial[k..]));
                if let Ok(s) = evaluate(field, f, &xi, &eta, tol) {
                    if s.second < best.second {
                        best = s;
                        angles = trial;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// Coordinate descent on the angles of `ξ` alone, with `η` kept on the
/// volume-preserving critical family. Moving `η` freely would bring back the
/// volumetric curvature, which can dominate by many orders of magnitude.
fn refine_isochoric(field: &dyn ScalarField, f: &SquareMatrix, g_iso: &SquareMatrix, cof: &SquareMatrix, start: Sample, tol: f64) -> Sample {
    let mut angles = to_angles(&start.xi);
    let mut best = start;
    let mut step = 0.2;
    let mut evaluations = 0;
    while step > 1e-7 && evaluations < 400 {
        let mut improved = false;
        for c in 0..angles.len() {
            for sign in [1.0, -1.0] {
                let mut trial = angles.clone();
                trial[c] += sign * step;
                evaluations += 1;
                let xi = from_angles(3, &trial);
                let Some(eta) = isochoric_eta(g_iso, cof, &xi) else { continue };
                if let Ok(s) = evaluate(field, f, &xi, &eta, tol) {
                    if s.second < best.second {
                        best = s;
                        angles = trial;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

fn first_min(samples: &[Sample]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in samples.iter().enumerate() {
        match best {
            Some(b) if samples[b].second <= s.second => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Legendre–Hadamard scan: minimum of `h″(0)` over unit `(ξ, η)` at `F`.
///
/// Directions are normalized Gaussian draws from a ChaCha stream seeded with
/// `config.seed`. All candidate directions are generated up front, evaluated in
/// parallel and reduced in index order, so the report does not depend on the
/// thread count. With `refine`, critical directions (zero first derivative)
/// are added and the best starting points are polished by coordinate descent;
/// in 3D the best volume-preserving critical directions are polished as well.
pub fn lh_scan(field: &dyn ScalarField, f: &SquareMatrix, n_directions: usize, refine_best: bool, config: &ScanConfig) -> Result<ConvexityReport> {
    let dim = f.dim();
    if dim != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: dim });
    }
    if f.det() <= 0.0 {
        return Err(Error::Orientation { det: f.det() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut candidates: Vec<(Vector, Vector)> = config.seed_directions.clone();
    for _ in 0..n_directions {
        let xi = random_unit(&mut rng, dim);
        let eta = random_unit(&mut rng, dim);
        candidates.push((xi, eta));
    }
    let mut xis = Vec::new();
    if refine_best && dim >= 2 {
        xis = structured_xis(dim);
        for _ in 0..config.critical_xi {
            xis.push(random_unit(&mut rng, dim));
        }
        // failures here only cost seeds
        if let Ok(c) = critical_directions(field, f, &xis, 8) {
            candidates.extend(c);
        }
    }

    let tol = config.tol;
    let results: Vec<Result<Sample>> = with_workers(config.workers, || {
        candidates.par_iter().map(|(xi, eta)| evaluate(field, f, xi, eta, tol)).collect()
    })?;
    let failures = results.iter().filter(|r| r.is_err()).count();
    let mut samples: Vec<Sample> = results.into_iter().filter_map(|r| r.ok()).collect();

    if refine_best && !samples.is_empty() {
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples[a].second.total_cmp(&samples[b].second).then(a.cmp(&b)));
        let starts: Vec<Sample> = order.iter().take(config.refine_starts).map(|&i| samples[i]).collect();
        let refined: Vec<Sample> =
            with_workers(config.workers, || starts.par_iter().map(|s| refine(field, f, *s, tol)).collect())?;
        samples.extend(refined);
    }
    if refine_best && dim == 3 {
        if let Ok((g_iso, cof)) = iso_gradient_and_cofactor(field, f) {
            let iso: Vec<Sample> = with_workers(config.workers, || {
                xis.par_iter()
                    .filter_map(|xi| {
                        let eta = isochoric_eta(&g_iso, &cof, xi)?;
                        evaluate(field, f, xi, &eta, tol).ok()
                    })
                    .collect()
            })?;
            let mut order: Vec<usize> = (0..iso.len()).collect();
            order.sort_by(|&a, &b| iso[a].second.total_cmp(&iso[b].second).then(a.cmp(&b)));
            let starts: Vec<Sample> = order.iter().take(config.refine_starts).map(|&i| iso[i]).collect();
            let refined: Vec<Sample> = with_workers(config.workers, || {
                starts.par_iter().map(|s| refine_isochoric(field, f, &g_iso, &cof, *s, tol)).collect()
            })?;
            samples.extend(refined);
        }
    }

    let mut report = ConvexityReport::new(format!("lh-scan: {}", field.label()));
    report.seed = Some(config.seed);
    match first_min(&samples) {
        Some(i) => {
            let s = samples[i];
            report.push(
                CheckVerdict::lower_bound("legendre-hadamard", s.second, Location::probe(f, &s.xi, &s.eta), s.tol)
                    .with_counts(samples.len(), failures),
            );
            report.set_metric("min_second_derivative", s.second);
        }
        None => {
            report.push(CheckVerdict::lower_bound("legendre-hadamard", 0.0, Location::Nowhere, tol).with_counts(0, failures));
        }
    }
    report.set_metric("directions", candidates.len() as f64);
    Ok(report)
}
