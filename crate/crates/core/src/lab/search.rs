use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{nelder_mead, NelderMeadOptions};
use super::probe::{concave_critical_point, line_derivatives, CriticalPointVerdict, RankOneProbe};
use super::scan::{from_angles, gradient_of, random_unit, to_angles, with_workers};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::tensor::{SquareMatrix, Vector};

/// Starting point for a seeded search. `f` must be diagonal.
#[derive(Clone, Copy, Debug)]
pub struct SearchStart {
    pub f: SquareMatrix,
    pub xi: Vector,
    pub eta: Vector,
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub n_seeds: usize,
    pub seed: u64,
    /// Box `[−b, b]` for the logarithms of the diagonal of `F`.
    pub log_bound: f64,
    /// Penalty continuation stops once `|h′(0)|` is below this.
    pub eps_grad: f64,
    /// Only accept certified probes with `h″(0)` at or below this value.
    pub target_curvature: Option<f64>,
    pub workers: Option<usize>,
    /// Seeds per parallel batch; the search stops after the first batch with
    /// an accepted probe, so results do not depend on the thread count.
    pub chunk: usize,
    pub evaluations_per_stage: usize,
    pub start: Option<SearchStart>,
    /// Spread of the random perturbation around `start`.
    pub start_spread: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            n_seeds: 200,
            seed: 7,
            log_bound: 12.0,
            eps_grad: 1e-6,
            target_curvature: None,
            workers: None,
            chunk: 8,
            evaluations_per_stage: 300,
            start: None,
            start_spread: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub probe: RankOneProbe,
    pub verdict: CriticalPointVerdict,
    pub certified: bool,
    pub seeds_used: usize,
    pub best_seed: usize,
    pub final_penalty: f64,
}

fn angle_count(dim: usize) -> usize {
    dim - 1
}

/// Parameters are `(log F₁₁, …, ξ angles, ζ angles)` with `η = Fᵀ ζ`, so a
/// unit `ζ` measures the direction relative to `F`.
struct Decoded {
    f: SquareMatrix,
    xi: Vector,
    eta: Vector,
    excess: f64,
}

fn decode(dim: usize, x: &[f64], bound: f64) -> Decoded {
    let k = angle_count(dim);
    let mut excess = 0.0;
    let logs: Vec<f64> = x[..dim]
        .iter()
        .map(|&a| {
            excess += (a.abs() - bound).max(0.0).powi(2);
            a.clamp(-bound, bound).exp()
        })
        .collect();
    let f = SquareMatrix::diag(&logs).expect("dimension checked");
    let xi = from_angles(dim, &x[dim..dim + k]);
    let zeta = from_angles(dim, &x[dim + k..dim + 2 * k]);
    Decoded { f, xi, eta: f.transpose().mul_vec(&zeta), excess }
}

fn encode(start: &SearchStart) -> Result<Vec<f64>> {
    let f = start.f;
    let dim = f.dim();
    let mut x = Vec::with_capacity(dim + 2 * angle_count(dim));
    for i in 0..dim {
        for j in 0..dim {
            if i != j && f[(i, j)] != 0.0 {
                return Err(Error::InvalidInput("search start must be diagonal".into()));
            }
        }
        if f[(i, i)] <= 0.0 {
            return Err(Error::InvalidInput("search start must have a positive diagonal".into()));
        }
        x.push(f[(i, i)].ln());
    }
    x.extend(to_angles(&start.xi));
    x.extend(to_angles(&f.inverse_transpose()?.mul_vec(&start.eta)));
    Ok(x)
}

fn probe_for(f: SquareMatrix, xi: Vector, eta: Vector) -> Result<RankOneProbe> {
    let r = RankOneProbe::new(f, xi, eta, (-1e-300, 1e-300))?.admissible_radius();
    let r = (0.5 * r).min(0.5);
    RankOneProbe::new(f, xi, eta, (-r, r))
}

/// `η` moved onto `{η : ⟨∇ω(F), ξ⊗η⟩ = 0}` along `Fᵀ`, keeping `‖F^{-T}η‖`.
fn project_to_critical(field: &dyn ScalarField, f: &SquareMatrix, xi: &Vector, eta: &Vector) -> Result<Vector> {
    let u = f.mul_vec(&gradient_of(field, f)?.transpose().mul_vec(xi));
    let zeta = f.inverse_transpose()?.mul_vec(eta);
    let uu = u.dot(&u);
    let projected = if uu > 0.0 { zeta - u * (zeta.dot(&u) / uu) } else { zeta };
    let n = projected.norm();
    if n == 0.0 {
        return Err(Error::DegenerateDirection("projected direction vanished".into()));
    }
    Ok(f.transpose().mul_vec(&(projected * (zeta.norm() / n))))
}

struct SeedResult {
    outcome: Option<(RankOneProbe, CriticalPointVerdict)>,
    penalty: f64,
}

fn run_seed(field: &dyn ScalarField, config: &SearchConfig, index: usize) -> SeedResult {
    let dim = field.dim();
    let k = angle_count(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let bound = config.log_bound;

    let x0: Vec<f64> = match config.start.as_ref().map(encode) {
        Some(Ok(x)) => x
            .iter()
            .map(|v| if index == 0 { *v } else { v + config.start_spread * rng.random_range(-1.0..1.0) })
            .collect(),
        _ => {
            let mut x: Vec<f64> = (0..dim).map(|_| rng.random_range(-bound..bound)).collect();
            x.extend(to_angles(&random_unit(&mut rng, dim)));
            x.extend(to_angles(&random_unit(&mut rng, dim)));
            x
        }
    };
    debug_assert_eq!(x0.len(), dim + 2 * k);

    let evaluate = |x: &[f64], rho: f64| -> f64 {
        let d = decode(dim, x, bound);
        let Ok(probe) = probe_for(d.f, d.xi, d.eta) else { return f64::INFINITY };
        match line_derivatives(field, &probe) {
            Ok(ld) => {
                let h1 = ld.best_first();
                ld.second + rho * h1 * h1 + 1e3 * d.excess
            }
            Err(_) => f64::INFINITY,
        }
    };

    let mut x = x0;
    let mut rho = 1e2;
    let opts = NelderMeadOptions {
        max_evaluations: config.evaluations_per_stage,
        initial_step: 0.3,
        ..NelderMeadOptions::default()
    };
    loop {
        let m = nelder_mead(|p| evaluate(p, rho), &x, opts);
        x = m.x;
        let d = decode(dim, &x, bound);
        let first = probe_for(d.f, d.xi, d.eta)
            .and_then(|p| line_derivatives(field, &p))
            .map(|ld| ld.best_first().abs())
            .unwrap_or(f64::INFINITY);
        if first <= config.eps_grad || rho >= 1e10 {
            break;
        }
        rho *= 10.0;
    }

    let d = decode(dim, &x, bound);
    let outcome = project_to_critical(field, &d.f, &d.xi, &d.eta)
        .and_then(|eta| probe_for(d.f, d.xi, eta))
        .and_then(|p| concave_critical_point(field, &p).map(|v| (p, v)))
        .ok();
    SeedResult { outcome, penalty: rho }
}

fn accepted(v: &CriticalPointVerdict, target: Option<f64>) -> bool {
    v.is_counterexample && target.is_none_or(|t| v.second <= t)
}

/// Penalty search for a concave critical point: minimizes
/// `h″(0) + ρ h′(0)²` by Nelder–Mead from random seeds over log-diagonal `F`
/// and sphere angles, raising `ρ` tenfold from `10²` until `|h′(0)| ≤ ε`. The
/// final `η` is projected exactly onto the critical set and the probe is
/// certified with [`concave_critical_point`].
pub fn search_violation(field: &dyn ScalarField, config: &SearchConfig) -> Result<SearchOutcome> {
    let dim = field.dim();
    if !(2..=3).contains(&dim) {
        return Err(Error::InvalidInput(format!("search needs dimension 2 or 3, got {dim}")));
    }
    if config.n_seeds == 0 {
        return Err(Error::InvalidInput("need at least one seed".into()));
    }
    let chunk = config.chunk.max(1);
    let mut best: Option<(usize, RankOneProbe, CriticalPointVerdict, f64)> = None;
    let mut seeds_used = 0;
    let mut start = 0;
    while start < config.n_seeds {
        let end = (start + chunk).min(config.n_seeds);
        let results: Vec<SeedResult> =
            with_workers(config.workers, || (start..end).into_par_iter().map(|i| run_seed(field, config, i)).collect())?;
        seeds_used = end;
        for (offset, r) in results.into_iter().enumerate() {
            let Some((probe, verdict)) = r.outcome else { continue };
            let rank = |v: &CriticalPointVerdict| (!accepted(v, config.target_curvature), v.second);
            let better = match &best {
                None => true,
                Some((_, _, b, _)) => {
                    let (ra, rb) = (rank(&verdict), rank(b));
                    ra.0 < rb.0 || (ra.0 == rb.0 && ra.1 < rb.1)
                }
            };
            if better {
                best = Some((start + offset, probe, verdict, r.penalty));
            }
        }
        if best.as_ref().is_some_and(|b| accepted(&b.2, config.target_curvature)) {
            break;
        }
        start = end;
    }
    let (best_seed, probe, verdict, final_penalty) =
        best.ok_or_else(|| Error::NonFinite("no seed produced an admissible probe".into()))?;
    Ok(SearchOutcome {
        probe,
        certified: accepted(&verdict, config.target_curvature),
        verdict,
        seeds_used,
        best_seed,
        final_penalty,
    })
}
