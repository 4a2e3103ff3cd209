//! Parsers for the textual matrix, energy, profile and grid specifications.

use elliptika::energy::{
    compose, det_devlog_squared, exp_hencky_energy, exp_hencky_isochoric, hencky_energy, ihat_energy,
    EnergyDefinition, ScalarProfile,
};
use elliptika::lab::{linear_grid, log_grid};
use elliptika::strain::StrainMeasure;
use elliptika::tensor::SquareMatrix;
use elliptika::ScalarField;

use crate::error::{CliError, CliResult};

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// A real literal; `eN` stands for `e^N` and `e` alone for Euler's number.
pub fn parse_number(s: &str) -> CliResult<f64> {
    let t = s.trim();
    let (sign, body) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, t.strip_prefix('+').unwrap_or(t)),
    };
    let value = if body == "e" {
        std::f64::consts::E
    } else if let Some(exp) = body.strip_prefix('e') {
        exp.parse::<f64>().map_err(|_| usage(format!("bad number '{s}'")))?.exp()
    } else {
        body.parse::<f64>().map_err(|_| usage(format!("bad number '{s}'")))?
    };
    if value.is_finite() {
        Ok(sign * value)
    } else {
        Err(usage(format!("number '{s}' is not finite")))
    }
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(parse_number).collect()
}

/// `id`, `id:N`, `diag:a,b,c` or rows `a,b;c,d`.
pub fn parse_matrix(s: &str, default_dim: usize) -> CliResult<SquareMatrix> {
    let s = s.trim();
    if s == "id" {
        return Ok(SquareMatrix::identity(default_dim));
    }
    if let Some(n) = s.strip_prefix("id:") {
        let n: usize = n.parse().map_err(|_| usage(format!("bad dimension in '{s}'")))?;
        check_dim(n)?;
        return Ok(SquareMatrix::identity(n));
    }
    if let Some(d) = s.strip_prefix("diag:") {
        let v = parse_list(d)?;
        check_dim(v.len())?;
        return Ok(SquareMatrix::diag(&v)?);
    }
    let rows: Vec<Vec<f64>> = s.split(';').map(parse_list).collect::<CliResult<_>>()?;
    check_dim(rows.len())?;
    Ok(SquareMatrix::from_rows(&rows)?)
}

fn check_dim(n: usize) -> CliResult<()> {
    if (2..=3).contains(&n) {
        Ok(())
    } else {
        Err(usage(format!("matrices must be 2x2 or 3x3, got dimension {n}")))
    }
}

/// Material parameters shared by the energy families.
#[derive(Clone, Copy, Debug)]
pub struct Moduli {
    pub mu: f64,
    pub kappa: f64,
    pub k: f64,
    pub khat: f64,
}

/// Splits a trailing `-2d`/`-3d` from a family name.
fn split_dim(name: &str) -> (&str, Option<usize>) {
    for (suffix, d) in [("-2d", 2), ("-3d", 3)] {
        if let Some(base) = name.strip_suffix(suffix) {
            return (base, Some(d));
        }
    }
    (name, None)
}

pub const ENERGY_FAMILIES: &str =
    "hencky, exp-hencky, exp-hencky-iso, ihat, det-devlog, omega-log, omega-devlog, omega-svk, omega-log-c, frobenius, const:<c>";

/// An energy or strain measure by family name, with an optional `-2d`/`-3d`
/// suffix overriding `dim`.
pub fn parse_energy(spec: &str, dim: usize, m: &Moduli) -> CliResult<Box<dyn ScalarField>> {
    let (name, suffix) = split_dim(spec.trim());
    let dim = suffix.unwrap_or(dim);
    check_dim(dim)?;
    let only_3d = |e: EnergyDefinition| -> CliResult<Box<dyn ScalarField>> {
        if dim == 3 {
            Ok(Box::new(e))
        } else {
            Err(usage(format!("'{name}' is defined in dimension 3 only")))
        }
    };
    if let Some(c) = name.strip_prefix("const:") {
        let c = parse_number(c)?;
        return Ok(Box::new(EnergyDefinition::closed_form(format!("const({c})"), dim, move |_| Ok(c))));
    }
    Ok(match name {
        "hencky" => Box::new(hencky_energy(m.mu, m.kappa, dim)?),
        "exp-hencky" => Box::new(exp_hencky_energy(m.mu, m.kappa, m.k, m.khat, dim)?),
        "exp-hencky-iso" => Box::new(exp_hencky_isochoric(m.mu, m.k, dim)?),
        "ihat" => return only_3d(ihat_energy()),
        "det-devlog" => return only_3d(det_devlog_squared()),
        "omega-log" => Box::new(StrainMeasure::log(dim)),
        "omega-devlog" => Box::new(StrainMeasure::devlog(dim)),
        "omega-svk" => Box::new(StrainMeasure::svk(dim)),
        "omega-log-c" => Box::new(StrainMeasure::log_cauchy_green(dim)),
        "frobenius" => Box::new(EnergyDefinition::frobenius_squared(dim)),
        "devlog-exp" => Box::new(compose(&ScalarProfile::exponential(m.mu, m.k), &StrainMeasure::devlog(dim))),
        _ => return Err(usage(format!("unknown energy '{spec}' (expected one of {ENERGY_FAMILIES})"))),
    })
}

pub const PROFILE_FAMILIES: &str = "exp, exp8, exp-rate:<r>, identity, quadratic, neg, sin, const:<c>";

pub fn parse_profile(spec: &str, m: &Moduli) -> CliResult<ScalarProfile> {
    let s = spec.trim();
    if let Some(r) = s.strip_prefix("exp-rate:") {
        return Ok(ScalarProfile::exp_rate(parse_number(r)?));
    }
    if let Some(c) = s.strip_prefix("const:") {
        return Ok(ScalarProfile::constant(parse_number(c)?));
    }
    Ok(match s {
        "exp" => ScalarProfile::exponential(m.mu, m.k),
        "exp8" => ScalarProfile::convexifier_1d(),
        "identity" | "linear" => ScalarProfile::identity(),
        "quadratic" => ScalarProfile::quadratic(),
        "neg" => ScalarProfile::linear(-1.0),
        "sin" => ScalarProfile::new("sin", f64::sin).with_first(f64::cos).with_second(|x| -x.sin()),
        _ => return Err(usage(format!("unknown profile '{spec}' (expected one of {PROFILE_FAMILIES})"))),
    })
}

/// `lo:hi:n` (uniform) or `log:lo:hi:n` (geometric).
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let (geometric, body) = match spec.strip_prefix("log:") {
        Some(rest) => (true, rest),
        None => (false, spec),
    };
    let parts: Vec<&str> = body.split(':').collect();
    if parts.len() != 3 {
        return Err(usage(format!("grid '{spec}' must look like lo:hi:n or log:lo:hi:n")));
    }
    let (lo, hi) = (parse_number(parts[0])?, parse_number(parts[1])?);
    let n: usize = parts[2].parse().map_err(|_| usage(format!("bad point count in grid '{spec}'")))?;
    if n < 2 || lo >= hi || (geometric && lo <= 0.0) {
        return Err(usage(format!("grid '{spec}' needs lo < hi, n ≥ 2 and lo > 0 for log grids")));
    }
    Ok(if geometric { log_grid(lo, hi, n) } else { linear_grid(lo, hi, n) })
}
