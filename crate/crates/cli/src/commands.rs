use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use clap::Parser;
use elliptika::cases::{case_by_id, case_voliso_3d, CaseId};
use elliptika::lab::{
    baker_ericksen_check, baker_ericksen_ordering_check, convexify_1d_check, criterion_2d, line_profile, lh_scan,
    monotonicity_necessity_check, random_deformations, search_violation, sendova_walton_check, CheckVerdict,
    ConvexityReport, Location, RankOneProbe, ScanConfig, SearchConfig, PROFILE_TOLERANCE,
};
use elliptika::tensor::{SquareMatrix, Vector};
use elliptika::ScalarField;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};
use crate::manifest::{value_mismatches, RunManifest};
use crate::reproduce::{reproduce, Metric, Reproduction};
use crate::spec::{parse_energy, parse_grid, parse_matrix, parse_profile};
use crate::{CheckId, Cli, Command, GlobalArgs, ModuliArgs, Outcome};

pub const SCAN_TOLERANCE: f64 = 1e-8;

pub fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Reproduce { case, alpha } => cmd_reproduce(case, *alpha),
        Command::Profile { case, probe, energy, t_min, t_max, n, moduli } => {
            cmd_profile(case.as_deref(), probe.as_deref(), energy.as_deref(), (*t_min, *t_max), *n, moduli)
        }
        Command::Scan { energy, f, random_f, dim, directions, no_refine, moduli } => {
            cmd_scan(g, energy, f, *random_f, *dim, *directions, !no_refine, moduli)
        }
        Command::Check { check, subject, grid, samples, ordering, dim, moduli } => {
            cmd_check(g, *check, subject, grid.as_deref(), *samples, *ordering, *dim, moduli)
        }
        Command::Search { energy, dim, seeds, target, log_bound, moduli } => {
            cmd_search(g, energy, *dim, *seeds, *target, *log_bound, moduli)
        }
        Command::Replay { file } => cmd_replay(file),
    }
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn moduli_json(m: &ModuliArgs) -> Value {
    json!({ "mu": m.mu, "kappa": m.kappa, "k": m.k, "khat": m.khat })
}

fn cmd_reproduce(case: &str, alpha: f64) -> CliResult<Outcome> {
    let id: CaseId = case.parse()?;
    let rep = reproduce(id, alpha)?;
    let mut values = BTreeMap::new();
    let mut tolerances = BTreeMap::new();
    for r in &rep.rows {
        values.insert(r.quantity.clone(), r.computed);
        if let (Some(t), false) = (r.tolerance, r.metric == Metric::Info) {
            tolerances.insert(r.quantity.clone(), t);
        }
    }
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                r.quantity.clone(),
                sci(r.expected),
                sci(r.computed),
                sci(r.error),
                format!("{:?}", r.metric).to_lowercase(),
                r.tolerance.map(sci).unwrap_or_default(),
                r.pass.map(|p| p.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let csv = csv_table(&["quantity", "expected", "computed", "error", "metric", "tolerance", "pass"], &rows)?;
    let mut parameters = Map::new();
    parameters.insert("case".into(), json!(id.name()));
    if rep.alpha.is_some() {
        parameters.insert("alpha".into(), json!(alpha));
    }
    Ok(Outcome {
        command: "reproduce",
        parameters,
        tolerances,
        verdict: if rep.passed { "pass" } else { "fail" }.into(),
        values,
        text: reproduction_text(&rep),
        body: serde_json::to_value(&rep)?,
        csv,
        code: if rep.passed { 0 } else { 1 },
    })
}

fn reproduction_text(rep: &Reproduction) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "case {}", rep.case);
    let _ = writeln!(s, "{:<40} {:>24} {:>24} {:>10} {:>10}  result", "quantity", "expected", "computed", "error", "tolerance");
    for r in &rep.rows {
        let tol = r.tolerance.map(|t| format!("{t:.1e}")).unwrap_or_else(|| "-".into());
        let status = match r.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "info",
        };
        let _ = writeln!(
            s,
            "{:<40} {:>24.16e} {:>24.16e} {:>10.3e} {:>10}  {status}",
            r.quantity, r.expected, r.computed, r.error, tol
        );
    }
    let _ = writeln!(s, "{}", if rep.passed { "PASS" } else { "FAIL" });
    s
}

#[derive(Deserialize)]
struct ProbeFile {
    f: SquareMatrix,
    xi: Vector,
    eta: Vector,
}

fn read_to_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn cmd_profile(
    case: Option<&str>,
    probe_file: Option<&Path>,
    energy: Option<&str>,
    (t_min, t_max): (Option<f64>, Option<f64>),
    n: usize,
    moduli: &ModuliArgs,
) -> CliResult<Outcome> {
    if n < 3 {
        return Err(CliError::Usage(format!("profile needs at least 3 samples, got {n}")));
    }
    let m = moduli.moduli();
    let (base, field, source): (RankOneProbe, Box<dyn ScalarField>, Value) = match (case, probe_file) {
        (Some(c), None) => {
            let id: CaseId = c.parse()?;
            let named = match id {
                CaseId::Voliso3d => case_voliso_3d(0.0)?,
                _ => case_by_id(id)?,
            };
            let field: Box<dyn ScalarField> = match energy {
                Some(e) => parse_energy(e, named.probe.dim(), &m)?,
                None => Box::new(named.measure.clone()),
            };
            (named.probe, field, json!(id.name()))
        }
        (None, Some(path)) => {
            let p: ProbeFile = serde_json::from_str(&read_to_string(path)?)
                .map_err(|e| CliError::Usage(format!("probe file {}: {e}", path.display())))?;
            let energy = energy.ok_or_else(|| CliError::Usage("--probe needs --energy".into()))?;
            let field = parse_energy(energy, p.f.dim(), &m)?;
            let probe = RankOneProbe::new(p.f, p.xi, p.eta, (-1e-300, 1e-300))?;
            (probe, field, json!(path.display().to_string()))
        }
        _ => return Err(CliError::Usage("profile needs a case or --probe FILE".into())),
    };
    let (lo0, hi0) = if case.is_some() { base.interval() } else { (-0.25, 0.25) };
    let interval = (t_min.unwrap_or(lo0), t_max.unwrap_or(hi0));
    let probe = base.with_interval(interval)?;
    let prof = line_profile(&*field, &probe, n)?;
    let (t_arg, h_max) = prof.argmax();

    let rows: Vec<Vec<String>> = prof.samples.iter().map(|(t, h)| vec![sci(*t), sci(*h)]).collect();
    let csv = csv_table(&["t", "h"], &rows)?;
    let d = &prof.derivatives;
    let values = BTreeMap::from([
        ("h(0)".to_string(), d.h0),
        ("h'(0)".to_string(), d.best_first()),
        ("h''(0)".to_string(), d.second),
        ("argmax_t".to_string(), t_arg),
        ("max_h".to_string(), h_max),
    ]);
    let samples: Vec<Value> = prof.samples.iter().map(|(t, h)| json!({ "t": t, "h": h })).collect();
    let body = json!({
        "energy": field.label(),
        "probe": probe,
        "derivatives": d,
        "argmax": { "t": t_arg, "h": h_max },
        "samples": samples,
    });
    let parameters = object(json!({
        "source": source,
        "energy": field.label(),
        "t_min": interval.0,
        "t_max": interval.1,
        "n": n,
        "moduli": moduli_json(moduli),
    }));
    Ok(Outcome {
        command: "profile",
        parameters,
        tolerances: BTreeMap::new(),
        verdict: "ok".into(),
        values,
        body,
        text: csv.clone(),
        csv,
        code: 0,
    })
}

fn verdict_rows(report: &ConvexityReport) -> Vec<Vec<String>> {
    report
        .verdicts
        .iter()
        .map(|v| {
            vec![
                v.check.clone(),
                v.satisfied.to_string(),
                sci(v.worst_value),
                sci(v.tolerance),
                serde_json::to_string(&v.worst_location).unwrap_or_default(),
                v.evaluated.to_string(),
                v.failures.to_string(),
            ]
        })
        .collect()
}

fn report_csv(report: &ConvexityReport) -> CliResult<String> {
    csv_table(&["check", "satisfied", "worst_value", "tolerance", "location", "evaluated", "failures"], &verdict_rows(report))
}

fn location_text(l: &Location) -> String {
    match l {
        Location::Probe { f, xi, eta } => format!("F = {f:?}, xi = {xi:?}, eta = {eta:?}"),
        Location::Grid { point } => format!("at {point:?}"),
        Location::Nowhere => "nowhere".into(),
    }
}

fn report_text(report: &ConvexityReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", report.subject);
    if let Some(seed) = report.seed {
        let _ = writeln!(s, "seed {seed}");
    }
    for v in &report.verdicts {
        let _ = writeln!(
            s,
            "{}: {} worst {:.10e} (tolerance {:.3e}, {} evaluated, {} errors) {}",
            v.check,
            if v.satisfied { "PASS" } else { "FAIL" },
            v.worst_value,
            v.tolerance,
            v.evaluated,
            v.failures,
            location_text(&v.worst_location)
        );
    }
    for (k, v) in &report.metrics {
        let _ = writeln!(s, "{k} = {v:.10e}");
    }
    s
}

fn report_values(report: &ConvexityReport) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let mut values = report.metrics.clone();
    let mut tolerances = BTreeMap::new();
    for v in &report.verdicts {
        values.insert(format!("{}.worst_value", v.check), v.worst_value);
        if let Some(x) = v.worst_location.grid_coordinate() {
            values.insert(format!("{}.location", v.check), x);
        }
        tolerances.insert(v.check.clone(), v.tolerance);
    }
    values.retain(|_, v| v.is_finite());
    (values, tolerances)
}

/// Worst verdict over several scans: the most negative violation if any
/// scan failed, else the smallest worst value.
fn merge_scans(label: &str, seed: u64, reports: &[ConvexityReport]) -> ConvexityReport {
    let key = |r: &ConvexityReport| r.verdicts.first().map(|v| (v.satisfied, v.worst_value));
    let mut worst: Option<(usize, bool, f64)> = None;
    for (i, r) in reports.iter().enumerate() {
        if let Some((sat, w)) = key(r) {
            let better = match worst {
                None => true,
                Some((_, bsat, bw)) => (!sat && bsat) || (sat == bsat && w < bw),
            };
            if better {
                worst = Some((i, sat, w));
            }
        }
    }
    let mut merged = ConvexityReport::new(format!("lh-scan over {} deformations: {label}", reports.len()));
    merged.seed = Some(seed);
    let evaluated = reports.iter().flat_map(|r| r.verdicts.first()).map(|v| v.evaluated).sum();
    let failures = reports.iter().flat_map(|r| r.verdicts.first()).map(|v| v.failures).sum();
    let violations = reports.iter().filter(|r| !r.satisfied()).count();
    match worst {
        Some((i, _, _)) => {
            let v = reports[i].verdicts[0].clone();
            merged.verdicts.push(CheckVerdict { evaluated, failures, ..v });
            merged.metrics.insert("worst_index".into(), i as f64);
            if let Some(m) = reports[i].metric("min_second_derivative") {
                merged.metrics.insert("min_second_derivative".into(), m);
            }
        }
        None => merged.verdicts.push(
            CheckVerdict::lower_bound("legendre-hadamard", 0.0, Location::Nowhere, SCAN_TOLERANCE).with_counts(0, failures),
        ),
    }
    merged.metrics.insert("deformations".into(), reports.len() as f64);
    merged.metrics.insert("violations".into(), violations as f64);
    merged
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    g: &GlobalArgs,
    energy: &str,
    f_spec: &str,
    random_f: Option<usize>,
    dim: usize,
    directions: usize,
    refine: bool,
    moduli: &ModuliArgs,
) -> CliResult<Outcome> {
    let field = parse_energy(energy, dim, &moduli.moduli())?;
    let dim = field.dim();
    let tol = g.tol.unwrap_or(SCAN_TOLERANCE);
    let config = ScanConfig { seed: g.seed, tol, workers: g.workers, ..ScanConfig::default() };
    let report = match random_f {
        Some(0) => return Err(CliError::Usage("--random-F needs at least one deformation".into())),
        Some(count) => {
            let mut reports = Vec::with_capacity(count);
            for (i, f) in random_deformations(g.seed, count, dim).iter().enumerate() {
                let c = ScanConfig { seed: g.seed.wrapping_add(i as u64), ..config.clone() };
                reports.push(lh_scan(&*field, f, directions, refine, &c)?);
            }
            merge_scans(&field.label(), g.seed, &reports)
        }
        None => {
            let f = parse_matrix(f_spec, dim)?;
            lh_scan(&*field, &f, directions, refine, &config)?
        }
    };
    let (values, mut tolerances) = report_values(&report);
    tolerances.insert("relative_curvature".into(), tol);
    let violated = !report.satisfied();
    let parameters = object(json!({
        "energy": field.label(),
        "F": if random_f.is_some() { Value::Null } else { json!(f_spec) },
        "random_F": random_f,
        "dim": dim,
        "directions": directions,
        "refine": refine,
        "moduli": moduli_json(moduli),
    }));
    Ok(Outcome {
        command: "scan",
        parameters,
        tolerances,
        verdict: if violated { "violation" } else { "no-violation" }.into(),
        values,
        text: report_text(&report),
        csv: report_csv(&report)?,
        body: serde_json::to_value(&report)?,
        code: if violated { 1 } else { 0 },
    })
}

fn default_grid(check: CheckId) -> &'static str {
    match check {
        CheckId::Criterion2d => "0:20:2001",
        CheckId::Sw => "0.05:5:200",
        CheckId::Conv1d => "log:0.01:100:400",
        CheckId::Mono => "0:4:81",
        CheckId::Be => "",
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    g: &GlobalArgs,
    check: CheckId,
    subject: &str,
    grid: Option<&str>,
    samples: usize,
    ordering: bool,
    dim: usize,
    moduli: &ModuliArgs,
) -> CliResult<Outcome> {
    let m = moduli.moduli();
    let tol = g.tol.unwrap_or(PROFILE_TOLERANCE);
    let mut parameters = object(json!({ "subject": subject, "moduli": moduli_json(moduli) }));
    let report = if check == CheckId::Be {
        let field = parse_energy(subject, dim, &m)?;
        parameters.insert("samples".into(), json!(samples));
        parameters.insert("ordering".into(), json!(ordering));
        let mut report = baker_ericksen_check(&*field, samples)?;
        if ordering {
            let extra = baker_ericksen_ordering_check(&*field, samples)?;
            report.verdicts.extend(extra.verdicts);
            report.metrics.extend(extra.metrics);
        }
        report
    } else {
        let psi = parse_profile(subject, &m)?;
        let spec = grid.unwrap_or(default_grid(check));
        let points = parse_grid(spec)?;
        parameters.insert("grid".into(), json!(spec));
        match check {
            CheckId::Criterion2d => criterion_2d(&psi, &points, tol)?,
            CheckId::Sw => sendova_walton_check(&psi, &points, tol)?,
            CheckId::Conv1d => convexify_1d_check(&psi, &points, tol)?,
            CheckId::Mono => monotonicity_necessity_check(&psi, &points, tol)?,
            CheckId::Be => unreachable!("handled above"),
        }
    };
    parameters.insert("check".into(), json!(format!("{check:?}").to_lowercase()));
    let (values, tolerances) = report_values(&report);
    let ok = report.satisfied();
    Ok(Outcome {
        command: "check",
        parameters,
        tolerances,
        verdict: if ok { "pass" } else { "fail" }.into(),
        values,
        text: report_text(&report),
        csv: report_csv(&report)?,
        body: serde_json::to_value(&report)?,
        code: if ok { 0 } else { 1 },
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_search(
    g: &GlobalArgs,
    energy: &str,
    dim: usize,
    seeds: usize,
    target: Option<f64>,
    log_bound: Option<f64>,
    moduli: &ModuliArgs,
) -> CliResult<Outcome> {
    let field = parse_energy(energy, dim, &moduli.moduli())?;
    let defaults = SearchConfig::default();
    let config = SearchConfig {
        n_seeds: seeds,
        seed: g.seed,
        log_bound: log_bound.unwrap_or(defaults.log_bound),
        eps_grad: g.tol.unwrap_or(defaults.eps_grad),
        target_curvature: target,
        workers: g.workers,
        ..defaults
    };
    let out = search_violation(&*field, &config)?;
    let v = &out.verdict;
    let mut values = BTreeMap::from([
        ("h(0)".to_string(), v.derivatives.h0),
        ("h'(0)".to_string(), v.first),
        ("h''(0)".to_string(), v.second),
        ("seeds_used".to_string(), out.seeds_used as f64),
        ("best_seed".to_string(), out.best_seed as f64),
        ("final_penalty".to_string(), out.final_penalty),
    ]);
    values.retain(|_, x| x.is_finite());
    let tolerances = BTreeMap::from([
        ("eps_grad".to_string(), config.eps_grad),
        ("tol_grad".to_string(), v.tol_grad),
        ("tol_curv".to_string(), v.tol_curv),
    ]);
    let mut text = String::new();
    let _ = writeln!(text, "search {} (dim {}, seed {}, {} seeds used)", field.label(), field.dim(), g.seed, out.seeds_used);
    let _ = writeln!(text, "{}", if out.certified { "certified concave critical point" } else { "no certified probe" });
    let _ = writeln!(text, "h'(0)  = {:+.10e} (tolerance {:.3e})", v.first, v.tol_grad);
    let _ = writeln!(text, "h''(0) = {:+.10e} (tolerance {:.3e})", v.second, v.tol_curv);
    let _ = writeln!(text, "{}", location_text(&Location::from_probe(&out.probe)));
    let rows: Vec<Vec<String>> = values.iter().map(|(k, x)| vec![k.clone(), sci(*x)]).collect();
    let parameters = object(json!({
        "energy": field.label(),
        "dim": field.dim(),
        "seeds": seeds,
        "target": target,
        "log_bound": config.log_bound,
        "moduli": moduli_json(moduli),
    }));
    Ok(Outcome {
        command: "search",
        parameters,
        tolerances,
        verdict: if out.certified { "certified" } else { "uncertified" }.into(),
        values,
        text,
        csv: csv_table(&["quantity", "value"], &rows)?,
        body: json!({ "outcome": out }),
        code: if out.certified { 0 } else { 1 },
    })
}

fn cmd_replay(file: &Path) -> CliResult<Outcome> {
    let stored = RunManifest::from_json(&read_to_string(file)?)?;
    if stored.command == "replay" {
        return Err(CliError::Usage("cannot replay a replay".into()));
    }
    let mut args = vec!["elliptika".to_string()];
    args.extend(stored.args.iter().cloned());
    args.extend(["--seed".to_string(), stored.seed.to_string()]);
    let cli = Cli::try_parse_from(&args).map_err(|e| CliError::Usage(format!("stored arguments: {e}")))?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(CliError::Usage("cannot replay a replay".into()));
    }
    let replayed = dispatch(&cli)?;
    let mismatched = value_mismatches(&stored.values, &replayed.values);
    let verdict_match = stored.verdict == replayed.verdict;
    let reproduced = verdict_match && mismatched.is_empty();

    let mut text = String::new();
    let _ = writeln!(text, "replay {} (seed {})", stored.command, stored.seed);
    let _ = writeln!(text, "verdict: stored {}, replayed {}", stored.verdict, replayed.verdict);
    for k in &mismatched {
        let _ = writeln!(text, "value {k}: stored {:?}, replayed {:?}", stored.values.get(k), replayed.values.get(k));
    }
    let _ = writeln!(text, "{}", if reproduced { "REPRODUCED" } else { "DIVERGED" });
    let rows: Vec<Vec<String>> = mismatched.iter().map(|k| vec![k.clone()]).collect();
    Ok(Outcome {
        command: "replay",
        parameters: object(json!({ "file": file.display().to_string(), "replayed_command": stored.command })),
        tolerances: BTreeMap::new(),
        verdict: if reproduced { "reproduced" } else { "diverged" }.into(),
        values: BTreeMap::from([("mismatched_values".to_string(), mismatched.len() as f64)]),
        body: json!({
            "command": stored.command,
            "seed": stored.seed,
            "stored_verdict": stored.verdict,
            "replayed_verdict": replayed.verdict,
            "verdict_match": verdict_match,
            "mismatched_values": mismatched,
            "reproduced": reproduced,
        }),
        text,
        csv: csv_table(&["mismatched_value"], &rows)?,
        code: if reproduced { 0 } else { 1 },
    })
}
