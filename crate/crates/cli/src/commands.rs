use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use translab::analysis::{blowdown, weak_gradient_audit, BlowdownWindow};
use translab::barriers::{scan_r0, ScanOperator};
use translab::geometry::{shape_report, Direction, Surface};
use translab::grid::write_grid_file;
use translab::report::{inputs_hash, write_audit_csv, AuditRow};
use translab::solver::{
    newton_solve, q_subsolution, q_subsolution_with_margin, residual, SolveReport, TranslatorProblem,
};
use translab::{Error, Result};

use crate::audits::{run_audit, AuditInput, AuditSpec};
use crate::config::{DomainSpec, ExperimentConfig};

/// Audit factor: pointwise audits allow `AUDIT_FACTOR * h^2`.
const AUDIT_FACTOR: f64 = 10.0;
/// `Q(u^2)` is audited at nodes at least this far inside the domain.
const SUBSOLUTION_MARGIN: f64 = 0.5;

/// Exit status of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    NumericalFailure,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: String,
    tolerances: BTreeMap<String, f64>,
    outputs: Vec<String>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_manifest(
    dir: &Path,
    command: &str,
    hashed: &[u8],
    tolerances: BTreeMap<String, f64>,
    outputs: &[&str],
) -> Result<()> {
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: inputs_hash(hashed),
        tolerances,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    write_json(&dir.join("manifest.json"), &m)
}

fn write_rows(path: &Path, rows: &[AuditRow]) -> Result<()> {
    write_audit_csv(rows, BufWriter::new(File::create(path)?))
}

pub fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Solve, then write the solution, the report and the standard audits.
pub fn solve(cfg: &ExperimentConfig, out: &Path) -> Result<Status> {
    let data = cfg.field()?;
    let h = data.grid().h;
    let problem = TranslatorProblem::new(data);
    let report = newton_solve(&problem, cfg.solver)?;
    write_grid_file(&report.solution, &out.join("solution.grid"))?;
    write_json(&out.join("solve_report.json"), &report)?;
    let hashed = cfg.canonical_bytes();
    let rows = standard_audits(&report, h, &hashed)?;
    write_rows(&out.join("audit.csv"), &rows)?;
    let mut tol = BTreeMap::new();
    tol.insert("newton_tol".into(), cfg.solver.tol);
    tol.insert("linear_tol".into(), cfg.solver.linear_tol);
    tol.insert("audit_h2_factor".into(), AUDIT_FACTOR);
    tol.insert("subsolution_margin".into(), SUBSOLUTION_MARGIN);
    tol.insert("audit_tolerance".into(), AUDIT_FACTOR * h * h);
    write_manifest(out, "solve", &hashed, tol, &["solution.grid", "solve_report.json", "audit.csv"])?;
    Ok(if report.converged { Status::Success } else { Status::NumericalFailure })
}

/// Residual, weak gradient principle and the sign of `Q(u^2)`.
fn standard_audits(report: &SolveReport, h: f64, hashed: &[u8]) -> Result<Vec<AuditRow>> {
    let tol = AUDIT_FACTOR * h * h;
    let mut rows =
        vec![AuditRow::new("residual", hashed, report.final_residual(), report.settings.tol, report.converged)];
    rows.push(match weak_gradient_audit(report) {
        Ok(a) => AuditRow::new("weak-gradient", hashed, a.excess, a.tolerance, a.pass),
        Err(_) => AuditRow::new("weak-gradient", hashed, f64::NAN, tol, false),
    });
    let q = match q_subsolution_with_margin(&report.solution, SUBSOLUTION_MARGIN) {
        Err(Error::InsufficientData(_)) => q_subsolution(&report.solution)?,
        r => r?,
    };
    rows.push(AuditRow::new("q-subsolution", hashed, q.min_value, -tol, q.min_value >= -tol));
    Ok(rows)
}

/// Surface input for audits: a solution grid file or the configured data.
pub fn audit_input(cfg: Option<&ExperimentConfig>, solution: Option<&Path>) -> Result<AuditInput> {
    match (solution, cfg) {
        (Some(p), _) => AuditInput::new(Some(translab::grid::read_grid_file(p)?), None),
        (None, Some(c)) => AuditInput::new(Some(c.field()?), c.exact()),
        (None, None) => AuditInput::new(None, None),
    }
}

pub fn audit(specs: &[AuditSpec], input: &AuditInput, cfg_bytes: &[u8], out: &Path) -> Result<Status> {
    if specs.is_empty() {
        return Err(Error::InvalidInput("no audits requested".into()));
    }
    let mut rows = Vec::with_capacity(specs.len());
    let mut details = serde_json::Map::new();
    let mut tol = BTreeMap::new();
    for (k, spec) in specs.iter().enumerate() {
        let o = run_audit(spec, input)?;
        tol.insert(format!("{k}:{}", spec.name()), o.row.tolerance);
        details.insert(format!("{k}:{}", spec.name()), o.details);
        rows.push(o.row);
    }
    write_rows(&out.join("audits.csv"), &rows)?;
    write_json(&out.join("audit_details.json"), &Value::Object(details))?;
    let mut hashed = cfg_bytes.to_vec();
    hashed.extend(serde_json::to_vec(specs).expect("specs serialize"));
    write_manifest(out, "audit", &hashed, tol, &["audits.csv", "audit_details.json"])?;
    Ok(Status::Success)
}

#[derive(Serialize)]
struct RefineRow {
    level: usize,
    h: f64,
    nodes: usize,
    iterations: usize,
    converged: bool,
    final_residual: f64,
    /// Discrete residual of the sampled exact solution.
    truncation_residual: Option<f64>,
    /// `sup |u_h - u_exact|`.
    solution_error: Option<f64>,
    gauss_bonnet_defect: Option<f64>,
    k0_at_one: f64,
}

#[derive(Serialize)]
struct OrderRow {
    quantity: &'static str,
    from_h: f64,
    to_h: f64,
    observed_order: f64,
}

pub fn refine(cfg: &ExperimentConfig, levels: usize, out: &Path) -> Result<Status> {
    if levels < 3 {
        return Err(Error::InvalidInput(format!("refine needs at least 3 levels, got {levels}")));
    }
    let base = cfg
        .domain
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("refine needs a domain and analytic boundary data".into()))?;
    let domains: Vec<DomainSpec> = (0..levels).map(|k| base.with_h(base.h / 2f64.powi(k as i32))).collect();
    // memory guard before any work
    for d in &domains {
        d.grid()?;
    }
    let gb = cfg.audits.iter().find(|a| matches!(a, AuditSpec::GaussBonnet { .. })).cloned();
    let mut rows = Vec::with_capacity(levels);
    let mut all_converged = true;
    for (level, d) in domains.iter().enumerate() {
        let data = cfg.field_on(d)?;
        let nodes = data.grid().len();
        let report = newton_solve(&TranslatorProblem::new(data), cfg.solver)?;
        all_converged &= report.converged;
        let (truncation_residual, solution_error) = match cfg.exact() {
            Some(e) => {
                let sampled = e.sample(report.solution.mask().clone())?;
                let trunc = residual(&sampled)?.interior_sup_norm();
                let err = report.solution.zip_map(&sampled, |a, b| a - b)?.sup_norm();
                (Some(trunc), Some(err))
            }
            None => (None, None),
        };
        let gauss_bonnet_defect = match &gb {
            Some(spec) => {
                let input = AuditInput::new(Some(report.solution.clone()), None)?;
                Some(run_audit(spec, &input)?.row.metric)
            }
            None => None,
        };
        rows.push(RefineRow {
            level,
            h: d.h,
            nodes,
            iterations: report.iterations,
            converged: report.converged,
            final_residual: report.final_residual(),
            truncation_residual,
            solution_error,
            gauss_bonnet_defect,
            k0_at_one: translab::barriers::bessel::k0(1.0)?,
        });
    }
    let mut orders = Vec::new();
    for w in rows.windows(2) {
        let ratio = w[0].h / w[1].h;
        let mut push = |quantity, a: Option<f64>, b: Option<f64>| {
            if let (Some(a), Some(b)) = (a, b) {
                orders.push(OrderRow {
                    quantity,
                    from_h: w[0].h,
                    to_h: w[1].h,
                    observed_order: (a / b).ln() / ratio.ln(),
                });
            }
        };
        push("truncation_residual", w[0].truncation_residual, w[1].truncation_residual);
        push("solution_error", w[0].solution_error, w[1].solution_error);
        push("gauss_bonnet_defect", w[0].gauss_bonnet_defect, w[1].gauss_bonnet_defect);
    }
    write_serialized(&out.join("refine.csv"), &rows)?;
    write_serialized(&out.join("orders.csv"), &orders)?;
    let mut tol = BTreeMap::new();
    tol.insert("newton_tol".into(), cfg.solver.tol);
    tol.insert("linear_tol".into(), cfg.solver.linear_tol);
    let mut hashed = cfg.canonical_bytes();
    hashed.extend(levels.to_le_bytes());
    write_manifest(out, "refine", &hashed, tol, &["refine.csv", "orders.csv"])?;
    Ok(if all_converged { Status::Success } else { Status::NumericalFailure })
}

fn write_serialized<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub struct ScanArgs {
    pub alphas: Vec<f64>,
    pub operator: ScanOperator,
    pub r_min: f64,
    pub r_max: f64,
    pub h: f64,
}

pub fn barrier_scan(args: &ScanArgs, out: &Path) -> Result<Status> {
    if args.alphas.is_empty() {
        return Err(Error::InvalidInput("at least one alpha is required".into()));
    }
    let scans = args
        .alphas
        .iter()
        .map(|&a| scan_r0(a, args.operator, args.r_min, args.r_max, args.h))
        .collect::<Result<Vec<_>>>()?;
    write_serialized(&out.join("barrier_scan.csv"), &scans)?;
    let hashed = serde_json::to_vec(&json!({
        "alphas": args.alphas, "operator": args.operator, "r_min": args.r_min, "r_max": args.r_max, "h": args.h,
    }))
    .expect("scan args serialize");
    let mut tol = BTreeMap::new();
    tol.insert("sign_threshold".into(), 0.0);
    write_manifest(out, "barrier-scan", &hashed, tol, &["barrier_scan.csv"])?;
    Ok(if scans.iter().all(|s| s.max_sign_value < 0.0) { Status::Success } else { Status::NumericalFailure })
}

#[derive(Serialize)]
struct BlowdownRow {
    scale: f64,
    sup_u: f64,
    sup_du: f64,
}

pub fn blowdown_cmd(
    input: &AuditInput,
    scales: &[f64],
    window: BlowdownWindow,
    hashed: &[u8],
    out: &Path,
) -> Result<Status> {
    let rep;
    let surface: &dyn Surface = match (&input.exact, &input.field) {
        (Some(e), _) => e,
        (None, Some(f)) => {
            rep = shape_report(f, Direction::e1())?;
            &rep
        }
        (None, None) => return Err(Error::InvalidInput("blowdown needs a surface input".into())),
    };
    finish_blowdown(surface, scales, window, hashed, out)
}

fn finish_blowdown(
    surface: &dyn Surface,
    scales: &[f64],
    window: BlowdownWindow,
    hashed: &[u8],
    out: &Path,
) -> Result<Status> {
    let seq = blowdown(surface, scales, window)?;
    let rows: Vec<BlowdownRow> = (0..seq.scales.len())
        .map(|k| BlowdownRow { scale: seq.scales[k], sup_u: seq.sup_u[k], sup_du: seq.sup_du[k] })
        .collect();
    write_serialized(&out.join("blowdown.csv"), &rows)?;
    let mut h = hashed.to_vec();
    h.extend(serde_json::to_vec(&(scales, window)).expect("blowdown args serialize"));
    let mut tol = BTreeMap::new();
    tol.insert("m".into(), window.m);
    write_manifest(out, "blowdown", &h, tol, &["blowdown.csv"])?;
    Ok(if seq.truncated { Status::NumericalFailure } else { Status::Success })
}

/// Output directory precedence: flag or environment, then config, then default.
pub fn output_dir(flag: Option<PathBuf>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    flag.or_else(|| cfg.and_then(|c| c.output_dir.clone())).unwrap_or_else(|| PathBuf::from("translab-out"))
}
