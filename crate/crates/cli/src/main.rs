//! Experiment runner: `solve`, `audit`, `refine`, `barrier-scan`, `blowdown`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::large_enum_variant)]

mod audits;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use translab::analysis::BlowdownWindow;
use translab::barriers::ScanOperator;
use translab::Error;

use audits::AuditSpec;
use commands::{ScanArgs, Status};
use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "translab", version, about = "Translating graph solver and audit runner")]
struct Cli {
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true, env = "TRANSLAB_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the Dirichlet problem; writes solution.grid, solve_report.json, audit.csv.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the configured Newton iteration cap.
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Run named audits (gauss-bonnet, decay, blowdown, barrier, ecker, area-ratio, slice).
    Audit(AuditArgs),
    /// Re-solve at h, h/2, h/4, ... and report observed orders.
    Refine {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Scan Bessel barriers for the radius beyond which Q(phi) < 0.
    BarrierScan {
        #[arg(long, value_delimiter = ',', default_values_t = [5.0, 8.0, 16.0])]
        alpha: Vec<f64>,
        #[arg(long, value_enum, default_value_t = ScanOp::Flat)]
        operator: ScanOp,
        #[arg(long, default_value_t = 4.0)]
        r_min: f64,
        #[arg(long, default_value_t = 200.0)]
        r_max: f64,
        #[arg(long, default_value_t = 0.5)]
        h: f64,
    },
    /// Sup norms of lambda u(x / lambda) and its gradient on a fixed annulus.
    Blowdown {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 0.5, 0.25, 0.125])]
        scales: Vec<f64>,
        /// Annulus 1/m <= |x| <= m.
        #[arg(long, default_value_t = 4.0)]
        m: f64,
        /// Restrict to a sector of this half-angle (degrees) about V.
        #[arg(long)]
        sector: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScanOp {
    /// Q linearized at u = 0.
    Flat,
    /// Q evaluated on the barrier itself.
    #[value(name = "self")]
    SelfQ,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Experiment config supplying the surface.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Solution grid file; takes precedence over the config's data.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    /// Audits to run; defaults to the config's audit list.
    names: Vec<String>,
    #[command(flatten)]
    input: InputArgs,
    /// Barrier kind: bessel or exp.
    #[arg(long)]
    kind: Option<String>,
    /// Barrier or decay-compliance exponent; must exceed 4.
    #[arg(long)]
    alpha: Option<f64>,
    /// Decay mode: ray or radial.
    #[arg(long)]
    mode: Option<String>,
    /// Centre: x1,x2 (gauss-bonnet, slice) or x1,x2,x3 (ecker, area-ratio).
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    /// Gauss-Bonnet circle radii: one for a disk, outer,inner for an annulus.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Decay fit arclength range s_min,s_max.
    #[arg(long, value_delimiter = ',')]
    range: Option<Vec<f64>>,
    /// Slice radius window r1,r2.
    #[arg(long, value_delimiter = ',')]
    window: Option<Vec<f64>>,
    /// Radial decay ray angle from V in degrees.
    #[arg(long)]
    angle: Option<f64>,
    /// Area-ratio ball radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Ecker ball radius.
    #[arg(long)]
    rho: Option<f64>,
    /// Points per circle (gauss-bonnet, slice).
    #[arg(long)]
    samples: Option<usize>,
    /// Decay samples or slice candidate radii.
    #[arg(long)]
    count: Option<usize>,
    /// Outer radius of the barrier scan.
    #[arg(long)]
    r_max: Option<f64>,
    /// Grid spacing of the barrier scan.
    #[arg(long)]
    scan_h: Option<f64>,
}

impl AuditArgs {
    /// Flags set on the command line, keyed by audit parameter name.
    fn params(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.into(), v);
            }
        };
        put("kind", self.kind.as_ref().map(|v| json!(v)));
        put("alpha", self.alpha.map(|v| json!(v)));
        put("mode", self.mode.as_ref().map(|v| json!(v)));
        put("center", self.center.as_ref().map(|v| json!(v)));
        put("radii", self.radii.as_ref().map(|v| json!(v)));
        put("range", self.range.as_ref().map(|v| json!(v)));
        put("window", self.window.as_ref().map(|v| json!(v)));
        put("angle", self.angle.map(|v| json!(v)));
        put("radius", self.radius.map(|v| json!(v)));
        put("rho", self.rho.map(|v| json!(v)));
        put("samples", self.samples.map(|v| json!(v)));
        put("count", self.count.map(|v| json!(v)));
        put("r_max", self.r_max.map(|v| json!(v)));
        put("h", self.scan_h.map(|v| json!(v)));
        m
    }
}

/// Parameters that a given audit accepts.
fn accepted(name: &str) -> &'static [&'static str] {
    match name {
        "gauss-bonnet" => &["center", "radii", "samples"],
        "decay" => &["mode", "range", "angle", "count", "alpha"],
        "blowdown" => &[],
        "barrier" => &["kind", "alpha", "r_max", "h"],
        "ecker" => &["center", "rho"],
        "area-ratio" => &["center", "radius"],
        "slice" => &["center", "window", "count", "samples"],
        _ => &[],
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::LinearSolver { .. } | Error::Singular(_) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<Status, Error> {
    match cli.command {
        Command::Solve { config, max_iter } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(n) = max_iter {
                cfg.solver.max_iter = n;
                cfg.validate()?;
            }
            let out = commands::output_dir(cli.output_dir, Some(&cfg));
            commands::prepare_dir(&out)?;
            commands::solve(&cfg, &out)
        }
        Command::Audit(args) => {
            let cfg = args.input.config.as_deref().map(ExperimentConfig::load).transpose()?;
            let specs: Vec<AuditSpec> = if args.names.is_empty() {
                cfg.as_ref().map(|c| c.audits.clone()).unwrap_or_default()
            } else {
                let params = args.params();
                args.names
                    .iter()
                    .map(|n| {
                        let keep = accepted(n);
                        let p = params
                            .iter()
                            .filter(|(k, _)| keep.contains(&k.as_str()))
                            .map(|(k, v)| (k.clone(), v.clone()));
                        AuditSpec::from_parts(n, p.collect())
                    })
                    .collect::<Result<_, _>>()?
            };
            let input = commands::audit_input(cfg.as_ref(), args.input.solution.as_deref())?;
            let out = commands::output_dir(cli.output_dir, cfg.as_ref());
            commands::prepare_dir(&out)?;
            let bytes = cfg.as_ref().map(|c| c.canonical_bytes()).unwrap_or_default();
            commands::audit(&specs, &input, &bytes, &out)
        }
        Command::Refine { config, levels } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = commands::output_dir(cli.output_dir, Some(&cfg));
            commands::prepare_dir(&out)?;
            commands::refine(&cfg, levels, &out)
        }
        Command::BarrierScan { alpha, operator, r_min, r_max, h } => {
            let operator = match operator {
                ScanOp::Flat => ScanOperator::FlatQ,
                ScanOp::SelfQ => ScanOperator::SelfQ,
            };
            let out = commands::output_dir(cli.output_dir, None);
            commands::prepare_dir(&out)?;
            commands::barrier_scan(&ScanArgs { alphas: alpha, operator, r_min, r_max, h }, &out)
        }
        Command::Blowdown { input, scales, m, sector } => {
            let cfg = input.config.as_deref().map(ExperimentConfig::load).transpose()?;
            let surface = commands::audit_input(cfg.as_ref(), input.solution.as_deref())?;
            let window = BlowdownWindow { half_angle: sector.map(f64::to_radians), ..BlowdownWindow::annulus(m) };
            let out = commands::output_dir(cli.output_dir, cfg.as_ref());
            commands::prepare_dir(&out)?;
            let bytes = cfg.as_ref().map(|c| c.canonical_bytes()).unwrap_or_default();
            commands::blowdown_cmd(&surface, &scales, window, &bytes, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::NumericalFailure) => {
            eprintln!("translab: numerical failure (see the written report)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("translab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
