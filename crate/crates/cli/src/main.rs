//! `herald`: command-line front end for herald-core.

mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use herald_core::entanglement::log_negativity_pure_with;
use herald_core::fock::DEFAULT_TAIL_BAND;
use herald_core::sweep::{spec_at, CSV_HEADER};
use herald_core::{
    baseline_tmsvs, normalize, optimize, pk_distribution, pk_mode, run_setup1, run_setup1_on_input,
    run_setup2, schmidt, sweep, tmsvs, verify, write_table, Bounds, BsAngle, Cutoff, Error,
    FockState, HeraldSpec, Numerics, Protocol, ProtocolOutcome, SqueezeParam, SweepGrid,
    TableFormat, TwoModeState,
};
use report::{write_report, Record, Table, Value};

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_UNDEFINED: u8 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "herald",
    version,
    about = "Heralded photon addition, subtraction and catalysis on two-mode squeezed vacuum"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Squeezed-vacuum source: negativity and Fock coefficients.
    Tmsvs(TmsvsArgs),
    /// Independent-arm circuit: one beam splitter and ancilla per mode.
    Setup1(Setup1Args),
    /// Premixed circuit: ancillas share a beam splitter before entering the arms.
    Setup2(SetupArgs),
    /// Photon-number distribution of the premixed single-photon addition.
    Pk(PkArgs),
    /// Evaluate a protocol over an (r, T) grid.
    Sweep(SweepArgs),
    /// Maximize the entanglement gain subject to a success-probability floor.
    Optimize(OptimizeArgs),
    /// Run the built-in invariant checks.
    Verify,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// csv or json-lines.
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: TableFormat,
}

#[derive(Args, Debug)]
struct NumericArgs {
    /// Fixed Fock cutoff k_max instead of the squeezing-dependent default.
    #[arg(long, value_name = "K_MAX")]
    cutoff: Option<usize>,
    /// Downgrade the truncation-tail check to a warning.
    #[arg(long)]
    allow_truncation: bool,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct AngleArgs {
    /// Transmittance cos²θ of the arm beam splitters, in [0, 1].
    #[arg(long = "T", value_name = "T")]
    t: Option<f64>,
    /// Beam-splitter angle θ in radians, in [0, π/2].
    #[arg(long)]
    theta: Option<f64>,
}

#[derive(Args, Debug)]
struct HeraldArgs {
    /// Photons injected into the upper ancilla.
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// Photons injected into the lower ancilla.
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Photons detected on the upper ancilla.
    #[arg(long, default_value_t = 0)]
    m_prime: usize,
    /// Photons detected on the lower ancilla.
    #[arg(long, default_value_t = 0)]
    n_prime: usize,
    /// Premix beam-splitter angle in radians (premixed circuit only; default π/4).
    #[arg(long)]
    theta_a: Option<f64>,
}

#[derive(Args, Debug)]
struct TmsvsArgs {
    /// Squeezing parameter.
    #[arg(long)]
    r: f64,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SetupArgs {
    /// Squeezing parameter.
    #[arg(long)]
    r: f64,
    #[command(flatten)]
    angle: AngleArgs,
    #[command(flatten)]
    herald: HeraldArgs,
    /// Also print the heralded state's nonzero amplitudes.
    #[arg(long)]
    state: bool,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct Setup1Args {
    #[command(flatten)]
    setup: SetupArgs,
    /// Replace the squeezed vacuum by the Fock state |K, K>.
    #[arg(long, value_name = "K")]
    fock_input: Option<usize>,
}

#[derive(Args, Debug)]
struct PkArgs {
    /// Squeezing parameter.
    #[arg(long)]
    r: f64,
    #[command(flatten)]
    angle: AngleArgs,
    /// Largest k listed.
    #[arg(long, default_value_t = 50)]
    k_limit: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// setup1, setup2 or setup2_analytic.
    #[arg(long, value_parser = parse_protocol)]
    protocol: Protocol,
    #[command(flatten)]
    herald: HeraldArgs,
    #[command(flatten)]
    bounds: BoundsArgs,
    #[arg(long)]
    r_steps: Option<usize>,
    #[arg(long)]
    t_steps: Option<usize>,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    /// setup1, setup2 or setup2_analytic.
    #[arg(long, value_parser = parse_protocol)]
    protocol: Protocol,
    #[command(flatten)]
    herald: HeraldArgs,
    #[command(flatten)]
    bounds: BoundsArgs,
    /// Minimum success probability, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    p_min: f64,
    #[command(flatten)]
    numeric: NumericArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_format(s: &str) -> Result<TableFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Error raised by argument combinations clap cannot express.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(Usage(msg.into()))
}

impl NumericArgs {
    fn numerics(&self) -> anyhow::Result<Numerics> {
        Ok(Numerics {
            cutoff: self.cutoff.map(Cutoff::new).transpose()?,
            allow_truncation: self.allow_truncation,
            ..Numerics::default()
        })
    }
}

impl AngleArgs {
    fn angle(&self) -> anyhow::Result<BsAngle> {
        Ok(match (self.t, self.theta) {
            (Some(t), None) => BsAngle::from_transmittance(t)?,
            (None, Some(theta)) => BsAngle::new(theta)?,
            _ => return Err(usage("exactly one of --T and --theta is required")),
        })
    }
}

impl HeraldArgs {
    fn spec(&self, premixed: bool) -> anyhow::Result<HeraldSpec> {
        let theta_a = match (premixed, self.theta_a) {
            (true, t) => BsAngle::new(t.unwrap_or(std::f64::consts::FRAC_PI_4))?,
            (false, None) => BsAngle::IDENTITY,
            (false, Some(0.0)) => BsAngle::IDENTITY,
            (false, Some(_)) => {
                return Err(usage("--theta-a applies to the premixed circuit only"))
            }
        };
        Ok(HeraldSpec {
            m: self.m,
            n: self.n,
            m_prime: self.m_prime,
            n_prime: self.n_prime,
            theta_a,
            ..HeraldSpec::noop()
        })
    }
}

impl BoundsArgs {
    fn bounds(&self) -> Bounds {
        let d = Bounds::default();
        Bounds {
            r_min: self.r_min.unwrap_or(d.r_min),
            r_max: self.r_max.unwrap_or(d.r_max),
            t_min: self.t_min.unwrap_or(d.t_min),
            t_max: self.t_max.unwrap_or(d.t_max),
        }
    }
}

impl OutputArgs {
    fn writer(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn protocol_for(premixed: bool) -> Protocol {
    if premixed {
        Protocol::Setup2
    } else {
        Protocol::Setup1
    }
}

fn outcome_record(
    label: &str,
    r: f64,
    spec: &HeraldSpec,
    k_max: usize,
    out: &ProtocolOutcome,
) -> Record {
    let mut rec = Record::new();
    rec.push("protocol", label)
        .push("r", r)
        .push("m", spec.m)
        .push("n", spec.n)
        .push("m_prime", spec.m_prime)
        .push("n_prime", spec.n_prime)
        .push("T_upper", spec.theta_u.transmittance())
        .push("T_lower", spec.theta_l.transmittance())
        .push("theta_a", spec.theta_a.theta())
        .push("k_max", k_max)
        .push("success_prob", out.success_prob)
        .push("E_N", out.e_n)
        .push("baseline", out.baseline)
        .push("delta_E_N", out.delta_e_n)
        .push("spill", out.truncation_spill)
        .push(
            "annihilated",
            if out.is_annihilated() {
                "true"
            } else {
                "false"
            },
        );
    rec
}

fn state_table(state: &TwoModeState) -> Table {
    let c = state.coeffs();
    let mut rows = Vec::new();
    for j in 0..c.nrows() {
        for k in 0..c.ncols() {
            if c[(j, k)] != 0.0 {
                rows.push(vec![Value::from(j), Value::from(k), Value::from(c[(j, k)])]);
            }
        }
    }
    Table {
        columns: vec!["j", "k", "amplitude"],
        rows,
    }
}

fn cmd_tmsvs(args: &TmsvsArgs) -> anyhow::Result<ExitCode> {
    let numerics = args.numeric.numerics()?;
    let r = SqueezeParam::new(args.r)?;
    let state = tmsvs(r, &numerics)?;
    let (normalized, _) = normalize(state.clone(), numerics.zero_threshold)?;
    let e_n = log_negativity_pure_with(&schmidt(&normalized)?, numerics.schmidt_drop)?;
    let mut rec = Record::new();
    rec.push("r", r.r())
        .push("lambda", r.lambda())
        .push("k_max", state.cutoff().k_max())
        .push("E_N", e_n)
        .push("baseline", baseline_tmsvs(r.r()))
        .push("spill", state.spill());
    let rows = (0..state.cutoff().dim())
        .map(|k| vec![Value::from(k), Value::from(state.get(k, k))])
        .collect();
    let table = Table {
        columns: vec!["k", "coefficient"],
        rows,
    };
    write_report(
        &rec,
        Some(&table),
        args.output.format,
        args.output.writer()?,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_setup(
    args: &SetupArgs,
    premixed: bool,
    fock_input: Option<usize>,
) -> anyhow::Result<ExitCode> {
    let mut numerics = args.numeric.numerics()?;
    let r = SqueezeParam::new(args.r)?;
    let protocol = protocol_for(premixed);
    let spec = spec_at(protocol, &args.herald.spec(premixed)?, args.angle.angle()?);
    let (label, k_max, out) = match fock_input {
        Some(k) => {
            let cutoff = numerics
                .cutoff
                .map_or_else(|| Cutoff::new(k + DEFAULT_TAIL_BAND + 1), Ok)?;
            numerics.cutoff = Some(cutoff);
            let input = TwoModeState::fock(cutoff, k, k)?;
            (
                "setup1_fock_input",
                cutoff.k_max(),
                run_setup1_on_input(&input, r, &spec, &numerics)?,
            )
        }
        None => {
            let k_max = numerics.cutoff_for(r.r()).k_max();
            let out = if premixed {
                run_setup2(r, &spec, &numerics)?
            } else {
                run_setup1(r, &spec, &numerics)?
            };
            (if premixed { "setup2" } else { "setup1" }, k_max, out)
        }
    };
    let rec = outcome_record(label, r.r(), &spec, k_max, &out);
    let table = match (&out.state, args.state) {
        (Some(s), true) => Some(state_table(s)),
        _ => None,
    };
    write_report(
        &rec,
        table.as_ref(),
        args.output.format,
        args.output.writer()?,
    )?;
    if out.is_annihilated() {
        log::error!(
            "heralded branch is annihilated (success probability {:e})",
            out.success_prob
        );
        return Ok(ExitCode::from(EXIT_UNDEFINED));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_pk(args: &PkArgs) -> anyhow::Result<ExitCode> {
    let r = SqueezeParam::new(args.r)?;
    let angle = args.angle.angle()?;
    let p = pk_distribution(r, angle, args.k_limit);
    let mut rec = Record::new();
    rec.push("r", r.r())
        .push("T", angle.transmittance())
        .push("x", r.lambda() * angle.transmittance())
        .push("pk_mode", pk_mode(r, angle))
        .push("sum", p.iter().sum::<f64>());
    let rows = p
        .iter()
        .enumerate()
        .map(|(k, &pk)| vec![Value::from(k), Value::from(pk)])
        .collect();
    let table = Table {
        columns: vec!["k", "p_k"],
        rows,
    };
    write_report(
        &rec,
        Some(&table),
        args.output.format,
        args.output.writer()?,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: &SweepArgs) -> anyhow::Result<ExitCode> {
    let numerics = args.numeric.numerics()?;
    let spec = args.herald.spec(args.protocol != Protocol::Setup1)?;
    let b = args.bounds.bounds();
    let d = SweepGrid::default();
    let grid = SweepGrid {
        r_min: b.r_min,
        r_max: b.r_max,
        r_steps: args.r_steps.unwrap_or(d.r_steps),
        t_min: b.t_min,
        t_max: b.t_max,
        t_steps: args.t_steps.unwrap_or(d.t_steps),
    };
    let table = sweep(args.protocol, &spec, &grid, &numerics)?;
    log::info!(
        "{} rows, max delta_E_N {:?}",
        table.rows.len(),
        table.max_delta()
    );
    write_table(&table, args.output.format, args.output.writer()?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_optimize(args: &OptimizeArgs) -> anyhow::Result<ExitCode> {
    let numerics = args.numeric.numerics()?;
    let spec = args.herald.spec(args.protocol != Protocol::Setup1)?;
    let rep = optimize(
        args.protocol,
        &spec,
        &args.bounds.bounds(),
        args.p_min,
        &numerics,
    )?;
    let mut rec = Record::new();
    rec.push("protocol", args.protocol.to_string())
        .push("best_r", rep.best_r)
        .push("best_T", rep.best_t)
        .push("delta_E_N", rep.delta_e_n)
        .push("success_prob", rep.success_prob)
        .push("p_min", rep.p_min)
        .push("coarse_best", rep.coarse_best);
    let rows = rep
        .neighborhood
        .iter()
        .map(|row| {
            vec![
                Value::from(row.r),
                Value::from(row.t),
                Value::from(row.success_prob),
                Value::from(row.e_n),
                Value::from(row.delta_e_n),
                Value::from(row.spill),
            ]
        })
        .collect();
    let columns = CSV_HEADER.split(',').collect();
    write_report(
        &rec,
        Some(&Table { columns, rows }),
        args.output.format,
        args.output.writer()?,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify() -> anyhow::Result<ExitCode> {
    let stdout = io::stdout();
    let report = verify::run_all_with(|check| {
        let mut out = stdout.lock();
        let _ = writeln!(out, "{check}");
        let _ = out.flush();
    });
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", report.checks.len(), failed);
    Ok(if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    })
}

fn threads(parallel: bool) -> anyhow::Result<usize> {
    if !parallel {
        return Ok(1);
    }
    match std::env::var("HERALD_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(usage(format!(
                "HERALD_THREADS must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(0),
    }
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let parallel = matches!(cli.command, Command::Sweep(_) | Command::Optimize(_));
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads(parallel)?)
        .build_global()?;
    match &cli.command {
        Command::Tmsvs(a) => cmd_tmsvs(a),
        Command::Setup1(a) => cmd_setup(&a.setup, false, a.fock_input),
        Command::Setup2(a) => cmd_setup(a, true, None),
        Command::Pk(a) => cmd_pk(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Verify => cmd_verify(),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::TruncationUnsafe { .. } | Error::ConvergenceFailure(_)) => EXIT_NUMERIC,
        Some(Error::ZeroState { .. } | Error::NoFeasiblePoint { .. }) => EXIT_UNDEFINED,
        Some(Error::Domain(_) | Error::InvalidGrid(_) | Error::Parse(_)) => EXIT_USAGE,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            let code = exit_code(&err);
            eprintln!("error: {err:#}");
            if code == EXIT_USAGE {
                eprintln!("\nFor usage, run `herald --help`.");
            }
            ExitCode::from(code)
        }
    }
}
