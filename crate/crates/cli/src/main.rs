#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use seqmps::compress;
use seqmps::config::OptimizationConfig;
use seqmps::experiments::{self as ex, Failure, Variant};
use seqmps::io;
use seqmps::seqgen::{GeneratorModel, ModelKind};
use seqmps::states::{make_target, TargetKind, TargetSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    Compress,
    Generate,
    Fig1,
    Fig3,
    RandomSuite,
    CnotTest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    /// Two-column blocks for gnuplot.
    Gnuplot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Target {
    Ghz,
    W,
    Cluster,
    RandomMps,
    XxzGround,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Model {
    Xy,
    Xxz,
    IonXy,
    FullPauli,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Control {
    Ancilla,
    Qubit,
}

/// Experiments on MPS compression and sequential state generation.
///
/// Exit status is 0 when every check of the command passed, 1 when a check
/// failed (a failure document is written to stderr) and 2 on invalid input.
#[derive(Parser, Debug)]
#[command(name = "seqmps", version)]
struct Args {
    #[arg(long, value_enum)]
    command: Command,

    /// Qubit count: a number, a range `2..8` or a list `2,3,5`.
    #[arg(long)]
    n: Option<String>,

    /// XXZ anisotropy.
    #[arg(long)]
    delta: Option<f64>,

    /// Bond dimension of random targets and cap for the XXZ ground state.
    #[arg(long)]
    bond: Option<usize>,

    /// Target bond dimension of `compress`.
    #[arg(long)]
    dprime: Option<usize>,

    #[arg(long, value_enum, default_value = "variational")]
    method: CompressMethod,

    /// couplings_only, couplings_plus_ancilla or full_local.
    #[arg(long)]
    variant: Option<String>,

    #[arg(long, value_enum)]
    target: Option<Target>,

    #[arg(long, value_enum, default_value = "xy")]
    model: Model,

    /// Ancilla dimension of the full_pauli model.
    #[arg(long, default_value_t = 2)]
    d_ancilla: usize,

    /// Start the last emitted qubit in |1> (the ion-chain W protocol).
    #[arg(long)]
    ion_inits: bool,

    #[arg(long, value_enum, default_value = "ancilla")]
    cnot_control: Control,

    #[arg(long)]
    tol: Option<f64>,

    #[arg(long)]
    max_sweeps: Option<usize>,

    #[arg(long)]
    restarts: Option<usize>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Number of random targets.
    #[arg(long)]
    count: Option<usize>,

    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    format: Format,

    /// Tighter thresholds and a larger restart budget.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CompressMethod {
    Truncation,
    Variational,
}

type Block = (String, Vec<(f64, f64)>);

struct Output {
    csv: String,
    json: Value,
    plot: Vec<Block>,
    failures: Vec<Failure>,
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    match run(&args) {
        Ok(out) => {
            let text = match args.format {
                Format::Csv => out.csv,
                Format::Gnuplot => io::gnuplot(&out.plot),
                Format::Json => match io::to_json(&out.json) {
                    Ok(t) => t + "\n",
                    Err(e) => return error_exit(&e.to_string()),
                },
            };
            let written = match &args.out {
                Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                return error_exit(&e);
            }
            if out.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                let doc = json!({ "command": format!("{:?}", args.command), "failures": out.failures });
                eprintln!("{}", io::to_json(&doc).unwrap_or_default());
                ExitCode::from(1)
            }
        }
        Err(e) => error_exit(&e),
    }
}

fn error_exit(msg: &str) -> ExitCode {
    let doc = json!({ "error": msg });
    eprintln!("{}", io::to_json(&doc).unwrap_or_else(|_| msg.to_string()));
    ExitCode::from(2)
}

fn parse_ns(s: &str) -> Result<Vec<usize>, String> {
    let bad = || format!("cannot parse --n {s:?}");
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn single_n(args: &Args, default: usize) -> Result<usize, String> {
    match &args.n {
        None => Ok(default),
        Some(s) => match parse_ns(s)?.as_slice() {
            [n] => Ok(*n),
            _ => Err(format!("--n must be a single number for {:?}", args.command)),
        },
    }
}

fn optimization(args: &Args, base: OptimizationConfig) -> Result<OptimizationConfig, String> {
    let mut cfg = base.with_seed(args.seed);
    if let Some(t) = args.tol {
        if !(t >= 0.0) {
            return Err("--tol must be non-negative".into());
        }
        cfg.tol = t;
    }
    if let Some(m) = args.max_sweeps {
        cfg.max_sweeps = m;
    }
    if let Some(r) = args.restarts {
        if r == 0 {
            return Err("--restarts must be at least 1".into());
        }
        cfg.restarts = r;
    }
    Ok(cfg)
}

fn target_spec(args: &Args, n: usize) -> Result<TargetSpec, String> {
    let kind = args.target.ok_or("--target is required for this command")?;
    let kind = match kind {
        Target::Ghz => TargetKind::Ghz,
        Target::W => TargetKind::W,
        Target::Cluster => TargetKind::Cluster,
        Target::RandomMps => TargetKind::RandomMps,
        Target::XxzGround => TargetKind::XxzGround,
    };
    Ok(TargetSpec { kind, n, bond: args.bond.unwrap_or(2), seed: args.seed, delta: args.delta.unwrap_or(1.0) })
}

fn run(args: &Args) -> Result<Output, String> {
    let e = |err: seqmps::Error| err.to_string();
    match args.command {
        Command::Compress => {
            let n = single_n(args, 10)?;
            let spec = target_spec(args, n)?;
            let target = make_target(&spec).map_err(e)?;
            let d = args.dprime.ok_or("--dprime is required for compress")?;
            let (_, rep) = match args.method {
                CompressMethod::Truncation => compress::compress_truncation(&target, d),
                CompressMethod::Variational => {
                    compress::compress_variational(&target, d, &optimization(args, OptimizationConfig::compression())?)
                }
            }
            .map_err(e)?;
            let csv = io::csv(
                &["d_prime", "method", "error", "fidelity", "sweeps"],
                [vec![
                    d.to_string(),
                    rep.method.as_str().to_string(),
                    io::csv_float(rep.error),
                    io::csv_float(rep.fidelity),
                    rep.sweeps.to_string(),
                ]],
            );
            let plot = vec![(format!("{} d_prime error", rep.method.as_str()), vec![(d as f64, rep.error)])];
            Ok(Output { csv, json: json!({ "target": spec, "report": rep }), plot, failures: vec![] })
        }
        Command::Generate => {
            let n = single_n(args, 4)?;
            let spec = target_spec(args, n)?;
            let target = make_target(&spec).map_err(e)?;
            let kind = match args.model {
                Model::Xy => ModelKind::Xy,
                Model::Xxz => ModelKind::Xxz,
                Model::IonXy => ModelKind::IonXy,
                Model::FullPauli => ModelKind::FullPauli,
            };
            let d = if kind == ModelKind::FullPauli { args.d_ancilla } else { 2 };
            let model = GeneratorModel::new(kind, d).map_err(e)?;
            let variant = Variant::parse(args.variant.as_deref().unwrap_or("full_local")).map_err(e)?;
            let inits = args.ion_inits.then(|| ex::ion_inits(n));
            let cfg = optimization(args, OptimizationConfig::generation())?;
            let (p, rep) = ex::generate(&target, model, variant, inits.as_deref(), &cfg).map_err(e)?;
            let row = ex::GenerationRow::new(model, variant, n, &rep);
            let protocol: Value =
                serde_json::from_str(&io::protocol_to_json(&p).map_err(e)?).map_err(|x| x.to_string())?;
            let plot = vec![(format!("{} n one_minus_f", variant.as_str()), vec![(n as f64, row.one_minus_f)])];
            Ok(Output {
                csv: ex::generation_csv(&[row]),
                json: json!({ "target": spec, "report": rep, "protocol": protocol }),
                plot,
                failures: vec![],
            })
        }
        Command::Fig1 => {
            let cfg = ex::Fig1Config {
                n: single_n(args, 10)?,
                delta: args.delta.unwrap_or(1.0),
                bond: args.bond.unwrap_or(16),
                seed: args.seed,
                opt: optimization(args, OptimizationConfig::compression())?,
            };
            let (rows, failures) = ex::run_fig1(&cfg).map_err(e)?;
            let mut plot: Vec<Block> = vec![];
            for r in &rows {
                let title = format!("{} {} d_prime error", r.state, r.method.as_str());
                match plot.iter_mut().find(|b| b.0 == title) {
                    Some(b) => b.1.push((r.d_prime as f64, r.error)),
                    None => plot.push((title, vec![(r.d_prime as f64, r.error)])),
                }
            }
            Ok(Output { csv: ex::fig1_csv(&rows), json: json!({ "config": cfg, "rows": rows }), plot, failures })
        }
        Command::Fig3 => {
            let ns = args.n.as_deref().map(parse_ns).transpose()?.unwrap_or_else(|| (2..=8).collect());
            let base = OptimizationConfig::generation().with_restarts(if args.strict { 20 } else { 5 });
            let cfg = ex::Fig3Config {
                n_min: *ns.iter().min().ok_or("empty --n")?,
                n_max: *ns.iter().max().ok_or("empty --n")?,
                opt: optimization(args, base)?,
                strict: args.strict,
            };
            let (rows, failures) = ex::run_fig3(&cfg).map_err(e)?;
            let plot = [Variant::CouplingsOnly, Variant::CouplingsPlusAncilla]
                .map(|v| {
                    let pts = rows.iter().filter(|r| r.variant == v).map(|r| (r.n as f64, r.one_minus_f)).collect();
                    (format!("{} n one_minus_f", v.as_str()), pts)
                })
                .to_vec();
            Ok(Output { csv: ex::generation_csv(&rows), json: json!({ "config": cfg, "rows": rows }), plot, failures })
        }
        Command::RandomSuite => {
            let ns = args.n.as_deref().map(parse_ns).transpose()?.unwrap_or_else(|| vec![2, 3, 4, 5]);
            let base = OptimizationConfig::generation().with_restarts(if args.strict { 40 } else { 20 });
            let cfg = ex::RandomSuiteConfig {
                ns,
                count: args.count.unwrap_or(20),
                seed: args.seed,
                opt: optimization(args, base)?,
                strict: args.strict,
            };
            let (rows, summary, failures) = ex::run_random_suite(&cfg).map_err(e)?;
            let plot = cfg
                .ns
                .iter()
                .map(|&n| {
                    let pts =
                        rows.iter().filter(|r| r.n == n).enumerate().map(|(i, r)| (i as f64, r.one_minus_f)).collect();
                    (format!("n={n} target one_minus_f"), pts)
                })
                .collect();
            Ok(Output { csv: ex::random_csv(&rows), json: json!({ "summary": summary, "rows": rows }), plot, failures })
        }
        Command::CnotTest => {
            let defaults = ex::CnotConfig::default();
            let cfg = ex::CnotConfig {
                n: single_n(args, defaults.n)?,
                count: args.count.unwrap_or(defaults.count),
                seed: args.seed,
                opt: optimization(args, defaults.opt)?,
                ancilla_controls: args.cnot_control == Control::Ancilla,
                threshold: defaults.threshold,
            };
            let (summary, failures) = ex::run_cnot_test(&cfg).map_err(e)?;
            let csv = io::csv(
                &["seed", "n", "one_minus_f"],
                summary
                    .target_seeds
                    .iter()
                    .zip(&summary.one_minus_f)
                    .map(|(s, v)| vec![s.to_string(), cfg.n.to_string(), io::csv_float(*v)]),
            );
            let pts = summary.one_minus_f.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect();
            let plot = vec![(format!("n={} target one_minus_f", cfg.n), pts)];
            Ok(Output { csv, json: json!({ "summary": summary }), plot, failures })
        }
    }
}
