use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use modewise::audit::{
    dudley_estimate, estimate_distortion, eval_covering_bound, eval_m_bound, BoundConstants,
    BoundFormula, BoundInputs, CoveringSet, SampleSet,
};
use modewise::experiment::{
    build_operator, parse_config, parse_pairs, run_experiment_with_progress, to_csv, to_json,
    Cell, ExperimentSpec, ReportFormat, Scheme, Structure,
};
use modewise::measurement::{make_gaussian, make_sors, read_operator, write_operator};
use modewise::par::with_threads;
use modewise::{Execution, MeasurementOperator, RankVector};

#[derive(Parser)]
#[command(name = "modewise", version, about = "Modewise tensor measurements and TIHT recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a recovery sweep and write a CSV or JSON report.
    Run(RunArgs),
    /// Estimate the distortion of a random operator on a sample set.
    Audit(AuditArgs),
    /// Evaluate embedding-dimension or covering-number bounds.
    Bounds {
        #[command(subcommand)]
        which: BoundsCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run trials in a plain loop instead of the thread pool.
    #[arg(long)]
    sequential: bool,
    /// Keep per-trial outcomes in JSON output.
    #[arg(long)]
    keep_trials: bool,
    /// Suppress per-cell progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleArg {
    Gaussian,
    Sors,
}

#[derive(Clone, Copy, ValueEnum)]
enum SetArg {
    S1,
    S2,
    Lowrank,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    ensemble: EnsembleArg,
    #[arg(long, value_enum, default_value = "s1")]
    set: SetArg,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    kappa: usize,
    /// Rows of the audited matrix (s1/s2) or intermediate dimension (lowrank).
    #[arg(long)]
    m: Option<usize>,
    /// Modes of the input tensor for `--set lowrank`.
    #[arg(long, default_value_t = 4)]
    d: usize,
    /// Scheme audited on low-rank tensors.
    #[arg(long, default_value = "twostage_gaussian")]
    scheme: String,
    /// Final dimension for vectorized and two-stage schemes.
    #[arg(long)]
    m0: Option<usize>,
    #[arg(long, default_value_t = 2)]
    rank: usize,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    /// Write the sampled operator to a binary sidecar file.
    #[arg(long)]
    save_operator: Option<PathBuf>,
    /// Audit a previously saved operator instead of drawing one.
    #[arg(long, conflicts_with = "save_operator")]
    load_operator: Option<PathBuf>,
}

#[derive(Args)]
struct SetParams {
    /// s12, fancy-b or fancy-b-orthonormal.
    #[arg(long, default_value = "s12")]
    set: String,
    #[arg(long, default_value_t = 10)]
    n: u32,
    #[arg(long, default_value_t = 2)]
    kappa: u32,
    #[arg(long, default_value_t = 2)]
    r: u32,
    #[arg(long, default_value_t = 4)]
    d: u32,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
}

impl SetParams {
    fn covering_set(&self) -> Result<CoveringSet> {
        Ok(match self.set.as_str() {
            "s12" => CoveringSet::S12 {
                n: self.n,
                kappa: self.kappa,
            },
            "fancy-b" => CoveringSet::FancyB {
                r: self.r,
                d: self.d,
                n: self.n,
                radius: self.radius,
                mu: self.mu,
            },
            "fancy-b-orthonormal" => CoveringSet::FancyBOrthonormal {
                r: self.r,
                d: self.d,
                n: self.n,
            },
            other => bail!("unknown covering set `{other}` (s12, fancy-b, fancy-b-orthonormal)"),
        })
    }
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// Sufficient embedding dimension for one of the four formulas.
    M {
        #[arg(long)]
        formula: BoundFormula,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        d: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        kappa: u32,
        #[arg(long)]
        eta: f64,
        /// Intermediate dimension for the two-stage formulas.
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 1.0)]
        c2: f64,
        #[arg(long, default_value_t = 1.0)]
        c_log: f64,
    },
    /// Log covering-number bound at radius `t`.
    Covering {
        #[command(flatten)]
        params: SetParams,
        #[arg(long)]
        t: f64,
    },
    /// Entropy integral of the covering bound over (0, 1].
    Dudley {
        #[command(flatten)]
        params: SetParams,
    },
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn split_override(raw: &str) -> Result<(String, String)> {
    let (k, v) = raw
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{raw}` is not of the form key=value"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut overrides = args
        .overrides
        .iter()
        .map(|s| split_override(s))
        .collect::<Result<Vec<_>>>()?;
    if let Some(s) = args.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if let Some(n) = args.noise {
        overrides.push(("noise".into(), n.to_string()));
    }
    if let Some(t) = args.trials {
        overrides.push(("trials".into(), t.to_string()));
    }
    let spec = parse_config(args.config.as_deref(), &overrides)?;

    let mut threads = 0;
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)?;
        if let Some((_, v)) = parse_pairs(&text)?.into_iter().find(|(k, _)| k == "threads") {
            threads = v.parse()?;
        }
    }
    if let Some((_, v)) = overrides.iter().rev().find(|(k, _)| k == "threads") {
        threads = v.parse()?;
    }
    if let Some(t) = args.threads {
        threads = t;
    }

    let exec = execution(args.sequential);
    let quiet = args.quiet;
    let report = with_threads(threads, || {
        run_experiment_with_progress(&spec, exec, args.keep_trials, |row| {
            if !quiet {
                eprintln!(
                    "{} m={} m0={}: {}/{} recovered ({:.1}s)",
                    row.scheme,
                    row.m_intermediate.map_or("-".into(), |m| m.to_string()),
                    row.m0,
                    row.successes,
                    row.trials,
                    row.wall_time_s
                );
            }
        })
    })?;
    for s in &report.skipped {
        if !quiet {
            eprintln!("skipped {} m={:?} m0={}: {}", s.cell.scheme, s.cell.m_intermediate, s.cell.m0, s.reason);
        }
    }
    let text = match args.format {
        ReportFormat::Csv => to_csv(&report.rows),
        ReportFormat::Json => to_json(&report) + "\n",
    };
    emit(args.out.as_ref(), &text)
}

fn audit(args: AuditArgs) -> Result<()> {
    let op = if let Some(path) = &args.load_operator {
        read_operator(path)?
    } else {
        match args.set {
            SetArg::S1 | SetArg::S2 => {
                let m = args.m.ok_or_else(|| anyhow!("--m is required"))?;
                let cols = args
                    .n
                    .checked_pow(args.kappa as u32)
                    .ok_or_else(|| anyhow!("n^kappa overflows"))?;
                let a = match args.ensemble {
                    EnsembleArg::Gaussian => make_gaussian(m, cols, args.seed),
                    EnsembleArg::Sors => make_sors(m, cols, args.seed).to_matrix(),
                };
                MeasurementOperator::vectorized(vec![cols], a)?
            }
            SetArg::Lowrank => {
                let scheme: Scheme = args.scheme.parse()?;
                let spec = ExperimentSpec {
                    n: args.n,
                    d: args.d,
                    kappa: args.kappa,
                    ..ExperimentSpec::default()
                };
                let m_intermediate = match scheme.structure {
                    Structure::Vectorized => None,
                    _ => Some(args.m.ok_or_else(|| anyhow!("--m is required for {scheme}"))?),
                };
                let m0 = match scheme.structure {
                    Structure::Modewise => m_intermediate
                        .expect("set above")
                        .pow((args.d / args.kappa.max(1)) as u32),
                    _ => args.m0.ok_or_else(|| anyhow!("--m0 is required for {scheme}"))?,
                };
                let cell = Cell {
                    scheme,
                    m_intermediate,
                    m0,
                };
                build_operator(&spec, &cell, args.seed)?
            }
        }
    };
    if let Some(path) = &args.save_operator {
        write_operator(&op, path)?;
    }
    let set = match args.set {
        SetArg::S1 => SampleSet::S1 {
            n: args.n,
            kappa: args.kappa,
        },
        SetArg::S2 => SampleSet::S2 {
            n: args.n,
            kappa: args.kappa,
        },
        SetArg::Lowrank => SampleSet::LowRank(RankVector::uniform(args.rank, op.input_shape().len())?),
    };
    let estimate = with_threads(args.threads.unwrap_or(0), || {
        estimate_distortion(&op, &set, args.samples, args.seed, Execution::Parallel)
    })?;
    let out = json!({
        "operator": op.variant_name(),
        "input_shape": op.input_shape(),
        "output_length": op.output_length(),
        "storage_entries": op.storage_footprint(),
        "estimate": estimate,
    });
    emit(None, &(serde_json::to_string_pretty(&out)? + "\n"))
}

fn bounds(which: BoundsCommand) -> Result<()> {
    let value = match which {
        BoundsCommand::M {
            formula,
            delta,
            r,
            d,
            n,
            kappa,
            eta,
            m,
            c,
            c1,
            c2,
            c_log,
        } => {
            let inputs = BoundInputs {
                delta,
                r,
                d,
                n,
                kappa,
                eta,
                m,
            };
            let constants = BoundConstants { c, c1, c2, c_log };
            serde_json::to_value(eval_m_bound(formula, &inputs, &constants)?)?
        }
        BoundsCommand::Covering { params, t } => {
            let set = params.covering_set()?;
            let ln = eval_covering_bound(&set, t)?;
            json!({ "set": set, "t": t, "ln_covering_bound": ln })
        }
        BoundsCommand::Dudley { params } => {
            let set = params.covering_set()?;
            json!({ "set": set, "dudley_integral": dudley_estimate(&set)?, "abs_tolerance": 1e-6 })
        }
    };
    emit(None, &(serde_json::to_string_pretty(&value)? + "\n"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Audit(args) => audit(args),
        Command::Bounds { which } => bounds(which),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
