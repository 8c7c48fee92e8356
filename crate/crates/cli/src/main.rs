use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use kfp_core::experiments::{
    all_wsg_degrees, basin_sample, halfcircle_cut_wsg, lemma_wsg_threshold, multistable_census,
    search_nonzero_stable, sweep_to_csv, wsg_sweep, BasinOptions, Theorem42Constants,
};
use kfp_core::fixedpoint::{residual, twisted_state};
use kfp_core::stability::{analyze, find_negative_cut, EXHAUSTIVE_MAX_NODES};
use kfp_core::{Classification, CutSearch, ModelParams, Network, PhaseState};
use serde_json::{json, Value};

const RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "kfp",
    version,
    about = "Fixed points and stability of the Kuramoto model on networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a network as JSON.
    NetBuild {
        kind: NetKind,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Minimum degree kept by `random-dense`.
        #[arg(long)]
        floor: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a fixed point and search for a negative cut.
    Analyze {
        #[arg(long)]
        net: PathBuf,
        /// Phase state JSON, `{"theta": [...]}`.
        #[arg(long, conflicts_with = "twist", required_unless_present = "twist")]
        theta: Option<PathBuf>,
        /// Use the q-twisted state instead of a file.
        #[arg(long, allow_hyphen_values = true)]
        twist: Option<i64>,
        /// Cut search; exhaustive up to the size cap, greedy beyond it, when omitted.
        #[arg(long)]
        cuts: Option<CutMode>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run a reproduction experiment.
    Repro {
        target: Target,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        q: i64,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Network file for `basin` and `search-stable`.
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NetKind {
    Complete,
    Wsg,
    EightNode,
    RingTree,
    RandomDense,
}

#[derive(Clone, Copy, ValueEnum)]
enum CutMode {
    Exhaustive,
    Greedy,
    Off,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    WsgSweep,
    LemmaThreshold,
    Halfcut,
    T42Constants,
    Basin,
    SearchStable,
    Census,
}

/// Usage or input error; reported on stderr with exit status 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn required<T>(value: Option<T>, flag: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure(format!("--{flag} is required here")))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn json_only(format: Format, what: &str) -> Result<(), Failure> {
    match format {
        Format::Json => Ok(()),
        Format::Csv => Err(Failure(format!("csv output is not available for {what}"))),
    }
}

/// Writes one payload line; a closed pipe downstream is not an error.
fn write_out(text: &str) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    match writeln!(stdout, "{}", text.trim_end_matches('\n')).and_then(|()| stdout.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit(value: &Value) -> Result<(), Failure> {
    write_out(&value.to_string())
}

fn net_build(
    kind: NetKind,
    n: Option<usize>,
    d: Option<usize>,
    m: Option<usize>,
    floor: Option<usize>,
    seed: u64,
    out: Option<PathBuf>,
) -> Outcome {
    let net = match kind {
        NetKind::Complete => Network::complete(required(n, "n")?)?,
        NetKind::Wsg => Network::wsg(required(n, "n")?, required(d, "d")?)?,
        NetKind::EightNode => Network::eight_node_example(),
        NetKind::RingTree => Network::ring_tree(required(m, "m")?)?,
        NetKind::RandomDense => {
            Network::random_min_degree(required(n, "n")?, required(floor, "floor")?, seed)?
        }
    };
    let text = net.to_json();
    match out {
        Some(path) => fs::write(&path, text + "\n")
            .map_err(|e| Failure(format!("{}: {e}", path.display())))?,
        None => write_out(&text)?,
    }
    Ok(true)
}

fn run_analyze(
    net: &Path,
    theta: Option<PathBuf>,
    twist: Option<i64>,
    cuts: Option<CutMode>,
    format: Format,
) -> Outcome {
    json_only(format, "analyze")?;
    let net = Network::from_json(&read(net)?)?;
    let state = match (theta, twist) {
        (Some(path), _) => PhaseState::from_json(&read(&path)?)?,
        (None, Some(q)) => twisted_state(net.n(), q),
        (None, None) => return Err(Failure("give --theta or --twist".into())),
    };
    let res = residual(&state, &ModelParams::homogeneous(net.n()), &net)?;
    let res_norm = res.iter().fold(0.0_f64, |a, r| a.max(r.abs()));
    if res_norm.is_nan() || res_norm >= RESIDUAL_LIMIT {
        return Err(Failure(format!(
            "not a fixed point: residual max-norm {res_norm:e} >= {RESIDUAL_LIMIT:e}"
        )));
    }
    let report = analyze(&state, &net)?;
    let mode = match cuts {
        Some(CutMode::Exhaustive) => Some(CutSearch::Exhaustive),
        Some(CutMode::Greedy) => Some(CutSearch::Greedy),
        Some(CutMode::Off) => None,
        None if net.n() <= EXHAUSTIVE_MAX_NODES => Some(CutSearch::Exhaustive),
        None => Some(CutSearch::Greedy),
    };
    let certificate = match mode {
        Some(mode) => find_negative_cut(&state, &net, mode)?,
        None => None,
    };
    emit(&json!({
        "residual_norm": res_norm,
        "lambda_max": report.eigenvalues.first(),
        "lambda2": report.lambda2(),
        "report": report,
        "certificate": certificate,
    }))?;
    Ok(report.classification == Classification::Stable)
}

fn network_arg(net: Option<PathBuf>, n: Option<usize>) -> Result<Network, Failure> {
    match (net, n) {
        (Some(path), _) => Ok(Network::from_json(&read(&path)?)?),
        (None, Some(n)) => Ok(Network::complete(n)?),
        (None, None) => Err(Failure("give --net or --n (complete network)".into())),
    }
}

#[allow(clippy::too_many_arguments)]
fn repro(
    target: Target,
    n: Option<usize>,
    d: Option<usize>,
    q: i64,
    m: Option<usize>,
    trials: Option<usize>,
    seed: u64,
    net: Option<PathBuf>,
    format: Format,
) -> Outcome {
    match target {
        Target::WsgSweep => {
            let n = n.unwrap_or(100);
            let degrees = d.map_or_else(|| all_wsg_degrees(n), |d| vec![d]);
            let rows = wsg_sweep(n, q, &degrees)?;
            match format {
                Format::Json => emit(&serde_json::to_value(&rows)?)?,
                Format::Csv => write_out(&sweep_to_csv(&rows))?,
            }
        }
        Target::LemmaThreshold => {
            json_only(format, "lemma-threshold")?;
            emit(&serde_json::to_value(lemma_wsg_threshold()?)?)?;
        }
        Target::Halfcut => {
            json_only(format, "halfcut")?;
            let n = n.unwrap_or(100);
            let degrees = d.map_or_else(|| all_wsg_degrees(n), |d| vec![d]);
            let rows = degrees
                .into_iter()
                .map(|d| {
                    let cut = halfcircle_cut_wsg(n, d)?;
                    Ok(json!({ "d": d, "exact": cut.exact, "limit": cut.limit }))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            emit(&Value::Array(rows))?;
        }
        Target::T42Constants => {
            json_only(format, "t42-constants")?;
            let constants = Theorem42Constants::compute()?;
            let checks = constants.checks();
            let pass = checks.iter().all(|c| c.pass);
            emit(&json!({ "constants": constants, "checks": checks, "pass": pass }))?;
            return Ok(pass);
        }
        Target::Basin => {
            json_only(format, "basin")?;
            let net = network_arg(net, n)?;
            let defaults = BasinOptions::default();
            let opts = BasinOptions {
                trials: trials.unwrap_or(defaults.trials),
                seed,
                ..defaults
            };
            write_out(&basin_sample(&net, opts)?.record.to_json())?;
        }
        Target::SearchStable => {
            json_only(format, "search-stable")?;
            let net = network_arg(net, n)?;
            let found = search_nonzero_stable(&net, trials.unwrap_or(500), seed)?;
            emit(&serde_json::to_value(&found)?)?;
        }
        Target::Census => {
            json_only(format, "census")?;
            let census = multistable_census(m.unwrap_or(2), trials.unwrap_or(200), seed)?;
            emit(&serde_json::to_value(&census)?)?;
        }
    }
    Ok(true)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("KFP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Failure(format!(
            "KFP_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match cli.command {
        Command::NetBuild {
            kind,
            n,
            d,
            m,
            floor,
            seed,
            out,
        } => net_build(kind, n, d, m, floor, seed, out),
        Command::Analyze {
            net,
            theta,
            twist,
            cuts,
            format,
        } => run_analyze(&net, theta, twist, cuts, format),
        Command::Repro {
            target,
            n,
            d,
            q,
            m,
            trials,
            seed,
            net,
            format,
        } => repro(target, n, d, q, m, trials, seed, net, format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("kfp: {msg}");
            ExitCode::from(2)
        }
    }
}
