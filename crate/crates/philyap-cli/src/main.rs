//! Thin command line over the `philyap` library: evaluate phi-functions,
//! run benchmark sweeps, integrate Riccati problems, derive theta
//! thresholds.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or parse error.
//! `PHILYAP_SEED` overrides the default seed 42 (explicit flags and config
//! file entries still win).

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use philyap::gallery;
use philyap::integrators::Scheme;
use philyap::kernel::{phi_lyap_with, phi_scaled_with, PhiOptions};
use philyap::matio;
use philyap::matrix::DenseMatrix;
use philyap::report::{
    run_integrate_bench, run_phi_bench, BenchConfig, IntegrateConfig, SuiteSelector,
};
use philyap::{Error, Result};

#[derive(Parser)]
#[command(name = "philyap-cli", version, about = "Lyapunov operator phi-functions")]
struct Cli {
    /// Key=value config file supplying defaults (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate phi_l(t L_A)[Q] and write the matrix in the plain-text format.
    Phi(PhiArgs),
    /// Sweep a suite, reporting error/products/params per (case, l) as CSV + JSON.
    Bench(BenchArgs),
    /// Integrate the advection-diffusion Riccati problem on a step ladder.
    Integrate(IntegrateArgs),
    /// Derive a backward-error threshold theta_d.
    Theta(ThetaArgs),
}

#[derive(Args)]
struct PhiArgs {
    /// Gallery operator name (structured-suite case, `laplacian1d`, or `advdiff`).
    #[arg(long, conflicts_with = "matrix")]
    gallery: Option<String>,
    /// Matrix file for A instead of a gallery name.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Matrix file for Q; defaults to a seeded random symmetric matrix.
    #[arg(long)]
    q: Option<PathBuf>,
    /// Size for gallery operators (grid points per dimension for `advdiff`).
    #[arg(long)]
    n: Option<usize>,
    /// Scale factor for `laplacian1d`.
    #[arg(long)]
    scale: Option<f64>,
    /// phi index l >= 1.
    #[arg(long)]
    l: usize,
    /// Optional time scaling: computes phi_l(t L_A)[Q].
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// `structured` or `laplacian`.
    #[arg(long, default_value = "structured")]
    suite: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    l_max: Option<usize>,
    /// `on` or `off`.
    #[arg(long)]
    oracle: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Timing repetitions per row (median after one warm-up).
    #[arg(long)]
    reps: Option<usize>,
    /// CSV output path; a JSON mirror lands next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long, default_value = "exprb2")]
    scheme: String,
    #[arg(long)]
    n0: Option<usize>,
    /// Single fixed step count.
    #[arg(long, conflicts_with = "steps_ladder")]
    steps: Option<usize>,
    /// Step-count ladder `lo..hi` over powers of two, e.g. `16..512`.
    #[arg(long)]
    steps_ladder: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Indicator band for B along x, `lo,hi`.
    #[arg(long)]
    b_band: Option<String>,
    /// Indicator band for C along x, `lo,hi`.
    #[arg(long)]
    c_band: Option<String>,
    /// Step count of the exprb3 self-reference run.
    #[arg(long)]
    reference_steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ThetaArgs {
    #[arg(long)]
    degree: usize,
    /// Backward-error tolerance; defaults to 2^-53.
    #[arg(long)]
    tol: Option<f64>,
}

/// Key=value fallback settings: flag > config file > PHILYAP_SEED (seed
/// only) > built-in default.
struct Settings {
    values: HashMap<String, String>,
}

impl Settings {
    fn load(path: &Option<PathBuf>) -> Result<Self> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (idx, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (key, value) = line.split_once('=').ok_or(Error::Parse {
                    line: idx + 1,
                    message: "expected key=value".into(),
                })?;
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(Self { values })
    }

    fn get<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw.parse::<T>().map_err(|_| {
                Error::InvalidArgument(format!("config key `{key}` has unparsable value `{raw}`"))
            }),
            None => Ok(default),
        }
    }

    fn seed(&self, flag: Option<u64>) -> Result<u64> {
        let env_default = std::env::var("PHILYAP_SEED")
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
            .unwrap_or(42);
        self.get("seed", flag, env_default)
    }
}

fn parse_band(spec: &str) -> Result<(f64, f64)> {
    let (lo, hi) = spec
        .split_once(',')
        .ok_or_else(|| Error::InvalidArgument(format!("band `{spec}` must be `lo,hi`")))?;
    let lo: f64 = lo.trim().parse().map_err(|_| {
        Error::InvalidArgument(format!("bad band bound `{lo}`"))
    })?;
    let hi: f64 = hi.trim().parse().map_err(|_| {
        Error::InvalidArgument(format!("bad band bound `{hi}`"))
    })?;
    Ok((lo, hi))
}

fn parse_ladder(spec: &str) -> Result<Vec<usize>> {
    let (lo, hi) = spec
        .split_once("..")
        .ok_or_else(|| Error::InvalidArgument(format!("ladder `{spec}` must be `lo..hi`")))?;
    let lo: usize =
        lo.parse().map_err(|_| Error::InvalidArgument(format!("bad ladder bound `{lo}`")))?;
    let hi: usize =
        hi.parse().map_err(|_| Error::InvalidArgument(format!("bad ladder bound `{hi}`")))?;
    if lo == 0 || hi < lo {
        return Err(Error::InvalidArgument(format!("empty ladder `{spec}`")));
    }
    let mut steps = Vec::new();
    let mut n = lo;
    while n <= hi {
        steps.push(n);
        n *= 2;
    }
    Ok(steps)
}

fn gallery_matrix(name: &str, n: usize, scale: f64, seed: u64) -> Result<DenseMatrix> {
    match name {
        "laplacian1d" => Ok(gallery::laplacian_1d(n, scale)),
        "advdiff" => Ok(gallery::fdm_advection_diffusion(n)),
        other => gallery::structured_suite(n.max(2), seed)
            .into_iter()
            .find(|c| c.name == other)
            .map(|c| c.a)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown gallery case `{other}`"))),
    }
}

fn cmd_phi(args: PhiArgs, settings: &Settings) -> Result<()> {
    let seed = settings.seed(args.seed)?;
    let n = settings.get("n", args.n, 8)?;
    let scale = settings.get("scale", args.scale, 1.0)?;

    let a = match (&args.gallery, &args.matrix) {
        (Some(name), None) => gallery_matrix(name, n, scale, seed)?,
        (None, Some(path)) => matio::read_matrix_file(path)?,
        _ => {
            return Err(Error::InvalidArgument(
                "exactly one of --gallery or --matrix is required".into(),
            ))
        }
    };
    let q = match &args.q {
        Some(path) => matio::read_matrix_file(path)?,
        None => gallery::random_symmetric(a.rows(), seed),
    };

    let options = PhiOptions { seed, ..PhiOptions::default() };
    let result = match args.t {
        Some(t) => phi_scaled_with(&a, &q, args.l, t, &options)?,
        None => phi_lyap_with(&a, &q, args.l, &options)?,
    };

    eprintln!(
        "m = {}, s = {}, alpha* = {:.6e}, products = {} (predicted {})",
        result.params.m,
        result.params.s,
        result.params.alpha_star,
        result.products_used,
        result.params.predicted_products
    );

    let text = matio::matrix_to_string(result.phi(args.l));
    match &args.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs, settings: &Settings) -> Result<()> {
    let seed = settings.seed(args.seed)?;
    let l_max = settings.get("l_max", args.l_max, 8)?;
    let oracle_flag = settings.get("oracle", args.oracle, "on".to_string())?;
    let oracle = match oracle_flag.as_str() {
        "on" => true,
        "off" => false,
        other => {
            return Err(Error::InvalidArgument(format!("--oracle takes on|off, got `{other}`")))
        }
    };
    let reps = settings.get("reps", args.reps, 5)?;

    let suite = match args.suite.as_str() {
        "structured" => SuiteSelector::Structured { n: settings.get("n", args.n, 8)? },
        "laplacian" => SuiteSelector::Laplacian {
            n: settings.get("n", args.n, 100)?,
            scale: settings.get("scale", args.scale, 2500.0)?,
        },
        other => return Err(Error::InvalidArgument(format!("unknown suite `{other}`"))),
    };

    log::info!("bench: seed = {seed}, l_max = {l_max}, oracle = {oracle}");
    let config = BenchConfig { suite, l_max, oracle, seed, timing_reps: reps };
    let report = run_phi_bench(&config)?;
    report.write_files(&args.out)?;
    eprintln!("wrote {} rows to {}", report.rows.len(), args.out.display());
    Ok(())
}

fn cmd_integrate(args: IntegrateArgs, settings: &Settings) -> Result<()> {
    let seed = settings.seed(args.seed)?;
    let scheme = Scheme::from_str(&args.scheme)?;
    let steps = match (&args.steps, &args.steps_ladder) {
        (Some(n), None) => vec![*n],
        (None, Some(spec)) => parse_ladder(spec)?,
        (None, None) => IntegrateConfig::default().steps,
        _ => unreachable!("clap conflicts_with"),
    };
    let defaults = IntegrateConfig::default();
    let config = IntegrateConfig {
        scheme,
        n0: settings.get("n0", args.n0, defaults.n0)?,
        steps,
        t_end: settings.get("t_end", args.t_end, defaults.t_end)?,
        b_band: match &args.b_band {
            Some(s) => parse_band(s)?,
            None => defaults.b_band,
        },
        c_band: match &args.c_band {
            Some(s) => parse_band(s)?,
            None => defaults.c_band,
        },
        seed,
        reference_steps: settings.get(
            "reference_steps",
            args.reference_steps,
            defaults.reference_steps,
        )?,
    };

    let outcome = run_integrate_bench(&config)?;
    outcome.report.write_files(&args.out)?;
    for row in &outcome.report.rows {
        eprintln!("{}: error {:.6e} ({} products)", row.case, row.error, row.products);
    }
    if let Some(slope) = outcome.slope {
        eprintln!("convergence slope: {slope:.3}");
    }
    Ok(())
}

fn cmd_theta(args: ThetaArgs, settings: &Settings) -> Result<()> {
    let tol = settings.get("tol", args.tol, 2f64.powi(-53))?;
    let theta = philyap::derive_theta(args.degree, tol)?;
    println!("{theta:.6e}");
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Parse { .. } | Error::InvalidArgument(_) | Error::Io(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let settings = match Settings::load(&cli.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match cli.command {
        Command::Phi(args) => cmd_phi(args, &settings),
        Command::Bench(args) => cmd_bench(args, &settings),
        Command::Integrate(args) => cmd_integrate(args, &settings),
        Command::Theta(args) => cmd_theta(args, &settings),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
