//! Benchmark harness and report serialization.
//!
//! Reports carry one row per (case, l) or per (scheme, step count), a fixed
//! CSV column order `case,l_or_scheme,error,products,m,s,wall_time`, and a
//! JSON mirror with run metadata and the oracle identity per row. Errors are
//! always the 1-norm relative error against the stated oracle.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::gallery::{self, Axis};
use crate::integrators::{convergence_slope, integrate_dre, DREProblem, Scheme};
use crate::kernel::{phi_lyap_with, PhiOptions};
use crate::matrix::{relative_error, DenseMatrix};
use crate::oracle;

pub const CSV_HEADER: &str = "case,l_or_scheme,error,products,m,s,wall_time";

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub tolerance: f64,
    pub timestamp_unix: u64,
    pub version: String,
}

impl RunMetadata {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            tolerance: 2f64.powi(-53),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub case: String,
    pub l_or_scheme: String,
    pub error: f64,
    pub products: u64,
    pub m: usize,
    pub s: u32,
    pub wall_time: f64,
    /// Which reference produced `error`; not part of the CSV schema.
    pub oracle: String,
}

impl ReportRow {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{:.6e},{},{},{},{:.6e}",
            self.case, self.l_or_scheme, self.error, self.products, self.m, self.s, self.wall_time
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub metadata: RunMetadata,
    pub rows: Vec<ReportRow>,
}

impl RunReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `path` as CSV and a sibling `.json` mirror.
    pub fn write_files<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv())?;
        std::fs::write(path.with_extension("json"), self.to_json())?;
        Ok(())
    }
}

/// Which problem family a phi bench sweeps.
#[derive(Debug, Clone)]
pub enum SuiteSelector {
    /// The structured operator gallery at dimension `n`.
    Structured { n: usize },
    /// The scaled 1-D Laplacian with a seeded random symmetric `Q`.
    Laplacian { n: usize, scale: f64 },
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub suite: SuiteSelector,
    /// Sweep `l = 1..=l_max`.
    pub l_max: usize,
    /// Compare against an oracle where one is available.
    pub oracle: bool,
    pub seed: u64,
    /// Timing repetitions (median after one warm-up).
    pub timing_reps: usize,
}

impl BenchConfig {
    pub fn structured(n: usize, l_max: usize, seed: u64) -> Self {
        Self { suite: SuiteSelector::Structured { n }, l_max, oracle: true, seed, timing_reps: 5 }
    }

    pub fn laplacian(n: usize, scale: f64, l_max: usize, seed: u64) -> Self {
        Self {
            suite: SuiteSelector::Laplacian { n, scale },
            l_max,
            oracle: true,
            seed,
            timing_reps: 5,
        }
    }
}

fn median_time<F: FnMut()>(reps: usize, mut f: F) -> f64 {
    f(); // warm-up
    let mut samples: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let start = Instant::now();
            f();
            start.elapsed().as_secs_f64()
        })
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[samples.len() / 2]
}

/// Reference for one bench case: the augmented Kronecker oracle where the
/// dense guard admits it, the spectral route for larger symmetric `A`,
/// nothing otherwise.
fn bench_reference(
    a: &DenseMatrix,
    q: &DenseMatrix,
    l: usize,
) -> Option<(DenseMatrix, &'static str)> {
    if a.rows() <= oracle::ORACLE_MAX_N {
        oracle::phi_reference(a, q, l).ok().map(|m| (m, "kron_taylor"))
    } else if a.asymmetry() <= 1e-12 {
        oracle::phi_symmetric_reference(a, q, l).ok().map(|m| (m, "spectral"))
    } else {
        None
    }
}

/// Sweeps the kernel over a suite, one row per (case, l), sorted by
/// (case, l) regardless of execution order.
pub fn run_phi_bench(config: &BenchConfig) -> Result<RunReport> {
    let cases: Vec<(String, DenseMatrix, DenseMatrix)> = match &config.suite {
        SuiteSelector::Structured { n } => gallery::structured_suite(*n, config.seed)
            .into_iter()
            .map(|c| (c.name, c.a, c.q))
            .collect(),
        SuiteSelector::Laplacian { n, scale } => {
            let a = gallery::laplacian_1d(*n, *scale);
            let q = gallery::random_symmetric(*n, config.seed);
            vec![("laplacian1d".to_string(), a, q)]
        }
    };

    let options = PhiOptions { seed: config.seed, ..PhiOptions::default() };
    let jobs: Vec<(usize, usize)> = (0..cases.len())
        .flat_map(|ci| (1..=config.l_max).map(move |l| (ci, l)))
        .collect();

    let rows: Vec<ReportRow> = jobs
        .par_iter()
        .map(|&(ci, l)| -> Result<Option<ReportRow>> {
            let (name, a, q) = &cases[ci];
            let result = phi_lyap_with(a, q, l, &options)?;
            let wall_time =
                median_time(config.timing_reps, || {
                    let _ = phi_lyap_with(a, q, l, &options);
                });
            let (error, oracle_name) = if config.oracle {
                match bench_reference(a, q, l) {
                    Some((reference, which)) => {
                        (relative_error(&reference, result.phi(l))?, which)
                    }
                    None => {
                        log::warn!(
                            "bench: no oracle available for case {name} at N = {}; skipping row",
                            a.rows()
                        );
                        return Ok(None);
                    }
                }
            } else {
                (f64::NAN, "none")
            };
            Ok(Some(ReportRow {
                case: name.clone(),
                l_or_scheme: l.to_string(),
                error,
                products: result.products_used,
                m: result.params.m,
                s: result.params.s,
                wall_time,
                oracle: oracle_name.to_string(),
            }))
        })
        .collect::<Result<Vec<Option<ReportRow>>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut rows = rows;
    rows.sort_by(|a, b| {
        (a.case.as_str(), a.l_or_scheme.parse::<usize>().unwrap_or(0))
            .cmp(&(b.case.as_str(), b.l_or_scheme.parse::<usize>().unwrap_or(0)))
    });

    Ok(RunReport { metadata: RunMetadata::new(config.seed), rows })
}

#[derive(Debug, Clone)]
pub struct IntegrateConfig {
    pub scheme: Scheme,
    /// Grid points per dimension of the advection-diffusion operator.
    pub n0: usize,
    /// Step counts to run; more than one forms a convergence ladder.
    pub steps: Vec<usize>,
    pub t_end: f64,
    /// Indicator band for `B` along x.
    pub b_band: (f64, f64),
    /// Indicator band for `C` along x.
    pub c_band: (f64, f64),
    pub seed: u64,
    /// Step count of the self-reference run (exprb3).
    pub reference_steps: usize,
}

impl Default for IntegrateConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Exprb2,
            n0: 10,
            steps: vec![16, 32, 64, 128, 256, 512],
            t_end: 0.05,
            b_band: (0.1, 0.3),
            c_band: (0.7, 0.9),
            seed: 42,
            reference_steps: 1 << 13,
        }
    }
}

/// The advection-diffusion Riccati test problem with indicator load vectors.
pub fn advection_diffusion_dre(n0: usize, b_band: (f64, f64), c_band: (f64, f64)) -> Result<DREProblem> {
    let a = gallery::fdm_advection_diffusion(n0);
    let b = gallery::load_vector_indicator(n0, Axis::X, b_band.0, b_band.1);
    let c = gallery::load_vector_indicator(n0, Axis::X, c_band.0, c_band.1);
    let n = n0 * n0;
    DREProblem::new(a, b, c, DenseMatrix::identity(n), 0.0)
}

/// Outcome of an integration sweep: the report rows plus the fitted
/// convergence slope when a ladder was run.
pub struct IntegrateOutcome {
    pub report: RunReport,
    pub slope: Option<f64>,
}

/// Runs the configured scheme over the step ladder against an exprb3
/// self-reference; rows are one per step count.
pub fn run_integrate_bench(config: &IntegrateConfig) -> Result<IntegrateOutcome> {
    let problem = advection_diffusion_dre(config.n0, config.b_band, config.c_band)?;
    let span = config.t_end - problem.t0;
    let reference = integrate_dre(
        &problem,
        Scheme::Exprb3,
        span / config.reference_steps as f64,
        config.t_end,
    )?;
    let reference_state = reference.final_state();

    let mut rows = Vec::new();
    let mut hs = Vec::new();
    let mut errors = Vec::new();
    for &steps in &config.steps {
        let h = span / steps as f64;
        let start = Instant::now();
        let run = integrate_dre(&problem, config.scheme, h, config.t_end)?;
        let wall_time = start.elapsed().as_secs_f64();
        let error = relative_error(reference_state, run.final_state())?;
        hs.push(h);
        errors.push(error);
        let (m, s) = run.first_params.unwrap_or((0, 0));
        rows.push(ReportRow {
            case: format!("dre_advdiff_n0{}_steps{steps}", config.n0),
            l_or_scheme: config.scheme.name().to_string(),
            error,
            products: run.products_used,
            m,
            s,
            wall_time,
            oracle: format!("exprb3_self_reference_{}", config.reference_steps),
        });
    }

    let slope = if hs.len() >= 2 { Some(convergence_slope(&hs, &errors)) } else { None };
    Ok(IntegrateOutcome { report: RunReport { metadata: RunMetadata::new(config.seed), rows }, slope })
}
