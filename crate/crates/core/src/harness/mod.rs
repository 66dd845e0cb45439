//! Monte-Carlo driver comparing PhaseCut with informed PhaseCut on paired
//! instances over a grid of noise levels.

pub mod config;
pub mod verify;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    absorb_mean_phases, generate_instance, pseudo_inverse, recover_signal, GenerationConfig,
    ProblemInstance,
};
use crate::numeric::{AngleVector, ComplexVector, RngSeed, RNG_NAME, SEED_MIX_NAME};
use crate::priors::PhasePrecision;
use crate::problem::{build_m, build_q, homogenize, qcqp_objective};
use crate::solvers::{estimate_phases, extract_phases, greedy_coordinate_solve, BcdSettings};

pub use config::{default_sigma_grid, ExperimentConfig, Method, PriorSpec};

/// Smallest σ_n² used when a nonzero prior is combined with noiseless data.
/// At σ_n² = 0 the prior block of Q vanishes and the informed solver would
/// silently reduce to plain PhaseCut.
pub const INFORMED_SIGMA_FLOOR: f64 = 1e-8;

const FALLBACK_SWEEPS: usize = 1000;
const FALLBACK_TOL: f64 = 1e-10;

pub const CSV_COLUMNS: [&str; 9] = [
    "sigma_n_sq",
    "method",
    "trial_index",
    "correlation",
    "objective",
    "sweeps",
    "rank1_gap",
    "converged",
    "seed",
];

pub const SUMMARY_COLUMNS: [&str; 5] = [
    "sigma_n_sq",
    "method",
    "mean_correlation",
    "std_correlation",
    "n_trials",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub sigma_n_sq: f64,
    pub method: Method,
    pub trial_index: usize,
    pub correlation: f64,
    pub objective: f64,
    pub sweeps: usize,
    pub rank1_gap: f64,
    pub converged: bool,
    pub seed: RngSeed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sigma_n_sq: f64,
    pub method: Method,
    pub mean_correlation: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single trial.
    pub std_correlation: f64,
    pub n_trials: usize,
}

/// Records in deterministic order (σ_n² ascending, trial, method in config
/// order) plus the number of runs that hit a solver failure.
#[derive(Debug, Clone)]
pub struct ExperimentResults {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub solver_failures: usize,
}

/// One method's reconstruction of one instance.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub x_hat: ComplexVector,
    pub phi: ComplexVector,
    pub objective: f64,
    pub sweeps: usize,
    pub rank1_gap: f64,
    pub converged: bool,
    /// Set when the BCD solver failed and the phases came from a greedy
    /// descent started at the all-ones vector.
    pub solver_failed: bool,
}

/// `|x̂ᴴx| / (‖x̂‖ ‖x‖)`.
pub fn normalized_correlation(x_hat: &ComplexVector, x_true: &ComplexVector) -> Result<f64> {
    if x_hat.len() != x_true.len() {
        return Err(Error::Dimension(format!(
            "x_hat has length {}, x_true has length {}",
            x_hat.len(),
            x_true.len()
        )));
    }
    let (na, nb) = (x_hat.norm(), x_true.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain(
            "normalized correlation of a zero vector".into(),
        ));
    }
    Ok((x_hat.dotc(x_true).norm() / (na * nb)).min(1.0))
}

/// Solves one instance with the given phase precision. Mean phases of the
/// precision are folded into the measurement matrix first.
pub fn reconstruct(
    instance: &ProblemInstance,
    precision: &PhasePrecision,
    settings: &BcdSettings,
) -> Result<Reconstruction> {
    let a_eff = absorb_mean_phases(&instance.a, precision.mean_phases())?;
    let pinv = pseudo_inverse(&a_eff);
    if pinv.rank_deficient {
        log::warn!("measurement matrix is rank deficient (rank {})", pinv.rank);
    }
    let m_mat = build_m(&instance.y, &a_eff, &pinv.matrix)?;

    let mut sigma_n_sq = instance.sigma_n_sq;
    if !precision.is_zero() && sigma_n_sq < INFORMED_SIGMA_FLOOR {
        log::warn!(
            "sigma_n_sq = {sigma_n_sq:e} with an informative prior; using {INFORMED_SIGMA_FLOOR:e}"
        );
        sigma_n_sq = INFORMED_SIGMA_FLOOR;
    }
    let centered = PhasePrecision::new(
        precision.matrix().clone(),
        AngleVector::zeros(precision.dim()),
    )?;
    let problem = build_q(&m_mat, &centered, sigma_n_sq)?;

    let (phi, objective, sweeps, rank1_gap, converged, solver_failed) =
        match estimate_phases(&problem, settings) {
            Ok(est) => (
                est.phi,
                est.objective,
                est.solution.sweeps,
                est.solution.rank1_gap,
                est.solution.converged,
                false,
            ),
            Err(Error::SolverFailure { reason, sweeps, .. }) => {
                log::warn!("BCD failed after {sweeps} sweeps ({reason}); using greedy descent");
                let ones =
                    ComplexVector::from_element(problem.m_dim() + 1, Complex64::new(1.0, 0.0));
                let refined =
                    greedy_coordinate_solve(&problem, &ones, FALLBACK_SWEEPS, FALLBACK_TOL)?;
                let phi = extract_phases(&refined.u)?;
                let objective = qcqp_objective(&homogenize(&phi), &problem)?;
                (phi, objective, sweeps, f64::NAN, false, true)
            }
            Err(e) => return Err(e),
        };

    let x_hat = recover_signal(&phi, &instance.y, &pinv.matrix)?;
    Ok(Reconstruction {
        x_hat,
        phi,
        objective,
        sweeps,
        rank1_gap,
        converged,
        solver_failed,
    })
}

/// The instance behind trial `trial_index` at noise level `sigma_n_sq`. The
/// seed depends only on the master seed and the trial index, so a trial sees
/// the same instance across the σ_n² grid up to the noise scale.
pub fn trial_instance(
    config: &ExperimentConfig,
    sigma_n_sq: f64,
    trial_index: usize,
) -> Result<ProblemInstance> {
    let gen = GenerationConfig {
        m: config.m,
        k: config.k,
        sigma_n_sq,
        phases: config.prior_spec.phase_source(config.m)?,
        seed: config.master_seed.derive(trial_index as u64),
    };
    generate_instance(&gen)
}

/// One record per configured method, all computed on the same instance.
pub fn run_trial(
    config: &ExperimentConfig,
    sigma_n_sq: f64,
    trial_index: usize,
) -> Result<Vec<TrialRecord>> {
    Ok(run_trial_counted(config, sigma_n_sq, trial_index)?.0)
}

fn run_trial_counted(
    config: &ExperimentConfig,
    sigma_n_sq: f64,
    trial_index: usize,
) -> Result<(Vec<TrialRecord>, usize)> {
    let instance = trial_instance(config, sigma_n_sq, trial_index)?;
    let informed = config.prior_spec.precision(config.m)?;
    let mut records = Vec::with_capacity(config.methods.len());
    let mut failures = 0;
    for &method in &config.methods {
        let precision = match method {
            Method::Phasecut => PhasePrecision::zeros(config.m),
            Method::InformedPhasecut => informed.clone(),
        };
        let rec = reconstruct(&instance, &precision, &config.solver)?;
        failures += usize::from(rec.solver_failed);
        records.push(TrialRecord {
            sigma_n_sq,
            method,
            trial_index,
            correlation: normalized_correlation(&rec.x_hat, &instance.x_true)?,
            objective: rec.objective,
            sweeps: rec.sweeps,
            rank1_gap: rec.rank1_gap,
            converged: rec.converged,
            seed: instance.seed,
        });
    }
    Ok((records, failures))
}

/// Runs every (σ_n², trial) pair on a pool of `threads` workers. The record
/// order does not depend on the thread count.
pub fn run_trials(config: &ExperimentConfig, threads: usize) -> Result<ExperimentResults> {
    config.validate()?;
    let jobs: Vec<(f64, usize)> = config
        .sigma_n_sq_grid
        .iter()
        .flat_map(|&s| (0..config.trials).map(move |t| (s, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    let total = jobs.len();
    let outcomes: Vec<Result<(Vec<TrialRecord>, usize)>> = pool.install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(n, &(s, t))| {
                let out = run_trial_counted(config, s, t);
                log::info!("finished sigma_n_sq = {s}, trial {t} ({}/{total})", n + 1);
                out
            })
            .collect()
    });

    let mut records = Vec::with_capacity(total * config.methods.len());
    let mut solver_failures = 0;
    for outcome in outcomes {
        let (recs, failures) = outcome?;
        records.extend(recs);
        solver_failures += failures;
    }
    let summary = summarize_records(&records);
    Ok(ExperimentResults {
        records,
        summary,
        solver_failures,
    })
}

/// Full run: checks that both output files can be created, computes, then
/// writes the per-trial CSV and `<out>.summary.csv`.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<ExperimentResults> {
    config.validate()?;
    let out = &config.output_path;
    let summary_path = summary_path_for(out);
    let records_file = File::create(out)?;
    let summary_file = File::create(&summary_path)?;

    let results = run_trials(config, threads)?;
    write_records(
        BufWriter::new(records_file),
        config.master_seed,
        &results.records,
    )?;
    write_summary(BufWriter::new(summary_file), &results.summary)?;
    Ok(results)
}

/// `<out>.summary.csv` next to `<out>`.
pub fn summary_path_for(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".summary.csv");
    PathBuf::from(name)
}

/// Per-(σ_n², method) statistics. Rows follow the first appearance of each
/// σ_n² and method in `records`.
pub fn summarize_records(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(f64, Method)> = Vec::new();
    for r in records {
        if !keys
            .iter()
            .any(|&(s, m)| s.to_bits() == r.sigma_n_sq.to_bits() && m == r.method)
        {
            keys.push((r.sigma_n_sq, r.method));
        }
    }
    keys.sort_by(|a, b| a.0.total_cmp(&b.0));
    keys.into_iter()
        .map(|(s, method)| {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.sigma_n_sq.to_bits() == s.to_bits() && r.method == method)
                .map(|r| r.correlation)
                .collect();
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                sigma_n_sq: s,
                method,
                mean_correlation: mean,
                std_correlation: std,
                n_trials: n,
            }
        })
        .collect()
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn unix_timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes the per-trial table. The first line carries the RNG metadata, the
/// second a `# timestamp=` line that differs between otherwise identical runs.
pub fn write_records<W: Write>(
    mut out: W,
    master_seed: RngSeed,
    records: &[TrialRecord],
) -> Result<()> {
    writeln!(
        out,
        "# priorcut {} rng={RNG_NAME} seed_mix={SEED_MIX_NAME} master_seed={master_seed}",
        env!("CARGO_PKG_VERSION")
    )?;
    writeln!(out, "# timestamp={}", unix_timestamp())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record([
            fmt_float(r.sigma_n_sq),
            r.method.name().to_string(),
            r.trial_index.to_string(),
            fmt_float(r.correlation),
            fmt_float(r.objective),
            r.sweeps.to_string(),
            fmt_float(r.rank1_gap),
            r.converged.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, summary: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for row in summary {
        w.write_record([
            fmt_float(row.sigma_n_sq),
            row.method.name().to_string(),
            fmt_float(row.mean_correlation),
            fmt_float(row.std_correlation),
            row.n_trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(value: &str, column: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("record {line}: cannot parse {column} = {value:?}")))
}

/// Reads a per-trial CSV written by [`write_records`]. Lines starting with
/// `#` are skipped.
pub fn read_records<R: std::io::Read>(input: R) -> Result<Vec<TrialRecord>> {
    let body: String = BufReader::new(input)
        .lines()
        .filter(|l| !matches!(l, Ok(s) if s.starts_with('#')))
        .map(|l| l.map(|s| s + "\n"))
        .collect::<std::io::Result<_>>()?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Config(format!(
            "unexpected CSV header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut records = Vec::new();
    for (n, row) in reader.records().enumerate() {
        let row = row?;
        let f = |i: usize| row.get(i).unwrap_or("");
        let method = Method::parse(f(1))
            .ok_or_else(|| Error::Config(format!("record {n}: unknown method {:?}", f(1))))?;
        records.push(TrialRecord {
            sigma_n_sq: parse_field(f(0), "sigma_n_sq", n)?,
            method,
            trial_index: parse_field(f(2), "trial_index", n)?,
            correlation: parse_field(f(3), "correlation", n)?,
            objective: parse_field(f(4), "objective", n)?,
            sweeps: parse_field(f(5), "sweeps", n)?,
            rank1_gap: parse_field(f(6), "rank1_gap", n)?,
            converged: parse_field(f(7), "converged", n)?,
            seed: RngSeed(parse_field(f(8), "seed", n)?),
        });
    }
    Ok(records)
}

/// Fixed-width text table of a summary, as printed by `priorcut summarize`.
pub fn format_summary_table(summary: &[SummaryRow]) -> String {
    let mut s = format!(
        "{:>12}  {:<18}  {:>8}  {:>8}  {:>6}\n",
        "sigma_n_sq", "method", "mean", "std", "n"
    );
    for row in summary {
        s += &format!(
            "{:>12.4}  {:<18}  {:>8.4}  {:>8.4}  {:>6}\n",
            row.sigma_n_sq,
            row.method.name(),
            row.mean_correlation,
            row.std_correlation,
            row.n_trials
        );
    }
    s
}
