//! Acceptance suite. Criteria run one after another so their runtimes do not
//! interfere, and each prints one PASS/FAIL line.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use rand::Rng;

use priorcut::harness::{run_trial, run_trials, ExperimentConfig, Method, PriorSpec, SummaryRow};
use priorcut::model::{generate_instance, pseudo_inverse, GenerationConfig, PhaseSource};
use priorcut::numeric::{
    circular_gaussian, AngleVector, ComplexMatrix, ComplexVector, RealMatrix, RngSeed,
};
use priorcut::priors::{mahalanobis_phase_distance, precision_from_mvm, MvmParams, PhasePrecision};
use priorcut::problem::{build_m, build_q, quadratic_form, LiftedProblem};
use priorcut::solvers::{
    bcd_lifting_solve, brute_force_oracle, coordinate_step, estimate_phases, extract_phases,
    leading_eigenvector, BcdSettings,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn run_criterion(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let passed = out.passed && in_time;
    let timing = if in_time {
        format!("{:.1} s", elapsed.as_secs_f64())
    } else {
        format!(
            "{:.1} s exceeds budget {:.0} s",
            elapsed.as_secs_f64(),
            budget.as_secs_f64()
        )
    };
    println!(
        "acceptance {id} {name}: {} ({}; {timing})",
        if passed { "PASS" } else { "FAIL" },
        out.detail
    );
    passed
}

fn instance_problem(
    m: usize,
    k: usize,
    s2: f64,
    phases: PhaseSource,
    precision: &PhasePrecision,
    seed: RngSeed,
) -> (LiftedProblem, ComplexMatrix) {
    let inst = generate_instance(&GenerationConfig {
        m,
        k,
        sigma_n_sq: s2,
        phases,
        seed,
    })
    .unwrap();
    let pinv = pseudo_inverse(&inst.a).matrix;
    let mm = build_m(&inst.y, &inst.a, &pinv).unwrap();
    (build_q(&mm, precision, s2).unwrap(), mm)
}

fn gaps(summary: &[SummaryRow]) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for row in summary
        .iter()
        .filter(|r| r.method == Method::InformedPhasecut)
    {
        let plain = summary
            .iter()
            .find(|r| r.method == Method::Phasecut && r.sigma_n_sq == row.sigma_n_sq)
            .expect("both methods run at every grid point");
        out.push((row.sigma_n_sq, row.mean_correlation, plain.mean_correlation));
    }
    out
}

fn format_means(g: &[(f64, f64, f64)]) -> String {
    g.iter()
        .map(|(s, inf, pl)| format!("σ²={s}: informed {inf:.3} plain {pl:.3}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Log-density differences equal negated Mahalanobis differences.
fn log_density_equivalence() -> Outcome {
    let mut rng = RngSeed(1).rng();
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let m = rng.random_range(2..=8);
        let kappa: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..=3.0)).collect();
        let mut delta = RealMatrix::zeros(m, m);
        for i in 0..m {
            for k in i + 1..m {
                let v = rng.random_range(-0.3..=0.3);
                delta[(i, k)] = v;
                delta[(k, i)] = v;
            }
        }
        // κᵀc(θ) − c(θ)ᵀΔc(θ) − s(θ)ᵀΔs(θ), evaluated directly
        let log_density = |theta: &[f64]| {
            let mut v = 0.0;
            for i in 0..m {
                v += kappa[i] * theta[i].cos();
                for k in 0..m {
                    v -= delta[(i, k)]
                        * (theta[i].cos() * theta[k].cos() + theta[i].sin() * theta[k].sin());
                }
            }
            v
        };
        let precision = precision_from_mvm(
            &MvmParams::new(kappa.clone(), delta.clone(), AngleVector::zeros(m)).unwrap(),
        );
        let t1: Vec<f64> = (0..m).map(|_| rng.random_range(-PI..PI)).collect();
        let t2: Vec<f64> = (0..m).map(|_| rng.random_range(-PI..PI)).collect();
        let d = |t: &[f64]| {
            mahalanobis_phase_distance(
                &AngleVector::new(t.to_vec()).unwrap().to_phasors(),
                &precision,
            )
            .unwrap()
        };
        let lhs = log_density(&t1) - log_density(&t2);
        let rhs = -(d(&t1) - d(&t2));
        worst = worst.max((lhs - rhs).abs());
    }
    outcome(
        worst <= 1e-9,
        format!("max |Δlog p + Δd| = {worst:.2e} over 200 cases"),
    )
}

/// Zero precision gives Q = [[M, 0], [0, 0]] exactly, and plain PhaseCut
/// recovers near-noiseless signals.
fn phasecut_reduction() -> Outcome {
    let mut exact = true;
    for t in 0..20 {
        let (p, mm) = instance_problem(
            64,
            16,
            1e-8,
            PhaseSource::Uniform,
            &PhasePrecision::zeros(64),
            RngSeed(500 + t),
        );
        let q = p.q();
        let zero = Complex64::new(0.0, 0.0);
        exact &= q.view((0, 0), (64, 64)) == mm;
        exact &= (0..=64).all(|i| q[(i, 64)] == zero && q[(64, i)] == zero);
    }

    let cfg = ExperimentConfig {
        m: 64,
        k: 16,
        trials: 20,
        sigma_n_sq_grid: vec![1e-8],
        prior_spec: PriorSpec::Uniform,
        methods: vec![Method::Phasecut],
        master_seed: RngSeed(2),
        ..ExperimentConfig::default()
    };
    let corr: Vec<f64> = (0..cfg.trials)
        .map(|t| run_trial(&cfg, 1e-8, t).unwrap()[0].correlation)
        .collect();
    let mean = corr.iter().sum::<f64>() / corr.len() as f64;
    outcome(
        exact && mean >= 0.98,
        format!("Q block structure exact: {exact}; mean correlation {mean:.4} over 20 trials (need >= 0.98)"),
    )
}

/// The informed pipeline stays close to a grid-search optimum at M = 3.
fn oracle_agreement() -> Outcome {
    let precision = precision_from_mvm(&MvmParams::independent(1.0, 3));
    let settings = BcdSettings::default();
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for t in 0..50 {
        let s2 = if t % 2 == 0 { 0.05 } else { 0.3 };
        let (p, _) = instance_problem(
            3,
            2,
            s2,
            PhaseSource::Vm1d { kappa: 1.0 },
            &precision,
            RngSeed(900 + t),
        );
        let (_, oracle) = brute_force_oracle(&p, 64).unwrap();
        let est = estimate_phases(&p, &settings).unwrap();
        let allowed = oracle + 0.05 * (oracle.abs() + 1.0);
        failures += usize::from(est.objective > allowed);
        worst = worst.max((est.objective - oracle) / (oracle.abs() + 1.0));
    }
    outcome(
        failures == 0,
        format!(
            "{failures}/50 above oracle + 0.05(|oracle| + 1); worst relative excess {worst:.2e}"
        ),
    )
}

/// Full-scale comparison at σ_n² = 0.6 with the i.i.d. κ = 1 prior.
fn vm1d_full_scale() -> Outcome {
    let cfg = ExperimentConfig {
        trials: 20,
        sigma_n_sq_grid: vec![0.6],
        master_seed: RngSeed(3),
        ..ExperimentConfig::default()
    };
    assert_eq!(
        (cfg.m, cfg.k, &cfg.prior_spec),
        (256, 64, &PriorSpec::Vm1d { kappa: 1.0 })
    );
    let res = run_trials(&cfg, 1).unwrap();
    let (_, informed, plain) = gaps(&res.summary)[0];
    let passed = (0.55..=0.85).contains(&informed)
        && (0.15..=0.45).contains(&plain)
        && informed - plain >= 0.2;
    outcome(
        passed,
        format!(
            "informed {informed:.3} (need 0.55..0.85), plain {plain:.3} (need 0.15..0.45), gap {:.3} (need >= 0.2)",
            informed - plain
        ),
    )
}

fn desk_scale(prior_spec: PriorSpec, seed: u64) -> Vec<(f64, f64, f64)> {
    let cfg = ExperimentConfig {
        m: 64,
        k: 16,
        trials: 30,
        sigma_n_sq_grid: vec![0.1, 0.2, 0.4, 0.6],
        prior_spec,
        master_seed: RngSeed(seed),
        ..ExperimentConfig::default()
    };
    gaps(&run_trials(&cfg, 1).unwrap().summary)
}

/// Informed beats plain everywhere and the gap grows with σ_n² up to 0.05.
fn vm1d_trend() -> Outcome {
    let g = desk_scale(PriorSpec::Vm1d { kappa: 1.0 }, 4);
    let dominates = g.iter().all(|(_, inf, pl)| inf >= pl);
    let growing = g
        .windows(2)
        .all(|w| (w[1].1 - w[1].2) >= (w[0].1 - w[0].2) - 0.05);
    outcome(
        dominates && growing,
        format!(
            "informed >= plain: {dominates}; gap non-decreasing within 0.05: {growing}; {}",
            format_means(&g)
        ),
    )
}

/// Markov prior: informed beats plain everywhere, by 0.05 at the top.
fn markov_trend() -> Outcome {
    let g = desk_scale(
        PriorSpec::Markov {
            a: 0.8,
            sigma_theta_sq: 0.1,
        },
        5,
    );
    let dominates = g.iter().all(|(_, inf, pl)| inf >= pl);
    let (_, inf, pl) = *g.last().unwrap();
    outcome(
        dominates && inf - pl >= 0.05,
        format!(
            "informed >= plain: {dominates}; top gap {:.3} (need >= 0.05); {}",
            inf - pl,
            format_means(&g)
        ),
    )
}

fn random_unit<R: Rng>(n: usize, rng: &mut R) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| {
        let z = circular_gaussian(rng, 1.0);
        z / z.norm()
    })
}

/// Solver invariants over randomized problems with M ≤ 16.
fn solver_invariants() -> Outcome {
    let mut rng = RngSeed(6).rng();
    let settings = BcdSettings::default();
    let (mut bcd_rise, mut diag_dev, mut min_eig) = (0.0_f64, 0.0_f64, f64::INFINITY);
    let (mut greedy_rise, mut roundtrip) = (0.0_f64, 0.0_f64);

    for t in 0..100 {
        let m = rng.random_range(2..=16);
        let k = rng.random_range(1..=(m / 2).max(1));
        let s2 = rng.random_range(0.01..=1.0);
        let (phases, precision) = match t % 3 {
            0 => {
                let kappa = rng.random_range(0.0..=3.0);
                (
                    PhaseSource::Vm1d { kappa },
                    precision_from_mvm(&MvmParams::independent(kappa, m)),
                )
            }
            1 => (
                PhaseSource::Markov {
                    a: 0.8,
                    sigma_theta_sq: 0.1,
                },
                PriorSpec::Markov {
                    a: 0.8,
                    sigma_theta_sq: 0.1,
                }
                .precision(m)
                .unwrap(),
            ),
            _ => (PhaseSource::Uniform, PhasePrecision::zeros(m)),
        };
        let (p, _) = instance_problem(m, k, s2, phases, &precision, RngSeed(1000 + t));

        let sol = bcd_lifting_solve(&p, &settings).unwrap();
        for w in sol.objective_trace.windows(2) {
            bcd_rise = bcd_rise.max(w[1] - w[0]);
        }
        for i in 0..=m {
            diag_dev = diag_dev.max((sol.u_matrix[(i, i)] - 1.0).norm());
        }
        let eig = SymmetricEigen::new(sol.u_matrix.clone()).eigenvalues;
        min_eig = min_eig.min(eig.iter().copied().fold(f64::INFINITY, f64::min));

        let mut u = random_unit(m + 1, &mut rng);
        let mut before = quadratic_form(p.q(), &u).re;
        for _ in 0..3 {
            for i in 0..=m {
                coordinate_step(p.q(), &mut u, i).unwrap();
                let after = quadratic_form(p.q(), &u).re;
                greedy_rise = greedy_rise.max(after - before);
                before = after;
            }
        }

        let v = random_unit(m + 1, &mut rng);
        let lead = leading_eigenvector(&(&v * v.adjoint())).unwrap();
        let phi = extract_phases(&lead.vector).unwrap();
        let last = v[m].conj();
        for i in 0..m {
            roundtrip = roundtrip.max((phi[i] - v[i] * last).norm());
        }
    }
    let passed = bcd_rise <= 1e-9
        && diag_dev <= 1e-9
        && min_eig >= -1e-8
        && greedy_rise <= 1e-9
        && roundtrip <= 1e-8;
    outcome(
        passed,
        format!(
            "BCD max rise {bcd_rise:.2e}, max |diag(U) − 1| {diag_dev:.2e}, min eigenvalue {min_eig:.2e}, \
             greedy max rise {greedy_rise:.2e}, rank-1 roundtrip {roundtrip:.2e}"
        ),
    )
}

fn csv_without_timestamp(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# timestamp="))
        .map(|l| format!("{l}\n"))
        .collect()
}

/// `priorcut run` output is byte-identical across repeats and thread counts.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"M": 24, "K": 6, "trials": 6, "sigma_n_sq_grid": [0.1, 0.4], "master_seed": 77}"#,
    )
    .unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_priorcut"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(["--threads", threads])
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        let summary = std::fs::read(dir.path().join(format!("{name}.summary.csv"))).unwrap();
        (csv_without_timestamp(&out), summary)
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "4");
    let rows = a.0.lines().count();
    outcome(
        a == b && a == c && rows == 2 + 2 * 6 * 2,
        format!(
            "repeat identical: {}, 1 vs 4 threads identical: {}, {rows} lines",
            a == b,
            a == c
        ),
    )
}

#[test]
fn acceptance() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let results = [
        run_criterion(
            1,
            "log_density_equivalence",
            Duration::from_secs(5),
            log_density_equivalence,
        ),
        run_criterion(2, "phasecut_reduction", min(2), phasecut_reduction),
        run_criterion(3, "oracle_agreement", min(2), oracle_agreement),
        run_criterion(4, "vm1d_full_scale", min(30), vm1d_full_scale),
        run_criterion(5, "vm1d_trend", min(10), vm1d_trend),
        run_criterion(6, "markov_trend", min(10), markov_trend),
        run_criterion(7, "solver_invariants", min(1), solver_invariants),
        run_criterion(8, "determinism", min(10), determinism),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed acceptance criteria: {failed:?}");
}
