use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use proptest::prelude::*;

use priorcut::harness::normalized_correlation;
use priorcut::model::{
    absorb_mean_phases, generate_instance, pseudo_inverse, recover_signal, GenerationConfig,
    PhaseSource,
};
use priorcut::numeric::{
    circular_gaussian, wrap_angle, AngleVector, ComplexMatrix, ComplexVector, RealMatrix, RngSeed,
};
use priorcut::priors::{
    mahalanobis_phase_distance, mvm_unnormalized_log_density, precision_from_mvm, precision_markov,
    MarkovChainParams, MvmParams,
};
use priorcut::problem::{build_m, build_q, homogenize, map_objective, qcqp_objective};

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(TAU - d)
}

fn random_matrix(m: usize, k: usize, seed: u64) -> ComplexMatrix {
    let mut rng = RngSeed(seed).rng();
    ComplexMatrix::from_fn(m, k, |_, _| circular_gaussian(&mut rng, 1.0))
}

fn symmetric_zero_diag(m: usize, entries: &[f64]) -> RealMatrix {
    let mut d = RealMatrix::zeros(m, m);
    let mut it = entries.iter();
    for i in 0..m {
        for k in i + 1..m {
            let v = *it.next().unwrap();
            d[(i, k)] = v;
            d[(k, i)] = v;
        }
    }
    d
}

fn mvm_strategy() -> impl Strategy<Value = (MvmParams, Vec<f64>, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|m| {
        (
            prop::collection::vec(0.0..=3.0, m),
            prop::collection::vec(-0.3..=0.3, m * (m - 1) / 2),
            prop::collection::vec(-PI..PI, m),
            prop::collection::vec(-PI..PI, m),
        )
            .prop_map(move |(kappa, off, t1, t2)| {
                let params =
                    MvmParams::new(kappa, symmetric_zero_diag(m, &off), AngleVector::zeros(m))
                        .unwrap();
                (params, t1, t2)
            })
    })
}

proptest! {
    #[test]
    fn wrap_is_idempotent(x in -1e7..1e7f64) {
        let w = wrap_angle(x).unwrap();
        prop_assert!(w > -PI && w <= PI);
        prop_assert_eq!(wrap_angle(w).unwrap(), w);
    }

    #[test]
    fn wrap_is_periodic(x in -10.0..10.0f64, k in -1_000_000i64..=1_000_000) {
        // circular distance: the two sides of the ±π cut are the same angle
        let shifted = wrap_angle(x + TAU * k as f64).unwrap();
        prop_assert!(circular_distance(shifted, wrap_angle(x).unwrap()) <= 1e-9);
    }

    #[test]
    fn log_density_equivalence((params, t1, t2) in mvm_strategy()) {
        let precision = precision_from_mvm(&params);
        let (t1, t2) = (AngleVector::new(t1).unwrap(), AngleVector::new(t2).unwrap());
        let dl = mvm_unnormalized_log_density(&t1, &params).unwrap()
            - mvm_unnormalized_log_density(&t2, &params).unwrap();
        let dd = mahalanobis_phase_distance(&t1.to_phasors(), &precision).unwrap()
            - mahalanobis_phase_distance(&t2.to_phasors(), &precision).unwrap();
        prop_assert!((dl + dd).abs() <= 1e-9);
    }

    #[test]
    fn precision_round_trip(m in 2usize..=8, seed in any::<u64>()) {
        let mut rng = RngSeed(seed).rng();
        let raw = RealMatrix::from_fn(m, m, |_, _| rand::Rng::random_range(&mut rng, -2.0..2.0));
        let p = (&raw + raw.transpose()) * 0.5;
        let mut delta = p.clone();
        let mut kappa = vec![0.0; m];
        for i in 0..m {
            delta[(i, i)] = 0.0;
            kappa[i] = 2.0 * (p[(i, i)] + (0..m).filter(|&l| l != i).map(|l| p[(i, l)]).sum::<f64>());
        }
        let params = MvmParams::new(kappa, delta, AngleVector::zeros(m)).unwrap();
        let back = precision_from_mvm(&params);
        for i in 0..m {
            for k in 0..m {
                // κ_i/2 − Σ Δ re-associates the same sum, so allow rounding
                prop_assert!((back.matrix()[(i, k)] - p[(i, k)]).abs() <= 1e-12 * (1.0 + p.abs().max()));
            }
        }
    }

    #[test]
    fn markov_precision_is_tridiagonal(m in 2usize..=64, a in -0.99..0.99f64, s2 in 0.01..2.0f64) {
        let p = precision_markov(&MarkovChainParams::new(a, s2, m).unwrap()).unwrap();
        for i in 0..m {
            for k in 0..m {
                if i.abs_diff(k) >= 2 {
                    prop_assert_eq!(p.matrix()[(i, k)], 0.0);
                }
            }
        }
    }

    #[test]
    fn mahalanobis_invariant_under_conjugation((params, t1, _t2) in mvm_strategy()) {
        let precision = precision_from_mvm(&params);
        let phi = AngleVector::new(t1).unwrap().to_phasors();
        let d = mahalanobis_phase_distance(&phi, &precision).unwrap();
        let dc = mahalanobis_phase_distance(&phi.conjugate(), &precision).unwrap();
        prop_assert!((d - dc).abs() <= 1e-10);
    }

    #[test]
    fn absorb_then_unabsorb_is_identity(m in 1usize..=12, k in 1usize..=4, seed in any::<u64>(), mu in prop::collection::vec(-PI..PI, 12)) {
        let a = random_matrix(m, k, seed);
        let mu = AngleVector::new(mu[..m].to_vec()).unwrap();
        let neg = AngleVector::new(mu.iter().map(|t| -t).collect()).unwrap();
        let back = absorb_mean_phases(&absorb_mean_phases(&a, &mu).unwrap(), &neg).unwrap();
        prop_assert!((back - a).iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn recovered_signal_is_least_squares(seed in any::<u64>(), s2 in 0.0..1.0f64) {
        let inst = generate_instance(&GenerationConfig {
            m: 12, k: 3, sigma_n_sq: s2, phases: PhaseSource::Uniform, seed: RngSeed(seed),
        }).unwrap();
        let mut rng = RngSeed(seed ^ 1).rng();
        let phi = ComplexVector::from_fn(12, |_, _| { let z = circular_gaussian(&mut rng, 1.0); z / z.norm() });
        let pinv = pseudo_inverse(&inst.a).matrix;
        let x = recover_signal(&phi, &inst.y, &pinv).unwrap();
        let target = phi.component_mul(&inst.y);
        let best = (&target - &inst.a * &x).norm();
        for _ in 0..100 {
            let z = ComplexVector::from_fn(3, |_, _| circular_gaussian(&mut rng, 1.0));
            prop_assert!(best <= (&target - &inst.a * z).norm() + 1e-12);
        }
    }

    #[test]
    fn map_and_qcqp_objectives_agree(seed in any::<u64>(), s2 in 0.05..1.0f64, kappa in 0.0..3.0f64) {
        let m = 6;
        let inst = generate_instance(&GenerationConfig {
            m, k: 2, sigma_n_sq: s2, phases: PhaseSource::Vm1d { kappa }, seed: RngSeed(seed),
        }).unwrap();
        let pinv = pseudo_inverse(&inst.a).matrix;
        let precision = precision_from_mvm(&MvmParams::independent(kappa, m));
        let q = build_q(&build_m(&inst.y, &inst.a, &pinv).unwrap(), &precision, s2).unwrap();
        let mut rng = RngSeed(seed ^ 2).rng();
        let mut unit = || ComplexVector::from_fn(m, |_, _| { let z = circular_gaussian(&mut rng, 1.0); z / z.norm() });
        let (p1, p2) = (unit(), unit());
        let dm = map_objective(&p1, &inst, &precision, &pinv).unwrap()
            - map_objective(&p2, &inst, &precision, &pinv).unwrap();
        let dq = (qcqp_objective(&homogenize(&p1), &q).unwrap() - qcqp_objective(&homogenize(&p2), &q).unwrap()) / s2;
        prop_assert!((dm - dq).abs() <= 1e-8 * (1.0 + dm.abs().max(dq.abs())));
    }

    #[test]
    fn correlation_ignores_global_phase_and_scale(seed in any::<u64>(), c in -PI..PI, scale in 1e-3..1e3f64) {
        let mut rng = RngSeed(seed).rng();
        let x = ComplexVector::from_fn(8, |_, _| circular_gaussian(&mut rng, 1.0));
        let y = ComplexVector::from_fn(8, |_, _| circular_gaussian(&mut rng, 1.0));
        let r = normalized_correlation(&y, &x).unwrap();
        let moved = &y * (Complex64::cis(c) * scale);
        prop_assert!((normalized_correlation(&moved, &x).unwrap() - r).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&r));
    }
}
