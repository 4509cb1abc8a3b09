//! Randomized invariants of the numerical and domain layers.

mod common;

use collapse_lab::classical::{
    classical_cmo_check, conditional_probability, total_probability_check, total_variance_check,
};
use collapse_lab::coherence::{
    coherence_witness, is_incoherent, qubit_violation, trace_distance_to_dephased,
    variational_trace_distance, AngularGrid,
};
use collapse_lab::linalg::{eigh, trace_norm, unitary_exp};
use collapse_lab::protocols::{
    cmo_limit_probe, post_measurement_distribution, sample_records, total_probability_residual,
    MeasurementStep,
};
use collapse_lab::quantum::{
    born_distribution, collapse, dephase, evolve, verify_cmo_implies_collapse, Observable,
};
use collapse_lab::{random, ComplexMatrix, DensityMatrix, PointSet, C64};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigh_reconstructs_and_sorts(seed in any::<u64>(), d in 1usize..=8, scale in 0.01f64..100.0) {
        let m = random::hermitian(&mut rng(seed), d, scale);
        let sd = eigh(&m).unwrap();
        let rec = (&sd.reconstruct() - &m).frobenius_norm() / m.frobenius_norm().max(f64::MIN_POSITIVE);
        prop_assert!(rec < 1e-9, "reconstruction {rec:e}");
        let v = sd.eigenvectors();
        prop_assert!((&(&v.dagger() * v) - &ComplexMatrix::identity(d)).frobenius_norm() < 1e-10);
        prop_assert!(sd.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn propagators_invert(seed in any::<u64>(), d in 1usize..=6, t in -5.0f64..5.0) {
        let h = random::hermitian(&mut rng(seed), d, 1.0);
        let forward = unitary_exp(&h, t).unwrap();
        let backward = unitary_exp(&h, -t).unwrap();
        prop_assert!(max_diff(&(&forward * &backward), &ComplexMatrix::identity(d)) < 1e-9);
        prop_assert!((&(&forward.dagger() * &forward) - &ComplexMatrix::identity(d)).frobenius_norm() < 1e-10);
    }

    #[test]
    fn trace_norm_matches_bisection(seed in any::<u64>(), d in 1usize..=6) {
        let mut r = rng(seed);
        let m = random::hermitian(&mut r, d, 1.0);
        let reference: f64 = bisection_eigenvalues(&m).iter().map(|l| l.abs()).sum();
        let ours = trace_norm(&m).unwrap();
        prop_assert!((ours - reference).abs() < 1e-10);
        // conjugating by a diagonal phase matrix changes every eigenvector phase
        let phases: Vec<C64> = (0..d).map(|_| C64::from_polar(1.0, r.gen_range(0.0..6.3))).collect();
        let dm = ComplexMatrix::from_diagonal(&phases);
        let rotated = &(&dm * &m) * &dm.dagger();
        prop_assert!((trace_norm(&rotated).unwrap() - ours).abs() < 1e-12);
    }

    #[test]
    fn dephasing_is_idempotent_and_keeps_diagonal(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let rho = random::density_matrix(&mut r, d);
        let x = random::observable(&mut r, d);
        let sigma = dephase(&rho, &x).unwrap();
        let twice = dephase(&sigma, &x).unwrap();
        prop_assert!(max_diff(sigma.matrix(), twice.matrix()) < 1e-12);
        let before = rho.in_basis(&x).unwrap();
        let after = sigma.in_basis(&x).unwrap();
        for n in 0..d {
            prop_assert!((before[(n, n)] - after[(n, n)]).norm() < 1e-12);
        }
        prop_assert!(after.max_off_diagonal() < 1e-12);
        prop_assert!(is_incoherent(&sigma, &x, 1e-12).unwrap());
        let p = born_distribution(&rho, &x).unwrap();
        let q = born_distribution(&sigma, &x).unwrap();
        for n in 0..d {
            prop_assert!((p.prob(n) - q.prob(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn collapse_ignores_eigenvector_phases(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let x = random::observable(&mut r, d);
        let mut basis = x.spectral().eigenvectors().clone();
        for k in 0..d {
            let phase = C64::from_polar(1.0, r.gen_range(0.0..6.3));
            for i in 0..d {
                basis[(i, k)] *= phase;
            }
        }
        let rephased = Observable::from_eigenbasis(x.labels(), &basis).unwrap();
        for n in 0..d {
            let a = collapse(&x, n).unwrap();
            let b = collapse(&rephased, n).unwrap();
            prop_assert!(max_diff(a.matrix(), b.matrix()) < 1e-12);
            prop_assert!((a.purity() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn evolution_preserves_spectrum(seed in any::<u64>(), d in 1usize..=5, t in -3.0f64..3.0) {
        let mut r = rng(seed);
        let rank = r.gen_range(1..=d);
        let rho = random::density_matrix_of_rank(&mut r, d, rank);
        let h = random::hermitian(&mut r, d, 1.0);
        let evolved = evolve(&rho, &h, t).unwrap();
        prop_assert!((evolved.purity() - rho.purity()).abs() < 1e-9);
        prop_assert!((evolved.matrix().trace().re - 1.0).abs() < 1e-9);
        prop_assert!(evolved.matrix().hermiticity_residual() < 1e-9);
        let a = eigh(rho.matrix()).unwrap();
        let b = eigh(evolved.matrix()).unwrap();
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn full_repeat_probability_forces_projector(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let x = random::observable(&mut r, d);
        let n = r.gen_range(0..d);
        let phase = C64::from_polar(1.0, r.gen_range(0.0..6.3));
        let psi: Vec<C64> = x.eigenvector(n).iter().map(|z| z * phase).collect();
        let rho = DensityMatrix::pure(&psi).unwrap();
        let check = verify_cmo_implies_collapse(&rho, &x, n, 0.0).unwrap();
        prop_assert!(check.trace_dist_to_projector < 1e-10);
        prop_assert!(max_diff(rho.matrix(), &x.projector(n).unwrap()) < 1e-10);
        prop_assert!(check.passes_bound);
    }

    #[test]
    fn two_routes_to_post_measurement_statistics(seed in any::<u64>(), d in 2usize..=6) {
        let mut r = rng(seed);
        let rho = random::density_matrix(&mut r, d);
        let x = random::observable(&mut r, d);
        let y = random::observable(&mut r, d);
        let conditional_route = post_measurement_distribution(&rho, &x, &y).unwrap();
        let dephased_route = born_distribution(&dephase(&rho, &x).unwrap(), &y).unwrap();
        for m in 0..d {
            prop_assert!((conditional_route.prob(m) - dephased_route.prob(m)).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_vanishes_without_coherence_or_without_incompatibility(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let x = random::observable(&mut r, d);
        let y = random::observable(&mut r, d);
        let incoherent = dephase(&random::density_matrix(&mut r, d), &x).unwrap();
        let residual = total_probability_residual(&incoherent, &x, &y).unwrap();
        prop_assert!(residual.iter().all(|v| v.abs() < 1e-10));

        // same eigenbasis, different labels
        let labels: Vec<f64> = (0..d).map(|k| (k as f64).powi(2) - 1.5).collect();
        let commuting = Observable::from_eigenbasis(&labels, x.spectral().eigenvectors()).unwrap();
        let rho = random::density_matrix(&mut r, d);
        let residual = total_probability_residual(&rho, &x, &commuting).unwrap();
        prop_assert!(residual.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn residual_is_bounded_by_trace_distance(seed in any::<u64>(), d in 2usize..=5) {
        let mut r = rng(seed);
        let rho = random::density_matrix(&mut r, d);
        let x = random::observable(&mut r, d);
        let td = trace_distance_to_dephased(&rho, &x).unwrap();
        for _ in 0..5 {
            let y = random::observable(&mut r, d);
            let total: f64 = total_probability_residual(&rho, &x, &y).unwrap().iter().map(|v| v.abs()).sum();
            prop_assert!(total <= td + 1e-12);
        }
        let witness = coherence_witness(&rho, &x).unwrap();
        prop_assert!((witness.violation - td).abs() < 1e-10);
    }

    #[test]
    fn short_delay_exponent_is_two(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random::observable(&mut r, 2);
        let h = loop {
            let h = random::hermitian(&mut r, 2, 1.0);
            // keep H away from commuting with X so the leading term dominates
            if h.commutator(x.matrix()).max_abs() > 0.1 {
                break h;
            }
        };
        let rho = random::density_matrix(&mut r, 2);
        let grid = collapse_lab::protocols::geometric_grid(1e-1, 1e-3, 12);
        let probe = cmo_limit_probe(&rho, &x, &h, &grid).unwrap();
        for fit in &probe.exponents {
            let k = fit.exponent.unwrap();
            prop_assert!((1.9..=2.1).contains(&k), "exponent {k}");
        }
        for row in &probe.rows {
            for dist in &row.matrix {
                prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn variational_never_exceeds_spectral(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rho = random::density_matrix(&mut r, 2);
        let x = random::observable(&mut r, 2);
        let grid = AngularGrid { phi_points: 37, theta_points: 19, refine_to: 1e-7 };
        let res = variational_trace_distance(&rho, &x, grid).unwrap();
        let spectral = trace_distance_to_dephased(&rho, &x).unwrap();
        prop_assert!(res.value <= spectral + 1e-9);
        prop_assert!(res.value >= spectral - 1e-4);
    }

    #[test]
    fn qubit_coherence_is_always_witnessed_on_the_grid(seed in any::<u64>()) {
        let mut r = rng(seed);
        let rho = random::density_matrix(&mut r, 2);
        let x = random::observable(&mut r, 2);
        let td = trace_distance_to_dephased(&rho, &x).unwrap();
        prop_assume!(td > 1e-8);
        let mut best = 0.0_f64;
        for j in 0..19 {
            for k in 0..36 {
                let theta = j as f64 * std::f64::consts::PI / 18.0;
                let phi = k as f64 * std::f64::consts::TAU / 36.0;
                best = best.max(qubit_violation(&rho, &x, theta, phi).unwrap());
            }
        }
        prop_assert!(best > 1e-9);
    }

    #[test]
    fn classical_laws_hold(seed in any::<u64>(), n in 1usize..=40) {
        let mut r = rng(seed);
        let sys = random::classical_system(&mut r, n, 6);
        let cmo = classical_cmo_check(&sys, &[2.0, 0.5, 1e-3]).unwrap();
        prop_assert!(cmo.at_zero_is_identity());
        for (t, m) in &cmo.rows {
            if *t < 1.0 {
                prop_assert_eq!(m, &cmo.at_zero);
            }
        }
        prop_assert!(total_probability_check(&sys).unwrap().iter().all(|v| v.abs() < 1e-12));
        prop_assert!(total_variance_check(&sys).unwrap().residual.abs() < 1e-12);
    }

    #[test]
    fn conditional_probability_is_relabeling_equivariant(seed in any::<u64>(), n in 2usize..=20) {
        let mut r = rng(seed);
        let sys = random::classical_system(&mut r, n, 4);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let moved = sys.relabeled(&perm).unwrap();
        let pick = |r: &mut rand_chacha::ChaCha8Rng| -> PointSet {
            (0..n).filter(|_| r.gen_bool(0.5)).collect()
        };
        let a = pick(&mut r);
        let mut b = pick(&mut r);
        b.insert(0);
        let map = |s: &PointSet| s.iter().map(|&i| perm[i]).collect::<PointSet>();
        let before = conditional_probability(&sys, &a, &b).unwrap();
        let after = conditional_probability(&moved, &map(&a), &map(&b)).unwrap();
        prop_assert!((before - after).abs() < 1e-14);
    }
}

#[test]
fn sampling_error_shrinks_at_monte_carlo_rate() {
    let mut passes = 0;
    let trials = 100;
    for trial in 0..trials {
        let mut r = rng(1000 + trial);
        let d = 2 + (trial as usize % 3);
        let rho = random::density_matrix(&mut r, d);
        let x = random::observable(&mut r, d);
        let y = random::observable(&mut r, d);
        let steps = vec![
            MeasurementStep::immediate(x.clone()),
            MeasurementStep::immediate(y.clone()),
        ];
        let shots = 4_000;
        let record = sample_records(&rho, &steps, trial, shots).unwrap();
        let bound = 5.0 * (d as f64 / shots as f64).sqrt();
        let first = born_distribution(&rho, &x).unwrap();
        let second = post_measurement_distribution(&rho, &x, &y).unwrap();
        let tv_first = record.marginal(0).unwrap().total_variation(&first);
        let tv_second = record.marginal(1).unwrap().total_variation(&second);
        if tv_first < bound && tv_second < bound {
            passes += 1;
        }
    }
    assert!(passes >= 99, "{passes} of {trials} trials within the bound");
}

#[test]
fn sampling_with_waits_matches_evolved_statistics() {
    let mut r = rng(77);
    let rho = random::density_matrix(&mut r, 3);
    let x = random::observable(&mut r, 3);
    let h = random::hermitian(&mut r, 3, 1.0);
    let steps = vec![
        MeasurementStep::new(x.clone(), 0.4, Some(h.clone())).unwrap(),
        MeasurementStep::new(x.clone(), 0.9, Some(h.clone())).unwrap(),
    ];
    let shots = 50_000;
    let record = sample_records(&rho, &steps, 5, shots).unwrap();
    let evolved = evolve(&rho, &h, 0.4).unwrap();
    let first = born_distribution(&evolved, &x).unwrap();
    let mut second = vec![0.0; 3];
    for n in 0..3 {
        let after = evolve(&collapse(&x, n).unwrap(), &h, 0.9).unwrap();
        let cond = born_distribution(&after, &x).unwrap();
        for (acc, q) in second.iter_mut().zip(cond.probs()) {
            *acc += first.prob(n) * q;
        }
    }
    let bound = 5.0 * (3.0 / shots as f64).sqrt();
    let second = collapse_lab::OutcomeDistribution::new(x.labels().to_vec(), second).unwrap();
    assert!(record.marginal(0).unwrap().total_variation(&first) < bound);
    assert!(record.marginal(1).unwrap().total_variation(&second) < bound);
}
