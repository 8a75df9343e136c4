use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use sparsetrack::bounds::{c1, c2, certify, csres_error_bound, ls_step_error_bound, modcs_error_bound, MatrixConstants, TheoremParams, Variant};
use sparsetrack::experiment::{run_trial, ExperimentConfig};
use sparsetrack::measurement::{gaussian_matrix, noise_bound, read_matrix_csv, uniform_noise, write_matrix_csv};
use sparsetrack::signal::{audit_transition, SignalTrajectory};
use sparsetrack::support::{support_of, Support};
use sparsetrack::trackers::tracker_step;
use sparsetrack::{solve_partial_l1, Algorithm, ModelParams, PartialL1Solver, SolverConfig, Thresholds, TrackerState};

fn model() -> impl Strategy<Value = ModelParams> {
    (1usize..=4, 1usize..=3, 0.1f64..2.0).prop_flat_map(|(d, sa, r)| {
        let min_s0 = (2 * d - 2) * sa + sa;
        (min_s0..=min_s0 + 6).prop_map(move |s0| ModelParams { m: 3 * s0 + 10, s0, sa, d, r })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trajectories_keep_invariants(params in model(), seed in any::<u64>()) {
        let mut prev: Option<sparsetrack::SignalState> = None;
        let mut hist0 = None;
        for (state, sets) in SignalTrajectory::new(&params, seed).unwrap().take(101) {
            prop_assert!(state.check_invariants().is_empty(), "{:?}", state.check_invariants());
            let mut hist = vec![0usize; params.d + 1];
            for i in &state.support {
                hist[state.level(*i)] += 1;
            }
            let h0 = hist0.get_or_insert_with(|| hist.clone());
            prop_assert_eq!(&hist, h0);
            if let Some(p) = &prev {
                for j in 1..=params.d {
                    let audit = audit_transition(p, &state, &sets, j);
                    prop_assert!(audit.passed(), "{:?}", audit.violations);
                }
                for i in p.support.intersection(&state.support) {
                    prop_assert_eq!(p.x[*i].signum(), state.x[*i].signum());
                }
            }
            prev = Some(state);
        }
    }

    #[test]
    fn noise_within_bound(n in 1usize..200, c in 0.0f64..5.0, seed in any::<u64>()) {
        let w = uniform_noise(n, c, seed);
        prop_assert!(w.norm() <= noise_bound(c, n));
        prop_assert!(w.amax() <= c);
    }

    #[test]
    fn columns_are_normalized(n in 1usize..30, extra in 0usize..10, seed in any::<u64>()) {
        let m = n + extra;
        let a = gaussian_matrix(n, m, seed, true).unwrap();
        for j in 0..m {
            prop_assert!((a.column(j).norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn matrix_csv_round_trip(n in 1usize..8, extra in 0usize..4, seed in any::<u64>()) {
        let m = n + extra;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let a = gaussian_matrix(n, m, seed, false).unwrap();
        write_matrix_csv(&a, &path).unwrap();
        prop_assert_eq!(read_matrix_csv(&path).unwrap(), a);
    }
}

fn instance(seed: u64, n: usize, m: usize, c: f64) -> (DMatrix<f64>, DVector<f64>, Support, f64) {
    let a = gaussian_matrix(n, m, seed, true).unwrap();
    let mut x = DVector::zeros(m);
    x[seed as usize % m] = 2.0;
    x[(seed as usize / 3 + 1) % m] = -1.0;
    x[(seed as usize / 5 + 2) % m] += 0.5;
    let y = &a * &x + uniform_noise(n, c, seed.wrapping_add(9));
    let known: Support = [seed as usize % m].into_iter().collect();
    (a, y, known, noise_bound(c, n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn admm_fixed_point_residual_is_monotone(seed in any::<u64>(), c in 0.01f64..0.2) {
        let (a, y, known, eps) = instance(seed, 15, 30, c);
        let cfg = SolverConfig { adaptive_penalty: false, polish_every: 0, record_history: true, max_iters: 400, ..SolverConfig::default() };
        let sol = solve_partial_l1(&a, &y, &known, eps, &cfg).unwrap();
        for w in sol.history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-9, "{} > {}", w[1], w[0]);
        }
    }

    #[test]
    fn column_permutation_permutes_solution(seed in any::<u64>(), c in 0.01f64..0.2, shift in 1usize..29) {
        let (a, y, known, eps) = instance(seed, 15, 30, c);
        let m = a.ncols();
        // Column k of the permuted matrix is column perm[k] of the original.
        let perm: Vec<usize> = (0..m).map(|k| (k + shift) % m).collect();
        let inv: Vec<usize> = (0..m).map(|i| (i + m - shift) % m).collect();
        let ap = DMatrix::from_fn(a.nrows(), m, |i, k| a[(i, perm[k])]);
        let known_p: Support = known.iter().map(|&i| inv[i]).collect();
        let cfg = SolverConfig::default();
        let b = solve_partial_l1(&a, &y, &known, eps, &cfg).unwrap().beta;
        let bp = solve_partial_l1(&ap, &y, &known_p, eps, &cfg).unwrap().beta;
        for k in 0..m {
            prop_assert!((bp[k] - b[perm[k]]).abs() <= 1e-5 * (1.0 + b.amax()));
        }
    }

    #[test]
    fn scaling_scales_solution(seed in any::<u64>(), c in 0.01f64..0.2, s in 0.1f64..10.0) {
        let (a, y, known, eps) = instance(seed, 15, 30, c);
        let cfg = SolverConfig::default();
        let b = solve_partial_l1(&a, &y, &known, eps, &cfg).unwrap().beta;
        let bs = solve_partial_l1(&a, &(&y * s), &known, eps * s, &cfg).unwrap().beta;
        prop_assert!((&bs - &b * s).amax() <= 1e-5 * s * (1.0 + b.amax()));
    }

    #[test]
    fn tracker_steps_respect_set_relations(seed in any::<u64>(), alg_idx in 0usize..4, prior_size in 0usize..8) {
        let (a, y, _, eps) = instance(seed, 25, 40, 0.05);
        let alg = Algorithm::ALL[alg_idx];
        let solver = PartialL1Solver::new(&a, SolverConfig::default()).unwrap();
        let thr = Thresholds::recipe(0.05, 1.0);
        let prior: Support = (0..prior_size).map(|k| (seed as usize + 5 * k) % 40).collect();
        let state = TrackerState { n_hat: prior.clone(), t: 1 };
        let (trace, next) = tracker_step(alg, &state, &solver, &y, eps, &thr, None).unwrap();
        let (again, _) = tracker_step(alg, &state, &solver, &y, eps, &thr, None).unwrap();
        prop_assert_eq!(&trace, &again);
        prop_assert_eq!(&next.n_hat, &trace.n_hat_next);
        prop_assert_eq!(next.t, 2);
        if matches!(alg, Algorithm::ModCsAldl | Algorithm::LsCs) {
            let t_det = trace.t_det.as_ref().unwrap();
            prop_assert!(prior.is_subset(t_det));
            prop_assert!(trace.n_hat_next.is_subset(t_det));
            prop_assert!(support_of(&trace.x_final).is_subset(&trace.n_hat_next));
        }
    }
}

fn random_constants(seed: u64, deltas: &[usize], thetas: &[(usize, usize)]) -> MatrixConstants {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut c = MatrixConstants::default();
    for &s in deltas {
        c.delta.insert(s, rng.random_range(0.0..0.45));
    }
    for &(s, sp) in thetas {
        c.theta.insert((s.min(sp), s.max(sp)), rng.random_range(0.0..0.45));
    }
    c
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constants_are_increasing(d1 in 0.0f64..0.41, d2 in 0.0f64..0.41) {
        prop_assume!(d1 < d2);
        prop_assert!(c1(d1).unwrap() < c1(d2).unwrap());
        prop_assert!(c2(d1).unwrap() < c2(d2).unwrap());
    }

    #[test]
    fn bounds_vanish_without_noise_or_signal(t in 1usize..6, dl in 1usize..3) {
        let mut c = MatrixConstants::default();
        for s in [t, 2 * dl, t + dl, t + 2 * dl] {
            c.delta.insert(s, 0.1);
        }
        c.theta.insert((t.min(dl), t.max(dl)), 0.1);
        prop_assert_eq!(modcs_error_bound(t, dl, 0, 0.0, &c).unwrap(), 0.0);
        prop_assert_eq!(ls_step_error_bound(t, dl, 0.0, 0.0, &c).unwrap(), 0.0);
        prop_assert_eq!(csres_error_bound(t, dl, 0.0, 0.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn exact_constants_are_consistent(seed in any::<u64>(), n in 4usize..8) {
        let a = gaussian_matrix(n, n + 3, seed, true).unwrap();
        let orders: Vec<usize> = (1..=4).collect();
        let pairs = [(1, 1), (1, 2), (2, 2), (1, 3)];
        let c = MatrixConstants::compute(&a, &orders, &pairs, 1_000_000).unwrap();
        prop_assert!(c.check_invariants().is_empty(), "{:?}", c.check_invariants());
    }

    #[test]
    fn general_certificate_reduces(seed in any::<u64>(), s0 in 2usize..40, sa in 1usize..8, r in 0.05f64..4.0, eps in 0.0f64..0.5, add in 0.0f64..0.5) {
        let mut c3 = TheoremParams::new(Variant::C3AldlRelaxed, s0, sa, r, eps);
        c3.alpha_add = add;
        let mut gen = c3.clone();
        gen.variant = Variant::GenAldl;
        gen.d0 = Some(2);
        gen.f = Some(sa);
        let (mut d, mut t) = c3.required_constants();
        let (d2, t2) = gen.required_constants();
        d.extend(d2);
        t.extend(t2);
        let consts = random_constants(seed, &d, &t);
        let a = certify(&c3, &consts).unwrap();
        let b = certify(&gen, &consts).unwrap();
        for e in &a.entries {
            let g = b.entry(&e.key).unwrap();
            prop_assert_eq!(g.lhs.to_bits(), e.lhs.to_bits());
            prop_assert_eq!(g.rhs.to_bits(), e.rhs.to_bits());
        }
        prop_assert_eq!(a.pass, a.entries.iter().all(|e| e.pass));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn algorithms_share_streams(seed in any::<u64>()) {
        let mut cfg = ExperimentConfig::from_json(r#"{"m": 40, "s0": 4, "sa": 1, "d": 2, "r": 1.0, "n": 25, "c": 0.05, "horizon": 6}"#).unwrap();
        let all = run_trial(&cfg, seed).unwrap();
        for alg in Algorithm::ALL {
            cfg.algorithms = vec![alg];
            let alone = run_trial(&cfg, seed).unwrap();
            prop_assert_eq!(alone.series(alg), all.series(alg));
        }
        let s = all.series(Algorithm::ModCs).unwrap();
        prop_assert!(s.nmse().iter().all(|v| *v >= 0.0));
        prop_assert!(s.misses.iter().all(|v| *v <= 4));
    }
}
