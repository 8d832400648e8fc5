use edm::edm::RankSpec;
use edm::interp::Scheme;
use edm::modal::{build_database, ModeDatabase, ModeSelection};
use edm::numerics::{generalized_eig, RMat, RVec};
use edm::rom::{
    build_rom_at_sample, build_rom_interpolated, characteristic_horizon, simulate_full,
    simulate_rom, time_grid, EdmModel, Schemes, Strategy,
};
use edm::systems::{
    equilibrium, first_order_form, heat_rod, FullOrderSystem, HeatRod, SecondOrderSystem, Stiffness,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn rod() -> &'static (FullOrderSystem, ModeDatabase) {
    static ROD: OnceLock<(FullOrderSystem, ModeDatabase)> = OnceLock::new();
    ROD.get_or_init(|| {
        let sys = heat_rod(
            HeatRod {
                nodes: 30,
                ..HeatRod::default()
            },
            (0.0, 28.0),
        )
        .unwrap();
        let mus: Vec<f64> = (0..6).map(|k| 28.0 * k as f64 / 5.0).collect();
        let db = build_database(&sys, &mus, 5, ModeSelection::LeadingRealPart).unwrap();
        (sys, db)
    })
}

fn slowest_rate(sys: &FullOrderSystem, mu: f64) -> f64 {
    let pairs = generalized_eig(&sys.operator_at(mu).unwrap(), &sys.mass, false).unwrap();
    pairs
        .iter()
        .map(|p| p.eigenvalue.re.abs())
        .fold(f64::INFINITY, f64::min)
}

fn perturbation_norms(sys: &FullOrderSystem, states: &RMat, eq: &RVec) -> Vec<f64> {
    let f = sys.mass.cholesky().unwrap();
    states
        .column_iter()
        .map(|c| f.weighted_norm_real(&(c - eq)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn heat_rod_is_stable_and_slows_with_less_cooling(a in 0.0f64..28.0, b in 0.0f64..28.0) {
        let (sys, _) = rod();
        let pairs = generalized_eig(&sys.operator_at(a).unwrap(), &sys.mass, false).unwrap();
        prop_assert!(pairs.iter().all(|p| p.eigenvalue.re < 0.0 && p.eigenvalue.im == 0.0));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(slowest_rate(sys, lo) <= slowest_rate(sys, hi) * (1.0 + 1e-12));
    }

    #[test]
    fn first_order_spectrum_is_plus_minus_root(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let k: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let sys = SecondOrderSystem {
            mass: RMat::from_diagonal(&RVec::from_vec(m.clone())),
            stiffness: Stiffness::Affine {
                k0: RMat::from_diagonal(&RVec::from_iterator(n, k.iter().map(|v| -v))),
                k1: RMat::zeros(n, n),
            },
        };
        let (e, a) = first_order_form(&sys, 0.0).unwrap();
        let mut got: Vec<f64> = generalized_eig(&a, &e, true)
            .unwrap()
            .iter()
            .map(|p| {
                assert!(p.eigenvalue.re.abs() <= 1e-10);
                p.eigenvalue.im
            })
            .collect();
        let mut want: Vec<f64> = m.iter().zip(&k).flat_map(|(m, k)| {
            let w = (k / m).sqrt();
            [w, -w]
        }).collect();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-10);
        }
    }

    #[test]
    fn equilibrium_is_a_fixed_point(mu in 0.0f64..28.0) {
        let (sys, db) = rod();
        let eq = equilibrium(sys, mu).unwrap();
        let times = time_grid(characteristic_horizon(db).unwrap(), 50);
        let traj = simulate_full(sys, mu, &eq, &times).unwrap();
        let scale = eq.norm();
        for c in traj.states.column_iter() {
            prop_assert!((c - &eq).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn sampled_roms_decay_monotonically(k in 0usize..6, x0_mu in 0.0f64..300.0) {
        let (sys, db) = rod();
        let mu = db.samples[k].mu;
        let eq = equilibrium(sys, mu).unwrap();
        let rom = build_rom_at_sample(db, mu, 5, eq.clone()).unwrap();
        prop_assert!(rom.eigenvalues.iter().all(|l| l.re < 0.0));
        let x0 = equilibrium(&heat_rod(HeatRod { nodes: 30, ..HeatRod::default() }, (0.0, 300.0)).unwrap(), x0_mu).unwrap();
        let times = time_grid(characteristic_horizon(db).unwrap(), 200);
        let traj = simulate_rom(&rom, &x0, &times).unwrap();
        let norms = perturbation_norms(sys, &traj.states, &eq);
        prop_assert!(norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn interpolated_roms_stay_bounded(mu in 0.0f64..28.0, strategy_edm in any::<bool>()) {
        let (sys, db) = rod();
        let eq = equilibrium(sys, mu).unwrap();
        let model = EdmModel::from_database(db, 5, RankSpec::Energy(0.999)).unwrap();
        let strategy = if strategy_edm { Strategy::Edm } else { Strategy::Direct };
        let rom = build_rom_interpolated(db, Some(&model), mu, 5, strategy, Schemes::default(), eq.clone()).unwrap();
        prop_assert!(rom.eigenvalues.iter().all(|l| l.re < 0.0));
        let x0 = RVec::from_element(sys.dim(), 2.0);
        let times = time_grid(characteristic_horizon(db).unwrap(), 200);
        let traj = simulate_rom(&rom, &x0, &times).unwrap();
        let norms = perturbation_norms(sys, &traj.states, &eq);
        prop_assert!(norms.last().unwrap() < &norms[0]);
        prop_assert!(norms.iter().all(|v| *v <= norms[0] * 1.1));
    }

    #[test]
    fn full_rank_edm_matches_direct(mu in 0.0f64..28.0, spline in any::<bool>()) {
        let (sys, db) = rod();
        let eq = equilibrium(sys, mu).unwrap();
        let model = EdmModel::from_database(db, 5, RankSpec::Full).unwrap();
        let scheme = if spline { Scheme::CubicSpline } else { Scheme::Linear };
        let schemes = Schemes { modes: scheme, eigenvalues: Scheme::CubicSpline };
        let build = |s| build_rom_interpolated(db, Some(&model), mu, 5, s, schemes, eq.clone()).unwrap();
        let (edm, direct) = (build(Strategy::Edm), build(Strategy::Direct));
        let x0 = RVec::from_element(sys.dim(), 2.0);
        let times = time_grid(characteristic_horizon(db).unwrap(), 100);
        let a = simulate_rom(&edm, &x0, &times).unwrap();
        let b = simulate_rom(&direct, &x0, &times).unwrap();
        let scale = b.states.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        prop_assert!((a.states - b.states).iter().all(|v| v.abs() <= 1e-8 * scale));
    }
}
