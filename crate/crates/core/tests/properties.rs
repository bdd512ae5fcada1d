use branchq::classical::{ClassicalSystem, IntegrationOptions};
use branchq::evolution::{
    propagate_with, GaussianPacket, MultiWave, PropagationOptions, Representation,
};
use branchq::geometry::RootLabel;
use branchq::operators::build_folded_hamiltonian;
use branchq::spectra::{solve_eigensystem, stationarity_residual, OperatorBasis};
use branchq::verify::{random_inner_state, random_kirchhoff_graph};
use branchq::{Branch, BranchedDomain, CoordinateKind, DispersionLaw, Grid, PotentialSpec};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_folded_grid(kappa: f64, n: usize) -> Grid {
    let law = DispersionLaw::cubic(kappa);
    Grid::with_count(CoordinateKind::FoldedP, law.domain(), n, 6.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn root_count_follows_cusp_interval(kappa in 0.05f64..10.0, t in -3.0f64..3.0) {
        let law = DispersionLaw::cubic(kappa);
        let c = law.cusp_points().unwrap();
        let p = t * c.p_plus;
        // stay clear of the double roots, where the count is a junction pair
        prop_assume!((p - c.p_plus).abs() > 1e-6 * c.p_plus && (p - c.p_minus).abs() > 1e-6 * c.p_plus);
        let roots = law.invert_momentum(p);
        let inside = p > c.p_minus && p < c.p_plus;
        prop_assert_eq!(roots.len(), if inside { 3 } else { 1 });
        for r in &roots {
            let residual = r.xdot.powi(3) - kappa * r.xdot - p;
            prop_assert!(residual.abs() <= 1e-10 * (1.0 + p.abs()), "residual {}", residual);
            prop_assert!(matches!(r.label, RootLabel::Branch(_)));
        }
        for w in roots.windows(2) {
            prop_assert!(w[0].xdot < w[1].xdot);
        }
    }

    #[test]
    fn momentum_is_odd_and_energy_even(kappa in 0.0f64..10.0, v in -5.0f64..5.0) {
        let law = DispersionLaw::cubic(kappa);
        prop_assert_eq!(law.momentum_of_velocity(-v), -law.momentum_of_velocity(v));
        prop_assert_eq!(law.energy_of_velocity(-v), law.energy_of_velocity(v));
    }

    #[test]
    fn fold_inverts_unfold(qm in -5.0f64..0.0, width in 0.1f64..8.0, u in -20.0f64..20.0) {
        let d = BranchedDomain::new(qm, qm + width);
        let (q, b) = d.fold(u);
        let back = d.unfold(q, b).unwrap();
        prop_assert!((back - u).abs() <= 1e-12 * (1.0 + u.abs() + width), "{} vs {}", back, u);
        let (lo, hi) = d.branch_range(b);
        prop_assert!(q >= lo - 1e-12 && q <= hi + 1e-12);
    }

    #[test]
    fn unfold_is_monotone_across_branches(qm in -5.0f64..0.0, width in 0.1f64..8.0, s in 0.01f64..0.99) {
        let d = BranchedDomain::new(qm, qm + width);
        let q = qm + s * width;
        let u: Vec<f64> = Branch::ALL.iter().map(|&b| d.unfold(q, b).unwrap()).collect();
        prop_assert!(u[0] < d.q_minus && d.q_minus < u[1] && u[1] < d.q_plus && d.q_plus < u[2]);
        for (&b, &x) in Branch::ALL.iter().zip(&u) {
            prop_assert_eq!(d.fold(x).1, b);
        }
    }

    #[test]
    fn kirchhoff_graphs_balance_conditions(seed in any::<u64>()) {
        let g = random_kirchhoff_graph(&mut ChaCha8Rng::seed_from_u64(seed));
        let c = g.count_conditions().unwrap();
        // recount from the edge list: every finite end meets a vertex, every
        // half-line has one vertex end and one condition at infinity
        let ends: usize = g.edges.iter().map(|e| if e.is_infinite() { 1 } else { 2 }).sum();
        let leads = g.edges.iter().filter(|e| e.is_infinite()).count();
        prop_assert_eq!(c.node_conditions, ends);
        prop_assert_eq!(c.infinity_conditions, leads);
        prop_assert_eq!(c.total, c.disposable_constants);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn folded_polynomials_are_hermitian(
        kappa in 0.5f64..5.0,
        c in proptest::collection::vec(-1.0f64..1.0, 5),
    ) {
        let grid = small_folded_grid(kappa, 61);
        let v = PotentialSpec::Polynomial { coefficients: c };
        let h = build_folded_hamiltonian(&DispersionLaw::cubic(kappa), &grid, &v).unwrap();
        prop_assert!(h.hermiticity_defect() <= 1e-12 * h.max_abs());
    }

    #[test]
    fn eigenstates_are_stationary_and_mixtures_are_not(kappa in 0.5f64..5.0, alpha in 0.5f64..3.0) {
        let grid = small_folded_grid(kappa, 61);
        let h = build_folded_hamiltonian(&DispersionLaw::cubic(kappa), &grid, &PotentialSpec::harmonic(alpha)).unwrap();
        let eig = solve_eigensystem(&h, 2).unwrap();
        let basis = OperatorBasis::banded(h.dimension(), 2);
        let scale = h.max_abs();
        for i in 0..2 {
            let r = stationarity_residual(&h, &eig.vector(i), &basis).unwrap();
            let worst = r.into_iter().fold(0.0, f64::max);
            prop_assert!(worst < 1e-10 * scale, "level {}: {}", i, worst);
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mix: Vec<C64> = eig.vector(0).iter().zip(eig.vector(1)).map(|(a, b)| (a + b) * s).collect();
        let worst = stationarity_residual(&h, &mix, &basis).unwrap().into_iter().fold(0.0, f64::max);
        prop_assert!(worst > 1e-6 * (eig.values[1] - eig.values[0]), "{}", worst);
    }

    #[test]
    fn crank_nicolson_keeps_the_norm(
        kappa in 0.5f64..5.0,
        center in -2.0f64..2.0,
        boost in -2.0f64..2.0,
    ) {
        let grid = small_folded_grid(kappa, 121);
        let h = build_folded_hamiltonian(&DispersionLaw::cubic(kappa), &grid, &PotentialSpec::harmonic(1.0)).unwrap();
        let rep = Representation::of(&h).unwrap();
        let psi = MultiWave::gaussian(rep, GaussianPacket { center, width: 0.7, boost }).unwrap();
        let options = PropagationOptions { budget: None, ..Default::default() };
        let (_, report) = propagate_with(&h, &psi, 1e-2, 100, &options).unwrap();
        prop_assert!(report.norm_drift() < 1e-11, "{}", report.norm_drift());
        prop_assert!(report.energy_drift() < 1e-9 * h.max_abs(), "{}", report.energy_drift());
    }

    #[test]
    fn inner_orbits_conserve_energy(seed in any::<u64>()) {
        let s0 = random_inner_state(&mut ChaCha8Rng::seed_from_u64(seed));
        let system = ClassicalSystem::new(3.0, PotentialSpec::harmonic(-1.0));
        let traj = system.integrate_hamilton(s0, 10.0, &IntegrationOptions::default()).unwrap();
        prop_assert!(traj.events.is_empty());
        prop_assert!(traj.energy_drift() < 1e-9, "{}", traj.energy_drift());
        prop_assert!((traj.last().t - 10.0).abs() < 1e-12);
    }
}
