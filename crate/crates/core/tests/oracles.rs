//! Closed-form and independently computed reference values, checked through
//! the public API.

use std::f64::consts::PI;

use branchq::classical::{ClassicalState, ClassicalSystem, IntegrationOptions, Termination};
use branchq::evolution::{
    propagate_with, GaussianPacket, MultiWave, PropagationOptions, Representation,
};
use branchq::geometry::RootLabel;
use branchq::graph::{
    graph_hamiltonian, star_secular_spectrum, MetricGraph, Resolution, VertexCondition,
};
use branchq::operators::{
    build_convolution_hamiltonian, build_folded_hamiltonian, build_unfolded_hamiltonian, KernelMode,
};
use branchq::spectra::{eigenvalues, solve_eigensystem, variance};
use branchq::{Branch, BranchedDomain, CoordinateKind, DispersionLaw, Grid, PotentialSpec};
use num_complex::Complex64 as C64;

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol:e})");
}

/// Newton on `v^3 - kappa v - p` from `v0`.
fn newton_root(kappa: f64, p: f64, mut v: f64) -> f64 {
    for _ in 0..100 {
        let step = (v * v * v - kappa * v - p) / (3.0 * v * v - kappa);
        v -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    v
}

#[test]
fn cusp_points() {
    let c = DispersionLaw::cubic(3.0).cusp_points().unwrap();
    assert_eq!((c.xdot_minus, c.xdot_plus), (-1.0, 1.0));
    assert_eq!((c.p_minus, c.p_plus), (-2.0, 2.0));
    let c = DispersionLaw::cubic(0.75).cusp_points().unwrap();
    close(c.xdot_plus, 0.5, 1e-15);
    close(c.p_plus, 0.25, 1e-15);
    close(c.p_minus, -0.25, 1e-15);
    let c = DispersionLaw::cubic(1e-8).cusp_points().unwrap();
    assert!(c.p_plus - c.p_minus < 1e-11);
}

#[test]
fn momentum_inversion() {
    let law = DispersionLaw::cubic(3.0);
    let r: Vec<f64> = law.invert_momentum(0.0).iter().map(|r| r.xdot).collect();
    close(r[0], -3f64.sqrt(), 1e-14);
    close(r[1], 0.0, 1e-14);
    close(r[2], 3f64.sqrt(), 1e-14);

    let r = law.invert_momentum(2.0);
    assert_eq!(r.len(), 2);
    assert_eq!(r[0].label, RootLabel::Junction(Branch::One, Branch::Two));
    close(r[0].xdot, -1.0, 1e-14);
    assert_eq!(r[1].label, RootLabel::Branch(Branch::Three));
    close(r[1].xdot, 2.0, 1e-14);

    let r = law.invert_momentum(3.0);
    assert_eq!(r.len(), 1);
    close(r[0].xdot, newton_root(3.0, 3.0, 2.0), 1e-12);
    close(r[0].xdot, 2.103_803_402_735_536_6, 1e-12);
}

#[test]
fn branch_energies() {
    let law = DispersionLaw::cubic(3.0);
    close(law.energy_of_velocity(1.0), -0.75, 1e-15);
    close(law.branch_energy(0.0, Branch::Two).unwrap(), 0.0, 1e-15);
    close(law.branch_energy(0.0, Branch::Three).unwrap(), 2.25, 1e-13);
    let e1 = law.branch_energy(2.0, Branch::One).unwrap();
    let e2 = law.branch_energy(2.0, Branch::Two).unwrap();
    close(e1, -0.75, 1e-12);
    close(e2, -0.75, 1e-12);
    // the inner-branch minimum by dense sampling
    let min = (0..=20_000)
        .map(|i| law.energy_of_velocity(-1.0 + i as f64 * 1e-4))
        .fold(f64::INFINITY, f64::min);
    close(min, -0.75, 1e-12);
}

#[test]
fn unfolding_with_symmetric_junctions() {
    let d = BranchedDomain::new(-2.0, 2.0);
    assert_eq!(d.unfold(2.0, Branch::One).unwrap(), -2.0);
    assert_eq!(d.unfold(0.0, Branch::Two).unwrap(), 0.0);
    assert_eq!(d.unfold(-2.0, Branch::Three).unwrap(), 2.0);
    assert_eq!(d.fold(2.0), (-2.0, Branch::Three));
}

fn folded_grid(n: usize, half_width: f64) -> Grid {
    let law = DispersionLaw::cubic(3.0);
    Grid::with_count(CoordinateKind::FoldedP, law.domain(), n, half_width).unwrap()
}

#[test]
fn free_branched_hamiltonian_is_diagonal() {
    let law = DispersionLaw::cubic(3.0);
    let grid = folded_grid(401, 8.0);
    let h = build_folded_hamiltonian(&law, &grid, &PotentialSpec::zero()).unwrap();
    let n = h.dimension();
    for j in 0..n {
        for i in 0..n {
            if i != j {
                assert_eq!(h.data[(i, j)], C64::new(0.0, 0.0));
            }
        }
    }
    let e = eigenvalues(&h).unwrap();
    // the sampled minimum sits within one spacing of the cusp value
    assert!(
        e[0] >= -0.75 - 1e-12 && e[0] < -0.75 + grid.spacing(),
        "{}",
        e[0]
    );
}

#[test]
fn folded_and_unfolded_harmonic_spectra_agree() {
    let law = DispersionLaw::cubic(3.0);
    let grid = folded_grid(800, 12.0);
    let v = PotentialSpec::harmonic(1.0);
    let hf = build_folded_hamiltonian(&law, &grid, &v).unwrap();
    assert!(hf.hermiticity_defect() < 1e-12 * hf.max_abs());
    let hu =
        build_unfolded_hamiltonian(&law, &grid.with_kind(CoordinateKind::UnfoldedXi), &v).unwrap();
    let a = solve_eigensystem(&hf, 10).unwrap();
    let b = solve_eigensystem(&hu, 10).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        close(*x, *y, 1e-8);
    }
}

#[test]
fn two_level_mixture_variance() {
    let law = DispersionLaw::free_particle();
    let grid = Grid::with_count(
        CoordinateKind::UnfoldedXi,
        BranchedDomain::unbranched(),
        800,
        12.0,
    )
    .unwrap();
    let h = build_unfolded_hamiltonian(&law, &grid, &PotentialSpec::harmonic(1.0)).unwrap();
    let eig = solve_eigensystem(&h, 2).unwrap();
    close(eig.values[0], 0.5, 2e-3);
    close(eig.values[1], 1.5, 1e-2);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mix: Vec<C64> = eig
        .vector(0)
        .iter()
        .zip(eig.vector(1))
        .map(|(a, b)| (a + b) * s)
        .collect();
    let gap = eig.values[1] - eig.values[0];
    close(variance(&h, &mix), 0.25 * gap * gap, 1e-10);
    assert!(variance(&h, &eig.vector(0)) < 1e-12);
}

#[test]
fn gaussian_kernel_and_modes() {
    let v = PotentialSpec::gaussian(1.0, 0.0, 1.0);
    for q in [0.0, 0.3, 1.0, 2.5] {
        let k = v.fourier(q).unwrap();
        close(k.re, (2.0 * PI).sqrt() * (-0.5 * q * q).exp(), 1e-14);
        close(k.im, 0.0, 1e-14);
    }
    let law = DispersionLaw::cubic(3.0);
    let grid = Grid::with_count(CoordinateKind::UnfoldedXi, law.domain(), 301, 10.0).unwrap();
    let naive = build_convolution_hamiltonian(&law, &grid, &v, KernelMode::Naive).unwrap();
    let herm = build_convolution_hamiltonian(&law, &grid, &v, KernelMode::Hermitian).unwrap();
    assert_eq!(naive.data, herm.data);

    let shifted = PotentialSpec::gaussian(1.0, 1.0, 1.0);
    let naive = build_convolution_hamiltonian(&law, &grid, &shifted, KernelMode::Naive).unwrap();
    let herm = build_convolution_hamiltonian(&law, &grid, &shifted, KernelMode::Hermitian).unwrap();
    assert!(naive.hermiticity_defect() > 1e-3);
    assert!(herm.hermiticity_defect() < 1e-12 * herm.max_abs());
}

#[test]
fn star_secular_roots() {
    let k = star_secular_spectrum(3, 1.0, 7.0);
    let want = [0.5 * PI, PI, PI, 1.5 * PI, 2.0 * PI, 2.0 * PI];
    assert_eq!(k.len(), want.len());
    for (a, b) in k.iter().zip(want) {
        close(*a, b, 1e-10);
    }
    let half = star_secular_spectrum(3, 2.0, 3.5);
    for (a, b) in half.iter().zip(&k) {
        close(*a, 0.5 * b, 1e-10);
    }
}

#[test]
fn transparent_vertex_gives_interval_levels() {
    let g = MetricGraph::chain(&[0.5 * PI, 0.5 * PI], VertexCondition::Kirchhoff).unwrap();
    let h = graph_hamiltonian(&g, Resolution::Intervals(1000), 1.0).unwrap();
    let e = solve_eigensystem(&h, 4).unwrap().values;
    for (n, x) in e.iter().enumerate() {
        let m = (n + 1) as f64;
        close(*x, m * m, 1e-4);
    }
}

#[test]
fn condition_counts() {
    let c = MetricGraph::compton(1.0).count_conditions().unwrap();
    assert_eq!(
        (
            c.node_conditions,
            c.infinity_conditions,
            c.total,
            c.disposable_constants
        ),
        (6, 4, 10, 10)
    );
    let c = MetricGraph::box_graph(1.0).count_conditions().unwrap();
    assert_eq!(
        (
            c.node_conditions,
            c.infinity_conditions,
            c.total,
            c.disposable_constants
        ),
        (12, 4, 16, 16)
    );
    let c = MetricGraph::free_line().count_conditions().unwrap();
    assert_eq!(
        (
            c.node_conditions,
            c.infinity_conditions,
            c.disposable_constants
        ),
        (0, 2, 2)
    );
}

#[test]
fn classical_reference_values() {
    let well = ClassicalSystem::new(3.0, PotentialSpec::harmonic(1.0));
    let (dx, dv) = well
        .hamilton_rhs(&ClassicalState {
            x: 1.0,
            xdot: 2.0,
            t: 0.0,
        })
        .unwrap();
    close(dx, 2.0, 1e-14);
    close(dv, -1.0 / 9.0, 1e-15);
    close(
        well.energy(&ClassicalState {
            x: 1.0,
            xdot: 0.0,
            t: 0.0,
        }),
        0.5,
        1e-15,
    );
    let free = ClassicalSystem::new(3.0, PotentialSpec::zero());
    close(
        free.energy(&ClassicalState {
            x: 0.0,
            xdot: 2.0,
            t: 0.0,
        }),
        6.0,
        1e-15,
    );

    let opts = IntegrationOptions::default();
    let t = free
        .integrate_hamilton(
            ClassicalState {
                x: 0.5,
                xdot: 2.0,
                t: 0.0,
            },
            5.0,
            &opts,
        )
        .unwrap();
    close(t.last().x, 10.5, 1e-10);
    close(t.last().xdot, 2.0, 1e-14);

    // E = 6 reaches the branch edge xdot = 1 at x^2 / 2 = 6 + 3/4
    let t = well
        .integrate_hamilton(
            ClassicalState {
                x: 0.0,
                xdot: 2.0,
                t: 0.0,
            },
            50.0,
            &opts,
        )
        .unwrap();
    assert_eq!(t.termination, Termination::Halted);
    assert_eq!(t.events.len(), 1);
    close(t.last().x, 13.5f64.sqrt(), 1e-10);
    assert!(t.events[0].gap < 1e-9);
    assert!(t.energy_drift() < 1e-8);
}

#[test]
fn diagonal_evolution_keeps_moduli() {
    let law = DispersionLaw::cubic(3.0);
    let grid = folded_grid(201, 8.0);
    let h = build_folded_hamiltonian(&law, &grid, &PotentialSpec::zero()).unwrap();
    let rep = Representation::of(&h).unwrap();
    let psi = MultiWave::gaussian(
        rep,
        GaussianPacket {
            center: -1.0,
            width: 0.8,
            boost: 2.0,
        },
    )
    .unwrap();
    let options = PropagationOptions {
        budget: None,
        ..Default::default()
    };
    let (last, _) = propagate_with(&h, &psi, 1e-2, 300, &options).unwrap();
    for (a, b) in psi.values.iter().zip(&last.values) {
        close(a.norm(), b.norm(), 1e-13);
    }
}
