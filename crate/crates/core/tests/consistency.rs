mod common;

use std::sync::Arc;

use aclab::consistency::{
    certify_first_order, coarsening_check, dual_norm_1d, dual_norm_2d, interval_coefficients,
    lp_eps, model_error, pairing_ratio_1d, qce_sharpness_1d, qnl_consistency_1d,
    solve_gradient_system, Counterexample, CounterexampleKind, DualNorm, Verdict,
};
use aclab::energy::{
    force_from_interval_stress, gradient_check, AtomisticEnergy, EnergyFunctional, ForceFunctional,
    InterfaceModel, QceEnergy,
};
use aclab::geometry::{AtomisticMesh, CoarseMesh, P0TensorField};
use aclab::lattice::{Deformation, LatticeDomain, Matrix, NodalField, Vector};
use aclab::patch_test::ghost_force;
use aclab::potential::{presets, SitePotential};
use aclab::sampling::{self, SmoothField};
use aclab::stress::stress_functional;
use common::*;
use nalgebra::DMatrix;
use rand::Rng;

fn balanced_random_functional(dom: LatticeDomain<2>, rng: &mut impl Rng) -> ForceFunctional<2> {
    let mut phi = ForceFunctional::zeros(dom);
    phi.nodal = sampling::random_displacement(dom, rng, 1.0);
    let mean = phi.nodal.mean();
    for v in phi.nodal.values_mut() {
        *v -= mean;
    }
    phi
}

/// `sqrt(fᵀ K⁺ f)` with the dense periodic stiffness matrix `K`.
fn dense_dual_norm(phi: &ForceFunctional<2>) -> f64 {
    let dom = *phi.domain();
    let n = dom.num_sites();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for x in dom.sites() {
        let i = dom.index(x);
        for r in [[1, 0], [0, 1]] {
            let j = dom.index([x[0] + r[0], x[1] + r[1]]);
            k[(i, i)] += 1.0;
            k[(j, j)] += 1.0;
            k[(i, j)] -= 1.0;
            k[(j, i)] -= 1.0;
        }
    }
    let pinv = k.pseudo_inverse(1e-10).unwrap();
    (0..2)
        .map(|c| {
            let f = nalgebra::DVector::from_iterator(n, phi.nodal.values().iter().map(|v| v[c]));
            f.dot(&(&pinv * &f))
        })
        .sum::<f64>()
        .sqrt()
}

#[test]
fn dual_norm_of_zero_and_of_constant_stress_vanishes() {
    let dom = domain2(6);
    let zero = ForceFunctional::zeros(dom);
    assert_eq!(dual_norm_2d(&zero, 2.0, &[]).unwrap(), DualNorm::Exact(0.0));
    let sigma = P0TensorField::constant(
        AtomisticMesh::new(dom),
        Matrix::<2>::new(1.0, 2.0, -0.5, 3.0),
    );
    let phi = stress_functional(&sigma);
    assert!(dual_norm_2d(&phi, 2.0, &[]).unwrap().upper() < 1e-12);
}

#[test]
fn p2_dual_norm_matches_dense_oracle() {
    let mut rng = sampling::rng(1);
    for n in [2, 3, 4, 6] {
        let dom = domain2(n);
        for _ in 0..3 {
            let phi = balanced_random_functional(dom, &mut rng);
            let cg = dual_norm_2d(&phi, 2.0, &[]).unwrap();
            assert!(cg.is_exact());
            let oracle = dense_dual_norm(&phi);
            assert!(
                (cg.lower() - oracle).abs() < 1e-10 * oracle,
                "N={n}: {cg:?} vs {oracle}"
            );
        }
    }
}

#[test]
fn gradient_solve_satisfies_galerkin_orthogonality() {
    let mut rng = sampling::rng(2);
    let phi = balanced_random_functional(domain2(12), &mut rng);
    let solve = solve_gradient_system(&phi).unwrap();
    assert!(solve.residual <= 1e-11, "{}", solve.residual);
    assert!(solve.potential.mean().norm() < 1e-14);
    // ∫∇u:∇v = ⟨Φ, v⟩ for a random v.
    let dom = *phi.domain();
    let v = Deformation::new(
        Matrix::<2>::zeros(),
        sampling::random_displacement(dom, &mut rng, 1.0),
    );
    let u = Deformation::new(Matrix::<2>::zeros(), solve.potential.clone());
    let grad_u = P0TensorField::gradient_of(AtomisticMesh::new(dom), &u);
    let lhs = grad_u.pair_with(&v);
    let rhs = phi.nodal.dot(v.displacement());
    assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
}

#[test]
fn dual_norm_ignores_added_constant_stress() {
    let mut rng = sampling::rng(3);
    let dom = domain2(8);
    let phi = balanced_random_functional(dom, &mut rng);
    let sigma = P0TensorField::constant(
        AtomisticMesh::new(dom),
        Matrix::<2>::new(0.3, -1.0, 2.0, 0.7),
    );
    let mut shifted = phi.clone();
    let extra = stress_functional(&sigma);
    for (a, b) in shifted
        .nodal
        .values_mut()
        .iter_mut()
        .zip(extra.nodal.values())
    {
        *a += b;
    }
    let a = dual_norm_2d(&phi, 2.0, &[]).unwrap().lower();
    let b = dual_norm_2d(&shifted, 2.0, &[]).unwrap().lower();
    assert!((a - b).abs() < 1e-12 * a);
}

#[test]
fn unbalanced_forces_are_rejected() {
    let dom = domain2(4);
    let mut phi = ForceFunctional::zeros(dom);
    phi.nodal.values_mut()[0] = Vector::<2>::new(1.0, 0.0);
    assert!(dual_norm_2d(&phi, 2.0, &[]).is_err());
    let dom1 = LatticeDomain::<1>::new(8).unwrap();
    let mut phi1 = ForceFunctional::zeros(dom1);
    phi1.nodal.values_mut()[3] = Vector::<1>::new(1.0);
    assert!(dual_norm_1d(&phi1, 2.0).is_err());
}

#[test]
fn bounds_bracket_the_norm_for_other_exponents() {
    let mut rng = sampling::rng(4);
    let dom = domain2(8);
    let mesh = AtomisticMesh::new(dom);
    // Φ = div σ for a random σ, so σ is an admissible representation.
    let sigma = P0TensorField::from_fn(mesh, |_| sampling::random_strain::<2>(&mut rng, 1.0));
    let phi = stress_functional(&sigma);
    let exact = dual_norm_2d(&phi, 2.0, &[]).unwrap().lower();
    for p in [1.0, 1.5, 4.0, f64::INFINITY] {
        let b = dual_norm_2d(&phi, p, std::slice::from_ref(&sigma)).unwrap();
        assert!(!b.is_exact());
        assert!(b.lower() > 0.0 && b.lower() <= b.upper(), "p={p}: {b:?}");
        let centred = sigma.map(|m| m - sigma.mean());
        assert!(b.upper() <= centred.lp_norm(p) * (1.0 + 1e-12));
    }
    // On a domain of measure 4, ∥·∥_{L^1} ≤ 2 ∥·∥_{L^2} ≤ 4 ∥·∥_{L^∞} for the representation
    // norms, so the dual norms inherit the same ordering up to the bracket.
    let one = dual_norm_2d(&phi, 1.0, &[]).unwrap();
    let inf = dual_norm_2d(&phi, f64::INFINITY, &[]).unwrap();
    assert!(one.lower() <= 2.0 * exact * (1.0 + 1e-12));
    assert!(exact <= 2.0 * inf.upper() * (1.0 + 1e-12));
}

#[test]
fn one_dimensional_dual_norm_is_the_distance_to_constants() {
    let mut rng = sampling::rng(5);
    let dom = LatticeDomain::<1>::new(16).unwrap();
    let c: Vec<f64> = (0..dom.num_sites())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let phi = force_from_interval_stress(dom, &c);
    let recovered = interval_coefficients(&phi).unwrap();
    let shift = c[0] - recovered[0];
    for (a, b) in recovered.iter().zip(&c) {
        assert!((a + shift - b).abs() < 1e-12);
    }
    let eps = dom.eps();
    for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
        let norm = dual_norm_1d(&phi, p).unwrap();
        // No constant shift does better.
        for k in [-0.3, 0.0, 0.1, 0.5] {
            assert!(norm <= lp_eps(c.iter().map(|v| v - k), eps, p) * (1.0 + 1e-9));
        }
        // No test function does better either.
        for _ in 0..20 {
            let mut d: Vec<f64> = (0..dom.num_sites())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            d.iter_mut().for_each(|v| *v -= mean);
            assert!(pairing_ratio_1d(&phi, &d, p).unwrap() <= norm * (1.0 + 1e-9));
        }
    }
    // For p = 2 the centred coefficients are the maximiser.
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    let d: Vec<f64> = c.iter().map(|v| v - mean).collect();
    let ratio = pairing_ratio_1d(&phi, &d, 2.0).unwrap();
    assert!((ratio - dual_norm_1d(&phi, 2.0).unwrap()).abs() < 1e-12);
}

#[test]
fn consistent_coupling_has_no_model_error_at_homogeneous_states() {
    let pot = morse();
    let e = bond_split(8, 2, 2, pot);
    for f in standard_strains() {
        let y = Deformation::homogeneous(domain2(8), f);
        let report = certify_first_order(&e, &y, 2.0).unwrap();
        assert!(report.lhs.upper() < 1e-10, "{report:?}");
        assert!(report.rhs < 1e-10);
        assert_eq!(report.verdict(), Verdict::Holds);
    }
}

#[test]
fn bond_split_coupling_satisfies_the_first_order_estimate() {
    let pot = morse();
    let mut rng = sampling::rng(6);
    let e = bond_split(10, 3, 2, pot);
    for _ in 0..3 {
        let y = SmoothField::<2>::random(&mut rng, 0.05, 0.1, 3).sample(domain2(10));
        let report = certify_first_order(&e, &y, 2.0).unwrap();
        assert!(report.violations.is_empty());
        assert!(report.lhs.upper() > 0.0);
        assert_eq!(report.verdict(), Verdict::Holds, "{report:?}");
        for p in [1.0, f64::INFINITY] {
            let r = certify_first_order(&e, &y, p).unwrap();
            assert_eq!(r.verdict(), Verdict::Holds, "{r:?}");
        }
    }
}

#[test]
fn qce_is_inconsistent_at_homogeneous_states() {
    let pot = morse();
    let dom = domain2(8);
    let qce = QceEnergy::block(Arc::new(pot.clone()), AtomisticMesh::new(dom), 2);
    let reference = AtomisticEnergy::new(dom, Arc::new(pot));
    let f = standard_strains()[3];
    let y = Deformation::homogeneous(dom, f);
    let err = model_error(&qce, &reference, &y, 2.0, &[]).unwrap();
    assert!(err.lower() > 1e-3, "{err:?}");
    let grads = P0TensorField::gradient_of(AtomisticMesh::new(dom), &y);
    assert!(grads.values().iter().all(|g| (g - f).norm() < 1e-14));
}

fn smooth_chain(dom: LatticeDomain<1>, amplitude: f64) -> Deformation<1> {
    Deformation::from_displacement_fn(dom, Matrix::<1>::new(1.02), |x| {
        let s = std::f64::consts::PI * x[0];
        Vector::<1>::new(amplitude * (s.sin() + 0.5 * (2.0 * s + 0.3).cos()) / std::f64::consts::PI)
    })
}

#[test]
fn qnl_error_vanishes_at_homogeneous_states() {
    let chain = presets::morse_chain();
    let dom = LatticeDomain::<1>::new(32).unwrap();
    let y = Deformation::homogeneous(dom, Matrix::<1>::new(1.05));
    for p in [1.0, 2.0, f64::INFINITY] {
        let r = qnl_consistency_1d(&chain, &y, 8, p).unwrap();
        assert!(r.lhs < 1e-12 && r.rhs() < 1e-12, "{r:?}");
    }
}

#[test]
fn qnl_error_obeys_its_bound() {
    let chain = presets::morse_chain();
    for n in [32usize, 64, 128] {
        let dom = LatticeDomain::<1>::new(n).unwrap();
        let y = smooth_chain(dom, 0.1);
        for p in [1.0, 2.0, f64::INFINITY] {
            let r = qnl_consistency_1d(&chain, &y, n / 4, p).unwrap();
            assert!(r.lhs > 0.0);
            assert!(r.holds(), "N={n}, p={p}: {r:?}");
        }
    }
}

#[test]
fn quadratic_second_neighbours_leave_only_interface_curvature() {
    // With φ₂ quadratic the curvature term vanishes, and a deformation that is
    // affine near both interfaces makes the interface term vanish as well.
    let chain = presets::harmonic_chain(1.0, 0.4);
    let n = 64;
    let dom = LatticeDomain::<1>::new(n).unwrap();
    let k = 16;
    let eps = dom.eps();
    let y = Deformation::from_displacement_fn(dom, Matrix::<1>::new(1.0), |x| {
        // Bump centred at x = ±1 (the periodic boundary), far from ±Kε.
        let d = 1.0 - x[0].abs();
        let b = if d < 0.3 {
            (1.0 - (d / 0.3).powi(2)).powi(4)
        } else {
            0.0
        };
        Vector::<1>::new(0.05 * b)
    });
    let r = qnl_consistency_1d(&chain, &y, k, 2.0).unwrap();
    assert_eq!(r.curvature_term, 0.0);
    assert!(r.interface_term < 1e-14);
    assert!(r.lhs <= r.rhs() * (1.0 + 1e-10) + 1e-14, "{r:?}");
    assert!(r.third_derivative_term < 10.0 * eps);
}

#[test]
fn qce_ghost_force_is_sharp_for_p2() {
    let chain = presets::morse_chain();
    for n in [32, 64, 128] {
        let k = n / 4;
        for a in [0.95, 1.0, 1.05] {
            let s = qce_sharpness_1d(&chain, a, k, n, 2.0).unwrap();
            let eps = 1.0 / n as f64;
            let expected = eps.sqrt() * chain.dphi(2, 2.0 * a).abs();
            assert!((s.lower_bound - expected).abs() < 1e-14);
            assert!((s.test_value - s.lower_bound).abs() < 1e-10 * s.lower_bound);
            assert!(
                s.ghost_norm >= 0.5 * s.lower_bound && s.ghost_norm <= 2.0 * s.lower_bound,
                "{s:?}"
            );
        }
    }
}

#[test]
fn qce_test_function_reproduces_the_bound_for_every_exponent() {
    let chain = presets::morse_chain();
    for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
        let s = qce_sharpness_1d(&chain, 1.02, 8, 32, p).unwrap();
        assert!(
            (s.test_value - s.lower_bound).abs() < 1e-10 * s.lower_bound,
            "{s:?}"
        );
        assert!(s.ghost_norm >= s.lower_bound * (1.0 - 1e-10));
    }
}

#[test]
fn qce_without_second_neighbour_force_has_no_ghost_force() {
    let chain = presets::harmonic_chain(1.0, 0.0);
    let s = qce_sharpness_1d(&chain, 1.1, 4, 16, 2.0).unwrap();
    assert_eq!(s.ghost_norm, 0.0);
    assert_eq!(s.lower_bound, 0.0);
}

/// `y = A x + a cos(π x₁)(1 + sin(π x₂)) e₁`: smooth, homogeneous on
/// `x₂ = -1/2`, and `y(0, 1/2) ≠ y(1, 1/2)`.
fn interface_test_state(dom: LatticeDomain<2>, amplitude: f64) -> Deformation<2> {
    use std::f64::consts::PI;
    Deformation::from_displacement_fn(dom, Matrix::<2>::new(1.01, 0.02, -0.01, 0.98), |x| {
        Vector::<2>::new(
            amplitude * (PI * x[0]).cos() * (1.0 + (PI * x[1]).sin()),
            0.0,
        )
    })
}

fn counterexample(kind: CounterexampleKind, n: usize) -> Counterexample {
    Counterexample::new(kind, domain2(n), morse().stencil()).unwrap()
}

#[test]
fn counterexamples_pass_the_patch_test() {
    for n in [8, 16] {
        let eps = 1.0 / n as f64;
        for kind in [
            CounterexampleKind::Locality,
            CounterexampleKind::Scaling { beta: 1.0 / eps },
        ] {
            let j = counterexample(kind, n);
            for f in standard_strains() {
                let y = Deformation::homogeneous(domain2(n), f);
                assert!(EnergyFunctional::energy(&j, &y).abs() < 1e-12);
                let g = ghost_force(&j, &f);
                assert!(g.max_nodal() <= 1e-12, "{kind:?}: {}", g.max_nodal());
            }
        }
    }
}

#[test]
fn counterexample_forces_match_finite_differences() {
    let mut rng = sampling::rng(7);
    let dom = domain2(8);
    for kind in [
        CounterexampleKind::Locality,
        CounterexampleKind::Scaling { beta: 3.0 },
    ] {
        let j = counterexample(kind, 8);
        let y = random_state(dom, &mut rng);
        let z = random_direction(dom, &mut rng);
        let c = gradient_check(&j, &y, &z, 1e-5);
        assert!(c.relative_error() < 1e-6, "{kind:?}: {c:?}");
    }
    assert!(!counterexample(CounterexampleKind::Locality, 8).is_local());
    assert!(counterexample(CounterexampleKind::Scaling { beta: 1.0 }, 8).is_local());
}

#[test]
fn counterexamples_need_even_n_and_a_horizontal_bond() {
    assert!(
        Counterexample::new(CounterexampleKind::Locality, domain2(7), morse().stencil()).is_err()
    );
    let diagonal_only = aclab::lattice::Stencil::new(vec![[1, 1], [-1, -1]]).unwrap();
    assert!(Counterexample::new(CounterexampleKind::Locality, domain2(8), &diagonal_only).is_err());
    assert!(Counterexample::new(
        CounterexampleKind::Scaling { beta: 0.0 },
        domain2(8),
        morse().stencil()
    )
    .is_err());
}

#[test]
fn scaling_counterexample_gives_order_one_error() {
    for n in [8, 16, 32] {
        let dom = domain2(n);
        let eps = dom.eps();
        let y = interface_test_state(dom, 0.05);
        let j = counterexample(CounterexampleKind::Scaling { beta: 1.0 / eps }, n);
        let b = j.lower_bound(&y).unwrap();
        assert!(b.ratio >= 0.01, "N={n}: {b:?}");
        // The test function has ∥∇u∥² = 2 ε Σ_{L+} |D₁u|², twice the value
        // behind the closed form.
        assert!(
            (b.ratio - 2f64.sqrt() * b.closed_form).abs() < 1e-12 * b.ratio,
            "{b:?}"
        );
        let exact = dual_norm_2d(&j.first_variation(&y), 2.0, &[])
            .unwrap()
            .lower();
        assert!(b.ratio <= exact * (1.0 + 1e-10));
    }
}

#[test]
fn scaling_counterexample_bound_is_linear_in_beta() {
    let dom = domain2(16);
    let y = interface_test_state(dom, 0.05);
    let base = counterexample(CounterexampleKind::Scaling { beta: 1.0 }, 16)
        .lower_bound(&y)
        .unwrap();
    for beta in [0.5, 2.0, 16.0, 1000.0] {
        let b = counterexample(CounterexampleKind::Scaling { beta }, 16)
            .lower_bound(&y)
            .unwrap();
        assert!(
            (b.ratio - beta * base.ratio).abs() <= 1e-14 * b.ratio,
            "β={beta}"
        );
    }
}

#[test]
fn locality_counterexample_error_does_not_decay() {
    let mut values = Vec::new();
    for n in [8, 16, 32] {
        let dom = domain2(n);
        let y = interface_test_state(dom, 0.05);
        let j = counterexample(CounterexampleKind::Locality, n);
        let b = j.lower_bound(&y).unwrap();
        let exact = dual_norm_2d(&j.first_variation(&y), 2.0, &[])
            .unwrap()
            .lower();
        assert!(
            b.ratio >= 0.01 && b.ratio <= exact * (1.0 + 1e-10),
            "N={n}: {b:?}, exact {exact}"
        );
        assert!(b.closed_form > 0.0);
        values.push(b.ratio);
    }
    assert!(values[2] > 0.5 * values[0], "{values:?}");
}

#[test]
fn lower_bound_requires_homogeneous_lower_row() {
    let dom = domain2(8);
    let j = counterexample(CounterexampleKind::Locality, 8);
    let mut y = interface_test_state(dom, 0.05);
    y.displacement_mut().values_mut()[dom.index([1, -4])] += Vector::<2>::new(0.01, 0.0);
    assert!(j.lower_bound(&y).is_err());
}

#[test]
fn coarsening_is_invisible_on_the_atomistic_mesh() {
    let pot = morse();
    let mut rng = sampling::rng(8);
    let e = bond_split(8, 2, 2, pot);
    let dom = domain2(8);
    let y = SmoothField::<2>::random(&mut rng, 0.05, 0.1, 3).sample(dom);
    let r = coarsening_check(&e, &CoarseMesh::uniform(dom), &y, 2.0).unwrap();
    assert!(r.coarsening_defect < 1e-12, "{r:?}");
    assert!(r.coarse_estimate <= r.fine_norm.upper() * (1.0 + 1e-10));
    assert!(r.oscillation_term > 0.0);
}

#[test]
fn coarsening_check_vanishes_for_homogeneous_states() {
    let pot = morse();
    let e = bond_split(16, 2, 2, pot);
    let dom = domain2(16);
    let y = Deformation::homogeneous(dom, standard_strains()[2]);
    let r = coarsening_check(&e, &CoarseMesh::for_block(dom, 2, 2).unwrap(), &y, 2.0).unwrap();
    assert!(
        r.coarse_estimate < 1e-10 && r.coarsening_defect < 1e-10 && r.oscillation_term < 1e-12,
        "{r:?}"
    );
}

#[test]
fn coarsening_rejects_meshes_that_do_not_resolve_the_interface() {
    let e = bond_split(16, 2, 2, morse());
    let dom = domain2(16);
    let y = Deformation::homogeneous(dom, Matrix::<2>::identity());
    assert!(coarsening_check(&e, &CoarseMesh::graded(dom, 2).unwrap(), &y, 2.0).is_err());
}

fn coarsening_constants() -> Vec<(f64, f64)> {
    let pot = morse();
    let field = SmoothField::<2>::random(&mut sampling::rng(9), 0.05, 0.1, 2);
    [(8, 2, 2), (16, 4, 4), (32, 8, 8)]
        .into_iter()
        .map(|(n, a, w)| {
            let dom = domain2(n);
            let e = bond_split(n, a, w, pot.clone());
            let mesh = CoarseMesh::for_block(dom, a, w).unwrap();
            let r = coarsening_check(&e, &mesh, &field.sample(dom), 2.0).unwrap();
            assert!(r.constant.is_finite() && r.constant > 0.0, "{r:?}");
            (dom.eps(), r.constant)
        })
        .collect()
}

fn within_half(values: &[f64]) -> bool {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    hi <= 1.5 * lo && lo >= 0.5 * hi
}

#[test]
fn coarsening_constant_stays_bounded_under_refinement() {
    let c = coarsening_constants();
    assert!(c.iter().all(|&(_, k)| k <= c[0].1 * 1.5), "{c:?}");
}

#[test]
fn coarsening_defect_is_one_order_higher_for_smooth_stress() {
    // Jumps of a smooth σ across atomistic faces are O(ε), so the defect
    // carries one more power of ε than the oscillation term.
    let c = coarsening_constants();
    let scaled: Vec<f64> = c.iter().map(|(eps, k)| k / eps).collect();
    assert!(within_half(&scaled), "{c:?}");
}

#[test]
fn lp_eps_matches_definition() {
    let v = [1.0, -2.0, 3.0];
    assert!((lp_eps(v, 0.5, 2.0) - (0.5f64 * 14.0).sqrt()).abs() < 1e-15);
    assert_eq!(lp_eps(v, 0.5, f64::INFINITY), 3.0);
    assert!((lp_eps(v, 0.5, 1.0) - 3.0).abs() < 1e-15);
    let _ = NodalField::<1>::zeros(LatticeDomain::new(2).unwrap());
}
