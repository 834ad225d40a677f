mod common;

use std::sync::Arc;

use aclab::energy::{AtomisticEnergy, ChainAtomistic, EnergyFunctional};
use aclab::geometry::{oscillation, AtomisticMesh, Neighbourhoods, P0TensorField, Region};
use aclab::lattice::{Deformation, LatticeDomain, Matrix};
use aclab::potential::{cauchy_born_stress, presets, EmbeddedPairPotential, SitePotential};
use aclab::sampling::{self, SmoothField};
use aclab::stress::{
    atomistic_lipschitz_check, mean_stress, pairing_defect, representation_residual, sigma_ac,
    sigma_atomistic, sigma_atomistic_1d,
};
use common::*;

#[test]
fn homogeneous_atomistic_stress_is_cauchy_born_stress() {
    let pot = morse();
    let mesh = AtomisticMesh::new(domain2(6));
    for f in standard_strains() {
        let sigma = sigma_atomistic(&pot, mesh, &Deformation::homogeneous(*mesh.domain(), f));
        let dw = cauchy_born_stress(&pot, &f);
        assert!(sigma
            .values()
            .iter()
            .all(|s| (s - dw).norm() < 1e-12 * (1.0 + dw.norm())));
    }
}

#[test]
fn atomistic_stress_represents_the_first_variation() {
    let mut rng = sampling::rng(21);
    let dom = domain2(8);
    let mesh = AtomisticMesh::new(dom);
    let potentials: Vec<Arc<dyn SitePotential<2>>> = vec![
        Arc::new(morse()),
        Arc::new(EmbeddedPairPotential::new(morse(), 0.4)),
    ];
    for pot in potentials {
        let e = AtomisticEnergy::new(dom, pot.clone());
        for _ in 0..4 {
            let y = random_state(dom, &mut rng);
            let sigma = sigma_atomistic(pot.as_ref(), mesh, &y);
            let phi = e.first_variation(&y);
            let scale = 1.0 + phi.max_nodal();
            assert!(representation_residual(&phi, &sigma) <= 1e-10 * scale);
            let z = random_direction_unscaled(dom, &mut rng);
            assert!(
                pairing_defect(&e, &sigma, &y, &z).abs() <= 1e-10 * (1.0 + phi.apply(&z).abs())
            );
        }
    }
}

#[test]
fn coupled_stress_represents_the_coupled_variation() {
    let mut rng = sampling::rng(22);
    let pot = morse();
    let e = bond_split(8, 2, 2, pot.clone());
    let dom = domain2(8);
    for _ in 0..4 {
        let y = random_state(dom, &mut rng);
        let sigma = sigma_ac(&e, &y);
        let phi = e.first_variation(&y);
        assert!(representation_residual(&phi, &sigma) <= 1e-10 * (1.0 + phi.max_nodal()));
        let sa = sigma_atomistic(&pot, *e.geometry().mesh(), &y);
        let decomp = e.geometry().decomposition();
        for t in decomp.elements_in(Region::Atomistic) {
            assert!((sigma.at(t) - sa.at(t)).norm() < 1e-12);
        }
        for t in decomp.elements_in(Region::Continuum) {
            let dw = cauchy_born_stress(&pot, &e.geometry().mesh().gradient(&y, t));
            assert_eq!(sigma.at(t), dw);
        }
    }
}

#[test]
fn consistent_coupling_has_cauchy_born_mean_stress() {
    let pot = morse();
    let e = bond_split(8, 2, 2, pot.clone());
    for f in standard_strains() {
        let sigma = sigma_ac(&e, &Deformation::homogeneous(domain2(8), f));
        let dw = cauchy_born_stress(&pot, &f);
        assert!((mean_stress(&sigma) - dw).norm() <= 1e-10);
    }
}

#[test]
fn constant_stress_represents_nothing_on_displacements() {
    let mesh = AtomisticMesh::new(domain2(5));
    let s0 = Matrix::<2>::new(1.0, 2.0, -0.5, 0.3);
    let sigma = P0TensorField::constant(mesh, s0);
    assert!((mean_stress(&sigma) - s0).norm() < 1e-14);
    let phi = aclab::stress::stress_functional(&sigma);
    assert!(phi.max_nodal() < 1e-12);
    assert!((phi.macro_stress - s0).norm() < 1e-12);
}

#[test]
fn atomistic_stress_is_lipschitz_in_the_local_gradient() {
    let mut rng = sampling::rng(23);
    let pot = morse();
    let dom = domain2(10);
    let nb = Neighbourhoods::new(AtomisticMesh::new(dom), pot.stencil()).unwrap();
    for _ in 0..4 {
        let y = SmoothField::<2>::random(&mut rng, 0.05, 0.1, 3).sample(dom);
        let check = atomistic_lipschitz_check(&pot, &nb, &y).unwrap();
        assert!(check.holds(), "worst ratio {}", check.worst_ratio());
    }
}

#[test]
fn one_dimensional_stress_matches_interval_coefficients() {
    let mut rng = sampling::rng(24);
    let dom = LatticeDomain::<1>::new(12).unwrap();
    let chain = presets::morse_chain();
    let pot = chain.site_potential().unwrap();
    let y = SmoothField::<1>::random(&mut rng, 0.05, 0.1, 2).sample(dom);
    let generic = sigma_atomistic_1d(&pot, &y);
    let explicit = ChainAtomistic::new(chain, dom).interval_stress(&y);
    for (a, b) in generic.iter().zip(&explicit) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn oscillation_of_affine_and_two_valued_fields() {
    let mesh = AtomisticMesh::new(domain2(4));
    let a = Matrix::<2>::new(1.0, 0.2, 0.0, 1.0);
    let field = P0TensorField::constant(mesh, a);
    let nb = Neighbourhoods::new(mesh, morse().stencil()).unwrap();
    assert_eq!(oscillation(&field, &nb.interaction(5)).unwrap(), 0.0);
    let mut two = field.clone();
    let b = Matrix::<2>::new(0.0, 0.0, 1.0, 0.0);
    two.values_mut()[0] += b;
    let osc = oscillation(&two, &[0, 1]).unwrap();
    assert!((osc - b.norm() / mesh.eps()).abs() < 1e-12);
    assert!(oscillation(&two, &[]).is_err());
}

#[test]
fn neighbourhood_patterns_contain_their_element() {
    let mesh = AtomisticMesh::new(domain2(6));
    let pot = presets::harmonic_nearest_neighbour(1.0);
    let nb = Neighbourhoods::new(mesh, pot.stencil()).unwrap();
    for t in [0, 1, 17, 40] {
        assert!(nb.interaction(t).contains(&t));
        // Every triangle touches itself, 3 edge neighbours and 9 vertex neighbours.
        assert_eq!(nb.touching(t).len(), 13);
    }
    // Nearest-neighbour stencil: T ± ε e_j and their sums cover a 3×3 block of cells
    // around the element's cell, minus corners that only touch.
    let n = nb.interaction(0).len();
    assert!((18..=32).contains(&n), "{n}");
}

#[test]
fn oscillation_of_smooth_fields_scales_with_curvature() {
    let mut rng = sampling::rng(25);
    for n in [8usize, 16, 32] {
        let dom = domain2(n);
        let mesh = AtomisticMesh::new(dom);
        let f = SmoothField::<2>::random(&mut rng, 0.0, 0.1, 1);
        let grads = P0TensorField::gradient_of(mesh, &f.sample(dom));
        let nb =
            Neighbourhoods::new(mesh, presets::harmonic_nearest_neighbour(1.0).stencil()).unwrap();
        let m = &f.modes[0];
        let k2 = (m.wave[0] * m.wave[0] + m.wave[1] * m.wave[1]) as f64;
        let curvature = std::f64::consts::PI.powi(2) * m.amplitude.norm() * k2.sqrt() * k2.sqrt();
        let osc = (0..mesh.num_elements())
            .map(|t| oscillation(&grads, &nb.touching(t)).unwrap())
            .fold(0.0, f64::max);
        // Touching elements lie within distance 2√2 ε of each other.
        assert!(
            osc <= 2.0 * 2f64.sqrt() * curvature * 1.1 + 1e-12,
            "N = {n}: {osc} vs {curvature}"
        );
    }
}
