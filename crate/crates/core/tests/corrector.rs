mod common;

use std::sync::Arc;

use aclab::corrector::{
    divergence_residual, interface_width, path_integral, psi_lipschitz_ratio,
    reconstruct_potential, rotation, Corrector, CrField, DIVERGENCE_TOLERANCE,
};
use aclab::energy::{AcEnergy, BondSplitInterface, EnergyFunctional};
use aclab::geometry::{
    AtomisticMesh, CouplingGeometry, Neighbourhoods, P0TensorField, Region, RegionDecomposition,
};
use aclab::lattice::{Deformation, Matrix, Vector};
use aclab::patch_test::{GccTemplate, SquareGccTemplate};
use aclab::potential::{cauchy_born_stress, SitePotential};
use aclab::sampling::{self, SmoothField};
use aclab::stress::{pairing_defect, sigma_ac};
use aclab::Error;
use common::*;
use rand::Rng;

fn random_cr(mesh: AtomisticMesh, rng: &mut impl Rng) -> CrField {
    CrField::from_fn(mesh, |_| {
        Vector::<2>::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Random walk through edge midpoints, stepping inside one element at a time.
fn random_walk(mesh: &AtomisticMesh, rng: &mut impl Rng, start: usize, steps: usize) -> Vec<usize> {
    let mut path = vec![start];
    let mut e = start;
    for _ in 0..steps {
        let t = mesh.edge_elements(e)[rng.gen_range(0..2)];
        let edges = mesh.element_edges(t);
        e = edges[rng.gen_range(0..3)];
        path.push(e);
    }
    path
}

#[test]
fn path_integral_of_a_cr_gradient_is_the_endpoint_difference() {
    let mut rng = sampling::rng(21);
    let mesh = AtomisticMesh::new(domain2(5));
    let w = random_cr(mesh, &mut rng);
    let grad = w.gradient_field();
    for _ in 0..10 {
        let start = rng.gen_range(0..mesh.num_edges());
        let path = random_walk(&mesh, &mut rng, start, 40);
        let integral = path_integral(&grad, &path).unwrap();
        let expected = w.value(*path.last().unwrap()) - w.value(path[0]);
        assert!((integral - expected).norm() < 1e-12);
    }
}

#[test]
fn closed_loops_of_rotated_divergence_free_fields_vanish() {
    let mut rng = sampling::rng(22);
    let mesh = AtomisticMesh::new(domain2(12));
    let w = random_cr(mesh, &mut rng);
    let j = rotation();
    let sigma = P0TensorField::from_fn(mesh, |t| w.gradient(t) * j);
    assert!(divergence_residual(&sigma) < 1e-12);
    let alpha = P0TensorField::from_fn(mesh, |t| sigma.at(t) * j.transpose());
    let constant = P0TensorField::constant(mesh, Matrix::<2>::new(1.0, 2.0, -3.0, 0.5));
    for _ in 0..10 {
        // Short walks on a large torus stay contractible.
        let mut closed = random_walk(&mesh, &mut rng, 7, 6);
        let last = *closed.last().unwrap();
        closed.extend(shortest_return(&mesh, last, 7));
        assert_eq!(*closed.last().unwrap(), closed[0]);
        assert!(path_integral(&alpha, &closed).unwrap().norm() < 1e-12);
        assert!(path_integral(&constant, &closed).unwrap().norm() < 1e-12);
    }
}

/// Breadth-first path between two edges.
fn shortest_return(mesh: &AtomisticMesh, from: usize, to: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; mesh.num_edges()];
    prev[from] = from;
    let mut queue = std::collections::VecDeque::from([from]);
    while let Some(e) = queue.pop_front() {
        if e == to {
            break;
        }
        for t in mesh.edge_elements(e) {
            for f in mesh.element_edges(t) {
                if prev[f] == usize::MAX {
                    prev[f] = e;
                    queue.push_back(f);
                }
            }
        }
    }
    let mut out = vec![to];
    let mut e = to;
    while e != from {
        e = prev[e];
        out.push(e);
    }
    out.reverse();
    out.remove(0);
    out
}

#[test]
fn path_integral_rejects_segments_outside_an_element() {
    let mesh = AtomisticMesh::new(domain2(5));
    let sigma = P0TensorField::zeros(mesh);
    let far = mesh.num_edges() / 2 + 4;
    assert!(matches!(
        path_integral(&sigma, &[0, far]),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn reconstruction_round_trip_recovers_constant_and_potential() {
    let mut rng = sampling::rng(23);
    let mesh = AtomisticMesh::new(domain2(6));
    let j = rotation();
    for _ in 0..5 {
        let w = random_cr(mesh, &mut rng);
        let sigma0 = sampling::random_strain::<2>(&mut rng, 1.0);
        let sigma = P0TensorField::from_fn(mesh, |t| sigma0 + w.gradient(t) * j);
        let rec = reconstruct_potential(&sigma, DIVERGENCE_TOLERANCE).unwrap();
        assert!((rec.sigma0 - sigma0).norm() < 1e-10);
        assert!(rec.potential.distance_up_to_constant(&w) < 1e-10);
        assert!(rec.residual < 1e-10);
        assert!(rec.loop_residual < 1e-10);
    }
}

#[test]
fn constant_stress_reconstructs_to_zero_potential() {
    let mesh = AtomisticMesh::new(domain2(4));
    let s = Matrix::<2>::new(1.5, -0.2, 0.3, 2.0);
    let rec =
        reconstruct_potential(&P0TensorField::constant(mesh, s), DIVERGENCE_TOLERANCE).unwrap();
    assert!((rec.sigma0 - s).norm() < 1e-14);
    assert!(rec.potential.max_norm() < 1e-14);
}

#[test]
fn divergent_stress_is_refused() {
    let mesh = AtomisticMesh::new(domain2(4));
    let mut sigma = P0TensorField::zeros(mesh);
    sigma.values_mut()[3] = Matrix::<2>::identity();
    match reconstruct_potential(&sigma, DIVERGENCE_TOLERANCE) {
        Err(Error::NotDivergenceFree {
            residual,
            tolerance,
        }) => assert!(residual > tolerance),
        other => panic!("expected refusal, got {other:?}"),
    }
}

#[test]
fn corrector_of_bond_split_coupling_vanishes_on_the_atomistic_region() {
    let mut rng = sampling::rng(24);
    let pot = morse();
    let e = bond_split(10, 3, 2, pot.clone());
    let corrector = Corrector::new(&e).unwrap();
    let decomp = e.geometry().decomposition();
    let mesh = *decomp.mesh();
    let j = rotation();
    for _ in 0..3 {
        let f = sampling::random_strain::<2>(&mut rng, 0.1);
        let psi = corrector.psi(&f).unwrap();
        let sigma = sigma_ac(&e, &Deformation::homogeneous(*mesh.domain(), f));
        let dw = cauchy_born_stress(&pot, &f);
        for t in 0..mesh.num_elements() {
            let g = psi.gradient(t);
            assert!((dw + g * j - sigma.at(t)).norm() < 1e-10);
            if decomp.label(t) != Region::Interface {
                assert!(g.norm() < 1e-10);
            }
        }
        for edge in 0..mesh.num_edges() {
            if decomp.edge_in(edge, Region::Atomistic) {
                assert_eq!(psi.value(edge), Vector::<2>::zeros());
            }
        }
        // The same field is recovered from the general reconstruction.
        let shifted = P0TensorField::from_fn(mesh, |t| sigma.at(t) - dw);
        let rec = reconstruct_potential(&shifted, DIVERGENCE_TOLERANCE).unwrap();
        assert!(rec.sigma0.norm() < 1e-10);
        assert!(rec.potential.distance_up_to_constant(&psi) < 1e-10);
    }
}

#[test]
fn corrected_stress_matches_cauchy_born_for_homogeneous_states() {
    let pot = morse();
    let e = bond_split(10, 3, 2, pot.clone());
    let corrector = Corrector::new(&e).unwrap();
    let mesh = *e.geometry().mesh();
    let neighbourhoods = Neighbourhoods::new(mesh, pot.stencil()).unwrap();
    for f in standard_strains() {
        let y = Deformation::homogeneous(*mesh.domain(), f);
        let psi_hat = corrector.psi_hat(&y).unwrap();
        let psi = corrector.psi(&f).unwrap();
        assert!(psi_hat.distance_up_to_constant(&psi) < 1e-14);
        let (modified, report) = corrector.stress_error(&neighbourhoods, &y).unwrap();
        let dw = cauchy_born_stress(&pot, &f);
        for t in 0..mesh.num_elements() {
            assert!((modified.at(t) - dw).norm() < 1e-10);
            assert!(report.error.at(t).norm() < 1e-10);
        }
    }
}

#[test]
fn stress_error_obeys_the_element_wise_bound() {
    let mut rng = sampling::rng(25);
    let pot = morse();
    let e = bond_split(10, 3, 2, pot.clone());
    let corrector = Corrector::new(&e).unwrap();
    let mesh = *e.geometry().mesh();
    let neighbourhoods = Neighbourhoods::new(mesh, pot.stencil()).unwrap();
    for _ in 0..3 {
        let y = SmoothField::<2>::random(&mut rng, 0.05, 0.1, 3).sample(*mesh.domain());
        let (modified, report) = corrector.stress_error(&neighbourhoods, &y).unwrap();
        assert!(report.atomistic_max() < 1e-12);
        assert!(
            report.holds(),
            "violations {:?}, worst ratio {}",
            report.violations(),
            report.worst_ratio()
        );
        // Σ̂_ac still represents δE_ac.
        let z = random_direction(*mesh.domain(), &mut rng);
        let scale = e.first_variation(&y).apply(&z).abs().max(1.0);
        assert!(pairing_defect(&e, &modified, &y, &z).abs() < 1e-10 * scale);
    }
}

#[test]
fn corrector_is_lipschitz_in_the_strain() {
    let mut rng = sampling::rng(26);
    let e = bond_split(10, 3, 2, morse());
    let corrector = Corrector::new(&e).unwrap();
    for _ in 0..4 {
        let f = sampling::random_strain::<2>(&mut rng, 0.1);
        let g = f + (sampling::random_strain::<2>(&mut rng, 0.05) - Matrix::<2>::identity());
        let ratio = psi_lipschitz_ratio(&corrector, &f, &g).unwrap();
        assert!(ratio <= 1.0, "{ratio}");
    }
}

#[test]
fn corrector_gradient_follows_local_strain() {
    let mut rng = sampling::rng(27);
    let pot = morse();
    let e = bond_split(10, 3, 2, pot.clone());
    let corrector = Corrector::new(&e).unwrap();
    let decomp = e.geometry().decomposition();
    let mesh = *decomp.mesh();
    let neighbourhoods = Neighbourhoods::new(mesh, pot.stencil()).unwrap();
    let (ma, mi) = corrector.lipschitz_constants().unwrap();
    let width = interface_width(&mesh, decomp.labels()).unwrap();
    let y = SmoothField::<2>::random(&mut rng, 0.05, 0.1, 3).sample(*mesh.domain());
    let grads = P0TensorField::gradient_of(mesh, &y);
    let psi_hat = corrector.psi_hat(&y).unwrap();
    for t in 0..mesh.num_elements() {
        if decomp.label(t) == Region::Atomistic {
            continue;
        }
        let local = corrector.psi(&grads.at(t)).unwrap();
        let lhs = (psi_hat.gradient(t) - local.gradient(t)).norm();
        let osc = aclab::geometry::oscillation(&grads, &neighbourhoods.coupled(t, decomp)).unwrap();
        let rhs = 7.0 * mesh.eps() * (ma + mi) * width * osc;
        assert!(
            lhs <= rhs * (1.0 + 1e-10) + 1e-12,
            "element {t}: {lhs} > {rhs}"
        );
    }
}

#[test]
fn interface_width_of_a_block_counts_midpoint_steps() {
    let mesh = AtomisticMesh::new(domain2(10));
    let labels = RegionDecomposition::block(mesh, 3, 2)
        .unwrap()
        .labels()
        .to_vec();
    let w = interface_width(&mesh, &labels).unwrap();
    assert!((2.0..=4.0 + 1e-12).contains(&w), "{w}");
    let none = RegionDecomposition::block(mesh, 3, 0)
        .unwrap()
        .labels()
        .to_vec();
    assert_eq!(interface_width(&mesh, &none).unwrap(), 0.0);
}

#[test]
fn disconnected_atomistic_region_is_rejected() {
    let pot = morse();
    let mesh = AtomisticMesh::new(domain2(12));
    let decomp = RegionDecomposition::from_fn(mesh, |el| {
        let [i, j] = el.cell;
        let block = |c: i64| -> i64 { (c - 4).abs().min((c + 5).abs()) };
        let d = block(i).max(j.abs());
        if d <= 1 {
            Region::Atomistic
        } else if d <= 3 {
            Region::Interface
        } else {
            Region::Continuum
        }
    });
    assert!(!decomp.atomistic_connected());
    let geo = Arc::new(CouplingGeometry::new(decomp, pot.stencil().clone()).unwrap());
    let interface = BondSplitInterface::new(pot.clone(), &geo).unwrap();
    let e = AcEnergy::new(Arc::new(pot), geo, Arc::new(interface)).unwrap();
    assert!(matches!(
        Corrector::new(&e),
        Err(Error::InvalidDecomposition(_))
    ));
}

#[test]
fn coupling_with_ghost_forces_has_no_corrector() {
    let pot = morse();
    let geo = geometry(10, 2, 3, &pot);
    let template = SquareGccTemplate::ring(pot.clone(), geo.clone()).unwrap();
    let params = vec![0.0; template.num_parameters()];
    let interface =
        BondSplitInterface::with_gcc_sites(pot.clone(), &geo, template.gcc_sites(&params)).unwrap();
    let e = AcEnergy::new(Arc::new(pot), geo, Arc::new(interface)).unwrap();
    let corrector = Corrector::new(&e).unwrap();
    let f = Matrix::<2>::new(1.1, 0.0, 0.0, 1.0);
    assert!(matches!(corrector.psi(&f), Err(Error::Inconsistent(_))));
}
