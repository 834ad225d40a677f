#![allow(dead_code)]

use std::sync::Arc;

use aclab::energy::{AcEnergy, BondSplitInterface};
use aclab::geometry::{AtomisticMesh, CouplingGeometry, RegionDecomposition};
use aclab::lattice::{Deformation, LatticeDomain, Matrix};
use aclab::potential::{presets, PairPotential, SitePotential};
use aclab::sampling::{self, SmoothField};
use rand::Rng;

pub fn domain2(n: usize) -> LatticeDomain<2> {
    LatticeDomain::new(n).unwrap()
}

pub fn geometry(
    n: usize,
    half_width: i64,
    interface_width: i64,
    pot: &PairPotential<2>,
) -> Arc<CouplingGeometry> {
    let mesh = AtomisticMesh::new(domain2(n));
    let decomp = RegionDecomposition::block(mesh, half_width, interface_width).unwrap();
    Arc::new(CouplingGeometry::new(decomp, pot.stencil().clone()).unwrap())
}

pub fn bond_split(
    n: usize,
    half_width: i64,
    interface_width: i64,
    pot: PairPotential<2>,
) -> AcEnergy {
    let geo = geometry(n, half_width, interface_width, &pot);
    let interface = BondSplitInterface::new(pot.clone(), &geo).unwrap();
    AcEnergy::new(Arc::new(pot), geo, Arc::new(interface)).unwrap()
}

pub fn morse() -> PairPotential<2> {
    presets::morse_square_lattice()
}

/// A direction whose finite differences are of unit size.
pub fn random_direction_unscaled(dom: LatticeDomain<2>, rng: &mut impl Rng) -> Deformation<2> {
    let strain: Matrix<2> = sampling::random_strain::<2>(rng, 1.0) - Matrix::<2>::identity();
    Deformation::new(strain, sampling::random_displacement(dom, rng, 1.0))
}

/// A state near the identity with both a smooth part and lattice-scale noise.
pub fn random_state(dom: LatticeDomain<2>, rng: &mut impl Rng) -> Deformation<2> {
    let smooth = SmoothField::<2>::random(rng, 0.05, 0.08, 3).sample(dom);
    let noise = sampling::random_displacement(dom, rng, 0.02 * dom.eps());
    let mut y = smooth;
    for (a, b) in y
        .displacement_mut()
        .values_mut()
        .iter_mut()
        .zip(noise.values())
    {
        *a += b;
    }
    y
}

pub fn random_direction(dom: LatticeDomain<2>, rng: &mut impl Rng) -> Deformation<2> {
    let strain: Matrix<2> = sampling::random_strain::<2>(rng, 0.5) - Matrix::<2>::identity();
    Deformation::new(
        strain,
        sampling::random_displacement(dom, rng, 0.5 * dom.eps()),
    )
}

pub fn standard_strains() -> Vec<Matrix<2>> {
    aclab::patch_test::standard_strains()
}
