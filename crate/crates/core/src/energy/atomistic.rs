use std::sync::Arc;

use super::{EnergyFunctional, ForceFunctional};
use crate::lattice::{Deformation, LatticeDomain, Vector};
use crate::potential::SitePotential;

/// `E_a(y) = ε^d Σ_x V(D_R y(x))`.
#[derive(Clone)]
pub struct AtomisticEnergy<const D: usize> {
    domain: LatticeDomain<D>,
    potential: Arc<dyn SitePotential<D>>,
}

impl<const D: usize> AtomisticEnergy<D> {
    pub fn new(domain: LatticeDomain<D>, potential: Arc<dyn SitePotential<D>>) -> Self {
        Self { domain, potential }
    }

    pub fn potential(&self) -> &Arc<dyn SitePotential<D>> {
        &self.potential
    }

    /// `V(D_R y(x))` for every site.
    pub fn site_energies(&self, y: &Deformation<D>) -> Vec<f64> {
        let mut g = Vec::new();
        self.domain
            .sites()
            .map(|x| {
                y.stencil_differences(x, self.potential.stencil(), &mut g);
                self.potential.energy(&g)
            })
            .collect()
    }

    /// `∂_r V(D_R y(x))` for every site, flattened `[site][r]`.
    pub fn bond_forces(&self, y: &Deformation<D>) -> Vec<Vector<D>> {
        let st = self.potential.stencil();
        let mut out = vec![Vector::<D>::zeros(); self.domain.num_sites() * st.len()];
        let mut g = Vec::new();
        for (i, x) in self.domain.sites().enumerate() {
            y.stencil_differences(x, st, &mut g);
            self.potential
                .gradient(&g, &mut out[i * st.len()..(i + 1) * st.len()]);
        }
        out
    }
}

impl<const D: usize> EnergyFunctional<D> for AtomisticEnergy<D> {
    fn domain(&self) -> &LatticeDomain<D> {
        &self.domain
    }

    fn energy(&self, y: &Deformation<D>) -> f64 {
        self.domain.site_volume() * self.site_energies(y).iter().sum::<f64>()
    }

    fn first_variation(&self, y: &Deformation<D>) -> ForceFunctional<D> {
        let st = self.potential.stencil();
        let forces = self.bond_forces(y);
        let mut phi = ForceFunctional::zeros(self.domain);
        let vol = self.domain.site_volume();
        for (i, x) in self.domain.sites().enumerate() {
            for (k, &r) in st.offsets().iter().enumerate() {
                phi.add_bond(x, r, &forces[i * st.len() + k], vol);
            }
        }
        phi
    }
}
