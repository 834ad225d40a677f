use std::sync::Arc;

use super::coupled::add_element_stress;
use super::{EnergyFunctional, ForceFunctional};
use crate::geometry::AtomisticMesh;
use crate::lattice::{Deformation, LatticeDomain, Site};
use crate::potential::{cauchy_born_energy, cauchy_born_stress, SitePotential};

/// Energy-based coupling without interface correction:
/// `E(y) = ε² Σ_{x ∈ L} V(D_R y(x)) + ∫_{Ω_c} W(∇y)`, where `Ω_c` is the
/// complement of the cells `x + ε(-½, ½]²`, `x ∈ L`.
#[derive(Clone)]
pub struct QceEnergy {
    potential: Arc<dyn SitePotential<2>>,
    mesh: AtomisticMesh,
    sites: Vec<Site<2>>,
    continuum_area: Vec<f64>,
}

impl QceEnergy {
    pub fn new(
        potential: Arc<dyn SitePotential<2>>,
        mesh: AtomisticMesh,
        atomistic: impl Fn(Site<2>) -> bool,
    ) -> Self {
        let dom = *mesh.domain();
        let sites: Vec<Site<2>> = dom.sites().filter(|&x| atomistic(x)).collect();
        let eps2 = mesh.eps() * mesh.eps();
        let continuum_area = (0..mesh.num_elements())
            .map(|t| {
                let covered: f64 = mesh
                    .element_vertices(t)
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| atomistic(v))
                    .map(|(k, _)| if k == 0 { 0.25 * eps2 } else { 0.125 * eps2 })
                    .sum();
                mesh.element_area() - covered
            })
            .collect();
        Self {
            potential,
            mesh,
            sites,
            continuum_area,
        }
    }

    /// Atomistic sites in the square `[-a, a]²`.
    pub fn block(
        potential: Arc<dyn SitePotential<2>>,
        mesh: AtomisticMesh,
        half_width: i64,
    ) -> Self {
        Self::new(potential, mesh, |x| {
            x[0].abs() <= half_width && x[1].abs() <= half_width
        })
    }

    pub fn atomistic_sites(&self) -> &[Site<2>] {
        &self.sites
    }
}

impl EnergyFunctional<2> for QceEnergy {
    fn domain(&self) -> &LatticeDomain<2> {
        self.mesh.domain()
    }

    fn energy(&self, y: &Deformation<2>) -> f64 {
        let st = self.potential.stencil();
        let mut g = Vec::new();
        let atomistic: f64 = self
            .sites
            .iter()
            .map(|&x| {
                y.stencil_differences(x, st, &mut g);
                self.potential.energy(&g)
            })
            .sum();
        let continuum: f64 = self
            .continuum_area
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0.0)
            .map(|(t, a)| {
                a * cauchy_born_energy(self.potential.as_ref(), &self.mesh.gradient(y, t))
            })
            .sum();
        self.domain().site_volume() * atomistic + continuum
    }

    fn first_variation(&self, y: &Deformation<2>) -> ForceFunctional<2> {
        let dom = *self.domain();
        let st = self.potential.stencil();
        let mut phi = ForceFunctional::zeros(dom);
        let mut g = Vec::new();
        let mut dv = vec![Default::default(); st.len()];
        for &x in &self.sites {
            y.stencil_differences(x, st, &mut g);
            self.potential.gradient(&g, &mut dv);
            for (k, &r) in st.offsets().iter().enumerate() {
                phi.add_bond(x, r, &dv[k], dom.site_volume());
            }
        }
        for (t, &a) in self.continuum_area.iter().enumerate() {
            if a > 0.0 {
                let sigma = cauchy_born_stress(self.potential.as_ref(), &self.mesh.gradient(y, t));
                add_element_stress(&mut phi, &self.mesh, t, &sigma, a);
            }
        }
        phi
    }
}
