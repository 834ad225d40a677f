use std::sync::Arc;

use super::interface::InterfaceModel;
use super::{EnergyFunctional, ForceFunctional};
use crate::error::{Error, Result};
use crate::geometry::{CouplingGeometry, Region};
use crate::lattice::{Deformation, LatticeDomain, Matrix, Site};
use crate::potential::{cauchy_born_energy, cauchy_born_stress, SitePotential};

/// `E_ac(y) = ε² Σ_{x ∈ L_a} V(D_R y(x)) + ∫_{Ω_c} W(∇y) dx + E_i(y)`.
#[derive(Clone)]
pub struct AcEnergy {
    potential: Arc<dyn SitePotential<2>>,
    geometry: Arc<CouplingGeometry>,
    interface: Arc<dyn InterfaceModel>,
    interface_bond_ids: Vec<usize>,
    atomistic_sites: Vec<Site<2>>,
}

impl AcEnergy {
    pub fn new(
        potential: Arc<dyn SitePotential<2>>,
        geometry: Arc<CouplingGeometry>,
        interface: Arc<dyn InterfaceModel>,
    ) -> Result<Self> {
        if potential.stencil() != geometry.stencil() {
            return Err(Error::InvalidArgument(
                "potential and geometry use different stencils".into(),
            ));
        }
        let interface_bond_ids = interface
            .bonds()
            .iter()
            .map(|b| {
                geometry.interface_bond_index(b).ok_or_else(|| {
                    Error::InvalidDecomposition(format!(
                        "interface bond {b:?} is not contained in the interface"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let atomistic_sites = geometry.atomistic_sites().collect();
        Ok(Self {
            potential,
            geometry,
            interface,
            interface_bond_ids,
            atomistic_sites,
        })
    }

    pub fn potential(&self) -> &Arc<dyn SitePotential<2>> {
        &self.potential
    }

    pub fn geometry(&self) -> &Arc<CouplingGeometry> {
        &self.geometry
    }

    pub fn interface(&self) -> &Arc<dyn InterfaceModel> {
        &self.interface
    }

    /// Index into the geometry's interface bond list for each model bond.
    pub fn interface_bond_ids(&self) -> &[usize] {
        &self.interface_bond_ids
    }

    pub fn atomistic_sites(&self) -> &[Site<2>] {
        &self.atomistic_sites
    }

    fn continuum_elements(&self) -> impl Iterator<Item = usize> + '_ {
        self.geometry.decomposition().elements_in(Region::Continuum)
    }
}

impl EnergyFunctional<2> for AcEnergy {
    fn domain(&self) -> &LatticeDomain<2> {
        self.geometry.mesh().domain()
    }

    fn energy(&self, y: &Deformation<2>) -> f64 {
        let mesh = self.geometry.mesh();
        let st = self.potential.stencil();
        let mut g = Vec::new();
        let mut atomistic = 0.0;
        for &x in &self.atomistic_sites {
            y.stencil_differences(x, st, &mut g);
            atomistic += self.potential.energy(&g);
        }
        let continuum: f64 = self
            .continuum_elements()
            .map(|t| cauchy_born_energy(self.potential.as_ref(), &mesh.gradient(y, t)))
            .sum();
        self.domain().site_volume() * atomistic
            + mesh.element_area() * continuum
            + self.interface.energy(y)
    }

    fn first_variation(&self, y: &Deformation<2>) -> ForceFunctional<2> {
        let mesh = self.geometry.mesh();
        let dom = *self.domain();
        let st = self.potential.stencil();
        let vol = dom.site_volume();
        let mut phi = ForceFunctional::zeros(dom);

        let mut g = Vec::new();
        let mut dv = vec![Default::default(); st.len()];
        for &x in &self.atomistic_sites {
            y.stencil_differences(x, st, &mut g);
            self.potential.gradient(&g, &mut dv);
            for (k, &r) in st.offsets().iter().enumerate() {
                phi.add_bond(x, r, &dv[k], vol);
            }
        }

        let area = mesh.element_area();
        for t in self.continuum_elements() {
            let sigma = cauchy_born_stress(self.potential.as_ref(), &mesh.gradient(y, t));
            add_element_stress(&mut phi, mesh, t, &sigma, area);
        }

        let grads = self.interface.bond_gradient(y);
        for (b, d) in self.interface.bonds().iter().zip(&grads) {
            phi.add_bond(b.site, st.offsets()[b.offset], d, vol);
        }
        phi
    }
}

/// Adds `weight · σ : ∇z(T)` to the functional.
pub(crate) fn add_element_stress(
    phi: &mut ForceFunctional<2>,
    mesh: &crate::geometry::AtomisticMesh,
    t: usize,
    sigma: &Matrix<2>,
    weight: f64,
) {
    let dom = *mesh.domain();
    let e = mesh.element(t);
    let verts = mesh.element_vertices(t);
    let inv_eps = 1.0 / mesh.eps();
    for (k, v) in verts.iter().enumerate() {
        let grad = e.kind.scaled_hat_gradient(k) * inv_eps;
        phi.nodal.values_mut()[dom.index(*v)] += sigma * grad * weight;
    }
    phi.macro_stress += sigma * (weight / dom.volume());
}
