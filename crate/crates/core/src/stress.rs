//! Stress functions: element-wise constant tensor fields `Σ` with
//! `⟨δE(y), z⟩ = ∫_Ω Σ(y) : ∇z`.

use crate::energy::{add_element_stress, AcEnergy, EnergyFunctional, ForceFunctional};
use crate::error::Result;
use crate::geometry::region::rational_to_f64;
pub use crate::geometry::P0TensorField;
use crate::geometry::{oscillation, AtomisticMesh, Neighbourhoods, Region};
use crate::lattice::{add_sites, Deformation, Matrix, Vector};
use crate::potential::{cauchy_born_stress, SitePotential};

/// `Σ_a(y; T) = Σ_r (ε²/|T|) Σ_x [∂_r V(D_R y(x)) ⊗ r] ⨍_x^{x+εr} χ_T db`.
pub fn sigma_atomistic(
    potential: &dyn SitePotential<2>,
    mesh: AtomisticMesh,
    y: &Deformation<2>,
) -> P0TensorField {
    let st = potential.stencil();
    let footprints = mesh.stencil_footprints(st);
    let scale = mesh.eps() * mesh.eps() / mesh.element_area();
    let mut sigma = P0TensorField::zeros(mesh);
    let mut g = Vec::new();
    let mut dv = vec![Vector::<2>::zeros(); st.len()];
    for x in mesh.domain().sites() {
        y.stencil_differences(x, st, &mut g);
        potential.gradient(&g, &mut dv);
        for (k, fp) in footprints.iter().enumerate() {
            let t_r = dv[k] * st.vector(k).transpose() * scale;
            for e in fp {
                let w = rational_to_f64(e.clip.chi_weight());
                if w > 0.0 {
                    let t = mesh.element_id(add_sites(x, e.cell), e.kind);
                    sigma.values_mut()[t] += t_r * w;
                }
            }
        }
    }
    sigma
}

/// The stress function of a coupled energy: `Σ_a` on atomistic elements,
/// `∂W(∇y)` on continuum elements and, on interface elements, the atomistic
/// bonds weighted by `χ_T` plus the interface bonds weighted by `χ^i_T`.
pub fn sigma_ac(energy: &AcEnergy, y: &Deformation<2>) -> P0TensorField {
    let geo = energy.geometry();
    let mesh = *geo.mesh();
    let pot = energy.potential();
    let st = pot.stencil();
    let decomp = geo.decomposition();
    let scale = mesh.eps() * mesh.eps() / mesh.element_area();
    let mut sigma = P0TensorField::zeros(mesh);

    let mut g = Vec::new();
    let mut dv = vec![Vector::<2>::zeros(); st.len()];
    for &x in energy.atomistic_sites() {
        y.stencil_differences(x, st, &mut g);
        pot.gradient(&g, &mut dv);
        for (k, fp) in geo.footprints().iter().enumerate() {
            let t_r = dv[k] * st.vector(k).transpose() * scale;
            for e in fp {
                let w = rational_to_f64(e.clip.chi_weight());
                if w > 0.0 {
                    sigma.values_mut()[geo.footprint_element(x, e)] += t_r * w;
                }
            }
        }
    }

    let grads = energy.interface().bond_gradient(y);
    for ((b, d), &gi) in energy
        .interface()
        .bonds()
        .iter()
        .zip(&grads)
        .zip(energy.interface_bond_ids())
    {
        let t_r = d * st.vector(b.offset).transpose() * scale;
        for &(t, w) in geo.interface_bond_weights(gi) {
            sigma.values_mut()[t] += t_r * w;
        }
    }

    for t in decomp.elements_in(Region::Continuum) {
        sigma.values_mut()[t] = cauchy_born_stress(pot.as_ref(), &mesh.gradient(y, t));
    }
    sigma
}

/// `⨍_Ω σ`.
pub fn mean_stress(sigma: &P0TensorField) -> Matrix<2> {
    sigma.mean()
}

/// The functional `z ↦ ∫_Ω σ : ∇z`.
pub fn stress_functional(sigma: &P0TensorField) -> ForceFunctional<2> {
    let mesh = *sigma.mesh();
    let mut phi = ForceFunctional::zeros(*mesh.domain());
    for (t, s) in sigma.values().iter().enumerate() {
        add_element_stress(&mut phi, &mesh, t, s, mesh.element_area());
    }
    phi
}

/// Largest nodal or macroscopic discrepancy between `Φ` and `z ↦ ∫ σ : ∇z`.
pub fn representation_residual(phi: &ForceFunctional<2>, sigma: &P0TensorField) -> f64 {
    let d = phi.difference(&stress_functional(sigma));
    d.max_nodal().max(d.macro_stress.norm())
}

/// Per-element comparison of `|Σ_a(y;T) - ∂W(∇y(T))|` with
/// `ε M^a osc(∇y; ω_T^a)`.
#[derive(Clone, Debug)]
pub struct LipschitzCheck {
    pub deviation: Vec<f64>,
    pub bound: Vec<f64>,
}

impl LipschitzCheck {
    pub fn holds(&self) -> bool {
        self.deviation
            .iter()
            .zip(&self.bound)
            .all(|(d, b)| *d <= b * (1.0 + 1e-12) + 1e-14)
    }

    /// Largest ratio deviation / bound over elements with a nonzero bound.
    pub fn worst_ratio(&self) -> f64 {
        self.deviation
            .iter()
            .zip(&self.bound)
            .filter(|(_, b)| **b > 0.0)
            .map(|(d, b)| d / b)
            .fold(0.0, f64::max)
    }
}

pub fn atomistic_lipschitz_check(
    potential: &dyn SitePotential<2>,
    neighbourhoods: &Neighbourhoods,
    y: &Deformation<2>,
) -> Result<LipschitzCheck> {
    let mesh = *neighbourhoods.mesh();
    let sigma = sigma_atomistic(potential, mesh, y);
    let grads = P0TensorField::gradient_of(mesh, y);
    let ma = potential.lipschitz_aggregate();
    let mut deviation = Vec::with_capacity(mesh.num_elements());
    let mut bound = Vec::with_capacity(mesh.num_elements());
    for t in 0..mesh.num_elements() {
        deviation.push((sigma.at(t) - cauchy_born_stress(potential, &grads.at(t))).norm());
        bound.push(mesh.eps() * ma * oscillation(&grads, &neighbourhoods.interaction(t))?);
    }
    Ok(LipschitzCheck { deviation, bound })
}

/// One-dimensional stress: `c_n = Σ_r ∂_r V(D_R y(x)) · r / |r|` summed over
/// the bonds covering the interval `(x_{n-1}, x_n)`.
pub fn sigma_atomistic_1d(potential: &dyn SitePotential<1>, y: &Deformation<1>) -> Vec<f64> {
    let dom = *y.domain();
    let st = potential.stencil();
    let mut out = vec![0.0; dom.num_sites()];
    let mut g = Vec::new();
    let mut dv = vec![Vector::<1>::zeros(); st.len()];
    for x in dom.sites() {
        y.stencil_differences(x, st, &mut g);
        potential.gradient(&g, &mut dv);
        for (k, r) in st.offsets().iter().enumerate() {
            let r = r[0];
            let share = dv[k][0] * (r as f64) / (r.abs() as f64);
            let (lo, hi) = if r > 0 {
                (x[0] + 1, x[0] + r)
            } else {
                (x[0] + r + 1, x[0])
            };
            for n in lo..=hi {
                out[dom.index([n])] += share;
            }
        }
    }
    out
}

/// `⟨δE(y), z⟩ - ∫ σ : ∇z` for an energy and a stress field.
pub fn pairing_defect(
    energy: &dyn EnergyFunctional<2>,
    sigma: &P0TensorField,
    y: &Deformation<2>,
    z: &Deformation<2>,
) -> f64 {
    energy.first_variation(y).apply(z) - sigma.pair_with(z)
}
