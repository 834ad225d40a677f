//! Energy functionals on periodic deformations and their first variations.

mod atomistic;
mod chain;
mod coupled;
mod interface;
mod qce;
mod stability;

pub use atomistic::AtomisticEnergy;
pub use chain::{
    backward_differences, force_from_interval_stress, ChainAtomistic, ChainGcc, ChainQce, ChainQnl,
};
pub(crate) use coupled::add_element_stress;
pub use coupled::AcEnergy;
pub use interface::{BondSplitInterface, GccSite, InterfaceModel};
pub use qce::QceEnergy;
pub use stability::{stability_constant, StabilityOptions};

use crate::lattice::{offset_vector, Deformation, LatticeDomain, Matrix, NodalField, Site, Vector};

/// A bounded linear functional on deformations, `⟨Φ, y_G + u⟩ = |Ω| S : G + Σ_x f(x)·u(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForceFunctional<const D: usize> {
    pub nodal: NodalField<D>,
    pub macro_stress: Matrix<D>,
}

impl<const D: usize> ForceFunctional<D> {
    pub fn zeros(domain: LatticeDomain<D>) -> Self {
        Self {
            nodal: NodalField::zeros(domain),
            macro_stress: Matrix::<D>::zeros(),
        }
    }

    pub fn domain(&self) -> &LatticeDomain<D> {
        self.nodal.domain()
    }

    pub fn apply(&self, z: &Deformation<D>) -> f64 {
        self.domain().volume() * self.macro_stress.dot(z.strain())
            + self.nodal.dot(z.displacement())
    }

    pub fn difference(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.nodal.values_mut().iter_mut().zip(other.nodal.values()) {
            *a -= b;
        }
        out.macro_stress -= other.macro_stress;
        out
    }

    pub fn max_nodal(&self) -> f64 {
        self.nodal.max_norm()
    }

    /// Adds `scale · t · D_r z(x)` to the functional.
    pub fn add_bond(&mut self, x: Site<D>, r: Site<D>, t: &Vector<D>, scale: f64) {
        let eps = self.domain().eps();
        let dom = *self.domain();
        let mut target = x;
        for k in 0..D {
            target[k] += r[k];
        }
        let c = t * (scale / eps);
        self.nodal.values_mut()[dom.index(target)] += c;
        self.nodal.values_mut()[dom.index(x)] -= c;
        self.macro_stress += t * offset_vector(r).transpose() * (scale / dom.volume());
    }

    /// Flattened nodal values.
    pub fn nodal_vector(&self) -> Vec<f64> {
        self.nodal
            .values()
            .iter()
            .flat_map(|v| v.iter().copied().collect::<Vec<_>>())
            .collect()
    }
}

/// An energy on the deformation space.
pub trait EnergyFunctional<const D: usize>: Send + Sync {
    fn domain(&self) -> &LatticeDomain<D>;

    fn energy(&self, y: &Deformation<D>) -> f64;

    /// `δE(y)`.
    fn first_variation(&self, y: &Deformation<D>) -> ForceFunctional<D>;
}

/// Outcome of comparing `⟨δE(y), z⟩` with a central difference quotient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    pub analytic: f64,
    pub finite_difference: f64,
}

impl GradientCheck {
    pub fn relative_error(&self) -> f64 {
        (self.analytic - self.finite_difference).abs()
            / self
                .analytic
                .abs()
                .max(self.finite_difference.abs())
                .max(1e-300)
    }

    /// Relative error with an absolute floor, for directions in which the
    /// derivative is itself tiny.
    pub fn error(&self, floor: f64) -> f64 {
        (self.analytic - self.finite_difference).abs() / self.analytic.abs().max(floor)
    }
}

/// `(E(y + h z) - E(y - h z)) / 2h` against `⟨δE(y), z⟩`.
pub fn gradient_check<const D: usize>(
    energy: &dyn EnergyFunctional<D>,
    y: &Deformation<D>,
    z: &Deformation<D>,
    step: f64,
) -> GradientCheck {
    let analytic = energy.first_variation(y).apply(z);
    let fd = (energy.energy(&y.add_scaled(z, step)) - energy.energy(&y.add_scaled(z, -step)))
        / (2.0 * step);
    GradientCheck {
        analytic,
        finite_difference: fd,
    }
}
