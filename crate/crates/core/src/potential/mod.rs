//! Site potentials `V : (R^d)^R → R`, their Cauchy–Born densities and
//! Lipschitz tables.

mod chain;
mod embedded;
mod pair;
pub mod presets;
mod profile;

pub use chain::ChainModel;
pub use embedded::EmbeddedPairPotential;
pub use pair::PairPotential;
pub use profile::RadialProfile;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Matrix, Stencil, Vector};

/// Admissible bond stretches: every `|g_r|` must lie in
/// `[min_stretch |r|, max_stretch |r|]`. Lipschitz constants are valid there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrainRange {
    pub min_stretch: f64,
    pub max_stretch: f64,
}

impl StrainRange {
    pub fn new(min_stretch: f64, max_stretch: f64) -> Result<Self> {
        if !(min_stretch >= 0.0 && max_stretch > min_stretch) {
            return Err(Error::InvalidArgument(format!(
                "strain range [{min_stretch}, {max_stretch}] is empty or negative"
            )));
        }
        Ok(Self {
            min_stretch,
            max_stretch,
        })
    }

    pub fn contains<const D: usize>(&self, stencil: &Stencil<D>, g: &[Vector<D>]) -> bool {
        g.iter().enumerate().all(|(k, gk)| {
            let len = stencil.vector(k).norm();
            let rho = gk.norm();
            rho >= self.min_stretch * len - 1e-12 && rho <= self.max_stretch * len + 1e-12
        })
    }
}

/// Table of constants `M_{r,s}` with `|∂_r V(g) - ∂_r V(h)| ≤ Σ_s M_{r,s} |g_s - h_s|`.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzTable {
    size: usize,
    entries: Vec<f64>,
}

impl LipschitzTable {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            entries: vec![0.0; size * size],
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn get(&self, r: usize, s: usize) -> f64 {
        self.entries[r * self.size + s]
    }

    pub fn set(&mut self, r: usize, s: usize, value: f64) {
        self.entries[r * self.size + s] = value;
    }

    /// `Σ_{r,s} |r| |s| M_{r,s}`.
    pub fn aggregate<const D: usize>(&self, stencil: &Stencil<D>) -> f64 {
        let mut total = 0.0;
        for r in 0..self.size {
            for s in 0..self.size {
                total += stencil.vector(r).norm() * stencil.vector(s).norm() * self.get(r, s);
            }
        }
        total
    }
}

/// A site potential with a fixed interaction stencil.
pub trait SitePotential<const D: usize>: Send + Sync {
    fn stencil(&self) -> &Stencil<D>;

    fn energy(&self, g: &[Vector<D>]) -> f64;

    /// Writes `∂_r V(g)` for every `r` in stencil order.
    fn gradient(&self, g: &[Vector<D>], out: &mut [Vector<D>]);

    /// `∂_r ∂_s V(g)` when available in closed form.
    fn hessian_block(&self, _g: &[Vector<D>], _r: usize, _s: usize) -> Option<Matrix<D>> {
        None
    }

    fn lipschitz(&self) -> &LipschitzTable;

    fn strain_range(&self) -> StrainRange;

    /// The pair representation, when the potential is a sum of bond terms.
    fn as_pair(&self) -> Option<&PairPotential<D>> {
        None
    }

    /// `M^a = Σ_{r,s} |r||s| M_{r,s}`.
    fn lipschitz_aggregate(&self) -> f64 {
        self.lipschitz().aggregate(self.stencil())
    }

    fn partial(&self, g: &[Vector<D>], r: usize) -> Vector<D> {
        let mut out = vec![Vector::<D>::zeros(); g.len()];
        self.gradient(g, &mut out);
        out[r]
    }
}

/// `F R = (F r)_{r ∈ R}`.
pub fn homogeneous_stencil<const D: usize>(stencil: &Stencil<D>, f: &Matrix<D>) -> Vec<Vector<D>> {
    (0..stencil.len()).map(|k| f * stencil.vector(k)).collect()
}

/// Cauchy–Born density `W(F) = V(F R)`.
pub fn cauchy_born_energy<const D: usize, V: SitePotential<D> + ?Sized>(
    v: &V,
    f: &Matrix<D>,
) -> f64 {
    v.energy(&homogeneous_stencil(v.stencil(), f))
}

/// `∂W(F) = Σ_r ∂_r V(F R) ⊗ r`.
pub fn cauchy_born_stress<const D: usize, V: SitePotential<D> + ?Sized>(
    v: &V,
    f: &Matrix<D>,
) -> Matrix<D> {
    let g = homogeneous_stencil(v.stencil(), f);
    let mut grad = vec![Vector::<D>::zeros(); g.len()];
    v.gradient(&g, &mut grad);
    stress_from_bond_forces(v.stencil(), &grad)
}

/// `Σ_r t_r ⊗ r`.
pub fn stress_from_bond_forces<const D: usize>(
    stencil: &Stencil<D>,
    forces: &[Vector<D>],
) -> Matrix<D> {
    let mut s = Matrix::<D>::zeros();
    for (k, t) in forces.iter().enumerate() {
        s += t * stencil.vector(k).transpose();
    }
    s
}

/// Operator 2-norm of a small square matrix (`d ≤ 2`, closed form).
pub fn operator_norm<const D: usize>(m: &Matrix<D>) -> f64 {
    let s = m.transpose() * m;
    let lambda = match D {
        1 => s[(0, 0)],
        2 => {
            let (a, b, d) = (s[(0, 0)], s[(0, 1)], s[(1, 1)]);
            0.5 * (a + d + ((a - d) * (a - d) + 4.0 * b * b).sqrt())
        }
        _ => unreachable!("only one- and two-dimensional lattices are supported"),
    };
    lambda.max(0.0).sqrt()
}
