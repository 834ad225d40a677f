use super::{LipschitzTable, PairPotential, SitePotential, StrainRange};
use crate::lattice::{Matrix, Stencil, Vector};

/// A genuine many-body potential: a pair part plus the embedding term
/// `½ c ρ̄²` with `ρ̄ = ½ Σ_r |g_r|²`.
#[derive(Clone, Debug)]
pub struct EmbeddedPairPotential<const D: usize> {
    pair: PairPotential<D>,
    coupling: f64,
    lipschitz: LipschitzTable,
}

impl<const D: usize> EmbeddedPairPotential<D> {
    pub fn new(pair: PairPotential<D>, coupling: f64) -> Self {
        let stencil = pair.stencil().clone();
        let range = pair.strain_range();
        let hi: Vec<f64> = (0..stencil.len())
            .map(|k| range.max_stretch * stencil.vector(k).norm())
            .collect();
        let density_max = 0.5 * hi.iter().map(|h| h * h).sum::<f64>();
        let mut lipschitz = pair.lipschitz().clone();
        for r in 0..stencil.len() {
            for s in 0..stencil.len() {
                let mut m = lipschitz.get(r, s) + coupling.abs() * hi[r] * hi[s];
                if r == s {
                    m += coupling.abs() * density_max;
                }
                lipschitz.set(r, s, m);
            }
        }
        Self {
            pair,
            coupling,
            lipschitz,
        }
    }

    fn density(g: &[Vector<D>]) -> f64 {
        0.5 * g.iter().map(|v| v.norm_squared()).sum::<f64>()
    }
}

impl<const D: usize> SitePotential<D> for EmbeddedPairPotential<D> {
    fn stencil(&self) -> &Stencil<D> {
        self.pair.stencil()
    }

    fn energy(&self, g: &[Vector<D>]) -> f64 {
        let rho = Self::density(g);
        self.pair.energy(g) + 0.5 * self.coupling * rho * rho
    }

    fn gradient(&self, g: &[Vector<D>], out: &mut [Vector<D>]) {
        self.pair.gradient(g, out);
        let scale = self.coupling * Self::density(g);
        for (o, gk) in out.iter_mut().zip(g) {
            *o += gk * scale;
        }
    }

    fn hessian_block(&self, g: &[Vector<D>], r: usize, s: usize) -> Option<Matrix<D>> {
        let mut h = g[r] * g[s].transpose() * self.coupling;
        if r == s {
            h += self.pair.bond_hessian(r, &g[r]);
            h += Matrix::<D>::identity() * (self.coupling * Self::density(g));
        }
        Some(h)
    }

    fn lipschitz(&self) -> &LipschitzTable {
        &self.lipschitz
    }

    fn strain_range(&self) -> StrainRange {
        self.pair.strain_range()
    }
}
