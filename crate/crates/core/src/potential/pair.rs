use super::{LipschitzTable, RadialProfile, SitePotential, StrainRange};
use crate::error::{Error, Result};
use crate::lattice::{Matrix, Site, Stencil, Vector};

/// `V(g) = Σ_r w_r φ_r(|g_r|)`.
#[derive(Clone, Debug)]
pub struct PairPotential<const D: usize> {
    stencil: Stencil<D>,
    bonds: Vec<(f64, RadialProfile)>,
    range: StrainRange,
    lipschitz: LipschitzTable,
}

impl<const D: usize> PairPotential<D> {
    /// One `(offset, weight, profile)` per bond; the offsets form the stencil.
    pub fn new(bonds: Vec<(Site<D>, f64, RadialProfile)>, range: StrainRange) -> Result<Self> {
        let stencil = Stencil::new(bonds.iter().map(|b| b.0).collect())?;
        let mut ordered = vec![None; stencil.len()];
        for (r, w, p) in bonds {
            let k = stencil.position(r).expect("offset is in its own stencil");
            ordered[k] = Some((w, p));
        }
        let bonds: Vec<(f64, RadialProfile)> = ordered.into_iter().map(|b| b.unwrap()).collect();
        let mut lipschitz = LipschitzTable::zeros(stencil.len());
        for (k, (w, p)) in bonds.iter().enumerate() {
            let len = stencil.vector(k).norm();
            let lo = range.min_stretch * len;
            let hi = range.max_stretch * len;
            if lo <= 0.0 && !p.regular_at_origin() {
                return Err(Error::InvalidArgument(
                    "profile is singular at the origin; the strain range must exclude zero".into(),
                ));
            }
            lipschitz.set(k, k, w.abs() * p.hessian_bound(lo, hi, D > 1));
        }
        Ok(Self {
            stencil,
            bonds,
            range,
            lipschitz,
        })
    }

    pub fn bond(&self, k: usize) -> (f64, RadialProfile) {
        self.bonds[k]
    }

    /// `w_r φ_r(|g|)` for stencil entry `k`.
    pub fn bond_energy(&self, k: usize, g: &Vector<D>) -> f64 {
        let (w, p) = self.bonds[k];
        w * p.value(g.norm())
    }

    /// Gradient of [`Self::bond_energy`] with respect to `g`.
    pub fn bond_force(&self, k: usize, g: &Vector<D>) -> Vector<D> {
        let (w, p) = self.bonds[k];
        g * (w * p.d1_over_rho(g.norm()))
    }

    /// Hessian of [`Self::bond_energy`] with respect to `g`.
    pub fn bond_hessian(&self, k: usize, g: &Vector<D>) -> Matrix<D> {
        let (w, p) = self.bonds[k];
        let rho = g.norm();
        let along = p.d2(rho);
        if rho == 0.0 {
            return Matrix::<D>::identity() * (w * along);
        }
        let n = g / rho;
        let proj = n * n.transpose();
        let across = p.d1_over_rho(rho);
        (proj * along + (Matrix::<D>::identity() - proj) * across) * w
    }
}

impl PairPotential<2> {
    /// Four nearest-neighbour bonds with a common weight.
    pub fn nearest_neighbour(
        profile: RadialProfile,
        weight: f64,
        range: StrainRange,
    ) -> Result<Self> {
        let bonds = [[1, 0], [-1, 0], [0, 1], [0, -1]]
            .into_iter()
            .map(|r| (r, weight, profile))
            .collect();
        Self::new(bonds, range)
    }

    /// Nearest and diagonal neighbours of the square lattice, each bond
    /// weighted by one half so that every bond is counted once in total.
    pub fn square_lattice(
        axial: RadialProfile,
        diagonal: RadialProfile,
        range: StrainRange,
    ) -> Result<Self> {
        let mut bonds = Vec::new();
        for r in [[1, 0], [-1, 0], [0, 1], [0, -1]] {
            bonds.push((r, 0.5, axial));
        }
        for r in [[1, 1], [-1, -1], [1, -1], [-1, 1]] {
            bonds.push((r, 0.5, diagonal));
        }
        Self::new(bonds, range)
    }
}

impl<const D: usize> SitePotential<D> for PairPotential<D> {
    fn stencil(&self) -> &Stencil<D> {
        &self.stencil
    }

    fn energy(&self, g: &[Vector<D>]) -> f64 {
        g.iter()
            .enumerate()
            .map(|(k, gk)| self.bond_energy(k, gk))
            .sum()
    }

    fn gradient(&self, g: &[Vector<D>], out: &mut [Vector<D>]) {
        for (k, gk) in g.iter().enumerate() {
            out[k] = self.bond_force(k, gk);
        }
    }

    fn hessian_block(&self, g: &[Vector<D>], r: usize, s: usize) -> Option<Matrix<D>> {
        Some(if r == s {
            self.bond_hessian(r, &g[r])
        } else {
            Matrix::<D>::zeros()
        })
    }

    fn lipschitz(&self) -> &LipschitzTable {
        &self.lipschitz
    }

    fn strain_range(&self) -> StrainRange {
        self.range
    }

    fn as_pair(&self) -> Option<&PairPotential<D>> {
        Some(self)
    }
}
