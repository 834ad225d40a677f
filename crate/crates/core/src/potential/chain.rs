use super::{PairPotential, RadialProfile, StrainRange};
use crate::error::Result;

/// A one-dimensional chain with nearest and next-nearest neighbour bonds,
/// `V(g) = ½[φ₁(g₁) + φ₁(g₋₁) + φ₂(g₂) + φ₂(g₋₂)]`.
#[derive(Clone, Debug)]
pub struct ChainModel {
    pub phi1: RadialProfile,
    pub phi2: RadialProfile,
    pub range: StrainRange,
}

impl ChainModel {
    pub fn new(phi1: RadialProfile, phi2: RadialProfile, range: StrainRange) -> Self {
        Self { phi1, phi2, range }
    }

    pub fn site_potential(&self) -> Result<PairPotential<1>> {
        PairPotential::new(
            vec![
                ([-2], 0.5, self.phi2),
                ([-1], 0.5, self.phi1),
                ([1], 0.5, self.phi1),
                ([2], 0.5, self.phi2),
            ],
            self.range,
        )
    }

    fn profile(&self, neighbour: usize) -> &RadialProfile {
        match neighbour {
            1 => &self.phi1,
            2 => &self.phi2,
            _ => panic!("chain bonds are first or second neighbours"),
        }
    }

    /// `φ_i(g)`, even in `g`.
    pub fn phi(&self, neighbour: usize, g: f64) -> f64 {
        self.profile(neighbour).value(g.abs())
    }

    /// `φ_i'(g)`, odd in `g`.
    pub fn dphi(&self, neighbour: usize, g: f64) -> f64 {
        self.profile(neighbour).d1(g.abs()) * g.signum()
    }

    /// `φ_i''(g)`, even in `g`.
    pub fn ddphi(&self, neighbour: usize, g: f64) -> f64 {
        self.profile(neighbour).d2(g.abs())
    }

    /// Cauchy–Born density `W(F) = φ₁(F) + φ₂(2F)`.
    pub fn cauchy_born(&self, f: f64) -> f64 {
        self.phi(1, f) + self.phi(2, 2.0 * f)
    }

    pub fn cauchy_born_stress(&self, f: f64) -> f64 {
        self.dphi(1, f) + 2.0 * self.dphi(2, 2.0 * f)
    }

    /// Lipschitz constant of `φ_i'` on the admissible stretches of bond `i`.
    pub fn first_lipschitz(&self, neighbour: usize) -> f64 {
        let len = neighbour as f64;
        self.profile(neighbour).hessian_bound(
            self.range.min_stretch * len,
            self.range.max_stretch * len,
            false,
        )
    }

    /// Lipschitz constant of `φ_i''` on the admissible stretches of bond `i`.
    pub fn second_lipschitz(&self, neighbour: usize) -> f64 {
        let len = neighbour as f64;
        self.profile(neighbour)
            .third_derivative_bound(self.range.min_stretch * len, self.range.max_stretch * len)
    }
}
