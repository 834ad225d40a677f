//! Ready-made potentials used by the experiments and tests.

use super::{ChainModel, PairPotential, RadialProfile, StrainRange};

/// Stretch band on which the preset Lipschitz constants are computed.
pub fn default_range() -> StrainRange {
    StrainRange {
        min_stretch: 0.8,
        max_stretch: 1.25,
    }
}

/// `Σ_{r = ±e1, ±e2} ½ k |g_r|²`.
pub fn harmonic_nearest_neighbour(stiffness: f64) -> PairPotential<2> {
    PairPotential::nearest_neighbour(RadialProfile::Harmonic { stiffness }, 1.0, default_range())
        .expect("preset is valid")
}

/// Morse bonds to nearest and diagonal neighbours, smoothly cut off.
pub fn morse_square_lattice() -> PairPotential<2> {
    let axial = RadialProfile::Morse {
        depth: 1.0,
        alpha: 3.0,
        rest: 1.0,
        cutoff: 2.0,
    };
    let diagonal = RadialProfile::Morse {
        depth: 0.5,
        alpha: 3.0,
        rest: std::f64::consts::SQRT_2,
        cutoff: 2.5,
    };
    PairPotential::square_lattice(axial, diagonal, default_range()).expect("preset is valid")
}

/// Morse chain whose second-neighbour bond is pre-stressed at unit strain.
pub fn morse_chain() -> ChainModel {
    ChainModel::new(
        RadialProfile::Morse {
            depth: 1.0,
            alpha: 4.0,
            rest: 1.0,
            cutoff: 2.0,
        },
        RadialProfile::Morse {
            depth: 0.5,
            alpha: 3.0,
            rest: 1.6,
            cutoff: 3.5,
        },
        StrainRange {
            min_stretch: 0.7,
            max_stretch: 1.3,
        },
    )
}

/// Chain with quadratic bonds, `φ_i(g) = ½ k_i g²`.
pub fn harmonic_chain(first: f64, second: f64) -> ChainModel {
    ChainModel::new(
        RadialProfile::Harmonic { stiffness: first },
        RadialProfile::Harmonic { stiffness: second },
        StrainRange {
            min_stretch: 0.0,
            max_stretch: 2.0,
        },
    )
}
