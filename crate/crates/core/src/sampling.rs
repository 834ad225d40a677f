//! Reproducible families of test deformations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use crate::lattice::{Deformation, LatticeDomain, Matrix, NodalField, Vector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `I + A` with entries of `A` uniform in `[-amplitude, amplitude]`.
pub fn random_strain<const D: usize>(rng: &mut impl Rng, amplitude: f64) -> Matrix<D> {
    Matrix::<D>::identity() + Matrix::<D>::from_fn(|_, _| rng.gen_range(-amplitude..=amplitude))
}

/// Nodal noise uniform in `[-amplitude, amplitude]` per component.
pub fn random_displacement<const D: usize>(
    domain: LatticeDomain<D>,
    rng: &mut impl Rng,
    amplitude: f64,
) -> NodalField<D> {
    NodalField::from_fn(domain, |_| {
        Vector::<D>::from_fn(|_, _| rng.gen_range(-amplitude..=amplitude))
    })
}

/// A trigonometric displacement mode `a sin(π k·x + φ)`.
#[derive(Clone, Debug)]
pub struct Mode<const D: usize> {
    pub wave: [i64; D],
    pub amplitude: Vector<D>,
    pub phase: f64,
}

/// `y(x) = F x + Σ_m a_m sin(π k_m·x + φ_m)`, periodic on `(-1, 1]^d`.
#[derive(Clone, Debug)]
pub struct SmoothField<const D: usize> {
    pub strain: Matrix<D>,
    pub modes: Vec<Mode<D>>,
}

impl<const D: usize> SmoothField<D> {
    /// Random field whose gradient deviates from `F` by at most about
    /// `gradient_amplitude`.
    pub fn random(
        rng: &mut impl Rng,
        strain_amplitude: f64,
        gradient_amplitude: f64,
        modes: usize,
    ) -> Self {
        let strain = random_strain(rng, strain_amplitude);
        let modes = (0..modes)
            .map(|_| {
                let mut wave = [0i64; D];
                while wave.iter().all(|&k| k == 0) {
                    for k in wave.iter_mut() {
                        *k = rng.gen_range(-2..=2);
                    }
                }
                let kn = wave.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
                let scale = gradient_amplitude / (PI * kn * modes as f64);
                let amplitude = Vector::<D>::from_fn(|_, _| rng.gen_range(-scale..=scale));
                Mode {
                    wave,
                    amplitude,
                    phase: rng.gen_range(0.0..2.0 * PI),
                }
            })
            .collect();
        Self { strain, modes }
    }

    pub fn displacement(&self, x: &Vector<D>) -> Vector<D> {
        self.modes
            .iter()
            .map(|m| m.amplitude * (PI * dot(&m.wave, x) + m.phase).sin())
            .sum()
    }

    /// Exact gradient `∇y(x)`.
    pub fn gradient(&self, x: &Vector<D>) -> Matrix<D> {
        let mut g = self.strain;
        for m in &self.modes {
            let c = PI * (PI * dot(&m.wave, x) + m.phase).cos();
            let k = Vector::<D>::from_fn(|i, _| m.wave[i] as f64);
            g += m.amplitude * k.transpose() * c;
        }
        g
    }

    pub fn sample(&self, domain: LatticeDomain<D>) -> Deformation<D> {
        Deformation::from_displacement_fn(domain, self.strain, |x| self.displacement(&x))
    }
}

fn dot<const D: usize>(k: &[i64; D], x: &Vector<D>) -> f64 {
    (0..D).map(|i| k[i] as f64 * x[i]).sum()
}
