use std::ops::{Add, Sub};

use super::mesh::{AtomisticMesh, ElementId};
use crate::error::{Error, Result};
use crate::lattice::{Deformation, Matrix, NodalField};

/// An element-wise constant `2×2` tensor field on the atomistic mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct P0TensorField {
    mesh: AtomisticMesh,
    values: Vec<Matrix<2>>,
}

impl P0TensorField {
    pub fn new(mesh: AtomisticMesh, values: Vec<Matrix<2>>) -> Result<Self> {
        if values.len() != mesh.num_elements() {
            return Err(Error::InvalidArgument(format!(
                "expected {} element values, got {}",
                mesh.num_elements(),
                values.len()
            )));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: AtomisticMesh) -> Self {
        Self::constant(mesh, Matrix::<2>::zeros())
    }

    pub fn constant(mesh: AtomisticMesh, value: Matrix<2>) -> Self {
        Self {
            mesh,
            values: vec![value; mesh.num_elements()],
        }
    }

    pub fn from_fn(mesh: AtomisticMesh, f: impl FnMut(ElementId) -> Matrix<2>) -> Self {
        Self {
            mesh,
            values: (0..mesh.num_elements()).map(f).collect(),
        }
    }

    /// `∇y` of the piecewise affine interpolant.
    pub fn gradient_of(mesh: AtomisticMesh, y: &Deformation<2>) -> Self {
        Self {
            mesh,
            values: mesh.gradients(y),
        }
    }

    pub fn gradient_of_field(mesh: AtomisticMesh, u: &NodalField<2>) -> Self {
        Self::from_fn(mesh, |t| mesh.field_gradient(u, t))
    }

    pub fn mesh(&self) -> &AtomisticMesh {
        &self.mesh
    }

    pub fn values(&self) -> &[Matrix<2>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Matrix<2>] {
        &mut self.values
    }

    pub fn at(&self, id: ElementId) -> Matrix<2> {
        self.values[id]
    }

    /// Area-weighted average `⨍_Ω σ`.
    pub fn mean(&self) -> Matrix<2> {
        self.values.iter().sum::<Matrix<2>>() / self.values.len() as f64
    }

    /// `∫_Ω σ : τ`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.mesh.element_area()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.dot(b))
                .sum::<f64>()
    }

    /// `∫_Ω σ : ∇z`.
    pub fn pair_with(&self, z: &Deformation<2>) -> f64 {
        let area = self.mesh.element_area();
        (0..self.values.len())
            .map(|t| area * self.values[t].dot(&self.mesh.gradient(z, t)))
            .sum()
    }

    /// Largest Frobenius norm over the elements.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|m| m.norm()).fold(0.0, f64::max)
    }

    /// `(Σ_T |T| |σ(T)|^p)^{1/p}` with Frobenius `|·|`; `p = ∞` gives the maximum.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_norm();
        }
        let area = self.mesh.element_area();
        self.values
            .iter()
            .map(|m| area * m.norm().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }

    pub fn map(&self, f: impl Fn(&Matrix<2>) -> Matrix<2>) -> Self {
        Self {
            mesh: self.mesh,
            values: self.values.iter().map(f).collect(),
        }
    }
}

impl Add for &P0TensorField {
    type Output = P0TensorField;

    fn add(self, rhs: Self) -> P0TensorField {
        P0TensorField {
            mesh: self.mesh,
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &P0TensorField {
    type Output = P0TensorField;

    fn sub(self, rhs: Self) -> P0TensorField {
        P0TensorField {
            mesh: self.mesh,
            values: self
                .values
                .iter()
                .zip(&rhs.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}
