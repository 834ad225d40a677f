//! Patch-test consistent interface functionals that violate the locality or
//! the scaling condition, with explicit lower bounds on their modelling
//! error.

use crate::energy::{EnergyFunctional, ForceFunctional, InterfaceModel};
use crate::error::{Error, Result};
use crate::geometry::{lattice_gradient_norm, AtomisticMesh, Bond, PointwiseNorm};
use crate::lattice::{Deformation, LatticeDomain, Matrix, NodalField, Stencil, Vector};
use crate::potential::LipschitzTable;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CounterexampleKind {
    /// `J = |Σ_{L-,+} D₁y|² + |Σ_{L+,+} D₁y|² - |Σ_{L-,-} D₁y|² - |Σ_{L+,-} D₁y|²`,
    /// coupling bonds arbitrarily far apart.
    Locality,
    /// `J = β Σ_{L+} |D₁y|² - β Σ_{L-} |D₁y|²`.
    Scaling { beta: f64 },
}

/// `𝒥 = ε² J` built from the horizontal bonds on the rows `x₂ = ±1/2`.
#[derive(Clone, Debug)]
pub struct Counterexample {
    kind: CounterexampleKind,
    domain: LatticeDomain<2>,
    stencil_size: usize,
    horizontal: usize,
    /// Upper row then lower row, each ordered by `x₁`.
    bonds: Vec<Bond>,
}

/// Lower bound on `∥δ𝒥(y)∥_{W^{-1,2}_ε}` from one explicit test displacement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestFunctionBound {
    pub pairing: f64,
    /// `∥∇u∥_{L²}`.
    pub test_norm: f64,
    /// `pairing / test_norm`, or 0 for a vanishing test function.
    pub ratio: f64,
    /// The closed-form value `(|ε Σ_{L-,+}(D₁y - Ae₁)|² + |ε Σ_{L+,+}(D₁y - Ae₁)|²)^{1/2}`
    /// (locality) or `β ε [ε Σ_{L+} |D₁y - Ae₁|²]^{1/2}` (scaling).
    pub closed_form: f64,
}

impl Counterexample {
    pub fn new(
        kind: CounterexampleKind,
        domain: LatticeDomain<2>,
        stencil: &Stencil<2>,
    ) -> Result<Self> {
        let n = domain.n() as i64;
        if n % 2 != 0 {
            return Err(Error::InvalidDomain(format!(
                "the interface rows x₂ = ±1/2 need even N, got {n}"
            )));
        }
        if let CounterexampleKind::Scaling { beta } = kind {
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "β = {beta} must be positive"
                )));
            }
        }
        let horizontal = stencil
            .position([1, 0])
            .ok_or_else(|| Error::InvalidStencil("the stencil does not contain e₁".into()))?;
        let bonds = [n / 2, -n / 2]
            .into_iter()
            .flat_map(|row| {
                ((1 - n)..=n).map(move |x1| Bond {
                    site: [x1, row],
                    offset: horizontal,
                })
            })
            .collect();
        Ok(Self {
            kind,
            domain,
            stencil_size: stencil.len(),
            horizontal,
            bonds,
        })
    }

    pub fn kind(&self) -> CounterexampleKind {
        self.kind
    }

    fn n(&self) -> usize {
        self.domain.n()
    }

    /// `D₁y` at every bond.
    fn differences(&self, y: &Deformation<2>) -> Vec<Vector<2>> {
        self.bonds
            .iter()
            .map(|b| y.difference(b.site, [1, 0]))
            .collect()
    }

    /// Group of a bond: upper/lower row and left (`x₁ ≤ 0`)/right half.
    fn group(&self, index: usize) -> (bool, bool) {
        let b = &self.bonds[index];
        (b.site[1] > 0, b.site[0] <= 0)
    }

    fn sign(&self, index: usize) -> f64 {
        if self.group(index).0 {
            1.0
        } else {
            -1.0
        }
    }

    fn group_sums(&self, d: &[Vector<2>]) -> [[Vector<2>; 2]; 2] {
        let mut s = [[Vector::<2>::zeros(); 2]; 2];
        for (i, v) in d.iter().enumerate() {
            let (upper, left) = self.group(i);
            s[upper as usize][left as usize] += v;
        }
        s
    }

    /// `J(y)` without the `ε²` factor.
    pub fn raw_energy(&self, y: &Deformation<2>) -> f64 {
        let d = self.differences(y);
        match self.kind {
            CounterexampleKind::Locality => {
                let s = self.group_sums(&d);
                s[1][0].norm_squared() + s[1][1].norm_squared()
                    - s[0][0].norm_squared()
                    - s[0][1].norm_squared()
            }
            CounterexampleKind::Scaling { beta } => {
                beta * d
                    .iter()
                    .enumerate()
                    .map(|(i, v)| self.sign(i) * v.norm_squared())
                    .sum::<f64>()
            }
        }
    }

    /// Requires `y = y_A` along the lower row.
    fn check_lower_row(&self, y: &Deformation<2>) -> Result<()> {
        let n = self.n() as i64;
        let u = y.displacement();
        let scale = 1.0 + y.strain().norm();
        for x1 in (1 - n)..=n {
            if u.finite_difference([x1, -n / 2], [1, 0]).norm() > 1e-12 * scale * self.domain.eps()
            {
                return Err(Error::InvalidArgument(
                    "the deformation is not homogeneous along x₂ = -1/2".into(),
                ));
            }
        }
        Ok(())
    }

    /// The test displacement constant in `x₂`: the displacement of `y` along
    /// `x₂ = 1/2` (scaling), or its piecewise affine interpolation between
    /// `x₁ = 0` and `x₁ = 1` (locality).
    pub fn test_displacement(&self, y: &Deformation<2>) -> NodalField<2> {
        let n = self.n() as i64;
        let row = n / 2;
        let u = y.displacement();
        match self.kind {
            CounterexampleKind::Scaling { .. } => {
                NodalField::from_fn(self.domain, |x| u.at([x[0], row]))
            }
            CounterexampleKind::Locality => {
                let a = u.at([0, row]);
                let b = u.at([n, row]);
                NodalField::from_fn(self.domain, |x| {
                    let t = x[0].unsigned_abs() as f64 / n as f64;
                    a + (b - a) * t
                })
            }
        }
    }

    /// `⟨δ𝒥(y), u⟩ / ∥∇u∥_{L²}` for the test displacement, with the closed
    /// form it is compared to.
    pub fn lower_bound(&self, y: &Deformation<2>) -> Result<TestFunctionBound> {
        self.check_lower_row(y)?;
        let eps = self.domain.eps();
        let u = Deformation::new(Matrix::<2>::zeros(), self.test_displacement(y));
        let pairing = self.first_variation(y).apply(&u);
        let test_norm = lattice_gradient_norm(
            &AtomisticMesh::new(self.domain),
            &u,
            2.0,
            PointwiseNorm::Frobenius,
        );
        let ratio = if test_norm > 0.0 {
            pairing / test_norm
        } else {
            0.0
        };
        let ae1 = y.strain().column(0).into_owned();
        let dev: Vec<Vector<2>> = self.differences(y).iter().map(|d| d - ae1).collect();
        let closed_form = match self.kind {
            CounterexampleKind::Locality => {
                let s = self.group_sums(&dev);
                ((s[1][1] * eps).norm_squared() + (s[1][0] * eps).norm_squared()).sqrt()
            }
            CounterexampleKind::Scaling { beta } => {
                let upper: f64 = (0..dev.len())
                    .filter(|&i| self.group(i).0)
                    .map(|i| dev[i].norm_squared())
                    .sum();
                beta * eps * (eps * upper).sqrt()
            }
        };
        Ok(TestFunctionBound {
            pairing,
            test_norm,
            ratio,
            closed_form,
        })
    }
}

impl InterfaceModel for Counterexample {
    fn name(&self) -> &str {
        match self.kind {
            CounterexampleKind::Locality => "locality-counterexample",
            CounterexampleKind::Scaling { .. } => "scaling-counterexample",
        }
    }

    fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    fn energy(&self, y: &Deformation<2>) -> f64 {
        let eps = self.domain.eps();
        eps * eps * self.raw_energy(y)
    }

    fn bond_gradient(&self, y: &Deformation<2>) -> Vec<Vector<2>> {
        let d = self.differences(y);
        match self.kind {
            CounterexampleKind::Locality => {
                let s = self.group_sums(&d);
                (0..d.len())
                    .map(|i| {
                        let (upper, left) = self.group(i);
                        s[upper as usize][left as usize] * (2.0 * self.sign(i))
                    })
                    .collect()
            }
            CounterexampleKind::Scaling { beta } => d
                .iter()
                .enumerate()
                .map(|(i, v)| v * (2.0 * beta * self.sign(i)))
                .collect(),
        }
    }

    /// `∂_b ∂_b' J = 2I` for horizontal bonds in a common group (times `β` for
    /// the scaling example).
    fn scaling_constants(&self) -> Option<LipschitzTable> {
        let mut table = LipschitzTable::zeros(self.stencil_size);
        let value = match self.kind {
            CounterexampleKind::Locality => 2.0,
            CounterexampleKind::Scaling { beta } => 2.0 * beta,
        };
        table.set(self.horizontal, self.horizontal, value);
        Some(table)
    }

    fn is_local(&self) -> bool {
        matches!(self.kind, CounterexampleKind::Scaling { .. })
    }
}

/// `𝒥` as an a/c energy with `E_a = 0`.
impl EnergyFunctional<2> for Counterexample {
    fn domain(&self) -> &LatticeDomain<2> {
        &self.domain
    }

    fn energy(&self, y: &Deformation<2>) -> f64 {
        InterfaceModel::energy(self, y)
    }

    fn first_variation(&self, y: &Deformation<2>) -> ForceFunctional<2> {
        let mut phi = ForceFunctional::zeros(self.domain);
        let vol = self.domain.site_volume();
        for (b, g) in self.bonds.iter().zip(self.bond_gradient(y)) {
            phi.add_bond(b.site, [1, 0], &g, vol);
        }
        phi
    }
}
