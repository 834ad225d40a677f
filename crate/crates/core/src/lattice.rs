//! Periodic lattices, interaction stencils and deformations.
//!
//! The reference lattice is `ε Z^d` with `ε = 1/N`, and every field is
//! periodic with respect to the cell `(-1, 1]^d`. Sites are addressed by
//! integer coordinates; the representative of a site in the periodic cell
//! has coordinates in `{-N+1, ..., N}`.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};

/// Integer lattice coordinates (unscaled).
pub type Site<const D: usize> = [i64; D];
pub type Vector<const D: usize> = SVector<f64, D>;
pub type Matrix<const D: usize> = SMatrix<f64, D, D>;

/// The periodic lattice `ε{-N+1, ..., N}^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeDomain<const D: usize> {
    n: usize,
}

impl<const D: usize> LatticeDomain<D> {
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=2).contains(&D) {
            return Err(Error::InvalidDomain(format!(
                "dimension {D} is not supported"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidDomain("N must be positive".into()));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Number of sites along each axis, `2N`.
    pub fn period(&self) -> i64 {
        2 * self.n as i64
    }

    pub fn num_sites(&self) -> usize {
        (2 * self.n).pow(D as u32)
    }

    /// Volume of the periodic cell, `2^d`.
    pub fn volume(&self) -> f64 {
        2f64.powi(D as i32)
    }

    /// `ε^d`, the volume attached to one site.
    pub fn site_volume(&self) -> f64 {
        self.eps().powi(D as i32)
    }

    pub fn wrap(&self, s: Site<D>) -> Site<D> {
        let p = self.period();
        let lo = 1 - self.n as i64;
        let mut out = s;
        for c in out.iter_mut() {
            *c = (*c - lo).rem_euclid(p) + lo;
        }
        out
    }

    /// Linear index of the periodic representative of `s`.
    pub fn index(&self, s: Site<D>) -> usize {
        let p = self.period();
        let lo = 1 - self.n as i64;
        let mut idx = 0i64;
        for k in (0..D).rev() {
            idx = idx * p + (s[k] - lo).rem_euclid(p);
        }
        idx as usize
    }

    pub fn site(&self, idx: usize) -> Site<D> {
        let p = self.period() as usize;
        let lo = 1 - self.n as i64;
        let mut rest = idx;
        let mut s = [0i64; D];
        for c in s.iter_mut() {
            *c = (rest % p) as i64 + lo;
            rest /= p;
        }
        s
    }

    pub fn sites(&self) -> impl Iterator<Item = Site<D>> + '_ {
        (0..self.num_sites()).map(move |i| self.site(i))
    }

    pub fn position(&self, s: Site<D>) -> Vector<D> {
        let eps = self.eps();
        Vector::<D>::from_fn(|k, _| eps * s[k] as f64)
    }
}

/// A finite interaction range `R ⊂ Z^d \ {0}`, stored in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stencil<const D: usize> {
    offsets: Vec<Site<D>>,
}

impl<const D: usize> Stencil<D> {
    pub fn new(mut offsets: Vec<Site<D>>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::InvalidStencil("empty stencil".into()));
        }
        if offsets.iter().any(|r| r.iter().all(|&c| c == 0)) {
            return Err(Error::InvalidStencil(
                "the zero offset is not allowed".into(),
            ));
        }
        offsets.sort();
        if offsets.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidStencil("duplicate offsets".into()));
        }
        Ok(Self { offsets })
    }

    pub fn offsets(&self) -> &[Site<D>] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn position(&self, r: Site<D>) -> Option<usize> {
        self.offsets.binary_search(&r).ok()
    }

    pub fn vector(&self, k: usize) -> Vector<D> {
        offset_vector(self.offsets[k])
    }

    /// True if `r ∈ R` implies `-r ∈ R`.
    pub fn is_symmetric(&self) -> bool {
        self.offsets
            .iter()
            .all(|r| self.position(r.map(|c| -c)).is_some())
    }

    /// Largest Euclidean length `|r|`.
    pub fn max_length(&self) -> f64 {
        (0..self.len())
            .map(|k| self.vector(k).norm())
            .fold(0.0, f64::max)
    }
}

pub fn offset_vector<const D: usize>(r: Site<D>) -> Vector<D> {
    Vector::<D>::from_fn(|k, _| r[k] as f64)
}

pub fn add_sites<const D: usize>(a: Site<D>, b: Site<D>) -> Site<D> {
    let mut out = a;
    for k in 0..D {
        out[k] += b[k];
    }
    out
}

/// A periodic vector-valued nodal field.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField<const D: usize> {
    domain: LatticeDomain<D>,
    values: Vec<Vector<D>>,
}

impl<const D: usize> NodalField<D> {
    pub fn zeros(domain: LatticeDomain<D>) -> Self {
        Self {
            domain,
            values: vec![Vector::<D>::zeros(); domain.num_sites()],
        }
    }

    pub fn from_values(domain: LatticeDomain<D>, values: Vec<Vector<D>>) -> Result<Self> {
        if values.len() != domain.num_sites() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                domain.num_sites(),
                values.len()
            )));
        }
        Ok(Self { domain, values })
    }

    pub fn from_fn(domain: LatticeDomain<D>, mut f: impl FnMut(Site<D>) -> Vector<D>) -> Self {
        let values = domain.sites().map(&mut f).collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &LatticeDomain<D> {
        &self.domain
    }

    pub fn values(&self) -> &[Vector<D>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vector<D>] {
        &mut self.values
    }

    pub fn at(&self, s: Site<D>) -> Vector<D> {
        self.values[self.domain.index(s)]
    }

    /// `D_r v(x) = (v(x + εr) - v(x)) / ε`.
    pub fn finite_difference(&self, s: Site<D>, r: Site<D>) -> Vector<D> {
        (self.at(add_sites(s, r)) - self.at(s)) / self.domain.eps()
    }

    pub fn mean(&self) -> Vector<D> {
        self.values.iter().sum::<Vector<D>>() / self.values.len() as f64
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.dot(b))
            .sum()
    }
}

/// A deformation `y(x) = A x + u(x)` with `u` periodic.
#[derive(Clone, Debug, PartialEq)]
pub struct Deformation<const D: usize> {
    strain: Matrix<D>,
    displacement: NodalField<D>,
}

impl<const D: usize> Deformation<D> {
    pub fn new(strain: Matrix<D>, displacement: NodalField<D>) -> Self {
        Self {
            strain,
            displacement,
        }
    }

    pub fn homogeneous(domain: LatticeDomain<D>, strain: Matrix<D>) -> Self {
        Self {
            strain,
            displacement: NodalField::zeros(domain),
        }
    }

    /// Builds `y = A x + u` where `u` is sampled at the site positions.
    pub fn from_displacement_fn(
        domain: LatticeDomain<D>,
        strain: Matrix<D>,
        u: impl Fn(Vector<D>) -> Vector<D>,
    ) -> Self {
        let displacement = NodalField::from_fn(domain, |s| u(domain.position(s)));
        Self {
            strain,
            displacement,
        }
    }

    /// Recovers `(A, u)` from raw point values `y(x)` defined on all of `Z^d`.
    pub fn from_raw(domain: LatticeDomain<D>, y: impl Fn(Site<D>) -> Vector<D>) -> Result<Self> {
        let strain = macroscopic_strain(&domain, &y)?;
        let displacement = NodalField::from_fn(domain, |s| y(s) - strain * domain.position(s));
        Ok(Self {
            strain,
            displacement,
        })
    }

    pub fn domain(&self) -> &LatticeDomain<D> {
        &self.displacement.domain
    }

    pub fn strain(&self) -> &Matrix<D> {
        &self.strain
    }

    pub fn displacement(&self) -> &NodalField<D> {
        &self.displacement
    }

    pub fn displacement_mut(&mut self) -> &mut NodalField<D> {
        &mut self.displacement
    }

    /// Point value `y(x)` at an arbitrary (unwrapped) site.
    pub fn value(&self, s: Site<D>) -> Vector<D> {
        self.strain * self.domain().position(s) + self.displacement.at(s)
    }

    /// `D_r y(x)`.
    pub fn difference(&self, s: Site<D>, r: Site<D>) -> Vector<D> {
        self.strain * offset_vector(r) + self.displacement.finite_difference(s, r)
    }

    /// The stencil `D_R y(x)` in canonical order.
    pub fn stencil_differences(&self, s: Site<D>, stencil: &Stencil<D>, out: &mut Vec<Vector<D>>) {
        out.clear();
        out.extend(stencil.offsets().iter().map(|&r| self.difference(s, r)));
    }

    /// `y + t z`, componentwise in the `(A, u)` representation.
    pub fn add_scaled(&self, direction: &Deformation<D>, t: f64) -> Deformation<D> {
        let mut out = self.clone();
        out.strain += direction.strain * t;
        for (a, b) in out
            .displacement
            .values
            .iter_mut()
            .zip(&direction.displacement.values)
        {
            *a += b * t;
        }
        out
    }
}

/// Reads off `A` from `A e_j = (y(x + 2 e_j) - y(x)) / 2`, checking that the
/// increment does not depend on `x`.
pub fn macroscopic_strain<const D: usize>(
    domain: &LatticeDomain<D>,
    y: &impl Fn(Site<D>) -> Vector<D>,
) -> Result<Matrix<D>> {
    let p = domain.period();
    let mut strain = Matrix::<D>::zeros();
    for j in 0..D {
        let mut first: Option<Vector<D>> = None;
        for s in domain.sites() {
            let mut shifted = s;
            shifted[j] += p;
            let inc = (y(shifted) - y(s)) / 2.0;
            match first {
                None => first = Some(inc),
                Some(f) => {
                    let tol = 1e-9 * (1.0 + f.norm());
                    if (inc - f).norm() > tol {
                        return Err(Error::NotPeriodic(format!(
                            "period increment along axis {j} varies by {:.3e}",
                            (inc - f).norm()
                        )));
                    }
                }
            }
        }
        strain.set_column(j, &first.expect("domain has at least one site"));
    }
    Ok(strain)
}
