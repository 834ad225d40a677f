//! Experiment configuration: a versioned JSON document, validated in full
//! before anything is computed or written.

use std::path::{Path, PathBuf};

use aclab::lattice::Matrix;
use aclab::potential::{presets, ChainModel, PairPotential, RadialProfile, StrainRange};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Lebesgue exponent, written as a number or `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Finite(f64),
    Named(InfinityName),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfinityName {
    Inf,
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Named(InfinityName::Inf) => f64::INFINITY,
        }
    }
}

/// Two-dimensional site potential.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialConfig {
    /// Morse bonds to nearest and diagonal neighbours.
    #[default]
    Morse,
    HarmonicNearestNeighbour {
        stiffness: f64,
    },
    SquareLattice {
        axial: RadialProfile,
        diagonal: RadialProfile,
        range: StrainRange,
    },
}

impl PotentialConfig {
    pub fn build(&self) -> Result<PairPotential<2>, CliError> {
        match self {
            PotentialConfig::Morse => Ok(presets::morse_square_lattice()),
            PotentialConfig::HarmonicNearestNeighbour { stiffness } => {
                if *stiffness <= 0.0 {
                    return Err(CliError::Config(format!("stiffness {stiffness} must be positive")));
                }
                Ok(presets::harmonic_nearest_neighbour(*stiffness))
            }
            PotentialConfig::SquareLattice { axial, diagonal, range } => {
                PairPotential::square_lattice(*axial, *diagonal, *range).map_err(|e| CliError::Config(e.to_string()))
            }
        }
    }
}

/// Chain with first and second neighbour bonds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChainConfig {
    #[default]
    Morse,
    Harmonic {
        first: f64,
        second: f64,
    },
    Custom {
        first: RadialProfile,
        second: RadialProfile,
        range: StrainRange,
    },
}

impl ChainConfig {
    pub fn build(&self) -> ChainModel {
        match self {
            ChainConfig::Morse => presets::morse_chain(),
            ChainConfig::Harmonic { first, second } => presets::harmonic_chain(*first, *second),
            ChainConfig::Custom { first, second, range } => ChainModel::new(*first, *second, *range),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    Atomistic,
    #[default]
    BondSplit,
    /// Bond-split coupling with fitted blending coefficients on the ring of
    /// sites around the atomistic block.
    Gcc,
    Qce,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    /// Atomistic block `[-a, a)²` in lattice units; `K` for chains.
    pub half_width: i64,
    pub interface_width: i64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self { half_width: 3, interface_width: 2 }
    }
}

/// Parameters of the sweeps run by the chain, counterexample and
/// bond-density commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Lattice sizes for 1D tables and counterexample sweeps.
    pub sizes: Vec<usize>,
    /// Homogeneous chain stretches `A` for the ghost-force table.
    pub stretches: Vec<f64>,
    /// Scaling factors `β`; empty means `β = 1/ε` for each size.
    pub betas: Vec<f64>,
    /// Amplitude of the non-affine part of smooth test deformations.
    pub amplitude: f64,
    /// Largest bond offset component drawn by `bond-density`.
    pub max_offset: i64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sizes: Vec::new(),
            stretches: vec![0.95, 1.0, 1.05],
            betas: Vec::new(),
            amplitude: 0.1,
            max_offset: 3,
        }
    }
}

fn default_n() -> usize {
    16
}

fn default_p_values() -> Vec<Exponent> {
    vec![Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Named(InfinityName::Inf)]
}

fn default_trials() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_n")]
    pub n: usize,
    /// 1 for chain experiments, 2 otherwise; inferred from the command when absent.
    #[serde(default)]
    pub dimension: Option<u8>,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default = "default_p_values")]
    pub p_values: Vec<Exponent>,
    /// Homogeneous strains, row-major `[F11, F12, F21, F22]`; the standard
    /// set when absent.
    #[serde(default)]
    pub strains: Option<Vec<[f64; 4]>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default, skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn exponents(&self) -> Vec<f64> {
        self.p_values.iter().map(|p| p.value()).collect()
    }

    pub fn strain_matrices(&self) -> Vec<Matrix<2>> {
        match &self.strains {
            Some(list) => list.iter().map(|s| Matrix::<2>::new(s[0], s[1], s[2], s[3])).collect(),
            None => aclab::patch_test::standard_strains(),
        }
    }

    /// Checks everything that can be checked without running the experiment.
    pub fn validate(&self, expected_dimension: u8) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if let Some(d) = self.dimension {
            if d != expected_dimension {
                return fail(format!("this command runs in dimension {expected_dimension}, config says {d}"));
            }
        }
        if self.n < 2 {
            return fail(format!("lattice size n = {} is too small", self.n));
        }
        if self.p_values.is_empty() {
            return fail("p_values is empty".into());
        }
        for p in self.exponents() {
            if p < 1.0 {
                return fail(format!("exponent {p} is not in [1, ∞]"));
            }
        }
        let RegionConfig { half_width, interface_width } = self.region;
        if half_width < 1 || interface_width < 0 {
            return fail(format!("region half_width {half_width} must be ≥ 1 and interface_width {interface_width} ≥ 0"));
        }
        if expected_dimension == 2 && 2 * (half_width + interface_width) >= 2 * self.n as i64 {
            return fail(format!(
                "atomistic block and interface ({}) do not fit in the domain of size {}",
                2 * (half_width + interface_width),
                2 * self.n
            ));
        }
        if let Some(list) = &self.strains {
            if list.is_empty() {
                return fail("strains is empty".into());
            }
            for s in list {
                if s.iter().any(|v| !v.is_finite()) || s[0] * s[3] - s[1] * s[2] <= 0.0 {
                    return fail(format!("strain {s:?} is not orientation preserving"));
                }
            }
        }
        if self.trials == 0 {
            return fail("trials must be positive".into());
        }
        let sweep = &self.sweep;
        if sweep.sizes.iter().any(|&n| n < 4) {
            return fail(format!("sweep sizes {:?} must all be at least 4", sweep.sizes));
        }
        if sweep.stretches.iter().any(|a| *a <= 0.0) {
            return fail(format!("sweep stretches {:?} must be positive", sweep.stretches));
        }
        if sweep.betas.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return fail(format!("sweep betas {:?} must be positive", sweep.betas));
        }
        if !(sweep.amplitude >= 0.0 && sweep.amplitude.is_finite()) {
            return fail(format!("sweep amplitude {} must be non-negative", sweep.amplitude));
        }
        if sweep.max_offset < 1 {
            return fail(format!("sweep max_offset {} must be at least 1", sweep.max_offset));
        }
        if expected_dimension == 2 {
            self.potential.build()?;
        }
        Ok(())
    }

    /// Hex SHA-256 prefix of the canonical JSON of the effective
    /// configuration (output directory excluded).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configuration serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }
}
