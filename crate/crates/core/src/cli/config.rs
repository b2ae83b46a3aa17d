//! Run configuration: a JSON file with every section optional, overridden by
//! command-line flags. Lengths are in nm, frequencies in MHz or kHz as named.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coupling::{linspace_step, AtomPreset, RotorPreset};
use crate::error::{Error, Result};
use crate::manybody::TrapQuadrature;
use crate::protocol::StatePreset;
use crate::rotor::MoleculeSpec;
use crate::rydberg::QuantumDefects;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MoleculeConfig {
    Named(String),
    Custom(CustomMolecule),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomMolecule {
    #[serde(default = "custom_name")]
    pub name: String,
    pub dipole_debye: f64,
    pub b_mhz: f64,
}

fn custom_name() -> String {
    "custom".into()
}

impl Default for MoleculeConfig {
    fn default() -> Self {
        MoleculeConfig::Named("RbYb".into())
    }
}

impl MoleculeConfig {
    pub fn resolve(&self) -> Result<MoleculeSpec> {
        match self {
            MoleculeConfig::Named(n) => MoleculeSpec::by_name(n),
            MoleculeConfig::Custom(c) => MoleculeSpec::new(c.name.clone(), c.dipole_debye, c.b_mhz),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            MoleculeConfig::Named(n) => n,
            MoleculeConfig::Custom(c) => &c.name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomConfig {
    pub n: u32,
    /// s, p, d, f quantum defects; Rb when absent.
    pub defects: Option<[f64; 4]>,
}

impl Default for AtomConfig {
    fn default() -> Self {
        Self { n: 60, defects: None }
    }
}

impl AtomConfig {
    pub fn defects(&self) -> QuantumDefects {
        self.defects.map(QuantumDefects).unwrap_or_else(QuantumDefects::rubidium)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    pub atom: AtomPreset,
    pub rotor: RotorPreset,
    /// Second atomic preset for deviation columns.
    pub compare: Option<AtomPreset>,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            atom: AtomPreset::Full,
            rotor: RotorPreset::UpToJ2,
            compare: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeometryMode {
    Pair,
    Lattice,
    Trap,
    Ring,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RangeConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        linspace_step(self.start, self.stop, self.step).map_err(|e| Error::Config(e.to_string()))
    }
}

impl std::str::FromStr for RangeConfig {
    type Err = String;
    /// `start:stop:step` or a single value.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                Ok(Self { start: v, stop: v, step: 1.0 })
            }
            [a, b, c] => Ok(Self {
                start: num(a)?,
                stop: num(b)?,
                step: num(c)?,
            }),
            _ => Err(format!("expected start:stop:step, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub mode: GeometryMode,
    /// ρ grid; the ring radius in ring mode.
    pub rho_nm: RangeConfig,
    pub delta_x_nm: f64,
    pub spacing_nm: f64,
    pub molecules: usize,
    pub trap_width_um: Option<f64>,
    pub trap_quadrature: Option<TrapQuadrature>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            mode: GeometryMode::Pair,
            rho_nm: RangeConfig {
                start: 400.0,
                stop: 600.0,
                step: 10.0,
            },
            delta_x_nm: 0.0,
            spacing_nm: 500.0,
            molecules: 3,
            trap_width_um: None,
            trap_quadrature: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub state: StatePreset,
    /// JSON file with `[[re, im], ...]` over 2^N configurations.
    pub amplitudes: Option<PathBuf>,
    pub molecules: usize,
    pub target_k: u32,
    pub rabi_khz: f64,
    /// Group mean shifts for the leakage estimate.
    pub group_means_khz: Vec<f64>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            state: StatePreset::Uniform,
            amplitudes: None,
            molecules: 3,
            target_k: 1,
            rabi_khz: 10.0,
            group_means_khz: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Main CSV or JSON output; stdout when absent.
    pub main: Option<PathBuf>,
    /// Group summary CSV of the collective command.
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub molecule: MoleculeConfig,
    pub atom: AtomConfig,
    pub basis: BasisConfig,
    pub geometry: GeometryConfig,
    pub protocol: ProtocolConfig,
    pub outputs: OutputConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form, output paths excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.outputs = OutputConfig::default();
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
