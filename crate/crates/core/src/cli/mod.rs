//! Command-line front end.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::coupling::{AtomPreset, RotorPreset};
use crate::error::{Error, Result};
use config::{GeometryMode, MoleculeConfig, RangeConfig, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "rydmol", version, about = "Rydberg atom / polar molecule shift calculator")]
pub struct Cli {
    /// Worker threads for scans; all cores by default.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Labeled single-pair shifts over a ρ grid (CSV).
    PairScan(PairScanArgs),
    /// Collective shifts of an N-molecule array (CSV + group summary).
    Collective(CollectiveArgs),
    /// Readout model report (JSON).
    Protocol(ProtocolArgs),
    /// Physical constants and the molecule catalog (JSON).
    Constants(ConstantsArgs),
    /// Radial wavefunction samples for one level (CSV).
    DumpWavefunction(DumpArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON run configuration; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Catalog molecule name.
    #[arg(long)]
    pub molecule: Option<String>,
    /// Dipole moment in debye (custom molecule; takes B from --b or the named molecule).
    #[arg(long = "d")]
    pub dipole_debye: Option<f64>,
    /// Rotational constant in MHz.
    #[arg(long = "b")]
    pub b_mhz: Option<f64>,
    /// Principal quantum number of the ns state.
    #[arg(long)]
    pub n: Option<u32>,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PairScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// ρ grid in nm as start:stop:step.
    #[arg(long)]
    pub rho: Option<RangeConfig>,
    /// Offset along the array axis in nm.
    #[arg(long)]
    pub delta_x: Option<f64>,
    /// Atomic basis: full, no-f, reduced, minimal.
    #[arg(long)]
    pub preset: Option<AtomPreset>,
    /// Rotor basis: j2 or j3.
    #[arg(long)]
    pub rotor: Option<RotorPreset>,
    /// Second atomic basis for relative-deviation columns.
    #[arg(long)]
    pub compare: Option<AtomPreset>,
}

#[derive(Debug, Args)]
pub struct CollectiveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub mode: Option<GeometryMode>,
    /// Number of molecules.
    #[arg(long = "molecules", short = 'N')]
    pub molecules: Option<usize>,
    /// ρ grid in nm (ring radius in ring mode).
    #[arg(long)]
    pub rho: Option<RangeConfig>,
    /// Lattice period in nm.
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Trap width a in μm.
    #[arg(long)]
    pub width: Option<f64>,
    /// Group summary CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProtocolArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Input state: uniform, w, product.
    #[arg(long)]
    pub state: Option<String>,
    /// Product-state amplitudes.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// JSON amplitudes file `[[re, im], ...]`.
    #[arg(long)]
    pub amplitudes: Option<PathBuf>,
    #[arg(long = "molecules", short = 'N')]
    pub molecules: Option<usize>,
    #[arg(long)]
    pub target_k: Option<u32>,
    #[arg(long)]
    pub rabi_khz: Option<f64>,
    /// Comma-separated group mean shifts in kHz.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub group_means_khz: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Orbital angular momentum.
    #[arg(long)]
    pub l: u32,
    /// Numerov step in √r.
    #[arg(long)]
    pub step: Option<f64>,
}

/// Config file plus the flags every command shares.
fn base_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("{}: {io}", p.display())),
            other => other,
        })?,
        None => RunConfig::default(),
    };
    if let Some(m) = &common.molecule {
        cfg.molecule = MoleculeConfig::Named(m.clone());
    }
    if common.dipole_debye.is_some() || common.b_mhz.is_some() {
        let base = cfg.molecule.resolve().ok();
        let dipole_debye = common
            .dipole_debye
            .or(base.as_ref().map(|m| m.dipole.debye()))
            .ok_or_else(|| Error::Config("--b needs --d or a known molecule".into()))?;
        let b_mhz = common
            .b_mhz
            .or(base.as_ref().map(|m| m.b.mhz()))
            .ok_or_else(|| Error::Config("--d needs --b or a known molecule".into()))?;
        cfg.molecule = MoleculeConfig::Custom(config::CustomMolecule {
            name: cfg.molecule.name().to_string(),
            dipole_debye,
            b_mhz,
        });
    }
    if let Some(n) = common.n {
        cfg.atom.n = n;
    }
    if let Some(o) = &common.out {
        cfg.outputs.main = Some(o.clone());
    }
    Ok(cfg)
}

pub fn resolve_pair_scan(a: &PairScanArgs) -> Result<RunConfig> {
    let mut cfg = base_config(&a.common)?;
    cfg.geometry.mode = GeometryMode::Pair;
    if let Some(r) = a.rho {
        cfg.geometry.rho_nm = r;
    }
    if let Some(d) = a.delta_x {
        cfg.geometry.delta_x_nm = d;
    }
    if let Some(p) = a.preset {
        cfg.basis.atom = p;
    }
    if let Some(p) = a.rotor {
        cfg.basis.rotor = p;
    }
    if let Some(p) = a.compare {
        cfg.basis.compare = Some(p);
    }
    Ok(cfg)
}

pub fn resolve_collective(a: &CollectiveArgs) -> Result<RunConfig> {
    let mut cfg = base_config(&a.common)?;
    if let Some(m) = a.mode {
        cfg.geometry.mode = m;
    }
    if cfg.geometry.mode == GeometryMode::Pair {
        cfg.geometry.mode = GeometryMode::Lattice;
    }
    if let Some(n) = a.molecules {
        cfg.geometry.molecules = n;
    }
    if let Some(r) = a.rho {
        cfg.geometry.rho_nm = r;
    }
    if let Some(l) = a.spacing {
        cfg.geometry.spacing_nm = l;
    }
    if let Some(w) = a.width {
        cfg.geometry.trap_width_um = Some(w);
    }
    if let Some(s) = &a.summary {
        cfg.outputs.summary = Some(s.clone());
    }
    Ok(cfg)
}

pub fn resolve_protocol(a: &ProtocolArgs) -> Result<RunConfig> {
    use crate::protocol::StatePreset;
    let mut cfg = base_config(&a.common)?;
    let p = &mut cfg.protocol;
    if let Some(s) = &a.state {
        p.state = match s.as_str() {
            "uniform" => StatePreset::Uniform,
            "w" | "W" => StatePreset::W,
            "product" => StatePreset::Product {
                alpha: a.alpha.unwrap_or(std::f64::consts::FRAC_1_SQRT_2),
                beta: a.beta.unwrap_or(std::f64::consts::FRAC_1_SQRT_2),
            },
            other => return Err(Error::Config(format!("unknown state preset {other:?}"))),
        };
    } else if a.alpha.is_some() || a.beta.is_some() {
        return Err(Error::Config("--alpha/--beta need --state product".into()));
    }
    if let Some(f) = &a.amplitudes {
        p.amplitudes = Some(f.clone());
    }
    if let Some(n) = a.molecules {
        p.molecules = n;
    }
    if let Some(k) = a.target_k {
        p.target_k = k;
    }
    if let Some(r) = a.rabi_khz {
        p.rabi_khz = r;
    }
    if let Some(g) = &a.group_means_khz {
        p.group_means_khz = g.clone();
    }
    Ok(cfg)
}

pub fn resolve_dump(a: &DumpArgs) -> Result<RunConfig> {
    base_config(&a.common)
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        // a pool may already exist when called more than once in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match &cli.command {
        Command::PairScan(a) => commands::pair_scan(&resolve_pair_scan(a)?),
        Command::Collective(a) => commands::collective(&resolve_collective(a)?),
        Command::Protocol(a) => commands::protocol(&resolve_protocol(a)?),
        Command::Constants(a) => commands::constants(a.out.as_deref()),
        Command::DumpWavefunction(a) => commands::dump_wavefunction(&resolve_dump(a)?, a.l, a.step),
    }
}
