//! Command bodies. Each takes a fully resolved configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{GeometryMode, RunConfig};
use super::output::{emit, num, Csv};
use crate::coupling::{compare_scans, shift_scan, PairModel, ProductBasis};
use crate::error::{Error, Result};
use crate::manybody::{
    collective_scan, default_trap_width_um, minimal_model, ring_shifts, ArrayLayout, Method, MAX_DENSE_N,
};
use crate::protocol::{protocol_report, MolecularAmplitudes, ProtocolReport};
use crate::rotor::MoleculeSpec;
use crate::rydberg::{solve_radial, GridSpec, RydbergLevel, WavefunctionCache};
use crate::units::{Quantity, BOHR_IN_NM, CONSTANTS_VERSION, DEBYE_IN_AU, HARTREE_IN_HZ, REFERENCE};

const STATE_TAGS: [&str; 4] = ["j0m0", "j1m0", "j1mp1", "j1mm1"];

fn cache(cfg: &RunConfig) -> Arc<WavefunctionCache> {
    Arc::new(WavefunctionCache::new(cfg.atom.defects(), GridSpec::default()))
}

fn molecule_comment(m: &MoleculeSpec) -> String {
    format!("molecule={} d_debye={} b_mhz={}", m.name, num(m.dipole.debye()), num(m.b.mhz()))
}

pub fn pair_scan(cfg: &RunConfig) -> Result<()> {
    let molecule = cfg.molecule.resolve()?;
    let rho = cfg.geometry.rho_nm.values()?;
    let cache = cache(cfg);
    let build = |preset| -> Result<PairModel> {
        PairModel::new(
            ProductBasis::from_presets(cfg.atom.n, preset, cfg.basis.rotor)?,
            molecule.clone(),
            Arc::clone(&cache),
        )
    };
    let base = shift_scan(&build(cfg.basis.atom)?, cfg.basis.atom, cfg.basis.rotor, &rho, cfg.geometry.delta_x_nm)?;
    let comparison = match cfg.basis.compare {
        Some(p) => {
            let other = shift_scan(&build(p)?, p, cfg.basis.rotor, &rho, cfg.geometry.delta_x_nm)?;
            let cmp = compare_scans(&base, &other)?;
            Some((other, cmp))
        }
        None => None,
    };

    let mut columns: Vec<String> = vec!["rho_nm".into(), "delta_x_nm".into()];
    columns.extend(STATE_TAGS.iter().map(|t| format!("shift_{t}_mhz")));
    columns.extend(["split_j0m0_j1m0_mhz".into(), "split_j0m0_j1mp1_mhz".into(), "admixture_max".into()]);
    if comparison.is_some() {
        columns.extend(STATE_TAGS.iter().map(|t| format!("cmp_shift_{t}_mhz")));
        columns.extend(STATE_TAGS.iter().map(|t| format!("reldev_{t}")));
    }
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut csv = Csv::new("pair-scan", &cfg.hash(), &cols);
    csv.comment(&molecule_comment(&molecule));
    csv.comment(&format!(
        "n={} atom_basis={} rotor_jmax={}{}",
        cfg.atom.n,
        cfg.basis.atom.name(),
        cfg.basis.rotor.j_max(),
        cfg.basis.compare.map(|p| format!(" compare={}", p.name())).unwrap_or_default()
    ));
    for (i, r) in base.rows.iter().enumerate() {
        let s = r.shifts_mhz;
        let mut fields = vec![num(r.rho_nm), num(r.delta_x_nm)];
        fields.extend(s.iter().map(|v| num(*v)));
        fields.extend([num(s[1] - s[0]), num(s[2] - s[0]), num(r.admixture_max)]);
        if let Some((other, cmp)) = &comparison {
            fields.extend(other.rows[i].shifts_mhz.iter().map(|v| num(*v)));
            fields.extend(cmp.per_row[i].iter().map(|v| num(*v)));
        }
        csv.row(&fields);
    }
    emit(cfg.outputs.main.as_deref(), csv.as_str())
}

fn summary_path(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.outputs
        .summary
        .clone()
        .or_else(|| cfg.outputs.main.as_ref().map(|p| p.with_extension("summary.csv")))
}

pub fn collective(cfg: &RunConfig) -> Result<()> {
    let molecule = cfg.molecule.resolve()?;
    let g = &cfg.geometry;
    let n = g.molecules;
    if n > MAX_DENSE_N {
        return Err(Error::DimensionCap { n, max: MAX_DENSE_N });
    }
    let spacing = Quantity::length_nm(g.spacing_nm);
    let layout = match g.mode {
        GeometryMode::Lattice => ArrayLayout::lattice(n, spacing)?,
        GeometryMode::Trap => {
            let width = g
                .trap_width_um
                .or_else(|| default_trap_width_um(&molecule.name, n))
                .ok_or_else(|| Error::Config(format!("no default trap width for {} with N={n}; set one", molecule.name)))?;
            ArrayLayout::trap(n, spacing, Quantity::length_um(width), g.trap_quadrature.unwrap_or_default())?
        }
        GeometryMode::Ring => ArrayLayout::ring(n)?,
        GeometryMode::Pair => return Err(Error::Config("collective needs lattice, trap or ring mode".into())),
    };
    let model = minimal_model(cfg.atom.n, molecule.clone(), cache(cfg))?;
    let rho = g.rho_nm.values()?;
    let results = collective_scan(&layout, &model, &rho, &[Method::Diag, Method::Pt])?;
    let e_rot = molecule.e_rot();
    let hash = cfg.hash();

    let mut main = Csv::new("collective", &hash, &["rho_nm", "config", "k", "shift_khz", "method"]);
    let mut summary = Csv::new(
        "collective summary",
        &hash,
        &["rho_nm", "method", "k", "min_khz", "max_khz", "mean_khz"],
    );
    let mode = match g.mode {
        GeometryMode::Trap => format!(
            "mode=trap N={n} spacing_nm={} width_um={}",
            num(g.spacing_nm),
            num(match layout.mode {
                crate::manybody::LayoutMode::Trap { width_bohr, .. } => width_bohr * BOHR_IN_NM / 1e3,
                _ => f64::NAN,
            })
        ),
        GeometryMode::Ring => format!("mode=ring N={n} rho_is_ring_radius"),
        _ => format!("mode=lattice N={n} spacing_nm={}", num(g.spacing_nm)),
    };
    for csv in [&mut main, &mut summary] {
        csv.comment(&molecule_comment(&molecule));
        csv.comment(&mode);
    }
    for (rho, couplings, tables) in &results {
        let v: Vec<String> = couplings.v_bar.iter().map(|v| num(Quantity::energy_hartree(*v).khz())).collect();
        main.comment(&format!("rho_nm={} vbar_khz={}", num(*rho), v.join(";")));
        for t in tables {
            for c in &t.configs {
                main.row(&[num(*rho), c.bit_string(n), c.k.to_string(), num(Quantity::energy_hartree(c.shift).khz()), t.method.name().into()]);
            }
            for s in t.groups() {
                let khz = |x: f64| num(Quantity::energy_hartree(x).khz());
                summary.row(&[num(*rho), t.method.name().into(), s.k.to_string(), khz(s.min), khz(s.max), khz(s.mean)]);
            }
        }
        if g.mode == GeometryMode::Ring {
            let v_tilde = Quantity::energy_hartree(couplings.v_bar[0]);
            for k in 0..=n as u32 {
                let s = ring_shifts(n as u32, k, v_tilde, e_rot)?.khz();
                summary.row(&[num(*rho), "ring".into(), k.to_string(), num(s), num(s), num(s)]);
            }
        }
    }
    match summary_path(cfg) {
        Some(p) => {
            emit(cfg.outputs.main.as_deref(), main.as_str())?;
            emit(Some(&p), summary.as_str())
        }
        None => emit(None, &format!("{}\n{}", main.as_str(), summary.as_str())),
    }
}

fn load_amplitudes(path: &Path) -> Result<MolecularAmplitudes> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let raw: Vec<[f64; 2]> =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let len = raw.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::Config(format!("{} amplitudes is not 2^N with N ≥ 1", len)));
    }
    let amps = raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
    MolecularAmplitudes::new(len.trailing_zeros() as usize, amps).map_err(|e| Error::Config(e.to_string()))
}

#[derive(Serialize)]
struct ProtocolOutput<'a> {
    command: &'static str,
    config_sha256: String,
    constants_version: &'static str,
    report: &'a ProtocolReport,
}

pub fn protocol(cfg: &RunConfig) -> Result<()> {
    let p = &cfg.protocol;
    let state = match &p.amplitudes {
        Some(f) => load_amplitudes(f)?,
        None => p.state.build(p.molecules).map_err(|e| Error::Config(e.to_string()))?,
    };
    if !(p.rabi_khz >= 0.0) {
        return Err(Error::Config("Rabi frequency must be nonnegative".into()));
    }
    let report = protocol_report(&state, p.target_k, Quantity::frequency_khz(p.rabi_khz), &p.group_means_khz)?;
    let out = ProtocolOutput {
        command: "protocol",
        config_sha256: cfg.hash(),
        constants_version: CONSTANTS_VERSION,
        report: &report,
    };
    let mut text = serde_json::to_string_pretty(&out)?;
    text.push('\n');
    emit(cfg.outputs.main.as_deref(), &text)
}

#[derive(Serialize)]
struct MoleculeRow {
    name: String,
    dipole_debye: f64,
    b_mhz: f64,
    e_rot_mhz: f64,
}

#[derive(Serialize)]
struct ConstantsOutput {
    constants_version: &'static str,
    bohr_in_nm: f64,
    hartree_in_hz: f64,
    debye_in_au: f64,
    rb_quantum_defects: [f64; 4],
    gamma_60s_khz: f64,
    fermi_teller_dipole_debye: f64,
    molecules: Vec<MoleculeRow>,
}

pub fn constants(out: Option<&Path>) -> Result<()> {
    let c = ConstantsOutput {
        constants_version: CONSTANTS_VERSION,
        bohr_in_nm: BOHR_IN_NM,
        hartree_in_hz: HARTREE_IN_HZ,
        debye_in_au: DEBYE_IN_AU,
        rb_quantum_defects: REFERENCE.rb_defects,
        gamma_60s_khz: REFERENCE.gamma_60s.khz(),
        fermi_teller_dipole_debye: REFERENCE.fermi_teller_dcr.debye(),
        molecules: MoleculeSpec::catalog()
            .into_iter()
            .map(|m| MoleculeRow {
                dipole_debye: m.dipole.debye(),
                b_mhz: m.b.mhz(),
                e_rot_mhz: m.e_rot().mhz(),
                name: m.name,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&c)?;
    text.push('\n');
    emit(out, &text)
}

pub fn dump_wavefunction(cfg: &RunConfig, l: u32, step: Option<f64>) -> Result<()> {
    let mut grid = GridSpec::default();
    if let Some(s) = step {
        if !(s > 0.0) {
            return Err(Error::Config("--step must be positive".into()));
        }
        grid.step = s;
    }
    let level = RydbergLevel::new(cfg.atom.n, l, &cfg.atom.defects())?;
    let wf = solve_radial(&level, &grid)?;
    let hash: String = Sha256::digest(format!("{}|l={l}|step={}", cfg.hash(), grid.step).as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    let mut csv = Csv::new("dump-wavefunction", &hash, &["r_bohr", "u"]);
    csv.comment(&format!(
        "n={} l={l} energy_hartree={} n_eff={} nodes={} norm={}",
        cfg.atom.n,
        num(level.energy),
        num(level.n_eff()),
        wf.node_count(),
        num(wf.norm_squared())
    ));
    for (k, u) in wf.samples.iter().enumerate() {
        csv.row(&[num(wf.r(k)), num(*u)]);
    }
    emit(cfg.outputs.main.as_deref(), csv.as_str())
}
