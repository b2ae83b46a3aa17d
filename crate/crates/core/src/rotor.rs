//! Rigid-rotor states of a polar diatomic and its dipole matrix elements.
//!
//! Spherical components follow `d_± = ±⟨d_x ∓ i d_y⟩/√2`, which gives
//! `d_±^{00;1±1} = −d/√3`. With that convention
//!
//! ```text
//! d_z(a, b) = d √(4π/3) ⟨a|Y_1^0|b⟩
//! d_+(a, b) = d √(4π/3) ⟨a|Y_1^{-1}|b⟩     (ket m_J = bra m_J + 1)
//! d_-(a, b) = d √(4π/3) ⟨a|Y_1^{+1}|b⟩     (ket m_J = bra m_J − 1)
//! ```
//!
//! so `d_z` is symmetric and `d_+(a, b) = −d_-(b, a)`.

use std::f64::consts::PI;
use std::fmt;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::angular::{harmonic_bracket, rotate_rotor_basis};
use crate::error::{Error, Result};
use crate::units::{Quantity, REFERENCE};

const CATALOG_JSON: &str = include_str!("../data/molecules.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RotorState {
    pub j: u32,
    pub m: i32,
}

impl RotorState {
    pub fn new(j: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > j {
            return Err(Error::InvalidInput(format!("|m_J|={} exceeds J={j}", m.abs())));
        }
        Ok(Self { j, m })
    }

    pub const DOWN: RotorState = RotorState { j: 0, m: 0 };
    pub const UP: RotorState = RotorState { j: 1, m: 0 };
}

impl fmt::Display for RotorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|J={},m={}⟩", self.j, self.m)
    }
}

/// All states with J ≤ `j_max`, J ascending and m_J descending within J.
pub fn rotor_states(j_max: u32) -> Vec<RotorState> {
    (0..=j_max)
        .flat_map(|j| (-(j as i32)..=j as i32).rev().map(move |m| RotorState { j, m }))
        .collect()
}

/// `B J(J+1)`.
pub fn rotor_energy(j: u32, b: Quantity) -> Quantity {
    b * (j * (j + 1)) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeSpec {
    pub name: String,
    pub dipole: Quantity,
    /// Rotational constant.
    pub b: Quantity,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogEntry {
    name: String,
    dipole_debye: f64,
    b_mhz: f64,
}

impl MoleculeSpec {
    pub fn new(name: impl Into<String>, dipole_debye: f64, b_mhz: f64) -> Result<Self> {
        let name = name.into();
        // d = 0 is accepted as a control with the interaction switched off
        if !(dipole_debye >= 0.0 && dipole_debye.is_finite()) {
            return Err(Error::InvalidInput(format!("{name}: dipole must be nonnegative, got {dipole_debye} D")));
        }
        if !(b_mhz > 0.0 && b_mhz.is_finite()) {
            return Err(Error::InvalidInput(format!("{name}: B must be positive, got {b_mhz} MHz")));
        }
        let spec = Self {
            name,
            dipole: Quantity::dipole_debye(dipole_debye),
            b: Quantity::frequency_mhz(b_mhz),
        };
        if spec.dipole.au() >= REFERENCE.fermi_teller_dcr.au() {
            warn!(
                "{}: d = {} D is not below the Fermi-Teller critical dipole {} D",
                spec.name,
                dipole_debye,
                REFERENCE.fermi_teller_dcr.debye()
            );
        }
        Ok(spec)
    }

    /// Rotational excitation energy `E(J=1) − E(J=0) = 2B`.
    pub fn e_rot(&self) -> Quantity {
        self.b * 2.0
    }

    /// Energy of rotor level J, as an energy.
    pub fn level(&self, j: u32) -> Quantity {
        Quantity::energy_hartree(rotor_energy(j, self.b).au())
    }

    pub fn catalog() -> Vec<MoleculeSpec> {
        parse_catalog(CATALOG_JSON).expect("built-in molecule catalog is valid")
    }

    /// Case-insensitive lookup in the built-in catalog.
    pub fn by_name(name: &str) -> Result<MoleculeSpec> {
        Self::catalog()
            .into_iter()
            .find(|m| m.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::InvalidInput(format!("unknown molecule {name:?}")))
    }
}

/// Parses a catalog in the same JSON layout as the built-in one.
pub fn parse_catalog(json: &str) -> Result<Vec<MoleculeSpec>> {
    let entries: Vec<CatalogEntry> = serde_json::from_str(json)?;
    entries
        .into_iter()
        .map(|e| MoleculeSpec::new(e.name, e.dipole_debye, e.b_mhz))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Z,
    Plus,
    Minus,
}

impl Component {
    /// Change `m_J(ket) − m_J(bra)` for a non-zero element.
    pub fn delta_m(self) -> i32 {
        match self {
            Component::Z => 0,
            Component::Plus => 1,
            Component::Minus => -1,
        }
    }
}

/// `d_c^{bra;ket}` in units of `d`, for bra J < ket J, both ≤ 2.
fn table_upward(bra: RotorState, ket: RotorState, c: Component) -> f64 {
    let s3 = 3f64.sqrt();
    let s5 = 5f64.sqrt();
    let s15 = 15f64.sqrt();
    // d_- follows from d_+ under m → −m
    let (bm, km) = match c {
        Component::Minus => (-bra.m, -ket.m),
        _ => (bra.m, ket.m),
    };
    match (c, bra.j, bm, ket.j, km) {
        (Component::Z, 0, 0, 1, 0) => 1.0 / s3,
        (Component::Z, 1, 0, 2, 0) => 2.0 / s15,
        (Component::Z, 1, 1 | -1, 2, _) => 1.0 / s5,
        (_, 0, 0, 1, 1) => -1.0 / s3,
        (_, 1, 0, 2, 1) => -1.0 / s5,
        (_, 1, 1, 2, 2) => -(2.0f64 / 5.0).sqrt(),
        (_, 1, -1, 2, 0) => -1.0 / s15,
        _ => 0.0,
    }
}

fn selection_allowed(bra: RotorState, ket: RotorState, c: Component) -> bool {
    bra.j.abs_diff(ket.j) == 1 && ket.m - bra.m == c.delta_m()
}

/// General element from the Gaunt integral, any J.
fn element_from_harmonics(bra: RotorState, ket: RotorState, c: Component) -> f64 {
    let big_m = match c {
        Component::Z => 0,
        Component::Plus => -1,
        Component::Minus => 1,
    };
    (4.0 * PI / 3.0).sqrt() * harmonic_bracket(bra.j as i32, bra.m, 1, big_m, ket.j as i32, ket.m)
}

/// `⟨bra| d_c |ket⟩` for a molecule with dipole `d` (same unit as the result).
pub fn dipole_element(bra: RotorState, ket: RotorState, c: Component, d: f64) -> f64 {
    if !selection_allowed(bra, ket, c) {
        return 0.0;
    }
    if bra.j.max(ket.j) > 2 {
        return d * element_from_harmonics(bra, ket, c);
    }
    let unit = if bra.j < ket.j {
        table_upward(bra, ket, c)
    } else {
        match c {
            Component::Z => table_upward(ket, bra, c),
            Component::Plus => -table_upward(ket, bra, Component::Minus),
            Component::Minus => -table_upward(ket, bra, Component::Plus),
        }
    };
    d * unit
}

/// Lab-frame `|↓⟩ = |0,0⟩` and `|↑⟩ = |1,0⟩` expanded over states quantized
/// along an axis tilted by `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedTwoLevel {
    pub beta: f64,
    pub down: Vec<(RotorState, f64)>,
    pub up: Vec<(RotorState, f64)>,
}

pub fn rotated_two_level_basis(beta: f64) -> Result<RotatedTwoLevel> {
    if !(beta.abs() <= 0.5 * PI + 1e-12) {
        return Err(Error::InvalidInput(format!("|beta| must not exceed pi/2, got {beta}")));
    }
    let r0 = rotate_rotor_basis(0, beta)?;
    let r1 = rotate_rotor_basis(1, beta)?;
    let down = vec![(RotorState::DOWN, r0.coefficient(0, 0))];
    let up = (-1..=1)
        .rev()
        .map(|mp| (RotorState { j: 1, m: mp }, r1.coefficient(0, mp)))
        .collect();
    Ok(RotatedTwoLevel { beta, down, up })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinRotationParams {
    pub gamma_sr: Quantity,
    pub b: Quantity,
}

/// Multiplicative bounds `(1 + γ/2B, 1 − γ/2B)` on a perturbative shift.
pub fn spin_rotation_scaling(params: &SpinRotationParams) -> Result<(f64, f64)> {
    let b = params.b.au();
    if !(b > 0.0) {
        return Err(Error::InvalidInput("B must be positive".into()));
    }
    let x = params.gamma_sr.au() / (2.0 * b);
    if x.abs() > 0.1 {
        warn!("spin-rotation ratio gamma/2B = {x:.3} is outside the perturbative regime");
    }
    Ok((1.0 + x, 1.0 - x))
}
