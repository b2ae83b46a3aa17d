//! Hartree atomic units and the handful of laboratory units used at I/O
//! boundaries.
//!
//! Every [`Quantity`] stores its value in the atomic unit of its dimension:
//!
//! | dimension     | internal unit              |
//! |---------------|----------------------------|
//! | energy        | hartree                    |
//! | frequency     | hartree / h                |
//! | length        | bohr                       |
//! | dipole        | e·a0                       |
//! | dimensionless | 1                          |
//!
//! Frequencies and energies share the Hz-family units through E = hν, so a
//! "MHz" tag is accepted by both dimensions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag of the constants table below. Written into every output header.
pub const CONSTANTS_VERSION: &str = "codata2018-rb-qd-v1";

/// Bohr radius in nanometres.
pub const BOHR_IN_NM: f64 = 0.052_917_721_090_3;
/// Hartree energy expressed as a frequency E_h/h, in Hz.
pub const HARTREE_IN_HZ: f64 = 6.579_683_920_502e15;
/// One debye in atomic units of dipole moment (e·a0).
pub const DEBYE_IN_AU: f64 = 0.393_430_238_5;

/// Fixed reference values quoted for Rb and for polar molecules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceConstants {
    /// Total width of Rb(60s).
    pub gamma_60s: Quantity,
    /// Fermi–Teller critical dipole moment.
    pub fermi_teller_dcr: Quantity,
    /// Rb quantum defects for l = s, p, d, f.
    pub rb_defects: [f64; 4],
}

/// The reference constants table.
pub const REFERENCE: ReferenceConstants = ReferenceConstants {
    gamma_60s: Quantity {
        value: 1.644e3 / HARTREE_IN_HZ,
        dimension: Dimension::Frequency,
    },
    fermi_teller_dcr: Quantity {
        value: 1.63 * DEBYE_IN_AU,
        dimension: Dimension::Dipole,
    },
    rb_defects: [3.13, 2.65, 1.34, 0.016],
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Energy,
    Length,
    Dipole,
    Frequency,
    Dimensionless,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Dimension::Energy => "energy",
            Dimension::Length => "length",
            Dimension::Dipole => "dipole",
            Dimension::Frequency => "frequency",
            Dimension::Dimensionless => "dimensionless",
        };
        f.write_str(s)
    }
}

/// Unit tags accepted by [`convert`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    /// Atomic unit of whatever dimension the quantity carries.
    Atomic,
    Hartree,
    Hz,
    KHz,
    MHz,
    GHz,
    Bohr,
    Nanometer,
    Micrometer,
    Debye,
    One,
}

impl Unit {
    /// Size of one of this unit, in the atomic unit of `dim`.
    /// `None` when the unit does not measure `dim`.
    fn scale_for(self, dim: Dimension) -> Option<f64> {
        use Dimension::*;
        match (self, dim) {
            (Unit::Atomic, _) => Some(1.0),
            (Unit::Hartree, Energy) => Some(1.0),
            (Unit::Hz, Energy | Frequency) => Some(1.0 / HARTREE_IN_HZ),
            (Unit::KHz, Energy | Frequency) => Some(1e3 / HARTREE_IN_HZ),
            (Unit::MHz, Energy | Frequency) => Some(1e6 / HARTREE_IN_HZ),
            (Unit::GHz, Energy | Frequency) => Some(1e9 / HARTREE_IN_HZ),
            (Unit::Bohr, Length) => Some(1.0),
            (Unit::Nanometer, Length) => Some(1.0 / BOHR_IN_NM),
            (Unit::Micrometer, Length) => Some(1e3 / BOHR_IN_NM),
            (Unit::Debye, Dipole) => Some(DEBYE_IN_AU),
            (Unit::One, Dimensionless) => Some(1.0),
            _ => None,
        }
    }
}

/// A dimensioned value held in atomic units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    value: f64,
    dimension: Dimension,
}

impl Quantity {
    /// Wraps a value already expressed in atomic units.
    pub const fn atomic(value: f64, dimension: Dimension) -> Self {
        Self { value, dimension }
    }

    /// Builds a quantity from a value in `unit`.
    pub fn new(value: f64, unit: Unit, dimension: Dimension) -> Result<Self> {
        let scale = unit.scale_for(dimension).ok_or(Error::DimensionMismatch {
            unit,
            dimension,
        })?;
        Ok(Self {
            value: value * scale,
            dimension,
        })
    }

    pub fn energy_hartree(value: f64) -> Self {
        Self::atomic(value, Dimension::Energy)
    }

    pub fn energy_mhz(value: f64) -> Self {
        Self::atomic(value * 1e6 / HARTREE_IN_HZ, Dimension::Energy)
    }

    pub fn frequency_mhz(value: f64) -> Self {
        Self::atomic(value * 1e6 / HARTREE_IN_HZ, Dimension::Frequency)
    }

    pub fn frequency_khz(value: f64) -> Self {
        Self::atomic(value * 1e3 / HARTREE_IN_HZ, Dimension::Frequency)
    }

    pub fn length_bohr(value: f64) -> Self {
        Self::atomic(value, Dimension::Length)
    }

    pub fn length_nm(value: f64) -> Self {
        Self::atomic(value / BOHR_IN_NM, Dimension::Length)
    }

    pub fn length_um(value: f64) -> Self {
        Self::atomic(value * 1e3 / BOHR_IN_NM, Dimension::Length)
    }

    pub fn dipole_debye(value: f64) -> Self {
        Self::atomic(value * DEBYE_IN_AU, Dimension::Dipole)
    }

    pub fn dimensionless(value: f64) -> Self {
        Self::atomic(value, Dimension::Dimensionless)
    }

    /// Value in atomic units.
    pub fn au(&self) -> f64 {
        self.value
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    /// Value expressed in `unit`.
    pub fn value_in(&self, unit: Unit) -> Result<f64> {
        let scale = unit
            .scale_for(self.dimension)
            .ok_or(Error::DimensionMismatch {
                unit,
                dimension: self.dimension,
            })?;
        Ok(self.value / scale)
    }

    /// Infallible shorthands for the common output units. They panic only on
    /// a dimension bug in the caller.
    pub fn mhz(&self) -> f64 {
        self.value_in(Unit::MHz).expect("quantity is not an energy or frequency")
    }

    pub fn khz(&self) -> f64 {
        self.value_in(Unit::KHz).expect("quantity is not an energy or frequency")
    }

    pub fn nm(&self) -> f64 {
        self.value_in(Unit::Nanometer).expect("quantity is not a length")
    }

    pub fn debye(&self) -> f64 {
        self.value_in(Unit::Debye).expect("quantity is not a dipole")
    }

    fn same_dim(self, other: Self) -> Self {
        assert_eq!(
            self.dimension, other.dimension,
            "arithmetic between {} and {}",
            self.dimension, other.dimension
        );
        other
    }
}

impl std::ops::Add for Quantity {
    type Output = Quantity;
    fn add(self, rhs: Self) -> Self {
        self.same_dim(rhs);
        Self::atomic(self.value + rhs.value, self.dimension)
    }
}

impl std::ops::Sub for Quantity {
    type Output = Quantity;
    fn sub(self, rhs: Self) -> Self {
        self.same_dim(rhs);
        Self::atomic(self.value - rhs.value, self.dimension)
    }
}

impl std::ops::Mul<f64> for Quantity {
    type Output = Quantity;
    fn mul(self, rhs: f64) -> Self {
        Self::atomic(self.value * rhs, self.dimension)
    }
}

/// A value tagged with the unit it is expressed in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub unit: Unit,
    pub dimension: Dimension,
}

/// Re-expresses `q` in `target`. The result still carries `q`'s dimension and
/// converts back with [`Measured::to_quantity`].
pub fn convert(q: Quantity, target: Unit) -> Result<Measured> {
    Ok(Measured {
        value: q.value_in(target)?,
        unit: target,
        dimension: q.dimension,
    })
}

impl Measured {
    pub fn to_quantity(&self) -> Result<Quantity> {
        Quantity::new(self.value, self.unit, self.dimension)
    }
}
