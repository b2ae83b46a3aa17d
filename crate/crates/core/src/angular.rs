//! Wigner 3j symbols, integrals of three spherical harmonics and Wigner
//! small-d rotation matrices.
//!
//! Spherical harmonics follow the Condon–Shortley phase convention, so
//! `Y_l^{m*} = (-1)^m Y_l^{-m}`. That identity is applied in exactly one
//! place, [`harmonic_bracket`]; everything that needs `⟨l m|Y_L^M|l' m'⟩`
//! goes through it.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const LN_FACTORIAL_MAX: usize = 200;

fn ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_MAX + 1);
        t.push(0.0);
        for k in 1..=LN_FACTORIAL_MAX {
            t.push(t[k - 1] + (k as f64).ln());
        }
        t
    })
}

#[inline]
fn ln_fact(k: i32) -> f64 {
    debug_assert!(k >= 0);
    ln_factorials()[k as usize]
}

#[inline]
fn parity_sign(k: i32) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Wigner 3j symbol for integer angular momenta, by the Racah sum.
///
/// Returns 0 whenever a selection rule fails (triangle, Σm = 0, |m_i| ≤ l_i,
/// negative l).
pub fn wigner3j(l1: i32, l2: i32, l3: i32, m1: i32, m2: i32, m3: i32) -> f64 {
    if l1 < 0 || l2 < 0 || l3 < 0 {
        return 0.0;
    }
    if m1 + m2 + m3 != 0 || m1.abs() > l1 || m2.abs() > l2 || m3.abs() > l3 {
        return 0.0;
    }
    if l3 < (l1 - l2).abs() || l3 > l1 + l2 {
        return 0.0;
    }
    // (l1 l2 l3; 0 0 0) vanishes for odd l1 + l2 + l3
    if m1 == 0 && m2 == 0 && m3 == 0 && (l1 + l2 + l3) % 2 == 1 {
        return 0.0;
    }
    assert!(
        (l1 + l2 + l3 + 1) as usize <= LN_FACTORIAL_MAX,
        "angular momenta too large for the factorial table"
    );

    let ln_delta = ln_fact(l1 + l2 - l3) + ln_fact(l1 - l2 + l3) + ln_fact(-l1 + l2 + l3)
        - ln_fact(l1 + l2 + l3 + 1);
    let ln_m = ln_fact(l1 + m1)
        + ln_fact(l1 - m1)
        + ln_fact(l2 + m2)
        + ln_fact(l2 - m2)
        + ln_fact(l3 + m3)
        + ln_fact(l3 - m3);
    let ln_pref = 0.5 * (ln_delta + ln_m);

    let k_min = 0.max(l2 - l3 - m1).max(l1 - l3 + m2);
    let k_max = (l1 + l2 - l3).min(l1 - m1).min(l2 + m2);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let ln_den = ln_fact(k)
            + ln_fact(l3 - l2 + k + m1)
            + ln_fact(l3 - l1 + k - m2)
            + ln_fact(l1 + l2 - l3 - k)
            + ln_fact(l1 - k - m1)
            + ln_fact(l2 - k + m2);
        sum += parity_sign(k) * (ln_pref - ln_den).exp();
    }
    parity_sign(l1 - l2 - m3) * sum
}

/// `∫ Y_{l1}^{m1} Y_{l2}^{m2} Y_{l3}^{m3} dΩ` (no conjugation on any factor).
pub fn triple_harmonic_integral(l1: i32, m1: i32, l2: i32, m2: i32, l3: i32, m3: i32) -> f64 {
    if m1 + m2 + m3 != 0 {
        return 0.0;
    }
    let w0 = wigner3j(l1, l2, l3, 0, 0, 0);
    if w0 == 0.0 {
        return 0.0;
    }
    let norm = (((2 * l1 + 1) * (2 * l2 + 1) * (2 * l3 + 1)) as f64 / (4.0 * PI)).sqrt();
    norm * w0 * wigner3j(l1, l2, l3, m1, m2, m3)
}

/// `⟨l m| Y_L^M |l' m'⟩ = ∫ Y_l^{m*} Y_L^M Y_{l'}^{m'} dΩ`.
pub fn harmonic_bracket(l: i32, m: i32, big_l: i32, big_m: i32, lp: i32, mp: i32) -> f64 {
    parity_sign(m) * triple_harmonic_integral(l, -m, big_l, big_m, lp, mp)
}

/// Wigner small-d element `d^j_{m'm}(β) = ⟨j m'| exp(-iβ J_y) |j m⟩`.
pub fn wigner_small_d(j: i32, mp: i32, m: i32, beta: f64) -> f64 {
    if mp.abs() > j || m.abs() > j {
        return 0.0;
    }
    let (s, c) = (0.5 * beta).sin_cos();
    let ln_pref = 0.5 * (ln_fact(j + mp) + ln_fact(j - mp) + ln_fact(j + m) + ln_fact(j - m));
    let k_min = 0.max(m - mp);
    let k_max = (j + m).min(j - mp);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let ln_den =
            ln_fact(j + m - k) + ln_fact(k) + ln_fact(j - k - mp) + ln_fact(k - m + mp);
        let cos_pow = 2 * j - 2 * k + m - mp;
        let sin_pow = 2 * k - m + mp;
        sum += parity_sign(k - m + mp)
            * (ln_pref - ln_den).exp()
            * c.powi(cos_pow)
            * s.powi(sin_pow);
    }
    sum
}

/// Index of magnetic quantum number `m` in a (2j+1) block ordered m = j, j-1, …, -j.
#[inline]
pub fn m_index(j: i32, m: i32) -> usize {
    (j - m) as usize
}

/// Expansion coefficients of lab-frame states `|J, m⟩` over states
/// `|J, m'⟩` quantized along an axis tilted by `beta` about Y.
///
/// Rows are indexed by the lab m, columns by the rotated m', both in
/// descending order (m = J … -J). The element is `d^J_{m m'}(β)`, which for
/// J = 1 reproduces
///
/// ```text
/// |1, 0⟩  =  sinβ/√2 |1,1'⟩ + cosβ |1,0'⟩ − sinβ/√2 |1,-1'⟩
/// |1,-1⟩  = (1−cosβ)/2 |1,1'⟩ + sinβ/√2 |1,0'⟩ + (1+cosβ)/2 |1,-1'⟩
/// |1, 1⟩  = (1+cosβ)/2 |1,1'⟩ − sinβ/√2 |1,0'⟩ + (1−cosβ)/2 |1,-1'⟩
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    pub j: i32,
    pub beta: f64,
    pub matrix: DMatrix<f64>,
}

impl RotationMatrix {
    /// Coefficient of `|J, m_rot⟩` in `|J, m_lab⟩`.
    pub fn coefficient(&self, m_lab: i32, m_rot: i32) -> f64 {
        self.matrix[(m_index(self.j, m_lab), m_index(self.j, m_rot))]
    }
}

/// Largest J accepted by [`rotate_rotor_basis`].
pub const MAX_ROTATION_J: u32 = 3;

/// Rotation of rotor states with α = γ = 0 (see [`RotationMatrix`]).
pub fn rotate_rotor_basis(j: u32, beta: f64) -> Result<RotationMatrix> {
    if j > MAX_ROTATION_J {
        return Err(Error::UnsupportedJ(j));
    }
    Ok(rotation_matrix(j as i32, beta))
}

/// Same as [`rotate_rotor_basis`] without the J cap; used for atomic l.
pub(crate) fn rotation_matrix(j: i32, beta: f64) -> RotationMatrix {
    let dim = (2 * j + 1) as usize;
    let matrix = if j == 1 {
        let (s, c) = beta.sin_cos();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        DMatrix::from_row_slice(
            3,
            3,
            &[
                0.5 * (1.0 + c), -r * s, 0.5 * (1.0 - c),
                r * s, c, -r * s,
                0.5 * (1.0 - c), r * s, 0.5 * (1.0 + c),
            ],
        )
    } else {
        DMatrix::from_fn(dim, dim, |row, col| {
            let m = j - row as i32;
            let mp = j - col as i32;
            wigner_small_d(j, m, mp, beta)
        })
    };
    RotationMatrix { j, beta, matrix }
}
