//! N molecules coupled to a Rydberg superatom through the atom's `ns` state
//! and the two rotor states `|↓⟩ = |0,0⟩`, `|↑⟩ = |1,0⟩`.
//!
//! The superatom's single excitation is shared by atoms at positions `x_j`
//! with weights `w_j`, so molecule i sees the averaged flip element
//! `V̄_i = Σ_j w_j V(ρ, X_i − x_j)`. The collective Hamiltonian is then
//!
//! ```text
//! H = Σ_i E_rot |↑_i⟩⟨↑_i| + Σ_i V̄_i σ_x^(i)
//! ```
//!
//! on 2^N configurations.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use std::collections::HashMap;
use std::sync::Arc;

use crate::coupling::{AtomState, PairGeometry, PairModel, ProductBasis};
use crate::error::{Error, Result};
use crate::rotor::{MoleculeSpec, RotorState};
use crate::rydberg::WavefunctionCache;
use crate::units::Quantity;

/// Largest N accepted by the dense 2^N solver.
pub const MAX_DENSE_N: usize = 14;

/// How the trap distribution is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TrapQuadrature {
    /// Gauss–Hermite nodes of `exp(−t²)`, `x = a t`.
    GaussHermite { nodes: usize },
    /// Gauss–Legendre panels of width `L / panels_per_period` with
    /// boundaries on the molecular lattice, covering `±span·a`.
    CompositeLegendre { panels_per_period: usize, order: usize, span: f64 },
}

impl Default for TrapQuadrature {
    fn default() -> Self {
        TrapQuadrature::CompositeLegendre {
            panels_per_period: 20,
            order: 8,
            span: 6.0,
        }
    }
}

impl TrapQuadrature {
    /// The same rule with twice as many nodes.
    pub fn doubled(self) -> Self {
        match self {
            TrapQuadrature::GaussHermite { nodes } => TrapQuadrature::GaussHermite { nodes: 2 * nodes },
            TrapQuadrature::CompositeLegendre {
                panels_per_period,
                order,
                span,
            } => TrapQuadrature::CompositeLegendre {
                panels_per_period: 2 * panels_per_period,
                order,
                span,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LayoutMode {
    /// N + 2 atoms on the molecular lattice, one extra per side.
    Lattice,
    /// Excitation spread as `exp(−x²/a²)/(a√π)` about the array center.
    Trap { width_bohr: f64, quadrature: TrapQuadrature },
    /// Molecules on a ring around a central superatom.
    Ring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayLayout {
    pub mode: LayoutMode,
    /// Molecule X coordinates, bohr.
    pub molecule_positions: Vec<f64>,
    /// Atom (X coordinate in bohr, weight) pairs.
    pub atom_weights: Vec<(f64, f64)>,
}

fn centered(count: usize, spacing: f64) -> Vec<f64> {
    let mid = (count as f64 - 1.0) / 2.0;
    (0..count).map(|i| (i as f64 - mid) * spacing).collect()
}

impl ArrayLayout {
    pub fn lattice(n: usize, spacing: Quantity) -> Result<Self> {
        check_n(n)?;
        let l = spacing.au();
        if !(l > 0.0) {
            return Err(Error::InvalidInput("lattice period must be positive".into()));
        }
        let n_a = n + 2;
        Ok(Self {
            mode: LayoutMode::Lattice,
            molecule_positions: centered(n, l),
            atom_weights: centered(n_a, l).into_iter().map(|x| (x, 1.0 / n_a as f64)).collect(),
        })
    }

    pub fn trap(n: usize, spacing: Quantity, width: Quantity, quadrature: TrapQuadrature) -> Result<Self> {
        check_n(n)?;
        let (l, a) = (spacing.au(), width.au());
        if !(a > 0.0) || !(l > 0.0) {
            return Err(Error::InvalidInput("trap width and period must be positive".into()));
        }
        let molecule_positions = centered(n, l);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let atom_weights = match quadrature {
            TrapQuadrature::GaussHermite { nodes } => {
                if nodes < 2 {
                    return Err(Error::InvalidInput("trap quadrature needs at least 2 nodes".into()));
                }
                gauss_hermite(nodes).into_iter().map(|(t, w)| (a * t, w / sqrt_pi)).collect()
            }
            TrapQuadrature::CompositeLegendre {
                panels_per_period,
                order,
                span,
            } => {
                if panels_per_period == 0 || order < 2 || !(span > 0.0) {
                    return Err(Error::InvalidInput("invalid composite trap quadrature".into()));
                }
                let h = l / panels_per_period as f64;
                let origin = molecule_positions[0];
                let k_lo = ((-span * a - origin) / h).floor() as i64;
                let k_hi = ((span * a - origin) / h).ceil() as i64;
                let rule = gauss_legendre(order);
                let mut w = Vec::with_capacity((k_hi - k_lo) as usize * order);
                for k in k_lo..k_hi {
                    let left = origin + k as f64 * h;
                    for &(t, wt) in &rule {
                        let x = left + 0.5 * h * (t + 1.0);
                        let p = (-(x / a).powi(2)).exp() / (a * sqrt_pi);
                        w.push((x, 0.5 * h * wt * p));
                    }
                }
                w
            }
        };
        Ok(Self {
            mode: LayoutMode::Trap { width_bohr: a, quadrature },
            molecule_positions,
            atom_weights,
        })
    }

    /// Every molecule at the same distance from a point-like superatom.
    pub fn ring(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(Self {
            mode: LayoutMode::Ring,
            molecule_positions: vec![0.0; n],
            atom_weights: vec![(0.0, 1.0)],
        })
    }

    pub fn n(&self) -> usize {
        self.molecule_positions.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.atom_weights.iter().map(|w| w.1).sum()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one molecule".into()));
    }
    Ok(())
}

/// Nodes and weights from the symmetric Jacobi matrix with off-diagonals
/// `off[k]` (Golub–Welsch); `mu0` is the total weight.
fn golub_welsch(off: &[f64], mu0: f64) -> Vec<(f64, f64)> {
    let n = off.len() + 1;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for (k, &b) in off.iter().enumerate() {
        jacobi[(k, k + 1)] = b;
        jacobi[(k + 1, k)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    // both weight functions here are even
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (rule[j].0 - rule[i].0);
        let w = 0.5 * (rule[i].1 + rule[j].1);
        rule[i] = (-x, w);
        rule[j] = (x, w);
    }
    if n % 2 == 1 {
        rule[n / 2].0 = 0.0;
    }
    rule
}

/// Gauss–Hermite rule for weight `exp(−t²)`.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    golub_welsch(&off, std::f64::consts::PI.sqrt())
}

/// Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    golub_welsch(&off, 2.0)
}

/// Pair model restricted to the `ns` level and rotor states with J ≤ 1.
pub fn minimal_model(n: u32, molecule: MoleculeSpec, cache: Arc<WavefunctionCache>) -> Result<PairModel> {
    PairModel::new(ProductBasis::new(&[(n, 0)], 1)?, molecule, cache)
}

/// `⟨ns, ↓| V |ns, ↑⟩` with the molecule at (ρ, Δx) from one atom.
/// `model` must hold the `ns` level first and rotor states up to J = 1.
pub fn flip_element(model: &PairModel, geom: &PairGeometry) -> Result<f64> {
    let (n, l) = model.basis.reference_level();
    let s = AtomState { n, l, m: 0 };
    let down = model.basis.index(s, RotorState::DOWN);
    let up = model.basis.index(s, RotorState::UP);
    let (Some(i), Some(j)) = (down, up) else {
        return Err(Error::InvalidInput("pair model lacks the two-level rotor states".into()));
    };
    Ok(model.interaction(geom)?[(i, j)])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveCouplings {
    /// `V̄_i` in hartree.
    pub v_bar: Vec<f64>,
}

impl EffectiveCouplings {
    pub fn max_abs(&self) -> f64 {
        self.v_bar.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// `V̄_i = Σ_j w_j V(ρ, X_i − x_j)` for every molecule. Pair elements are
/// even in Δx and shared between molecules, so they are computed once per
/// distinct |Δx|.
pub fn effective_couplings(layout: &ArrayLayout, model: &PairModel, rho: Quantity) -> Result<EffectiveCouplings> {
    let key = |dx: f64| (dx.abs() * 1e6).round() as i64;
    let mut offsets: Vec<(i64, f64)> = layout
        .molecule_positions
        .iter()
        .flat_map(|&xi| layout.atom_weights.iter().map(move |&(xj, _)| (key(xi - xj), (xi - xj).abs())))
        .collect();
    offsets.sort_by_key(|o| o.0);
    offsets.dedup_by_key(|o| o.0);
    let values = offsets
        .par_iter()
        .map(|&(k, dx)| {
            let geom = PairGeometry::new(rho, Quantity::length_bohr(dx))?;
            Ok((k, flip_element(model, &geom)?))
        })
        .collect::<Result<HashMap<i64, f64>>>()?;
    let v_bar = layout
        .molecule_positions
        .iter()
        .map(|&xi| layout.atom_weights.iter().map(|&(xj, w)| w * values[&key(xi - xj)]).sum())
        .collect();
    Ok(EffectiveCouplings { v_bar })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Diag,
    Pt,
    Separable,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Diag => "diag",
            Method::Pt => "pt",
            Method::Separable => "separable",
        }
    }
}

/// Bit i of `bits` set means molecule i is in `|↑⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfigShift {
    pub bits: u32,
    pub k: u32,
    /// Shift from `k·E_rot`, hartree.
    pub shift: f64,
}

impl ConfigShift {
    /// Arrows for molecules 0..n, left to right.
    pub fn arrows(&self, n: usize) -> String {
        (0..n).map(|i| if self.bits >> i & 1 == 1 { '↑' } else { '↓' }).collect()
    }

    /// `0`/`1` string for molecules 0..n, left to right.
    pub fn bit_string(&self, n: usize) -> String {
        (0..n).map(|i| if self.bits >> i & 1 == 1 { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupSummary {
    pub k: u32,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectiveShiftTable {
    pub n: usize,
    pub method: Method,
    /// Indexed by configuration bits.
    pub configs: Vec<ConfigShift>,
}

impl CollectiveShiftTable {
    pub fn groups(&self) -> Vec<GroupSummary> {
        (0..=self.n as u32)
            .map(|k| {
                let v: Vec<f64> = self.configs.iter().filter(|c| c.k == k).map(|c| c.shift).collect();
                GroupSummary {
                    k,
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    mean: v.iter().sum::<f64>() / v.len() as f64,
                }
            })
            .collect()
    }

    /// Mean shift of group k+1 minus that of group k, for k = 0..N−1.
    pub fn group_spacings(&self) -> Vec<f64> {
        self.groups().windows(2).map(|w| w[1].mean - w[0].mean).collect()
    }

    /// Largest max − min within any group.
    pub fn max_group_spread(&self) -> f64 {
        self.groups().iter().map(|g| g.max - g.min).fold(0.0, f64::max)
    }
}

fn popcount(bits: usize) -> u32 {
    bits.count_ones()
}

/// Exact diagonalization of the 2^N Hamiltonian. Each configuration is
/// labeled with an eigenvalue by the same overlap rule as single pairs:
/// near-degenerate eigenvalues are pooled and handed out greedily in
/// descending overlap.
pub fn collective_shifts_diag(couplings: &EffectiveCouplings, e_rot: Quantity) -> Result<CollectiveShiftTable> {
    let n = couplings.v_bar.len();
    if n > MAX_DENSE_N {
        return Err(Error::DimensionCap { n, max: MAX_DENSE_N });
    }
    let dim = 1usize << n;
    let e = e_rot.au();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for c in 0..dim {
        h[(c, c)] = popcount(c) as f64 * e;
        for (i, &v) in couplings.v_bar.iter().enumerate() {
            h[(c, c ^ (1 << i))] = v;
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let scale = e.abs().max(couplings.max_abs()) * n.max(1) as f64;
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &k in &order {
        match clusters.last_mut() {
            Some(c) if (eig.eigenvalues[k] - eig.eigenvalues[*c.last().unwrap()]).abs() <= tol => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }
    let mut candidates = Vec::new();
    for c in 0..dim {
        for (ci, members) in clusters.iter().enumerate() {
            let w: f64 = members.iter().map(|&k| eig.eigenvectors[(c, k)].powi(2)).sum();
            if w > 1e-9 {
                candidates.push((w, c, ci));
            }
        }
    }
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut capacity: Vec<usize> = clusters.iter().map(Vec::len).collect();
    let mut assigned: Vec<Option<usize>> = vec![None; dim];
    for (_, c, ci) in candidates {
        if assigned[c].is_none() && capacity[ci] > 0 {
            assigned[c] = Some(ci);
            capacity[ci] -= 1;
        }
    }
    let configs = (0..dim)
        .map(|c| {
            let ci = assigned[c].ok_or_else(|| Error::AmbiguousLabel {
                state: format!("configuration {c:0n$b}"),
                overlap: 0.0,
            })?;
            let best = clusters[ci]
                .iter()
                .copied()
                .max_by(|&x, &y| eig.eigenvectors[(c, x)].abs().total_cmp(&eig.eigenvectors[(c, y)].abs()))
                .expect("clusters are nonempty");
            let k = popcount(c);
            let w = eig.eigenvectors.column(best);
            // w·(H − kE)w keeps full relative precision when the shift is far
            // below the eigensolver's absolute error ε·E_rot
            let mut shift = 0.0;
            for a in 0..dim {
                let wa = w[a];
                shift += wa * wa * (popcount(a) as f64 - k as f64) * e;
                for (i, &v) in couplings.v_bar.iter().enumerate() {
                    if a >> i & 1 == 0 {
                        shift += 2.0 * wa * w[a | 1 << i] * v;
                    }
                }
            }
            Ok(ConfigShift { bits: c as u32, k, shift })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CollectiveShiftTable {
        n,
        method: Method::Diag,
        configs,
    })
}

/// Per-molecule eigenvalues of `[[0, V], [V, E]]`: (lower, upper).
fn two_level(v: f64, e: f64) -> (f64, f64) {
    let half = 0.5 * e;
    let root = half.hypot(v);
    // lower root without cancellation
    let lower = if half >= 0.0 { -v * v / (half + root) } else { half - root };
    (lower, e - lower)
}

/// The same spectrum as [`collective_shifts_diag`] from per-molecule 2×2
/// blocks; configuration `c` takes the lower root for ↓ and the upper for ↑.
pub fn collective_shifts_separable(couplings: &EffectiveCouplings, e_rot: Quantity) -> Result<CollectiveShiftTable> {
    let n = couplings.v_bar.len();
    if n > 31 {
        return Err(Error::DimensionCap { n, max: 31 });
    }
    let e = e_rot.au();
    let roots: Vec<(f64, f64)> = couplings.v_bar.iter().map(|&v| two_level(v, e)).collect();
    let configs = (0..1usize << n)
        .map(|c| {
            let shift = roots
                .iter()
                .enumerate()
                .map(|(i, &(lo, hi))| if c >> i & 1 == 1 { hi - e } else { lo })
                .sum();
            ConfigShift {
                bits: c as u32,
                k: popcount(c),
                shift,
            }
        })
        .collect();
    Ok(CollectiveShiftTable {
        n,
        method: Method::Separable,
        configs,
    })
}

/// Second-order shifts `−Σ_{i↓} V̄_i²/E_rot + Σ_{i↑} V̄_i²/E_rot`.
pub fn collective_shifts_pt(couplings: &EffectiveCouplings, e_rot: Quantity) -> Result<CollectiveShiftTable> {
    let n = couplings.v_bar.len();
    if n > 31 {
        return Err(Error::DimensionCap { n, max: 31 });
    }
    let e = e_rot.au();
    if couplings.max_abs() > 0.2 * e.abs() {
        warn!(
            "perturbative collective shifts used with max|V|/E_rot = {:.3}",
            couplings.max_abs() / e.abs()
        );
    }
    let sq: Vec<f64> = couplings.v_bar.iter().map(|v| v * v / e).collect();
    let configs = (0..1usize << n)
        .map(|c| ConfigShift {
            bits: c as u32,
            k: popcount(c),
            shift: sq.iter().enumerate().map(|(i, s)| if c >> i & 1 == 1 { *s } else { -*s }).sum(),
        })
        .collect();
    Ok(CollectiveShiftTable { n, method: Method::Pt, configs })
}

/// Ring closed form `−(N − 2k)|Ṽ|²/E_rot`.
pub fn ring_shifts(n: u32, k: u32, v_tilde: Quantity, e_rot: Quantity) -> Result<Quantity> {
    if k > n {
        return Err(Error::InvalidInput(format!("k={k} exceeds N={n}")));
    }
    let v = v_tilde.au();
    Ok(Quantity::energy_hartree(-(n as f64 - 2.0 * k as f64) * v * v / e_rot.au()))
}

/// Collective tables for a list of ρ values, computed in parallel.
pub fn collective_scan(
    layout: &ArrayLayout,
    model: &PairModel,
    rho_nm: &[f64],
    methods: &[Method],
) -> Result<Vec<(f64, EffectiveCouplings, Vec<CollectiveShiftTable>)>> {
    let e_rot = model.molecule.e_rot();
    rho_nm
        .par_iter()
        .map(|&rho| {
            let c = effective_couplings(layout, model, Quantity::length_nm(rho))?;
            let tables = methods
                .iter()
                .map(|m| match m {
                    Method::Diag => collective_shifts_diag(&c, e_rot),
                    Method::Pt => collective_shifts_pt(&c, e_rot),
                    Method::Separable => collective_shifts_separable(&c, e_rot),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((rho, c, tables))
        })
        .collect()
}

/// Rydberg C6 coefficient as `C6/h` in Hz·μm⁶.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C6(pub f64);

/// `R_b = (C6/ħΩ)^{1/6}` with Ω given as a frequency.
pub fn blockade_radius(c6: C6, rabi: Quantity) -> Result<Quantity> {
    let omega_hz = rabi.value_in(crate::units::Unit::Hz)?;
    if !(c6.0 > 0.0) || !(omega_hz > 0.0) {
        return Err(Error::InvalidInput("C6 and the Rabi frequency must be positive".into()));
    }
    Ok(Quantity::length_um((c6.0 / omega_hz).powf(1.0 / 6.0)))
}

/// C6 that gives blockade radius `r_b` at Rabi frequency `rabi`.
pub fn implied_c6(rabi: Quantity, r_b: Quantity) -> Result<C6> {
    let omega_hz = rabi.value_in(crate::units::Unit::Hz)?;
    let r_um = r_b.value_in(crate::units::Unit::Micrometer)?;
    Ok(C6(omega_hz * r_um.powi(6)))
}

/// Direct molecule–molecule scale `d²/L³` as a frequency.
pub fn dipole_dipole_estimate(d: Quantity, spacing: Quantity) -> Result<Quantity> {
    let (d, l) = (d.au(), spacing.au());
    if !(d > 0.0) || !(l > 0.0) {
        return Err(Error::InvalidInput("dipole and spacing must be positive".into()));
    }
    Ok(Quantity::atomic(d * d / l.powi(3), crate::units::Dimension::Frequency))
}

/// Default trap widths (μm) for the built-in KRb / RbYb examples.
pub fn default_trap_width_um(molecule: &str, n: usize) -> Option<f64> {
    match (molecule.to_ascii_lowercase().as_str(), n) {
        ("krb", 3) => Some(1.3),
        ("krb", 5) => Some(2.5),
        ("rbyb", 3) => Some(1.7),
        ("rbyb", 5) => Some(3.0),
        _ => None,
    }
}
