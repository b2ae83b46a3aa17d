//! Single Rydberg atom + polar molecule: product basis, Hamiltonian
//! assembly, diagonalization with state labeling, and shift scans.
//!
//! The charge–dipole interaction is evaluated in a frame whose z axis points
//! along the atom–molecule separation R. There it splits into
//!
//! ```text
//! V = d_z F_z + d_+ F_+ / √2 − d_- F_- / √2
//! ```
//!
//! where the F's act on the electron only:
//!
//! ```text
//! F_z = 1/R² + Σ_L √(4π/(2L+1)) [ −(L+1) R^{−L−2} I_in(L) + L R^{L−1} I_out(L) ] Y_L^0
//! F_± = ∓ (1/R) Σ_L √(4π L(L+1)/(2L+1)) [ R^{−L−1} I_in(L) + R^L I_out(L) ] Y_L^{±1}
//! ```
//!
//! with `I_in = ∫_0^R r^L u u' dr` and `I_out = ∫_R^∞ r^{−L−1} u u' dr`. The
//! `1/R²` term is the ion core. When the molecule is displaced along the
//! array axis (Δx ≠ 0) every atom and rotor state is re-expanded about the
//! tilted axis before the interaction is applied.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angular::{harmonic_bracket, rotation_matrix};
use crate::error::{Error, Result};
use crate::rotor::{dipole_element, rotor_states, Component, MoleculeSpec, RotorState};
use crate::rydberg::{RadialPair, WavefunctionCache};
use crate::units::Quantity;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomState {
    pub n: u32,
    pub l: u32,
    pub m: i32,
}

impl fmt::Display for AtomState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const L: [char; 7] = ['s', 'p', 'd', 'f', 'g', 'h', 'i'];
        match L.get(self.l as usize) {
            Some(c) => write!(f, "{}{}(m={})", self.n, c, self.m),
            None => write!(f, "n={},l={}(m={})", self.n, self.l, self.m),
        }
    }
}

/// Atomic levels kept around the `ns` state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomPreset {
    /// ns, np, (n−1)p, (n−1)d, (n−2)d, (n−3)f
    Full,
    /// `Full` without the f level
    NoF,
    /// ns, np, (n−1)p, (n−2)d
    Reduced,
    /// ns only
    Minimal,
}

impl AtomPreset {
    pub const ALL: [AtomPreset; 4] = [AtomPreset::Full, AtomPreset::NoF, AtomPreset::Reduced, AtomPreset::Minimal];

    pub fn levels(self, n: u32) -> Result<Vec<(u32, u32)>> {
        if n < 5 {
            return Err(Error::InvalidInput(format!("principal quantum number {n} too small for a preset")));
        }
        Ok(match self {
            AtomPreset::Full => vec![(n, 0), (n, 1), (n - 1, 1), (n - 1, 2), (n - 2, 2), (n - 3, 3)],
            AtomPreset::NoF => vec![(n, 0), (n, 1), (n - 1, 1), (n - 1, 2), (n - 2, 2)],
            AtomPreset::Reduced => vec![(n, 0), (n, 1), (n - 1, 1), (n - 2, 2)],
            AtomPreset::Minimal => vec![(n, 0)],
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            AtomPreset::Full => "full",
            AtomPreset::NoF => "no-f",
            AtomPreset::Reduced => "reduced",
            AtomPreset::Minimal => "minimal",
        }
    }
}

impl std::str::FromStr for AtomPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        AtomPreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown atom basis preset {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RotorPreset {
    #[serde(rename = "j2")]
    UpToJ2,
    #[serde(rename = "j3")]
    UpToJ3,
}

impl RotorPreset {
    pub fn j_max(self) -> u32 {
        match self {
            RotorPreset::UpToJ2 => 2,
            RotorPreset::UpToJ3 => 3,
        }
    }
}

impl std::str::FromStr for RotorPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "j2" | "2" => Ok(RotorPreset::UpToJ2),
            "j3" | "3" => Ok(RotorPreset::UpToJ3),
            _ => Err(Error::InvalidInput(format!("unknown rotor preset {s:?}"))),
        }
    }
}

/// Atom ⊗ rotor states. Index = atom_index · n_rotor + rotor_index.
/// Atom states run over the levels in the given order, m descending within
/// each level; rotor states run J ascending, m_J descending.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductBasis {
    pub levels: Vec<(u32, u32)>,
    pub atom_states: Vec<AtomState>,
    pub rotor_states: Vec<RotorState>,
    atom_level: Vec<usize>,
    lookup: HashMap<(AtomState, RotorState), usize>,
}

impl ProductBasis {
    pub fn new(levels: &[(u32, u32)], j_max: u32) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidInput("empty atomic basis".into()));
        }
        let mut atom_states = Vec::new();
        let mut atom_level = Vec::new();
        for (k, &(n, l)) in levels.iter().enumerate() {
            if l >= n {
                return Err(Error::InvalidInput(format!("invalid level n={n}, l={l}")));
            }
            if levels[..k].contains(&(n, l)) {
                return Err(Error::InvalidInput(format!("duplicate level n={n}, l={l}")));
            }
            for m in (-(l as i32)..=l as i32).rev() {
                atom_states.push(AtomState { n, l, m });
                atom_level.push(k);
            }
        }
        let rotor_states = rotor_states(j_max);
        let mut lookup = HashMap::new();
        for (ia, a) in atom_states.iter().enumerate() {
            for (ir, r) in rotor_states.iter().enumerate() {
                lookup.insert((*a, *r), ia * rotor_states.len() + ir);
            }
        }
        Ok(Self {
            levels: levels.to_vec(),
            atom_states,
            rotor_states,
            atom_level,
            lookup,
        })
    }

    pub fn from_presets(n: u32, atom: AtomPreset, rotor: RotorPreset) -> Result<Self> {
        Self::new(&atom.levels(n)?, rotor.j_max())
    }

    pub fn dim(&self) -> usize {
        self.atom_states.len() * self.rotor_states.len()
    }

    pub fn index(&self, atom: AtomState, rotor: RotorState) -> Option<usize> {
        self.lookup.get(&(atom, rotor)).copied()
    }

    pub fn state(&self, i: usize) -> (AtomState, RotorState) {
        let nr = self.rotor_states.len();
        (self.atom_states[i / nr], self.rotor_states[i % nr])
    }

    /// The `ns` level, which is the first in the list.
    pub fn reference_level(&self) -> (u32, u32) {
        self.levels[0]
    }

    /// `ns(m=0)` with `|0,0⟩, |1,0⟩, |1,+1⟩, |1,−1⟩`, if all are present.
    pub fn tracked_states(&self) -> Vec<(AtomState, RotorState)> {
        let (n, l) = self.reference_level();
        let a = AtomState { n, l, m: 0 };
        TRACKED_ROTOR
            .iter()
            .map(|r| (a, *r))
            .filter(|s| self.lookup.contains_key(s))
            .collect()
    }
}

/// Rotor states whose shifts are reported, in output-column order.
pub const TRACKED_ROTOR: [RotorState; 4] = [
    RotorState { j: 0, m: 0 },
    RotorState { j: 1, m: 0 },
    RotorState { j: 1, m: 1 },
    RotorState { j: 1, m: -1 },
];

/// Molecule position relative to the atom: `rho` off the array axis and
/// `delta_x` along it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub rho: Quantity,
    pub delta_x: Quantity,
    pub r: Quantity,
    /// `−arcsin(Δx / R)`
    pub beta: f64,
}

impl PairGeometry {
    pub fn new(rho: Quantity, delta_x: Quantity) -> Result<Self> {
        let (p, x) = (rho.au(), delta_x.au());
        if !(p >= 0.0 && p.is_finite() && x.is_finite()) {
            return Err(Error::InvalidInput(format!("bad geometry rho={p}, delta_x={x}")));
        }
        let r = p.hypot(x);
        if r <= 0.0 {
            return Err(Error::InvalidInput("atom and molecule coincide".into()));
        }
        Ok(Self {
            rho,
            delta_x,
            r: Quantity::length_bohr(r),
            beta: -(x / r).asin(),
        })
    }

    pub fn on_axis(rho: Quantity) -> Result<Self> {
        Self::new(rho, Quantity::length_bohr(0.0))
    }
}

/// Split radial integrals for every level pair and multipole at one R.
type RadialTerms = HashMap<(usize, usize, u32), (f64, f64)>;

/// Electron-side operators of the interaction in the separation frame,
/// as matrices over the atomic states.
#[derive(Debug, Clone)]
struct FieldMatrices {
    fz: DMatrix<f64>,
    fp: DMatrix<f64>,
    fm: DMatrix<f64>,
}

/// Everything geometry-independent for one atom + molecule system.
pub struct PairModel {
    pub basis: ProductBasis,
    pub molecule: MoleculeSpec,
    pub cache: Arc<WavefunctionCache>,
    pairs: HashMap<(usize, usize), RadialPair>,
    level_energy: Vec<f64>,
}

impl fmt::Debug for PairModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairModel")
            .field("levels", &self.basis.levels)
            .field("rotor_states", &self.basis.rotor_states.len())
            .field("molecule", &self.molecule.name)
            .finish()
    }
}

fn multipoles(l1: u32, l2: u32) -> impl Iterator<Item = u32> {
    (l1.abs_diff(l2)..=l1 + l2).filter(move |big_l| (l1 + l2 + big_l).is_multiple_of(2))
}

impl PairModel {
    pub fn new(basis: ProductBasis, molecule: MoleculeSpec, cache: Arc<WavefunctionCache>) -> Result<Self> {
        let mut wfs = Vec::with_capacity(basis.levels.len());
        let mut level_energy = Vec::with_capacity(basis.levels.len());
        for &(n, l) in &basis.levels {
            let wf = cache.get(n, l)?;
            level_energy.push(wf.level.energy);
            wfs.push(wf);
        }
        let mut pairs = HashMap::new();
        for i in 0..wfs.len() {
            for j in i..wfs.len() {
                pairs.insert((i, j), RadialPair::new(&wfs[i], &wfs[j]));
            }
        }
        Ok(Self {
            basis,
            molecule,
            cache,
            pairs,
            level_energy,
        })
    }

    /// Unperturbed energy of basis state `i` in hartree.
    pub fn bare_energy(&self, i: usize) -> f64 {
        self.bare_relative(i) + self.reference_energy()
    }

    /// Unperturbed energy of basis state `i` relative to the `ns` level.
    fn bare_relative(&self, i: usize) -> f64 {
        let nr = self.basis.rotor_states.len();
        let level = self.basis.atom_level[i / nr];
        let rotor = self.basis.rotor_states[i % nr];
        (self.level_energy[level] - self.level_energy[0]) + self.molecule.level(rotor.j).au()
    }

    /// Energy of the reference `ns` level in hartree.
    pub fn reference_energy(&self) -> f64 {
        self.level_energy[0]
    }

    fn radial_terms(&self, r: f64) -> Result<RadialTerms> {
        let mut out = HashMap::new();
        for (&(i, j), pair) in &self.pairs {
            let (li, lj) = (self.basis.levels[i].1, self.basis.levels[j].1);
            for big_l in multipoles(li, lj) {
                let ints = pair.integrals(r, big_l)?;
                out.insert((i, j, big_l), (ints.inner, ints.outer));
            }
        }
        Ok(out)
    }

    fn radial(terms: &RadialTerms, i: usize, j: usize, big_l: u32) -> (f64, f64) {
        let key = if i <= j { (i, j, big_l) } else { (j, i, big_l) };
        terms.get(&key).copied().unwrap_or((0.0, 0.0))
    }

    /// `(⟨a|F_z|b⟩, ⟨a|F_+|b⟩, ⟨a|F_-|b⟩)` for atomic states in the separation frame.
    fn field_element(&self, terms: &RadialTerms, r: f64, ia: usize, ib: usize) -> (f64, f64, f64) {
        let a = self.basis.atom_states[ia];
        let b = self.basis.atom_states[ib];
        let (la, lb) = (self.basis.atom_level[ia], self.basis.atom_level[ib]);
        let (l1, l2) = (a.l as i32, b.l as i32);
        let mut fz = if ia == ib { 1.0 / (r * r) } else { 0.0 };
        let mut fp = 0.0;
        let mut fm = 0.0;
        let dm = a.m - b.m;
        if dm.abs() > 1 {
            return (fz, fp, fm);
        }
        for big_l in multipoles(a.l, b.l) {
            let (inner, outer) = Self::radial(terms, la, lb, big_l);
            let lf = big_l as f64;
            let li = big_l as i32;
            match dm {
                0 => {
                    let ang = harmonic_bracket(l1, a.m, li, 0, l2, b.m);
                    if ang != 0.0 {
                        let radial = -(lf + 1.0) * r.powi(-li - 2) * inner + lf * r.powi(li - 1) * outer;
                        fz += (4.0 * PI / (2.0 * lf + 1.0)).sqrt() * radial * ang;
                    }
                }
                _ if big_l >= 1 => {
                    let c = (4.0 * PI * lf * (lf + 1.0) / (2.0 * lf + 1.0)).sqrt();
                    let g = r.powi(-li - 1) * inner + r.powi(li) * outer;
                    if dm == 1 {
                        fp -= c * g * harmonic_bracket(l1, a.m, li, 1, l2, b.m) / r;
                    } else {
                        fm += c * g * harmonic_bracket(l1, a.m, li, -1, l2, b.m) / r;
                    }
                }
                _ => {}
            }
        }
        (fz, fp, fm)
    }

    fn field_matrices(&self, r: f64) -> Result<FieldMatrices> {
        let terms = self.radial_terms(r)?;
        let na = self.basis.atom_states.len();
        let mut fz = DMatrix::zeros(na, na);
        let mut fp = DMatrix::zeros(na, na);
        let mut fm = DMatrix::zeros(na, na);
        for ia in 0..na {
            for ib in 0..na {
                let (z, p, m) = self.field_element(&terms, r, ia, ib);
                fz[(ia, ib)] = z;
                fp[(ia, ib)] = p;
                fm[(ia, ib)] = m;
            }
        }
        Ok(FieldMatrices { fz, fp, fm })
    }

    fn rotor_matrix(&self, c: Component) -> DMatrix<f64> {
        let rs = &self.basis.rotor_states;
        let d = self.molecule.dipole.au();
        DMatrix::from_fn(rs.len(), rs.len(), |i, j| dipole_element(rs[i], rs[j], c, d))
    }

    /// Real interaction matrix in the separation frame.
    fn interaction_rotated_frame(&self, r: f64) -> Result<DMatrix<f64>> {
        let f = self.field_matrices(r)?;
        let dz = self.rotor_matrix(Component::Z);
        let dp = self.rotor_matrix(Component::Plus);
        let dm = self.rotor_matrix(Component::Minus);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ok(f.fz.kronecker(&dz) + f.fp.kronecker(&dp) * s - f.fm.kronecker(&dm) * s)
    }

    /// Lab-to-separation-frame expansion coefficients for the whole basis:
    /// row = lab state, column = rotated state.
    fn frame_rotation(&self, beta: f64) -> DMatrix<f64> {
        let na = self.basis.atom_states.len();
        let mut ua = DMatrix::zeros(na, na);
        let mut start = 0;
        for &(_, l) in &self.basis.levels {
            let block = rotation_matrix(l as i32, beta).matrix;
            let w = block.nrows();
            ua.view_mut((start, start), (w, w)).copy_from(&block);
            start += w;
        }
        let nr = self.basis.rotor_states.len();
        let mut ur = DMatrix::zeros(nr, nr);
        let mut start = 0;
        let j_max = self.basis.rotor_states.last().map_or(0, |s| s.j);
        for j in 0..=j_max {
            let block = rotation_matrix(j as i32, beta).matrix;
            let w = block.nrows();
            ur.view_mut((start, start), (w, w)).copy_from(&block);
            start += w;
        }
        ua.kronecker(&ur)
    }

    /// Ion-core part `d_z/R²` of the interaction between basis states `i`
    /// and `j`, in the separation frame.
    pub fn core_element(&self, i: usize, j: usize, geom: &PairGeometry) -> f64 {
        let (a, ra) = self.basis.state(i);
        let (b, rb) = self.basis.state(j);
        if a != b {
            return 0.0;
        }
        let r = geom.r.au();
        dipole_element(ra, rb, Component::Z, self.molecule.dipole.au()) / (r * r)
    }

    /// Real interaction matrix in the lab frame.
    pub fn interaction(&self, geom: &PairGeometry) -> Result<DMatrix<f64>> {
        let v = self.interaction_rotated_frame(geom.r.au())?;
        if geom.beta == 0.0 {
            return Ok(v);
        }
        let u = self.frame_rotation(geom.beta);
        Ok(&u * v * u.transpose())
    }

    /// `H = diag(E_nl + B J(J+1)) + V`, stored relative to the `ns` energy.
    pub fn assemble(&self, geom: &PairGeometry) -> Result<HamiltonianMatrix> {
        let v = self.interaction(geom)?;
        let offset = self.reference_energy();
        let dim = self.basis.dim();
        let mut h = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                h[(i, j)] = Complex64::new(v[(i, j)], 0.0);
            }
            h[(i, i)] += Complex64::new(self.bare_relative(i), 0.0);
        }
        // symmetrize rounding from the frame rotation
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(HamiltonianMatrix { entries: h, offset })
    }

    /// Unperturbed energy of a tracked state minus the `ns` reference, hartree.
    fn tracked_bare(&self, rotor: RotorState) -> f64 {
        self.molecule.level(rotor.j).au()
    }

    pub fn diagonalize_label(&self, h: &HamiltonianMatrix) -> Result<Vec<LabeledEigenpair>> {
        diagonalize_label(&self.basis, h, |r| self.tracked_bare(r))
    }

    /// Labeled shifts at one geometry.
    pub fn shifts(&self, geom: &PairGeometry) -> Result<Vec<LabeledEigenpair>> {
        self.diagonalize_label(&self.assemble(geom)?)
    }
}

/// Matrix element of the interaction between two product states.
pub fn interaction_element(
    bra: (AtomState, RotorState),
    ket: (AtomState, RotorState),
    geom: &PairGeometry,
    molecule: &MoleculeSpec,
    cache: &WavefunctionCache,
) -> Result<Complex64> {
    // smallest basis holding both levels and rotor states
    let mut levels = vec![(bra.0.n, bra.0.l)];
    if (ket.0.n, ket.0.l) != levels[0] {
        levels.push((ket.0.n, ket.0.l));
    }
    let j_max = bra.1.j.max(ket.1.j);
    let basis = ProductBasis::new(&levels, j_max)?;
    let cache = Arc::new(WavefunctionCache::new(cache.defects, cache.grid));
    let model = PairModel::new(basis, molecule.clone(), cache)?;
    let i = model.basis.index(bra.0, bra.1).ok_or_else(|| Error::InvalidInput(format!("bad state {}", bra.0)))?;
    let j = model.basis.index(ket.0, ket.1).ok_or_else(|| Error::InvalidInput(format!("bad state {}", ket.0)))?;
    Ok(Complex64::new(model.interaction(geom)?[(i, j)], 0.0))
}

/// Dense Hermitian Hamiltonian; `entries = H − offset·1` (hartree).
#[derive(Debug, Clone)]
pub struct HamiltonianMatrix {
    pub entries: DMatrix<Complex64>,
    pub offset: f64,
}

impl HamiltonianMatrix {
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    /// Trace of `entries` (offset not included).
    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    /// Eigenvalues relative to `offset`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(self.entries.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledEigenpair {
    pub atom: AtomState,
    pub rotor: RotorState,
    /// Eigenvalue relative to the `ns` reference energy.
    pub energy: Quantity,
    /// Eigenvalue minus `E_ns + B J(J+1)`.
    pub shift: Quantity,
    pub overlap: f64,
    pub admixture: f64,
}

/// Diagonalizes `h` and assigns each tracked state of `basis` to an
/// eigenvalue. Eigenvalues that agree to ~1e-10 of the matrix scale form
/// a cluster; a tracked state's overlap with a cluster is its total weight
/// in the cluster's eigenvectors, and each cluster takes at most as many
/// labels as it has members. Assignment is greedy in descending overlap.
/// The shift is evaluated as a Rayleigh quotient on the tracked state's
/// projection onto its cluster.
pub fn diagonalize_label(
    basis: &ProductBasis,
    h: &HamiltonianMatrix,
    bare_relative: impl Fn(RotorState) -> f64,
) -> Result<Vec<LabeledEigenpair>> {
    let eig = SymmetricEigen::new(h.entries.clone());
    let dim = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let tol = 1e-10 * h.max_abs().max(f64::MIN_POSITIVE);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &k in &order {
        match clusters.last_mut() {
            Some(c) if (eig.eigenvalues[k] - eig.eigenvalues[*c.last().unwrap()]).abs() <= tol => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }

    let tracked = basis.tracked_states();
    let mut candidates = Vec::new();
    for (t, &(a, r)) in tracked.iter().enumerate() {
        let row = basis.index(a, r).expect("tracked state in basis");
        for (c, members) in clusters.iter().enumerate() {
            let w: f64 = members.iter().map(|&k| eig.eigenvectors[(row, k)].norm_sqr()).sum();
            if w > 1e-6 {
                candidates.push((w, t, c));
            }
        }
    }
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut capacity: Vec<usize> = clusters.iter().map(Vec::len).collect();
    let mut assigned: Vec<Option<(usize, f64)>> = vec![None; tracked.len()];
    for (w, t, c) in candidates {
        if assigned[t].is_none() && capacity[c] > 0 {
            assigned[t] = Some((c, w));
            capacity[c] -= 1;
        }
    }

    let mut out = Vec::with_capacity(tracked.len());
    for (t, &(atom, rotor)) in tracked.iter().enumerate() {
        let (c, overlap) = assigned[t].unwrap_or((0, 0.0));
        if overlap <= 0.5 {
            return Err(Error::AmbiguousLabel {
                state: format!("{atom} {rotor}"),
                overlap,
            });
        }
        // Rayleigh quotient of (H − E_bare) on the tracked state's projection
        // onto its cluster; exact degeneracies then give identical shifts
        let row = basis.index(atom, rotor).expect("tracked state in basis");
        let mut w = DVector::<Complex64>::zeros(dim);
        for &k in &clusters[c] {
            let col = eig.eigenvectors.column(k);
            w.axpy(col[row].conj(), &col, Complex64::new(1.0, 0.0));
        }
        let norm = w.norm();
        w /= Complex64::new(norm, 0.0);
        let e_bare = bare_relative(rotor);
        let mut hw = &h.entries * &w;
        hw.axpy(Complex64::new(-e_bare, 0.0), &w, Complex64::new(1.0, 0.0));
        let shift = w.dotc(&hw).re;
        let e = e_bare + shift;
        out.push(LabeledEigenpair {
            atom,
            rotor,
            energy: Quantity::energy_hartree(e),
            shift: Quantity::energy_hartree(shift),
            overlap,
            admixture: 1.0 - overlap,
        });
    }
    Ok(out)
}

/// Builds the model and Hamiltonian for `basis` at `geom` in one call.
pub fn assemble(
    basis: &ProductBasis,
    geom: &PairGeometry,
    molecule: &MoleculeSpec,
    cache: Arc<WavefunctionCache>,
) -> Result<HamiltonianMatrix> {
    PairModel::new(basis.clone(), molecule.clone(), cache)?.assemble(geom)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftRow {
    pub rho_nm: f64,
    pub delta_x_nm: f64,
    /// MHz, in the order of [`TRACKED_ROTOR`].
    pub shifts_mhz: [f64; 4],
    pub admixture_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftScan {
    pub molecule: String,
    pub atom_preset: AtomPreset,
    pub rotor_preset: RotorPreset,
    pub rows: Vec<ShiftRow>,
}

impl ShiftScan {
    /// `shift(|1,0⟩) − shift(|0,0⟩)` per row, MHz.
    pub fn splitting_mhz(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.shifts_mhz[1] - r.shifts_mhz[0]).collect()
    }
}

/// Evenly spaced values from `start` to `stop` inclusive.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidInput(format!("bad range {start}..{stop} step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| start + k as f64 * step).collect())
}

/// Labeled shifts on a grid of ρ (nm) at fixed Δx.
pub fn shift_scan(model: &PairModel, atom_preset: AtomPreset, rotor_preset: RotorPreset, rho_nm: &[f64], delta_x_nm: f64) -> Result<ShiftScan> {
    let rows = rho_nm
        .par_iter()
        .map(|&rho| {
            let geom = PairGeometry::new(Quantity::length_nm(rho), Quantity::length_nm(delta_x_nm))?;
            let labeled = model.shifts(&geom)?;
            let mut shifts = [f64::NAN; 4];
            let mut adm = 0.0f64;
            for p in &labeled {
                if let Some(k) = TRACKED_ROTOR.iter().position(|r| *r == p.rotor) {
                    shifts[k] = p.shift.mhz();
                }
                adm = adm.max(p.admixture);
            }
            Ok(ShiftRow {
                rho_nm: rho,
                delta_x_nm,
                shifts_mhz: shifts,
                admixture_max: adm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShiftScan {
        molecule: model.molecule.name.clone(),
        atom_preset,
        rotor_preset,
        rows,
    })
}

/// Largest relative deviation `|other − base| / |base|` per tracked state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresetComparison {
    pub base: AtomPreset,
    pub other: AtomPreset,
    pub max_relative: [f64; 4],
    /// Relative deviation per row for each tracked state.
    pub per_row: Vec<[f64; 4]>,
}

pub fn compare_scans(base: &ShiftScan, other: &ShiftScan) -> Result<PresetComparison> {
    if base.rows.len() != other.rows.len() {
        return Err(Error::InvalidInput("scans have different ρ grids".into()));
    }
    let mut per_row = Vec::with_capacity(base.rows.len());
    let mut max_relative = [0.0f64; 4];
    for (a, b) in base.rows.iter().zip(&other.rows) {
        if (a.rho_nm - b.rho_nm).abs() > 1e-9 {
            return Err(Error::InvalidInput("scans have different ρ grids".into()));
        }
        let mut row = [0.0; 4];
        for k in 0..4 {
            row[k] = (b.shifts_mhz[k] - a.shifts_mhz[k]).abs() / a.shifts_mhz[k].abs();
            max_relative[k] = max_relative[k].max(row[k]);
        }
        per_row.push(row);
    }
    Ok(PresetComparison {
        base: base.atom_preset,
        other: other.atom_preset,
        max_relative,
        per_row,
    })
}
