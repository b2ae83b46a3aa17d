//! Quantum-defect Rydberg levels, their radial wavefunctions and the radial
//! integrals entering the charge–dipole matrix elements.
//!
//! The radial equation `u'' = [l(l+1)/r² − 2/r − 2E] u` is solved on a grid
//! uniform in `x = √r`. With `u = √x · w(x)` it becomes
//!
//! ```text
//! w'' = [ (2l + ½)(2l + 3⁄2) / x² − 8 − 8E x² ] w
//! ```
//!
//! which Numerov integrates inward from `r_out = 2n(n+15)`. Inside the inner
//! classical turning point the integration stops as soon as the solution
//! starts growing again, and the wavefunction is set to zero below that
//! point.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{Quantity, REFERENCE};

/// Quantum defects indexed by l; l > 3 has zero defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantumDefects(pub [f64; 4]);

impl QuantumDefects {
    pub fn rubidium() -> Self {
        Self(REFERENCE.rb_defects)
    }

    pub fn hydrogen() -> Self {
        Self([0.0; 4])
    }

    pub fn get(&self, l: u32) -> f64 {
        self.0.get(l as usize).copied().unwrap_or(0.0)
    }
}

impl Default for QuantumDefects {
    fn default() -> Self {
        Self::rubidium()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RydbergLevel {
    pub n: u32,
    pub l: u32,
    pub defect: f64,
    /// Energy in hartree.
    pub energy: f64,
}

impl RydbergLevel {
    pub fn new(n: u32, l: u32, defects: &QuantumDefects) -> Result<Self> {
        if n == 0 || l >= n {
            return Err(Error::InvalidInput(format!("need n > l >= 0, got n={n}, l={l}")));
        }
        let defect = defects.get(l);
        let n_eff = n as f64 - defect;
        if n_eff <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "effective principal number {n_eff} is not positive for n={n}, l={l}"
            )));
        }
        Ok(Self {
            n,
            l,
            defect,
            energy: -0.5 / (n_eff * n_eff),
        })
    }

    pub fn n_eff(&self) -> f64 {
        self.n as f64 - self.defect
    }

    /// Inner classical turning point of the Coulomb + centrifugal potential.
    pub fn inner_turning_point(&self) -> f64 {
        let a = -2.0 * self.energy;
        let ll = (self.l * (self.l + 1)) as f64;
        let disc = (1.0 - a * ll).max(0.0);
        // (1 − √disc)/a, written to avoid cancellation
        ll / (1.0 + disc.sqrt())
    }
}

/// `E_nl = −1 / (2 (n − μ_l)²)`.
pub fn level_energy(n: u32, l: u32, defects: &QuantumDefects) -> Result<Quantity> {
    Ok(Quantity::energy_hartree(RydbergLevel::new(n, l, defects)?.energy))
}

/// Radial grid in `x = √r`: nodes `x_min + k·step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spacing in √bohr.
    pub step: f64,
    /// First node, in √bohr.
    pub x_min: f64,
    /// Outer radius in bohr; `None` uses `2n(n+15)`.
    pub r_out: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            step: 0.005,
            x_min: 0.02,
            r_out: None,
        }
    }
}

impl GridSpec {
    /// Same grid with half the spacing; every node of `self` stays a node.
    pub fn refined(&self) -> Self {
        Self {
            step: 0.5 * self.step,
            ..*self
        }
    }

    pub fn outer_radius(&self, n: u32) -> f64 {
        self.r_out.unwrap_or(2.0 * n as f64 * (n as f64 + 15.0))
    }
}

/// A solved radial function `u(r) = r R(r)`, normalized so `∫ u² dr = 1`.
#[derive(Debug, Clone)]
pub struct RadialWavefunction {
    pub level: RydbergLevel,
    pub x_min: f64,
    pub step: f64,
    /// `u` at `r = (x_min + k·step)²`.
    pub samples: Vec<f64>,
    /// Below this radius the function is identically zero.
    pub inner_cutoff: f64,
}

impl RadialWavefunction {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.step
    }

    pub fn r(&self, k: usize) -> f64 {
        let x = self.x(k);
        x * x
    }

    pub fn r_out(&self) -> f64 {
        self.r(self.samples.len() - 1)
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(|k| self.r(k))
    }

    /// ∫ u² dr on the grid.
    pub fn norm_squared(&self) -> f64 {
        let f: Vec<f64> = (0..self.len())
            .map(|k| 2.0 * self.x(k) * self.samples[k] * self.samples[k])
            .collect();
        integrate_nodes(&f, self.step)
    }

    /// Number of sign changes of u.
    pub fn node_count(&self) -> usize {
        let peak = self.samples.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let mut count = 0;
        let mut last = 0.0;
        for &u in &self.samples {
            if u.abs() < 1e-8 * peak {
                continue;
            }
            if last != 0.0 && (u > 0.0) != (last > 0.0) {
                count += 1;
            }
            last = u;
        }
        count
    }

    /// Cubic interpolation of u at radius `r` (zero outside the grid).
    pub fn value_at(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        interpolate_cubic(&self.samples, self.x_min, self.step, r.sqrt())
    }

    fn aligned_with(&self, other: &Self) -> bool {
        (self.step - other.step).abs() <= 1e-12 * self.step
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.step.max(self.x_min)
    }

    /// Resamples onto a grid with the given origin and spacing, `len` nodes.
    fn resampled(&self, x_min: f64, step: f64, len: usize) -> Vec<f64> {
        (0..len)
            .map(|k| interpolate_cubic(&self.samples, self.x_min, self.step, x_min + k as f64 * step))
            .collect()
    }
}

/// Four-point Lagrange interpolation on a uniform grid; zero outside it.
fn interpolate_cubic(y: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = y.len();
    if n == 0 {
        return 0.0;
    }
    let t = (x - x0) / h;
    if t < 0.0 || t > (n - 1) as f64 {
        return 0.0;
    }
    if n < 4 {
        let k = (t.floor() as usize).min(n - 2);
        let f = t - k as f64;
        return y[k] * (1.0 - f) + y[k + 1] * f;
    }
    let k = (t.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let s = t - k as f64;
    let (y0, y1, y2, y3) = (y[k], y[k + 1], y[k + 2], y[k + 3]);
    let l0 = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    let l1 = s * (s - 2.0) * (s - 3.0) / 2.0;
    let l2 = -s * (s - 1.0) * (s - 3.0) / 2.0;
    let l3 = s * (s - 1.0) * (s - 2.0) / 6.0;
    y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3
}

/// Composite Simpson over uniformly spaced nodes (3/8 rule on the last
/// three intervals when the interval count is odd).
pub(crate) fn integrate_nodes(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (f[0] + f[1]),
        3 => h / 3.0 * (f[0] + 4.0 * f[1] + f[2]),
        _ => {
            let intervals = n - 1;
            let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };
            let mut s = 0.0;
            let mut k = 0;
            while k + 2 <= simpson_end {
                s += f[k] + 4.0 * f[k + 1] + f[k + 2];
                k += 2;
            }
            let mut total = s * h / 3.0;
            if intervals % 2 == 1 {
                let j = n - 4;
                total += 3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
            }
            total
        }
    }
}

/// Integral of the cubic interpolant of `f` over `[x_k, x_k + frac·h]`.
fn integrate_partial_cell(f: &[f64], h: f64, k: usize, frac: f64) -> f64 {
    if frac <= 0.0 || f.len() < 2 {
        return 0.0;
    }
    // three-point Gauss–Legendre on [0, frac] in units of cells
    const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
    const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let mut s = 0.0;
    for (t, w) in NODES.iter().zip(WEIGHTS) {
        let u = k as f64 + 0.5 * frac * (t + 1.0);
        s += w * interpolate_cubic(f, 0.0, 1.0, u);
    }
    0.5 * frac * h * s
}

/// Grid-independent settings for the inward integration.
const START_AMPLITUDE: f64 = 1e-20;
const RESCALE_LIMIT: f64 = 1e200;

/// Solves for u(r) of `level` on the grid described by `spec`.
pub fn solve_radial(level: &RydbergLevel, spec: &GridSpec) -> Result<RadialWavefunction> {
    let fail = |reason: String| Error::RadialIntegration {
        n: level.n,
        l: level.l,
        reason,
    };
    if level.energy >= 0.0 {
        return Err(fail(format!("energy {} is not bound", level.energy)));
    }
    if !(spec.step > 0.0 && spec.step.is_finite()) || !(spec.x_min > 0.0) {
        return Err(fail(format!("bad grid step {} / origin {}", spec.step, spec.x_min)));
    }
    let r_out = spec.outer_radius(level.n);
    let x_out = r_out.sqrt();
    if x_out <= spec.x_min + 8.0 * spec.step {
        return Err(fail(format!("outer radius {r_out} leaves fewer than 8 grid cells")));
    }
    let len = ((x_out - spec.x_min) / spec.step).ceil() as usize + 1;
    let h = spec.step;
    let h2 = h * h / 12.0;
    let cent = (2.0 * level.l as f64 + 0.5) * (2.0 * level.l as f64 + 1.5);
    let e = level.energy;
    let g = |k: usize| {
        let x = spec.x_min + k as f64 * h;
        cent / (x * x) - 8.0 - 8.0 * e * x * x
    };
    let x_turn = level.inner_turning_point().sqrt();

    let mut w = vec![0.0; len];
    w[len - 1] = 0.0;
    w[len - 2] = START_AMPLITUDE;
    let mut stop = 0usize;
    let mut k = len - 2;
    while k >= 1 {
        let a_next = 1.0 - h2 * g(k + 1);
        let b = 2.0 * (1.0 + 5.0 * h2 * g(k));
        let a_prev = 1.0 - h2 * g(k - 1);
        if a_prev <= 0.0 {
            return Err(fail(format!("Numerov step unstable at x={}", spec.x_min + (k - 1) as f64 * h)));
        }
        let next = (b * w[k] - a_next * w[k + 1]) / a_prev;
        if !next.is_finite() {
            return Err(fail(format!("non-finite value at grid index {}", k - 1)));
        }
        w[k - 1] = next;
        if next.abs() > RESCALE_LIMIT {
            for v in &mut w[k - 1..] {
                *v /= RESCALE_LIMIT;
            }
        }
        // divergence inside the inner turning point
        let x_prev = spec.x_min + (k - 1) as f64 * h;
        if x_prev < x_turn {
            let u_prev = w[k - 1] * x_prev.sqrt();
            let u_here = w[k] * (spec.x_min + k as f64 * h).sqrt();
            if u_prev.abs() > u_here.abs() {
                stop = k;
                break;
            }
        }
        k -= 1;
    }

    let mut samples: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(k, &wk)| wk * (spec.x_min + k as f64 * h).sqrt())
        .collect();
    for s in samples.iter_mut().take(stop) {
        *s = 0.0;
    }

    let mut wf = RadialWavefunction {
        level: *level,
        x_min: spec.x_min,
        step: h,
        samples,
        inner_cutoff: {
            let x = spec.x_min + stop as f64 * h;
            x * x
        },
    };
    let norm2 = wf.norm_squared();
    if !(norm2 > 0.0 && norm2.is_finite()) {
        return Err(fail(format!("normalization integral {norm2}")));
    }
    // sign: positive on the outermost lobe
    let peak = wf.samples.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let outer = wf
        .samples
        .iter()
        .rev()
        .find(|u| u.abs() > 1e-3 * peak)
        .copied()
        .unwrap_or(1.0);
    let scale = outer.signum() / norm2.sqrt();
    for s in &mut wf.samples {
        *s *= scale;
    }
    Ok(wf)
}

/// `inner = ∫_0^R r^L u₁u₂ dr` and `outer = ∫_R^∞ r^{-L-1} u₁u₂ dr`
/// (equivalently `∫ r^{L+2} R₁R₂ dr` and `∫ r^{1-L} R₁R₂ dr`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialPairIntegrals {
    pub inner: f64,
    pub outer: f64,
    pub radius: f64,
    pub multipole: u32,
}

/// Product `u₁·u₂` of two wavefunctions on a common grid, ready for the
/// split multipole integrals at any radius.
#[derive(Debug, Clone)]
pub struct RadialPair {
    x_min: f64,
    step: f64,
    product: Vec<f64>,
    weighted: [OnceLock<Weighted>; CACHED_MULTIPOLES],
}

/// Integrands `(r^L, r^{−L−1})·u₁u₂·dr/dx` on the grid.
type Weighted = (Vec<f64>, Vec<f64>);

const CACHED_MULTIPOLES: usize = 8;

impl RadialPair {
    pub fn new(a: &RadialWavefunction, b: &RadialWavefunction) -> Self {
        if a.aligned_with(b) {
            let len = a.len().max(b.len());
            let product = (0..len)
                .map(|k| a.samples.get(k).copied().unwrap_or(0.0) * b.samples.get(k).copied().unwrap_or(0.0))
                .collect();
            return Self::from_product(a.x_min, a.step, product);
        }
        // resample onto the denser grid
        let (fine, coarse) = if a.step <= b.step { (a, b) } else { (b, a) };
        let x_end = a.r_out().max(b.r_out()).sqrt();
        let len = ((x_end - fine.x_min) / fine.step).ceil() as usize + 1;
        let fine_u: Vec<f64> = (0..len).map(|k| fine.samples.get(k).copied().unwrap_or(0.0)).collect();
        let coarse_u = coarse.resampled(fine.x_min, fine.step, len);
        let product = fine_u.iter().zip(&coarse_u).map(|(p, q)| p * q).collect();
        Self::from_product(fine.x_min, fine.step, product)
    }

    fn from_product(x_min: f64, step: f64, product: Vec<f64>) -> Self {
        Self { x_min, step, product, weighted: Default::default() }
    }

    fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.step
    }

    fn weighted_integrands(&self, l: u32) -> Weighted {
        let li = l as i32;
        // dr = 2x dx
        (0..self.product.len())
            .map(|k| {
                let x = self.x(k);
                let base = 2.0 * x * self.product[k];
                (base * (x * x).powi(li), base * (x * x).powi(-li - 1))
            })
            .unzip()
    }

    /// Split multipole integrals at `radius` for multipole order `l`.
    pub fn integrals(&self, radius: f64, l: u32) -> Result<RadialPairIntegrals> {
        let n = self.product.len();
        let hi = self.x(n - 1).powi(2);
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::OutsideGrid { radius, lo: 0.0, hi });
        }
        let computed;
        let (inner_f, outer_f) = match self.weighted.get(l as usize) {
            Some(cell) => {
                let w = cell.get_or_init(|| self.weighted_integrands(l));
                (&w.0, &w.1)
            }
            None => {
                computed = self.weighted_integrands(l);
                (&computed.0, &computed.1)
            }
        };

        let xr = radius.sqrt();
        let t = (xr - self.x_min) / self.step;
        let (inner, outer) = if t <= 0.0 {
            (0.0, integrate_nodes(outer_f, self.step))
        } else if t >= (n - 1) as f64 {
            (integrate_nodes(inner_f, self.step), 0.0)
        } else {
            let k = t.floor() as usize;
            let frac = t - k as f64;
            let inner = integrate_nodes(&inner_f[..=k], self.step)
                + integrate_partial_cell(inner_f, self.step, k, frac);
            let outer = integrate_nodes(&outer_f[k..], self.step)
                - integrate_partial_cell(outer_f, self.step, k, frac);
            (inner, outer)
        };
        Ok(RadialPairIntegrals { inner, outer, radius, multipole: l })
    }
}

/// Split radial integrals between two wavefunctions at radius `radius`.
pub fn radial_pair_integrals(
    a: &RadialWavefunction,
    b: &RadialWavefunction,
    radius: f64,
    multipole: u32,
) -> Result<RadialPairIntegrals> {
    RadialPair::new(a, b).integrals(radius, multipole)
}

/// Read-mostly store of solved wavefunctions for one atom model.
#[derive(Debug, Default)]
pub struct WavefunctionCache {
    pub defects: QuantumDefects,
    pub grid: GridSpec,
    store: RwLock<HashMap<(u32, u32), Arc<RadialWavefunction>>>,
}

impl WavefunctionCache {
    pub fn new(defects: QuantumDefects, grid: GridSpec) -> Self {
        Self {
            defects,
            grid,
            store: RwLock::new(HashMap::new()),
        }
    }

    pub fn level(&self, n: u32, l: u32) -> Result<RydbergLevel> {
        RydbergLevel::new(n, l, &self.defects)
    }

    /// Wavefunction for (n, l), solving it on first use.
    pub fn get(&self, n: u32, l: u32) -> Result<Arc<RadialWavefunction>> {
        if let Some(wf) = self.store.read().expect("cache lock poisoned").get(&(n, l)) {
            return Ok(Arc::clone(wf));
        }
        let level = self.level(n, l)?;
        let wf = Arc::new(solve_radial(&level, &self.grid)?);
        let mut store = self.store.write().expect("cache lock poisoned");
        Ok(Arc::clone(store.entry((n, l)).or_insert(wf)))
    }

    pub fn len(&self) -> usize {
        self.store.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
