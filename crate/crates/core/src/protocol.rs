//! Projective model of the fluorescence readout: a π pulse excites the
//! superatom only for molecular configurations in the addressed spin group,
//! and comparing fluorescence before and after the pulse gives that group's
//! population.
//!
//! Configurations are indexed by bit patterns; bit i set means molecule i is
//! in `|↑⟩`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{Quantity, REFERENCE};

const NORM_TOL: f64 = 1e-9;

/// Largest N accepted for explicit 2^N amplitude vectors.
pub const MAX_PROTOCOL_N: usize = 20;

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

fn popcount(c: usize) -> u32 {
    c.count_ones()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MolecularAmplitudes {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl MolecularAmplitudes {
    pub fn new(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n == 0 || n > MAX_PROTOCOL_N {
            return Err(Error::InvalidInput(format!("N={n} outside 1..={MAX_PROTOCOL_N}")));
        }
        if amplitudes.len() != 1 << n {
            return Err(Error::InvalidInput(format!(
                "{} amplitudes given for N={n}, expected {}",
                amplitudes.len(),
                1usize << n
            )));
        }
        let sum = norm_sqr(&amplitudes);
        if !sum.is_finite() || (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                name: "molecular amplitudes".into(),
                sum,
            });
        }
        Ok(Self { n, amplitudes })
    }

    /// Single molecule `α|↓⟩ + β|↑⟩`.
    pub fn qubit(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new(1, vec![alpha, beta])
    }

    /// Equal weight on all 2^N configurations.
    pub fn uniform(n: usize) -> Result<Self> {
        let a = Complex64::new((1.0 / (1u64 << n) as f64).sqrt(), 0.0);
        Self::new(n, vec![a; 1 << n])
    }

    /// Every molecule in `α|↓⟩ + β|↑⟩`.
    pub fn product(n: usize, alpha: Complex64, beta: Complex64) -> Result<Self> {
        if n == 0 || n > MAX_PROTOCOL_N {
            return Err(Error::InvalidInput(format!("N={n} outside 1..={MAX_PROTOCOL_N}")));
        }
        let amps = (0..1usize << n)
            .map(|c| {
                let k = popcount(c) as i32;
                beta.powi(k) * alpha.powi(n as i32 - k)
            })
            .collect();
        Self::new(n, amps)
    }

    /// Equal superposition of the configurations with exactly `k` molecules up.
    pub fn dicke(n: usize, k: u32) -> Result<Self> {
        if k as usize > n {
            return Err(Error::InvalidInput(format!("k={k} exceeds N={n}")));
        }
        let count = (0..1usize << n).filter(|&c| popcount(c) == k).count();
        let a = Complex64::new(1.0 / (count as f64).sqrt(), 0.0);
        let amps = (0..1usize << n)
            .map(|c| if popcount(c) == k { a } else { Complex64::new(0.0, 0.0) })
            .collect();
        Self::new(n, amps)
    }

    /// The W state, one molecule up.
    pub fn w_state(n: usize) -> Result<Self> {
        Self::dicke(n, 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Population of each spin group k = 0..=N.
    pub fn group_populations(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n + 1];
        for (c, a) in self.amplitudes.iter().enumerate() {
            p[popcount(c) as usize] += a.norm_sqr();
        }
        p
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity_with(&self, other: &MolecularAmplitudes) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Atom in `|g⟩` (ground branch) or in the superatom Rydberg state, each
/// with an unnormalized molecular state.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub n: usize,
    pub ground_branch: Vec<Complex64>,
    pub rydberg_branch: Vec<Complex64>,
}

impl JointState {
    pub fn ground_norm_sqr(&self) -> f64 {
        norm_sqr(&self.ground_branch)
    }

    pub fn rydberg_norm_sqr(&self) -> f64 {
        norm_sqr(&self.rydberg_branch)
    }
}

/// Ideal π pulse resonant with spin group `target_k`.
pub fn conditional_excitation(state: &MolecularAmplitudes, target_k: u32) -> Result<JointState> {
    if target_k as usize > state.n {
        return Err(Error::InvalidInput(format!("target k={target_k} exceeds N={}", state.n)));
    }
    let zero = Complex64::new(0.0, 0.0);
    let (ground_branch, rydberg_branch) = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(c, &a)| if popcount(c) == target_k { (zero, a) } else { (a, zero) })
        .unzip();
    Ok(JointState {
        n: state.n,
        ground_branch,
        rydberg_branch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluorescenceReadout {
    /// Ground-state fluorescence after the pulse relative to before.
    pub ratio: f64,
    /// Inferred population outside the target group, `R`.
    pub other_population: f64,
    /// Inferred population of the target group, `1 − R`.
    pub target_population: f64,
}

pub fn fluorescence_ratio(state: &MolecularAmplitudes, target_k: u32) -> Result<FluorescenceReadout> {
    let joint = conditional_excitation(state, target_k)?;
    let before = norm_sqr(&state.amplitudes);
    let ratio = joint.ground_norm_sqr() / before;
    Ok(FluorescenceReadout {
        ratio,
        other_population: ratio,
        target_population: 1.0 - ratio,
    })
}

/// Renormalized molecular state after the fluorescence check: `detected`
/// means the atom was found dark, i.e. in the Rydberg branch.
pub fn project_after_detection(joint: &JointState, detected: bool) -> Result<MolecularAmplitudes> {
    let branch = if detected { &joint.rydberg_branch } else { &joint.ground_branch };
    let norm = norm_sqr(branch).sqrt();
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    MolecularAmplitudes::new(joint.n, branch.iter().map(|a| a / norm).collect())
}

/// `N_est = Σ_k k p_k`.
pub fn hamming_weight_estimate(group_populations: &[f64]) -> Result<f64> {
    check_distribution("group populations", group_populations)?;
    Ok(group_populations.iter().enumerate().map(|(k, p)| k as f64 * p).sum())
}

fn check_distribution(name: &str, p: &[f64]) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if p.is_empty() || p.iter().any(|x| !(*x >= -NORM_TOL)) || (sum - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { name: name.into(), sum });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub f_m: f64,
    pub f_qnd: f64,
    pub f_qsp: f64,
    pub p_in: Vec<f64>,
    pub p_m: Vec<f64>,
    pub p_out: Vec<f64>,
    /// Probability that the output is in outcome i given the measurement gave i.
    pub conditional: Vec<f64>,
}

/// Measurement, QND and state-preparation fidelities. The first two are
/// Bhattacharyya overlaps `Σ_i √(p_i q_i)`, which equal 1 exactly when the
/// two distributions coincide.
pub fn qnd_fidelities(p_in: &[f64], p_m: &[f64], p_out: &[f64], conditional: &[f64]) -> Result<FidelityReport> {
    let k = p_in.len();
    if p_m.len() != k || p_out.len() != k || conditional.len() != k {
        return Err(Error::InvalidInput("fidelity inputs differ in length".into()));
    }
    check_distribution("p_in", p_in)?;
    check_distribution("p_M", p_m)?;
    check_distribution("p_out", p_out)?;
    if conditional.iter().any(|c| !(-NORM_TOL..=1.0 + NORM_TOL).contains(c)) {
        return Err(Error::InvalidInput("conditional probabilities must lie in [0, 1]".into()));
    }
    // Sums are divided by the input totals, which are 1 up to rounding; equal
    // distributions then give exactly 1.
    let total = |p: &[f64]| -> f64 { p.iter().sum() };
    let overlap = |p: &[f64], q: &[f64]| -> f64 {
        p.iter().zip(q).map(|(a, b)| (a * b).max(0.0).sqrt()).sum::<f64>() / (total(p) * total(q)).sqrt()
    };
    Ok(FidelityReport {
        f_m: overlap(p_m, p_in),
        f_qnd: overlap(p_in, p_out),
        f_qsp: p_m.iter().zip(conditional).map(|(m, c)| m * c).sum::<f64>() / total(p_m),
        p_in: p_in.to_vec(),
        p_m: p_m.to_vec(),
        p_out: p_out.to_vec(),
        conditional: conditional.to_vec(),
    })
}

/// Fidelities of the ideal pulse-and-detect sequence, with the spin groups as
/// measurement outcomes. Outcome k is obtained by addressing group k and
/// detecting the dark atom; the molecules are then left in the projected
/// branch.
pub fn ideal_readout_fidelities(state: &MolecularAmplitudes) -> Result<FidelityReport> {
    let groups = state.n + 1;
    let p_in = state.group_populations();
    let mut p_m = vec![0.0; groups];
    let mut p_out = vec![0.0; groups];
    let mut conditional = vec![0.0; groups];
    for k in 0..groups {
        let joint = conditional_excitation(state, k as u32)?;
        p_m[k] = joint.rydberg_norm_sqr();
        if p_m[k] == 0.0 {
            // outcome never occurs; it carries no weight in any sum
            conditional[k] = 1.0;
            continue;
        }
        let post = project_after_detection(&joint, true)?;
        let post_groups = post.group_populations();
        let post_total: f64 = post_groups.iter().sum();
        conditional[k] = post_groups[k] / post_total;
        for (o, p) in p_out.iter_mut().zip(&post_groups) {
            *o += p_m[k] * (p / post_total);
        }
    }
    qnd_fidelities(&p_in, &p_m, &p_out, &conditional)
}

/// Two-level off-resonant excitation probability `Ω²/(Ω² + Δ²)`.
pub fn leakage_probability(rabi: Quantity, detuning: Quantity) -> f64 {
    let (o, d) = (rabi.au(), detuning.au());
    if o == 0.0 {
        return 0.0;
    }
    o * o / (o * o + d * d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageEntry {
    pub k: u32,
    pub nearest_splitting_khz: f64,
    pub p_leak: f64,
    /// Rb(60s) width over the nearest splitting.
    pub gamma_ratio: f64,
}

/// Leakage into the nearest other group for each target, given the group
/// mean shifts (kHz) from the collective calculation.
pub fn leakage_table(rabi: Quantity, group_means_khz: &[f64]) -> Vec<LeakageEntry> {
    let gamma_khz = REFERENCE.gamma_60s.khz();
    group_means_khz
        .iter()
        .enumerate()
        .map(|(k, &m)| {
            let delta = group_means_khz
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &o)| (o - m).abs())
                .fold(f64::INFINITY, f64::min);
            let p_leak = if delta.is_finite() {
                leakage_probability(rabi, Quantity::frequency_khz(delta))
            } else {
                0.0
            };
            LeakageEntry {
                k: k as u32,
                nearest_splitting_khz: delta,
                p_leak,
                gamma_ratio: gamma_khz / delta,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolReport {
    pub n: usize,
    pub target_k: u32,
    pub fluorescence: FluorescenceReadout,
    pub group_populations: Vec<f64>,
    pub n_est: f64,
    pub fidelities: FidelityReport,
    pub rabi_khz: f64,
    pub leakage: Vec<LeakageEntry>,
}

/// Named input states for the readout model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase")]
pub enum StatePreset {
    Uniform,
    W,
    Product { alpha: f64, beta: f64 },
}

impl StatePreset {
    pub fn build(self, n: usize) -> Result<MolecularAmplitudes> {
        match self {
            StatePreset::Uniform => MolecularAmplitudes::uniform(n),
            StatePreset::W => MolecularAmplitudes::w_state(n),
            StatePreset::Product { alpha, beta } => {
                MolecularAmplitudes::product(n, Complex64::new(alpha, 0.0), Complex64::new(beta, 0.0))
            }
        }
    }
}

pub fn protocol_report(
    state: &MolecularAmplitudes,
    target_k: u32,
    rabi: Quantity,
    group_means_khz: &[f64],
) -> Result<ProtocolReport> {
    let group_populations = state.group_populations();
    Ok(ProtocolReport {
        n: state.n(),
        target_k,
        fluorescence: fluorescence_ratio(state, target_k)?,
        n_est: hamming_weight_estimate(&group_populations)?,
        group_populations,
        fidelities: ideal_readout_fidelities(state)?,
        rabi_khz: rabi.khz(),
        leakage: leakage_table(rabi, group_means_khz),
    })
}
