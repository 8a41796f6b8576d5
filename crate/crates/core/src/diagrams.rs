//! Diagrammatic (Green-function) engine for the two-excitation sector.
//!
//! All objects are built from the single-excitation Hamiltonian
//! `H = ω₀ + D − iγ` (poles in the lower half plane) and its pair
//! extension `H₂ = H⊗1 + 1⊗H`, with on-site interaction `V`. Pair indices
//! are `i·N + j`; four-copy indices are `((a·N + b)·N + c)·N + d`.
//!
//! The modulation creates pairs with amplitude `g̃ⱼ = gⱼe^{−iφⱼ}`. Both
//! outgoing photons of a pair leave from the same qubit line of the dressed
//! vertex.
//!
//! The closed forms describe the resonant pair process only. The master
//! engine also contains the counter-rotating process (pairs created by the
//! `e^{+iΩt}` component); it contributes the same expressions evaluated at
//! `−Ω` with `g̃ → g̃*`. [`PairProcess`] selects whether it is included.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::linalg::{identity, inverse, kron, Factorized, MaxNorm, I};
use crate::model::{
    direction_phases, photon_green, pair_free_hamiltonian, pair_interaction, single_excitation_hamiltonian,
    Direction, SystemConfig,
};
use crate::quadrature::integrate_real_line_complex;
use crate::{Error, Result};

/// Largest array handled by the four-copy intensity expression (`N⁴` rows).
pub const MAX_FOUR_COPY_QUBITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairProcess {
    /// Pairs created by the `e^{−iΩt}` component only.
    Resonant,
    /// Adds the counter-rotating process; matches the master engine.
    WithCounterRotating,
}

fn counter_rotating(config: &SystemConfig) -> SystemConfig {
    let mut c = config.clone();
    c.drive_freq = -config.drive_freq;
    c.drive_phases.iter_mut().for_each(|p| *p = -*p);
    c
}

fn with_process<F: Fn(&SystemConfig) -> Result<f64>>(
    config: &SystemConfig,
    process: PairProcess,
    f: F,
) -> Result<f64> {
    let r = f(config)?;
    Ok(match process {
        PairProcess::Resonant => r,
        PairProcess::WithCounterRotating => r + f(&counter_rotating(config))?,
    })
}

fn warn_if_lossy(config: &SystemConfig, warned: &'static std::sync::Once, message: &str) {
    if config.gamma_nr > 0.0 {
        warned.call_once(|| log::warn!("γ = {}: {message}", config.gamma_nr));
    }
}

fn shifted(m: &DMatrix<C64>, z: C64) -> DMatrix<C64> {
    let mut out = -m;
    for i in 0..out.nrows() {
        out[(i, i)] += z;
    }
    out
}

/// `G(ω) = (ω − H)⁻¹`
pub fn single_green(config: &SystemConfig, omega: f64) -> Result<DMatrix<C64>> {
    config.validate()?;
    let h = single_excitation_hamiltonian(config).entries;
    inverse(shifted(&h, C64::from(omega)), "single-excitation Green function")
}

/// Outer line `s(ω)ᵢ = Σⱼ Gᵢⱼ(ω) e^{±i·qd·j}`; `Left` carries `e^{+i·qd·j}`.
pub fn outgoing_line(config: &SystemConfig, omega: f64, direction: Direction) -> Result<DVector<C64>> {
    Ok(single_green(config, omega)? * direction_phases(config, direction))
}

/// Pair propagator `Σᵢⱼ(Ω) = [(Ω − H₂)⁻¹]_{ii,jj}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPropagator {
    pub sigma: DMatrix<C64>,
    pub drive_freq: f64,
}

fn diagonal_pairs(m: &DMatrix<C64>, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |i, j| m[(i * n + i, j * n + j)])
}

fn pair_resolvent(config: &SystemConfig, interacting: bool) -> Result<DMatrix<C64>> {
    let n = config.n_qubits;
    let h = single_excitation_hamiltonian(config).entries;
    let mut h2 = pair_free_hamiltonian(&h);
    if interacting {
        h2 += pair_interaction(n, config.anharmonicity);
    }
    inverse(shifted(&h2, C64::from(config.drive_freq)), "pair resolvent")
}

pub fn pair_propagator(config: &SystemConfig) -> Result<PairPropagator> {
    config.validate()?;
    let r = pair_resolvent(config, false)?;
    let s = diagonal_pairs(&r, config.n_qubits);
    Ok(PairPropagator {
        sigma: (&s + s.transpose()).scale(0.5),
        drive_freq: config.drive_freq,
    })
}

/// `Σᵢⱼ(Ω) = i∫ Gᵢⱼ(ω) Gᵢⱼ(Ω−ω) dω/2π` by quadrature over the real axis.
pub fn pair_propagator_quadrature(config: &SystemConfig, abs_tol: f64) -> Result<DMatrix<C64>> {
    config.validate()?;
    let n = config.n_qubits;
    let h = single_excitation_hamiltonian(config).entries;
    let om = config.drive_freq;
    let w0 = config.omega0;
    let center = 0.5 * om;
    let scale = (0.5 * (om - 2.0 * w0)).abs().max(config.gamma_sigma());
    let mut sigma = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let f = |w: f64| {
                let g1 = inverse(shifted(&h, C64::from(w)), "quadrature Green function");
                let g2 = inverse(shifted(&h, C64::from(om - w)), "quadrature Green function");
                match (g1, g2) {
                    (Ok(a), Ok(b)) => I * a[(i, j)] * b[(i, j)] / (2.0 * PI),
                    _ => C64::from(f64::NAN),
                }
            };
            let (v, _) = integrate_real_line_complex(f, center, scale, &[w0, om - w0], abs_tol);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    Ok(sigma)
}

/// Dressed interaction vertex. `k = M/U = (1 − UΣ)⁻¹` stays regular at `U = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedVertex {
    pub m: DMatrix<C64>,
    pub k: DMatrix<C64>,
    /// Relative max-norm difference between the resummed and the
    /// pair-resolvent representations of `M`.
    pub representation_gap: f64,
}

pub fn dressed_vertex(config: &SystemConfig) -> Result<DressedVertex> {
    config.validate()?;
    let n = config.n_qubits;
    let u = config.anharmonicity;
    let sigma = pair_propagator(config)?.sigma;
    let k = inverse(identity(n) - &sigma * C64::from(u), "dressed vertex")?;
    let m = &k * C64::from(u);

    // M = [(Ω − H₂)(Ω − H₂ − V)⁻¹ V]_{ii,jj}
    let h = single_excitation_hamiltonian(config).entries;
    let free = shifted(&pair_free_hamiltonian(&h), C64::from(config.drive_freq));
    let v = pair_interaction(n, u);
    let full = inverse(&free - &v, "dressed vertex")?;
    let alt = diagonal_pairs(&(free * full * v), n);
    let scale = m.max_norm().max(f64::MIN_POSITIVE);
    let gap = if u == 0.0 { alt.max_norm() } else { (&alt - &m).max_norm() / scale };
    if gap > 1e-9 {
        log::warn!("vertex representations differ by {gap:.2e}");
    }
    Ok(DressedVertex {
        m,
        k,
        representation_gap: gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    /// both photons to the left
    #[serde(rename = "--")]
    MinusMinus,
    /// one photon each way
    #[serde(rename = "-+")]
    MinusPlus,
}

/// Two-photon amplitude density `ψ(ω₁, Ω−ω₁)` (energy delta stripped).
pub struct TwoPhotonAmplitude {
    config: SystemConfig,
    channel: Channel,
    kg: DVector<C64>,
}

impl TwoPhotonAmplitude {
    pub fn new(config: &SystemConfig, channel: Channel) -> Result<Self> {
        let vertex = dressed_vertex(config)?;
        Ok(TwoPhotonAmplitude {
            config: config.clone(),
            channel,
            kg: vertex.k * config.pair_drive(),
        })
    }

    pub fn at(&self, omega1: f64) -> Result<C64> {
        let c = &self.config;
        let second = match self.channel {
            Channel::MinusMinus => Direction::Left,
            Channel::MinusPlus => Direction::Right,
        };
        let s1 = outgoing_line(c, omega1, Direction::Left)?;
        let s2 = outgoing_line(c, c.drive_freq - omega1, second)?;
        let sum: C64 = (0..c.n_qubits).map(|i| s1[i] * s2[i] * self.kg[i]).sum();
        Ok(sum * c.gamma1d)
    }
}

pub fn two_photon_amplitude(config: &SystemConfig, channel: Channel, omega1: f64) -> Result<C64> {
    TwoPhotonAmplitude::new(config, channel)?.at(omega1)
}

/// `A = ω₀ − H`
/// Radiative vertex `−D`; equals `ω₀ − H` for lossless qubits.
fn emission_vertex(config: &SystemConfig) -> DMatrix<C64> {
    -photon_green(config).0
}

fn g2_exact_resonant(config: &SystemConfig) -> Result<f64> {
    let n = config.n_qubits;
    let a = emission_vertex(config);
    let r = pair_resolvent(config, true)?;
    let aa_row0 = kron(&a, &a).row(0).into_owned();
    let g = config.pair_drive();
    let amp: C64 = (0..n).map(|i| (&aa_row0 * r.column(i * n + i))[0] * g[i]).sum();
    Ok(amp.norm_sqr() / config.gamma1d.powi(4))
}

/// `G²₋₋(0)` from the exact pair resolvent.
pub fn g2_zero_diagram(config: &SystemConfig, process: PairProcess) -> Result<f64> {
    config.validate()?;
    with_process(config, process, g2_exact_resonant)
}

/// High-U limit of `G²₋₋(0)` near `Ω = 2ω₀ + U` (resonant process).
pub fn g2_zero_high_u(config: &SystemConfig) -> Result<f64> {
    config.validate()?;
    let g = config.pair_drive();
    let sum: C64 = (0..config.n_qubits)
        .map(|j| g[j] * C64::from_polar(1.0, 2.0 * config.qd * j as f64))
        .sum();
    let den = (config.drive_freq - 2.0 * config.omega0 - config.anharmonicity).powi(2)
        + 4.0 * config.gamma1d.powi(2);
    Ok(sum.norm_sqr() / den)
}

/// Large-U limit of `G²₋₋(0)` in the lower pair band `Ω ≈ 2ω₀`
/// (resonant process).
pub fn g2_zero_low_band(config: &SystemConfig) -> Result<f64> {
    config.validate()?;
    if config.anharmonicity == 0.0 {
        return Err(Error::invalid("lower-band limit needs U ≠ 0"));
    }
    let n = config.n_qubits;
    let a = emission_vertex(config);
    let r0 = pair_resolvent(config, false)?;
    let sigma = diagonal_pairs(&r0, n);
    let sigma_inv = inverse(sigma, "pair propagator inverse")?;
    let aa_row0 = kron(&a, &a).row(0).into_owned();
    let gam2 = config.gamma1d.powi(2);
    let sigma_plus =
        DVector::from_fn(n, |i, _| (&aa_row0 * r0.column(i * n + i))[0] / gam2);
    let amp = (sigma_plus.transpose() * sigma_inv * config.pair_drive())[0];
    Ok(amp.norm_sqr() / config.anharmonicity.powi(2))
}

/// Directional emission intensities (photon numbers `⟨p†p⟩`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalIntensities {
    pub i_minus: f64,
    pub i_plus: f64,
    /// both photons left
    pub mm: f64,
    /// both photons right
    pub pp: f64,
    /// one photon each way
    pub mp: f64,
}

impl DirectionalIntensities {
    fn add(self, o: Self) -> Self {
        DirectionalIntensities {
            i_minus: self.i_minus + o.i_minus,
            i_plus: self.i_plus + o.i_plus,
            mm: self.mm + o.mm,
            pp: self.pp + o.pp,
            mp: self.mp + o.mp,
        }
    }

    fn from_channels(mm: f64, pp: f64, mp: f64) -> Self {
        DirectionalIntensities {
            i_minus: mm + mp,
            i_plus: pp + mp,
            mm,
            pp,
            mp,
        }
    }
}

fn four_copy(n: usize, a: &DMatrix<C64>, slot: usize) -> DMatrix<C64> {
    let e = identity(n);
    let mut out = if slot == 0 { a.clone() } else { e.clone() };
    for k in 1..4 {
        out = kron(&out, if k == slot { a } else { &e });
    }
    out
}

fn intensities_exact_resonant(config: &SystemConfig) -> Result<DirectionalIntensities> {
    let n = config.n_qubits;
    let nn = n * n;
    let dim = nn * nn;
    let om = C64::from(config.drive_freq);
    let h = single_excitation_hamiltonian(config).entries;
    let hc = h.map(|z| z.conj());
    let h1 = four_copy(n, &h, 0);
    let h2 = four_copy(n, &h, 1);
    let h3 = four_copy(n, &hc, 2);
    let h4 = four_copy(n, &hc, 3);
    let v = pair_interaction(n, config.anharmonicity);
    let v12 = kron(&v, &identity(nn));
    let v34 = kron(&identity(nn), &v);
    let id = identity(dim);

    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
    let last = n - 1;
    let rows = [idx(0, 0, 0, 0), idx(last, last, last, last), idx(0, last, 0, last)];

    // propagate the selected rows of the four-copy product from the left
    let mut r = DMatrix::zeros(rows.len(), dim);
    for (k, &row) in rows.iter().enumerate() {
        r[(k, row)] = C64::from(1.0);
    }
    let a = emission_vertex(config);
    let ac = a.map(|z| z.conj());
    for (slot, v) in [(0, &a), (1, &a), (2, &ac), (3, &ac)] {
        r = &r * four_copy(n, v, slot);
    }
    let right_solve = |r: &DMatrix<C64>, m: DMatrix<C64>, what: &'static str| -> Result<DMatrix<C64>> {
        // r·m⁻¹ = (m⁻ᵀ rᵀ)ᵀ
        Ok(Factorized::new(m.transpose(), what)?.solve_mat(&r.transpose()).transpose())
    };
    r = right_solve(&r, &id * om - &h1 - &h4, "four-copy resolvent")?;
    let left = right_solve(&(&r * (&id * om - &h3 - &h4)), &h1 - &h3, "four-copy difference")?;
    let right = right_solve(&(&r * (&id * om - &h1 - &h2)), &h4 - &h2, "four-copy difference")?;
    r = left - right;
    r = right_solve(&r, &id * om - &h1 - &h2 - v12, "four-copy interacting resolvent")?;
    r = right_solve(&r, &id * om - &h3 - &h4 - v34, "four-copy interacting resolvent")?;

    let g = config.pair_drive();
    let gam3 = config.gamma1d.powi(3);
    let contract = |k: usize| -> f64 {
        let mut s = C64::from(0.0);
        for i in 0..n {
            for j in 0..n {
                s += g[i] * g[j].conj() * r[(k, idx(i, i, j, j))];
            }
        }
        (s / I).re / gam3
    };
    Ok(DirectionalIntensities::from_channels(contract(0), contract(1), contract(2)))
}

/// Directional intensities from the exact four-copy resolvent expression.
pub fn emission_intensities_diagram(
    config: &SystemConfig,
    process: PairProcess,
) -> Result<DirectionalIntensities> {
    config.validate()?;
    if config.n_qubits > MAX_FOUR_COPY_QUBITS {
        return Err(Error::Unsupported(format!(
            "four-copy intensity for N = {} needs {}² dense matrices; limit is N = {MAX_FOUR_COPY_QUBITS}",
            config.n_qubits,
            config.n_qubits.pow(4)
        )));
    }
    static WARNED: std::sync::Once = std::sync::Once::new();
    warn_if_lossy(
        config,
        &WARNED,
        "diagrammatic intensity counts only pairs that reach the waveguide",
    );
    let r = intensities_exact_resonant(config)?;
    Ok(match process {
        PairProcess::Resonant => r,
        PairProcess::WithCounterRotating => r.add(intensities_exact_resonant(&counter_rotating(config))?),
    })
}

/// High-U form of the directional intensities near `Ω = 2ω₀ + U`
/// (resonant process).
pub fn emission_intensities_high_u(config: &SystemConfig) -> Result<DirectionalIntensities> {
    config.validate()?;
    let n = config.n_qubits;
    let a = emission_vertex(config);
    let ac = a.map(|z| z.conj());
    let p = shifted(&single_excitation_hamiltonian(config).entries, C64::from(config.omega0));
    let pc = p.map(|z| z.conj());
    let id = identity(n);
    let q = kron(&a, &ac)
        * inverse(kron(&p, &id) - kron(&id, &pc), "high-U kernel")?;
    let gam = config.gamma1d;
    let den = (config.drive_freq - 2.0 * config.omega0 - config.anharmonicity).powi(2) + 4.0 * gam * gam;
    let g = config.pair_drive();
    let last = n - 1;
    // Σᵢⱼ g̃ᵢ g̃ⱼ* A_{ri} A*_{rj} Q_{ss,ij}
    let term = |r: usize, s: usize| -> C64 {
        let mut acc = C64::from(0.0);
        for i in 0..n {
            for j in 0..n {
                acc += g[i] * g[j].conj() * a[(r, i)] * ac[(r, j)] * q[(s * n + s, i * n + j)];
            }
        }
        acc
    };
    let pref = 1.0 / (gam * gam * den) / gam;
    let mm = (2.0 * I * term(0, 0)).re * pref;
    let pp = (2.0 * I * term(last, last)).re * pref;
    let mp = (I * (term(0, last) + term(last, 0))).re * pref;
    Ok(DirectionalIntensities::from_channels(mm, pp, mp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalTheorem {
    /// Pump scattering parameter `s = 1 − (i/γ₁D) Σ g̃ᵢ* Σ̃ᵢⱼ g̃ⱼ`.
    pub s: C64,
    /// `I₊ + I₋` required by unitarity, in the unitarity normalization
    /// (twice the photon number).
    pub i_sum: f64,
    /// `2 − 2|s|² − I_sum`, of order g⁴.
    pub residual: f64,
}

fn unitarity_sum(config: &SystemConfig) -> Result<C64> {
    let n = config.n_qubits;
    let st = diagonal_pairs(&pair_resolvent(config, true)?, n);
    let g = config.pair_drive();
    let mut z = C64::from(0.0);
    for i in 0..n {
        for j in 0..n {
            z += g[i].conj() * st[(i, j)] * g[j];
        }
    }
    Ok(z)
}

/// Unitarity bookkeeping for the resonant pair process.
pub fn optical_theorem(config: &SystemConfig) -> Result<OpticalTheorem> {
    config.validate()?;
    static WARNED: std::sync::Once = std::sync::Once::new();
    warn_if_lossy(config, &WARNED, "the optical theorem holds for lossless qubits only");
    let z = unitarity_sum(config)?;
    let gam = config.gamma1d;
    let s = 1.0 - I * z / gam;
    let i_sum = -4.0 / gam * z.im;
    Ok(OpticalTheorem {
        s,
        i_sum,
        residual: 2.0 - 2.0 * s.norm_sqr() - i_sum,
    })
}

/// `I₊ + I₋` from unitarity (unitarity normalization).
pub fn intensity_sum_unitarity(config: &SystemConfig, process: PairProcess) -> Result<f64> {
    config.validate()?;
    with_process(config, process, |c| Ok(-4.0 / c.gamma1d * unitarity_sum(c)?.im))
}

/// High-U limit of [`intensity_sum_unitarity`] near `Ω = 2ω₀ + U`.
pub fn intensity_sum_high_u(config: &SystemConfig) -> f64 {
    let g2: f64 = config.drive_amps.iter().map(|g| g * g).sum();
    let den = (config.drive_freq - 2.0 * config.omega0 - config.anharmonicity).powi(2)
        + 4.0 * config.gamma1d.powi(2);
    8.0 * g2 / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_mapped;
    use std::f64::consts::PI;

    fn cfg(n: usize, u: f64, qd: f64, offset: f64) -> SystemConfig {
        let mut c = SystemConfig::uniform(n, 0.01, u, 0.0, qd);
        c.drive_freq = 2.0 * c.omega0 + offset;
        if n > 1 {
            c.drive_phases = (0..n).map(|j| 0.7 * j as f64).collect();
            c.drive_amps = (0..n).map(|j| 0.01 * (1.0 + 0.3 * j as f64)).collect();
        }
        c
    }

    #[test]
    fn green_single_qubit() {
        let mut c = cfg(1, 10.0, 0.0, 0.0);
        c.gamma_nr = 0.2;
        let g = single_green(&c, 1003.0).unwrap();
        assert!((g[(0, 0)] - 1.0 / C64::new(3.0, 1.2)).norm() < 1e-15);
        let s = outgoing_line(&c, 1003.0, Direction::Left).unwrap();
        assert_eq!(s[0], g[(0, 0)]);
    }

    #[test]
    fn green_residue() {
        let c = cfg(1, 10.0, 0.0, 0.0);
        let re = integrate_mapped(
            |w| (I * single_green(&c, w).unwrap()[(0, 0)]).re / PI,
            f64::NEG_INFINITY,
            f64::INFINITY,
            1000.0,
            1.0,
            &[],
            1e-10,
        );
        assert!((re.value - 1.0).abs() < 1e-3);
    }

    #[test]
    fn outgoing_lines_equal_at_zero_spacing() {
        let mut c = cfg(3, 10.0, 0.0, 0.0);
        c.gamma_nr = 0.1;
        let a = outgoing_line(&c, 1000.4, Direction::Left).unwrap();
        let b = outgoing_line(&c, 1000.4, Direction::Right).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn outgoing_line_row_representation() {
        let c = cfg(3, 10.0, 0.9, 0.0);
        let w = 1000.7;
        let g = single_green(&c, w).unwrap();
        let a = emission_vertex(&c);
        let row = (&a * &g).row(0).into_owned() / (I * c.gamma1d);
        let s = outgoing_line(&c, w, Direction::Left).unwrap();
        for i in 0..3 {
            assert!((row[i] - s[i]).norm() < 1e-10 * s[i].norm());
        }
        // right-going line from the last row
        let last = (&a * &g).row(2).into_owned() / (I * c.gamma1d)
            * C64::from_polar(1.0, -2.0 * c.qd);
        let s = outgoing_line(&c, w, Direction::Right).unwrap();
        for i in 0..3 {
            assert!((last[i] - s[i]).norm() < 1e-10 * s[i].norm());
        }
    }

    #[test]
    fn pair_propagator_single_qubit() {
        let mut c = cfg(1, 10.0, 0.0, 1.5);
        c.gamma_nr = 0.3;
        let s = pair_propagator(&c).unwrap().sigma[(0, 0)];
        assert!((s - 1.0 / C64::new(1.5, 2.6)).norm() < 1e-14);
    }

    #[test]
    fn pair_propagator_matches_quadrature() {
        let c = cfg(2, 10.0, 1.0, 3.0);
        let closed = pair_propagator(&c).unwrap().sigma;
        let quad = pair_propagator_quadrature(&c, 1e-11).unwrap();
        for (a, b) in closed.iter().zip(quad.iter()) {
            assert!((a - b).norm() < 1e-6 * a.norm(), "{a} vs {b}");
        }
        assert_eq!(closed[(0, 1)], closed[(1, 0)]);
    }

    #[test]
    fn vertex_single_qubit_and_representations() {
        let c = cfg(1, 10.0, 0.0, 4.0);
        let v = dressed_vertex(&c).unwrap();
        let want = C64::from(10.0) * C64::new(4.0, 2.0) / C64::new(-6.0, 2.0);
        assert!((v.m[(0, 0)] - want).norm() < 1e-12);
        let c = cfg(3, 7.0, 0.6, 2.0);
        let v = dressed_vertex(&c).unwrap();
        assert!(v.representation_gap < 1e-9);
        // M = U(1 + ΣM)
        let sigma = pair_propagator(&c).unwrap().sigma;
        let rhs = (identity(3) + &sigma * &v.m) * C64::from(7.0);
        assert!((rhs - &v.m).max_norm() < 1e-10 * v.m.max_norm());
    }

    #[test]
    fn vertex_zero_interaction() {
        let c = cfg(2, 0.0, 0.6, 2.0);
        let v = dressed_vertex(&c).unwrap();
        assert_eq!(v.m.max_norm(), 0.0);
        assert!((v.k.clone() - identity(2)).max_norm() < 1e-15);
        assert!(v.representation_gap < 1e-12);
    }

    #[test]
    fn vertex_strong_interaction_limit() {
        let c = cfg(2, 1e7, 0.6, 2.0);
        let v = dressed_vertex(&c).unwrap();
        let sigma = pair_propagator(&c).unwrap().sigma;
        let lim = -inverse(sigma, "test").unwrap();
        assert!((&v.m - &lim).max_norm() < 1e-5 * lim.max_norm());
    }

    #[test]
    fn amplitude_exchange_symmetry_and_linearity() {
        let c = cfg(3, 6.0, 0.8, 5.0);
        let psi = TwoPhotonAmplitude::new(&c, Channel::MinusMinus).unwrap();
        for w in [995.0, 1001.3, 1004.0] {
            let a = psi.at(w).unwrap();
            let b = psi.at(c.drive_freq - w).unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm());
        }
        let c2 = c.scale_drive(2.0);
        let a = two_photon_amplitude(&c, Channel::MinusPlus, 1001.0).unwrap();
        let b = two_photon_amplitude(&c2, Channel::MinusPlus, 1001.0).unwrap();
        assert!((b - 2.0 * a).norm() < 1e-14);
    }

    #[test]
    fn amplitude_integral_reproduces_g2() {
        let c = cfg(2, 6.0, 0.8, 5.0);
        let psi = TwoPhotonAmplitude::new(&c, Channel::MinusMinus).unwrap();
        let (v, _) = integrate_real_line_complex(
            |w| psi.at(w).unwrap() / (2.0 * PI),
            0.5 * c.drive_freq,
            3.0,
            &[1000.0, c.drive_freq - 1000.0],
            1e-14,
        );
        let g2 = v.norm_sqr() / c.gamma1d.powi(2);
        let want = g2_zero_diagram(&c, PairProcess::Resonant).unwrap();
        assert!((g2 - want).abs() < 1e-6 * want, "{g2} vs {want}");
    }

    #[test]
    fn amplitude_squared_integral_reproduces_intensity() {
        let c = cfg(2, 6.0, 0.8, 5.0);
        let d = emission_intensities_diagram(&c, PairProcess::Resonant).unwrap();
        for (ch, want) in [(Channel::MinusMinus, d.mm), (Channel::MinusPlus, d.mp)] {
            let psi = TwoPhotonAmplitude::new(&c, ch).unwrap();
            let r = integrate_mapped(
                |w| psi.at(w).unwrap().norm_sqr() / (2.0 * PI),
                f64::NEG_INFINITY,
                f64::INFINITY,
                0.5 * c.drive_freq,
                3.0,
                &[1000.0, c.drive_freq - 1000.0],
                1e-16,
            );
            let got = r.value / c.gamma1d;
            assert!((got - want).abs() < 1e-6 * want, "{ch:?}: {got} vs {want}");
        }
    }

    #[test]
    fn single_qubit_high_u_g2_value() {
        let mut c = cfg(1, 10.0, 0.0, 10.0);
        c.drive_amps = vec![0.1];
        assert!((g2_zero_high_u(&c).unwrap() - 2.5e-3).abs() < 1e-15);
    }

    #[test]
    fn high_u_g2_converges() {
        let mut gaps = vec![];
        for u in [50.0, 500.0] {
            let c = cfg(3, u, 0.7, u + 0.3);
            let exact = g2_zero_diagram(&c, PairProcess::Resonant).unwrap();
            gaps.push((g2_zero_high_u(&c).unwrap() / exact - 1.0).abs());
        }
        assert!(gaps[0] < 0.05 && gaps[1] < 0.005, "{gaps:?}");
    }

    #[test]
    fn low_band_limit_converges() {
        let mut gaps = vec![];
        for u in [100.0, 1000.0] {
            let c = cfg(2, u, 0.7, 0.5);
            let exact = g2_zero_diagram(&c, PairProcess::Resonant).unwrap();
            gaps.push((g2_zero_low_band(&c).unwrap() / exact - 1.0).abs());
        }
        assert!(gaps[1] < gaps[0] && gaps[1] < 0.02, "{gaps:?}");
    }

    #[test]
    fn four_copy_sum_is_half_the_unitarity_sum() {
        for (n, qd) in [(1, 0.0), (2, 0.4), (3, 2.2)] {
            let c = cfg(n, 8.0, qd, 3.0);
            let d = emission_intensities_diagram(&c, PairProcess::Resonant).unwrap();
            let u = intensity_sum_unitarity(&c, PairProcess::Resonant).unwrap();
            assert!(((d.i_minus + d.i_plus) * 2.0 / u - 1.0).abs() < 1e-9, "N={n}");
        }
    }

    #[test]
    fn high_u_intensity_forms_converge() {
        let c = cfg(3, 500.0, 1.1, 500.2);
        let exact = emission_intensities_diagram(&c, PairProcess::Resonant).unwrap();
        let approx = emission_intensities_high_u(&c).unwrap();
        assert!((approx.i_minus / exact.i_minus - 1.0).abs() < 0.01);
        assert!((approx.i_plus / exact.i_plus - 1.0).abs() < 0.01);
    }

    #[test]
    fn mirror_phase_flip() {
        let mut c = cfg(2, 8.0, 0.9, 4.0);
        c.drive_amps = vec![0.01, 0.01];
        c.drive_phases = vec![0.0, 1.1];
        let a = emission_intensities_diagram(&c, PairProcess::Resonant).unwrap();
        c.drive_phases = vec![0.0, -1.1];
        let b = emission_intensities_diagram(&c, PairProcess::Resonant).unwrap();
        assert!((a.i_plus - b.i_minus).abs() < 1e-10 * a.i_plus);
        c.drive_phases = vec![0.0, 0.0];
        let s = emission_intensities_diagram(&c, PairProcess::Resonant).unwrap();
        assert!((s.i_plus - s.i_minus).abs() < 1e-10 * s.i_plus);
    }

    #[test]
    fn optical_theorem_values() {
        let mut c = cfg(1, 1e4, 0.0, 1e4);
        c.drive_amps = vec![0.0];
        let o = optical_theorem(&c).unwrap();
        assert_eq!((o.s, o.i_sum), (C64::from(1.0), 0.0));
        c.drive_amps = vec![0.01];
        let o = optical_theorem(&c).unwrap();
        assert!((o.i_sum / intensity_sum_high_u(&c) - 1.0).abs() < 1e-3);
        assert!((o.i_sum - 2.0 * 1e-4).abs() < 1e-6);
    }

    #[test]
    fn optical_residual_quartic() {
        let c = cfg(3, 5.0, 0.5, 2.0);
        let r1 = optical_theorem(&c).unwrap().residual;
        let r2 = optical_theorem(&c.scale_drive(0.5)).unwrap().residual;
        assert!((r1 / r2 / 16.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn four_copy_size_cap() {
        let c = cfg(7, 5.0, 0.5, 2.0);
        assert!(matches!(
            emission_intensities_diagram(&c, PairProcess::Resonant),
            Err(Error::Unsupported(_))
        ));
    }
}
