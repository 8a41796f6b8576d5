//! Physical model: photon-mediated couplings, the bare Hamiltonian, the
//! modulation and emission operators, and the non-Hermitian effective
//! Hamiltonians of the one- and two-excitation sectors.
//!
//! Frequencies and rates are in units of `gamma1d`. Qubit `j` (0-based)
//! sits at `x_j = j·d`, and `qd = ω₀d/c` is the phase per spacing.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::hilbert::{FockBasis, OperatorMatrix};
use crate::linalg::{eigenvalues, identity, kron, I};
use crate::{Error, Result};

pub const DEFAULT_OMEGA0: f64 = 1000.0;

/// Above this drive amplitude the three-harmonic Floquet truncation is
/// no longer trustworthy.
pub const WEAK_DRIVE_LIMIT: f64 = 0.3;

fn default_omega0() -> f64 {
    DEFAULT_OMEGA0
}

fn default_gamma1d() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_qubits: usize,
    #[serde(default = "default_omega0")]
    pub omega0: f64,
    #[serde(default = "default_gamma1d")]
    pub gamma1d: f64,
    #[serde(default)]
    pub gamma_nr: f64,
    pub anharmonicity: f64,
    pub qd: f64,
    pub drive_amps: Vec<f64>,
    pub drive_phases: Vec<f64>,
    pub drive_freq: f64,
}

impl SystemConfig {
    /// `n` qubits, all driven with amplitude `g` and zero phase, at the
    /// two-photon resonance `Ω = 2ω₀ + U`.
    pub fn uniform(n: usize, g: f64, anharmonicity: f64, gamma_nr: f64, qd: f64) -> Self {
        let omega0 = DEFAULT_OMEGA0;
        SystemConfig {
            n_qubits: n,
            omega0,
            gamma1d: 1.0,
            gamma_nr,
            anharmonicity,
            qd,
            drive_amps: vec![g; n],
            drive_phases: vec![0.0; n],
            drive_freq: 2.0 * omega0 + anharmonicity,
        }
    }

    pub fn single(g: f64, anharmonicity: f64, gamma_nr: f64) -> Self {
        Self::uniform(1, g, anharmonicity, gamma_nr, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        if n == 0 {
            return Err(Error::invalid("n_qubits must be positive"));
        }
        if self.drive_amps.len() != n {
            return Err(Error::invalid(format!(
                "drive_amps has {} entries for {n} qubits",
                self.drive_amps.len()
            )));
        }
        if self.drive_phases.len() != n {
            return Err(Error::invalid(format!(
                "drive_phases has {} entries for {n} qubits",
                self.drive_phases.len()
            )));
        }
        if !(self.gamma1d > 0.0) || !self.gamma1d.is_finite() {
            return Err(Error::invalid("gamma1d must be positive and finite"));
        }
        if !(self.gamma_nr >= 0.0) || !self.gamma_nr.is_finite() {
            return Err(Error::invalid("gamma_nr must be non-negative and finite"));
        }
        let scalars = [self.omega0, self.anharmonicity, self.qd, self.drive_freq];
        if scalars.iter().chain(&self.drive_amps).chain(&self.drive_phases).any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite parameter"));
        }
        Ok(())
    }

    /// γΣ = γ₁D + γ
    pub fn gamma_sigma(&self) -> f64 {
        self.gamma1d + self.gamma_nr
    }

    pub fn max_drive(&self) -> f64 {
        self.drive_amps.iter().fold(0.0, |m, g| m.max(g.abs()))
    }

    /// Pair-creation amplitudes `g̃ⱼ = gⱼ e^{−iφⱼ}` (the coefficient of
    /// `e^{−iΩt}` in `gⱼ cos(Ωt + φⱼ)`, times two).
    pub fn pair_drive(&self) -> DVector<C64> {
        DVector::from_iterator(
            self.n_qubits,
            self.drive_amps
                .iter()
                .zip(&self.drive_phases)
                .map(|(&g, &p)| C64::from_polar(g, -p)),
        )
    }

    /// `Ω − 2ω₀`
    pub fn pair_detuning(&self) -> f64 {
        self.drive_freq - 2.0 * self.omega0
    }

    pub fn scale_drive(&self, factor: f64) -> Self {
        let mut c = self.clone();
        c.drive_amps.iter_mut().for_each(|g| *g *= factor);
        c
    }

    /// Full basis with per-mode cutoff 2 (three-level qubits).
    pub fn default_basis(&self) -> Result<FockBasis> {
        FockBasis::new(self.n_qubits, 2, None)
    }

    /// Cutoff-2 basis restricted to at most two excitations in total.
    /// Exact for every observable at second order in the drive.
    pub fn pair_basis(&self) -> Result<FockBasis> {
        FockBasis::new(self.n_qubits, 2, Some(2))
    }

    fn check_basis(&self, basis: &FockBasis) -> Result<()> {
        if basis.n_modes() != self.n_qubits {
            return Err(Error::invalid(format!(
                "basis has {} modes, config has {} qubits",
                basis.n_modes(),
                self.n_qubits
            )));
        }
        Ok(())
    }
}

/// Photon Green matrix `D_jk = −iγ₁D e^{i·qd·|j−k|}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenMatrix(pub DMatrix<C64>);

pub fn photon_green(config: &SystemConfig) -> GreenMatrix {
    let n = config.n_qubits;
    GreenMatrix(DMatrix::from_fn(n, n, |j, k| {
        let sep = j.abs_diff(k) as f64;
        -I * config.gamma1d * C64::from_polar(1.0, config.qd * sep)
    }))
}

/// `γ_jk = −Im D_jk + δ_jk γ`
pub fn decay_matrix(config: &SystemConfig) -> DMatrix<f64> {
    let d = photon_green(config).0;
    let n = config.n_qubits;
    DMatrix::from_fn(n, n, |j, k| -d[(j, k)].im + if j == k { config.gamma_nr } else { 0.0 })
}

/// `H₀ = Σⱼ (ω₀ aⱼ†aⱼ + U/2 aⱼ†aⱼ†aⱼaⱼ) + Σⱼₖ Re D_jk aⱼ†aₖ`
pub fn build_h0(config: &SystemConfig, basis: &FockBasis) -> Result<OperatorMatrix> {
    config.check_basis(basis)?;
    let n = config.n_qubits;
    let d = photon_green(config).0;
    let a: Vec<OperatorMatrix> = (0..n).map(|j| basis.annihilation(j)).collect::<Result<_>>()?;
    let mut h = DMatrix::zeros(basis.dim(), basis.dim());
    for j in 0..n {
        let ad = a[j].adjoint();
        let num = &ad.0 * &a[j].0;
        let pair = &ad.0 * &ad.0 * &a[j].0 * &a[j].0;
        h += num * C64::from(config.omega0) + pair * C64::from(0.5 * config.anharmonicity);
        for k in 0..n {
            let t = d[(j, k)].re;
            if t != 0.0 {
                h += &ad.0 * &a[k].0 * C64::from(t);
            }
        }
    }
    Ok(OperatorMatrix(h))
}

/// `(aⱼ† + aⱼ)²`; the amplitude and time dependence are applied by the caller.
pub fn drive_operator(config: &SystemConfig, basis: &FockBasis, j: usize) -> Result<OperatorMatrix> {
    config.check_basis(basis)?;
    let a = basis.annihilation(j)?;
    let x = a.plus(&a.adjoint());
    Ok(x.dot(&x))
}

/// Emission direction along the waveguide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `p₋`
    Left,
    /// `p₊`
    Right,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Direction::Left => 1.0,
            Direction::Right => -1.0,
        }
    }
}

/// Phases `e^{±i·qd·j}` weighting qubit `j` in `p∓`.
pub fn direction_phases(config: &SystemConfig, direction: Direction) -> DVector<C64> {
    let s = direction.sign();
    DVector::from_fn(config.n_qubits, |j, _| C64::from_polar(1.0, s * config.qd * j as f64))
}

/// `p₋ = Σⱼ aⱼ e^{+i·qd·j}`, `p₊ = Σⱼ aⱼ e^{−i·qd·j}`
pub fn directional_operator(
    config: &SystemConfig,
    basis: &FockBasis,
    direction: Direction,
) -> Result<OperatorMatrix> {
    config.check_basis(basis)?;
    let phases = direction_phases(config, direction);
    let mut p = OperatorMatrix::zeros(basis.dim());
    for (j, ph) in phases.iter().enumerate() {
        p = p.plus(&basis.annihilation(j)?.scaled(*ph));
    }
    Ok(p)
}

/// Non-Hermitian Hamiltonian of the one- (`N×N`) or two-excitation
/// (`N²×N²`, pair index `i·N + j`) sector.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian {
    pub entries: DMatrix<C64>,
    pub excitation_sector: u8,
}

impl EffectiveHamiltonian {
    pub fn eigenvalues(&self) -> Vec<C64> {
        eigenvalues(self.entries.clone())
    }
}

/// `H = ω₀ + D − iγ`, with poles in the lower half plane.
pub fn single_excitation_hamiltonian(config: &SystemConfig) -> EffectiveHamiltonian {
    let n = config.n_qubits;
    let mut h = photon_green(config).0;
    for j in 0..n {
        h[(j, j)] += C64::new(config.omega0, -config.gamma_nr);
    }
    EffectiveHamiltonian {
        entries: h,
        excitation_sector: 1,
    }
}

/// `H⊗1 + 1⊗H`
pub(crate) fn pair_free_hamiltonian(h: &DMatrix<C64>) -> DMatrix<C64> {
    let id = identity(h.nrows());
    kron(h, &id) + kron(&id, h)
}

/// On-site interaction `V_{ij,kl} = δ_ij δ_kl δ_ik U`.
pub(crate) fn pair_interaction(n: usize, u: f64) -> DMatrix<C64> {
    let mut v = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        v[(i * n + i, i * n + i)] = C64::from(u);
    }
    v
}

/// `H⊗1 + 1⊗H + V` together with its eigenvalues, sorted by real part.
pub fn two_excitation_hamiltonian(config: &SystemConfig) -> (EffectiveHamiltonian, Vec<C64>) {
    let h = single_excitation_hamiltonian(config).entries;
    let h2 = pair_free_hamiltonian(&h) + pair_interaction(config.n_qubits, config.anharmonicity);
    let ham = EffectiveHamiltonian {
        entries: h2,
        excitation_sector: 2,
    };
    let mut ev = ham.eigenvalues();
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    (ham, ev)
}

/// Eigenvalues of `H⊗1 + 1⊗H + V` restricted to exchange-symmetric pair
/// states (the bosonic two-excitation sector), sorted by real part.
pub fn bosonic_pair_energies(config: &SystemConfig) -> Vec<C64> {
    let n = config.n_qubits;
    let (ham, _) = two_excitation_hamiltonian(config);
    let m = n * (n + 1) / 2;
    let mut p = DMatrix::<C64>::zeros(n * n, m);
    let mut col = 0;
    for i in 0..n {
        for j in i..n {
            if i == j {
                p[(i * n + i, col)] = C64::from(1.0);
            } else {
                let w = C64::from(std::f64::consts::FRAC_1_SQRT_2);
                p[(i * n + j, col)] = w;
                p[(j * n + i, col)] = w;
            }
            col += 1;
        }
    }
    let mut ev = eigenvalues(p.transpose() * ham.entries * p);
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    ev
}
