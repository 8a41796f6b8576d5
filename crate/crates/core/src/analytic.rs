//! Closed-form reference results.
//!
//! Each evaluator returns a [`ClosedFormResult`] tagged with the regime in
//! which the expression holds. Detuning conventions: `Δ = Ω − 2ω₀`,
//! `δ = ω − ω₀`. Rates in the two-qubit forms are `γ₁D` (lossless qubits).
//!
//! Intensity normalization: every intensity here is `⟨p†p⟩` as produced by
//! the master engine, except [`two_qubit_symmetric`]'s
//! `intensity_unitarity`, which follows the optical-theorem bookkeeping and
//! is twice as large (see [`UNITARITY_INTENSITY_FACTOR`]).

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::model::SystemConfig;

/// Ratio between intensities balanced against `2|s|²` in the unitarity
/// relation and the photon number `⟨p†p⟩`.
pub const UNITARITY_INTENSITY_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    SingleIntensity,
    SingleSpectrum,
    PairIntensityHighU,
    PairG2HighU,
    DirectionalIntensityHighU,
    DirectionalG2HighU,
    SymmetricG2,
    SymmetricIntensity,
    G2ZeroFrequency,
    IntensityMinFrequency,
    SubradiantN4,
}

impl FormulaId {
    pub const ALL: [FormulaId; 11] = [
        FormulaId::SingleIntensity,
        FormulaId::SingleSpectrum,
        FormulaId::PairIntensityHighU,
        FormulaId::PairG2HighU,
        FormulaId::DirectionalIntensityHighU,
        FormulaId::DirectionalG2HighU,
        FormulaId::SymmetricG2,
        FormulaId::SymmetricIntensity,
        FormulaId::G2ZeroFrequency,
        FormulaId::IntensityMinFrequency,
        FormulaId::SubradiantN4,
    ];

    pub fn validity_note(self) -> &'static str {
        use FormulaId::*;
        match self {
            SingleIntensity => "N = 1, any Ω; exact at second order in g",
            SingleSpectrum => "N = 1, Ω = 2ω₀ + U",
            PairIntensityHighU | PairG2HighU => {
                "N = 2, g₁ = g₂, γ = 0, U ≫ γ₁D, Ω = 2ω₀ + U"
            }
            DirectionalIntensityHighU | DirectionalG2HighU => {
                "N = 2, γ = 0, U ≫ γ₁D, Ω near 2ω₀ + U"
            }
            SymmetricG2 | SymmetricIntensity => "N = 2, g₁ = g₂, γ = 0, any U and Ω",
            G2ZeroFrequency => "N = 2, g₁ = g₂, γ = 0; no finite zero at qd = π/2",
            IntensityMinFrequency => "N = 2, g₁ = g₂, γ = 0; approximate location",
            SubradiantN4 => "N = 4, qd ≪ 1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormResult {
    pub value: f64,
    pub formula_id: FormulaId,
    pub validity_note: &'static str,
}

impl ClosedFormResult {
    fn new(formula_id: FormulaId, value: f64) -> Self {
        ClosedFormResult {
            value,
            formula_id,
            validity_note: formula_id.validity_note(),
        }
    }
}

/// Photon number `⟨a†a⟩` emitted by one modulated qubit, including the
/// counter-rotating pair process.
pub fn i1_single(config: &SystemConfig) -> f64 {
    let g = config.drive_amps[0];
    let gs = config.gamma_sigma();
    let om = config.drive_freq;
    let w = config.anharmonicity + 2.0 * config.omega0;
    let g4 = 4.0 * gs * gs;
    4.0 * g * g * (om * om + w * w + g4) / ((g4 + (om - w).powi(2)) * (g4 + (om + w).powi(2)))
}

pub fn i1_single_result(config: &SystemConfig) -> ClosedFormResult {
    ClosedFormResult::new(FormulaId::SingleIntensity, i1_single(config))
}

/// Single-qubit emission spectrum at resonant modulation.
pub fn spectrum_single(config: &SystemConfig, omega: f64) -> f64 {
    let i1 = i1_single(config);
    let gs = config.gamma_sigma();
    let u = config.anharmonicity;
    let d = omega - config.omega0;
    let low = (8.0 * gs * gs + u * (u + 2.0 * d)) / (d * d + gs * gs);
    let high = u * (3.0 * u - 2.0 * (d - u)) / ((d - u).powi(2) + 9.0 * gs * gs);
    i1 / (2.0 * PI) * gs / (u * u + 4.0 * gs * gs) * (low + high)
}

pub fn spectrum_single_result(config: &SystemConfig, omega: f64) -> ClosedFormResult {
    ClosedFormResult::new(FormulaId::SingleSpectrum, spectrum_single(config, omega))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HighUPair {
    pub i_minus: ClosedFormResult,
    pub i_plus: ClosedFormResult,
    pub g2_mm: ClosedFormResult,
}

impl HighUPair {
    pub fn directivity(&self) -> f64 {
        (self.i_minus.value - self.i_plus.value) / (self.i_minus.value + self.i_plus.value)
    }
}

fn two_qubits(config: &SystemConfig) {
    assert_eq!(config.n_qubits, 2, "two-qubit closed form needs N = 2");
}

/// General-amplitude high-U two-qubit results (arbitrary `g₁`, `g₂` and
/// detuning from `2ω₀ + U`).
pub fn two_qubit_high_u_general(config: &SystemConfig) -> HighUPair {
    two_qubits(config);
    let g = config.pair_drive();
    let (g1, g2) = (g[0], g[1]);
    let gam = config.gamma1d;
    let c = (2.0 * config.qd).cos();
    let s = (2.0 * config.qd).sin();
    let den = (config.drive_freq - 2.0 * config.omega0 - config.anharmonicity).powi(2)
        + 4.0 * gam * gam;
    let directional = |a: C64, b: C64| {
        ((7.0 - 3.0 * c) * a.norm_sqr() + (5.0 - c) * b.norm_sqr() + 2.0 * s * (a * b.conj()).im)
            / ((3.0 - c) * den)
    };
    let g2mm = (g1 + g2 * C64::from_polar(1.0, 2.0 * config.qd)).norm_sqr() / den;
    HighUPair {
        i_minus: ClosedFormResult::new(FormulaId::DirectionalIntensityHighU, directional(g1, g2)),
        // mirror image: swap the qubits
        i_plus: ClosedFormResult::new(FormulaId::DirectionalIntensityHighU, directional(g2, g1)),
        g2_mm: ClosedFormResult::new(FormulaId::DirectionalG2HighU, g2mm),
    }
}

/// Equal-amplitude high-U two-qubit results, expressed through the
/// single-qubit intensity and the relative phase `φ = φ₂ − φ₁`.
pub fn two_qubit_high_u(config: &SystemConfig) -> HighUPair {
    two_qubits(config);
    let i1 = i1_single(config);
    let phi = config.drive_phases[1] - config.drive_phases[0];
    let q2 = 2.0 * config.qd;
    let interference = phi.sin() * q2.sin() / (3.0 - q2.cos());
    HighUPair {
        i_minus: ClosedFormResult::new(FormulaId::PairIntensityHighU, i1 * (2.0 + interference)),
        i_plus: ClosedFormResult::new(FormulaId::PairIntensityHighU, i1 * (2.0 - interference)),
        g2_mm: ClosedFormResult::new(FormulaId::PairG2HighU, i1 * (1.0 + (q2 - phi).cos())),
    }
}

/// Directivity `(I₋−I₊)/(I₋+I₊)` of the high-U pair.
pub fn directivity_high_u(qd: f64, phi: f64) -> f64 {
    let q2 = 2.0 * qd;
    phi.sin() * q2.sin() / (2.0 * (3.0 - q2.cos()))
}

/// Largest high-U directivity, `√2/8`, and where it occurs `(qd, φ)`.
pub fn max_directivity_high_u() -> (f64, f64, f64) {
    (2f64.sqrt() / 8.0, (2.0 * 2f64.sqrt()).atan() / 2.0, PI / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricPair {
    pub g2_mm: ClosedFormResult,
    /// `I₊ = I₋` in unitarity normalization (twice `⟨p†p⟩`).
    pub intensity_unitarity: ClosedFormResult,
    /// Pair frequency `Ω` where `G²₋₋` vanishes; `None` at `qd = π/2`.
    pub g2_zero_freq: Option<ClosedFormResult>,
    pub intensity_min_freq: ClosedFormResult,
}

impl SymmetricPair {
    /// `I₊ = I₋` as a photon number `⟨p†p⟩`.
    pub fn intensity(&self) -> f64 {
        self.intensity_unitarity.value / UNITARITY_INTENSITY_FACTOR
    }
}

fn symmetric_denominator(config: &SystemConfig) -> C64 {
    let gam = config.gamma1d;
    let d = config.pair_detuning();
    let i2g = C64::new(0.0, 2.0 * gam);
    (d + i2g) * (d - config.anharmonicity + i2g)
        + 4.0 * gam * gam * C64::from_polar(1.0, 2.0 * config.qd)
}

/// Two equally driven lossless qubits at any `U` and `Ω`. Uses `g₁`.
pub fn two_qubit_symmetric(config: &SystemConfig) -> SymmetricPair {
    two_qubits(config);
    let g2 = config.drive_amps[0].powi(2);
    let gam = config.gamma1d;
    let qd = config.qd;
    let d = config.pair_detuning();
    let den = symmetric_denominator(config);
    let g2mm = 4.0 * g2 * ((d * qd.cos() + 2.0 * gam * qd.sin()) / den).norm_sqr();
    let s2 = (2.0 * qd).sin();
    let num = (d + gam * s2).powi(2) + 2.0 * gam * gam * (3.0 - (2.0 * qd).cos()) * qd.sin().powi(2);
    let intensity = 8.0 * g2 * num / den.norm_sqr();

    let zero = if qd.cos().abs() < 1e-12 {
        None
    } else {
        Some(ClosedFormResult::new(
            FormulaId::G2ZeroFrequency,
            2.0 * config.omega0 - 2.0 * gam * qd.tan(),
        ))
    };
    SymmetricPair {
        g2_mm: ClosedFormResult::new(FormulaId::SymmetricG2, g2mm),
        intensity_unitarity: ClosedFormResult::new(FormulaId::SymmetricIntensity, intensity),
        g2_zero_freq: zero,
        intensity_min_freq: ClosedFormResult::new(
            FormulaId::IntensityMinFrequency,
            2.0 * config.omega0 - gam * s2,
        ),
    }
}

/// Pair energies of the two doubly excited subradiant states of four
/// closely spaced qubits.
pub fn subradiant_energies_n4(config: &SystemConfig) -> (ClosedFormResult, ClosedFormResult) {
    let base = 2.0 * config.omega0;
    let x = config.gamma1d * config.qd;
    (
        ClosedFormResult::new(FormulaId::SubradiantN4, base - 2.0 * x),
        ClosedFormResult::new(FormulaId::SubradiantN4, base - 14.0 / 3.0 * x),
    )
}
