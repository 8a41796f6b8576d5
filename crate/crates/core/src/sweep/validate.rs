//! Acceptance suite: every engine cross-check with its tolerance.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Mutex;
use std::time::Instant;

use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::BrentOpt;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CODE_VERSION;
use crate::analytic;
use crate::diagrams::{self, PairProcess};
use crate::hilbert::FockBasis;
use crate::master::{self, DiagnosticsSummary, FloquetSolution, SpectrumEvaluator};
use crate::model::{self, Direction, SystemConfig};
use crate::quadrature::integrate_mapped;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Single-qubit closed forms and the optical theorem.
    Quick,
    Full,
}

impl std::str::FromStr for Level {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            _ => Err(crate::Error::Parse(format!("unknown validation level '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `measured < limit`
    Below,
    /// `measured >= limit`
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    #[serde(with = "crate::serde_nan::scalar")]
    pub measured: f64,
    pub limit: f64,
    pub bound: Bound,
    pub passed: bool,
}

impl CheckReport {
    fn new(name: impl Into<String>, measured: f64, limit: f64, bound: Bound) -> Self {
        let passed = match bound {
            Bound::Below => measured < limit,
            Bound::AtLeast => measured >= limit,
        };
        CheckReport {
            name: name.into(),
            measured,
            limit,
            bound,
            passed,
        }
    }

    fn below(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, limit, Bound::Below)
    }

    fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(name, measured, limit, Bound::AtLeast)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::Below => "<",
            Bound::AtLeast => ">=",
        };
        let mark = if self.passed { "" } else { " !" };
        write!(f, "{}={:.3e} ({op} {}){mark}", self.name, self.measured, short_exp(self.limit))
    }
}

/// `{:.3e}` without trailing mantissa zeros: `1e-8`, `1.508e-1`.
fn short_exp(x: f64) -> String {
    let s = format!("{x:.3e}");
    match s.split_once('e') {
        Some((m, e)) if m.contains('.') => format!("{}e{e}", m.trim_end_matches('0').trim_end_matches('.')),
        _ => s,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub checks: Vec<CheckReport>,
    /// Measured constants and other informational numbers.
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub runtime_seconds: f64,
    pub diagnostics: DiagnosticsSummary,
}

impl CriterionReport {
    fn check(&mut self, c: CheckReport) {
        self.checks.push(c);
    }

    fn value(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_string(), v);
    }

    /// Names of the failing checks.
    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {} ({:.1} s)", self.id, self.title, self.runtime_seconds)?;
        let shown: Vec<&CheckReport> = if self.passed {
            self.checks.iter().collect()
        } else {
            self.checks.iter().filter(|c| !c.passed).collect()
        };
        for (k, c) in shown.iter().enumerate() {
            write!(f, "{}{c}", if k == 0 { ": " } else { ", " })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub level: Level,
    pub code_version: String,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

/// Collects master-solve diagnostics from parallel workers.
#[derive(Default)]
struct Tally(Mutex<DiagnosticsSummary>);

impl Tally {
    fn solve(&self, config: &SystemConfig, basis: &FockBasis) -> Result<FloquetSolution> {
        let sol = master::stationary_rho(config, basis)?;
        self.0.lock().expect("tally lock").record(&sol.diagnostics);
        Ok(sol)
    }

    fn take(&self) -> DiagnosticsSummary {
        std::mem::take(&mut *self.0.lock().expect("tally lock"))
    }
}

struct Directional {
    i_minus: f64,
    i_plus: f64,
    g2: f64,
}

fn directional(tally: &Tally, config: &SystemConfig, basis: &FockBasis) -> Result<Directional> {
    let sol = tally.solve(config, basis)?;
    let pm = model::directional_operator(config, basis, Direction::Left)?;
    let pp = model::directional_operator(config, basis, Direction::Right)?;
    Ok(Directional {
        i_minus: master::emission_intensity(&sol, &pm)?,
        i_plus: master::emission_intensity(&sol, &pp)?,
        g2: master::g2_zero(&sol, &pm)?,
    })
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    // NaN propagates so a broken point fails the check
    it.into_iter().fold(0.0, |m, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    super::Axis::linspace(super::Parameter::Qd, lo, hi, n).values
}

fn spread(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo) / mean.abs()
}

fn random_config(rng: &mut ChaCha8Rng, n_max: usize, g_max: f64, gamma_max: f64) -> SystemConfig {
    let n = rng.gen_range(1..=n_max);
    let u = rng.gen_range(0.5..20.0);
    let omega0 = model::DEFAULT_OMEGA0;
    SystemConfig {
        n_qubits: n,
        omega0,
        gamma1d: 1.0,
        gamma_nr: if gamma_max > 0.0 { rng.gen_range(0.0..gamma_max) } else { 0.0 },
        anharmonicity: u,
        qd: rng.gen_range(0.1..3.0),
        drive_amps: (0..n).map(|_| rng.gen_range(0.25 * g_max..g_max)).collect(),
        drive_phases: (0..n).map(|_| rng.gen_range(0.0..TAU)).collect(),
        drive_freq: 2.0 * omega0 + rng.gen_range(-5.0..u + 5.0),
    }
}

// -- criterion 1 -------------------------------------------------------------

fn single_intensity(r: &mut CriterionReport, tally: &Tally) -> Result<()> {
    let base = SystemConfig::single(0.01, 10.0, 0.0);
    let w = 2.0 * base.omega0;
    let grid = linspace(w - 20.0, w + base.anharmonicity + 20.0, 200);
    let errs = grid
        .par_iter()
        .map(|&om| {
            let mut c = base.clone();
            c.drive_freq = om;
            let basis = c.default_basis()?;
            let sol = tally.solve(&c, &basis)?;
            let a = basis.annihilation(0)?;
            Ok(rel(master::emission_intensity(&sol, &a)?, analytic::i1_single(&c)))
        })
        .collect::<Result<Vec<f64>>>()?;
    r.check(CheckReport::below("max_rel_error", max_of(errs), 1e-8));
    Ok(())
}

// -- criterion 2 -------------------------------------------------------------

/// Resonances of `f(δ) = P₃(δ)/Q₄(δ)`, two Lorentzians with linear
/// numerators, by linear least squares on `f·Q₄ = P₃`. Returns the
/// (center, half-width) of each pole pair, sorted by center.
fn fit_two_resonances(delta: &[f64], f: &[f64]) -> Vec<(f64, f64)> {
    let m = delta.len();
    let scale = delta.iter().fold(0.0f64, |a, d| a.max(d.abs()));
    let x: Vec<f64> = delta.iter().map(|d| d / scale).collect();
    let a = DMatrix::from_fn(m, 8, |i, k| {
        if k < 4 {
            x[i].powi(k as i32)
        } else {
            -f[i] * x[i].powi(k as i32 - 4)
        }
    });
    let b = DVector::from_fn(m, |i, _| f[i] * x[i].powi(4));
    let q = a.svd(true, true).solve(&b, 1e-300).expect("SVD with vectors");
    // companion matrix of x⁴ + q₃x³ + q₂x² + q₁x + q₀
    let mut comp = DMatrix::<f64>::zeros(4, 4);
    for k in 0..4 {
        comp[(k, 3)] = -q[4 + k];
    }
    for k in 1..4 {
        comp[(k, k - 1)] = 1.0;
    }
    let mut poles: Vec<(f64, f64)> = comp
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im > 0.0)
        .map(|z| (z.re * scale, z.im * scale))
        .collect();
    poles.sort_by(|p, q| p.0.total_cmp(&q.0));
    poles
}

fn single_spectrum(r: &mut CriterionReport, tally: &Tally) -> Result<()> {
    let mut c = SystemConfig::single(0.1, 10.0, 0.0);
    let (w0, u) = (c.omega0, c.anharmonicity);
    c.drive_freq = 2.0 * w0 + u;
    let basis = c.default_basis()?;
    let sol = tally.solve(&c, &basis)?;
    let a = basis.annihilation(0)?;
    let eval = SpectrumEvaluator::new(&sol, &a)?;
    let grid = linspace(w0 - 10.0, w0 + u + 10.0, 200);
    let step = grid[1] - grid[0];
    let s: Vec<f64> = grid.par_iter().map(|&w| eval.at(w)).collect::<Result<_>>()?;
    let errs = grid
        .iter()
        .zip(&s)
        .map(|(&w, &v)| rel(v, analytic::spectrum_single(&c, w)));
    r.check(CheckReport::below("max_rel_error", max_of(errs), 1e-6));

    let mut peaks: Vec<usize> = (1..grid.len() - 1)
        .filter(|&k| s[k] > s[k - 1] && s[k] > s[k + 1])
        .collect();
    peaks.sort_by(|x, y| s[*y].total_cmp(&s[*x]));
    peaks.truncate(2);
    peaks.sort_unstable();
    let gs = c.gamma_sigma();
    if peaks.len() == 2 {
        r.check(CheckReport::below("lower_peak_offset", (grid[peaks[0]] - w0).abs(), step));
        r.check(CheckReport::below("upper_peak_offset", (grid[peaks[1]] - w0 - u).abs(), step));
    } else {
        r.check(CheckReport::at_least("peaks_found", peaks.len() as f64, 2.0));
    }

    let delta: Vec<f64> = grid.iter().map(|w| w - w0).collect();
    let poles = fit_two_resonances(&delta, &s);
    if poles.len() == 2 {
        for (k, (name, want)) in [("lower", gs), ("upper", 3.0 * gs)].into_iter().enumerate() {
            r.value(&format!("{name}_fitted_center"), poles[k].0);
            r.value(&format!("{name}_fitted_half_width"), poles[k].1);
            r.check(CheckReport::below(format!("{name}_width_rel_error"), rel(poles[k].1, want), 0.05));
        }
    } else {
        r.check(CheckReport::at_least("resonances_fitted", poles.len() as f64, 2.0));
    }

    let i1 = analytic::i1_single(&c);
    let total = integrate_mapped(
        |w| eval.at(w).unwrap_or(f64::NAN),
        0.0,
        f64::INFINITY,
        w0 + 0.5 * u,
        gs,
        &[w0, w0 + u],
        1e-7 * i1,
    );
    r.value("spectrum_integral_over_i1", total.value / i1);
    r.check(CheckReport::below("integral_rel_error", rel(total.value, i1), 5e-3));
    Ok(())
}

// -- criterion 3 -------------------------------------------------------------

fn second_order_scaling(r: &mut CriterionReport, tally: &Tally) -> Result<()> {
    let mut one = SystemConfig::single(0.01, 10.0, 0.0);
    one.drive_freq += 0.7;
    let mut two = SystemConfig::uniform(2, 0.01, 4.0, 0.1, 0.7);
    two.drive_amps[1] = 0.015;
    two.drive_phases[1] = 1.1;
    two.drive_freq = 2.0 * two.omega0 + 2.0;
    let mut three = SystemConfig::uniform(3, 0.01, 10.0, 0.05, 0.4);
    three.drive_phases = vec![0.0, 0.5, 2.0];

    let observe = |c: &SystemConfig| -> Result<Vec<f64>> {
        let basis = c.default_basis()?;
        let sol = tally.solve(c, &basis)?;
        let pm = model::directional_operator(c, &basis, Direction::Left)?;
        let pp = model::directional_operator(c, &basis, Direction::Right)?;
        let spec = SpectrumEvaluator::new(&sol, &pm)?;
        let mut v = vec![
            master::emission_intensity(&sol, &pm)?,
            master::emission_intensity(&sol, &pp)?,
            master::g2_zero(&sol, &pm)?,
        ];
        // one dense resolvent per frequency; too slow for three full qubits
        if c.n_qubits <= 2 {
            for dw in [0.0, 3.0, c.anharmonicity] {
                v.push(spec.at(c.omega0 + dw)?);
            }
        }
        Ok(v)
    };
    let configs: Vec<SystemConfig> = [one, two, three]
        .into_iter()
        .flat_map(|c| [c.scale_drive(0.5), c])
        .collect();
    let values = configs.par_iter().map(observe).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for pair in values.chunks(2) {
        for (half, full) in pair[0].iter().zip(&pair[1]) {
            worst = max_of([worst, (full / half / 4.0 - 1.0).abs()]);
        }
    }
    r.check(CheckReport::below("max_ratio_deviation", worst, 1e-10));
    Ok(())
}

// -- criterion 4 -------------------------------------------------------------

fn symmetric_pair(r: &mut CriterionReport, tally: &Tally) -> Result<()> {
    for qd in [0.3, 1.0, 2.0] {
        let base = SystemConfig::uniform(2, 0.01, 10.0, 0.0, qd);
        let basis = base.default_basis()?;
        let w = 2.0 * base.omega0;
        let grid = linspace(w - 10.0, w + base.anharmonicity + 10.0, 100);
        let step = grid[1] - grid[0];
        let at = |om: f64| {
            let mut c = base.clone();
            c.drive_freq = om;
            c
        };
        let pts = grid
            .par_iter()
            .map(|&om| {
                let c = at(om);
                let m = directional(tally, &c, &basis)?;
                Ok((m, analytic::two_qubit_symmetric(&c)))
            })
            .collect::<Result<Vec<_>>>()?;
        let i_err = max_of(
            pts.iter()
                .flat_map(|(m, s)| [rel(m.i_minus, s.intensity()), rel(m.i_plus, s.intensity())]),
        );
        let g_max = pts.iter().map(|(m, _)| m.g2).fold(0.0, f64::max);
        let g_err = max_of(pts.iter().map(|(m, s)| (m.g2 - s.g2_mm.value).abs())) / g_max;
        r.check(CheckReport::below(format!("qd={qd}: intensity_rel_error"), i_err, 1e-4));
        r.check(CheckReport::below(format!("qd={qd}: g2_error_over_max"), g_err, 1e-4));

        let s0 = analytic::two_qubit_symmetric(&base);
        if let Some(z) = s0.g2_zero_freq {
            let g_zero = directional(tally, &at(z.value), &basis)?.g2;
            r.check(CheckReport::below(format!("qd={qd}: g2_at_zero_over_max"), g_zero / g_max, 1e-6));
        }
        // nearest interior local minimum of I₋ to the predicted dip
        let want = s0.intensity_min_freq.value;
        let y: Vec<f64> = pts.iter().map(|(m, _)| m.i_minus).collect();
        let dip = (1..y.len() - 1)
            .filter(|&k| y[k] < y[k - 1] && y[k] < y[k + 1])
            .min_by(|&a, &b| (grid[a] - want).abs().total_cmp(&(grid[b] - want).abs()));
        let offset = match dip {
            Some(k) => {
                r.value(&format!("qd={qd}: intensity_min_detuning"), grid[k] - w);
                (grid[k] - want).abs() / step
            }
            None => {
                r.notes.push(format!("qd={qd}: intensity has no interior local minimum"));
                f64::INFINITY
            }
        };
        r.check(CheckReport::below(format!("qd={qd}: intensity_min_offset_steps"), offset, 2.0 + 1e-9));
    }
    Ok(())
}

// -- criterion 5 -------------------------------------------------------------

fn high_u_pair(r: &mut CriterionReport, tally: &Tally) -> Result<()> {
    let u = 100.0;
    let mut base = SystemConfig::uniform(2, 0.01, u, 0.0, 0.0);
    base.drive_freq = 2.0 * base.omega0 + u;
    let basis = base.default_basis()?;
    let qds = linspace(0.02, PI - 0.02, 21);
    let phis = linspace(0.0, TAU, 21);
    let i1 = analytic::i1_single(&base);
    let pts = (0..qds.len() * phis.len())
        .into_par_iter()
        .map(|k| {
            let mut c = base.clone();
            c.qd = qds[k / phis.len()];
            c.drive_phases[1] = phis[k % phis.len()];
            let m = directional(tally, &c, &basis)?;
            Ok((m, analytic::two_qubit_high_u(&c)))
        })
        .collect::<Result<Vec<_>>>()?;
    let i_err = max_of(pts.iter().map(|(m, h)| rel(m.i_minus / i1, h.i_minus.value / i1)));
    // G² vanishes on a line; compare against its maximum 2·I₁
    let g_err = max_of(pts.iter().map(|(m, h)| (m.g2 - h.g2_mm.value).abs() / (2.0 * i1)));
    r.check(CheckReport::below("intensity_rel_error", i_err, 0.02));
    r.check(CheckReport::below("g2_error_over_max", g_err, 0.02));

    let dir: Vec<f64> = pts
        .iter()
        .map(|(m, _)| (m.i_minus - m.i_plus) / (m.i_minus + m.i_plus))
        .collect();
    let k = (0..dir.len()).max_by(|&x, &y| dir[x].total_cmp(&dir[y])).expect("grid");
    let (want, qd_star, phi_star) = analytic::max_directivity_high_u();
    r.value("directivity_max", dir[k]);
    r.value("directivity_max_qd", qds[k / phis.len()]);
    r.value("directivity_max_phi", phis[k % phis.len()]);
    r.check(CheckReport::below("directivity_max_rel_error", rel(dir[k], want), 0.01));
    let dq = (qds[k / phis.len()] - qd_star).abs() / (qds[1] - qds[0]);
    let dp = (phis[k % phis.len()] - phi_star).abs() / (phis[1] - phis[0]);
    r.check(CheckReport::below("directivity_qd_offset_steps", dq, 2.0 + 1e-9));
    r.check(CheckReport::below("directivity_phi_offset_steps", dp, 2.0 + 1e-9));
    Ok(())
}

// -- criterion 6 -------------------------------------------------------------

fn optical_theorem(r: &mut CriterionReport, tally: &Tally) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let configs: Vec<SystemConfig> = (0..10).map(|_| random_config(&mut rng, 3, 0.02, 0.0)).collect();
    let rows = configs
        .par_iter()
        .map(|c| {
            let full = diagrams::optical_theorem(c)?.residual;
            let half = diagrams::optical_theorem(&c.scale_drive(0.5))?.residual;
            let m = directional(tally, c, &c.default_basis()?)?;
            let sum = m.i_minus + m.i_plus;
            Ok((
                full / half,
                sum / diagrams::intensity_sum_unitarity(c, PairProcess::WithCounterRotating)?,
                sum / diagrams::intensity_sum_unitarity(c, PairProcess::Resonant)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let scaling = max_of(rows.iter().map(|x| (x.0 / 16.0 - 1.0).abs()));
    let ratios: Vec<f64> = rows.iter().map(|x| x.1).collect();
    let resonant: Vec<f64> = rows.iter().map(|x| x.2).collect();
    r.check(CheckReport::below("residual_scaling_deviation", scaling, 0.05));
    r.check(CheckReport::below("master_over_unitarity_spread", spread(&ratios), 1e-6));
    r.value("master_over_unitarity_constant", ratios.iter().sum::<f64>() / ratios.len() as f64);
    r.value("resonant_only_spread", spread(&resonant));
    Ok(())
}

// -- criterion 7 -------------------------------------------------------------

fn cross_engine_g2(r: &mut CriterionReport, tally: &Tally) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let configs: Vec<SystemConfig> = (0..20).map(|_| random_config(&mut rng, 3, 0.02, 0.2)).collect();
    let rows = configs
        .par_iter()
        .map(|c| {
            let basis = c.default_basis()?;
            let m = directional(tally, c, &basis)?.g2;
            Ok((
                m / diagrams::g2_zero_diagram(c, PairProcess::WithCounterRotating)?,
                m / diagrams::g2_zero_diagram(c, PairProcess::Resonant)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = rows.iter().map(|x| x.0).collect();
    let resonant: Vec<f64> = rows.iter().map(|x| x.1).collect();
    r.check(CheckReport::below("master_over_diagram_spread", spread(&ratios), 1e-6));
    r.value("master_over_diagram_constant", ratios.iter().sum::<f64>() / ratios.len() as f64);
    r.value("resonant_only_spread", spread(&resonant));
    Ok(())
}

// -- criterion 8 -------------------------------------------------------------

fn pair_propagator(r: &mut CriterionReport, _tally: &Tally) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let configs: Vec<SystemConfig> = (0..5)
        .map(|_| {
            let mut c = SystemConfig::uniform(2, 0.01, 10.0, 0.0, rng.gen_range(0.1..3.0));
            c.drive_freq = 2.0 * c.omega0 + rng.gen_range(-5.0..15.0);
            c
        })
        .collect();
    let errs = configs
        .par_iter()
        .map(|c| {
            let closed = diagrams::pair_propagator(c)?.sigma;
            let quad = diagrams::pair_propagator_quadrature(c, 1e-12)?;
            Ok((closed.clone() - quad).iter().map(|z| z.norm()).fold(0.0, f64::max)
                / closed.iter().map(|z| z.norm()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    r.check(CheckReport::below("max_rel_error", max_of(errs), 1e-6));
    Ok(())
}

// -- criterion 9 -------------------------------------------------------------

struct NegG2<'a> {
    base: &'a SystemConfig,
    basis: &'a FockBasis,
    tally: &'a Tally,
}

impl NegG2<'_> {
    fn g2(&self, detuning: f64) -> Result<f64> {
        let mut c = self.base.clone();
        c.drive_freq = 2.0 * c.omega0 + detuning;
        let sol = self.tally.solve(&c, self.basis)?;
        let pm = model::directional_operator(&c, self.basis, Direction::Left)?;
        master::g2_zero(&sol, &pm)
    }
}

impl CostFunction for NegG2<'_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> std::result::Result<f64, argmin::core::Error> {
        self.g2(*x).map(|g| -g).map_err(argmin::core::Error::msg)
    }
}

/// Least-squares `y = s·x + c·x²` (through the origin); returns `s`.
fn origin_quadratic_slope(pts: &[(f64, f64)]) -> f64 {
    let (mut s2, mut s3, mut s4, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
        y1 += y * x;
        y2 += y * x * x;
    }
    (y1 * s4 - y2 * s3) / (s2 * s4 - s3 * s3)
}

fn subradiant_ridges(r: &mut CriterionReport, tally: &Tally) -> Result<()> {
    let mut base = SystemConfig::uniform(4, 0.1, 10.0, 0.0, 0.0);
    base.drive_amps = vec![0.1, 0.0, 0.0, 0.0];
    let basis = FockBasis::new(4, 2, Some(2))?;
    let qds = linspace(0.02, 0.2, 61);
    let det = linspace(-1.5, 0.5, 61);
    let columns = qds
        .par_iter()
        .map(|&qd| {
            let mut c = base.clone();
            c.qd = qd;
            let f = NegG2 {
                base: &c,
                basis: &basis,
                tally,
            };
            let y: Vec<f64> = det.iter().map(|&d| f.g2(d)).collect::<Result<_>>()?;
            let mut ridges = vec![];
            for k in (1..det.len() - 1).filter(|&k| y[k] > y[k - 1] && y[k] > y[k + 1]) {
                let solver = BrentOpt::new(det[k - 1], det[k + 1]);
                let res = Executor::new(
                    NegG2 {
                        base: &c,
                        basis: &basis,
                        tally,
                    },
                    solver,
                )
                .configure(|s| s.max_iters(200))
                .run()
                .map_err(|e| {
                    log::warn!("ridge refinement at qd = {qd}: {e}");
                    crate::Error::Numerical {
                        context: "ridge refinement",
                        pivot_ratio: f64::NAN,
                    }
                })?;
                ridges.push(res.state().best_param.unwrap_or(det[k]));
            }
            Ok((qd, ridges))
        })
        .collect::<Result<Vec<_>>>()?;

    let (mut upper, mut lower) = (vec![], vec![]);
    for (qd, ridges) in &columns {
        for &x in ridges {
            if x > -3.0 * qd {
                upper.push((*qd, x));
            } else {
                lower.push((*qd, x));
            }
        }
    }
    // subradiant energies are linear in qd; read the slopes at qd = 1
    let mut unit = base.clone();
    unit.qd = 1.0;
    let (e1, e2) = analytic::subradiant_energies_n4(&unit);
    let w = 2.0 * base.omega0;
    for (name, pts, slope_want) in [("upper", &upper, e1.value - w), ("lower", &lower, e2.value - w)] {
        r.value(&format!("{name}_ridge_points"), pts.len() as f64);
        if pts.len() < 3 {
            r.check(CheckReport::at_least(format!("{name}_ridge_points"), pts.len() as f64, 3.0));
            continue;
        }
        let s = origin_quadratic_slope(pts);
        r.value(&format!("{name}_ridge_slope"), s);
        r.check(CheckReport::below(format!("{name}_slope_rel_error"), rel(s, slope_want), 0.10));
    }
    Ok(())
}

// -- driver --------------------------------------------------------------------

type CriterionFn = fn(&mut CriterionReport, &Tally) -> Result<()>;

const CRITERIA: [(u8, &str, f64, CriterionFn, bool); 9] = [
    (1, "single-qubit intensity vs closed form", 5.0, single_intensity, true),
    (2, "single-qubit spectrum vs closed form", 30.0, single_spectrum, true),
    (3, "second-order drive scaling", 10.0, second_order_scaling, false),
    (4, "two-qubit symmetric closed forms", 120.0, symmetric_pair, false),
    (5, "high-U two-qubit interference", 300.0, high_u_pair, false),
    (6, "optical theorem", 60.0, optical_theorem, true),
    (7, "cross-engine G2", 120.0, cross_engine_g2, false),
    (8, "pair propagator vs quadrature", 30.0, pair_propagator, false),
    (9, "four-qubit subradiant ridges", 900.0, subradiant_ridges, false),
];

fn run_one(id: u8, title: &str, limit: f64, f: CriterionFn) -> CriterionReport {
    let tally = Tally::default();
    let mut r = CriterionReport {
        id,
        title: title.to_string(),
        passed: false,
        checks: vec![],
        values: BTreeMap::new(),
        notes: vec![],
        runtime_seconds: 0.0,
        diagnostics: DiagnosticsSummary::default(),
    };
    let start = Instant::now();
    if let Err(e) = f(&mut r, &tally) {
        r.notes.push(format!("evaluation failed: {e}"));
        r.check(CheckReport::at_least("completed", 0.0, 1.0));
    }
    r.runtime_seconds = start.elapsed().as_secs_f64();
    r.check(CheckReport::below("runtime_s", r.runtime_seconds, limit));
    r.diagnostics = tally.take();
    r.passed = r.checks.iter().all(|c| c.passed);
    r
}

fn invariants(prior: &[CriterionReport]) -> CriterionReport {
    let start = Instant::now();
    let d = prior
        .iter()
        .fold(DiagnosticsSummary::default(), |acc, r| acc.merge(&r.diagnostics));
    let mut r = CriterionReport {
        id: 10,
        title: "density-matrix invariants over all solves".into(),
        passed: false,
        checks: vec![
            CheckReport::below("max_trace_deviation", d.max_trace_deviation, 1e-12),
            CheckReport::below("max_hermiticity_pre", d.max_hermiticity_pre, 1e-9),
            CheckReport::at_least("min_positivity_margin", d.min_positivity_margin, 0.0),
        ],
        values: BTreeMap::new(),
        notes: vec![],
        runtime_seconds: 0.0,
        diagnostics: d,
    };
    r.value("solves", d.solves as f64);
    r.value("max_residual", d.max_residual);
    r.value("min_pivot_ratio", d.min_pivot_ratio);
    r.runtime_seconds = start.elapsed().as_secs_f64();
    r.passed = r.checks.iter().all(|c| c.passed);
    r
}

/// Runs the acceptance criteria. `Quick` covers 1, 2, 6 and the invariants
/// over those solves. `on_each` sees each criterion as it finishes.
pub fn validate_with<F: FnMut(&CriterionReport)>(level: Level, mut on_each: F) -> ValidationReport {
    let mut criteria = vec![];
    for (id, title, limit, f, quick) in CRITERIA {
        if level == Level::Quick && !quick {
            continue;
        }
        let r = run_one(id, title, limit, f);
        on_each(&r);
        criteria.push(r);
    }
    let inv = invariants(&criteria);
    on_each(&inv);
    criteria.push(inv);
    ValidationReport {
        level,
        code_version: CODE_VERSION.to_string(),
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

pub fn validate(level: Level) -> ValidationReport {
    validate_with(level, |_| {})
}
