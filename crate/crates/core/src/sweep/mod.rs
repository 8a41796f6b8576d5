//! Two-dimensional parameter scans over the three engines, figure presets,
//! CSV/JSON output and the validation suite.

mod io;
mod presets;
mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, FormulaId};
use crate::diagrams::{self, PairProcess, MAX_FOUR_COPY_QUBITS};
use crate::hilbert::{FockBasis, OperatorMatrix};
use crate::master::{self, DiagnosticsSummary, SolveDiagnostics, SpectrumEvaluator};
use crate::model::{self, Direction, SystemConfig};
use crate::{Error, Result};

pub use io::{read_csv, write_csv, write_json, write_result, CsvTable, UNITS_LINE};
pub use presets::{figure_preset, FIGURE_IDS};
pub use validate::{validate, validate_with, Bound, CheckReport, CriterionReport, Level, ValidationReport};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Scanned quantity. Frequencies are absolute; outputs report detunings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Parameter {
    /// Modulation frequency `Ω`.
    Omega,
    Qd,
    /// Drive phase of qubit `j` (zero-based; written `phi_{j+1}`).
    Phi(usize),
    U,
    /// Emission frequency `ω` of the spectrum.
    OmegaScan,
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parameter::Omega => write!(f, "Omega"),
            Parameter::Qd => write!(f, "qd"),
            Parameter::Phi(j) => write!(f, "phi_{}", j + 1),
            Parameter::U => write!(f, "U"),
            Parameter::OmegaScan => write!(f, "omega_scan"),
        }
    }
}

impl FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "Omega" => Parameter::Omega,
            "qd" => Parameter::Qd,
            "U" => Parameter::U,
            "omega_scan" | "omega" => Parameter::OmegaScan,
            _ => {
                let j: usize = s
                    .strip_prefix("phi_")
                    .and_then(|k| k.parse().ok())
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| Error::Parse(format!("unknown scan parameter '{s}'")))?;
                Parameter::Phi(j - 1)
            }
        })
    }
}

impl TryFrom<String> for Parameter {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Parameter> for String {
    fn from(p: Parameter) -> String {
        p.to_string()
    }
}

impl Parameter {
    /// Column label of the reported axis values.
    pub fn label(self) -> String {
        match self {
            Parameter::Omega => "Omega_minus_2omega0".into(),
            Parameter::OmegaScan => "omega_minus_omega0".into(),
            p => p.to_string(),
        }
    }

    fn reported(self, base: &SystemConfig, v: f64) -> f64 {
        match self {
            Parameter::Omega => v - 2.0 * base.omega0,
            Parameter::OmegaScan => v - base.omega0,
            _ => v,
        }
    }

    fn apply(self, config: &mut SystemConfig, v: f64) {
        match self {
            Parameter::Omega => config.drive_freq = v,
            Parameter::Qd => config.qd = v,
            Parameter::Phi(j) => config.drive_phases[j] = v,
            Parameter::U => config.anharmonicity = v,
            Parameter::OmegaScan => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub parameter: Parameter,
    /// Absolute values (not detunings).
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(parameter: Parameter, values: Vec<f64>) -> Self {
        Axis { parameter, values }
    }

    pub fn linspace(parameter: Parameter, lo: f64, hi: f64, n: usize) -> Self {
        let values = match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
        };
        Axis { parameter, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Observable {
    /// Single-qubit intensity `⟨a†a⟩` (N = 1 only).
    I1,
    #[serde(rename = "I_minus")]
    IMinus,
    #[serde(rename = "I_plus")]
    IPlus,
    G2mm,
    #[serde(rename = "spectrum")]
    Spectrum,
    #[serde(rename = "directivity")]
    Directivity,
}

impl Observable {
    pub const ALL: [Observable; 6] = [
        Observable::I1,
        Observable::IMinus,
        Observable::IPlus,
        Observable::G2mm,
        Observable::Spectrum,
        Observable::Directivity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Observable::I1 => "I1",
            Observable::IMinus => "I_minus",
            Observable::IPlus => "I_plus",
            Observable::G2mm => "G2mm",
            Observable::Spectrum => "spectrum",
            Observable::Directivity => "directivity",
        }
    }
}

impl FromStr for Observable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown observable '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Master,
    Diagrams,
    Analytic,
    All,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Master => "master",
            Engine::Diagrams => "diagrams",
            Engine::Analytic => "analytic",
            Engine::All => "all",
        }
    }

    fn members(self) -> Vec<Engine> {
        match self {
            Engine::All => vec![Engine::Master, Engine::Diagrams, Engine::Analytic],
            e => vec![e],
        }
    }
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [Engine::Master, Engine::Diagrams, Engine::Analytic, Engine::All]
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown engine '{s}'")))
    }
}

/// Auxiliary curves along axis 1, reported as pair detunings `Ω − 2ω₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlayKind {
    /// `2·Re` of the single-excitation eigenvalues.
    SingleExcitationDoubled,
    /// Real parts of the bosonic two-excitation eigenvalues.
    PairEnergies,
    /// Symmetric-pair `G²₋₋` zero, `−2γ₁D tan qd`.
    G2Zero,
    /// Four-qubit subradiant pair energies.
    SubradiantN4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub base: SystemConfig,
    pub axis1: Axis,
    pub axis2: Axis,
    pub observables: Vec<Observable>,
    pub engine: Engine,
    /// Total-excitation cap of the master-engine basis; `None` keeps the
    /// full per-mode cutoff.
    #[serde(default)]
    pub total_cutoff: Option<usize>,
    #[serde(default)]
    pub overlays: Vec<OverlayKind>,
}

impl ScanSpec {
    pub fn new(base: SystemConfig, axis1: Axis, axis2: Axis, observables: Vec<Observable>, engine: Engine) -> Self {
        ScanSpec {
            base,
            axis1,
            axis2,
            observables,
            engine,
            total_cutoff: None,
            overlays: vec![],
        }
    }

    /// Replaces both axes by evenly spaced grids over the same ranges.
    pub fn regrid(&mut self, n1: usize, n2: usize) {
        for (axis, n) in [(&mut self.axis1, n1), (&mut self.axis2, n2)] {
            let lo = axis.values.first().copied().unwrap_or(0.0);
            let hi = axis.values.last().copied().unwrap_or(lo);
            *axis = Axis::linspace(axis.parameter, lo, hi, n);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        let n = self.base.n_qubits;
        if self.axis1.parameter == self.axis2.parameter {
            return Err(Error::invalid(format!("both axes scan {}", self.axis1.parameter)));
        }
        for axis in [&self.axis1, &self.axis2] {
            if axis.is_empty() {
                return Err(Error::invalid(format!("axis {} has no values", axis.parameter)));
            }
            if let Some(v) = axis.values.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("axis {} has non-finite value {v}", axis.parameter)));
            }
            if let Parameter::Phi(j) = axis.parameter {
                if j >= n {
                    return Err(Error::invalid(format!("{} out of range for N = {n}", axis.parameter)));
                }
            }
            if axis.parameter == Parameter::Qd && axis.values.iter().any(|v| *v < 0.0) {
                return Err(Error::invalid("qd axis must be non-negative"));
            }
        }
        if self.observables.is_empty() {
            return Err(Error::invalid("no observables requested"));
        }
        let unique: BTreeSet<_> = self.observables.iter().collect();
        if unique.len() != self.observables.len() {
            return Err(Error::invalid("duplicate observable"));
        }
        let scans_omega = self.has_axis(Parameter::OmegaScan);
        let wants_spectrum = self.observables.contains(&Observable::Spectrum);
        if wants_spectrum != scans_omega {
            return Err(Error::invalid("the spectrum observable and the omega_scan axis go together"));
        }
        if self.observables.contains(&Observable::I1) && n != 1 {
            return Err(Error::invalid("I1 is the single-qubit intensity; use I_minus/I_plus for N > 1"));
        }
        if let Some(t) = self.total_cutoff {
            if t < 2 {
                return Err(Error::invalid("total_cutoff below 2 cannot hold a photon pair"));
            }
        }
        if self.engine != Engine::All {
            for &o in &self.observables {
                if !supports(self.engine, o, n) {
                    return Err(Error::invalid(format!(
                        "engine {} does not provide {} for N = {n}",
                        self.engine.name(),
                        o.name()
                    )));
                }
            }
        }
        Ok(())
    }

    fn has_axis(&self, p: Parameter) -> bool {
        self.axis1.parameter == p || self.axis2.parameter == p
    }

    fn point_config(&self, i: usize, j: usize) -> (SystemConfig, Option<f64>) {
        let mut c = self.base.clone();
        let mut omega = None;
        for (axis, k) in [(&self.axis1, i), (&self.axis2, j)] {
            let v = axis.values[k];
            axis.parameter.apply(&mut c, v);
            if axis.parameter == Parameter::OmegaScan {
                omega = Some(v);
            }
        }
        (c, omega)
    }

    fn master_basis(&self, config: &SystemConfig) -> Result<FockBasis> {
        match self.total_cutoff {
            Some(t) => FockBasis::new(config.n_qubits, 2, Some(t)),
            None => config.default_basis(),
        }
    }

    /// (observable, engine) arrays the scan produces, in output order.
    pub fn layers(&self) -> Vec<(Observable, Engine)> {
        let n = self.base.n_qubits;
        let mut out = vec![];
        for e in self.engine.members() {
            for &o in &self.observables {
                if supports(e, o, n) || (self.engine == Engine::All && e == Engine::Analytic && o == Observable::Spectrum && n == 1) {
                    out.push((o, e));
                }
            }
        }
        out
    }
}

/// Engine/observable support when an engine is requested on its own.
fn supports(engine: Engine, o: Observable, n: usize) -> bool {
    match (engine, o) {
        (Engine::All, _) => true,
        (Engine::Master, _) => true,
        (_, Observable::Spectrum) => false,
        (Engine::Diagrams, _) => n <= MAX_FOUR_COPY_QUBITS,
        (Engine::Analytic, Observable::G2mm) => n == 2,
        (Engine::Analytic, _) => n <= 2,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisMeta {
    pub parameter: Parameter,
    pub label: String,
    /// As scanned (absolute frequencies).
    pub values: Vec<f64>,
    /// As reported (detunings for frequency axes).
    pub reported: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanArray {
    pub observable: Observable,
    pub engine: Engine,
    /// Row-major `axis1 × axis2`.
    #[serde(with = "crate::serde_nan::vec")]
    pub values: Vec<f64>,
    /// `true` where the point was skipped (value is NaN).
    pub mask: Vec<bool>,
    /// Closed forms used (analytic engine only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub formulas: Vec<FormulaId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    /// One value per axis-1 point.
    #[serde(with = "crate::serde_nan::vec")]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub i: usize,
    pub j: usize,
    pub engine: Engine,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: SystemConfig,
    pub engine: Engine,
    pub code_version: String,
    pub elapsed_seconds: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axis1: AxisMeta,
    pub axis2: AxisMeta,
    pub arrays: Vec<ScanArray>,
    pub overlays: Vec<Curve>,
    pub diagnostics: DiagnosticsSummary,
    pub failures: Vec<PointFailure>,
    pub provenance: Provenance,
}

impl ScanResult {
    pub fn shape(&self) -> (usize, usize) {
        (self.axis1.values.len(), self.axis2.values.len())
    }

    pub fn array(&self, observable: Observable, engine: Engine) -> Option<&ScanArray> {
        self.arrays
            .iter()
            .find(|a| a.observable == observable && a.engine == engine)
    }

    pub fn value(&self, observable: Observable, engine: Engine, i: usize, j: usize) -> Option<f64> {
        let n2 = self.axis2.values.len();
        self.array(observable, engine).map(|a| a.values[i * n2 + j])
    }
}

struct PointOutcome {
    /// One entry per layer.
    values: Vec<Option<f64>>,
    failures: Vec<(Engine, String)>,
    diagnostics: Option<SolveDiagnostics>,
    /// (layer, closed form) pairs.
    formulas: Vec<(usize, FormulaId)>,
}

fn directivity(minus: f64, plus: f64) -> f64 {
    (minus - plus) / (minus + plus)
}

fn master_point(
    spec: &ScanSpec,
    config: &SystemConfig,
    omega: Option<f64>,
    wanted: &[Observable],
) -> Result<(Vec<f64>, SolveDiagnostics)> {
    let basis = spec.master_basis(config)?;
    let sol = master::stationary_rho(config, &basis)?;
    let pm = model::directional_operator(config, &basis, Direction::Left)?;
    let needs_plus = wanted
        .iter()
        .any(|o| matches!(o, Observable::IPlus | Observable::Directivity));
    let pp: Option<OperatorMatrix> = if needs_plus {
        Some(model::directional_operator(config, &basis, Direction::Right)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(wanted.len());
    for &o in wanted {
        out.push(match o {
            Observable::I1 | Observable::IMinus => master::emission_intensity(&sol, &pm)?,
            Observable::IPlus => master::emission_intensity(&sol, pp.as_ref().expect("p+ built"))?,
            Observable::G2mm => master::g2_zero(&sol, &pm)?,
            Observable::Directivity => directivity(
                master::emission_intensity(&sol, &pm)?,
                master::emission_intensity(&sol, pp.as_ref().expect("p+ built"))?,
            ),
            Observable::Spectrum => {
                let w = omega.expect("validated: spectrum has an omega axis");
                SpectrumEvaluator::new(&sol, &pm)?.at(w)?
            }
        });
    }
    Ok((out, sol.diagnostics))
}

fn diagrams_point(config: &SystemConfig, wanted: &[Observable]) -> Result<Vec<f64>> {
    let needs_intensity = wanted.iter().any(|o| *o != Observable::G2mm);
    let inten = if needs_intensity {
        Some(diagrams::emission_intensities_diagram(config, PairProcess::WithCounterRotating)?)
    } else {
        None
    };
    wanted
        .iter()
        .map(|o| {
            let r = inten.as_ref();
            Ok(match o {
                Observable::I1 | Observable::IMinus => r.expect("intensities").i_minus,
                Observable::IPlus => r.expect("intensities").i_plus,
                Observable::Directivity => {
                    let r = r.expect("intensities");
                    directivity(r.i_minus, r.i_plus)
                }
                Observable::G2mm => diagrams::g2_zero_diagram(config, PairProcess::WithCounterRotating)?,
                Observable::Spectrum => unreachable!("spectrum is not a diagrams layer"),
            })
        })
        .collect()
}

fn symmetric_drive(config: &SystemConfig) -> bool {
    let same_phase = {
        let d = (config.drive_phases[1] - config.drive_phases[0]).rem_euclid(std::f64::consts::TAU);
        d.min(std::f64::consts::TAU - d) < 1e-12
    };
    config.drive_amps[0] == config.drive_amps[1] && same_phase
}

fn analytic_point(
    config: &SystemConfig,
    omega: Option<f64>,
    wanted: &[Observable],
) -> Result<(Vec<f64>, Vec<FormulaId>)> {
    match config.n_qubits {
        1 => {
            let i1 = analytic::i1_single_result(config);
            let mut ids = vec![];
            let vals = wanted
                .iter()
                .map(|o| match o {
                    Observable::I1 | Observable::IMinus | Observable::IPlus => {
                        ids.push(i1.formula_id);
                        Ok(i1.value)
                    }
                    Observable::Directivity => {
                        ids.push(i1.formula_id);
                        Ok(0.0)
                    }
                    Observable::Spectrum => {
                        let r = analytic::spectrum_single_result(config, omega.expect("omega axis"));
                        ids.push(r.formula_id);
                        Ok(r.value)
                    }
                    Observable::G2mm => Err(Error::Unsupported("no single-qubit G² closed form".into())),
                })
                .collect::<Result<_>>()?;
            Ok((vals, ids))
        }
        2 => {
            let (minus, plus, g2) = if symmetric_drive(config) {
                let s = analytic::two_qubit_symmetric(config);
                let i = s.intensity();
                (
                    (i, s.intensity_unitarity.formula_id),
                    (i, s.intensity_unitarity.formula_id),
                    (s.g2_mm.value, s.g2_mm.formula_id),
                )
            } else {
                let h = analytic::two_qubit_high_u_general(config);
                (
                    (h.i_minus.value, h.i_minus.formula_id),
                    (h.i_plus.value, h.i_plus.formula_id),
                    (h.g2_mm.value, h.g2_mm.formula_id),
                )
            };
            let mut ids = vec![];
            let vals = wanted
                .iter()
                .map(|o| match o {
                    Observable::IMinus => {
                        ids.push(minus.1);
                        Ok(minus.0)
                    }
                    Observable::IPlus => {
                        ids.push(plus.1);
                        Ok(plus.0)
                    }
                    Observable::Directivity => {
                        ids.push(minus.1);
                        Ok(directivity(minus.0, plus.0))
                    }
                    Observable::G2mm => {
                        ids.push(g2.1);
                        Ok(g2.0)
                    }
                    _ => Err(Error::Unsupported(format!("no two-qubit closed form for {}", o.name()))),
                })
                .collect::<Result<_>>()?;
            Ok((vals, ids))
        }
        n => Err(Error::Unsupported(format!("no closed forms for N = {n}"))),
    }
}

fn evaluate_point(spec: &ScanSpec, layers: &[(Observable, Engine)], i: usize, j: usize) -> PointOutcome {
    let (config, omega) = spec.point_config(i, j);
    let mut out = PointOutcome {
        values: vec![None; layers.len()],
        failures: vec![],
        diagnostics: None,
        formulas: vec![],
    };
    for engine in spec.engine.members() {
        let idx: Vec<usize> = (0..layers.len()).filter(|k| layers[*k].1 == engine).collect();
        if idx.is_empty() {
            continue;
        }
        let wanted: Vec<Observable> = idx.iter().map(|k| layers[*k].0).collect();
        let result = match engine {
            Engine::Master => master_point(spec, &config, omega, &wanted).map(|(v, d)| {
                out.diagnostics = Some(d);
                v
            }),
            Engine::Diagrams => diagrams_point(&config, &wanted),
            Engine::Analytic => analytic_point(&config, omega, &wanted).map(|(v, ids)| {
                out.formulas.extend(idx.iter().copied().zip(ids));
                v
            }),
            Engine::All => unreachable!(),
        };
        match result {
            Ok(v) => {
                for (k, x) in idx.iter().zip(v) {
                    out.values[*k] = Some(x);
                }
            }
            Err(e) => out.failures.push((engine, e.to_string())),
        }
    }
    out
}

fn overlay_curves(spec: &ScanSpec) -> Vec<Curve> {
    let mut curves: Vec<Curve> = vec![];
    let base = &spec.base;
    let at = |v: f64| {
        let mut c = base.clone();
        spec.axis1.parameter.apply(&mut c, v);
        c
    };
    let detune = |x: f64| x - 2.0 * base.omega0;
    for kind in &spec.overlays {
        let per_point: Vec<Vec<f64>> = spec
            .axis1
            .values
            .iter()
            .map(|&v| {
                let c = at(v);
                match kind {
                    OverlayKind::SingleExcitationDoubled => {
                        let mut ev: Vec<f64> = model::single_excitation_hamiltonian(&c)
                            .eigenvalues()
                            .iter()
                            .map(|z| detune(2.0 * z.re))
                            .collect();
                        ev.sort_by(f64::total_cmp);
                        ev
                    }
                    OverlayKind::PairEnergies => model::bosonic_pair_energies(&c)
                        .iter()
                        .map(|z| detune(z.re))
                        .collect(),
                    OverlayKind::G2Zero => vec![-2.0 * c.gamma1d * c.qd.tan()],
                    OverlayKind::SubradiantN4 => {
                        let (a, b) = analytic::subradiant_energies_n4(&c);
                        vec![detune(a.value), detune(b.value)]
                    }
                }
            })
            .collect();
        let width = per_point.first().map_or(0, Vec::len);
        let name = serde_json::to_value(kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        for k in 0..width {
            curves.push(Curve {
                name: if width == 1 { name.clone() } else { format!("{name}_{}", k + 1) },
                values: per_point.iter().map(|p| p[k]).collect(),
            });
        }
    }
    curves
}

fn axis_meta(axis: &Axis, base: &SystemConfig) -> AxisMeta {
    AxisMeta {
        parameter: axis.parameter,
        label: axis.parameter.label(),
        values: axis.values.clone(),
        reported: axis.values.iter().map(|v| axis.parameter.reported(base, *v)).collect(),
    }
}

/// Evaluates every grid point independently (in parallel). Output is a
/// deterministic function of `spec`; failing points are masked.
pub fn run_scan(spec: &ScanSpec) -> Result<ScanResult> {
    spec.validate()?;
    let start = Instant::now();
    let layers = spec.layers();
    let (n1, n2) = (spec.axis1.len(), spec.axis2.len());
    let outcomes: Vec<PointOutcome> = (0..n1 * n2)
        .into_par_iter()
        .map(|k| evaluate_point(spec, &layers, k / n2, k % n2))
        .collect();

    let mut arrays: Vec<ScanArray> = layers
        .iter()
        .map(|&(observable, engine)| ScanArray {
            observable,
            engine,
            values: Vec::with_capacity(n1 * n2),
            mask: Vec::with_capacity(n1 * n2),
            formulas: vec![],
        })
        .collect();
    let mut diagnostics = DiagnosticsSummary::default();
    let mut failures = vec![];
    let mut formulas = vec![BTreeSet::new(); layers.len()];
    for (k, p) in outcomes.into_iter().enumerate() {
        for (a, v) in arrays.iter_mut().zip(&p.values) {
            a.values.push(v.unwrap_or(f64::NAN));
            a.mask.push(v.is_none());
        }
        if let Some(d) = p.diagnostics {
            diagnostics.record(&d);
        }
        for (k, id) in p.formulas {
            formulas[k].insert(id);
        }
        for (engine, message) in p.failures {
            failures.push(PointFailure {
                i: k / n2,
                j: k % n2,
                engine,
                message,
            });
        }
    }
    for (a, f) in arrays.iter_mut().zip(formulas) {
        a.formulas = f.into_iter().collect();
    }
    if !failures.is_empty() {
        log::warn!("{} point evaluations failed and were masked", failures.len());
    }

    let mut notes = vec![io::UNITS_LINE.to_string()];
    if spec.observables.contains(&Observable::Spectrum) && spec.base.n_qubits > 1 {
        notes.push("spectrum of p_- (directional weighting is an extension for N > 1)".into());
    }
    if let Some(t) = spec.total_cutoff {
        notes.push(format!("master basis capped at {t} total excitations"));
    }
    if spec.engine == Engine::All || spec.engine == Engine::Diagrams {
        notes.push("diagrams include the counter-rotating pair process; with qubit loss their intensities count only pairs emitted into the waveguide".into());
    }

    Ok(ScanResult {
        axis1: axis_meta(&spec.axis1, &spec.base),
        axis2: axis_meta(&spec.axis2, &spec.base),
        arrays,
        overlays: overlay_curves(spec),
        diagnostics,
        failures,
        provenance: Provenance {
            config: spec.base.clone(),
            engine: spec.engine,
            code_version: CODE_VERSION.to_string(),
            elapsed_seconds: start.elapsed().as_secs_f64(),
            notes,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(engine: Engine) -> ScanSpec {
        let base = SystemConfig::uniform(2, 0.01, 10.0, 0.0, 0.4);
        let w = 2.0 * base.omega0;
        ScanSpec::new(
            base,
            Axis::new(Parameter::Omega, vec![w - 1.0, w + 10.0, w + 3.0]),
            Axis::new(Parameter::Qd, vec![0.3, 1.1]),
            vec![Observable::IMinus, Observable::IPlus, Observable::G2mm, Observable::Directivity],
            engine,
        )
    }

    #[test]
    fn parameter_names_roundtrip() {
        for p in [Parameter::Omega, Parameter::Qd, Parameter::Phi(2), Parameter::U, Parameter::OmegaScan] {
            assert_eq!(p.to_string().parse::<Parameter>().unwrap(), p);
        }
        assert!("phi_0".parse::<Parameter>().is_err());
        assert!("Delta".parse::<Parameter>().is_err());
        let j = serde_json::to_string(&Parameter::Phi(1)).unwrap();
        assert_eq!(j, "\"phi_2\"");
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = small_spec(Engine::Master);
        s.axis2.parameter = Parameter::Omega;
        assert!(s.validate().is_err());

        let mut s = small_spec(Engine::Master);
        s.axis1.values.push(f64::NAN);
        assert!(s.validate().is_err());

        let mut s = small_spec(Engine::Diagrams);
        s.observables = vec![Observable::Spectrum];
        assert!(s.validate().is_err());

        let mut s = small_spec(Engine::Master);
        s.axis2 = Axis::new(Parameter::Phi(2), vec![0.0]);
        assert!(s.validate().is_err());

        let mut s = small_spec(Engine::Master);
        s.observables = vec![Observable::I1];
        assert!(s.validate().is_err());
    }

    #[test]
    fn engines_agree_on_symmetric_pair() {
        let r = run_scan(&small_spec(Engine::All)).unwrap();
        assert!(r.failures.is_empty());
        for o in [Observable::IMinus, Observable::G2mm] {
            let m = r.array(o, Engine::Master).unwrap();
            let d = r.array(o, Engine::Diagrams).unwrap();
            let a = r.array(o, Engine::Analytic).unwrap();
            for k in 0..m.values.len() {
                assert!((m.values[k] / d.values[k] - 1.0).abs() < 1e-6, "{o:?} diagrams {k}");
                assert!((m.values[k] / a.values[k] - 1.0).abs() < 1e-3, "{o:?} analytic {k}");
            }
        }
        let a = r.array(Observable::IMinus, Engine::Analytic).unwrap();
        assert_eq!(a.formulas, vec![FormulaId::SymmetricIntensity]);
    }

    #[test]
    fn single_point_scan_matches_direct_call() {
        let mut spec = small_spec(Engine::Master);
        spec.axis1.values.truncate(1);
        spec.axis2.values.truncate(1);
        let r = run_scan(&spec).unwrap();
        let (c, _) = spec.point_config(0, 0);
        let sol = master::stationary_rho(&c, &c.default_basis().unwrap()).unwrap();
        let pm = model::directional_operator(&c, &sol.basis, Direction::Left).unwrap();
        let direct = master::emission_intensity(&sol, &pm).unwrap();
        assert_eq!(r.value(Observable::IMinus, Engine::Master, 0, 0), Some(direct));
        assert_eq!(r.diagnostics.solves, 1);
    }

    #[test]
    fn permuted_axis_permutes_output() {
        let spec = small_spec(Engine::Master);
        let r = run_scan(&spec).unwrap();
        let mut rev = spec.clone();
        rev.axis1.values.reverse();
        let q = run_scan(&rev).unwrap();
        let n1 = spec.axis1.len();
        for i in 0..n1 {
            for j in 0..spec.axis2.len() {
                assert_eq!(
                    r.value(Observable::G2mm, Engine::Master, i, j),
                    q.value(Observable::G2mm, Engine::Master, n1 - 1 - i, j)
                );
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let spec = small_spec(Engine::All);
        let run_with = |k: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap();
            pool.install(|| run_scan(&spec).unwrap())
        };
        let (a, b) = (run_with(1), run_with(4));
        assert_eq!(serde_json::to_string(&a.arrays).unwrap(), serde_json::to_string(&b.arrays).unwrap());
        assert_eq!(a.diagnostics, b.diagnostics);
        assert_eq!(a.failures, b.failures);
    }

    #[test]
    fn singular_points_are_masked() {
        // γ = 0, qd = 0: the antisymmetric pair is dark
        let base = SystemConfig::uniform(2, 0.01, 10.0, 0.0, 0.0);
        let w = 2.0 * base.omega0 + 10.0;
        let spec = ScanSpec::new(
            base,
            Axis::new(Parameter::Qd, vec![0.0, 0.5]),
            Axis::new(Parameter::Omega, vec![w]),
            vec![Observable::IMinus],
            Engine::Master,
        );
        let r = run_scan(&spec).unwrap();
        let a = r.array(Observable::IMinus, Engine::Master).unwrap();
        assert_eq!(a.mask, vec![true, false]);
        assert!(a.values[0].is_nan() && a.values[1].is_finite());
        assert_eq!(r.failures.len(), 1);
    }

    #[test]
    fn spectrum_layers_under_all() {
        let base = SystemConfig::single(0.05, 10.0, 0.0);
        let w = 2.0 * base.omega0 + 10.0;
        let spec = ScanSpec::new(
            base.clone(),
            Axis::new(Parameter::Omega, vec![w]),
            Axis::new(Parameter::OmegaScan, vec![base.omega0 + 0.3, base.omega0 + 9.0]),
            vec![Observable::Spectrum],
            Engine::All,
        );
        assert_eq!(
            spec.layers(),
            vec![(Observable::Spectrum, Engine::Master), (Observable::Spectrum, Engine::Analytic)]
        );
        let r = run_scan(&spec).unwrap();
        for j in 0..2 {
            let m = r.value(Observable::Spectrum, Engine::Master, 0, j).unwrap();
            let a = r.value(Observable::Spectrum, Engine::Analytic, 0, j).unwrap();
            assert!((m / a - 1.0).abs() < 1e-6);
        }
        for (got, want) in r.axis2.reported.iter().zip([0.3, 9.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn overlays_follow_axis1() {
        let mut spec = small_spec(Engine::Master);
        spec.axis1 = Axis::new(Parameter::Qd, vec![0.2, 0.4]);
        spec.axis2 = Axis::new(Parameter::Omega, vec![2.0 * spec.base.omega0]);
        spec.overlays = vec![OverlayKind::PairEnergies, OverlayKind::G2Zero];
        let r = run_scan(&spec).unwrap();
        let names: Vec<_> = r.overlays.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["pair_energies_1", "pair_energies_2", "pair_energies_3", "g2_zero"]);
        assert!((r.overlays[3].values[1] + 2.0 * 0.4f64.tan()).abs() < 1e-14);
    }
}
