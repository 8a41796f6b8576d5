//! Floquet master-equation engine.
//!
//! The modulation `Σⱼ gⱼ cos(Ωt+φⱼ)(aⱼ†+aⱼ)²` is treated to second order:
//! the stationary density matrix is `ρ₀ = ρ_vac + x` with
//!
//! ```text
//! 𝓛x = ¼ [𝓥(𝓛+iΩ)⁻¹𝓥̄ + 𝓥̄(𝓛−iΩ)⁻¹𝓥] vec(ρ_vac),   Tr x = 0
//! ```
//!
//! where `𝓥` and `𝓥̄` are the `e^{+iΩt}` and `e^{−iΩt}` parts of the drive.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hilbert::{
    commutator_superop, sandwich_superop, trace_functional, unvec, vec, FockBasis, OperatorMatrix,
    SuperOperator,
};
use crate::linalg::{hermitian_eigenvalues, Factorized, MaxNorm, CMat, I};
use crate::model::{build_h0, decay_matrix, drive_operator, SystemConfig, WEAK_DRIVE_LIMIT};
use crate::{Error, Result};

/// `𝓛ρ = −i[H₀,ρ] + Σⱼₖ γⱼₖ (2aⱼρaₖ† − aⱼ†aₖρ − ρaⱼ†aₖ)`
pub fn build_liouvillian(config: &SystemConfig, basis: &FockBasis) -> Result<SuperOperator> {
    config.validate()?;
    let h0 = build_h0(config, basis)?;
    let gamma = decay_matrix(config);
    let n = config.n_qubits;
    let id = basis.identity();
    let a: Vec<OperatorMatrix> = (0..n).map(|j| basis.annihilation(j)).collect::<Result<_>>()?;

    let mut l = commutator_superop(&h0).0 * (-I);
    for j in 0..n {
        for k in 0..n {
            let g = gamma[(j, k)];
            if g == 0.0 {
                continue;
            }
            let adk = a[j].adjoint().dot(&a[k]);
            let jump = sandwich_superop(&a[j], &a[k].adjoint())?.0 * C64::from(2.0);
            let left = sandwich_superop(&adk, &id)?.0;
            let right = sandwich_superop(&id, &adk)?.0;
            l += (jump - left - right) * C64::from(g);
        }
    }
    Ok(SuperOperator(l))
}

/// `(𝓥, 𝓥̄)` with `𝓥 = −iΣⱼ gⱼe^{iφⱼ}[Xⱼ,·]` and `𝓥̄ = −iΣⱼ gⱼe^{−iφⱼ}[Xⱼ,·]`,
/// `Xⱼ = (aⱼ†+aⱼ)²`.
///
/// `𝓥̄` is not the entrywise conjugate of `𝓥`: the `−i` of the commutator
/// is kept, only the drive phase is conjugated.
pub fn build_drive_superops(
    config: &SystemConfig,
    basis: &FockBasis,
) -> Result<(SuperOperator, SuperOperator)> {
    config.validate()?;
    let m = basis.dim() * basis.dim();
    let mut v = DMatrix::zeros(m, m);
    let mut vbar = DMatrix::zeros(m, m);
    for j in 0..config.n_qubits {
        let g = config.drive_amps[j];
        if g == 0.0 {
            continue;
        }
        let comm = commutator_superop(&drive_operator(config, basis, j)?).0;
        let phi = config.drive_phases[j];
        v += &comm * (-I * C64::from_polar(g, phi));
        vbar += &comm * (-I * C64::from_polar(g, -phi));
    }
    Ok((SuperOperator(v), SuperOperator(vbar)))
}

/// Hermitian unit-trace density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub DMatrix<C64>);

impl DensityMatrix {
    pub fn entries(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// `Tr(A ρ)`
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        // Tr(Aρ) = Σ_ij A_ij ρ_ji without forming the product
        op.iter().zip(self.0.transpose().iter()).map(|(a, r)| a * r).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint()).max_norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.0)[0]
    }
}

/// Quality measures of one stationary solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// `‖𝓛x − RHS‖ / ‖RHS‖`
    pub residual: f64,
    /// `|Tr ρ₀ − 1|`
    pub trace_deviation: f64,
    /// `max|ρ₀ − ρ₀†|` before symmetrization.
    pub hermiticity_pre: f64,
    pub min_eigenvalue: f64,
    /// Allowed negativity `−10 (g/γ₁D)⁴`.
    pub positivity_floor: f64,
    /// Smallest/largest pivot of the bordered LU.
    pub pivot_ratio: f64,
}

impl SolveDiagnostics {
    pub fn is_healthy(&self) -> bool {
        self.trace_deviation < 1e-12
            && self.hermiticity_pre < 1e-9
            && self.min_eigenvalue >= self.positivity_floor
    }
}

/// Worst-case aggregate of many [`SolveDiagnostics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub solves: usize,
    pub max_residual: f64,
    pub max_trace_deviation: f64,
    pub max_hermiticity_pre: f64,
    /// Smallest `min_eigenvalue − positivity_floor`; negative means a violation.
    #[serde(with = "crate::serde_nan::minimum")]
    pub min_positivity_margin: f64,
    #[serde(with = "crate::serde_nan::minimum")]
    pub min_pivot_ratio: f64,
}

impl Default for DiagnosticsSummary {
    fn default() -> Self {
        DiagnosticsSummary {
            solves: 0,
            max_residual: 0.0,
            max_trace_deviation: 0.0,
            max_hermiticity_pre: 0.0,
            min_positivity_margin: f64::INFINITY,
            min_pivot_ratio: f64::INFINITY,
        }
    }
}

impl DiagnosticsSummary {
    pub fn record(&mut self, d: &SolveDiagnostics) {
        self.solves += 1;
        self.max_residual = self.max_residual.max(d.residual);
        self.max_trace_deviation = self.max_trace_deviation.max(d.trace_deviation);
        self.max_hermiticity_pre = self.max_hermiticity_pre.max(d.hermiticity_pre);
        self.min_positivity_margin = self.min_positivity_margin.min(d.min_eigenvalue - d.positivity_floor);
        self.min_pivot_ratio = self.min_pivot_ratio.min(d.pivot_ratio);
    }

    pub fn merge(mut self, other: &DiagnosticsSummary) -> Self {
        self.solves += other.solves;
        self.max_residual = self.max_residual.max(other.max_residual);
        self.max_trace_deviation = self.max_trace_deviation.max(other.max_trace_deviation);
        self.max_hermiticity_pre = self.max_hermiticity_pre.max(other.max_hermiticity_pre);
        self.min_positivity_margin = self.min_positivity_margin.min(other.min_positivity_margin);
        self.min_pivot_ratio = self.min_pivot_ratio.min(other.min_pivot_ratio);
        self
    }

    /// Same thresholds as [`SolveDiagnostics::is_healthy`].
    pub fn is_healthy(&self) -> bool {
        self.max_trace_deviation < 1e-12
            && self.max_hermiticity_pre < 1e-9
            && self.min_positivity_margin >= 0.0
    }
}

#[derive(Debug, Clone)]
pub struct FloquetSolution {
    pub rho0: DensityMatrix,
    pub config: SystemConfig,
    pub basis: FockBasis,
    pub liouvillian: SuperOperator,
    pub diagnostics: SolveDiagnostics,
}

fn shifted(l: &DMatrix<C64>, shift: C64) -> CMat {
    let mut m = l.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += shift;
    }
    m
}

/// Floquet-stationary density matrix to second order in the drive.
pub fn stationary_rho(config: &SystemConfig, basis: &FockBasis) -> Result<FloquetSolution> {
    config.validate()?;
    if config.max_drive() > WEAK_DRIVE_LIMIT * config.gamma1d {
        log::warn!(
            "drive amplitude {} exceeds {}·γ₁D; second-order truncation is unreliable",
            config.max_drive(),
            WEAK_DRIVE_LIMIT
        );
    }
    let d = basis.dim();
    let n = d * d;
    let l = build_liouvillian(config, basis)?;
    let (v, vbar) = build_drive_superops(config, basis)?;

    let mut r0 = DVector::zeros(n);
    r0[0] = C64::from(1.0);

    let omega = C64::from(config.drive_freq);
    let up = Factorized::new(shifted(&l, I * omega), "resolvent (𝓛+iΩ)")?;
    let down = Factorized::new(shifted(&l, -I * omega), "resolvent (𝓛−iΩ)")?;
    let rhs = (&v.0 * up.solve(&(&vbar.0 * &r0)) + &vbar.0 * down.solve(&(&v.0 * &r0)))
        * C64::from(0.25);

    // bordered system [[𝓛, t], [tᵀ, 0]] pins Tr x = 0
    let t = trace_functional(d);
    let mut b = DMatrix::zeros(n + 1, n + 1);
    b.view_mut((0, 0), (n, n)).copy_from(&l.0);
    b.view_mut((0, n), (n, 1)).copy_from(&t);
    b.view_mut((n, 0), (1, n)).copy_from(&t.transpose());
    let mut brhs = DVector::zeros(n + 1);
    brhs.rows_mut(0, n).copy_from(&rhs);

    let bordered = Factorized::new(b, "bordered stationary system").map_err(|e| match e {
        Error::Numerical { pivot_ratio, .. } => Error::DegenerateModel(format!(
            "stationary state not unique (bordered pivot ratio {pivot_ratio:.1e}); \
             a dark subspace does not decay"
        )),
        other => other,
    })?;
    let sol = bordered.solve(&brhs);
    let x = sol.rows(0, n).into_owned();

    let rhs_norm = rhs.norm();
    let resid = (&l.0 * &x - &rhs).norm();
    let residual = if rhs_norm > 0.0 { resid / rhs_norm } else { resid };

    let mut rho = unvec(&x);
    rho[(0, 0)] += C64::from(1.0);
    let hermiticity_pre = (&rho - rho.adjoint()).max_norm();
    let rho = (&rho + rho.adjoint()) * C64::from(0.5);
    let rho = DensityMatrix(rho);

    let g = config.max_drive() / config.gamma1d;
    let diagnostics = SolveDiagnostics {
        residual,
        trace_deviation: (rho.trace() - C64::from(1.0)).norm(),
        hermiticity_pre,
        min_eigenvalue: rho.min_eigenvalue(),
        positivity_floor: -10.0 * g.powi(4),
        pivot_ratio: bordered.pivot_ratio,
    };
    if residual > 1e-10 {
        log::warn!("stationary residual {residual:.2e} above 1e-10");
    }

    Ok(FloquetSolution {
        rho0: rho,
        config: config.clone(),
        basis: basis.clone(),
        liouvillian: l,
        diagnostics,
    })
}

fn check_dim(sol: &FloquetSolution, op: &OperatorMatrix) -> Result<()> {
    if op.dim() != sol.basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: sol.basis.dim(),
            found: op.dim(),
        });
    }
    Ok(())
}

fn real_part(z: C64, what: &str) -> f64 {
    let scale = z.re.abs().max(1e-300);
    if z.im.abs() > 1e-10 * scale.max(1.0) {
        log::warn!("{what} has imaginary part {:.2e}", z.im);
    }
    z.re
}

/// `⟨op† op⟩`
pub fn emission_intensity(sol: &FloquetSolution, op: &OperatorMatrix) -> Result<f64> {
    check_dim(sol, op)?;
    let n = &op.adjoint().0 * &op.0;
    Ok(real_part(sol.rho0.expectation(&n), "intensity"))
}

/// `⟨op† op† op op⟩`
pub fn g2_zero(sol: &FloquetSolution, op: &OperatorMatrix) -> Result<f64> {
    check_dim(sol, op)?;
    let pd = op.adjoint().0;
    let m = &pd * &pd * &op.0 * &op.0;
    Ok(real_part(sol.rho0.expectation(&m), "G2(0)"))
}

/// Regression-theorem spectrum `S(ω) = −(1/π) Re Tr(op† (𝓛−iω)⁻¹[op ρ₀])`.
pub struct SpectrumEvaluator<'a> {
    l: &'a DMatrix<C64>,
    source: DVector<C64>,
    // row functional: Tr(op† X) = probe · vec(X)
    probe: DVector<C64>,
}

impl<'a> SpectrumEvaluator<'a> {
    pub fn new(sol: &'a FloquetSolution, op: &OperatorMatrix) -> Result<Self> {
        check_dim(sol, op)?;
        let source = vec(&(&op.0 * &sol.rho0.0));
        // Tr(op† X) = Σ_ij conj(op_ij) X_ij
        let probe = vec(&op.0.map(|z| z.conj()));
        Ok(SpectrumEvaluator {
            l: &sol.liouvillian.0,
            source,
            probe,
        })
    }

    pub fn at(&self, omega: f64) -> Result<f64> {
        let f = Factorized::new(shifted(self.l, -I * omega), "spectrum resolvent")?;
        let y = f.solve(&self.source);
        Ok(-self.probe.dot(&y).re / std::f64::consts::PI)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    /// `NaN` where the resolvent was singular.
    pub value: Vec<f64>,
    pub skipped: Vec<usize>,
}

pub fn emission_spectrum(
    sol: &FloquetSolution,
    op: &OperatorMatrix,
    omega_grid: &[f64],
) -> Result<Spectrum> {
    let eval = SpectrumEvaluator::new(sol, op)?;
    let pts: Vec<Option<f64>> = omega_grid
        .par_iter()
        .map(|&w| match eval.at(w) {
            Ok(s) => Some(s),
            Err(e) => {
                log::warn!("spectrum point ω={w} skipped: {e}");
                None
            }
        })
        .collect();
    let skipped = pts.iter().enumerate().filter(|(_, p)| p.is_none()).map(|(i, _)| i).collect();
    Ok(Spectrum {
        omega: omega_grid.to_vec(),
        value: pts.into_iter().map(|p| p.unwrap_or(f64::NAN)).collect(),
        skipped,
    })
}

/// `G²(τ) = Tr(op†op e^{𝓛τ}[op ρ₀ op†])`
pub fn g2_tau(sol: &FloquetSolution, op: &OperatorMatrix, tau_grid: &[f64]) -> Result<Vec<f64>> {
    check_dim(sol, op)?;
    if let Some(t) = tau_grid.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::invalid(format!("negative delay {t}")));
    }
    let pd = op.adjoint().0;
    let start = vec(&(&op.0 * &sol.rho0.0 * &pd));
    let n = &pd * &op.0;
    // Tr(N X) = vec(Nᵀ) · vec(X)
    let probe = vec(&n.transpose());
    let l = &sol.liouvillian.0;
    Ok(tau_grid
        .par_iter()
        .map(|&tau| {
            let prop = (l * C64::from(tau)).exp();
            probe.dot(&(prop * &start)).re
        })
        .collect())
}
