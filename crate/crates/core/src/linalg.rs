//! Thin helpers over nalgebra's dense complex routines.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub(crate) type CMat = DMatrix<C64>;
pub(crate) type CVec = DVector<C64>;

/// Smallest-to-largest |pivot| ratio of an LU factorization; a cheap
/// proxy for the reciprocal condition number.
pub(crate) fn pivot_ratio(lu: &nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for d in u.diagonal().iter() {
        let a = d.norm();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

/// Pivot ratios below this are treated as an exactly singular system.
pub(crate) const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

/// LU factorization that refuses (numerically) singular matrices.
pub(crate) struct Factorized {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
    pub(crate) pivot_ratio: f64,
}

impl Factorized {
    pub(crate) fn new(m: CMat, context: &'static str) -> Result<Self> {
        let lu = m.lu();
        let ratio = pivot_ratio(&lu);
        if !(ratio > SINGULAR_PIVOT_RATIO) {
            return Err(Error::Numerical {
                context,
                pivot_ratio: ratio,
            });
        }
        Ok(Factorized {
            lu,
            pivot_ratio: ratio,
        })
    }

    pub(crate) fn solve(&self, b: &CVec) -> CVec {
        // pivots were checked at construction
        self.lu.solve(b).expect("non-singular LU")
    }

    pub(crate) fn solve_mat(&self, b: &CMat) -> CMat {
        self.lu.solve(b).expect("non-singular LU")
    }
}

pub(crate) fn inverse(m: CMat, context: &'static str) -> Result<CMat> {
    let n = m.nrows();
    Ok(Factorized::new(m, context)?.solve_mat(&CMat::identity(n, n)))
}

pub(crate) fn eigenvalues(m: CMat) -> Vec<C64> {
    Schur::new(m)
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .unwrap_or_default()
}

pub(crate) fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub(crate) fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub(crate) const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `(A ⊗ B)_{ij,kl} = A_ik B_jl` with composite index `i * dim(B) + j`.
pub(crate) fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest entry modulus.
pub trait MaxNorm {
    fn max_norm(&self) -> f64;
}

impl<T, R, C, S> MaxNorm for nalgebra::Matrix<T, R, C, S>
where
    T: nalgebra::ComplexField<RealField = f64>,
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::RawStorage<T, R, C>,
{
    fn max_norm(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.clone().modulus()))
    }
}
