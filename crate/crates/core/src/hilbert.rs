//! Truncated multi-mode Fock spaces, ladder operators and the
//! column-stacking vectorization used for superoperators.
//!
//! Convention: `vec(ρ)` stacks columns, so `A ρ B ↦ (Bᵀ ⊗ A) vec(ρ)`.

use std::collections::HashMap;
use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::linalg::{kron, MaxNorm};
use crate::{Error, Result};

/// Occupation-number basis with a per-mode and optional total cutoff.
///
/// States are ordered lexicographically by occupation tuple, so the vacuum
/// is always index 0.
#[derive(Debug, Clone)]
pub struct FockBasis {
    n_modes: usize,
    per_mode_cutoff: usize,
    total_cutoff: Option<usize>,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockBasis {
    pub fn new(n_modes: usize, per_mode_cutoff: usize, total_cutoff: Option<usize>) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::invalid("basis needs at least one mode"));
        }
        if per_mode_cutoff > u8::MAX as usize {
            return Err(Error::invalid("per-mode cutoff above 255"));
        }
        let admissible = |s: &[u8]| {
            total_cutoff.map_or(true, |t| s.iter().map(|&x| x as usize).sum::<usize>() <= t)
        };

        // odometer over {0..=cutoff}^n, last mode fastest => lexicographic
        let mut states = Vec::new();
        let mut cur = vec![0u8; n_modes];
        loop {
            if admissible(&cur) {
                states.push(cur.clone());
            }
            let mut k = n_modes;
            loop {
                if k == 0 {
                    let index = states
                        .iter()
                        .enumerate()
                        .map(|(i, s)| (s.clone(), i))
                        .collect();
                    return Ok(FockBasis {
                        n_modes,
                        per_mode_cutoff,
                        total_cutoff,
                        states,
                        index,
                    });
                }
                k -= 1;
                if (cur[k] as usize) < per_mode_cutoff {
                    cur[k] += 1;
                    break;
                }
                cur[k] = 0;
            }
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn per_mode_cutoff(&self) -> usize {
        self.per_mode_cutoff
    }

    pub fn total_cutoff(&self) -> Option<usize> {
        self.total_cutoff
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u8>] {
        &self.states
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Lowering operator for `mode`. Transitions whose target lies outside
    /// the truncation are dropped.
    pub fn annihilation(&self, mode: usize) -> Result<OperatorMatrix> {
        if mode >= self.n_modes {
            return Err(Error::invalid(format!(
                "mode {mode} out of range for {} modes",
                self.n_modes
            )));
        }
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut lowered = vec![0u8; self.n_modes];
        for (col, s) in self.states.iter().enumerate() {
            let n = s[mode];
            if n == 0 {
                continue;
            }
            lowered.copy_from_slice(s);
            lowered[mode] -= 1;
            if let Some(row) = self.index_of(&lowered) {
                m[(row, col)] = C64::new((n as f64).sqrt(), 0.0);
            }
        }
        Ok(OperatorMatrix(m))
    }

    pub fn creation(&self, mode: usize) -> Result<OperatorMatrix> {
        Ok(self.annihilation(mode)?.adjoint())
    }

    pub fn identity(&self) -> OperatorMatrix {
        OperatorMatrix::identity(self.dim())
    }

    /// `|0⟩⟨0|`
    pub fn vacuum_projector(&self) -> OperatorMatrix {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        m[(0, 0)] = C64::new(1.0, 0.0);
        OperatorMatrix(m)
    }
}

/// Dense operator on a Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix(pub DMatrix<C64>);

impl OperatorMatrix {
    pub fn identity(dim: usize) -> Self {
        OperatorMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix(self.0.adjoint())
    }

    pub fn dot(&self, other: &OperatorMatrix) -> Self {
        OperatorMatrix(&self.0 * &other.0)
    }

    pub fn plus(&self, other: &OperatorMatrix) -> Self {
        OperatorMatrix(&self.0 + &other.0)
    }

    pub fn scaled(&self, z: C64) -> Self {
        OperatorMatrix(&self.0 * z)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.0 - self.0.adjoint()).max_norm()
    }
}

impl Deref for OperatorMatrix {
    type Target = DMatrix<C64>;
    fn deref(&self) -> &DMatrix<C64> {
        &self.0
    }
}

/// Dense linear map on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator(pub DMatrix<C64>);

impl SuperOperator {
    /// Side length of the underlying Hilbert space.
    pub fn hilbert_dim(&self) -> usize {
        (self.0.nrows() as f64).sqrt().round() as usize
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        unvec(&(&self.0 * vec(rho)))
    }
}

impl Deref for SuperOperator {
    type Target = DMatrix<C64>;
    fn deref(&self) -> &DMatrix<C64> {
        &self.0
    }
}

/// Superoperator of `ρ ↦ A ρ B`.
pub fn sandwich_superop(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<SuperOperator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(SuperOperator(kron(&b.0.transpose(), &a.0)))
}

/// `ρ ↦ Aρ − ρA`
pub fn commutator_superop(a: &OperatorMatrix) -> SuperOperator {
    let id = OperatorMatrix::identity(a.dim());
    let left = kron(&id.0, &a.0);
    let right = kron(&a.0.transpose(), &id.0);
    SuperOperator(left - right)
}

pub fn vec(rho: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvec(v: &DVector<C64>) -> DMatrix<C64> {
    let d = (v.len() as f64).sqrt().round() as usize;
    assert_eq!(d * d, v.len(), "vector length is not a square");
    DMatrix::from_column_slice(d, d, v.as_slice())
}

/// Row functional `t` with `t·vec(ρ) = Tr ρ`.
pub fn trace_functional(dim: usize) -> DVector<C64> {
    vec(&DMatrix::identity(dim, dim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<C64> {
        DMatrix::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(FockBasis::new(1, 2, None).unwrap().dim(), 3);
        assert_eq!(FockBasis::new(2, 2, None).unwrap().dim(), 9);
        assert_eq!(FockBasis::new(4, 2, None).unwrap().dim(), 81);
        assert_eq!(FockBasis::new(4, 2, Some(2)).unwrap().dim(), 15);
    }

    #[test]
    fn total_cutoff_enumeration() {
        let b = FockBasis::new(2, 2, Some(2)).unwrap();
        let got: Vec<Vec<u8>> = b.states().to_vec();
        let want = vec![
            vec![0, 0],
            vec![0, 1],
            vec![0, 2],
            vec![1, 0],
            vec![1, 1],
            vec![2, 0],
        ];
        assert_eq!(got, want);
        assert_eq!(b.index_of(&[0, 0]), Some(0));
        assert_eq!(b.index_of(&[2, 2]), None);
    }

    #[test]
    fn zero_modes_rejected() {
        assert!(matches!(FockBasis::new(0, 2, None), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_mode_ladder() {
        let b = FockBasis::new(1, 2, None).unwrap();
        let a = b.annihilation(0).unwrap();
        assert_eq!(a[(0, 1)], C64::new(1.0, 0.0));
        assert!((a[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        assert!(a.column(0).iter().all(|z| *z == C64::new(0.0, 0.0)));
        let ad = b.creation(0).unwrap();
        let comm = a.dot(&ad).0 - ad.dot(&a).0;
        assert!((comm[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lowering_within_total_cutoff() {
        let b = FockBasis::new(2, 2, Some(2)).unwrap();
        let a1 = b.annihilation(0).unwrap();
        let from = b.index_of(&[1, 1]).unwrap();
        let to = b.index_of(&[0, 1]).unwrap();
        assert_eq!(a1[(to, from)], C64::new(1.0, 0.0));
        assert!(b.annihilation(2).is_err());
    }

    #[test]
    fn distinct_modes_commute() {
        let b = FockBasis::new(3, 2, None).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                if j == k {
                    continue;
                }
                let aj = b.annihilation(j).unwrap();
                let ak = b.annihilation(k).unwrap();
                let c = aj.dot(&ak).0 - ak.dot(&aj).0;
                assert!(c.max_norm() < 1e-14);
                let akd = ak.adjoint();
                let c = aj.dot(&akd).0 - akd.dot(&aj).0;
                assert!(c.max_norm() < 1e-14);
            }
        }
    }

    #[test]
    fn sandwich_identity() {
        let id = OperatorMatrix::identity(3);
        let s = sandwich_superop(&id, &id).unwrap();
        assert_eq!(s.0, DMatrix::identity(9, 9));
    }

    #[test]
    fn sandwich_matches_direct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = OperatorMatrix(random_matrix(&mut rng, 3));
            let b = OperatorMatrix(random_matrix(&mut rng, 3));
            let rho = random_matrix(&mut rng, 3);
            let s = sandwich_superop(&a, &b).unwrap();
            let direct = &a.0 * &rho * &b.0;
            assert!((s.apply(&rho) - &direct).max_norm() < 1e-13);
            let tr: C64 = s.apply(&rho).trace();
            assert!((tr - direct.trace()).norm() < 1e-13);
        }
    }

    #[test]
    fn sandwich_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = OperatorMatrix(random_matrix(&mut rng, 4));
        let b = OperatorMatrix(random_matrix(&mut rng, 4));
        let id = OperatorMatrix::identity(4);
        let lhs = &sandwich_superop(&a, &id).unwrap().0 * &sandwich_superop(&id, &b).unwrap().0;
        let rhs = sandwich_superop(&a, &b).unwrap().0;
        assert!((lhs - rhs).max_norm() < 1e-13);
    }

    #[test]
    fn commutator_matches_sandwiches() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = OperatorMatrix(random_matrix(&mut rng, 3));
        let rho = random_matrix(&mut rng, 3);
        let got = commutator_superop(&a).apply(&rho);
        assert!((got - (&a.0 * &rho - &rho * &a.0)).max_norm() < 1e-13);
    }

    #[test]
    fn sandwich_dimension_mismatch() {
        let r = sandwich_superop(&OperatorMatrix::identity(2), &OperatorMatrix::identity(3));
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn trace_functional_is_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_matrix(&mut rng, 5);
        let t = trace_functional(5);
        assert!((t.dot(&vec(&rho)) - rho.trace()).norm() < 1e-14);
    }

    #[test]
    fn vec_unvec_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_matrix(&mut rng, 4);
        assert_eq!(unvec(&vec(&m)), m);
        // column-stacking: second entry is row 1 of column 0
        assert_eq!(vec(&m)[1], m[(1, 0)]);
    }
}
