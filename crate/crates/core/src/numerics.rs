//! Dense complex linear algebra shared by every other module.
//!
//! Operators are `nalgebra` dynamic matrices over `Complex<f64>`. States on a
//! single system are wrapped in [`StateVector`], which enforces unit norm.
//! The Hermitian eigensolver is nalgebra's `SymmetricEigen`; everything built
//! on top of it (sorting, exponentials, partial traces, completions) lives here.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default tolerances. Functions that accept an explicit tolerance use these
/// when called through their short form.
pub mod tol {
    /// Hermiticity check on eigensolver and exponential inputs.
    pub const HERMITIAN: f64 = 1e-10;
    /// Unit norm of a [`super::StateVector`].
    pub const NORM: f64 = 1e-12;
    /// Pairwise orthonormality of vector families.
    pub const ORTHONORMAL: f64 = 1e-10;
    /// Completion candidates with a smaller residual after projection are skipped.
    pub const COMPLETION_SKIP: f64 = 1e-8;
}

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    /// Wraps amplitudes that are already normalized within [`tol::NORM`].
    pub fn new(amplitudes: CVector) -> Result<Self> {
        check_finite(amplitudes.iter())?;
        if amplitudes.is_empty() {
            return Err(Error::InvalidParameter("state of dimension 0".into()));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tol::NORM {
            return Err(Error::NotNormalized { norm });
        }
        Ok(StateVector(amplitudes))
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        check_finite(amplitudes.iter())?;
        let norm = amplitudes.norm();
        if amplitudes.is_empty() || norm == 0.0 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(StateVector(amplitudes.unscale(norm)))
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amplitudes))
    }

    /// Standard basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, bound: dim });
        }
        let mut v = CVector::zeros(dim);
        v[index] = ONE;
        Ok(StateVector(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|<self|other>|`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    /// `|self><self|`.
    pub fn projector(&self) -> CMatrix {
        &self.0 * self.0.adjoint()
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector(kron_vec(&self.0, &other.0))
    }
}

pub fn check_finite<'a>(entries: impl IntoIterator<Item = &'a C64>) -> Result<()> {
    match entries
        .into_iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

/// `max |m_ij|`.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// `max |m m^dagger - I|`.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    let prod = m * m.adjoint();
    max_abs_diff(&prod, &CMatrix::identity(m.nrows(), m.nrows()))
}

/// Max deviation of the Gram matrix of `vectors` from the identity.
pub fn gram_residual(vectors: &[&CVector]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, u) in vectors.iter().enumerate() {
        for (b, v) in vectors.iter().enumerate() {
            let g = u.dotc(v);
            let want = if a == b { ONE } else { ZERO };
            worst = worst.max((g - want).norm());
        }
    }
    worst
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

fn require_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn require_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    require_square(m)?;
    check_finite(m.iter())?;
    let residual = hermiticity_residual(m);
    if residual > tol {
        return Err(Error::NotHermitian { residual, tol });
    }
    Ok(())
}

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
/// Column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    /// `sum_k lambda_k v_k v_k^dagger`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.vectors.nrows();
        let mut m = CMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let v = self.vectors.column(k);
            m += (v * v.adjoint()).scale(lambda);
        }
        m
    }
}

pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEigen> {
    require_hermitian(m, tol::HERMITIAN)?;
    // SymmetricEigen reads one triangle only; average out the allowed asymmetry.
    let sym = (m + m.adjoint()).unscale(2.0);
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Contract("Hermitian eigensolver did not converge".into()))?;

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let columns: Vec<CVector> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).into_owned())
        .collect();
    Ok(HermitianEigen {
        values,
        vectors: CMatrix::from_columns(&columns),
    })
}

/// Traces out the second tensor factor of an operator on `S (x) K`.
pub fn partial_trace_k(m: &CMatrix, dim_s: usize, dim_k: usize) -> Result<CMatrix> {
    let side = require_square(m)?;
    if side != dim_s * dim_k {
        return Err(Error::DimensionMismatch {
            expected: dim_s * dim_k,
            found: side,
        });
    }
    Ok(CMatrix::from_fn(dim_s, dim_s, |s1, s2| {
        (0..dim_k)
            .map(|k| m[(s1 * dim_k + k, s2 * dim_k + k)])
            .sum()
    }))
}

/// `exp(-i * scale * h)` for Hermitian `h`, through its eigendecomposition.
pub fn mat_exp_hermitian(h: &CMatrix, scale: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    let phases = CVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&l| C64::from_polar(1.0, -scale * l)),
    );
    let v = &eig.vectors;
    Ok(v * CMatrix::from_diagonal(&phases) * v.adjoint())
}

/// Extends orthonormal `rows` to a `target_dim x target_dim` unitary.
///
/// The first rows of the result are the inputs, unchanged. Missing rows come
/// from sweeping the standard basis in index order with two passes of
/// Gram-Schmidt, skipping candidates that are (numerically) in the span.
pub fn gram_schmidt_complete(rows: &[CVector], target_dim: usize) -> Result<CMatrix> {
    gram_schmidt_complete_with_tol(rows, target_dim, tol::ORTHONORMAL)
}

pub fn gram_schmidt_complete_with_tol(
    rows: &[CVector],
    target_dim: usize,
    orthonormal_tol: f64,
) -> Result<CMatrix> {
    if rows.len() > target_dim {
        return Err(Error::TooManyRows {
            rows: rows.len(),
            target_dim,
        });
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != target_dim) {
        return Err(Error::DimensionMismatch {
            expected: target_dim,
            found: bad.len(),
        });
    }
    for r in rows {
        check_finite(r.iter())?;
    }
    let residual = gram_residual(&rows.iter().collect::<Vec<_>>());
    if residual > orthonormal_tol {
        return Err(Error::NotOrthonormal {
            residual,
            tol: orthonormal_tol,
        });
    }

    let mut basis: Vec<CVector> = rows.to_vec();
    for k in 0..target_dim {
        if basis.len() == target_dim {
            break;
        }
        let mut candidate = CVector::zeros(target_dim);
        candidate[k] = ONE;
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&candidate);
                candidate -= b * overlap;
            }
        }
        let norm = candidate.norm();
        if norm < tol::COMPLETION_SKIP {
            continue;
        }
        basis.push(candidate.unscale(norm));
    }
    if basis.len() != target_dim {
        return Err(Error::Contract(format!(
            "completion produced {} of {target_dim} rows",
            basis.len()
        )));
    }
    Ok(CMatrix::from_fn(target_dim, target_dim, |i, j| basis[i][j]))
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random unitary from the QR factorization of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    loop {
        let g = CMatrix::from_fn(dim, dim, |_, _| random_complex(rng));
        let mut columns: Vec<CVector> = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut v = g.column(j).into_owned();
            for _ in 0..2 {
                for c in &columns {
                    let overlap = c.dotc(&v);
                    v -= c * overlap;
                }
            }
            let norm = v.norm();
            if norm < 1e-6 {
                break;
            }
            columns.push(v.unscale(norm));
        }
        if columns.len() == dim {
            return CMatrix::from_columns(&columns);
        }
    }
}

/// Random normalized state.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| random_complex(rng));
        if v.norm() > 1e-6 {
            return StateVector::normalized(v).expect("nonzero finite vector");
        }
    }
}
