//! Ensembles of pure states, their density operators, and the equivalence
//! relation "same density operator".
//!
//! Many different ensembles share one density operator. The canonical member
//! of each class is the [`SpectralEnsemble`] built from the eigenpairs of
//! `rho`; [`random_equivalent_ensemble`] walks the rest of the class.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{
    hermitian_eig, hermiticity_residual, max_abs_diff, random_unitary, CMatrix, CVector,
    StateVector, C64,
};

pub const WEIGHT_SUM_TOL: f64 = 1e-10;
pub const DENSITY_TOL: f64 = 1e-10;
pub const DEFAULT_CUTOFF: f64 = 1e-10;

/// Target weights drawn by [`random_equivalent_ensemble`] below this value
/// trigger a redraw.
const MIN_RANDOM_WEIGHT: f64 = 1e-8;

/// Weighted list of normalized pure states. States need not be orthogonal and
/// repeated states are kept as given.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    dim: usize,
    weights: Vec<f64>,
    states: Vec<StateVector>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, states: Vec<StateVector>) -> Result<Self> {
        Self::with_sum_tol(weights, states, WEIGHT_SUM_TOL)
    }

    fn with_sum_tol(weights: Vec<f64>, states: Vec<StateVector>, sum_tol: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidEnsemble("no states".into()));
        }
        if weights.len() != states.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} weights for {} states",
                weights.len(),
                states.len()
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w <= 0.0)
        {
            return Err(Error::InvalidEnsemble(format!(
                "weight {i} is not strictly positive: {w}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > sum_tol {
            return Err(Error::InvalidEnsemble(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        let dim = states[0].dim();
        if let Some((i, s)) = states.iter().enumerate().find(|(_, s)| s.dim() != dim) {
            return Err(Error::InvalidEnsemble(format!(
                "state {i} has dimension {}, expected {dim}",
                s.dim()
            )));
        }
        Ok(Ensemble {
            dim,
            weights,
            states,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &StateVector)> {
        self.weights.iter().copied().zip(self.states.iter())
    }

    /// `rho = sum_i p_i |psi_i><psi_i|`.
    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: self.raw_density(),
        }
    }

    fn raw_density(&self) -> CMatrix {
        let mut rho = CMatrix::zeros(self.dim, self.dim);
        for (p, psi) in self.iter() {
            rho += psi.projector().scale(p);
        }
        rho
    }
}

/// Hermitian, positive-semidefinite, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::NotADensityMatrix(format!(
                "shape {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        crate::numerics::check_finite(matrix.iter())?;
        let herm = hermiticity_residual(&matrix);
        if herm > DENSITY_TOL {
            return Err(Error::NotADensityMatrix(format!(
                "not Hermitian (residual {herm:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace - C64::new(1.0, 0.0)).norm() > DENSITY_TOL {
            return Err(Error::NotADensityMatrix(format!("trace is {trace}")));
        }
        let min = hermitian_eig(&matrix)?
            .values
            .last()
            .copied()
            .unwrap_or(0.0);
        if min < -DENSITY_TOL {
            return Err(Error::NotADensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `max |rho_ij - sigma_ij|`.
    pub fn distance_max(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(max_abs_diff(&self.matrix, &other.matrix))
    }
}

/// Eigen-ensemble `(d_i, |phi_i>)` of a density operator: orthonormal states,
/// weights sorted in descending order, eigenvalues at or below the cutoff
/// dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEnsemble {
    base: Ensemble,
}

impl SpectralEnsemble {
    /// Builds a spectral ensemble from explicit eigenpairs. The states must be
    /// orthonormal and the weights sorted in descending order.
    pub fn new(weights: Vec<f64>, states: Vec<StateVector>) -> Result<Self> {
        let base = Ensemble::with_sum_tol(weights, states, 1e-9)?;
        let residual = crate::numerics::gram_residual(
            &base.states.iter().map(|s| s.amplitudes()).collect::<Vec<_>>(),
        );
        if residual > crate::numerics::tol::ORTHONORMAL {
            return Err(Error::NotOrthonormal {
                residual,
                tol: crate::numerics::tol::ORTHONORMAL,
            });
        }
        if base.weights.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidEnsemble(
                "spectral weights must be sorted in descending order".into(),
            ));
        }
        Ok(SpectralEnsemble { base })
    }

    pub fn base(&self) -> &Ensemble {
        &self.base
    }

    pub fn rank(&self) -> usize {
        self.base.len()
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.base.weights
    }

    pub fn states(&self) -> &[StateVector] {
        &self.base.states
    }

    pub fn into_base(self) -> Ensemble {
        self.base
    }
}

pub fn spectral_ensemble(rho: &DensityMatrix, cutoff: f64) -> Result<SpectralEnsemble> {
    if cutoff.is_nan() || cutoff < 0.0 {
        return Err(Error::InvalidParameter(format!("cutoff {cutoff} < 0")));
    }
    let eig = hermitian_eig(rho.matrix())?;
    let mut weights = Vec::new();
    let mut states = Vec::new();
    for (k, &lambda) in eig.values.iter().enumerate() {
        if lambda > cutoff {
            weights.push(lambda);
            states.push(StateVector::normalized(eig.vector(k))?);
        }
    }
    if weights.is_empty() {
        return Err(Error::NotADensityMatrix(
            "no eigenvalue above the cutoff".into(),
        ));
    }
    let spec = SpectralEnsemble::new(weights, states)?;
    let residual = max_abs_diff(&spec.base.raw_density(), rho.matrix());
    if residual > 1e-9 {
        return Err(Error::Contract(format!(
            "spectral reconstruction residual {residual:e} > 1e-9"
        )));
    }
    Ok(spec)
}

/// `max |rho_1 - rho_2|` for two ensembles on the same system.
pub fn equivalence_deviation(e1: &Ensemble, e2: &Ensemble) -> Result<f64> {
    if e1.dim != e2.dim {
        return Err(Error::DimensionMismatch {
            expected: e1.dim,
            found: e2.dim,
        });
    }
    Ok(max_abs_diff(&e1.raw_density(), &e2.raw_density()))
}

pub fn are_equivalent(e1: &Ensemble, e2: &Ensemble, tol: f64) -> Result<bool> {
    Ok(equivalence_deviation(e1, e2)? <= tol)
}

/// Draws an ensemble of `count` states with the same density operator as
/// `rho`, deterministically from `seed`.
///
/// A random `count x count` unitary supplies an isometry `V` (its first
/// `rank` rows); the states are `tau_j ~ sum_i sqrt(d_i) V_ij |phi_i>` and
/// the weights their squared norms.
pub fn random_equivalent_ensemble(rho: &DensityMatrix, count: usize, seed: u64) -> Result<Ensemble> {
    let spec = spectral_ensemble(rho, DEFAULT_CUTOFF)?;
    let rank = spec.rank();
    if count < rank {
        return Err(Error::CountTooSmall { count, rank });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amplitudes: Vec<f64> = spec.weights().iter().map(|d| d.sqrt()).collect();
    loop {
        let w = random_unitary(count, &mut rng);
        let unnormalized: Vec<CVector> = (0..count)
            .map(|j| {
                let mut v = CVector::zeros(spec.dim());
                for (i, phi) in spec.states().iter().enumerate() {
                    v += phi.amplitudes() * (w[(i, j)] * amplitudes[i]);
                }
                v
            })
            .collect();
        let norms_sq: Vec<f64> = unnormalized.iter().map(|v| v.norm_squared()).collect();
        if norms_sq.iter().any(|&p| p < MIN_RANDOM_WEIGHT) {
            continue;
        }
        let total: f64 = norms_sq.iter().sum();
        let weights = norms_sq.iter().map(|p| p / total).collect();
        let states = unnormalized
            .into_iter()
            .map(StateVector::normalized)
            .collect::<Result<Vec<_>>>()?;
        return Ensemble::new(weights, states);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{random_state, ONE, ZERO};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ket(a: &[f64]) -> StateVector {
        StateVector::from_slice(&a.iter().map(|&x| c(x)).collect::<Vec<_>>()).unwrap()
    }

    fn plus() -> StateVector {
        let s = 0.5f64.sqrt();
        ket(&[s, s])
    }

    fn minus() -> StateVector {
        let s = 0.5f64.sqrt();
        ket(&[s, -s])
    }

    fn z_mix(p: f64) -> Ensemble {
        Ensemble::new(vec![p, 1.0 - p], vec![ket(&[1.0, 0.0]), ket(&[0.0, 1.0])]).unwrap()
    }

    fn random_ensemble(dim: usize, count: usize, seed: u64) -> Ensemble {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<f64> = (0..count).map(|_| rand::Rng::random_range(&mut rng, 0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let states = (0..count).map(|_| random_state(dim, &mut rng)).collect();
        Ensemble::new(raw.iter().map(|w| w / total).collect(), states).unwrap()
    }

    #[test]
    fn pure_state_density() {
        let e = Ensemble::new(vec![1.0], vec![ket(&[1.0, 0.0])]).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        assert_eq!(e.density_matrix().matrix(), &want);
    }

    #[test]
    fn many_to_one() {
        let half = CMatrix::identity(2, 2).scale(0.5);
        let z = z_mix(0.5);
        let x = Ensemble::new(vec![0.5, 0.5], vec![plus(), minus()]).unwrap();
        assert!(max_abs_diff(z.density_matrix().matrix(), &half) < 1e-15);
        assert!(max_abs_diff(x.density_matrix().matrix(), &half) < 1e-15);
        assert!(are_equivalent(&z, &x, 1e-12).unwrap());
    }

    #[test]
    fn inequivalent_diagonals() {
        assert!(!are_equivalent(&z_mix(0.6), &z_mix(0.5), 1e-9).unwrap());
    }

    #[test]
    fn permuted_ensemble_is_equivalent() {
        let e = random_ensemble(3, 4, 1);
        let mut w = e.weights().to_vec();
        let mut s = e.states().to_vec();
        w.reverse();
        s.reverse();
        let p = Ensemble::new(w, s).unwrap();
        assert!(are_equivalent(&e, &p, 1e-12).unwrap());
    }

    #[test]
    fn duplicates_are_kept() {
        let e = Ensemble::new(vec![0.25, 0.25, 0.5], vec![plus(), plus(), minus()]).unwrap();
        assert_eq!(e.len(), 3);
        let f = Ensemble::new(vec![0.5, 0.5], vec![plus(), minus()]).unwrap();
        assert!(are_equivalent(&e, &f, 1e-12).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let e3 = Ensemble::new(vec![1.0], vec![ket(&[1.0, 0.0, 0.0])]).unwrap();
        assert!(matches!(
            are_equivalent(&z_mix(0.5), &e3, 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ensemble_validation() {
        assert!(Ensemble::new(vec![0.5, 0.4], vec![plus(), minus()]).is_err());
        assert!(Ensemble::new(vec![1.0, 0.0], vec![plus(), minus()]).is_err());
        assert!(Ensemble::new(vec![1.0], vec![plus(), minus()]).is_err());
        assert!(Ensemble::new(vec![0.5, 0.5], vec![plus(), ket(&[1.0, 0.0, 0.0])]).is_err());
    }

    #[test]
    fn density_validation() {
        let not_psd = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(matches!(DensityMatrix::new(not_psd), Err(Error::NotADensityMatrix(_))));
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let not_herm = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.1), ZERO, c(0.5)]);
        assert!(DensityMatrix::new(not_herm).is_err());
    }

    #[test]
    fn spectral_of_diagonal() {
        let rho = z_mix(0.3).density_matrix();
        let spec = spectral_ensemble(&rho, DEFAULT_CUTOFF).unwrap();
        assert_eq!(spec.rank(), 2);
        assert!((spec.weights()[0] - 0.7).abs() < 1e-14);
        assert!((spec.weights()[1] - 0.3).abs() < 1e-14);
        assert!((spec.states()[0].fidelity(&ket(&[0.0, 1.0])) - 1.0).abs() < 1e-12);
        assert!((spec.states()[1].fidelity(&ket(&[1.0, 0.0])) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_of_maximally_mixed() {
        let rho = z_mix(0.5).density_matrix();
        let spec = spectral_ensemble(&rho, DEFAULT_CUTOFF).unwrap();
        assert_eq!(spec.weights().len(), 2);
        for w in spec.weights() {
            assert!((w - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn spectral_round_trip() {
        let e = random_ensemble(3, 4, 9);
        let rho = e.density_matrix();
        let spec = spectral_ensemble(&rho, DEFAULT_CUTOFF).unwrap();
        assert!(max_abs_diff(spec.base().density_matrix().matrix(), rho.matrix()) <= 1e-9);
    }

    #[test]
    fn spectral_drops_null_space() {
        let e = random_ensemble(5, 2, 4);
        let spec = spectral_ensemble(&e.density_matrix(), DEFAULT_CUTOFF).unwrap();
        assert_eq!(spec.rank(), 2);
    }

    #[test]
    fn random_equivalent_of_pure_state() {
        let rho = Ensemble::new(vec![1.0], vec![ket(&[1.0, 0.0])]).unwrap().density_matrix();
        let e = random_equivalent_ensemble(&rho, 1, 0).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e.weights()[0] - 1.0).abs() < 1e-14);
        assert!((e.states()[0].fidelity(&ket(&[1.0, 0.0])) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_equivalent_of_maximally_mixed() {
        let rho = z_mix(0.5).density_matrix();
        let e = random_equivalent_ensemble(&rho, 3, 42).unwrap();
        assert_eq!(e.len(), 3);
        assert!((e.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(max_abs_diff(e.density_matrix().matrix(), rho.matrix()) <= 1e-9);
    }

    #[test]
    fn random_equivalent_reweights() {
        let rho = z_mix(0.7).density_matrix();
        let e = random_equivalent_ensemble(&rho, 2, 7).unwrap();
        assert!(max_abs_diff(e.density_matrix().matrix(), rho.matrix()) <= 1e-9);
        assert!((e.weights()[0] - 0.7).abs() > 1e-6);
    }

    #[test]
    fn random_equivalent_is_deterministic() {
        let rho = random_ensemble(3, 3, 2).density_matrix();
        let a = random_equivalent_ensemble(&rho, 5, 99).unwrap();
        let b = random_equivalent_ensemble(&rho, 5, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_equivalent_count_too_small() {
        let rho = z_mix(0.5).density_matrix();
        assert!(matches!(
            random_equivalent_ensemble(&rho, 1, 0),
            Err(Error::CountTooSmall { count: 1, rank: 2 })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn class_is_closed_under_resampling(seed in any::<u64>(), dim in 1usize..5,
                                                 states in 1usize..6, extra in 0usize..4) {
                let rho = random_ensemble(dim, states, seed).density_matrix();
                let rank = spectral_ensemble(&rho, DEFAULT_CUTOFF).unwrap().rank();
                let a = random_equivalent_ensemble(&rho, rank + extra, seed ^ 1).unwrap();
                let b = random_equivalent_ensemble(&rho, rank + extra + 1, seed ^ 2).unwrap();
                let spec = spectral_ensemble(&rho, DEFAULT_CUTOFF).unwrap();
                // reflexive, symmetric, transitive on {a, b, spec}
                for x in [&a, &b, spec.base()] {
                    prop_assert!(are_equivalent(x, x, 1e-9).unwrap());
                    for y in [&a, &b, spec.base()] {
                        prop_assert_eq!(are_equivalent(x, y, 1e-9).unwrap(),
                                        are_equivalent(y, x, 1e-9).unwrap());
                        prop_assert!(are_equivalent(x, y, 1e-9).unwrap());
                    }
                }
            }

            #[test]
            fn spectral_weights_are_a_probability_vector(seed in any::<u64>(), dim in 1usize..6,
                                                         states in 1usize..8) {
                let rho = random_ensemble(dim, states, seed).density_matrix();
                let spec = spectral_ensemble(&rho, DEFAULT_CUTOFF).unwrap();
                let w = spec.weights();
                prop_assert!(w.iter().all(|&x| x > 0.0));
                prop_assert!(w.windows(2).all(|p| p[0] >= p[1]));
                prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
        }
    }
}
