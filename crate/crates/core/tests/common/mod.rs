#![allow(dead_code)]

use purifykit::ensembles::{spectral_ensemble, DEFAULT_CUTOFF};
use purifykit::numerics::{random_state, random_unitary};
use purifykit::{Ensemble, SpectralEnsemble, StateVector};
use rand::Rng;

/// Ensemble of `count` random states in dimension `dim` with weights bounded
/// away from zero.
pub fn random_ensemble<R: Rng>(dim: usize, count: usize, rng: &mut R) -> Ensemble {
    let raw: Vec<f64> = (0..count).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let states = (0..count).map(|_| random_state(dim, rng)).collect();
    Ensemble::new(raw.iter().map(|w| w / total).collect(), states).unwrap()
}

pub fn random_spectral<R: Rng>(dim: usize, count: usize, rng: &mut R) -> SpectralEnsemble {
    let e = random_ensemble(dim, count, rng);
    spectral_ensemble(&e.density_matrix(), DEFAULT_CUTOFF).unwrap()
}

/// First `count` columns of a random unitary.
pub fn random_orthonormal<R: Rng>(dim: usize, count: usize, rng: &mut R) -> Vec<StateVector> {
    let u = random_unitary(dim, rng);
    (0..count)
        .map(|j| StateVector::normalized(u.column(j).into_owned()).unwrap())
        .collect()
}
