//! Purification of a spectral ensemble and steering of the purified state.
//!
//! The reference system `K` uses its standard basis as the correlated states
//! `|a_i>`, so the purified state is `sum_i sqrt(d_i) |phi_i> (x) e_i`.
//! Measuring `K` in the basis stored in a [`SteeringPlan`] leaves `S` in the
//! target ensemble.

use std::fmt;

use crate::ensembles::{equivalence_deviation, Ensemble, SpectralEnsemble};
use crate::error::{Error, Result};
use crate::numerics::{
    gram_residual, gram_schmidt_complete_with_tol, max_abs_diff, partial_trace_k,
    unitarity_residual, CMatrix, CVector, StateVector, C64,
};

pub const PURIFY_TOL: f64 = 1e-10;
pub const ISOMETRY_TOL: f64 = 1e-9;
pub const BASIS_TOL: f64 = 1e-10;
pub const PROBABILITY_SUM_TOL: f64 = 1e-10;
pub const RECOVERY_TOL: f64 = 1e-9;
/// Outcomes below this probability are omitted from measurement results.
pub const ZERO_PROBABILITY: f64 = 1e-12;

/// Normalized vector on `S (x) K`; amplitude `(s, k)` sits at `s * dim_k + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    dim_s: usize,
    dim_k: usize,
    amplitudes: CVector,
}

impl BipartiteState {
    pub fn new(dim_s: usize, dim_k: usize, amplitudes: CVector) -> Result<Self> {
        if dim_s == 0 || dim_k == 0 {
            return Err(Error::InvalidParameter("zero subsystem dimension".into()));
        }
        if amplitudes.len() != dim_s * dim_k {
            return Err(Error::DimensionMismatch {
                expected: dim_s * dim_k,
                found: amplitudes.len(),
            });
        }
        let state = StateVector::new(amplitudes)?;
        Ok(BipartiteState {
            dim_s,
            dim_k,
            amplitudes: state.into_inner(),
        })
    }

    pub fn product(s: &StateVector, k: &StateVector) -> Self {
        BipartiteState {
            dim_s: s.dim(),
            dim_k: k.dim(),
            amplitudes: s.tensor(k).into_inner(),
        }
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn as_state(&self) -> StateVector {
        StateVector::normalized(self.amplitudes.clone()).expect("bipartite state is normalized")
    }

    /// `|<self|other>|`.
    pub fn fidelity(&self, other: &BipartiteState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm()
    }

    /// `Tr_K |psi><psi|`.
    pub fn reduced_s(&self) -> CMatrix {
        let proj = &self.amplitudes * self.amplitudes.adjoint();
        partial_trace_k(&proj, self.dim_s, self.dim_k).expect("dimensions match by construction")
    }

    /// Applies a unitary on `S (x) K`, renormalizing away rounding drift.
    pub fn evolve(&self, u: &CMatrix) -> Result<BipartiteState> {
        if u.nrows() != self.amplitudes.len() || u.ncols() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                found: u.nrows(),
            });
        }
        let out = StateVector::normalized(u * &self.amplitudes)?;
        Ok(BipartiteState {
            dim_s: self.dim_s,
            dim_k: self.dim_k,
            amplitudes: out.into_inner(),
        })
    }
}

/// Everything needed to steer a purified state into one target ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringPlan {
    /// `b_ji = <phi_i|tau_j>`, one row per target state.
    pub coeffs: CMatrix,
    /// `V_ij = sqrt(p_j / d_i) b_ji`, rank x target count, orthonormal rows.
    pub isometry: CMatrix,
    /// `dim_k x dim_k` unitary whose leading block of rows is the isometry.
    pub unitary: CMatrix,
    /// Measurement basis `|B_j>` on `K`.
    pub basis: Vec<StateVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub index: usize,
    pub probability: f64,
    pub post_state: StateVector,
}

/// Smallest reference dimension that supports steering `spec` into `target`.
pub fn default_dim_k(spec: &SpectralEnsemble, target: &Ensemble) -> usize {
    spec.rank().max(target.len())
}

/// `Psi_T = sum_i sqrt(d_i) |phi_i> (x) e_i`.
pub fn purify(spec: &SpectralEnsemble, dim_k: usize) -> Result<BipartiteState> {
    if dim_k < spec.rank() {
        return Err(Error::ReferenceTooSmall {
            dim_k,
            required: spec.rank(),
        });
    }
    let dim_s = spec.dim();
    let mut amps = CVector::zeros(dim_s * dim_k);
    for (i, (d, phi)) in spec.base().iter().enumerate() {
        let root = d.sqrt();
        for s in 0..dim_s {
            amps[s * dim_k + i] = phi.amplitudes()[s] * root;
        }
    }
    let psi = BipartiteState {
        dim_s,
        dim_k,
        amplitudes: StateVector::normalized(amps)?.into_inner(),
    };
    let residual = max_abs_diff(&psi.reduced_s(), spec.base().density_matrix().matrix());
    if residual > PURIFY_TOL {
        return Err(Error::Contract(format!(
            "partial-trace residual {residual:e} > {PURIFY_TOL:e}"
        )));
    }
    Ok(psi)
}

/// Expansion coefficients `b_ji = <phi_i|tau_j>` of the target states in the
/// spectral basis.
pub fn steering_coefficients(
    spec: &SpectralEnsemble,
    target: &Ensemble,
    tol: f64,
) -> Result<CMatrix> {
    let deviation = equivalence_deviation(spec.base(), target)?;
    if deviation > tol {
        return Err(Error::NotEquivalent { deviation, tol });
    }
    let phis = spec.states();
    let coeffs = CMatrix::from_fn(target.len(), spec.rank(), |j, i| {
        phis[i].inner(&target.states()[j])
    });
    for (j, tau) in target.states().iter().enumerate() {
        let mut rebuilt = CVector::zeros(spec.dim());
        for (i, phi) in phis.iter().enumerate() {
            rebuilt += phi.amplitudes() * coeffs[(j, i)];
        }
        let residual = (tau.amplitudes() - rebuilt).norm();
        if residual > tol {
            return Err(Error::TargetOutsideSupport {
                index: j,
                residual,
                tol,
            });
        }
    }
    Ok(coeffs)
}

/// Builds the isometry `V`, its unitary completion on `K`, and the
/// measurement basis that prepares `target` from `purify(spec, dim_k)`.
pub fn steering_isometry(
    spec: &SpectralEnsemble,
    target: &Ensemble,
    dim_k: usize,
    tol: f64,
) -> Result<SteeringPlan> {
    let required = default_dim_k(spec, target);
    if dim_k < required {
        return Err(Error::ReferenceTooSmall { dim_k, required });
    }
    let coeffs = steering_coefficients(spec, target, tol)?;
    let d = spec.weights();
    let p = target.weights();
    let isometry = CMatrix::from_fn(spec.rank(), target.len(), |i, j| {
        coeffs[(j, i)] * (p[j] / d[i]).sqrt()
    });
    let residual = unitarity_residual(&isometry);
    if residual > ISOMETRY_TOL {
        return Err(Error::Contract(format!(
            "isometry rows not orthonormal: |V V^dagger - I| = {residual:e} > {ISOMETRY_TOL:e}"
        )));
    }

    let rows: Vec<CVector> = (0..spec.rank())
        .map(|i| {
            let mut w = CVector::zeros(dim_k);
            w.rows_mut(0, target.len())
                .copy_from(&isometry.row(i).transpose());
            w
        })
        .collect();
    let unitary = gram_schmidt_complete_with_tol(&rows, dim_k, ISOMETRY_TOL)?;

    // |A_i> = sum_j U_ij |B_j>  =>  |B_j> = sum_i conj(U_ij) e_i
    let basis = (0..dim_k)
        .map(|j| StateVector::normalized(unitary.column(j).map(|z| z.conj())))
        .collect::<Result<Vec<_>>>()?;

    Ok(SteeringPlan {
        coeffs,
        isometry,
        unitary,
        basis,
    })
}

/// Projective measurement of `K` in `basis`; returns `(||chi_j||^2, chi_j)`
/// for each outcome with non-negligible probability.
pub fn measure_reference(
    psi: &BipartiteState,
    basis: &[StateVector],
) -> Result<Vec<MeasurementOutcome>> {
    let dim_k = psi.dim_k;
    if basis.len() != dim_k {
        return Err(Error::BasisNotComplete {
            found: basis.len(),
            dim_k,
        });
    }
    if let Some(b) = basis.iter().find(|b| b.dim() != dim_k) {
        return Err(Error::DimensionMismatch {
            expected: dim_k,
            found: b.dim(),
        });
    }
    let residual = gram_residual(&basis.iter().map(|b| b.amplitudes()).collect::<Vec<_>>());
    if residual > BASIS_TOL {
        return Err(Error::BasisNotOrthonormal { residual });
    }

    let mut outcomes = Vec::new();
    let mut total = 0.0;
    let mut mixture = CMatrix::zeros(psi.dim_s, psi.dim_s);
    for (j, b) in basis.iter().enumerate() {
        let chi = CVector::from_fn(psi.dim_s, |s, _| {
            (0..dim_k)
                .map(|k| b.amplitudes()[k].conj() * psi.amplitudes[s * dim_k + k])
                .sum::<C64>()
        });
        let probability = chi.norm_squared();
        total += probability;
        mixture += &chi * chi.adjoint();
        if probability < ZERO_PROBABILITY {
            continue;
        }
        outcomes.push(MeasurementOutcome {
            index: j,
            probability,
            post_state: StateVector::normalized(chi)?,
        });
    }

    if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(Error::Contract(format!(
            "outcome probabilities sum to {total}"
        )));
    }
    let residual = max_abs_diff(&mixture, &psi.reduced_s());
    if residual > RECOVERY_TOL {
        return Err(Error::Contract(format!(
            "post-measurement mixture differs from Tr_K by {residual:e}"
        )));
    }
    Ok(outcomes)
}

/// Worst-case figures from one end-to-end steering run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringReport {
    /// `max_j |P(j) - p_j|`, outcomes outside the target counted in full.
    pub weight_deviation: f64,
    /// `max_j 1 - |<chi_j|tau_j>|`.
    pub state_infidelity: f64,
    /// `max |V V^dagger - I|`.
    pub isometry_residual: f64,
    /// `max |U U^dagger - I|`.
    pub unitary_residual: f64,
}

impl SteeringReport {
    pub fn passes(&self) -> bool {
        self.weight_deviation <= RECOVERY_TOL
            && self.state_infidelity <= RECOVERY_TOL
            && self.isometry_residual <= ISOMETRY_TOL
            && self.unitary_residual <= ISOMETRY_TOL
    }
}

fn verdict(value: f64, tol: f64) -> &'static str {
    if value <= tol {
        "ok"
    } else {
        "FAIL"
    }
}

impl fmt::Display for SteeringReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("max_weight_deviation", self.weight_deviation, RECOVERY_TOL),
            ("max_state_infidelity", self.state_infidelity, RECOVERY_TOL),
            ("isometry_residual", self.isometry_residual, ISOMETRY_TOL),
            ("unitary_residual", self.unitary_residual, ISOMETRY_TOL),
        ];
        for (name, value, tol) in rows {
            writeln!(f, "{name} = {value:.3e} (tol {tol:e}) {}", verdict(value, tol))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Preparation {
    pub state: BipartiteState,
    pub plan: SteeringPlan,
    pub outcomes: Vec<MeasurementOutcome>,
    pub report: SteeringReport,
}

/// Purifies `spec`, steers it toward `target`, and measures.
///
/// Fails with [`Error::Contract`] when the measured ensemble does not match
/// the target within [`RECOVERY_TOL`].
pub fn prepare_ensemble(
    spec: &SpectralEnsemble,
    target: &Ensemble,
    dim_k: usize,
    tol: f64,
) -> Result<Preparation> {
    let plan = steering_isometry(spec, target, dim_k, tol)?;
    let state = purify(spec, dim_k)?;
    let outcomes = measure_reference(&state, &plan.basis)?;
    let report = compare_outcomes(&outcomes, target, &plan);
    if !report.passes() {
        return Err(Error::Contract(format!("steering failed:\n{report}")));
    }
    Ok(Preparation {
        state,
        plan,
        outcomes,
        report,
    })
}

fn compare_outcomes(
    outcomes: &[MeasurementOutcome],
    target: &Ensemble,
    plan: &SteeringPlan,
) -> SteeringReport {
    let mut weight_deviation: f64 = 0.0;
    let mut state_infidelity: f64 = 0.0;
    for (j, (p, tau)) in target.iter().enumerate() {
        match outcomes.iter().find(|o| o.index == j) {
            Some(o) => {
                weight_deviation = weight_deviation.max((o.probability - p).abs());
                state_infidelity = state_infidelity.max(1.0 - o.post_state.fidelity(tau));
            }
            None => {
                weight_deviation = weight_deviation.max(p);
                state_infidelity = 1.0;
            }
        }
    }
    for o in outcomes.iter().filter(|o| o.index >= target.len()) {
        weight_deviation = weight_deviation.max(o.probability);
    }
    SteeringReport {
        weight_deviation,
        state_infidelity: state_infidelity.max(0.0),
        isometry_residual: unitarity_residual(&plan.isometry),
        unitary_residual: unitarity_residual(&plan.unitary),
    }
}
