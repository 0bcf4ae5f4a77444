//! Qubit realization of the purification: a basis rotation on `S`, a CNOT
//! with `S` as control and `K` as target, and the inverse rotation.
//!
//! Tensor order is `S (x) K` throughout, so the 4x4 index is `2 s + k`.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use crate::dynamics::{evolution_numeric, EvolutionParams, HamiltonianModel};
use crate::ensembles::{random_equivalent_ensemble, Ensemble, SpectralEnsemble};
use crate::error::{Error, Result};
use crate::numerics::{kron, unitarity_residual, CMatrix, StateVector, C64, ONE, ZERO};
use crate::purification::{measure_reference, steering_isometry, BipartiteState, MeasurementOutcome};

pub const GATE_TOL: f64 = 1e-12;
pub const MAPPING_TOL: f64 = 1e-12;
pub const CIRCUIT_UNITARITY_TOL: f64 = 1e-10;
pub const RECOVERY_TOL: f64 = 1e-10;
pub const STEERING_TOL: f64 = 1e-9;
pub const CROSS_CHECK_TOL: f64 = 1e-10;

/// Rotation angle that maps `|0>` to `|+>`.
pub const HADAMARD_THETA: f64 = FRAC_PI_4;

/// Seed of the non-spectral target drawn by [`qubit_demo`].
pub const DEMO_TARGET_SEED: u64 = 2002;
/// Number of states in that target.
pub const DEMO_TARGET_COUNT: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    arity: usize,
    matrix: CMatrix,
}

impl Gate {
    pub fn new(arity: usize, matrix: CMatrix) -> Result<Self> {
        if !(1..=2).contains(&arity) {
            return Err(Error::InvalidParameter(format!("arity {arity} not in 1..=2")));
        }
        let side = 1 << arity;
        if matrix.shape() != (side, side) {
            return Err(Error::DimensionMismatch {
                expected: side,
                found: matrix.nrows(),
            });
        }
        let residual = unitarity_residual(&matrix);
        if residual > GATE_TOL {
            return Err(Error::Contract(format!(
                "gate is not unitary: residual {residual:e}"
            )));
        }
        Ok(Gate { arity, matrix })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> Gate {
        Gate {
            arity: self.arity,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.dim() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.ncols(),
                found: state.dim(),
            });
        }
        StateVector::normalized(&self.matrix * state.amplitudes())
    }
}

pub fn cnot() -> Gate {
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(3, 2)] = ONE;
    m[(2, 3)] = ONE;
    Gate { arity: 2, matrix: m }
}

/// `R|0> = cos(theta)|0> + e^{i phase} sin(theta)|1>`,
/// `R|1> = -e^{-i phase} sin(theta)|0> + cos(theta)|1>`.
pub fn rotation(theta: f64, phase: f64) -> Gate {
    let (s, c) = theta.sin_cos();
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(c, 0.0),
            -C64::from_polar(s, -phase),
            C64::from_polar(s, phase),
            C64::new(c, 0.0),
        ],
    );
    Gate { arity: 1, matrix: m }
}

/// `(R (x) 1) CNOT (R^dagger (x) 1)`.
pub fn purification_circuit(r: &Gate) -> Result<Gate> {
    if r.arity != 1 {
        return Err(Error::ArityMismatch {
            expected: 1,
            found: r.arity,
        });
    }
    let id = CMatrix::identity(2, 2);
    let lift = kron(&r.matrix, &id);
    let lift_dagger = kron(&r.matrix.adjoint(), &id);
    let matrix = lift * cnot().matrix * lift_dagger;
    let residual = unitarity_residual(&matrix);
    if residual > CIRCUIT_UNITARITY_TOL {
        return Err(Error::Contract(format!(
            "circuit is not unitary: residual {residual:e}"
        )));
    }
    Ok(Gate { arity: 2, matrix })
}

/// `|x+> = R|0>`, `|x-> = R|1>`.
pub fn rotated_basis(r: &Gate) -> (StateVector, StateVector) {
    let col = |j| StateVector::normalized(r.matrix.column(j).into_owned()).expect("unitary column");
    (col(0), col(1))
}

fn reference(k: usize) -> StateVector {
    StateVector::basis(2, k).expect("k < 2")
}

/// Worst deviations of `|x+ a0> -> |x+ a0>` and `|x- a0> -> |x- a1>`.
pub fn mapping_residuals(circuit: &Gate, r: &Gate) -> Result<(f64, f64)> {
    let (xp, xm) = rotated_basis(r);
    let deviation = |input: &StateVector, want: &StateVector| -> Result<f64> {
        let out = &circuit.matrix * input.amplitudes();
        Ok((out - want.amplitudes()).camax())
    };
    Ok((
        deviation(&xp.tensor(&reference(0)), &xp.tensor(&reference(0)))?,
        deviation(&xm.tensor(&reference(0)), &xm.tensor(&reference(1)))?,
    ))
}

/// A recovered ensemble member next to the one it should equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovered {
    pub outcome: MeasurementOutcome,
    pub expected_weight: f64,
    pub expected_state: StateVector,
}

impl Recovered {
    pub fn weight_deviation(&self) -> f64 {
        (self.outcome.probability - self.expected_weight).abs()
    }

    pub fn infidelity(&self) -> f64 {
        (1.0 - self.outcome.post_state.fidelity(&self.expected_state)).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct QubitDemoReport {
    pub q: f64,
    pub theta: f64,
    pub phase: f64,
    pub circuit: Gate,
    pub circuit_unitarity: f64,
    pub mapping_plus: f64,
    pub mapping_minus: f64,
    /// Measurement of `K` in its standard basis: `(q, x+; 1-q, x-)`.
    pub diagonal: Vec<Recovered>,
    /// Measurement of `K` in a steering basis for `target`.
    pub steered: Vec<Recovered>,
    pub target: Ensemble,
    /// Smallest fidelity between the circuit and the Hamiltonian propagator
    /// on `|x+ a0>`, `|x- a0>` and the input superposition.
    pub dynamics_fidelity: f64,
}

fn worst(items: &[Recovered]) -> (f64, f64) {
    items.iter().fold((0.0, 0.0), |(w, f), r| {
        (f64::max(w, r.weight_deviation()), f64::max(f, r.infidelity()))
    })
}

impl QubitDemoReport {
    pub fn passes(&self) -> bool {
        let (dw, df) = worst(&self.diagonal);
        let (sw, sf) = worst(&self.steered);
        self.circuit_unitarity <= CIRCUIT_UNITARITY_TOL
            && self.mapping_plus <= MAPPING_TOL
            && self.mapping_minus <= MAPPING_TOL
            && dw <= RECOVERY_TOL
            && df <= RECOVERY_TOL
            && sw <= STEERING_TOL
            && sf <= STEERING_TOL
            && self.steered.len() == self.target.len()
            && 1.0 - self.dynamics_fidelity <= CROSS_CHECK_TOL
    }
}

fn fmt_c(z: &C64) -> String {
    format!("{:+.6}{:+.6}i", z.re, z.im)
}

fn fmt_state(s: &StateVector) -> String {
    let parts: Vec<String> = s.amplitudes().iter().map(fmt_c).collect();
    format!("({})", parts.join(", "))
}

fn line(f: &mut fmt::Formatter<'_>, name: &str, value: f64, tol: f64) -> fmt::Result {
    let verdict = if value <= tol { "ok" } else { "FAIL" };
    writeln!(f, "{name} = {value:.3e} (tol {tol:e}) {verdict}")
}

impl fmt::Display for QubitDemoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "q = {}, theta = {}, phase = {}", self.q, self.theta, self.phase)?;
        writeln!(f, "circuit (R (x) 1) CNOT (R^dagger (x) 1):")?;
        let m = self.circuit.matrix();
        for i in 0..4 {
            let row: Vec<String> = (0..4).map(|j| fmt_c(&m[(i, j)])).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        line(f, "circuit_unitarity", self.circuit_unitarity, CIRCUIT_UNITARITY_TOL)?;
        line(f, "mapping_residual[x+ a0 -> x+ a0]", self.mapping_plus, MAPPING_TOL)?;
        line(f, "mapping_residual[x- a0 -> x- a1]", self.mapping_minus, MAPPING_TOL)?;

        writeln!(f, "recovered ensemble (standard basis on K):")?;
        for r in &self.diagonal {
            writeln!(
                f,
                "  j={} p={:.12} state={}",
                r.outcome.index,
                r.outcome.probability,
                fmt_state(&r.outcome.post_state)
            )?;
        }
        let (dw, df) = worst(&self.diagonal);
        line(f, "diagonal_weight_deviation", dw, RECOVERY_TOL)?;
        line(f, "diagonal_state_infidelity", df, RECOVERY_TOL)?;

        writeln!(f, "recovered ensemble (steering basis on K):")?;
        for r in &self.steered {
            writeln!(
                f,
                "  j={} p={:.12} state={} target_p={:.12}",
                r.outcome.index,
                r.outcome.probability,
                fmt_state(&r.outcome.post_state),
                r.expected_weight
            )?;
        }
        let (sw, sf) = worst(&self.steered);
        line(f, "steered_weight_deviation", sw, STEERING_TOL)?;
        line(f, "steered_state_infidelity", sf, STEERING_TOL)?;
        line(
            f,
            "circuit_vs_hamiltonian_infidelity",
            1.0 - self.dynamics_fidelity,
            CROSS_CHECK_TOL,
        )
    }
}

/// Runs the qubit purification end to end and steers the result into a
/// non-spectral member of the class, drawn with [`DEMO_TARGET_SEED`].
pub fn qubit_demo(q: f64, theta: f64, phase: f64) -> Result<QubitDemoReport> {
    qubit_demo_with_target(q, theta, phase, None)
}

/// As [`qubit_demo`], steering into `target` when given.
pub fn qubit_demo_with_target(
    q: f64,
    theta: f64,
    phase: f64,
    target: Option<Ensemble>,
) -> Result<QubitDemoReport> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("q = {q} not in (0, 1)")));
    }
    if !theta.is_finite() || !phase.is_finite() {
        return Err(Error::InvalidParameter("theta and phase must be finite".into()));
    }
    let r = rotation(theta, phase);
    let circuit = purification_circuit(&r)?;
    let (mapping_plus, mapping_minus) = mapping_residuals(&circuit, &r)?;
    let (xp, xm) = rotated_basis(&r);

    let weights = [q, 1.0 - q];
    let members = [xp.clone(), xm.clone()];
    let system = xp.amplitudes() * C64::new(q.sqrt(), 0.0)
        + xm.amplitudes() * C64::new((1.0 - q).sqrt(), 0.0);
    let psi0 = BipartiteState::product(&StateVector::normalized(system)?, &reference(0));
    let psi_t = psi0.evolve(circuit.matrix())?;

    let standard = [reference(0), reference(1)];
    let diagonal = measure_reference(&psi_t, &standard)?
        .into_iter()
        .map(|o| Recovered {
            expected_weight: weights[o.index],
            expected_state: members[o.index].clone(),
            outcome: o,
        })
        .collect();

    // Spectral ordering may swap the two members relative to the circuit's
    // reference labels; `order[i]` is the circuit label of spectral index i.
    let order: Vec<usize> = if q >= 0.5 { vec![0, 1] } else { vec![1, 0] };
    let spec = SpectralEnsemble::new(
        order.iter().map(|&i| weights[i]).collect(),
        order.iter().map(|&i| members[i].clone()).collect(),
    )?;
    let rho = spec.base().density_matrix();
    let target = match target {
        Some(t) => t,
        None => random_equivalent_ensemble(&rho, DEMO_TARGET_COUNT, DEMO_TARGET_SEED)?,
    };
    let dim_k = 2.max(target.len());
    let plan = steering_isometry(&spec, &target, dim_k, STEERING_TOL)?;
    let basis = plan
        .basis
        .iter()
        .map(|b| {
            let mut v = nalgebra::DVector::from_element(dim_k, ZERO);
            for (i, &label) in order.iter().enumerate() {
                v[label] = b.amplitudes()[i];
            }
            for k in order.len()..dim_k {
                v[k] = b.amplitudes()[k];
            }
            StateVector::normalized(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let embedded = embed_reference(&psi_t, dim_k)?;
    let steered = measure_reference(&embedded, &basis)?
        .into_iter()
        .filter(|o| o.index < target.len())
        .map(|o| Recovered {
            expected_weight: target.weights()[o.index],
            expected_state: target.states()[o.index].clone(),
            outcome: o,
        })
        .collect();

    let model = HamiltonianModel::new(vec![xp.clone(), xm.clone()], 2)?;
    let u = evolution_numeric(&model, &EvolutionParams::canonical())?;
    let dynamics_fidelity = [
        xp.tensor(&reference(0)),
        xm.tensor(&reference(0)),
        psi0.as_state(),
    ]
    .iter()
    .map(|s| {
        let by_circuit = StateVector::normalized(circuit.matrix() * s.amplitudes())?;
        let by_hamiltonian = StateVector::normalized(&u * s.amplitudes())?;
        Ok(by_circuit.fidelity(&by_hamiltonian))
    })
    .collect::<Result<Vec<f64>>>()?
    .into_iter()
    .fold(1.0, f64::min);

    Ok(QubitDemoReport {
        q,
        theta,
        phase,
        circuit_unitarity: unitarity_residual(circuit.matrix()),
        circuit,
        mapping_plus,
        mapping_minus,
        diagonal,
        steered,
        target,
        dynamics_fidelity,
    })
}

/// Views a state on `S (x) C^2` as a state on `S (x) C^dim_k` by padding the
/// reference with unused levels.
fn embed_reference(psi: &BipartiteState, dim_k: usize) -> Result<BipartiteState> {
    if dim_k == psi.dim_k() {
        return Ok(psi.clone());
    }
    let mut amps = nalgebra::DVector::from_element(psi.dim_s() * dim_k, ZERO);
    for s in 0..psi.dim_s() {
        for k in 0..psi.dim_k() {
            amps[s * dim_k + k] = psi.amplitudes()[s * psi.dim_k() + k];
        }
    }
    BipartiteState::new(psi.dim_s(), dim_k, amps)
}
