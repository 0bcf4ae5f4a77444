//! The correlating Hamiltonian `H = sum_j H_j` that drives
//! `|phi_j> (x) e_0` to `|phi_j> (x) e_j` after a quarter period.
//!
//! Each term is `H_j = i |phi_j><phi_j| (x) (|e_j><e_0| - |e_0><e_j|)`. On
//! the plane spanned by `|phi_j> e_0` and `|phi_j> e_j` it generates a
//! rotation; every odd power of `H_j` equals `H_j` and every even power equals
//! the projector onto that plane, so at `omega * T = pi/2` the propagator
//! collapses to `1 - H_j^2 - i H_j`. With this orientation of the dyads the
//! rotation lands on `+|phi_j> e_j`; the opposite orientation lands on the
//! negated state.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use crate::ensembles::SpectralEnsemble;
use crate::error::{Error, Result};
use crate::numerics::{
    gram_residual, kron, mat_exp_hermitian, max_abs, max_abs_diff, unitarity_residual, CMatrix,
    CVector, StateVector, I,
};
use crate::purification::BipartiteState;

pub const ALGEBRA_TOL: f64 = 1e-12;
pub const EVOLUTION_TOL: f64 = 1e-10;
pub const RESONANCE_TOL: f64 = 1e-12;
pub const DYNAMIC_PURIFY_TOL: f64 = 1e-9;

fn dyad(dim: usize, row: usize, col: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(row, col)] = crate::numerics::ONE;
    m
}

/// `H_j` on `S (x) K` for the reference states `|a_k> = e_k`. `H_0` vanishes.
pub fn build_term(j: usize, phi: &[StateVector], dim_k: usize) -> Result<CMatrix> {
    if j >= dim_k {
        return Err(Error::IndexOutOfRange {
            index: j,
            bound: dim_k,
        });
    }
    let phi_j = phi.get(j).ok_or(Error::IndexOutOfRange {
        index: j,
        bound: phi.len(),
    })?;
    let swap = dyad(dim_k, j, 0) - dyad(dim_k, 0, j);
    Ok(kron(&phi_j.projector(), &swap) * I)
}

/// Dense model of the correlating Hamiltonian for orthonormal `phi`.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    dim_s: usize,
    dim_k: usize,
    phi: Vec<StateVector>,
    terms: Vec<CMatrix>,
    total: CMatrix,
}

impl HamiltonianModel {
    pub fn new(phi: Vec<StateVector>, dim_k: usize) -> Result<Self> {
        let dim_s = phi
            .first()
            .map(StateVector::dim)
            .ok_or_else(|| Error::InvalidParameter("empty phi basis".into()))?;
        if let Some(p) = phi.iter().find(|p| p.dim() != dim_s) {
            return Err(Error::DimensionMismatch {
                expected: dim_s,
                found: p.dim(),
            });
        }
        let residual = gram_residual(&phi.iter().map(|p| p.amplitudes()).collect::<Vec<_>>());
        if residual > crate::numerics::tol::ORTHONORMAL {
            return Err(Error::NotOrthonormal {
                residual,
                tol: crate::numerics::tol::ORTHONORMAL,
            });
        }
        if phi.len() > dim_k {
            return Err(Error::ReferenceTooSmall {
                dim_k,
                required: phi.len(),
            });
        }
        let terms = (0..phi.len())
            .map(|j| build_term(j, &phi, dim_k))
            .collect::<Result<Vec<_>>>()?;
        let n = dim_s * dim_k;
        let total = terms.iter().fold(CMatrix::zeros(n, n), |acc, h| acc + h);
        Ok(HamiltonianModel {
            dim_s,
            dim_k,
            phi,
            terms,
            total,
        })
    }

    /// Model for the eigenstates of `spec`, with `dim_k = rank`.
    pub fn for_spectral(spec: &SpectralEnsemble) -> Result<Self> {
        Self::new(spec.states().to_vec(), spec.rank())
    }

    pub fn dim_s(&self) -> usize {
        self.dim_s
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn phi(&self) -> &[StateVector] {
        &self.phi
    }

    pub fn terms(&self) -> &[CMatrix] {
        &self.terms
    }

    pub fn total(&self) -> &CMatrix {
        &self.total
    }

    fn reference(&self, k: usize) -> StateVector {
        StateVector::basis(self.dim_k, k).expect("index below dim_k")
    }

    /// `|phi_j> (x) e_0`.
    pub fn ready_state(&self, j: usize) -> BipartiteState {
        BipartiteState::product(&self.phi[j], &self.reference(0))
    }

    /// `|phi_j> (x) e_j`.
    pub fn correlated_state(&self, j: usize) -> BipartiteState {
        BipartiteState::product(&self.phi[j], &self.reference(j))
    }

    pub fn algebra(&self) -> AlgebraResiduals {
        let mut out = AlgebraResiduals::default();
        for (j, h) in self.terms.iter().enumerate() {
            out.hermiticity = out
                .hermiticity
                .max(crate::numerics::hermiticity_residual(h));
            let p = power_identities_check(h, &self.phi[j], j, self.dim_k);
            out.cube = out.cube.max(p.cube_residual);
            out.square = out.square.max(p.square_residual);
            let ready = self.ready_state(j);
            for (k, g) in self.terms.iter().enumerate() {
                if k == j {
                    continue;
                }
                let comm = h * g - g * h;
                out.commutator = out.commutator.max(max_abs(&comm));
                out.cross_product = out.cross_product.max(max_abs(&(h * g)));
                out.annihilation = out
                    .annihilation
                    .max((g * ready.amplitudes()).camax());
            }
        }
        out
    }
}

/// Worst residuals of the algebraic identities over all terms of a model.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AlgebraResiduals {
    pub hermiticity: f64,
    pub cube: f64,
    pub square: f64,
    pub commutator: f64,
    pub cross_product: f64,
    /// `max |H_k (|phi_j> (x) e_0)|` over `k != j`.
    pub annihilation: f64,
}

impl AlgebraResiduals {
    pub fn max(&self) -> f64 {
        [
            self.hermiticity,
            self.cube,
            self.square,
            self.commutator,
            self.cross_product,
            self.annihilation,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerReport {
    /// `max |H_j^3 - H_j|`.
    pub cube_residual: f64,
    /// `max |H_j^2 - |phi_j><phi_j| (x) (e_0 e_0^dagger + e_j e_j^dagger)|`.
    pub square_residual: f64,
}

impl PowerReport {
    pub fn passes(&self) -> bool {
        self.cube_residual <= ALGEBRA_TOL && self.square_residual <= ALGEBRA_TOL
    }
}

pub fn power_identities_check(
    hj: &CMatrix,
    phi_j: &StateVector,
    j: usize,
    dim_k: usize,
) -> PowerReport {
    let square = hj * hj;
    let cube = &square * hj;
    let expected_square = if j == 0 {
        CMatrix::zeros(hj.nrows(), hj.ncols())
    } else {
        kron(&phi_j.projector(), &(dyad(dim_k, 0, 0) + dyad(dim_k, j, j)))
    };
    PowerReport {
        cube_residual: max_abs_diff(&cube, hj),
        square_residual: max_abs_diff(&square, &expected_square),
    }
}

/// Interaction strength and duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionParams {
    pub omega: f64,
    pub time: f64,
}

impl EvolutionParams {
    /// Requires `cos(omega T) = 0` and `sin(omega T) = 1`.
    pub fn new(omega: f64, time: f64) -> Result<Self> {
        let p = EvolutionParams { omega, time };
        if !p.is_resonant() {
            return Err(Error::InvalidParameter(format!(
                "omega * T = {} is not pi/2 mod 2 pi",
                omega * time
            )));
        }
        Ok(p)
    }

    /// `omega = 1`, `T = pi/2`.
    pub fn canonical() -> Self {
        EvolutionParams {
            omega: 1.0,
            time: FRAC_PI_2,
        }
    }

    /// Shortest resonant duration for the given `omega`.
    pub fn quarter_period(omega: f64) -> Result<Self> {
        if !omega.is_finite() || omega <= 0.0 {
            return Err(Error::InvalidParameter(format!("omega {omega} must be positive")));
        }
        Self::new(omega, FRAC_PI_2 / omega)
    }

    /// Parameters without the resonance requirement; only the numeric
    /// propagator is meaningful for these.
    pub fn off_resonance(omega: f64, time: f64) -> Self {
        EvolutionParams { omega, time }
    }

    pub fn phase(&self) -> f64 {
        self.omega * self.time
    }

    pub fn is_resonant(&self) -> bool {
        let theta = self.phase();
        theta.is_finite()
            && theta.cos().abs() <= RESONANCE_TOL
            && (theta.sin() - 1.0).abs() <= RESONANCE_TOL
    }
}

/// `prod_j (1 - H_j^2 - i H_j)`, the propagator at resonance.
pub fn evolution_closed_form(model: &HamiltonianModel) -> CMatrix {
    let n = model.dim_s * model.dim_k;
    let id = CMatrix::identity(n, n);
    model.terms.iter().fold(id.clone(), |acc, h| {
        let factor = &id - h * h - h * I;
        acc * factor
    })
}

/// `exp(-i omega H T)` by eigendecomposition of `H`.
pub fn evolution_numeric(model: &HamiltonianModel, params: &EvolutionParams) -> Result<CMatrix> {
    mat_exp_hermitian(&model.total, params.phase())
}

/// Per-term fidelities `|<phi_j e_j| U |phi_j e_0>|`.
pub fn verify_correlating_evolution(
    model: &HamiltonianModel,
    params: &EvolutionParams,
) -> Result<Vec<f64>> {
    let u = evolution_numeric(model, params)?;
    (0..model.phi.len())
        .map(|j| {
            let evolved = model.ready_state(j).evolve(&u)?;
            Ok(evolved.fidelity(&model.correlated_state(j)))
        })
        .collect()
}

/// `sum_i sqrt(d_i) |phi_i> (x) e_0`, the state before the interaction.
pub fn initial_state(spec: &SpectralEnsemble, dim_k: usize) -> Result<BipartiteState> {
    let reference = StateVector::basis(dim_k, 0)?;
    let mut system = CVector::zeros(spec.dim());
    for (d, phi) in spec.base().iter() {
        system += phi.amplitudes() * crate::numerics::C64::new(d.sqrt(), 0.0);
    }
    let amps = crate::numerics::kron_vec(&system, reference.amplitudes());
    BipartiteState::new(spec.dim(), dim_k, StateVector::normalized(amps)?.into_inner())
}

/// Evolves the ready state under the correlating Hamiltonian.
pub fn purify_via_dynamics(
    spec: &SpectralEnsemble,
    params: &EvolutionParams,
) -> Result<BipartiteState> {
    let model = HamiltonianModel::for_spectral(spec)?;
    let psi0 = initial_state(spec, model.dim_k)?;
    psi0.evolve(&evolution_numeric(&model, params)?)
}

/// Full verification of a model, as printed by the `dynamics` command.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsReport {
    pub params: EvolutionParams,
    pub fidelities: Vec<f64>,
    pub algebra: AlgebraResiduals,
    /// `max |closed form - exp(-i omega H T)|`; `None` off resonance.
    pub closed_form_deviation: Option<f64>,
    pub unitarity: f64,
    /// Fidelity of the dynamical purification with the static one, when a
    /// spectral ensemble is supplied.
    pub purification_fidelity: Option<f64>,
}

impl DynamicsReport {
    pub fn passes(&self) -> bool {
        self.fidelities
            .iter()
            .all(|f| *f >= 1.0 - EVOLUTION_TOL)
            && self.algebra.max() <= ALGEBRA_TOL
            && self
                .closed_form_deviation
                .is_none_or(|d| d <= EVOLUTION_TOL)
            && self.unitarity <= EVOLUTION_TOL
            && self
                .purification_fidelity
                .is_none_or(|f| f >= 1.0 - DYNAMIC_PURIFY_TOL)
    }
}

pub fn verify_model(
    model: &HamiltonianModel,
    params: &EvolutionParams,
    spec: Option<&SpectralEnsemble>,
) -> Result<DynamicsReport> {
    let u = evolution_numeric(model, params)?;
    let fidelities = verify_correlating_evolution(model, params)?;
    let closed_form_deviation = params
        .is_resonant()
        .then(|| max_abs_diff(&evolution_closed_form(model), &u));
    let purification_fidelity = match spec {
        Some(s) => {
            let dynamic = purify_via_dynamics(s, params)?;
            let fixed = crate::purification::purify(s, s.rank())?;
            Some(dynamic.fidelity(&fixed))
        }
        None => None,
    };
    Ok(DynamicsReport {
        params: *params,
        fidelities,
        algebra: model.algebra(),
        closed_form_deviation,
        unitarity: unitarity_residual(&u),
        purification_fidelity,
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

impl fmt::Display for DynamicsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "omega = {}, T = {}, omega*T = {}",
            self.params.omega,
            self.params.time,
            self.params.phase()
        )?;
        for (j, fid) in self.fidelities.iter().enumerate() {
            let inf = 1.0 - fid;
            writeln!(
                f,
                "correlation_infidelity[{j}] = {inf:.3e} (tol {EVOLUTION_TOL:e}) {}",
                verdict(inf <= EVOLUTION_TOL)
            )?;
        }
        let a = &self.algebra;
        let rows = [
            ("hermiticity_residual", a.hermiticity),
            ("cube_residual", a.cube),
            ("square_residual", a.square),
            ("commutator_max", a.commutator),
            ("cross_product_max", a.cross_product),
            ("annihilation_max", a.annihilation),
        ];
        for (name, value) in rows {
            writeln!(
                f,
                "{name} = {value:.3e} (tol {ALGEBRA_TOL:e}) {}",
                verdict(value <= ALGEBRA_TOL)
            )?;
        }
        match self.closed_form_deviation {
            Some(d) => writeln!(
                f,
                "closed_form_deviation = {d:.3e} (tol {EVOLUTION_TOL:e}) {}",
                verdict(d <= EVOLUTION_TOL)
            )?,
            None => writeln!(f, "closed_form_deviation = n/a (off resonance)")?,
        }
        writeln!(
            f,
            "unitarity_residual = {:.3e} (tol {EVOLUTION_TOL:e}) {}",
            self.unitarity,
            verdict(self.unitarity <= EVOLUTION_TOL)
        )?;
        if let Some(fid) = self.purification_fidelity {
            let inf = 1.0 - fid;
            writeln!(
                f,
                "dynamic_vs_static_infidelity = {inf:.3e} (tol {DYNAMIC_PURIFY_TOL:e}) {}",
                verdict(inf <= DYNAMIC_PURIFY_TOL)
            )?;
        }
        Ok(())
    }
}
