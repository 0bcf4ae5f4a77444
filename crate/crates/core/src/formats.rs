//! JSON file formats for ensembles, density matrices, bipartite states and
//! steering plans. Complex numbers are `[re, im]` pairs; matrices are stored
//! row-major. Floats are written in their shortest round-trip form.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensembles::{DensityMatrix, Ensemble};
use crate::error::{Error, Result};
use crate::numerics::{check_finite, CMatrix, CVector, StateVector, C64};
use crate::purification::{BipartiteState, SteeringPlan, SteeringReport};

type Pair = [f64; 2];

fn to_pairs<'a>(it: impl IntoIterator<Item = &'a C64>) -> Vec<Pair> {
    it.into_iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(pairs: &[Pair]) -> Result<Vec<C64>> {
    let v: Vec<C64> = pairs.iter().map(|[re, im]| C64::new(*re, *im)).collect();
    check_finite(v.iter())?;
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleFile {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub states: Vec<Vec<Pair>>,
}

impl From<&Ensemble> for EnsembleFile {
    fn from(e: &Ensemble) -> Self {
        EnsembleFile {
            dim: e.dim(),
            weights: e.weights().to_vec(),
            states: e.states().iter().map(|s| to_pairs(s.amplitudes())).collect(),
        }
    }
}

impl TryFrom<EnsembleFile> for Ensemble {
    type Error = Error;

    fn try_from(f: EnsembleFile) -> Result<Self> {
        let states = f
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if s.len() != f.dim {
                    return Err(Error::InvalidEnsemble(format!(
                        "state {i} has {} amplitudes, dim is {}",
                        s.len(),
                        f.dim
                    )));
                }
                StateVector::new(CVector::from_vec(from_pairs(s)?))
                    .map_err(|e| Error::InvalidEnsemble(format!("state {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ensemble::new(f.weights, states)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityFile {
    pub dim: usize,
    pub entries: Vec<Pair>,
}

impl From<&DensityMatrix> for DensityFile {
    fn from(rho: &DensityMatrix) -> Self {
        DensityFile {
            dim: rho.dim(),
            entries: to_pairs(rho.matrix().transpose().iter()),
        }
    }
}

impl TryFrom<DensityFile> for DensityMatrix {
    type Error = Error;

    fn try_from(f: DensityFile) -> Result<Self> {
        if f.entries.len() != f.dim * f.dim {
            return Err(Error::DimensionMismatch {
                expected: f.dim * f.dim,
                found: f.entries.len(),
            });
        }
        DensityMatrix::new(CMatrix::from_row_slice(f.dim, f.dim, &from_pairs(&f.entries)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Pair>,
}

impl From<&CMatrix> for MatrixFile {
    fn from(m: &CMatrix) -> Self {
        MatrixFile {
            rows: m.nrows(),
            cols: m.ncols(),
            entries: to_pairs(m.transpose().iter()),
        }
    }
}

impl TryFrom<&MatrixFile> for CMatrix {
    type Error = Error;

    fn try_from(f: &MatrixFile) -> Result<Self> {
        if f.entries.len() != f.rows * f.cols {
            return Err(Error::DimensionMismatch {
                expected: f.rows * f.cols,
                found: f.entries.len(),
            });
        }
        Ok(CMatrix::from_row_slice(f.rows, f.cols, &from_pairs(&f.entries)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartiteFile {
    #[serde(rename = "dimS")]
    pub dim_s: usize,
    #[serde(rename = "dimK")]
    pub dim_k: usize,
    pub amplitudes: Vec<Pair>,
}

impl From<&BipartiteState> for BipartiteFile {
    fn from(psi: &BipartiteState) -> Self {
        BipartiteFile {
            dim_s: psi.dim_s(),
            dim_k: psi.dim_k(),
            amplitudes: to_pairs(psi.amplitudes()),
        }
    }
}

impl TryFrom<BipartiteFile> for BipartiteState {
    type Error = Error;

    fn try_from(f: BipartiteFile) -> Result<Self> {
        BipartiteState::new(f.dim_s, f.dim_k, CVector::from_vec(from_pairs(&f.amplitudes)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub max_weight_deviation: f64,
    pub max_state_infidelity: f64,
    pub isometry_residual: f64,
    pub unitary_residual: f64,
}

impl From<&SteeringReport> for ReportFile {
    fn from(r: &SteeringReport) -> Self {
        ReportFile {
            max_weight_deviation: r.weight_deviation,
            max_state_infidelity: r.state_infidelity,
            isometry_residual: r.isometry_residual,
            unitary_residual: r.unitary_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub coeffs: MatrixFile,
    pub isometry: MatrixFile,
    pub unitary: MatrixFile,
    pub basis: Vec<Vec<Pair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ReportFile>,
}

impl PlanFile {
    pub fn new(plan: &SteeringPlan, report: Option<&SteeringReport>) -> Self {
        PlanFile {
            coeffs: (&plan.coeffs).into(),
            isometry: (&plan.isometry).into(),
            unitary: (&plan.unitary).into(),
            basis: plan.basis.iter().map(|b| to_pairs(b.amplitudes())).collect(),
            report: report.map(Into::into),
        }
    }

    pub fn to_plan(&self) -> Result<SteeringPlan> {
        let basis = self
            .basis
            .iter()
            .map(|b| StateVector::new(CVector::from_vec(from_pairs(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SteeringPlan {
            coeffs: (&self.coeffs).try_into()?,
            isometry: (&self.isometry).try_into()?,
            unitary: (&self.unitary).try_into()?,
            basis,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn parse_ensemble(text: &str) -> Result<Ensemble> {
    serde_json::from_str::<EnsembleFile>(text)?.try_into()
}

/// Accepts either a density-matrix document or an ensemble document, whose
/// density operator is then used.
pub fn parse_density(text: &str) -> Result<DensityMatrix> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    if value.get("entries").is_some() {
        serde_json::from_value::<DensityFile>(value)?.try_into()
    } else {
        let e: Ensemble = serde_json::from_value::<EnsembleFile>(value)?.try_into()?;
        Ok(e.density_matrix())
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))
}

pub fn read_ensemble(path: &Path) -> Result<Ensemble> {
    parse_ensemble(&read(path)?).map_err(|e| annotate(path, e))
}

pub fn read_density(path: &Path) -> Result<DensityMatrix> {
    parse_density(&read(path)?).map_err(|e| annotate(path, e))
}

fn annotate(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}
