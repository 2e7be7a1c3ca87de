//! JSON forms of matrices, Choi and target operators, Kraus sets and solver results.
//!
//! Complex entries are `[re, im]` pairs in row-major order. Floats are written in
//! shortest round-trip form, so a save/load cycle reproduces every bit.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::{ChoiOperator, DensityMatrix, KrausSet};
use crate::error::{Error, Result};
use crate::matcore::{ComplexMatrix, C64};
use crate::solver::SolverResult;
use crate::target::{Provenance, TargetOperator};

/// Composite index convention: `i_in * dim_out + i_out`.
pub const ORDERING: &str = "in_tensor_out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix, kind: Option<&str>) -> Self {
        Self {
            kind: kind.map(str::to_owned),
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let data = self.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        ComplexMatrix::new(self.rows, self.cols, data).map_err(|e| Error::Format(e.to_string()))
    }
}

/// A bipartite operator on `H (x) K`: a Choi operator or a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub kind: String,
    pub dim_in: usize,
    pub dim_out: usize,
    pub ordering: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl OperatorJson {
    fn new(kind: &str, dim_in: usize, dim_out: usize, m: &ComplexMatrix) -> Self {
        Self {
            kind: kind.into(),
            dim_in,
            dim_out,
            ordering: ORDERING.into(),
            rows: m.rows(),
            cols: m.cols(),
            data: m.data().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    fn matrix(&self, want_kind: &str) -> Result<ComplexMatrix> {
        if self.kind != want_kind {
            return Err(Error::Format(format!(
                "expected kind '{want_kind}', found '{}'",
                self.kind
            )));
        }
        if self.ordering != ORDERING {
            return Err(Error::Format(format!(
                "unsupported ordering '{}'",
                self.ordering
            )));
        }
        MatrixJson {
            kind: None,
            rows: self.rows,
            cols: self.cols,
            data: self.data.clone(),
        }
        .to_matrix()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrausJson {
    pub dim_in: usize,
    pub dim_out: usize,
    pub operators: Vec<MatrixJson>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultJson {
    pub fidelity: f64,
    pub bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub fidelity_trace: Vec<f64>,
    pub lambda_gap: f64,
    pub chi: OperatorJson,
}

fn format_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn choi_to_json(chi: &ChoiOperator) -> String {
    to_pretty(&OperatorJson::new(
        "choi",
        chi.dim_in(),
        chi.dim_out(),
        chi.matrix(),
    ))
}

/// Accepts a bare Choi document or a solver result carrying one under `chi`.
pub fn choi_from_json(text: &str) -> Result<ChoiOperator> {
    let mut value: Value = serde_json::from_str(text).map_err(format_err)?;
    if let Some(inner) = value.get_mut("chi") {
        value = inner.take();
    }
    let op: OperatorJson = serde_json::from_value(value).map_err(format_err)?;
    ChoiOperator::new(op.dim_in, op.dim_out, op.matrix("choi")?)
}

pub fn target_to_json(r: &TargetOperator) -> String {
    to_pretty(&OperatorJson::new(
        "target",
        r.dim_in(),
        r.dim_out(),
        r.matrix(),
    ))
}

pub fn target_from_json(text: &str) -> Result<TargetOperator> {
    let op: OperatorJson = serde_json::from_str(text).map_err(format_err)?;
    TargetOperator::new(
        op.dim_in,
        op.dim_out,
        op.matrix("target")?,
        Provenance::External,
    )
}

pub fn density_to_json(rho: &DensityMatrix) -> String {
    to_pretty(&MatrixJson::from_matrix(rho.matrix(), Some("density")))
}

pub fn density_from_json(text: &str) -> Result<DensityMatrix> {
    let m: MatrixJson = serde_json::from_str(text).map_err(format_err)?;
    DensityMatrix::new(m.to_matrix()?)
}

pub fn kraus_to_json(k: &KrausSet) -> String {
    to_pretty(&KrausJson {
        dim_in: k.dim_in,
        dim_out: k.dim_out,
        operators: k
            .operators
            .iter()
            .map(|a| MatrixJson::from_matrix(a, None))
            .collect(),
        weights: k.weights.clone(),
    })
}

pub fn kraus_from_json(text: &str) -> Result<KrausSet> {
    let k: KrausJson = serde_json::from_str(text).map_err(format_err)?;
    let operators = k
        .operators
        .iter()
        .map(MatrixJson::to_matrix)
        .collect::<Result<Vec<_>>>()?;
    if operators
        .iter()
        .any(|a| a.rows() != k.dim_out || a.cols() != k.dim_in)
    {
        return Err(Error::Format(
            "Kraus operator shape disagrees with dims".into(),
        ));
    }
    Ok(KrausSet {
        dim_in: k.dim_in,
        dim_out: k.dim_out,
        operators,
        weights: k.weights,
    })
}

pub fn matrix_to_json(m: &ComplexMatrix, kind: Option<&str>) -> String {
    to_pretty(&MatrixJson::from_matrix(m, kind))
}

pub fn result_to_json(res: &SolverResult) -> String {
    to_pretty(&ResultJson {
        fidelity: res.fidelity,
        bound: res.bound,
        iterations: res.iterations,
        converged: res.converged,
        fidelity_trace: res.fidelity_trace.clone(),
        lambda_gap: res.lambda_gap,
        chi: OperatorJson::new(
            "choi",
            res.chi.dim_in(),
            res.chi.dim_out(),
            res.chi.matrix(),
        ),
    })
}
