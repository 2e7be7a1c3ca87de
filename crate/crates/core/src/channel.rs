//! Choi-operator representation of channels.
//!
//! A channel `E` from `H` (dimension `dim_in`) to `K` (dimension `dim_out`) is stored as
//! `chi = sum_ij |i><j| (x) E(|i><j|)`, the image of the unnormalized maximally
//! entangled projector. The output of the channel is `Tr_H[chi (rho^T (x) 1_K)]` and
//! trace preservation reads `Tr_K[chi] = 1_H`.

use crate::error::{Error, Result};
use crate::matcore::{
    herm_eig, kron, kron_vec, partial_trace, ComplexMatrix, Subsystem, C64, DEFAULT_HERMITICITY_TOL,
};
use crate::target::TargetOperator;

/// Smallest eigenvalue a valid Choi operator or density matrix may have.
pub const PSD_TOL: f64 = 1e-10;
/// Entrywise tolerance on `Tr_K[chi] = 1_H` and on the Kraus trace condition.
pub const TRACE_PRESERVATION_TOL: f64 = 1e-9;
/// Default relative cutoff for Kraus extraction.
pub const DEFAULT_KRAUS_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiOperator {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix,
}

impl ChoiOperator {
    /// Validating constructor: the matrix must be Hermitian PSD with `Tr_K = 1_H`.
    pub fn new(dim_in: usize, dim_out: usize, matrix: ComplexMatrix) -> Result<Self> {
        let chi = Self::new_unchecked(dim_in, dim_out, matrix)?;
        chi.check()?;
        Ok(chi)
    }

    /// Only the shape is checked. Use [`validate_choi`] to inspect the invariants.
    pub fn new_unchecked(dim_in: usize, dim_out: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n = dim_in * dim_out;
        if dim_in == 0 || dim_out == 0 || matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Choi operator for {dim_in} -> {dim_out} must be {n}x{n}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self {
            dim_in,
            dim_out,
            matrix,
        })
    }

    /// The identity channel, `|phi><phi|` with `|phi> = sum_j |jj>`.
    pub fn identity(dim: usize) -> Self {
        let mut phi = vec![C64::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            phi[j * dim + j] = C64::new(1.0, 0.0);
        }
        Self {
            dim_in: dim,
            dim_out: dim,
            matrix: ComplexMatrix::outer(&phi, &phi),
        }
    }

    /// The channel sending every input to `1_K / dim_out`.
    pub fn maximally_mixed(dim_in: usize, dim_out: usize) -> Self {
        Self {
            dim_in,
            dim_out,
            matrix: ComplexMatrix::identity(dim_in * dim_out).scale(1.0 / dim_out as f64),
        }
    }

    /// The channel sending every input to `rho_out`: `chi = 1_H (x) rho_out`.
    pub fn constant_output(dim_in: usize, rho_out: &DensityMatrix) -> Self {
        Self {
            dim_in,
            dim_out: rho_out.dim(),
            matrix: kron(&ComplexMatrix::identity(dim_in), rho_out.matrix()),
        }
    }

    /// Builds the Choi operator of the linear map whose action on the matrix unit
    /// `|i><j|` is `unit_image(i, j)`.
    pub fn from_map(
        dim_in: usize,
        dim_out: usize,
        unit_image: impl Fn(usize, usize) -> ComplexMatrix,
    ) -> Result<Self> {
        let mut m = ComplexMatrix::zeros(dim_in * dim_out, dim_in * dim_out);
        for i in 0..dim_in {
            for j in 0..dim_in {
                let img = unit_image(i, j);
                if img.rows() != dim_out || img.cols() != dim_out {
                    return Err(Error::DimensionMismatch(format!(
                        "image of |{i}><{j}| must be {dim_out}x{dim_out}"
                    )));
                }
                for k in 0..dim_out {
                    for l in 0..dim_out {
                        m[(i * dim_out + k, j * dim_out + l)] = img[(k, l)];
                    }
                }
            }
        }
        Self::new(dim_in, dim_out, m)
    }

    /// `chi = sum_l |v_l><v_l|` with `v_l[i * dim_out + k] = A_l[k][i]`.
    pub fn from_kraus(operators: &[ComplexMatrix]) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
        let (dim_out, dim_in) = (first.rows(), first.cols());
        let n = dim_in * dim_out;
        let mut m = ComplexMatrix::zeros(n, n);
        for a in operators {
            if a.rows() != dim_out || a.cols() != dim_in {
                return Err(Error::DimensionMismatch(
                    "Kraus operators must share one shape".into(),
                ));
            }
            let v: Vec<C64> = (0..n).map(|r| a[(r % dim_out, r / dim_out)]).collect();
            m = &m + &ComplexMatrix::outer(&v, &v);
        }
        Self::new(dim_in, dim_out, m)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `<psi_out| E(|psi_in><psi_in|) |psi_out>`, evaluated as `v^H chi v` with
    /// `v = conj(psi_in) (x) psi_out`.
    pub fn transition_fidelity(&self, psi_in: &[C64], psi_out: &[C64]) -> f64 {
        let v = kron_vec(
            &psi_in.iter().map(|z| z.conj()).collect::<Vec<_>>(),
            psi_out,
        );
        self.matrix.quadratic_form(&v).re
    }

    fn check(&self) -> Result<()> {
        let report = validate_choi(self, PSD_TOL)?;
        if report.hermiticity_deviation > DEFAULT_HERMITICITY_TOL * self.matrix.max_abs().max(1.0) {
            return Err(Error::InvalidChoi(format!(
                "not Hermitian (deviation {:.3e})",
                report.hermiticity_deviation
            )));
        }
        if report.min_eigenvalue < -PSD_TOL {
            return Err(Error::InvalidChoi(format!(
                "not positive semidefinite (min eigenvalue {:.3e})",
                report.min_eigenvalue
            )));
        }
        if report.trace_preservation_deviation > TRACE_PRESERVATION_TOL {
            return Err(Error::InvalidChoi(format!(
                "not trace preserving (max |Tr_K chi - 1| = {:.3e})",
                report.trace_preservation_deviation
            )));
        }
        Ok(())
    }
}

/// A normalized positive operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NonSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let herm = matrix.hermiticity_deviation();
        if herm > PSD_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > PSD_TOL || tr.im.abs() > PSD_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr} != 1")));
        }
        let min = herm_eig(&matrix, DEFAULT_HERMITICITY_TOL)?.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|`; `psi` must have unit norm.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > PSD_TOL {
            return Err(Error::InvalidDensity(format!("state norm {norm} != 1")));
        }
        Ok(Self {
            matrix: ComplexMatrix::outer(psi, psi),
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Kraus operators `A_l` (each `dim_out x dim_in`) with the Choi eigenvalues they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub dim_in: usize,
    pub dim_out: usize,
    pub operators: Vec<ComplexMatrix>,
    pub weights: Vec<f64>,
}

impl KrausSet {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// `sum_l A_l rho A_l^H`.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.operators.iter().fold(
            ComplexMatrix::zeros(self.dim_out, self.dim_out),
            |acc, a| &acc + &(&(a * rho) * &a.adjoint()),
        )
    }

    /// `max |sum_l A_l^H A_l - 1_H|` entrywise.
    pub fn trace_condition_deviation(&self) -> f64 {
        let sum = self
            .operators
            .iter()
            .fold(ComplexMatrix::zeros(self.dim_in, self.dim_in), |acc, a| {
                &acc + &(&a.adjoint() * a)
            });
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim_in))
    }

    pub fn to_choi(&self) -> Result<ChoiOperator> {
        ChoiOperator::from_kraus(&self.operators)
    }
}

/// Deviations of a candidate Choi operator from its invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiReport {
    pub min_eigenvalue: f64,
    /// `max |Tr_K[chi] - 1_H|` entrywise.
    pub trace_preservation_deviation: f64,
    /// `max |chi - chi^H|` entrywise.
    pub hermiticity_deviation: f64,
    /// All three deviations are within the tolerance passed to [`validate_choi`].
    pub ok: bool,
}

pub fn validate_choi(chi: &ChoiOperator, tol: f64) -> Result<ChoiReport> {
    let m = &chi.matrix;
    let hermiticity_deviation = (m - &m.adjoint()).max_abs();
    let min_eigenvalue = herm_eig(&m.hermitian_part(), DEFAULT_HERMITICITY_TOL)?.min_eigenvalue();
    let tk = partial_trace(m, chi.dim_in, chi.dim_out, Subsystem::First)?;
    let trace_preservation_deviation = tk.max_abs_diff(&ComplexMatrix::identity(chi.dim_in));
    Ok(ChoiReport {
        min_eigenvalue,
        trace_preservation_deviation,
        hermiticity_deviation,
        ok: min_eigenvalue >= -tol
            && trace_preservation_deviation <= tol
            && hermiticity_deviation <= tol,
    })
}

/// Channel output `Tr_H[chi (rho^T (x) 1_K)]`.
pub fn apply(chi: &ChoiOperator, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != chi.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "channel expects a {}-dimensional input, got {}",
            chi.dim_in,
            rho.dim()
        )));
    }
    chi.check()?;
    let lifted = kron(
        &rho.matrix.transpose(),
        &ComplexMatrix::identity(chi.dim_out),
    );
    let out = partial_trace(
        &(&chi.matrix * &lifted),
        chi.dim_in,
        chi.dim_out,
        Subsystem::Second,
    )?;
    DensityMatrix::new(out.hermitian_part())
        .map_err(|e| Error::InvalidChoi(format!("channel output is not a state: {e}")))
}

/// Mean fidelity `Tr[chi R]`.
pub fn fidelity(chi: &ChoiOperator, r: &TargetOperator) -> Result<f64> {
    if chi.dim_in != r.dim_in() || chi.dim_out != r.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "Choi operator is {} -> {} but target is {} -> {}",
            chi.dim_in,
            chi.dim_out,
            r.dim_in(),
            r.dim_out()
        )));
    }
    let (a, b) = (&chi.matrix, r.matrix());
    let n = a.rows();
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            tr += a[(i, j)] * b[(j, i)];
        }
    }
    if tr.im.abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "Tr[chi R] has imaginary part {:.3e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

/// Kraus operators from the eigenpairs of `chi` whose eigenvalue exceeds
/// `cutoff * r_max`: `A_l[k][i] = sqrt(r_l) <i, k | pi_l>`.
///
/// Each eigenvector is rephased so its largest-magnitude entry is real positive.
pub fn kraus_from_choi(chi: &ChoiOperator, cutoff: f64) -> Result<KrausSet> {
    chi.check()?;
    let (dim_in, dim_out) = (chi.dim_in, chi.dim_out);
    let eig = herm_eig(&chi.matrix, DEFAULT_HERMITICITY_TOL)?;
    let threshold = cutoff * eig.max_eigenvalue().max(0.0);
    let mut operators = Vec::new();
    let mut weights = Vec::new();
    for (l, &r) in eig.eigenvalues.iter().enumerate() {
        if r <= threshold || r <= 0.0 {
            continue;
        }
        let mut v = eig.eigenvectors.column(l);
        let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = v
            .iter()
            .position(|z| z.norm() >= max - 1e-12)
            .expect("non-empty eigenvector");
        let phase = v[pivot].conj() / v[pivot].norm();
        for z in &mut v {
            *z *= phase;
        }
        let amp = r.sqrt();
        operators.push(ComplexMatrix::from_fn(dim_out, dim_in, |k, i| {
            v[i * dim_out + k] * amp
        }));
        weights.push(r);
    }
    Ok(KrausSet {
        dim_in,
        dim_out,
        operators,
        weights,
    })
}

/// Isometric dilation `|i>|0> -> sum_{k,l} A_l[k][i] |k>|l>` as a
/// `(dim_out * C) x dim_in` matrix with row index `k * C + l`.
pub fn dilation(kraus: &KrausSet) -> Result<ComplexMatrix> {
    let deviation = kraus.trace_condition_deviation();
    if kraus.is_empty() || deviation > TRACE_PRESERVATION_TOL {
        return Err(Error::TraceConditionViolated {
            deviation: if kraus.is_empty() { 1.0 } else { deviation },
        });
    }
    let c = kraus.len();
    Ok(ComplexMatrix::from_fn(
        kraus.dim_out * c,
        kraus.dim_in,
        |row, i| kraus.operators[row % c][(row / c, i)],
    ))
}
