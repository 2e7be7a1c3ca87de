//! Fixed-point iteration of the symmetrized extremal equation
//! `chi = L^-1 R chi R L^-1` with `L = lambda (x) 1_K` and
//! `lambda = (Tr_K[R chi R])^(1/2)`.
//!
//! Each step rescales `R chi R` back onto the trace-preserving set, so every iterate is
//! a valid channel. The iteration stops when either the fidelity change or the
//! Frobenius change of `chi` drops below its tolerance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{fidelity, ChoiOperator};
use crate::error::{Error, Result};
use crate::matcore::{
    herm_eig, kron, partial_trace, psd_sqrt, reg_inverse, ComplexMatrix, Subsystem, C64,
    DEFAULT_CLIP_TOL, DEFAULT_HERMITICITY_TOL, DEFAULT_PINV_CUTOFF,
};
use crate::target::{fidelity_bound, TargetOperator};

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// Every input goes to `1_K / dim_out`.
    MaxMix,
    /// `W W^H` for a seeded complex Gaussian `W`, rescaled onto `Tr_K = 1_H`.
    Random(u64),
    Explicit(ChoiOperator),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop when `|F_{k+1} - F_k| < fid_tol`.
    pub fid_tol: f64,
    /// Stop when `|chi_{k+1} - chi_k|_F < chi_tol`.
    pub chi_tol: f64,
    pub pinv_cutoff: f64,
    pub init: Init,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            fid_tol: 1e-12,
            chi_tol: 1e-10,
            pinv_cutoff: DEFAULT_PINV_CUTOFF,
            init: Init::MaxMix,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        for (name, v) in [
            ("fid_tol", self.fid_tol),
            ("chi_tol", self.chi_tol),
            ("pinv_cutoff", self.pinv_cutoff),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    pub chi: ChoiOperator,
    pub fidelity: f64,
    /// `dim_in * lambda_max(R)`.
    pub bound: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Fidelity after each iteration.
    pub fidelity_trace: Vec<f64>,
    /// Smallest gap between consecutive eigenvalues of the final Lagrange multiplier
    /// `lambda`; zero signals a degenerate optimum.
    pub lambda_gap: f64,
}

fn check_dims(chi: &ChoiOperator, r: &TargetOperator) -> Result<()> {
    if chi.dim_in() != r.dim_in() || chi.dim_out() != r.dim_out() {
        return Err(Error::DimensionMismatch(format!(
            "Choi operator is {} -> {} but target is {} -> {}",
            chi.dim_in(),
            chi.dim_out(),
            r.dim_in(),
            r.dim_out()
        )));
    }
    Ok(())
}

/// One step; also returns the multiplier `lambda` used.
fn step(
    chi: &ChoiOperator,
    r: &TargetOperator,
    pinv_cutoff: f64,
) -> Result<(ChoiOperator, ComplexMatrix)> {
    let (dim_in, dim_out) = (chi.dim_in(), chi.dim_out());
    let rm = r.matrix();
    let m = &(rm * chi.matrix()) * rm;
    let reduced = partial_trace(&m, dim_in, dim_out, Subsystem::First)?.hermitian_part();
    let lambda = psd_sqrt(&reduced, DEFAULT_CLIP_TOL)?;
    let lambda_inv = match reg_inverse(&lambda, pinv_cutoff) {
        Err(Error::AllZero) => return Err(Error::SingularLambda),
        other => other?,
    };
    let lift = kron(&lambda_inv, &ComplexMatrix::identity(dim_out));
    let next = (&(&lift * &m) * &lift).hermitian_part();
    Ok((
        ChoiOperator::new_unchecked(dim_in, dim_out, renormalize(next, dim_in, dim_out)?)?,
        lambda,
    ))
}

/// Rescales by `(Tr_K chi)^(-1/2)`. After a step `Tr_K chi` is the identity up to the
/// rounding error of inverting an ill-conditioned `Tr_K[R chi R]`; this second pass is
/// well conditioned and brings it back to machine precision.
fn renormalize(chi: ComplexMatrix, dim_in: usize, dim_out: usize) -> Result<ComplexMatrix> {
    let reduced = partial_trace(&chi, dim_in, dim_out, Subsystem::First)?.hermitian_part();
    let fix = reg_inverse(&psd_sqrt(&reduced, DEFAULT_CLIP_TOL)?, DEFAULT_PINV_CUTOFF)?;
    let lift = kron(&fix, &ComplexMatrix::identity(dim_out));
    Ok((&(&lift * &chi) * &lift).hermitian_part())
}

/// `chi -> L^-1 R chi R L^-1`, re-Hermitized.
pub fn iterate_once(
    chi: &ChoiOperator,
    r: &TargetOperator,
    pinv_cutoff: f64,
) -> Result<ChoiOperator> {
    check_dims(chi, r)?;
    step(chi, r, pinv_cutoff).map(|(next, _)| next)
}

/// A full-rank random trace-preserving channel.
pub fn random_choi(dim_in: usize, dim_out: usize, seed: u64) -> Result<ChoiOperator> {
    let n = dim_in * dim_out;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = ComplexMatrix::from_fn(n, n, |_, _| {
        C64::new(
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        )
    });
    let raw = &w * &w.adjoint();
    let reduced = partial_trace(&raw, dim_in, dim_out, Subsystem::First)?;
    let lambda = psd_sqrt(&reduced, DEFAULT_CLIP_TOL)?;
    let lift = kron(
        &reg_inverse(&lambda, DEFAULT_PINV_CUTOFF)?,
        &ComplexMatrix::identity(dim_out),
    );
    let chi = (&(&lift * &raw) * &lift).hermitian_part();
    ChoiOperator::new(dim_in, dim_out, renormalize(chi, dim_in, dim_out)?)
}

fn min_gap(m: &ComplexMatrix) -> Result<f64> {
    let w = herm_eig(m, DEFAULT_HERMITICITY_TOL)?.eigenvalues;
    Ok(w.windows(2)
        .map(|p| p[0] - p[1])
        .fold(f64::INFINITY, f64::min))
}

/// Iterates from `opts.init` until a stopping criterion fires or `max_iters` is reached.
/// Non-convergence is reported through `converged = false`, not as an error.
pub fn solve(r: &TargetOperator, opts: &SolverOptions) -> Result<SolverResult> {
    opts.validate()?;
    let mut chi = match &opts.init {
        Init::MaxMix => ChoiOperator::maximally_mixed(r.dim_in(), r.dim_out()),
        Init::Random(seed) => random_choi(r.dim_in(), r.dim_out(), *seed)?,
        Init::Explicit(chi) => chi.clone(),
    };
    check_dims(&chi, r)?;

    let mut f = fidelity(&chi, r)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut lambda = ComplexMatrix::identity(r.dim_in());
    for _ in 0..opts.max_iters {
        let (next, lam) = step(&chi, r, opts.pinv_cutoff)?;
        let f_next = fidelity(&next, r)?;
        let df = (f_next - f).abs();
        let dchi = next.matrix().frobenius_diff(chi.matrix());
        trace.push(f_next);
        chi = next;
        f = f_next;
        lambda = lam;
        if df < opts.fid_tol || dchi < opts.chi_tol {
            converged = true;
            break;
        }
    }

    let chi = ChoiOperator::new(chi.dim_in(), chi.dim_out(), chi.into_matrix())?;
    let lambda_gap = if r.dim_in() > 1 {
        min_gap(&lambda)?
    } else {
        0.0
    };
    Ok(SolverResult {
        chi,
        fidelity: f,
        bound: fidelity_bound(r),
        iterations: trace.len(),
        converged,
        fidelity_trace: trace,
        lambda_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::validate_choi;
    use crate::target::Provenance;

    /// The identity-family target: diag(1/3, 1/6, 1/6, 1/3) with 1/6 coupling |00>, |11>.
    fn identity_target() -> TargetOperator {
        let mut m = ComplexMatrix::from_real_diag(&[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]);
        m[(0, 3)] = C64::new(1.0 / 6.0, 0.0);
        m[(3, 0)] = C64::new(1.0 / 6.0, 0.0);
        TargetOperator::new(2, 2, m, Provenance::External).unwrap()
    }

    #[test]
    fn options_are_validated() {
        let r = identity_target();
        let bad = SolverOptions {
            max_iters: 0,
            ..Default::default()
        };
        assert!(solve(&r, &bad).is_err());
        let bad = SolverOptions {
            fid_tol: 0.0,
            ..Default::default()
        };
        assert!(solve(&r, &bad).is_err());
    }

    #[test]
    fn identity_target_reaches_unit_fidelity() {
        let res = solve(&identity_target(), &SolverOptions::default()).unwrap();
        assert!(res.converged);
        assert!((res.fidelity - 1.0).abs() < 1e-9, "{}", res.fidelity);
        assert!((res.bound - 1.0).abs() < 1e-14);
    }

    #[test]
    fn random_init_is_a_valid_channel() {
        for seed in 0..5 {
            let chi = random_choi(2, 3, seed).unwrap();
            let rep = validate_choi(&chi, 1e-10).unwrap();
            assert!(rep.ok, "{rep:?}");
            assert!(rep.min_eigenvalue > 0.0);
        }
    }

    #[test]
    fn mismatched_init_is_rejected() {
        let opts = SolverOptions {
            init: Init::Explicit(ChoiOperator::identity(3)),
            ..Default::default()
        };
        assert!(matches!(
            solve(&identity_target(), &opts),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn zero_overlap_is_singular() {
        let r = TargetOperator::new(
            2,
            2,
            ComplexMatrix::from_real_diag(&[0.5, 0.5, 0.0, 0.0]),
            Provenance::External,
        )
        .unwrap();
        // chi supported on |1> (x) |0>, R on |0> (x) K: R chi R = 0
        let chi =
            ChoiOperator::new_unchecked(2, 2, ComplexMatrix::from_real_diag(&[0.0, 0.0, 1.0, 0.0]))
                .unwrap();
        assert!(matches!(
            iterate_once(&chi, &r, 1e-12),
            Err(Error::SingularLambda)
        ));
    }

    #[test]
    fn max_iters_cap_reports_non_convergence() {
        let opts = SolverOptions {
            max_iters: 1,
            fid_tol: 1e-300,
            chi_tol: 1e-300,
            ..Default::default()
        };
        let res = solve(&identity_target(), &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.fidelity_trace.len(), 1);
    }
}
