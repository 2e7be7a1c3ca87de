//! The target operator `R = <(psi_in psi_in^H)^T (x) psi_out psi_out^H>` averaged over
//! the uniform measure on the Bloch sphere, and the fidelity bound `dim_in * lambda_max(R)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::{herm_eig, kron_vec, ComplexMatrix, C64, DEFAULT_HERMITICITY_TOL};

/// States returned by a [`StateFamily`] must have unit norm to this tolerance.
pub const NORM_TOL: f64 = 1e-12;

/// Samples per Monte-Carlo chunk. Chunk boundaries are fixed so parallel and
/// sequential accumulation give identical sums.
pub(crate) const MC_CHUNK: usize = 4096;

pub type StateEvaluator = dyn Fn(f64, f64) -> (Vec<C64>, Vec<C64>) + Send + Sync;

/// A pure-state transformation `psi_in(theta, phi) -> psi_out(theta, phi)` over the
/// Bloch sphere.
#[derive(Clone)]
pub struct StateFamily {
    dim_in: usize,
    dim_out: usize,
    polynomial_degree: usize,
    evaluator: Arc<StateEvaluator>,
}

impl StateFamily {
    /// `polynomial_degree` is the maximum total trigonometric degree of the entries of
    /// the integrand; it sizes the default quadrature grid.
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        polynomial_degree: usize,
        evaluator: impl Fn(f64, f64) -> (Vec<C64>, Vec<C64>) + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim_in,
            dim_out,
            polynomial_degree,
            evaluator: Arc::new(evaluator),
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn polynomial_degree(&self) -> usize {
        self.polynomial_degree
    }

    /// Evaluates the pair of states and checks their lengths and norms.
    pub fn evaluate(&self, theta: f64, phi: f64) -> Result<(Vec<C64>, Vec<C64>)> {
        let (psi_in, psi_out) = (self.evaluator)(theta, phi);
        if psi_in.len() != self.dim_in || psi_out.len() != self.dim_out {
            return Err(Error::DimensionMismatch(format!(
                "family declares {} -> {} but evaluator returned {} -> {}",
                self.dim_in,
                self.dim_out,
                psi_in.len(),
                psi_out.len()
            )));
        }
        for v in [&psi_in, &psi_out] {
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::NormViolation { norm, theta, phi });
            }
        }
        Ok((psi_in, psi_out))
    }

    /// `conj(psi_in) (x) psi_out`; its outer product is the integrand of `R`.
    fn integrand_vector(&self, theta: f64, phi: f64) -> Result<Vec<C64>> {
        let (psi_in, psi_out) = self.evaluate(theta, phi)?;
        let conj_in: Vec<C64> = psi_in.iter().map(|z| z.conj()).collect();
        Ok(kron_vec(&conj_in, &psi_out))
    }
}

impl fmt::Debug for StateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateFamily")
            .field("dim_in", &self.dim_in)
            .field("dim_out", &self.dim_out)
            .field("polynomial_degree", &self.polynomial_degree)
            .finish_non_exhaustive()
    }
}

/// How a target operator was obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Analytic {
        model: String,
    },
    Quadrature {
        nodes_theta: usize,
        nodes_phi: usize,
    },
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetOperator {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix,
    lambda_max: f64,
    provenance: Provenance,
}

impl TargetOperator {
    /// Validates Hermiticity, positivity and unit trace, and caches the top eigenvalue.
    pub fn new(
        dim_in: usize,
        dim_out: usize,
        matrix: ComplexMatrix,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = dim_in * dim_out;
        if dim_in == 0 || dim_out == 0 || matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "target for {dim_in} -> {dim_out} must be {n}x{n}, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let eig = herm_eig(&matrix, DEFAULT_HERMITICITY_TOL)
            .map_err(|e| Error::InvalidTarget(e.to_string()))?;
        if eig.min_eigenvalue() < -1e-10 {
            return Err(Error::InvalidTarget(format!(
                "negative eigenvalue {:.3e}",
                eig.min_eigenvalue()
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidTarget(format!("trace {tr} != 1")));
        }
        Ok(Self {
            dim_in,
            dim_out,
            matrix,
            lambda_max: eig.max_eigenvalue(),
            provenance,
        })
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

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Upper bound on the mean fidelity of any channel: `dim_in * lambda_max(R)`.
pub fn fidelity_bound(r: &TargetOperator) -> f64 {
    r.dim_in as f64 * r.lambda_max
}

/// Grid sizes for the product rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureNodes {
    /// Gauss-Legendre nodes in `theta` on `[0, pi]`.
    pub theta: usize,
    /// Uniform trapezoid points in `phi` on `[0, 2 pi)`.
    pub phi: usize,
}

impl QuadratureNodes {
    /// The trapezoid rule with `d + 2` points is exact for trigonometric polynomials of
    /// degree `d` in `phi`. In `theta` the integrand carries a `sin(theta)` factor and,
    /// for some families, a rational factor, so Gauss-Legendre is used well past the
    /// polynomial-exactness count; it converges geometrically for these analytic integrands.
    pub fn for_degree(degree: usize) -> Self {
        Self {
            theta: 2 * degree + 16,
            phi: degree + 2,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `R` by the Gauss-Legendre x trapezoid product rule sized from the family's degree.
pub fn build_r_quadrature(family: &StateFamily) -> Result<TargetOperator> {
    build_r_quadrature_with(
        family,
        QuadratureNodes::for_degree(family.polynomial_degree),
    )
}

pub fn build_r_quadrature_with(
    family: &StateFamily,
    nodes: QuadratureNodes,
) -> Result<TargetOperator> {
    if nodes.theta == 0 || nodes.phi == 0 {
        return Err(Error::InvalidArgument(
            "quadrature needs at least one node per axis".into(),
        ));
    }
    let n = family.dim_in * family.dim_out;
    let (x, w) = gauss_legendre(nodes.theta);
    let per_node: Vec<ComplexMatrix> = x
        .par_iter()
        .zip(&w)
        .map(|(&xi, &wi)| {
            let theta = (xi + 1.0) * PI / 2.0;
            // (pi/2) from the interval map, sin(theta) from the measure,
            // 2 pi / M from the trapezoid, 1 / (4 pi) normalization.
            let weight = wi * theta.sin() * PI / (4.0 * nodes.phi as f64);
            let mut acc = ComplexMatrix::zeros(n, n);
            for b in 0..nodes.phi {
                let phi = 2.0 * PI * b as f64 / nodes.phi as f64;
                let v = family.integrand_vector(theta, phi)?;
                add_outer(&mut acc, &v, weight);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let total = per_node
        .iter()
        .fold(ComplexMatrix::zeros(n, n), |acc, m| &acc + m);
    TargetOperator::new(
        family.dim_in,
        family.dim_out,
        total.hermitian_part(),
        Provenance::Quadrature {
            nodes_theta: nodes.theta,
            nodes_phi: nodes.phi,
        },
    )
}

fn add_outer(acc: &mut ComplexMatrix, v: &[C64], weight: f64) {
    for (i, vi) in v.iter().enumerate() {
        let wi = vi * weight;
        for (j, vj) in v.iter().enumerate() {
            acc[(i, j)] += wi * vj.conj();
        }
    }
}

/// Uniform points on the sphere for samples `start..start + len` of stream `seed`.
///
/// Sample `i` always consumes words `4i..4i+4` of the ChaCha8 stream seeded by `seed`,
/// so any sample can be regenerated independently of how the range is chunked.
pub(crate) fn sphere_samples(seed: u64, start: usize, len: usize) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(4 * start as u128);
    (0..len)
        .map(|_| {
            let cos_theta = 2.0 * rng.random::<f64>() - 1.0;
            let phi = 2.0 * PI * rng.random::<f64>();
            (cos_theta.clamp(-1.0, 1.0).acos(), phi)
        })
        .collect()
}

pub(crate) fn chunk_ranges(samples: usize) -> Vec<(usize, usize)> {
    (0..samples)
        .step_by(MC_CHUNK)
        .map(|s| (s, MC_CHUNK.min(samples - s)))
        .collect()
}

/// Monte-Carlo estimate of `R` from `samples` uniform points; deterministic per seed.
pub fn build_r_montecarlo(
    family: &StateFamily,
    samples: usize,
    seed: u64,
) -> Result<TargetOperator> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let n = family.dim_in * family.dim_out;
    let partial: Vec<ComplexMatrix> = chunk_ranges(samples)
        .into_par_iter()
        .map(|(start, len)| {
            let mut acc = ComplexMatrix::zeros(n, n);
            for (theta, phi) in sphere_samples(seed, start, len) {
                let v = family.integrand_vector(theta, phi)?;
                add_outer(&mut acc, &v, 1.0);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let total = partial
        .iter()
        .fold(ComplexMatrix::zeros(n, n), |acc, m| &acc + m)
        .scale(1.0 / samples as f64);
    TargetOperator::new(
        family.dim_in,
        family.dim_out,
        total.hermitian_part(),
        Provenance::MonteCarlo { samples, seed },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bloch(theta: f64, phi: f64) -> Vec<C64> {
        vec![
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ]
    }

    fn identity_family() -> StateFamily {
        StateFamily::new(2, 2, 4, |t, p| (bloch(t, p), bloch(t, p)))
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(5);
        // exact for degree <= 9
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((integral - 2.0 / 9.0).abs() < 1e-15);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn identity_family_target() {
        let r = build_r_quadrature(&identity_family()).unwrap();
        let m = r.matrix();
        let expected = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((m[(i, i)].re - e).abs() < 1e-14);
        }
        assert!((m[(0, 3)].re - 1.0 / 6.0).abs() < 1e-14);
        assert!((r.lambda_max() - 0.5).abs() < 1e-14);
        assert!((fidelity_bound(&r) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn norm_violation_is_reported() {
        let fam = StateFamily::new(2, 2, 2, |t, p| {
            let mut v = bloch(t, p);
            v[0] *= 2.0;
            (v, bloch(t, p))
        });
        assert!(matches!(
            build_r_quadrature(&fam),
            Err(Error::NormViolation { .. })
        ));
        assert!(matches!(
            build_r_montecarlo(&fam, 10, 1),
            Err(Error::NormViolation { .. })
        ));
    }

    #[test]
    fn single_sample_is_the_integrand() {
        let fam = identity_family();
        let r = build_r_montecarlo(&fam, 1, 42).unwrap();
        let (theta, phi) = sphere_samples(42, 0, 1)[0];
        let v = fam.integrand_vector(theta, phi).unwrap();
        assert!(r.matrix().max_abs_diff(&ComplexMatrix::outer(&v, &v)) < 1e-15);
    }

    #[test]
    fn sphere_samples_are_chunk_independent() {
        let all = sphere_samples(9, 0, 100);
        let tail = sphere_samples(9, 37, 63);
        assert_eq!(&all[37..], &tail[..]);
        assert_ne!(sphere_samples(10, 0, 5), all[..5].to_vec());
    }

    #[test]
    fn monte_carlo_is_deterministic_with_unit_trace() {
        let fam = identity_family();
        let a = build_r_montecarlo(&fam, 5000, 3).unwrap();
        let b = build_r_montecarlo(&fam, 5000, 3).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert!((a.matrix().trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn target_validation() {
        assert!(
            TargetOperator::new(2, 2, ComplexMatrix::identity(4), Provenance::External).is_err()
        );
        assert!(TargetOperator::new(
            2,
            2,
            ComplexMatrix::from_real_diag(&[1.5, -0.5, 0.0, 0.0]),
            Provenance::External
        )
        .is_err());
        assert!(
            TargetOperator::new(2, 2, ComplexMatrix::identity(3), Provenance::External).is_err()
        );
    }
}
