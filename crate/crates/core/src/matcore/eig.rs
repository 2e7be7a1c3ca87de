//! Cyclic complex Jacobi eigensolver and the spectral functions built on it.
//!
//! Jacobi is slow for large matrices but the operators here are at most a few
//! dozen rows, and it delivers eigenvectors orthonormal to machine precision.

use super::{ComplexMatrix, C64, DEFAULT_HERMITICITY_TOL};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Spectral decomposition `m = V diag(w) V^H`, eigenvalues in non-increasing order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `V diag(f(w)) V^H`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let fw: Vec<f64> = self.eigenvalues.iter().map(|&w| f(w)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * fw[k] * v[(j, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|w| w)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }
}

/// Full eigendecomposition of the Hermitian part of `m`.
///
/// `m` must satisfy `|m - m^H|_F <= hermiticity_tol * max(1, |m|_F)`.
pub fn herm_eig(m: &ComplexMatrix, hermiticity_tol: f64) -> Result<EigenDecomposition> {
    let n = m.require_square()?;
    let norm = m.frobenius_norm();
    let deviation = m.hermiticity_deviation();
    let tol = hermiticity_tol * norm.max(1.0);
    if deviation > tol || !deviation.is_finite() {
        return Err(Error::NotHermitian { deviation, tol });
    }

    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let scale = norm.max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) > 1e-15 * scale {
        return Err(Error::ConvergenceFailure { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// One Jacobi rotation zeroing `a[p][q]`: `a <- J^H a J`, `v <- v J`.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let g = a[(p, q)];
    let r = g.norm();
    if r < f64::MIN_POSITIVE {
        return;
    }
    let phase = g / r;
    let zeta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // J restricted to (p, q): [[c, s], [-s e^{-i theta}, c e^{-i theta}]]
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;

    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * jpp + akq * jqp;
        a[(k, q)] = akp * jpq + akq * jqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * jpp + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * jqq;
    }
}

/// Positive semidefinite square root. Eigenvalues below `clip_tol` are set to zero;
/// anything below `-clip_tol` is an error.
pub fn psd_sqrt(m: &ComplexMatrix, clip_tol: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(m, DEFAULT_HERMITICITY_TOL)?;
    let min = eig.min_eigenvalue();
    if min < -clip_tol {
        return Err(Error::NegativeEigenvalue {
            value: min,
            clip_tol,
        });
    }
    Ok(eig.map_spectrum(|w| if w < clip_tol { 0.0 } else { w.sqrt() }))
}

/// Hermitian pseudo-inverse: eigenvalues `w >= rel_cutoff * w_max` are inverted,
/// the rest are mapped to zero.
pub fn reg_inverse(m: &ComplexMatrix, rel_cutoff: f64) -> Result<ComplexMatrix> {
    let eig = herm_eig(m, DEFAULT_HERMITICITY_TOL)?;
    let w_max = eig.max_eigenvalue();
    if w_max <= 0.0 {
        return Err(Error::AllZero);
    }
    let threshold = rel_cutoff * w_max;
    Ok(eig.map_spectrum(|w| {
        if w >= threshold && w > 0.0 {
            1.0 / w
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::kron;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn gram_deviation(v: &ComplexMatrix) -> f64 {
        (&(&v.adjoint() * v) - &ComplexMatrix::identity(v.cols())).max_abs()
    }

    #[test]
    fn identity_spectrum() {
        let eig = herm_eig(&ComplexMatrix::identity(2), 1e-12).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0]);
        assert!(gram_deviation(&eig.eigenvectors) < 1e-15);
    }

    #[test]
    fn unot_target_in_its_own_basis() {
        // 1/3 on |01>, |10>, |Phi->; zero on |Phi+>
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let vecs = [
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [s, 0.0, 0.0, -s],
            [s, 0.0, 0.0, s],
        ];
        let weights = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0];
        let mut r = ComplexMatrix::zeros(4, 4);
        for (v, w) in vecs.iter().zip(weights) {
            let v: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
            r = &r + &ComplexMatrix::outer(&v, &v).scale(w);
        }
        let eig = herm_eig(&r, 1e-12).unwrap();
        let expected = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0];
        for (got, want) in eig.eigenvalues.iter().zip(expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 6);
        let h = (&a + &a.adjoint()).scale(0.5);
        let eig = herm_eig(&h, 1e-12).unwrap();
        assert!(eig.reconstruct().frobenius_diff(&h) < 1e-10 * h.frobenius_norm().max(1.0));
        assert!(gram_deviation(&eig.eigenvectors) < 1e-12);
        assert!(eig.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_non_hermitian_and_non_square() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(
            herm_eig(&m, 1e-10),
            Err(Error::NotHermitian { .. })
        ));
        assert!(matches!(
            herm_eig(&ComplexMatrix::zeros(2, 3), 1e-10),
            Err(Error::NonSquare { .. })
        ));
    }

    #[test]
    fn sqrt_of_diagonal_and_identity() {
        let s = psd_sqrt(&ComplexMatrix::from_real_diag(&[4.0, 9.0]), 1e-12).unwrap();
        assert!(s.max_abs_diff(&ComplexMatrix::from_real_diag(&[2.0, 3.0])) < 1e-15);
        let i = psd_sqrt(&ComplexMatrix::identity(3), 1e-12).unwrap();
        assert!(i.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn sqrt_rejects_negative_and_clips_round_off() {
        let m = ComplexMatrix::from_real_diag(&[1.0, -1e-3]);
        assert!(matches!(
            psd_sqrt(&m, 1e-12),
            Err(Error::NegativeEigenvalue { .. })
        ));
        let m = ComplexMatrix::from_real_diag(&[1.0, -1e-14]);
        let s = psd_sqrt(&m, 1e-12).unwrap();
        assert_eq!(s[(1, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn random_psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_matrix(&mut rng, 5);
        let p = &w * &w.adjoint();
        let s = psd_sqrt(&p, 1e-12).unwrap();
        assert!((&s * &s).frobenius_diff(&p) < 1e-10);
    }

    #[test]
    fn pseudo_inverse_cases() {
        let i = reg_inverse(&ComplexMatrix::identity(2), 1e-12).unwrap();
        assert!(i.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
        let d = reg_inverse(&ComplexMatrix::from_real_diag(&[2.0, 0.0]), 1e-12).unwrap();
        assert!(d.max_abs_diff(&ComplexMatrix::from_real_diag(&[0.5, 0.0])) < 1e-15);
        assert!(matches!(
            reg_inverse(&ComplexMatrix::zeros(2, 2), 1e-12),
            Err(Error::AllZero)
        ));
    }

    #[test]
    fn pseudo_inverse_of_invertible_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_matrix(&mut rng, 4);
        let p = &(&w * &w.adjoint()) + &ComplexMatrix::identity(4).scale(0.1);
        let inv = reg_inverse(&p, 1e-12).unwrap();
        assert!((&inv * &p).frobenius_diff(&ComplexMatrix::identity(4)) < 1e-10);
    }

    #[test]
    fn degenerate_tensor_spectrum() {
        let a = ComplexMatrix::from_real_diag(&[0.25, 0.75]);
        let eig = herm_eig(&kron(&a, &ComplexMatrix::identity(3)), 1e-12).unwrap();
        assert_eq!(eig.eigenvalues.len(), 6);
        assert!((eig.eigenvalues[2] - 0.75).abs() < 1e-15);
        assert!((eig.eigenvalues[3] - 0.25).abs() < 1e-15);
    }
}
