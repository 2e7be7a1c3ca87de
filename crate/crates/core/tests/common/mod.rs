#![allow(dead_code)]

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use cpmap::{ComplexMatrix, Provenance, TargetOperator, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    let mut r = rng(seed);
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(StandardNormal.sample(&mut r), StandardNormal.sample(&mut r))
    })
}

pub fn hermitian(n: usize, seed: u64) -> ComplexMatrix {
    gaussian(n, n, seed).hermitian_part()
}

/// `W W^H` with `W` of the given column rank.
pub fn psd(n: usize, rank: usize, seed: u64) -> ComplexMatrix {
    let w = gaussian(n, rank, seed);
    (&w * &w.adjoint()).hermitian_part()
}

pub fn density(n: usize, seed: u64) -> ComplexMatrix {
    let p = psd(n, n, seed);
    let t = p.trace().re;
    p.scale(1.0 / t)
}

pub fn target(dim_in: usize, dim_out: usize, seed: u64) -> TargetOperator {
    TargetOperator::new(
        dim_in,
        dim_out,
        density(dim_in * dim_out, seed),
        Provenance::External,
    )
    .unwrap()
}

pub fn pure_state(dim: usize, seed: u64) -> Vec<C64> {
    let v = gaussian(dim, 1, seed).into_data();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn uniform_angles(seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    (
        (2.0 * r.random::<f64>() - 1.0).acos(),
        2.0 * PI * r.random::<f64>(),
    )
}

/// `E(X)_{ab} = sum_ij X_ij chi[(i dK + a), (j dK + b)]`, for any square `X`.
pub fn channel_action(
    chi: &ComplexMatrix,
    dim_in: usize,
    dim_out: usize,
    x: &ComplexMatrix,
) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim_out, dim_out, |a, b| {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..dim_in {
            for j in 0..dim_in {
                s += x[(i, j)] * chi[(i * dim_out + a, j * dim_out + b)];
            }
        }
        s
    })
}

pub fn unit(n: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

/// `(|00><00| + |Psi+><Psi+| + |11><11|) / 3` written out entry by entry.
pub fn symmetric_mixture() -> ComplexMatrix {
    let mut m = ComplexMatrix::from_real_diag(&[1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0]);
    m[(1, 2)] = C64::new(1.0 / 6.0, 0.0);
    m[(2, 1)] = C64::new(1.0 / 6.0, 0.0);
    m
}

/// `|0> -> |00>`, `|1> -> (|01> + |10>)/sqrt 2`.
pub fn entangler_isometry() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, s], &[0.0, s], &[0.0, 0.0]])
}

/// Pointwise fidelity of the optimal first entangler at polar angle `theta`.
pub fn entangler_curve(theta: f64) -> f64 {
    let c2 = (theta / 2.0).cos().powi(2);
    let s2 = 1.0 - c2;
    (2f64.sqrt() * c2 + s2).powi(2) / (1.0 + c2)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Golden-section minimum of a unimodal `f` on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-12 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Largest-overlap phase alignment of `a` onto `b`; returns `max |a - e^{i g} b|`.
pub fn phase_aligned_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let overlap: C64 = b
        .data()
        .iter()
        .zip(a.data())
        .map(|(x, y)| x.conj() * y)
        .sum();
    let phase = overlap / overlap.norm();
    a.max_abs_diff(&b.scale_c(phase))
}
