//! Closed-form test cases over a single input qubit (or `N` copies of it):
//! universal NOT, symmetric `1 -> N` cloner, the two entanglers, and the polar-angle
//! shifter `|psi(theta, phi)> -> |psi(theta + alpha, phi)>`.
//!
//! Symmetric `N`-qubit states `|N, k>` (`k` qubits in `|0>`) are stored at basis index
//! `N - k`, so index 0 is `|0...0>`.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI, SQRT_2};

use crate::channel::{ChoiOperator, DensityMatrix};
use crate::error::{Error, Result};
use crate::matcore::{kron, ComplexMatrix, C64};
use crate::target::{Provenance, StateFamily, TargetOperator};

/// Which transformation to approximate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    /// `N` copies of `psi` to the orthogonal qubit.
    Unot {
        copies: usize,
    },
    /// `psi` to `N` copies of `psi` in the symmetric subspace.
    Cloner {
        copies: usize,
    },
    /// `psi -> N(|psi>|0> + |0>|psi>)`.
    EntanglerA,
    /// `psi -> (|psi psi_perp> + |psi_perp psi>)/sqrt 2`.
    EntanglerB,
    /// Polar angle shifted by `alpha`.
    Shifter {
        alpha: f64,
    },
    Identity,
}

impl ModelSpec {
    pub fn unot(copies: usize) -> Result<Self> {
        Self::Unot { copies }.validated()
    }

    pub fn cloner(copies: usize) -> Result<Self> {
        Self::Cloner { copies }.validated()
    }

    pub fn shifter(alpha: f64) -> Result<Self> {
        Self::Shifter { alpha }.validated()
    }

    /// Parses the CLI vocabulary (`unot`, `cloner`, `entangler-a`, `entangler-b`,
    /// `shifter`, `identity`). `copies` defaults to 1 and `alpha` to 0.
    pub fn from_name(name: &str, copies: Option<usize>, alpha: Option<f64>) -> Result<Self> {
        let copies = copies.unwrap_or(1);
        match name {
            "unot" => Self::unot(copies),
            "cloner" => Self::cloner(copies),
            "entangler-a" | "entangler_a" => Ok(Self::EntanglerA),
            "entangler-b" | "entangler_b" => Ok(Self::EntanglerB),
            "shifter" => Self::shifter(alpha.unwrap_or(0.0)),
            "identity" => Ok(Self::Identity),
            other => Err(Error::InvalidSpec(format!("unknown model '{other}'"))),
        }
    }

    pub fn validated(self) -> Result<Self> {
        match self {
            Self::Unot { copies } | Self::Cloner { copies } if copies == 0 => Err(
                Error::InvalidSpec("number of copies must be at least 1".into()),
            ),
            Self::Shifter { alpha } if !(0.0..=PI).contains(&alpha) => Err(Error::InvalidSpec(
                format!("shift angle {alpha} is outside [0, pi]"),
            )),
            spec => Ok(spec),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Unot { .. } => "unot",
            Self::Cloner { .. } => "cloner",
            Self::EntanglerA => "entangler-a",
            Self::EntanglerB => "entangler-b",
            Self::Shifter { .. } => "shifter",
            Self::Identity => "identity",
        }
    }

    /// `(dim H, dim K)`.
    pub fn dims(&self) -> (usize, usize) {
        match *self {
            Self::Unot { copies } => (copies + 1, 2),
            Self::Cloner { copies } => (2, copies + 1),
            Self::EntanglerA | Self::EntanglerB => (2, 4),
            Self::Shifter { .. } | Self::Identity => (2, 2),
        }
    }

    /// Trigonometric degree of the target integrand.
    pub fn polynomial_degree(&self) -> usize {
        match *self {
            Self::Unot { copies } | Self::Cloner { copies } => 2 * (copies + 1),
            _ => 4,
        }
    }
}

impl std::fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Unot { copies } | Self::Cloner { copies } => {
                write!(f, "{}(N={copies})", self.name())
            }
            Self::Shifter { alpha } => write!(f, "shifter(alpha={alpha})"),
            _ => f.write_str(self.name()),
        }
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`, evaluated literally for any angle.
pub fn bloch_state(theta: f64, phi: f64) -> Vec<C64> {
    vec![
        c((theta / 2.0).cos()),
        C64::from_polar(1.0, phi) * (theta / 2.0).sin(),
    ]
}

/// `sin(theta/2)|0> - e^{i phi} cos(theta/2)|1>`, orthogonal to [`bloch_state`].
pub fn orthogonal_state(theta: f64, phi: f64) -> Vec<C64> {
    vec![
        c((theta / 2.0).sin()),
        -C64::from_polar(1.0, phi) * (theta / 2.0).cos(),
    ]
}

/// The symmetric subspace of `n_qubits` qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetricBasis {
    pub n_qubits: usize,
}

impl SymmetricBasis {
    pub fn dim(&self) -> usize {
        self.n_qubits + 1
    }

    /// Basis index of `|N, k>`.
    pub fn index(&self, k: usize) -> usize {
        self.n_qubits - k
    }

    /// `|psi>^{(x) N}` in this basis: amplitude on `|N, k>` is
    /// `sqrt(C(N, k)) e^{i (N-k) phi} cos^k(theta/2) sin^{N-k}(theta/2)`.
    pub fn product_state(&self, theta: f64, phi: f64) -> Vec<C64> {
        let n = self.n_qubits;
        let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let mut v = vec![c(0.0); n + 1];
        for k in 0..=n {
            let amp = binomial(n, k).sqrt() * ch.powi(k as i32) * sh.powi((n - k) as i32);
            v[self.index(k)] = C64::from_polar(amp, (n - k) as f64 * phi);
        }
        v
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn psi_plus() -> [C64; 4] {
    [c(0.0), c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2), c(0.0)]
}

fn ket00() -> [C64; 4] {
    [c(1.0), c(0.0), c(0.0), c(0.0)]
}

/// The pure-state family the model is trying to implement.
pub fn model_family(spec: &ModelSpec) -> StateFamily {
    let (dim_in, dim_out) = spec.dims();
    let degree = spec.polynomial_degree();
    match *spec {
        ModelSpec::Unot { copies } => {
            let basis = SymmetricBasis { n_qubits: copies };
            StateFamily::new(dim_in, dim_out, degree, move |t, p| {
                (basis.product_state(t, p), orthogonal_state(t, p))
            })
        }
        ModelSpec::Cloner { copies } => {
            let basis = SymmetricBasis { n_qubits: copies };
            StateFamily::new(dim_in, dim_out, degree, move |t, p| {
                (bloch_state(t, p), basis.product_state(t, p))
            })
        }
        ModelSpec::EntanglerA => StateFamily::new(dim_in, dim_out, degree, |t, p| {
            let (ch, sh) = ((t / 2.0).cos(), (t / 2.0).sin());
            let norm = (1.0 + ch * ch).sqrt();
            let a = c(SQRT_2 * ch / norm);
            let b = C64::from_polar(sh / norm, p);
            let out = ket00()
                .iter()
                .zip(psi_plus())
                .map(|(e, s)| e * a + s * b)
                .collect();
            (bloch_state(t, p), out)
        }),
        ModelSpec::EntanglerB => StateFamily::new(dim_in, dim_out, degree, |t, p| {
            let psi = bloch_state(t, p);
            let perp = orthogonal_state(t, p);
            let mut out = vec![c(0.0); 4];
            for i in 0..2 {
                for j in 0..2 {
                    out[i * 2 + j] = (psi[i] * perp[j] + perp[i] * psi[j]) * FRAC_1_SQRT_2;
                }
            }
            (psi, out)
        }),
        ModelSpec::Shifter { alpha } => StateFamily::new(dim_in, dim_out, degree, move |t, p| {
            (bloch_state(t, p), bloch_state(t + alpha, p))
        }),
        ModelSpec::Identity => StateFamily::new(dim_in, dim_out, degree, |t, p| {
            (bloch_state(t, p), bloch_state(t, p))
        }),
    }
}

/// Closed-form target operator.
pub fn analytic_r(spec: &ModelSpec) -> TargetOperator {
    let (dim_in, dim_out) = spec.dims();
    let matrix = match *spec {
        ModelSpec::Unot { copies } => unot_r(copies),
        ModelSpec::Cloner { copies } => cloner_r(copies),
        ModelSpec::EntanglerA => entangler_a_r(),
        ModelSpec::EntanglerB => entangler_b_r(),
        ModelSpec::Shifter { alpha } => shifter_r(alpha),
        ModelSpec::Identity => shifter_r(0.0),
    };
    TargetOperator::new(
        dim_in,
        dim_out,
        matrix,
        Provenance::Analytic {
            model: spec.to_string(),
        },
    )
    .expect("closed-form target operators are valid")
}

fn unot_r(n: usize) -> ComplexMatrix {
    let basis = SymmetricBasis { n_qubits: n };
    let d = ((n + 1) * (n + 2)) as f64;
    let idx = |k: usize, o: usize| basis.index(k) * 2 + o;
    let mut m = ComplexMatrix::zeros(2 * (n + 1), 2 * (n + 1));
    for k in 0..=n {
        m[(idx(k, 0), idx(k, 0))] = c((n - k + 1) as f64 / d);
        m[(idx(k, 1), idx(k, 1))] = c((k + 1) as f64 / d);
    }
    for k in 1..=n {
        let off = c(-((k * (n - k + 1)) as f64).sqrt() / d);
        m[(idx(k, 0), idx(k - 1, 1))] = off;
        m[(idx(k - 1, 1), idx(k, 0))] = off;
    }
    m
}

fn cloner_r(n: usize) -> ComplexMatrix {
    let basis = SymmetricBasis { n_qubits: n };
    let d = ((n + 1) * (n + 2)) as f64;
    let idx = |i: usize, k: usize| i * (n + 1) + basis.index(k);
    let mut m = ComplexMatrix::zeros(2 * (n + 1), 2 * (n + 1));
    for k in 0..=n {
        m[(idx(0, k), idx(0, k))] = c((k + 1) as f64 / d);
        m[(idx(1, k), idx(1, k))] = c((n - k + 1) as f64 / d);
    }
    for k in 1..=n {
        let off = c(((k * (n - k + 1)) as f64).sqrt() / d);
        m[(idx(0, k), idx(1, k - 1))] = off;
        m[(idx(1, k - 1), idx(0, k))] = off;
    }
    m
}

fn entangler_a_r() -> ComplexMatrix {
    let e00 = ket00();
    let sp = psi_plus();
    let unit = |i: usize, j: usize| {
        let mut u = ComplexMatrix::zeros(2, 2);
        u[(i, j)] = c(1.0);
        u
    };
    // (coefficient, input matrix unit, output ket, output bra)
    type Term<'a> = (f64, (usize, usize), &'a [C64; 4], &'a [C64; 4]);
    let terms: [Term; 6] = [
        (2.0 * LN_2 - 1.0, (0, 0), &e00, &e00),
        (3.0 - 4.0 * LN_2, (1, 1), &e00, &e00),
        (1.5 - 2.0 * LN_2, (0, 0), &sp, &sp),
        (4.0 * LN_2 - 2.5, (1, 1), &sp, &sp),
        (SQRT_2 * (1.5 - 2.0 * LN_2), (0, 1), &e00, &sp),
        (SQRT_2 * (1.5 - 2.0 * LN_2), (1, 0), &sp, &e00),
    ];
    terms
        .iter()
        .fold(ComplexMatrix::zeros(8, 8), |acc, (coef, (i, j), a, b)| {
            let term = kron(&unit(*i, *j), &ComplexMatrix::outer(&a[..], &b[..])).scale(*coef);
            &acc + &term
        })
}

/// Pauli matrices `x, y, z` in the computational basis.
pub fn pauli() -> [ComplexMatrix; 3] {
    let i = C64::new(0.0, 1.0);
    [
        ComplexMatrix::new(2, 2, vec![c(0.0), c(1.0), c(1.0), c(0.0)]).unwrap(),
        ComplexMatrix::new(2, 2, vec![c(0.0), -i, i, c(0.0)]).unwrap(),
        ComplexMatrix::new(2, 2, vec![c(1.0), c(0.0), c(0.0), c(-1.0)]).unwrap(),
    ]
}

fn entangler_b_r() -> ComplexMatrix {
    let correlations = pauli()
        .iter()
        .fold(ComplexMatrix::zeros(4, 4), |acc, s| &acc + &kron(s, s));
    let out = &ComplexMatrix::identity(4) + &correlations.scale(1.0 / 3.0);
    kron(&ComplexMatrix::identity(2), &out).scale(1.0 / 8.0)
}

fn shifter_r(alpha: f64) -> ComplexMatrix {
    let (ca, sa) = (alpha.cos(), alpha.sin());
    let q = PI / 16.0 * sa;
    let mut m = ComplexMatrix::from_real_diag(&[
        0.25 + ca / 12.0 - q,
        0.25 - ca / 12.0 + q,
        0.25 - ca / 12.0 - q,
        0.25 + ca / 12.0 + q,
    ]);
    m[(0, 3)] = c(ca / 6.0);
    m[(3, 0)] = c(ca / 6.0);
    m
}

/// Optimal mean fidelity and, when known in closed form, an optimal channel.
#[derive(Debug, Clone, PartialEq)]
pub struct KnownOptimum {
    pub fidelity: f64,
    pub chi: Option<ChoiOperator>,
}

/// `3 sqrt 2 - 7/2 + (6 - 4 sqrt 2) ln 2`.
pub fn entangler_a_fidelity() -> f64 {
    3.0 * SQRT_2 - 3.5 + (6.0 - 4.0 * SQRT_2) * LN_2
}

/// `4 sqrt 2 (sqrt 2 - 1)^2`, the worst-case fidelity of the optimal entangler A.
pub fn entangler_a_min_fidelity() -> f64 {
    4.0 * SQRT_2 * (SQRT_2 - 1.0).powi(2)
}

/// State-dependent fidelity of the optimal entangler A:
/// `[sqrt 2 cos^2(t/2) + sin^2(t/2)]^2 / (1 + cos^2(t/2))`.
pub fn entangler_a_state_fidelity(theta: f64) -> f64 {
    let c2 = (theta / 2.0).cos().powi(2);
    let s2 = (theta / 2.0).sin().powi(2);
    (SQRT_2 * c2 + s2).powi(2) / (1.0 + c2)
}

/// The optimal entangler A as an isometry `|0> -> |00>`, `|1> -> |Psi+>`.
pub fn entangler_a_isometry() -> ComplexMatrix {
    let (e, s) = (ket00(), psi_plus());
    ComplexMatrix::from_fn(4, 2, |r, col| if col == 0 { e[r] } else { s[r] })
}

/// `(|00><00| + |Psi+><Psi+| + |11><11|) / 3`, the constant output of the optimal
/// entangler B.
pub fn entangler_b_output() -> DensityMatrix {
    let sp = psi_plus();
    let m = &ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0, 1.0]) + &ComplexMatrix::outer(&sp, &sp);
    DensityMatrix::new(m.scale(1.0 / 3.0)).expect("valid state")
}

/// The universal-NOT channel on one qubit:
/// `rho -> (1/3) [[2 r11 + r00, -r01], [-r10, 2 r00 + r11]]`.
pub fn unot_channel() -> ChoiOperator {
    ChoiOperator::from_map(2, 2, |i, j| {
        let mut e = ComplexMatrix::zeros(2, 2);
        if i == j {
            e[(i, i)] = c(1.0 / 3.0);
            e[(1 - i, 1 - i)] = c(2.0 / 3.0);
        } else {
            e[(i, j)] = c(-1.0 / 3.0);
        }
        e
    })
    .expect("valid channel")
}

pub fn known_optimum(spec: &ModelSpec) -> Result<KnownOptimum> {
    let spec = spec.validated()?;
    Ok(match spec {
        ModelSpec::Unot { copies } => KnownOptimum {
            fidelity: (copies + 1) as f64 / (copies + 2) as f64,
            chi: (copies == 1).then(unot_channel),
        },
        ModelSpec::Cloner { copies } => KnownOptimum {
            fidelity: 2.0 / (copies + 1) as f64,
            chi: None,
        },
        ModelSpec::EntanglerA => KnownOptimum {
            fidelity: entangler_a_fidelity(),
            chi: Some(ChoiOperator::from_kraus(&[entangler_a_isometry()])?),
        },
        ModelSpec::EntanglerB => KnownOptimum {
            fidelity: 1.0 / 3.0,
            chi: Some(ChoiOperator::constant_output(2, &entangler_b_output())),
        },
        ModelSpec::Shifter { alpha } => {
            let cf = shifter_closed_forms(alpha)?;
            let chi = if cf.beta_opt == 0.0 {
                ChoiOperator::identity(2)
            } else {
                damping_channel(cf.beta_opt)?
            };
            KnownOptimum {
                fidelity: cf.fidelity,
                chi: Some(chi),
            }
        }
        ModelSpec::Identity => KnownOptimum {
            fidelity: 1.0,
            chi: Some(ChoiOperator::identity(2)),
        },
    })
}

/// Mean fidelity of the damping channel with parameter `beta` for shift `alpha`:
/// `1/2 + (cos a / 6)(cos^2 b + 2 cos b) + (pi/8) sin a sin^2 b`.
pub fn shifter_fidelity(alpha: f64, beta: f64) -> f64 {
    let cb = beta.cos();
    0.5 + alpha.cos() / 6.0 * (cb * cb + 2.0 * cb) + PI / 8.0 * alpha.sin() * beta.sin().powi(2)
}

/// `arctan(8 / (3 pi))`: below this shift the identity is optimal.
pub fn shifter_alpha0() -> f64 {
    (8.0 / (3.0 * PI)).atan()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShifterClosedForm {
    pub alpha: f64,
    pub alpha0: f64,
    /// Optimal damping angle; 0 (identity) at or below `alpha0`.
    pub beta_opt: f64,
    pub fidelity: f64,
    /// Set at `alpha = pi`, where the damping angle reaches `pi` (a phase flip) and the
    /// optimum is degenerate with the universal NOT.
    pub at_endpoint: bool,
}

pub fn shifter_closed_forms(alpha: f64) -> Result<ShifterClosedForm> {
    if !(0.0..=PI).contains(&alpha) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            lo: 0.0,
            hi: PI,
        });
    }
    let alpha0 = shifter_alpha0();
    let beta_opt = if alpha <= alpha0 {
        0.0
    } else {
        // (3 pi/4 tan a - 1)^-1 written without the tangent so a = pi/2 is exact
        let cos_beta = alpha.cos() / (0.75 * PI * alpha.sin() - alpha.cos());
        cos_beta.clamp(-1.0, 1.0).acos()
    };
    let fidelity = if beta_opt == 0.0 {
        0.5 * (1.0 + alpha.cos())
    } else {
        shifter_fidelity(alpha, beta_opt)
    };
    Ok(ShifterClosedForm {
        alpha,
        alpha0,
        beta_opt,
        fidelity,
        at_endpoint: alpha == PI,
    })
}

/// `|0><0| -> cos^2 b |0><0| + sin^2 b |1><1|`, coherences scaled by `cos b`,
/// `|1><1|` fixed. Accepts `b` in `[0, pi]`; past `pi/2` the coherences change sign.
pub fn damping_channel(beta: f64) -> Result<ChoiOperator> {
    if !(0.0..=PI).contains(&beta) {
        return Err(Error::OutOfRange {
            name: "beta",
            value: beta,
            lo: 0.0,
            hi: PI,
        });
    }
    let a0 = ComplexMatrix::from_real_diag(&[beta.cos(), 1.0]);
    let a1 = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[beta.sin(), 0.0]]);
    ChoiOperator::from_kraus(&[a0, a1])
}
