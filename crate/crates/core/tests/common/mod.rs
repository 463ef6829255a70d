//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;
use qrbm::hamiltonian::{PauliAxis, PauliHamiltonian, PauliOperator, PauliTerm};
use qrbm::rbm::RbmParameters;
use rand::Rng;

pub type CMatrix = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2×2 Pauli matrix in the basis (|0⟩, |1⟩).
pub fn pauli_matrix(axis: PauliAxis) -> [[Complex64; 2]; 2] {
    match axis {
        PauliAxis::I => [[c(1., 0.), c(0., 0.)], [c(0., 0.), c(1., 0.)]],
        PauliAxis::X => [[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]],
        PauliAxis::Y => [[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]],
        PauliAxis::Z => [[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]],
    }
}

/// `A ⊗ B` for square matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (na, nb) = (a.len(), b.len());
    let mut out = vec![vec![c(0., 0.); na * nb]; na * nb];
    for i in 0..na {
        for j in 0..na {
            for k in 0..nb {
                for l in 0..nb {
                    out[i * nb + k][j * nb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

/// Dense matrix of one Pauli string, qubit 0 the least significant bit:
/// `P_{n−1} ⊗ … ⊗ P_0`.
pub fn term_matrix(n: usize, term: &PauliTerm) -> CMatrix {
    let mut axes = vec![PauliAxis::I; n];
    for op in term.operators() {
        axes[op.qubit] = op.axis;
    }
    let mut m: CMatrix = vec![vec![c(term.coefficient(), 0.)]];
    for q in (0..n).rev() {
        let p = pauli_matrix(axes[q]);
        m = kron(&m, &p.iter().map(|r| r.to_vec()).collect());
    }
    m
}

pub fn hamiltonian_matrix(h: &PauliHamiltonian) -> CMatrix {
    let dim = 1 << h.n_qubits();
    let mut total = vec![vec![c(0., 0.); dim]; dim];
    for t in h.terms() {
        let m = term_matrix(h.n_qubits(), t);
        for i in 0..dim {
            for j in 0..dim {
                total[i][j] += m[i][j];
            }
        }
    }
    total
}

/// Real part of a Hermitian matrix whose imaginary part must vanish.
pub fn real_symmetric(m: &CMatrix) -> Vec<Vec<f64>> {
    m.iter()
        .map(|row| {
            row.iter()
                .map(|z| {
                    assert!(z.im.abs() < 1e-12, "non-real entry {z}");
                    z.re
                })
                .collect()
        })
        .collect()
}

/// Smallest eigenvalue of a real symmetric matrix by cyclic Jacobi sweeps.
pub fn jacobi_min_eigenvalue(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

/// Random Pauli Hamiltonian with an even number of Y factors per term.
pub fn random_hamiltonian<R: Rng>(rng: &mut R, n: usize, n_terms: usize) -> PauliHamiltonian {
    let mut terms = Vec::new();
    while terms.len() < n_terms {
        let ops: Vec<PauliOperator> = (0..n)
            .filter_map(|q| match rng.random_range(0..4) {
                0 => None,
                1 => Some(PauliOperator::x(q)),
                2 => Some(PauliOperator::y(q)),
                _ => Some(PauliOperator::z(q)),
            })
            .collect();
        if ops.iter().filter(|o| o.axis == PauliAxis::Y).count() % 2 == 1 {
            continue;
        }
        terms.push(PauliTerm::new(rng.random_range(-1.0..1.0), ops).unwrap());
    }
    PauliHamiltonian::new(n, terms).unwrap()
}

/// Spin value of unit `i` in basis index `x` (bit set ↔ −1).
pub fn spin(x: usize, i: usize) -> f64 {
    if x >> i & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Unnormalized `P(x)` by explicit summation over all hidden configurations.
pub fn brute_unnormalized(p: &RbmParameters, x: usize) -> f64 {
    let (n, m) = (p.n_visible(), p.n_hidden());
    let (a, b) = (p.a(), p.b());
    (0..1usize << m)
        .map(|h| {
            let mut e = 0.0;
            for i in 0..n {
                e += a[i] * spin(x, i);
            }
            for j in 0..m {
                e += b[j] * spin(h, j);
                for i in 0..n {
                    e += p.w_at(i, j) * spin(x, i) * spin(h, j);
                }
            }
            e.exp()
        })
        .sum()
}

pub fn brute_sign(p: &RbmParameters, x: usize) -> f64 {
    let d = p.d();
    (p.c() + (0..p.n_visible()).map(|i| d[i] * spin(x, i)).sum::<f64>()).tanh()
}

/// Visible marginal `P(x)` by enumeration.
pub fn brute_marginal(p: &RbmParameters) -> Vec<f64> {
    let raw: Vec<f64> = (0..1usize << p.n_visible()).map(|x| brute_unnormalized(p, x)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / z).collect()
}

/// `Φ(x) = √P(x) · s(x)`.
pub fn brute_phi(p: &RbmParameters) -> Vec<f64> {
    brute_marginal(p)
        .iter()
        .enumerate()
        .map(|(x, px)| px.sqrt() * brute_sign(p, x))
        .collect()
}

/// `⟨Φ|H|Φ⟩ / ⟨Φ|Φ⟩` with the dense matrix.
pub fn rayleigh_quotient(h: &[Vec<f64>], phi: &[f64]) -> f64 {
    let mut num = 0.0;
    for i in 0..phi.len() {
        for j in 0..phi.len() {
            num += phi[i] * h[i][j] * phi[j];
        }
    }
    num / phi.iter().map(|v| v * v).sum::<f64>()
}

/// `Q(y) ∝ exp((a·σ + b·h + σᵀWh)/k)` over joint indices, visible bits low.
pub fn brute_regulated_joint(p: &RbmParameters, k: f64) -> Vec<f64> {
    let (n, m) = (p.n_visible(), p.n_hidden());
    let (a, b) = (p.a(), p.b());
    let raw: Vec<f64> = (0..1usize << (n + m))
        .map(|y| {
            let (x, h) = (y & ((1 << n) - 1), y >> n);
            let mut e = 0.0;
            for i in 0..n {
                e += a[i] * spin(x, i);
            }
            for j in 0..m {
                e += b[j] * spin(h, j);
                for i in 0..n {
                    e += p.w_at(i, j) * spin(x, i) * spin(h, j);
                }
            }
            (e / k).exp()
        })
        .collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / z).collect()
}

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Explicit 8×8 two-controlled `R_y(θ)` on qubits (c1, c2, target) of a
/// 3-qubit register, firing when the controls read `(v1, v2)`.
pub fn ccry_matrix(theta: f64, c1: usize, c2: usize, target: usize, v1: bool, v2: bool) -> Vec<Vec<f64>> {
    let (s, co) = (0.5 * theta).sin_cos();
    let mut m = vec![vec![0.0; 8]; 8];
    for col in 0..8usize {
        let fires = ((col >> c1 & 1) == 1) == v1 && ((col >> c2 & 1) == 1) == v2;
        if !fires {
            m[col][col] = 1.0;
            continue;
        }
        let t = col >> target & 1;
        let partner = col ^ (1 << target);
        if t == 0 {
            m[col][col] = co;
            m[partner][col] = s;
        } else {
            m[col][col] = co;
            m[partner][col] = -s;
        }
    }
    m
}

pub fn random_parameters<R: Rng>(rng: &mut R, n: usize, m: usize, half_width: f64) -> RbmParameters {
    RbmParameters::random_uniform(n, m, half_width, rng)
}
