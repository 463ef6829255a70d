use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PauliHamiltonian;

/// Largest qubit count handled by dense diagonalization.
pub const DENSE_LIMIT: usize = 12;
/// Largest qubit count accepted for exact ground energies.
pub const EXACT_LIMIT: usize = 20;

const LANCZOS_MAX_STEPS: usize = 600;
const LANCZOS_TOL: f64 = 1e-13;

pub fn dense_ground_energy(h: &PauliHamiltonian) -> f64 {
    let dim = h.dimension();
    let m = DMatrix::from_row_slice(dim, dim, &h.dense_matrix());
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue by matrix-free Lanczos with a three-vector recurrence.
///
/// Loss of orthogonality only produces spurious copies of converged Ritz
/// values, so the extreme eigenvalue stays accurate without reorthogonalizing.
pub fn lanczos_ground_energy(h: &PauliHamiltonian) -> f64 {
    let dim = h.dimension();
    if dim <= 2 {
        return dense_ground_energy(h);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    normalize(&mut v);
    let mut v_prev = vec![0.0; dim];
    let mut w = vec![0.0; dim];

    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut beta_prev = 0.0;
    let mut last = f64::INFINITY;

    for step in 0..LANCZOS_MAX_STEPS.min(dim) {
        h.apply_vector(&v, &mut w);
        let alpha = dot(&w, &v);
        for i in 0..dim {
            w[i] -= alpha * v[i] + beta_prev * v_prev[i];
        }
        alphas.push(alpha);
        let beta = dot(&w, &w).sqrt();

        if step % 5 == 4 || beta < 1e-12 {
            let ritz = tridiagonal_min(&alphas, &betas);
            if (ritz - last).abs() <= LANCZOS_TOL * ritz.abs().max(1.0) || beta < 1e-12 {
                return ritz;
            }
            last = ritz;
        }

        betas.push(beta);
        std::mem::swap(&mut v_prev, &mut v);
        for i in 0..dim {
            v[i] = w[i] / beta;
        }
        beta_prev = beta;
    }
    tridiagonal_min(&alphas, &betas[..alphas.len() - 1])
}

fn tridiagonal_min(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    SymmetricEigen::new(t)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{PauliOperator, PauliTerm};

    fn transverse_ising(n: usize, field: f64) -> PauliHamiltonian {
        let mut terms = Vec::new();
        for i in 0..n {
            terms.push(PauliTerm::new(-1.0, [PauliOperator::z(i), PauliOperator::z((i + 1) % n)]).unwrap());
            terms.push(PauliTerm::new(-field, [PauliOperator::x(i)]).unwrap());
        }
        PauliHamiltonian::new(n, terms).unwrap()
    }

    #[test]
    fn lanczos_matches_dense() {
        for (n, g) in [(3, 0.5), (6, 1.0), (8, 0.7)] {
            let h = transverse_ising(n, g);
            let dense = dense_ground_energy(&h);
            let lanczos = lanczos_ground_energy(&h);
            assert!(
                (dense - lanczos).abs() <= 1e-10 * dense.abs(),
                "n={n}: dense {dense} lanczos {lanczos}"
            );
        }
    }

    #[test]
    fn lanczos_handles_diagonal_hamiltonian() {
        let terms = (0..5)
            .map(|i| PauliTerm::new(0.1 * (i as f64 + 1.0), [PauliOperator::z(i)]).unwrap())
            .collect();
        let h = PauliHamiltonian::new(5, terms).unwrap();
        let want = -(1.0 + 2.0 + 3.0 + 4.0 + 5.0) * 0.1;
        assert!((lanczos_ground_energy(&h) - want).abs() < 1e-12);
    }
}
