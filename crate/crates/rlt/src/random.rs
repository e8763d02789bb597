//! Seeded random matrices and generators for verification sweeps and tests.

use ndarray::prelude::*;
use ndarray_linalg::QR;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{fro_norm, CMatrix};
use crate::reps::Lindbladian;

/// Matrix with iid standard complex Gaussian entries, rescaled to the given
/// Frobenius norm.
pub fn random_complex_matrix<R: Rng + ?Sized>(m: usize, norm: f64, rng: &mut R) -> CMatrix {
    let mut a = CMatrix::zeros((m, m));
    for z in a.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z = Complex64::new(re, im);
    }
    let current = fro_norm(&a);
    if current > 0.0 {
        a.mapv_inplace(|z| z * (norm / current));
    }
    a
}

/// Random Hermitian matrix with the given Frobenius norm.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, norm: f64, rng: &mut R) -> CMatrix {
    let g = random_complex_matrix(d, 1.0, rng);
    let mut h = &g + &g.t().mapv(|z| z.conj());
    let current = fro_norm(&h);
    if current > 0.0 {
        h.mapv_inplace(|z| z * (norm / current));
    }
    h
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<CMatrix> {
    let g = random_complex_matrix(d, 1.0, rng);
    let (q, r) = g.qr()?;
    // Fix the phase ambiguity so the distribution is Haar.
    let mut q = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::ONE };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Random density matrix (PSD, unit trace) from a Ginibre factor.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let w = random_complex_matrix(d, 1.0, rng);
    let rho = w.dot(&w.t().mapv(|z| z.conj()));
    let tr: Complex64 = rho.diag().sum();
    rho.mapv(|z| z / tr.re)
}

/// Lindbladian of a random Hamiltonian, rescaled so the generator itself has
/// Frobenius norm `target_norm`.
pub fn random_hamiltonian_lindbladian<R: Rng + ?Sized>(
    d: usize,
    target_norm: f64,
    rng: &mut R,
) -> Result<Lindbladian> {
    let h = random_hermitian(d, 1.0, rng);
    let l = Lindbladian::from_hamiltonian(&h)?;
    let current = l.fro_norm();
    if current > 0.0 {
        Ok(l.scale(target_norm / current))
    } else {
        Ok(l)
    }
}

/// Random gate-like generator: Hamiltonian part of norm `target_norm` plus a
/// weak dissipator with a jump rate at most `max_rate`, staying inside the
/// diagonalizable regime.
pub fn random_gate_lindbladian<R: Rng + ?Sized>(
    d: usize,
    target_norm: f64,
    max_rate: f64,
    rng: &mut R,
) -> Result<Lindbladian> {
    let hamiltonian = random_hamiltonian_lindbladian(d, target_norm, rng)?;
    let rate = max_rate * rng.random::<f64>();
    let jump = random_complex_matrix(d, rate.sqrt(), rng);
    let dissipator = Lindbladian::from_dissipator(&[jump])?;
    hamiltonian.add(dissipator.matrix())
}

/// Random perturbation direction with unit Frobenius norm.
pub fn random_direction<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CMatrix {
    random_complex_matrix(m, 1.0, rng)
}

/// Physical Lindbladian-error direction: a Hamiltonian error plus a weak extra
/// dissipator, rescaled to Frobenius norm `eps`. Adding the result to an ideal
/// generator built from `(H, jumps)` keeps the sum a valid Lindbladian.
pub fn random_lindbladian_error<R: Rng + ?Sized>(
    d: usize,
    eps: f64,
    rng: &mut R,
) -> Result<Array2<f64>> {
    let dh = random_hermitian(d, 1.0, rng);
    let l_h = Lindbladian::from_hamiltonian(&dh)?;
    let jump = random_complex_matrix(d, 0.3, rng);
    let l_d = Lindbladian::from_dissipator(&[jump])?;
    let mut delta = l_h.matrix() + l_d.matrix();
    let norm = delta.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        delta.mapv_inplace(|x| x * (eps / norm));
    }
    Ok(delta)
}
