//! Standard gate generators: Pauli strings, rotation Hamiltonians, and the
//! ideal Lindbladians of the usual one- and two-qubit gates.

use num_complex::Complex64;

use crate::error::{Result, RltError};
use crate::linalg::{kron, CMatrix};
use crate::reps::Lindbladian;

fn pauli_1q(c: char) -> Result<CMatrix> {
    let z = Complex64::ZERO;
    let one = Complex64::ONE;
    let i = Complex64::I;
    let m = match c {
        'I' => ndarray::array![[one, z], [z, one]],
        'X' => ndarray::array![[z, one], [one, z]],
        'Y' => ndarray::array![[z, -i], [i, z]],
        'Z' => ndarray::array![[one, z], [z, -one]],
        other => return Err(RltError::Invalid(format!("unknown Pauli '{other}'"))),
    };
    Ok(m)
}

/// Unnormalized Pauli string, e.g. `"ZX"` for `Z (x) X`.
pub fn pauli_string(label: &str) -> Result<CMatrix> {
    let mut chars = label.chars();
    let first = chars
        .next()
        .ok_or_else(|| RltError::Invalid("empty Pauli string".into()))?;
    let mut m = pauli_1q(first)?;
    for c in chars {
        m = kron(&m, &pauli_1q(c)?);
    }
    Ok(m)
}

/// Hermitian matrix `sum_k coeff_k * P_k` from Pauli-string coefficients.
pub fn pauli_sum(terms: &[(String, f64)], num_qubits: usize) -> Result<CMatrix> {
    let d = 1usize << num_qubits;
    let mut h = CMatrix::zeros((d, d));
    for (label, coeff) in terms {
        if label.len() != num_qubits {
            return Err(RltError::Invalid(format!(
                "Pauli string '{label}' has {} characters, expected {num_qubits}",
                label.len()
            )));
        }
        let p = pauli_string(label)?;
        h.zip_mut_with(&p, |o, &pv| *o += pv * *coeff);
    }
    Ok(h)
}

/// Hamiltonian of a rotation by `angle` about the given Pauli axis,
/// accumulated over unit gate time: `H = (angle/2) * P`.
pub fn rotation_hamiltonian(axis: &str, angle: f64) -> Result<CMatrix> {
    Ok(pauli_string(axis)?.mapv(|z| z * Complex64::new(angle / 2.0, 0.0)))
}

/// Ideal Lindbladian of a rotation gate about a Pauli axis.
pub fn rotation_lindbladian(axis: &str, angle: f64) -> Result<Lindbladian> {
    Lindbladian::from_hamiltonian(&rotation_hamiltonian(axis, angle)?)
}

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

pub fn identity_gate(num_qubits: usize) -> Lindbladian {
    Lindbladian::zero(1 << num_qubits)
}

/// 90-degree rotation about X.
pub fn x90() -> Lindbladian {
    rotation_lindbladian("X", FRAC_PI_2).expect("valid axis")
}

/// Inverse of [`x90`]: rotation by -90 degrees about X.
pub fn x90_inv() -> Lindbladian {
    rotation_lindbladian("X", -FRAC_PI_2).expect("valid axis")
}

pub fn y90() -> Lindbladian {
    rotation_lindbladian("Y", FRAC_PI_2).expect("valid axis")
}

pub fn z90() -> Lindbladian {
    rotation_lindbladian("Z", FRAC_PI_2).expect("valid axis")
}

/// 180-degree rotation about X. Its generator violates the spectral
/// non-singularity condition, so amplification analysis rejects it.
pub fn x180() -> Lindbladian {
    rotation_lindbladian("X", PI).expect("valid axis")
}

/// T gate (pi/8 phase gate) as a rotation by pi/4 about Z.
pub fn t_gate() -> Lindbladian {
    rotation_lindbladian("Z", FRAC_PI_4).expect("valid axis")
}

/// 90-degree rotation generated by the ZX interaction.
pub fn zx90() -> Lindbladian {
    rotation_lindbladian("ZX", FRAC_PI_2).expect("valid axis")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    #[test]
    fn zx_string_matches_kron() {
        let zx = pauli_string("ZX").unwrap();
        let z = pauli_string("Z").unwrap();
        let x = pauli_string("X").unwrap();
        assert_eq!(zx, kron(&z, &x));
    }

    #[test]
    fn gate_norms() {
        assert!((x90().fro_norm() - PI / SQRT_2).abs() < 1e-12);
        assert!((zx90().fro_norm() - SQRT_2 * PI).abs() < 1e-12);
        assert_eq!(identity_gate(1).fro_norm(), 0.0);
    }

    #[test]
    fn pauli_sum_builds_hermitian() {
        let h = pauli_sum(&[("X".into(), 0.25), ("Z".into(), -0.5)], 1).unwrap();
        assert!((h[(0, 1)].re - 0.25).abs() < 1e-15);
        assert!((h[(0, 0)].re + 0.5).abs() < 1e-15);
        Lindbladian::from_hamiltonian(&h).unwrap();
    }

    #[test]
    fn x90_composed_with_inverse_is_identity() {
        let g = x90().exp().unwrap();
        let ginv = x90_inv().exp().unwrap();
        let prod = g.compose(&ginv);
        let err: f64 = (prod.matrix() - &ndarray::Array2::<f64>::eye(4))
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-12);
    }
}
