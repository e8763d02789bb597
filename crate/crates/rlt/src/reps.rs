//! Quantum-operation representations: orthonormal Hermitian matrix bases,
//! Hilbert-Schmidt (HS) superoperator matrices, Choi-Jamiolkowski (CJ)
//! matrices, vectorization, and TP/CP/Lindbladian physicality checks.
//!
//! Conventions fixed here and used everywhere else:
//!
//! * The operator basis is the normalized Pauli basis, ordered
//!   lexicographically over Pauli strings with `I < X < Y < Z` per qubit and
//!   the identity first. All file I/O uses this order.
//! * The HS matrix of a map `G` is `G_ab = Tr[B_a^dag G(B_b)]`. With the
//!   Hermitian basis, Hermiticity-preserving maps have real HS matrices, and
//!   gate composition is plain matrix multiplication.
//! * The CJ matrix is indexed so that `CJ[(a,i),(b,j)] = G(E_ij)[a,b]` in the
//!   elementary basis; complete positivity of a map is `CJ >= 0`, and the
//!   conditional complete positivity of a Lindbladian is `Q CJ(L) Q >= 0` with
//!   `Q = I - |I_d>><<I_d|/d`.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

use crate::error::{Result, RltError};
use crate::linalg::{self, expm, fro_norm, kron, to_real_checked, CMatrix};

/// Orthonormal Hermitian matrix basis with the identity (scaled) first.
#[derive(Debug, Clone)]
pub struct MatrixBasis {
    dim: usize,
    elements: Vec<CMatrix>,
    labels: Vec<String>,
}

fn pauli_1q(which: u8) -> CMatrix {
    let z = Complex64::ZERO;
    let one = Complex64::ONE;
    let i = Complex64::I;
    let (m00, m01, m10, m11) = match which {
        0 => (one, z, z, one),   // I
        1 => (z, one, one, z),   // X
        2 => (z, -i, i, z),      // Y
        _ => (one, z, z, -one),  // Z
    };
    ndarray::array![[m00, m01], [m10, m11]]
}

const PAULI_CHARS: [char; 4] = ['I', 'X', 'Y', 'Z'];

impl MatrixBasis {
    /// Normalized Pauli basis on `num_qubits` qubits: `4^n` Hermitian strings
    /// scaled by `1/sqrt(d)`, identity first, lexicographic `I < X < Y < Z`.
    pub fn pauli(num_qubits: usize) -> MatrixBasis {
        assert!(num_qubits >= 1, "need at least one qubit");
        let d = 1usize << num_qubits;
        let count = 4usize.pow(num_qubits as u32);
        let scale = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
        let mut elements = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        for idx in 0..count {
            let mut digits = Vec::with_capacity(num_qubits);
            let mut rest = idx;
            for _ in 0..num_qubits {
                digits.push((rest % 4) as u8);
                rest /= 4;
            }
            digits.reverse(); // first qubit is the most significant digit
            let mut m = pauli_1q(digits[0]);
            for &dg in &digits[1..] {
                m = kron(&m, &pauli_1q(dg));
            }
            elements.push(m.mapv(|z| z * scale));
            labels.push(digits.iter().map(|&dg| PAULI_CHARS[dg as usize]).collect());
        }
        MatrixBasis { dim: d, elements, labels }
    }

    /// Pauli basis for Hilbert-space dimension `d` (must be a power of two).
    pub fn pauli_for_dim(d: usize) -> Result<MatrixBasis> {
        if d < 2 || !d.is_power_of_two() {
            return Err(RltError::Invalid(format!(
                "Pauli basis requires a power-of-two dimension, got {d}"
            )));
        }
        Ok(MatrixBasis::pauli(d.trailing_zeros() as usize))
    }

    /// Hilbert-space dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of basis elements, `d^2`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Max deviation from `Tr[B_a^dag B_b] = delta_ab`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let ip = hs_inner(&self.elements[a], &self.elements[b]);
                let expect = if a == b { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((ip - expect).norm());
            }
        }
        worst
    }
}

/// Hilbert-Schmidt inner product `Tr[A^dag B]`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `|A>>_a = Tr[B_a^dag A]`.
pub fn vectorize(a: &CMatrix, basis: &MatrixBasis) -> Result<Array1<Complex64>> {
    if a.dim() != (basis.dim(), basis.dim()) {
        return Err(RltError::DimMismatch(format!(
            "vectorize: matrix is {:?}, basis dimension {}",
            a.dim(),
            basis.dim()
        )));
    }
    Ok(Array1::from_iter(basis.elements().iter().map(|b| hs_inner(b, a))))
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: ArrayView1<Complex64>, basis: &MatrixBasis) -> Result<CMatrix> {
    if v.len() != basis.len() {
        return Err(RltError::DimMismatch(format!(
            "devectorize: vector length {} vs basis size {}",
            v.len(),
            basis.len()
        )));
    }
    let d = basis.dim();
    let mut out = CMatrix::zeros((d, d));
    for (coeff, b) in v.iter().zip(basis.elements()) {
        out.zip_mut_with(b, |o, &bv| *o += coeff * bv);
    }
    Ok(out)
}

/// HS (Pauli-transfer) matrix of a Hermiticity-preserving map: real
/// `d^2 x d^2` entries in the normalized Pauli basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HSMatrix {
    d: usize,
    mat: Array2<f64>,
}

impl HSMatrix {
    pub fn identity(d: usize) -> HSMatrix {
        HSMatrix { d, mat: Array2::eye(d * d) }
    }

    /// Wrap an existing real HS matrix.
    pub fn from_matrix(d: usize, mat: Array2<f64>) -> Result<HSMatrix> {
        if mat.dim() != (d * d, d * d) {
            return Err(RltError::DimMismatch(format!(
                "HS matrix for d = {d} must be {0} x {0}, got {1:?}",
                d * d,
                mat.dim()
            )));
        }
        Ok(HSMatrix { d, mat })
    }

    /// HS matrix of the unitary channel `rho -> U rho U^dag`.
    pub fn of_unitary(u: &CMatrix) -> Result<HSMatrix> {
        let d = u.nrows();
        if u.ncols() != d {
            return Err(RltError::NotSquare { rows: d, cols: u.ncols() });
        }
        let udag = u.t().mapv(|z| z.conj());
        let unitarity = fro_norm(&(udag.dot(u) - linalg::eye(d)));
        if unitarity > 1e-10 {
            return Err(RltError::Invalid(format!(
                "input is not unitary (||U^dag U - I|| = {unitarity:.3e})"
            )));
        }
        let basis = MatrixBasis::pauli_for_dim(d)?;
        let n = basis.len();
        let mut mat = CMatrix::zeros((n, n));
        for b in 0..n {
            let gb = u.dot(basis.element(b)).dot(&udag);
            for a in 0..n {
                mat[(a, b)] = hs_inner(basis.element(a), &gb);
            }
        }
        Ok(HSMatrix { d, mat: to_real_checked(&mat, 1e-10)? })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.mat
    }

    /// Composition `self o other` (apply `other` first).
    pub fn compose(&self, other: &HSMatrix) -> HSMatrix {
        HSMatrix { d: self.d, mat: self.mat.dot(&other.mat) }
    }

    pub fn pow(&self, n: u64) -> HSMatrix {
        HSMatrix { d: self.d, mat: linalg::matrix_power(&self.mat, n) }
    }

    pub fn apply_vec(&self, v: &Array1<f64>) -> Array1<f64> {
        self.mat.dot(v)
    }

    /// `||<<I|G - <<I|||_2`; zero for trace-preserving maps.
    pub fn tp_residual(&self) -> f64 {
        let sqrt_d = (self.d as f64).sqrt();
        let mut sum = 0.0;
        for b in 0..self.d * self.d {
            let expect = if b == 0 { 1.0 } else { 0.0 };
            sum += (self.mat[(0, b)] - expect).powi(2);
        }
        sqrt_d * sum.sqrt()
    }

    pub fn to_cj(&self) -> CJMatrix {
        hs_rep_to_cj(self.mat.view(), self.d)
    }

    /// Smallest eigenvalue of the CJ matrix; `>= 0` iff completely positive.
    pub fn cp_min_eig(&self) -> Result<f64> {
        self.to_cj().min_eig()
    }

    /// Validate TP and CP within tolerance.
    pub fn cptp_check(&self, tol: f64) -> Result<()> {
        let tp = self.tp_residual();
        if tp > tol {
            return Err(RltError::NotCptp(format!("TP residual {tp:.3e} exceeds {tol:.1e}")));
        }
        let cp = self.cp_min_eig()?;
        if cp < -tol {
            return Err(RltError::NotCptp(format!("CJ min eigenvalue {cp:.3e} below -{tol:.1e}")));
        }
        Ok(())
    }
}

/// CJ (Choi) matrix of a map, indexed as `CJ[(a,i),(b,j)] = G(E_ij)[a,b]`.
#[derive(Debug, Clone)]
pub struct CJMatrix {
    d: usize,
    mat: CMatrix,
}

impl CJMatrix {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    /// Max deviation from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        let adj = self.mat.t().mapv(|z| z.conj());
        fro_norm(&(&self.mat - &adj))
    }

    /// Smallest eigenvalue of the Hermitized matrix.
    pub fn min_eig(&self) -> Result<f64> {
        min_eig_hermitian(&self.mat)
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.diag().sum()
    }
}

fn min_eig_hermitian(m: &CMatrix) -> Result<f64> {
    let adj = m.t().mapv(|z| z.conj());
    let herm = (m + &adj).mapv(|z| z * 0.5);
    let (vals, _) = herm.eigh(UPLO::Upper)?;
    Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// CJ matrix of a map given by its real HS representation.
pub fn hs_rep_to_cj(mat: ArrayView2<f64>, d: usize) -> CJMatrix {
    let basis = MatrixBasis::pauli_for_dim(d).expect("power-of-two dimension");
    let n = d * d;
    let mut cj = CMatrix::zeros((n, n));
    let cmat = mat.mapv(|x| Complex64::new(x, 0.0));
    for i in 0..d {
        for j in 0..d {
            // G(E_ij) through the basis representation.
            let mut eij = CMatrix::zeros((d, d));
            eij[(i, j)] = Complex64::ONE;
            let w = vectorize(&eij, &basis).expect("dims match");
            let out = cmat.dot(&w);
            let g_eij = devectorize(out.view(), &basis).expect("dims match");
            for a in 0..d {
                for b in 0..d {
                    cj[(a * d + i, b * d + j)] = g_eij[(a, b)];
                }
            }
        }
    }
    CJMatrix { d, mat: cj }
}

/// Inverse of [`hs_rep_to_cj`].
pub fn cj_to_hs_rep(cj: &CJMatrix) -> Result<Array2<f64>> {
    let d = cj.d;
    let basis = MatrixBasis::pauli_for_dim(d)?;
    let n = d * d;
    let mut mat = CMatrix::zeros((n, n));
    for beta in 0..n {
        let bb = basis.element(beta);
        // G(B_beta)[a,b] = sum_ij B_beta[i,j] CJ[(a,i),(b,j)]
        let mut g_bb = CMatrix::zeros((d, d));
        for a in 0..d {
            for b in 0..d {
                let mut acc = Complex64::ZERO;
                for i in 0..d {
                    for j in 0..d {
                        acc += bb[(i, j)] * cj.mat[(a * d + i, b * d + j)];
                    }
                }
                g_bb[(a, b)] = acc;
            }
        }
        for alpha in 0..n {
            mat[(alpha, beta)] = hs_inner(basis.element(alpha), &g_bb);
        }
    }
    to_real_checked(&mat, 1e-9)
}

/// The projector `Q = I_{d^2} - |I_d>><<I_d|/d` in CJ index space, where
/// `|I_d>>[(a,i)] = delta_ai`.
pub fn q_projector(d: usize) -> CMatrix {
    let n = d * d;
    let mut q = linalg::eye(n);
    let scale = Complex64::new(1.0 / d as f64, 0.0);
    for a in 0..d {
        for b in 0..d {
            q[(a * d + a, b * d + b)] -= scale;
        }
    }
    q
}

/// TP residual and conditional-CP minimum eigenvalue of a Lindbladian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    /// `||<<I_d| L||`; zero for trace-annihilating generators.
    pub tp_residual: f64,
    /// `lambda_min(Q CJ(L) Q)`; nonnegative for valid generators.
    pub cp_min_eig: f64,
}

impl PhysicalityReport {
    pub fn is_physical(&self, tol: f64) -> bool {
        self.tp_residual <= tol && self.cp_min_eig >= -tol
    }
}

/// Finite-time Lindbladian of a gate in HS representation: `G = e^L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lindbladian {
    d: usize,
    mat: Array2<f64>,
}

impl Lindbladian {
    pub fn zero(d: usize) -> Lindbladian {
        Lindbladian { d, mat: Array2::zeros((d * d, d * d)) }
    }

    pub fn from_matrix(d: usize, mat: Array2<f64>) -> Result<Lindbladian> {
        if mat.dim() != (d * d, d * d) {
            return Err(RltError::DimMismatch(format!(
                "Lindbladian for d = {d} must be {0} x {0}, got {1:?}",
                d * d,
                mat.dim()
            )));
        }
        Ok(Lindbladian { d, mat })
    }

    /// Generator of the Hamiltonian part, `rho -> -i [H, rho]`, accumulated
    /// over unit gate time.
    pub fn from_hamiltonian(h: &CMatrix) -> Result<Lindbladian> {
        let d = h.nrows();
        if h.ncols() != d {
            return Err(RltError::NotSquare { rows: d, cols: h.ncols() });
        }
        let asym = fro_norm(&(h - &h.t().mapv(|z| z.conj())));
        if asym > 1e-10 * (1.0 + fro_norm(h)) {
            return Err(RltError::NotHermitian(asym));
        }
        let basis = MatrixBasis::pauli_for_dim(d)?;
        let n = basis.len();
        let mut mat = CMatrix::zeros((n, n));
        let minus_i = -Complex64::I;
        for b in 0..n {
            let bb = basis.element(b);
            let action = (h.dot(bb) - bb.dot(h)).mapv(|z| z * minus_i);
            for a in 0..n {
                mat[(a, b)] = hs_inner(basis.element(a), &action);
            }
        }
        Ok(Lindbladian { d, mat: to_real_checked(&mat, 1e-10)? })
    }

    /// Dissipator generator `rho -> sum_i (A_i rho A_i^dag - {A_i^dag A_i, rho}/2)`
    /// accumulated over unit gate time.
    pub fn from_dissipator(jumps: &[CMatrix]) -> Result<Lindbladian> {
        let d = jumps
            .first()
            .map(|j| j.nrows())
            .ok_or_else(|| RltError::Invalid("dissipator needs at least one jump operator".into()))?;
        for j in jumps {
            if j.dim() != (d, d) {
                return Err(RltError::DimMismatch("jump operators must share one square dimension".into()));
            }
        }
        let basis = MatrixBasis::pauli_for_dim(d)?;
        let n = basis.len();
        let mut mat = CMatrix::zeros((n, n));
        let half = Complex64::new(0.5, 0.0);
        for b in 0..n {
            let bb = basis.element(b);
            let mut action = CMatrix::zeros((d, d));
            for a_op in jumps {
                let adag = a_op.t().mapv(|z| z.conj());
                let adaga = adag.dot(a_op);
                action += &a_op.dot(bb).dot(&adag);
                action -= &(adaga.dot(bb) + bb.dot(&adaga)).mapv(|z| z * half);
            }
            for a in 0..n {
                mat[(a, b)] = hs_inner(basis.element(a), &action);
            }
        }
        Ok(Lindbladian { d, mat: to_real_checked(&mat, 1e-10)? })
    }

    /// Full generator from a Hamiltonian and jump operators.
    pub fn from_generators(h: Option<&CMatrix>, jumps: &[CMatrix]) -> Result<Lindbladian> {
        let ham = h.map(Lindbladian::from_hamiltonian).transpose()?;
        let dis = if jumps.is_empty() { None } else { Some(Lindbladian::from_dissipator(jumps)?) };
        match (ham, dis) {
            (Some(a), Some(b)) => a.add(b.matrix()),
            (Some(a), None) => Ok(a),
            (None, Some(b)) => Ok(b),
            (None, None) => Err(RltError::Invalid("empty generator: provide a Hamiltonian or jump operators".into())),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.mat
    }

    pub fn to_complex(&self) -> CMatrix {
        linalg::to_complex(&self.mat)
    }

    pub fn fro_norm(&self) -> f64 {
        self.mat.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: f64) -> Lindbladian {
        Lindbladian { d: self.d, mat: self.mat.mapv(|x| x * factor) }
    }

    /// `L + delta` for a real perturbation matrix.
    pub fn add(&self, delta: &Array2<f64>) -> Result<Lindbladian> {
        if delta.dim() != self.mat.dim() {
            return Err(RltError::DimMismatch(format!(
                "perturbation is {:?}, generator is {:?}",
                delta.dim(),
                self.mat.dim()
            )));
        }
        Ok(Lindbladian { d: self.d, mat: &self.mat + delta })
    }

    /// `e^L` as an HS matrix.
    pub fn exp(&self) -> Result<HSMatrix> {
        let e = expm(&self.to_complex())?;
        Ok(HSMatrix { d: self.d, mat: to_real_checked(&e, 1e-9)? })
    }

    /// TP residual and conditional-CP minimum eigenvalue.
    pub fn physicality(&self) -> Result<PhysicalityReport> {
        let sqrt_d = (self.d as f64).sqrt();
        let tp_residual = sqrt_d
            * self
                .mat
                .row(0)
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
        let cj = hs_rep_to_cj(self.mat.view(), self.d);
        let q = q_projector(self.d);
        let qcjq = q.dot(cj.matrix()).dot(&q);
        let cp_min_eig = min_eig_hermitian(&qcjq)?;
        Ok(PhysicalityReport { tp_residual, cp_min_eig })
    }
}

/// Physicality report of a bare perturbation added to an ideal generator.
pub fn lindblad_physicality(l: &Lindbladian) -> Result<PhysicalityReport> {
    l.physicality()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn x90_unitary() -> CMatrix {
        // U = exp(-i pi X / 4) = cos(pi/4) I - i sin(pi/4) X, written out.
        let c = Complex64::new(FRAC_PI_4.cos(), 0.0);
        let s = Complex64::new(0.0, -FRAC_PI_4.sin());
        ndarray::array![[c, s], [s, c]]
    }

    #[test]
    fn pauli_basis_1q() {
        let basis = MatrixBasis::pauli(1);
        assert_eq!(basis.len(), 4);
        assert_eq!(basis.labels(), &["I", "X", "Y", "Z"]);
        let scale = 1.0 / SQRT_2;
        assert!((basis.element(0)[(0, 0)].re - scale).abs() < 1e-15);
        assert!((basis.element(1)[(0, 1)].re - scale).abs() < 1e-15);
        assert!((basis.element(2)[(1, 0)].im - scale).abs() < 1e-15);
        assert!((basis.element(3)[(1, 1)].re + scale).abs() < 1e-15);
    }

    #[test]
    fn pauli_basis_2q_is_orthonormal() {
        let basis = MatrixBasis::pauli(2);
        assert_eq!(basis.len(), 16);
        assert_eq!(basis.label(0), "II");
        assert_eq!(basis.label(1), "IX");
        assert_eq!(basis.label(4), "XI");
        assert!(basis.orthonormality_residual() < 1e-14);
    }

    #[test]
    fn vectorize_identity() {
        let basis = MatrixBasis::pauli(1);
        let v = vectorize(&linalg::eye(2), &basis).unwrap();
        assert!((v[0].re - SQRT_2).abs() < 1e-14);
        for k in 1..4 {
            assert!(v[k].norm() < 1e-14);
        }
    }

    #[test]
    fn vectorize_round_trip_and_inner_product() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let basis = MatrixBasis::pauli(2);
        let rho = random_density(4, &mut rng);
        let sigma = random_density(4, &mut rng);
        let v = vectorize(&rho, &basis).unwrap();
        let back = devectorize(v.view(), &basis).unwrap();
        assert!(fro_norm(&(back - &rho)) < 1e-12);
        // <<A|B>> = Tr[A^dag B]
        let w = vectorize(&sigma, &basis).unwrap();
        let vec_ip: Complex64 = v.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
        let mat_ip = hs_inner(&rho, &sigma);
        assert!((vec_ip - mat_ip).norm() < 1e-12);
    }

    #[test]
    fn hs_of_identity_unitary() {
        let g = HSMatrix::of_unitary(&linalg::eye(2)).unwrap();
        let err: f64 = (g.matrix() - &Array2::<f64>::eye(4))
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-13);
    }

    #[test]
    fn hs_of_x90_maps_z_to_minus_y() {
        let g = HSMatrix::of_unitary(&x90_unitary()).unwrap();
        // Column for Z (index 3): a single -1 in the Y row (index 2).
        let col = g.matrix().column(3);
        assert!((col[2] + 1.0).abs() < 1e-12);
        for row in [0usize, 1, 3] {
            assert!(col[row].abs() < 1e-12);
        }
        assert!(g.tp_residual() < 1e-10);
    }

    #[test]
    fn hs_composition_is_multiplication() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let u1 = random_unitary(2, &mut rng).unwrap();
        let u2 = random_unitary(2, &mut rng).unwrap();
        let g1 = HSMatrix::of_unitary(&u1).unwrap();
        let g2 = HSMatrix::of_unitary(&u2).unwrap();
        let g21 = HSMatrix::of_unitary(&u2.dot(&u1)).unwrap();
        let prod = g2.compose(&g1);
        let err: f64 = (g21.matrix() - prod.matrix()).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err < 1e-12);
    }

    #[test]
    fn hs_of_nonunitary_rejected() {
        let m = ndarray::array![
            [Complex64::ONE, Complex64::ONE],
            [Complex64::ZERO, Complex64::ONE]
        ];
        assert!(HSMatrix::of_unitary(&m).is_err());
    }

    #[test]
    fn cj_of_identity_channel() {
        let g = HSMatrix::identity(2);
        let cj = g.to_cj();
        // Maximally entangled projector scaled to trace d.
        assert!((cj.trace().re - 2.0).abs() < 1e-12);
        assert!(cj.hermiticity_residual() < 1e-12);
        let min = cj.min_eig().unwrap();
        let dominant = 2.0; // rank-1 with eigenvalue d
        assert!(min > -1e-12);
        let top = {
            let (vals, _) = cj.matrix().eigh(UPLO::Upper).unwrap();
            vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        assert!((top - dominant).abs() < 1e-12);
    }

    #[test]
    fn cj_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let u = random_unitary(2, &mut rng).unwrap();
        let g = HSMatrix::of_unitary(&u).unwrap();
        let cj = g.to_cj();
        let back = cj_to_hs_rep(&cj).unwrap();
        let err: f64 = (g.matrix() - &back).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err < 1e-11);
    }

    #[test]
    fn cj_of_unitary_channel_is_psd() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        for _ in 0..5 {
            let u = random_unitary(2, &mut rng).unwrap();
            let g = HSMatrix::of_unitary(&u).unwrap();
            assert!(g.cp_min_eig().unwrap() >= -1e-10);
        }
    }

    #[test]
    fn hamiltonian_lindbladian_is_physical() {
        let h = pauli_1q(1).mapv(|z| z * FRAC_PI_4); // pi X / 4
        let l = Lindbladian::from_hamiltonian(&h).unwrap();
        let rep = l.physicality().unwrap();
        assert!(rep.tp_residual < 1e-12);
        assert!(rep.cp_min_eig >= -1e-12);
    }

    #[test]
    fn zero_lindbladian_physicality() {
        let l = Lindbladian::zero(2);
        let rep = l.physicality().unwrap();
        assert_eq!(rep.tp_residual, 0.0);
        assert!(rep.cp_min_eig.abs() < 1e-14);
    }

    #[test]
    fn dephasing_dissipator_is_physical() {
        let gamma: f64 = 0.01;
        let jump = pauli_1q(3).mapv(|z| z * gamma.sqrt());
        let l = Lindbladian::from_dissipator(&[jump]).unwrap();
        let rep = l.physicality().unwrap();
        assert!(rep.tp_residual < 1e-12);
        assert!(rep.cp_min_eig >= -1e-12);
        // And the exponential is CPTP.
        l.exp().unwrap().cptp_check(1e-10).unwrap();
    }

    #[test]
    fn exp_of_hamiltonian_lindbladian_matches_unitary_channel() {
        let h = pauli_1q(1).mapv(|z| z * FRAC_PI_4);
        let l = Lindbladian::from_hamiltonian(&h).unwrap();
        let g = l.exp().unwrap();
        let direct = HSMatrix::of_unitary(&x90_unitary()).unwrap();
        let err: f64 = (g.matrix() - direct.matrix()).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err < 1e-10);
    }

    #[test]
    fn x90_lindbladian_norm() {
        let h = pauli_1q(1).mapv(|z| z * FRAC_PI_4);
        let l = Lindbladian::from_hamiltonian(&h).unwrap();
        assert!((l.fro_norm() - PI / SQRT_2).abs() < 1e-12);
        // Spectrum: {0 (x2), +i pi/2, -i pi/2}
        let sd = crate::linalg::spectral_decompose_default(&l.to_complex()).unwrap();
        assert_eq!(sd.len(), 3);
        let mut ims: Vec<f64> = sd.eigenvalues().iter().map(|z| z.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + FRAC_PI_2).abs() < 1e-12);
        assert!(ims[1].abs() < 1e-12);
        assert!((ims[2] - FRAC_PI_2).abs() < 1e-12);
        let zero_idx = sd.eigenvalues().iter().position(|z| z.norm() < 1e-9).unwrap();
        let tr = sd.projectors()[zero_idx].diag().sum();
        assert!((tr.re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let m = ndarray::array![
            [Complex64::ZERO, Complex64::ONE],
            [Complex64::ZERO, Complex64::ZERO]
        ];
        assert!(matches!(Lindbladian::from_hamiltonian(&m), Err(RltError::NotHermitian(_))));
    }

    #[test]
    fn q_is_a_projector() {
        for d in [2usize, 4] {
            let q = q_projector(d);
            assert!(fro_norm(&(q.dot(&q) - &q)) < 1e-12);
        }
    }
}
