//! Dense complex matrix primitives: exponential, principal logarithm, spectral
//! decomposition into eigenprojectors, and diagonalizability diagnostics.
//!
//! Everything here works on [`CMatrix`], a dense `Complex64` matrix. The
//! spectral decomposition clusters numerically degenerate eigenvalues so that
//! generators with exact degeneracies (e.g. the zero eigenvalue of a
//! commutator generator) come back with one projector per distinct eigenvalue.

use ndarray::prelude::*;
use ndarray_linalg::{Eig, Inverse, OperationNorm, SVD};
use num_complex::Complex64;

use crate::error::{Result, RltError};

/// Dense complex square (where required) matrix.
pub type CMatrix = Array2<Complex64>;

/// Condition-number limit on the eigenvector matrix above which a matrix is
/// rejected as not diagonalizable.
pub const DIAG_COND_LIMIT: f64 = 1e8;

/// Relative reconstruction-residual limit for accepting a spectral decomposition.
pub const DIAG_RESIDUAL_FACTOR: f64 = 1e-6;

/// Default eigenvalue clustering tolerance: `1e-9 * ||A||_F`, floored so the
/// zero matrix still clusters.
pub fn default_cluster_tol(a: &CMatrix) -> f64 {
    (1e-9 * fro_norm(a)).max(1e-12)
}

pub fn eye(m: usize) -> CMatrix {
    Array2::eye(m)
}

/// Frobenius norm.
pub fn fro_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = CMatrix::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != Complex64::ZERO {
                let mut block = out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]);
                block.zip_mut_with(b, |o, &bv| *o = aij * bv);
            }
        }
    }
    out
}

fn check_square(a: &CMatrix) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(RltError::NotSquare { rows: r, cols: c });
    }
    Ok(r)
}

/// Largest absolute imaginary part of the entries.
pub fn max_abs_imag(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
}

pub fn to_complex(a: &Array2<f64>) -> CMatrix {
    a.mapv(|x| Complex64::new(x, 0.0))
}

/// Real part of a matrix whose imaginary part is expected to be negligible.
pub fn to_real_checked(a: &CMatrix, tol: f64) -> Result<Array2<f64>> {
    let imag = max_abs_imag(a);
    if imag > tol {
        return Err(RltError::Invalid(format!(
            "matrix expected to be real, max |imag| = {imag:.3e} exceeds {tol:.1e}"
        )));
    }
    Ok(a.mapv(|z| z.re))
}

/// `a^n` by exponentiation by squaring.
pub fn matrix_power<T: ndarray::LinalgScalar>(a: &Array2<T>, n: u64) -> Array2<T> {
    let m = a.nrows();
    let mut result = Array2::<T>::eye(m);
    let mut base = a.clone();
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            result = result.dot(&base);
        }
        k >>= 1;
        if k > 0 {
            base = base.dot(&base);
        }
    }
    result
}

/// Spectral decomposition `A = sum_i a_i P_i` with pairwise distinct clustered
/// eigenvalues and (generally oblique) eigenprojectors satisfying
/// `P_i P_j = delta_ij P_i` and `sum_j P_j = I`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<Complex64>,
    projectors: Vec<CMatrix>,
    dim: usize,
}

impl SpectralDecomposition {
    /// Distinct (clustered) eigenvalues, sorted by `(re, im)`.
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Eigenprojectors matched to [`Self::eigenvalues`]. Degenerate clusters
    /// yield projectors of rank > 1.
    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    /// Source matrix dimension `m`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of distinct eigenvalues.
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `sum_i f(a_i) P_i`.
    pub fn apply_fn(&self, f: impl Fn(Complex64) -> Complex64) -> CMatrix {
        let mut out = CMatrix::zeros((self.dim, self.dim));
        for (a, p) in self.eigenvalues.iter().zip(&self.projectors) {
            let fa = f(*a);
            out.zip_mut_with(p, |o, &pv| *o += fa * pv);
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_fn(|a| a)
    }

    pub fn exp(&self) -> CMatrix {
        self.apply_fn(|a| a.exp())
    }
}

fn cluster_eigenvalues(vals: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = vals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (vals[i] - vals[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_to_group: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let g = *root_to_group.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Spectral decomposition with eigenvalue clustering. Eigenvalues closer than
/// `cluster_tol` are merged into one projector (the sum of the corresponding
/// rank-1 spectral projectors). Rejects defective or near-defective input.
pub fn spectral_decompose(a: &CMatrix, cluster_tol: f64) -> Result<SpectralDecomposition> {
    let m = check_square(a)?;
    let (vals, vecs) = a.eig()?;

    let (_, sigma, _) = vecs.svd(false, false)?;
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let smin = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !cond.is_finite() || cond > DIAG_COND_LIMIT {
        return Err(RltError::NotDiagonalizable { cond, residual: f64::INFINITY });
    }
    let v_inv = vecs.inv()?;

    let groups = cluster_eigenvalues(vals.as_slice().unwrap(), cluster_tol);
    let mut pairs: Vec<(Complex64, CMatrix)> = Vec::with_capacity(groups.len());
    for group in &groups {
        let rep = group.iter().map(|&i| vals[i]).sum::<Complex64>() / group.len() as f64;
        // P_g = V[:, g] * V^{-1}[g, :]
        let vg = vecs.select(Axis(1), group);
        let wg = v_inv.select(Axis(0), group);
        pairs.push((rep, vg.dot(&wg)));
    }
    pairs.sort_by(|x, y| {
        (x.0.re, x.0.im)
            .partial_cmp(&(y.0.re, y.0.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let (eigenvalues, projectors): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let sd = SpectralDecomposition { eigenvalues, projectors, dim: m };

    let norm_a = fro_norm(a).max(1.0);
    let residual = fro_norm(&(sd.reconstruct() - a));
    if residual > DIAG_RESIDUAL_FACTOR * norm_a {
        return Err(RltError::NotDiagonalizable { cond, residual });
    }
    Ok(sd)
}

/// [`spectral_decompose`] with the default clustering tolerance.
pub fn spectral_decompose_default(a: &CMatrix) -> Result<SpectralDecomposition> {
    spectral_decompose(a, default_cluster_tol(a))
}

/// Matrix exponential. Uses the spectral decomposition when the input is
/// comfortably diagonalizable and falls back to scaling-and-squaring otherwise.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    check_square(a)?;
    match spectral_decompose_default(a) {
        Ok(sd) => Ok(sd.exp()),
        Err(RltError::NotDiagonalizable { .. }) => expm_pade(a),
        Err(e) => Err(e),
    }
}

// Pade-13 numerator coefficients for the scaling-and-squaring exponential.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const PADE13_THETA: f64 = 5.371920351148152;

/// Matrix exponential by scaling-and-squaring with a degree-13 Pade
/// approximant. Does not require diagonalizability.
pub fn expm_pade(a: &CMatrix) -> Result<CMatrix> {
    let m = check_square(a)?;
    let norm1 = a.opnorm_one()?;
    let s = if norm1 > PADE13_THETA {
        (norm1 / PADE13_THETA).log2().ceil() as u32
    } else {
        0
    };
    let scale = Complex64::new(1.0 / f64::powi(2.0, s as i32), 0.0);
    let a1 = a.mapv(|z| z * scale);

    let id = eye(m);
    let a2 = a1.dot(&a1);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    let b = PADE13;
    let u_inner = a6.mapv(|z| z * b[13]) + a4.mapv(|z| z * b[11]) + a2.mapv(|z| z * b[9]);
    let u_poly =
        a6.dot(&u_inner) + a6.mapv(|z| z * b[7]) + a4.mapv(|z| z * b[5]) + a2.mapv(|z| z * b[3]) + id.mapv(|z| z * b[1]);
    let u = a1.dot(&u_poly);
    let v_inner = a6.mapv(|z| z * b[12]) + a4.mapv(|z| z * b[10]) + a2.mapv(|z| z * b[8]);
    let v = a6.dot(&v_inner) + a6.mapv(|z| z * b[6]) + a4.mapv(|z| z * b[4]) + a2.mapv(|z| z * b[2]) + id.mapv(|z| z * b[0]);

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom.inv()?.dot(&numer);
    for _ in 0..s {
        result = result.dot(&result);
    }
    Ok(result)
}

/// Principal matrix logarithm: eigenvalue imaginary parts of the result lie in
/// `(-pi, pi]`. Errors on singular input and on eigenvalues sitting on the
/// closed negative real axis (the branch cut).
pub fn logm_principal(g: &CMatrix) -> Result<CMatrix> {
    check_square(g)?;
    let sd = spectral_decompose_default(g)?;
    let scale = fro_norm(g).max(1.0);
    for &l in sd.eigenvalues() {
        if l.norm() <= 1e-14 * scale {
            return Err(RltError::SingularMatrix { min_abs_eig: l.norm() });
        }
        if l.re < 0.0 && l.im.abs() <= 1e-12 * l.norm() {
            return Err(RltError::BranchCut { value: l });
        }
    }
    Ok(sd.apply_fn(|l| l.ln()))
}
