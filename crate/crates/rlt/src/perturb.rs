//! Spectral perturbation maps for matrix exponentials.
//!
//! For a diagonalizable generator `A = sum_j a_j P_j` and a small perturbation
//! `B`, six linear maps describe (to first order in `B`) how `B` moves through
//! exponentials, compositions, and powers:
//!
//! * `dcl`/`dcr` pull the perturbation out of the exponent to the left/right:
//!   `e^{A+B} = e^{dcl_A(B)} e^A + O(||B||^2)` and
//!   `e^{A+B} = e^A e^{dcr_A(B)} + O(||B||^2)`.
//! * `cml`/`cmr` fold a small factor back into the exponent:
//!   `e^B e^A = e^{A + cml_A(B)} + O(||B||^2)` and
//!   `e^A e^B = e^{A + cmr_A(B)} + O(||B||^2)`. These are the inverses of
//!   `dcl`/`dcr` and exist only when `e^{a_j - a_k} != 1` for all `j != k`.
//! * `ssp`/`sspc` split a perturbation into the spectrally diagonal part
//!   (amplified linearly under gate repetition) and the off-diagonal rest:
//!   `[e^{A+B}]^n = e^{rA + r*sspc_A(B) + n*ssp_A(B)} + O(||B||^2)` when `e^A`
//!   has period `k` and `n = k*q + r`.
//!
//! All maps are carried as explicit `m^2 x m^2` matrix representations
//! ([`SuperMap`]) so that composing maps is matrix multiplication.

use ndarray::prelude::*;
use num_complex::Complex64;

use crate::error::{Result, RltError, SingularityReport};
use crate::linalg::{
    commutator, expm, expm_pade, eye, fro_norm, kron, logm_principal, matrix_power,
    spectral_decompose_default, CMatrix, SpectralDecomposition,
};

/// Threshold on `|e^{a_j - a_k} - 1|` below which the composition maps are
/// treated as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-6;

/// Tolerance for `||(e^A)^k - I||` when validating a claimed period.
pub const PERIOD_CHECK_TOL: f64 = 1e-8;

/// The coefficients `l_jk = 1` for `j = k` and `(e^{a_j - a_k} - 1)/(a_j - a_k)`
/// otherwise, over the clustered eigenvalues of a spectral decomposition.
#[derive(Debug, Clone)]
pub struct EllTable {
    values: Array2<Complex64>,
}

impl EllTable {
    pub fn new(sd: &SpectralDecomposition) -> EllTable {
        let vals = sd.eigenvalues();
        let n = vals.len();
        let mut values = Array2::from_elem((n, n), Complex64::ONE);
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    let diff = vals[j] - vals[k];
                    values[(j, k)] = (diff.exp() - 1.0) / diff;
                }
            }
        }
        EllTable { values }
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.values[(j, k)]
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Check the non-singularity condition `e^{a_j - a_k} != 1` for all `j != k`.
pub fn singularity_report(sd: &SpectralDecomposition) -> SingularityReport {
    singularity_report_with(sd, SINGULARITY_THRESHOLD)
}

pub fn singularity_report_with(sd: &SpectralDecomposition, threshold: f64) -> SingularityReport {
    let vals = sd.eigenvalues();
    let mut offending = Vec::new();
    for j in 0..vals.len() {
        for k in 0..vals.len() {
            if j != k {
                let v = (vals[j] - vals[k]).exp() - 1.0;
                if v.norm() < threshold {
                    offending.push((j, k, v));
                }
            }
        }
    }
    SingularityReport { offending, threshold }
}

/// Row-major vectorization of an `m x m` matrix.
pub(crate) fn vec_rm(x: &CMatrix) -> Array1<Complex64> {
    Array1::from_iter(x.iter().cloned())
}

pub(crate) fn devec_rm(v: ArrayView1<Complex64>, m: usize) -> CMatrix {
    Array2::from_shape_vec((m, m), v.to_vec()).expect("length m^2")
}

/// Matrix representation of `X -> P X Q` in the row-major vectorization.
fn sandwich_rep(p: &CMatrix, q: &CMatrix) -> Array2<Complex64> {
    kron(p, &q.t().to_owned())
}

/// A linear map on `m x m` matrices stored as its `m^2 x m^2` matrix
/// representation; composition of maps is multiplication of representations.
#[derive(Debug, Clone)]
pub struct SuperMap {
    m: usize,
    mat: Array2<Complex64>,
}

impl SuperMap {
    pub fn identity(m: usize) -> SuperMap {
        SuperMap { m, mat: eye(m * m) }
    }

    pub fn zero(m: usize) -> SuperMap {
        SuperMap { m, mat: Array2::zeros((m * m, m * m)) }
    }

    pub fn from_rep(mat: Array2<Complex64>) -> Result<SuperMap> {
        let (r, c) = mat.dim();
        if r != c {
            return Err(RltError::NotSquare { rows: r, cols: c });
        }
        let m = (r as f64).sqrt().round() as usize;
        if m * m != r {
            return Err(RltError::Invalid(format!("representation size {r} is not a perfect square")));
        }
        Ok(SuperMap { m, mat })
    }

    /// Dimension `m` of the matrices the map acts on.
    pub fn space_dim(&self) -> usize {
        self.m
    }

    pub fn rep(&self) -> &Array2<Complex64> {
        &self.mat
    }

    /// Largest absolute imaginary entry of the representation. Real for maps
    /// built from the spectral data of a real generator.
    pub fn max_imag(&self) -> f64 {
        self.mat.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Real part of the representation.
    pub fn real_rep(&self) -> Array2<f64> {
        self.mat.mapv(|z| z.re)
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.dim() != (self.m, self.m) {
            return Err(RltError::DimMismatch(format!(
                "map acts on {0}x{0}, input is {1:?}",
                self.m,
                x.dim()
            )));
        }
        Ok(devec_rm(self.mat.dot(&vec_rm(x)).view(), self.m))
    }

    /// Apply to a real matrix, discarding the (roundoff-level) imaginary part.
    pub fn apply_real(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let out = self.apply(&x.mapv(|v| Complex64::new(v, 0.0)))?;
        Ok(out.mapv(|z| z.re))
    }

    /// `self o inner` (apply `inner` first).
    pub fn compose(&self, inner: &SuperMap) -> SuperMap {
        SuperMap { m: self.m, mat: self.mat.dot(&inner.mat) }
    }

    pub fn add(&self, other: &SuperMap) -> SuperMap {
        SuperMap { m: self.m, mat: &self.mat + &other.mat }
    }

    pub fn scale(&self, factor: f64) -> SuperMap {
        SuperMap { m: self.m, mat: self.mat.mapv(|z| z * factor) }
    }
}

/// The four decomposition/composition maps of a generator. `cml`/`cmr` are
/// present only when the spectrum passes the non-singularity check.
#[derive(Debug, Clone)]
pub struct DecompositionMaps {
    pub dcl: SuperMap,
    pub dcr: SuperMap,
    pub cml: Option<SuperMap>,
    pub cmr: Option<SuperMap>,
    pub singularity: SingularityReport,
}

/// Build matrix representations of `dcl`, `dcr` and, when nonsingular,
/// `cml`, `cmr` from a spectral decomposition.
pub fn build_maps(sd: &SpectralDecomposition) -> DecompositionMaps {
    let m = sd.dim();
    let ell = EllTable::new(sd);
    let report = singularity_report(sd);
    let n = sd.len();

    let mut dcl = Array2::<Complex64>::zeros((m * m, m * m));
    let mut dcr = dcl.clone();
    let mut cml = dcl.clone();
    let mut cmr = dcl.clone();
    for j in 0..n {
        for k in 0..n {
            let block = sandwich_rep(&sd.projectors()[j], &sd.projectors()[k]);
            let ljk = ell.get(j, k);
            let lkj = ell.get(k, j);
            dcl.zip_mut_with(&block, |o, &b| *o += ljk * b);
            dcr.zip_mut_with(&block, |o, &b| *o += lkj * b);
            if !report.is_singular() {
                cml.zip_mut_with(&block, |o, &b| *o += b / ljk);
                cmr.zip_mut_with(&block, |o, &b| *o += b / lkj);
            }
        }
    }
    let (cml, cmr) = if report.is_singular() {
        (None, None)
    } else {
        (Some(SuperMap { m, mat: cml }), Some(SuperMap { m, mat: cmr }))
    };
    DecompositionMaps { dcl: SuperMap { m, mat: dcl }, dcr: SuperMap { m, mat: dcr }, cml, cmr, singularity: report }
}

pub fn dcl_map(sd: &SpectralDecomposition) -> SuperMap {
    build_maps(sd).dcl
}

pub fn dcr_map(sd: &SpectralDecomposition) -> SuperMap {
    build_maps(sd).dcr
}

pub fn cml_map(sd: &SpectralDecomposition) -> Result<SuperMap> {
    let maps = build_maps(sd);
    maps.cml.ok_or(RltError::SpectralSingularity { report: maps.singularity })
}

pub fn cmr_map(sd: &SpectralDecomposition) -> Result<SuperMap> {
    let maps = build_maps(sd);
    maps.cmr.ok_or(RltError::SpectralSingularity { report: maps.singularity })
}

fn sum_over_pairs(
    sd: &SpectralDecomposition,
    b: &CMatrix,
    coeff: impl Fn(usize, usize) -> Complex64,
) -> CMatrix {
    let m = sd.dim();
    let mut out = CMatrix::zeros((m, m));
    for (j, pj) in sd.projectors().iter().enumerate() {
        let pjb = pj.dot(b);
        for (k, pk) in sd.projectors().iter().enumerate() {
            let term = pjb.dot(pk);
            let c = coeff(j, k);
            out.zip_mut_with(&term, |o, &t| *o += c * t);
        }
    }
    out
}

/// `dcl_A(B) = sum_jk l_jk P_j B P_k` evaluated directly.
pub fn dcl_apply(sd: &SpectralDecomposition, b: &CMatrix) -> CMatrix {
    let ell = EllTable::new(sd);
    sum_over_pairs(sd, b, |j, k| ell.get(j, k))
}

pub fn dcr_apply(sd: &SpectralDecomposition, b: &CMatrix) -> CMatrix {
    let ell = EllTable::new(sd);
    sum_over_pairs(sd, b, |j, k| ell.get(k, j))
}

pub fn cml_apply(sd: &SpectralDecomposition, b: &CMatrix) -> Result<CMatrix> {
    let report = singularity_report(sd);
    if report.is_singular() {
        return Err(RltError::SpectralSingularity { report });
    }
    let ell = EllTable::new(sd);
    Ok(sum_over_pairs(sd, b, |j, k| 1.0 / ell.get(j, k)))
}

pub fn cmr_apply(sd: &SpectralDecomposition, b: &CMatrix) -> Result<CMatrix> {
    let report = singularity_report(sd);
    if report.is_singular() {
        return Err(RltError::SpectralSingularity { report });
    }
    let ell = EllTable::new(sd);
    Ok(sum_over_pairs(sd, b, |j, k| 1.0 / ell.get(k, j)))
}

/// Independent quadrature evaluation of `int_0^1 e^{sA} B e^{-sA} ds` by
/// Gauss-Legendre integration. Agrees with the closed-form `dcl_A(B)` for
/// diagonalizable `A` but requires only the exponential, not the spectral
/// decomposition (the integrand is evaluated with the Pade exponential).
pub fn oracle_dcl_quadrature(a: &CMatrix, b: &CMatrix, nodes: usize) -> Result<CMatrix> {
    if a.dim() != b.dim() {
        return Err(RltError::DimMismatch("quadrature: A and B must have equal dimensions".into()));
    }
    let m = a.nrows();
    let (xs, ws) = gauss_legendre_unit(nodes);
    let mut out = CMatrix::zeros((m, m));
    for (s, w) in xs.iter().zip(ws.iter()) {
        let es = expm_pade(&a.mapv(|z| z * *s))?;
        let es_neg = expm_pade(&a.mapv(|z| -z * *s))?;
        let term = es.dot(b).dot(&es_neg);
        out.zip_mut_with(&term, |o, &t| *o += Complex64::new(*w, 0.0) * t);
    }
    Ok(out)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n from the Chebyshev initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = x;
        ws[i] = w;
        xs[n - 1 - i] = -x;
        ws[n - 1 - i] = w;
    }
    // Map from [-1, 1] to [0, 1].
    let nodes = xs.iter().map(|x| 0.5 * (1.0 - x)).collect();
    let weights = ws.iter().map(|w| 0.5 * w).collect();
    (nodes, weights)
}

/// First-order transforms of the two generator errors under composition of two
/// exponentials: `e^{A+B} e^{A'+B'} = e^{C + map_b(B) + map_bprime(B')} + O(2nd)`
/// with `C = ln(e^A e^{A'})`.
#[derive(Debug, Clone)]
pub struct TwoGateComposition {
    pub c: CMatrix,
    pub map_b: SuperMap,
    pub map_bprime: SuperMap,
}

pub fn compose_two(a: &CMatrix, a_prime: &CMatrix) -> Result<TwoGateComposition> {
    let ea = expm(a)?;
    let eap = expm(a_prime)?;
    let c = logm_principal(&ea.dot(&eap))?;
    let sd_c = spectral_decompose_default(&c)?;
    let report = singularity_report(&sd_c);
    if report.is_singular() {
        return Err(RltError::SpectralSingularity { report });
    }
    let sd_a = spectral_decompose_default(a)?;
    let sd_ap = spectral_decompose_default(a_prime)?;
    let maps_c = build_maps(&sd_c);
    let cml_c = maps_c.cml.expect("checked nonsingular");
    let cmr_c = maps_c.cmr.expect("checked nonsingular");
    let map_b = cml_c.compose(&dcl_map(&sd_a));
    let map_bprime = cmr_c.compose(&dcr_map(&sd_ap));
    Ok(TwoGateComposition { c, map_b, map_bprime })
}

/// Spectrally diagonal / off-diagonal projections of the perturbation space.
#[derive(Debug, Clone)]
pub struct RepetitionSplit {
    pub ssp: SuperMap,
    pub sspc: SuperMap,
}

/// `ssp_A(B) = sum_j P_j B P_j` and `sspc_A(B) = sum_{j != k} P_j B P_k`;
/// complementary projections with `ssp + sspc = id`.
pub fn repetition_split(sd: &SpectralDecomposition) -> RepetitionSplit {
    let m = sd.dim();
    let mut ssp = Array2::<Complex64>::zeros((m * m, m * m));
    let mut sspc = ssp.clone();
    for (j, pj) in sd.projectors().iter().enumerate() {
        for (k, pk) in sd.projectors().iter().enumerate() {
            let block = sandwich_rep(pj, pk);
            if j == k {
                ssp += &block;
            } else {
                sspc += &block;
            }
        }
    }
    RepetitionSplit { ssp: SuperMap { m, mat: ssp }, sspc: SuperMap { m, mat: sspc } }
}

pub fn ssp_apply(sd: &SpectralDecomposition, b: &CMatrix) -> CMatrix {
    sum_over_pairs(sd, b, |j, k| if j == k { Complex64::ONE } else { Complex64::ZERO })
}

pub fn sspc_apply(sd: &SpectralDecomposition, b: &CMatrix) -> CMatrix {
    sum_over_pairs(sd, b, |j, k| if j != k { Complex64::ONE } else { Complex64::ZERO })
}

/// Predicted generator of `[e^{A+B}]^n` for a periodic ideal part:
/// `rA + r*sspc_A(B) + n*ssp_A(B)` with `n = k*q + r`. Validates that `k`
/// really is a period of `e^A`.
pub fn predict_power(a: &CMatrix, b: &CMatrix, n: usize, k: usize) -> Result<CMatrix> {
    if k == 0 {
        return Err(RltError::Invalid("period k must be positive".into()));
    }
    let sd = spectral_decompose_default(a)?;
    let g = sd.exp();
    let gk = matrix_power(&g, k as u64);
    let distance = fro_norm(&(gk - eye(a.nrows())));
    if distance > PERIOD_CHECK_TOL {
        return Err(RltError::NotAPeriod { n: k, distance });
    }
    let r = (n % k) as f64;
    let nf = n as f64;
    let mut out = a.mapv(|z| z * r);
    let sspc_b = sspc_apply(&sd, b);
    let ssp_b = ssp_apply(&sd, b);
    out.zip_mut_with(&sspc_b, |o, &t| *o += r * t);
    out.zip_mut_with(&ssp_b, |o, &t| *o += nf * t);
    Ok(out)
}

/// Truncated BCH series for `ln(e^A e^B)`:
/// `A + B + [A,B]/2 + ([A,[A,B]] + [B,[B,A]])/12 + ...`.
pub fn bch_truncated(a: &CMatrix, b: &CMatrix, order: usize) -> Result<CMatrix> {
    if a.dim() != b.dim() {
        return Err(RltError::DimMismatch("BCH: A and B must have equal dimensions".into()));
    }
    if !(1..=3).contains(&order) {
        return Err(RltError::Invalid(format!("BCH truncation order {order} not supported (1..=3)")));
    }
    let mut out = a + b;
    if order >= 2 {
        let ab = commutator(a, b);
        out.zip_mut_with(&ab, |o, &t| *o += 0.5 * t);
        if order >= 3 {
            let aab = commutator(a, &ab);
            let bba = commutator(b, &commutator(b, a));
            out.zip_mut_with(&aab, |o, &t| *o += t / 12.0);
            out.zip_mut_with(&bba, |o, &t| *o += t / 12.0);
        }
    }
    Ok(out)
}

/// Sufficient condition for convergence of the BCH series:
/// `||A|| + ||B|| <= ln 2`. Typical quantum-gate generators violate it.
pub fn bch_sufficient_condition(a: &CMatrix, b: &CMatrix) -> bool {
    fro_norm(a) + fro_norm(b) <= std::f64::consts::LN_2
}
