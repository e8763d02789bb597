//! Data processing for repeated-circuit tomography: linear-inversion process
//! estimates, generator extraction by matrix logarithm, assembly of the linear
//! model from amplification maps, and physicality-constrained fitting.
//!
//! The fit estimates per-gate generator errors `dL_j` from observations
//! `Y_a = ln G_hat_a - r_a L_a^unit,ideal`, modelled as
//! `Y_a = sum_j (r_a f_not_amp_aj + n_a f_amp_aj)(dL_j)`. The constrained fit
//! imposes trace annihilation and conditional complete positivity on the full
//! generators `L_j^ideal + dL_j` and is a semidefinite program.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use ndarray::prelude::*;
use ndarray_linalg::SVD;
use num_complex::Complex64;

use crate::eac::{AmplificationMaps, GateSet};
use crate::error::{Result, RltError};
use crate::linalg::{logm_principal, spectral_decompose_default, to_complex, to_real_checked};
use crate::reps::{hs_rep_to_cj, q_projector, Lindbladian, PhysicalityReport};
use crate::sim::{ProbabilityTable, SPAMModel};

/// Linear-inversion process-tomography estimate with conditioning and
/// physicality diagnostics. The estimate is intentionally *not* projected to
/// the CPTP set; projection can move eigenvalues across the logarithm branch
/// cut, so diagnostics are reported instead.
#[derive(Debug, Clone)]
pub struct QPTEstimate {
    pub g_hat: Array2<f64>,
    pub d: usize,
    /// Residual `||S vec(G) - f||` of the least-squares inversion.
    pub lsq_residual: f64,
    /// Rank of the sensing matrix.
    pub rank: usize,
    pub tp_residual: f64,
    pub cp_min_eig: f64,
}

/// Least-squares inversion of observed frequencies against the *ideal* SPAM
/// sensing matrix. Model mismatch in the actual SPAM becomes an `O(s)` bias
/// here; amplification is what makes the protocol robust to it.
pub fn qpt_linear_inversion(freqs: &ProbabilityTable, spam_ideal: &SPAMModel) -> Result<QPTEstimate> {
    let d = spam_ideal.dim();
    let n = d * d;
    let sensing = spam_ideal.sensing_matrix();
    let f = freqs.flat();
    if sensing.nrows() != f.len() {
        return Err(RltError::DimMismatch(format!(
            "sensing matrix has {} rows, frequency vector has {}",
            sensing.nrows(),
            f.len()
        )));
    }
    let (u_opt, sv, vt_opt) = sensing.svd(true, true)?;
    let u = u_opt.expect("requested");
    let vt = vt_opt.expect("requested");
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = sv.iter().filter(|&&s| s > 1e-12 * smax.max(1.0)).count();
    if rank < n * n {
        return Err(RltError::Invalid(format!(
            "sensing matrix is rank-deficient: rank {rank} < {}",
            n * n
        )));
    }
    // Pseudo-inverse solve.
    let utf = u.t().dot(&f);
    let mut y = Array1::<f64>::zeros(vt.nrows());
    for k in 0..rank {
        y[k] = utf[k] / sv[k];
    }
    let x = vt.t().dot(&y);
    let lsq_residual = {
        let r = sensing.dot(&x) - &f;
        r.iter().map(|v| v * v).sum::<f64>().sqrt()
    };
    let g_hat = Array2::from_shape_vec((n, n), x.to_vec()).expect("length n^2");
    let tp_residual = {
        let sqrt_d = (d as f64).sqrt();
        let mut s = 0.0;
        for b in 0..n {
            let expect = if b == 0 { 1.0 } else { 0.0 };
            s += (g_hat[(0, b)] - expect).powi(2);
        }
        sqrt_d * s.sqrt()
    };
    let cp_min_eig = hs_rep_to_cj(g_hat.view(), d).min_eig()?;
    Ok(QPTEstimate { g_hat, d, lsq_residual, rank, tp_residual, cp_min_eig })
}

/// Generator observation extracted from a process estimate.
#[derive(Debug, Clone)]
pub struct ExtractedLog {
    /// `Y = ln G_hat - r * L_unit_ideal`.
    pub y: Array2<f64>,
    /// Distance of the logarithm spectrum to the branch boundary:
    /// `pi - max_j |Im ln g_j|`. Small margins mean the principal branch is
    /// about to wrap and the extraction is unreliable.
    pub branch_margin: f64,
}

/// Take the principal logarithm of the estimate and subtract the ideal part.
pub fn extract_lindbladian(
    g_hat: &Array2<f64>,
    r: usize,
    l_unit_ideal: &Lindbladian,
) -> Result<ExtractedLog> {
    let gc = to_complex(g_hat);
    let log = logm_principal(&gc)?;
    let sd = spectral_decompose_default(&log)?;
    let max_im = sd.eigenvalues().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let branch_margin = std::f64::consts::PI - max_im;
    let log_real = to_real_checked(&log, 1e-9 * (1.0 + crate::linalg::fro_norm(&log)))?;
    let y = log_real - l_unit_ideal.matrix().mapv(|v| v * r as f64);
    Ok(ExtractedLog { y, branch_margin })
}

/// One repeated circuit's contribution to the fit: its amplification maps, the
/// repetition count, and the extracted observation `Y`.
#[derive(Debug)]
pub struct DesignEntry<'a> {
    pub name: String,
    pub maps: &'a AmplificationMaps,
    pub n: usize,
    pub y: Array2<f64>,
}

/// Per-circuit weighting of the fit objective.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightScheme {
    Uniform,
    /// `w_a = 1 / n_a^2`, so large-`n` circuits are not over-weighted purely
    /// by amplification scale.
    InverseNSquared,
    Custom(Vec<f64>),
}

/// A gate whose error is being estimated.
#[derive(Debug, Clone)]
pub struct GateTarget {
    pub label: usize,
    pub name: String,
    pub l_ideal: Lindbladian,
}

#[derive(Debug, Clone)]
pub struct BlockInfo {
    pub name: String,
    pub n: usize,
    pub r: usize,
    pub weight: f64,
}

/// Stacked linear model mapping vectorized `{dL_j}` to vectorized
/// observations, plus the physicality-constraint data.
#[derive(Debug)]
pub struct FitProblem {
    pub d: usize,
    /// Unweighted design, `(num_blocks * d^4) x (num_targets * d^4)`.
    pub design: Array2<f64>,
    pub observations: Array1<f64>,
    pub blocks: Vec<BlockInfo>,
    pub targets: Vec<GateTarget>,
}

/// Stack the per-circuit blocks `M_a = [r_a f_not_amp_aj + n_a f_amp_aj]_j`
/// over circuits, restricted to the estimated gate labels.
pub fn assemble_design(
    entries: &[DesignEntry],
    estimated: &[usize],
    gs: &GateSet,
    scheme: &WeightScheme,
) -> Result<FitProblem> {
    if entries.is_empty() {
        return Err(RltError::Invalid("no circuits to fit".into()));
    }
    if estimated.is_empty() {
        return Err(RltError::Invalid("no gates selected for estimation".into()));
    }
    let d = gs.dim();
    let k = d * d * d * d;
    let num_targets = estimated.len();
    let mut design = Array2::<f64>::zeros((entries.len() * k, num_targets * k));
    let mut observations = Array1::<f64>::zeros(entries.len() * k);
    let mut blocks = Vec::with_capacity(entries.len());
    for (a, entry) in entries.iter().enumerate() {
        if entry.maps.dim() != d {
            return Err(RltError::DimMismatch("amplification maps dimension mismatch".into()));
        }
        let period = entry.maps.period();
        let r = entry.n % period;
        let weight = match scheme {
            WeightScheme::Uniform => 1.0,
            WeightScheme::InverseNSquared => 1.0 / (entry.n as f64).powi(2),
            WeightScheme::Custom(w) => *w.get(a).ok_or_else(|| {
                RltError::Invalid("custom weight vector shorter than the circuit list".into())
            })?,
        };
        for (t, &label) in estimated.iter().enumerate() {
            let m_block = entry.maps.f_not_amp()[label]
                .scale(r as f64)
                .add(&entry.maps.f_amp()[label].scale(entry.n as f64));
            let real = m_block.real_rep();
            design
                .slice_mut(s![a * k..(a + 1) * k, t * k..(t + 1) * k])
                .assign(&real);
        }
        if entry.y.dim() != (d * d, d * d) {
            return Err(RltError::DimMismatch("observation Y has wrong dimensions".into()));
        }
        for (idx, v) in entry.y.iter().enumerate() {
            observations[a * k + idx] = *v;
        }
        blocks.push(BlockInfo { name: entry.name.clone(), n: entry.n, r, weight });
    }
    let targets = estimated
        .iter()
        .map(|&label| GateTarget {
            label,
            name: gs.gate(label).name.clone(),
            l_ideal: gs.gate(label).lindbladian.clone(),
        })
        .collect();
    Ok(FitProblem { d, design, observations, blocks, targets })
}

/// Identifiability analysis of the (weighted) design.
#[derive(Debug, Clone)]
pub struct IdentifiabilityReport {
    pub rank: usize,
    pub kernel_dim: usize,
    /// Rows span the unidentifiable subspace of the stacked variable vector.
    pub kernel_basis: Array2<f64>,
    pub singular_values: Array1<f64>,
}

/// Result of a fit: recovered per-gate errors and diagnostics.
#[derive(Debug)]
pub struct FitResult {
    /// Per estimated gate, in the order of `FitProblem::targets`.
    pub deltas: Vec<Array2<f64>>,
    /// Weighted objective `sum_a w_a ||Y_a - M_a x||^2`.
    pub objective: f64,
    /// Unweighted residual norm per circuit block.
    pub block_residuals: Vec<f64>,
    /// Physicality of each fitted `L_ideal + dL`.
    pub physicality: Vec<PhysicalityReport>,
    pub identifiability: IdentifiabilityReport,
    pub status: String,
}

fn weighted_design(fp: &FitProblem) -> (Array2<f64>, Array1<f64>) {
    let k = fp.d * fp.d * fp.d * fp.d;
    let mut dw = fp.design.clone();
    let mut yw = fp.observations.clone();
    for (a, block) in fp.blocks.iter().enumerate() {
        let sw = block.weight.sqrt();
        dw.slice_mut(s![a * k..(a + 1) * k, ..]).mapv_inplace(|v| v * sw);
        yw.slice_mut(s![a * k..(a + 1) * k]).mapv_inplace(|v| v * sw);
    }
    (dw, yw)
}

fn identifiability(dw: &Array2<f64>) -> Result<IdentifiabilityReport> {
    let (_, sv, vt_opt) = dw.svd(false, true)?;
    let vt = vt_opt.expect("requested");
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-10 * smax.max(1.0);
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let ncols = dw.ncols();
    let kernel_dim = ncols - rank;
    let kernel_basis = vt.slice(s![rank.., ..]).to_owned();
    Ok(IdentifiabilityReport { rank, kernel_dim, kernel_basis, singular_values: sv })
}

/// Projector onto the identifiable subspace (row space of the weighted
/// design) of the stacked variable vector.
pub fn identifiable_projector(fp: &FitProblem) -> Result<Array2<f64>> {
    let (dw, _) = weighted_design(fp);
    let report = identifiability(&dw)?;
    let (_, sv, vt_opt) = dw.svd(false, true)?;
    let vt = vt_opt.expect("requested");
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-10 * smax.max(1.0);
    let mut proj = Array2::<f64>::zeros((dw.ncols(), dw.ncols()));
    for (kidx, &s) in sv.iter().enumerate() {
        if s > tol {
            let v = vt.row(kidx);
            for i in 0..dw.ncols() {
                for j in 0..dw.ncols() {
                    proj[(i, j)] += v[i] * v[j];
                }
            }
        }
    }
    let _ = report;
    Ok(proj)
}

fn split_deltas(fp: &FitProblem, x: &[f64]) -> Vec<Array2<f64>> {
    let n = fp.d * fp.d;
    let k = n * n;
    fp.targets
        .iter()
        .enumerate()
        .map(|(t, _)| {
            Array2::from_shape_vec((n, n), x[t * k..(t + 1) * k].to_vec()).expect("length d^4")
        })
        .collect()
}

fn finish_result(fp: &FitProblem, x: Vec<f64>, status: String) -> Result<FitResult> {
    let k = fp.d * fp.d * fp.d * fp.d;
    let xv = Array1::from_vec(x);
    let fitted = fp.design.dot(&xv);
    let mut objective = 0.0;
    let mut block_residuals = Vec::with_capacity(fp.blocks.len());
    for (a, block) in fp.blocks.iter().enumerate() {
        let mut sq = 0.0;
        for idx in a * k..(a + 1) * k {
            sq += (fp.observations[idx] - fitted[idx]).powi(2);
        }
        block_residuals.push(sq.sqrt());
        objective += block.weight * sq;
    }
    let deltas = split_deltas(fp, xv.as_slice().unwrap());
    let mut physicality = Vec::with_capacity(fp.targets.len());
    for (target, delta) in fp.targets.iter().zip(&deltas) {
        physicality.push(target.l_ideal.add(delta)?.physicality()?);
    }
    let (dw, _) = weighted_design(fp);
    let identifiability = identifiability(&dw)?;
    Ok(FitResult { deltas, objective, block_residuals, physicality, identifiability, status })
}

/// Ordinary weighted least squares; rank deficiency falls back to the
/// minimum-norm solution and is reported, never silently zeroed.
pub fn fit_unconstrained(fp: &FitProblem) -> Result<FitResult> {
    let (dw, yw) = weighted_design(fp);
    let (u_opt, sv, vt_opt) = dw.svd(true, true)?;
    let u = u_opt.expect("requested");
    let vt = vt_opt.expect("requested");
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-10 * smax.max(1.0);
    let utf = u.t().dot(&yw);
    let mut y = Array1::<f64>::zeros(vt.nrows());
    for (kidx, &s) in sv.iter().enumerate() {
        if s > tol {
            y[kidx] = utf[kidx] / s;
        }
    }
    let x = vt.t().dot(&y);
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let status = if rank < dw.ncols() {
        format!("least-squares (rank-deficient: rank {rank} of {})", dw.ncols())
    } else {
        "least-squares".to_string()
    };
    finish_result(fp, x.to_vec(), status)
}

// Hermitian-to-real-symmetric embedding [[Re, -Im], [Im, Re]] followed by the
// scaled upper-triangle vectorization the PSD cone expects.
fn svec_embed(m: &Array2<Complex64>) -> Vec<f64> {
    let n = m.nrows();
    let ne = 2 * n;
    let entry = |row: usize, col: usize| -> f64 {
        let (ri, ci) = (row % n, col % n);
        match (row < n, col < n) {
            (true, true) | (false, false) => m[(ri, ci)].re,
            (true, false) => -m[(ri, ci)].im,
            (false, true) => m[(ri, ci)].im,
        }
    };
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(ne * (ne + 1) / 2);
    for col in 0..ne {
        for row in 0..=col {
            if row == col {
                out.push(entry(row, col));
            } else {
                out.push(sqrt2 * 0.5 * (entry(row, col) + entry(col, row)));
            }
        }
    }
    out
}

fn csc_from_dense(a: &Array2<f64>) -> CscMatrix<f64> {
    let (m, n) = a.dim();
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for j in 0..n {
        for i in 0..m {
            let v = a[(i, j)];
            if v != 0.0 {
                rowval.push(i);
                nzval.push(v);
            }
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

/// Conditional-CP matrix `Q CJ(M) Q` of a real generator matrix.
fn qcjq(mat: ArrayView2<f64>, d: usize, q: &Array2<Complex64>) -> Array2<Complex64> {
    let cj = hs_rep_to_cj(mat, d);
    q.dot(cj.matrix()).dot(q)
}

/// Physicality-constrained fit: minimizes the weighted residual subject to
/// trace annihilation `<<I|(L_ideal + dL) = 0` and conditional complete
/// positivity `Q CJ(L_ideal + dL) Q >= 0` for every estimated gate.
pub fn fit_constrained(fp: &FitProblem) -> Result<FitResult> {
    let d = fp.d;
    let n = d * d;
    let k = n * n;
    let num_targets = fp.targets.len();
    let nvar = num_targets * k;

    let (dw, yw) = weighted_design(fp);
    // Objective 1/2 x'Px + q'x with P = 2 D'D, q = -2 D'y.
    let p_dense = {
        let mut p = dw.t().dot(&dw);
        p.mapv_inplace(|v| v * 2.0);
        p
    };
    let q_vec: Vec<f64> = {
        let mut q = dw.t().dot(&yw);
        q.mapv_inplace(|v| v * -2.0);
        q.to_vec()
    };

    // Equalities: for each target, the first row of dL cancels the (already
    // zero) first row of the ideal generator.
    let n_eq = num_targets * n;
    // PSD blocks: one per target, real embedding of the n x n Hermitian
    // conditional-CP matrix.
    let ne = 2 * n;
    let tri = ne * (ne + 1) / 2;
    let n_rows = n_eq + num_targets * tri;

    let mut a_mat = Array2::<f64>::zeros((n_rows, nvar));
    let mut b = vec![0.0; n_rows];

    for (t, target) in fp.targets.iter().enumerate() {
        for beta in 0..n {
            // vec index of entry (0, beta) inside target block t
            a_mat[(t * n + beta, t * k + beta)] = 1.0;
            b[t * n + beta] = -target.l_ideal.matrix()[(0, beta)];
        }
    }

    let q_proj = q_projector(d);
    for (t, target) in fp.targets.iter().enumerate() {
        let row0 = n_eq + t * tri;
        let base = qcjq(target.l_ideal.matrix().view(), d, &q_proj);
        for (idx, v) in svec_embed(&base).into_iter().enumerate() {
            b[row0 + idx] = v;
        }
        // Columns: -svec(Q CJ(E_c) Q) for each elementary direction.
        let mut unit = Array2::<f64>::zeros((n, n));
        for c in 0..k {
            let (i, j) = (c / n, c % n);
            unit[(i, j)] = 1.0;
            let block = qcjq(unit.view(), d, &q_proj);
            for (idx, v) in svec_embed(&block).into_iter().enumerate() {
                a_mat[(row0 + idx, t * k + c)] = -v;
            }
            unit[(i, j)] = 0.0;
        }
    }

    let mut cones: Vec<SupportedConeT<f64>> = vec![clarabel::solver::ZeroConeT(n_eq)];
    for _ in 0..num_targets {
        cones.push(clarabel::solver::PSDTriangleConeT(ne));
    }

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(200)
        .tol_gap_abs(1e-11)
        .tol_gap_rel(1e-11)
        .tol_feas(1e-11)
        .build()
        .map_err(|e| RltError::Solver(format!("settings: {e}")))?;
    let p_csc = csc_from_dense(&p_dense);
    let a_csc = csc_from_dense(&a_mat);
    let mut solver = DefaultSolver::new(&p_csc, &q_vec, &a_csc, &b, &cones, settings)
        .map_err(|e| RltError::Solver(format!("setup: {e}")))?;
    solver.solve();
    let status = solver.solution.status;
    match status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        other => return Err(RltError::Solver(format!("conic solver terminated with {other:?}"))),
    }
    finish_result(fp, solver.solution.x.clone(), format!("{status:?}"))
}
