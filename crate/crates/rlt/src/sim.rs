//! Forward simulation of repeated-circuit experiments: exact outcome
//! probabilities under injected Lindbladian and SPAM errors, and finite-shot
//! sampling.

use ndarray::prelude::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use crate::eac::{GateSet, UnitSequence};
use crate::error::{Result, RltError};
use crate::gates::pauli_string;
use crate::linalg::{kron, matrix_power, CMatrix};
use crate::reps::{vectorize, HSMatrix, MatrixBasis};

/// State preparations and POVMs as real Pauli-basis vectors, with optional
/// error channels already folded in.
#[derive(Debug, Clone)]
pub struct SPAMModel {
    d: usize,
    preparations: Vec<Array1<f64>>,
    prep_labels: Vec<String>,
    povms: Vec<Povm>,
}

/// One measurement setting: a label and its outcome effects `<<Pi_x|`.
#[derive(Debug, Clone)]
pub struct Povm {
    pub label: String,
    pub effects: Vec<Array1<f64>>,
}

fn ket(amplitudes: &[Complex64]) -> CMatrix {
    let d = amplitudes.len();
    let mut rho = CMatrix::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            rho[(i, j)] = amplitudes[i] * amplitudes[j].conj();
        }
    }
    rho
}

fn real_vec(m: &CMatrix, basis: &MatrixBasis) -> Array1<f64> {
    vectorize(m, basis).expect("dims match").mapv(|z| z.re)
}

impl SPAMModel {
    /// Informationally complete preparation/measurement set for standard
    /// process tomography: tensor products of `{|0>, |1>, |+>, |+i>}`
    /// preparations and Pauli-basis projective measurements.
    pub fn qpt_circuit_set(num_qubits: usize) -> Result<SPAMModel> {
        if !(1..=2).contains(&num_qubits) {
            return Err(RltError::Invalid(format!(
                "QPT circuit set supports 1 or 2 qubits, got {num_qubits}"
            )));
        }
        let d = 1usize << num_qubits;
        let basis = MatrixBasis::pauli(num_qubits);
        let inv_sqrt2 = Complex64::new(1.0 / 2.0_f64.sqrt(), 0.0);
        let one = Complex64::ONE;
        let i = Complex64::I;
        let states_1q: Vec<(&str, Vec<Complex64>)> = vec![
            ("0", vec![one, Complex64::ZERO]),
            ("1", vec![Complex64::ZERO, one]),
            ("+", vec![inv_sqrt2, inv_sqrt2]),
            ("+i", vec![inv_sqrt2, inv_sqrt2 * i]),
        ];
        let axes_1q: Vec<(&str, Vec<CMatrix>)> = {
            let make = |amps: Vec<Vec<Complex64>>| amps.into_iter().map(|a| ket(&a)).collect::<Vec<_>>();
            vec![
                (
                    "X",
                    make(vec![
                        vec![inv_sqrt2, inv_sqrt2],
                        vec![inv_sqrt2, -inv_sqrt2],
                    ]),
                ),
                (
                    "Y",
                    make(vec![
                        vec![inv_sqrt2, inv_sqrt2 * i],
                        vec![inv_sqrt2, -inv_sqrt2 * i],
                    ]),
                ),
                (
                    "Z",
                    make(vec![
                        vec![one, Complex64::ZERO],
                        vec![Complex64::ZERO, one],
                    ]),
                ),
            ]
        };

        let mut preparations = Vec::new();
        let mut prep_labels = Vec::new();
        let mut povms = Vec::new();
        if num_qubits == 1 {
            for (name, amps) in &states_1q {
                preparations.push(real_vec(&ket(amps), &basis));
                prep_labels.push((*name).to_string());
            }
            for (axis, projs) in &axes_1q {
                let effects = projs.iter().map(|p| real_vec(p, &basis)).collect();
                povms.push(Povm { label: (*axis).to_string(), effects });
            }
        } else {
            for (n1, a1) in &states_1q {
                for (n2, a2) in &states_1q {
                    let rho = kron(&ket(a1), &ket(a2));
                    preparations.push(real_vec(&rho, &basis));
                    prep_labels.push(format!("{n1}{n2}"));
                }
            }
            for (ax1, p1) in &axes_1q {
                for (ax2, p2) in &axes_1q {
                    let mut effects = Vec::new();
                    for e1 in p1 {
                        for e2 in p2 {
                            effects.push(real_vec(&kron(e1, e2), &basis));
                        }
                    }
                    povms.push(Povm { label: format!("{ax1}{ax2}"), effects });
                }
            }
        }
        Ok(SPAMModel { d, preparations, prep_labels, povms })
    }

    /// Compose fixed error channels onto every preparation and measurement:
    /// `|rho'>> = E_prep |rho>>` and `<<Pi'| = <<Pi| E_meas`.
    pub fn with_errors(&self, prep_error: &HSMatrix, meas_error: &HSMatrix) -> Result<SPAMModel> {
        if prep_error.dim() != self.d || meas_error.dim() != self.d {
            return Err(RltError::DimMismatch("SPAM error channel dimension mismatch".into()));
        }
        let preparations = self.preparations.iter().map(|p| prep_error.matrix().dot(p)).collect();
        let povms = self
            .povms
            .iter()
            .map(|povm| Povm {
                label: povm.label.clone(),
                effects: povm.effects.iter().map(|e| meas_error.matrix().t().dot(e)).collect(),
            })
            .collect();
        Ok(SPAMModel { d: self.d, preparations, prep_labels: self.prep_labels.clone(), povms })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn preparations(&self) -> &[Array1<f64>] {
        &self.preparations
    }

    pub fn prep_labels(&self) -> &[String] {
        &self.prep_labels
    }

    pub fn povms(&self) -> &[Povm] {
        &self.povms
    }

    /// Total number of scalar probabilities the model produces.
    pub fn num_probabilities(&self) -> usize {
        self.preparations.len() * self.povms.iter().map(|p| p.effects.len()).sum::<usize>()
    }

    /// Sensing matrix mapping the row-major vectorized HS matrix to the
    /// stacked probabilities: row `(s, m, x)` is `kron(Pi_x, rho_s)`.
    pub fn sensing_matrix(&self) -> Array2<f64> {
        let n = self.d * self.d;
        let rows: usize = self.preparations.len() * self.povms.iter().map(|p| p.effects.len()).sum::<usize>();
        let mut mat = Array2::zeros((rows, n * n));
        let mut r = 0;
        for prep in &self.preparations {
            for povm in &self.povms {
                for effect in &povm.effects {
                    for a in 0..n {
                        for b in 0..n {
                            mat[(r, a * n + b)] = effect[a] * prep[b];
                        }
                    }
                    r += 1;
                }
            }
        }
        mat
    }
}

/// Depolarizing channel composed with a small coherent rotation, used as the
/// default preparation/measurement error model of the given strength.
pub fn standard_spam_error(d: usize, strength: f64) -> Result<(HSMatrix, HSMatrix)> {
    let num_qubits = d.trailing_zeros() as usize;
    if 1 << num_qubits != d {
        return Err(RltError::Invalid("SPAM model needs a power-of-two dimension".into()));
    }
    let n = d * d;
    let mut depol = Array2::<f64>::eye(n);
    for k in 1..n {
        depol[(k, k)] = 1.0 - strength;
    }
    let rot = |axis_char: char| -> Result<Array2<f64>> {
        let axis: String = std::iter::repeat_n(axis_char, num_qubits).collect();
        let h = pauli_string(&axis)?.mapv(|z| z * Complex64::new(strength / 2.0, 0.0));
        let u = crate::linalg::expm(&h.mapv(|z| -Complex64::I * z))?;
        Ok(HSMatrix::of_unitary(&u)?.into_matrix())
    };
    let prep = HSMatrix::from_matrix(d, depol.dot(&rot('X')?))?;
    let meas = HSMatrix::from_matrix(d, depol.dot(&rot('Y')?))?;
    Ok((prep, meas))
}

/// Outcome probabilities for every `(preparation, setting)` cell.
#[derive(Debug, Clone)]
pub struct ProbabilityTable {
    /// `cells[s * num_settings + m][x]`.
    pub cells: Vec<Vec<f64>>,
    pub num_preparations: usize,
    pub num_settings: usize,
}

impl ProbabilityTable {
    pub fn flat(&self) -> Array1<f64> {
        Array1::from_iter(self.cells.iter().flatten().cloned())
    }
}

/// The noisy unit channel `G_unit = G_{i_nu} ... G_{i_1}` with per-gate errors
/// injected; every gate is revalidated as CPTP.
pub fn noisy_unit_channel(
    gs: &GateSet,
    seq: &UnitSequence,
    deltas: &[Array2<f64>],
) -> Result<HSMatrix> {
    if deltas.len() != gs.len() {
        return Err(RltError::DimMismatch(format!(
            "{} deltas for {} gates",
            deltas.len(),
            gs.len()
        )));
    }
    let mut cache: Vec<Option<HSMatrix>> = vec![None; gs.len()];
    let mut unit = HSMatrix::identity(gs.dim());
    for &label in seq.labels() {
        if cache[label].is_none() {
            let noisy = gs.gate(label).lindbladian.add(&deltas[label])?;
            let g = noisy.exp()?;
            g.cptp_check(1e-8)
                .map_err(|e| RltError::NotCptp(format!("injected gate '{}': {e}", gs.gate(label).name)))?;
            cache[label] = Some(g);
        }
        unit = cache[label].as_ref().unwrap().compose(&unit);
    }
    Ok(unit)
}

/// Exact outcome probabilities `p_x = <<Pi_x| [G_unit]^n |rho>>`.
pub fn exact_probabilities(
    gs: &GateSet,
    seq: &UnitSequence,
    deltas: &[Array2<f64>],
    spam: &SPAMModel,
    n: usize,
) -> Result<ProbabilityTable> {
    if spam.dim() != gs.dim() {
        return Err(RltError::DimMismatch("SPAM model dimension mismatch".into()));
    }
    let unit = noisy_unit_channel(gs, seq, deltas)?;
    let powered = matrix_power(unit.matrix(), n as u64);
    let mut cells = Vec::with_capacity(spam.preparations().len() * spam.povms().len());
    for prep in spam.preparations() {
        let evolved = powered.dot(prep);
        for povm in spam.povms() {
            let probs: Vec<f64> = povm.effects.iter().map(|e| e.dot(&evolved)).collect();
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-10 {
                return Err(RltError::Invalid(format!(
                    "outcome probabilities sum to {total}, expected 1"
                )));
            }
            cells.push(probs);
        }
    }
    Ok(ProbabilityTable {
        cells,
        num_preparations: spam.preparations().len(),
        num_settings: spam.povms().len(),
    })
}

/// Multinomial outcome counts per `(preparation, setting)` cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShotTable {
    pub counts: Vec<Vec<u64>>,
    pub shots: u64,
    pub seed: u64,
    pub num_preparations: usize,
    pub num_settings: usize,
}

impl ShotTable {
    pub fn frequencies(&self) -> ProbabilityTable {
        let cells = self
            .counts
            .iter()
            .map(|c| c.iter().map(|&k| k as f64 / self.shots as f64).collect())
            .collect();
        ProbabilityTable {
            cells,
            num_preparations: self.num_preparations,
            num_settings: self.num_settings,
        }
    }
}

/// Draw multinomial counts for every cell, reproducibly from the seed.
pub fn sample_counts(probs: &ProbabilityTable, shots: u64, seed: u64) -> Result<ShotTable> {
    if shots == 0 {
        return Err(RltError::Invalid("shots must be positive".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut counts = Vec::with_capacity(probs.cells.len());
    for cell in &probs.cells {
        // Multinomial via a chain of conditional binomials.
        let mut remaining = shots;
        let mut rest: f64 = cell.iter().sum();
        let mut cell_counts = Vec::with_capacity(cell.len());
        for (x, &p) in cell.iter().enumerate() {
            if x + 1 == cell.len() {
                cell_counts.push(remaining);
                break;
            }
            let ratio = if rest > 0.0 { (p / rest).clamp(0.0, 1.0) } else { 0.0 };
            let draw = if remaining == 0 || ratio <= 0.0 {
                0
            } else if ratio >= 1.0 {
                remaining
            } else {
                Binomial::new(remaining, ratio)
                    .map_err(|e| RltError::Invalid(format!("binomial: {e}")))?
                    .sample(&mut rng)
            };
            cell_counts.push(draw);
            remaining -= draw;
            rest -= p;
        }
        counts.push(cell_counts);
    }
    Ok(ShotTable {
        counts,
        shots,
        seed,
        num_preparations: probs.num_preparations,
        num_settings: probs.num_settings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::eac::{GateSet, UnitSequence};
    use ndarray_linalg::SVD;

    fn identity_set() -> (GateSet, UnitSequence) {
        let mut gs = GateSet::new(2);
        gs.add_gate("id", gates::identity_gate(1)).unwrap();
        gs.add_gate("x90", gates::x90()).unwrap();
        let seq = UnitSequence::from_names(&gs, &["id"]).unwrap();
        (gs, seq)
    }

    #[test]
    fn qpt_set_counts() {
        let spam = SPAMModel::qpt_circuit_set(1).unwrap();
        assert_eq!(spam.preparations().len(), 4);
        assert_eq!(spam.povms().len(), 3);
        let total: usize = spam.preparations().len()
            * spam.povms().iter().map(|p| p.effects.len()).sum::<usize>();
        assert_eq!(total, 24);
        let spam2 = SPAMModel::qpt_circuit_set(2).unwrap();
        assert_eq!(spam2.preparations().len(), 16);
        assert_eq!(spam2.povms().len(), 9);
        assert!(SPAMModel::qpt_circuit_set(3).is_err());
    }

    #[test]
    fn qpt_sensing_matrix_has_full_rank() {
        let spam = SPAMModel::qpt_circuit_set(1).unwrap();
        let s = spam.sensing_matrix();
        assert_eq!(s.dim(), (24, 16));
        let (_, sv, _) = s.svd(false, false).unwrap();
        let rank = sv.iter().filter(|&&x| x > 1e-10).count();
        assert_eq!(rank, 16);
    }

    #[test]
    fn ideal_circuit_at_period_acts_as_identity() {
        let mut gs = GateSet::new(2);
        gs.add_gate("x90", gates::x90()).unwrap();
        let seq = UnitSequence::from_names(&gs, &["x90"]).unwrap();
        let spam = SPAMModel::qpt_circuit_set(1).unwrap();
        let table = exact_probabilities(&gs, &seq, &gs.zero_deltas(), &spam, 4).unwrap();
        // p_x = <<Pi_x | rho>> exactly.
        let mut idx = 0;
        for prep in spam.preparations() {
            for povm in spam.povms() {
                for (x, effect) in povm.effects.iter().enumerate() {
                    let expected = effect.dot(prep);
                    assert!((table.cells[idx][x] - expected).abs() < 1e-12);
                }
                idx += 1;
            }
        }
    }

    #[test]
    fn amplitude_damping_decay_curve() {
        // Identity-gate unit with an amplitude-damping error; prepare |1>,
        // measure in Z: p_0(n) = 1 - e^{-gamma n}.
        let gamma: f64 = 1e-3;
        let (gs, seq) = identity_set();
        let sigma_minus = ndarray::array![
            [Complex64::ZERO, Complex64::ONE],
            [Complex64::ZERO, Complex64::ZERO]
        ];
        let jump = sigma_minus.mapv(|z| z * gamma.sqrt());
        let delta = crate::reps::Lindbladian::from_dissipator(&[jump]).unwrap();
        let mut deltas = gs.zero_deltas();
        deltas[0] = delta.matrix().clone();
        let spam = SPAMModel::qpt_circuit_set(1).unwrap();
        for n in [1usize, 10, 100] {
            let table = exact_probabilities(&gs, &seq, &deltas, &spam, n).unwrap();
            // Preparation |1> is index 1; Z setting is index 2; outcome 0.
            let cell = &table.cells[1 * 3 + 2];
            let expected = 1.0 - (-gamma * n as f64).exp();
            assert!((cell[0] - expected).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn non_cptp_injection_rejected() {
        let (gs, seq) = identity_set();
        let mut deltas = gs.zero_deltas();
        // A generator violating conditional complete positivity.
        deltas[0][(1, 1)] = 0.1;
        deltas[0][(2, 2)] = 0.1;
        deltas[0][(3, 3)] = 0.1;
        let spam = SPAMModel::qpt_circuit_set(1).unwrap();
        match exact_probabilities(&gs, &seq, &deltas, &spam, 1) {
            Err(RltError::NotCptp(_)) => {}
            other => panic!("expected CPTP rejection, got {other:?}"),
        }
    }

    #[test]
    fn sampling_is_deterministic_and_consistent() {
        let (gs, seq) = identity_set();
        let spam = SPAMModel::qpt_circuit_set(1).unwrap();
        let probs = exact_probabilities(&gs, &seq, &gs.zero_deltas(), &spam, 1).unwrap();
        let t1 = sample_counts(&probs, 10_000, 42).unwrap();
        let t2 = sample_counts(&probs, 10_000, 42).unwrap();
        assert_eq!(t1, t2);
        let t3 = sample_counts(&probs, 10_000, 43).unwrap();
        assert_ne!(t1, t3);
        for cell in &t1.counts {
            assert_eq!(cell.iter().sum::<u64>(), 10_000);
        }
        assert!(sample_counts(&probs, 0, 1).is_err());
    }

    #[test]
    fn deterministic_distribution_sampling() {
        let probs = ProbabilityTable {
            cells: vec![vec![1.0, 0.0, 0.0]],
            num_preparations: 1,
            num_settings: 1,
        };
        let t = sample_counts(&probs, 1000, 7).unwrap();
        assert_eq!(t.counts[0], vec![1000, 0, 0]);
    }

    #[test]
    fn sample_mean_tracks_probabilities() {
        let probs = ProbabilityTable {
            cells: vec![vec![0.3, 0.7]],
            num_preparations: 1,
            num_settings: 1,
        };
        let shots = 10_000u64;
        let trials = 200;
        let mut mean = 0.0;
        for seed in 0..trials {
            let t = sample_counts(&probs, shots, seed).unwrap();
            mean += t.counts[0][0] as f64 / shots as f64;
        }
        mean /= trials as f64;
        // 3 sigma of the trial mean.
        let sigma = (0.3 * 0.7 / shots as f64 / trials as f64).sqrt();
        assert!((mean - 0.3).abs() < 3.0 * sigma + 1e-4, "mean {mean}");
    }

    #[test]
    fn spam_errors_stay_stochastic() {
        let spam = SPAMModel::qpt_circuit_set(1).unwrap();
        let (prep_err, meas_err) = standard_spam_error(2, 1e-2).unwrap();
        prep_err.cptp_check(1e-9).unwrap();
        meas_err.cptp_check(1e-9).unwrap();
        let noisy = spam.with_errors(&prep_err, &meas_err).unwrap();
        let (gs, seq) = identity_set();
        let table = exact_probabilities(&gs, &seq, &gs.zero_deltas(), &noisy, 5).unwrap();
        for cell in &table.cells {
            let total: f64 = cell.iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
            for &p in cell {
                assert!((-1e-12..=1.0 + 1e-12).contains(&p));
            }
        }
    }
}
