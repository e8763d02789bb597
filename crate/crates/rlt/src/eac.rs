//! Error-amplification-circuit analysis: period detection, unit Lindbladian,
//! the sequential composition algorithm producing the per-gate maps
//! `F_i^unit`, and the amplified / non-amplified split `f_amp` / `f_not_amp`.

use ndarray::prelude::*;

use crate::error::{Result, RltError};
use crate::linalg::{logm_principal, spectral_decompose_default, to_real_checked};
use crate::perturb::{
    build_maps, dcl_map, dcr_map, repetition_split, singularity_report, SuperMap,
};
use crate::reps::{HSMatrix, Lindbladian};

/// Default cap for the period search.
pub const PERIOD_KMAX_DEFAULT: usize = 64;
/// Default tolerance on `||G^k - I||` in the period search.
pub const PERIOD_TOL_DEFAULT: f64 = 1e-8;

/// A named gate with its ideal finite-time Lindbladian.
#[derive(Debug, Clone)]
pub struct Gate {
    pub name: String,
    pub lindbladian: Lindbladian,
}

/// The independent gates available to an experiment; gate labels are indices
/// into this set.
#[derive(Debug, Clone)]
pub struct GateSet {
    d: usize,
    gates: Vec<Gate>,
}

impl GateSet {
    pub fn new(d: usize) -> GateSet {
        GateSet { d, gates: Vec::new() }
    }

    /// Register a gate. Validates that `e^L` is CPTP and that `L` is
    /// diagonalizable; returns the gate label.
    pub fn add_gate(&mut self, name: &str, lindbladian: Lindbladian) -> Result<usize> {
        if lindbladian.dim() != self.d {
            return Err(RltError::DimMismatch(format!(
                "gate '{name}' has dimension {}, gate set has {}",
                lindbladian.dim(),
                self.d
            )));
        }
        if self.index_of(name).is_some() {
            return Err(RltError::Invalid(format!("duplicate gate name '{name}'")));
        }
        lindbladian
            .exp()?
            .cptp_check(1e-8)
            .map_err(|e| RltError::NotCptp(format!("gate '{name}': {e}")))?;
        spectral_decompose_default(&lindbladian.to_complex())?;
        self.gates.push(Gate { name: name.to_string(), lindbladian });
        Ok(self.gates.len() - 1)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate(&self, label: usize) -> &Gate {
        &self.gates[label]
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.gates.iter().position(|g| g.name == name)
    }

    /// Zero perturbations, one per gate label.
    pub fn zero_deltas(&self) -> Vec<Array2<f64>> {
        let n = self.d * self.d;
        vec![Array2::zeros((n, n)); self.gates.len()]
    }
}

/// Ordered gate labels of one repetition unit. Repeated labels are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitSequence {
    labels: Vec<usize>,
}

impl UnitSequence {
    pub fn new(labels: Vec<usize>, gs: &GateSet) -> Result<UnitSequence> {
        if labels.is_empty() {
            return Err(RltError::Invalid("unit sequence must contain at least one gate".into()));
        }
        for &l in &labels {
            if l >= gs.len() {
                return Err(RltError::Invalid(format!("gate label {l} out of range (gate set has {})", gs.len())));
            }
        }
        Ok(UnitSequence { labels })
    }

    pub fn from_names(gs: &GateSet, names: &[&str]) -> Result<UnitSequence> {
        let labels = names
            .iter()
            .map(|n| {
                gs.index_of(n)
                    .ok_or_else(|| RltError::Invalid(format!("unknown gate '{n}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        UnitSequence::new(labels, gs)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Smallest `k <= k_max` with `||G^k - I|| < tol`.
pub fn period_of(g: &HSMatrix, k_max: usize, tol: f64) -> Result<usize> {
    let n = g.matrix().nrows();
    let id = Array2::<f64>::eye(n);
    let mut power = g.matrix().clone();
    let mut best = f64::INFINITY;
    for k in 1..=k_max {
        let dist = (&power - &id).iter().map(|x| x * x).sum::<f64>().sqrt();
        best = best.min(dist);
        if dist < tol {
            return Ok(k);
        }
        power = power.dot(g.matrix());
    }
    Err(RltError::Aperiodic { k_max, best })
}

/// Ordered ideal product `G_{i_nu} ... G_{i_2} G_{i_1}`.
pub fn unit_ideal_product(gs: &GateSet, seq: &UnitSequence) -> Result<HSMatrix> {
    let mut product = HSMatrix::identity(gs.dim());
    for &label in seq.labels() {
        let g = gs.gate(label).lindbladian.exp()?;
        product = g.compose(&product);
    }
    Ok(product)
}

/// `ln G^unit,ideal` on the principal branch.
pub fn unit_ideal_lindbladian(gs: &GateSet, seq: &UnitSequence) -> Result<Lindbladian> {
    let product = unit_ideal_product(gs, seq)?;
    let log = logm_principal(&crate::linalg::to_complex(product.matrix()))?;
    Lindbladian::from_matrix(gs.dim(), to_real_checked(&log, 1e-9)?)
}

/// Check the spectral non-singularity condition for every distinct gate in the
/// sequence; 180-degree rotations fail here.
pub fn check_applicability(gs: &GateSet, seq: &UnitSequence) -> Result<()> {
    let mut seen = vec![false; gs.len()];
    for &label in seq.labels() {
        if seen[label] {
            continue;
        }
        seen[label] = true;
        let gate = gs.gate(label);
        let sd = spectral_decompose_default(&gate.lindbladian.to_complex())?;
        let report = singularity_report(&sd);
        if report.is_singular() {
            return Err(RltError::SingularGate { gate: gate.name.clone(), report });
        }
    }
    Ok(())
}

/// Output of the sequential composition pass: per-label maps and the unit
/// generator accumulated along the way.
#[derive(Debug, Clone)]
pub struct CompositionMaps {
    pub f_unit: Vec<SuperMap>,
    pub l_unit_ideal: Lindbladian,
}

/// Walk the unit sequence, transforming the accumulated per-gate maps through
/// each composition and adding the new gate's extraction map:
/// after step `j`, `F_i <- cmr_C o dcr_{A'} o F_i` for every label and
/// `F_{i_j} <- F_{i_j} + cml_C o dcl_A`, where `C = ln(e^A e^{A'})` is the
/// generator of the grown prefix. Stops with the failing prefix if any `C`
/// violates the non-singularity condition.
pub fn algorithm1(gs: &GateSet, seq: &UnitSequence) -> Result<CompositionMaps> {
    let d = gs.dim();
    let m = d * d;
    let mut f_unit: Vec<SuperMap> = (0..gs.len()).map(|_| SuperMap::zero(m)).collect();

    let first = seq.labels()[0];
    let mut prefix = gs.gate(first).lindbladian.to_complex();
    f_unit[first] = SuperMap::identity(m);

    for (j, &label) in seq.labels().iter().enumerate().skip(1) {
        let a = gs.gate(label).lindbladian.to_complex();
        let ea = crate::linalg::expm(&a)?;
        let eprefix = crate::linalg::expm(&prefix)?;
        let c = logm_principal(&ea.dot(&eprefix)).map_err(|e| match e {
            RltError::BranchCut { .. } | RltError::SingularMatrix { .. } => RltError::SingularPrefix {
                position: j + 1,
                gate: gs.gate(label).name.clone(),
                detail: e.to_string(),
            },
            other => other,
        })?;
        let sd_c = spectral_decompose_default(&c)?;
        let report = singularity_report(&sd_c);
        if report.is_singular() {
            return Err(RltError::SingularPrefix {
                position: j + 1,
                gate: gs.gate(label).name.clone(),
                detail: report.to_string(),
            });
        }
        let maps_c = build_maps(&sd_c);
        let cml_c = maps_c.cml.expect("checked nonsingular");
        let cmr_c = maps_c.cmr.expect("checked nonsingular");

        let sd_prefix = spectral_decompose_default(&prefix)?;
        let transform = cmr_c.compose(&dcr_map(&sd_prefix));
        for f in f_unit.iter_mut() {
            *f = transform.compose(f);
        }
        let sd_a = spectral_decompose_default(&a)?;
        f_unit[label] = f_unit[label].add(&cml_c.compose(&dcl_map(&sd_a)));

        prefix = c;
    }

    let l_unit_ideal = Lindbladian::from_matrix(d, to_real_checked(&prefix, 1e-9)?)?;
    Ok(CompositionMaps { f_unit, l_unit_ideal })
}

/// Everything the fitting stage needs about one repetition unit: the unit
/// generator, its period, and per-gate composed and split maps.
#[derive(Debug, Clone)]
pub struct AmplificationMaps {
    d: usize,
    period: usize,
    l_unit_ideal: Lindbladian,
    f_unit: Vec<SuperMap>,
    f_amp: Vec<SuperMap>,
    f_not_amp: Vec<SuperMap>,
}

/// Split composed maps into amplified and non-amplified parts with respect to
/// the unit generator: `f_amp_i = ssp o F_i`, `f_not_amp_i = sspc o F_i`.
pub fn amp_split(
    f_unit: &[SuperMap],
    l_unit_ideal: &Lindbladian,
) -> Result<(Vec<SuperMap>, Vec<SuperMap>)> {
    let sd = spectral_decompose_default(&l_unit_ideal.to_complex())?;
    let split = repetition_split(&sd);
    let f_amp = f_unit.iter().map(|f| split.ssp.compose(f)).collect();
    let f_not_amp = f_unit.iter().map(|f| split.sspc.compose(f)).collect();
    Ok((f_amp, f_not_amp))
}

/// Build the full amplification analysis of one unit sequence (protocol
/// Step 1 for a single circuit).
pub fn amplification_maps(gs: &GateSet, seq: &UnitSequence) -> Result<AmplificationMaps> {
    check_applicability(gs, seq)?;
    let comp = algorithm1(gs, seq)?;
    let product = unit_ideal_product(gs, seq)?;
    let period = period_of(&product, PERIOD_KMAX_DEFAULT, PERIOD_TOL_DEFAULT)?;
    let (f_amp, f_not_amp) = amp_split(&comp.f_unit, &comp.l_unit_ideal)?;
    Ok(AmplificationMaps {
        d: gs.dim(),
        period,
        l_unit_ideal: comp.l_unit_ideal,
        f_unit: comp.f_unit,
        f_amp,
        f_not_amp,
    })
}

impl AmplificationMaps {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn l_unit_ideal(&self) -> &Lindbladian {
        &self.l_unit_ideal
    }

    pub fn f_unit(&self) -> &[SuperMap] {
        &self.f_unit
    }

    pub fn f_amp(&self) -> &[SuperMap] {
        &self.f_amp
    }

    pub fn f_not_amp(&self) -> &[SuperMap] {
        &self.f_not_amp
    }

    /// First-order predicted generator of `[G^unit]^n` for the given per-gate
    /// errors: `r L^unit + sum_j (r f_not_amp_j + n f_amp_j)(dL_j)` with
    /// `r = n mod k`.
    pub fn predict_generator(&self, deltas: &[Array2<f64>], n: usize) -> Result<Array2<f64>> {
        if deltas.len() != self.f_unit.len() {
            return Err(RltError::DimMismatch(format!(
                "{} deltas for {} gates",
                deltas.len(),
                self.f_unit.len()
            )));
        }
        let r = (n % self.period) as f64;
        let nf = n as f64;
        let mut out = self.l_unit_ideal.matrix().mapv(|x| x * r);
        for (j, delta) in deltas.iter().enumerate() {
            if delta.iter().all(|&x| x == 0.0) {
                continue;
            }
            let not_amp = self.f_not_amp[j].apply_real(delta)?;
            let amp = self.f_amp[j].apply_real(delta)?;
            out.zip_mut_with(&not_amp, |o, &t| *o += r * t);
            out.zip_mut_with(&amp, |o, &t| *o += nf * t);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::linalg::{expm, eye, matrix_power};
    use crate::random::random_lindbladian_error;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn one_qubit_set() -> GateSet {
        let mut gs = GateSet::new(2);
        gs.add_gate("id", gates::identity_gate(1)).unwrap();
        gs.add_gate("x90", gates::x90()).unwrap();
        gs.add_gate("y90", gates::y90()).unwrap();
        gs.add_gate("x90inv", gates::x90_inv()).unwrap();
        gs
    }

    #[test]
    fn periods_of_standard_gates() {
        let id = gates::identity_gate(1).exp().unwrap();
        assert_eq!(period_of(&id, 64, 1e-8).unwrap(), 1);
        for l in [gates::x90(), gates::y90(), gates::z90()] {
            assert_eq!(period_of(&l.exp().unwrap(), 64, 1e-8).unwrap(), 4);
        }
        assert_eq!(period_of(&gates::zx90().exp().unwrap(), 64, 1e-8).unwrap(), 4);
        assert_eq!(period_of(&gates::t_gate().exp().unwrap(), 64, 1e-8).unwrap(), 8);
    }

    #[test]
    fn aperiodic_gate_is_an_error() {
        let l = gates::rotation_lindbladian("Z", 1.0).unwrap(); // irrational fraction of 2 pi
        match period_of(&l.exp().unwrap(), 16, 1e-8) {
            Err(RltError::Aperiodic { .. }) => {}
            other => panic!("expected aperiodic error, got {other:?}"),
        }
    }

    #[test]
    fn unit_lindbladian_single_gate() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90"]).unwrap();
        let l = unit_ideal_lindbladian(&gs, &seq).unwrap();
        let diff = l.matrix() - gs.gate(1).lindbladian.matrix();
        assert!(diff.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-9);
    }

    #[test]
    fn unit_lindbladian_of_inverse_pair_vanishes() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90", "x90inv"]).unwrap();
        let l = unit_ideal_lindbladian(&gs, &seq).unwrap();
        let g = l.exp().unwrap();
        let err: f64 = (g.matrix() - &Array2::<f64>::eye(4)).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(err < 1e-9);
    }

    #[test]
    fn unit_lindbladian_matches_product() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90", "y90"]).unwrap();
        let l = unit_ideal_lindbladian(&gs, &seq).unwrap();
        let expected = gs.gate(2).lindbladian.exp().unwrap().compose(&gs.gate(1).lindbladian.exp().unwrap());
        let err: f64 = (l.exp().unwrap().matrix() - expected.matrix())
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10);
    }

    #[test]
    fn algorithm1_single_gate_is_identity_map() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90"]).unwrap();
        let comp = algorithm1(&gs, &seq).unwrap();
        assert!(fro_norm(&(comp.f_unit[1].rep() - eye(16))) < 1e-12);
        for label in [0usize, 2, 3] {
            assert_eq!(fro_norm(comp.f_unit[label].rep()), 0.0);
        }
    }

    #[test]
    fn algorithm1_two_gates_matches_pairwise_composition() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90", "y90"]).unwrap();
        let comp = algorithm1(&gs, &seq).unwrap();
        let two = crate::perturb::compose_two(
            &gs.gate(2).lindbladian.to_complex(),
            &gs.gate(1).lindbladian.to_complex(),
        )
        .unwrap();
        // F for the first gate in the unit matches the right-factor map and
        // F for the second matches the left-factor map.
        assert!(fro_norm(&(comp.f_unit[1].rep() - two.map_bprime.rep())) < 1e-9);
        assert!(fro_norm(&(comp.f_unit[2].rep() - two.map_b.rep())) < 1e-9);
    }

    #[test]
    fn algorithm1_repeated_gate_accumulates() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90", "y90", "x90"]).unwrap();
        let comp = algorithm1(&gs, &seq).unwrap();
        // Residual of the first-order model is quadratic in the error size.
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let d1 = random_lindbladian_error(2, 1.0, &mut rng).unwrap();
        let d2 = random_lindbladian_error(2, 1.0, &mut rng).unwrap();
        let resid = |eps: f64| {
            let deltas = [d1.mapv(|x| x * eps), d2.mapv(|x| x * eps)];
            let g1 = gs.gate(1).lindbladian.add(&deltas[0]).unwrap().exp().unwrap();
            let g2 = gs.gate(2).lindbladian.add(&deltas[1]).unwrap().exp().unwrap();
            let actual = g1.compose(&g2).compose(&g1).into_matrix();
            let mut exponent = comp.l_unit_ideal.matrix().clone();
            exponent += &comp.f_unit[1].apply_real(&deltas[0]).unwrap();
            exponent += &comp.f_unit[2].apply_real(&deltas[1]).unwrap();
            let predicted = expm(&crate::linalg::to_complex(&exponent)).unwrap();
            fro_norm(&(crate::linalg::to_complex(&actual) - predicted))
        };
        let ratio = resid(1e-2) / resid(5e-3);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn applicability_rejects_x180() {
        let mut gs = GateSet::new(2);
        gs.add_gate("x180", gates::x180()).unwrap();
        let seq = UnitSequence::from_names(&gs, &["x180"]).unwrap();
        match check_applicability(&gs, &seq) {
            Err(RltError::SingularGate { gate, .. }) => assert_eq!(gate, "x180"),
            other => panic!("expected singular-gate error, got {other:?}"),
        }
    }

    #[test]
    fn amp_split_sums_to_composed_map() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90", "y90"]).unwrap();
        let am = amplification_maps(&gs, &seq).unwrap();
        for j in 0..gs.len() {
            let sum = am.f_amp()[j].add(&am.f_not_amp()[j]);
            assert!(fro_norm(&(sum.rep() - am.f_unit()[j].rep())) < 1e-10);
        }
    }

    #[test]
    fn identity_unit_amplifies_everything() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["id"]).unwrap();
        let am = amplification_maps(&gs, &seq).unwrap();
        assert_eq!(am.period(), 1);
        assert!(fro_norm(&(am.f_amp()[0].rep() - am.f_unit()[0].rep())) < 1e-12);
        assert_eq!(fro_norm(am.f_not_amp()[0].rep()), 0.0);
    }

    #[test]
    fn commuting_overrotation_is_fully_amplified() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90"]).unwrap();
        let am = amplification_maps(&gs, &seq).unwrap();
        let delta = gs.gate(1).lindbladian.matrix().mapv(|x| x * 1e-3);
        let not_amp = am.f_not_amp()[1].apply_real(&delta).unwrap();
        assert!(not_amp.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-12);
    }

    #[test]
    fn predict_generator_r_zero_keeps_only_amplified() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90"]).unwrap();
        let am = amplification_maps(&gs, &seq).unwrap();
        assert_eq!(am.period(), 4);
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let mut deltas = gs.zero_deltas();
        deltas[1] = random_lindbladian_error(2, 1e-3, &mut rng).unwrap();
        let p = am.predict_generator(&deltas, 4).unwrap();
        let amp_only = am.f_amp()[1].apply_real(&deltas[1]).unwrap().mapv(|x| x * 4.0);
        let diff: f64 = (&p - &amp_only).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(diff < 1e-12);
        // All-zero deltas at a multiple of the period: zero generator.
        let zero = am.predict_generator(&gs.zero_deltas(), 8).unwrap();
        assert_eq!(zero.iter().map(|x| x * x).sum::<f64>().sqrt(), 0.0);
    }

    #[test]
    fn end_to_end_first_order_model_is_quadratic() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90", "y90"]).unwrap();
        let am = amplification_maps(&gs, &seq).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let d1 = random_lindbladian_error(2, 1.0, &mut rng).unwrap();
        let d2 = random_lindbladian_error(2, 1.0, &mut rng).unwrap();
        for n in [4usize, 16, 64] {
            let resid = |eps: f64| {
                let mut deltas = gs.zero_deltas();
                deltas[1] = d1.mapv(|x| x * eps);
                deltas[2] = d2.mapv(|x| x * eps);
                let g1 = gs.gate(1).lindbladian.add(&deltas[1]).unwrap().exp().unwrap();
                let g2 = gs.gate(2).lindbladian.add(&deltas[2]).unwrap().exp().unwrap();
                let unit = g2.compose(&g1);
                let actual = matrix_power(&crate::linalg::to_complex(unit.matrix()), n as u64);
                let predicted =
                    expm(&crate::linalg::to_complex(&am.predict_generator(&deltas, n).unwrap())).unwrap();
                fro_norm(&(actual - predicted))
            };
            let ratio = resid(1e-3) / resid(5e-4);
            assert!((3.5..=4.5).contains(&ratio), "ratio {ratio} at n {n}");
        }
    }

    #[test]
    fn predict_generator_is_affine_in_deltas() {
        let gs = one_qubit_set();
        let seq = UnitSequence::from_names(&gs, &["x90", "y90", "x90"]).unwrap();
        let am = amplification_maps(&gs, &seq).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let mut deltas = gs.zero_deltas();
        deltas[1] = random_lindbladian_error(2, 1e-3, &mut rng).unwrap();
        deltas[2] = random_lindbladian_error(2, 1e-3, &mut rng).unwrap();
        let n = 7;
        let base = am.predict_generator(&gs.zero_deltas(), n).unwrap();
        let once = am.predict_generator(&deltas, n).unwrap();
        let doubled: Vec<_> = deltas.iter().map(|d| d.mapv(|x| x * 2.0)).collect();
        let twice = am.predict_generator(&doubled, n).unwrap();
        // Doubling the errors doubles the non-ideal part exactly.
        let lin = &once - &base;
        let lin2 = &twice - &base;
        let diff: f64 = (&lin2 - &lin.mapv(|x| x * 2.0)).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(diff < 1e-12);
    }
}
