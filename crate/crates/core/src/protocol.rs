//! Outcome statistics of the ancilla-assisted Bell measurement protocol and
//! the witness values built from them.
//!
//! Probabilities carry the physical `2^{-N}` factor, so for an ideal Bell
//! measurement the all-outcome value equals `2^N·Tr[Wρ]` and the
//! single-outcome value equals `Tr[Wρ]/2^N`.
//!
//! Each party measures the pair (ancilla_k, system_k). The joint space is
//! ordered `(ancilla_1, system_1, …, ancilla_N, system_N)`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::fmt_sig;
use crate::qcore::{
    base4_tuples, outcome_index, outcome_tuple, permute_subsystems, tensor_all, tensor_product,
    trace_product, BellOutcome, ComplexMatrix, DensityMatrix, C64, ZERO,
};
use crate::states::Povm;
use crate::witness::{AncillaBasis, CoefficientTensor, OutcomeCoefficientTable};

/// Largest party count for which the full joint-space trace is evaluated.
pub const DEFAULT_JOINT_SPACE_CAP: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub enum MeasurementModel {
    IdealBsm,
    /// One 4×4 POVM per party acting on (ancilla_k, system_k).
    PerPartyPovm(Vec<Povm>),
}

impl MeasurementModel {
    pub fn validate(&self, party_count: usize) -> Result<()> {
        if let MeasurementModel::PerPartyPovm(povms) = self {
            check_povms(povms, party_count)?;
        }
        Ok(())
    }

    pub fn povms(&self, party_count: usize) -> Vec<Povm> {
        match self {
            MeasurementModel::IdealBsm => vec![Povm::ideal_bsm(); party_count],
            MeasurementModel::PerPartyPovm(p) => p.clone(),
        }
    }
}

fn check_povms(povms: &[Povm], party_count: usize) -> Result<()> {
    if povms.len() != party_count {
        return Err(Error::ShapeMismatch(format!(
            "{} POVMs for {party_count} parties",
            povms.len()
        )));
    }
    for (k, p) in povms.iter().enumerate() {
        if p.dim() != 4 || p.len() != 4 {
            return Err(Error::InvalidPovm(format!(
                "party {} POVM must have four 4x4 elements, has {} of dim {}",
                k + 1,
                p.len(),
                p.dim()
            )));
        }
    }
    Ok(())
}

fn party_count_of(state: &DensityMatrix) -> Result<usize> {
    state.qubits().filter(|&n| n > 0).ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "state of dimension {} is not a qubit register",
            state.dim()
        ))
    })
}

fn check_tuples(n: usize, outcome: &[BellOutcome], input: &[usize]) -> Result<()> {
    if outcome.len() != n || input.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "outcome/input tuples of length {}/{} for {n} parties",
            outcome.len(),
            input.len()
        )));
    }
    if input.iter().any(|&x| x >= 4) {
        return Err(Error::ShapeMismatch(format!(
            "input tuple {input:?} has an index outside 0..4"
        )));
    }
    Ok(())
}

fn check_basis(n: usize, basis: &AncillaBasis) -> Result<()> {
    if basis.party_count() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}-party basis for a {n}-party state",
            basis.party_count()
        )));
    }
    Ok(())
}

/// `P(o|x)` for all outcome and input tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    party_count: usize,
    // input-major: values[x * 4^N + o]
    values: Vec<f64>,
}

impl ProbabilityTable {
    pub fn from_fn(party_count: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let cells = 4usize.pow(party_count as u32);
        let values = (0..cells * cells)
            .into_par_iter()
            .map(|k| f(k % cells, k / cells))
            .collect();
        Self {
            party_count,
            values,
        }
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    /// Number of outcome tuples (equal to the number of input tuples).
    pub fn cells(&self) -> usize {
        4usize.pow(self.party_count as u32)
    }

    pub fn get(&self, outcome: &[BellOutcome], input: &[usize]) -> f64 {
        self.by_index(outcome_index(outcome), crate::qcore::base4_index(input))
    }

    pub fn by_index(&self, outcome: usize, input: usize) -> f64 {
        self.values[input * self.cells() + outcome]
    }

    /// Outcome distribution for one input tuple.
    pub fn conditional(&self, input: usize) -> &[f64] {
        let n = self.cells();
        &self.values[input * n..(input + 1) * n]
    }

    /// Largest violation of the probability invariants: entries outside
    /// `[0, 1]` and rows not summing to one.
    pub fn normalization_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for x in 0..self.cells() {
            let row = self.conditional(x);
            err = err.max((row.iter().sum::<f64>() - 1.0).abs());
            for &p in row {
                err = err.max(-p).max(p - 1.0);
            }
        }
        err
    }

    /// `outcome_1..outcome_N, input_1..input_N, probability` with one-based
    /// labels.
    pub fn to_csv(&self) -> String {
        let n = self.party_count;
        let mut out = String::new();
        let header: Vec<String> = (1..=n)
            .map(|k| format!("outcome_{k}"))
            .chain((1..=n).map(|k| format!("input_{k}")))
            .chain(std::iter::once("probability".to_string()))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (o_flat, o) in (0..self.cells()).map(|f| (f, outcome_tuple(f, n))) {
            for (x_flat, x) in base4_tuples(n).enumerate() {
                let labels: Vec<String> = o
                    .iter()
                    .map(|v| v.label().to_string())
                    .chain(x.iter().map(|v| (v + 1).to_string()))
                    .collect();
                let _ = writeln!(
                    out,
                    "{},{}",
                    labels.join(","),
                    fmt_sig(self.by_index(o_flat, x_flat))
                );
            }
        }
        out
    }
}

/// `2^{-N}·Tr[⊗_k (τ^{i_k}_{k,x_k})ᵀ ρ]`, evaluated on the system space only.
pub fn ideal_probability(
    state: &DensityMatrix,
    basis: &AncillaBasis,
    outcome: &[BellOutcome],
    input: &[usize],
) -> Result<f64> {
    let n = party_count_of(state)?;
    check_basis(n, basis)?;
    check_tuples(n, outcome, input)?;
    let transformed = basis.transform(outcome)?;
    let element = transformed.product_element(input);
    Ok(trace_product(&element, state.matrix()).re / (1u64 << n) as f64)
}

/// `Tr[(⊗_k E_k^{(i_k)})(⊗_k τ_{k,x_k} ⊗ ρ)]` evaluated on the full
/// `2^{2N}`-dimensional joint space.
pub fn povm_probability(
    state: &DensityMatrix,
    basis: &AncillaBasis,
    povms: &[Povm],
    outcome: &[BellOutcome],
    input: &[usize],
    joint_space_cap: usize,
) -> Result<f64> {
    let n = party_count_of(state)?;
    if n > joint_space_cap {
        return Err(Error::JointSpaceCap {
            parties: n,
            cap: joint_space_cap,
        });
    }
    check_basis(n, basis)?;
    check_povms(povms, n)?;
    check_tuples(n, outcome, input)?;

    // (a_1..a_N, s_1..s_N) -> (a_1, s_1, ..., a_N, s_N)
    let ancillas = basis.joint_input(input);
    let joint = tensor_product(&ancillas, state.matrix());
    let order: Vec<usize> = (0..n).flat_map(|k| [k, n + k]).collect();
    let joint = permute_subsystems(&joint, &vec![2; 2 * n], &order)?;
    let effect = tensor_all(povms.iter().zip(outcome).map(|(p, o)| p.element(o.index())));
    Ok(trace_product(&effect, &joint).re)
}

#[inline]
fn bit(value: usize, k: usize, n: usize) -> usize {
    (value >> (n - 1 - k)) & 1
}

/// The untrusted-measurement map: `Tr_sys[(⊗_k E_k^{(i_k)})(I_anc ⊗ ρ)]`,
/// an unnormalized positive operator on the ancilla space.
pub fn apply_map_m(
    state: &DensityMatrix,
    povms: &[Povm],
    outcome: &[BellOutcome],
) -> Result<ComplexMatrix> {
    let n = party_count_of(state)?;
    check_povms(povms, n)?;
    if outcome.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "outcome tuple of length {} for {n} parties",
            outcome.len()
        )));
    }
    Ok(map_operator(state.matrix(), povms, outcome, n))
}

// M[a,a'] = Σ_{s,s'} Π_k E_k[(a_k s_k),(a'_k s'_k)] ρ[s',s]
pub(crate) fn map_operator(
    rho: &ComplexMatrix,
    povms: &[Povm],
    outcome: &[BellOutcome],
    n: usize,
) -> ComplexMatrix {
    let d = 1usize << n;
    let effects: Vec<&ComplexMatrix> = povms
        .iter()
        .zip(outcome)
        .map(|(p, o)| p.element(o.index()))
        .collect();
    let mut out = ComplexMatrix::zeros(d, d);
    for a in 0..d {
        for a2 in 0..d {
            let mut acc = ZERO;
            for s in 0..d {
                for s2 in 0..d {
                    let r = rho[(s2, s)];
                    if r == ZERO {
                        continue;
                    }
                    let mut f: C64 = r;
                    for (k, e) in effects.iter().enumerate() {
                        let row = bit(a, k, n) * 2 + bit(s, k, n);
                        let col = bit(a2, k, n) * 2 + bit(s2, k, n);
                        f *= e[(row, col)];
                    }
                    acc += f;
                }
            }
            out[(a, a2)] = acc;
        }
    }
    out
}

/// Table under an ideal Bell measurement.
pub fn ideal_table(state: &DensityMatrix, basis: &AncillaBasis) -> Result<ProbabilityTable> {
    let n = party_count_of(state)?;
    check_basis(n, basis)?;
    let cells = 4usize.pow(n as u32);
    let transformed: Vec<AncillaBasis> = (0..cells)
        .map(|o| basis.transform(&outcome_tuple(o, n)))
        .collect::<Result<_>>()?;
    let inputs: Vec<Vec<usize>> = base4_tuples(n).collect();
    let scale = 1.0 / (1u64 << n) as f64;
    Ok(ProbabilityTable::from_fn(n, |o, x| {
        trace_product(&transformed[o].product_element(&inputs[x]), state.matrix()).re * scale
    }))
}

/// Table under arbitrary per-party POVMs, via `P(o|x) = Tr[(⊗τ_x)·M_o(ρ)]`.
pub fn povm_table(
    state: &DensityMatrix,
    basis: &AncillaBasis,
    povms: &[Povm],
) -> Result<ProbabilityTable> {
    let n = party_count_of(state)?;
    check_basis(n, basis)?;
    check_povms(povms, n)?;
    let cells = 4usize.pow(n as u32);
    let mapped: Vec<ComplexMatrix> = (0..cells)
        .into_par_iter()
        .map(|o| map_operator(state.matrix(), povms, &outcome_tuple(o, n), n))
        .collect();
    let inputs: Vec<ComplexMatrix> = base4_tuples(n).map(|x| basis.joint_input(&x)).collect();
    Ok(ProbabilityTable::from_fn(n, |o, x| {
        trace_product(&inputs[x], &mapped[o]).re
    }))
}

pub fn probability_table(
    state: &DensityMatrix,
    basis: &AncillaBasis,
    model: &MeasurementModel,
) -> Result<ProbabilityTable> {
    match model {
        MeasurementModel::IdealBsm => ideal_table(state, basis),
        MeasurementModel::PerPartyPovm(povms) => povm_table(state, basis, povms),
    }
}

/// `Σ_{o,x} β^o_x P(o|x)` over every outcome tuple.
pub fn mdiew_value(table: &ProbabilityTable, coeffs: &OutcomeCoefficientTable) -> Result<f64> {
    if table.party_count() != coeffs.party_count() {
        return Err(Error::ShapeMismatch(format!(
            "{}-party table with {}-party coefficients",
            table.party_count(),
            coeffs.party_count()
        )));
    }
    let cells = table.cells();
    let mut total = 0.0;
    for o in 0..cells {
        let beta = coeffs.by_index(o).values();
        for (x, &b) in beta.iter().enumerate() {
            total += b * table.by_index(o, x);
        }
    }
    Ok(total)
}

/// `Σ_x β_x P(1,…,1|x)`: the original scheme, which keeps only the
/// all-φ⁺ outcome.
pub fn single_outcome_value(table: &ProbabilityTable, coeffs: &CoefficientTensor) -> Result<f64> {
    if table.party_count() != coeffs.party_count() {
        return Err(Error::ShapeMismatch(format!(
            "{}-party table with {}-party coefficients",
            table.party_count(),
            coeffs.party_count()
        )));
    }
    Ok(coeffs
        .values()
        .iter()
        .enumerate()
        .map(|(x, &b)| b * table.by_index(0, x))
        .sum())
}

/// `2^N·Tr[Wρ]`, the value an ideal measurement must reproduce.
pub fn ideal_value_closed_form(w: &crate::witness::Witness, state: &DensityMatrix) -> f64 {
    (1u64 << w.party_count()) as f64 * w.expectation(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{
        c, frobenius_norm, identity, max_abs_diff, min_eigenvalue, transpose, BellOutcome::*,
    };
    use crate::states::{noisy_bsm, random_density, random_party_povms, werner, Seed};
    use crate::witness::{outcome_coefficients, Witness};

    #[test]
    fn singlet_with_mixed_inputs_is_uniform() {
        let s = werner(1.0).unwrap();
        let b = AncillaBasis::default_basis(2);
        for o in 0..16 {
            let p = ideal_probability(&s, &b, &outcome_tuple(o, 2), &[0, 0]).unwrap();
            assert!((p - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn singlet_z_inputs_forbid_phi_plus_pair() {
        let s = werner(1.0).unwrap();
        let b = AncillaBasis::default_basis(2);
        assert!(
            ideal_probability(&s, &b, &[PhiPlus, PhiPlus], &[3, 3])
                .unwrap()
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn ideal_matches_joint_space() {
        let mut rng = Seed(21).rng();
        for n in 1..=3 {
            let b = AncillaBasis::default_basis(n);
            let ideal = vec![Povm::ideal_bsm(); n];
            for _ in 0..3 {
                let rho = random_density(1 << n, &mut rng);
                for (o_flat, x) in [
                    (0usize, vec![0usize; n]),
                    (4usize.pow(n as u32) - 1, vec![2; n]),
                    (1, vec![3; n]),
                ] {
                    let o = outcome_tuple(o_flat, n);
                    let a = ideal_probability(&rho, &b, &o, &x).unwrap();
                    let j = povm_probability(&rho, &b, &ideal, &o, &x, DEFAULT_JOINT_SPACE_CAP)
                        .unwrap();
                    assert!((a - j).abs() < 1e-12, "n={n} o={o:?} x={x:?}: {a} vs {j}");
                }
            }
        }
    }

    #[test]
    fn depolarized_measurement_is_flat() {
        let mut rng = Seed(22).rng();
        let rho = random_density(4, &mut rng);
        let b = AncillaBasis::default_basis(2);
        let flat = vec![noisy_bsm(0.0).unwrap(); 2];
        for o in 0..16 {
            let p = povm_probability(&rho, &b, &flat, &outcome_tuple(o, 2), &[1, 2], 4).unwrap();
            assert!((p - 1.0 / 16.0).abs() < 1e-14);
        }
    }

    #[test]
    fn joint_space_cap_enforced() {
        let rho = DensityMatrix::maximally_mixed(8);
        let b = AncillaBasis::default_basis(3);
        let povms = vec![Povm::ideal_bsm(); 3];
        let err = povm_probability(&rho, &b, &povms, &[PhiPlus; 3], &[0; 3], 2).unwrap_err();
        assert!(matches!(err, Error::JointSpaceCap { parties: 3, cap: 2 }));
    }

    #[test]
    fn povm_table_matches_joint_space_and_normalizes() {
        let mut rng = Seed(23).rng();
        let rho = random_density(4, &mut rng);
        let b = AncillaBasis::default_basis(2);
        let povms = random_party_povms(2, &mut rng).unwrap();
        let t = povm_table(&rho, &b, &povms).unwrap();
        assert!(t.normalization_error() < 1e-9);
        for o in 0..16 {
            for (xf, x) in base4_tuples(2).enumerate() {
                let j = povm_probability(&rho, &b, &povms, &outcome_tuple(o, 2), &x, 4).unwrap();
                assert!((t.by_index(o, xf) - j).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn werner_closed_form() {
        let b = AncillaBasis::default_basis(2);
        let coeffs = outcome_coefficients(&Witness::werner(), &b).unwrap();
        for p in [0.0, 1.0 / 3.0, 0.6, 1.0] {
            let t = ideal_table(&werner(p).unwrap(), &b).unwrap();
            assert!((mdiew_value(&t, &coeffs).unwrap() - (1.0 - 3.0 * p)).abs() < 1e-9);
            let single = single_outcome_value(&t, coeffs.get(&[PhiPlus, PhiPlus])).unwrap();
            assert!((single - (1.0 - 3.0 * p) / 16.0).abs() < 1e-9);
        }
    }

    #[test]
    fn product_zero_state_value() {
        let b = AncillaBasis::default_basis(2);
        let coeffs = outcome_coefficients(&Witness::werner(), &b).unwrap();
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = c(1.0, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        let t = ideal_table(&rho, &b).unwrap();
        // direct evaluation of the double sum
        let mut direct = 0.0;
        for (o, beta) in coeffs.iter() {
            for x in base4_tuples(2) {
                direct += beta.get(&x) * ideal_probability(&rho, &b, &o, &x).unwrap();
            }
        }
        assert!((direct - 2.0).abs() < 1e-12);
        assert!((mdiew_value(&t, &coeffs).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_outcome_on_mixed_state() {
        let b = AncillaBasis::default_basis(2);
        let w = Witness::werner();
        let coeffs = outcome_coefficients(&w, &b).unwrap();
        let t = ideal_table(&DensityMatrix::maximally_mixed(4), &b).unwrap();
        let beta = coeffs.get(&[PhiPlus, PhiPlus]);
        let direct: f64 = base4_tuples(2)
            .map(|x| beta.get(&x) * t.get(&[PhiPlus, PhiPlus], &x))
            .sum();
        let trace_w = crate::qcore::trace(w.operator()).re;
        let got = single_outcome_value(&t, beta).unwrap();
        assert!((got - direct).abs() < 1e-14);
        assert!((got - trace_w / 16.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_map_is_transpose() {
        let mut rng = Seed(24).rng();
        for n in 1..=3 {
            let rho = random_density(1 << n, &mut rng);
            let ideal = vec![Povm::ideal_bsm(); n];
            let m = apply_map_m(&rho, &ideal, &vec![PhiPlus; n]).unwrap();
            let want = transpose(rho.matrix()) * c(1.0 / (1 << n) as f64, 0.0);
            assert!(max_abs_diff(&m, &want) < 1e-12);
        }
    }

    #[test]
    fn map_outputs_positive_and_complete() {
        let mut rng = Seed(25).rng();
        let rho = random_density(8, &mut rng);
        let povms = random_party_povms(3, &mut rng).unwrap();
        let mut total = ComplexMatrix::zeros(8, 8);
        for o in 0..64 {
            let m = apply_map_m(&rho, &povms, &outcome_tuple(o, 3)).unwrap();
            assert!(min_eigenvalue(&m).unwrap() > -1e-10);
            total += m;
        }
        // completeness: P(·|x) sums to one for every input, so Σ_o M_o(ρ) = I
        assert!(frobenius_norm(&(total - identity(8))) < 1e-9);
    }

    #[test]
    fn map_factorizes_on_products() {
        let mut rng = Seed(26).rng();
        let a = random_density(2, &mut rng);
        let bst = random_density(2, &mut rng);
        let rho = DensityMatrix::new(tensor_product(a.matrix(), bst.matrix())).unwrap();
        let povms = random_party_povms(2, &mut rng).unwrap();
        let o = [PsiPlus, PhiMinus];
        let joint = apply_map_m(&rho, &povms, &o).unwrap();
        let ma = apply_map_m(&a, &povms[..1], &o[..1]).unwrap();
        let mb = apply_map_m(&bst, &povms[1..], &o[1..]).unwrap();
        assert!(frobenius_norm(&(joint - tensor_product(&ma, &mb))) < 1e-12);
    }

    #[test]
    fn ideal_identity_random_projector_witnesses() {
        let mut rng = Seed(27).rng();
        for n in 2..=3 {
            let b = AncillaBasis::default_basis(n);
            for _ in 0..3 {
                let psi = crate::states::random_pure_vector(1 << n, &mut rng);
                let w = crate::witness::projector_witness(
                    "rand",
                    &psi,
                    0.5,
                    crate::witness::SeparableClass::FullySeparable,
                )
                .unwrap();
                let rho = random_density(1 << n, &mut rng);
                let coeffs = outcome_coefficients(&w, &b).unwrap();
                let t = ideal_table(&rho, &b).unwrap();
                let got = mdiew_value(&t, &coeffs).unwrap();
                assert!((got - ideal_value_closed_form(&w, &rho)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let t = ideal_table(
            &DensityMatrix::maximally_mixed(2),
            &AncillaBasis::default_basis(1),
        )
        .unwrap();
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "outcome_1,input_1,probability");
        assert_eq!(lines.len(), 17);
        assert!(lines[1].starts_with("1,1,2.5"));
    }

    #[test]
    fn shape_mismatches() {
        let b2 = AncillaBasis::default_basis(2);
        let t = ideal_table(&DensityMatrix::maximally_mixed(4), &b2).unwrap();
        let c3 = outcome_coefficients(
            &Witness::w_state(2.0 / 3.0).unwrap(),
            &AncillaBasis::default_basis(3),
        )
        .unwrap();
        assert!(mdiew_value(&t, &c3).is_err());
        assert!(ideal_table(&DensityMatrix::maximally_mixed(8), &b2).is_err());
        assert!(apply_map_m(
            &DensityMatrix::maximally_mixed(4),
            &[Povm::ideal_bsm()],
            &[PhiPlus, PhiPlus]
        )
        .is_err());
    }
}
