//! Witness operators and their expansion over products of ancilla states.
//!
//! For an outcome tuple `(i_1, …, i_N)` every ancilla state is conjugated by
//! the matching Bell correction, `τ^i = m_i τ m_i†`, and the witness is
//! expanded as `W = Σ_x β_x ⊗_k (τ^{i_k}_{k,x_k})ᵀ`. The coefficients are
//! found by a plain linear solve over the `d²` real coordinates of a
//! Hermitian operator (diagonal real parts, then real and imaginary parts of
//! the strict upper triangle).
//!
//! Coefficient tensors are indexed by the input tuple with party 1 most
//! significant, so a bipartite tensor reads as a 4×4 matrix with rows `x_1`
//! and columns `x_2`.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::qcore::{
    base4_index, base4_tuples, c, dagger, frobenius_norm, hermitian_deviation, identity,
    min_eigenvalue, outcome_index, outcome_tuple, pauli, tensor_all, trace_product, transpose,
    BellOutcome, ComplexMatrix, DensityMatrix, PauliIndex, C64, STATE_TOL,
};
use crate::structure::Partition;

/// Residual bound for a successful decomposition.
pub const DECOMPOSE_RESIDUAL_TOL: f64 = 1e-9;
/// Condition estimate above which the basis is treated as not spanning.
pub const MAX_CONDITION: f64 = 1e12;
/// Minimum per-party Gram determinant of an ancilla basis.
pub const MIN_GRAM_DET: f64 = 1e-8;

/// The class of states a witness is guaranteed nonnegative on.
#[derive(Debug, Clone, PartialEq)]
pub enum SeparableClass {
    FullySeparable,
    Bipartition(Partition),
    KProducible(usize),
}

impl fmt::Display for SeparableClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeparableClass::FullySeparable => write!(f, "fully-separable"),
            SeparableClass::Bipartition(p) => write!(f, "bipartition {p}"),
            SeparableClass::KProducible(k) => write!(f, "{k}-producible"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Witness {
    name: String,
    party_count: usize,
    operator: ComplexMatrix,
    class: SeparableClass,
}

impl Witness {
    pub fn new(
        name: impl Into<String>,
        party_count: usize,
        operator: ComplexMatrix,
        class: SeparableClass,
    ) -> Result<Self> {
        let d = 1usize << party_count;
        if party_count == 0 || operator.nrows() != d || operator.ncols() != d {
            return Err(Error::InvalidWitness(format!(
                "{party_count}-party witness needs a {d}x{d} operator, got {:?}",
                operator.shape()
            )));
        }
        let dev = hermitian_deviation(&operator);
        if dev > STATE_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let lambda = min_eigenvalue(&operator)?;
        if lambda >= -STATE_TOL {
            return Err(Error::InvalidWitness(format!(
                "operator is positive semidefinite (smallest eigenvalue {lambda:.3e}) and detects nothing"
            )));
        }
        if let SeparableClass::Bipartition(p) = &class {
            if p.party_count() != party_count {
                return Err(Error::InvalidWitness(
                    "bipartition covers the wrong number of parties".into(),
                ));
            }
            if p.blocks().len() < 2 {
                return Err(Error::InvalidWitness(
                    "a single block admits every state".into(),
                ));
            }
        }
        if let SeparableClass::KProducible(k) = class {
            if k == 0 || k > party_count {
                return Err(Error::InvalidWitness(format!(
                    "{k}-producibility is meaningless for {party_count} parties"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            party_count,
            operator,
            class,
        })
    }

    /// `I/2 - |ψ⁻⟩⟨ψ⁻|`, nonnegative on all two-qubit separable states.
    pub fn werner() -> Self {
        projector_witness(
            "werner",
            &crate::states::singlet_vector(),
            0.5,
            SeparableClass::FullySeparable,
        )
        .expect("Werner witness is valid")
    }

    /// `I/2 - |GHZ⟩⟨GHZ|`: no biseparable state has GHZ fidelity above 1/2,
    /// so the witness holds on every bipartition.
    pub fn ghz(party_count: usize, class: SeparableClass) -> Result<Self> {
        projector_witness(
            format!("ghz-{party_count}"),
            &crate::states::ghz_vector(party_count),
            0.5,
            class,
        )
    }

    /// `α - |W⟩⟨W|` with the class implied by the two standard thresholds:
    /// `α = 2/3` bounds biseparable (2-producible) states, `α = 4/9` fully
    /// separable ones. Any other α is declared fully separable only when
    /// `α ≥ 4/9`.
    pub fn w_state(alpha: f64) -> Result<Self> {
        let class = if alpha >= 2.0 / 3.0 - 1e-12 {
            SeparableClass::KProducible(2)
        } else if alpha >= 4.0 / 9.0 - 1e-12 {
            SeparableClass::FullySeparable
        } else {
            return Err(Error::OutOfRange(format!(
                "α = {alpha} is below 4/9; the W witness is not nonnegative on any standard class"
            )));
        };
        projector_witness(
            format!("w-state(alpha={alpha})"),
            &crate::states::w_state_vector(),
            alpha,
            class,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn operator(&self) -> &ComplexMatrix {
        &self.operator
    }

    pub fn class(&self) -> &SeparableClass {
        &self.class
    }

    /// `Tr[Wρ]`.
    pub fn expectation(&self, rho: &DensityMatrix) -> f64 {
        trace_product(&self.operator, rho.matrix()).re
    }
}

/// `α·I - |ψ⟩⟨ψ|`.
pub fn projector_witness(
    name: impl Into<String>,
    psi: &[C64],
    alpha: f64,
    class: SeparableClass,
) -> Result<Witness> {
    let d = psi.len();
    if !d.is_power_of_two() || d < 2 {
        return Err(Error::InvalidWitness(format!(
            "state vector length {d} is not a qubit register"
        )));
    }
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidWitness(format!(
            "state vector has norm {norm}"
        )));
    }
    let v = nalgebra::DVector::from_column_slice(psi);
    let op = identity(d) * c(alpha, 0.0) - &v * v.adjoint();
    Witness::new(name, d.trailing_zeros() as usize, op, class)
}

/// Per-party sets of four ancilla states spanning the single-qubit Hermitian
/// operators.
#[derive(Debug, Clone, PartialEq)]
pub struct AncillaBasis {
    parties: Vec<[DensityMatrix; 4]>,
}

fn gram_determinant(states: &[DensityMatrix; 4]) -> f64 {
    let g = DMatrix::from_fn(4, 4, |a, b| {
        trace_product(states[a].matrix(), states[b].matrix()).re
    });
    g.determinant()
}

impl AncillaBasis {
    pub fn new(parties: Vec<[DensityMatrix; 4]>) -> Result<Self> {
        if parties.is_empty() {
            return Err(Error::InvalidBasis("no parties".into()));
        }
        for (k, set) in parties.iter().enumerate() {
            if set.iter().any(|s| s.dim() != 2) {
                return Err(Error::InvalidBasis(format!(
                    "party {} has a non-qubit ancilla",
                    k + 1
                )));
            }
            let det = gram_determinant(set);
            if det.abs() <= MIN_GRAM_DET {
                return Err(Error::InvalidBasis(format!(
                    "party {} ancillas are not linearly independent (Gram determinant {det:.3e})",
                    k + 1
                )));
            }
        }
        Ok(Self { parties })
    }

    /// `I/2, (I+σ_x)/2, (I+σ_y)/2, (I+σ_z)/2` for every party.
    pub fn default_basis(party_count: usize) -> Self {
        let half = c(0.5, 0.0);
        let id = pauli(PauliIndex::I);
        let set = [
            DensityMatrix::new(&id * half).unwrap(),
            DensityMatrix::new((&id + pauli(PauliIndex::X)) * half).unwrap(),
            DensityMatrix::new((&id + pauli(PauliIndex::Y)) * half).unwrap(),
            DensityMatrix::new((&id + pauli(PauliIndex::Z)) * half).unwrap(),
        ];
        Self {
            parties: vec![set; party_count.max(1)],
        }
    }

    pub fn party_count(&self) -> usize {
        self.parties.len()
    }

    pub fn state(&self, party: usize, x: usize) -> &DensityMatrix {
        &self.parties[party][x]
    }

    pub fn party(&self, party: usize) -> &[DensityMatrix; 4] {
        &self.parties[party]
    }

    /// Conjugates party `k`'s states by `m_{i_k}`.
    pub fn transform(&self, outcome: &[BellOutcome]) -> Result<Self> {
        if outcome.len() != self.party_count() {
            return Err(Error::ShapeMismatch(format!(
                "outcome tuple of length {} for a {}-party basis",
                outcome.len(),
                self.party_count()
            )));
        }
        let parties = self
            .parties
            .iter()
            .zip(outcome)
            .map(|(set, &o)| {
                let m = o.local_unitary();
                let md = dagger(&m);
                set.clone().map(|s| {
                    DensityMatrix::new(&m * s.matrix() * &md)
                        .expect("unitary conjugation keeps a state")
                })
            })
            .collect();
        Ok(Self { parties })
    }

    /// `⊗_k τ_{k,x_k}` (untransposed), the joint ancilla input for tuple `x`.
    pub fn joint_input(&self, input: &[usize]) -> ComplexMatrix {
        tensor_all(
            input
                .iter()
                .enumerate()
                .map(|(k, &x)| self.parties[k][x].matrix()),
        )
    }

    /// `⊗_k τ_{k,x_k}ᵀ`.
    pub fn product_element(&self, input: &[usize]) -> ComplexMatrix {
        let factors: Vec<ComplexMatrix> = input
            .iter()
            .enumerate()
            .map(|(k, &x)| transpose(self.parties[k][x].matrix()))
            .collect();
        tensor_all(factors.iter())
    }
}

/// Real coefficients `β_{x_1…x_N}` for one outcome tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTensor {
    party_count: usize,
    values: Vec<f64>,
}

impl CoefficientTensor {
    pub fn zeros(party_count: usize) -> Self {
        Self {
            party_count,
            values: vec![0.0; 4usize.pow(party_count as u32)],
        }
    }

    pub fn from_values(party_count: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 4usize.pow(party_count as u32) {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for {party_count} parties",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch("non-finite coefficient".into()));
        }
        Ok(Self {
            party_count,
            values,
        })
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    /// Flat values, first party's index most significant.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Zero-based input tuple.
    pub fn get(&self, input: &[usize]) -> f64 {
        self.values[base4_index(input)]
    }

    /// 4×4 view with the remaining indices fixed: rows and columns run over
    /// the first two parties, `rest` fixes parties 3..N.
    pub fn slice(&self, rest: &[usize]) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                let mut idx = vec![a, b];
                idx.extend_from_slice(rest);
                *v = self.get(&idx);
            }
        }
        out
    }

    /// Nested arrays `[x_1][x_2]…[x_N]`. Numbers are written in shortest
    /// round-trip form, so no precision is lost.
    pub fn to_json(&self) -> Value {
        fn nest(values: &[f64], depth: usize) -> Value {
            if depth == 0 {
                return serde_json::json!(values[0]);
            }
            let chunk = values.len() / 4;
            Value::Array(values.chunks(chunk).map(|c| nest(c, depth - 1)).collect())
        }
        nest(&self.values, self.party_count)
    }
}

/// `β^{i_1…i_N}` for all `4^N` outcome tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeCoefficientTable {
    party_count: usize,
    entries: Vec<CoefficientTensor>,
}

impl OutcomeCoefficientTable {
    pub fn new(party_count: usize, entries: Vec<CoefficientTensor>) -> Result<Self> {
        if entries.len() != 4usize.pow(party_count as u32)
            || entries.iter().any(|e| e.party_count != party_count)
        {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficient tensors for {party_count} parties",
                entries.len()
            )));
        }
        Ok(Self {
            party_count,
            entries,
        })
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, outcome: &[BellOutcome]) -> &CoefficientTensor {
        &self.entries[outcome_index(outcome)]
    }

    pub fn get_mut(&mut self, outcome: &[BellOutcome]) -> &mut CoefficientTensor {
        &mut self.entries[outcome_index(outcome)]
    }

    pub fn by_index(&self, flat: usize) -> &CoefficientTensor {
        &self.entries[flat]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<BellOutcome>, &CoefficientTensor)> {
        let n = self.party_count;
        self.entries
            .iter()
            .enumerate()
            .map(move |(flat, t)| (outcome_tuple(flat, n), t))
    }

    /// Object keyed by `"i1,i2,…"` (one-based labels).
    pub fn to_json(&self) -> Value {
        let map = self
            .iter()
            .map(|(o, t)| (crate::io::outcome_key(&o), t.to_json()))
            .collect();
        Value::Object(map)
    }
}

fn hermitian_coordinates(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in i + 1..d {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}

fn check_outcome(basis: &AncillaBasis, outcome: &[BellOutcome]) -> Result<()> {
    if outcome.len() != basis.party_count() {
        return Err(Error::ShapeMismatch(format!(
            "outcome tuple of length {} for {} parties",
            outcome.len(),
            basis.party_count()
        )));
    }
    Ok(())
}

/// Expands any Hermitian operator on `N` qubits over the transformed product
/// basis for `outcome`.
pub fn decompose_operator(
    operator: &ComplexMatrix,
    basis: &AncillaBasis,
    outcome: &[BellOutcome],
) -> Result<CoefficientTensor> {
    check_outcome(basis, outcome)?;
    let n = basis.party_count();
    let d = 1usize << n;
    if operator.nrows() != d || operator.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "operator is {:?}, basis spans {d}x{d}",
            operator.shape()
        )));
    }
    let dev = hermitian_deviation(operator);
    if dev > STATE_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let transformed = basis.transform(outcome)?;
    let tuples: Vec<Vec<usize>> = base4_tuples(n).collect();
    let size = d * d;
    let mut system = DMatrix::<f64>::zeros(size, size);
    for (col, x) in tuples.iter().enumerate() {
        for (row, v) in hermitian_coordinates(&transformed.product_element(x))
            .into_iter()
            .enumerate()
        {
            system[(row, col)] = v;
        }
    }
    let rhs = nalgebra::DVector::from_vec(hermitian_coordinates(operator));

    let inverse = system
        .clone()
        .try_inverse()
        .ok_or(Error::SingularSystem(f64::INFINITY))?;
    let norm1 = |m: &DMatrix<f64>| {
        m.column_iter()
            .map(|col| col.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let cond = norm1(&system) * norm1(&inverse);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::SingularSystem(cond));
    }
    let beta = inverse * rhs;
    let coeffs = CoefficientTensor::from_values(n, beta.iter().copied().collect())?;

    let residual = frobenius_norm(&(reconstruct(&coeffs, basis, outcome)? - operator));
    if residual > DECOMPOSE_RESIDUAL_TOL {
        return Err(Error::SingularSystem(cond));
    }
    Ok(coeffs)
}

pub fn decompose(
    w: &Witness,
    basis: &AncillaBasis,
    outcome: &[BellOutcome],
) -> Result<CoefficientTensor> {
    if w.party_count() != basis.party_count() {
        return Err(Error::ShapeMismatch(format!(
            "{}-party witness with a {}-party basis",
            w.party_count(),
            basis.party_count()
        )));
    }
    decompose_operator(w.operator(), basis, outcome)
}

/// Decomposes the witness for every outcome tuple.
pub fn outcome_coefficients(w: &Witness, basis: &AncillaBasis) -> Result<OutcomeCoefficientTable> {
    let n = w.party_count();
    let entries = (0..4usize.pow(n as u32))
        .into_par_iter()
        .map(|flat| decompose(w, basis, &outcome_tuple(flat, n)))
        .collect::<Result<Vec<_>>>()?;
    OutcomeCoefficientTable::new(n, entries)
}

/// `Σ_x β_x ⊗_k (τ^{i_k}_{k,x_k})ᵀ`.
pub fn reconstruct(
    coeffs: &CoefficientTensor,
    basis: &AncillaBasis,
    outcome: &[BellOutcome],
) -> Result<ComplexMatrix> {
    check_outcome(basis, outcome)?;
    if coeffs.party_count() != basis.party_count() {
        return Err(Error::ShapeMismatch(format!(
            "{}-party coefficients with a {}-party basis",
            coeffs.party_count(),
            basis.party_count()
        )));
    }
    let n = basis.party_count();
    let d = 1usize << n;
    let transformed = basis.transform(outcome)?;
    let mut acc = ComplexMatrix::zeros(d, d);
    for x in base4_tuples(n) {
        let beta = coeffs.get(&x);
        if beta != 0.0 {
            acc += transformed.product_element(&x) * c(beta, 0.0);
        }
    }
    Ok(acc)
}
