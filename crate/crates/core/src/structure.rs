//! Partitions, producibility certificates and the sampling harnesses that
//! check witness values stay nonnegative on a declared class under arbitrary
//! measurements.
//!
//! Structure is only ever known from the certificate a state was generated
//! with; nothing here tries to decide separability of a raw density matrix.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::{ideal_table, mdiew_value, povm_table, ProbabilityTable};
use crate::qcore::{
    identity, partial_trace, permute_subsystems, tensor_all, tensor_product, BellOutcome,
    ComplexMatrix, DensityMatrix,
};
use crate::states::{
    noisy_bsm, random_k_producible_with, random_partitioned, random_party_povms, Block,
    Certificate, Povm, ProductTerm, Seed, StructuredState, GENERATOR_NAME,
};
use crate::witness::{outcome_coefficients, AncillaBasis, SeparableClass, Witness};

/// Value below which a harness trial counts as a violation.
pub const VIOLATION_TOL: f64 = -1e-7;

/// Disjoint nonempty blocks covering parties `0..party_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    party_count: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(party_count: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; party_count];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            block.sort_unstable();
            for &p in block.iter() {
                if p >= party_count {
                    return Err(Error::InvalidPartition(format!(
                        "party {} out of range",
                        p + 1
                    )));
                }
                if std::mem::replace(&mut seen[p], true) {
                    return Err(Error::InvalidPartition(format!(
                        "party {} appears twice",
                        p + 1
                    )));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!(
                "party {} is not covered",
                missing + 1
            )));
        }
        Ok(Self {
            party_count,
            blocks,
        })
    }

    /// Contiguous blocks of the given sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidPartition("empty partition".into()));
        }
        let mut next = 0;
        let blocks = sizes
            .iter()
            .map(|&s| {
                let b: Vec<usize> = (next..next + s).collect();
                next += s;
                b
            })
            .collect();
        Self::new(next, blocks)
    }

    pub fn singletons(party_count: usize) -> Self {
        Self {
            party_count,
            blocks: (0..party_count).map(|p| vec![p]).collect(),
        }
    }

    /// `{1..k}{k+1..N}`.
    pub fn bipartition(k: usize, party_count: usize) -> Result<Self> {
        if k == 0 || k >= party_count {
            return Err(Error::InvalidPartition(format!(
                "cannot split {party_count} parties after party {k}"
            )));
        }
        Self::from_sizes(&[k, party_count - k])
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn max_block(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.blocks {
            let labels: Vec<String> = b.iter().map(|p| (p + 1).to_string()).collect();
            write!(f, "{{{}}}", labels.join(","))?;
        }
        Ok(())
    }
}

/// "The state is k-producible", i.e. has entanglement depth at most `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DepthClaim {
    k: usize,
}

impl DepthClaim {
    pub fn new(k: usize, party_count: usize) -> Result<Self> {
        if k == 0 || k > party_count {
            return Err(Error::OutOfRange(format!(
                "depth {k} for {party_count} parties"
            )));
        }
        Ok(Self { k })
    }

    pub fn k(self) -> usize {
        self.k
    }
}

/// Largest block over all certificate terms.
pub fn certificate_depth(s: &StructuredState) -> usize {
    s.certificate().max_block_size()
}

pub fn certified_claim(s: &StructuredState) -> Result<DepthClaim> {
    DepthClaim::new(certificate_depth(s), s.party_count())
}

/// Generator of certificate-bearing states from one structure class.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassSampler {
    FullySeparable { parties: usize },
    Bipartition(Partition),
    KProducible { parties: usize, k: usize },
}

impl ClassSampler {
    pub fn for_witness(w: &Witness) -> Self {
        let n = w.party_count();
        match w.class() {
            SeparableClass::FullySeparable => ClassSampler::FullySeparable { parties: n },
            SeparableClass::Bipartition(p) => ClassSampler::Bipartition(p.clone()),
            SeparableClass::KProducible(k) => ClassSampler::KProducible { parties: n, k: *k },
        }
    }

    pub fn party_count(&self) -> usize {
        match self {
            ClassSampler::FullySeparable { parties }
            | ClassSampler::KProducible { parties, .. } => *parties,
            ClassSampler::Bipartition(p) => p.party_count(),
        }
    }

    /// Whether every sampled state lies in `class`.
    pub fn within(&self, class: &SeparableClass) -> bool {
        match (self, class) {
            (ClassSampler::FullySeparable { .. }, _) => true,
            (ClassSampler::KProducible { k, .. }, SeparableClass::KProducible(bound)) => k <= bound,
            (ClassSampler::KProducible { k: 1, .. }, _) => true,
            (ClassSampler::Bipartition(p), SeparableClass::Bipartition(q)) => p == q,
            // every block of a bipartition is bounded by the larger side
            (ClassSampler::Bipartition(p), SeparableClass::KProducible(bound)) => {
                p.max_block() <= *bound
            }
            _ => false,
        }
    }

    /// Mixture of one to four product terms.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<StructuredState> {
        let terms = rng.random_range(1..=4);
        match self {
            ClassSampler::FullySeparable { parties } => {
                random_partitioned(&Partition::singletons(*parties), terms, rng)
            }
            ClassSampler::Bipartition(p) => random_partitioned(p, terms, rng),
            ClassSampler::KProducible { parties, k } => {
                random_k_producible_with(*parties, *k, terms, rng)
            }
        }
    }
}

impl fmt::Display for ClassSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassSampler::FullySeparable { parties } => {
                write!(f, "fully-separable ({parties} parties)")
            }
            ClassSampler::Bipartition(p) => write!(f, "bipartition {p}"),
            ClassSampler::KProducible { parties, k } => {
                write!(f, "{k}-producible ({parties} parties)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HarnessMeasurement {
    Ideal,
    /// Fresh random 4-outcome POVMs per party and trial.
    RandomPovm,
    NoisyBsm(f64),
}

impl fmt::Display for HarnessMeasurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessMeasurement::Ideal => write!(f, "ideal-bsm"),
            HarnessMeasurement::RandomPovm => write!(f, "random-povm"),
            HarnessMeasurement::NoisyBsm(v) => write!(f, "noisy-bsm(v={v})"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarnessReport {
    pub witness: String,
    pub class: String,
    pub measurement: String,
    pub trials: usize,
    pub min_value: f64,
    pub violations: usize,
    pub seed: u64,
    pub generator_name: String,
}

impl HarnessReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn table_for<R: Rng + ?Sized>(
    state: &DensityMatrix,
    basis: &AncillaBasis,
    measurement: &HarnessMeasurement,
    rng: &mut R,
) -> Result<ProbabilityTable> {
    let n = basis.party_count();
    match measurement {
        HarnessMeasurement::Ideal => ideal_table(state, basis),
        HarnessMeasurement::RandomPovm => povm_table(state, basis, &random_party_povms(n, rng)?),
        HarnessMeasurement::NoisyBsm(v) => povm_table(state, basis, &vec![noisy_bsm(*v)?; n]),
    }
}

/// Samples `trials` states from `sampler`, measures them with the chosen
/// device model and records the smallest all-outcome witness value.
pub fn structure_witness_check(
    w: &Witness,
    sampler: &ClassSampler,
    measurement: &HarnessMeasurement,
    trials: usize,
    seed: Seed,
) -> Result<HarnessReport> {
    if sampler.party_count() != w.party_count() || !sampler.within(w.class()) {
        return Err(Error::InvalidWitness(format!(
            "witness declared on {} cannot be checked against {sampler}",
            w.class()
        )));
    }
    let basis = AncillaBasis::default_basis(w.party_count());
    let coeffs = outcome_coefficients(w, &basis)?;
    let values = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = seed.stream(trial as u64);
            let s = sampler.sample(&mut rng)?;
            let table = table_for(s.state(), &basis, measurement, &mut rng)?;
            mdiew_value(&table, &coeffs)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(HarnessReport {
        witness: w.name().to_string(),
        class: sampler.to_string(),
        measurement: measurement.to_string(),
        trials,
        min_value: values.iter().copied().fold(f64::INFINITY, f64::min),
        violations: values.iter().filter(|&&v| v < VIOLATION_TOL).count(),
        seed: seed.0,
        generator_name: GENERATOR_NAME.to_string(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DepthVerdict {
    pub alpha: f64,
    pub value: f64,
    pub detected: bool,
    /// What a negative value certifies.
    pub statement: String,
}

/// Ideal-measurement W-state witness test on a tripartite state.
pub fn depth_detection(state: &DensityMatrix, alpha: f64) -> Result<DepthVerdict> {
    if state.dim() != 8 {
        return Err(Error::DimensionMismatch(format!(
            "depth detection needs a three-qubit state, got dimension {}",
            state.dim()
        )));
    }
    let w = Witness::w_state(alpha)?;
    let basis = AncillaBasis::default_basis(3);
    let coeffs = outcome_coefficients(&w, &basis)?;
    let value = mdiew_value(&ideal_table(state, &basis)?, &coeffs)?;
    let statement = match w.class() {
        SeparableClass::KProducible(k) => {
            format!("not {k}-producible: genuinely entangled, depth {}", k + 1)
        }
        _ => "not fully separable: depth at least 2".to_string(),
    };
    Ok(DepthVerdict {
        alpha,
        value,
        detected: value < 0.0,
        statement,
    })
}

// Tr_sys[(⊗_{k∈B} E_k)(I_anc ⊗ ρ_B)] evaluated on the explicit joint space.
fn map_block(
    rho: &ComplexMatrix,
    povms: &[&Povm],
    outcome: &[BellOutcome],
) -> Result<ComplexMatrix> {
    let n = povms.len();
    let d = 1usize << n;
    let joint = tensor_product(&identity(d), rho);
    let order: Vec<usize> = (0..n).flat_map(|k| [k, n + k]).collect();
    let joint = permute_subsystems(&joint, &vec![2; 2 * n], &order)?;
    let effect = tensor_all(povms.iter().zip(outcome).map(|(p, o)| p.element(o.index())));
    let ancilla_slots: Vec<usize> = (0..n).map(|k| 2 * k).collect();
    partial_trace(&(effect * joint), &vec![2; 2 * n], &ancilla_slots)
}

/// Maps every block of the certificate separately: the result is a
/// certificate for `M(ρ)` with the same weights and block partitions.
pub fn map_certificate(
    s: &StructuredState,
    povms: &[Povm],
    outcome: &[BellOutcome],
) -> Result<Certificate> {
    let n = s.party_count();
    if povms.len() != n || outcome.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} POVMs and {} outcomes for {n} parties",
            povms.len(),
            outcome.len()
        )));
    }
    let terms = s
        .certificate()
        .terms
        .iter()
        .map(|term| {
            let blocks = term
                .blocks
                .iter()
                .map(|b| {
                    let local_povms: Vec<&Povm> = b.parties.iter().map(|&p| &povms[p]).collect();
                    let local_outcome: Vec<BellOutcome> =
                        b.parties.iter().map(|&p| outcome[p]).collect();
                    Ok(Block {
                        parties: b.parties.clone(),
                        operator: map_block(&b.operator, &local_povms, &local_outcome)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ProductTerm {
                weight: term.weight,
                blocks,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Certificate {
        party_count: n,
        terms,
    })
}
