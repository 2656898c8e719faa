//! Named states, certificate-bearing separable / k-producible samplers and
//! random POVMs.
//!
//! Random mixed states are normalized Ginibre matrices `GG†/Tr(GG†)`; random
//! pure states are normalized complex Gaussian vectors. Every sampler takes an
//! explicit [`Seed`] or generator, there is no global RNG.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{
    bell_projector, c, frobenius_norm, hermitian_deviation, hermitian_function, identity,
    max_abs_diff, min_eigenvalue, permute_subsystems, tensor_all, trace, BellOutcome,
    ComplexMatrix, DensityMatrix, C64, STATE_TOL, ZERO,
};
use crate::structure::Partition;

/// Name recorded in every report that depends on sampled randomness.
pub const GENERATOR_NAME: &str = "ChaCha20Rng (rand_chacha 0.9)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(self.0)
    }

    /// Independent generator for trial `stream` under this seed.
    pub fn stream(self, stream: u64) -> ChaCha20Rng {
        let mut rng = self.rng();
        rng.set_stream(stream);
        rng
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(format!("{name} = {v} is outside [0, 1]")));
    }
    Ok(())
}

/// `(|01⟩ - |10⟩)/√2`.
pub fn singlet_vector() -> Vec<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    vec![ZERO, c(h, 0.0), c(-h, 0.0), ZERO]
}

/// `(|001⟩ + |010⟩ + |100⟩)/√3`.
pub fn w_state_vector() -> Vec<C64> {
    let a = c(1.0 / 3f64.sqrt(), 0.0);
    let mut v = vec![ZERO; 8];
    v[0b001] = a;
    v[0b010] = a;
    v[0b100] = a;
    v
}

/// `(|0…0⟩ + |1…1⟩)/√2` on `n` qubits.
pub fn ghz_vector(n: usize) -> Vec<C64> {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut v = vec![ZERO; 1 << n];
    v[0] = h;
    v[(1 << n) - 1] = h;
    v
}

fn pure_with_noise(psi: &[C64], p: f64) -> Result<DensityMatrix> {
    let pure = DensityMatrix::from_pure(psi)?;
    let d = psi.len();
    let m = pure.matrix() * c(p, 0.0) + identity(d) * c((1.0 - p) / d as f64, 0.0);
    DensityMatrix::new(m)
}

/// `p|ψ⁻⟩⟨ψ⁻| + (1-p)I/4`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    check_unit_interval("p", p)?;
    pure_with_noise(&singlet_vector(), p)
}

/// `p|W⟩⟨W| + (1-p)I/8`.
pub fn w_state_noise(p: f64) -> Result<DensityMatrix> {
    check_unit_interval("p", p)?;
    pure_with_noise(&w_state_vector(), p)
}

/// One factor of a product term: a state on the listed (zero-based,
/// ascending) parties.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub parties: Vec<usize>,
    pub operator: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub weight: f64,
    pub blocks: Vec<Block>,
}

/// A convex decomposition `Σ_x p_x ⊗_i ρ_i^x`, each term with its own block
/// partition of the parties.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub party_count: usize,
    pub terms: Vec<ProductTerm>,
}

/// Tensor product of blocks placed on their parties, with party 1 leftmost.
pub fn embed_blocks(blocks: &[Block], party_count: usize) -> Result<ComplexMatrix> {
    let mut order = Vec::with_capacity(party_count);
    for b in blocks {
        let want = 1usize << b.parties.len();
        if b.operator.nrows() != want || b.operator.ncols() != want {
            return Err(Error::DimensionMismatch(format!(
                "block on parties {:?} needs a {want}x{want} operator",
                b.parties
            )));
        }
        order.extend_from_slice(&b.parties);
    }
    Partition::new(
        party_count,
        blocks.iter().map(|b| b.parties.clone()).collect(),
    )?;
    let joined = tensor_all(blocks.iter().map(|b| &b.operator));
    // factor at position q of `joined` is party order[q]; move party k to slot k
    let mut inverse = vec![0; party_count];
    for (pos, &party) in order.iter().enumerate() {
        inverse[party] = pos;
    }
    permute_subsystems(&joined, &vec![2; party_count], &inverse)
}

impl Certificate {
    pub fn reconstruct(&self) -> Result<ComplexMatrix> {
        let d = 1usize << self.party_count;
        let mut acc = ComplexMatrix::zeros(d, d);
        for term in &self.terms {
            acc += embed_blocks(&term.blocks, self.party_count)? * c(term.weight, 0.0);
        }
        Ok(acc)
    }

    /// Largest number of parties in any block of any term.
    pub fn max_block_size(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.blocks.iter().map(|b| b.parties.len()))
            .max()
            .unwrap_or(0)
    }
}

/// A density matrix together with the certificate that generated it.
#[derive(Debug, Clone)]
pub struct StructuredState {
    state: DensityMatrix,
    certificate: Certificate,
}

impl StructuredState {
    pub fn from_certificate(certificate: Certificate) -> Result<Self> {
        if certificate.terms.is_empty() {
            return Err(Error::InvalidState("certificate has no terms".into()));
        }
        let mut total = 0.0;
        for term in &certificate.terms {
            if term.weight < 0.0 || !term.weight.is_finite() {
                return Err(Error::InvalidState(format!(
                    "mixture weight {}",
                    term.weight
                )));
            }
            total += term.weight;
            for b in &term.blocks {
                DensityMatrix::new(b.operator.clone())?;
            }
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "mixture weights sum to {total}"
            )));
        }
        let state = DensityMatrix::new(certificate.reconstruct()?)?;
        Ok(Self { state, certificate })
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn party_count(&self) -> usize {
        self.certificate.party_count
    }

    /// Frobenius distance between the stored state and its rebuilt certificate.
    pub fn reconstruction_error(&self) -> f64 {
        match self.certificate.reconstruct() {
            Ok(m) => frobenius_norm(&(m - self.state.matrix())),
            Err(_) => f64::INFINITY,
        }
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

fn ginibre_psd<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    &g * g.adjoint()
}

/// Normalized Ginibre mixed state.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let a = ginibre_psd(dim, rng);
    let tr = trace(&a).re;
    let mut m = a * c(1.0 / tr, 0.0);
    // symmetrize away rounding so validation never trips
    m = (&m + m.adjoint()) * c(0.5, 0.0);
    DensityMatrix::new(m).expect("Ginibre sample is a valid state")
}

pub fn random_pure_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Uniform point on the probability simplex.
pub fn simplex_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Single-term structured state from parts laid out left to right.
pub fn product_state(parts: &[DensityMatrix]) -> Result<StructuredState> {
    if parts.is_empty() {
        return Err(Error::InvalidState("product of zero parts".into()));
    }
    let mut blocks = Vec::with_capacity(parts.len());
    let mut next = 0;
    for part in parts {
        let q = part.qubits().ok_or_else(|| {
            Error::InvalidState(format!(
                "part of dimension {} is not a qubit register",
                part.dim()
            ))
        })?;
        blocks.push(Block {
            parties: (next..next + q).collect(),
            operator: part.matrix().clone(),
        });
        next += q;
    }
    StructuredState::from_certificate(Certificate {
        party_count: next,
        terms: vec![ProductTerm {
            weight: 1.0,
            blocks,
        }],
    })
}

/// Mixture of `term_count` products of random block states, every term
/// using the same partition.
pub fn random_partitioned<R: Rng + ?Sized>(
    partition: &Partition,
    term_count: usize,
    rng: &mut R,
) -> Result<StructuredState> {
    if term_count == 0 {
        return Err(Error::OutOfRange("term_count must be at least 1".into()));
    }
    let weights = simplex_weights(term_count, rng);
    let terms = weights
        .into_iter()
        .map(|weight| ProductTerm {
            weight,
            blocks: partition
                .blocks()
                .iter()
                .map(|parties| Block {
                    parties: parties.clone(),
                    operator: random_density(1 << parties.len(), rng).into_matrix(),
                })
                .collect(),
        })
        .collect();
    StructuredState::from_certificate(Certificate {
        party_count: partition.party_count(),
        terms,
    })
}

/// Separable state with respect to contiguous blocks of the given sizes.
pub fn random_separable(
    block_sizes: &[usize],
    term_count: usize,
    seed: Seed,
) -> Result<StructuredState> {
    if block_sizes.is_empty() {
        return Err(Error::InvalidPartition("empty partition".into()));
    }
    let partition = Partition::from_sizes(block_sizes)?;
    random_partitioned(&partition, term_count, &mut seed.rng())
}

/// Random partition of `n` parties whose blocks all have at most `k` parties.
pub fn random_bounded_partition<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<Partition> {
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!(
            "block bound k = {k} must lie in 1..={n}"
        )));
    }
    let mut parties: Vec<usize> = (0..n).collect();
    parties.shuffle(rng);
    let mut blocks = Vec::new();
    let mut rest = &parties[..];
    while !rest.is_empty() {
        let size = rng.random_range(1..=k.min(rest.len()));
        let mut block = rest[..size].to_vec();
        block.sort_unstable();
        blocks.push(block);
        rest = &rest[size..];
    }
    Partition::new(n, blocks)
}

pub fn random_k_producible_with<R: Rng + ?Sized>(
    n_parties: usize,
    k: usize,
    term_count: usize,
    rng: &mut R,
) -> Result<StructuredState> {
    if term_count == 0 {
        return Err(Error::OutOfRange("term_count must be at least 1".into()));
    }
    if k == 0 || k > n_parties {
        return Err(Error::OutOfRange(format!(
            "k = {k} must lie in 1..={n_parties}"
        )));
    }
    let weights = simplex_weights(term_count, rng);
    let mut terms = Vec::with_capacity(term_count);
    for weight in weights {
        let partition = random_bounded_partition(n_parties, k, rng)?;
        let blocks = partition
            .blocks()
            .iter()
            .map(|parties| Block {
                parties: parties.clone(),
                operator: random_density(1 << parties.len(), rng).into_matrix(),
            })
            .collect();
        terms.push(ProductTerm { weight, blocks });
    }
    StructuredState::from_certificate(Certificate {
        party_count: n_parties,
        terms,
    })
}

/// Mixture of products in which every block holds at most `k` parties; each
/// term draws its own random partition.
pub fn random_k_producible(
    n_parties: usize,
    k: usize,
    term_count: usize,
    seed: Seed,
) -> Result<StructuredState> {
    random_k_producible_with(n_parties, k, term_count, &mut seed.rng())
}

/// Positive operators summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidPovm("no elements".into()))?;
        let dim = first.nrows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (k, e) in elements.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::InvalidPovm(format!(
                    "element {k} has shape {:?}",
                    e.shape()
                )));
            }
            let dev = hermitian_deviation(e);
            if dev > STATE_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {k} not Hermitian ({dev:.3e})"
                )));
            }
            let lambda = min_eigenvalue(e)?;
            if lambda < -STATE_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {k} has eigenvalue {lambda:.3e}"
                )));
            }
            sum += e;
        }
        let err = max_abs_diff(&sum, &identity(dim));
        if err > STATE_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {err:.3e}"
            )));
        }
        Ok(Self { elements })
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &ComplexMatrix {
        &self.elements[k]
    }

    /// The ideal Bell state measurement.
    pub fn ideal_bsm() -> Self {
        Self {
            elements: BellOutcome::ALL
                .iter()
                .map(|&o| bell_projector(o))
                .collect(),
        }
    }
}

const POVM_RETRIES: usize = 16;

pub fn random_povm_with<R: Rng + ?Sized>(
    dim: usize,
    n_outcomes: usize,
    rng: &mut R,
) -> Result<Povm> {
    if n_outcomes == 0 || dim == 0 {
        return Err(Error::OutOfRange(
            "POVM needs at least one outcome and dimension".into(),
        ));
    }
    for _ in 0..POVM_RETRIES {
        let raw: Vec<ComplexMatrix> = (0..n_outcomes).map(|_| ginibre_psd(dim, rng)).collect();
        let s = raw
            .iter()
            .fold(ComplexMatrix::zeros(dim, dim), |acc, a| acc + a);
        if min_eigenvalue(&s)? <= 1e-12 * trace(&s).re {
            continue;
        }
        let s_inv_half = hermitian_function(&s, |x| 1.0 / x.sqrt())?;
        let mut elements: Vec<ComplexMatrix> = raw
            .iter()
            .map(|a| {
                let e = &s_inv_half * a * &s_inv_half;
                (&e + e.adjoint()) * c(0.5, 0.0)
            })
            .collect();
        // push the last element so completeness holds to rounding
        let partial = elements[..n_outcomes - 1]
            .iter()
            .fold(ComplexMatrix::zeros(dim, dim), |acc, e| acc + e);
        let last = identity(dim) - partial;
        if min_eigenvalue(&last)? >= -STATE_TOL {
            elements[n_outcomes - 1] = last;
        }
        if let Ok(povm) = Povm::new(elements) {
            return Ok(povm);
        }
    }
    Err(Error::InvalidPovm(format!(
        "could not normalize a random POVM after {POVM_RETRIES} attempts"
    )))
}

/// `S^{-1/2} A_i S^{-1/2}` normalization of random Ginibre operators.
pub fn random_povm(dim: usize, n_outcomes: usize, seed: Seed) -> Result<Povm> {
    random_povm_with(dim, n_outcomes, &mut seed.rng())
}

/// Bell measurement mixed with white noise: `v·Π_o + (1-v)I/4`.
pub fn noisy_bsm(visibility: f64) -> Result<Povm> {
    check_unit_interval("visibility", visibility)?;
    let noise = identity(4) * c((1.0 - visibility) / 4.0, 0.0);
    Povm::new(
        BellOutcome::ALL
            .iter()
            .map(|&o| bell_projector(o) * c(visibility, 0.0) + &noise)
            .collect(),
    )
}

/// Per-party random 4-outcome POVMs on the (ancilla, system) pair.
pub fn random_party_povms<R: Rng + ?Sized>(party_count: usize, rng: &mut R) -> Result<Vec<Povm>> {
    (0..party_count)
        .map(|_| random_povm_with(4, 4, rng))
        .collect()
}
