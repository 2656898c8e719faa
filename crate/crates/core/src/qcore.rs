//! Dense complex matrices and the qubit constants shared by the rest of the
//! crate.
//!
//! Multi-party operators are always laid out with party 1 as the leftmost
//! tensor factor and the computational basis ordered `|0⟩, |1⟩`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix. All operators in the crate (states, witnesses,
/// POVM elements, mapped ancilla operators) use this representation.
pub type ComplexMatrix = DMatrix<C64>;

/// Absolute tolerance for Hermiticity, trace and positivity checks.
pub const STATE_TOL: f64 = 1e-10;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const I_UNIT: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> ComplexMatrix {
    ComplexMatrix::identity(dim, dim)
}

pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    ComplexMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

/// Kronecker product, `(a⊗b)[i·rb+k, j·cb+l] = a[i,j]·b[k,l]`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Left-to-right Kronecker product of a sequence; the empty product is `[1]`.
pub fn tensor_all<'a, I>(factors: I) -> ComplexMatrix
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| tensor_product(&acc, f))
}

/// Plain transpose, no conjugation.
pub fn transpose(m: &ComplexMatrix) -> ComplexMatrix {
    m.transpose()
}

pub fn dagger(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint()
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `Tr[a·b]` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn frobenius_norm(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff on mismatched shapes");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise deviation `|m - m†|`.
pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    hermitian_deviation(m) <= tol
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are returned in
/// ascending order with eigenvectors as the matching columns.
pub fn eigh(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let dev = hermitian_deviation(m);
    if dev > STATE_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors =
        ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((values, vectors))
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    let (values, _) = eigh(m)?;
    values
        .first()
        .copied()
        .ok_or_else(|| Error::DimensionMismatch("empty matrix".into()))
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &ComplexMatrix, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
    let (values, vecs) = eigh(m)?;
    let n = m.nrows();
    let mut scaled = vecs.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let fl = c(f(lambda), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= fl;
        }
    }
    Ok(scaled * vecs.adjoint())
}

fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    out
}

fn undigits(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Reduced operator on the subsystems listed in `keep` (order of `keep` is
/// ignored; kept subsystems stay in their original relative order).
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.nrows() != total {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but subsystem dims {:?} multiply to {}",
            m.nrows(),
            m.ncols(),
            dims,
            total
        )));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "subsystem {bad} out of range for {} subsystems",
            dims.len()
        )));
    }
    let kept: Vec<usize> = (0..dims.len()).filter(|k| keep.contains(k)).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&k| dims[k]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let out_dim: usize = kept_dims.iter().product();

    // split every full index into (kept part, traced part) once
    let split: Vec<(usize, usize)> = (0..total)
        .map(|idx| {
            let ds = digits(idx, dims);
            let kd: Vec<usize> = kept.iter().map(|&k| ds[k]).collect();
            let td: Vec<usize> = traced.iter().map(|&k| ds[k]).collect();
            (undigits(&kd, &kept_dims), undigits(&td, &traced_dims))
        })
        .collect();

    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for r in 0..total {
        let (kr, tr) = split[r];
        for col in 0..total {
            let (kc, tc) = split[col];
            if tr == tc {
                out[(kr, kc)] += m[(r, col)];
            }
        }
    }
    Ok(out)
}

/// Reorders tensor factors: output factor `k` is input factor `order[k]`.
pub fn permute_subsystems(
    m: &ComplexMatrix,
    dims: &[usize],
    order: &[usize],
) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !m.is_square() || m.nrows() != total {
        return Err(Error::DimensionMismatch(format!(
            "operator dim {} does not match subsystem dims {:?}",
            m.nrows(),
            dims
        )));
    }
    let mut seen = vec![false; dims.len()];
    if order.len() != dims.len()
        || order
            .iter()
            .any(|&k| k >= dims.len() || std::mem::replace(&mut seen[k], true))
    {
        return Err(Error::DimensionMismatch(format!(
            "{order:?} is not a permutation of the subsystems"
        )));
    }
    let out_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    // out index -> in index
    let map: Vec<usize> = (0..total)
        .map(|out_idx| {
            let od = digits(out_idx, &out_dims);
            let mut id = vec![0; dims.len()];
            for (pos, &src) in order.iter().enumerate() {
                id[src] = od[pos];
            }
            undigits(&id, dims)
        })
        .collect();
    Ok(ComplexMatrix::from_fn(total, total, |i, j| {
        m[(map[i], map[j])]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PauliIndex {
    I,
    X,
    Y,
    Z,
}

impl PauliIndex {
    pub const ALL: [PauliIndex; 4] = [PauliIndex::I, PauliIndex::X, PauliIndex::Y, PauliIndex::Z];
}

pub fn pauli(p: PauliIndex) -> ComplexMatrix {
    let m = match p {
        PauliIndex::I => [ONE, ZERO, ZERO, ONE],
        PauliIndex::X => [ZERO, ONE, ONE, ZERO],
        PauliIndex::Y => [ZERO, -I_UNIT, I_UNIT, ZERO],
        PauliIndex::Z => [ONE, ZERO, ZERO, -ONE],
    };
    ComplexMatrix::from_row_slice(2, 2, &m)
}

/// The four Bell-state-measurement outcomes, labelled 1..4 in the order
/// φ⁺, φ⁻, ψ⁺, ψ⁻.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    /// Zero-based position (label minus one).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> usize {
        self.index() + 1
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn from_label(label: usize) -> Option<Self> {
        label.checked_sub(1).and_then(Self::from_index)
    }

    /// The local correction `m_o` with `|o⟩ = (I⊗m_o)|φ⁺⟩`:
    /// `I`, `σ_z`, `σ_x`, `σ_xσ_z`.
    pub fn local_unitary(self) -> ComplexMatrix {
        match self {
            BellOutcome::PhiPlus => pauli(PauliIndex::I),
            BellOutcome::PhiMinus => pauli(PauliIndex::Z),
            BellOutcome::PsiPlus => pauli(PauliIndex::X),
            BellOutcome::PsiMinus => pauli(PauliIndex::X) * pauli(PauliIndex::Z),
        }
    }
}

/// `(|00⟩+|11⟩)/√2` as a column vector.
pub fn phi_plus() -> nalgebra::DVector<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    nalgebra::DVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)])
}

/// Rank-one projector `(I⊗m_o)|φ⁺⟩⟨φ⁺|(I⊗m_o)†` on (ancilla ⊗ system).
pub fn bell_projector(o: BellOutcome) -> ComplexMatrix {
    let local = tensor_product(&identity(2), &o.local_unitary());
    let v = local * phi_plus();
    &v * v.adjoint()
}

/// Every tuple in `{0..4}^n`, first entry most significant.
pub fn base4_tuples(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..4usize.pow(n as u32)).map(move |flat| digits(flat, &vec![4; n]))
}

pub fn base4_index(tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &x| acc * 4 + x)
}

pub fn outcome_tuple(flat: usize, n: usize) -> Vec<BellOutcome> {
    digits(flat, &vec![4; n])
        .into_iter()
        .map(|i| BellOutcome::ALL[i])
        .collect()
}

pub fn outcome_index(outcome: &[BellOutcome]) -> usize {
    outcome.iter().fold(0, |acc, o| acc * 4 + o.index())
}

/// A validated density matrix: Hermitian, unit trace and positive
/// semidefinite, each within [`STATE_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {dev:.3e})"
            )));
        }
        let tr = trace(&matrix);
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let lambda = min_eigenvalue(&matrix)?;
        if lambda < -STATE_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lambda:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a normalized vector.
    pub fn from_pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("state vector has norm {norm}")));
        }
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: identity(dim) * c(1.0 / dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Number of qubits if the dimension is a power of two.
    pub fn qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity_with_pure(&self, psi: &[C64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(psi);
        (v.adjoint() * &self.matrix * &v)[(0, 0)].re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(r, cols, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let a = random_matrix(rng, n, n);
        (&a + a.adjoint()) * c(0.5, 0.0)
    }

    #[test]
    fn tensor_identity() {
        assert_eq!(tensor_product(&identity(2), &identity(2)), identity(4));
    }

    #[test]
    fn tensor_index_formula() {
        let a = pauli(PauliIndex::X);
        let b = pauli(PauliIndex::Z);
        let k = tensor_product(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 2 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
        // anti-diagonal block structure
        assert_eq!(k[(0, 2)], ONE);
        assert_eq!(k[(1, 3)], -ONE);
        assert_eq!(k[(0, 0)], ZERO);
    }

    #[test]
    fn tensor_trace_multiplicative_and_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 2, 2);
            let b = random_matrix(&mut rng, 3, 3);
            let d = random_matrix(&mut rng, 2, 2);
            assert!((trace(&tensor_product(&a, &b)) - trace(&a) * trace(&b)).norm() < 1e-12);
            let left = tensor_product(&tensor_product(&a, &b), &d);
            let right = tensor_product(&a, &tensor_product(&b, &d));
            assert!(max_abs_diff(&left, &right) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_phi_plus() {
        let p = bell_projector(BellOutcome::PhiPlus);
        let r = partial_trace(&p, &[2, 2], &[0]).unwrap();
        assert!(max_abs_diff(&r, &(identity(2) * c(0.5, 0.0))) < 1e-14);
    }

    #[test]
    fn partial_trace_keep_everything_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_matrix(&mut rng, 8, 8);
        assert_eq!(partial_trace(&m, &[2, 2, 2], &[0, 1, 2]).unwrap(), m);
    }

    #[test]
    fn partial_trace_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 2, 2);
            let b = random_matrix(&mut rng, 4, 4);
            let ab = tensor_product(&a, &b);
            // direct summation oracle for Tr_A
            let mut oracle = ComplexMatrix::zeros(4, 4);
            for k in 0..4 {
                for l in 0..4 {
                    for i in 0..2 {
                        oracle[(k, l)] += ab[(i * 4 + k, i * 4 + l)];
                    }
                }
            }
            let got = partial_trace(&ab, &[2, 4], &[1]).unwrap();
            assert!(max_abs_diff(&got, &oracle) < 1e-12);
            assert!(max_abs_diff(&got, &(&b * trace(&a))) < 1e-12);
            let keep_a = partial_trace(&ab, &[2, 4], &[0]).unwrap();
            assert!(max_abs_diff(&keep_a, &(&a * trace(&b))) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = identity(4);
        assert!(matches!(
            partial_trace(&m, &[2, 3], &[0]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            partial_trace(&m, &[2, 2], &[5]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn transpose_cases() {
        let y = pauli(PauliIndex::Y);
        assert_eq!(transpose(&y), -y.clone());
        let d = from_real_rows(&[&[1.0, 0.0], &[0.0, -3.0]]);
        assert_eq!(transpose(&d), d);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 2, 2);
        let b = random_matrix(&mut rng, 2, 2);
        assert_eq!(
            transpose(&tensor_product(&a, &b)),
            tensor_product(&transpose(&a), &transpose(&b))
        );
        assert_eq!(transpose(&transpose(&a)), a);
    }

    #[test]
    fn paulis() {
        assert_eq!(pauli(PauliIndex::I), identity(2));
        assert_eq!(
            pauli(PauliIndex::Z),
            from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
        );
        assert_eq!(
            pauli(PauliIndex::X) * pauli(PauliIndex::Z),
            from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]])
        );
    }

    #[test]
    fn bell_projectors() {
        let s = 0.5;
        let phi = bell_projector(BellOutcome::PhiPlus);
        let expect = from_real_rows(&[&[s, 0.0, 0.0, s], &[0.0; 4], &[0.0; 4], &[s, 0.0, 0.0, s]]);
        assert!(max_abs_diff(&phi, &expect) < 1e-15);

        // σ_xσ_z(|00⟩+|11⟩)/√2 = (|01⟩-|10⟩)/√2
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi_minus = nalgebra::DVector::from_vec(vec![ZERO, c(h, 0.0), c(-h, 0.0), ZERO]);
        let singlet = &psi_minus * psi_minus.adjoint();
        assert!(max_abs_diff(&bell_projector(BellOutcome::PsiMinus), &singlet) < 1e-15);

        let all: Vec<_> = BellOutcome::ALL
            .iter()
            .map(|&o| bell_projector(o))
            .collect();
        let sum = all
            .iter()
            .fold(ComplexMatrix::zeros(4, 4), |acc, p| acc + p);
        assert!(max_abs_diff(&sum, &identity(4)) < 1e-12);
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    assert!(frobenius_norm(&(&all[a] * &all[b])) <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn outcome_labels_round_trip() {
        for o in BellOutcome::ALL {
            assert_eq!(BellOutcome::from_label(o.label()), Some(o));
        }
        assert_eq!(BellOutcome::from_label(0), None);
        assert_eq!(BellOutcome::from_label(5), None);
    }

    #[test]
    fn min_eigenvalue_simple() {
        assert!((min_eigenvalue(&identity(2)).unwrap() - 1.0).abs() < 1e-14);
        assert!(
            min_eigenvalue(&bell_projector(BellOutcome::PhiPlus))
                .unwrap()
                .abs()
                < 1e-14
        );
        let bad = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(min_eigenvalue(&bad), Err(Error::NotHermitian(_))));
    }

    // characteristic polynomial (a-λ)(d-λ)-|b|² solved by bisection
    fn bisect_min_root(h: &ComplexMatrix) -> f64 {
        let a = h[(0, 0)].re;
        let d = h[(1, 1)].re;
        let b2 = h[(0, 1)].norm_sqr();
        let f = |l: f64| (a - l) * (d - l) - b2;
        let mut lo = a.min(d) - b2.sqrt() - 1.0;
        let mut hi = (a + d) / 2.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn min_eigenvalue_matches_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let h = random_hermitian(&mut rng, 2);
            assert!((min_eigenvalue(&h).unwrap() - bisect_min_root(&h)).abs() < 1e-12);
        }
    }

    #[test]
    fn permute_swaps_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_matrix(&mut rng, 2, 2);
        let b = random_matrix(&mut rng, 4, 4);
        let ab = tensor_product(&a, &b);
        let ba = permute_subsystems(&ab, &[2, 4], &[1, 0]).unwrap();
        assert!(max_abs_diff(&ba, &tensor_product(&b, &a)) < 1e-15);
        assert!(permute_subsystems(&ab, &[2, 4], &[0, 0]).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(identity(2) * c(0.5, 0.0)).is_ok());
        assert!(DensityMatrix::new(identity(2)).is_err());
        let neg = from_real_rows(&[&[1.5, 0.0], &[0.0, -0.5]]);
        assert!(DensityMatrix::new(neg).is_err());
        assert!(DensityMatrix::from_pure(&[ONE, ONE]).is_err());
        assert_eq!(DensityMatrix::maximally_mixed(8).qubits(), Some(3));
    }
}
