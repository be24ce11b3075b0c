//! Quantum channel representations and conversions.
//!
//! A channel acts as ρ ↦ Σ_l K_l ρ K_l† with trace preservation
//! Σ_l K_l†K_l = I. The same map is carried in four forms:
//!
//! - [`KrausChannel`]: the operator list itself, used for all computation.
//! - [`StackedKraus`]: the kN×N vertical stack 𝕜, the Stiefel-manifold point
//!   that the optimizer moves.
//! - [`LiouvilleMatrix`]: Σ_l K_l ⊗ conj(K_l) acting on row-major vectorized
//!   states; composition is matrix multiplication.
//! - [`ChoiMatrix`]: the (unnormalized, trace-N) Choi form, related to the
//!   Liouville form by the index involution J_{ab,cd} = Ê_{ac,bd}.
//! - [`PauliLiouville`]: the real transfer matrix over the n-qubit Pauli
//!   basis, normalized so the identity channel maps to the identity matrix.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QptError, Result};
use crate::linalg::{
    self, c, cr, fdist, fnorm, herm_eigen, herm_sqrt_clamped, hs_inner, identity, kron,
    orthonormalize, random_complex_gaussian, trace, unvec_row, vec_row, CMat,
};

/// Trace-preservation tolerance for constructed channels.
pub const TP_TOL: f64 = 1e-8;

/// An ordered list of k complex N×N Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    ops: Vec<CMat>,
}

/// The kN×N column-stacked Kraus point 𝕜 with 𝕜†𝕜 = I.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedKraus {
    dim: usize,
    rank: usize,
    point: CMat,
}

/// N²×N² Hermitian PSD matrix with trace N.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    matrix: CMat,
}

/// N²×N² superoperator acting on row-major vectorized states.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleMatrix {
    dim: usize,
    matrix: CMat,
}

/// Real 4ⁿ×4ⁿ transfer matrix over the Pauli basis, rows indexing the output
/// Pauli component: P[r][c] = (1/N)·Tr[E_r ℰ(E_c)].
#[derive(Debug, Clone, PartialEq)]
pub struct PauliLiouville {
    n_qubits: usize,
    matrix: DMatrix<f64>,
}

impl KrausChannel {
    /// Builds a channel, validating shape and the TP condition.
    pub fn new(ops: Vec<CMat>) -> Result<Self> {
        if ops.is_empty() {
            return Err(QptError::Invalid("channel needs at least one Kraus operator".into()));
        }
        let dim = ops[0].nrows();
        for op in &ops {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(QptError::Dimension(format!(
                    "Kraus operators must all be {dim}x{dim}, got {}x{}",
                    op.nrows(),
                    op.ncols()
                )));
            }
        }
        let ch = Self { dim, ops };
        let defect = ch.tp_defect();
        if defect > TP_TOL {
            return Err(QptError::Invalid(format!(
                "channel is not trace-preserving: defect {defect:.3e}"
            )));
        }
        Ok(ch)
    }

    /// Builds without the TP check. For internal use where the invariant is
    /// structural (e.g. unstacking an orthonormal point).
    pub(crate) fn from_parts(dim: usize, ops: Vec<CMat>) -> Self {
        Self { dim, ops }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, ops: vec![identity(dim)] }
    }

    /// Single-operator channel from a unitary.
    pub fn unitary(u: CMat) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    /// ‖Σ K†K − I‖_F.
    pub fn tp_defect(&self) -> f64 {
        let mut s = CMat::zeros(self.dim, self.dim);
        for k in &self.ops {
            s += k.adjoint() * k;
        }
        fdist(&s, &identity(self.dim))
    }

    /// ρ ↦ Σ_l K_l ρ K_l†.
    pub fn apply(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(QptError::Dimension(format!(
                "state is {}x{}, channel dim {}",
                rho.nrows(),
                rho.ncols(),
                self.dim
            )));
        }
        let mut out = CMat::zeros(self.dim, self.dim);
        for k in &self.ops {
            out += k * rho * k.adjoint();
        }
        Ok(out)
    }

    /// Heisenberg-picture action E ↦ Σ_l K_l† E K_l.
    pub fn adjoint_apply(&self, obs: &CMat) -> Result<CMat> {
        if obs.nrows() != self.dim || obs.ncols() != self.dim {
            return Err(QptError::Dimension(format!(
                "observable is {}x{}, channel dim {}",
                obs.nrows(),
                obs.ncols(),
                self.dim
            )));
        }
        let mut out = CMat::zeros(self.dim, self.dim);
        for k in &self.ops {
            out += k.adjoint() * obs * k;
        }
        Ok(out)
    }

    /// Vertical stack [K_1; K_2; …; K_k].
    pub fn stack(&self) -> StackedKraus {
        let n = self.dim;
        let mut point = CMat::zeros(self.rank() * n, n);
        for (l, k) in self.ops.iter().enumerate() {
            point.view_mut((l * n, 0), (n, n)).copy_from(k);
        }
        StackedKraus { dim: n, rank: self.rank(), point }
    }

    /// Ê = Σ_l K_l ⊗ conj(K_l).
    pub fn to_liouville(&self) -> LiouvilleMatrix {
        let n2 = self.dim * self.dim;
        let mut m = CMat::zeros(n2, n2);
        for k in &self.ops {
            m += kron(k, &k.map(|z| z.conj()));
        }
        LiouvilleMatrix { dim: self.dim, matrix: m }
    }

    /// Unnormalized Choi matrix J = Σ_l vec(K_l)·vec(K_l)†, trace N.
    pub fn to_choi(&self) -> ChoiMatrix {
        let n2 = self.dim * self.dim;
        let mut m = CMat::zeros(n2, n2);
        for k in &self.ops {
            let v = vec_row(k);
            for a in 0..n2 {
                for b in 0..n2 {
                    m[(a, b)] += v[a] * v[b].conj();
                }
            }
        }
        ChoiMatrix { dim: self.dim, matrix: m }
    }

    /// Removes redundant Kraus operators via the overlap (Gram) matrix.
    ///
    /// Diagonalizes D_ij = Tr(K_i†K_j), mixes the operators by the unitary of
    /// eigenvectors, and drops combinations whose squared Frobenius norm falls
    /// at or below `tol` relative to the largest.
    pub fn minimal_kraus(&self, tol: f64) -> KrausChannel {
        let k = self.rank();
        let gram = CMat::from_fn(k, k, |i, j| hs_inner(&self.ops[i], &self.ops[j]));
        let (vals, vecs) = herm_eigen(&gram);
        let max = vals.iter().cloned().fold(0.0_f64, f64::max);
        let mut kept = Vec::new();
        for (m, &lam) in vals.iter().enumerate() {
            if lam > tol * max.max(1e-300) {
                let mut op = CMat::zeros(self.dim, self.dim);
                for j in 0..k {
                    op += &self.ops[j] * vecs[(j, m)];
                }
                kept.push(op);
            }
        }
        // Largest-weight operators first.
        kept.reverse();
        KrausChannel { dim: self.dim, ops: kept }
    }

    /// Pauli transfer matrix, defined for N = 2ⁿ.
    pub fn to_pauli_liouville(&self) -> Result<PauliLiouville> {
        let n_qubits = qubit_count(self.dim)?;
        let basis = pauli_basis(n_qubits);
        let norm = 1.0 / self.dim as f64;
        let d4 = basis.len();
        let mut m = DMatrix::<f64>::zeros(d4, d4);
        let mut max_imag = 0.0_f64;
        for (col, e_in) in basis.iter().enumerate() {
            let image = self.apply(e_in)?;
            for (row, e_out) in basis.iter().enumerate() {
                let z = trace(&(e_out * &image)) * cr(norm);
                max_imag = max_imag.max(z.im.abs());
                m[(row, col)] = z.re;
            }
        }
        if max_imag > 1e-8 {
            return Err(QptError::Invalid(format!(
                "Pauli transfer matrix has imaginary residue {max_imag:.3e}"
            )));
        }
        Ok(PauliLiouville { n_qubits, matrix: m })
    }

    /// Haar-flavored random channel: thin-QR orthonormalization of a kN×N
    /// complex Gaussian matrix, unstacked into k Kraus operators.
    pub fn random(dim: usize, rank: usize, seed: u64) -> Result<Self> {
        if rank < 1 || rank > dim * dim {
            return Err(QptError::Invalid(format!(
                "rank must be in [1, {}], got {rank}",
                dim * dim
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_complex_gaussian(rank * dim, dim, &mut rng);
        let q = orthonormalize(&g);
        Ok(StackedKraus { dim, rank, point: q }.unstack())
    }
}

impl StackedKraus {
    /// Wraps a kN×N matrix, validating shape and orthonormality.
    pub fn new(point: CMat, dim: usize) -> Result<Self> {
        if dim == 0 || point.ncols() != dim || point.nrows() % dim != 0 || point.nrows() == 0 {
            return Err(QptError::Dimension(format!(
                "stacked point is {}x{}, rows must be a positive multiple of dim {dim}",
                point.nrows(),
                point.ncols()
            )));
        }
        let defect = linalg::orthonormality_defect(&point);
        if defect > TP_TOL {
            return Err(QptError::Invalid(format!(
                "stacked point violates 𝕜†𝕜 = I: defect {defect:.3e}"
            )));
        }
        let rank = point.nrows() / dim;
        Ok(Self { dim, rank, point })
    }

    pub(crate) fn from_parts(point: CMat, dim: usize) -> Self {
        let rank = point.nrows() / dim;
        Self { dim, rank, point }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn matrix(&self) -> &CMat {
        &self.point
    }

    pub fn tp_defect(&self) -> f64 {
        linalg::orthonormality_defect(&self.point)
    }

    /// Splits the stack back into its Kraus operators.
    pub fn unstack(&self) -> KrausChannel {
        let n = self.dim;
        let ops = (0..self.rank)
            .map(|l| self.point.view((l * n, 0), (n, n)).into_owned())
            .collect();
        KrausChannel::from_parts(n, ops)
    }
}

impl ChoiMatrix {
    /// Wraps an N²×N² matrix, validating Hermiticity, positivity, and trace.
    pub fn new(matrix: CMat, dim: usize) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(QptError::Dimension(format!(
                "Choi matrix must be {0}x{0} for dim {dim}, got {1}x{2}",
                dim * dim,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm_defect = fdist(&matrix, &matrix.adjoint());
        if herm_defect > 1e-10 * fnorm(&matrix).max(1.0) {
            return Err(QptError::Invalid(format!(
                "Choi matrix is not Hermitian: defect {herm_defect:.3e}"
            )));
        }
        let (vals, _) = herm_eigen(&matrix);
        let min = vals.first().copied().unwrap_or(0.0);
        let max = vals.last().copied().unwrap_or(0.0);
        if min < -1e-10 * max.max(1.0) {
            return Err(QptError::NotCompletelyPositive(min));
        }
        let tr = trace(&matrix).re;
        if (tr - dim as f64).abs() > 1e-8 * (dim as f64) {
            return Err(QptError::Invalid(format!(
                "Choi trace is {tr}, expected {dim}"
            )));
        }
        Ok(Self { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Extracts Kraus operators from eigenpairs with eigenvalue above
    /// `tol`·λ_max. Errors if an eigenvalue falls below −10·tol·λ_max.
    pub fn to_kraus(&self, tol: f64) -> Result<KrausChannel> {
        let (vals, vecs) = herm_eigen(&self.matrix);
        let max = vals.iter().cloned().fold(0.0_f64, f64::max);
        if max <= 0.0 {
            return Err(QptError::Invalid("Choi matrix has no positive spectrum".into()));
        }
        let thr = tol * max;
        if let Some(&lo) = vals.first() {
            if lo < -10.0 * thr {
                return Err(QptError::NotCompletelyPositive(lo));
            }
        }
        let mut ops = Vec::new();
        // herm_eigen sorts ascending; emit largest eigenvalue first.
        for (i, &lam) in vals.iter().enumerate().rev() {
            if lam > thr {
                let v = vecs.column(i).into_owned() * cr(lam.sqrt());
                ops.push(unvec_row(&v, self.dim, self.dim));
            }
        }
        Ok(KrausChannel::from_parts(self.dim, ops))
    }

    /// Numerical Kraus rank at relative cutoff `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        let (vals, _) = herm_eigen(&self.matrix);
        let max = vals.iter().cloned().fold(0.0_f64, f64::max);
        vals.iter().filter(|&&l| l > tol * max.max(1e-300)).count()
    }
}

impl LiouvilleMatrix {
    pub fn new(matrix: CMat, dim: usize) -> Result<Self> {
        if matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(QptError::Dimension(format!(
                "Liouville matrix must be {0}x{0} for dim {dim}",
                dim * dim
            )));
        }
        Ok(Self { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, matrix: identity(dim * dim) }
    }

    /// Action on a density matrix through vectorization.
    pub fn act(&self, rho: &CMat) -> Result<CMat> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(QptError::Dimension(format!(
                "state is {}x{}, superoperator dim {}",
                rho.nrows(),
                rho.ncols(),
                self.dim
            )));
        }
        let v = &self.matrix * vec_row(rho);
        Ok(unvec_row(&v, self.dim, self.dim))
    }

    /// Channel composition (self ∘ other)(ρ) = self(other(ρ)).
    pub fn compose(&self, other: &LiouvilleMatrix) -> Result<LiouvilleMatrix> {
        if self.dim != other.dim {
            return Err(QptError::Dimension(format!(
                "cannot compose superoperators of dims {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(LiouvilleMatrix { dim: self.dim, matrix: &self.matrix * &other.matrix })
    }

    /// Reinterprets the superoperator as a Choi matrix via the involution
    /// J_{ab,cd} = Ê_{ac,bd}.
    pub fn to_choi_matrix(&self) -> CMat {
        let n = self.dim;
        let n2 = n * n;
        let mut j = CMat::zeros(n2, n2);
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for d in 0..n {
                        j[(a * n + b, cc * n + d)] = self.matrix[(a * n + cc, b * n + d)];
                    }
                }
            }
        }
        j
    }

    /// Expresses the superoperator in the n-qubit Pauli basis.
    pub fn to_pauli_matrix(&self) -> Result<DMatrix<f64>> {
        let n_qubits = qubit_count(self.dim)?;
        let basis = pauli_basis(n_qubits);
        let norm = 1.0 / self.dim as f64;
        let d4 = basis.len();
        let mut m = DMatrix::<f64>::zeros(d4, d4);
        for (col, e_in) in basis.iter().enumerate() {
            let image = self.act(e_in)?;
            for (row, e_out) in basis.iter().enumerate() {
                m[(row, col)] = (trace(&(e_out * &image)) * cr(norm)).re;
            }
        }
        Ok(m)
    }
}

impl PauliLiouville {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Channel fidelity of Eq.-style state fidelity on trace-N Choi matrices:
/// F = (1/N²)·(Tr √(√a · b · √a))², clamped into [0, 1].
pub fn channel_fidelity(a: &ChoiMatrix, b: &ChoiMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(QptError::Dimension(format!(
            "fidelity between dims {} and {}",
            a.dim, b.dim
        )));
    }
    let scale = fnorm(&a.matrix).max(1.0);
    let sa = herm_sqrt_clamped(&a.matrix, 1e-8 * scale).map_err(QptError::NotCompletelyPositive)?;
    let inner = &sa * &b.matrix * &sa;
    let (vals, _) = herm_eigen(&inner);
    let tr_sqrt: f64 = vals.iter().map(|&l| l.max(0.0).sqrt()).sum();
    let n2 = (a.dim * a.dim) as f64;
    Ok((tr_sqrt * tr_sqrt / n2).clamp(0.0, 1.0))
}

/// Strips a known unitary from a fitted superoperator: returns
/// fitted ∘ (unitary channel)⁻¹ − I at the Liouville level. Zero exactly when
/// the fit equals the unitary channel.
pub fn extract_noise(fitted: &LiouvilleMatrix, u: &CMat) -> Result<CMat> {
    let n = fitted.dim;
    if u.nrows() != n || u.ncols() != n {
        return Err(QptError::Dimension(format!(
            "unitary is {}x{}, channel dim {n}",
            u.nrows(),
            u.ncols()
        )));
    }
    let defect = fdist(&(u.adjoint() * u), &identity(n));
    if defect > 1e-8 {
        return Err(QptError::NotUnitary(defect));
    }
    let udag = u.adjoint();
    let inv = kron(&udag, &udag.map(|z| z.conj()));
    Ok(&fitted.matrix * inv - identity(n * n))
}

/// The single-qubit Pauli matrices (I, X, Y, Z).
pub fn pauli_matrices() -> [CMat; 4] {
    let i = identity(2);
    let x = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let y = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    let z = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    [i, x, y, z]
}

/// n-fold Pauli tensor basis ordered (I,X,Y,Z)⊗ⁿ lexicographically, first
/// qubit most significant.
pub fn pauli_basis(n_qubits: usize) -> Vec<CMat> {
    let single = pauli_matrices();
    let mut basis = vec![identity(1)];
    for _ in 0..n_qubits {
        let mut next = Vec::with_capacity(basis.len() * 4);
        for left in &basis {
            for s in &single {
                next.push(kron(left, s));
            }
        }
        basis = next;
    }
    basis
}

fn qubit_count(dim: usize) -> Result<usize> {
    let mut n = 0usize;
    let mut d = dim;
    while d > 1 && d % 2 == 0 {
        d /= 2;
        n += 1;
    }
    if d != 1 || dim < 2 {
        return Err(QptError::Invalid(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    Ok(n)
}
