//! Dense complex matrix helpers shared across the crate.
//!
//! Everything operates on dynamically sized `nalgebra` matrices over
//! `Complex<f64>`. Vectorization is row-major: `vec(ρ)` stacks the rows of ρ,
//! so `vec(AXB) = (A ⊗ Bᵀ)·vec(X)` and the Liouville form of a Kraus channel
//! is `Σ_l K_l ⊗ conj(K_l)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Frobenius norm.
pub fn fnorm(m: &CMat) -> f64 {
    m.norm()
}

/// Frobenius distance ‖a − b‖_F.
pub fn fdist(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

/// Hilbert–Schmidt inner product Tr(a† b).
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// ‖X†X − I‖_F, the orthonormality defect of a tall matrix.
pub fn orthonormality_defect(x: &CMat) -> f64 {
    let p = x.ncols();
    fdist(&(x.adjoint() * x), &identity(p))
}

/// Row-major vectorization: stacks the rows of `m` into a column vector.
pub fn vec_row(m: &CMat) -> CVec {
    let (rows, cols) = m.shape();
    let mut v = CVec::zeros(rows * cols);
    for r in 0..rows {
        for cidx in 0..cols {
            v[r * cols + cidx] = m[(r, cidx)];
        }
    }
    v
}

/// Inverse of [`vec_row`].
pub fn unvec_row(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols);
    CMat::from_fn(rows, cols, |r, cidx| v[r * cols + cidx])
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
/// The input is symmetrized first; callers must pass matrices that are
/// Hermitian up to round-off.
pub fn herm_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()) * cr(0.5);
    let se = nalgebra::SymmetricEigen::new(h);
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &se.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// Principal square root of a Hermitian PSD matrix. Eigenvalues in
/// `[-neg_tol, 0)` are clamped to zero; anything below `-neg_tol` is an error
/// reported as the offending eigenvalue.
pub fn herm_sqrt_clamped(m: &CMat, neg_tol: f64) -> Result<CMat, f64> {
    let (vals, vecs) = herm_eigen(m);
    if let Some(&lo) = vals.first() {
        if lo < -neg_tol {
            return Err(lo);
        }
    }
    let n = vals.len();
    let mut out = CMat::zeros(n, n);
    for (i, &l) in vals.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        if s > 0.0 {
            let v = vecs.column(i);
            for r in 0..n {
                for cidx in 0..n {
                    out[(r, cidx)] += v[r] * v[cidx].conj() * cr(s);
                }
            }
        }
    }
    Ok(out)
}

/// Spectral norm via power iteration on M†M. Deterministic start vector.
pub fn spectral_norm(m: &CMat) -> f64 {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut v = CVec::from_fn(cols, |i, _| c(1.0 + (i as f64) * 0.37, 0.3 - (i as f64) * 0.11));
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    v /= cr(nv);
    let mh = m.adjoint();
    let mut sigma = 0.0_f64;
    for _ in 0..100 {
        let w = m * &v;
        let u = &mh * w;
        let nu = u.norm();
        if nu == 0.0 {
            return 0.0;
        }
        let next = nu.sqrt();
        let rel = (next - sigma).abs() / next.max(1e-300);
        sigma = next;
        v = u / cr(nu);
        if rel < 1e-12 {
            break;
        }
    }
    sigma
}

/// Matrix with i.i.d. complex Gaussian entries (unit variance per component).
pub fn random_complex_gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

/// Thin QR orthonormalization with the diagonal of R made real-positive, so
/// the result is a deterministic function of the input.
pub fn orthonormalize(m: &CMat) -> CMat {
    let (rows, cols) = m.shape();
    assert!(rows >= cols, "orthonormalize requires rows >= cols");
    let qr = nalgebra::QR::new(m.clone());
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        let mag = d.norm();
        if mag > 0.0 {
            let phase = d / cr(mag);
            // multiply column j of Q by phase so that R's diagonal is positive
            for i in 0..rows {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Trace of a square matrix.
pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vec_row_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_complex_gaussian(3, 5, &mut rng);
        let v = vec_row(&m);
        assert_eq!(unvec_row(&v, 3, 5), m);
    }

    #[test]
    fn vec_row_is_row_major() {
        // vec(AXB) = (A ⊗ Bᵀ) vec(X)
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_complex_gaussian(3, 3, &mut rng);
        let x = random_complex_gaussian(3, 3, &mut rng);
        let b = random_complex_gaussian(3, 3, &mut rng);
        let lhs = vec_row(&(&a * &x * &b));
        let rhs = kron(&a, &b.transpose()) * vec_row(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn orthonormalize_produces_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_complex_gaussian(8, 3, &mut rng);
        let q = orthonormalize(&m);
        assert!(orthonormality_defect(&q) < 1e-12);
    }

    #[test]
    fn herm_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_complex_gaussian(4, 4, &mut rng);
        let psd = &g * g.adjoint();
        let s = herm_sqrt_clamped(&psd, 1e-8).unwrap();
        assert!(fdist(&(&s * &s), &psd) < 1e-9 * fnorm(&psd).max(1.0));
    }

    #[test]
    fn spectral_norm_matches_svd_on_small_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let m = random_complex_gaussian(6, 4, &mut rng);
            let svd = m.clone().svd(false, false);
            let exact = svd.singular_values[0];
            assert!((spectral_norm(&m) - exact).abs() < 1e-8 * exact);
        }
    }
}
