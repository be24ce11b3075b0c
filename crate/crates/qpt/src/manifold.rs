//! Geometry of the complex Stiefel manifold {X ∈ ℂⁿˣᵖ : X†X = I}.
//!
//! The optimizer never leaves the manifold: ambient gradients are folded into
//! a skew-Hermitian direction W and the update follows the Cayley curve
//! Y(τ) = (I + τ/2·W)⁻¹(I − τ/2·W)·X, either by a direct linear solve or by
//! the fixed-point iteration that needs only matrix products.
//!
//! W built from an ascent gradient gives a descent curve: the velocity at
//! τ = 0 is −W·X = −proj_X(g).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QptError, Result};
use crate::linalg::{
    cr, fdist, hs_inner, identity, orthonormality_defect, orthonormalize,
    random_complex_gaussian, CMat,
};

/// Orthonormality tolerance for points accepted onto the manifold.
pub const STIEFEL_TOL: f64 = 1e-8;

/// Drift threshold past which an iterative retraction is re-orthonormalized.
/// Kept two orders below the acceptance tolerance so un-repaired iterates
/// still sit well inside the manifold.
const DRIFT_REPAIR_TOL: f64 = 1e-10;

/// An n×p matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    matrix: CMat,
}

/// An ambient matrix satisfying the tangency condition X†T + T†X = 0 at its
/// base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    matrix: CMat,
}

/// Skew-Hermitian update direction W = −W†.
///
/// Directions built from an ambient gradient keep the factored form
/// W = P·X† − X·P† (rank ≤ 2p), so products W·M cost O(np²) instead of
/// O(n²p); dense directions are supported for externally supplied W.
#[derive(Debug, Clone)]
pub struct SkewDirection {
    repr: SkewRepr,
}

#[derive(Debug, Clone)]
enum SkewRepr {
    Dense(CMat),
    Factored { p_mat: CMat, x: CMat },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Canonical,
}

impl StiefelPoint {
    pub fn new(matrix: CMat) -> Result<Self> {
        if matrix.nrows() < matrix.ncols() {
            return Err(QptError::Dimension(format!(
                "Stiefel point needs rows >= cols, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let defect = orthonormality_defect(&matrix);
        if defect > STIEFEL_TOL {
            return Err(QptError::Invalid(format!(
                "columns are not orthonormal: defect {defect:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMat) -> Self {
        Self { matrix }
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn defect(&self) -> f64 {
        orthonormality_defect(&self.matrix)
    }
}

impl TangentVector {
    /// Validates tangency at `x` within the manifold tolerance.
    pub fn new(x: &StiefelPoint, matrix: CMat) -> Result<Self> {
        if matrix.shape() != x.matrix.shape() {
            return Err(QptError::Dimension("tangent vector shape mismatch".into()));
        }
        let xt = x.matrix.adjoint() * &matrix;
        let defect = fdist(&xt, &(-xt.adjoint()));
        if defect > STIEFEL_TOL {
            return Err(QptError::Invalid(format!(
                "not tangent: skewness defect {defect:.3e}"
            )));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }
}

impl SkewDirection {
    /// Wraps a dense skew-Hermitian matrix, rejecting ‖W + W†‖_F > 1e−10
    /// relative to ‖W‖.
    pub fn from_dense(w: CMat) -> Result<Self> {
        if w.nrows() != w.ncols() {
            return Err(QptError::Dimension("skew direction must be square".into()));
        }
        let scale = w.norm().max(1.0);
        let defect = fdist(&w, &(-w.adjoint()));
        if defect > 1e-10 * scale {
            return Err(QptError::Invalid(format!(
                "matrix is not skew-Hermitian: defect {defect:.3e}"
            )));
        }
        Ok(Self { repr: SkewRepr::Dense(w) })
    }

    pub fn order(&self) -> usize {
        match &self.repr {
            SkewRepr::Dense(w) => w.nrows(),
            SkewRepr::Factored { x, .. } => x.nrows(),
        }
    }

    /// Materializes the full n×n matrix.
    pub fn dense(&self) -> CMat {
        match &self.repr {
            SkewRepr::Dense(w) => w.clone(),
            SkewRepr::Factored { p_mat, x } => {
                p_mat * x.adjoint() - x * p_mat.adjoint()
            }
        }
    }

    /// W·M without materializing W for factored directions.
    pub fn mul(&self, m: &CMat) -> CMat {
        match &self.repr {
            SkewRepr::Dense(w) => w * m,
            SkewRepr::Factored { p_mat, x } => {
                p_mat * (x.adjoint() * m) - x * (p_mat.adjoint() * m)
            }
        }
    }

    /// Frobenius norm of W.
    pub fn fnorm(&self) -> f64 {
        match &self.repr {
            SkewRepr::Dense(w) => w.norm(),
            SkewRepr::Factored { .. } => self.dense().norm(),
        }
    }
}

/// Tangent projection A − X·(X†A + A†X)/2.
pub fn project(x: &StiefelPoint, ambient: &CMat) -> Result<TangentVector> {
    if ambient.shape() != x.matrix.shape() {
        return Err(QptError::Dimension(format!(
            "ambient is {:?}, point is {:?}",
            ambient.shape(),
            x.matrix.shape()
        )));
    }
    let xa = x.matrix.adjoint() * ambient;
    let herm = (&xa + xa.adjoint()) * cr(0.5);
    Ok(TangentVector { matrix: ambient - &x.matrix * herm })
}

/// Riemannian inner product of two tangent vectors at x.
pub fn inner(x: &StiefelPoint, a: &TangentVector, b: &TangentVector, metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => hs_inner(&a.matrix, &b.matrix).re,
        Metric::Canonical => {
            let xa = x.matrix.adjoint() * &a.matrix;
            let xb = x.matrix.adjoint() * &b.matrix;
            (hs_inner(&a.matrix, &b.matrix) - hs_inner(&xa, &xb) * cr(0.5)).re
        }
    }
}

/// Skew-Hermitian direction from an ambient gradient:
/// Ŵ = g·X† − ½·X·(X†·g·X†) = (g − ½X(X†g))·X†, W = Ŵ − Ŵ†.
/// The curve velocity satisfies W·X = proj_X(g).
pub fn build_skew(x: &StiefelPoint, g: &CMat) -> Result<SkewDirection> {
    if g.shape() != x.matrix.shape() {
        return Err(QptError::Dimension(format!(
            "gradient is {:?}, point is {:?}",
            g.shape(),
            x.matrix.shape()
        )));
    }
    let xg = x.matrix.adjoint() * g;
    let p_mat = g - &x.matrix * (xg * cr(0.5));
    Ok(SkewDirection { repr: SkewRepr::Factored { p_mat, x: x.matrix.clone() } })
}

/// Cayley retraction by linear solve:
/// Y = (I + τ/2·W)⁻¹·(I − τ/2·W)·X.
pub fn cayley_direct(x: &StiefelPoint, w: &SkewDirection, tau: f64) -> Result<StiefelPoint> {
    let n = x.nrows();
    if w.order() != n {
        return Err(QptError::Dimension("skew direction does not match point".into()));
    }
    let half = cr(0.5 * tau);
    let rhs = &x.matrix - w.mul(&x.matrix) * half;
    let lhs = identity(n) + w.dense() * half;
    let lu = nalgebra::LU::new(lhs);
    let y = lu
        .solve(&rhs)
        .ok_or_else(|| QptError::NoConvergence("Cayley linear solve failed".into()))?;
    Ok(StiefelPoint { matrix: y })
}

/// Fixed-point iterative Cayley retraction with `s` inner iterations:
/// Y⁰ = X − τ·W·X, then Yⁱ = X − (τ/2)·W·(X + Yⁱ⁻¹).
/// Converges to [`cayley_direct`] geometrically with ratio ≈ τ‖W‖₂/2. The
/// output is re-orthonormalized when the drift exceeds 1e−10.
pub fn cayley_iterative(x: &StiefelPoint, w: &SkewDirection, tau: f64, s: usize) -> StiefelPoint {
    assert!(s >= 1, "iterative Cayley needs at least one inner iteration");
    let wx = w.mul(&x.matrix);
    let mut y = &x.matrix - &wx * cr(tau);
    for _ in 0..s {
        y = &x.matrix - (&wx + w.mul(&y)) * cr(0.5 * tau);
    }
    if orthonormality_defect(&y) > DRIFT_REPAIR_TOL {
        y = orthonormalize(&y);
    }
    StiefelPoint { matrix: y }
}

/// Exact exponential-map reference exp(−τW)·X, via the Hermitian
/// eigendecomposition of iW. Test and benchmark oracle.
pub fn exp_reference(x: &StiefelPoint, w: &SkewDirection, tau: f64) -> StiefelPoint {
    let h = w.dense() * Complex64::new(0.0, 1.0); // Hermitian
    let (vals, vecs) = crate::linalg::herm_eigen(&h);
    let n = vals.len();
    // exp(−τW) = exp(iτH) = V·diag(e^{iτλ})·V†
    let mut phases = CMat::zeros(n, n);
    for (i, &l) in vals.iter().enumerate() {
        phases[(i, i)] = Complex64::new(0.0, tau * l).exp();
    }
    let expm = &vecs * phases * vecs.adjoint();
    StiefelPoint { matrix: expm * &x.matrix }
}

/// Orthonormal n×p matrix from the QR factor of a seeded complex Gaussian.
pub fn random_stiefel(n: usize, p: usize, seed: u64) -> Result<StiefelPoint> {
    if n < p {
        return Err(QptError::Dimension(format!(
            "random Stiefel point needs n >= p, got n={n}, p={p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = orthonormalize(&random_complex_gaussian(n, p, &mut rng));
    Ok(StiefelPoint { matrix: q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_ambient(n: usize, p: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_complex_gaussian(n, p, &mut rng)
    }

    #[test]
    fn random_stiefel_is_orthonormal_and_deterministic() {
        let a = random_stiefel(8, 3, 5).unwrap();
        let b = random_stiefel(8, 3, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.defect() < 1e-10);
        let sq = random_stiefel(4, 4, 6).unwrap();
        assert!(fdist(&(sq.matrix() * sq.matrix().adjoint()), &identity(4)) < 1e-10);
        assert!(random_stiefel(2, 3, 0).is_err());
    }

    #[test]
    fn project_annihilates_the_point_itself() {
        let x = random_stiefel(6, 2, 1).unwrap();
        let t = project(&x, x.matrix()).unwrap();
        assert!(t.matrix().norm() < 1e-12);
    }

    #[test]
    fn project_is_idempotent_and_fixes_tangents() {
        let x = random_stiefel(7, 3, 2).unwrap();
        for seed in 0..20 {
            let a = random_ambient(7, 3, 100 + seed);
            let t1 = project(&x, &a).unwrap();
            let t2 = project(&x, t1.matrix()).unwrap();
            assert!(fdist(t1.matrix(), t2.matrix()) < 1e-12);
            // tangency invariant
            assert!(TangentVector::new(&x, t1.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn project_is_self_adjoint_in_euclidean_metric() {
        let x = random_stiefel(6, 2, 3).unwrap();
        for seed in 0..20 {
            let a = random_ambient(6, 2, 200 + seed);
            let b = random_ambient(6, 2, 300 + seed);
            let pa = project(&x, &a).unwrap();
            let pb = project(&x, &b).unwrap();
            let lhs = hs_inner(pa.matrix(), &b).re;
            let rhs = hs_inner(&a, pb.matrix()).re;
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn inner_zero_vector() {
        let x = random_stiefel(5, 2, 4).unwrap();
        let z = TangentVector::new(&x, CMat::zeros(5, 2)).unwrap();
        assert_eq!(inner(&x, &z, &z, Metric::Euclidean), 0.0);
        assert_eq!(inner(&x, &z, &z, Metric::Canonical), 0.0);
    }

    #[test]
    fn canonical_halves_the_vertical_component() {
        // a = X·Ω with Ω skew: canonical norm² = ½·euclidean norm².
        let x = random_stiefel(6, 3, 5).unwrap();
        let g = random_ambient(3, 3, 6);
        let omega = &g - g.adjoint();
        let a = TangentVector::new(&x, x.matrix() * omega).unwrap();
        let eu = inner(&x, &a, &a, Metric::Euclidean);
        let ca = inner(&x, &a, &a, Metric::Canonical);
        assert!((ca - 0.5 * eu).abs() < 1e-10 * eu.max(1.0));
    }

    #[test]
    fn metrics_agree_on_the_normal_complement() {
        let x = random_stiefel(6, 2, 7).unwrap();
        let a = random_ambient(6, 2, 8);
        // strip the X-component entirely: a ← (I − XX†)a
        let horiz = &a - x.matrix() * (x.matrix().adjoint() * &a);
        let t = TangentVector::new(&x, horiz).unwrap();
        let eu = inner(&x, &t, &t, Metric::Euclidean);
        let ca = inner(&x, &t, &t, Metric::Canonical);
        assert!((eu - ca).abs() < 1e-12 * eu.max(1.0));
    }

    #[test]
    fn build_skew_zero_gradient() {
        let x = random_stiefel(6, 2, 9).unwrap();
        let w = build_skew(&x, &CMat::zeros(6, 2)).unwrap();
        assert!(w.dense().norm() < 1e-15);
    }

    #[test]
    fn build_skew_is_skew_hermitian() {
        let x = random_stiefel(8, 3, 10).unwrap();
        let g = random_ambient(8, 3, 11);
        let w = build_skew(&x, &g).unwrap().dense();
        assert!(fdist(&w, &(-w.adjoint())) < 1e-12 * w.norm());
    }

    #[test]
    fn skew_velocity_equals_projection() {
        for seed in 0..10 {
            let x = random_stiefel(8, 3, 20 + seed).unwrap();
            let g = random_ambient(8, 3, 40 + seed);
            let w = build_skew(&x, &g).unwrap();
            let wx = w.mul(x.matrix());
            let proj = project(&x, &g).unwrap();
            assert!(fdist(&wx, proj.matrix()) < 1e-10);
        }
    }

    #[test]
    fn factored_mul_matches_dense() {
        let x = random_stiefel(10, 3, 12).unwrap();
        let g = random_ambient(10, 3, 13);
        let w = build_skew(&x, &g).unwrap();
        let m = random_ambient(10, 4, 14);
        assert!(fdist(&w.mul(&m), &(w.dense() * &m)) < 1e-10);
    }

    #[test]
    fn cayley_direct_zero_step() {
        let x = random_stiefel(6, 2, 15).unwrap();
        let w = build_skew(&x, &random_ambient(6, 2, 16)).unwrap();
        let y = cayley_direct(&x, &w, 0.0).unwrap();
        assert!(fdist(y.matrix(), x.matrix()) < 1e-15);
    }

    #[test]
    fn cayley_direct_stays_on_manifold() {
        for seed in 0..10 {
            let x = random_stiefel(8, 3, 50 + seed).unwrap();
            let w = build_skew(&x, &random_ambient(8, 3, 60 + seed)).unwrap();
            let y = cayley_direct(&x, &w, 0.3).unwrap();
            assert!(y.defect() < 1e-10);
        }
    }

    #[test]
    fn cayley_direct_third_order_against_exponential() {
        // err(τ/2)/err(τ) ≈ 1/8 for a third-order local error.
        for seed in 0..5 {
            let x = random_stiefel(8, 3, 70 + seed).unwrap();
            let w = build_skew(&x, &random_ambient(8, 3, 80 + seed)).unwrap();
            for tau in [1e-1, 1e-2] {
                let err = |t: f64| {
                    fdist(
                        cayley_direct(&x, &w, t).unwrap().matrix(),
                        exp_reference(&x, &w, t).matrix(),
                    )
                };
                let ratio = err(tau) / err(tau / 2.0);
                assert!((6.0..=10.0).contains(&ratio), "ratio {ratio} at tau {tau}");
            }
        }
    }

    #[test]
    fn cayley_iterative_zero_step() {
        let x = random_stiefel(6, 2, 17).unwrap();
        let w = build_skew(&x, &random_ambient(6, 2, 18)).unwrap();
        for s in [1, 2, 5] {
            let y = cayley_iterative(&x, &w, 0.0, s);
            assert!(fdist(y.matrix(), x.matrix()) < 1e-15);
        }
    }

    #[test]
    fn cayley_iterative_converges_to_direct() {
        let x = random_stiefel(8, 3, 19).unwrap();
        let w = build_skew(&x, &random_ambient(8, 3, 20)).unwrap();
        let tau = 0.05;
        let direct = cayley_direct(&x, &w, tau).unwrap();
        let deep = cayley_iterative(&x, &w, tau, 20);
        assert!(fdist(deep.matrix(), direct.matrix()) < 1e-10);
    }

    #[test]
    fn cayley_iterative_geometric_decay() {
        let x = random_stiefel(8, 3, 21).unwrap();
        let g = random_ambient(8, 3, 22);
        let w = build_skew(&x, &g).unwrap();
        let wn = spectral_norm(&w.dense());
        let tau = 0.4 / wn; // contraction factor τ‖W‖/2 = 0.2
        let direct = cayley_direct(&x, &w, tau).unwrap();
        let mut prev = f64::INFINITY;
        for s in 1..=6 {
            let d = fdist(cayley_iterative(&x, &w, tau, s).matrix(), direct.matrix());
            if prev.is_finite() && d > 1e-14 {
                let ratio = d / prev;
                assert!(ratio < 0.35, "ratio {ratio} at s={s}");
            }
            prev = d;
        }
    }

    #[test]
    fn cayley_iterative_s2_within_relative_bound() {
        // with τ‖W‖₂ ≤ 0.5 and s = 2 the distance to the direct transform is
        // at most a tenth of the step length ‖τWX‖.
        for seed in 0..10 {
            let x = random_stiefel(10, 3, 90 + seed).unwrap();
            let w = build_skew(&x, &random_ambient(10, 3, 110 + seed)).unwrap();
            let tau = 0.5 / spectral_norm(&w.dense());
            let direct = cayley_direct(&x, &w, tau).unwrap();
            let iter2 = cayley_iterative(&x, &w, tau, 2);
            let step = (w.mul(x.matrix()) * cr(tau)).norm();
            assert!(fdist(iter2.matrix(), direct.matrix()) <= 0.1 * step);
        }
    }

    #[test]
    fn exp_reference_zero_step_and_orthonormality() {
        let x = random_stiefel(7, 3, 23).unwrap();
        let w = build_skew(&x, &random_ambient(7, 3, 24)).unwrap();
        assert!(fdist(exp_reference(&x, &w, 0.0).matrix(), x.matrix()) < 1e-12);
        assert!(exp_reference(&x, &w, 0.7).defect() < 1e-10);
    }

    #[test]
    fn dense_skew_round_trip() {
        let x = random_stiefel(6, 2, 25).unwrap();
        let w = build_skew(&x, &random_ambient(6, 2, 26)).unwrap();
        let dense = SkewDirection::from_dense(w.dense()).unwrap();
        let y1 = cayley_direct(&x, &w, 0.2).unwrap();
        let y2 = cayley_direct(&x, &dense, 0.2).unwrap();
        assert!(fdist(y1.matrix(), y2.matrix()) < 1e-12);
        assert!(SkewDirection::from_dense(identity(3)).is_err());
    }

    #[test]
    fn long_run_drift_stays_bounded() {
        let mut x = random_stiefel(8, 2, 27).unwrap();
        for seed in 0..2000u64 {
            let g = random_ambient(8, 2, 1000 + seed) * cr(0.1);
            let w = build_skew(&x, &g).unwrap();
            x = cayley_iterative(&x, &w, 1e-2, 2);
        }
        assert!(x.defect() <= 1e-8);
    }
}
