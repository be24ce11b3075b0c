//! Truncated-Fock-space operators for the bosonic-mode study: displacement,
//! SNAP gates, and displaced-parity observables.

use num_complex::Complex64;

use crate::error::{QptError, Result};
use crate::linalg::{cr, herm_eigen, CMat, CVec};

/// Annihilation/creation pair on a Fock space truncated at `cutoff` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperators {
    cutoff: usize,
    a: CMat,
    adag: CMat,
}

/// A unitary built on the truncated space, flagged when its argument is large
/// enough for the truncation to be unreliable (|α|² > cutoff/4).
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedUnitary {
    pub matrix: CMat,
    pub truncation_warning: bool,
}

impl FockOperators {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff < 2 {
            return Err(QptError::Invalid(format!("cutoff must be >= 2, got {cutoff}")));
        }
        let mut a = CMat::zeros(cutoff, cutoff);
        for n in 1..cutoff {
            a[(n - 1, n)] = cr((n as f64).sqrt());
        }
        let adag = a.adjoint();
        Ok(Self { cutoff, a, adag })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn annihilation(&self) -> &CMat {
        &self.a
    }

    pub fn creation(&self) -> &CMat {
        &self.adag
    }

    /// D(α) = exp(α a† − α* a), via eigendecomposition of the Hermitian
    /// generator i(α a† − α* a).
    pub fn displacement(&self, alpha: Complex64) -> TruncatedUnitary {
        let gen = &self.adag * alpha - &self.a * alpha.conj();
        let h = gen.map(|z| z * Complex64::i());
        let (vals, vecs) = herm_eigen(&h);
        let mut phase = CMat::zeros(self.cutoff, self.cutoff);
        for (k, &l) in vals.iter().enumerate() {
            phase[(k, k)] = Complex64::from_polar(1.0, -l);
        }
        TruncatedUnitary {
            matrix: &vecs * phase * vecs.adjoint(),
            truncation_warning: alpha.norm_sqr() > self.cutoff as f64 / 4.0,
        }
    }

    /// SNAP gate S(φ) = diag(e^{iφ_0}, …, e^{iφ_{N−1}}).
    pub fn snap(&self, phases: &[f64]) -> Result<CMat> {
        if phases.len() != self.cutoff {
            return Err(QptError::Dimension(format!(
                "need {} phases, got {}",
                self.cutoff,
                phases.len()
            )));
        }
        let mut s = CMat::zeros(self.cutoff, self.cutoff);
        for (n, &p) in phases.iter().enumerate() {
            s[(n, n)] = Complex64::from_polar(1.0, p);
        }
        Ok(s)
    }

    /// Photon-number parity diag(1, −1, 1, …).
    pub fn parity(&self) -> CMat {
        let mut p = CMat::zeros(self.cutoff, self.cutoff);
        for n in 0..self.cutoff {
            p[(n, n)] = cr(if n % 2 == 0 { 1.0 } else { -1.0 });
        }
        p
    }

    /// Displaced parity Π_d(β) = D(β)·diag((−1)ⁿ)·D(β)†.
    pub fn displaced_parity(&self, beta: Complex64) -> TruncatedUnitary {
        let d = self.displacement(beta);
        TruncatedUnitary {
            matrix: &d.matrix * self.parity() * d.matrix.adjoint(),
            truncation_warning: d.truncation_warning,
        }
    }

    /// Coherent state |α⟩ = D(α)|0⟩ as a ket.
    pub fn coherent_ket(&self, alpha: Complex64) -> CVec {
        self.displacement(alpha).matrix.column(0).into_owned()
    }

    /// Coherent state as a density matrix |α⟩⟨α|.
    pub fn coherent_state(&self, alpha: Complex64) -> CMat {
        let ket = self.coherent_ket(alpha);
        let mut rho = CMat::zeros(self.cutoff, self.cutoff);
        for r in 0..self.cutoff {
            for cc in 0..self.cutoff {
                rho[(r, cc)] = ket[r] * ket[cc].conj();
            }
        }
        rho
    }
}
