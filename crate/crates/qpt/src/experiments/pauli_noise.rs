//! Two-qubit demo: fit a ZZ-dephasing channel composed after a random
//! unitary, then strip the unitary to expose the noise in the
//! Pauli-Liouville picture.

use nalgebra::DMatrix;

use super::mix_seed;
use crate::channel::KrausChannel;
use crate::error::{QptError, Result};
use crate::linalg::{cr, orthonormalize, random_complex_gaussian, CMat};
use crate::optimizer::{fit, FitConfig, OptimizerKind};
use crate::tomography::{evaluate, pauli_eigenstate_set, simulate_dataset};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PauliNoiseConfig {
    pub p: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub seed: u64,
}

impl PauliNoiseConfig {
    pub fn new(seed: u64) -> Self {
        Self { p: 0.25, epsilon: 0.0, seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliNoiseResult {
    pub fitted: KrausChannel,
    /// Pauli-Liouville matrix of the full fitted channel.
    pub fitted_ptm: DMatrix<f64>,
    /// Pauli-Liouville matrix of fit ∘ U⁻¹ minus identity.
    pub noise_part: DMatrix<f64>,
    pub fidelity: f64,
    pub final_loss: f64,
    /// The seeded unitary the noise was composed with.
    pub unitary: CMat,
}

fn zz() -> CMat {
    let p = crate::channel::pauli_matrices();
    crate::linalg::kron(&p[3], &p[3])
}

/// Builds ℰ = N_p ∘ U with N_p(ρ) = p·ρ + (1−p)·ZZ ρ ZZ and a seeded Haar
/// 4×4 unitary, simulates Pauli tomography data at noise level `epsilon`,
/// fits a rank-2 channel, and extracts the noise part.
pub fn pauli_noise_demo(p: f64, epsilon: f64, seed: u64) -> Result<PauliNoiseResult> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QptError::Invalid(format!("p must be in [0, 1], got {p}")));
    }
    let u = {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mix_seed(seed, &[0]));
        orthonormalize(&random_complex_gaussian(4, 4, &mut rng))
    };
    let truth = KrausChannel::new(vec![&u * cr(p.sqrt()), zz() * &u * cr((1.0 - p).sqrt())])?;

    let (probes, meas) = pauli_eigenstate_set(2)?;
    let data = simulate_dataset(&truth, &probes, &meas, epsilon, mix_seed(seed, &[1]))?;

    let mut fc = FitConfig::new(2, mix_seed(seed, &[2]));
    fc.optimizer = OptimizerKind::Sgd;
    let report = fit(&data, &fc)?;

    let fitted = report.final_channel.clone();
    let fitted_ptm = fitted.to_pauli_liouville()?.matrix().clone();
    let u_inverse = KrausChannel::unitary(u.adjoint())?.to_liouville();
    let stripped = fitted.to_liouville().compose(&u_inverse)?;
    let noise_part = stripped.to_pauli_matrix()? - DMatrix::<f64>::identity(16, 16);
    let ev = evaluate(&fitted, &truth)?;
    Ok(PauliNoiseResult {
        fitted,
        fitted_ptm,
        noise_part,
        fidelity: ev.fidelity,
        final_loss: report.final_loss(),
        unitary: u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_probability_out_of_range() {
        assert!(pauli_noise_demo(1.5, 0.0, 1).is_err());
        assert!(pauli_noise_demo(-0.1, 0.0, 1).is_err());
    }

    #[test]
    fn pure_unitary_has_vanishing_noise_part() {
        let result = pauli_noise_demo(1.0, 0.0, 2).unwrap();
        let max = result.noise_part.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
        assert!(max <= 0.05, "max noise-part entry {max}");
        assert!(result.fidelity >= 0.99);
    }

    #[test]
    fn noise_part_diagonal_matches_zz_analytics() {
        let p = 0.25;
        let result = pauli_noise_demo(p, 0.0, 3).unwrap();
        for k in 0..16 {
            let got = result.noise_part[(k, k)];
            let near_zero = got.abs() <= 0.05;
            let near_flip = (got - (2.0 * p - 2.0)).abs() <= 0.05;
            assert!(near_zero || near_flip, "diag[{k}] = {got}");
        }
        // ZZ commutes with exactly half the Pauli basis
        let flipped = (0..16)
            .filter(|&k| (result.noise_part[(k, k)] - (2.0 * p - 2.0)).abs() <= 0.05)
            .count();
        assert_eq!(flipped, 8);
    }
}
