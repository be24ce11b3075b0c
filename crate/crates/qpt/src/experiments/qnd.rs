//! Simulated quantum-non-demolition measurement chain: a system qubit
//! repeatedly coupled to a fresh detector qubit through a fixed unitary,
//! yielding a repetition-invariant system channel. Ideal detector
//! initialization gives a rank-2 channel; mis-initialization raises the rank
//! to 4. Fits at several ranks are compared on held-out records.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mix_seed;
use crate::channel::{pauli_matrices, KrausChannel};
use crate::error::{QptError, Result};
use crate::linalg::{cr, fdist, herm_eigen, identity, kron, trace, CMat};
use crate::optimizer::{fit, loss, FitConfig};
use crate::tomography::{
    pauli_eigenstate_set, simulate_dataset, train_test_split, ProbeSet, TomographyDataset,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QndConfig {
    /// 4×4 Hermitian coupling Hamiltonian, row-major (re, im) entries,
    /// detector qubit as the leading tensor factor. `None` uses a built-in
    /// entangling default.
    pub hamiltonian: Option<Vec<Vec<(f64, f64)>>>,
    pub dt: f64,
    /// Number of channel applications tracked per probe state.
    pub n_repetitions: usize,
    pub ranks: Vec<usize>,
    /// Weight of the detector starting in |1⟩ instead of |0⟩.
    pub detector_error: f64,
    #[serde(default = "default_readout_sigma")]
    pub readout_sigma: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    pub seed: u64,
}

fn default_readout_sigma() -> f64 {
    0.01
}

fn default_trials() -> usize {
    30
}

fn default_test_fraction() -> f64 {
    0.3
}

fn default_max_iters() -> usize {
    3000
}

impl QndConfig {
    pub fn new(detector_error: f64, seed: u64) -> Self {
        Self {
            hamiltonian: None,
            dt: 0.8,
            n_repetitions: 5,
            ranks: vec![2, 3, 4],
            detector_error,
            readout_sigma: default_readout_sigma(),
            trials: default_trials(),
            test_fraction: default_test_fraction(),
            max_iters: default_max_iters(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QndRow {
    pub trial: usize,
    pub rank: usize,
    /// Mean squared residual per training record.
    pub train_mse: f64,
    /// Mean squared residual per held-out record.
    pub test_mse: f64,
}

impl QndRow {
    pub fn csv_header() -> &'static [&'static str] {
        &["trial", "rank", "train_loss", "test_loss"]
    }

    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.trial.to_string(),
            self.rank.to_string(),
            format!("{:e}", self.train_mse),
            format!("{:e}", self.test_mse),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QndResult {
    pub rows: Vec<QndRow>,
    /// (rank, mean train MSE, mean test MSE) in the config's rank order.
    pub summary: Vec<(usize, f64, f64)>,
    /// Steady state of the true channel, when the iteration converges.
    pub steady: Option<CMat>,
}

/// An entangling default coupling mixing several detector/system axes, so
/// the |1⟩-conditioned Kraus pair leaves the span of the ideal pair and
/// detector mis-initialization genuinely raises the Kraus rank to 4.
pub fn default_hamiltonian() -> CMat {
    let [i, x, y, z] = pauli_matrices();
    kron(&x, &z) + kron(&y, &x) * cr(0.7) + kron(&z, &y) * cr(0.5) + kron(&x, &i) * cr(0.3)
}

fn unitary_from_hamiltonian(h: &CMat, dt: f64) -> Result<CMat> {
    if h.nrows() != 4 || h.ncols() != 4 {
        return Err(QptError::Dimension(format!("hamiltonian is {}x{}", h.nrows(), h.ncols())));
    }
    if fdist(h, &h.adjoint()) > 1e-10 {
        return Err(QptError::Invalid("hamiltonian must be Hermitian".into()));
    }
    let (vals, vecs) = herm_eigen(h);
    let mut phase = CMat::zeros(4, 4);
    for (k, &l) in vals.iter().enumerate() {
        phase[(k, k)] = Complex64::from_polar(1.0, -l * dt);
    }
    Ok(&vecs * phase * vecs.adjoint())
}

/// System channel for one measurement repetition: Kraus blocks of
/// U = exp(−iH·dt) conditioned on the detector outcome, with the detector
/// starting in |0⟩ (weight 1−e) or erroneously in |1⟩ (weight e).
pub fn qnd_channel(h: &CMat, dt: f64, detector_error: f64) -> Result<KrausChannel> {
    if dt <= 0.0 {
        return Err(QptError::Invalid(format!("dt must be positive, got {dt}")));
    }
    if !(0.0..1.0).contains(&detector_error) {
        return Err(QptError::Invalid(format!(
            "detector_error must be in [0, 1), got {detector_error}"
        )));
    }
    let u = unitary_from_hamiltonian(h, dt)?;
    let e = detector_error;
    let mut ops = Vec::new();
    for d in 0..2 {
        let a = u.view((2 * d, 0), (2, 2)).into_owned();
        ops.push(a * cr((1.0 - e).sqrt()));
    }
    if e > 0.0 {
        for d in 0..2 {
            let b = u.view((2 * d, 2), (2, 2)).into_owned();
            ops.push(b * cr(e.sqrt()));
        }
    }
    KrausChannel::new(ops)
}

/// Iterates ρ ← ℰ(ρ) from the maximally mixed state until the update is
/// below `tol`, then cross-checks the fixed point against the eigenvalue-1
/// Liouville eigenvector when that eigenvector is unique.
pub fn steady_state(channel: &KrausChannel, tol: f64, max_iters: usize) -> Result<CMat> {
    if tol <= 0.0 {
        return Err(QptError::Invalid(format!("tol must be positive, got {tol}")));
    }
    let n = channel.dim();
    let mut rho = identity(n) * cr(1.0 / n as f64);
    let mut converged = false;
    for _ in 0..max_iters {
        let next = channel.apply(&rho)?;
        let delta = fdist(&next, &rho);
        rho = next;
        if delta < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(QptError::NoConvergence(format!(
            "no steady state after {max_iters} iterations"
        )));
    }
    // spectral cross-check: the kernel of L − I should contain ρ*
    let m = channel.to_liouville().matrix() - identity(n * n);
    let svd = m.svd(false, true);
    let mut svals: Vec<f64> = svd.singular_values.iter().copied().collect();
    svals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let unique_kernel = svals.len() >= 2 && svals[1] > 1e-6;
    if unique_kernel {
        let v_t = svd.v_t.expect("requested");
        let last = v_t.nrows() - 1;
        let kernel_vec =
            crate::linalg::CVec::from_iterator(n * n, v_t.row(last).iter().map(|z| z.conj()));
        let mut cand = crate::linalg::unvec_row(&kernel_vec, n, n);
        cand = (&cand + cand.adjoint()) * cr(0.5);
        let tr = trace(&cand);
        if tr.norm() > 1e-8 {
            cand *= cr(1.0) / tr;
            let threshold = (10.0 * tol).max(1e-6);
            if fdist(&cand, &rho) > threshold {
                return Err(QptError::NoConvergence(format!(
                    "iterate disagrees with the Liouville fixed point by {:.3e}",
                    fdist(&cand, &rho)
                )));
            }
        }
    }
    Ok(rho)
}

fn trial_dataset(
    truth: &KrausChannel,
    n_repetitions: usize,
    sigma: f64,
    seed: u64,
) -> Result<TomographyDataset> {
    let (base_probes, meas) = pauli_eigenstate_set(1)?;
    let mut states = Vec::with_capacity(base_probes.len() * n_repetitions);
    for rho0 in base_probes.states() {
        let mut rho = rho0.clone();
        for _ in 0..n_repetitions {
            states.push(rho.clone());
            rho = truth.apply(&rho)?;
        }
    }
    let probes = ProbeSet::new(2, states)?;
    simulate_dataset(truth, &probes, &meas, sigma, seed)
}

pub fn qnd_study(config: &QndConfig) -> Result<QndResult> {
    if config.n_repetitions == 0 || config.trials == 0 || config.ranks.is_empty() {
        return Err(QptError::Invalid(
            "n_repetitions, trials, and ranks must be non-empty".into(),
        ));
    }
    let h = match &config.hamiltonian {
        Some(entries) => {
            if entries.len() != 4 || entries.iter().any(|row| row.len() != 4) {
                return Err(QptError::Dimension("hamiltonian must be 4x4".into()));
            }
            let mut m = CMat::zeros(4, 4);
            for (r, row) in entries.iter().enumerate() {
                for (c, &(re, im)) in row.iter().enumerate() {
                    m[(r, c)] = Complex64::new(re, im);
                }
            }
            m
        }
        None => default_hamiltonian(),
    };
    let truth = qnd_channel(&h, config.dt, config.detector_error)?;

    let nested: Vec<Vec<QndRow>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let data = trial_dataset(
                &truth,
                config.n_repetitions,
                config.readout_sigma,
                mix_seed(config.seed, &[0, trial as u64]),
            )?;
            let (train, test) =
                train_test_split(&data, config.test_fraction, mix_seed(config.seed, &[1, trial as u64]))?;
            let mut rows = Vec::new();
            for &rank in &config.ranks {
                let mut fc = FitConfig::new(rank, mix_seed(config.seed, &[2, trial as u64, rank as u64]));
                fc.max_iters = config.max_iters;
                let report = fit(&train, &fc)?;
                let channel = report.final_channel.stack();
                rows.push(QndRow {
                    trial,
                    rank,
                    train_mse: loss(&channel, &train, None)? / train.len() as f64,
                    test_mse: loss(&channel, &test, None)? / test.len() as f64,
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<QndRow> = nested.into_iter().flatten().collect();

    let summary = config
        .ranks
        .iter()
        .map(|&rank| {
            let per: Vec<&QndRow> = rows.iter().filter(|r| r.rank == rank).collect();
            let mean = |f: fn(&QndRow) -> f64| per.iter().map(|r| f(r)).sum::<f64>() / per.len() as f64;
            (rank, mean(|r| r.train_mse), mean(|r| r.test_mse))
        })
        .collect();
    let steady = steady_state(&truth, 1e-10, 100_000).ok();
    Ok(QndResult { rows, summary, steady })
}
