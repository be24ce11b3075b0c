//! Random-channel reconstruction sweeps over (rank, noise level, data
//! fraction) grids. One row per grid cell and trial.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mix_seed;
use crate::channel::KrausChannel;
use crate::error::{QptError, Result};
use crate::optimizer::{fit, FitConfig, OptimizerKind};
use crate::tomography::{evaluate, pauli_eigenstate_set, simulate_dataset, subsample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomChannelConfig {
    pub n_qubits: usize,
    /// Kraus rank of the generated target; `None` means full rank N².
    pub true_rank: Option<usize>,
    pub fit_ranks: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub nus: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_optimizer")]
    pub optimizer: OptimizerKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_max_iters() -> usize {
    20_000
}

fn default_optimizer() -> OptimizerKind {
    OptimizerKind::Sgd
}

fn default_alpha() -> f64 {
    1e-2
}

impl RandomChannelConfig {
    pub fn new(n_qubits: usize, seed: u64) -> Self {
        Self {
            n_qubits,
            true_rank: None,
            fit_ranks: vec![4_usize.pow(n_qubits as u32)],
            epsilons: vec![0.0],
            nus: vec![1.0],
            trials: 1,
            seed,
            max_iters: default_max_iters(),
            optimizer: default_optimizer(),
            alpha: default_alpha(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomChannelRow {
    pub n_qubits: usize,
    pub fit_rank: usize,
    pub epsilon: f64,
    pub nu: f64,
    pub trial: usize,
    pub final_loss: f64,
    pub fidelity: f64,
    pub iterations: usize,
    pub wall_time_seconds: f64,
}

impl RandomChannelRow {
    pub fn csv_header() -> &'static [&'static str] {
        &["n", "rank", "epsilon", "nu", "trial", "final_loss", "fidelity", "iterations", "wall_time"]
    }

    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.n_qubits.to_string(),
            self.fit_rank.to_string(),
            format!("{:e}", self.epsilon),
            self.nu.to_string(),
            self.trial.to_string(),
            format!("{:e}", self.final_loss),
            format!("{:.6}", self.fidelity),
            self.iterations.to_string(),
            format!("{:.3}", self.wall_time_seconds),
        ]
    }
}

/// For each (trial, epsilon, nu, fit rank) cell: draw a random target
/// (shared across cells of the same trial), simulate noisy Pauli tomography
/// data, subsample, fit, and score against the truth.
pub fn random_channel_study(config: &RandomChannelConfig) -> Result<Vec<RandomChannelRow>> {
    if config.n_qubits < 1 || config.n_qubits > 3 {
        return Err(QptError::Invalid(format!(
            "n_qubits must be in [1, 3], got {}",
            config.n_qubits
        )));
    }
    if config.fit_ranks.is_empty() || config.epsilons.is_empty() || config.nus.is_empty() {
        return Err(QptError::Invalid("parameter grids must be non-empty".into()));
    }
    if config.trials == 0 {
        return Err(QptError::Invalid("trials must be positive".into()));
    }
    let dim = 1usize << config.n_qubits;
    let true_rank = config.true_rank.unwrap_or(dim * dim);
    let (probes, meas) = pauli_eigenstate_set(config.n_qubits)?;

    let mut cells = Vec::new();
    for trial in 0..config.trials {
        for (ei, &epsilon) in config.epsilons.iter().enumerate() {
            for (vi, &nu) in config.nus.iter().enumerate() {
                for &fit_rank in &config.fit_ranks {
                    cells.push((trial, ei, epsilon, vi, nu, fit_rank));
                }
            }
        }
    }

    cells
        .par_iter()
        .map(|&(trial, ei, epsilon, vi, nu, fit_rank)| {
            let truth = KrausChannel::random(
                dim,
                true_rank,
                mix_seed(config.seed, &[0, trial as u64]),
            )?;
            let full = simulate_dataset(
                &truth,
                &probes,
                &meas,
                epsilon,
                mix_seed(config.seed, &[1, trial as u64, ei as u64]),
            )?;
            let data = if nu < 1.0 {
                subsample(&full, nu, mix_seed(config.seed, &[2, trial as u64, vi as u64]))?
            } else {
                full
            };
            let mut fc = FitConfig::new(
                fit_rank,
                mix_seed(config.seed, &[3, trial as u64, ei as u64, vi as u64, fit_rank as u64]),
            );
            fc.max_iters = config.max_iters;
            fc.optimizer = config.optimizer;
            fc.hyper.alpha = config.alpha;
            let report = fit(&data, &fc)?;
            let ev = evaluate(&report.final_channel, &truth)?;
            Ok(RandomChannelRow {
                n_qubits: config.n_qubits,
                fit_rank,
                epsilon,
                nu,
                trial,
                final_loss: report.final_loss(),
                fidelity: ev.fidelity,
                iterations: report.iterations_run,
                wall_time_seconds: report.wall_time_seconds,
            })
        })
        .collect()
}
