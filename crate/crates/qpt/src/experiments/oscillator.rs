//! Bosonic-mode study on a truncated Fock space: a SNAP-after-displacement
//! process probed with coherent states and read out through displaced-parity
//! expectations, fit at low Kraus rank and scored on held-out parity points.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fock::FockOperators;
use super::mix_seed;
use crate::channel::KrausChannel;
use crate::error::{QptError, Result};
use crate::optimizer::{fit, loss, FitConfig, OptimizerKind};
use crate::tomography::{simulate_dataset, MeasurementSet, ProbeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorConfig {
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
    /// Coherent probe amplitudes as (re, im) pairs.
    pub probe_alphas: Vec<(f64, f64)>,
    /// Displaced-parity sample points used for fitting.
    pub train_betas: Vec<(f64, f64)>,
    /// Held-out parity points used only for evaluation.
    pub test_betas: Vec<(f64, f64)>,
    pub ranks: Vec<usize>,
    #[serde(default)]
    pub epsilon: f64,
    /// Weight of the dephasing branch mixed into the true process.
    #[serde(default = "default_process_mix")]
    pub process_mix: f64,
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Side length of the square β grid emitted for plotting.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_cutoff() -> usize {
    16
}

fn default_max_iters() -> usize {
    20_000
}

fn default_process_mix() -> f64 {
    0.1
}

fn default_grid_points() -> usize {
    21
}

impl OscillatorConfig {
    pub fn new(seed: u64) -> Self {
        let axis = [-0.9, -0.3, 0.3, 0.9];
        let mut probe_alphas = Vec::new();
        for &re in &axis {
            for &im in &axis {
                probe_alphas.push((re, im));
            }
        }
        let beta_axis = [-1.0, -0.6, -0.2, 0.2, 0.6, 1.0];
        let mut train_betas = Vec::new();
        for &re in &beta_axis {
            for &im in &beta_axis {
                train_betas.push((re, im));
            }
        }
        Self {
            cutoff: default_cutoff(),
            probe_alphas,
            train_betas,
            test_betas: vec![(0.25, 0.25), (0.6, -0.4), (-0.7, 0.1), (0.1, 0.75), (-0.3, -0.6)],
            ranks: vec![1, 2],
            epsilon: 0.0,
            process_mix: default_process_mix(),
            seed,
            max_iters: default_max_iters(),
            grid_points: default_grid_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorRow {
    pub rank: usize,
    pub train_loss: f64,
    pub holdout_rms: f64,
    pub tp_defect: f64,
    pub iterations: usize,
}

impl OscillatorRow {
    pub fn csv_header() -> &'static [&'static str] {
        &["rank", "train_loss", "holdout_rms", "tp_defect", "iterations"]
    }

    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.rank.to_string(),
            format!("{:e}", self.train_loss),
            format!("{:e}", self.holdout_rms),
            format!("{:e}", self.tp_defect),
            self.iterations.to_string(),
        ]
    }
}

/// Parity expectations of the vacuum output over a square β grid, for the
/// true process and the best-rank fit; rows index Im β, columns Re β.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityGrid {
    pub beta_re: Vec<f64>,
    pub beta_im: Vec<f64>,
    pub truth: DMatrix<f64>,
    pub fitted: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorResult {
    pub rows: Vec<OscillatorRow>,
    pub grid: ParityGrid,
}

fn build_sets(
    fock: &FockOperators,
    alphas: &[(f64, f64)],
    betas: &[(f64, f64)],
) -> Result<(ProbeSet, MeasurementSet)> {
    let dim = fock.cutoff();
    let states: Vec<_> = alphas
        .iter()
        .map(|&(re, im)| fock.coherent_state(Complex64::new(re, im)))
        .collect();
    let mut operators = Vec::with_capacity(betas.len());
    for &(re, im) in betas {
        let pi = fock.displaced_parity(Complex64::new(re, im));
        if pi.truncation_warning {
            return Err(QptError::Invalid(format!(
                "beta ({re}, {im}) too large for cutoff {dim}"
            )));
        }
        operators.push(pi.matrix);
    }
    Ok((ProbeSet::new(dim, states)?, MeasurementSet::new(dim, operators, false)?))
}

/// Truth process: SNAP after displacement with seeded parameters (|α| kept
/// well inside the truncation-safe disc), mixed with a weak random
/// number-dephasing branch so the channel is genuinely rank 2 and a unitary
/// (rank-1) fit is structurally too small.
fn seeded_process(fock: &FockOperators, mix: f64, seed: u64) -> Result<KrausChannel> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let alpha = Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
    let phases: Vec<f64> = (0..fock.cutoff())
        .map(|_| rng.random_range(0.0..std::f64::consts::PI))
        .collect();
    let u = fock.snap(&phases)? * fock.displacement(alpha).matrix;
    if mix == 0.0 {
        return KrausChannel::unitary(u);
    }
    let dephase: Vec<f64> = (0..fock.cutoff())
        .map(|_| rng.random_range(0.0..std::f64::consts::PI))
        .collect();
    KrausChannel::new(vec![
        &u * crate::linalg::cr((1.0 - mix).sqrt()),
        fock.snap(&dephase)? * &u * crate::linalg::cr(mix.sqrt()),
    ])
}

pub fn oscillator_study(config: &OscillatorConfig) -> Result<OscillatorResult> {
    if config.cutoff > 32 {
        return Err(QptError::Invalid(format!("cutoff must be <= 32, got {}", config.cutoff)));
    }
    if config.probe_alphas.is_empty() || config.train_betas.is_empty() || config.test_betas.is_empty()
    {
        return Err(QptError::Invalid("probe and beta grids must be non-empty".into()));
    }
    if config.ranks.is_empty() {
        return Err(QptError::Invalid("ranks must be non-empty".into()));
    }
    if !(0.0..1.0).contains(&config.process_mix) {
        return Err(QptError::Invalid(format!(
            "process_mix must be in [0, 1), got {}",
            config.process_mix
        )));
    }
    let fock = FockOperators::new(config.cutoff)?;
    let truth = seeded_process(&fock, config.process_mix, mix_seed(config.seed, &[0]))?;

    let (probes, train_meas) = build_sets(&fock, &config.probe_alphas, &config.train_betas)?;
    let (_, test_meas) = build_sets(&fock, &config.probe_alphas, &config.test_betas)?;
    let train =
        simulate_dataset(&truth, &probes, &train_meas, config.epsilon, mix_seed(config.seed, &[1]))?;
    let test = simulate_dataset(&truth, &probes, &test_meas, 0.0, mix_seed(config.seed, &[2]))?;

    let mut rows = Vec::new();
    let mut best: Option<KrausChannel> = None;
    for &rank in &config.ranks {
        let mut fc = FitConfig::new(rank, mix_seed(config.seed, &[3, rank as u64]));
        fc.optimizer = OptimizerKind::Sgd;
        fc.max_iters = config.max_iters;
        let report = fit(&train, &fc)?;
        let channel = report.final_channel.clone();
        let test_loss = loss(&channel.stack(), &test, None)?;
        rows.push(OscillatorRow {
            rank,
            train_loss: report.final_loss(),
            holdout_rms: (test_loss / test.len() as f64).sqrt(),
            tp_defect: channel.tp_defect(),
            iterations: report.iterations_run,
        });
        if best.as_ref().map_or(true, |_| rank == *config.ranks.iter().max().unwrap()) {
            best = Some(channel);
        }
    }
    let fitted = best.expect("at least one rank");

    let axis: Vec<f64> = (0..config.grid_points)
        .map(|k| -1.2 + 2.4 * k as f64 / (config.grid_points.max(2) - 1) as f64)
        .collect();
    let vacuum = {
        let mut v = crate::linalg::CMat::zeros(config.cutoff, config.cutoff);
        v[(0, 0)] = crate::linalg::cr(1.0);
        v
    };
    let truth_out = truth.apply(&vacuum)?;
    let fitted_out = fitted.apply(&vacuum)?;
    let mut grid_truth = DMatrix::<f64>::zeros(config.grid_points, config.grid_points);
    let mut grid_fitted = DMatrix::<f64>::zeros(config.grid_points, config.grid_points);
    for (r, &im) in axis.iter().enumerate() {
        for (cidx, &re) in axis.iter().enumerate() {
            let pi = fock.displaced_parity(Complex64::new(re, im)).matrix;
            grid_truth[(r, cidx)] = crate::linalg::trace(&(&pi * &truth_out)).re;
            grid_fitted[(r, cidx)] = crate::linalg::trace(&(&pi * &fitted_out)).re;
        }
    }

    Ok(OscillatorResult {
        rows,
        grid: ParityGrid { beta_re: axis.clone(), beta_im: axis, truth: grid_truth, fitted: grid_fitted },
    })
}
