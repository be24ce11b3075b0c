//! Wall-time and accuracy benchmark of the direct vs iterative Cayley
//! retraction against the exponential-map reference.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use super::mix_seed;
use crate::error::{QptError, Result};
use crate::linalg::{cr, fdist, random_complex_gaussian, spectral_norm};
use crate::manifold::{build_skew, cayley_direct, cayley_iterative, exp_reference, random_stiefel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetractionConfig {
    /// Stiefel ambient sizes n (points are n×p).
    pub sizes: Vec<usize>,
    #[serde(default = "default_cols")]
    pub cols: usize,
    pub taus: Vec<f64>,
    pub trials: usize,
    #[serde(default = "default_inner")]
    pub cayley_iters: usize,
    pub seed: u64,
}

fn default_cols() -> usize {
    8
}

fn default_inner() -> usize {
    2
}

impl RetractionConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            sizes: vec![64, 256, 512],
            cols: default_cols(),
            taus: vec![1e-3, 1e-2, 1e-1],
            trials: 3,
            cayley_iters: default_inner(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetractionRow {
    pub n: usize,
    pub method: String,
    pub tau: f64,
    pub trial: usize,
    pub wall_time_seconds: f64,
    pub error_vs_exp: f64,
    pub stiefel_defect: f64,
}

impl RetractionRow {
    pub fn csv_header() -> &'static [&'static str] {
        &["n", "method", "tau", "trial", "wall_time", "error_vs_exp", "stiefel_defect"]
    }

    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.method.clone(),
            format!("{:e}", self.tau),
            self.trial.to_string(),
            format!("{:e}", self.wall_time_seconds),
            format!("{:e}", self.error_vs_exp),
            format!("{:e}", self.stiefel_defect),
        ]
    }
}

/// For random (X, W) with ‖W‖₂ = 1, retracts with both methods at each τ and
/// reports wall time, distance to the exponential reference, and the output
/// orthonormality defect.
pub fn retraction_benchmark(config: &RetractionConfig) -> Result<Vec<RetractionRow>> {
    if config.sizes.is_empty() || config.taus.is_empty() || config.trials == 0 {
        return Err(QptError::Invalid("sizes, taus, and trials must be non-empty".into()));
    }
    for &n in &config.sizes {
        if n > 2048 || n < config.cols {
            return Err(QptError::Invalid(format!(
                "size {n} out of range [{}, 2048]",
                config.cols
            )));
        }
    }

    let mut instances = Vec::new();
    for &n in &config.sizes {
        for trial in 0..config.trials {
            instances.push((n, trial));
        }
    }

    let nested: Vec<Vec<RetractionRow>> = instances
        .par_iter()
        .map(|&(n, trial)| {
            let seed = mix_seed(config.seed, &[n as u64, trial as u64]);
            let x = random_stiefel(n, config.cols, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let g = random_complex_gaussian(n, config.cols, &mut rng);
            let scale = spectral_norm(&build_skew(&x, &g)?.dense());
            let w = build_skew(&x, &(&g * cr(1.0 / scale)))?;

            let mut rows = Vec::new();
            for &tau in &config.taus {
                let reference = exp_reference(&x, &w, tau);
                let t0 = Instant::now();
                let direct = cayley_direct(&x, &w, tau)?;
                let t_direct = t0.elapsed().as_secs_f64();
                let t1 = Instant::now();
                let iterative = cayley_iterative(&x, &w, tau, config.cayley_iters);
                let t_iter = t1.elapsed().as_secs_f64();
                rows.push(RetractionRow {
                    n,
                    method: "direct".into(),
                    tau,
                    trial,
                    wall_time_seconds: t_direct,
                    error_vs_exp: fdist(direct.matrix(), reference.matrix()),
                    stiefel_defect: direct.defect(),
                });
                rows.push(RetractionRow {
                    n,
                    method: "iterative".into(),
                    tau,
                    trial,
                    wall_time_seconds: t_iter,
                    error_vs_exp: fdist(iterative.matrix(), reference.matrix()),
                    stiefel_defect: iterative.defect(),
                });
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}
