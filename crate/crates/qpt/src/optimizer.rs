//! Least-squares QPT loss, its analytic ambient gradient, and stochastic
//! Riemannian optimizers over the stacked-Kraus point.
//!
//! The loss is ℓ(𝕜) = Σ_(i,j) [d(i,j) − Tr(M_j Σ_c K_c ρ_i K_c†)]². Its
//! Euclidean gradient block for operator c is G_c = −2·Σ r(i,j)·M_j K_c ρ_i,
//! which satisfies d/dt ℓ(𝕜 + tΔ)|₀ = 2·Re Tr(G†Δ) for any real direction Δ.
//! Steps fold G (or an Adam-rescaled momentum) into a skew direction and move
//! along the iterative Cayley curve, so every iterate keeps 𝕜†𝕜 = I.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{KrausChannel, StackedKraus};
use crate::error::{QptError, Result};
use crate::linalg::{cr, orthonormality_defect, CMat};
use crate::manifold::{self, StiefelPoint};
use crate::tomography::TomographyDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Step-rule hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    /// Learning rate α (the Cayley curve parameter τ).
    pub alpha: f64,
    /// Momentum decay β₁.
    pub beta1: f64,
    /// Second-moment decay β₂ (Adam only).
    pub beta2: f64,
    /// Adam denominator floor ε.
    pub eps_adam: f64,
    /// Inner iterations of the fixed-point Cayley transform.
    pub cayley_iters: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Self { alpha: 1e-2, beta1: 0.9, beta2: 0.999, eps_adam: 1e-8, cayley_iters: 3 }
    }
}

/// Fit configuration. `batch_size: None` means min(64, record count).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub rank: usize,
    pub max_iters: usize,
    pub batch_size: Option<usize>,
    pub stop_tol: f64,
    pub stop_window: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub hyper: Hyper,
    /// Full-data loss is recorded every this many iterations.
    pub record_every: usize,
}

impl FitConfig {
    pub fn new(rank: usize, seed: u64) -> Self {
        Self {
            rank,
            max_iters: 20_000,
            batch_size: None,
            stop_tol: 1e-8,
            stop_window: 200,
            seed,
            optimizer: OptimizerKind::Adam,
            hyper: Hyper::default(),
            record_every: 10,
        }
    }
}

/// Mutable optimizer state carried across steps.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub step: usize,
    pub momentum: CMat,
    pub second_moment: f64,
    pub hyper: Hyper,
}

impl OptimizerState {
    pub fn new(rows: usize, cols: usize, hyper: Hyper) -> Self {
        Self { step: 0, momentum: CMat::zeros(rows, cols), second_moment: 0.0, hyper }
    }
}

/// Indices into a dataset's record list forming one minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBatch {
    indices: Vec<usize>,
}

impl LossBatch {
    pub fn new(indices: Vec<usize>, data: &TomographyDataset) -> Result<Self> {
        if indices.is_empty() {
            return Err(QptError::Invalid("batch must be non-empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for &i in &indices {
            if i >= data.len() {
                return Err(QptError::Invalid(format!("record index {i} out of range")));
            }
            if !seen.insert(i) {
                return Err(QptError::Invalid(format!("duplicate record index {i}")));
            }
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSample {
    pub iteration: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    Converged,
}

/// Outcome of a fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub config: FitConfig,
    pub loss_history: Vec<LossSample>,
    pub final_channel: KrausChannel,
    pub iterations_run: usize,
    pub wall_time_seconds: f64,
    pub stop_reason: StopReason,
    /// Largest ‖𝕜†𝕜 − I‖_F observed across all iterates.
    pub max_stiefel_defect: f64,
}

impl FitReport {
    pub fn final_loss(&self) -> f64 {
        self.loss_history.last().map(|s| s.loss).unwrap_or(f64::NAN)
    }
}

#[inline]
fn trace_prod(a: &CMat, b: &CMat) -> Complex64 {
    // Tr(a·b) without forming the product
    let n = a.nrows();
    let mut s = Complex64::new(0.0, 0.0);
    for r in 0..n {
        for cc in 0..n {
            s += a[(r, cc)] * b[(cc, r)];
        }
    }
    s
}

/// Shared loss/gradient evaluation over an arbitrary ambient kN×N matrix.
/// Records are grouped by probe so each K_c·ρ_i product is computed once.
fn eval_ambient(
    point: &CMat,
    data: &TomographyDataset,
    batch: Option<&[usize]>,
    want_grad: bool,
) -> Result<(f64, Option<CMat>)> {
    let dim = data.dim();
    if point.ncols() != dim || point.nrows() % dim != 0 || point.nrows() == 0 {
        return Err(QptError::Dimension(format!(
            "point is {}x{}, dataset dim {dim}",
            point.nrows(),
            point.ncols()
        )));
    }
    let k = point.nrows() / dim;
    let ops: Vec<_> = (0..k).map(|l| point.view((l * dim, 0), (dim, dim))).collect();
    let records = data.records();
    let mut selected: Vec<usize> = match batch {
        Some(idx) => idx.to_vec(),
        None => (0..records.len()).collect(),
    };
    selected.sort_unstable_by_key(|&i| records[i].probe);

    let probes = data.probes().states();
    let meas = data.measurements().operators();

    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut pos = 0usize;
    while pos < selected.len() {
        let probe = records[selected[pos]].probe;
        let mut end = pos;
        while end < selected.len() && records[selected[end]].probe == probe {
            end += 1;
        }
        groups.push((pos, end));
        pos = end;
    }

    let eval_group = |&(start, end): &(usize, usize)| -> (f64, Option<CMat>) {
        let rho = &probes[records[selected[start]].probe];
        let blocks: Vec<CMat> = ops.iter().map(|op| op * rho).collect();
        let mut sigma = CMat::zeros(dim, dim);
        for (b, op) in blocks.iter().zip(&ops) {
            sigma += b * op.adjoint();
        }
        let mut local = 0.0_f64;
        let mut weighted = want_grad.then(|| CMat::zeros(dim, dim));
        for &ri in &selected[start..end] {
            let rec = &records[ri];
            let m = &meas[rec.measurement];
            let predicted = trace_prod(m, &sigma).re;
            let residual = rec.value - predicted;
            local += residual * residual;
            if let Some(w) = weighted.as_mut() {
                *w += m * cr(residual);
            }
        }
        let grad_part = weighted.map(|w| {
            let mut g = CMat::zeros(dim * ops.len(), dim);
            for (l, b) in blocks.iter().enumerate() {
                let gc = (&w * b) * cr(-2.0);
                let mut view = g.view_mut((l * dim, 0), (dim, dim));
                view += gc;
            }
            g
        });
        (local, grad_part)
    };

    // parallelize only when the workload is worth the scheduling overhead;
    // partial results are reduced in fixed group order, so output is
    // deterministic either way
    let parts: Vec<(f64, Option<CMat>)> = if selected.len() >= 512 && groups.len() >= 4 {
        use rayon::prelude::*;
        groups.par_iter().map(eval_group).collect()
    } else {
        groups.iter().map(eval_group).collect()
    };

    let mut loss = 0.0_f64;
    let mut grad = want_grad.then(|| CMat::zeros(point.nrows(), dim));
    for (local, part) in parts {
        loss += local;
        if let (Some(g), Some(p)) = (grad.as_mut(), part) {
            *g += p;
        }
    }
    Ok((loss, grad))
}

/// Full- or mini-batch loss at a stacked Kraus point.
pub fn loss(point: &StackedKraus, data: &TomographyDataset, batch: Option<&LossBatch>) -> Result<f64> {
    loss_ambient(point.matrix(), data, batch)
}

/// Loss over any ambient matrix (not necessarily on the manifold); used by
/// finite-difference checks of the gradient contract.
pub fn loss_ambient(point: &CMat, data: &TomographyDataset, batch: Option<&LossBatch>) -> Result<f64> {
    let (l, _) = eval_ambient(point, data, batch.map(|b| b.indices()), false)?;
    Ok(l)
}

/// Ambient Euclidean gradient, block c: −2·Σ r(i,j)·M_j K_c ρ_i.
pub fn gradient(
    point: &StackedKraus,
    data: &TomographyDataset,
    batch: Option<&LossBatch>,
) -> Result<CMat> {
    gradient_ambient(point.matrix(), data, batch)
}

pub fn gradient_ambient(
    point: &CMat,
    data: &TomographyDataset,
    batch: Option<&LossBatch>,
) -> Result<CMat> {
    let (_, g) = eval_ambient(point, data, batch.map(|b| b.indices()), true)?;
    Ok(g.expect("gradient requested"))
}

fn retract_and_transport(
    point: &StiefelPoint,
    direction: &CMat,
    mut state: OptimizerState,
) -> Result<(StiefelPoint, OptimizerState)> {
    let w = manifold::build_skew(point, direction)?;
    let next = manifold::cayley_iterative(point, &w, state.hyper.alpha, state.hyper.cayley_iters);
    state.momentum = manifold::project(&next, &state.momentum)?.into_matrix();
    Ok((next, state))
}

/// Momentum SGD step: M ← β₁M + G, retract along M, transport M.
pub fn sgd_step(
    point: &StackedKraus,
    mut state: OptimizerState,
    data: &TomographyDataset,
    batch: Option<&LossBatch>,
) -> Result<(StackedKraus, OptimizerState)> {
    let g = gradient(point, data, batch)?;
    state.step += 1;
    state.momentum = &state.momentum * cr(state.hyper.beta1) + g;
    let x = StiefelPoint::from_matrix_unchecked(point.matrix().clone());
    let direction = state.momentum.clone();
    let (next, state) = retract_and_transport(&x, &direction, state)?;
    Ok((StackedKraus::from_parts(next.into_matrix(), point.dim()), state))
}

/// Riemannian Adam step with a scalar second moment ‖G‖_F².
pub fn adam_step(
    point: &StackedKraus,
    mut state: OptimizerState,
    data: &TomographyDataset,
    batch: Option<&LossBatch>,
) -> Result<(StackedKraus, OptimizerState)> {
    let g = gradient(point, data, batch)?;
    state.step += 1;
    let h = state.hyper;
    state.momentum = &state.momentum * cr(h.beta1) + &g * cr(1.0 - h.beta1);
    let gnorm2 = g.norm().powi(2);
    state.second_moment = h.beta2 * state.second_moment + (1.0 - h.beta2) * gnorm2;
    let k = state.step as i32;
    let m_hat = &state.momentum * cr(1.0 / (1.0 - h.beta1.powi(k)));
    let v_hat = state.second_moment / (1.0 - h.beta2.powi(k));
    let direction = m_hat * cr(1.0 / (v_hat.sqrt() + h.eps_adam));
    let x = StiefelPoint::from_matrix_unchecked(point.matrix().clone());
    let (next, state) = retract_and_transport(&x, &direction, state)?;
    Ok((StackedKraus::from_parts(next.into_matrix(), point.dim()), state))
}

/// Runs a full fit: seeded random start, epoch-shuffled minibatches, the
/// configured step rule, and a relative-loss-change stopping test.
pub fn fit(data: &TomographyDataset, config: &FitConfig) -> Result<FitReport> {
    use rand::seq::SliceRandom;

    let start = Instant::now();
    let dim = data.dim();
    if config.rank < 1 || config.rank > dim * dim {
        return Err(QptError::Invalid(format!(
            "rank must be in [1, {}], got {}",
            dim * dim,
            config.rank
        )));
    }
    if data.is_empty() {
        return Err(QptError::Invalid("dataset has no records".into()));
    }
    if config.record_every == 0 {
        return Err(QptError::Invalid("record_every must be positive".into()));
    }
    let batch_size = config.batch_size.unwrap_or_else(|| data.len().min(64)).max(1);

    let mut point = StackedKraus::from_parts(
        manifold::random_stiefel(config.rank * dim, dim, config.seed)?.into_matrix(),
        dim,
    );
    let mut state = OptimizerState::new(config.rank * dim, dim, config.hyper);
    let mut rng = ChaChaBatchRng::new(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = usize::MAX; // force an initial shuffle

    let mut history = vec![LossSample { iteration: 0, loss: loss(&point, data, None)? }];
    let mut max_defect = point.tp_defect();
    let mut stop_reason = StopReason::MaxIters;
    let mut iterations_run = 0usize;

    for iter in 1..=config.max_iters {
        if cursor >= order.len() || cursor + 1 > order.len() {
            order.shuffle(&mut rng.0);
            cursor = 0;
        }
        let end = (cursor + batch_size).min(order.len());
        let batch = LossBatch { indices: order[cursor..end].to_vec() };
        cursor = end;

        let stepped = match config.optimizer {
            OptimizerKind::Sgd => sgd_step(&point, state, data, Some(&batch))?,
            OptimizerKind::Adam => adam_step(&point, state, data, Some(&batch))?,
        };
        point = stepped.0;
        state = stepped.1;
        iterations_run = iter;
        max_defect = max_defect.max(orthonormality_defect(point.matrix()));

        if iter % config.record_every == 0 || iter == config.max_iters {
            let full = loss(&point, data, None)?;
            history.push(LossSample { iteration: iter, loss: full });
            if let Some(past) = history
                .iter()
                .rev()
                .find(|s| s.iteration + config.stop_window <= iter)
            {
                let rel = (past.loss - full).abs() / past.loss.max(1e-300);
                if rel < config.stop_tol {
                    stop_reason = StopReason::Converged;
                    break;
                }
            }
        }
    }

    Ok(FitReport {
        config: config.clone(),
        loss_history: history,
        final_channel: point.unstack(),
        iterations_run,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        stop_reason,
        max_stiefel_defect: max_defect,
    })
}

/// Batch RNG stream, decoupled from the initialization stream.
struct ChaChaBatchRng(rand_chacha::ChaCha8Rng);

impl ChaChaBatchRng {
    fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        Self(rand_chacha::ChaCha8Rng::seed_from_u64(
            seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x5851_F42D_4C95_7F2D),
        ))
    }
}
