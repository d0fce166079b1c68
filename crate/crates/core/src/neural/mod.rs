//! Trainable neural correctors and their optimization pipeline. The
//! operators here approximate the solution map y -> A^{-1} y of a fixed
//! symmetric positive definite system; training minimizes the
//! preconditioned empirical loss mean_j ||P(N(y_j) - x_j)||_2^2, whose
//! eigen-decomposition weights the error component along u_i(P) by
//! lambda_i(P)^2 and thereby steers which algebraic frequencies the
//! operator learns first. Gradients are exact reverse-mode derivatives
//! written by hand; the optimizer is Adam on mini-batches that mix
//! freshly sampled pairs (x ~ U[0,1]^n, y = Ax) with residual-recycled
//! pairs (e, Ae) harvested from partially converged hybrid iterations,
//! so the operator sees the residual distribution it will face inside
//! the solver.

mod checkpoint;
mod spectral;
mod spectral2d;
mod two_layer;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, AnyNet, ArchTag,
};
pub use spectral::{activate, activate_grad, Activation, Spectral1d, SpectralOperatorConfig};
pub use spectral2d::Spectral2d;
pub use two_layer::{TwoLayerCache, TwoLayerParams};

use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};
use crate::hybrid::{hybrid_iterate, HybridConfig};
use crate::la::{dot, norm2};
use crate::operators::System;
use crate::precond::{make_loss_preconditioner, LinearMap, LossPrecondChoice};

/// Anything that maps a vector to a vector of the same length. Solvers
/// only need this much; training additionally needs gradients.
pub trait NeuralOperator {
    fn forward(&self, input: &[f64]) -> Vec<f64>;
    /// Whether the parameters can be evaluated at resolution `dim`
    /// (discretization-invariant architectures accept many sizes).
    fn supports_dim(&self, dim: usize) -> bool;
}

/// Flat views over every trainable parameter, in a fixed declaration
/// order shared by gradients, optimizer state, and checkpoints.
pub trait ParamSet {
    fn param_slices(&self) -> Vec<&[f64]>;
    fn param_slices_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }
}

/// Reverse-mode differentiable operator. `backward_cached` accumulates
/// d(loss)/d(theta) into `grads` (a zeroed clone of the architecture)
/// given the upstream cotangent d(loss)/d(output).
pub trait DifferentiableNet: NeuralOperator + ParamSet + Sized {
    type Cache;

    /// A parameter container of identical shape with all entries zero.
    fn zeroed_like(&self) -> Self;
    fn forward_cached(&self, input: &[f64]) -> (Vec<f64>, Self::Cache);
    fn backward_cached(&self, input: &[f64], cache: &Self::Cache, upstream: &[f64], grads: &mut Self);

    /// Optional projection onto the constraint set after each update.
    fn project_constraints(&mut self) {}
}

/// One supervised pair: the operator input (a right-hand side or
/// residual) and the regression target (the matching solution or error).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingPair {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

pub fn zero_params<P: ParamSet>(params: &mut P) {
    for s in params.param_slices_mut() {
        s.fill(0.0);
    }
}

/// Adam with bias correction over the flattened parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step_count: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64, count: usize) -> Self {
        Adam {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step_count: 0,
            m: vec![0.0; count],
            v: vec![0.0; count],
        }
    }

    pub fn step<P: ParamSet>(&mut self, params: &mut P, grads: &P) {
        self.step_count += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step_count as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step_count as i32);
        let mut k = 0;
        let gs = grads.param_slices();
        for (ps, g_slice) in params.param_slices_mut().into_iter().zip(gs) {
            for (p, &g) in ps.iter_mut().zip(g_slice.iter()) {
                self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
                self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
                let mhat = self.m[k] / bc1;
                let vhat = self.v[k] / bc2;
                *p -= self.learning_rate * mhat / (vhat.sqrt() + self.epsilon);
                k += 1;
            }
        }
        debug_assert_eq!(k, self.m.len());
    }
}

/// Training hyperparameters. An epoch is one Adam update on one
/// mini-batch; with recycling on, each batch is half fresh pairs and
/// half residual-recycled pairs produced by the current operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub preconditioner: LossPrecondChoice,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub recycle: bool,
    /// Inclusive range of the iteration count drawn per recycled pair.
    pub recycle_range: (usize, usize),
    pub normalize_pairs: bool,
    /// Project onto the constrained parameter class after each step
    /// (only meaningful for architectures that define a projection).
    pub project: bool,
    /// Hybrid-cycle settings used when harvesting recycled pairs.
    pub hybrid: HybridConfig,
}

impl TrainConfig {
    pub fn new(preconditioner: LossPrecondChoice, epochs: usize, batch_size: usize, seed: u64) -> Self {
        TrainConfig {
            preconditioner,
            learning_rate: 1e-4,
            epochs,
            batch_size,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed,
            recycle: true,
            recycle_range: (1, 10),
            normalize_pairs: true,
            project: false,
            hybrid: HybridConfig::new(0.3),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(SolverError::InvalidConfig(
                "learning rate must be finite and nonnegative".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(SolverError::InvalidConfig("batch size must be positive".into()));
        }
        if self.recycle && (self.recycle_range.0 == 0 || self.recycle_range.0 > self.recycle_range.1) {
            return Err(SolverError::InvalidConfig(format!(
                "recycle range {:?} must be a nonempty range of positive counts",
                self.recycle_range
            )));
        }
        Ok(())
    }
}

/// Loss values along training plus the per-bin loss traces F_i used by
/// the frequency-dynamics study (empty unless that study requests them).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyTrace {
    /// Eigenvector index (1-based, sorted by frequency) the trace follows.
    pub bin: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Entry t is the evaluation loss after t epochs; entry 0 is the
    /// loss of the initial parameters.
    pub loss_history: Vec<f64>,
    pub wall_time: f64,
    pub final_loss: f64,
    pub diverged: bool,
    pub frequency_traces: Option<Vec<FrequencyTrace>>,
}

impl TrainReport {
    fn new(loss_history: Vec<f64>, started: Instant, diverged: bool) -> Self {
        let final_loss = *loss_history.last().unwrap_or(&f64::NAN);
        TrainReport {
            loss_history,
            wall_time: started.elapsed().as_secs_f64(),
            final_loss,
            diverged,
            frequency_traces: None,
        }
    }
}

/// Draw `count` pairs x ~ U[0,1]^n, y = Ax; with `normalize` both are
/// scaled by 1/||y|| so inputs sit on the unit sphere.
pub fn sample_batch(a: &System, count: usize, normalize: bool, rng: &mut ChaCha8Rng) -> Vec<TrainingPair> {
    let n = a.dim();
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = a.apply_vec(&x);
        let ny = norm2(&y);
        if ny < 1e-14 {
            continue; // essentially impossible for U[0,1] samples; resample
        }
        if normalize {
            let s = 1.0 / ny;
            pairs.push(TrainingPair {
                input: y.iter().map(|&v| v * s).collect(),
                target: x.iter().map(|&v| v * s).collect(),
            });
        } else {
            pairs.push(TrainingPair { input: y, target: x });
        }
    }
    pairs
}

/// Harvest up to `count` recycled pairs: draw a fresh system pair, run a
/// random number of hybrid iterations with the current operator, and
/// regress the remaining error e = x - x_k against its residual r = Ae,
/// both scaled by 1/||r||. Pairs whose residual is at rounding level are
/// discarded (that draw is already solved), so fewer than `count` pairs
/// may come back.
pub fn recycle_batch<N>(
    a: &System,
    net: &N,
    cfg: &HybridConfig,
    range: (usize, usize),
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<TrainingPair>
where
    N: NeuralOperator,
{
    let n = a.dim();
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let y = a.apply_vec(&x);
        let kappa = rng.random_range(range.0..=range.1);
        let xk = hybrid_iterate(a, &y, net, cfg, kappa);
        let e: Vec<f64> = x.iter().zip(xk.iter()).map(|(xi, ki)| xi - ki).collect();
        let r = a.apply_vec(&e);
        let nr = norm2(&r);
        if nr < 1e-14 {
            continue;
        }
        let s = 1.0 / nr;
        pairs.push(TrainingPair {
            input: r.iter().map(|&v| v * s).collect(),
            target: e.iter().map(|&v| v * s).collect(),
        });
    }
    pairs
}

/// mean_j ||P(N(input_j) - target_j)||_2^2 for a self-adjoint P.
pub fn empirical_loss<N, P>(net: &N, p: &P, pairs: &[TrainingPair]) -> f64
where
    N: NeuralOperator,
    P: LinearMap + ?Sized,
{
    assert!(!pairs.is_empty(), "empirical loss over an empty batch");
    let mut total = 0.0;
    for pair in pairs {
        let out = net.forward(&pair.input);
        let e: Vec<f64> = out.iter().zip(pair.target.iter()).map(|(o, t)| o - t).collect();
        let pe = p.apply_map(&e);
        total += dot(&pe, &pe);
    }
    total / pairs.len() as f64
}

/// Empirical loss over the batch plus its exact gradient, accumulated
/// into `grads` (caller zeroes). P must be self-adjoint: the cotangent
/// fed back per sample is (2/N) P(P e).
pub fn loss_and_gradient<N, P>(net: &N, p: &P, pairs: &[TrainingPair], grads: &mut N) -> f64
where
    N: DifferentiableNet,
    P: LinearMap + ?Sized,
{
    assert!(!pairs.is_empty(), "gradient over an empty batch");
    let scale = 1.0 / pairs.len() as f64;
    let mut total = 0.0;
    for pair in pairs {
        let (out, cache) = net.forward_cached(&pair.input);
        let e: Vec<f64> = out.iter().zip(pair.target.iter()).map(|(o, t)| o - t).collect();
        let pe = p.apply_map(&e);
        total += dot(&pe, &pe) * scale;
        let mut upstream = p.apply_map(&pe);
        for u in upstream.iter_mut() {
            *u *= 2.0 * scale;
        }
        net.backward_cached(&pair.input, &cache, &upstream, grads);
    }
    total
}

fn finite_params<P: ParamSet>(params: &P) -> bool {
    params.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
}

/// Mini-batch Adam against the system's solution map. The loss history
/// is measured on a fixed evaluation batch drawn up front, so it is a
/// pure function of the parameter trajectory (constant when the
/// learning rate is zero). A non-finite loss aborts and returns the
/// partial history with the diverged flag set.
pub fn train<N: DifferentiableNet>(a: &System, net: &mut N, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if !net.supports_dim(a.dim()) {
        return Err(SolverError::InvalidConfig(format!(
            "operator does not support resolution {}",
            a.dim()
        )));
    }
    let started = Instant::now();
    let p = make_loss_preconditioner(cfg.preconditioner, a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let eval = sample_batch(a, cfg.batch_size.max(8), cfg.normalize_pairs, &mut rng);
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    history.push(empirical_loss(net, &p, &eval));
    if !history[0].is_finite() {
        return Ok(TrainReport::new(history, started, true));
    }
    let mut adam = Adam::new(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, net.param_count());
    let mut grads = net.zeroed_like();
    for _ in 0..cfg.epochs {
        let recycled = if cfg.recycle {
            recycle_batch(a, net, &cfg.hybrid, cfg.recycle_range, cfg.batch_size / 2, &mut rng)
        } else {
            Vec::new()
        };
        let mut batch = sample_batch(a, cfg.batch_size - recycled.len(), cfg.normalize_pairs, &mut rng);
        batch.extend(recycled);
        zero_params(&mut grads);
        let batch_loss = loss_and_gradient(net, &p, &batch, &mut grads);
        if !batch_loss.is_finite() {
            return Ok(TrainReport::new(history, started, true));
        }
        adam.step(net, &grads);
        if cfg.project {
            net.project_constraints();
        }
        let eval_loss = empirical_loss(net, &p, &eval);
        history.push(eval_loss);
        if !eval_loss.is_finite() || !finite_params(net) {
            return Ok(TrainReport::new(history, started, true));
        }
    }
    Ok(TrainReport::new(history, started, false))
}

/// Full-batch Adam on a fixed dataset (no sampling, no recycling); used
/// by the sample-complexity and frequency-dynamics studies where the
/// empirical measure itself is the object under test.
pub fn train_on_pairs<N, P>(net: &mut N, p: &P, pairs: &[TrainingPair], cfg: &TrainConfig) -> Result<TrainReport>
where
    N: DifferentiableNet,
    P: LinearMap + ?Sized,
{
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(SolverError::InvalidConfig("empty training set".into()));
    }
    let started = Instant::now();
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    history.push(empirical_loss(net, p, pairs));
    if !history[0].is_finite() {
        return Ok(TrainReport::new(history, started, true));
    }
    let mut adam = Adam::new(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon, net.param_count());
    let mut grads = net.zeroed_like();
    for _ in 0..cfg.epochs {
        zero_params(&mut grads);
        let loss = loss_and_gradient(net, p, pairs, &mut grads);
        if !loss.is_finite() {
            return Ok(TrainReport::new(history, started, true));
        }
        adam.step(net, &grads);
        if cfg.project {
            net.project_constraints();
        }
        let eval_loss = empirical_loss(net, p, pairs);
        history.push(eval_loss);
        if !eval_loss.is_finite() || !finite_params(net) {
            return Ok(TrainReport::new(history, started, true));
        }
    }
    Ok(TrainReport::new(history, started, false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{sym_eigen, DenseMatrix};
    use crate::operators::{tikhonov_1d, KernelSpec};
    use crate::precond::LossPreconditioner;

    fn small_system(n: usize, alpha: f64) -> System {
        tikhonov_1d(n, alpha, &KernelSpec::default())
    }

    /// Central finite differences of the empirical loss against the
    /// analytic gradient, coordinate by coordinate.
    fn check_gradient<N: DifferentiableNet + Clone>(
        net: &N,
        p: &impl LinearMap,
        pairs: &[TrainingPair],
        coords: &[(usize, usize)],
        step: f64,
        rel_tol: f64,
    ) {
        let mut grads = net.zeroed_like();
        loss_and_gradient(net, p, pairs, &mut grads);
        for &(slice_idx, idx) in coords {
            let analytic = grads.param_slices()[slice_idx][idx];
            let mut plus = net.clone();
            plus.param_slices_mut()[slice_idx][idx] += step;
            let mut minus = net.clone();
            minus.param_slices_mut()[slice_idx][idx] -= step;
            let fd = (empirical_loss(&plus, p, pairs) - empirical_loss(&minus, p, pairs)) / (2.0 * step);
            let tol = rel_tol * fd.abs().max(analytic.abs()) + 1e-8;
            assert!(
                (analytic - fd).abs() <= tol,
                "grad mismatch at slice {slice_idx} idx {idx}: analytic {analytic} vs fd {fd}"
            );
        }
    }

    #[test]
    fn adam_matches_manual_first_step() {
        // One step from zero moments: update = lr * g/(|g| sqrt(1)/1 + eps)
        // after bias correction; verify against a hand calculation.
        let mut net = TwoLayerParams::new(
            2,
            [0.0, 0.0],
            [DenseMatrix::zeros(2, 2), DenseMatrix::zeros(2, 2)],
            None,
        );
        let mut grads = net.zeroed_like();
        grads.c[0] = 3.0;
        grads.c[1] = -0.5;
        let mut adam = Adam::new(0.1, 0.9, 0.999, 1e-8, net.param_count());
        adam.step(&mut net, &grads);
        // mhat = g, vhat = g^2 => delta = lr * g / (|g| + eps) = lr*sign(g)
        assert!((net.c[0] + 0.1).abs() < 1e-7);
        assert!((net.c[1] - 0.1).abs() < 1e-7);
        assert_eq!(net.w[0].data()[0], 0.0);
    }

    #[test]
    fn sampled_batches_are_deterministic_and_normalized() {
        let a = small_system(16, 1e-2);
        let mut rng1 = ChaCha8Rng::seed_from_u64(42);
        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        let b1 = sample_batch(&a, 5, true, &mut rng1);
        let b2 = sample_batch(&a, 5, true, &mut rng2);
        for (p1, p2) in b1.iter().zip(b2.iter()) {
            assert_eq!(p1.input, p2.input);
            assert_eq!(p1.target, p2.target);
            assert!((norm2(&p1.input) - 1.0).abs() < 1e-12);
        }
        // Unnormalized mode keeps y = A x exactly.
        let mut rng3 = ChaCha8Rng::seed_from_u64(9);
        let raw = sample_batch(&a, 3, false, &mut rng3);
        for pair in &raw {
            let y = a.apply_vec(&pair.target);
            for (yi, ii) in y.iter().zip(pair.input.iter()) {
                assert!((yi - ii).abs() < 1e-15);
            }
            assert!(pair.target.iter().all(|&v| (0.0..1.0).contains(&v)));
        }
    }

    #[test]
    fn empirical_loss_matches_dense_oracle() {
        let a = small_system(8, 1e-2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs = sample_batch(&a, 4, true, &mut rng);
        let net = TwoLayerParams::init(8, None, 11);
        // Dense recomputation, sample by sample.
        let p = DenseMatrix::from_fn(8, 8, |i, j| {
            if i == j {
                1.5
            } else if i.abs_diff(j) == 1 {
                0.25
            } else {
                0.0
            }
        });
        let fast = empirical_loss(&net, &p, &pairs);
        let mut slow = 0.0;
        for pair in &pairs {
            let e: Vec<f64> = net
                .forward(&pair.input)
                .iter()
                .zip(pair.target.iter())
                .map(|(o, t)| o - t)
                .collect();
            let pe = p.matvec(&e);
            slow += pe.iter().map(|v| v * v).sum::<f64>();
        }
        slow /= pairs.len() as f64;
        assert!((fast - slow).abs() < 1e-12 * slow.max(1.0));
        // Zero operator against identity preconditioner: mean ||x||^2.
        let zero = TwoLayerParams::new(
            8,
            [0.0, 0.0],
            [DenseMatrix::zeros(8, 8), DenseMatrix::zeros(8, 8)],
            None,
        );
        let id = LossPreconditioner::Identity { dim: 8 };
        let expect: f64 =
            pairs.iter().map(|p| dot(&p.target, &p.target)).sum::<f64>() / pairs.len() as f64;
        assert!((empirical_loss(&zero, &id, &pairs) - expect).abs() < 1e-14);
    }

    #[test]
    fn loss_decomposes_along_preconditioner_eigenpairs() {
        // mean_j ||P e_j||^2 == sum_i lambda_i(P)^2 mean_j (e_j' u_i)^2
        // for SPD dense P at n=16.
        let n = 16;
        let a = small_system(n, 1e-2);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pairs = sample_batch(&a, 6, true, &mut rng);
        let net = TwoLayerParams::init(n, None, 5);
        let p = DenseMatrix::from_fn(n, n, |i, j| {
            let base = if i == j { 2.0 + 0.1 * i as f64 } else { 0.0 };
            base + 0.3 / (1.0 + i.abs_diff(j) as f64 * 2.0)
        });
        assert!(p.max_asymmetry() < 1e-12);
        let eig = sym_eigen(&p).unwrap();
        let loss = empirical_loss(&net, &p, &pairs);
        let mut decomposed = 0.0;
        for i in 0..n {
            let u = eig.vector(i);
            let mean_sq: f64 = pairs
                .iter()
                .map(|pair| {
                    let e: Vec<f64> = net
                        .forward(&pair.input)
                        .iter()
                        .zip(pair.target.iter())
                        .map(|(o, t)| o - t)
                        .collect();
                    let c = dot(&e, &u);
                    c * c
                })
                .sum::<f64>()
                / pairs.len() as f64;
            decomposed += eig.values[i] * eig.values[i] * mean_sq;
        }
        assert!(
            (loss - decomposed).abs() < 1e-10 * loss.max(1.0),
            "{loss} vs {decomposed}"
        );
    }

    #[test]
    fn perfect_operator_has_zero_loss_and_zero_gradient() {
        // Target pairs generated BY the operator itself: loss 0, all
        // gradients 0 (the upstream cotangent vanishes identically).
        let n = 8;
        let net = TwoLayerParams::init(n, None, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pairs: Vec<TrainingPair> = (0..3)
            .map(|_| {
                let input: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let target = net.forward(&input);
                TrainingPair { input, target }
            })
            .collect();
        let id = LossPreconditioner::Identity { dim: n };
        assert_eq!(empirical_loss(&net, &id, &pairs), 0.0);
        let mut grads = net.zeroed_like();
        let loss = loss_and_gradient(&net, &id, &pairs, &mut grads);
        assert_eq!(loss, 0.0);
        for s in grads.param_slices() {
            assert!(s.iter().all(|&g| g == 0.0));
        }
    }

    #[test]
    fn two_layer_gradient_matches_finite_differences_everywhere() {
        let n = 16;
        let a = small_system(n, 1e-2);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pairs = sample_batch(&a, 3, true, &mut rng);
        let net = TwoLayerParams::init(n, None, 17);
        // Away-from-kink guard: finite differences are only valid when no
        // pre-activation sits within the step of zero.
        for pair in &pairs {
            let (_, cache) = net.forward_cached(&pair.input);
            for side in &cache.pre {
                assert!(side.iter().all(|z| z.abs() > 1e-4), "kink too close for FD");
            }
        }
        let p = DenseMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + 0.05 * i as f64 } else { 0.0 });
        let mut coords = Vec::new();
        for idx in 0..2 {
            coords.push((0, idx));
        }
        for slice in 1..=2 {
            for idx in 0..n * n {
                coords.push((slice, idx));
            }
        }
        check_gradient(&net, &p, &pairs, &coords, 1e-6, 1e-5);
    }

    #[test]
    fn spectral_gradient_matches_finite_differences_sampled() {
        let n = 32;
        let a = small_system(n, 1e-2);
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let pairs = sample_batch(&a, 2, true, &mut rng);
        let config = SpectralOperatorConfig {
            hidden: 3,
            layers: 2,
            modes: 6,
            kernel_size: 3,
            activation: Activation::Gelu,
        };
        let net = Spectral1d::init(config, 23);
        let id = LossPreconditioner::Identity { dim: n };
        // Sample >= 50 coordinates across every parameter group.
        let sizes: Vec<usize> = net.param_slices().iter().map(|s| s.len()).collect();
        let mut coords = Vec::new();
        for (slice_idx, &len) in sizes.iter().enumerate() {
            let take = if len < 12 { len } else { 12 };
            for j in 0..take {
                coords.push((slice_idx, (j * 37) % len));
            }
        }
        assert!(coords.len() >= 50, "only {} coords", coords.len());
        check_gradient(&net, &id, &pairs, &coords, 1e-6, 1e-5);
    }

    #[test]
    fn zero_learning_rate_freezes_parameters_and_history() {
        let a = small_system(16, 1e-2);
        let mut net = TwoLayerParams::init(16, None, 3);
        let before: Vec<Vec<f64>> = net.param_slices().iter().map(|s| s.to_vec()).collect();
        let mut cfg = TrainConfig::new(LossPrecondChoice::Identity, 5, 6, 77);
        cfg.learning_rate = 0.0;
        cfg.recycle = false;
        let report = train(&a, &mut net, &cfg).unwrap();
        assert!(!report.diverged);
        assert_eq!(report.loss_history.len(), 6);
        for w in report.loss_history.windows(2) {
            assert_eq!(w[0], w[1], "history must be constant at lr = 0");
        }
        let after: Vec<Vec<f64>> = net.param_slices().iter().map(|s| s.to_vec()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn training_reduces_loss_with_shift_preconditioner() {
        // n=32 Tikhonov, shifted loss weighting: a brief run must lower
        // the evaluation loss. Uses the fixed-dataset trainer for speed.
        let n = 32;
        let a = small_system(n, 1e-2);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let pairs = sample_batch(&a, 32, true, &mut rng);
        let p = make_loss_preconditioner(LossPrecondChoice::Shift { a: 2.5 }, &a).unwrap();
        let mut net = TwoLayerParams::init(n, None, 41);
        let mut cfg = TrainConfig::new(LossPrecondChoice::Shift { a: 2.5 }, 60, 32, 1);
        cfg.learning_rate = 3e-3;
        cfg.recycle = false;
        let report = train_on_pairs(&mut net, &p, &pairs, &cfg).unwrap();
        assert!(!report.diverged);
        assert!(
            report.final_loss < 0.7 * report.loss_history[0],
            "loss {} -> {}",
            report.loss_history[0],
            report.final_loss
        );
    }

    #[test]
    fn recycled_pairs_are_unit_residual_error_pairs() {
        let a = small_system(24, 1e-1);
        let net = TwoLayerParams::init(24, None, 6);
        let cfg = HybridConfig::new(0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let pairs = recycle_batch(&a, &net, &cfg, (1, 10), 6, &mut rng);
        assert!(!pairs.is_empty());
        for pair in &pairs {
            assert!((norm2(&pair.input) - 1.0).abs() < 1e-12);
            // input = A(target): the defining relation of a recycled pair.
            let r = a.apply_vec(&pair.target);
            for (ri, ii) in r.iter().zip(pair.input.iter()) {
                assert!((ri - ii).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn divergent_training_aborts_with_flagged_report() {
        let a = small_system(16, 1e-2);
        let mut net = TwoLayerParams::init(16, None, 3);
        // An absurd learning rate blows the parameters up quickly.
        let mut cfg = TrainConfig::new(LossPrecondChoice::Identity, 400, 8, 5);
        cfg.learning_rate = 1e12;
        cfg.recycle = false;
        let report = train(&a, &mut net, &cfg).unwrap();
        if report.diverged {
            assert!(report.loss_history.len() <= 401);
        } else {
            // Adam's normalized steps may keep things finite; then the
            // contract is simply that every recorded loss is finite.
            assert!(report.loss_history.iter().all(|l| l.is_finite()));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let a = small_system(8, 1e-2);
        let mut net = TwoLayerParams::init(8, None, 1);
        let mut cfg = TrainConfig::new(LossPrecondChoice::Identity, 1, 0, 0);
        assert!(train(&a, &mut net, &cfg).is_err());
        cfg.batch_size = 4;
        cfg.learning_rate = -1.0;
        assert!(train(&a, &mut net, &cfg).is_err());
        cfg.learning_rate = 1e-4;
        cfg.recycle_range = (0, 10);
        assert!(train(&a, &mut net, &cfg).is_err());
        cfg.recycle_range = (1, 10);
        let wrong = small_system(12, 1e-2);
        assert!(train(&wrong, &mut net, &cfg).is_err());
    }
}
