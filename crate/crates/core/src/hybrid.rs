//! Hybrid iteration: weighted-Jacobi smoothing interleaved with a
//! normalized neural-operator correction. One outer iteration computes
//! x1 = smooth(x, kappa1 steps), the residual r = y - A x1 with norm Z,
//! then x2 = x1 + N(r/Z) * Z, then kappa2 post-smoothing steps. Feeding
//! the unit-normalized residual through the operator and scaling the
//! output back makes the correction positively homogeneous, so the
//! iteration behaves identically under rescaling of the right-hand side
//! even though the operator itself is nonlinear.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classic::{
    jacobi_sweep, JacobiConfig, SolveReport, SolverOperator, DEFAULT_TOLERANCE,
};
use crate::error::{Result, SolverError};
use crate::la::{norm2, sub_vec};
use crate::neural::NeuralOperator;

/// Iteration counts and smoother for the hybrid cycle. `kappa1` and
/// `kappa2` govern the pre- and post-smoothing sweep lengths; the step
/// count inside `smoother` is ignored here. Post-smoothing defaults to
/// zero steps.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HybridConfig {
    pub kappa1: usize,
    pub kappa2: usize,
    pub smoother: JacobiConfig,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl HybridConfig {
    pub fn new(weight: f64) -> Self {
        HybridConfig {
            kappa1: 5,
            kappa2: 0,
            smoother: JacobiConfig::new(weight, 1),
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 200,
        }
    }
}

/// N(y / ||y||) * ||y||. Rejects zero input: the normalization step is
/// undefined there.
pub fn scale_invariant_apply<N: NeuralOperator + ?Sized>(net: &N, y: &[f64]) -> Result<Vec<f64>> {
    let z = norm2(y);
    if z == 0.0 || !z.is_finite() {
        return Err(SolverError::InvalidConfig(
            "scale-invariant application needs a nonzero finite input".into(),
        ));
    }
    let unit: Vec<f64> = y.iter().map(|&v| v / z).collect();
    let mut out = net.forward(&unit);
    for v in out.iter_mut() {
        *v *= z;
    }
    Ok(out)
}

/// One outer iteration of the hybrid cycle, in place. Returns the
/// residual norm Z measured after pre-smoothing, or None when Z fell
/// below the rounding floor and the correction was skipped.
fn hybrid_step<O, N>(a: &O, y: &[f64], x: &mut Vec<f64>, net: &N, cfg: &HybridConfig, y_norm: f64) -> Option<f64>
where
    O: SolverOperator + ?Sized,
    N: NeuralOperator + ?Sized,
{
    let w = cfg.smoother.weight;
    *x = jacobi_sweep(a, y, x, w, cfg.kappa1);
    let mut ax = vec![0.0; x.len()];
    a.apply_into(x, &mut ax);
    let r = sub_vec(y, &ax);
    let z = norm2(&r);
    if z < 1e-14 * y_norm {
        return None;
    }
    let unit: Vec<f64> = r.iter().map(|&v| v / z).collect();
    let correction = net.forward(&unit);
    for (xi, ci) in x.iter_mut().zip(correction.iter()) {
        *xi += ci * z;
    }
    *x = jacobi_sweep(a, y, x, w, cfg.kappa2);
    Some(z)
}

/// Run exactly `iterations` outer iterations from the zero guess with no
/// stopping test; used by the residual-recycling sampler, which needs an
/// iterate after a prescribed number of cycles.
pub fn hybrid_iterate<O, N>(a: &O, y: &[f64], net: &N, cfg: &HybridConfig, iterations: usize) -> Vec<f64>
where
    O: SolverOperator + ?Sized,
    N: NeuralOperator + ?Sized,
{
    let y_norm = norm2(y);
    let mut x = vec![0.0; a.dim()];
    for _ in 0..iterations {
        if hybrid_step(a, y, &mut x, net, cfg, y_norm).is_none() {
            break;
        }
    }
    x
}

/// Smoothing-plus-correction solve from the zero guess. The residual
/// history holds the true relative residual after each full outer
/// iteration.
pub fn hybrid_solve<O, N>(a: &O, y: &[f64], net: &N, cfg: &HybridConfig) -> Result<(Vec<f64>, SolveReport)>
where
    O: SolverOperator + ?Sized,
    N: NeuralOperator + ?Sized,
{
    if cfg.tolerance <= 0.0 {
        return Err(SolverError::InvalidConfig("tolerance must be positive".into()));
    }
    if !net.supports_dim(a.dim()) {
        return Err(SolverError::InvalidConfig(format!(
            "operator does not support resolution {}",
            a.dim()
        )));
    }
    let y_norm = norm2(y);
    if y_norm == 0.0 {
        return Err(SolverError::InvalidConfig(
            "hybrid iteration requires a nonzero right-hand side".into(),
        ));
    }
    let started = Instant::now();
    let mut x = vec![0.0; a.dim()];
    let mut ax = vec![0.0; a.dim()];
    let mut history = vec![1.0];
    let mut iterations = 0;
    for _ in 0..cfg.max_iterations {
        let step = hybrid_step(a, y, &mut x, net, cfg, y_norm);
        iterations += 1;
        a.apply_into(&x, &mut ax);
        let rel = norm2(&sub_vec(y, &ax)) / y_norm;
        history.push(rel);
        if step.is_none() {
            // Residual at rounding level before the correction: declare
            // convergence regardless of the tolerance.
            let mut report = SolveReport::finish(iterations, history, started, cfg.tolerance);
            report.converged = true;
            return Ok((x, report));
        }
        if rel < cfg.tolerance {
            break;
        }
    }
    let report = SolveReport::finish(iterations, history, started, cfg.tolerance);
    Ok((x, report))
}
