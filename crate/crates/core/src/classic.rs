//! Classical baselines: weighted Jacobi smoothing, the Galerkin two-grid
//! correction, a multigrid backslash-cycle (pre-smoothing only), and
//! CG/PCG. These are both the comparison points for the hybrid solver and
//! the source of its smoothing steps.
//!
//! The two-grid iteration alternates a coarse correction
//! x <- x + P A_H^{-1} R (y - A x), with Galerkin coarse matrix
//! A_H = R A P, and kappa weighted-Jacobi sweeps x <- x + w D^{-1}(y - A x).
//! Transfers are full weighting and linear interpolation with P' = 2 R, so
//! A_H stays symmetric positive definite and the correction is an
//! A-orthogonal projection. All stopping decisions use the true relative
//! residual, recomputed from scratch each iteration, so reported counts
//! are comparable across methods.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dense::{solve_spd, DenseMatrix, SpdFactor};
use crate::error::{Result, SolverError};
use crate::la;
use crate::operators::{System, SystemKind};
use crate::precond::{BlockCirculant2D, CirculantOperator};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

/// Operator interface shared by every iterative solver in the crate.
/// `grid_n` is the square-grid side for tensor-product problems and
/// simply the dimension in one dimension.
pub trait SolverOperator {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
    fn diagonal_vec(&self) -> Vec<f64>;

    fn grid_n(&self) -> usize {
        self.dim()
    }

    fn is_two_dimensional(&self) -> bool {
        false
    }

    fn apply_op(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }
}

impl SolverOperator for System {
    fn dim(&self) -> usize {
        System::dim(self)
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.apply(x, out);
    }

    fn diagonal_vec(&self) -> Vec<f64> {
        let dim = System::dim(self);
        let diag = self.diagonal();
        (0..dim).map(|i| diag.at(i)).collect()
    }

    fn grid_n(&self) -> usize {
        System::grid_n(self)
    }

    fn is_two_dimensional(&self) -> bool {
        System::is_two_dimensional(self)
    }
}

impl SolverOperator for DenseMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.rows(), self.cols());
        self.rows()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.matvec(x));
    }

    fn diagonal_vec(&self) -> Vec<f64> {
        (0..self.rows()).map(|i| self[(i, i)]).collect()
    }
}

/// Weighted Jacobi smoother parameters. The weight that smooths depends
/// on the system: see `default_jacobi_weight`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JacobiConfig {
    pub weight: f64,
    pub steps: usize,
}

impl JacobiConfig {
    pub fn new(weight: f64, steps: usize) -> Self {
        assert!(weight > 0.0 && weight <= 1.0, "jacobi weight must lie in (0, 1]");
        JacobiConfig { weight, steps }
    }
}

/// Smoothing weights used throughout: 0.3 for 1d Tikhonov, 0.025 for the
/// anisotropic operator (whose diagonal varies), 0.01 on the 2d grid.
pub fn default_jacobi_weight(kind: SystemKind) -> f64 {
    match kind {
        SystemKind::Tikhonov1d => 0.3,
        SystemKind::Anisotropic1d => 0.025,
        SystemKind::Tikhonov2d => 0.01,
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TwoGridConfig {
    pub smoother: JacobiConfig,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl TwoGridConfig {
    pub fn new(weight: f64) -> Self {
        TwoGridConfig {
            smoother: JacobiConfig::new(weight, 5),
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MultigridConfig {
    /// Total number of levels including the finest; the coarsest grid is
    /// solved densely.
    pub levels: usize,
    pub pre_steps: usize,
    pub weight: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl MultigridConfig {
    pub fn new(levels: usize, weight: f64) -> Self {
        MultigridConfig {
            levels,
            pre_steps: 20,
            weight,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Outcome of one iterative solve. `residual_history[k]` is the true
/// relative residual after k full iterations (entry 0 is the initial
/// residual of the zero guess).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub wall_time: f64,
    pub converged: bool,
    pub final_rel_residual: f64,
}

impl SolveReport {
    pub(crate) fn finish(
        iterations: usize,
        residual_history: Vec<f64>,
        started: Instant,
        tolerance: f64,
    ) -> Self {
        let final_rel_residual = *residual_history.last().unwrap_or(&f64::NAN);
        SolveReport {
            iterations,
            residual_history,
            wall_time: started.elapsed().as_secs_f64(),
            converged: final_rel_residual < tolerance,
            final_rel_residual,
        }
    }
}

/// kappa sweeps of x <- x + w D^{-1}(y - A x); kappa = 0 returns x as-is.
pub fn jacobi_sweep<O: SolverOperator + ?Sized>(
    a: &O,
    y: &[f64],
    x: &[f64],
    weight: f64,
    steps: usize,
) -> Vec<f64> {
    let diag = a.diagonal_vec();
    assert!(diag.iter().all(|&d| d > 0.0), "jacobi needs a positive diagonal");
    let mut x = x.to_vec();
    let mut ax = vec![0.0; x.len()];
    for _ in 0..steps {
        a.apply_into(&x, &mut ax);
        for i in 0..x.len() {
            x[i] += weight * (y[i] - ax[i]) / diag[i];
        }
    }
    x
}

fn jacobi_sweep_with(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    diag: &[f64],
    y: &[f64],
    x: &mut [f64],
    weight: f64,
    steps: usize,
) {
    let mut ax = vec![0.0; x.len()];
    for _ in 0..steps {
        apply(x, &mut ax);
        for i in 0..x.len() {
            x[i] += weight * (y[i] - ax[i]) / diag[i];
        }
    }
}

/// Full-weighting restriction, 1d stencil (1/4, 1/2, 1/4) centered on the
/// even fine points; the left boundary row truncates.
pub fn restrict_1d(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.len();
    if n % 2 != 0 || n < 2 {
        return Err(SolverError::InvalidConfig(format!(
            "restriction needs an even fine size, got {n}"
        )));
    }
    let m = n / 2;
    let mut out = vec![0.0; m];
    for i in 0..m {
        let c = 2 * i;
        let mut acc = 2.0 * v[c] + v[c + 1];
        if c > 0 {
            acc += v[c - 1];
        }
        out[i] = 0.25 * acc;
    }
    Ok(out)
}

/// Linear interpolation P with P' = 2 R: injection at even fine points,
/// averaging at odd ones.
pub fn prolong_1d(v: &[f64]) -> Vec<f64> {
    let m = v.len();
    let mut out = vec![0.0; 2 * m];
    for i in 0..m {
        out[2 * i] = v[i];
        out[2 * i + 1] = if i + 1 < m {
            0.5 * (v[i] + v[i + 1])
        } else {
            0.5 * v[i]
        };
    }
    out
}

/// Tensor-product restriction on a row-major grid_n x grid_n grid.
pub fn restrict_2d(v: &[f64], grid_n: usize) -> Result<Vec<f64>> {
    assert_eq!(v.len(), grid_n * grid_n);
    if grid_n % 2 != 0 {
        return Err(SolverError::InvalidConfig(format!(
            "restriction needs an even grid side, got {grid_n}"
        )));
    }
    let m = grid_n / 2;
    let mut half = vec![0.0; grid_n * m];
    for r in 0..grid_n {
        let row = restrict_1d(&v[r * grid_n..(r + 1) * grid_n])?;
        half[r * m..(r + 1) * m].copy_from_slice(&row);
    }
    let mut out = vec![0.0; m * m];
    let mut col = vec![0.0; grid_n];
    for c in 0..m {
        for r in 0..grid_n {
            col[r] = half[r * m + c];
        }
        let coarse = restrict_1d(&col)?;
        for r in 0..m {
            out[r * m + c] = coarse[r];
        }
    }
    Ok(out)
}

/// Tensor-product (bilinear) prolongation from an m x m grid to 2m x 2m.
pub fn prolong_2d(v: &[f64], grid_m: usize) -> Vec<f64> {
    assert_eq!(v.len(), grid_m * grid_m);
    let n = 2 * grid_m;
    let mut half = vec![0.0; grid_m * n];
    for r in 0..grid_m {
        let row = prolong_1d(&v[r * grid_m..(r + 1) * grid_m]);
        half[r * n..(r + 1) * n].copy_from_slice(&row);
    }
    let mut out = vec![0.0; n * n];
    let mut col = vec![0.0; grid_m];
    for c in 0..n {
        for r in 0..grid_m {
            col[r] = half[r * n + c];
        }
        let fine = prolong_1d(&col);
        for r in 0..n {
            out[r * n + c] = fine[r];
        }
    }
    out
}

fn restrict_op(v: &[f64], grid: usize, two_d: bool) -> Result<Vec<f64>> {
    if two_d {
        restrict_2d(v, grid)
    } else {
        restrict_1d(v)
    }
}

fn prolong_op(v: &[f64], coarse_grid: usize, two_d: bool) -> Vec<f64> {
    if two_d {
        prolong_2d(v, coarse_grid)
    } else {
        prolong_1d(v)
    }
}

/// Galerkin two-grid solver with the coarse matrix materialized and
/// factorized once at construction.
pub struct TwoGrid<'a, O: SolverOperator + ?Sized> {
    op: &'a O,
    pub config: TwoGridConfig,
    coarse: SpdFactor,
    two_d: bool,
    coarse_grid: usize,
    diag: Vec<f64>,
}

impl<'a, O: SolverOperator + ?Sized> TwoGrid<'a, O> {
    pub fn new(op: &'a O, config: TwoGridConfig) -> Result<Self> {
        if config.tolerance <= 0.0 {
            return Err(SolverError::InvalidConfig("tolerance must be positive".into()));
        }
        let two_d = op.is_two_dimensional();
        let grid = op.grid_n();
        if grid % 2 != 0 {
            return Err(SolverError::InvalidConfig(format!(
                "two-grid coarsening needs an even grid, got {grid}"
            )));
        }
        let coarse_grid = grid / 2;
        let coarse_dim = if two_d { coarse_grid * coarse_grid } else { coarse_grid };
        // A_H = R A P, one composed column per coarse unit vector.
        let mut coarse_mat = DenseMatrix::zeros(coarse_dim, coarse_dim);
        let mut e = vec![0.0; coarse_dim];
        for j in 0..coarse_dim {
            e[j] = 1.0;
            let fine = prolong_op(&e, coarse_grid, two_d);
            let afine = op.apply_op(&fine);
            let col = restrict_op(&afine, grid, two_d)?;
            for i in 0..coarse_dim {
                coarse_mat[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        let coarse = SpdFactor::new(&coarse_mat)?;
        let diag = op.diagonal_vec();
        Ok(TwoGrid {
            op,
            config,
            coarse,
            two_d,
            coarse_grid,
            diag,
        })
    }

    /// One outer iteration: coarse correction, then kappa smoothing steps.
    fn step(&self, x: &mut Vec<f64>, y: &[f64], r: &mut Vec<f64>) -> Result<()> {
        self.op.apply_into(x, r);
        for i in 0..r.len() {
            r[i] = y[i] - r[i];
        }
        let rc = restrict_op(r, self.op.grid_n(), self.two_d)?;
        let ec = self.coarse.solve(&rc);
        let ef = prolong_op(&ec, self.coarse_grid, self.two_d);
        la::axpy(1.0, &ef, x);
        jacobi_sweep_with(
            |v, out| self.op.apply_into(v, out),
            &self.diag,
            y,
            x,
            self.config.smoother.weight,
            self.config.smoother.steps,
        );
        Ok(())
    }

    pub fn solve(&self, y: &[f64]) -> Result<SolveReport> {
        let started = Instant::now();
        let norm_y = la::norm2(y);
        if norm_y == 0.0 {
            return Err(SolverError::InvalidConfig(
                "two-grid requires a nonzero right-hand side".into(),
            ));
        }
        let dim = self.op.dim();
        assert_eq!(y.len(), dim);
        let mut x = vec![0.0; dim];
        let mut r = vec![0.0; dim];
        let mut history = vec![1.0];
        let mut iterations = 0;
        for it in 1..=self.config.max_iterations {
            self.step(&mut x, y, &mut r)?;
            self.op.apply_into(&x, &mut r);
            for i in 0..dim {
                r[i] = y[i] - r[i];
            }
            let rel = la::norm2(&r) / norm_y;
            history.push(rel);
            iterations = it;
            if rel < self.config.tolerance {
                break;
            }
        }
        Ok(SolveReport::finish(iterations, history, started, self.config.tolerance))
    }

    pub fn solution(&self, y: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        // Re-run retaining the final iterate; used where callers need x.
        let started = Instant::now();
        let norm_y = la::norm2(y);
        if norm_y == 0.0 {
            return Err(SolverError::InvalidConfig(
                "two-grid requires a nonzero right-hand side".into(),
            ));
        }
        let dim = self.op.dim();
        let mut x = vec![0.0; dim];
        let mut r = vec![0.0; dim];
        let mut history = vec![1.0];
        let mut iterations = 0;
        for it in 1..=self.config.max_iterations {
            self.step(&mut x, y, &mut r)?;
            self.op.apply_into(&x, &mut r);
            for i in 0..dim {
                r[i] = y[i] - r[i];
            }
            let rel = la::norm2(&r) / norm_y;
            history.push(rel);
            iterations = it;
            if rel < self.config.tolerance {
                break;
            }
        }
        Ok((
            x,
            SolveReport::finish(iterations, history, started, self.config.tolerance),
        ))
    }

    /// Run exactly `iterations` outer iterations from a zero start and return
    /// the iterate, ignoring the tolerance.  Used by spectrum-tracing tools
    /// that need the iterate after a fixed number of cycles.
    pub fn iterate(&self, y: &[f64], iterations: usize) -> Result<Vec<f64>> {
        let dim = self.op.dim();
        assert_eq!(y.len(), dim);
        let mut x = vec![0.0; dim];
        let mut r = vec![0.0; dim];
        for _ in 0..iterations {
            self.step(&mut x, y, &mut r)?;
        }
        Ok(x)
    }
}

pub fn two_grid_solve<O: SolverOperator + ?Sized>(
    a: &O,
    y: &[f64],
    config: TwoGridConfig,
) -> Result<SolveReport> {
    TwoGrid::new(a, config)?.solve(y)
}

/// Multigrid hierarchy for the backslash-cycle: pre-smoothing only,
/// coarse operators composed matrix-free through the transfer chain, and
/// only the coarsest level materialized and factorized.
pub struct Multigrid<'a, O: SolverOperator + ?Sized> {
    op: &'a O,
    pub config: MultigridConfig,
    two_d: bool,
    /// Grid side per level; level 0 is the finest.
    grids: Vec<usize>,
    dims: Vec<usize>,
    /// Jacobi diagonals for every smoothing level.
    diags: Vec<Vec<f64>>,
    coarsest: SpdFactor,
}

impl<'a, O: SolverOperator + ?Sized> Multigrid<'a, O> {
    pub fn new(op: &'a O, config: MultigridConfig) -> Result<Self> {
        if config.levels < 2 {
            return Err(SolverError::InvalidConfig(
                "multigrid needs at least two levels".into(),
            ));
        }
        let two_d = op.is_two_dimensional();
        let mut grids = vec![op.grid_n()];
        for _ in 1..config.levels {
            let g = *grids.last().unwrap();
            if g % 2 != 0 || g / 2 < 2 {
                return Err(SolverError::InvalidConfig(format!(
                    "cannot coarsen grid side {g}; coarsest must stay >= 2"
                )));
            }
            grids.push(g / 2);
        }
        let dims: Vec<usize> = grids
            .iter()
            .map(|&g| if two_d { g * g } else { g })
            .collect();

        let apply_level = |level: usize, v: &[f64]| -> Result<Vec<f64>> {
            let mut w = v.to_vec();
            for l in (1..=level).rev() {
                w = prolong_op(&w, grids[l], two_d);
            }
            let mut aw = op.apply_op(&w);
            for l in 1..=level {
                aw = restrict_op(&aw, grids[l - 1], two_d)?;
            }
            Ok(aw)
        };

        let mut diags = Vec::with_capacity(config.levels - 1);
        diags.push(op.diagonal_vec());
        for level in 1..config.levels - 1 {
            let m = dims[level];
            let mut d = vec![0.0; m];
            let mut e = vec![0.0; m];
            for j in 0..m {
                e[j] = 1.0;
                d[j] = apply_level(level, &e)?[j];
                e[j] = 0.0;
            }
            diags.push(d);
        }

        let coarsest_level = config.levels - 1;
        let m = dims[coarsest_level];
        let mut coarse_mat = DenseMatrix::zeros(m, m);
        let mut e = vec![0.0; m];
        for j in 0..m {
            e[j] = 1.0;
            let col = apply_level(coarsest_level, &e)?;
            for i in 0..m {
                coarse_mat[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        let coarsest = SpdFactor::new(&coarse_mat)?;

        Ok(Multigrid {
            op,
            config,
            two_d,
            grids,
            dims,
            diags,
            coarsest,
        })
    }

    fn apply_level(&self, level: usize, v: &[f64]) -> Vec<f64> {
        if level == 0 {
            return self.op.apply_op(v);
        }
        let mut w = v.to_vec();
        for l in (1..=level).rev() {
            w = prolong_op(&w, self.grids[l], self.two_d);
        }
        let mut aw = self.op.apply_op(&w);
        for l in 1..=level {
            // Coarsening from level l-1 to level l always sees the even
            // side recorded at construction.
            aw = restrict_op(&aw, self.grids[l - 1], self.two_d).expect("validated grid chain");
        }
        aw
    }

    /// One backslash-cycle at `level`: pre-smooth, restrict the residual,
    /// recurse, prolong-correct. No post-smoothing.
    fn cycle(&self, level: usize, y: &[f64], x: &mut Vec<f64>) {
        if level == self.config.levels - 1 {
            *x = self.coarsest.solve(y);
            return;
        }
        jacobi_sweep_with(
            |v, out| out.copy_from_slice(&self.apply_level(level, v)),
            &self.diags[level],
            y,
            x,
            self.config.weight,
            self.config.pre_steps,
        );
        let ax = self.apply_level(level, x);
        let mut r = vec![0.0; self.dims[level]];
        la::sub(y, &ax, &mut r);
        let rc = restrict_op(&r, self.grids[level], self.two_d).expect("validated grid chain");
        let mut ec = vec![0.0; self.dims[level + 1]];
        self.cycle(level + 1, &rc, &mut ec);
        let ef = prolong_op(&ec, self.grids[level + 1], self.two_d);
        la::axpy(1.0, &ef, x);
    }

    pub(crate) fn cycle_once(&self, y: &[f64], x: &mut Vec<f64>) {
        self.cycle(0, y, x);
    }

    pub fn solve(&self, y: &[f64]) -> Result<SolveReport> {
        let started = Instant::now();
        let norm_y = la::norm2(y);
        if norm_y == 0.0 {
            return Err(SolverError::InvalidConfig(
                "multigrid requires a nonzero right-hand side".into(),
            ));
        }
        let dim = self.op.dim();
        assert_eq!(y.len(), dim);
        let mut x = vec![0.0; dim];
        let mut r = vec![0.0; dim];
        let mut history = vec![1.0];
        let mut iterations = 0;
        for it in 1..=self.config.max_iterations {
            self.cycle(0, y, &mut x);
            self.op.apply_into(&x, &mut r);
            for i in 0..dim {
                r[i] = y[i] - r[i];
            }
            let rel = la::norm2(&r) / norm_y;
            history.push(rel);
            iterations = it;
            if rel < self.config.tolerance {
                break;
            }
        }
        Ok(SolveReport::finish(iterations, history, started, self.config.tolerance))
    }
}

pub fn multigrid_solve<O: SolverOperator + ?Sized>(
    a: &O,
    y: &[f64],
    config: MultigridConfig,
) -> Result<SolveReport> {
    Multigrid::new(a, config)?.solve(y)
}

/// Application of M^{-1} inside PCG.
pub trait Preconditioner {
    fn precond_dim(&self) -> usize;
    fn apply_inverse(&self, r: &[f64]) -> Result<Vec<f64>>;
}

pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn precond_dim(&self) -> usize {
        self.0
    }

    fn apply_inverse(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(r.to_vec())
    }
}

impl Preconditioner for CirculantOperator {
    fn precond_dim(&self) -> usize {
        self.n()
    }

    fn apply_inverse(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.solve(r)
    }
}

impl Preconditioner for BlockCirculant2D {
    fn precond_dim(&self) -> usize {
        self.dim()
    }

    fn apply_inverse(&self, r: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve(r))
    }
}

fn conjugate_gradient<O: SolverOperator + ?Sized>(
    a: &O,
    y: &[f64],
    m: Option<&dyn Preconditioner>,
    tolerance: f64,
    max_iterations: usize,
) -> Result<SolveReport> {
    let started = Instant::now();
    let dim = a.dim();
    assert_eq!(y.len(), dim);
    let norm_y = la::norm2(y);
    let mut history = vec![1.0];
    if norm_y == 0.0 {
        return Ok(SolveReport {
            iterations: 0,
            residual_history: vec![0.0],
            wall_time: started.elapsed().as_secs_f64(),
            converged: true,
            final_rel_residual: 0.0,
        });
    }
    let mut x = vec![0.0; dim];
    let mut r = y.to_vec();
    let mut z = match m {
        Some(p) => p.apply_inverse(&r)?,
        None => r.clone(),
    };
    let mut p = z.clone();
    let mut rz = la::dot(&r, &z);
    let mut ap = vec![0.0; dim];
    let mut iterations = 0;
    for it in 1..=max_iterations {
        a.apply_into(&p, &mut ap);
        let curvature = la::dot(&p, &ap);
        if curvature <= 0.0 || !curvature.is_finite() {
            return Err(SolverError::CgBreakdown {
                iteration: it,
                curvature,
            });
        }
        let alpha = rz / curvature;
        la::axpy(alpha, &p, &mut x);
        la::axpy(-alpha, &ap, &mut r);
        // True relative residual, recomputed rather than recurred.
        let mut true_r = vec![0.0; dim];
        a.apply_into(&x, &mut true_r);
        for i in 0..dim {
            true_r[i] = y[i] - true_r[i];
        }
        let rel = la::norm2(&true_r) / norm_y;
        history.push(rel);
        iterations = it;
        if rel < tolerance {
            break;
        }
        z = match m {
            Some(pc) => pc.apply_inverse(&r)?,
            None => r.clone(),
        };
        let rz_next = la::dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..dim {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(SolveReport::finish(iterations, history, started, tolerance))
}

pub fn cg_solve<O: SolverOperator + ?Sized>(a: &O, y: &[f64], tolerance: f64) -> Result<SolveReport> {
    conjugate_gradient(a, y, None, tolerance, DEFAULT_MAX_ITERATIONS)
}

pub fn pcg_solve<O: SolverOperator + ?Sized>(
    a: &O,
    y: &[f64],
    m: &dyn Preconditioner,
    tolerance: f64,
) -> Result<SolveReport> {
    conjugate_gradient(a, y, Some(m), tolerance, DEFAULT_MAX_ITERATIONS)
}

/// Direct dense solve, the small-n oracle behind coarse grids and tests.
pub fn direct_dense_solve(a: &DenseMatrix, y: &[f64]) -> Result<Vec<f64>> {
    solve_spd(a, y)
}
