//! Preconditioner constructions. Two families serve double duty here:
//! the Frobenius-optimal circulant C(A) and the spectral shift aI - A are
//! both used as the loss weight P in operator training, while the
//! circulant (1d) and block-circulant (2d) forms also precondition CG.
//!
//! For a symmetric Toeplitz T with symbol a_k, the circulant closest to T
//! in Frobenius norm has first column c_k = ((n-k) a_k + k a_{n-k}) / n;
//! it is diagonalized by the DFT, so both apply and solve cost one
//! forward/inverse transform pair. The shift aI - A shares eigenvectors
//! with A and reverses the ordering of its spectrum, which is what makes
//! it useful as a training weight: it emphasizes exactly the error modes
//! the smoother leaves behind.

use rustfft::num_complex::Complex;

use crate::dense::DenseMatrix;
use crate::error::{Result, SolverError};
use crate::fft::{fft2_raw, Dft};
use crate::la;
use crate::operators::{anisotropic_stencil, System, SystemKind, ToeplitzOperator};

/// Anything that maps R^dim -> R^dim linearly. Training and diagnostics
/// take preconditioners and systems through this one interface.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);

    fn apply_map(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out);
        out
    }
}

impl LinearMap for System {
    fn dim(&self) -> usize {
        System::dim(self)
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        self.apply(x, out);
    }
}

impl LinearMap for DenseMatrix {
    fn dim(&self) -> usize {
        debug_assert_eq!(self.rows(), self.cols());
        self.rows()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.matvec(x));
    }
}

/// Real circulant operator, diagonalized by the DFT of its first column.
#[derive(Clone)]
pub struct CirculantOperator {
    n: usize,
    first_column: Vec<f64>,
    eigenvalues: Vec<Complex<f64>>,
    dft: Dft,
}

impl CirculantOperator {
    pub fn from_first_column(first_column: Vec<f64>) -> Self {
        let n = first_column.len();
        assert!(n > 0);
        let dft = Dft::new(n);
        let mut eigenvalues: Vec<Complex<f64>> = first_column
            .iter()
            .map(|&v| Complex::new(v, 0.0))
            .collect();
        dft.forward_raw(&mut eigenvalues);
        CirculantOperator {
            n,
            first_column,
            eigenvalues,
            dft,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut col = vec![0.0; n];
        col[0] = 1.0;
        Self::from_first_column(col)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn first_column(&self) -> &[f64] {
        &self.first_column
    }

    pub fn eigenvalues(&self) -> &[Complex<f64>] {
        &self.eigenvalues
    }

    /// Eigenvalues of a symmetric circulant are real; this drops the
    /// (tiny) imaginary parts without checking.
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|c| c.re).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.dft.forward_raw(&mut buf);
        for (b, lam) in buf.iter_mut().zip(self.eigenvalues.iter()) {
            *b *= lam;
        }
        self.dft.inverse_raw(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// C^{-1} r by eigenvalue division. Imaginary residue after the
    /// inverse transform is discarded.
    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(r.len(), self.n);
        let max = self
            .eigenvalues
            .iter()
            .map(|c| c.norm())
            .fold(0.0_f64, f64::max);
        let min = self
            .eigenvalues
            .iter()
            .map(|c| c.norm())
            .fold(f64::INFINITY, f64::min);
        // Written so that an identically zero spectrum also trips it.
        if !(min > 1e-14 * max) || max == 0.0 {
            return Err(SolverError::Singular(format!(
                "circulant eigenvalue magnitude {min:.3e} below 1e-14 of max {max:.3e}"
            )));
        }
        let mut buf: Vec<Complex<f64>> = r.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.dft.forward_raw(&mut buf);
        for (b, lam) in buf.iter_mut().zip(self.eigenvalues.iter()) {
            *b /= lam;
        }
        self.dft.inverse_raw(&mut buf);
        let scale = 1.0 / self.n as f64;
        Ok(buf.iter().map(|c| c.re * scale).collect())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.n;
        DenseMatrix::from_fn(n, n, |i, j| self.first_column[(i + n - j) % n])
    }
}

/// Frobenius-nearest circulant to a symmetric Toeplitz operator:
/// c_k = ((n-k) a_k + k a_{n-k}) / n.
pub fn optimal_circulant(t: &ToeplitzOperator) -> CirculantOperator {
    let n = t.n();
    let a = t.symbol();
    let mut col = vec![0.0; n];
    col[0] = a[0];
    for k in 1..n {
        col[k] = ((n - k) as f64 * a[k] + k as f64 * a[n - k]) / n as f64;
    }
    CirculantOperator::from_first_column(col)
}

/// Frobenius-nearest circulant to the full system matrix A. For the
/// Tikhonov systems the identity part projects to itself; the anisotropic
/// tridiagonal part projects by cyclic-diagonal averaging. Linearity of
/// the projection makes the sum exact.
pub fn optimal_circulant_of_system(system: &System) -> Result<CirculantOperator> {
    let n = system.grid_n();
    let mut col = optimal_circulant(system.kernel()).first_column.clone();
    match system.kind() {
        SystemKind::Tikhonov1d => {
            col[0] += system.alpha();
        }
        SystemKind::Anisotropic1d => {
            let (d_diag, d_off) = anisotropic_stencil(n);
            let alpha = system.alpha();
            col[0] += alpha * d_diag.iter().sum::<f64>() / n as f64;
            let off_sum: f64 = d_off.iter().sum();
            col[1] += alpha * off_sum / n as f64;
            col[n - 1] += alpha * off_sum / n as f64;
        }
        SystemKind::Tikhonov2d => {
            return Err(SolverError::InvalidConfig(
                "the 2d system projects onto block circulants; use BlockCirculant2D".into(),
            ));
        }
    }
    Ok(CirculantOperator::from_first_column(col))
}

pub fn circulant_solve(c: &CirculantOperator, r: &[f64]) -> Result<Vec<f64>> {
    c.solve(r)
}

/// alpha I + C (x) C on an n x n grid, diagonalized by the 2d DFT with
/// eigen-grid alpha + c_i c_j.
pub struct BlockCirculant2D {
    grid_n: usize,
    alpha: f64,
    circulant: CirculantOperator,
    circulant_eigs: Vec<f64>,
    dft: Dft,
}

impl BlockCirculant2D {
    pub fn new(alpha: f64, circulant: CirculantOperator) -> Result<Self> {
        let c = circulant.real_eigenvalues();
        let mut min = f64::INFINITY;
        let mut max = 0.0_f64;
        for &ci in &c {
            for &cj in &c {
                let lam = (alpha + ci * cj).abs();
                min = min.min(lam);
                max = max.max(lam);
            }
        }
        if !(min > 1e-14 * max) || max == 0.0 {
            return Err(SolverError::Singular(format!(
                "block-circulant eigen-grid magnitude {min:.3e} below 1e-14 of max {max:.3e}"
            )));
        }
        let n = circulant.n();
        Ok(BlockCirculant2D {
            grid_n: n,
            alpha,
            circulant,
            circulant_eigs: c,
            dft: Dft::new(n),
        })
    }

    pub fn from_system(system: &System) -> Result<Self> {
        if !system.is_two_dimensional() {
            return Err(SolverError::InvalidConfig(
                "block-circulant preconditioner requires the 2d system".into(),
            ));
        }
        Self::new(system.alpha(), optimal_circulant(system.kernel()))
    }

    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn dim(&self) -> usize {
        self.grid_n * self.grid_n
    }

    pub fn eigen_grid(&self, i: usize, j: usize) -> f64 {
        self.alpha + self.circulant_eigs[i] * self.circulant_eigs[j]
    }

    fn transform(&self, r: &[f64], invert: bool) -> Vec<f64> {
        let n = self.grid_n;
        assert_eq!(r.len(), n * n);
        let mut buf: Vec<Complex<f64>> = r.iter().map(|&v| Complex::new(v, 0.0)).collect();
        fft2_raw(&self.dft, &mut buf, true);
        for i in 0..n {
            for j in 0..n {
                let lam = self.alpha + self.circulant_eigs[i] * self.circulant_eigs[j];
                if invert {
                    buf[i * n + j] /= lam;
                } else {
                    buf[i * n + j] *= lam;
                }
            }
        }
        fft2_raw(&self.dft, &mut buf, false);
        let scale = 1.0 / (n * n) as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.transform(r, false)
    }

    /// B^{-1} r: reshape, 2d FFT, divide by the eigen-grid, invert.
    pub fn solve(&self, r: &[f64]) -> Vec<f64> {
        self.transform(r, true)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.grid_n;
        let c = self.circulant.to_dense();
        DenseMatrix::from_fn(n * n, n * n, |p, q| {
            let (i1, j1) = (p / n, p % n);
            let (i2, j2) = (q / n, q % n);
            let mut v = c[(i1, i2)] * c[(j1, j2)];
            if p == q {
                v += self.alpha;
            }
            v
        })
    }
}

pub fn block_circulant_solve(b: &BlockCirculant2D, r: &[f64]) -> Vec<f64> {
    b.solve(r)
}

/// Estimate of the largest eigenvalue of A by power iteration.
pub fn estimate_lambda_max(system: &System) -> f64 {
    la::power_method_lmax(system.dim(), |x, out| system.apply(x, out), 1e-8, 10_000)
}

/// A shift value guaranteed valid for `LossPrecondChoice::Shift`: strictly
/// above lambda_max(A) by construction. For the Tikhonov systems the
/// kernel spectrum sits below f(0) = 1, so 1 + alpha works; the
/// anisotropic bound adds a Gershgorin estimate of the diffusion part.
pub fn default_shift(system: &System) -> f64 {
    match system.kind() {
        SystemKind::Tikhonov1d | SystemKind::Tikhonov2d => 1.0 + system.alpha(),
        SystemKind::Anisotropic1d => {
            let n = system.grid_n();
            let (d_diag, d_off) = anisotropic_stencil(n);
            let mut bound = 0.0_f64;
            for i in 0..n {
                let mut row = d_diag[i];
                if i > 0 {
                    row += d_off[i - 1].abs();
                }
                if i + 1 < n {
                    row += d_off[i].abs();
                }
                bound = bound.max(row);
            }
            1.0 + system.alpha() * bound
        }
    }
}

/// Which weight P multiplies the error inside the training loss.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossPrecondChoice {
    Identity,
    CirculantInverse,
    Shift { a: f64 },
}

/// Materialized loss weight bound to a system.
pub enum LossPreconditioner<'a> {
    Identity { dim: usize },
    CirculantInverse(CirculantOperator),
    BlockCirculantInverse(BlockCirculant2D),
    Shift { a: f64, system: &'a System },
}

impl LossPreconditioner<'_> {
    /// Dense form for diagnostics; the inverse variants solve against
    /// unit vectors.
    pub fn to_dense(&self) -> DenseMatrix {
        let dim = LinearMap::dim(self);
        let mut e = vec![0.0; dim];
        let mut out = DenseMatrix::zeros(dim, dim);
        for j in 0..dim {
            e[j] = 1.0;
            let col = self.apply_map(&e);
            for i in 0..dim {
                out[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        out
    }
}

impl LinearMap for LossPreconditioner<'_> {
    fn dim(&self) -> usize {
        match self {
            LossPreconditioner::Identity { dim } => *dim,
            LossPreconditioner::CirculantInverse(c) => c.n(),
            LossPreconditioner::BlockCirculantInverse(b) => b.dim(),
            LossPreconditioner::Shift { system, .. } => system.dim(),
        }
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            LossPreconditioner::Identity { .. } => out.copy_from_slice(x),
            LossPreconditioner::CirculantInverse(c) => {
                // Nonsingularity was established at construction.
                out.copy_from_slice(&c.solve(x).expect("validated circulant"));
            }
            LossPreconditioner::BlockCirculantInverse(b) => out.copy_from_slice(&b.solve(x)),
            LossPreconditioner::Shift { a, system } => {
                system.apply(x, out);
                for (o, xi) in out.iter_mut().zip(x.iter()) {
                    *o = *a * xi - *o;
                }
            }
        }
    }
}

/// Build the training weight P for a system. The shift choice is
/// validated against a power-iteration estimate of lambda_max(A) and
/// rejected when it cannot make aI - A positive definite.
pub fn make_loss_preconditioner(
    choice: LossPrecondChoice,
    system: &System,
) -> Result<LossPreconditioner<'_>> {
    match choice {
        LossPrecondChoice::Identity => Ok(LossPreconditioner::Identity { dim: system.dim() }),
        LossPrecondChoice::CirculantInverse => {
            if system.is_two_dimensional() {
                let block = BlockCirculant2D::from_system(system)?;
                Ok(LossPreconditioner::BlockCirculantInverse(block))
            } else {
                let circ = optimal_circulant_of_system(system)?;
                let eigs = circ.real_eigenvalues();
                let max = eigs.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
                let min = eigs.iter().fold(f64::INFINITY, |m, &v| m.min(v.abs()));
                if min < 1e-14 * max {
                    return Err(SolverError::Singular(
                        "optimal circulant of the system is numerically singular".into(),
                    ));
                }
                Ok(LossPreconditioner::CirculantInverse(circ))
            }
        }
        LossPrecondChoice::Shift { a } => {
            let estimate = estimate_lambda_max(system);
            if a <= estimate {
                return Err(SolverError::InvalidConfig(format!(
                    "shift a = {a:.6} must exceed lambda_max(A) ~ {estimate:.6}"
                )));
            }
            Ok(LossPreconditioner::Shift { a, system })
        }
    }
}
