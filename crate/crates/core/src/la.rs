//! Small dense-vector helpers shared by the solvers.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * xi;
    }
}

pub fn scale(a: &mut [f64], s: f64) {
    for v in a.iter_mut() {
        *v *= s;
    }
}

/// a - b as a fresh vector
pub fn sub_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x - y).collect()
}

/// out = a - b
pub fn sub(a: &[f64], b: &[f64], out: &mut [f64]) {
    debug_assert_eq!(a.len(), b.len());
    debug_assert_eq!(a.len(), out.len());
    for i in 0..a.len() {
        out[i] = a[i] - b[i];
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite map, estimated
/// by power iteration on a deterministic start vector. Stops when the
/// Rayleigh quotient changes by less than `tol` relatively, or after
/// `max_iter` sweeps; either way the last quotient is returned (for a
/// symmetric map it approaches the true value from below).
pub fn power_method_lmax(
    dim: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
    tol: f64,
    max_iter: usize,
) -> f64 {
    // Deterministic start with all-frequency content so no eigenvector is
    // missed by symmetry accidents.
    let mut v: Vec<f64> = (0..dim)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 0.3) * 1.618).sin())
        .collect();
    let inv = 1.0 / norm2(&v);
    scale(&mut v, inv);
    let mut av = vec![0.0; dim];
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        apply(&v, &mut av);
        let next = dot(&v, &av);
        let nrm = norm2(&av);
        if nrm == 0.0 {
            return 0.0;
        }
        for (vi, avi) in v.iter_mut().zip(av.iter()) {
            *vi = avi / nrm;
        }
        if (next - lambda).abs() <= tol * next.abs().max(1e-300) {
            return next;
        }
        lambda = next;
    }
    lambda
}
