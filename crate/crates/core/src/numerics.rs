//! Dense small-scale linear algebra, central differences, Richardson
//! extrapolation and log-log slope fitting.
//!
//! Everything here is pure. Matrices and vectors are `nalgebra` dynamic types;
//! the sizes involved are tiny (a handful of rows) so no attempt is made to
//! avoid allocation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Errors at or below this level are treated as double-precision noise.
pub const DEFAULT_NOISE_FLOOR: f64 = 1e-14;

/// Relative rank threshold for [`kernel_split`].
pub const DEFAULT_KERNEL_RTOL: f64 = 1e-10;

/// Central-difference step for coordinate value `xi`: cube root of machine
/// epsilon, scaled by `max(1, |xi|)`.
pub fn default_fd_step(xi: f64) -> f64 {
    f64::EPSILON.cbrt() * xi.abs().max(1.0)
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn ensure_finite(v: &Vector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteEvaluation(format!("{what} produced a non-finite value")))
    }
}

/// Central-difference Jacobian with a uniform step `step`.
///
/// Column `i` is `(f(x + s e_i) - f(x - s e_i)) / (2 s)`.
pub fn fd_jacobian<F>(f: F, x: &Vector, step: f64) -> Result<Matrix>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {step}")));
    }
    jacobian_with_steps(f, x, |_| step)
}

/// Central-difference Jacobian using [`default_fd_step`] per coordinate.
pub fn fd_jacobian_auto<F>(f: F, x: &Vector) -> Result<Matrix>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    jacobian_with_steps(f, x, default_fd_step)
}

fn jacobian_with_steps<F, S>(f: F, x: &Vector, step_for: S) -> Result<Matrix>
where
    F: Fn(&Vector) -> Result<Vector>,
    S: Fn(f64) -> f64,
{
    let a = x.len();
    let mut columns: Vec<Vector> = Vec::with_capacity(a);
    let mut rows = None;
    for i in 0..a {
        let s = step_for(x[i]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += s;
        xm[i] -= s;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        ensure_finite(&fp, "stencil evaluation")?;
        ensure_finite(&fm, "stencil evaluation")?;
        if fp.len() != fm.len() {
            return Err(Error::DimensionMismatch("stencil outputs differ in length".into()));
        }
        rows = Some(fp.len());
        // the actual step (x+s)-(x-s) may differ from 2s by rounding
        let width = xp[i] - xm[i];
        columns.push((fp - fm) / width);
    }
    let b = match rows {
        Some(b) => b,
        None => f(x)?.len(),
    };
    let mut jac = Matrix::zeros(b, a);
    for (i, c) in columns.iter().enumerate() {
        jac.set_column(i, c);
    }
    Ok(jac)
}

/// Orthonormal splitting of `R^n` into `ker A` and a complement `K` on which
/// `A` is invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSplit {
    /// n x (n-m), columns span `ker A`.
    pub kernel_basis: Matrix,
    /// n x m, columns span the row space of `A`.
    pub complement_basis: Matrix,
    /// The m x n matrix that was decomposed.
    pub source_matrix: Matrix,
    /// Singular values of `A`, descending.
    pub singular_values: Vec<f64>,
}

impl KernelSplit {
    /// Split with the default relative rank tolerance.
    pub fn new(a: &Matrix) -> Result<Self> {
        kernel_split(a, None)
    }

    /// `|| K K^T + C C^T - I ||_max`, zero up to rounding.
    pub fn projector_defect(&self) -> f64 {
        let n = self.source_matrix.ncols();
        let p = &self.kernel_basis * self.kernel_basis.transpose()
            + &self.complement_basis * self.complement_basis.transpose();
        (p - Matrix::identity(n, n)).amax()
    }
}

/// Decompose a full-row-rank `a` (m x n) into kernel and complement bases.
///
/// The subspaces come from a singular value decomposition. Within each
/// subspace the basis is made canonical by pivoted Gram-Schmidt on the
/// projected coordinate vectors (ordered by coordinate index), followed by
/// the sign convention that the first nonzero entry of every column is
/// positive. `tol_kernel` defaults to `1e-10 * sigma_max`.
pub fn kernel_split(a: &Matrix, tol_kernel: Option<f64>) -> Result<KernelSplit> {
    let (m, n) = a.shape();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEvaluation("kernel_split input".into()));
    }
    if m > n {
        return Err(Error::RankDeficient { sigma_min: 0.0, tol: tol_kernel.unwrap_or(0.0) });
    }
    if m == 0 {
        return Ok(KernelSplit {
            kernel_basis: Matrix::identity(n, n),
            complement_basis: Matrix::zeros(n, 0),
            source_matrix: a.clone(),
            singular_values: vec![],
        });
    }

    // Pad to a square matrix so that the SVD returns a full set of right
    // singular vectors.
    let mut padded = Matrix::zeros(n, n);
    padded.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::InvalidArgument("SVD did not return right singular vectors".into()))?;
    let sigma = svd.singular_values;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));

    let sigma_max = sigma[order[0]];
    let tol = tol_kernel.unwrap_or(DEFAULT_KERNEL_RTOL * sigma_max);
    let sigma_m = sigma[order[m - 1]];
    if sigma_m <= tol {
        return Err(Error::RankDeficient { sigma_min: sigma_m, tol });
    }

    let basis_from = |rows: &[usize]| -> Matrix {
        let mut b = Matrix::zeros(n, rows.len());
        for (c, &r) in rows.iter().enumerate() {
            b.set_column(c, &v_t.row(r).transpose());
        }
        b
    };
    let range = basis_from(&order[..m]);
    let kernel = basis_from(&order[m..]);

    let kernel_basis = canonical_basis(&(&kernel * kernel.transpose()), n - m);
    let complement_basis = canonical_basis(&(&range * range.transpose()), m);

    Ok(KernelSplit {
        kernel_basis,
        complement_basis,
        source_matrix: a.clone(),
        singular_values: order[..m].iter().map(|&i| sigma[i]).collect(),
    })
}

/// Orthonormal basis of the range of the orthogonal projector `p` (rank `k`)
/// built from its columns by pivoted Gram-Schmidt.
fn canonical_basis(p: &Matrix, k: usize) -> Matrix {
    let n = p.nrows();
    let mut residual: Vec<Vector> = (0..n).map(|i| p.column(i).into_owned()).collect();
    let mut picked: Vec<(usize, Vector)> = Vec::with_capacity(k);
    let mut used = vec![false; n];
    for _ in 0..k {
        let best = (0..n)
            .filter(|&i| !used[i])
            .map(|i| residual[i].norm())
            .fold(0.0_f64, f64::max);
        // lowest index among the near-maximal residuals
        let pivot = (0..n)
            .find(|&i| !used[i] && residual[i].norm() >= best * (1.0 - 1e-8))
            .expect("projector rank exceeds dimension");
        used[pivot] = true;
        let q = &residual[pivot] / residual[pivot].norm();
        for (i, r) in residual.iter_mut().enumerate() {
            if used[i] {
                continue;
            }
            // two passes keep the basis orthogonal to rounding level
            for _ in 0..2 {
                let c = q.dot(r);
                *r -= &q * c;
            }
        }
        picked.push((pivot, q));
    }
    picked.sort_by_key(|(i, _)| *i);
    let mut basis = Matrix::zeros(n, k);
    for (c, (_, q)) in picked.iter().enumerate() {
        let mut q = q.clone();
        if let Some(first) = q.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                q.neg_mut();
            }
        }
        basis.set_column(c, &q);
    }
    basis
}

/// Ratio of extreme singular values; `inf` when singular, `1` for an empty
/// matrix.
pub fn condition_number(a: &Matrix) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 1.0;
    }
    if a.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let s = a.singular_values();
    let max = s.iter().cloned().fold(0.0_f64, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve the square system `a x = b` by LU.
pub fn solve_linear(a: &Matrix, b: &Vector) -> Result<Vector> {
    if !a.is_square() || a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "cannot solve {}x{} system with right-hand side of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let x = a
        .clone()
        .lu()
        .solve(b)
        .ok_or(Error::SingularSystem { condition: f64::INFINITY })?;
    ensure_finite(&x, "linear solve")?;
    Ok(x)
}

/// Extrapolate `value(h)` to `h -> 0` assuming an error expansion in powers
/// of `h^order_gap`.
///
/// Samples must have distinct positive `h`, sorted decreasing. The Neville
/// table in the variable `s = h^order_gap` is built to full depth and the
/// deepest entry is returned.
pub fn richardson_limit(samples: &[(f64, Vector)], order_gap: f64) -> Result<Vector> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: samples.len() });
    }
    if !(order_gap > 0.0) {
        return Err(Error::InvalidArgument(format!("order gap must be positive, got {order_gap}")));
    }
    let len = samples[0].1.len();
    for w in samples.windows(2) {
        if !(w[1].0 < w[0].0) {
            return Err(Error::InvalidArgument("h values must be distinct and decreasing".into()));
        }
    }
    if samples.iter().any(|(h, v)| !(*h > 0.0) || v.len() != len) {
        return Err(Error::InvalidArgument("h must be positive and values equally sized".into()));
    }
    let s: Vec<f64> = samples.iter().map(|(h, _)| h.powf(order_gap)).collect();
    let mut table: Vec<Vector> = samples.iter().map(|(_, v)| v.clone()).collect();
    // after pass j, table[i] holds T[i][j] for i >= j
    for j in 1..samples.len() {
        for i in (j..samples.len()).rev() {
            let factor = s[i] / (s[i - j] - s[i]);
            let improved = &table[i] + (&table[i] - &table[i - 1]) * factor;
            table[i] = improved;
        }
    }
    let last = table.pop().expect("nonempty");
    ensure_finite(&last, "Richardson extrapolation")?;
    Ok(last)
}

/// Least-squares fit of `log err` against `log h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub retained: usize,
}

/// Fit the convergence slope, discarding points with `err <= floor`.
pub fn slope_fit(pairs: &[(f64, f64)], floor: f64) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(h, e)| *h > 0.0 && e.is_finite() && *e > floor)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::BelowFloor { retained: pts.len(), floor });
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct h values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy <= f64::EPSILON * k { 1.0 } else { 1.0 - ss_res / syy };
    Ok(SlopeFit { slope, intercept, r2, retained: pts.len() })
}

/// Newton iteration for a square system `fun(x) = 0`.
///
/// Uses `jac` when given, central differences otherwise. After the residual
/// drops below `tol` one extra step is taken when it improves the residual.
pub fn newton_root<F>(
    fun: F,
    jac: Option<&dyn Fn(&Vector) -> Result<Matrix>>,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let mut x = x0.clone();
    let mut fx = fun(&x)?;
    ensure_finite(&fx, "Newton residual")?;
    for iteration in 0..=max_iter {
        let norm = max_abs(&fx);
        let jacobian = |x: &Vector| match jac {
            Some(j) => j(x),
            None => fd_jacobian_auto(&fun, x),
        };
        if norm <= tol {
            if norm > 0.0 {
                if let Ok(step) = jacobian(&x).and_then(|j| solve_linear(&j, &fx)) {
                    let polished = &x - step;
                    if let Ok(fp) = fun(&polished) {
                        if fp.iter().all(|v| v.is_finite()) && max_abs(&fp) < norm {
                            return Ok(polished);
                        }
                    }
                }
            }
            return Ok(x);
        }
        if iteration == max_iter {
            return Err(Error::NewtonFailed { iterations: iteration, residual: norm });
        }
        let j = jacobian(&x)?;
        let step = solve_linear(&j, &fx).map_err(|_| Error::NewtonFailed { iterations: iteration, residual: norm })?;
        x -= step;
        fx = fun(&x)?;
        ensure_finite(&fx, "Newton residual")?;
    }
    unreachable!("loop returns on its final iteration")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn fd_jacobian_square() {
        let j = fd_jacobian(|x: &Vector| Ok(v(&[x[0] * x[0]])), &v(&[3.0]), 1e-5).unwrap();
        assert!((j[(0, 0)] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn fd_jacobian_bilinear() {
        let f = |x: &Vector| Ok(v(&[x[0] + x[1], x[0] * x[1]]));
        let j = fd_jacobian(f, &v(&[1.0, 2.0]), 1e-5).unwrap();
        let expect = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 1.0]);
        assert!((j - expect).amax() < 1e-8);
    }

    #[test]
    fn fd_jacobian_sine_matches_closed_form() {
        let j = fd_jacobian(|x: &Vector| Ok(x.map(f64::sin)), &v(&[0.5]), default_fd_step(0.5)).unwrap();
        assert!((j[(0, 0)] - 0.5_f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn fd_jacobian_rejects_nan() {
        let f = |x: &Vector| Ok(v(&[if x[0] > 1.0 { f64::NAN } else { x[0] }]));
        let err = fd_jacobian(f, &v(&[1.0]), 1e-3).unwrap_err();
        assert_eq!(err.kind(), "NonFiniteEvaluation");
    }

    #[test]
    fn kernel_split_coordinate_projection() {
        let ks = kernel_split(&Matrix::from_row_slice(1, 2, &[1.0, 0.0]), None).unwrap();
        assert!((&ks.kernel_basis - Matrix::from_row_slice(2, 1, &[0.0, 1.0])).amax() < 1e-14);
        assert!((&ks.complement_basis - Matrix::from_row_slice(2, 1, &[1.0, 0.0])).amax() < 1e-14);
    }

    #[test]
    fn kernel_split_diagonal_direction() {
        let s = 0.5_f64.sqrt();
        let ks = kernel_split(&Matrix::from_row_slice(1, 2, &[s, s]), None).unwrap();
        let k = ks.kernel_basis.column(0);
        assert!((k[0] - s).abs() < 1e-14 && (k[1] + s).abs() < 1e-14);
    }

    #[test]
    fn kernel_split_zero_matrix_is_rank_deficient() {
        let err = kernel_split(&Matrix::zeros(1, 2), None).unwrap_err();
        assert_eq!(err.kind(), "RankDeficient");
    }

    #[test]
    fn kernel_split_three_dimensional_constraint() {
        let ks = kernel_split(&Matrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]), None).unwrap();
        let expect = Matrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        assert!((&ks.kernel_basis - expect).amax() < 1e-14);
    }

    #[test]
    fn kernel_split_rejects_wide_rank_loss() {
        let a = Matrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(kernel_split(&a, None).unwrap_err().kind(), "RankDeficient");
    }

    #[test]
    fn richardson_linear_error() {
        let s = vec![(0.1, v(&[1.1])), (0.05, v(&[1.05]))];
        assert!((richardson_limit(&s, 1.0).unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn richardson_quadratic_error() {
        let s: Vec<_> = (2..=6)
            .map(|k| {
                let h = 2f64.powi(-k);
                (h, v(&[2.0 + h * h]))
            })
            .collect();
        assert!((richardson_limit(&s, 2.0).unwrap()[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn richardson_sinc_limit() {
        let s: Vec<_> = (3..=8)
            .map(|k| {
                let h = 2f64.powi(-k);
                (h, v(&[h.sin() / h]))
            })
            .collect();
        assert!((richardson_limit(&s, 2.0).unwrap()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn richardson_needs_two_samples() {
        let err = richardson_limit(&[(0.1, v(&[1.0]))], 1.0).unwrap_err();
        assert_eq!(err.kind(), "InsufficientSamples");
    }

    #[test]
    fn slope_of_cubic() {
        let pairs: Vec<_> = (2..=9).map(|k| (2f64.powi(-k), 2f64.powi(-3 * k))).collect();
        let fit = slope_fit(&pairs, DEFAULT_NOISE_FLOOR).unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-6);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_with_correction_term() {
        // err = h^2 (1 + 0.1 h): d log err / d log h = 2 + 0.1h/(1+0.1h) <= 2.03 on h <= 0.25
        let pairs: Vec<_> = (2..=9)
            .map(|k| {
                let h = 2f64.powi(-k);
                (h, h * h * (1.0 + 0.1 * h))
            })
            .collect();
        let fit = slope_fit(&pairs, DEFAULT_NOISE_FLOOR).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.05);
    }

    #[test]
    fn slope_below_floor() {
        let pairs: Vec<_> = (2..=9).map(|k| (2f64.powi(-k), 1e-17)).collect();
        assert_eq!(slope_fit(&pairs, DEFAULT_NOISE_FLOOR).unwrap_err().kind(), "BelowFloor");
    }

    #[test]
    fn newton_root_finds_sqrt_two() {
        let x = newton_root(|x: &Vector| Ok(v(&[x[0] * x[0] - 2.0])), None, &v(&[1.0]), 1e-14, 50).unwrap();
        assert!((x[0] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn condition_of_singular_is_infinite() {
        assert!(condition_number(&Matrix::zeros(2, 2)).is_infinite());
        assert!((condition_number(&Matrix::identity(3, 3)) - 1.0).abs() < 1e-14);
    }
}
