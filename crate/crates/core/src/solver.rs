//! Newton iteration for `F(x) = (0, y)` and continuation in `y`.
//!
//! Each Newton step inverts `DF` blockwise: the constraint block on a
//! complement of `ker Dg`, then the skew Hessian block on `ker Dg`.

use crate::error::{Error, Result};
use crate::geometry::{SkewHessianReport, SkewProblem, DEFAULT_CONDITION_CAP};
use crate::numerics::{condition_number, kernel_split, max_abs, solve_linear, Vector};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSettings {
    pub tol_residual: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub armijo: bool,
    pub condition_cap: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings { tol_residual: 1e-12, max_iter: 50, damping: 1.0, armijo: true, condition_cap: DEFAULT_CONDITION_CAP }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) || self.max_iter < 1 || !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("invalid Newton settings {self:?}")));
        }
        if !(self.condition_cap > 1.0) {
            return Err(Error::InvalidArgument("condition cap must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x_c: Vector,
    pub y: Vector,
    pub iterations: usize,
    /// `|F(x_k) - (0, y)|_inf` for every iterate, starting with `x0`.
    pub residual_history: Vec<f64>,
    pub hessian: SkewHessianReport,
    pub converged: bool,
}

fn residual(p: &SkewProblem, x: &Vector, y: &Vector) -> Result<f64> {
    let (a, g) = p.f_map(x)?;
    Ok(max_abs(&a).max(max_abs(&(g - y))))
}

/// One Newton update `u` with `F(x) + DF(x) u = target`.
pub fn newton_step(p: &SkewProblem, x: &Vector, target: (&Vector, &Vector), cap: f64) -> Result<Vector> {
    let (a, g) = p.f_map(x)?;
    if target.0.len() != a.len() || target.1.len() != g.len() {
        return Err(Error::DimensionMismatch("target does not match (d, m)".into()));
    }
    let w1 = target.0 - a;
    let w2 = target.1 - g;

    let dg = p.constraint_jacobian(x)?;
    let split = kernel_split(&dg, None)?;
    let c = &split.complement_basis;
    let k = &split.kernel_basis;

    let u_tilde = c * solve_linear(&(&dg * c), &w2)?;

    let dalpha = p.alpha_on_distribution_jacobian(x)?;
    let h = &dalpha * k;
    if !h.is_square() {
        let ch = &p.chart;
        return Err(Error::NotSquare { n: ch.n, m: ch.m, d: ch.d, kernel: k.ncols() });
    }
    let condition = condition_number(&h);
    if !(condition <= cap) {
        return Err(Error::DegenerateHessian { condition, cap });
    }
    let rhs = w1 - &dalpha * &u_tilde;
    Ok(u_tilde + k * solve_linear(&h, &rhs)?)
}

/// Solve `F(x) = (0, y)` from `x0`.
///
/// A converged point whose skew Hessian is degenerate is reported as
/// `DegenerateHessian`.
pub fn solve(p: &SkewProblem, y: &Vector, x0: &Vector, s: &NewtonSettings) -> Result<SolveResult> {
    s.validate()?;
    if y.len() != p.chart.m || x0.len() != p.chart.n {
        return Err(Error::DimensionMismatch(format!(
            "y has length {} (m={}), x0 has length {} (n={})",
            y.len(),
            p.chart.m,
            x0.len(),
            p.chart.n
        )));
    }
    let zero = Vector::zeros(p.chart.d);
    let mut x = x0.clone();
    let mut r = residual(p, &x, y)?;
    let mut history = vec![r];
    let mut iterations = 0;
    while r > s.tol_residual {
        if iterations == s.max_iter {
            return Err(Error::MaxIterExceeded { iterations, residual: r });
        }
        let u = newton_step(p, &x, (&zero, y), s.condition_cap)?;
        let (next, r_next) = line_search(p, &x, &u, y, r, s);
        x = next;
        r = r_next;
        iterations += 1;
        history.push(r);
    }
    let hessian = p.skew_hessian(&x, s.condition_cap)?;
    if !hessian.nondegenerate {
        return Err(Error::DegenerateHessian { condition: hessian.condition_number, cap: s.condition_cap });
    }
    Ok(SolveResult { x_c: x, y: y.clone(), iterations, residual_history: history, hessian, converged: true })
}

fn line_search(p: &SkewProblem, x: &Vector, u: &Vector, y: &Vector, r: f64, s: &NewtonSettings) -> (Vector, f64) {
    let mut lambda = s.damping;
    let mut last = None;
    let halvings = if s.armijo { 20 } else { 0 };
    for _ in 0..=halvings {
        let trial = x + u * lambda;
        if let Ok(rt) = residual(p, &trial, y) {
            if !s.armijo || rt <= (1.0 - 1e-4 * lambda) * r {
                return (trial, rt);
            }
            last = Some((trial, rt));
        }
        lambda *= 0.5;
    }
    // no sufficient decrease: take the shortest finite trial
    last.unwrap_or_else(|| (x + u * lambda, f64::INFINITY))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Predictor {
    #[default]
    Previous,
    Secant,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContinuationOptions {
    pub predictor: Predictor,
    /// Largest allowed `|x_c(k+1) - x_c(k)|`. `None` uses
    /// `10 * |dy| * max(secant slope, 1)`.
    pub jump_cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationResult {
    pub samples: Vec<(Vector, SolveResult)>,
    pub failures: Vec<(Vector, Error)>,
}

/// Solve along `y_path`, warm-starting each point from the last success.
pub fn continuation(
    p: &SkewProblem,
    y_path: &[Vector],
    x0: &Vector,
    s: &NewtonSettings,
    opts: ContinuationOptions,
) -> Result<ContinuationResult> {
    if y_path.is_empty() {
        return Err(Error::InvalidArgument("empty y path".into()));
    }
    let mut samples: Vec<(Vector, SolveResult)> = Vec::new();
    let mut failures = Vec::new();
    for y in y_path {
        let last = samples.last().map(|(yy, r)| (yy.clone(), r.x_c.clone()));
        let before = samples.len().checked_sub(2).map(|i| (samples[i].0.clone(), samples[i].1.x_c.clone()));
        let slope = match (&last, &before) {
            (Some((y1, x1)), Some((y0, x0))) if (y1 - y0).norm() > 0.0 => (x1 - x0).norm() / (y1 - y0).norm(),
            _ => 1.0,
        };
        let start = match (&last, &before, opts.predictor) {
            (Some((y1, x1)), Some((y0, x0p)), Predictor::Secant) if (y1 - y0).norm() > 0.0 => {
                let ratio = (y - y1).norm() / (y1 - y0).norm();
                x1 + (x1 - x0p) * ratio
            }
            (Some((_, x1)), _, _) => x1.clone(),
            _ => x0.clone(),
        };
        match solve(p, y, &start, s) {
            Ok(res) => {
                if let Some((y1, x1)) = &last {
                    let jump = (&res.x_c - x1).norm();
                    let cap = opts.jump_cap.unwrap_or(10.0 * (y - y1).norm() * slope.max(1.0));
                    if jump > cap {
                        failures.push((y.clone(), Error::BranchJump { jump, cap }));
                        continue;
                    }
                }
                samples.push((y.clone(), res));
            }
            Err(e) => failures.push((y.clone(), e)),
        }
    }
    Ok(ContinuationResult { samples, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::{parse, Dims, Expr};
    use crate::geometry::{symbolic_problem, AmbientChart};

    fn exprs(n: usize, srcs: &[&str]) -> Vec<Expr> {
        srcs.iter().map(|s| parse(s, Dims::new(n)).unwrap()).collect()
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn trivial() -> SkewProblem {
        let chart = AmbientChart::new(2, 1, 1).unwrap();
        symbolic_problem(chart, exprs(2, &["x1", "x2"]), exprs(2, &["0"]), exprs(2, &["x1"]), 0.0).unwrap()
    }

    fn skew3d() -> SkewProblem {
        let chart = AmbientChart::new(3, 1, 2).unwrap();
        symbolic_problem(chart, exprs(3, &["x2", "x3", "x2 + x3"]), exprs(3, &["x3", "0"]), exprs(3, &["x1"]), 0.0)
            .unwrap()
    }

    fn crossing() -> SkewProblem {
        let chart = AmbientChart::new(2, 1, 1).unwrap();
        symbolic_problem(chart, exprs(2, &["0", "(1 - x1)*x2"]), exprs(2, &["0"]), exprs(2, &["x1"]), 0.0).unwrap()
    }

    #[test]
    fn step_on_linear_problem_is_exact() {
        let u = newton_step(&trivial(), &v(&[0.5, 0.3]), (&v(&[0.0]), &v(&[0.7])), 1e8).unwrap();
        assert!((u - v(&[0.2, -0.3])).amax() < 1e-15);
    }

    #[test]
    fn step_on_degenerate_problem() {
        let chart = AmbientChart::new(2, 1, 1).unwrap();
        let p = symbolic_problem(chart, exprs(2, &["1", "0"]), exprs(2, &["0"]), exprs(2, &["x1"]), 0.0).unwrap();
        let err = newton_step(&p, &v(&[0.2, 0.0]), (&v(&[0.0]), &v(&[0.7])), 1e8).unwrap_err();
        assert_eq!(err.kind(), "DegenerateHessian");
        let err = solve(&p, &v(&[0.7]), &v(&[0.2, 0.0]), &NewtonSettings::default()).unwrap_err();
        assert_eq!(err.kind(), "DegenerateHessian");
    }

    #[test]
    fn solve_trivial() {
        let r = solve(&trivial(), &v(&[0.7]), &v(&[0.7, 0.3]), &NewtonSettings::default()).unwrap();
        assert!((r.x_c - v(&[0.7, 0.0])).amax() < 1e-10);
        assert!(r.converged);
    }

    #[test]
    fn solve_skew3d_with_quadratic_decay() {
        let r = solve(&skew3d(), &v(&[0.4]), &v(&[0.4, 0.1, -0.1]), &NewtonSettings::default()).unwrap();
        // oracle: x3 (x2 + 1) = 0 and x2 + x3 = 0 give x2 = x3 = 0 on this branch
        assert!((&r.x_c - v(&[0.4, 0.0, 0.0])).amax() < 1e-10);
        for w in r.residual_history.windows(2) {
            if w[0] < 1e-3 && w[1] > 1e-14 {
                assert!(w[1] <= 10.0 * w[0] * w[0], "{:?}", r.residual_history);
            }
        }
    }

    #[test]
    fn far_start_exhausts_iterations() {
        let s = NewtonSettings { max_iter: 3, ..Default::default() };
        let err = solve(&skew3d(), &v(&[0.4]), &v(&[0.4, 5.0, 5.0]), &s).unwrap_err();
        assert_eq!(err.kind(), "MaxIterExceeded");
    }

    #[test]
    fn exact_root_needs_at_most_one_iteration() {
        let p = skew3d();
        let x = v(&[0.4, 0.0, 0.0]);
        let y = p.constraint(&x).unwrap();
        assert!(solve(&p, &y, &x, &NewtonSettings::default()).unwrap().iterations <= 1);
    }

    #[test]
    fn continuation_trivial() {
        let path: Vec<Vector> = (0..=10).map(|k| v(&[k as f64 / 10.0])).collect();
        let c = continuation(&trivial(), &path, &v(&[0.0, 0.5]), &NewtonSettings::default(), Default::default()).unwrap();
        assert!(c.failures.is_empty());
        for (y, r) in &c.samples {
            assert!((r.x_c[0] - y[0]).abs() < 1e-12 && r.x_c[1].abs() < 1e-12);
        }
    }

    #[test]
    fn continuation_skew3d_secant() {
        let path: Vec<Vector> = (0..41).map(|k| v(&[-1.0 + k as f64 * 0.05])).collect();
        let opts = ContinuationOptions { predictor: Predictor::Secant, jump_cap: None };
        let c = continuation(&skew3d(), &path, &v(&[-1.0, 0.05, 0.05]), &NewtonSettings::default(), opts).unwrap();
        assert_eq!(c.samples.len(), 41);
        for (y, r) in &c.samples {
            assert!((&r.x_c - v(&[y[0], 0.0, 0.0])).amax() < 1e-10);
            assert!(r.hessian.nondegenerate);
        }
    }

    #[test]
    fn continuation_through_degeneracy() {
        // Hessian of this family is 1 - y
        let path: Vec<Vector> = (0..=10).map(|k| v(&[k as f64 / 10.0])).collect();
        let c = continuation(&crossing(), &path, &v(&[0.0, 0.1]), &NewtonSettings::default(), Default::default()).unwrap();
        assert_eq!(c.samples.len(), 10);
        assert_eq!(c.failures.len(), 1);
        assert_eq!(c.failures[0].0, v(&[1.0]));
        assert_eq!(c.failures[0].1.kind(), "DegenerateHessian");
    }

    #[test]
    fn continuation_flags_branch_jumps() {
        let path = vec![v(&[0.0]), v(&[0.1])];
        let opts = ContinuationOptions { predictor: Predictor::Previous, jump_cap: Some(1e-6) };
        let c = continuation(&trivial(), &path, &v(&[0.0, 0.0]), &NewtonSettings::default(), opts).unwrap();
        assert_eq!(c.failures[0].1.kind(), "BranchJump");
    }

    #[test]
    fn empty_path_is_rejected() {
        let err = continuation(&trivial(), &[], &v(&[0.0, 0.0]), &NewtonSettings::default(), Default::default());
        assert!(err.is_err());
    }
}
