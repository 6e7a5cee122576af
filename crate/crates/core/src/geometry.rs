//! Skew critical problems `(alpha, D, g)` in a single global chart.
//!
//! A distribution is stored as the graph of a matrix field `Delta(x)` over a
//! fixed coordinate splitting: the fiber at `x` is `{ (e, Delta(x) e) }` where
//! `e` lives in the fiber coordinates and `Delta(x) e` in the complementary
//! ones. A one-form is a covector field paired with tangent vectors by the
//! coordinate dot product.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exprlang::{differentiate, Env, Expr, Var};
use crate::numerics::{condition_number, fd_jacobian_auto, kernel_split, max_abs, Matrix, Vector};

pub type VecFn = Arc<dyn Fn(&Vector) -> Result<Vector> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&Vector) -> Result<Matrix> + Send + Sync>;
pub type MatListFn = Arc<dyn Fn(&Vector) -> Result<Vec<Matrix>> + Send + Sync>;

/// Default cap on the skew Hessian condition number.
pub const DEFAULT_CONDITION_CAP: f64 = 1e8;

/// Threshold on `|alpha_D(x)|` below which a point counts as critical.
pub const CRITICAL_POINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmbientChart {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    /// Zero-based coordinates spanning the model fiber, in basis order.
    pub fiber_coords: Vec<usize>,
    /// The remaining coordinates, ascending.
    pub complement_coords: Vec<usize>,
}

impl AmbientChart {
    /// Chart whose fiber is spanned by the last `d` coordinates.
    pub fn new(n: usize, m: usize, d: usize) -> Result<Self> {
        if d > n {
            return Err(Error::DimensionMismatch(format!("distribution rank {d} exceeds dimension {n}")));
        }
        Self::with_fiber(n, m, (n - d..n).collect())
    }

    pub fn with_fiber(n: usize, m: usize, fiber_coords: Vec<usize>) -> Result<Self> {
        let d = fiber_coords.len();
        if m > n || d > n {
            return Err(Error::DimensionMismatch(format!("chart n={n}, m={m}, d={d}")));
        }
        let mut seen = vec![false; n];
        for &c in &fiber_coords {
            if c >= n || seen[c] {
                return Err(Error::DimensionMismatch(format!("invalid fiber coordinate list {fiber_coords:?}")));
            }
            seen[c] = true;
        }
        let complement_coords = (0..n).filter(|c| !seen[*c]).collect();
        Ok(AmbientChart { n, m, d, fiber_coords, complement_coords })
    }
}

/// A one-form: `eval(x)` lists components against `dx_1..dx_n`; `jac(x)[i][k]`
/// is `d alpha_i / d x_k`.
#[derive(Clone)]
pub struct OneForm {
    pub n: usize,
    pub eval: VecFn,
    pub jac: Option<MatFn>,
}

#[derive(Clone)]
pub struct GraphDistribution {
    pub n: usize,
    pub d: usize,
    /// `(n-d) x d` matrix field.
    pub delta: MatFn,
    /// `delta_jac(x)[k] = d Delta / d x_k`.
    pub delta_jac: Option<MatListFn>,
}

#[derive(Clone)]
pub struct Constraint {
    pub n: usize,
    pub m: usize,
    pub eval: VecFn,
    /// `m x n`.
    pub jac: Option<MatFn>,
}

#[derive(Clone)]
pub struct SkewProblem {
    pub chart: AmbientChart,
    pub alpha: OneForm,
    pub dist: GraphDistribution,
    pub g: Constraint,
}

macro_rules! opaque_debug {
    ($($t:ty => $($field:ident),*);* $(;)?) => {$(
        impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.debug_struct(stringify!($t))$(.field(stringify!($field), &self.$field))*.finish_non_exhaustive()
            }
        }
    )*};
}

opaque_debug! {
    OneForm => n;
    GraphDistribution => n, d;
    Constraint => n, m;
    SkewProblem => chart;
}

fn env(x: &Vector, t: f64) -> Env<'_> {
    Env { x: x.as_slice(), t: Some(t), params: &[] }
}

fn eval_list(exprs: &[Expr], x: &Vector, t: f64) -> Result<Vector> {
    let e = env(x, t);
    let vals = exprs.iter().map(|ex| ex.eval(&e)).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Vector::from_vec(vals))
}

fn eval_grid(rows: usize, cols: usize, exprs: &[Expr], x: &Vector, t: f64) -> Result<Matrix> {
    let e = env(x, t);
    let mut out = Matrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            out[(r, c)] = exprs[r * cols + c].eval(&e)?;
        }
    }
    Ok(out)
}

fn gradient_table(exprs: &[Expr], n: usize) -> Vec<Expr> {
    exprs.iter().flat_map(|e| (0..n).map(move |k| differentiate(e, Var::X(k)))).collect()
}

impl OneForm {
    pub fn new(n: usize, eval: VecFn) -> Self {
        OneForm { n, eval, jac: None }
    }

    /// One-form from component expressions, with `t` frozen at `t`.
    pub fn symbolic(exprs: Vec<Expr>, t: f64) -> Self {
        let n = exprs.len();
        let jac = gradient_table(&exprs, n);
        let exprs = Arc::new(exprs);
        let jac = Arc::new(jac);
        OneForm {
            n,
            eval: Arc::new(move |x| eval_list(&exprs, x, t)),
            jac: Some(Arc::new(move |x| eval_grid(n, n, &jac, x, t))),
        }
    }

    pub fn jacobian(&self, x: &Vector) -> Result<Matrix> {
        match &self.jac {
            Some(j) => j(x),
            None => fd_jacobian_auto(|y| (self.eval)(y), x),
        }
    }
}

impl Constraint {
    pub fn new(n: usize, m: usize, eval: VecFn) -> Self {
        Constraint { n, m, eval, jac: None }
    }

    pub fn symbolic(n: usize, exprs: Vec<Expr>, t: f64) -> Self {
        let m = exprs.len();
        let jac = gradient_table(&exprs, n);
        let exprs = Arc::new(exprs);
        let jac = Arc::new(jac);
        Constraint {
            n,
            m,
            eval: Arc::new(move |x| eval_list(&exprs, x, t)),
            jac: Some(Arc::new(move |x| eval_grid(m, n, &jac, x, t))),
        }
    }

    pub fn jacobian(&self, x: &Vector) -> Result<Matrix> {
        match &self.jac {
            Some(j) => j(x),
            None => fd_jacobian_auto(|y| (self.eval)(y), x),
        }
    }
}

impl GraphDistribution {
    pub fn new(n: usize, d: usize, delta: MatFn) -> Self {
        GraphDistribution { n, d, delta, delta_jac: None }
    }

    /// The distribution with `Delta = 0`, i.e. the fiber coordinates themselves.
    pub fn flat(n: usize, d: usize) -> Self {
        GraphDistribution {
            n,
            d,
            delta: Arc::new(move |_| Ok(Matrix::zeros(n - d, d))),
            delta_jac: Some(Arc::new(move |_| Ok(vec![Matrix::zeros(n - d, d); n]))),
        }
    }

    /// Graph distribution from a row-major `(n-d) x d` table of expressions.
    pub fn symbolic(n: usize, d: usize, entries: Vec<Expr>, t: f64) -> Result<Self> {
        if entries.len() != (n - d) * d {
            return Err(Error::DimensionMismatch(format!(
                "Delta needs {} entries, got {}",
                (n - d) * d,
                entries.len()
            )));
        }
        let partials: Vec<Vec<Expr>> =
            (0..n).map(|k| entries.iter().map(|e| differentiate(e, Var::X(k))).collect()).collect();
        let entries = Arc::new(entries);
        let partials = Arc::new(partials);
        Ok(GraphDistribution {
            n,
            d,
            delta: Arc::new(move |x| eval_grid(n - d, d, &entries, x, t)),
            delta_jac: Some(Arc::new(move |x| {
                partials.iter().map(|p| eval_grid(n - d, d, p, x, t)).collect()
            })),
        })
    }

    /// Convert a basis field (`n x d`, columns spanning the fiber) into graph
    /// form `Delta = B_C B_D^{-1}`. Fails with `NonGraph` at `probe` when the
    /// fiber block is singular there; later evaluations fail the same way.
    pub fn from_basis(chart: &AmbientChart, basis: MatFn, probe: &Vector) -> Result<Self> {
        let fiber = chart.fiber_coords.clone();
        let comp = chart.complement_coords.clone();
        let (n, d) = (chart.n, chart.d);
        let delta: MatFn = Arc::new(move |x| {
            let b = basis(x)?;
            if b.shape() != (n, d) {
                return Err(Error::DimensionMismatch(format!("basis must be {n}x{d}")));
            }
            let bd = b.select_rows(fiber.iter());
            let bc = b.select_rows(comp.iter());
            if d > 0 && condition_number(&bd) > 1e12 {
                return Err(Error::NonGraph);
            }
            let inv = bd.try_inverse().ok_or(Error::NonGraph)?;
            Ok(bc * inv)
        });
        delta(probe)?;
        Ok(GraphDistribution { n, d, delta, delta_jac: None })
    }

    pub fn jacobians(&self, x: &Vector) -> Result<Vec<Matrix>> {
        match &self.delta_jac {
            Some(j) => j(x),
            None => {
                let (rows, cols) = (self.n - self.d, self.d);
                let flat = fd_jacobian_auto(
                    |y| Ok(Vector::from_column_slice((self.delta)(y)?.as_slice())),
                    x,
                )?;
                Ok((0..self.n)
                    .map(|k| Matrix::from_column_slice(rows, cols, flat.column(k).as_slice()))
                    .collect())
            }
        }
    }
}

/// Whether the Hessian report was taken at a verified critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalStatus {
    Verified,
    Unverified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewHessianReport {
    /// Rows indexed by graph basis vectors, columns by kernel basis vectors.
    pub matrix: Matrix,
    pub condition_number: f64,
    pub nondegenerate: bool,
    pub tolerance: f64,
    pub at_critical_point: CriticalStatus,
    pub kernel_basis: Matrix,
}

impl SkewProblem {
    pub fn new(chart: AmbientChart, alpha: OneForm, dist: GraphDistribution, g: Constraint) -> Result<Self> {
        let n = chart.n;
        if alpha.n != n || dist.n != n || g.n != n {
            return Err(Error::DimensionMismatch(format!(
                "chart n={n}, alpha n={}, distribution n={}, constraint n={}",
                alpha.n, dist.n, g.n
            )));
        }
        if dist.d != chart.d || g.m != chart.m {
            return Err(Error::DimensionMismatch(format!(
                "chart (m={}, d={}) against constraint m={} and distribution d={}",
                chart.m, chart.d, g.m, dist.d
            )));
        }
        Ok(SkewProblem { chart, alpha, dist, g })
    }

    fn check_point(&self, x: &Vector) -> Result<()> {
        if x.len() != self.chart.n {
            return Err(Error::DimensionMismatch(format!("point has length {}, expected {}", x.len(), self.chart.n)));
        }
        Ok(())
    }

    fn delta_at(&self, x: &Vector) -> Result<Matrix> {
        let delta = (self.dist.delta)(x)?;
        if delta.shape() != (self.chart.n - self.chart.d, self.chart.d) {
            return Err(Error::DimensionMismatch(format!("Delta has shape {:?}", delta.shape())));
        }
        Ok(delta)
    }

    fn alpha_at(&self, x: &Vector) -> Result<Vector> {
        let a = (self.alpha.eval)(x)?;
        if a.len() != self.chart.n {
            return Err(Error::DimensionMismatch(format!("alpha has length {}", a.len())));
        }
        crate::numerics::ensure_finite(&a, "alpha")?;
        Ok(a)
    }

    /// Columns `e_j + Delta(x) e_j` in ambient coordinates.
    pub fn graph_basis(&self, x: &Vector) -> Result<Matrix> {
        self.check_point(x)?;
        let delta = self.delta_at(x)?;
        let mut b = Matrix::zeros(self.chart.n, self.chart.d);
        for j in 0..self.chart.d {
            b[(self.chart.fiber_coords[j], j)] = 1.0;
            for (i, &c) in self.chart.complement_coords.iter().enumerate() {
                b[(c, j)] = delta[(i, j)];
            }
        }
        Ok(b)
    }

    /// `alpha_D(x)_j = <alpha(x), e_j + Delta(x) e_j>`.
    pub fn alpha_on_distribution(&self, x: &Vector) -> Result<Vector> {
        let b = self.graph_basis(x)?;
        Ok(b.transpose() * self.alpha_at(x)?)
    }

    pub fn constraint(&self, x: &Vector) -> Result<Vector> {
        self.check_point(x)?;
        let y = (self.g.eval)(x)?;
        if y.len() != self.chart.m {
            return Err(Error::DimensionMismatch(format!("g has length {}", y.len())));
        }
        crate::numerics::ensure_finite(&y, "g")?;
        Ok(y)
    }

    /// `F(x) = (alpha_D(x), g(x))`.
    pub fn f_map(&self, x: &Vector) -> Result<(Vector, Vector)> {
        Ok((self.alpha_on_distribution(x)?, self.constraint(x)?))
    }

    /// `F(x)` stacked into one vector of length `d + m`.
    pub fn f_stacked(&self, x: &Vector) -> Result<Vector> {
        let (a, g) = self.f_map(x)?;
        Ok(Vector::from_iterator(a.len() + g.len(), a.iter().chain(g.iter()).cloned()))
    }

    /// `d x n` Jacobian of `alpha_D`.
    ///
    /// With analytic data: `B^T J_alpha + sum_c alpha_{C_c} dDelta[c][.]`.
    pub fn alpha_on_distribution_jacobian(&self, x: &Vector) -> Result<Matrix> {
        self.check_point(x)?;
        match (&self.alpha.jac, &self.dist.delta_jac) {
            (Some(ja), Some(_)) => {
                let b = self.graph_basis(x)?;
                let a = self.alpha_at(x)?;
                let mut out = b.transpose() * ja(x)?;
                let partials = self.dist.jacobians(x)?;
                for (k, dk) in partials.iter().enumerate() {
                    for j in 0..self.chart.d {
                        let mut s = 0.0;
                        for (i, &c) in self.chart.complement_coords.iter().enumerate() {
                            s += a[c] * dk[(i, j)];
                        }
                        out[(j, k)] += s;
                    }
                }
                Ok(out)
            }
            _ => fd_jacobian_auto(|y| self.alpha_on_distribution(y), x),
        }
    }

    pub fn constraint_jacobian(&self, x: &Vector) -> Result<Matrix> {
        self.check_point(x)?;
        let j = self.g.jacobian(x)?;
        if j.shape() != (self.chart.m, self.chart.n) {
            return Err(Error::DimensionMismatch(format!("Dg has shape {:?}", j.shape())));
        }
        Ok(j)
    }

    /// `(d + m) x n` Jacobian of `F`.
    pub fn f_jacobian(&self, x: &Vector) -> Result<Matrix> {
        let top = self.alpha_on_distribution_jacobian(x)?;
        let bottom = self.constraint_jacobian(x)?;
        let mut j = Matrix::zeros(top.nrows() + bottom.nrows(), self.chart.n);
        j.view_mut((0, 0), top.shape()).copy_from(&top);
        j.view_mut((top.nrows(), 0), bottom.shape()).copy_from(&bottom);
        Ok(j)
    }

    fn require_square(&self) -> Result<()> {
        let c = &self.chart;
        if c.d + c.m != c.n {
            return Err(Error::NotSquare { n: c.n, m: c.m, d: c.d, kernel: c.n - c.m });
        }
        Ok(())
    }

    /// Skew Hessian `H[j][k] = <D alpha_D(x_c) u_k, e_j>` with `u_k` the
    /// canonical kernel basis of `Dg(x_c)`.
    pub fn skew_hessian(&self, x_c: &Vector, tol: f64) -> Result<SkewHessianReport> {
        self.require_square()?;
        let jac = self.alpha_on_distribution_jacobian(x_c)?;
        self.report_from(jac, x_c, tol)
    }

    /// The Hessian computed with the alternative extension
    /// `e_j -> B(x) (e_j + C_j (x - x_c))`, where `corrections[j]` is the
    /// `d x n` matrix `C_j`. At a critical point the result agrees with
    /// [`SkewProblem::skew_hessian`].
    pub fn skew_hessian_with_extension(&self, x_c: &Vector, tol: f64, corrections: &[Matrix]) -> Result<SkewHessianReport> {
        self.require_square()?;
        let d = self.chart.d;
        if corrections.len() != d || corrections.iter().any(|c| c.shape() != (d, self.chart.n)) {
            return Err(Error::DimensionMismatch(format!("need {d} correction matrices of shape {d}x{}", self.chart.n)));
        }
        let extended = |x: &Vector| -> Result<Vector> {
            let b = self.graph_basis(x)?;
            let a = self.alpha_at(x)?;
            let shift = x - x_c;
            let mut out = Vector::zeros(d);
            for j in 0..d {
                let mut e = Vector::zeros(d);
                e[j] = 1.0;
                e += &corrections[j] * &shift;
                out[j] = a.dot(&(&b * e));
            }
            Ok(out)
        };
        let jac = fd_jacobian_auto(extended, x_c)?;
        self.report_from(jac, x_c, tol)
    }

    fn report_from(&self, jac: Matrix, x_c: &Vector, tol: f64) -> Result<SkewHessianReport> {
        let split = kernel_split(&self.constraint_jacobian(x_c)?, None)?;
        let matrix = jac * &split.kernel_basis;
        let condition_number = condition_number(&matrix);
        let critical = max_abs(&self.alpha_on_distribution(x_c)?) <= CRITICAL_POINT_TOL;
        Ok(SkewHessianReport {
            condition_number,
            nondegenerate: condition_number < tol,
            tolerance: tol,
            at_critical_point: if critical { CriticalStatus::Verified } else { CriticalStatus::Unverified },
            kernel_basis: split.kernel_basis,
            matrix,
        })
    }
}

/// Build a problem from expression lists with `t` frozen at `t`.
///
/// `delta` is the row-major `(n-d) x d` table.
pub fn symbolic_problem(chart: AmbientChart, alpha: Vec<Expr>, delta: Vec<Expr>, g: Vec<Expr>, t: f64) -> Result<SkewProblem> {
    let n = chart.n;
    if alpha.len() != n {
        return Err(Error::DimensionMismatch(format!("alpha needs {n} components, got {}", alpha.len())));
    }
    if g.len() != chart.m {
        return Err(Error::DimensionMismatch(format!("g needs {} components, got {}", chart.m, g.len())));
    }
    let dist = GraphDistribution::symbolic(n, chart.d, delta, t)?;
    let g = Constraint::symbolic(n, g, t);
    SkewProblem::new(chart, OneForm::symbolic(alpha, t), dist, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprlang::{parse, Dims};

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
        symbolic_problem(
            chart,
            exprs(3, &["x2", "x3", "x2 + x3"]),
            exprs(3, &["x3", "0"]),
            exprs(3, &["x1"]),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn alpha_on_distribution_picks_fiber_component() {
        let chart = AmbientChart::new(2, 1, 1).unwrap();
        let p = symbolic_problem(chart, exprs(2, &["0", "x2"]), exprs(2, &["0"]), exprs(2, &["x1"]), 0.0).unwrap();
        assert_eq!(p.alpha_on_distribution(&v(&[1.0, 3.0])).unwrap(), v(&[3.0]));
    }

    #[test]
    fn alpha_on_distribution_skew3d() {
        // oracle: v1 = (x3, 1, 0), v2 = (0, 0, 1) paired with (x2, x3, x2 + x3)
        let x = v(&[0.0, 1.0, 2.0]);
        let (x2, x3) = (1.0, 2.0);
        let oracle = v(&[x2 * x3 + x3, x2 + x3]);
        assert_eq!(skew3d().alpha_on_distribution(&x).unwrap(), oracle);
        assert_eq!(oracle, v(&[4.0, 3.0]));
    }

    #[test]
    fn zero_form_gives_zero() {
        let chart = AmbientChart::new(3, 1, 2).unwrap();
        let p = symbolic_problem(chart, exprs(3, &["0", "0", "0"]), exprs(3, &["0", "0"]), exprs(3, &["x1"]), 0.0).unwrap();
        assert_eq!(p.alpha_on_distribution(&v(&[0.3, -1.0, 2.0])).unwrap(), v(&[0.0, 0.0]));
    }

    #[test]
    fn f_map_trivial() {
        let p = trivial();
        assert_eq!(p.f_map(&v(&[0.7, 0.0])).unwrap(), (v(&[0.0]), v(&[0.7])));
        assert_eq!(p.f_map(&v(&[0.7, 0.2])).unwrap(), (v(&[0.2]), v(&[0.7])));
    }

    #[test]
    fn f_map_skew3d_on_branch() {
        for y in [-1.0, 0.25, 0.9] {
            assert_eq!(skew3d().f_map(&v(&[y, 0.0, 0.0])).unwrap(), (v(&[0.0, 0.0]), v(&[y])));
        }
    }

    #[test]
    fn hessian_trivial_is_identity() {
        let r = trivial().skew_hessian(&v(&[0.7, 0.0]), DEFAULT_CONDITION_CAP).unwrap();
        assert!((r.matrix[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(r.nondegenerate);
        assert_eq!(r.at_critical_point, CriticalStatus::Verified);
    }

    #[test]
    fn hessian_skew3d() {
        let r = skew3d().skew_hessian(&v(&[0.4, 0.0, 0.0]), DEFAULT_CONDITION_CAP).unwrap();
        let expect = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
        assert!((&r.matrix - expect).amax() < 1e-14);
        // singular values of [[0,1],[1,1]] are (sqrt5 +- 1)/2
        let s5 = 5f64.sqrt();
        assert!((r.condition_number - (s5 + 1.0) / (s5 - 1.0)).abs() < 1e-12);
        assert!(r.nondegenerate);
    }

    #[test]
    fn hessian_of_constant_form_is_degenerate() {
        let chart = AmbientChart::new(2, 1, 1).unwrap();
        let p = symbolic_problem(chart, exprs(2, &["1", "0"]), exprs(2, &["0"]), exprs(2, &["x1"]), 0.0).unwrap();
        let r = p.skew_hessian(&v(&[0.5, 0.0]), DEFAULT_CONDITION_CAP).unwrap();
        assert_eq!(r.matrix[(0, 0)], 0.0);
        assert!(!r.nondegenerate);
    }

    #[test]
    fn hessian_requires_square_counts() {
        let chart = AmbientChart::new(3, 1, 1).unwrap();
        let p = symbolic_problem(chart, exprs(3, &["x1", "x2", "x3"]), exprs(3, &["0", "0"]), exprs(3, &["x1"]), 0.0).unwrap();
        assert_eq!(p.skew_hessian(&v(&[0.0, 0.0, 0.0]), 1e8).unwrap_err().kind(), "NotSquare");
    }

    #[test]
    fn hessian_rank_deficient_constraint() {
        let chart = AmbientChart::new(2, 1, 1).unwrap();
        let p = symbolic_problem(chart, exprs(2, &["x1", "x2"]), exprs(2, &["0"]), exprs(2, &["x1^2"]), 0.0).unwrap();
        assert_eq!(p.skew_hessian(&v(&[0.0, 0.0]), 1e8).unwrap_err().kind(), "RankDeficient");
    }

    #[test]
    fn hessian_away_from_critical_point_is_flagged() {
        let r = trivial().skew_hessian(&v(&[0.7, 0.2]), DEFAULT_CONDITION_CAP).unwrap();
        assert_eq!(r.at_critical_point, CriticalStatus::Unverified);
    }

    #[test]
    fn analytic_and_fd_jacobians_agree() {
        let p = skew3d();
        let mut q = p.clone();
        q.alpha.jac = None;
        q.dist.delta_jac = None;
        let x = v(&[0.3, -0.2, 0.7]);
        let a = p.alpha_on_distribution_jacobian(&x).unwrap();
        let b = q.alpha_on_distribution_jacobian(&x).unwrap();
        assert!((a - b).amax() < 1e-8);
    }

    #[test]
    fn extension_independence_at_critical_point() {
        let p = skew3d();
        let x_c = v(&[0.4, 0.0, 0.0]);
        let corrections = vec![
            Matrix::from_row_slice(2, 3, &[0.3, -1.0, 2.0, 0.5, 0.1, -0.7]),
            Matrix::from_row_slice(2, 3, &[-0.2, 0.4, 1.5, 1.0, 0.0, 0.3]),
        ];
        let h0 = p.skew_hessian(&x_c, 1e8).unwrap();
        let h1 = p.skew_hessian_with_extension(&x_c, 1e8, &corrections).unwrap();
        assert!((h0.matrix - h1.matrix).amax() < 1e-6);
    }

    #[test]
    fn jacobian_of_f_is_invertible_when_nondegenerate() {
        let p = skew3d();
        let x_c = v(&[0.4, 0.0, 0.0]);
        assert!(p.skew_hessian(&x_c, 1e8).unwrap().nondegenerate);
        assert!(condition_number(&p.f_jacobian(&x_c).unwrap()) < 1e8);
    }

    #[test]
    fn from_basis_recovers_delta() {
        let chart = AmbientChart::new(3, 1, 2).unwrap();
        let basis: MatFn = Arc::new(|x: &Vector| {
            // columns 2*(x3, 1, 0) and (1, 0, 1) + (x3, 1, 0)
            Ok(Matrix::from_row_slice(3, 2, &[2.0 * x[2], 1.0 + x[2], 2.0, 1.0, 0.0, 1.0]))
        });
        let x = v(&[0.0, 1.0, 2.0]);
        let dist = GraphDistribution::from_basis(&chart, basis, &x).unwrap();
        let delta = (dist.delta)(&x).unwrap();
        // fiber block [[2,1],[0,1]], complement row [4, 3]; Delta = [4,3] * inv
        let expect = Matrix::from_row_slice(1, 2, &[2.0, 1.0]);
        assert!((delta - expect).amax() < 1e-14);
    }

    #[test]
    fn from_basis_rejects_non_graph() {
        let chart = AmbientChart::new(2, 1, 1).unwrap();
        let basis: MatFn = Arc::new(|_: &Vector| Ok(Matrix::from_row_slice(2, 1, &[1.0, 0.0])));
        let err = GraphDistribution::from_basis(&chart, basis, &v(&[0.0, 0.0])).unwrap_err();
        assert_eq!(err, Error::NonGraph);
    }

    #[test]
    fn custom_fiber_coordinates() {
        let chart = AmbientChart::with_fiber(2, 1, vec![0]).unwrap();
        assert_eq!(chart.complement_coords, vec![1]);
        let p = symbolic_problem(chart, exprs(2, &["x1", "x2"]), exprs(2, &["0"]), exprs(2, &["x2"]), 0.0).unwrap();
        assert_eq!(p.alpha_on_distribution(&v(&[0.25, 3.0])).unwrap(), v(&[0.25]));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = trivial();
        assert_eq!(p.f_map(&v(&[1.0])).unwrap_err().kind(), "DimensionMismatch");
    }
}
