//! Graph families, the maps they induce, and residuals of distributions.

use std::sync::Arc;

use super::{contact_estimate, AdaptedFamily, ContactEstimate};
use crate::error::{Error, Result};
use crate::exprlang::{parse, Dims, Expr};
use crate::numerics::{condition_number, max_abs, newton_root, Matrix, Vector};

/// Agreement of the two components of `gamma(x, 0)` required for a graph
/// over the diagonal.
pub const DIAGONAL_TOL: f64 = 1e-10;

fn split(v: &Vector, k: usize) -> (Vector, Vector) {
    (v.rows(0, k).into_owned(), v.rows(k, k).into_owned())
}

/// The map `f_gamma(m, h) = pi_2 gamma(psi^{-1}(m, h))` with
/// `psi(x, h) = (pi_1 gamma(x, h), h)`.
///
/// `gamma` maps `(x, h)` with `x` in `R^k` to `R^k x R^k`. At `h = 0` both
/// halves must agree and `pi_1 gamma(., 0)` must be invertible; this is
/// checked at `probe`.
pub fn graph_to_map(gamma: &AdaptedFamily, probe: &[Vector]) -> Result<AdaptedFamily> {
    let k = gamma.in_dim;
    if gamma.out_dim != 2 * k {
        return Err(Error::DimensionMismatch(format!(
            "graph family needs {} outputs, has {}",
            2 * k,
            gamma.out_dim
        )));
    }
    for x in probe {
        let (a, b) = split(&gamma.at(x, 0.0)?, k);
        let gap = max_abs(&(&a - &b));
        if gap > DIAGONAL_TOL {
            return Err(Error::NotDiagonal(format!("components differ by {gap:e} at h=0")));
        }
        let jac = gamma.x_jacobian(x, 0.0)?.rows(0, k).into_owned();
        let cond = condition_number(&jac);
        if !(cond < 1e12) {
            return Err(Error::NotDiagonal(format!("first component is singular at h=0 (condition {cond:e})")));
        }
    }
    let g = gamma.clone();
    Ok(AdaptedFamily::new(
        k,
        k,
        Arc::new(move |m: &Vector, h: f64| {
            let fun = |x: &Vector| Ok(g.at(x, h)?.rows(0, k).into_owned() - m);
            let jac = |x: &Vector| Ok(g.x_jacobian(x, h)?.rows(0, k).into_owned());
            let x = newton_root(fun, Some(&jac), m, 1e-12, 50)
                .map_err(|e| Error::PsiInversionFailed(format!("at h={h}: {e}")))?;
            Ok(g.at(&x, h)?.rows(k, k).into_owned())
        }),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BumpReport {
    /// Residual of the first components of `gamma2` against `gamma1`.
    pub first_residual: Vector,
    /// Residual of the second components.
    pub second_residual: Vector,
    pub symmetric: bool,
    /// `m = pi_1 gamma1(x, 0)`.
    pub m: Vector,
    /// Contact estimate of `(f_gamma1, f_gamma2)` at `m`.
    pub estimate: ContactEstimate,
    /// `second_residual - first_residual`.
    pub predicted_residual: Vector,
    pub passed: bool,
}

/// Contact of the maps induced by two graph families with `gamma2 = gamma1 +
/// O(h^r)`. Symmetric residuals must raise the order to `r + 1`; otherwise
/// the order stays `r` and the residual is the difference of the two
/// component residuals.
pub fn graph_symmetry_bump_check(
    gamma1: &AdaptedFamily,
    gamma2: &AdaptedFamily,
    x: &Vector,
    r: usize,
    h_seq: &[f64],
) -> Result<BumpReport> {
    let k = gamma1.in_dim;
    let est_gamma = contact_estimate(gamma1, gamma2, x, h_seq, Some(r))?;
    let (first_residual, second_residual) = split(&est_gamma.residual, k);
    let predicted_residual = &second_residual - &first_residual;
    let size = max_abs(&first_residual).max(max_abs(&second_residual)).max(1.0);
    let symmetric = max_abs(&predicted_residual) <= 1e-8 * size;

    let probe = [x.clone()];
    let f1 = graph_to_map(gamma1, &probe)?;
    let f2 = graph_to_map(gamma2, &probe)?;
    let m = gamma1.at(x, 0.0)?.rows(0, k).into_owned();
    let estimate = contact_estimate(&f1, &f2, &m, h_seq, if symmetric { None } else { Some(r) })?;
    let passed = if symmetric {
        estimate.slope_at_least(r as f64 + 0.9)
    } else {
        estimate.slope_near(r as f64, 0.1) && max_abs(&(&estimate.residual - &predicted_residual)) <= 1e-6
    };
    Ok(BumpReport { first_residual, second_residual, symmetric, m, estimate, predicted_residual, passed })
}

/// A t-dependent graph distribution `Delta(x, t)`, stored row-major.
#[derive(Debug, Clone)]
pub struct DistributionFamily {
    pub n: usize,
    pub d: usize,
    pub entries: AdaptedFamily,
}

impl DistributionFamily {
    pub fn new(n: usize, d: usize, entries: AdaptedFamily) -> Result<Self> {
        if d > n || entries.in_dim != n || entries.out_dim != (n - d) * d {
            return Err(Error::DimensionMismatch(format!(
                "distribution family needs {} entries over {n} variables",
                (n.saturating_sub(d)) * d
            )));
        }
        Ok(DistributionFamily { n, d, entries })
    }

    pub fn symbolic(n: usize, d: usize, entries: Vec<Expr>) -> Result<Self> {
        Self::new(n, d, AdaptedFamily::symbolic(n, entries))
    }

    /// Rows of entry sources, each of length `d`.
    pub fn parse(n: usize, d: usize, rows: &[&[&str]]) -> Result<Self> {
        let dims = Dims::new(n);
        let mut exprs = Vec::new();
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch(format!("Delta rows need {d} entries")));
            }
            for s in row.iter() {
                exprs.push(parse(s, dims)?);
            }
        }
        Self::symbolic(n, d, exprs)
    }

    pub fn at(&self, x: &Vector, t: f64) -> Result<Matrix> {
        let flat = self.entries.at(x, t)?;
        Ok(Matrix::from_row_slice(self.n - self.d, self.d, flat.as_slice()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionResidual {
    /// `(n-d) x d`, a map from the fiber coordinates to their complement.
    pub matrix: Matrix,
    pub estimate: ContactEstimate,
}

/// `res^r(D2, D1)` at `x` as the matrix residual of the graph maps.
pub fn distribution_residual(
    d1: &DistributionFamily,
    d2: &DistributionFamily,
    x: &Vector,
    r: usize,
    h_seq: &[f64],
) -> Result<DistributionResidual> {
    if d1.n != d2.n || d1.d != d2.d {
        return Err(Error::DimensionMismatch("distribution families differ in shape".into()));
    }
    let estimate = contact_estimate(&d1.entries, &d2.entries, x, h_seq, Some(r))?;
    let matrix = Matrix::from_row_slice(d1.n - d1.d, d1.d, estimate.residual.as_slice());
    Ok(DistributionResidual { matrix, estimate })
}
