//! Hat-division, composition, inverse and change-of-chart laws for residuals.

use std::sync::Arc;

use super::{contact_estimate_with, factorial, AdaptedFamily, ContactEstimate, EstimateOptions};
use crate::error::{Error, Result};
use crate::exprlang::{differentiate, parse, Dims, Env, Expr, Var};
use crate::numerics::{default_fd_step, max_abs, newton_root, richardson_limit, solve_linear, Matrix, Vector};

/// Values at `t = 0` above this count as off the zero section.
pub const ZERO_SECTION_TOL: f64 = 1e-12;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `f / t`, completed at `t = 0` by `df/dt`.
#[derive(Debug, Clone)]
pub struct HatFamily {
    pub family: AdaptedFamily,
}

impl HatFamily {
    /// `|f_hat(x, h) - f_hat(x, 0)|_inf` for each `h`.
    pub fn continuity_defects(&self, x: &Vector, h_seq: &[f64]) -> Result<Vec<(f64, f64)>> {
        let at0 = self.family.at(x, 0.0)?;
        h_seq.iter().map(|&h| Ok((h, max_abs(&(self.family.at(x, h)? - &at0))))).collect()
    }
}

/// `df/dt (x, 0)` by extrapolating one-sided difference quotients.
fn extrapolated_slope(f: &AdaptedFamily, x: &Vector) -> Result<Vector> {
    let samples = (0..6)
        .map(|k| {
            let h = 1e-2 * 0.5f64.powi(k);
            Ok((h, f.at(x, h)? / h))
        })
        .collect::<Result<Vec<_>>>()?;
    richardson_limit(&samples, 1.0)
}

/// Divide a family vanishing at `t = 0` by `t`.
///
/// `probe` lists the points at which vanishing is checked.
pub fn hat_divide(f: &AdaptedFamily, probe: &[Vector]) -> Result<HatFamily> {
    for x in probe {
        let value = max_abs(&f.at(x, 0.0)?);
        if value > ZERO_SECTION_TOL {
            return Err(Error::NotInZeroSection { value });
        }
    }
    let g = f.clone();
    let eval = Arc::new(move |x: &Vector, t: f64| -> Result<Vector> {
        if t != 0.0 {
            return Ok(g.at(x, t)? / t);
        }
        match g.t_derivative(x, 0.0, 1) {
            Some(d) => d,
            None => extrapolated_slope(&g, x),
        }
    });
    let mut family = AdaptedFamily::new(f.in_dim, f.out_dim, eval);
    if f.is_analytic() {
        let g = f.clone();
        family.t_deriv = Some(Arc::new(move |x: &Vector, t: f64, k: usize| -> Result<Vector> {
            if t == 0.0 {
                // f = t f_hat gives d^(k+1) f = (k+1) d^k f_hat at t = 0
                return Ok(g.t_derivative(x, 0.0, k + 1).expect("analytic")? / (k + 1) as f64);
            }
            // Leibniz rule for f * (1/t)
            let mut acc = Vector::zeros(g.out_dim);
            for j in 0..=k {
                let inv = (if j % 2 == 0 { 1.0 } else { -1.0 }) * factorial(j) / t.powi(j as i32 + 1);
                acc += g.t_derivative(x, t, k - j).expect("analytic")? * (binomial(k, j) * inv);
            }
            Ok(acc)
        }));
    }
    Ok(HatFamily { family })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HatDropReport {
    /// Estimate of `(f1, f2)` at order `r`.
    pub original: ContactEstimate,
    /// Estimate of the hat families at order `r - 1`.
    pub hatted: ContactEstimate,
    /// `|res^(r-1)(hat f2, hat f1) - res^r(f2, f1)|_inf`.
    pub discrepancy: f64,
}

/// Compare `res^r(f2, f1)` with `res^(r-1)` of the hat-divided families.
pub fn hat_contact_drop_check(
    f1: &AdaptedFamily,
    f2: &AdaptedFamily,
    x: &Vector,
    r: usize,
    h_seq: &[f64],
) -> Result<HatDropReport> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("hat drop needs r >= 2, got {r}")));
    }
    let opts = EstimateOptions::default();
    let original = contact_estimate_with(f1, f2, x, h_seq, Some(r), &opts)?;
    let probe = [x.clone()];
    let h1 = hat_divide(f1, &probe)?;
    let h2 = hat_divide(f2, &probe)?;
    let hatted = contact_estimate_with(&h1.family, &h2.family, x, h_seq, Some(r - 1), &opts)?;
    let discrepancy = max_abs(&(&hatted.residual - &original.residual));
    Ok(HatDropReport { original, hatted, discrepancy })
}

/// `d(h_N o f)/dt` at `(x, 0)`, with `h_N o f` the last output component.
pub fn fdot(f: &AdaptedFamily, x: &Vector) -> Result<f64> {
    if !f.h_last || f.out_dim == 0 {
        return Err(Error::MissingTargetH);
    }
    let last = f.out_dim - 1;
    let value = f.at(x, 0.0)?[last];
    if value.abs() > ZERO_SECTION_TOL {
        return Err(Error::NotHCompatible { value: value.abs() });
    }
    match f.t_derivative(x, 0.0, 1) {
        Some(d) => Ok(d?[last]),
        None => {
            let s = default_fd_step(0.0);
            Ok((f.at(x, s)?[last] - f.at(x, -s)?[last]) / (2.0 * s))
        }
    }
}

/// `g o f` where `g` reads `f`'s output as `(y, s)` with `s` the last
/// component. Symbolic when both inputs are.
pub fn compose(g: &AdaptedFamily, f: &AdaptedFamily) -> Result<AdaptedFamily> {
    if !f.h_last {
        return Err(Error::MissingTargetH);
    }
    if g.in_dim + 1 != f.out_dim {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: inner family has {} outputs, outer expects {} + 1",
            f.out_dim, g.in_dim
        )));
    }
    if let (Some(ge), Some(fe)) = (g.exprs(), f.exprs()) {
        let k = g.in_dim;
        let sub = |v: Var| match v {
            Var::X(i) => Some(fe[i].clone()),
            Var::T => Some(fe[k].clone()),
            Var::P(_) => None,
        };
        let exprs = ge.iter().map(|e| e.map_vars(&sub)).collect();
        let mut out = AdaptedFamily::symbolic(f.in_dim, exprs);
        out.h_last = g.h_last;
        return Ok(out);
    }
    let (gg, ff) = (g.clone(), f.clone());
    let k = g.in_dim;
    let mut out = AdaptedFamily::new(
        f.in_dim,
        g.out_dim,
        Arc::new(move |x, t| {
            let v = ff.at(x, t)?;
            gg.at(&v.rows(0, k).into_owned(), v[k])
        }),
    );
    out.h_last = g.h_last;
    Ok(out)
}

/// Which index supplies `fdot` and `Dg` in the composition formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComposeVariant {
    /// `fdot_2^r res(g2, g1) + Dg1 res(f2, f1)`.
    #[default]
    Literal,
    /// `fdot_1^r res(g2, g1) + Dg2 res(f2, f1)`, valid for `r >= 2`.
    Swapped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposeReport {
    /// Base point `f(x, 0)` in the codomain of `f`.
    pub n: Vector,
    pub predicted: Vector,
    pub measured: ContactEstimate,
    /// `|predicted - measured|_inf / max(1, |measured|_inf)`.
    pub relative_discrepancy: f64,
}

/// Full tangent map of `g` at `(y, s)`: columns for `y` then `s`.
fn full_jacobian(g: &AdaptedFamily, y: &Vector, s: f64) -> Result<Matrix> {
    let jx = g.x_jacobian(y, s)?;
    let js = match g.t_derivative(y, s, 1) {
        Some(d) => d?,
        None => {
            let st = default_fd_step(s);
            (g.at(y, s + st)? - g.at(y, s - st)?) / (2.0 * st)
        }
    };
    let mut j = Matrix::zeros(g.out_dim, g.in_dim + 1);
    j.view_mut((0, 0), jx.shape()).copy_from(&jx);
    j.set_column(g.in_dim, &js);
    Ok(j)
}

/// Predicted against measured `res^r(g2 o f2, g1 o f1)(x)`.
#[allow(clippy::too_many_arguments)]
pub fn compose_residual_check(
    f1: &AdaptedFamily,
    f2: &AdaptedFamily,
    g1: &AdaptedFamily,
    g2: &AdaptedFamily,
    x: &Vector,
    r: usize,
    h_seq: &[f64],
    variant: ComposeVariant,
) -> Result<ComposeReport> {
    if r == 0 {
        return Err(Error::InvalidArgument("order must be positive".into()));
    }
    let opts = EstimateOptions::default();
    let n = f1.at(x, 0.0)?;
    let k = g1.in_dim;
    let y = n.rows(0, k).into_owned();
    let s = n[k];

    let res_f = contact_estimate_with(f1, f2, x, h_seq, Some(r), &opts)?.residual;
    let res_g = contact_estimate_with(g1, g2, &y, h_seq, Some(r), &opts)?.residual;
    let (fdot_used, g_used) = match variant {
        ComposeVariant::Literal => (fdot(f2, x)?, g1),
        ComposeVariant::Swapped => (fdot(f1, x)?, g2),
    };
    let predicted = res_g * fdot_used.powi(r as i32) + full_jacobian(g_used, &y, s)? * res_f;

    let c1 = compose(g1, f1)?;
    let c2 = compose(g2, f2)?;
    let measured = contact_estimate_with(&c1, &c2, x, h_seq, Some(r), &opts)?;
    let relative_discrepancy = max_abs(&(&predicted - &measured.residual)) / max_abs(&measured.residual).max(1.0);
    Ok(ComposeReport { n, predicted, measured, relative_discrepancy })
}

/// Fiberwise inverse `(y, t) -> x` with `f(x, t) = y`, by Newton from `start`.
pub fn inverse_family(f: &AdaptedFamily, start: &Vector) -> Result<AdaptedFamily> {
    if f.in_dim != f.out_dim {
        return Err(Error::DimensionMismatch("only square families can be inverted".into()));
    }
    let ff = f.clone();
    let start = start.clone();
    Ok(AdaptedFamily::new(
        f.in_dim,
        f.in_dim,
        Arc::new(move |y: &Vector, t: f64| {
            let fun = |x: &Vector| Ok(ff.at(x, t)? - y);
            let jac = |x: &Vector| ff.x_jacobian(x, t);
            newton_root(fun, Some(&jac), &start, 1e-14 * max_abs(y).max(1.0), 60)
                .map_err(|e| Error::InversionFailed(format!("at t={t}: {e}")))
        }),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseReport {
    /// `n = f1(x, 0)`.
    pub n: Vector,
    pub predicted: Vector,
    pub measured: ContactEstimate,
    pub discrepancy: f64,
}

/// Residual of the inverse families at `n = f1(x, 0)`.
///
/// The families are maps `x -> f(x, t)` for each `t`; the reference
/// function is carried along unchanged, so the inverse has `gdot = 1`.
pub fn inverse_residual_check(
    f1: &AdaptedFamily,
    f2: &AdaptedFamily,
    x: &Vector,
    r: usize,
    h_seq: &[f64],
) -> Result<InverseReport> {
    let opts = EstimateOptions::default();
    let res = contact_estimate_with(f1, f2, x, h_seq, Some(r), &opts)?.residual;
    let jac = f1.x_jacobian(x, 0.0)?;
    let predicted = -solve_linear(&jac, &res).map_err(|e| Error::InversionFailed(format!("D_x f1 at t=0: {e}")))?;
    let n = f1.at(x, 0.0)?;
    let i1 = inverse_family(f1, x)?;
    let i2 = inverse_family(f2, x)?;
    let measured = contact_estimate_with(&i1, &i2, &n, h_seq, Some(r), &opts)?;
    let discrepancy = max_abs(&(&predicted - &measured.residual));
    Ok(InverseReport { n, predicted, measured, discrepancy })
}

/// A change of coordinates `phi` on the codomain of a family.
#[derive(Debug, Clone)]
pub struct CodomainMap {
    pub exprs: Vec<Expr>,
}

impl CodomainMap {
    pub fn parse(dim: usize, srcs: &[&str]) -> Result<Self> {
        let dims = Dims { n: dim, params: 0, allow_t: false };
        let exprs = srcs.iter().map(|s| parse(s, dims)).collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(CodomainMap { exprs })
    }

    pub fn jacobian(&self, y: &Vector) -> Result<Matrix> {
        let env = Env { x: y.as_slice(), t: None, params: &[] };
        let dim = y.len();
        let mut j = Matrix::zeros(self.exprs.len(), dim);
        for (i, e) in self.exprs.iter().enumerate() {
            for k in 0..dim {
                j[(i, k)] = differentiate(e, Var::X(k)).eval(&env)?;
            }
        }
        Ok(j)
    }

    /// `phi o f`, symbolic when `f` is.
    pub fn apply(&self, f: &AdaptedFamily) -> Result<AdaptedFamily> {
        if let Some(fe) = f.exprs() {
            let sub = |v: Var| match v {
                Var::X(i) => fe.get(i).cloned(),
                _ => None,
            };
            let exprs = self.exprs.iter().map(|e| e.map_vars(&sub)).collect();
            return Ok(AdaptedFamily::symbolic(f.in_dim, exprs));
        }
        let exprs = Arc::new(self.exprs.clone());
        let ff = f.clone();
        Ok(AdaptedFamily::new(
            f.in_dim,
            self.exprs.len(),
            Arc::new(move |x, t| {
                let y = ff.at(x, t)?;
                let env = Env { x: y.as_slice(), t: None, params: &[] };
                let vals = exprs.iter().map(|e| e.eval(&env)).collect::<std::result::Result<Vec<_>, _>>()?;
                Ok(Vector::from_vec(vals))
            }),
        ))
    }
}

/// `(Dphi(f(x,0)) res^r(f2, f1), res^r(phi o f2, phi o f1))`.
pub fn residual_chart_transform_check(
    f1: &AdaptedFamily,
    f2: &AdaptedFamily,
    x: &Vector,
    r: usize,
    phi: &CodomainMap,
    h_seq: &[f64],
    opts: &EstimateOptions,
) -> Result<(Vector, Vector)> {
    let res = contact_estimate_with(f1, f2, x, h_seq, Some(r), opts)?.residual;
    let pushed = phi.jacobian(&f1.at(x, 0.0)?)? * res;
    let p1 = phi.apply(f1)?;
    let p2 = phi.apply(f2)?;
    let direct = contact_estimate_with(&p1, &p2, x, h_seq, Some(r), opts)?.residual;
    Ok((pushed, direct))
}

#[cfg(test)]
mod tests {
    use super::super::default_h_sequence;
    use super::*;

    fn fam(n: usize, srcs: &[&str]) -> AdaptedFamily {
        AdaptedFamily::parse(n, srcs).unwrap()
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn hat_of_linear_family_is_constant() {
        let h = hat_divide(&fam(1, &["t*x1"]), &[v(&[0.3])]).unwrap();
        for t in [0.0, 0.1, 1e-5] {
            assert!((h.family.at(&v(&[0.3]), t).unwrap()[0] - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn hat_of_sine_is_sinc() {
        let h = hat_divide(&fam(1, &["sin(t)"]), &[v(&[0.0])]).unwrap();
        assert_eq!(h.family.at(&v(&[0.0]), 0.0).unwrap()[0], 1.0);
        assert_eq!(h.family.at(&v(&[0.0]), 0.2).unwrap()[0], 0.2f64.sin() / 0.2);
        let numeric = hat_divide(&fam(1, &["sin(t)"]).numeric_only(), &[v(&[0.0])]).unwrap();
        assert!((numeric.family.at(&v(&[0.0]), 0.0).unwrap()[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn hat_of_square_is_identity_in_t() {
        let h = hat_divide(&fam(1, &["t^2"]), &[v(&[0.0])]).unwrap();
        assert_eq!(h.family.at(&v(&[0.0]), 0.0).unwrap()[0], 0.0);
        assert_eq!(h.family.at(&v(&[0.0]), 0.25).unwrap()[0], 0.25);
        assert_eq!(h.family.t_derivative(&v(&[0.0]), 0.0, 1).unwrap().unwrap()[0], 1.0);
        assert!((h.family.t_derivative(&v(&[0.0]), 0.3, 1).unwrap().unwrap()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hat_rejects_nonzero_base() {
        let err = hat_divide(&fam(1, &["1 + t"]), &[v(&[0.0])]).unwrap_err();
        assert_eq!(err.kind(), "NotInZeroSection");
    }

    #[test]
    fn hat_drop_linear_plus_cubic() {
        let rep = hat_contact_drop_check(&fam(1, &["t*x1"]), &fam(1, &["t*x1 + t^3"]), &v(&[0.4]), 3, &default_h_sequence())
            .unwrap();
        assert_eq!(rep.original.residual, v(&[1.0]));
        assert_eq!(rep.hatted.residual, v(&[1.0]));
    }

    #[test]
    fn hat_drop_quartic() {
        let rep = hat_contact_drop_check(
            &fam(1, &["t*sin(x1)"]),
            &fam(1, &["t*sin(x1) + t^4*x1^2"]),
            &v(&[1.0]),
            4,
            &default_h_sequence(),
        )
        .unwrap();
        assert!((rep.original.residual[0] - 1.0).abs() < 1e-14);
        assert!(rep.discrepancy < 1e-12);
        assert!(rep.hatted.slope_near(3.0, 0.05));
    }

    #[test]
    fn hat_drop_identical() {
        let f = fam(1, &["t*x1"]);
        let rep = hat_contact_drop_check(&f, &f, &v(&[0.4]), 2, &default_h_sequence()).unwrap();
        assert!(rep.original.is_machine_limited() && rep.hatted.is_machine_limited());
    }

    #[test]
    fn fdot_examples() {
        assert_eq!(fdot(&fam(1, &["x1", "t"]).with_h_last(), &v(&[0.2])).unwrap(), 1.0);
        assert_eq!(fdot(&fam(1, &["x1", "2*t + t^2"]).with_h_last(), &v(&[0.2])).unwrap(), 2.0);
        assert_eq!(fdot(&fam(1, &["x1", "t*(1 + x1^2)"]).with_h_last(), &v(&[1.0])).unwrap(), 2.0);
        let numeric = fam(1, &["x1", "t*(1 + x1^2)"]).numeric_only().with_h_last();
        assert!((fdot(&numeric, &v(&[1.0])).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn fdot_errors() {
        assert_eq!(fdot(&fam(1, &["x1", "t"]), &v(&[0.0])).unwrap_err().kind(), "MissingTargetH");
        let err = fdot(&fam(1, &["x1", "1 + t"]).with_h_last(), &v(&[0.0])).unwrap_err();
        assert_eq!(err.kind(), "NotHCompatible");
    }

    #[test]
    fn composition_worked_example() {
        let f1 = fam(1, &["x1 + 0.5*t^2", "t"]).with_h_last();
        let f2 = fam(1, &["x1 + 1.5*t^2", "t"]).with_h_last();
        let g1 = fam(1, &["x1^2 + 2*t^2"]);
        let g2 = fam(1, &["x1^2 + 3*t^2"]);
        let h = default_h_sequence();
        let rep = compose_residual_check(&f1, &f2, &g1, &g2, &v(&[0.5]), 2, &h, ComposeVariant::Literal).unwrap();
        // oracle: g2(f2) - g1(f1) = t^2 (1 + 2x) + O(t^4)
        assert!((rep.predicted[0] - 2.0).abs() < 1e-14);
        assert!((rep.measured.residual[0] - 2.0).abs() < 1e-14);
        let swapped = compose_residual_check(&f1, &f2, &g1, &g2, &v(&[0.5]), 2, &h, ComposeVariant::Swapped).unwrap();
        assert!((swapped.predicted[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn composition_with_equal_outer_maps() {
        let f1 = fam(1, &["x1", "t"]).with_h_last();
        let f2 = fam(1, &["x1 + t^2", "t"]).with_h_last();
        let g = fam(1, &["sin(x1) + t"]);
        let rep = compose_residual_check(&f1, &f2, &g, &g, &v(&[0.3]), 2, &default_h_sequence(), ComposeVariant::Literal)
            .unwrap();
        assert!((rep.predicted[0] - 0.3f64.cos()).abs() < 1e-14);
        assert!(rep.relative_discrepancy < 1e-12);
    }

    #[test]
    fn composition_with_equal_inner_maps() {
        let f = fam(1, &["x1", "t"]).with_h_last();
        let g1 = fam(1, &["x1"]);
        let g2 = fam(1, &["x1 + t^2*x1"]);
        let rep = compose_residual_check(&f, &f, &g1, &g2, &v(&[0.7]), 2, &default_h_sequence(), ComposeVariant::Literal)
            .unwrap();
        assert!((rep.predicted[0] - 0.7).abs() < 1e-14);
    }

    #[test]
    fn numeric_composition_matches_symbolic() {
        let f = fam(1, &["x1 + t^2", "t"]).with_h_last();
        let g = fam(1, &["x1^2 + t"]);
        let sym = compose(&g, &f).unwrap();
        let num = compose(&g.clone().numeric_only(), &f.clone().numeric_only()).unwrap();
        let x = v(&[0.4]);
        assert!((sym.at(&x, 0.3).unwrap() - num.at(&x, 0.3).unwrap()).amax() < 1e-15);
    }

    #[test]
    fn inverse_of_shift() {
        let rep = inverse_residual_check(&fam(1, &["x1 + t"]), &fam(1, &["x1 + t + t^2"]), &v(&[0.3]), 2, &default_h_sequence())
            .unwrap();
        // oracle: x = y - t - t^2 exactly
        assert_eq!(rep.predicted, v(&[-1.0]));
        assert!((rep.measured.residual[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn inverse_of_identical_families() {
        let f = fam(1, &["x1 + t + x1^3"]);
        let rep = inverse_residual_check(&f, &f, &v(&[0.3]), 2, &default_h_sequence()).unwrap();
        assert_eq!(rep.predicted, v(&[0.0]));
        assert!(rep.measured.residual[0].abs() < 1e-6);
    }

    #[test]
    fn inverse_of_scaling() {
        let rep = inverse_residual_check(&fam(1, &["2*x1"]), &fam(1, &["2*x1 + t^3"]), &v(&[0.3]), 3, &default_h_sequence())
            .unwrap();
        assert_eq!(rep.predicted, v(&[-0.5]));
        assert!((rep.measured.residual[0] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn inverse_failure_is_reported() {
        let inv = inverse_family(&fam(1, &["x1^2 + 1"]), &v(&[0.5])).unwrap();
        assert_eq!(inv.at(&v(&[0.0]), 0.0).unwrap_err().kind(), "InversionFailed");
    }

    #[test]
    fn chart_transform_examples() {
        let h = default_h_sequence();
        let opts = EstimateOptions::default();
        let f1 = fam(1, &["0.3 + x1*t^3"]);
        let f2 = fam(1, &["0.3 + x1*t^3 + t^2"]);
        let x = v(&[0.0]);
        let id = CodomainMap::parse(1, &["x1"]).unwrap();
        let (a, b) = residual_chart_transform_check(&f1, &f2, &x, 2, &id, &h, &opts).unwrap();
        assert_eq!(a, v(&[1.0]));
        assert_eq!(b, v(&[1.0]));
        let double = CodomainMap::parse(1, &["2*x1"]).unwrap();
        let (a, b) = residual_chart_transform_check(&f1, &f2, &x, 2, &double, &h, &opts).unwrap();
        assert_eq!((a[0], b[0]), (2.0, 2.0));
        let quad = CodomainMap::parse(1, &["x1 + x1^2"]).unwrap();
        let (a, b) = residual_chart_transform_check(&f1, &f2, &x, 2, &quad, &h, &opts).unwrap();
        assert!((a[0] - 1.6).abs() < 1e-12 && (b[0] - 1.6).abs() < 1e-6);
        let numeric = residual_chart_transform_check(
            &f1.clone().numeric_only(),
            &f2.clone().numeric_only(),
            &x,
            2,
            &quad,
            &h,
            &opts,
        )
        .unwrap();
        assert!((numeric.1[0] - 1.6).abs() < 1e-6);
    }
}
