//! Contact orders and residuals of map families on adapted charts.
//!
//! A family is a map `(x, t) -> f(x, t)` where `t` is the reference function
//! of the domain. Two families with the same values at `t = 0` satisfy
//! `f2 = f1 + O(t^r)` when their difference is `t^r` times a continuous
//! function; the value of that function at `t = 0` is the r-residual, equal
//! to `(1/r!) d^r/dt^r (f2 - f1)` at `t = 0`.
//!
//! When the codomain is itself adapted, its reference function is the last
//! output component (`h_last`).
//!
//! Orders are reported as the exponent `r` in `O(t^r)`. Some texts say the
//! two families "have contact r-1" in that situation.

mod graph;
mod laws;

use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::exprlang::{differentiate, nth_derivative, parse, Dims, Env, Expr, Var};
use crate::numerics::{
    ensure_finite, fd_jacobian_auto, max_abs, richardson_limit, slope_fit, Matrix, Vector, DEFAULT_NOISE_FLOOR,
};

pub use graph::{
    distribution_residual, graph_symmetry_bump_check, graph_to_map, BumpReport, DistributionFamily,
    DistributionResidual,
};
pub use laws::{
    compose, compose_residual_check, fdot, hat_contact_drop_check, hat_divide, inverse_family,
    inverse_residual_check, residual_chart_transform_check, CodomainMap, ComposeReport, ComposeVariant,
    HatDropReport, HatFamily, InverseReport,
};

pub type FamFn = Arc<dyn Fn(&Vector, f64) -> Result<Vector> + Send + Sync>;
pub type FamDerivFn = Arc<dyn Fn(&Vector, f64, usize) -> Result<Vector> + Send + Sync>;
pub type FamJacFn = Arc<dyn Fn(&Vector, f64) -> Result<Matrix> + Send + Sync>;

/// Families must agree at `t = 0` to within this gap.
pub const BASE_MATCH_TOL: f64 = 1e-12;

/// Highest t-derivative order served from the symbolic cache.
const MAX_SYMBOLIC_ORDER: usize = 12;

#[derive(Debug)]
struct SymbolicParts {
    exprs: Vec<Expr>,
    t_derivs: Mutex<Vec<Vec<Expr>>>,
}

impl SymbolicParts {
    fn derivative(&self, k: usize) -> Vec<Expr> {
        let mut cache = self.t_derivs.lock().unwrap_or_else(|e| e.into_inner());
        while cache.len() <= k {
            let next: Vec<Expr> = cache.last().expect("seeded").iter().map(|e| differentiate(e, Var::T)).collect();
            cache.push(next);
        }
        cache[k].clone()
    }
}

/// A map family on an adapted chart.
#[derive(Clone)]
pub struct AdaptedFamily {
    pub in_dim: usize,
    pub out_dim: usize,
    pub eval: FamFn,
    /// `(x, t, k) -> d^k f / dt^k`.
    pub t_deriv: Option<FamDerivFn>,
    /// `(x, t) -> d f / dx`, `out_dim x in_dim`.
    pub x_jac: Option<FamJacFn>,
    /// The last output component is the codomain reference function.
    pub h_last: bool,
    symbolic: Option<Arc<SymbolicParts>>,
}

impl std::fmt::Debug for AdaptedFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdaptedFamily")
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .field("analytic", &self.t_deriv.is_some())
            .field("h_last", &self.h_last)
            .field("exprs", &self.exprs().map(|e| e.iter().map(|x| x.to_string()).collect::<Vec<_>>()))
            .finish()
    }
}

fn env(x: &Vector, t: f64) -> Env<'_> {
    Env { x: x.as_slice(), t: Some(t), params: &[] }
}

fn eval_exprs(exprs: &[Expr], x: &Vector, t: f64) -> Result<Vector> {
    let e = env(x, t);
    let vals = exprs.iter().map(|ex| ex.eval(&e)).collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Vector::from_vec(vals))
}

fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

impl AdaptedFamily {
    pub fn new(in_dim: usize, out_dim: usize, eval: FamFn) -> Self {
        AdaptedFamily { in_dim, out_dim, eval, t_deriv: None, x_jac: None, h_last: false, symbolic: None }
    }

    /// Family given by component expressions in `x1..x{in_dim}` and `t`.
    /// Derivatives in `t` and `x` are exact.
    pub fn symbolic(in_dim: usize, exprs: Vec<Expr>) -> Self {
        let out_dim = exprs.len();
        let parts = Arc::new(SymbolicParts { t_derivs: Mutex::new(vec![exprs.clone()]), exprs });
        let jac_exprs: Arc<Vec<Expr>> = Arc::new(
            parts.exprs.iter().flat_map(|e| (0..in_dim).map(move |k| differentiate(e, Var::X(k)))).collect(),
        );
        let p_eval = parts.clone();
        let p_deriv = parts.clone();
        AdaptedFamily {
            in_dim,
            out_dim,
            eval: Arc::new(move |x, t| eval_exprs(&p_eval.exprs, x, t)),
            t_deriv: Some(Arc::new(move |x, t, k| {
                if k <= MAX_SYMBOLIC_ORDER {
                    eval_exprs(&p_deriv.derivative(k), x, t)
                } else {
                    let d: Vec<Expr> = p_deriv.exprs.iter().map(|e| nth_derivative(e, Var::T, k)).collect();
                    eval_exprs(&d, x, t)
                }
            })),
            x_jac: Some(Arc::new(move |x, t| {
                let flat = eval_exprs(&jac_exprs, x, t)?;
                Ok(Matrix::from_row_slice(out_dim, in_dim, flat.as_slice()))
            })),
            h_last: false,
            symbolic: Some(parts),
        }
    }

    /// Parse component sources against `x1..x{in_dim}` and `t`.
    pub fn parse(in_dim: usize, srcs: &[&str]) -> Result<Self> {
        let dims = Dims { n: in_dim, params: 0, allow_t: true };
        let exprs = srcs.iter().map(|s| parse(s, dims)).collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self::symbolic(in_dim, exprs))
    }

    /// Mark the last output component as the codomain reference function.
    pub fn with_h_last(mut self) -> Self {
        self.h_last = true;
        self
    }

    /// Drop analytic derivatives so residuals go through extrapolation.
    pub fn numeric_only(mut self) -> Self {
        self.t_deriv = None;
        self.x_jac = None;
        self.symbolic = None;
        self
    }

    pub fn exprs(&self) -> Option<&[Expr]> {
        self.symbolic.as_ref().map(|s| s.exprs.as_slice())
    }

    pub fn is_analytic(&self) -> bool {
        self.t_deriv.is_some()
    }

    fn check_x(&self, x: &Vector) -> Result<()> {
        if x.len() != self.in_dim {
            return Err(Error::DimensionMismatch(format!("family expects x of length {}, got {}", self.in_dim, x.len())));
        }
        Ok(())
    }

    pub fn at(&self, x: &Vector, t: f64) -> Result<Vector> {
        self.check_x(x)?;
        let v = (self.eval)(x, t)?;
        if v.len() != self.out_dim {
            return Err(Error::DimensionMismatch(format!("family returned {} values, expected {}", v.len(), self.out_dim)));
        }
        ensure_finite(&v, "family evaluation")?;
        Ok(v)
    }

    /// `d^k f / dt^k` at `(x, t)`; `None` when the family has no analytic
    /// derivatives.
    pub fn t_derivative(&self, x: &Vector, t: f64, k: usize) -> Option<Result<Vector>> {
        self.t_deriv.as_ref().map(|d| {
            self.check_x(x)?;
            let v = d(x, t, k)?;
            ensure_finite(&v, "t-derivative")?;
            Ok(v)
        })
    }

    pub fn x_jacobian(&self, x: &Vector, t: f64) -> Result<Matrix> {
        self.check_x(x)?;
        match &self.x_jac {
            Some(j) => j(x, t),
            None => fd_jacobian_auto(|y| self.at(y, t), x),
        }
    }

    /// `(x, t) -> f2(x, t) - f1(x, t)`, analytic when both are.
    pub fn difference(f1: &AdaptedFamily, f2: &AdaptedFamily) -> Result<AdaptedFamily> {
        if f1.in_dim != f2.in_dim || f1.out_dim != f2.out_dim {
            return Err(Error::DimensionMismatch("families have different shapes".into()));
        }
        if let (Some(a), Some(b)) = (f1.exprs(), f2.exprs()) {
            let exprs = a.iter().zip(b).map(|(a, b)| crate::exprlang::sub(b.clone(), a.clone())).collect();
            return Ok(AdaptedFamily::symbolic(f1.in_dim, exprs));
        }
        let (p, q) = (f1.clone(), f2.clone());
        let mut diff = AdaptedFamily::new(f1.in_dim, f1.out_dim, Arc::new(move |x, t| Ok(q.at(x, t)? - p.at(x, t)?)));
        if f1.is_analytic() && f2.is_analytic() {
            let (p, q) = (f1.clone(), f2.clone());
            diff.t_deriv = Some(Arc::new(move |x, t, k| {
                let a = p.t_derivative(x, t, k).expect("analytic")?;
                let b = q.t_derivative(x, t, k).expect("analytic")?;
                Ok(b - a)
            }));
        }
        Ok(diff)
    }
}

/// Integer order, or why none was assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ContactOrder {
    Integer(usize),
    Ambiguous,
    /// Differences never rose above the noise floor.
    MachineLimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMethod {
    Analytic,
    Richardson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactEstimate {
    pub order_exponent: ContactOrder,
    /// Fitted slope; `None` when machine-limited.
    pub r_est: Option<f64>,
    pub r_claimed: Option<usize>,
    /// The order the residual was extracted at.
    pub r_used: usize,
    pub residual: Vector,
    pub fit_r2: Option<f64>,
    pub h_seq: Vec<f64>,
    /// `|f2 - f1|_inf` at each `h`.
    pub errors: Vec<f64>,
    pub method: ResidualMethod,
    pub noise_floor: f64,
}

impl ContactEstimate {
    pub fn is_machine_limited(&self) -> bool {
        self.order_exponent == ContactOrder::MachineLimited
    }

    /// Slope within `tol` of `r`. Machine-limited estimates do not qualify.
    pub fn slope_near(&self, r: f64, tol: f64) -> bool {
        self.r_est.map(|s| (s - r).abs() <= tol).unwrap_or(false)
    }

    /// Slope at least `r`, counting machine-limited contact as unbounded.
    pub fn slope_at_least(&self, r: f64) -> bool {
        self.is_machine_limited() || self.r_est.map(|s| s >= r).unwrap_or(false)
    }
}

/// `h_k = h0 2^-k`, `k = 0..count`.
pub fn h_sequence(h0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| h0 * 0.5f64.powi(k as i32)).collect()
}

pub fn default_h_sequence() -> Vec<f64> {
    h_sequence(0.1, 11)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    /// Noise floor for the slope fit; `None` scales `1e-14` with the values.
    pub floor: Option<f64>,
    /// Use exact t-derivatives when both families have them.
    pub analytic: bool,
    /// Number of largest `h` excluded from the fit.
    pub drop_largest: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { floor: None, analytic: true, drop_largest: 2 }
    }
}

/// Estimate the contact exponent and residual of `f2` relative to `f1` at `x`.
pub fn contact_estimate(
    f1: &AdaptedFamily,
    f2: &AdaptedFamily,
    x: &Vector,
    h_seq: &[f64],
    r_claimed: Option<usize>,
) -> Result<ContactEstimate> {
    contact_estimate_with(f1, f2, x, h_seq, r_claimed, &EstimateOptions::default())
}

pub fn contact_estimate_with(
    f1: &AdaptedFamily,
    f2: &AdaptedFamily,
    x: &Vector,
    h_seq: &[f64],
    r_claimed: Option<usize>,
    opts: &EstimateOptions,
) -> Result<ContactEstimate> {
    if f1.in_dim != f2.in_dim || f1.out_dim != f2.out_dim {
        return Err(Error::DimensionMismatch("families have different shapes".into()));
    }
    let base = f2.at(x, 0.0)? - f1.at(x, 0.0)?;
    let mut samples = Vec::with_capacity(h_seq.len());
    let mut scale = 1.0_f64;
    for &h in h_seq {
        let a = f1.at(x, h)?;
        let b = f2.at(x, h)?;
        scale = scale.max(max_abs(&a)).max(max_abs(&b));
        samples.push(b - a);
    }
    let mut est = estimate_from_differences(h_seq, &samples, max_abs(&base), scale, r_claimed, opts)?;
    if opts.analytic && f1.is_analytic() && f2.is_analytic() && est.r_used > 0 {
        let r = est.r_used;
        let a = f1.t_derivative(x, 0.0, r).expect("analytic")?;
        let b = f2.t_derivative(x, 0.0, r).expect("analytic")?;
        est.residual = (b - a) / factorial(r);
        est.method = ResidualMethod::Analytic;
    }
    Ok(est)
}

/// Shared estimation back end for precomputed differences `f2 - f1` at each
/// `h`. `base_gap` is `|f2 - f1|` at `t = 0` and `scale` the magnitude of
/// the compared values.
pub fn estimate_from_differences(
    h_seq: &[f64],
    diffs: &[Vector],
    base_gap: f64,
    scale: f64,
    r_claimed: Option<usize>,
    opts: &EstimateOptions,
) -> Result<ContactEstimate> {
    if base_gap > BASE_MATCH_TOL {
        return Err(Error::BaseMismatch { gap: base_gap });
    }
    if h_seq.len() != diffs.len() || h_seq.is_empty() {
        return Err(Error::InvalidArgument("h sequence and differences differ in length".into()));
    }
    if h_seq.windows(2).any(|w| !(w[1] < w[0])) || h_seq.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::InvalidArgument("h sequence must be positive and decreasing".into()));
    }
    let out_dim = diffs[0].len();
    let errors: Vec<f64> = diffs.iter().map(max_abs).collect();
    let noise_floor = opts.floor.unwrap_or_else(|| DEFAULT_NOISE_FLOOR.max(64.0 * f64::EPSILON * scale));

    let skip = if h_seq.len() >= opts.drop_largest + 5 { opts.drop_largest } else { 0 };
    let pairs: Vec<(f64, f64)> = h_seq.iter().cloned().zip(errors.iter().cloned()).skip(skip).collect();
    let (order, r_est, fit_r2) = match slope_fit(&pairs, noise_floor) {
        Ok(fit) => {
            let rounded = fit.slope.round();
            let order = if (fit.slope - rounded).abs() < 0.2 && fit.r2 > 0.999 && rounded >= 1.0 {
                ContactOrder::Integer(rounded as usize)
            } else {
                ContactOrder::Ambiguous
            };
            (order, Some(fit.slope), Some(fit.r2))
        }
        Err(Error::BelowFloor { .. }) => (ContactOrder::MachineLimited, None, None),
        Err(e) => return Err(e),
    };

    let r_used = match (r_claimed, r_est) {
        (Some(r), _) => r,
        (None, Some(s)) => s.round().max(1.0) as usize,
        (None, None) => 0,
    };
    let residual = if r_used == 0 {
        Vector::zeros(out_dim)
    } else {
        richardson_residual(h_seq, diffs, r_used, scale)?
    };
    Ok(ContactEstimate {
        order_exponent: order,
        r_est,
        r_claimed,
        r_used,
        residual,
        fit_r2,
        h_seq: h_seq.to_vec(),
        errors,
        method: ResidualMethod::Richardson,
        noise_floor,
    })
}

/// Extrapolate `diff(h) / h^r` to `h = 0`.
///
/// Rounding in the difference is amplified by `h^-r`, so only samples whose
/// amplified noise stays below `1e-8` relative are used; the six smallest of
/// those enter a Neville table in `h`.
fn richardson_residual(h_seq: &[f64], diffs: &[Vector], r: usize, scale: f64) -> Result<Vector> {
    let quotients: Vec<(f64, Vector)> = h_seq.iter().zip(diffs).map(|(&h, d)| (h, d / h.powi(r as i32))).collect();
    let admissible = quotients
        .iter()
        .take_while(|(h, q)| 4.0 * f64::EPSILON * scale / h.powi(r as i32) <= 1e-8 * max_abs(q).max(1.0))
        .count()
        .max(2.min(quotients.len()));
    let start = admissible.saturating_sub(6);
    let window = &quotients[start..admissible];
    if window.len() == 1 {
        return Ok(window[0].1.clone());
    }
    richardson_limit(window, 1.0)
}
