//! Perturbation theory for skew critical points.
//!
//! A [`ProblemFamily`] holds two problems depending on a parameter `t` that
//! coincide at `t = 0`. The extended spaces are `M x R` and `N x R` with
//! reference function `t` on both, and the constraint carries `t` along, so
//! the solution maps have the form `gamma_i(y, t) = (x_i(y, t), t)`.
//! Comparing `x_2` with `x_1` as `t -> 0` measures the solution residual,
//! which is also predicted by a linear system built from the data residuals.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contact::{
    contact_estimate, default_h_sequence, estimate_from_differences, AdaptedFamily, ContactEstimate,
    EstimateOptions,
};
use crate::error::{Error, Result};
use crate::exprlang::{Env, Expr};
use crate::geometry::{symbolic_problem, AmbientChart, SkewProblem, CRITICAL_POINT_TOL};
use crate::numerics::{condition_number, max_abs, solve_linear, Matrix, Vector};
use crate::solver::{newton_step, solve, NewtonSettings, SolveResult};

/// Condition cap for the residual system.
pub const SYSTEM_CONDITION_CAP: f64 = 1e12;

/// Data of one problem as expressions in `x1..xn` and `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub alpha: Vec<Expr>,
    /// Row-major `(n-d) x d`.
    pub delta: Vec<Expr>,
    pub g: Vec<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFamily {
    pub chart: AmbientChart,
    pub members: [FamilyMember; 2],
}

/// Which of the two problems a quantity is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Member {
    #[default]
    First,
    Second,
}

impl Member {
    fn index(self) -> usize {
        match self {
            Member::First => 0,
            Member::Second => 1,
        }
    }
}

const PROBE_POINTS: [[f64; 4]; 5] = [
    [0.31, -0.47, 0.12, 0.88],
    [-0.73, 0.05, 0.64, -0.21],
    [0.58, 0.91, -0.36, 0.17],
    [-0.14, -0.62, -0.83, 0.45],
    [0.0, 0.26, 0.39, -0.71],
];

impl ProblemFamily {
    /// Validates shapes and that both members agree at `t = 0` on a fixed
    /// set of probe points.
    pub fn new(chart: AmbientChart, first: FamilyMember, second: FamilyMember) -> Result<Self> {
        let (n, m, d) = (chart.n, chart.m, chart.d);
        for member in [&first, &second] {
            if member.alpha.len() != n || member.g.len() != m || member.delta.len() != (n - d) * d {
                return Err(Error::DimensionMismatch(format!(
                    "family member needs {n} alpha, {} delta and {m} g entries",
                    (n - d) * d
                )));
            }
        }
        let fam = ProblemFamily { chart, members: [first, second] };
        for probe in PROBE_POINTS {
            let x: Vec<f64> = (0..n).map(|i| probe[i % 4] * (1.0 + (i / 4) as f64)).collect();
            let env = Env { x: &x, t: Some(0.0), params: &[] };
            let pairs = fam.members[0]
                .alpha
                .iter()
                .chain(&fam.members[0].delta)
                .chain(&fam.members[0].g)
                .zip(fam.members[1].alpha.iter().chain(&fam.members[1].delta).chain(&fam.members[1].g));
            for (a, b) in pairs {
                if let (Ok(va), Ok(vb)) = (a.eval(&env), b.eval(&env)) {
                    let gap = (va - vb).abs();
                    if gap > 1e-12 * va.abs().max(1.0) {
                        return Err(Error::BaseMismatch { gap });
                    }
                }
            }
        }
        Ok(fam)
    }

    pub fn member(&self, which: Member) -> &FamilyMember {
        &self.members[which.index()]
    }

    /// The problem of member `which` with `t` frozen.
    pub fn problem_at(&self, which: Member, t: f64) -> Result<SkewProblem> {
        let mem = self.member(which);
        symbolic_problem(self.chart.clone(), mem.alpha.clone(), mem.delta.clone(), mem.g.clone(), t)
    }

    pub fn alpha_family(&self, which: Member) -> AdaptedFamily {
        AdaptedFamily::symbolic(self.chart.n, self.member(which).alpha.clone())
    }

    pub fn delta_family(&self, which: Member) -> AdaptedFamily {
        AdaptedFamily::symbolic(self.chart.n, self.member(which).delta.clone())
    }

    pub fn g_family(&self, which: Member) -> AdaptedFamily {
        AdaptedFamily::symbolic(self.chart.n, self.member(which).g.clone())
    }
}

/// Solve member `which` at parameter `t`.
pub fn solve_family(
    fam: &ProblemFamily,
    which: Member,
    y: &Vector,
    t: f64,
    x0: &Vector,
    settings: &NewtonSettings,
) -> Result<SolveResult> {
    solve(&fam.problem_at(which, t)?, y, x0, settings)
}

/// Solve, then take one more Newton step if it lowers the residual.
fn solve_polished(p: &SkewProblem, y: &Vector, x0: &Vector, settings: &NewtonSettings) -> Result<Vector> {
    let res = solve(p, y, x0, settings)?;
    let zero = Vector::zeros(p.chart.d);
    let residual = |x: &Vector| -> Result<f64> {
        let (a, g) = p.f_map(x)?;
        Ok(max_abs(&a).max(max_abs(&(g - y))))
    };
    let before = residual(&res.x_c)?;
    if let Ok(u) = newton_step(p, &res.x_c, (&zero, y), settings.condition_cap) {
        let x = &res.x_c + u;
        if residual(&x).map(|r| r < before).unwrap_or(false) {
            return Ok(x);
        }
    }
    Ok(res.x_c)
}

/// Outcome of one data-contact precheck.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCheck {
    pub which: &'static str,
    pub estimate: ContactEstimate,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaContactReport {
    /// Critical point of the unperturbed problem.
    pub x_c: Vector,
    pub data_checks: Vec<DataCheck>,
    /// Contact of `x_2(y, .)` against `x_1(y, .)`.
    pub estimate: ContactEstimate,
    pub passed: bool,
}

/// Settings for measuring solution contact.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSettings {
    pub h_seq: Vec<f64>,
    pub newton: NewtonSettings,
    /// Fit floor for the solution differences.
    pub floor: f64,
}

impl Default for GammaSettings {
    fn default() -> Self {
        GammaSettings {
            h_seq: default_h_sequence(),
            newton: NewtonSettings { tol_residual: 1e-13, max_iter: 60, ..NewtonSettings::default() },
            floor: 1e-12,
        }
    }
}

/// Contact estimates of the alpha, Delta and g data at `x`.
pub fn data_contact_checks(fam: &ProblemFamily, x: &Vector, r: usize, h_seq: &[f64]) -> Result<Vec<DataCheck>> {
    let pairs = [
        ("alpha", fam.alpha_family(Member::First), fam.alpha_family(Member::Second)),
        ("delta", fam.delta_family(Member::First), fam.delta_family(Member::Second)),
        ("g", fam.g_family(Member::First), fam.g_family(Member::Second)),
    ];
    let mut out = Vec::new();
    for (which, f1, f2) in pairs {
        if f1.out_dim == 0 {
            continue;
        }
        let estimate = contact_estimate(&f1, &f2, x, h_seq, None).map_err(|e| Error::DataContactViolation {
            which: which.into(),
            detail: e.to_string(),
        })?;
        let passed = estimate.slope_at_least(r as f64 - 0.1);
        out.push(DataCheck { which, estimate, passed });
    }
    Ok(out)
}

/// Measure the contact of the two solution families at `y`.
///
/// Fails with `DataContactViolation` when any data pair has contact below
/// `r`.
pub fn verify_gamma_contact(
    fam: &ProblemFamily,
    y: &Vector,
    r: usize,
    x0: &Vector,
    settings: &GammaSettings,
) -> Result<GammaContactReport> {
    let (report, _) = measure_gamma(fam, y, r, x0, settings, true)?;
    Ok(report)
}

fn measure_gamma(
    fam: &ProblemFamily,
    y: &Vector,
    r: usize,
    x0: &Vector,
    settings: &GammaSettings,
    prechecks: bool,
) -> Result<(GammaContactReport, Vector)> {
    let p0 = fam.problem_at(Member::First, 0.0)?;
    let x_c = solve(&p0, y, x0, &settings.newton)?.x_c;
    let data_checks = if prechecks { data_contact_checks(fam, &x_c, r, &settings.h_seq)? } else { vec![] };
    if let Some(bad) = data_checks.iter().find(|c| !c.passed) {
        return Err(Error::DataContactViolation {
            which: bad.which.into(),
            detail: format!("fitted slope {:?} below {r}", bad.estimate.r_est),
        });
    }

    let mut starts = [x_c.clone(), x_c.clone()];
    let mut diffs = Vec::with_capacity(settings.h_seq.len());
    let mut scale = max_abs(&x_c).max(1.0);
    for &h in &settings.h_seq {
        let mut xs = Vec::with_capacity(2);
        for (k, which) in [Member::First, Member::Second].into_iter().enumerate() {
            let x = solve_polished(&fam.problem_at(which, h)?, y, &starts[k], &settings.newton)?;
            scale = scale.max(max_abs(&x));
            starts[k] = x.clone();
            xs.push(x);
        }
        diffs.push(&xs[1] - &xs[0]);
    }
    let x2_at_zero = solve_polished(&fam.problem_at(Member::Second, 0.0)?, y, &x_c, &settings.newton)?;
    let base_gap = max_abs(&(&x2_at_zero - &x_c));
    let opts = EstimateOptions { floor: Some(settings.floor), ..EstimateOptions::default() };
    let estimate = estimate_from_differences(&settings.h_seq, &diffs, base_gap, scale, Some(r), &opts)?;
    let passed = estimate.slope_at_least(r as f64 - 0.1);
    Ok((GammaContactReport { x_c: x_c.clone(), data_checks, estimate, passed }, x_c))
}

/// Where the `gamma_dot` factor enters the alpha rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GammaDotPlacement {
    /// On the Hessian term, as written in the linear system.
    #[default]
    OnHessian,
    /// On the alpha residual term.
    OnDataResidual,
    /// Raised to the power `r` on the alpha residual term.
    OnDataResidualPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AssemblyOptions {
    /// Member whose derivatives and base form enter the system.
    pub index: Member,
    pub gamma_dot: GammaDotPlacement,
}

/// `A u + b = 0` for the solution residual `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSystem {
    /// `(d + m) x n`; rows `0..d` come from the alpha equation, the rest
    /// from the constraint.
    pub a: Matrix,
    pub b: Vector,
    pub d: usize,
    pub m: usize,
    /// Always 1: the constraint preserves the reference function.
    pub gamma_dot: f64,
    pub condition: f64,
}

/// Analytic `(1/r!) d^r/dt^r (f2 - f1)` at `(x, 0)`.
fn data_residual(f1: &AdaptedFamily, f2: &AdaptedFamily, x: &Vector, r: usize) -> Result<Vector> {
    let h = default_h_sequence();
    Ok(contact_estimate(f1, f2, x, &h, Some(r))?.residual)
}

/// Assemble the residual system at a critical point `x_c` of the
/// unperturbed problem at `y_c`.
pub fn assemble_residual_system(
    fam: &ProblemFamily,
    x_c: &Vector,
    y_c: &Vector,
    r: usize,
    opts: AssemblyOptions,
) -> Result<ResidualSystem> {
    let chart = &fam.chart;
    let (n, m, d) = (chart.n, chart.m, chart.d);
    if d + m != n {
        return Err(Error::NotSquare { n, m, d, kernel: n - m });
    }
    let p = fam.problem_at(opts.index, 0.0)?;
    let (alpha_d, g) = p.f_map(x_c)?;
    let off = max_abs(&alpha_d).max(max_abs(&(g - y_c)));
    if off > CRITICAL_POINT_TOL {
        return Err(Error::NotCriticalPoint { residual: off });
    }

    let gamma_dot = 1.0;
    let (hess_factor, res_factor) = match opts.gamma_dot {
        GammaDotPlacement::OnHessian => (gamma_dot, 1.0),
        GammaDotPlacement::OnDataResidual => (1.0, gamma_dot),
        GammaDotPlacement::OnDataResidualPower => (1.0, f64::powi(gamma_dot, r as i32)),
    };

    let mut a = Matrix::zeros(n, n);
    let top = p.alpha_on_distribution_jacobian(x_c)? * hess_factor;
    a.view_mut((0, 0), (d, n)).copy_from(&top);
    a.view_mut((d, 0), (m, n)).copy_from(&p.constraint_jacobian(x_c)?);

    let res_alpha = data_residual(&fam.alpha_family(Member::First), &fam.alpha_family(Member::Second), x_c, r)?;
    let res_g = data_residual(&fam.g_family(Member::First), &fam.g_family(Member::Second), x_c, r)?;
    let res_delta = if d > 0 && d < n {
        let flat = data_residual(&fam.delta_family(Member::First), &fam.delta_family(Member::Second), x_c, r)?;
        Matrix::from_row_slice(n - d, d, flat.as_slice())
    } else {
        Matrix::zeros(n - d, d)
    };

    let basis = p.graph_basis(x_c)?;
    let alpha = (p.alpha.eval)(x_c)?;
    let mut b = Vector::zeros(n);
    for j in 0..d {
        let mut v = res_factor * res_alpha.dot(&basis.column(j));
        for (c, &coord) in chart.complement_coords.iter().enumerate() {
            v += alpha[coord] * res_delta[(c, j)];
        }
        b[j] = v;
    }
    b.rows_mut(d, m).copy_from(&res_g);

    let condition = condition_number(&a);
    if !(condition <= SYSTEM_CONDITION_CAP) {
        return Err(Error::DegenerateHessian { condition, cap: SYSTEM_CONDITION_CAP });
    }
    Ok(ResidualSystem { a, b, d, m, gamma_dot, condition })
}

/// `u` with `A u = -b`.
pub fn predict_solution_residual(sys: &ResidualSystem) -> Result<Vector> {
    if !(sys.condition <= SYSTEM_CONDITION_CAP) {
        return Err(Error::SingularSystem { condition: sys.condition });
    }
    solve_linear(&sys.a, &(-&sys.b)).map_err(|_| Error::SingularSystem { condition: sys.condition })
}

/// A finite group acting linearly on both charts.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupAction {
    /// `(tau_M, tau_N)` pairs.
    pub generators: Vec<(Matrix, Matrix)>,
}

/// Largest group order explored by [`GroupAction::new`].
pub const GROUP_CLOSURE_CAP: usize = 256;

impl GroupAction {
    /// Checks invertibility and that the generated group is finite.
    pub fn new(generators: Vec<(Matrix, Matrix)>) -> Result<Self> {
        let Some((first_m, first_n)) = generators.first() else {
            return Err(Error::InvalidArgument("group action needs at least one generator".into()));
        };
        let (n, m) = (first_m.nrows(), first_n.nrows());
        for (k, (tm, tn)) in generators.iter().enumerate() {
            if tm.shape() != (n, n) || tn.shape() != (m, m) {
                return Err(Error::DimensionMismatch(format!("generator {k} has the wrong shape")));
            }
            if condition_number(tm) > 1e12 || condition_number(tn) > 1e12 {
                return Err(Error::InvalidArgument(format!("generator {k} is not invertible")));
            }
        }
        let close = |a: &(Matrix, Matrix), b: &(Matrix, Matrix)| (&a.0 - &b.0).amax() < 1e-9 && (&a.1 - &b.1).amax() < 1e-9;
        let mut elements = vec![(DMatrix::identity(n, n), DMatrix::identity(m, m))];
        let mut frontier = elements.clone();
        while let Some(e) = frontier.pop() {
            for g in &generators {
                let prod = (&g.0 * &e.0, &g.1 * &e.1);
                if !elements.iter().any(|x| close(x, &prod)) {
                    if elements.len() == GROUP_CLOSURE_CAP {
                        return Err(Error::GroupNotFinite(format!("more than {GROUP_CLOSURE_CAP} elements")));
                    }
                    elements.push(prod.clone());
                    frontier.push(prod);
                }
            }
        }
        Ok(GroupAction { generators })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        GroupAction { generators: vec![(Matrix::identity(n, n), Matrix::identity(m, m))] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorReport {
    /// `|tau_M res(y) - res(tau_N y)|_inf` from measured residuals.
    pub measured_discrepancy: f64,
    /// The same with predicted residuals.
    pub predicted_discrepancy: f64,
    pub residual_at_y: Vector,
    pub residual_at_image: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivarianceReport {
    pub generators: Vec<GeneratorReport>,
    pub max_measured_discrepancy: f64,
    pub max_predicted_discrepancy: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivarianceSettings {
    pub gamma: GammaSettings,
    pub seed: u64,
    pub samples: usize,
    /// Half-width of the sampling box around the critical point.
    pub radius: f64,
    /// Pointwise tolerance of the hypothesis checks.
    pub tol: f64,
}

impl Default for EquivarianceSettings {
    fn default() -> Self {
        EquivarianceSettings { gamma: GammaSettings::default(), seed: 0, samples: 20, radius: 0.5, tol: 1e-8 }
    }
}

fn violated(generator: usize, hypothesis: &str, discrepancy: f64) -> Error {
    Error::HypothesisViolated { generator, hypothesis: hypothesis.into(), discrepancy }
}

/// Hypothesis checks for one generator at one sample point.
fn check_hypotheses(
    fam: &ProblemFamily,
    k: usize,
    tau_m: &Matrix,
    tau_n: &Matrix,
    x: &Vector,
    r: usize,
    tol: f64,
) -> Result<()> {
    let chart = &fam.chart;
    let (n, d) = (chart.n, chart.d);
    let tx = tau_m * x;
    let tau_m_inv = tau_m.clone().try_inverse().ok_or_else(|| Error::InvalidArgument("singular generator".into()))?;
    let x_pre = &tau_m_inv * x;
    let rel = |v: f64, scale: f64| v / scale.max(1.0);

    for which in [Member::First, Member::Second] {
        let p = fam.problem_at(which, 0.0)?;
        // pulled-back form
        let a = (p.alpha.eval)(x)?;
        let pulled = tau_m.transpose() * (p.alpha.eval)(&tx)?;
        let gap = max_abs(&(&pulled - &a));
        if rel(gap, max_abs(&a)) > tol {
            return Err(violated(k, "alpha invariance", gap));
        }
        // tau_M maps the fiber at x onto the fiber at tau x
        if d > 0 && d < n {
            let moved = tau_m * p.graph_basis(x)?;
            let fiber = moved.select_rows(chart.fiber_coords.iter());
            let comp = moved.select_rows(chart.complement_coords.iter());
            let delta_image = (p.dist.delta)(&tx)?;
            let gap = (comp - delta_image * fiber).amax();
            if rel(gap, 1.0) > tol {
                return Err(violated(k, "distribution invariance", gap));
            }
        }
        let gx = p.constraint(x)?;
        let gap = max_abs(&(p.constraint(&tx)? - tau_n * &gx));
        if rel(gap, max_abs(&gx)) > tol {
            return Err(violated(k, "constraint equivariance", gap));
        }
    }

    let res = |f1: AdaptedFamily, f2: AdaptedFamily, at: &Vector| -> Result<Vector> {
        data_residual(&f1, &f2, at, r)
    };
    let alpha_res = |at: &Vector| res(fam.alpha_family(Member::First), fam.alpha_family(Member::Second), at);
    let ra = alpha_res(x)?;
    let gap = max_abs(&(tau_m.transpose() * alpha_res(&tx)? - &ra));
    if rel(gap, max_abs(&ra)) > tol {
        return Err(violated(k, "alpha residual equivariance", gap));
    }
    let g_res = |at: &Vector| res(fam.g_family(Member::First), fam.g_family(Member::Second), at);
    let rg = g_res(x)?;
    let gap = max_abs(&(g_res(&tx)? - tau_n * &rg));
    if rel(gap, max_abs(&rg)) > tol {
        return Err(violated(k, "constraint residual equivariance", gap));
    }
    if d > 0 && d < n {
        // residual of the transported distribution x -> tau_M D(tau_M^{-1} x)
        let p = fam.problem_at(Member::First, 0.0)?;
        let flat = res(fam.delta_family(Member::First), fam.delta_family(Member::Second), &x_pre)?;
        let r_pre = Matrix::from_row_slice(n - d, d, flat.as_slice());
        let tdd = tau_m.select_rows(chart.fiber_coords.iter()).select_columns(chart.fiber_coords.iter());
        let tdc = tau_m.select_rows(chart.fiber_coords.iter()).select_columns(chart.complement_coords.iter());
        let tcc = tau_m.select_rows(chart.complement_coords.iter()).select_columns(chart.complement_coords.iter());
        let delta_pre = (p.dist.delta)(&x_pre)?;
        let delta_here = (p.dist.delta)(x)?;
        let big_p = &tdd + &tdc * &delta_pre;
        let p_inv = big_p.try_inverse().ok_or_else(|| violated(k, "distribution invariance", f64::INFINITY))?;
        let transported = (&tcc - &delta_here * &tdc) * r_pre * p_inv;
        let flat_here = res(fam.delta_family(Member::First), fam.delta_family(Member::Second), x)?;
        let r_here = Matrix::from_row_slice(n - d, d, flat_here.as_slice());
        let gap = (transported - &r_here).amax();
        if rel(gap, r_here.amax()) > tol {
            return Err(violated(k, "distribution residual equivariance", gap));
        }
    }
    Ok(())
}

/// Check that the solution residual commutes with a finite group action.
///
/// The invariance of the unperturbed data and the equivariance of the data
/// residuals are checked first on a seeded cloud of points around the
/// critical point; a failure is reported as `HypothesisViolated`.
pub fn equivariance_check(
    fam: &ProblemFamily,
    action: &GroupAction,
    y: &Vector,
    r: usize,
    x0: &Vector,
    settings: &EquivarianceSettings,
) -> Result<EquivarianceReport> {
    let chart = &fam.chart;
    for (k, (tm, tn)) in action.generators.iter().enumerate() {
        if tm.shape() != (chart.n, chart.n) || tn.shape() != (chart.m, chart.m) {
            return Err(Error::DimensionMismatch(format!("generator {k} does not match the chart")));
        }
    }
    let p0 = fam.problem_at(Member::First, 0.0)?;
    let x_c = solve(&p0, y, x0, &settings.gamma.newton)?.x_c;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let cloud: Vec<Vector> = (0..settings.samples)
        .map(|_| x_c.map(|c| c + rng.gen_range(-settings.radius..=settings.radius)))
        .collect();
    for (k, (tm, tn)) in action.generators.iter().enumerate() {
        for x in &cloud {
            check_hypotheses(fam, k, tm, tn, x, r, settings.tol)?;
        }
    }

    let predicted_at = |yy: &Vector, x_start: &Vector| -> Result<Vector> {
        let xc = solve(&p0, yy, x_start, &settings.gamma.newton)?.x_c;
        predict_solution_residual(&assemble_residual_system(fam, &xc, yy, r, AssemblyOptions::default())?)
    };
    let mut generators = Vec::new();
    for (tm, tn) in &action.generators {
        let ty = tn * y;
        let tx = tm * &x_c;
        let (here, _) = measure_gamma(fam, y, r, &x_c, &settings.gamma, false)?;
        let (there, _) = measure_gamma(fam, &ty, r, &tx, &settings.gamma, false)?;
        let measured_discrepancy = max_abs(&(tm * &here.estimate.residual - &there.estimate.residual));
        let predicted_discrepancy = max_abs(&(tm * predicted_at(y, &x_c)? - predicted_at(&ty, &tx)?));
        generators.push(GeneratorReport {
            measured_discrepancy,
            predicted_discrepancy,
            residual_at_y: here.estimate.residual,
            residual_at_image: there.estimate.residual,
        });
    }
    let max_measured_discrepancy = generators.iter().map(|g| g.measured_discrepancy).fold(0.0, f64::max);
    let max_predicted_discrepancy = generators.iter().map(|g| g.predicted_discrepancy).fold(0.0, f64::max);
    Ok(EquivarianceReport { generators, max_measured_discrepancy, max_predicted_discrepancy, sample_count: cloud.len() })
}
