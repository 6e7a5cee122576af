//! The acceptance experiment suite.
//!
//! Each criterion runs a fixed set of experiments and returns one check per
//! experiment. Numerical failures inside an experiment become failed checks;
//! config failures abort the run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{Compiled, CompiledCustom};
use crate::contact::{
    compose_residual_check, contact_estimate, default_h_sequence, graph_symmetry_bump_check, hat_contact_drop_check,
    hat_divide, inverse_residual_check, AdaptedFamily, ComposeVariant,
};
use crate::error::{Error, Result};
use crate::numerics::{max_abs, Vector};
use crate::registry::ConfigSource;
use crate::report::{sha256_hex, Check, Report};
use crate::solver::solve;
use crate::variation::{
    assemble_residual_system, equivariance_check, predict_solution_residual, verify_gamma_contact, AssemblyOptions,
    EquivarianceSettings, GammaSettings, Member,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Suite {
    #[default]
    All,
    Solver,
    Contact,
    Variation,
}

impl Suite {
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::All => (1..=11).collect(),
            Suite::Solver => vec![1, 2],
            Suite::Contact => vec![3, 4, 5, 6, 7],
            Suite::Variation => vec![8, 9, 10],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Solver => "solver",
            Suite::Contact => "contact",
            Suite::Variation => "variation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptanceSettings {
    pub seed: u64,
    pub source: ConfigSource,
}

impl Default for AcceptanceSettings {
    fn default() -> Self {
        AcceptanceSettings { seed: 0, source: ConfigSource::BuiltIn }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Criterion {
    fn new(id: u8, checks: Vec<Check>) -> Self {
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        Criterion { id, name: criterion_name(id), passed, checks }
    }

    /// `criterion  3 contact calibration: PASS (16 checks)`.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("criterion {:>2} {}: {verdict} ({} checks)", self.id, self.name, self.checks.len())
    }
}

pub fn criterion_name(id: u8) -> &'static str {
    match id {
        1 => "solver correctness",
        2 => "local uniqueness",
        3 => "contact calibration",
        4 => "composition law",
        5 => "hat drop",
        6 => "inverse contact",
        7 => "graph bump",
        8 => "solution contact",
        9 => "residual prediction",
        10 => "equivariance",
        11 => "end to end",
        _ => "unknown",
    }
}

/// Built-in config names read by criterion `id`.
pub fn configs_for(id: u8) -> &'static [&'static str] {
    match id {
        1 | 2 => &["trivial", "skew3d"],
        7 => &["graph-bump-symmetric", "graph-bump-asymmetric"],
        8 => &["perturbed-trivial", "skew3d-cubic"],
        9 => &["perturbed-trivial", "g-perturbed", "delta-perturbed"],
        10 => &["reflection-symmetric", "odd-perturbation"],
        11 => &[
            "trivial",
            "skew3d",
            "graph-bump-symmetric",
            "graph-bump-asymmetric",
            "perturbed-trivial",
            "skew3d-cubic",
            "g-perturbed",
            "delta-perturbed",
            "reflection-symmetric",
            "odd-perturbation",
        ],
        _ => &[],
    }
}

/// Turn a numerical error into a failed check.
fn attempt(name: &str, f: impl FnOnce() -> Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::failed(name, e.to_string()))
}

fn load(s: &AcceptanceSettings, name: &str) -> Result<Compiled> {
    s.source.load(name)?.compile().map_err(|e| Error::Config(format!("{name}: {e}")))
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_row_slice(xs)
}

fn fam(n: usize, srcs: &[&str]) -> Result<AdaptedFamily> {
    AdaptedFamily::parse(n, srcs)
}

/// Largest `r_{k+1} / r_k^2` over steps starting below `1e-3`, ignoring
/// steps that land at roundoff level.
pub fn contraction_constant(history: &[f64]) -> f64 {
    history
        .windows(2)
        .filter(|w| w[0] < 1e-3 && w[0] > 0.0 && w[1] > 1e-14)
        .map(|w| w[1] / (w[0] * w[0]))
        .fold(0.0, f64::max)
}

fn criterion_1(s: &AcceptanceSettings) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, ys, root_of) in [
        ("trivial", [-1.0, 0.0, 0.7, 1.0], (|y: f64| vec![y, 0.0]) as fn(f64) -> Vec<f64>),
        ("skew3d", [-1.0, 0.0, 0.4, 1.0], |y: f64| vec![y, 0.0, 0.0]),
    ] {
        let c = load(s, name)?;
        for y in ys {
            let root = Vector::from_vec(root_of(y));
            let mut x0 = root.clone();
            for (k, xi) in x0.iter_mut().enumerate().skip(1) {
                *xi += if k % 2 == 1 { 0.1 } else { -0.1 };
            }
            let label = format!("{name} y={y}");
            let mut solved = None;
            checks.push(attempt(&format!("{label} root"), || {
                let res = solve(&c.problem()?, &v(&[y]), &x0, &c.config.solver)?;
                let err = max_abs(&(&res.x_c - &root));
                solved = Some(res);
                Ok(Check::within(format!("{label} root"), err, 1e-10))
            }));
            if let Some(res) = solved {
                let constant = contraction_constant(&res.residual_history);
                checks.push(Check::within(format!("{label} quadratic contraction"), constant, 10.0));
            }
        }
    }
    Ok(checks)
}

fn ball_point(rng: &mut ChaCha8Rng, center: &Vector, radius: f64) -> Vector {
    loop {
        let offset = center.map(|_| rng.gen_range(-radius..=radius));
        if offset.norm() <= radius {
            return center + offset;
        }
    }
}

fn criterion_2(s: &AcceptanceSettings) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut checks = Vec::new();
    for (name, ys) in [("trivial", [-1.0, 0.0, 0.7, 1.0]), ("skew3d", [-1.0, 0.0, 0.4, 1.0])] {
        let c = load(s, name)?;
        let p = c.problem()?;
        let n = p.chart.n;
        for y in ys {
            let mut root = Vector::zeros(n);
            root[0] = y;
            let label = format!("{name} y={y} 20 starts");
            let starts: Vec<Vector> = (0..20).map(|_| ball_point(&mut rng, &root, 0.2)).collect();
            checks.push(attempt(&label, || {
                let mut worst: f64 = 0.0;
                for x0 in &starts {
                    let res = solve(&p, &v(&[y]), x0, &c.config.solver)?;
                    worst = worst.max(max_abs(&(&res.x_c - &root)));
                }
                Ok(Check::within(&label, worst, 1e-8).with_detail("locally unique (sampled)"))
            }));
        }
    }
    Ok(checks)
}

fn criterion_3() -> Result<Vec<Check>> {
    let h = default_h_sequence();
    let mut checks = Vec::new();
    let bases: [(&str, &str, f64, fn(f64) -> f64); 2] = [
        ("sin(x1) + t", "cos(x1)", 0.5, f64::cos),
        ("x1 + t*exp(x1)", "(1 + x1^2)", 2.0, |x| 1.0 + x * x),
    ];
    for (base, c_src, x, c_of) in bases {
        for p in 1..=4usize {
            let f1 = fam(1, &[base])?;
            let f2 = fam(1, &[&format!("{base} + t^{p}*{c_src}")])?;
            let expect = c_of(x);
            for (path, tol, analytic) in [("analytic", 1e-8, true), ("richardson", 1e-6, false)] {
                let label = format!("t^{p}*{c_src} at x={x} {path}");
                let (a, b) = if analytic { (f1.clone(), f2.clone()) } else { (f1.clone().numeric_only(), f2.clone().numeric_only()) };
                let mut est = None;
                checks.push(attempt(&format!("{label} slope"), || {
                    let e = contact_estimate(&a, &b, &v(&[x]), &h, Some(p))?;
                    let slope = e.r_est.unwrap_or(f64::NAN);
                    est = Some(e);
                    Ok(Check::within(format!("{label} slope"), (slope - p as f64).abs(), 0.05).with_value(slope))
                }));
                if let Some(e) = est {
                    checks.push(Check::within(format!("{label} residual"), (e.residual[0] - expect).abs(), tol));
                }
            }
        }
    }
    Ok(checks)
}

fn coef(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> String {
    let v: f64 = rng.gen_range(lo..hi);
    format!("({:.3})", v)
}

fn criterion_4(s: &AcceptanceSettings) -> Result<Vec<Check>> {
    let h = default_h_sequence();
    let mut checks = Vec::new();
    checks.push(attempt("worked example predicted = 1 + 2x at x=0.5", || {
        let f1 = fam(1, &["x1 + 0.5*t^2", "t"])?.with_h_last();
        let f2 = fam(1, &["x1 + 1.5*t^2", "t"])?.with_h_last();
        let g1 = fam(1, &["x1^2 + 2*t^2"])?;
        let g2 = fam(1, &["x1^2 + 3*t^2"])?;
        let rep = compose_residual_check(&f1, &f2, &g1, &g2, &v(&[0.5]), 2, &h, ComposeVariant::Literal)?;
        let err = (rep.predicted[0] - 2.0).abs().max((rep.measured.residual[0] - 2.0).abs());
        Ok(Check::within("worked example predicted = 1 + 2x at x=0.5", err, 1e-6))
    }));
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(4));
    for r in 1..=3usize {
        for k in 0..25 {
            let mut c = |lo, hi| coef(&mut rng, lo, hi);
            let y1 = format!("{}*x1 + {}*x1^2 + {}*t*x1 + {}*t^2", c(0.5, 1.5), c(-1.0, 1.0), c(-1.0, 1.0), c(-1.0, 1.0));
            let s1 = format!("t*(1 + {}*x1) + {}*t^2", c(-0.5, 0.5), c(-1.0, 1.0));
            let y2 = format!("{y1} + {}*t^{r}*(1 + {}*x1)", c(-1.0, 1.0), c(-1.0, 1.0));
            let s2 = format!("{s1} + {}*t^{r}", c(-1.0, 1.0));
            let g1 = format!("{} + {}*x1 + {}*x1^2 + {}*x1*t + {}*t^2", c(-1.0, 1.0), c(-1.0, 1.0), c(-1.0, 1.0), c(-1.0, 1.0), c(-1.0, 1.0));
            let g2 = format!("{g1} + {}*t^{r}*(1 + {}*x1^2)", c(-1.0, 1.0), c(-1.0, 1.0));
            let x: f64 = rng.gen_range(-1.0..1.0);
            let label = format!("random pair r={r} #{k}");
            let variants: &[ComposeVariant] =
                if r >= 2 { &[ComposeVariant::Literal, ComposeVariant::Swapped] } else { &[ComposeVariant::Literal] };
            for &variant in variants {
                let name = format!("{label} {variant:?}").to_lowercase();
                checks.push(attempt(&name, || {
                    let f1 = fam(1, &[&y1, &s1])?.with_h_last();
                    let f2 = fam(1, &[&y2, &s2])?.with_h_last();
                    let rep = compose_residual_check(&f1, &f2, &fam(1, &[&g1])?, &fam(1, &[&g2])?, &v(&[x]), r, &h, variant)?;
                    Ok(Check::within(&name, rep.relative_discrepancy, 1e-6))
                }));
            }
        }
    }
    Ok(checks)
}

fn criterion_5() -> Result<Vec<Check>> {
    let h = default_h_sequence();
    let continuity_h: Vec<f64> = (1..=8).map(|k| 10f64.powi(-k)).collect();
    let suite: [(&[&str], &[&str], &[f64], usize); 4] = [
        (&["t*x1"], &["t*x1 + t^3"], &[0.4], 3),
        (&["t*sin(x1)"], &["t*sin(x1) + t^4*x1^2"], &[1.0], 4),
        (&["t*x1 + t^2"], &["t*x1 + t^2 + t^2*cos(x1)"], &[0.3], 2),
        (&["t*x1", "t*x2^2"], &["t*x1 + t^3*x2", "t*x2^2 - t^3"], &[0.2, 0.5], 3),
    ];
    let mut checks = Vec::new();
    for (k, (a, b, x, r)) in suite.into_iter().enumerate() {
        let n = x.len();
        let x = Vector::from_row_slice(x);
        let label = format!("suite #{k} r={r}");
        checks.push(attempt(&format!("{label} residual equality"), || {
            let rep = hat_contact_drop_check(&fam(n, a)?, &fam(n, b)?, &x, r, &h)?;
            Ok(Check::within(format!("{label} residual equality"), rep.discrepancy, 1e-8))
        }));
        for (which, srcs) in [("f1", a), ("f2", b)] {
            let name = format!("{label} {which} hat continuity");
            checks.push(attempt(&name, || {
                let hat = hat_divide(&fam(n, srcs)?, std::slice::from_ref(&x))?;
                let defects = hat.continuity_defects(&x, &continuity_h)?;
                Ok(Check::within(&name, defects.last().map(|d| d.1).unwrap_or(f64::INFINITY), 1e-6))
            }));
        }
    }
    Ok(checks)
}

fn criterion_6(s: &AcceptanceSettings) -> Result<Vec<Check>> {
    let h = default_h_sequence();
    let mut checks = Vec::new();
    checks.push(attempt("worked linear example", || {
        let rep = inverse_residual_check(&fam(1, &["x1 + t"])?, &fam(1, &["x1 + t + t^2"])?, &v(&[0.3]), 2, &h)?;
        let err = (rep.predicted[0] - rep.measured.residual[0]).abs();
        Ok(Check::within("worked linear example", err, 1e-5).with_detail(format!("predicted {}", rep.predicted[0])))
    }));
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(6));
    for r in [2usize, 3] {
        for k in 0..10 {
            let mut c = |lo, hi| coef(&mut rng, lo, hi);
            let f1 = format!("{}*x1 + {}*x1^3 + {}*t*x1 + {}*t", c(0.5, 2.0), c(0.0, 0.5), c(-1.0, 1.0), c(-1.0, 1.0));
            let f2 = format!("{f1} + ({} + {}*x1)*t^{r}", c(0.2, 1.0), c(-1.0, 1.0));
            let x: f64 = rng.gen_range(-0.5..0.5);
            let name = format!("monotone family r={r} #{k} slope");
            checks.push(attempt(&name, || {
                let rep = inverse_residual_check(&fam(1, &[&f1])?, &fam(1, &[&f2])?, &v(&[x]), r, &h)?;
                let slope = rep.measured.r_est.unwrap_or(f64::NAN);
                Ok(Check::new(&name, rep.measured.slope_at_least(r as f64 - 0.1)).with_value(slope))
            }));
        }
    }
    Ok(checks)
}

fn graph_check(name: &str, g1: &AdaptedFamily, g2: &AdaptedFamily, x: &Vector, r: usize, symmetric: bool) -> Check {
    attempt(name, || {
        let rep = graph_symmetry_bump_check(g1, g2, x, r, &default_h_sequence())?;
        let mut check = Check::new(name, rep.passed && rep.symmetric == symmetric);
        if let Some(slope) = rep.estimate.r_est {
            check = check.with_value(slope);
        }
        if rep.estimate.is_machine_limited() {
            check = check.with_detail("machine-limited");
        }
        Ok(check)
    })
}

fn criterion_7(s: &AcceptanceSettings) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, symmetric) in [("graph-bump-symmetric", true), ("graph-bump-asymmetric", false)] {
        let c = load(s, name)?;
        let r = c.config.experiment.r_claimed.unwrap_or(2);
        match &c.custom {
            Some(CompiledCustom::Graph { gamma1, gamma2, x }) => {
                checks.push(graph_check(&format!("{name} r={r}"), gamma1, gamma2, x, r, symmetric));
            }
            _ => return Err(Error::Config(format!("{name} must declare custom graph families"))),
        }
    }
    let x = v(&[0.6]);
    let inline: [(&str, &[&str], &[&str], usize, bool); 3] = [
        ("exact symmetric r=2", &["x1", "x1 + t"], &["x1 + t^2*x1^2", "x1 + t + t^2*x1^2"], 2, true),
        ("symmetric r=3", &["x1", "x1 + t"], &["x1 + t^3*x1", "x1 + t + t^3*x1 + t^4*(2 - x1)"], 3, true),
        ("asymmetric r=3", &["x1", "x1 + t"], &["x1 + t^3", "x1 + t + t^3*(1 + x1)"], 3, false),
    ];
    for (name, a, b, r, symmetric) in inline {
        match (fam(1, a), fam(1, b)) {
            (Ok(g1), Ok(g2)) => checks.push(graph_check(name, &g1, &g2, &x, r, symmetric)),
            (Err(e), _) | (_, Err(e)) => checks.push(Check::failed(name, e.to_string())),
        }
    }
    Ok(checks)
}

fn first_y(c: &Compiled) -> Result<Vector> {
    c.y_values().into_iter().next().ok_or_else(|| Error::Config("experiment lists no y value".into()))
}

fn criterion_8(s: &AcceptanceSettings) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (name, r) in [("perturbed-trivial", 2usize), ("skew3d-cubic", 3)] {
        let c = load(s, name)?;
        let fam = c.family()?.clone();
        let y = first_y(&c)?;
        let label = format!("{name} r={r} slope");
        checks.push(attempt(&label, || {
            let rep = verify_gamma_contact(&fam, &y, r, &c.x0(), &GammaSettings::default())?;
            let slope = rep.estimate.r_est.unwrap_or(f64::NAN);
            Ok(Check::within(&label, (slope - r as f64).abs(), 0.1).with_value(slope))
        }));
    }
    Ok(checks)
}

fn criterion_9(s: &AcceptanceSettings) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for name in ["perturbed-trivial", "g-perturbed", "delta-perturbed"] {
        let c = load(s, name)?;
        let fam = c.family()?.clone();
        let y = first_y(&c)?;
        let r = c.config.experiment.r_claimed.unwrap_or(2);
        let x_c = match solve(&c.problem()?, &y, &c.x0(), &c.config.solver) {
            Ok(res) => res.x_c,
            Err(e) => {
                checks.push(Check::failed(format!("{name} base solve"), e.to_string()));
                continue;
            }
        };
        let mut predicted = None;
        let label = format!("{name} predicted vs measured");
        checks.push(attempt(&label, || {
            let u = predict_solution_residual(&assemble_residual_system(&fam, &x_c, &y, r, AssemblyOptions::default())?)?;
            let measured = verify_gamma_contact(&fam, &y, r, &x_c, &GammaSettings::default())?.estimate.residual;
            let rel = max_abs(&(&u - &measured)) / (1.0 + max_abs(&measured));
            predicted = Some(u);
            Ok(Check::within(&label, rel, 1e-4))
        }));
        if let Some(u) = predicted {
            let label = format!("{name} index swap");
            checks.push(attempt(&label, || {
                let opts = AssemblyOptions { index: Member::Second, ..Default::default() };
                let u2 = predict_solution_residual(&assemble_residual_system(&fam, &x_c, &y, r, opts)?)?;
                Ok(Check::within(&label, max_abs(&(&u2 - &u)) / max_abs(&u).max(1.0), 1e-6))
            }));
        }
    }
    Ok(checks)
}

fn criterion_10(s: &AcceptanceSettings) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let settings = EquivarianceSettings { seed: s.seed, ..Default::default() };
    let run = |name: &str| -> Result<(Compiled, Result<crate::variation::EquivarianceReport>)> {
        let c = load(s, name)?;
        let group = c.group.clone().ok_or_else(|| Error::Config(format!("{name} declares no group")))?;
        let y = first_y(&c)?;
        let r = c.config.experiment.r_claimed.unwrap_or(2);
        let out = equivariance_check(c.family()?, &group, &y, r, &c.x0(), &settings);
        Ok((c, out))
    };
    let (_, sym) = run("reflection-symmetric")?;
    checks.push(match sym {
        Ok(rep) => Check::within("reflection-symmetric discrepancy", rep.max_measured_discrepancy, 1e-8),
        Err(e) => Check::failed("reflection-symmetric discrepancy", e.to_string()),
    });
    let (_, odd) = run("odd-perturbation")?;
    checks.push(match odd {
        Err(Error::HypothesisViolated { hypothesis, .. }) => {
            Check::new("odd-perturbation rejected by residual precheck", hypothesis == "alpha residual equivariance")
                .with_detail(hypothesis)
        }
        Err(e) => Check::failed("odd-perturbation rejected by residual precheck", e.to_string()),
        Ok(_) => Check::failed("odd-perturbation rejected by residual precheck", "check passed unexpectedly"),
    });
    Ok(checks)
}

/// Run one criterion. Criterion 11 reruns 1 through 10.
pub fn run_criterion(id: u8, s: &AcceptanceSettings) -> Result<Criterion> {
    let checks = match id {
        1 => criterion_1(s)?,
        2 => criterion_2(s)?,
        3 => criterion_3()?,
        4 => criterion_4(s)?,
        5 => criterion_5()?,
        6 => criterion_6(s)?,
        7 => criterion_7(s)?,
        8 => criterion_8(s)?,
        9 => criterion_9(s)?,
        10 => criterion_10(s)?,
        11 => {
            let first = run_range(s)?;
            let second = run_range(s)?;
            end_to_end_checks(&first, &second)
        }
        _ => return Err(Error::InvalidArgument(format!("no criterion {id}"))),
    };
    Ok(Criterion::new(id, checks))
}

fn run_range(s: &AcceptanceSettings) -> Result<Vec<Criterion>> {
    (1..=10).map(|id| run_criterion(id, s)).collect()
}

fn criteria_hash(c: &[Criterion]) -> String {
    sha256_hex(serde_json::to_string(c).expect("criteria serialize").as_bytes())
}

fn end_to_end_checks(first: &[Criterion], second: &[Criterion]) -> Vec<Check> {
    let failing: Vec<String> = first.iter().filter(|c| !c.passed).map(|c| c.id.to_string()).collect();
    let mut all = Check::new("criteria 1-10 pass", failing.is_empty());
    if !failing.is_empty() {
        all = all.with_detail(format!("failing: {}", failing.join(",")));
    }
    let (h1, h2) = (criteria_hash(first), criteria_hash(second));
    let same = Check::new("repeat run gives the same hash", h1 == h2).with_detail(h1);
    vec![all, same]
}

/// Run a suite. `on_criterion` sees each result as soon as it is ready.
pub fn run_suite(suite: Suite, s: &AcceptanceSettings, mut on_criterion: impl FnMut(&Criterion)) -> Result<Vec<Criterion>> {
    let mut out = Vec::new();
    for id in suite.criteria() {
        let c = if id == 11 {
            // reuse the run of 1..=10 already in `out`
            let second = run_range(s)?;
            Criterion::new(11, end_to_end_checks(&out, &second))
        } else {
            run_criterion(id, s)?
        };
        on_criterion(&c);
        out.push(c);
    }
    Ok(out)
}

/// Hash of every config a suite reads.
pub fn suite_config_hash(suite: Suite, source: &ConfigSource) -> Result<String> {
    let mut names: Vec<&str> = suite.criteria().into_iter().flat_map(configs_for).copied().collect();
    names.sort_unstable();
    names.dedup();
    let mut text = String::new();
    for name in names {
        text.push_str(name);
        text.push('\n');
        text.push_str(&source.raw(name)?);
    }
    Ok(sha256_hex(text.as_bytes()))
}

/// Build the JSON report of a finished suite.
pub fn suite_report(suite: Suite, s: &AcceptanceSettings, criteria: &[Criterion]) -> Result<Report> {
    let mut report = Report::new(format!("verify --suite {}", suite.name()));
    report.config_hash = Some(suite_config_hash(suite, &s.source)?);
    report.seed = Some(s.seed);
    report.results = serde_json::to_value(criteria).expect("criteria serialize");
    report.checks = criteria
        .iter()
        .map(|c| Check::new(format!("criterion {} {}", c.id, c.name), c.passed))
        .collect();
    Ok(report)
}
