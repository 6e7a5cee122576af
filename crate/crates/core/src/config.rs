//! Strict JSON problem configurations.
//!
//! Expressions are strings in the expression language; `x1..xn` are the
//! chart coordinates, `p1..pk` refer to `params`, and `t` is available only
//! in configs that declare a second problem (a family).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contact::{h_sequence, AdaptedFamily};
use crate::error::{Error, Result};
use crate::exprlang::{parse, Dims, Expr};
use crate::geometry::{symbolic_problem, AmbientChart, SkewProblem};
use crate::numerics::{Matrix, Vector};
use crate::solver::NewtonSettings;
use crate::variation::{FamilyMember, GroupAction, Member, ProblemFamily};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartConfig {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    /// 1-based coordinates spanning the model fiber; defaults to the last `d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_coords: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub h0: f64,
    pub h_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_claimed: Option<usize>,
    pub y: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { h0: 0.1, h_count: 11, r_claimed: None, y: Vec::new(), x0: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub tau_m: Vec<Vec<f64>>,
    pub tau_n: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub generators: Vec<GeneratorConfig>,
}

/// Families compared directly, outside any skew problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CustomConfig {
    /// Two map families `(x, t) -> f_i(x, t)`.
    Maps {
        in_dim: usize,
        f1: Vec<String>,
        f2: Vec<String>,
        x: Vec<f64>,
        #[serde(default)]
        h_last: bool,
    },
    /// Two graph families `(x, t) -> (pi_1 gamma_i, pi_2 gamma_i)`.
    Graph { in_dim: usize, gamma1: Vec<String>, gamma2: Vec<String>, x: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<String>,
    /// `(n - d)` rows of `d` entries.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub g: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta2: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<Vec<String>>,
    #[serde(default)]
    pub solver: NewtonSettings,
    #[serde(default)]
    pub experiment: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<GroupConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomConfig>,
}

/// Families of a [`CustomConfig`], ready for the contact routines.
#[derive(Debug, Clone)]
pub enum CompiledCustom {
    Maps { f1: AdaptedFamily, f2: AdaptedFamily, x: Vector },
    Graph { gamma1: AdaptedFamily, gamma2: AdaptedFamily, x: Vector },
}

/// A validated config with every expression parsed.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub config: ProblemConfig,
    pub chart: Option<AmbientChart>,
    pub base: Option<FamilyMember>,
    pub family: Option<ProblemFamily>,
    pub group: Option<GroupAction>,
    pub custom: Option<CompiledCustom>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_list(field: &str, srcs: &[String], dims: Dims, params: &[f64]) -> Result<Vec<Expr>> {
    srcs.iter()
        .enumerate()
        .map(|(i, s)| {
            parse(s, dims).map(|e| e.bind_params(params)).map_err(|e| config_err(format!("{field}[{}]: {e}", i + 1)))
        })
        .collect()
}

fn matrix(field: &str, rows: &[Vec<f64>], n: usize) -> Result<Matrix> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(config_err(format!("{field} must be {n}x{n}")));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl ProblemConfig {
    pub fn from_json(src: &str) -> Result<Self> {
        let cfg: ProblemConfig = serde_json::from_str(src).map_err(|e| config_err(e.to_string()))?;
        if cfg.version != CONFIG_VERSION {
            return Err(config_err(format!("unsupported version {} (expected {CONFIG_VERSION})", cfg.version)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&src)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn is_family(&self) -> bool {
        self.alpha2.is_some() || self.delta2.is_some() || self.g2.is_some()
    }

    pub fn h_seq(&self) -> Vec<f64> {
        h_sequence(self.experiment.h0, self.experiment.h_count)
    }

    /// Parse and dimension-check everything.
    pub fn compile(&self) -> Result<Compiled> {
        self.solver.validate().map_err(|e| config_err(e.to_string()))?;
        let exp = &self.experiment;
        if !(exp.h0 > 0.0) || exp.h_count < 3 {
            return Err(config_err("experiment needs h0 > 0 and h_count >= 3"));
        }
        let family_flag = self.is_family();
        let mut out = Compiled {
            config: self.clone(),
            chart: None,
            base: None,
            family: None,
            group: None,
            custom: None,
        };

        if let Some(c) = &self.chart {
            let chart = match &c.fiber_coords {
                Some(coords) => {
                    if coords.len() != c.d || coords.contains(&0) {
                        return Err(config_err("fiber_coords must list d coordinates, 1-based"));
                    }
                    AmbientChart::with_fiber(c.n, c.m, coords.iter().map(|k| k - 1).collect())
                }
                None => AmbientChart::new(c.n, c.m, c.d),
            }
            .map_err(|e| config_err(e.to_string()))?;
            let dims = Dims { n: c.n, params: self.params.len(), allow_t: family_flag };
            let member = |alpha: &[String], delta: &[Vec<String>], g: &[String], tag: &str| -> Result<FamilyMember> {
                if alpha.len() != c.n {
                    return Err(config_err(format!("alpha{tag} needs {} entries, got {}", c.n, alpha.len())));
                }
                if g.len() != c.m {
                    return Err(config_err(format!("g{tag} needs {} entries, got {}", c.m, g.len())));
                }
                if delta.len() != c.n - c.d || delta.iter().any(|r| r.len() != c.d) {
                    return Err(config_err(format!("delta{tag} must be {}x{}", c.n - c.d, c.d)));
                }
                let flat: Vec<String> = delta.iter().flatten().cloned().collect();
                Ok(FamilyMember {
                    alpha: parse_list(&format!("alpha{tag}"), alpha, dims, &self.params)?,
                    delta: parse_list(&format!("delta{tag}"), &flat, dims, &self.params)?,
                    g: parse_list(&format!("g{tag}"), g, dims, &self.params)?,
                })
            };
            let first = member(&self.alpha, &self.delta, &self.g, "")?;
            if family_flag {
                let second = member(
                    self.alpha2.as_deref().unwrap_or(&self.alpha),
                    self.delta2.as_deref().unwrap_or(&self.delta),
                    self.g2.as_deref().unwrap_or(&self.g),
                    "2",
                )?;
                out.family = Some(ProblemFamily::new(chart.clone(), first.clone(), second)?);
            }
            for y in &exp.y {
                if y.len() != c.m {
                    return Err(config_err(format!("experiment y values need {} entries", c.m)));
                }
            }
            if let Some(x0) = &exp.x0 {
                if x0.len() != c.n {
                    return Err(config_err(format!("experiment x0 needs {} entries", c.n)));
                }
            }
            if let Some(group) = &self.group {
                let gens = group
                    .generators
                    .iter()
                    .enumerate()
                    .map(|(k, g)| {
                        Ok((matrix(&format!("tau_m of generator {k}"), &g.tau_m, c.n)?, matrix(&format!("tau_n of generator {k}"), &g.tau_n, c.m)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                out.group = Some(GroupAction::new(gens)?);
            }
            out.base = Some(first);
            out.chart = Some(chart);
        } else if self.custom.is_none() {
            return Err(config_err("config needs a chart or a custom section"));
        } else if family_flag || self.group.is_some() || !self.alpha.is_empty() || !self.g.is_empty() || !self.delta.is_empty() {
            return Err(config_err("problem data given without a chart"));
        }

        if let Some(custom) = &self.custom {
            let dims = |in_dim| Dims { n: in_dim, params: self.params.len(), allow_t: true };
            out.custom = Some(match custom {
                CustomConfig::Maps { in_dim, f1, f2, x, h_last } => {
                    if f1.len() != f2.len() || f1.is_empty() || x.len() != *in_dim {
                        return Err(config_err("custom maps need equal-length f1/f2 and an in_dim point x"));
                    }
                    let mk = |srcs, tag| -> Result<AdaptedFamily> {
                        let fam = AdaptedFamily::symbolic(*in_dim, parse_list(tag, srcs, dims(*in_dim), &self.params)?);
                        Ok(if *h_last { fam.with_h_last() } else { fam })
                    };
                    CompiledCustom::Maps { f1: mk(f1, "f1")?, f2: mk(f2, "f2")?, x: Vector::from_column_slice(x) }
                }
                CustomConfig::Graph { in_dim, gamma1, gamma2, x } => {
                    if gamma1.len() != 2 * in_dim || gamma2.len() != 2 * in_dim || x.len() != *in_dim {
                        return Err(config_err("custom graphs need 2*in_dim components and an in_dim point x"));
                    }
                    let mk = |srcs, tag| -> Result<AdaptedFamily> {
                        Ok(AdaptedFamily::symbolic(*in_dim, parse_list(tag, srcs, dims(*in_dim), &self.params)?))
                    };
                    CompiledCustom::Graph {
                        gamma1: mk(gamma1, "gamma1")?,
                        gamma2: mk(gamma2, "gamma2")?,
                        x: Vector::from_column_slice(x),
                    }
                }
            });
        }
        Ok(out)
    }
}

impl Compiled {
    /// The problem of the config, or the `t = 0` problem of a family.
    pub fn problem(&self) -> Result<SkewProblem> {
        let (Some(chart), Some(base)) = (&self.chart, &self.base) else {
            return Err(config_err("config declares no problem"));
        };
        match &self.family {
            Some(fam) => fam.problem_at(Member::First, 0.0),
            None => symbolic_problem(chart.clone(), base.alpha.clone(), base.delta.clone(), base.g.clone(), 0.0),
        }
    }

    pub fn family(&self) -> Result<&ProblemFamily> {
        self.family.as_ref().ok_or_else(|| config_err("config declares no family"))
    }

    pub fn y_values(&self) -> Vec<Vector> {
        self.config.experiment.y.iter().map(|y| Vector::from_column_slice(y)).collect()
    }

    /// Configured start point, or the origin.
    pub fn x0(&self) -> Vector {
        let n = self.chart.as_ref().map(|c| c.n).unwrap_or(0);
        match &self.config.experiment.x0 {
            Some(x) => Vector::from_column_slice(x),
            None => Vector::zeros(n),
        }
    }

    pub fn h_seq(&self) -> Vec<f64> {
        self.config.h_seq()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIVIAL: &str = r#"{
        "version": 1,
        "chart": {"n": 2, "m": 1, "d": 1},
        "alpha": ["x1", "x2"],
        "delta": [["0"]],
        "g": ["x1"]
    }"#;

    #[test]
    fn loads_minimal_problem() {
        let cfg = ProblemConfig::from_json(TRIVIAL).unwrap();
        assert!(!cfg.is_family());
        let c = cfg.compile().unwrap();
        let p = c.problem().unwrap();
        let (a, g) = p.f_map(&Vector::from_row_slice(&[0.7, 0.2])).unwrap();
        assert_eq!((a[0], g[0]), (0.2, 0.7));
        assert!(c.family().is_err());
    }

    #[test]
    fn rejects_unknown_fields_and_versions() {
        let extra = TRIVIAL.replace("\"version\": 1,", "\"version\": 1, \"colour\": 3,");
        assert_eq!(ProblemConfig::from_json(&extra).unwrap_err().kind(), "ConfigError");
        let v2 = TRIVIAL.replace("\"version\": 1", "\"version\": 2");
        assert!(ProblemConfig::from_json(&v2).unwrap_err().to_string().contains("version"));
        let comment = format!("// hi\n{TRIVIAL}");
        assert!(ProblemConfig::from_json(&comment).is_err());
    }

    #[test]
    fn dimension_errors_before_numerics() {
        let bad = TRIVIAL.replace(r#"["x1", "x2"]"#, r#"["x1"]"#);
        let err = ProblemConfig::from_json(&bad).unwrap().compile().unwrap_err();
        assert!(err.to_string().contains("alpha needs 2"));
        let bad = TRIVIAL.replace(r#""g": ["x1"]"#, r#""g": ["x3"]"#);
        let err = ProblemConfig::from_json(&bad).unwrap().compile().unwrap_err();
        assert!(err.to_string().contains("g[1]"), "{err}");
    }

    #[test]
    fn t_only_in_families() {
        let with_t = TRIVIAL.replace(r#""g": ["x1"]"#, r#""g": ["x1 + t"]"#);
        assert!(ProblemConfig::from_json(&with_t).unwrap().compile().is_err());
        let fam = TRIVIAL.replace(r#""g": ["x1"]"#, r#""g": ["x1"], "alpha2": ["x1", "x2 + p1*t^2"], "params": [2.0]"#);
        let c = ProblemConfig::from_json(&fam).unwrap().compile().unwrap();
        let f = c.family().unwrap();
        let p = f.problem_at(Member::Second, 0.5).unwrap();
        let (a, _) = p.f_map(&Vector::from_row_slice(&[0.0, 0.0])).unwrap();
        assert_eq!(a[0], 0.5);
    }

    #[test]
    fn fiber_coords_are_one_based() {
        let first = TRIVIAL.replace(r#""d": 1}"#, r#""d": 1, "fiber_coords": [1]}"#);
        let c = ProblemConfig::from_json(&first).unwrap().compile().unwrap();
        let (a, _) = c.problem().unwrap().f_map(&Vector::from_row_slice(&[0.3, 0.2])).unwrap();
        assert_eq!(a[0], 0.3);
    }

    #[test]
    fn round_trip() {
        let cfg = ProblemConfig::from_json(TRIVIAL).unwrap();
        assert_eq!(ProblemConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn custom_only_configs() {
        let src = r#"{"version": 1, "custom": {"kind": "maps", "in_dim": 1, "f1": ["x1"], "f2": ["x1 + t^2"], "x": [0.5]}}"#;
        let c = ProblemConfig::from_json(src).unwrap().compile().unwrap();
        assert!(matches!(c.custom, Some(CompiledCustom::Maps { .. })));
        assert!(c.problem().is_err());
    }
}
