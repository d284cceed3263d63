//! Run configuration: `[problem]`, `[quadrature]`, `[solver]` and
//! `[output]` sections of `key = value` lines, expressions quoted.
//!
//! ```toml
//! [problem]
//! f = "u^2*(exp(-u)+1)"
//! a = "t^2"
//! theta = 0.25
//!
//! [solver]
//! method = "auto"
//! starts = [0.1, 1.0, 10.0, 100.0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::Limit;
use crate::error::{Error, Result};
use crate::quadrature::{make_quadrature, Quadrature, Rule};
use crate::solver::{SolveConfig, Strategy, DEFAULT_POSITIVITY};

pub const DEFAULT_SEED: u64 = 20_160_601;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    pub theta: f64,
    /// Declared `lim_{u→0+} f(u)/u`: a number or `"inf"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finf: Option<String>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        Self {
            f: None,
            a: None,
            theta: 0.25,
            f0: None,
            finf: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub rule: String,
    pub panels: usize,
    pub points: usize,
}

impl Default for QuadratureSection {
    fn default() -> Self {
        Self {
            rule: "gauss".into(),
            panels: 8,
            points: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub method: Strategy,
    pub omega: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub starts: Vec<f64>,
    pub positivity: f64,
    pub oracle_n: usize,
    pub seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolveConfig::default();
        Self {
            method: s.strategy,
            omega: s.omega,
            tol: s.tol,
            max_iter: s.max_iter,
            starts: s.starts,
            positivity: DEFAULT_POSITIVITY,
            oracle_n: 401,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub solution_csv: String,
    pub report_json: String,
    pub green_csv: String,
    pub scorecard_json: String,
    pub certificate_json: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: None,
            solution_csv: "solution.csv".into(),
            report_json: "report.json".into(),
            green_csv: "green.csv".into(),
            scorecard_json: "scorecard.json".into(),
            certificate_json: "certificate.json".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub quadrature: QuadratureSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let th = self.problem.theta;
        if !(th > 0.0 && th < 0.5) {
            return Err(Error::InvalidConfig(format!("theta = {th} not in (0, 0.5)")));
        }
        let s = &self.solver;
        if s.tol.is_nan() || s.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tol = {} must be positive", s.tol)));
        }
        if !(s.omega > 0.0 && s.omega <= 1.0) {
            return Err(Error::InvalidConfig(format!("omega = {} not in (0, 1]", s.omega)));
        }
        if s.starts.is_empty() {
            return Err(Error::InvalidConfig("starts must not be empty".into()));
        }
        if s.oracle_n < 21 {
            return Err(Error::InvalidConfig(format!("oracle_n = {} below 21", s.oracle_n)));
        }
        self.quadrature_rule()?;
        self.declared_f0()?;
        self.declared_finf()?;
        Ok(())
    }

    pub fn quadrature_rule(&self) -> Result<Quadrature> {
        let rule: Rule = self.quadrature.rule.parse()?;
        make_quadrature(rule, self.quadrature.panels, self.quadrature.points)
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            strategy: self.solver.method,
            omega: self.solver.omega,
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            starts: self.solver.starts.clone(),
            positivity: self.solver.positivity,
        }
    }

    fn parse_limit(text: &Option<String>, name: &str) -> Result<Option<Limit>> {
        match text {
            None => Ok(None),
            Some(t) => Limit::parse(t)
                .map(Some)
                .ok_or_else(|| Error::InvalidConfig(format!("{name} = {t:?} is not a limit"))),
        }
    }

    pub fn declared_f0(&self) -> Result<Option<Limit>> {
        Self::parse_limit(&self.problem.f0, "f0")
    }

    pub fn declared_finf(&self) -> Result<Option<Limit>> {
        Self::parse_limit(&self.problem.finf, "finf")
    }

    pub fn output_path(&self, name: &str) -> Option<PathBuf> {
        self.output.dir.as_ref().map(|d| d.join(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::from_toml("").unwrap();
        assert_eq!(c.problem.theta, 0.25);
        assert_eq!((c.quadrature.panels, c.quadrature.points), (8, 4));
        assert_eq!(c.solver.omega, 0.8);
        assert_eq!(c.solver.tol, 1e-10);
        assert_eq!(c.solver.max_iter, 500);
        assert_eq!(c.solver.starts, vec![0.1, 1.0, 10.0, 100.0]);
        assert_eq!(c.solver.oracle_n, 401);
        assert_eq!(c.quadrature_rule().unwrap().len(), 32);
    }

    #[test]
    fn parses_sections() {
        let text = r#"
[problem]
f = "sqrt(1+u)+sin(u)"
a = "t"
theta = 0.3
finf = "0"

[quadrature]
rule = "simpson"
panels = 16
points = 3

[solver]
method = "newton"
starts = [1.0, 50.0]

[output]
dir = "runs/sublinear"
"#;
        let c = RunConfig::from_toml(text).unwrap();
        assert_eq!(c.problem.f.as_deref(), Some("sqrt(1+u)+sin(u)"));
        assert_eq!(c.solver.method, Strategy::Newton);
        assert_eq!(c.declared_finf().unwrap(), Some(Limit::Finite(0.0)));
        assert_eq!(c.quadrature_rule().unwrap().len(), 33);
        assert_eq!(c.output_path("x.csv"), Some(PathBuf::from("runs/sublinear/x.csv")));
    }

    #[test]
    fn rejects_invalid() {
        for text in [
            "[problem]\ntheta = 0.5",
            "[solver]\ntol = 0.0",
            "[solver]\nomega = 1.5",
            "[quadrature]\npoints = 12",
            "[problem]\nfoo = 1",
            "[problem]\nf0 = \"big\"",
            "not toml at all [",
        ] {
            assert!(RunConfig::from_toml(text).is_err(), "{text}");
        }
    }
}
