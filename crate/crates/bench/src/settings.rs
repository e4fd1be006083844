use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use oseen::forms::{validate_params, Element, ProblemParams};
use oseen::saddle::{InnerSolver, Linearization, SolverConfig};

use crate::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Twist,
    ContinueK2,
    ContinueQ0,
    Constraint,
    Convergence,
    Spectra,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Twist,
        Experiment::ContinueK2,
        Experiment::ContinueQ0,
        Experiment::Constraint,
        Experiment::Convergence,
        Experiment::Spectra,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Twist => "twist",
            Experiment::ContinueK2 => "continue-k2",
            Experiment::ContinueQ0 => "continue-q0",
            Experiment::Constraint => "constraint",
            Experiment::Convergence => "convergence",
            Experiment::Spectra => "spectra",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| BenchError::Config(format!("unknown experiment '{s}'")))
    }
}

/// Everything an experiment needs. Built from per-experiment defaults, then a
/// config file, then command-line flags.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub experiment: Experiment,
    pub refs: Vec<usize>,
    pub gammas: Vec<f64>,
    pub inner: InnerSolver,
    pub linearization: Linearization,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub q0: f64,
    pub element: Element,
    pub atol: f64,
    pub rtol: f64,
    /// Continuation step.
    pub step: f64,
    pub out: Option<PathBuf>,
    pub deterministic: bool,
}


impl Settings {
    pub fn defaults(experiment: Experiment) -> Self {
        let base = Self {
            experiment,
            refs: vec![1, 2],
            gammas: vec![1e3, 1e4, 1e5, 1e6],
            inner: InnerSolver::Lu,
            linearization: Linearization::Picard,
            k1: 1.0,
            k2: 1.2,
            k3: 1.0,
            q0: 0.0,
            element: Element::P2P1,
            atol: 1e-8,
            rtol: 1e-4,
            step: 0.5,
            out: None,
            deterministic: false,
        };
        match experiment {
            Experiment::Twist => base,
            Experiment::ContinueK2 | Experiment::ContinueQ0 => Self { refs: vec![1], gammas: vec![1e6], ..base },
            Experiment::Constraint => Self {
                refs: vec![1],
                gammas: vec![0.0, 1e2, 1e3, 1e4, 1e5, 1e6],
                element: Element::P1P1,
                k2: 1.0,
                ..base
            },
            Experiment::Convergence => {
                Self { refs: vec![1, 2, 3, 4], gammas: vec![1e4, 1e5, 1e6], inner: InnerSolver::MgPbj, atol: 1e-10, ..base }
            }
            Experiment::Spectra => Self { refs: vec![1, 2], gammas: vec![0.0, 1e6], element: Element::P1P1, ..base },
        }
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| BenchError::Config(format!("{key}: {what} '{value}'"));
        let float = |v: &str| v.trim().parse::<f64>().map_err(|_| bad("not a number"));
        match key {
            "refs" => {
                self.refs = value
                    .split(',')
                    .map(|v| v.trim().parse::<usize>().map_err(|_| bad("not a refinement list")))
                    .collect::<Result<_>>()?
            }
            "gamma" => self.gammas = value.split(',').map(float).collect::<Result<_>>()?,
            "inner" => self.inner = value.trim().parse().map_err(|_| bad("unknown inner solver"))?,
            "linearization" => self.linearization = value.trim().parse().map_err(|_| bad("unknown linearization"))?,
            "k1" => self.k1 = float(value)?,
            "k2" => self.k2 = float(value)?,
            "k3" => self.k3 = float(value)?,
            "q0" => self.q0 = float(value)?,
            "element" => self.element = value.trim().parse().map_err(|_| bad("unknown element"))?,
            "atol" => self.atol = float(value)?,
            "rtol" => self.rtol = float(value)?,
            "step" => self.step = float(value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "deterministic" => {
                self.deterministic = match value.trim() {
                    "" | "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad("not a boolean")),
                }
            }
            _ => return Err(BenchError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected key=value", i + 1)))?;
            let k = k.trim().replace('-', "_");
            if k == "config" {
                return Err(BenchError::Config(format!("line {}: nested config files are not supported", i + 1)));
            }
            self.set(&k, v)?;
        }
        Ok(())
    }

    pub fn params(&self, gamma: f64) -> ProblemParams {
        ProblemParams::new(self.k1, self.k2, self.k3, self.q0, gamma)
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            linearization: self.linearization,
            inner: self.inner,
            atol: self.atol,
            rtol: self.rtol,
            ..SolverConfig::default()
        }
    }

    /// Rejects settings no experiment can run; parameter warnings are logged.
    pub fn validate(&self) -> Result<()> {
        if self.refs.is_empty() || self.gammas.is_empty() {
            return Err(BenchError::Config("refinement and gamma lists must be non-empty".into()));
        }
        if self.refs.iter().any(|&r| r > 6) {
            return Err(BenchError::Config("at most 6 refinements are supported".into()));
        }
        if !(self.step > 0.0) {
            return Err(BenchError::Config(format!("step must be positive, got {}", self.step)));
        }
        self.solver().validate()?;
        for &g in &self.gammas {
            for w in validate_params(&self.params(g))? {
                log::warn!("{w}");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_overrides_defaults() {
        let mut s = Settings::defaults(Experiment::Twist);
        s.apply_config("# comment\nrefs = 1,3\ngamma=1e2, 1e6\ninner=mg-star\n\nk2=2.5 # trailing\nout=x.csv\n").unwrap();
        assert_eq!(s.refs, vec![1, 3]);
        assert_eq!(s.gammas, vec![1e2, 1e6]);
        assert_eq!(s.inner, InnerSolver::MgStar);
        assert_eq!(s.k2, 2.5);
        assert_eq!(s.out, Some(PathBuf::from("x.csv")));
        s.validate().unwrap();
    }

    #[test]
    fn bad_config_rejected() {
        let mut s = Settings::defaults(Experiment::Twist);
        assert!(s.apply_config("refs=a").is_err());
        assert!(s.apply_config("colour=blue").is_err());
        assert!(s.apply_config("no equals sign").is_err());
        assert!(s.apply_config("inner=vanka").is_err());
        s.set("k1", "-1").unwrap();
        assert!(s.validate().is_err());
        let mut s = Settings::defaults(Experiment::Twist);
        s.set("refs", "9").unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn experiment_names() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert_eq!(Settings::defaults(Experiment::Constraint).element, Element::P1P1);
    }
}
