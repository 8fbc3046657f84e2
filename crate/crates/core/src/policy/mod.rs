//! Online policies and a factory to build them by name.

pub mod augmented;
pub mod classic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::instance::{Job, PredictionSet};
use crate::sim::Policy;
use crate::tour::{SolverConfig, SolverKind, DEFAULT_EXACT_CAP, MST_NU};

pub use augmented::{AlgoHl, DelayTrust, PrCore, PredictReplan, SmartTrust};
pub use classic::{Ignore, Mrin, Replan, SmartStart, WaitCore, WaitRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    Replan,
    Ignore,
    Smartstart,
    Mrin,
    PredictReplan,
    DelayTrust,
    SmartTrust,
    PolyPr,
    Algohl,
}

impl Algo {
    pub const ALL: [Algo; 9] = [
        Algo::Replan,
        Algo::Ignore,
        Algo::Smartstart,
        Algo::Mrin,
        Algo::PredictReplan,
        Algo::DelayTrust,
        Algo::SmartTrust,
        Algo::PolyPr,
        Algo::Algohl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Replan => "replan",
            Algo::Ignore => "ignore",
            Algo::Smartstart => "smartstart",
            Algo::Mrin => "mrin",
            Algo::PredictReplan => "predict-replan",
            Algo::DelayTrust => "delay-trust",
            Algo::SmartTrust => "smart-trust",
            Algo::PolyPr => "poly-pr",
            Algo::Algohl => "algohl",
        }
    }

    pub fn uses_prediction(self) -> bool {
        !matches!(self, Algo::Replan | Algo::Ignore | Algo::Smartstart | Algo::Mrin)
    }

    pub fn uses_alpha(self) -> bool {
        matches!(self, Algo::DelayTrust | Algo::SmartTrust | Algo::Algohl)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown algorithm '{s}'"))
    }
}

/// Proven competitive ratio of a prediction-free policy, if one applies.
pub fn certified_ratio(algo: Algo, approx: bool) -> Option<f64> {
    match (algo, approx) {
        (Algo::Replan, false) => Some(2.5),
        (Algo::Replan, true) => Some(1.5 + MST_NU),
        (Algo::Ignore, false) => Some(2.5),
        (Algo::Smartstart, false) => Some(2.0),
        (Algo::Mrin, _) => Some(1.5),
        _ => None,
    }
}

fn default_alpha() -> f64 {
    0.5
}

fn default_sub() -> Algo {
    Algo::Smartstart
}

fn default_true() -> bool {
    true
}

fn default_cap() -> usize {
    DEFAULT_EXACT_CAP
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgoConfig {
    pub algo: Algo,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_sub")]
    pub sub: Algo,
    /// Use the tree-doubling tour instead of the exact solver.
    #[serde(default)]
    pub approx: bool,
    /// Drop predictions already known to be absent.
    #[serde(default = "default_true")]
    pub practical: bool,
    #[serde(default = "default_cap")]
    pub exact_cap: usize,
}

impl AlgoConfig {
    pub fn new(algo: Algo) -> Self {
        AlgoConfig {
            algo,
            alpha: default_alpha(),
            sub: default_sub(),
            approx: false,
            practical: true,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn sub(mut self, sub: Algo) -> Self {
        self.sub = sub;
        self
    }

    pub fn approx(mut self, approx: bool) -> Self {
        self.approx = approx;
        self
    }

    pub fn practical(mut self, on: bool) -> Self {
        self.practical = on;
        self
    }

    pub fn exact_cap(mut self, cap: usize) -> Self {
        self.exact_cap = cap;
        self
    }

    pub fn solver(&self) -> SolverConfig {
        let kind = if self.approx { SolverKind::Approx } else { SolverKind::Exact };
        SolverConfig { kind, exact_cap: self.exact_cap }
    }

    /// Short label used in reports, e.g. `delay-trust(replan)`.
    pub fn label(&self) -> String {
        let mut s = match self.algo {
            Algo::DelayTrust => format!("delay-trust({})", self.sub),
            a => a.to_string(),
        };
        if self.approx && self.algo != Algo::PolyPr {
            s.push_str("~approx");
        }
        s
    }

    /// Subroutine bound for the trust framework, or the policy's own bound.
    pub fn certified_ratio(&self) -> Option<f64> {
        match self.algo {
            Algo::DelayTrust => certified_ratio(self.sub, self.approx),
            Algo::SmartTrust => None,
            a => certified_ratio(a, self.approx),
        }
    }

    fn predicted_jobs(prediction: Option<&PredictionSet>) -> Result<Vec<Job>, SimError> {
        match prediction {
            Some(p) => Ok(p.requests()?.jobs()),
            None => Err(SimError::Policy("this algorithm needs a prediction".into())),
        }
    }

    fn check_alpha(&self) -> Result<(), SimError> {
        if self.alpha > 0.0 && self.alpha.is_finite() {
            Ok(())
        } else {
            Err(SimError::Policy(format!("alpha must be positive, got {}", self.alpha)))
        }
    }

    pub fn build(&self, prediction: Option<&PredictionSet>) -> Result<Box<dyn Policy>, SimError> {
        let solver = self.solver();
        Ok(match self.algo {
            Algo::Replan => Box::new(Replan::new(solver)),
            Algo::Ignore => Box::new(Ignore::new(solver)),
            Algo::Smartstart => Box::new(SmartStart::new(solver)),
            Algo::Mrin => Box::new(Mrin),
            Algo::PredictReplan => {
                let jobs = Self::predicted_jobs(prediction)?;
                if self.approx {
                    Box::new(PredictReplan::poly(jobs, self.exact_cap, self.practical))
                } else {
                    Box::new(PredictReplan::new(jobs, solver, self.practical))
                }
            }
            Algo::PolyPr => {
                let jobs = Self::predicted_jobs(prediction)?;
                Box::new(PredictReplan::poly(jobs, self.exact_cap, self.practical))
            }
            Algo::DelayTrust => {
                self.check_alpha()?;
                if self.sub.uses_prediction() {
                    return Err(SimError::Policy(format!("subroutine {} uses predictions", self.sub)));
                }
                let jobs = Self::predicted_jobs(prediction)?;
                let sub = AlgoConfig { algo: self.sub, ..*self }.build(None)?;
                let p = DelayTrust::new(jobs, self.alpha, sub, solver, self.practical);
                Box::new(if self.approx { p.poly() } else { p })
            }
            Algo::SmartTrust => {
                self.check_alpha()?;
                let jobs = Self::predicted_jobs(prediction)?;
                let p = SmartTrust::new(jobs, self.alpha, solver, self.practical);
                Box::new(if self.approx { p.poly() } else { p })
            }
            Algo::Algohl => match prediction {
                Some(PredictionSet::Makespan(c)) => Box::new(AlgoHl::new(*c, self.alpha)?),
                _ => return Err(SimError::Policy("algohl needs a scalar makespan prediction".into())),
            },
        })
    }
}
