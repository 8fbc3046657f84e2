//! Lower-bound constructions with their predictions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::gen::half_line_instance;
use crate::instance::{Instance, PredictionSet, Request, Requests};
use crate::metric::line_space;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdversarialKind {
    /// Consistency forces the server away from a request at the origin.
    Tradeoff,
    /// A prediction that lures the waiting rule into trusting too early.
    Smarttrust,
    /// Half-line request just after the trust boundary.
    Algohl,
}

impl fmt::Display for AdversarialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversarialKind::Tradeoff => "tradeoff",
            AdversarialKind::Smarttrust => "smarttrust",
            AdversarialKind::Algohl => "algohl",
        })
    }
}

impl FromStr for AdversarialKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tradeoff" => Ok(AdversarialKind::Tradeoff),
            "smarttrust" => Ok(AdversarialKind::Smarttrust),
            "algohl" => Ok(AdversarialKind::Algohl),
            _ => Err(format!("unknown adversarial kind '{s}'")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adversarial {
    pub instance: Instance,
    pub prediction: PredictionSet,
    /// Same prediction, different truth: only the request at the origin.
    pub companion: Option<Instance>,
}

fn bad(msg: String) -> BenchError {
    BenchError::Param(msg)
}

pub fn adversarial(kind: AdversarialKind, alpha: f64, eps: f64) -> Result<Adversarial, BenchError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(bad(format!("eps must be positive, got {eps}")));
    }
    match kind {
        AdversarialKind::Tradeoff => {
            if !(alpha > 0.0 && alpha < 0.5) {
                return Err(bad(format!("tradeoff needs alpha in (0, 1/2), got {alpha}")));
            }
            if eps > 1.0 - 2.0 * alpha {
                return Err(bad(format!("tradeoff needs eps <= 1 - 2 alpha, got {eps}")));
            }
            let space = Arc::new(line_space(&[0.0, 1.0], 0.0)?);
            let at_origin = Request { loc: space.origin(), release: 2.0 * alpha + eps };
            let far = Request { loc: space.point_at(1.0).expect("point 1"), release: 1.0 };
            let instance = Instance::tsp(space.clone(), vec![at_origin, far])?;
            let companion = Instance::tsp(space, vec![at_origin])?;
            Ok(Adversarial { prediction: PredictionSet::perfect(&instance), instance, companion: Some(companion) })
        }
        AdversarialKind::Smarttrust => {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(bad(format!("alpha must be positive, got {alpha}")));
            }
            let x = alpha / 4.0 + eps;
            let space = Arc::new(line_space(&[-0.5, x], 0.0)?);
            let actual = Request { loc: space.point_at(x).expect("request point"), release: alpha / 4.0 };
            let predicted = Request { loc: space.point_at(-0.5).expect("predicted point"), release: 0.5 };
            let instance = Instance::tsp(space, vec![actual])?;
            Ok(Adversarial { instance, prediction: PredictionSet::Requests(Requests::Tsp(vec![predicted])), companion: None })
        }
        AdversarialKind::Algohl => {
            if !(alpha > 0.0 && alpha <= 0.5) {
                return Err(bad(format!("algohl needs alpha in (0, 1/2], got {alpha}")));
            }
            let instance = half_line_instance(&[(alpha / 3.0, alpha / 3.0 + eps)])?;
            Ok(Adversarial { instance, prediction: PredictionSet::Makespan(1.0), companion: None })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(inst: &Instance) -> Vec<(f64, f64)> {
        inst.jobs().iter().map(|j| (inst.space.coord(j.pickup).unwrap(), j.release)).collect()
    }

    #[test]
    fn tradeoff_example() {
        let a = adversarial(AdversarialKind::Tradeoff, 0.25, 0.1).unwrap();
        assert_eq!(coords(&a.instance), vec![(0.0, 0.6), (1.0, 1.0)]);
        assert_eq!(coords(a.companion.as_ref().unwrap()), vec![(0.0, 0.6)]);
        assert!(adversarial(AdversarialKind::Tradeoff, 0.25, 0.6).is_err());
        assert!(adversarial(AdversarialKind::Tradeoff, 0.5, 0.0001).is_err());
    }

    #[test]
    fn smarttrust_example() {
        let a = adversarial(AdversarialKind::Smarttrust, 0.5, 1e-3).unwrap();
        assert_eq!(coords(&a.instance), vec![(0.126, 0.125)]);
    }

    #[test]
    fn algohl_example() {
        let a = adversarial(AdversarialKind::Algohl, 0.3, 1e-4).unwrap();
        let c = coords(&a.instance);
        assert!((c[0].0 - 0.1).abs() < 1e-15 && (c[0].1 - 0.1001).abs() < 1e-15);
        assert!(a.instance.space.is_half_line());
        assert_eq!(a.prediction, PredictionSet::Makespan(1.0));
    }
}
