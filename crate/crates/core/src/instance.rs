//! Actual and predicted request sets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::InstanceError;
use crate::metric::{MetricSpace, PointId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub loc: PointId,
    pub release: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RideRequest {
    pub pickup: PointId,
    pub dropoff: PointId,
    pub release: f64,
}

/// Common shape used by solvers and the simulator: a point request is a ride of length zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub pickup: PointId,
    pub dropoff: PointId,
    pub release: f64,
}

impl Job {
    pub fn point(loc: PointId, release: f64) -> Self {
        Job { pickup: loc, dropoff: loc, release }
    }

    pub fn is_ride(&self) -> bool {
        self.pickup != self.dropoff
    }
}

impl From<Request> for Job {
    fn from(r: Request) -> Self {
        Job::point(r.loc, r.release)
    }
}

impl From<RideRequest> for Job {
    fn from(r: RideRequest) -> Self {
        Job { pickup: r.pickup, dropoff: r.dropoff, release: r.release }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Tsp,
    Darp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Requests {
    Tsp(Vec<Request>),
    Darp(Vec<RideRequest>),
}

impl Requests {
    pub fn kind(&self) -> Kind {
        match self {
            Requests::Tsp(_) => Kind::Tsp,
            Requests::Darp(_) => Kind::Darp,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Requests::Tsp(r) => r.len(),
            Requests::Darp(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn jobs(&self) -> Vec<Job> {
        match self {
            Requests::Tsp(r) => r.iter().map(|&x| x.into()).collect(),
            Requests::Darp(r) => r.iter().map(|&x| x.into()).collect(),
        }
    }

    pub fn empty(kind: Kind) -> Self {
        match kind {
            Kind::Tsp => Requests::Tsp(Vec::new()),
            Kind::Darp => Requests::Darp(Vec::new()),
        }
    }

    pub fn select(&self, idx: &[usize]) -> Requests {
        match self {
            Requests::Tsp(r) => Requests::Tsp(idx.iter().map(|&i| r[i]).collect()),
            Requests::Darp(r) => Requests::Darp(idx.iter().map(|&i| r[i]).collect()),
        }
    }

    fn validate(&self, space: &MetricSpace) -> Result<(), InstanceError> {
        for (index, j) in self.jobs().iter().enumerate() {
            if !(j.release.is_finite() && j.release >= 0.0) {
                return Err(InstanceError::BadRelease { index, release: j.release });
            }
            for p in [j.pickup, j.dropoff] {
                if !space.contains(p) {
                    return Err(InstanceError::BadPoint { index, point: p.0, n: space.n() });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub space: Arc<MetricSpace>,
    pub requests: Requests,
}

impl Instance {
    pub fn new(space: Arc<MetricSpace>, requests: Requests) -> Result<Self, InstanceError> {
        requests.validate(&space)?;
        Ok(Instance { space, requests })
    }

    pub fn tsp(space: Arc<MetricSpace>, requests: Vec<Request>) -> Result<Self, InstanceError> {
        Self::new(space, Requests::Tsp(requests))
    }

    pub fn darp(space: Arc<MetricSpace>, requests: Vec<RideRequest>) -> Result<Self, InstanceError> {
        Self::new(space, Requests::Darp(requests))
    }

    pub fn kind(&self) -> Kind {
        self.requests.kind()
    }

    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn jobs(&self) -> Vec<Job> {
        self.requests.jobs()
    }

    pub fn with_requests(&self, requests: Requests) -> Result<Self, InstanceError> {
        Self::new(self.space.clone(), requests)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictionSet {
    Requests(Requests),
    /// Half-line only: a single predicted optimal makespan.
    Makespan(f64),
}

impl PredictionSet {
    pub fn requests(&self) -> Result<&Requests, InstanceError> {
        match self {
            PredictionSet::Requests(r) => Ok(r),
            PredictionSet::Makespan(_) => Err(InstanceError::ScalarPrediction),
        }
    }

    pub fn perfect(actual: &Instance) -> Self {
        PredictionSet::Requests(actual.requests.clone())
    }

    /// Checks the prediction fits the instance's space and kind.
    pub fn validate(&self, actual: &Instance) -> Result<(), InstanceError> {
        match self {
            PredictionSet::Requests(r) => {
                if r.kind() != actual.kind() && !r.is_empty() {
                    return Err(InstanceError::KindMismatch);
                }
                r.validate(&actual.space)
            }
            PredictionSet::Makespan(c) => {
                if !actual.space.is_half_line() {
                    return Err(InstanceError::ScalarOffHalfLine);
                }
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(InstanceError::BadScalar(*c));
                }
                Ok(())
            }
        }
    }
}

/// One-to-one multiset matching by exact equality. Returns indices of
/// `a` without partner, indices of `b` without partner, and matched pairs.
pub fn match_identical<T: PartialEq>(a: &[T], b: &[T]) -> (Vec<usize>, Vec<usize>, Vec<(usize, usize)>) {
    let mut used = vec![false; b.len()];
    let mut a_only = Vec::new();
    let mut pairs = Vec::new();
    for (i, x) in a.iter().enumerate() {
        match (0..b.len()).find(|&j| !used[j] && b[j] == *x) {
            Some(j) => {
                used[j] = true;
                pairs.push((i, j));
            }
            None => a_only.push(i),
        }
    }
    let b_only = (0..b.len()).filter(|&j| !used[j]).collect();
    (a_only, b_only, pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSplit {
    pub unexpected: Requests,
    pub absent: Requests,
    pub correct: Requests,
}

pub fn split_errors(actual: &Instance, predicted: &PredictionSet) -> Result<ErrorSplit, InstanceError> {
    let pred = predicted.requests()?;
    let kind = actual.kind();
    let pred = if pred.is_empty() { Requests::empty(kind) } else { pred.clone() };
    if pred.kind() != kind {
        return Err(InstanceError::KindMismatch);
    }
    let (a_only, b_only, pairs) = match (&actual.requests, &pred) {
        (Requests::Tsp(a), Requests::Tsp(b)) => match_identical(a, b),
        (Requests::Darp(a), Requests::Darp(b)) => match_identical(a, b),
        _ => unreachable!(),
    };
    let correct: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    Ok(ErrorSplit {
        unexpected: actual.requests.select(&a_only),
        absent: pred.select(&b_only),
        correct: actual.requests.select(&correct),
    })
}

/// Longest ride among correctly predicted rides; 0 when there are none.
pub fn max_correct_ride(space: &MetricSpace, split: &ErrorSplit) -> f64 {
    split
        .correct
        .jobs()
        .iter()
        .map(|j| space.d(j.pickup, j.dropoff))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceFile {
    Tsp { origin: PointId, requests: Vec<Request> },
    Darp { origin: PointId, requests: Vec<RideRequest> },
}

impl InstanceFile {
    pub fn origin(&self) -> PointId {
        match self {
            InstanceFile::Tsp { origin, .. } | InstanceFile::Darp { origin, .. } => *origin,
        }
    }

    pub fn requests(&self) -> Requests {
        match self {
            InstanceFile::Tsp { requests, .. } => Requests::Tsp(requests.clone()),
            InstanceFile::Darp { requests, .. } => Requests::Darp(requests.clone()),
        }
    }

    pub fn from_requests(origin: PointId, requests: &Requests) -> Self {
        match requests {
            Requests::Tsp(r) => InstanceFile::Tsp { origin, requests: r.clone() },
            Requests::Darp(r) => InstanceFile::Darp { origin, requests: r.clone() },
        }
    }

    pub fn of(instance: &Instance) -> Self {
        Self::from_requests(instance.space.origin(), &instance.requests)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredictionFile {
    Scalar { makespan_prediction: f64 },
    Set(InstanceFile),
}

impl PredictionFile {
    pub fn into_prediction(self) -> PredictionSet {
        match self {
            PredictionFile::Scalar { makespan_prediction } => PredictionSet::Makespan(makespan_prediction),
            PredictionFile::Set(f) => PredictionSet::Requests(f.requests()),
        }
    }

    pub fn of(origin: PointId, p: &PredictionSet) -> Self {
        match p {
            PredictionSet::Makespan(c) => PredictionFile::Scalar { makespan_prediction: *c },
            PredictionSet::Requests(r) => PredictionFile::Set(InstanceFile::from_requests(origin, r)),
        }
    }
}

pub fn parse_instance_file(json: &str) -> Result<InstanceFile, InstanceError> {
    serde_json::from_str(json).map_err(|e| InstanceError::Parse(e.to_string()))
}

pub fn parse_prediction_file(json: &str) -> Result<PredictionFile, InstanceError> {
    serde_json::from_str(json).map_err(|e| InstanceError::Parse(e.to_string()))
}
