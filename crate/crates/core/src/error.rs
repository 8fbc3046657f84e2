use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distance matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("distance matrix is empty")]
    Empty,
    #[error("entry ({i}, {j}) = {value} is negative or not finite")]
    BadEntry { i: usize, j: usize, value: f64 },
    #[error("nonzero diagonal at {i}: {value}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("asymmetric distances: d({i},{j}) = {a} but d({j},{i}) = {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },
    #[error("triangle inequality violated: d({i},{k}) = {direct} > d({i},{j}) + d({j},{k}) = {via}")]
    Triangle { i: usize, j: usize, k: usize, direct: f64, via: f64 },
    #[error("origin {origin} out of range for {n} points")]
    BadOrigin { origin: usize, n: usize },
    #[error("edge ({u}, {v}) has non-positive or non-finite weight {w}")]
    BadWeight { u: usize, v: usize, w: f64 },
    #[error("edge ({u}, {v}) references a node outside 0..{n}")]
    BadNode { u: usize, v: usize, n: usize },
    #[error("cannot parse metric input: {0}")]
    Parse(String),
    #[error("graph is disconnected: no path from {from} to {to}")]
    Disconnected { from: usize, to: usize },
    #[error("half-line coordinate {value} at index {index} is negative")]
    NegativeCoordinate { index: usize, value: f64 },
    #[error("coordinate {value} at index {index} is not finite")]
    NonFiniteCoordinate { index: usize, value: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("request {index} has invalid release {release}")]
    BadRelease { index: usize, release: f64 },
    #[error("request {index} references point {point} outside a space of {n} points")]
    BadPoint { index: usize, point: usize, n: usize },
    #[error("scalar makespan predictions are only defined on the half-line; use the half-line error path")]
    ScalarPrediction,
    #[error("scalar makespan prediction requires a half-line space")]
    ScalarOffHalfLine,
    #[error("predicted makespan {0} must be finite and non-negative")]
    BadScalar(f64),
    #[error("prediction kind does not match instance kind")]
    KindMismatch,
    #[error("malformed input: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TourError {
    #[error("{count} tour nodes exceed the exact-solver cap of {cap}; use approx_tour")]
    CapExceeded { count: usize, cap: usize },
    #[error("approximate tours support TSP requests only")]
    Unsupported,
    #[error("coordinate targets require a line space")]
    CoordOffLine,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverError {
    #[error("{count} uncovered elements exceed the cover cap of {cap}; use k = 1 or reduce the instance")]
    CapExceeded { count: usize, cap: usize },
    #[error("nothing to cover against: {0} elements but an empty right side")]
    EmptyRight(usize),
    #[error("oracle failed: {0}")]
    Oracle(String),
    #[error("{terminals} terminals exceed the oracle cap of {cap}")]
    TerminalCap { terminals: usize, cap: usize },
    #[error("matching sides of size {size} exceed cap {cap}")]
    MatchingCap { size: usize, cap: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Tour(#[from] TourError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("infeasible plan at t={time}: {reason}")]
    InfeasiblePlan { time: f64, reason: String },
    #[error("simulation stalled at t={time} with unserved requests")]
    Stalled { time: f64 },
    #[error("too many events at t={time}")]
    Livelock { time: f64 },
    #[error("trace check failed: {0}")]
    TraceCheck(String),
    #[error("policy error: {0}")]
    Policy(String),
    #[error(transparent)]
    Tour(#[from] TourError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("experiment spec is empty: {0}")]
    EmptySpec(&'static str),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("empty CSV")]
    EmptyCsv,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Tour(#[from] TourError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
