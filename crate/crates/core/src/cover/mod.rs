//! Hyperedge cover error between an actual and a predicted request set.

mod oracles;
mod prior;

pub use oracles::{
    DarpOracle, FacilityOracle, HalfLineOracle, LinePoint, SteinerForestOracle, SteinerTreeOracle, TspOracle,
};
pub use prior::{prior_errors, PriorErrors, MATCHING_CAP};

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{CoverError, InstanceError};
use crate::instance::{match_identical, split_errors, Instance, PredictionSet, Requests};
use crate::metric::{GraphInput, PointId};
use crate::tour::{halfline_opt, DEFAULT_EXACT_CAP};

pub const DP_CAP: usize = 12;
pub const OVERLAP_CAP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arity {
    Finite(usize),
    Unbounded,
}

impl Arity {
    fn limit(self, n: usize) -> usize {
        match self {
            Arity::Finite(k) => k.min(n),
            Arity::Unbounded => n,
        }
    }
}

impl std::fmt::Display for Arity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Arity::Finite(k) => write!(f, "{k}"),
            Arity::Unbounded => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Arity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" | "infinity" | "unbounded" => Ok(Arity::Unbounded),
            _ => s.parse::<usize>().map(Arity::Finite).map_err(|e| format!("bad k {s:?}: {e}")),
        }
    }
}

impl Serialize for Arity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Arity::Finite(k) => s.serialize_u64(*k as u64),
            Arity::Unbounded => s.serialize_str("inf"),
        }
    }
}

/// Cost of covering a set of left elements by one right element.
pub trait CostOracle<T: Clone>: Sync {
    fn cost(&self, left: &[T], right: &T) -> Result<f64, CoverError>;

    /// Costs of all subsets of `left`, indexed by bitmask.
    fn subset_costs(&self, left: &[T], right: &T) -> Result<Vec<f64>, CoverError> {
        let n = left.len();
        let mut out = vec![0.0; 1 << n];
        let mut buf = Vec::with_capacity(n);
        for (mask, slot) in out.iter_mut().enumerate().skip(1) {
            buf.clear();
            buf.extend((0..n).filter(|i| mask & (1 << i) != 0).map(|i| left[i].clone()));
            *slot = self.cost(&buf, right)?;
        }
        Ok(out)
    }

    fn monotone(&self) -> bool {
        true
    }

    /// Amount refunded when a right element ends up covering exactly one left element.
    fn single_cover_discount(&self, _right: &T) -> f64 {
        0.0
    }

    fn has_discount(&self) -> bool {
        false
    }
}

/// Element of a synthetic cover instance: left items are bit positions, right items index the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableItem {
    Left(usize),
    Right(usize),
}

/// Explicit table of costs per right element and left subset; handy for tests.
#[derive(Debug, Clone)]
pub struct TableOracle {
    pub costs: Vec<Vec<f64>>,
    pub monotone: bool,
}

impl CostOracle<TableItem> for TableOracle {
    fn cost(&self, left: &[TableItem], right: &TableItem) -> Result<f64, CoverError> {
        let mask = left.iter().fold(0usize, |m, x| match x {
            TableItem::Left(i) => m | (1 << i),
            TableItem::Right(_) => m,
        });
        match right {
            TableItem::Right(j) => Ok(self.costs[*j][mask]),
            TableItem::Left(_) => Err(CoverError::Oracle("left item used as right".into())),
        }
    }

    fn monotone(&self) -> bool {
        self.monotone
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverEdge {
    pub left: Vec<usize>,
    pub right: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverSolution {
    pub cost: f64,
    pub edges: Vec<CoverEdge>,
}

fn bits(mask: usize, map: &[usize]) -> Vec<usize> {
    (0..map.len()).filter(|i| mask & (1 << i) != 0).map(|i| map[i]).collect()
}

/// Minimum-cost cover of A by hyperedges with one element of B and at most k elements of A.
/// Elements of A with an identical partner in B are removed first.
pub fn gamma_k<T: PartialEq + Clone + Send + Sync>(
    a: &[T],
    b: &[T],
    k: Arity,
    oracle: &dyn CostOracle<T>,
) -> Result<CoverSolution, CoverError> {
    if k == Arity::Finite(0) {
        return Err(CoverError::ZeroK);
    }
    let (a_only, _, _) = match_identical(a, b);
    let n = a_only.len();
    if n == 0 {
        return Ok(CoverSolution { cost: 0.0, edges: vec![] });
    }
    if b.is_empty() {
        return Err(CoverError::EmptyRight(n));
    }
    let left: Vec<T> = a_only.iter().map(|&i| a[i].clone()).collect();
    let kk = k.limit(n);
    if kk == 1 && !oracle.has_discount() {
        return closed_form_single(&left, &a_only, b, oracle);
    }
    let cap = if oracle.monotone() { DP_CAP } else { OVERLAP_CAP };
    if n > cap {
        return Err(CoverError::CapExceeded { count: n, cap });
    }
    let costs: Vec<Vec<f64>> = b
        .par_iter()
        .map(|r| oracle.subset_costs(&left, r))
        .collect::<Result<_, _>>()?;
    let mut sol = if !oracle.monotone() {
        overlap_search(n, kk, &costs)
    } else if oracle.has_discount() {
        let disc: Vec<f64> = b.iter().map(|r| oracle.single_cover_discount(r)).collect();
        grouped_partition(n, kk, &costs, &disc)
    } else {
        partition_dp(n, kk, &costs)
    };
    for e in &mut sol.edges {
        e.left = bits(e.left[0], &a_only);
    }
    Ok(sol)
}

fn closed_form_single<T: Clone>(
    left: &[T],
    map: &[usize],
    b: &[T],
    oracle: &dyn CostOracle<T>,
) -> Result<CoverSolution, CoverError> {
    let mut total = 0.0;
    let mut edges = Vec::with_capacity(left.len());
    for (i, x) in left.iter().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (j, r) in b.iter().enumerate() {
            let c = oracle.cost(std::slice::from_ref(x), r)?;
            if c < best.0 {
                best = (c, j);
            }
        }
        total += best.0;
        edges.push(CoverEdge { left: vec![map[i]], right: best.1, cost: best.0 });
    }
    Ok(CoverSolution { cost: total, edges })
}

// Edges coming out of the DPs carry the raw bitmask in left[0]; gamma_k maps it back to indices.
fn mask_edge(mask: usize, right: usize, cost: f64) -> CoverEdge {
    CoverEdge { left: vec![mask], right, cost }
}

fn partition_dp(n: usize, k: usize, costs: &[Vec<f64>]) -> CoverSolution {
    let size = 1usize << n;
    let mut f = vec![f64::INFINITY; size];
    let mut choice = vec![(0usize, 0usize); size];
    f[0] = 0.0;
    for t in 1..size {
        let low = t & t.wrapping_neg();
        let rest = t ^ low;
        let mut sub = rest;
        loop {
            let s = low | sub;
            if (s.count_ones() as usize) <= k {
                let base = f[t ^ s];
                for (j, cb) in costs.iter().enumerate() {
                    let c = base + cb[s];
                    if c < f[t] {
                        f[t] = c;
                        choice[t] = (s, j);
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let mut edges = Vec::new();
    let mut t = size - 1;
    while t != 0 {
        let (s, j) = choice[t];
        edges.push(mask_edge(s, j, costs[j][s]));
        t ^= s;
    }
    CoverSolution { cost: f[size - 1], edges }
}

/// Partition DP where each right element takes one group of left elements, so that a
/// per-right refund can depend on the group size.
fn grouped_partition(n: usize, k: usize, costs: &[Vec<f64>], disc: &[f64]) -> CoverSolution {
    let size = 1usize << n;
    let m = costs.len();
    // best split of each group at a single right element into hyperedges of size <= k
    let mut group = vec![vec![f64::INFINITY; size]; m];
    let mut split = vec![vec![0usize; size]; m];
    for j in 0..m {
        let h = &mut group[j];
        h[0] = 0.0;
        for u in 1..size {
            let low = u & u.wrapping_neg();
            let rest = u ^ low;
            let mut sub = rest;
            loop {
                let s = low | sub;
                if (s.count_ones() as usize) <= k {
                    let c = h[u ^ s] + costs[j][s];
                    if c < h[u] {
                        h[u] = c;
                        split[j][u] = s;
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest;
            }
        }
    }
    let net = |j: usize, u: usize| -> f64 {
        if u.count_ones() == 1 {
            group[j][u] - disc[j]
        } else {
            group[j][u]
        }
    };
    // g[j][t]: cheapest cover of t using right elements j.. each at most once as a group
    let mut g = vec![vec![f64::INFINITY; size]; m + 1];
    let mut pick = vec![vec![0usize; size]; m];
    g[m][0] = 0.0;
    for j in (0..m).rev() {
        for t in 0..size {
            let mut u = t;
            loop {
                let c = g[j + 1][t ^ u] + net(j, u);
                if c < g[j][t] {
                    g[j][t] = c;
                    pick[j][t] = u;
                }
                if u == 0 {
                    break;
                }
                u = (u - 1) & t;
            }
        }
    }
    let mut edges = Vec::new();
    let mut t = size - 1;
    for j in 0..m {
        let mut u = pick[j][t];
        t ^= u;
        while u != 0 {
            let s = split[j][u];
            edges.push(mask_edge(s, j, costs[j][s]));
            u ^= s;
        }
    }
    CoverSolution { cost: g[0][size - 1], edges }
}

/// Exhaustive search over covers that may overlap; used for non-monotone oracles.
fn overlap_search(n: usize, k: usize, costs: &[Vec<f64>]) -> CoverSolution {
    let size = 1usize << n;
    let full = size - 1;
    let mut g = vec![f64::INFINITY; size];
    let mut choice = vec![(0usize, 0usize); size];
    g[full] = 0.0;
    for mask in (0..full).rev() {
        let e = (!mask & full).trailing_zeros() as usize;
        for s in 1..size {
            if s & (1 << e) == 0 || (s.count_ones() as usize) > k {
                continue;
            }
            for (j, cb) in costs.iter().enumerate() {
                let c = cb[s] + g[mask | s];
                if c < g[mask] {
                    g[mask] = c;
                    choice[mask] = (s, j);
                }
            }
        }
    }
    let mut edges = Vec::new();
    let mut mask = 0;
    while mask != full {
        let (s, j) = choice[mask];
        edges.push(mask_edge(s, j, costs[j][s]));
        mask |= s;
    }
    CoverSolution { cost: g[0], edges }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverReport {
    pub k: Arity,
    pub gamma_inf_pred: f64,
    pub gamma_k_actual: f64,
    pub lambda_k: f64,
    /// Edges covering predicted requests (left indices into the prediction, right into the instance).
    pub pred_edges: Vec<CoverEdge>,
    /// Edges covering actual requests (left indices into the instance, right into the prediction).
    pub actual_edges: Vec<CoverEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "oracle", rename_all = "snake_case")]
pub enum OracleKind {
    Tsp,
    Darp,
    SteinerTree,
    SteinerForest { graph: GraphInput },
    Facility { opening: Vec<f64> },
}

pub fn cover_both<T: PartialEq + Clone + Send + Sync>(
    actual: &[T],
    predicted: &[T],
    k: Arity,
    actual_side: &dyn CostOracle<T>,
    pred_side: &dyn CostOracle<T>,
) -> Result<CoverReport, CoverError> {
    let p = gamma_k(predicted, actual, Arity::Unbounded, pred_side)?;
    let a = gamma_k(actual, predicted, k, actual_side)?;
    Ok(CoverReport {
        k,
        gamma_inf_pred: p.cost,
        gamma_k_actual: a.cost,
        lambda_k: p.cost + a.cost,
        pred_edges: p.edges,
        actual_edges: a.edges,
    })
}

pub fn lambda_k(
    actual: &Instance,
    predicted: &PredictionSet,
    k: Arity,
    oracle: &OracleKind,
) -> Result<CoverReport, CoverError> {
    let space = &*actual.space;
    let pred = predicted.requests()?;
    let kind_mismatch = || CoverError::Instance(InstanceError::KindMismatch);
    match (oracle, &actual.requests) {
        (OracleKind::Tsp, Requests::Tsp(r)) => {
            let rh = tsp_side(pred).ok_or_else(kind_mismatch)?;
            let o = TspOracle { space, cap: DEFAULT_EXACT_CAP };
            cover_both(r, &rh, k, &o, &o)
        }
        (OracleKind::Darp, Requests::Darp(r)) => {
            let rh = match pred {
                Requests::Darp(x) => x.clone(),
                Requests::Tsp(x) if x.is_empty() => vec![],
                _ => return Err(kind_mismatch()),
            };
            let split = split_errors(actual, predicted)?;
            let max_ride = crate::instance::max_correct_ride(space, &split);
            let a_side = DarpOracle { space, max_ride, cap: DEFAULT_EXACT_CAP };
            let p_side = DarpOracle { space, max_ride: 0.0, cap: DEFAULT_EXACT_CAP };
            cover_both(r, &rh, k, &a_side, &p_side)
        }
        (OracleKind::SteinerTree, Requests::Tsp(r)) => {
            let rh = tsp_side(pred).ok_or_else(kind_mismatch)?;
            let o = SteinerTreeOracle { space };
            cover_both(&locs(r), &locs(&rh), k, &o, &o)
        }
        (OracleKind::Facility { opening }, Requests::Tsp(r)) => {
            let rh = tsp_side(pred).ok_or_else(kind_mismatch)?;
            let o = FacilityOracle::new(space, opening.clone())?;
            cover_both(&locs(r), &locs(&rh), k, &o, &o)
        }
        (OracleKind::SteinerForest { graph }, Requests::Darp(r)) => {
            let rh = match pred {
                Requests::Darp(x) => x.clone(),
                _ => vec![],
            };
            let pairs = |x: &[crate::instance::RideRequest]| -> Vec<(PointId, PointId)> {
                x.iter().map(|q| (q.pickup, q.dropoff)).collect()
            };
            let o = SteinerForestOracle::new(graph).map_err(|e| CoverError::Oracle(e.to_string()))?;
            cover_both(&pairs(r), &pairs(&rh), k, &o, &o)
        }
        _ => Err(kind_mismatch()),
    }
}

fn tsp_side(pred: &Requests) -> Option<Vec<crate::instance::Request>> {
    match pred {
        Requests::Tsp(x) => Some(x.clone()),
        Requests::Darp(x) if x.is_empty() => Some(vec![]),
        Requests::Darp(_) => None,
    }
}

fn locs(r: &[crate::instance::Request]) -> Vec<PointId> {
    r.iter().map(|q| q.loc).collect()
}

/// Cover error on the half-line against a scalar makespan prediction.
pub fn lambda_halfline(actual: &Instance, chat: f64) -> Result<f64, CoverError> {
    let space = &*actual.space;
    if !space.is_half_line() {
        return Err(CoverError::Instance(InstanceError::ScalarOffHalfLine));
    }
    let opt = halfline_opt(
        actual
            .jobs()
            .iter()
            .map(|j| (space.coord(j.pickup).unwrap_or(0.0), j.release)),
    );
    Ok((chat - opt).abs())
}
