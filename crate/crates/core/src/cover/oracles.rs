use serde::{Deserialize, Serialize};

use super::CostOracle;
use crate::error::{CoverError, MetricError};
use crate::instance::{Job, Request, RideRequest};
use crate::metric::{adjacency, dijkstra, metric_closure, GraphInput, MetricSpace, PointId};
use crate::tour::{gamma_darp, gamma_tsp, halfline_opt, subset_completions};

pub const STEINER_TREE_CAP: usize = 10;
pub const STEINER_FOREST_CAP: usize = 8;

/// Excursion cost from a predicted or actual request, relative to its release.
pub struct TspOracle<'a> {
    pub space: &'a MetricSpace,
    pub cap: usize,
}

impl CostOracle<Request> for TspOracle<'_> {
    fn cost(&self, left: &[Request], right: &Request) -> Result<f64, CoverError> {
        Ok(gamma_tsp(self.space, left, right, self.cap)?)
    }

    fn subset_costs(&self, left: &[Request], right: &Request) -> Result<Vec<f64>, CoverError> {
        let jobs: Vec<Job> = left.iter().map(|&r| r.into()).collect();
        let start = self.space.position_of(right.loc);
        let mut c = subset_completions(self.space, start, right.release, &jobs, right.loc, self.cap)?;
        for v in &mut c {
            *v -= right.release;
        }
        Ok(c)
    }
}

/// Ride excursions from either end of the anchor ride, plus a fixed surcharge.
pub struct DarpOracle<'a> {
    pub space: &'a MetricSpace,
    pub max_ride: f64,
    pub cap: usize,
}

impl CostOracle<RideRequest> for DarpOracle<'_> {
    fn cost(&self, left: &[RideRequest], right: &RideRequest) -> Result<f64, CoverError> {
        Ok(gamma_darp(self.space, left, right, self.max_ride, self.cap)?)
    }

    fn subset_costs(&self, left: &[RideRequest], right: &RideRequest) -> Result<Vec<f64>, CoverError> {
        let s = self.space;
        let jobs: Vec<Job> = left.iter().map(|&r| r.into()).collect();
        let r0 = right.release;
        let r1 = r0 + s.d(right.pickup, right.dropoff);
        let a = subset_completions(s, s.position_of(right.pickup), r0, &jobs, right.pickup, self.cap)?;
        let b = subset_completions(s, s.position_of(right.dropoff), r1, &jobs, right.dropoff, self.cap)?;
        let mut out: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - r0).min(y - r1) + self.max_ride)
            .collect();
        out[0] = 0.0;
        for (i, q) in left.iter().enumerate() {
            if q == right {
                out[1 << i] = 0.0;
            }
        }
        Ok(out)
    }
}

/// Exact Steiner trees on a metric closure, all terminal subsets at once.
fn dreyfus_wagner(space: &MetricSpace, terminals: &[PointId]) -> Vec<Vec<f64>> {
    let n = space.n();
    let m = terminals.len();
    let size = 1usize << m;
    let mut dp = vec![Vec::new(); size];
    for (i, &t) in terminals.iter().enumerate() {
        dp[1 << i] = space.row(t).to_vec();
    }
    for s in 1..size {
        if s.count_ones() < 2 {
            continue;
        }
        let low = s & s.wrapping_neg();
        let rest = s ^ low;
        let mut g = vec![f64::INFINITY; n];
        // splits where the part holding the lowest terminal is a proper subset
        let mut sub = (rest - 1) & rest;
        loop {
            let a = low | sub;
            let b = s ^ a;
            let (da, db) = (&dp[a], &dp[b]);
            for u in 0..n {
                let c = da[u] + db[u];
                if c < g[u] {
                    g[u] = c;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        let mut row = vec![f64::INFINITY; n];
        for u in 0..n {
            if !g[u].is_finite() {
                continue;
            }
            let du = space.row(PointId(u));
            for v in 0..n {
                let c = g[u] + du[v];
                if c < row[v] {
                    row[v] = c;
                }
            }
        }
        dp[s] = row;
    }
    dp
}

/// Minimum Steiner tree connecting `terminals` in a metric.
pub fn steiner_tree(space: &MetricSpace, terminals: &[PointId]) -> f64 {
    match terminals.split_last() {
        None | Some((_, [])) => 0.0,
        Some((&root, rest)) => {
            let dp = dreyfus_wagner(space, rest);
            dp[(1 << rest.len()) - 1][root.0]
        }
    }
}

pub struct SteinerTreeOracle<'a> {
    pub space: &'a MetricSpace,
}

impl CostOracle<PointId> for SteinerTreeOracle<'_> {
    fn cost(&self, left: &[PointId], right: &PointId) -> Result<f64, CoverError> {
        if left.len() > STEINER_TREE_CAP {
            return Err(CoverError::TerminalCap { terminals: left.len(), cap: STEINER_TREE_CAP });
        }
        let mut t = left.to_vec();
        t.push(*right);
        Ok(steiner_tree(self.space, &t))
    }

    fn subset_costs(&self, left: &[PointId], right: &PointId) -> Result<Vec<f64>, CoverError> {
        if left.len() > STEINER_TREE_CAP {
            return Err(CoverError::TerminalCap { terminals: left.len(), cap: STEINER_TREE_CAP });
        }
        let dp = dreyfus_wagner(self.space, left);
        let mut out: Vec<f64> = dp.iter().map(|row| row.get(right.0).copied().unwrap_or(0.0)).collect();
        out[0] = 0.0;
        Ok(out)
    }
}

/// Steiner forest where the anchor pair's shortest path may be used for free.
pub struct SteinerForestOracle {
    graph: GraphInput,
    closure: MetricSpace,
}

impl SteinerForestOracle {
    pub fn new(graph: &GraphInput) -> Result<Self, MetricError> {
        Ok(SteinerForestOracle { graph: graph.clone(), closure: metric_closure(graph)? })
    }

    fn free_path(&self, s: PointId, t: PointId) -> Vec<PointId> {
        let adj = adjacency(&self.graph).expect("validated at construction");
        let (_, parent) = dijkstra(&adj, s.0);
        let mut path = vec![t];
        let mut x = t.0;
        while let Some(p) = parent[x] {
            path.push(PointId(p));
            x = p;
        }
        path
    }

    /// Metric with the free path contracted to a single point.
    fn contracted(&self, anchor: &(PointId, PointId)) -> MetricSpace {
        let path = self.free_path(anchor.0, anchor.1);
        let n = self.closure.n();
        let to_path: Vec<f64> = (0..n)
            .map(|u| path.iter().map(|&p| self.closure.d(PointId(u), p)).fold(f64::INFINITY, f64::min))
            .collect();
        let m: Vec<Vec<f64>> = (0..n)
            .map(|u| {
                (0..n)
                    .map(|v| {
                        if u == v {
                            0.0
                        } else {
                            self.closure.d(PointId(u), PointId(v)).min(to_path[u] + to_path[v])
                        }
                    })
                    .collect()
            })
            .collect();
        crate::metric::from_matrix_trusted(m, self.closure.origin())
    }

    fn forest(space: &MetricSpace, pairs: &[(PointId, PointId)]) -> f64 {
        // every set partition of the pairs, one Steiner tree per block
        fn rec(space: &MetricSpace, pairs: &[(PointId, PointId)], i: usize, blocks: &mut Vec<Vec<usize>>) -> f64 {
            if i == pairs.len() {
                return blocks
                    .iter()
                    .map(|b| {
                        let t: Vec<PointId> = b.iter().flat_map(|&j| [pairs[j].0, pairs[j].1]).collect();
                        steiner_tree(space, &t)
                    })
                    .sum();
            }
            let mut best = f64::INFINITY;
            for k in 0..blocks.len() {
                blocks[k].push(i);
                best = best.min(rec(space, pairs, i + 1, blocks));
                blocks[k].pop();
            }
            blocks.push(vec![i]);
            best = best.min(rec(space, pairs, i + 1, blocks));
            blocks.pop();
            best
        }
        rec(space, pairs, 0, &mut Vec::new())
    }
}

impl CostOracle<(PointId, PointId)> for SteinerForestOracle {
    fn cost(&self, left: &[(PointId, PointId)], right: &(PointId, PointId)) -> Result<f64, CoverError> {
        if 2 * left.len() > STEINER_FOREST_CAP {
            return Err(CoverError::TerminalCap { terminals: 2 * left.len(), cap: STEINER_FOREST_CAP });
        }
        Ok(Self::forest(&self.contracted(right), left))
    }

    fn subset_costs(&self, left: &[(PointId, PointId)], right: &(PointId, PointId)) -> Result<Vec<f64>, CoverError> {
        let space = self.contracted(right);
        let n = left.len();
        let mut out = vec![0.0; 1 << n];
        let mut buf = Vec::new();
        for (mask, slot) in out.iter_mut().enumerate().skip(1) {
            // too many terminals for one hyperedge: such a hyperedge is never chosen
            if 2 * mask.count_ones() as usize > STEINER_FOREST_CAP {
                *slot = f64::INFINITY;
                continue;
            }
            buf.clear();
            buf.extend((0..n).filter(|i| mask & (1 << i) != 0).map(|i| left[i]));
            *slot = Self::forest(&space, &buf);
        }
        Ok(out)
    }
}

/// Facility at the right element serving every left client; one-client covers refund the opening cost.
pub struct FacilityOracle<'a> {
    pub space: &'a MetricSpace,
    pub opening: Vec<f64>,
}

impl<'a> FacilityOracle<'a> {
    /// `opening` holds one cost per point, or a single uniform cost.
    pub fn new(space: &'a MetricSpace, opening: Vec<f64>) -> Result<Self, CoverError> {
        let opening = match opening.len() {
            1 => vec![opening[0]; space.n()],
            n if n == space.n() => opening,
            n => return Err(CoverError::Oracle(format!("{n} opening costs for {} points", space.n()))),
        };
        if opening.iter().any(|f| !(f.is_finite() && *f >= 0.0)) {
            return Err(CoverError::Oracle("opening costs must be finite and non-negative".into()));
        }
        Ok(FacilityOracle { space, opening })
    }
}

impl CostOracle<PointId> for FacilityOracle<'_> {
    fn cost(&self, left: &[PointId], right: &PointId) -> Result<f64, CoverError> {
        Ok(self.opening[right.0] + left.iter().map(|&c| self.space.d(*right, c)).sum::<f64>())
    }

    fn single_cover_discount(&self, right: &PointId) -> f64 {
        self.opening[right.0]
    }

    fn has_discount(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePoint {
    pub x: f64,
    pub r: f64,
}

/// Extra optimal makespan on the half-line caused by adding requests to the anchor.
pub struct HalfLineOracle;

impl CostOracle<LinePoint> for HalfLineOracle {
    fn cost(&self, left: &[LinePoint], right: &LinePoint) -> Result<f64, CoverError> {
        let with = halfline_opt(left.iter().chain(std::iter::once(right)).map(|p| (p.x, p.r)));
        let alone = halfline_opt([(right.x, right.r)]);
        Ok(with - alone)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Edge;

    #[test]
    fn facility_example() {
        let s = crate::metric::line_space(&[0.0, 1.0, 2.0], 0.0).unwrap();
        let o = FacilityOracle::new(&s, vec![5.0]).unwrap();
        assert_eq!(o.cost(&[PointId(1), PointId(2)], &PointId(0)).unwrap(), 8.0);
    }

    #[test]
    fn steiner_star() {
        let g = GraphInput {
            nodes: 3,
            edges: vec![Edge { u: 0, v: 1, w: 2.0 }, Edge { u: 0, v: 2, w: 3.0 }],
            origin: PointId(0),
        };
        let s = metric_closure(&g).unwrap();
        let o = SteinerTreeOracle { space: &s };
        assert_eq!(o.cost(&[PointId(1), PointId(2)], &PointId(0)).unwrap(), 5.0);
        let all = o.subset_costs(&[PointId(1), PointId(2)], &PointId(0)).unwrap();
        assert_eq!(all, vec![0.0, 2.0, 3.0, 5.0]);
    }

    #[test]
    fn steiner_uses_hub() {
        // three leaves around a hub that is not a terminal
        let g = GraphInput {
            nodes: 4,
            edges: vec![Edge { u: 0, v: 1, w: 1.0 }, Edge { u: 0, v: 2, w: 1.0 }, Edge { u: 0, v: 3, w: 1.0 }],
            origin: PointId(0),
        };
        let s = metric_closure(&g).unwrap();
        assert_eq!(steiner_tree(&s, &[PointId(1), PointId(2), PointId(3)]), 3.0);
    }

    #[test]
    fn forest_free_path() {
        // path 0-1-2-3; the anchor pair (0,3) makes the whole path free
        let g = GraphInput {
            nodes: 4,
            edges: vec![Edge { u: 0, v: 1, w: 1.0 }, Edge { u: 1, v: 2, w: 1.0 }, Edge { u: 2, v: 3, w: 1.0 }],
            origin: PointId(0),
        };
        let o = SteinerForestOracle::new(&g).unwrap();
        assert_eq!(o.cost(&[(PointId(1), PointId(2))], &(PointId(0), PointId(3))).unwrap(), 0.0);
        // without overlap the pair pays its own distance
        assert_eq!(o.cost(&[(PointId(2), PointId(3))], &(PointId(0), PointId(1))).unwrap(), 1.0);
    }

    #[test]
    fn halfline_additional_cost() {
        let a = LinePoint { x: 1.0, r: 0.0 };
        let b = LinePoint { x: 3.0, r: 0.0 };
        assert_eq!(HalfLineOracle.cost(&[b], &a).unwrap(), 4.0);
        assert_eq!(HalfLineOracle.cost(&[a], &b).unwrap(), 0.0);
    }
}
