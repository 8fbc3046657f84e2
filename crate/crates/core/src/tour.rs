//! Offline tours with release dates: exact subset DP and an MST-doubling approximation.

use serde::{Deserialize, Serialize};

use crate::error::TourError;
use crate::instance::{Instance, Job, Request, RideRequest};
use crate::metric::{MetricSpace, PointId, Position};

pub const DEFAULT_EXACT_CAP: usize = 14;
/// Largest subset table we are willing to allocate.
pub const HARD_CAP: usize = 20;
/// Approximation factor of the underlying tour without release dates.
pub const MST_NU: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct TourProblem<'a> {
    pub space: &'a MetricSpace,
    pub start: Position,
    pub start_time: f64,
    pub jobs: Vec<Job>,
    pub terminal: PointId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    pub order: Vec<usize>,
    pub completion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Approx,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub exact_cap: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { kind: SolverKind::Exact, exact_cap: DEFAULT_EXACT_CAP }
    }
}

impl SolverConfig {
    pub fn exact(cap: usize) -> Self {
        SolverConfig { kind: SolverKind::Exact, exact_cap: cap }
    }

    pub fn approx() -> Self {
        SolverConfig { kind: SolverKind::Approx, exact_cap: DEFAULT_EXACT_CAP }
    }

    pub fn solve(&self, p: &TourProblem) -> Result<Tour, TourError> {
        match self.kind {
            SolverKind::Exact => exact_tour(p, self.exact_cap),
            SolverKind::Approx => approx_tour(p),
        }
    }
}

struct Node {
    pickup: PointId,
    dropoff: PointId,
    release: f64,
    ride: f64,
    members: Vec<usize>,
}

/// Co-located point requests collapse into one node released at their latest release.
fn group_jobs(space: &MetricSpace, jobs: &[Job]) -> Vec<Node> {
    let mut nodes: Vec<Node> = Vec::new();
    for (i, j) in jobs.iter().enumerate() {
        if !j.is_ride() {
            if let Some(n) = nodes.iter_mut().find(|n| n.ride == 0.0 && n.pickup == j.pickup && n.dropoff == j.pickup) {
                n.release = n.release.max(j.release);
                n.members.push(i);
                continue;
            }
        }
        nodes.push(Node {
            pickup: j.pickup,
            dropoff: j.dropoff,
            release: j.release,
            ride: space.d(j.pickup, j.dropoff),
            members: vec![i],
        });
    }
    nodes
}

fn expand(nodes: &[Node], seq: &[usize]) -> Vec<usize> {
    seq.iter().flat_map(|&k| nodes[k].members.iter().copied()).collect()
}

struct Dp {
    m: usize,
    f: Vec<f64>,
    parent: Vec<u8>,
}

/// f[mask][last] = earliest time the server finishes `last` having served exactly `mask`.
fn held_karp(space: &MetricSpace, start: Position, t0: f64, nodes: &[Node], with_parent: bool) -> Dp {
    let m = nodes.len();
    let size = 1usize << m;
    let mut f = vec![f64::INFINITY; size * m];
    let mut parent = if with_parent { vec![u8::MAX; size * m] } else { Vec::new() };
    let gap: Vec<f64> = (0..m * m)
        .map(|x| space.d(nodes[x / m].dropoff, nodes[x % m].pickup))
        .collect();
    for (i, n) in nodes.iter().enumerate() {
        f[(1 << i) * m + i] = (t0 + space.dist_to_point(start, n.pickup)).max(n.release) + n.ride;
    }
    for mask in 1..size {
        for last in 0..m {
            if mask & (1 << last) == 0 {
                continue;
            }
            let cur = f[mask * m + last];
            if !cur.is_finite() {
                continue;
            }
            for (j, n) in nodes.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    continue;
                }
                let t = (cur + gap[last * m + j]).max(n.release) + n.ride;
                let slot = (mask | (1 << j)) * m + j;
                if t < f[slot] {
                    f[slot] = t;
                    if with_parent {
                        parent[slot] = last as u8;
                    }
                }
            }
        }
    }
    Dp { m, f, parent }
}

pub fn exact_tour(p: &TourProblem, cap: usize) -> Result<Tour, TourError> {
    let space = p.space;
    let nodes = group_jobs(space, &p.jobs);
    let m = nodes.len();
    if m > cap.min(HARD_CAP) {
        return Err(TourError::CapExceeded { count: m, cap: cap.min(HARD_CAP) });
    }
    if m == 0 {
        return Ok(Tour { order: vec![], completion: p.start_time + space.dist_to_point(p.start, p.terminal) });
    }
    let dp = held_karp(space, p.start, p.start_time, &nodes, true);
    let full = (1usize << m) - 1;
    let mut best = (f64::INFINITY, 0);
    for (i, n) in nodes.iter().enumerate() {
        let c = dp.f[full * dp.m + i] + space.d(n.dropoff, p.terminal);
        if c < best.0 {
            best = (c, i);
        }
    }
    let mut seq = Vec::with_capacity(m);
    let (mut mask, mut last) = (full, best.1);
    loop {
        seq.push(last);
        let prev = dp.parent[mask * dp.m + last];
        mask &= !(1 << last);
        if mask == 0 {
            break;
        }
        last = prev as usize;
    }
    seq.reverse();
    Ok(Tour { order: expand(&nodes, &seq), completion: best.0 })
}

/// Optimal completion for every subset of `jobs` (indexed by bitmask), each tour ending at `terminal`.
pub fn subset_completions(
    space: &MetricSpace,
    start: Position,
    t0: f64,
    jobs: &[Job],
    terminal: PointId,
    cap: usize,
) -> Result<Vec<f64>, TourError> {
    let m = jobs.len();
    if m > cap.min(HARD_CAP) {
        return Err(TourError::CapExceeded { count: m, cap: cap.min(HARD_CAP) });
    }
    let nodes: Vec<Node> = jobs
        .iter()
        .enumerate()
        .map(|(i, j)| Node {
            pickup: j.pickup,
            dropoff: j.dropoff,
            release: j.release,
            ride: space.d(j.pickup, j.dropoff),
            members: vec![i],
        })
        .collect();
    let dp = held_karp(space, start, t0, &nodes, false);
    let mut out = vec![f64::INFINITY; 1 << m];
    out[0] = t0 + space.dist_to_point(start, terminal);
    for (mask, slot) in out.iter_mut().enumerate().skip(1) {
        for (i, n) in nodes.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let c = dp.f[mask * m + i] + space.d(n.dropoff, terminal);
                if c < *slot {
                    *slot = c;
                }
            }
        }
    }
    Ok(out)
}

/// Completion time of serving jobs in the given order, waiting at early arrivals.
pub fn follow_order(p: &TourProblem, order: &[usize]) -> f64 {
    let space = p.space;
    let mut t = p.start_time;
    let mut pos = p.start;
    for &i in order {
        let j = &p.jobs[i];
        t = (t + space.dist_to_point(pos, j.pickup)).max(j.release) + space.d(j.pickup, j.dropoff);
        pos = Position::Point { id: j.dropoff };
    }
    t + space.dist_to_point(pos, p.terminal)
}

/// MST doubling on the start-to-terminal path problem, then waiting where needed.
pub fn approx_tour(p: &TourProblem) -> Result<Tour, TourError> {
    if p.jobs.iter().any(Job::is_ride) {
        return Err(TourError::Unsupported);
    }
    let space = p.space;
    let nodes = group_jobs(space, &p.jobs);
    let m = nodes.len();
    if m == 0 {
        return Ok(Tour { order: vec![], completion: p.start_time + space.dist_to_point(p.start, p.terminal) });
    }
    // vertex 0 = start, 1..=m = nodes, m+1 = terminal
    let v = m + 2;
    let term = m + 1;
    let dist = |a: usize, b: usize| -> f64 {
        let pt = |x: usize| if x == term { p.terminal } else { nodes[x - 1].pickup };
        match (a, b) {
            (0, 0) => 0.0,
            (0, x) | (x, 0) => space.dist_to_point(p.start, pt(x)),
            (x, y) => space.d(pt(x), pt(y)),
        }
    };
    let mut in_tree = vec![false; v];
    let mut key = vec![f64::INFINITY; v];
    let mut parent = vec![usize::MAX; v];
    key[0] = 0.0;
    for _ in 0..v {
        let mut u = usize::MAX;
        for x in 0..v {
            if !in_tree[x] && (u == usize::MAX || key[x] < key[u]) {
                u = x;
            }
        }
        in_tree[u] = true;
        for x in 0..v {
            if !in_tree[x] {
                let w = dist(u, x);
                if w < key[x] {
                    key[x] = w;
                    parent[x] = u;
                }
            }
        }
    }
    let mut children = vec![Vec::new(); v];
    for x in 1..v {
        children[parent[x]].push(x);
    }
    let mut on_path = vec![false; v];
    let mut x = term;
    while x != 0 {
        on_path[x] = true;
        x = parent[x];
    }
    // Children ascending, the branch holding the terminal last.
    for c in &mut children {
        c.sort_by_key(|&y| (on_path[y], y));
    }
    let mut seq = Vec::with_capacity(m);
    let mut stack = vec![0usize];
    while let Some(u) = stack.pop() {
        if u != 0 && u != term {
            seq.push(u - 1);
        }
        for &c in children[u].iter().rev() {
            stack.push(c);
        }
    }
    let order = expand(&nodes, &seq);
    let completion = follow_order(p, &order);
    Ok(Tour { order, completion })
}

fn anchored(space: &MetricSpace, jobs: Vec<Job>, at: PointId, t0: f64) -> TourProblem<'_> {
    TourProblem { space, start: space.position_of(at), start_time: t0, jobs, terminal: at }
}

/// Relative cost of serving `subset` on an excursion that starts and ends at the anchor, beginning at its release.
pub fn gamma_tsp(space: &MetricSpace, subset: &[Request], anchor: &Request, cap: usize) -> Result<f64, TourError> {
    let jobs = subset.iter().map(|&r| r.into()).collect();
    let t = exact_tour(&anchored(space, jobs, anchor.loc, anchor.release), cap)?;
    Ok(t.completion - anchor.release)
}

pub fn gamma_darp(
    space: &MetricSpace,
    subset: &[RideRequest],
    anchor: &RideRequest,
    max_ride: f64,
    cap: usize,
) -> Result<f64, TourError> {
    if subset.len() == 1 && subset[0] == *anchor {
        return Ok(0.0);
    }
    let jobs: Vec<Job> = subset.iter().map(|&r| r.into()).collect();
    let r = anchor.release;
    let from_pickup = exact_tour(&anchored(space, jobs.clone(), anchor.pickup, r), cap)?.completion - r;
    let r2 = r + space.d(anchor.pickup, anchor.dropoff);
    let from_dropoff = exact_tour(&anchored(space, jobs, anchor.dropoff, r2), cap)?.completion - r2;
    Ok(from_pickup.min(from_dropoff) + max_ride)
}

/// Offline optimum of an instance: start at the origin at time 0 and return there.
pub fn optimal(instance: &Instance, cfg: &SolverConfig) -> Result<Tour, TourError> {
    let space = &*instance.space;
    let p = TourProblem {
        space,
        start: space.origin_position(),
        start_time: 0.0,
        jobs: instance.jobs(),
        terminal: space.origin(),
    };
    cfg.solve(&p)
}

/// Optimal makespan of a set of jobs from the origin at time 0.
pub fn makespan_of(space: &MetricSpace, jobs: Vec<Job>, cfg: &SolverConfig) -> Result<f64, TourError> {
    let p = TourProblem { space, start: space.origin_position(), start_time: 0.0, jobs, terminal: space.origin() };
    Ok(cfg.solve(&p)?.completion)
}

/// Closed-form optimum on the half-line: max over requests of max(r + x, 2x).
pub fn halfline_opt(points: impl IntoIterator<Item = (f64, f64)>) -> f64 {
    points.into_iter().map(|(x, r)| (r + x).max(2.0 * x)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{half_line_space, line_space};

    fn problem(space: &MetricSpace, jobs: Vec<Job>) -> TourProblem<'_> {
        TourProblem { space, start: space.origin_position(), start_time: 0.0, jobs, terminal: space.origin() }
    }

    #[test]
    fn two_requests_on_line() {
        let s = line_space(&[0.0, 1.0, 2.0], 0.0).unwrap();
        let jobs = vec![Job::point(PointId(2), 0.0), Job::point(PointId(1), 3.0)];
        let t = exact_tour(&problem(&s, jobs), DEFAULT_EXACT_CAP).unwrap();
        assert_eq!(t.completion, 4.0);
        assert_eq!(t.order, vec![0, 1]);
    }

    #[test]
    fn empty_tour_keeps_start_time() {
        let s = line_space(&[0.0], 0.0).unwrap();
        let mut p = problem(&s, vec![]);
        p.start_time = 5.0;
        assert_eq!(exact_tour(&p, 14).unwrap().completion, 5.0);
        assert_eq!(approx_tour(&p).unwrap().completion, 5.0);
    }

    #[test]
    fn approx_single_and_colocated() {
        let s = line_space(&[0.0, 3.0], 0.0).unwrap();
        let t = approx_tour(&problem(&s, vec![Job::point(PointId(1), 0.0)])).unwrap();
        assert_eq!(t.completion, 6.0);
        let jobs = (0..4).map(|i| Job::point(PointId(1), i as f64)).collect();
        let p = TourProblem { space: &s, start: s.position_of(PointId(1)), start_time: 0.0, jobs, terminal: PointId(1) };
        assert_eq!(approx_tour(&p).unwrap().completion, 3.0);
        assert_eq!(exact_tour(&p, 14).unwrap().completion, 3.0);
    }

    #[test]
    fn cap_is_enforced() {
        let s = line_space(&(0..16).map(|i| i as f64).collect::<Vec<_>>(), 0.0).unwrap();
        let jobs = (1..16).map(|i| Job::point(PointId(i), 0.0)).collect();
        assert!(matches!(exact_tour(&problem(&s, jobs), 14), Err(TourError::CapExceeded { count: 15, cap: 14 })));
    }

    #[test]
    fn gamma_examples() {
        let s = half_line_space(&[4.0, 5.0]).unwrap();
        let a = Request { loc: PointId(0), release: 0.0 };
        let b = Request { loc: PointId(1), release: 0.0 };
        assert_eq!(gamma_tsp(&s, &[b], &a, 14).unwrap(), 2.0);
        assert_eq!(gamma_tsp(&s, &[a], &a, 14).unwrap(), 0.0);
        // late release: wait at the request, then return
        let late = Request { loc: PointId(1), release: 10.0 };
        assert_eq!(gamma_tsp(&s, &[late], &a, 14).unwrap(), 10.0 + 1.0);
    }

    #[test]
    fn gamma_darp_examples() {
        let s = line_space(&[0.0, 2.0, 3.0], 0.0).unwrap();
        let anchor = RideRequest { pickup: PointId(0), dropoff: PointId(1), release: 0.0 };
        assert_eq!(gamma_darp(&s, &[anchor], &anchor, 5.0, 14).unwrap(), 0.0);
        let other = RideRequest { pickup: PointId(1), dropoff: PointId(2), release: 0.0 };
        // from pickup 0 at t=0: 0->2->3->0 = 6; from dropoff 2 at t=2: 2->3->2 = 2
        assert_eq!(gamma_darp(&s, &[other], &anchor, 0.0, 14).unwrap(), 2.0);
        let zero = RideRequest { pickup: PointId(1), dropoff: PointId(1), release: 0.0 };
        assert_eq!(gamma_darp(&s, &[zero], &anchor, 2.0, 14).unwrap(), 2.0);
    }

    #[test]
    fn halfline_closed_form() {
        assert_eq!(halfline_opt([(3.0, 1.0), (1.0, 5.0)]), 6.0);
        assert_eq!(halfline_opt(std::iter::empty()), 0.0);
    }
}
