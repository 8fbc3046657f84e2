//! Finite metric spaces with an origin, plus server positions inside them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::MetricError;

pub const REL_TOL: f64 = 1e-9;
const TRIANGLE_CHECK_MAX: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointId(pub usize);

impl PointId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for PointId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    General,
    /// Points carry real coordinates; `half` restricts them to x >= 0 with the origin at 0.
    Line { coords: Vec<f64>, half: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    n: usize,
    dist: Vec<f64>,
    origin: PointId,
    geometry: Geometry,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInput {
    pub nodes: usize,
    pub edges: Vec<Edge>,
    pub origin: PointId,
}

impl GraphInput {
    /// Node count is one past the largest endpoint.
    pub fn from_edges(edges: Vec<Edge>, origin: PointId) -> Self {
        let nodes = edges
            .iter()
            .map(|e| e.u.max(e.v) + 1)
            .max()
            .unwrap_or(0)
            .max(origin.0 + 1);
        GraphInput { nodes, edges, origin }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0)
}

pub fn from_matrix(d: &[Vec<f64>], origin: PointId) -> Result<MetricSpace, MetricError> {
    let n = d.len();
    if n == 0 {
        return Err(MetricError::Empty);
    }
    for (row, r) in d.iter().enumerate() {
        if r.len() != n {
            return Err(MetricError::NotSquare { row, len: r.len(), n });
        }
    }
    if origin.0 >= n {
        return Err(MetricError::BadOrigin { origin: origin.0, n });
    }
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = d[i][j];
            if !v.is_finite() || v < 0.0 {
                return Err(MetricError::BadEntry { i, j, value: v });
            }
            dist[i * n + j] = v;
        }
        if !close(d[i][i], 0.0) {
            return Err(MetricError::NonzeroDiagonal { i, value: d[i][i] });
        }
        dist[i * n + i] = 0.0;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (dist[i * n + j], dist[j * n + i]);
            if !close(a, b) {
                return Err(MetricError::Asymmetric { i, j, a, b });
            }
            dist[j * n + i] = a;
        }
    }
    let space = MetricSpace { n, dist, origin, geometry: Geometry::General };
    if n <= TRIANGLE_CHECK_MAX {
        space.check_triangle()?;
    }
    Ok(space)
}

/// Builds a space from a matrix already known to be a metric.
pub(crate) fn from_matrix_trusted(d: Vec<Vec<f64>>, origin: PointId) -> MetricSpace {
    let n = d.len();
    MetricSpace { n, dist: d.into_iter().flatten().collect(), origin, geometry: Geometry::General }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    cost: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn adjacency(g: &GraphInput) -> Result<Vec<Vec<(usize, f64)>>, MetricError> {
    let n = g.nodes;
    let mut adj = vec![Vec::new(); n];
    for e in &g.edges {
        if e.u >= n || e.v >= n {
            return Err(MetricError::BadNode { u: e.u, v: e.v, n });
        }
        if !(e.w.is_finite() && e.w > 0.0) {
            return Err(MetricError::BadWeight { u: e.u, v: e.v, w: e.w });
        }
        adj[e.u].push((e.v, e.w));
        adj[e.v].push((e.u, e.w));
    }
    for a in &mut adj {
        a.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    }
    Ok(adj)
}

/// Single-source shortest paths; parents prefer the lowest predecessor id on ties.
pub(crate) fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapItem { cost: 0.0, node: src });
    while let Some(HeapItem { cost, node }) = heap.pop() {
        if done[node] {
            continue;
        }
        done[node] = true;
        for &(next, w) in &adj[node] {
            let c = cost + w;
            if c < dist[next] || (c == dist[next] && parent[next].is_some_and(|p| node < p)) {
                if c < dist[next] {
                    heap.push(HeapItem { cost: c, node: next });
                }
                dist[next] = c;
                parent[next] = Some(node);
            }
        }
    }
    (dist, parent)
}

pub fn metric_closure(g: &GraphInput) -> Result<MetricSpace, MetricError> {
    let n = g.nodes;
    if n == 0 {
        return Err(MetricError::Empty);
    }
    if g.origin.0 >= n {
        return Err(MetricError::BadOrigin { origin: g.origin.0, n });
    }
    let adj = adjacency(g)?;
    let mut dist = vec![0.0; n * n];
    for s in 0..n {
        let (row, _) = dijkstra(&adj, s);
        for (t, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(MetricError::Disconnected { from: s, to: t });
            }
            dist[s * n + t] = v;
        }
    }
    // Float sums can differ by direction; keep the matrix exactly symmetric.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = dist[i * n + j].min(dist[j * n + i]);
            dist[i * n + j] = m;
            dist[j * n + i] = m;
        }
    }
    Ok(MetricSpace { n, dist, origin: g.origin, geometry: Geometry::General })
}

fn build_line(mut coords: Vec<f64>, origin_coord: f64, half: bool) -> Result<MetricSpace, MetricError> {
    for (index, &value) in coords.iter().enumerate() {
        if !value.is_finite() {
            return Err(MetricError::NonFiniteCoordinate { index, value });
        }
        if half && value < 0.0 {
            return Err(MetricError::NegativeCoordinate { index, value });
        }
    }
    if !origin_coord.is_finite() {
        return Err(MetricError::NonFiniteCoordinate { index: coords.len(), value: origin_coord });
    }
    let origin = match coords.iter().position(|&c| c == origin_coord) {
        Some(i) => i,
        None => {
            coords.push(origin_coord);
            coords.len() - 1
        }
    };
    let n = coords.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = (coords[i] - coords[j]).abs();
        }
    }
    Ok(MetricSpace { n, dist, origin: PointId(origin), geometry: Geometry::Line { coords, half } })
}

/// Points on the real line. The origin coordinate is appended when not already present.
/// Edge list CSV with header `u,v,w`.
pub fn parse_graph_csv(text: &str, origin: PointId) -> Result<GraphInput, MetricError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let edges: Vec<Edge> = r
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| MetricError::Parse(e.to_string()))?;
    Ok(GraphInput::from_edges(edges, origin))
}

/// Headerless CSV of floats, one row per point.
pub fn parse_matrix_csv(text: &str, origin: PointId) -> Result<MetricSpace, MetricError> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| MetricError::Parse(e.to_string()))?;
        let row: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| MetricError::Parse(format!("'{f}': {e}"))))
            .collect::<Result<_, _>>()?;
        rows.push(row);
    }
    from_matrix(&rows, origin)
}

pub fn line_space(coords: &[f64], origin_coord: f64) -> Result<MetricSpace, MetricError> {
    build_line(coords.to_vec(), origin_coord, false)
}

/// Points on [0, inf) with the origin at 0.
pub fn half_line_space(coords: &[f64]) -> Result<MetricSpace, MetricError> {
    build_line(coords.to_vec(), 0.0, true)
}

/// Unit-free grid: node `y * width + x`, 4-neighbour edges of the given weight, origin at node 0.
pub fn grid_graph(width: usize, height: usize, weight: f64) -> GraphInput {
    let mut edges = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let id = y * width + x;
            if x + 1 < width {
                edges.push(Edge { u: id, v: id + 1, w: weight });
            }
            if y + 1 < height {
                edges.push(Edge { u: id, v: id + width, w: weight });
            }
        }
    }
    GraphInput { nodes: width * height, edges, origin: PointId(0) }
}

/// Server location: a point, the interior of the segment between two points, or a line coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Position {
    Point { id: PointId },
    Edge { from: PointId, to: PointId, offset: f64 },
    Coord { x: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Point(PointId),
    Coord(f64),
}

impl MetricSpace {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn origin(&self) -> PointId {
        self.origin
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    #[inline]
    pub fn d(&self, a: PointId, b: PointId) -> f64 {
        self.dist[a.0 * self.n + b.0]
    }

    pub fn row(&self, a: PointId) -> &[f64] {
        &self.dist[a.0 * self.n..(a.0 + 1) * self.n]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(PointId(i)).to_vec()).collect()
    }

    pub fn is_line(&self) -> bool {
        matches!(self.geometry, Geometry::Line { .. })
    }

    pub fn is_half_line(&self) -> bool {
        matches!(self.geometry, Geometry::Line { half: true, .. })
    }

    pub fn coord(&self, p: PointId) -> Option<f64> {
        match &self.geometry {
            Geometry::Line { coords, .. } => Some(coords[p.0]),
            Geometry::General => None,
        }
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match &self.geometry {
            Geometry::Line { coords, .. } => Some(coords),
            Geometry::General => None,
        }
    }

    pub fn point_at(&self, x: f64) -> Option<PointId> {
        self.coords()?.iter().position(|&c| c == x).map(PointId)
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn contains(&self, p: PointId) -> bool {
        p.0 < self.n
    }

    /// Full O(n^3) triangle check, within the relative tolerance.
    pub fn check_triangle(&self) -> Result<(), MetricError> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let dij = self.dist[i * n + j];
                for k in 0..n {
                    let direct = self.dist[i * n + k];
                    let via = dij + self.dist[j * n + k];
                    if direct > via + REL_TOL * direct.max(1.0) {
                        return Err(MetricError::Triangle { i, j, k, direct, via });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn position_of(&self, p: PointId) -> Position {
        match self.coord(p) {
            Some(x) => Position::Coord { x },
            None => Position::Point { id: p },
        }
    }

    pub fn origin_position(&self) -> Position {
        self.position_of(self.origin)
    }

    pub fn target_position(&self, t: Target) -> Position {
        match t {
            Target::Point(p) => self.position_of(p),
            Target::Coord(x) => Position::Coord { x },
        }
    }

    /// Coordinate of a position on a line space.
    pub fn coord_of(&self, pos: Position) -> Option<f64> {
        self.is_line().then(|| self.pos_coord(pos))
    }

    fn pos_coord(&self, pos: Position) -> f64 {
        match pos {
            Position::Coord { x } => x,
            Position::Point { id } => self.coord(id).expect("line space"),
            Position::Edge { .. } => panic!("edge positions do not occur on line spaces"),
        }
    }

    fn target_coord(&self, t: Target) -> f64 {
        match t {
            Target::Coord(x) => x,
            Target::Point(p) => self.coord(p).expect("coordinate target on a general metric space"),
        }
    }

    pub fn dist_to_point(&self, pos: Position, q: PointId) -> f64 {
        match pos {
            Position::Point { id } => self.d(id, q),
            Position::Edge { from, to, offset } => {
                let len = self.d(from, to);
                (offset + self.d(from, q)).min(len - offset + self.d(to, q))
            }
            Position::Coord { x } => (x - self.coord(q).expect("coordinate position on a general metric space")).abs(),
        }
    }

    pub fn dist_to(&self, pos: Position, t: Target) -> f64 {
        match (t, pos) {
            (Target::Point(q), _) => self.dist_to_point(pos, q),
            (Target::Coord(y), _) => (self.pos_coord(pos) - y).abs(),
        }
    }

    pub fn dist_to_origin(&self, pos: Position) -> f64 {
        self.dist_to_point(pos, self.origin)
    }

    pub fn at_origin(&self, pos: Position) -> bool {
        match pos {
            Position::Point { id } => id == self.origin,
            Position::Coord { x } => Some(x) == self.coord(self.origin),
            Position::Edge { .. } => false,
        }
    }

    pub fn at_target(&self, pos: Position, t: Target) -> bool {
        match (pos, t) {
            (Position::Point { id }, Target::Point(q)) => id == q,
            (Position::Coord { x }, _) => x == self.target_coord(t),
            _ => false,
        }
    }

    /// Where the server is after travelling `len` along a shortest route toward `t`.
    pub fn advance(&self, pos: Position, t: Target, len: f64) -> Position {
        let total = self.dist_to(pos, t);
        if len >= total {
            return self.target_position(t);
        }
        if len <= 0.0 {
            return pos;
        }
        if self.is_line() {
            let x = self.pos_coord(pos);
            let y = self.target_coord(t);
            return Position::Coord { x: if y > x { x + len } else { x - len } };
        }
        let q = match t {
            Target::Point(q) => q,
            Target::Coord(_) => panic!("coordinate target on a general metric space"),
        };
        match pos {
            Position::Point { id } => Position::Edge { from: id, to: q, offset: len },
            Position::Edge { from, to, offset } => {
                let l = self.d(from, to);
                let via_to = (l - offset) + self.d(to, q);
                let via_from = offset + self.d(from, q);
                if via_to <= via_from {
                    let rem = l - offset;
                    if len < rem {
                        Position::Edge { from, to, offset: offset + len }
                    } else {
                        self.advance(Position::Point { id: to }, t, len - rem)
                    }
                } else if len < offset {
                    Position::Edge { from, to, offset: offset - len }
                } else {
                    self.advance(Position::Point { id: from }, t, len - offset)
                }
            }
            Position::Coord { .. } => unreachable!(),
        }
    }

    fn edge_leg(&self, from: PointId, to: PointId, u0: f64, u1: f64, out: &mut Vec<(f64, f64)>) {
        let l = self.d(from, to);
        let a = self.d(from, self.origin);
        let b = self.d(to, self.origin);
        let peak = ((l + b - a) / 2.0).clamp(0.0, l);
        push_leg(u0, u1, peak, out);
    }

    /// Pieces `(length, slope)` of the distance to the origin along the route from `pos` to `t`.
    pub fn origin_profile(&self, pos: Position, t: Target) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if self.is_line() {
            let x = self.pos_coord(pos);
            let y = self.target_coord(t);
            let o = self.coord(self.origin).unwrap_or(0.0);
            if x == y {
                return out;
            }
            let dir = if y > x { 1.0 } else { -1.0 };
            let between = (o - x) * dir > 0.0 && (y - o) * dir > 0.0;
            if between {
                out.push(((o - x).abs(), -1.0));
                out.push(((y - o).abs(), 1.0));
            } else {
                let toward = (o - x) * dir > 0.0;
                out.push(((y - x).abs(), if toward { -1.0 } else { 1.0 }));
            }
            return out;
        }
        let q = match t {
            Target::Point(q) => q,
            Target::Coord(_) => panic!("coordinate target on a general metric space"),
        };
        match pos {
            Position::Point { id } => {
                if id != q {
                    self.edge_leg(id, q, 0.0, self.d(id, q), &mut out);
                }
            }
            Position::Edge { from, to, offset } => {
                let l = self.d(from, to);
                let via_to = (l - offset) + self.d(to, q);
                let via_from = offset + self.d(from, q);
                let corner = if via_to <= via_from {
                    self.edge_leg(from, to, offset, l, &mut out);
                    to
                } else {
                    self.edge_leg(from, to, offset, 0.0, &mut out);
                    from
                };
                if corner != q {
                    self.edge_leg(corner, q, 0.0, self.d(corner, q), &mut out);
                }
            }
            Position::Coord { .. } => unreachable!(),
        }
        out
    }
}

fn push_leg(u0: f64, u1: f64, peak: f64, out: &mut Vec<(f64, f64)>) {
    // Distance to the origin rises while moving toward `peak` and falls after passing it.
    let (lo, hi) = (u0.min(u1), u0.max(u1));
    if peak > lo && peak < hi {
        out.push(((peak - u0).abs(), 1.0));
        out.push(((u1 - peak).abs(), -1.0));
    } else {
        let toward = (peak - u0) * (u1 - u0) > 0.0;
        if hi > lo {
            out.push((hi - lo, if toward { 1.0 } else { -1.0 }));
        }
    }
}
