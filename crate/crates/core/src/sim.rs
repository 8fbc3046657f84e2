//! Deterministic event-driven execution of online policies.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::instance::{Instance, Job};
use crate::metric::{MetricSpace, PointId, Position, Target};
use crate::tour::{SolverConfig, SolverKind, Tour, TourProblem};

const SPEED_TOL: f64 = 1e-12;
const MAX_EVENTS_PER_INSTANT: usize = 10_000;
const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum Step {
    /// Go to a target and stay there until `not_before`. `tag` is free for the policy's bookkeeping.
    Visit { target: Target, not_before: f64, tag: Option<usize> },
    /// Go to the request's pickup, wait for its release, carry it to its dropoff.
    Serve { request: usize },
}

impl Step {
    pub fn visit(target: Target) -> Self {
        Step::Visit { target, not_before: 0.0, tag: None }
    }

    pub fn visit_point(p: PointId) -> Self {
        Step::visit(Target::Point(p))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Start,
    Released(Vec<usize>),
    Timer(u64),
    /// The watched limit on t + d(p(t), o) is about to be exceeded.
    Guard,
    /// A request has been completed (dropped off).
    Served(usize),
    /// A visit step finished; carries its tag.
    Visited(Option<usize>),
    /// The plan ran out.
    Idle,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Keep,
    Replace(Vec<Step>),
}

pub trait Policy {
    fn name(&self) -> String;
    fn on_event(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub time: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub from: Position,
    pub to: Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub policy: String,
    pub segments: Vec<Segment>,
    /// Pickup time per request (the visit time for point requests).
    pub services: Vec<f64>,
    /// Dropoff time per request; equals the service time for point requests.
    pub deliveries: Vec<f64>,
    pub makespan: f64,
    pub phase_log: Vec<LogEntry>,
    pub decision_log: Vec<LogEntry>,
}

impl Trace {
    /// Makespan recomputed from the segments alone.
    pub fn replayed_makespan(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    pub fn decisions_matching(&self, needle: &str) -> Vec<&LogEntry> {
        self.decision_log.iter().filter(|e| e.label.contains(needle)).collect()
    }
}

#[derive(Default)]
struct Logs {
    phase: Vec<LogEntry>,
    decision: Vec<LogEntry>,
}

/// Distance between two positions.
pub fn position_distance(space: &MetricSpace, a: Position, b: Position) -> f64 {
    match b {
        Position::Point { id } => space.dist_to_point(a, id),
        Position::Coord { x } => space.dist_to(a, Target::Coord(x)),
        Position::Edge { from, to, offset } => {
            let len = space.d(from, to);
            let mut best = (offset + space.dist_to_point(a, from)).min(len - offset + space.dist_to_point(a, to));
            if let Position::Edge { from: f2, to: t2, offset: o2 } = a {
                if f2 == from && t2 == to {
                    best = best.min((offset - o2).abs());
                } else if f2 == to && t2 == from {
                    best = best.min((len - o2 - offset).abs());
                }
            }
            best
        }
    }
}

/// Where the server heads next for a step, given what it is carrying.
fn step_target(jobs: &[Job], loaded: Option<usize>, step: &Step) -> (Target, f64) {
    match *step {
        Step::Visit { target, not_before, .. } => (target, not_before),
        Step::Serve { request } => {
            let j = &jobs[request];
            if loaded == Some(request) {
                (Target::Point(j.dropoff), 0.0)
            } else {
                (Target::Point(j.pickup), j.release)
            }
        }
    }
}

/// Completion time of each step when the plan is followed from the given state.
pub fn project_steps(
    space: &MetricSpace,
    jobs: &[Job],
    mut pos: Position,
    mut t: f64,
    mut loaded: Option<usize>,
    steps: &[Step],
) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps.len());
    for step in steps {
        match *step {
            Step::Visit { target, not_before, .. } => {
                t = (t + space.dist_to(pos, target)).max(not_before);
                pos = space.target_position(target);
            }
            Step::Serve { request } => {
                let j = &jobs[request];
                if loaded == Some(request) {
                    t += space.dist_to_point(pos, j.dropoff);
                    loaded = None;
                } else {
                    t = (t + space.dist_to_point(pos, j.pickup)).max(j.release) + space.d(j.pickup, j.dropoff);
                }
                pos = space.position_of(j.dropoff);
            }
        }
        out.push(t);
    }
    out
}

/// View handed to a policy at each event. Requests are visible only once released.
pub struct Ctx<'a> {
    time: f64,
    position: Position,
    space: &'a MetricSpace,
    jobs: &'a [Job],
    released: &'a [bool],
    served: &'a [bool],
    loaded: Option<usize>,
    plan: &'a VecDeque<Step>,
    timers: &'a mut Vec<(f64, u64)>,
    next_token: &'a mut u64,
    guard: &'a mut Option<f64>,
    logs: &'a mut Logs,
}

impl Ctx<'_> {
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn position(&self) -> Position {
        self.position
    }

    pub fn space(&self) -> &MetricSpace {
        self.space
    }

    pub fn at_origin(&self) -> bool {
        self.space.at_origin(self.position)
    }

    pub fn dist_to_origin(&self) -> f64 {
        self.space.dist_to_origin(self.position)
    }

    pub fn job(&self, i: usize) -> Option<&Job> {
        if self.released.get(i).copied().unwrap_or(false) {
            Some(&self.jobs[i])
        } else {
            None
        }
    }

    pub fn is_served(&self, i: usize) -> bool {
        self.released[i] && self.served[i]
    }

    /// Released requests not yet completed, in index order.
    pub fn pending(&self) -> Vec<usize> {
        (0..self.jobs.len()).filter(|&i| self.released[i] && !self.served[i]).collect()
    }

    pub fn loaded(&self) -> Option<usize> {
        self.loaded
    }

    pub fn plan(&self) -> &VecDeque<Step> {
        self.plan
    }

    pub fn set_timer(&mut self, at: f64) -> u64 {
        *self.next_token += 1;
        let token = *self.next_token;
        self.timers.push((at, token));
        token
    }

    pub fn cancel_timer(&mut self, token: u64) {
        self.timers.retain(|&(_, k)| k != token);
    }

    /// Watch for the first instant where t + d(p(t), o) would exceed `limit`.
    pub fn set_guard(&mut self, limit: f64) {
        *self.guard = Some(limit);
    }

    pub fn clear_guard(&mut self) {
        *self.guard = None;
    }

    pub fn log_phase(&mut self, label: impl Into<String>) {
        self.logs.phase.push(LogEntry { time: self.time, label: label.into() });
    }

    pub fn log_decision(&mut self, label: impl Into<String>) {
        self.logs.decision.push(LogEntry { time: self.time, label: label.into() });
    }

    /// Where and when the server is free of any ride in progress.
    pub fn free_state(&self) -> (Position, f64) {
        match self.loaded {
            Some(i) => {
                let d = self.jobs[i].dropoff;
                (self.space.position_of(d), self.time + self.space.dist_to_point(self.position, d))
            }
            None => (self.position, self.time),
        }
    }

    /// Step completion times for a candidate plan, with any ride in progress finished first.
    pub fn project(&self, steps: &[Step]) -> Vec<f64> {
        let steps = normalize(self.loaded, steps.to_vec());
        project_steps(self.space, self.jobs, self.position, self.time, self.loaded, &steps)
    }

    pub fn plan_end(&self, steps: &[Step]) -> f64 {
        self.project(steps).last().copied().unwrap_or(self.time)
    }

    /// Tour from the free state through the given jobs to `terminal`.
    pub fn solve(&self, cfg: &SolverConfig, jobs: Vec<Job>, terminal: PointId) -> Result<Tour, SimError> {
        let (start, start_time) = self.free_state();
        let p = TourProblem { space: self.space, start, start_time, jobs, terminal };
        Ok(cfg.solve(&p)?)
    }

    /// Tour through released pending requests (excluding a ride in progress), ending at the origin.
    pub fn tour_pending(&self, cfg: &SolverConfig) -> Result<Vec<Step>, SimError> {
        let ids: Vec<usize> = self.pending().into_iter().filter(|&i| Some(i) != self.loaded).collect();
        let jobs = ids.iter().map(|&i| self.jobs[i]).collect();
        let tour = self.solve(cfg, jobs, self.space.origin())?;
        let mut steps: Vec<Step> = tour.order.iter().map(|&k| Step::Serve { request: ids[k] }).collect();
        steps.push(Step::visit_point(self.space.origin()));
        Ok(steps)
    }

    /// Length of a tour from the origin at the current time through all pending requests.
    pub fn tour_from_origin(&self, cfg: &SolverConfig) -> Result<(Vec<Step>, f64), SimError> {
        let ids: Vec<usize> = self.pending();
        let jobs = ids.iter().map(|&i| self.jobs[i]).collect();
        let p = TourProblem {
            space: self.space,
            start: self.space.origin_position(),
            start_time: self.time,
            jobs,
            terminal: self.space.origin(),
        };
        let tour = cfg.solve(&p)?;
        let mut steps: Vec<Step> = tour.order.iter().map(|&k| Step::Serve { request: ids[k] }).collect();
        steps.push(Step::visit_point(self.space.origin()));
        Ok((steps, tour.completion - self.time))
    }
}

/// A ride in progress always stays first.
pub fn normalize(loaded: Option<usize>, mut steps: Vec<Step>) -> Vec<Step> {
    if let Some(i) = loaded {
        steps.retain(|s| *s != Step::Serve { request: i });
        steps.insert(0, Step::Serve { request: i });
    }
    steps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptMode {
    Exact,
    Approx,
}

/// Ratio of a run's makespan to the offline optimum (or its approximation).
pub fn empirical_cr(trace: &Trace, instance: &Instance, mode: OptMode, exact_cap: usize) -> Result<f64, SimError> {
    let cfg = match mode {
        OptMode::Exact => SolverConfig::exact(exact_cap),
        OptMode::Approx => SolverConfig { kind: SolverKind::Approx, exact_cap },
    };
    let opt = crate::tour::optimal(instance, &cfg)?.completion;
    Ok(ratio(trace.makespan, opt))
}

pub fn ratio(makespan: f64, opt: f64) -> f64 {
    if opt == 0.0 {
        if makespan == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        makespan / opt
    }
}

struct Sim<'a> {
    space: &'a MetricSpace,
    jobs: Vec<Job>,
    t: f64,
    pos: Position,
    plan: VecDeque<Step>,
    loaded: Option<usize>,
    released: Vec<bool>,
    served: Vec<bool>,
    pickup_at: Vec<f64>,
    dropoff_at: Vec<f64>,
    timers: Vec<(f64, u64)>,
    next_token: u64,
    guard: Option<f64>,
    logs: Logs,
    segments: Vec<Segment>,
    order: Vec<usize>,
    next_release: usize,
}

impl<'a> Sim<'a> {
    fn new(instance: &'a Instance) -> Self {
        let space = &*instance.space;
        let jobs = instance.jobs();
        let n = jobs.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| jobs[a].release.total_cmp(&jobs[b].release).then(a.cmp(&b)));
        Sim {
            space,
            t: 0.0,
            pos: space.origin_position(),
            plan: VecDeque::new(),
            loaded: None,
            released: vec![false; n],
            served: vec![false; n],
            pickup_at: vec![f64::NAN; n],
            dropoff_at: vec![f64::NAN; n],
            timers: Vec::new(),
            next_token: 0,
            guard: None,
            logs: Logs::default(),
            segments: Vec::new(),
            order,
            next_release: 0,
            jobs,
        }
    }

    fn dispatch(&mut self, policy: &mut dyn Policy, event: Event) -> Result<(), SimError> {
        let decision = {
            let mut ctx = Ctx {
                time: self.t,
                position: self.pos,
                space: self.space,
                jobs: &self.jobs,
                released: &self.released,
                served: &self.served,
                loaded: self.loaded,
                plan: &self.plan,
                timers: &mut self.timers,
                next_token: &mut self.next_token,
                guard: &mut self.guard,
                logs: &mut self.logs,
            };
            policy.on_event(&event, &mut ctx)?
        };
        if let Decision::Replace(steps) = decision {
            self.validate(&steps)?;
            self.plan = normalize(self.loaded, steps).into();
        }
        Ok(())
    }

    fn validate(&self, steps: &[Step]) -> Result<(), SimError> {
        let bad = |reason: String| Err(SimError::InfeasiblePlan { time: self.t, reason });
        let mut seen = vec![false; self.jobs.len()];
        for s in steps {
            match *s {
                Step::Serve { request } => {
                    if request >= self.jobs.len() || !self.released[request] {
                        return bad(format!("serve of unreleased request {request}"));
                    }
                    if self.served[request] {
                        return bad(format!("serve of completed request {request}"));
                    }
                    if seen[request] {
                        return bad(format!("request {request} planned twice"));
                    }
                    seen[request] = true;
                }
                Step::Visit { target, not_before, .. } => {
                    if not_before.is_nan() {
                        return bad("NaN wait".into());
                    }
                    match target {
                        Target::Point(p) if !self.space.contains(p) => {
                            return bad(format!("unknown point {p}"));
                        }
                        Target::Coord(x) if !self.space.is_line() || !x.is_finite() => {
                            return bad(format!("coordinate target {x} off a line space"));
                        }
                        Target::Coord(x) if self.space.is_half_line() && x < 0.0 => {
                            return bad(format!("negative coordinate {x} on the half-line"));
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    fn all_done(&self) -> bool {
        self.next_release == self.order.len() && self.loaded.is_none() && self.served.iter().all(|&s| s)
    }

    fn next_release_time(&self) -> f64 {
        self.order.get(self.next_release).map_or(f64::INFINITY, |&i| self.jobs[i].release)
    }

    fn front(&self) -> Option<(Target, f64)> {
        self.plan.front().map(|s| step_target(&self.jobs, self.loaded, s))
    }

    /// First instant at or after now where the guarded quantity would exceed its limit.
    fn guard_time(&self, limit: f64) -> f64 {
        let mut f = self.t + self.space.dist_to_origin(self.pos);
        let mut tau = 0.0;
        if let Some((target, _)) = self.front() {
            for (len, slope) in self.space.origin_profile(self.pos, target) {
                let rate = 1.0 + slope;
                if rate > 0.0 {
                    if f >= limit {
                        return self.t + tau;
                    }
                    let hit = (limit - f) / rate;
                    if hit < len {
                        return self.t + tau + hit;
                    }
                }
                f += rate * len;
                tau += len;
            }
        }
        if f >= limit {
            self.t + tau
        } else {
            self.t + tau + (limit - f)
        }
    }

    /// Time at which the current motion passes through the origin, if it does so before its target.
    fn origin_pass(&self) -> Option<f64> {
        let (target, _) = self.front()?;
        let mut along = 0.0;
        let mut pieces = self.space.origin_profile(self.pos, target).into_iter().peekable();
        while let Some((len, slope)) = pieces.next() {
            along += len;
            if slope < 0.0 && pieces.peek().is_some_and(|&(_, s)| s > 0.0) {
                let probe = self.space.advance(self.pos, target, along);
                if self.space.at_origin(probe) {
                    return Some(self.t + along);
                }
            }
        }
        None
    }

    fn complete_front(&mut self, policy: &mut dyn Policy) -> Result<bool, SimError> {
        let Some(step) = self.plan.front().copied() else { return Ok(false) };
        let (target, not_before) = step_target(&self.jobs, self.loaded, &step);
        if !self.space.at_target(self.pos, target) || self.t < not_before {
            return Ok(false);
        }
        match step {
            Step::Visit { tag, .. } => {
                self.plan.pop_front();
                self.dispatch(policy, Event::Visited(tag))?;
            }
            Step::Serve { request } => {
                let j = self.jobs[request];
                if self.loaded != Some(request) {
                    self.pickup_at[request] = self.t;
                    self.loaded = Some(request);
                    if !self.space.at_target(self.pos, Target::Point(j.dropoff)) {
                        return Ok(true);
                    }
                }
                self.loaded = None;
                self.served[request] = true;
                self.dropoff_at[request] = self.t;
                self.plan.pop_front();
                self.dispatch(policy, Event::Served(request))?;
            }
        }
        if self.plan.is_empty() {
            self.dispatch(policy, Event::Idle)?;
        }
        Ok(true)
    }

    /// Handles everything due at the current instant; returns true once the end signal fires.
    fn settle(&mut self, policy: &mut dyn Policy) -> Result<bool, SimError> {
        for _ in 0..MAX_EVENTS_PER_INSTANT {
            let mut batch = Vec::new();
            while self.next_release < self.order.len() && self.jobs[self.order[self.next_release]].release <= self.t {
                let i = self.order[self.next_release];
                self.released[i] = true;
                batch.push(i);
                self.next_release += 1;
            }
            if !batch.is_empty() {
                self.dispatch(policy, Event::Released(batch))?;
                continue;
            }
            let due = self
                .timers
                .iter()
                .enumerate()
                .filter(|(_, &(at, _))| at <= self.t)
                .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(a.1 .1.cmp(&b.1 .1)))
                .map(|(k, _)| k);
            if let Some(k) = due {
                let (_, token) = self.timers.remove(k);
                self.dispatch(policy, Event::Timer(token))?;
                continue;
            }
            if self.complete_front(policy)? {
                continue;
            }
            if self.all_done() && self.space.at_origin(self.pos) {
                return Ok(true);
            }
            if let Some(limit) = self.guard {
                if self.guard_time(limit) <= self.t {
                    self.guard = None;
                    self.dispatch(policy, Event::Guard)?;
                    continue;
                }
            }
            return Ok(false);
        }
        Err(SimError::Livelock { time: self.t })
    }

    fn step_time(&mut self) -> Result<(), SimError> {
        let mut next = self.next_release_time();
        if let Some(&(at, _)) = self.timers.iter().min_by(|a, b| a.0.total_cmp(&b.0)) {
            next = next.min(at.max(self.t));
        }
        let mut travel = 0.0;
        let front = self.front();
        if let Some((target, not_before)) = front {
            travel = self.space.dist_to(self.pos, target);
            next = next.min((self.t + travel).max(not_before));
        }
        if let Some(limit) = self.guard {
            next = next.min(self.guard_time(limit));
        }
        let pass = if self.all_done() { self.origin_pass() } else { None };
        if let Some(at) = pass {
            next = next.min(at);
        }
        if !next.is_finite() {
            return Err(SimError::Stalled { time: self.t });
        }
        if next < self.t {
            next = self.t;
        }
        let dt = next - self.t;
        let arrives = front.is_some() && next >= self.t + travel;
        let moved = if arrives { travel } else { travel.min(dt) };
        let start = self.pos;
        let t_moved = match moved > 0.0 {
            true if arrives => self.t + travel,
            true => next,
            false => self.t,
        };
        if let Some((target, _)) = front {
            if moved > 0.0 {
                self.pos = if pass == Some(next) && moved < travel {
                    self.space.origin_position()
                } else {
                    self.space.advance(self.pos, target, moved)
                };
                self.segments.push(Segment { t_start: self.t, t_end: t_moved, from: start, to: self.pos });
            }
        }
        if next > t_moved {
            self.segments.push(Segment { t_start: t_moved, t_end: next, from: self.pos, to: self.pos });
        }
        self.t = next;
        Ok(())
    }

    fn finish(self, name: String) -> Result<Trace, SimError> {
        let trace = Trace {
            policy: name,
            segments: self.segments,
            services: self.pickup_at,
            deliveries: self.dropoff_at,
            makespan: self.t,
            phase_log: self.logs.phase,
            decision_log: self.logs.decision,
        };
        Ok(trace)
    }
}

pub fn run(instance: &Instance, policy: &mut dyn Policy) -> Result<Trace, SimError> {
    let mut sim = Sim::new(instance);
    sim.dispatch(policy, Event::Start)?;
    let mut steps = 0usize;
    loop {
        if sim.settle(policy)? {
            break;
        }
        sim.step_time()?;
        steps += 1;
        if steps > MAX_STEPS {
            return Err(SimError::Livelock { time: sim.t });
        }
    }
    let trace = sim.finish(policy.name())?;
    verify_trace(instance, &trace)?;
    Ok(trace)
}

/// Checks unit speed, contiguity, release respect, completion and return to the origin.
pub fn verify_trace(instance: &Instance, trace: &Trace) -> Result<(), SimError> {
    let space = &*instance.space;
    let fail = |m: String| Err(SimError::TraceCheck(m));
    let mut t = 0.0;
    let mut pos = space.origin_position();
    for (k, s) in trace.segments.iter().enumerate() {
        if s.t_start != t {
            return fail(format!("segment {k} starts at {} but previous ended at {t}", s.t_start));
        }
        if s.from != pos {
            return fail(format!("segment {k} starts away from the previous end"));
        }
        let dt = s.t_end - s.t_start;
        if dt < 0.0 {
            return fail(format!("segment {k} runs backwards in time"));
        }
        let dist = position_distance(space, s.from, s.to);
        if dist > dt * (1.0 + SPEED_TOL) + SPEED_TOL {
            return fail(format!("segment {k} covers {dist} in {dt}"));
        }
        t = s.t_end;
        pos = s.to;
    }
    if t != trace.makespan {
        return fail(format!("segments end at {t}, makespan {}", trace.makespan));
    }
    if !space.at_origin(pos) {
        return fail("final position is not the origin".into());
    }
    for (i, j) in instance.jobs().iter().enumerate() {
        let (p, d) = (trace.services[i], trace.deliveries[i]);
        if p.is_nan() || d.is_nan() {
            return fail(format!("request {i} never served"));
        }
        if p < j.release {
            return fail(format!("request {i} served at {p} before release {}", j.release));
        }
        if d - p < space.d(j.pickup, j.dropoff) * (1.0 - SPEED_TOL) - SPEED_TOL {
            return fail(format!("ride {i} delivered too fast"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{line_space, PointId};
    use std::sync::Arc;

    /// Serves everything released, in index order, then goes home.
    struct Greedy;

    impl Policy for Greedy {
        fn name(&self) -> String {
            "greedy".into()
        }
        fn on_event(&mut self, ev: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
            match ev {
                Event::Start | Event::Released(_) => {
                    let mut steps: Vec<Step> = ctx.pending().into_iter().map(|request| Step::Serve { request }).collect();
                    steps.push(Step::visit_point(ctx.space().origin()));
                    Ok(Decision::Replace(steps))
                }
                _ => Ok(Decision::Keep),
            }
        }
    }

    #[test]
    fn greedy_single_request() {
        let s = Arc::new(line_space(&[0.0, 1.0], 0.0).unwrap());
        let inst = Instance::tsp(s, vec![crate::instance::Request { loc: PointId(1), release: 0.0 }]).unwrap();
        let tr = run(&inst, &mut Greedy).unwrap();
        assert_eq!(tr.makespan, 2.0);
        assert_eq!(tr.services, vec![1.0]);
        assert_eq!(tr.replayed_makespan(), 2.0);
    }

    #[test]
    fn empty_instance_ends_at_zero() {
        let s = Arc::new(line_space(&[0.0], 0.0).unwrap());
        let inst = Instance::tsp(s, vec![]).unwrap();
        let tr = run(&inst, &mut Greedy).unwrap();
        assert_eq!(tr.makespan, 0.0);
        assert!(tr.segments.is_empty());
    }

    #[test]
    fn stalled_policy_is_reported() {
        struct Lazy;
        impl Policy for Lazy {
            fn name(&self) -> String {
                "lazy".into()
            }
            fn on_event(&mut self, _: &Event, _: &mut Ctx) -> Result<Decision, SimError> {
                Ok(Decision::Keep)
            }
        }
        let s = Arc::new(line_space(&[0.0, 1.0], 0.0).unwrap());
        let inst = Instance::tsp(s, vec![crate::instance::Request { loc: PointId(1), release: 0.0 }]).unwrap();
        assert!(matches!(run(&inst, &mut Lazy), Err(SimError::Stalled { .. })));
    }

    #[test]
    fn unreleased_serve_is_rejected() {
        struct Cheat;
        impl Policy for Cheat {
            fn name(&self) -> String {
                "cheat".into()
            }
            fn on_event(&mut self, _: &Event, _: &mut Ctx) -> Result<Decision, SimError> {
                Ok(Decision::Replace(vec![Step::Serve { request: 0 }]))
            }
        }
        let s = Arc::new(line_space(&[0.0, 1.0], 0.0).unwrap());
        let inst = Instance::tsp(s, vec![crate::instance::Request { loc: PointId(1), release: 5.0 }]).unwrap();
        assert!(matches!(run(&inst, &mut Cheat), Err(SimError::InfeasiblePlan { .. })));
    }
}
