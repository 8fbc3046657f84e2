//! Policies that use predicted requests or a predicted makespan.

use std::collections::HashMap;

use crate::error::SimError;
use crate::instance::{Job, Request};
use crate::metric::Target;
use crate::sim::{normalize, Ctx, Decision, Event, Policy, Step};
use crate::tour::{gamma_tsp, makespan_of, SolverConfig};

use super::classic::{Mrin, WaitCore, WaitRule};

fn has_tag(plan: &[Step], tag: usize) -> bool {
    plan.iter().any(|s| matches!(s, Step::Visit { tag: Some(k), .. } if *k == tag))
}

fn tag_index(plan: &[Step], tag: usize) -> Option<usize> {
    plan.iter().position(|s| matches!(s, Step::Visit { tag: Some(k), .. } if *k == tag))
}

fn home(ctx: &Ctx) -> Step {
    Step::visit_point(ctx.space().origin())
}

#[derive(Debug, Clone, Copy)]
enum Item {
    Actual(usize),
    Phantom(usize),
}

/// Follows a tour over the predicted requests and repairs it whenever an unexpected request shows up.
///
/// Predicted requests not yet matched to an actual release are planned as tagged visits:
/// tag `2p` for the pickup of prediction `p` and `2p + 1` for its dropoff.
#[derive(Debug, Clone)]
pub struct PrCore {
    solver: SolverConfig,
    poly: bool,
    practical: bool,
    predicted: Vec<Job>,
    pred_to_actual: Vec<Option<usize>>,
    actual_to_pred: HashMap<usize, usize>,
    deferred: bool,
    /// Latest instant whose release batch has been observed.
    seen_until: f64,
}

impl PrCore {
    pub fn new(predicted: Vec<Job>, solver: SolverConfig, poly: bool, practical: bool) -> Self {
        let n = predicted.len();
        PrCore {
            solver,
            poly,
            practical,
            predicted,
            pred_to_actual: vec![None; n],
            actual_to_pred: HashMap::new(),
            deferred: false,
            seen_until: f64::NEG_INFINITY,
        }
    }

    pub fn predicted(&self) -> &[Job] {
        &self.predicted
    }

    pub fn matched(&self, actual: usize) -> Option<usize> {
        self.actual_to_pred.get(&actual).copied()
    }

    /// Pairs fresh releases with identical unmatched predictions (lowest index first).
    /// Returns the expected pairs and the unexpected releases.
    pub fn observe(&mut self, ids: &[usize], ctx: &Ctx) -> (Vec<(usize, usize)>, Vec<usize>) {
        let mut expected = Vec::new();
        let mut unexpected = Vec::new();
        self.seen_until = ctx.time();
        for &a in ids {
            let Some(job) = ctx.job(a) else { continue };
            let hit = (0..self.predicted.len()).find(|&p| self.pred_to_actual[p].is_none() && self.predicted[p] == *job);
            match hit {
                Some(p) => {
                    self.pred_to_actual[p] = Some(a);
                    self.actual_to_pred.insert(a, p);
                    expected.push((a, p));
                }
                None => unexpected.push(a),
            }
        }
        (expected, unexpected)
    }

    fn phantom_steps(&self, p: usize) -> Vec<Step> {
        let j = self.predicted[p];
        let pickup = Step::Visit { target: Target::Point(j.pickup), not_before: j.release, tag: Some(2 * p) };
        if j.is_ride() {
            let dropoff = Step::Visit { target: Target::Point(j.dropoff), not_before: 0.0, tag: Some(2 * p + 1) };
            vec![pickup, dropoff]
        } else {
            vec![pickup]
        }
    }

    /// A ride is on board or a predicted ride has been picked up but not dropped.
    fn busy(&self, plan: &[Step], ctx: &Ctx) -> bool {
        ctx.loaded().is_some()
            || plan
                .iter()
                .any(|s| matches!(s, Step::Visit { tag: Some(k), .. } if k % 2 == 1 && !has_tag(plan, k - 1)))
    }

    fn stale(&self, p: usize, t: f64) -> bool {
        let r = self.predicted[p].release;
        self.practical && self.pred_to_actual[p].is_none() && (r < t || r <= self.seen_until)
    }

    /// Drops visits to predictions already known to be absent.
    fn prune(&self, plan: &mut Vec<Step>, t: f64) {
        if !self.practical {
            return;
        }
        plan.retain(|s| match s {
            Step::Visit { tag: Some(k), .. } => !self.stale(k / 2, t),
            _ => true,
        });
    }

    fn items(&self, ctx: &Ctx, plan: Option<&[Step]>) -> Vec<Item> {
        let t = ctx.time();
        let mut items: Vec<Item> =
            ctx.pending().into_iter().filter(|&a| Some(a) != ctx.loaded()).map(Item::Actual).collect();
        for p in 0..self.predicted.len() {
            if self.pred_to_actual[p].is_some() || self.stale(p, t) {
                continue;
            }
            if plan.is_none_or(|pl| has_tag(pl, 2 * p)) {
                items.push(Item::Phantom(p));
            }
        }
        items
    }

    fn tour(&self, ctx: &Ctx, items: &[Item], solver: &SolverConfig) -> Result<Vec<Step>, SimError> {
        let jobs = items
            .iter()
            .map(|it| match *it {
                Item::Actual(a) => *ctx.job(a).expect("released"),
                Item::Phantom(p) => self.predicted[p],
            })
            .collect();
        let tour = ctx.solve(solver, jobs, ctx.space().origin())?;
        let mut steps = Vec::new();
        for &k in &tour.order {
            match items[k] {
                Item::Actual(a) => steps.push(Step::Serve { request: a }),
                Item::Phantom(p) => steps.extend(self.phantom_steps(p)),
            }
        }
        steps.push(home(ctx));
        Ok(steps)
    }

    /// Starts trusting the prediction: a tour over everything still expected or pending.
    pub fn activate(&mut self, ctx: &mut Ctx) -> Result<Vec<Step>, SimError> {
        self.deferred = false;
        let items = self.items(ctx, None);
        self.tour(ctx, &items, &self.solver)
    }

    fn replan(&mut self, ctx: &mut Ctx, plan: &[Step]) -> Result<Decision, SimError> {
        self.deferred = false;
        let items = self.items(ctx, Some(plan));
        ctx.log_decision(format!("replan over {} items", items.len()));
        Ok(Decision::Replace(self.tour(ctx, &items, &self.solver)?))
    }

    fn anchor(&self, ctx: &Ctx, a: usize) -> Result<Option<(usize, f64)>, SimError> {
        let j = ctx.job(a).expect("released");
        let x = Request { loc: j.pickup, release: j.release };
        let mut best: Option<(usize, f64)> = None;
        for (p, q) in self.predicted.iter().enumerate() {
            let g = gamma_tsp(ctx.space(), &[x], &Request { loc: q.pickup, release: q.release }, self.solver.exact_cap)?;
            if best.is_none_or(|(_, b)| g < b) {
                best = Some((p, g));
            }
        }
        Ok(best)
    }

    fn anchor_step(&self, plan: &[Step], p: usize) -> Option<usize> {
        tag_index(plan, 2 * p).or_else(|| {
            let a = self.pred_to_actual[p]?;
            plan.iter().position(|s| *s == Step::Serve { request: a })
        })
    }

    /// Inserts each unexpected request after its anchor (or up front), then keeps the cheaper of that and a fresh tour.
    fn excursions(&mut self, ctx: &mut Ctx, mut plan: Vec<Step>, fresh: &[usize]) -> Result<Decision, SimError> {
        if plan.last() != Some(&home(ctx)) {
            plan.push(home(ctx));
        }
        let items = self.items(ctx, Some(&plan));
        let mut t1 = plan;
        for &a in fresh {
            let before = ctx.plan_end(&t1);
            let anchor = self.anchor(ctx, a)?;
            let at = anchor.and_then(|(p, _)| self.anchor_step(&t1, p));
            let k = at.map_or(0, |k| k + 1);
            t1.insert(k, Step::Serve { request: a });
            let delta = ctx.plan_end(&t1) - before;
            let (p, g) = anchor.map_or((String::from("none"), f64::INFINITY), |(p, g)| (p.to_string(), g));
            ctx.log_decision(format!(
                "excursion request={a} anchor={p} on_plan={} delta={delta} bound={}",
                at.is_some(),
                3.0 * g
            ));
        }
        let t2 = self.tour(ctx, &items, &self.solver)?;
        let (e1, e2) = (ctx.plan_end(&t1), ctx.plan_end(&t2));
        if e1 <= e2 {
            ctx.log_decision(format!("branch=T1 t1={e1} t2={e2}"));
            Ok(Decision::Replace(t1))
        } else {
            ctx.log_decision(format!("branch=T2 t1={e1} t2={e2}"));
            Ok(Decision::Replace(t2))
        }
    }

    fn react(&mut self, expected: Vec<(usize, usize)>, mut unexpected: Vec<usize>, ctx: &mut Ctx) -> Result<Decision, SimError> {
        let mut plan: Vec<Step> = ctx.plan().iter().copied().collect();
        let mut changed = false;
        for (a, p) in expected {
            match tag_index(&plan, 2 * p) {
                Some(k) => {
                    plan[k] = Step::Serve { request: a };
                    if let Some(d) = tag_index(&plan, 2 * p + 1) {
                        plan.remove(d);
                    }
                    changed = true;
                }
                None => unexpected.push(a),
            }
        }
        let keep = |plan: Vec<Step>| if changed { Decision::Replace(plan) } else { Decision::Keep };
        if unexpected.is_empty() {
            return Ok(keep(plan));
        }
        if self.busy(&plan, ctx) {
            self.deferred = true;
            ctx.log_decision("replan deferred while carrying");
            return Ok(keep(plan));
        }
        self.prune(&mut plan, ctx.time());
        if self.poly {
            self.excursions(ctx, plan, &unexpected)
        } else {
            self.replan(ctx, &plan)
        }
    }

    pub fn on_event(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
        match event {
            Event::Released(ids) => {
                let (expected, unexpected) = self.observe(ids, ctx);
                self.react(expected, unexpected, ctx)
            }
            Event::Served(_) | Event::Visited(_) if self.deferred => {
                let plan: Vec<Step> = ctx.plan().iter().copied().collect();
                if self.busy(&plan, ctx) {
                    Ok(Decision::Keep)
                } else {
                    self.replan(ctx, &plan)
                }
            }
            Event::Idle if !ctx.pending().is_empty() || !ctx.at_origin() => self.replan(ctx, &[]),
            _ => Ok(Decision::Keep),
        }
    }
}

/// Follows the predicted tour from the start, repairing it on unexpected releases.
#[derive(Debug, Clone)]
pub struct PredictReplan {
    core: PrCore,
}

impl PredictReplan {
    pub fn new(predicted: Vec<Job>, solver: SolverConfig, practical: bool) -> Self {
        PredictReplan { core: PrCore::new(predicted, solver, false, practical) }
    }

    /// Cheap variant: approximate tours and excursions from the nearest prediction.
    pub fn poly(predicted: Vec<Job>, exact_cap: usize, practical: bool) -> Self {
        let solver = SolverConfig { exact_cap, ..SolverConfig::approx() };
        PredictReplan { core: PrCore::new(predicted, solver, true, practical) }
    }
}

impl Policy for PredictReplan {
    fn name(&self) -> String {
        if self.core.poly { "poly-pr" } else { "predict-replan" }.into()
    }

    fn on_event(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
        match event {
            Event::Start => Ok(Decision::Replace(self.core.activate(ctx)?)),
            _ => self.core.on_event(event, ctx),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Online,
    Return,
    Trust,
}

fn predicted_makespan(ctx: &Ctx, jobs: &[Job], solver: &SolverConfig) -> Result<f64, SimError> {
    Ok(makespan_of(ctx.space(), jobs.to_vec(), solver)?)
}

/// Runs an online subroutine while t + d(p(t), o) stays within alpha times the predicted makespan,
/// returns home, then trusts the prediction.
pub struct DelayTrust {
    alpha: f64,
    solver: SolverConfig,
    chat: Option<f64>,
    limit: f64,
    sub: Box<dyn Policy>,
    core: PrCore,
    phase: Phase,
    rides: bool,
}

impl DelayTrust {
    pub fn new(predicted: Vec<Job>, alpha: f64, sub: Box<dyn Policy>, solver: SolverConfig, practical: bool) -> Self {
        let rides = predicted.iter().any(Job::is_ride);
        DelayTrust {
            alpha,
            solver,
            chat: None,
            limit: 0.0,
            sub,
            core: PrCore::new(predicted, solver, false, practical),
            phase: Phase::Online,
            rides,
        }
    }

    /// Phase three repairs by excursions and approximate tours instead of exact replanning.
    pub fn poly(mut self) -> Self {
        self.core.poly = true;
        self
    }

    /// Declines rides that cannot finish and return home within the limit.
    pub fn with_rides(mut self, rides: bool) -> Self {
        self.rides = rides;
        self
    }

    pub fn with_predicted_makespan(mut self, chat: f64) -> Self {
        self.chat = Some(chat);
        self
    }

    fn forward(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
        let d = self.sub.on_event(event, ctx)?;
        match d {
            Decision::Replace(steps) if self.rides => Ok(Decision::Replace(self.decline(steps, ctx))),
            d => Ok(d),
        }
    }

    fn decline(&self, steps: Vec<Step>, ctx: &mut Ctx) -> Vec<Step> {
        let mut steps = normalize(ctx.loaded(), steps);
        let times = ctx.project(&steps);
        let space = ctx.space();
        let cut = steps.iter().zip(&times).position(|(s, &t)| match *s {
            Step::Serve { request } if ctx.loaded() != Some(request) => {
                let j = ctx.job(request).expect("released");
                t + space.dist_to_origin(space.position_of(j.dropoff)) > self.limit
            }
            _ => false,
        });
        let Some(k) = cut else { return steps };
        if let Step::Serve { request } = steps[k] {
            ctx.log_decision(format!("declined pickup {request}"));
        }
        steps.truncate(k);
        if !steps.is_empty() || !ctx.at_origin() {
            steps.push(home(ctx));
        }
        steps
    }
}

impl Policy for DelayTrust {
    fn name(&self) -> String {
        format!("delay-trust({})", self.sub.name())
    }

    fn on_event(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
        match (self.phase, event) {
            (_, Event::Start) => {
                let chat = match self.chat {
                    Some(c) => c,
                    None => predicted_makespan(ctx, self.core.predicted(), &self.solver)?,
                };
                self.chat = Some(chat);
                self.limit = self.alpha * chat;
                ctx.set_guard(self.limit);
                ctx.log_phase("i");
                self.forward(event, ctx)
            }
            (Phase::Trust, _) => self.core.on_event(event, ctx),
            (phase, Event::Released(ids)) => {
                self.core.observe(ids, ctx);
                if phase == Phase::Online {
                    self.forward(event, ctx)
                } else {
                    Ok(Decision::Keep)
                }
            }
            (Phase::Online, Event::Guard) => {
                self.phase = Phase::Return;
                ctx.log_phase("ii");
                Ok(Decision::Replace(vec![home(ctx)]))
            }
            (Phase::Online, _) => self.forward(event, ctx),
            (Phase::Return, Event::Idle) if ctx.at_origin() => {
                self.phase = Phase::Trust;
                ctx.log_phase("iii");
                Ok(Decision::Replace(self.core.activate(ctx)?))
            }
            (Phase::Return, _) => Ok(Decision::Keep),
        }
    }
}

/// The waiting rule until it would run past alpha times the predicted makespan, then trusts the prediction.
pub struct SmartTrust {
    alpha: f64,
    solver: SolverConfig,
    chat: Option<f64>,
    wait: WaitCore,
    core: PrCore,
    phase: Phase,
    timer: Option<u64>,
}

impl SmartTrust {
    pub fn new(predicted: Vec<Job>, alpha: f64, solver: SolverConfig, practical: bool) -> Self {
        SmartTrust {
            alpha,
            solver,
            chat: None,
            wait: WaitCore::new(solver),
            core: PrCore::new(predicted, solver, false, practical),
            phase: Phase::Online,
            timer: None,
        }
    }

    pub fn poly(mut self) -> Self {
        self.core.poly = true;
        self
    }

    pub fn with_predicted_makespan(mut self, chat: f64) -> Self {
        self.chat = Some(chat);
        self
    }

    fn limit(&self) -> f64 {
        self.alpha * self.chat.unwrap_or(0.0)
    }

    fn clear_timers(&mut self, ctx: &mut Ctx) {
        if let Some(k) = self.timer.take() {
            ctx.cancel_timer(k);
        }
        self.wait.drop_timer(ctx);
    }

    fn trust(&mut self, ctx: &mut Ctx) -> Result<Decision, SimError> {
        self.clear_timers(ctx);
        self.phase = Phase::Trust;
        ctx.log_phase("iii");
        Ok(Decision::Replace(self.core.activate(ctx)?))
    }

    fn hold(&mut self, ctx: &mut Ctx) -> Result<Decision, SimError> {
        self.clear_timers(ctx);
        self.phase = Phase::Return;
        ctx.log_phase("ii");
        let until = self.limit() / 2.0;
        if ctx.time() >= until {
            return self.trust(ctx);
        }
        self.timer = Some(ctx.set_timer(until));
        Ok(Decision::Replace(Vec::new()))
    }

    fn decide(&mut self, ctx: &mut Ctx) -> Result<Decision, SimError> {
        if !ctx.at_origin() {
            return self.wait.decide(ctx);
        }
        let t = ctx.time();
        match self.wait.rule(ctx)? {
            WaitRule::Follow(steps, len) => {
                if t + len > self.limit() {
                    self.hold(ctx)
                } else {
                    Ok(self.wait.follow(ctx, steps))
                }
            }
            WaitRule::Sleep(until) if t < self.limit() => Ok(self.wait.sleep(ctx, until)),
            WaitRule::Idle if t < self.limit() => {
                self.wait.drop_timer(ctx);
                Ok(Decision::Keep)
            }
            _ => self.trust(ctx),
        }
    }
}

impl Policy for SmartTrust {
    fn name(&self) -> String {
        "smart-trust".into()
    }

    fn on_event(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
        match (self.phase, event) {
            (_, Event::Start) => {
                let chat = match self.chat {
                    Some(c) => c,
                    None => predicted_makespan(ctx, self.core.predicted(), &self.solver)?,
                };
                self.chat = Some(chat);
                ctx.log_phase("i");
                self.timer = Some(ctx.set_timer(self.limit()));
                self.decide(ctx)
            }
            (Phase::Trust, _) => self.core.on_event(event, ctx),
            (phase, Event::Released(ids)) => {
                self.core.observe(ids, ctx);
                if phase == Phase::Online && !self.wait.following {
                    self.decide(ctx)
                } else {
                    Ok(Decision::Keep)
                }
            }
            (phase, Event::Timer(k)) if self.timer == Some(*k) => {
                self.timer = None;
                if phase == Phase::Return || !self.wait.following {
                    self.trust(ctx)
                } else {
                    Ok(Decision::Keep)
                }
            }
            (Phase::Online, Event::Timer(k)) if self.wait.owns_timer(*k) => self.decide(ctx),
            (Phase::Online, Event::Idle) => {
                self.wait.following = false;
                self.decide(ctx)
            }
            _ => Ok(Decision::Keep),
        }
    }
}

/// Half-line policy with a predicted optimal makespan.
#[derive(Debug, Clone)]
pub struct AlgoHl {
    alpha: f64,
    chat: f64,
    phase: Phase,
    timer: Option<u64>,
    waypoint: f64,
}

const WAYPOINT_TAG: usize = 0;

impl AlgoHl {
    pub fn new(chat: f64, alpha: f64) -> Result<Self, SimError> {
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(SimError::Policy(format!("alpha {alpha} outside (0, 1/2]")));
        }
        if !(chat.is_finite() && chat >= 0.0) {
            return Err(SimError::Policy(format!("bad predicted makespan {chat}")));
        }
        Ok(AlgoHl { alpha, chat, phase: Phase::Online, timer: None, waypoint: 0.0 })
    }

    /// Serve whatever lies between here and the waypoint on the way there.
    fn transit(&self, ctx: &Ctx) -> Vec<Step> {
        let space = ctx.space();
        let x = space.coord_of(ctx.position()).expect("half-line position");
        let (lo, hi) = if x <= self.waypoint { (x, self.waypoint) } else { (self.waypoint, x) };
        let mut on_way: Vec<(f64, usize)> = ctx
            .pending()
            .into_iter()
            .filter_map(|i| ctx.job(i).and_then(|j| space.coord(j.pickup)).map(|c| (c, i)))
            .filter(|&(c, _)| c >= lo && c <= hi)
            .collect();
        on_way.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if x > self.waypoint {
            on_way.reverse();
        }
        let mut steps: Vec<Step> = on_way.into_iter().map(|(_, i)| Step::Serve { request: i }).collect();
        steps.push(Step::Visit { target: Target::Coord(self.waypoint), not_before: 0.0, tag: Some(WAYPOINT_TAG) });
        steps
    }

    fn enter_last(&mut self, ctx: &mut Ctx) -> Result<Decision, SimError> {
        self.phase = Phase::Trust;
        ctx.log_phase("iii");
        Ok(Decision::Replace(Mrin::plan(ctx)?))
    }
}

impl Policy for AlgoHl {
    fn name(&self) -> String {
        "algohl".into()
    }

    fn on_event(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
        match (self.phase, event) {
            (_, Event::Start) => {
                if !ctx.space().is_half_line() {
                    return Err(SimError::Policy("algohl needs a half-line space".into()));
                }
                let until = self.alpha * self.chat;
                if until <= 0.0 {
                    return self.enter_last(ctx);
                }
                ctx.log_phase("i");
                self.timer = Some(ctx.set_timer(until));
                Ok(Decision::Replace(Mrin::plan(ctx)?))
            }
            (Phase::Online, Event::Timer(k)) if self.timer == Some(*k) => {
                self.timer = None;
                self.phase = Phase::Return;
                let here = ctx.space().coord_of(ctx.position()).expect("half-line position");
                self.waypoint = 0.5 * ((1.0 - self.alpha) * self.chat + here);
                ctx.log_phase("ii");
                ctx.log_decision(format!("waypoint {}", self.waypoint));
                Ok(Decision::Replace(self.transit(ctx)))
            }
            (Phase::Return, Event::Visited(Some(WAYPOINT_TAG))) => self.enter_last(ctx),
            (Phase::Return, Event::Released(_)) => Ok(Decision::Replace(self.transit(ctx))),
            (Phase::Return, _) | (_, Event::Timer(_)) | (_, Event::Guard) => Ok(Decision::Keep),
            _ => Ok(Decision::Replace(Mrin::plan(ctx)?)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Instance, PredictionSet, Requests, RideRequest};
    use crate::metric::{half_line_space, line_space};
    use crate::policy::{Algo, AlgoConfig};
    use crate::sim::{run, Trace};
    use crate::tour::{halfline_opt, optimal};
    use std::sync::Arc;

    fn line_reqs(xs: &[f64], reqs: &[(f64, f64)]) -> (Arc<crate::metric::MetricSpace>, Vec<Request>) {
        let s = Arc::new(line_space(xs, 0.0).unwrap());
        let r = reqs.iter().map(|&(x, t)| Request { loc: s.point_at(x).unwrap(), release: t }).collect();
        (s, r)
    }

    fn tsp_case(xs: &[f64], actual: &[(f64, f64)], predicted: &[(f64, f64)]) -> (Instance, PredictionSet) {
        let (s, a) = line_reqs(xs, actual);
        let (_, p) = line_reqs(xs, predicted);
        (Instance::tsp(s, a).unwrap(), PredictionSet::Requests(Requests::Tsp(p)))
    }

    fn simulate(cfg: AlgoConfig, inst: &Instance, pred: &PredictionSet) -> Trace {
        let mut p = cfg.build(Some(pred)).unwrap();
        run(inst, p.as_mut()).unwrap_or_else(|e| panic!("{e}"))
    }

    fn opt(inst: &Instance) -> f64 {
        optimal(inst, &SolverConfig::default()).unwrap().completion
    }

    #[test]
    fn perfect_prediction_is_optimal() {
        let (inst, _) = tsp_case(&[-2.0, 1.0, 3.0], &[(3.0, 1.0), (-2.0, 4.0), (1.0, 0.0)], &[]);
        let pred = PredictionSet::perfect(&inst);
        let tr = simulate(AlgoConfig::new(Algo::PredictReplan), &inst, &pred);
        assert_eq!(tr.makespan, opt(&inst));
        assert!(tr.decisions_matching("replan").is_empty(), "{:?}", tr.decision_log);
    }

    #[test]
    fn empty_prediction_acts_like_replan() {
        let (inst, pred) = tsp_case(&[1.0], &[(1.0, 0.0)], &[]);
        assert_eq!(simulate(AlgoConfig::new(Algo::PredictReplan), &inst, &pred).makespan, 2.0);
    }

    #[test]
    fn unexpected_release_on_half_line() {
        let s = Arc::new(half_line_space(&[4.0, 5.0]).unwrap());
        let r = |x: f64, t: f64| Request { loc: s.point_at(x).unwrap(), release: t };
        let inst = Instance::tsp(s.clone(), vec![r(5.0, 0.0), r(4.0, 6.0)]).unwrap();
        let pred = PredictionSet::Requests(Requests::Tsp(vec![r(5.0, 0.0)]));
        let tr = simulate(AlgoConfig::new(Algo::PredictReplan).practical(false), &inst, &pred);
        // at 4 exactly when the surprise appears
        assert_eq!(tr.services, vec![5.0, 6.0]);
        assert_eq!(tr.makespan, 10.0);
        assert_eq!(tr.decisions_matching("replan").len(), 1);
    }

    #[test]
    fn scalar_prediction_is_rejected() {
        let cfg = AlgoConfig::new(Algo::PredictReplan);
        assert!(cfg.build(Some(&PredictionSet::Makespan(3.0))).is_err());
    }

    #[test]
    fn delay_trust_phases() {
        // predicted makespan 4, alpha 1/2: phase one ends once t + d(p, o) would pass 2
        let (inst, pred) = tsp_case(&[2.0], &[(2.0, 0.0)], &[(2.0, 0.0)]);
        let tr = simulate(AlgoConfig::new(Algo::DelayTrust).alpha(0.5).sub(Algo::Replan), &inst, &pred);
        let phases: Vec<(f64, &str)> = tr.phase_log.iter().map(|e| (e.time, e.label.as_str())).collect();
        assert_eq!(phases, vec![(0.0, "i"), (1.0, "ii"), (2.0, "iii")]);
        assert_eq!(tr.makespan, 6.0);
        assert!(tr.makespan <= 1.5 * opt(&inst) + 1e-9);
    }

    #[test]
    fn delay_trust_empty_instance() {
        let (inst, pred) = tsp_case(&[2.0], &[], &[(2.0, 0.0)]);
        let tr = simulate(AlgoConfig::new(Algo::DelayTrust).alpha(0.25), &inst, &pred);
        assert_eq!(tr.makespan, 0.0);
    }

    #[test]
    fn smart_trust_perfect_single_request() {
        let (inst, _) = tsp_case(&[1.0], &[(1.0, 0.0)], &[]);
        let pred = PredictionSet::perfect(&inst);
        let tr = simulate(AlgoConfig::new(Algo::SmartTrust).alpha(0.5), &inst, &pred);
        assert!(tr.makespan <= 3.0);
        assert_eq!(tr.makespan, 3.0);
    }

    #[test]
    fn smart_trust_robustness_witness() {
        let (alpha, eps) = (0.5, 1e-3);
        let (inst, pred) = tsp_case(&[-0.5, alpha / 4.0 + eps], &[(alpha / 4.0 + eps, alpha / 4.0)], &[(-0.5, 0.5)]);
        let tr = simulate(AlgoConfig::new(Algo::SmartTrust).alpha(alpha), &inst, &pred);
        let ratio = tr.makespan / opt(&inst);
        assert!((5.88..=6.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn algohl_robustness_witness() {
        let (alpha, eps) = (0.3, 1e-4);
        let s = Arc::new(half_line_space(&[alpha / 3.0]).unwrap());
        let inst = Instance::tsp(s.clone(), vec![Request { loc: s.point_at(alpha / 3.0).unwrap(), release: alpha / 3.0 + eps }]).unwrap();
        let tr = simulate(AlgoConfig::new(Algo::Algohl).alpha(alpha), &inst, &PredictionSet::Makespan(1.0));
        let ratio = tr.makespan / halfline_opt([(alpha / 3.0, alpha / 3.0 + eps)]);
        assert!((4.9..=5.0).contains(&ratio), "ratio {ratio}");
        assert_eq!(tr.phase_log.iter().map(|e| e.label.as_str()).collect::<Vec<_>>(), ["i", "ii", "iii"]);
    }

    #[test]
    fn algohl_zero_prediction_is_mrin() {
        let s = Arc::new(half_line_space(&[1.0]).unwrap());
        let inst = Instance::tsp(s.clone(), vec![Request { loc: s.point_at(1.0).unwrap(), release: 1.0 }]).unwrap();
        let tr = simulate(AlgoConfig::new(Algo::Algohl).alpha(0.5), &inst, &PredictionSet::Makespan(0.0));
        assert_eq!(tr.makespan, 3.0);
        assert!(AlgoConfig::new(Algo::Algohl).alpha(0.6).build(Some(&PredictionSet::Makespan(1.0))).is_err());
    }

    #[test]
    fn poly_switches_to_fresh_tour() {
        let xs = [1.0, 6.0, 8.0, 9.0];
        let (inst, pred) = tsp_case(&xs, &[(8.0, 7.0), (6.0, 7.0)], &[(1.0, 6.0), (9.0, 2.0)]);
        let tr = simulate(AlgoConfig::new(Algo::PolyPr).practical(false), &inst, &pred);
        let branch = tr.decisions_matching("branch=");
        assert_eq!(branch.len(), 1);
        assert!(branch[0].label.starts_with("branch=T2"));
        assert_eq!(tr.makespan, 23.0);
    }

    fn excursion_numbers(label: &str) -> (f64, f64) {
        let field = |k: &str| -> f64 {
            let rest = &label[label.find(k).unwrap() + k.len()..];
            rest.split_whitespace().next().unwrap().parse().unwrap()
        };
        (field("delta="), field("bound="))
    }

    #[test]
    fn poly_excursion_from_served_anchor() {
        // the anchor at 2 is served by t = 2, then a surprise appears at 3
        let (inst, pred) = tsp_case(&[2.0, 3.0, -4.0], &[(2.0, 0.0), (-4.0, 0.0), (3.0, 3.0)], &[(2.0, 0.0), (-4.0, 0.0)]);
        let tr = simulate(AlgoConfig::new(Algo::PolyPr).practical(false), &inst, &pred);
        let ex = tr.decisions_matching("excursion");
        assert_eq!(ex.len(), 1);
        assert!(ex[0].label.contains("anchor=0 on_plan=false"));
        let (delta, bound) = excursion_numbers(&ex[0].label);
        assert!(delta <= bound + 1e-9);
    }

    fn ride_case(xs: &[f64], actual: &[(f64, f64, f64)], predicted: &[(f64, f64, f64)]) -> (Instance, PredictionSet) {
        let s = Arc::new(line_space(xs, 0.0).unwrap());
        let mk = |v: &[(f64, f64, f64)]| -> Vec<RideRequest> {
            v.iter()
                .map(|&(a, b, t)| RideRequest { pickup: s.point_at(a).unwrap(), dropoff: s.point_at(b).unwrap(), release: t })
                .collect()
        };
        let (a, p) = (mk(actual), mk(predicted));
        (Instance::darp(s, a).unwrap(), PredictionSet::Requests(Requests::Darp(p)))
    }

    #[test]
    fn rides_perfect_prediction() {
        let (inst, _) = ride_case(&[1.0, 2.0, 5.0], &[(1.0, 5.0, 0.0), (2.0, 1.0, 3.0)], &[]);
        let tr = simulate(AlgoConfig::new(Algo::PredictReplan), &inst, &PredictionSet::perfect(&inst));
        assert_eq!(tr.makespan, opt(&inst));
    }

    #[test]
    fn replan_waits_for_dropoff() {
        let (inst, pred) = ride_case(&[1.0, 2.0, 5.0], &[(1.0, 5.0, 0.0), (2.0, 0.0, 3.0)], &[(1.0, 5.0, 0.0)]);
        let tr = simulate(AlgoConfig::new(Algo::PredictReplan), &inst, &pred);
        let deferred = tr.decisions_matching("deferred");
        assert_eq!(deferred.len(), 1);
        assert_eq!(deferred[0].time, 3.0);
        let replans = tr.decisions_matching("replan over");
        assert_eq!(replans.len(), 1, "{:?}", tr.decision_log);
        assert_eq!(replans[0].time, 5.0);
        assert_eq!(tr.makespan, 10.0);
    }

    #[test]
    fn phase_one_declines_late_ride() {
        // predicted makespan 4 with alpha 1: the actual ride 3 -> 4 cannot be back home by 4
        let (inst, pred) = ride_case(&[1.0, 2.0, 3.0, 4.0], &[(3.0, 4.0, 0.0)], &[(1.0, 2.0, 0.0)]);
        let tr = simulate(AlgoConfig::new(Algo::DelayTrust).alpha(1.0).sub(Algo::Replan), &inst, &pred);
        let declined = tr.decisions_matching("declined pickup 0");
        assert!(!declined.is_empty());
        assert_eq!(declined[0].time, 0.0);
        assert!(tr.services[0] >= 4.0);
        assert_eq!(tr.makespan, 12.0);
    }

    #[test]
    fn phase_one_keeps_ride_that_fits() {
        // ride 1 -> 2 ends at 2 and is home at exactly 4
        let (inst, pred) = ride_case(&[1.0, 2.0], &[(1.0, 2.0, 0.0)], &[(1.0, 2.0, 0.0)]);
        let tr = simulate(AlgoConfig::new(Algo::DelayTrust).alpha(1.0).sub(Algo::Replan), &inst, &pred);
        assert!(tr.decisions_matching("declined").is_empty());
        assert_eq!(tr.makespan, 4.0);
    }
}
