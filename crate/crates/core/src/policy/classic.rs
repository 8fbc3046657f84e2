//! Prediction-free baselines.

use crate::error::SimError;
use crate::sim::{Ctx, Decision, Event, Policy, Step};
use crate::tour::SolverConfig;

/// Recomputes a fastest tour home through everything pending at each release.
#[derive(Debug, Clone)]
pub struct Replan {
    pub solver: SolverConfig,
}

impl Replan {
    pub fn new(solver: SolverConfig) -> Self {
        Replan { solver }
    }
}

impl Policy for Replan {
    fn name(&self) -> String {
        "replan".into()
    }

    fn on_event(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
        match event {
            Event::Start | Event::Released(_) => Ok(Decision::Replace(ctx.tour_pending(&self.solver)?)),
            Event::Idle => {
                if ctx.pending().is_empty() {
                    if ctx.at_origin() {
                        Ok(Decision::Keep)
                    } else {
                        Ok(Decision::Replace(vec![Step::visit_point(ctx.space().origin())]))
                    }
                } else {
                    Ok(Decision::Replace(ctx.tour_pending(&self.solver)?))
                }
            }
            _ => Ok(Decision::Keep),
        }
    }
}

/// Commits to a tour from the origin and ignores releases until back home.
#[derive(Debug, Clone)]
pub struct Ignore {
    pub solver: SolverConfig,
    busy: bool,
}

impl Ignore {
    pub fn new(solver: SolverConfig) -> Self {
        Ignore { solver, busy: false }
    }

    fn start_tour(&mut self, ctx: &mut Ctx) -> Result<Decision, SimError> {
        if ctx.pending().is_empty() {
            return Ok(Decision::Keep);
        }
        self.busy = true;
        Ok(Decision::Replace(ctx.tour_pending(&self.solver)?))
    }
}

impl Policy for Ignore {
    fn name(&self) -> String {
        "ignore".into()
    }

    fn on_event(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
        match event {
            Event::Start | Event::Released(_) if !self.busy => {
                if ctx.at_origin() {
                    self.start_tour(ctx)
                } else {
                    self.busy = true;
                    Ok(Decision::Replace(vec![Step::visit_point(ctx.space().origin())]))
                }
            }
            Event::Idle => {
                self.busy = false;
                if ctx.at_origin() {
                    self.start_tour(ctx)
                } else {
                    self.busy = true;
                    Ok(Decision::Replace(vec![Step::visit_point(ctx.space().origin())]))
                }
            }
            _ => Ok(Decision::Keep),
        }
    }
}

/// What the waiting rule decides at the origin.
#[derive(Debug, Clone, PartialEq)]
pub enum WaitRule {
    /// Depart now on this tour of the given length.
    Follow(Vec<Step>, f64),
    /// Tour too long for the current time; wake up at the given time.
    Sleep(f64),
    /// Nothing pending.
    Idle,
}

/// Shared state of the waiting rule: follow a tour only once its length is at most the current time.
#[derive(Debug, Clone)]
pub struct WaitCore {
    pub solver: SolverConfig,
    pub following: bool,
    timer: Option<u64>,
}

impl WaitCore {
    pub fn new(solver: SolverConfig) -> Self {
        WaitCore { solver, following: false, timer: None }
    }

    pub fn owns_timer(&self, token: u64) -> bool {
        self.timer == Some(token)
    }

    pub fn rule(&self, ctx: &Ctx) -> Result<WaitRule, SimError> {
        if ctx.pending().is_empty() {
            return Ok(WaitRule::Idle);
        }
        let (steps, len) = ctx.tour_from_origin(&self.solver)?;
        if len <= ctx.time() {
            Ok(WaitRule::Follow(steps, len))
        } else {
            Ok(WaitRule::Sleep(len))
        }
    }

    pub fn follow(&mut self, ctx: &mut Ctx, steps: Vec<Step>) -> Decision {
        self.drop_timer(ctx);
        self.following = true;
        Decision::Replace(steps)
    }

    pub fn sleep(&mut self, ctx: &mut Ctx, until: f64) -> Decision {
        self.drop_timer(ctx);
        self.timer = Some(ctx.set_timer(until));
        Decision::Replace(Vec::new())
    }

    pub fn drop_timer(&mut self, ctx: &mut Ctx) {
        if let Some(k) = self.timer.take() {
            ctx.cancel_timer(k);
        }
    }

    /// Applies the rule, or heads home first when stranded away from the origin.
    pub fn decide(&mut self, ctx: &mut Ctx) -> Result<Decision, SimError> {
        if !ctx.at_origin() {
            let home = vec![Step::visit_point(ctx.space().origin())];
            return Ok(self.follow(ctx, home));
        }
        Ok(match self.rule(ctx)? {
            WaitRule::Follow(steps, _) => self.follow(ctx, steps),
            WaitRule::Sleep(until) => self.sleep(ctx, until),
            WaitRule::Idle => {
                self.drop_timer(ctx);
                Decision::Keep
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct SmartStart {
    core: WaitCore,
}

impl SmartStart {
    pub fn new(solver: SolverConfig) -> Self {
        SmartStart { core: WaitCore::new(solver) }
    }
}

impl Policy for SmartStart {
    fn name(&self) -> String {
        "smartstart".into()
    }

    fn on_event(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
        match event {
            Event::Start | Event::Released(_) if !self.core.following => self.core.decide(ctx),
            Event::Timer(k) if self.core.owns_timer(*k) => {
                self.core.timer = None;
                self.core.decide(ctx)
            }
            Event::Idle => {
                self.core.following = false;
                self.core.decide(ctx)
            }
            _ => Ok(Decision::Keep),
        }
    }
}

/// Half-line rule: go right while anything released and unserved lies to the right, else head home.
#[derive(Debug, Clone, Default)]
pub struct Mrin;

impl Mrin {
    pub fn plan(ctx: &Ctx) -> Result<Vec<Step>, SimError> {
        let space = ctx.space();
        if !space.is_half_line() {
            return Err(SimError::Policy("mrin needs a half-line space".into()));
        }
        let x = space.coord_of(ctx.position()).expect("half-line position");
        let mut reqs: Vec<(f64, usize)> = ctx
            .pending()
            .into_iter()
            .filter_map(|i| ctx.job(i).and_then(|j| space.coord(j.pickup)).map(|c| (c, i)))
            .collect();
        reqs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut steps = Vec::new();
        if reqs.is_empty() && ctx.at_origin() {
            return Ok(steps);
        }
        if reqs.iter().any(|&(c, _)| c > x) {
            steps.extend(reqs.iter().filter(|&&(c, _)| c >= x).map(|&(_, i)| Step::Serve { request: i }));
        } else {
            steps.extend(reqs.iter().rev().map(|&(_, i)| Step::Serve { request: i }));
            steps.push(Step::visit_point(space.origin()));
        }
        Ok(steps)
    }
}

impl Policy for Mrin {
    fn name(&self) -> String {
        "mrin".into()
    }

    fn on_event(&mut self, event: &Event, ctx: &mut Ctx) -> Result<Decision, SimError> {
        match event {
            Event::Timer(_) | Event::Guard => Ok(Decision::Keep),
            _ => Ok(Decision::Replace(Mrin::plan(ctx)?)),
        }
    }
}
