use crate::error::{Error, Result};
use crate::model::{Arrival, CostModel};
use crate::opt::{uniform_opt_cappedk, uniform_opt_linear, UniformParams};
use crate::policy::OnlinePolicy;

/// Largest phase for which a capped plan with budget ≥ 2 is materialised.
const MAX_PLAN_LEN: f64 = (1u64 << 26) as f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DoublingMode {
    /// Stack capped at K: one bottom file plus a child plan using K−1 slots.
    Capped(usize),
    Linear,
}

/// What the policy does between phase restarts.
#[derive(Debug, Clone)]
enum Plan {
    /// Nothing may sit above the bottom file: every step merges everything.
    FullMerge,
    /// One slot above the bottom file: the child merges its whole scope each step.
    ChildMergeAll,
    Widths(Vec<usize>),
}

/// Doubling-phase policy for uniform-like inputs.
///
/// At every power-of-two time `T` everything is merged into one file. The steps
/// `T+1..2T-1` then follow the optimal uniform schedule of size `T-1`, computed for
/// the mean length and read rate of the arrivals before `T`, on top of that file.
/// In known-distribution mode a single static plan covers the whole horizon.
#[derive(Debug, Clone)]
pub struct Doubling {
    mode: DoublingMode,
    known: bool,
    /// Steps processed so far. A float so that zero runs of astronomic length can
    /// be absorbed; exact up to 2^53.
    t: f64,
    next_phase: f64,
    plan: Plan,
    plan_pos: usize,
    /// Files above the bottom file (the whole stack in known mode).
    child_files: usize,
    sum_length: f64,
    sum_read: f64,
    phases: u64,
    approximate: bool,
}

impl Doubling {
    pub fn new(mode: DoublingMode) -> Result<Self> {
        if let DoublingMode::Capped(0) = mode {
            return Err(Error::domain("doubling-capped needs K >= 1"));
        }
        Ok(Self {
            mode,
            known: false,
            t: 0.0,
            next_phase: 1.0,
            plan: Plan::Widths(Vec::new()),
            plan_pos: 0,
            child_files: 0,
            sum_length: 0.0,
            sum_read: 0.0,
            phases: 0,
            approximate: false,
        })
    }

    /// Known-distribution mode: plays the optimal schedule for `(ℓ̄, r̄)^horizon`.
    pub fn known(model: &CostModel, mean_length: f64, mean_read: f64, horizon: usize) -> Result<Self> {
        let mode = match model {
            CostModel::CappedK(k) => DoublingMode::Capped(*k),
            CostModel::Linear => DoublingMode::Linear,
            CostModel::General(_) => {
                return Err(Error::domain("the doubling policy supports the capped and linear models only"))
            }
        };
        let mut p = Self::new(mode)?;
        p.known = true;
        p.next_phase = f64::INFINITY;
        let params = UniformParams::new(mean_length, mean_read, horizon)?;
        p.plan = p.plan_for(params, false)?;
        Ok(p)
    }

    /// True if some phase used the approximate linear construction.
    pub fn approximate(&self) -> bool {
        self.approximate
    }

    fn plan_for(&mut self, params: UniformParams, as_child: bool) -> Result<Plan> {
        match self.mode {
            DoublingMode::Capped(k) => {
                let budget = if as_child { k - 1 } else { k };
                match budget {
                    0 => Ok(Plan::FullMerge),
                    1 if as_child => Ok(Plan::ChildMergeAll),
                    _ => {
                        if params.n as f64 > MAX_PLAN_LEN {
                            return Err(Error::TooLarge { n: params.n, max_n: MAX_PLAN_LEN as usize });
                        }
                        let sol = uniform_opt_cappedk(params, budget)?;
                        Ok(Plan::Widths(sol.tree.to_schedule().widths))
                    }
                }
            }
            DoublingMode::Linear => {
                let params = if params.mean_length + params.mean_read > 0.0 {
                    params
                } else {
                    // Nothing observed yet carries weight; any shape is optimal, use a balanced one.
                    UniformParams { mean_length: 1.0, mean_read: 1.0, ..params }
                };
                let sol = uniform_opt_linear(params)?;
                self.approximate |= sol.approximate;
                Ok(Plan::Widths(sol.tree.to_schedule().widths))
            }
        }
    }

    fn stack_size(&self) -> usize {
        if self.known {
            self.child_files
        } else if self.t == 0.0 {
            0
        } else {
            1 + self.child_files
        }
    }
}

impl OnlinePolicy for Doubling {
    fn name(&self) -> String {
        match (self.known, self.mode) {
            (true, _) => "doubling-known".into(),
            (false, DoublingMode::Capped(k)) => format!("doubling-capped:{k}"),
            (false, DoublingMode::Linear) => "doubling-linear".into(),
        }
    }

    fn decide(&mut self, arrival: Arrival) -> Result<usize> {
        let t = self.t + 1.0;
        let width = if !self.known && t >= self.next_phase {
            let w = self.stack_size() + 1;
            self.phases += 1;
            self.next_phase *= 2.0;
            let n_prev = t - 1.0;
            let params = if n_prev > 0.0 {
                UniformParams::new(self.sum_length / n_prev, self.sum_read / n_prev, n_prev as usize)?
            } else {
                UniformParams::new(0.0, 0.0, 0)?
            };
            self.plan = self.plan_for(params, true)?;
            self.plan_pos = 0;
            self.child_files = 0;
            w
        } else {
            match &self.plan {
                Plan::FullMerge => {
                    let w = self.stack_size() + 1;
                    // Afterwards the stack is a single file: the bottom file outside
                    // known mode, the only child file in it.
                    self.child_files = usize::from(self.known);
                    w
                }
                Plan::ChildMergeAll => {
                    let w = self.child_files + 1;
                    self.child_files = 1;
                    w
                }
                Plan::Widths(ws) => {
                    let w = *ws.get(self.plan_pos).ok_or_else(|| {
                        Error::domain(format!("doubling plan exhausted at t={t}; the horizon was too short"))
                    })?;
                    self.plan_pos += 1;
                    self.child_files = self.child_files + 2 - w;
                    w
                }
            }
        };
        self.t = t;
        self.sum_length += arrival.length;
        self.sum_read += arrival.read_rate;
        Ok(width)
    }

    fn diagnostic(&self) -> Option<f64> {
        Some(self.phases as f64)
    }

    fn stationary_zero_run(&self, max: f64) -> f64 {
        if self.known {
            return 0.0;
        }
        let stationary = match self.plan {
            Plan::FullMerge => self.child_files == 0 && self.t >= 1.0,
            Plan::ChildMergeAll => self.child_files == 1,
            Plan::Widths(_) => false,
        };
        if !stationary {
            return 0.0;
        }
        // Steps t+1 .. next_phase-1 stay inside the phase.
        max.min(self.next_phase - self.t - 1.0).max(0.0).floor()
    }

    fn absorb_zero_run(&mut self, count: f64, _top_length: f64) {
        let t = self.t + count;
        // A run up to the end of the phase must leave the next step on the phase
        // boundary even where `t` has no unit resolution.
        self.t = if count >= self.next_phase - self.t - 1.0 { t.max(self.next_phase - 1.0) } else { t };
    }
}
