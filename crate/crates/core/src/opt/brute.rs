use crate::error::{Error, Result};
use crate::model::{CostModel, Instance, Schedule};
use crate::opt::OptSolution;

/// Catalan(12) = 208012 schedules; larger horizons take too long to enumerate.
pub const BRUTE_FORCE_DEFAULT_MAX_N: usize = 12;

/// Exhaustive minimum over every feasible schedule. Used as a test oracle; it
/// shares no code with the DP or the simulator.
pub fn brute_force_opt(instance: &Instance, model: &CostModel, max_n: usize) -> Result<OptSolution> {
    let n = instance.len();
    if n > max_n {
        return Err(Error::TooLarge { n, max_n });
    }
    model.check(n)?;
    let mut search = Search {
        steps: instance.steps().iter().map(|a| (a.length, a.read_rate)).collect(),
        model,
        files: Vec::with_capacity(n),
        widths: Vec::with_capacity(n),
        best: f64::INFINITY,
        best_widths: Vec::new(),
    };
    search.visit(0.0);
    if n > 0 && search.best.is_infinite() {
        return Err(Error::internal("no feasible schedule found"));
    }
    let cost = if n == 0 { 0.0 } else { search.best };
    Ok(OptSolution { cost, schedule: Schedule::new(search.best_widths) })
}

struct Search<'a> {
    steps: Vec<(f64, f64)>,
    model: &'a CostModel,
    files: Vec<f64>,
    widths: Vec<usize>,
    best: f64,
    best_widths: Vec<usize>,
}

impl Search<'_> {
    fn visit(&mut self, cost: f64) {
        let t = self.widths.len();
        if t == self.steps.len() {
            if cost < self.best {
                self.best = cost;
                self.best_widths = self.widths.clone();
            }
            return;
        }
        let (length, read) = self.steps[t];
        let k_prev = self.files.len();
        for w in 1..=k_prev + 1 {
            let k = k_prev + 2 - w;
            let Some(f) = self.model.read_factor(k) else { continue };
            let removed: Vec<f64> = self.files.drain(k_prev + 1 - w..).collect();
            let merged = length + removed.iter().sum::<f64>();
            let read_cost = if read == 0.0 { 0.0 } else { read * f };
            self.files.push(merged);
            self.widths.push(w);
            self.visit(cost + merged + read_cost);
            self.widths.pop();
            self.files.pop();
            self.files.extend(removed);
        }
    }
}
