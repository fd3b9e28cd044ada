use crate::error::{Error, Result};
use crate::model::Arrival;
use crate::policy::OnlinePolicy;

/// Balanced rent-or-buy for a stack capped at K files.
///
/// Level `h` owns a top segment of the stack (its scope). Level 1 merges its
/// whole scope at every step. Level `h > 1` keeps its oldest file at the bottom of
/// the scope and hands everything above it to level `h - 1`. It lets the child
/// run for as long as the child's accumulated cost in the current phase stays
/// below `(h-1)` times the cost of merging the whole scope; the arrival that would
/// reach that threshold ends the phase with a full merge instead.
/// Zero runs up to this length are absorbed by repeated addition.
const EXACT_ABSORB_MAX: f64 = (1u64 << 22) as f64;

#[derive(Debug, Clone)]
pub struct Brb {
    k: usize,
    /// `levels[0]` is level K, the last entry is level 1.
    levels: Vec<Level>,
    phases: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Level {
    /// No arrival has reached this scope since the last reset.
    fresh: bool,
    /// Total length held in the scope.
    len: f64,
    files: usize,
    /// Child cost accumulated during the current phase.
    acc: f64,
}

impl Level {
    fn reset() -> Self {
        Level { fresh: true, ..Default::default() }
    }
}

impl Brb {
    pub fn new(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::domain("BRB needs K >= 1"));
        }
        Ok(Self { k, levels: vec![Level::reset(); k], phases: 0 })
    }

    fn height(&self, idx: usize) -> usize {
        self.k - idx
    }

    /// The (width, merge cost) level `idx` would choose for `a`, without committing.
    fn peek(&self, idx: usize, a: Arrival) -> (usize, f64) {
        let lv = &self.levels[idx];
        let h = self.height(idx);
        let full = (lv.files + 1, lv.len + a.length);
        if h == 1 {
            return full;
        }
        if lv.fresh {
            return (1, a.length);
        }
        let (cw, cc) = self.peek(idx + 1, a);
        if lv.acc + cc >= (h - 1) as f64 * (lv.len + a.length) {
            full
        } else {
            (cw, cc)
        }
    }

    fn reset_below(&mut self, idx: usize) {
        for lv in &mut self.levels[idx + 1..] {
            *lv = Level::reset();
        }
    }

    fn commit(&mut self, idx: usize, a: Arrival) -> (usize, f64) {
        let h = self.height(idx);
        let lv = self.levels[idx];
        if h == 1 {
            let out = (lv.files + 1, lv.len + a.length);
            self.levels[idx] = Level { fresh: false, len: out.1, files: 1, acc: 0.0 };
            return out;
        }
        if lv.fresh {
            self.levels[idx] = Level { fresh: false, len: a.length, files: 1, acc: 0.0 };
            self.reset_below(idx);
            if idx == 0 {
                self.phases += 1;
            }
            return (1, a.length);
        }
        let (_, cc) = self.peek(idx + 1, a);
        let total = lv.len + a.length;
        if lv.acc + cc >= (h - 1) as f64 * total {
            self.levels[idx] = Level { fresh: false, len: total, files: 1, acc: 0.0 };
            self.reset_below(idx);
            if idx == 0 {
                self.phases += 1;
            }
            return (lv.files + 1, total);
        }
        let (cw, cc) = self.commit(idx + 1, a);
        let child_files = self.levels[idx + 1].files;
        let lv = &mut self.levels[idx];
        lv.acc += cc;
        lv.len = total;
        lv.files = 1 + child_files;
        (cw, cc)
    }

    pub fn stack_size(&self) -> usize {
        self.levels[0].files
    }
}

impl OnlinePolicy for Brb {
    fn name(&self) -> String {
        format!("brb:{}", self.k)
    }

    fn decide(&mut self, arrival: Arrival) -> Result<usize> {
        let (w, _) = self.commit(0, arrival);
        if self.stack_size() > self.k {
            return Err(Error::internal(format!("BRB stack reached {} > K={}", self.stack_size(), self.k)));
        }
        Ok(w)
    }

    fn diagnostic(&self) -> Option<f64> {
        Some(self.phases as f64)
    }

    fn stationary_zero_run(&self, max: f64) -> f64 {
        // Stationary when every level delegates down to a level 1 holding exactly one
        // file X: each zero then costs X at every level of the chain.
        let Some(x) = self.chain_file() else { return 0.0 };
        let mut m = max;
        for idx in 0..self.k - 1 {
            let Some(before) = self.zeros_before_threshold(idx, x) else { return 0.0 };
            m = m.min(if before <= EXACT_ABSORB_MAX {
                // Short runs are replayed exactly; step the last few one at a time.
                before - 2.0
            } else {
                before
            });
        }
        m.max(0.0).floor()
    }

    fn absorb_zero_run(&mut self, count: f64, _top_length: f64) {
        let Some(x) = self.chain_file() else { return };
        for idx in 0..self.k - 1 {
            let binding = self.zeros_before_threshold(idx, x).is_some_and(|b| count >= b);
            let thr = self.threshold(idx);
            let lv = &mut self.levels[idx];
            if count <= EXACT_ABSORB_MAX {
                // Repeat the additions so the result is bit-identical to stepping.
                for _ in 0..count as u64 {
                    lv.acc += x;
                }
            } else {
                lv.acc += count * x;
                if binding {
                    // The next zero crosses the threshold. When X is below the
                    // rounding unit of `acc`, repeated additions would never get
                    // there, so place `acc` one zero short of it.
                    lv.acc = lv.acc.max(thr - x);
                }
            }
        }
    }
}

impl Brb {
    /// The single file held by level 1 when every level above delegates to it.
    fn chain_file(&self) -> Option<f64> {
        let bottom = self.levels[self.k - 1];
        if bottom.fresh || bottom.files != 1 || self.levels[..self.k - 1].iter().any(|lv| lv.fresh) {
            return None;
        }
        Some(bottom.len)
    }

    /// The full-merge threshold of level `idx` for a zero arrival.
    fn threshold(&self, idx: usize) -> f64 {
        (self.height(idx) - 1) as f64 * self.levels[idx].len
    }

    /// How many zeros level `idx` passes down before the next one triggers its full
    /// merge; `None` if the very next zero does.
    fn zeros_before_threshold(&self, idx: usize, x: f64) -> Option<f64> {
        let thr = self.threshold(idx);
        let acc = self.levels[idx].acc;
        if acc + x >= thr {
            return None;
        }
        if x > 0.0 {
            Some((((thr - acc) / x).ceil() - 1.0).max(0.0))
        } else {
            Some(f64::INFINITY)
        }
    }
}
