use crate::error::{Error, Result};
use crate::model::Arrival;
use crate::policy::OnlinePolicy;

/// The tiering rule: merge as little as possible while every file stays at least
/// as long as all files above it combined and the stack holds at most K files.
///
/// Merging never changes the total length above a surviving file, so file `i`
/// survives iff `f_i - (sum above i) >= ℓ_t`. The minimal width therefore merges
/// exactly down to the lowest violating file, or enough to respect the cap.
#[derive(Debug, Clone)]
pub struct DefaultPolicy {
    k: usize,
    /// File lengths, bottom first.
    files: Vec<f64>,
}

impl DefaultPolicy {
    pub fn new(k: usize) -> Result<Self> {
        if k < 1 {
            return Err(Error::domain("default policy needs K >= 1"));
        }
        Ok(Self { k, files: Vec::new() })
    }

    pub fn files(&self) -> &[f64] {
        &self.files
    }

    /// Each file is at least the sum of those above it.
    pub fn ordering_holds(&self) -> bool {
        let mut above = 0.0;
        for &f in self.files.iter().rev() {
            if f < above {
                return false;
            }
            above += f;
        }
        true
    }
}

impl OnlinePolicy for DefaultPolicy {
    fn name(&self) -> String {
        format!("default:{}", self.k)
    }

    fn decide(&mut self, arrival: Arrival) -> Result<usize> {
        let k = self.files.len();
        let x = arrival.length;
        let mut lowest_violation = None;
        let mut above = 0.0;
        for i in (0..k).rev() {
            if self.files[i] - above < x {
                lowest_violation = Some(i);
            }
            above += self.files[i];
        }
        // Keeping files 0..keep (exclusive) means width k + 1 - keep.
        let mut keep = k;
        if let Some(i) = lowest_violation {
            keep = keep.min(i);
        }
        keep = keep.min(self.k - 1);
        let width = k + 1 - keep;
        let merged = self.files.drain(keep..).rev().fold(x, |acc, f| acc + f);
        self.files.push(merged);
        Ok(width)
    }

    fn stationary_zero_run(&self, max: f64) -> f64 {
        // A zero violates nothing; at the cap it is folded into the top file.
        if self.files.len() == self.k {
            max
        } else {
            0.0
        }
    }
}
