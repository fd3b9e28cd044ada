use crate::error::Result;
use crate::model::Arrival;
use crate::policy::OnlinePolicy;

/// Merges everything at every step: the only schedule available when K = 1.
#[derive(Debug, Clone, Default)]
pub struct MergeAll {
    files: usize,
}

impl MergeAll {
    pub fn new() -> Self {
        Self::default()
    }
}

impl OnlinePolicy for MergeAll {
    fn name(&self) -> String {
        "merge-all".into()
    }

    fn decide(&mut self, _arrival: Arrival) -> Result<usize> {
        let w = self.files + 1;
        self.files = 1;
        Ok(w)
    }

    fn stationary_zero_run(&self, max: f64) -> f64 {
        if self.files == 1 {
            max
        } else {
            0.0
        }
    }
}
