use crate::error::Result;
use crate::model::Arrival;
use crate::policy::OnlinePolicy;

/// Online policy for linear BMC that keeps every stack file's left mass at least
/// its accumulated right reads (`ℓ[L_s] >= r[R_s]`).
///
/// On arrival `(ℓ_t, r_t)` the oldest file whose invariant would break once `r_t`
/// is charged (`ℓ[L_s] < r[R_s] + r_t`) is merged together with everything above
/// it and the new file; the merged file starts with `ℓ[L] =` the absorbed length
/// and `r[R] = 0`. With no such file the new file is appended. Ties survive.
///
/// `r[R_s]` is stored implicitly as `G - g_s`, where `G` is the running read total
/// and `g_s` its value when `s` was created, so the test becomes
/// `ℓ[L_s] + g_s < G + r_t`. A running prefix minimum of `ℓ[L_s] + g_s` from the
/// bottom makes "oldest violator" a binary search.
#[derive(Debug, Clone, Default)]
pub struct LinearOnline {
    spine: Vec<SpineFile>,
    /// Cumulative read rate of all arrivals so far.
    reads_total: f64,
    /// Σ over nodes already off the spine of 2·(ℓ_x + r_x + r[R_x]).
    frozen_potential: f64,
}

#[derive(Debug, Clone, Copy)]
struct SpineFile {
    /// Length and read rate of the node's own arrival.
    own_length: f64,
    own_read: f64,
    /// Total length of the file minus its own arrival: ℓ[L_s].
    left_mass: f64,
    /// `reads_total` right after this node was created.
    created_reads: f64,
    /// min over this and older spine files of `left_mass + created_reads`.
    prefix_min_key: f64,
    /// Length of the stored file: own_length + left_mass.
    file_length: f64,
}

impl SpineFile {
    fn key(&self) -> f64 {
        self.left_mass + self.created_reads
    }
}

impl LinearOnline {
    pub fn new() -> Self {
        Self::default()
    }

    /// `(ℓ[L_s], r[R_s])` for the stack files, bottom first.
    pub fn aggregates(&self) -> Vec<(f64, f64)> {
        self.spine.iter().map(|s| (s.left_mass, self.reads_total - s.created_reads)).collect()
    }

    /// `ℓ[L_s] >= r[R_s]` for every stack file, up to a relative tolerance of 1e-9
    /// that absorbs the rounding of the implicit read totals.
    pub fn invariant_holds(&self) -> bool {
        self.aggregates().iter().all(|&(l, r)| l >= r - 1e-9 * r.abs().max(1.0))
    }

    /// Σ_x w_x (ℓ_x + r_x + r[R_x]) with weight 1 on the spine and 2 elsewhere.
    pub fn potential(&self) -> f64 {
        self.frozen_potential + self.spine.iter().map(|s| self.spine_term(s)).sum::<f64>()
    }

    fn spine_term(&self, s: &SpineFile) -> f64 {
        s.own_length + s.own_read + (self.reads_total - s.created_reads)
    }

    fn push(&mut self, mut file: SpineFile) {
        let below = self.spine.last().map_or(f64::INFINITY, |s| s.prefix_min_key);
        file.prefix_min_key = below.min(file.key());
        self.spine.push(file);
    }
}

impl OnlinePolicy for LinearOnline {
    fn name(&self) -> String {
        "linear-online".into()
    }

    fn decide(&mut self, arrival: Arrival) -> Result<usize> {
        let k = self.spine.len();
        let threshold = self.reads_total + arrival.read_rate;
        // prefix_min_key is non-increasing from the bottom; find the first index below threshold.
        let v = self.spine.partition_point(|s| s.prefix_min_key >= threshold);
        let (width, left_mass) = if v < k {
            let absorbed = self.spine[v..].iter().rev().fold(0.0, |acc, s| acc + s.file_length);
            for i in v..k {
                let term = self.spine_term(&self.spine[i]);
                self.frozen_potential += 2.0 * term;
            }
            self.spine.truncate(v);
            (k + 1 - v, absorbed)
        } else {
            (1, 0.0)
        };
        self.reads_total += arrival.read_rate;
        self.push(SpineFile {
            own_length: arrival.length,
            own_read: arrival.read_rate,
            left_mass,
            created_reads: self.reads_total,
            prefix_min_key: 0.0,
            file_length: arrival.length + left_mass,
        });
        Ok(width)
    }

    fn diagnostic(&self) -> Option<f64> {
        Some(self.potential())
    }
}
