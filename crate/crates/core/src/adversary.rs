//! Lower-bound machinery for deterministic policies in the capped model.
//!
//! A [`LengthLadder`] holds K families of well-separated lengths. The adaptive
//! driver [`run_adversary`] plays them against a policy in nested phases: an
//! h-phase inserts the next h-length and then runs (h−1)-phases (zeros when
//! h = 1) until the policy merges that length with a larger one or the phase
//! times out. The K reference schedules β(1)..β(K) bound the offline optimum
//! from above, so the ratio of the policy's cost to that bound approaches K.
//!
//! Zero runs can be astronomically long (10^11 zeros for K = 2, L_2 = 10), so
//! instances are kept in run-length form and counts are `f64`. Zero runs during
//! which the policy's state is stationary are fast-forwarded in bulk.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::Run;
use crate::model::{Arrival, Instance, Schedule};
use crate::policy::OnlinePolicy;

/// Largest number of ladder values that will be materialised.
pub const MAX_LADDER_VALUES: f64 = 1e7;

/// Default cap on policy decisions that are not fast-forwarded.
pub const DEFAULT_STEP_BUDGET: u64 = 50_000_000;

/// Well-separated length families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthLadder {
    pub k: usize,
    /// `l[h-1] = L_h`, decreasing in `h`.
    pub l: Vec<f64>,
    /// `n[h-1] = N_h = Π_{j>h} L_j`, the number of h-lengths.
    pub capacities: Vec<f64>,
    /// `w[h-1][i-1] = L_K^i / L_h`.
    #[serde(skip)]
    pub w: Vec<Vec<f64>>,
    /// Smallest ratio between consecutive distinct ladder values.
    pub separation: f64,
    /// True when `L_1..L_{K-1}` were supplied instead of computed.
    pub overridden: bool,
}

fn whole(x: f64) -> bool {
    x.is_finite() && x >= 1.0 && x.fract() == 0.0
}

/// Explicit ladder parameters replacing the doubly exponential recurrence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LadderOverrides {
    /// `L_1..L_{K-1}`.
    pub l: Vec<f64>,
    /// `N_1..N_{K-1}`; when absent `N_h = Π_{j>h} L_j`. Smaller capacities keep
    /// the families apart with smaller `L_h`, at the risk of running out of
    /// h-lengths against policies that end many phases early.
    pub capacities: Option<Vec<f64>>,
}

/// Builds the ladder for `K` and `L_K`. Without overrides `L_h = L_{h+1}·L_K^{N_h}`;
/// with overrides the given values are used and the separation they achieve is
/// reported (it must stay above 1 so that the families do not interleave).
pub fn build_ladder(k: usize, l_k: f64, overrides: Option<&LadderOverrides>) -> Result<LengthLadder> {
    if k < 1 {
        return Err(Error::domain("ladder needs K >= 1"));
    }
    if !(whole(l_k) && l_k > k as f64) {
        return Err(Error::domain(format!("L_K must be a whole number greater than K={k}, got {l_k}")));
    }
    let mut l = vec![0.0; k];
    let mut capacities = vec![1.0; k];
    l[k - 1] = l_k;
    let overridden = overrides.is_some();
    match overrides {
        Some(o) => {
            if o.l.len() != k - 1 {
                return Err(Error::domain(format!(
                    "expected {} ladder overrides (L_1..L_{{K-1}}), got {}",
                    k - 1,
                    o.l.len()
                )));
            }
            for (h, &v) in o.l.iter().enumerate() {
                if !whole(v) {
                    return Err(Error::domain(format!("override L_{} = {v} must be a whole number >= 1", h + 1)));
                }
                l[h] = v;
            }
            if l.windows(2).any(|p| p[0] <= p[1]) {
                return Err(Error::domain("ladder overrides must be strictly decreasing and above L_K"));
            }
            match &o.capacities {
                Some(c) => {
                    if c.len() != k - 1 || !c.iter().all(|&x| whole(x)) {
                        return Err(Error::domain(format!("expected {} whole capacities N_1..N_{{K-1}}", k - 1)));
                    }
                    capacities[..k - 1].copy_from_slice(c);
                }
                None => {
                    for h in (0..k - 1).rev() {
                        capacities[h] = capacities[h + 1] * l[h + 1];
                    }
                }
            }
        }
        None => {
            let ln_k = l_k.ln();
            let mut ln_l = vec![0.0; k];
            ln_l[k - 1] = ln_k;
            for h in (0..k - 1).rev() {
                capacities[h] = capacities[h + 1] * l[h + 1];
                ln_l[h] = ln_l[h + 1] + capacities[h] * ln_k;
                if ln_l[h].is_nan() || ln_l[h] >= f64::MAX.ln() {
                    return Err(Error::LadderOverflow(format!(
                        "L_{} = L_{}·L_K^{} does not fit in a 64-bit float; supply explicit L_1..L_{} overrides",
                        h + 1,
                        h + 2,
                        capacities[h],
                        k - 1
                    )));
                }
                l[h] = l[h + 1] * l_k.powf(capacities[h]);
            }
        }
    }
    let total: f64 = capacities.iter().sum();
    if total > MAX_LADDER_VALUES {
        return Err(Error::TooLarge { n: total.min(usize::MAX as f64) as usize, max_n: MAX_LADDER_VALUES as usize });
    }
    let w: Vec<Vec<f64>> =
        (0..k).map(|h| (1..=capacities[h] as usize).map(|i| ladder_value(l_k, i, l[h])).collect()).collect();
    // Ratios between consecutive values, in log space to survive extreme ladders.
    let mut separation = if capacities.iter().any(|&c| c > 1.0) { l_k } else { f64::INFINITY };
    for h in 0..k - 1 {
        let top = capacities[h] * l_k.ln() - l[h].ln();
        let next = l_k.ln() - l[h + 1].ln();
        separation = separation.min((next - top).exp());
    }
    if separation.is_nan() || separation <= 1.0 {
        return Err(Error::domain(format!(
            "ladder families interleave (separation {separation}); use larger overrides"
        )));
    }
    Ok(LengthLadder { k, l, capacities, w, separation, overridden })
}

/// `L_K^i / L_h`, evaluated in log space when the power itself would overflow.
fn ladder_value(l_k: f64, i: usize, l_h: f64) -> f64 {
    let p = l_k.powi(i as i32);
    if p.is_finite() && p > 0.0 {
        p / l_h
    } else {
        (i as f64 * l_k.ln() - l_h.ln()).exp()
    }
}

impl LengthLadder {
    pub fn value(&self, h: usize, i: usize) -> f64 {
        self.w[h - 1][i - 1]
    }

    /// The family `h` and index `i` of a ladder value; `(0, 0)` for zero.
    pub fn classify(&self, v: f64) -> Option<(usize, usize)> {
        if v == 0.0 {
            return Some((0, 0));
        }
        for (h, fam) in self.w.iter().enumerate() {
            if let Ok(i) = fam.binary_search_by(|x| x.total_cmp(&v)) {
                return Some((h + 1, i + 1));
            }
        }
        None
    }
}

/// Phase statistics of one adversary run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AdversaryStats {
    /// `n[h-1][i-1] = n_{h,i}`: sub-phases (zeros for h = 1) in the i-th h-phase.
    pub n: Vec<Vec<f64>>,
    /// `tau[h-1][i-1] = τ_{h,i}`: sub-phases of that phase that timed out (0 for h = 1).
    pub tau: Vec<Vec<f64>>,
}

impl AdversaryStats {
    /// `n_h`, the number of h-phases.
    pub fn phases(&self, h: usize) -> usize {
        self.n[h - 1].len()
    }

    /// `2 + (1/K)·Σ_h Σ_i w_{h,i}·n_{h,i}`.
    pub fn formula_bound(&self, ladder: &LengthLadder) -> f64 {
        let s: f64 = self
            .n
            .iter()
            .enumerate()
            .flat_map(|(h, ns)| ns.iter().enumerate().map(move |(i, &c)| ladder.w[h][i] * c))
            .sum();
        2.0 + s / ladder.k as f64
    }

    /// `(1 − 1/L_K)·Σ_h Σ_i w_{h,i}·n_{h,i}`, a lower bound on the policy's cost.
    pub fn policy_lower_bound(&self, ladder: &LengthLadder) -> f64 {
        let s: f64 = self
            .n
            .iter()
            .enumerate()
            .flat_map(|(h, ns)| ns.iter().enumerate().map(move |(i, &c)| ladder.w[h][i] * c))
            .sum();
        (1.0 - 1.0 / ladder.l[ladder.k - 1]) * s
    }
}

/// The outcome of playing the adversary against a policy.
#[derive(Debug, Clone)]
pub struct AdversaryRun {
    /// The realised instance in run-length form; read rates are zero.
    pub runs: Vec<Run>,
    pub stats: AdversaryStats,
    /// True (sum-based) merge cost paid by the policy.
    pub policy_cost: f64,
    /// Total number of steps, fast-forwarded ones included.
    pub steps: f64,
    /// Policy decisions actually requested.
    pub decisions: u64,
}

impl AdversaryRun {
    /// The explicit instance; fails beyond [`crate::io::MAX_EXPANDED_STEPS`].
    pub fn instance(&self) -> Result<Instance> {
        crate::io::expand_runs(&self.runs)
    }
}

#[derive(Debug, Clone, Copy)]
struct File {
    len: f64,
    /// Largest ladder value merged into this file.
    max: f64,
}

struct Driver<'a> {
    ladder: &'a LengthLadder,
    policy: &'a mut dyn OnlinePolicy,
    stack: Vec<File>,
    /// Next unused index per family, 0-based.
    next: Vec<usize>,
    /// For each family, the stack index of the file holding its active length.
    track: Vec<Option<usize>>,
    runs: Vec<Run>,
    cost: f64,
    steps: f64,
    decisions: u64,
    budget: u64,
    fast_forward: bool,
    stats: AdversaryStats,
}

impl Driver<'_> {
    fn emit(&mut self, v: f64, family: usize) -> Result<()> {
        if self.decisions >= self.budget {
            return Err(Error::TooLarge { n: self.decisions as usize, max_n: self.budget as usize });
        }
        let k = self.stack.len();
        let t = self.steps + 1.0;
        let width = self.policy.decide(Arrival::new(v, 0.0))?;
        self.decisions += 1;
        if width < 1 || width > k + 1 {
            return Err(Error::internal(format!(
                "policy {} chose width {width} with {k} files at step {t}",
                self.policy.name()
            )));
        }
        let base = k + 1 - width;
        let len = self.stack[base..].iter().rev().fold(v, |acc, f| acc + f.len);
        let max = self.stack[base..].iter().fold(v, |m, f| m.max(f.max));
        if base + 1 > self.ladder.k {
            return Err(Error::Infeasible {
                t: t.min(usize::MAX as f64) as usize,
                stack: base + 1,
                cap: self.ladder.k,
            });
        }
        self.stack.truncate(base);
        self.stack.push(File { len, max });
        self.cost += len;
        for idx in self.track.iter_mut().flatten() {
            if *idx > base {
                *idx = base;
            }
        }
        if family > 0 {
            self.track[family - 1] = Some(base);
        }
        self.push_run(v, 1.0);
        self.steps = t;
        Ok(())
    }

    fn push_run(&mut self, v: f64, count: f64) {
        match self.runs.last_mut() {
            Some(r) if v == 0.0 && r.arrival.length == 0.0 => r.count += count,
            _ => self.runs.push(Run { arrival: Arrival::new(v, 0.0), count }),
        }
    }

    /// True once the active length of `family` shares a file with a larger value.
    fn merged_with_larger(&self, family: usize, v: f64) -> bool {
        self.track[family - 1].is_some_and(|idx| self.stack[idx].max > v)
    }

    /// Fast-forwards up to `max` zeros the policy answers without changing state.
    fn skip_zeros(&mut self, max: f64) -> f64 {
        let Some(top) = self.stack.last().copied() else { return 0.0 };
        if !self.fast_forward {
            return 0.0;
        }
        let count = self.policy.stationary_zero_run(max).min(max).floor();
        if count <= 0.0 {
            return 0.0;
        }
        self.policy.absorb_zero_run(count, top.len);
        self.cost += count * top.len;
        self.steps += count;
        self.push_run(0.0, count);
        count
    }

    /// Runs one h-phase; returns `n_{h,i}`.
    fn phase(&mut self, h: usize) -> Result<f64> {
        let k = self.ladder.k;
        let i = self.next[h - 1];
        if i as f64 >= self.ladder.capacities[h - 1] {
            let msg =
                format!("ladder exhausted: more than N_{h} = {} {h}-lengths requested", self.ladder.capacities[h - 1]);
            // Computed capacities always suffice; only explicit ones can run out.
            return Err(if self.ladder.overridden {
                Error::domain(format!("{msg}; raise the capacity overrides"))
            } else {
                Error::internal(msg)
            });
        }
        self.next[h - 1] += 1;
        let v = self.ladder.w[h - 1][i];
        let limit = self.ladder.l[h - 1];
        let stoppable = h < k;
        self.emit(v, h)?;
        let mut count = 0.0;
        let mut timeouts = 0.0;
        loop {
            if h == 1 {
                self.emit(0.0, 0)?;
                count += 1.0;
                if (stoppable && self.merged_with_larger(h, v)) || count >= limit {
                    break;
                }
                // Stationary zeros cannot merge the 1-length with anything larger.
                count += self.skip_zeros(limit - count);
                if count >= limit {
                    count = limit;
                    break;
                }
            } else {
                let sub = self.phase(h - 1)?;
                if sub >= self.ladder.l[h - 2] {
                    timeouts += 1.0;
                }
                count += 1.0;
                if (stoppable && self.merged_with_larger(h, v)) || count >= limit {
                    break;
                }
            }
        }
        self.track[h - 1] = None;
        self.stats.n[h - 1].push(count);
        self.stats.tau[h - 1].push(timeouts);
        Ok(count)
    }
}

/// Plays the adversary against `policy` in the capped model with K = `ladder.k`.
pub fn run_adversary(policy: &mut dyn OnlinePolicy, ladder: &LengthLadder, budget: u64) -> Result<AdversaryRun> {
    run_adversary_with(policy, ladder, budget, true)
}

/// As [`run_adversary`]; with `fast_forward` off every zero is a separate decision.
pub fn run_adversary_with(
    policy: &mut dyn OnlinePolicy,
    ladder: &LengthLadder,
    budget: u64,
    fast_forward: bool,
) -> Result<AdversaryRun> {
    let k = ladder.k;
    let mut d = Driver {
        ladder,
        policy,
        stack: Vec::new(),
        next: vec![0; k],
        track: vec![None; k],
        runs: Vec::new(),
        cost: 0.0,
        steps: 0.0,
        decisions: 0,
        budget,
        fast_forward,
        stats: AdversaryStats { n: vec![Vec::new(); k], tau: vec![Vec::new(); k] },
    };
    d.phase(k)?;
    Ok(AdversaryRun { runs: d.runs, stats: d.stats, policy_cost: d.cost, steps: d.steps, decisions: d.decisions })
}

/// Merge cost of `schedule` when a merge costs, and produces a file of, the
/// largest merged length rather than their sum. Read costs are not included.
pub fn max_based_cost(instance: &Instance, schedule: &Schedule) -> Result<f64> {
    if schedule.len() != instance.len() {
        return Err(Error::LengthMismatch { expected: instance.len(), got: schedule.len() });
    }
    let mut stack: Vec<f64> = Vec::new();
    let mut cost = 0.0;
    for (t, (a, &w)) in instance.steps().iter().zip(&schedule.widths).enumerate() {
        let k = stack.len();
        if w < 1 || w > k + 1 {
            return Err(Error::InvalidWidth { t: t + 1, width: w, max: k + 1 });
        }
        let m = stack[k + 1 - w..].iter().fold(a.length, |m, &x| m.max(x));
        stack.truncate(k + 1 - w);
        stack.push(m);
        cost += m;
    }
    Ok(cost)
}

/// The reference schedules evaluated on an adversary instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceBound {
    /// Max-based cost of β(b), `b = 1..=K`.
    pub beta_costs: Vec<f64>,
    /// `min_b` of the above: an upper bound on the optimum's max-based cost.
    pub bound: f64,
    /// `2 + (1/K)·Σ w_{h,i}·n_{h,i}`, which `bound` never exceeds.
    pub formula_bound: f64,
}

/// Slot of an h-length under β(b): slots are numbered from the top of the stack
/// (slot 1) to the bottom (slot K).
fn beta_slot(h: usize, b: usize) -> usize {
    if h < b {
        h + 1
    } else {
        h
    }
}

/// Max-based cost of β(b) on a run-length instance whose values come from `ladder`.
pub fn beta_cost(runs: &[Run], ladder: &LengthLadder, b: usize) -> Result<f64> {
    let k = ladder.k;
    if !(1..=k).contains(&b) {
        return Err(Error::domain(format!("reference schedule β({b}) needs 1 <= b <= K={k}")));
    }
    let mut slots = vec![0.0f64; k + 1];
    let mut cost = 0.0;
    for r in runs {
        let v = r.arrival.length;
        let (h, _) =
            ladder.classify(v).ok_or_else(|| Error::domain(format!("length {v} is not a value of this ladder")))?;
        let s = beta_slot(h, b);
        let m = slots[1..=s].iter().fold(v, |m, &x| m.max(x));
        // Repeats (only zeros repeat) leave the slots unchanged after the first.
        cost += r.count * m;
        slots[1..s].iter_mut().for_each(|x| *x = 0.0);
        slots[s] = m;
    }
    Ok(cost)
}

/// β(b) as explicit widths, for instances small enough to expand.
pub fn beta_schedule(runs: &[Run], ladder: &LengthLadder, b: usize) -> Result<Schedule> {
    let k = ladder.k;
    if !(1..=k).contains(&b) {
        return Err(Error::domain(format!("reference schedule β({b}) needs 1 <= b <= K={k}")));
    }
    let mut occupied = vec![false; k + 1];
    let mut widths = Vec::new();
    for r in runs {
        let (h, _) = ladder
            .classify(r.arrival.length)
            .ok_or_else(|| Error::domain(format!("length {} is not a value of this ladder", r.arrival.length)))?;
        let s = beta_slot(h, b);
        for _ in 0..r.count as usize {
            widths.push(1 + occupied[1..=s].iter().filter(|&&o| o).count());
            occupied[1..s].iter_mut().for_each(|o| *o = false);
            occupied[s] = true;
        }
    }
    Ok(Schedule::new(widths))
}

/// Evaluates β(1)..β(K) on the adversary instance and returns the best.
pub fn reference_schedules_bound(
    runs: &[Run],
    ladder: &LengthLadder,
    stats: &AdversaryStats,
) -> Result<ReferenceBound> {
    if stats.n.len() != ladder.k {
        return Err(Error::domain(format!("statistics cover {} families, ladder has K={}", stats.n.len(), ladder.k)));
    }
    let beta_costs = (1..=ladder.k).map(|b| beta_cost(runs, ladder, b)).collect::<Result<Vec<_>>>()?;
    let bound = beta_costs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ReferenceBound { beta_costs, bound, formula_bound: stats.formula_bound(ladder) })
}

/// Everything the `adversary` command reports.
#[derive(Debug, Clone, Serialize)]
pub struct AdversaryReport {
    pub policy: String,
    pub ladder: LengthLadder,
    pub stats: AdversaryStats,
    pub n_h: Vec<usize>,
    pub steps: f64,
    pub decisions: u64,
    pub policy_cost: f64,
    pub reference: ReferenceBound,
    pub ratio: f64,
}

/// Runs the adversary and evaluates the reference schedules.
pub fn evaluate(
    policy: &mut dyn OnlinePolicy,
    ladder: &LengthLadder,
    budget: u64,
) -> Result<(AdversaryRun, AdversaryReport)> {
    let run = run_adversary(policy, ladder, budget)?;
    let reference = reference_schedules_bound(&run.runs, ladder, &run.stats)?;
    let report = AdversaryReport {
        policy: policy.name(),
        ladder: ladder.clone(),
        n_h: (1..=ladder.k).map(|h| run.stats.phases(h)).collect(),
        stats: run.stats.clone(),
        steps: run.steps,
        decisions: run.decisions,
        policy_cost: run.policy_cost,
        ratio: run.policy_cost / reference.bound,
        reference,
    };
    Ok((run, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate, CostModel};
    use crate::policy::{run_policy, PolicySpec};

    #[test]
    fn ladder_k2_l10() {
        let lad = build_ladder(2, 10.0, None).unwrap();
        assert_eq!(lad.capacities, vec![10.0, 1.0]);
        assert_eq!(lad.l[0], 1e11);
        for i in 1..=10 {
            let want = 10f64.powi(i as i32 - 11);
            assert!((lad.value(1, i) - want).abs() <= 1e-15 * want);
        }
        assert_eq!(lad.value(2, 1), 1.0);
        assert!((lad.separation - 10.0).abs() < 1e-9);
    }

    #[test]
    fn ladder_edge_cases() {
        let one = build_ladder(1, 5.0, None).unwrap();
        assert_eq!(one.w, vec![vec![1.0]]);
        assert!(matches!(build_ladder(3, 4.0, None), Err(Error::LadderOverflow(_))));
        // Default capacities force L_1 > 300·4^1199: the families interleave.
        let plain = LadderOverrides { l: vec![1e15, 300.0], capacities: None };
        assert!(build_ladder(3, 4.0, Some(&plain)).is_err());
        let small = LadderOverrides { l: vec![1e15, 300.0], capacities: Some(vec![20.0, 4.0]) };
        let o = build_ladder(3, 4.0, Some(&small)).unwrap();
        assert!(o.overridden && o.separation > 1.0 && o.separation < 4.0);
        // The tightest gap is between w_{2,4} = 4^4/300 and w_{3,1} = 1.
        assert!((o.separation - 300.0 / 256.0).abs() < 1e-9);
        let bad = LadderOverrides { l: vec![10.0, 200.0], capacities: None };
        assert!(build_ladder(3, 4.0, Some(&bad)).is_err());
        assert!(build_ladder(2, 2.0, None).is_err());
    }

    #[test]
    fn k1_is_one_length_then_zeros() {
        let lad = build_ladder(1, 7.0, None).unwrap();
        let mut p = PolicySpec::Brb(1).build(&CostModel::CappedK(1), 0).unwrap();
        let run = run_adversary(p.as_mut(), &lad, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(run.runs.len(), 2);
        assert_eq!(run.runs[1].count, 7.0);
        assert!(run.policy_cost >= 7.0);
        let rb = reference_schedules_bound(&run.runs, &lad, &run.stats).unwrap();
        assert_eq!(rb.beta_costs, vec![8.0]);
    }

    #[test]
    fn merge_all_phases_end_at_first_zero() {
        let lad = build_ladder(2, 10.0, None).unwrap();
        let mut p = PolicySpec::MergeAll.build(&CostModel::CappedK(2), 0).unwrap();
        let run = run_adversary(p.as_mut(), &lad, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(run.stats.n[0], vec![1.0; 10]);
        assert_eq!(run.stats.n[1], vec![10.0]);
    }

    #[test]
    fn never_merging_the_bottom_times_out() {
        let lad = build_ladder(2, 10.0, None).unwrap();
        let mut p = PolicySpec::Default(2).build(&CostModel::CappedK(2), 0).unwrap();
        let run = run_adversary(p.as_mut(), &lad, DEFAULT_STEP_BUDGET).unwrap();
        assert!(run.stats.n[0].iter().all(|&c| c == 1e11));
        assert_eq!(run.stats.tau[1], vec![10.0]);
    }

    #[test]
    fn max_based_examples() {
        let inst = Instance::from_pairs(&[(9.0, 0.0), (5.0, 0.0), (3.0, 0.0)]).unwrap();
        let s = Schedule::new(vec![1, 1, 3]);
        assert_eq!(max_based_cost(&inst, &s).unwrap(), 9.0 + 5.0 + 9.0);
        let single = Schedule::new(vec![1, 1, 1]);
        assert_eq!(max_based_cost(&inst, &single).unwrap(), 17.0);
    }

    /// A small overridden ladder whose instances expand to a few hundred steps.
    fn small_ladder() -> LengthLadder {
        build_ladder(2, 3.0, Some(&LadderOverrides { l: vec![30.0], capacities: None })).unwrap()
    }

    #[test]
    fn bulk_costs_match_step_by_step_simulation() {
        let lad = small_ladder();
        let model = CostModel::CappedK(2);
        for spec in ["merge-all", "default:2", "brb:2", "doubling-capped:2"] {
            let spec: PolicySpec = spec.parse().unwrap();
            let mut p = spec.build(&model, 0).unwrap();
            let run = run_adversary(p.as_mut(), &lad, DEFAULT_STEP_BUDGET).unwrap();
            let inst = run.instance().unwrap();
            assert_eq!(inst.len() as f64, run.steps);
            let mut fresh = spec.build(&model, 0).unwrap();
            let replay = run_policy(&inst, fresh.as_mut(), &model).unwrap();
            let want = replay.trace.total_merge;
            assert!((run.policy_cost - want).abs() <= 1e-9 * want, "{spec}: {} vs {want}", run.policy_cost);
            for b in 1..=2 {
                let sched = beta_schedule(&run.runs, &lad, b).unwrap();
                assert!(simulate(&inst, &sched, &model).is_ok());
                let direct = max_based_cost(&inst, &sched).unwrap();
                let bulk = beta_cost(&run.runs, &lad, b).unwrap();
                assert!((direct - bulk).abs() <= 1e-12 * direct.max(1.0), "{spec} β({b})");
            }
        }
    }

    #[test]
    fn fast_forward_is_invisible() {
        let lad = small_ladder();
        let model = CostModel::CappedK(2);
        for spec in ["merge-all", "default:2", "brb:2", "doubling-capped:2"] {
            let spec: PolicySpec = spec.parse().unwrap();
            let mut a = spec.build(&model, 0).unwrap();
            let mut b = spec.build(&model, 0).unwrap();
            let fast = run_adversary_with(a.as_mut(), &lad, DEFAULT_STEP_BUDGET, true).unwrap();
            let slow = run_adversary_with(b.as_mut(), &lad, DEFAULT_STEP_BUDGET, false).unwrap();
            assert_eq!(fast.runs, slow.runs, "{spec}");
            assert_eq!(fast.stats, slow.stats, "{spec}");
            assert!(fast.decisions <= slow.decisions);
        }
    }

    #[test]
    fn k3_with_small_capacities() {
        let o = LadderOverrides { l: vec![1e15, 300.0], capacities: Some(vec![20.0, 4.0]) };
        let lad = build_ladder(3, 4.0, Some(&o)).unwrap();
        let mut p = PolicySpec::MergeAll.build(&CostModel::CappedK(3), 0).unwrap();
        let (_, report) = evaluate(p.as_mut(), &lad, DEFAULT_STEP_BUDGET).unwrap();
        assert_eq!(report.n_h, vec![4, 4, 1]);
        assert!(report.ratio > 1.0);
    }

    #[test]
    fn lemma_bound_on_default() {
        let lad = build_ladder(2, 10.0, None).unwrap();
        let mut p = PolicySpec::Default(2).build(&CostModel::CappedK(2), 0).unwrap();
        let run = run_adversary(p.as_mut(), &lad, DEFAULT_STEP_BUDGET).unwrap();
        let rb = reference_schedules_bound(&run.runs, &lad, &run.stats).unwrap();
        assert!(rb.bound <= rb.formula_bound * (1.0 + 1e-12));
        assert!(run.policy_cost >= run.stats.policy_lower_bound(&lad) * (1.0 - 1e-12));
    }

    #[test]
    fn mismatched_ladder_rejected() {
        let lad = build_ladder(2, 10.0, None).unwrap();
        let runs = vec![Run { arrival: Arrival::new(0.3, 0.0), count: 1.0 }];
        let stats = AdversaryStats { n: vec![vec![], vec![]], tau: vec![vec![], vec![]] };
        assert!(reference_schedules_bound(&runs, &lad, &stats).is_err());
    }
}
