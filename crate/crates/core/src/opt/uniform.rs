//! Optimal schedules for uniform instances `(ℓ̄, r̄)^n`.

use crate::error::{Error, Result};
use crate::model::{CostModel, Instance};
use crate::opt::{approx2_linear, ParentLink};
use crate::tree::{tree_cost, MergeTree};

/// Above this horizon the linear construction falls back to the balanced-split
/// 2-approximation and marks its result as approximate.
pub const UNIFORM_LINEAR_EXACT_MAX_N: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformParams {
    pub mean_length: f64,
    pub mean_read: f64,
    pub n: usize,
}

impl UniformParams {
    pub fn new(mean_length: f64, mean_read: f64, n: usize) -> Result<Self> {
        for (name, v) in [("mean length", mean_length), ("mean read rate", mean_read)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self { mean_length, mean_read, n })
    }

    pub fn instance(&self) -> Result<Instance> {
        Instance::uniform(self.mean_length, self.mean_read, self.n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformSolution {
    pub cost: f64,
    pub tree: MergeTree,
    /// True when the construction is not guaranteed optimal.
    pub approximate: bool,
}

/// The β with `2^(-ℓ̄/β) + 2^(-r̄/β) = 1`, by bisection.
pub fn solve_beta(mean_length: f64, mean_read: f64) -> Result<f64> {
    if !(mean_length > 0.0 && mean_read > 0.0 && mean_length.is_finite() && mean_read.is_finite()) {
        return Err(Error::domain(format!("beta needs positive finite means, got ({mean_length}, {mean_read})")));
    }
    // The left side increases from 0 (β → 0) to above 1 at β = ℓ̄ + r̄.
    let g = |b: f64| (-mean_length / b).exp2() + (-mean_read / b).exp2() - 1.0;
    let (mut lo, mut hi) = (0.0f64, mean_length + mean_read);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `c_K = (K+1) / (K!)^{1/K}`.
pub fn c_k(k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::domain("c_K needs K >= 1"));
    }
    let ln_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    Ok((k as f64 + 1.0) / (ln_fact / k as f64).exp())
}

/// Nodes in the infinite tree with left depth ≤ a and right depth ≤ b:
/// `C(a+b+2, a+1) - 1`, built with Pascal's rule and saturating at `u64::MAX`.
struct Capacity {
    b: usize,
    /// rows[a][c] = N(a, c) for c in 0..=b.
    rows: Vec<Vec<u64>>,
}

impl Capacity {
    fn new(b: usize) -> Self {
        Self { b, rows: vec![(0..=b).map(|c| c as u64 + 1).collect()] }
    }

    fn grow(&mut self) {
        let a = self.rows.len();
        let mut row = vec![0u64; self.b + 1];
        for c in 0..=self.b {
            let down_left = self.rows[a - 1][c];
            let down_right = if c == 0 { 0 } else { row[c - 1] };
            row[c] = 1u64.saturating_add(down_left).saturating_add(down_right);
        }
        self.rows.push(row);
    }

    /// N(a, c) with N(-1, ·) = N(·, -1) = 0.
    fn get(&self, a: isize, c: isize) -> u64 {
        if a < 0 || c < 0 {
            0
        } else {
            self.rows[a as usize][c as usize]
        }
    }
}

/// Optimal schedule for `(ℓ̄, ·)^n` under `CappedK(k)`.
///
/// Stack size `1 + right_depth` must stay ≤ K, and the cost is ℓ̄·Σ(1 + left_depth),
/// so the optimum packs nodes into the smallest left depths available with right
/// depth < K. Level `a` of that region holds `C(a+K, K-1)` nodes. The tree is
/// built by budgets: a subtree allowed left depth `a` and right depth `b` takes
/// every slot of left depth `< a` and the remaining nodes at depth `a`, giving
/// its left child budget `(a-1, b)` and its right child `(a, b-1)`.
pub fn uniform_opt_cappedk(params: UniformParams, k: usize) -> Result<UniformSolution> {
    if k < 1 {
        return Err(Error::domain("CappedK requires K >= 1"));
    }
    let n = params.n;
    if n == 0 {
        return Ok(UniformSolution { cost: 0.0, tree: MergeTree::empty(), approximate: false });
    }
    let b = (k - 1).min(n - 1);
    let mut cap = Capacity::new(b);
    while cap.get(cap.rows.len() as isize - 1, b as isize) < n as u64 {
        cap.grow();
    }
    let a = cap.rows.len() - 1;
    let mut left = vec![None; n];
    let mut right = vec![None; n];
    // (node count, left budget, right budget, first key, parent link)
    let mut stack: Vec<(usize, isize, isize, usize, ParentLink)> = vec![(n, a as isize, b as isize, 1, None)];
    while let Some((m, la, rb, lo, parent)) = stack.pop() {
        let full = |x: isize, y: isize| cap.get(x - 1, y) as usize;
        let max_left = cap.get(la - 1, rb) as usize;
        let min_right = full(la, rb - 1);
        let m_left = max_left.min(m - 1 - min_right);
        let m_right = m - 1 - m_left;
        if m_left < full(la - 1, rb) || m_right > cap.get(la, rb - 1) as usize {
            return Err(Error::internal(format!("budget split failed for {m} nodes at ({la},{rb})")));
        }
        let root = lo + m_left;
        if let Some((p, is_left)) = parent {
            if is_left {
                left[p - 1] = Some(root);
            } else {
                right[p - 1] = Some(root);
            }
        }
        if m_left > 0 {
            stack.push((m_left, la - 1, rb, lo, Some((root, true))));
        }
        if m_right > 0 {
            stack.push((m_right, la, rb - 1, root + 1, Some((root, false))));
        }
    }
    let tree = MergeTree::from_children(&left, &right)?;
    let cost = tree_cost(&tree, &params.instance()?, &CostModel::CappedK(k))?;
    Ok(UniformSolution { cost, tree, approximate: false })
}

/// Optimal schedule for `(ℓ̄, r̄)^n` under the linear model.
///
/// Under linear costs the optimum of an interval depends only on its length `m`:
/// `U[m] = min_s U[s-1] + s·ℓ̄ + (m-s+1)·r̄ + U[m-s]`, an O(n²) recurrence.
/// Beyond [`UNIFORM_LINEAR_EXACT_MAX_N`] the balanced-split approximation is used.
pub fn uniform_opt_linear(params: UniformParams) -> Result<UniformSolution> {
    let n = params.n;
    if n == 0 {
        return Ok(UniformSolution { cost: 0.0, tree: MergeTree::empty(), approximate: false });
    }
    if params.mean_length + params.mean_read <= 0.0 {
        return Err(Error::domain("uniform linear optimum needs mean length + mean read > 0"));
    }
    if n > UNIFORM_LINEAR_EXACT_MAX_N {
        let (tree, cost) = approx2_linear(&params.instance()?)?;
        return Ok(UniformSolution { cost, tree, approximate: true });
    }
    let (l, r) = (params.mean_length, params.mean_read);
    let mut u = vec![0.0f64; n + 1];
    let mut split = vec![0usize; n + 1];
    for m in 1..=n {
        let mut best = f64::INFINITY;
        let mut best_s = 1;
        for s in 1..=m {
            let v = u[s - 1] + s as f64 * l + (m - s + 1) as f64 * r + u[m - s];
            if v < best {
                best = v;
                best_s = s;
            }
        }
        u[m] = best;
        split[m] = best_s;
    }
    let mut left = vec![None; n];
    let mut right = vec![None; n];
    let mut stack: Vec<(usize, usize, ParentLink)> = vec![(n, 1, None)];
    while let Some((m, lo, parent)) = stack.pop() {
        let s = split[m];
        let root = lo + s - 1;
        if let Some((p, is_left)) = parent {
            if is_left {
                left[p - 1] = Some(root);
            } else {
                right[p - 1] = Some(root);
            }
        }
        if s > 1 {
            stack.push((s - 1, lo, Some((root, true))));
        }
        if m > s {
            stack.push((m - s, root + 1, Some((root, false))));
        }
    }
    let tree = MergeTree::from_children(&left, &right)?;
    Ok(UniformSolution { cost: u[n], tree, approximate: false })
}
