use crate::error::Result;
use crate::model::{CostModel, Instance};
use crate::opt::ParentLink;
use crate::tree::{tree_cost, MergeTree};

/// Balanced-split tree for linear BMC, within a factor 2 of the optimum.
///
/// Each interval `[i,j]` is rooted at the largest `s` with `ℓ[i,s-1] <= r[s,j]`
/// (clamped to `j`), which balances the left subtree's length against the right
/// subtree's reads. The split point is found by galloping inwards from both ends,
/// so each search costs O(log min(s-i, j-s)) and the whole recursion is linear.
pub fn approx2_linear(instance: &Instance) -> Result<(MergeTree, f64)> {
    let n = instance.len();
    let mut left = vec![None; n];
    let mut right = vec![None; n];
    let mut root = None;
    // (i, j, parent key, attach as left child)
    let mut stack: Vec<(usize, usize, ParentLink)> = Vec::new();
    if n > 0 {
        stack.push((1, n, None));
    }
    while let Some((i, j, parent)) = stack.pop() {
        let s = balanced_split(instance, i, j);
        match parent {
            None => root = Some(s),
            Some((p, true)) => left[p - 1] = Some(s),
            Some((p, false)) => right[p - 1] = Some(s),
        }
        if i < s {
            stack.push((i, s - 1, Some((s, true))));
        }
        if s < j {
            stack.push((s + 1, j, Some((s, false))));
        }
    }
    debug_assert!(n == 0 || root.is_some());
    let tree = MergeTree::from_children(&left, &right)?;
    let cost = tree_cost(&tree, instance, &CostModel::Linear)?;
    Ok((tree, cost))
}

fn balanced_split(instance: &Instance, i: usize, j: usize) -> usize {
    // g(s) = ℓ[i,s-1] - r[s,j] is non-decreasing in s and g(i) <= 0.
    let ok = |s: usize| instance.ell(i, s - 1) <= instance.reads(s, j);
    if ok(j + 1) {
        return j;
    }
    // Invariant: ok(lo) and !ok(hi).
    let (mut lo, mut hi) = (i, j + 1);
    let mut step = 1;
    while hi - lo > 1 {
        let x = i + step;
        if x >= hi {
            break;
        }
        if ok(x) {
            lo = x;
        } else {
            hi = x;
            break;
        }
        let y = (j + 1).saturating_sub(step);
        if y <= lo {
            break;
        }
        if ok(y) {
            lo = y;
            break;
        }
        hi = y;
        step *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.min(j)
}
