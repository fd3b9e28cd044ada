//! Merge trees: binary search trees on keys `1..=n` in bijection with schedules.
//!
//! Key `t` stands for the file inserted at time `t`. The right spine (root,
//! its right child, ...) lists the current stack from bottom to top. For a
//! node `t`, `1 + right_depth(t)` is the stack size right after time `t` and
//! `1 + left_depth(t)` is the number of merges the file of time `t` takes part in.
//!
//! Every subtree holds a contiguous key interval, so subtree aggregates such as
//! ℓ[L_t] and r[R_t] are O(1) prefix-sum lookups once intervals are cached.

use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::model::{CostModel, Instance, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Node {
    left: Option<usize>,
    right: Option<usize>,
    parent: Option<usize>,
    /// Key interval `[lo, hi]` held by the subtree rooted here.
    lo: usize,
    hi: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Depths {
    left: Vec<u32>,
    right: Vec<u32>,
}

/// Where a new node goes during online maintenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insertion {
    /// Right child of the bottom spine node: a width-1 step.
    Append,
    /// Takes the spine position of this key, which becomes the new node's left child.
    Above(usize),
}

#[derive(Debug, Clone)]
pub struct MergeTree {
    root: Option<usize>,
    /// Index `key - 1`.
    nodes: Vec<Node>,
    depths: OnceLock<Depths>,
}

impl PartialEq for MergeTree {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.nodes == other.nodes
    }
}

impl Eq for MergeTree {}

impl Default for MergeTree {
    fn default() -> Self {
        Self::empty()
    }
}

impl MergeTree {
    pub fn empty() -> Self {
        Self { root: None, nodes: Vec::new(), depths: OnceLock::new() }
    }

    /// Builds and validates a tree from child arrays indexed by `key - 1`.
    pub fn from_children(left: &[Option<usize>], right: &[Option<usize>]) -> Result<Self> {
        let n = left.len();
        if right.len() != n {
            return Err(Error::MalformedTree("child arrays differ in length".into()));
        }
        let mut nodes = vec![Node::default(); n];
        for key in 1..=n {
            for child in [left[key - 1], right[key - 1]].into_iter().flatten() {
                if child == 0 || child > n {
                    return Err(Error::MalformedTree(format!("node {key} has out-of-range child {child}")));
                }
                if child == key {
                    return Err(Error::MalformedTree(format!("node {key} is its own child")));
                }
                if nodes[child - 1].parent.is_some() {
                    return Err(Error::MalformedTree(format!("node {child} has two parents")));
                }
                nodes[child - 1].parent = Some(key);
            }
            nodes[key - 1].left = left[key - 1];
            nodes[key - 1].right = right[key - 1];
        }
        let roots: Vec<usize> = (1..=n).filter(|&k| nodes[k - 1].parent.is_none()).collect();
        let root = match (n, roots.as_slice()) {
            (0, []) => None,
            (_, [r]) => Some(*r),
            _ => return Err(Error::MalformedTree(format!("expected one root, found {}", roots.len()))),
        };
        let mut tree = Self { root, nodes, depths: OnceLock::new() };
        tree.compute_intervals()?;
        Ok(tree)
    }

    /// Iterative post-order pass filling `[lo, hi]` and checking search-tree order.
    fn compute_intervals(&mut self) -> Result<()> {
        let Some(root) = self.root else { return Ok(()) };
        let mut visited = 0usize;
        let mut stack = vec![(root, false)];
        while let Some((key, expanded)) = stack.pop() {
            let node = self.nodes[key - 1];
            if !expanded {
                visited += 1;
                if visited > self.nodes.len() {
                    return Err(Error::MalformedTree("cycle detected".into()));
                }
                stack.push((key, true));
                if let Some(r) = node.right {
                    stack.push((r, false));
                }
                if let Some(l) = node.left {
                    stack.push((l, false));
                }
                continue;
            }
            let lo = match node.left {
                Some(l) => {
                    let c = self.nodes[l - 1];
                    if c.hi + 1 != key {
                        return Err(Error::MalformedTree(format!("left subtree of {key} does not end at {}", key - 1)));
                    }
                    c.lo
                }
                None => key,
            };
            let hi = match node.right {
                Some(r) => {
                    let c = self.nodes[r - 1];
                    if c.lo != key + 1 {
                        return Err(Error::MalformedTree(format!(
                            "right subtree of {key} does not start at {}",
                            key + 1
                        )));
                    }
                    c.hi
                }
                None => key,
            };
            self.nodes[key - 1].lo = lo;
            self.nodes[key - 1].hi = hi;
        }
        if visited != self.nodes.len() {
            return Err(Error::MalformedTree("tree is disconnected".into()));
        }
        let r = self.nodes[root - 1];
        if r.lo != 1 || r.hi != self.nodes.len() {
            return Err(Error::MalformedTree("keys are not 1..=n".into()));
        }
        Ok(())
    }

    /// The tree of a schedule: the root is the last time with stack size 1, recursively.
    ///
    /// Equivalently a Cartesian tree on `k_t` with the rightmost minimum on top,
    /// built here in O(n) with a stack holding the current right spine.
    pub fn from_schedule(schedule: &Schedule) -> Result<Self> {
        let sizes = schedule.stack_sizes()?;
        let n = sizes.len();
        let mut left = vec![None; n];
        let mut right = vec![None; n];
        let mut spine: Vec<usize> = Vec::new();
        for t in 1..=n {
            let mut last = None;
            while let Some(&top) = spine.last() {
                if sizes[top - 1] >= sizes[t - 1] {
                    last = spine.pop();
                } else {
                    break;
                }
            }
            left[t - 1] = last;
            if let Some(&top) = spine.last() {
                right[top - 1] = Some(t);
            }
            spine.push(t);
        }
        Self::from_children(&left, &right)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> Option<usize> {
        self.root
    }

    pub fn left(&self, key: usize) -> Option<usize> {
        self.nodes[key - 1].left
    }

    pub fn right(&self, key: usize) -> Option<usize> {
        self.nodes[key - 1].right
    }

    pub fn parent(&self, key: usize) -> Option<usize> {
        self.nodes[key - 1].parent
    }

    /// Key interval of the subtree rooted at `key`.
    pub fn interval(&self, key: usize) -> (usize, usize) {
        let n = self.nodes[key - 1];
        (n.lo, n.hi)
    }

    fn depths(&self) -> &Depths {
        self.depths.get_or_init(|| {
            let n = self.nodes.len();
            let mut left = vec![0u32; n];
            let mut right = vec![0u32; n];
            let mut stack: Vec<usize> = self.root.into_iter().collect();
            while let Some(key) = stack.pop() {
                let node = self.nodes[key - 1];
                if let Some(l) = node.left {
                    left[l - 1] = left[key - 1] + 1;
                    right[l - 1] = right[key - 1];
                    stack.push(l);
                }
                if let Some(r) = node.right {
                    left[r - 1] = left[key - 1];
                    right[r - 1] = right[key - 1] + 1;
                    stack.push(r);
                }
            }
            Depths { left, right }
        })
    }

    /// Left children on the root path to `key`.
    pub fn left_depth(&self, key: usize) -> usize {
        self.depths().left[key - 1] as usize
    }

    /// Right children on the root path to `key`.
    pub fn right_depth(&self, key: usize) -> usize {
        self.depths().right[key - 1] as usize
    }

    /// max_t 1 + right_depth(t).
    pub fn latency(&self) -> usize {
        self.depths().right.iter().map(|&d| d as usize + 1).max().unwrap_or(0)
    }

    /// Spine keys from the root down.
    pub fn spine(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.root;
        while let Some(k) = cur {
            out.push(k);
            cur = self.nodes[k - 1].right;
        }
        out
    }

    /// The schedule whose tree this is: `k_t = 1 + right_depth(t)`.
    pub fn to_schedule(&self) -> Schedule {
        let sizes: Vec<usize> = self.depths().right.iter().map(|&d| d as usize + 1).collect();
        Schedule::from_stack_sizes(&sizes).expect("search-tree depths always form a valid schedule")
    }

    /// Inserts key `n + 1` on the right spine without disturbing existing relations.
    pub fn spine_insert(&mut self, at: Insertion) -> Result<()> {
        let key = self.nodes.len() + 1;
        let mut node = Node { lo: key, hi: key, ..Node::default() };
        match at {
            Insertion::Append => {
                if let Some(&bottom) = self.spine().last() {
                    self.nodes[bottom - 1].right = Some(key);
                    node.parent = Some(bottom);
                } else {
                    self.root = Some(key);
                }
            }
            Insertion::Above(c) => {
                if c == 0 || c > self.nodes.len() || !self.spine().contains(&c) {
                    return Err(Error::NotOnSpine(c));
                }
                let parent = self.nodes[c - 1].parent;
                node.left = Some(c);
                node.lo = self.nodes[c - 1].lo;
                node.parent = parent;
                self.nodes[c - 1].parent = Some(key);
                match parent {
                    Some(p) => self.nodes[p - 1].right = Some(key),
                    None => self.root = Some(key),
                }
            }
        }
        self.nodes.push(node);
        // Every spine ancestor now also covers the new key.
        let mut cur = node.parent;
        while let Some(p) = cur {
            self.nodes[p - 1].hi = key;
            cur = self.nodes[p - 1].parent;
        }
        self.depths.take();
        Ok(())
    }

    /// ℓ[L_t]: total length in the left subtree of `key`.
    pub fn left_mass(&self, key: usize, instance: &Instance) -> f64 {
        instance.ell(self.nodes[key - 1].lo, key - 1)
    }

    /// r[R_t]: total read rate in the right subtree of `key`.
    pub fn right_reads(&self, key: usize, instance: &Instance) -> f64 {
        instance.reads(key + 1, self.nodes[key - 1].hi)
    }

    /// ℓ[T_t] and r[T_t] for the subtree at `key`.
    pub fn subtree_totals(&self, key: usize, instance: &Instance) -> (f64, f64) {
        let n = self.nodes[key - 1];
        (instance.ell(n.lo, n.hi), instance.reads(n.lo, n.hi))
    }

    /// Newline-delimited `key,left_or_0,right_or_0`, keys ascending.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, n.left.unwrap_or(0), n.right.unwrap_or(0));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| -> Result<usize> {
                s.parse().map_err(|_| Error::Parse { line: idx + 1, msg: format!("bad integer {s:?}") })
            };
            if parts.len() != 3 {
                return Err(Error::Parse { line: idx + 1, msg: "expected key,left,right".into() });
            }
            rows.push((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?, idx + 1));
        }
        let n = rows.len();
        let mut left = vec![None; n];
        let mut right = vec![None; n];
        let mut seen = vec![false; n];
        for (key, l, r, line) in rows {
            if key == 0 || key > n || seen[key - 1] {
                return Err(Error::Parse { line, msg: format!("key {key} out of range or repeated") });
            }
            seen[key - 1] = true;
            left[key - 1] = (l != 0).then_some(l);
            right[key - 1] = (r != 0).then_some(r);
        }
        Self::from_children(&left, &right)
    }
}

/// φ(σ): the merge tree of a schedule for `instance`.
pub fn schedule_to_tree(instance: &Instance, schedule: &Schedule) -> Result<MergeTree> {
    if schedule.len() != instance.len() {
        return Err(Error::LengthMismatch { expected: instance.len(), got: schedule.len() });
    }
    MergeTree::from_schedule(schedule)
}

/// φ⁻¹(T).
pub fn tree_to_schedule(tree: &MergeTree) -> Schedule {
    tree.to_schedule()
}

/// Copying form of [`MergeTree::spine_insert`].
pub fn spine_insert(tree: &MergeTree, at: Insertion) -> Result<MergeTree> {
    let mut t = tree.clone();
    t.spine_insert(at)?;
    Ok(t)
}

fn check_size(tree: &MergeTree, instance: &Instance) -> Result<()> {
    if tree.len() != instance.len() {
        return Err(Error::LengthMismatch { expected: instance.len(), got: tree.len() });
    }
    Ok(())
}

/// cost_f(T) = Σ ℓ_t (1 + left_depth) + r_t f(1 + right_depth).
pub fn tree_cost(tree: &MergeTree, instance: &Instance, model: &CostModel) -> Result<f64> {
    check_size(tree, instance)?;
    let mut total = 0.0;
    for t in 1..=tree.len() {
        let a = instance.at(t);
        let k = 1 + tree.right_depth(t);
        let f = model.read_factor(k).ok_or(Error::Infeasible { t, stack: k, cap: model.cap().unwrap_or(0) })?;
        total += a.length * (1 + tree.left_depth(t)) as f64;
        if a.read_rate != 0.0 {
            total += a.read_rate * f;
        }
    }
    Ok(total)
}

/// Linear cost written through subtree masses: Σ ℓ_t + r_t + ℓ[L_t] + r[R_t].
pub fn linear_cost_by_subtrees(tree: &MergeTree, instance: &Instance) -> Result<f64> {
    check_size(tree, instance)?;
    Ok((1..=tree.len())
        .map(|t| {
            let a = instance.at(t);
            a.length + a.read_rate + tree.left_mass(t, instance) + tree.right_reads(t, instance)
        })
        .sum())
}

/// Lower bound on the linear optimum: Σ ℓ_t + r_t + min(ℓ[L_t], r[R_t]).
pub fn tree_lower_bound(tree: &MergeTree, instance: &Instance) -> Result<f64> {
    check_size(tree, instance)?;
    Ok((1..=tree.len())
        .map(|t| {
            let a = instance.at(t);
            a.length + a.read_rate + tree.left_mass(t, instance).min(tree.right_reads(t, instance))
        })
        .sum())
}

/// Potential Σ (ℓ_x + r_x + r[R_x]) weighted 1 on the right spine and 2 elsewhere.
pub fn spine_potential(tree: &MergeTree, instance: &Instance) -> Result<f64> {
    check_size(tree, instance)?;
    let mut on_spine = vec![false; tree.len()];
    for k in tree.spine() {
        on_spine[k - 1] = true;
    }
    Ok((1..=tree.len())
        .map(|t| {
            let a = instance.at(t);
            let w = if on_spine[t - 1] { 1.0 } else { 2.0 };
            w * (a.length + a.read_rate + tree.right_reads(t, instance))
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree_of(widths: &[usize]) -> MergeTree {
        MergeTree::from_schedule(&Schedule::new(widths.to_vec())).unwrap()
    }

    #[test]
    fn single_node() {
        let t = tree_of(&[1]);
        assert_eq!(t.root(), Some(1));
        assert_eq!(t.latency(), 1);
        assert_eq!(t.to_schedule().widths, vec![1]);
    }

    #[test]
    fn balanced_three() {
        let t = tree_of(&[1, 2, 1]);
        assert_eq!(t.root(), Some(2));
        assert_eq!(t.left(2), Some(1));
        assert_eq!(t.right(2), Some(3));
    }

    #[test]
    fn root_three_with_chain() {
        let t = tree_of(&[1, 1, 3]);
        assert_eq!(t.root(), Some(3));
        assert_eq!(t.left(3), Some(1));
        assert_eq!(t.right(1), Some(2));
        let rd: Vec<usize> = (1..=3).map(|k| t.right_depth(k)).collect();
        assert_eq!(rd, vec![0, 1, 0]);
    }

    #[test]
    fn right_chain_is_all_appends() {
        let t = MergeTree::from_children(&[None, None, None], &[Some(2), Some(3), None]).unwrap();
        assert_eq!(t.to_schedule().widths, vec![1, 1, 1]);
    }

    #[test]
    fn costs_on_units() {
        let inst = Instance::uniform(1.0, 1.0, 3).unwrap();
        let balanced = tree_of(&[1, 2, 1]);
        let chain = tree_of(&[1, 1, 1]);
        assert_eq!(tree_cost(&balanced, &inst, &CostModel::Linear).unwrap(), 8.0);
        assert_eq!(tree_cost(&chain, &inst, &CostModel::Linear).unwrap(), 9.0);
        assert_eq!(tree_lower_bound(&balanced, &inst).unwrap(), 7.0);
        assert_eq!(tree_lower_bound(&chain, &inst).unwrap(), 6.0);
        let zeros = Instance::uniform(0.0, 0.0, 3).unwrap();
        assert_eq!(tree_cost(&balanced, &zeros, &CostModel::Linear).unwrap(), 0.0);
        let one = Instance::from_pairs(&[(2.0, 5.0)]).unwrap();
        assert_eq!(tree_lower_bound(&tree_of(&[1]), &one).unwrap(), 7.0);
    }

    #[test]
    fn spine_insertions() {
        let mut t = tree_of(&[1]);
        t.spine_insert(Insertion::Append).unwrap();
        assert_eq!(t, tree_of(&[1, 1]));
        assert_eq!(t.latency(), 2);

        let mut t = tree_of(&[1]);
        t.spine_insert(Insertion::Above(1)).unwrap();
        assert_eq!(t.root(), Some(2));
        assert_eq!(t.left(2), Some(1));
        assert_eq!(t, tree_of(&[1, 2]));

        let mut t = tree_of(&[1, 1]);
        t.spine_insert(Insertion::Above(2)).unwrap();
        assert_eq!(t.right(1), Some(3));
        assert_eq!(t.left(3), Some(2));
        assert_eq!(t.to_schedule().widths, vec![1, 1, 2]);
        assert_eq!(t.interval(1), (1, 3));
        assert_eq!(t.interval(3), (2, 3));
    }

    #[test]
    fn insert_off_spine_fails() {
        let mut t = tree_of(&[1, 1, 3]);
        assert!(matches!(t.spine_insert(Insertion::Above(1)), Err(Error::NotOnSpine(1))));
        assert!(matches!(t.spine_insert(Insertion::Above(9)), Err(Error::NotOnSpine(9))));
    }

    #[test]
    fn malformed_trees_rejected() {
        // 1 -> left 2 violates search order.
        assert!(MergeTree::from_children(&[Some(2), None], &[None, None]).is_err());
        // Two roots.
        assert!(MergeTree::from_children(&[None, None], &[None, None]).is_err());
        // Cycle through parent links: 1 -> 2 -> 1 has no root.
        assert!(MergeTree::from_children(&[None, Some(1)], &[Some(2), None]).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let t = tree_of(&[1, 1, 3, 1, 2, 2, 1]);
        let text = t.to_text();
        assert_eq!(MergeTree::from_text(&text).unwrap(), t);
        assert!(MergeTree::from_text("1,0,0\n1,0,0\n").is_err());
    }
}
