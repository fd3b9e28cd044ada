//! Interval DP over merge trees.
//!
//! `OPT_d[i,j]` is the cheapest way to serve steps `i..=j` when every one of them
//! already sits `d` levels deep on the stack. Choosing the root `s` of the
//! interval's tree gives
//!
//! ```text
//! OPT_d[i,j] = min_s OPT_d[i,s-1] + ℓ[i,s] + r[s,j]·f_d(1) + OPT_{d+1}[s+1,j]
//! ```
//!
//! with `f_d(1) = f(d+1) - f(d)`. For the capped model only `d < K` is feasible,
//! so the deepest layer must leave the right subtree empty. For the linear model
//! `f_d(1) = 1` for all `d`, which collapses the layers into one table. For a
//! general `f`, depth `d` is only reachable for intervals starting after `d`.

use crate::error::{Error, Result};
use crate::model::{CostModel, Instance};
use crate::opt::OptSolution;
use crate::tree::MergeTree;

/// Largest horizon accepted for a general read-cost function; the split tables
/// grow as n³/6 and would exhaust memory well before runtime becomes the limit.
pub const GENERAL_DP_MAX_N: usize = 800;

/// Triangular table: row `i` (1-based) stores columns `j = i-1..=n`.
struct Tri {
    rows: Vec<Vec<f64>>,
    first_row: usize,
}

impl Tri {
    fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i - self.first_row][j + 1 - i]
    }
}

enum Next<'a> {
    /// Only an empty right subtree is allowed.
    EmptyOnly,
    /// Depth-independent: the right subtree reads from the table being filled.
    SelfRef,
    Layer(&'a Tri),
}

struct Solved {
    /// Layer 0, row 1: the optimum of every prefix.
    prefix: Vec<f64>,
    /// `splits[d][i - first_row(d)][j - i]`.
    splits: Option<Vec<Vec<Vec<u32>>>>,
    first_rows: Vec<usize>,
    self_ref: bool,
}

/// Minimal total cost over all feasible schedules, with the schedule achieving it.
/// Ties between roots are broken towards the smallest split.
pub fn dp_opt(instance: &Instance, model: &CostModel) -> Result<OptSolution> {
    let solved = solve(instance, model, true)?;
    let n = instance.len();
    if n == 0 {
        return Ok(OptSolution { cost: 0.0, schedule: Default::default() });
    }
    let tree = reconstruct(&solved, n)?;
    Ok(OptSolution { cost: solved.prefix[n - 1], schedule: tree.to_schedule() })
}

/// `OPT(I[1,j])` for every `j = 1..=n`, from a single DP run.
pub fn dp_opt_prefix_costs(instance: &Instance, model: &CostModel) -> Result<Vec<f64>> {
    Ok(solve(instance, model, false)?.prefix)
}

fn solve(instance: &Instance, model: &CostModel, keep_splits: bool) -> Result<Solved> {
    let n = instance.len();
    model.check(n)?;
    let layers = match model {
        CostModel::CappedK(k) => (*k).min(n),
        CostModel::Linear => 1,
        CostModel::General(_) => {
            if n > GENERAL_DP_MAX_N {
                return Err(Error::TooLarge { n, max_n: GENERAL_DP_MAX_N });
            }
            n
        }
    };
    let self_ref = matches!(model, CostModel::Linear);
    let p = instance.len_prefix();
    let r = instance.read_prefix();
    let mut splits: Vec<Vec<Vec<u32>>> = Vec::new();
    let mut first_rows = Vec::new();
    let mut next: Option<Tri> = None;
    for d in (0..layers).rev() {
        let c =
            model.unit_increment(d).ok_or_else(|| Error::internal(format!("depth {d} is infeasible inside the DP")))?;
        let first_row = if self_ref { 1 } else { d + 1 };
        let mode = if self_ref {
            Next::SelfRef
        } else {
            match &next {
                None => Next::EmptyOnly,
                Some(t) => Next::Layer(t),
            }
        };
        let (table, layer_splits) = fill_layer(n, first_row, c, p, r, mode, keep_splits);
        if keep_splits {
            splits.push(layer_splits);
        }
        first_rows.push(first_row);
        next = Some(table);
    }
    splits.reverse();
    first_rows.reverse();
    let prefix = match &next {
        Some(t) if n > 0 => (1..=n).map(|j| t.get(1, j)).collect(),
        _ => Vec::new(),
    };
    Ok(Solved { prefix, splits: keep_splits.then_some(splits), first_rows, self_ref })
}

fn fill_layer(
    n: usize,
    first_row: usize,
    c: f64,
    p: &[f64],
    r: &[f64],
    next: Next<'_>,
    keep_splits: bool,
) -> (Tri, Vec<Vec<u32>>) {
    // Column-major view of the next layer: cols[j][row] = OPT_{d+1}[row, j], with
    // row = j + 1 meaning the empty interval.
    let mut cols: Vec<Vec<f64>> = match &next {
        Next::EmptyOnly => Vec::new(),
        Next::SelfRef => (0..=n).map(|j| vec![0.0; j + 2]).collect(),
        Next::Layer(t) => (0..=n)
            .map(|j| {
                let mut col = vec![0.0; j + 2];
                for (row, v) in col.iter_mut().enumerate().take(j + 1).skip(t.first_row) {
                    *v = t.get(row, j);
                }
                col
            })
            .collect(),
    };
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); n + 1 - first_row.min(n + 1)];
    let mut splits: Vec<Vec<u32>> = if keep_splits { vec![Vec::new(); rows.len()] } else { Vec::new() };
    // a[s] = OPT[i, s-1] + P[s] - c·R[s-1], filled as row i grows.
    let mut a = vec![0.0f64; n + 2];
    for i in (first_row..=n).rev() {
        let mut row = Vec::with_capacity(n + 2 - i);
        let mut row_splits = if keep_splits { Vec::with_capacity(n + 1 - i) } else { Vec::new() };
        row.push(0.0);
        for j in i..=n {
            a[j] = row[j - i] + p[j] - c * r[j - 1];
            let (best_s, best) = match &next {
                Next::EmptyOnly => (j, a[j]),
                _ => {
                    let (off, best) = first_min_sum(&a[i..=j], &cols[j][i + 1..=j + 1]);
                    (i + off, best)
                }
            };
            row.push(best + c * r[j] - p[i - 1]);
            if keep_splits {
                row_splits.push(best_s as u32);
            }
        }
        if let Next::SelfRef = next {
            for j in i..=n {
                cols[j][i] = row[j + 1 - i];
            }
        }
        rows[i - first_row] = row;
        if keep_splits {
            splits[i - first_row] = row_splits;
        }
    }
    (Tri { rows, first_row }, splits)
}

/// Smallest index of the minimum of `x[s] + y[s]`, with that minimum.
///
/// The minimum is found with independent lanes (which the compiler vectorises)
/// and the index by a second scan that stops at the first match. Both passes
/// evaluate the same sums, so the match is exact.
fn first_min_sum(x: &[f64], y: &[f64]) -> (usize, f64) {
    const LANES: usize = 8;
    let n = x.len().min(y.len());
    let (x, y) = (&x[..n], &y[..n]);
    let mut lanes = [f64::INFINITY; LANES];
    let mut xc = x.chunks_exact(LANES);
    let mut yc = y.chunks_exact(LANES);
    for (xs, ys) in (&mut xc).zip(&mut yc) {
        for k in 0..LANES {
            let v = xs[k] + ys[k];
            lanes[k] = if v < lanes[k] { v } else { lanes[k] };
        }
    }
    let mut best = lanes.iter().fold(f64::INFINITY, |m, &v| if v < m { v } else { m });
    for (&a, &b) in xc.remainder().iter().zip(yc.remainder()) {
        let v = a + b;
        if v < best {
            best = v;
        }
    }
    let idx = x.iter().zip(y).position(|(&a, &b)| a + b == best).unwrap_or(0);
    (idx, best)
}

fn reconstruct(solved: &Solved, n: usize) -> Result<MergeTree> {
    let splits = solved.splits.as_ref().ok_or_else(|| Error::internal("splits were not kept"))?;
    let split = |d: usize, i: usize, j: usize| -> Result<usize> {
        let fr = solved.first_rows[d];
        splits
            .get(d)
            .and_then(|l| l.get(i.wrapping_sub(fr)))
            .and_then(|row| row.get(j - i))
            .map(|&s| s as usize)
            .ok_or_else(|| Error::internal(format!("no split recorded for depth {d}, interval [{i},{j}]")))
    };
    let mut left = vec![None; n];
    let mut right = vec![None; n];
    let root = split(0, 1, n)?;
    let mut stack = vec![(1usize, n, 0usize, root)];
    while let Some((i, j, d, s)) = stack.pop() {
        if i < s {
            let l = split(d, i, s - 1)?;
            left[s - 1] = Some(l);
            stack.push((i, s - 1, d, l));
        }
        if s < j {
            let dr = if solved.self_ref { d } else { d + 1 };
            let rt = split(dr, s + 1, j)?;
            right[s - 1] = Some(rt);
            stack.push((s + 1, j, dr, rt));
        }
    }
    MergeTree::from_children(&left, &right)
}
