//! Exact sparse matrix isotonic regression.
//!
//! Given samples `(Xᵢ, Yᵢ)`, a nonnegative `d × k` matrix `M`, a sparsity
//! level `s`, and a range bound `b`, find an index set `I` of size `s` and
//! fitted values `F ∈ [0, b]ⁿ`, monotone with respect to the componentwise
//! order of the projections `M(I)ᵀXᵢ`, minimizing `Σ (Yᵢ - Fᵢ)²`.
//!
//! For a fixed `I` this is isotonic regression on a partial order with box
//! constraints; the driver enumerates index sets and keeps the global
//! minimizer. Exactness of the fixed-`I` solve:
//!
//! * total orders (always the case for `k = 1`) use weighted
//!   pool-adjacent-violators;
//! * general orders use recursive block partitioning: each block either
//!   takes its weighted mean or is split along the maximum-weight upper set
//!   found by a minimum s-t cut on the violator network, which is exact for
//!   the Euclidean objective;
//! * clipping the unconstrained monotone fit to `[0, b]` afterwards is the
//!   exact box-constrained optimum (clipping at constant levels preserves
//!   both monotonicity and optimality).

use std::collections::HashMap;

use itertools::Itertools;
use ndarray::Array2;

use crate::{Error, Result};

/// Comparison tolerance for projected-coordinate ties.
const TIE_TOL: f64 = 1e-12;

/// Default cap on the number of enumerated index sets.
pub const DEFAULT_ENUM_BUDGET: u128 = 200_000;

/// A partial order over sample indices: equivalence groups of identical
/// points plus strict precedence edges between group representatives.
#[derive(Debug, Clone)]
pub struct PartialOrder {
    n: usize,
    /// Equivalence classes over `0..n`; each sorted, classes sorted by
    /// their first member.
    groups: Vec<Vec<usize>>,
    /// `(a, b)`: every sample of group `a` strictly precedes group `b`.
    group_edges: Vec<(usize, usize)>,
}

impl PartialOrder {
    /// Builds an order from sample-level strict edges and explicit
    /// equivalence groups. Unlisted samples form singleton groups.
    pub fn new(n: usize, edges: &[(usize, usize)], equivalences: &[Vec<usize>]) -> Result<Self> {
        let mut uf = UnionFind::new(n);
        for class in equivalences {
            for w in class.windows(2) {
                if w[0] >= n || w[1] >= n {
                    return Err(Error::InvalidArgument("equivalence index out of range".into()));
                }
                uf.union(w[0], w[1]);
            }
        }
        let (groups, group_of) = uf.into_groups();
        let mut group_edges: Vec<(usize, usize)> = edges
            .iter()
            .map(|&(i, j)| {
                if i >= n || j >= n {
                    return Err(Error::InvalidArgument("edge index out of range".into()));
                }
                Ok((group_of[i], group_of[j]))
            })
            .collect::<Result<_>>()?;
        group_edges.sort_unstable();
        group_edges.dedup();
        Ok(PartialOrder { n, groups, group_edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Strict precedence pairs between group representatives (first member
    /// of each group).
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.group_edges.iter().map(|&(a, b)| (self.groups[a][0], self.groups[b][0]))
    }

    fn group_count(&self) -> usize {
        self.groups.len()
    }

    /// Topological order of groups; `InconsistentOrder` on a cycle
    /// (including an edge inside one group).
    fn toposort(&self) -> Result<Vec<usize>> {
        let m = self.group_count();
        if self.group_edges.iter().any(|&(a, b)| a == b) {
            return Err(Error::InconsistentOrder);
        }
        let mut indeg = vec![0usize; m];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); m];
        for &(a, b) in &self.group_edges {
            succ[a].push(b);
            indeg[b] += 1;
        }
        let mut stack: Vec<usize> = (0..m).filter(|&g| indeg[g] == 0).collect();
        let mut order = Vec::with_capacity(m);
        while let Some(g) = stack.pop() {
            order.push(g);
            for &h in &succ[g] {
                indeg[h] -= 1;
                if indeg[h] == 0 {
                    stack.push(h);
                }
            }
        }
        if order.len() != m {
            return Err(Error::InconsistentOrder);
        }
        Ok(order)
    }

    /// Reachability closure over groups as bitsets, in topological order.
    fn closure(&self, topo: &[usize]) -> Vec<Vec<u64>> {
        let m = self.group_count();
        let words = m.div_ceil(64);
        let mut reach = vec![vec![0u64; words]; m];
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); m];
        for &(a, b) in &self.group_edges {
            succ[a].push(b);
        }
        for &g in topo.iter().rev() {
            for &h in &succ[g] {
                let (dst, src) = (g, h);
                let src_bits = reach[src].clone();
                let row = &mut reach[dst];
                row[src / 64] |= 1 << (src % 64);
                for (w, bits) in row.iter_mut().zip(src_bits) {
                    *w |= bits;
                }
            }
        }
        reach
    }

    /// True when every pair of groups is comparable.
    fn is_total(&self, reach: &[Vec<u64>]) -> bool {
        let m = self.group_count();
        let test = |a: usize, b: usize| reach[a][b / 64] >> (b % 64) & 1 == 1;
        for a in 0..m {
            for b in (a + 1)..m {
                if !test(a, b) && !test(b, a) {
                    return false;
                }
            }
        }
        true
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    /// Groups sorted by first member; returns `(groups, group_of)`.
    fn into_groups(mut self) -> (Vec<Vec<usize>>, Vec<usize>) {
        let n = self.parent.len();
        let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
        for i in 0..n {
            let root = self.find(i);
            members.entry(root).or_default().push(i);
        }
        let mut groups: Vec<Vec<usize>> = members.into_values().collect();
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.sort_by_key(|g| g[0]);
        let mut group_of = vec![0usize; n];
        for (gi, g) in groups.iter().enumerate() {
            for &i in g {
                group_of[i] = gi;
            }
        }
        (groups, group_of)
    }
}

/// Projections `M(I)ᵀXᵢ` for all samples, as `n` vectors of length `k`.
pub fn project_samples(m: &Array2<f64>, support: &[usize], x: &Array2<f64>) -> Vec<Vec<f64>> {
    let (n, _d) = x.dim();
    let k = m.ncols();
    let mut out = vec![vec![0.0; k]; n];
    for (i, proj) in out.iter_mut().enumerate() {
        for &row in support {
            let xv = x[[i, row]];
            if xv == 0.0 {
                continue;
            }
            for (j, p) in proj.iter_mut().enumerate() {
                *p += m[[row, j]] * xv;
            }
        }
    }
    out
}

fn check_nonnegative(m: &Array2<f64>) -> Result<()> {
    for ((i, j), &v) in m.indexed_iter() {
        if v < 0.0 {
            return Err(Error::NonnegativityViolated { row: i, col: j, value: v });
        }
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("M[{i}][{j}]")));
        }
    }
    Ok(())
}

/// The partial order induced on samples by componentwise comparison of
/// `M(I)ᵀXᵢ`: exact ties (within `1e-12` per coordinate) merge into
/// equivalence groups, dominance with at least one strict coordinate
/// becomes an edge.
pub fn induced_order(m: &Array2<f64>, support: &[usize], x: &Array2<f64>) -> Result<PartialOrder> {
    check_nonnegative(m)?;
    let n = x.nrows();
    let proj = project_samples(m, support, x);
    order_of_points(&proj, n)
}

/// The same construction from precomputed points in `ℝᵏ`.
pub fn order_of_points(points: &[Vec<f64>], n: usize) -> Result<PartialOrder> {
    debug_assert_eq!(points.len(), n);
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let equal = points[i]
                .iter()
                .zip(&points[j])
                .all(|(a, b)| (a - b).abs() <= TIE_TOL);
            if equal {
                uf.union(i, j);
            }
        }
    }
    let (groups, _) = uf.into_groups();
    let m = groups.len();
    let mut group_edges = Vec::new();
    for a in 0..m {
        let pa = &points[groups[a][0]];
        for b in 0..m {
            if a == b {
                continue;
            }
            let pb = &points[groups[b][0]];
            let dominated = pa.iter().zip(pb).all(|(u, v)| *u <= v + TIE_TOL);
            let strict = pa.iter().zip(pb).any(|(u, v)| v - u > TIE_TOL);
            if dominated && strict {
                group_edges.push((a, b));
            }
        }
    }
    group_edges.sort_unstable();
    Ok(PartialOrder { n, groups, group_edges })
}

/// Weighted pool-adjacent-violators on a chain of `(value, weight)` blocks
/// given in increasing order. Returns the fitted value per position.
fn pava(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut means: Vec<f64> = Vec::with_capacity(values.len());
    let mut wsum: Vec<f64> = Vec::with_capacity(values.len());
    let mut count: Vec<usize> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        means.push(v);
        wsum.push(w);
        count.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let (m2, w2, c2) = (means.pop().unwrap(), wsum.pop().unwrap(), count.pop().unwrap());
            let last = means.len() - 1;
            let merged_w = wsum[last] + w2;
            means[last] = (means[last] * wsum[last] + m2 * w2) / merged_w;
            wsum[last] = merged_w;
            count[last] += c2;
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (m, c) in means.iter().zip(count) {
        out.extend(std::iter::repeat(*m).take(c));
    }
    out
}

/// Dense-capacity max-flow (BFS augmenting paths). Returns the max flow
/// value and the source-side reachable set of the final residual network.
fn max_flow(cap: &mut [Vec<f64>], s: usize, t: usize) -> (f64, Vec<bool>) {
    let n = cap.len();
    let mut flow = 0.0;
    loop {
        // BFS for an augmenting path
        let mut prev = vec![usize::MAX; n];
        prev[s] = s;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for v in 0..n {
                if prev[v] == usize::MAX && cap[u][v] > 1e-12 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            let reachable: Vec<bool> = prev.iter().map(|&p| p != usize::MAX).collect();
            return (flow, reachable);
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = t;
        while v != s {
            let u = prev[v];
            bottleneck = bottleneck.min(cap[u][v]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = prev[v];
            cap[u][v] -= bottleneck;
            cap[v][u] += bottleneck;
            v = u;
        }
        flow += bottleneck;
    }
}

/// Maximum-weight upper-closed subset of `block` (project selection via
/// min cut). `arcs` are precedence pairs `(a, b)` local to the block.
/// Returns `(gain, membership)`.
fn max_upper_set(weights: &[f64], arcs: &[(usize, usize)]) -> (f64, Vec<bool>) {
    let m = weights.len();
    let s = m;
    let t = m + 1;
    let total_pos: f64 = weights.iter().filter(|&&w| w > 0.0).sum();
    if total_pos == 0.0 {
        return (0.0, vec![false; m]);
    }
    let inf = weights.iter().map(|w| w.abs()).sum::<f64>() + 1.0;
    let mut cap = vec![vec![0.0; m + 2]; m + 2];
    for (g, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            cap[s][g] = w;
        } else if w < 0.0 {
            cap[g][t] = -w;
        }
    }
    for &(a, b) in arcs {
        cap[a][b] = inf;
    }
    let (cut, reach) = max_flow(&mut cap, s, t);
    let members: Vec<bool> = (0..m).map(|g| reach[g]).collect();
    (total_pos - cut, members)
}

/// Exact isotonic regression on the group graph: recursive block
/// partitioning. Returns the fitted value per group (unclipped).
fn fit_groups(order: &PartialOrder, ybar: &[f64], w: &[f64], topo: &[usize], total: bool) -> Vec<f64> {
    let m = order.group_count();
    if total {
        // chain: rank groups by ancestor count and run PAVA
        let mut rank = vec![0usize; m];
        for (pos, &g) in topo.iter().enumerate() {
            rank[g] = pos;
        }
        // topo from a stack is a valid linear extension; for a total order
        // it is the unique sorted order
        let mut by_rank: Vec<usize> = (0..m).collect();
        by_rank.sort_by_key(|&g| rank[g]);
        let values: Vec<f64> = by_rank.iter().map(|&g| ybar[g]).collect();
        let weights: Vec<f64> = by_rank.iter().map(|&g| w[g]).collect();
        let fitted = pava(&values, &weights);
        let mut out = vec![0.0; m];
        for (pos, &g) in by_rank.iter().enumerate() {
            out[g] = fitted[pos];
        }
        return out;
    }

    let mut out = vec![0.0; m];
    let all: Vec<usize> = (0..m).collect();
    let mut stack = vec![all];
    while let Some(block) = stack.pop() {
        let wsum: f64 = block.iter().map(|&g| w[g]).sum();
        let mu = block.iter().map(|&g| w[g] * ybar[g]).sum::<f64>() / wsum;
        let weights: Vec<f64> = block.iter().map(|&g| w[g] * (ybar[g] - mu)).collect();
        let scale: f64 = weights.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
        let local_of: HashMap<usize, usize> =
            block.iter().enumerate().map(|(l, &g)| (g, l)).collect();
        let arcs: Vec<(usize, usize)> = order
            .group_edges
            .iter()
            .filter_map(|&(a, b)| match (local_of.get(&a), local_of.get(&b)) {
                (Some(&la), Some(&lb)) => Some((la, lb)),
                _ => None,
            })
            .collect();
        let (gain, members) = max_upper_set(&weights, &arcs);
        let upper: Vec<usize> = block
            .iter()
            .enumerate()
            .filter(|(l, _)| members[*l])
            .map(|(_, &g)| g)
            .collect();
        if gain <= 1e-11 * scale || upper.is_empty() || upper.len() == block.len() {
            for &g in &block {
                out[g] = mu;
            }
        } else {
            let lower: Vec<usize> = block
                .iter()
                .enumerate()
                .filter(|(l, _)| !members[*l])
                .map(|(_, &g)| g)
                .collect();
            stack.push(lower);
            stack.push(upper);
        }
    }
    out
}

/// Exact minimizer of `Σ (Yᵢ - Fᵢ)²` over monotone `F ∈ [0, b]ⁿ`.
pub fn isotonic_fit(order: &PartialOrder, y: &[f64], b: f64) -> Result<Vec<f64>> {
    if y.len() != order.n {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for an order on {} points",
            y.len(),
            order.n
        )));
    }
    if !(b > 0.0) {
        return Err(Error::InvalidArgument(format!("b = {b} must be positive")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("responses".into()));
    }
    let topo = order.toposort()?;
    let m = order.group_count();
    let mut ybar = vec![0.0; m];
    let mut w = vec![0.0; m];
    for (g, members) in order.groups.iter().enumerate() {
        w[g] = members.len() as f64;
        ybar[g] = members.iter().map(|&i| y[i]).sum::<f64>() / w[g];
    }
    let total = if m <= 1 {
        true
    } else {
        let reach = order.closure(&topo);
        order.is_total(&reach)
    };
    let fitted = fit_groups(order, &ybar, &w, &topo, total);
    let mut out = vec![0.0; order.n];
    for (g, members) in order.groups.iter().enumerate() {
        let v = fitted[g].clamp(0.0, b);
        for &i in members {
            out[i] = v;
        }
    }
    Ok(out)
}

/// Squared-error objective of a fit.
pub fn sum_squared_error(y: &[f64], f: &[f64]) -> f64 {
    y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Result of the sparse search: the winning index set, its fit, and the
/// anchor pairs `(M(I)ᵀXᵢ, Fᵢ)` the interpolant is built from.
#[derive(Debug, Clone)]
pub struct SparseIsoResult {
    pub support: Vec<usize>,
    pub fitted: Vec<f64>,
    pub objective: f64,
    pub anchors: Vec<(Vec<f64>, f64)>,
}

/// Number of `s`-subsets of `d` elements, saturating.
pub fn index_set_count(d: usize, s: usize) -> u128 {
    if s > d {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..s {
        acc = acc.saturating_mul((d - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Enumerates all size-`s` index sets (lexicographically), solves the
/// fixed-set isotonic problem for each, and returns the global minimizer;
/// ties keep the lexicographically smallest set. Index sets that differ
/// only by rows of `M` that are entirely zero induce the same projections
/// and are solved once.
pub fn sparse_isotonic(
    x: &Array2<f64>,
    y: &[f64],
    m: &Array2<f64>,
    s: usize,
    b: f64,
    budget: u128,
) -> Result<SparseIsoResult> {
    check_nonnegative(m)?;
    let d = x.ncols();
    if m.nrows() != d {
        return Err(Error::DimensionMismatch(format!(
            "M has {} rows for {d}-dimensional samples",
            m.nrows()
        )));
    }
    if s == 0 || s > d {
        return Err(Error::InvalidArgument(format!("sparsity s = {s} out of range for d = {d}")));
    }
    let required = index_set_count(d, s);
    if required > budget {
        return Err(Error::EnumerationBudget { required, budget });
    }

    let nonzero_rows: Vec<bool> = (0..d)
        .map(|i| (0..m.ncols()).any(|j| m[[i, j]] != 0.0))
        .collect();
    // Unordered clip fit: an admissible lower bound independent of the set.
    let lower_bound: f64 = y.iter().map(|&v| (v - v.clamp(0.0, b)).powi(2)).sum();

    let mut best: Option<SparseIsoResult> = None;
    let mut seen: HashMap<Vec<usize>, f64> = HashMap::new();
    for combo in (0..d).combinations(s) {
        let key: Vec<usize> = combo.iter().copied().filter(|&i| nonzero_rows[i]).collect();
        if let Some(&obj) = seen.get(&key) {
            // same projections as an earlier (lexicographically smaller) set
            debug_assert!(best.as_ref().is_some_and(|r| r.objective <= obj + 1e-12));
            continue;
        }
        let order = induced_order(m, &combo, x)?;
        let fitted = isotonic_fit(&order, y, b)?;
        let objective = sum_squared_error(y, &fitted);
        seen.insert(key, objective);
        let better = best.as_ref().map_or(true, |cur| objective < cur.objective - 1e-15);
        if better {
            let proj = project_samples(m, &combo, x);
            let anchors = proj.into_iter().zip(fitted.iter().copied()).collect();
            best = Some(SparseIsoResult { support: combo, fitted, objective, anchors });
            if best.as_ref().unwrap().objective <= lower_bound + 1e-12 {
                break;
            }
        }
    }
    Ok(best.expect("at least one index set was enumerated"))
}

/// The step interpolant `f(v) = max { Fᵢ : anchorᵢ ⪯ v }`, `0` when nothing
/// is dominated. Coordinate-wise monotone with range in `[0, b]` whenever
/// the anchors are.
#[derive(Debug, Clone)]
pub struct StepInterpolant {
    anchors: Vec<(Vec<f64>, f64)>,
}

impl StepInterpolant {
    pub fn new(anchors: Vec<(Vec<f64>, f64)>) -> Self {
        StepInterpolant { anchors }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        let mut best = 0.0f64;
        let mut any = false;
        for (a, f) in &self.anchors {
            if a.iter().zip(v).all(|(ai, vi)| ai <= vi) {
                any = true;
                best = best.max(*f);
            }
        }
        if any {
            best
        } else {
            0.0
        }
    }

    pub fn anchors(&self) -> &[(Vec<f64>, f64)] {
        &self.anchors
    }
}

/// Builds the step interpolant from a sparse fit.
pub fn step_interpolant(result: &SparseIsoResult) -> StepInterpolant {
    StepInterpolant::new(result.anchors.clone())
}

/// Exhaustive grid search over monotone assignments on
/// `{0, b/(g-1), …, b}`: the independent oracle for the exact solver.
/// Guarded to tiny instances.
pub fn brute_force_fit(
    order: &PartialOrder,
    y: &[f64],
    b: f64,
    grid_steps: usize,
) -> Result<Vec<f64>> {
    if order.n > 8 {
        return Err(Error::SizeGuard(format!("brute force limited to n <= 8, got {}", order.n)));
    }
    if grid_steps > 21 || grid_steps < 2 {
        return Err(Error::SizeGuard(format!("grid steps must be in 2..=21, got {grid_steps}")));
    }
    if y.len() != order.n {
        return Err(Error::DimensionMismatch("responses vs order size".into()));
    }
    let topo = order.toposort()?;
    let m = order.group_count();
    let grid: Vec<f64> = (0..grid_steps)
        .map(|i| b * i as f64 / (grid_steps - 1) as f64)
        .collect();

    // cost of giving group g the grid level l
    let cost = |g: usize, l: usize| -> f64 {
        order.groups[g].iter().map(|&i| (y[i] - grid[l]).powi(2)).sum()
    };
    let min_cost: Vec<f64> = (0..m)
        .map(|g| (0..grid_steps).map(|l| cost(g, l)).fold(f64::INFINITY, f64::min))
        .collect();
    // direct predecessors in topo-local indexing
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &(a, bb) in &order.group_edges {
        preds[bb].push(a);
    }
    let mut suffix_min = vec![0.0; m + 1];
    for pos in (0..m).rev() {
        suffix_min[pos] = suffix_min[pos + 1] + min_cost[topo[pos]];
    }

    let mut best_cost = f64::INFINITY;
    let mut best_levels = vec![0usize; m];
    let mut levels = vec![0usize; m];

    fn dfs(
        pos: usize,
        acc: f64,
        topo: &[usize],
        preds: &[Vec<usize>],
        levels: &mut Vec<usize>,
        best_cost: &mut f64,
        best_levels: &mut Vec<usize>,
        suffix_min: &[f64],
        grid_steps: usize,
        cost: &dyn Fn(usize, usize) -> f64,
    ) {
        if acc + suffix_min[pos] >= *best_cost - 1e-15 {
            return;
        }
        if pos == topo.len() {
            *best_cost = acc;
            best_levels.copy_from_slice(levels);
            return;
        }
        let g = topo[pos];
        let floor = preds[g].iter().map(|&p| levels[p]).max().unwrap_or(0);
        for l in floor..grid_steps {
            levels[g] = l;
            dfs(
                pos + 1,
                acc + cost(g, l),
                topo,
                preds,
                levels,
                best_cost,
                best_levels,
                suffix_min,
                grid_steps,
                cost,
            );
        }
    }
    dfs(
        0,
        0.0,
        &topo,
        &preds,
        &mut levels,
        &mut best_cost,
        &mut best_levels,
        &suffix_min,
        grid_steps,
        &cost,
    );

    let mut out = vec![0.0; order.n];
    for (g, members) in order.groups.iter().enumerate() {
        for &i in members {
            out[i] = grid[best_levels[g]];
        }
    }
    Ok(out)
}

/// Checks that `f` respects every strict edge and is constant on
/// equivalence groups. Used by tests and by debug assertions.
pub fn is_monotone(order: &PartialOrder, f: &[f64]) -> bool {
    for group in &order.groups {
        for w in group.windows(2) {
            if f[w[0]] != f[w[1]] {
                return false;
            }
        }
    }
    for &(a, b) in &order.group_edges {
        if f[order.groups[a][0]] > f[order.groups[b][0]] {
            return false;
        }
    }
    true
}
