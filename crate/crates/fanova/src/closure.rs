//! Closed-testing multiplicity adjustment over interval hypotheses, and the
//! pairwise follow-up within one interval.
//!
//! The elementary hypotheses are "no group difference on interval i". An
//! intersection of intervals is tested with the sum of their statistics, so
//! one shared permutation matrix prices every node. The adjusted p-value of
//! an elementary hypothesis is the largest p-value among the intersection
//! nodes containing it.
//!
//! Walking all `2^m - 1` nodes is exact but exponential. The shortcut sorts
//! the hypotheses and only evaluates, for the hypothesis ranked `r`, the
//! chain `T_(r)`, `T_(r) + T_(1)`, ..., `T_(r) + ... + T_(r-1)` plus the
//! already-priced full prefixes of higher ranks: `m(m+1)/2` distinct nodes in
//! total. With p-values from a permutation distribution the statistic order
//! and the p-value order can disagree, so the shortcut runs once under each
//! ordering and every hypothesis takes the larger of its two adjusted
//! values.
//!
//! Only the sum combining function is implemented. A max-combining variant
//! admits an even cheaper shortcut (each hypothesis needs a single node),
//! but it weights sparse strong signals differently and is not provided
//! here.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;

use serde::Serialize;

use crate::curves::FunctionalDataset;
use crate::error::{Error, Result};
use crate::permute::{p_value_from_count, NullStatMatrix, PValueRule, PermutationPlan};
use crate::stats::{group_sums, IntervalPartition};

/// Bit set over elementary hypothesis indices.
pub type SubsetMask = u32;

/// Largest `m` for which the full closure walk is allowed by default.
pub const FULL_CLOSURE_CAP: usize = 12;

/// Largest group count for the pairwise closure tree.
pub const PAIRWISE_GROUP_CAP: usize = 8;

/// Members of a mask in ascending index order.
pub fn mask_members(mask: SubsetMask) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// A source of p-values for intersection nodes.
pub trait NodePValues {
    /// Number of elementary hypotheses.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Observed per-hypothesis statistics.
    fn observed(&self) -> &[f64];

    /// p-value of the intersection node over the members of `mask`, with
    /// any top-node override applied.
    fn node_p(&self, mask: SubsetMask) -> f64;

    /// Unadjusted p-value of elementary hypothesis `i`, never overridden.
    fn raw_p(&self, i: usize) -> f64 {
        self.node_p(1 << i)
    }
}

/// Node p-values priced from one shared permutation matrix. The node
/// statistic of a subset is the sum of its member statistics, evaluated on
/// the matrix row sums. Optionally the p-value of the full set is pinned to
/// an externally supplied value.
#[derive(Debug, Clone)]
pub struct PermutationNodes<'a> {
    nulls: &'a NullStatMatrix,
    rule: PValueRule,
    top_override: Option<f64>,
}

impl<'a> PermutationNodes<'a> {
    pub fn new(nulls: &'a NullStatMatrix, rule: PValueRule) -> Self {
        Self {
            nulls,
            rule,
            top_override: None,
        }
    }

    /// Pin the p-value of the top node (all hypotheses) to `p`.
    pub fn with_top_override(mut self, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidPValue(p));
        }
        self.top_override = Some(p);
        Ok(self)
    }

    fn full_mask(&self) -> SubsetMask {
        if self.nulls.m() == 32 {
            u32::MAX
        } else {
            (1u32 << self.nulls.m()) - 1
        }
    }
}

impl NodePValues for PermutationNodes<'_> {
    fn len(&self) -> usize {
        self.nulls.m()
    }

    fn observed(&self) -> &[f64] {
        self.nulls.observed()
    }

    fn node_p(&self, mask: SubsetMask) -> f64 {
        if let Some(p) = self.top_override {
            if mask == self.full_mask() {
                return p;
            }
        }
        self.nulls.subset_p_value(&mask_members(mask), self.rule)
    }

    fn raw_p(&self, i: usize) -> f64 {
        self.nulls.subset_p_value(&[i], self.rule)
    }
}

/// Node p-values from a strictly decreasing analytic map of the node
/// statistic. Under such a map the shortcut reproduces the full closure
/// exactly, which makes this the reference case for testing.
pub struct MonotoneNodes<F: Fn(f64) -> f64> {
    observed: Vec<f64>,
    map: F,
}

impl<F: Fn(f64) -> f64> MonotoneNodes<F> {
    /// `map` must be strictly decreasing with values in (0, 1].
    pub fn new(observed: Vec<f64>, map: F) -> Self {
        Self { observed, map }
    }
}

impl<F: Fn(f64) -> f64> NodePValues for MonotoneNodes<F> {
    fn len(&self) -> usize {
        self.observed.len()
    }

    fn observed(&self) -> &[f64] {
        &self.observed
    }

    fn node_p(&self, mask: SubsetMask) -> f64 {
        let sum: f64 = mask_members(mask).iter().map(|&i| self.observed[i]).sum();
        (self.map)(sum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ClosureMethod {
    Full,
    #[value(alias = "shortcut")]
    ShortcutStat,
    ShortcutP,
    Combined,
}

/// Adjustment of one elementary hypothesis.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisAdjustment {
    pub index: usize,
    pub statistic: f64,
    pub raw_p: f64,
    pub adjusted_p: f64,
    /// The intersection node whose p-value attains the adjustment.
    pub achieving_node: SubsetMask,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    pub method: ClosureMethod,
    pub hypotheses: Vec<HypothesisAdjustment>,
    /// Distinct intersection nodes whose p-value was computed.
    pub node_evaluations: usize,
}

impl ClosureReport {
    pub fn adjusted(&self) -> Vec<f64> {
        self.hypotheses.iter().map(|h| h.adjusted_p).collect()
    }

    pub fn rejected_at(&self, alpha: f64) -> Vec<bool> {
        self.hypotheses
            .iter()
            .map(|h| h.adjusted_p <= alpha)
            .collect()
    }
}

/// Full closure: evaluate every nonempty intersection. Errors above
/// [`FULL_CLOSURE_CAP`] hypotheses.
pub fn full_closure(src: &impl NodePValues) -> Result<ClosureReport> {
    full_closure_with_cap(src, FULL_CLOSURE_CAP)
}

pub fn full_closure_with_cap(src: &impl NodePValues, cap: usize) -> Result<ClosureReport> {
    let m = src.len();
    if m == 0 {
        return Err(Error::InvalidPartition("no hypotheses".into()));
    }
    if m > cap {
        return Err(Error::ClosureCapExceeded {
            hypotheses: m,
            nodes: (1u64 << m) - 1,
            cap: (1u64 << cap) - 1,
        });
    }
    let node_count = (1u32 << m) - 1;
    let mut best_p = vec![f64::NEG_INFINITY; m];
    let mut best_node = vec![0u32; m];
    for mask in 1..=node_count {
        let p = src.node_p(mask);
        for i in 0..m {
            if mask & (1 << i) != 0 && p > best_p[i] {
                best_p[i] = p;
                best_node[i] = mask;
            }
        }
    }
    let hypotheses = (0..m)
        .map(|i| {
            let raw = src.raw_p(i);
            let mut adjusted = best_p[i];
            let mut achieving = best_node[i];
            if raw > adjusted {
                adjusted = raw;
                achieving = 1 << i;
            }
            HypothesisAdjustment {
                index: i,
                statistic: src.observed()[i],
                raw_p: raw,
                adjusted_p: adjusted,
                achieving_node: achieving,
            }
        })
        .collect();
    Ok(ClosureReport {
        method: ClosureMethod::Full,
        hypotheses,
        node_evaluations: node_count as usize,
    })
}

/// One shortcut pass for a given hypothesis ordering (weakest first). Node
/// p-values are memoized in `cache`, which doubles as the distinct
/// evaluation counter.
fn shortcut_pass(
    src: &impl NodePValues,
    order: &[usize],
    cache: &mut HashMap<SubsetMask, f64>,
) -> (Vec<f64>, Vec<SubsetMask>) {
    let m = order.len();
    let mut price =
        |mask: SubsetMask| -> f64 { *cache.entry(mask).or_insert_with(|| src.node_p(mask)) };

    // Chain maxima per rank plus each rank's full-prefix node.
    let mut chain_best: Vec<(f64, SubsetMask)> = Vec::with_capacity(m);
    let mut prefix_top: Vec<(f64, SubsetMask)> = Vec::with_capacity(m);
    let mut prefix_mask: SubsetMask = 0;
    for r in 0..m {
        let own = 1u32 << order[r];
        let mut best = (f64::NEG_INFINITY, 0u32);
        let mut grown: SubsetMask = own;
        // s = 1 uses the hypothesis alone, then the s - 1 weakest others.
        for s in 0..=r {
            let mask = if s == 0 {
                own
            } else {
                grown |= 1 << order[s - 1];
                grown
            };
            let p = price(mask);
            if p > best.0 {
                best = (p, mask);
            }
        }
        chain_best.push(best);
        prefix_mask |= own;
        let top_p = price(prefix_mask);
        prefix_top.push((top_p, prefix_mask));
    }

    // Suffix maxima of the full-prefix nodes: rank r inherits the tops of
    // every higher rank.
    let mut inherited: Vec<(f64, SubsetMask)> = vec![(f64::NEG_INFINITY, 0); m];
    let mut running = (f64::NEG_INFINITY, 0u32);
    for r in (0..m).rev() {
        inherited[r] = running;
        if prefix_top[r].0 > running.0 {
            running = prefix_top[r];
        }
    }

    let mut adjusted = vec![0.0; src.len()];
    let mut achieving = vec![0u32; src.len()];
    for r in 0..m {
        let i = order[r];
        let (mut p, mut node) = chain_best[r];
        if inherited[r].0 > p {
            p = inherited[r].0;
            node = inherited[r].1;
        }
        adjusted[i] = p;
        achieving[i] = node;
    }
    (adjusted, achieving)
}

/// Order hypotheses by ascending statistic, ties by index.
fn order_by_statistic(src: &impl NodePValues) -> Vec<usize> {
    let mut order: Vec<usize> = (0..src.len()).collect();
    let observed = src.observed();
    order.sort_by(|&a, &b| {
        observed[a]
            .partial_cmp(&observed[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    order
}

/// Order hypotheses by descending unadjusted p-value, ties by index.
fn order_by_raw_p(src: &impl NodePValues, raw: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..src.len()).collect();
    order.sort_by(|&a, &b| raw[b].partial_cmp(&raw[a]).unwrap().then(a.cmp(&b)));
    order
}

fn finish_report(
    src: &impl NodePValues,
    method: ClosureMethod,
    raw: Vec<f64>,
    mut adjusted: Vec<f64>,
    mut achieving: Vec<SubsetMask>,
    node_evaluations: usize,
) -> ClosureReport {
    let hypotheses = (0..src.len())
        .map(|i| {
            if raw[i] > adjusted[i] {
                adjusted[i] = raw[i];
                achieving[i] = 1 << i;
            }
            HypothesisAdjustment {
                index: i,
                statistic: src.observed()[i],
                raw_p: raw[i],
                adjusted_p: adjusted[i],
                achieving_node: achieving[i],
            }
        })
        .collect();
    ClosureReport {
        method,
        hypotheses,
        node_evaluations,
    }
}

/// Shortcut over the ascending-statistic ordering: `m(m+1)/2` node
/// evaluations.
pub fn shortcut_stat_ordered(src: &impl NodePValues) -> ClosureReport {
    let raw: Vec<f64> = (0..src.len()).map(|i| src.raw_p(i)).collect();
    let mut cache = HashMap::new();
    let (adjusted, achieving) = shortcut_pass(src, &order_by_statistic(src), &mut cache);
    finish_report(
        src,
        ClosureMethod::ShortcutStat,
        raw,
        adjusted,
        achieving,
        cache.len(),
    )
}

/// Shortcut over the descending-raw-p ordering: `m(m+1)/2` node
/// evaluations.
pub fn shortcut_p_ordered(src: &impl NodePValues) -> ClosureReport {
    let raw: Vec<f64> = (0..src.len()).map(|i| src.raw_p(i)).collect();
    let mut cache = HashMap::new();
    let (adjusted, achieving) = shortcut_pass(src, &order_by_raw_p(src, &raw), &mut cache);
    finish_report(
        src,
        ClosureMethod::ShortcutP,
        raw,
        adjusted,
        achieving,
        cache.len(),
    )
}

/// Both shortcut passes with a shared node cache; each hypothesis takes the
/// larger of its two adjusted p-values. At most `m(m+1)` distinct node
/// evaluations.
pub fn combined_shortcut(src: &impl NodePValues) -> ClosureReport {
    let raw: Vec<f64> = (0..src.len()).map(|i| src.raw_p(i)).collect();
    let mut cache = HashMap::new();
    let (stat_adj, stat_node) = shortcut_pass(src, &order_by_statistic(src), &mut cache);
    let (p_adj, p_node) = shortcut_pass(src, &order_by_raw_p(src, &raw), &mut cache);
    let mut adjusted = Vec::with_capacity(src.len());
    let mut achieving = Vec::with_capacity(src.len());
    for i in 0..src.len() {
        if p_adj[i] > stat_adj[i] {
            adjusted.push(p_adj[i]);
            achieving.push(p_node[i]);
        } else {
            adjusted.push(stat_adj[i]);
            achieving.push(stat_node[i]);
        }
    }
    finish_report(
        src,
        ClosureMethod::Combined,
        raw,
        adjusted,
        achieving,
        cache.len(),
    )
}

/// Run the closure method selected by `method`.
pub fn adjust(src: &impl NodePValues, method: ClosureMethod) -> Result<ClosureReport> {
    match method {
        ClosureMethod::Full => full_closure(src),
        ClosureMethod::ShortcutStat => Ok(shortcut_stat_ordered(src)),
        ClosureMethod::ShortcutP => Ok(shortcut_p_ordered(src)),
        ClosureMethod::Combined => Ok(combined_shortcut(src)),
    }
}

// ---------------------------------------------------------------------------
// Pairwise follow-up within one interval.
// ---------------------------------------------------------------------------

/// A partition of the group indices into equality classes. Intersections of
/// pairwise hypotheses are exactly such partitions: two groups lie in one
/// class when the node asserts their means equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupPartition {
    /// Classes in order of first appearance; each class lists ascending
    /// group indices.
    pub classes: Vec<Vec<usize>>,
}

impl GroupPartition {
    fn from_assignment(assignment: &[usize]) -> Self {
        let class_count = assignment.iter().copied().max().unwrap_or(0) + 1;
        let mut classes = vec![Vec::new(); class_count];
        for (g, &c) in assignment.iter().enumerate() {
            classes[c].push(g);
        }
        Self { classes }
    }

    /// Whether groups `a` and `b` share a class.
    pub fn co_classed(&self, a: usize, b: usize) -> bool {
        self.classes
            .iter()
            .any(|c| c.contains(&a) && c.contains(&b))
    }

    /// Human-readable label: classes of two or more groups, their members
    /// joined by `=`, classes joined by `, `.
    pub fn label(&self, names: &[String]) -> String {
        self.classes
            .iter()
            .filter(|c| c.len() >= 2)
            .map(|c| {
                c.iter()
                    .map(|&g| names[g].as_str())
                    .collect::<Vec<_>>()
                    .join("=")
            })
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// True when this is the single-class partition of all `k` groups.
    pub fn is_top(&self, k: usize) -> bool {
        self.classes.len() == 1 && self.classes[0].len() == k
    }
}

/// All partitions of `{0..k}` holding at least one class of two or more
/// groups, as restricted-growth assignments in lexicographic order. The
/// single-class partition comes first.
pub(crate) fn partitions_with_a_pair(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut a = vec![0usize; k];
    loop {
        let mut counts = vec![0usize; k];
        for &v in &a {
            counts[v] += 1;
        }
        if counts.iter().any(|&c| c >= 2) {
            out.push(a.clone());
        }
        // Advance to the next restricted growth string.
        let mut i = k;
        loop {
            if i <= 1 {
                return out;
            }
            i -= 1;
            let max_prefix = a[..i].iter().copied().max().unwrap_or(0);
            if a[i] <= max_prefix {
                a[i] += 1;
                for v in a[i + 1..].iter_mut() {
                    *v = 0;
                }
                break;
            }
        }
    }
}

/// One intersection node of the pairwise closure tree.
#[derive(Debug, Clone, Serialize)]
pub struct PairwiseNode {
    pub partition: GroupPartition,
    pub statistic: f64,
    pub p: f64,
    /// True for the top node, whose p-value is pinned to the interval-level
    /// adjusted p.
    pub overridden: bool,
}

/// Adjustment of one pairwise hypothesis.
#[derive(Debug, Clone, Serialize)]
pub struct PairAdjustment {
    pub groups: (usize, usize),
    pub statistic: f64,
    pub raw_p: f64,
    pub adjusted_p: f64,
    /// Index into [`PairwiseReport::nodes`] of the node attaining the
    /// adjustment.
    pub achieving_node: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairwiseReport {
    pub interval: usize,
    pub group_names: Vec<String>,
    pub top_p: f64,
    pub nodes: Vec<PairwiseNode>,
    pub pairs: Vec<PairAdjustment>,
}

/// Integrate `f(grid index)` over the inclusive span with the trapezoid
/// rule.
fn integrate_span(grid: &[f64], lo: usize, hi: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut prev = f(lo);
    for j in lo..hi {
        let next = f(j + 1);
        acc += 0.5 * (grid[j + 1] - grid[j]) * (prev + next);
        prev = next;
    }
    acc
}

/// Between-group statistic restricted to the groups of one class, from
/// per-group sums at each grid point.
fn class_statistic(
    sums: &[f64],
    grid: &[f64],
    grid_len: usize,
    span: (usize, usize),
    class: &[usize],
    sizes: &[usize],
) -> f64 {
    let df = (class.len() - 1) as f64;
    let n_class: usize = class.iter().map(|&g| sizes[g]).sum();
    integrate_span(grid, span.0, span.1, |t| {
        let mut total = 0.0;
        let mut acc = 0.0;
        for &g in class {
            let s = sums[g * grid_len + t];
            total += s;
            acc += s * s / sizes[g] as f64;
        }
        acc - total * total / n_class as f64
    }) / df
}

/// Node statistic of a partition: the sum over classes of two or more
/// groups of the class-restricted between-group statistic. This reduces to
/// the plain pair statistic at a bottom node and to the all-group interval
/// statistic at the top.
fn partition_statistic(
    partition: &GroupPartition,
    sums: &[f64],
    grid: &[f64],
    grid_len: usize,
    span: (usize, usize),
    sizes: &[usize],
) -> f64 {
    partition
        .classes
        .iter()
        .filter(|c| c.len() >= 2)
        .map(|c| class_statistic(sums, grid, grid_len, span, c, sizes))
        .sum()
}

/// Pairwise comparison of all group pairs within one interval of the
/// partition.
///
/// The closure tree is built over every partition of the groups with at
/// least one equality class. A node's statistic depends only on the curves
/// of its equality classes, so its null distribution is generated by
/// relabeling curves within each class; groups outside the classes stay
/// fixed, which keeps every node test valid rather than contaminated by
/// groups the node says nothing about. The top node's p-value is pinned to
/// `interval_adjusted_p`. Each pair's adjusted p is the maximum over the
/// nodes placing its two groups in one class, and never falls below the
/// pair's own unadjusted p.
pub fn pairwise_followup(
    ds: &FunctionalDataset,
    partition: &IntervalPartition,
    interval: usize,
    interval_adjusted_p: f64,
    plan: &PermutationPlan,
    rule: PValueRule,
) -> Result<PairwiseReport> {
    if interval >= partition.len() {
        return Err(Error::IntervalOutOfRange {
            index: interval,
            m: partition.len(),
        });
    }
    if !(interval_adjusted_p > 0.0 && interval_adjusted_p <= 1.0) {
        return Err(Error::InvalidPValue(interval_adjusted_p));
    }
    let k = ds.k();
    if k > PAIRWISE_GROUP_CAP {
        return Err(Error::PairwiseCapExceeded {
            groups: k,
            cap: PAIRWISE_GROUP_CAP,
        });
    }
    let span = partition.span(interval);
    let grid = ds.grid();
    let grid_len = grid.len();
    let sizes = ds.group_sizes();

    let node_partitions: Vec<GroupPartition> = partitions_with_a_pair(k)
        .iter()
        .map(|a| GroupPartition::from_assignment(a))
        .collect();

    let observed_sums = group_sums(ds.values(), grid_len, ds.group_of(), k);
    let observed: Vec<f64> = node_partitions
        .iter()
        .map(|p| partition_statistic(p, &observed_sums, grid, grid_len, span, sizes))
        .collect();

    let plan_seed = plan.seed().unwrap_or(0);
    let mut counts = vec![0usize; node_partitions.len()];
    let mut labels = ds.group_of().to_vec();
    for (node, node_partition) in node_partitions.iter().enumerate() {
        // Curve positions of each class with at least two groups.
        let shuffled: Vec<Vec<usize>> = node_partition
            .classes
            .iter()
            .filter(|c| c.len() >= 2)
            .map(|class| {
                (0..ds.n())
                    .filter(|&curve| class.contains(&ds.group_of()[curve]))
                    .collect()
            })
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::permute::derive_seed(
            plan_seed,
            0xbab0 + node as u64,
        ));
        labels.copy_from_slice(ds.group_of());
        for _ in 0..plan.len() {
            for positions in &shuffled {
                for i in (1..positions.len()).rev() {
                    let j = rng.random_range(0..=i);
                    labels.swap(positions[i], positions[j]);
                }
            }
            let sums = group_sums(ds.values(), grid_len, &labels, k);
            let stat = partition_statistic(node_partition, &sums, grid, grid_len, span, sizes);
            if stat >= observed[node] {
                counts[node] += 1;
            }
        }
    }

    let nodes: Vec<PairwiseNode> = node_partitions
        .into_iter()
        .enumerate()
        .map(|(i, partition)| {
            let permutation_p = p_value_from_count(counts[i], plan.len(), rule);
            let overridden = partition.is_top(k);
            PairwiseNode {
                partition,
                statistic: observed[i],
                p: if overridden {
                    interval_adjusted_p
                } else {
                    permutation_p
                },
                overridden,
            }
        })
        .collect();

    let pair_raw = |a: usize, b: usize| -> f64 {
        // The pair's own unadjusted p-value: its node's permutation p,
        // recomputed for the top node when k = 2 (where the pair and the
        // top coincide and the stored p carries the override).
        for (i, node) in nodes.iter().enumerate() {
            if node.partition.classes.iter().any(|c| c == &vec![a, b]) && !node.overridden {
                return node.p;
            }
            if node.overridden && k == 2 {
                return p_value_from_count(counts[i], plan.len(), rule);
            }
        }
        unreachable!("every pair has a node");
    };

    let mut pairs = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            let raw = pair_raw(a, b);
            let mut best = (f64::NEG_INFINITY, 0usize);
            for (i, node) in nodes.iter().enumerate() {
                if node.partition.co_classed(a, b) && node.p > best.0 {
                    best = (node.p, i);
                }
            }
            let (mut adjusted, mut achieving) = best;
            if raw > adjusted {
                adjusted = raw;
                achieving = nodes
                    .iter()
                    .position(|n| n.partition.classes.iter().any(|c| c == &vec![a, b]))
                    .unwrap_or(achieving);
            }
            let statistic = nodes
                .iter()
                .find(|n| n.partition.classes.iter().any(|c| c == &vec![a, b]))
                .map(|n| n.statistic)
                .unwrap_or_else(|| {
                    // k = 2: the only node is the top.
                    nodes[0].statistic
                });
            pairs.push(PairAdjustment {
                groups: (a, b),
                statistic,
                raw_p: raw,
                adjusted_p: adjusted,
                achieving_node: achieving,
            });
        }
    }

    Ok(PairwiseReport {
        interval,
        group_names: ds.group_names().to_vec(),
        top_p: interval_adjusted_p,
        nodes,
        pairs,
    })
}
