//! Reproducible group-label permutations and the shared null matrix.
//!
//! One plan of `B` relabelings is drawn up front from a seeded generator and
//! reused for every hypothesis: the `B x m` matrix of per-interval
//! statistics under those relabelings supplies the null distribution of any
//! intersection statistic through row sums, so no node ever needs its own
//! permutation draw.

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curves::FunctionalDataset;
use crate::error::{Error, Result};
use crate::stats::{t_statistics_for_labels, IntervalPartition};

/// How a permutation p-value counts the observed statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PValueRule {
    /// `(1 + #{b : T_b >= T_obs}) / (B + 1)`: the observed labeling counts
    /// as one more draw, so p is never zero.
    AddOne,
    /// Plain proportion `#{b : T_b >= T_obs} / B`; the right choice when the
    /// rows enumerate every distinct labeling (the observed one included).
    Proportion,
}

/// Convert a count of null statistics at least as large as the observed one
/// into a p-value.
pub fn p_value_from_count(count: usize, total: usize, rule: PValueRule) -> f64 {
    match rule {
        PValueRule::AddOne => (1 + count) as f64 / (total + 1) as f64,
        PValueRule::Proportion => count as f64 / total as f64,
    }
}

/// Permutation p-value of `observed` against a slice of null statistics.
/// Ties count as at least as extreme.
pub fn p_value(observed: f64, nulls: &[f64], rule: PValueRule) -> f64 {
    let count = nulls.iter().filter(|&&v| v >= observed).count();
    p_value_from_count(count, nulls.len(), rule)
}

/// A reproducible batch of group-label permutations.
#[derive(Debug, Clone)]
pub struct PermutationPlan {
    rows: Vec<Vec<usize>>,
    exhaustive: bool,
    seed: Option<u64>,
}

/// Cap on exhaustive enumeration.
const EXHAUSTIVE_CAP: u128 = 200_000;

impl PermutationPlan {
    /// Draw `count` independent uniform permutations of `labels` with a
    /// Fisher-Yates shuffle seeded by `seed`. The stream is a pure function
    /// of `(seed, count, labels)`.
    pub fn random(seed: u64, count: usize, labels: &[usize]) -> Result<Self> {
        Self::random_inner(seed, count, labels, false)
    }

    /// Like [`PermutationPlan::random`], but row 0 is the identity labeling.
    pub fn random_with_identity(seed: u64, count: usize, labels: &[usize]) -> Result<Self> {
        Self::random_inner(seed, count, labels, true)
    }

    fn random_inner(
        seed: u64,
        count: usize,
        labels: &[usize],
        identity_first: bool,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyPlan);
        }
        check_two_groups(labels)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(count);
        if identity_first {
            rows.push(labels.to_vec());
        }
        while rows.len() < count {
            let mut row = labels.to_vec();
            for i in (1..row.len()).rev() {
                let j = rng.random_range(0..=i);
                row.swap(i, j);
            }
            rows.push(row);
        }
        Ok(Self {
            rows,
            exhaustive: false,
            seed: Some(seed),
        })
    }

    /// Enumerate every distinct rearrangement of `labels` (the identity
    /// among them), in lexicographic order.
    pub fn exhaustive(labels: &[usize]) -> Result<Self> {
        check_two_groups(labels)?;
        let count = multiset_permutation_count(labels);
        if count > EXHAUSTIVE_CAP {
            return Err(Error::TooManyLabelings {
                count,
                cap: EXHAUSTIVE_CAP,
            });
        }
        let mut current = labels.to_vec();
        current.sort_unstable();
        let mut rows = vec![current.clone()];
        while next_permutation(&mut current) {
            rows.push(current.clone());
        }
        Ok(Self {
            rows,
            exhaustive: true,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    /// Seed the plan was drawn from; `None` for exhaustive plans.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// The p-value rule matching how the plan was built.
    pub fn suggested_rule(&self) -> PValueRule {
        if self.exhaustive {
            PValueRule::Proportion
        } else {
            PValueRule::AddOne
        }
    }
}

fn check_two_groups(labels: &[usize]) -> Result<()> {
    let first = labels.first().ok_or(Error::SingleGroup)?;
    if labels.iter().all(|l| l == first) {
        return Err(Error::SingleGroup);
    }
    Ok(())
}

fn multiset_permutation_count(labels: &[usize]) -> u128 {
    let mut counts = std::collections::BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0u128) += 1;
    }
    let mut total: u128 = 1;
    let mut used = 0u128;
    // Product of binomial coefficients C(used + c, c), computed factor by
    // factor to stay inside u128 for realistic sizes.
    for &c in counts.values() {
        for i in 1..=c {
            used += 1;
            total = total.saturating_mul(used) / i;
        }
    }
    total
}

/// Lexicographic next multiset permutation; false once the sequence wraps.
fn next_permutation(row: &mut [usize]) -> bool {
    if row.len() < 2 {
        return false;
    }
    let mut i = row.len() - 1;
    while i > 0 && row[i - 1] >= row[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = row.len() - 1;
    while row[j] <= row[i - 1] {
        j -= 1;
    }
    row.swap(i - 1, j);
    row[i..].reverse();
    true
}

/// Per-interval statistics under every relabeling of a plan, plus the
/// observed statistics.
#[derive(Debug, Clone)]
pub struct NullStatMatrix {
    /// Row-major `B x m`.
    stats: Vec<f64>,
    observed: Vec<f64>,
    m: usize,
}

impl NullStatMatrix {
    /// Evaluate all interval statistics for every row of the plan. Rows are
    /// independent, so they are computed in parallel; the result does not
    /// depend on scheduling.
    pub fn compute(
        ds: &FunctionalDataset,
        partition: &IntervalPartition,
        plan: &PermutationPlan,
    ) -> Result<Self> {
        let observed = t_statistics_for_labels(
            ds.values(),
            ds.grid(),
            partition,
            ds.group_of(),
            ds.group_sizes(),
        );
        let m = partition.len();
        let rows: Vec<Vec<f64>> = plan
            .rows()
            .par_iter()
            .map(|labels| {
                t_statistics_for_labels(ds.values(), ds.grid(), partition, labels, ds.group_sizes())
            })
            .collect();
        let mut stats = Vec::with_capacity(plan.len() * m);
        for row in rows {
            stats.extend(row);
        }
        Ok(Self { stats, observed, m })
    }

    /// Number of permutation rows.
    pub fn b(&self) -> usize {
        if self.m == 0 {
            0
        } else {
            self.stats.len() / self.m
        }
    }

    /// Number of intervals.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.stats[b * self.m..(b + 1) * self.m]
    }

    /// Observed statistic of the intersection over `members` (ascending
    /// index order, so sums are bit-identical across callers).
    pub fn observed_sum(&self, members: &[usize]) -> f64 {
        crate::stats::combine_sum(&self.observed, members)
    }

    /// Permutation p-value of the intersection statistic over `members`
    /// from row sums of the matrix.
    pub fn subset_p_value(&self, members: &[usize], rule: PValueRule) -> f64 {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        let observed = self.observed_sum(&sorted);
        let b = self.b();
        let mut count = 0usize;
        for row in 0..b {
            let vals = self.row(row);
            let sum: f64 = sorted.iter().map(|&i| vals[i]).sum();
            if sum >= observed {
                count += 1;
            }
        }
        p_value_from_count(count, b, rule)
    }

    /// Write the matrix as CSV for audit: an `observed` row followed by one
    /// row per permutation.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("row".to_string())
            .chain((1..=self.m).map(|i| format!("T_{i}")))
            .collect();
        let write_line = |w: &mut W, name: &str, vals: &[f64]| -> std::io::Result<()> {
            write!(w, "{name}")?;
            for v in vals {
                write!(w, ",{v}")?;
            }
            writeln!(w)
        };
        writeln!(w, "{}", header.join(",")).map_err(|e| Error::io("<writer>", e))?;
        write_line(&mut w, "observed", &self.observed).map_err(|e| Error::io("<writer>", e))?;
        for b in 0..self.b() {
            write_line(&mut w, &format!("perm_{:04}", b + 1), self.row(b))
                .map_err(|e| Error::io("<writer>", e))?;
        }
        Ok(())
    }
}

/// Derive a child seed for an indexed stream of work, so parallel units get
/// decorrelated but fully reproducible generators.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    // SplitMix64 finalizer over the combined value.
    let mut z = base ^ stream.wrapping_mul(0x9E3779B97F4A7C15);
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
