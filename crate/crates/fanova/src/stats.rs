//! Interval-restricted statistics for comparing groups of curves.
//!
//! All statistics are computed from curve evaluations on the dataset grid,
//! with integrals realized by the trapezoid rule. The between-group
//! statistic for an interval is
//!
//! ```text
//! T_i = integral over [a_i, b_i] of sum_j n_j (mean_j(t) - mean(t))^2 dt / (k - 1)
//! ```
//!
//! `T_i` is additive across a partition: summing it over all intervals gives
//! the whole-domain statistic, which is what makes intersection hypotheses
//! cheap to evaluate from per-interval values.

use serde::{Deserialize, Serialize};

use crate::curves::FunctionalDataset;
use crate::error::{Error, Result};

/// An interval given in data units, used to build a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedInterval {
    pub name: String,
    pub a: f64,
    pub b: f64,
}

/// One interval of a partition, with endpoints snapped to the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub name: String,
    pub a: f64,
    pub b: f64,
}

/// `m` mutually exclusive, exhaustive subintervals of the grid domain.
///
/// Each interval holds at least two grid points; consecutive intervals share
/// their boundary point, and integration assigns each grid segment to
/// exactly one interval, so the trapezoid rule is additive across the
/// partition by construction.
#[derive(Debug, Clone)]
pub struct IntervalPartition {
    intervals: Vec<Interval>,
    /// Inclusive grid index range per interval.
    spans: Vec<(usize, usize)>,
    domain: (f64, f64),
}

impl IntervalPartition {
    /// Split the grid into `m` intervals of (nearly) equal point count, with
    /// boundaries at quantiles of the grid index.
    pub fn equal_lengths(grid: &[f64], m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidPartition("need at least one interval".into()));
        }
        if grid.len() < m + 1 {
            return Err(Error::InvalidPartition(format!(
                "{} grid points cannot form {m} intervals",
                grid.len()
            )));
        }
        let last = grid.len() - 1;
        let mut spans = Vec::with_capacity(m);
        let mut intervals = Vec::with_capacity(m);
        for i in 0..m {
            let lo = i * last / m;
            let hi = (i + 1) * last / m;
            if hi <= lo {
                return Err(Error::EmptyInterval {
                    a: grid[lo],
                    b: grid[hi],
                });
            }
            spans.push((lo, hi));
            intervals.push(Interval {
                name: format!("interval_{}", i + 1),
                a: grid[lo],
                b: grid[hi],
            });
        }
        Ok(Self {
            intervals,
            spans,
            domain: (grid[0], grid[last]),
        })
    }

    /// Build a partition from named intervals in data units. Endpoints are
    /// snapped to the nearest grid point; a warning is returned for every
    /// snap larger than one grid step. The snapped intervals must tile the
    /// whole domain.
    pub fn from_named(grid: &[f64], named: &[NamedInterval]) -> Result<(Self, Vec<String>)> {
        if named.is_empty() {
            return Err(Error::InvalidPartition("need at least one interval".into()));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidPartition(
                "grid needs at least 2 points".into(),
            ));
        }
        let mut warnings = Vec::new();
        let last = grid.len() - 1;
        let mut snap = |x: f64, name: &str| -> usize {
            let mut best = 0usize;
            let mut dist = f64::INFINITY;
            for (i, &t) in grid.iter().enumerate() {
                let d = (t - x).abs();
                if d < dist {
                    dist = d;
                    best = i;
                }
            }
            let step = if best == 0 {
                grid[1] - grid[0]
            } else {
                grid[best] - grid[best - 1]
            };
            if dist > step {
                warnings.push(format!(
                    "interval '{name}': endpoint {x} snapped to grid point {} ({} grid steps away)",
                    grid[best],
                    (dist / step).ceil()
                ));
            }
            best
        };

        let mut spans: Vec<(usize, usize)> = Vec::with_capacity(named.len());
        let mut intervals = Vec::with_capacity(named.len());
        for (idx, ni) in named.iter().enumerate() {
            let lo = snap(ni.a, &ni.name);
            let hi = snap(ni.b, &ni.name);
            if hi <= lo {
                return Err(Error::EmptyInterval { a: ni.a, b: ni.b });
            }
            if idx == 0 && lo != 0 {
                return Err(Error::InvalidPartition(format!(
                    "first interval '{}' starts at {} rather than the domain start {}",
                    ni.name, grid[lo], grid[0]
                )));
            }
            if idx > 0 && spans[idx - 1].1 != lo {
                return Err(Error::InvalidPartition(format!(
                    "interval '{}' does not start where the previous one ends",
                    ni.name
                )));
            }
            if idx == named.len() - 1 && hi != last {
                return Err(Error::InvalidPartition(format!(
                    "last interval '{}' ends at {} rather than the domain end {}",
                    ni.name, grid[hi], grid[last]
                )));
            }
            spans.push((lo, hi));
            intervals.push(Interval {
                name: ni.name.clone(),
                a: grid[lo],
                b: grid[hi],
            });
        }
        Ok((
            Self {
                intervals,
                spans,
                domain: (grid[0], grid[last]),
            },
            warnings,
        ))
    }

    /// A single interval covering the whole grid.
    pub fn whole_domain(grid: &[f64]) -> Result<Self> {
        Self::equal_lengths(grid, 1)
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Inclusive grid index range of interval `i`.
    pub fn span(&self, i: usize) -> (usize, usize) {
        self.spans[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.intervals.iter().position(|iv| iv.name == name)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::IntervalOutOfRange {
                index: i,
                m: self.len(),
            });
        }
        Ok(())
    }
}

/// Trapezoid rule over the inclusive grid index range `[lo, hi]`.
pub fn trapezoid(grid: &[f64], values: &[f64], lo: usize, hi: usize) -> Result<f64> {
    if hi <= lo || hi >= grid.len() {
        return Err(Error::EmptyInterval {
            a: grid.get(lo).copied().unwrap_or(f64::NAN),
            b: grid.get(hi).copied().unwrap_or(f64::NAN),
        });
    }
    let mut acc = 0.0;
    for j in lo..hi {
        acc += 0.5 * (grid[j + 1] - grid[j]) * (values[j] + values[j + 1]);
    }
    Ok(acc)
}

/// Integrate grid values over one interval of the partition.
pub fn integrate(
    grid: &[f64],
    values: &[f64],
    partition: &IntervalPartition,
    interval: usize,
) -> Result<f64> {
    partition.check_index(interval)?;
    let (lo, hi) = partition.span(interval);
    trapezoid(grid, values, lo, hi)
}

/// Per-group sums of the curve values at every grid point, for an arbitrary
/// labeling: a row-major `k x grid_len` matrix.
pub(crate) fn group_sums(values: &[f64], grid_len: usize, labels: &[usize], k: usize) -> Vec<f64> {
    let mut sums = vec![0.0; k * grid_len];
    for (curve, &g) in labels.iter().enumerate() {
        let row = &values[curve * grid_len..(curve + 1) * grid_len];
        let acc = &mut sums[g * grid_len..(g + 1) * grid_len];
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    sums
}

/// Per-grid-point between-group sum of squares,
/// `sum_j n_j (mean_j(t) - mean(t))^2`, computed from group sums as
/// `sum_j S_j(t)^2 / n_j - S(t)^2 / n`.
pub(crate) fn between_group_numerator(
    values: &[f64],
    grid_len: usize,
    labels: &[usize],
    group_sizes: &[usize],
) -> Vec<f64> {
    let k = group_sizes.len();
    let sums = group_sums(values, grid_len, labels, k);
    let n: usize = group_sizes.iter().sum();
    let mut out = vec![0.0; grid_len];
    for t in 0..grid_len {
        let mut total = 0.0;
        let mut acc = 0.0;
        for g in 0..k {
            let s = sums[g * grid_len + t];
            total += s;
            acc += s * s / group_sizes[g] as f64;
        }
        out[t] = acc - total * total / n as f64;
    }
    out
}

/// All `m` between-group statistics for one labeling, sharing a single
/// pass over the curves.
pub(crate) fn t_statistics_for_labels(
    values: &[f64],
    grid: &[f64],
    partition: &IntervalPartition,
    labels: &[usize],
    group_sizes: &[usize],
) -> Vec<f64> {
    let numerator = between_group_numerator(values, grid.len(), labels, group_sizes);
    let df = (group_sizes.len() - 1) as f64;
    (0..partition.len())
        .map(|i| {
            let (lo, hi) = partition.span(i);
            trapezoid(grid, &numerator, lo, hi).expect("partition spans are valid") / df
        })
        .collect()
}

/// Between-group statistic `T_i` on one interval.
pub fn interval_t(
    ds: &FunctionalDataset,
    partition: &IntervalPartition,
    interval: usize,
) -> Result<f64> {
    partition.check_index(interval)?;
    Ok(interval_t_all(ds, partition)[interval])
}

/// Between-group statistics for every interval of the partition.
pub fn interval_t_all(ds: &FunctionalDataset, partition: &IntervalPartition) -> Vec<f64> {
    t_statistics_for_labels(
        ds.values(),
        ds.grid(),
        partition,
        ds.group_of(),
        ds.group_sizes(),
    )
}

/// Full variance-ratio statistic on one interval: the between-group
/// statistic over the integrated within-group variability
/// `integral sum_j sum_{s in group j} (y_s - mean_j)^2 dt / (n - k)`.
/// The inner sum runs over the curves of each group.
pub fn functional_f(
    ds: &FunctionalDataset,
    partition: &IntervalPartition,
    interval: usize,
) -> Result<f64> {
    partition.check_index(interval)?;
    let n = ds.n();
    let k = ds.k();
    if n <= k {
        return Err(Error::InvalidDataset(format!(
            "need more curves ({n}) than groups ({k}) for the F denominator"
        )));
    }
    let g = ds.grid().len();
    let numerator = interval_t(ds, partition, interval)?;

    // Within-group sum of squares per grid point:
    // sum_s y_s^2 - sum_j S_j^2 / n_j.
    let mut sums = vec![0.0; k * g];
    let mut square_total = vec![0.0; g];
    for (curve, &gi) in ds.group_of().iter().enumerate() {
        let row = ds.values_row(curve);
        for t in 0..g {
            sums[gi * g + t] += row[t];
            square_total[t] += row[t] * row[t];
        }
    }
    let mut within = vec![0.0; g];
    for t in 0..g {
        let mut acc = square_total[t];
        for gi in 0..k {
            let s = sums[gi * g + t];
            acc -= s * s / ds.group_sizes()[gi] as f64;
        }
        within[t] = acc;
    }
    let (lo, hi) = partition.span(interval);
    let denominator = trapezoid(ds.grid(), &within, lo, hi)? / (n - k) as f64;
    if denominator <= 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(numerator / denominator)
}

/// Pairwise distance statistic on one interval:
/// `sum_{i < j} n_i ||mean_i - mean_j||^2` with the squared L2 norm taken
/// over the interval.
pub fn vn_stat(
    ds: &FunctionalDataset,
    partition: &IntervalPartition,
    interval: usize,
) -> Result<f64> {
    partition.check_index(interval)?;
    let means = crate::curves::group_means(ds);
    let g = ds.grid().len();
    let k = ds.k();
    let (lo, hi) = partition.span(interval);
    let mut acc = 0.0;
    for i in 0..k {
        for j in (i + 1)..k {
            let diff_sq: Vec<f64> = (0..g)
                .map(|t| {
                    let d = means.group[i][t] - means.group[j][t];
                    d * d
                })
                .collect();
            acc += ds.group_sizes()[i] as f64 * trapezoid(ds.grid(), &diff_sq, lo, hi)?;
        }
    }
    Ok(acc)
}

/// Summary of the statistics on one interval.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalStat {
    pub interval: usize,
    pub t: f64,
    pub df_num: usize,
    pub f: Option<f64>,
    pub vn: Option<f64>,
}

/// Compute `T_i` for every interval, plus `F_i` and `V_n,i` where defined.
pub fn interval_stats(ds: &FunctionalDataset, partition: &IntervalPartition) -> Vec<IntervalStat> {
    let ts = interval_t_all(ds, partition);
    ts.into_iter()
        .enumerate()
        .map(|(i, t)| IntervalStat {
            interval: i,
            t,
            df_num: ds.k() - 1,
            f: functional_f(ds, partition, i).ok(),
            vn: vn_stat(ds, partition, i).ok(),
        })
        .collect()
}

/// Sum-combined statistic for a subset of intervals. Members are summed in
/// ascending index order so that every caller produces bit-identical values
/// for the same subset.
pub fn combine_sum(stats: &[f64], members: &[usize]) -> f64 {
    let mut sorted: Vec<usize> = members.to_vec();
    sorted.sort_unstable();
    sorted.iter().map(|&i| stats[i]).sum()
}
