//! Synthetic data models and the Monte Carlo power harness.
//!
//! Two deviation shapes are generated around the shared mean `30(1-t)t` on a
//! 101-point grid over `[0, 1]`: a narrow spike confined to one interval
//! (M1) and a drift that grows from the left edge to the right edge of the
//! domain (M2). The last group carries the deviation; all groups receive
//! independent Gaussian noise at every grid point.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::BSplineBasis;
use crate::closure::{combined_shortcut, pairwise_followup, PermutationNodes};
use crate::curves::{FunctionalDataset, RawCurve};
use crate::error::{Error, Result};
use crate::io::write_curves_wide;
use crate::permute::{derive_seed, NullStatMatrix, PValueRule, PermutationPlan};
use crate::smoothing::{
    smooth_dataset, BoundaryRule, GcvSmoother, KnotRule, PenaltyRule, Smoother, SmoothingOptions,
};
use crate::stats::IntervalPartition;

/// Deviation shape of the synthetic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
pub enum Model {
    /// Spike: `-3 beta |sin(16 pi t)|` strictly inside `(0.325, 0.3575)`.
    M1,
    /// Drift: `-beta |sin(pi t / 4)|` over the whole domain.
    M2,
}

/// Default grid of deviation strengths for power curves.
pub const BETA_GRID: [f64; 12] = [
    0.000, 0.045, 0.091, 0.136, 0.182, 0.227, 0.273, 0.318, 0.364, 0.409, 0.455, 0.500,
];

/// Shared mean of the non-deviating groups.
pub fn base_mean(t: f64) -> f64 {
    30.0 * (1.0 - t) * t
}

/// Mean shift of the deviating group.
pub fn deviation(model: Model, beta: f64, t: f64) -> f64 {
    match model {
        Model::M1 => {
            if t > 0.325 && t < 0.3575 {
                -3.0 * beta * (16.0 * std::f64::consts::PI * t).sin().abs()
            } else {
                0.0
            }
        }
        Model::M2 => -beta * (std::f64::consts::PI * t / 4.0).sin().abs(),
    }
}

/// Configuration of one power study.
#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub model: Model,
    /// Number of groups; the last one deviates.
    pub groups: usize,
    pub per_group: usize,
    pub grid_points: usize,
    /// Standard deviation of the pointwise Gaussian noise.
    pub noise_sd: f64,
    /// Number of equal-length intervals.
    pub intervals: usize,
    pub nsim: usize,
    pub permutations: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Run the pairwise follow-up on every flagged interval.
    pub pairwise: bool,
    /// How permutation p-values count the observed statistic.
    pub p_rule: PValueRule,
    pub smoothing: SmoothingOptions,
}

impl SimConfig {
    /// Desk-scale defaults: 200 replicates of 200 permutations each.
    pub fn desk(model: Model) -> Self {
        Self {
            model,
            groups: 3,
            per_group: 5,
            grid_points: 101,
            noise_sd: 0.3,
            intervals: 5,
            nsim: 200,
            permutations: 200,
            seed: 42,
            alpha: 0.05,
            pairwise: false,
            // Power tables count the plain proportion of permuted
            // statistics at or above the observed one.
            p_rule: PValueRule::Proportion,
            // Per-curve GCV: pointwise noise is smoothed away while the
            // deviation shapes survive. Plain GCV (gamma 1) keeps narrow
            // features that the inflated-penalty variant would flatten. An
            // interpolating fit (lambda = 0) is available through
            // `smoothing`.
            smoothing: SmoothingOptions {
                knots: KnotRule::PerObservation,
                degree: 3,
                penalty: PenaltyRule::Gcv { gamma: 1.0 },
                boundary: BoundaryRule::Natural,
            },
        }
    }

    /// Reference scale: 1000 replicates of 1000 permutations.
    pub fn full_scale(model: Model) -> Self {
        Self {
            nsim: 1000,
            permutations: 1000,
            ..Self::desk(model)
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.grid_points)
            .map(|i| i as f64 / (self.grid_points - 1) as f64)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.groups < 2 || self.per_group < 1 || self.grid_points < 4 {
            return Err(Error::InvalidConfig(
                "need at least 2 groups, 1 curve per group and 4 grid points".into(),
            ));
        }
        if self.nsim < 1 || self.permutations < 1 {
            return Err(Error::InvalidConfig(
                "need at least one replicate and one permutation".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha {}", self.alpha)));
        }
        Ok(())
    }
}

/// Group labels used for generated data: "A", "B", "C", ...
pub fn group_label(index: usize) -> String {
    if index < 26 {
        ((b'A' + index as u8) as char).to_string()
    } else {
        format!("G{index}")
    }
}

/// Draw one replicate of raw curves under the model.
pub fn generate_replicate(cfg: &SimConfig, beta: f64, replicate_seed: u64) -> Vec<RawCurve> {
    let grid = cfg.grid();
    let sd = cfg.noise_sd;
    let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed);
    let normal = Normal::new(0.0, sd).expect("valid noise scale");
    let mut curves = Vec::with_capacity(cfg.groups * cfg.per_group);
    for g in 0..cfg.groups {
        let deviating = g == cfg.groups - 1;
        for s in 0..cfg.per_group {
            let values: Vec<f64> = grid
                .iter()
                .map(|&t| {
                    let mut mean = base_mean(t);
                    if deviating {
                        mean += deviation(cfg.model, beta, t);
                    }
                    mean + normal.sample(&mut rng)
                })
                .collect();
            curves.push(
                RawCurve::new(
                    format!("{}{}", group_label(g), s + 1),
                    group_label(g),
                    grid.clone(),
                    values,
                )
                .expect("generated curves are valid"),
            );
        }
    }
    curves
}

/// One row of a power table: the rejection rate of an interval hypothesis
/// or, when `pair` is set, of a pairwise hypothesis within that interval.
#[derive(Debug, Clone, Serialize)]
pub struct PowerRow {
    pub beta: f64,
    /// 1-based interval index.
    pub interval: usize,
    /// Pairwise hypothesis as group labels, e.g. `("A", "C")`.
    pub pair: Option<(String, String)>,
    pub rate: f64,
    pub mc_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerTable {
    pub nsim: usize,
    pub permutations: usize,
    pub rows: Vec<PowerRow>,
}

impl PowerTable {
    /// Interval-level rejection rate.
    pub fn interval_rate(&self, beta: f64, interval: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.beta == beta && r.interval == interval && r.pair.is_none())
            .map(|r| r.rate)
    }

    /// Pairwise rejection rate within an interval.
    pub fn pair_rate(&self, beta: f64, interval: usize, a: &str, b: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.beta == beta
                    && r.interval == interval
                    && r.pair
                        .as_ref()
                        .map(|(x, y)| x == a && y == b)
                        .unwrap_or(false)
            })
            .map(|r| r.rate)
    }

    pub fn to_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "beta,interval,pair,rate,mc_se").map_err(|e| Error::io("<writer>", e))?;
        for r in &self.rows {
            let pair = r
                .pair
                .as_ref()
                .map(|(a, b)| format!("{a}-{b}"))
                .unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{}",
                r.beta, r.interval, pair, r.rate, r.mc_se
            )
            .map_err(|e| Error::io("<writer>", e))?;
        }
        Ok(())
    }
}

struct ReplicateOutcome {
    interval_rejected: Vec<bool>,
    /// Per interval, per pair (lexicographic pair order), only for flagged
    /// intervals.
    pair_rejected: Vec<Vec<bool>>,
}

/// Estimate rejection rates for every interval (and optionally every pair
/// within flagged intervals) across the `betas` list.
pub fn run_power(cfg: &SimConfig, betas: &[f64]) -> Result<PowerTable> {
    cfg.validate()?;
    let grid = cfg.grid();
    let partition = IntervalPartition::equal_lengths(&grid, cfg.intervals)?;

    // Every replicate shares one basis and one time grid, so the solve
    // operators are built once up front.
    enum Shared {
        Fixed(Smoother),
        Gcv(GcvSmoother, f64),
        None,
    }
    let shared = match (&cfg.smoothing.knots, &cfg.smoothing.penalty) {
        (KnotRule::PerObservation, penalty) => {
            let basis = Arc::new(BSplineBasis::new(
                (grid[0], *grid.last().unwrap()),
                &grid,
                cfg.smoothing.degree,
            )?);
            match penalty {
                PenaltyRule::Fixed(lambda) => Shared::Fixed(Smoother::with_boundary(
                    basis,
                    &grid,
                    *lambda,
                    cfg.smoothing.boundary,
                )?),
                PenaltyRule::Gcv { gamma } => Shared::Gcv(
                    GcvSmoother::with_boundary(basis, &grid, cfg.smoothing.boundary)?,
                    *gamma,
                ),
            }
        }
        _ => Shared::None,
    };

    let k = cfg.groups;
    let pair_count = k * (k - 1) / 2;
    let mut rows = Vec::new();

    for &beta in betas {
        let beta_seed = derive_seed(cfg.seed, beta.to_bits());
        let outcomes: Result<Vec<ReplicateOutcome>> = (0..cfg.nsim)
            .into_par_iter()
            .map(|rep| {
                let rep_seed = derive_seed(beta_seed, rep as u64);
                let raws = generate_replicate(cfg, beta, rep_seed);
                let ds = match &shared {
                    Shared::None => smooth_dataset(&raws, &cfg.smoothing)?,
                    shared => {
                        let fitted: Result<Vec<_>> = raws
                            .iter()
                            .map(|raw| {
                                let curve = match shared {
                                    Shared::Fixed(s) => s.fit(raw.values())?,
                                    Shared::Gcv(s, gamma) => {
                                        s.select_and_fit(raw.values(), *gamma)?
                                    }
                                    Shared::None => unreachable!(),
                                };
                                Ok((raw.subject_id().to_string(), raw.group().to_string(), curve))
                            })
                            .collect();
                        FunctionalDataset::new(fitted?, grid.clone())?
                    }
                };
                let plan = PermutationPlan::random(
                    derive_seed(rep_seed, 0x706c616e),
                    cfg.permutations,
                    ds.group_of(),
                )?;
                let nulls = NullStatMatrix::compute(&ds, &partition, &plan)?;
                let src = PermutationNodes::new(&nulls, cfg.p_rule);
                let report = combined_shortcut(&src);
                let interval_rejected = report.rejected_at(cfg.alpha);

                let mut pair_rejected = vec![vec![false; pair_count]; cfg.intervals];
                if cfg.pairwise {
                    for (i, h) in report.hypotheses.iter().enumerate() {
                        if h.adjusted_p <= cfg.alpha {
                            let pw = pairwise_followup(
                                &ds,
                                &partition,
                                i,
                                h.adjusted_p.max(f64::MIN_POSITIVE),
                                &plan,
                                cfg.p_rule,
                            )?;
                            for (slot, pair) in pair_rejected[i].iter_mut().zip(&pw.pairs) {
                                *slot = pair.adjusted_p <= cfg.alpha;
                            }
                        }
                    }
                }
                Ok(ReplicateOutcome {
                    interval_rejected,
                    pair_rejected,
                })
            })
            .collect();
        let outcomes = outcomes?;

        let nsim = cfg.nsim as f64;
        let se = |rate: f64| (rate * (1.0 - rate) / nsim).sqrt();
        for i in 0..cfg.intervals {
            let count = outcomes.iter().filter(|o| o.interval_rejected[i]).count();
            let rate = count as f64 / nsim;
            rows.push(PowerRow {
                beta,
                interval: i + 1,
                pair: None,
                rate,
                mc_se: se(rate),
            });
        }
        if cfg.pairwise {
            for i in 0..cfg.intervals {
                let mut slot = 0;
                for a in 0..k {
                    for b in (a + 1)..k {
                        let count = outcomes.iter().filter(|o| o.pair_rejected[i][slot]).count();
                        let rate = count as f64 / nsim;
                        rows.push(PowerRow {
                            beta,
                            interval: i + 1,
                            pair: Some((group_label(a), group_label(b))),
                            rate,
                            mc_se: se(rate),
                        });
                        slot += 1;
                    }
                }
            }
        }
    }

    Ok(PowerTable {
        nsim: cfg.nsim,
        permutations: cfg.permutations,
        rows,
    })
}

// ---------------------------------------------------------------------------
// Bundled demo data.
// ---------------------------------------------------------------------------

/// Seed of the bundled demo files.
pub const DEMO_SEED: u64 = 424242;

const DEMO_GROUPS: [&str; 4] = ["control", "low", "medium", "high"];

/// Time (in seconds) before any hemolysis, shared by every demo curve.
const DEMO_LAG: f64 = 60.0;

/// A lagged logistic hemolysis curve on top of a per-subject measurement
/// baseline: a small offset plus a slow drift, then a monotone rise toward
/// the plateau once the lag has passed.
fn demo_value(t: f64, mid: f64, width: f64, cap: f64, offset: f64, drift: f64) -> f64 {
    let baseline = offset + drift * t / 720.0;
    if t <= DEMO_LAG {
        return baseline;
    }
    let s = t - DEMO_LAG;
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    let raw = sig((s - mid) / width);
    let at_zero = sig(-mid / width);
    baseline + cap * (raw - at_zero) / (1.0 - at_zero)
}

/// Generate the bundled demo datasets: three incubation runs of four dosage
/// groups with five subjects each, measured every 15 seconds for 12 minutes.
/// The first two runs separate the groups after the lag; the last run has no
/// group effect. Baselines are independent of dosage, so the lag period
/// carries no group signal.
pub fn demo_erythrograms(seed: u64) -> Vec<(String, Vec<RawCurve>)> {
    let times: Vec<f64> = (0..49).map(|i| 15.0 * i as f64).collect();
    // Per group: logistic midpoint (seconds after the lag) and plateau
    // level. Dosage speeds up hemolysis and lyses a larger share of cells.
    let configs: [(&str, [f64; 4], [f64; 4]); 3] = [
        (
            "erythrograms_15min",
            [240.0, 208.0, 180.0, 156.0],
            [88.0, 91.0, 94.0, 97.0],
        ),
        (
            "erythrograms_30min",
            [228.0, 198.0, 172.0, 150.0],
            [87.5, 90.5, 93.5, 96.5],
        ),
        (
            "erythrograms_240min",
            [190.0, 190.0, 190.0, 190.0],
            [92.0, 92.0, 92.0, 92.0],
        ),
    ];
    let mut out = Vec::new();
    for (file_index, (name, mids, caps)) in configs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, file_index as u64));
        let mut curves = Vec::new();
        for (g, group) in DEMO_GROUPS.iter().enumerate() {
            for s in 0..5 {
                let mid = mids[g] + rng.random_range(-6.0..6.0);
                let width = 45.0 * (1.0 + rng.random_range(-0.05..0.05));
                let offset = rng.random_range(0.05..0.95);
                let drift = rng.random_range(0.2..2.4);
                let values: Vec<f64> = times
                    .iter()
                    .map(|&t| demo_value(t, mid, width, caps[g], offset, drift))
                    .collect();
                curves.push(
                    RawCurve::new(format!("{group}_{}", s + 1), *group, times.clone(), values)
                        .expect("demo curves are valid"),
                );
            }
        }
        out.push((name.to_string(), curves));
    }
    out
}

/// Write the demo datasets as wide CSV files under `dir`.
pub fn write_demo_erythrograms(dir: impl AsRef<Path>, seed: u64) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for (name, curves) in demo_erythrograms(seed) {
        let path = dir.join(format!("{name}.csv"));
        let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_curves_wide(&curves, file)?;
        paths.push(path);
    }
    Ok(paths)
}
