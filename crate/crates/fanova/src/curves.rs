//! Discretized curves, smoothed curves and datasets on a common grid.

use std::sync::Arc;

use crate::basis::BSplineBasis;
use crate::error::{Error, Result};

/// One subject's discretized response curve.
#[derive(Debug, Clone)]
pub struct RawCurve {
    subject_id: String,
    group: String,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl RawCurve {
    /// Validates that times are strictly increasing, values are finite and
    /// there are at least four observations (a cubic fit needs that many).
    pub fn new(
        subject_id: impl Into<String>,
        group: impl Into<String>,
        times: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        let group = group.into();
        if times.len() != values.len() {
            return Err(Error::InvalidCurve {
                subject: subject_id,
                msg: format!("{} times but {} values", times.len(), values.len()),
            });
        }
        if times.len() < 4 {
            return Err(Error::InvalidCurve {
                subject: subject_id,
                msg: format!("only {} observations, need at least 4", times.len()),
            });
        }
        for w in times.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidCurve {
                    subject: subject_id,
                    msg: format!("times not strictly increasing ({} then {})", w[0], w[1]),
                });
            }
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve {
                subject: subject_id,
                msg: format!("non-finite value {bad}"),
            });
        }
        Ok(Self {
            subject_id,
            group,
            times,
            values,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn group(&self) -> &str {
        &self.group
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }
}

/// A curve represented by coefficients on a shared B-spline basis.
#[derive(Debug, Clone)]
pub struct SmoothedCurve {
    basis: Arc<BSplineBasis>,
    coefficients: Vec<f64>,
    lambda: f64,
    gcv_score: f64,
}

impl SmoothedCurve {
    pub(crate) fn new(
        basis: Arc<BSplineBasis>,
        coefficients: Vec<f64>,
        lambda: f64,
        gcv_score: f64,
    ) -> Self {
        debug_assert_eq!(coefficients.len(), basis.dimension());
        Self {
            basis,
            coefficients,
            lambda,
            gcv_score,
        }
    }

    pub fn basis(&self) -> &Arc<BSplineBasis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Roughness penalty weight the curve was fitted with.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// GCV score at the fitted lambda; NaN when the fit did not go through
    /// the GCV criterion.
    pub fn gcv_score(&self) -> f64 {
        self.gcv_score
    }

    /// Pointwise basis expansion at a single point.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let row = self.basis.row(t)?;
        Ok(row.iter().zip(&self.coefficients).map(|(b, c)| b * c).sum())
    }

    /// Pointwise basis expansion on a grid of points inside the domain.
    pub fn evaluate(&self, grid: &[f64]) -> Result<Vec<f64>> {
        grid.iter().map(|&t| self.value_at(t)).collect()
    }
}

/// Smoothed curves with group labels, evaluated on one shared grid.
#[derive(Debug, Clone)]
pub struct FunctionalDataset {
    subjects: Vec<String>,
    group_names: Vec<String>,
    group_of: Vec<usize>,
    group_sizes: Vec<usize>,
    grid: Vec<f64>,
    /// Row-major `n x grid.len()` matrix of curve evaluations.
    values: Vec<f64>,
    curves: Vec<SmoothedCurve>,
}

impl FunctionalDataset {
    /// Assemble a dataset from smoothed curves sharing one basis.
    /// Group names are ordered by first appearance.
    pub fn new(curves: Vec<(String, String, SmoothedCurve)>, grid: Vec<f64>) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::InvalidDataset("no curves".into()));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidDataset("grid needs at least 2 points".into()));
        }
        for w in grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidDataset("grid not strictly increasing".into()));
            }
        }
        let basis = curves[0].2.basis().clone();
        for (subject, _, c) in &curves {
            if c.basis().as_ref() != basis.as_ref() {
                return Err(Error::InvalidDataset(format!(
                    "curve '{subject}' uses a different basis"
                )));
            }
        }

        let mut group_names: Vec<String> = Vec::new();
        let mut group_of = Vec::with_capacity(curves.len());
        let mut subjects = Vec::with_capacity(curves.len());
        let mut values = Vec::with_capacity(curves.len() * grid.len());
        let mut smoothed = Vec::with_capacity(curves.len());
        for (subject, group, curve) in curves {
            let gi = match group_names.iter().position(|g| *g == group) {
                Some(i) => i,
                None => {
                    group_names.push(group.clone());
                    group_names.len() - 1
                }
            };
            group_of.push(gi);
            subjects.push(subject);
            values.extend(curve.evaluate(&grid)?);
            smoothed.push(curve);
        }
        if group_names.len() < 2 {
            return Err(Error::TooFewGroups {
                found: group_names.len(),
            });
        }
        let mut group_sizes = vec![0usize; group_names.len()];
        for &g in &group_of {
            group_sizes[g] += 1;
        }

        Ok(Self {
            subjects,
            group_names,
            group_of,
            group_sizes,
            grid,
            values,
            curves: smoothed,
        })
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.subjects.len()
    }

    /// Number of groups.
    pub fn k(&self) -> usize {
        self.group_names.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn group_names(&self) -> &[String] {
        &self.group_names
    }

    /// Group index of each curve, in curve order.
    pub fn group_of(&self) -> &[usize] {
        &self.group_of
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn curves(&self) -> &[SmoothedCurve] {
        &self.curves
    }

    /// Row-major `n x grid.len()` evaluation matrix.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_row(&self, curve: usize) -> &[f64] {
        let g = self.grid.len();
        &self.values[curve * g..(curve + 1) * g]
    }
}

/// Per-group mean curves plus the size-weighted grand mean.
#[derive(Debug, Clone)]
pub struct GroupMeans {
    /// `k` rows of grid-length means, in group order.
    pub group: Vec<Vec<f64>>,
    /// Size-weighted grand mean, equal to the mean over all curves.
    pub grand: Vec<f64>,
}

/// Average the curve evaluations within each group at every grid point.
pub fn group_means(ds: &FunctionalDataset) -> GroupMeans {
    let g = ds.grid().len();
    let k = ds.k();
    let mut sums = vec![0.0; k * g];
    for (curve, &gi) in ds.group_of().iter().enumerate() {
        let row = ds.values_row(curve);
        let acc = &mut sums[gi * g..(gi + 1) * g];
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    let mut grand = vec![0.0; g];
    let mut group = Vec::with_capacity(k);
    for gi in 0..k {
        let size = ds.group_sizes()[gi] as f64;
        let mean: Vec<f64> = sums[gi * g..(gi + 1) * g]
            .iter()
            .map(|s| s / size)
            .collect();
        for (t, m) in mean.iter().enumerate() {
            grand[t] += m * size;
        }
        group.push(mean);
    }
    let n = ds.n() as f64;
    for v in &mut grand {
        *v /= n;
    }
    GroupMeans { group, grand }
}
