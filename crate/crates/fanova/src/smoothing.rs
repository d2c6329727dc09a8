//! Penalized least squares smoothing with a curvature penalty.
//!
//! A curve is fitted by minimizing `sum (y - f)^2 + lambda * integral f''^2`
//! over the span of a shared B-spline basis. With `lambda = 0` and a basis
//! dimension above the number of observations, the fit is the interpolant of
//! minimal curvature. The penalty weight can be chosen per curve by
//! generalized cross-validation on a fixed logarithmic grid.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::BSplineBasis;
use crate::curves::{FunctionalDataset, RawCurve, SmoothedCurve};
use crate::error::{Error, Result};

/// Number of points on the lambda search grid.
const LAMBDA_GRID_POINTS: usize = 41;
/// The grid spans `1e-8 * scale ..= 1e4 * scale` on a log axis.
const LAMBDA_LOG_MIN: f64 = -8.0;
const LAMBDA_LOG_MAX: f64 = 4.0;

/// Default GCV penalty multiplier applied to the effective degrees of
/// freedom.
pub const DEFAULT_GCV_GAMMA: f64 = 1.4;

/// Precomputed solve operator for one (basis, times, lambda) triple.
///
/// Fitting a curve is then a single matrix-vector product, so many curves
/// observed at the same times can be fitted cheaply and in parallel.
#[derive(Debug, Clone)]
pub struct Smoother {
    basis: Arc<BSplineBasis>,
    design: DMatrix<f64>,
    /// Maps observed values to basis coefficients.
    op: DMatrix<f64>,
    edf: f64,
    lambda: f64,
    points: usize,
}

/// Boundary behavior of a penalized fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BoundaryRule {
    /// Unconstrained clamped B-spline fit.
    Free,
    /// Natural spline: zero second derivative at both domain endpoints.
    /// Removes the inflated fit variance near the edges.
    Natural,
}

/// Orthonormal basis of the coefficient subspace with zero second
/// derivative at both domain endpoints, or `None` when the constraint is
/// vacuous (degree below two).
fn natural_reduction(basis: &BSplineBasis) -> Option<DMatrix<f64>> {
    if basis.degree() < 2 {
        return None;
    }
    let (a, b) = basis.domain();
    let k = basis.dimension();
    let ca = basis.second_derivative_row(a).ok()?;
    let cb = basis.second_derivative_row(b).ok()?;
    let mut ctc = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            ctc[(i, j)] = ca[i] * ca[j] + cb[i] * cb[j];
        }
    }
    let eig = ctc.symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(max_eig > 0.0) {
        return None;
    }
    let tol = 1e-10 * max_eig;
    let cols: Vec<usize> = (0..k).filter(|&i| eig.eigenvalues[i] <= tol).collect();
    let mut z = DMatrix::zeros(k, cols.len());
    for (slot, &i) in cols.iter().enumerate() {
        z.column_mut(slot).copy_from(&eig.eigenvectors.column(i));
    }
    Some(z)
}

/// Symmetric square root of the curvature penalty, so that the penalized
/// problem can be solved as plain least squares on a stacked matrix.
fn penalty_root(penalty: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = penalty.clone().symmetric_eigen();
    let k = penalty.nrows();
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = 1e-12 * max_eig;
    let mut root = DMatrix::zeros(k, k);
    for i in 0..k {
        // Eigenvalues of the null space (constant and linear functions) come
        // out as rounding noise; flush them to exactly zero so those shapes
        // stay unpenalized at any lambda.
        let v = eig.eigenvalues[i];
        let scale = if v > floor { v.sqrt() } else { 0.0 };
        for j in 0..k {
            root[(i, j)] = scale * eig.eigenvectors[(j, i)];
        }
    }
    root
}

impl Smoother {
    pub fn new(basis: Arc<BSplineBasis>, times: &[f64], lambda: f64) -> Result<Self> {
        Self::with_boundary(basis, times, lambda, BoundaryRule::Free)
    }

    pub fn with_boundary(
        basis: Arc<BSplineBasis>,
        times: &[f64],
        lambda: f64,
        boundary: BoundaryRule,
    ) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidPenalty(format!("lambda {lambda}")));
        }
        let design = basis.design_matrix(times)?;
        let penalty = basis.curvature_penalty();
        let reduction = match boundary {
            BoundaryRule::Free => None,
            BoundaryRule::Natural => natural_reduction(&basis),
        };
        let (design_r, penalty_r) = match &reduction {
            Some(z) => (&design * z, z.transpose() * &penalty * z),
            None => (design.clone(), penalty),
        };
        let root = penalty_root(&penalty_r);
        Self::from_parts(
            basis,
            design,
            design_r,
            &penalty_r,
            &root,
            reduction,
            lambda,
            times.len(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn from_parts(
        basis: Arc<BSplineBasis>,
        full_design: DMatrix<f64>,
        design: DMatrix<f64>,
        penalty: &DMatrix<f64>,
        penalty_root: &DMatrix<f64>,
        reduction: Option<DMatrix<f64>>,
        lambda: f64,
        points: usize,
    ) -> Result<Self> {
        let k = design.ncols();
        let singular = || Error::SingularFit {
            dimension: basis.dimension(),
            degree: basis.degree(),
            knots: basis.interior_knots().len() + 2,
            points,
        };

        let (op, edf) = if lambda > 0.0 || k <= points {
            // Least squares on the design stacked over sqrt(lambda) times the
            // penalty root; QR keeps the conditioning of the unsquared
            // problem even for very heavy penalties.
            let rows = if lambda > 0.0 { points + k } else { points };
            let mut stacked = DMatrix::zeros(rows, k);
            stacked.view_mut((0, 0), (points, k)).copy_from(&design);
            if lambda > 0.0 {
                stacked
                    .view_mut((points, 0), (k, k))
                    .copy_from(&(penalty_root * lambda.sqrt()));
            }
            let qr = stacked.qr();
            let q = qr.q();
            let r = qr.r();
            let max_diag = r.diagonal().amax();
            if !(max_diag > 0.0) || r.diagonal().iter().any(|d| d.abs() < 1e-12 * max_diag) {
                return Err(singular());
            }
            let q1t = q.rows(0, points).transpose();
            let op = r.solve_upper_triangular(&q1t).ok_or_else(singular)?;
            let edf = if lambda > 0.0 {
                // trace of the hat matrix: || R^-T N^T ||_F^2.
                let half = r
                    .transpose()
                    .solve_lower_triangular(&design.transpose())
                    .ok_or_else(singular)?;
                half.iter().map(|v| v * v).sum()
            } else {
                k as f64
            };
            (op, edf)
        } else {
            // Underdetermined interpolation: among exact fits, take the one
            // of least curvature (the lambda -> 0 limit) via the stationarity
            // system [P N'; N 0] [c; w] = [0; y]. Scaling the penalty block
            // to unit size rescales the multipliers only and keeps the
            // system well balanced.
            let scale = penalty.amax().max(1.0);
            let sz = k + points;
            let mut kkt = DMatrix::zeros(sz, sz);
            kkt.view_mut((0, 0), (k, k)).copy_from(&(penalty / scale));
            kkt.view_mut((0, k), (k, points))
                .copy_from(&design.transpose());
            kkt.view_mut((k, 0), (points, k)).copy_from(&design);
            let lu = kkt.full_piv_lu();
            if !lu.is_invertible() {
                return Err(singular());
            }
            let mut op = DMatrix::zeros(k, points);
            let mut rhs = DVector::zeros(sz);
            for j in 0..points {
                rhs.fill(0.0);
                rhs[k + j] = 1.0;
                let sol = lu.solve(&rhs).ok_or_else(singular)?;
                for i in 0..k {
                    op[(i, j)] = sol[i];
                }
            }
            (op, points as f64)
        };

        let op = match &reduction {
            Some(z) => z * op,
            None => op,
        };
        Ok(Self {
            basis,
            design: full_design,
            op,
            edf,
            lambda,
            points,
        })
    }

    /// Effective degrees of freedom of the fit.
    pub fn edf(&self) -> f64 {
        self.edf
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn basis(&self) -> &Arc<BSplineBasis> {
        &self.basis
    }

    fn coefficients_for(&self, values: &[f64]) -> DVector<f64> {
        let y = DVector::from_column_slice(values);
        &self.op * y
    }

    /// Residual sum of squares of the fit to `values`.
    pub fn rss(&self, values: &[f64]) -> f64 {
        let coef = self.coefficients_for(values);
        let fitted = &self.design * &coef;
        values
            .iter()
            .zip(fitted.iter())
            .map(|(y, f)| (y - f) * (y - f))
            .sum()
    }

    /// GCV score `n * RSS / (n - gamma * edf)^2`; infinite when the
    /// penalized degrees of freedom reach the number of observations.
    pub fn gcv(&self, values: &[f64], gamma: f64) -> f64 {
        let n = self.points as f64;
        let denom = n - gamma * self.edf;
        if denom <= 0.0 {
            return f64::INFINITY;
        }
        n * self.rss(values) / (denom * denom)
    }

    pub fn fit(&self, values: &[f64]) -> Result<SmoothedCurve> {
        if values.len() != self.points {
            return Err(Error::InvalidDataset(format!(
                "{} values for a smoother over {} points",
                values.len(),
                self.points
            )));
        }
        let coef = self.coefficients_for(values);
        Ok(SmoothedCurve::new(
            self.basis.clone(),
            coef.as_slice().to_vec(),
            self.lambda,
            f64::NAN,
        ))
    }
}

/// Fit one curve with a fixed penalty weight.
pub fn fit_curve(raw: &RawCurve, basis: &Arc<BSplineBasis>, lambda: f64) -> Result<SmoothedCurve> {
    Smoother::new(basis.clone(), raw.times(), lambda)?.fit(raw.values())
}

/// The lambda search grid: logarithmic between `1e-8 * s` and `1e4 * s`,
/// where `s` is the value variance times the domain span (or 1 when that
/// scale degenerates).
pub fn lambda_grid(values: &[f64], domain_span: f64) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut scale = var * domain_span;
    if !(scale.is_finite() && scale > 0.0) {
        scale = 1.0;
    }
    (0..LAMBDA_GRID_POINTS)
        .map(|i| {
            let f = i as f64 / (LAMBDA_GRID_POINTS - 1) as f64;
            scale * 10f64.powf(LAMBDA_LOG_MIN + f * (LAMBDA_LOG_MAX - LAMBDA_LOG_MIN))
        })
        .collect()
}

/// Result of a GCV search.
#[derive(Debug, Clone, Copy)]
pub struct GcvSelection {
    pub lambda: f64,
    pub gcv: f64,
}

/// Pick the penalty weight minimizing GCV over [`lambda_grid`]. Ties prefer
/// the larger (smoother) lambda. `gamma >= 1` scales the degrees-of-freedom
/// penalty inside the criterion.
pub fn select_lambda_gcv(
    raw: &RawCurve,
    basis: &Arc<BSplineBasis>,
    gamma: f64,
) -> Result<GcvSelection> {
    if !(gamma >= 1.0) {
        return Err(Error::InvalidPenalty(format!(
            "GCV penalty multiplier {gamma} must be at least 1"
        )));
    }
    let (a, b) = basis.domain();
    let grid = lambda_grid(raw.values(), b - a);
    let design = basis.design_matrix(raw.times())?;
    let penalty = basis.curvature_penalty();
    let root = penalty_root(&penalty);

    let mut best: Option<GcvSelection> = None;
    for &lambda in &grid {
        let smoother = Smoother::from_parts(
            basis.clone(),
            design.clone(),
            design.clone(),
            &penalty,
            &root,
            None,
            lambda,
            raw.times().len(),
        )?;
        let score = smoother.gcv(raw.values(), gamma);
        if !score.is_finite() {
            continue;
        }
        if best.map_or(true, |s| score <= s.gcv) {
            best = Some(GcvSelection { lambda, gcv: score });
        }
    }
    best.ok_or(Error::GcvDegenerate {
        dimension: basis.dimension(),
        points: raw.times().len(),
    })
}

/// Per-curve GCV over a shared, precomputed design.
///
/// One generalized eigendecomposition of the penalty against a reference
/// penalized design turns every lambda into diagonal arithmetic, so scoring
/// the whole lambda grid for a curve costs about as much as a single fit.
/// Used by the simulation harness, where thousands of curves share one
/// basis and time grid.
#[derive(Debug, Clone)]
pub struct GcvSmoother {
    basis: Arc<BSplineBasis>,
    points: usize,
    domain_span: f64,
    /// Eigenbasis `V` with `V' A0 V = I` and `V' P V = diag(mu)`, mapping
    /// into full basis coefficients (any boundary reduction folded in).
    v: DMatrix<f64>,
    mu: Vec<f64>,
    /// `V' N' y` maps a curve into the eigenbasis.
    to_eigen: DMatrix<f64>,
    /// `N V` maps eigen coefficients to fitted values.
    from_eigen: DMatrix<f64>,
    /// Diagonal of `V' N'N V`, for the edf trace.
    design_diag: Vec<f64>,
    lambda0: f64,
}

impl GcvSmoother {
    pub fn new(basis: Arc<BSplineBasis>, times: &[f64]) -> Result<Self> {
        Self::with_boundary(basis, times, BoundaryRule::Free)
    }

    pub fn with_boundary(
        basis: Arc<BSplineBasis>,
        times: &[f64],
        boundary: BoundaryRule,
    ) -> Result<Self> {
        let full_design = basis.design_matrix(times)?;
        let full_penalty = basis.curvature_penalty();
        let reduction = match boundary {
            BoundaryRule::Free => None,
            BoundaryRule::Natural => natural_reduction(&basis),
        };
        let (design, penalty) = match &reduction {
            Some(z) => (&full_design * z, z.transpose() * &full_penalty * z),
            None => (full_design, full_penalty),
        };
        let k = design.ncols();
        let ntn = design.transpose() * &design;
        let trace_ratio = ntn.trace() / penalty.trace().max(f64::MIN_POSITIVE);
        let lambda0 = trace_ratio.max(f64::MIN_POSITIVE);
        let a0 = &ntn + &penalty * lambda0;
        let singular = || Error::SingularFit {
            dimension: k,
            degree: basis.degree(),
            knots: basis.interior_knots().len() + 2,
            points: times.len(),
        };
        let chol = a0.cholesky().ok_or_else(singular)?;
        let l = chol.l();
        // S = L^-1 P L^-T, symmetric; its eigenpairs give the shared basis.
        let half = l.solve_lower_triangular(&penalty).ok_or_else(singular)?;
        let s = l
            .solve_lower_triangular(&half.transpose())
            .ok_or_else(singular)?;
        let s = (&s + s.transpose()) * 0.5;
        let eig = s.symmetric_eigen();
        let v = l
            .transpose()
            .solve_upper_triangular(&eig.eigenvectors)
            .ok_or_else(singular)?;
        let mu: Vec<f64> = eig.eigenvalues.iter().map(|&m| m.max(0.0)).collect();
        let to_eigen = v.transpose() * design.transpose();
        let from_eigen = design * &v;
        let design_diag: Vec<f64> = (0..k)
            .map(|i| to_eigen.row(i).iter().map(|x| x * x).sum())
            .collect();
        let v = match &reduction {
            Some(z) => z * v,
            None => v,
        };
        let (a, b) = basis.domain();
        Ok(Self {
            basis,
            points: times.len(),
            domain_span: b - a,
            v,
            mu,
            to_eigen,
            from_eigen,
            design_diag,
            lambda0,
        })
    }

    fn shrinkage(&self, lambda: f64, i: usize) -> f64 {
        1.0 / (1.0 + (lambda - self.lambda0) * self.mu[i])
    }

    /// Select lambda by GCV over the curve's own grid and fit at the
    /// minimizer. Ties prefer the larger lambda.
    pub fn select_and_fit(&self, values: &[f64], gamma: f64) -> Result<SmoothedCurve> {
        if !(gamma >= 1.0) {
            return Err(Error::InvalidPenalty(format!(
                "GCV penalty multiplier {gamma} must be at least 1"
            )));
        }
        if values.len() != self.points {
            return Err(Error::InvalidDataset(format!(
                "{} values for a smoother over {} points",
                values.len(),
                self.points
            )));
        }
        let k = self.mu.len();
        let n = self.points as f64;
        let y = DVector::from_column_slice(values);
        let z = &self.to_eigen * &y;

        let mut best: Option<(f64, f64)> = None;
        let mut scaled = DVector::zeros(k);
        for lambda in lambda_grid(values, self.domain_span) {
            let mut edf = 0.0;
            for i in 0..k {
                let d = self.shrinkage(lambda, i);
                scaled[i] = d * z[i];
                edf += d * self.design_diag[i];
            }
            let denom = n - gamma * edf;
            if denom <= 0.0 {
                continue;
            }
            let fitted = &self.from_eigen * &scaled;
            let rss: f64 = values
                .iter()
                .zip(fitted.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            let score = n * rss / (denom * denom);
            if score.is_finite() && best.map_or(true, |(s, _)| score <= s) {
                best = Some((score, lambda));
            }
        }
        let (score, lambda) = best.ok_or(Error::GcvDegenerate {
            dimension: k,
            points: self.points,
        })?;
        for i in 0..k {
            scaled[i] = self.shrinkage(lambda, i) * z[i];
        }
        let coef = &self.v * &scaled;
        Ok(SmoothedCurve::new(
            self.basis.clone(),
            coef.as_slice().to_vec(),
            lambda,
            score,
        ))
    }
}

/// Knot placement rule for the shared basis.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum KnotRule {
    /// One knot at every grid time.
    PerObservation,
    /// A fixed count of equally spaced knots including the endpoints.
    Equispaced(usize),
    /// Explicit knot times.
    Explicit(Vec<f64>),
}

/// Penalty weight rule applied per curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum PenaltyRule {
    Fixed(f64),
    Gcv { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SmoothingOptions {
    pub knots: KnotRule,
    pub degree: usize,
    pub penalty: PenaltyRule,
    pub boundary: BoundaryRule,
}

impl Default for SmoothingOptions {
    fn default() -> Self {
        Self {
            knots: KnotRule::PerObservation,
            degree: 3,
            penalty: PenaltyRule::Gcv {
                gamma: DEFAULT_GCV_GAMMA,
            },
            boundary: BoundaryRule::Free,
        }
    }
}

/// Largest tolerated relative spread between per-curve domains.
const DOMAIN_MISMATCH_LIMIT: f64 = 0.01;

/// Smooth every curve on one shared basis and evaluate on a common grid.
///
/// The grid is the union of all observed times restricted to the common
/// domain. Curves whose domains differ by more than 1% of the overall span
/// are rejected.
pub fn smooth_dataset(raws: &[RawCurve], opts: &SmoothingOptions) -> Result<FunctionalDataset> {
    if raws.is_empty() {
        return Err(Error::InvalidDataset("no curves".into()));
    }
    let lows: Vec<f64> = raws.iter().map(|c| c.domain().0).collect();
    let highs: Vec<f64> = raws.iter().map(|c| c.domain().1).collect();
    let min_low = lows.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_low = lows.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_high = highs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_high = highs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max_high - min_low;
    if span <= 0.0 {
        return Err(Error::InvalidDataset("degenerate time span".into()));
    }
    if (max_low - min_low) > DOMAIN_MISMATCH_LIMIT * span
        || (max_high - min_high) > DOMAIN_MISMATCH_LIMIT * span
    {
        return Err(Error::DomainMismatch {
            limit_pct: DOMAIN_MISMATCH_LIMIT * 100.0,
        });
    }
    let domain = (max_low, min_high);

    // Union grid over the common domain.
    let mut grid: Vec<f64> = raws
        .iter()
        .flat_map(|c| c.times().iter().copied())
        .filter(|&t| t >= domain.0 && t <= domain.1)
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let knot_times: Vec<f64> = match &opts.knots {
        KnotRule::PerObservation => grid.clone(),
        KnotRule::Equispaced(count) => {
            if *count < 2 {
                return Err(Error::InvalidBasis("need at least 2 knots".into()));
            }
            let step = (domain.1 - domain.0) / (*count - 1) as f64;
            (0..*count).map(|i| domain.0 + i as f64 * step).collect()
        }
        KnotRule::Explicit(times) => times.clone(),
    };
    let basis = Arc::new(BSplineBasis::new(domain, &knot_times, opts.degree)?);

    let shared_times = raws
        .iter()
        .all(|c| c.times() == raws[0].times() && c.domain() == domain);
    let shared_smoother = match (&opts.penalty, shared_times) {
        (PenaltyRule::Fixed(lambda), true) => Some(Smoother::with_boundary(
            basis.clone(),
            raws[0].times(),
            *lambda,
            opts.boundary,
        )?),
        _ => None,
    };

    let fitted: Result<Vec<(String, String, SmoothedCurve)>> = raws
        .par_iter()
        .map(|raw| {
            let times: Vec<f64> = raw
                .times()
                .iter()
                .copied()
                .filter(|&t| t >= domain.0 && t <= domain.1)
                .collect();
            let values: Vec<f64> = raw
                .times()
                .iter()
                .zip(raw.values())
                .filter(|(t, _)| **t >= domain.0 && **t <= domain.1)
                .map(|(_, v)| *v)
                .collect();
            let curve = match (&opts.penalty, &shared_smoother) {
                (_, Some(s)) => s.fit(&values)?,
                (PenaltyRule::Fixed(lambda), None) => {
                    Smoother::with_boundary(basis.clone(), &times, *lambda, opts.boundary)?
                        .fit(&values)?
                }
                (PenaltyRule::Gcv { gamma }, _) => {
                    let engine = GcvSmoother::with_boundary(basis.clone(), &times, opts.boundary)?;
                    engine.select_and_fit(&values, *gamma)?
                }
            };
            Ok((raw.subject_id().to_string(), raw.group().to_string(), curve))
        })
        .collect();

    FunctionalDataset::new(fitted?, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    fn knot_per_obs_basis(times: &[f64]) -> Arc<BSplineBasis> {
        Arc::new(BSplineBasis::new((times[0], *times.last().unwrap()), times, 3).unwrap())
    }

    /// Roughness of a fit, measured independently of the penalty matrix by
    /// second differences on a dense grid.
    fn roughness_by_differences(curve: &SmoothedCurve) -> f64 {
        let (a, b) = curve.basis().domain();
        let m = 2001;
        let h = (b - a) / (m - 1) as f64;
        let vals: Vec<f64> = (0..m)
            .map(|i| curve.value_at(a + i as f64 * h).unwrap())
            .collect();
        let mut acc = 0.0;
        for i in 1..m - 1 {
            let d2 = (vals[i + 1] - 2.0 * vals[i] + vals[i - 1]) / (h * h);
            acc += d2 * d2 * h;
        }
        acc
    }

    #[test]
    fn constant_data_is_reproduced_for_any_lambda() {
        let t = grid(21);
        let basis = knot_per_obs_basis(&t);
        let y = vec![4.25; t.len()];
        let raw = RawCurve::new("c", "g", t.clone(), y).unwrap();
        for lambda in [0.0, 1e-4, 1.0, 1e6] {
            let fit = fit_curve(&raw, &basis, lambda).unwrap();
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                assert!(
                    (fit.value_at(x).unwrap() - 4.25).abs() < 1e-8,
                    "lambda={lambda}, t={x}"
                );
            }
        }
    }

    #[test]
    fn straight_line_is_reproduced_for_any_lambda() {
        let t = grid(21);
        let basis = knot_per_obs_basis(&t);
        let y: Vec<f64> = t.iter().map(|x| 3.0 * x - 1.5).collect();
        let raw = RawCurve::new("l", "g", t.clone(), y).unwrap();
        for lambda in [0.0, 1e-2, 1e3] {
            let fit = fit_curve(&raw, &basis, lambda).unwrap();
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                assert!(
                    (fit.value_at(x).unwrap() - (3.0 * x - 1.5)).abs() < 1e-8,
                    "lambda={lambda}, t={x}"
                );
            }
        }
    }

    #[test]
    fn zero_lambda_interpolates() {
        let t = grid(25);
        let basis = knot_per_obs_basis(&t);
        // Deterministic wiggly data.
        let y: Vec<f64> = t
            .iter()
            .map(|x| (13.0 * x).sin() + 0.3 * (29.0 * x).cos())
            .collect();
        let smoother = Smoother::new(basis, &t, 0.0).unwrap();
        let rss = smoother.rss(&y);
        let scale: f64 = y.iter().map(|v| v * v).sum();
        assert!(rss < 1e-8 * scale.max(1.0), "rss={rss}");
    }

    #[test]
    fn roughness_is_nonincreasing_in_lambda() {
        let t = grid(41);
        let basis = knot_per_obs_basis(&t);
        // A fixed "noisy sine": deterministic jitter from a simple LCG.
        let mut state = 88172645463325252u64;
        let mut noise = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state as f64 / u64::MAX as f64) - 0.5
        };
        let y: Vec<f64> = t.iter().map(|x| (8.0 * x).sin() + 0.4 * noise()).collect();
        let raw = RawCurve::new("s", "g", t.clone(), y).unwrap();

        let lambdas: Vec<f64> = (0..20).map(|i| 10f64.powf(-7.0 + 0.5 * i as f64)).collect();
        let mut previous = f64::INFINITY;
        for &lambda in &lambdas {
            let fit = fit_curve(&raw, &basis, lambda).unwrap();
            let rough = roughness_by_differences(&fit);
            assert!(
                rough <= previous * (1.0 + 1e-6),
                "roughness grew at lambda={lambda}: {rough} > {previous}"
            );
            previous = rough;
        }

        // At an enormous penalty the fit approaches the least-squares line.
        let heavy = fit_curve(&raw, &basis, 1e9).unwrap();
        let n = t.len() as f64;
        let tbar = t.iter().sum::<f64>() / n;
        let ybar = raw.values().iter().sum::<f64>() / n;
        let sxy: f64 = t
            .iter()
            .zip(raw.values())
            .map(|(x, v)| (x - tbar) * (v - ybar))
            .sum();
        let sxx: f64 = t.iter().map(|x| (x - tbar) * (x - tbar)).sum();
        let slope = sxy / sxx;
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let line = ybar + slope * (x - tbar);
            assert!((heavy.value_at(x).unwrap() - line).abs() < 1e-3, "t={x}");
        }
    }

    /// Brute-force GCV over the same grid, using an explicit hat-matrix
    /// trace rather than the smoother's internal bookkeeping.
    fn gcv_brute_force(raw: &RawCurve, basis: &Arc<BSplineBasis>, gamma: f64) -> (f64, Vec<f64>) {
        let (a, b) = basis.domain();
        let lambdas = lambda_grid(raw.values(), b - a);
        let n = raw.times().len();
        let design = basis.design_matrix(raw.times()).unwrap();
        let penalty = basis.curvature_penalty();
        let y = DVector::from_column_slice(raw.values());
        let mut best = (f64::NAN, f64::INFINITY);
        let mut scores = Vec::new();
        for &lambda in &lambdas {
            let m = design.transpose() * &design + &penalty * lambda;
            let inv = m.try_inverse().unwrap();
            let hat = &design * inv * design.transpose();
            let edf: f64 = (0..n).map(|i| hat[(i, i)]).sum();
            let fitted = &hat * &y;
            let rss: f64 = (0..n).map(|i| (y[i] - fitted[i]).powi(2)).sum();
            let denom = n as f64 - gamma * edf;
            let score = if denom <= 0.0 {
                f64::INFINITY
            } else {
                n as f64 * rss / (denom * denom)
            };
            scores.push(score);
            if score.is_finite() && score <= best.1 {
                best = (lambda, score);
            }
        }
        (best.0, scores)
    }

    #[test]
    fn gcv_on_pure_noise_picks_a_heavy_penalty() {
        let t = grid(31);
        // Knot-per-observation basis: tiny penalties leave edf near n, where
        // GCV diverges, so noise pushes the minimum far to the right.
        let basis = knot_per_obs_basis(&t);
        let mut state = 2871u64;
        let mut noise = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let y: Vec<f64> = t.iter().map(|_| 2.0 + noise()).collect();
        let raw = RawCurve::new("n", "g", t, y).unwrap();
        let picked = select_lambda_gcv(&raw, &basis, 1.0).unwrap();
        let (brute, _) = gcv_brute_force(&raw, &basis, 1.0);
        assert_abs_diff_eq!(picked.lambda, brute, epsilon = 1e-12 * brute.abs());

        let (a, b) = basis.domain();
        let lambdas = lambda_grid(raw.values(), b - a);
        let rank = lambdas.iter().position(|&l| l == picked.lambda).unwrap();
        assert!(
            rank >= lambdas.len() / 2,
            "noise should smooth hard, got grid index {rank}"
        );
    }

    #[test]
    fn gcv_matches_brute_force_on_smooth_data() {
        let t = grid(25);
        let basis = Arc::new(BSplineBasis::equispaced((0.0, 1.0), 10, 3).unwrap());
        let y: Vec<f64> = t.iter().map(|x| x * x * x - 0.4 * x).collect();
        let raw = RawCurve::new("c", "g", t, y).unwrap();
        let picked = select_lambda_gcv(&raw, &basis, 1.4).unwrap();
        let (brute, scores) = gcv_brute_force(&raw, &basis, 1.4);
        assert!(scores.iter().any(|s| s.is_finite()));
        assert_abs_diff_eq!(picked.lambda, brute, epsilon = 1e-12 * brute.abs());
    }

    #[test]
    fn larger_gamma_never_selects_a_smaller_lambda() {
        let t = grid(31);
        let basis = Arc::new(BSplineBasis::equispaced((0.0, 1.0), 12, 3).unwrap());
        let mut state = 97u64;
        let mut noise = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let y: Vec<f64> = t.iter().map(|x| (5.0 * x).sin() + 0.6 * noise()).collect();
        let raw = RawCurve::new("n", "g", t, y).unwrap();
        let plain = select_lambda_gcv(&raw, &basis, 1.0).unwrap();
        let heavy = select_lambda_gcv(&raw, &basis, 1.4).unwrap();
        assert!(
            heavy.lambda >= plain.lambda,
            "gamma=1.4 picked {} below gamma=1.0 {}",
            heavy.lambda,
            plain.lambda
        );
    }

    #[test]
    fn shared_design_gcv_matches_the_reference_route() {
        let t = grid(41);
        let basis = knot_per_obs_basis(&t);
        let engine = GcvSmoother::new(basis.clone(), &t).unwrap();
        let mut state = 404u64;
        let mut noise = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        for case in 0..5 {
            let y: Vec<f64> = t
                .iter()
                .map(|x| 30.0 * (1.0 - x) * x + 0.55 * noise() + case as f64)
                .collect();
            let raw = RawCurve::new(format!("c{case}"), "g", t.clone(), y.clone()).unwrap();
            let reference = select_lambda_gcv(&raw, &basis, 1.4).unwrap();
            let fast = engine.select_and_fit(&y, 1.4).unwrap();
            assert_eq!(fast.lambda(), reference.lambda, "case {case}");
            assert!(
                (fast.gcv_score() - reference.gcv).abs() <= 1e-6 * reference.gcv,
                "case {case}: {} vs {}",
                fast.gcv_score(),
                reference.gcv
            );
            let direct = Smoother::new(basis.clone(), &t, reference.lambda)
                .unwrap()
                .fit(&y)
                .unwrap();
            for i in 0..=40 {
                let x = i as f64 / 40.0;
                let d = (fast.value_at(x).unwrap() - direct.value_at(x).unwrap()).abs();
                assert!(d < 1e-7, "case {case}, t={x}: diff {d}");
            }
        }
    }

    #[test]
    fn gcv_rejects_gamma_below_one() {
        let t = grid(11);
        let basis = knot_per_obs_basis(&t);
        let raw = RawCurve::new("x", "g", t.clone(), vec![1.0; t.len()]).unwrap();
        assert!(select_lambda_gcv(&raw, &basis, 0.5).is_err());
    }

    #[test]
    fn smooth_dataset_resamples_onto_the_union_grid() {
        let t1: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let t2: Vec<f64> = (0..11).map(|i| 0.001 + 0.998 * i as f64 / 10.0).collect();
        let c1 =
            RawCurve::new("a", "g1", t1.clone(), t1.iter().map(|x| x + 1.0).collect()).unwrap();
        let c2 =
            RawCurve::new("b", "g2", t2.clone(), t2.iter().map(|x| 2.0 * x).collect()).unwrap();
        let opts = SmoothingOptions {
            penalty: PenaltyRule::Fixed(1e-6),
            ..Default::default()
        };
        let ds = smooth_dataset(&[c1.clone(), c2.clone()], &opts).unwrap();
        // Union of both time lists inside the common domain.
        let lo = c2.times()[0];
        let hi = *c2.times().last().unwrap();
        let mut expected: Vec<f64> = c1
            .times()
            .iter()
            .chain(c2.times())
            .copied()
            .filter(|&t| t >= lo && t <= hi)
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        expected.dedup();
        assert_eq!(ds.grid(), expected.as_slice());
        assert_eq!(ds.n(), 2);
    }

    #[test]
    fn smooth_dataset_rejects_disjoint_domains() {
        let t1: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let t2: Vec<f64> = (0..11).map(|i| 0.2 + 0.8 * i as f64 / 10.0).collect();
        let c1 = RawCurve::new("a", "g1", t1.clone(), vec![0.0; 11]).unwrap();
        let c2 = RawCurve::new("b", "g2", t2, vec![0.0; 11]).unwrap();
        let err = smooth_dataset(&[c1, c2], &SmoothingOptions::default());
        assert!(matches!(err, Err(Error::DomainMismatch { .. })));
    }
}
