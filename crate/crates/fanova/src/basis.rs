//! Clamped B-spline bases on a closed interval.
//!
//! A basis is defined by a polynomial degree, a closed domain `[a, b]` and a
//! list of knot times inside the domain. Boundary knots are repeated
//! `degree + 1` times so the basis is clamped: the first and last basis
//! functions interpolate at the domain endpoints and every evaluation row
//! sums to one.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Nodes and weights of the 5-point Gauss-Legendre rule on [-1, 1].
/// Exact for polynomial integrands up to degree 9, which covers the
/// curvature products of splines up to degree 6.
const GAUSS5: [(f64, f64); 5] = [
    (-0.906179845938664, 0.2369268850561891),
    (-0.5384693101056831, 0.47862867049936647),
    (0.0, 0.5688888888888889),
    (0.5384693101056831, 0.47862867049936647),
    (0.906179845938664, 0.2369268850561891),
];

/// A clamped B-spline basis.
///
/// The dimension is `interior_knots + degree + 1`. When the knot list passed
/// to [`BSplineBasis::new`] includes both domain endpoints and the degree is
/// three, this works out to the number of listed knots plus two.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineBasis {
    degree: usize,
    domain: (f64, f64),
    interior: Vec<f64>,
    /// Full clamped knot vector: `degree + 1` copies of each boundary plus
    /// the interior knots.
    knots: Vec<f64>,
}

impl BSplineBasis {
    /// Build a basis of the given degree on `domain` with knots at
    /// `knot_times`. Knot times equal to a domain endpoint fold into the
    /// clamped boundary; the rest become interior knots.
    pub fn new(domain: (f64, f64), knot_times: &[f64], degree: usize) -> Result<Self> {
        let (a, b) = domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidBasis(format!("empty domain [{a}, {b}]")));
        }
        for w in knot_times.windows(2) {
            if !(w[0] <= w[1]) {
                return Err(Error::InvalidBasis(format!(
                    "knots are not sorted ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        if let (Some(first), Some(last)) = (knot_times.first(), knot_times.last()) {
            if *first < a || *last > b {
                return Err(Error::InvalidBasis(format!(
                    "knots [{first}, {last}] outside the domain [{a}, {b}]"
                )));
            }
        }
        let interior: Vec<f64> = knot_times
            .iter()
            .copied()
            .filter(|&t| t > a && t < b)
            .collect();

        let mut knots = Vec::with_capacity(interior.len() + 2 * (degree + 1));
        knots.extend(std::iter::repeat(a).take(degree + 1));
        knots.extend_from_slice(&interior);
        knots.extend(std::iter::repeat(b).take(degree + 1));

        Ok(Self {
            degree,
            domain,
            interior,
            knots,
        })
    }

    /// Equally spaced knots including both endpoints.
    pub fn equispaced(domain: (f64, f64), knot_count: usize, degree: usize) -> Result<Self> {
        if knot_count < 2 {
            return Err(Error::InvalidBasis(format!(
                "need at least 2 knots, got {knot_count}"
            )));
        }
        let (a, b) = domain;
        let step = (b - a) / (knot_count - 1) as f64;
        let times: Vec<f64> = (0..knot_count).map(|i| a + i as f64 * step).collect();
        Self::new(domain, &times, degree)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn interior_knots(&self) -> &[f64] {
        &self.interior
    }

    /// Number of basis functions.
    pub fn dimension(&self) -> usize {
        self.interior.len() + self.degree + 1
    }

    fn check_inside(&self, t: f64) -> Result<()> {
        let (a, b) = self.domain;
        let tol = 1e-12 * (b - a).abs().max(1.0);
        if t < a - tol || t > b + tol {
            return Err(Error::OutsideDomain(t, a, b));
        }
        Ok(())
    }

    /// Values of the `len - q - 1` degree-`q` B-splines on the clamped knot
    /// vector, for any `q <= degree`.
    fn row_at_degree(&self, t: f64, q: usize) -> Vec<f64> {
        let knots = &self.knots;
        let len = knots.len();
        let (_, b) = self.domain;

        // Degree-0 indicators over half-open spans, closing the final
        // nonempty span on the right so t = b is covered.
        let mut vals = vec![0.0; len - 1];
        for j in 0..len - 1 {
            let lo = knots[j];
            let hi = knots[j + 1];
            let inside = if hi == b && lo < b {
                t >= lo && t <= hi
            } else {
                t >= lo && t < hi
            };
            if inside {
                vals[j] = 1.0;
                break;
            }
        }

        for d in 1..=q {
            let mut next = vec![0.0; len - d - 1];
            for (j, slot) in next.iter_mut().enumerate() {
                let left_den = knots[j + d] - knots[j];
                let right_den = knots[j + d + 1] - knots[j + 1];
                let mut v = 0.0;
                if left_den > 0.0 {
                    v += (t - knots[j]) / left_den * vals[j];
                }
                if right_den > 0.0 {
                    v += (knots[j + d + 1] - t) / right_den * vals[j + 1];
                }
                *slot = v;
            }
            vals = next;
        }
        vals
    }

    /// Values of all basis functions at `t`.
    pub fn row(&self, t: f64) -> Result<Vec<f64>> {
        self.check_inside(t)?;
        Ok(self.row_at_degree(t, self.degree))
    }

    /// Design matrix with one row per evaluation point.
    pub fn design_matrix(&self, ts: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.dimension();
        let mut m = DMatrix::zeros(ts.len(), k);
        for (r, &t) in ts.iter().enumerate() {
            let row = self.row(t)?;
            for (c, v) in row.into_iter().enumerate() {
                m[(r, c)] = v;
            }
        }
        Ok(m)
    }

    /// First derivatives of all basis functions at `t`.
    pub fn derivative_row(&self, t: f64) -> Result<Vec<f64>> {
        self.check_inside(t)?;
        let p = self.degree;
        if p == 0 {
            return Ok(vec![0.0; self.dimension()]);
        }
        let lower = self.row_at_degree(t, p - 1);
        Ok(self.combine_derivative(&lower, p))
    }

    /// Second derivatives of all basis functions at `t`.
    pub fn second_derivative_row(&self, t: f64) -> Result<Vec<f64>> {
        self.check_inside(t)?;
        let p = self.degree;
        if p < 2 {
            return Ok(vec![0.0; self.dimension()]);
        }
        let base = self.row_at_degree(t, p - 2);
        let first = self.combine_derivative_at(&base, p - 1);
        Ok(self.combine_derivative(&first, p))
    }

    /// One step of the derivative recurrence: given values of the
    /// degree-`d - 1` functions, produce the derivatives of the degree-`d`
    /// functions (each scaled by `d`).
    fn combine_derivative_at(&self, lower: &[f64], d: usize) -> Vec<f64> {
        let knots = &self.knots;
        let count = knots.len() - d - 1;
        let mut out = vec![0.0; count];
        for (j, slot) in out.iter_mut().enumerate() {
            let left_den = knots[j + d] - knots[j];
            let right_den = knots[j + d + 1] - knots[j + 1];
            let mut v = 0.0;
            if left_den > 0.0 {
                v += lower[j] / left_den;
            }
            if right_den > 0.0 {
                v -= lower[j + 1] / right_den;
            }
            *slot = d as f64 * v;
        }
        out
    }

    fn combine_derivative(&self, lower: &[f64], d: usize) -> Vec<f64> {
        self.combine_derivative_at(lower, d)
    }

    /// Gram matrix of second derivatives, `P[i, j] = integral of
    /// B_i''(t) B_j''(t) dt` over the domain. This is the curvature
    /// penalty used by the smoother.
    pub fn curvature_penalty(&self) -> DMatrix<f64> {
        let k = self.dimension();
        let mut p = DMatrix::zeros(k, k);
        if self.degree < 2 {
            return p;
        }
        let band = self.degree + 1;
        // Integrate span by span; the integrand is polynomial on each span.
        for w in self.knots.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= lo {
                continue;
            }
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for &(node, weight) in GAUSS5.iter() {
                let t = mid + half * node;
                let row = self
                    .second_derivative_row(t)
                    .expect("span points lie inside the domain");
                let coeff = weight * half;
                // Only functions whose support covers the span are nonzero.
                for i in 0..k {
                    if row[i] == 0.0 {
                        continue;
                    }
                    for j in i..k.min(i + band) {
                        let v = coeff * row[i] * row[j];
                        p[(i, j)] += v;
                        if i != j {
                            p[(j, i)] += v;
                        }
                    }
                }
            }
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Textbook Cox-de Boor recursion, written independently of the
    /// iterative evaluator above.
    fn naive_bspline(knots: &[f64], i: usize, d: usize, t: f64, right_end: f64) -> f64 {
        if d == 0 {
            let closing = knots[i + 1] == right_end && knots[i] < right_end;
            let inside = if closing {
                t >= knots[i] && t <= knots[i + 1]
            } else {
                t >= knots[i] && t < knots[i + 1]
            };
            return if inside { 1.0 } else { 0.0 };
        }
        let mut v = 0.0;
        let den_l = knots[i + d] - knots[i];
        if den_l > 0.0 {
            v += (t - knots[i]) / den_l * naive_bspline(knots, i, d - 1, t, right_end);
        }
        let den_r = knots[i + d + 1] - knots[i + 1];
        if den_r > 0.0 {
            v += (knots[i + d + 1] - t) / den_r * naive_bspline(knots, i + 1, d - 1, t, right_end);
        }
        v
    }

    #[test]
    fn dimension_counts_interior_knots() {
        // 101 knots including both endpoints, cubic: 99 interior.
        let times: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let basis = BSplineBasis::new((0.0, 1.0), &times, 3).unwrap();
        assert_eq!(basis.dimension(), 103);
        assert_eq!(basis.interior_knots().len(), 99);
    }

    #[test]
    fn dimension_for_49_equispaced_knots_is_51() {
        let basis = BSplineBasis::equispaced((0.0, 720.0), 49, 3).unwrap();
        // 49 listed knots with cubic clamping: 47 interior + 4.
        assert_eq!(basis.dimension(), 51);
    }

    #[test]
    fn partition_of_unity_on_a_fine_grid() {
        let times: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let basis = BSplineBasis::new((0.0, 1.0), &times, 3).unwrap();
        for i in 0..=200 {
            let t = i as f64 / 200.0;
            let s: f64 = basis.row(t).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-10, "row sum {s} at t={t}");
        }
    }

    #[test]
    fn degree_zero_basis_is_an_indicator() {
        let basis = BSplineBasis::new((0.0, 1.0), &[0.5], 0).unwrap();
        assert_eq!(basis.dimension(), 2);
        assert_eq!(basis.row(0.25).unwrap(), vec![1.0, 0.0]);
        assert_eq!(basis.row(0.75).unwrap(), vec![0.0, 1.0]);
        assert_eq!(basis.row(1.0).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn rejects_unsorted_knots_and_empty_domain() {
        assert!(BSplineBasis::new((0.0, 1.0), &[0.7, 0.3], 3).is_err());
        assert!(BSplineBasis::new((1.0, 1.0), &[], 3).is_err());
        assert!(BSplineBasis::new((0.0, 1.0), &[1.5], 3).is_err());
    }

    #[test]
    fn evaluation_matches_naive_recursion() {
        let times = [0.0, 0.13, 0.4, 0.55, 0.8, 1.0];
        let basis = BSplineBasis::new((0.0, 1.0), &times, 3).unwrap();
        let k = basis.dimension();
        for step in 0..=10 {
            let t = step as f64 / 10.0;
            let row = basis.row(t).unwrap();
            for i in 0..k {
                let want = naive_bspline(&basis.knots, i, 3, t, 1.0);
                assert_abs_diff_eq!(row[i], want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let times = [0.0, 0.25, 0.5, 0.75, 1.0];
        let basis = BSplineBasis::new((0.0, 1.0), &times, 3).unwrap();
        let h = 1e-6;
        for &t in &[0.1, 0.3, 0.62, 0.9] {
            let up = basis.row(t + h).unwrap();
            let down = basis.row(t - h).unwrap();
            let mid = basis.row(t).unwrap();
            let d1 = basis.derivative_row(t).unwrap();
            let d2 = basis.second_derivative_row(t).unwrap();
            for i in 0..basis.dimension() {
                let fd1 = (up[i] - down[i]) / (2.0 * h);
                let fd2 = (up[i] - 2.0 * mid[i] + down[i]) / (h * h);
                assert!((d1[i] - fd1).abs() < 1e-5, "first derivative, i={i} t={t}");
                assert!((d2[i] - fd2).abs() < 1e-3, "second derivative, i={i} t={t}");
            }
        }
    }

    #[test]
    fn curvature_penalty_annihilates_lines_and_detects_curvature() {
        let times: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
        let basis = BSplineBasis::new((0.0, 1.0), &times, 3).unwrap();
        let n = basis.design_matrix(&times).unwrap();
        let p = basis.curvature_penalty();

        // Coefficients reproducing f(t) = 2t + 1 exactly (least squares on
        // a fine grid would do; the clamped cubic basis contains lines, so
        // interpolation at the Greville-like sample below is enough).
        let fine: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
        let nf = basis.design_matrix(&fine).unwrap();
        let y = nalgebra::DVector::from_iterator(fine.len(), fine.iter().map(|t| 2.0 * t + 1.0));
        let coef = (nf.transpose() * &nf)
            .cholesky()
            .unwrap()
            .solve(&(nf.transpose() * y));
        let penalty = (coef.transpose() * &p * &coef)[(0, 0)];
        // The exact value is zero; rounding in the fitted coefficients is
        // amplified by the 1/h^4 scale of the penalty entries.
        assert!(penalty.abs() < 1e-6, "line penalty {penalty}");

        // f(t) = t^2 has curvature 2, so the penalty integral is 4.
        let y2 = nalgebra::DVector::from_iterator(fine.len(), fine.iter().map(|t| t * t));
        let coef2 = (nf.transpose() * &nf)
            .cholesky()
            .unwrap()
            .solve(&(nf.transpose() * y2));
        let penalty2 = (coef2.transpose() * &p * &coef2)[(0, 0)];
        assert_abs_diff_eq!(penalty2, 4.0, epsilon = 1e-6);
        let _ = n;
    }

    proptest! {
        #[test]
        fn rows_always_sum_to_one(
            degree in 1usize..5,
            raw in proptest::collection::vec(0.02f64..0.98, 1..12),
            t in 0.0f64..=1.0,
        ) {
            let mut knots = raw;
            knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            knots.dedup();
            let basis = BSplineBasis::new((0.0, 1.0), &knots, degree).unwrap();
            let s: f64 = basis.row(t).unwrap().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-10);
        }
    }
}
