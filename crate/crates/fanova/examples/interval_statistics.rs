//! Interval-restricted statistics on a small synthetic dataset: the
//! between-group statistic T, the variance ratio F, the pairwise distance
//! statistic, and the additivity of T across a partition.
//!
//! ```sh
//! cargo run -p fanova --example interval_statistics
//! ```

use std::sync::Arc;

use fanova::basis::BSplineBasis;
use fanova::curves::{FunctionalDataset, RawCurve};
use fanova::smoothing::fit_curve;
use fanova::stats::{combine_sum, interval_stats, interval_t, IntervalPartition};

fn main() -> fanova::Result<()> {
    // Three groups of four curves: shifted and tilted sinusoids.
    let grid: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
    let basis = Arc::new(BSplineBasis::new((0.0, 1.0), &grid, 3)?);
    let mut curves = Vec::new();
    for g in 0..3 {
        for s in 0..4 {
            let phase = 0.13 * s as f64;
            let values: Vec<f64> = grid
                .iter()
                .map(|t| (4.0 * t + phase).sin() + 0.3 * g as f64 * t)
                .collect();
            let raw = RawCurve::new(
                format!("g{g}s{s}"),
                format!("group{g}"),
                grid.clone(),
                values,
            )?;
            let fit = fit_curve(&raw, &basis, 1e-4)?;
            curves.push((raw.subject_id().to_string(), raw.group().to_string(), fit));
        }
    }
    let ds = FunctionalDataset::new(curves, grid)?;

    let partition = IntervalPartition::equal_lengths(ds.grid(), 4)?;
    println!("interval      T          F          Vn");
    for stat in interval_stats(&ds, &partition) {
        println!(
            "{:>3}    {:10.6} {:10.4} {:10.6}",
            stat.interval + 1,
            stat.t,
            stat.f.unwrap_or(f64::NAN),
            stat.vn.unwrap_or(f64::NAN),
        );
    }

    // The sum over the partition equals the whole-domain statistic.
    let stats: Vec<f64> = (0..partition.len())
        .map(|i| interval_t(&ds, &partition, i))
        .collect::<fanova::Result<_>>()?;
    let total = combine_sum(&stats, &[0, 1, 2, 3]);
    let whole = IntervalPartition::whole_domain(ds.grid())?;
    let direct = interval_t(&ds, &whole, 0)?;
    println!("\nsum over intervals {total:.9}");
    println!("whole-domain T     {direct:.9}");
    Ok(())
}
