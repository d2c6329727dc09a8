//! Load the bundled demo curves, smooth them with per-curve GCV and export
//! the fitted values plus a group-mean plot.
//!
//! ```sh
//! cargo run -p fanova --example smooth_curves
//! ```

use std::path::Path;

use fanova::io::{load_dataset_path, write_fitted_csv};
use fanova::plot::plot_means;
use fanova::smoothing::{smooth_dataset, SmoothingOptions};

fn main() -> fanova::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/erythrograms_15min.csv");
    let raws = load_dataset_path(&data)?;
    println!("loaded {} curves from {}", raws.len(), data.display());

    let ds = smooth_dataset(&raws, &SmoothingOptions::default())?;
    println!(
        "fitted {} curves on a {}-point grid, basis dimension {}",
        ds.n(),
        ds.grid().len(),
        ds.curves()[0].basis().dimension()
    );
    for (subject, curve) in ds.subjects().iter().zip(ds.curves()).take(5) {
        println!(
            "  {subject}: lambda {:10.4e}  gcv {:8.4}",
            curve.lambda(),
            curve.gcv_score()
        );
    }

    let out_dir = std::env::temp_dir().join("fanova_examples");
    std::fs::create_dir_all(&out_dir).map_err(|e| fanova::Error::io(&out_dir, e))?;
    let csv_path = out_dir.join("fitted_15min.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| fanova::Error::io(&csv_path, e))?;
    write_fitted_csv(&ds, file)?;
    let svg_path = out_dir.join("means_15min.svg");
    std::fs::write(&svg_path, plot_means(&ds, None, "demo group means"))
        .map_err(|e| fanova::Error::io(&svg_path, e))?;
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}
