//! A small Monte Carlo power study under the spike model: the rejection
//! rate peaks on the interval holding the true deviation.
//!
//! ```sh
//! cargo run --release -p fanova --example power_study
//! ```

use fanova::plot::plot_power;
use fanova::simulate::{run_power, Model, SimConfig};

fn main() -> fanova::Result<()> {
    let cfg = SimConfig {
        nsim: 100,
        permutations: 200,
        ..SimConfig::desk(Model::M1)
    };
    let betas = [0.0, 0.136, 0.273, 0.409, 0.5];
    println!(
        "spike model, {} replicates of {} permutations each...",
        cfg.nsim, cfg.permutations
    );
    let table = run_power(&cfg, &betas)?;

    println!("\nbeta   interval rejection rates (1..5)");
    for &beta in &betas {
        let rates: Vec<String> = (1..=5)
            .map(|i| format!("{:.2}", table.interval_rate(beta, i).unwrap()))
            .collect();
        println!("{beta:<6} {}", rates.join("  "));
    }

    let out_dir = std::env::temp_dir().join("fanova_examples");
    std::fs::create_dir_all(&out_dir).map_err(|e| fanova::Error::io(&out_dir, e))?;
    let csv_path = out_dir.join("power_m1.csv");
    let file = std::fs::File::create(&csv_path).map_err(|e| fanova::Error::io(&csv_path, e))?;
    table.to_csv(file)?;
    let svg_path = out_dir.join("power_m1.svg");
    std::fs::write(&svg_path, plot_power(&table, "spike model rejection rates"))
        .map_err(|e| fanova::Error::io(&svg_path, e))?;
    println!("\nwrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}
