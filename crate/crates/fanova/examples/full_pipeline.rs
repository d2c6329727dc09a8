//! The end-to-end gated analysis over the three bundled demo datasets:
//! whole-domain tests with a Bonferroni correction across datasets, interval
//! closure for the survivors, pairwise comparisons inside flagged intervals.
//!
//! ```sh
//! cargo run -p fanova --example full_pipeline
//! ```

use std::path::{Path, PathBuf};

use fanova::analysis::{run_analysis, AnalysisConfig};
use fanova::report::{render_report, ReportFormat};
use fanova::stats::NamedInterval;

fn main() -> fanova::Result<()> {
    let data_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let data: Vec<PathBuf> = [
        "erythrograms_15min.csv",
        "erythrograms_30min.csv",
        "erythrograms_240min.csv",
    ]
    .iter()
    .map(|name| data_dir.join(name))
    .collect();
    let intervals = vec![
        NamedInterval {
            name: "latent".into(),
            a: 0.0,
            b: 60.0,
        },
        NamedInterval {
            name: "least_stable".into(),
            a: 60.0,
            b: 165.0,
        },
        NamedInterval {
            name: "general".into(),
            a: 165.0,
            b: 240.0,
        },
        NamedInterval {
            name: "plateau".into(),
            a: 240.0,
            b: 720.0,
        },
    ];

    let mut cfg = AnalysisConfig::new(data, intervals);
    cfg.permutations = 999;
    let report = run_analysis(&cfg)?;
    print!("{}", render_report(&report, ReportFormat::Text)?);
    Ok(())
}
