//! Pairwise group comparison inside a significant interval: the interval
//! level flags where differences live, the pairwise tree says which groups
//! differ there.
//!
//! ```sh
//! cargo run -p fanova --example pairwise_comparison
//! ```

use fanova::closure::{combined_shortcut, pairwise_followup, PermutationNodes};
use fanova::curves::FunctionalDataset;
use fanova::permute::{NullStatMatrix, PValueRule, PermutationPlan};
use fanova::simulate::{generate_replicate, Model, SimConfig};
use fanova::smoothing::{smooth_dataset, SmoothingOptions};
use fanova::stats::IntervalPartition;

fn main() -> fanova::Result<()> {
    // One synthetic replicate: groups A and B share a mean, group C drifts
    // away toward the right edge.
    let cfg = SimConfig::desk(Model::M2);
    let raws = generate_replicate(&cfg, 0.5, 2024);
    let ds: FunctionalDataset = smooth_dataset(
        &raws,
        &SmoothingOptions {
            penalty: cfg.smoothing.penalty,
            boundary: cfg.smoothing.boundary,
            ..SmoothingOptions::default()
        },
    )?;

    let partition = IntervalPartition::equal_lengths(ds.grid(), 5)?;
    let plan = PermutationPlan::random(cfg.seed, 999, ds.group_of())?;
    let nulls = NullStatMatrix::compute(&ds, &partition, &plan)?;
    let closure = combined_shortcut(&PermutationNodes::new(&nulls, PValueRule::AddOne));

    println!("interval  adjusted p");
    for h in &closure.hypotheses {
        println!(
            "{:>5}      {:.4} {}",
            h.index + 1,
            h.adjusted_p,
            if h.adjusted_p <= cfg.alpha {
                "<- flagged"
            } else {
                ""
            }
        );
    }

    let flagged: Vec<usize> = closure
        .hypotheses
        .iter()
        .filter(|h| h.adjusted_p <= cfg.alpha)
        .map(|h| h.index)
        .collect();
    for interval in flagged {
        let report = pairwise_followup(
            &ds,
            &partition,
            interval,
            closure.hypotheses[interval].adjusted_p,
            &plan,
            PValueRule::AddOne,
        )?;
        println!(
            "\npairwise comparisons in interval {} (top node pinned to {:.4}):",
            interval + 1,
            report.top_p
        );
        for pair in &report.pairs {
            let a = &report.group_names[pair.groups.0];
            let b = &report.group_names[pair.groups.1];
            let node = report.nodes[pair.achieving_node]
                .partition
                .label(&report.group_names);
            println!(
                "  {a} vs {b}: raw {:.4}  adjusted {:.4}  via {{{node}}}{}",
                pair.raw_p,
                pair.adjusted_p,
                if pair.adjusted_p <= cfg.alpha {
                    "  REJECT"
                } else {
                    ""
                }
            );
        }
    }
    Ok(())
}
