//! Display-only SVG plots: group mean curves and power curves.

use crate::curves::{group_means, FunctionalDataset, GroupMeans};
use crate::simulate::PowerTable;
use crate::stats::IntervalPartition;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 45.0;

const PALETTE: [&str; 8] = [
    "#1b6ca8", "#d1495b", "#66a182", "#edae49", "#775dd0", "#00b3ad", "#8a5a44", "#536878",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: (f64, f64), ys: (f64, f64)) -> Self {
        let pad = 0.05 * (ys.1 - ys.0).max(1e-12);
        Self {
            x0: xs.0,
            x1: xs.1,
            y0: ys.0 - pad,
            y1: ys.1 + pad,
        }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    )
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn axes(frame: &Frame, x_label: &str, y_label: &str) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let left = MARGIN_LEFT;
    let right = WIDTH - MARGIN_RIGHT;
    let bottom = HEIGHT - MARGIN_BOTTOM;
    let _ = writeln!(
        out,
        "<line class=\"axis\" x1=\"{left}\" y1=\"{bottom}\" x2=\"{right}\" y2=\"{bottom}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        out,
        "<line class=\"axis\" x1=\"{left}\" y1=\"{MARGIN_TOP}\" x2=\"{left}\" y2=\"{bottom}\" stroke=\"black\"/>"
    );
    for i in 0..=4 {
        let fx = frame.x0 + i as f64 / 4.0 * (frame.x1 - frame.x0);
        let fy = frame.y0 + i as f64 / 4.0 * (frame.y1 - frame.y0);
        let _ = writeln!(
            out,
            "<text class=\"tick\" x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">{:.3}</text>",
            frame.x(fx),
            bottom + 14.0,
            fx
        );
        let _ = writeln!(
            out,
            "<text class=\"tick\" x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{:.3}</text>",
            left - 5.0,
            frame.y(fy) + 3.0,
            fy
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
        (left + right) / 2.0,
        HEIGHT - 8.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"14\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">{}</text>",
        (MARGIN_TOP + bottom) / 2.0,
        (MARGIN_TOP + bottom) / 2.0,
        xml_escape(y_label)
    );
    out
}

fn polyline(frame: &Frame, xs: &[f64], ys: &[f64], class: &str, id: &str, color: &str) -> String {
    let mut d = String::new();
    for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        d.push_str(&format!("{cmd}{:.2},{:.2} ", frame.x(*x), frame.y(*y)));
    }
    format!(
        "<path class=\"{class}\" data-series=\"{}\" d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
        xml_escape(id),
        d.trim_end()
    )
}

/// Render group mean curves with optional vertical rules at interval
/// boundaries.
pub fn render_group_means(
    grid: &[f64],
    means: &GroupMeans,
    names: &[String],
    boundaries: &[f64],
    title: &str,
) -> String {
    let ys = means
        .group
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let frame = Frame::new((grid[0], *grid.last().unwrap()), ys);
    let mut out = svg_open(title);
    out.push_str(&axes(&frame, "t", "group mean"));
    for (i, &b) in boundaries.iter().enumerate() {
        out.push_str(&format!(
            "<line class=\"interval-rule\" data-boundary=\"{i}\" x1=\"{x:.2}\" y1=\"{top}\" x2=\"{x:.2}\" y2=\"{bottom}\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n",
            x = frame.x(b),
            top = MARGIN_TOP,
            bottom = HEIGHT - MARGIN_BOTTOM,
        ));
    }
    for (g, mean) in means.group.iter().enumerate() {
        let color = PALETTE[g % PALETTE.len()];
        out.push_str(&polyline(
            &frame,
            grid,
            mean,
            "group-mean",
            &names[g],
            color,
        ));
        out.push_str(&format!(
            "<text class=\"legend\" x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">{}</text>\n",
            WIDTH - MARGIN_RIGHT - 120.0,
            MARGIN_TOP + 16.0 * (g as f64 + 1.0),
            xml_escape(&names[g])
        ));
    }
    out.push_str("</svg>\n");
    out
}

/// Group mean plot of a dataset, with the partition boundaries drawn as
/// vertical rules.
pub fn plot_means(
    ds: &FunctionalDataset,
    partition: Option<&IntervalPartition>,
    title: &str,
) -> String {
    let means = group_means(ds);
    let boundaries: Vec<f64> = partition
        .map(|p| {
            let mut b: Vec<f64> = p.intervals().iter().map(|iv| iv.a).collect();
            b.push(p.domain().1);
            b
        })
        .unwrap_or_default();
    render_group_means(ds.grid(), &means, ds.group_names(), &boundaries, title)
}

/// Rejection-rate curves against beta, one series per interval (and one per
/// pair within an interval when present).
pub fn plot_power(table: &PowerTable, title: &str) -> String {
    let mut betas: Vec<f64> = table.rows.iter().map(|r| r.beta).collect();
    betas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    betas.dedup();
    let mut series: Vec<(String, Vec<f64>)> = Vec::new();
    let mut keys: Vec<(usize, Option<(String, String)>)> = table
        .rows
        .iter()
        .map(|r| (r.interval, r.pair.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    for (interval, pair) in keys {
        let label = match &pair {
            Some((a, b)) => format!("interval {interval} {a}-{b}"),
            None => format!("interval {interval}"),
        };
        let values: Vec<f64> = betas
            .iter()
            .map(|&beta| {
                table
                    .rows
                    .iter()
                    .find(|r| r.beta == beta && r.interval == interval && r.pair == pair)
                    .map(|r| r.rate)
                    .unwrap_or(f64::NAN)
            })
            .collect();
        series.push((label, values));
    }

    let frame = Frame::new(
        (
            betas.first().copied().unwrap_or(0.0),
            betas.last().copied().unwrap_or(1.0).max(1e-9),
        ),
        (0.0, 1.0),
    );
    let mut out = svg_open(title);
    out.push_str(&axes(&frame, "beta", "rejection rate"));
    for (i, (label, values)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        out.push_str(&polyline(&frame, &betas, values, "power", label, color));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_series_per_group_and_rules_at_boundaries() {
        let grid: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let means = GroupMeans {
            group: vec![grid.iter().map(|t| t * 2.0).collect()],
            grand: grid.clone(),
        };
        let svg = render_group_means(
            &grid,
            &means,
            &["only".to_string()],
            &[0.0, 5.0, 10.0],
            "demo",
        );
        assert_eq!(svg.matches("class=\"group-mean\"").count(), 1);
        assert_eq!(svg.matches("class=\"interval-rule\"").count(), 3);

        // Boundary x-coordinates follow the linear map of the frame.
        let x_of = |v: f64| MARGIN_LEFT + (v - 0.0) / 10.0 * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT);
        for b in [0.0, 5.0, 10.0] {
            let needle = format!("x1=\"{:.2}\"", x_of(b));
            assert!(svg.contains(&needle), "missing rule at {b}: {needle}");
        }
    }

    #[test]
    fn k_groups_make_k_paths() {
        let grid: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let means = GroupMeans {
            group: vec![vec![1.0; 5], vec![2.0; 5], vec![3.0; 5]],
            grand: vec![2.0; 5],
        };
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let svg = render_group_means(&grid, &means, &names, &[], "three");
        assert_eq!(svg.matches("class=\"group-mean\"").count(), 3);
        assert!(svg.contains("data-series=\"b\""));
    }

    #[test]
    fn power_plot_has_one_series_per_key() {
        use crate::simulate::PowerRow;
        let table = PowerTable {
            nsim: 10,
            permutations: 10,
            rows: vec![
                PowerRow {
                    beta: 0.0,
                    interval: 1,
                    pair: None,
                    rate: 0.1,
                    mc_se: 0.0,
                },
                PowerRow {
                    beta: 0.5,
                    interval: 1,
                    pair: None,
                    rate: 0.9,
                    mc_se: 0.0,
                },
                PowerRow {
                    beta: 0.0,
                    interval: 2,
                    pair: None,
                    rate: 0.05,
                    mc_se: 0.0,
                },
                PowerRow {
                    beta: 0.5,
                    interval: 2,
                    pair: None,
                    rate: 0.2,
                    mc_se: 0.0,
                },
            ],
        };
        let svg = plot_power(&table, "power");
        assert_eq!(svg.matches("class=\"power\"").count(), 2);
    }
}
