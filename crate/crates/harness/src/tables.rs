//! Rendering aggregates: a statistics CSV, side-by-side markdown tables
//! and plot-ready improvement curves.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::aggregate::AggregateRow;
use crate::runner::{fmt_float, parse_channel};
use crate::spec::SweepMode;

pub const AGGREGATE_HEADER: [&str; 13] = [
    "channel",
    "mode",
    "L",
    "n",
    "budget",
    "trials",
    "mean_analytic_r",
    "std_analytic_r",
    "mean_empirical_r",
    "mean_p_FA",
    "mean_p_MD",
    "std_p_MD",
    "improvement_pct",
];

pub fn write_aggregates_csv(path: &Path, aggregates: &[AggregateRow]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer.write_record(AGGREGATE_HEADER)?;
    for agg in aggregates {
        writer.write_record([
            agg.channel.as_str().to_string(),
            agg.mode.as_str().to_string(),
            agg.learning_slots.to_string(),
            agg.synthetic_slots.to_string(),
            agg.budget.to_string(),
            agg.trials.to_string(),
            fmt_float(agg.mean_analytic_r),
            fmt_float(agg.std_analytic_r),
            fmt_float(agg.mean_empirical_r),
            fmt_float(agg.mean_p_fa),
            fmt_float(agg.mean_p_md),
            fmt_float(agg.std_p_md),
            agg.improvement_pct.map(fmt_float).unwrap_or_default(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_aggregates(path: &Path) -> Result<Vec<AggregateRow>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    if reader.headers()?.iter().ne(AGGREGATE_HEADER) {
        bail!("{} does not look like an aggregate file", path.display());
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap();
        rows.push(AggregateRow {
            channel: parse_channel(field(0))?,
            mode: SweepMode::parse(field(1))?,
            learning_slots: field(2).parse()?,
            synthetic_slots: field(3).parse()?,
            budget: field(4).parse()?,
            trials: field(5).parse()?,
            mean_analytic_r: field(6).parse()?,
            std_analytic_r: field(7).parse()?,
            mean_empirical_r: field(8).parse()?,
            mean_p_fa: field(9).parse()?,
            mean_p_md: field(10).parse()?,
            std_p_md: field(11).parse()?,
            improvement_pct: match field(12) {
                "" => None,
                v => Some(v.parse()?),
            },
        });
    }
    Ok(rows)
}

/// Side-by-side comparison per channel, one row per GAN cell against the
/// equal-budget baseline cell.
pub fn render_markdown(aggregates: &[AggregateRow]) -> String {
    let mut out = String::from("# Sweep summary\n");
    let mut channels: Vec<_> = aggregates.iter().map(|a| a.channel).collect();
    channels.sort_by_key(|c| c.as_str());
    channels.dedup();
    for channel in channels {
        out.push_str(&format!("\n## {} channel\n\n", channel.as_str()));
        out.push_str(
            "| budget | L | r | p_MD % | Lhat+n | r_gan | p_MD_gan % | improvement % |\n",
        );
        out.push_str("|---|---|---|---|---|---|---|---|\n");
        let mut gan_rows: Vec<&AggregateRow> = aggregates
            .iter()
            .filter(|a| a.channel == channel && a.mode == SweepMode::Gan)
            .collect();
        gan_rows.sort_by_key(|a| (a.budget, a.learning_slots));
        for gan in gan_rows {
            let base = aggregates.iter().find(|a| {
                a.channel == channel && a.mode == SweepMode::NoGan && a.budget == gan.budget
            });
            let (base_r, base_md) = base.map_or_else(
                || ("-".to_string(), "-".to_string()),
                |b| {
                    (
                        format!("{:.1}", b.mean_analytic_r),
                        format!("{:.2}", b.mean_p_md * 100.0),
                    )
                },
            );
            out.push_str(&format!(
                "| {} | {} | {} | {} | {}+{} | {:.1} | {:.2} | {} |\n",
                gan.budget,
                gan.budget,
                base_r,
                base_md,
                gan.learning_slots,
                gan.synthetic_slots,
                gan.mean_analytic_r,
                gan.mean_p_md * 100.0,
                gan.improvement_pct
                    .map_or_else(|| "-".to_string(), |v| format!("{v:+.2}")),
            ));
        }
        let baselines: Vec<&AggregateRow> = {
            let mut rows: Vec<&AggregateRow> = aggregates
                .iter()
                .filter(|a| a.channel == channel && a.mode == SweepMode::NoGan)
                .collect();
            rows.sort_by_key(|a| a.budget);
            rows
        };
        if !baselines.is_empty() {
            out.push_str("\nBaseline cells:\n\n");
            out.push_str("| L | r | p_FA % | p_MD % | trials |\n|---|---|---|---|---|\n");
            for b in baselines {
                out.push_str(&format!(
                    "| {} | {:.1} | {:.2} | {:.2} | {} |\n",
                    b.learning_slots,
                    b.mean_analytic_r,
                    b.mean_p_fa * 100.0,
                    b.mean_p_md * 100.0,
                    b.trials,
                ));
            }
        }
    }
    out
}

/// Plot-ready improvement curve: one row per GAN cell, x = total budget,
/// y = improvement percent.
pub fn write_plot_data(path: &Path, aggregates: &[AggregateRow]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    writer.write_record(["channel", "budget", "Lhat", "n", "improvement_pct"])?;
    let mut rows: Vec<&AggregateRow> = aggregates
        .iter()
        .filter(|a| a.mode == SweepMode::Gan && a.improvement_pct.is_some())
        .collect();
    rows.sort_by_key(|a| (a.channel.as_str(), a.budget, a.learning_slots));
    for a in rows {
        writer.write_record([
            a.channel.as_str().to_string(),
            a.budget.to_string(),
            a.learning_slots.to_string(),
            a.synthetic_slots.to_string(),
            fmt_float(a.improvement_pct.unwrap()),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_markdown(path: &Path, aggregates: &[AggregateRow]) -> Result<()> {
    let mut file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(render_markdown(aggregates).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use coexsim_core::channel::ChannelKind;

    fn sample_rows() -> Vec<AggregateRow> {
        vec![
            AggregateRow {
                channel: ChannelKind::Awgn,
                mode: SweepMode::NoGan,
                learning_slots: 50,
                synthetic_slots: 0,
                budget: 50,
                trials: 10,
                mean_analytic_r: 6814.0,
                std_analytic_r: 55.0,
                mean_empirical_r: 6800.0,
                mean_p_fa: 0.0125,
                mean_p_md: 0.1092,
                std_p_md: 0.01,
                improvement_pct: None,
            },
            AggregateRow {
                channel: ChannelKind::Awgn,
                mode: SweepMode::Gan,
                learning_slots: 15,
                synthetic_slots: 35,
                budget: 50,
                trials: 10,
                mean_analytic_r: 7192.0,
                std_analytic_r: 40.0,
                mean_empirical_r: 7150.0,
                mean_p_fa: 0.021,
                mean_p_md: 0.0717,
                std_p_md: 0.02,
                improvement_pct: Some(5.5474),
            },
        ]
    }

    #[test]
    fn aggregate_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        let rows = sample_rows();
        write_aggregates_csv(&path, &rows).unwrap();
        let back = read_aggregates(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].improvement_pct, None);
        assert!((back[1].improvement_pct.unwrap() - 5.5474).abs() < 1e-9);
        assert_eq!(back[1].mean_analytic_r, 7192.0);
    }

    #[test]
    fn markdown_pairs_cells_by_budget() {
        let md = render_markdown(&sample_rows());
        assert!(md.contains("## awgn channel"));
        // The GAN row sits next to the matched baseline and its ratio.
        assert!(md.contains("| 50 | 50 | 6814.0 | 10.92 | 15+35 | 7192.0 | 7.17 | +5.55 |"));
        // Baseline listing includes the false-alarm column.
        assert!(md.contains("| 50 | 6814.0 | 1.25 | 10.92 | 10 |"));
    }

    #[test]
    fn plot_data_lists_gan_cells_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plot.csv");
        write_plot_data(&path, &sample_rows()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "channel,budget,Lhat,n,improvement_pct");
        assert!(lines[1].starts_with("awgn,50,15,35,"));
    }
}
