//! Per-cell statistics and the GAN-vs-baseline comparison.
//!
//! Cells aggregate to means and standard deviations over their replicate
//! seeds. Every GAN cell is then matched against the baseline cell whose
//! learning length equals the GAN cell's total budget `Lhat + n`, and the
//! improvement ratio `(r_gan - r_base) / r_base * 100` is computed on the
//! mean analytic throughputs, so cells are only ever compared at equal
//! total learning time.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use coexsim_core::channel::ChannelKind;

use crate::runner::TrialResult;
use crate::spec::SweepMode;

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub channel: ChannelKind,
    pub mode: SweepMode,
    pub learning_slots: usize,
    pub synthetic_slots: usize,
    /// Total learning budget: `L` for baseline cells, `Lhat + n` for GAN
    /// cells; the matching axis between the two modes.
    pub budget: usize,
    pub trials: usize,
    pub mean_analytic_r: f64,
    pub std_analytic_r: f64,
    pub mean_empirical_r: f64,
    pub mean_p_fa: f64,
    pub mean_p_md: f64,
    pub std_p_md: f64,
    /// Throughput gain over the equal-budget baseline cell, in percent;
    /// present on GAN rows only.
    pub improvement_pct: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Folds trial rows into per-cell statistics. Fails when a GAN cell has no
/// equal-budget baseline cell to compare against.
pub fn aggregate(rows: &[TrialResult]) -> Result<Vec<AggregateRow>> {
    let mut cells: BTreeMap<(&'static str, SweepMode, usize, usize), Vec<&TrialResult>> =
        BTreeMap::new();
    for row in rows {
        cells
            .entry((
                row.channel.as_str(),
                row.mode,
                row.learning_slots,
                row.synthetic_slots,
            ))
            .or_default()
            .push(row);
    }

    let mut aggregates: Vec<AggregateRow> = cells
        .values()
        .map(|trials| {
            let first = trials[0];
            let collect = |f: fn(&TrialResult) -> f64| -> Vec<f64> {
                trials.iter().map(|t| f(t)).collect()
            };
            let (mean_analytic_r, std_analytic_r) = mean_std(&collect(|t| t.analytic_r));
            let (mean_empirical_r, _) = mean_std(&collect(|t| t.empirical_r));
            let (mean_p_fa, _) = mean_std(&collect(|t| t.p_fa));
            let (mean_p_md, std_p_md) = mean_std(&collect(|t| t.p_md));
            AggregateRow {
                channel: first.channel,
                mode: first.mode,
                learning_slots: first.learning_slots,
                synthetic_slots: first.synthetic_slots,
                budget: first.budget(),
                trials: trials.len(),
                mean_analytic_r,
                std_analytic_r,
                mean_empirical_r,
                mean_p_fa,
                mean_p_md,
                std_p_md,
                improvement_pct: None,
            }
        })
        .collect();

    let baselines: BTreeMap<(&'static str, usize), f64> = aggregates
        .iter()
        .filter(|a| a.mode == SweepMode::NoGan)
        .map(|a| ((a.channel.as_str(), a.budget), a.mean_analytic_r))
        .collect();
    for agg in &mut aggregates {
        if agg.mode != SweepMode::Gan {
            continue;
        }
        let Some(&base) = baselines.get(&(agg.channel.as_str(), agg.budget)) else {
            bail!(
                "GAN cell {} Lhat={} n={} has no baseline cell at L={}",
                agg.channel.as_str(),
                agg.learning_slots,
                agg.synthetic_slots,
                agg.budget
            );
        };
        agg.improvement_pct = Some((agg.mean_analytic_r - base) / base * 100.0);
    }
    Ok(aggregates)
}

/// The best GAN cell per real learning length, and overall, among cells
/// whose mean misdetection rate stays below the ceiling.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSelection {
    pub channel: ChannelKind,
    /// Per-Lhat winners; `None` when no cell of that Lhat satisfies the
    /// ceiling.
    pub per_lhat: Vec<(usize, Option<AggregateRow>)>,
    pub overall: Option<AggregateRow>,
}

fn better(candidate: &AggregateRow, incumbent: &AggregateRow) -> bool {
    if candidate.mean_analytic_r != incumbent.mean_analytic_r {
        return candidate.mean_analytic_r > incumbent.mean_analytic_r;
    }
    // Ties prefer fewer synthetic slots, then less real learning time.
    (candidate.synthetic_slots, candidate.learning_slots)
        < (incumbent.synthetic_slots, incumbent.learning_slots)
}

/// Applies the misdetection ceiling and picks the feasible GAN cell with
/// the highest mean throughput, per channel.
pub fn select_best(aggregates: &[AggregateRow], p_md_ceiling: f64) -> Vec<ChannelSelection> {
    let mut channels: Vec<ChannelKind> = Vec::new();
    for agg in aggregates {
        if agg.mode == SweepMode::Gan && !channels.contains(&agg.channel) {
            channels.push(agg.channel);
        }
    }
    channels
        .into_iter()
        .map(|channel| {
            let cells: Vec<&AggregateRow> = aggregates
                .iter()
                .filter(|a| a.channel == channel && a.mode == SweepMode::Gan)
                .collect();
            let mut lhats: Vec<usize> = cells.iter().map(|a| a.learning_slots).collect();
            lhats.sort_unstable();
            lhats.dedup();
            let pick = |pool: &[&AggregateRow]| -> Option<AggregateRow> {
                let mut best: Option<&AggregateRow> = None;
                for cell in pool.iter().filter(|a| a.mean_p_md < p_md_ceiling) {
                    if best.is_none_or(|b| better(cell, b)) {
                        best = Some(cell);
                    }
                }
                best.cloned()
            };
            let per_lhat = lhats
                .into_iter()
                .map(|lhat| {
                    let pool: Vec<&AggregateRow> = cells
                        .iter()
                        .copied()
                        .filter(|a| a.learning_slots == lhat)
                        .collect();
                    (lhat, pick(&pool))
                })
                .collect();
            ChannelSelection {
                channel,
                per_lhat,
                overall: pick(&cells),
            }
        })
        .collect()
}
