use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use coexsim_harness::aggregate::{aggregate, select_best, ChannelSelection};
use coexsim_harness::runner::{parse_channel, read_trials, run_sweep, TrialResult};
use coexsim_harness::spec::{SweepMode, SweepSpec};
use coexsim_harness::tables::{
    read_aggregates, write_aggregates_csv, write_markdown, write_plot_data,
};

#[derive(Parser)]
#[command(name = "coexsim", about = "Spectrum coexistence sweep driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) a trial sweep and append rows to the trials CSV.
    Sweep(SweepArgs),
    /// Summarise one or more trials CSVs into per-cell statistics.
    Aggregate(AggregateArgs),
    /// Pick the highest-throughput GAN cell under a misdetection ceiling.
    Best(BestArgs),
    /// Render markdown tables and plot data from per-cell statistics.
    Tables(TablesArgs),
}

#[derive(clap::Args)]
struct SweepArgs {
    /// TOML sweep description; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Channel model: awgn or rayleigh.
    #[arg(long)]
    channel: Option<String>,
    /// Sweep mode: no-gan or gan.
    #[arg(long)]
    mode: Option<String>,
    /// Learning-slot grid for no-gan sweeps, comma separated.
    #[arg(long = "L", value_delimiter = ',')]
    l_grid: Option<Vec<usize>>,
    /// Real learning-slot grid for gan sweeps, comma separated.
    #[arg(long = "Lhat", value_delimiter = ',')]
    lhat_grid: Option<Vec<usize>>,
    /// Synthetic-slot grid for gan sweeps, comma separated.
    #[arg(long = "n-grid", value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    /// Replicates per cell.
    #[arg(long)]
    seeds: Option<u64>,
    /// Master seed for the whole sweep.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Output directory for the trials CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct AggregateArgs {
    /// Trials CSVs produced by the sweep command.
    #[arg(required = true)]
    trials: Vec<PathBuf>,
    /// Where to write the statistics CSV.
    #[arg(long, default_value = "stats.csv")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct BestArgs {
    /// Statistics CSV produced by the aggregate command.
    #[arg(long)]
    stats: PathBuf,
    /// Misdetection ceiling the selected cell must stay strictly under.
    #[arg(long, default_value_t = 0.10)]
    ceiling: f64,
}

#[derive(clap::Args)]
struct TablesArgs {
    /// Statistics CSV produced by the aggregate command.
    #[arg(long)]
    stats: PathBuf,
    /// Directory for summary.md and improvement.csv.
    #[arg(long, default_value = "tables")]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Sweep(args) => sweep(args),
        Command::Aggregate(args) => aggregate_cmd(args),
        Command::Best(args) => best(args),
        Command::Tables(args) => tables(args),
    }
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut spec = match &args.config {
        Some(path) => SweepSpec::load(path)?,
        None => SweepSpec::default(),
    };
    if let Some(channel) = &args.channel {
        spec.channel = parse_channel(channel)?;
    }
    if let Some(mode) = &args.mode {
        spec.mode = SweepMode::parse(mode)?;
    }
    if let Some(l_grid) = args.l_grid {
        spec.l_grid = l_grid;
    }
    if let Some(lhat_grid) = args.lhat_grid {
        spec.lhat_grid = lhat_grid;
    }
    if let Some(n_grid) = args.n_grid {
        spec.n_grid = n_grid;
    }
    if let Some(seeds) = args.seeds {
        spec.seeds = seeds;
    }
    if let Some(master_seed) = args.master_seed {
        spec.master_seed = master_seed;
    }
    if let Some(out) = args.out {
        spec.out_dir = out;
    }
    let outcome = run_sweep(&spec)?;
    println!(
        "ran {} new trials ({} already present, {} failed); {} rows in {}",
        outcome.executed,
        outcome.reused,
        outcome.failed,
        outcome.rows.len(),
        spec.output_path().display(),
    );
    Ok(())
}

fn aggregate_cmd(args: AggregateArgs) -> Result<()> {
    let mut rows: Vec<TrialResult> = Vec::new();
    for path in &args.trials {
        rows.extend(read_trials(path).with_context(|| format!("reading {}", path.display()))?);
    }
    let aggregates = aggregate(&rows)?;
    write_aggregates_csv(&args.out, &aggregates)?;
    println!(
        "aggregated {} trials into {} cells at {}",
        rows.len(),
        aggregates.len(),
        args.out.display(),
    );
    Ok(())
}

fn best(args: BestArgs) -> Result<()> {
    let aggregates = read_aggregates(&args.stats)?;
    let selections = select_best(&aggregates, args.ceiling);
    if selections.is_empty() {
        println!("no GAN cells found in {}", args.stats.display());
        return Ok(());
    }
    for selection in &selections {
        print_selection(selection, args.ceiling);
    }
    Ok(())
}

fn print_selection(selection: &ChannelSelection, ceiling: f64) {
    println!(
        "{}: best cells under mean p_MD < {:.2}%",
        selection.channel.as_str(),
        ceiling * 100.0,
    );
    for (lhat, cell) in &selection.per_lhat {
        match cell {
            Some(cell) => println!(
                "  Lhat={lhat}: n={} (budget {})  mean r {:.1}  mean p_MD {:.2}%",
                cell.synthetic_slots,
                cell.budget,
                cell.mean_analytic_r,
                cell.mean_p_md * 100.0,
            ),
            None => println!("  Lhat={lhat}: no cell under the ceiling"),
        }
    }
    match &selection.overall {
        Some(cell) => println!(
            "  overall: Lhat={} n={} (budget {})  mean r {:.1}  mean p_MD {:.2}%",
            cell.learning_slots,
            cell.synthetic_slots,
            cell.budget,
            cell.mean_analytic_r,
            cell.mean_p_md * 100.0,
        ),
        None => println!("  overall: no cell under the ceiling"),
    }
}

fn tables(args: TablesArgs) -> Result<()> {
    let aggregates = read_aggregates(&args.stats)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let summary = args.out.join("summary.md");
    let plot = args.out.join("improvement.csv");
    write_markdown(&summary, &aggregates)?;
    write_plot_data(&plot, &aggregates)?;
    println!("wrote {} and {}", summary.display(), plot.display());
    Ok(())
}
