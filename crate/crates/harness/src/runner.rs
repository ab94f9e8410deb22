//! Trial execution and resumable CSV persistence.
//!
//! Every (cell, replicate) pair gets its own master seed, derived by a
//! stable hash of (sweep master seed, channel, mode, L, n, replicate), so
//! enlarging a grid never changes the draws of cells already present.
//! Completed rows stream to the output file as they finish; rerunning a
//! sweep skips rows that are already there, and the file is rewritten in
//! canonical row order at the end so equal sweeps produce equal bytes
//! regardless of scheduling.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use coexsim_core::channel::ChannelKind;
use coexsim_core::frame::{run_frame, RunOptions};
use coexsim_core::seed::{combine, StreamSeeder};
use rayon::prelude::*;

use crate::spec::{Cell, SweepMode, SweepSpec};

pub const TRIAL_HEADER: [&str; 10] = [
    "channel",
    "mode",
    "L",
    "n",
    "seed",
    "analytic_r",
    "empirical_r",
    "p_FA",
    "p_MD",
    "p_N",
];

/// One simulated frame, identified by its cell and replicate seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub channel: ChannelKind,
    pub mode: SweepMode,
    pub learning_slots: usize,
    pub synthetic_slots: usize,
    pub seed: u64,
    pub analytic_r: f64,
    pub empirical_r: f64,
    pub p_fa: f64,
    pub p_md: f64,
    pub p_n: f64,
}

impl TrialResult {
    pub fn key(&self) -> (ChannelKind, SweepMode, usize, usize, u64) {
        (
            self.channel,
            self.mode,
            self.learning_slots,
            self.synthetic_slots,
            self.seed,
        )
    }

    pub fn budget(&self) -> usize {
        self.learning_slots + self.synthetic_slots
    }

    fn to_record(self) -> Vec<String> {
        vec![
            self.channel.as_str().to_string(),
            self.mode.as_str().to_string(),
            self.learning_slots.to_string(),
            self.synthetic_slots.to_string(),
            self.seed.to_string(),
            fmt_float(self.analytic_r),
            fmt_float(self.empirical_r),
            fmt_float(self.p_fa),
            fmt_float(self.p_md),
            fmt_float(self.p_n),
        ]
    }

    fn from_record(record: &csv::StringRecord) -> Result<Self> {
        if record.len() != TRIAL_HEADER.len() {
            bail!("trial row has {} fields, expected {}", record.len(), TRIAL_HEADER.len());
        }
        let field = |i: usize| record.get(i).unwrap();
        Ok(Self {
            channel: parse_channel(field(0))?,
            mode: SweepMode::parse(field(1))?,
            learning_slots: field(2).parse().context("parsing L")?,
            synthetic_slots: field(3).parse().context("parsing n")?,
            seed: field(4).parse().context("parsing seed")?,
            analytic_r: field(5).parse().context("parsing analytic_r")?,
            empirical_r: field(6).parse().context("parsing empirical_r")?,
            p_fa: field(7).parse().context("parsing p_FA")?,
            p_md: field(8).parse().context("parsing p_MD")?,
            p_n: field(9).parse().context("parsing p_N")?,
        })
    }
}

/// Decimal-with-exponent float format, nine significant digits; stable
/// across runs and precise enough for any downstream aggregation.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn parse_channel(s: &str) -> Result<ChannelKind> {
    match s {
        "awgn" => Ok(ChannelKind::Awgn),
        "rayleigh" => Ok(ChannelKind::Rayleigh),
        other => bail!("unknown channel {other:?}, expected awgn or rayleigh"),
    }
}

/// Stable per-trial seed fan-out from the sweep master seed.
pub fn trial_seed(
    master: u64,
    channel: ChannelKind,
    mode: SweepMode,
    cell: Cell,
    replicate: u64,
) -> u64 {
    let channel_tag = match channel {
        ChannelKind::Awgn => 1,
        ChannelKind::Rayleigh => 2,
    };
    let mode_tag = match mode {
        SweepMode::NoGan => 1,
        SweepMode::Gan => 2,
    };
    combine(&[
        master,
        channel_tag,
        mode_tag,
        cell.learning_slots as u64,
        cell.synthetic_slots as u64,
        replicate,
    ])
}

/// Runs one frame simulation for the given cell and replicate.
pub fn run_trial(spec: &SweepSpec, cell: Cell, replicate: u64) -> Result<TrialResult> {
    let opts = RunOptions {
        learning_slots: cell.learning_slots,
        synthetic_slots: match spec.mode {
            SweepMode::NoGan => None,
            SweepMode::Gan => Some(cell.synthetic_slots),
        },
        channel: spec.channel,
        fading: spec.fading,
        eval_per_class: spec.eval_per_class,
        classifier: spec.classifier.clone(),
        gan: spec.gan.clone(),
    };
    let seed = trial_seed(spec.master_seed, spec.channel, spec.mode, cell, replicate);
    let report = run_frame(&spec.frame, &opts, &StreamSeeder::new(seed)).with_context(|| {
        format!(
            "trial {}/{} L={} n={} seed={replicate}",
            spec.channel.as_str(),
            spec.mode.as_str(),
            cell.learning_slots,
            cell.synthetic_slots
        )
    })?;
    Ok(TrialResult {
        channel: spec.channel,
        mode: spec.mode,
        learning_slots: cell.learning_slots,
        synthetic_slots: cell.synthetic_slots,
        seed: replicate,
        analytic_r: report.analytic_throughput,
        empirical_r: report.empirical_throughput,
        p_fa: report.metrics.false_alarm,
        p_md: report.metrics.misdetection,
        p_n: report.noise_failure_prob,
    })
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialResult>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let header = reader.headers()?.clone();
    if header.iter().ne(TRIAL_HEADER) {
        bail!(
            "{} does not look like a trial file (header {:?})",
            path.display(),
            header
        );
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(TrialResult::from_record(&record?)?);
    }
    Ok(rows)
}

/// Writes the rows in canonical order, atomically (write-then-rename).
pub fn write_trials(path: &Path, rows: &[TrialResult]) -> Result<()> {
    let mut sorted: Vec<TrialResult> = rows.to_vec();
    sorted.sort_by_key(|r| r.key());
    let tmp = path.with_extension("csv.tmp");
    {
        let file = File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        let mut writer = csv::Writer::from_writer(BufWriter::new(file));
        writer.write_record(TRIAL_HEADER)?;
        for row in &sorted {
            writer.write_record(row.to_record())?;
        }
        writer.flush()?;
    }
    std::fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} into place", tmp.display()))?;
    Ok(())
}

/// What a sweep did: the full row set plus how much work was new.
#[derive(Debug)]
pub struct SweepOutcome {
    /// All rows now in the output file, canonical order.
    pub rows: Vec<TrialResult>,
    /// Trials simulated by this invocation.
    pub executed: usize,
    /// Trials skipped because their rows were already present.
    pub reused: usize,
    /// Trials that failed (logged and left out of the output).
    pub failed: usize,
}

/// Runs every (cell, replicate) of the spec that is not already present in
/// the output file. Rows stream to disk as trials finish; afterwards the
/// file is rewritten in canonical order.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutcome> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.out_dir)
        .with_context(|| format!("creating {}", spec.out_dir.display()))?;
    let path = spec.output_path();
    let existing = if path.exists() {
        read_trials(&path)?
    } else {
        Vec::new()
    };
    let done: HashSet<_> = existing.iter().map(|r| r.key()).collect();

    let pending: Vec<(Cell, u64)> = spec
        .cells()
        .into_iter()
        .flat_map(|cell| (0..spec.seeds).map(move |rep| (cell, rep)))
        .filter(|&(cell, rep)| {
            !done.contains(&(
                spec.channel,
                spec.mode,
                cell.learning_slots,
                cell.synthetic_slots,
                rep,
            ))
        })
        .collect();
    let reused = spec.cells().len() * spec.seeds as usize - pending.len();

    // Stream rows through one append-mode writer as trials complete, so an
    // interrupted sweep keeps everything finished so far.
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .with_context(|| format!("opening {}", path.display()))?;
    let need_header = file.metadata()?.len() == 0;
    let mut stream = csv::Writer::from_writer(BufWriter::new(file));
    if need_header {
        stream.write_record(TRIAL_HEADER)?;
        stream.flush()?;
    }
    let stream = Mutex::new(stream);
    let fresh = Mutex::new(Vec::with_capacity(pending.len()));
    let failed = Mutex::new(0usize);

    pending.par_iter().for_each(|&(cell, rep)| {
        match run_trial(spec, cell, rep) {
            Ok(row) => {
                let mut writer = stream.lock().unwrap();
                writer
                    .write_record(row.to_record())
                    .and_then(|()| writer.flush().map_err(Into::into))
                    .expect("writing trial row");
                drop(writer);
                fresh.lock().unwrap().push(row);
            }
            Err(err) => {
                // Deterministic per-trial failures (for instance a learning
                // phase that never saw one of the classes) are logged and
                // excluded; the cell aggregates over its surviving rows.
                eprintln!("skipping failed {err:#}");
                *failed.lock().unwrap() += 1;
            }
        }
    });
    stream.into_inner().unwrap().flush()?;

    let failed = failed.into_inner().unwrap();
    let mut rows = existing;
    rows.extend(fresh.into_inner().unwrap());
    rows.sort_by_key(|r| r.key());
    write_trials(&path, &rows)?;
    Ok(SweepOutcome {
        executed: pending.len() - failed,
        reused,
        failed,
        rows,
    })
}
