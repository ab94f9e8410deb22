//! What to sweep: channel, mode, grids, seeds and protocol parameters.
//!
//! A sweep covers a list of cells. In baseline mode a cell is a learning
//! length `L`; in GAN mode a cell is a pair of a real learning length
//! (written `Lhat` here) and a synthetic slot count `n`, with every
//! `(Lhat, n)` grid combination visited. Each cell runs `seeds` times with
//! replicate seeds fanned out from the master seed.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use coexsim_core::channel::{ChannelKind, FadingGranularity};
use coexsim_core::gan::GanConfig;
use coexsim_core::sensing::ClassifierConfig;
use coexsim_core::FrameConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    NoGan,
    Gan,
}

impl SweepMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepMode::NoGan => "no-gan",
            SweepMode::Gan => "gan",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "no-gan" => Ok(SweepMode::NoGan),
            "gan" => Ok(SweepMode::Gan),
            other => bail!("unknown mode {other:?}, expected no-gan or gan"),
        }
    }
}

/// One cell of a sweep: real learning slots plus synthetic slots (zero in
/// baseline mode).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub learning_slots: usize,
    pub synthetic_slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub channel: ChannelKind,
    pub mode: SweepMode,
    /// Learning lengths for baseline cells, used when `mode` is `no-gan`.
    pub l_grid: Vec<usize>,
    /// Real learning lengths for GAN cells, used when `mode` is `gan`.
    pub lhat_grid: Vec<usize>,
    /// Synthetic slot counts, crossed with `lhat_grid`.
    pub n_grid: Vec<usize>,
    /// Replicates per cell.
    pub seeds: u64,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub fading: FadingGranularity,
    /// Fresh ground-truth evaluation samples per class and trial.
    pub eval_per_class: usize,
    pub frame: FrameConfig,
    pub classifier: ClassifierConfig,
    pub gan: GanConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            channel: ChannelKind::Awgn,
            mode: SweepMode::NoGan,
            l_grid: (15..=50).step_by(5).collect(),
            lhat_grid: vec![10],
            n_grid: (5..=40).step_by(5).collect(),
            seeds: 10,
            master_seed: 7,
            out_dir: PathBuf::from("results"),
            fading: FadingGranularity::PerSlot,
            eval_per_class: 2000,
            frame: FrameConfig::default(),
            classifier: ClassifierConfig::default(),
            gan: GanConfig::default(),
        }
    }
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading sweep config {}", path.display()))?;
        let spec: SweepSpec = toml::from_str(&text)
            .with_context(|| format!("parsing sweep config {}", path.display()))?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.frame.validate()?;
        self.gan.validate()?;
        if self.seeds == 0 {
            bail!("seeds must be at least 1");
        }
        if self.eval_per_class == 0 {
            bail!("eval_per_class must be at least 1");
        }
        let cells = self.cells();
        if cells.is_empty() {
            bail!(
                "empty {} grid: set {}",
                self.mode.as_str(),
                match self.mode {
                    SweepMode::NoGan => "l_grid",
                    SweepMode::Gan => "lhat_grid and n_grid",
                }
            );
        }
        let max_slots = self.frame.slots_per_frame();
        for cell in &cells {
            if cell.learning_slots == 0 || cell.learning_slots >= max_slots {
                bail!(
                    "cell L={} leaves no transmission slots (frame has {max_slots})",
                    cell.learning_slots
                );
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        match self.mode {
            SweepMode::NoGan => self
                .l_grid
                .iter()
                .map(|&l| Cell {
                    learning_slots: l,
                    synthetic_slots: 0,
                })
                .collect(),
            SweepMode::Gan => self
                .lhat_grid
                .iter()
                .flat_map(|&lhat| {
                    self.n_grid.iter().map(move |&n| Cell {
                        learning_slots: lhat,
                        synthetic_slots: n,
                    })
                })
                .collect(),
        }
    }

    /// Where this sweep streams its trial rows.
    pub fn output_path(&self) -> PathBuf {
        self.out_dir.join(format!(
            "trials-{}-{}.csv",
            self.channel.as_str(),
            self.mode.as_str()
        ))
    }
}
