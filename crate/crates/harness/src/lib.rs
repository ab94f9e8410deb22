//! Sweep driver around the frame simulator: runs seeded (cell, replicate)
//! grids, persists per-trial rows as CSV, folds them into per-cell
//! statistics with GAN-vs-baseline improvement ratios, and renders summary
//! tables.
//!
//! Module map:
//! - [`spec`]: sweep descriptions (channel, mode, grids, seeds) and their
//!   TOML form.
//! - [`runner`]: trial execution, seed fan-out, resumable CSV output.
//! - [`aggregate`]: per-cell means, matched-budget improvement ratios and
//!   best-cell selection under a misdetection ceiling.
//! - [`tables`]: statistics CSV, side-by-side markdown tables and plot
//!   data.

pub mod aggregate;
pub mod runner;
pub mod spec;
pub mod tables;
