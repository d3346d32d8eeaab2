//! Training log rows, one per finished episode.

use std::fmt::Write as _;
use std::path::Path;

use crate::metrics::fmt_value;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    /// Environment steps taken so far.
    pub iteration: usize,
    pub episode_return: f64,
    /// Latest TD loss (DQN) or surrogate value (TRPO); NaN before the first update.
    pub loss_or_surrogate: f64,
    /// Latest measured KL (TRPO only).
    pub kl: Option<f64>,
    /// Exploration rate (DQN) or mean policy standard deviation (TRPO).
    pub epsilon_or_std: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

impl TrainingLog {
    pub fn to_csv(&self) -> String {
        let cell = |v: f64| if v.is_nan() { String::new() } else { fmt_value(v) };
        let mut out = String::from("iteration,episode_return,loss_or_surrogate,kl,epsilon_or_std\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iteration,
                cell(r.episode_return),
                cell(r.loss_or_surrogate),
                r.kl.map(cell).unwrap_or_default(),
                cell(r.epsilon_or_std)
            );
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
