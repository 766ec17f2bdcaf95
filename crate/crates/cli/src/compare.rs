//! Cross-run comparison: per-round mean curves and final-round deltas.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::runner::ROUNDS_CSV;

pub const CURVES_CSV: &str = "curves.csv";
pub const DELTAS_CSV: &str = "deltas.csv";

#[derive(Debug, thiserror::Error)]
pub enum CompareError {
    #[error("compare needs at least two run directories")]
    TooFew,
    #[error("{0} is not a completed run directory (no {ROUNDS_CSV})")]
    Missing(PathBuf),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0} contains no rounds")]
    Empty(PathBuf),
    #[error("writing comparison: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Deserialize)]
struct RoundRow {
    algo: String,
    round: usize,
    test_acc: f64,
    test_loss: f64,
}

/// Seed-averaged curve of one algorithm in one run directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub acc: Vec<f64>,
    pub loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta {
    pub series: String,
    pub final_acc: f64,
    pub final_loss: f64,
    /// Final accuracy minus the first series', in percentage points.
    pub delta_acc_pp: f64,
    pub delta_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub series: Vec<Series>,
    /// Common number of rounds every series was truncated to.
    pub rounds: usize,
    /// True when the inputs had different round counts.
    pub truncated: bool,
    pub deltas: Vec<Delta>,
}

fn run_label(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn load_series(dir: &Path) -> Result<Vec<Series>, CompareError> {
    let path = dir.join(ROUNDS_CSV);
    let csv_err = |source| CompareError::Csv {
        path: path.clone(),
        source,
    };
    let mut rdr = csv::Reader::from_path(&path).map_err(csv_err)?;
    // algo -> round -> (acc sum, loss sum, count)
    let mut acc: BTreeMap<String, BTreeMap<usize, (f64, f64, usize)>> = BTreeMap::new();
    let mut order = Vec::new();
    for row in rdr.deserialize::<RoundRow>() {
        let row = row.map_err(csv_err)?;
        if !acc.contains_key(&row.algo) {
            order.push(row.algo.clone());
        }
        let e = acc
            .entry(row.algo)
            .or_default()
            .entry(row.round)
            .or_insert((0.0, 0.0, 0));
        e.0 += row.test_acc;
        e.1 += row.test_loss;
        e.2 += 1;
    }
    if order.is_empty() {
        return Err(CompareError::Empty(dir.to_path_buf()));
    }
    let label = run_label(dir);
    Ok(order
        .into_iter()
        .map(|algo| {
            let rounds = &acc[&algo];
            Series {
                label: format!("{label}/{algo}"),
                acc: rounds.values().map(|(a, _, n)| a / *n as f64).collect(),
                loss: rounds.values().map(|(_, l, n)| l / *n as f64).collect(),
            }
        })
        .collect())
}

/// Loads every run directory first, so a missing one fails before anything is computed.
pub fn compare(dirs: &[PathBuf]) -> Result<Comparison, CompareError> {
    if dirs.len() < 2 {
        return Err(CompareError::TooFew);
    }
    if let Some(bad) = dirs.iter().find(|d| !d.join(ROUNDS_CSV).is_file()) {
        return Err(CompareError::Missing(bad.clone()));
    }
    let mut series = Vec::new();
    for d in dirs {
        series.extend(load_series(d)?);
    }
    let rounds = series.iter().map(|s| s.acc.len()).min().unwrap_or(0);
    let truncated = series.iter().any(|s| s.acc.len() != rounds);
    for s in &mut series {
        s.acc.truncate(rounds);
        s.loss.truncate(rounds);
    }
    let last = |v: &[f64]| v.last().copied().unwrap_or(f64::NAN);
    let (base_acc, base_loss) = (last(&series[0].acc), last(&series[0].loss));
    let deltas = series
        .iter()
        .map(|s| Delta {
            series: s.label.clone(),
            final_acc: last(&s.acc),
            final_loss: last(&s.loss),
            delta_acc_pp: 100.0 * (last(&s.acc) - base_acc),
            delta_loss: last(&s.loss) - base_loss,
        })
        .collect();
    Ok(Comparison {
        series,
        rounds,
        truncated,
        deltas,
    })
}

impl Comparison {
    /// Writes `curves.csv` (round, then accuracy and loss per series) and `deltas.csv`.
    pub fn write(&self, out: &Path) -> Result<(), CompareError> {
        fs::create_dir_all(out)?;
        let mut text = String::from("round");
        for s in &self.series {
            text.push_str(&format!(",{0}:acc,{0}:loss", s.label));
        }
        text.push('\n');
        for r in 0..self.rounds {
            text.push_str(&(r + 1).to_string());
            for s in &self.series {
                text.push_str(&format!(",{},{}", s.acc[r], s.loss[r]));
            }
            text.push('\n');
        }
        fs::write(out.join(CURVES_CSV), text)?;
        let path = out.join(DELTAS_CSV);
        let mut w = csv::Writer::from_path(&path).map_err(|source| CompareError::Csv {
            path: path.clone(),
            source,
        })?;
        for d in &self.deltas {
            w.serialize(d).map_err(|source| CompareError::Csv {
                path: path.clone(),
                source,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<32} {:>10} {:>10} {:>10}\n",
            "series", "final acc", "final loss", "delta pp"
        );
        for d in &self.deltas {
            out.push_str(&format!(
                "{:<32} {:>10.4} {:>10.4} {:>+10.2}\n",
                d.series, d.final_acc, d.final_loss, d.delta_acc_pp
            ));
        }
        out
    }
}
