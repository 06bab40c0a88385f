use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of the loss log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: usize,
    pub loss: String,
    pub value: f64,
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

/// Write `(iteration, loss, value)` rows, replacing any existing file.
pub fn write_loss_log(path: &Path, records: &[LossRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in records {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_loss_log(path: &Path) -> Result<Vec<LossRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

/// Mean of the named loss over the first or last `window` logged values.
pub fn window_mean(records: &[LossRecord], loss: &str, window: usize, from_end: bool) -> Option<f64> {
    let values: Vec<f64> = records.iter().filter(|r| r.loss == loss).map(|r| r.value).collect();
    if values.is_empty() {
        return None;
    }
    let w = window.clamp(1, values.len());
    let slice = if from_end { &values[values.len() - w..] } else { &values[..w] };
    Some(slice.iter().sum::<f64>() / w as f64)
}
