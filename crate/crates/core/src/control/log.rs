use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ControlStep;
use crate::error::{io_err, Error, Result};

/// One scheduled correction, serialised as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub epoch: usize,
    pub selected: Vec<usize>,
    /// `(node, max TE in nats)` in node order.
    pub per_node_te: Vec<(usize, f64)>,
    pub wall_s: f64,
    pub pair_requests: usize,
}

impl From<&ControlStep> for DiagnosticRecord {
    fn from(step: &ControlStep) -> Self {
        DiagnosticRecord {
            epoch: step.selection.epoch,
            selected: step.selection.selected.clone(),
            per_node_te: step.correction.per_node_te.iter().map(|(&i, &v)| (i, v)).collect(),
            wall_s: step.wall_s,
            pair_requests: step.pair_requests,
        }
    }
}

/// Records kept in memory and optionally streamed to a file.
#[derive(Debug, Default)]
pub struct DiagnosticLog {
    records: Vec<DiagnosticRecord>,
    sink: Option<BufWriter<File>>,
}

impl DiagnosticLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    pub fn to_file(path: &Path) -> Result<Self> {
        let f = File::create(path).map_err(io_err(path))?;
        Ok(DiagnosticLog {
            records: Vec::new(),
            sink: Some(BufWriter::new(f)),
        })
    }

    pub fn record(&mut self, step: &ControlStep) -> Result<()> {
        let rec = DiagnosticRecord::from(step);
        if let Some(w) = &mut self.sink {
            let line = serde_json::to_string(&rec).map_err(|e| Error::Config(e.to_string()))?;
            writeln!(w, "{line}")
                .and_then(|_| w.flush())
                .map_err(|e| Error::Config(format!("writing diagnostic log: {e}")))?;
        }
        log::debug!(
            "TE step at epoch {}: {} nodes, {:.3}s",
            rec.epoch,
            rec.selected.len(),
            rec.wall_s
        );
        self.records.push(rec);
        Ok(())
    }

    pub fn records(&self) -> &[DiagnosticRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<DiagnosticRecord> {
        self.records
    }

    pub fn read(path: &Path) -> Result<Vec<DiagnosticRecord>> {
        let f = File::open(path).map_err(io_err(path))?;
        let mut out = Vec::new();
        for (n, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg: e.to_string(),
            })?;
            out.push(rec);
        }
        Ok(out)
    }
}
