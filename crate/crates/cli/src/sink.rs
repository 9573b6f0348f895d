use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use g2flow::bryant::IsometricState;
use g2flow::diagnostics::{DiagnosticsRecord, Event};
use g2flow::{Error, Result};
use g2flow::flow::RunSink;
use g2flow::grid::write_checkpoint;

/// Streams records to `diagnostics.ndjson` and checkpoints to `checkpoints/`.
pub struct FileSink {
    records: BufWriter<File>,
    checkpoint_dir: PathBuf,
    pub events: Vec<Event>,
    pub last_checkpoint: Option<PathBuf>,
}

impl FileSink {
    pub fn create(dir: &Path) -> Result<Self> {
        let checkpoint_dir = dir.join("checkpoints");
        fs::create_dir_all(&checkpoint_dir)?;
        Ok(FileSink {
            records: BufWriter::new(File::create(dir.join("diagnostics.ndjson"))?),
            checkpoint_dir,
            events: Vec::new(),
            last_checkpoint: None,
        })
    }

    pub fn flush(&mut self) -> Result<()> {
        self.records.flush()?;
        Ok(())
    }
}

impl RunSink for FileSink {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        let line = serde_json::to_string(rec).map_err(|e| Error::Config(e.to_string()))?;
        writeln!(self.records, "{line}")?;
        self.events.extend(rec.events.iter().cloned());
        Ok(())
    }

    fn checkpoint(&mut self, step: usize, state: &IsometricState) -> Result<()> {
        let path = self.checkpoint_dir.join(format!("step_{step:08}.g2cp"));
        write_checkpoint(BufWriter::new(File::create(&path)?), &state.f, &state.x)?;
        self.last_checkpoint = Some(path);
        Ok(())
    }
}
