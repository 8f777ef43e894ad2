//! CSV / JSON emission of sweep rows.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use mirs::sim::SweepRow;

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Writes rows to `path`, or stdout when `None`. CSV header is
/// `variable,value,solver,mean_snr_db,stderr_db,trials`; JSON is an array of
/// objects with the same field names.
pub fn write_rows(rows: &[SweepRow], format: Format, path: Option<&Path>) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure::Io(e.to_string());
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(
            File::create(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let mut sink = BufWriter::new(sink);
    match format {
        Format::Csv => render_csv(rows, &mut sink).map_err(io_err)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, rows).map_err(|e| Failure::Io(e.to_string()))?;
            sink.write_all(b"\n").map_err(io_err)?;
        }
    }
    sink.flush().map_err(io_err)
}

pub fn render_csv<W: Write>(rows: &[SweepRow], sink: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    if rows.is_empty() {
        w.write_record(["variable", "value", "solver", "mean_snr_db", "stderr_db", "trials"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}
