use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{record, Error, Result};

/// One CSV row: a per-frame label or prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameValue {
    pub video: String,
    pub frame: usize,
    pub value: f64,
}

fn render(header: [&str; 3], rows: &[FrameValue]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header).map_err(csv_io)?;
    for r in rows {
        w.serialize(r).map_err(csv_io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.into())
}

fn parse(text: &str, header: [&str; 3], source: &str) -> Result<Vec<FrameValue>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let found = r
        .headers()
        .map_err(|e| record(source, 1, e.to_string()))?
        .clone();
    if found.iter().ne(header) {
        return Err(record(
            source,
            1,
            format!("expected header {}", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    let mut seen = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| record(source, line, e.to_string()))?;
        let row: FrameValue = rec
            .deserialize(Some(&csv::StringRecord::from(vec![
                "video", "frame", "value",
            ])))
            .map_err(|e| record(source, line, e.to_string()))?;
        if !row.value.is_finite() {
            return Err(record(source, line, format!("{} is not finite", header[2])));
        }
        if seen.insert((row.video.clone(), row.frame), line).is_some() {
            return Err(record(
                source,
                line,
                format!("duplicate frame {} of {}", row.frame, row.video),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

const LABELS: [&str; 3] = ["video", "frame", "label"];
const PREDICTIONS: [&str; 3] = ["video", "frame", "prediction"];

pub fn write_labels(path: &Path, rows: &[FrameValue]) -> Result<()> {
    write_atomic(path, &render(LABELS, rows)?)
}

pub fn read_labels(path: &Path) -> Result<Vec<FrameValue>> {
    parse(
        &std::fs::read_to_string(path)?,
        LABELS,
        &path.display().to_string(),
    )
}

pub fn write_predictions(path: &Path, rows: &[FrameValue]) -> Result<()> {
    write_atomic(path, &render(PREDICTIONS, rows)?)
}

pub fn read_predictions(path: &Path) -> Result<Vec<FrameValue>> {
    parse(
        &std::fs::read_to_string(path)?,
        PREDICTIONS,
        &path.display().to_string(),
    )
}
