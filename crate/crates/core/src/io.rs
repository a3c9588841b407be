//! Text file formats.
//!
//! * Measurement CSV: header `m_0,...,m_{L-1}` optionally followed by
//!   `x,y[,z]` ground-truth columns, one row per measurement.
//! * Map/layout CSV: header `landmark_id,x,y[,z]`.
//! * Model CSV: a `# landmark2vec model L=<L> d=<d>` line, `L` rows of `d`
//!   values (`w_in`), a blank line, then `d` rows of `L` values (`w_out`).
//! * Training log: JSON lines, one record per epoch and a final
//!   `{"stop_reason":...}` record.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle is lossless.

use std::io::{self, BufRead, Write};

use serde::Serialize;
use thiserror::Error;

use crate::embedder::{EmbeddingModel, TrainLog};
use crate::error::Error;
use crate::measurement::{LandmarkMap, MeasurementSet, MeasurementVector};

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: Error },
}

fn parse_err(line: usize, message: impl Into<String>) -> ReadError {
    ReadError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_row(line_no: usize, line: &str, expected: usize) -> Result<Vec<f64>, ReadError> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != expected {
        return Err(parse_err(
            line_no,
            format!("expected {expected} fields, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| parse_err(line_no, format!("'{f}' is not a number")))
        })
        .collect()
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

const AXES: [&str; 3] = ["x", "y", "z"];

pub fn write_measurements<W: Write>(set: &MeasurementSet, mut w: W) -> io::Result<()> {
    let mut header: Vec<String> = (0..set.landmark_count())
        .map(|l| format!("m_{l}"))
        .collect();
    if let Some(dim) = set.coord_dim() {
        header.extend(AXES[..dim].iter().map(|s| s.to_string()));
    }
    writeln!(w, "{}", header.join(","))?;
    for (i, m) in set.measurements().iter().enumerate() {
        match set.coords() {
            Some(coords) => writeln!(w, "{},{}", join(m.values()), join(&coords[i]))?,
            None => writeln!(w, "{}", join(m.values()))?,
        }
    }
    w.flush()
}

/// Reads a measurement CSV. Line numbers in errors are 1-based and count the
/// header.
pub fn read_measurements<R: BufRead>(r: R) -> Result<MeasurementSet, ReadError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty file"))??;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let landmarks = cols.iter().take_while(|c| c.starts_with("m_")).count();
    for (l, c) in cols[..landmarks].iter().enumerate() {
        if *c != format!("m_{l}") {
            return Err(parse_err(
                1,
                format!("column {l} is '{c}', expected 'm_{l}'"),
            ));
        }
    }
    let dim = cols.len() - landmarks;
    if landmarks < 2 {
        return Err(parse_err(1, "need at least 2 measurement columns m_0, m_1"));
    }
    if dim != 0 && (!(2..=3).contains(&dim) || cols[landmarks..] != AXES[..dim]) {
        return Err(parse_err(1, "trailing columns must be x,y or x,y,z"));
    }

    let mut measurements = Vec::new();
    let mut coords = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = parse_row(line_no, &line, landmarks + dim)?;
        if dim > 0 {
            coords.push(row.split_off(landmarks));
        }
        let m = MeasurementVector::new(row).map_err(|source| ReadError::Invalid {
            line: line_no,
            source,
        })?;
        measurements.push(m);
    }
    let set = MeasurementSet::new(landmarks, measurements)
        .map_err(|source| ReadError::Invalid { line: 1, source })?;
    if dim > 0 {
        set.with_coords(coords)
            .map_err(|source| ReadError::Invalid { line: 1, source })
    } else {
        Ok(set)
    }
}

pub fn write_map<W: Write>(map: &LandmarkMap, mut w: W) -> io::Result<()> {
    writeln!(w, "landmark_id,{}", AXES[..map.dim()].join(","))?;
    for (id, p) in map.ids().iter().zip(map.coords()) {
        writeln!(w, "{id},{}", join(p))?;
    }
    w.flush()
}

pub fn read_map<R: BufRead>(r: R) -> Result<LandmarkMap, ReadError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| parse_err(1, "empty file"))??;
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let dim = cols.len().saturating_sub(1);
    if cols.first() != Some(&"landmark_id") || !(2..=3).contains(&dim) || cols[1..] != AXES[..dim] {
        return Err(parse_err(
            1,
            "header must be landmark_id,x,y or landmark_id,x,y,z",
        ));
    }
    let mut ids = Vec::new();
    let mut coords = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = line
            .split_once(',')
            .ok_or_else(|| parse_err(line_no, "missing coordinates"))?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("'{id}' is not a landmark id")))?;
        if ids.contains(&id) {
            return Err(parse_err(line_no, format!("duplicate landmark id {id}")));
        }
        ids.push(id);
        coords.push(parse_row(line_no, rest, dim)?);
    }
    LandmarkMap::with_ids(dim, ids, coords).map_err(|source| ReadError::Invalid { line: 1, source })
}

pub fn write_model<W: Write>(model: &EmbeddingModel, mut w: W) -> io::Result<()> {
    let (n, d) = (model.landmark_count(), model.dim());
    writeln!(w, "# landmark2vec model L={n} d={d}")?;
    for row in model.w_in().chunks(d) {
        writeln!(w, "{}", join(row))?;
    }
    writeln!(w)?;
    for row in model.w_out().chunks(n) {
        writeln!(w, "{}", join(row))?;
    }
    w.flush()
}

pub fn read_model<R: BufRead>(r: R) -> Result<EmbeddingModel, ReadError> {
    let lines: Vec<String> = r.lines().collect::<io::Result<_>>()?;
    let header = lines.first().ok_or_else(|| parse_err(1, "empty file"))?;
    let parsed = header
        .trim()
        .strip_prefix("# landmark2vec model L=")
        .and_then(|rest| rest.split_once(" d="))
        .and_then(|(l, d)| Some((l.parse::<usize>().ok()?, d.parse::<usize>().ok()?)));
    let (n, d) =
        parsed.ok_or_else(|| parse_err(1, "expected '# landmark2vec model L=<L> d=<d>'"))?;

    let expected_lines = 1 + n + 1 + d;
    let body: Vec<&String> = lines.iter().collect();
    if body.len() < expected_lines || body[expected_lines..].iter().any(|l| !l.trim().is_empty()) {
        return Err(parse_err(
            body.len().min(expected_lines),
            format!("expected {n} w_in rows, a blank line and {d} w_out rows"),
        ));
    }
    let mut w_in = Vec::with_capacity(n * d);
    for (i, line) in body[1..=n].iter().enumerate() {
        w_in.extend(parse_row(i + 2, line, d)?);
    }
    if !body[n + 1].trim().is_empty() {
        return Err(parse_err(
            n + 2,
            "expected a blank line between w_in and w_out",
        ));
    }
    let mut w_out = Vec::with_capacity(d * n);
    for (i, line) in body[n + 2..n + 2 + d].iter().enumerate() {
        w_out.extend(parse_row(n + 3 + i, line, n)?);
    }
    EmbeddingModel::from_weights(n, d, w_in, w_out)
        .map_err(|source| ReadError::Invalid { line: 1, source })
}

#[derive(Serialize)]
struct EpochLine {
    epoch: usize,
    train_loss: f64,
    val_loss: f64,
}

#[derive(Serialize)]
struct StopLine<'a> {
    stop_reason: &'a str,
}

/// Writes the training log as JSON lines. Wall-clock times are left out so
/// that the file is reproducible byte for byte.
pub fn write_train_log<W: Write>(log: &TrainLog, mut w: W) -> io::Result<()> {
    for r in &log.epochs {
        let line = EpochLine {
            epoch: r.epoch,
            train_loss: r.train_loss,
            val_loss: r.val_loss,
        };
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    let stop = StopLine {
        stop_reason: log.stop_reason.as_str(),
    };
    writeln!(w, "{}", serde_json::to_string(&stop)?)?;
    w.flush()
}
