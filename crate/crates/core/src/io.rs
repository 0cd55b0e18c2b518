//! Point sets, labels and dendrograms on disk.
//!
//! Points come as CSV (one point per row, optional header) or fvecs
//! (little-endian records of `[i32 d][d x f32]`). Dendrograms are written as
//! CSV with header `left_id,right_id,new_id,distance,size`, distances printed
//! with 17 significant digits so they read back bit-identical.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CentroidId, Dataset, Dendrogram, GeometryError, MergeRecord};
use crate::metrics::Clustering;

pub const DENDROGRAM_HEADER: &str = "left_id,right_id,new_id,distance,size";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: line {line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },
    #[error("{}: {source}", path.display())]
    Geometry {
        path: PathBuf,
        source: GeometryError,
    },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn parse(path: &Path, line: u64, msg: impl Into<String>) -> Self {
        IoError::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    /// True when the file itself could not be opened.
    pub fn is_not_found(&self) -> bool {
        matches!(self, IoError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointFormat {
    Csv,
    Fvecs,
}

impl PointFormat {
    /// `.fvecs` files are fvecs, everything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("fvecs") => PointFormat::Fvecs,
            _ => PointFormat::Csv,
        }
    }
}

pub fn load_points(path: &Path, format: PointFormat) -> Result<Dataset, IoError> {
    match format {
        PointFormat::Csv => load_csv(path),
        PointFormat::Fvecs => load_fvecs(path),
    }
}

fn load_csv(path: &Path) -> Result<Dataset, IoError> {
    let file = File::open(path).map_err(|e| IoError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            // a first row that is not numeric is a header
            Err(_) if first => {
                first = false;
                continue;
            }
            Err(e) => return Err(IoError::parse(path, line, format!("bad number: {e}"))),
        };
        first = false;
        if let Some(prev) = rows.first() {
            if prev.len() != row.len() {
                return Err(IoError::parse(
                    path,
                    line,
                    format!("row has {} values, expected {}", row.len(), prev.len()),
                ));
            }
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(IoError::parse(path, line, "non-finite value"));
        }
        rows.push(row);
    }
    Dataset::new(rows).map_err(|source| IoError::Geometry {
        path: path.to_path_buf(),
        source,
    })
}

fn load_fvecs(path: &Path) -> Result<Dataset, IoError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| IoError::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut at = 0;
    while at < bytes.len() {
        let record = rows.len() as u64;
        let head: [u8; 4] = bytes
            .get(at..at + 4)
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| IoError::parse(path, record, "truncated dimension field"))?;
        let d = i32::from_le_bytes(head);
        if d <= 0 {
            return Err(IoError::parse(
                path,
                record,
                format!("invalid dimension {d}"),
            ));
        }
        let d = d as usize;
        if let Some(prev) = rows.first() {
            if prev.len() != d {
                return Err(IoError::parse(
                    path,
                    record,
                    format!("record has dimension {d}, expected {}", prev.len()),
                ));
            }
        }
        let body = bytes
            .get(at + 4..at + 4 + 4 * d)
            .ok_or_else(|| IoError::parse(path, record, "truncated record"))?;
        let row: Vec<f64> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        if row.iter().any(|x| !x.is_finite()) {
            return Err(IoError::parse(path, record, "non-finite value"));
        }
        rows.push(row);
        at += 4 + 4 * d;
    }
    Dataset::new(rows).map_err(|source| IoError::Geometry {
        path: path.to_path_buf(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| IoError::io(path, e))
}

pub fn write_points_csv(data: &Dataset, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    for p in data.points() {
        let line: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(|e| IoError::io(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

/// Coordinates are narrowed to `f32`.
pub fn write_fvecs(data: &Dataset, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    let d = data.dim() as i32;
    for p in data.points() {
        w.write_all(&d.to_le_bytes())
            .map_err(|e| IoError::io(path, e))?;
        for &x in p.iter() {
            w.write_all(&(x as f32).to_le_bytes())
                .map_err(|e| IoError::io(path, e))?;
        }
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

/// Formats like C's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_dendrogram(dend: &Dendrogram, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    dendrogram_csv(dend, &mut w).map_err(|e| IoError::io(path, e))?;
    w.flush().map_err(|e| IoError::io(path, e))
}

pub fn dendrogram_csv<W: Write + ?Sized>(dend: &Dendrogram, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{DENDROGRAM_HEADER}")?;
    for m in dend.merges() {
        writeln!(
            w,
            "{},{},{},{},{}",
            m.left_id,
            m.right_id,
            m.new_id,
            fmt_g17(m.distance),
            m.new_size
        )?;
    }
    Ok(())
}

/// Reads a dendrogram CSV back. The leaf count is the first merge's new id.
pub fn read_dendrogram(path: &Path) -> Result<Dendrogram, IoError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| IoError::io(path, e))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == DENDROGRAM_HEADER => {}
        _ => {
            return Err(IoError::parse(
                path,
                1,
                format!("expected header `{DENDROGRAM_HEADER}`"),
            ))
        }
    }
    let mut merges = Vec::new();
    for (i, line) in lines {
        let lineno = i as u64 + 1;
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(IoError::parse(
                path,
                lineno,
                format!("expected 5 fields, got {}", f.len()),
            ));
        }
        let id = |s: &str| s.parse::<u64>().map(CentroidId);
        let bad = |what: &str| IoError::parse(path, lineno, format!("bad {what}"));
        merges.push(MergeRecord {
            left_id: id(f[0]).map_err(|_| bad("left_id"))?,
            right_id: id(f[1]).map_err(|_| bad("right_id"))?,
            new_id: id(f[2]).map_err(|_| bad("new_id"))?,
            distance: f[3].parse().map_err(|_| bad("distance"))?,
            new_size: f[4].parse().map_err(|_| bad("size"))?,
        });
    }
    let n = merges.first().map_or(1, |m| m.new_id.index());
    let dend = Dendrogram::from_records(n, merges);
    dend.validate()
        .map_err(|e| IoError::parse(path, 0, e.to_string()))?;
    Ok(dend)
}

/// One label per line; any token works as a label. Blank lines are skipped.
pub fn load_labels(path: &Path) -> Result<Clustering, IoError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| IoError::io(path, e))?;
    let raw: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    Ok(Clustering::from_labels(&raw))
}

pub fn write_labels(labels: &Clustering, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    for l in labels.labels() {
        writeln!(w, "{l}").map_err(|e| IoError::io(path, e))?;
    }
    w.flush().map_err(|e| IoError::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| IoError::io(path, e.into()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| IoError::io(path, e))
}
