//! CSV with a header row: feature columns first, then `label_count` binary
//! label columns. Lines starting with `#` are comments.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use super::MultiLabelDataset;
use crate::{Error, Result};

pub fn load_csv(path: impl AsRef<Path>, label_count: usize) -> Result<MultiLabelDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_count)
}

pub fn read_csv<R: Read>(reader: R, label_count: usize) -> Result<MultiLabelDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let width = header.len();
    if label_count >= width {
        return Err(Error::LabelSpec(format!(
            "label count {label_count} leaves no feature columns among {width}"
        )));
    }
    let d = width - label_count;

    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        // ragged rows surface here as csv::Error
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        for (c, cell) in record.iter().enumerate() {
            if c < d {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::parse(line, format!("`{cell}` in column `{}` is not numeric", header[c]))
                })?;
                feats.push(v);
            } else {
                let v = match cell {
                    "0" => 0u8,
                    "1" => 1u8,
                    _ => {
                        return Err(Error::parse(
                            line,
                            format!("label column `{}` has non-binary value `{cell}`", header[c]),
                        ))
                    }
                };
                labels.push(v);
            }
        }
    }
    let n = feats.len() / d;
    let x = Array2::from_shape_vec((n, d), feats)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    let y = Array2::from_shape_vec((n, label_count), labels)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    MultiLabelDataset::new(x, y, header[..d].to_vec(), header[d..].to_vec())
}

/// Write `ds` as CSV. Features use the shortest round-tripping decimal form.
/// `comment`, if given, is emitted first as `# ...` lines.
pub fn write_csv<W: Write>(ds: &MultiLabelDataset, mut out: W, comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}").map_err(|e| Error::io("<csv output>", e))?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ds.feature_names().iter().chain(ds.label_names()))?;
    for (x, y) in ds.features().rows().into_iter().zip(ds.labels().rows()) {
        let record = x
            .iter()
            .map(|v| v.to_string())
            .chain(y.iter().map(|v| v.to_string()));
        w.write_record(record)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Write a binary label matrix with a header of label names.
pub fn write_label_matrix<W: Write>(
    names: &[String],
    labels: ArrayView2<u8>,
    mut out: W,
    comment: Option<&str>,
) -> Result<()> {
    if names.len() != labels.ncols() {
        return Err(Error::LengthMismatch {
            expected: labels.ncols(),
            actual: names.len(),
        });
    }
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}").map_err(|e| Error::io("<csv output>", e))?;
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(names)?;
    for row in labels.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

/// Inverse of [`write_label_matrix`].
pub fn read_label_matrix<R: Read>(reader: R) -> Result<(Vec<String>, Array2<u8>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        for cell in record.iter() {
            values.push(match cell {
                "0" => 0u8,
                "1" => 1u8,
                _ => return Err(Error::parse(line, format!("non-binary value `{cell}`"))),
            });
        }
    }
    let n = values.len() / names.len().max(1);
    let y = Array2::from_shape_vec((n, names.len()), values)
        .map_err(|e| Error::InvalidDataset(e.to_string()))?;
    Ok((names, y))
}
