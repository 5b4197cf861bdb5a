//! CSV formats for traces and measurement logs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim};

use super::simulate::TraceSet;
use crate::error::{Error, Result};
use crate::filter::MeasurementVector;

const EPOCH: &str = "epoch_s";
const GNSS: &str = "gnss_phase_s";
const TRUTH: &str = "attack_truth_s";

fn clock_column(i: usize) -> String {
    format!("clock{i}_phase_s")
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(Trim::All)
        .flexible(true)
        .from_reader(file))
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: err.to_string(),
    }
}

fn next_header(rows: &mut csv::StringRecordsIter<'_, std::fs::File>) -> Result<StringRecord> {
    match rows.next() {
        Some(r) => r.map_err(csv_error),
        None => Err(Error::Parse {
            line: 1,
            message: "file has no header".into(),
        }),
    }
}

fn column(header: &StringRecord, name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Parse {
            line: line_of(header),
            message: format!("missing column '{name}'"),
        })
}

fn field(record: &StringRecord, idx: usize, name: &str) -> Result<f64> {
    let line = line_of(record);
    let text = record.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing value for column '{name}'"),
    })?;
    let v: f64 = text.parse().map_err(|_| Error::Parse {
        line,
        message: format!("column '{name}': cannot parse '{text}' as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("column '{name}': non-finite value"),
        });
    }
    Ok(v)
}

/// Writes a trace with the header `epoch_s,gnss_phase_s,clock<i>_phase_s...,attack_truth_s`.
///
/// Values use the shortest decimal form that parses back to the same `f64`.
pub fn save_trace_csv(traces: &TraceSet, path: &Path) -> Result<()> {
    traces.validate()?;
    let mut out = String::new();
    out.push_str("# clockwatch trace\n");
    let mut header = vec![EPOCH.to_string(), GNSS.to_string()];
    header.extend((1..=traces.n_local()).map(clock_column));
    header.push(TRUTH.to_string());
    out.push_str(&header.join(","));
    out.push('\n');
    for k in 0..traces.len() {
        let mut row = vec![
            traces.epochs[k].to_string(),
            traces.gnss_phase[k].to_string(),
        ];
        row.extend(traces.local_phases.iter().map(|c| c[k].to_string()));
        row.push(traces.attack_truth[k].to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

/// Reads a trace written by [`save_trace_csv`] or an equivalent tool.
pub fn load_trace_csv(path: &Path) -> Result<TraceSet> {
    let mut rdr = reader(path)?;
    let mut rows = rdr.records();
    let header = next_header(&mut rows)?;
    let epoch_idx = column(&header, EPOCH)?;
    let gnss_idx = column(&header, GNSS)?;
    let truth_idx = column(&header, TRUTH)?;
    let mut clock_idx = Vec::new();
    while let Some(idx) = header
        .iter()
        .position(|h| h == clock_column(clock_idx.len() + 1))
    {
        clock_idx.push(idx);
    }
    if clock_idx.is_empty() {
        return Err(Error::Parse {
            line: line_of(&header),
            message: format!("missing column '{}'", clock_column(1)),
        });
    }
    let extra = header.len() - 3 - clock_idx.len();
    if extra != 0 {
        let known: Vec<usize> = [epoch_idx, gnss_idx, truth_idx]
            .into_iter()
            .chain(clock_idx.iter().copied())
            .collect();
        let unknown = header
            .iter()
            .enumerate()
            .find(|(i, _)| !known.contains(i))
            .map(|(_, h)| h.to_string())
            .unwrap_or_default();
        return Err(Error::Parse {
            line: line_of(&header),
            message: format!("unexpected column '{unknown}'"),
        });
    }

    let mut tr = TraceSet {
        epochs: Vec::new(),
        gnss_phase: Vec::new(),
        local_phases: vec![Vec::new(); clock_idx.len()],
        attack_truth: Vec::new(),
    };
    for row in rows {
        let row = row.map_err(csv_error)?;
        if row.len() != header.len() {
            return Err(Error::Parse {
                line: line_of(&row),
                message: format!("expected {} fields, found {}", header.len(), row.len()),
            });
        }
        let t = field(&row, epoch_idx, EPOCH)?;
        if let Some(&prev) = tr.epochs.last() {
            if t <= prev {
                return Err(Error::InvalidData {
                    line: line_of(&row),
                    message: format!("epoch {t} does not increase after {prev}"),
                });
            }
        }
        tr.epochs.push(t);
        tr.gnss_phase.push(field(&row, gnss_idx, GNSS)?);
        for (c, &idx) in clock_idx.iter().enumerate() {
            tr.local_phases[c].push(field(&row, idx, &clock_column(c + 1))?);
        }
        tr.attack_truth.push(field(&row, truth_idx, TRUTH)?);
    }
    if tr.is_empty() {
        return Err(Error::Parse {
            line: line_of(&header),
            message: "trace has no data rows".into(),
        });
    }
    Ok(tr)
}

/// Phase differences grouped by epoch; `None` where an epoch lacks a clock.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLog {
    pub epochs: Vec<f64>,
    pub n_local: usize,
    pub measurements: Vec<Option<MeasurementVector>>,
}

/// Writes `epoch_s,clock_id,phase_diff_s` rows, clocks numbered from 1.
pub fn save_measurement_csv(
    epochs: &[f64],
    measurements: &[MeasurementVector],
    path: &Path,
) -> Result<()> {
    if epochs.len() != measurements.len() {
        return Err(Error::invalid("epochs and measurements differ in length"));
    }
    let mut out = String::from("epoch_s,clock_id,phase_diff_s\n");
    for (t, z) in epochs.iter().zip(measurements) {
        for (i, v) in z.z.iter().enumerate() {
            out.push_str(&format!("{t},{},{v}\n", i + 1));
        }
    }
    write_file(path, out.as_bytes())
}

/// Reads a measurement log with header `epoch_s,clock_id,phase_diff_s`.
pub fn load_measurement_csv(path: &Path) -> Result<MeasurementLog> {
    let mut rdr = reader(path)?;
    let mut rows = rdr.records();
    let header = next_header(&mut rows)?;
    let epoch_idx = column(&header, EPOCH)?;
    let id_idx = column(&header, "clock_id")?;
    let diff_idx = column(&header, "phase_diff_s")?;

    let mut grouped: Vec<(f64, BTreeMap<usize, f64>)> = Vec::new();
    for row in rows {
        let row = row.map_err(csv_error)?;
        let line = line_of(&row);
        let t = field(&row, epoch_idx, EPOCH)?;
        let id_text = row.get(id_idx).unwrap_or("");
        let id: usize = id_text.parse().map_err(|_| Error::Parse {
            line,
            message: format!("column 'clock_id': cannot parse '{id_text}' as a clock number"),
        })?;
        if id == 0 {
            return Err(Error::InvalidData {
                line,
                message: "clock_id numbering starts at 1".into(),
            });
        }
        let v = field(&row, diff_idx, "phase_diff_s")?;
        match grouped.last_mut() {
            Some((prev, map)) if *prev == t => {
                if map.insert(id, v).is_some() {
                    return Err(Error::InvalidData {
                        line,
                        message: format!("duplicate clock {id} at epoch {t}"),
                    });
                }
            }
            Some((prev, _)) if t < *prev => {
                return Err(Error::InvalidData {
                    line,
                    message: format!("epoch {t} goes backwards after {prev}"),
                });
            }
            _ => grouped.push((t, BTreeMap::from([(id, v)]))),
        }
    }
    let n_local = grouped
        .iter()
        .filter_map(|(_, m)| m.keys().next_back().copied())
        .max()
        .ok_or_else(|| Error::Parse {
            line: line_of(&header),
            message: "measurement log has no data rows".into(),
        })?;
    let epochs = grouped.iter().map(|(t, _)| *t).collect();
    let measurements = grouped
        .iter()
        .map(|(_, m)| {
            (1..=n_local)
                .map(|i| m.get(&i).copied())
                .collect::<Option<Vec<f64>>>()
                .map(MeasurementVector::new)
        })
        .collect();
    Ok(MeasurementLog {
        epochs,
        n_local,
        measurements,
    })
}
