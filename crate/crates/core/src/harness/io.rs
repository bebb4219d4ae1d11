use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::HarnessError;
use crate::kacrice::ClusteringFit;
use crate::minimizer::TrajectoryPoint;
use crate::stats::SampleRecord;

pub const RECORD_HEADER: [&str; 7] = [
    "sample_index",
    "e_n",
    "i_n",
    "s_n",
    "identity_residual",
    "root_residual_max",
    "wall_time_s",
];

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_parent(path: &Path) -> Result<(), HarnessError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(io_err(dir)),
        _ => Ok(()),
    }
}

/// Writes a header and rows of numbers.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_records(path: &Path, records: &[SampleRecord]) -> Result<(), HarnessError> {
    write_csv(
        path,
        &RECORD_HEADER,
        records.iter().map(|r| {
            vec![
                r.sample_index.to_string(),
                format_f64(r.e_n),
                format_f64(r.i_n),
                format_f64(r.s_n),
                format_f64(r.identity_residual),
                format_f64(r.root_residual_max),
                format_f64(r.wall_time_s),
            ]
        }),
    )
}

pub fn read_records(path: &Path) -> Result<Vec<SampleRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(RECORD_HEADER.iter().copied()) {
        return Err(HarnessError::Malformed {
            path: path.to_path_buf(),
            row: 0,
            reason: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |reason: String| HarnessError::Malformed {
            path: path.to_path_buf(),
            row: row + 1,
            reason,
        };
        let float = |k: usize| -> Result<f64, HarnessError> {
            rec[k]
                .parse::<f64>()
                .map_err(|e| bad(format!("{}: {e}", RECORD_HEADER[k])))
        };
        let sample_index = rec[0].parse::<u64>().map_err(|e| bad(format!("sample_index: {e}")))?;
        out.push(SampleRecord {
            sample_index,
            e_n: float(1)?,
            i_n: float(2)?,
            s_n: float(3)?,
            identity_residual: float(4)?,
            root_residual_max: float(5)?,
            wall_time_s: float(6)?,
            invariance_residual: None,
            failure: None,
        });
    }
    Ok(out)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), HarnessError> {
    ensure_parent(path)?;
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| HarnessError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_trajectory(path: &Path, trajectory: &[TrajectoryPoint]) -> Result<(), HarnessError> {
    write_csv(
        path,
        &["iteration", "energy", "grad_norm"],
        trajectory
            .iter()
            .map(|t| vec![t.iteration.to_string(), format_f64(t.energy), format_f64(t.grad_norm)]),
    )
}

pub fn write_histogram(path: &Path, bins: &[(f64, f64, usize)]) -> Result<(), HarnessError> {
    write_csv(
        path,
        &["left", "right", "count"],
        bins.iter()
            .map(|(l, r, c)| vec![format_f64(*l), format_f64(*r), c.to_string()]),
    )
}

pub fn write_qq(path: &Path, pairs: &[(f64, f64)]) -> Result<(), HarnessError> {
    write_csv(
        path,
        &["theoretical", "observed"],
        pairs.iter().map(|(t, o)| vec![format_f64(*t), format_f64(*o)]),
    )
}

pub fn write_clustering(path: &Path, fit: &ClusteringFit) -> Result<(), HarnessError> {
    let n2 = (fit.n * fit.n) as f64;
    write_csv(
        path,
        &["d", "n_d2", "gap", "log_gap_over_n2"],
        fit.points.iter().map(|p| {
            vec![
                format_f64(p.d),
                format_f64(p.n_d2),
                format_f64(p.gap),
                format_f64((p.gap / n2).ln()),
            ]
        }),
    )
}
