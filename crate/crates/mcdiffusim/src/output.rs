//! CSV layouts and atomic file output.

use std::fs;
use std::io::Write;
use std::path::Path;

use mcdiff_core::particle::SimResult;

use crate::error::{io_err, Result};
use crate::models::ModelTrace;

/// Write through a sibling temporary file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub(crate) fn csv_bytes(
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(w.into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?)
}

pub(crate) fn num(x: f64) -> String {
    format!("{x}")
}

/// `t_s, rate_<label>..., cum_<label>...`
pub fn solution_csv(trace: &ModelTrace) -> Result<Vec<u8>> {
    let mut header = vec!["t_s".to_owned()];
    header.extend(trace.labels.iter().map(|l| format!("rate_{l}")));
    header.extend(trace.labels.iter().map(|l| format!("cum_{l}")));
    let rows = trace.times.iter().enumerate().map(|(m, &t)| {
        let mut row = vec![num(t)];
        row.extend(trace.rates.iter().map(|r| num(r[m])));
        row.extend(trace.cumulative.iter().map(|c| num(c[m])));
        row
    });
    csv_bytes(&header, rows)
}

/// `t_s, cum_<label>...` with one row per bin edge, starting at t = 0.
pub fn sim_csv(result: &SimResult) -> Result<Vec<u8>> {
    let mut header = vec!["t_s".to_owned()];
    header.extend(result.labels().iter().map(|l| format!("cum_{l}")));
    let cells = result.labels().len();
    let first = std::iter::once({
        let mut row = vec![num(0.0)];
        row.extend((0..cells).map(|_| "0".to_owned()));
        row
    });
    let rest = (0..result.bins()).map(|b| {
        let mut row = vec![num(result.bin_time(b))];
        row.extend((0..cells).map(|k| result.counts(k)[b].to_string()));
        row
    });
    csv_bytes(&header, first.chain(rest))
}

/// `cell,t_s,x_um,y_um,z_um`, sorted by time.
pub fn events_csv(result: &SimResult) -> Result<Vec<u8>> {
    let header: Vec<String> = ["cell", "t_s", "x_um", "y_um", "z_um"]
        .map(String::from)
        .to_vec();
    let rows = result.events().iter().map(|e| {
        vec![
            result.labels()[e.cell].clone(),
            num(e.time),
            num(e.point.x),
            num(e.point.y),
            num(e.point.z),
        ]
    });
    csv_bytes(&header, rows)
}
